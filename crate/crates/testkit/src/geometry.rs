//! Brute-force 2D geometry predicates.

/// Whether the segment p0→p1 meets the axis-aligned rectangle
/// `[min, max]`. With `closed = false` only the open interior counts, so a
/// segment that merely grazes an edge or corner does not intersect.
pub fn segment_meets_rect(p0: [f64; 2], p1: [f64; 2], min: [f64; 2], max: [f64; 2], closed: bool) -> bool {
    // Liang–Barsky clip of the parameter interval.
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for axis in 0..2 {
        let d = p1[axis] - p0[axis];
        if d == 0.0 {
            let inside = if closed {
                p0[axis] >= min[axis] && p0[axis] <= max[axis]
            } else {
                p0[axis] > min[axis] && p0[axis] < max[axis]
            };
            if !inside {
                return false;
            }
            continue;
        }
        let mut ta = (min[axis] - p0[axis]) / d;
        let mut tb = (max[axis] - p0[axis]) / d;
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
    }
    if closed {
        t0 <= t1
    } else {
        t0 < t1
    }
}

/// Whether point `q` lies inside a rectangle of half extents `half` centred
/// at `center` and rotated by `yaw`.
pub fn point_in_oriented_rect(q: [f64; 2], center: [f64; 2], half: [f64; 2], yaw: f64) -> bool {
    let (s, c) = yaw.sin_cos();
    let dx = q[0] - center[0];
    let dy = q[1] - center[1];
    let lx = c * dx + s * dy;
    let ly = -s * dx + c * dy;
    lx.abs() <= half[0] && ly.abs() <= half[1]
}
