//! Supercover traversal of the grid along a segment.

use super::GridSpec;

/// Cells whose interior the segment `from → to` crosses, ordered from
/// `from`, with the destination cell left out.
///
/// Where the segment passes exactly through a cell corner both cells
/// sharing that corner are reported, so carved free space cannot slip
/// diagonally between two cells. A segment that starts and ends in the same
/// cell (including a zero-length one) yields just that cell. Parts of the
/// segment outside the grid are skipped.
pub fn raytrace_cells(spec: &GridSpec, from: [f64; 2], to: [f64; 2]) -> Vec<(usize, usize)> {
    let a = spec.to_lattice(from[0], from[1]);
    let b = spec.to_lattice(to[0], to[1]);
    if !(a.iter().chain(b.iter()).all(|v| v.is_finite())) {
        return Vec::new();
    }
    let d = [b[0] - a[0], b[1] - a[1]];
    let bounds = [spec.rows() as f64, spec.cols() as f64];

    let Some((t0, t1)) = clip(a, d, bounds) else {
        return Vec::new();
    };
    let at = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];
    let limit = [spec.rows() as i64 - 1, spec.cols() as i64 - 1];
    let start = entry_cell(at(t0), d, limit);
    let last = exit_cell(at(t1), d, limit);
    let destination = exit_cell_unclamped(b, d);

    let step = [d[0].signum() as i64, d[1].signum() as i64];
    let delta = [1.0 / d[0].abs(), 1.0 / d[1].abs()];
    let mut cell = [start.0, start.1];
    // Parameter at which the segment crosses the next boundary on each axis.
    let mut t_max = [0.0; 2];
    for axis in 0..2 {
        t_max[axis] = if d[axis] > 0.0 {
            ((cell[axis] + 1) as f64 - a[axis]) / d[axis]
        } else if d[axis] < 0.0 {
            (a[axis] - cell[axis] as f64) / -d[axis]
        } else {
            f64::INFINITY
        };
    }

    let mut out = Vec::new();
    let push = |c: [i64; 2], out: &mut Vec<(usize, usize)>| {
        if c[0] >= 0 && c[1] >= 0 && c[0] <= limit[0] && c[1] <= limit[1] {
            out.push((c[0] as usize, c[1] as usize));
        }
    };
    let max_steps = 2 * (spec.rows() + spec.cols()) + 4;
    for _ in 0..max_steps {
        push(cell, &mut out);
        if cell == [last.0, last.1] {
            break;
        }
        let need = [cell[0] != last.0 && step[0] != 0, cell[1] != last.1 && step[1] != 0];
        if need[0] && (!need[1] || t_max[0] < t_max[1]) {
            cell[0] += step[0];
            t_max[0] += delta[0];
        } else if need[1] && (!need[0] || t_max[1] < t_max[0]) {
            cell[1] += step[1];
            t_max[1] += delta[1];
        } else if need[0] && need[1] {
            // Exact corner crossing.
            push([cell[0] + step[0], cell[1]], &mut out);
            push([cell[0], cell[1] + step[1]], &mut out);
            cell[0] += step[0];
            cell[1] += step[1];
            t_max[0] += delta[0];
            t_max[1] += delta[1];
        } else {
            break;
        }
    }

    if out.len() > 1 {
        if let Some(&(r, c)) = out.last() {
            if [r as i64, c as i64] == destination {
                out.pop();
            }
        }
    }
    out
}

// Liang–Barsky clip of a + t·d, t ∈ [0, 1], to [0, bounds] (closed).
fn clip(a: [f64; 2], d: [f64; 2], bounds: [f64; 2]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for axis in 0..2 {
        if d[axis] == 0.0 {
            if a[axis] < 0.0 || a[axis] > bounds[axis] {
                return None;
            }
            continue;
        }
        let mut lo = (0.0 - a[axis]) / d[axis];
        let mut hi = (bounds[axis] - a[axis]) / d[axis];
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
    }
    (t0 <= t1).then_some((t0, t1))
}

// Cell the segment moves into from point p: on a boundary, the side the
// direction points to.
fn entry_cell(p: [f64; 2], d: [f64; 2], limit: [i64; 2]) -> (i64, i64) {
    let pick = |axis: usize| {
        let f = p[axis].floor();
        let mut i = f as i64;
        if p[axis] == f && d[axis] < 0.0 {
            i -= 1;
        }
        i.clamp(0, limit[axis])
    };
    (pick(0), pick(1))
}

// Cell the segment arrives in at point p: on a boundary, the side it comes
// from.
fn exit_cell_unclamped(p: [f64; 2], d: [f64; 2]) -> [i64; 2] {
    let pick = |axis: usize| {
        let f = p[axis].floor();
        let mut i = f as i64;
        if p[axis] == f && d[axis] > 0.0 {
            i -= 1;
        }
        i
    };
    [pick(0), pick(1)]
}

fn exit_cell(p: [f64; 2], d: [f64; 2], limit: [i64; 2]) -> (i64, i64) {
    let [i, j] = exit_cell_unclamped(p, d);
    (i.clamp(0, limit[0]), j.clamp(0, limit[1]))
}
