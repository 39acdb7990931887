//! Forward pass and reverse-mode gradients.

use rayon::prelude::*;

use super::{Model, Real, KERNEL};
use crate::error::{Error, Result};
use crate::evidential::EvidencePair;
use crate::grid::{EvidentialGrid, GroundTruthGrid};
use crate::loss::{evaluate, LossConfig, LossParts};
use crate::pointcloud::{PillarSet, FEATURE_DIM};

// Activations kept for the backward pass.
struct Trace<T> {
    /// Max-pooled encoder output per pillar, `[pillars × P]`.
    pooled: Vec<T>,
    /// Slot that produced each pooled value (first one on ties).
    argmax: Vec<u32>,
    /// Scattered canvas followed by each conv output, channel-major planes.
    maps: Vec<Vec<T>>,
    /// Pass-through mask of each conv ReLU.
    gates: Vec<Vec<bool>>,
    /// Head output `[2 × cells]` after ReLU.
    evidence: Vec<T>,
    head_gate: Vec<bool>,
}

impl<T: Real> Model<T> {
    /// Evidence grid for an encoded cloud.
    pub fn forward(&self, pillars: &PillarSet) -> Result<EvidentialGrid> {
        let trace = self.trace(pillars)?;
        let cells = trace.evidence.len() / 2;
        let (free, occ) = trace.evidence.split_at(cells);
        let cells = free
            .iter()
            .zip(occ)
            .map(|(f, o)| EvidencePair::new(f.as_f64(), o.as_f64()))
            .collect();
        EvidentialGrid::from_cells(self.config.grid, cells)
    }

    /// Loss of the prediction against `truth` and its gradient with respect
    /// to every parameter, in layout order. `epoch` is zero-based.
    pub fn loss_and_gradient(
        &self,
        pillars: &PillarSet,
        truth: &GroundTruthGrid,
        epoch: usize,
        cfg: &LossConfig,
    ) -> Result<(LossParts, Vec<T>)> {
        cfg.validate()?;
        self.loss_and_gradient_at(pillars, truth, cfg.lambda(epoch), cfg)
    }

    pub(crate) fn loss_and_gradient_at(
        &self,
        pillars: &PillarSet,
        truth: &GroundTruthGrid,
        lambda: f64,
        cfg: &LossConfig,
    ) -> Result<(LossParts, Vec<T>)> {
        if truth.spec() != &self.config.grid {
            return Err(Error::Config(format!(
                "label grid {:?} does not match model grid {:?}",
                truth.spec(),
                self.config.grid
            )));
        }
        let trace = self.trace(pillars)?;
        let n = self.config.grid.num_cells();
        let ev: Vec<[f64; 2]> = (0..n)
            .map(|i| [trace.evidence[i].as_f64(), trace.evidence[n + i].as_f64()])
            .collect();
        let (parts, grad) = evaluate(&ev, truth.cells(), lambda, cfg, true)?;
        let grad = grad.expect("requested");
        let mut g_out = vec![T::zero(); 2 * n];
        for (i, g) in grad.iter().enumerate() {
            g_out[i] = T::cast_from(g[0]);
            g_out[n + i] = T::cast_from(g[1]);
        }
        let grads = self.backward(pillars, &trace, g_out);
        Ok((parts, grads))
    }

    fn check_pillars(&self, pillars: &PillarSet) -> Result<()> {
        if pillars.spec() != &self.config.grid {
            return Err(Error::Config(format!(
                "pillars were built for grid {:?}, model expects {:?}",
                pillars.spec(),
                self.config.grid
            )));
        }
        Ok(())
    }

    fn trace(&self, pillars: &PillarSet) -> Result<Trace<T>> {
        self.check_pillars(pillars)?;
        let layout = self.config.layout();
        let spec = self.config.grid;
        let (h, w) = (spec.rows(), spec.cols());
        let hw = h * w;
        let p_dim = self.config.pillar_feature_dim;

        // Point encoder with max pooling.
        let we = &self.params[self.block(&layout, "encoder.weight")];
        let be = &self.params[self.block(&layout, "encoder.bias")];
        let np = pillars.num_pillars();
        let mut pooled = vec![T::zero(); np * p_dim];
        let mut argmax = vec![0u32; np * p_dim];
        let mut x = [T::zero(); FEATURE_DIM];
        for p in 0..np {
            for k in 0..p_dim {
                let mut best = T::neg_infinity();
                let mut arg = 0;
                for s in 0..pillars.count(p) {
                    for (dst, &v) in x.iter_mut().zip(pillars.point(p, s)) {
                        *dst = T::cast_from(v as f64);
                    }
                    let mut z = be[k];
                    for j in 0..FEATURE_DIM {
                        z += we[k * FEATURE_DIM + j] * x[j];
                    }
                    let a = z.max(T::zero());
                    if a > best {
                        best = a;
                        arg = s as u32;
                    }
                }
                pooled[p * p_dim + k] = best;
                argmax[p * p_dim + k] = arg;
            }
        }

        let mut canvas = vec![T::zero(); p_dim * hw];
        for (p, &(r, c)) in pillars.cells().iter().enumerate() {
            let cell = r as usize * w + c as usize;
            for k in 0..p_dim {
                canvas[k * hw + cell] = pooled[p * p_dim + k];
            }
        }

        let mut maps = vec![canvas];
        let mut gates = Vec::new();
        let mut c_in = p_dim;
        for (l, &c_out) in self.config.conv_channels.iter().enumerate() {
            let wk = &self.params[self.block(&layout, &format!("conv{l}.weight"))];
            let bk = &self.params[self.block(&layout, &format!("conv{l}.bias"))];
            let (out, gate) = conv3x3(maps.last().expect("canvas"), c_in, c_out, h, w, wk, bk);
            maps.push(out);
            gates.push(gate);
            c_in = c_out;
        }

        let wh = &self.params[self.block(&layout, "head.weight")];
        let bh = &self.params[self.block(&layout, "head.bias")];
        let last = maps.last().expect("canvas");
        let mut evidence = vec![T::zero(); 2 * hw];
        for (o, plane) in evidence.chunks_mut(hw).enumerate() {
            plane.fill(bh[o]);
            for c in 0..c_in {
                let wv = wh[o * c_in + c];
                for (dst, &a) in plane.iter_mut().zip(&last[c * hw..(c + 1) * hw]) {
                    *dst += wv * a;
                }
            }
        }
        let head_gate = relu(&mut evidence);

        Ok(Trace {
            pooled,
            argmax,
            maps,
            gates,
            evidence,
            head_gate,
        })
    }

    fn backward(&self, pillars: &PillarSet, trace: &Trace<T>, mut g_ev: Vec<T>) -> Vec<T> {
        let layout = self.config.layout();
        let spec = self.config.grid;
        let (h, w) = (spec.rows(), spec.cols());
        let hw = h * w;
        let p_dim = self.config.pillar_feature_dim;
        let mut grads = vec![T::zero(); self.params.len()];

        // Head: ReLU then 1×1 convolution.
        gate(&mut g_ev, &trace.head_gate);
        let c_last = *self.config.conv_channels.last().unwrap_or(&p_dim);
        let last = trace.maps.last().expect("canvas");
        let wh_range = self.block(&layout, "head.weight");
        let bh_range = self.block(&layout, "head.bias");
        let wh = &self.params[wh_range.clone()];
        let mut g_map = vec![T::zero(); c_last * hw];
        for o in 0..2 {
            let g_plane = &g_ev[o * hw..(o + 1) * hw];
            grads[bh_range.start + o] = sum(g_plane);
            for c in 0..c_last {
                grads[wh_range.start + o * c_last + c] = dot(g_plane, &last[c * hw..(c + 1) * hw]);
                let wv = wh[o * c_last + c];
                for (dst, &g) in g_map[c * hw..(c + 1) * hw].iter_mut().zip(g_plane) {
                    *dst += wv * g;
                }
            }
        }

        // Convolutions, last to first.
        for l in (0..self.config.conv_channels.len()).rev() {
            let c_out = self.config.conv_channels[l];
            let c_in = if l == 0 { p_dim } else { self.config.conv_channels[l - 1] };
            gate(&mut g_map, &trace.gates[l]);
            let wr = self.block(&layout, &format!("conv{l}.weight"));
            let br = self.block(&layout, &format!("conv{l}.bias"));
            let input = &trace.maps[l];
            let (g_w, g_b, g_in) = conv3x3_backward(input, &g_map, c_in, c_out, h, w, &self.params[wr.clone()]);
            grads[wr].copy_from_slice(&g_w);
            grads[br].copy_from_slice(&g_b);
            g_map = g_in;
        }

        // Scatter and encoder.
        let we_range = self.block(&layout, "encoder.weight");
        let be_range = self.block(&layout, "encoder.bias");
        for (p, &(r, c)) in pillars.cells().iter().enumerate() {
            let cell = r as usize * w + c as usize;
            for k in 0..p_dim {
                let i = p * p_dim + k;
                if trace.pooled[i] <= T::zero() {
                    continue;
                }
                let g = g_map[k * hw + cell];
                let x = pillars.point(p, trace.argmax[i] as usize);
                grads[be_range.start + k] += g;
                for j in 0..FEATURE_DIM {
                    grads[we_range.start + k * FEATURE_DIM + j] += g * T::cast_from(x[j] as f64);
                }
            }
        }
        grads
    }
}

// ReLU in place. The returned mask is true where the pre-activation is
// nonnegative, so the backward pass uses a unit slope at zero: cells whose
// whole neighbourhood is empty sit exactly at zero and still pass gradient
// to the biases.
fn relu<T: Real>(v: &mut [T]) -> Vec<bool> {
    v.iter_mut()
        .map(|x| {
            let on = *x >= T::zero();
            *x = x.max(T::zero());
            on
        })
        .collect()
}

fn gate<T: Real>(g: &mut [T], mask: &[bool]) {
    for (g, &on) in g.iter_mut().zip(mask) {
        if !on {
            *g = T::zero();
        }
    }
}

fn sum<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

// Column range of output pixels whose input at offset `d` is in bounds.
fn span(d: isize, n: usize) -> std::ops::Range<usize> {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d).min(n as isize).max(0) as usize;
    lo..hi.max(lo)
}

/// Same-padded 3×3 convolution followed by ReLU, with the ReLU mask. Planes
/// are `[C × h × w]`; weights `[c_out × c_in × 3 × 3]`.
fn conv3x3<T: Real>(
    input: &[T],
    c_in: usize,
    c_out: usize,
    h: usize,
    w: usize,
    wk: &[T],
    bk: &[T],
) -> (Vec<T>, Vec<bool>) {
    let hw = h * w;
    let mut out = vec![T::zero(); c_out * hw];
    out.par_chunks_mut(hw).enumerate().for_each(|(o, plane)| {
        plane.fill(bk[o]);
        for i in 0..c_in {
            let src = &input[i * hw..(i + 1) * hw];
            for ky in 0..KERNEL {
                let dy = ky as isize - 1;
                for kx in 0..KERNEL {
                    let dx = kx as isize - 1;
                    let wv = wk[((o * c_in + i) * KERNEL + ky) * KERNEL + kx];
                    let xs = span(dx, w);
                    for y in span(dy, h) {
                        let sy = (y as isize + dy) as usize;
                        let dst = &mut plane[y * w + xs.start..y * w + xs.end];
                        let s0 = (sy * w) as isize + xs.start as isize + dx;
                        let s = &src[s0 as usize..s0 as usize + xs.len()];
                        for (d, &v) in dst.iter_mut().zip(s) {
                            *d += wv * v;
                        }
                    }
                }
            }
        }
    });
    let mask = relu(&mut out);
    (out, mask)
}

/// Gradients of [`conv3x3`] given the gradient at its pre-activation.
/// Returns (weights, biases, input).
fn conv3x3_backward<T: Real>(
    input: &[T],
    g_out: &[T],
    c_in: usize,
    c_out: usize,
    h: usize,
    w: usize,
    wk: &[T],
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let hw = h * w;
    let kk = KERNEL * KERNEL;

    let mut g_w = vec![T::zero(); c_out * c_in * kk];
    g_w.par_chunks_mut(c_in * kk).enumerate().for_each(|(o, gw_o)| {
        let g = &g_out[o * hw..(o + 1) * hw];
        for i in 0..c_in {
            let src = &input[i * hw..(i + 1) * hw];
            for ky in 0..KERNEL {
                let dy = ky as isize - 1;
                for kx in 0..KERNEL {
                    let dx = kx as isize - 1;
                    let xs = span(dx, w);
                    let mut acc = T::zero();
                    for y in span(dy, h) {
                        let sy = (y as isize + dy) as usize;
                        let s0 = ((sy * w) as isize + xs.start as isize + dx) as usize;
                        acc += dot(&g[y * w + xs.start..y * w + xs.end], &src[s0..s0 + xs.len()]);
                    }
                    gw_o[i * kk + ky * KERNEL + kx] = acc;
                }
            }
        }
    });

    let g_b: Vec<T> = (0..c_out).map(|o| sum(&g_out[o * hw..(o + 1) * hw])).collect();

    let mut g_in = vec![T::zero(); c_in * hw];
    g_in.par_chunks_mut(hw).enumerate().for_each(|(i, dst_plane)| {
        for o in 0..c_out {
            let g = &g_out[o * hw..(o + 1) * hw];
            for ky in 0..KERNEL {
                let dy = ky as isize - 1;
                for kx in 0..KERNEL {
                    let dx = kx as isize - 1;
                    let wv = wk[((o * c_in + i) * KERNEL + ky) * KERNEL + kx];
                    let xs = span(dx, w);
                    for y in span(dy, h) {
                        let sy = (y as isize + dy) as usize;
                        let d0 = ((sy * w) as isize + xs.start as isize + dx) as usize;
                        let dst = &mut dst_plane[d0..d0 + xs.len()];
                        for (d, &gv) in dst.iter_mut().zip(&g[y * w + xs.start..y * w + xs.end]) {
                            *d += wv * gv;
                        }
                    }
                }
            }
        }
    });
    (g_w, g_b, g_in)
}
