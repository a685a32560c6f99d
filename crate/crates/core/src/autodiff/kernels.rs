//! Raw convolution and pooling loops. Work is split over channels so every
//! output element is produced by exactly one task with a fixed summation
//! order, which keeps results bit-identical regardless of thread count.

use rayon::prelude::*;

use crate::tensor::Real;

/// Valid range of output coordinates for a tap offset `d` on an axis of
/// length `n`: positions `i` with `0 <= i + d < n`.
#[inline]
fn span(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d).clamp(0, n as isize) as usize;
    if lo >= hi {
        (0, 0)
    } else {
        (lo, hi)
    }
}

#[allow(clippy::too_many_arguments)]
pub(super) fn conv2d_forward<T: Real>(
    input: &[T],
    kernels: &[T],
    bias: &[T],
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    k: usize,
) -> Vec<T> {
    let pad = (k / 2) as isize;
    let mut out = vec![T::zero(); o * h * w];
    out.par_chunks_mut(h * w).enumerate().for_each(|(oc, plane)| {
        plane.fill(bias[oc]);
        for ic in 0..c {
            let src = &input[ic * h * w..(ic + 1) * h * w];
            let kern = &kernels[(oc * c + ic) * k * k..(oc * c + ic + 1) * k * k];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = span(h, dy);
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let (x0, x1) = span(w, dx);
                    if x0 == x1 || y0 == y1 {
                        continue;
                    }
                    let wt = kern[ky * k + kx];
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let dst = &mut plane[y * w + x0..y * w + x1];
                        let s0 = (x0 as isize + dx) as usize;
                        let s = &src[sy * w + s0..sy * w + s0 + (x1 - x0)];
                        for (d, &v) in dst.iter_mut().zip(s) {
                            *d = *d + wt * v;
                        }
                    }
                }
            }
        }
    });
    out
}

pub(super) fn conv2d_grad_input<T: Real>(
    grad_out: &[T],
    kernels: &[T],
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    k: usize,
) -> Vec<T> {
    let pad = (k / 2) as isize;
    let mut gi = vec![T::zero(); c * h * w];
    gi.par_chunks_mut(h * w).enumerate().for_each(|(ic, plane)| {
        for oc in 0..o {
            let g = &grad_out[oc * h * w..(oc + 1) * h * w];
            let kern = &kernels[(oc * c + ic) * k * k..(oc * c + ic + 1) * k * k];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = span(h, dy);
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let (x0, x1) = span(w, dx);
                    if x0 == x1 || y0 == y1 {
                        continue;
                    }
                    let wt = kern[ky * k + kx];
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let s0 = (x0 as isize + dx) as usize;
                        let dst = &mut plane[sy * w + s0..sy * w + s0 + (x1 - x0)];
                        let src = &g[y * w + x0..y * w + x1];
                        for (d, &v) in dst.iter_mut().zip(src) {
                            *d = *d + wt * v;
                        }
                    }
                }
            }
        }
    });
    gi
}

pub(super) fn conv2d_grad_kernels<T: Real>(
    grad_out: &[T],
    input: &[T],
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    k: usize,
) -> Vec<T> {
    let pad = (k / 2) as isize;
    let mut gk = vec![T::zero(); o * c * k * k];
    gk.par_chunks_mut(c * k * k).enumerate().for_each(|(oc, block)| {
        let g = &grad_out[oc * h * w..(oc + 1) * h * w];
        for ic in 0..c {
            let src = &input[ic * h * w..(ic + 1) * h * w];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = span(h, dy);
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let (x0, x1) = span(w, dx);
                    if x0 == x1 || y0 == y1 {
                        continue;
                    }
                    let mut acc = T::zero();
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let s0 = (x0 as isize + dx) as usize;
                        let s = &src[sy * w + s0..sy * w + s0 + (x1 - x0)];
                        let gr = &g[y * w + x0..y * w + x1];
                        for (&a, &b) in gr.iter().zip(s) {
                            acc = acc + a * b;
                        }
                    }
                    block[(ic * k + ky) * k + kx] = acc;
                }
            }
        }
    });
    gk
}

/// Returns pooled values and, per output cell, the flat input index that won.
pub(super) fn maxpool_forward<T: Real>(input: &[T], c: usize, h: usize, w: usize) -> (Vec<T>, Vec<usize>) {
    let (ho, wo) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * ho * wo);
    let mut argmax = Vec::with_capacity(c * ho * wo);
    for ch in 0..c {
        let base = ch * h * w;
        for y in 0..ho {
            for x in 0..wo {
                let candidates = [
                    base + 2 * y * w + 2 * x,
                    base + 2 * y * w + 2 * x + 1,
                    base + (2 * y + 1) * w + 2 * x,
                    base + (2 * y + 1) * w + 2 * x + 1,
                ];
                let mut best = candidates[0];
                for &idx in &candidates[1..] {
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                out.push(input[best]);
                argmax.push(best);
            }
        }
    }
    (out, argmax)
}
