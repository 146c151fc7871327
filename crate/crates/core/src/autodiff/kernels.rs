//! Direct-loop numeric kernels behind the tape operations.
//!
//! Weight-gradient reductions over the batch axis always form one partial sum
//! per sample and accumulate the partials in sample order. A batched gradient
//! therefore equals, bit for bit, the ordered sum of single-sample gradients.

/// Geometry of a 1-D convolution or its transpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub n: usize,
    pub cin: usize,
    pub cout: usize,
    pub l_in: usize,
    pub l_out: usize,
    pub k: usize,
    pub stride: usize,
    pub padding: usize,
}

/// Range of `t` in `[0, l_dst)` with `0 <= t*stride + kk - padding < l_src`.
#[inline]
fn valid_range(kk: usize, stride: usize, padding: usize, l_src: usize, l_dst: usize) -> (usize, usize) {
    let lo = if padding > kk { (padding - kk).div_ceil(stride) } else { 0 };
    let hi = if l_src + padding <= kk { 0 } else { (l_src - 1 + padding - kk) / stride + 1 };
    (lo, hi.min(l_dst))
}

pub(crate) fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// `g · bᵀ` for `g: [m×n]`, `b: [k×n]`.
pub(crate) fn matmul_grad_a(g: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * k];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let brow = &b[p * n..(p + 1) * n];
            out[i * k + p] = grow.iter().zip(brow).fold(0.0, |acc, (x, y)| acc + x * y);
        }
    }
    out
}

/// `aᵀ · g` for `a: [m×k]`, `g: [m×n]`, reduced over rows in order.
pub(crate) fn matmul_grad_b(a: &[f64], g: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * n];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, &gv) in orow.iter_mut().zip(grow) {
                *o += av * gv;
            }
        }
    }
    out
}

pub(crate) fn conv1d(x: &[f64], w: &[f64], bias: Option<&[f64]>, g: &ConvGeom) -> Vec<f64> {
    let mut out = vec![0.0; g.n * g.cout * g.l_out];
    for n in 0..g.n {
        for co in 0..g.cout {
            let o = &mut out[(n * g.cout + co) * g.l_out..(n * g.cout + co + 1) * g.l_out];
            if let Some(b) = bias {
                o.fill(b[co]);
            }
            for ci in 0..g.cin {
                let xi = &x[(n * g.cin + ci) * g.l_in..(n * g.cin + ci + 1) * g.l_in];
                for kk in 0..g.k {
                    let wv = w[(co * g.cin + ci) * g.k + kk];
                    let (lo, hi) = valid_range(kk, g.stride, g.padding, g.l_in, g.l_out);
                    for t in lo..hi {
                        o[t] += wv * xi[t * g.stride + kk - g.padding];
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn conv1d_grad_input(gout: &[f64], w: &[f64], g: &ConvGeom) -> Vec<f64> {
    let mut gx = vec![0.0; g.n * g.cin * g.l_in];
    for n in 0..g.n {
        for ci in 0..g.cin {
            let gxi = &mut gx[(n * g.cin + ci) * g.l_in..(n * g.cin + ci + 1) * g.l_in];
            for co in 0..g.cout {
                let go = &gout[(n * g.cout + co) * g.l_out..(n * g.cout + co + 1) * g.l_out];
                for kk in 0..g.k {
                    let wv = w[(co * g.cin + ci) * g.k + kk];
                    let (lo, hi) = valid_range(kk, g.stride, g.padding, g.l_in, g.l_out);
                    for t in lo..hi {
                        gxi[t * g.stride + kk - g.padding] += wv * go[t];
                    }
                }
            }
        }
    }
    gx
}

pub(crate) fn conv1d_grad_kernel(gout: &[f64], x: &[f64], g: &ConvGeom) -> Vec<f64> {
    let mut gw = vec![0.0; g.cout * g.cin * g.k];
    for n in 0..g.n {
        for co in 0..g.cout {
            let go = &gout[(n * g.cout + co) * g.l_out..(n * g.cout + co + 1) * g.l_out];
            for ci in 0..g.cin {
                let xi = &x[(n * g.cin + ci) * g.l_in..(n * g.cin + ci + 1) * g.l_in];
                for kk in 0..g.k {
                    let (lo, hi) = valid_range(kk, g.stride, g.padding, g.l_in, g.l_out);
                    let mut acc = 0.0;
                    for t in lo..hi {
                        acc += go[t] * xi[t * g.stride + kk - g.padding];
                    }
                    gw[(co * g.cin + ci) * g.k + kk] += acc;
                }
            }
        }
    }
    gw
}

/// Bias gradient for `[N × C × L]` upstream values.
pub(crate) fn channel_bias_grad(gout: &[f64], n: usize, c: usize, l: usize) -> Vec<f64> {
    let mut gb = vec![0.0; c];
    for s in 0..n {
        for (ch, slot) in gb.iter_mut().enumerate() {
            let go = &gout[(s * c + ch) * l..(s * c + ch + 1) * l];
            *slot += go.iter().fold(0.0, |acc, v| acc + v);
        }
    }
    gb
}

/// Transposed convolution. Here `g.l_in` is the input length and `g.l_out`
/// the (already computed) output length; the kernel layout is `[cin, cout, k]`.
pub(crate) fn conv_transpose1d(x: &[f64], w: &[f64], bias: Option<&[f64]>, g: &ConvGeom) -> Vec<f64> {
    let mut out = vec![0.0; g.n * g.cout * g.l_out];
    for n in 0..g.n {
        for co in 0..g.cout {
            let o = &mut out[(n * g.cout + co) * g.l_out..(n * g.cout + co + 1) * g.l_out];
            if let Some(b) = bias {
                o.fill(b[co]);
            }
            for ci in 0..g.cin {
                let xi = &x[(n * g.cin + ci) * g.l_in..(n * g.cin + ci + 1) * g.l_in];
                for kk in 0..g.k {
                    let wv = w[(ci * g.cout + co) * g.k + kk];
                    let (lo, hi) = valid_range(kk, g.stride, g.padding, g.l_out, g.l_in);
                    for t in lo..hi {
                        o[t * g.stride + kk - g.padding] += wv * xi[t];
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn conv_transpose1d_grad_input(gout: &[f64], w: &[f64], g: &ConvGeom) -> Vec<f64> {
    let mut gx = vec![0.0; g.n * g.cin * g.l_in];
    for n in 0..g.n {
        for ci in 0..g.cin {
            let gxi = &mut gx[(n * g.cin + ci) * g.l_in..(n * g.cin + ci + 1) * g.l_in];
            for co in 0..g.cout {
                let go = &gout[(n * g.cout + co) * g.l_out..(n * g.cout + co + 1) * g.l_out];
                for kk in 0..g.k {
                    let wv = w[(ci * g.cout + co) * g.k + kk];
                    let (lo, hi) = valid_range(kk, g.stride, g.padding, g.l_out, g.l_in);
                    for t in lo..hi {
                        gxi[t] += wv * go[t * g.stride + kk - g.padding];
                    }
                }
            }
        }
    }
    gx
}

pub(crate) fn conv_transpose1d_grad_kernel(gout: &[f64], x: &[f64], g: &ConvGeom) -> Vec<f64> {
    let mut gw = vec![0.0; g.cin * g.cout * g.k];
    for n in 0..g.n {
        for ci in 0..g.cin {
            let xi = &x[(n * g.cin + ci) * g.l_in..(n * g.cin + ci + 1) * g.l_in];
            for co in 0..g.cout {
                let go = &gout[(n * g.cout + co) * g.l_out..(n * g.cout + co + 1) * g.l_out];
                for kk in 0..g.k {
                    let (lo, hi) = valid_range(kk, g.stride, g.padding, g.l_out, g.l_in);
                    let mut acc = 0.0;
                    for t in lo..hi {
                        acc += xi[t] * go[t * g.stride + kk - g.padding];
                    }
                    gw[(ci * g.cout + co) * g.k + kk] += acc;
                }
            }
        }
    }
    gw
}
