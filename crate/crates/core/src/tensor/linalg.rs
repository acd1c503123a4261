//! Matrix products, softmax and 1D convolution.

use super::{normalize_axis, Float, Tensor};
use crate::error::{Error, Result};

/// `c (+)= op(a) · op(b)` with `op(a)` of size `m×k` and `op(b)` of size
/// `k×n`; `a_t`/`b_t` mean the operand is stored transposed.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm<T: Float>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    a_t: bool,
    b: &[T],
    b_t: bool,
    c: &mut [T],
    accumulate: bool,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { T::one() } else { T::zero() };
    // SAFETY: slice lengths were checked against the strides above.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl<T: Float> Tensor<T> {
    /// Matrix product.
    ///
    /// * `[.., m, k] · [k, n]` flattens the leading axes of the left operand
    ///   (this is how linear layers apply to token batches);
    /// * `[b.., m, k] · [b.., k, n]` multiplies matching batches.
    pub fn matmul(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        let (sa, sb) = (self.shape(), rhs.shape());
        if sa.is_empty() || sb.len() < 2 {
            return Err(Error::mismatch("matmul", sa, sb));
        }
        if sb.len() == 2 {
            let (k, n) = (sb[0], sb[1]);
            if sa[sa.len() - 1] != k {
                return Err(Error::mismatch("matmul", sa, sb));
            }
            let m = self.numel() / k;
            let mut out = vec![T::zero(); m * n];
            gemm(m, k, n, self.data(), false, rhs.data(), false, &mut out, false);
            let mut shape = sa[..sa.len() - 1].to_vec();
            shape.push(n);
            return Ok(Tensor::from_op(
                "matmul",
                out,
                shape,
                vec![self.clone(), rhs.clone()],
                Box::new(move |ctx| {
                    let (a, b) = (ctx.inputs[0].data(), ctx.inputs[1].data());
                    let ga = ctx.needs(0).then(|| {
                        let mut g = vec![T::zero(); m * k];
                        gemm(m, n, k, ctx.grad, false, b, true, &mut g, false);
                        g
                    });
                    let gb = ctx.needs(1).then(|| {
                        let mut g = vec![T::zero(); k * n];
                        gemm(k, m, n, a, true, ctx.grad, false, &mut g, false);
                        g
                    });
                    vec![ga, gb]
                }),
            ));
        }
        let r = sa.len();
        if r != sb.len() || sa[..r - 2] != sb[..r - 2] || sa[r - 1] != sb[r - 2] {
            return Err(Error::mismatch("matmul", sa, sb));
        }
        let batch: usize = sa[..r - 2].iter().product();
        let (m, k, n) = (sa[r - 2], sa[r - 1], sb[r - 1]);
        let mut out = vec![T::zero(); batch * m * n];
        for bi in 0..batch {
            gemm(
                m,
                k,
                n,
                &self.data()[bi * m * k..],
                false,
                &rhs.data()[bi * k * n..],
                false,
                &mut out[bi * m * n..],
                false,
            );
        }
        let mut shape = sa[..r - 1].to_vec();
        shape.push(n);
        Ok(Tensor::from_op(
            "bmm",
            out,
            shape,
            vec![self.clone(), rhs.clone()],
            Box::new(move |ctx| {
                let (a, b) = (ctx.inputs[0].data(), ctx.inputs[1].data());
                let ga = ctx.needs(0).then(|| {
                    let mut g = vec![T::zero(); batch * m * k];
                    for bi in 0..batch {
                        gemm(
                            m,
                            n,
                            k,
                            &ctx.grad[bi * m * n..],
                            false,
                            &b[bi * k * n..],
                            true,
                            &mut g[bi * m * k..],
                            false,
                        );
                    }
                    g
                });
                let gb = ctx.needs(1).then(|| {
                    let mut g = vec![T::zero(); batch * k * n];
                    for bi in 0..batch {
                        gemm(
                            k,
                            m,
                            n,
                            &a[bi * m * k..],
                            true,
                            &ctx.grad[bi * m * n..],
                            false,
                            &mut g[bi * k * n..],
                            false,
                        );
                    }
                    g
                });
                vec![ga, gb]
            }),
        ))
    }

    /// Numerically stable softmax along `axis`.
    pub fn softmax(&self, axis: isize) -> Result<Tensor<T>> {
        let ax = normalize_axis(axis, self.rank(), "softmax")?;
        if ax != self.rank() - 1 {
            let last = self.rank() as isize - 1;
            return self
                .transpose(ax as isize, last)?
                .softmax(last)?
                .transpose(ax as isize, last);
        }
        let len = self.shape()[ax];
        let x = self.data();
        let mut y = vec![T::zero(); x.len()];
        for (xr, yr) in x.chunks_exact(len).zip(y.chunks_exact_mut(len)) {
            let mx = xr.iter().copied().fold(T::neg_infinity(), T::max);
            let mut s = T::zero();
            for (yv, &xv) in yr.iter_mut().zip(xr) {
                *yv = (xv - mx).exp();
                s += *yv;
            }
            let inv = T::one() / s;
            yr.iter_mut().for_each(|v| *v *= inv);
        }
        Ok(Tensor::from_op(
            "softmax",
            y,
            self.shape().to_vec(),
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut g = vec![T::zero(); ctx.grad.len()];
                for ((gr, yr), dr) in ctx
                    .grad
                    .chunks_exact(len)
                    .zip(ctx.out.chunks_exact(len))
                    .zip(g.chunks_exact_mut(len))
                {
                    let dot: T = gr.iter().zip(yr).map(|(&a, &b)| a * b).sum();
                    for ((d, &gv), &yv) in dr.iter_mut().zip(gr).zip(yr) {
                        *d = yv * (gv - dot);
                    }
                }
                vec![Some(g)]
            }),
        ))
    }

    /// 1D cross-correlation.
    ///
    /// `self` is `[B, C_in, N]` (or `[C_in, N]`), `weight` is
    /// `[C_out, C_in, k]`, `bias` is `[C_out]`. Zero padding.
    pub fn conv1d(
        &self,
        weight: &Tensor<T>,
        bias: Option<&Tensor<T>>,
        stride: usize,
        padding: usize,
    ) -> Result<Tensor<T>> {
        let unbatched = self.rank() == 2;
        let xs = self.shape();
        let (b, cin, n) = match xs.len() {
            2 => (1, xs[0], xs[1]),
            3 => (xs[0], xs[1], xs[2]),
            _ => return Err(Error::shape("conv1d", format!("input shape {xs:?}"))),
        };
        let ws = weight.shape();
        if ws.len() != 3 || ws[1] != cin {
            return Err(Error::mismatch("conv1d", xs, ws));
        }
        let (cout, kw) = (ws[0], ws[2]);
        if let Some(bt) = bias {
            if bt.shape() != [cout] {
                return Err(Error::mismatch("conv1d", ws, bt.shape()));
            }
        }
        if stride == 0 {
            return Err(Error::shape("conv1d", "stride 0"));
        }
        if n + 2 * padding < kw {
            return Err(Error::shape(
                "conv1d",
                format!("kernel {kw} longer than padded input {}", n + 2 * padding),
            ));
        }
        let nout = (n + 2 * padding - kw) / stride + 1;
        let geo = ConvGeometry {
            cin,
            n,
            kw,
            stride,
            padding,
            nout,
        };
        let ck = cin * kw;
        let wide = b * nout;
        let mut cols = vec![T::zero(); ck * wide];
        geo.im2col(self.data(), b, &mut cols);
        let mut tmp = vec![T::zero(); cout * wide];
        gemm(cout, ck, wide, weight.data(), false, &cols, false, &mut tmp, false);
        drop(cols);
        let mut out = vec![T::zero(); b * cout * nout];
        for co in 0..cout {
            let bv = bias.map_or(T::zero(), |bt| bt.data()[co]);
            for bi in 0..b {
                let src = &tmp[co * wide + bi * nout..co * wide + (bi + 1) * nout];
                let dst = &mut out[(bi * cout + co) * nout..(bi * cout + co + 1) * nout];
                dst.iter_mut().zip(src).for_each(|(d, &v)| *d = v + bv);
            }
        }
        let shape = if unbatched {
            vec![cout, nout]
        } else {
            vec![b, cout, nout]
        };
        let mut inputs = vec![self.clone(), weight.clone()];
        if let Some(bt) = bias {
            inputs.push(bt.clone());
        }
        Ok(Tensor::from_op(
            "conv1d",
            out,
            shape,
            inputs,
            Box::new(move |ctx| {
                let x = ctx.inputs[0].data();
                let w = ctx.inputs[1].data();
                let g = ctx.grad;
                // g as [C_out, B·N_out]
                let mut gt = vec![T::zero(); cout * wide];
                for bi in 0..b {
                    for co in 0..cout {
                        gt[co * wide + bi * nout..co * wide + (bi + 1) * nout]
                            .copy_from_slice(&g[(bi * cout + co) * nout..(bi * cout + co + 1) * nout]);
                    }
                }
                let gw = ctx.needs(1).then(|| {
                    let mut cols = vec![T::zero(); ck * wide];
                    geo.im2col(x, b, &mut cols);
                    let mut gw = vec![T::zero(); cout * ck];
                    gemm(cout, wide, ck, &gt, false, &cols, true, &mut gw, false);
                    gw
                });
                let gx = ctx.needs(0).then(|| {
                    let mut dcols = vec![T::zero(); ck * wide];
                    gemm(ck, cout, wide, w, true, &gt, false, &mut dcols, false);
                    let mut gx = vec![T::zero(); b * cin * n];
                    geo.col2im(&dcols, b, &mut gx);
                    gx
                });
                let mut grads = vec![gx, gw];
                if ctx.inputs.len() == 3 {
                    grads.push(ctx.needs(2).then(|| {
                        gt.chunks_exact(wide).map(|row| row.iter().copied().sum()).collect()
                    }));
                }
                grads
            }),
        ))
    }
}

#[derive(Clone, Copy)]
struct ConvGeometry {
    cin: usize,
    n: usize,
    kw: usize,
    stride: usize,
    padding: usize,
    nout: usize,
}

impl ConvGeometry {
    /// Output positions `o` whose tap `kk` lands inside the input.
    fn valid(&self, kk: usize) -> std::ops::Range<usize> {
        // o·stride + kk − padding ∈ [0, n)
        let lo = self.padding.saturating_sub(kk).div_ceil(self.stride);
        let hi = if self.n + self.padding > kk { (self.n + self.padding - kk - 1) / self.stride + 1 } else { 0 };
        lo..hi.min(self.nout).max(lo)
    }

    /// `x: [B, C_in, N]` into columns `[C_in·k, B·N_out]`; padding stays zero.
    fn im2col<T: Float>(&self, x: &[T], b: usize, cols: &mut [T]) {
        let wide = b * self.nout;
        for ci in 0..self.cin {
            for kk in 0..self.kw {
                let range = self.valid(kk);
                let row = &mut cols[(ci * self.kw + kk) * wide..(ci * self.kw + kk + 1) * wide];
                for bi in 0..b {
                    let src = &x[(bi * self.cin + ci) * self.n..(bi * self.cin + ci + 1) * self.n];
                    let dst = &mut row[bi * self.nout..(bi + 1) * self.nout];
                    if self.stride == 1 {
                        let first = range.start + kk - self.padding;
                        dst[range.clone()].copy_from_slice(&src[first..first + range.len()]);
                    } else {
                        for o in range.clone() {
                            dst[o] = src[o * self.stride + kk - self.padding];
                        }
                    }
                }
            }
        }
    }

    fn col2im<T: Float>(&self, cols: &[T], b: usize, dx: &mut [T]) {
        let wide = b * self.nout;
        for ci in 0..self.cin {
            for kk in 0..self.kw {
                let range = self.valid(kk);
                let row = &cols[(ci * self.kw + kk) * wide..(ci * self.kw + kk + 1) * wide];
                for bi in 0..b {
                    let dst = &mut dx[(bi * self.cin + ci) * self.n..(bi * self.cin + ci + 1) * self.n];
                    let src = &row[bi * self.nout..(bi + 1) * self.nout];
                    for o in range.clone() {
                        dst[o * self.stride + kk - self.padding] += src[o];
                    }
                }
            }
        }
    }
}
