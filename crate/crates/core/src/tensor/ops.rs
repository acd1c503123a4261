//! Elementwise arithmetic, reductions and shape manipulation.

use super::broadcast::{broadcast_shape, for_each, reduce_to, strides_in};
use super::{normalize_axis, numel, Float, Tensor};
use crate::error::{Error, Result};

struct Plan {
    out: Vec<usize>,
    sa: Vec<usize>,
    sb: Vec<usize>,
    same: bool,
}

impl Plan {
    fn new(op: &'static str, a: &[usize], b: &[usize]) -> Result<Self> {
        if a == b {
            return Ok(Plan {
                out: a.to_vec(),
                sa: Vec::new(),
                sb: Vec::new(),
                same: true,
            });
        }
        let out = broadcast_shape(op, a, b)?;
        Ok(Plan {
            sa: strides_in(a, &out),
            sb: strides_in(b, &out),
            out,
            same: false,
        })
    }

    fn zip<T: Float>(&self, a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> Vec<T> {
        if self.same {
            return a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect();
        }
        if b.len() == 1 && a.len() == numel(&self.out) {
            let y = b[0];
            return a.iter().map(|&x| f(x, y)).collect();
        }
        let mut r = vec![T::zero(); numel(&self.out)];
        for_each(&self.out, &self.sa, &self.sb, |o, ia, ib| r[o] = f(a[ia], b[ib]));
        r
    }

    fn reduce_a<T: Float>(&self, g: &[T], len: usize) -> Vec<T> {
        if self.same {
            g.to_vec()
        } else {
            reduce_to(g, &self.out, &self.sa, len)
        }
    }

    fn reduce_b<T: Float>(&self, g: &[T], len: usize) -> Vec<T> {
        if self.same {
            g.to_vec()
        } else {
            reduce_to(g, &self.out, &self.sb, len)
        }
    }
}

impl<T: Float> Tensor<T> {
    fn unary_op<F, D>(&self, name: &'static str, f: F, df: D) -> Tensor<T>
    where
        F: Fn(T) -> T,
        D: Fn(T, T) -> T + Send + Sync + 'static,
    {
        let data: Vec<T> = self.data().iter().map(|&x| f(x)).collect();
        Tensor::from_op(
            name,
            data,
            self.shape().to_vec(),
            vec![self.clone()],
            Box::new(move |ctx| {
                let x = ctx.inputs[0].data();
                let g = ctx
                    .grad
                    .iter()
                    .zip(x.iter().zip(ctx.out))
                    .map(|(&g, (&x, &y))| g * df(x, y))
                    .collect();
                vec![Some(g)]
            }),
        )
    }

    pub fn add(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        let plan = Plan::new("add", self.shape(), rhs.shape())?;
        let data = plan.zip(self.data(), rhs.data(), |x, y| x + y);
        let out = plan.out.clone();
        Ok(Tensor::from_op(
            "add",
            data,
            out,
            vec![self.clone(), rhs.clone()],
            Box::new(move |ctx| {
                vec![
                    ctx.needs(0)
                        .then(|| plan.reduce_a(ctx.grad, ctx.inputs[0].numel())),
                    ctx.needs(1)
                        .then(|| plan.reduce_b(ctx.grad, ctx.inputs[1].numel())),
                ]
            }),
        ))
    }

    pub fn sub(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        let plan = Plan::new("sub", self.shape(), rhs.shape())?;
        let data = plan.zip(self.data(), rhs.data(), |x, y| x - y);
        let out = plan.out.clone();
        Ok(Tensor::from_op(
            "sub",
            data,
            out,
            vec![self.clone(), rhs.clone()],
            Box::new(move |ctx| {
                vec![
                    ctx.needs(0)
                        .then(|| plan.reduce_a(ctx.grad, ctx.inputs[0].numel())),
                    ctx.needs(1).then(|| {
                        let mut g = plan.reduce_b(ctx.grad, ctx.inputs[1].numel());
                        g.iter_mut().for_each(|v| *v = -*v);
                        g
                    }),
                ]
            }),
        ))
    }

    pub fn mul(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        let plan = Plan::new("mul", self.shape(), rhs.shape())?;
        let data = plan.zip(self.data(), rhs.data(), |x, y| x * y);
        let out = plan.out.clone();
        Ok(Tensor::from_op(
            "mul",
            data,
            out,
            vec![self.clone(), rhs.clone()],
            Box::new(move |ctx| {
                let (a, b) = (ctx.inputs[0].data(), ctx.inputs[1].data());
                let ga = ctx.needs(0).then(|| {
                    let t = plan.zip_grad(ctx.grad, b, false);
                    plan.reduce_a(&t, a.len())
                });
                let gb = ctx.needs(1).then(|| {
                    let t = plan.zip_grad(ctx.grad, a, true);
                    plan.reduce_b(&t, b.len())
                });
                vec![ga, gb]
            }),
        ))
    }

    /// Elementwise quotient. Exact zero denominators are rejected; callers
    /// that can meet them add an explicit guard.
    pub fn div(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        if rhs.data().iter().any(|v| v.is_zero()) {
            return Err(Error::Domain {
                op: "div",
                msg: "zero denominator".into(),
            });
        }
        let plan = Plan::new("div", self.shape(), rhs.shape())?;
        let data = plan.zip(self.data(), rhs.data(), |x, y| x / y);
        let out = plan.out.clone();
        Ok(Tensor::from_op(
            "div",
            data,
            out,
            vec![self.clone(), rhs.clone()],
            Box::new(move |ctx| {
                let (a, b) = (ctx.inputs[0].data(), ctx.inputs[1].data());
                let n = ctx.grad.len();
                let mut ga = ctx.needs(0).then(|| vec![T::zero(); n]);
                let mut gb = ctx.needs(1).then(|| vec![T::zero(); n]);
                plan.each(|o, ia, ib| {
                    let g = ctx.grad[o];
                    if let Some(ga) = ga.as_mut() {
                        ga[o] = g / b[ib];
                    }
                    if let Some(gb) = gb.as_mut() {
                        gb[o] = -g * a[ia] / (b[ib] * b[ib]);
                    }
                });
                vec![
                    ga.map(|t| plan.reduce_a(&t, a.len())),
                    gb.map(|t| plan.reduce_b(&t, b.len())),
                ]
            }),
        ))
    }

    pub fn neg(&self) -> Tensor<T> {
        self.unary_op("neg", |x| -x, |_, _| -T::one())
    }

    pub fn scale(&self, s: T) -> Tensor<T> {
        self.unary_op("scale", move |x| x * s, move |_, _| s)
    }

    pub fn add_scalar(&self, s: T) -> Tensor<T> {
        self.unary_op("add_scalar", move |x| x + s, |_, _| T::one())
    }

    pub fn exp(&self) -> Tensor<T> {
        self.unary_op("exp", |x| x.exp(), |_, y| y)
    }

    /// Natural logarithm; non-positive inputs are a domain error.
    pub fn ln(&self) -> Result<Tensor<T>> {
        if let Some(v) = self.data().iter().find(|v| **v <= T::zero()) {
            return Err(Error::Domain {
                op: "ln",
                msg: format!("non-positive input {v}"),
            });
        }
        Ok(self.unary_op("ln", |x| x.ln(), |x, _| T::one() / x))
    }

    pub fn tanh(&self) -> Tensor<T> {
        self.unary_op("tanh", |x| x.tanh(), |_, y| T::one() - y * y)
    }

    pub fn sigmoid(&self) -> Tensor<T> {
        self.unary_op("sigmoid", sigmoid, |_, y| y * (T::one() - y))
    }

    pub fn silu(&self) -> Tensor<T> {
        self.unary_op(
            "silu",
            |x| x * sigmoid(x),
            |x, _| {
                let s = sigmoid(x);
                s * (T::one() + x * (T::one() - s))
            },
        )
    }

    pub fn relu(&self) -> Tensor<T> {
        self.unary_op(
            "relu",
            |x| if x > T::zero() { x } else { T::zero() },
            |x, _| if x > T::zero() { T::one() } else { T::zero() },
        )
    }

    /// ELU with unit alpha.
    pub fn elu(&self) -> Tensor<T> {
        self.unary_op(
            "elu",
            |x| if x > T::zero() { x } else { x.exp_m1() },
            |x, y| if x > T::zero() { T::one() } else { y + T::one() },
        )
    }

    pub fn square(&self) -> Tensor<T> {
        self.unary_op("square", |x| x * x, |x, _| x + x)
    }

    /// `x^p`. Negative bases need an integral exponent.
    pub fn powf(&self, p: T) -> Result<Tensor<T>> {
        if p.fract() != T::zero() && self.data().iter().any(|v| *v < T::zero()) {
            return Err(Error::Domain {
                op: "powf",
                msg: format!("negative base with fractional exponent {p}"),
            });
        }
        if p < T::zero() && self.data().iter().any(|v| v.is_zero()) {
            return Err(Error::Domain {
                op: "powf",
                msg: "zero base with negative exponent".into(),
            });
        }
        Ok(self.unary_op("powf", move |x| x.powf(p), move |x, _| p * x.powf(p - T::one())))
    }

    /// Sum along `axis`.
    pub fn sum_axis(&self, axis: isize, keepdim: bool) -> Result<Tensor<T>> {
        let (ax, outer, len, inner) = self.split_axis(axis, "sum_axis")?;
        let x = self.data();
        let mut data = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for a in 0..len {
                let src = &x[(o * len + a) * inner..(o * len + a + 1) * inner];
                let dst = &mut data[o * inner..(o + 1) * inner];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
        Ok(Tensor::from_op(
            "sum_axis",
            data,
            self.reduced_shape(ax, keepdim),
            vec![self.clone()],
            Box::new(move |ctx| {
                vec![Some(spread(ctx.grad, outer, len, inner, T::one()))]
            }),
        ))
    }

    pub fn mean_axis(&self, axis: isize, keepdim: bool) -> Result<Tensor<T>> {
        let (ax, outer, len, inner) = self.split_axis(axis, "mean_axis")?;
        let x = self.data();
        let scale = T::one() / T::lit(len as f64);
        let mut data = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for a in 0..len {
                let src = &x[(o * len + a) * inner..(o * len + a + 1) * inner];
                let dst = &mut data[o * inner..(o + 1) * inner];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
        data.iter_mut().for_each(|v| *v *= scale);
        Ok(Tensor::from_op(
            "mean_axis",
            data,
            self.reduced_shape(ax, keepdim),
            vec![self.clone()],
            Box::new(move |ctx| vec![Some(spread(ctx.grad, outer, len, inner, scale))]),
        ))
    }

    /// Maximum along `axis`; the gradient flows to the first maximal slot.
    pub fn max_axis(&self, axis: isize, keepdim: bool) -> Result<Tensor<T>> {
        let (ax, outer, len, inner) = self.split_axis(axis, "max_axis")?;
        let x = self.data();
        let mut data = vec![T::neg_infinity(); outer * inner];
        let mut arg = vec![0usize; outer * inner];
        for o in 0..outer {
            for a in 0..len {
                for i in 0..inner {
                    let v = x[(o * len + a) * inner + i];
                    if v > data[o * inner + i] {
                        data[o * inner + i] = v;
                        arg[o * inner + i] = a;
                    }
                }
            }
        }
        Ok(Tensor::from_op(
            "max_axis",
            data,
            self.reduced_shape(ax, keepdim),
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut g = vec![T::zero(); outer * len * inner];
                for o in 0..outer {
                    for i in 0..inner {
                        let a = arg[o * inner + i];
                        g[(o * len + a) * inner + i] = ctx.grad[o * inner + i];
                    }
                }
                vec![Some(g)]
            }),
        ))
    }

    pub fn sum_all(&self) -> Tensor<T> {
        let s = self.data().iter().copied().sum();
        let n = self.numel();
        Tensor::from_op(
            "sum_all",
            vec![s],
            Vec::new(),
            vec![self.clone()],
            Box::new(move |ctx| vec![Some(vec![ctx.grad[0]; n])]),
        )
    }

    pub fn mean_all(&self) -> Tensor<T> {
        let n = self.numel();
        let scale = T::one() / T::lit(n as f64);
        let s: T = self.data().iter().copied().sum();
        Tensor::from_op(
            "mean_all",
            vec![s * scale],
            Vec::new(),
            vec![self.clone()],
            Box::new(move |ctx| vec![Some(vec![ctx.grad[0] * scale; n])]),
        )
    }

    fn split_axis(&self, axis: isize, op: &'static str) -> Result<(usize, usize, usize, usize)> {
        let ax = normalize_axis(axis, self.rank(), op)?;
        let s = self.shape();
        Ok((
            ax,
            s[..ax].iter().product(),
            s[ax],
            s[ax + 1..].iter().product(),
        ))
    }

    fn reduced_shape(&self, ax: usize, keepdim: bool) -> Vec<usize> {
        let mut s = self.shape().to_vec();
        if keepdim {
            s[ax] = 1;
        } else {
            s.remove(ax);
        }
        s
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor<T>> {
        if numel(shape) != self.numel() || shape.contains(&0) {
            return Err(Error::mismatch("reshape", self.shape(), shape));
        }
        Ok(Tensor::from_op(
            "reshape",
            self.to_vec(),
            shape.to_vec(),
            vec![self.clone()],
            Box::new(|ctx| vec![Some(ctx.grad.to_vec())]),
        ))
    }

    /// Reorders axes so that output axis `i` is input axis `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Tensor<T>> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if perm.len() != rank || perm.iter().any(|&p| p >= rank || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::shape("permute", format!("{perm:?} for rank {rank}")));
        }
        let shape = self.shape();
        let mut in_strides = vec![1usize; rank];
        for i in (0..rank.saturating_sub(1)).rev() {
            in_strides[i] = in_strides[i + 1] * shape[i + 1];
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let src: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let x = self.data();
        let mut data = vec![T::zero(); x.len()];
        for_each(&out_shape, &src, &src, |o, i, _| data[o] = x[i]);
        let os = out_shape.clone();
        Ok(Tensor::from_op(
            "permute",
            data,
            out_shape,
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut g = vec![T::zero(); ctx.grad.len()];
                for_each(&os, &src, &src, |o, i, _| g[i] = ctx.grad[o]);
                vec![Some(g)]
            }),
        ))
    }

    /// Swaps two axes.
    pub fn transpose(&self, a: isize, b: isize) -> Result<Tensor<T>> {
        let rank = self.rank();
        let a = normalize_axis(a, rank, "transpose")?;
        let b = normalize_axis(b, rank, "transpose")?;
        let mut perm: Vec<usize> = (0..rank).collect();
        perm.swap(a, b);
        self.permute(&perm)
    }

    /// Slice `[start, start + len)` along `axis`.
    pub fn narrow(&self, axis: isize, start: usize, len: usize) -> Result<Tensor<T>> {
        let (ax, outer, full, inner) = self.split_axis(axis, "narrow")?;
        if len == 0 || start + len > full {
            return Err(Error::shape(
                "narrow",
                format!("range {start}..{} exceeds extent {full}", start + len),
            ));
        }
        let x = self.data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            data.extend_from_slice(&x[(o * full + start) * inner..(o * full + start + len) * inner]);
        }
        let mut shape = self.shape().to_vec();
        shape[ax] = len;
        Ok(Tensor::from_op(
            "narrow",
            data,
            shape,
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut g = vec![T::zero(); outer * full * inner];
                for o in 0..outer {
                    g[(o * full + start) * inner..(o * full + start + len) * inner]
                        .copy_from_slice(&ctx.grad[o * len * inner..(o + 1) * len * inner]);
                }
                vec![Some(g)]
            }),
        ))
    }

    /// Splits `axis` into `parts` equal chunks.
    pub fn chunk(&self, parts: usize, axis: isize) -> Result<Vec<Tensor<T>>> {
        let ax = normalize_axis(axis, self.rank(), "chunk")?;
        let full = self.shape()[ax];
        if parts == 0 || full % parts != 0 {
            return Err(Error::shape(
                "chunk",
                format!("extent {full} not divisible into {parts} parts"),
            ));
        }
        let len = full / parts;
        (0..parts)
            .map(|p| self.narrow(ax as isize, p * len, len))
            .collect()
    }

    /// Concatenates tensors along `axis`; all other extents must agree.
    pub fn concat(tensors: &[&Tensor<T>], axis: isize) -> Result<Tensor<T>> {
        let first = tensors
            .first()
            .ok_or_else(|| Error::shape("concat", "no inputs"))?;
        let ax = normalize_axis(axis, first.rank(), "concat")?;
        for t in tensors {
            let ok = t.rank() == first.rank()
                && t.shape()
                    .iter()
                    .zip(first.shape())
                    .enumerate()
                    .all(|(i, (a, b))| i == ax || a == b);
            if !ok {
                return Err(Error::mismatch("concat", first.shape(), t.shape()));
            }
        }
        let outer: usize = first.shape()[..ax].iter().product();
        let inner: usize = first.shape()[ax + 1..].iter().product();
        let lens: Vec<usize> = tensors.iter().map(|t| t.shape()[ax]).collect();
        let total: usize = lens.iter().sum();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for (t, &l) in tensors.iter().zip(&lens) {
                data.extend_from_slice(&t.data()[o * l * inner..(o + 1) * l * inner]);
            }
        }
        let mut shape = first.shape().to_vec();
        shape[ax] = total;
        Ok(Tensor::from_op(
            "concat",
            data,
            shape,
            tensors.iter().map(|t| (*t).clone()).collect(),
            Box::new(move |ctx| {
                let mut offsets = Vec::with_capacity(lens.len());
                let mut acc = 0;
                for &l in &lens {
                    offsets.push(acc);
                    acc += l;
                }
                lens.iter()
                    .zip(offsets)
                    .enumerate()
                    .map(|(k, (&l, off))| {
                        ctx.needs(k).then(|| {
                            let mut g = Vec::with_capacity(outer * l * inner);
                            for o in 0..outer {
                                let base = (o * total + off) * inner;
                                g.extend_from_slice(&ctx.grad[base..base + l * inner]);
                            }
                            g
                        })
                    })
                    .collect()
            }),
        ))
    }

    /// Repeats each slice along `axis` `factor` times (nearest-neighbour
    /// upsampling when applied to the point axis).
    pub fn repeat_interleave(&self, factor: usize, axis: isize) -> Result<Tensor<T>> {
        let (ax, outer, len, inner) = self.split_axis(axis, "repeat_interleave")?;
        if factor == 0 {
            return Err(Error::shape("repeat_interleave", "factor 0"));
        }
        let x = self.data();
        let mut data = Vec::with_capacity(x.len() * factor);
        for o in 0..outer {
            for a in 0..len {
                let src = &x[(o * len + a) * inner..(o * len + a + 1) * inner];
                for _ in 0..factor {
                    data.extend_from_slice(src);
                }
            }
        }
        let mut shape = self.shape().to_vec();
        shape[ax] *= factor;
        Ok(Tensor::from_op(
            "repeat_interleave",
            data,
            shape,
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut g = vec![T::zero(); outer * len * inner];
                for o in 0..outer {
                    for a in 0..len {
                        let dst = (o * len + a) * inner;
                        for r in 0..factor {
                            let src = ((o * len + a) * factor + r) * inner;
                            for i in 0..inner {
                                g[dst + i] += ctx.grad[src + i];
                            }
                        }
                    }
                }
                vec![Some(g)]
            }),
        ))
    }
}

impl Plan {
    fn each(&self, mut f: impl FnMut(usize, usize, usize)) {
        if self.same {
            for i in 0..numel(&self.out) {
                f(i, i, i);
            }
        } else {
            for_each(&self.out, &self.sa, &self.sb, f);
        }
    }

    /// `g[o] * other[idx]` over the output layout; `other_is_a` picks which
    /// operand's strides index `other`.
    fn zip_grad<T: Float>(&self, g: &[T], other: &[T], other_is_a: bool) -> Vec<T> {
        if self.same {
            return g.iter().zip(other).map(|(&g, &o)| g * o).collect();
        }
        let mut r = vec![T::zero(); g.len()];
        for_each(&self.out, &self.sa, &self.sb, |o, ia, ib| {
            r[o] = g[o] * other[if other_is_a { ia } else { ib }];
        });
        r
    }
}

fn sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn spread<T: Float>(g: &[T], outer: usize, len: usize, inner: usize, scale: T) -> Vec<T> {
    let mut r = vec![T::zero(); outer * len * inner];
    for o in 0..outer {
        for a in 0..len {
            for i in 0..inner {
                r[(o * len + a) * inner + i] = g[o * inner + i] * scale;
            }
        }
    }
    r
}
