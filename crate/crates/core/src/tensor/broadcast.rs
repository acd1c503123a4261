//! Trailing-axis broadcasting helpers.

use crate::error::{Error, Result};

pub(crate) fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i + a.len() >= rank { a[i + a.len() - rank] } else { 1 };
        let db = if i + b.len() >= rank { b[i + b.len() - rank] } else { 1 };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return Err(Error::mismatch(op, a, b)),
        };
    }
    Ok(out)
}

/// Strides of `shape` viewed inside `out`, with 0 on broadcast axes.
pub(crate) fn strides_in(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let rank = out.len();
    let mut strides = vec![0; rank];
    let mut acc = 1;
    for i in (0..shape.len()).rev() {
        let oi = i + rank - shape.len();
        strides[oi] = if shape[i] == 1 && out[oi] != 1 { 0 } else { acc };
        acc *= shape[i];
    }
    strides
}

/// Calls `f(out_index, a_index, b_index)` for every element of `out`.
pub(crate) fn for_each(out: &[usize], sa: &[usize], sb: &[usize], mut f: impl FnMut(usize, usize, usize)) {
    let rank = out.len();
    if rank == 0 {
        f(0, 0, 0);
        return;
    }
    let last = out[rank - 1];
    let (la, lb) = (sa[rank - 1], sb[rank - 1]);
    let outer: usize = out[..rank - 1].iter().product();
    let mut idx = vec![0usize; rank - 1];
    let (mut base_a, mut base_b) = (0usize, 0usize);
    let mut o = 0;
    for _ in 0..outer {
        let (mut ia, mut ib) = (base_a, base_b);
        for _ in 0..last {
            f(o, ia, ib);
            o += 1;
            ia += la;
            ib += lb;
        }
        // odometer increment over the outer axes
        let mut d = rank - 1;
        while d > 0 {
            d -= 1;
            idx[d] += 1;
            base_a += sa[d];
            base_b += sb[d];
            if idx[d] < out[d] {
                break;
            }
            base_a -= sa[d] * out[d];
            base_b -= sb[d] * out[d];
            idx[d] = 0;
        }
    }
}

/// Sums `g` (laid out as `out`) down onto an operand of `len` elements with
/// broadcast strides `s`.
pub(crate) fn reduce_to<T: Copy + std::ops::AddAssign + Default>(
    g: &[T],
    out: &[usize],
    s: &[usize],
    len: usize,
) -> Vec<T> {
    if len == g.len() {
        return g.to_vec();
    }
    let mut r = vec![T::default(); len];
    for_each(out, s, s, |o, i, _| r[i] += g[o]);
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(broadcast_shape("t", &[2, 3], &[3]).unwrap(), vec![2, 3]);
        assert_eq!(broadcast_shape("t", &[2, 1, 4], &[3, 1]).unwrap(), vec![2, 3, 4]);
        assert_eq!(broadcast_shape("t", &[], &[5]).unwrap(), vec![5]);
        assert!(broadcast_shape("t", &[2, 3], &[2]).is_err());
    }

    #[test]
    fn iteration_matches_nested_loops() {
        let out = [2, 3, 4];
        let a = [2, 1, 4];
        let b = [3, 1];
        let sa = strides_in(&a, &out);
        let sb = strides_in(&b, &out);
        let mut seen = Vec::new();
        for_each(&out, &sa, &sb, |o, ia, ib| seen.push((o, ia, ib)));
        let mut expect = Vec::new();
        let mut o = 0;
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    expect.push((o, i * 4 + k, j));
                    o += 1;
                }
            }
        }
        assert_eq!(seen, expect);
    }
}
