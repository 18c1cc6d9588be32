//! Banded LU with partial pivoting, used as the exact solver for small systems.

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// LU factors of a banded matrix, rows stored in fixed-width windows.
///
/// Row `i` holds columns `i - kl ..= i + kl + ku`; the extra `kl` columns on
/// the right absorb fill-in from row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
        };
        for r in 0..n {
            for (c, v) in a.row(r) {
                *lu.slot(r, c) = v;
            }
        }
        let reach = kl + ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = lu.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "singular matrix: zero pivot in column {k}"
                )));
            }
            lu.pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let t = lu.get(k, c);
                    *lu.slot(k, c) = lu.get(p, c);
                    *lu.slot(p, c) = t;
                }
            }
            let pivot = lu.get(k, k);
            for i in k + 1..=last_row {
                let l = lu.get(i, k) / pivot;
                *lu.slot(i, k) = l;
                if l != 0.0 {
                    for c in k + 1..=last_col {
                        let u = lu.get(k, c);
                        *lu.slot(i, c) -= l * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn offset(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.width + (c + self.kl - r)
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[self.offset(r, c)]
    }

    #[inline]
    fn slot(&mut self, r: usize, c: usize) -> &mut f64 {
        let o = self.offset(r, c);
        &mut self.data[o]
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut b = rhs.to_vec();
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n.saturating_sub(1)) {
                    b[i] -= self.get(i, k) * bk;
                }
            }
        }
        let reach = self.kl + self.ku;
        for k in (0..n).rev() {
            let mut acc = b[k];
            for c in k + 1..=(k + reach).min(n - 1) {
                acc -= self.get(k, c) * b[c];
            }
            b[k] = acc / self.get(k, k);
        }
        b
    }
}
