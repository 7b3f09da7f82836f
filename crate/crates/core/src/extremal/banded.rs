//! Banded LU with partial pivoting for the Newton systems.

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals. Rows keep `kl`
/// extra super-diagonals for pivoting fill-in.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    fn slot(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.ku + self.kl);
        r * self.width + (c + self.kl - r)
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(c + self.kl >= r && c <= r + self.ku, "entry ({r}, {c}) outside the band");
        let s = self.slot(r, c);
        self.data[s] += v;
    }

    #[cfg(test)]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c + self.kl < r || c > r + self.ku + self.kl {
            0.0
        } else {
            self.data[self.slot(r, c)]
        }
    }

    /// Solves `A x = b` in place, consuming the matrix.
    pub fn solve(mut self, b: &mut [f64]) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = 1e-14 * scale;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut piv = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.slot(r, k)].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularJacobian);
            }
            if piv != k {
                for c in k..=last_col {
                    let (a, bb) = (self.slot(k, c), self.slot(piv, c));
                    self.data.swap(a, bb);
                }
                b.swap(k, piv);
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let s = self.slot(r, k);
                let f = self.data[s] / pivot;
                if f == 0.0 {
                    continue;
                }
                self.data[s] = 0.0;
                for c in k + 1..=last_col {
                    let kc = self.data[self.slot(k, c)];
                    let rc = self.slot(r, c);
                    self.data[rc] -= f * kc;
                }
                b[r] -= f * b[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let mut s = b[k];
            for c in k + 1..=last_col {
                s -= self.data[self.slot(k, c)] * b[c];
            }
            b[k] = s / self.data[self.slot(k, k)];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, kl, ku) = (40, 4, 3);
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::zeros(n, n);
        for r in 0..n {
            for c in r.saturating_sub(kl)..=(r + ku).min(n - 1) {
                // weak diagonal forces row exchanges
                let v = rng.gen_range(-1.0..1.0) + if r == c { 0.01 } else { 0.0 };
                band.add(r, c, v);
                dense[(r, c)] = v;
            }
        }
        assert_eq!(band.get(5, 5), dense[(5, 5)]);
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x = rhs.clone();
        band.solve(&mut x).unwrap();
        let expected = dense.lu().solve(&DVector::from_vec(rhs)).unwrap();
        for (a, b) in x.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut band = BandMatrix::zeros(3, 1, 1);
        band.add(0, 0, 1.0);
        band.add(0, 1, 2.0);
        band.add(1, 0, 2.0);
        band.add(1, 1, 4.0);
        band.add(2, 2, 1.0);
        let mut b = vec![1.0; 3];
        assert_eq!(band.solve(&mut b), Err(Error::SingularJacobian));
    }
}
