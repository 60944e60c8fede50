//! Symmetric banded matrices with a Cholesky factorization.

use crate::error::{Error, Result};

/// Symmetric matrix stored by its lower band: `band[i][d] = A[i][i - d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `A[i][j]`; either triangle may be addressed.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j <= i { (i, j) } else { (j, i) };
        let d = i - j;
        if d > self.bw {
            0.0
        } else {
            self.band[i * (self.bw + 1) + d]
        }
    }

    /// Adds `v` to `A[i][j]` (and by symmetry `A[j][i]`), `j <= i`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let d = i - j;
        assert!(d <= self.bw, "entry outside the band");
        self.band[i * (self.bw + 1) + d] += v;
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.band[i * (self.bw + 1)] += v;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.get(i, j);
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Cholesky factor, or an error if the matrix is not numerically positive definite.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.band.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = l[i * w + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Numerical(format!(
                            "matrix not positive definite at row {i} (pivot {s:e})"
                        )));
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (i - k)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + (k - i)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }
}
