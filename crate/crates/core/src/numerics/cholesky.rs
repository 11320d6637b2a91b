//! Dense Cholesky factorization for symmetric positive-definite systems.

use crate::error::{Error, Result};

/// Lower-triangular factor `L` with `A = L Lᵀ`, stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors the `n × n` row-major matrix `a`. Only the lower triangle is
    /// read.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "matrix has {} entries, expected {n}x{n}",
                a.len()
            )));
        }
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let (row_i, row_j) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                let s = a[i * n + j] - dot;
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::FactorizationFailure { pivot: i, value: s });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `L[i][j]`.
    pub fn factor_entry(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let dot: f64 = row.iter().zip(&y[..i]).map(|(x, v)| x * v).sum();
            y[i] = (y[i] - dot) / self.l[i * n + i];
        }
        y
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            x[i] /= self.l[i * n + i];
            let xi = x[i];
            for (k, xk) in x[..i].iter_mut().enumerate() {
                *xk -= self.l[i * n + k] * xi;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [[4, 2], [2, 3]] x = [2, 1] -> x = [0.5, 0]
        let c = Cholesky::factor(&[4.0, 2.0, 2.0, 3.0], 2).unwrap();
        let x = c.solve(&[2.0, 1.0]);
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
        assert_eq!(c.factor_entry(0, 0), 2.0);
    }

    #[test]
    fn rejects_indefinite() {
        let err = Cholesky::factor(&[1.0, 2.0, 2.0, 1.0], 2).unwrap_err();
        assert!(matches!(err, Error::FactorizationFailure { pivot: 1, .. }));
    }

    #[test]
    fn residual_on_random_spd() {
        let n = 7;
        let mut g = vec![0.0; n * n];
        let mut seed = 12345u64;
        for v in g.iter_mut() {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            *v = ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        }
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>()
                    + if i == j { 1.0 } else { 0.0 };
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let x = Cholesky::factor(&a, n).unwrap().solve(&b);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>() - b[i];
            assert!(r.abs() < 1e-12);
        }
    }
}
