//! Dense row-major Cholesky factorization and triangular solves for the
//! small symmetric positive-definite systems GPR produces.

/// Lower-triangular factor `L` with `L Lᵀ = A`, stored row-major `n x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

/// Factorization stopped at a non-positive pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub row: usize,
    pub pivot: f64,
}

impl Cholesky {
    pub fn factor(a: &[f64], n: usize) -> Result<Self, NotPositiveDefinite> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[i * n + j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(NotPositiveDefinite { row: i, pivot: sum });
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Solves `L x = b` in place for each of the `cols` columns of row-major `b` (`n x cols`).
    pub fn solve_lower_in_place(&self, b: &mut [f64], cols: usize) {
        let n = self.n;
        let l = &self.lower;
        for i in 0..n {
            let diag = l[i * n + i];
            for c in 0..cols {
                let mut sum = b[i * cols + c];
                for k in 0..i {
                    sum -= l[i * n + k] * b[k * cols + c];
                }
                b[i * cols + c] = sum / diag;
            }
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64], cols: usize) {
        let n = self.n;
        let l = &self.lower;
        for i in (0..n).rev() {
            let diag = l[i * n + i];
            for c in 0..cols {
                let mut sum = b[i * cols + c];
                for k in i + 1..n {
                    sum -= l[k * n + i] * b[k * cols + c];
                }
                b[i * cols + c] = sum / diag;
            }
        }
    }

    /// Solves `A X = B` for row-major `B` with `cols` right-hand sides.
    pub fn solve(&self, b: &[f64], cols: usize) -> Vec<f64> {
        assert_eq!(b.len(), self.n * cols);
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x, cols);
        self.solve_upper_in_place(&mut x, cols);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_known_matrix() {
        // A = [[4, 2], [2, 3]] -> L = [[2, 0], [1, sqrt(2)]]
        let c = Cholesky::factor(&[4.0, 2.0, 2.0, 3.0], 2).unwrap();
        let expected = [2.0, 0.0, 1.0, 2f64.sqrt()];
        for (a, b) in c.lower().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let x = c.solve(&[2.0, 5.0], 1);
        // 4x + 2y = 2, 2x + 3y = 5 -> x = -0.5, y = 2
        assert!((x[0] + 0.5).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_singular() {
        let err = Cholesky::factor(&[1.0, 1.0, 1.0, 1.0], 2).unwrap_err();
        assert_eq!(err.row, 1);
        assert!(err.pivot <= 0.0);
    }
}
