//! Block-tridiagonal symmetric positive definite solver (block Cholesky).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// `diag[j]` are the diagonal blocks; `lower[j]` is the block at (j+1, j).
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    pub diag: Vec<DMatrix<f64>>,
    pub lower: Vec<DMatrix<f64>>,
}

/// Factorization; `None` from [`BlockTridiagonal::factor`] means the matrix
/// is not positive definite.
pub struct BlockCholesky {
    chol: Vec<Cholesky<f64, Dyn>>,
    coupling: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn factor(&self) -> Option<BlockCholesky> {
        let k = self.diag.len();
        let mut chol = Vec::with_capacity(k);
        let mut coupling = Vec::with_capacity(k.saturating_sub(1));
        let mut next = Some(self.diag[0].clone());
        for j in 0..k {
            let c = Cholesky::new(next.take()?)?;
            if j + 1 < k {
                // B = C_j L_j^{-T}
                let lt = c.l().transpose();
                let b = lt
                    .tr_solve_upper_triangular(&self.lower[j].transpose())
                    .map(|m| m.transpose())?;
                next = Some(&self.diag[j + 1] - &b * b.transpose());
                coupling.push(b);
            }
            chol.push(c);
        }
        Some(BlockCholesky { chol, coupling })
    }
}

impl BlockCholesky {
    pub fn solve(&self, rhs: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let k = self.chol.len();
        // forward: L y = r
        let mut y: Vec<DVector<f64>> = Vec::with_capacity(k);
        for j in 0..k {
            let mut r = rhs[j].clone();
            if j > 0 {
                r -= &self.coupling[j - 1] * &y[j - 1];
            }
            let l = self.chol[j].l();
            y.push(l.solve_lower_triangular(&r).expect("nonsingular factor"));
        }
        // backward: L^T x = y
        let mut x = y;
        for j in (0..k).rev() {
            let mut r = x[j].clone();
            if j + 1 < k {
                r -= self.coupling[j].transpose() * &x[j + 1];
            }
            let l = self.chol[j].l();
            x[j] = l.tr_solve_lower_triangular(&r).expect("nonsingular factor");
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_solve() {
        let n = 2;
        let k = 5;
        let diag: Vec<DMatrix<f64>> = (0..k)
            .map(|j| DMatrix::from_row_slice(n, n, &[4.0 + j as f64, 0.5, 0.5, 3.0]))
            .collect();
        let lower: Vec<DMatrix<f64>> = (0..k - 1)
            .map(|j| DMatrix::from_row_slice(n, n, &[-1.0, 0.2 * j as f64, 0.1, -1.0]))
            .collect();
        let bt = BlockTridiagonal { diag: diag.clone(), lower: lower.clone() };
        let mut dense = DMatrix::<f64>::zeros(n * k, n * k);
        for j in 0..k {
            dense.view_mut((j * n, j * n), (n, n)).copy_from(&diag[j]);
            if j + 1 < k {
                dense.view_mut(((j + 1) * n, j * n), (n, n)).copy_from(&lower[j]);
                dense.view_mut((j * n, (j + 1) * n), (n, n)).copy_from(&lower[j].transpose());
            }
        }
        let rhs: Vec<DVector<f64>> = (0..k).map(|j| DVector::from_vec(vec![1.0, j as f64])).collect();
        let flat = DVector::from_iterator(n * k, rhs.iter().flat_map(|v| v.iter().copied()));
        let expect = dense.lu().solve(&flat).unwrap();
        let got = bt.factor().unwrap().solve(&rhs);
        for j in 0..k {
            for i in 0..n {
                assert!((got[j][i] - expect[j * n + i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let bt = BlockTridiagonal {
            diag: vec![DMatrix::from_row_slice(1, 1, &[1.0]), DMatrix::from_row_slice(1, 1, &[1.0])],
            lower: vec![DMatrix::from_row_slice(1, 1, &[2.0])],
        };
        assert!(bt.factor().is_none());
    }
}
