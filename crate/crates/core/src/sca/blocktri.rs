//! Symmetric positive-definite block-tridiagonal solver with 2×2 blocks.

use nalgebra::{Matrix2, Vector2};

/// Factorization `A = L D Lᵀ` of a block-tridiagonal matrix with diagonal
/// blocks `diag[i]` and sub-diagonal blocks `lower[i] = A[i+1, i]`.
pub(crate) struct BlockTridiag {
    d_inv: Vec<Matrix2<f64>>,
    l: Vec<Matrix2<f64>>,
}

impl BlockTridiag {
    pub(crate) fn factor(diag: &[Matrix2<f64>], lower: &[Matrix2<f64>]) -> Option<Self> {
        let n = diag.len();
        debug_assert_eq!(lower.len(), n.saturating_sub(1));
        let mut d_inv = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n.saturating_sub(1));
        let mut d = diag.first().copied()?;
        for i in 0..n {
            if i > 0 {
                let li = lower[i - 1] * d_inv[i - 1];
                d = diag[i] - li * lower[i - 1].transpose();
                l.push(li);
            }
            if d[(0, 0)] <= 0.0 || d.determinant() <= 0.0 {
                return None;
            }
            d_inv.push(d.try_inverse()?);
        }
        Some(Self { d_inv, l })
    }

    pub(crate) fn solve(&self, rhs: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
        let n = self.d_inv.len();
        let mut z = rhs.to_vec();
        for i in 1..n {
            let prev = z[i - 1];
            z[i] -= self.l[i - 1] * prev;
        }
        let mut x = vec![Vector2::zeros(); n];
        for i in (0..n).rev() {
            x[i] = self.d_inv[i] * z[i];
            if i + 1 < n {
                let next = x[i + 1];
                x[i] -= self.l[i].transpose() * next;
            }
        }
        x
    }
}
