//! Dense symmetric kernels used by the closed-form relation updates.
//!
//! Everything here works on [`SymMatrix`], a square `f64` matrix that is
//! symmetrized on construction. Eigendecompositions come back sorted in
//! ascending eigenvalue order.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold (times the Frobenius norm) below which a negative
/// eigenvalue is treated as rounding noise and clamped to zero.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// A dense symmetric matrix of order at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps a square matrix, replacing it by `(A + Aᵀ) / 2`.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(Error::Shape(format!(
                "symmetric matrix must be square with order >= 1, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let sym = (&a + a.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn identity(order: usize) -> Self {
        Self::scaled_identity(order, 1.0)
    }

    pub fn scaled_identity(order: usize, scale: f64) -> Self {
        assert!(order > 0, "order must be positive");
        Self(DMatrix::identity(order, order) * scale)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Gram matrix `WᵀW` of an arbitrary (non-empty) matrix.
    pub fn gram(w: &DMatrix<f64>) -> Result<Self> {
        Self::new(w.transpose() * w)
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Eigenpairs of a symmetric matrix; column `i` of `vectors` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// `V · diag(f(λ)) · Vᵀ`, symmetrized.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(j).scale_mut(s);
        }
        let out = scaled * self.vectors.transpose();
        (&out + out.transpose()) * 0.5
    }
}

/// Symmetric eigendecomposition with eigenvalues in ascending order.
pub fn sym_eigen(a: &SymMatrix) -> Result<SymEigen> {
    let eig = a.0.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "eigendecomposition produced non-finite values".into(),
        ));
    }
    let n = a.order();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymEigen { values, vectors })
}

fn check_psd(eig: &SymEigen, a: &SymMatrix) -> Result<()> {
    let tolerance = PSD_TOLERANCE * a.frobenius_norm();
    let min = eig.values[0];
    if min < -tolerance {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            tolerance,
        });
    }
    Ok(())
}

/// Eigenvalues below `SQRT_ZERO_FLOOR·‖a‖_F` are roundoff; their square roots
/// would be ~1e-8 instead of 0, so they are dropped.
pub const SQRT_ZERO_FLOOR: f64 = 1e-12;

/// Principal square root of a numerically PSD matrix.
///
/// Eigenvalues in `[-1e-8·‖a‖_F, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(a)?;
    check_psd(&eig, a)?;
    let floor = SQRT_ZERO_FLOOR * a.frobenius_norm();
    Ok(SymMatrix(eig.reassemble(|l| {
        if l > floor {
            l.sqrt()
        } else {
            0.0
        }
    })))
}

/// `(a + eps·I)⁻¹` for PSD `a` and `eps > 0`.
pub fn regularized_inverse(a: &SymMatrix, eps: f64) -> Result<SymMatrix> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let eig = sym_eigen(a)?;
    check_psd(&eig, a)?;
    Ok(SymMatrix(eig.reassemble(|l| 1.0 / (l.max(0.0) + eps))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::new(a).unwrap()
    }

    fn random_psd(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let cols = rng.random_range(1..=n);
        let b = DMatrix::from_fn(n, cols, |_, _| rng.random_range(-2.0..2.0));
        SymMatrix::new(&b * b.transpose()).unwrap()
    }

    #[test]
    fn construction_symmetrizes_and_rejects_bad_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let s = SymMatrix::new(a).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
        assert!(matches!(
            SymMatrix::new(DMatrix::zeros(2, 3)),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            SymMatrix::new(DMatrix::zeros(0, 0)),
            Err(Error::Shape(_))
        ));
        let nan = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(SymMatrix::new(nan), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eigen_identity_and_diagonal() {
        let e = sym_eigen(&SymMatrix::identity(3)).unwrap();
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let vtv = e.vectors.transpose() * &e.vectors;
        assert!((vtv - DMatrix::identity(3, 3)).norm() < 1e-12);

        let e = sym_eigen(&SymMatrix::from_diagonal(&[9.0, 4.0]).unwrap()).unwrap();
        assert!((e.values[0] - 4.0).abs() < 1e-14);
        assert!((e.values[1] - 9.0).abs() < 1e-14);
        // axis-aligned up to sign: eigenvalue 4 lives on axis 1
        assert!((e.vectors[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((e.vectors[(0, 1)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_symmetric(5, &mut rng);
            let e = sym_eigen(&a).unwrap();
            let recon = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
            let norm = a.frobenius_norm();
            assert!((recon - a.as_matrix()).norm() < 1e-9 * (1.0 + norm));
            let vtv = e.vectors.transpose() * &e.vectors;
            assert!((vtv - DMatrix::identity(5, 5)).norm() < 1e-10);
            assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn psd_sqrt_known_cases() {
        let i4 = psd_sqrt(&SymMatrix::identity(4)).unwrap();
        assert!((i4.as_matrix() - DMatrix::identity(4, 4)).amax() < 1e-12);

        let d = psd_sqrt(&SymMatrix::from_diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        assert!((d.get(0, 0) - 2.0).abs() < 1e-12);
        assert!((d.get(1, 1) - 3.0).abs() < 1e-12);
        assert!(d.get(0, 1).abs() < 1e-12);

        let ones = SymMatrix::new(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let s = psd_sqrt(&ones).unwrap();
        let expected = 1.0 / 2f64.sqrt();
        assert!(s.as_matrix().iter().all(|&v| (v - expected).abs() < 1e-12));
        let squared = s.as_matrix() * s.as_matrix();
        assert!((squared - ones.as_matrix()).norm() < 1e-8 * (1.0 + ones.frobenius_norm()));
    }

    #[test]
    fn psd_sqrt_scaled_identity() {
        for c in [0.0, 0.25, 3.0, 1e4] {
            let s = psd_sqrt(&SymMatrix::scaled_identity(3, c)).unwrap();
            let target = DMatrix::identity(3, 3) * c.sqrt();
            assert!((s.as_matrix() - target).amax() < 1e-10);
        }
    }

    #[test]
    fn psd_sqrt_clamps_rounding_negatives_and_rejects_real_ones() {
        let tiny = SymMatrix::from_diagonal(&[1.0, -1e-12]).unwrap();
        let s = psd_sqrt(&tiny).unwrap();
        assert_eq!(s.get(1, 1), 0.0);

        let neg = SymMatrix::from_diagonal(&[1.0, -0.1]).unwrap();
        assert!(matches!(psd_sqrt(&neg), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn regularized_inverse_cases() {
        let inv = regularized_inverse(&SymMatrix::identity(2), 1e-12).unwrap();
        assert!((inv.as_matrix() - DMatrix::identity(2, 2)).amax() < 1e-10);

        let inv =
            regularized_inverse(&SymMatrix::from_diagonal(&[0.5, 0.5]).unwrap(), 1e-8).unwrap();
        assert!((inv.get(0, 0) - 2.0).abs() < 1e-6);
        assert!((inv.get(1, 1) - 2.0).abs() < 1e-6);

        let eps = 1e-6;
        let half = SymMatrix::new(DMatrix::from_element(2, 2, 0.5)).unwrap();
        let inv = regularized_inverse(&half, eps).unwrap();
        assert!(inv.as_matrix().iter().all(|v| v.is_finite()));
        let shifted = half.as_matrix() + DMatrix::identity(2, 2) * eps;
        let residual = (shifted * inv.as_matrix() - DMatrix::identity(2, 2)).norm();
        assert!(residual < 1e-8, "residual {residual}");

        assert!(matches!(
            regularized_inverse(&half, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sqrt_squared_reconstructs(seed in any::<u64>(), n in 1usize..=8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_psd(n, &mut rng);
                let s = psd_sqrt(&a).unwrap();
                let err = (s.as_matrix() * s.as_matrix() - a.as_matrix()).norm();
                prop_assert!(err < 1e-8 * (1.0 + a.frobenius_norm()), "err {}", err);
            }

            #[test]
            fn inverse_is_symmetric(seed in any::<u64>(), n in 1usize..=8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_psd(n, &mut rng);
                let inv = regularized_inverse(&a, 1e-6).unwrap();
                let asym = (inv.as_matrix() - inv.as_matrix().transpose()).amax();
                prop_assert!(asym < 1e-10);
            }
        }
    }
}
