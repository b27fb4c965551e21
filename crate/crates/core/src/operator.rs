//! Dense Hermitian operators on a finite-dimensional Hilbert space.

use nalgebra::linalg::SymmetricEigen;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// Entrywise Hermiticity tolerance, relative to the largest entry (floored at 1).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default lower bound on the eigenvalues of a density operator.
pub const POSITIVITY_FLOOR: f64 = 1e-10;
/// Negative eigenvalues down to this magnitude are clipped to zero by [`sqrt_psd`].
pub const PSD_CLIP: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// A dense `d×d` complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Validates Hermiticity at [`HERMITIAN_TOL`] and symmetrizes away the residual.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, HERMITIAN_TOL)
    }

    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows == 0 {
            return Err(Error::Validation(
                "operator dimension must be at least 1".into(),
            ));
        }
        if rows != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: cols,
            });
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Validation("operator has non-finite entries".into()));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut worst = 0.0f64;
        for i in 0..rows {
            for j in 0..=i {
                worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if worst > tol * scale {
            return Err(Error::Validation(format!(
                "operator is not Hermitian (max |H_ij - conj(H_ji)| = {worst:e})"
            )));
        }
        Ok(Self::from_matrix_unchecked(matrix))
    }

    /// Builds from an almost-Hermitian matrix by taking its Hermitian part.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        let adjoint = matrix.adjoint();
        Self {
            matrix: (matrix + adjoint).scale(0.5),
        }
    }

    /// Real symmetric matrix embedded as a Hermitian operator.
    pub fn from_real(matrix: &nalgebra::DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| C64::new(x, 0.0)))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Validation(
                "operator dimension must be at least 1".into(),
            ));
        }
        let v = CVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self::from_matrix_unchecked(CMatrix::from_diagonal(&v)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Trace; real for Hermitian operators.
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> Result<f64> {
        let spec = eigh(self)?;
        Ok(spec
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, &x| acc.max(x.abs())))
    }

    /// `⟨v|H|v⟩`, real for Hermitian `H`.
    pub fn expectation(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.matrix * v)).re
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// `Σ cᵢ Hᵢ` over operators of equal dimension.
    pub fn linear_combination(coeffs: &[f64], ops: &[HermitianOperator]) -> Result<Self> {
        if coeffs.len() != ops.len() {
            return Err(Error::DimensionMismatch {
                expected: ops.len(),
                found: coeffs.len(),
            });
        }
        let dim = ops
            .first()
            .map(|op| op.dim())
            .ok_or_else(|| Error::Validation("empty operator family".into()))?;
        let mut acc = CMatrix::zeros(dim, dim);
        for (c, op) in coeffs.iter().zip(ops) {
            check_dims(dim, op.dim())?;
            acc += op.matrix.scale(*c);
        }
        Ok(Self { matrix: acc })
    }

    /// `A B A` for Hermitian `A`, `B`.
    pub fn sandwich(&self, middle: &HermitianOperator) -> Result<Self> {
        check_dims(self.dim(), middle.dim())?;
        Ok(Self::from_matrix_unchecked(
            &self.matrix * &middle.matrix * &self.matrix,
        ))
    }

    /// Real-linear vectorization: real parts followed by imaginary parts.
    pub fn to_real_vec(&self) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|z| z.re)
            .chain(self.matrix.iter().map(|z| z.im))
            .collect()
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// `Σ f(λₖ) vₖvₖ†`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let d = self.eigenvalues.len();
        let diag = CVector::from_iterator(d, self.eigenvalues.iter().map(|&x| C64::new(f(x), 0.0)));
        let u = &self.eigenvectors;
        HermitianOperator::from_matrix_unchecked(u * CMatrix::from_diagonal(&diag) * u.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.map_eigenvalues(|x| x)
    }
}

/// Eigendecomposition of a Hermitian operator.
pub fn eigh(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    let d = h.dim();
    let eig =
        SymmetricEigen::try_new(h.matrix.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or_else(|| {
            Error::NoConvergence {
                what: format!("{d}x{d} Hermitian operator"),
            }
        })?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let norm = col.norm();
        eigenvectors.set_column(dst, &col.unscale(norm));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Smallest eigenvalue together with a unit eigenvector.
pub fn min_eigenvalue(h: &HermitianOperator) -> Result<(f64, CVector)> {
    let spec = eigh(h)?;
    Ok((spec.eigenvalues[0], spec.eigenvector(0)))
}

/// Principal square root of a positive semidefinite operator.
pub fn sqrt_psd(h: &HermitianOperator) -> Result<HermitianOperator> {
    let spec = eigh(h)?;
    let lowest = spec.eigenvalues[0];
    if lowest < -PSD_CLIP {
        return Err(Error::NotPsd {
            what: "operator".into(),
            min_eigenvalue: lowest,
        });
    }
    Ok(spec.map_eigenvalues(|x| x.max(0.0).sqrt()))
}

/// A strictly positive, unit-trace Hermitian operator with its cached spectrum.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    op: HermitianOperator,
    spectral: SpectralDecomposition,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        Self::with_floor(op, POSITIVITY_FLOOR)
    }

    pub fn with_floor(op: HermitianOperator, floor: f64) -> Result<Self> {
        let trace = op.trace();
        if (trace - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "density operator must have unit trace (found {trace})"
            )));
        }
        let spectral = eigh(&op)?;
        let lowest = spectral.eigenvalues[0];
        if lowest < floor {
            return Err(Error::SingularModel {
                min_eigenvalue: lowest,
                floor,
            });
        }
        Ok(Self { op, spectral })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectral.eigenvalues
    }
}

/// `ρ∘X = ½(ρX + Xρ)`.
pub fn sym_product(rho: &DensityOperator, x: &HermitianOperator) -> Result<HermitianOperator> {
    check_dims(rho.dim(), x.dim())?;
    let r = rho.matrix();
    let m = x.matrix();
    Ok(HermitianOperator::from_matrix_unchecked(
        (r * m + m * r).scale(0.5),
    ))
}

/// The unique Hermitian `X` with `ρ∘X = A`.
///
/// In the eigenbasis of `ρ = Σ sₖ|φₖ⟩⟨φₖ|` the solution is
/// `Xᵢⱼ = 2Aᵢⱼ/(sᵢ + sⱼ)`; positivity of `ρ` keeps every denominator away from 0.
pub fn solve_sym_product(
    rho: &DensityOperator,
    a: &HermitianOperator,
) -> Result<HermitianOperator> {
    check_dims(rho.dim(), a.dim())?;
    let spec = rho.spectral();
    let u = &spec.eigenvectors;
    let s = &spec.eigenvalues;
    let mut rotated = u.adjoint() * a.matrix() * u;
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            rotated[(i, j)] *= 2.0 / (s[i] + s[j]);
        }
    }
    Ok(HermitianOperator::from_matrix_unchecked(
        u * rotated * u.adjoint(),
    ))
}

/// Pauli matrices `σ₁, σ₂, σ₃`.
pub fn pauli() -> [HermitianOperator; 3] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        HermitianOperator::from_matrix_unchecked(CMatrix::from_row_slice(2, 2, &[z, one, one, z])),
        HermitianOperator::from_matrix_unchecked(CMatrix::from_row_slice(2, 2, &[z, -i, i, z])),
        HermitianOperator::from_matrix_unchecked(CMatrix::from_row_slice(2, 2, &[one, z, z, -one])),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_rho(p: &[f64]) -> DensityOperator {
        DensityOperator::new(HermitianOperator::from_diagonal(p).unwrap()).unwrap()
    }

    fn close(a: &HermitianOperator, b: &HermitianOperator, tol: f64) -> bool {
        (a.matrix() - b.matrix()).norm() <= tol
    }

    #[test]
    fn eigh_small_cases() {
        let id = HermitianOperator::identity(2);
        assert_eq!(eigh(&id).unwrap().eigenvalues, vec![1.0, 1.0]);

        let [_, _, s3] = pauli();
        let ev = eigh(&s3).unwrap().eigenvalues;
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);

        let rho = HermitianOperator::identity(2)
            .add(&s3.scale(0.6))
            .unwrap()
            .scale(0.5);
        let ev = eigh(&rho).unwrap().eigenvalues;
        assert!((ev[0] - 0.2).abs() < 1e-14 && (ev[1] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 1.0),
                C64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(
            HermitianOperator::new(m),
            Err(Error::Validation(_))
        ));
        assert!(HermitianOperator::new(CMatrix::zeros(2, 3)).is_err());
        assert!(HermitianOperator::new(CMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn sym_product_examples() {
        let rho = diag_rho(&[0.8, 0.2]);
        let id = HermitianOperator::identity(2);
        assert!(close(&sym_product(&rho, &id).unwrap(), rho.op(), 1e-15));
        let zero = HermitianOperator::zeros(2);
        assert!(close(&sym_product(&rho, &zero).unwrap(), &zero, 0.0));

        // hand multiplication: ½(ρσ₁ + σ₁ρ) = [[0, (0.8+0.2)/2], [.., 0]]
        let [s1, _, _] = pauli();
        let expected = s1.scale(0.5);
        assert!(close(&sym_product(&rho, &s1).unwrap(), &expected, 1e-15));

        assert!(sym_product(&rho, &HermitianOperator::identity(3)).is_err());
    }

    #[test]
    fn solve_sym_product_examples() {
        let rho = diag_rho(&[0.8, 0.2]);
        let x = solve_sym_product(&rho, rho.op()).unwrap();
        assert!(close(&x, &HermitianOperator::identity(2), 1e-14));

        let [s1, _, s3] = pauli();
        let x = solve_sym_product(&rho, &s3.scale(0.5)).unwrap();
        let expected = HermitianOperator::from_diagonal(&[0.625, -2.5]).unwrap();
        assert!(close(&x, &expected, 1e-13));

        let x = solve_sym_product(&rho, &s1.scale(0.5)).unwrap();
        assert!(close(&x, &s1, 1e-13));
    }

    #[test]
    fn density_operator_validation() {
        assert!(matches!(
            DensityOperator::new(HermitianOperator::from_diagonal(&[1.0, 0.0]).unwrap()),
            Err(Error::SingularModel { .. })
        ));
        assert!(
            DensityOperator::new(HermitianOperator::from_diagonal(&[0.7, 0.7]).unwrap()).is_err()
        );
    }

    #[test]
    fn sqrt_psd_examples() {
        let id = HermitianOperator::identity(3);
        assert!(close(&sqrt_psd(&id).unwrap(), &id, 1e-14));
        let r = sqrt_psd(&HermitianOperator::from_diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        assert!(close(
            &r,
            &HermitianOperator::from_diagonal(&[2.0, 3.0]).unwrap(),
            1e-14
        ));
        let r = sqrt_psd(&HermitianOperator::from_diagonal(&[1.0, 1.0, 0.64]).unwrap()).unwrap();
        assert!(close(
            &r,
            &HermitianOperator::from_diagonal(&[1.0, 1.0, 0.8]).unwrap(),
            1e-14
        ));

        // clipping band
        let r = sqrt_psd(&HermitianOperator::from_diagonal(&[1.0, -5e-11]).unwrap()).unwrap();
        assert!(close(
            &r,
            &HermitianOperator::from_diagonal(&[1.0, 0.0]).unwrap(),
            1e-14
        ));
        assert!(matches!(
            sqrt_psd(&HermitianOperator::from_diagonal(&[1.0, -1e-6]).unwrap()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn min_eigenvalue_examples() {
        let [s1, _, _] = pauli();
        assert!((min_eigenvalue(&HermitianOperator::identity(2)).unwrap().0 - 1.0).abs() < 1e-14);
        let (lo, v) = min_eigenvalue(&s1).unwrap();
        assert!((lo + 1.0).abs() < 1e-14);
        assert!((s1.expectation(&v) + 1.0).abs() < 1e-14);
        let d = HermitianOperator::from_diagonal(&[0.2, 0.8]).unwrap();
        assert!((min_eigenvalue(&d).unwrap().0 - 0.2).abs() < 1e-14);
    }
}
