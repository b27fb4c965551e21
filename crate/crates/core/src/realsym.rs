//! Real symmetric matrix helpers for parameter-space quantities (`J`, `G`, `V`).

use nalgebra::linalg::SymmetricEigen;

use crate::error::{Error, Result};
use crate::{RMatrix, RVector};

/// Eigenvalues ascending, eigenvectors as matching columns.
pub fn sym_eigen(m: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let n = m.nrows();
    let sym = (m + m.transpose()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, 1e-15, 10_000).ok_or_else(|| Error::NoConvergence {
        what: format!("{n}x{n} real symmetric matrix"),
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

pub fn min_eig(m: &RMatrix) -> Result<f64> {
    Ok(sym_eigen(m)?.0[0])
}

pub fn max_eig(m: &RMatrix) -> Result<f64> {
    let (values, _) = sym_eigen(m)?;
    Ok(values[values.len() - 1])
}

/// `Σ f(λₖ) vₖvₖᵀ`.
pub fn map_spectrum(m: &RMatrix, f: impl Fn(f64) -> f64) -> Result<RMatrix> {
    let (values, vectors) = sym_eigen(m)?;
    let diag = RVector::from_iterator(values.len(), values.iter().map(|&x| f(x)));
    let out = &vectors * RMatrix::from_diagonal(&diag) * vectors.transpose();
    Ok(symmetrize(&out))
}

/// Fails unless the smallest eigenvalue exceeds `floor`.
pub fn require_pd(m: &RMatrix, what: &str, floor: f64) -> Result<()> {
    let lowest = min_eig(m)?;
    if lowest > floor {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            what: what.into(),
            min_eigenvalue: lowest,
        })
    }
}

pub fn sqrt_spd(m: &RMatrix) -> Result<RMatrix> {
    map_spectrum(m, |x| x.max(0.0).sqrt())
}

pub fn inv_sqrt_spd(m: &RMatrix) -> Result<RMatrix> {
    map_spectrum(m, |x| 1.0 / x.sqrt())
}

pub fn symmetrize(m: &RMatrix) -> RMatrix {
    (m + m.transpose()).scale(0.5)
}

/// Maximum absolute entrywise asymmetry.
pub fn asymmetry(m: &RMatrix) -> f64 {
    (m - m.transpose()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_is_ascending_and_reconstructs() {
        let m = RMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let (values, vectors) = sym_eigen(&m).unwrap();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let back =
            &vectors * RMatrix::from_diagonal(&RVector::from_vec(values)) * vectors.transpose();
        assert!((back - &m).norm() < 1e-12);
    }

    #[test]
    fn sqrt_and_inverse_sqrt() {
        let m = RMatrix::from_row_slice(2, 2, &[6.0, 4.0, 4.0, 8.0]);
        let r = sqrt_spd(&m).unwrap();
        assert!((&r * &r - &m).norm() < 1e-12);
        let ir = inv_sqrt_spd(&m).unwrap();
        assert!((&ir * &m * &ir - RMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(require_pd(&RMatrix::from_diagonal_element(2, 2, -1.0), "G", 0.0).is_err());
    }
}
