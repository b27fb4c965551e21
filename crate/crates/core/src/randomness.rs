//! The randomness condition: `XρX` is the same operator for every unit
//! cotangent vector `X`.
//!
//! It is decided on one `J`-orthonormal cotangent basis `{Xᵢ}` through the
//! table `Bᵢⱼ = ½(XᵢρXⱼ + XⱼρXᵢ)`: the condition holds iff `Bᵢⱼ = δᵢⱼ C`.
//! Bilinearity carries the pattern from the basis to every unit vector, since
//! `XρX = Σᵢⱼ cᵢcⱼ Bᵢⱼ = |c|² C`.

use crate::error::{Error, Result};
use crate::model::{CotangentVector, StatisticalModel, TangentVector};
use crate::operator::HermitianOperator;
use crate::RVector;

/// Default Frobenius tolerance on table residuals.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Gram–Schmidt on the coordinate basis under the Gram matrix `J`.
pub fn orthonormal_cotangent_basis(model: &StatisticalModel) -> Vec<CotangentVector> {
    let n = model.n_params();
    let j = model.fisher();
    let mut basis: Vec<RVector> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = RVector::zeros(n);
        v[i] = 1.0;
        // modified Gram–Schmidt, applied twice for round-off
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&(j * &v));
                v -= b.scale(proj);
            }
        }
        let norm = v.dot(&(j * &v)).sqrt();
        basis.push(v.unscale(norm));
    }
    basis.into_iter().map(CotangentVector).collect()
}

#[derive(Debug, Clone)]
pub struct BilinearTable {
    pub basis: Vec<CotangentVector>,
    /// `blocks[i][j] = ½(XᵢρXⱼ + XⱼρXᵢ)`.
    pub blocks: Vec<Vec<HermitianOperator>>,
}

impl BilinearTable {
    pub fn block(&self, i: usize, j: usize) -> &HermitianOperator {
        &self.blocks[i][j]
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

pub fn bilinear_table(model: &StatisticalModel) -> Result<BilinearTable> {
    bilinear_table_in_basis(model, orthonormal_cotangent_basis(model))
}

/// Table over a caller-supplied basis (expected `J`-orthonormal).
pub fn bilinear_table_in_basis(
    model: &StatisticalModel,
    basis: Vec<CotangentVector>,
) -> Result<BilinearTable> {
    let ops = basis
        .iter()
        .map(|c| model.cotangent_operator(c))
        .collect::<Result<Vec<_>>>()?;
    let rho = model.rho().matrix();
    let n = ops.len();
    let mut blocks: Vec<Vec<HermitianOperator>> = vec![Vec::with_capacity(n); n];
    for i in 0..n {
        for j in 0..n {
            let block = if j < i {
                blocks[j][i].clone()
            } else {
                let xi = ops[i].matrix();
                let xj = ops[j].matrix();
                HermitianOperator::from_matrix_unchecked((xi * rho * xj + xj * rho * xi).scale(0.5))
            };
            blocks[i].push(block);
        }
    }
    Ok(BilinearTable { basis, blocks })
}

#[derive(Debug, Clone)]
pub struct RandomnessVerdict {
    pub verdict: bool,
    /// The common value `C = XρX` when the condition holds.
    pub c: Option<HermitianOperator>,
    /// Zero-based first offending pair: `(i, j)` with `i < j` for a nonzero
    /// off-diagonal block, else `(i, i)` when `Bᵢᵢ` differs from `B₀₀`.
    pub witness: Option<(usize, usize)>,
    /// Largest table residual (Frobenius).
    pub score: f64,
}

pub fn is_random_model(model: &StatisticalModel, tol: f64) -> Result<RandomnessVerdict> {
    let table = bilinear_table(model)?;
    Ok(verdict_from_table(&table, tol))
}

pub fn verdict_from_table(table: &BilinearTable, tol: f64) -> RandomnessVerdict {
    let n = table.len();
    let reference = table.block(0, 0);
    let mut residuals: Vec<((usize, usize), f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            residuals.push(((i, j), table.block(i, j).frobenius_norm()));
        }
    }
    for i in 1..n {
        let diff = (table.block(i, i).matrix() - reference.matrix()).norm();
        residuals.push(((i, i), diff));
    }
    let score = residuals.iter().fold(0.0f64, |acc, (_, r)| acc.max(*r));
    let verdict = score <= tol;
    // off-diagonal pairs are listed first, so the first offender prefers them
    let witness = residuals
        .iter()
        .find(|(_, r)| *r > tol)
        .map(|(pair, _)| *pair);
    RandomnessVerdict {
        verdict,
        c: verdict.then(|| reference.clone()),
        witness: if verdict { None } else { witness },
        score,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitComplementCheck {
    pub holds: bool,
    /// `‖XρX − (Id − ρ)‖` (Frobenius).
    pub residual: f64,
}

/// For a qubit model and a unit tangent `e`, checks `XρX = Id − ρ` where `X`
/// is the cotangent operator with the same coordinates as `e`.
pub fn qubit_complement_check(
    model: &StatisticalModel,
    e: &TangentVector,
    tol: f64,
) -> Result<QubitComplementCheck> {
    if model.dim() != 2 {
        return Err(Error::Validation(format!(
            "the qubit identity applies to dimension 2 (got {})",
            model.dim()
        )));
    }
    let norm = model.tangent_norm(e)?;
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "tangent vector must have unit SLD norm (got {norm})"
        )));
    }
    let x = model.cotangent_operator(&CotangentVector(e.0.clone()))?;
    let xrx = x.sandwich(model.rho().op())?;
    let complement = HermitianOperator::identity(2).sub(model.rho().op())?;
    let residual = (xrx.matrix() - complement.matrix()).norm();
    Ok(QubitComplementCheck {
        holds: residual <= tol,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_model;
    use crate::RMatrix;

    #[test]
    fn basis_examples() {
        let m = builtin_model("qubit-full", &[0.0]).unwrap();
        let b = orthonormal_cotangent_basis(&m);
        for (i, c) in b.iter().enumerate() {
            assert!((c.0.clone() - CotangentVector::basis(3, i).0).amax() < 1e-14);
        }
        let m = builtin_model("qubit-full", &[0.6]).unwrap();
        let b = orthonormal_cotangent_basis(&m);
        assert!((b[2].0[2] - 0.8).abs() < 1e-14);
        let q = builtin_model("qutrit-diagonal", &[0.5, 0.25, 0.25]).unwrap();
        let b = orthonormal_cotangent_basis(&q);
        let gram = RMatrix::from_fn(2, 2, |i, j| q.sld_inner(&b[i], &b[j]).unwrap());
        assert!((gram - RMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn qubit_table_is_id_minus_rho() {
        for alpha in [-0.5, 0.0, 0.6] {
            let m = builtin_model("qubit-full", &[alpha]).unwrap();
            let t = bilinear_table(&m).unwrap();
            let complement = HermitianOperator::identity(2).sub(m.rho().op()).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let target = if i == j {
                        complement.matrix().clone()
                    } else {
                        complement.matrix().scale(0.0)
                    };
                    assert!((t.block(i, j).matrix() - target).norm() < 1e-12);
                }
            }
            let v = is_random_model(&m, DEFAULT_TOL).unwrap();
            assert!(v.verdict && v.witness.is_none());
            assert!((v.c.unwrap().matrix() - complement.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn qutrit_is_not_random() {
        let q = builtin_model("qutrit-diagonal", &[0.5, 0.25, 0.25]).unwrap();
        let t = bilinear_table(&q).unwrap();
        // brute force: basis operators are diagonal, B₁₂ = diag(x₁ρx₂)
        let x: Vec<Vec<f64>> = t
            .basis
            .iter()
            .map(|c| {
                let op = q.cotangent_operator(c).unwrap();
                (0..3).map(|k| op.matrix()[(k, k)].re).collect()
            })
            .collect();
        let p = [0.5, 0.25, 0.25];
        let b12: Vec<f64> = (0..3).map(|k| x[0][k] * p[k] * x[1][k]).collect();
        let oracle_norm = b12.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(oracle_norm > 0.1);
        assert!((t.block(0, 1).frobenius_norm() - oracle_norm).abs() < 1e-12);

        let v = is_random_model(&q, DEFAULT_TOL).unwrap();
        assert!(!v.verdict);
        assert!(v.c.is_none());
        assert_eq!(v.witness, Some((0, 1)));
    }

    #[test]
    fn one_parameter_models_are_random() {
        let m = builtin_model("qubit-full", &[0.3])
            .unwrap()
            .submodel(&[2])
            .unwrap();
        let t = bilinear_table(&m).unwrap();
        assert_eq!(t.len(), 1);
        assert!(is_random_model(&m, DEFAULT_TOL).unwrap().verdict);
        let q = builtin_model("qutrit-diagonal", &[0.2, 0.3, 0.5])
            .unwrap()
            .submodel(&[1])
            .unwrap();
        let v = is_random_model(&q, DEFAULT_TOL).unwrap();
        assert!(v.verdict);
        assert!((v.c.unwrap().trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_complement_examples() {
        let m = builtin_model("qubit-full", &[0.6]).unwrap();
        let f1 = TangentVector::basis(3, 0);
        assert!(qubit_complement_check(&m, &f1, 1e-12).unwrap().holds);
        // σ₁ρσ₁ = diag(0.2, 0.8)
        let x = m.cotangent_operator(&CotangentVector::basis(3, 0)).unwrap();
        let xrx = x.sandwich(m.rho().op()).unwrap();
        assert!((xrx.matrix()[(0, 0)].re - 0.2).abs() < 1e-14);
        assert!((xrx.matrix()[(1, 1)].re - 0.8).abs() < 1e-14);

        let f3 = TangentVector::from_slice(&[0.0, 0.0, 0.8]);
        assert!(qubit_complement_check(&m, &f3, 1e-12).unwrap().holds);
        let mixed = TangentVector::from_slice(&[0.6, 0.0, 0.8 * 0.8]);
        assert!(qubit_complement_check(&m, &mixed, 1e-12).unwrap().holds);
        assert!(qubit_complement_check(&m, &TangentVector::basis(3, 2), 1e-12).is_err());
    }
}
