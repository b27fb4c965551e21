//! A statistical model at a point: `ρ` together with `n` tangent operators
//! `∂ᵢρ`, their SLDs `Lᵢ` (`ρ∘Lᵢ = ∂ᵢρ`) and the SLD Fisher matrix
//! `Jᵢⱼ = tr(∂ⱼρ Lᵢ) = Re tr(ρLᵢLⱼ)`.

use nalgebra::linalg::SVD;

use crate::error::{Error, Result};
use crate::operator::{pauli, solve_sym_product, DensityOperator, HermitianOperator};
use crate::realsym;
use crate::{RMatrix, RVector, C64};

const TANGENT_TRACE_TOL: f64 = 1e-10;
const TANGENT_INDEPENDENCE_TOL: f64 = 1e-8;
const FISHER_PD_FLOOR: f64 = 1e-10;

/// Coordinates `ξ` of a tangent vector in the basis `{∂ᵢρ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(pub RVector);

/// Coordinates `c` of a cotangent vector in the basis `{Lᵢ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentVector(pub RVector);

macro_rules! coords_impl {
    ($ty:ident) => {
        impl $ty {
            pub fn new(coords: RVector) -> Self {
                Self(coords)
            }

            pub fn from_slice(coords: &[f64]) -> Self {
                Self(RVector::from_column_slice(coords))
            }

            pub fn zeros(n: usize) -> Self {
                Self(RVector::zeros(n))
            }

            /// The `i`-th coordinate basis vector.
            pub fn basis(n: usize, i: usize) -> Self {
                let mut v = RVector::zeros(n);
                v[i] = 1.0;
                Self(v)
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn coords(&self) -> &RVector {
                &self.0
            }

            pub fn scale(&self, factor: f64) -> Self {
                Self(self.0.scale(factor))
            }
        }
    };
}

coords_impl!(TangentVector);
coords_impl!(CotangentVector);

#[derive(Debug, Clone)]
pub struct StatisticalModel {
    rho: DensityOperator,
    tangent: Vec<HermitianOperator>,
    slds: Vec<HermitianOperator>,
    fisher: RMatrix,
    fisher_inv: RMatrix,
}

impl StatisticalModel {
    /// Solves for the SLDs and caches the Fisher matrix.
    pub fn new(rho: DensityOperator, tangent: Vec<HermitianOperator>) -> Result<Self> {
        let d = rho.dim();
        if tangent.is_empty() {
            return Err(Error::Validation(
                "model needs at least one tangent operator".into(),
            ));
        }
        for (i, t) in tangent.iter().enumerate() {
            if t.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: t.dim(),
                });
            }
            let tr = t.trace();
            if tr.abs() > TANGENT_TRACE_TOL {
                return Err(Error::Validation(format!(
                    "tangent operator {i} has trace {tr:e}; derivatives of unit-trace states are traceless"
                )));
            }
        }
        let n = tangent.len();
        let rows = 2 * d * d;
        if n > rows {
            return Err(Error::Validation(format!(
                "{n} tangent operators cannot be independent in dimension {d}"
            )));
        }
        let stack = RMatrix::from_fn(rows, n, |r, c| tangent[c].to_real_vec()[r]);
        let smallest = SVD::new(stack, false, false)
            .singular_values
            .iter()
            .fold(f64::INFINITY, |acc, &s| acc.min(s));
        if smallest <= TANGENT_INDEPENDENCE_TOL {
            return Err(Error::Validation(format!(
                "tangent operators are linearly dependent (smallest singular value {smallest:e})"
            )));
        }

        let slds = tangent
            .iter()
            .map(|t| solve_sym_product(&rho, t))
            .collect::<Result<Vec<_>>>()?;
        let mut fisher = RMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                fisher[(i, j)] = (tangent[j].matrix() * slds[i].matrix()).trace().re;
            }
        }
        let fisher = realsym::symmetrize(&fisher);
        realsym::require_pd(&fisher, "SLD Fisher matrix", FISHER_PD_FLOOR)?;
        let fisher_inv = realsym::map_spectrum(&fisher, |x| 1.0 / x)?;
        Ok(Self {
            rho,
            tangent,
            slds,
            fisher,
            fisher_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// Number of parameters `n`.
    pub fn n_params(&self) -> usize {
        self.tangent.len()
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn tangent(&self) -> &[HermitianOperator] {
        &self.tangent
    }

    pub fn slds(&self) -> &[HermitianOperator] {
        &self.slds
    }

    pub fn fisher(&self) -> &RMatrix {
        &self.fisher
    }

    pub fn fisher_inv(&self) -> &RMatrix {
        &self.fisher_inv
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n_params() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n_params(),
                found: len,
            })
        }
    }

    /// SLD inner product `c₁ᵀJc₂` of two cotangent vectors.
    pub fn sld_inner(&self, c1: &CotangentVector, c2: &CotangentVector) -> Result<f64> {
        self.check_len(c1.len())?;
        self.check_len(c2.len())?;
        Ok(c1.0.dot(&(&self.fisher * &c2.0)))
    }

    /// `√(ξᵀJξ)`.
    pub fn tangent_norm(&self, xi: &TangentVector) -> Result<f64> {
        self.check_len(xi.len())?;
        Ok(xi.0.dot(&(&self.fisher * &xi.0)).max(0.0).sqrt())
    }

    pub fn cotangent_norm(&self, c: &CotangentVector) -> Result<f64> {
        Ok(self.sld_inner(c, c)?.max(0.0).sqrt())
    }

    /// Pairing `⟨X, x⟩ = tr(X x) = cᵀJξ`.
    pub fn pairing(&self, c: &CotangentVector, xi: &TangentVector) -> Result<f64> {
        self.check_len(c.len())?;
        self.check_len(xi.len())?;
        Ok(c.0.dot(&(&self.fisher * &xi.0)))
    }

    /// `Σ cⁱ Lᵢ`.
    pub fn cotangent_operator(&self, c: &CotangentVector) -> Result<HermitianOperator> {
        self.check_len(c.len())?;
        HermitianOperator::linear_combination(c.0.as_slice(), &self.slds)
    }

    /// `Σ ξⁱ ∂ᵢρ`.
    pub fn tangent_operator(&self, xi: &TangentVector) -> Result<HermitianOperator> {
        self.check_len(xi.len())?;
        HermitianOperator::linear_combination(xi.0.as_slice(), &self.tangent)
    }

    /// The model restricted to the tangent directions in `indices` (same `ρ`).
    pub fn submodel(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Validation(
                "submodel needs at least one direction".into(),
            ));
        }
        let mut seen = vec![false; self.n_params()];
        for &i in indices {
            if i >= self.n_params() {
                return Err(Error::Validation(format!(
                    "tangent index {i} out of range for a {}-parameter model",
                    self.n_params()
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Validation(format!("duplicate tangent index {i}")));
            }
        }
        let tangent = indices.iter().map(|&i| self.tangent[i].clone()).collect();
        Self::new(self.rho.clone(), tangent)
    }
}

/// Builtin model families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinModel {
    /// `ρ = ½(Id + ασ₃)` with the full traceless tangent space `σᵢ/2`.
    QubitFull { alpha: f64 },
    /// Same state, tangent space spanned by `σ₁/2, σ₂/2` only.
    QubitEquatorial { alpha: f64 },
    /// Classical qutrit `diag(p)` with tangents `diag(1,0,-1)`, `diag(0,1,-1)`.
    QutritDiagonal { probs: [f64; 3] },
}

impl BuiltinModel {
    pub const NAMES: [&'static str; 3] = ["qubit-full", "qubit-equatorial", "qutrit-diagonal"];

    /// Parses a family name and its parameter list.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let expect = |count: usize| {
            if params.len() == count {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "model {name} takes {count} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match name {
            "qubit-full" => {
                expect(1)?;
                Ok(Self::QubitFull { alpha: params[0] })
            }
            "qubit-equatorial" => {
                expect(1)?;
                Ok(Self::QubitEquatorial { alpha: params[0] })
            }
            "qutrit-diagonal" => {
                expect(3)?;
                Ok(Self::QutritDiagonal {
                    probs: [params[0], params[1], params[2]],
                })
            }
            other => Err(Error::Validation(format!(
                "unknown model {other:?}; expected one of {}",
                Self::NAMES.join(", ")
            ))),
        }
    }

    pub fn build(&self) -> Result<StatisticalModel> {
        match *self {
            Self::QubitFull { alpha } => qubit(alpha, &[0, 1, 2]),
            Self::QubitEquatorial { alpha } => qubit(alpha, &[0, 1]),
            Self::QutritDiagonal { probs } => qutrit_diagonal(probs),
        }
    }
}

/// Convenience wrapper over [`BuiltinModel::from_name`] and [`BuiltinModel::build`].
pub fn builtin_model(name: &str, params: &[f64]) -> Result<StatisticalModel> {
    BuiltinModel::from_name(name, params)?.build()
}

fn qubit(alpha: f64, directions: &[usize]) -> Result<StatisticalModel> {
    if !(alpha.is_finite() && alpha.abs() < 1.0) {
        return Err(Error::Validation(format!(
            "qubit Bloch parameter alpha must satisfy -1 < alpha < 1 (got {alpha})"
        )));
    }
    let sigma = pauli();
    let rho = HermitianOperator::identity(2)
        .add(&sigma[2].scale(alpha))?
        .scale(0.5);
    let rho = DensityOperator::new(rho)?;
    let tangent = directions.iter().map(|&i| sigma[i].scale(0.5)).collect();
    StatisticalModel::new(rho, tangent)
}

fn qutrit_diagonal(probs: [f64; 3]) -> Result<StatisticalModel> {
    if probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(Error::Validation(format!(
            "qutrit probabilities must be positive (got {probs:?})"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "qutrit probabilities must sum to 1 (got {total})"
        )));
    }
    let rho = DensityOperator::new(HermitianOperator::from_diagonal(&probs)?)?;
    let tangent = vec![
        HermitianOperator::from_diagonal(&[1.0, 0.0, -1.0])?,
        HermitianOperator::from_diagonal(&[0.0, 1.0, -1.0])?,
    ];
    StatisticalModel::new(rho, tangent)
}

/// Re tr(ρXY), the real part of the operator inner product underlying `J`.
pub fn re_tr_rho_xy(rho: &DensityOperator, x: &HermitianOperator, y: &HermitianOperator) -> f64 {
    (rho.matrix() * x.matrix() * y.matrix()).trace().re
}

/// Helper for tests and the CLI: Hermitian operator from real and imaginary parts.
pub fn operator_from_parts(re: &RMatrix, im: &RMatrix, tol: f64) -> Result<HermitianOperator> {
    if re.shape() != im.shape() {
        return Err(Error::Validation(format!(
            "real part is {:?} but imaginary part is {:?}",
            re.shape(),
            im.shape()
        )));
    }
    let m = re.zip_map(im, C64::new);
    HermitianOperator::with_tolerance(m, tol)
}
