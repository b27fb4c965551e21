//! Finite-support random measurements.
//!
//! A [`RandomMeasurement`] is a probability distribution over atoms
//! `(ξₖ, cₖ)`: with probability `wₖ` the observable `Xₖ = Σ cₖⁱ Lᵢ` is
//! measured projectively and the outcome `λ` is reported as the estimate
//! `λ·ξₖ`. Atoms may carry symmetric shifts: each shift `s` adds `±s` with
//! probability ½ each, independently of everything else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{CotangentVector, StatisticalModel, TangentVector};
use crate::operator::eigh;
use crate::realsym;
use crate::{RMatrix, RVector};

/// Residual tolerance used when an operation requires local unbiasedness.
pub const UNBIASED_TOL: f64 = 1e-8;
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Positive definite weight `G` of the deviation `tr(GV)`.
///
/// [`WeightMatrix::semidefinite`] admits rank-deficient weights; they are
/// only accepted by the dual solver (lifted submodel weights are singular).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    entries: RMatrix,
    definite: bool,
}

impl WeightMatrix {
    pub fn new(entries: RMatrix) -> Result<Self> {
        Self::check_symmetric(&entries)?;
        realsym::require_pd(&entries, "weight matrix", 1e-10)?;
        Ok(Self {
            entries: realsym::symmetrize(&entries),
            definite: true,
        })
    }

    pub fn semidefinite(entries: RMatrix) -> Result<Self> {
        Self::check_symmetric(&entries)?;
        let lowest = realsym::min_eig(&entries)?;
        let scale = entries.amax().max(1.0);
        if lowest < -1e-12 * scale {
            return Err(Error::NotPsd {
                what: "weight matrix".into(),
                min_eigenvalue: lowest,
            });
        }
        Ok(Self {
            entries: realsym::symmetrize(&entries),
            definite: lowest > 1e-10,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: RMatrix::identity(n, n),
            definite: true,
        }
    }

    fn check_symmetric(entries: &RMatrix) -> Result<()> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Validation(format!(
                "weight matrix must be square and non-empty (got {:?})",
                entries.shape()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(
                "weight matrix has non-finite entries".into(),
            ));
        }
        let asym = realsym::asymmetry(entries);
        if asym > 1e-12 * entries.amax().max(1.0) {
            return Err(Error::Validation(format!(
                "weight matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &RMatrix {
        &self.entries
    }

    pub fn is_definite(&self) -> bool {
        self.definite
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        if factor > 0.0 {
            Ok(Self {
                entries: self.entries.scale(factor),
                definite: self.definite,
            })
        } else {
            Err(Error::Validation(format!(
                "weight scale must be positive (got {factor})"
            )))
        }
    }

    /// `ξᵀGξ`.
    pub fn quadratic(&self, xi: &RVector) -> f64 {
        xi.dot(&(&self.entries * xi))
    }

    fn require_definite(&self) -> Result<()> {
        if self.definite {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite {
                what: "weight matrix".into(),
                min_eigenvalue: realsym::min_eig(&self.entries)?,
            })
        }
    }

    fn check_model(&self, model: &StatisticalModel) -> Result<()> {
        if self.dim() == model.n_params() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: model.n_params(),
                found: self.dim(),
            })
        }
    }
}

/// Symmetric positive semidefinite `n×n` covariance in tangent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(RMatrix);

impl CovarianceMatrix {
    pub fn new(entries: RMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Validation("covariance must be square".into()));
        }
        if realsym::asymmetry(&entries) > 1e-10 * entries.amax().max(1.0) {
            return Err(Error::Validation("covariance is not symmetric".into()));
        }
        let lowest = realsym::min_eig(&entries)?;
        if lowest < -1e-10 {
            return Err(Error::NotPsd {
                what: "covariance".into(),
                min_eigenvalue: lowest,
            });
        }
        Ok(Self(realsym::symmetrize(&entries)))
    }

    fn from_unchecked(entries: RMatrix) -> Self {
        Self(realsym::symmetrize(&entries))
    }

    pub fn entries(&self) -> &RMatrix {
        &self.0
    }

    pub fn into_entries(self) -> RMatrix {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: f64,
    /// Estimate direction `ξ`; outcome `λ` is reported as `λξ`.
    pub direction: TangentVector,
    /// Observable `X = Σ cⁱ Lᵢ`.
    pub observable: CotangentVector,
    /// Independent symmetric shifts `±s`.
    pub shifts: Vec<TangentVector>,
}

impl Atom {
    pub fn new(weight: f64, direction: TangentVector, observable: CotangentVector) -> Self {
        Self {
            weight,
            direction,
            observable,
            shifts: Vec::new(),
        }
    }

    fn shift_second_moment(&self, n: usize) -> RMatrix {
        self.shifts
            .iter()
            .fold(RMatrix::zeros(n, n), |acc, s| acc + &s.0 * s.0.transpose())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomMeasurement {
    atoms: Vec<Atom>,
}

impl RandomMeasurement {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let first = atoms.first().ok_or_else(|| {
            Error::Validation("random measurement needs at least one atom".into())
        })?;
        let n = first.direction.len();
        let mut total = 0.0;
        for (k, atom) in atoms.iter().enumerate() {
            if !(atom.weight > 0.0 && atom.weight.is_finite()) {
                return Err(Error::Validation(format!(
                    "atom {k} has non-positive weight {}",
                    atom.weight
                )));
            }
            let lens = [atom.direction.len(), atom.observable.len()]
                .into_iter()
                .chain(atom.shifts.iter().map(|s| s.len()));
            for len in lens {
                if len != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: len,
                    });
                }
            }
            let finite = atom
                .direction
                .0
                .iter()
                .chain(atom.observable.0.iter())
                .chain(atom.shifts.iter().flat_map(|s| s.0.iter()))
                .all(|x| x.is_finite());
            if !finite {
                return Err(Error::Validation(format!(
                    "atom {k} has non-finite coordinates"
                )));
            }
            total += atom.weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Validation(format!(
                "atom weights must sum to 1 (got {total})"
            )));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn n_params(&self) -> usize {
        self.atoms[0].direction.len()
    }

    /// `λ·self + (1−λ)·other`.
    pub fn mixture(&self, other: &Self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Validation(format!(
                "mixture weight must lie in (0, 1) (got {lambda})"
            )));
        }
        fn scaled(p: &RandomMeasurement, f: f64) -> impl Iterator<Item = Atom> + '_ {
            p.atoms.iter().map(move |a| Atom {
                weight: a.weight * f,
                ..a.clone()
            })
        }
        let atoms = scaled(self, lambda)
            .chain(scaled(other, 1.0 - lambda))
            .collect();
        let mut out = Self { atoms };
        out.renormalize();
        Self::new(out.atoms)
    }

    fn renormalize(&mut self) {
        let total: f64 = self.atoms.iter().map(|a| a.weight).sum();
        for a in &mut self.atoms {
            a.weight /= total;
        }
    }

    fn check_model(&self, model: &StatisticalModel) -> Result<()> {
        if self.n_params() == model.n_params() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: model.n_params(),
                found: self.n_params(),
            })
        }
    }
}

/// Residuals of the two local-unbiasedness conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbiasednessReport {
    pub unbiased: bool,
    /// Frobenius norm of `Σₖ wₖ ξₖ(Jcₖ)ᵀ − Id`.
    pub jacobian_residual: f64,
    /// Euclidean norm of `Σₖ wₖ tr(ρXₖ) ξₖ`.
    pub mean_residual: f64,
}

pub fn is_locally_unbiased(
    model: &StatisticalModel,
    p: &RandomMeasurement,
    tol: f64,
) -> Result<UnbiasednessReport> {
    p.check_model(model)?;
    let n = model.n_params();
    let j = model.fisher();
    let mut jac = RMatrix::zeros(n, n);
    let mut mean = RVector::zeros(n);
    for atom in &p.atoms {
        let jc = j * &atom.observable.0;
        jac += (&atom.direction.0 * jc.transpose()).scale(atom.weight);
        let x = model.cotangent_operator(&atom.observable)?;
        let expectation = (model.rho().matrix() * x.matrix()).trace().re;
        mean += atom.direction.0.scale(atom.weight * expectation);
    }
    let jacobian_residual = (jac - RMatrix::identity(n, n)).norm();
    let mean_residual = mean.norm();
    Ok(UnbiasednessReport {
        unbiased: jacobian_residual <= tol && mean_residual <= tol,
        jacobian_residual,
        mean_residual,
    })
}

fn require_unbiased(model: &StatisticalModel, p: &RandomMeasurement) -> Result<()> {
    let report = is_locally_unbiased(model, p, UNBIASED_TOL)?;
    if report.unbiased {
        Ok(())
    } else {
        Err(Error::NotLocallyUnbiased {
            jacobian_residual: report.jacobian_residual,
            mean_residual: report.mean_residual,
        })
    }
}

/// `V = Σₖ wₖ (cₖᵀJcₖ) ξₖξₖᵀ` plus the second moment of any shifts.
pub fn covariance(model: &StatisticalModel, p: &RandomMeasurement) -> Result<CovarianceMatrix> {
    require_unbiased(model, p)?;
    let n = model.n_params();
    let j = model.fisher();
    let mut v = RMatrix::zeros(n, n);
    for atom in &p.atoms {
        let c = &atom.observable.0;
        let norm_sq = c.dot(&(j * c));
        v += (&atom.direction.0 * atom.direction.0.transpose()).scale(atom.weight * norm_sq);
        v += atom.shift_second_moment(n).scale(atom.weight);
    }
    Ok(CovarianceMatrix::from_unchecked(v))
}

/// `tr(G·V)`.
pub fn deviation(model: &StatisticalModel, g: &WeightMatrix, p: &RandomMeasurement) -> Result<f64> {
    g.check_model(model)?;
    let v = covariance(model, p)?;
    Ok((g.entries() * v.entries()).trace())
}

/// The `J`-self-adjoint positive solution of `WᵀJW = G`:
/// `W = J^{-1/2} (J^{-1/2} G J^{-1/2})^{1/2} J^{1/2}`.
pub fn optimal_weight_operator(model: &StatisticalModel, g: &WeightMatrix) -> Result<RMatrix> {
    g.check_model(model)?;
    g.require_definite()?;
    let j_half = realsym::sqrt_spd(model.fisher())?;
    let j_inv_half = realsym::inv_sqrt_spd(model.fisher())?;
    let whitened = realsym::symmetrize(&(&j_inv_half * g.entries() * &j_inv_half));
    let root = realsym::sqrt_spd(&whitened)?;
    Ok(&j_inv_half * root * &j_half)
}

/// `(tr W)²`, the minimum deviation over locally unbiased random measurements.
pub fn optimal_random_bound(model: &StatisticalModel, g: &WeightMatrix) -> Result<f64> {
    let w = optimal_weight_operator(model, g)?;
    Ok(w.trace().powi(2))
}

/// `J`-orthonormal eigenpairs `(μᵢ, eᵢ)` of `W`, eigenvalues ascending.
fn weight_eigenpairs(
    model: &StatisticalModel,
    g: &WeightMatrix,
) -> Result<(RMatrix, Vec<f64>, RMatrix)> {
    g.check_model(model)?;
    g.require_definite()?;
    let j_inv_half = realsym::inv_sqrt_spd(model.fisher())?;
    let whitened = realsym::symmetrize(&(&j_inv_half * g.entries() * &j_inv_half));
    let (values, vectors) = realsym::sym_eigen(&whitened)?;
    let mu: Vec<f64> = values.iter().map(|&x| x.max(0.0).sqrt()).collect();
    // W = J^{-1/2} P^{1/2} J^{1/2}; P^{1/2}u = μu gives We = μe for e = J^{-1/2}u.
    let e = &j_inv_half * vectors;
    let w = optimal_weight_operator(model, g)?;
    Ok((w, mu, e))
}

/// The optimal random measurement: with `W' = W / tr W` and its
/// `J`-orthonormal eigenpairs `(W'ᵢ, eᵢ)`, atom `i` has weight `W'ᵢ`,
/// direction `eᵢ / W'ᵢ` and observable coordinates `eᵢ`.
pub fn optimal_random_measurement(
    model: &StatisticalModel,
    g: &WeightMatrix,
) -> Result<RandomMeasurement> {
    let (w, mu, e) = weight_eigenpairs(model, g)?;
    let trace = w.trace();
    if let Some(bad) = mu.iter().find(|&&m| m <= 0.0) {
        return Err(Error::NotPositiveDefinite {
            what: "optimal weight operator".into(),
            min_eigenvalue: *bad,
        });
    }
    let mut atoms: Vec<Atom> = mu
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let weight = m / trace;
            let ei = e.column(i).into_owned();
            Atom::new(
                weight,
                TangentVector(ei.unscale(weight)),
                CotangentVector(ei),
            )
        })
        .collect();
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    for a in &mut atoms {
        a.weight /= total;
    }
    RandomMeasurement::new(atoms)
}

/// The conic map `G ↦ (tr W)·W⁻¹J⁻¹`, the covariance of the optimal random
/// measurement for `G`.
pub fn q_r_map(model: &StatisticalModel, g: &WeightMatrix) -> Result<CovarianceMatrix> {
    let w = optimal_weight_operator(model, g)?;
    let w_inv = w
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Validation("optimal weight operator is singular".into()))?;
    Ok(CovarianceMatrix::from_unchecked(
        (w_inv * model.fisher_inv()).scale(w.trace()),
    ))
}

/// Lagrangian slack of a claimed dual multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateGap {
    /// `Σₖ wₖ [ (ξₖᵀGξₖ)(cₖᵀJcₖ) + shifts − cₖᵀJaξₖ − S ]`.
    pub gap: f64,
    /// `deviation − tr a − S`; equals `gap` for locally unbiased `p`.
    pub identity_gap: f64,
    /// Per-atom integrand values.
    pub integrands: Vec<f64>,
    pub min_integrand: f64,
}

impl CertificateGap {
    pub fn pointwise_nonnegative(&self, tol: f64) -> bool {
        self.min_integrand >= -tol
    }
}

pub fn random_certificate_gap(
    model: &StatisticalModel,
    g: &WeightMatrix,
    p: &RandomMeasurement,
    a: &RMatrix,
    s: f64,
) -> Result<CertificateGap> {
    g.check_model(model)?;
    p.check_model(model)?;
    let n = model.n_params();
    if a.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.nrows(),
        });
    }
    let j = model.fisher();
    let integrands: Vec<f64> = p
        .atoms
        .iter()
        .map(|atom| {
            let xi = &atom.direction.0;
            let c = &atom.observable.0;
            let shift_risk: f64 = atom.shifts.iter().map(|sh| g.quadratic(&sh.0)).sum();
            g.quadratic(xi) * c.dot(&(j * c)) + shift_risk - c.dot(&(j * (a * xi))) - s
        })
        .collect();
    let gap = p
        .atoms
        .iter()
        .zip(&integrands)
        .map(|(atom, r)| atom.weight * r)
        .sum();
    let identity_gap = deviation(model, g, p)? - a.trace() - s;
    let min_integrand = integrands.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CertificateGap {
        gap,
        identity_gap,
        integrands,
        min_integrand,
    })
}

/// Adds an independent symmetric `±x` shift to every atom; the covariance
/// grows by exactly `xxᵀ`.
pub fn shift_measurement(p: &RandomMeasurement, x: &TangentVector) -> Result<RandomMeasurement> {
    if x.len() != p.n_params() {
        return Err(Error::DimensionMismatch {
            expected: p.n_params(),
            found: x.len(),
        });
    }
    let atoms = p
        .atoms
        .iter()
        .map(|a| {
            let mut a = a.clone();
            a.shifts.push(x.clone());
            a
        })
        .collect();
    RandomMeasurement::new(atoms)
}

/// Samples of the random limit: `W = J^{-1/2} P J^{1/2} / tr P` for random
/// positive definite `P`, returning `V = W⁻¹J⁻¹` for each.
pub fn limit_set_sample(
    model: &StatisticalModel,
    count: usize,
    seed: u64,
) -> Result<Vec<CovarianceMatrix>> {
    if count == 0 {
        return Err(Error::Validation("sample count must be at least 1".into()));
    }
    let n = model.n_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j_inv_half = realsym::inv_sqrt_spd(model.fisher())?;
    (0..count)
        .map(|_| {
            let p = random_pd(&mut rng, n);
            let p_inv = realsym::map_spectrum(&p, |x| 1.0 / x)?;
            // W⁻¹J⁻¹ = tr P · J^{-1/2} P⁻¹ J^{-1/2}
            Ok(CovarianceMatrix::from_unchecked(
                (&j_inv_half * p_inv * &j_inv_half).scale(p.trace()),
            ))
        })
        .collect()
}

fn random_pd<R: Rng>(rng: &mut R, n: usize) -> RMatrix {
    let a = RMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    &a * a.transpose() + RMatrix::identity(n, n).scale(0.05)
}

/// Two-parameter random-limit witness `X = VJ − Id`; on the limit set `det X = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierWitness {
    pub x: RMatrix,
    pub det: f64,
    pub holds: bool,
}

pub fn frontier_witness(model: &StatisticalModel, v: &CovarianceMatrix) -> Result<FrontierWitness> {
    if model.n_params() != 2 {
        return Err(Error::Validation(format!(
            "limit-set witness is defined for 2-parameter models (got {})",
            model.n_params()
        )));
    }
    if v.entries().shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: v.entries().nrows(),
        });
    }
    let x = v.entries() * model.fisher() - RMatrix::identity(2, 2);
    let det = x.determinant();
    Ok(FrontierWitness {
        x,
        det,
        holds: (det - 1.0).abs() <= 1e-9,
    })
}

/// Draws a random locally unbiased measurement with `n_atoms` atoms.
///
/// Weights are Dirichlet(1) and observables Gaussian; directions are the
/// least-norm solution of `Σₖ wₖ ξₖ(Jcₖ)ᵀ = Id` plus a random null-space
/// component. Returns `None` for ill-conditioned draws.
pub fn random_locally_unbiased<R: Rng>(
    model: &StatisticalModel,
    rng: &mut R,
    n_atoms: usize,
) -> Result<Option<RandomMeasurement>> {
    let n = model.n_params();
    if n_atoms < n {
        return Err(Error::Validation(format!(
            "need at least {n} atoms to span a {n}-parameter tangent space"
        )));
    }
    let raw: Vec<f64> = (0..n_atoms)
        .map(|_| rng.sample::<f64, _>(Exp1) + 1e-3)
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let obs = RMatrix::from_fn(n, n_atoms, |_, _| rng.sample::<f64, _>(StandardNormal));
    // D(JOW)ᵀ = Id  ⇔  D(OW)ᵀ = J⁻¹
    let mut ow = obs.clone();
    for (k, w) in weights.iter().enumerate() {
        ow.column_mut(k).scale_mut(*w);
    }
    let gram = &ow * ow.transpose();
    if realsym::min_eig(&gram)? < 1e-6 * gram.trace() / n as f64 {
        return Ok(None);
    }
    let gram_inv = realsym::map_spectrum(&gram, |x| 1.0 / x)?;
    let least_norm = model.fisher_inv() * &gram_inv * &ow;
    let projector = RMatrix::identity(n_atoms, n_atoms) - ow.transpose() * &gram_inv * &ow;
    let noise = RMatrix::from_fn(n, n_atoms, |_, _| rng.sample::<f64, _>(StandardNormal));
    let spread = least_norm.amax();
    let directions = least_norm + (noise * projector).scale(spread);
    let atoms = (0..n_atoms)
        .map(|k| {
            Atom::new(
                weights[k],
                TangentVector(directions.column(k).into_owned()),
                CotangentVector(obs.column(k).into_owned()),
            )
        })
        .collect();
    let mut p = RandomMeasurement { atoms };
    p.renormalize();
    let p = RandomMeasurement::new(p.atoms)?;
    if is_locally_unbiased(model, &p, 1e-9)?.unbiased {
        Ok(Some(p))
    } else {
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub samples: usize,
    pub seed: u64,
    /// Independent RNG streams whose moments are merged in order.
    pub chunks: usize,
    /// When set, the per-sample risk `θ̂ᵀGθ̂` is tracked.
    pub weight: Option<WeightMatrix>,
}

impl SimulationOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            chunks: 1,
            weight: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub samples: usize,
    pub empirical_mean: RVector,
    /// Second moments `E[θ̂θ̂ᵀ]` about the true mean `0`.
    pub empirical_cov: RMatrix,
    /// Standard error of each mean component.
    pub mean_std_error: RVector,
    /// Mean of `θ̂ᵀGθ̂` and its standard error, when a weight was supplied.
    pub risk: Option<(f64, f64)>,
}

#[derive(Clone)]
struct Moments {
    count: usize,
    sum: RVector,
    outer: RMatrix,
    risk: f64,
    risk_sq: f64,
}

impl Moments {
    fn zeros(n: usize) -> Self {
        Self {
            count: 0,
            sum: RVector::zeros(n),
            outer: RMatrix::zeros(n, n),
            risk: 0.0,
            risk_sq: 0.0,
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        self.count += other.count;
        self.sum += &other.sum;
        self.outer += &other.outer;
        self.risk += other.risk;
        self.risk_sq += other.risk_sq;
        self
    }
}

struct AtomSampler {
    cumulative_weight: f64,
    direction: RVector,
    shifts: Vec<RVector>,
    outcomes: Vec<f64>,
    cumulative_prob: Vec<f64>,
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

/// Monte Carlo simulation of `p` on the state `ρ` of `model`.
pub fn simulate(
    model: &StatisticalModel,
    p: &RandomMeasurement,
    samples: usize,
    seed: u64,
) -> Result<SimulationResult> {
    simulate_with(model, p, &SimulationOptions::new(samples, seed))
}

pub fn simulate_with(
    model: &StatisticalModel,
    p: &RandomMeasurement,
    options: &SimulationOptions,
) -> Result<SimulationResult> {
    if options.samples == 0 || options.chunks == 0 {
        return Err(Error::Validation(
            "samples and chunks must be at least 1".into(),
        ));
    }
    if let Some(g) = &options.weight {
        g.check_model(model)?;
    }
    require_unbiased(model, p)?;
    let n = model.n_params();

    let mut acc_weight = 0.0;
    let samplers = p
        .atoms
        .iter()
        .map(|atom| {
            let x = model.cotangent_operator(&atom.observable)?;
            let spec = eigh(&x)?;
            let mut acc = 0.0;
            let mut cumulative_prob = Vec::with_capacity(spec.eigenvalues.len());
            let probs: Vec<f64> = (0..spec.eigenvalues.len())
                .map(|k| model.rho().op().expectation(&spec.eigenvector(k)).max(0.0))
                .collect();
            let total: f64 = probs.iter().sum();
            for prob in probs {
                acc += prob / total;
                cumulative_prob.push(acc);
            }
            acc_weight += atom.weight;
            Ok(AtomSampler {
                cumulative_weight: acc_weight,
                direction: atom.direction.0.clone(),
                shifts: atom.shifts.iter().map(|s| s.0.clone()).collect(),
                outcomes: spec.eigenvalues,
                cumulative_prob,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cumulative_weights: Vec<f64> = samplers.iter().map(|s| s.cumulative_weight).collect();

    let base = options.samples / options.chunks;
    let extra = options.samples % options.chunks;
    let totals = (0..options.chunks)
        .map(|chunk| {
            let count = base + usize::from(chunk < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(chunk as u64);
            let mut m = Moments::zeros(n);
            let mut estimate = RVector::zeros(n);
            for _ in 0..count {
                let atom = &samplers[pick(&cumulative_weights, rng.random::<f64>())];
                let outcome = atom.outcomes[pick(&atom.cumulative_prob, rng.random::<f64>())];
                estimate.copy_from(&atom.direction);
                estimate.scale_mut(outcome);
                for s in &atom.shifts {
                    if rng.random::<bool>() {
                        estimate += s;
                    } else {
                        estimate -= s;
                    }
                }
                m.sum += &estimate;
                m.outer += &estimate * estimate.transpose();
                if let Some(g) = &options.weight {
                    let r = g.quadratic(&estimate);
                    m.risk += r;
                    m.risk_sq += r * r;
                }
            }
            m.count = count;
            m
        })
        .fold(Moments::zeros(n), |acc, m| acc.merge(&m));

    let count = totals.count as f64;
    let mean = totals.sum.unscale(count);
    let second = totals.outer.unscale(count);
    let mean_std_error = RVector::from_fn(n, |i, _| {
        ((second[(i, i)] - mean[i] * mean[i]).max(0.0) / count).sqrt()
    });
    let risk = options.weight.as_ref().map(|_| {
        let r = totals.risk / count;
        let var = (totals.risk_sq / count - r * r).max(0.0);
        (r, (var / count).sqrt())
    });
    Ok(SimulationResult {
        samples: totals.count,
        empirical_mean: mean,
        empirical_cov: second,
        mean_std_error,
        risk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_model;

    fn qubit(alpha: f64) -> StatisticalModel {
        builtin_model("qubit-full", &[alpha]).unwrap()
    }

    fn diag(v: &[f64]) -> RMatrix {
        RMatrix::from_diagonal(&RVector::from_column_slice(v))
    }

    /// Direct summation of `Σ wₖ (cₖᵀJcₖ) ξₖξₖᵀ`, independent of `covariance`.
    fn summed_covariance(model: &StatisticalModel, p: &RandomMeasurement) -> RMatrix {
        let n = model.n_params();
        let mut v = RMatrix::zeros(n, n);
        for a in p.atoms() {
            let x = model.cotangent_operator(&a.observable).unwrap();
            let second = (model.rho().matrix() * x.matrix() * x.matrix()).trace().re;
            for i in 0..n {
                for j in 0..n {
                    v[(i, j)] += a.weight * second * a.direction.0[i] * a.direction.0[j];
                }
            }
        }
        v
    }

    #[test]
    fn weight_matrix_validation() {
        assert!(WeightMatrix::new(diag(&[1.0, 0.0])).is_err());
        assert!(WeightMatrix::new(RMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
        let psd = WeightMatrix::semidefinite(diag(&[1.0, 0.0])).unwrap();
        assert!(!psd.is_definite());
        assert!(WeightMatrix::semidefinite(diag(&[1.0, -0.1])).is_err());
    }

    #[test]
    fn optimal_measurement_on_qubit() {
        let m = qubit(0.6);
        let g = WeightMatrix::identity(3);
        let p = optimal_random_measurement(&m, &g).unwrap();
        let report = is_locally_unbiased(&m, &p, 1e-10).unwrap();
        assert!(report.unbiased, "{report:?}");

        let mut weights: Vec<f64> = p.atoms().iter().map(|a| a.weight).collect();
        weights.sort_by(f64::total_cmp);
        let expected = [0.8 / 2.8, 1.0 / 2.8, 1.0 / 2.8];
        for (w, e) in weights.iter().zip(expected) {
            assert!((w - e).abs() < 1e-12);
        }

        let v = covariance(&m, &p).unwrap();
        let expected = diag(&[2.8, 2.8, 2.24]);
        assert!((v.entries() - &expected).amax() < 1e-9);
        assert!((summed_covariance(&m, &p) - &expected).amax() < 1e-9);
        assert!((deviation(&m, &g, &p).unwrap() - 7.84).abs() < 1e-9);
    }

    #[test]
    fn optimal_weight_operator_cases() {
        let m = qubit(0.6);
        let w = optimal_weight_operator(&m, &WeightMatrix::identity(3)).unwrap();
        assert!((&w - diag(&[1.0, 1.0, 0.8])).amax() < 1e-12);
        // oracle: WᵀJW = Id
        assert!((w.transpose() * m.fisher() * &w - RMatrix::identity(3, 3)).amax() < 1e-12);

        let q = builtin_model("qutrit-diagonal", &[0.5, 0.25, 0.25]).unwrap();
        let gj = WeightMatrix::new(q.fisher().clone()).unwrap();
        let w = optimal_weight_operator(&q, &gj).unwrap();
        assert!((&w - RMatrix::identity(2, 2)).amax() < 1e-12);
        let w = optimal_weight_operator(&q, &WeightMatrix::new(q.fisher().scale(9.0)).unwrap())
            .unwrap();
        assert!((&w - RMatrix::identity(2, 2).scale(3.0)).amax() < 1e-12);

        let g = WeightMatrix::new(RMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.7])).unwrap();
        let w = optimal_weight_operator(&q, &g).unwrap();
        let j = q.fisher();
        assert!((w.transpose() * j * &w - g.entries()).amax() < 1e-9);
        assert!((j * &w - w.transpose() * j).amax() < 1e-9);
    }

    #[test]
    fn optimal_bound_values() {
        let m = qubit(0.6);
        let b = optimal_random_bound(&m, &WeightMatrix::identity(3)).unwrap();
        assert!((b - 7.84).abs() < 1e-12);
        let gj = WeightMatrix::new(m.fisher().clone()).unwrap();
        assert!((optimal_random_bound(&m, &gj).unwrap() - 9.0).abs() < 1e-12);

        let q = builtin_model("qutrit-diagonal", &[0.5, 0.25, 0.25]).unwrap();
        // eigenvalues of J⁻¹ for J = [[6,4],[4,8]] are 1/(7 ± √17)
        let oracle = (1.0 / (7.0 + 17f64.sqrt())).sqrt() + (1.0 / (7.0 - 17f64.sqrt())).sqrt();
        let b = optimal_random_bound(&q, &WeightMatrix::identity(2)).unwrap();
        assert!((b - oracle * oracle).abs() < 1e-12);
        assert!((b - 0.791).abs() < 1e-3);
        assert!(optimal_random_bound(&m, &WeightMatrix::identity(2)).is_err());
    }

    #[test]
    fn equal_atoms_for_scaled_fisher_weight() {
        let q = builtin_model("qutrit-diagonal", &[0.5, 0.25, 0.25]).unwrap();
        let g = WeightMatrix::new(q.fisher().unscale(4.0)).unwrap();
        let p = optimal_random_measurement(&q, &g).unwrap();
        assert_eq!(p.atoms().len(), 2);
        for a in p.atoms() {
            assert!((a.weight - 0.5).abs() < 1e-12);
            assert!((q.tangent_norm(&a.direction).unwrap() - 2.0).abs() < 1e-12);
        }
        let expected = q.fisher_inv().scale(2.0);
        assert!((summed_covariance(&q, &p) - &expected).amax() < 1e-12);
        assert!((deviation(&q, &g, &p).unwrap() - 1.0).abs() < 1e-12);
        assert!((q_r_map(&q, &g).unwrap().entries() - &expected).amax() < 1e-12);
        let gj = WeightMatrix::new(q.fisher().clone()).unwrap();
        assert!((q_r_map(&q, &gj).unwrap().entries() - &expected).amax() < 1e-12);
    }

    #[test]
    fn one_parameter_classical_estimator() {
        let full = qubit(0.4);
        let m = full.submodel(&[2]).unwrap();
        let j = m.fisher()[(0, 0)];
        let single = RandomMeasurement::new(vec![Atom::new(
            1.0,
            TangentVector::from_slice(&[1.0 / j]),
            CotangentVector::from_slice(&[1.0]),
        )])
        .unwrap();
        let v = covariance(&m, &single).unwrap();
        assert!((v.entries()[(0, 0)] - 1.0 / j).abs() < 1e-12);

        let g = WeightMatrix::new(diag(&[2.5])).unwrap();
        let p = optimal_random_measurement(&m, &g).unwrap();
        assert_eq!(p.atoms().len(), 1);
        assert!((deviation(&m, &g, &p).unwrap() - 2.5 / j).abs() < 1e-12);
    }

    #[test]
    fn unbiasedness_verdicts() {
        let m = qubit(0.0);
        let single = RandomMeasurement::new(vec![Atom::new(
            1.0,
            TangentVector::basis(3, 0),
            CotangentVector::basis(3, 0),
        )])
        .unwrap();
        assert!(!is_locally_unbiased(&m, &single, 1e-8).unwrap().unbiased);
        assert!(matches!(
            covariance(&m, &single),
            Err(Error::NotLocallyUnbiased { .. })
        ));

        let m = qubit(0.6);
        let p = optimal_random_measurement(&m, &WeightMatrix::identity(3)).unwrap();
        let rescaled = RandomMeasurement::new(
            p.atoms()
                .iter()
                .map(|a| Atom::new(a.weight, a.direction.scale(2.0), a.observable.scale(0.5)))
                .collect(),
        )
        .unwrap();
        let r = is_locally_unbiased(&m, &rescaled, 1e-10).unwrap();
        assert!(r.unbiased);
    }

    #[test]
    fn optimal_certificate_and_gaps() {
        let m = qubit(0.6);
        let w_raw = RMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 0.7, 0.1, 0.0, 0.1, 0.5]);
        // make W J-self-adjoint positive with unit trace: W = J^{-1/2} P J^{1/2}
        let jh = realsym::sqrt_spd(m.fisher()).unwrap();
        let jih = realsym::inv_sqrt_spd(m.fisher()).unwrap();
        let w = (&jih * &w_raw * &jh).unscale(w_raw.trace());
        let g = WeightMatrix::new(realsym::symmetrize(&(w.transpose() * m.fisher() * &w))).unwrap();
        let p = optimal_random_measurement(&m, &g).unwrap();
        assert!((deviation(&m, &g, &p).unwrap() - 1.0).abs() < 1e-10);
        let cert = random_certificate_gap(&m, &g, &p, &w.scale(2.0), -1.0).unwrap();
        assert!(cert.gap.abs() < 1e-10, "{cert:?}");
        assert!(cert.pointwise_nonnegative(1e-10));

        let zero = random_certificate_gap(&m, &g, &p, &RMatrix::zeros(3, 3), 0.0).unwrap();
        assert!((zero.gap - 1.0).abs() < 1e-10);

        // G-optimal multiplier against the optimal measurement of a different weight
        let other = optimal_random_measurement(&m, &WeightMatrix::identity(3)).unwrap();
        let slack = random_certificate_gap(&m, &g, &other, &w.scale(2.0), -1.0).unwrap();
        assert!(slack.gap > 1e-3);
        assert!((slack.gap - slack.identity_gap).abs() < 1e-10);
    }

    #[test]
    fn shifts_add_outer_products() {
        let m = qubit(0.6);
        let p = optimal_random_measurement(&m, &WeightMatrix::identity(3)).unwrap();
        let v0 = covariance(&m, &p).unwrap().into_entries();

        let same = shift_measurement(&p, &TangentVector::zeros(3)).unwrap();
        assert!((covariance(&m, &same).unwrap().entries() - &v0).amax() < 1e-12);

        let e1 = TangentVector::basis(3, 0);
        let shifted = shift_measurement(&p, &e1).unwrap();
        let v1 = covariance(&m, &shifted).unwrap().into_entries();
        assert!((v1[(0, 0)] - v0[(0, 0)] - 1.0).abs() < 1e-12);

        let y = TangentVector::from_slice(&[0.0, 0.5, -1.0]);
        let xy = shift_measurement(&shifted, &y).unwrap();
        let yx = shift_measurement(&shift_measurement(&p, &y).unwrap(), &e1).unwrap();
        let a = covariance(&m, &xy).unwrap().into_entries();
        let b = covariance(&m, &yx).unwrap().into_entries();
        let expected = &v0 + &e1.0 * e1.0.transpose() + &y.0 * y.0.transpose();
        assert!((&a - &expected).amax() < 1e-12 && (&b - &expected).amax() < 1e-12);
        assert!(shift_measurement(&p, &TangentVector::zeros(2)).is_err());
    }

    #[test]
    fn limit_set_and_frontier_witness() {
        let m = builtin_model("qubit-equatorial", &[0.6]).unwrap();
        for v in limit_set_sample(&m, 50, 3).unwrap() {
            let lower = v.entries() - m.fisher_inv();
            assert!(realsym::min_eig(&lower).unwrap() >= -1e-9);
            assert!(frontier_witness(&m, &v).unwrap().holds);
        }
        // W = Id/2 → V = 2J⁻¹, X = Id
        let v = CovarianceMatrix::new(m.fisher_inv().scale(2.0)).unwrap();
        let wit = frontier_witness(&m, &v).unwrap();
        assert!((wit.x.clone() - RMatrix::identity(2, 2)).amax() < 1e-12 && wit.holds);
        // W = diag(0.3, 0.7) → X = diag(0.7/0.3, 0.3/0.7)
        let q = builtin_model("qutrit-diagonal", &[0.5, 0.25, 0.25]).unwrap();
        // J-whitened frame: W = J^{-1/2} diag(0.3, 0.7) J^{1/2}
        let jih = realsym::inv_sqrt_spd(q.fisher()).unwrap();
        let v = CovarianceMatrix::new(&jih * diag(&[1.0 / 0.3, 1.0 / 0.7]) * &jih).unwrap();
        let wit = frontier_witness(&q, &v).unwrap();
        assert!((wit.det - 1.0).abs() < 1e-12);
        let mut eig = realsym::sym_eigen(&realsym::symmetrize(
            &(&jih.clone().try_inverse().unwrap() * &wit.x * &jih),
        ))
        .unwrap()
        .0;
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] - 0.3 / 0.7).abs() < 1e-12 && (eig[1] - 0.7 / 0.3).abs() < 1e-12);

        let bad = CovarianceMatrix::new(q.fisher_inv().scale(3.0)).unwrap();
        let wit = frontier_witness(&q, &bad).unwrap();
        assert!((wit.det - 4.0).abs() < 1e-12 && !wit.holds);
        assert!(frontier_witness(&qubit(0.6), &bad).is_err());
    }

    #[test]
    fn random_unbiased_generator() {
        let m = qubit(0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut made = 0;
        for _ in 0..50 {
            if let Some(p) = random_locally_unbiased(&m, &mut rng, 5).unwrap() {
                assert!(is_locally_unbiased(&m, &p, 1e-9).unwrap().unbiased);
                made += 1;
            }
        }
        assert!(made > 40);
    }

    #[test]
    fn simulation_is_deterministic() {
        let m = qubit(0.6);
        let p = optimal_random_measurement(&m, &WeightMatrix::identity(3)).unwrap();
        let a = simulate(&m, &p, 2000, 9).unwrap();
        let b = simulate(&m, &p, 2000, 9).unwrap();
        assert_eq!(a, b);
        let mut opts = SimulationOptions::new(2000, 9);
        opts.chunks = 4;
        let c = simulate_with(&m, &p, &opts).unwrap();
        assert_eq!(c.samples, 2000);
        assert_eq!(c, simulate_with(&m, &p, &opts).unwrap());
        assert!(simulate(&m, &p, 0, 1).is_err());
    }
}
