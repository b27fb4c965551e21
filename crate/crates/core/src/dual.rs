//! The dual problem over Lagrange pairs `(a, S)`:
//!
//! ```text
//! maximize   tr a + tr S
//! subject to R(a, S; ξ) = (ξᵀGξ)·ρ − S − Σᵢ (aξ)ⁱ ∂ᵢρ  ⪰ 0   for every ξ
//! ```
//!
//! The semi-infinite constraint is enforced through scalar cuts
//! `v†R(a, S; ξ)v ≥ 0`, each linear in `(a, S)`. Every round solves the
//! plain cut LP with [`crate::simplex`] for an upper bound, then a proximal
//! variant of it around the best feasible point for the next query. A
//! multistart separation oracle either certifies the query or returns the
//! most violated `(ξ, v)` pairs as new cuts. Queries are made feasible by
//! shifting `S ← S + min(0, λ)·Id` with `λ` the oracle's minimum
//! eigenvalue, so the reported optimum is a lower bound on the minimum
//! deviation over all locally unbiased measurements (up to the oracle's
//! reach).

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measurement::{optimal_weight_operator, WeightMatrix};
use crate::model::{StatisticalModel, TangentVector};
use crate::operator::{check_dims, eigh, HermitianOperator};
use crate::randomness::{self, is_random_model};
use crate::realsym;
use crate::simplex::{LinearProgram, LpStatus};
use crate::{CMatrix, CVector, RMatrix, RVector, C64};

/// Tolerance of the dual inequality check between a submodel and its lift.
pub const SUBMODEL_TOL: f64 = 1e-3;

/// A Lagrange pair: `a` acts on tangent coordinates, `S` on the Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub a: RMatrix,
    pub s: HermitianOperator,
}

impl DualPoint {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            a: RMatrix::zeros(n, n),
            s: HermitianOperator::zeros(d),
        }
    }

    /// The same pair with `S` replaced by `S + shift·Id`.
    pub fn shifted(&self, shift: f64) -> Self {
        let d = self.s.dim();
        Self {
            a: self.a.clone(),
            s: HermitianOperator::from_matrix_unchecked(
                self.s.matrix() + CMatrix::identity(d, d).scale(shift),
            ),
        }
    }
}

/// Linearization point of the conic constraint: `v†R(a, S; ξ)v ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub xi: TangentVector,
    pub v: CVector,
}

impl Cut {
    pub fn new(xi: TangentVector, v: CVector) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Validation("cut vector must be nonzero".into()));
        }
        Ok(Self {
            xi,
            v: v.unscale(norm),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub obj_tol: f64,
    pub max_rounds: usize,
    pub multistart: usize,
    /// Search radius for the separation oracle; derived from the model and
    /// the current dual point when `None`.
    pub radius_cap: Option<f64>,
    /// Upper bound on retained cuts; slack cuts are pruned beyond it.
    pub max_cuts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            obj_tol: 1e-6,
            max_rounds: 200,
            multistart: 32,
            radius_cap: None,
            max_cuts: 600,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "{name} must be positive (got {v})"
                )))
            }
        };
        positive("feas_tol", self.feas_tol)?;
        positive("obj_tol", self.obj_tol)?;
        if let Some(r) = self.radius_cap {
            positive("radius_cap", r)?;
        }
        if self.max_rounds == 0 || self.multistart == 0 {
            return Err(Error::Validation(
                "max_rounds and multistart must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_weight(model: &StatisticalModel, g: &WeightMatrix) -> Result<()> {
    check_dims(model.n_params(), g.dim())
}

/// `R(a, S; ξ) = (ξᵀGξ)·ρ − S − Σᵢ (aξ)ⁱ ∂ᵢρ`.
pub fn residual(
    model: &StatisticalModel,
    g: &WeightMatrix,
    dual: &DualPoint,
    xi: &TangentVector,
) -> Result<HermitianOperator> {
    check_weight(model, g)?;
    check_dims(model.n_params(), xi.len())?;
    check_dims(model.n_params(), dual.a.nrows())?;
    check_dims(model.n_params(), dual.a.ncols())?;
    check_dims(model.dim(), dual.s.dim())?;
    let moved = TangentVector(&dual.a * &xi.0);
    let a_op = model.tangent_operator(&moved)?;
    let q = g.quadratic(&xi.0);
    Ok(HermitianOperator::from_matrix_unchecked(
        model.rho().matrix().scale(q) - dual.s.matrix() - a_op.matrix(),
    ))
}

/// `tr a + tr S`.
pub fn spur(dual: &DualPoint) -> f64 {
    dual.a.trace() + dual.s.trace()
}

#[derive(Debug, Clone)]
pub struct Separation {
    /// Smallest `λ_min(R(ξ))` found.
    pub min_value: f64,
    pub witness: Cut,
    /// Distinct local minima found, most violated first.
    pub candidates: Vec<(f64, Cut)>,
    pub radius: f64,
}

/// Precomputed model data for repeated residual evaluations.
struct Geometry<'a> {
    model: &'a StatisticalModel,
    g: &'a RMatrix,
    g_eig: (Vec<f64>, RMatrix),
    /// Orthonormal basis of the range of `G`; the identity for definite `G`.
    range: RMatrix,
    /// Smallest positive eigenvalue of `G`.
    gamma: f64,
    rho_min: f64,
    tangent_norm: f64,
}

impl<'a> Geometry<'a> {
    fn new(model: &'a StatisticalModel, g: &'a WeightMatrix) -> Result<Self> {
        let tangent_norm = model
            .tangent()
            .iter()
            .map(|t| t.operator_norm().map(|x| x * x))
            .sum::<Result<f64>>()?
            .sqrt();
        let (values, vectors) = realsym::sym_eigen(g.entries())?;
        let n = values.len();
        let top = values[n - 1].max(f64::MIN_POSITIVE);
        let kept: Vec<usize> = (0..n).filter(|&k| values[k] > RANK_TOL * top).collect();
        if kept.is_empty() {
            return Err(Error::Validation("weight matrix must be nonzero".into()));
        }
        let range = if kept.len() == n {
            RMatrix::identity(n, n)
        } else {
            RMatrix::from_fn(n, kept.len(), |i, k| vectors[(i, kept[k])])
        };
        let gamma = values[kept[0]];
        Ok(Self {
            model,
            g: g.entries(),
            g_eig: (values, vectors),
            range,
            gamma,
            rho_min: model.rho().eigenvalues()[0],
            tangent_norm,
        })
    }

    fn residual_matrix(&self, dual: &DualPoint, xi: &RVector) -> CMatrix {
        let moved = &dual.a * xi;
        let mut r = self.model.rho().matrix().scale(xi.dot(&(self.g * xi))) - dual.s.matrix();
        for (coef, t) in moved.iter().zip(self.model.tangent()) {
            r -= t.matrix().scale(*coef);
        }
        r
    }

    fn lowest(&self, dual: &DualPoint, xi: &RVector) -> Result<(f64, CVector)> {
        let r = HermitianOperator::from_matrix_unchecked(self.residual_matrix(dual, xi));
        let spec = eigh(&r)?;
        Ok((spec.eigenvalues[0], spec.eigenvector(0)))
    }

    fn is_definite(&self) -> bool {
        self.range.ncols() == self.range.nrows()
    }

    /// Component of `ξ` in the range of `G`; the kernel part changes
    /// neither `ξᵀGξ` nor `aξ` for the pairs the solver produces.
    fn project(&self, xi: RVector) -> RVector {
        if self.is_definite() {
            xi
        } else {
            &self.range * (self.range.transpose() * xi)
        }
    }

    /// Radius outside which `λ_min(R(ξ)) > 0` on the range of `G`.
    fn safe_radius(&self, dual: &DualPoint) -> Result<f64> {
        let c0 = self.gamma * self.rho_min;
        let alpha = dual.a.norm() * self.tangent_norm;
        let beta = dual.s.operator_norm()?;
        Ok((alpha + (alpha * alpha + 4.0 * c0 * beta).sqrt()) / (2.0 * c0) * 1.01 + 1e-12)
    }

    /// Minimizer over ξ of `v†R(ξ)v` for fixed unit `v`, kept inside `radius`.
    fn best_xi_for(&self, dual: &DualPoint, v: &CVector, radius: f64) -> RVector {
        let n = self.model.n_params();
        let r_v = self.model.rho().op().expectation(v);
        let d_v = RVector::from_iterator(n, self.model.tangent().iter().map(|t| t.expectation(v)));
        let b = dual.a.transpose() * d_v;
        let (values, vectors) = &self.g_eig;
        let top = values.last().copied().unwrap_or(1.0).max(1e-300);
        let mut xi = RVector::zeros(n);
        for (k, &value) in values.iter().enumerate() {
            let u = vectors.column(k);
            let proj = u.dot(&b);
            let coef = if value > RANK_TOL * top {
                proj / (2.0 * r_v * value)
            } else {
                0.0
            };
            xi += u.scale(coef);
        }
        clip(xi, radius)
    }

    fn descend(
        &self,
        dual: &DualPoint,
        start: RVector,
        radius: f64,
    ) -> Result<(f64, RVector, CVector)> {
        let mut xi = clip(start, radius);
        let (mut value, mut v) = self.lowest(dual, &xi)?;
        for _ in 0..100 {
            let next = self.best_xi_for(dual, &v, radius);
            let (next_value, next_v) = self.lowest(dual, &next)?;
            if next_value < value - 1e-14 * value.abs().max(1.0) {
                xi = next;
                value = next_value;
                v = next_v;
            } else {
                break;
            }
        }
        Ok((value, xi, v))
    }

    /// Compass search from a local minimum of the alternating descent.
    fn polish(
        &self,
        dual: &DualPoint,
        (mut value, mut xi, mut v): (f64, RVector, CVector),
        radius: f64,
    ) -> Result<(f64, RVector, CVector)> {
        let mut step = 0.1 * xi.norm().max(1e-3 * radius).min(radius);
        let n = xi.len();
        let mut budget = POLISH_EVALUATIONS;
        while step > 1e-8 * radius.max(1.0) && budget > 0 {
            let mut improved = false;
            for k in 0..n {
                for sign in [1.0, -1.0] {
                    let mut trial = xi.clone();
                    trial[k] += sign * step;
                    let trial = clip(self.project(trial), radius);
                    let (tv, tvec) = self.lowest(dual, &trial)?;
                    budget = budget.saturating_sub(1);
                    if tv < value - 1e-13 * value.abs().max(1.0) {
                        xi = trial;
                        value = tv;
                        v = tvec;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok((value, xi, v))
    }
}

/// Number of best local minima refined by compass search.
const POLISHED: usize = 3;
/// Relative eigenvalue floor separating the range of `G` from its kernel.
const RANK_TOL: f64 = 1e-10;
const POLISH_EVALUATIONS: usize = 600;
/// Relative over-shift that keeps restored points feasible under rounding.
const RESTORE_MARGIN: f64 = 1e-12;

fn clip(xi: RVector, radius: f64) -> RVector {
    let norm = xi.norm();
    if norm > radius {
        xi.scale(radius / norm)
    } else {
        xi
    }
}

/// Multistart local minimization of `λ_min(R(a, S; ξ))` over `‖ξ‖ ≤ radius`.
pub fn separation_oracle(
    model: &StatisticalModel,
    g: &WeightMatrix,
    dual: &DualPoint,
    config: &SolverConfig,
) -> Result<Separation> {
    check_weight(model, g)?;
    let geo = Geometry::new(model, g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    separate(&geo, dual, config, &[], &mut rng)
}

fn separate(
    geo: &Geometry<'_>,
    dual: &DualPoint,
    config: &SolverConfig,
    warm: &[RVector],
    rng: &mut ChaCha8Rng,
) -> Result<Separation> {
    let n = geo.model.n_params();
    let safe = geo.safe_radius(dual)?;
    let radius = config.radius_cap.map_or(safe, |cap| safe.min(cap));

    let mut starts: Vec<RVector> = vec![RVector::zeros(n)];
    starts.extend(warm.iter().map(|xi| geo.project(xi.clone())));
    let rho_spec = geo.model.rho().spectral();
    let s_spec = eigh(&dual.s)?;
    for spec in [rho_spec, &s_spec] {
        for k in 0..spec.eigenvalues.len() {
            starts.push(geo.best_xi_for(dual, &spec.eigenvector(k), radius));
        }
    }
    let (_, a_vectors) = realsym::sym_eigen(&realsym::symmetrize(&dual.a))?;
    let scale = (radius * 0.25).min(1.0 + dual.a.norm());
    for k in 0..n {
        let u = geo.project(a_vectors.column(k).into_owned());
        starts.push(u.scale(scale));
        starts.push(u.scale(-scale));
    }
    while starts.len() < config.multistart.max(1) + warm.len() {
        let dir = geo.project(RVector::from_fn(n, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }));
        let len = radius * rng.random::<f64>().powi(2);
        starts.push(dir.normalize().scale(len));
    }
    // The deterministic structured starts come first; random ones fill up to
    // `multistart`, so the result depends only on (dual, warm, seed).
    let mut found: Vec<(f64, RVector, CVector)> = Vec::new();
    for start in starts {
        let (value, xi, v) = geo.descend(dual, start, radius)?;
        let duplicate = found
            .iter()
            .any(|(_, other, _)| (other - &xi).norm() <= 1e-6 * (1.0 + xi.norm()));
        if !duplicate {
            found.push((value, xi, v));
        }
    }
    found.sort_by(|x, y| x.0.total_cmp(&y.0));
    let polished = found.len().min(POLISHED);
    for entry in found.iter_mut().take(polished) {
        *entry = geo.polish(dual, entry.clone(), radius)?;
    }
    found.sort_by(|x, y| x.0.total_cmp(&y.0));
    let candidates: Vec<(f64, Cut)> = found
        .into_iter()
        .map(|(value, xi, v)| {
            (
                value,
                Cut {
                    xi: TangentVector(xi),
                    v,
                },
            )
        })
        .collect();
    let (min_value, witness) = candidates[0].clone();
    Ok(Separation {
        min_value,
        witness,
        candidates,
        radius,
    })
}

/// Variable layout of the cut LP: `a = B·Uᵀ` with `U` an orthonormal basis
/// of the range of `G` (feasibility forces `a` to vanish on its kernel),
/// followed by the real parameters of `S`.
struct Layout {
    n: usize,
    d: usize,
    range: RMatrix,
}

impl Layout {
    fn rank(&self) -> usize {
        self.range.ncols()
    }

    fn n_a(&self) -> usize {
        self.n * self.rank()
    }

    fn n_free(&self) -> usize {
        self.n_a() + self.d * self.d
    }

    /// Coefficients of `Σᵢ (aξ)ᵢ dᵢ + v†Sv` over the free variables.
    fn cut_row(&self, model: &StatisticalModel, cut: &Cut) -> Vec<f64> {
        let d = self.d;
        let v = &cut.v;
        let mut row = Vec::with_capacity(self.n_free());
        let reduced = self.range.transpose() * &cut.xi.0;
        for t in model.tangent() {
            let di = t.expectation(v);
            for k in 0..self.rank() {
                row.push(reduced[k] * di);
            }
        }
        for k in 0..d {
            row.push(v[k].norm_sqr());
        }
        for k in 0..d {
            for l in (k + 1)..d {
                let z = v[k].conj() * v[l];
                row.push(2.0 * z.re);
                row.push(-2.0 * z.im);
            }
        }
        row
    }

    fn objective(&self) -> Vec<f64> {
        // tr(B·Uᵀ) = Σᵢₖ Bᵢₖ Uᵢₖ
        let r = self.rank();
        let mut c = vec![0.0; self.n_free()];
        for i in 0..self.n {
            for k in 0..r {
                c[i * r + k] = self.range[(i, k)];
            }
        }
        for k in 0..self.d {
            c[self.n_a() + k] = 1.0;
        }
        c
    }

    /// Whether free variable `k` is a diagonal entry of `S` (sign-restricted ≤ 0).
    fn is_s_diag(&self, k: usize) -> bool {
        k >= self.n_a() && k < self.n_a() + self.d
    }

    fn encode(&self, dual: &DualPoint) -> Vec<f64> {
        let d = self.d;
        let b = &dual.a * &self.range;
        let mut free: Vec<f64> = b.transpose().iter().copied().collect();
        let s = dual.s.matrix();
        for k in 0..d {
            free.push(s[(k, k)].re);
        }
        for k in 0..d {
            for l in (k + 1)..d {
                free.push(s[(k, l)].re);
                free.push(s[(k, l)].im);
            }
        }
        free
    }

    fn decode(&self, free: &[f64]) -> DualPoint {
        let (n, d, na) = (self.n, self.d, self.n_a());
        let b = RMatrix::from_row_slice(n, self.rank(), &free[..na]);
        let a = b * self.range.transpose();
        let mut s = CMatrix::zeros(d, d);
        for k in 0..d {
            s[(k, k)] = C64::new(free[na + k], 0.0);
        }
        let mut idx = na + d;
        for k in 0..d {
            for l in (k + 1)..d {
                let z = C64::new(free[idx], free[idx + 1]);
                s[(k, l)] = z;
                s[(l, k)] = z.conj();
                idx += 2;
            }
        }
        DualPoint {
            a,
            s: HermitianOperator::from_matrix_unchecked(s),
        }
    }
}

/// Cut LP over the free variables of `(a, S)` inside a box.
///
/// Two solves are offered. [`CutLp::solve`] is the plain cutting-plane LP
/// in split variables `x = x⁺ − x⁻` (diagonal entries of `S` are `−x⁻`
/// only), giving an upper bound. [`CutLp::solve_proximal`] maximizes the
/// same model minus an `ℓ₁` penalty around a feasible center `x̂`, written
/// in `y = x − x̂`; since `x̂` satisfies every cut, all right-hand sides stay
/// non-negative and the simplex starts from `y = 0`.
struct CutLp {
    layout: Layout,
    /// Box half-width per free variable.
    bounds: Vec<f64>,
    /// Normalized cut rows over the free variables.
    rows: Vec<(Vec<f64>, f64)>,
    cuts: Vec<Cut>,
}

impl CutLp {
    fn new(layout: Layout, a_bound: f64, s_bound: f64) -> Self {
        let bounds = (0..layout.n_free())
            .map(|k| if k < layout.n_a() { a_bound } else { s_bound })
            .collect();
        Self {
            layout,
            bounds,
            rows: Vec::new(),
            cuts: Vec::new(),
        }
    }

    fn add_cut(&mut self, model: &StatisticalModel, g: &RMatrix, cut: Cut) {
        let row = self.layout.cut_row(model, &cut);
        let rhs = cut.xi.0.dot(&(g * &cut.xi.0)) * model.rho().op().expectation(&cut.v);
        let scale = row.iter().fold(rhs.abs(), |acc, v| acc.max(v.abs()));
        if scale > 0.0 {
            let row = row.iter().map(|v| v / scale).collect();
            self.rows.push((row, (rhs / scale).max(0.0)));
            self.cuts.push(cut);
        }
    }

    /// Upper bound of the box on free variable `k` (`S` diagonal is ≤ 0).
    fn upper(&self, k: usize) -> f64 {
        if self.layout.is_s_diag(k) {
            0.0
        } else {
            self.bounds[k]
        }
    }

    fn slacks(&self, free: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(row, rhs)| rhs - row.iter().zip(free).map(|(a, x)| a * x).sum::<f64>())
            .collect()
    }

    /// Solves an LP in columns `(free variable, sign)` shifted by `center`,
    /// with per-column objective and upper bounds.
    fn solve_columns(
        &self,
        columns: &[(usize, f64)],
        objective: Vec<f64>,
        column_bounds: &[f64],
        center: &[f64],
    ) -> Result<Vec<f64>> {
        let mut lp = LinearProgram::new(objective);
        for (j, b) in column_bounds.iter().enumerate() {
            let mut row = vec![0.0; columns.len()];
            row[j] = 1.0;
            lp.add_constraint(row, b.max(0.0))?;
        }
        for (i, (row, rhs)) in self.rows.iter().enumerate() {
            let offset: f64 = row.iter().zip(center).map(|(a, x)| a * x).sum();
            let shifted: Vec<f64> = columns.iter().map(|&(k, sign)| sign * row[k]).collect();
            // distinct tiny relaxations break ties between degenerate vertices
            let jitter = RHS_JITTER * (1.0 + (i as f64 * 0.618_033_988_749_895).fract());
            lp.add_constraint(shifted, (rhs - offset).max(0.0) + jitter)?;
        }
        let sol = lp.solve()?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::LinearProgram(
                "cut LP is unbounded despite box bounds".into(),
            ));
        }
        let mut free = center.to_vec();
        for (col, &(k, sign)) in columns.iter().enumerate() {
            free[k] += sign * sol.x[col];
        }
        Ok(free)
    }

    /// Plain cutting-plane LP: `(value, solution)`.
    fn solve(&self) -> Result<(f64, Vec<f64>)> {
        let c = self.layout.objective();
        let mut columns = Vec::new();
        let mut column_bounds = Vec::new();
        for k in 0..self.layout.n_free() {
            if !self.layout.is_s_diag(k) {
                columns.push((k, 1.0));
                column_bounds.push(self.bounds[k]);
            }
            columns.push((k, -1.0));
            column_bounds.push(self.bounds[k]);
        }
        let objective = columns.iter().map(|&(k, sign)| sign * c[k]).collect();
        let zero = vec![0.0; self.layout.n_free()];
        let free = self.solve_columns(&columns, objective, &column_bounds, &zero)?;
        let value = c.iter().zip(&free).map(|(a, x)| a * x).sum();
        Ok((value, free))
    }

    /// Maximizes `cᵀx − μ‖x − center‖₁` over the cut model.
    fn solve_proximal(&self, center: &[f64], mu: f64) -> Result<Vec<f64>> {
        let c = self.layout.objective();
        let mut columns = Vec::new();
        let mut column_bounds = Vec::new();
        let mut objective = Vec::new();
        for k in 0..self.layout.n_free() {
            columns.push((k, 1.0));
            column_bounds.push(self.upper(k) - center[k]);
            objective.push(c[k] - mu);
            columns.push((k, -1.0));
            column_bounds.push(self.bounds[k] + center[k]);
            objective.push(-c[k] - mu);
        }
        self.solve_columns(&columns, objective, &column_bounds, center)
    }

    /// Drops the loosest cuts, keeping every cut that is tight at any of
    /// the given points.
    fn prune(&mut self, points: &[&[f64]], keep: usize) {
        if self.cuts.len() <= keep {
            return;
        }
        let slack_sets: Vec<Vec<f64>> = points.iter().map(|p| self.slacks(p)).collect();
        let slacks: Vec<f64> = (0..self.cuts.len())
            .map(|i| {
                slack_sets
                    .iter()
                    .map(|s| s[i])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mut order: Vec<usize> = (0..self.cuts.len()).collect();
        order.sort_by(|&x, &y| slacks[x].total_cmp(&slacks[y]));
        let mut retain = vec![false; self.cuts.len()];
        for (rank, &idx) in order.iter().enumerate() {
            retain[idx] = rank < keep || slacks[idx] <= 1e-9;
        }
        let mut flags = retain.iter();
        self.cuts.retain(|_| *flags.next().unwrap());
        let mut flags = retain.iter();
        self.rows.retain(|_| *flags.next().unwrap());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Unconverged,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Unconverged => "unconverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub round: usize,
    /// Optimum of the cut LP (an upper bound on the dual optimum).
    pub lp_value: f64,
    /// Oracle minimum of `λ_min(R)` at the LP solution.
    pub min_value: f64,
    /// The LP solution shifted to feasibility.
    pub restored: DualPoint,
    pub restored_spur: f64,
    pub n_cuts: usize,
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    /// Spur of the best restored (feasible) dual point.
    pub optimum: f64,
    /// Final cut-LP value; the true optimum lies in `[optimum, upper_bound]`
    /// when the box bounds and the oracle are exact.
    pub upper_bound: f64,
    pub dual: DualPoint,
    /// Oracle minimum at `dual` after the shift.
    pub feasibility: f64,
    pub cuts: Vec<Cut>,
    pub rounds: usize,
    pub status: SolveStatus,
    pub history: Vec<RoundRecord>,
}

/// Entrywise box for the LP derived from the compactness bounds
/// `‖a‖ ≤ 4n‖g‖` and `‖S‖₁ ≤ 4n²‖g‖` (norms in the SLD geometry).
fn box_bounds(model: &StatisticalModel, g: &WeightMatrix) -> Result<(f64, f64)> {
    let n = model.n_params() as f64;
    let j_inv_half = realsym::inv_sqrt_spd(model.fisher())?;
    let g_norm = realsym::max_eig(&realsym::symmetrize(
        &(&j_inv_half * g.entries() * &j_inv_half),
    ))?;
    let (j_values, _) = realsym::sym_eigen(model.fisher())?;
    let condition = (j_values[j_values.len() - 1] / j_values[0]).sqrt();
    let a_bound = 4.0 * n * g_norm * condition * n.sqrt();
    let s_bound = 4.0 * n * n * g_norm;
    Ok((a_bound, s_bound))
}

fn initial_cuts(model: &StatisticalModel) -> Vec<Cut> {
    let n = model.n_params();
    let rho = model.rho().spectral();
    let basis = randomness::orthonormal_cotangent_basis(model);
    let mut xis = vec![RVector::zeros(n)];
    for b in basis {
        xis.push(b.0.clone());
        xis.push(-b.0);
    }
    let mut cuts = Vec::new();
    for xi in xis {
        for k in 0..rho.eigenvalues.len() {
            cuts.push(Cut {
                xi: TangentVector(xi.clone()),
                v: rho.eigenvector(k),
            });
        }
    }
    cuts
}

const PROX_INITIAL: f64 = 0.1;
const RHS_JITTER: f64 = 1e-11;
/// Rounds over which both bounds must stay within `obj_tol` to stop.
const STALL_WINDOW: usize = 10;
/// Relative gap below which stagnation of both bounds ends the solve.
const STALL_GAP: f64 = 1e-4;
const PROX_MIN: f64 = 1e-4;
const PROX_MAX: f64 = 0.9;
/// Fraction of the predicted increase a step must realize to move the center.
const PROX_ACCEPT: f64 = 0.1;

/// Adds a cut for every violated local minimum, plus the other negative
/// eigenvectors at the same `ξ`. Returns the number of cuts added.
fn add_violated_cuts(
    geo: &Geometry<'_>,
    lp: &mut CutLp,
    dual: &DualPoint,
    sep: &Separation,
    config: &SolverConfig,
    warm: &mut Vec<RVector>,
) -> Result<usize> {
    let before = lp.cuts.len();
    let violated: Vec<&Cut> = sep
        .candidates
        .iter()
        .filter(|(v, _)| *v < -config.feas_tol)
        .map(|(_, c)| c)
        .collect();
    if violated.is_empty() {
        return Ok(0);
    }
    warm.clear();
    for cut in violated {
        warm.push(cut.xi.0.clone());
        let r = HermitianOperator::from_matrix_unchecked(geo.residual_matrix(dual, &cut.xi.0));
        let spec = eigh(&r)?;
        for k in 0..spec.eigenvalues.len() {
            if spec.eigenvalues[k] < -config.feas_tol {
                lp.add_cut(
                    geo.model,
                    geo.g,
                    Cut {
                        xi: cut.xi.clone(),
                        v: spec.eigenvector(k),
                    },
                );
            }
        }
    }
    warm.truncate(8);
    Ok(lp.cuts.len() - before)
}

/// Maximizes `tr a + tr S` over Lagrange pairs by cutting planes.
pub fn solve_dual(
    model: &StatisticalModel,
    g: &WeightMatrix,
    config: &SolverConfig,
) -> Result<DualSolution> {
    config.validate()?;
    check_weight(model, g)?;
    let geo = Geometry::new(model, g)?;
    let (n, d) = (model.n_params(), model.dim());
    let (a_bound, s_bound) = box_bounds(model, g)?;
    // entries of B = aU are bounded by √n times the entrywise bound on a
    let b_bound = if geo.is_definite() {
        a_bound
    } else {
        a_bound * (n as f64).sqrt()
    };
    let layout = Layout {
        n,
        d,
        range: geo.range.clone(),
    };
    let mut lp = CutLp::new(layout, b_bound, s_bound);
    for cut in initial_cuts(model) {
        lp.add_cut(model, g.entries(), cut);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = Vec::new();
    // (0, 0) is feasible: R = (ξᵀGξ)ρ ⪰ 0
    let mut inner = DualPoint::zeros(n, d);
    let mut inner_spur = 0.0;
    let mut center = lp.layout.encode(&inner);
    let mut feasibility = 0.0;
    let mut mu = PROX_INITIAL;
    let mut warm: Vec<RVector> = Vec::new();
    let mut status = SolveStatus::Unconverged;
    let mut upper_bound = f64::INFINITY;
    let mut bounds_log: Vec<(f64, f64)> = Vec::new();
    let objective = lp.layout.objective();
    let value_of = |free: &[f64]| -> f64 { objective.iter().zip(free).map(|(c, x)| c * x).sum() };

    for round in 1..=config.max_rounds {
        let (lp_value, outer) = lp.solve()?;
        upper_bound = upper_bound.min(lp_value);
        let candidate_free = lp.solve_proximal(&center, mu)?;
        lp.prune(&[&outer, &candidate_free, &center], config.max_cuts);
        let predicted = value_of(&candidate_free) - inner_spur;

        let candidate = lp.layout.decode(&candidate_free);
        let sep = separate(&geo, &candidate, config, &warm, &mut rng)?;
        let shift = sep.min_value.min(0.0) * (1.0 + RESTORE_MARGIN);
        let restored = candidate.shifted(shift);
        let restored_spur = spur(&restored);
        let added = add_violated_cuts(&geo, &mut lp, &candidate, &sep, config, &mut warm)?;
        if lp.slacks(&center).iter().any(|&v| v < -1e-12) {
            // a new cut exposes a violation the oracle missed at the center
            let sep_center = separate(&geo, &inner, config, &warm, &mut rng)?;
            add_violated_cuts(&geo, &mut lp, &inner, &sep_center, config, &mut warm)?;
            let worst_cut = lp
                .cuts
                .iter()
                .map(|c| {
                    let r = geo.residual_matrix(&inner, &c.xi.0);
                    (c.v.adjoint() * r * &c.v)[(0, 0)].re
                })
                .fold(sep_center.min_value, f64::min);
            if worst_cut < 0.0 {
                inner = inner.shifted(worst_cut * (1.0 + RESTORE_MARGIN));
                inner_spur = spur(&inner);
                center = lp.layout.encode(&inner);
                debug!("round {round}: center re-shifted by {worst_cut:.3e}");
            }
        }
        let serious = restored_spur >= inner_spur + PROX_ACCEPT * predicted.max(0.0);
        if restored_spur > inner_spur {
            inner = restored.clone();
            inner_spur = restored_spur;
            center = lp.layout.encode(&inner);
            feasibility = sep.min_value - shift;
        }
        mu = if added == 0 && predicted <= config.obj_tol {
            (mu * 0.1).max(PROX_MIN)
        } else if serious {
            (mu * 0.5).max(PROX_MIN)
        } else {
            (mu * 1.5).min(PROX_MAX)
        };
        debug!(
            "round {round}: lp {lp_value:.12} best {inner_spur:.12} predicted {predicted:.3e} \
             candidate {:.3e} mu {mu:.1e} cuts {} (+{added})",
            sep.min_value,
            lp.cuts.len()
        );
        history.push(RoundRecord {
            round,
            lp_value,
            min_value: sep.min_value,
            restored,
            restored_spur,
            n_cuts: lp.cuts.len(),
        });

        let tol = config.obj_tol * upper_bound.abs().max(1.0);
        bounds_log.push((upper_bound, inner_spur));
        let near = upper_bound - inner_spur <= STALL_GAP * upper_bound.abs().max(1.0);
        let stalled = near && bounds_log.len() > STALL_WINDOW && {
            let (old_ub, old_lb) = bounds_log[bounds_log.len() - 1 - STALL_WINDOW];
            old_ub - upper_bound < tol && inner_spur - old_lb < tol
        };
        if upper_bound - inner_spur <= tol || stalled {
            status = SolveStatus::Converged;
            break;
        }
    }

    let (optimum, dual) = (inner_spur, inner);
    if status == SolveStatus::Unconverged {
        info!(
            "dual solver stopped after {} rounds (best {optimum:.9}, upper bound {upper_bound:.9})",
            history.len()
        );
    }
    Ok(DualSolution {
        optimum,
        upper_bound,
        dual,
        feasibility,
        cuts: lp.cuts,
        rounds: history.len(),
        status,
        history,
    })
}

/// The closed-form multiplier of a random model: for `G = c²W'ᵀJW'` with
/// `tr W' = 1` it is `(2c²W', −c²C)` where `C = XρX` for any unit `X`; its
/// spur equals the random-measurement bound `c²`.
pub fn random_model_certificate(model: &StatisticalModel, g: &WeightMatrix) -> Result<DualPoint> {
    check_weight(model, g)?;
    let verdict = is_random_model(model, randomness::DEFAULT_TOL)?;
    let c_op = match verdict.c {
        Some(c) if verdict.verdict => c,
        _ => {
            return Err(Error::NotRandomModel {
                score: verdict.score,
                witness: verdict.witness,
            })
        }
    };
    let w = optimal_weight_operator(model, g)?;
    let c = w.trace();
    Ok(DualPoint {
        a: w.scale(2.0 * c),
        s: c_op.scale(-c * c),
    })
}

#[derive(Debug, Clone)]
pub struct SubmodelComparison {
    /// Dual optimum on the submodel with `G₁`.
    pub opt1: f64,
    /// Dual optimum on the full model with the lifted weight `ΠᵀG₁Π`.
    pub opt2: f64,
    pub holds: bool,
    pub lifted_weight: WeightMatrix,
}

/// Compares the dual optimum of a submodel with that of the full model
/// under the weight lifted by the `J`-orthogonal projection onto the
/// submodel's tangent space.
pub fn dual_submodel_inequality(
    model: &StatisticalModel,
    subspace: &[usize],
    g1: &WeightMatrix,
    config: &SolverConfig,
) -> Result<SubmodelComparison> {
    let sub = model.submodel(subspace)?;
    check_weight(&sub, g1)?;
    let (n, k) = (model.n_params(), subspace.len());
    let inclusion = RMatrix::from_fn(
        n,
        k,
        |row, col| if subspace[col] == row { 1.0 } else { 0.0 },
    );
    let sub_inv = sub.fisher_inv();
    let projection = sub_inv * inclusion.transpose() * model.fisher();
    let lifted = WeightMatrix::semidefinite(realsym::symmetrize(
        &(projection.transpose() * g1.entries() * &projection),
    ))?;
    let opt1 = solve_dual(&sub, g1, config)?.optimum;
    let opt2 = solve_dual(model, &lifted, config)?.optimum;
    Ok(SubmodelComparison {
        opt1,
        opt2,
        holds: opt1 <= opt2 + SUBMODEL_TOL,
        lifted_weight: lifted,
    })
}
