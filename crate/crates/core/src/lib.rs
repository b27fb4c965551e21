//! Attainable Cramér–Rao type bounds for finite-dimensional quantum
//! statistical models.
//!
//! The crate is organised bottom-up:
//!
//! * [`operator`] – dense Hermitian linear algebra and the symmetrized
//!   product `ρ∘X = ½(ρX + Xρ)` together with its inverse.
//! * [`model`] – a model point `(ρ, {∂ᵢρ})`, its symmetric logarithmic
//!   derivatives and SLD Fisher matrix, and a few builtin families.
//! * [`measurement`] – finite-support random measurements: local
//!   unbiasedness, covariance, deviation, the optimal random measurement and
//!   its limit set, and Monte Carlo simulation.
//! * [`dual`] – the dual linear program over Lagrange pairs `(a, S)`, solved
//!   by cutting planes on top of the dense simplex routine in [`simplex`].
//! * [`randomness`] – the randomness condition under which random
//!   measurements attain the global bound.
//!
//! Coordinates: tangent vectors are coefficient vectors `ξ` against the
//! user-supplied `∂ᵢρ` and cotangent vectors are coefficient vectors `c`
//! against the SLDs `Lᵢ`. The SLD Fisher matrix `J` is the Gram matrix of
//! both bases, so `‖ξ‖² = ξᵀJξ`, `‖c‖² = cᵀJc` and `⟨c, ξ⟩ = cᵀJξ`.

pub mod dual;
pub mod error;
pub mod measurement;
pub mod model;
pub mod operator;
pub mod randomness;
pub mod realsym;
pub mod simplex;

pub use dual::{
    dual_submodel_inequality, random_model_certificate, residual, separation_oracle, solve_dual,
    spur, Cut, DualPoint, DualSolution, RoundRecord, Separation, SolveStatus, SolverConfig,
    SubmodelComparison,
};
pub use error::{Error, Result};
pub use measurement::{
    covariance, deviation, frontier_witness, is_locally_unbiased, limit_set_sample,
    optimal_random_bound, optimal_random_measurement, optimal_weight_operator, q_r_map,
    random_certificate_gap, random_locally_unbiased, shift_measurement, simulate, simulate_with,
    Atom, CovarianceMatrix, RandomMeasurement, SimulationOptions, SimulationResult, WeightMatrix,
};
pub use model::{builtin_model, BuiltinModel, CotangentVector, StatisticalModel, TangentVector};
pub use operator::{
    eigh, min_eigenvalue, solve_sym_product, sqrt_psd, sym_product, DensityOperator,
    HermitianOperator, SpectralDecomposition,
};
pub use randomness::{
    bilinear_table, is_random_model, orthonormal_cotangent_basis, qubit_complement_check,
    BilinearTable, RandomnessVerdict,
};

pub use nalgebra::{Complex, DMatrix, DVector};

/// Complex scalar used for operator entries.
pub type C64 = Complex<f64>;
/// Dense complex matrix (operators on the Hilbert space).
pub type CMatrix = DMatrix<C64>;
/// Dense complex vector (state vectors).
pub type CVector = DVector<C64>;
/// Dense real matrix (parameter-space quantities).
pub type RMatrix = DMatrix<f64>;
/// Dense real vector.
pub type RVector = DVector<f64>;
