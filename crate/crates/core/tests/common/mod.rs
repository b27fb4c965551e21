#![allow(dead_code)]

use qcr_core::{
    CMatrix, DensityOperator, HermitianOperator, RMatrix, StatisticalModel, WeightMatrix, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_complex<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| C64::new(gaussian(rng), gaussian(rng)))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, d: usize) -> HermitianOperator {
    let a = random_complex(rng, d);
    HermitianOperator::new((&a + a.adjoint()).scale(0.5)).unwrap()
}

pub fn random_psd<R: Rng>(rng: &mut R, d: usize) -> HermitianOperator {
    let a = random_complex(rng, d);
    HermitianOperator::new(&a * a.adjoint()).unwrap()
}

pub fn random_density<R: Rng>(rng: &mut R, d: usize) -> DensityOperator {
    let a = random_complex(rng, d);
    let m = &a * a.adjoint() + CMatrix::identity(d, d).scale(0.2 * d as f64);
    let trace = m.trace().re;
    DensityOperator::new(HermitianOperator::new(m.unscale(trace)).unwrap()).unwrap()
}

/// A full-rank state with `n` random traceless tangent directions and a
/// Fisher matrix of condition number at most `1e4`.
pub fn random_model<R: Rng>(rng: &mut R, d: usize, n: usize) -> StatisticalModel {
    loop {
        let rho = random_density(rng, d);
        let tangent = (0..n)
            .map(|_| {
                let h = random_hermitian(rng, d);
                let shift = h.trace() / d as f64;
                h.sub(&HermitianOperator::identity(d).scale(shift)).unwrap()
            })
            .collect();
        let model = StatisticalModel::new(rho, tangent).unwrap();
        let eig = model.fisher().clone().symmetric_eigen().eigenvalues;
        if eig.max() <= 1e4 * eig.min() {
            return model;
        }
    }
}

pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> RMatrix {
    let a = RMatrix::from_fn(n, n, |_, _| gaussian(rng));
    &a * a.transpose() + RMatrix::identity(n, n).scale(0.3)
}

pub fn random_weight<R: Rng>(rng: &mut R, n: usize) -> WeightMatrix {
    WeightMatrix::new(random_spd(rng, n)).unwrap()
}

pub fn min_sym_eig(m: &RMatrix) -> f64 {
    let sym = (m + m.transpose()).scale(0.5);
    sym.symmetric_eigen().eigenvalues.min()
}
