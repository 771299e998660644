//! Seeded sampling of random channels and states.
//!
//! All randomness goes through [`RngState`], a ChaCha20 stream generator
//! (`rand_chacha` 0.3). A `(seed, stream)` pair fully determines the output,
//! so parallel workers take disjoint stream ids instead of sharing a generator.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channels::{ChoiMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eig, kron, partial_trace, CMatrix, Keep};

/// Name of the generator backing [`RngState`].
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.3)";

/// Smallest accepted eigenvalue of the input marginal before whitening.
pub const MARGINAL_MIN_EIG: f64 = 1e-12;

pub const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream `stream` under the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Matrix of independent complex Gaussians with standard normal real and
/// imaginary parts, so `E|g|^2 = 2`.
pub fn ginibre(rows: usize, cols: usize, rng: &mut RngState) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re = rng.normal();
        let im = rng.normal();
        Complex64::new(re, im)
    })
}

/// Random Choi matrix of a channel on `C^n` with the given Kraus rank.
///
/// Draws `G` of shape `n^2 x kraus_rank`, forms `W = G G^dagger`, and whitens
/// the input factor with `Y = tr_out W`:
/// `J = (Y^{-1/2} (x) I) W (Y^{-1/2} (x) I) / n`.
pub fn random_choi(n: usize, kraus_rank: usize, rng: &mut RngState) -> Result<ChoiMatrix> {
    if n < 2 {
        return Err(Error::Config(format!("channel dimension {n} < 2")));
    }
    if kraus_rank == 0 || kraus_rank > n * n {
        return Err(Error::Config(format!(
            "Kraus rank {kraus_rank} outside 1..={}",
            n * n
        )));
    }
    for _ in 0..MAX_RESAMPLES {
        let g = ginibre(n * n, kraus_rank, rng);
        let w = &g * &g.adjoint();
        let y = partial_trace(&w, n, n, Keep::A)?;
        let eig = hermitian_eig(&y)?;
        if eig.values.last().copied().unwrap_or(0.0) < MARGINAL_MIN_EIG {
            continue;
        }
        let y_inv_sqrt = eig.reconstruct_with(|x| 1.0 / x.sqrt());
        let whiten = kron(&y_inv_sqrt, &CMatrix::identity(n));
        let j = w.conjugate_by(&whiten)?.scale_real(1.0 / n as f64);
        return Ok(ChoiMatrix::new_unchecked(n, j.hermitian_part()));
    }
    Err(Error::SingularMarginal(MAX_RESAMPLES))
}

/// Random density matrix `G G^dagger / tr(G G^dagger)` with `G` of shape `d x rank`.
pub fn random_density(d: usize, rank: usize, rng: &mut RngState) -> Result<DensityMatrix> {
    if rank == 0 || rank > d {
        return Err(Error::Config(format!("rank {rank} outside 1..={d}")));
    }
    let g = ginibre(d, rank, rng);
    let w = &g * &g.adjoint();
    let t = w.trace().re;
    DensityMatrix::new(w.scale_real(1.0 / t).hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{choi_of, kraus_of, CPTP_TOL};

    #[test]
    fn ginibre_moments() {
        let mut rng = RngState::new(1);
        let g = ginibre(100, 100, &mut rng);
        let n = 10_000.0;
        let mean: Complex64 = g.as_slice().iter().sum::<Complex64>() / n;
        let second: f64 = g.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        // sd of the complex mean is sqrt(2/n); of |g|^2 is sqrt(Var)=2 over sqrt(n)
        assert!(mean.norm() < 5.0 * (2.0 / n).sqrt());
        assert!((second - 2.0).abs() < 5.0 * 2.0 / n.sqrt());
    }

    #[test]
    fn ginibre_is_deterministic() {
        let a = ginibre(2, 2, &mut RngState::new(42));
        let b = ginibre(2, 2, &mut RngState::new(42));
        assert_eq!(a, b);
        let c = ginibre(2, 2, &mut RngState::with_stream(42, 1));
        assert_ne!(a, c);
    }

    #[test]
    fn random_choi_two_qubit_ranks() {
        let mut rng = RngState::new(2020);
        for rank in [6, 10, 16] {
            let j = random_choi(4, rank, &mut rng).unwrap();
            // re-validate through the checked constructor
            let j = ChoiMatrix::new(4, j.matrix().clone()).unwrap();
            assert_eq!(j.rank().unwrap(), rank);
            assert!((j.matrix().trace().re - 1.0).abs() < 1e-12);
            let marg = partial_trace(j.matrix(), 4, 4, Keep::A).unwrap();
            assert!(marg.max_abs_diff(&CMatrix::identity(4).scale_real(0.25)) < 1e-8);
        }
    }

    #[test]
    fn random_choi_converts_to_cptp_kraus() {
        let mut rng = RngState::new(5);
        for rank in 1..=4 {
            let j = random_choi(2, rank, &mut rng).unwrap();
            let ch = kraus_of(&j).unwrap();
            assert_eq!(ch.kraus().len(), rank);
            assert!(ch.validate(CPTP_TOL).passed);
            assert!(choi_of(&ch).unwrap().matrix().max_abs_diff(j.matrix()) < 1e-8);
        }
    }

    #[test]
    fn random_choi_argument_checks() {
        let mut rng = RngState::new(0);
        assert!(random_choi(1, 1, &mut rng).is_err());
        assert!(random_choi(2, 0, &mut rng).is_err());
        assert!(random_choi(2, 5, &mut rng).is_err());
    }

    #[test]
    fn random_density_examples() {
        let mut rng = RngState::new(8);
        let pure = random_density(2, 1, &mut rng).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-10);
        let rho = random_density(16, 6, &mut rng).unwrap();
        assert_eq!(hermitian_eig(rho.matrix()).unwrap().rank(), 6);

        let a = random_density(3, 2, &mut RngState::new(77)).unwrap();
        let b = random_density(3, 2, &mut RngState::new(77)).unwrap();
        assert_eq!(a, b);
        assert!(random_density(3, 4, &mut rng).is_err());
    }
}
