//! Classical emulation of variational state diagonalization.
//!
//! A layered hardware-efficient ansatz `U(theta)` is trained so that
//! `U rho U^dagger` becomes diagonal. The cost is the purity deficit
//! `tr(rho^2) - sum_i (U rho U^dagger)_ii^2`, which is nonnegative and
//! vanishes exactly on diagonalizing unitaries. Expectation values are
//! computed exactly from the matrices; no shot noise is modeled here.
//!
//! Optimization is derivative-free coordinate descent: each sweep visits
//! every angle once, brackets the best point of a coarse grid over one
//! period and refines it by golden-section search.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eig, CMatrix};
use crate::randchan::RngState;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Basis unitarity tolerance for [`project_in_basis`].
pub const UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    num_qubits: usize,
    layers: usize,
    params: Vec<f64>,
}

impl Ansatz {
    /// `params` holds `(y, z)` angle pairs, qubit-major within each layer:
    /// `params[2 (l n + q)]` is the Y angle of qubit `q` in layer `l`.
    pub fn new(num_qubits: usize, layers: usize, params: Vec<f64>) -> Result<Self> {
        if num_qubits == 0 || layers == 0 {
            return Err(Error::BadShape(format!(
                "{num_qubits} qubits, {layers} layers"
            )));
        }
        let want = Self::param_count(num_qubits, layers);
        if params.len() != want {
            return Err(Error::BadShape(format!(
                "{} parameters, expected {want}",
                params.len()
            )));
        }
        Ok(Self {
            num_qubits,
            layers,
            params,
        })
    }

    pub fn zeros(num_qubits: usize, layers: usize) -> Result<Self> {
        Self::new(num_qubits, layers, vec![0.0; Self::param_count(num_qubits, layers)])
    }

    pub fn param_count(num_qubits: usize, layers: usize) -> usize {
        2 * num_qubits * layers
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    /// Adjacent controlled-Z pairs, closing the ring for three or more qubits.
    fn entangler_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.num_qubits;
        match n {
            1 => vec![],
            2 => vec![(0, 1)],
            _ => (0..n).map(|q| (q, (q + 1) % n)).collect(),
        }
    }
}

/// Default layer count, two layers per qubit.
pub fn default_layers(num_qubits: usize) -> usize {
    2 * num_qubits
}

// Qubit 0 is the most significant bit, matching the Kronecker order.
fn apply_1q(m: &mut CMatrix, num_qubits: usize, qubit: usize, g: [[Complex64; 2]; 2]) {
    let bit = 1 << (num_qubits - 1 - qubit);
    let dim = 1 << num_qubits;
    for i in (0..dim).filter(|i| i & bit == 0) {
        let j = i | bit;
        for c in 0..m.cols() {
            let (a, b) = (m[(i, c)], m[(j, c)]);
            m[(i, c)] = g[0][0] * a + g[0][1] * b;
            m[(j, c)] = g[1][0] * a + g[1][1] * b;
        }
    }
}

fn apply_cz(m: &mut CMatrix, num_qubits: usize, a: usize, b: usize) {
    let mask = (1 << (num_qubits - 1 - a)) | (1 << (num_qubits - 1 - b));
    for i in (0..1usize << num_qubits).filter(|i| i & mask == mask) {
        for c in 0..m.cols() {
            m[(i, c)] = -m[(i, c)];
        }
    }
}

fn ry(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

fn rz(theta: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, -theta / 2.0), zero],
        [zero, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

/// Layer by layer: `RZ RY` on every qubit, then the controlled-Z ring.
///
/// The ring squares to the identity, so for an odd layer count one closing
/// ring is appended; zero angles then give the identity. The closing ring is
/// diagonal and leaves the cost unchanged.
pub fn ansatz_unitary(a: &Ansatz) -> CMatrix {
    let n = a.num_qubits;
    let mut u = CMatrix::identity(a.dim());
    let pairs = a.entangler_pairs();
    let ring = |u: &mut CMatrix| {
        for &(p, q) in &pairs {
            apply_cz(u, n, p, q);
        }
    };
    for layer in a.params.chunks(2 * n) {
        for (q, angles) in layer.chunks(2).enumerate() {
            apply_1q(&mut u, n, q, ry(angles[0]));
            apply_1q(&mut u, n, q, rz(angles[1]));
        }
        ring(&mut u);
    }
    if a.layers % 2 == 1 {
        ring(&mut u);
    }
    u
}

fn purity(rho: &CMatrix) -> f64 {
    rho.frobenius_norm_sqr()
}

fn cost_with_purity(u: &CMatrix, rho: &CMatrix, purity: f64) -> f64 {
    let rotated = rho.conjugate_by(u).expect("ansatz and state dimensions agree");
    let diag_sq: f64 = rotated.diagonal().iter().map(|d| d.re * d.re).sum();
    purity - diag_sq
}

/// `tr(rho^2) - sum_i (U rho U^dagger)_ii^2` for `U = ansatz_unitary(a)`.
pub fn cost(a: &Ansatz, rho: impl AsRef<CMatrix>) -> Result<f64> {
    let rho = rho.as_ref();
    if rho.rows() != a.dim() || rho.cols() != a.dim() {
        return Err(Error::DimMismatch(a.dim(), rho.rows()));
    }
    Ok(cost_with_purity(&ansatz_unitary(a), rho, purity(rho)))
}

/// Cost of an arbitrary unitary `U`, i.e. of the basis given by the columns of `U^dagger`.
pub fn unitary_cost(u: &CMatrix, rho: impl AsRef<CMatrix>) -> Result<f64> {
    let rho = rho.as_ref();
    if u.rows() != rho.rows() {
        return Err(Error::DimMismatch(u.rows(), rho.rows()));
    }
    Ok(cost_with_purity(u, rho, purity(rho)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Maximum number of full coordinate sweeps per restart.
    pub max_iters: usize,
    /// Stop once the cost is at or below this value.
    pub tol: f64,
    pub restarts: usize,
    /// Grid spacing (radians) used to bracket each line search.
    pub step_init: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-8,
            restarts: 5,
            step_init: PI / 6.0,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::Config("max_iters and restarts must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.step_init > 0.0 && self.step_init <= PI) {
            return Err(Error::Config(format!(
                "step_init must be in (0, pi], got {}",
                self.step_init
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalizationResult {
    /// Diagonal of `U rho U^dagger`, clamped at zero, renormalized, descending.
    pub eigenvalue_estimates: Vec<f64>,
    /// Estimated eigenvectors as columns, ordered like `eigenvalue_estimates`.
    #[serde(skip)]
    pub basis: CMatrix,
    pub final_cost: f64,
    pub iterations_used: usize,
}

fn normalize_estimates(mut values: Vec<f64>) -> Vec<f64> {
    for v in &mut values {
        *v = v.max(0.0);
    }
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        for v in &mut values {
            *v /= total;
        }
    }
    values
}

/// Packages a diagonalizing unitary `U` as a result: basis columns are the
/// columns of `U^dagger`, sorted by descending diagonal of `U rho U^dagger`.
fn result_from_unitary(u: &CMatrix, rho: &CMatrix, final_cost: f64, iterations_used: usize) -> DiagonalizationResult {
    let rotated = rho.conjugate_by(u).expect("dimensions agree");
    let diag: Vec<f64> = rotated.diagonal().iter().map(|d| d.re).collect();
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]));
    let ud = u.adjoint();
    let basis = CMatrix::from_fn(ud.rows(), ud.cols(), |i, j| ud[(i, order[j])]);
    DiagonalizationResult {
        eigenvalue_estimates: normalize_estimates(order.iter().map(|&k| diag[k]).collect()),
        basis,
        final_cost,
        iterations_used,
    }
}

struct Run {
    params: Vec<f64>,
    cost: f64,
    sweeps: usize,
}

fn golden_section(f: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

fn coordinate_descent(
    num_qubits: usize,
    layers: usize,
    rho: &CMatrix,
    start: Vec<f64>,
    cfg: &OptimizerConfig,
) -> Run {
    let p = purity(rho);
    let mut ansatz = Ansatz {
        num_qubits,
        layers,
        params: start,
    };
    let mut current = cost_with_purity(&ansatz_unitary(&ansatz), rho, p);
    let grid = (2.0 * PI / cfg.step_init).ceil() as usize;
    let spacing = 2.0 * PI / grid as f64;
    let mut sweeps = 0;
    while sweeps < cfg.max_iters && current > cfg.tol {
        let before = current;
        for k in 0..ansatz.params.len() {
            let original = ansatz.params[k];
            let mut eval = |theta: f64| {
                ansatz.params[k] = theta;
                cost_with_purity(&ansatz_unitary(&ansatz), rho, p)
            };
            let (best_i, _) = (0..grid)
                .map(|i| (i, eval(original + i as f64 * spacing)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("grid is non-empty");
            let centre = original + best_i as f64 * spacing;
            let (theta, value) = golden_section(&mut eval, centre - spacing, centre + spacing, 1e-10);
            // keep the old angle unless the line search strictly improved
            if value < current {
                ansatz.params[k] = wrap_angle(theta);
                current = value;
            } else {
                ansatz.params[k] = original;
            }
        }
        sweeps += 1;
        if before - current <= 1e-15 * before.max(1e-300) {
            break;
        }
    }
    Run {
        params: ansatz.params,
        cost: current,
        sweeps,
    }
}

/// Variationally diagonalizes `rho` (dimension `2^k`).
///
/// Restart 0 starts from the identity, the others from uniformly random
/// angles; each restart owns RNG stream `r` of `cfg.seed`. The run with the
/// lowest final cost wins. If it is still above `cfg.tol`, the best result is
/// returned inside [`Error::NoConvergence`].
pub fn diagonalize(
    rho: impl AsRef<CMatrix>,
    cfg: &OptimizerConfig,
    layers: usize,
) -> Result<DiagonalizationResult> {
    let rho = rho.as_ref();
    cfg.validate()?;
    let dim = rho.rows();
    if !rho.is_square() || !dim.is_power_of_two() || dim < 2 {
        return Err(Error::BadShape(format!(
            "{}x{} is not a multi-qubit operator",
            rho.rows(),
            rho.cols()
        )));
    }
    if layers == 0 {
        return Err(Error::BadShape("zero layers".into()));
    }
    let num_qubits = dim.trailing_zeros() as usize;
    let n_params = Ansatz::param_count(num_qubits, layers);

    let runs: Vec<Run> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                vec![0.0; n_params]
            } else {
                let mut rng = RngState::with_stream(cfg.seed, r as u64);
                (0..n_params).map(|_| rng.rng().gen_range(-PI..PI)).collect()
            };
            coordinate_descent(num_qubits, layers, rho, start, cfg)
        })
        .collect();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("at least one restart");

    let u = ansatz_unitary(&Ansatz {
        num_qubits,
        layers,
        params: best.params,
    });
    let result = result_from_unitary(&u, rho, best.cost, best.sweeps);
    if best.cost <= cfg.tol {
        Ok(result)
    } else {
        Err(Error::NoConvergence(Box::new(result)))
    }
}

/// Diagonal of `basis^dagger sigma basis`.
pub fn project_in_basis(sigma: impl AsRef<CMatrix>, basis: &CMatrix) -> Result<Vec<f64>> {
    let sigma = sigma.as_ref();
    if basis.rows() != sigma.rows() || !sigma.is_square() {
        return Err(Error::DimMismatch(basis.rows(), sigma.rows()));
    }
    let residual = basis.unitary_residual();
    if residual > UNITARY_TOL {
        return Err(Error::NotUnitary(residual));
    }
    let d = sigma.rows();
    (0..d)
        .map(|j| {
            let col = basis.column(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..d {
                for c in 0..d {
                    acc += col[r].conj() * sigma[(r, c)] * col[c];
                }
            }
            if acc.im.abs() > 1e-9 {
                Err(Error::NonRealObservable(acc.im))
            } else {
                Ok(acc.re)
            }
        })
        .collect()
}

/// Exact eigendecomposition in the same shape as [`diagonalize`]'s output.
pub fn exact_oracle(rho: impl AsRef<CMatrix>) -> Result<DiagonalizationResult> {
    let eig = hermitian_eig(rho.as_ref())?;
    Ok(DiagonalizationResult {
        eigenvalue_estimates: normalize_estimates(eig.values),
        basis: eig.vectors,
        final_cost: 0.0,
        iterations_used: 0,
    })
}
