//! End-to-end certification of a candidate device against a standard one.
//!
//! Measurement statistics are modeled, not simulated gate by gate: every
//! overlap-type circuit (swap test, four-copy cyclic shift) is a single
//! binary outcome with `p0 = (1 + value) / 2`, so `value = 2 p0 - 1` is
//! estimated from a binomial draw.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::channels::{choi_of, ChoiMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::fidelity::{clamped_sqrt, sub_from_moments, BoundsReport, TruncatedBounds};
use crate::numkernel::{eigen_noise_floor, psd_sqrt, trace_norm, CMatrix};
use crate::randchan::RngState;
use crate::vqsd::{diagonalize, exact_oracle, project_in_basis, DiagonalizationResult, OptimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub shots: u64,
    pub seed: u64,
    pub mode: ShotMode,
}

impl ShotConfig {
    pub fn exact() -> Self {
        Self {
            shots: 1,
            seed: 0,
            mode: ShotMode::Exact,
        }
    }

    pub fn sampled(shots: u64, seed: u64) -> Self {
        Self {
            shots,
            seed,
            mode: ShotMode::Sampled,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ssfb,
    Vqfe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Pass when the whole interval clears the threshold, fail when all of it
    /// lies below, inconclusive otherwise.
    pub fn from_interval(lower: f64, upper: f64, threshold: f64) -> Self {
        if lower >= threshold {
            Verdict::Pass
        } else if upper < threshold {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub method: Method,
    pub bounds: BoundsReport,
    pub m_used: Option<usize>,
    pub shot_estimates: BTreeMap<String, f64>,
    pub verdict_threshold: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
    /// The diagonalized standard device, for reuse with further candidates.
    #[serde(skip)]
    pub standard: Option<Arc<PreparedStandard>>,
}

fn same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.rows() != b.rows() || !a.is_square() || !b.is_square() {
        return Err(Error::DimMismatch(a.rows(), b.rows()));
    }
    Ok(())
}

fn sample_binary_observable(value: f64, shots: u64, rng: &mut RngState) -> f64 {
    let p0 = ((1.0 + value) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots, p0)
        .expect("p0 is clamped into [0, 1]")
        .sample(rng.rng());
    2.0 * (k as f64 / shots as f64) - 1.0
}

fn overlap_value(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    same_dim(a, b)?;
    Ok(a.trace_of_product(b)?.re)
}

fn overlap_sq_value(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    same_dim(a, b)?;
    let ab = a * b;
    let v = ab.trace_of_product(&ab)?;
    if v.im.abs() > 1e-9 {
        return Err(Error::NonRealObservable(v.im));
    }
    Ok(v.re)
}

fn estimate(value: f64, cfg: &ShotConfig, rng: &mut RngState) -> Result<f64> {
    cfg.validate()?;
    Ok(match cfg.mode {
        ShotMode::Exact => value,
        ShotMode::Sampled => sample_binary_observable(value, cfg.shots, rng),
    })
}

/// Swap-test estimate of `tr(A B)`. Sampled mode draws from stream 0 of `cfg.seed`.
pub fn estimate_overlap_shots(
    a: impl AsRef<CMatrix>,
    b: impl AsRef<CMatrix>,
    cfg: &ShotConfig,
) -> Result<f64> {
    estimate_overlap_with(a, b, cfg, &mut RngState::new(cfg.seed))
}

pub fn estimate_overlap_with(
    a: impl AsRef<CMatrix>,
    b: impl AsRef<CMatrix>,
    cfg: &ShotConfig,
    rng: &mut RngState,
) -> Result<f64> {
    estimate(overlap_value(a.as_ref(), b.as_ref())?, cfg, rng)
}

/// Four-copy cyclic-shift estimate of `tr((A B)^2)`.
pub fn estimate_overlap_sq_shots(
    a: impl AsRef<CMatrix>,
    b: impl AsRef<CMatrix>,
    cfg: &ShotConfig,
) -> Result<f64> {
    estimate_overlap_sq_with(a, b, cfg, &mut RngState::new(cfg.seed))
}

pub fn estimate_overlap_sq_with(
    a: impl AsRef<CMatrix>,
    b: impl AsRef<CMatrix>,
    cfg: &ShotConfig,
    rng: &mut RngState,
) -> Result<f64> {
    estimate(overlap_sq_value(a.as_ref(), b.as_ref())?, cfg, rng)
}

fn choi_pair(phi0: &KrausChannel, psi: &KrausChannel) -> Result<(ChoiMatrix, ChoiMatrix)> {
    if phi0.dim() != psi.dim() {
        return Err(Error::DimMismatch(phi0.dim(), psi.dim()));
    }
    Ok((choi_of(phi0)?, choi_of(psi)?))
}

/// Sub/super-fidelity certification from overlap-type measurements.
///
/// Sampled estimates are clamped into `[0, 1]` and radicands at zero before
/// assembly; the verdict compares `[E, G]` with `threshold` on the squared
/// fidelity scale.
pub fn ssfb_certify(
    phi0: &KrausChannel,
    psi: &KrausChannel,
    cfg: &ShotConfig,
    threshold: f64,
) -> Result<CertificationReport> {
    let (j0, j1) = choi_pair(phi0, psi)?;
    let (a, b) = (j0.matrix(), j1.matrix());
    let stream = |k| RngState::with_stream(cfg.seed, k);

    let overlap = estimate_overlap_with(a, b, cfg, &mut stream(0))?;
    let purity0 = estimate_overlap_with(a, a, cfg, &mut stream(1))?;
    let purity1 = estimate_overlap_with(b, b, cfg, &mut stream(2))?;
    let overlap_sq = estimate_overlap_sq_with(a, b, cfg, &mut stream(3))?;

    let t = overlap.clamp(0.0, 1.0);
    let q = overlap_sq.clamp(0.0, 1.0);
    let d0 = (1.0 - purity0.clamp(0.0, 1.0)).max(0.0);
    let d1 = (1.0 - purity1.clamp(0.0, 1.0)).max(0.0);
    // sampled moments can put the radicand below zero
    let sub = sub_from_moments(t, q.min(t * t), a.rows())?;
    let sup = t + (d0 * d1).sqrt();
    let c_g = (1.0 - sup).max(0.0).sqrt();
    let a_g2 = c_g.min(1.0).acos();

    let shot_estimates = BTreeMap::from([
        ("tr_J0J1".to_string(), overlap),
        ("purity_J0".to_string(), purity0),
        ("purity_J1".to_string(), purity1),
        ("tr_J0J1_sq".to_string(), overlap_sq),
    ]);
    Ok(CertificationReport {
        method: Method::Ssfb,
        bounds: BoundsReport {
            f_root: None,
            f_sq: None,
            sub: Some(sub),
            sup: Some(sup),
            c_g: Some(c_g),
            a_g2: Some(a_g2),
            spectrum: Vec::new(),
        },
        m_used: None,
        shot_estimates,
        verdict_threshold: threshold,
        verdict: Verdict::from_interval(sub, sup, threshold),
        diagnostics: None,
        standard: None,
    })
}

/// A standard device with its Choi matrix already diagonalized.
///
/// Built once by [`prepare_standard`] and shared (it is immutable) across
/// any number of candidate certifications.
#[derive(Debug, Clone)]
pub struct PreparedStandard {
    pub choi: ChoiMatrix,
    pub diagonalization: DiagonalizationResult,
    pub converged: bool,
    pub diagnostics: Option<String>,
}

/// Diagonalizes the standard device's Choi matrix, variationally or exactly.
///
/// A variational run that does not reach `opt.tol` is kept (its best result
/// is still usable) but marks every later verdict inconclusive.
pub fn prepare_standard(
    phi0: &KrausChannel,
    opt: &OptimizerConfig,
    layers: usize,
    use_exact_diag: bool,
) -> Result<Arc<PreparedStandard>> {
    let choi = choi_of(phi0)?;
    let (diagonalization, converged, diagnostics) = if use_exact_diag {
        (exact_oracle(&choi)?, true, None)
    } else {
        match diagonalize(&choi, opt, layers) {
            Ok(r) => (r, true, None),
            Err(Error::NoConvergence(best)) => {
                let msg = format!(
                    "diagonalization stopped at cost {:e} after {} sweeps (tol {:e})",
                    best.final_cost, best.iterations_used, opt.tol
                );
                (*best, false, Some(msg))
            }
            Err(e) => return Err(e),
        }
    };
    Ok(Arc::new(PreparedStandard {
        choi,
        diagonalization,
        converged,
        diagnostics,
    }))
}

/// Truncated-fidelity certification of `psi` against a prepared standard.
pub fn vqfe_certify_prepared(
    standard: &Arc<PreparedStandard>,
    psi: &KrausChannel,
    m: usize,
    threshold: f64,
) -> Result<CertificationReport> {
    let n = standard.choi.dim();
    if psi.dim() != n {
        return Err(Error::DimMismatch(n, psi.dim()));
    }
    let dim = n * n;
    if m == 0 || m > dim {
        return Err(Error::BadRank { m, dim });
    }
    let j1 = choi_of(psi)?;
    let diag = &standard.diagonalization;

    // matrix elements sigma_ii of the candidate in the estimated eigenbasis
    let sigma_ii = project_in_basis(&j1, &diag.basis)?;
    let basis_m = diag.basis.leading_columns(m);
    let sigma_m = j1.matrix().conjugate_by(&basis_m.adjoint())?.hermitian_part();

    let floor = eigen_noise_floor(&diag.eigenvalue_estimates);
    let r_m: Vec<f64> = diag.eigenvalue_estimates[..m]
        .iter()
        .map(|&x| if x > floor { x } else { 0.0 })
        .collect();
    let sqrt_rho_m = CMatrix::from_real_diag(&r_m.iter().map(|x| x.sqrt()).collect::<Vec<_>>());
    let lower = trace_norm(&(&sqrt_rho_m * &psd_sqrt(&sigma_m)?))?;
    let tr_rho_m: f64 = r_m.iter().sum();
    let tr_sigma_m: f64 = sigma_ii[..m].iter().sum();
    let upper = lower
        + clamped_sqrt(1.0 - tr_rho_m, "truncation residual")?
            * clamped_sqrt(1.0 - tr_sigma_m, "truncation residual")?;

    let verdict = if standard.converged {
        Verdict::from_interval(lower, upper, threshold)
    } else {
        Verdict::Inconclusive
    };
    Ok(CertificationReport {
        method: Method::Vqfe,
        bounds: BoundsReport {
            f_root: None,
            f_sq: None,
            sub: None,
            sup: None,
            c_g: None,
            a_g2: None,
            spectrum: vec![TruncatedBounds { m, lower, upper }],
        },
        m_used: Some(m),
        shot_estimates: BTreeMap::new(),
        verdict_threshold: threshold,
        verdict,
        diagnostics: standard.diagnostics.clone(),
        standard: Some(Arc::clone(standard)),
    })
}

/// Full VQFE pipeline: diagonalize the standard, then certify `psi` at rank `m`.
pub fn vqfe_certify(
    phi0: &KrausChannel,
    psi: &KrausChannel,
    m: usize,
    opt: &OptimizerConfig,
    layers: usize,
    use_exact_diag: bool,
    threshold: f64,
) -> Result<CertificationReport> {
    if phi0.dim() != psi.dim() {
        return Err(Error::DimMismatch(phi0.dim(), psi.dim()));
    }
    let standard = prepare_standard(phi0, opt, layers, use_exact_diag)?;
    vqfe_certify_prepared(&standard, psi, m, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMethod {
    SuperFidelity,
    SubFidelity,
    Vqfe,
}

/// Register size for certifying devices on `n` qubits.
pub fn qubit_budget(n: usize, method: BudgetMethod) -> usize {
    match method {
        BudgetMethod::SuperFidelity | BudgetMethod::Vqfe => 4 * n + 1,
        BudgetMethod::SubFidelity => 8 * n + 1,
    }
}
