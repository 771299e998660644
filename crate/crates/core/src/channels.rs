//! Quantum channels in Kraus and Choi form.
//!
//! Conventions used throughout the crate:
//!
//! - The Choi matrix is trace-normalized: `J = (1/n) sum_ij |i><j| (x) Phi(|i><j|)`,
//!   i.e. the channel applied to one half of the normalized maximally
//!   entangled state.
//! - The leading tensor factor is the reference (input) system, the second
//!   factor is the channel output. Tracing out the output gives `I/n`.
//! - A Choi eigenvector `v`, indexed by `(input i, output a)` with the input
//!   index leading, maps to the Kraus operator `K[a, i] = sqrt(lambda) v[i n + a]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eig, partial_trace, CMatrix, Keep, PSD_TOL, RANK_TOL};

/// Tolerance on `sum K^dagger K = I` for a channel to count as trace preserving.
pub const CPTP_TOL: f64 = 1e-8;

/// Tolerance on unit trace and Hermiticity of states.
pub const STATE_TOL: f64 = 1e-9;

/// Hermitian, PSD, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        check_state(&mat).map_err(Error::NotDensity)?;
        Ok(Self {
            dim: mat.rows(),
            mat,
        })
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm == 0.0 {
            return Err(Error::NotDensity("zero vector".into()));
        }
        Self::new(CMatrix::outer(psi).scale_real(1.0 / norm))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            dim: d,
            mat: CMatrix::identity(d).scale_real(1.0 / d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn purity(&self) -> f64 {
        self.mat.trace_of_product(&self.mat).map(|z| z.re).unwrap_or(0.0)
    }
}

impl AsRef<CMatrix> for DensityMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.mat
    }
}

fn check_state(mat: &CMatrix) -> std::result::Result<(), String> {
    if !mat.is_square() {
        return Err(format!("{}x{} is not square", mat.rows(), mat.cols()));
    }
    let asym = mat.hermitian_residual();
    if asym > STATE_TOL {
        return Err(format!("not Hermitian (residual {asym:e})"));
    }
    let tr = mat.trace().re;
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(format!("trace {tr} != 1"));
    }
    let eig = hermitian_eig(mat).map_err(|e| e.to_string())?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(format!("negative eigenvalue {min:e}"));
    }
    Ok(())
}

/// A CPTP map given by Kraus operators, with equal input and output dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

/// Outcome of a trace-preservation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `|sum K^dagger K - I|_max`
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Checks `sum K^dagger K = I`. Never fails; malformed operator lists
/// report an infinite residual.
pub fn validate_cptp(kraus: &[CMatrix], tol: f64) -> ValidationReport {
    let residual = tp_residual(kraus);
    ValidationReport {
        residual,
        tol,
        passed: residual <= tol,
    }
}

fn tp_residual(kraus: &[CMatrix]) -> f64 {
    let Some(first) = kraus.first() else {
        return f64::INFINITY;
    };
    let n = first.cols();
    if kraus.iter().any(|k| k.rows() != n || k.cols() != n) {
        return f64::INFINITY;
    }
    let mut acc = CMatrix::zeros(n, n);
    for k in kraus {
        acc = &acc + &(&k.adjoint() * k);
    }
    acc.max_abs_diff(&CMatrix::identity(n))
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let report = validate_cptp(&kraus, CPTP_TOL);
        if !report.passed {
            return Err(Error::NotCptp(report.residual));
        }
        Ok(Self {
            dim: kraus[0].rows(),
            kraus,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            dim: n,
            kraus: vec![CMatrix::identity(n)],
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        validate_cptp(&self.kraus, tol)
    }

    /// `sum_i K_i rho K_i^dagger`
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimMismatch(self.dim, rho.dim()));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out = &out + &rho.matrix().conjugate_by(k)?;
        }
        // Kraus sums drift from exact Hermiticity by rounding only
        DensityMatrix::new(out.hermitian_part())
    }
}

/// Free function form of [`KrausChannel::apply`].
pub fn apply(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    ch.apply(rho)
}

/// Trace-normalized Choi matrix of a channel on `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    mat: CMatrix,
}

impl ChoiMatrix {
    /// Validates the Choi invariants: Hermitian PSD, unit trace, and
    /// `tr_out J = I/dim`.
    pub fn new(dim: usize, mat: CMatrix) -> Result<Self> {
        let n2 = dim * dim;
        if mat.rows() != n2 || mat.cols() != n2 {
            return Err(Error::NotChoi(format!(
                "{}x{} matrix for input dimension {dim}",
                mat.rows(),
                mat.cols()
            )));
        }
        check_state(&mat).map_err(Error::NotChoi)?;
        let marginal = partial_trace(&mat, dim, dim, Keep::A)?;
        let dev = marginal.max_abs_diff(&CMatrix::identity(dim).scale_real(1.0 / dim as f64));
        if dev > CPTP_TOL {
            return Err(Error::NotChoi(format!(
                "output partial trace deviates from I/n by {dev:e}"
            )));
        }
        Ok(Self { dim, mat })
    }

    pub(crate) fn new_unchecked(dim: usize, mat: CMatrix) -> Self {
        Self { dim, mat }
    }

    /// Input dimension `n`; the matrix itself is `n^2 x n^2`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn purity(&self) -> f64 {
        self.mat.trace_of_product(&self.mat).map(|z| z.re).unwrap_or(0.0)
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(hermitian_eig(&self.mat)?.rank())
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            dim: self.dim * self.dim,
            mat: self.mat.clone(),
        }
    }
}

impl AsRef<CMatrix> for ChoiMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.mat
    }
}

/// `(1/n) sum_ij |i><j| (x) |i><j|` on `C^n (x) C^n`.
pub fn max_entangled(n: usize) -> DensityMatrix {
    let n2 = n * n;
    let inv = 1.0 / n as f64;
    let mat = CMatrix::from_fn(n2, n2, |r, c| {
        let (i, a) = (r / n, r % n);
        let (j, b) = (c / n, c % n);
        if i == a && j == b {
            Complex64::new(inv, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    DensityMatrix { dim: n2, mat }
}

/// Choi image of a channel: `sum_k (I (x) K_k) |Omega><Omega| (I (x) K_k)^dagger`.
pub fn choi_of(ch: &KrausChannel) -> Result<ChoiMatrix> {
    let report = ch.validate(CPTP_TOL);
    if !report.passed {
        return Err(Error::NotCptp(report.residual));
    }
    let n = ch.dim;
    let n2 = n * n;
    let norm = 1.0 / (n as f64).sqrt();
    let mut mat = CMatrix::zeros(n2, n2);
    for k in &ch.kraus {
        // (I (x) K)|Omega> has amplitude K[a, i] / sqrt(n) at index (i, a)
        let v: Vec<Complex64> = (0..n2).map(|r| k[(r % n, r / n)] * norm).collect();
        mat = &mat + &CMatrix::outer(&v);
    }
    Ok(ChoiMatrix { dim: n, mat })
}

/// Kraus operators from the eigendecomposition of `n J`.
pub fn kraus_of(j: &ChoiMatrix) -> Result<KrausChannel> {
    let n = j.dim;
    let eig = hermitian_eig(&j.mat.scale_real(n as f64))?;
    if let Some(&min) = eig.values.last() {
        if min < -PSD_TOL * n as f64 {
            return Err(Error::NotChoi(format!("negative eigenvalue {min:e}")));
        }
    }
    let kraus: Vec<CMatrix> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &lambda)| lambda > RANK_TOL)
        .map(|(col, &lambda)| {
            let s = lambda.sqrt();
            CMatrix::from_fn(n, n, |a, i| eig.vectors[(i * n + a, col)] * s)
        })
        .collect();
    if kraus.is_empty() {
        return Err(Error::NotChoi("zero matrix".into()));
    }
    let report = validate_cptp(&kraus, CPTP_TOL);
    if !report.passed {
        return Err(Error::NotChoi(format!(
            "recovered Kraus set violates trace preservation by {:e}",
            report.residual
        )));
    }
    Ok(KrausChannel { dim: n, kraus })
}

// ----------------------------------------------------------------------------
// JSON file formats

type JsonComplex = [f64; 2];

fn to_json_entries(m: &CMatrix) -> Vec<JsonComplex> {
    m.as_slice().iter().map(|z| [z.re, z.im]).collect()
}

fn from_json_entries(rows: usize, cols: usize, entries: &[JsonComplex]) -> Result<CMatrix> {
    CMatrix::from_vec(
        rows,
        cols,
        entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
    )
}

/// `{"dim": n, "kraus": [[[re, im], ...], ...]}`, each operator row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub dim: usize,
    pub kraus: Vec<Vec<JsonComplex>>,
}

/// `{"dim": n, "choi": [[re, im], ...]}`, row-major `n^2 x n^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiFile {
    pub dim: usize,
    pub choi: Vec<JsonComplex>,
}

/// Either on-disk representation of a device.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceFile {
    Kraus(ChannelFile),
    Choi(ChoiFile),
}

impl From<&KrausChannel> for ChannelFile {
    fn from(ch: &KrausChannel) -> Self {
        Self {
            dim: ch.dim,
            kraus: ch.kraus.iter().map(to_json_entries).collect(),
        }
    }
}

impl TryFrom<ChannelFile> for KrausChannel {
    type Error = Error;

    fn try_from(f: ChannelFile) -> Result<Self> {
        if f.dim == 0 || f.kraus.is_empty() {
            return Err(Error::ShapeMismatch("empty channel".into()));
        }
        let kraus = f
            .kraus
            .iter()
            .map(|k| from_json_entries(f.dim, f.dim, k))
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(kraus)
    }
}

impl From<&ChoiMatrix> for ChoiFile {
    fn from(j: &ChoiMatrix) -> Self {
        Self {
            dim: j.dim,
            choi: to_json_entries(&j.mat),
        }
    }
}

impl TryFrom<ChoiFile> for ChoiMatrix {
    type Error = Error;

    fn try_from(f: ChoiFile) -> Result<Self> {
        let n2 = f.dim * f.dim;
        ChoiMatrix::new(f.dim, from_json_entries(n2, n2, &f.choi)?)
    }
}

impl DeviceFile {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Resolves either representation to a Kraus channel.
    pub fn into_channel(self) -> Result<KrausChannel> {
        match self {
            DeviceFile::Kraus(f) => f.try_into(),
            DeviceFile::Choi(f) => kraus_of(&f.try_into()?),
        }
    }
}
