//! Similarity functionals between (possibly subnormalized) states.
//!
//! `fidelity` is the root fidelity `tr sqrt(sqrt(rho) sigma sqrt(rho))`.
//! Sub- and super-fidelity bound its square: `E <= F^2 <= G`. The truncated
//! bounds sandwich the root fidelity itself.

use serde::{Deserialize, Serialize};

use crate::channels::ChoiMatrix;
use crate::error::{Error, Result};
use crate::numkernel::{eigen_noise_floor, hermitian_eig, psd_sqrt, trace_norm, CMatrix, EigSystem};

/// Square-root and arccos arguments this far outside their domain are clamped.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Fidelity bounds after projecting both states onto the top-`m` eigenspace
/// of the first one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedBounds {
    pub m: usize,
    /// Truncated fidelity `F(rho_m, sigma_m)`.
    pub lower: f64,
    /// `|| sqrt(rho_m) sqrt(sigma_m) ||_1 + sqrt((1 - tr rho_m)(1 - tr sigma_m))`
    pub upper: f64,
}

/// Every similarity quantity between two states. Fields a pipeline does not
/// compute are left as `None` (serialized as `null`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub f_root: Option<f64>,
    pub f_sq: Option<f64>,
    pub sub: Option<f64>,
    pub sup: Option<f64>,
    pub c_g: Option<f64>,
    pub a_g2: Option<f64>,
    pub spectrum: Vec<TruncatedBounds>,
}

pub(crate) fn clamped_sqrt(x: f64, what: &'static str) -> Result<f64> {
    if x < -DOMAIN_SLACK {
        return Err(Error::Domain { what, value: x });
    }
    Ok(x.max(0.0).sqrt())
}

fn square_pair<'a>(rho: &'a CMatrix, sigma: &'a CMatrix) -> Result<usize> {
    if !rho.is_square() {
        return Err(Error::NotSquare {
            rows: rho.rows(),
            cols: rho.cols(),
        });
    }
    if !sigma.is_square() {
        return Err(Error::NotSquare {
            rows: sigma.rows(),
            cols: sigma.cols(),
        });
    }
    if rho.rows() != sigma.rows() {
        return Err(Error::DimMismatch(rho.rows(), sigma.rows()));
    }
    Ok(rho.rows())
}

/// Root fidelity `|| sqrt(rho) sqrt(sigma) ||_1`. Accepts subnormalized operands.
pub fn fidelity(rho: impl AsRef<CMatrix>, sigma: impl AsRef<CMatrix>) -> Result<f64> {
    let (rho, sigma) = (rho.as_ref(), sigma.as_ref());
    square_pair(rho, sigma)?;
    trace_norm(&(&psd_sqrt(rho)? * &psd_sqrt(sigma)?))
}

/// `tr(rho sigma)`, real part.
pub fn overlap(rho: impl AsRef<CMatrix>, sigma: impl AsRef<CMatrix>) -> Result<f64> {
    let (rho, sigma) = (rho.as_ref(), sigma.as_ref());
    square_pair(rho, sigma)?;
    Ok(rho.trace_of_product(sigma)?.re)
}

/// `E = tr(rho sigma) + sqrt(2 [(tr rho sigma)^2 - tr (rho sigma)^2])`
pub fn sub_fidelity(rho: impl AsRef<CMatrix>, sigma: impl AsRef<CMatrix>) -> Result<f64> {
    let (rho, sigma) = (rho.as_ref(), sigma.as_ref());
    square_pair(rho, sigma)?;
    let prod = rho * sigma;
    let t = prod.trace().re;
    let t2 = prod.trace_of_product(&prod)?.re;
    sub_from_moments(t, t2, rho.rows())
}

/// `E` from `t = tr(rho sigma)` and `t2 = tr((rho sigma)^2)`.
///
/// Rounding-level radicands (pure inputs) are zeroed; this only lowers E.
pub(crate) fn sub_from_moments(t: f64, t2: f64, dim: usize) -> Result<f64> {
    let mut radicand = t * t - t2;
    if radicand.abs() <= 16.0 * dim as f64 * f64::EPSILON * (t * t).max(t2.abs()) {
        radicand = 0.0;
    }
    Ok(t + clamped_sqrt(2.0 * radicand, "sub-fidelity radicand")?)
}

/// `G = tr(rho sigma) + sqrt((1 - tr rho^2)(1 - tr sigma^2))`
pub fn super_fidelity(rho: impl AsRef<CMatrix>, sigma: impl AsRef<CMatrix>) -> Result<f64> {
    let (rho, sigma) = (rho.as_ref(), sigma.as_ref());
    square_pair(rho, sigma)?;
    let t = rho.trace_of_product(sigma)?.re;
    let p_rho = rho.trace_of_product(rho)?.re;
    let p_sigma = sigma.trace_of_product(sigma)?.re;
    let a = clamped_sqrt(1.0 - p_rho, "purity deficit")?;
    let b = clamped_sqrt(1.0 - p_sigma, "purity deficit")?;
    Ok(t + a * b)
}

/// Eigenbasis of the reference state, reused across truncation ranks.
struct Truncation {
    eig: EigSystem,
    floor: f64,
}

impl Truncation {
    fn new(rho: &CMatrix) -> Result<Self> {
        let eig = hermitian_eig(rho)?;
        let floor = eigen_noise_floor(&eig.values);
        Ok(Self { eig, floor })
    }

    fn bounds(&self, sigma: &CMatrix, m: usize) -> Result<TruncatedBounds> {
        let dim = self.eig.values.len();
        if m == 0 || m > dim {
            return Err(Error::BadRank { m, dim });
        }
        // work in the m-dimensional coordinates of the kept eigenspace
        let top: Vec<f64> = self.eig.values[..m]
            .iter()
            .map(|&x| if x > self.floor { x } else { 0.0 })
            .collect();
        let vm = self.eig.vectors.leading_columns(m);
        let sigma_m = sigma.conjugate_by(&vm.adjoint())?.hermitian_part();
        let sqrt_rho_m = CMatrix::from_real_diag(&top.iter().map(|x| x.sqrt()).collect::<Vec<_>>());
        let lower = trace_norm(&(&sqrt_rho_m * &psd_sqrt(&sigma_m)?))?;
        let tr_rho_m: f64 = top.iter().sum();
        let tr_sigma_m = sigma_m.trace().re;
        let residual = clamped_sqrt(1.0 - tr_rho_m, "truncation residual")?
            * clamped_sqrt(1.0 - tr_sigma_m, "truncation residual")?;
        Ok(TruncatedBounds {
            m,
            lower,
            upper: lower + residual,
        })
    }
}

/// Truncated fidelity bounds at rank `m`, in the eigenbasis of `rho`.
pub fn truncated_bounds(
    rho: impl AsRef<CMatrix>,
    sigma: impl AsRef<CMatrix>,
    m: usize,
) -> Result<TruncatedBounds> {
    let (rho, sigma) = (rho.as_ref(), sigma.as_ref());
    let dim = square_pair(rho, sigma)?;
    if m == 0 || m > dim {
        return Err(Error::BadRank { m, dim });
    }
    Truncation::new(rho)?.bounds(sigma, m)
}

/// Truncated bounds for every `m = 1..=dim`.
pub fn fidelity_spectrum(
    rho: impl AsRef<CMatrix>,
    sigma: impl AsRef<CMatrix>,
) -> Result<Vec<TruncatedBounds>> {
    let (rho, sigma) = (rho.as_ref(), sigma.as_ref());
    let dim = square_pair(rho, sigma)?;
    let t = Truncation::new(rho)?;
    (1..=dim).map(|m| t.bounds(sigma, m)).collect()
}

/// `sqrt(1 - G)` from a super-fidelity value.
pub fn cg_from_super(g: f64) -> Result<f64> {
    clamped_sqrt(1.0 - g, "1 - G")
}

/// `arccos(c)`, clamping `c` into `[-1, 1]` when within slack.
pub fn arccos_clamped(c: f64) -> Result<f64> {
    if !(-1.0 - DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&c) {
        return Err(Error::Domain {
            what: "arccos",
            value: c,
        });
    }
    Ok(c.clamp(-1.0, 1.0).acos())
}

fn choi_pair(j0: &ChoiMatrix, j1: &ChoiMatrix) -> Result<()> {
    if j0.dim() != j1.dim() {
        return Err(Error::DimMismatch(j0.dim(), j1.dim()));
    }
    Ok(())
}

/// Root infidelity built on super-fidelity, `C_G = sqrt(1 - G(J0, J1))`.
pub fn cg_distance(j0: &ChoiMatrix, j1: &ChoiMatrix) -> Result<f64> {
    choi_pair(j0, j1)?;
    cg_from_super(super_fidelity(j0, j1)?)
}

/// `A_{G^2} = arccos(C_G)`, evaluated literally.
pub fn a_g2(j0: &ChoiMatrix, j1: &ChoiMatrix) -> Result<f64> {
    arccos_clamped(cg_distance(j0, j1)?)
}

/// Every exactly computable quantity for a pair of states.
pub fn bounds_report(rho: impl AsRef<CMatrix>, sigma: impl AsRef<CMatrix>) -> Result<BoundsReport> {
    let (rho, sigma) = (rho.as_ref(), sigma.as_ref());
    let f = fidelity(rho, sigma)?;
    let sup = super_fidelity(rho, sigma)?;
    let c_g = cg_from_super(sup)?;
    Ok(BoundsReport {
        f_root: Some(f),
        f_sq: Some(f * f),
        sub: Some(sub_fidelity(rho, sigma)?),
        sup: Some(sup),
        c_g: Some(c_g),
        a_g2: Some(arccos_clamped(c_g)?),
        spectrum: fidelity_spectrum(rho, sigma)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::fixtures::pauli_x;
    use crate::channels::{choi_of, max_entangled, DensityMatrix, KrausChannel};
    use crate::randchan::{random_choi, random_density, RngState};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3};

    fn ket0() -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_real_diag(&[1.0, 0.0])).unwrap()
    }

    fn ket_plus() -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap()).unwrap()
    }

    fn half_mixed() -> DensityMatrix {
        DensityMatrix::maximally_mixed(2)
    }

    fn x_choi() -> ChoiMatrix {
        choi_of(&KrausChannel::unitary(pauli_x()).unwrap()).unwrap()
    }

    fn id_choi() -> ChoiMatrix {
        choi_of(&KrausChannel::identity(2)).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = RngState::new(1);
        let rho = random_density(5, 3, &mut rng).unwrap();
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);

        let f = fidelity(max_entangled(2), CMatrix::identity(4).scale_real(0.25)).unwrap();
        assert!((f - 0.5).abs() < 1e-12);

        let f = fidelity(half_mixed(), ket0()).unwrap();
        assert!((f - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn fidelity_errors() {
        assert!(matches!(
            fidelity(CMatrix::identity(2), CMatrix::identity(3)),
            Err(Error::DimMismatch(2, 3))
        ));
        let neg = CMatrix::from_real_diag(&[1.5, -0.5]);
        assert!(matches!(fidelity(&neg, ket0()), Err(Error::NotPsd(_))));
    }

    #[test]
    fn sub_fidelity_examples() {
        assert!((sub_fidelity(half_mixed(), half_mixed()).unwrap() - 1.0).abs() < 1e-12);
        assert!((sub_fidelity(ket0(), ket_plus()).unwrap() - 0.5).abs() < 1e-12);
        assert!((sub_fidelity(half_mixed(), ket0()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn super_fidelity_examples() {
        let mut rng = RngState::new(2);
        let rho = random_density(4, 2, &mut rng).unwrap();
        assert!((super_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
        assert!((super_fidelity(half_mixed(), ket0()).unwrap() - 0.5).abs() < 1e-12);
        assert!(super_fidelity(id_choi(), x_choi()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pure_state_counterexample_to_root_chain() {
        // F = |<0|+>| = 1/sqrt2 but G = 1/2 < F: the chain only holds for F^2
        let f = fidelity(ket0(), ket_plus()).unwrap();
        let g = super_fidelity(ket0(), ket_plus()).unwrap();
        assert!(g < f);
        assert!((f * f - g).abs() < 1e-12);
    }

    #[test]
    fn truncated_pure_reference_is_exact_at_m1() {
        let mut rng = RngState::new(3);
        let rho = random_density(4, 1, &mut rng).unwrap();
        let sigma = random_density(4, 3, &mut rng).unwrap();
        let f = fidelity(&rho, &sigma).unwrap();
        let b = truncated_bounds(&rho, &sigma, 1).unwrap();
        assert!((b.lower - f).abs() < 1e-9);
        assert!((b.upper - f).abs() < 1e-9);
    }

    #[test]
    fn truncated_full_rank_projector_is_exact() {
        let mut rng = RngState::new(4);
        let rho = random_density(6, 6, &mut rng).unwrap();
        let sigma = random_density(6, 4, &mut rng).unwrap();
        let f = fidelity(&rho, &sigma).unwrap();
        let b = truncated_bounds(&rho, &sigma, 6).unwrap();
        assert!((b.lower - f).abs() < 1e-9 && (b.upper - f).abs() < 1e-9);
    }

    #[test]
    fn truncated_rank6_choi_is_exact_at_m6() {
        let mut rng = RngState::new(6);
        let j0 = random_choi(4, 6, &mut rng).unwrap();
        let j1 = random_choi(4, 10, &mut rng).unwrap();
        let f = fidelity(&j0, &j1).unwrap();
        let b = truncated_bounds(&j0, &j1, 6).unwrap();
        assert!((b.lower - f).abs() < 1e-8);
        assert!((b.upper - f).abs() < 1e-8);
    }

    #[test]
    fn truncated_bad_rank() {
        let r = ket0();
        assert!(matches!(truncated_bounds(&r, &r, 0), Err(Error::BadRank { m: 0, dim: 2 })));
        assert!(matches!(truncated_bounds(&r, &r, 3), Err(Error::BadRank { m: 3, .. })));
    }

    #[test]
    fn spectrum_self_case_tracks_captured_weight() {
        let mut rng = RngState::new(9);
        let rho = random_density(8, 5, &mut rng).unwrap();
        let eig = hermitian_eig(rho.matrix()).unwrap();
        let spectrum = fidelity_spectrum(&rho, &rho).unwrap();
        assert_eq!(spectrum.len(), 8);
        let mut captured = 0.0;
        for (k, b) in spectrum.iter().enumerate() {
            captured += eig.values[k].max(0.0);
            assert!((b.lower - captured.min(1.0)).abs() < 1e-9, "m={}", b.m);
        }
        assert!((spectrum[4].lower - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectrum_orders_around_fidelity() {
        let mut rng = RngState::new(10);
        let j0 = random_choi(4, 6, &mut rng).unwrap();
        let j1 = random_choi(4, 6, &mut rng).unwrap();
        let f = fidelity(&j0, &j1).unwrap();
        let spectrum = fidelity_spectrum(&j0, &j1).unwrap();
        for w in spectrum.windows(2) {
            assert!(w[1].lower >= w[0].lower - 1e-9);
            assert!(w[1].upper <= w[0].upper + 1e-9);
        }
        for b in &spectrum {
            assert!(b.lower <= f + 1e-9 && f <= b.upper + 1e-9);
        }
    }

    #[test]
    fn cg_and_a_g2_examples() {
        assert!(cg_distance(&id_choi(), &id_choi()).unwrap().abs() < 1e-7);
        assert!((a_g2(&id_choi(), &id_choi()).unwrap() - FRAC_PI_2).abs() < 1e-7);
        assert!((cg_distance(&id_choi(), &x_choi()).unwrap() - 1.0).abs() < 1e-12);
        assert!(a_g2(&id_choi(), &x_choi()).unwrap().abs() < 1e-6);
        assert!((cg_from_super(0.75).unwrap() - 0.5).abs() < 1e-15);
        assert!((arccos_clamped(0.5).unwrap() - FRAC_PI_3).abs() < 1e-15);
        let other = random_choi(3, 2, &mut RngState::new(0)).unwrap();
        assert!(matches!(cg_distance(&id_choi(), &other), Err(Error::DimMismatch(2, 3))));
    }

    #[test]
    fn clamping_domain() {
        assert_eq!(clamped_sqrt(-1e-13, "x").unwrap(), 0.0);
        assert!(clamped_sqrt(-1e-6, "x").is_err());
        assert_eq!(arccos_clamped(1.0 + 1e-13).unwrap(), 0.0);
        assert!(arccos_clamped(1.1).is_err());
    }

    #[test]
    fn report_fields_consistent() {
        let mut rng = RngState::new(12);
        let j0 = random_choi(2, 2, &mut rng).unwrap();
        let j1 = random_choi(2, 3, &mut rng).unwrap();
        let r = bounds_report(&j0, &j1).unwrap();
        let f = r.f_root.unwrap();
        assert_eq!(r.f_sq.unwrap(), f * f);
        assert!(r.sub.unwrap() <= f * f + 1e-9 && f * f <= r.sup.unwrap() + 1e-9);
        assert_eq!(r.spectrum.len(), 4);
    }
}
