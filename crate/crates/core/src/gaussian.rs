//! Gaussian states and their state-level functionals.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symplectic::{
    direct_sum, omega, select_modes, williamson, CovarianceMatrix, SymplecticMatrix, TOL_PHYS,
};

/// Symplectic eigenvalues within this distance of ½ count as pure.
pub const EPS_PURE: f64 = 1e-8;

/// Entropy of a thermal mode with symplectic eigenvalue `y`:
/// g(y) = (y+½)ln(y+½) − (y−½)ln(y−½), with g(½) = 0.
pub fn entropy_g(y: f64) -> f64 {
    let x = y - 0.5;
    if x <= 0.0 {
        return 0.0;
    }
    (1.0 + x) * x.ln_1p() - x * x.ln()
}

/// A Gaussian state: displacement x̄ (length 2N) and covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    d: DVector<f64>,
    cm: CovarianceMatrix,
}

/// Preset Gaussian states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    Vacuum,
    Thermal { nbar: f64 },
    Coherent { re: f64, im: f64 },
    Squeezed { r: f64, phi: f64 },
    Tms { r: f64 },
}

impl StateKind {
    pub fn coherent(alpha: Complex64) -> Self {
        Self::Coherent {
            re: alpha.re,
            im: alpha.im,
        }
    }

    fn native_modes(&self) -> usize {
        match self {
            Self::Tms { .. } => 2,
            _ => 1,
        }
    }
}

impl GaussianState {
    pub fn new(d: DVector<f64>, cm: CovarianceMatrix) -> Result<Self> {
        if d.len() != cm.matrix().nrows() {
            return Err(Error::InvalidDimension(format!(
                "displacement has length {} but the covariance matrix is {}x{}",
                d.len(),
                cm.matrix().nrows(),
                cm.matrix().ncols()
            )));
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "displacement must be finite".into(),
            ));
        }
        Ok(Self { d, cm })
    }

    /// Zero-displacement state.
    pub fn centered(cm: CovarianceMatrix) -> Self {
        let d = DVector::zeros(cm.matrix().nrows());
        Self { d, cm }
    }

    pub(crate) fn from_parts(d: DVector<f64>, cm: CovarianceMatrix) -> Self {
        debug_assert_eq!(d.len(), cm.matrix().nrows());
        Self { d, cm }
    }

    pub fn modes(&self) -> usize {
        self.cm.modes()
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn cm(&self) -> &CovarianceMatrix {
        &self.cm
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        self.cm.matrix()
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        self.cm.symplectic_eigenvalues()
    }
}

/// Builds a preset; single-mode kinds are tensored up to `modes` copies
/// (two-mode kinds need an even count).
pub fn make_state(kind: StateKind, modes: usize) -> Result<GaussianState> {
    let native = kind.native_modes();
    if modes == 0 || !modes.is_multiple_of(native) {
        return Err(Error::InvalidDimension(format!(
            "{modes} modes requested for a {native}-mode preset"
        )));
    }
    let one = match kind {
        StateKind::Vacuum => GaussianState::centered(CovarianceMatrix::vacuum(1)),
        StateKind::Thermal { nbar } => {
            if !(nbar >= 0.0) || !nbar.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "mean photon number {nbar} < 0"
                )));
            }
            GaussianState::centered(CovarianceMatrix::thermal(&[nbar]))
        }
        StateKind::Coherent { re, im } => {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::InvalidParameter(
                    "coherent amplitude must be finite".into(),
                ));
            }
            let d = DVector::from_row_slice(&[re, im]) * std::f64::consts::SQRT_2;
            GaussianState::from_parts(d, CovarianceMatrix::vacuum(1))
        }
        StateKind::Squeezed { r, phi } => {
            if !r.is_finite() || !phi.is_finite() {
                return Err(Error::InvalidParameter("squeezing must be finite".into()));
            }
            let (s, c) = (0.5 * phi).sin_cos();
            let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let sq = DMatrix::from_diagonal(&DVector::from_row_slice(&[
                (2.0 * r).exp(),
                (-2.0 * r).exp(),
            ])) * 0.5;
            GaussianState::centered(CovarianceMatrix::from_trusted(&rot * sq * rot.transpose()))
        }
        StateKind::Tms { r } => {
            if !r.is_finite() {
                return Err(Error::InvalidParameter("squeezing must be finite".into()));
            }
            let ch = 0.5 * (2.0 * r).cosh();
            let sh = 0.5 * (2.0 * r).sinh();
            #[rustfmt::skip]
            let m = DMatrix::from_row_slice(4, 4, &[
                ch, 0.0, sh, 0.0,
                0.0, ch, 0.0, -sh,
                sh, 0.0, ch, 0.0,
                0.0, -sh, 0.0, ch,
            ]);
            GaussianState::centered(CovarianceMatrix::from_trusted(m))
        }
    };
    let copies = modes / native;
    if copies == 1 {
        Ok(one)
    } else {
        tensor(&vec![one; copies])
    }
}

/// E = ½(Tr Γ + |x̄|²); valid for any state with these moments.
pub fn energy(state: &GaussianState) -> f64 {
    0.5 * (state.cm.trace() + state.d.norm_squared())
}

/// n̄ᵢ = ½(Γ_qq + Γ_pp + d_q² + d_p²) − ½ for each mode.
pub fn mean_photon_numbers(state: &GaussianState) -> Vec<f64> {
    let g = state.covariance();
    let d = &state.d;
    (0..state.modes())
        .map(|i| {
            let (q, p) = (2 * i, 2 * i + 1);
            0.5 * (g[(q, q)] + g[(p, p)] + d[q] * d[q] + d[p] * d[p]) - 0.5
        })
        .collect()
}

/// x̄ → S·x̄ + shift, Γ → S·Γ·Sᵀ.
pub fn apply_gaussian_unitary(
    state: &GaussianState,
    s: &SymplecticMatrix,
    shift: &DVector<f64>,
) -> Result<GaussianState> {
    let dim = state.d.len();
    if s.matrix().nrows() != dim || shift.len() != dim {
        return Err(Error::InvalidDimension(format!(
            "state has dimension {dim}, transformation {}x{}, shift {}",
            s.matrix().nrows(),
            s.matrix().ncols(),
            shift.len()
        )));
    }
    let d = s.matrix() * &state.d + shift;
    Ok(GaussianState::from_parts(d, state.cm.transform(s.matrix())))
}

/// Passive or active transformation without displacement.
pub(crate) fn transform_state(state: &GaussianState, s: &DMatrix<f64>) -> GaussianState {
    GaussianState::from_parts(s * &state.d, state.cm.transform(s))
}

/// Tensor product: displacements concatenated, covariances direct-summed.
pub fn tensor(states: &[GaussianState]) -> Result<GaussianState> {
    if states.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot tensor an empty list of states".into(),
        ));
    }
    let blocks: Vec<&DMatrix<f64>> = states.iter().map(|s| s.covariance()).collect();
    let cm = direct_sum(&blocks);
    let d: Vec<f64> = states.iter().flat_map(|s| s.d.iter().copied()).collect();
    Ok(GaussianState::from_parts(
        DVector::from_vec(d),
        CovarianceMatrix::from_trusted(cm),
    ))
}

fn checked_modes(keep: &[usize], modes: usize) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("mode set is empty".into()));
    }
    let mut k = keep.to_vec();
    k.sort_unstable();
    k.dedup();
    if k.len() != keep.len() {
        return Err(Error::InvalidArgument("mode set has duplicates".into()));
    }
    if let Some(&bad) = k.iter().find(|&&m| m >= modes) {
        return Err(Error::InvalidArgument(format!(
            "mode {bad} out of range for a {modes}-mode state"
        )));
    }
    Ok(k)
}

/// Reduced state on `keep` (modes kept in ascending order).
pub fn partial_trace(state: &GaussianState, keep: &[usize]) -> Result<GaussianState> {
    let keep = checked_modes(keep, state.modes())?;
    let cm = select_modes(state.covariance(), &keep);
    let d = DVector::from_iterator(
        2 * keep.len(),
        keep.iter()
            .flat_map(|&k| [state.d[2 * k], state.d[2 * k + 1]]),
    );
    Ok(GaussianState::from_parts(
        d,
        CovarianceMatrix::from_trusted(cm),
    ))
}

/// S(ρ) = Σ g(νₖ) in nats.
pub fn von_neumann_entropy(state: &GaussianState) -> Result<f64> {
    cm_entropy(state.covariance())
}

pub(crate) fn cm_entropy(m: &DMatrix<f64>) -> Result<f64> {
    let nu = crate::symplectic::symplectic_eigenvalues(m)?;
    let min = nu.iter().copied().fold(f64::INFINITY, f64::min);
    if min < 0.5 - TOL_PHYS {
        return Err(Error::InvalidCm {
            min_symplectic_eig: min,
        });
    }
    Ok(nu.into_iter().map(entropy_g).sum())
}

/// G = −Ω·S·(⊕ 2coth⁻¹(2νₖ) I₂)·Sᵀ·Ω together with ln det(Γ + iΩ/2).
///
/// Returns `None` when some νₖ is within `EPS_PURE` of ½, where G diverges.
pub fn g_matrix(cm: &DMatrix<f64>) -> Result<Option<(DMatrix<f64>, f64)>> {
    let w = williamson(cm)?;
    if w.nu.iter().any(|&v| v <= 0.5 + EPS_PURE) {
        return Ok(None);
    }
    let n = w.nu.len();
    let mut mid = DMatrix::zeros(2 * n, 2 * n);
    let mut log_det = 0.0;
    for (k, &v) in w.nu.iter().enumerate() {
        let a = ((v + 0.5) / (v - 0.5)).ln();
        mid[(2 * k, 2 * k)] = a;
        mid[(2 * k + 1, 2 * k + 1)] = a;
        log_det += (v * v - 0.25).ln();
    }
    let om = omega(n);
    let s = w.s.matrix();
    let g = -(&om * s * mid * s.transpose() * &om);
    Ok(Some(((&g + g.transpose()) * 0.5, log_det)))
}

/// S(ρ1‖ρ2) in nats; `f64::INFINITY` when ρ2 has a pure symplectic mode
/// and ρ1 ≠ ρ2.
pub fn relative_entropy(rho1: &GaussianState, rho2: &GaussianState) -> Result<f64> {
    if rho1.modes() != rho2.modes() {
        return Err(Error::InvalidDimension(format!(
            "relative entropy between {}- and {}-mode states",
            rho1.modes(),
            rho2.modes()
        )));
    }
    let Some((g2, log_det)) = g_matrix(rho2.covariance())? else {
        return Ok(if rho1 == rho2 { 0.0 } else { f64::INFINITY });
    };
    let delta = &rho1.d - &rho2.d;
    let s1 = von_neumann_entropy(rho1)?;
    let tr = (rho1.covariance() * &g2).trace();
    let quad = delta.dot(&(&g2 * &delta));
    Ok(-s1 + 0.5 * (log_det + tr + quad))
}

/// I(A:B) = S(ρ_A) + S(ρ_B) − S(ρ_AB).
pub fn mutual_information(state: &GaussianState, a: &[usize], b: &[usize]) -> Result<f64> {
    let (a, b) = checked_partition(state.modes(), a, b)?;
    let sa = von_neumann_entropy(&partial_trace(state, &a)?)?;
    let sb = von_neumann_entropy(&partial_trace(state, &b)?)?;
    let sab = von_neumann_entropy(state)?;
    Ok(sa + sb - sab)
}

/// Validates that `a` and `b` are disjoint, nonempty, and cover all modes.
pub fn checked_partition(
    modes: usize,
    a: &[usize],
    b: &[usize],
) -> Result<(Vec<usize>, Vec<usize>)> {
    let a = checked_modes(a, modes)?;
    let b = checked_modes(b, modes)?;
    if a.iter().any(|m| b.contains(m)) {
        return Err(Error::InvalidArgument("partition blocks overlap".into()));
    }
    if a.len() + b.len() != modes {
        return Err(Error::InvalidArgument(format!(
            "partition covers {} of {modes} modes",
            a.len() + b.len()
        )));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{compile_passive_circuit, PassiveCircuitSpec};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, LN_2};

    fn thermal(n: f64) -> GaussianState {
        make_state(StateKind::Thermal { nbar: n }, 1).unwrap()
    }

    #[test]
    fn g_values() {
        assert_eq!(entropy_g(0.5), 0.0);
        assert_abs_diff_eq!(entropy_g(1.5), 2.0 * LN_2, epsilon = 1e-15);
        // g(2.5) = 3 ln 3 − 2 ln 2
        assert_abs_diff_eq!(
            entropy_g(2.5),
            3.0 * 3f64.ln() - 2.0 * LN_2,
            epsilon = 1e-14
        );
        // continuity just above ½
        assert!(entropy_g(0.5 + 1e-12) < 1e-10);
    }

    #[test]
    fn presets_reduce_to_vacuum() {
        let vac = make_state(StateKind::Vacuum, 1).unwrap();
        assert_eq!(thermal(0.0), vac);
        assert_eq!(
            make_state(StateKind::Squeezed { r: 0.0, phi: 0.0 }, 1).unwrap(),
            vac
        );
        let tms = make_state(StateKind::Tms { r: 1.0 }, 2).unwrap();
        for nu in tms.symplectic_eigenvalues() {
            assert_abs_diff_eq!(nu, 0.5, epsilon = 1e-12);
        }
        assert!(matches!(
            make_state(StateKind::Thermal { nbar: -1.0 }, 1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(make_state(StateKind::Tms { r: 1.0 }, 3).is_err());
    }

    #[test]
    fn energies_and_photon_numbers() {
        assert_abs_diff_eq!(energy(&make_state(StateKind::Vacuum, 1).unwrap()), 0.5);
        assert_abs_diff_eq!(energy(&thermal(2.0)), 2.5);
        let coh = make_state(StateKind::Coherent { re: 1.0, im: 0.0 }, 1).unwrap();
        assert_abs_diff_eq!(energy(&coh), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mean_photon_numbers(&thermal(3.0))[0], 3.0);
        let r: f64 = 0.8;
        let sq = make_state(StateKind::Squeezed { r, phi: 0.0 }, 1).unwrap();
        assert_abs_diff_eq!(
            mean_photon_numbers(&sq)[0],
            r.sinh().powi(2),
            epsilon = 1e-14
        );
        let alpha = Complex64::new(0.3, -1.1);
        let coh = make_state(StateKind::coherent(alpha), 1).unwrap();
        assert_abs_diff_eq!(
            mean_photon_numbers(&coh)[0],
            alpha.norm_sqr(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn unitary_action() {
        let st = thermal(1.0);
        let id = SymplecticMatrix::squeezers(&[0.0]);
        assert_eq!(
            apply_gaussian_unitary(&st, &id, &DVector::zeros(2)).unwrap(),
            st
        );
        let r = 0.6;
        let vac = make_state(StateKind::Vacuum, 1).unwrap();
        let sq =
            apply_gaussian_unitary(&vac, &SymplecticMatrix::squeezers(&[r]), &DVector::zeros(2))
                .unwrap();
        let expected = make_state(StateKind::Squeezed { r, phi: 0.0 }, 1).unwrap();
        assert!((sq.covariance() - expected.covariance()).norm() < 1e-14);
        assert!(apply_gaussian_unitary(&st, &id, &DVector::zeros(4)).is_err());
    }

    #[test]
    fn beam_splitter_on_orthogonal_squeezers_gives_tms() {
        let r = 0.9;
        let pair = tensor(&[
            make_state(StateKind::Squeezed { r: -r, phi: 0.0 }, 1).unwrap(),
            make_state(StateKind::Squeezed { r, phi: 0.0 }, 1).unwrap(),
        ])
        .unwrap();
        let bs =
            compile_passive_circuit(&PassiveCircuitSpec::new(2).beam_splitter(FRAC_PI_4, 0, 1))
                .unwrap();
        let out = transform_state(&pair, bs.matrix());
        let tms = make_state(StateKind::Tms { r }, 2).unwrap();
        assert!((out.covariance() - tms.covariance()).norm() < 1e-13);
    }

    #[test]
    fn tensor_and_trace() {
        let vv = tensor(&[
            make_state(StateKind::Vacuum, 1).unwrap(),
            make_state(StateKind::Vacuum, 1).unwrap(),
        ])
        .unwrap();
        assert_eq!(vv.covariance(), &(DMatrix::identity(4, 4) * 0.5));
        let t12 = tensor(&[thermal(1.0), thermal(2.0)]).unwrap();
        assert_eq!(
            t12.covariance(),
            &DMatrix::from_diagonal(&DVector::from_row_slice(&[1.5, 1.5, 2.5, 2.5]))
        );
        assert_abs_diff_eq!(energy(&t12), energy(&thermal(1.0)) + energy(&thermal(2.0)));
        assert_eq!(partial_trace(&t12, &[0]).unwrap(), thermal(1.0));
        assert!(matches!(tensor(&[]), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            partial_trace(&t12, &[]),
            Err(Error::InvalidArgument(_))
        ));

        let r: f64 = 0.7;
        let tms = make_state(StateKind::Tms { r }, 2).unwrap();
        let arm = partial_trace(&tms, &[1]).unwrap();
        assert!((arm.covariance() - thermal(r.sinh().powi(2)).covariance()).norm() < 1e-14);
    }

    #[test]
    fn entropies() {
        assert!(von_neumann_entropy(&make_state(StateKind::Vacuum, 1).unwrap()).unwrap() < 1e-12);
        assert_abs_diff_eq!(
            von_neumann_entropy(&thermal(1.0)).unwrap(),
            1.386294361119891,
            epsilon = 1e-12
        );
        assert!(
            von_neumann_entropy(&make_state(StateKind::Tms { r: 1.3 }, 2).unwrap()).unwrap() < 1e-9
        );
    }

    #[test]
    fn relative_entropy_values() {
        let t = thermal(0.7);
        assert!(relative_entropy(&t, &t).unwrap().abs() < 1e-10);
        let vac = make_state(StateKind::Vacuum, 1).unwrap();
        assert_abs_diff_eq!(
            relative_entropy(&vac, &thermal(1.0)).unwrap(),
            LN_2,
            epsilon = 1e-12
        );
        let coh = make_state(StateKind::Coherent { re: 1.0, im: 0.0 }, 1).unwrap();
        assert_abs_diff_eq!(
            relative_entropy(&coh, &thermal(1.0)).unwrap(),
            2.0 * LN_2,
            epsilon = 1e-12
        );
        // pure reference state
        assert_eq!(
            relative_entropy(&thermal(1.0), &vac).unwrap(),
            f64::INFINITY
        );
        assert_eq!(relative_entropy(&vac, &vac).unwrap(), 0.0);
        assert!(relative_entropy(&vac, &make_state(StateKind::Vacuum, 2).unwrap()).is_err());
    }

    #[test]
    fn mutual_information_values() {
        let prod = tensor(&[thermal(1.0), thermal(0.3)]).unwrap();
        assert!(mutual_information(&prod, &[0], &[1]).unwrap().abs() < 1e-12);
        let tms = make_state(StateKind::Tms { r: 1.0 }, 2).unwrap();
        let expected = 2.0 * entropy_g(2f64.cosh() / 2.0);
        assert_abs_diff_eq!(
            mutual_information(&tms, &[0], &[1]).unwrap(),
            expected,
            epsilon = 1e-10
        );
        let mut last = 0.0;
        for k in 1..20 {
            let tms = make_state(StateKind::Tms { r: 0.1 * k as f64 }, 2).unwrap();
            let i = mutual_information(&tms, &[0], &[1]).unwrap();
            assert!(i >= last);
            last = i;
        }
        assert!(matches!(
            mutual_information(&tms, &[0], &[0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(mutual_information(&tms, &[0], &[]).is_err());
    }
}
