//! Truncated Fock-space tools: beam-splitter matrix elements, thermal-loss
//! Kraus operators, channel action, Gaussian post-selection and single-mode
//! activity of non-Gaussian states.
//!
//! η is the amplitude transmittance throughout (intensity η²).

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{entropy_g, GaussianState};
use crate::symplectic::{select_modes, CovarianceMatrix};

pub const DEFAULT_DIM: usize = 40;
/// Largest Kraus index (m or n) accepted by `thermal_loss_kraus`.
pub const MAX_KRAUS_INDEX: usize = 256;
/// Largest trace deficit accepted for entropy-based functionals.
pub const MAX_TRACE_LEAK: f64 = 1e-6;

const LN_FACT_TABLE: usize = 1024;

fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut v = Vec::with_capacity(LN_FACT_TABLE);
        let mut acc = 0.0;
        v.push(0.0);
        for k in 1..LN_FACT_TABLE {
            acc += (k as f64).ln();
            v.push(acc);
        }
        v
    });
    if n < LN_FACT_TABLE {
        t[n]
    } else {
        t[LN_FACT_TABLE - 1] + (LN_FACT_TABLE..=n).map(|k| (k as f64).ln()).sum::<f64>()
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// k·ln(x) with 0·ln 0 = 0.
fn pow_ln(x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "transmittance {eta} outside (0, 1]"
        )));
    }
    Ok(())
}

/// ⟨m₁, m| U_BS |n₁, n⟩ for a beam splitter of amplitude transmittance η.
pub fn bs_matrix_element(m1: usize, m: usize, n1: usize, n: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(bs_element_unchecked(m1, m, n1, n, eta))
}

fn bs_element_unchecked(m1: usize, m: usize, n1: usize, n: usize, eta: f64) -> f64 {
    if m1 + m != n1 + n {
        return 0.0;
    }
    let refl = (1.0 - eta * eta).max(0.0).sqrt();
    let prefactor = 0.5 * (ln_factorial(m1) + ln_factorial(m) - ln_factorial(n1) - ln_factorial(n));
    let mut total = 0.0;
    for s in 0..=n1.min(m) {
        let t = m - s;
        if t > n {
            continue;
        }
        let te = n1 - s + t;
        let re = s + n - t;
        if refl == 0.0 && re > 0 {
            continue;
        }
        let ln =
            prefactor + ln_binomial(n1, s) + ln_binomial(n, t) + pow_ln(eta, te) + pow_ln(refl, re);
        let sign = if (n - t).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * ln.exp();
    }
    total
}

/// Density matrix on a truncated Fock space (dimension `dim` per mode,
/// two-mode index i₁·dim + i₂).
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    rho: DMatrix<Complex64>,
    dim: usize,
    modes: usize,
}

impl FockDensity {
    pub fn new(rho: DMatrix<Complex64>, dim: usize, modes: usize) -> Result<Self> {
        if dim == 0 || modes == 0 || modes > 2 {
            return Err(Error::InvalidDimension(format!(
                "{modes} modes of dimension {dim}"
            )));
        }
        let size = dim.pow(modes as u32);
        if rho.shape() != (size, size) {
            return Err(Error::InvalidShape(format!(
                "expected {size}x{size}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        if (&rho - rho.adjoint()).norm() > 1e-10 {
            return Err(Error::InvalidArgument(
                "density matrix is not Hermitian".into(),
            ));
        }
        let herm = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let min = herm.symmetric_eigenvalues().min();
        if min < -1e-9 {
            return Err(Error::InvalidArgument(format!(
                "density matrix has eigenvalue {min}"
            )));
        }
        let tr = herm.trace().re;
        if tr > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!("trace {tr} exceeds 1")));
        }
        Ok(Self {
            rho: herm,
            dim,
            modes,
        })
    }

    fn from_trusted(rho: DMatrix<Complex64>, dim: usize, modes: usize) -> Self {
        Self { rho, dim, modes }
    }

    pub fn from_pure(psi: &DVector<Complex64>, dim: usize, modes: usize) -> Result<Self> {
        Self::new(psi * psi.adjoint(), dim, modes)
    }

    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::Truncation(format!(
                "|{n}> does not fit in dimension {dim}"
            )));
        }
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(Self::from_trusted(rho, dim, 1))
    }

    /// Geometric distribution (1−x)xⁿ, x = n̄/(n̄+1), cut at `dim`.
    pub fn thermal(nbar: f64, dim: usize) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mean photon number {nbar} < 0"
            )));
        }
        let x = nbar / (nbar + 1.0);
        let diag = DVector::from_fn(dim, |n, _| {
            Complex64::new((1.0 - x) * x.powi(n as i32), 0.0)
        });
        Ok(Self::from_trusted(DMatrix::from_diagonal(&diag), dim, 1))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn mean_photon_number(&self) -> Result<f64> {
        self.require_single_mode()?;
        Ok(self
            .populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum())
    }

    /// Eigenvalue entropy −Σλ ln λ.
    pub fn entropy(&self) -> f64 {
        self.rho
            .symmetric_eigenvalues()
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| -l * l.ln())
            .sum()
    }

    fn require_single_mode(&self) -> Result<()> {
        if self.modes != 1 {
            return Err(Error::InvalidDimension(format!(
                "operation needs one mode, state has {}",
                self.modes
            )));
        }
        Ok(())
    }

    /// First and second moments (q = (a+a†)/√2), normalized by the trace.
    pub fn moments(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.require_single_mode()?;
        let tr = self.trace();
        let d = self.dim;
        let mut a = Complex64::new(0.0, 0.0);
        let mut a2 = Complex64::new(0.0, 0.0);
        let mut n = 0.0;
        for k in 0..d {
            n += k as f64 * self.rho[(k, k)].re;
            if k + 1 < d {
                // ⟨a⟩ = Σ √(k+1) ρ_{k+1,k}
                a += self.rho[(k + 1, k)] * ((k + 1) as f64).sqrt();
            }
            if k + 2 < d {
                a2 += self.rho[(k + 2, k)] * (((k + 1) * (k + 2)) as f64).sqrt();
            }
        }
        let (a, a2, n) = (a / tr, a2 / tr, n / tr);
        let dq = std::f64::consts::SQRT_2 * a.re;
        let dp = std::f64::consts::SQRT_2 * a.im;
        let qq = a2.re + n + 0.5 - dq * dq;
        let pp = -a2.re + n + 0.5 - dp * dp;
        let qp = a2.im - dq * dp;
        Ok((
            DVector::from_row_slice(&[dq, dp]),
            DMatrix::from_row_slice(2, 2, &[qq, qp, qp, pp]),
        ))
    }
}

fn ladder(dim: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Unitary D(α)S(ζ) and thermal ratio x = (ν−½)/(ν+½) of a single-mode
/// state, with the unitary built in a padded space larger than `dim`.
fn gaussian_frame(state: &GaussianState, dim: usize) -> Result<(DMatrix<Complex64>, f64)> {
    if state.modes() != 1 {
        return Err(Error::InvalidDimension(
            "Fock encoding takes one mode".into(),
        ));
    }
    if dim < 2 {
        return Err(Error::Truncation(format!("dimension {dim} < 2")));
    }
    let big = dim + dim.max(40);
    let g = state.covariance();
    let d = state.displacement();
    let nu = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)])
        .max(0.25)
        .sqrt();
    let m = Complex64::new(0.5 * (g[(0, 0)] - g[(1, 1)]), g[(0, 1)]);
    let cosh2r = ((g[(0, 0)] + g[(1, 1)]) / (2.0 * nu)).max(1.0);
    let r = 0.5 * cosh2r.acosh();
    let phase = if m.norm() > 0.0 {
        -m / m.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let zeta = phase * r;
    let alpha = Complex64::new(d[0], d[1]) / std::f64::consts::SQRT_2;

    let a = ladder(big);
    let ad = a.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let sq = ((&a * &a) * (zeta.conj() * half) - (&ad * &ad) * (zeta * half)).exp();
    let disp = (&ad * alpha - &a * alpha.conj()).exp();
    let x = (nu - 0.5).max(0.0) / (nu + 0.5);
    Ok((disp * sq, x))
}

/// U·diag(f)·U† cropped to `dim` and symmetrized.
fn conjugate_diagonal(
    u: &DMatrix<Complex64>,
    f: impl Fn(usize) -> f64,
    dim: usize,
) -> DMatrix<Complex64> {
    let diag = DMatrix::from_diagonal(&DVector::from_fn(u.nrows(), |n, _| {
        Complex64::new(f(n), 0.0)
    }));
    let full = u * diag * u.adjoint();
    let m = full.view((0, 0), (dim, dim)).into_owned();
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Fock matrix of a single-mode Gaussian state, D(α)S(ζ)τS(ζ)†D(α)†, built in
/// a padded space and cropped to `dim`.
pub fn from_gaussian(state: &GaussianState, dim: usize) -> Result<FockDensity> {
    let (u, x) = gaussian_frame(state, dim)?;
    let rho = conjugate_diagonal(&u, |n| (1.0 - x) * x.powi(n as i32), dim);
    Ok(FockDensity::from_trusted(rho, dim, 1))
}

/// ln σ of a mixed single-mode Gaussian state in the Fock basis, as
/// D(α)S(ζ)·ln τ·S(ζ)†D(α)† with ln τₙₙ = ln(1−x) + n ln x. Avoids the
/// eigenvalues of σ that fall below double precision.
pub fn log_gaussian(state: &GaussianState, dim: usize) -> Result<DMatrix<Complex64>> {
    let (u, x) = gaussian_frame(state, dim)?;
    if x <= 0.0 {
        return Err(Error::PreconditionFailed(
            "ln σ is unbounded for a pure state".into(),
        ));
    }
    let (l0, lx) = ((1.0 - x).ln(), x.ln());
    Ok(conjugate_diagonal(&u, |n| l0 + n as f64 * lx, dim))
}

/// S(ρ₁‖ρ₂) = Tr ρ₁ ln ρ₁ − Tr ρ₁ ln ρ₂ from eigendecompositions.
pub fn fock_relative_entropy(rho1: &FockDensity, rho2: &FockDensity) -> Result<f64> {
    if rho1.rho.shape() != rho2.rho.shape() {
        return Err(Error::InvalidDimension("Fock dimensions differ".into()));
    }
    let eig = rho2.rho.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let w = v.adjoint() * &rho1.rho * v;
    let mut cross = 0.0;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let weight = w[(k, k)].re;
        if weight.abs() < 1e-300 {
            continue;
        }
        if l <= 0.0 {
            return Ok(f64::INFINITY);
        }
        cross += weight * l.ln();
    }
    Ok(-rho1.entropy() - cross)
}

/// S(ρ₁‖σ) for a Gaussian reference σ, with ln σ from [`log_gaussian`].
pub fn fock_relative_entropy_gaussian(rho1: &FockDensity, sigma: &GaussianState) -> Result<f64> {
    rho1.require_single_mode()?;
    let ln_sigma = log_gaussian(sigma, rho1.dim)?;
    let cross = (&rho1.rho * ln_sigma).trace().re;
    Ok(-rho1.entropy() - cross)
}

/// Kraus operators K_mn = √pₙ ⟨m|U_BS|n⟩ of the thermal-loss channel.
#[derive(Debug, Clone)]
pub struct KrausSet {
    pub eta: f64,
    pub nbar_tau: f64,
    pub dim: usize,
    /// ((m, n), K_mn); operators with pₙ = 0 are omitted.
    pub operators: Vec<((usize, usize), DMatrix<f64>)>,
}

impl KrausSet {
    pub fn get(&self, m: usize, n: usize) -> Option<&DMatrix<f64>> {
        self.operators
            .iter()
            .find(|(k, _)| *k == (m, n))
            .map(|(_, op)| op)
    }

    /// diag(I − Σ K†K).
    pub fn completeness_deficit(&self) -> Vec<f64> {
        let mut sum = DMatrix::<f64>::zeros(self.dim, self.dim);
        for (_, k) in &self.operators {
            sum += k.transpose() * k;
        }
        (0..self.dim).map(|i| 1.0 - sum[(i, i)]).collect()
    }
}

pub fn thermal_loss_kraus(eta: f64, nbar_tau: f64, dim: usize, max_mn: usize) -> Result<KrausSet> {
    check_eta(eta)?;
    if !(nbar_tau >= 0.0) || !nbar_tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bath photon number {nbar_tau} < 0"
        )));
    }
    if dim < 2 {
        return Err(Error::Truncation(format!("dimension {dim} < 2")));
    }
    if max_mn > MAX_KRAUS_INDEX {
        return Err(Error::Truncation(format!(
            "Kraus index {max_mn} exceeds {MAX_KRAUS_INDEX}"
        )));
    }
    let x = nbar_tau / (nbar_tau + 1.0);
    let n_max = if nbar_tau == 0.0 { 0 } else { max_mn };
    let index: Vec<(usize, usize)> = (0..=max_mn)
        .flat_map(|m| (0..=n_max).map(move |n| (m, n)))
        .collect();
    let operators = index
        .into_par_iter()
        .map(|(m, n)| {
            let amp = ((1.0 - x) * x.powi(n as i32)).sqrt();
            let mut k = DMatrix::zeros(dim, dim);
            for n1 in 0..dim {
                if n1 + n < m {
                    continue;
                }
                let m1 = n1 + n - m;
                if m1 < dim {
                    k[(m1, n1)] = amp * bs_element_unchecked(m1, m, n1, n, eta);
                }
            }
            ((m, n), k)
        })
        .collect();
    Ok(KrausSet {
        eta,
        nbar_tau,
        dim,
        operators,
    })
}

#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub output: FockDensity,
    /// ‖I − ΣK†K‖ on the input support.
    pub completeness_deficit: f64,
}

pub fn apply_kraus_channel(rho: &FockDensity, kraus: &KrausSet) -> Result<ChannelOutput> {
    rho.require_single_mode()?;
    if rho.dim != kraus.dim {
        return Err(Error::InvalidDimension(format!(
            "state dimension {} vs Kraus dimension {}",
            rho.dim, kraus.dim
        )));
    }
    let d = rho.dim;
    let out = kraus
        .operators
        .par_iter()
        .map(|(_, k)| {
            // each K_mn has a single nonzero per column
            let entries: Vec<(usize, usize, f64)> = (0..d)
                .flat_map(|c| (0..d).map(move |r| (r, c)))
                .filter(|&(r, c)| k[(r, c)] != 0.0)
                .map(|(r, c)| (r, c, k[(r, c)]))
                .collect();
            let mut acc = DMatrix::<Complex64>::zeros(d, d);
            for &(r1, c1, v1) in &entries {
                for &(r2, c2, v2) in &entries {
                    acc[(r1, r2)] += rho.rho[(c1, c2)] * (v1 * v2);
                }
            }
            acc
        })
        .reduce(|| DMatrix::zeros(d, d), |a, b| a + b);

    let support: Vec<usize> = (0..d).filter(|&i| rho.rho[(i, i)].re > 1e-12).collect();
    let mut sum = DMatrix::<f64>::zeros(d, d);
    for (_, k) in &kraus.operators {
        sum += k.transpose() * k;
    }
    let mut deficit = 0.0;
    for &i in &support {
        for &j in &support {
            let e = if i == j { 1.0 } else { 0.0 } - sum[(i, j)];
            deficit += e * e;
        }
    }
    Ok(ChannelOutput {
        output: FockDensity::from_trusted(out, d, 1),
        completeness_deficit: deficit.sqrt(),
    })
}

/// Γ′ = η²Γ + (1−η²)(n̄_τ+½)I, x̄′ = ηx̄ on every mode.
pub fn phase_space_loss_channel(
    state: &GaussianState,
    eta: f64,
    nbar_tau: f64,
) -> Result<GaussianState> {
    check_eta(eta)?;
    if !(nbar_tau >= 0.0) || !nbar_tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bath photon number {nbar_tau} < 0"
        )));
    }
    let dim = state.covariance().nrows();
    let noise = (1.0 - eta * eta) * (nbar_tau + 0.5);
    let cm = state.covariance() * (eta * eta) + DMatrix::identity(dim, dim) * noise;
    GaussianState::new(
        state.displacement() * eta,
        CovarianceMatrix::from_trusted(cm),
    )
}

/// Conditional state of the unmeasured modes after projecting `measured`
/// onto a Gaussian state with CM γ and zero mean:
/// Γ̃ = Γ_AA − Γ_AB(Γ_BB + γ)⁻¹Γ_ABᵀ, x̄̃ = x̄_A − Γ_AB(Γ_BB + γ)⁻¹x̄_B.
pub fn gaussian_postselect(
    state: &GaussianState,
    measured: &[usize],
    gamma_meas: &CovarianceMatrix,
) -> Result<GaussianState> {
    let n = state.modes();
    let mut b = measured.to_vec();
    b.sort_unstable();
    b.dedup();
    if b.len() != measured.len() || b.is_empty() || b.iter().any(|&m| m >= n) {
        return Err(Error::InvalidArgument(format!(
            "bad measured mode set {measured:?}"
        )));
    }
    let a: Vec<usize> = (0..n).filter(|m| !b.contains(m)).collect();
    if a.is_empty() {
        return Err(Error::InvalidArgument(
            "no modes left after measurement".into(),
        ));
    }
    if gamma_meas.modes() != b.len() {
        return Err(Error::InvalidDimension(format!(
            "measurement CM has {} modes, {} measured",
            gamma_meas.modes(),
            b.len()
        )));
    }
    let idx =
        |set: &[usize]| -> Vec<usize> { set.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect() };
    let (ia, ib) = (idx(&a), idx(&b));
    let g = state.covariance();
    let gaa = select_modes(g, &a);
    let gbb = select_modes(g, &b);
    let gab = DMatrix::from_fn(ia.len(), ib.len(), |i, j| g[(ia[i], ib[j])]);
    let m = gbb + gamma_meas.matrix();
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned("Γ_BB + γ is not positive definite".into()))?;
    let eig = m.symmetric_eigenvalues();
    if eig.min() < 1e-12 * eig.max().max(1.0) {
        return Err(Error::IllConditioned("Γ_BB + γ is singular".into()));
    }
    let gain = chol.solve(&gab.transpose()).transpose();
    let cm = &gaa - &gain * gab.transpose();
    let cm = (&cm + cm.transpose()) * 0.5;
    let d = state.displacement();
    let da = DVector::from_fn(ia.len(), |i, _| d[ia[i]]);
    let db = DVector::from_fn(ib.len(), |i, _| d[ib[i]]);
    let dt = da - &gain * db;
    GaussianState::new(dt, CovarianceMatrix::from_trusted(cm))
}

/// A_l = −S(ρ) + g(n̄ + ½) for a single-mode Fock density.
pub fn fock_single_mode_activity(rho: &FockDensity) -> Result<f64> {
    rho.require_single_mode()?;
    let leak = 1.0 - rho.trace();
    if leak > MAX_TRACE_LEAK {
        return Err(Error::Truncation(format!(
            "trace deficit {leak:e}; raise the Fock dimension"
        )));
    }
    Ok(entropy_g(rho.mean_photon_number()? + 0.5) - rho.entropy())
}

#[derive(Debug, Clone, Serialize)]
pub struct PostselectOutcome {
    #[serde(skip)]
    pub output: FockDensity,
    pub probability: f64,
    pub fidelity: f64,
    pub input_activity: f64,
    pub output_activity: f64,
    pub activity_gain: f64,
}

/// |1,1⟩ through a balanced beam splitter, second mode projected on |0⟩.
pub fn fock_postselect_demo() -> Result<PostselectOutcome> {
    let dim = 3;
    let eta = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = DVector::<Complex64>::zeros(dim);
    for m1 in 0..dim {
        psi[m1] = Complex64::new(bs_matrix_element(m1, 0, 1, 1, eta)?, 0.0);
    }
    let probability = psi.norm_squared();
    let psi = psi / Complex64::new(probability.sqrt(), 0.0);
    let output = FockDensity::from_pure(&psi, dim, 1)?;
    let fidelity = output.rho[(2, 2)].re;
    let input_activity = fock_single_mode_activity(&FockDensity::fock(1, dim)?)?;
    let output_activity = fock_single_mode_activity(&output)?;
    Ok(PostselectOutcome {
        output,
        probability,
        fidelity,
        input_activity,
        output_activity,
        activity_gain: output_activity - input_activity,
    })
}
