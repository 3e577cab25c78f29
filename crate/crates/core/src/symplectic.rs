//! Real symplectic linear algebra in the (q1, p1, ..., qN, pN) ordering.
//!
//! Vacuum has covariance ½·I (ħ = 1). Matrices are dense `DMatrix<f64>`;
//! the newtypes below only record which invariant a matrix is known to
//! satisfy.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frobenius tolerance for symplecticity, orthogonality and symmetry checks.
pub const TOL_SYMP: f64 = 1e-10;
/// Slack allowed below ½ on symplectic eigenvalues.
pub const TOL_PHYS: f64 = 1e-9;
/// Frobenius tolerance for decomposition round trips.
pub const TOL_RECON: f64 = 1e-9;

/// Per-call tolerance overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub symp: f64,
    pub phys: f64,
    pub recon: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symp: TOL_SYMP,
            phys: TOL_PHYS,
            recon: TOL_RECON,
        }
    }
}

/// Ω = ⊕ ω with ω = [[0, 1], [-1, 0]].
pub fn symplectic_form(modes: usize) -> Result<DMatrix<f64>> {
    if modes == 0 {
        return Err(Error::InvalidDimension(
            "number of modes must be positive".into(),
        ));
    }
    Ok(omega(modes))
}

pub(crate) fn omega(modes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

/// Number of modes of a 2N×2N matrix.
pub fn modes_of(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidShape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
        return Err(Error::InvalidDimension(format!(
            "matrix dimension {} is not a positive even number",
            m.nrows()
        )));
    }
    Ok(m.nrows() / 2)
}

/// ‖S·Ω·Sᵀ − Ω‖_F
pub fn symplectic_residual(s: &DMatrix<f64>) -> Result<f64> {
    let n = modes_of(s)?;
    let om = omega(n);
    Ok((s * &om * s.transpose() - om).norm())
}

/// ‖O·Oᵀ − I‖_F
pub fn orthogonal_residual(o: &DMatrix<f64>) -> f64 {
    (o * o.transpose() - DMatrix::identity(o.nrows(), o.ncols())).norm()
}

fn symmetry_residual(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm()
}

/// A 2N×2N real matrix with S·Ω·Sᵀ = Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix(DMatrix<f64>);

impl SymplecticMatrix {
    pub fn new(m: DMatrix<f64>, tol_symp: f64) -> Result<Self> {
        let residual = symplectic_residual(&m)?;
        if !(residual < tol_symp) {
            return Err(Error::InvalidSymplectic { residual });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is symplectic by construction.
    pub(crate) fn from_trusted(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    /// Single-mode squeezers ⊕ diag(e^{rᵢ}, e^{−rᵢ}).
    pub fn squeezers(r: &[f64]) -> Self {
        let mut m = DMatrix::zeros(2 * r.len(), 2 * r.len());
        for (k, &rk) in r.iter().enumerate() {
            m[(2 * k, 2 * k)] = rk.exp();
            m[(2 * k + 1, 2 * k + 1)] = (-rk).exp();
        }
        Self(m)
    }

    pub fn modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// A 2N×2N matrix that is both symplectic and orthogonal (a passive
/// linear-optics transformation).
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalSymplectic(DMatrix<f64>);

impl OrthogonalSymplectic {
    pub fn new(m: DMatrix<f64>, tol_symp: f64) -> Result<Self> {
        let residual = symplectic_residual(&m)?.max(orthogonal_residual(&m));
        if !(residual < tol_symp) {
            return Err(Error::InvalidSymplectic { residual });
        }
        Ok(Self(m))
    }

    pub(crate) fn from_trusted(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn identity(modes: usize) -> Self {
        Self(DMatrix::identity(2 * modes, 2 * modes))
    }

    pub fn modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn as_symplectic(&self) -> SymplecticMatrix {
        SymplecticMatrix(self.0.clone())
    }
}

/// A physical covariance matrix: symmetric with all symplectic eigenvalues
/// at least ½ (up to `tol_phys`).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(m, TOL_SYMP, TOL_PHYS)
    }

    pub fn with_tolerance(m: DMatrix<f64>, tol_symp: f64, tol_phys: f64) -> Result<Self> {
        modes_of(&m)?;
        let asym = symmetry_residual(&m);
        if asym > tol_symp * m.norm().max(1.0) {
            return Err(Error::InvalidShape(format!(
                "covariance matrix is not symmetric (residual {asym:e})"
            )));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let report = validate_cm(&sym, tol_phys)?;
        if !report.valid {
            return Err(Error::InvalidCm {
                min_symplectic_eig: report.min_symplectic_eig,
            });
        }
        Ok(Self(sym))
    }

    pub(crate) fn from_trusted(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    /// (n̄ + ½)·I on every mode.
    pub fn thermal(nbar: &[f64]) -> Self {
        let mut m = DMatrix::zeros(2 * nbar.len(), 2 * nbar.len());
        for (k, &n) in nbar.iter().enumerate() {
            m[(2 * k, 2 * k)] = n + 0.5;
            m[(2 * k + 1, 2 * k + 1)] = n + 0.5;
        }
        Self(m)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self(DMatrix::identity(2 * modes, 2 * modes) * 0.5)
    }

    pub fn modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.0).expect("physical covariance matrices are positive definite")
    }

    pub fn symplectic_trace(&self) -> f64 {
        2.0 * self.symplectic_eigenvalues().iter().sum::<f64>()
    }

    /// S·Γ·Sᵀ
    pub fn transform(&self, s: &DMatrix<f64>) -> Self {
        let m = s * &self.0 * s.transpose();
        Self((&m + m.transpose()) * 0.5)
    }

    /// The 2×2 block coupling modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.0.view((2 * i, 2 * j), (2, 2)).into_owned()
    }
}

impl AsRef<DMatrix<f64>> for CovarianceMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmValidation {
    pub valid: bool,
    pub min_symplectic_eig: f64,
}

/// Checks symmetry and the uncertainty relation ν ≥ ½ − `tol_phys`.
///
/// The symplectic spectrum is read off the eigenvalues of Ω·M, so a
/// non-positive matrix still gets a meaningful (invalid) report.
pub fn validate_cm(m: &DMatrix<f64>, tol_phys: f64) -> Result<CmValidation> {
    let n = modes_of(m)?;
    let asym = symmetry_residual(m);
    if asym > TOL_SYMP * m.norm().max(1.0) {
        return Err(Error::InvalidShape(format!(
            "matrix is not symmetric (residual {asym:e})"
        )));
    }
    let sym = (m + m.transpose()) * 0.5;
    let positive = SymmetricEigen::new(sym.clone()).eigenvalues.min() > 0.0;
    let min_nu = if positive {
        symplectic_eigenvalues(&sym)?
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    } else {
        (omega(n) * &sym)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min)
    };
    Ok(CmValidation {
        valid: positive && min_nu >= 0.5 - tol_phys,
        min_symplectic_eig: min_nu,
    })
}

struct SymSqrt {
    sqrt: DMatrix<f64>,
    min_eig: f64,
}

fn sym_sqrt(m: &DMatrix<f64>) -> Result<SymSqrt> {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let min_eig = eig.eigenvalues.min();
    if !(min_eig > 0.0) {
        return Err(Error::InvalidCm {
            min_symplectic_eig: f64::NAN,
        });
    }
    let v = &eig.eigenvectors;
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(SymSqrt {
        sqrt: v * root * v.transpose(),
        min_eig,
    })
}

/// Γ^{1/2}·Ω·Γ^{1/2}, a real skew-symmetric matrix whose eigenvalues are ±iνₖ.
fn skew_core(root: &DMatrix<f64>) -> DMatrix<f64> {
    let n = root.nrows() / 2;
    let k = root * omega(n) * root;
    (&k - k.transpose()) * 0.5
}

/// Symplectic eigenvalues of a positive-definite matrix, sorted descending.
pub fn symplectic_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = modes_of(m)?;
    let root = sym_sqrt(m)?;
    let k = skew_core(&root.sqrt);
    let mut lambda: Vec<f64> = SymmetricEigen::new(k.transpose() * &k)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    Ok((0..n)
        .map(|k| (0.5 * (lambda[2 * k] + lambda[2 * k + 1])).max(0.0).sqrt())
        .collect())
}

/// Str(M) = 2·Σνₖ; the minimum of Tr(S·M·Sᵀ) over symplectic S.
pub fn symplectic_trace(m: &DMatrix<f64>) -> Result<f64> {
    Ok(2.0 * symplectic_eigenvalues(m)?.iter().sum::<f64>())
}

/// Builds an orthonormal basis out of (u, partner(u)) pairs.
///
/// `vectors` are orthonormal eigenvectors with `values`; pairs are seeded
/// from the largest value first. Within a (near-)degenerate cluster the
/// eigenvector with the largest component outside the span chosen so far is
/// used, so degenerate eigenspaces are split into pairs cleanly.
fn pair_basis<F>(
    vectors: &DMatrix<f64>,
    values: &[f64],
    pairs: usize,
    partner: F,
) -> Vec<(DVector<f64>, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let dim = vectors.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim);
    let mut out = Vec::with_capacity(pairs);
    let project_out = |v: &DVector<f64>, basis: &[DVector<f64>]| {
        let mut r = v.clone();
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(&r);
                r.axpy(-c, b, 1.0);
            }
        }
        r
    };
    for _ in 0..pairs {
        let residuals: Vec<(usize, DVector<f64>, f64)> = (0..vectors.ncols())
            .map(|j| {
                let r = project_out(&vectors.column(j).into_owned(), &basis);
                let w = r.norm_squared();
                (j, r, w)
            })
            .filter(|(_, _, w)| *w > 1e-6)
            .collect();
        let top = residuals
            .iter()
            .map(|(j, _, _)| values[*j])
            .fold(f64::NEG_INFINITY, f64::max);
        let cluster_floor = top - 1e-8 * top.abs().max(1.0);
        let (_, r, _) = residuals
            .into_iter()
            .filter(|(j, _, _)| values[*j] >= cluster_floor)
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .expect("eigenbasis spans the whole space");
        let u = r.normalize();
        basis.push(u.clone());
        let w = project_out(&partner(&u), &basis).normalize();
        basis.push(w.clone());
        out.push((u, w));
    }
    out
}

/// Γ = S·(⊕ νₖ·I₂)·Sᵀ with ν sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsonDecomposition {
    pub s: SymplecticMatrix,
    pub nu: Vec<f64>,
}

impl WilliamsonDecomposition {
    /// ⊕ νₖ·I₂
    pub fn normal_form(&self) -> DMatrix<f64> {
        CovarianceMatrix::thermal(&self.nu.iter().map(|v| v - 0.5).collect::<Vec<_>>())
            .into_matrix()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.s.matrix() * self.normal_form() * self.s.matrix().transpose()
    }
}

/// Williamson normal form via the canonical skew form of Γ^{1/2}·Ω·Γ^{1/2}.
pub fn williamson(m: &DMatrix<f64>) -> Result<WilliamsonDecomposition> {
    let n = modes_of(m)?;
    let root = sym_sqrt(m)?;
    if root.min_eig < 1e-12 {
        return Err(Error::IllConditioned(format!(
            "minimum eigenvalue {:e} is below 1e-12",
            root.min_eig
        )));
    }
    let k = skew_core(&root.sqrt);
    let eig = SymmetricEigen::new(k.transpose() * &k);
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    // K·o1 = −ν·o2 and K·o2 = ν·o1, i.e. K = O·(⊕ ν ω)·Oᵀ
    let pairs = pair_basis(&eig.eigenvectors, &values, n, |u| -(&k * u));
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    let mut nu = Vec::with_capacity(n);
    for (idx, (o1, o2)) in pairs.iter().enumerate() {
        nu.push((&k * o1).norm());
        o.set_column(2 * idx, o1);
        o.set_column(2 * idx + 1, o2);
    }
    let mut scale = DMatrix::zeros(2 * n, 2 * n);
    for (idx, v) in nu.iter().enumerate() {
        scale[(2 * idx, 2 * idx)] = 1.0 / v.sqrt();
        scale[(2 * idx + 1, 2 * idx + 1)] = 1.0 / v.sqrt();
    }
    let s = &root.sqrt * o * scale;
    Ok(WilliamsonDecomposition {
        s: SymplecticMatrix::from_trusted(s),
        nu,
    })
}

/// S = O1·(⊕ diag(e^{rᵢ}, e^{−rᵢ}))·O2 with r sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochMessiahDecomposition {
    pub o1: OrthogonalSymplectic,
    pub r: Vec<f64>,
    pub o2: OrthogonalSymplectic,
}

impl BlochMessiahDecomposition {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.o1.matrix() * SymplecticMatrix::squeezers(&self.r).matrix() * self.o2.matrix()
    }
}

pub fn bloch_messiah(s: &SymplecticMatrix) -> Result<BlochMessiahDecomposition> {
    bloch_messiah_matrix(s.matrix(), TOL_SYMP)
}

/// Bloch-Messiah decomposition of a raw matrix, checked for symplecticity
/// at `tol_symp` (scaled by ‖S‖² for strongly squeezing inputs).
pub fn bloch_messiah_matrix(s: &DMatrix<f64>, tol_symp: f64) -> Result<BlochMessiahDecomposition> {
    let n = modes_of(s)?;
    let residual = symplectic_residual(s)?;
    if !(residual < tol_symp * s.norm_squared().max(1.0)) {
        return Err(Error::InvalidSymplectic { residual });
    }
    let om = omega(n);
    let svd = s.clone().svd(true, false);
    let w = svd.u.expect("left singular vectors requested");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    // the σ and 1/σ left singular vectors are related by Ω
    let pairs = pair_basis(&w, &sigma, n, |a| -(&om * a));
    let mut u = DMatrix::zeros(2 * n, 2 * n);
    let mut r = Vec::with_capacity(n);
    for (idx, (a, b)) in pairs.iter().enumerate() {
        u.set_column(2 * idx, a);
        u.set_column(2 * idx + 1, b);
        let gain = (s.transpose() * a).norm();
        r.push(gain.ln().max(0.0));
    }
    let inv_sq = SymplecticMatrix::squeezers(&r.iter().map(|x| -x).collect::<Vec<_>>());
    let o2 = inv_sq.matrix() * u.transpose() * s;
    Ok(BlochMessiahDecomposition {
        o1: OrthogonalSymplectic::from_trusted(u),
        r,
        o2: OrthogonalSymplectic::from_trusted(o2),
    })
}

/// Phase-space image of a passive unitary acting as âᵢ → Σⱼ uᵢⱼ âⱼ.
///
/// Block (i, j) is [[Re uᵢⱼ, −Im uᵢⱼ], [Im uᵢⱼ, Re uᵢⱼ]].
pub fn unitary_to_orthosymplectic(u: &DMatrix<Complex64>) -> Result<OrthogonalSymplectic> {
    unitary_to_orthosymplectic_tol(u, TOL_SYMP)
}

pub fn unitary_to_orthosymplectic_tol(
    u: &DMatrix<Complex64>,
    tol: f64,
) -> Result<OrthogonalSymplectic> {
    if u.nrows() != u.ncols() || u.nrows() == 0 {
        return Err(Error::InvalidShape(format!(
            "expected a non-empty square unitary, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let n = u.nrows();
    let residual = (u * u.adjoint() - DMatrix::<Complex64>::identity(n, n)).norm();
    if !(residual < tol) {
        return Err(Error::InvalidUnitary { residual });
    }
    Ok(OrthogonalSymplectic::from_trusted(realify(u)))
}

pub(crate) fn realify(u: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u[(i, j)];
            o[(2 * i, 2 * j)] = z.re;
            o[(2 * i, 2 * j + 1)] = -z.im;
            o[(2 * i + 1, 2 * j)] = z.im;
            o[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    o
}

/// One element of a linear-optics circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PassiveElement {
    BeamSplitter { theta: f64, modes: (usize, usize) },
    PhaseShifter { phi: f64, mode: usize },
}

/// A circuit of beam splitters and phase shifters, applied in list order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PassiveCircuitSpec {
    pub modes: usize,
    pub elements: Vec<PassiveElement>,
}

impl PassiveCircuitSpec {
    pub fn new(modes: usize) -> Self {
        Self {
            modes,
            elements: Vec::new(),
        }
    }

    pub fn beam_splitter(mut self, theta: f64, i: usize, j: usize) -> Self {
        self.elements.push(PassiveElement::BeamSplitter {
            theta,
            modes: (i, j),
        });
        self
    }

    pub fn phase_shifter(mut self, phi: f64, mode: usize) -> Self {
        self.elements
            .push(PassiveElement::PhaseShifter { phi, mode });
        self
    }
}

fn element_matrix(element: &PassiveElement, modes: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::identity(2 * modes, 2 * modes);
    match *element {
        PassiveElement::BeamSplitter {
            theta,
            modes: (i, j),
        } => {
            if i >= modes || j >= modes || i == j {
                return Err(Error::InvalidSpec(format!(
                    "beam splitter on modes ({i}, {j}) in a {modes}-mode circuit"
                )));
            }
            let (s, c) = theta.sin_cos();
            for k in 0..2 {
                m[(2 * i + k, 2 * i + k)] = c;
                m[(2 * i + k, 2 * j + k)] = s;
                m[(2 * j + k, 2 * i + k)] = -s;
                m[(2 * j + k, 2 * j + k)] = c;
            }
        }
        PassiveElement::PhaseShifter { phi, mode } => {
            if mode >= modes {
                return Err(Error::InvalidSpec(format!(
                    "phase shifter on mode {mode} in a {modes}-mode circuit"
                )));
            }
            let (s, c) = phi.sin_cos();
            m[(2 * mode, 2 * mode)] = c;
            m[(2 * mode, 2 * mode + 1)] = -s;
            m[(2 * mode + 1, 2 * mode)] = s;
            m[(2 * mode + 1, 2 * mode + 1)] = c;
        }
    }
    Ok(m)
}

/// Multiplies the element matrices so that the first element acts first.
pub fn compile_passive_circuit(spec: &PassiveCircuitSpec) -> Result<OrthogonalSymplectic> {
    if spec.modes == 0 {
        return Err(Error::InvalidSpec("circuit has no modes".into()));
    }
    let mut o = DMatrix::identity(2 * spec.modes, 2 * spec.modes);
    for element in &spec.elements {
        o = element_matrix(element, spec.modes)? * o;
    }
    Ok(OrthogonalSymplectic::from_trusted(o))
}

/// Block-diagonal direct sum.
pub fn direct_sum(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let dim: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(dim, dim);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(*b);
        at += b.nrows();
    }
    out
}

/// Principal submatrix on the given modes, in the given order.
pub fn select_modes(m: &DMatrix<f64>, modes: &[usize]) -> DMatrix<f64> {
    let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Rotation [[cos φ, sin φ], [−sin φ, cos φ]].
pub fn rotation(phi: f64) -> DMatrix<f64> {
    let (s, c) = phi.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, s, -s, c])
}
