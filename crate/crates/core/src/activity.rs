//! Relative entropy of local activity A_l(ρ) = min over free σ of S(ρ‖σ).
//!
//! For a Gaussian ρ the thermal occupations of the optimal σ are the
//! per-mode photon numbers after a passive unitary, so only the unitary is
//! searched. Writing X = Γ + x̄x̄ᵀ, those photon numbers (plus ½) are the
//! diagonal of U·M·U† with M the Hermitian photon matrix below, which gives
//! an exact spectral value Σ g(eig M) − S(ρ) used to certify the search.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    checked_partition, entropy_g, mean_photon_numbers, mutual_information, partial_trace,
    von_neumann_entropy, GaussianState,
};
use crate::symplectic::{realify, CovarianceMatrix, TOL_PHYS};

/// Gap between the searched and spectral values accepted as converged.
pub const TOL_CERTIFY: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Objective evaluations allowed per restart.
    pub budget: usize,
    pub seed: u64,
    /// Smallest coordinate step before a restart stops.
    pub min_step: f64,
    pub parallel: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            budget: 50_000,
            seed: 0,
            min_step: 1e-7,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Single mode: the closest free state is thermal(nbar).
    Thermal { nbar: f64 },
    /// Two-mode closed form: σ = S·(b₁I₂ ⊕ b₂I₂)·Sᵀ, S = (R(δφ) ⊕ I₂)·BS(θ).
    TwoMode {
        b: [f64; 2],
        theta: f64,
        delta_phi: f64,
    },
    /// Numeric search: σ conjugated by U† is ⊕ nuᵢ I₂.
    Numeric {
        u: DMatrix<Complex64>,
        nu: Vec<f64>,
        spectral_value: f64,
        evaluations: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityReport {
    pub value: f64,
    pub witness: Witness,
    pub closest_free: CovarianceMatrix,
    /// False only for a numeric search that missed the spectral value.
    pub certified: bool,
}

/// M_ij = ½[X_{qᵢqⱼ} + X_{pᵢpⱼ} + i(X_{qᵢpⱼ} − X_{pᵢqⱼ})], X = Γ + x̄x̄ᵀ.
pub fn photon_matrix(state: &GaussianState) -> DMatrix<Complex64> {
    let x = second_moments(state);
    let n = state.modes();
    DMatrix::from_fn(n, n, |i, j| {
        let (qi, pi, qj, pj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        Complex64::new(
            0.5 * (x[(qi, qj)] + x[(pi, pj)]),
            0.5 * (x[(qi, pj)] - x[(pi, qj)]),
        )
    })
}

fn second_moments(state: &GaussianState) -> DMatrix<f64> {
    let d = state.displacement();
    state.covariance() + d * d.transpose()
}

/// Phase-insensitive part of X: the zero-mean CM with the same photon matrix.
fn phase_averaged(state: &GaussianState) -> DMatrix<f64> {
    let m = photon_matrix(state);
    let n = state.modes();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[(2 * i, 2 * j)] = z.re;
            out[(2 * i + 1, 2 * j + 1)] = z.re;
            out[(2 * i, 2 * j + 1)] = z.im;
            out[(2 * i + 1, 2 * j)] = -z.im;
        }
    }
    (&out + out.transpose()) * 0.5
}

/// Σ g(eig M) − S(ρ), the exact minimum over passive unitaries.
pub fn spectral_activity(state: &GaussianState) -> Result<f64> {
    let eig = photon_matrix(state).symmetric_eigenvalues();
    let s = von_neumann_entropy(state)?;
    Ok(eig.iter().map(|&b| entropy_g(b)).sum::<f64>() - s)
}

pub fn activity_single_mode(state: &GaussianState) -> Result<ActivityReport> {
    if state.modes() != 1 {
        return Err(Error::InvalidDimension(format!(
            "single-mode activity on a {}-mode state",
            state.modes()
        )));
    }
    let nbar = mean_photon_numbers(state)[0].max(0.0);
    let value = entropy_g(nbar + 0.5) - von_neumann_entropy(state)?;
    Ok(ActivityReport {
        value,
        witness: Witness::Thermal { nbar },
        closest_free: CovarianceMatrix::thermal(&[nbar]),
        certified: true,
    })
}

fn trace2(m: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)]
}

pub fn activity_two_mode(state: &GaussianState) -> Result<ActivityReport> {
    if state.modes() != 2 {
        return Err(Error::InvalidDimension(format!(
            "two-mode activity on a {}-mode state",
            state.modes()
        )));
    }
    let g = state.covariance();
    let d = state.displacement();
    let alpha = trace2(g, 0, 0);
    let beta = trace2(g, 1, 1);
    let c = trace2(g, 0, 1);
    // υ = −Tr(ωC) = C_qp − C_pq
    let upsilon = g[(0, 3)] - g[(1, 2)];
    let (d1, d2, d3, d4) = (d[0], d[1], d[2], d[3]);
    let at = alpha + beta + d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4;
    let bt = alpha - beta + d1 * d1 + d2 * d2 - d3 * d3 - d4 * d4;
    let ct = c + d1 * d3 + d2 * d4;
    let ut = upsilon + d1 * d4 - d2 * d3;

    let w = (ct * ct + ut * ut).sqrt();
    let root = (bt * bt + 4.0 * w * w).sqrt();
    let b1 = 0.25 * (at + root);
    let b2 = 0.25 * (at - root);
    if b2 < 0.5 - TOL_PHYS {
        return Err(Error::UnphysicalOptimizer { b2 });
    }
    let theta = if w == 0.0 && bt == 0.0 {
        0.0
    } else {
        0.5 * (-2.0 * w).atan2(bt)
    };
    let delta_phi = if w == 0.0 { 0.0 } else { ut.atan2(ct) };

    let value = entropy_g(b1) + entropy_g(b2) - von_neumann_entropy(state)?;
    Ok(ActivityReport {
        value,
        witness: Witness::TwoMode {
            b: [b1, b2],
            theta,
            delta_phi,
        },
        closest_free: CovarianceMatrix::from_trusted(phase_averaged(state)),
        certified: true,
    })
}

/// U = G₁₂(θ,φ)·G₁₃(θ,φ)⋯G_{N−1,N}(θ,φ)·diag(e^{iψ}); N² real parameters.
pub fn givens_unitary(n: usize, params: &[f64]) -> DMatrix<Complex64> {
    debug_assert_eq!(params.len(), n * n);
    let mut u = DMatrix::<Complex64>::identity(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (s, c) = params[k].sin_cos();
            let e = Complex64::from_polar(1.0, params[k + 1]);
            k += 2;
            // right-multiply by the rotation acting on columns i, j
            for row in 0..n {
                let (ui, uj) = (u[(row, i)], u[(row, j)]);
                u[(row, i)] = ui * c + uj * e.conj() * s;
                u[(row, j)] = -ui * e * s + uj * c;
            }
        }
    }
    for (col, &psi) in params[k..].iter().enumerate() {
        let e = Complex64::from_polar(1.0, psi);
        for row in 0..n {
            u[(row, col)] *= e;
        }
    }
    u
}

/// ñᵢ + ½ for the state conjugated by U† (columns of realify(U)).
fn conjugated_occupations(x: &DMatrix<f64>, u: &DMatrix<Complex64>) -> Vec<f64> {
    let r = realify(u);
    let y = x * &r;
    (0..u.nrows())
        .map(|i| {
            let (q, p) = (2 * i, 2 * i + 1);
            0.5 * (r.column(q).dot(&y.column(q)) + r.column(p).dot(&y.column(p)))
        })
        .collect()
}

struct Search {
    value: f64,
    params: Vec<f64>,
    evaluations: usize,
}

fn pattern_search(
    x: &DMatrix<f64>,
    n: usize,
    cfg: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Search {
    let dim = n * n;
    let objective = |p: &[f64]| -> f64 {
        conjugated_occupations(x, &givens_unitary(n, p))
            .into_iter()
            .map(entropy_g)
            .sum()
    };
    let mut params: Vec<f64> = (0..dim)
        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let mut best = objective(&params);
    let mut evaluations = 1;
    let mut step = 0.5;
    while step >= cfg.min_step && evaluations < cfg.budget {
        let start = best;
        for k in 0..dim {
            for dir in [1.0, -1.0] {
                let old = params[k];
                params[k] = old + dir * step;
                let f = objective(&params);
                evaluations += 1;
                if f < best {
                    best = f;
                    break;
                }
                params[k] = old;
            }
        }
        if start - best < 1e-10 * step.max(1e-3) {
            step *= 0.5;
        }
    }
    Search {
        value: best,
        params,
        evaluations,
    }
}

/// Multi-start search over U(N). Deterministic for a fixed seed.
pub fn activity_numeric(state: &GaussianState, cfg: &OptimizerConfig) -> Result<ActivityReport> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be positive".into()));
    }
    let n = state.modes();
    let x = second_moments(state);
    let entropy = von_neumann_entropy(state)?;
    let run = |k: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        pattern_search(&x, n, cfg, &mut rng)
    };
    let runs: Vec<Search> = if cfg.parallel {
        (0..cfg.restarts).into_par_iter().map(run).collect()
    } else {
        (0..cfg.restarts).map(run).collect()
    };
    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one restart");

    let u = givens_unitary(n, &best.params);
    let nu = conjugated_occupations(&x, &u);
    let nbar: Vec<f64> = nu.iter().map(|v| (v - 0.5).max(0.0)).collect();
    let closest = CovarianceMatrix::thermal(&nbar).transform(&realify(&u));
    let value = best.value - entropy;
    let spectral_value = spectral_activity(state)?;
    let certified = value - spectral_value <= TOL_CERTIFY * spectral_value.abs().max(1.0);
    Ok(ActivityReport {
        value,
        witness: Witness::Numeric {
            u,
            nu,
            spectral_value,
            evaluations,
        },
        closest_free: closest,
        certified,
    })
}

/// Closed forms for one and two modes, numeric search otherwise.
pub fn activity(state: &GaussianState, cfg: &OptimizerConfig) -> Result<ActivityReport> {
    match state.modes() {
        1 => activity_single_mode(state),
        2 => activity_two_mode(state),
        _ => activity_numeric(state, cfg),
    }
}

/// C_G(ρ) = Σᵢ g(n̄ᵢ + ½) − S(ρ), the distance to the product of local thermal states.
pub fn gaussian_coherence(state: &GaussianState) -> Result<f64> {
    let local: f64 = mean_photon_numbers(state)
        .into_iter()
        .map(|n| entropy_g(n + 0.5))
        .sum();
    Ok(local - von_neumann_entropy(state)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    Fock { n: i64 },
    Squeezed { r: f64 },
    Coherent { re: f64, im: f64 },
    Tms { r: f64 },
}

pub fn preset_activity(preset: Preset) -> Result<f64> {
    match preset {
        Preset::Fock { n } if n < 0 => Err(Error::InvalidParameter(format!("Fock number {n} < 0"))),
        Preset::Fock { n } => Ok(entropy_g(n as f64 + 0.5)),
        Preset::Squeezed { r } => Ok(entropy_g(r.sinh().powi(2) + 0.5)),
        Preset::Coherent { re, im } => Ok(entropy_g(re * re + im * im + 0.5)),
        Preset::Tms { r } => Ok(2.0 * entropy_g(r.sinh().powi(2) + 0.5)),
    }
}

/// A_l(ρ_A) + A_l(ρ_B) + I(A:B) − A_l(ρ_AB).
pub fn relaxed_subadditivity_gap(
    state: &GaussianState,
    a: &[usize],
    b: &[usize],
    cfg: &OptimizerConfig,
) -> Result<f64> {
    let (a, b) = checked_partition(state.modes(), a, b)?;
    let aa = activity(&partial_trace(state, &a)?, cfg)?.value;
    let ab = activity(&partial_trace(state, &b)?, cfg)?.value;
    let i = mutual_information(state, &a, &b)?;
    let whole = activity(state, cfg)?.value;
    Ok(aa + ab + i - whole)
}
