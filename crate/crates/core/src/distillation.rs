//! Two-copy distillation constructions: the single-mode no-go map, the
//! 4-mode DFT activity example, the swap that concentrates work, and the
//! activity bound on conversion rates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::activity::{activity, activity_two_mode, OptimizerConfig};
use crate::error::{Error, Result};
use crate::gaussian::{partial_trace, tensor, transform_state, GaussianState};
use crate::symplectic::{
    compile_passive_circuit, direct_sum, rotation, unitary_to_orthosymplectic, validate_cm,
    CovarianceMatrix, OrthogonalSymplectic, PassiveCircuitSpec, TOL_PHYS,
};
use crate::work::quadratic_work;

/// Activity below this makes the conversion rate bound vacuous.
pub const TOL_RATE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DistillationOutcome {
    pub input_value: f64,
    pub output_value: f64,
    pub circuit: OrthogonalSymplectic,
    /// The reported output pair.
    pub output_state: GaussianState,
    /// All modes after the circuit.
    pub full_output: GaussianState,
}

/// (R₁ ⊕ R₂)·BS(θ)·(R₃ ⊕ R₄) with R(φ) = [[cos φ, sin φ], [−sin φ, cos φ]].
pub fn two_copy_circuit(theta: f64, phi: [f64; 4]) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let id = DMatrix::<f64>::identity(2, 2);
    let mut bs = DMatrix::zeros(4, 4);
    bs.view_mut((0, 0), (2, 2)).copy_from(&(&id * c));
    bs.view_mut((0, 2), (2, 2)).copy_from(&(&id * s));
    bs.view_mut((2, 0), (2, 2)).copy_from(&(&id * -s));
    bs.view_mut((2, 2), (2, 2)).copy_from(&(&id * c));
    let outer = direct_sum(&[&rotation(phi[0]), &rotation(phi[1])]);
    let inner = direct_sum(&[&rotation(phi[2]), &rotation(phi[3])]);
    outer * bs * inner
}

/// Local output CMs of γ ⊕ γ after `two_copy_circuit(θ, φ)`.
pub fn process_two_copies_single_mode(
    gamma: &DMatrix<f64>,
    theta: f64,
    phi: [f64; 4],
) -> Result<(CovarianceMatrix, CovarianceMatrix)> {
    if gamma.shape() != (2, 2) {
        return Err(Error::InvalidShape(format!(
            "expected a 2x2 covariance matrix, got {}x{}",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    let v = validate_cm(gamma, TOL_PHYS)?;
    if !v.valid {
        return Err(Error::InvalidCm {
            min_symplectic_eig: v.min_symplectic_eig,
        });
    }
    let s = two_copy_circuit(theta, phi);
    let out = &s * direct_sum(&[gamma, gamma]) * s.transpose();
    let out = (&out + out.transpose()) * 0.5;
    Ok((
        CovarianceMatrix::from_trusted(out.view((0, 0), (2, 2)).into_owned()),
        CovarianceMatrix::from_trusted(out.view((2, 2), (2, 2)).into_owned()),
    ))
}

/// ½[[1,1,1,1],[1,−i,−1,i],[1,−1,1,−1],[1,i,−1,−i]].
pub fn dft4() -> DMatrix<Complex64> {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    #[rustfmt::skip]
    let u = DMatrix::from_row_slice(4, 4, &[
        one, one, one, one,
        one, -i, -one, i,
        one, -one, one, -one,
        one, i, -one, -i,
    ]);
    u * Complex64::new(0.5, 0.0)
}

/// Γ = diag(1, 16, 1, 1)/2 per copy.
pub fn distillation_input() -> GaussianState {
    let g =
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1.0, 16.0, 1.0, 1.0])) * 0.5;
    GaussianState::centered(CovarianceMatrix::from_trusted(g))
}

/// Two copies through the 4-mode DFT; reports A_l of one copy and of modes (0, 1).
pub fn activity_distillation_demo() -> Result<DistillationOutcome> {
    let rho = distillation_input();
    let two = tensor(&[rho.clone(), rho.clone()])?;
    let circuit = unitary_to_orthosymplectic(&dft4())?;
    let full_output = transform_state(&two, circuit.matrix());
    let output_state = partial_trace(&full_output, &[0, 1])?;
    Ok(DistillationOutcome {
        input_value: activity_two_mode(&rho)?.value,
        output_value: activity_two_mode(&output_state)?.value,
        circuit,
        output_state,
        full_output,
    })
}

/// (γA ⊕ γB)^⊗2 with modes 1 and 2 swapped; reports W_l of the original pair
/// and of the new first pair γA ⊕ γA.
pub fn work_swap_demo(
    gamma_a: &DMatrix<f64>,
    gamma_b: &DMatrix<f64>,
) -> Result<DistillationOutcome> {
    let a = CovarianceMatrix::new(gamma_a.clone())?;
    let b = CovarianceMatrix::new(gamma_b.clone())?;
    if a.modes() != 1 || b.modes() != 1 {
        return Err(Error::InvalidShape(
            "swap demo takes single-mode covariance matrices".into(),
        ));
    }
    let wa = quadratic_work(a.matrix())?;
    let wb = quadratic_work(b.matrix())?;
    if wa < wb {
        return Err(Error::PreconditionFailed(format!(
            "W(γA) = {wa} is below W(γB) = {wb}; the swap gains nothing"
        )));
    }
    let pair = GaussianState::centered(CovarianceMatrix::from_trusted(direct_sum(&[
        a.matrix(),
        b.matrix(),
    ])));
    let input = tensor(&[pair.clone(), pair.clone()])?;
    let circuit = compile_passive_circuit(&PassiveCircuitSpec::new(4).beam_splitter(
        std::f64::consts::FRAC_PI_2,
        1,
        2,
    ))?;
    let full_output = transform_state(&input, circuit.matrix());
    let output_state = partial_trace(&full_output, &[0, 1])?;
    Ok(DistillationOutcome {
        input_value: quadratic_work(pair.covariance())?,
        output_value: quadratic_work(output_state.covariance())?,
        circuit,
        output_state,
        full_output,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RateBound {
    Bounded(f64),
    Unbounded,
}

/// m/n ≤ A_l(ρ)/A_l(σ) for any conversion ρ^⊗n → σ^⊗m under free operations.
pub fn conversion_rate_bound(
    rho: &GaussianState,
    sigma: &GaussianState,
    cfg: &OptimizerConfig,
) -> Result<RateBound> {
    let target = activity(sigma, cfg)?.value;
    if target <= TOL_RATE {
        return Ok(RateBound::Unbounded);
    }
    Ok(RateBound::Bounded(activity(rho, cfg)?.value / target))
}
