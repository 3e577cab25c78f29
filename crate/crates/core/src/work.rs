//! Local Gaussian extractable work W_l = ½(Tr Γ − Str Γ) and its
//! constructive extraction protocol.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::free::{free_cm, FreeCM};
use crate::gaussian::{checked_partition, partial_trace, GaussianState};
use crate::symplectic::{
    bloch_messiah, symplectic_trace, validate_cm, williamson, CovarianceMatrix,
    OrthogonalSymplectic, SymplecticMatrix, TOL_PHYS,
};

/// Squeezings below this are dropped from a protocol.
pub const TOL_SQUEEZE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Work {
    pub quadratic: f64,
    pub displacement: f64,
    pub total: f64,
}

/// ½(Tr Γ − Str Γ) = Σλᵢ/2 − Σνᵢ.
pub fn quadratic_work(cm: &DMatrix<f64>) -> Result<f64> {
    let v = validate_cm(cm, TOL_PHYS)?;
    if !v.valid {
        return Err(Error::InvalidCm {
            min_symplectic_eig: v.min_symplectic_eig,
        });
    }
    Ok(0.5 * (cm.trace() - symplectic_trace(cm)?))
}

pub fn extractable_work(state: &GaussianState) -> Result<Work> {
    let quadratic = quadratic_work(state.covariance())?;
    let displacement = 0.5 * state.displacement().norm_squared();
    Ok(Work {
        quadratic,
        displacement,
        total: quadratic + displacement,
    })
}

/// Displace by −x̄, apply O₁ᵀ, unsqueeze by −r; leaves O₂·Γ_th·O₂ᵀ.
#[derive(Debug, Clone)]
pub struct ExtractionProtocol {
    pub displacement_step: DVector<f64>,
    pub passive_step: OrthogonalSymplectic,
    pub squeezer_step: Vec<f64>,
    pub final_cm: FreeCM,
    pub work_displacement: f64,
    pub work_quadratic: f64,
}

impl ExtractionProtocol {
    /// Runs the three steps on `state`.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        let shifted = GaussianState::new(
            state.displacement() + &self.displacement_step,
            state.cm().clone(),
        )?;
        let s = SymplecticMatrix::squeezers(&self.squeezer_step).into_matrix()
            * self.passive_step.matrix();
        let d = &s * shifted.displacement();
        GaussianState::new(d, shifted.cm().transform(&s))
    }
}

pub fn extraction_protocol(state: &GaussianState) -> Result<ExtractionProtocol> {
    let work = extractable_work(state)?;
    let w = williamson(state.covariance())?;
    let bm = bloch_messiah(&w.s)?;
    let squeezer_step =
        bm.r.iter()
            .map(|&r| if r.abs() < TOL_SQUEEZE { 0.0 } else { -r })
            .collect();
    // pure modes may come out a rounding error below ½
    let nu: Vec<f64> = w.nu.iter().map(|v| v.max(0.5)).collect();
    let final_cm = free_cm(&nu, &bm.o2)?;
    Ok(ExtractionProtocol {
        displacement_step: -state.displacement(),
        passive_step: bm.o1.transpose(),
        squeezer_step,
        final_cm,
        work_displacement: work.displacement,
        work_quadratic: work.quadratic,
    })
}

/// W_l(Γ) − W_l(Γ_A) − W_l(Γ_B) (quadratic parts).
pub fn superadditivity_gap(state: &GaussianState, a: &[usize], b: &[usize]) -> Result<f64> {
    let (a, b) = checked_partition(state.modes(), a, b)?;
    let whole = quadratic_work(state.covariance())?;
    let wa = quadratic_work(partial_trace(state, &a)?.covariance())?;
    let wb = quadratic_work(partial_trace(state, &b)?.covariance())?;
    Ok(whole - wa - wb)
}

/// W_l(Γ) below `tol`·max(1, Tr Γ)/2, the same scaled threshold as the
/// spectral freeness test.
pub fn is_work_free(cm: &CovarianceMatrix, tol: f64) -> Result<bool> {
    let w = quadratic_work(cm.matrix())?;
    Ok(2.0 * w < tol * cm.trace().abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::{convex_combine, is_free_cm, TOL_FREE};
    use crate::gaussian::{energy, make_state, StateKind};
    use crate::sampling::{random_cm, random_free_cm, random_orthosymplectic, random_state};
    use crate::symplectic::direct_sum;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn values() {
        let t = make_state(StateKind::Thermal { nbar: 2.0 }, 2).unwrap();
        assert!(extractable_work(&t).unwrap().total.abs() < 1e-12);
        let r: f64 = 0.8;
        let sq = make_state(StateKind::Squeezed { r, phi: 0.0 }, 1).unwrap();
        assert_abs_diff_eq!(
            extractable_work(&sq).unwrap().quadratic,
            r.sinh().powi(2),
            epsilon = 1e-12
        );
        let g = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 16.0, 1.0, 1.0])) * 0.5;
        assert_abs_diff_eq!(quadratic_work(&g).unwrap(), 2.25, epsilon = 1e-12);
        let coh = make_state(StateKind::Coherent { re: 1.0, im: 1.0 }, 1).unwrap();
        let w = extractable_work(&coh).unwrap();
        assert!(w.quadratic.abs() < 1e-12);
        assert_abs_diff_eq!(w.displacement, 2.0, epsilon = 1e-12);
        assert!(matches!(
            quadratic_work(&(DMatrix::identity(2, 2) * 0.4)),
            Err(Error::InvalidCm { .. })
        ));
    }

    #[test]
    fn protocol_on_squeezed() {
        let r: f64 = 0.9;
        let sq = make_state(StateKind::Squeezed { r, phi: 0.0 }, 1).unwrap();
        let p = extraction_protocol(&sq).unwrap();
        assert!((p.passive_step.matrix().abs() - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert_abs_diff_eq!(p.squeezer_step[0].abs(), r, epsilon = 1e-12);
        let out = p.apply(&sq).unwrap();
        assert!((out.covariance() - DMatrix::identity(2, 2) * 0.5).norm() < 1e-12);
        assert_abs_diff_eq!(p.work_quadratic, r.sinh().powi(2), epsilon = 1e-12);
    }

    #[test]
    fn protocol_on_free_state_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let st = GaussianState::centered(random_free_cm(3, 2.0, &mut rng));
        let p = extraction_protocol(&st).unwrap();
        assert!(p.squeezer_step.iter().all(|&r| r == 0.0));
        assert!(p.work_quadratic.abs() < 1e-10);
    }

    #[test]
    fn protocol_on_tms() {
        let r: f64 = 1.0;
        let tms = make_state(StateKind::Tms { r }, 2).unwrap();
        let p = extraction_protocol(&tms).unwrap();
        for s in &p.squeezer_step {
            assert_abs_diff_eq!(s.abs(), r, epsilon = 1e-10);
        }
        // balanced beam splitter: each off-diagonal block is an orthogonal matrix / √2
        let off = p.passive_step.matrix().view((0, 2), (2, 2)).into_owned();
        assert_abs_diff_eq!(off.norm_squared(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.work_quadratic, 2.0 * r.sinh().powi(2), epsilon = 1e-10);
        let out = p.apply(&tms).unwrap();
        assert!(
            is_free_cm(out.covariance(), TOL_FREE)
                .unwrap()
                .spectral_free
        );
    }

    #[test]
    fn protocol_energy_ledger() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = rng.gen_range(1..=5);
            let st = random_state(n, 1.2, 2.0, 1.0, &mut rng);
            let p = extraction_protocol(&st).unwrap();
            let out = p.apply(&st).unwrap();
            assert!((out.covariance() - p.final_cm.cm.matrix()).norm() < 1e-8);
            assert!(out.displacement().norm() < 1e-12);
            let drop = energy(&st) - energy(&out);
            let w = extractable_work(&st).unwrap();
            assert!(
                (drop - w.total).abs() < 1e-9 * w.total.max(1.0),
                "{drop} vs {}",
                w.total
            );
            assert!(
                is_free_cm(p.final_cm.cm.matrix(), TOL_FREE)
                    .unwrap()
                    .spectral_free
            );
        }
    }

    #[test]
    fn superadditivity_examples() {
        let prod = crate::gaussian::tensor(&[
            make_state(StateKind::Squeezed { r: 0.4, phi: 0.0 }, 1).unwrap(),
            make_state(StateKind::Squeezed { r: 1.1, phi: 0.3 }, 1).unwrap(),
        ])
        .unwrap();
        assert!(superadditivity_gap(&prod, &[0], &[1]).unwrap().abs() < 1e-10);
        let tms = make_state(StateKind::Tms { r: 1.0 }, 2).unwrap();
        assert_abs_diff_eq!(
            superadditivity_gap(&tms, &[0], &[1]).unwrap(),
            2.0 * 1f64.sinh().powi(2),
            epsilon = 1e-10
        );
        assert!(superadditivity_gap(&tms, &[0], &[0]).is_err());
    }

    #[test]
    fn work_freeness_agrees_with_spectral_test() {
        let tms = make_state(StateKind::Tms { r: 0.5 }, 2).unwrap();
        assert!(!is_work_free(tms.cm(), TOL_FREE).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let a = random_free_cm(3, 2.0, &mut rng);
            let b = random_free_cm(3, 2.0, &mut rng);
            let p: f64 = rng.gen();
            let mix = convex_combine(&[p, 1.0 - p], &[a, b]).unwrap();
            assert!(is_work_free(&mix, TOL_FREE).unwrap());
            let c = random_cm(3, 1.0, 2.0, &mut rng);
            assert_eq!(
                is_work_free(&c, TOL_FREE).unwrap(),
                is_free_cm(c.matrix(), TOL_FREE).unwrap().spectral_free
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn work_properties(seed in any::<u64>(), n in 1usize..=4, p in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_cm(n, 1.0, 2.0, &mut rng);
            let b = random_cm(n, 1.0, 2.0, &mut rng);
            let wa = quadratic_work(a.matrix()).unwrap();
            let wb = quadratic_work(b.matrix()).unwrap();
            prop_assert!(wa >= -1e-9);
            let mix = convex_combine(&[p, 1.0 - p], &[a.clone(), b.clone()]).unwrap();
            prop_assert!(quadratic_work(mix.matrix()).unwrap() <= p * wa + (1.0 - p) * wb + 1e-9);
            let o = random_orthosymplectic(n, &mut rng);
            prop_assert!((quadratic_work(a.transform(o.matrix()).matrix()).unwrap() - wa).abs() < 1e-9);
            let sum = direct_sum(&[a.matrix(), b.matrix()]);
            prop_assert!((quadratic_work(&sum).unwrap() - wa - wb).abs() < 1e-9);
            let st = GaussianState::centered(a);
            if n > 1 {
                let k = rng.gen_range(1..n);
                let left: Vec<usize> = (0..k).collect();
                let right: Vec<usize> = (k..n).collect();
                prop_assert!(superadditivity_gap(&st, &left, &right).unwrap() >= -1e-9);
                let part = quadratic_work(partial_trace(&st, &left).unwrap().covariance()).unwrap();
                prop_assert!(part <= wa + 1e-9);
            }
        }
    }
}
