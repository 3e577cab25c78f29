//! Free covariance matrices: products of thermal modes under a passive
//! interferometer, O·(⊕νᵢI₂)·Oᵀ.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symplectic::{validate_cm, CovarianceMatrix, OrthogonalSymplectic, TOL_PHYS};

/// Default tolerance on Tr Γ − Str Γ (scaled by max(1, Tr Γ)).
pub const TOL_FREE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct FreeCM {
    pub cm: CovarianceMatrix,
    pub o: OrthogonalSymplectic,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeCheck {
    pub spectral_free: bool,
    pub structural_form: bool,
    pub gap: f64,
}

/// O·(⊕νᵢI₂)·Oᵀ.
pub fn free_cm(nu: &[f64], o: &OrthogonalSymplectic) -> Result<FreeCM> {
    if nu.len() != o.modes() {
        return Err(Error::InvalidDimension(format!(
            "{} thermal modes for a {}-mode interferometer",
            nu.len(),
            o.modes()
        )));
    }
    if let Some(&bad) = nu.iter().find(|&&v| !(v >= 0.5) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "symplectic eigenvalue {bad} < 1/2"
        )));
    }
    let nbar: Vec<f64> = nu.iter().map(|v| v - 0.5).collect();
    let cm = CovarianceMatrix::thermal(&nbar).transform(o.matrix());
    Ok(FreeCM {
        cm,
        o: o.clone(),
        nu: nu.to_vec(),
    })
}

fn scale(m: &DMatrix<f64>) -> f64 {
    m.trace().abs().max(1.0)
}

/// Spectral test (authoritative) plus the block-structure test.
pub fn is_free_cm(cm: &DMatrix<f64>, tol_free: f64) -> Result<FreeCheck> {
    let v = validate_cm(cm, TOL_PHYS)?;
    if !v.valid {
        return Err(Error::InvalidCm {
            min_symplectic_eig: v.min_symplectic_eig,
        });
    }
    let gap = cm.trace() - crate::symplectic::symplectic_trace(cm)?;
    let s = scale(cm);
    Ok(FreeCheck {
        spectral_free: gap < tol_free * s,
        structural_form: structural_form(cm, tol_free * s),
        gap,
    })
}

/// Diagonal blocks ∝ I₂; off-diagonal blocks R with R·Rᵀ ∝ I₂ and R·ω·Rᵀ ∝ ω.
/// Necessary for freeness but not sufficient.
pub fn structural_form(cm: &DMatrix<f64>, tol: f64) -> bool {
    let n = cm.nrows() / 2;
    let id = DMatrix::<f64>::identity(2, 2);
    let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let tol2 = tol * scale(cm);
    for i in 0..n {
        for j in i..n {
            let r = cm.view((2 * i, 2 * j), (2, 2)).into_owned();
            if i == j {
                if (&r - &id * (r.trace() / 2.0)).norm() >= tol {
                    return false;
                }
                continue;
            }
            let rr = &r * r.transpose();
            if (&rr - &id * (rr.trace() / 2.0)).norm() >= tol2 {
                return false;
            }
            let rw = &r * &w * r.transpose();
            let k = (&rw * w.transpose()).trace() / 2.0;
            if (&rw - &w * k).norm() >= tol2 {
                return false;
            }
        }
    }
    true
}

/// Σ pⱼ Γⱼ.
pub fn convex_combine(weights: &[f64], cms: &[CovarianceMatrix]) -> Result<CovarianceMatrix> {
    if weights.len() != cms.len() || cms.is_empty() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} covariance matrices",
            weights.len(),
            cms.len()
        )));
    }
    if weights.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidWeights("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    let dim = cms[0].matrix().nrows();
    if cms.iter().any(|c| c.matrix().nrows() != dim) {
        return Err(Error::InvalidDimension(
            "covariance matrices differ in size".into(),
        ));
    }
    let mut out = DMatrix::zeros(dim, dim);
    for (p, c) in weights.iter().zip(cms) {
        out += c.matrix() * *p;
    }
    Ok(CovarianceMatrix::from_trusted(out))
}
