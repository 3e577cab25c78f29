//! Seeded random instances for property sweeps.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gaussian::GaussianState;
use crate::symplectic::{realify, CovarianceMatrix, OrthogonalSymplectic, SymplecticMatrix};

/// Haar-random unitary (QR of a complex Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_orthosymplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> OrthogonalSymplectic {
    OrthogonalSymplectic::from_trusted(realify(&random_unitary(n, rng)))
}

/// O·(⊕ 𝔖(rᵢ))·O′ with rᵢ uniform in [0, max_r); returns the squeezings too.
pub fn random_symplectic<R: Rng + ?Sized>(
    n: usize,
    max_r: f64,
    rng: &mut R,
) -> (SymplecticMatrix, Vec<f64>) {
    let r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * max_r).collect();
    let o1 = random_orthosymplectic(n, rng);
    let o2 = random_orthosymplectic(n, rng);
    let s = o1.matrix() * SymplecticMatrix::squeezers(&r).matrix() * o2.matrix();
    (SymplecticMatrix::from_trusted(s), r)
}

/// S·(⊕ νₖ I₂)·Sᵀ with νₖ − ½ uniform in [0, max_nbar).
pub fn random_cm<R: Rng + ?Sized>(
    n: usize,
    max_r: f64,
    max_nbar: f64,
    rng: &mut R,
) -> CovarianceMatrix {
    let nbar: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * max_nbar).collect();
    let (s, _) = random_symplectic(n, max_r, rng);
    CovarianceMatrix::thermal(&nbar).transform(s.matrix())
}

/// O·(⊕ νₖ I₂)·Oᵀ
pub fn random_free_cm<R: Rng + ?Sized>(n: usize, max_nbar: f64, rng: &mut R) -> CovarianceMatrix {
    let nbar: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * max_nbar).collect();
    let o = random_orthosymplectic(n, rng);
    CovarianceMatrix::thermal(&nbar).transform(o.matrix())
}

pub fn random_displacement<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(2 * n, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        x * scale
    })
}

pub fn random_state<R: Rng + ?Sized>(
    n: usize,
    max_r: f64,
    max_nbar: f64,
    displacement_scale: f64,
    rng: &mut R,
) -> GaussianState {
    let cm = random_cm(n, max_r, max_nbar, rng);
    let d = random_displacement(n, displacement_scale, rng);
    GaussianState::from_parts(d, cm)
}
