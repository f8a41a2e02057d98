//! Seeded random operators and states.
//!
//! All randomness comes from ChaCha8 streams keyed by a caller-supplied
//! 64-bit seed and a stream number, so independent tasks (trials, restarts,
//! settings) draw from independent reproducible streams.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::bell::DichotomicObservable;
use crate::linalg::{self, c, CMatrix, DensityOperator};

pub type StreamRng = ChaCha8Rng;

/// Generator for `stream` under master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows × cols` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// `GG†/tr(GG†)` with `G` a `dim × rank` Ginibre matrix; rank 1 gives a
/// Haar-random pure state.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(dim, rank.max(1), rng);
    let gg = &g * g.adjoint();
    let tr = gg.trace().re;
    let m = CMatrix::from_inner(gg / c(tr, 0.0)).hermitian_part();
    DensityOperator::new_unchecked(m)
}

/// Full-rank Ginibre density operator.
pub fn random_mixed_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    random_density(dim, dim, rng)
}

/// GUE-distributed Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_inner(ginibre(dim, dim, rng)).hermitian_part()
}

/// Haar unitary from the QR decomposition of a Ginibre matrix with the
/// phases of `R`'s diagonal divided out.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(dim, dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    CMatrix::from_inner(q)
}

/// `U diag(values) U†` for Haar `U`.
pub fn random_with_spectrum<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> CMatrix {
    let u = random_unitary(values.len(), rng);
    linalg::reconstruct(values, &u).hermitian_part()
}

/// Random observable with spectrum in `[-1, 1]`: a GUE matrix whose
/// eigenvalues are mapped affinely onto `[lo, hi]`. Half the draws use the
/// full interval; the rest a random subinterval, so both extremal and
/// interior (non-projective) observables occur.
pub fn random_observable<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DichotomicObservable {
    let h = random_hermitian(dim, rng);
    let (values, vectors) = linalg::hermitian_eigh(&h).expect("GUE sample is Hermitian");
    let (lo, hi) = if rng.random_bool(0.5) {
        (-1.0, 1.0)
    } else {
        let a: f64 = rng.random_range(-1.0..=1.0);
        let b: f64 = rng.random_range(-1.0..=1.0);
        (a.min(b), a.max(b))
    };
    let (vmin, vmax) = (values[0], values[values.len() - 1]);
    let span = vmax - vmin;
    let mapped: Vec<f64> = values
        .iter()
        .map(|&v| {
            let t = if span > 0.0 { (v - vmin) / span } else { 0.5 };
            (lo + (hi - lo) * t).clamp(-1.0, 1.0)
        })
        .collect();
    DichotomicObservable::new_unchecked(linalg::reconstruct(&mapped, &vectors).hermitian_part())
}

/// Random observable with `X² = 1`: `U diag(±1) U†`.
pub fn random_involution<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let values: Vec<f64> = (0..dim)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    random_with_spectrum(&values, rng)
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-6 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

/// Unit vector orthogonal to unit `a`, uniform on that great circle.
pub fn random_orthogonal_to<R: Rng + ?Sized>(a: [f64; 3], rng: &mut R) -> [f64; 3] {
    loop {
        let v = random_unit_vector(rng);
        let dot = v[0] * a[0] + v[1] * a[1] + v[2] * a[2];
        let w = [v[0] - dot * a[0], v[1] - dot * a[1], v[2] - dot * a[2]];
        let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if norm > 1e-6 {
            return [w[0] / norm, w[1] / norm, w[2] / norm];
        }
    }
}

/// Dirichlet(1, …, 1) weights.
pub fn dirichlet_uniform<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..count).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}
