//! Maximisation of `<B>^2 + <B'>^2` over qubit measurement settings.
//!
//! With `A_j = a_j·σ` and `A'_j = a'_j·σ`, write `v_j = a_j + i a'_j ∈ C³`.
//! Then `<B> + i<B'> = λ_n tr[ρ ⊗_j (v_j·σ)]` with `|λ_n|² = 2^{-(n-1)}`, so
//! holding every other site fixed the objective is `|g·v_j|²` for a complex
//! vector `g` read off from three traces. Each site update maximises that
//! exactly:
//!
//! - unconstrained (`|a| = |a'| = 1`): `v = √2 e^{iφ} conj(g)/|g|` with the
//!   phase chosen so that `|Re v| = |Im v| = 1`, reaching `2|g|²`;
//! - anticommuting (`a ⊥ a'`): with `g = p + iq` the objective depends only
//!   on the plane normal `n = a × a'` and equals
//!   `|p|² + |q|² − (p·n)² − (q·n)² − 2 n·(p × q)`, maximised by
//!   `n = −(p × q)/|p × q|`.
//!
//! Sweeps repeat until the gain drops below `tol`; random restarts run in
//! parallel on independent streams and the best is kept.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{self, MeasurementSetup};
use crate::bounds::{self, Mode, COMPARISON_SLACK};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, DensityOperator};
use crate::random::{self, StreamRng};
use crate::states;

pub const DEFAULT_RESTARTS: usize = 32;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 500;
/// Below this `|g|²` a site update is treated as degenerate.
const DEGENERATE_GAIN: f64 = 1e-24;
const PERTURBATION: f64 = 1e-3;

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn scaled(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn normalized(a: Vec3) -> Vec3 {
    scaled(a, 1.0 / norm(a))
}

/// Any unit vector orthogonal to nonzero `a`.
fn orthogonal_unit(a: Vec3) -> Vec3 {
    let axis = if a[0].abs() <= a[1].abs() && a[0].abs() <= a[2].abs() {
        [1.0, 0.0, 0.0]
    } else if a[1].abs() <= a[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    normalized(cross(a, axis))
}

/// Per-site Bloch vectors `(a_j, a'_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitSettings {
    pub sites: Vec<SiteVectors>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteVectors {
    pub a: Vec3,
    #[serde(rename = "aprime")]
    pub a_prime: Vec3,
}

impl SiteVectors {
    fn complex(&self) -> [Complex64; 3] {
        [0, 1, 2].map(|k| c(self.a[k], self.a_prime[k]))
    }
}

impl QubitSettings {
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn to_setup(&self) -> Result<MeasurementSetup> {
        let pairs: Vec<(Vec3, Vec3)> = self.sites.iter().map(|s| (s.a, s.a_prime)).collect();
        MeasurementSetup::from_bloch(&pairs)
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.sites
            .iter()
            .all(|s| (norm(s.a) - 1.0).abs() <= tol && (norm(s.a_prime) - 1.0).abs() <= tol)
    }

    /// Largest `|a_j · a'_j|`.
    pub fn max_overlap(&self) -> f64 {
        self.sites
            .iter()
            .map(|s| dot(s.a, s.a_prime).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub constrain_anticommute: bool,
    pub restarts: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            constrain_anticommute: false,
            restarts: DEFAULT_RESTARTS,
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// `<B>^2 + <B'>^2` recomputed from `settings`.
    pub best_value: f64,
    pub b: f64,
    pub b_prime: f64,
    pub settings: QubitSettings,
    pub restarts_used: usize,
    /// Whether the best restart stopped on the tolerance rather than the
    /// sweep cap.
    pub converged: bool,
    /// Final objective of each restart, in restart order.
    pub restart_values: Vec<f64>,
}

struct RestartOutcome {
    value: f64,
    settings: QubitSettings,
    converged: bool,
}

/// Evaluation of `<B> + i<B'>` with one site's operator left open.
struct Objective<'a> {
    rho: &'a DensityOperator,
    n: usize,
    lambda: Complex64,
    paulis: [CMatrix; 3],
}

impl<'a> Objective<'a> {
    fn new(rho: &'a DensityOperator, n: usize) -> Self {
        let lambda = Complex64::from_polar(
            2f64.powf(-((n - 1) as f64) / 2.0),
            -FRAC_PI_4 * (n - 1) as f64,
        );
        Objective {
            rho,
            n,
            lambda,
            paulis: [linalg::sigma_x(), linalg::sigma_y(), linalg::sigma_z()],
        }
    }

    /// `g` with `<B> + i<B'> = g · v_site`.
    fn site_gradient(&self, ops: &[CMatrix], site: usize) -> [Complex64; 3] {
        [0, 1, 2].map(|k| {
            let factors = (0..self.n).map(|j| if j == site { &self.paulis[k] } else { &ops[j] });
            let full = linalg::tensor_all(factors).expect("qubit dimensions checked up front");
            self.lambda * linalg::trace_product(self.rho.matrix(), &full)
        })
    }
}

fn unconstrained_update(g: [Complex64; 3]) -> SiteVectors {
    let gnorm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let w = g.map(|z| z.conj() / gnorm);
    let ww: Complex64 = w.iter().map(|z| z * z).sum();
    // rotate so that e^{2iφ} w·w is purely imaginary, balancing |Re|, |Im|
    let phi = if ww.norm() > 0.0 { (FRAC_PI_2 - ww.arg()) / 2.0 } else { 0.0 };
    let u = w.map(|z| z * Complex64::from_polar(SQRT_2, phi));
    SiteVectors {
        a: u.map(|z| z.re),
        a_prime: u.map(|z| z.im),
    }
}

fn constrained_update(g: [Complex64; 3]) -> SiteVectors {
    let p = g.map(|z| z.re);
    let q = g.map(|z| z.im);
    let w = cross(p, q);
    let scale = norm(p).max(norm(q));
    let normal = if norm(w) > 1e-12 * scale * scale {
        scaled(normalized(w), -1.0)
    } else if norm(p) >= norm(q) {
        orthogonal_unit(p)
    } else {
        orthogonal_unit(q)
    };
    let in_plane = |v: Vec3| {
        let t = dot(v, normal);
        [v[0] - t * normal[0], v[1] - t * normal[1], v[2] - t * normal[2]]
    };
    let seed = if norm(in_plane(p)) >= norm(in_plane(q)) { in_plane(p) } else { in_plane(q) };
    let a = if norm(seed) > 1e-300 { normalized(seed) } else { orthogonal_unit(normal) };
    SiteVectors {
        a,
        a_prime: cross(normal, a),
    }
}

fn random_site(constrained: bool, rng: &mut StreamRng) -> SiteVectors {
    let a = random::random_unit_vector(rng);
    let a_prime = if constrained {
        random::random_orthogonal_to(a, rng)
    } else {
        random::random_unit_vector(rng)
    };
    SiteVectors { a, a_prime }
}

fn perturb(site: SiteVectors, constrained: bool, rng: &mut StreamRng) -> SiteVectors {
    let mut jitter = |v: Vec3| {
        let d: Vec3 = [0; 3].map(|_| {
            let x: f64 = StandardNormal.sample(rng);
            x * PERTURBATION
        });
        normalized([v[0] + d[0], v[1] + d[1], v[2] + d[2]])
    };
    let a = jitter(site.a);
    let mut a_prime = jitter(site.a_prime);
    if constrained {
        let t = dot(a, a_prime);
        a_prime = normalized([a_prime[0] - t * a[0], a_prime[1] - t * a[1], a_prime[2] - t * a[2]]);
    }
    SiteVectors { a, a_prime }
}

fn run_restart(objective: &Objective, opts: &OptimizeOptions, restart: usize) -> RestartOutcome {
    let n = objective.n;
    let constrained = opts.constrain_anticommute;
    let mut rng = random::stream_rng(opts.seed, restart as u64);
    let mut sites: Vec<SiteVectors> = (0..n).map(|_| random_site(constrained, &mut rng)).collect();
    let mut ops: Vec<CMatrix> = sites.iter().map(|s| linalg::bloch_complex(s.complex())).collect();
    let mut value = f64::NEG_INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_sweeps {
        let mut current = 0.0;
        for j in 0..n {
            let g = objective.site_gradient(&ops, j);
            let gain: f64 = g.iter().map(|z| z.norm_sqr()).sum();
            if gain < DEGENERATE_GAIN {
                sites[j] = perturb(sites[j], constrained, &mut rng);
            } else if constrained {
                sites[j] = constrained_update(g);
            } else {
                sites[j] = unconstrained_update(g);
            }
            ops[j] = linalg::bloch_complex(sites[j].complex());
            let v = sites[j].complex();
            current = (0..3).map(|k| g[k] * v[k]).sum::<Complex64>().norm_sqr();
        }
        let improvement = current - value;
        value = current;
        if improvement < opts.tol {
            converged = true;
            break;
        }
    }
    RestartOutcome {
        value,
        settings: QubitSettings { sites },
        converged,
    }
}

/// `(<B>, <B'>)` for `rho` under qubit `settings`, from the direct
/// construction.
pub fn evaluate_settings(rho: &DensityOperator, settings: &QubitSettings) -> Result<(f64, f64)> {
    let setup = settings.to_setup()?;
    let pair = bell::build_full(&setup)?;
    Ok((
        linalg::expectation(rho, pair.b())?,
        linalg::expectation(rho, pair.b_prime())?,
    ))
}

/// Number of qubits behind a `2^n`-dimensional state.
pub fn qubit_count(rho: &DensityOperator) -> Result<usize> {
    let dim = rho.dim();
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::Unsupported(format!(
            "settings search needs qubit sites; dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Maximise `<B>^2 + <B'>^2` over qubit settings for the state `rho` on
/// sites with local dimensions `site_dims` (all must be 2).
pub fn maximize_witness(
    rho: &DensityOperator,
    site_dims: &[usize],
    opts: &OptimizeOptions,
) -> Result<OptimizationResult> {
    if let Some((j, &d)) = site_dims.iter().enumerate().find(|(_, &d)| d != 2) {
        return Err(Error::Unsupported(format!(
            "site {} has dimension {d}; only qubit settings are searched",
            j + 1
        )));
    }
    let n = site_dims.len();
    if n == 0 || rho.dim() != linalg::total_dim(site_dims)? {
        return Err(Error::DimensionMismatch {
            expected: 1usize.checked_shl(n as u32).unwrap_or(0),
            found: rho.dim(),
        });
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("restarts", "must be at least 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let objective = Objective::new(rho, n);
    let outcomes: Vec<RestartOutcome> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| run_restart(&objective, opts, r))
        .collect();
    let best = outcomes
        .iter()
        .enumerate()
        .fold(0, |best, (i, o)| if o.value > outcomes[best].value { i } else { best });
    let winner = &outcomes[best];
    let (b, b_prime) = evaluate_settings(rho, &winner.settings)?;
    Ok(OptimizationResult {
        best_value: b * b + b_prime * b_prime,
        b,
        b_prime,
        settings: winner.settings.clone(),
        restarts_used: opts.restarts,
        converged: winner.converged,
        restart_values: outcomes.iter().map(|o| o.value).collect(),
    })
}

/// [`maximize_witness`] for a state of `2^n` dimensions on `n` qubits.
pub fn maximize_qubit_witness(rho: &DensityOperator, opts: &OptimizeOptions) -> Result<OptimizationResult> {
    let n = qubit_count(rho)?;
    maximize_witness(rho, &vec![2; n], opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub x: f64,
    pub max_lhs: f64,
    /// Exceeds `2^{n-2}`.
    pub detected_general: bool,
    /// Exceeds `2^{n-3}`; only reported for anticommuting settings.
    pub detected_anticommute: Option<bool>,
    /// Detection against the threshold of the scan's mode.
    pub detected: bool,
}

/// Optimise `ghz_noise(n, x)` at every grid point and compare the maxima
/// with the full-entanglement thresholds.
pub fn scan_threshold_window(
    n: usize,
    anticommute: bool,
    x_grid: &[f64],
    opts: &OptimizeOptions,
) -> Result<Vec<ScanRow>> {
    let general = bounds::full_entanglement_threshold(n, Mode::General)?.value();
    let anti = bounds::full_entanglement_threshold(n, Mode::Anticommute)?.value();
    if let Some(&x) = x_grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::invalid("x", format!("{x} is outside [0, 1]")));
    }
    let opts = OptimizeOptions {
        constrain_anticommute: anticommute,
        ..opts.clone()
    };
    x_grid
        .iter()
        .map(|&x| {
            let rho = states::ghz_noise(n, x)?;
            let result = maximize_witness(&rho, &vec![2; n], &opts)?;
            let lhs = result.best_value;
            let detected_general = lhs > general + COMPARISON_SLACK;
            let detected_anticommute = anticommute.then_some(lhs > anti + COMPARISON_SLACK);
            Ok(ScanRow {
                x,
                max_lhs: lhs,
                detected_general,
                detected_anticommute,
                detected: detected_anticommute.unwrap_or(detected_general),
            })
        })
        .collect()
}

/// Grid `start, start + step, …` up to `end` inclusive, rounded to 12
/// decimals so that decimal steps land on their nominal values.
pub fn linear_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !end.is_finite() || end < start {
        return Err(Error::invalid("x", "grid needs start ≤ end and a positive step"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::invalid("x", "grid has more than a million points"));
    }
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complex_dot(g: [Complex64; 3], v: [Complex64; 3]) -> f64 {
        (0..3).map(|k| g[k] * v[k]).sum::<Complex64>().norm_sqr()
    }

    fn random_g(rng: &mut StreamRng) -> [Complex64; 3] {
        [0; 3].map(|_| random::complex_gaussian(rng))
    }

    #[test]
    fn unconstrained_update_reaches_cauchy_schwarz() {
        let mut rng = random::stream_rng(5, 0);
        for _ in 0..200 {
            let g = random_g(&mut rng);
            let s = unconstrained_update(g);
            assert!((norm(s.a) - 1.0).abs() < 1e-12 && (norm(s.a_prime) - 1.0).abs() < 1e-12);
            let gain: f64 = g.iter().map(|z| z.norm_sqr()).sum();
            assert!((complex_dot(g, s.complex()) - 2.0 * gain).abs() < 1e-10);
        }
    }

    #[test]
    fn constrained_update_beats_dense_sampling() {
        let mut rng = random::stream_rng(6, 0);
        for _ in 0..50 {
            let g = random_g(&mut rng);
            let s = constrained_update(g);
            assert!(dot(s.a, s.a_prime).abs() < 1e-12);
            assert!((norm(s.a) - 1.0).abs() < 1e-12 && (norm(s.a_prime) - 1.0).abs() < 1e-12);
            let got = complex_dot(g, s.complex());
            let (p, q) = (g.map(|z| z.re), g.map(|z| z.im));
            let closed = dot(p, p) + dot(q, q) + 2.0 * norm(cross(p, q));
            assert!((got - closed).abs() < 1e-10);
            for _ in 0..2000 {
                let cand = random_site(true, &mut rng);
                assert!(complex_dot(g, cand.complex()) <= got + 1e-10);
            }
        }
    }

    #[test]
    fn maximally_mixed_gives_zero() {
        let rho = DensityOperator::maximally_mixed(8).unwrap();
        let opts = OptimizeOptions { restarts: 4, ..Default::default() };
        let res = maximize_qubit_witness(&rho, &opts).unwrap();
        assert!(res.best_value.abs() < 1e-20);
    }

    #[test]
    fn noisy_ghz_constrained_optimum() {
        let rho = states::ghz_noise(3, 0.8).unwrap();
        let opts = OptimizeOptions { constrain_anticommute: true, ..Default::default() };
        let res = maximize_qubit_witness(&rho, &opts).unwrap();
        assert!((res.best_value - 2.56).abs() < 1e-6, "{}", res.best_value);
        assert!(res.settings.max_overlap() < 1e-10);
        assert!(res.settings.is_normalized(1e-10));
    }

    #[test]
    fn restart_determinism() {
        let rho = states::ghz_noise(3, 0.6).unwrap();
        let opts = OptimizeOptions { restarts: 6, seed: 9, ..Default::default() };
        let a = maximize_qubit_witness(&rho, &opts).unwrap();
        let b = maximize_qubit_witness(&rho, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_qubit_sites_rejected() {
        let rho = DensityOperator::maximally_mixed(6).unwrap();
        assert!(matches!(
            maximize_witness(&rho, &[2, 3], &OptimizeOptions::default()),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(qubit_count(&rho), Err(Error::Unsupported(_))));
    }

    #[test]
    fn grid_points() {
        let g = linear_grid(0.0, 1.0, 0.01).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[50], 0.5);
        assert_eq!(g[71], 0.71);
        assert_eq!(g[100], 1.0);
        assert!(linear_grid(1.0, 0.0, 0.1).is_err());
    }
}
