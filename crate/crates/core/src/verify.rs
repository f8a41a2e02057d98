//! Randomized brute-force checks of the inequalities and of the states that
//! saturate them.
//!
//! Every trial draws from its own stream `(seed, trial)`, so reports are
//! reproducible and trials run in parallel. Violations are collected, never
//! thrown.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{self, BellPair, CorrelatorCoefficients, DichotomicObservable, MeasurementSetup, SitePair};
use crate::bounds::{self, Mode};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, DensityOperator};
use crate::random::{self, StreamRng};
use crate::states::{self, BlockRank, Partition};

/// Observed values may exceed a bound by at most this much.
pub const VIOLATION_TOL: f64 = 1e-8;
/// Entrywise tolerance for the operator identities inside the lemma.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    /// Stream number under the report's seed that reproduces the trial.
    pub stream: u64,
    pub kind: String,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub check: String,
    pub seed: u64,
    pub trials: usize,
    pub max_lhs: f64,
    pub bound: f64,
    /// `bound − max_lhs`.
    pub margin: f64,
    /// Secondary bound checked alongside the main one, if any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub secondary: Option<SecondaryCheck>,
    pub violations: Vec<Violation>,
    /// Excluded from JSON so reports stay byte-reproducible.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondaryCheck {
    pub label: String,
    pub max_value: f64,
    pub bound: f64,
}

impl TrialReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct TrialOutcome {
    lhs: f64,
    secondary: f64,
    violations: Vec<Violation>,
}

fn run_trials<F>(trials: usize, seed: u64, trial: F) -> (Vec<TrialOutcome>, f64)
where
    F: Fn(usize, &mut StreamRng) -> TrialOutcome + Sync,
{
    let start = Instant::now();
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = random::stream_rng(seed, t as u64);
            trial(t, &mut rng)
        })
        .collect();
    (outcomes, start.elapsed().as_secs_f64())
}

fn summarize(
    check: String,
    seed: u64,
    bound: f64,
    outcomes: Vec<TrialOutcome>,
    wall_time_secs: f64,
    secondary: Option<(String, f64)>,
) -> TrialReport {
    let trials = outcomes.len();
    let max_lhs = outcomes.iter().map(|o| o.lhs).fold(f64::NEG_INFINITY, f64::max);
    let max_secondary = outcomes.iter().map(|o| o.secondary).fold(f64::NEG_INFINITY, f64::max);
    let violations = outcomes.into_iter().flat_map(|o| o.violations).collect();
    TrialReport {
        check,
        seed,
        trials,
        max_lhs,
        bound,
        margin: bound - max_lhs,
        secondary: secondary.map(|(label, b)| SecondaryCheck {
            label,
            max_value: max_secondary,
            bound: b,
        }),
        violations,
        wall_time_secs,
    }
}

fn check(
    violations: &mut Vec<Violation>,
    trial: usize,
    kind: &str,
    value: f64,
    bound: f64,
    tol: f64,
) {
    if !(value <= bound + tol) {
        violations.push(Violation {
            trial,
            stream: trial as u64,
            kind: kind.to_string(),
            value,
            bound,
        });
    }
}

/// `(Y, Y')` defined by `f(Y, Y') = f(X₁, X'₁) ⊗ f(X₂, X'₂)`.
pub fn lemma_pair(x1: &CMatrix, x1p: &CMatrix, x2: &CMatrix, x2p: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let combined = linalg::tensor(&bell::f_combine(x1, x1p)?, &bell::f_combine(x2, x2p)?)?;
    Ok(bell::f_inverse(&combined))
}

/// `<Y>² + <Y'>² ≤ 2` for random `−1 ≤ X_i, X'_i ≤ 1` on dimensions
/// `dims = (d₁, d₂)` and random states.
pub fn verify_lemma(trials: usize, dims: (usize, usize), seed: u64) -> Result<TrialReport> {
    let (d1, d2) = dims;
    if d1 < 2 || d2 < 2 {
        return Err(Error::invalid("dims", "both dimensions must be at least 2"));
    }
    linalg::total_dim(&[d1, d2])?;
    let (outcomes, secs) = run_trials(trials, seed, |t, rng| {
        let x1 = random::random_observable(d1, rng);
        let x1p = random::random_observable(d1, rng);
        let x2 = random::random_observable(d2, rng);
        let x2p = random::random_observable(d2, rng);
        let rank = if t % 2 == 0 { 1 } else { d1 * d2 };
        let rho = random::random_density(d1 * d2, rank, rng);
        let (y, yp) = lemma_pair(x1.matrix(), x1p.matrix(), x2.matrix(), x2p.matrix())
            .expect("dimensions fixed by construction");
        let ey = linalg::expectation(&rho, &y).unwrap_or(f64::NAN);
        let eyp = linalg::expectation(&rho, &yp).unwrap_or(f64::NAN);
        let lhs = ey * ey + eyp * eyp;
        let mut violations = Vec::new();
        check(&mut violations, t, "lemma", lhs, 2.0, VIOLATION_TOL);
        TrialOutcome { lhs, secondary: 0.0, violations }
    });
    Ok(summarize(format!("lemma d=({d1},{d2})"), seed, 2.0, outcomes, secs, None))
}

/// `A⁺ = ½{X, X'}` and `A⁻ = (i/2)[X, X']`.
pub fn lemma_parts(x: &CMatrix, xp: &CMatrix) -> (CMatrix, CMatrix) {
    let plus = x.anticommutator(xp).scale_real(0.5);
    let minus = x.commutator(xp).scale(c(0.0, 0.5));
    (plus, minus)
}

/// Operator-norm bounds `‖A⁺₁⊗A⁺₂ ± A⁻₁⊗A⁻₂‖ ≤ 1` and the identity
/// `B_θ² = 1 + A⁻₁⊗A⁻₂ + sin 2θ A⁺₁⊗A⁺₂` for `X² = X'² = 1`.
pub fn verify_lemma_internals(trials: usize, seed: u64) -> Result<TrialReport> {
    let (outcomes, secs) = run_trials(trials, seed, |t, rng| {
        let d1 = rng.random_range(2..=4);
        let d2 = rng.random_range(2..=4);
        let x1 = random::random_involution(d1, rng);
        let x1p = random::random_involution(d1, rng);
        let x2 = random::random_involution(d2, rng);
        let x2p = random::random_involution(d2, rng);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let mut violations = Vec::new();
        let residual = lemma_internal_residuals(&x1, &x1p, &x2, &x2p, theta);
        let (norm_plus, norm_minus) = residual.norms;
        let lhs = norm_plus.max(norm_minus);
        check(&mut violations, t, "norm(A+A+ + A-A-)", norm_plus, 1.0, IDENTITY_TOL);
        check(&mut violations, t, "norm(A+A+ - A-A-)", norm_minus, 1.0, IDENTITY_TOL);
        check(&mut violations, t, "Y^2 identity", residual.y_squared, 0.0, IDENTITY_TOL);
        check(&mut violations, t, "anticommutator identity", residual.anticommutator, 0.0, IDENTITY_TOL);
        check(&mut violations, t, "B_theta^2 identity", residual.b_theta, 0.0, IDENTITY_TOL);
        TrialOutcome {
            lhs,
            secondary: residual.b_theta.max(residual.y_squared).max(residual.anticommutator),
            violations,
        }
    });
    Ok(summarize(
        "lemma-internals".to_string(),
        seed,
        1.0,
        outcomes,
        secs,
        Some(("max identity residual".to_string(), IDENTITY_TOL)),
    ))
}

/// Residuals of the operator identities used inside the lemma.
#[derive(Clone, Copy, Debug)]
pub struct LemmaResiduals {
    /// `(‖A⁺⊗A⁺ + A⁻⊗A⁻‖, ‖A⁺⊗A⁺ − A⁻⊗A⁻‖)`.
    pub norms: (f64, f64),
    /// `max(|Y² − (1 + A⁻⊗A⁻)|, |Y'² − (1 + A⁻⊗A⁻)|)` entrywise.
    pub y_squared: f64,
    /// `|{Y, Y'} − 2A⁺⊗A⁺|` entrywise.
    pub anticommutator: f64,
    /// `|B_θ² − (1 + A⁻⊗A⁻ + sin 2θ A⁺⊗A⁺)|` entrywise.
    pub b_theta: f64,
}

pub fn lemma_internal_residuals(
    x1: &CMatrix,
    x1p: &CMatrix,
    x2: &CMatrix,
    x2p: &CMatrix,
    theta: f64,
) -> LemmaResiduals {
    let (p1, m1) = lemma_parts(x1, x1p);
    let (p2, m2) = lemma_parts(x2, x2p);
    let pp = linalg::tensor(&p1, &p2).expect("small dims");
    let mm = linalg::tensor(&m1, &m2).expect("small dims");
    let norm_plus = linalg::operator_norm(&(&pp + &mm)).unwrap_or(f64::INFINITY);
    let norm_minus = linalg::operator_norm(&(&pp - &mm)).unwrap_or(f64::INFINITY);
    let (y, yp) = lemma_pair(x1, x1p, x2, x2p).expect("matching dims");
    let id = CMatrix::identity(y.dim());
    let one_plus_mm = &id + &mm;
    let y_squared = (&y * &y).max_abs_diff(&one_plus_mm).max((&yp * &yp).max_abs_diff(&one_plus_mm));
    let anticommutator = y.anticommutator(&yp).max_abs_diff(&pp.scale_real(2.0));
    let b = &y.scale_real(theta.cos()) + &yp.scale_real(theta.sin());
    let want = &one_plus_mm + &pp.scale_real((2.0 * theta).sin());
    LemmaResiduals {
        norms: (norm_plus, norm_minus),
        y_squared,
        anticommutator,
        b_theta: (&b * &b).max_abs_diff(&want),
    }
}

/// Random setup: observables with spectra in `[-1, 1]` on every site, or
/// orthogonal Bloch pairs (qubits only) when `anticommute`.
pub fn random_setup(site_dims: &[usize], anticommute: bool, rng: &mut StreamRng) -> Result<MeasurementSetup> {
    let sites = site_dims
        .iter()
        .map(|&d| {
            if anticommute {
                if d != 2 {
                    return Err(Error::Unsupported(
                        "random anticommuting setups are drawn for qubit sites only".into(),
                    ));
                }
                let a = random::random_unit_vector(rng);
                let ap = random::random_orthogonal_to(a, rng);
                SitePair::new(DichotomicObservable::bloch(a)?, DichotomicObservable::bloch(ap)?)
            } else {
                SitePair::new(random::random_observable(d, rng), random::random_observable(d, rng))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSetup::new(sites)
}

fn bell_values(rho: &DensityOperator, pair: &BellPair) -> (f64, f64) {
    (
        linalg::expectation(rho, pair.b()).unwrap_or(f64::NAN),
        linalg::expectation(rho, pair.b_prime()).unwrap_or(f64::NAN),
    )
}

/// `(tr ρB)² + (tr ρB')² ≤ 2^{n+m-2k+1}` (or `2^{n-2k+1}` with
/// anticommuting setups) for random k-separable `ρ`; additionally
/// `|tr ρB|` against the linear bound.
///
/// Even trials use a single product of pure block states, odd trials a
/// mixture of `mixture_terms` full-rank products.
pub fn verify_separability_bound(
    partition: &Partition,
    site_dims: &[usize],
    trials: usize,
    mixture_terms: usize,
    mode: Mode,
    seed: u64,
) -> Result<TrialReport> {
    let n = partition.n();
    if n > 8 {
        return Err(Error::invalid("n", "randomized separability checks are limited to n ≤ 8"));
    }
    if site_dims.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: site_dims.len(),
        });
    }
    if mixture_terms == 0 {
        return Err(Error::invalid("terms", "must be at least 1"));
    }
    if mode == Mode::Anticommute && site_dims.iter().any(|&d| d != 2) {
        return Err(Error::Unsupported("anticommuting checks need qubit sites".into()));
    }
    linalg::total_dim(site_dims)?;
    let profile = partition.profile();
    let bound = bounds::quadratic_bound(n, profile.k, profile.m, mode)?.value();
    let linear = bounds::linear_bound(n, profile.k, profile.m)?.value();
    let (outcomes, secs) = run_trials(trials, seed, |t, rng| {
        let (terms, rank) = if t % 2 == 0 { (1, BlockRank::Pure) } else { (mixture_terms, BlockRank::Full) };
        let rho = states::random_k_separable_with(partition, site_dims, terms, rank, rng)
            .expect("validated partition and dims");
        let setup = random_setup(site_dims, mode == Mode::Anticommute, rng).expect("validated dims");
        let pair = bell::build_full(&setup).expect("validated dims");
        let (b, bp) = bell_values(&rho, &pair);
        let lhs = b * b + bp * bp;
        let mut violations = Vec::new();
        check(&mut violations, t, "quadratic", lhs, bound, VIOLATION_TOL);
        check(&mut violations, t, "linear", b.abs(), linear, VIOLATION_TOL);
        TrialOutcome { lhs, secondary: b.abs(), violations }
    });
    Ok(summarize(
        format!("separable-bound {partition} {mode:?}"),
        seed,
        bound,
        outcomes,
        secs,
        Some(("|<B>|".to_string(), linear)),
    ))
}

/// `<A>² + <A'>² ≤ 1` for orthogonal Bloch pairs and random qubit states.
pub fn verify_single_site_anticommuting(trials: usize, seed: u64) -> Result<TrialReport> {
    let (outcomes, secs) = run_trials(trials, seed, |t, rng| {
        let setup = random_setup(&[2], true, rng).expect("qubit");
        let rank = if t % 2 == 0 { 1 } else { 2 };
        let rho = random::random_density(2, rank, rng);
        let a = linalg::expectation(&rho, setup.sites()[0].a.matrix()).unwrap_or(f64::NAN);
        let ap = linalg::expectation(&rho, setup.sites()[0].a_prime.matrix()).unwrap_or(f64::NAN);
        let lhs = a * a + ap * ap;
        let mut violations = Vec::new();
        check(&mut violations, t, "single-site", lhs, 1.0, 1e-10);
        TrialOutcome { lhs, secondary: 0.0, violations }
    });
    Ok(summarize("single-site anticommuting".to_string(), seed, 1.0, outcomes, secs, None))
}

/// Largest entrywise gap between the correlator expansion and the direct
/// construction over random setups with local dimensions drawn from
/// `{2, 3}`.
pub fn certify_coefficients(n: usize, trials: usize, seed: u64) -> Result<f64> {
    let coeffs = CorrelatorCoefficients::new(n)?;
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = random::stream_rng(seed, t as u64);
        let dims: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
        let setup = random_setup(&dims, false, &mut rng)?;
        let direct = bell::build_full(&setup)?;
        worst = worst.max(coeffs.assemble(&setup)?.max_abs_diff(&direct));
    }
    Ok(worst)
}

/// Qubit state and setup saturating the bounds of `partition`'s profile.
///
/// Singleton sites sit in `|0⟩` with `A = A' = σ_z`, so `<B> = <B'> = 1`.
/// Each multi-site block holds a GHZ state measured with planar settings
/// `a = (cos φ, sin φ, 0)`, `a' = (−sin φ, cos φ, 0)`; then
/// `<B_α> + i<B'_α> = 2^{(L-1)/2} e^{−iπ(L−1)/4 − iLφ}`, and `φ` is chosen to
/// put the phase at π/4 for every block but the last multi-site block, whose
/// phase is set to 0. The whole-system value is then real and reaches
/// `2^{(n+m-2k+1)/2}`, or 1 when every block is a singleton.
pub fn construct_extremal(partition: &Partition) -> Result<(DensityOperator, MeasurementSetup)> {
    let n = partition.n();
    let last_multi = partition.blocks().iter().rposition(|b| b.len() > 1);
    let up = DensityOperator::pure(&[c(1.0, 0.0), c(0.0, 0.0)])?;
    let z = DichotomicObservable::new(linalg::sigma_z())?;
    let mut sites: Vec<Option<SitePair>> = vec![None; n];
    let mut block_states = Vec::with_capacity(partition.blocks().len());
    for (i, block) in partition.blocks().iter().enumerate() {
        let len = block.len();
        if len == 1 {
            sites[block[0]] = Some(SitePair::new(z.clone(), z.clone())?);
            block_states.push(up.clone());
            continue;
        }
        let target = if Some(i) == last_multi { 0.0 } else { FRAC_PI_4 };
        let phi = (-FRAC_PI_4 * (len - 1) as f64 - target) / len as f64;
        let a = [phi.cos(), phi.sin(), 0.0];
        let ap = [-phi.sin(), phi.cos(), 0.0];
        for &j in block {
            sites[j] = Some(SitePair::new(DichotomicObservable::bloch(a)?, DichotomicObservable::bloch(ap)?)?);
        }
        block_states.push(states::ghz(len)?);

        // certify the block's values before relying on them
        let block_setup = MeasurementSetup::new(block.iter().map(|&j| sites[j].clone().expect("set above")).collect())?;
        let pair = bell::build_full(&block_setup)?;
        let (b, bp) = bell_values(block_states.last().expect("pushed"), &pair);
        let radius = 2f64.powf((len - 1) as f64 / 2.0);
        let (want_b, want_bp) = (radius * target.cos(), radius * target.sin());
        if (b - want_b).abs() > 1e-10 || (bp - want_bp).abs() > 1e-10 {
            return Err(Error::Construction(format!(
                "block {i} reached ({b}, {bp}) instead of ({want_b}, {want_bp})"
            )));
        }
    }
    let rho = states::product_over_partition(partition, &block_states, &vec![2; n])?;
    let setup = MeasurementSetup::new(sites.into_iter().map(|s| s.expect("every site in a block")).collect())?;
    Ok((rho, setup))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    /// 1-based blocks.
    pub partition: Vec<Vec<usize>>,
    pub k: usize,
    pub m: usize,
    pub lhs: f64,
    pub quadratic_bound: f64,
    pub b: f64,
    pub linear_bound: f64,
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub n: usize,
    pub tolerance: f64,
    pub rows: Vec<TightnessRow>,
}

impl TightnessReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.saturated)
    }
}

pub const TIGHTNESS_TOL: f64 = 1e-8;

pub fn tightness_row(partition: &Partition) -> Result<TightnessRow> {
    let n = partition.n();
    let profile = partition.profile();
    let (rho, setup) = construct_extremal(partition)?;
    let pair = bell::build_full(&setup)?;
    let (b, bp) = bell_values(&rho, &pair);
    let lhs = b * b + bp * bp;
    let quadratic = bounds::quadratic_bound(n, profile.k, profile.m, Mode::General)?.value();
    let linear = bounds::linear_bound(n, profile.k, profile.m)?.value();
    let quad_ok = (lhs - quadratic).abs() <= TIGHTNESS_TOL;
    // the linear bound is attained by B itself, except when every block is
    // a singleton and the quadratic value splits evenly between B and B'
    let lin_ok = (b.abs() - linear).abs() <= TIGHTNESS_TOL;
    Ok(TightnessRow {
        partition: partition.one_based_blocks(),
        k: profile.k,
        m: profile.m,
        lhs,
        quadratic_bound: quadratic,
        b,
        linear_bound: linear,
        saturated: quad_ok && lin_ok,
    })
}

/// [`construct_extremal`] over every partition of `n` qubits.
pub fn verify_tightness(n: usize) -> Result<TightnessReport> {
    if n == 0 || n > 8 {
        return Err(Error::invalid("n", "tightness sweep covers 1 ≤ n ≤ 8"));
    }
    let rows = Partition::enumerate(n)
        .par_iter()
        .map(tightness_row)
        .collect::<Result<Vec<_>>>()?;
    Ok(TightnessReport {
        n,
        tolerance: TIGHTNESS_TOL,
        rows,
    })
}
