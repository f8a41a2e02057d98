//! Two-outcome POVMs, exact full correlators and finite-shot sampling.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::bell::{DichotomicObservable, MeasurementSetup, Setting};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, DensityOperator};
use crate::random;

/// Allowed drift of `Σ_r p(r|s)` from one before sampling is refused.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Probabilities above `-NEGATIVE_PROBABILITY_TOL` are clamped to zero;
/// anything lower is a numerical-health failure.
pub const NEGATIVE_PROBABILITY_TOL: f64 = 1e-8;

/// `F± = (1 ± A)/2`, the unique two-outcome POVM with `F₊ − F₋ = A`.
pub fn povm_from_observable(a: &DichotomicObservable) -> (CMatrix, CMatrix) {
    let id = CMatrix::identity(a.site_dim());
    let plus = (&id + a.matrix()).scale_real(0.5);
    let minus = (&id - a.matrix()).scale_real(0.5);
    (plus, minus)
}

/// Estimated full correlator for one setting string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationEntry {
    pub setting: Setting,
    /// `E(s)`, the mean of the product of all outcomes.
    pub estimate: f64,
    /// Shots behind the estimate; zero for exact values.
    pub shots: u64,
    pub se: f64,
}

/// Full correlators indexed by setting string.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationRecord {
    n: usize,
    entries: Vec<CorrelationEntry>,
}

impl CorrelationRecord {
    pub fn new(n: usize, mut entries: Vec<CorrelationEntry>) -> Result<Self> {
        if n == 0 || n > 30 {
            return Err(Error::invalid("n", "must be between 1 and 30"));
        }
        for e in &entries {
            let s = e.setting.to_string();
            if e.setting.n() != n {
                return Err(Error::invalid("s", format!("{s:?} does not have {n} sites")));
            }
            if !e.estimate.is_finite() || e.estimate.abs() > 1.0 + 1e-12 {
                return Err(Error::invalid("E", format!("{} for s={s} leaves [-1, 1]", e.estimate)));
            }
            if !e.se.is_finite() || e.se < 0.0 {
                return Err(Error::invalid("se", format!("{} for s={s} is not a nonnegative number", e.se)));
            }
        }
        entries.sort_by_key(|e| e.setting.index());
        if let Some(w) = entries.windows(2).find(|w| w[0].setting == w[1].setting) {
            return Err(Error::invalid("s", format!("setting {} listed twice", w[0].setting)));
        }
        Ok(CorrelationRecord { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entries in lexicographic setting order.
    pub fn entries(&self) -> &[CorrelationEntry] {
        &self.entries
    }

    pub fn get(&self, setting: &Setting) -> Option<&CorrelationEntry> {
        self.entries
            .binary_search_by_key(&setting.index(), |e| e.setting.index())
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn is_complete(&self) -> bool {
        self.entries.len() == 1usize << self.n
    }
}

fn check_dims(rho: &DensityOperator, setup: &MeasurementSetup) -> Result<()> {
    if rho.dim() != setup.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: setup.total_dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// `tr[ρ ⊗_j A_j^{(s_j)}]`.
pub fn exact_correlator(rho: &DensityOperator, setup: &MeasurementSetup, s: &Setting) -> Result<f64> {
    check_dims(rho, setup)?;
    let op = setup.correlator_operator(s)?;
    linalg::expectation(rho, &op)
}

/// Every full correlator, exact (`se = 0`, `shots = 0`).
pub fn exact_record(rho: &DensityOperator, setup: &MeasurementSetup) -> Result<CorrelationRecord> {
    check_dims(rho, setup)?;
    let entries = Setting::all(setup.n())
        .map(|s| {
            Ok(CorrelationEntry {
                setting: s,
                estimate: exact_correlator(rho, setup, &s)?.clamp(-1.0, 1.0),
                shots: 0,
                se: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelationRecord::new(setup.n(), entries)
}

/// `p(r|s) = tr[ρ ⊗_j F^{(s_j)}_{r_j}]` over all `2^n` outcome strings.
///
/// Outcome index bit `j` (counted from the most significant of `n`) set
/// means site `j` reported −1.
pub fn outcome_distribution(
    rho: &DensityOperator,
    setup: &MeasurementSetup,
    s: &Setting,
) -> Result<Vec<f64>> {
    check_dims(rho, setup)?;
    let n = setup.n();
    let povms: Vec<(CMatrix, CMatrix)> = setup
        .sites()
        .iter()
        .enumerate()
        .map(|(j, pair)| {
            let obs = if s.is_primed(j) { &pair.a_prime } else { &pair.a };
            povm_from_observable(obs)
        })
        .collect();
    let mut probs = Vec::with_capacity(1 << n);
    for r in 0..1u64 << n {
        let factors = povms.iter().enumerate().map(|(j, (plus, minus))| {
            if (r >> (n - 1 - j)) & 1 == 1 {
                minus
            } else {
                plus
            }
        });
        let op = linalg::tensor_all(factors)?;
        probs.push(linalg::trace_product(rho.matrix(), &op).re);
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NumericalHealth(format!(
            "outcome probabilities for s={s} sum to {total}"
        )));
    }
    for p in &mut probs {
        if *p < -NEGATIVE_PROBABILITY_TOL {
            return Err(Error::NumericalHealth(format!("negative probability {p:e} for s={s}")));
        }
        *p = p.max(0.0);
    }
    Ok(probs)
}

/// Multinomial draw by successive binomials.
fn multinomial_counts(shots: u64, probs: &[f64], rng: &mut random::StreamRng) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("q in (0, 1)").sample(rng)
        };
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

/// Simulate `shots_per_setting` runs of every setting string.
///
/// Setting `s` draws from its own stream `(seed, index(s))`, so records are
/// reproducible bit for bit whatever the thread count.
pub fn sample_experiment(
    rho: &DensityOperator,
    setup: &MeasurementSetup,
    shots_per_setting: u64,
    seed: u64,
) -> Result<CorrelationRecord> {
    if shots_per_setting == 0 {
        return Err(Error::invalid("shots", "must be at least 1"));
    }
    check_dims(rho, setup)?;
    let n = setup.n();
    let settings: Vec<Setting> = Setting::all(n).collect();
    let entries = settings
        .par_iter()
        .map(|s| {
            let probs = outcome_distribution(rho, setup, s)?;
            let mut rng = random::stream_rng(seed, s.index());
            let counts = multinomial_counts(shots_per_setting, &probs, &mut rng);
            let signed: i64 = counts
                .iter()
                .enumerate()
                .map(|(r, &k)| {
                    let odd = (r as u64).count_ones() % 2 == 1;
                    if odd { -(k as i64) } else { k as i64 }
                })
                .sum();
            let estimate = signed as f64 / shots_per_setting as f64;
            let se = ((1.0 - estimate * estimate).max(0.0) / shots_per_setting as f64).sqrt();
            Ok(CorrelationEntry {
                setting: *s,
                estimate,
                shots: shots_per_setting,
                se,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelationRecord::new(n, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{build_full, evaluate_from_correlations, CorrelatorCoefficients, SitePair};
    use crate::linalg::{c, expectation, sigma_z};
    use crate::states;

    fn xy(n: usize) -> MeasurementSetup {
        MeasurementSetup::from_bloch(&vec![([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]); n]).unwrap()
    }

    #[test]
    fn povm_of_sigma_z() {
        let (p, m) = povm_from_observable(&DichotomicObservable::new(sigma_z()).unwrap());
        assert_eq!(p, CMatrix::from_real_diagonal(&[1.0, 0.0]));
        assert_eq!(m, CMatrix::from_real_diagonal(&[0.0, 1.0]));
    }

    #[test]
    fn povm_of_zero_is_coin() {
        let (p, m) = povm_from_observable(&DichotomicObservable::new(CMatrix::zeros(2)).unwrap());
        assert_eq!(p, CMatrix::identity(2).scale_real(0.5));
        assert_eq!(m, p);
    }

    #[test]
    fn povm_of_half_sigma_x() {
        let (p, m) = povm_from_observable(&DichotomicObservable::bloch([0.5, 0.0, 0.0]).unwrap());
        let ev = linalg::hermitian_eigenvalues(&p).unwrap();
        assert!((ev[0] - 0.25).abs() < 1e-12 && (ev[1] - 0.75).abs() < 1e-12);
        assert!((&p + &m).max_abs_diff(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn exact_correlators() {
        let ghz = states::ghz(3).unwrap();
        let setup = xy(3);
        let xxx: Setting = "000".parse().unwrap();
        assert!((exact_correlator(&ghz, &setup, &xxx).unwrap() - 1.0).abs() < 1e-14);
        let mixed = DensityOperator::maximally_mixed(8).unwrap();
        for s in Setting::all(3) {
            assert!(exact_correlator(&mixed, &setup, &s).unwrap().abs() < 1e-15);
        }
        let noisy = states::ghz_noise(3, 0.37).unwrap();
        for s in Setting::all(3) {
            let pure = exact_correlator(&ghz, &setup, &s).unwrap();
            assert!((exact_correlator(&noisy, &setup, &s).unwrap() - 0.37 * pure).abs() < 1e-14);
        }
    }

    #[test]
    fn distributions_normalise() {
        let rho = states::ghz_noise(3, 0.8).unwrap();
        let setup = MeasurementSetup::from_bloch(&[([0.6, 0.0, 0.8], [0.0, 0.3, 0.0]); 3]).unwrap();
        for s in Setting::all(3) {
            let p = outcome_distribution(&rho, &setup, &s).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn exact_record_closes_the_loop() {
        let rho = states::ghz_noise(3, 0.7).unwrap();
        let setup = MeasurementSetup::from_bloch(&[([0.6, 0.0, 0.8], [0.0, 0.6, -0.8]); 3]).unwrap();
        let record = exact_record(&rho, &setup).unwrap();
        let (b, bp) = evaluate_from_correlations(&CorrelatorCoefficients::new(3).unwrap(), &record).unwrap();
        let pair = build_full(&setup).unwrap();
        assert!((b.value - expectation(&rho, pair.b()).unwrap()).abs() < 1e-12);
        assert!((bp.value - expectation(&rho, pair.b_prime()).unwrap()).abs() < 1e-12);
        assert_eq!(b.se, 0.0);
    }

    #[test]
    fn eigenstate_gives_exact_signs() {
        let up = DensityOperator::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let zero3 = states::product_over_partition(&states::Partition::singletons(3).unwrap(), &vec![up; 3], &[2, 2, 2]).unwrap();
        let z = DichotomicObservable::new(sigma_z()).unwrap();
        let neg_z = DichotomicObservable::new(sigma_z().scale_real(-1.0)).unwrap();
        let setup = MeasurementSetup::uniform(3, SitePair::new(z, neg_z).unwrap()).unwrap();
        let rec = sample_experiment(&zero3, &setup, 1000, 11).unwrap();
        for e in rec.entries() {
            let want = if e.setting.weight() % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(e.estimate, want);
            assert_eq!(e.se, 0.0);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let rho = states::ghz_noise(3, 0.9).unwrap();
        let a = sample_experiment(&rho, &xy(3), 5000, 42).unwrap();
        let b = sample_experiment(&rho, &xy(3), 5000, 42).unwrap();
        let d = sample_experiment(&rho, &xy(3), 5000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn record_validation() {
        let s: Setting = "01".parse().unwrap();
        let entry = |estimate: f64, se: f64| CorrelationEntry { setting: s, estimate, shots: 10, se };
        assert!(CorrelationRecord::new(2, vec![entry(1.5, 0.0)]).is_err());
        assert!(CorrelationRecord::new(2, vec![entry(0.5, -0.1)]).is_err());
        assert!(CorrelationRecord::new(2, vec![entry(0.5, 0.1), entry(0.2, 0.1)]).is_err());
        assert!(CorrelationRecord::new(3, vec![entry(0.5, 0.1)]).is_err());
        let rec = CorrelationRecord::new(2, vec![entry(0.5, 0.1)]).unwrap();
        assert!(!rec.is_complete());
        let err = evaluate_from_correlations(&CorrelatorCoefficients::new(2).unwrap(), &rec).unwrap_err();
        assert!(matches!(err, Error::IncompleteData { ref missing } if missing == "00"));
    }

    #[test]
    fn zero_correlators_give_zero() {
        let entries = Setting::all(3)
            .map(|s| CorrelationEntry { setting: s, estimate: 0.0, shots: 0, se: 0.0 })
            .collect();
        let rec = CorrelationRecord::new(3, entries).unwrap();
        let (b, bp) = evaluate_from_correlations(&CorrelatorCoefficients::new(3).unwrap(), &rec).unwrap();
        assert_eq!((b.value, bp.value), (0.0, 0.0));
    }
}
