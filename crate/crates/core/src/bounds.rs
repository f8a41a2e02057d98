//! Closed-form separability bounds and the witness decision rule.
//!
//! For a state that is k-separable with respect to a partition with `k`
//! blocks, `m` of them singletons,
//!
//! ```text
//! <B>^2 + <B'>^2 ≤ 2^{n+m-2k+1}          (any observables −1 ≤ A ≤ 1)
//! <B>^2 + <B'>^2 ≤ 2^{n-2k+1}            ({A_j, A'_j} = 0 on every site)
//! |<B>| ≤ 2^{(n+m-2k+1)/2}  (k < n),  1  (k = n)
//! ```
//!
//! Maximising over profiles with `k ≥ 2` gives the full-entanglement
//! thresholds `2^{n-2}` (n ≥ 3) and `2^{n-3}` respectively.
//!
//! Bounds are powers of √2 and are carried exactly as [`Pow2`].

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bell::Estimate;
use crate::error::{Error, Result};
use crate::states::PartitionProfile;

/// Exact `2^{h/2}` for integer `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pow2 {
    half_exponent: i32,
}

impl Pow2 {
    pub fn from_exponent(e: i32) -> Self {
        Pow2 { half_exponent: 2 * e }
    }

    pub fn from_half_exponent(h: i32) -> Self {
        Pow2 { half_exponent: h }
    }

    pub fn half_exponent(&self) -> i32 {
        self.half_exponent
    }

    /// The exponent `e` in `2^e`; a multiple of ½.
    pub fn exponent(&self) -> f64 {
        self.half_exponent as f64 / 2.0
    }

    /// Value as `f64`; exact when the exponent is an integer.
    pub fn value(&self) -> f64 {
        let h = self.half_exponent;
        if h % 2 == 0 {
            2f64.powi(h / 2)
        } else {
            SQRT_2 * 2f64.powi((h - 1) / 2)
        }
    }

    pub fn squared(&self) -> Self {
        Pow2 {
            half_exponent: 2 * self.half_exponent,
        }
    }

    pub fn sqrt(&self) -> Option<Self> {
        (self.half_exponent % 2 == 0).then_some(Pow2 {
            half_exponent: self.half_exponent / 2,
        })
    }
}

impl fmt::Display for Pow2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.half_exponent % 2 == 0 {
            write!(f, "2^{}", self.half_exponent / 2)
        } else {
            write!(f, "2^({}/2)", self.half_exponent)
        }
    }
}

/// Whether every site's observable pair is assumed to anticommute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    General,
    Anticommute,
}

impl Mode {
    pub fn from_flag(anticommute: bool) -> Self {
        if anticommute {
            Mode::Anticommute
        } else {
            Mode::General
        }
    }
}

fn check_profile(n: usize, k: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if n > 62 {
        return Err(Error::invalid("n", "at most 62 sites"));
    }
    if !(PartitionProfile { k, m }).is_realizable(n) {
        return Err(Error::invalid(
            "profile",
            format!("no partition of {n} sites has {k} blocks with {m} singletons"),
        ));
    }
    Ok(())
}

/// `2^{n+m-2k+1}` (general) or `2^{n-2k+1}` (anticommuting observables).
pub fn quadratic_bound(n: usize, k: usize, m: usize, mode: Mode) -> Result<Pow2> {
    check_profile(n, k, m)?;
    let (n, k, m) = (n as i32, k as i32, m as i32);
    Ok(match mode {
        Mode::General => Pow2::from_exponent(n + m - 2 * k + 1),
        Mode::Anticommute => Pow2::from_exponent(n - 2 * k + 1),
    })
}

/// Largest quadratic bound over profiles with at least two blocks:
/// `2^{n-2}` for `n ≥ 3`, or `2^{n-3}` for anticommuting observables and
/// `n ≥ 2`.
///
/// At `n = 2` in anticommute mode the value `2^{-1}` is the bound of the
/// only two-block partition; it is returned as the formula gives it.
pub fn full_entanglement_threshold(n: usize, mode: Mode) -> Result<Pow2> {
    let n_i = n as i32;
    match mode {
        Mode::General if (3..=62).contains(&n) => Ok(Pow2::from_exponent(n_i - 2)),
        Mode::Anticommute if (2..=62).contains(&n) => Ok(Pow2::from_exponent(n_i - 3)),
        Mode::General => Err(Error::invalid("n", "general-mode threshold needs 3 ≤ n ≤ 62")),
        Mode::Anticommute => Err(Error::invalid("n", "anticommute threshold needs 2 ≤ n ≤ 62")),
    }
}

/// `|<B>| ≤ 2^{(n+m-2k+1)/2}` for `k < n`, and `1` for `k = n`.
pub fn linear_bound(n: usize, k: usize, m: usize) -> Result<Pow2> {
    check_profile(n, k, m)?;
    if k == n {
        return Ok(Pow2::from_exponent(0));
    }
    let (n, k, m) = (n as i32, k as i32, m as i32);
    Ok(Pow2::from_half_exponent(n + m - 2 * k + 1))
}

/// Named special cases of the linear bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialCase {
    /// `m` leading singletons and one block with the rest:
    /// `2^{(n-m-1)/2}`, `0 ≤ m ≤ n − 1`.
    Gisin { m: usize },
    /// Any k-block partition, maximised over `m`: `2^{(n-k)/2}`, `1 ≤ k ≤ n`.
    WernerWolf { k: usize },
}

pub fn special_case_bound(n: usize, form: SpecialCase) -> Result<Pow2> {
    if n == 0 || n > 62 {
        return Err(Error::invalid("n", "must be between 1 and 62"));
    }
    let n_i = n as i32;
    match form {
        SpecialCase::Gisin { m } => {
            if m >= n {
                return Err(Error::invalid("m", format!("needs m ≤ n − 1 = {}", n - 1)));
            }
            Ok(Pow2::from_half_exponent(n_i - m as i32 - 1))
        }
        SpecialCase::WernerWolf { k } => {
            if k == 0 || k > n {
                return Err(Error::invalid("k", format!("needs 1 ≤ k ≤ {n}")));
            }
            Ok(Pow2::from_half_exponent(n_i - k as i32))
        }
    }
}

/// Measured `<B>` and `<B'>` with the assumptions under which to judge them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessInput {
    pub n: usize,
    pub b: Estimate,
    pub b_prime: Estimate,
    pub anticommute_assumed: bool,
    pub hypothesis: Option<PartitionProfile>,
}

/// Slack added to every threshold comparison so that values equal to a
/// bound up to rounding are not reported as violations.
pub const COMPARISON_SLACK: f64 = 1e-9;

pub const DEFAULT_Z: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessVerdict {
    pub n: usize,
    pub mode: Mode,
    pub b: Estimate,
    pub b_prime: Estimate,
    /// `<B>^2 + <B'>^2`.
    pub lhs_quadratic: f64,
    /// Propagated standard error of `lhs_quadratic`.
    pub lhs_se: f64,
    pub z: f64,
    pub thresholds: BTreeMap<String, f64>,
    /// Profiles whose bound lies below `lhs − z·se`.
    pub excluded: Vec<PartitionProfile>,
    pub full_entanglement_detected: bool,
    /// Set when a hypothesis profile was supplied: whether the data rule it out.
    pub hypothesis_rejected: Option<bool>,
}

fn exceeds(lower_confidence: f64, bound: f64) -> bool {
    lower_confidence > bound + COMPARISON_SLACK
}

/// Judge measured `<B>`, `<B'>` against every bound.
///
/// `lhs = b² + b'²` with standard error `2·sqrt(b² se_b² + b'² se_b'²)`; a
/// bound counts as violated when `lhs − z·se` exceeds it.
pub fn evaluate_witness(input: &WitnessInput, z: f64) -> Result<WitnessVerdict> {
    if input.n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::invalid("z", "must be a finite nonnegative number"));
    }
    for (field, est) in [("b", input.b), ("b_prime", input.b_prime)] {
        if !est.value.is_finite() || !(est.se >= 0.0) || !est.se.is_finite() {
            return Err(Error::invalid(field, "value must be finite and se nonnegative"));
        }
    }
    let mode = Mode::from_flag(input.anticommute_assumed);
    let (b, bp) = (input.b, input.b_prime);
    let lhs = b.value * b.value + bp.value * bp.value;
    let lhs_se = 2.0 * (b.value * b.value * b.se * b.se + bp.value * bp.value * bp.se * bp.se).sqrt();
    let lower = lhs - z * lhs_se;

    let mut thresholds = BTreeMap::new();
    if let Ok(t) = full_entanglement_threshold(input.n, Mode::General) {
        thresholds.insert("full_entanglement_general".to_string(), t.value());
    }
    if let Ok(t) = full_entanglement_threshold(input.n, Mode::Anticommute) {
        thresholds.insert("full_entanglement_anticommute".to_string(), t.value());
    }
    let detected = match full_entanglement_threshold(input.n, mode) {
        Ok(t) => exceeds(lower, t.value()),
        Err(_) => false,
    };

    let excluded = if input.n <= 62 {
        PartitionProfile::all(input.n)
            .into_iter()
            .filter(|p| {
                let bound = quadratic_bound(input.n, p.k, p.m, mode).expect("enumerated profile");
                exceeds(lower, bound.value())
            })
            .collect()
    } else {
        Vec::new()
    };

    let hypothesis_rejected = match input.hypothesis {
        Some(p) => {
            let bound = quadratic_bound(input.n, p.k, p.m, mode)?;
            thresholds.insert(format!("hypothesis_k{}_m{}", p.k, p.m), bound.value());
            Some(exceeds(lower, bound.value()))
        }
        None => None,
    };

    Ok(WitnessVerdict {
        n: input.n,
        mode,
        b,
        b_prime: bp,
        lhs_quadratic: lhs,
        lhs_se,
        z,
        thresholds,
        excluded,
        full_entanglement_detected: detected,
        hypothesis_rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: usize, k: usize, m: usize, mode: Mode) -> f64 {
        quadratic_bound(n, k, m, mode).unwrap().value()
    }

    #[test]
    fn quadratic_examples() {
        assert_eq!(q(3, 2, 1, Mode::General), 2.0);
        assert_eq!(q(3, 2, 1, Mode::Anticommute), 1.0);
        for n in 1..=12 {
            assert_eq!(q(n, n, n, Mode::General), 2.0);
        }
    }

    #[test]
    fn inconsistent_profiles_rejected() {
        assert!(quadratic_bound(3, 4, 0, Mode::General).is_err());
        assert!(quadratic_bound(3, 2, 2, Mode::General).is_err());
        assert!(quadratic_bound(4, 3, 0, Mode::General).is_err());
        assert!(quadratic_bound(3, 0, 0, Mode::General).is_err());
        assert!(linear_bound(4, 2, 2).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(full_entanglement_threshold(3, Mode::General).unwrap().value(), 2.0);
        assert_eq!(full_entanglement_threshold(3, Mode::Anticommute).unwrap().value(), 1.0);
        assert_eq!(full_entanglement_threshold(4, Mode::General).unwrap().value(), 4.0);
        assert_eq!(full_entanglement_threshold(2, Mode::Anticommute).unwrap().value(), 0.5);
        assert!(full_entanglement_threshold(2, Mode::General).is_err());
        assert!(full_entanglement_threshold(1, Mode::Anticommute).is_err());
    }

    #[test]
    fn collins_values() {
        assert!((linear_bound(4, 3, 2).unwrap().value() - SQRT_2).abs() < 1e-15);
        assert!((linear_bound(4, 2, 0).unwrap().value() - SQRT_2).abs() < 1e-15);
        assert_eq!(linear_bound(4, 2, 1).unwrap().value(), 2.0);
        for n in 1..=12 {
            assert_eq!(linear_bound(n, n, n).unwrap().value(), 1.0);
        }
    }

    #[test]
    fn special_cases() {
        let gisin = special_case_bound(3, SpecialCase::Gisin { m: 1 }).unwrap();
        assert!((gisin.value() - SQRT_2).abs() < 1e-15);
        let ww = special_case_bound(3, SpecialCase::WernerWolf { k: 2 }).unwrap();
        assert!((ww.value() - SQRT_2).abs() < 1e-15);
        assert_eq!(special_case_bound(3, SpecialCase::Gisin { m: 0 }).unwrap().value(), 2.0);
        assert!(special_case_bound(3, SpecialCase::Gisin { m: 3 }).is_err());
        assert!(special_case_bound(3, SpecialCase::WernerWolf { k: 0 }).is_err());
    }

    #[test]
    fn pow2_display_and_value() {
        assert_eq!(Pow2::from_half_exponent(3).to_string(), "2^(3/2)");
        assert_eq!(Pow2::from_exponent(-2).to_string(), "2^-2");
        assert_eq!(Pow2::from_exponent(-2).value(), 0.25);
        assert!((Pow2::from_half_exponent(-1).value() - 1.0 / SQRT_2).abs() < 1e-15);
        assert_eq!(Pow2::from_half_exponent(3).squared(), Pow2::from_exponent(3));
    }

    fn input(n: usize, b: f64, bp: f64, anticommute: bool) -> WitnessInput {
        WitnessInput {
            n,
            b: Estimate::exact(b),
            b_prime: Estimate::exact(bp),
            anticommute_assumed: anticommute,
            hypothesis: None,
        }
    }

    #[test]
    fn noiseless_ghz_detected() {
        let v = evaluate_witness(&input(3, 2.0, 0.0, false), 3.0).unwrap();
        assert_eq!(v.lhs_quadratic, 4.0);
        assert!(v.full_entanglement_detected);
        // everything except the fully entangled profile is ruled out
        assert_eq!(v.excluded.len(), PartitionProfile::all(3).len() - 1);
    }

    #[test]
    fn noisy_ghz_window() {
        // x = 0.6: lhs = 4 · 0.36
        let b = (1.44f64).sqrt();
        let general = evaluate_witness(&input(3, b, 0.0, false), 3.0).unwrap();
        assert!(!general.full_entanglement_detected);
        let anti = evaluate_witness(&input(3, b, 0.0, true), 3.0).unwrap();
        assert!(anti.full_entanglement_detected);
    }

    #[test]
    fn zero_input_excludes_nothing() {
        let v = evaluate_witness(&input(4, 0.0, 0.0, false), 3.0).unwrap();
        assert!(v.excluded.is_empty());
        assert!(!v.full_entanglement_detected);
    }

    #[test]
    fn standard_error_reduces_confidence() {
        let mut inp = input(3, 1.5, 0.0, false);
        assert!(evaluate_witness(&inp, 3.0).unwrap().full_entanglement_detected);
        inp.b.se = 0.1; // lhs 2.25, se 0.3, lower bound 1.35
        let v = evaluate_witness(&inp, 3.0).unwrap();
        assert!((v.lhs_se - 0.3).abs() < 1e-12);
        assert!(!v.full_entanglement_detected);
    }

    #[test]
    fn hypothesis_mode() {
        let mut inp = input(3, 1.5, 0.0, false);
        inp.hypothesis = Some(PartitionProfile { k: 2, m: 1 });
        let v = evaluate_witness(&inp, 0.0).unwrap();
        assert_eq!(v.hypothesis_rejected, Some(true));
        assert_eq!(v.thresholds["hypothesis_k2_m1"], 2.0);
    }
}
