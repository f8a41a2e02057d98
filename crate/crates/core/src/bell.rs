//! Bell-Mermin operator pairs `(B_α, B'_α)`.
//!
//! Every site carries two dichotomic observables `A_j`, `A'_j`. The pair on a
//! subset `α` is fixed by
//!
//! ```text
//! f(B_α, B'_α) = ⊗_{j∈α} f(A_j, A'_j),    f(x, y) = e^{-iπ/4} (x + i y) / √2
//! ```
//!
//! and can be built three ways which agree exactly: directly from the tensor
//! product above ([`build_direct`]), by the disjoint-union recursion
//! ([`build_recursive`]), or by contracting full correlators with the
//! coefficients of [`CorrelatorCoefficients`].
//!
//! Site indices are 0-based inside the crate; the JSON and CLI layers
//! translate from the 1-based form `{1, …, n}`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, HERMITIAN_TOL};
use crate::measurement::CorrelationRecord;

/// Slack allowed on the `[-1, 1]` spectrum bound.
pub const SPECTRUM_TOL: f64 = 1e-9;
/// `‖{A, A'}‖` below which a site pair counts as anticommuting.
pub const ANTICOMMUTE_TOL: f64 = 1e-9;
pub const MAX_COEFFICIENT_SITES: usize = 30;

/// Hermitian operator on one site with spectrum in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DichotomicObservable {
    matrix: CMatrix,
}

impl DichotomicObservable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::invalid("observable", "non-finite entries"));
        }
        let dev = matrix.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::invalid(
                "observable",
                format!("not Hermitian (deviation {dev:e})"),
            ));
        }
        let matrix = matrix.hermitian_part();
        let spectrum = linalg::hermitian_eigenvalues(&matrix)?;
        let (lo, hi) = (spectrum[0], spectrum[spectrum.len() - 1]);
        if lo < -1.0 - SPECTRUM_TOL || hi > 1.0 + SPECTRUM_TOL {
            return Err(Error::invalid(
                "observable",
                format!("spectrum [{lo}, {hi}] leaves [-1, 1]"),
            ));
        }
        Ok(DichotomicObservable { matrix })
    }

    /// `v · σ` with `|v| ≤ 1`.
    pub fn bloch(v: [f64; 3]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > 1.0 + SPECTRUM_TOL {
            return Err(Error::invalid("bloch", format!("vector norm {norm} exceeds 1")));
        }
        Ok(DichotomicObservable {
            matrix: linalg::bloch(v),
        })
    }

    pub(crate) fn new_unchecked(matrix: CMatrix) -> Self {
        DichotomicObservable { matrix }
    }

    pub fn site_dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// The two observables measured on one site.
#[derive(Clone, Debug, PartialEq)]
pub struct SitePair {
    pub a: DichotomicObservable,
    pub a_prime: DichotomicObservable,
}

impl SitePair {
    pub fn new(a: DichotomicObservable, a_prime: DichotomicObservable) -> Result<Self> {
        if a.site_dim() != a_prime.site_dim() {
            return Err(Error::DimensionMismatch {
                expected: a.site_dim(),
                found: a_prime.site_dim(),
            });
        }
        Ok(SitePair { a, a_prime })
    }

    pub fn dim(&self) -> usize {
        self.a.site_dim()
    }

    pub fn get(&self, primed: bool) -> &CMatrix {
        if primed {
            self.a_prime.matrix()
        } else {
            self.a.matrix()
        }
    }

    /// `‖{A, A'}‖`; zero for an exactly anticommuting pair.
    pub fn anticommutator_norm(&self) -> f64 {
        let ac = self.a.matrix().anticommutator(self.a_prime.matrix());
        linalg::operator_norm(&ac).unwrap_or(f64::INFINITY)
    }
}

/// Per-site observable pairs for an n-site experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetup {
    sites: Vec<SitePair>,
}

impl MeasurementSetup {
    pub fn new(sites: Vec<SitePair>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("sites", "at least one site is required"));
        }
        let dims: Vec<usize> = sites.iter().map(SitePair::dim).collect();
        linalg::total_dim(&dims)?;
        Ok(MeasurementSetup { sites })
    }

    /// Setup whose every pair must anticommute within [`ANTICOMMUTE_TOL`].
    pub fn new_anticommuting(sites: Vec<SitePair>) -> Result<Self> {
        let setup = Self::new(sites)?;
        setup.require_anticommuting()?;
        Ok(setup)
    }

    /// Same pair on every one of `n` sites.
    pub fn uniform(n: usize, pair: SitePair) -> Result<Self> {
        Self::new(vec![pair; n])
    }

    /// Qubit setup from Bloch vectors `(a_j, a'_j)`.
    pub fn from_bloch(vectors: &[([f64; 3], [f64; 3])]) -> Result<Self> {
        let sites = vectors
            .iter()
            .map(|(a, ap)| SitePair::new(DichotomicObservable::bloch(*a)?, DichotomicObservable::bloch(*ap)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites)
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[SitePair] {
        &self.sites
    }

    pub fn site_dims(&self) -> Vec<usize> {
        self.sites.iter().map(SitePair::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.site_dims().iter().product()
    }

    /// Diagnostic `‖{A_j, A'_j}‖` per site.
    pub fn anticommutator_norms(&self) -> Vec<f64> {
        self.sites.iter().map(SitePair::anticommutator_norm).collect()
    }

    pub fn is_anticommuting(&self) -> bool {
        self.anticommutator_norms().iter().all(|&x| x <= ANTICOMMUTE_TOL)
    }

    pub fn require_anticommuting(&self) -> Result<()> {
        for (j, norm) in self.anticommutator_norms().into_iter().enumerate() {
            if norm > ANTICOMMUTE_TOL {
                return Err(Error::invalid(
                    format!("sites[{j}]"),
                    format!("observables do not anticommute (‖{{A,A'}}‖ = {norm:e})"),
                ));
            }
        }
        Ok(())
    }

    /// `⊗_j A_j^{(s_j)}` over all sites.
    pub fn correlator_operator(&self, setting: &Setting) -> Result<CMatrix> {
        if setting.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: setting.n(),
            });
        }
        linalg::tensor_all(
            self.sites
                .iter()
                .enumerate()
                .map(|(j, pair)| pair.get(setting.is_primed(j))),
        )
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::invalid("subset", "must be nonempty"));
        }
        let mut seen = vec![false; self.n()];
        for &j in subset {
            if j >= self.n() {
                return Err(Error::invalid(
                    "subset",
                    format!("site {} out of range 1..={}", j + 1, self.n()),
                ));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::invalid("subset", format!("site {} repeated", j + 1)));
            }
        }
        Ok(())
    }
}

fn f_prefactor() -> Complex64 {
    Complex64::from_polar(FRAC_1_SQRT_2, -FRAC_PI_4)
}

/// `f(x, y) = e^{-iπ/4} (x + i y) / √2`.
pub fn f_combine(x: &CMatrix, y: &CMatrix) -> Result<CMatrix> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let sum = x + &y.scale(c(0.0, 1.0));
    Ok(sum.scale(f_prefactor()))
}

pub fn f_scalar(x: f64, y: f64) -> Complex64 {
    f_prefactor() * c(x, y)
}

/// Inverse of [`f_scalar`]: `x = Re f − Im f`, `y = Re f + Im f`.
pub fn f_scalar_inverse(z: Complex64) -> (f64, f64) {
    (z.re - z.im, z.re + z.im)
}

/// Operator inverse of [`f_combine`]: from `C = f(B, B')` recover
/// `D = √2 e^{iπ/4} C = B + iB'` and split it into Hermitian parts.
pub fn f_inverse(combined: &CMatrix) -> (CMatrix, CMatrix) {
    let d = combined.scale(Complex64::from_polar(SQRT_2, FRAC_PI_4));
    (d.hermitian_part(), d.skew_part())
}

/// Bell-Mermin pair on an ordered subset of sites. The operators act on the
/// tensor product of the subset's sites taken in `subset` order.
#[derive(Clone, Debug, PartialEq)]
pub struct BellPair {
    subset: Vec<usize>,
    b: CMatrix,
    b_prime: CMatrix,
}

impl BellPair {
    /// 0-based site indices, in factor order.
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn b_prime(&self) -> &CMatrix {
        &self.b_prime
    }

    /// `f(B, B')`.
    pub fn combined(&self) -> CMatrix {
        f_combine(&self.b, &self.b_prime).expect("B and B' share a dimension")
    }

    pub fn max_abs_diff(&self, other: &BellPair) -> f64 {
        self.b
            .max_abs_diff(&other.b)
            .max(self.b_prime.max_abs_diff(&other.b_prime))
    }
}

/// Build `(B_α, B'_α)` from `C = ⊗_{j∈α} f(A_j, A'_j)`.
pub fn build_direct(setup: &MeasurementSetup, subset: &[usize]) -> Result<BellPair> {
    setup.check_subset(subset)?;
    let dims: Vec<usize> = subset.iter().map(|&j| setup.sites[j].dim()).collect();
    linalg::total_dim(&dims)?;
    let factors = subset
        .iter()
        .map(|&j| {
            let pair = &setup.sites[j];
            f_combine(pair.a.matrix(), pair.a_prime.matrix())
        })
        .collect::<Result<Vec<_>>>()?;
    let combined = linalg::tensor_all(&factors)?;
    let (b, b_prime) = f_inverse(&combined);
    Ok(BellPair {
        subset: subset.to_vec(),
        b,
        b_prime,
    })
}

/// Pair on the whole system `{1, …, n}`.
pub fn build_full(setup: &MeasurementSetup) -> Result<BellPair> {
    let all: Vec<usize> = (0..setup.n()).collect();
    build_direct(setup, &all)
}

/// Combine pairs on disjoint subsets:
///
/// ```text
/// B_{α∪β}  = ½(B_α B'_β + B'_α B_β) + ½(B_α B_β − B'_α B'_β)
/// B'_{α∪β} = ½(B_α B'_β + B'_α B_β) − ½(B_α B_β − B'_α B'_β)
/// ```
///
/// The result acts on `left` sites followed by `right` sites.
pub fn build_recursive(left: &BellPair, right: &BellPair) -> Result<BellPair> {
    if let Some(j) = left.subset.iter().find(|j| right.subset.contains(j)) {
        return Err(Error::invalid(
            "subset",
            format!("site {} appears in both halves", j + 1),
        ));
    }
    let bb = linalg::tensor(&left.b, &right.b)?;
    let bpbp = linalg::tensor(&left.b_prime, &right.b_prime)?;
    let bbp = linalg::tensor(&left.b, &right.b_prime)?;
    let bpb = linalg::tensor(&left.b_prime, &right.b)?;
    let sym = (&bbp + &bpb).scale_real(0.5);
    let anti = (&bb - &bpbp).scale_real(0.5);
    let mut subset = left.subset.clone();
    subset.extend(&right.subset);
    Ok(BellPair {
        subset,
        b: &sym + &anti,
        b_prime: &sym - &anti,
    })
}

/// Left fold of [`build_recursive`] over single sites.
pub fn build_recursive_chain(setup: &MeasurementSetup, subset: &[usize]) -> Result<BellPair> {
    setup.check_subset(subset)?;
    let mut iter = subset.iter();
    let first = *iter.next().expect("subset checked nonempty");
    let mut acc = build_direct(setup, &[first])?;
    for &j in iter {
        acc = build_recursive(&acc, &build_direct(setup, &[j])?)?;
    }
    Ok(acc)
}

/// Which observable each of `n` sites measures: bit `j` (counted from the
/// left of the string form) set means site `j` measures `A'_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Setting {
    n: usize,
    index: u64,
}

impl Setting {
    pub fn new(n: usize, index: u64) -> Result<Self> {
        if n == 0 || n > 63 || index >> n != 0 {
            return Err(Error::invalid("s", format!("index {index} invalid for {n} sites")));
        }
        Ok(Setting { n, index })
    }

    pub fn from_primed(primed: &[bool]) -> Result<Self> {
        let index = primed.iter().fold(0u64, |acc, &p| (acc << 1) | p as u64);
        Self::new(primed.len(), index)
    }

    /// All `2^n` settings in lexicographic order of the string form.
    pub fn all(n: usize) -> impl Iterator<Item = Setting> {
        (0..1u64 << n).map(move |index| Setting { n, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Position in lexicographic order, `0 ..= 2^n − 1`.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn is_primed(&self, site: usize) -> bool {
        (self.index >> (self.n - 1 - site)) & 1 == 1
    }

    /// Number of primed sites.
    pub fn weight(&self) -> usize {
        self.index.count_ones() as usize
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.n {
            f.write_str(if self.is_primed(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let primed = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid("s", format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_primed(&primed)
    }
}

/// `cos(kπ/4)` and `sin(kπ/4)` from an exact table.
fn eighth_turn(k: i64) -> (f64, f64) {
    const H: f64 = FRAC_1_SQRT_2;
    match k.rem_euclid(8) {
        0 => (1.0, 0.0),
        1 => (H, H),
        2 => (0.0, 1.0),
        3 => (-H, H),
        4 => (-1.0, 0.0),
        5 => (-H, -H),
        6 => (0.0, -1.0),
        _ => (H, -H),
    }
}

/// Coefficients of `B = Σ_s c_s ⊗_j A_j^{(s_j)}` and `B' = Σ_s c'_s ⊗_j A_j^{(s_j)}`.
///
/// Expanding `⊗_j (A_j + iA'_j)` gives
/// `B + iB' = 2^{-(n-1)/2} e^{-iπ(n-1)/4} Σ_s i^{|s|} ⊗_j A_j^{(s_j)}`, so the
/// coefficients depend only on the weight `|s|`:
///
/// ```text
/// c_s  = 2^{-(n-1)/2} cos(π(2|s| − n + 1)/4)
/// c'_s = 2^{-(n-1)/2} sin(π(2|s| − n + 1)/4)
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorCoefficients {
    n: usize,
    by_weight: Vec<(f64, f64)>,
}

impl CorrelatorCoefficients {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_COEFFICIENT_SITES {
            return Err(Error::invalid(
                "n",
                format!("coefficient tables cover 1..={MAX_COEFFICIENT_SITES} sites"),
            ));
        }
        let scale = 2f64.powf(-((n - 1) as f64) / 2.0);
        let by_weight = (0..=n)
            .map(|w| {
                let (cos, sin) = eighth_turn(2 * w as i64 - n as i64 + 1);
                (scale * cos, scale * sin)
            })
            .collect();
        Ok(CorrelatorCoefficients { n, by_weight })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(c, c')` for settings with `weight` primed sites.
    pub fn for_weight(&self, weight: usize) -> (f64, f64) {
        self.by_weight[weight]
    }

    pub fn get(&self, setting: &Setting) -> (f64, f64) {
        self.by_weight[setting.weight()]
    }

    /// Materialised `(s, c_s, c'_s)` table in lexicographic order.
    pub fn table(&self) -> Vec<(Setting, f64, f64)> {
        Setting::all(self.n)
            .map(|s| {
                let (cb, cbp) = self.get(&s);
                (s, cb, cbp)
            })
            .collect()
    }

    /// Assemble `(B, B')` on all sites of `setup` from the expansion.
    pub fn assemble(&self, setup: &MeasurementSetup) -> Result<BellPair> {
        if setup.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: setup.n(),
            });
        }
        let dim = linalg::total_dim(&setup.site_dims())?;
        let mut b = CMatrix::zeros(dim);
        let mut b_prime = CMatrix::zeros(dim);
        for s in Setting::all(self.n) {
            let (cb, cbp) = self.get(&s);
            if cb == 0.0 && cbp == 0.0 {
                continue;
            }
            let op = setup.correlator_operator(&s)?;
            b = &b + &op.scale_real(cb);
            b_prime = &b_prime + &op.scale_real(cbp);
        }
        Ok(BellPair {
            subset: (0..self.n).collect(),
            b,
            b_prime,
        })
    }
}

/// A value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0 }
    }
}

/// `⟨B⟩ = Σ_s c_s E(s)` and `⟨B'⟩ = Σ_s c'_s E(s)` with errors propagated as
/// `sqrt(Σ_s c_s² se(s)²)`.
pub fn evaluate_from_correlations(
    coeffs: &CorrelatorCoefficients,
    data: &CorrelationRecord,
) -> Result<(Estimate, Estimate)> {
    if data.n() != coeffs.n() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.n(),
            found: data.n(),
        });
    }
    let (mut b, mut bp, mut var_b, mut var_bp) = (0.0, 0.0, 0.0, 0.0);
    for s in Setting::all(coeffs.n()) {
        let entry = data.get(&s).ok_or_else(|| Error::IncompleteData {
            missing: s.to_string(),
        })?;
        let (cb, cbp) = coeffs.get(&s);
        b += cb * entry.estimate;
        bp += cbp * entry.estimate;
        var_b += cb * cb * entry.se * entry.se;
        var_bp += cbp * cbp * entry.se * entry.se;
    }
    Ok((
        Estimate { value: b, se: var_b.sqrt() },
        Estimate { value: bp, se: var_bp.sqrt() },
    ))
}
