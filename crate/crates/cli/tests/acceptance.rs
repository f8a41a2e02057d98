//! Acceptance suite: one PASS/FAIL line per criterion, each with its
//! runtime. Exits non-zero when any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bellmark::bell::{self, BellPair, CorrelatorCoefficients, MeasurementSetup};
use bellmark::bounds::{self, Mode, SpecialCase};
use bellmark::optimize::{self, OptimizeOptions};
use bellmark::random;
use bellmark::states::{self, Partition, PartitionProfile};
use bellmark::verify;
use rand::Rng;
use serde_json::Value;

struct Verdict {
    ok: bool,
    detail: String,
    notes: Vec<String>,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Verdict {
            ok,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }
}

fn run(name: &str, limit: Option<Duration>, check: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let verdict = check();
    let took = start.elapsed();
    let in_time = limit.is_none_or(|l| took <= l);
    let ok = verdict.ok && in_time;
    let limit_text = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs_f64()));
    println!(
        "{} {name}: {}; {:.2}s{limit_text}",
        if ok { "PASS" } else { "FAIL" },
        verdict.detail,
        took.as_secs_f64()
    );
    for note in verdict.notes {
        println!("     note: {note}");
    }
    ok
}

fn bound_tables() -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    for n in 1..=12usize {
        for k in 1..=n {
            for m in 0..=k {
                if !(PartitionProfile { k, m }).is_realizable(n) {
                    continue;
                }
                checked += 1;
                let e = n as i32 + m as i32 - 2 * k as i32 + 1;
                let q = bounds::quadratic_bound(n, k, m, Mode::General).unwrap();
                let qa = bounds::quadratic_bound(n, k, m, Mode::Anticommute).unwrap();
                let l = bounds::linear_bound(n, k, m).unwrap();
                let want_lin = if k == n { 0 } else { e };
                if q.half_exponent() != 2 * e
                    || q.value() != 2f64.powi(e)
                    || qa.value() != 2f64.powi(n as i32 - 2 * k as i32 + 1)
                    || l.half_exponent() != want_lin
                {
                    bad.push(format!("({n},{k},{m})"));
                }
            }
        }
        for m in 0..n {
            let g = bounds::special_case_bound(n, SpecialCase::Gisin { m }).unwrap();
            if g.half_exponent() != n as i32 - m as i32 - 1 {
                bad.push(format!("gisin n={n} m={m}"));
            }
        }
        for k in 1..=n {
            let w = bounds::special_case_bound(n, SpecialCase::WernerWolf { k }).unwrap();
            if w.half_exponent() != n as i32 - k as i32 {
                bad.push(format!("werner-wolf n={n} k={k}"));
            }
        }
        if bounds::linear_bound(n, n, n).unwrap().value() != 1.0 {
            bad.push(format!("k=n at n={n}"));
        }
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let collins: Vec<f64> = [vec![vec![1, 2], vec![3, 4]], vec![vec![1], vec![2, 3, 4]], vec![vec![1], vec![2], vec![3, 4]]]
        .iter()
        .map(|blocks| {
            let p = Partition::from_one_based(4, blocks).unwrap().profile();
            bounds::linear_bound(4, p.k, p.m).unwrap().value()
        })
        .collect();
    let mut expected = [sqrt2, 2.0, sqrt2];
    let mut got = collins.clone();
    got.sort_by(f64::total_cmp);
    expected.sort_by(f64::total_cmp);
    if got != expected {
        bad.push(format!("four-site values {collins:?}"));
    }
    Verdict::new(
        bad.is_empty(),
        format!("{checked} profiles n ≤ 12, four-site values {collins:?}, mismatches {bad:?}"),
    )
}

fn lemma_suite() -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for dims in [(2, 2), (2, 3), (3, 3), (3, 4)] {
        let r = verify::verify_lemma(10_000, dims, 2024).unwrap();
        worst = worst.max(r.max_lhs);
        violations += r.violations.len();
    }
    Verdict::new(
        violations == 0,
        format!("4 × 10^4 trials, max <Y>²+<Y'>² = {worst:.9} ≤ 2, violations {violations}"),
    )
}

fn separable_suite() -> Verdict {
    let mut violations = 0;
    let mut reports = 0;
    let mut tightest = f64::INFINITY;
    for n in [3, 4] {
        for p in Partition::enumerate(n) {
            for mode in [Mode::General, Mode::Anticommute] {
                let r = verify::verify_separability_bound(&p, &vec![2; n], 10_000, 3, mode, 77).unwrap();
                violations += r.violations.len();
                tightest = tightest.min(r.margin);
                reports += 1;
            }
        }
    }
    Verdict::new(
        violations == 0,
        format!("{reports} partition/mode runs × 10^4 states, smallest margin {tightest:.3e}, violations {violations}"),
    )
}

fn tightness() -> Verdict {
    let mut rows = 0;
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for n in 1..=6 {
        let report = verify::verify_tightness(n).unwrap();
        for r in &report.rows {
            rows += 1;
            worst = worst.max((r.lhs - r.quadratic_bound).abs());
            if !r.saturated {
                failed.push(format!("{:?}", r.partition));
            }
        }
    }
    Verdict::new(
        failed.is_empty() && worst <= 1e-8,
        format!("{rows} partitions n ≤ 6, max |lhs − bound| = {worst:.2e}, unsaturated {failed:?}"),
    )
}

fn random_bracketing(setup: &MeasurementSetup, order: &[usize], rng: &mut random::StreamRng) -> BellPair {
    if order.len() == 1 {
        return bell::build_direct(setup, order).unwrap();
    }
    let split = rng.random_range(1..order.len());
    let l = random_bracketing(setup, &order[..split], rng);
    let r = random_bracketing(setup, &order[split..], rng);
    bell::build_recursive(&l, &r).unwrap()
}

fn route_equivalence() -> Verdict {
    let mut worst = 0.0f64;
    for n in 2..=5usize {
        let coeffs = CorrelatorCoefficients::new(n).unwrap();
        for t in 0..100 {
            let mut rng = random::stream_rng(9000 + n as u64, t);
            let dims: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
            let setup = verify::random_setup(&dims, false, &mut rng).unwrap();
            let order: Vec<usize> = (0..n).collect();
            let direct = bell::build_direct(&setup, &order).unwrap();
            let chain = bell::build_recursive_chain(&setup, &order).unwrap();
            let tree = random_bracketing(&setup, &order, &mut rng);
            let expansion = coeffs.assemble(&setup).unwrap();
            for other in [&chain, &tree, &expansion] {
                worst = worst.max(direct.max_abs_diff(other));
            }
        }
    }
    Verdict::new(worst <= 1e-9, format!("400 setups, max entrywise gap {worst:.2e}"))
}

fn ghz_noise_reproduction() -> Verdict {
    let mut worst = 0.0f64;
    for n in [3, 4, 5] {
        for x in [0.25, 0.5, 0.8, 1.0] {
            let rho = states::ghz_noise(n, x).unwrap();
            for anticommute in [false, true] {
                let opts = OptimizeOptions {
                    constrain_anticommute: anticommute,
                    ..OptimizeOptions::default()
                };
                let r = optimize::maximize_qubit_witness(&rho, &opts).unwrap();
                worst = worst.max((r.best_value - 2f64.powi(n as i32 - 1) * x * x).abs());
            }
        }
    }
    let grid = optimize::linear_grid(0.0, 1.0, 0.01).unwrap();
    let opts = OptimizeOptions {
        restarts: 8,
        ..OptimizeOptions::default()
    };
    let rows = optimize::scan_threshold_window(3, true, &grid, &opts).unwrap();
    let anti_only: Vec<f64> = rows
        .iter()
        .filter(|r| r.detected_anticommute == Some(true) && !r.detected_general)
        .map(|r| r.x)
        .collect();
    let expected: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&x| x > 0.5 && x <= std::f64::consts::FRAC_1_SQRT_2)
        .collect();
    let at = |x: f64| rows.iter().find(|r| (r.x - x).abs() < 1e-12).unwrap();
    let half = at(0.5);
    let boundary_ok = half.detected_anticommute == Some(false) && !half.detected_general;
    let r71 = at(0.71);
    let mut verdict = Verdict::new(
        worst <= 1e-6 && anti_only == expected && boundary_ok,
        format!(
            "max |opt − 2^(n-1)x²| = {worst:.2e}; anticommute-only detections x ∈ [{:?} .. {:?}] ({} points); x = 0.5 detected: {}",
            anti_only.first(),
            anti_only.last(),
            anti_only.len(),
            !boundary_ok
        ),
    );
    verdict.notes.push(format!(
        "x = 0.71 gives max lhs {:.4} > 2, detected by 2^(n-2) = {} and by 2^(n-3) = {}: 0.71 lies above 1/√2 ≈ 0.7071, outside the window, so it is not an anticommute-only point",
        r71.max_lhs,
        r71.detected_general,
        r71.detected_anticommute.unwrap_or(false)
    ));
    verdict
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bellmark"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn finite_shot_pipeline(dir: &Path) -> Verdict {
    let corr = dir.join("ghz3_corr.json");
    let verdict_path = dir.join("ghz3_verdict.json");
    let sim = bin()
        .args(["simulate", "--state", r#"{"ghz":{"n":3}}"#, "--setup", "optimal", "--shots", "1000000", "--seed", "11", "--out"])
        .arg(&corr)
        .output()
        .unwrap();
    if !sim.status.success() {
        return Verdict::new(false, format!("simulate failed: {}", String::from_utf8_lossy(&sim.stderr)));
    }
    let eval = bin()
        .args(["witness", "from-data", "--z", "3", "--correlations"])
        .arg(&corr)
        .arg("--out")
        .arg(&verdict_path)
        .output()
        .unwrap();
    if !eval.status.success() {
        return Verdict::new(false, format!("from-data failed: {}", String::from_utf8_lossy(&eval.stderr)));
    }
    let v = read_json(&verdict_path);
    let lhs = v["lhs_quadratic"].as_f64().unwrap();
    let se = v["lhs_se"].as_f64().unwrap();
    let detected = v["full_entanglement_detected"].as_bool().unwrap();
    Verdict::new(
        (lhs - 4.0).abs() <= 5.0 * se && detected,
        format!("lhs = {lhs:.7} ± {se:.2e} ({:.2} se from 4), detected = {detected}", (lhs - 4.0).abs() / se),
    )
}

fn determinism(dir: &Path) -> Verdict {
    let jobs: Vec<(&str, Vec<&str>)> = vec![
        ("simulate", vec!["simulate", "--state", r#"{"ghz_noise":{"n":3,"x":0.7}}"#, "--setup", "optimal", "--shots", "5000", "--seed", "4"]),
        ("optimize", vec!["optimize", "--state", r#"{"ghz_noise":{"n":3,"x":0.7}}"#, "--anticommute", "--seed", "4"]),
        ("scan", vec!["scan", "--n", "3", "--x", "0.4:0.8:0.05", "--anticommute", "--seed", "4"]),
        ("witness eval", vec!["witness", "eval", "--state", r#"{"ghz":{"n":3}}"#, "--setup", "optimal", "--seed", "4"]),
        ("verify lemma", vec!["verify", "lemma", "--trials", "300", "--seed", "4"]),
        ("verify lemma-internals", vec!["verify", "lemma-internals", "--trials", "300", "--seed", "4"]),
        ("verify separable-bound", vec!["verify", "separable-bound", "--n", "3", "--trials", "300", "--seed", "4"]),
        ("verify single-site", vec!["verify", "single-site", "--trials", "300", "--seed", "4"]),
    ];
    let mut differing = Vec::new();
    for (i, (name, args)) in jobs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (run, threads) in [(0, None), (1, None), (2, Some("1"))] {
            let out = dir.join(format!("det_{i}_{run}.json"));
            let mut cmd = bin();
            cmd.args(args).arg("--out").arg(&out);
            if let Some(t) = threads {
                cmd.env("RAYON_NUM_THREADS", t);
            }
            let status = cmd.output().unwrap().status;
            if !status.success() {
                differing.push(format!("{name} exited {status}"));
            }
            outputs.push(fs::read(&out).unwrap_or_default());
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) || outputs[0].is_empty() {
            differing.push(name.to_string());
        }
    }
    Verdict::new(
        differing.is_empty(),
        format!(
            "{} subcommands × 3 runs (one single-threaded), differing {differing:?}",
            jobs.len()
        ),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let secs = Duration::from_secs;
    let results = [
        run("bound tables", Some(secs(1)), bound_tables),
        run("lemma suite", Some(secs(120)), lemma_suite),
        run("separable-bound suite", Some(secs(600)), separable_suite),
        run("tightness", None, tightness),
        run("route equivalence", None, route_equivalence),
        run("GHZ-noise reproduction", Some(secs(300)), ghz_noise_reproduction),
        run("finite-shot pipeline", Some(secs(60)), || finite_shot_pipeline(dir.path())),
        run("determinism", None, || determinism(dir.path())),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
