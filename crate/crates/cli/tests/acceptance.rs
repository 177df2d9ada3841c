//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs with `cargo test --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use assassin_core::analytics::{
    check_moment_order, classify_stability, extinction_profile, gamma_exponent, laplace_profile,
    mean_n, moment_n, moment_threshold, second_moment_n, third_moment_n, FixedPointOptions,
    Verdict,
};
use assassin_core::ba::{sample_many, RootCondition};
use assassin_core::rumor::{sample_n_n_distribution, RumorConfig};
use assassin_core::stats::{
    extinction_frequency, jitter, ks_two_sample, summarize, HillTable,
};
use assassin_core::{CensorPolicy, Error, KillingDist, ModelParams, SeedSpec};
use rand::Rng;

/// Hill window (number of upper order statistics) for the tail criterion.
const HILL_WINDOW: (usize, usize) = (100, 1000);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn generous() -> CensorPolicy {
    CensorPolicy::generous()
}

fn n_born(lambda: f64, root: RootCondition, seed: u64, replicas: u64) -> Vec<f64> {
    let params = ModelParams::unit(lambda).unwrap();
    sample_many(&params, root, &generous(), seed, replicas)
        .unwrap()
        .iter()
        .map(|o| o.n_born as f64)
        .collect()
}

fn mean_progeny() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, lambda) in [0.1, 0.15, 0.2].into_iter().enumerate() {
        let start = Instant::now();
        let xs = n_born(lambda, RootCondition::Free, 101 + i as u64, 100_000);
        let secs = start.elapsed().as_secs_f64();
        let s = summarize(&xs, 0).unwrap();
        let target = mean_n(lambda).unwrap();
        let z = (s.mean - target) / s.stderr;
        pass &= z.abs() <= 3.0 && secs <= 60.0;
        parts.push(format!("lambda {lambda}: z = {z:+.2} in {secs:.2}s"));
    }
    outcome(pass, parts.join("; "))
}

fn second_moment() -> Outcome {
    let target = second_moment_n(0.15).unwrap();
    let literal = 2.0 / (3.0 * 0.4f64.sqrt() - 1.0);
    let xs = n_born(0.15, RootCondition::Free, 202, 100_000);
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let s = summarize(&sq, 0).unwrap();
    let z = (s.mean - target) / s.stderr;
    outcome(
        z.abs() <= 3.0 && (target - literal).abs() < 1e-14 && check_moment_order(0.15, 4).is_ok(),
        format!("E N^2 = {target:.6}, MC {:.6} +- {:.6}, z = {z:+.2}", s.mean, s.stderr),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn moment_recursion() -> Outcome {
    let closed: [fn(f64) -> assassin_core::Result<f64>; 3] = [mean_n, second_moment_n, third_moment_n];
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (idx, f) in closed.iter().enumerate() {
        let p = idx + 1;
        let thr = moment_threshold(p);
        for i in 1..=20 {
            let lambda = thr * i as f64 / 21.0;
            let (a, b) = (moment_n(lambda, p).unwrap(), f(lambda).unwrap());
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
            pass &= close(a, b);
        }
    }
    let mut high = Vec::new();
    for p in 4..=6 {
        let thr = moment_threshold(p);
        let vals: Vec<f64> = (1..=20)
            .map(|i| moment_n(thr * i as f64 / 21.0, p).unwrap())
            .collect();
        pass &= vals.windows(2).all(|w| w[1] > w[0]);
        let edge = moment_n(thr * (1.0 - 1e-6), p).unwrap();
        pass &= edge > 1e3;
        high.push(format!("p={p}: {edge:.3e}"));
    }
    outcome(
        pass,
        format!(
            "max relative gap to closed forms {worst:.1e}; near-threshold values {}",
            high.join(", ")
        ),
    )
}

fn moment_dichotomy() -> Outcome {
    let mut pass = true;
    let mut checked = 0;
    for p in 2..=6 {
        let thr = moment_threshold(p);
        let below = f64::from_bits(thr.to_bits() - 1);
        let above = f64::from_bits(thr.to_bits() + 1);
        let mut probes = vec![thr, below, above, thr * 0.5, thr * 1.5, thr * (1.0 - 1e-9)];
        probes.extend((1..=10).map(|i| thr * i as f64 / 5.0));
        for lambda in probes {
            // the reported order is the smallest infinite one, possibly below p
            let infinite = matches!(
                moment_n(lambda, p),
                Err(Error::InfiniteMoment { order, .. }) if order <= p
            );
            let finite = matches!(moment_n(lambda, p), Ok(v) if v.is_finite());
            let want_infinite = lambda >= thr;
            pass &= if want_infinite { infinite } else { finite };
            checked += 1;
        }
    }
    outcome(pass, format!("{checked} probes around p/(p+1)^2 for p = 2..6"))
}

fn window_median(table: &HillTable) -> f64 {
    let (a, b) = HILL_WINDOW;
    let mut g: Vec<f64> = (a..=b).map(|k| table.gamma_at(k).unwrap()).collect();
    g.sort_by(f64::total_cmp);
    g[g.len() / 2]
}

fn tail_exponent() -> Outcome {
    let start = Instant::now();
    let gamma = gamma_exponent(0.2).unwrap();
    let params = ModelParams::unit(0.2).unwrap();
    let caps = CensorPolicy::new(1_000_000, 1e4).unwrap();
    let out = sample_many(&params, RootCondition::Free, &caps, 505, 1_000_000).unwrap();
    let censored = out.iter().filter(|o| o.censored).count();
    let xs: Vec<f64> = out.iter().map(|o| o.n_born as f64).collect();
    let xs = jitter(&xs, &mut SeedSpec::new(505, 1).rng());
    let est = window_median(&HillTable::new(&xs).unwrap());

    let mut rng = SeedSpec::new(506, 0).rng();
    let pareto: Vec<f64> = (0..1_000_000)
        .map(|_| (1.0 - rng.random::<f64>()).powf(-0.5))
        .collect();
    let est_pareto = window_median(&HillTable::new(&pareto).unwrap());
    let secs = start.elapsed().as_secs_f64();

    let rel = est / gamma - 1.0;
    let rel_p = est_pareto / 2.0 - 1.0;
    outcome(
        rel.abs() <= 0.15 && rel_p.abs() <= 0.05 && secs <= 600.0,
        format!(
            "median Hill over k in [{}, {}]: {est:.4} vs {gamma:.6} ({:+.1}%), Pareto(2) {est_pareto:.4} \
             ({:+.1}%), {censored} censored, {secs:.1}s",
            HILL_WINDOW.0,
            HILL_WINDOW.1,
            100.0 * rel,
            100.0 * rel_p
        ),
    )
}

fn extinction_fixed_point() -> Outcome {
    let opts = FixedPointOptions::default();
    let sub = extinction_profile(0.2, &opts).unwrap();
    let dev = sub.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let sup = extinction_profile(0.3, &opts).unwrap();
    let policy = generous();
    let outcomes = sample_many(
        &ModelParams::unit(0.3).unwrap(),
        RootCondition::Free,
        &policy,
        606,
        100_000,
    )
    .unwrap();
    let freq = extinction_frequency(&outcomes, &policy).unwrap();
    let analytic = 1.0 - sup.values[0];
    let z = (analytic - freq.survived_fraction) / freq.stderr;
    outcome(
        dev <= 1e-6 && z.abs() < 3.0,
        format!(
            "lambda 0.2: max |pi - 1| = {dev:.1e}; lambda 0.3: 1 - pi(0) = {analytic:.6}, MC {:.6} +- {:.6}, z = {z:+.2}",
            freq.survived_fraction, freq.stderr
        ),
    )
}

fn laplace_fixed_point() -> Outcome {
    let opts = FixedPointOptions::default();
    let value = laplace_profile(0.2, 1.0, &opts).unwrap().eval(1.0);
    let xs = n_born(0.2, RootCondition::DiesAt(1.0), 707, 100_000);
    let w: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
    let s = summarize(&w, 0).unwrap();
    let z = (s.mean - value) / s.stderr;
    let zero = laplace_profile(0.2, 0.0, &opts).unwrap();
    let mut anchor_err = zero.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    for theta in [0.5, 1.0, 2.0] {
        let l = laplace_profile(0.2, theta, &opts).unwrap();
        anchor_err = anchor_err.max((l.values[0] - (-theta).exp()).abs());
    }
    outcome(
        z.abs() <= 3.0 && anchor_err <= 1e-10,
        format!(
            "L = {value:.6}, MC {:.6} +- {:.6}, z = {z:+.2}; anchor error {anchor_err:.1e}",
            s.mean, s.stderr
        ),
    )
}

fn stability_classifier() -> Outcome {
    let mut pass = true;
    let mut n = 0;
    for mu in [0.5, 1.0, 2.0, 4.0] {
        let k = KillingDist::exponential(mu).unwrap();
        let edge = mu / 4.0;
        let probes = [
            edge,
            f64::from_bits(edge.to_bits() - 1),
            f64::from_bits(edge.to_bits() + 1),
            edge * 0.5,
            edge * 0.99,
            edge * 1.01,
            edge * 3.0,
        ];
        for lambda in probes {
            let v = classify_stability(lambda, &k).unwrap().verdict;
            let want = if 4.0 * lambda <= mu {
                Verdict::Stable
            } else {
                Verdict::Unstable
            };
            pass &= v == want;
            n += 1;
        }
    }
    let det = KillingDist::deterministic(1.0).unwrap();
    let mut worst: f64 = 0.0;
    for lambda in [0.05, 0.1, 0.2, 0.3, 0.36, 0.4, 0.5] {
        let v = classify_stability(lambda, &det).unwrap();
        let want = lambda * std::f64::consts::E;
        worst = worst.max((v.criterion_value - want).abs());
        pass &= (v.criterion_value - want).abs() <= 1e-9;
        let expected = if lambda < 1.0 / std::f64::consts::E {
            Verdict::Stable
        } else {
            Verdict::Unstable
        };
        pass &= v.verdict == expected;
    }
    outcome(
        pass,
        format!("{n} exponential probes; deterministic max |criterion - lambda e| = {worst:.1e}"),
    )
}

fn finite_n_convergence() -> Outcome {
    let policy = CensorPolicy::new(1_000_000_000, 1e12).unwrap();
    let lambda = 0.2;
    let d2000 = sample_n_n_distribution(&RumorConfig::complete(2000, lambda), 10_000, &policy, 909, None)
        .unwrap()
        .as_f64();
    let reference = n_born(lambda, RootCondition::Free, 910, 10_000);
    let ks = ks_two_sample(&d2000, &reference).unwrap();

    // trend: one large B&A reference, rumor streams shared across n
    let replicas = 1_000_000;
    let big_ref = n_born(lambda, RootCondition::Free, 911, replicas);
    let ns = [100usize, 400, 1600];
    let dists: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let d = sample_n_n_distribution(&RumorConfig::complete(n, lambda), replicas, &policy, 912, None)
                .unwrap()
                .as_f64();
            ks_two_sample(&d, &big_ref).unwrap().distance
        })
        .collect();
    let inversions = dists.windows(2).filter(|w| w[1] > w[0]).count();
    outcome(
        !ks.rejects() && dists[0] > dists[2] && inversions <= 1,
        format!(
            "n=2000: D = {:.4} < {:.4}; D(100, 400, 1600) at 1e6 replicas = {:.5}, {:.5}, {:.5}",
            ks.distance, ks.critical_1pct, dists[0], dists[1], dists[2]
        ),
    )
}

fn supercritical_lower_bound() -> Outcome {
    let policy = CensorPolicy::new(1_000_000_000, 1e12).unwrap();
    let replicas = 100_000u64;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [200usize, 400, 800] {
        let d = sample_n_n_distribution(&RumorConfig::complete(n, 0.5), replicas, &policy, 1010, None).unwrap();
        let p = d.tail_fraction(0.05 * n as f64);
        let se = (p * (1.0 - p) / replicas as f64).sqrt();
        pass &= p >= 0.1;
        parts.push(format!("n={n}: {p:.4} +- {se:.4}"));
    }
    let survival = 1.0 - extinction_profile(0.5, &FixedPointOptions::default()).unwrap().values[0];
    outcome(
        pass,
        format!(
            "P(N_n >= 0.05 n) {} (threshold 0.1; B&A survival probability {survival:.4})",
            parts.join(", ")
        ),
    )
}

fn two_vertex_oracle() -> Outcome {
    let policy = CensorPolicy::new(1_000_000_000, 1e12).unwrap();
    let d = sample_n_n_distribution(&RumorConfig::complete(2, 0.5), 100_000, &policy, 1111, None).unwrap();
    let s = summarize(&d.as_f64(), d.censored_count).unwrap();
    // recovery of vertex 1 competes with infection of vertex 2 at rate lambda / 2
    let exact = (1.0 + 0.5) / (1.0 + 0.25);
    let z = (s.mean - exact) / s.stderr;
    outcome(
        z.abs() <= 3.0,
        format!("E N_2 = {exact}, MC {:.5} +- {:.5}, z = {z:+.2}", s.mean, s.stderr),
    )
}

fn run_cli(threads: &str, args: &[&str], out: &Path) -> Result<(Vec<u8>, serde_json::Value), String> {
    let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    full.push("--out".into());
    full.push(out.to_string_lossy().into_owned());
    let o = Command::new(env!("CARGO_BIN_EXE_assassin-sim"))
        .env("ASSASSIN_SIM_THREADS", threads)
        .args(&full)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    let body = std::fs::read(out).map_err(|e| e.to_string())?;
    let mut mpath = out.as_os_str().to_owned();
    mpath.push(".manifest.json");
    let text = std::fs::read_to_string(&mpath).map_err(|e| e.to_string())?;
    let mut m: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let obj = m.as_object_mut().ok_or("manifest is not an object")?;
    obj.remove("wall_time_secs");
    obj.remove("args");
    if let Some(p) = obj.get_mut("parameters") {
        p["out"] = serde_json::Value::Null;
    }
    Ok((body, m))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["ba-sample", "--lambda", "0.22", "--replicas", "20000", "--seed", "12"],
        vec!["ba-sample", "--lambda", "0.2", "--replicas", "2000", "--format", "json", "--root", "at-risk-at=1"],
        vec!["moments", "--lambda", "0.1", "--p", "6"],
        vec!["moments", "--lambda", "0.1", "--p", "3", "--mode", "mc", "--replicas", "20000"],
        vec!["tail", "--lambda", "0.2", "--replicas", "50000", "--k-range", "10:500:10"],
        vec!["stability", "--lambda", "0.3", "--killing", "gamma:2,3"],
        vec!["extinction", "--lambda", "0.3", "--mc-replicas", "5000", "--step", "0.02"],
        vec!["laplace", "--lambda", "0.2", "--theta", "1", "--t", "1", "--mc-replicas", "5000"],
        vec!["rumor-sample", "--n", "500", "--lambda", "0.7", "--replicas", "3000", "--seed", "3"],
        vec!["rumor-sample", "--n", "50", "--lambda", "0.3", "--init", "full-blame", "--force-root-recovery", "1.5"],
        vec!["converge", "--lambda", "0.2", "--n-list", "50,100", "--replicas", "3000"],
        vec!["converge", "--lambda", "0.5", "--n-list", "50,100", "--replicas", "3000"],
    ];
    let mut failures = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let mut runs = Vec::new();
        for (j, threads) in ["1", "1", "4", "0"].iter().enumerate() {
            match run_cli(threads, case, &dir.path().join(format!("{i}-{j}.out"))) {
                Ok(r) => runs.push(r),
                Err(e) => failures.push(e),
            }
        }
        if runs.len() == 4 && runs.iter().any(|r| r != &runs[0]) {
            failures.push(format!("{} differs", case[0]));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} invocations x 4 runs (workers 1, 1, 4, auto) byte-identical", cases.len())
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    // libtest flags such as --nocapture are irrelevant here; `--list` must print nothing
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("mean progeny vs closed form", mean_progeny),
        ("second moment at lambda 0.15", second_moment),
        ("moment recursion vs closed forms", moment_recursion),
        ("moment-threshold dichotomy", moment_dichotomy),
        ("tail exponent by Hill", tail_exponent),
        ("extinction fixed point", extinction_fixed_point),
        ("Laplace fixed point", laplace_fixed_point),
        ("stability classifier", stability_classifier),
        ("finite-n convergence", finite_n_convergence),
        ("supercritical lower bound", supercritical_lower_bound),
        ("two-vertex exact oracle", two_vertex_oracle),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{tag}] {name}: {} ({:.1}s)",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
