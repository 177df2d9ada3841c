use std::path::Path;

use assassin_core::analytics::{
    classify_stability, extinction_profile, gamma_exponent, laplace_profile, mean_n, moment_n,
    second_moment_n, third_moment_n, FixedPointOptions, Verdict,
};
use assassin_core::ba::{sample_many, RootCondition};
use assassin_core::rumor::{sample_n_n_distribution, Graph, InitMode, RumorConfig};
use assassin_core::stats::{extinction_frequency, jitter, ks_two_sample, summarize, HillTable};
use assassin_core::{CensorPolicy, Error as CoreError, KillingDist, ModelParams, SeedSpec};
use serde_json::json;

use crate::cli::{
    BaSampleArgs, Caps, ConvergeArgs, ExtinctionArgs, Format, InitArg, LaplaceArgs, MomentMode,
    MomentsArgs, RumorSampleArgs, SolverArgs, StabilityArgs, TailArgs,
};
use crate::error::{usage, CliError};
use crate::output::{fmt_f64, fmt_opt, Table};

/// Seed-family label for the Hill jitter stream.
const JITTER_LABEL: u64 = 0x6a69_7474_6572;

/// What a command produced, before it is written out.
pub struct Report {
    pub body: String,
    pub schema: &'static str,
    pub master_seed: Option<u64>,
    pub replicas: Option<u64>,
    pub summary: serde_json::Value,
    /// Human-readable lines for stderr.
    pub notes: Vec<String>,
}

impl Report {
    fn new(body: String, schema: &'static str) -> Self {
        Self {
            body,
            schema,
            master_seed: None,
            replicas: None,
            summary: json!({}),
            notes: Vec::new(),
        }
    }
}

pub fn parse_root(spec: &str) -> Result<RootCondition, CliError> {
    if spec == "free" {
        return Ok(RootCondition::Free);
    }
    let time = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad time in --root {spec:?}")))
    };
    if let Some(t) = spec.strip_prefix("at-risk-at=") {
        return Ok(RootCondition::AtRiskAt(time(t)?));
    }
    if let Some(t) = spec.strip_prefix("dies-at=") {
        return Ok(RootCondition::DiesAt(time(t)?));
    }
    usage(format!("--root must be free, at-risk-at=T or dies-at=T, got {spec:?}"))
}

pub fn parse_killing(spec: &str) -> Result<KillingDist, CliError> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad number in --killing {spec:?}")))
    };
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("--killing needs KIND:PARAMS, got {spec:?}")))?;
    let dist = match kind {
        "exp" => KillingDist::exponential(num(rest)?)?,
        "det" => KillingDist::deterministic(num(rest)?)?,
        "gamma" => {
            let (s, r) = rest.split_once(',').ok_or_else(|| {
                CliError::Usage(format!("gamma killing needs SHAPE,RATE, got {spec:?}"))
            })?;
            KillingDist::gamma(num(s)?, num(r)?)?
        }
        _ => return usage(format!("unknown killing kind {kind:?}")),
    };
    Ok(dist)
}

/// `FIRST:LAST[:STEP]`, all positive, `FIRST <= LAST`.
pub fn parse_k_range(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("--k-range must be FIRST:LAST[:STEP], got {spec:?}"));
    let parts: Vec<usize> = spec
        .split(':')
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let (first, last, step) = match parts.as_slice() {
        [a, b] => (*a, *b, 1),
        [a, b, s] => (*a, *b, *s),
        _ => return Err(bad()),
    };
    if first == 0 || step == 0 || first > last {
        return Err(bad());
    }
    Ok((first..=last).step_by(step).collect())
}

/// Comma-separated, non-empty, strictly increasing, positive.
pub fn parse_n_list(spec: &str) -> Result<Vec<usize>, CliError> {
    let list: Vec<usize> = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad entry in --n-list {spec:?}")))
        })
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return usage("--n-list is empty");
    }
    if list[0] == 0 || list.windows(2).any(|w| w[0] >= w[1]) {
        return usage(format!("--n-list must be positive and strictly increasing, got {spec:?}"));
    }
    Ok(list)
}

fn need_replicas(replicas: u64, min: u64) -> Result<(), CliError> {
    if replicas < min {
        return usage(format!("--replicas must be at least {min}, got {replicas}"));
    }
    Ok(())
}

fn policy(caps: &Caps) -> Result<CensorPolicy, CliError> {
    Ok(CensorPolicy::new(caps.max_particles, caps.max_time)?)
}

fn solver_options(s: &SolverArgs) -> Result<FixedPointOptions, CliError> {
    if !(s.step > 0.0 && s.step.is_finite()) {
        return usage(format!("--step must be positive, got {}", s.step));
    }
    if !(s.horizon > 0.0 && s.horizon.is_finite()) {
        return usage(format!("--horizon must be positive, got {}", s.horizon));
    }
    if !(s.tol > 0.0) || s.max_iter == 0 {
        return usage("--tol and --max-iter must be positive");
    }
    Ok(FixedPointOptions {
        horizon: s.horizon,
        step: s.step,
        tol: s.tol,
        max_iter: s.max_iter,
    })
}

fn is_unit_exponential(k: &KillingDist) -> bool {
    matches!(k, KillingDist::Exponential { rate } if *rate == 1.0)
}

pub fn ba_sample(a: &BaSampleArgs) -> Result<Report, CliError> {
    need_replicas(a.replicas, 1)?;
    let root = parse_root(&a.root)?;
    let killing = parse_killing(&a.killing)?;
    let params = ModelParams::new(a.lambda, killing)?;
    let policy = policy(&a.caps)?;
    let outcomes = sample_many(&params, root, &policy, a.seed, a.replicas)?;

    let censored = outcomes.iter().filter(|o| o.censored).count() as u64;
    let values: Vec<f64> = outcomes.iter().map(|o| o.n_born as f64).collect();
    let stats = if values.len() >= 2 {
        Some(summarize(&values, censored)?)
    } else {
        None
    };
    let analytic = (root == RootCondition::Free && is_unit_exponential(&killing))
        .then(|| mean_n(a.lambda).ok())
        .flatten();
    let summary = json!({
        "n_born": stats,
        "censored": censored,
        "analytic_mean": analytic,
    });

    let body = match a.format {
        Format::Csv => {
            let mut t = Table::new(&["replica_index", "n_born", "extinction_time", "censored"]);
            for (i, o) in outcomes.iter().enumerate() {
                t.push(vec![
                    i.to_string(),
                    o.n_born.to_string(),
                    fmt_opt(o.extinction_time),
                    o.censored.to_string(),
                ]);
            }
            t.to_csv()
        }
        Format::Json => {
            let rows: Vec<_> = outcomes
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    json!({
                        "replica_index": i,
                        "n_born": o.n_born,
                        "extinction_time": o.extinction_time,
                        "censored": o.censored,
                    })
                })
                .collect();
            // the document must not depend on where it is written
            let mut parameters = serde_json::to_value(a)?;
            if let Some(obj) = parameters.as_object_mut() {
                obj.remove("out");
            }
            let doc = json!({
                "schema": "ba-sample/1",
                "parameters": parameters,
                "rows": rows,
                "summary": summary,
            });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
    };

    let mut r = Report::new(
        body,
        match a.format {
            Format::Csv => "ba-sample-csv/1",
            Format::Json => "ba-sample/1",
        },
    );
    r.master_seed = Some(a.seed);
    r.replicas = Some(a.replicas);
    if let Some(s) = stats {
        r.notes.push(format!(
            "n_born: mean {} stderr {} ci95 [{}, {}] censored {}",
            s.mean, s.stderr, s.ci95_low, s.ci95_high, censored
        ));
    }
    if let Some(m) = analytic {
        r.notes.push(format!("analytic E N = {m}"));
    }
    r.summary = summary;
    Ok(r)
}

fn moment_cell(v: Result<f64, CoreError>) -> Result<String, CliError> {
    match v {
        Ok(x) => Ok(fmt_f64(x)),
        Err(CoreError::InfiniteMoment { .. }) => Ok("INF".to_string()),
        Err(e) => Err(e.into()),
    }
}

pub fn moments(a: &MomentsArgs) -> Result<Report, CliError> {
    if a.p == 0 {
        return usage("--p must be at least 1");
    }
    if !(a.lambda > 0.0 && a.lambda.is_finite()) {
        return Err(CoreError::Domain(format!("lambda must be positive, got {}", a.lambda)).into());
    }
    let mut r;
    match a.mode {
        MomentMode::ClosedForm | MomentMode::Recursion => {
            let mut t = Table::new(&["k", "value"]);
            for k in 1..=a.p {
                let cell = match (a.mode, k) {
                    (MomentMode::ClosedForm, 1) => moment_cell(mean_n(a.lambda))?,
                    (MomentMode::ClosedForm, 2) => moment_cell(second_moment_n(a.lambda))?,
                    (MomentMode::ClosedForm, 3) => moment_cell(third_moment_n(a.lambda))?,
                    (MomentMode::ClosedForm, _) => "NA".to_string(),
                    _ => moment_cell(moment_n(a.lambda, k))?,
                };
                t.push(vec![k.to_string(), cell]);
            }
            r = Report::new(t.to_csv(), "moments/1");
        }
        MomentMode::Mc => {
            need_replicas(a.replicas, 2)?;
            let params = ModelParams::unit(a.lambda)?;
            let outcomes = sample_many(&params, RootCondition::Free, &policy(&a.caps)?, a.seed, a.replicas)?;
            let censored = outcomes.iter().filter(|o| o.censored).count() as u64;
            let mut t = Table::new(&["k", "value", "stderr", "censored", "analytic"]);
            for k in 1..=a.p {
                let pow: Vec<f64> = outcomes
                    .iter()
                    .map(|o| (o.n_born as f64).powi(k as i32))
                    .collect();
                let s = summarize(&pow, censored)?;
                t.push(vec![
                    k.to_string(),
                    fmt_f64(s.mean),
                    fmt_f64(s.stderr),
                    censored.to_string(),
                    moment_cell(moment_n(a.lambda, k))?,
                ]);
            }
            r = Report::new(t.to_csv(), "moments-mc/1");
            r.master_seed = Some(a.seed);
            r.replicas = Some(a.replicas);
            if censored > 0 {
                r.notes.push(format!(
                    "warning: {censored} censored replicas; sample moments are biased low"
                ));
            }
        }
    }
    Ok(r)
}

pub fn tail(a: &TailArgs) -> Result<Report, CliError> {
    let ks = parse_k_range(&a.k_range)?;
    let gamma = gamma_exponent(a.lambda)?;
    need_replicas(a.replicas, 2)?;
    if *ks.last().expect("non-empty") as u64 >= a.replicas {
        return usage("--k-range must stay below --replicas");
    }
    let params = ModelParams::unit(a.lambda)?;
    let outcomes = sample_many(&params, RootCondition::Free, &policy(&a.caps)?, a.seed, a.replicas)?;
    let censored = outcomes.iter().filter(|o| o.censored).count() as u64;
    let mut values: Vec<f64> = outcomes.iter().map(|o| o.n_born as f64).collect();
    if !a.no_jitter {
        let mut rng = SeedSpec::new(SeedSpec::derive_master(a.seed, JITTER_LABEL), 0).rng();
        values = jitter(&values, &mut rng);
    }
    let table = HillTable::new(&values)?;
    let mut t = Table::new(&["k", "gamma_hat", "gamma_analytic"]);
    for k in ks {
        t.push(vec![k.to_string(), fmt_opt(table.gamma_at(k)), fmt_f64(gamma)]);
    }
    let mut r = Report::new(t.to_csv(), "tail/1");
    r.master_seed = Some(a.seed);
    r.replicas = Some(a.replicas);
    r.summary = json!({ "gamma_analytic": gamma, "censored": censored });
    if gamma > 10.0 {
        r.notes.push(format!(
            "warning: analytic exponent {gamma:.4} is large; so light a tail needs far more \
             samples before the Hill plot reaches it"
        ));
    }
    if censored > 0 {
        r.notes.push(format!("warning: {censored} censored replicas in the sample"));
    }
    Ok(r)
}

pub fn stability(a: &StabilityArgs) -> Result<Report, CliError> {
    let killing = parse_killing(&a.killing)?;
    let v = classify_stability(a.lambda, &killing)?;
    let verdict = match v.verdict {
        Verdict::Stable => "Stable",
        Verdict::Unstable => "Unstable",
        Verdict::Inconclusive => "Inconclusive",
    };
    let mut t = Table::new(&["lambda", "killing", "verdict", "criterion_value", "argmin"]);
    t.push(vec![
        fmt_f64(a.lambda),
        a.killing.clone(),
        verdict.to_string(),
        fmt_f64(v.criterion_value),
        fmt_f64(v.argmin),
    ]);
    let mut r = Report::new(t.to_csv(), "stability/1");
    r.summary = json!(v);
    r.notes.push(format!("{verdict}: min_u lambda phi(u)/u = {}", v.criterion_value));
    Ok(r)
}

pub fn extinction(a: &ExtinctionArgs) -> Result<Report, CliError> {
    let opts = solver_options(&a.solver)?;
    let profile = extinction_profile(a.lambda, &opts)?;
    let doubled = extinction_profile(
        a.lambda,
        &FixedPointOptions {
            horizon: 2.0 * opts.horizon,
            ..opts
        },
    )?;
    let pi0 = profile.values[0];
    let mut t = Table::new(&["t", "pi"]);
    for (x, y) in profile.grid.iter().zip(&profile.values) {
        t.push(vec![fmt_f64(*x), fmt_f64(*y)]);
    }
    let mut r = Report::new(t.to_csv(), "extinction/1");
    r.notes.push(format!(
        "pi(0) = {pi0} ({} iterations); with horizon {}: {}",
        profile.iterations,
        2.0 * opts.horizon,
        doubled.values[0]
    ));
    let mut summary = json!({
        "pi0": pi0,
        "pi0_double_horizon": doubled.values[0],
        "iterations": profile.iterations,
    });
    if a.mc_replicas > 0 {
        let params = ModelParams::unit(a.lambda)?;
        let policy = policy(&a.caps)?;
        let outcomes = sample_many(&params, RootCondition::Free, &policy, a.seed, a.mc_replicas)?;
        let freq = extinction_frequency(&outcomes, &policy)?;
        let analytic = 1.0 - pi0;
        let z = if freq.stderr > 0.0 {
            (analytic - freq.survived_fraction).abs() / freq.stderr
        } else {
            f64::NAN
        };
        r.notes.push(format!(
            "survival: analytic 1 - pi(0) = {analytic}; MC survived fraction {} +- {} ({} of {}); \
             |diff| / stderr = {z}",
            freq.survived_fraction, freq.stderr, freq.survived, freq.replicas
        ));
        if z > 3.0 {
            r.notes.push(
                "warning: least fixed point and MC survival disagree by more than 3 stderr".into(),
            );
        }
        summary["survival_analytic"] = json!(analytic);
        summary["mc"] = json!(freq);
        r.master_seed = Some(a.seed);
        r.replicas = Some(a.mc_replicas);
    }
    r.summary = summary;
    Ok(r)
}

pub fn laplace(a: &LaplaceArgs) -> Result<Report, CliError> {
    let opts = solver_options(&a.solver)?;
    if !(a.t >= 0.0 && a.t <= opts.horizon) {
        return Err(CoreError::Domain(format!(
            "t must lie in [0, horizon = {}], got {}",
            opts.horizon, a.t
        ))
        .into());
    }
    let profile = laplace_profile(a.lambda, a.theta, &opts)?;
    let value = profile.eval(a.t);
    let mut mc = None;
    let mut r_seed = None;
    if a.mc_replicas > 0 {
        need_replicas(a.mc_replicas, 2)?;
        let params = ModelParams::unit(a.lambda)?;
        let outcomes = sample_many(
            &params,
            RootCondition::DiesAt(a.t),
            &policy(&a.caps)?,
            a.seed,
            a.mc_replicas,
        )?;
        let censored = outcomes.iter().filter(|o| o.censored).count() as u64;
        let w: Vec<f64> = outcomes
            .iter()
            .map(|o| (-a.theta * o.n_born as f64).exp())
            .collect();
        mc = Some(summarize(&w, censored)?);
        r_seed = Some(a.seed);
    }
    let mut t = Table::new(&[
        "lambda",
        "theta",
        "t",
        "laplace",
        "mc_estimate",
        "mc_stderr",
        "mc_censored",
    ]);
    t.push(vec![
        fmt_f64(a.lambda),
        fmt_f64(a.theta),
        fmt_f64(a.t),
        fmt_f64(value),
        fmt_opt(mc.map(|s| s.mean)),
        fmt_opt(mc.map(|s| s.stderr)),
        mc.map(|s| s.censored_count.to_string()).unwrap_or_else(|| "NA".into()),
    ]);
    let mut r = Report::new(t.to_csv(), "laplace/1");
    r.notes.push(format!("L(t) = {value} ({} iterations)", profile.iterations));
    if let Some(s) = mc {
        r.notes.push(format!(
            "MC E exp(-theta Y(t)) = {} +- {}; |diff| / stderr = {}",
            s.mean,
            s.stderr,
            (s.mean - value).abs() / s.stderr
        ));
    }
    r.master_seed = r_seed;
    r.replicas = r_seed.map(|_| a.mc_replicas);
    r.summary = json!({ "laplace": value, "iterations": profile.iterations, "mc": mc });
    Ok(r)
}

fn rumor_config(a: &RumorSampleArgs) -> Result<RumorConfig, CliError> {
    let mut cfg = if a.topology == "complete" {
        let n = a
            .n
            .ok_or_else(|| CliError::Usage("--n is required for the complete topology".into()))?;
        RumorConfig::complete(n, a.lambda)
    } else if let Some(path) = a.topology.strip_prefix("file=") {
        let g = Graph::from_file(Path::new(path))?;
        let mut cfg = RumorConfig::explicit(g, a.lambda);
        if let Some(n) = a.n {
            cfg.n = n;
        }
        cfg
    } else {
        return usage(format!(
            "--topology must be complete or file=PATH, got {:?}",
            a.topology
        ));
    };
    if let Some(s) = a.infection_scale {
        cfg = cfg.with_infection_scale(s);
    }
    Ok(cfg.with_init(match a.init {
        InitArg::Paper => InitMode::Paper,
        InitArg::FullBlame => InitMode::FullBlame,
    }))
}

pub fn rumor_sample(a: &RumorSampleArgs) -> Result<Report, CliError> {
    need_replicas(a.replicas, 1)?;
    let cfg = rumor_config(a)?;
    let policy = CensorPolicy::new(a.max_events, a.max_time)?;
    let dist = sample_n_n_distribution(&cfg, a.replicas, &policy, a.seed, a.force_root_recovery)?;
    let mut t = Table::new(&["replica_index", "n_recovered", "absorption_time", "censored"]);
    for i in 0..dist.values.len() {
        t.push(vec![
            i.to_string(),
            dist.values[i].to_string(),
            fmt_f64(dist.absorption_times[i]),
            dist.censored[i].to_string(),
        ]);
    }
    let stats = if dist.values.len() >= 2 {
        Some(summarize(&dist.as_f64(), dist.censored_count)?)
    } else {
        None
    };
    let limit = (a.topology == "complete"
        && a.force_root_recovery.is_none()
        && a.init == InitArg::Paper
        && a.infection_scale.is_none())
    .then(|| mean_n(a.lambda).ok())
    .flatten();
    let mut r = Report::new(t.to_csv(), "rumor-sample/1");
    r.master_seed = Some(a.seed);
    r.replicas = Some(a.replicas);
    if let Some(s) = stats {
        r.notes.push(format!(
            "n_recovered: mean {} stderr {} ci95 [{}, {}] censored {}",
            s.mean, s.stderr, s.ci95_low, s.ci95_high, dist.censored_count
        ));
    }
    if let Some(m) = limit {
        r.notes.push(format!("n -> infinity limit E N = {m}"));
    }
    r.summary = json!({
        "n_recovered": stats,
        "censored": dist.censored_count,
        "limit_mean": limit,
    });
    Ok(r)
}

pub fn converge(a: &ConvergeArgs) -> Result<Report, CliError> {
    let ns = parse_n_list(&a.n_list)?;
    need_replicas(a.replicas, 2)?;
    if !(a.delta > 0.0 && a.delta <= 1.0) {
        return usage(format!("--delta must lie in (0, 1], got {}", a.delta));
    }
    let rumor_policy = CensorPolicy::new(a.max_events, 1e12)?;
    let subcritical = a.lambda <= 0.25;
    let mut r;
    let mut rows = Vec::new();
    if subcritical {
        let params = ModelParams::unit(a.lambda)?;
        let ba_policy = policy(&a.caps)?;
        let root = match a.t {
            Some(t) => RootCondition::DiesAt(t),
            None => RootCondition::Free,
        };
        let mut t = Table::new(&[
            "n",
            "mean",
            "stderr",
            "ks_distance",
            "critical_1pct",
            "ba_mean",
        ]);
        for &n in &ns {
            // every n shares the rumor streams; the B&A reference is fresh per n
            let dist = sample_n_n_distribution(
                &RumorConfig::complete(n, a.lambda),
                a.replicas,
                &rumor_policy,
                a.seed,
                a.t,
            )?;
            let ba = sample_many(
                &params,
                root,
                &ba_policy,
                SeedSpec::derive_master(a.seed, n as u64),
                a.replicas,
            )?;
            let ba_values: Vec<f64> = ba.iter().map(|o| o.n_born as f64).collect();
            let ba_censored = ba.iter().filter(|o| o.censored).count() as u64;
            let s = summarize(&dist.as_f64(), dist.censored_count)?;
            let bs = summarize(&ba_values, ba_censored)?;
            let ks = ks_two_sample(&dist.as_f64(), &ba_values)?;
            t.push(vec![
                n.to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.stderr),
                fmt_f64(ks.distance),
                fmt_f64(ks.critical_1pct),
                fmt_f64(bs.mean),
            ]);
            rows.push(json!({ "n": n, "rumor": s, "ba": bs, "ks": ks }));
        }
        r = Report::new(t.to_csv(), "converge/1");
    } else {
        let mut t = Table::new(&["n", "mean", "stderr", "p_ge_delta_n", "p_stderr"]);
        for &n in &ns {
            let dist = sample_n_n_distribution(
                &RumorConfig::complete(n, a.lambda),
                a.replicas,
                &rumor_policy,
                a.seed,
                a.t,
            )?;
            let s = summarize(&dist.as_f64(), dist.censored_count)?;
            let p = dist.tail_fraction(a.delta * n as f64);
            let pse = (p * (1.0 - p) / a.replicas as f64).sqrt();
            t.push(vec![
                n.to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.stderr),
                fmt_f64(p),
                fmt_f64(pse),
            ]);
            rows.push(json!({ "n": n, "rumor": s, "p_ge_delta_n": p, "p_stderr": pse }));
        }
        r = Report::new(t.to_csv(), "converge-supercritical/1");
        r.notes.push(format!(
            "lambda > 1/4: reporting P(n_recovered >= {} n)",
            a.delta
        ));
    }
    r.master_seed = Some(a.seed);
    r.replicas = Some(a.replicas);
    r.summary = json!({ "rows": rows });
    Ok(r)
}
