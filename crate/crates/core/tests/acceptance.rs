//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p causal-twin --test acceptance`. Set
//! `CAUSAL_TWIN_BLESS=1` to rewrite the golden renderings under `tests/data/golden`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use causal_twin::io::{
    factors_to_json, read_csv, read_factors_json, render_dot, render_svg, write_csv, write_factors_json,
    FactorsDocument, RenderStyle,
};
use causal_twin::kalman::{run_filter, run_filter_with};
use causal_twin::ladder::{
    build_ladder, detect_feedback_loops, detect_x_patterns, generate_propositions, LoopClass, DEFAULT_MAX_LOOP_EDGES,
    DEFAULT_MAX_STRUCTURAL_HOPS,
};
use causal_twin::model::{default_channel_names, CausalFactors, EstimationConfig, Hyperparameters};
use causal_twin::pipeline::{estimate, ols_oracle, standardize, threshold_factors};
use causal_twin::statespace::{state_layout, FactorKind};
use causal_twin::synth::{simulate, SynthSpec};
use causal_twin::MultiChannelSeries;
use common::{chain_model, data_path, max_abs_delta};
use nalgebra::{DMatrix, DVector};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_time(started: Instant, limit: Duration, detail: String) -> Outcome {
    let elapsed = started.elapsed();
    let detail = format!("{detail}; {:.2}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs());
    check(elapsed < limit, detail)
}

fn criterion_1() -> Outcome {
    let layout = state_layout(4, 1).map_err(|e| e.to_string())?;
    let ins = layout.count_by_kind(FactorKind::Ins);
    let lagged = layout.count_by_kind(FactorKind::Snl) + layout.count_by_kind(FactorKind::Inl);
    check(
        layout.factor_count() == 28 && ins == 12 && lagged == 16,
        format!("{} factors: {ins} structural, {lagged} lagged", layout.factor_count()),
    )
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let cfg = EstimationConfig {
        hyper: Hyperparameters {
            process_noise_variance: 1e-8,
            initial_state_variance: 1e6,
            ..Hyperparameters::default()
        },
        ..EstimationConfig::default()
    };
    let mut worst: f64 = 0.0;
    let mut per_seed = Vec::new();
    for seed in 1..=5u64 {
        let series = simulate(&SynthSpec::new(chain_model(), vec![1.0; 4], 20_000, seed)).map_err(|e| e.to_string())?;
        let result = estimate(&series, &cfg).map_err(|e| e.to_string())?;
        let (working, _) = standardize(&series).map_err(|e| e.to_string())?;
        let oracle = ols_oracle(&working, 1).map_err(|e| e.to_string())?;
        let delta = max_abs_delta(&result.raw_factors, &oracle);
        per_seed.push(format!("{delta:.4}"));
        worst = worst.max(delta);
    }
    let detail = format!(
        "max |kalman - ols| per seed [{}], worst {worst:.4} (tol 1e-2)",
        per_seed.join(", ")
    );
    if worst > 1e-2 {
        return Err(detail);
    }
    within_time(started, Duration::from_secs(30), detail)
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let truth = chain_model();
    let series = simulate(&SynthSpec::new(truth.clone(), vec![1.0; 4], 100_000, 2024)).map_err(|e| e.to_string())?;
    let result = estimate(&series, &EstimationConfig::default()).map_err(|e| e.to_string())?;
    let layout = state_layout(4, 1).unwrap();
    let names = truth.channel_names();
    let mut missed = Vec::new();
    let mut spurious = Vec::new();
    for id in layout.entries() {
        let t = truth.get(id.effect, id.cause, id.lag);
        let e = result.factors.get(id.effect, id.cause, id.lag);
        let label = format!("{}<-{} lag {}", names[id.effect], names[id.cause], id.lag);
        if t != 0.0 && (e == 0.0 || e.signum() != t.signum()) {
            missed.push(format!("{label} truth {t} got {e:.3}"));
        }
        if t == 0.0 && e.abs() > 0.1 {
            spurious.push(format!("{label} got {e:.3}"));
        }
    }
    let detail = format!(
        "support with signs: {} missed{}; true zeros above 0.1: {}{}",
        missed.len(),
        if missed.is_empty() {
            String::new()
        } else {
            format!(" {missed:?}")
        },
        spurious.len(),
        if spurious.is_empty() {
            String::new()
        } else {
            format!(" {spurious:?}")
        },
    );
    if !missed.is_empty() || !spurious.is_empty() {
        return Err(detail);
    }
    within_time(started, Duration::from_secs(60), detail)
}

fn criterion_4() -> Outcome {
    let started = Instant::now();
    let mut s1 = DMatrix::zeros(2, 2);
    s1[(0, 0)] = 0.5;
    s1[(1, 0)] = 0.3;
    s1[(1, 1)] = -0.2;
    let mut s0 = DMatrix::zeros(2, 2);
    s0[(1, 0)] = 0.4;
    let truth = CausalFactors::new(s0, vec![s1], default_channel_names(2)).unwrap();
    let series = simulate(&SynthSpec::new(truth, vec![1.0, 0.7], 10_000, 11)).map_err(|e| e.to_string())?;
    let hyper = Hyperparameters {
        alpha: 1.0,
        beta: 0.0,
        gamma: 1.0,
        process_noise_variance: 0.0,
        measurement_noise_variance: 1.0,
        initial_state_variance: 1e6,
        ..Hyperparameters::default()
    };
    let cfg = EstimationConfig {
        hyper,
        standardize: false,
        ..EstimationConfig::default()
    };
    let traj = run_filter(&series, &cfg).map_err(|e| e.to_string())?;
    let kalman = traj.final_values();

    // ridge reference per effect channel: (X^T X + (r/p0) I)^-1 X^T y
    let layout = state_layout(2, 1).unwrap();
    let data = series.data();
    let lambda = hyper.measurement_noise_variance / hyper.initial_state_variance;
    let mut ridge_delta: f64 = 0.0;
    for effect in 0..2 {
        let block = layout.block(effect);
        let ids = &layout.entries()[block.clone()];
        let rows = series.len() - 1;
        let x = DMatrix::from_fn(rows, ids.len(), |r, c| data[(r + 1 - ids[c].lag, ids[c].cause)]);
        let y = DVector::from_fn(rows, |r, _| data[(r + 1, effect)]);
        let lhs = x.transpose() * &x + DMatrix::identity(ids.len(), ids.len()) * lambda;
        let beta = lhs.lu().solve(&(x.transpose() * y)).ok_or("singular ridge system")?;
        for (k, i) in block.enumerate() {
            ridge_delta = ridge_delta.max((kalman[i] - beta[k]).abs());
        }
    }
    let ols = ols_oracle(&series, 1).map_err(|e| e.to_string())?;
    let ols_delta = layout
        .entries()
        .iter()
        .enumerate()
        .map(|(i, id)| (kalman[i] - ols.get(id.effect, id.cause, id.lag)).abs())
        .fold(0.0, f64::max);
    let detail = format!("max |kalman - ridge| {ridge_delta:.2e}, max |kalman - ols| {ols_delta:.2e} (tol 1e-3)");
    if ridge_delta > 1e-3 || ols_delta > 1e-3 {
        return Err(detail);
    }
    within_time(started, Duration::from_secs(5), detail)
}

fn criterion_5() -> Outcome {
    // badly scaled, strongly correlated channels, lag order 2, no standardization
    let mut s0 = DMatrix::zeros(4, 4);
    s0[(1, 0)] = 0.9;
    s0[(2, 1)] = 0.9;
    s0[(3, 0)] = -0.8;
    let mut s1 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.6, 0.3, 0.2, 0.1]));
    s1[(2, 3)] = 0.3;
    let s2 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 0.1, 0.1, 0.1]));
    let truth = CausalFactors::new(s0, vec![s1, s2], default_channel_names(4)).unwrap();
    let series = simulate(&SynthSpec::new(truth, vec![100.0, 0.01, 1.0, 5.0], 10_000, 5)).map_err(|e| e.to_string())?;
    let cfg = EstimationConfig {
        lag_order: 2,
        standardize: false,
        hyper: Hyperparameters {
            process_noise_variance: 1e-8,
            initial_state_variance: 1e6,
            measurement_noise_variance: 1e-2,
            ..Hyperparameters::default()
        },
        ..EstimationConfig::default()
    };
    let mut worst_asym: f64 = 0.0;
    let mut worst_eig = f64::INFINITY;
    let mut steps = 0usize;
    run_filter_with(&series, &cfg, |fs| {
        steps += 1;
        worst_asym = worst_asym.max(fs.relative_asymmetry());
        if steps.is_multiple_of(10) || fs.step + 1 == 10_000 {
            worst_eig = worst_eig.min(fs.min_eigenvalue_ratio());
        }
    })
    .map_err(|e| e.to_string())?;
    check(
        worst_asym <= 1e-8 && worst_eig >= -1e-8,
        format!("{steps} steps: max relative asymmetry {worst_asym:.2e} (tol 1e-8), min eigenvalue / mean diagonal {worst_eig:.2e} (floor -1e-8)"),
    )
}

fn criterion_6() -> Outcome {
    let factors = read_factors_json(data_path("feb18.json")).map_err(|e| e.to_string())?;
    let graph = build_ladder(&factors).map_err(|e| e.to_string())?;
    let names = &graph.channels;
    let mut failures = Vec::new();

    let x: Vec<String> = detect_x_patterns(&graph)
        .iter()
        .map(|&(i, j)| format!("{}-{}", names[i], names[j]))
        .collect();
    if x != ["B2-B3"] {
        failures.push(format!("X report {x:?}"));
    }

    let (ins, snl, inl) = (
        graph.count(FactorKind::Ins),
        graph.count(FactorKind::Snl),
        graph.count(FactorKind::Inl),
    );
    if (graph.edges.len(), ins, snl, inl) != (16, 7, 4, 5) {
        failures.push(format!(
            "edges {} ({ins} INS, {snl} SNL, {inl} INL), expected 16 (7 INS, 4 SNL, 5 INL)",
            graph.edges.len()
        ));
    }

    let loops = detect_feedback_loops(&graph, DEFAULT_MAX_LOOP_EDGES);
    let b1_b2 = loops.iter().any(|l| {
        l.classification == LoopClass::PositiveFeedback
            && l.total_lag == 1
            && l.path.len() == 2
            && l.path[0].kind == FactorKind::Inl
            && (l.path[0].from, l.path[0].to) == (0, 1)
            && l.path[1].kind == FactorKind::Ins
            && (l.path[1].from, l.path[1].to) == (1, 0)
    });
    if !b1_b2 {
        failures.push("no positive-feedback B1-B2 loop".into());
    }

    let props = generate_propositions(&graph, DEFAULT_MAX_STRUCTURAL_HOPS);
    if !props.iter().any(|p| p.statement(names) == "B1(t-1) raises B1(t)") {
        failures.push("missing \"B1(t-1) raises B1(t)\"".into());
    }

    let summary = format!(
        "X {x:?}; {} edges ({ins} INS, {snl} SNL, {inl} INL); B1-B2 positive loop {b1_b2}; {} propositions",
        graph.edges.len(),
        props.len()
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; failed: {}", failures.join("; ")))
    }
}

fn criterion_7() -> Outcome {
    let raw = CausalFactors::from_rows(
        &[vec![0.0, 0.1], vec![0.1 + 1e-9, 0.0]],
        &[vec![vec![-0.1, -(0.1 + 1e-9)], vec![0.0, 0.5]]],
    )
    .map_err(|e| e.to_string())?;
    let t = threshold_factors(&raw, 0.1);
    let ok = t.get(0, 1, 0) == 0.0
        && t.get(1, 0, 0) == 0.1 + 1e-9
        && t.get(0, 0, 1) == 0.0
        && t.get(0, 1, 1) == -(0.1 + 1e-9)
        && t.get(1, 1, 1) == 0.5;
    check(ok, "|v| = 0.1 zeroed, |v| = 0.1 + 1e-9 kept, both signs".into())
}

fn pipeline_artifacts(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let spec = SynthSpec::new(chain_model(), vec![1.0; 4], 8_000, 77);
    let series = simulate(&spec).map_err(|e| e.to_string())?;
    let csv = dir.join("series.csv");
    write_csv(&series, &csv).map_err(|e| e.to_string())?;
    let series = read_csv(&csv, true).map_err(|e| e.to_string())?;
    let result = estimate(&series, &EstimationConfig::default()).map_err(|e| e.to_string())?;
    let json = dir.join("factors.json");
    write_factors_json(&result, &json).map_err(|e| e.to_string())?;
    let graph = build_ladder(&result.factors).map_err(|e| e.to_string())?;
    let loops = detect_feedback_loops(&graph, DEFAULT_MAX_LOOP_EDGES);
    std::fs::write(
        dir.join("ladder.svg"),
        render_svg(&graph, &loops, &RenderStyle::default()),
    )
    .map_err(|e| e.to_string())?;
    std::fs::write(dir.join("ladder.dot"), render_dot(&graph)).map_err(|e| e.to_string())?;
    ["series.csv", "factors.json", "ladder.svg", "ladder.dot"]
        .iter()
        .map(|f| Ok((f.to_string(), std::fs::read(dir.join(f)).map_err(|e| e.to_string())?)))
        .collect()
}

fn criterion_8() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline_artifacts(a.path())?;
    let second = pipeline_artifacts(b.path())?;
    let mut differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();

    // checked-in goldens for the fixture tables
    let factors = read_factors_json(data_path("feb18.json")).map_err(|e| e.to_string())?;
    let graph = build_ladder(&factors).map_err(|e| e.to_string())?;
    let loops = detect_feedback_loops(&graph, DEFAULT_MAX_LOOP_EDGES);
    let goldens = [
        ("feb18.svg", render_svg(&graph, &loops, &RenderStyle::default())),
        ("feb18.dot", render_dot(&graph)),
        (
            "feb18.roundtrip.json",
            factors_to_json(&FactorsDocument::bare(factors.clone())),
        ),
    ];
    if std::env::var_os("CAUSAL_TWIN_BLESS").is_some() {
        let dir = data_path("golden");
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        for (name, rendered) in &goldens {
            std::fs::write(dir.join(name), rendered).map_err(|e| e.to_string())?;
        }
    }
    for (name, rendered) in &goldens {
        let golden = std::fs::read_to_string(data_path("golden").join(name)).map_err(|e| format!("{name}: {e}"))?;
        if &golden != rendered {
            differing.push(name);
        }
    }
    check(
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "{} pipeline artifacts identical across runs, {} goldens match",
                first.len(),
                goldens.len()
            )
        } else {
            format!("differing: {differing:?}")
        },
    )
}

/// Day 1-3 independent AR(1) channels; B1 -> B2 lagged link from day 4,
/// thickening on day 5; B2 -> B3 lagged link from day 6.
fn day_truth(day: usize) -> CausalFactors {
    let mut s1 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.4, 0.6, 0.3]));
    if day >= 4 {
        s1[(1, 0)] = if day >= 5 { 0.45 } else { 0.3 };
    }
    if day >= 6 {
        s1[(2, 1)] = 0.35;
    }
    CausalFactors::new(DMatrix::zeros(4, 4), vec![s1], default_channel_names(4)).unwrap()
}

fn criterion_9() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut counts = Vec::new();
    let mut link = Vec::new();
    for day in 1..=7 {
        let path = dir.path().join(format!("day{day}.csv"));
        let series = simulate(&SynthSpec::new(day_truth(day), vec![1.0; 4], 20_000, 100 + day as u64))
            .map_err(|e| e.to_string())?;
        write_csv(&series, &path).map_err(|e| e.to_string())?;
        let series: MultiChannelSeries = read_csv(&path, true).map_err(|e| e.to_string())?;
        let result = estimate(&series, &EstimationConfig::default()).map_err(|e| e.to_string())?;
        let (ins, _snl, inl) = result.factors.nonzero_counts();
        counts.push(ins + inl);
        link.push(result.factors.get(1, 0, 1));
    }
    let monotone = counts.windows(2).all(|w| w[0] <= w[1]);
    let scheduled = link[..3].iter().all(|&v| v == 0.0) && link[3..].iter().all(|&v| v > 0.0);
    let detail = format!(
        "INL+INS per day {counts:?}; B1->B2 lagged per day [{}]",
        link.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ")
    );
    if !(monotone && scheduled) {
        return Err(detail);
    }
    within_time(started, Duration::from_secs(60), detail)
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 state count (28 = 12 structural + 16 lagged)", criterion_1),
        ("2 kalman/ols agreement", criterion_2),
        ("3 round-trip recovery", criterion_3),
        ("4 zero process noise equals ridge/ols", criterion_4),
        ("5 covariance health", criterion_5),
        ("6 feb-18 table fixture", criterion_6),
        ("7 threshold boundary", criterion_7),
        ("8 determinism and goldens", criterion_8),
        ("9 progression scenario", criterion_9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
