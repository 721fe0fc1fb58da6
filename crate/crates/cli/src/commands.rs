use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use causal_twin::io::{
    format_sig, read_csv, read_factors_json, read_ims_file, render_dot, render_svg, write_bare_factors_json, write_csv,
    write_factors_json, write_ims, RenderStyle,
};
use causal_twin::ladder::{build_ladder, detect_feedback_loops, DEFAULT_MAX_LOOP_EDGES, DEFAULT_MAX_STRUCTURAL_HOPS};
use causal_twin::model::{CausalFactors, MultiChannelSeries};
use causal_twin::pipeline::{estimate as run_estimate, ols_oracle, standardize};
use causal_twin::statespace::state_layout;
use causal_twin::synth::{simulate as run_simulate, stability_check, SynthSpec};
use clap::Args;
use rayon::prelude::*;

use crate::config::{has_csv_extension, ConfigFile, Emit, EstimationArgs, Format};
use crate::report::{loops_report, propositions_report};
use crate::{CliError, EXIT_OK, EXIT_PARTIAL, EXIT_TOLERANCE};

const DEFAULT_OUT_DIR: &str = "ctwin-out";

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Data files or directories of data files
    #[arg(value_name = "INPUT")]
    pub inputs: Vec<PathBuf>,

    #[command(flatten)]
    pub estimation: EstimationArgs,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Output directory [default: ctwin-out]
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Artifacts written per input [default: factors-json]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub emit: Vec<Emit>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Ground-truth factors JSON
    #[arg(value_name = "FACTORS")]
    pub factors: PathBuf,

    /// Samples to write
    #[arg(long)]
    pub length: usize,

    /// Innovation scale per channel, or one value for all channels
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub noise: Vec<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Samples generated and discarded before the first written one
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,

    /// Output file; `.csv` selects CSV unless --format says otherwise
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Directory that a relative --output is placed in
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_name = "INPUT")]
    pub input: PathBuf,

    #[command(flatten)]
    pub estimation: EstimationArgs,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Largest accepted |filter - least squares| over all factors
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Factors JSON
    #[arg(value_name = "FACTORS")]
    pub factors: PathBuf,

    /// Write artifacts here as well as printing the reports
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Artifacts written to --out-dir [default: svg,dot,loops,propositions]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub emit: Vec<Emit>,

    /// Longest feedback loop searched, in edges
    #[arg(long, default_value_t = DEFAULT_MAX_LOOP_EDGES)]
    pub max_loop_edges: usize,

    /// Structural hops appended to a lagged edge when forming propositions
    #[arg(long, default_value_t = DEFAULT_MAX_STRUCTURAL_HOPS)]
    pub max_hops: usize,
}

fn read_series(path: &Path, format: Format) -> causal_twin::Result<MultiChannelSeries> {
    match format.resolve(path) {
        Format::Csv => read_csv(path, first_line_is_header(path)?),
        _ => read_ims_file(path),
    }
}

/// A header is any first non-blank line with a field that is not a number.
fn first_line_is_header(path: &Path) -> causal_twin::Result<bool> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.split(',').any(|f| f.trim().parse::<f64>().is_err())))
}

/// Files named directly plus the regular files of named directories, in
/// name order. Every path must exist.
fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    if paths.is_empty() {
        return Err(CliError::new("no input files given"));
    }
    let mut files = Vec::new();
    for p in paths {
        let meta = fs::metadata(p).map_err(|e| CliError::context(p.display(), e))?;
        if !meta.is_dir() {
            files.push(p.clone());
            continue;
        }
        let mut inside = Vec::new();
        for entry in fs::read_dir(p).map_err(|e| CliError::context(p.display(), e))? {
            let path = entry.map_err(|e| CliError::context(p.display(), e))?.path();
            let hidden = path.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'));
            if path.is_file() && !hidden {
                inside.push(path);
            }
        }
        inside.sort();
        if inside.is_empty() {
            return Err(CliError::new(format!("{}: directory holds no files", p.display())));
        }
        files.extend(inside);
    }
    Ok(files)
}

/// Output file prefix: the file name, without a `.csv` extension.
fn output_stem(path: &Path) -> String {
    let name = if has_csv_extension(path) {
        path.file_stem()
    } else {
        path.file_name()
    };
    name.map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

fn unique_stems(files: &[PathBuf]) -> Result<Vec<String>, CliError> {
    let stems: Vec<String> = files.iter().map(|f| output_stem(f)).collect();
    let mut seen = BTreeSet::new();
    for s in &stems {
        if !seen.insert(s) {
            return Err(CliError::new(format!("two inputs would write outputs named '{s}'")));
        }
    }
    Ok(stems)
}

struct FileSummary {
    samples: usize,
    channels: usize,
    counts: (usize, usize, usize),
}

fn estimate_one(
    path: &Path,
    stem: &str,
    format: Format,
    cfg: &causal_twin::EstimationConfig,
    out_dir: &Path,
    emit: &BTreeSet<Emit>,
) -> causal_twin::Result<FileSummary> {
    let series = read_series(path, format)?;
    let result = run_estimate(&series, cfg)?;
    let out = |suffix: &str| out_dir.join(format!("{stem}.{suffix}"));
    if emit.contains(&Emit::FactorsJson) {
        write_factors_json(&result, out("factors.json"))?;
    }
    let graph_artifacts = [Emit::Svg, Emit::Dot, Emit::Loops, Emit::Propositions];
    if graph_artifacts.iter().any(|e| emit.contains(e)) {
        write_graph_artifacts(
            &result.factors,
            emit,
            DEFAULT_MAX_LOOP_EDGES,
            DEFAULT_MAX_STRUCTURAL_HOPS,
            &out,
        )?;
    }
    Ok(FileSummary {
        samples: series.len(),
        channels: series.channels(),
        counts: result.factors.nonzero_counts(),
    })
}

fn write_graph_artifacts(
    factors: &CausalFactors,
    emit: &BTreeSet<Emit>,
    max_loop_edges: usize,
    max_hops: usize,
    out: &dyn Fn(&str) -> PathBuf,
) -> causal_twin::Result<()> {
    let g = build_ladder(factors)?;
    if emit.contains(&Emit::Svg) {
        let loops = detect_feedback_loops(&g, max_loop_edges);
        fs::write(out("svg"), render_svg(&g, &loops, &RenderStyle::default()))?;
    }
    if emit.contains(&Emit::Dot) {
        fs::write(out("dot"), render_dot(&g))?;
    }
    if emit.contains(&Emit::Loops) {
        fs::write(out("loops.txt"), loops_report(&g, max_loop_edges))?;
    }
    if emit.contains(&Emit::Propositions) {
        fs::write(out("propositions.txt"), propositions_report(&g, max_hops))?;
    }
    Ok(())
}

fn emit_set(flags: &[Emit], file: &ConfigFile, default: &[Emit]) -> BTreeSet<Emit> {
    if !flags.is_empty() {
        flags.iter().copied().collect()
    } else {
        file.emit.as_deref().unwrap_or(default).iter().copied().collect()
    }
}

pub fn estimate(args: &EstimateArgs, file: &ConfigFile) -> Result<u8, CliError> {
    let cfg = args.estimation.resolve(file)?;
    let inputs = if args.inputs.is_empty() {
        &file.inputs
    } else {
        &args.inputs
    };
    let files = expand_inputs(inputs)?;
    let stems = unique_stems(&files)?;
    let format = args.format.or(file.format).unwrap_or(Format::Auto);
    let emit = emit_set(&args.emit, file, &[Emit::FactorsJson]);
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    fs::create_dir_all(&out_dir).map_err(|e| CliError::context(out_dir.display(), e))?;

    let outcomes: Vec<_> = files
        .par_iter()
        .zip(stems.par_iter())
        .map(|(path, stem)| estimate_one(path, stem, format, &cfg, &out_dir, &emit))
        .collect();

    let names: Vec<String> = files.iter().map(|f| f.display().to_string()).collect();
    let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max("input".len());
    println!(
        "{:<width$}  {:>8}  {:>8}  {:>4}  {:>4}  {:>4}  status",
        "input", "samples", "channels", "INS", "SNL", "INL"
    );
    let mut failed = 0;
    for (name, outcome) in names.iter().zip(&outcomes) {
        match outcome {
            Ok(s) => println!(
                "{name:<width$}  {:>8}  {:>8}  {:>4}  {:>4}  {:>4}  ok",
                s.samples, s.channels, s.counts.0, s.counts.1, s.counts.2
            ),
            Err(e) => {
                failed += 1;
                println!(
                    "{name:<width$}  {:>8}  {:>8}  {:>4}  {:>4}  {:>4}  failed",
                    "-", "-", "-", "-", "-"
                );
                eprintln!("error: {name}: {e}");
            }
        }
    }
    println!("{} of {} inputs estimated", files.len() - failed, files.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_PARTIAL })
}

pub fn simulate(args: &SimulateArgs, file: &ConfigFile) -> Result<u8, CliError> {
    let factors = read_factors_json(&args.factors).map_err(|e| CliError::context(args.factors.display(), e))?;
    let g = factors.channels();
    let noise = match args.noise.len() {
        1 => vec![args.noise[0]; g],
        n if n == g => args.noise.clone(),
        n => return Err(CliError::new(format!("--noise has {n} values for {g} channels"))),
    };
    let radius = stability_check(&factors).map_err(|e| CliError::context(args.factors.display(), e))?;
    println!("stability radius: {}", format_sig(radius));
    if radius >= 1.0 {
        return Err(CliError::new(format!(
            "model is unstable (radius {})",
            format_sig(radius)
        )));
    }
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let spec = SynthSpec::new(factors, noise, args.length, seed).with_burn_in(args.burn_in);
    let series = run_simulate(&spec).map_err(|e| CliError::new(e.to_string()))?;

    let out_dir = args.out_dir.clone().or_else(|| file.out_dir.clone());
    let output = match out_dir {
        Some(dir) if args.output.is_relative() => {
            fs::create_dir_all(&dir).map_err(|e| CliError::context(dir.display(), e))?;
            dir.join(&args.output)
        }
        _ => args.output.clone(),
    };
    let written = match args.format.or(file.format).unwrap_or(Format::Auto).resolve(&output) {
        Format::Csv => write_csv(&series, &output),
        _ => write_ims(&series, &output),
    };
    written.map_err(|e| CliError::context(output.display(), e))?;
    println!(
        "wrote {} samples x {} channels to {}",
        series.len(),
        g,
        output.display()
    );
    Ok(EXIT_OK)
}

pub fn verify(args: &VerifyArgs, file: &ConfigFile) -> Result<u8, CliError> {
    if !(args.tolerance >= 0.0 && args.tolerance.is_finite()) {
        return Err(CliError::new("--tolerance must be a finite number >= 0"));
    }
    let cfg = args.estimation.resolve(file)?;
    let format = args.format.or(file.format).unwrap_or(Format::Auto);
    let input = args.input.display();
    let series = read_series(&args.input, format).map_err(|e| CliError::context(&input, e))?;
    let result = run_estimate(&series, &cfg).map_err(|e| CliError::context(&input, e))?;
    let working = if cfg.standardize {
        standardize(&series).map_err(|e| CliError::context(&input, e))?.0
    } else {
        series
    };
    let ols = ols_oracle(&working, cfg.lag_order).map_err(|e| CliError::context(&input, e))?;
    let layout = state_layout(working.channels(), cfg.lag_order).map_err(|e| CliError::new(e.to_string()))?;
    let names = working.channel_names();

    println!("{:<16}  {:>12}  {:>12}  {:>10}", "factor", "filter", "ols", "delta");
    let mut worst: f64 = 0.0;
    for id in layout.entries() {
        let k = result.raw_factors.get(id.effect, id.cause, id.lag);
        let o = ols.get(id.effect, id.cause, id.lag);
        let delta = (k - o).abs();
        worst = worst.max(delta);
        let label = format!("{}<-{} {} {}", names[id.effect], names[id.cause], id.kind(), id.lag);
        println!(
            "{label:<16}  {:>12}  {:>12}  {:>10}",
            format_sig(k),
            format_sig(o),
            format_sig(delta)
        );
    }
    let ok = worst <= args.tolerance;
    println!(
        "max |delta| {} (tolerance {}): {}",
        format_sig(worst),
        format_sig(args.tolerance),
        if ok { "ok" } else { "exceeded" }
    );
    Ok(if ok { EXIT_OK } else { EXIT_TOLERANCE })
}

pub fn graph(args: &GraphArgs, file: &ConfigFile) -> Result<u8, CliError> {
    let factors = read_factors_json(&args.factors).map_err(|e| CliError::context(args.factors.display(), e))?;
    let g = build_ladder(&factors).map_err(|e| CliError::context(args.factors.display(), e))?;
    print!("{}", loops_report(&g, args.max_loop_edges));
    print!("{}", propositions_report(&g, args.max_hops));

    let Some(out_dir) = args.out_dir.clone().or_else(|| file.out_dir.clone()) else {
        return Ok(EXIT_OK);
    };
    fs::create_dir_all(&out_dir).map_err(|e| CliError::context(out_dir.display(), e))?;
    let emit = emit_set(
        &args.emit,
        file,
        &[Emit::Svg, Emit::Dot, Emit::Loops, Emit::Propositions],
    );
    let stem = args
        .factors
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "factors".into());
    let out = |suffix: &str| out_dir.join(format!("{stem}.{suffix}"));
    if emit.contains(&Emit::FactorsJson) {
        write_bare_factors_json(&factors, out("factors.json")).map_err(|e| CliError::new(e.to_string()))?;
    }
    write_graph_artifacts(&factors, &emit, args.max_loop_edges, args.max_hops, &out)
        .map_err(|e| CliError::context(out_dir.display(), e))?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_keep_ims_names_and_drop_csv_extension() {
        assert_eq!(
            output_stem(Path::new("data/2004.02.12.10.32.39")),
            "2004.02.12.10.32.39"
        );
        assert_eq!(output_stem(Path::new("data/day3.csv")), "day3");
        let clash = [PathBuf::from("a/day.csv"), PathBuf::from("b/day.csv")];
        assert!(unique_stems(&clash).is_err());
    }

    #[test]
    fn header_detection() {
        let dir = tempfile::tempdir().unwrap();
        let with = dir.path().join("a.csv");
        fs::write(&with, "\nB1,B2\n1,2\n").unwrap();
        assert!(first_line_is_header(&with).unwrap());
        let without = dir.path().join("b.csv");
        fs::write(&without, "1.5, -2e-3\n1,2\n").unwrap();
        assert!(!first_line_is_header(&without).unwrap());
    }
}
