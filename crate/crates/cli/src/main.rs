//! prlab: sieve number-theoretic sequences, run correlation batteries and
//! density reports against them, generate hard-core-bit PRG blocks, and
//! verify the μ↔λ transfer identities.
//!
//! Exit codes: 0 success, 1 failed verdict (battery / facts / transfer /
//! selftest), 2 usage error, 3 data error.

mod config;
mod setparse;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use prlab_core::correlate::{
    battery, biased_statistic, correlate, default_battery, CorrelateError,
};
use prlab_core::density::{
    check_facts, k_density, measure_event, Chain, DensityError, KPlan, SeqStore, SetSpec,
};
use prlab_core::hcprg::{prg_sequence, BlockSchedule, PrgError, TrapdoorKey};
use prlab_core::seqkernel::{
    load_block, save_block, sieve_range, value_at, SeqBlock, SeqError, SeqKind,
};
use prlab_core::testlang::{self, TestFn};
use prlab_core::transforms::{mu_lambda_transfer_check, TransformError};

use config::RunConfig;
use setparse::{
    kinds_needed, parse_correlate_checkpoints, parse_kplan, parse_range, parse_seq_kind,
    parse_set, parse_u64_list,
};

#[derive(Parser)]
#[command(name = "prlab", version, about = "pseudorandomness laboratory for arithmetic sequences")]
struct Cli {
    /// Worker thread count (results never depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat key=value config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the merged, effective configuration to this file.
    #[arg(long = "dump-config", global = true)]
    dump_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sieve λ or μ over a range into a packed block file.
    Sieve(SieveArgs),
    /// Correlation trace of a test function against a sieved block.
    Correlate(CorrelateArgs),
    /// Run a battery of test functions against a sieved block.
    Battery(BatteryArgs),
    /// K-density of a set along checkpoints.
    Density(DensityArgs),
    /// Chain-density measure estimate of an event.
    Measure(MeasureArgs),
    /// Density fact checks (additivity, even split, chain laws).
    Facts(FactsArgs),
    /// Generate a hard-core-bit PRG block.
    Prg(PrgArgs),
    /// Verify λ(n) = μ(i) over square-part decompositions.
    Transfer(TransferArgs),
    /// Built-in oracle-equivalence and identity suites.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct SieveArgs {
    /// liouville or mobius
    #[arg(long)]
    kind: Option<String>,
    /// LO:HI, upper end exclusive
    #[arg(long)]
    range: Option<String>,
    /// Output file; defaults into PRLAB_CACHE_DIR
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long)]
    seq: Option<PathBuf>,
    /// Test function in the expression language
    #[arg(long)]
    test: Option<String>,
    /// Exponent offset for the n^(1/2+eps) normalization
    #[arg(long)]
    eps: Option<f64>,
    /// Also compute the p-biased statistic for this bias
    #[arg(long)]
    p: Option<f64>,
    /// pow2 (default) or a comma-separated list
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BatteryArgs {
    #[arg(long)]
    seq: Option<PathBuf>,
    /// `default` or a file with one test expression per line
    #[arg(long)]
    tests: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long = "burn-in")]
    burn_in: Option<u64>,
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    /// Set specification (see README for the syntax)
    #[arg(long)]
    set: Option<String>,
    /// Counting cap N
    #[arg(long)]
    n: Option<u64>,
    /// pow2 (default) or a comma-separated list
    #[arg(long)]
    checkpoints: Option<String>,
    /// Block file backing sequence-valued sets
    #[arg(long)]
    seq: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    /// Event set ψ
    #[arg(long)]
    event: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    /// Chain depth (levels are multiples of 2^t)
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    seq: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct FactsArgs {
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    seq: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PrgArgs {
    /// Modulus size in bits (6..=64) when generating a key
    #[arg(long)]
    bits: Option<u32>,
    /// Key generation seed; same bits and seed give the same key
    #[arg(long)]
    seed: Option<u64>,
    /// Load the trapdoor key from a JSON file instead of generating
    #[arg(long)]
    key: Option<PathBuf>,
    /// Write the trapdoor key as JSON
    #[arg(long = "key-out")]
    key_out: Option<PathBuf>,
    /// Block exponents k1,k2,... (strictly increasing)
    #[arg(long)]
    schedule: Option<String>,
    /// LO:HI inside the schedule coverage
    #[arg(long)]
    range: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    n0: Option<u64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Optional block file to integrity-check against the factorization path
    #[arg(long)]
    seq: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($args:ident, $cfg:ident; $($field:ident $(=> $key:ident)?),* $(,)?) => {
        $( overlay_fields!(@one $args, $cfg, $field $(=> $key)?); )*
    };
    (@one $args:ident, $cfg:ident, $field:ident) => {
        if let Some(v) = $args.$field { $cfg.$field = Some(v); }
    };
    (@one $args:ident, $cfg:ident, $field:ident => $key:ident) => {
        if let Some(v) = $args.$field { $cfg.$key = Some(v); }
    };
}

fn path_string(p: PathBuf) -> String {
    p.display().to_string()
}

impl SieveArgs {
    fn overlay(self, mut cfg: RunConfig) -> RunConfig {
        overlay_fields!(self, cfg; kind, range);
        if let Some(v) = self.out { cfg.out = Some(path_string(v)); }
        cfg.subcommand = Some("sieve".into());
        cfg
    }
}

impl CorrelateArgs {
    fn overlay(self, mut cfg: RunConfig) -> RunConfig {
        overlay_fields!(self, cfg; test, eps, p, checkpoints);
        if let Some(v) = self.seq { cfg.seq = Some(path_string(v)); }
        if let Some(v) = self.csv { cfg.csv = Some(path_string(v)); }
        if let Some(v) = self.json { cfg.json = Some(path_string(v)); }
        cfg.subcommand = Some("correlate".into());
        cfg
    }
}

impl BatteryArgs {
    fn overlay(self, mut cfg: RunConfig) -> RunConfig {
        overlay_fields!(self, cfg; tests, threshold, burn_in, checkpoints);
        if let Some(v) = self.seq { cfg.seq = Some(path_string(v)); }
        if let Some(v) = self.json { cfg.json = Some(path_string(v)); }
        cfg.subcommand = Some("battery".into());
        cfg
    }
}

impl DensityArgs {
    fn overlay(self, mut cfg: RunConfig) -> RunConfig {
        overlay_fields!(self, cfg; set, n, checkpoints);
        if let Some(v) = self.seq { cfg.seq = Some(path_string(v)); }
        if let Some(v) = self.csv { cfg.csv = Some(path_string(v)); }
        if let Some(v) = self.json { cfg.json = Some(path_string(v)); }
        cfg.subcommand = Some("density".into());
        cfg
    }
}

impl MeasureArgs {
    fn overlay(self, mut cfg: RunConfig) -> RunConfig {
        overlay_fields!(self, cfg; event, n, depth);
        if let Some(v) = self.seq { cfg.seq = Some(path_string(v)); }
        if let Some(v) = self.json { cfg.json = Some(path_string(v)); }
        cfg.subcommand = Some("measure".into());
        cfg
    }
}

impl FactsArgs {
    fn overlay(self, mut cfg: RunConfig) -> RunConfig {
        overlay_fields!(self, cfg; x, y, z, n, tol, depth);
        if let Some(v) = self.seq { cfg.seq = Some(path_string(v)); }
        if let Some(v) = self.json { cfg.json = Some(path_string(v)); }
        cfg.subcommand = Some("facts".into());
        cfg
    }
}

impl PrgArgs {
    fn overlay(self, mut cfg: RunConfig) -> RunConfig {
        overlay_fields!(self, cfg; bits, seed, schedule, range);
        if let Some(v) = self.key { cfg.key = Some(path_string(v)); }
        if let Some(v) = self.key_out { cfg.key_out = Some(path_string(v)); }
        if let Some(v) = self.out { cfg.out = Some(path_string(v)); }
        cfg.subcommand = Some("prg".into());
        cfg
    }
}

impl TransferArgs {
    fn overlay(self, mut cfg: RunConfig) -> RunConfig {
        overlay_fields!(self, cfg; n, n0);
        if let Some(v) = self.json { cfg.json = Some(path_string(v)); }
        cfg.subcommand = Some("transfer".into());
        cfg
    }
}

impl SelftestArgs {
    fn overlay(self, mut cfg: RunConfig) -> RunConfig {
        if let Some(v) = self.seq { cfg.seq = Some(path_string(v)); }
        cfg.subcommand = Some("selftest".into());
        cfg
    }
}

/// Usage problems exit 2; data problems exit 3.
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> CliError {
        CliError::Usage(e.to_string())
    }

    fn data(e: impl std::fmt::Display) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<SeqError> for CliError {
    fn from(e: SeqError) -> CliError {
        match e {
            SeqError::Io(_)
            | SeqError::BadMagic
            | SeqError::BadVersion(_)
            | SeqError::BadKindByte(_)
            | SeqError::Truncated { .. }
            | SeqError::ChecksumMismatch { .. }
            | SeqError::ReservedCode { .. }
            | SeqError::KindViolation { .. } => CliError::data(e),
            other => CliError::usage(other),
        }
    }
}

impl From<CorrelateError> for CliError {
    fn from(e: CorrelateError) -> CliError {
        match e {
            CorrelateError::CheckpointBeyondData { .. }
            | CorrelateError::SourceStartsLate { .. } => CliError::data(e),
            other => CliError::usage(other),
        }
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> CliError {
        match e {
            DensityError::MissingSequence(_) | DensityError::SequenceGap { .. } => {
                CliError::data(e)
            }
            other => CliError::usage(other),
        }
    }
}

impl From<PrgError> for CliError {
    fn from(e: PrgError) -> CliError {
        CliError::usage(e)
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> CliError {
        match e {
            TransformError::OutOfData { .. } => CliError::data(e),
            other => CliError::usage(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::data(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Best effort; a pool may already exist in test harnesses.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let cfg = match load_config(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("prlab: {e}");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command, cfg, cli.dump_config.as_deref()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("prlab: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("prlab: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, String> {
    let Some(path) = path else { return Ok(RunConfig::default()) };
    let text = fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    RunConfig::from_kv(&text).map_err(|e| format!("config {}: {e}", path.display()))
}

fn check_subcommand(cfg: &RunConfig, actual: &str) -> Result<(), CliError> {
    if let Some(expected) = &cfg.subcommand {
        if expected != actual {
            return Err(CliError::Usage(format!(
                "config file is for `{expected}` but `{actual}` was invoked"
            )));
        }
    }
    Ok(())
}

fn dispatch(
    command: Command,
    cfg: RunConfig,
    dump_config: Option<&Path>,
) -> Result<bool, CliError> {
    let (name, merged) = match command {
        Command::Sieve(args) => ("sieve", args.overlay(cfg.clone())),
        Command::Correlate(args) => ("correlate", args.overlay(cfg.clone())),
        Command::Battery(args) => ("battery", args.overlay(cfg.clone())),
        Command::Density(args) => ("density", args.overlay(cfg.clone())),
        Command::Measure(args) => ("measure", args.overlay(cfg.clone())),
        Command::Facts(args) => ("facts", args.overlay(cfg.clone())),
        Command::Prg(args) => ("prg", args.overlay(cfg.clone())),
        Command::Transfer(args) => ("transfer", args.overlay(cfg.clone())),
        Command::Selftest(args) => ("selftest", args.overlay(cfg.clone())),
    };
    check_subcommand(&cfg, name)?;
    if let Some(path) = dump_config {
        fs::write(path, merged.to_kv())?;
    }
    match name {
        "sieve" => cmd_sieve(merged),
        "correlate" => cmd_correlate(merged),
        "battery" => cmd_battery(merged),
        "density" => cmd_density(merged),
        "measure" => cmd_measure(merged),
        "facts" => cmd_facts(merged),
        "prg" => cmd_prg(merged),
        "transfer" => cmd_transfer(merged),
        _ => cmd_selftest(merged),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing --{flag} (flag or config)")))
}

fn cache_dir() -> PathBuf {
    std::env::var_os("PRLAB_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable reports");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

// --- sieve ---

fn cmd_sieve(cfg: RunConfig) -> Result<bool, CliError> {
    let kind_text = require(cfg.kind, "kind")?;
    let kind = parse_seq_kind(&kind_text).map_err(CliError::Usage)?;
    let range_text = require(cfg.range, "range")?;
    let (lo, hi) = parse_range(&range_text).map_err(CliError::Usage)?;
    let out = cfg
        .out
        .map(PathBuf::from)
        .unwrap_or_else(|| cache_dir().join(format!("{kind}_{lo}_{hi}.prseq")));

    let block = sieve_range(lo, hi, kind)?;
    save_block(&block, &out)?;
    println!("wrote {} {} values for [{lo}, {hi}) to {}", block.len(), kind, out.display());
    Ok(true)
}

// --- correlate ---

fn trace_json(trace: &prlab_core::correlate::CorrelationTrace) -> serde_json::Value {
    json!(trace
        .points
        .iter()
        .map(|p| {
            json!({
                "n": p.n,
                "raw": p.raw.to_rational_string(),
                "norm_n": p.norm_n,
                "norm_rh": p.norm_rh,
                "norm_lil": p.norm_lil,
            })
        })
        .collect::<Vec<_>>())
}

fn cmd_correlate(cfg: RunConfig) -> Result<bool, CliError> {
    let seq_path = PathBuf::from(require(cfg.seq, "seq")?);
    let test_text = require(cfg.test, "test")?;
    let eps = cfg.eps.unwrap_or(0.05);
    let checkpoint_text = cfg.checkpoints.unwrap_or_else(|| "pow2".into());
    let bias = cfg.p;

    let block = load_block(&seq_path)?;
    let f = testlang::parse(&test_text).map_err(CliError::usage)?;
    let n_max = block.hi() - 1;
    let plan = parse_correlate_checkpoints(&checkpoint_text, n_max).map_err(CliError::Usage)?;
    let trace = correlate(&block, &f, &plan, eps)?;

    if let Some(csv) = cfg.csv.map(PathBuf::from) {
        fs::write(&csv, trace.to_csv())?;
    }

    let biased = bias.map(|p| biased_statistic(&block, &f, p, &plan)).transpose()?;

    if let Some(json_path) = cfg.json.map(PathBuf::from) {
        let biased_json = biased.as_ref().map(|b| {
            json!(b
                .points
                .iter()
                .map(|pt| {
                    json!({
                        "n": pt.n,
                        "base": pt.base.to_rational_string(),
                        "fsum": pt.fsum.to_rational_string(),
                        "value": pt.value,
                    })
                })
                .collect::<Vec<_>>())
        });
        let envelope = json!({
            "command": "correlate",
            "seq": seq_path.display().to_string(),
            "test": f.to_string(),
            "eps": eps,
            "points": trace_json(&trace),
            "biased_p": bias,
            "biased": biased_json,
        });
        write_json(&json_path, &envelope)?;
    }

    let last = trace.points.last().expect("plans are nonempty");
    println!(
        "n={} raw={} norm_n={} norm_rh={}",
        last.n,
        last.raw.to_rational_string(),
        last.norm_n,
        last.norm_rh
    );
    if let Some(b) = &biased {
        let pt = b.points.last().unwrap();
        println!("biased p={} value={}", b.p, pt.value);
    }
    Ok(true)
}

// --- battery ---

fn load_tests(spec: &str) -> Result<Vec<(String, TestFn)>, CliError> {
    if spec == "default" {
        return Ok(default_battery());
    }
    let text = fs::read_to_string(spec)?;
    let mut tests = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = testlang::parse(line)
            .map_err(|e| CliError::Usage(format!("test `{line}`: {e}")))?;
        tests.push((line.to_string(), f));
    }
    if tests.is_empty() {
        return Err(CliError::Usage(format!("no tests in `{spec}`")));
    }
    Ok(tests)
}

fn cmd_battery(cfg: RunConfig) -> Result<bool, CliError> {
    let seq_path = PathBuf::from(require(cfg.seq, "seq")?);
    let tests_spec = cfg.tests.unwrap_or_else(|| "default".into());
    let threshold = cfg.threshold.unwrap_or(0.05);
    let burn_in = cfg.burn_in.unwrap_or(10_000);
    let checkpoint_text = cfg.checkpoints.unwrap_or_else(|| "pow2".into());

    let block = load_block(&seq_path)?;
    let tests = load_tests(&tests_spec)?;
    let plan = parse_correlate_checkpoints(&checkpoint_text, block.hi() - 1)
        .map_err(CliError::Usage)?;
    let report = battery(&block, &tests, &plan, threshold, burn_in)?;

    for entry in &report.entries {
        println!(
            "{} max|S/n|={} at n={}  {}",
            if entry.pass { "PASS" } else { "FAIL" },
            entry.max_abs_norm,
            entry.at_checkpoint,
            entry.test
        );
    }
    let worst = report.worst_entry();
    println!(
        "battery {}: {}/{} tests pass (threshold {}, burn-in {}), worst {} = {}",
        if report.pass { "PASS" } else { "FAIL" },
        report.entries.iter().filter(|e| e.pass).count(),
        report.entries.len(),
        threshold,
        burn_in,
        worst.test,
        worst.max_abs_norm
    );

    if let Some(json_path) = cfg.json.map(PathBuf::from) {
        let envelope = json!({
            "command": "battery",
            "seq": seq_path.display().to_string(),
            "threshold": threshold,
            "burn_in": burn_in,
            "pass": report.pass,
            "worst": worst.test,
            "entries": report.entries.iter().map(|e| json!({
                "test": e.test,
                "max_abs_norm": e.max_abs_norm,
                "at_checkpoint": e.at_checkpoint,
                "pass": e.pass,
            })).collect::<Vec<_>>(),
        });
        write_json(&json_path, &envelope)?;
    }
    Ok(report.pass)
}

// --- shared block loading for set-valued commands ---

/// Collects the sequence blocks a set needs: the supplied file when its
/// kind matches and covers [1, cap], sieved on demand otherwise.
fn gather_blocks(
    sets: &[&SetSpec],
    seq_path: Option<&Path>,
    cap: u64,
) -> Result<Vec<SeqBlock>, CliError> {
    let mut kinds = Vec::new();
    for set in sets {
        kinds_needed(set, &mut kinds);
    }
    let supplied = seq_path.map(load_block).transpose()?;
    let mut blocks = Vec::new();
    for kind in kinds {
        let from_file = supplied
            .as_ref()
            .filter(|b| b.kind() == kind && b.lo() <= 1 && b.hi() > cap)
            .cloned();
        let block = match from_file {
            Some(b) => b,
            None => sieve_range(1, cap + 1, kind)?,
        };
        blocks.push(block);
    }
    Ok(blocks)
}

fn depth_json(d: &prlab_core::density::DepthEstimate) -> serde_json::Value {
    json!({
        "depth": d.depth,
        "checkpoints": d.checkpoints,
        "joint_counts": d.joint_counts,
        "level_counts": d.level_counts,
        "ratios": d.ratios,
        "final_value": d.final_value,
        "oscillation": d.oscillation,
    })
}

// --- density ---

fn cmd_density(cfg: RunConfig) -> Result<bool, CliError> {
    let set_text = require(cfg.set, "set")?;
    let cap = require(cfg.n, "n")?;
    let checkpoint_text = cfg.checkpoints.unwrap_or_else(|| "pow2".into());

    let set = parse_set(&set_text).map_err(CliError::Usage)?;
    let plan = parse_kplan(&checkpoint_text, cap).map_err(CliError::Usage)?;
    let blocks = gather_blocks(&[&set], cfg.seq.map(PathBuf::from).as_deref(), cap)?;
    let refs: Vec<&SeqBlock> = blocks.iter().collect();
    let store = SeqStore::with(&refs);
    let est = k_density(&set, &plan, &store)?;

    if let Some(csv) = cfg.csv.map(PathBuf::from) {
        let mut text = String::from("k,count,ratio\n");
        for ((k, c), r) in est.checkpoints.iter().zip(&est.counts).zip(&est.ratios) {
            text.push_str(&format!("{k},{c},{r}\n"));
        }
        fs::write(&csv, text)?;
    }
    if let Some(json_path) = cfg.json.map(PathBuf::from) {
        let envelope = json!({
            "command": "density",
            "set": set.to_string(),
            "checkpoints": est.checkpoints,
            "counts": est.counts,
            "ratios": est.ratios,
            "final_value": est.final_value,
            "oscillation": est.oscillation,
        });
        write_json(&json_path, &envelope)?;
    }
    println!(
        "dens_K({set}) = {} at cap {} (oscillation {})",
        est.final_value,
        plan.cap(),
        est.oscillation
    );
    Ok(true)
}

// --- measure ---

fn cmd_measure(cfg: RunConfig) -> Result<bool, CliError> {
    let event_text = require(cfg.event, "event")?;
    let cap = require(cfg.n, "n")?;
    let depth = cfg.depth.unwrap_or(3);

    let psi = parse_set(&event_text).map_err(CliError::Usage)?;
    let chain = Chain::powers_of_two(depth)?;
    let plan = KPlan::powers_of_two(cap)?;
    let blocks = gather_blocks(&[&psi], cfg.seq.map(PathBuf::from).as_deref(), cap)?;
    let refs: Vec<&SeqBlock> = blocks.iter().collect();
    let store = SeqStore::with(&refs);
    let report = measure_event(&psi, &chain, &plan, &store)?;

    for d in &report.report.per_depth {
        println!("depth {}: ratio {} (oscillation {})", d.depth, d.final_value, d.oscillation);
    }
    println!("measure estimate for [{}] = {}", report.event, report.probability);

    if let Some(json_path) = cfg.json.map(PathBuf::from) {
        let envelope = json!({
            "command": "measure",
            "event": report.event,
            "chain_depth": report.chain_depth,
            "probability": report.probability,
            "per_depth": report.report.per_depth.iter().map(depth_json).collect::<Vec<_>>(),
        });
        write_json(&json_path, &envelope)?;
    }
    Ok(true)
}

// --- facts ---

fn cmd_facts(cfg: RunConfig) -> Result<bool, CliError> {
    let x = parse_set(&require(cfg.x, "x")?).map_err(CliError::Usage)?;
    let y = parse_set(&require(cfg.y, "y")?).map_err(CliError::Usage)?;
    let z = parse_set(&require(cfg.z, "z")?).map_err(CliError::Usage)?;
    let cap = require(cfg.n, "n")?;
    let tol = cfg.tol.unwrap_or(0.02);
    let depth = cfg.depth.unwrap_or(3);

    let chain = Chain::powers_of_two(depth)?;
    let plan = KPlan::powers_of_two(cap)?;
    let blocks = gather_blocks(&[&x, &y, &z], cfg.seq.map(PathBuf::from).as_deref(), cap)?;
    let refs: Vec<&SeqBlock> = blocks.iter().collect();
    let store = SeqStore::with(&refs);
    let report = check_facts(&x, &y, &z, &chain, &plan, &store, tol)?;

    for v in &report.verdicts {
        let status = if !v.applicable {
            "N/A "
        } else if v.pass {
            "PASS"
        } else {
            "FAIL"
        };
        println!("{status} [{}] {}", v.fact, v.detail);
    }
    println!("facts {}", if report.pass { "PASS" } else { "FAIL" });

    if let Some(json_path) = cfg.json.map(PathBuf::from) {
        let envelope = json!({
            "command": "facts",
            "x": x.to_string(),
            "y": y.to_string(),
            "z": z.to_string(),
            "tol": tol,
            "pass": report.pass,
            "verdicts": report.verdicts.iter().map(|v| json!({
                "fact": v.fact,
                "exact": v.exact,
                "applicable": v.applicable,
                "pass": v.pass,
                "tolerance": v.tolerance,
                "detail": v.detail,
            })).collect::<Vec<_>>(),
        });
        write_json(&json_path, &envelope)?;
    }
    Ok(report.pass)
}

// --- prg ---

fn cmd_prg(cfg: RunConfig) -> Result<bool, CliError> {
    let key = match cfg.key.map(PathBuf::from) {
        Some(path) => {
            let text = fs::read_to_string(&path)?;
            serde_json::from_str::<TrapdoorKey>(&text)
                .map_err(|e| CliError::Data(format!("key {}: {e}", path.display())))?
        }
        None => {
            let bits = cfg.bits.unwrap_or(32);
            let seed = cfg.seed.unwrap_or(7);
            TrapdoorKey::generate(bits, seed)?
        }
    };
    if let Some(key_out) = cfg.key_out.map(PathBuf::from) {
        let mut text = serde_json::to_string_pretty(&key).expect("key serializes");
        text.push('\n');
        fs::write(&key_out, text)?;
    }

    let schedule_text = require(cfg.schedule, "schedule")?;
    let exponents: Vec<u32> = parse_u64_list(&schedule_text)
        .map_err(CliError::Usage)?
        .into_iter()
        .map(|k| u32::try_from(k).map_err(|_| CliError::Usage(format!("exponent {k} too large"))))
        .collect::<Result<_, _>>()?;
    let schedule = BlockSchedule::new(exponents)?;

    let range_text = require(cfg.range, "range")?;
    let (lo, hi) = parse_range(&range_text).map_err(CliError::Usage)?;
    let out = cfg
        .out
        .map(PathBuf::from)
        .unwrap_or_else(|| cache_dir().join(format!("prg_{lo}_{hi}.prseq")));

    let block = prg_sequence(&key, &schedule, lo, hi)?;
    save_block(&block, &out)?;
    println!(
        "wrote {} prg values for [{lo}, {hi}) to {} (modulus {} bits, coverage {})",
        block.len(),
        out.display(),
        key.bits(),
        schedule.coverage()
    );
    Ok(true)
}

// --- transfer ---

fn cmd_transfer(cfg: RunConfig) -> Result<bool, CliError> {
    let n_max = cfg.n.unwrap_or(1_000_000);
    let n0 = cfg.n0.unwrap_or(10);
    let report = mu_lambda_transfer_check(n_max, n0)?;
    println!(
        "checked {} decompositions up to {}: {} counterexamples; tail bound sum k^-2 (k > {}) < {} (partial {:.6})",
        report.checked,
        report.n_max,
        report.counterexamples.len(),
        report.n0,
        report.tail_bound,
        report.tail_partial
    );
    if let Some(json_path) = cfg.json.map(PathBuf::from) {
        let envelope = json!({
            "command": "transfer",
            "n_max": report.n_max,
            "n0": report.n0,
            "checked": report.checked,
            "counterexamples": report.counterexamples.iter().map(|c| json!({
                "n": c.n, "k": c.k, "i": c.i,
                "lambda_n": c.lambda_n, "mu_i": c.mu_i,
            })).collect::<Vec<_>>(),
            "tail_bound": report.tail_bound,
            "tail_partial": report.tail_partial,
            "pass": report.pass(),
        });
        write_json(&json_path, &envelope)?;
    }
    Ok(report.pass())
}

// --- selftest ---

fn cmd_selftest(cfg: RunConfig) -> Result<bool, CliError> {
    let mut all_pass = true;
    let mut suite = |name: &str, pass: bool| {
        println!("{} {name}", if pass { "PASS" } else { "FAIL" });
        all_pass &= pass;
    };

    // Sieve against the factorization path.
    let lam = sieve_range(1, 100_001, SeqKind::Liouville)?;
    let mob = sieve_range(1, 100_001, SeqKind::Mobius)?;
    let mut oracle_ok = true;
    for n in 1..=100_000u64 {
        oracle_ok &= lam.get(n) == value_at(n, SeqKind::Liouville)?;
        oracle_ok &= mob.get(n) == value_at(n, SeqKind::Mobius)?;
    }
    suite("oracle equivalence (lambda, mu vs factorization, n <= 1e5)", oracle_ok);

    let mut squares_ok = true;
    for n in 1..=10_000u64 {
        squares_ok &= value_at(n * n, SeqKind::Liouville)? == 1;
    }
    suite("lambda(n^2) = +1 (n <= 1e4)", squares_ok);

    let lam2 = sieve_range(1, 200_001, SeqKind::Liouville)?;
    let mut doubling_ok = true;
    for n in 1..=100_000u64 {
        doubling_ok &= lam2.get(2 * n) == -lam2.get(n);
    }
    suite("lambda(2n) = -lambda(n) (n <= 1e5)", doubling_ok);

    let transfer = mu_lambda_transfer_check(100_000, 10)?;
    suite("mu-lambda transfer (n <= 1e5)", transfer.pass());

    let plan = KPlan::powers_of_two(1_000_000)?;
    let store = SeqStore::empty();
    let additivity =
        prlab_core::density::fact_additivity(&SetSpec::evens(), &SetSpec::odds(), &plan, &store)?;
    suite("density additivity (evens + odds, k <= 1e6)", additivity.pass);

    if let Some(path) = cfg.seq.map(PathBuf::from) {
        let block = load_block(&path)?;
        let mut spot_ok = true;
        if matches!(block.kind(), SeqKind::Liouville | SeqKind::Mobius) {
            let len = block.hi() - block.lo();
            let stride = (len / 100).max(1);
            let mut n = block.lo().max(1);
            while n < block.hi() {
                spot_ok &= block.get(n) == value_at(n, block.kind())?;
                n += stride;
            }
        }
        suite("cache file integrity", spot_ok);
    }

    println!("selftest {}", if all_pass { "PASS" } else { "FAIL" });
    Ok(all_pass)
}
