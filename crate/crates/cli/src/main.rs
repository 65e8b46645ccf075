//! Command-line front end: reproducible, file-based spectral-gap and
//! edge-mode experiments.
//!
//! Exit codes: 0 on success, 1 on a compute error, 2 on a usage error.
//! `QUASISPEC_THREADS` caps internal parallelism.

use clap::{Args, Parser, Subcommand};
use quasispec_core::discretize::{
    assemble, eigensolve_with, rotate_clusters, write_spectrum_csv, DEFAULT_H,
};
use quasispec_core::edgemode::{
    decay_envelope, default_scan_level, scan_edge_modes, scan_structure_modes, write_hits_csv,
};
use quasispec_core::io::{create_file, grid};
use quasispec_core::robustness::{robustness_sweep, track_mode, write_track_csv};
use quasispec_core::spectrum::{gap_map, gap_test, TraceStatus};
use quasispec_core::tiling::{
    cells_from_labels, expand, reflected_profile_from_cells, LabelSequence, MaterialProfile,
    TilingRule,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "quasispec",
    about = "Spectral gaps and reflection-induced edge modes of recursively tiled media",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the trace map at one (omega, r) point and write the sequence.
    Trace(TraceArgs),
    /// Gap map over an (omega, r) grid.
    GapMap(GapMapArgs),
    /// Scan for edge modes inside certified gaps.
    EdgeScan(EdgeScanArgs),
    /// Finite-difference modes of a finite reflected structure.
    Modes(ModesArgs),
    /// Disorder sweep of the finite structure's spectrum.
    Robustness(RobustnessArgs),
    /// Decay-envelope rate at one in-gap frequency.
    Envelope(EnvelopeArgs),
}

/// `lo:hi:step` grid specification (inclusive of lo; hi kept when it lands
/// on the grid).
#[derive(Clone, Debug)]
struct GridSpec {
    lo: f64,
    hi: f64,
    step: f64,
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:step, got {s:?}"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        if !(nums[2] > 0.0) {
            return Err("step must be positive".into());
        }
        if nums[1] < nums[0] {
            return Err("hi must be >= lo".into());
        }
        Ok(GridSpec { lo: nums[0], hi: nums[1], step: nums[2] })
    }
}

impl GridSpec {
    fn points(&self) -> Vec<f64> {
        grid(self.lo, self.hi, self.step)
    }
}

fn parse_rule(spec: &str) -> Result<TilingRule, String> {
    if spec.eq_ignore_ascii_case("fibonacci") {
        return Ok(TilingRule::Fibonacci);
    }
    if let Some(seed) = spec.strip_prefix("periodic:") {
        let seq = LabelSequence::parse(seed).map_err(|e| e.to_string())?;
        return Ok(TilingRule::Periodic(seq));
    }
    if let Some(path) = spec.strip_prefix("custom:") {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
        return parse_custom_rule(&text);
    }
    Err(format!(
        "unknown rule {spec:?}; expected fibonacci, periodic:<SEED>, or custom:<FILE>"
    ))
}

/// Custom rule JSON: `{"m1": "AB", "suffix_plan": [[1], [1, 2]]}`.
fn parse_custom_rule(text: &str) -> Result<TilingRule, String> {
    #[derive(serde::Deserialize)]
    struct Doc {
        m1: String,
        suffix_plan: Vec<Vec<u32>>,
    }
    let doc: Doc = serde_json::from_str(text).map_err(|e| format!("bad custom rule: {e}"))?;
    let m1 = LabelSequence::parse(&doc.m1).map_err(|e| e.to_string())?;
    let rule = TilingRule::Custom { m1, suffix_plan: doc.suffix_plan };
    rule.validate().map_err(|e| e.to_string())?;
    Ok(rule)
}

/// Shared construction flags for finite reflected structures.
#[derive(Args, Clone)]
struct StructureArgs {
    /// Tiling rule: fibonacci | periodic:<SEED> | custom:<FILE>
    #[arg(long, default_value = "fibonacci")]
    rule: String,
    /// Material contrast: speed of B cells (A cells have speed 1).
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    /// Cells per side of the reflected structure.
    #[arg(long, default_value_t = 55)]
    cells_per_side: usize,
    /// Read the expanded word from the outer edge inward instead of from the
    /// interface outward.
    #[arg(long)]
    reverse_word: bool,
    /// Exchange the roles of the A and B materials.
    #[arg(long)]
    swap_labels: bool,
    /// Load the profile from a JSON file instead of building it from a rule.
    #[arg(long)]
    profile_json: Option<PathBuf>,
}

impl StructureArgs {
    fn build(&self) -> Result<MaterialProfile, String> {
        if let Some(path) = &self.profile_json {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("cannot read profile: {e}"))?;
            return MaterialProfile::from_json(&text).map_err(|e| e.to_string());
        }
        let cells = self.right_cells()?;
        reflected_profile_from_cells(&cells).map_err(|e| e.to_string())
    }

    /// Right-half cell speeds, outward from the junction.
    fn right_cells(&self) -> Result<Vec<f64>, String> {
        let rule = parse_rule(&self.rule)?;
        let mut level = 1;
        let mut word = loop {
            let w = expand(&rule, level).map_err(|e| e.to_string())?;
            if w.len() >= self.cells_per_side {
                break w;
            }
            level += 1;
            if level > 64 {
                return Err("rule does not grow enough to cover the requested size".into());
            }
        };
        if self.swap_labels {
            word = word.swapped();
        }
        if self.reverse_word {
            word = word.truncated(self.cells_per_side).map_err(|e| e.to_string())?.reversed();
        } else {
            word = word.truncated(self.cells_per_side).map_err(|e| e.to_string())?;
        }
        Ok(cells_from_labels(&word, 1.0, self.r))
    }
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Output CSV path (columns n, x).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GapMapArgs {
    /// Tiling rule: fibonacci | periodic:<SEED>
    #[arg(long, default_value = "fibonacci")]
    rule: String,
    /// Frequency grid lo:hi:step.
    #[arg(long)]
    omega: GridSpec,
    /// Contrast grid lo:hi:step.
    #[arg(long)]
    r: GridSpec,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also write a JSON copy here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EdgeScanArgs {
    /// Frequency window lo:hi:step for the scan grid.
    #[arg(long)]
    omega: GridSpec,
    /// Scan a finite structure (built from the structure flags) instead of
    /// the rule's level matrices.
    #[arg(long)]
    structure: bool,
    /// Level of the transfer-matrix sequence used for rule scans
    /// (default: 12 for Fibonacci/custom rules, 8 for periodic seeds).
    #[arg(long)]
    level: Option<u32>,
    #[command(flatten)]
    geometry: StructureArgs,
    /// Output CSV path (columns omega, symmetry, kappa, level).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModesArgs {
    #[command(flatten)]
    geometry: StructureArgs,
    /// Grid step of the finite-difference discretization.
    #[arg(long, default_value_t = DEFAULT_H)]
    h: f64,
    /// Keep all eigenpairs with omega below this cutoff.
    #[arg(long, default_value_t = 5.0)]
    omega_max: f64,
    /// Localization window half-width.
    #[arg(long, default_value_t = 10.0)]
    window: f64,
    /// Localization mass threshold.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Rotate near-degenerate clusters to concentrate interface mass.
    #[arg(long)]
    rotate_clusters: bool,
    /// Output prefix: writes <prefix>_spectrum.csv and one
    /// <prefix>_mode_<k>.csv per localized mode.
    #[arg(long)]
    out_prefix: String,
}

#[derive(Args)]
struct RobustnessArgs {
    #[command(flatten)]
    geometry: StructureArgs,
    #[arg(long, default_value_t = 0.1)]
    sigma_max: f64,
    /// Number of evenly spaced sigma values on [0, sigma_max].
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    trials: u32,
    #[arg(long, default_value_t = 2.0)]
    omega_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_H)]
    h: f64,
    /// Output CSV path (columns sigma, trial, omega, localization, is_localized).
    #[arg(long)]
    out: PathBuf,
    /// Track the localized mode nearest this reference frequency.
    #[arg(long)]
    track: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    track_tol: f64,
    /// Output CSV for the tracked mode table.
    #[arg(long)]
    track_out: Option<PathBuf>,
}

#[derive(Args)]
struct EnvelopeArgs {
    /// Tiling rule: fibonacci | periodic:<SEED> | custom:<FILE>
    #[arg(long, default_value = "fibonacci")]
    rule: String,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    omega: f64,
    /// Transfer-matrix level for the rate estimate (default: 10 for
    /// Fibonacci/custom rules, 1 for periodic seeds).
    #[arg(long)]
    level: Option<u32>,
    /// Optional CSV of envelope samples exp(-kappa |x|) over [-span, span].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 55.0)]
    span: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() {
    if let Ok(value) = std::env::var("QUASISPEC_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() {}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Trace(args) => cmd_trace(args),
        Command::GapMap(args) => cmd_gap_map(args),
        Command::EdgeScan(args) => cmd_edge_scan(args),
        Command::Modes(args) => cmd_modes(args),
        Command::Robustness(args) => cmd_robustness(args),
        Command::Envelope(args) => cmd_envelope(args),
    }
}

fn cmd_trace(args: TraceArgs) -> Result<(), String> {
    let seq = gap_test(args.omega, args.r, args.max_iter).map_err(|e| e.to_string())?;
    let w = create_file(&args.out).map_err(|e| e.to_string())?;
    seq.write_csv(w).map_err(|e| e.to_string())?;
    match seq.status {
        TraceStatus::DoublingAttained => println!(
            "doubling certificate at iteration {} ({} values written)",
            seq.terminated_at.unwrap(),
            seq.values.len()
        ),
        TraceStatus::BoundedToHorizon => println!(
            "no certificate within {} values (max |x| = {:.6})",
            seq.values.len(),
            seq.max_abs()
        ),
        TraceStatus::Overflowed => println!(
            "overflowed the floating guard after {} values without a certificate",
            seq.values.len()
        ),
    }
    Ok(())
}

fn cmd_gap_map(args: GapMapArgs) -> Result<(), String> {
    let rule = parse_rule(&args.rule)?;
    let omegas = args.omega.points();
    let rs = args.r.points();
    match &rule {
        TilingRule::Periodic(seed) => {
            // periodic media decide gaps from the seed-block trace alone
            use quasispec_core::spectrum::{periodic_gap_test, PeriodicVerdict};
            let w = create_file(&args.out).map_err(|e| e.to_string())?;
            let mut w = w;
            use std::io::Write;
            writeln!(w, "r,omega,in_gap,doubling_iteration").map_err(|e| e.to_string())?;
            for r in &rs {
                for om in &omegas {
                    let verdict = periodic_gap_test(seed, *om, *r).map_err(|e| e.to_string())?;
                    let in_gap = verdict == PeriodicVerdict::InGap;
                    writeln!(w, "{},{},{},", r, om, in_gap).map_err(|e| e.to_string())?;
                }
            }
            println!("wrote {} x {} periodic gap map to {}", rs.len(), omegas.len(), args.out.display());
        }
        _ => {
            let map = gap_map(&omegas, &rs, args.max_iter).map_err(|e| e.to_string())?;
            let w = create_file(&args.out).map_err(|e| e.to_string())?;
            map.write_csv(w).map_err(|e| e.to_string())?;
            if let Some(json_path) = &args.json {
                use std::io::Write;
                let mut w = create_file(json_path).map_err(|e| e.to_string())?;
                w.write_all(map.to_json().as_bytes()).map_err(|e| e.to_string())?;
            }
            println!("wrote {} x {} gap map to {}", rs.len(), omegas.len(), args.out.display());
        }
    }
    Ok(())
}

fn cmd_edge_scan(args: EdgeScanArgs) -> Result<(), String> {
    let hits = if args.structure {
        let cells = args.geometry.right_cells()?;
        scan_structure_modes(&cells, args.omega.lo, args.omega.hi, args.omega.step)
            .map_err(|e| e.to_string())?
    } else {
        let rule = parse_rule(&args.geometry.rule)?;
        let level = args.level.unwrap_or_else(|| default_scan_level(&rule));
        scan_edge_modes(
            args.omega.lo,
            args.omega.hi,
            args.geometry.r,
            &rule,
            level,
            args.omega.step,
        )
        .map_err(|e| e.to_string())?
    };
    let w = create_file(&args.out).map_err(|e| e.to_string())?;
    write_hits_csv(&hits, w).map_err(|e| e.to_string())?;
    println!("located {} edge mode(s); wrote {}", hits.len(), args.out.display());
    Ok(())
}

fn cmd_modes(args: ModesArgs) -> Result<(), String> {
    let profile = args.geometry.build()?;
    let op = assemble(&profile, args.h).map_err(|e| e.to_string())?;
    let mut modes = eigensolve_with(&op, args.omega_max, args.window, args.threshold)
        .map_err(|e| e.to_string())?;
    if args.rotate_clusters {
        rotate_clusters(&mut modes, args.window, args.threshold, 1e-6);
    }
    let spectrum_path = PathBuf::from(format!("{}_spectrum.csv", args.out_prefix));
    let w = create_file(&spectrum_path).map_err(|e| e.to_string())?;
    write_spectrum_csv(&modes, w).map_err(|e| e.to_string())?;
    let mut written = 0;
    for (k, m) in modes.iter().enumerate().filter(|(_, m)| m.is_localized) {
        let path = PathBuf::from(format!("{}_mode_{}.csv", args.out_prefix, k));
        let w = create_file(&path).map_err(|e| e.to_string())?;
        m.write_csv(w).map_err(|e| e.to_string())?;
        written += 1;
    }
    println!(
        "{} eigenpairs below omega = {}, {} localized; spectrum in {}",
        modes.len(),
        args.omega_max,
        written,
        spectrum_path.display()
    );
    Ok(())
}

fn cmd_robustness(args: RobustnessArgs) -> Result<(), String> {
    let profile = args.geometry.build()?;
    let sweep = robustness_sweep(
        &profile,
        args.sigma_max,
        args.steps,
        args.trials,
        args.omega_max,
        args.seed,
        args.h,
        10.0,
        0.5,
    )
    .map_err(|e| e.to_string())?;
    let w = create_file(&args.out).map_err(|e| e.to_string())?;
    sweep.write_csv(w).map_err(|e| e.to_string())?;
    println!(
        "swept {} sigma value(s) x {} trial(s), {} spectrum rows; wrote {}",
        sweep.sigma_values.len(),
        sweep.trials_per_sigma,
        sweep.rows.len(),
        args.out.display()
    );
    if let Some(reference) = args.track {
        let rows = track_mode(&sweep, reference, args.track_tol).map_err(|e| e.to_string())?;
        if let Some(path) = &args.track_out {
            let w = create_file(path).map_err(|e| e.to_string())?;
            write_track_csv(&rows, w).map_err(|e| e.to_string())?;
            println!("tracked mode near {} written to {}", reference, path.display());
        } else {
            let hits = rows.iter().filter(|r| r.omega_matched.is_some()).count();
            println!("tracked mode near {}: {}/{} hits", reference, hits, rows.len());
        }
    }
    Ok(())
}

fn cmd_envelope(args: EnvelopeArgs) -> Result<(), String> {
    let rule = parse_rule(&args.rule)?;
    let level = args.level.unwrap_or_else(|| {
        quasispec_core::edgemode::default_envelope_level(&rule)
    });
    let kappa = decay_envelope(args.omega, &rule, args.r, level).map_err(|e| e.to_string())?;
    println!("kappa = {kappa:.10} (level {level})");
    if let Some(path) = &args.out {
        use std::io::Write;
        let mut w = create_file(path).map_err(|e| e.to_string())?;
        writeln!(w, "x,envelope").map_err(|e| e.to_string())?;
        let n = 2000;
        for i in 0..=n {
            let x = -args.span + 2.0 * args.span * i as f64 / n as f64;
            writeln!(w, "{},{}", x, (-kappa * x.abs()).exp()).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}
