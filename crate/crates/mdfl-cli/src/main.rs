//! Command-line driver for the mdfl library.
//!
//! Subcommands mirror the library's evaluation entry points: scenario
//! generation, RMSE-bound heatmaps, node-count sweeps, Monte-Carlo bound
//! validation, and the signal-level initialization/association run. All
//! outputs are CSV or PGM files with units documented in their headers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mdfl::crlb::{write_grid_csv, write_grid_pgm};
use mdfl::experiments::{
    central_region, make_paper_room, run_association, run_crlb_map, run_monte_carlo_validation,
    run_node_sweep, write_association_csv, write_sweep_csv, write_validation_csv, MapMode,
    MlGridSearch,
};
use mdfl::{Point, Scenario};

#[derive(Parser)]
#[command(name = "mdfl", version, about = "Multipath-enhanced device-free localization")]
struct Cli {
    /// Worker threads for grid and Monte-Carlo evaluation (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a bundled scenario file.
    MakeScenario(MakeScenarioArgs),
    /// Evaluate the RMSE lower bound over the scenario grid.
    CrlbMap(CrlbMapArgs),
    /// Expected RMSE versus node count for nested surface subsets.
    Sweep(SweepArgs),
    /// Monte-Carlo validation of the bound with an ML grid estimator.
    Simulate(SimulateArgs),
    /// Idle-channel initialization and data association report.
    Associate(AssociateArgs),
}

#[derive(Args)]
struct MakeScenarioArgs {
    /// Scenario preset.
    #[arg(value_enum)]
    preset: Preset,
    /// Output scenario file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 23 m x 15.5 m four-wall room, 20-node circle of radius 4 m.
    PaperRoom,
}

#[derive(Args)]
struct CrlbMapArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// dfl = direct paths only, mdfl = direct plus visible reflections.
    #[arg(long, value_enum)]
    mode: Mode,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Dfl,
    Mdfl,
}

impl From<Mode> for MapMode {
    fn from(m: Mode) -> MapMode {
        match m {
            Mode::Dfl => MapMode::Dfl,
            Mode::Mdfl => MapMode::Mdfl,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Node counts as start:end[:step], e.g. 5:20 or 5:20:3.
    #[arg(long)]
    nodes: String,
    /// Side length of the central statistics region, meters.
    #[arg(long, default_value_t = 2.0)]
    region: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// True user x position, meters.
    #[arg(long)]
    user_x: f64,
    /// True user y position, meters.
    #[arg(long)]
    user_y: f64,
    /// Monte-Carlo trials.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Seed override (defaults to the scenario seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Optional output directory for the per-position CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AssociateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Seed override (defaults to the scenario seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the report.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write per-link snapshot estimate dumps.
    #[arg(long)]
    dump_snapshots: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::MakeScenario(args) => make_scenario(args),
        Command::CrlbMap(args) => crlb_map(args),
        Command::Sweep(args) => sweep(args),
        Command::Simulate(args) => simulate(args),
        Command::Associate(args) => associate(args),
    }
}

fn make_scenario(args: MakeScenarioArgs) -> Result<()> {
    let scenario = match args.preset {
        Preset::PaperRoom => make_paper_room()?,
    };
    scenario.save(&args.out)?;
    println!(
        "wrote {} ({} surfaces, {} nodes, {} links)",
        args.out.display(),
        scenario.environment.len(),
        scenario.nodes.len(),
        scenario.links.len()
    );
    Ok(())
}

fn crlb_map(args: CrlbMapArgs) -> Result<()> {
    let scenario = Scenario::load(&args.scenario)?;
    let mode: MapMode = args.mode.into();
    let map = run_crlb_map(&scenario, mode)?;
    std::fs::create_dir_all(&args.out)?;

    let csv_path = args.out.join(format!("rmse_{}.csv", mode.label()));
    let mut csv = BufWriter::new(File::create(&csv_path)?);
    write_grid_csv(&mut csv, &map.result)?;

    let pgm_path = args.out.join(format!("rmse_{}.pgm", mode.label()));
    let mut pgm = BufWriter::new(File::create(&pgm_path)?);
    write_grid_pgm(&mut pgm, &map.result)?;

    let summary_path = args.out.join(format!("summary_{}.txt", mode.label()));
    let mut summary = BufWriter::new(File::create(&summary_path)?);
    writeln!(summary, "mode: {}", mode.label())?;
    writeln!(summary, "grid_points: {}", map.result.values.len())?;
    writeln!(summary, "effective_area_fraction_rmse_lt_1m: {}", map.effective_fraction)?;

    println!(
        "{}: effective area fraction {:.4} -> {}",
        mode.label(),
        map.effective_fraction,
        csv_path.display()
    );
    Ok(())
}

fn parse_node_range(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let (start, end, step) = match parts.as_slice() {
        [s, e] => (s.parse()?, e.parse()?, 3usize),
        [s, e, st] => (s.parse()?, e.parse()?, st.parse()?),
        _ => bail!("node range must be start:end[:step]"),
    };
    if step == 0 || end < start {
        bail!("invalid node range `{spec}`");
    }
    Ok((start..=end).step_by(step).collect())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let scenario = Scenario::load(&args.scenario)?;
    let counts = parse_node_range(&args.nodes)?;
    let region = central_region(Point::new(0.0, 0.0), args.region, 0.1)?;
    let result = run_node_sweep(&scenario, &counts, &region)?;
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("sweep.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    write_sweep_csv(&mut out, &result)?;
    println!("wrote {} ({} rows)", path.display(), result.rows.len());
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let scenario = Scenario::load(&args.scenario)?;
    let seed = args.seed.unwrap_or(scenario.seed);
    let position = Point::new(args.user_x, args.user_y);
    let rows = run_monte_carlo_validation(
        &scenario,
        &[position],
        args.trials,
        seed,
        &MlGridSearch::default(),
    )?;
    let row = &rows[0];
    println!(
        "position ({}, {}): empirical RMSE {:.4} m (se {:.4}), CRLB bound {:.4} m over {} trials",
        row.position.x,
        row.position.y,
        row.empirical_rmse_m,
        row.standard_error_m,
        row.bound_m,
        row.trials
    );
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir)?;
        let path = dir.join("validation.csv");
        let mut out = BufWriter::new(File::create(&path)?);
        write_validation_csv(&mut out, &rows)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn associate(args: AssociateArgs) -> Result<()> {
    let scenario = Scenario::load(&args.scenario)?;
    let seed = args.seed.unwrap_or(scenario.seed);
    let report = run_association(&scenario, seed)?;
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("association_report.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    write_association_csv(&mut out, &report)?;

    let matched: usize = report.iter().map(|la| la.result.pairs.len()).sum();
    let expected: usize = report.iter().map(|la| la.expected_m.len()).sum();
    println!(
        "associated {matched}/{expected} expected components over {} links -> {}",
        report.len(),
        path.display()
    );

    if args.dump_snapshots {
        dump_snapshots(&scenario, seed, &args.out)?;
    }
    Ok(())
}

fn dump_snapshots(scenario: &Scenario, seed: u64, dir: &Path) -> Result<()> {
    use mdfl::channel::{dump_snapshots_csv, idle_realization, snapshot_estimates, EstimatorConfig, Pulse};
    let cfg = &scenario.channel;
    let pulse = Pulse::root_raised_cosine(
        cfg.bandwidth_hz,
        cfg.rolloff,
        cfg.sample_rate_hz,
        cfg.symbol_duration_s,
    )?;
    let est_cfg = EstimatorConfig {
        max_components: cfg.max_components,
        detection_margin_db: cfg.detection_margin_db,
        ..EstimatorConfig::for_pulse(&pulse)
    };
    for link in &scenario.links {
        let realization = idle_realization(
            link,
            &scenario.environment,
            scenario.max_order,
            cfg.noise_variance,
            cfg.reflection_coeff,
            seed,
        )?;
        let estimates = snapshot_estimates(
            link.index,
            &realization,
            &pulse,
            cfg.t_ini_s,
            cfg.t_g_s,
            &est_cfg,
            seed,
        )?;
        let path = dir.join(format!("snapshots_link{:04}.csv", link.index));
        let mut out = BufWriter::new(File::create(path)?);
        dump_snapshots_csv(&mut out, &estimates)?;
    }
    println!("wrote snapshot dumps for {} links", scenario.links.len());
    Ok(())
}
