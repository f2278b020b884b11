//! Command-line front end for the basin experiments.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 verification failure.

use basinlab::boettcher::verify_annulus_coverage;
use basinlab::harness::{
    emit_outputs, load_config, prepare, run_experiment, tree_summary, write_coverage_csv, write_samples_csv,
    HarnessError, Scenario, ScenarioConfig,
};
use basinlab::FORMAT_HEADER;
use clap::{Parser, Subcommand};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "basin-metric-lab", version, about = "Distances from basin points to backward orbits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, or `-` for the main table on standard output.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Fixed points with multipliers and classes.
    FixedPoints,
    /// Basin raster: component table and image.
    Basin,
    /// Backward orbit tree.
    Tree,
    /// Check that every annulus component holds a tree node.
    VerifyLemma,
    /// Full sampled experiment.
    Experiment,
    /// Basin image, plus level contours for a basin of infinity.
    Render,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Verification(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("i/o: {e}"))
    }
}

enum Target {
    Stdout,
    Dir(PathBuf),
}

impl Target {
    /// Writes `name`, or prints it when the target is standard output.
    fn write(&self, name: &str, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
        match self {
            Target::Stdout => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                f(&mut lock)?;
                lock.flush()
            }
            Target::Dir(dir) => {
                fs::create_dir_all(dir)?;
                let path = dir.join(name);
                let mut w = BufWriter::new(File::create(&path)?);
                f(&mut w)?;
                w.flush()?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
        }
    }

    /// Side files are only written to a directory.
    fn write_extra(&self, name: &str, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
        match self {
            Target::Stdout => Ok(()),
            Target::Dir(_) => self.write(name, f),
        }
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, Failure> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("--config <path> is required".into()))?;
    let mut cfg = load_config(path).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(r) = cli.resolution {
        cfg.grid.resolution = r;
    }
    if let Some(d) = cli.depth {
        cfg.depth = d;
    }
    if let Some(s) = cli.samples {
        cfg.sample_count = s;
    }
    if let Some(s) = cli.seed {
        cfg.sample_seed = s;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn target(cli: &Cli, cfg: &ScenarioConfig) -> Target {
    match cli.out.as_deref() {
        Some("-") => Target::Stdout,
        Some(dir) => Target::Dir(PathBuf::from(dir)),
        None => Target::Dir(cfg.output.clone()),
    }
}

fn fixed_points(cli: &Cli, cfg: &ScenarioConfig) -> Result<(), Failure> {
    let map = cfg.map().map_err(|e| Failure::Usage(e.to_string()))?;
    let fps = map.fixed_points().map_err(|e| Failure::Numerical(e.to_string()))?;
    let csv = |w: &mut dyn Write| -> io::Result<()> {
        writeln!(w, "# {FORMAT_HEADER}")?;
        writeln!(w, "re,im,chart,multiplier_abs,class,multiplicity")?;
        for f in &fps {
            let p = f.location;
            writeln!(
                w,
                "{:e},{:e},{},{:e},{:?},{}",
                p.re,
                p.im,
                p.chart,
                f.multiplier.norm(),
                f.class,
                f.multiplicity
            )?;
        }
        Ok(())
    };
    match cli.out.as_deref() {
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "{:<36} {:>14} {:<16} {:>4}", "point", "|multiplier|", "class", "mult")?;
            for f in &fps {
                writeln!(
                    out,
                    "{:<36} {:>14.6e} {:<16} {:>4}",
                    f.location.to_string(),
                    f.multiplier.norm(),
                    format!("{:?}", f.class),
                    f.multiplicity
                )?;
            }
            Ok(())
        }
        Some(_) => Ok(target(cli, cfg).write("fixed_points.csv", csv)?),
    }
}

fn basin(cli: &Cli, cfg: &ScenarioConfig) -> Result<(), Failure> {
    let mut c = cfg.clone();
    c.depth = 1;
    let prep = prepare(&c)?;
    let grid = &prep.grid;
    let out = target(cli, cfg);
    out.write("basin.csv", |w| {
        writeln!(w, "# {FORMAT_HEADER}")?;
        writeln!(w, "component_id,cells")?;
        for id in 1..=grid.component_count() as u32 {
            writeln!(w, "{id},{}", grid.component_size(id))?;
        }
        Ok(())
    })?;
    out.write_extra("basin.ppm", |mut w| grid.write_ppm(&mut w))?;
    eprintln!(
        "attracting point {}: {} member cells, {} components, area fraction {:.4}",
        prep.attracting_point,
        grid.member_count(),
        grid.component_count(),
        grid.member_area() / grid.total_area()
    );
    Ok(())
}

fn tree(cli: &Cli, cfg: &ScenarioConfig) -> Result<(), Failure> {
    let prep = prepare(cfg)?;
    target(cli, cfg).write("tree.csv", |mut w| prep.tree.write_csv(&mut w))?;
    let s = tree_summary(&prep.tree);
    eprintln!(
        "base point {} ({}): {} nodes to depth {}{}",
        prep.base_point,
        prep.base_rule,
        s.nodes,
        s.effective_depth,
        if s.budget_exceeded { " (node budget reached)" } else { "" }
    );
    Ok(())
}

fn verify_lemma(cli: &Cli, cfg: &ScenarioConfig) -> Result<(), Failure> {
    let mut c = cfg.clone();
    c.scenario = Scenario::BasinOfInfinity;
    c.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let prep = prepare(&c)?;
    let dec = prep.annuli.as_ref().expect("basin-of-infinity scenario builds annuli");
    let report = verify_annulus_coverage(dec, &prep.tree);
    let out = target(cli, cfg);
    out.write("coverage.csv", |mut w| write_coverage_csv(&report, &mut w))?;
    for l in &report.levels {
        eprintln!("level {}: {}/{} components hold a tree node", l.level, l.covered(), l.total());
    }
    let mut problems = tree_summary(&prep.tree).violations();
    if !report.is_complete() {
        problems.push(format!("annulus coverage {:.4} below 1", report.fraction()));
    }
    if problems.is_empty() {
        eprintln!("coverage complete (t0 = {:.6}, depth {})", dec.t0, prep.tree.effective_depth);
        Ok(())
    } else {
        Err(Failure::Verification(problems.join("; ")))
    }
}

fn experiment(cli: &Cli, cfg: &ScenarioConfig) -> Result<(), Failure> {
    let exp = run_experiment(cfg)?;
    match target(cli, cfg) {
        Target::Stdout => write_samples_csv(&exp.report, &mut io::stdout().lock())?,
        Target::Dir(dir) => {
            for p in emit_outputs(&exp, &dir)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    let r = &exp.report;
    eprintln!("max empirical C {:.6}, {} unresolved samples", r.max_empirical_c(), r.unresolved());
    let problems = r.invariant_violations();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(problems.join("; ")))
    }
}

fn render(cli: &Cli, cfg: &ScenarioConfig) -> Result<(), Failure> {
    let mut c = cfg.clone();
    c.depth = 1;
    let prep = prepare(&c)?;
    let out = target(cli, cfg);
    out.write("basin.ppm", |mut w| prep.grid.write_ppm(&mut w))?;
    if let Some(dec) = &prep.annuli {
        out.write_extra("contours.csv", |mut w| dec.write_contours_csv(&prep.grid, &mut w))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let cfg = load(cli)?;
    match cli.command {
        Command::FixedPoints => fixed_points(cli, &cfg),
        Command::Basin => basin(cli, &cfg),
        Command::Tree => tree(cli, &cfg),
        Command::VerifyLemma => verify_lemma(cli, &cfg),
        Command::Experiment => experiment(cli, &cfg),
        Command::Render => render(cli, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
