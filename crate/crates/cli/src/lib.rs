//! `pcsom` command line: scenario files in, CSV and a resolved JSON echo out.

mod selftest;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use log::{error, info, LevelFilter};
use pcsom::config::{self, Scenario};
use pcsom::experiments::{self, csv};
use pcsom::{model, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_CHECKS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "pcsom", version, about = "Pair-coherent mechanical states and remote cat preparation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Override a config value, `[section.]key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads for sweep points (overrides PCSOM_WORKERS).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory (overrides scenario.output).
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    /// Mirror the diagnostics log on stderr; repeat for debug detail.
    #[arg(long, short = 'v', action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Allow multi-hour full-model horizons.
    #[arg(long, global = true)]
    pub long: bool,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Quasi-stationary mechanical state and its metrics.
    Steady { config: PathBuf },
    /// Fidelity to the pair-coherent state along an evolution from the vacuum.
    Evolve { config: PathBuf },
    /// All metrics over a zeta grid.
    ZetaSweep { config: PathBuf },
    /// Remote cat preparation with Wigner maps.
    Cat { config: PathBuf },
    /// Metrics and cat fidelity over thermal occupations.
    ThermalSweep { config: PathBuf },
    /// Rotating-wave validity ratios.
    CheckRwa { config: PathBuf },
    /// Built-in oracle checks.
    Selftest,
}

impl Command {
    fn config(&self) -> Option<&Path> {
        match self {
            Command::Steady { config }
            | Command::Evolve { config }
            | Command::ZetaSweep { config }
            | Command::Cat { config }
            | Command::ThermalSweep { config }
            | Command::CheckRwa { config } => Some(config),
            Command::Selftest => None,
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::ConfigSyntax { .. } | Error::InvalidParameter { .. } | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Worker count: the flag wins over `PCSOM_WORKERS`, which wins over the core count.
pub fn resolve_workers(flag: Option<usize>, env: Option<&str>) -> Result<usize, String> {
    if let Some(n) = flag {
        return if n > 0 { Ok(n) } else { Err("--workers must be positive".into()) };
    }
    match env {
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("PCSOM_WORKERS='{v}' is not a positive integer")),
        },
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

struct FileLogger {
    file: Mutex<File>,
    echo: Option<LevelFilter>,
}

impl log::Log for FileLogger {
    fn enabled(&self, metadata: &log::Metadata<'_>) -> bool {
        metadata.level() <= LevelFilter::Debug
    }

    fn log(&self, record: &log::Record<'_>) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = format!("{:<5} {}: {}\n", record.level(), record.target(), record.args());
        if record.level() <= LevelFilter::Info {
            if let Ok(mut f) = self.file.lock() {
                let _ = f.write_all(line.as_bytes());
            }
        }
        if self.echo.is_some_and(|lv| record.level() <= lv) {
            let _ = io::stderr().write_all(line.as_bytes());
        }
    }

    fn flush(&self) {
        if let Ok(mut f) = self.file.lock() {
            let _ = f.flush();
        }
    }
}

/// The global logger can be installed once per process; later runs swap its file.
static LOGGER: std::sync::OnceLock<&'static SwappableLogger> = std::sync::OnceLock::new();

struct SwappableLogger(Mutex<Option<FileLogger>>);

impl log::Log for SwappableLogger {
    fn enabled(&self, m: &log::Metadata<'_>) -> bool {
        m.level() <= LevelFilter::Debug
    }

    fn log(&self, record: &log::Record<'_>) {
        if let Ok(inner) = self.0.lock() {
            if let Some(l) = inner.as_ref() {
                l.log(record);
            }
        }
    }

    fn flush(&self) {
        if let Ok(inner) = self.0.lock() {
            if let Some(l) = inner.as_ref() {
                l.flush();
            }
        }
    }
}

fn install_logger(path: &Path, verbose: u8) -> io::Result<()> {
    let echo = match verbose {
        0 => Some(LevelFilter::Warn),
        1 => Some(LevelFilter::Info),
        _ => Some(LevelFilter::Debug),
    };
    let logger = FileLogger { file: Mutex::new(File::create(path)?), echo };
    let shared = LOGGER.get_or_init(|| {
        let l: &'static SwappableLogger = Box::leak(Box::new(SwappableLogger(Mutex::new(None))));
        let _ = log::set_logger(l);
        log::set_max_level(LevelFilter::Debug);
        l
    });
    if let Ok(mut inner) = shared.0.lock() {
        *inner = Some(logger);
    }
    Ok(())
}

fn detach_logger() {
    if let Some(l) = LOGGER.get() {
        log::Log::flush(*l);
        if let Ok(mut inner) = l.0.lock() {
            *inner = None;
        }
    }
}

/// Resolved per-run settings.
struct Run {
    scenario: Scenario,
    dir: PathBuf,
    workers: usize,
}

impl Run {
    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.scenario.name))
    }

    fn write(&self, suffix: &str, text: &str) -> pcsom::Result<()> {
        fs::write(self.path(suffix), text)?;
        Ok(())
    }
}

/// Parses `argv` (including the program name), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    let workers = match resolve_workers(cli.workers, std::env::var("PCSOM_WORKERS").ok().as_deref()) {
        Ok(w) => w,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let Some(path) = cli.command.config() else {
        return selftest::run();
    };
    let mut scenario = match fs::read_to_string(path)
        .map_err(Error::from)
        .and_then(|text| config::parse_config_with(&text, &cli.overrides))
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    scenario.solver.long |= cli.long;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&scenario.output));
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_CONFIG;
    }
    let run = Run { scenario, dir, workers };
    if let Err(e) = install_logger(&run.path(".log"), cli.verbose) {
        eprintln!("error: cannot open log: {e}");
        return EXIT_CONFIG;
    }
    info!("scenario {} with {} worker(s)", run.scenario.name, run.workers);
    let echo = serde_json::to_string_pretty(&config::resolved_json(&run.scenario)).unwrap_or_default();
    let code = match run.write(".resolved.json", &format!("{echo}\n")).and_then(|_| dispatch(&cli.command, &run)) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    detach_logger();
    code
}

fn dispatch(command: &Command, run: &Run) -> pcsom::Result<i32> {
    let sc = &run.scenario;
    match command {
        Command::Steady { .. } => {
            let d = model::derive(&sc.model)?;
            let state = experiments::steady_mechanics(sc, &sc.model)?;
            let mut metrics = experiments::two_mode_metrics(&state.rho, d.zeta)?;
            metrics.params = vec![("zeta".into(), d.zeta.norm())];
            let record = experiments::SweepRecord { metrics, leakage: state.leakage };
            run.write(".csv", &csv::zeta_csv(std::slice::from_ref(&record)))?;
            let m = &record.metrics;
            match state.horizon {
                Some(t) => println!("quasi-stationary state at t = {t:.1}"),
                None => println!("dark-state null vector (no mechanical damping)"),
            }
            println!("F to PCS(zeta = {:.4}{:+.4}i) = {:.6}", d.zeta.re, d.zeta.im, m.fidelity.unwrap_or(f64::NAN));
            println!(
                "N = {:.6}  R_r = {:.6}  W_min = {:.6}  E_f = {:.6}",
                m.negativity.unwrap_or(f64::NAN),
                m.nongaussianity.unwrap_or(f64::NAN),
                m.w_min.unwrap_or(f64::NAN),
                m.fisher.unwrap_or(f64::NAN)
            );
            for (a, b, v) in &m.reid {
                println!("E_r({a},{b}) = {v:.6}");
            }
        }
        Command::Evolve { .. } => {
            let trace = experiments::run_fidelity_trace(sc)?;
            run.write(".csv", &csv::trace_csv(&trace))?;
            if let Some(last) = trace.points.last() {
                println!("{} engine: F(t = {:.1}) = {:.6}", trace.engine.name(), last.t, last.fidelity);
            }
        }
        Command::ZetaSweep { .. } => {
            let records = experiments::run_zeta_sweep(sc, run.workers)?;
            run.write(".csv", &csv::zeta_csv(&records))?;
            println!("{} zeta points written to {}", records.len(), run.path(".csv").display());
        }
        Command::Cat { .. } => {
            let maps = experiments::run_cat_maps(sc, run.workers)?;
            run.write(".csv", &csv::cat_csv(&maps))?;
            run.write(".wigner.csv", &csv::wigner_csv(&maps))?;
            for m in &maps {
                println!("{:<9} zeta = {:.3}: F_cat = {:.6}, W_min = {:.6}", m.engine.name(), m.zeta, m.cat.fidelity, m.cat.w_min);
            }
        }
        Command::ThermalSweep { .. } => {
            let records = experiments::run_thermal_sweep(sc, run.workers)?;
            run.write(".csv", &csv::thermal_csv(&records))?;
            println!("{} occupations written to {}", records.len(), run.path(".csv").display());
        }
        Command::CheckRwa { .. } => {
            let d = model::derive(&sc.model)?;
            let report = model::check_rwa(&sc.model, &d, model::RWA_THRESHOLD);
            let mut text = String::from("left,right,ratio\n");
            for (l, r, v) in &report.ratios {
                println!("{r:>20} / {l:<22} = {v:.6e}");
                text.push_str(&format!("{l},{r},{}\n", csv::num(*v)));
            }
            run.write(".csv", &text)?;
            let verdict = if report.pass() { "PASS" } else { "FAIL" };
            println!("max ratio {:.6e} (threshold {}): {verdict}", report.max_ratio(), report.threshold);
        }
        Command::Selftest => unreachable!("selftest takes no scenario"),
    }
    Ok(EXIT_OK)
}
