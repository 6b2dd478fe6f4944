use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pinch_core::asymptotics::avg_interference_approx;
use pinch_core::beamforming::{mrt, uniform_power, zf};
use pinch_core::channel::distributed_channel_matrix;
use pinch_core::experiments::{
    post_run_checks, request_from_csv, run_sweep, CustomSweep, Figure, Scenario, SweepAxis,
    SweepRequest, DEFAULT_DROPS, DEFAULT_STEP_DB,
};
use pinch_core::metrics::{se_centralized_exact, se_distributed_exact, se_general};
use pinch_core::model::{sample_users_with_margin, ConfigFile};
use pinch_core::oracle::{
    f_audit, interference_audit, mc_collect_with, write_audit_csv, McEstimate, QuadratureScheme,
    QuadratureSpec,
};
use pinch_core::placement::distributed_nearest;
use pinch_core::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_PRECONDITION: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pinch-se", version, about = "Pinching-antenna downlink SE/EE evaluator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one strategy, averaged over --drops user drops.
    Se(SeArgs),
    /// Run a figure scenario or a custom one-axis sweep.
    Sweep(SweepArgs),
    /// Quadrature audit of the stationary-phase interference model.
    Oracle(OracleArgs),
    /// Interference weight T and average interference for every user pair.
    Lemma1(CommonArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// key=value configuration file (keys: n, d, D, L, fc_hz, n_eff, noise_dbm, pt_dbm, seed).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    /// Waveguide spacing, m.
    #[arg(long)]
    d: Option<String>,
    /// Waveguide height, m.
    #[arg(long = "height")]
    height: Option<String>,
    /// Waveguide length, m.
    #[arg(long)]
    length: Option<String>,
    #[arg(long)]
    fc_hz: Option<String>,
    #[arg(long)]
    n_eff: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    noise_dbm: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pt_dbm: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a gnuplot script for the CSV here (needs --out).
    #[arg(long)]
    plot_script: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> Result<ConfigFile, Error> {
        let mut cfg = match &self.config {
            Some(path) => fs::read_to_string(path)?.parse()?,
            None => ConfigFile::default(),
        };
        let overrides = [
            ("n", &self.n),
            ("d", &self.d),
            ("D", &self.height),
            ("L", &self.length),
            ("fc_hz", &self.fc_hz),
            ("n_eff", &self.n_eff),
            ("noise_dbm", &self.noise_dbm),
            ("pt_dbm", &self.pt_dbm),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.system.validate()?;
        Ok(cfg)
    }

    fn emit(&self, csv: &str, plot: Option<&dyn Fn(&str) -> String>) -> Result<(), Error> {
        match &self.out {
            Some(path) => fs::write(path, csv)?,
            None => io::stdout().write_all(csv.as_bytes())?,
        }
        if let Some(script_path) = &self.plot_script {
            let Some(csv_path) = &self.out else {
                return Err(Error::InvalidConfig("--plot-script requires --out".into()));
            };
            let Some(render) = plot else {
                return Err(Error::InvalidConfig(
                    "--plot-script is only available for sweep".into(),
                ));
            };
            fs::write(script_path, render(&csv_path.display().to_string()))?;
        }
        Ok(())
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Strategy {
    Centralized,
    Distributed,
    General,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Beamformer {
    Mrt,
    Zf,
}

#[derive(Args, Debug)]
struct SeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value = "distributed")]
    strategy: Strategy,
    #[arg(long, value_enum, default_value = "mrt")]
    beamformer: Beamformer,
    /// Served users for --strategy general.
    #[arg(long)]
    i: Option<usize>,
    /// Antennas per waveguide for --strategy general.
    #[arg(long)]
    q: Option<usize>,
    /// In-phase array size for --strategy centralized (default N).
    #[arg(long)]
    n_pas: Option<usize>,
    #[arg(long, default_value_t = 1)]
    drops: usize,
    /// Draw each user's y independently instead of one shared y.
    #[arg(long)]
    independent_y: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// approx-vs-sim, tradeoff, spacing, beamformer, placement or sensitivity.
    #[arg(long, conflicts_with_all = ["axis", "replay"])]
    figure: Option<String>,
    /// Custom sweep axis: pt_dbm or d_m.
    #[arg(long, requires_all = ["from", "to"], conflicts_with = "replay")]
    axis: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<f64>,
    /// Grid step: dB for power axes, m for d_m.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    drops: Option<usize>,
    /// Re-run the request embedded in an earlier CSV.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Write the table even if a qualitative check fails, and exit 0.
    #[arg(long)]
    skip_checks: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SchemeArg {
    Simpson,
    Adaptive,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value = "simpson")]
    scheme: SchemeArg,
    /// Largest quadrature panel, m (default λ/32).
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
}

enum Failure {
    Error(Error),
    Checks(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn run_se(args: &SeArgs) -> Result<(), Failure> {
    let file = args.common.load()?;
    let cfg = file.system;
    if args.drops == 0 {
        return Err(Error::InvalidConfig("--drops must be at least 1".into()).into());
    }
    let n_pas = args.n_pas.unwrap_or(cfg.n);
    let (label, margin) = match args.strategy {
        Strategy::Centralized => ("centralized".to_string(), cfg.y_margin_for(n_pas)),
        Strategy::Distributed => (
            format!("distributed-{}", if args.beamformer == Beamformer::Mrt { "mrt" } else { "zf" }),
            cfg.y_margin(),
        ),
        Strategy::General => {
            let (Some(i), Some(q)) = (args.i, args.q) else {
                return Err(Error::InvalidConfig("--strategy general needs --i and --q".into()).into());
            };
            (format!("general-i{i}-q{q}"), cfg.y_margin())
        }
    };
    let worst = !args.independent_y;
    let samples = mc_collect_with(
        |s| sample_users_with_margin(&cfg, s, worst, margin),
        |_, drop| match args.strategy {
            Strategy::Centralized => Ok(se_centralized_exact(drop, &cfg, n_pas)?.total_se),
            Strategy::Distributed => {
                let placement = distributed_nearest(drop, &cfg)?;
                let h = distributed_channel_matrix(drop, &placement, &cfg)?;
                let w = match args.beamformer {
                    Beamformer::Mrt => mrt(&h)?,
                    Beamformer::Zf => zf(&h)?,
                };
                Ok(se_distributed_exact(drop, &placement, &w, &uniform_power(&cfg), &cfg)?.total_se)
            }
            Strategy::General => {
                Ok(se_general(drop, &cfg, args.i.unwrap_or(0), args.q.unwrap_or(0))?.total_se)
            }
        },
        args.drops,
        file.seed,
    )?;
    let est = McEstimate::from_samples(&samples);
    let mut csv = String::new();
    for (k, v) in file.to_pairs() {
        csv.push_str(&format!("# config.{k}={v}\n"));
    }
    csv.push_str(&format!("# drops={}\n", args.drops));
    csv.push_str("metric,strategy,value,stderr,seed\n");
    csv.push_str(&format!("se,{label},{},{},{}\n", est.mean, est.stderr, file.seed));
    args.common.emit(&csv, None)?;
    Ok(())
}

fn sweep_request(args: &SweepArgs) -> Result<SweepRequest, Error> {
    if let Some(path) = &args.replay {
        return request_from_csv(&fs::read_to_string(path)?);
    }
    let file = args.common.load()?;
    let scenario = match (&args.figure, &args.axis) {
        (Some(name), _) => Scenario::Figure(name.parse::<Figure>()?),
        (None, Some(axis)) => Scenario::Custom(CustomSweep {
            axis: axis.parse::<SweepAxis>()?,
            from: args.from.unwrap_or(0.0),
            to: args.to.unwrap_or(0.0),
            step: args.step.unwrap_or(DEFAULT_STEP_DB),
        }),
        (None, None) => {
            return Err(Error::InvalidConfig(
                "sweep needs --figure, --axis or --replay".into(),
            ))
        }
    };
    let req = SweepRequest {
        scenario,
        config: file.system,
        seed: file.seed,
        drops: args.drops.unwrap_or(DEFAULT_DROPS),
        step_db: args.step.unwrap_or(DEFAULT_STEP_DB),
    };
    req.validate()?;
    Ok(req)
}

fn run_sweep_cmd(args: &SweepArgs) -> Result<(), Failure> {
    let req = sweep_request(args)?;
    let table = run_sweep(&req)?;
    let csv = table.to_csv_string()?;
    args.common.emit(&csv, Some(&|path: &str| table.plot_script(path)))?;
    let failed: Vec<String> = post_run_checks(&table)
        .into_iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    if failed.is_empty() || args.skip_checks {
        Ok(())
    } else {
        Err(Failure::Checks(failed))
    }
}

fn run_oracle(args: &OracleArgs) -> Result<(), Failure> {
    let cfg = args.common.load()?.system;
    let base = match args.scheme {
        SchemeArg::Simpson => QuadratureSpec::default(),
        SchemeArg::Adaptive => QuadratureSpec::adaptive(),
    };
    let spec = QuadratureSpec {
        max_step: args.max_step,
        rel_tol: args.rel_tol,
        scheme: match args.scheme {
            SchemeArg::Simpson => QuadratureScheme::Simpson,
            SchemeArg::Adaptive => QuadratureScheme::Adaptive,
        },
        ..base
    };
    spec.step(&cfg)?;
    let f_rows = f_audit(&cfg, &spec)?;
    let i_rows = interference_audit(&cfg, &spec)?;
    let mut buf = Vec::new();
    write_audit_csv(&mut buf, &f_rows, &i_rows)?;
    args.common
        .emit(&String::from_utf8_lossy(&buf), None)?;
    Ok(())
}

fn run_lemma1(args: &CommonArgs) -> Result<(), Failure> {
    let cfg = args.load()?.system;
    let mut csv = String::from("k_from,k_to,t_value,i_bar\n");
    for a in 1..=cfg.n {
        for b in (1..=cfg.n).filter(|&b| b != a) {
            let term = avg_interference_approx(a, b, &cfg)?;
            csv.push_str(&format!("{a},{b},{},{}\n", term.t_value, term.i_bar));
        }
    }
    args.emit(&csv, None)?;
    Ok(())
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("PINCH_SE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("PINCH_SE_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().map_err(Failure::from).and_then(|()| match &cli.command {
        Command::Se(a) => run_se(a),
        Command::Sweep(a) => run_sweep_cmd(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Lemma1(a) => run_lemma1(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(failed)) => {
            for f in &failed {
                eprintln!("pinch-se: post-run check failed: {f}");
            }
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(Failure::Error(e)) => {
            eprintln!("pinch-se: {e}");
            match e {
                Error::Io(_) | Error::Csv(_) => ExitCode::from(EXIT_RUNTIME),
                _ => ExitCode::from(EXIT_PRECONDITION),
            }
        }
    }
}
