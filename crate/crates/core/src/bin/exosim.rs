use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use exosim::cli::{self, exit, ScenarioConfig, ValidateOptions};
use exosim::control::ControllerKind;
use exosim::dynamics::run_cycle;
use exosim::motion::GaitParams;
use exosim::Error;

#[derive(Parser)]
#[command(
    name = "exosim",
    version,
    about = "Human and strapped exoskeleton running co-simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its frame CSV and summary.
    Run(RunArgs),
    /// Run several controller cases on one scenario and tabulate peaks.
    Compare(CompareArgs),
    /// Run the property and oracle checks.
    Validate(ValidateArgs),
    /// Write a synthetic running-gait trajectory.
    SynthGait(SynthArgs),
}

#[derive(Args)]
struct Overrides {
    /// Scenario TOML file; defaults apply when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integration step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Gait cycles to simulate; the first is discarded when more than one.
    #[arg(long)]
    cycles: Option<usize>,
    /// Seed for randomized steps.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
    /// none (no exo), passive, mic or mac.
    #[arg(long)]
    controller: Option<ControllerKind>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Overrides,
    /// Comma-separated case list.
    #[arg(long, default_value = "none,passive,mic,mac")]
    cases: String,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario whose model is checked; the reference model when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the checks that simulate whole gait cycles.
    #[arg(long)]
    quick: bool,
    /// Fault injection: apply this strap's load to the exo with the wrong sign.
    #[arg(long, hide = true)]
    flip_exo_strap: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario whose `[gait]` table sets the parameters.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output trajectory CSV.
    #[arg(long, default_value = "gait.csv")]
    out: PathBuf,
}

fn load_scenario(path: Option<&Path>) -> Result<ScenarioConfig, Error> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

impl Overrides {
    fn apply(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = load_scenario(self.scenario.as_deref())?;
        if let Some(out) = &self.out {
            // Command-line paths are relative to the working directory.
            cfg.output = std::env::current_dir()?.join(out);
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(c) = self.cycles {
            cfg.cycles = c;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Parse { .. } | Error::InvalidModel { .. } => exit::CONFIG,
        _ => exit::SIMULATION,
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    error_code(e)
}

fn run(args: &RunArgs) -> anyhow::Result<i32> {
    let mut cfg = match args.common.apply() {
        Ok(c) => c,
        Err(e) => return Ok(report(&e)),
    };
    if let Some(k) = args.controller {
        cfg.controller = k;
    }
    let inputs = match cfg.load_inputs() {
        Ok(i) => i,
        Err(e) => return Ok(report(&e)),
    };
    let sim = match run_cycle(&inputs.assembly, &inputs.trajectory, cfg.sim_options()) {
        Ok(r) => r,
        Err(e) => return Ok(report(&e)),
    };
    let (csv, summary) = cli::write_case(&cfg.output_dir(), &inputs.assembly, &cfg, &sim)
        .with_context(|| format!("writing results to {}", cfg.output_dir().display()))?;
    println!("{} frames -> {}", sim.frames.len(), csv.display());
    println!("summary -> {}", summary.display());
    let violations = cli::run_violations(&inputs.assembly, &sim);
    for v in &violations {
        log::error!("invariant violated: {v}");
    }
    Ok(if violations.is_empty() {
        exit::OK
    } else {
        exit::INVARIANT
    })
}

fn compare(args: &CompareArgs) -> anyhow::Result<i32> {
    let cases = match cli::parse_cases(&args.cases) {
        Ok(c) => c,
        Err(e) => return Ok(report(&e)),
    };
    let inputs = match args.common.apply().and_then(|c| c.load_inputs()) {
        Ok(i) => i,
        Err(e) => return Ok(report(&e)),
    };
    let out = cli::compare_scenario(&inputs, &cases).with_context(|| {
        format!(
            "writing results to {}",
            inputs.config.output_dir().display()
        )
    })?;
    print!("{}", out.summary.table());
    println!("summary -> {}", out.summary_path.display());
    for v in &out.violations {
        log::error!("invariant violated: {v}");
    }
    Ok(if !out.summary.is_complete() {
        exit::SIMULATION
    } else if !out.violations.is_empty() {
        exit::INVARIANT
    } else {
        exit::OK
    })
}

fn validate(args: &ValidateArgs) -> anyhow::Result<i32> {
    let model = match load_scenario(args.scenario.as_deref()).and_then(|c| c.model_config()) {
        Ok(m) => m,
        Err(e) => return Ok(report(&e)),
    };
    let opts = ValidateOptions {
        seed: args.seed,
        flip_exo_strap: args.flip_exo_strap.clone(),
        simulate: !args.quick,
    };
    let r = cli::run_validation(&model, &opts)?;
    println!("{r}");
    Ok(if r.all_passed() {
        exit::OK
    } else {
        exit::VALIDATION
    })
}

fn synth(args: &SynthArgs) -> anyhow::Result<i32> {
    let params: GaitParams = match load_scenario(args.scenario.as_deref()) {
        Ok(c) => c.gait,
        Err(e) => return Ok(report(&e)),
    };
    match cli::synth_gait(&params, &args.out) {
        Ok(t) => {
            println!(
                "{} knots over {:.4} s -> {}",
                t.times.len(),
                t.cycle_duration,
                args.out.display()
            );
            Ok(exit::OK)
        }
        Err(e) => Ok(report(&e)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Validate(a) => validate(a),
        Command::SynthGait(a) => synth(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::SIMULATION as u8)
        }
    }
}
