//! `ivdrem`: run the closed-loop experiments and compare their metrics.
//!
//! Exit status: 0 on success, 2 on usage or configuration errors, 3 when
//! the divergence guard aborts a run, 1 on I/O and other runtime errors.

mod compare;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ivdrem_core::{run, AdaptationLaw, ConditionReport, RunMetrics};

use config::{ConfigError, Overrides, PAPER2DOF, PRESETS};

#[derive(Debug, Parser)]
#[command(
    name = "ivdrem",
    version,
    about = "IV-DREM composite adaptive control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write trace.csv, metrics.json and conditions.json
    Run(RunArgs),
    /// Compare the final-window metrics of two run directories
    Compare { first: PathBuf, second: PathBuf },
    /// List the compiled-in presets, or print one as a full config file
    Presets {
        /// preset to print as JSON
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// compiled-in scenario the config file overrides
    #[arg(long, default_value = PAPER2DOF)]
    preset: String,
    /// JSON file with overrides of the preset
    #[arg(long)]
    config: Option<PathBuf>,
    /// adaptation law
    #[arg(long, value_enum)]
    law: Option<LawArg>,
    /// final time in seconds
    #[arg(long)]
    t_end: Option<f64>,
    /// integration step in seconds
    #[arg(long)]
    step: Option<f64>,
    /// trace output stride in steps
    #[arg(long)]
    decimation: Option<usize>,
    /// keep or remove the external disturbance
    #[arg(long, value_enum)]
    disturbance: Option<Switch>,
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LawArg {
    Proposed,
    Baseline,
    None,
}

impl From<LawArg> for AdaptationLaw {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Proposed => Self::Proposed,
            LawArg::Baseline => Self::Baseline,
            LawArg::None => Self::None,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(&args),
        Command::Compare { first, second } => compare::compare(&first, &second)
            .map(|c| print!("{}", c.table()))
            .map_err(|e| (EXIT_FAILURE, e.to_string())),
        Command::Presets { show } => presets_command(show.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

fn presets_command(show: Option<&str>) -> Result<(), (u8, String)> {
    match show {
        None => {
            for (name, about) in PRESETS {
                println!("{name:<12} {about}");
            }
            Ok(())
        }
        Some(name) => {
            let file = config::preset_file(name).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
            let text =
                serde_json::to_string_pretty(&file).map_err(|e| (EXIT_FAILURE, e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn run_command(args: &RunArgs) -> Result<(), (u8, String)> {
    let overrides = Overrides {
        law: args.law.map(Into::into),
        t_end: args.t_end,
        h: args.step,
        decimation: args.decimation,
        disturbance: args.disturbance.map(|s| matches!(s, Switch::On)),
    };
    let (scenario, sim) = config::load(&args.preset, args.config.as_deref(), &overrides)
        .map_err(|e: ConfigError| (EXIT_CONFIG, e.to_string()))?;
    let out = run(&scenario, &sim).map_err(|e| match e {
        ivdrem_core::Error::Diverged { .. } => (EXIT_DIVERGED, e.to_string()),
        other => (EXIT_FAILURE, other.to_string()),
    })?;
    let conditions = output::write_run(&args.out, &out, scenario.dof(), scenario.n_params())
        .map_err(|e| (EXIT_FAILURE, format!("writing {}: {e}", args.out.display())))?;
    print!("{}", summary(&out.metrics, &conditions));
    println!("artifacts written to {}", args.out.display());
    Ok(())
}

fn summary(m: &RunMetrics, c: &ConditionReport) -> String {
    let q = |x: [f64; 4]| {
        x.iter()
            .map(|v| format!("{v:.4e}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let yes = |b: bool| if b { "yes" } else { "no" };
    format!(
        "law {} | t = {}..{} s, h = {} s, {} steps\n\
         final window [{} s]  mean |e| {:.4e}   mean |theta_err| {:.4e}   mean |tau_d_err| {:.4e}\n\
         theta_err: {:.4e} -> {:.4e}\n\
         int Delta^2 by quarter: {}  (total {:.4e}, last quarter positive: {})\n\
         conditions: iv integrals bounded {}, Wcal rate bounded {}, lambda L2 converging {}, min |det| on window grid {:.4e}, finite {}\n",
        m.law,
        m.t0,
        m.t_end,
        m.h,
        m.steps,
        m.final_window,
        m.final_e_mean,
        m.final_theta_err_mean,
        m.final_tau_d_err_mean,
        m.theta_err_initial,
        m.theta_err_final,
        q(m.delta_l2_quarters),
        m.delta_l2_total,
        yes(c.delta_not_l2.final_quarter_positive),
        yes(c.iv_disturbance_integrals.bounded),
        yes(c.wcal_rate_bound.bounded),
        yes(c.lambda_l2.converging),
        c.window_excitation.min_abs_det,
        yes(c.all_finite),
    )
}
