use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ksfp_core::analysis::HolderConstant;
use ksfp_core::export::emit_plots;
use ksfp_core::harness::{
    self, convergence_study, load_scenario, run_scenario, sweep_epsilon, verify, HarnessError,
    HarnessOptions, ReportSet, VerificationReport,
};
use ksfp_core::SignConvention;

const EXIT_PASS: u8 = 0;
const EXIT_CLAIM_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ksfp",
    version,
    about = "Degenerate Keller-Segel simulator and verification suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and check every applicable claim.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario plus the ε-sweep and grid-refinement checks.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Repeat a scenario for several ε and test uniformity.
    SweepEps {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1.., required = true)]
        eps: Vec<f64>,
    },
    /// Repeat a scenario on nested grids and report observed orders.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1.., required = true)]
        n: Vec<usize>,
    },
    /// Write per-frame CSVs and a gnuplot script.
    Plots {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Convention::Material)]
        convention: Convention,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    config: PathBuf,
    /// Directory for reports and data files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Convention::Material)]
    convention: Convention,
    /// Constant used by the Hölder check when 1 < m < 2.
    #[arg(long, value_enum, default_value_t = Holder::MeanValue)]
    holder: Holder,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Material,
    Reflected,
}

#[derive(Clone, Copy, ValueEnum)]
enum Holder {
    Printed,
    MeanValue,
}

impl Common {
    fn options(&self) -> HarnessOptions {
        options(self.convention, self.holder)
    }
}

fn options(convention: Convention, holder: Holder) -> HarnessOptions {
    HarnessOptions {
        convention: match convention {
            Convention::Material => SignConvention::Material,
            Convention::Reflected => SignConvention::Reflected,
        },
        holder_constant: match holder {
            Holder::Printed => HolderConstant::Printed,
            Holder::MeanValue => HolderConstant::MeanValue,
        },
        ..HarnessOptions::default()
    }
}

enum Failure {
    Harness(HarnessError),
    Io(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Harness(e)
    }
}

impl From<ksfp_core::Error> for Failure {
    fn from(e: ksfp_core::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn print_reports(reports: &[VerificationReport]) {
    for r in reports {
        let measured: Vec<String> = r
            .measured
            .iter()
            .map(|(k, v)| format!("{k}={v:.6e}"))
            .collect();
        println!(
            "{:<22} {:<15} {}",
            r.claim.as_str(),
            r.status.as_str(),
            measured.join(" ")
        );
        if let Some(note) = &r.note {
            println!("{:<22} {:<15} note: {note}", "", "");
        }
    }
}

fn write_json(dir: &Path, name: &str, json: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), json)?;
    Ok(())
}

fn exit_for(passed: bool) -> u8 {
    if passed {
        EXIT_PASS
    } else {
        EXIT_CLAIM_FAILED
    }
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Run { common } => {
            let scenario = load_scenario(&common.config)?;
            let opts = common.options();
            let out = run_scenario(&scenario, &opts)?;
            print_reports(&out.reports);
            if let Some(dir) = &common.out {
                emit_plots(
                    &out.trajectory,
                    out.interfaces.as_ref(),
                    out.pme_errors.as_deref(),
                    dir,
                )?;
                let set = ReportSet::new(&scenario, &opts, &out.reports);
                write_json(dir, "report.json", &set.to_json()?)?;
            }
            Ok(exit_for(out.passed()))
        }
        Command::Verify { common } => {
            let scenario = load_scenario(&common.config)?;
            let opts = common.options();
            let out = verify(&scenario, &opts)?;
            print_reports(out.reports());
            if let Some(dir) = &common.out {
                let mut set = ReportSet::new(&scenario, &opts, out.reports());
                set.sweep = out.sweep.clone();
                set.convergence = out.convergence.clone();
                write_json(dir, "report.json", &set.to_json()?)?;
            }
            Ok(exit_for(out.passed()))
        }
        Command::SweepEps { common, eps } => {
            let scenario = load_scenario(&common.config)?;
            let report = sweep_epsilon(&scenario, &eps, &common.options())?;
            println!(
                "{:>10} {:>14} {:>14} {:>14}",
                "epsilon", "lipschitz", "vacuum_max", "cone_drift"
            );
            let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
            for r in &report.rows {
                println!(
                    "{:>10} {:>14.6e} {:>14} {:>14}",
                    r.epsilon,
                    r.lipschitz_sup,
                    show(r.vacuum_max),
                    show(r.cone_drift)
                );
            }
            println!(
                "lipschitz band {:.3} ({}), vacuum trend {}",
                report.lipschitz_band,
                if report.lipschitz_ok { "pass" } else { "fail" },
                if report.vacuum_ok { "pass" } else { "fail" }
            );
            if let Some(dir) = &common.out {
                write_json(dir, "sweep.json", &harness::to_json(&report)?)?;
            }
            Ok(exit_for(report.passed()))
        }
        Command::Converge { common, n } => {
            let scenario = load_scenario(&common.config)?;
            let report = convergence_study(&scenario, &n, &common.options())?;
            let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
            println!(
                "{:>8} {:>14} {:>14} {:>14}",
                "n", "self_diff", "cone_drift", "pme_l1"
            );
            for r in &report.rows {
                println!(
                    "{:>8} {:>14} {:>14} {:>14}",
                    r.n_cells,
                    show(r.self_difference),
                    show(r.cone_drift),
                    show(r.pme_l1_error)
                );
            }
            println!("self orders {:?}", report.self_orders);
            println!("cone orders {:?}", report.cone_orders);
            if !report.pme_ratios.is_empty() {
                println!("barenblatt error ratios {:?}", report.pme_ratios);
            }
            if let Some(dir) = &common.out {
                write_json(dir, "convergence.json", &harness::to_json(&report)?)?;
            }
            Ok(exit_for(report.passed))
        }
        Command::Plots {
            config,
            out,
            convention,
        } => {
            let scenario = load_scenario(&config)?;
            let opts = options(convention, Holder::MeanValue);
            let run = run_scenario(&scenario, &opts)?;
            let files = emit_plots(
                &run.trajectory,
                run.interfaces.as_ref(),
                run.pme_errors.as_deref(),
                &out,
            )?;
            println!("wrote {} files to {}", files.len(), out.display());
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(Failure::Harness(HarnessError::Config(e))) => {
            eprintln!("configuration error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Harness(HarnessError::Runtime(e))) => {
            eprintln!("run aborted: {e}");
            EXIT_RUNTIME
        }
        Err(Failure::Io(e)) => {
            eprintln!("output error: {e}");
            EXIT_RUNTIME
        }
    };
    ExitCode::from(code)
}
