use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gkdv_lab::config::ExperimentConfig;
use gkdv_lab::runner::{expand_sweeps, parse_sweep, run_and_report, run_sweep, sweep_threads};
use gkdv_lab::{exit, report, LabError};

#[derive(Parser)]
#[command(name = "gkdv-lab", version, about = "Run and report quartic gKdV experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment recipe (or a sweep of them) from a config file.
    Run {
        /// TOML config, or a previous run's meta.json.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `experiment`.
        #[arg(long)]
        experiment: Option<String>,
        /// Overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// `section.key=value`, applied after the file; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// `section.key=v1,v2,...`; repeatable, the variants form a cartesian product.
        #[arg(long = "sweep", value_name = "KEY=V1,V2")]
        sweeps: Vec<String>,
    },
    /// Summarize a finished run directory.
    Report { dir: PathBuf },
}

fn fail(dir: Option<&std::path::Path>, e: LabError) -> i32 {
    eprintln!("{}", e.to_json());
    gkdv_lab::runner::record_error(dir, &e);
    e.exit_code()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match cli.command {
        Command::Run { config, experiment, seed, output_dir, mut sets, sweeps } => {
            if let Some(s) = seed {
                sets.push(format!("seed={s}"));
            }
            if let Some(d) = &output_dir {
                sets.push(format!("output_dir={}", toml::Value::String(d.display().to_string())));
            }
            match ExperimentConfig::load(&config, experiment.as_deref(), &sets) {
                Err(e) => fail(output_dir.as_deref(), e.into()),
                Ok(cfg) if sweeps.is_empty() => run_and_report(&cfg, true),
                Ok(cfg) => match sweeps.iter().map(|s| parse_sweep(s)).collect::<Result<Vec<_>, _>>().and_then(|s| expand_sweeps(&cfg, &s)) {
                    Ok(variants) => run_sweep(&variants, sweep_threads()),
                    Err(e) => fail(Some(&cfg.output_dir()), e),
                },
            }
        }
        Command::Report { dir } => match report::report(&dir) {
            Ok(rep) => {
                println!("{} ({})", dir.display(), rep.experiment);
                println!("{}", report::format_table(&rep.checks));
                if let Some(d) = &rep.diagnostics {
                    if let Some(v) = d.get("i_eta_monotone") {
                        println!("I_eta monotone: {v}");
                    }
                }
                println!("{} passed, {} failed, {} informational failures", rep.passed, rep.failed, rep.informational_failed);
                if rep.all_pass() { exit::PASS } else { exit::CHECK_FAILURE }
            }
            Err(e) => fail(None, e),
        },
    };
    ExitCode::from(code as u8)
}
