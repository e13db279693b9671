//! Executes configs: one recipe per run directory, or a sweep fanned out over worker threads.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::config::{apply_set, ExperimentConfig};
use crate::recipes::run_recipe;
use crate::{exit, Check, LabError, LabResult};

#[derive(Serialize)]
struct Meta<'a> {
    config: &'a ExperimentConfig,
    versions: Versions,
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "gkdv-lab")]
    lab: &'static str,
    #[serde(rename = "gkdv-core")]
    core: &'static str,
}

const VERSIONS: Versions = Versions { lab: env!("CARGO_PKG_VERSION"), core: gkdv_core::VERSION };

#[derive(Debug)]
pub struct RunOutcome {
    pub checks: Vec<Check>,
    pub exit_code: i32,
}

/// Runs one recipe; artifacts, `meta.json` and `checks.json` land in the config's output directory.
pub fn run(cfg: &ExperimentConfig) -> LabResult<RunOutcome> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let _ = fs::remove_file(dir.join("error.json"));
    let meta = serde_json::to_string_pretty(&Meta { config: cfg, versions: VERSIONS }).map_err(gkdv_core::Error::from)?;
    fs::write(dir.join("meta.json"), meta)?;
    let checks = run_recipe(cfg, &dir)?;
    let text = serde_json::to_string_pretty(&checks).map_err(gkdv_core::Error::from)?;
    fs::write(dir.join("checks.json"), text)?;
    let exit_code = if checks.iter().all(Check::ok) { exit::PASS } else { exit::CHECK_FAILURE };
    Ok(RunOutcome { checks, exit_code })
}

/// Writes the error next to the run's other artifacts when the directory is known.
pub fn record_error(dir: Option<&Path>, err: &LabError) {
    if let Some(d) = dir {
        if fs::create_dir_all(d).is_ok() {
            let _ = fs::write(d.join("error.json"), serde_json::to_string_pretty(&err.to_json()).unwrap_or_default());
        }
    }
}

/// Runs and maps every outcome to an exit status, printing errors as JSON on stderr.
pub fn run_and_report(cfg: &ExperimentConfig, print: bool) -> i32 {
    match run(cfg) {
        Ok(out) => {
            if print {
                println!("{}: {}", cfg.output_dir().display(), crate::report::format_table(&out.checks));
            }
            out.exit_code
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            record_error(Some(&cfg.output_dir()), &e);
            e.exit_code()
        }
    }
}

/// `key=v1,v2,...`
pub fn parse_sweep(spec: &str) -> LabResult<(String, Vec<String>)> {
    let (key, values) = spec.split_once('=').ok_or_else(|| LabError::Config(format!("--sweep `{spec}`: expected key=v1,v2")))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if key.trim().is_empty() || values.is_empty() {
        return Err(LabError::Config(format!("--sweep `{spec}`: expected key=v1,v2")));
    }
    Ok((key.trim().to_string(), values))
}

/// The cartesian product of the sweeps over `base`; each variant writes to its own
/// subdirectory `<output_dir>/<key>=<value>[,...]`. Every variant is validated up front.
pub fn expand_sweeps(base: &ExperimentConfig, sweeps: &[(String, Vec<String>)]) -> LabResult<Vec<ExperimentConfig>> {
    let mut variants: Vec<(toml::Table, Vec<String>)> = vec![(base.to_table(), Vec::new())];
    for (key, values) in sweeps {
        let mut next = Vec::with_capacity(variants.len() * values.len());
        for (table, tags) in &variants {
            for v in values {
                let mut t = table.clone();
                apply_set(&mut t, &format!("{key}={v}"))?;
                let mut tags = tags.clone();
                tags.push(format!("{key}={v}"));
                next.push((t, tags));
            }
        }
        variants = next;
    }
    let root = base.output_dir();
    variants
        .into_iter()
        .map(|(t, tags)| {
            let mut cfg = ExperimentConfig::from_table(t)?;
            cfg.output_dir = Some(root.join(tags.join(",")));
            Ok(cfg)
        })
        .collect()
}

/// Worker count: `GKDV_LAB_THREADS` when set, else the available parallelism.
pub fn sweep_threads() -> usize {
    std::env::var("GKDV_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every variant; the combined status is the worst one (numeric abort > config > check failure).
pub fn run_sweep(configs: &[ExperimentConfig], threads: usize) -> i32 {
    let next = AtomicUsize::new(0);
    let codes = Mutex::new(vec![exit::PASS; configs.len()]);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, configs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = configs.get(i) else { break };
                let code = run_and_report(cfg, true);
                codes.lock().expect("no worker panics while holding the lock")[i] = code;
            });
        }
    });
    codes.into_inner().expect("workers joined").into_iter().max().unwrap_or(exit::PASS)
}
