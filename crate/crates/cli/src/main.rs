use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bures_core::families::{self, DensityFamily};
use bures_core::priors::{self, export_catalog};
use bures_core::probability::{self, mass, run_scenario, PriorSource, RunOptions, ScenarioResult};
use bures_core::region::RegionSpec;
use bures_core::Error;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "bures", version, about = "Bures-prior separability probabilities for density-matrix families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List scenario ids with parameter count, dimensions and headline targets
    List,
    /// Run one scenario
    Run {
        id: String,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        settings: Settings,
    },
    /// Run every scenario and report each target
    Verify {
        /// Comma-separated subset of scenario ids
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        settings: Settings,
    },
    /// Normalized prior (1D) or outer-variable marginal (nested regions) as CSV
    PlotData {
        id: String,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[command(flatten)]
        settings: Settings,
    },
    /// Dump the closed-form prior catalog as JSON
    Catalog,
}

#[derive(Args, Clone, Default)]
struct Settings {
    /// Tolerance override, `target=value` or `scenario.target=value`
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    tol: Vec<String>,
    /// Reference value override, `target=value` or `scenario.target=value`
    #[arg(long = "paper", value_name = "KEY=VALUE")]
    paper: Vec<String>,
    /// File of `key = value` settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// default, engine or catalog:<id>
    #[arg(long)]
    prior: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReportDocument {
    version: String,
    scenarios: Vec<ScenarioResult>,
    pass: bool,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(_) | Error::UnknownId(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type CliResult = std::result::Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::List => cmd_list(),
        Command::Run { id, json, csv, settings } => cmd_run(&id, json, csv, &settings),
        Command::Verify { only, json, settings } => cmd_verify(&only, json, &settings),
        Command::PlotData { id, points, settings } => cmd_plot_data(&id, points, &settings),
        Command::Catalog => cmd_catalog(),
    };
    match out {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn options(settings: &Settings, scenario: Option<&str>) -> Result<RunOptions, Failure> {
    let mut o = RunOptions::default();
    if let Some(path) = &settings.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        o.apply_config_text(&text)?;
    }
    let qualify = |k: &str| -> Result<String, Failure> {
        match (k.contains('.'), scenario) {
            (true, _) => Ok(k.to_string()),
            (false, Some(s)) => Ok(format!("{s}.{k}")),
            (false, None) => Err(Failure::Usage(format!("`{k}` needs a scenario prefix"))),
        }
    };
    for (prefix, list) in [("tol", &settings.tol), ("ref", &settings.paper)] {
        for kv in list {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("expected KEY=VALUE, got `{kv}`")))?;
            o.set(&format!("{prefix}.{}", qualify(k.trim())?), v)?;
        }
    }
    if let Some(p) = &settings.prior {
        o.set("prior", p)?;
    }
    Ok(o)
}

fn headline(id: &str) -> &'static str {
    match id {
        "s1_equal_intra" | "s2_two_pos_one_neg" => "p_sep=1/2",
        "s3_equal_inter" => "p_sep=1/2+asin(1/3)/pi",
        "s4_intra_vs_inter" => "p_sep=.702675",
        "s5_all_nine" | "s6_all_fifteen" | "s7_antisym_inter" | "diag4" => "p_sep=1",
        "werner_qq" => "p_sep=1/4",
        "twoparam_intra" | "tsallis_q1" | "tsallis_qhalf" => "p_sep=sqrt2-1",
        "threeparam_intra" => "Z=pi^2/8",
        "diag4_unitary" => "p_sep=.112",
        "werner_qutrit" => "improper; integrals 1.05879, 9.62137e9",
        "werner_qubit_qutrit" => "improper; PPT boundary 1/4",
        "sixlevel_s1" => "p_sep=.607921",
        "rho_q" => "block and determinant checks",
        "rho_p" => "restricted volume; v-marginal",
        "bloch2" => "metric cross-checks",
        "rains_smolin" => "Z=1; half-width 5.13523",
        _ => "",
    }
}

fn cmd_list() -> CliResult {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:<22} {:>2} {:>5}  targets", "id", "k", "dims");
    for id in probability::scenario_ids() {
        let (k, dims) = match families::family(id) {
            Ok(f) => (f.k().to_string(), f.dims.to_string()),
            Err(_) => {
                let k = match id {
                    "rains_smolin" => 1,
                    _ => 2,
                };
                (k.to_string(), "-".into())
            }
        };
        let _ = writeln!(out, "{id:<22} {k:>2} {dims:>5}  {}", headline(id));
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_for(results: &[ScenarioResult]) -> ExitCode {
    if results.iter().any(|r| !r.converged) {
        ExitCode::from(3)
    } else if results.iter().all(|r| r.pass()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

fn write_table(out: &mut impl Write, r: &ScenarioResult) {
    let _ = writeln!(
        out,
        "{}  prior={}  Z={}  S={}  p_sep={}  err={:.1e}  improper={}  converged={}",
        r.family,
        r.prior,
        fmt_opt(r.z),
        fmt_opt(r.s),
        fmt_opt(r.p_sep),
        r.err,
        r.improper,
        r.converged
    );
    for t in &r.targets {
        let _ = writeln!(
            out,
            "  {} {:<36} ref={:<14e} got={:<24} diff={:<10} tol={:e} ({:?})",
            if t.pass { "PASS" } else { "FAIL" },
            t.name,
            t.paper,
            fmt_opt(t.computed),
            t.abs_diff.map_or_else(String::new, |d| format!("{d:.2e}")),
            t.tol,
            t.tol_kind
        );
    }
    for (k, v) in &r.quantities {
        let _ = writeln!(out, "  ---- {k} = {v:e}");
    }
}

fn write_csv(out: &mut impl Write, r: &ScenarioResult) {
    let _ = writeln!(out, "family,name,paper,computed,abs_diff,tol,tol_kind,pass");
    for t in &r.targets {
        let _ = writeln!(
            out,
            "{},{},{:e},{},{},{:e},{},{}",
            r.family,
            t.name,
            t.paper,
            fmt_opt(t.computed),
            fmt_opt(t.abs_diff),
            t.tol,
            serde_json::to_value(t.tol_kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            t.pass
        );
    }
}

fn cmd_run(id: &str, json: bool, csv: bool, settings: &Settings) -> CliResult {
    let opts = options(settings, Some(id))?;
    let start = Instant::now();
    let r = run_scenario(id, &opts)?;
    eprintln!("{id}: {:.2}s", start.elapsed().as_secs_f64());
    let mut out = std::io::stdout().lock();
    if json {
        let text = serde_json::to_string_pretty(&r).map_err(|e| Failure::Numerical(e.to_string()))?;
        let _ = writeln!(out, "{text}");
    } else if csv {
        write_csv(&mut out, &r);
    } else {
        write_table(&mut out, &r);
    }
    Ok(exit_for(std::slice::from_ref(&r)))
}

fn cmd_verify(only: &[String], json: bool, settings: &Settings) -> CliResult {
    let all = probability::scenario_ids();
    let mut ids: Vec<&str> = if only.is_empty() {
        all.clone()
    } else {
        for o in only {
            if !all.contains(&o.as_str()) {
                return Err(Error::UnknownId(o.clone()).into());
            }
        }
        only.iter().map(String::as_str).collect()
    };
    ids.sort_unstable();
    ids.dedup();
    let opts = options(settings, None)?;
    let start = Instant::now();
    let runs: Vec<(f64, bures_core::Result<ScenarioResult>)> = ids
        .par_iter()
        .map(|id| {
            let t = Instant::now();
            let r = run_scenario(id, &opts);
            (t.elapsed().as_secs_f64(), r)
        })
        .collect();
    let mut scenarios = Vec::with_capacity(runs.len());
    for (id, (secs, r)) in ids.iter().zip(runs) {
        eprintln!("{id}: {secs:.2}s");
        scenarios.push(r?);
    }
    eprintln!("total: {:.2}s", start.elapsed().as_secs_f64());
    let doc = ReportDocument {
        version: VERSION.to_string(),
        pass: scenarios.iter().all(ScenarioResult::pass),
        scenarios,
    };
    let mut out = std::io::stdout().lock();
    if json {
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Numerical(e.to_string()))?;
        let _ = writeln!(out, "{text}");
    } else {
        for r in &doc.scenarios {
            write_table(&mut out, r);
        }
        let (n, failed) = doc
            .scenarios
            .iter()
            .flat_map(|r| &r.targets)
            .fold((0, 0), |(n, f), t| (n + 1, f + usize::from(!t.pass)));
        let _ = writeln!(out, "{} targets, {failed} failed: {}", n, if doc.pass { "PASS" } else { "FAIL" });
    }
    Ok(exit_for(&doc.scenarios))
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn cmd_plot_data(id: &str, points: usize, settings: &Settings) -> CliResult {
    if points == 0 {
        return Err(Failure::Usage("--points must be positive".into()));
    }
    let opts = options(settings, Some(id))?;
    let mut out = std::io::stdout().lock();
    if id == "rains_smolin" {
        let u = priors::rains_smolin_half_width();
        let _ = writeln!(out, "x,density");
        for x in grid(-u, u, points) {
            let _ = writeln!(out, "{x},{}", priors::rains_smolin_density(x));
        }
        return Ok(ExitCode::SUCCESS);
    }
    let fam: DensityFamily = families::family(id)?;
    match &fam.feasible {
        RegionSpec::Interval(iv) => {
            let prior = PriorSource::for_family(&fam, &opts.prior)?;
            let z = if prior.improper() {
                1.0
            } else {
                mass(&prior, &fam.feasible, &fam.breakpoints, &opts.quad_1d)?.value
            };
            let label = if prior.improper() { "prior" } else { "normalized_prior" };
            let _ = writeln!(out, "{},{label}", fam.param_names[0]);
            for x in grid(iv.lo, iv.hi, points) {
                // rank-deficient boundary states, where the volume element blows up
                let boundary = fam.min_eigenvalue(&[x]).map_or(true, |l| l <= 1e-12);
                let v = if boundary { f64::INFINITY } else { prior.eval(&[x]).map_or(f64::INFINITY, |p| p / z) };
                let _ = writeln!(out, "{x},{v}");
            }
        }
        RegionSpec::Nested(region) => {
            let outer = region.levels[0].interval(&[]);
            let h = outer.width() / points as f64;
            let xs: Vec<f64> = (0..points).map(|i| outer.lo + h * (i as f64 + 0.5)).collect();
            let m = probability::marginal(&fam, &xs, &opts)?;
            let _ = writeln!(out, "{},marginal", region.variable_names()[0]);
            for (x, d) in m {
                let _ = writeln!(out, "{x},{d}");
            }
        }
        other => {
            return Err(Failure::Usage(format!("no plot data for a {} region", other.kind_label())));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_catalog() -> CliResult {
    let text = serde_json::to_string_pretty(&export_catalog()).map_err(|e| Failure::Numerical(e.to_string()))?;
    println!("{text}");
    Ok(ExitCode::SUCCESS)
}
