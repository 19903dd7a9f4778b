mod config;
mod run;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fastham::exec::{init_threads, par_map_with, Execution};
use fastham::hamiltonian::io::{schedule_from_json, schedule_to_json};
use fastham::hamiltonian::{validate_norm_budget, BudgetVerdict};
use fastham::Error;

use config::{Config, ConfigError};
use run::{loglog_slope, Row, RunOutput, REPORT_HEADER, SPEC_VERSION};

#[derive(Parser)]
#[command(name = "fastham", version, about = "Fast Hamiltonian protocols with a large ancilla register")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for batch work.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol and write report.csv, schedule.json and optionally state_final.csv.
    Simulate(RunArgs),
    /// Run the config's parameter grid and write scan.csv.
    Scan(RunArgs),
    /// Check every segment of a schedule file against the coupling budget.
    Validate {
        /// Schedule JSON file.
        schedule: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cross-check against full-register evolution when small enough.
    #[arg(long)]
    oracle: bool,
}

enum Failure {
    Config(String),
    Run(Error),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Run(
                Error::InvalidParameter(_) | Error::InvalidSpace(_) | Error::UnknownQubit(_) | Error::SizeGuard { .. },
            ) => 1,
            Failure::Run(Error::NoConvergence { .. } | Error::IllConditioned(_) | Error::Linalg(_)) => 3,
            Failure::Run(_) | Failure::Validation(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) | Failure::Validation(m) => f.write_str(m),
            Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Run(Error::Format(format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn prepare(args: &RunArgs) -> Result<(Config, u64, PathBuf), Failure> {
    let cfg = Config::load(&args.config)?;
    let seed = match (args.seed, cfg.seed) {
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) if cfg.protocol.randomized() => {
            return Err(Failure::Config(format!(
                "{}: protocol `{}` is randomized and needs a seed (`seed` in the config or --seed)",
                args.config.display(),
                cfg.protocol.name()
            )))
        }
        (None, None) => 0,
    };
    let out = args.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    Ok((cfg, seed, out))
}

fn simulate(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, seed, out) = prepare(args)?;
    let RunOutput { row, schedule, states } = run::run(&cfg, seed, args.oracle, Execution::Parallel)?;
    write_csv(&out.join("report.csv"), &REPORT_HEADER, [row.fields()])?;
    if let Some(s) = schedule {
        let path = out.join("schedule.json");
        fs::write(&path, schedule_to_json(&s)?).map_err(|e| io_err(&path, e))?;
    }
    if cfg.dump_state {
        let rows = states.iter().flat_map(|d| {
            d.amplitudes.iter().map(move |(di, ai, a)| {
                vec![
                    SPEC_VERSION.to_string(),
                    seed.to_string(),
                    d.input.clone(),
                    di.to_string(),
                    ai.to_string(),
                    a.re.to_string(),
                    a.im.to_string(),
                ]
            })
        });
        write_csv(
            &out.join("state_final.csv"),
            &["spec_version", "seed", "input", "data_index", "ancilla_index", "re", "im"],
            rows,
        )?;
    }
    println!("{}", summary(&row));
    Ok(())
}

fn summary(row: &Row) -> String {
    let f = row.fidelity.map_or("-".to_string(), |x| format!("{x:.6}"));
    let e = row.worst_case_error.map_or("-".to_string(), |x| format!("{x:.3e}"));
    format!("{} N={} T={:.6} fidelity={f} worst_case_error={e}", row.protocol, row.n_anc, row.total_time)
}

fn scan(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, seed, out) = prepare(args)?;
    let points: Vec<Config> = cfg.grid_points()?.into_iter().map(|p| cfg.at_point(p)).collect();
    // Points run in parallel; each point runs its own inner work sequentially.
    let results = par_map_with(Execution::Parallel, &points, |c| run::run(c, seed, args.oracle, Execution::Sequential));
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?.row);
    }
    rows.sort_by(|a, b| a.key().cmp(&b.key()));

    let mut groups: BTreeMap<(usize, u64), Vec<&Row>> = BTreeMap::new();
    for r in &rows {
        let (_, k, dt) = r.key();
        groups.entry((k, dt)).or_default().push(r);
    }
    let slopes: BTreeMap<(usize, u64), (Option<f64>, Option<f64>)> = groups
        .iter()
        .map(|(key, rs)| {
            let err: Vec<(f64, f64)> =
                rs.iter().filter_map(|r| r.worst_case_error.map(|e| (r.n_anc as f64, e))).collect();
            let time: Vec<(f64, f64)> = rs.iter().map(|r| (r.n_anc as f64, r.total_time)).collect();
            (*key, (loglog_slope(&err), loglog_slope(&time)))
        })
        .collect();

    let mut header: Vec<&str> = REPORT_HEADER.to_vec();
    header.extend(["slope_error_vs_N", "slope_T_vs_N"]);
    let lines = rows.iter().map(|r| {
        let (_, k, dt) = r.key();
        let (se, st) = slopes[&(k, dt)];
        let mut f = r.fields();
        f.push(se.map(|x| x.to_string()).unwrap_or_default());
        f.push(st.map(|x| x.to_string()).unwrap_or_default());
        f
    });
    write_csv(&out.join("scan.csv"), &header, lines)?;
    for ((_, _), (se, st)) in &slopes {
        let fmt = |s: &Option<f64>| s.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!("slope error vs N = {}, slope T vs N = {}", fmt(se), fmt(st));
    }
    Ok(())
}

fn validate(path: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let schedule = schedule_from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut worst: Option<(usize, f64, String)> = None;
    let mut failed = 0;
    for (i, (spec, duration)) in schedule.segments().enumerate() {
        let verdict = validate_norm_budget(spec);
        println!("segment {i} (duration {duration}): {verdict}");
        if !verdict.is_ok() {
            failed += 1;
        }
        if let BudgetVerdict::Ok(r) | BudgetVerdict::Violation(r) = &verdict {
            if worst.as_ref().is_none_or(|w| r.worst_ratio > w.1) {
                let t = r.worst_tuple.as_ref().map_or("none".to_string(), |t| t.to_string());
                worst = Some((i, r.worst_ratio, t));
            }
        }
    }
    if let Some((i, ratio, t)) = &worst {
        println!("worst tuple: {t} in segment {i}, ratio {ratio:.6}");
    }
    if failed == 0 {
        println!("verdict: ok ({} segments)", schedule.n_segments());
        Ok(())
    } else {
        Err(Failure::Validation(format!("verdict: violation ({failed} of {} segments fail)", schedule.n_segments())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = init_threads(n) {
            eprintln!("error: --threads {n}: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Scan(a) => scan(a),
        Command::Validate { schedule } => validate(schedule),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
