use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use listlabel::bench::{self, CheckMode, ExperimentConfig, Mode};
use listlabel::labeler::Algo;
use listlabel::metrics::check_history;
use listlabel::seesaw::{DEFAULT_C_ALPHA, DEFAULT_C_BETA};
use listlabel::workloads::WorkloadKind;
use listlabel::Error;

/// Run list-labeling experiments and print one CSV row per trial.
#[derive(Parser, Debug)]
#[command(name = "listlabel", version)]
struct Cli {
    /// Algorithms: classical, seesaw, or all (comma separated).
    #[arg(long, default_value = "all", value_delimiter = ',')]
    algo: Vec<String>,

    /// insert_only, dynamic or fillup.
    #[arg(long, default_value = "insert_only")]
    mode: Mode,

    /// Element counts, powers of two; `2^k` is accepted.
    #[arg(long, default_value = "4096", value_delimiter = ',', value_parser = parse_size)]
    n: Vec<usize>,

    /// seq_asc, seq_desc, uniform, hammer[:anchor], bursty[:clusters], mixed[:delete_fraction].
    #[arg(long, default_value = "hammer:0.5")]
    workload: WorkloadKind,

    /// Replay operations from a file of `I <key>` / `D <key>` lines.
    #[arg(long)]
    workload_file: Option<PathBuf>,

    /// Operations per trial.
    #[arg(long)]
    ops: Option<usize>,

    #[arg(long, default_value_t = 1)]
    trials: usize,

    /// First seed; trial t uses seed + t.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Write CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,

    #[arg(long, default_value_t = DEFAULT_C_ALPHA)]
    c_alpha: f64,

    #[arg(long, default_value_t = DEFAULT_C_BETA)]
    c_beta: f64,

    /// Keep gaps between elements bounded.
    #[arg(long)]
    pma: bool,

    /// Slack fraction for dynamic mode.
    #[arg(long, default_value_t = 0.25)]
    delta: f64,

    /// Array size for dynamic mode.
    #[arg(long)]
    m: Option<usize>,

    /// Record per-window skews and verify the squared-skew identity.
    #[arg(long)]
    record_skews: bool,

    /// Structural checks after every operation: auto, on or off.
    #[arg(long, default_value = "auto")]
    check: CheckMode,

    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn parse_size(s: &str) -> Result<usize, String> {
    let parsed = match s.strip_prefix("2^") {
        Some(exp) => exp.parse::<u32>().ok().and_then(|e| 1usize.checked_shl(e)),
        None => s.parse().ok(),
    };
    parsed.ok_or_else(|| format!("invalid size {s:?}"))
}

fn parse_algos(names: &[String]) -> listlabel::Result<Vec<Algo>> {
    let mut algos = Vec::new();
    for name in names {
        if name == "all" {
            algos.extend(Algo::ALL);
        } else {
            algos.push(name.parse()?);
        }
    }
    algos.sort();
    algos.dedup();
    Ok(algos)
}

fn run(cli: Cli) -> listlabel::Result<()> {
    let config = ExperimentConfig {
        algos: parse_algos(&cli.algo)?,
        mode: cli.mode,
        ns: cli.n,
        workload: cli.workload,
        workload_file: cli.workload_file,
        ops: cli.ops,
        trials: cli.trials,
        seed: cli.seed,
        c_alpha: cli.c_alpha,
        c_beta: cli.c_beta,
        pma: cli.pma,
        delta: cli.delta,
        m: cli.m,
        record_skews: cli.record_skews,
        check: cli.check,
        jobs: cli.jobs,
    };
    let trials = bench::run_trials(&config)?;
    let reports: Vec<_> = trials.iter().map(|t| t.report.clone()).collect();
    match &cli.csv {
        Some(path) => bench::emit_csv(&reports, path)?,
        None => bench::write_csv(&reports, std::io::stdout().lock())?,
    }

    if config.record_skews {
        let mut total = listlabel::metrics::TelescopingSummary::default();
        for t in &trials {
            let s = check_history(&t.history, 2);
            total.subproblems += s.subproblems;
            total.levels += s.levels;
            total.nonzero_residuals += s.nonzero_residuals;
        }
        eprintln!(
            "telescoping: {} subproblems, {} levels, {} nonzero residuals",
            total.subproblems, total.levels, total.nonzero_residuals
        );
        if total.nonzero_residuals > 0 {
            return Err(Error::Invariant("nonzero telescoping residual".into()));
        }
    }
    if config.ns.len() >= 3 {
        let mut err = std::io::stderr().lock();
        for fit in bench::fit_scaling(&reports)? {
            let ratios: Vec<String> = fit.ratios.iter().map(|r| format!("{r:.3}")).collect();
            writeln!(
                err,
                "{}: exponent {:.3}, doubling ratios [{}]",
                fit.algo,
                fit.exponent,
                ratios.join(", ")
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_integrity_failure() { 1 } else { 2 })
        }
    }
}
