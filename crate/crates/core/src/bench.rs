//! Experiment driver behind the command-line tool: runs trials, writes CSV
//! and fits scaling exponents.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::labeler::{Algo, LabelerParams};
use crate::metrics::{summarize, RunMeta, RunReport};
use crate::reductions::{fill_from_empty, DynamicLabeler, FillReport};
use crate::seesaw::{SkewHistory, DEFAULT_C_ALPHA, DEFAULT_C_BETA};
use crate::workloads::{self, generate, lint, Op, OpStream, WorkloadKind, WorkloadSpec};

pub const CSV_HEADER: &str = "algo,n,m,workload,seed,ops,total_moves,moves_per_op,rebuild_moves,\
reset_moves,leaf_moves,expensive_leaf_moves,exp_leaf_frac,max_depth,wall_ms";

/// Sizes from this one up run unchecked under [`CheckMode::Auto`].
pub const AUTO_CHECK_LIMIT: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `m = 2n`, `m/4` spread keys, then `m/4` insertions.
    InsertOnly,
    /// Inserts and deletes at load `1 - delta`.
    Dynamic,
    /// Fill an empty array of `n` slots completely.
    Fillup,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::InsertOnly => "insert_only",
            Mode::Dynamic => "dynamic",
            Mode::Fillup => "fillup",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "insert_only" | "insert-only" => Ok(Mode::InsertOnly),
            "dynamic" => Ok(Mode::Dynamic),
            "fillup" => Ok(Mode::Fillup),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Auto,
    On,
    Off,
}

impl CheckMode {
    pub fn enabled(self, n: usize) -> bool {
        match self {
            CheckMode::Auto => n < AUTO_CHECK_LIMIT,
            CheckMode::On => true,
            CheckMode::Off => false,
        }
    }
}

impl FromStr for CheckMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(CheckMode::Auto),
            "on" => Ok(CheckMode::On),
            "off" => Ok(CheckMode::Off),
            _ => Err(Error::Config(format!("unknown check mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algos: Vec<Algo>,
    pub mode: Mode,
    /// Element counts; each must be a power of two.
    pub ns: Vec<usize>,
    pub workload: WorkloadKind,
    /// Replay this file instead of generating a stream.
    pub workload_file: Option<PathBuf>,
    /// Operations per trial; defaults depend on the mode.
    pub ops: Option<usize>,
    pub trials: usize,
    /// Trial `t` uses seed `seed + t`.
    pub seed: u64,
    pub c_alpha: f64,
    pub c_beta: f64,
    pub pma: bool,
    pub delta: f64,
    /// Array size for dynamic mode; defaults to `ceil(n / (1 - delta))`.
    pub m: Option<usize>,
    pub record_skews: bool,
    pub check: CheckMode,
    /// Worker threads; trials are independent.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algos: Algo::ALL.to_vec(),
            mode: Mode::InsertOnly,
            ns: vec![1 << 12],
            workload: WorkloadKind::Hammer { anchor: 0.5 },
            workload_file: None,
            ops: None,
            trials: 1,
            seed: 1,
            c_alpha: DEFAULT_C_ALPHA,
            c_beta: DEFAULT_C_BETA,
            pma: false,
            delta: 0.25,
            m: None,
            record_skews: false,
            check: CheckMode::Auto,
            jobs: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algos.is_empty() || self.ns.is_empty() {
            return Err(Error::Config(
                "need at least one algorithm and one size".into(),
            ));
        }
        if let Some(&n) = self.ns.iter().find(|n| !n.is_power_of_two() || **n < 4) {
            return Err(Error::Config(format!(
                "n = {n} is not a power of two of at least 4"
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.mode == Mode::Dynamic && !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::Config(format!(
                "delta {} outside (0, 1/2]",
                self.delta
            )));
        }
        if self.mode != Mode::Dynamic && self.workload_file.is_none() && self.workload.has_deletes()
        {
            return Err(Error::Config(format!(
                "{} mode needs an insert-only workload",
                self.mode
            )));
        }
        Ok(())
    }

    pub fn params(&self, algo: Algo, n: usize) -> LabelerParams {
        LabelerParams {
            c_alpha: self.c_alpha,
            c_beta: self.c_beta,
            pma: self.pma,
            check: self.check.enabled(n),
            record_skews: self.record_skews,
            ..LabelerParams::new(algo)
        }
    }

    /// Array size used for `n`.
    pub fn array_size(&self, n: usize) -> usize {
        match self.mode {
            Mode::InsertOnly => 2 * n,
            Mode::Dynamic => self
                .m
                .unwrap_or_else(|| (n as f64 / (1.0 - self.delta) - 1e-9).ceil() as usize),
            Mode::Fillup => n,
        }
    }

    fn workload_name(&self) -> String {
        match &self.workload_file {
            Some(path) => format!(
                "file:{}",
                path.file_name().map_or_else(
                    || path.display().to_string(),
                    |f| f.to_string_lossy().into_owned()
                )
            ),
            None => self.workload.to_string(),
        }
    }
}

/// Mixes a trial seed into an independent seed for the structure's coins.
pub fn structure_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A finished trial.
#[derive(Clone, Debug)]
pub struct Trial {
    pub report: RunReport,
    pub history: SkewHistory,
    /// Keys left in the structure, in order.
    pub final_keys: Vec<u64>,
}

/// Initial keys and operations of one trial.
pub fn trial_stream(
    config: &ExperimentConfig,
    n: usize,
    seed: u64,
    file: Option<&OpStream>,
) -> Result<(Vec<u64>, OpStream)> {
    let m = config.array_size(n);
    let (initial_count, default_ops, max_live) = match config.mode {
        Mode::InsertOnly => (m / 4, m / 4, m / 2),
        Mode::Dynamic => (n / 2, n, n),
        Mode::Fillup => (0, m, m),
    };
    let spec = WorkloadSpec::new(config.workload, config.ops.unwrap_or(default_ops), seed)
        .with_initial(initial_count)
        .with_max_live(max_live);
    let initial = spec.initial_keys();
    let ops = match file {
        Some(ops) => {
            lint(ops, &initial, Some(max_live))?;
            ops.clone()
        }
        None => generate(&spec)?,
    };
    Ok((initial, ops))
}

/// Runs one `(algo, n, seed)` trial.
pub fn run_trial(
    config: &ExperimentConfig,
    algo: Algo,
    n: usize,
    seed: u64,
    file: Option<&OpStream>,
) -> Result<Trial> {
    let m = config.array_size(n);
    let params = config.params(algo, n);
    let (initial, ops) = trial_stream(config, n, seed, file)?;
    let meta = RunMeta {
        algo: algo.name().into(),
        n,
        m,
        workload: config.workload_name(),
        seed,
    };
    match config.mode {
        Mode::InsertOnly => {
            if ops.len() > m / 4 {
                return Err(Error::Capacity {
                    needed: m / 4 + ops.len(),
                    available: m / 2,
                });
            }
            let mut labeler = params.build(m, &initial, structure_seed(seed))?;
            let start = labeler.array().ledger().clone();
            let clock = Instant::now();
            for op in &ops {
                match *op {
                    Op::Insert(k) => {
                        labeler.insert(k)?;
                    }
                    Op::Delete(k) => {
                        return Err(Error::Workload(format!(
                            "delete of {k} in insert-only mode"
                        )))
                    }
                }
            }
            let elapsed = clock.elapsed();
            if params.check {
                labeler.check_invariants()?;
            }
            let run = labeler.array().ledger().since(&start);
            let report = summarize(&run, labeler.max_depth(), meta, elapsed);
            let history = labeler.finish_history();
            Ok(Trial {
                report,
                history,
                final_keys: labeler.array().keys(),
            })
        }
        Mode::Dynamic => {
            let mut d =
                DynamicLabeler::new(m, config.delta, params, &initial, structure_seed(seed))?;
            let start = d.ledger().clone();
            let clock = Instant::now();
            for op in &ops {
                match *op {
                    Op::Insert(k) => d.insert(k)?,
                    Op::Delete(k) => d.delete(k)?,
                };
            }
            let elapsed = clock.elapsed();
            let run = d.ledger().since(&start);
            let report = summarize(&run, d.max_depth(), meta, elapsed);
            Ok(Trial {
                report,
                history: SkewHistory::default(),
                final_keys: d.live_keys(),
            })
        }
        Mode::Fillup => {
            let keys = ops
                .iter()
                .map(|op| match *op {
                    Op::Insert(k) => Ok(k),
                    Op::Delete(k) => Err(Error::Workload(format!("delete of {k} in fillup mode"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let clock = Instant::now();
            let FillReport { array, .. } =
                fill_from_empty(m, &keys, &params, structure_seed(seed))?;
            let elapsed = clock.elapsed();
            if params.check && (!array.is_sorted() || array.len() != m) {
                return Err(Error::invariant(
                    "fill did not end with a full sorted array",
                ));
            }
            let report = summarize(array.ledger(), 0, meta, elapsed);
            Ok(Trial {
                report,
                history: SkewHistory::default(),
                final_keys: array.keys(),
            })
        }
    }
}

/// Runs every `(algo, n, trial)` combination and returns trials ordered by
/// `(algo, n, seed)`.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<Trial>> {
    config.validate()?;
    let file = config
        .workload_file
        .as_deref()
        .map(workloads::load)
        .transpose()?;
    let mut jobs = Vec::new();
    for &algo in &config.algos {
        for &n in &config.ns {
            for t in 0..config.trials {
                jobs.push((algo, n, config.seed.wrapping_add(t as u64)));
            }
        }
    }
    jobs.sort_by_key(|&(algo, n, seed)| (algo.name(), n, seed));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Trial>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let workers = config.jobs.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(algo, n, seed)) = jobs.get(i) else {
                    break;
                };
                let trial = run_trial(config, algo, n, seed, file.as_ref());
                results.lock().expect("result lock")[i] = Some(trial);
            });
        }
    });
    results
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// One report per `(algo, n, seed)`, in that order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunReport>> {
    Ok(run_trials(config)?.into_iter().map(|t| t.report).collect())
}

fn sorted(reports: &[RunReport]) -> Vec<&RunReport> {
    let mut rows: Vec<&RunReport> = reports.iter().collect();
    rows.sort_by(|a, b| (&a.algo, a.n, a.seed).cmp(&(&b.algo, b.n, b.seed)));
    rows
}

/// Writes a header line and one row per report, ordered by `(algo, n, seed)`.
pub fn write_csv<W: Write>(reports: &[RunReport], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in sorted(reports) {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(reports: &[RunReport], path: &Path) -> Result<()> {
    write_csv(reports, std::fs::File::create(path)?)
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunReport>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {:?}", header.join(",")),
        });
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn load_csv(path: &Path) -> Result<Vec<RunReport>> {
    read_csv(std::fs::File::open(path)?)
}

/// Seed-averaged costs of one algorithm across sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub algo: String,
    pub ns: Vec<usize>,
    /// Mean moves per operation at each size.
    pub means: Vec<f64>,
    /// `means[i + 1] / means[i]`.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `ln(moves per op)` against `ln(log2 n)`.
    pub exponent: f64,
}

/// Mean of `f` over the reports at each `(algo, n)`.
pub fn seed_means(
    reports: &[RunReport],
    f: impl Fn(&RunReport) -> f64,
) -> BTreeMap<String, BTreeMap<usize, f64>> {
    let mut sums: BTreeMap<String, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in reports {
        let e = sums
            .entry(r.algo.clone())
            .or_default()
            .entry(r.n)
            .or_insert((0.0, 0));
        e.0 += f(r);
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(algo, by_n)| {
            (
                algo,
                by_n.into_iter()
                    .map(|(n, (s, c))| (n, s / c as f64))
                    .collect(),
            )
        })
        .collect()
}

pub fn fit_scaling(reports: &[RunReport]) -> Result<Vec<ScalingFit>> {
    let mut fits = Vec::new();
    for (algo, by_n) in seed_means(reports, |r| r.moves_per_op) {
        if by_n.len() < 3 {
            return Err(Error::Config(format!(
                "{algo} has {} sizes; scaling needs at least 3",
                by_n.len()
            )));
        }
        let ns: Vec<usize> = by_n.keys().copied().collect();
        let means: Vec<f64> = by_n.values().copied().collect();
        let ratios = means.windows(2).map(|w| w[1] / w[0]).collect();
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2().ln()).collect();
        let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
        fits.push(ScalingFit {
            algo,
            ns,
            means,
            ratios,
            exponent: slope(&xs, &ys),
        });
    }
    Ok(fits)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(algo: &str, n: usize, seed: u64, mpo: f64) -> RunReport {
        RunReport {
            algo: algo.into(),
            n,
            m: 2 * n,
            workload: "hammer:0.5".into(),
            seed,
            ops: 10,
            total_moves: (mpo * 10.0) as u64,
            moves_per_op: mpo,
            rebuild_moves: 0,
            reset_moves: 0,
            leaf_moves: (mpo * 10.0) as u64,
            expensive_leaf_moves: 0,
            exp_leaf_frac: 0.0,
            max_depth: 0,
            wall_ms: 1.5,
        }
    }

    #[test]
    fn parse_modes() {
        assert_eq!("insert_only".parse::<Mode>().unwrap(), Mode::InsertOnly);
        assert_eq!("fillup".parse::<Mode>().unwrap(), Mode::Fillup);
        assert!("bulk".parse::<Mode>().is_err());
        assert!(CheckMode::Auto.enabled(1 << 15));
        assert!(!CheckMode::Auto.enabled(1 << 16));
    }

    #[test]
    fn one_row_with_counters() {
        let config = ExperimentConfig {
            algos: vec![Algo::SeeSaw],
            ns: vec![1 << 12],
            ..Default::default()
        };
        let reports = run_experiment(&config).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_eq!(
            (r.algo.as_str(), r.n, r.m, r.ops),
            ("seesaw", 1 << 12, 1 << 13, 1 << 11)
        );
        assert!(r.total_moves > 0 && r.max_depth > 0);
        assert!(r.is_consistent());
    }

    #[test]
    fn same_seed_same_rows() {
        let config = ExperimentConfig {
            ns: vec![256, 512],
            trials: 2,
            jobs: 2,
            ..Default::default()
        };
        let strip = |mut rs: Vec<RunReport>| {
            rs.iter_mut().for_each(|r| r.wall_ms = 0.0);
            rs
        };
        let a = strip(run_experiment(&config).unwrap());
        assert_eq!(a.len(), 8);
        assert_eq!(a, strip(run_experiment(&config).unwrap()));
    }

    #[test]
    fn backends_agree_on_keys() {
        for mode in [Mode::InsertOnly, Mode::Dynamic, Mode::Fillup] {
            let config = ExperimentConfig {
                mode,
                ns: vec![512],
                workload: if mode == Mode::Dynamic {
                    WorkloadKind::Mixed {
                        delete_fraction: 0.3,
                    }
                } else {
                    WorkloadKind::UniformRandom
                },
                check: CheckMode::On,
                ..Default::default()
            };
            let trials = run_trials(&config).unwrap();
            assert_eq!(trials.len(), 2);
            assert_eq!(trials[0].final_keys, trials[1].final_keys, "{mode}");
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = |c: ExperimentConfig| assert!(c.validate().is_err());
        bad(ExperimentConfig {
            ns: vec![1000],
            ..Default::default()
        });
        bad(ExperimentConfig {
            trials: 0,
            ..Default::default()
        });
        bad(ExperimentConfig {
            workload: WorkloadKind::Mixed {
                delete_fraction: 0.2,
            },
            ..Default::default()
        });
        bad(ExperimentConfig {
            mode: Mode::Dynamic,
            delta: 0.9,
            ..Default::default()
        });
        let too_many = ExperimentConfig {
            ops: Some(1000),
            ns: vec![64],
            ..Default::default()
        };
        assert!(run_experiment(&too_many).is_err());
    }

    #[test]
    fn csv_shapes_and_roundtrip() {
        let mut out = Vec::new();
        write_csv(&[], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out.clone()).unwrap(),
            format!("{CSV_HEADER}\n")
        );
        assert!(read_csv(&out[..]).unwrap().is_empty());

        let reports = vec![
            report("seesaw", 8, 1, 3.25),
            report("classical", 16, 2, 1.0),
            report("classical", 8, 2, 0.1),
        ];
        let mut out = Vec::new();
        write_csv(&reports, &mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        let back = read_csv(&out[..]).unwrap();
        assert_eq!(
            back,
            vec![reports[2].clone(), reports[1].clone(), reports[0].clone()]
        );
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        let reports = vec![report("seesaw", 8, 1, 2.0)];
        emit_csv(&reports, &path).unwrap();
        assert_eq!(load_csv(&path).unwrap(), reports);
        assert!(emit_csv(&reports, &dir.path().join("missing/runs.csv")).is_err());
    }

    #[test]
    fn scaling_fits() {
        let series = |f: fn(f64) -> f64| -> Vec<RunReport> {
            [8u32, 16, 32]
                .iter()
                .map(|&lg| report("x", 1usize << lg, 1, f(f64::from(lg))))
                .collect()
        };
        let fit = &fit_scaling(&series(|lg| lg * lg)).unwrap()[0];
        assert!((fit.exponent - 2.0).abs() < 0.01);
        assert_eq!(fit.ratios, vec![4.0, 4.0]);
        let fit = &fit_scaling(&series(|lg| lg)).unwrap()[0];
        assert!((fit.exponent - 1.0).abs() < 0.01);
        let fit = &fit_scaling(&series(|_| 7.0)).unwrap()[0];
        assert_eq!(fit.ratios, vec![1.0, 1.0]);
        assert!(fit_scaling(&series(|lg| lg)[..2]).is_err());
    }

    #[test]
    fn seeds_average() {
        let reports = vec![report("a", 8, 1, 1.0), report("a", 8, 2, 3.0)];
        assert_eq!(seed_means(&reports, |r| r.moves_per_op)["a"][&8], 2.0);
    }

    #[test]
    fn structure_seeds_differ() {
        assert_ne!(structure_seed(1), structure_seed(2));
        assert_ne!(structure_seed(1), 1);
    }
}
