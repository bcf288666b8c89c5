//! Seeded operation streams and their text file format.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::Key;
use crate::error::{Error, Result};

/// Keys live in `[1, KEY_LIMIT)`.
pub const KEY_LIMIT: Key = 1 << 63;

/// Spacing budget for the initial keys; leaves room above the last one.
const INITIAL_SPAN: Key = 1 << 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Insert(Key),
    Delete(Key),
}

impl Op {
    pub fn key(self) -> Key {
        match self {
            Op::Insert(k) | Op::Delete(k) => k,
        }
    }
}

pub type OpStream = Vec<Op>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WorkloadKind {
    SeqAsc,
    SeqDesc,
    UniformRandom,
    /// Ascending keys packed right after the initial key at this fraction of the set.
    Hammer {
        anchor: f64,
    },
    /// Ascending runs starting at random points.
    Bursty {
        clusters: usize,
    },
    /// Uniform inserts interleaved with deletes of random live keys.
    Mixed {
        delete_fraction: f64,
    },
}

impl WorkloadKind {
    pub fn name(&self) -> &'static str {
        match self {
            WorkloadKind::SeqAsc => "seq_asc",
            WorkloadKind::SeqDesc => "seq_desc",
            WorkloadKind::UniformRandom => "uniform_random",
            WorkloadKind::Hammer { .. } => "hammer",
            WorkloadKind::Bursty { .. } => "bursty",
            WorkloadKind::Mixed { .. } => "mixed",
        }
    }

    pub fn has_deletes(&self) -> bool {
        matches!(self, WorkloadKind::Mixed { delete_fraction } if *delete_fraction > 0.0)
    }
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkloadKind::Hammer { anchor } => write!(f, "hammer:{anchor}"),
            WorkloadKind::Bursty { clusters } => write!(f, "bursty:{clusters}"),
            WorkloadKind::Mixed { delete_fraction } => write!(f, "mixed:{delete_fraction}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for WorkloadKind {
    type Err = Error;

    /// `seq_asc`, `seq_desc`, `uniform_random`, `hammer[:anchor]`,
    /// `bursty[:clusters]` or `mixed[:delete_fraction]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let bad = |what: &str| Error::Workload(format!("bad {what} in workload {s:?}"));
        let kind = match name {
            "seq_asc" => WorkloadKind::SeqAsc,
            "seq_desc" => WorkloadKind::SeqDesc,
            "uniform_random" | "uniform" => WorkloadKind::UniformRandom,
            "hammer" => WorkloadKind::Hammer {
                anchor: arg.map_or(Ok(0.5), |a| a.parse().map_err(|_| bad("anchor")))?,
            },
            "bursty" => WorkloadKind::Bursty {
                clusters: arg.map_or(Ok(8), |a| a.parse().map_err(|_| bad("cluster count")))?,
            },
            "mixed" => WorkloadKind::Mixed {
                delete_fraction: arg.map_or(Ok(0.3), |a| a.parse().map_err(|_| bad("fraction")))?,
            },
            _ => return Err(Error::Workload(format!("unknown workload {s:?}"))),
        };
        if arg.is_some()
            && matches!(
                kind,
                WorkloadKind::SeqAsc | WorkloadKind::SeqDesc | WorkloadKind::UniformRandom
            )
        {
            return Err(bad("argument"));
        }
        Ok(kind)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    /// Operations to emit.
    pub count: usize,
    pub seed: u64,
    /// Keys already stored before the stream starts; see [`initial_keys`].
    pub initial_count: usize,
    /// Most live keys allowed at any prefix.
    pub max_live: Option<usize>,
}

impl WorkloadSpec {
    pub fn new(kind: WorkloadKind, count: usize, seed: u64) -> Self {
        WorkloadSpec {
            kind,
            count,
            seed,
            initial_count: 0,
            max_live: None,
        }
    }

    pub fn with_initial(mut self, initial_count: usize) -> Self {
        self.initial_count = initial_count;
        self
    }

    pub fn with_max_live(mut self, max_live: usize) -> Self {
        self.max_live = Some(max_live);
        self
    }

    pub fn initial_keys(&self) -> Vec<Key> {
        initial_keys(self.initial_count)
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            WorkloadKind::Hammer { anchor } if !(0.0..=1.0).contains(&anchor) => Err(
                Error::Workload(format!("hammer anchor {anchor} outside [0, 1]")),
            ),
            WorkloadKind::Bursty { clusters: 0 } => {
                Err(Error::Workload("bursty needs at least one cluster".into()))
            }
            WorkloadKind::Mixed { delete_fraction } if !(0.0..=1.0).contains(&delete_fraction) => {
                Err(Error::Workload(format!(
                    "delete fraction {delete_fraction} outside [0, 1]"
                )))
            }
            _ => {
                let inserts = if self.kind.has_deletes() {
                    0
                } else {
                    self.count
                };
                if let Some(max) = self.max_live {
                    if self.initial_count > max || self.initial_count + inserts > max {
                        return Err(Error::Workload(format!(
                            "{} initial keys plus {inserts} inserts exceed the live limit {max}",
                            self.initial_count
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// `count` keys spaced evenly over `[1, 2^62]`.
pub fn initial_keys(count: usize) -> Vec<Key> {
    let spacing = INITIAL_SPAN / (count as Key + 1);
    (1..=count as Key).map(|i| i * spacing).collect()
}

/// Materializes the stream described by `spec`. Pure in `spec`.
pub fn generate(spec: &WorkloadSpec) -> Result<OpStream> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let initial = spec.initial_keys();
    let count = spec.count;
    let ops = match spec.kind {
        WorkloadKind::SeqAsc | WorkloadKind::SeqDesc => {
            let limit = initial.first().copied().unwrap_or(KEY_LIMIT);
            if count as Key >= limit {
                return Err(Error::Workload(format!(
                    "{count} sequential keys do not fit below the first stored key {limit}"
                )));
            }
            let keys = 1..=count as Key;
            if spec.kind == WorkloadKind::SeqAsc {
                keys.map(Op::Insert).collect()
            } else {
                keys.rev().map(Op::Insert).collect()
            }
        }
        WorkloadKind::UniformRandom => {
            let mut used: HashSet<Key> = initial.iter().copied().collect();
            let mut ops = Vec::with_capacity(count);
            while ops.len() < count {
                let k = rng.gen_range(1..KEY_LIMIT);
                if used.insert(k) {
                    ops.push(Op::Insert(k));
                }
            }
            ops
        }
        WorkloadKind::Hammer { anchor } => hammer(&initial, anchor, count)?
            .into_iter()
            .map(Op::Insert)
            .collect(),
        WorkloadKind::Bursty { clusters } => bursty(&initial, clusters, count, &mut rng)?,
        WorkloadKind::Mixed { delete_fraction } => {
            mixed(&initial, delete_fraction, count, spec.max_live, &mut rng)?
        }
    };
    lint(&ops, &initial, spec.max_live)?;
    Ok(ops)
}

/// Keys `anchor_key + 1 + i * step`, each strictly between the previous one
/// and the anchor's successor.
fn hammer(initial: &[Key], anchor: f64, count: usize) -> Result<Vec<Key>> {
    let (low, high) = if initial.is_empty() {
        let low = (anchor * INITIAL_SPAN as f64) as Key;
        (low, KEY_LIMIT)
    } else {
        let rank = ((anchor * initial.len() as f64) as usize).min(initial.len() - 1);
        let low = initial[rank];
        (low, initial.get(rank + 1).copied().unwrap_or(KEY_LIMIT))
    };
    let room = high - low - 1;
    if (count as Key) > room {
        return Err(Error::Workload(format!(
            "hammer gap ({low}, {high}) cannot hold {count} keys; use a wider key space"
        )));
    }
    let step = (room / (count as Key + 1)).max(1);
    Ok((0..count as Key).map(|i| low + 1 + i * step).collect())
}

fn bursty(
    initial: &[Key],
    clusters: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<OpStream> {
    let used: HashSet<Key> = initial.iter().copied().collect();
    let run = count.div_ceil(clusters).max(1);
    let mut taken = BTreeSet::new();
    let mut ops = Vec::with_capacity(count);
    let mut attempts = 0;
    while ops.len() < count {
        attempts += 1;
        if attempts > 64 * clusters + 1024 {
            return Err(Error::Workload("could not place bursty clusters".into()));
        }
        let len = run.min(count - ops.len());
        let base = rng.gen_range(1..KEY_LIMIT - len as Key - 1);
        let keys = base..base + len as Key;
        if taken.range(keys.clone()).next().is_some() || keys.clone().any(|k| used.contains(&k)) {
            continue;
        }
        for k in keys {
            taken.insert(k);
            ops.push(Op::Insert(k));
        }
    }
    Ok(ops)
}

fn mixed(
    initial: &[Key],
    delete_fraction: f64,
    count: usize,
    max_live: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<OpStream> {
    // Live keys with O(1) random removal.
    let mut live: Vec<Key> = initial.to_vec();
    let mut index: HashMap<Key, usize> = live.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let mut ever: HashSet<Key> = live.iter().copied().collect();
    let max_live = max_live.unwrap_or(usize::MAX);
    let mut ops = Vec::with_capacity(count);
    for _ in 0..count {
        let delete = !live.is_empty() && (live.len() >= max_live || rng.gen_bool(delete_fraction));
        if delete {
            let i = rng.gen_range(0..live.len());
            let k = live.swap_remove(i);
            index.remove(&k);
            if i < live.len() {
                index.insert(live[i], i);
            }
            ops.push(Op::Delete(k));
        } else {
            if live.len() >= max_live {
                return Err(Error::Workload("live limit is zero".into()));
            }
            let k = loop {
                let k = rng.gen_range(1..KEY_LIMIT);
                if ever.insert(k) {
                    break k;
                }
            };
            index.insert(k, live.len());
            live.push(k);
            ops.push(Op::Insert(k));
        }
    }
    Ok(ops)
}

/// Checks that `ops` never inserts a live key, never deletes an absent
/// one, and keeps at most `max_live` keys live.
pub fn lint(ops: &[Op], initial: &[Key], max_live: Option<usize>) -> Result<()> {
    let mut live: HashSet<Key> = HashSet::with_capacity(initial.len() + ops.len());
    for &k in initial {
        if !live.insert(k) {
            return Err(Error::Workload(format!("initial key {k} repeated")));
        }
    }
    let max = max_live.unwrap_or(usize::MAX);
    if live.len() > max {
        return Err(Error::Workload(format!(
            "{} initial keys exceed {max}",
            live.len()
        )));
    }
    for (i, op) in ops.iter().enumerate() {
        match *op {
            Op::Insert(k) => {
                if k == 0 || k >= KEY_LIMIT {
                    return Err(Error::Workload(format!(
                        "op {i}: key {k} outside the key space"
                    )));
                }
                if !live.insert(k) {
                    return Err(Error::Workload(format!(
                        "op {i}: key {k} inserted while live"
                    )));
                }
                if live.len() > max {
                    return Err(Error::Workload(format!(
                        "op {i}: more than {max} live keys"
                    )));
                }
            }
            Op::Delete(k) => {
                if !live.remove(&k) {
                    return Err(Error::Workload(format!(
                        "op {i}: key {k} deleted while absent"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Writes one op per line: `I <key>` or `D <key>`.
pub fn write_stream<W: Write>(ops: &[Op], mut out: W) -> Result<()> {
    for op in ops {
        match op {
            Op::Insert(k) => writeln!(out, "I {k}")?,
            Op::Delete(k) => writeln!(out, "D {k}")?,
        }
    }
    out.flush()?;
    Ok(())
}

/// Parses the format written by [`write_stream`]. Blank lines are skipped.
pub fn read_stream<R: BufRead>(input: R) -> Result<OpStream> {
    let mut ops = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let (tag, rest) = text
            .split_once(char::is_whitespace)
            .ok_or_else(|| parse_err(format!("expected `I <key>` or `D <key>`, got {text:?}")))?;
        let key: Key = rest
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad key {:?}: {e}", rest.trim())))?;
        ops.push(match tag {
            "I" => Op::Insert(key),
            "D" => Op::Delete(key),
            other => return Err(parse_err(format!("unknown op {other:?}"))),
        });
    }
    Ok(ops)
}

pub fn save(ops: &[Op], path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_stream(ops, std::io::BufWriter::new(file))
}

pub fn load(path: &std::path::Path) -> Result<OpStream> {
    let file = std::fs::File::open(path)?;
    read_stream(std::io::BufReader::new(file))
}
