//! A common interface over the insert-only labelers.

use std::fmt;
use std::str::FromStr;

use crate::array::{Key, LabeledArray};
use crate::classical::{ClassicalArray, ClassicalParams};
use crate::error::{Error, Result};
use crate::seesaw::{SeeSaw, SeeSawConfig, SkewHistory, DEFAULT_C_ALPHA, DEFAULT_C_BETA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Classical,
    SeeSaw,
}

impl Algo {
    pub const ALL: [Algo; 2] = [Algo::Classical, Algo::SeeSaw];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Classical => "classical",
            Algo::SeeSaw => "seesaw",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Algo::Classical),
            "seesaw" => Ok(Algo::SeeSaw),
            _ => Err(Error::Config(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// An insert-only list labeler that owns its array.
pub trait Labeler: Send {
    /// Inserts `key`, returning the moves it cost.
    fn insert(&mut self, key: Key) -> Result<u64>;

    fn array(&self) -> &LabeledArray;

    fn array_mut(&mut self) -> &mut LabeledArray;

    fn into_array(self: Box<Self>) -> LabeledArray;

    /// Most keys the structure accepts.
    fn capacity(&self) -> usize;

    fn check_invariants(&self) -> Result<()>;

    /// Deepest subproblem reached so far; 0 for flat structures.
    fn max_depth(&self) -> u32 {
        0
    }

    /// Window skews recorded so far; empty unless recording was enabled.
    fn finish_history(&mut self) -> SkewHistory {
        SkewHistory::default()
    }

    fn len(&self) -> usize {
        self.array().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Labeler for ClassicalArray {
    fn insert(&mut self, key: Key) -> Result<u64> {
        ClassicalArray::insert(self, key)
    }

    fn array(&self) -> &LabeledArray {
        ClassicalArray::array(self)
    }

    fn array_mut(&mut self) -> &mut LabeledArray {
        ClassicalArray::array_mut(self)
    }

    fn into_array(self: Box<Self>) -> LabeledArray {
        ClassicalArray::into_array(*self)
    }

    fn capacity(&self) -> usize {
        let tau = self.labeler().threshold(0);
        (tau * self.array().capacity() as f64 + 1e-9).floor() as usize
    }

    fn check_invariants(&self) -> Result<()> {
        if !self.array().is_sorted() {
            return Err(Error::Invariant("array is not sorted".into()));
        }
        Ok(())
    }
}

impl Labeler for SeeSaw {
    fn insert(&mut self, key: Key) -> Result<u64> {
        SeeSaw::insert(self, key).map(|out| out.cost)
    }

    fn array(&self) -> &LabeledArray {
        SeeSaw::array(self)
    }

    fn array_mut(&mut self) -> &mut LabeledArray {
        SeeSaw::array_mut(self)
    }

    fn into_array(self: Box<Self>) -> LabeledArray {
        SeeSaw::into_array(*self)
    }

    fn capacity(&self) -> usize {
        self.config().n
    }

    fn check_invariants(&self) -> Result<()> {
        SeeSaw::check_invariants(self)
    }

    fn max_depth(&self) -> u32 {
        SeeSaw::max_depth(self)
    }

    fn finish_history(&mut self) -> SkewHistory {
        SeeSaw::finish_history(self)
    }
}

/// Everything needed to build a labeler besides its size and keys.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelerParams {
    pub algo: Algo,
    pub c_alpha: f64,
    pub c_beta: f64,
    pub pma: bool,
    pub check: bool,
    pub record_skews: bool,
    pub classical: ClassicalParams,
}

impl LabelerParams {
    pub fn new(algo: Algo) -> Self {
        LabelerParams {
            algo,
            c_alpha: DEFAULT_C_ALPHA,
            c_beta: DEFAULT_C_BETA,
            pma: false,
            check: false,
            record_skews: false,
            classical: ClassicalParams::default(),
        }
    }

    pub fn checked(mut self, on: bool) -> Self {
        self.check = on;
        self
    }

    pub fn seesaw_config(&self, m: usize, seed: u64) -> Result<SeeSawConfig> {
        Ok(
            SeeSawConfig::with_constants(m, self.c_alpha, self.c_beta, seed)?
                .pma(self.pma)
                .checked(self.check)
                .recording(self.record_skews),
        )
    }

    /// Builds a labeler over `m` slots holding `initial` (sorted, distinct).
    pub fn build(&self, m: usize, initial: &[Key], seed: u64) -> Result<Box<dyn Labeler>> {
        Ok(match self.algo {
            Algo::Classical => Box::new(ClassicalArray::new(m, initial, self.classical)?),
            Algo::SeeSaw => Box::new(SeeSaw::new(self.seesaw_config(m, seed)?, initial)?),
        })
    }
}
