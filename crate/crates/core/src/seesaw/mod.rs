//! The See-Saw subproblem tree.
//!
//! Every subproblem owns a contiguous subarray. Internal subproblems split
//! their subarray between two children and route insertions by pivot; leaves
//! hand insertions to a [`ClassicalLabeler`]. Each internal subproblem runs
//! rebuild windows of random length, and at the start of every even window
//! resizes its children according to where the previous window's
//! insertions went.
//!
//! Subtrees created by a rebuild or reset are built lazily: a subproblem
//! becomes a leaf or an internal node (drawing its window parameter) when
//! the first insertion reaches it. Element placement is unaffected.

mod config;
mod history;
mod window;

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::array::{Category, Key, LabeledArray};
use crate::classical::ClassicalLabeler;
use crate::error::{Error, Result};

pub use config::{log2, SeeSawConfig, DEFAULT_C_ALPHA, DEFAULT_C_BETA, DEFAULT_GAP_BOUND};
pub use history::{SkewHistory, SkewRecord, WindowRecord};
pub use window::{pick_array_skew, pick_window_length, sample_window_param, window_probabilities};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LeafKind {
    Tiny,
    Expensive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Left,
    Right,
}

/// `Left` iff `key <= pivot`. Without a pivot every key goes right.
pub fn route(pivot: Option<Key>, key: Key) -> Route {
    match pivot {
        Some(p) if key <= p => Route::Left,
        _ => Route::Right,
    }
}

/// Leaf kind for a new subproblem of `size` slots holding `count` elements,
/// or `None` if it should be internal.
pub fn classify(size: usize, count: usize, tiny_threshold: usize) -> Option<LeafKind> {
    if size <= tiny_threshold {
        Some(LeafKind::Tiny)
    } else if 4 * count > 3 * size {
        Some(LeafKind::Expensive)
    } else {
        None
    }
}

/// Child sizes `(floor(size / 2) - t, rest)` for array skew `t`, or `None`
/// if the skew does not fit.
pub fn child_sizes(size: usize, t: i64) -> Option<(usize, usize)> {
    let left = (size / 2) as i64 - t;
    if left < 0 || left > size as i64 {
        return None;
    }
    Some((left as usize, size - left as usize))
}

#[derive(Clone, Debug)]
pub struct Subproblem {
    id: u64,
    range: Range<usize>,
    initial: usize,
    lifetime: usize,
    node: Node,
}

#[derive(Clone, Debug)]
enum Node {
    /// Balanced subtree over evenly placed elements, built on first use.
    Pending,
    Leaf {
        kind: LeafKind,
        backend: ClassicalLabeler,
    },
    Internal(Box<Internal>),
}

#[derive(Clone, Debug)]
struct Internal {
    pivot: Option<Key>,
    left: Subproblem,
    right: Subproblem,
    window_len: usize,
    window_param: u32,
    windows_done: u32,
    window_inserts: usize,
    skew: i64,
    array_skew: i64,
    skew_frozen: bool,
    windows: Vec<WindowRecord>,
}

/// Read-only view of one subproblem, for inspection and tests.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeInfo {
    pub id: u64,
    pub depth: u32,
    pub range: Range<usize>,
    pub initial: usize,
    pub lifetime: usize,
    pub leaf: Option<LeafKind>,
    pub pending: bool,
    pub pivot: Option<Key>,
    pub window_len: usize,
    pub window_param: u32,
    pub windows_done: u32,
    pub window_inserts: usize,
    pub skew: i64,
    pub array_skew: i64,
}

impl Subproblem {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn range(&self) -> Range<usize> {
        self.range.clone()
    }

    pub fn size(&self) -> usize {
        self.range.len()
    }

    /// Elements held at creation.
    pub fn initial(&self) -> usize {
        self.initial
    }

    /// Insertions received since creation.
    pub fn lifetime(&self) -> usize {
        self.lifetime
    }

    pub fn leaf_kind(&self) -> Option<LeafKind> {
        match &self.node {
            Node::Leaf { kind, .. } => Some(*kind),
            Node::Internal(_) | Node::Pending => None,
        }
    }

    /// True until the first insertion reaches this subproblem.
    pub fn is_pending(&self) -> bool {
        matches!(self.node, Node::Pending)
    }

    /// Keys stored in this subproblem's subarray, in order.
    pub fn collect_set(&self, array: &LabeledArray) -> Vec<Key> {
        array.keys_in(self.range.clone())
    }

    pub fn children(&self) -> Option<(&Subproblem, &Subproblem)> {
        match &self.node {
            Node::Internal(node) => Some((&node.left, &node.right)),
            Node::Leaf { .. } | Node::Pending => None,
        }
    }

    /// Snapshot of this node, tagged with the given depth.
    pub fn info(&self, depth: u32) -> NodeInfo {
        let mut info = NodeInfo {
            id: self.id,
            depth,
            range: self.range.clone(),
            initial: self.initial,
            lifetime: self.lifetime,
            leaf: self.leaf_kind(),
            pending: self.is_pending(),
            pivot: None,
            window_len: 0,
            window_param: 0,
            windows_done: 0,
            window_inserts: 0,
            skew: 0,
            array_skew: 0,
        };
        if let Node::Internal(node) = &self.node {
            info.pivot = node.pivot;
            info.window_len = node.window_len;
            info.window_param = node.window_param;
            info.windows_done = node.windows_done;
            info.window_inserts = node.window_inserts;
            info.skew = node.skew;
            info.array_skew = node.array_skew;
        }
        info
    }

    fn visit(&self, depth: u32, f: &mut impl FnMut(&NodeInfo)) {
        f(&self.info(depth));
        if let Node::Internal(node) = &self.node {
            node.left.visit(depth + 1, f);
            node.right.visit(depth + 1, f);
        }
    }
}

/// Counters of structural events.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub skew_rebuilds: u64,
    pub resets: u64,
    pub root_resets: u64,
    pub subproblems_created: u64,
}

/// What one insertion did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InsertOutcome {
    pub cost: u64,
    pub leaf: LeafKind,
    /// Depth of the leaf that received the key (root is 0).
    pub depth: u32,
}

struct Ctx {
    array: LabeledArray,
    config: SeeSawConfig,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
    history: SkewHistory,
    next_id: u64,
    max_depth: u32,
    events: EventCounts,
}

impl Ctx {
    fn create_subtree(
        &mut self,
        range: Range<usize>,
        keys: &[Key],
        category: Category,
    ) -> Result<Subproblem> {
        self.array.spread_evenly(range.clone(), keys, category)?;
        Ok(self.pending(range, keys.len()))
    }

    fn pending(&mut self, range: Range<usize>, count: usize) -> Subproblem {
        let id = self.next_id;
        self.next_id += 1;
        Subproblem {
            id,
            range,
            initial: count,
            lifetime: 0,
            node: Node::Pending,
        }
    }

    /// Turns a pending subproblem into a leaf or an internal node with
    /// two pending halves.
    fn materialize(&mut self, sub: &mut Subproblem) {
        if !sub.is_pending() {
            return;
        }
        self.events.subproblems_created += 1;
        let range = sub.range.clone();
        let size = range.len();
        if let Some(kind) = classify(size, sub.initial, self.config.tiny_threshold) {
            let backend = ClassicalLabeler::new(range, self.config.leaf_params);
            sub.node = Node::Leaf { kind, backend };
            return;
        }
        let (window_len, window_param) =
            pick_window_length(size, &self.config, &self.probs, &mut self.rng);
        let mid = range.start + size / 2;
        let left_count = self.array.occupied_count(range.start..mid);
        let pivot = self
            .array
            .prev_occupied(mid)
            .filter(|&(slot, _)| slot >= range.start)
            .map(|(_, k)| k);
        let left = self.pending(range.start..mid, left_count);
        let right = self.pending(mid..range.end, sub.initial - left_count);
        sub.node = Node::Internal(Box::new(Internal {
            pivot,
            left,
            right,
            window_len,
            window_param,
            windows_done: 0,
            window_inserts: 0,
            skew: 0,
            array_skew: 0,
            skew_frozen: self.config.pma_mode && 4 * sub.initial < size,
            windows: Vec::new(),
        }));
    }

    /// Moves the window records of every internal node below `sub` into the history.
    fn retire(&mut self, sub: &mut Subproblem) {
        if !self.config.record_skews {
            return;
        }
        if let Node::Internal(node) = &mut sub.node {
            if sub.lifetime > 0 {
                let mut windows = std::mem::take(&mut node.windows);
                if node.window_inserts > 0 {
                    windows.push(WindowRecord {
                        index: node.windows_done + 1,
                        skew: node.skew,
                        array_skew: node.array_skew,
                        inserts: node.window_inserts,
                    });
                }
                self.history.push(SkewRecord {
                    id: sub.id,
                    size: sub.range.len(),
                    initial: sub.initial,
                    window_len: node.window_len,
                    window_param: node.window_param,
                    windows,
                });
            }
            self.retire(&mut node.left);
            self.retire(&mut node.right);
        }
    }

    fn reset(&mut self, sub: &mut Subproblem) -> Result<()> {
        self.retire(sub);
        let count = self.array.respread(sub.range.clone(), Category::Reset)?;
        *sub = self.pending(sub.range.clone(), count);
        self.events.resets += 1;
        Ok(())
    }

    fn insert(&mut self, sub: &mut Subproblem, key: Key, depth: u32) -> Result<(LeafKind, u32)> {
        self.materialize(sub);
        let Subproblem {
            range,
            lifetime,
            node,
            ..
        } = sub;
        let node = match node {
            Node::Leaf { kind, backend } => {
                let category = match kind {
                    LeafKind::Tiny => Category::LeafLocal,
                    LeafKind::Expensive => Category::ExpensiveLeafLocal,
                };
                backend.insert(&mut self.array, key, category)?;
                if *kind == LeafKind::Expensive {
                    self.array.ledger_mut().expensive_leaf_arrivals += 1;
                }
                *lifetime += 1;
                self.max_depth = self.max_depth.max(depth);
                return Ok((*kind, depth));
            }
            Node::Internal(node) => node,
            Node::Pending => unreachable!("materialized above"),
        };
        let side = route(node.pivot, key);
        let child = match side {
            Route::Left => &mut node.left,
            Route::Right => &mut node.right,
        };
        let reached = self.insert(child, key, depth + 1)?;
        node.skew += if side == Route::Left { -1 } else { 1 };
        if child.lifetime >= self.config.quota(child.range.len()) {
            self.reset(child)?;
        }
        node.window_inserts += 1;
        *lifetime += 1;
        if node.window_inserts >= node.window_len {
            self.skew_rebuild(range.clone(), node)?;
        }
        Ok(reached)
    }

    /// Ends the current window of `node` and rebuilds both children.
    fn skew_rebuild(&mut self, range: Range<usize>, node: &mut Internal) -> Result<()> {
        let size = range.len();
        let finished = WindowRecord {
            index: node.windows_done + 1,
            skew: node.skew,
            array_skew: node.array_skew,
            inserts: node.window_inserts,
        };
        let next_index = node.windows_done + 2;
        let t = if node.skew_frozen {
            0
        } else {
            pick_array_skew(
                next_index,
                node.skew,
                node.window_len,
                size,
                self.config.beta,
            )
        };
        let Some((left_len, _)) = child_sizes(size, t) else {
            return Err(Error::corruption(format!(
                "array skew {t} does not fit a subarray of {size} slots"
            )));
        };
        let mid = range.start + left_len;
        let (left_count, right_count) = self.array.respread_split(
            range.clone(),
            node.right.range.start,
            mid,
            Category::Rebuild,
        )?;
        let (left_range, right_range) = (range.start..mid, mid..range.end);
        self.retire(&mut node.left);
        self.retire(&mut node.right);
        node.left = self.pending(left_range, left_count);
        node.right = self.pending(right_range, right_count);
        if self.config.record_skews {
            node.windows.push(finished);
        }
        node.array_skew = t;
        node.windows_done += 1;
        node.window_inserts = 0;
        node.skew = 0;
        self.events.skew_rebuilds += 1;
        Ok(())
    }
}

/// The See-Saw list labeler over an array of `m` slots holding up to `m / 2` keys.
pub struct SeeSaw {
    root: Subproblem,
    ctx: Ctx,
}

impl SeeSaw {
    /// Spreads `initial` (sorted, distinct) over the array and builds a
    /// balanced tree. The initial spread is charged as a rebuild.
    pub fn new(config: SeeSawConfig, initial: &[Key]) -> Result<Self> {
        if initial.len() > config.n {
            return Err(Error::Capacity {
                needed: initial.len(),
                available: config.n,
            });
        }
        let mut ctx = Ctx {
            array: LabeledArray::new(config.m),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            probs: window_probabilities(config.k_max),
            config,
            history: SkewHistory::default(),
            next_id: 0,
            max_depth: 0,
            events: EventCounts::default(),
        };
        let mut root = ctx.create_subtree(0..ctx.config.m, initial, Category::Rebuild)?;
        ctx.materialize(&mut root);
        let mut seesaw = SeeSaw { root, ctx };
        if seesaw.ctx.config.check {
            seesaw.check_invariants()?;
        }
        seesaw.ctx.array.take_touched();
        Ok(seesaw)
    }

    pub fn config(&self) -> &SeeSawConfig {
        &self.ctx.config
    }

    pub fn array(&self) -> &LabeledArray {
        &self.ctx.array
    }

    pub fn array_mut(&mut self) -> &mut LabeledArray {
        &mut self.ctx.array
    }

    pub fn into_array(self) -> LabeledArray {
        self.ctx.array
    }

    pub fn len(&self) -> usize {
        self.ctx.array.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ctx.array.is_empty()
    }

    pub fn root(&self) -> &Subproblem {
        &self.root
    }

    pub fn events(&self) -> EventCounts {
        self.ctx.events
    }

    /// Deepest leaf any insertion has reached.
    pub fn max_depth(&self) -> u32 {
        self.ctx.max_depth
    }

    /// Calls `f` on every live subproblem in pre-order.
    pub fn visit(&self, mut f: impl FnMut(&NodeInfo)) {
        self.root.visit(0, &mut f);
    }

    pub fn history(&self) -> &SkewHistory {
        &self.ctx.history
    }

    /// Moves the records of live subproblems into the history and returns it.
    /// The live tree keeps running but its past windows are no longer tracked.
    pub fn finish_history(&mut self) -> SkewHistory {
        self.ctx.retire(&mut self.root);
        std::mem::take(&mut self.ctx.history)
    }

    pub fn insert(&mut self, key: Key) -> Result<InsertOutcome> {
        let len = self.ctx.array.len();
        if len + 1 > self.ctx.config.n {
            return Err(Error::Capacity {
                needed: len + 1,
                available: self.ctx.config.n,
            });
        }
        let before = self.ctx.array.ledger().total();
        self.ctx.array.take_touched();
        let (leaf, depth) = self.ctx.insert(&mut self.root, key, 0)?;
        if self.root.lifetime >= self.ctx.config.quota(self.ctx.config.m) {
            self.ctx.reset(&mut self.root)?;
            self.ctx.materialize(&mut self.root);
            self.ctx.events.root_resets += 1;
        }
        self.ctx.array.ledger_mut().inserts += 1;
        if self.ctx.config.check {
            self.check_after_insert(key)?;
        }
        Ok(InsertOutcome {
            cost: self.ctx.array.ledger().total() - before,
            leaf,
            depth,
        })
    }

    /// Checks the slots written by the last insertion and every subproblem
    /// on the inserted key's path.
    fn check_after_insert(&self, key: Key) -> Result<()> {
        let array = &self.ctx.array;
        if let Some(touched) = array.peek_touched() {
            array.check_sorted_around(touched.clone())?;
            if self.ctx.config.pma_mode {
                let gap = array.max_gap_around(touched);
                if gap > self.ctx.config.gap_bound {
                    return Err(Error::invariant(format!(
                        "gap of {gap} empty slots exceeds bound {}",
                        self.ctx.config.gap_bound
                    )));
                }
            }
        }
        let mut sub = &self.root;
        loop {
            self.check_node(sub, None)?;
            match &sub.node {
                Node::Leaf { .. } | Node::Pending => return Ok(()),
                Node::Internal(node) => {
                    sub = match route(node.pivot, key) {
                        Route::Left => &node.left,
                        Route::Right => &node.right,
                    };
                }
            }
        }
    }

    /// Arithmetic checks on one subproblem; `count` is its element count if known.
    fn check_node(&self, sub: &Subproblem, count: Option<usize>) -> Result<()> {
        let config = &self.ctx.config;
        let size = sub.range.len();
        let load = sub.initial + sub.lifetime;
        if let Some(count) = count {
            if count != load {
                return Err(Error::invariant(format!(
                    "subproblem {} holds {count} elements, expected {load}",
                    sub.id
                )));
            }
        }
        if load as f64 > 0.8 * size as f64 + 2.0 {
            return Err(Error::invariant(format!(
                "subproblem {} over {:?} carries {load} elements, above 0.8 * {size} + 2",
                sub.id, sub.range
            )));
        }
        if sub.lifetime > config.quota(size) {
            return Err(Error::invariant(format!(
                "subproblem {} received {} insertions, above its quota {}",
                sub.id,
                sub.lifetime,
                config.quota(size)
            )));
        }
        let Node::Internal(node) = &sub.node else {
            return Ok(());
        };
        if node.left.range.start != sub.range.start
            || node.left.range.end != node.right.range.start
            || node.right.range.end != sub.range.end
        {
            return Err(Error::invariant(format!(
                "children {:?} and {:?} do not tile {:?}",
                node.left.range, node.right.range, sub.range
            )));
        }
        let band = config.child_band();
        let (lo, hi) = (
            (0.5 - band) * size as f64 - 1.0,
            (0.5 + band) * size as f64 + 1.0,
        );
        for child in [&node.left, &node.right] {
            let c = child.range.len() as f64;
            if c < lo - 1e-9 || c > hi + 1e-9 {
                return Err(Error::invariant(format!(
                    "child of {size} slots has {c} slots, outside [{lo:.2}, {hi:.2}]"
                )));
            }
        }
        if node.array_skew.abs() > config.skew_limit(size) {
            return Err(Error::invariant(format!(
                "array skew {} exceeds {}",
                node.array_skew,
                config.skew_limit(size)
            )));
        }
        if node.skew_frozen && node.array_skew != 0 {
            return Err(Error::invariant("frozen subproblem applied a skew"));
        }
        if node.window_len != config.window_len(size, node.window_param) {
            return Err(Error::invariant(format!(
                "window length {} does not match K = {}",
                node.window_len, node.window_param
            )));
        }
        if node.window_param > config.k_max || node.window_inserts >= node.window_len {
            return Err(Error::invariant("window counters out of range"));
        }
        if node.skew.unsigned_abs() as usize > node.window_inserts {
            return Err(Error::invariant("insertion skew exceeds window insertions"));
        }
        if let Some(p) = node.pivot {
            let left_max = self
                .ctx
                .array
                .prev_occupied(node.left.range.end)
                .filter(|&(slot, _)| slot >= node.left.range.start)
                .map(|(_, k)| k);
            let right_min = self.ctx.array.first_occupied_in(node.right.range.clone());
            if left_max.is_some_and(|k| k > p) || right_min.is_some_and(|(_, k)| k <= p) {
                return Err(Error::invariant(format!(
                    "pivot {p} does not separate the children"
                )));
            }
        } else if self
            .ctx
            .array
            .first_occupied_in(node.left.range.clone())
            .is_some()
        {
            return Err(Error::invariant("left child holds keys but has no pivot"));
        }
        Ok(())
    }

    /// Full structural check of the whole tree and the array.
    pub fn check_invariants(&self) -> Result<()> {
        if !self.ctx.array.is_sorted() {
            return Err(Error::invariant("array is not sorted"));
        }
        if self.ctx.config.pma_mode && self.ctx.array.max_gap() > self.ctx.config.gap_bound {
            return Err(Error::invariant(format!(
                "gap of {} empty slots exceeds bound {}",
                self.ctx.array.max_gap(),
                self.ctx.config.gap_bound
            )));
        }
        let mut stack = vec![&self.root];
        while let Some(sub) = stack.pop() {
            let count = self.ctx.array.occupied_count(sub.range.clone());
            self.check_node(sub, Some(count))?;
            if let Some((l, r)) = sub.children() {
                stack.push(l);
                stack.push(r);
            }
        }
        Ok(())
    }
}
