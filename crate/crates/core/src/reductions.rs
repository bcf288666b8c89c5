//! Lifting the insert-only, half-full labelers to a fully dynamic structure.
//!
//! * [`IncrementSimulation`] runs a backend on a small virtual array and
//!   mirrors it into a fuller real array. Only `n'/2` of the real items are
//!   visible to the backend; every other item rides along in a block right
//!   after the nearest smaller visible item.
//! * [`DynamicLabeler`] adds deletions by tombstoning them in batches and
//!   restarting the simulation after each batch.
//! * [`fill_from_empty`] fills an array to capacity in shrinking phases.

use std::collections::{BTreeSet, HashSet};
use std::ops::Range;

use crate::array::{Category, CostLedger, Key, LabeledArray, WriteRecord};
use crate::error::{Error, Result};
use crate::labeler::{Labeler, LabelerParams};

/// `ceil(3 / delta)`: the spacing of pattern-selected visible items.
pub fn visible_spacing(delta: f64) -> usize {
    ((3.0 / delta) - 1e-9).ceil().max(1.0) as usize
}

/// `n' = 2 * floor(delta * m / 3)`.
pub fn n_prime(m: usize, delta: f64) -> usize {
    2 * ((delta * m as f64 / 3.0) + 1e-9).floor() as usize
}

/// 1-based ranks of the visible items among `initial_count` items: every
/// rank `1 + ceil(3/delta) * i`, topped up with the smallest unused ranks
/// to exactly `n_prime / 2`. A pattern longer than that is cut short.
pub fn select_visible(initial_count: usize, delta: f64, n_prime: usize) -> Result<Vec<usize>> {
    let want = n_prime / 2;
    if initial_count < want {
        return Err(Error::Capacity {
            needed: want,
            available: initial_count,
        });
    }
    let q = visible_spacing(delta);
    let mut chosen = vec![false; initial_count + 1];
    let mut picked = 0;
    for rank in (1..=initial_count).step_by(q).take(want) {
        chosen[rank] = true;
        picked += 1;
    }
    for slot in chosen.iter_mut().skip(1) {
        if picked == want {
            break;
        }
        if !*slot {
            *slot = true;
            picked += 1;
        }
    }
    Ok((1..=initial_count).filter(|&r| chosen[r]).collect())
}

/// Runs a backend on a virtual array of `2n'` slots and keeps the real
/// array equal to the virtual one with every invisible block spliced in
/// after its visible owner.
pub struct IncrementSimulation {
    delta: f64,
    q: usize,
    n_prime: usize,
    backend: Box<dyn Labeler>,
    /// Invisible keys, sorted. Fixed for the simulation's lifetime.
    invisible: Vec<Key>,
    /// Slots `0..real_len` mirror the virtual array; the rest stay empty.
    real_len: usize,
    inserts_left: usize,
    log: Vec<WriteRecord>,
    layout: Vec<(usize, Key, Category)>,
}

impl IncrementSimulation {
    /// Starts a simulation over the items already in `array`, which is
    /// rearranged to match the backend's initial layout (charged as a rebuild).
    pub fn new(
        array: &mut LabeledArray,
        delta: f64,
        params: &LabelerParams,
        seed: u64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::Config(format!("delta {delta} outside (0, 1/2]")));
        }
        let m = array.capacity();
        let n_prime = n_prime(m, delta);
        if n_prime < 2 {
            return Err(Error::Config(format!(
                "delta {delta} too small for {m} slots"
            )));
        }
        let items = array.keys();
        let q = visible_spacing(delta);
        let ranks = if items.len() < n_prime / 2 {
            (1..=items.len()).collect()
        } else if items.len().div_ceil(q) > n_prime / 2 {
            return Err(Error::Config(format!(
                "{} items need more than {} visible items",
                items.len(),
                n_prime / 2
            )));
        } else {
            select_visible(items.len(), delta, n_prime)?
        };
        let mut visible = Vec::with_capacity(ranks.len());
        let mut invisible = Vec::with_capacity(items.len() - ranks.len());
        let mut next = ranks.iter().peekable();
        for (i, &k) in items.iter().enumerate() {
            if next.peek() == Some(&&(i + 1)) {
                next.next();
                visible.push(k);
            } else {
                invisible.push(k);
            }
        }
        let virtual_m = 2 * n_prime;
        let real_len = virtual_m + invisible.len();
        if real_len > m {
            return Err(Error::Capacity {
                needed: real_len,
                available: m,
            });
        }
        let backend = params.build(virtual_m, &visible, seed)?;
        let mut sim = IncrementSimulation {
            delta,
            q,
            n_prime,
            backend,
            invisible,
            real_len,
            inserts_left: n_prime / 2,
            log: Vec::new(),
            layout: Vec::new(),
        };
        let mut layout = Vec::new();
        sim.expand(0..virtual_m, &[], Category::Rebuild, &mut layout);
        array.relayout(0..m, &layout)?;
        sim.backend.array_mut().take_touched();
        Ok(sim)
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn virtual_m(&self) -> usize {
        2 * self.n_prime
    }

    /// `ceil(3 / delta) - 1`.
    pub fn block_bound(&self) -> usize {
        self.q - 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn real_len(&self) -> usize {
        self.real_len
    }

    /// Insertions left before the virtual array is full.
    pub fn inserts_left(&self) -> usize {
        self.inserts_left
    }

    pub fn invisible(&self) -> &[Key] {
        &self.invisible
    }

    pub fn virtual_array(&self) -> &LabeledArray {
        self.backend.array()
    }

    pub fn backend(&self) -> &dyn Labeler {
        self.backend.as_ref()
    }

    fn is_invisible(&self, key: Key) -> bool {
        self.invisible.binary_search(&key).is_ok()
    }

    /// Real slot where virtual slot `j` starts.
    fn real_pos(&self, j: usize) -> usize {
        j + self.invisible_before(j)
    }

    /// Invisible keys owned by visible keys left of virtual slot `j`.
    fn invisible_before(&self, j: usize) -> usize {
        match self.backend.array().next_occupied(j) {
            Some((_, bound)) => self.invisible.partition_point(|&k| k < bound),
            None => self.invisible.len(),
        }
    }

    /// Real layout of virtual slots `range`. `written[i]`, when set, is the
    /// category charged for the key in slot `range.start + i` and its block;
    /// everything else is charged to `default`.
    fn expand(
        &self,
        range: Range<usize>,
        written: &[Option<Category>],
        default: Category,
        out: &mut Vec<(usize, Key, Category)>,
    ) {
        let virt = self.backend.array();
        let inv = &self.invisible;
        let mut c = self.invisible_before(range.start);
        let mut cur = range.start + c;
        out.clear();
        let mut owner = default;
        let mut gap = 0;
        for (i, slot) in virt.slots()[range.clone()].iter().enumerate() {
            let Some(key) = *slot else {
                gap += 1;
                continue;
            };
            // Block of the previous visible key, directly after it.
            while c < inv.len() && inv[c] < key {
                out.push((cur, inv[c], owner));
                cur += 1;
                c += 1;
            }
            cur += gap;
            gap = 0;
            owner = written.get(i).copied().flatten().unwrap_or(default);
            out.push((cur, key, owner));
            cur += 1;
        }
        let bound = virt.next_occupied(range.end).map(|(_, k)| k);
        while c < inv.len() && bound.is_none_or(|b| inv[c] < b) {
            out.push((cur, inv[c], owner));
            cur += 1;
            c += 1;
        }
    }

    /// Inserts `key` through the backend and mirrors the result. Returns the
    /// real moves.
    pub fn insert(&mut self, array: &mut LabeledArray, key: Key) -> Result<u64> {
        if self.inserts_left == 0 {
            return Err(Error::Capacity {
                needed: self.n_prime + 1,
                available: self.n_prime,
            });
        }
        if self.is_invisible(key) {
            return Err(Error::DuplicateKey(key));
        }
        let virt = self.backend.array_mut();
        virt.take_touched();
        virt.set_write_log_buffer(std::mem::take(&mut self.log));
        let result = self.backend.insert(key);
        let virt = self.backend.array_mut();
        let log = virt.take_write_log();
        virt.set_write_log(false);
        let touched = virt.take_touched();
        result?;
        self.inserts_left -= 1;
        let Some(touched) = touched else {
            return Err(Error::corruption("backend insert wrote nothing"));
        };
        let moved = self.mirror_rearrange(array, touched, &log);
        self.log = log;
        moved
    }

    /// Rewrites the real image of the virtual slots `touched`, extended left
    /// to the owner of the block the newest write may have split.
    pub fn mirror_rearrange(
        &mut self,
        array: &mut LabeledArray,
        touched: Range<usize>,
        log: &[WriteRecord],
    ) -> Result<u64> {
        let virt = self.backend.array();
        // The first written key's predecessor may own invisible keys that now
        // belong after a new visible key.
        let start = log
            .iter()
            .map(|w| w.slot)
            .min()
            .and_then(|slot| virt.prev_occupied(slot))
            .map_or(0, |(slot, _)| slot)
            .min(touched.start);
        let end = touched.end;
        // A key's last write put it in its final slot.
        let mut written = vec![None; end - start];
        for w in log {
            if virt.get(w.slot) == Some(w.key) {
                written[w.slot - start] = Some(w.category);
            }
        }
        let mut layout = std::mem::take(&mut self.layout);
        self.expand(start..end, &written, Category::LeafLocal, &mut layout);
        let real = self.real_pos(start)..self.real_pos(end);
        if let Some(&(last, _, _)) = layout.last() {
            if last >= real.end {
                return Err(Error::corruption(format!(
                    "mirrored layout ends at {last}, past its window {real:?}"
                )));
            }
        }
        let moved = array.relayout(real, &layout);
        self.layout = layout;
        let expected = self.backend.array().len() + self.invisible.len();
        if moved.is_ok() && array.len() != expected {
            return Err(Error::corruption(format!(
                "mirror holds {} keys, expected {expected}",
                array.len()
            )));
        }
        moved
    }

    /// Checks both mirroring invariants over the whole real array.
    pub fn check(&self, array: &LabeledArray) -> Result<()> {
        let virt = self.backend.array();
        let m = array.capacity();
        let mut stripped = Vec::with_capacity(self.virtual_m());
        let mut block = 0;
        for slot in 0..m {
            match array.get(slot) {
                Some(k) if self.is_invisible(k) => {
                    // Invariant (1): an invisible item sits right after an item.
                    if slot == 0 || array.get(slot - 1).is_none() {
                        return Err(Error::invariant(format!(
                            "invisible key {k} at slot {slot} follows a free slot"
                        )));
                    }
                    block += 1;
                    if block > self.block_bound() {
                        return Err(Error::invariant(format!(
                            "invisible block reaches {block} items, above {}",
                            self.block_bound()
                        )));
                    }
                }
                other => {
                    block = 0;
                    stripped.push(other);
                }
            }
        }
        // Invariant (2): stripping the invisible items leaves the virtual array.
        let (mirror, rest) = stripped.split_at(self.virtual_m().min(stripped.len()));
        if mirror != virt.slots() || rest.iter().any(Option::is_some) {
            return Err(Error::invariant(
                "real array without invisible items differs from the virtual array",
            ));
        }
        Ok(())
    }
}

/// Fully dynamic labeler over `m` slots holding up to `(1 - delta) m` keys.
pub struct DynamicLabeler {
    array: LabeledArray,
    delta: f64,
    params: LabelerParams,
    seed: u64,
    epoch: u64,
    batch: usize,
    max_live: usize,
    live: HashSet<Key>,
    tombstones: BTreeSet<Key>,
    sim: Option<IncrementSimulation>,
    rebuilds: u64,
    max_depth: u32,
    check: bool,
}

impl DynamicLabeler {
    /// `initial` must be sorted and distinct.
    pub fn new(
        m: usize,
        delta: f64,
        params: LabelerParams,
        initial: &[Key],
        seed: u64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::Config(format!("delta {delta} outside (0, 1/2]")));
        }
        let max_live = ((1.0 - delta) * m as f64 + 1e-9).floor() as usize;
        if initial.len() > max_live {
            return Err(Error::Capacity {
                needed: initial.len(),
                available: max_live,
            });
        }
        let mut array = LabeledArray::new(m);
        array.spread_evenly(0..m, initial, Category::Rebuild)?;
        let check = params.check;
        let mut d = DynamicLabeler {
            array,
            delta,
            params,
            seed,
            epoch: 0,
            batch: ((delta / 3.0 * m as f64) - 1e-9).ceil().max(1.0) as usize,
            max_live,
            live: initial.iter().copied().collect(),
            tombstones: BTreeSet::new(),
            sim: None,
            rebuilds: 0,
            max_depth: 0,
            check,
        };
        d.start_epoch()?;
        d.rebuilds = 0;
        Ok(d)
    }

    /// True when every operation re-spreads the whole array.
    pub fn is_direct(&self) -> bool {
        self.sim.is_none()
    }

    /// Tombstones collected before a rebuild.
    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn max_live(&self) -> usize {
        self.max_live
    }

    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    /// Deepest backend subproblem seen in any epoch.
    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn tombstones(&self) -> usize {
        self.tombstones.len()
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn contains(&self, key: Key) -> bool {
        self.live.contains(&key)
    }

    pub fn array(&self) -> &LabeledArray {
        &self.array
    }

    pub fn ledger(&self) -> &CostLedger {
        self.array.ledger()
    }

    pub fn simulation(&self) -> Option<&IncrementSimulation> {
        self.sim.as_ref()
    }

    /// Live keys in order.
    pub fn live_keys(&self) -> Vec<Key> {
        self.live_iter().collect()
    }

    pub fn live_iter(&self) -> impl Iterator<Item = Key> + '_ {
        let mut dead = self.tombstones.iter().copied().peekable();
        self.array
            .slots()
            .iter()
            .flatten()
            .copied()
            .filter(move |&k| {
                while dead.next_if(|&d| d < k).is_some() {}
                dead.next_if_eq(&k).is_none()
            })
    }

    /// Purges tombstones and restarts the simulation over the current items.
    fn start_epoch(&mut self) -> Result<()> {
        for (slot, k) in self.array.occupied_in(0..self.array.capacity()) {
            if self.tombstones.contains(&k) {
                self.array.erase(slot)?;
            }
        }
        self.tombstones.clear();
        self.rebuilds += 1;
        self.epoch += 1;
        let m = self.array.capacity();
        self.sim = None;
        if self.delta * (m as f64) < 12.0 {
            return self.respread_all();
        }
        let seed = self.seed ^ self.epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        match IncrementSimulation::new(&mut self.array, self.delta, &self.params, seed) {
            Ok(sim) => {
                self.sim = Some(sim);
                Ok(())
            }
            // Too few slots for the visible pattern: fall back to direct mode.
            Err(Error::Config(_)) | Err(Error::Capacity { .. }) => self.respread_all(),
            Err(e) => Err(e),
        }
    }

    fn respread_all(&mut self) -> Result<()> {
        let m = self.array.capacity();
        self.array.respread(0..m, Category::Rebuild).map(|_| ())
    }

    pub fn insert(&mut self, key: Key) -> Result<u64> {
        if self.live.contains(&key) {
            return Err(Error::DuplicateKey(key));
        }
        if self.live.len() + 1 > self.max_live {
            return Err(Error::Capacity {
                needed: self.live.len() + 1,
                available: self.max_live,
            });
        }
        let before = self.array.ledger().total();
        if self.tombstones.remove(&key) {
            // Revive the tombstone in place.
            self.live.insert(key);
            self.array.ledger_mut().inserts += 1;
            return Ok(0);
        }
        if self.sim.as_ref().is_some_and(|s| s.inserts_left() == 0) {
            self.start_epoch()?;
        }
        match &mut self.sim {
            Some(sim) => {
                let arrivals = sim.backend().array().ledger().expensive_leaf_arrivals;
                sim.insert(&mut self.array, key)?;
                let gained = sim.backend().array().ledger().expensive_leaf_arrivals - arrivals;
                self.array.ledger_mut().expensive_leaf_arrivals += gained;
                self.max_depth = self.max_depth.max(sim.backend().max_depth());
            }
            None => {
                insert_by_respread(&mut self.array, key)?;
            }
        }
        self.live.insert(key);
        self.array.ledger_mut().inserts += 1;
        if self.check {
            self.check_invariants()?;
        }
        Ok(self.array.ledger().total() - before)
    }

    pub fn delete(&mut self, key: Key) -> Result<u64> {
        if !self.live.remove(&key) {
            return Err(Error::MissingKey(key));
        }
        let before = self.array.ledger().total();
        self.tombstones.insert(key);
        self.array.ledger_mut().deletes += 1;
        if self.tombstones.len() >= self.batch {
            self.start_epoch()?;
        }
        if self.check {
            self.check_invariants()?;
        }
        Ok(self.array.ledger().total() - before)
    }

    pub fn check_invariants(&self) -> Result<()> {
        if !self.array.is_sorted() {
            return Err(Error::invariant("array is not sorted"));
        }
        if self.array.len() != self.live.len() + self.tombstones.len() {
            return Err(Error::invariant(format!(
                "array holds {} items, expected {} live plus {} tombstones",
                self.array.len(),
                self.live.len(),
                self.tombstones.len()
            )));
        }
        if self.live.len() > self.max_live || self.tombstones.len() >= self.batch {
            return Err(Error::invariant("live or tombstone count out of bounds"));
        }
        if let Some(sim) = &self.sim {
            sim.check(&self.array)?;
            sim.backend().check_invariants()?;
        }
        Ok(())
    }
}

/// Result of [`fill_from_empty`].
#[derive(Clone, Debug)]
pub struct FillReport {
    /// Keys inserted in each phase; phase 0 is the half-density start.
    pub phases: Vec<usize>,
    pub total_moves: u64,
    pub array: LabeledArray,
}

/// Keys inserted by each phase of a fill of `m` slots: `floor(m/2)`, then
/// `ceil(e/3)` while `e` slots remain empty.
pub fn fill_phases(m: usize) -> Vec<usize> {
    let mut phases = vec![m / 2];
    let mut empty = m - m / 2;
    while empty > 0 {
        let take = empty.div_ceil(3);
        phases.push(take);
        empty -= take;
    }
    phases
}

/// Inserts `keys` (distinct, any order, exactly `m` of them) into an empty
/// array of `m` slots until it is full.
pub fn fill_from_empty(
    m: usize,
    keys: &[Key],
    params: &LabelerParams,
    seed: u64,
) -> Result<FillReport> {
    if keys.len() != m {
        return Err(Error::Config(format!(
            "need exactly {m} keys, got {}",
            keys.len()
        )));
    }
    let plan = fill_phases(m);
    let mut next = keys.iter().copied();
    let first: Vec<Key> = next.by_ref().take(plan[0]).collect();
    let mut array = match params.build(m, &[], seed) {
        Ok(mut backend) => {
            for &k in &first {
                backend.insert(k)?;
            }
            backend.into_array()
        }
        // Too small for the backend.
        Err(Error::Config(_)) => {
            let mut array = LabeledArray::new(m);
            for k in first {
                insert_by_respread(&mut array, k)?;
                array.ledger_mut().inserts += 1;
            }
            array
        }
        Err(e) => return Err(e),
    };
    for (phase, &count) in plan.iter().enumerate().skip(1) {
        let empty = m - array.len();
        let delta = (empty as f64 / m as f64).min(0.5);
        let mut sim = None;
        if empty >= 12 {
            let phase_seed = seed ^ (phase as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            match IncrementSimulation::new(&mut array, delta, params, phase_seed) {
                Ok(s) => sim = Some(s),
                Err(Error::Config(_)) | Err(Error::Capacity { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        for k in next.by_ref().take(count) {
            match &mut sim {
                Some(s) if s.inserts_left() > 0 => {
                    s.insert(&mut array, k)?;
                }
                _ => insert_by_respread(&mut array, k)?,
            }
            array.ledger_mut().inserts += 1;
        }
    }
    let total_moves = array.ledger().total();
    Ok(FillReport {
        phases: plan,
        total_moves,
        array,
    })
}

/// Inserts `key` by spreading the whole array again, charged as a rebuild.
fn insert_by_respread(array: &mut LabeledArray, key: Key) -> Result<()> {
    let m = array.capacity();
    let mut all = array.keys();
    match all.binary_search(&key) {
        Ok(_) => return Err(Error::DuplicateKey(key)),
        Err(pos) => all.insert(pos, key),
    }
    array.spread_evenly(0..m, &all, Category::Rebuild)?;
    Ok(())
}

#[cfg(test)]
mod tests;
