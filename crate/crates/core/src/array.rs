//! The physical slot array and its move meter.
//!
//! [`LabeledArray`] is the single ground truth for element positions. Every
//! slot write goes through one of its operations and is charged to exactly one
//! [`Category`] of the embedded [`CostLedger`], so the ledger total always
//! equals the number of slot writes performed. Clearing a slot is free.

use std::ops::Range;

use crate::error::{Error, Result};

/// Element key. Keys stored in one array are always distinct.
pub type Key = u64;

/// Cost bucket a slot write is charged to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Category {
    /// Rebuilds of a subproblem's children at window boundaries, and whole
    /// structure rebuilds in the reductions.
    Rebuild,
    /// Quota-triggered resets.
    Reset,
    /// Classical-algorithm work in tiny leaves (or the whole classical array).
    LeafLocal,
    /// Classical-algorithm work in expensive leaves.
    ExpensiveLeafLocal,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Rebuild,
        Category::Reset,
        Category::LeafLocal,
        Category::ExpensiveLeafLocal,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Rebuild => "rebuild",
            Category::Reset => "reset",
            Category::LeafLocal => "leaf_local",
            Category::ExpensiveLeafLocal => "expensive_leaf_local",
        }
    }
}

/// Per-category move counters plus operation counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CostLedger {
    moves: [u64; 4],
    pub expensive_leaf_arrivals: u64,
    pub inserts: u64,
    pub deletes: u64,
}

impl CostLedger {
    pub fn charge(&mut self, category: Category, moves: u64) {
        self.moves[category.index()] += moves;
    }

    pub fn moves(&self, category: Category) -> u64 {
        self.moves[category.index()]
    }

    pub fn total(&self) -> u64 {
        self.moves.iter().sum()
    }

    /// Counters accumulated after `earlier` was snapshotted from the same ledger.
    pub fn since(&self, earlier: &CostLedger) -> CostLedger {
        let mut moves = [0; 4];
        for (i, m) in moves.iter_mut().enumerate() {
            *m = self.moves[i].saturating_sub(earlier.moves[i]);
        }
        CostLedger {
            moves,
            expensive_leaf_arrivals: self
                .expensive_leaf_arrivals
                .saturating_sub(earlier.expensive_leaf_arrivals),
            inserts: self.inserts.saturating_sub(earlier.inserts),
            deletes: self.deletes.saturating_sub(earlier.deletes),
        }
    }

    pub fn absorb(&mut self, other: &CostLedger) {
        for (i, m) in self.moves.iter_mut().enumerate() {
            *m += other.moves[i];
        }
        self.expensive_leaf_arrivals += other.expensive_leaf_arrivals;
        self.inserts += other.inserts;
        self.deletes += other.deletes;
    }
}

/// Slots `lo + floor(i * len / count)` for `i` in `0..count`, without a
/// division per step.
pub fn even_slots(range: Range<usize>, count: usize) -> impl ExactSizeIterator<Item = usize> {
    let len = range.len();
    let (step, rem) = len
        .checked_div(count)
        .map_or((0, 0), |step| (step, len % count));
    let mut slot = range.start;
    let mut acc = 0;
    (0..count).map(move |_| {
        let out = slot;
        slot += step;
        acc += rem;
        if acc >= count {
            acc -= count;
            slot += 1;
        }
        out
    })
}

/// One slot write, as recorded by the optional write log.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WriteRecord {
    pub slot: usize,
    pub key: Key,
    pub category: Category,
}

/// A size-`m` array of slots holding distinct keys in increasing order.
#[derive(Clone, Debug)]
pub struct LabeledArray {
    slots: Vec<Option<Key>>,
    occupied: usize,
    ledger: CostLedger,
    touched: Option<(usize, usize)>,
    log: Option<Vec<WriteRecord>>,
    scratch: Vec<Key>,
}

impl LabeledArray {
    pub fn new(m: usize) -> Self {
        LabeledArray {
            slots: vec![None; m],
            occupied: 0,
            ledger: CostLedger::default(),
            touched: None,
            log: None,
            scratch: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Number of occupied slots in the whole array.
    pub fn len(&self) -> usize {
        self.occupied
    }

    pub fn is_empty(&self) -> bool {
        self.occupied == 0
    }

    pub fn get(&self, slot: usize) -> Option<Key> {
        self.slots.get(slot).copied().flatten()
    }

    pub fn slots(&self) -> &[Option<Key>] {
        &self.slots
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut CostLedger {
        &mut self.ledger
    }

    pub fn occupied_count(&self, range: Range<usize>) -> usize {
        self.slots[range].iter().filter(|s| s.is_some()).count()
    }

    /// All keys in slot order.
    pub fn keys(&self) -> Vec<Key> {
        self.slots.iter().flatten().copied().collect()
    }

    pub fn keys_in(&self, range: Range<usize>) -> Vec<Key> {
        self.slots[range].iter().flatten().copied().collect()
    }

    /// `(slot, key)` pairs of the occupied slots in `range`.
    pub fn occupied_in(&self, range: Range<usize>) -> Vec<(usize, Key)> {
        let lo = range.start;
        self.slots[range]
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|k| (lo + i, k)))
            .collect()
    }

    /// Nearest occupied slot strictly left of `slot`.
    pub fn prev_occupied(&self, slot: usize) -> Option<(usize, Key)> {
        let end = slot.min(self.slots.len());
        self.slots[..end]
            .iter()
            .rposition(|s| s.is_some())
            .map(|i| (i, self.slots[i].unwrap()))
    }

    /// Nearest occupied slot at or right of `slot`.
    pub fn next_occupied(&self, slot: usize) -> Option<(usize, Key)> {
        if slot >= self.slots.len() {
            return None;
        }
        self.slots[slot..]
            .iter()
            .position(|s| s.is_some())
            .map(|i| (slot + i, self.slots[slot + i].unwrap()))
    }

    /// First occupied slot inside `range`.
    pub fn first_occupied_in(&self, range: Range<usize>) -> Option<(usize, Key)> {
        let lo = range.start;
        self.slots[range]
            .iter()
            .position(|s| s.is_some())
            .map(|i| (lo + i, self.slots[lo + i].unwrap()))
    }

    /// Slots touched (written or cleared) since the last call.
    pub fn take_touched(&mut self) -> Option<Range<usize>> {
        self.touched.take().map(|(lo, hi)| lo..hi)
    }

    /// Slots touched since the last [`take_touched`](Self::take_touched), left in place.
    pub fn peek_touched(&self) -> Option<Range<usize>> {
        self.touched.map(|(lo, hi)| lo..hi)
    }

    /// Start or stop recording every slot write.
    pub fn set_write_log(&mut self, enabled: bool) {
        self.log = if enabled { Some(Vec::new()) } else { None };
    }

    /// Starts logging into `buffer`, which is cleared first.
    pub fn set_write_log_buffer(&mut self, mut buffer: Vec<WriteRecord>) {
        buffer.clear();
        self.log = Some(buffer);
    }

    pub fn take_write_log(&mut self) -> Vec<WriteRecord> {
        match &mut self.log {
            Some(log) => std::mem::take(log),
            None => Vec::new(),
        }
    }

    fn touch(&mut self, range: Range<usize>) {
        if range.is_empty() {
            return;
        }
        self.touched = Some(match self.touched {
            Some((lo, hi)) => (lo.min(range.start), hi.max(range.end)),
            None => (range.start, range.end),
        });
    }

    fn record(&mut self, slot: usize, key: Key, category: Category) {
        if let Some(log) = &mut self.log {
            log.push(WriteRecord {
                slot,
                key,
                category,
            });
        }
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.slots.len() {
            return Err(Error::corruption(format!(
                "slot {slot} outside array of size {}",
                self.slots.len()
            )));
        }
        Ok(())
    }

    fn check_range(&self, range: &Range<usize>) -> Result<()> {
        if range.start > range.end || range.end > self.slots.len() {
            return Err(Error::corruption(format!(
                "range {range:?} outside array of size {}",
                self.slots.len()
            )));
        }
        Ok(())
    }

    /// Checks that `first..=last` fits between the occupied neighbours of `range`.
    fn check_outer_order(&self, range: &Range<usize>, first: Key, last: Key) -> Result<()> {
        if let Some((slot, k)) = self.prev_occupied(range.start) {
            if k >= first {
                return Err(Error::corruption(format!(
                    "key {first} placed at or after slot {} would follow larger key {k} at slot {slot}",
                    range.start
                )));
            }
        }
        if let Some((slot, k)) = self.next_occupied(range.end) {
            if k <= last {
                return Err(Error::corruption(format!(
                    "key {last} placed before slot {} would precede smaller key {k} at slot {slot}",
                    range.end
                )));
            }
        }
        Ok(())
    }

    /// Writes `key` into the empty `slot`, charging one move.
    pub fn write_element(&mut self, slot: usize, key: Key, category: Category) -> Result<()> {
        self.check_slot(slot)?;
        if let Some(k) = self.slots[slot] {
            return Err(Error::corruption(format!(
                "slot {slot} already holds key {k}"
            )));
        }
        self.check_outer_order(&(slot..slot + 1), key, key)?;
        self.slots[slot] = Some(key);
        self.occupied += 1;
        self.ledger.charge(category, 1);
        self.touch(slot..slot + 1);
        self.record(slot, key, category);
        Ok(())
    }

    /// Moves the element at `from` into the empty slot `to`, charging one move.
    pub fn move_element(&mut self, from: usize, to: usize, category: Category) -> Result<()> {
        self.check_slot(from)?;
        self.check_slot(to)?;
        let key = self.slots[from]
            .ok_or_else(|| Error::corruption(format!("move from empty slot {from}")))?;
        if from == to {
            return Err(Error::corruption(format!(
                "move of slot {from} onto itself"
            )));
        }
        self.slots[from] = None;
        self.occupied -= 1;
        self.touch(from..from + 1);
        if let Err(e) = self.write_element(to, key, category) {
            self.slots[from] = Some(key);
            self.occupied += 1;
            return Err(e);
        }
        Ok(())
    }

    /// Frees `slot` and returns the key it held. Not a move; costs nothing.
    pub fn erase(&mut self, slot: usize) -> Result<Key> {
        self.check_slot(slot)?;
        let key = self.slots[slot]
            .take()
            .ok_or_else(|| Error::corruption(format!("erase of empty slot {slot}")))?;
        self.occupied -= 1;
        self.touch(slot..slot + 1);
        Ok(key)
    }

    /// Spreads `keys` evenly over `range`: the `i`-th key lands in
    /// `lo + floor(i * len / s)`. Every key placed costs one move.
    pub fn spread_evenly(
        &mut self,
        range: Range<usize>,
        keys: &[Key],
        category: Category,
    ) -> Result<u64> {
        self.spread_partitioned(range.clone(), &[(range, keys)], category)
    }

    /// Clears `range` and spreads each part's keys evenly over its sub-range.
    ///
    /// The parts must tile `range` left to right, and every key currently
    /// stored in `range` must appear in one of the parts.
    pub fn spread_partitioned(
        &mut self,
        range: Range<usize>,
        parts: &[(Range<usize>, &[Key])],
        category: Category,
    ) -> Result<u64> {
        self.check_range(&range)?;
        let mut cursor = range.start;
        let mut prev: Option<Key> = None;
        for (part, keys) in parts {
            if part.start != cursor || part.end < part.start {
                return Err(Error::corruption(format!(
                    "parts do not tile {range:?} (part {part:?} at cursor {cursor})"
                )));
            }
            if keys.len() > part.len() {
                return Err(Error::Capacity {
                    needed: keys.len(),
                    available: part.len(),
                });
            }
            for &k in keys.iter() {
                if prev.is_some_and(|p| p >= k) {
                    return Err(Error::corruption(format!(
                        "spread keys not strictly increasing at {k}"
                    )));
                }
                prev = Some(k);
            }
            cursor = part.end;
        }
        if cursor != range.end {
            return Err(Error::corruption(format!("parts do not cover {range:?}")));
        }

        // Nothing stored in the range may be dropped.
        let (mut p, mut j) = (0, 0);
        for k in self.slots[range.clone()].iter().flatten() {
            loop {
                while p < parts.len() && j == parts[p].1.len() {
                    p += 1;
                    j = 0;
                }
                if p == parts.len() {
                    return Err(Error::corruption(format!(
                        "spread over {range:?} would drop key {k}"
                    )));
                }
                j += 1;
                if parts[p].1[j - 1] == *k {
                    break;
                }
            }
        }
        let first = parts.iter().find_map(|(_, keys)| keys.first().copied());
        let last = parts
            .iter()
            .rev()
            .find_map(|(_, keys)| keys.last().copied());
        if let (Some(first), Some(last)) = (first, last) {
            self.check_outer_order(&range, first, last)?;
        }

        let cleared = self.occupied_count(range.clone());
        for s in &mut self.slots[range.clone()] {
            *s = None;
        }
        self.occupied -= cleared;
        let mut placed = 0u64;
        for (part, keys) in parts {
            for (slot, &k) in even_slots(part.clone(), keys.len()).zip(keys.iter()) {
                self.slots[slot] = Some(k);
                self.record(slot, k, category);
            }
            placed += keys.len() as u64;
        }
        self.occupied += placed as usize;
        self.ledger.charge(category, placed);
        self.touch(range);
        Ok(placed)
    }

    /// Re-spreads the keys already stored in `range`: keys left of
    /// `old_mid` are spread evenly over `range.start..new_mid` and the rest
    /// over `new_mid..range.end`. Returns the keys on each side. Every key
    /// placed costs one move.
    pub fn respread_split(
        &mut self,
        range: Range<usize>,
        old_mid: usize,
        new_mid: usize,
        category: Category,
    ) -> Result<(usize, usize)> {
        self.check_range(&range)?;
        if !(range.contains(&old_mid) || old_mid == range.end)
            || !(range.contains(&new_mid) || new_mid == range.end)
        {
            return Err(Error::corruption(format!(
                "split points {old_mid}, {new_mid} outside {range:?}"
            )));
        }
        let mut keys = std::mem::take(&mut self.scratch);
        keys.clear();
        keys.extend(
            self.slots[range.start..old_mid]
                .iter_mut()
                .filter_map(Option::take),
        );
        let left = keys.len();
        keys.extend(
            self.slots[old_mid..range.end]
                .iter_mut()
                .filter_map(Option::take),
        );
        let right = keys.len() - left;
        let fits = left <= new_mid - range.start && right <= range.end - new_mid;
        // If the split does not fit, lay the keys back out over the whole
        // range (uncharged) so the array stays sorted, and report it.
        let (l_end, mid) = if fits {
            (left, new_mid)
        } else {
            (keys.len(), range.end)
        };
        for (part, idx) in [
            (range.start..mid, 0..l_end),
            (mid..range.end, l_end..keys.len()),
        ] {
            let placed =
                || even_slots(part.clone(), idx.len()).zip(keys[idx.clone()].iter().copied());
            for (slot, k) in placed() {
                self.slots[slot] = Some(k);
            }
            if let (true, Some(log)) = (fits, &mut self.log) {
                log.extend(placed().map(|(slot, key)| WriteRecord {
                    slot,
                    key,
                    category,
                }));
            }
        }
        self.touch(range.clone());
        let total = keys.len();
        self.scratch = keys;
        if !fits {
            return Err(Error::Capacity {
                needed: left.max(right),
                available: (new_mid - range.start).min(range.end - new_mid),
            });
        }
        self.ledger.charge(category, total as u64);
        Ok((left, right))
    }

    /// [`respread_split`](Self::respread_split) without a split.
    pub fn respread(&mut self, range: Range<usize>, category: Category) -> Result<usize> {
        let end = range.end;
        self.respread_split(range, end, end, category)
            .map(|(n, _)| n)
    }

    /// Rewrites `range` to hold exactly `layout` (slot, key, category) entries.
    ///
    /// Keys already stored in their target slot stay put and cost nothing;
    /// every other entry costs one move charged to its own category. Keys in
    /// `range` that `layout` leaves out are removed, so callers that only
    /// rearrange should compare [`len`](Self::len) before and after.
    ///
    /// `layout` must be strictly increasing in both slot and key and fit
    /// between the neighbouring keys outside `range`. An order violation
    /// found mid-way leaves the range partly rewritten.
    pub fn relayout(
        &mut self,
        range: Range<usize>,
        layout: &[(usize, Key, Category)],
    ) -> Result<u64> {
        self.check_range(&range)?;
        if let (Some(f), Some(l)) = (layout.first(), layout.last()) {
            if f.0 < range.start || l.0 >= range.end {
                return Err(Error::corruption(format!(
                    "layout slots {}..={} outside {range:?}",
                    f.0, l.0
                )));
            }
            self.check_outer_order(&range, f.1, l.1)?;
        }

        let mut charged = [0u64; 4];
        let mut old = 0;
        let mut next = range.start;
        let mut prev_key = None;
        let slots = &mut self.slots;
        let log = &mut self.log;
        for &(slot, key, category) in layout {
            if slot < next || prev_key >= Some(key) {
                return Err(Error::corruption(format!(
                    "layout not increasing at slot {slot}"
                )));
            }
            prev_key = Some(key);
            for s in &mut slots[next..slot] {
                old += usize::from(s.take().is_some());
            }
            next = slot + 1;
            let s = &mut slots[slot];
            if let Some(k) = *s {
                old += 1;
                // A key already in its target slot stays put for free.
                if k == key {
                    continue;
                }
            }
            *s = Some(key);
            charged[category.index()] += 1;
            if let Some(log) = log {
                log.push(WriteRecord {
                    slot,
                    key,
                    category,
                });
            }
        }
        for s in &mut slots[next..range.end] {
            old += usize::from(s.take().is_some());
        }
        for category in Category::ALL {
            self.ledger.charge(category, charged[category.index()]);
        }
        self.occupied = self.occupied - old + layout.len();
        self.touch(range);
        Ok(charged.iter().sum())
    }

    /// True when the occupied slots read left to right are strictly increasing.
    pub fn is_sorted(&self) -> bool {
        self.slots
            .iter()
            .flatten()
            .zip(self.slots.iter().flatten().skip(1))
            .all(|(a, b)| a < b)
    }

    /// The window `[prev occupied before range, next occupied from range.end]`.
    fn neighbourhood(&self, range: Range<usize>) -> Range<usize> {
        let lo = self.prev_occupied(range.start).map_or(0, |(s, _)| s);
        let hi = self
            .next_occupied(range.end)
            .map_or(self.slots.len(), |(s, _)| s + 1);
        lo..hi
    }

    /// Checks sortedness of `range` together with its nearest occupied
    /// neighbours, which is enough to re-establish global sortedness after
    /// an operation that only touched `range`.
    pub fn check_sorted_around(&self, range: Range<usize>) -> Result<()> {
        let window = self.neighbourhood(range);
        let mut prev: Option<(usize, Key)> = None;
        for (slot, k) in self.occupied_in(window) {
            if let Some((ps, pk)) = prev {
                if pk >= k {
                    return Err(Error::invariant(format!(
                        "order broken: key {pk} at slot {ps} precedes key {k} at slot {slot}"
                    )));
                }
            }
            prev = Some((slot, k));
        }
        Ok(())
    }

    /// Longest run of empty slots lying between two occupied slots.
    pub fn max_gap(&self) -> usize {
        Self::max_internal_gap(&self.slots)
    }

    /// [`max_gap`](Self::max_gap) restricted to `range` and its neighbours.
    pub fn max_gap_around(&self, range: Range<usize>) -> usize {
        let window = self.neighbourhood(range);
        Self::max_internal_gap(&self.slots[window])
    }

    fn max_internal_gap(slots: &[Option<Key>]) -> usize {
        let mut best = 0;
        let mut run = 0;
        let mut seen = false;
        for s in slots {
            if s.is_some() {
                if seen {
                    best = best.max(run);
                }
                seen = true;
                run = 0;
            } else {
                run += 1;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn placed(a: &LabeledArray) -> Vec<(usize, Key)> {
        a.occupied_in(0..a.capacity())
    }

    #[test]
    fn even_slots_match_formula() {
        for len in 0..40usize {
            for count in 0..=len {
                let want: Vec<usize> = (0..count).map(|i| 3 + i * len / count).collect();
                assert_eq!(even_slots(3..3 + len, count).collect::<Vec<_>>(), want);
            }
        }
    }

    #[test]
    fn write_into_empty_array() {
        let mut a = LabeledArray::new(8);
        a.write_element(3, 7, Category::LeafLocal).unwrap();
        assert_eq!(a.ledger().total(), 1);
        assert_eq!(a.len(), 1);
        assert_eq!(a.occupied_count(0..8), 1);
    }

    #[test]
    fn write_preserves_order() {
        let mut a = LabeledArray::new(8);
        a.write_element(4, 7, Category::LeafLocal).unwrap();
        a.write_element(2, 5, Category::LeafLocal).unwrap();
        assert_eq!(a.keys(), vec![5, 7]);
        assert_eq!(a.ledger().total(), 2);
    }

    #[test]
    fn write_into_occupied_slot_is_corruption() {
        let mut a = LabeledArray::new(4);
        a.write_element(1, 7, Category::LeafLocal).unwrap();
        let err = a.write_element(1, 8, Category::LeafLocal).unwrap_err();
        assert!(matches!(err, Error::Corruption(_)));
        assert_eq!(a.ledger().total(), 1);
    }

    #[test]
    fn write_out_of_order_is_corruption() {
        let mut a = LabeledArray::new(8);
        a.write_element(4, 7, Category::LeafLocal).unwrap();
        assert!(matches!(
            a.write_element(6, 5, Category::LeafLocal),
            Err(Error::Corruption(_))
        ));
        assert!(matches!(
            a.write_element(2, 9, Category::LeafLocal),
            Err(Error::Corruption(_))
        ));
    }

    #[test]
    fn spread_three_into_six() {
        let mut a = LabeledArray::new(6);
        let cost = a
            .spread_evenly(0..6, &[10, 20, 30], Category::Rebuild)
            .unwrap();
        assert_eq!(cost, 3);
        assert_eq!(placed(&a), vec![(0, 10), (2, 20), (4, 30)]);
        assert_eq!(a.occupied_count(0..6), 3);
        assert_eq!(a.occupied_count(0..0), 0);
        assert_eq!(a.occupied_count(2..5), 2);
        assert_eq!(a.ledger().moves(Category::Rebuild), 3);
    }

    #[test]
    fn spread_nothing() {
        let mut a = LabeledArray::new(4);
        assert_eq!(a.spread_evenly(0..4, &[], Category::Rebuild).unwrap(), 0);
        assert!(a.is_empty());
    }

    #[test]
    fn spread_full_range() {
        let mut a = LabeledArray::new(3);
        a.spread_evenly(0..3, &[1, 2, 3], Category::Rebuild)
            .unwrap();
        assert_eq!(placed(&a), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn spread_over_capacity() {
        let mut a = LabeledArray::new(3);
        assert!(matches!(
            a.spread_evenly(0..2, &[1, 2, 3], Category::Rebuild),
            Err(Error::Capacity {
                needed: 3,
                available: 2
            })
        ));
    }

    #[test]
    fn spread_refuses_to_drop_keys() {
        let mut a = LabeledArray::new(8);
        a.spread_evenly(0..8, &[1, 2, 3], Category::Rebuild)
            .unwrap();
        assert!(matches!(
            a.spread_evenly(0..8, &[1, 3], Category::Rebuild),
            Err(Error::Corruption(_))
        ));
        assert_eq!(a.keys(), vec![1, 2, 3]);
    }

    #[test]
    fn spread_respects_outside_neighbours() {
        let mut a = LabeledArray::new(8);
        a.write_element(0, 10, Category::LeafLocal).unwrap();
        a.write_element(7, 20, Category::LeafLocal).unwrap();
        assert!(a.spread_evenly(2..6, &[5], Category::Rebuild).is_err());
        assert!(a.spread_evenly(2..6, &[25], Category::Rebuild).is_err());
        a.spread_evenly(2..6, &[11, 12], Category::Rebuild).unwrap();
        assert!(a.is_sorted());
    }

    #[test]
    fn partitioned_spread() {
        let mut a = LabeledArray::new(8);
        a.spread_evenly(0..8, &[1, 2, 3, 4], Category::Rebuild)
            .unwrap();
        a.spread_partitioned(0..8, &[(0..2, &[1, 2]), (2..8, &[3, 4])], Category::Rebuild)
            .unwrap();
        assert_eq!(placed(&a), vec![(0, 1), (1, 2), (2, 3), (5, 4)]);
        assert_eq!(a.ledger().total(), 8);
    }

    #[test]
    fn relayout_charges_only_moved_entries() {
        let mut a = LabeledArray::new(8);
        a.spread_evenly(0..8, &[1, 2, 3, 4], Category::Rebuild)
            .unwrap();
        let before = a.ledger().total();
        let layout = [
            (0, 1, Category::LeafLocal),
            (2, 2, Category::LeafLocal),
            (3, 3, Category::LeafLocal),
            (4, 4, Category::LeafLocal),
            (5, 9, Category::LeafLocal),
        ];
        let moved = a.relayout(0..8, &layout).unwrap();
        // 1 and 2 stay; 3, 4 move; 9 is new.
        assert_eq!(moved, 3);
        assert_eq!(a.ledger().total() - before, 3);
        assert_eq!(a.keys(), vec![1, 2, 3, 4, 9]);
    }

    #[test]
    fn relayout_removes_left_out_keys() {
        let mut a = LabeledArray::new(8);
        a.spread_evenly(0..8, &[1, 2, 3, 4], Category::Rebuild)
            .unwrap();
        a.relayout(0..4, &[(1, 2, Category::LeafLocal)]).unwrap();
        assert_eq!(a.keys(), vec![2, 3, 4]);
        assert_eq!(a.len(), 3);
        assert!(a.relayout(4..8, &[(4, 1, Category::LeafLocal)]).is_err());
        assert!(a
            .relayout(
                0..4,
                &[(2, 2, Category::LeafLocal), (1, 3, Category::LeafLocal)]
            )
            .is_err());
    }

    #[test]
    fn move_and_erase() {
        let mut a = LabeledArray::new(4);
        a.write_element(0, 1, Category::LeafLocal).unwrap();
        a.move_element(0, 2, Category::LeafLocal).unwrap();
        assert_eq!(a.get(2), Some(1));
        assert_eq!(a.get(0), None);
        assert_eq!(a.erase(2).unwrap(), 1);
        assert!(a.is_empty());
        assert_eq!(a.ledger().total(), 2);
    }

    #[test]
    fn gaps_and_touched() {
        let mut a = LabeledArray::new(10);
        a.write_element(1, 1, Category::LeafLocal).unwrap();
        a.write_element(5, 2, Category::LeafLocal).unwrap();
        a.write_element(6, 3, Category::LeafLocal).unwrap();
        assert_eq!(a.max_gap(), 3);
        assert_eq!(a.take_touched(), Some(1..7));
        assert_eq!(a.take_touched(), None);
        assert_eq!(a.max_gap_around(6..7), 0);
        assert_eq!(a.max_gap_around(2..3), 3);
        a.check_sorted_around(0..10).unwrap();
    }

    #[test]
    fn write_log_records_placements() {
        let mut a = LabeledArray::new(4);
        a.set_write_log(true);
        a.spread_evenly(0..4, &[5, 6], Category::Reset).unwrap();
        let log = a.take_write_log();
        assert_eq!(log.len(), 2);
        assert_eq!(
            log[1],
            WriteRecord {
                slot: 2,
                key: 6,
                category: Category::Reset
            }
        );
    }

    #[test]
    fn ledger_since_and_absorb() {
        let mut l = CostLedger::default();
        l.charge(Category::Reset, 4);
        let snap = l.clone();
        l.charge(Category::Reset, 3);
        l.charge(Category::LeafLocal, 1);
        let d = l.since(&snap);
        assert_eq!(d.moves(Category::Reset), 3);
        assert_eq!(d.total(), 4);
        let mut acc = CostLedger::default();
        acc.absorb(&d);
        acc.absorb(&d);
        assert_eq!(acc.total(), 8);
    }
}
