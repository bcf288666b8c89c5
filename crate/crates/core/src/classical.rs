//! Classical density-threshold rebalancing over a subarray.
//!
//! The subarray is viewed as an implicit binary tree of intervals obtained by
//! halving `height` times; the leaves are the chunks. An interval at depth `d`
//! may hold at most `tau(d) * len` elements, with `tau` growing linearly from
//! `tau_root` at the root to `tau_leaf` at the chunks. An insertion goes into
//! the chunk holding its predecessor; if the chunk stays within its threshold
//! the neighbours are shifted locally, otherwise the smallest enclosing
//! interval that can absorb one more element is re-spread evenly.
//!
//! Amortized cost is `O(log^2 len)` moves per insertion.

use std::ops::Range;

use crate::array::{Category, Key, LabeledArray};
use crate::error::{Error, Result};

/// Density thresholds and chunk size for a [`ClassicalLabeler`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalParams {
    pub tau_root: f64,
    pub tau_leaf: f64,
    /// Overrides the default chunk size `max(2, ceil(log2 len))`.
    pub chunk: Option<usize>,
    /// When false, an insertion that no interval threshold admits still
    /// succeeds by re-spreading the whole range as long as a slot is free.
    /// See-Saw leaves run in this mode.
    pub strict: bool,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        ClassicalParams {
            tau_root: 0.86,
            tau_leaf: 1.0,
            chunk: None,
            strict: true,
        }
    }
}

impl ClassicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_root > 0.0 && self.tau_root < self.tau_leaf && self.tau_leaf <= 1.0) {
            return Err(Error::Config(format!(
                "need 0 < tau_root < tau_leaf <= 1, got {} and {}",
                self.tau_root, self.tau_leaf
            )));
        }
        if self.chunk == Some(0) {
            return Err(Error::Config("chunk size must be positive".into()));
        }
        Ok(())
    }
}

/// Linear density threshold for depth `depth` of a tree of height `height`.
pub fn threshold(depth: u32, height: u32, tau_root: f64, tau_leaf: f64) -> f64 {
    if height == 0 {
        return tau_root;
    }
    tau_root + (tau_leaf - tau_root) * f64::from(depth) / f64::from(height)
}

fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

/// Classical labeler over one subarray of a [`LabeledArray`]. Holds no
/// element state of its own; the array is the ground truth.
#[derive(Clone, Debug)]
pub struct ClassicalLabeler {
    range: Range<usize>,
    chunk: usize,
    height: u32,
    params: ClassicalParams,
}

impl ClassicalLabeler {
    /// Takes over `range` with whatever elements it already holds.
    pub fn new(range: Range<usize>, params: ClassicalParams) -> Self {
        let len = range.len();
        let chunk = params
            .chunk
            .unwrap_or_else(|| ceil_log2(len).max(2) as usize);
        let mut height = 0;
        while chunk << height < len {
            height += 1;
        }
        ClassicalLabeler {
            range,
            chunk,
            height,
            params,
        }
    }

    pub fn range(&self) -> Range<usize> {
        self.range.clone()
    }

    pub fn chunk(&self) -> usize {
        self.chunk
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn threshold(&self, depth: u32) -> f64 {
        threshold(
            depth,
            self.height,
            self.params.tau_root,
            self.params.tau_leaf,
        )
    }

    /// Most elements that fit in an interval of `len` slots at `depth`,
    /// counting the one being inserted.
    fn admits(&self, depth: u32, len: usize, load: usize) -> bool {
        (load as f64) <= self.threshold(depth) * len as f64 + 1e-9
    }

    /// Inserts `key`, returning the number of moves charged to `category`.
    pub fn insert(&self, array: &mut LabeledArray, key: Key, category: Category) -> Result<u64> {
        if self.range.is_empty() {
            return Err(Error::Capacity {
                needed: 1,
                available: 0,
            });
        }
        // Descend to the chunk holding the key's predecessor, remembering the path.
        let mut path = Vec::with_capacity(self.height as usize + 1);
        let (mut lo, mut hi) = (self.range.start, self.range.end);
        for _ in 0..self.height {
            path.push(lo..hi);
            let mid = lo + (hi - lo) / 2;
            match array.first_occupied_in(mid..hi) {
                Some((_, k)) if k == key => return Err(Error::DuplicateKey(key)),
                Some((_, k)) if k < key => lo = mid,
                _ => hi = mid,
            }
        }
        path.push(lo..hi);

        let chunk = lo..hi;
        let load = array.occupied_count(chunk.clone()) + 1;
        if self.admits(self.height, chunk.len(), load) {
            return self.shift_insert(array, chunk, key, category);
        }
        for depth in (0..self.height).rev() {
            let interval = path[depth as usize].clone();
            let load = array.occupied_count(interval.clone()) + 1;
            if self.admits(depth, interval.len(), load) {
                return self.rebalance(array, interval, key, category);
            }
        }
        let load = array.occupied_count(self.range.clone()) + 1;
        if !self.params.strict && load <= self.range.len() {
            return self.rebalance(array, self.range.clone(), key, category);
        }
        Err(Error::Capacity {
            needed: load,
            available: (self.params.tau_root * self.range.len() as f64) as usize,
        })
    }

    /// Places `key` inside `chunk`, shifting neighbours toward the nearest free slot.
    fn shift_insert(
        &self,
        array: &mut LabeledArray,
        chunk: Range<usize>,
        key: Key,
        category: Category,
    ) -> Result<u64> {
        // First slot after the last element smaller than `key`.
        let mut p = chunk.start;
        for (slot, k) in array.occupied_in(chunk.clone()) {
            if k == key {
                return Err(Error::DuplicateKey(key));
            }
            if k > key {
                break;
            }
            p = slot + 1;
        }
        if p < chunk.end && array.get(p).is_none() {
            array.write_element(p, key, category)?;
            return Ok(1);
        }
        if let Some(free) = (p..chunk.end).find(|&s| array.get(s).is_none()) {
            for s in (p..free).rev() {
                array.move_element(s, s + 1, category)?;
            }
            array.write_element(p, key, category)?;
            return Ok((free - p + 1) as u64);
        }
        if let Some(free) = (chunk.start..p).rev().find(|&s| array.get(s).is_none()) {
            for s in free + 1..p {
                array.move_element(s, s - 1, category)?;
            }
            array.write_element(p - 1, key, category)?;
            return Ok((p - free) as u64);
        }
        Err(Error::corruption(format!(
            "chunk {chunk:?} admitted an insert but has no free slot"
        )))
    }

    fn rebalance(
        &self,
        array: &mut LabeledArray,
        interval: Range<usize>,
        key: Key,
        category: Category,
    ) -> Result<u64> {
        let mut keys = array.keys_in(interval.clone());
        match keys.binary_search(&key) {
            Ok(_) => Err(Error::DuplicateKey(key)),
            Err(pos) => {
                keys.insert(pos, key);
                array.spread_evenly(interval, &keys, category)
            }
        }
    }
}

/// A whole array managed by one [`ClassicalLabeler`]: the baseline algorithm.
#[derive(Clone, Debug)]
pub struct ClassicalArray {
    array: LabeledArray,
    labeler: ClassicalLabeler,
}

impl ClassicalArray {
    /// Builds an array of `m` slots with `initial` (sorted, distinct) keys
    /// spread evenly. The initial placement is charged to the ledger as a
    /// rebuild.
    pub fn new(m: usize, initial: &[Key], params: ClassicalParams) -> Result<Self> {
        params.validate()?;
        let mut array = LabeledArray::new(m);
        array.spread_evenly(0..m, initial, Category::Rebuild)?;
        Ok(Self::from_array(array, params))
    }

    /// Adopts an already populated array.
    pub fn from_array(array: LabeledArray, params: ClassicalParams) -> Self {
        let labeler = ClassicalLabeler::new(0..array.capacity(), params);
        ClassicalArray { array, labeler }
    }

    pub fn insert(&mut self, key: Key) -> Result<u64> {
        let cost = self
            .labeler
            .insert(&mut self.array, key, Category::LeafLocal)?;
        self.array.ledger_mut().inserts += 1;
        Ok(cost)
    }

    pub fn array(&self) -> &LabeledArray {
        &self.array
    }

    pub fn array_mut(&mut self) -> &mut LabeledArray {
        &mut self.array
    }

    pub fn into_array(self) -> LabeledArray {
        self.array
    }

    pub fn labeler(&self) -> &ClassicalLabeler {
        &self.labeler
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(threshold(0, 4, 0.86, 1.0), 0.86);
        assert_eq!(threshold(4, 4, 0.86, 1.0), 1.0);
        assert!((threshold(2, 4, 0.86, 1.0) - 0.93).abs() < 1e-12);
        for d in 0..4 {
            assert!(threshold(d, 4, 0.86, 1.0) < threshold(d + 1, 4, 0.86, 1.0));
        }
    }

    #[test]
    fn geometry() {
        let l = ClassicalLabeler::new(0..8, ClassicalParams::default());
        assert_eq!(l.chunk(), 3);
        assert_eq!(l.height(), 2);
        let l = ClassicalLabeler::new(0..1024, ClassicalParams::default());
        assert_eq!(l.chunk(), 10);
        assert_eq!(l.height(), 7);
        let l = ClassicalLabeler::new(5..6, ClassicalParams::default());
        assert_eq!(l.height(), 0);
    }

    #[test]
    fn first_insert_costs_one() {
        let mut c = ClassicalArray::new(8, &[], ClassicalParams::default()).unwrap();
        assert_eq!(c.insert(5).unwrap(), 1);
        assert_eq!(c.array().keys(), vec![5]);
    }

    #[test]
    fn duplicate_rejected() {
        let mut c = ClassicalArray::new(16, &[2, 4, 6], ClassicalParams::default()).unwrap();
        for k in [2, 4, 6] {
            assert!(matches!(c.insert(k), Err(Error::DuplicateKey(_))));
        }
        c.insert(5).unwrap();
        assert!(matches!(c.insert(5), Err(Error::DuplicateKey(5))));
    }

    #[test]
    fn strict_capacity_limit() {
        let mut c = ClassicalArray::new(8, &[], ClassicalParams::default()).unwrap();
        // 0.86 * 8 = 6.88 elements fit.
        for k in 1..=6 {
            c.insert(k * 10).unwrap();
        }
        assert!(matches!(c.insert(70), Err(Error::Capacity { .. })));
        assert!(c.array().is_sorted());
    }

    #[test]
    fn relaxed_mode_fills_to_the_brim() {
        let params = ClassicalParams {
            strict: false,
            ..ClassicalParams::default()
        };
        let mut c = ClassicalArray::new(8, &[], params).unwrap();
        for k in 1..=8 {
            c.insert(k * 10).unwrap();
        }
        assert_eq!(c.array().len(), 8);
        assert!(matches!(c.insert(5), Err(Error::Capacity { .. })));
        assert!(c.array().is_sorted());
    }

    fn intervals(range: Range<usize>, depth: u32, out: &mut Vec<(u32, Range<usize>)>, h: u32) {
        out.push((depth, range.clone()));
        if depth < h {
            let mid = range.start + range.len() / 2;
            intervals(range.start..mid, depth + 1, out, h);
            intervals(mid..range.end, depth + 1, out, h);
        }
    }

    #[test]
    fn writes_stay_inside_one_interval() {
        let mut c = ClassicalArray::new(256, &[], ClassicalParams::default()).unwrap();
        let h = c.labeler().height();
        let mut all = Vec::new();
        intervals(0..256, 0, &mut all, h);
        let mut rebalances = 0;
        // A monotone wedge plus a scattered tail.
        let keys: Vec<u64> = (1..=150u64).chain((0..60).map(|i| 1000 + i * 37)).collect();
        for k in keys {
            c.array_mut().take_touched();
            c.insert(k).unwrap();
            let touched = c.array_mut().take_touched().unwrap();
            let in_chunk = all
                .iter()
                .any(|(d, r)| *d == h && r.start <= touched.start && touched.end <= r.end);
            let whole = all.iter().any(|(_, r)| *r == touched);
            assert!(
                in_chunk || whole,
                "writes {touched:?} span no single interval"
            );
            if !in_chunk {
                rebalances += 1;
                let depth = all.iter().find(|(_, r)| *r == touched).unwrap().0;
                let load = c.array().occupied_count(touched.clone()) as f64;
                assert!(load <= c.labeler().threshold(depth) * touched.len() as f64 + 1e-9);
            }
            assert!(c.array().is_sorted());
        }
        assert!(rebalances > 0);
    }
}
