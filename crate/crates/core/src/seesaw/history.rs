/// One rebuild window of one subproblem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowRecord {
    /// 1-based window number within the subproblem's lifetime.
    pub index: u32,
    /// Insertions routed right minus insertions routed left.
    pub skew: i64,
    /// Array skew the window ran with.
    pub array_skew: i64,
    /// Insertions the window received (below `w` only for the last one).
    pub inserts: usize,
}

/// Window records of one internal subproblem over its whole lifetime.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewRecord {
    pub id: u64,
    pub size: usize,
    pub initial: usize,
    pub window_len: usize,
    pub window_param: u32,
    pub windows: Vec<WindowRecord>,
}

impl SkewRecord {
    pub fn skews(&self) -> Vec<i64> {
        self.windows.iter().map(|w| w.skew).collect()
    }
}

/// Append-only log of finished (or harvested) subproblems.
#[derive(Clone, Debug, Default)]
pub struct SkewHistory {
    pub records: Vec<SkewRecord>,
}

impl SkewHistory {
    pub fn push(&mut self, record: SkewRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records with at least `windows` windows.
    pub fn with_min_windows(&self, windows: usize) -> impl Iterator<Item = &SkewRecord> {
        self.records
            .iter()
            .filter(move |r| r.windows.len() >= windows)
    }
}
