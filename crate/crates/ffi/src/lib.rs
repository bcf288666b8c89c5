//! C interface to the `listlabel` structures.
//!
//! Every function returns an [`LlStatus`] and writes results through out
//! pointers. Handles are opaque and must be released with [`ll_free`].
//! After a non-OK status, [`ll_last_error`] describes the failure on the
//! calling thread.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use listlabel::labeler::{Algo, Labeler, LabelerParams};
use listlabel::reductions::DynamicLabeler;
use listlabel::{Category, CostLedger, Error, LabeledArray};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    DuplicateKey = 4,
    MissingKey = 5,
    /// The structure is inconsistent; the handle should be freed.
    Integrity = 6,
    /// The operation is not available for this kind of handle.
    Unsupported = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LlAlgo {
    Classical = 0,
    Seesaw = 1,
}

impl From<LlAlgo> for Algo {
    fn from(a: LlAlgo) -> Self {
        match a {
            LlAlgo::Classical => Algo::Classical,
            LlAlgo::Seesaw => Algo::SeeSaw,
        }
    }
}

/// Moves per cost category plus operation counts.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LlLedger {
    pub rebuild_moves: u64,
    pub reset_moves: u64,
    pub leaf_moves: u64,
    pub expensive_leaf_moves: u64,
    pub total_moves: u64,
    pub expensive_leaf_arrivals: u64,
    pub inserts: u64,
    pub deletes: u64,
}

impl From<&CostLedger> for LlLedger {
    fn from(l: &CostLedger) -> Self {
        LlLedger {
            rebuild_moves: l.moves(Category::Rebuild),
            reset_moves: l.moves(Category::Reset),
            leaf_moves: l.moves(Category::LeafLocal),
            expensive_leaf_moves: l.moves(Category::ExpensiveLeafLocal),
            total_moves: l.total(),
            expensive_leaf_arrivals: l.expensive_leaf_arrivals,
            inserts: l.inserts,
            deletes: l.deletes,
        }
    }
}

/// Structure construction options. Zero constants select the defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LlOptions {
    pub algo: LlAlgo,
    pub seed: u64,
    pub c_alpha: f64,
    pub c_beta: f64,
    pub pma: bool,
    pub check: bool,
}

impl LlOptions {
    fn params(&self) -> LabelerParams {
        let mut p = LabelerParams::new(self.algo.into()).checked(self.check);
        if self.c_alpha > 0.0 {
            p.c_alpha = self.c_alpha;
        }
        if self.c_beta > 0.0 {
            p.c_beta = self.c_beta;
        }
        p.pma = self.pma;
        p
    }
}

enum Inner {
    InsertOnly(Box<dyn Labeler>),
    Dynamic(Box<DynamicLabeler>),
}

/// Opaque structure handle.
pub struct LlHandle {
    inner: Inner,
}

impl LlHandle {
    fn array(&self) -> &LabeledArray {
        match &self.inner {
            Inner::InsertOnly(l) => l.array(),
            Inner::Dynamic(d) => d.array(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> LlStatus {
    match e {
        Error::Capacity { .. } => LlStatus::Capacity,
        Error::DuplicateKey(_) => LlStatus::DuplicateKey,
        Error::MissingKey(_) => LlStatus::MissingKey,
        Error::Corruption(_) | Error::Invariant(_) => LlStatus::Integrity,
        Error::Io(_) | Error::Csv(_) => LlStatus::Io,
        Error::Config(_) | Error::Workload(_) | Error::Parse { .. } => LlStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (LlStatus, String)>) -> LlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside listlabel".into());
            LlStatus::Panic
        }
    }
}

fn lib<T>(r: listlabel::Result<T>) -> Result<T, (LlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (LlStatus, String) {
    (LlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a>(h: *const LlHandle) -> Result<&'a LlHandle, (LlStatus, String)> {
    h.as_ref().ok_or_else(|| null("handle"))
}

unsafe fn handle_mut<'a>(h: *mut LlHandle) -> Result<&'a mut LlHandle, (LlStatus, String)> {
    h.as_mut().ok_or_else(|| null("handle"))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), (LlStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn keys<'a>(ptr: *const u64, len: usize) -> Result<&'a [u64], (LlStatus, String)> {
    if len == 0 {
        Ok(&[])
    } else if ptr.is_null() {
        Err(null("key array"))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

/// Default options for `algo`.
#[no_mangle]
pub extern "C" fn ll_default_options(algo: LlAlgo) -> LlOptions {
    LlOptions {
        algo,
        seed: 0,
        c_alpha: 0.0,
        c_beta: 0.0,
        pma: false,
        check: false,
    }
}

/// Creates an insert-only structure over `m` slots holding `initial`
/// (sorted, distinct, `initial_len` keys).
///
/// # Safety
/// `options` and `out` must be valid; `initial` must point to `initial_len` keys.
#[no_mangle]
pub unsafe extern "C" fn ll_new(
    options: *const LlOptions,
    m: usize,
    initial: *const u64,
    initial_len: usize,
    out: *mut *mut LlHandle,
) -> LlStatus {
    guard(|| {
        let options = options.as_ref().ok_or_else(|| null("options"))?;
        let initial = keys(initial, initial_len)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let labeler = lib(options.params().build(m, initial, options.seed))?;
        write(
            out,
            Box::into_raw(Box::new(LlHandle {
                inner: Inner::InsertOnly(labeler),
            })),
        )
    })
}

/// Creates a structure supporting deletions over `m` slots, holding at
/// most `(1 - delta) m` keys.
///
/// # Safety
/// As for [`ll_new`].
#[no_mangle]
pub unsafe extern "C" fn ll_dynamic_new(
    options: *const LlOptions,
    m: usize,
    delta: f64,
    initial: *const u64,
    initial_len: usize,
    out: *mut *mut LlHandle,
) -> LlStatus {
    guard(|| {
        let options = options.as_ref().ok_or_else(|| null("options"))?;
        let initial = keys(initial, initial_len)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let d = lib(DynamicLabeler::new(
            m,
            delta,
            options.params(),
            initial,
            options.seed,
        ))?;
        write(
            out,
            Box::into_raw(Box::new(LlHandle {
                inner: Inner::Dynamic(Box::new(d)),
            })),
        )
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `h` must come from a constructor here and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ll_free(h: *mut LlHandle) {
    if !h.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(h))));
    }
}

/// Inserts `key`; `cost` (optional) receives the moves it took.
///
/// # Safety
/// `h` must be a live handle; `cost` may be null.
#[no_mangle]
pub unsafe extern "C" fn ll_insert(h: *mut LlHandle, key: u64, cost: *mut u64) -> LlStatus {
    guard(|| {
        let h = handle_mut(h)?;
        let moves = match &mut h.inner {
            Inner::InsertOnly(l) => lib(l.insert(key))?,
            Inner::Dynamic(d) => lib(d.insert(key))?,
        };
        if !cost.is_null() {
            cost.write(moves);
        }
        Ok(())
    })
}

/// Deletes `key`. Only handles from [`ll_dynamic_new`] support this.
///
/// # Safety
/// As for [`ll_insert`].
#[no_mangle]
pub unsafe extern "C" fn ll_delete(h: *mut LlHandle, key: u64, cost: *mut u64) -> LlStatus {
    guard(|| {
        let h = handle_mut(h)?;
        let moves = match &mut h.inner {
            Inner::InsertOnly(_) => {
                return Err((LlStatus::Unsupported, "insert-only structure".into()))
            }
            Inner::Dynamic(d) => lib(d.delete(key))?,
        };
        if !cost.is_null() {
            cost.write(moves);
        }
        Ok(())
    })
}

/// Number of live keys.
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_len(h: *const LlHandle, out: *mut usize) -> LlStatus {
    guard(|| {
        let h = handle(h)?;
        let len = match &h.inner {
            Inner::InsertOnly(l) => l.len(),
            Inner::Dynamic(d) => d.len(),
        };
        write(out, len)
    })
}

/// Number of slots.
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_slot_count(h: *const LlHandle, out: *mut usize) -> LlStatus {
    guard(|| write(out, handle(h)?.array().capacity()))
}

/// Total moves since construction, including the initial placement.
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_total_moves(h: *const LlHandle, out: *mut u64) -> LlStatus {
    guard(|| write(out, handle(h)?.array().ledger().total()))
}

/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_ledger(h: *const LlHandle, out: *mut LlLedger) -> LlStatus {
    guard(|| write(out, LlLedger::from(handle(h)?.array().ledger())))
}

/// Copies the slot array: `keys[i]` holds the key in slot `i` when
/// `occupied[i]` is 1. Both buffers need [`ll_slot_count`] entries. Deleted
/// keys awaiting a rebuild still occupy their slots.
///
/// # Safety
/// `keys` and `occupied` must each hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ll_read_slots(
    h: *const LlHandle,
    keys: *mut u64,
    occupied: *mut u8,
    len: usize,
) -> LlStatus {
    guard(|| {
        let slots = handle(h)?.array().slots();
        if len < slots.len() {
            return Err((
                LlStatus::InvalidArgument,
                format!("buffers hold {len} entries, need {}", slots.len()),
            ));
        }
        if keys.is_null() || occupied.is_null() {
            return Err(null("slot buffer"));
        }
        let keys = std::slice::from_raw_parts_mut(keys, slots.len());
        let occupied = std::slice::from_raw_parts_mut(occupied, slots.len());
        for (i, s) in slots.iter().enumerate() {
            keys[i] = s.unwrap_or(0);
            occupied[i] = u8::from(s.is_some());
        }
        Ok(())
    })
}

/// Verifies every structural invariant.
///
/// # Safety
/// `h` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_check(h: *const LlHandle) -> LlStatus {
    guard(|| {
        let h = handle(h)?;
        lib(match &h.inner {
            Inner::InsertOnly(l) => l.check_invariants(),
            Inner::Dynamic(d) => d.check_invariants(),
        })
    })
}

/// Copies the calling thread's last error message, NUL terminated and
/// truncated to `len` bytes. Returns the full message length.
///
/// # Safety
/// `buf` must hold `len` bytes, or be null when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn ll_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}
