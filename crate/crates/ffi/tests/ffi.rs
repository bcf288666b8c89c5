use std::ffi::CStr;
use std::ptr;

use listlabel_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        ll_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn new(algo: LlAlgo, m: usize, initial: &[u64]) -> *mut LlHandle {
    let mut options = ll_default_options(algo);
    options.seed = 7;
    options.check = true;
    let mut h = ptr::null_mut();
    let status = unsafe { ll_new(&options, m, initial.as_ptr(), initial.len(), &mut h) };
    assert_eq!(status, LlStatus::Ok, "{}", last_error());
    h
}

fn slots(h: *const LlHandle) -> Vec<Option<u64>> {
    let mut m = 0;
    unsafe {
        assert_eq!(ll_slot_count(h, &mut m), LlStatus::Ok);
        let mut keys = vec![0u64; m];
        let mut occ = vec![0u8; m];
        assert_eq!(
            ll_read_slots(h, keys.as_mut_ptr(), occ.as_mut_ptr(), m),
            LlStatus::Ok
        );
        keys.into_iter()
            .zip(occ)
            .map(|(k, o)| (o == 1).then_some(k))
            .collect()
    }
}

#[test]
fn insert_only_lifecycle() {
    for algo in [LlAlgo::Classical, LlAlgo::Seesaw] {
        let initial: Vec<u64> = (1..=64).map(|i| i * 100).collect();
        let h = new(algo, 256, &initial);
        unsafe {
            let mut cost = 0;
            assert_eq!(ll_insert(h, 150, &mut cost), LlStatus::Ok);
            assert!(cost >= 1);
            assert_eq!(ll_insert(h, 150, ptr::null_mut()), LlStatus::DuplicateKey);
            assert!(last_error().contains("150"));
            assert_eq!(ll_delete(h, 100, ptr::null_mut()), LlStatus::Unsupported);
            let mut len = 0;
            assert_eq!(ll_len(h, &mut len), LlStatus::Ok);
            assert_eq!(len, 65);
            let mut ledger = LlLedger::default();
            assert_eq!(ll_ledger(h, &mut ledger), LlStatus::Ok);
            let mut total = 0;
            assert_eq!(ll_total_moves(h, &mut total), LlStatus::Ok);
            assert_eq!(ledger.total_moves, total);
            assert_eq!(
                ledger.rebuild_moves
                    + ledger.reset_moves
                    + ledger.leaf_moves
                    + ledger.expensive_leaf_moves,
                total
            );
            assert_eq!(ledger.inserts, 1);
            assert_eq!(ll_check(h), LlStatus::Ok);
            let keys: Vec<u64> = slots(h).into_iter().flatten().collect();
            assert_eq!(keys.len(), 65);
            assert!(keys.windows(2).all(|w| w[0] < w[1]));
            ll_free(h);
        }
    }
}

#[test]
fn dynamic_lifecycle() {
    let mut options = ll_default_options(LlAlgo::Seesaw);
    options.check = true;
    let initial: Vec<u64> = (1..=100).map(|i| i * 10).collect();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(
            ll_dynamic_new(&options, 512, 0.25, initial.as_ptr(), initial.len(), &mut h),
            LlStatus::Ok
        );
        for k in (1..=50).map(|i| i * 10) {
            assert_eq!(ll_delete(h, k, ptr::null_mut()), LlStatus::Ok);
        }
        assert_eq!(ll_delete(h, 10, ptr::null_mut()), LlStatus::MissingKey);
        for k in 0..100u64 {
            assert_eq!(ll_insert(h, 2001 + k, ptr::null_mut()), LlStatus::Ok);
        }
        let mut len = 0;
        ll_len(h, &mut len);
        assert_eq!(len, 150);
        assert_eq!(ll_check(h), LlStatus::Ok);
        let mut ledger = LlLedger::default();
        ll_ledger(h, &mut ledger);
        assert_eq!((ledger.inserts, ledger.deletes), (100, 50));
        ll_free(h);
    }
}

#[test]
fn bad_arguments() {
    let options = ll_default_options(LlAlgo::Seesaw);
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(
            ll_new(ptr::null(), 64, ptr::null(), 0, &mut h),
            LlStatus::NullPointer
        );
        assert_eq!(
            ll_new(&options, 64, ptr::null(), 3, &mut h),
            LlStatus::NullPointer
        );
        let unsorted = [5u64, 3];
        assert_ne!(
            ll_new(&options, 64, unsorted.as_ptr(), 2, &mut h),
            LlStatus::Ok
        );
        assert_eq!(
            ll_dynamic_new(&options, 64, 0.9, ptr::null(), 0, &mut h),
            LlStatus::InvalidArgument
        );
        assert!(h.is_null());
        assert_eq!(
            ll_insert(ptr::null_mut(), 1, ptr::null_mut()),
            LlStatus::NullPointer
        );
        assert_eq!(ll_len(ptr::null(), ptr::null_mut()), LlStatus::NullPointer);
        ll_free(ptr::null_mut());

        let h = new(LlAlgo::Classical, 16, &[]);
        let mut keys = [0u64; 4];
        let mut occ = [0u8; 4];
        assert_eq!(
            ll_read_slots(h, keys.as_mut_ptr(), occ.as_mut_ptr(), 4),
            LlStatus::InvalidArgument
        );
        let mut len = 0;
        assert_eq!(ll_len(h, &mut len), LlStatus::Ok);
        assert_eq!(len, 0);
        ll_free(h);
    }
    // Truncated message still reports the full length.
    let mut small = [0 as std::ffi::c_char; 4];
    let full = unsafe { ll_last_error(small.as_mut_ptr(), small.len()) };
    assert!(full > 3);
    assert_eq!(small[3], 0);
}

#[test]
fn capacity_status() {
    let initial: Vec<u64> = (1..=32).collect();
    let h = new(LlAlgo::Seesaw, 64, &initial);
    unsafe {
        assert_eq!(ll_insert(h, 1000, ptr::null_mut()), LlStatus::Capacity);
        ll_free(h);
    }
}

#[test]
fn header_is_current() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/listlabel.h"))
            .unwrap();
    for name in [
        "ll_new",
        "ll_dynamic_new",
        "ll_insert",
        "ll_delete",
        "ll_len",
        "ll_slot_count",
        "ll_total_moves",
        "ll_ledger",
        "ll_read_slots",
        "ll_check",
        "ll_free",
        "ll_last_error",
        "typedef struct LlHandle LlHandle;",
        "LL_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
