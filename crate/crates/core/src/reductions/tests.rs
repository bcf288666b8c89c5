use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::labeler::Algo;

fn params(algo: Algo) -> LabelerParams {
    LabelerParams::new(algo).checked(true)
}

fn spaced(count: usize, step: u64) -> Vec<Key> {
    (1..=count as u64).map(|i| i * step).collect()
}

fn filled(m: usize, keys: &[Key]) -> LabeledArray {
    let mut a = LabeledArray::new(m);
    a.spread_evenly(0..m, keys, Category::Rebuild).unwrap();
    a
}

/// Real array with invisible keys dropped, compared against the virtual one.
fn strip(sim: &IncrementSimulation, real: &LabeledArray) -> Vec<Option<Key>> {
    let inv: BTreeSet<Key> = sim.invisible().iter().copied().collect();
    real.slots()
        .iter()
        .filter(|s| !matches!(s, Some(k) if inv.contains(k)))
        .copied()
        .collect()
}

#[test]
fn sizes() {
    assert_eq!(n_prime(24, 0.5), 8);
    assert_eq!(n_prime(1000, 0.3), 200);
    assert_eq!(visible_spacing(0.5), 6);
    assert_eq!(visible_spacing(0.25), 12);
    assert_eq!(visible_spacing(0.3), 10);
}

#[test]
fn visible_selection() {
    assert_eq!(select_visible(12, 0.5, 8).unwrap(), vec![1, 2, 3, 7]);
    assert_eq!(select_visible(12, 3.0, 8).unwrap(), vec![1, 2, 3, 4]);
    assert_eq!(select_visible(4, 0.5, 8).unwrap(), vec![1, 2, 3, 4]);
    assert!(matches!(
        select_visible(3, 0.5, 8),
        Err(Error::Capacity { .. })
    ));
    // Pattern alone overflows the visible budget: keep its first ranks.
    assert_eq!(select_visible(100, 0.5, 8).unwrap(), vec![1, 7, 13, 19]);
}

#[test]
fn simulation_layout_from_example() {
    let keys = spaced(12, 10);
    let mut real = filled(24, &keys);
    let sim = IncrementSimulation::new(&mut real, 0.5, &params(Algo::Classical), 0).unwrap();
    assert_eq!(sim.virtual_m(), 16);
    assert_eq!(sim.invisible(), &[40, 50, 60, 80, 90, 100, 110, 120]);
    sim.check(&real).unwrap();
    assert_eq!(strip(&sim, &real)[..16], sim.virtual_array().slots()[..]);
    assert_eq!(real.keys(), keys);
}

#[test]
fn no_invisible_items_mirror_exactly() {
    // Fewer items than n'/2: everything is visible.
    let m = 600;
    let keys = spaced(40, 1 << 20);
    for algo in Algo::ALL {
        let mut real = filled(m, &keys);
        let mut sim = IncrementSimulation::new(&mut real, 0.5, &params(algo), 5).unwrap();
        assert!(sim.invisible().is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..sim.inserts_left() {
            let k = rng.gen_range(1..1u64 << 40) | 1;
            if real.keys().binary_search(&k).is_ok() {
                continue;
            }
            let before = sim.virtual_array().ledger().total();
            let cost = sim.insert(&mut real, k).unwrap();
            // Keys rewritten into their own slot cost nothing here.
            assert!(cost <= sim.virtual_array().ledger().total() - before);
            let v = sim.virtual_array().slots();
            assert_eq!(&real.slots()[..v.len()], v);
        }
    }
}

#[test]
fn adjacent_insert_shifts_one_block() {
    let m = 1 << 10;
    let keys = spaced(m / 2, 1 << 20);
    let mut real = filled(m, &keys);
    let mut sim = IncrementSimulation::new(&mut real, 0.5, &params(Algo::Classical), 0).unwrap();
    let q = visible_spacing(0.5) as u64;
    let before = sim.virtual_array().ledger().total();
    let cost = sim.insert(&mut real, (1 << 20) + 1).unwrap();
    let virtual_cost = sim.virtual_array().ledger().total() - before;
    assert!(cost <= q * virtual_cost + q);
    sim.check(&real).unwrap();
}

#[test]
fn dynamic_batch_rebuild() {
    let m = 1000;
    let initial = spaced(600, 1 << 20);
    let mut d = DynamicLabeler::new(m, 0.3, params(Algo::SeeSaw), &initial, 2).unwrap();
    assert_eq!(d.batch_size(), 100);
    assert_eq!(d.max_live(), 700);
    for (i, &k) in initial.iter().take(100).enumerate() {
        d.delete(k).unwrap();
        let expect = u64::from(i == 99);
        assert_eq!(d.rebuilds(), expect);
    }
    assert_eq!(d.tombstones(), 0);
    assert_eq!(d.array().len(), 500);
    assert!(d.ledger().moves(Category::Rebuild) > 0);
}

#[test]
fn no_deletes_no_batch_rebuild() {
    let m = 1000;
    let mut d =
        DynamicLabeler::new(m, 0.3, params(Algo::SeeSaw), &spaced(300, 1 << 20), 2).unwrap();
    for i in 0..50u64 {
        d.insert((1 << 20) * 9 + 1 + i).unwrap();
    }
    assert_eq!(d.rebuilds(), 0);
}

#[test]
fn tombstone_revives_in_place() {
    let mut d =
        DynamicLabeler::new(1000, 0.3, params(Algo::Classical), &spaced(300, 1 << 20), 0).unwrap();
    d.delete(1 << 21).unwrap();
    assert!(!d.contains(1 << 21));
    assert_eq!(d.array().len(), 300);
    assert_eq!(d.insert(1 << 21).unwrap(), 0);
    assert!(d.contains(1 << 21));
    assert!(matches!(d.delete(7), Err(Error::MissingKey(7))));
    assert!(matches!(d.insert(1 << 20), Err(Error::DuplicateKey(_))));
}

#[test]
fn dynamic_capacity() {
    let mut d = DynamicLabeler::new(100, 0.5, params(Algo::Classical), &spaced(50, 10), 0).unwrap();
    assert!(matches!(d.insert(1), Err(Error::Capacity { .. })));
    assert!(DynamicLabeler::new(100, 0.5, params(Algo::Classical), &spaced(51, 10), 0).is_err());
    assert!(DynamicLabeler::new(100, 0.7, params(Algo::Classical), &[], 0).is_err());
}

#[test]
fn tiny_delta_goes_direct() {
    let mut d = DynamicLabeler::new(64, 0.1, params(Algo::SeeSaw), &spaced(20, 10), 0).unwrap();
    assert!(d.is_direct());
    d.insert(15).unwrap();
    d.delete(20).unwrap();
    assert_eq!(d.live_keys().len(), 20);
}

#[test]
fn fill_phase_plans() {
    assert_eq!(fill_phases(100), vec![50, 17, 11, 8, 5, 3, 2, 2, 1, 1]);
    assert_eq!(fill_phases(2), vec![1, 1]);
    assert_eq!(fill_phases(1), vec![0, 1]);
    for m in [2usize, 3, 10, 100, 1 << 10, 1 << 14] {
        let bound = ((m as f64).ln() / 1.5f64.ln()).ceil() as usize + 1;
        assert!(fill_phases(m).len() <= bound, "m = {m}");
        assert_eq!(fill_phases(m).iter().sum::<usize>(), m);
    }
}

#[test]
fn fill_reaches_full_sorted_array() {
    for algo in Algo::ALL {
        for m in [2usize, 100, 1 << 10] {
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            let mut keys = BTreeSet::new();
            while keys.len() < m {
                keys.insert(rng.gen_range(0..1u64 << 40));
            }
            let mut keys: Vec<Key> = keys.into_iter().collect();
            // Shuffle deterministically.
            for i in (1..keys.len()).rev() {
                keys.swap(i, rng.gen_range(0..=i));
            }
            let report = fill_from_empty(m, &keys, &params(algo), 3).unwrap();
            assert_eq!(report.array.len(), m);
            assert!(report.array.is_sorted());
            assert_eq!(report.phases, fill_phases(m));
            assert_eq!(report.array.ledger().inserts, m as u64);
            assert_eq!(report.total_moves, report.array.ledger().total());
        }
    }
    assert!(fill_from_empty(4, &[1, 2, 3], &params(Algo::SeeSaw), 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulation_mirrors_every_insert(
        seed in any::<u64>(),
        seesaw in any::<bool>(),
        delta in 0.05f64..0.5,
        fill in 0.3f64..1.0,
        raw in proptest::collection::vec(1u64..1 << 30, 1..300),
    ) {
        let m = 1 << 11;
        let algo = if seesaw { Algo::SeeSaw } else { Algo::Classical };
        let count = (((1.0 - delta) * m as f64) * fill) as usize;
        let mut real = filled(m, &spaced(count, 1 << 32));
        let mut sim = IncrementSimulation::new(&mut real, delta, &params(algo), seed).unwrap();
        sim.check(&real).unwrap();
        let q = visible_spacing(delta) as u64;
        let mut oracle: BTreeSet<Key> = real.keys().into_iter().collect();
        for k in raw {
            if sim.inserts_left() == 0 {
                break;
            }
            let k = k * 2 + 1;
            let before = sim.virtual_array().ledger().total();
            let cost = sim.insert(&mut real, k).unwrap();
            let virtual_cost = sim.virtual_array().ledger().total() - before;
            prop_assert!(cost <= q * virtual_cost + q, "{cost} real vs {virtual_cost} virtual");
            prop_assert!(cost <= (q + 1) * virtual_cost);
            oracle.insert(k);
            sim.check(&real).unwrap();
            let stripped = strip(&sim, &real);
            prop_assert_eq!(&stripped[..sim.virtual_m()], sim.virtual_array().slots());
        }
        prop_assert_eq!(real.keys(), oracle.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn dynamic_matches_sorted_set(
        seed in any::<u64>(),
        seesaw in any::<bool>(),
        ops in proptest::collection::vec((any::<bool>(), 0u64..400), 1..600),
    ) {
        let m = 512;
        let algo = if seesaw { Algo::SeeSaw } else { Algo::Classical };
        let initial = spaced(100, 4);
        let mut d = DynamicLabeler::new(m, 0.25, params(algo), &initial, seed).unwrap();
        let mut oracle: BTreeSet<Key> = initial.into_iter().collect();
        for (insert, k) in ops {
            if insert {
                let r = d.insert(k);
                if oracle.contains(&k) || oracle.len() == d.max_live() {
                    prop_assert!(r.is_err());
                } else {
                    r.unwrap();
                    oracle.insert(k);
                }
            } else if oracle.remove(&k) {
                d.delete(k).unwrap();
            } else {
                prop_assert!(d.delete(k).is_err());
            }
            prop_assert_eq!(d.live_keys(), oracle.iter().copied().collect::<Vec<_>>());
        }
    }
}
