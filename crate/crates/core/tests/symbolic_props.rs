use carpetdim::measure::{build_ladder, default_q_grid, estimate_s_from_tau, tau_from_ladder, Schedule, DEFAULT_TAIL};
use carpetdim::preset::{preset, PRESET_NAMES};
use carpetdim::symbolic::{equivalence_classes, h_lower_bound};
use carpetdim::{Budget, CarpetIfs, EndpointLevel, Word};
use proptest::prelude::*;

/// Size of the class of `w`: words of the same length with the same left
/// endpoint.
fn class_size(c: &CarpetIfs, w: &Word) -> u64 {
    let e = c.left_endpoint(w).unwrap();
    let level = EndpointLevel::build(c, w.len(), &Budget::default()).unwrap();
    level.points().iter().find(|(p, _)| *p == e).map(|(_, n)| *n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn partition_law(p in 0usize..PRESET_NAMES.len(), k in 1usize..=10) {
        let c = preset(PRESET_NAMES[p]).unwrap();
        let t = equivalence_classes(&c, k, &Budget::default()).unwrap();
        prop_assert_eq!(t.total_words(), 1u128 << k);
        prop_assert_eq!(t.class_count, t.classes.len());
        let members = t.members.as_ref().unwrap();
        prop_assert_eq!(members.iter().map(Vec::len).sum::<usize>(), 1usize << k);
        for (ms, (_, n)) in members.iter().zip(&t.classes) {
            prop_assert_eq!(ms.len() as u64, *n);
        }
    }
}

#[test]
fn powers_of_classes_are_supermultiplicative() {
    for name in ["pu-golden", "pu-tribonacci", "pu-salem-4", "pu-garsia-sqrt2"] {
        let c = preset(name).unwrap();
        for len in 1..=4usize {
            let t = equivalence_classes(&c, len, &Budget::default()).unwrap();
            for ms in t.members.as_ref().unwrap() {
                let rep = &ms[0];
                let size = ms.len() as u64;
                for n in 1..=3usize {
                    assert!(class_size(&c, &rep.power(n)) >= size.pow(n as u32), "{name}: {rep}^{n}");
                }
            }
        }
    }
}

#[test]
fn h_rows_are_consistent() {
    let c = preset("pu-tribonacci").unwrap();
    let h = h_lower_bound(&c, 12, &Budget::default()).unwrap();
    let mut best = 0.0f64;
    for r in &h.rows {
        assert_eq!(r.h_k, (r.max_class_size as f64).ln() / r.k as f64);
        best = best.max(r.h_k);
        assert_eq!(r.h_lower, best);
    }
    // (2,1,1,1) ~ (1,2,2,2) since β + β² + β³ = 1
    assert!(h.rows[3].max_class_size >= 2);
}

#[test]
fn symbolic_dimension_dominates_s() {
    let budget = Budget::default();
    for name in PRESET_NAMES {
        let c = preset(name).unwrap();
        let h = h_lower_bound(&c, 12, &budget).unwrap();
        let ladder = build_ladder(&c, &Schedule::Auto, &budget).unwrap();
        let spectrum = tau_from_ladder(&ladder, &default_q_grid()).unwrap();
        let s = estimate_s_from_tau(&spectrum, DEFAULT_TAIL).unwrap().slope;
        assert!(h.symbolic_min_dim >= s - 0.05, "{name}: {} < {s}", h.symbolic_min_dim);
    }
}
