use carpetdim::boxcount::{box_count_series, dyadic_scales, fit_box_dimension, Target};
use carpetdim::measure::{
    bin_projected_measure, build_ladder, default_q_grid, estimate_s_from_tau, min_bin_from_ladder, similarity_dimension, tau_from_ladder,
    Schedule, DEFAULT_TAIL,
};
use carpetdim::preset::{preset, PRESET_NAMES};
use carpetdim::{Budget, FieldElement};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mass_is_conserved_and_refines(p in 0usize..PRESET_NAMES.len(), depth in 1usize..=8, b in 1usize..=64) {
        let c = preset(PRESET_NAMES[p]).unwrap();
        let budget = Budget::default();
        let coarse = bin_projected_measure(&c, depth, b, &budget).unwrap();
        let fine = bin_projected_measure(&c, depth, 2 * b, &budget).unwrap();
        prop_assert!(coarse.total().is_one());
        let sum = coarse.masses().iter().fold(FieldElement::zero(c.field()), |a, m| &a + m);
        prop_assert!(sum.is_one());
        let merged = fine.coarsen(2);
        prop_assert_eq!(merged.masses(), coarse.masses());
    }
}

/// Shape of the spectrum, estimator agreement and the chain
/// `s ≤ bd πF ≤ min(log m/(−log β), 1)` on every preset.
#[test]
fn spectrum_shape_and_bound_chain() {
    let budget = Budget::default();
    let qs = default_q_grid();
    for name in PRESET_NAMES {
        let c = preset(name).unwrap();
        let ladder = build_ladder(&c, &Schedule::Auto, &budget).unwrap();
        let spectrum = tau_from_ladder(&ladder, &qs).unwrap();
        assert!(spectrum.tau_at(1.0).unwrap().abs() <= 0.02, "{name}: tau(1)");
        let taus: Vec<f64> = spectrum.samples.iter().map(|s| s.tau).collect();
        for w in taus.windows(2) {
            assert!(w[1] >= w[0] - 0.02, "{name}: tau not monotone");
        }
        for (i, w) in spectrum.samples.windows(3).enumerate() {
            let left = (w[1].tau - w[0].tau) / (w[1].q - w[0].q);
            let right = (w[2].tau - w[1].tau) / (w[2].q - w[1].q);
            assert!(right <= left + 0.02, "{name}: tau not concave near sample {i}");
        }
        let s_tau = estimate_s_from_tau(&spectrum, DEFAULT_TAIL).unwrap().slope;
        let s_min = min_bin_from_ladder(&ladder).unwrap().fit.slope;
        assert!((s_tau - s_min).abs() <= 0.05, "{name}: s_tau {s_tau} vs s_minbin {s_min}");
        let series = box_count_series(&c, Target::Projection, &dyadic_scales(4, 14), &budget).unwrap();
        let bd_pif = fit_box_dimension(&series).unwrap().slope;
        assert!(s_tau <= bd_pif + 0.05, "{name}: s {s_tau} above box dimension {bd_pif}");
        assert!(s_tau <= similarity_dimension(&c).min(1.0) + 0.02, "{name}: s above similarity bound");
    }
}
