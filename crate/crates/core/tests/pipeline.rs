use approx::assert_abs_diff_eq;
use fermi_entropy::oracle::{brute_force_block_entropy, table_block};
use fermi_entropy::{
    block_entropy, block_matrices, block_matrices_with_margin, build_correlator_table, build_correlator_table_with,
    classify_phase, entropy_series, extract_fermi_surface, mode_spectrum, oracle_bdg, widom_closed_form_2d,
    widom_crossing_integral, widom_from_surface, CorrelatorCache, KGrid, ModelParams, ModelParamsF64, Phase,
    SeriesOptions, ZeroModePolicy,
};
use proptest::prelude::*;

fn max_diff(a: &fermi_entropy::CorrelatorTableF64, b: &fermi_entropy::CorrelatorTableF64, n: i64) -> f64 {
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            let r = [x, y];
            worst = worst.max((a.g(&r) - b.g(&r)).norm()).max((a.a(&r) - b.a(&r)).norm());
        }
    }
    worst
}

#[test]
fn momentum_table_matches_real_space_lattice() {
    // shifted N-point grid <-> antiperiodic N x N lattice
    for (lambda, gamma) in [(0.7, 0.4), (1.3, 1.0), (2.6, 0.3)] {
        let p = ModelParamsF64::new(lambda, gamma, 2).unwrap();
        let table = build_correlator_table(&p, &KGrid::new(8, true).unwrap()).unwrap();
        let oracle = oracle_bdg(&p, 8, true).unwrap();
        assert!(max_diff(&table, &oracle, 8) < 1e-10, "({lambda}, {gamma})");
    }
}

#[test]
fn block_entropy_matches_density_matrix() {
    let p = ModelParamsF64::new(0.9, 0.6, 2).unwrap();
    let table = build_correlator_table(&p, &KGrid::new(12, true).unwrap()).unwrap();
    let spectral = block_entropy(&mode_spectrum(&block_matrices_with_margin(&table, 2, 1).unwrap()).unwrap());
    let (c, f) = table_block(&table, 2);
    let brute = brute_force_block_entropy(&c, &f).unwrap();
    assert_abs_diff_eq!(spectral.entropy_bits, brute, epsilon = 1e-9);
}

#[test]
fn half_filled_chain_grows_logarithmically() {
    let p = ModelParamsF64::new(0.0, 0.0, 1).unwrap();
    let ls: Vec<usize> = (8..=64).step_by(8).collect();
    let series = entropy_series(&p, &ls, &KGrid::default_for(1, 64), &SeriesOptions::default()).unwrap();
    let s = series.successes();
    // S(2L) - S(L) -> (1/3) log2(2) for a c = 1 chain
    let gain = s[7].1 - s[3].1;
    assert_abs_diff_eq!(gain, 1.0 / 3.0, epsilon = 0.01);
}

#[test]
fn gapped_entropy_saturates() {
    let p = ModelParamsF64::new(1.8, 1.0, 1).unwrap();
    let series = entropy_series(&p, &[10, 20, 40], &KGrid::default_for(1, 40), &SeriesOptions::default()).unwrap();
    let s = series.successes();
    assert_abs_diff_eq!(s[1].1, s[2].1, epsilon = 1e-8);
}

#[test]
fn single_precision_tracks_double() {
    let p64 = ModelParams::<f64>::new(0.6, 0.0, 2).unwrap();
    let p32 = ModelParams::<f32>::new(0.6, 0.0, 2).unwrap();
    let grid = KGrid::new(64, true).unwrap();
    let s64 = block_entropy(&mode_spectrum(&block_matrices(&build_correlator_table(&p64, &grid).unwrap(), 6).unwrap()).unwrap());
    let s32 = block_entropy(&mode_spectrum(&block_matrices(&build_correlator_table(&p32, &grid).unwrap(), 6).unwrap()).unwrap());
    assert!((s64.entropy_bits - s32.entropy_bits as f64).abs() < 1e-3 * s64.entropy_bits);
}

#[test]
fn surface_quadrature_agrees_with_crossing_integral() {
    for (lambda, dim) in [(0.4, 2), (1.0, 3), (2.2, 3)] {
        let p = ModelParamsF64::new(lambda, 0.0, dim).unwrap();
        let surface = widom_from_surface(&extract_fermi_surface(&p, 128).unwrap());
        let crossing = widom_crossing_integral(&p, 400).unwrap();
        assert!((surface - crossing).abs() < 5e-3 * crossing, "lambda={lambda} d={dim}: {surface} vs {crossing}");
    }
    let p = ModelParamsF64::new(0.4, 0.0, 2).unwrap();
    let surface = widom_from_surface(&extract_fermi_surface(&p, 512).unwrap());
    assert_abs_diff_eq!(surface, widom_closed_form_2d(0.4).unwrap(), epsilon = 1e-4);
}

#[test]
fn cache_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cache = CorrelatorCache::new(dir.path()).unwrap();
    let p = ModelParamsF64::new(1.1, 0.5, 2).unwrap();
    let grid = KGrid::new(32, true).unwrap();
    let built = cache.load_or_build(&p, &grid, ZeroModePolicy::Reject).unwrap();
    let loaded = cache.load(&p, &grid, ZeroModePolicy::Reject).unwrap().expect("stored");
    assert_eq!(built.g_values(), loaded.g_values());
    assert_eq!(built.a_values(), loaded.a_values());
}

fn any_point() -> impl Strategy<Value = ModelParamsF64> {
    (0.0..3.5f64, 0.0..1.5f64, 1usize..=3).prop_map(|(l, g, d)| ModelParamsF64::new(l, g, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn entanglement_spectrum_stays_physical(p in any_point()) {
        let n = match p.dim() { 1 => 63, 2 => 31, _ => 15 };
        let table = build_correlator_table_with(&p, &KGrid::new(n, true).unwrap(), ZeroModePolicy::HalfFill).unwrap();
        let spec = mode_spectrum(&block_matrices_with_margin(&table, 3, 1).unwrap()).unwrap();
        for &nu in &spec.nu {
            prop_assert!((-1e-9..=0.25 + 1e-9).contains(&nu));
        }
        let s = block_entropy(&spec).entropy_bits;
        prop_assert!(s >= -1e-12 && s <= spec.nu.len() as f64 + 1e-9);
    }

    #[test]
    fn anomalous_sign_does_not_change_entropy(p in any_point()) {
        let n = match p.dim() { 1 => 64, 2 => 32, _ => 16 };
        let mut table = build_correlator_table_with(&p, &KGrid::new(n, true).unwrap(), ZeroModePolicy::HalfFill).unwrap();
        let before = block_entropy(&mode_spectrum(&block_matrices_with_margin(&table, 2, 1).unwrap()).unwrap());
        table.flip_anomalous_sign();
        let after = block_entropy(&mode_spectrum(&block_matrices_with_margin(&table, 2, 1).unwrap()).unwrap());
        prop_assert!((before.entropy_bits - after.entropy_bits).abs() < 1e-9);
    }

    #[test]
    fn gapped_points_have_no_surface(l in 3.01..5.0f64, g in 0.0..2.0f64, d in 2usize..=3) {
        let p = ModelParamsF64::new(l, g, d).unwrap();
        prop_assert_eq!(classify_phase(&p).phase, Phase::III);
        prop_assert!(extract_fermi_surface(&p, 64).is_err());
    }
}
