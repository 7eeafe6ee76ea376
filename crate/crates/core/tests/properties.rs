mod common;

use flaglp::carleson::{cp_norm, generate_candidates, sp_norm};
use flaglp::filters::{build_filter_bank, FilterProfile};
use flaglp::grid::{make_grid, SampledFunction};
use flaglp::maximal::{hl_maximal, strong_maximal};
use flaglp::report::to_json;
use flaglp::transform::analyze;
use flaglp::verify::plancherel_defect;
use num_complex::Complex64;
use proptest::prelude::*;

fn values(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(
        (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| Complex64::new(a, b)),
        len,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn block_roundtrip(level in 3u32..6, seed in any::<u64>()) {
        let f = common::random_function(make_grid(1, 1, level).unwrap(), seed);
        let g = SampledFunction::from_block_bytes(&f.to_block_bytes()).unwrap();
        prop_assert_eq!(f.values(), g.values());
        prop_assert_eq!(f.grid(), g.grid());
    }

    #[test]
    fn analysis_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let grid = make_grid(1, 1, 4).unwrap();
        let bank = build_filter_bank(grid, FilterProfile::default(), 1).unwrap();
        let (f, g) = (common::random_function(grid, s1), common::random_function(grid, s2));
        let (a, b) = (Complex64::new(a, 0.0), Complex64::new(0.0, b));
        let lhs = analyze(&f.scale(a).add(&g.scale(b)).unwrap(), &bank, 1).unwrap();
        let (cf, cg) = (analyze(&f, &bank, 1).unwrap(), analyze(&g, &bank, 1).unwrap());
        for ((l, x), y) in lhs.slots().iter().zip(cf.slots()).zip(cg.slots()) {
            for ((u, v), w) in l.values.iter().zip(&x.values).zip(&y.values) {
                prop_assert!((u - (a * v + b * w)).norm() <= 1e-10 * (1.0 + u.norm()));
            }
        }
    }

    #[test]
    fn maximal_dominates(v in values(256)) {
        let f = SampledFunction::new(make_grid(1, 1, 4).unwrap(), v).unwrap();
        let (ms, mh) = (strong_maximal(&f).abs(), hl_maximal(&f).abs());
        for ((s, h), x) in ms.iter().zip(&mh).zip(f.abs()) {
            prop_assert!(*s >= x - 1e-12);
            prop_assert!(*s >= h - 1e-12);
        }
    }

    #[test]
    fn sp_norm_is_homogeneous(seed in any::<u64>(), c in 0.01..100.0f64, p in 0.3..3.0f64) {
        let grid = make_grid(1, 1, 4).unwrap();
        let bank = build_filter_bank(grid, FilterProfile::default(), 1).unwrap();
        let s = analyze(&common::random_function(grid, seed), &bank, 1).unwrap();
        let base = sp_norm(&s, p).unwrap();
        let scaled = sp_norm(&s.scale(Complex64::new(c, 0.0)), p).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-10 * c * base);
    }

    #[test]
    fn candidates_respect_budget(seed in any::<u64>(), budget in 1usize..40) {
        let grid = make_grid(1, 1, 4).unwrap();
        let bank = build_filter_bank(grid, FilterProfile::default(), 1).unwrap();
        let t = analyze(&common::random_function(grid, seed), &bank, 1).unwrap();
        let c = generate_candidates(&t, budget).unwrap();
        prop_assert!(!c.is_empty() && c.len() <= budget);
        for (i, a) in c.iter().enumerate() {
            prop_assert!(c[..i].iter().all(|b| b.mask() != a.mask()));
        }
    }

    #[test]
    fn json_floats_roundtrip(x in any::<f64>()) {
        let text = to_json(&x).unwrap();
        let back: Option<f64> = serde_json::from_str(&text).unwrap();
        if x.is_finite() {
            prop_assert_eq!(text.trim_end().parse::<f64>().unwrap().to_bits(), x.to_bits());
            prop_assert_eq!(back, Some(x));
        } else {
            prop_assert_eq!(back, None);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn family_value_below_exhaustive(seed in any::<u64>(), p in prop::sample::select(vec![0.5, 1.0])) {
        let grid = make_grid(1, 1, 3).unwrap();
        let bank = build_filter_bank(grid, FilterProfile::default(), 1).unwrap();
        let t = analyze(&common::random_function(grid, seed), &bank, 1).unwrap();
        let family = cp_norm(&t, p, &generate_candidates(&t, 16).unwrap()).unwrap();
        prop_assert!(family <= common::exhaustive_cp(&t, p) * (1.0 + 1e-12));
    }

    #[test]
    fn plancherel_at_small_levels(level in 4u32..7, seed in any::<u64>()) {
        let grid = make_grid(1, 1, level).unwrap();
        let bank = build_filter_bank(grid, FilterProfile::default(), 2).unwrap();
        prop_assert!(plancherel_defect(&common::random_function(grid, seed), &bank).unwrap() <= 1e-9);
    }
}
