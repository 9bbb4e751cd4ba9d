use proptest::prelude::*;
use tolpred::curves::*;
use tolpred::fit::{fit_binomial_cells, Family, FitSummary, Link, TwoByTwo};
use tolpred::intervals::*;

fn recruit_gamma() -> tolpred::fit::FitResult {
    FitSummary {
        family: Family::Gamma,
        estimate: 2.61,
        ci: Some((2.13, 3.19)),
        ci_level: 0.95,
        se_log: None,
        k_hat: Some(5.22),
        phi_hat: None,
        n: 20,
        n_events: None,
        exposure_total: None,
    }
    .to_fit()
    .unwrap()
}

fn phase2() -> tolpred::fit::FitResult {
    fit_binomial_cells(TwoByTwo { a: 14.0, b: 46.0, c: 3.0, d: 37.0 }, false).unwrap()
}

fn max_step(t: &CurveTable) -> f64 {
    t.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

#[test]
fn four_recruitment_curves_reproduce_their_intervals() {
    let fit = recruit_gamma();
    let target = PredictionTarget::count(20, 280);
    let conf = MeanConfidence::from_ci(2.61, (2.13, 3.19), 0.95).unwrap();
    let pivots: Vec<Box<dyn PValueFunction>> = vec![
        Box::new(plugci_pivot(&fit, &target, Some(conf)).unwrap()),
        Box::new(link_pivot(&fit, &target, LinkPivotOptions::default()).unwrap()),
        Box::new(FPivot::new(2.61, 20, 280.0, 5.22).unwrap()),
        Box::new(FPivot::new(2.61, 20, 280.0, 1.0).unwrap()),
    ];
    let want = [(566.0, 940.0), (583.0, 914.0)];
    for (i, pf) in pivots.iter().enumerate() {
        let t = build_curve(pf.as_ref(), &GridSpec::default()).unwrap();
        let iv = pf.interval(Level::two_sided(0.95)).unwrap();
        let (l, u) = t.interval(0.05).unwrap();
        let step = max_step(&t);
        assert!((l - iv.lower).abs() <= step && (u - iv.upper).abs() <= step);
        if let Some(w) = want.get(i) {
            assert!((l - w.0).abs() <= 1.0 && (u - w.1).abs() <= 1.0, "{i}: {l} {u}");
        }
    }
}

#[test]
fn curve_invariants() {
    let fit = recruit_gamma();
    let target = PredictionTarget::count(20, 280);
    for method in [Method::LinkPivot, Method::CiPlugPrediction, Method::FPivot, Method::PlugIn] {
        let pf = pvalue_function(&fit, method, &target).unwrap();
        let t = build_curve(pf.as_ref(), &GridSpec::default()).unwrap();
        assert!(t.h.windows(2).all(|w| w[0] <= w[1]), "{method:?}");
        assert!(t.h_minus.windows(2).all(|w| w[0] >= w[1]));
        assert!(t.h.iter().zip(&t.h_minus).all(|(a, b)| (a + b - 1.0).abs() < 1e-15));
        assert!(t.density.iter().all(|&d| d >= 0.0));
        let mass = t.density_mass();
        assert!((0.99..=1.0).contains(&mass), "{method:?} mass {mass}");
        let cmax = t.c.iter().cloned().fold(0.0, f64::max);
        assert!(cmax <= 0.5 && cmax > 0.5 - 0.01, "{method:?} {cmax}");
        // nesting
        let (l1, u1) = t.interval(0.01).unwrap();
        let (l2, u2) = t.interval(0.1).unwrap();
        assert!(l1 < l2 && u2 < u1);
    }
}

#[test]
fn peak_sits_at_the_point_prediction() {
    let fit = recruit_gamma();
    let pf = link_pivot(&fit, &PredictionTarget::count(20, 280), LinkPivotOptions::default()).unwrap();
    let t = build_curve(&pf, &GridSpec::default()).unwrap();
    let i = t.grid.iter().position(|&g| g >= pf.point()).unwrap();
    let nearest = if (t.grid[i] - pf.point()).abs() < (t.grid[i - 1] - pf.point()).abs() { t.grid[i] } else { t.grid[i - 1] };
    assert_eq!(t.peak(), nearest);
}

#[test]
fn symmetric_density_mode_is_the_median() {
    let fit = recruit_gamma().with_link(Link::Identity).unwrap();
    let pf = link_pivot(&fit, &PredictionTarget::count(20, 280), LinkPivotOptions::default()).unwrap();
    let t = build_curve(&pf, &GridSpec::default()).unwrap();
    assert!((t.mode() - pf.value_at(0.5).unwrap()).abs() <= max_step(&t));
}

#[test]
fn grid_refinement_moves_crossings_less_than_a_step() {
    let fit = recruit_gamma();
    let pf = plugci_pivot(&fit, &PredictionTarget::count(20, 280), None).unwrap();
    let coarse = build_curve(&pf, &GridSpec::Range { lo: 400.0, hi: 1300.0, points: 181, log: false }).unwrap();
    let fine = build_curve(&pf, &GridSpec::Range { lo: 400.0, hi: 1300.0, points: 361, log: false }).unwrap();
    let step = max_step(&coarse);
    for a in [0.01, 0.05, 0.2, 0.5] {
        let (l0, u0) = coarse.interval(a).unwrap();
        let (l1, u1) = fine.interval(a).unwrap();
        assert!((l0 - l1).abs() < step && (u0 - u1).abs() < step);
    }
}

#[test]
fn phase3_success_confidence() {
    let fit = phase2();
    let target = PredictionTarget::count(100, 600);
    let p = pvalue_upper(&fit, 1.71, Method::OrPrediction, &target).unwrap();
    assert!((p - 0.14).abs() < 0.01, "{p}");
    let s = success_confidence(&fit, 100, 600, 1.71, StatisticScale::OddsRatio).unwrap();
    assert!((s - 0.86).abs() < 0.01, "{s}");
    let s = success_confidence(&fit, 100, 600, fit.mu_hat.exp(), StatisticScale::OddsRatio).unwrap();
    assert!((s - 0.5).abs() < 1e-12);
    let z = success_confidence(&fit, 100, 600, 1.96, StatisticScale::ZStatistic).unwrap();
    assert!((z - 0.86).abs() < 0.015, "{z}");
    assert!(success_confidence(&fit, 100, 600, 0.0, StatisticScale::OddsRatio).is_err());
}

#[test]
fn pvalue_at_point_is_half_and_log_domain_is_checked() {
    let fit = recruit_gamma();
    let target = PredictionTarget::count(20, 280);
    let p = pvalue_upper(&fit, 280.0 * 2.61, Method::LinkPivot, &target).unwrap();
    assert!((p - 0.5).abs() < 1e-12);
    assert!(pvalue_upper(&fit, 0.0, Method::LinkPivot, &target).is_err());
}

proptest! {
    #[test]
    fn pvalue_functions_are_cdfs(k in 0.5f64..20.0, mu in 0.2f64..10.0, n in 3usize..60, m in 1u64..500, se in 0.01f64..0.6) {
        let fit = FitSummary {
            family: Family::Gamma, estimate: mu, ci: None, ci_level: 0.95, se_log: Some(se),
            k_hat: Some(k), phi_hat: None, n, n_events: None, exposure_total: None,
        }.to_fit().unwrap();
        let target = PredictionTarget::count(n, m);
        for method in [Method::LinkPivot, Method::CiPlugPrediction, Method::FPivot] {
            let pf = pvalue_function(&fit, method, &target).unwrap();
            let lo = pf.value_at(1e-4).unwrap();
            let hi = pf.value_at(1.0 - 1e-4).unwrap();
            let mut prev = 0.0;
            for i in 0..40 {
                let c = lo * (hi / lo).powf(i as f64 / 39.0);
                let h = pf.upper_pvalue(c).unwrap();
                prop_assert!(h >= prev - 1e-12);
                prev = h;
            }
            prop_assert!(pf.upper_pvalue(lo * 1e-3).unwrap() < 1e-4);
            prop_assert!(pf.upper_pvalue(hi * 1e3).unwrap() > 1.0 - 1e-4);
        }
    }
}
