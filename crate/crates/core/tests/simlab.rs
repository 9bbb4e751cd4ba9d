use tolpred::intervals::Method;
use tolpred::simlab::{
    emit_table, run_gamma_coverage, run_poisson_gamma, run_scenario, Cell, DataProcess, ScenarioSpec, TableFormat,
};

fn small(k: f64, runs: usize) -> ScenarioSpec {
    let mut s = ScenarioSpec::gamma_table(k, 2.5, runs, 7);
    s.cells = vec![Cell { n: 20, big_n: 300 }];
    s
}

#[test]
fn reports_are_deterministic_for_a_seed() {
    let s = small(4.0, 400);
    let a = serde_json::to_string(&run_gamma_coverage(&s).unwrap()).unwrap();
    let b = serde_json::to_string(&run_gamma_coverage(&s).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn thread_count_does_not_change_results() {
    let s = small(4.0, 300);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = serial.install(|| run_gamma_coverage(&s).unwrap());
    let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let b = wide.install(|| run_gamma_coverage(&s).unwrap());
    assert_eq!(a, b);
}

#[test]
fn every_method_level_cell_gets_a_row() {
    let mut s = ScenarioSpec::gamma_table(4.0, 2.5, 50, 3);
    s.cells.truncate(2);
    let r = run_scenario(&s).unwrap();
    assert_eq!(r.rows.len(), 7 * 5 * 2);
    assert!(r.rows.iter().all(|row| row.runs + row.failures == 50));
    let csv = emit_table(&r, TableFormat::Csv);
    assert_eq!(csv.lines().count(), 1 + 70);
    assert!(csv.lines().nth(1).unwrap().starts_with("Eq1,0.95,10,11"));
    let text = emit_table(&r, TableFormat::Text);
    assert_eq!(text.lines().count(), 1 + 35);
}

#[test]
fn f_pivot_is_exact_for_gamma_data_with_known_shape_scale() {
    // With k̂ close to k the F pivot coverage should sit near nominal.
    let mut s = small(4.0, 4000);
    s.methods = vec![Method::FPivot, Method::LinkPivot];
    s.cells = vec![Cell { n: 100, big_n: 300 }];
    let r = run_gamma_coverage(&s).unwrap();
    for l in [0.95, 0.8, 0.5] {
        let row = r.get(Method::FPivot, l, 100, 300).unwrap();
        assert!((row.coverage - l).abs() < 4.0 * (l * (1.0 - l) / 4000.0f64).sqrt() + 0.01, "{row:?}");
    }
}

#[test]
fn site_process_with_large_alpha_behaves_like_exponential_data() {
    // α → ∞ with αβ fixed makes every site rate equal, so the merged stream
    // is Poisson and the exponential F pivot is exact.
    let s = ScenarioSpec {
        name: "sites".into(),
        data_process: DataProcess::PoissonGammaSites { alpha: 1e6, beta: 1e-6, n_sites: 20, fixed_rates: false },
        methods: vec![Method::FPivot, Method::PlugIn],
        levels: vec![0.9, 0.5],
        cells: vec![Cell { n: 30, big_n: 90 }],
        ..small(1.0, 4000)
    };
    let r = run_poisson_gamma(&s).unwrap();
    for l in [0.9, 0.5] {
        let f = r.get(Method::FPivot, l, 30, 90).unwrap();
        assert!(f.pass, "{f:?}");
        let p = r.get(Method::PlugIn, l, 30, 90).unwrap();
        assert!(p.coverage < f.coverage);
    }
}

#[test]
fn merged_sites_are_poisson_given_the_rates() {
    // Given the rates the merged stream is Poisson with rate Σλ, so the
    // exponential F pivot stays exact however spread out the rates are.
    let s = ScenarioSpec {
        data_process: DataProcess::PoissonGammaSites { alpha: 0.5, beta: 0.2, n_sites: 5, fixed_rates: false },
        methods: vec![Method::FPivot],
        levels: vec![0.9],
        cells: vec![Cell { n: 30, big_n: 90 }],
        ..small(1.0, 2000)
    };
    let r = run_poisson_gamma(&s).unwrap();
    assert!(r.rows[0].pass, "{:?}", r.rows[0]);
}

#[test]
fn mc_se_at_nominal_95_is_reported() {
    let mut s = small(4.0, 10_000);
    s.methods = vec![Method::NoncentralTolerance];
    s.levels = vec![0.95];
    let r = run_gamma_coverage(&s).unwrap();
    let row = &r.rows[0];
    assert!((row.band_hi - row.band_lo - 6.0 * 0.00218).abs() < 2e-4);
    assert!(row.mc_se > 0.0 && row.mc_se < 0.01);
}
