use formation_core::field::{l2_norm, FieldKind};
use formation_core::output::series_header;
use formation_core::scenario::{EstimateMode, Scenario};
use formation_core::sim::run;
use formation_core::steady::discrete_steady_field;
use formation_core::transform::shift_scale;

fn moderate() -> Scenario {
    Scenario::preset("moderate").unwrap().scenario
}

#[test]
fn known_delay_regulates_and_keeps_target_boundary() {
    let mut sc = moderate();
    sc.estimate_mode = EstimateMode::Fixed(sc.true_delay);
    sc.t_final = 5.0;
    sc.snapshot_times = (0..=12).map(|k| 2.0 + 0.25 * k as f64).collect();
    let rec = run(&sc, |_| {}).unwrap();
    assert!(rec.completed());
    for r in &rec.series {
        assert!(r.h_boundary <= 1e-6 * r.state_scale, "t = {}: {} vs {}", r.t, r.h_boundary, r.state_scale);
    }
    let ubar = discrete_steady_field(&sc.desired.u, &sc.grid, FieldKind::Complex).unwrap();
    let zbar = discrete_steady_field(&sc.desired.z, &sc.grid, FieldKind::Real).unwrap();
    let norms: Vec<f64> = rec
        .snapshots
        .iter()
        .map(|s| {
            l2_norm(&shift_scale(&s.u, &ubar, sc.desired.u.coeffs.beta)) + l2_norm(&shift_scale(&s.z, &zbar, sc.desired.z.coeffs.beta))
        })
        .collect();
    for w in norms.windows(2) {
        assert!(w[1] < w[0], "{norms:?}");
    }
    let first = rec.series.first().unwrap();
    let last = rec.series.last().unwrap();
    assert!(last.err_u < 1e-2 * first.err_u, "{} -> {}", first.err_u, last.err_u);
}

#[test]
fn runs_are_deterministic() {
    let mut sc = moderate();
    sc.t_final = 0.3;
    let a = run(&sc, |_| {}).unwrap();
    let b = run(&sc, |_| {}).unwrap();
    assert_eq!(a.series, b.series);
    assert_eq!(a.final_dhat, b.final_dhat);
    assert_eq!(a.snapshots.len(), b.snapshots.len());
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert_eq!(x.u, y.u);
        assert_eq!(x.z, y.z);
    }
}

#[test]
fn logged_estimate_stays_in_bounds() {
    let mut sc = moderate();
    sc.t_final = 0.5;
    let rec = run(&sc, |_| {}).unwrap();
    for r in &rec.series {
        assert!(r.dhat >= sc.delay_lower && r.dhat <= sc.delay_upper);
    }
}

#[test]
fn paper_preset_logs_the_ring_columns() {
    let sc = Scenario::preset("paper").unwrap().scenario;
    let h = series_header(&sc.ring_indices);
    for i in [5, 15, 30, 51] {
        assert!(h.contains(&format!("err_ring_{i}")), "{h}");
    }
}
