//! Structural properties of the assembled loops: spectra, stability limits,
//! minimum-phase boundaries and two-path pole consistency.

mod common;

use common::Tuning;
use num_complex::Complex64;
use rfc_core::analysis::{
    classify, critical_gain, cross_check_poles, default_gain_grid, dominant_damping_ratio,
    extract_tfs, is_hurwitz, log_grid, root_locus, Compensator,
};
use rfc_core::numkit::poly_roots;

#[test]
fn open_loop_spectrum_is_union_of_blocks() {
    for which in ['a', 'b', 'c', 'd'] {
        let tuning = Tuning::fig2(which);
        let sys = tuning.open_loop();
        let eig = sys.eigenvalues().unwrap();
        let im = (tuning.k_env / tuning.j_exact
            - (tuning.d_env / tuning.j_exact / 2.0).powi(2))
        .sqrt();
        let re = -tuning.d_env / tuning.j_exact / 2.0;
        let expected = vec![
            Complex64::new(re, im),
            Complex64::new(re, -im),
            Complex64::new(-tuning.g_dob, 0.0),
            Complex64::new(-tuning.g_rtob, 0.0),
        ];
        let d = rfc_core::analysis::bottleneck_distance(&eig, &expected);
        assert!(d < 1e-6 * 1000.0, "config {which}: union drift {d:.3e}");
    }
}

#[test]
fn characteristic_polynomial_cross_check_at_gain_two() {
    // Roots of the reassembled characteristic polynomial of the closed-loop
    // A matrix match its eigenvalues (companion route vs QR route).
    let tuning = Tuning::fig2('a');
    let sys = tuning.outer_closed(2.0);
    let eig = sys.eigenvalues().unwrap();
    assert_eq!(eig.len(), 4);
    let charpoly = rfc_core::numkit::Poly::from_roots(&eig, 1.0).unwrap();
    let back = poly_roots(&charpoly).unwrap();
    let d = rfc_core::analysis::bottleneck_distance(&eig, &back);
    assert!(d < 1e-6 * 1000.0, "round-trip drift {d:.3e}");
}

#[test]
fn inner_loop_carries_the_integrator_and_no_unstable_modes() {
    // The inner-closed loop holds the integrator of L(s) as a marginal mode
    // at the origin; every other mode is strictly stable.
    for which in ['a', 'b', 'c', 'd'] {
        let sys = Tuning::fig2(which).inner_closed();
        let eig = sys.eigenvalues().unwrap();
        let at_origin = eig.iter().filter(|l| l.norm() < 1e-6).count();
        assert_eq!(at_origin, 1, "config {which}: integrator mode count");
        let strictly_stable = eig.iter().filter(|l| l.re < -1.0).count();
        assert_eq!(strictly_stable, eig.len() - 1, "config {which}: stable rest");
    }
}

#[test]
fn integrator_present_in_every_config() {
    for which in ['a', 'b', 'c', 'd'] {
        let tfs = extract_tfs(&Tuning::fig2(which).inner_closed()).unwrap();
        let poles = tfs.l.tf.poles().unwrap();
        let origin = poles.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
        assert!(
            origin < 1e-6,
            "config {which}: nearest pole to origin at {origin:.3e}"
        );
        // Denominator constant coefficient vanishes relative to the rest.
        let den = tfs.l.tf.den();
        assert!(den.at_zero().abs() < 1e-6 * den.max_abs());
    }
}

#[test]
fn relative_degree_dichotomy() {
    // Two when the identified inertia matches exactly, one otherwise.
    for (which, expect) in [('a', 2usize), ('b', 2), ('c', 1), ('d', 1)] {
        let tuning = Tuning::fig2(which);
        let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
        let report = classify(&tfs.l.tf, tuning.g_dob, tuning.g_rtob).unwrap();
        assert_eq!(
            report.relative_degree, expect,
            "config {which}: relative degree"
        );
    }
}

#[test]
fn rhp_zero_boundary_tracks_identified_inertia() {
    // rhp_zero holds exactly when J_mi > J_m; the ratio 1.0 is skipped
    // because the numerator degree drops there.
    let mut crossings = Vec::new();
    for ratio in [0.25, 0.5, 0.75, 1.25, 1.5, 2.0] {
        let tuning = Tuning::fig2('b').with_identified_ratio(ratio);
        let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
        let report = classify(&tfs.l.tf, tuning.g_dob, tuning.g_rtob).unwrap();
        assert_eq!(
            report.rhp_zero,
            ratio > 1.0,
            "ratio {ratio}: rhp_zero = {}",
            report.rhp_zero
        );
        let max_re = report
            .zeros
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        crossings.push((ratio, max_re));
    }
    // The largest zero real part changes sign between 0.75 and 1.25.
    let at_075 = crossings.iter().find(|(r, _)| *r == 0.75).unwrap().1;
    let at_125 = crossings.iter().find(|(r, _)| *r == 1.25).unwrap().1;
    assert!(at_075 < 0.0 && at_125 > 0.0, "crossing: {at_075} .. {at_125}");
}

#[test]
fn lead_lag_classification_follows_bandwidths() {
    let tuning = Tuning::fig2('d');
    let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
    let report = classify(&tfs.l.tf, tuning.g_dob, tuning.g_rtob).unwrap();
    assert!(!report.rhp_zero);
    assert_eq!(report.compensator, Compensator::Lead);
    assert!(report.has_integrator);

    let neutral = Tuning::fig2('a');
    let tfs = extract_tfs(&neutral.inner_closed()).unwrap();
    let report = classify(&tfs.l.tf, neutral.g_dob, neutral.g_rtob).unwrap();
    assert_eq!(report.compensator, Compensator::Neutral);
}

#[test]
fn two_path_pole_consistency_over_gains() {
    for which in ['a', 'b', 'c', 'd'] {
        let tuning = Tuning::fig2(which);
        let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
        for cf in [0.5, 2.0, 10.0] {
            let sys = tuning.outer_closed(cf);
            let mismatch =
                cross_check_poles(&sys, &tfs.l.tf, &tfs.l.hidden_modes, cf).unwrap();
            assert!(
                mismatch < 1e-6 * 1500.0,
                "config {which} C_f {cf}: mismatch {mismatch:.3e}"
            );
        }
    }
}

#[test]
fn zero_gain_poles_match_inner_loop() {
    let tuning = Tuning::fig2('b');
    let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
    let inner_eig = tuning.inner_closed().eigenvalues().unwrap();
    let mut poles = tfs.l.tf.poles().unwrap();
    poles.extend_from_slice(&tfs.l.hidden_modes);
    let d = rfc_core::analysis::bottleneck_distance(&poles, &inner_eig);
    assert!(d < 1e-6 * 1000.0, "open-loop pole drift {d:.3e}");
}

#[test]
fn dc_gain_is_unity_wherever_stable() {
    for which in ['a', 'b', 'c', 'd'] {
        for cf in [0.5, 2.0, 10.0] {
            let sys = Tuning::fig2(which).outer_closed(cf);
            let eig = sys.eigenvalues().unwrap();
            if !is_hurwitz(&eig) {
                continue;
            }
            let dc = sys.static_estimate_gain().unwrap() * cf;
            assert!(
                (dc - 1.0).abs() < 1e-6,
                "config {which} C_f {cf}: reference-to-estimate DC gain {dc}"
            );
        }
    }
}

#[test]
fn config_c_has_a_finite_gain_ceiling() {
    let tuning = Tuning::fig2('c');
    let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
    let c_star = critical_gain(&tfs.l.tf, &tfs.l.hidden_modes, 1e-2, 1e2)
        .unwrap()
        .expect("config (c) must lose stability at a finite gain");
    // Just below is stable, just above is not (checked through the A matrix
    // route, independent of the bisection's polynomial route).
    let below = tuning.outer_closed(c_star * 0.98).eigenvalues().unwrap();
    let above = tuning.outer_closed(c_star * 1.02).eigenvalues().unwrap();
    assert!(is_hurwitz(&below), "stable below the critical gain");
    assert!(!is_hurwitz(&above), "unstable above the critical gain");
}

#[test]
fn config_d_is_stable_over_the_default_grid() {
    let tuning = Tuning::fig2('d');
    let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
    assert!(critical_gain(&tfs.l.tf, &tfs.l.hidden_modes, 1e-2, 1e2)
        .unwrap()
        .is_none());
    for &cf in default_gain_grid().iter() {
        let eig = tuning.outer_closed(cf).eigenvalues().unwrap();
        assert!(is_hurwitz(&eig), "config (d) unstable at C_f = {cf}");
    }
}

#[test]
fn config_a_damping_ratio_eventually_decreases() {
    // More oscillatory as the force gain grows: the dominant pair's damping
    // ratio decreases monotonically beyond some gain.
    let tuning = Tuning::fig2('a');
    let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
    let grid = log_grid(0.1, 50.0, 40);
    let zetas: Vec<f64> = grid
        .iter()
        .map(|&cf| {
            let sys = tuning.outer_closed(cf);
            dominant_damping_ratio(&sys.eigenvalues().unwrap())
                .expect("complex pair present")
        })
        .collect();
    let _ = &tfs;
    // Find the last index where zeta increases; beyond it the tail must be
    // strictly decreasing and actually shrink.
    let mut last_rise = 0;
    for i in 0..zetas.len() - 1 {
        if zetas[i + 1] > zetas[i] {
            last_rise = i + 1;
        }
    }
    assert!(
        last_rise < zetas.len() - 2,
        "no monotone decreasing tail found"
    );
    assert!(
        zetas[zetas.len() - 1] < 0.8 * zetas[last_rise],
        "tail does not shrink: {} -> {}",
        zetas[last_rise],
        zetas[zetas.len() - 1]
    );
}

#[test]
fn locus_branches_are_continuous_under_refinement() {
    // Nearest-neighbor pairing: the largest per-step jump shrinks when the
    // grid is refined.
    let tuning = Tuning::fig2('c');
    let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
    let max_jump = |points: usize| -> f64 {
        let locus = root_locus(&tfs.l.tf, &log_grid(1e-2, 1e2, points)).unwrap();
        let mut worst = 0.0f64;
        for branch in &locus.branches {
            for w in branch.windows(2) {
                worst = worst.max((w[1] - w[0]).norm());
            }
        }
        worst
    };
    let coarse = max_jump(30);
    let fine = max_jump(240);
    assert!(
        fine < coarse / 2.0,
        "refinement did not shrink jumps: {coarse:.3} -> {fine:.3}"
    );
}

#[test]
fn locus_start_matches_open_loop_poles() {
    // At a vanishing first gain the branch origins coincide with the poles of
    // L within 1e-4 of the spectral scale.
    let tuning = Tuning::fig2('b');
    let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
    let grid = log_grid(1e-6, 1.0, 10);
    let locus = root_locus(&tfs.l.tf, &grid).unwrap();
    let open_poles = tfs.l.tf.poles().unwrap();
    let start = locus.poles_at(0);
    let d = rfc_core::analysis::bottleneck_distance(&start, &open_poles);
    assert!(d < 1e-4 * 1000.0, "locus start drift {d:.3e}");
}

#[test]
fn eigenvalue_branches_are_continuous_in_gain() {
    // Each eigenvalue branch of A_cl(C_f) is continuous: the largest
    // nearest-neighbor jump shrinks when the gain grid is refined.
    let tuning = Tuning::fig2('d');
    let worst_jump = |points: usize| -> f64 {
        let grid = log_grid(1e-2, 1e2, points);
        let mut prev: Option<Vec<Complex64>> = None;
        let mut worst = 0.0f64;
        for &cf in &grid {
            let eig = tuning.outer_closed(cf).eigenvalues().unwrap();
            if let Some(p) = prev {
                worst = worst.max(rfc_core::analysis::bottleneck_distance(&eig, &p));
            }
            prev = Some(eig);
        }
        worst
    };
    let coarse = worst_jump(60);
    let fine = worst_jump(240);
    assert!(
        fine < coarse / 2.0,
        "refinement did not shrink eigenvalue jumps: {coarse:.3} -> {fine:.3}"
    );
}

#[test]
fn viscous_variant_passes_the_same_gates() {
    // Same pipeline with b > 0: integrator, unity DC gain, two-path poles.
    let mut tuning = Tuning::fig2('b');
    tuning.viscous = 0.5;
    let tfs = extract_tfs(&tuning.inner_closed()).unwrap();
    let poles = tfs.l.tf.poles().unwrap();
    assert!(poles.iter().any(|p| p.norm() < 1e-6), "integrator survives");
    for cf in [0.5, 2.0, 10.0] {
        let sys = tuning.outer_closed(cf);
        let mismatch = cross_check_poles(&sys, &tfs.l.tf, &tfs.l.hidden_modes, cf).unwrap();
        assert!(mismatch < 1e-6 * 1500.0, "viscous two-path mismatch");
        if is_hurwitz(&sys.eigenvalues().unwrap()) {
            let dc = sys.static_estimate_gain().unwrap() * cf;
            assert!((dc - 1.0).abs() < 1e-6, "viscous DC gain {dc}");
        }
    }
}
