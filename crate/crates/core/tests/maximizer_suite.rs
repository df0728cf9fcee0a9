use std::f64::consts::PI;

use slopt::maximizer::{
    assemble_maximizer, dirac_transfer_probe, locate_r_star, perturbation_probe, shoot_profile, structure_gap,
    uniqueness_probe, verify_profile, MaximizerProfile, MaximizerSolver, ProfileParams, Structure, StructureChoice,
    VerifyTolerances,
};
use slopt::newton::NewtonOptions;
use slopt::sturm_liouville::eigen_sum;
use slopt::{Error, RadonMeasure, UnitGrid};

fn grid() -> UnitGrid {
    UnitGrid::default()
}

fn maximizer(r: f64) -> MaximizerProfile {
    assemble_maximizer(r, StructureChoice::Auto, None, grid()).unwrap()
}

// Reference parameters from an independent prototype (adaptive DOP853 at rtol 1e-12 for
// the pendulum, closed-form free arcs, MINPACK hybrid solver).
const TWO_BUMP_R5: [f64; 6] = [2.64462606, 5.84493146, 15.70889432, 48.26683702, 0.2502054, 0.33584593];
const ONE_BUMP_R20: [f64; 5] = [3.04337573, 7.27779266, 34.549797, 68.195269, 0.200746];

#[test]
fn two_bump_parameters_at_r5_match_reference() {
    let p = maximizer(5.0);
    assert_eq!(p.structure, Structure::TwoBumpSymmetric);
    let got = p.params.to_vec(p.structure);
    for (g, want) in got.iter().zip(TWO_BUMP_R5) {
        assert!((g - want).abs() < 2e-6 * (1.0 + want.abs()), "{got:?}");
    }
    assert!((p.objective - 63.97573).abs() < 1e-4);
}

#[test]
fn one_bump_parameters_at_r20_match_reference() {
    let p = maximizer(20.0);
    assert_eq!(p.structure, Structure::OneBump);
    let got = p.params.to_vec(p.structure);
    for (g, want) in got.iter().zip(ONE_BUMP_R20) {
        assert!((g - want).abs() < 2e-6 * (1.0 + want.abs()), "{got:?}");
    }
    assert!((p.objective - 102.745066).abs() < 1e-4);
}

#[test]
fn shooting_residual_vanishes_and_detects_shifted_entry() {
    let p = maximizer(5.0);
    let res = shoot_profile(&p.params, p.structure, 5.0, grid()).unwrap();
    assert_eq!(res.len(), 6);
    assert!(res.iter().all(|v| v.abs() < 1e-9), "{res:?}");
    let shifted = ProfileParams {
        alpha: p.params.alpha + 1e-3,
        ..p.params
    };
    let res = shoot_profile(&shifted, p.structure, 5.0, grid()).unwrap();
    assert!(res[0].abs() > 1e-6, "{res:?}");
}

#[test]
fn z_changes_sign_once() {
    let two = maximizer(5.0);
    assert_eq!(two.z.sign_changes(), 1);
    assert!(two.z.values()[grid().cells() / 2].abs() < 1e-12);
    let one = maximizer(20.0);
    assert_eq!(one.z.sign_changes(), 1);
    assert!(one.is_active(grid().cells() / 2));
    assert_eq!(one.y.sign_changes(), 0);
}

#[test]
fn profile_invariants() {
    for r in [5.0, 20.0] {
        let p = maximizer(r);
        let g = grid();
        assert!(p.ell > 0.0);
        let (c, ell) = (p.c_check, p.ell);
        for k in 0..g.len() {
            let t = g.node(k);
            let q = p.qcheck.values()[k];
            let u = p.u.values()[k];
            assert!(q <= 0.0);
            assert!(u <= 1.0 + 1e-12);
            if p.is_active(k) {
                let th = p.theta.values()[k];
                assert!(th.abs() < PI);
                assert!(p.y.values()[k] > 0.0);
                assert!((u - 1.0).abs() < 1e-12);
                assert!(q >= c - ell - 1e-12 && q <= c + ell + 1e-12);
            } else {
                assert_eq!(q, 0.0);
                let far = p.intervals.iter().all(|&(s, e)| (t - s).abs() > 0.01 && (t - e).abs() > 0.01);
                if far {
                    assert!(u < 1.0, "u = {u} at t = {t}");
                }
            }
            assert!((q - p.qcheck.values()[g.cells() - k]).abs() < 1e-12);
        }
        assert!(!p.is_active(0) && !p.is_active(g.cells()));
    }
}

#[test]
fn pairing_with_u_equals_minus_r() {
    for r in [5.0, 20.0] {
        let p = maximizer(r);
        let pairing = RadonMeasure::from_density(p.potential.clone()).pair_against(&p.u);
        assert!((pairing + r).abs() < 1e-6, "r = {r}: {pairing}");
    }
}

#[test]
fn angle_velocity_matches_wronskian() {
    // theta' = 2 (y z' - z y') on the bump, both sides by centred differences.
    let p = maximizer(5.0);
    let g = grid();
    let h = g.step();
    let (y, z, th) = (p.y.values(), p.z.values(), p.theta.values());
    let mut worst = 0.0_f64;
    for k in 1..g.cells() {
        if p.is_active(k - 1) && p.is_active(k) && p.is_active(k + 1) {
            let dth = (th[k + 1] - th[k - 1]) / (2.0 * h);
            let dy = (y[k + 1] - y[k - 1]) / (2.0 * h);
            let dz = (z[k + 1] - z[k - 1]) / (2.0 * h);
            worst = worst.max((dth - 2.0 * (y[k] * dz - z[k] * dy)).abs());
        }
    }
    assert!(worst < 1e-4, "{worst:e}");
}

#[test]
fn verification_passes_for_converged_profiles() {
    for r in [5.0, 20.0] {
        let p = maximizer(r);
        let rep = verify_profile(&p, &VerifyTolerances::default()).unwrap();
        assert!(rep.passed, "r = {r}: {:?}", rep.failures());
        assert_eq!(rep.checks.len(), 9);
        assert!(rep.lambda2 - rep.lambda1 > 0.0);
    }
}

#[test]
fn corrupted_constant_fails_verification() {
    let p = maximizer(5.0).with_perturbed_c_check(1e-3).unwrap();
    let rep = verify_profile(&p, &VerifyTolerances::default()).unwrap();
    let failed = rep.failures();
    for name in ["bump_identity", "mde_residual", "mass"] {
        assert!(failed.contains(&name), "{failed:?}");
    }
    assert!(!rep.passed);
}

#[test]
fn objective_beats_constant_potential() {
    let mut solver = MaximizerSolver::new(grid(), NewtonOptions::default());
    for r in [0.5, 5.0, 12.0, 20.0, 40.0] {
        let p = solver.assemble(r, StructureChoice::Auto, None).unwrap();
        assert!(p.objective > 5.0 * PI * PI + 2.0 * r, "r = {r}");
    }
}

#[test]
fn one_bump_below_transition_is_inadmissible() {
    let err = assemble_maximizer(5.0, StructureChoice::One, None, grid()).unwrap_err();
    assert!(matches!(err, Error::Inadmissible(_)), "{err}");
}

#[test]
fn invalid_inputs_are_rejected() {
    let g = grid();
    assert!(matches!(
        assemble_maximizer(0.0, StructureChoice::Auto, None, g),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        assemble_maximizer(150.0, StructureChoice::Auto, None, g),
        Err(Error::InvalidInput(_))
    ));
    let bad = ProfileParams {
        a: 2.0,
        b: 5.0,
        xi: 15.0,
        eta: 48.0,
        alpha: 0.4,
        beta: 0.3,
    };
    assert!(matches!(
        shoot_profile(&bad, Structure::TwoBumpSymmetric, 5.0, g),
        Err(Error::InvalidInput(_))
    ));
    // Past the first zero of y the entry angle leaves (-pi, pi).
    let late = ProfileParams {
        xi: 200.0,
        alpha: 0.3,
        beta: 0.4,
        ..bad
    };
    assert!(matches!(
        shoot_profile(&late, Structure::TwoBumpSymmetric, 5.0, g),
        Err(Error::PendulumRange { .. })
    ));
}

#[test]
fn newton_from_perturbed_guesses_finds_one_solution() {
    let solver = MaximizerSolver::new(grid(), NewtonOptions::default());
    for r in [5.0, 20.0] {
        let p = maximizer(r);
        let probe = uniqueness_probe(&solver, &p, 6, 1e-2, 11);
        assert!(probe.solutions.len() >= 5, "r = {r}: {} failures", probe.failures);
        assert!(probe.is_unique(1e-6), "spread {:e}", probe.spread);
    }
}

#[test]
fn moving_mass_into_an_atom_lowers_the_sum() {
    let p = maximizer(5.0);
    let probe = dirac_transfer_probe(&p, 0.1, 6).unwrap();
    assert_eq!(probe.positions.len(), 12);
    assert!(probe.all_decrease(), "{:?} vs {}", probe.sums, probe.base);
}

#[test]
fn random_norm_preserving_perturbations_do_not_help() {
    let p = maximizer(5.0);
    let probe = perturbation_probe(&p, 1e-2, 20, 2024).unwrap();
    assert_eq!(probe.increases.len(), 20);
    assert!(probe.max_increase() <= 1e-5, "{:e}", probe.max_increase());
    let es = eigen_sum(&p.potential, grid()).unwrap();
    assert!(((es - p.objective) / p.objective).abs() < 1e-4);
}

#[test]
fn structure_gap_changes_sign() {
    let mut solver = MaximizerSolver::new(grid(), NewtonOptions::default());
    assert!(structure_gap(&mut solver, 5.0).unwrap() > 0.0);
    assert!(structure_gap(&mut solver, 20.0).unwrap() < 0.0);
}

#[test]
fn transition_is_stable_under_grid_refinement() {
    let at = |n: usize| {
        let mut solver = MaximizerSolver::new(UnitGrid::new(n).unwrap(), NewtonOptions::default());
        locate_r_star(&mut solver, 10.0, 20.0, 1e-3).unwrap()
    };
    let (coarse, fine) = (at(4096), at(8192));
    assert!((coarse - fine).abs() < 0.02, "{coarse} vs {fine}");
}

#[test]
fn rstar_validates_its_bracket() {
    let mut solver = MaximizerSolver::new(grid(), NewtonOptions::default());
    assert!(matches!(locate_r_star(&mut solver, 10.0, 20.0, 1e-6), Err(Error::InvalidInput(_))));
    assert!(matches!(locate_r_star(&mut solver, 1.0, 5.0, 1e-3), Err(Error::Bracket { .. })));
}

#[test]
fn record_round_trip_and_tamper_detection() {
    let p = maximizer(5.0);
    let rec = p.to_record();
    let text = serde_json::to_string(&rec).unwrap();
    let back = MaximizerProfile::from_record(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back.to_record(), rec);
    let mut tampered = rec.clone();
    tampered.q[1000] -= 0.5;
    assert!(matches!(MaximizerProfile::from_record(&tampered), Err(Error::InvalidInput(_))));
}
