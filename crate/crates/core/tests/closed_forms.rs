use indefsl_core::coefficients::{
    build_problem, catalog, CoefficientSpec, EssentialSpectrumModel, IndefiniteProblem, PiecewiseSpec,
};
use indefsl_core::matching::{eval_matching, monotonicity_profile, MatchingKind, PROFILE_POINTS};
use indefsl_core::weyl::{m_minus, m_plus, WeylEngine};

/// `q = q_plus` on `x > 0`, `q_minus` on `x < 0`, `r = sgn x`.
fn two_tails(q_plus: f64, q_minus: f64) -> IndefiniteProblem {
    let mut spec = catalog::constant(q_plus.min(q_minus));
    spec.q = CoefficientSpec::Piecewise {
        piecewise: PiecewiseSpec {
            at: 0.0,
            left: Box::new(CoefficientSpec::constant(q_minus)),
            right: Box::new(CoefficientSpec::constant(q_plus)),
        },
    };
    spec.symmetric = false;
    spec.ess_model = EssentialSpectrumModel::ConstantTail { q_inf: q_plus.min(q_minus) };
    build_problem(&spec).unwrap()
}

#[test]
fn constant_tail_m_functions() {
    let p = build_problem(&catalog::constant(1.0)).unwrap();
    for l in [-4.0, -1.0, 0.0, 0.5, 0.9f64] {
        let exact = (1.0 - l).sqrt();
        assert!((m_plus(&p, l).unwrap().as_scalar + exact).abs() < 1e-8);
        assert!((m_minus(&p, l).unwrap().as_scalar - exact).abs() < 1e-8);
    }
}

#[test]
fn two_tail_matching_functions() {
    let p = two_tails(4.0, 1.0);
    for l in [-0.9, -0.5, 0.0, 0.3, 0.9f64] {
        let d = eval_matching(&p, MatchingKind::D, l).unwrap().value;
        assert!((d + (4.0 - l).sqrt() + (1.0 - l).sqrt()).abs() < 1e-8, "D({l}) = {d}");
        let m = eval_matching(&p, MatchingKind::M, l).unwrap().value;
        assert!((m + (4.0 - l).sqrt() + (1.0 + l).sqrt()).abs() < 1e-8, "M({l}) = {m}");
    }
}

// M = -sqrt(4 - l) - sqrt(1 + l) decreases on (0, 1.5): with unequal tails M
// is not increasing on the positive axis even without poles.
#[test]
fn two_tail_m_decreases_near_zero() {
    let p = two_tails(4.0, 1.0);
    let engine = WeylEngine::new(&p);
    let prof = monotonicity_profile(&engine, MatchingKind::M, 0.0, 0.9, PROFILE_POINTS).unwrap();
    assert_eq!(prof.segments, 1);
    assert!(!prof.monotone);
    assert!(prof.violations > PROFILE_POINTS / 2);
    let d = monotonicity_profile(&engine, MatchingKind::D, 0.0, 0.9, PROFILE_POINTS).unwrap();
    assert!(d.monotone);
}

#[test]
fn equal_tails_m_increases() {
    let p = two_tails(2.0, 2.0);
    let engine = WeylEngine::new(&p);
    let prof = monotonicity_profile(&engine, MatchingKind::M, 0.0, 1.9, PROFILE_POINTS).unwrap();
    assert!(prof.monotone, "{} violations", prof.violations);
}
