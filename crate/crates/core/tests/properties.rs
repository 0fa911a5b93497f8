use indefsl_core::coefficients::{build_problem, catalog, GaussianWell, IndefiniteProblem};
use indefsl_core::count::{count_below, HalfLineOperator, OperatorTag, DEFAULT_TOL};
use indefsl_core::matching::{
    eigenvalues_a, eigenvalues_ja, monotonicity_profile, scan, MatchingKind, PROFILE_POINTS,
};
use indefsl_core::oracle::{discretize, oracle_counts, pairing_defect};
use indefsl_core::weyl::{m_minus, m_plus, WeylEngine};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

/// One to three wells under a tail in `[2, 6)`, keeping `q > 0`.
fn wells(symmetric: bool) -> impl Strategy<Value = (f64, Vec<GaussianWell>)> {
    (2.0..6.0f64, prop::collection::vec((0.2..0.7f64, 0.0..3.0f64, 0.5..3.0f64), 1..=3)).prop_map(
        move |(q_inf, raw)| {
            let mut budget = 0.9 * q_inf;
            let mut out = Vec::new();
            for (frac, center, width) in raw {
                let amp = frac * budget;
                budget -= amp;
                if symmetric {
                    out.push(GaussianWell { amplitude: amp / 2.0, center, width });
                    out.push(GaussianWell { amplitude: amp / 2.0, center: -center, width });
                } else {
                    out.push(GaussianWell { amplitude: amp, center: center * 2.0 - 3.0, width });
                }
            }
            (q_inf, out)
        },
    )
}

fn problem(q_inf: f64, w: &[GaussianWell], symmetric: bool) -> IndefiniteProblem {
    build_problem(&catalog::wells(q_inf, w, symmetric)).unwrap()
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn half_line_counts_are_monotone((q_inf, w) in wells(false), s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let p = problem(q_inf, &w, false);
        let (lo, hi) = (s.min(t) * (q_inf - 0.1), s.max(t) * (q_inf - 0.1));
        for op in [HalfLineOperator::B_PLUS, HalfLineOperator::B_MINUS] {
            let a = count_below(op, &p, lo).unwrap().count;
            let b = count_below(op, &p, hi).unwrap().count;
            prop_assert!(a <= b, "{op:?}: {a} at {lo} > {b} at {hi}");
        }
    }

    #[test]
    fn m_functions_have_nevanlinna_monotonicity((q_inf, w) in wells(false), s in 0.0..1.0f64, t in 0.0..1.0f64) {
        prop_assume!((s - t).abs() > 1e-3);
        let p = problem(q_inf, &w, false);
        let lo = -2.0 + s.min(t) * (q_inf + 1.9);
        let hi = -2.0 + s.max(t) * (q_inf + 1.9);
        // Between two points with no Dirichlet eigenvalue in between, m+
        // increases and m- decreases.
        let poles = |op, x| count_below(op, &p, x).unwrap().count;
        if poles(HalfLineOperator::B_PLUS, lo) == poles(HalfLineOperator::B_PLUS, hi) {
            prop_assert!(m_plus(&p, lo).unwrap().as_scalar < m_plus(&p, hi).unwrap().as_scalar);
        }
        if poles(HalfLineOperator::B_MINUS, lo) == poles(HalfLineOperator::B_MINUS, hi) {
            prop_assert!(m_minus(&p, lo).unwrap().as_scalar > m_minus(&p, hi).unwrap().as_scalar);
        }
    }

    #[test]
    fn reflection_swaps_m_functions((q_inf, w) in wells(true), s in 0.0..1.0f64) {
        let p = problem(q_inf, &w, true);
        let l = -1.0 + s * (q_inf - 0.1);
        let (mp, mm) = (m_plus(&p, l).unwrap(), m_minus(&p, l).unwrap());
        if mp.as_scalar.abs() < 1e6 {
            prop_assert!((mp.as_scalar + mm.as_scalar).abs() < 1e-7 * mp.as_scalar.abs().max(1.0));
        }
    }

    #[test]
    fn symmetric_m_is_monotone_and_alternates((q_inf, w) in wells(true)) {
        let p = problem(q_inf, &w, true);
        let engine = WeylEngine::new(&p);
        let prof = monotonicity_profile(&engine, MatchingKind::M, 0.0, q_inf - 0.25, PROFILE_POINTS).unwrap();
        prop_assert!(prof.monotone, "{} violations", prof.violations);
        let s = scan(&p, MatchingKind::M, 0.0, q_inf - 0.25, DEFAULT_TOL).unwrap();
        prop_assert!(s.alternates());
    }

    #[test]
    fn d_is_monotone_and_zeros_alternate((q_inf, w) in wells(false)) {
        let p = problem(q_inf, &w, false);
        let engine = WeylEngine::new(&p);
        let prof = monotonicity_profile(&engine, MatchingKind::D, 0.0, q_inf - 0.25, PROFILE_POINTS).unwrap();
        prop_assert!(prof.monotone, "{} violations", prof.violations);
        for kind in [MatchingKind::D, MatchingKind::M] {
            let s = scan(&p, kind, 0.0, q_inf - 0.25, DEFAULT_TOL).unwrap();
            prop_assert!(s.alternates(), "{kind:?}");
        }
    }

    #[test]
    fn symmetric_ja_spectrum_is_paired((q_inf, w) in wells(true)) {
        let p = problem(q_inf, &w, true);
        let r = eigenvalues_ja(&p, 0.0, q_inf - 0.25, DEFAULT_TOL).unwrap();
        prop_assert_eq!(r.parts[0].count, r.parts[1].count);
        let pen = discretize(&p, 30.0, 1000).unwrap();
        let mut v = pen.eigenvalues_in(-(q_inf - 0.25), 0.0, 1e-13);
        v.extend(pen.eigenvalues_in(0.0, q_inf - 0.25, 1e-13));
        prop_assert!(pairing_defect(&v) < 1e-8);
    }
}

proptest! {
    #![proptest_config(config(6))]

    // Counts may only differ when an eigenvalue sits within the discretization
    // error of an interval end.
    #[test]
    fn matching_agrees_with_oracle((q_inf, w) in wells(false)) {
        let p = problem(q_inf, &w, false);
        let (a, b) = (0.0, q_inf - 0.25);
        for tag in [OperatorTag::A, OperatorTag::JA] {
            let m = match tag {
                OperatorTag::A => eigenvalues_a(&p, a, b, DEFAULT_TOL).unwrap(),
                _ => eigenvalues_ja(&p, a, b, DEFAULT_TOL).unwrap(),
            };
            let o = oracle_counts(&p, tag, a, b, 30.0, 1000).unwrap();
            let near_end = o.values().iter().chain(m.values().iter()).any(|v| (v.abs() - b).abs() < 1e-3);
            if !near_end {
                prop_assert_eq!(m.count, o.count, "{}", tag);
                for (x, y) in m.values().iter().zip(o.values()) {
                    prop_assert!((x - y).abs() < 1e-5, "{tag}: {x} vs {y}");
                }
            }
        }
    }
}

#[test]
fn constant_case_has_empty_ja_gap() {
    let p = build_problem(&catalog::constant(1.0)).unwrap();
    let o = oracle_counts(&p, OperatorTag::JA, -1.0, 1.0, 30.0, 1000).unwrap();
    assert_eq!(o.count, 0);
    let m = eigenvalues_ja(&p, -1.0, 1.0, DEFAULT_TOL).unwrap();
    assert_eq!(m.count, 0);
}
