//! Half-line Titchmarsh-Weyl coefficients in projective form.
//!
//! For the plus side the solution that vanishes at `c + X` is integrated back
//! to `c`; for the minus side the one vanishing at `c - X` is integrated
//! forward. Both use the weight `|r|`, so `m_minus(mu)` belongs to the
//! equation `-(pk')' + qk = mu |r| k` on `(-inf, c)`.
//!
//! The primitive quantity is the lifted Prüfer angle at `c`:
//!
//! * plus side: `L = -atan2(u, v)(c)`, so `m_plus = -cot L`;
//! * minus side: `L = atan2(u, v)(c)`, so `m_minus = cot L`.
//!
//! Both lifted angles are positive and increase with the spectral parameter,
//! poles sit at `L = k pi`, and `#{k >= 1 : k pi < L}` counts the Dirichlet
//! eigenvalues of the truncated half-line problem below the parameter.
//!
//! For periodic coefficients the decaying Floquet solution replaces the
//! truncated one, which keeps spurious edge states of the cut-off out of the
//! spectral gaps.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::RwLock;

use serde::Serialize;

use crate::coefficients::IndefiniteProblem;
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, Side};

/// Parameters closer than this to the declared essential spectrum are refused.
pub const ESSENTIAL_MARGIN: f64 = 1e-6;

/// Floquet solutions are only formed where `|Delta| - 2` exceeds this, well
/// above the rounding level of the discriminant.
pub const FLOQUET_MARGIN: f64 = 1e-12;

/// How the half-line is cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Dirichlet condition at distance `X` from `c`.
    Finite(f64),
    /// Decaying Floquet solution (periodic coefficients only).
    Floquet,
}

impl Truncation {
    pub fn half_width(&self) -> Option<f64> {
        match self {
            Truncation::Finite(x) => Some(*x),
            Truncation::Floquet => None,
        }
    }
}

/// `m` as a direction: `(u, v) = (cos theta, sin theta)` spans the boundary
/// data `(h(c), (p h')(c))` of the square-integrable solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectiveBoundaryValue {
    /// In `[0, pi)`.
    pub theta: f64,
    /// `v / u`, infinite exactly when `theta = pi/2`.
    pub as_scalar: f64,
    /// Angle change in the last truncation doubling.
    pub error_estimate: f64,
    pub truncation_x: Option<f64>,
    pub converged: bool,
}

impl ProjectiveBoundaryValue {
    pub fn from_theta(theta: f64, error_estimate: f64, truncation_x: Option<f64>, converged: bool) -> Self {
        let theta = reduce_pi(theta);
        let as_scalar = if theta == FRAC_PI_2 { f64::INFINITY } else { theta.tan() };
        ProjectiveBoundaryValue { theta, as_scalar, error_estimate, truncation_x, converged }
    }

    pub fn is_pole(&self, tol: f64) -> bool {
        angle_distance(self.theta, FRAC_PI_2) <= tol
    }
}

/// Reduces an angle to `[0, pi)`.
pub fn reduce_pi(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Distance between two directions, in `[0, pi/2]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Direction angle from a lifted angle.
pub fn direction_from_lifted(side: Side, lifted: f64) -> f64 {
    match side {
        Side::Plus => reduce_pi(FRAC_PI_2 + lifted),
        Side::Minus => reduce_pi(FRAC_PI_2 - lifted),
    }
}

type LiftedKey = (Side, u64, u64);

/// Evaluator for both half-lines of one problem, with a shared cache.
pub struct WeylEngine<'p> {
    pub problem: &'p IndefiniteProblem,
    pub opts: OdeOptions,
    pub floquet_opts: OdeOptions,
    pub margin: f64,
    lifted_cache: RwLock<HashMap<LiftedKey, f64>>,
    floquet_cache: RwLock<HashMap<(Side, u64), f64>>,
}

impl<'p> WeylEngine<'p> {
    pub fn new(problem: &'p IndefiniteProblem) -> Self {
        WeylEngine {
            problem,
            opts: OdeOptions::default(),
            floquet_opts: OdeOptions { rtol: 1e-12, atol: 1e-14, ..OdeOptions::default() },
            margin: ESSENTIAL_MARGIN,
            lifted_cache: RwLock::new(HashMap::new()),
            floquet_cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.problem.period().is_some()
    }

    /// Truncations visited for this problem, in order.
    pub fn schedule(&self) -> Vec<Truncation> {
        if self.is_periodic() {
            vec![Truncation::Floquet]
        } else {
            self.problem.truncation.schedule().into_iter().map(Truncation::Finite).collect()
        }
    }

    pub fn cache_len(&self) -> usize {
        self.lifted_cache.read().map(|c| c.len()).unwrap_or(0)
            + self.floquet_cache.read().map(|c| c.len()).unwrap_or(0)
    }

    /// Lifted angle `L` at `c` for the problem cut off at distance `x`.
    pub fn lifted(&self, side: Side, mu: f64, x: f64) -> Result<f64> {
        let key = (side, mu.to_bits(), x.to_bits());
        if let Some(v) = self.lifted_cache.read().ok().and_then(|c| c.get(&key).copied()) {
            return Ok(v);
        }
        let c = self.problem.c;
        let start = match side {
            Side::Plus => c + x,
            Side::Minus => c - x,
        };
        let sol = ode::solve(&self.problem.coeffs, &[c], mu, start, c, (0.0, 1.0), &self.opts)?;
        let value = match side {
            Side::Plus => -sol.theta_end,
            Side::Minus => sol.theta_end,
        };
        if let Ok(mut cache) = self.lifted_cache.write() {
            cache.insert(key, value);
        }
        Ok(value)
    }

    /// Dirichlet eigenvalues of the truncated half-line problem below `mu`.
    pub fn count_below_at(&self, side: Side, mu: f64, x: f64) -> Result<usize> {
        let l = self.lifted(side, mu, x)?;
        Ok(if l > 0.0 { ((l / PI).ceil() - 1.0).max(0.0) as usize } else { 0 })
    }

    /// Floquet discriminant and the direction of the solution that decays
    /// away from `c` on the given side.
    pub fn floquet_direction(&self, side: Side, mu: f64) -> Result<f64> {
        let key = (side, mu.to_bits());
        if let Some(v) = self.floquet_cache.read().ok().and_then(|c| c.get(&key).copied()) {
            return Ok(v);
        }
        let period = self
            .problem
            .period()
            .ok_or_else(|| Error::NotApplicable("Floquet solutions need periodic coefficients".into()))?;
        let c = self.problem.c;
        let (x0, x1) = match side {
            Side::Plus => (c, c + period),
            Side::Minus => (c - period, c),
        };
        let m = ode::transfer_matrix(&self.problem.coeffs, &[c], mu, x0, x1, &self.floquet_opts)?;
        let delta = m[0][0] + m[1][1];
        let disc = delta * delta - 4.0;
        if !(delta.abs() - 2.0 > FLOQUET_MARGIN) || !(disc > 0.0) {
            return Err(Error::EssentialSpectrumProximity { lambda: mu, margin: FLOQUET_MARGIN });
        }
        let big = 0.5 * (delta + delta.signum() * disc.sqrt());
        // Decay towards +inf on the plus side, towards -inf on the minus side.
        let rho = match side {
            Side::Plus => 1.0 / big,
            Side::Minus => big,
        };
        let e1 = (m[0][1], rho - m[0][0]);
        let e2 = (rho - m[1][1], m[1][0]);
        let (u, v) = if e1.0.hypot(e1.1) >= e2.0.hypot(e2.1) { e1 } else { e2 };
        let theta = reduce_pi(v.atan2(u));
        if let Ok(mut cache) = self.floquet_cache.write() {
            cache.insert(key, theta);
        }
        Ok(theta)
    }

    /// Direction angle in `[0, pi)` at a fixed truncation.
    pub fn direction(&self, side: Side, mu: f64, trunc: Truncation) -> Result<f64> {
        match trunc {
            Truncation::Finite(x) => Ok(direction_from_lifted(side, self.lifted(side, mu, x)?)),
            Truncation::Floquet => self.floquet_direction(side, mu),
        }
    }

    fn check_margin(&self, mu: f64) -> Result<()> {
        if let Some(d) = self.problem.ess_model.distance(mu) {
            if d < self.margin {
                return Err(Error::EssentialSpectrumProximity { lambda: mu, margin: self.margin });
            }
        }
        Ok(())
    }

    /// `m` on one side with truncation control.
    pub fn m(&self, side: Side, mu: f64) -> Result<ProjectiveBoundaryValue> {
        if !mu.is_finite() {
            return Err(Error::InvalidProblem(format!("spectral parameter must be finite, got {mu}")));
        }
        self.check_margin(mu)?;
        if self.is_periodic() {
            let theta = self.floquet_direction(side, mu)?;
            return Ok(ProjectiveBoundaryValue::from_theta(theta, 0.0, None, true));
        }
        let tol = self.problem.truncation.tol;
        let mut previous: Option<f64> = None;
        let mut last_change = f64::INFINITY;
        let schedule = self.problem.truncation.schedule();
        for &x in &schedule {
            let theta = self.direction(side, mu, Truncation::Finite(x))?;
            if let Some(prev) = previous {
                last_change = angle_distance(theta, prev);
                if last_change < tol {
                    return Ok(ProjectiveBoundaryValue::from_theta(theta, last_change, Some(x), true));
                }
            }
            previous = Some(theta);
        }
        Err(Error::NoConvergence(format!(
            "m on the {side:?} side at {mu}: angle still moving by {last_change:e} at X = {}",
            schedule.last().copied().unwrap_or(f64::NAN)
        )))
    }
}

/// `m_plus(lambda)` with the problem's truncation policy.
pub fn m_plus(problem: &IndefiniteProblem, lambda: f64) -> Result<ProjectiveBoundaryValue> {
    WeylEngine::new(problem).m(Side::Plus, lambda)
}

/// `m_minus(mu)` with the problem's truncation policy.
pub fn m_minus(problem: &IndefiniteProblem, mu: f64) -> Result<ProjectiveBoundaryValue> {
    WeylEngine::new(problem).m(Side::Minus, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_problem, catalog};

    #[test]
    fn constant_tail_closed_form() {
        let problem = build_problem(&catalog::constant(1.0)).unwrap();
        let engine = WeylEngine::new(&problem);
        for lambda in [-4.0, -1.0, 0.0, 0.5, 0.9] {
            let mp = engine.m(Side::Plus, lambda).unwrap();
            let mm = engine.m(Side::Minus, lambda).unwrap();
            let exact = (1.0f64 - lambda).sqrt();
            assert!((mp.as_scalar + exact).abs() < 1e-8, "{lambda}: {}", mp.as_scalar);
            assert!((mm.as_scalar - exact).abs() < 1e-8, "{lambda}: {}", mm.as_scalar);
            assert!(mp.converged);
        }
        assert!(engine.cache_len() > 0);
    }

    #[test]
    fn far_below_spectrum() {
        let problem = build_problem(&catalog::constant(1.0)).unwrap();
        let mm = m_minus(&problem, -1e4).unwrap();
        let mp = m_plus(&problem, -1e4).unwrap();
        let exact = (1.0f64 + 1e4).sqrt();
        assert!((mm.as_scalar - exact).abs() / exact < 1e-8);
        assert!((mp.as_scalar + exact).abs() / exact < 1e-8);
    }

    #[test]
    fn refuses_essential_spectrum() {
        let problem = build_problem(&catalog::constant(1.0)).unwrap();
        assert!(matches!(m_plus(&problem, 1.0), Err(Error::EssentialSpectrumProximity { .. })));
        assert!(matches!(m_plus(&problem, 1.5), Err(Error::EssentialSpectrumProximity { .. })));
        assert!(matches!(m_plus(&problem, 1.0 - 5e-7), Err(Error::EssentialSpectrumProximity { .. })));
    }

    #[test]
    fn reflection_under_symmetry() {
        let problem = build_problem(&catalog::poschl_teller(2)).unwrap();
        let engine = WeylEngine::new(&problem);
        for lambda in [-3.0, 0.0, 2.0, 4.5, 6.0, 7.9, 8.5] {
            let mp = engine.m(Side::Plus, lambda).unwrap();
            let mm = engine.m(Side::Minus, lambda).unwrap();
            assert!(angle_distance(mm.theta, PI - mp.theta) <= 1e-8, "{lambda}");
        }
    }

    #[test]
    fn sech2_pole_at_lowest_dirichlet_eigenvalue() {
        // kappa = 2: the odd bound state at 8 is the only Dirichlet eigenvalue of B+.
        let problem = build_problem(&catalog::poschl_teller(2)).unwrap();
        let mp = m_plus(&problem, 8.0).unwrap();
        assert!(mp.is_pole(1e-7), "{mp:?}");
        let off = m_plus(&problem, 7.0).unwrap();
        assert!(!off.is_pole(1e-3));
    }

    #[test]
    fn m_plus_increases_between_poles() {
        let problem = build_problem(&catalog::poschl_teller(3)).unwrap();
        let engine = WeylEngine::new(&problem);
        let x = Truncation::Finite(30.0);
        let mut prev = engine.lifted(Side::Plus, -5.0, 30.0).unwrap();
        let mut prev_minus = engine.lifted(Side::Minus, -5.0, 30.0).unwrap();
        for i in 1..200 {
            let mu = -5.0 + 20.0 * i as f64 / 200.0;
            let l = engine.lifted(Side::Plus, mu, 30.0).unwrap();
            let lm = engine.lifted(Side::Minus, mu, 30.0).unwrap();
            assert!(l > prev && lm > prev_minus);
            prev = l;
            prev_minus = lm;
        }
        let _ = engine.direction(Side::Plus, 1.0, x).unwrap();
    }

    #[test]
    fn floquet_direction_matches_long_truncation() {
        let problem = build_problem(&catalog::periodic(10.0, 2.0, 1.0, 0.0)).unwrap();
        let engine = WeylEngine::new(&problem);
        for mu in [1.0, 5.0, 8.0] {
            let floquet = engine.floquet_direction(Side::Plus, mu).unwrap();
            let truncated = engine.direction(Side::Plus, mu, Truncation::Finite(40.0)).unwrap();
            assert!(angle_distance(floquet, truncated) < 1e-8, "{mu}: {floquet} {truncated}");
            let fm = engine.floquet_direction(Side::Minus, mu).unwrap();
            let tm = engine.direction(Side::Minus, mu, Truncation::Finite(40.0)).unwrap();
            assert!(angle_distance(fm, tm) < 1e-8, "{mu}: {fm} {tm}");
        }
    }
}
