//! Integration of `-(p u')' + q u = s |r| u` in the variables `(u, v = p u')`.
//!
//! The stepper is a Dormand-Prince 5(4) pair. The state is renormalized after
//! every accepted step and the discarded amplitude is kept as a logarithm, so
//! exponentially growing or decaying solutions never overflow. A Prüfer angle
//! `theta = atan2(u, v)` is lifted continuously alongside; a step is rejected
//! whenever the angle moves by `pi/2` or more, so the lifting is unambiguous.
//!
//! Integration restarts at every coefficient breakpoint and coefficients are
//! evaluated strictly inside the current smooth piece.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use crate::coefficients::{CoefficientField, IndefiniteProblem};
use crate::error::{Error, Result};

/// Which half-line an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `(c, inf)`
    Plus,
    /// `(-inf, c)`
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Keep every accepted step in [`Solution::trace`].
    pub record: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, max_steps: 5_000_000, record: false }
    }
}

impl OdeOptions {
    /// Tolerances used for period maps and discriminants.
    pub fn tight() -> Self {
        OdeOptions { rtol: 1e-13, atol: 1e-15, ..OdeOptions::default() }
    }
}

/// A point of a solution in `(u, pu')` variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SLState {
    pub x: f64,
    pub u: f64,
    pub v: f64,
}

/// Oscillation data gathered along one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrueferTrace {
    /// Lifted `atan2(u, v)` at the terminal point.
    pub theta: f64,
    /// Log of the amplitude removed by renormalization.
    pub rho_log: f64,
    /// Zeros of `u` strictly inside the interval of integration.
    pub zero_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub x: f64,
    pub u: f64,
    pub v: f64,
    pub theta: f64,
    pub rho_log: f64,
}

/// Result of one integration. `(u, v)` is the unit-norm direction of the
/// terminal state; the true state is `exp(rho_log) * (u, v)`.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x_start: f64,
    pub x_end: f64,
    pub u: f64,
    pub v: f64,
    pub rho_log: f64,
    pub theta_start: f64,
    pub theta_end: f64,
    pub zero_count: usize,
    pub steps: usize,
    pub rejected: usize,
    pub trace: Vec<TracePoint>,
}

impl Solution {
    pub fn terminal(&self) -> SLState {
        SLState { x: self.x_end, u: self.u, v: self.v }
    }

    pub fn pruefer(&self) -> PrueferTrace {
        PrueferTrace { theta: self.theta_end, rho_log: self.rho_log, zero_count: self.zero_count }
    }

    /// Writes the recorded trace as CSV with columns `x,u,v,theta,rho_log`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,u,v,theta,rho_log")?;
        for p in &self.trace {
            writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", p.x, p.u, p.v, p.theta, p.rho_log)?;
        }
        Ok(())
    }
}

/// Number of integer multiples of `pi` strictly between `a` and `b`.
pub fn multiples_of_pi_between(a: f64, b: f64) -> usize {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let n = (hi / PI).ceil() - 1.0 - (lo / PI).floor();
    if n > 0.0 {
        n as usize
    } else {
        0
    }
}

fn wrap_angle(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// One Dormand-Prince step. Returns the new state, the derivative there
/// (first stage of the next step) and the scaled error norm.
#[inline]
fn dopri_step<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]>(
    f: &F,
    x: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
) -> ([f64; N], [f64; N], f64) {
    let k2 = f(x + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(x + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(x + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(x + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(
        x + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(x + h, &y_new);
    let mut err = 0.0f64;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
        err = err.max(e.abs() / scale);
    }
    (y_new, k7, err)
}

/// Hooks that specialize the generic driver.
trait StepHook<const N: usize> {
    /// Extra acceptance condition on top of the error test.
    fn admissible(&self, _old: &[f64; N], _new: &[f64; N]) -> bool {
        true
    }
    /// Called after acceptance; may rescale the state and returns the factor applied.
    fn accepted(&mut self, _x: f64, _old: &[f64; N], _y: &mut [f64; N]) -> f64 {
        1.0
    }
}

struct Driver<'a> {
    rtol: f64,
    atol: f64,
    max_steps: usize,
    breakpoints: &'a [f64],
}

struct DriveStats {
    steps: usize,
    rejected: usize,
}

impl Driver<'_> {
    /// Integrates from `x0` to `x1`. `rhs(x, y)` gets `x` already moved inside
    /// the current smooth piece; `guard(x)` bounds the step length.
    fn run<const N: usize>(
        &self,
        rhs: &impl Fn(f64, &[f64; N]) -> [f64; N],
        guard: &impl Fn(f64) -> f64,
        hook: &mut impl StepHook<N>,
        x0: f64,
        x1: f64,
        y: &mut [f64; N],
    ) -> Result<DriveStats> {
        let mut stats = DriveStats { steps: 0, rejected: 0 };
        if x0 == x1 {
            return Ok(stats);
        }
        let dir = if x1 > x0 { 1.0 } else { -1.0 };
        let mut stops: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|b| (b - x0) * dir > 0.0 && (x1 - b) * dir > 0.0)
            .collect();
        stops.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
        stops.push(x1);

        let mut x = x0;
        let mut h_next = f64::NAN;
        for &stop in &stops {
            let (lo, hi) = if dir > 0.0 { (x, stop) } else { (stop, x) };
            let nudge = 1e-13 * lo.abs().max(hi.abs()).max(1.0);
            let (lo_in, hi_in) = if hi - lo > 4.0 * nudge {
                (lo + nudge, hi - nudge)
            } else {
                let mid = 0.5 * (lo + hi);
                (mid, mid)
            };
            let clamp = |t: f64| t.clamp(lo_in, hi_in);
            let f = |t: f64, s: &[f64; N]| rhs(clamp(t), s);
            let mut k1 = f(x, y);
            if !h_next.is_finite() {
                h_next = (stop - x).abs().min(guard(clamp(x))).min(0.1);
            }
            loop {
                let remaining = (stop - x).abs();
                if remaining == 0.0 {
                    break;
                }
                let limit = guard(clamp(x));
                let mut h = h_next.min(limit).min(remaining);
                let last = h >= remaining;
                if last {
                    h = remaining;
                }
                if h < 1e-15 * x.abs().max(1.0) && !last {
                    return Err(Error::StepUnderflow { x });
                }
                if stats.steps + stats.rejected > self.max_steps {
                    return Err(Error::StepUnderflow { x });
                }
                let (mut y_new, k7, err) = dopri_step(&f, x, y, &k1, dir * h, self.rtol, self.atol);
                if !y_new.iter().all(|c| c.is_finite()) || !err.is_finite() {
                    if h < 1e-12 {
                        return Err(Error::NonfiniteState { x });
                    }
                    stats.rejected += 1;
                    h_next = 0.25 * h;
                    continue;
                }
                if err <= 1.0 && hook.admissible(y, &y_new) {
                    let x_new = if last { stop } else { x + dir * h };
                    let scale = hook.accepted(x_new, y, &mut y_new);
                    *y = y_new;
                    k1 = k7;
                    if scale != 1.0 {
                        for k in k1.iter_mut() {
                            *k *= scale;
                        }
                    }
                    x = x_new;
                    stats.steps += 1;
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    h_next = h * factor;
                    if last {
                        break;
                    }
                } else {
                    stats.rejected += 1;
                    let factor = if err <= 1.0 { 0.5 } else { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) };
                    h_next = h * factor;
                }
            }
            x = stop;
        }
        Ok(stats)
    }
}

struct PrueferHook {
    theta: f64,
    rho_log: f64,
    record: bool,
    trace: Vec<TracePoint>,
}

impl StepHook<2> for PrueferHook {
    fn admissible(&self, old: &[f64; 2], new: &[f64; 2]) -> bool {
        let d = wrap_angle(new[0].atan2(new[1]) - old[0].atan2(old[1]));
        d.abs() < FRAC_PI_2
    }

    fn accepted(&mut self, x: f64, old: &[f64; 2], y: &mut [f64; 2]) -> f64 {
        self.theta += wrap_angle(y[0].atan2(y[1]) - old[0].atan2(old[1]));
        let norm = y[0].hypot(y[1]);
        self.rho_log += norm.ln();
        y[0] /= norm;
        y[1] /= norm;
        if self.record {
            self.trace.push(TracePoint { x, u: y[0], v: y[1], theta: self.theta, rho_log: self.rho_log });
        }
        1.0 / norm
    }
}

/// Integrates `-(p u')' + q u = spectral |r| u` from `x0` to `x1` (either
/// direction) starting from `(u, v) = init`. `extra_breaks` are added to the
/// coefficient breakpoints.
pub fn solve(
    field: &CoefficientField,
    extra_breaks: &[f64],
    spectral: f64,
    x0: f64,
    x1: f64,
    init: (f64, f64),
    opts: &OdeOptions,
) -> Result<Solution> {
    let (u0, v0) = init;
    if !(u0.is_finite() && v0.is_finite()) || (u0 == 0.0 && v0 == 0.0) {
        return Err(Error::InvalidProblem("initial state must be finite and nonzero".into()));
    }
    let norm0 = u0.hypot(v0);
    let mut y = [u0 / norm0, v0 / norm0];
    let theta_start = u0.atan2(v0);
    let mut hook = PrueferHook { theta: theta_start, rho_log: norm0.ln(), record: opts.record, trace: Vec::new() };
    if opts.record {
        hook.trace.push(TracePoint { x: x0, u: y[0], v: y[1], theta: theta_start, rho_log: hook.rho_log });
    }

    let mut breaks: Vec<f64> = field.breakpoints().to_vec();
    breaks.extend_from_slice(extra_breaks);
    let driver = Driver { rtol: opts.rtol, atol: opts.atol, max_steps: opts.max_steps, breakpoints: &breaks };
    let rhs = |x: f64, s: &[f64; 2]| {
        let c = field.sample(x);
        [s[1] / c.p, (c.q - spectral * c.r.abs()) * s[0]]
    };
    let guard = |x: f64| {
        let c = field.sample(x);
        let rate = (1.0 / c.p).max((c.q - spectral * c.r.abs()).abs());
        if rate > 0.0 {
            0.75 / rate
        } else {
            f64::INFINITY
        }
    };
    let stats = driver.run(&rhs, &guard, &mut hook, x0, x1, &mut y)?;
    Ok(Solution {
        x_start: x0,
        x_end: x1,
        u: y[0],
        v: y[1],
        rho_log: hook.rho_log,
        theta_start,
        theta_end: hook.theta,
        zero_count: multiples_of_pi_between(theta_start, hook.theta),
        steps: stats.steps,
        rejected: stats.rejected,
        trace: hook.trace,
    })
}

/// Integrates from `c` outwards over a distance `x` on the given side.
/// With `equation_sign = +1` the equation is `l_pm u = lambda u`, i.e.
/// `-(pu')' + qu = lambda |r| u` on both sides; with `-1` the spectral
/// parameter enters with the opposite sign.
pub fn integrate(
    problem: &IndefiniteProblem,
    side: Side,
    equation_sign: i32,
    lambda: f64,
    init: SLState,
    x: f64,
) -> Result<(SLState, PrueferTrace)> {
    integrate_with(problem, side, equation_sign, lambda, init, x, &OdeOptions::default())
        .map(|s| (s.terminal(), s.pruefer()))
}

pub fn integrate_with(
    problem: &IndefiniteProblem,
    side: Side,
    equation_sign: i32,
    lambda: f64,
    init: SLState,
    x: f64,
    opts: &OdeOptions,
) -> Result<Solution> {
    if !(x >= 0.0) {
        return Err(Error::InvalidProblem(format!("integration length must be nonnegative, got {x}")));
    }
    let target = match side {
        Side::Plus => problem.c + x,
        Side::Minus => problem.c - x,
    };
    let spectral = if equation_sign >= 0 { lambda } else { -lambda };
    solve(&problem.coeffs, &[problem.c], spectral, init.x, target, (init.u, init.v), opts)
}

/// Transfer matrix over one period, columns are the images of `(1, 0)` and `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodMap {
    pub x0: f64,
    pub period: f64,
    pub lambda: f64,
    pub matrix: [[f64; 2]; 2],
}

impl PeriodMap {
    pub fn det(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Floquet discriminant.
    pub fn trace(&self) -> f64 {
        self.matrix[0][0] + self.matrix[1][1]
    }
}

/// Period map of `-(pu')' + qu = lambda |r| u` over `[x0, x0 + period]`.
pub fn period_map(problem: &IndefiniteProblem, lambda: f64, x0: f64) -> Result<PeriodMap> {
    period_map_with(problem, lambda, x0, &OdeOptions::tight())
}

pub fn period_map_with(
    problem: &IndefiniteProblem,
    lambda: f64,
    x0: f64,
    opts: &OdeOptions,
) -> Result<PeriodMap> {
    let period = problem.period().ok_or_else(|| {
        Error::NotApplicable("period maps need a periodic_bands essential spectrum model".into())
    })?;
    transfer_matrix(&problem.coeffs, &[problem.c], lambda, x0, x0 + period, opts).map(|matrix| PeriodMap {
        x0,
        period,
        lambda,
        matrix,
    })
}

/// Transfer matrix of `-(pu')' + qu = lambda |r| u` from `x0` to `x1`.
pub fn transfer_matrix(
    field: &CoefficientField,
    extra_breaks: &[f64],
    lambda: f64,
    x0: f64,
    x1: f64,
    opts: &OdeOptions,
) -> Result<[[f64; 2]; 2]> {
    let a = solve(field, extra_breaks, lambda, x0, x1, (1.0, 0.0), opts)?;
    let b = solve(field, extra_breaks, lambda, x0, x1, (0.0, 1.0), opts)?;
    let sa = a.rho_log.exp();
    let sb = b.rho_log.exp();
    Ok([[a.u * sa, b.u * sb], [a.v * sa, b.v * sb]])
}

/// Both sides of the Lagrange identity on `[c, c + x]` (or `[c - x, c]`)
/// for two real solutions with parameters `lambda1`, `lambda2`:
/// `(lambda1 - lambda2) int h1 h2 |r| = [h1 (p h2') - (p h1') h2]` between the ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeDefect {
    pub integral_side: f64,
    pub boundary_side: f64,
    pub defect: f64,
}

struct PlainHook;
impl<const N: usize> StepHook<N> for PlainHook {}

pub fn lagrange_defect(
    problem: &IndefiniteProblem,
    side: Side,
    lambda1: f64,
    lambda2: f64,
    init1: (f64, f64),
    init2: (f64, f64),
    x: f64,
) -> Result<LagrangeDefect> {
    let field = &problem.coeffs;
    let (x0, x1) = match side {
        Side::Plus => (problem.c, problem.c + x),
        Side::Minus => (problem.c - x, problem.c),
    };
    let mut breaks = field.breakpoints().to_vec();
    breaks.push(problem.c);
    let driver = Driver { rtol: 1e-12, atol: 1e-14, max_steps: 5_000_000, breakpoints: &breaks };
    let rhs = |t: f64, s: &[f64; 5]| {
        let c = field.sample(t);
        let w = c.r.abs();
        [
            s[1] / c.p,
            (c.q - lambda1 * w) * s[0],
            s[3] / c.p,
            (c.q - lambda2 * w) * s[2],
            (lambda1 - lambda2) * s[0] * s[2] * w,
        ]
    };
    let guard = |t: f64| {
        let c = field.sample(t);
        let w = c.r.abs();
        let rate = (1.0 / c.p).max((c.q - lambda1 * w).abs()).max((c.q - lambda2 * w).abs());
        if rate > 0.0 {
            0.75 / rate
        } else {
            f64::INFINITY
        }
    };
    // The identity is stated with both solutions anchored at c.
    let (start, end, sign) = match side {
        Side::Plus => (x0, x1, 1.0),
        Side::Minus => (x1, x0, -1.0),
    };
    let mut y = [init1.0, init1.1, init2.0, init2.1, 0.0];
    driver.run(&rhs, &guard, &mut PlainHook, start, end, &mut y)?;
    let wronskian = |u1: f64, v1: f64, u2: f64, v2: f64| u1 * v2 - v1 * u2;
    let w_start = wronskian(init1.0, init1.1, init2.0, init2.1);
    let w_end = wronskian(y[0], y[1], y[2], y[3]);
    // Integrating backwards accumulates the integral with the opposite sign.
    let integral_side = sign * y[4];
    let boundary_side = match side {
        Side::Plus => w_end - w_start,
        Side::Minus => w_start - w_end,
    };
    Ok(LagrangeDefect { integral_side, boundary_side, defect: (integral_side - boundary_side).abs() })
}
