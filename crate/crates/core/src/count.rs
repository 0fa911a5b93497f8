//! Oscillation counts and eigenvalue location for the Dirichlet half-line
//! operators `B+` (on `(c, inf)`) and `-B-` (on `(-inf, c)`), and for their
//! direct sums `B = B+ (+) B-` and `JB = B+ (+) (-B-)`.
//!
//! All counts refer to open intervals. Endpoints are pulled inwards by
//! `1e-9 * max(1, |a|, |b|)`. Counts at a fixed truncation are exact counts
//! for the problem cut off with a Dirichlet condition there; truncations are
//! enlarged until two consecutive passes agree.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use serde::Serialize;

use crate::coefficients::IndefiniteProblem;
use crate::error::{Error, Result};
use crate::ode::Side;
use crate::report::{self, Enclosure};
use crate::roots;
use crate::weyl::{Truncation, WeylEngine};

/// Default enclosure width for located eigenvalues.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Counts at or above this that still grow at the largest truncation are
/// reported as lower bounds of a possibly infinite count.
pub const N_MAX: usize = 64;

/// Grid used to lift Floquet directions across a gap.
const FLOQUET_GRID: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OperatorTag {
    A,
    JA,
    Bplus,
    Bminusneg,
    B,
    JB,
}

impl FromStr for OperatorTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "A" => OperatorTag::A,
            "JA" => OperatorTag::JA,
            "Bplus" | "B+" => OperatorTag::Bplus,
            "Bminusneg" | "-B-" => OperatorTag::Bminusneg,
            "B" => OperatorTag::B,
            "JB" => OperatorTag::JB,
            other => return Err(Error::Parse(format!("unknown operator `{other}`"))),
        })
    }
}

impl std::fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OperatorTag::A => "A",
            OperatorTag::JA => "JA",
            OperatorTag::Bplus => "Bplus",
            OperatorTag::Bminusneg => "Bminusneg",
            OperatorTag::B => "B",
            OperatorTag::JB => "JB",
        };
        f.write_str(s)
    }
}

/// Dirichlet-at-`c` operator on one half-line. `sign = -1` on the minus
/// side means `-B-`, whose spectrum is the reflection of that of `B-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfLineOperator {
    pub side: Side,
    pub sign: i8,
}

impl HalfLineOperator {
    pub const B_PLUS: HalfLineOperator = HalfLineOperator { side: Side::Plus, sign: 1 };
    pub const B_MINUS: HalfLineOperator = HalfLineOperator { side: Side::Minus, sign: 1 };
    pub const B_MINUS_NEG: HalfLineOperator = HalfLineOperator { side: Side::Minus, sign: -1 };

    /// The interval of the underlying `B+-` parameter that corresponds to `(a, b)`.
    fn reflect(&self, a: f64, b: f64) -> (f64, f64) {
        if self.sign < 0 {
            (-b, -a)
        } else {
            (a, b)
        }
    }

    fn tag(&self) -> OperatorTag {
        match (self.side, self.sign < 0) {
            (Side::Plus, _) => OperatorTag::Bplus,
            (Side::Minus, true) => OperatorTag::Bminusneg,
            (Side::Minus, false) => OperatorTag::B,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PassInfo {
    #[serde(serialize_with = "report::real_opt")]
    pub x: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationInfo {
    /// `"dirichlet"` or `"floquet"`.
    pub mode: &'static str,
    #[serde(serialize_with = "report::real_opt")]
    pub x_used: Option<f64>,
    pub passes: Vec<PassInfo>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartCount {
    #[serde(serialize_with = "report::real_pair")]
    pub interval: (f64, f64),
    pub count: usize,
}

/// Eigenvalue count `n_T` over one interval or a union of intervals.
#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    pub operator: OperatorTag,
    #[serde(serialize_with = "report::real_pairs")]
    pub intervals: Vec<(f64, f64)>,
    pub count: usize,
    /// Set when the count did not stabilize; it is then a lower bound.
    pub count_is_lower_bound: bool,
    pub parts: Vec<PartCount>,
    pub eigenvalues: Vec<Enclosure>,
    pub truncation: TruncationInfo,
    pub flags: Vec<String>,
    /// Largest mismatch between `lambda` and `-lambda` partners (symmetric problems).
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "report::real_opt")]
    pub pairing_defect: Option<f64>,
}

impl CountReport {
    pub fn converged(&self) -> bool {
        self.truncation.converged
    }

    pub fn values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.value()).collect()
    }
}

/// Endpoint offset for open-interval semantics.
pub fn endpoint_offset(a: f64, b: f64) -> f64 {
    1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Eigenvalues of the Dirichlet problem for `B_side` in `(lo, hi)` at one truncation.
pub fn half_line_eigenvalues_at(
    engine: &WeylEngine,
    side: Side,
    lo: f64,
    hi: f64,
    trunc: Truncation,
    tol: f64,
) -> Result<Vec<Enclosure>> {
    if !(lo < hi) {
        return Ok(Vec::new());
    }
    match trunc {
        Truncation::Finite(x) => {
            let l_lo = engine.lifted(side, lo, x)?;
            let l_hi = engine.lifted(side, hi, x)?;
            let k_first = (l_lo / PI).floor() as i64 + 1;
            let mut out = Vec::new();
            let mut left = lo;
            let mut f_left_base = l_lo;
            let mut k = k_first;
            while (k as f64) * PI < l_hi {
                let target = k as f64 * PI;
                let br = roots::refine(
                    |mu| Ok(engine.lifted(side, mu, x)? - target),
                    left,
                    hi,
                    f_left_base - target,
                    l_hi - target,
                    tol,
                )?;
                out.push(widen(br.lo, br.hi, tol));
                left = br.hi;
                f_left_base = engine.lifted(side, left, x)?;
                k += 1;
            }
            Ok(out)
        }
        Truncation::Floquet => floquet_poles(engine, side, lo, hi, tol),
    }
}

/// A root hit exactly is given a small two-sided enclosure so that both
/// ends lie strictly on either side of it.
pub(crate) fn widen(lo: f64, hi: f64, tol: f64) -> Enclosure {
    if lo < hi {
        Enclosure::new(lo, hi)
    } else {
        let d = (0.25 * tol).min(1e-13 * lo.abs().max(1.0));
        Enclosure::new(lo - d, hi + d)
    }
}

/// Poles of `m_side` in a spectral gap of a periodic problem, located by
/// lifting the Floquet direction on a grid.
fn floquet_poles(engine: &WeylEngine, side: Side, lo: f64, hi: f64, tol: f64) -> Result<Vec<Enclosure>> {
    let n = FLOQUET_GRID;
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let thetas: Vec<f64> = grid
        .iter()
        .map(|&mu| engine.floquet_direction(side, mu))
        .collect::<Result<_>>()?;
    // m_plus increases (direction turns forward), m_minus decreases.
    let forward = side == Side::Plus;
    let step = |from: f64, to: f64| -> f64 {
        if forward {
            (to - from).rem_euclid(PI)
        } else {
            -(from - to).rem_euclid(PI)
        }
    };
    let mut lifted = vec![thetas[0]];
    for i in 1..=n {
        let prev = lifted[i - 1];
        lifted.push(prev + step(thetas[i - 1], thetas[i]));
    }
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (lifted[i].min(lifted[i + 1]), lifted[i].max(lifted[i + 1]));
        let k_lo = ((a - FRAC_PI_2) / PI).floor() as i64 + 1;
        let mut k = k_lo;
        while FRAC_PI_2 + k as f64 * PI < b {
            let target = FRAC_PI_2 + k as f64 * PI;
            let base = lifted[i];
            let anchor = thetas[i];
            let f = |mu: f64| -> Result<f64> {
                let th = engine.floquet_direction(side, mu)?;
                let v = base + step(anchor, th) - target;
                Ok(if forward { v } else { -v })
            };
            let f0 = if forward { base - target } else { target - base };
            let f1 = if forward { lifted[i + 1] - target } else { target - lifted[i + 1] };
            let br = roots::refine(f, grid[i], grid[i + 1], f0, f1, tol)?;
            out.push(widen(br.lo, br.hi, tol));
            k += 1;
        }
    }
    Ok(out)
}

/// Runs `pass` over the truncation schedule until two consecutive passes
/// agree. Returns the last pass and the bookkeeping.
pub(crate) fn run_passes<T>(
    engine: &WeylEngine,
    mut pass: impl FnMut(Truncation) -> Result<T>,
    count: impl Fn(&T) -> usize,
    same: impl Fn(&T, &T) -> bool,
) -> Result<(T, TruncationInfo)> {
    let schedule = engine.schedule();
    let mut passes = Vec::new();
    let mut previous: Option<T> = None;
    for trunc in schedule {
        let result = pass(trunc)?;
        passes.push(PassInfo { x: trunc.half_width(), count: count(&result) });
        let done = match (&previous, trunc) {
            (_, Truncation::Floquet) => true,
            (Some(prev), _) => same(prev, &result),
            (None, _) => false,
        };
        if done {
            let info = TruncationInfo {
                mode: if trunc == Truncation::Floquet { "floquet" } else { "dirichlet" },
                x_used: trunc.half_width(),
                passes,
                converged: true,
            };
            return Ok((result, info));
        }
        previous = Some(result);
    }
    let last = previous.ok_or_else(|| Error::InvalidProblem("empty truncation schedule".into()))?;
    let x_used = passes.last().and_then(|p| p.x);
    Ok((last, TruncationInfo { mode: "dirichlet", x_used, passes, converged: false }))
}

/// Agreement of eigenvalue lists between two truncations.
pub(crate) fn lists_agree(a: &[Enclosure], b: &[Enclosure], tol: f64, rel: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            let scale = x.value().abs().max(1.0);
            (x.value() - y.value()).abs() <= (2.0 * tol).max(rel * scale)
        })
}

/// Whether `(a, b)` may be scanned for isolated eigenvalues.
pub(crate) fn check_gap(problem: &IndefiniteProblem, a: f64, b: f64) -> Result<()> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidProblem(format!("interval ({a}, {b}) must satisfy a < b")));
    }
    if problem.ess_model.interval_is_gap(a, b) == Some(false) {
        return Err(Error::InvalidProblem(format!(
            "interval ({a}, {b}) meets the essential spectrum"
        )));
    }
    Ok(())
}

pub(crate) fn endpoint_flags(problem: &IndefiniteProblem, a: f64, b: f64, eigs: &[Enclosure]) -> Vec<String> {
    let mut flags = Vec::new();
    for (name, x) in [("lower", a), ("upper", b)] {
        if problem.ess_model.distance(x) == Some(0.0) {
            flags.push(format!("{name}_endpoint_in_essential_spectrum"));
        }
        if eigs.iter().any(|e| (e.value() - x).abs() <= 1e-6 * x.abs().max(1.0)) {
            flags.push(format!("eigenvalue_near_{name}_endpoint"));
        }
    }
    flags
}

/// Eigenvalues of the underlying `B_side` in the open interval `(a, b)`.
fn half_line_report(
    engine: &WeylEngine,
    side: Side,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(Vec<Enclosure>, TruncationInfo)> {
    check_gap(engine.problem, a, b)?;
    let eps = endpoint_offset(a, b);
    let rel = engine.problem.truncation.tol;
    run_passes(
        engine,
        |trunc| half_line_eigenvalues_at(engine, side, a + eps, b - eps, trunc, tol),
        |v| v.len(),
        |x, y| lists_agree(x, y, tol, rel),
    )
}

pub(crate) fn finish(
    operator: OperatorTag,
    problem: &IndefiniteProblem,
    intervals: Vec<(f64, f64)>,
    parts: Vec<PartCount>,
    mut eigenvalues: Vec<Enclosure>,
    truncation: TruncationInfo,
) -> CountReport {
    eigenvalues.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let count = eigenvalues.len();
    let mut flags = Vec::new();
    for &(a, b) in &intervals {
        flags.extend(endpoint_flags(problem, a, b, &eigenvalues));
    }
    if !truncation.converged {
        flags.push("truncation_not_converged".into());
        if count >= N_MAX {
            flags.push("count_at_least_n_max".into());
        }
    }
    CountReport {
        operator,
        intervals,
        count,
        count_is_lower_bound: !truncation.converged,
        parts,
        eigenvalues,
        truncation,
        flags,
        pairing_defect: None,
    }
}

pub(crate) fn merge_truncation(a: TruncationInfo, b: TruncationInfo) -> TruncationInfo {
    let x_used = match (a.x_used, b.x_used) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    };
    let mut passes = a.passes;
    passes.extend(b.passes);
    TruncationInfo { mode: a.mode, x_used, passes, converged: a.converged && b.converged }
}

/// Number of eigenvalues of `op` below `lambda`. For `-B-` this is the
/// number of eigenvalues in `(lambda, 0)`.
#[derive(Debug, Clone, Serialize)]
pub struct BelowCount {
    pub count: usize,
    pub converged: bool,
    pub truncation: TruncationInfo,
}

pub fn count_below(op: HalfLineOperator, problem: &IndefiniteProblem, lambda: f64) -> Result<BelowCount> {
    let engine = WeylEngine::new(problem);
    count_below_with(&engine, op, lambda)
}

pub fn count_below_with(engine: &WeylEngine, op: HalfLineOperator, lambda: f64) -> Result<BelowCount> {
    if engine.is_periodic() {
        return Err(Error::NotApplicable(
            "counts from the bottom of the spectrum need a spectrum without bands below".into(),
        ));
    }
    let mu = if op.sign < 0 { -lambda } else { lambda };
    if let Some(d) = engine.problem.ess_model.distance(mu) {
        if d < engine.margin {
            return Err(Error::EssentialSpectrumProximity { lambda, margin: engine.margin });
        }
    }
    let (count, truncation) = run_passes(
        engine,
        |trunc| match trunc {
            Truncation::Finite(x) => engine.count_below_at(op.side, mu, x),
            Truncation::Floquet => unreachable!("periodic problems are rejected above"),
        },
        |c| *c,
        |a, b| a == b,
    )?;
    Ok(BelowCount { count, converged: truncation.converged, truncation })
}

/// `n_op(a, b)` with located eigenvalues.
pub fn count_in_interval(
    op: HalfLineOperator,
    problem: &IndefiniteProblem,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<CountReport> {
    let engine = WeylEngine::new(problem);
    count_in_interval_with(&engine, op, a, b, tol)
}

pub fn count_in_interval_with(
    engine: &WeylEngine,
    op: HalfLineOperator,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<CountReport> {
    let (lo, hi) = op.reflect(a, b);
    let (eigs, truncation) = half_line_report(engine, op.side, lo, hi, tol)?;
    let eigs: Vec<Enclosure> = if op.sign < 0 { eigs.iter().map(Enclosure::negated).collect() } else { eigs };
    let parts = vec![PartCount { interval: (a, b), count: eigs.len() }];
    Ok(finish(op.tag(), engine.problem, vec![(a, b)], parts, eigs, truncation))
}

/// Sorted eigenvalue enclosures of `op` in `(a, b)`, each at most `tol` wide.
pub fn locate_eigenvalues(
    op: HalfLineOperator,
    problem: &IndefiniteProblem,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Vec<Enclosure>> {
    Ok(count_in_interval(op, problem, a, b, tol)?.eigenvalues)
}

/// Intervals an operator tag refers to. With `a >= 0` the indefinite
/// operators `JA` and `JB` use the union `(-b, -a) u (a, b)`.
pub fn interpret_interval(tag: OperatorTag, a: f64, b: f64) -> Vec<(f64, f64)> {
    match tag {
        OperatorTag::JA | OperatorTag::JB if a >= 0.0 => vec![(-b, -a), (a, b)],
        _ => vec![(a, b)],
    }
}

/// Counts for `B+`, `-B-`, `B` and `JB`.
pub fn count_half_line_operator(
    engine: &WeylEngine,
    tag: OperatorTag,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<CountReport> {
    match tag {
        OperatorTag::Bplus => count_in_interval_with(engine, HalfLineOperator::B_PLUS, a, b, tol),
        OperatorTag::Bminusneg => count_in_interval_with(engine, HalfLineOperator::B_MINUS_NEG, a, b, tol),
        OperatorTag::B | OperatorTag::JB => {
            let intervals = interpret_interval(tag, a, b);
            let mut eigs = Vec::new();
            let mut parts = Vec::new();
            let mut truncation: Option<TruncationInfo> = None;
            for &(lo, hi) in &intervals {
                let ops: &[HalfLineOperator] = if tag == OperatorTag::B {
                    &[HalfLineOperator::B_PLUS, HalfLineOperator::B_MINUS]
                } else {
                    &[HalfLineOperator::B_PLUS, HalfLineOperator::B_MINUS_NEG]
                };
                let mut part = 0;
                for op in ops {
                    // Skip the half of a union on which the summand has no spectrum.
                    let (_, rhi) = op.reflect(lo, hi);
                    if rhi <= 0.0 {
                        continue;
                    }
                    let r = count_in_interval_with(engine, *op, lo, hi, tol)?;
                    part += r.count;
                    eigs.extend(r.eigenvalues);
                    truncation = Some(match truncation {
                        None => r.truncation,
                        Some(t) => merge_truncation(t, r.truncation),
                    });
                }
                parts.push(PartCount { interval: (lo, hi), count: part });
            }
            let truncation = truncation.unwrap_or(TruncationInfo {
                mode: if engine.is_periodic() { "floquet" } else { "dirichlet" },
                x_used: None,
                passes: Vec::new(),
                converged: true,
            });
            Ok(finish(tag, engine.problem, intervals, parts, eigs, truncation))
        }
        OperatorTag::A | OperatorTag::JA => Err(Error::NotApplicable(format!(
            "{tag} counts are computed from the matching functions"
        ))),
    }
}
