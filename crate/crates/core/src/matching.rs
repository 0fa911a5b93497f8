//! Matching functions and their zero/pole structure.
//!
//! `D(l) = m+(l) - m-(l)` detects eigenvalues of `A`, `M(l) = m+(l) - m-(-l)`
//! detects eigenvalues of `JA`. Both are strictly increasing between poles,
//! so a gap splits into pole-bounded cells with at most one zero each.
//!
//! On the negative half-line `M` is scanned through `G(t) = M(-t)`, which is
//! increasing in `t` and has its poles at the eigenvalues of `B-`. This keeps
//! every scan in a coordinate `t` in which the function increases and the
//! poles are Dirichlet eigenvalues of the half-line problems.

use std::f64::consts::PI;

use serde::Serialize;

use crate::coefficients::IndefiniteProblem;
use crate::count::{
    self, check_gap, endpoint_offset, finish, half_line_eigenvalues_at, lists_agree, run_passes, CountReport,
    OperatorTag, PartCount, TruncationInfo,
};
use crate::error::{Error, Result};
use crate::ode::Side;
use crate::report::{self, Enclosure};
use crate::roots;
use crate::weyl::{reduce_pi, Truncation, WeylEngine};

/// Interior sign samples per cell.
pub const CELL_SAMPLES: usize = 8;

/// Grid size of a monotonicity profile.
pub const PROFILE_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatchingKind {
    #[serde(rename = "D_for_A")]
    D,
    #[serde(rename = "M_for_JA")]
    M,
}

impl std::str::FromStr for MatchingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" | "D_for_A" => Ok(MatchingKind::D),
            "M" | "M_for_JA" => Ok(MatchingKind::M),
            other => Err(Error::Parse(format!("unknown matching function `{other}`"))),
        }
    }
}

/// Which half of the `M` scan, or the single `D` scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Half {
    Pos,
    Neg,
}

/// Value of a matching function at one point.
#[derive(Debug, Clone, Serialize)]
pub struct MatchingValue {
    pub kind: MatchingKind,
    #[serde(serialize_with = "report::real")]
    pub lambda: f64,
    /// `+-inf` at a pole.
    #[serde(serialize_with = "report::real")]
    pub value: f64,
    /// Angle between the two boundary directions, in `(-pi/2, pi/2]`.
    #[serde(serialize_with = "report::real")]
    pub defect: f64,
    #[serde(serialize_with = "report::real")]
    pub theta_plus: f64,
    #[serde(serialize_with = "report::real")]
    pub theta_minus: f64,
    pub pole: bool,
    #[serde(serialize_with = "report::real")]
    pub error_estimate: f64,
}

fn tan_or_inf(theta: f64) -> f64 {
    let c = theta.cos();
    if c.abs() < 1e-300 {
        f64::INFINITY
    } else {
        theta.sin() / c
    }
}

fn signed_defect(alpha: f64, beta: f64) -> f64 {
    let d = reduce_pi(alpha - beta);
    if d > 0.5 * PI {
        d - PI
    } else {
        d
    }
}

/// `D(lambda)` or `M(lambda)` with the problem's truncation policy.
pub fn eval_matching(problem: &IndefiniteProblem, kind: MatchingKind, lambda: f64) -> Result<MatchingValue> {
    eval_matching_with(&WeylEngine::new(problem), kind, lambda)
}

pub fn eval_matching_with(engine: &WeylEngine, kind: MatchingKind, lambda: f64) -> Result<MatchingValue> {
    let mu_minus = match kind {
        MatchingKind::D => lambda,
        MatchingKind::M => -lambda,
    };
    let plus = engine.m(Side::Plus, lambda)?;
    let minus = engine.m(Side::Minus, mu_minus)?;
    let tp = tan_or_inf(plus.theta);
    let tm = tan_or_inf(minus.theta);
    let pole = tp.is_infinite() || tm.is_infinite();
    let value = if pole {
        if tp.is_infinite() && tm.is_infinite() {
            f64::NAN
        } else if tp.is_infinite() {
            tp
        } else {
            -tm
        }
    } else {
        tp - tm
    };
    Ok(MatchingValue {
        kind,
        lambda,
        value,
        defect: signed_defect(plus.theta, minus.theta),
        theta_plus: plus.theta,
        theta_minus: minus.theta,
        pole,
        error_estimate: plus.error_estimate + minus.error_estimate,
    })
}

/// Fixed-truncation evaluator in the scan coordinate `t`.
struct Scanner<'a, 'p> {
    engine: &'a WeylEngine<'p>,
    kind: MatchingKind,
    half: Half,
    trunc: Truncation,
}

impl Scanner<'_, '_> {
    fn params(&self, t: f64) -> (f64, f64) {
        match (self.kind, self.half) {
            (MatchingKind::D, _) => (t, t),
            (MatchingKind::M, Half::Pos) => (t, -t),
            (MatchingKind::M, Half::Neg) => (-t, t),
        }
    }

    fn angles(&self, t: f64) -> Result<(f64, f64)> {
        let (mp, mm) = self.params(t);
        Ok((
            self.engine.direction(Side::Plus, mp, self.trunc)?,
            self.engine.direction(Side::Minus, mm, self.trunc)?,
        ))
    }

    /// `f(t)` as `tan a - tan b`, `+-inf` at poles.
    fn value(&self, t: f64) -> Result<f64> {
        let (a, b) = self.angles(t)?;
        Ok(tan_or_inf(a) - tan_or_inf(b))
    }

    /// Same sign as `f`, continuous inside a cell.
    fn smooth(&self, t: f64) -> Result<f64> {
        let (a, b) = self.angles(t)?;
        Ok((a - b).sin() * a.cos().signum() * b.cos().signum())
    }

    fn pole_sides(&self) -> &'static [Side] {
        match (self.kind, self.half) {
            (MatchingKind::D, _) => &[Side::Plus, Side::Minus],
            (MatchingKind::M, Half::Pos) => &[Side::Plus],
            (MatchingKind::M, Half::Neg) => &[Side::Minus],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleSource {
    /// Eigenvalue of `B+`.
    Plus,
    /// Eigenvalue of `B-` (or of `-B-` for `M` on the negative axis).
    Minus,
    /// Shared by both half-line problems.
    Common,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoleRecord {
    pub enclosure: Enclosure,
    pub source: PoleSource,
}

/// Sign samples of one pole-bounded cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellCertificate {
    #[serde(serialize_with = "report::real")]
    pub lo: f64,
    #[serde(serialize_with = "report::real")]
    pub hi: f64,
    /// Signs at the cell ends and interior samples, in the direction of increasing scan coordinate.
    pub signs: String,
    pub zero: Option<Enclosure>,
}

#[derive(Debug, Clone)]
struct HalfScan {
    zeros: Vec<Enclosure>,
    poles: Vec<PoleRecord>,
    cells: Vec<CellCertificate>,
}

fn sign_char(v: f64) -> char {
    if v > 0.0 {
        '+'
    } else if v < 0.0 {
        '-'
    } else {
        '0'
    }
}

/// Poles of the scanned function in `(lo, hi)`, with common poles merged.
fn scan_poles(s: &Scanner, lo: f64, hi: f64, tol: f64) -> Result<Vec<PoleRecord>> {
    let mut poles = Vec::new();
    for &side in s.pole_sides() {
        let source = match side {
            Side::Plus => PoleSource::Plus,
            Side::Minus => PoleSource::Minus,
        };
        for e in half_line_eigenvalues_at(s.engine, side, lo, hi, s.trunc, tol)? {
            poles.push(PoleRecord { enclosure: e, source });
        }
    }
    poles.sort_by(|a, b| a.enclosure.lo.total_cmp(&b.enclosure.lo));
    let mut merged: Vec<PoleRecord> = Vec::with_capacity(poles.len());
    for p in poles {
        if let Some(last) = merged.last_mut() {
            if last.source != p.source && last.enclosure.touches(&p.enclosure, 2.0 * tol) {
                last.enclosure = Enclosure::new(last.enclosure.lo.min(p.enclosure.lo), last.enclosure.hi.max(p.enclosure.hi));
                last.source = PoleSource::Common;
                continue;
            }
        }
        merged.push(p);
    }
    Ok(merged)
}

fn scan_half(s: &Scanner, lo: f64, hi: f64, samples: usize, tol: f64) -> Result<HalfScan> {
    let poles = scan_poles(s, lo, hi, tol)?;
    let mut bounds = vec![(lo, false)];
    for p in &poles {
        bounds.push((p.enclosure.lo, true));
        bounds.push((p.enclosure.hi, true));
    }
    bounds.push((hi, false));
    let mut zeros = Vec::new();
    let mut cells = Vec::new();
    for k in 0..bounds.len() / 2 {
        let (a, a_pole) = bounds[2 * k];
        let (b, b_pole) = bounds[2 * k + 1];
        if !(a < b) {
            return Err(Error::AlternationViolation {
                lo: a,
                hi: b,
                detail: "overlapping pole enclosures".into(),
            });
        }
        let n = if b - a < 16.0 * tol { 0 } else { samples };
        let grid: Vec<f64> = (0..=n + 1).map(|i| a + (b - a) * i as f64 / (n + 1) as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| s.smooth(t)).collect::<Result<_>>()?;
        let signs: String = vals.iter().map(|&v| sign_char(v)).collect();
        let violation = |detail: String| Error::AlternationViolation { lo: a, hi: b, detail };
        if a_pole && vals[0] >= 0.0 {
            return Err(violation(format!("expected -inf after pole, signs {signs}")));
        }
        if b_pole && vals[n + 1] <= 0.0 {
            return Err(violation(format!("expected +inf before pole, signs {signs}")));
        }
        let mut ups = Vec::new();
        for i in 0..=n {
            let (v0, v1) = (vals[i], vals[i + 1]);
            if v0 > 0.0 && v1 < 0.0 || v0 == 0.0 && i > 0 && vals[i - 1] > 0.0 && v1 < 0.0 {
                return Err(violation(format!("decreasing sign change, signs {signs}")));
            }
            if v0 < 0.0 && v1 >= 0.0 {
                ups.push(i);
            }
        }
        if vals[0] == 0.0 {
            ups.insert(0, 0);
        }
        if ups.len() > 1 {
            return Err(violation(format!("more than one zero in a cell, signs {signs}")));
        }
        let zero = match ups.first() {
            None => None,
            Some(&i) => {
                let br = roots::refine(|t| s.smooth(t), grid[i], grid[i + 1], vals[i], vals[i + 1], tol)?;
                Some(count::widen(br.lo, br.hi, tol))
            }
        };
        if let Some(z) = zero {
            zeros.push(z);
        }
        cells.push(CellCertificate { lo: a, hi: b, signs, zero });
    }
    Ok(HalfScan { zeros, poles, cells })
}

/// Pulls the ends of a scan inside the gap of a periodic problem, where the
/// computed band edges may be off by rounding. Returns the new ends and
/// whether they moved.
fn admissible_ends(s: &Scanner, lo: f64, hi: f64) -> Result<(f64, f64, bool)> {
    if s.trunc != Truncation::Floquet {
        return Ok((lo, hi, false));
    }
    let width = hi - lo;
    let mut moved = false;
    let mut step = |x: f64, dir: f64| -> Result<f64> {
        let mut d = 1e-12 * x.abs().max(1.0);
        let mut y = x;
        loop {
            match s.angles(y) {
                Ok(_) => return Ok(y),
                Err(Error::EssentialSpectrumProximity { .. }) if d < 0.1 * width => {
                    moved = true;
                    y = x + dir * d;
                    d *= 4.0;
                }
                Err(e) => return Err(e),
            }
        }
    };
    let a = step(lo, 1.0)?;
    let b = step(hi, -1.0)?;
    Ok((a, b, moved))
}

/// Zeros, poles and sign certificates of a matching function on an interval.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroPoleScan {
    pub kind: MatchingKind,
    #[serde(serialize_with = "report::real_pair")]
    pub interval: (f64, f64),
    pub zeros: Vec<Enclosure>,
    pub poles: Vec<PoleRecord>,
    pub cells: Vec<CellCertificate>,
    pub truncation: TruncationInfo,
    pub flags: Vec<String>,
}

impl ZeroPoleScan {
    /// Whether zeros and poles strictly alternate along the interval.
    pub fn alternates(&self) -> bool {
        let mut marks: Vec<(f64, bool)> = self.zeros.iter().map(|z| (z.value(), true)).collect();
        marks.extend(self.poles.iter().map(|p| (p.enclosure.value(), false)));
        marks.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Zero on the negative and positive axes are scanned separately; 0 itself is neither.
        let split = |v: &[(f64, bool)]| v.windows(2).all(|w| w[0].1 != w[1].1);
        if self.kind == MatchingKind::M {
            let neg: Vec<_> = marks.iter().copied().filter(|m| m.0 < 0.0).collect();
            let pos: Vec<_> = marks.iter().copied().filter(|m| m.0 > 0.0).collect();
            split(&neg) && split(&pos)
        } else {
            split(&marks)
        }
    }
}

/// Scan pieces in `t` for an interval in `lambda`.
fn pieces(kind: MatchingKind, lo: f64, hi: f64) -> Vec<(Half, f64, f64)> {
    match kind {
        MatchingKind::D => vec![(Half::Pos, lo, hi)],
        MatchingKind::M => {
            let mut v = Vec::new();
            if lo < 0.0 {
                v.push((Half::Neg, (-hi).max(0.0), -lo));
            }
            if hi > 0.0 {
                v.push((Half::Pos, lo.max(0.0), hi));
            }
            v
        }
    }
}

struct PassResult {
    scans: Vec<(Half, HalfScan)>,
    moved: bool,
}

fn to_lambda(half: Half, scan: &HalfScan) -> (Vec<Enclosure>, Vec<PoleRecord>, Vec<CellCertificate>) {
    match half {
        Half::Pos => (scan.zeros.clone(), scan.poles.clone(), scan.cells.clone()),
        Half::Neg => (
            scan.zeros.iter().rev().map(Enclosure::negated).collect(),
            scan.poles
                .iter()
                .rev()
                .map(|p| PoleRecord { enclosure: p.enclosure.negated(), source: p.source })
                .collect(),
            scan.cells
                .iter()
                .rev()
                .map(|c| CellCertificate { lo: -c.hi, hi: -c.lo, signs: c.signs.clone(), zero: c.zero.map(|z| z.negated()) })
                .collect(),
        ),
    }
}

fn run_scan(
    engine: &WeylEngine,
    kind: MatchingKind,
    pieces: &[(Half, f64, f64)],
    samples: usize,
    tol: f64,
) -> Result<(PassResult, TruncationInfo)> {
    let rel = engine.problem.truncation.tol;
    run_passes(
        engine,
        |trunc| {
            let mut scans = Vec::new();
            let mut moved = false;
            for &(half, lo, hi) in pieces {
                let s = Scanner { engine, kind, half, trunc };
                let (a, b, m) = admissible_ends(&s, lo, hi)?;
                moved |= m;
                scans.push((half, scan_half(&s, a, b, samples, tol)?));
            }
            Ok(PassResult { scans, moved })
        },
        |r| r.scans.iter().map(|(_, s)| s.zeros.len()).sum(),
        |x, y| {
            x.scans.iter().zip(&y.scans).all(|((_, a), (_, b))| {
                let pa: Vec<Enclosure> = a.poles.iter().map(|p| p.enclosure).collect();
                let pb: Vec<Enclosure> = b.poles.iter().map(|p| p.enclosure).collect();
                lists_agree(&a.zeros, &b.zeros, tol, rel) && lists_agree(&pa, &pb, tol, rel)
            })
        },
    )
}

/// Zeros and poles of `D` or `M` in the open interval `(a, b)`.
pub fn scan(problem: &IndefiniteProblem, kind: MatchingKind, a: f64, b: f64, tol: f64) -> Result<ZeroPoleScan> {
    scan_with(&WeylEngine::new(problem), kind, a, b, CELL_SAMPLES, tol)
}

pub fn scan_with(
    engine: &WeylEngine,
    kind: MatchingKind,
    a: f64,
    b: f64,
    samples: usize,
    tol: f64,
) -> Result<ZeroPoleScan> {
    let eps = endpoint_offset(a, b);
    let ps = pieces(kind, a + eps, b - eps);
    for &(_, lo, hi) in &ps {
        check_gap(engine.problem, lo, hi)?;
    }
    let (result, truncation) = run_scan(engine, kind, &ps, samples, tol)?;
    let mut zeros = Vec::new();
    let mut poles = Vec::new();
    let mut cells = Vec::new();
    for (half, s) in &result.scans {
        let (z, p, c) = to_lambda(*half, s);
        zeros.extend(z);
        poles.extend(p);
        cells.extend(c);
    }
    zeros.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    poles.sort_by(|x, y| x.enclosure.lo.total_cmp(&y.enclosure.lo));
    cells.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let mut flags = Vec::new();
    if result.moved {
        flags.push("endpoint_moved_inside_gap".into());
    }
    if !truncation.converged {
        flags.push("truncation_not_converged".into());
    }
    Ok(ZeroPoleScan { kind, interval: (a, b), zeros, poles, cells, truncation, flags })
}

/// Number of multiples of `pi` strictly between the oscillation angles of
/// the truncated full-line problem at `a` and `b`.
fn oscillation_count(engine: &WeylEngine, a: f64, b: f64, x: f64) -> Result<usize> {
    let phi = |l: f64| -> Result<f64> { Ok(engine.lifted(Side::Plus, l, x)? + engine.lifted(Side::Minus, l, x)?) };
    let (pa, pb) = (phi(a)?, phi(b)?);
    let k_lo = (pa / PI).floor() as i64 + 1;
    let k_hi = (pb / PI).ceil() as i64 - 1;
    Ok((k_hi - k_lo + 1).max(0) as usize)
}

/// Eigenvalues of `A` in `(a, b)`: zeros of `D` together with common poles
/// of `m+` and `m-`.
pub fn eigenvalues_a(problem: &IndefiniteProblem, a: f64, b: f64, tol: f64) -> Result<CountReport> {
    eigenvalues_a_with(&WeylEngine::new(problem), a, b, tol)
}

pub fn eigenvalues_a_with(engine: &WeylEngine, a: f64, b: f64, tol: f64) -> Result<CountReport> {
    let s = scan_with(engine, MatchingKind::D, a, b, CELL_SAMPLES, tol)?;
    let mut eigs = s.zeros.clone();
    eigs.extend(s.poles.iter().filter(|p| p.source == PoleSource::Common).map(|p| p.enclosure));
    let parts = vec![PartCount { interval: (a, b), count: eigs.len() }];
    let x_used = s.truncation.x_used;
    let mut report = finish(OperatorTag::A, engine.problem, vec![(a, b)], parts, eigs, s.truncation);
    report.flags.extend(s.flags.into_iter().filter(|f| f != "truncation_not_converged"));
    if let Some(x) = x_used {
        let eps = endpoint_offset(a, b);
        let n = oscillation_count(engine, a + eps, b - eps, x)?;
        if n != report.count {
            report.flags.push(format!("oscillation_count_mismatch: {n} vs {}", report.count));
        }
    }
    Ok(report)
}

/// Eigenvalues of `JA` on `(a, b)`; with `a >= 0` on `(-b, -a) u (a, b)`.
pub fn eigenvalues_ja(problem: &IndefiniteProblem, a: f64, b: f64, tol: f64) -> Result<CountReport> {
    eigenvalues_ja_with(&WeylEngine::new(problem), a, b, tol)
}

pub fn eigenvalues_ja_with(engine: &WeylEngine, a: f64, b: f64, tol: f64) -> Result<CountReport> {
    let intervals = count::interpret_interval(OperatorTag::JA, a, b);
    let eps = endpoint_offset(a, b);
    let ps: Vec<(Half, f64, f64)> = if a >= 0.0 {
        vec![(Half::Neg, a + eps, b - eps), (Half::Pos, a + eps, b - eps)]
    } else {
        pieces(MatchingKind::M, a + eps, b - eps)
    };
    for &(_, lo, hi) in &ps {
        check_gap(engine.problem, lo, hi)?;
    }
    let (result, truncation) = run_scan(engine, MatchingKind::M, &ps, CELL_SAMPLES, tol)?;
    let mut eigs = Vec::new();
    let mut per_half = Vec::new();
    for (half, s) in &result.scans {
        let (z, _, _) = to_lambda(*half, s);
        per_half.push((*half, s.zeros.clone()));
        eigs.extend(z);
    }
    let parts: Vec<PartCount> = intervals
        .iter()
        .map(|&(lo, hi)| PartCount {
            interval: (lo, hi),
            count: eigs.iter().filter(|e| e.value() > lo && e.value() < hi).count(),
        })
        .collect();
    let mut report = finish(OperatorTag::JA, engine.problem, intervals, parts, eigs, truncation);
    if result.moved {
        report.flags.push("endpoint_moved_inside_gap".into());
    }
    if engine.problem.symmetric && a >= 0.0 {
        let neg = &per_half[0].1;
        let pos = &per_half[1].1;
        if neg.len() != pos.len() {
            report.flags.push("symmetric_pairing_count_mismatch".into());
        } else {
            let defect = neg.iter().zip(pos).map(|(x, y)| (x.value() - y.value()).abs()).fold(0.0, f64::max);
            report.pairing_defect = Some(defect);
            let scale = pos.iter().map(|e| e.value().abs()).fold(1.0, f64::max);
            if defect > 10.0 * tol.max(engine.problem.truncation.tol * scale) {
                report.flags.push("symmetric_pairing_defect".into());
            }
        }
    }
    Ok(report)
}

/// Counts at one fixed truncation: `n_A(a, b)` and `n_JA` on
/// `(-b, -a)` and `(a, b)`, for `0 <= a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountsAt {
    pub n_a: usize,
    pub n_ja_negative: usize,
    pub n_ja_positive: usize,
}

pub fn counts_at(engine: &WeylEngine, a: f64, b: f64, trunc: Truncation, tol: f64) -> Result<CountsAt> {
    let eps = endpoint_offset(a, b);
    let (lo, hi) = (a + eps, b - eps);
    check_gap(engine.problem, lo, hi)?;
    let d = Scanner { engine, kind: MatchingKind::D, half: Half::Pos, trunc };
    let ds = scan_half(&d, lo, hi, CELL_SAMPLES, tol)?;
    let n_a = ds.zeros.len() + ds.poles.iter().filter(|p| p.source == PoleSource::Common).count();
    let mut n = [0usize; 2];
    for (k, half) in [Half::Neg, Half::Pos].into_iter().enumerate() {
        let s = Scanner { engine, kind: MatchingKind::M, half, trunc };
        n[k] = scan_half(&s, lo, hi, CELL_SAMPLES, tol)?.zeros.len();
    }
    Ok(CountsAt { n_a, n_ja_negative: n[0], n_ja_positive: n[1] })
}

/// Where `min sigma(A)` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundStateCase {
    /// A zero of `D`; the sharper estimates against `B+-` apply.
    ZeroOfD,
    /// A common pole of `m+` and `m-`.
    CommonPole,
    /// No eigenvalue below the essential spectrum.
    Essential,
}

/// The spectral gap `(-lambda_1, lambda_1)` of `JA` around zero.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    /// `min sigma(A)`.
    pub lambda_1: Enclosure,
    pub case: GroundStateCase,
    /// Eigenvalues of `JA` found in `(-lambda_1, lambda_1)`; zero when the gap property holds.
    pub inside_gap: usize,
    pub first_positive: Option<Enclosure>,
    pub first_negative: Option<Enclosure>,
    /// Bound for the first positive eigenvalue from `B+`.
    #[serde(serialize_with = "report::real_opt")]
    pub bound_plus: Option<f64>,
    /// Bound for the first negative eigenvalue from `-B-`.
    #[serde(serialize_with = "report::real_opt")]
    pub bound_minus: Option<f64>,
    pub estimates_hold: bool,
    pub holds: bool,
    pub truncation: TruncationInfo,
    pub flags: Vec<String>,
}

/// `min sigma(A)` and the eigenvalues of `JA` nearest zero. `upper` bounds
/// the scanned range: `min sigma_ess(A)` unless given.
pub fn gap_of_ja(problem: &IndefiniteProblem, tol: f64) -> Result<GapReport> {
    let engine = WeylEngine::new(problem);
    let upper = problem.ess_model.min_essential().ok_or_else(|| {
        Error::NotApplicable("the gap around zero of a periodic problem is computed from its band edges".into())
    })?;
    gap_of_ja_with(&engine, upper, tol)
}

pub fn gap_of_ja_with(engine: &WeylEngine, upper: f64, tol: f64) -> Result<GapReport> {
    let a_report = eigenvalues_a_with(engine, 0.0, upper, tol)?;
    let d_scan = scan_with(engine, MatchingKind::D, 0.0, upper, CELL_SAMPLES, tol)?;
    let (lambda_1, case) = match a_report.eigenvalues.first() {
        None => (Enclosure::point(upper), GroundStateCase::Essential),
        Some(e) => {
            let common = d_scan
                .poles
                .iter()
                .any(|p| p.source == PoleSource::Common && p.enclosure.touches(e, 0.0));
            (*e, if common { GroundStateCase::CommonPole } else { GroundStateCase::ZeroOfD })
        }
    };
    let ja = eigenvalues_ja_with(engine, 0.0, upper, tol)?;
    let slack = 2.0 * tol;
    let inside_gap = ja.eigenvalues.iter().filter(|e| e.value().abs() < lambda_1.lo - slack).count();
    let first_positive = ja.eigenvalues.iter().find(|e| e.value() > 0.0).copied();
    let first_negative = ja.eigenvalues.iter().rev().find(|e| e.value() < 0.0).copied();

    let skip = if case == GroundStateCase::CommonPole { 1 } else { 0 };
    let bplus = half_line_list(engine, Side::Plus, upper, tol)?;
    let bminus = half_line_list(engine, Side::Minus, upper, tol)?;
    let bound_plus = bplus.get(skip).map(|e| e.value()).or(Some(upper));
    let bound_minus = bminus.get(skip).map(|e| -e.value()).or(Some(-upper));
    let mut estimates_hold = true;
    if case != GroundStateCase::Essential {
        if let (Some(z), Some(bp)) = (first_positive, bound_plus) {
            estimates_hold &= z.lo <= bp + slack;
        }
        if let (Some(z), Some(bm)) = (first_negative, bound_minus) {
            estimates_hold &= z.hi >= bm - slack;
        }
    }
    let mut flags = a_report.flags.clone();
    flags.extend(ja.flags.iter().cloned());
    flags.sort();
    flags.dedup();
    let truncation = count::merge_truncation(a_report.truncation, ja.truncation);
    Ok(GapReport {
        lambda_1,
        case,
        inside_gap,
        first_positive,
        first_negative,
        bound_plus,
        bound_minus,
        estimates_hold,
        holds: inside_gap == 0 && estimates_hold,
        truncation,
        flags,
    })
}

fn half_line_list(engine: &WeylEngine, side: Side, upper: f64, tol: f64) -> Result<Vec<Enclosure>> {
    let op = match side {
        Side::Plus => count::HalfLineOperator::B_PLUS,
        Side::Minus => count::HalfLineOperator::B_MINUS,
    };
    Ok(count::count_in_interval_with(engine, op, 0.0, upper, tol)?.eigenvalues)
}

/// Strict increase of the scanned function on a grid, checked separately on
/// each pole-free segment.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityProfile {
    pub kind: MatchingKind,
    #[serde(serialize_with = "report::real_pair")]
    pub interval: (f64, f64),
    pub points: usize,
    pub segments: usize,
    pub violations: usize,
    /// Smallest increment of the scan coordinate function between neighbours.
    #[serde(serialize_with = "report::real")]
    pub min_increment: f64,
    pub monotone: bool,
}

/// Monotonicity of `D` on `(a, b)`, or of `M` with `t -> M(t)` increasing on
/// the positive part and decreasing on the negative part.
pub fn monotonicity_profile(
    engine: &WeylEngine,
    kind: MatchingKind,
    a: f64,
    b: f64,
    points: usize,
) -> Result<MonotonicityProfile> {
    let eps = endpoint_offset(a, b);
    let trunc = *engine.schedule().last().ok_or_else(|| Error::InvalidProblem("empty truncation schedule".into()))?;
    let mut segments = 0;
    let mut violations = 0;
    let mut min_increment = f64::INFINITY;
    let mut total = 0;
    for (half, lo, hi) in pieces(kind, a + eps, b - eps) {
        let s = Scanner { engine, kind, half, trunc };
        let (lo, hi, _) = admissible_ends(&s, lo, hi)?;
        let poles = scan_poles(&s, lo, hi, 1e-10)?;
        let n = points.max(2);
        let mut run: Vec<f64> = Vec::new();
        let mut flush = |run: &mut Vec<f64>| {
            if !run.is_empty() {
                segments += 1;
                for w in run.windows(2) {
                    let d = w[1] - w[0];
                    min_increment = min_increment.min(d);
                    if !(d > 0.0) {
                        violations += 1;
                    }
                }
                run.clear();
            }
        };
        let mut next_pole = 0;
        for i in 0..n {
            let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            while next_pole < poles.len() && poles[next_pole].enclosure.hi < t {
                next_pole += 1;
                flush(&mut run);
            }
            if next_pole < poles.len() && poles[next_pole].enclosure.contains(t) {
                continue;
            }
            let v = s.value(t)?;
            if v.is_finite() {
                run.push(v);
                total += 1;
            }
        }
        flush(&mut run);
    }
    Ok(MonotonicityProfile {
        kind,
        interval: (a, b),
        points: total,
        segments,
        violations,
        min_increment,
        monotone: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_problem, catalog};

    fn pt(kappa: u32) -> IndefiniteProblem {
        build_problem(&catalog::poschl_teller(kappa)).unwrap()
    }

    #[test]
    fn constant_case_matching_value() {
        let p = build_problem(&catalog::constant(1.0)).unwrap();
        // m+(l) = -sqrt(1 - l), m-(mu) = sqrt(1 - mu).
        let v = eval_matching(&p, MatchingKind::M, 0.5).unwrap();
        let want = -(0.5f64).sqrt() - (1.5f64).sqrt();
        assert!((v.value - want).abs() < 1e-7, "{} vs {want}", v.value);
        let d = eval_matching(&p, MatchingKind::D, -3.0).unwrap();
        assert!((d.value + 4.0).abs() < 1e-7, "{}", d.value);
    }

    #[test]
    fn sech2_a_eigenvalues() {
        let p = pt(2);
        let r = eigenvalues_a(&p, 0.0, 9.0, 1e-10).unwrap();
        let v = r.values();
        assert_eq!(v.len(), 2, "{v:?}");
        assert!((v[0] - 5.0).abs() < 1e-7 && (v[1] - 8.0).abs() < 1e-7, "{v:?}");
        assert!(r.flags.iter().all(|f| !f.starts_with("oscillation")), "{:?}", r.flags);
    }

    #[test]
    fn sech2_ja_pairs() {
        let p = pt(2);
        let r = eigenvalues_ja(&p, 0.0, 9.0, 1e-10).unwrap();
        assert_eq!(r.parts.iter().map(|x| x.count).collect::<Vec<_>>(), vec![1, 1], "{:?}", r.values());
        assert!(r.pairing_defect.unwrap() < 1e-8);
        let s = scan(&p, MatchingKind::M, -9.0, 9.0, 1e-10).unwrap();
        assert!(s.alternates());
        assert_eq!(s.zeros.len(), 2);
    }

    #[test]
    fn gap_contains_no_ja_eigenvalue() {
        let g = gap_of_ja(&pt(3), 1e-10).unwrap();
        assert!((g.lambda_1.value() - 7.0).abs() < 1e-7, "{:?}", g.lambda_1);
        assert!(g.holds, "{g:?}");
    }

    #[test]
    fn profile_is_monotone() {
        let p = pt(2);
        let e = WeylEngine::new(&p);
        let m = monotonicity_profile(&e, MatchingKind::M, -9.0, 9.0, 60).unwrap();
        assert!(m.monotone && m.segments >= 2, "{m:?}");
    }
}
