//! Band structure of periodic problems from the Floquet discriminant
//! `Delta(lambda) = trace` of the period map, and the count audit for the
//! symmetric gap unions of `JA`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::coefficients::IndefiniteProblem;
use crate::count::DEFAULT_TOL;
use crate::error::{Error, Result};
use crate::matching::{eigenvalues_ja_with, gap_of_ja_with};
use crate::ode::{self, OdeOptions};
use crate::report::{self, Enclosure};
use crate::roots;
use crate::theorems::{verdict_for, TheoremId, TheoremReport};
use crate::weyl::WeylEngine;

/// Default upper end of the scan.
pub const DEFAULT_LAMBDA_MAX: f64 = 100.0;

/// Gaps reported when no upper end is given.
pub const DEFAULT_GAPS: usize = 4;

/// `|Delta| - 2` at an extremum below this closes the gap.
pub const CLOSED_GAP_TOL: f64 = 1e-12;

const GRID: usize = 2000;
const EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// `Delta = 2`.
    Periodic,
    /// `Delta = -2`.
    Antiperiodic,
}

#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    /// `lambda_k` for periodic, `mu_k` for antiperiodic edges.
    pub label: String,
    pub kind: EdgeKind,
    pub enclosure: Enclosure,
    #[serde(serialize_with = "report::real")]
    pub delta: f64,
    /// Double root of `Delta -+ 2` where two bands touch.
    pub double: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Gap {
    pub index: usize,
    pub lower: Enclosure,
    pub upper: Enclosure,
    pub kind: EdgeKind,
    pub closed: bool,
}

impl Gap {
    /// The open gap, shrunk to lie strictly between the edge enclosures.
    pub fn interior(&self) -> (f64, f64) {
        (self.lower.hi, self.upper.lo)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandStructure {
    #[serde(serialize_with = "report::real")]
    pub period: f64,
    #[serde(serialize_with = "report::real")]
    pub lambda_max: f64,
    pub edges: Vec<Edge>,
    #[serde(serialize_with = "report::real_pairs")]
    pub bands: Vec<(f64, f64)>,
    pub gaps: Vec<Gap>,
    /// `min sigma(A)`, the lowest periodic edge.
    pub lowest: Enclosure,
    /// Largest `||Delta(edge)| - 2|`.
    #[serde(serialize_with = "report::real")]
    pub edge_residual: f64,
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

impl BandStructure {
    /// Gaps that are open, in increasing order.
    pub fn open_gaps(&self) -> impl Iterator<Item = &Gap> {
        self.gaps.iter().filter(|g| !g.closed)
    }

    /// `lambda,delta` rows of the sampled discriminant.
    pub fn write_delta_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lambda,delta")?;
        for (l, d) in &self.samples {
            writeln!(out, "{},{}", report::format_real(*l), report::format_real(*d))?;
        }
        Ok(())
    }
}

/// Floquet discriminant at `lambda` over the period starting at `c`.
pub fn discriminant(problem: &IndefiniteProblem, lambda: f64) -> Result<f64> {
    discriminant_with(problem, lambda, &OdeOptions::tight())
}

pub fn discriminant_with(problem: &IndefiniteProblem, lambda: f64, opts: &OdeOptions) -> Result<f64> {
    Ok(ode::period_map_with(problem, lambda, problem.c, opts)?.trace())
}

/// Location of an extremum of `Delta` in `[lo, hi]` by bisection on the
/// sign of a central difference.
fn refine_extremum(problem: &IndefiniteProblem, lo: f64, hi: f64, maximum: bool) -> Result<f64> {
    let slope = |x: f64| -> Result<f64> {
        let d = 1e-6 * x.abs().max(1.0);
        Ok(discriminant(problem, x + d)? - discriminant(problem, x - d)?)
    };
    let (mut a, mut b) = (lo, hi);
    for _ in 0..60 {
        if b - a <= 1e-9 * a.abs().max(1.0) {
            break;
        }
        let m = 0.5 * (a + b);
        let s = slope(m)?;
        // Left of a maximum the slope is positive.
        if (s > 0.0) == maximum {
            a = m;
        } else {
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    // The central difference is unreliable in the last few digits; keep
    // whichever nearby sample is most extreme.
    let mut best = (m, discriminant(problem, m)?);
    for x in [a, b] {
        let v = discriminant(problem, x)?;
        if (v > best.1) == maximum && v != best.1 {
            best = (x, v);
        }
    }
    Ok(best.0)
}

/// Roots of `Delta -+ 2` below `lambda_max`, classified into edges, bands
/// and gaps. Without `lambda_max` the scan covers `(0, 100]` and keeps the
/// first four gaps.
pub fn band_edges(problem: &IndefiniteProblem, lambda_max: Option<f64>) -> Result<BandStructure> {
    let period = problem
        .period()
        .ok_or_else(|| Error::NotApplicable("band edges need a periodic_bands essential spectrum model".into()))?;
    let mut hi = lambda_max.unwrap_or(DEFAULT_LAMBDA_MAX);
    if !(hi > 0.0) {
        return Err(Error::InvalidProblem(format!("lambda_max must be positive, got {hi}")));
    }
    let d0 = discriminant(problem, 0.0)?;
    if !(d0 > 2.0) {
        return Err(Error::InvalidProblem(format!(
            "Delta(0) = {d0} <= 2: the spectrum of A is not bounded away from zero"
        )));
    }
    // Extend the range until it ends inside a band.
    let mut d_hi = discriminant(problem, hi)?;
    let mut guard = 0;
    while d_hi.abs() >= 2.0 && guard < 50 {
        hi *= 1.05;
        d_hi = discriminant(problem, hi)?;
        guard += 1;
    }
    let grid: Vec<f64> = (0..=GRID).map(|i| hi * i as f64 / GRID as f64).collect();
    let values: Vec<f64> = grid.par_iter().map(|&l| discriminant(problem, l)).collect::<Result<_>>()?;

    // Monotone pieces of Delta between refined extrema.
    let mut breaks: Vec<(f64, f64)> = vec![(0.0, values[0])];
    for i in 1..GRID {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        let is_max = b >= a && b > c;
        let is_min = b <= a && b < c;
        if is_max || is_min {
            let x = refine_extremum(problem, grid[i - 1], grid[i + 1], is_max)?;
            breaks.push((x, discriminant(problem, x)?));
        }
    }
    breaks.push((hi, d_hi));

    let mut roots: Vec<(f64, EdgeKind, bool)> = Vec::new();
    for &(x, d) in &breaks[1..breaks.len() - 1] {
        if (d.abs() - 2.0).abs() <= CLOSED_GAP_TOL {
            let kind = if d > 0.0 { EdgeKind::Periodic } else { EdgeKind::Antiperiodic };
            roots.push((x, kind, true));
            roots.push((x, kind, true));
        }
    }
    let shifted = |d: f64, level: f64| -> f64 {
        if (d - level).abs() <= CLOSED_GAP_TOL {
            0.0
        } else {
            d - level
        }
    };
    for w in breaks.windows(2) {
        let ((a, da), (b, db)) = (w[0], w[1]);
        for (level, kind) in [(2.0, EdgeKind::Periodic), (-2.0, EdgeKind::Antiperiodic)] {
            let (fa, fb) = (shifted(da, level), shifted(db, level));
            if fa * fb < 0.0 {
                let br = roots::refine(|x| Ok(discriminant(problem, x)? - level), a, b, fa, fb, EDGE_TOL)?;
                roots.push((br.mid(), kind, false));
            }
        }
    }
    roots.sort_by(|x, y| x.0.total_cmp(&y.0));

    // Expected pattern: P, A, A, P, P, A, A, ...
    for (i, (x, kind, _)) in roots.iter().enumerate() {
        let want = if ((i + 1) / 2) % 2 == 0 { EdgeKind::Periodic } else { EdgeKind::Antiperiodic };
        if *kind != want {
            return Err(Error::InterleavingViolation(format!(
                "edge {i} at {x} is {kind:?}, expected {want:?}"
            )));
        }
    }
    if roots.is_empty() {
        return Err(Error::InterleavingViolation("no band edge below lambda_max".into()));
    }

    let mut edges = Vec::with_capacity(roots.len());
    let (mut np, mut na) = (0, 0);
    let mut edge_residual: f64 = 0.0;
    for &(x, kind, double) in &roots {
        let label = match kind {
            EdgeKind::Periodic => {
                np += 1;
                format!("lambda_{np}")
            }
            EdgeKind::Antiperiodic => {
                na += 1;
                format!("mu_{na}")
            }
        };
        let delta = discriminant(problem, x)?;
        edge_residual = edge_residual.max((delta.abs() - 2.0).abs());
        let r = 0.5 * EDGE_TOL;
        edges.push(Edge { label, kind, enclosure: Enclosure::new(x - r, x + r), delta, double });
    }

    let mut bands = Vec::new();
    let mut gaps = Vec::new();
    let mut i = 0;
    while i < edges.len() {
        let lo = edges[i].enclosure.value();
        let top = edges.get(i + 1).map(|e| e.enclosure.value()).unwrap_or(hi);
        bands.push((lo, top));
        if i + 2 < edges.len() {
            let (l, u) = (&edges[i + 1], &edges[i + 2]);
            gaps.push(Gap {
                index: gaps.len() + 1,
                lower: l.enclosure,
                upper: u.enclosure,
                kind: l.kind,
                closed: l.double && u.double,
            });
        }
        i += 2;
    }
    let mut lambda_max_used = hi;
    if lambda_max.is_none() {
        let open: Vec<usize> = gaps.iter().enumerate().filter(|(_, g)| !g.closed).map(|(k, _)| k).collect();
        if open.len() > DEFAULT_GAPS {
            let cut = open[DEFAULT_GAPS];
            let limit = gaps[cut].lower.value();
            gaps.truncate(cut);
            edges.retain(|e| e.enclosure.value() <= limit);
            bands.retain(|b| b.0 < limit);
            if let Some(last) = bands.last_mut() {
                last.1 = limit;
            }
            lambda_max_used = limit;
        }
    }
    let lowest = edges[0].enclosure;
    Ok(BandStructure {
        period,
        lambda_max: lambda_max_used,
        edges,
        bands,
        gaps,
        lowest,
        edge_residual,
        samples: grid.into_iter().zip(values).collect(),
    })
}

/// Count checks for `JA` in the symmetric union of every open gap, and the
/// gap `(-lambda_1, lambda_1)` around zero.
pub fn audit_gaps_ja(problem: &IndefiniteProblem, bands: &BandStructure) -> Result<Vec<TheoremReport>> {
    let engine = WeylEngine::new(problem);
    let tol = DEFAULT_TOL;
    let mut out = Vec::new();
    for gap in bands.open_gaps() {
        let (a, b) = gap.interior();
        let ja = eigenvalues_ja_with(&engine, a, b, tol)?;
        let neg = ja.parts[0].count;
        let pos = ja.parts[1].count;
        let total = neg + pos;
        let mut ok = total <= 3;
        let mut bound = "n_JA(-b,-a) + n_JA(a,b) <= 3 with n_A(a,b) = 0".to_string();
        if problem.symmetric {
            ok &= neg <= 1 && pos <= 1;
            bound.push_str("; at most 1 per gap under symmetry");
        }
        let (verdict, reason) = verdict_for(ok, ja.converged(), &ja.flags);
        out.push(TheoremReport {
            theorem: TheoremId::PeriodicGap,
            problem_digest: problem.digest.clone(),
            interval: (a, b),
            measured: json!({
                "gap_index": gap.index,
                "n_A": 0,
                "n_JA_negative": neg,
                "n_JA_positive": pos,
                "n_JA_total": total,
                "eigenvalues": ja.eigenvalues,
                "pairing_defect": ja.pairing_defect.map(report::format_real),
            }),
            bound,
            verdict,
            reason,
            flags: ja.flags.clone(),
        });
    }
    let lambda_1 = bands.lowest.lo;
    let g = gap_of_ja_with(&engine, lambda_1, tol)?;
    let ok = g.inside_gap == 0;
    let (verdict, reason) = verdict_for(ok, g.truncation.converged, &g.flags);
    out.push(TheoremReport {
        theorem: TheoremId::Gap,
        problem_digest: problem.digest.clone(),
        interval: (-lambda_1, lambda_1),
        measured: json!({
            "lambda_1": bands.lowest,
            "n_JA_inside": g.inside_gap,
        }),
        bound: "(-lambda_1, lambda_1) free of JA eigenvalues".into(),
        verdict,
        reason,
        flags: g.flags.clone(),
    });
    Ok(out)
}
