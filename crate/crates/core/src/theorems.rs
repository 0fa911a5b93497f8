//! Count identities and bounds relating `A`, `JA` and the half-line
//! operators, checked numerically on a problem and an interval.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::coefficients::{build_problem, catalog, GaussianWell, IndefiniteProblem, ProblemSpec};
use crate::count::{count_half_line_operator, CountReport, OperatorTag, DEFAULT_TOL, N_MAX};
use crate::error::{Error, Result};
use crate::matching::{counts_at, eigenvalues_a_with, eigenvalues_ja_with, CountsAt};
use crate::report::{self, Enclosure};
use crate::weyl::{Truncation, WeylEngine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TheoremId {
    #[serde(rename = "thm41")]
    CountEstimate,
    #[serde(rename = "lemma22iv")]
    RankOne,
    #[serde(rename = "thm44")]
    SymmetricHalving,
    #[serde(rename = "interlace")]
    Interlacing,
    #[serde(rename = "accumulate")]
    Accumulation,
    #[serde(rename = "gap")]
    Gap,
    #[serde(rename = "periodic_gap")]
    PeriodicGap,
}

impl std::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TheoremId::CountEstimate => "thm41",
            TheoremId::RankOne => "lemma22iv",
            TheoremId::SymmetricHalving => "thm44",
            TheoremId::Interlacing => "interlace",
            TheoremId::Accumulation => "accumulate",
            TheoremId::Gap => "gap",
            TheoremId::PeriodicGap => "periodic_gap",
        })
    }
}

impl std::str::FromStr for TheoremId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "thm41" => TheoremId::CountEstimate,
            "lemma22iv" => TheoremId::RankOne,
            "thm44" => TheoremId::SymmetricHalving,
            "interlace" => TheoremId::Interlacing,
            "accumulate" => TheoremId::Accumulation,
            "gap" => TheoremId::Gap,
            "periodic_gap" => TheoremId::PeriodicGap,
            other => return Err(Error::Parse(format!("unknown theorem `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub problem_digest: String,
    #[serde(serialize_with = "report::real_pair")]
    pub interval: (f64, f64),
    pub measured: Value,
    pub bound: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub flags: Vec<String>,
}

/// Flags that make a count untrustworthy even when truncations agreed.
const NUMERIC_FLAGS: [&str; 3] = ["oscillation_count_mismatch", "symmetric_pairing", "endpoint_moved"];

/// A failed check only counts as a violation when every count behind it
/// converged and no numerical warning was raised.
pub fn verdict_for(ok: bool, converged: bool, flags: &[String]) -> (Verdict, Option<String>) {
    if !converged {
        return (Verdict::Inconclusive, Some("truncation did not converge".into()));
    }
    if ok {
        return (Verdict::Holds, None);
    }
    if let Some(f) = flags.iter().find(|f| NUMERIC_FLAGS.iter().any(|p| f.starts_with(p))) {
        return (Verdict::Inconclusive, Some(format!("numerical warning: {f}")));
    }
    (Verdict::Violated, None)
}

fn merged_flags(reports: &[&CountReport]) -> Vec<String> {
    let mut flags: Vec<String> = reports.iter().flat_map(|r| r.flags.iter().cloned()).collect();
    flags.sort();
    flags.dedup();
    flags
}

fn all_converged(reports: &[&CountReport]) -> bool {
    reports.iter().all(|r| r.converged())
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(0.0 <= a && a < b) {
        return Err(Error::InvalidProblem(format!("need 0 <= a < b, got ({a}, {b})")));
    }
    Ok(())
}

/// `|n_A(a, b) - (n_JA(-b, -a) + n_JA(a, b))| <= 3`.
pub fn verify_count_estimate(problem: &IndefiniteProblem, a: f64, b: f64) -> Result<TheoremReport> {
    verify_count_estimate_with(&WeylEngine::new(problem), a, b)
}

pub fn verify_count_estimate_with(engine: &WeylEngine, a: f64, b: f64) -> Result<TheoremReport> {
    check_interval(a, b)?;
    let na = eigenvalues_a_with(engine, a, b, DEFAULT_TOL)?;
    let ja = eigenvalues_ja_with(engine, a, b, DEFAULT_TOL)?;
    let total = ja.count;
    let discrepancy = na.count.abs_diff(total);
    let reports = [&na, &ja];
    let mut flags = merged_flags(&reports);
    let converged = all_converged(&reports);
    let (verdict, reason) = if !converged && (na.count >= N_MAX || total >= N_MAX) {
        // Both infinite or neither: compare exceedance of the cap.
        let both = na.count >= N_MAX && total >= N_MAX;
        flags.push("n_max_reached".into());
        if both {
            (Verdict::Holds, Some("both counts reach N_max".into()))
        } else {
            (Verdict::Inconclusive, Some("only one count reaches N_max before the truncation limit".into()))
        }
    } else {
        verdict_for(discrepancy <= 3, converged, &flags)
    };
    Ok(TheoremReport {
        theorem: TheoremId::CountEstimate,
        problem_digest: engine.problem.digest.clone(),
        interval: (a, b),
        measured: json!({
            "n_A": na.count,
            "n_JA_negative": ja.parts[0].count,
            "n_JA_positive": ja.parts[1].count,
            "discrepancy": discrepancy,
            "A_eigenvalues": na.eigenvalues,
            "JA_eigenvalues": ja.eigenvalues,
        }),
        bound: "|n_A(a,b) - (n_JA(-b,-a) + n_JA(a,b))| <= 3".into(),
        verdict,
        reason,
        flags,
    })
}

/// `|n_A(a, b) - (n_B+(a, b) + n_B-(a, b))| <= 1`.
pub fn verify_rank_one_perturbation(problem: &IndefiniteProblem, a: f64, b: f64) -> Result<TheoremReport> {
    verify_rank_one_perturbation_with(&WeylEngine::new(problem), a, b)
}

pub fn verify_rank_one_perturbation_with(engine: &WeylEngine, a: f64, b: f64) -> Result<TheoremReport> {
    if !(a < b) {
        return Err(Error::InvalidProblem(format!("need a < b, got ({a}, {b})")));
    }
    let na = eigenvalues_a_with(engine, a, b, DEFAULT_TOL)?;
    let nb = count_half_line_operator(engine, OperatorTag::B, a, b, DEFAULT_TOL)?;
    let n_plus = count_half_line_operator(engine, OperatorTag::Bplus, a, b, DEFAULT_TOL)?.count;
    let diff = na.count.abs_diff(nb.count);
    let reports = [&na, &nb];
    let flags = merged_flags(&reports);
    let (verdict, reason) = verdict_for(diff <= 1, all_converged(&reports), &flags);
    Ok(TheoremReport {
        theorem: TheoremId::RankOne,
        problem_digest: engine.problem.digest.clone(),
        interval: (a, b),
        measured: json!({
            "n_A": na.count,
            "n_B": nb.count,
            "n_Bplus": n_plus,
            "n_Bminus": nb.count - n_plus,
            "difference": diff,
        }),
        bound: "|n_A(a,b) - n_B(a,b)| <= 1".into(),
        verdict,
        reason,
        flags,
    })
}

fn require_symmetric(problem: &IndefiniteProblem) -> Result<()> {
    if !problem.symmetric {
        return Err(Error::InvalidProblem("this check needs a problem declared symmetric".into()));
    }
    Ok(())
}

/// For symmetric problems and `alpha < min sigma(A) < beta <= min sigma_ess(A)`:
/// `n_JA(alpha, beta) = n_JA(-beta, -alpha)`, equal to `n_A / 2` for even
/// `n_A` and to `(n_A +- 1) / 2` for odd `n_A`.
pub fn verify_symmetric_halving(problem: &IndefiniteProblem, alpha: f64, beta: f64) -> Result<TheoremReport> {
    verify_symmetric_halving_with(&WeylEngine::new(problem), alpha, beta)
}

pub fn verify_symmetric_halving_with(engine: &WeylEngine, alpha: f64, beta: f64) -> Result<TheoremReport> {
    let problem = engine.problem;
    require_symmetric(problem)?;
    check_interval(alpha, beta)?;
    if let Some(e) = problem.ess_model.min_essential() {
        if beta > e {
            return Err(Error::InvalidProblem(format!("beta = {beta} exceeds min sigma_ess(A) = {e}")));
        }
    }
    let below = eigenvalues_a_with(engine, 0.0, beta, DEFAULT_TOL)?;
    let lambda_1 = below.eigenvalues.first().copied();
    let mut flags = Vec::new();
    match lambda_1 {
        Some(l) if l.lo > alpha => {}
        _ => {
            flags.push("precondition_failed".into());
            return Ok(TheoremReport {
                theorem: TheoremId::SymmetricHalving,
                problem_digest: problem.digest.clone(),
                interval: (alpha, beta),
                measured: json!({ "lambda_1": lambda_1 }),
                bound: "requires alpha < min sigma(A) < beta".into(),
                verdict: Verdict::Inconclusive,
                reason: Some("min sigma(A) is not inside (alpha, beta)".into()),
                flags,
            });
        }
    }
    let na = eigenvalues_a_with(engine, alpha, beta, DEFAULT_TOL)?;
    let ja = eigenvalues_ja_with(engine, alpha, beta, DEFAULT_TOL)?;
    let (neg, pos) = (ja.parts[0].count, ja.parts[1].count);
    let n = na.count;
    let allowed: Vec<usize> = if n % 2 == 0 { vec![n / 2] } else { vec![(n - 1) / 2, (n + 1) / 2] };
    let halving = neg == pos && allowed.contains(&pos);
    // |n_A / 2 - n_JA(a, b)| <= 1.
    let cor = (0.5 * n as f64 - pos as f64).abs() <= 1.0;
    let reports = [&na, &ja];
    flags.extend(merged_flags(&reports));
    let (verdict, reason) = verdict_for(halving && cor, all_converged(&reports), &flags);
    Ok(TheoremReport {
        theorem: TheoremId::SymmetricHalving,
        problem_digest: problem.digest.clone(),
        interval: (alpha, beta),
        measured: json!({
            "n_A": n,
            "n_JA_negative": neg,
            "n_JA_positive": pos,
            "allowed": allowed,
            "lambda_1": lambda_1,
            "pairing_defect": ja.pairing_defect.map(report::format_real),
            "halving_ok": halving,
            "half_count_bound_ok": cor,
        }),
        bound: "n_JA(-b,-a) = n_JA(a,b) = n_A/2 (even) or (n_A +- 1)/2 (odd)".into(),
        verdict,
        reason,
        flags,
    })
}

/// Which interlacing alternative the eigenvalues satisfy. `first` selects
/// the pairs `(l_1, l_2), (l_3, l_4), ...`, otherwise `(l_2, l_3), ...`.
fn alternative_holds(a_eigs: &[Enclosure], ja: &[Enclosure], first: bool) -> bool {
    let n = a_eigs.len();
    let inside = |lo: f64, hi: f64| ja.iter().filter(|z| z.lo > lo && z.hi < hi).count();
    let touches = |lo: f64, hi: f64| ja.iter().filter(|z| z.hi >= lo && z.lo <= hi).count();
    let start = if first { 0 } else { 1 };
    let mut i = start;
    while i + 1 < n {
        if inside(a_eigs[i].hi, a_eigs[i + 1].lo) != 1 {
            return false;
        }
        i += 2;
    }
    // The complementary closed intervals are free of JA eigenvalues.
    let mut j = 1 - start;
    while j + 1 < n {
        if touches(a_eigs[j].lo, a_eigs[j + 1].hi) != 0 {
            return false;
        }
        j += 2;
    }
    true
}

/// Exactly one interlacing alternative between the eigenvalues of `A` and
/// the positive eigenvalues of `JA` in `(a, b)`; the first when `(a, b)`
/// contains `min sigma(A)` and ends below the essential spectrum.
pub fn verify_interlacing_with_a(problem: &IndefiniteProblem, a: f64, b: f64) -> Result<TheoremReport> {
    verify_interlacing_with_a_with(&WeylEngine::new(problem), a, b)
}

pub fn verify_interlacing_with_a_with(engine: &WeylEngine, a: f64, b: f64) -> Result<TheoremReport> {
    let problem = engine.problem;
    require_symmetric(problem)?;
    check_interval(a, b)?;
    let na = eigenvalues_a_with(engine, a, b, DEFAULT_TOL)?;
    let ja = eigenvalues_ja_with(engine, a, b, DEFAULT_TOL)?;
    let positive: Vec<Enclosure> = ja.eigenvalues.iter().copied().filter(|e| e.value() > 0.0).collect();
    let alt_i = alternative_holds(&na.eigenvalues, &positive, true);
    let alt_ii = alternative_holds(&na.eigenvalues, &positive, false);
    let n = na.count;
    let below_a = if a > 0.0 { eigenvalues_a_with(engine, 0.0, a, DEFAULT_TOL)?.count } else { 0 };
    let ground_state_case = below_a == 0
        && n > 0
        && problem.ess_model.min_essential().is_some_and(|e| b <= e);
    let ok = if n >= 2 {
        (alt_i != alt_ii) && (!ground_state_case || alt_i)
    } else {
        // One or no eigenvalue of A: both alternatives are vacuous.
        true
    };
    let reports = [&na, &ja];
    let flags = merged_flags(&reports);
    let (verdict, reason) = verdict_for(ok, all_converged(&reports), &flags);
    Ok(TheoremReport {
        theorem: TheoremId::Interlacing,
        problem_digest: problem.digest.clone(),
        interval: (a, b),
        measured: json!({
            "A_eigenvalues": na.eigenvalues,
            "JA_positive_eigenvalues": positive,
            "alternative_i": alt_i,
            "alternative_ii": alt_ii,
            "ground_state_case": ground_state_case,
        }),
        bound: "exactly one of (l_{2k-1}, l_{2k}) / (l_{2k}, l_{2k+1}) holds one JA eigenvalue each".into(),
        verdict,
        reason,
        flags,
    })
}

/// Accumulation at `b` operationalized on growing truncations: the counts
/// in `(a, b - delta)` either both reach `n` or both settle below it.
pub fn verify_accumulation(problem: &IndefiniteProblem, a: f64, b: f64, n: usize) -> Result<TheoremReport> {
    verify_accumulation_with(&WeylEngine::new(problem), a, b, n)
}

pub fn verify_accumulation_with(engine: &WeylEngine, a: f64, b: f64, n: usize) -> Result<TheoremReport> {
    let problem = engine.problem;
    check_interval(a, b)?;
    if problem.ess_model.distance(b) != Some(0.0) {
        return Err(Error::InvalidProblem(format!("b = {b} is not in the essential spectrum")));
    }
    let delta = 1e-7 * b.abs().max(1.0);
    let mut rows: Vec<(f64, CountsAt)> = Vec::new();
    for t in engine.schedule() {
        let x = match t {
            Truncation::Finite(x) => x,
            Truncation::Floquet => {
                return Err(Error::NotApplicable("accumulation checks need a constant tail".into()))
            }
        };
        let c = counts_at(engine, a, b - delta, t, 1e-12)?;
        rows.push((x, c));
    }
    let na: Vec<usize> = rows.iter().map(|r| r.1.n_a).collect();
    let nja: Vec<usize> = rows.iter().map(|r| r.1.n_ja_negative + r.1.n_ja_positive).collect();
    let reached = |v: &[usize]| v.iter().any(|c| *c >= n);
    let growing = |v: &[usize]| v.windows(2).all(|w| w[1] >= w[0]) && v.last() > v.first();
    let stable = |v: &[usize]| v.len() >= 4 && v[v.len() - 4..].windows(2).all(|w| w[0] == w[1]);
    let (a_inf, ja_inf) = (reached(&na), reached(&nja));
    let (a_fin, ja_fin) = (stable(&na) && !a_inf, stable(&nja) && !ja_inf);
    let mut both_sides = None;
    if problem.symmetric && ja_inf {
        let last = rows.last().map(|r| r.1).unwrap();
        both_sides = Some(last.n_ja_negative == last.n_ja_positive);
    }
    let (verdict, reason) = if a_inf && ja_inf && growing(&na) && growing(&nja) && both_sides != Some(false) {
        (Verdict::Holds, Some(format!("both counts reach {n} and grow with the truncation")))
    } else if a_fin && ja_fin {
        (Verdict::Holds, Some("both counts finite and stable under three doublings".into()))
    } else if (a_inf && ja_fin) || (ja_inf && a_fin) || both_sides == Some(false) {
        (Verdict::Violated, None)
    } else {
        (Verdict::Inconclusive, Some(format!("counts neither reach {n} nor settle within the truncation schedule")))
    };
    let table: Vec<Value> = rows
        .iter()
        .map(|(x, c)| {
            json!({
                "x": report::format_real(*x),
                "n_A": c.n_a,
                "n_JA_negative": c.n_ja_negative,
                "n_JA_positive": c.n_ja_positive,
            })
        })
        .collect();
    Ok(TheoremReport {
        theorem: TheoremId::Accumulation,
        problem_digest: problem.digest.clone(),
        interval: (a, b),
        measured: json!({
            "n": n,
            "delta": report::format_real(delta),
            "passes": table,
            "A_accumulates": a_inf,
            "JA_accumulates": ja_inf,
            "both_sides": both_sides,
        }),
        bound: "n_A -> inf iff n_JA(-b,-a) + n_JA(a,b) -> inf".into(),
        verdict,
        reason,
        flags: Vec::new(),
    })
}

/// `(-lambda_1, lambda_1)` contains no eigenvalue of `JA`, with the
/// estimates of the first eigenvalues against `B+-`.
pub fn verify_gap(problem: &IndefiniteProblem) -> Result<TheoremReport> {
    let g = crate::matching::gap_of_ja(problem, DEFAULT_TOL)?;
    let (verdict, reason) = verdict_for(g.holds, g.truncation.converged, &g.flags);
    let l1 = g.lambda_1.value();
    Ok(TheoremReport {
        theorem: TheoremId::Gap,
        problem_digest: problem.digest.clone(),
        interval: (-l1, l1),
        measured: serde_json::to_value(&g).map_err(|e| Error::InvalidProblem(e.to_string()))?,
        bound: "(-min sigma(A), min sigma(A)) in rho(JA); first JA eigenvalues bounded by B+-".into(),
        verdict,
        reason,
        flags: g.flags,
    })
}

/// Seed of the random-well suite.
pub const SUITE_SEED: u64 = 0x5eed_2024;

/// Cases in the random-well suite.
pub const SUITE_SIZE: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteCase {
    pub name: String,
    pub spec: ProblemSpec,
    /// Interval checked, a gap below `q_inf`.
    #[serde(serialize_with = "report::real_pair")]
    pub interval: (f64, f64),
}

/// `q = q_inf - sum a_j exp(-(x - b_j)^2 / s_j)` with `sum a_j < 0.9 q_inf`,
/// so `q > 0`. Even-numbered cases mirror their wells and are symmetric.
pub fn random_suite(seed: u64, size: usize) -> Vec<SuiteCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|k| {
            let symmetric = k % 2 == 0;
            let q_inf: f64 = rng.gen_range(2.0..6.0);
            let n_wells = rng.gen_range(1..=3);
            let mut budget = 0.9 * q_inf;
            let mut wells = Vec::new();
            for _ in 0..n_wells {
                let amp = rng.gen_range(0.2..0.7) * budget;
                budget -= amp;
                let width = rng.gen_range(0.5..3.0);
                if symmetric {
                    let center = rng.gen_range(0.0..3.0);
                    let half = 0.5 * amp;
                    wells.push(GaussianWell { amplitude: half, center, width });
                    wells.push(GaussianWell { amplitude: half, center: -center, width });
                } else {
                    let center = rng.gen_range(-3.0..3.0);
                    wells.push(GaussianWell { amplitude: amp, center, width });
                }
            }
            let mut spec = catalog::wells(q_inf, &wells, symmetric);
            let name = format!("well_{k:02}_{}", if symmetric { "sym" } else { "asym" });
            spec.name = Some(name.clone());
            SuiteCase { name, spec, interval: (0.0, q_inf - 0.25) }
        })
        .collect()
}

/// One row of the suite summary.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub case: String,
    pub symmetric: bool,
    #[serde(serialize_with = "report::real_pair")]
    pub interval: (f64, f64),
    pub count_estimate: TheoremReport,
    pub rank_one: TheoremReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halving: Option<TheoremReport>,
}

impl SuiteRow {
    pub fn reports(&self) -> Vec<&TheoremReport> {
        let mut v = vec![&self.count_estimate, &self.rank_one];
        v.extend(self.halving.as_ref());
        v
    }
}

/// Count estimate and rank-one bound on every case, plus halving on the
/// symmetric ones whose interval contains `min sigma(A)`.
pub fn run_suite(cases: &[SuiteCase]) -> Result<Vec<SuiteRow>> {
    cases
        .par_iter()
        .map(|case| {
            let problem = build_problem(&case.spec)?;
            let engine = WeylEngine::new(&problem);
            let (a, b) = case.interval;
            let count_estimate = verify_count_estimate_with(&engine, a, b)?;
            let rank_one = verify_rank_one_perturbation_with(&engine, a, b)?;
            // Halving needs min sigma(A) inside the interval; skip cases without it.
            let halving = if problem.symmetric {
                Some(verify_symmetric_halving_with(&engine, a, b)?)
                    .filter(|r| !r.flags.iter().any(|f| f == "precondition_failed"))
            } else {
                None
            };
            Ok(SuiteRow { case: case.name.clone(), symmetric: problem.symmetric, interval: case.interval, count_estimate, rank_one, halving })
        })
        .collect()
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Violated => "violated",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// `case,symmetric,a,b,n_A,n_JA_negative,n_JA_positive,n_B,discrepancy,thm41,lemma22iv,thm44`.
pub fn write_suite_csv<W: Write>(rows: &[SuiteRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "case,symmetric,a,b,n_A,n_JA_negative,n_JA_positive,n_B,discrepancy,thm41,lemma22iv,thm44")?;
    for r in rows {
        let m = &r.count_estimate.measured;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.case,
            r.symmetric,
            report::format_real(r.interval.0),
            report::format_real(r.interval.1),
            m["n_A"],
            m["n_JA_negative"],
            m["n_JA_positive"],
            r.rank_one.measured["n_B"],
            m["discrepancy"],
            verdict_str(r.count_estimate.verdict),
            verdict_str(r.rank_one.verdict),
            r.halving.as_ref().map(|h| verdict_str(h.verdict)).unwrap_or("n/a"),
        )?;
    }
    Ok(())
}

/// Largest Theorem-style discrepancy `|n_A - n_JA|` seen in the suite.
pub fn max_discrepancy(rows: &[SuiteRow]) -> u64 {
    rows.iter().filter_map(|r| r.count_estimate.measured["discrepancy"].as_u64()).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(kappa: u32) -> IndefiniteProblem {
        build_problem(&catalog::poschl_teller(kappa)).unwrap()
    }

    #[test]
    fn sech2_count_estimate() {
        let r = verify_count_estimate(&pt(2), 3.0, 9.0).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
        assert_eq!(r.measured["n_A"], 2);
        assert_eq!(r.measured["discrepancy"], 0);
    }

    #[test]
    fn sech2_halving_and_interlacing() {
        let p = pt(2);
        let h = verify_symmetric_halving(&p, 3.0, 9.0).unwrap();
        assert_eq!(h.verdict, Verdict::Holds, "{h:?}");
        assert_eq!(h.measured["n_JA_positive"], 1);
        let i = verify_interlacing_with_a(&p, 3.0, 9.0).unwrap();
        assert_eq!(i.verdict, Verdict::Holds, "{i:?}");
        assert_eq!(i.measured["alternative_i"], true);
    }

    #[test]
    fn constant_case_is_vacuous() {
        let p = build_problem(&catalog::constant(1.0)).unwrap();
        for r in [
            verify_count_estimate(&p, 0.0, 1.0).unwrap(),
            verify_rank_one_perturbation(&p, 0.0, 1.0).unwrap(),
            verify_interlacing_with_a(&p, 0.0, 1.0).unwrap(),
        ] {
            assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
        }
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict_for(false, false, &[]).0, Verdict::Inconclusive);
        assert_eq!(verdict_for(false, true, &[]).0, Verdict::Violated);
        assert_eq!(verdict_for(true, true, &[]).0, Verdict::Holds);
        assert_eq!(verdict_for(false, true, &["oscillation_count_mismatch: 1 vs 2".into()]).0, Verdict::Inconclusive);
    }

    #[test]
    fn suite_is_reproducible() {
        let a = random_suite(SUITE_SEED, 4);
        let b = random_suite(SUITE_SEED, 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.spec.digest(), y.spec.digest());
            build_problem(&x.spec).unwrap();
        }
        assert!(a[0].spec.symmetric && !a[1].spec.symmetric);
    }
}
