//! Coefficient model and problem validation.
//!
//! A problem is the triple `(r, p, q)` of the expression
//! `(1/r)(-(p u')' + q u)` together with the sign-change point `c` of the
//! weight, an optional symmetry declaration and a model of the essential
//! spectrum of the definite operator built from `|r|`.
//!
//! The structural conditions on the weight (positive right of `c`, negative
//! left of `c`) and on the symmetry (`p`, `q` even, `r` odd) are verified by
//! sampling. `r` may vanish on null sets; sampling cannot see those, so that
//! part stays the caller's responsibility.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Default number of validation samples on `[c - X0, c + X0]`.
pub const VALIDATION_GRID: usize = 10_000;

/// Defects below this are treated as exact symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianWell {
    pub amplitude: f64,
    pub center: f64,
    /// `s` in `exp(-(x - center)^2 / s)`.
    pub width: f64,
}

/// One coefficient function.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `plus` for `x > at`, `-minus` for `x <= at`.
    Sign { at: f64, plus: f64, minus: f64 },
    /// `(kappa + 1)^2 - kappa (kappa + 1) sech^2(x)`.
    PoschlTeller { kappa: f64 },
    /// `offset - amplitude sech^2(x / width)`.
    Sech2 { offset: f64, amplitude: f64, width: f64 },
    /// `q_inf - gamma / (x0^2 + x^2)`; `x^2 (q - q_inf) -> -gamma`.
    RationalTail { q_inf: f64, gamma: f64, x0: f64 },
    /// `mean + amplitude cos(2 pi x / period + phase)`.
    Cosine { mean: f64, amplitude: f64, period: f64, phase: f64 },
    /// `q_inf - sum_j a_j exp(-(x - b_j)^2 / s_j)`.
    GaussianWells { q_inf: f64, wells: Vec<GaussianWell> },
    /// `left` for `x <= at`, `right` for `x > at`.
    Piecewise { at: f64, left: Box<Coefficient>, right: Box<Coefficient> },
    Expr { expr: Expr, breakpoints: Vec<f64> },
}

impl Coefficient {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Sign { at, plus, minus } => {
                if x > *at {
                    *plus
                } else {
                    -*minus
                }
            }
            Coefficient::PoschlTeller { kappa } => {
                let s = 1.0 / x.cosh();
                (kappa + 1.0).powi(2) - kappa * (kappa + 1.0) * s * s
            }
            Coefficient::Sech2 { offset, amplitude, width } => {
                let s = 1.0 / (x / width).cosh();
                offset - amplitude * s * s
            }
            Coefficient::RationalTail { q_inf, gamma, x0 } => q_inf - gamma / (x0 * x0 + x * x),
            Coefficient::Cosine { mean, amplitude, period, phase } => {
                mean + amplitude * (std::f64::consts::TAU * x / period + phase).cos()
            }
            Coefficient::GaussianWells { q_inf, wells } => {
                let mut v = *q_inf;
                for w in wells {
                    let d = x - w.center;
                    v -= w.amplitude * (-d * d / w.width).exp();
                }
                v
            }
            Coefficient::Piecewise { at, left, right } => {
                if x > *at {
                    right.eval(x)
                } else {
                    left.eval(x)
                }
            }
            Coefficient::Expr { expr, .. } => expr.eval(x),
        }
    }

    /// Points where the coefficient may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Coefficient::Sign { at, .. } => vec![*at],
            Coefficient::Piecewise { at, left, right } => {
                let mut out = vec![*at];
                out.extend(left.breakpoints());
                out.extend(right.breakpoints());
                out
            }
            Coefficient::Expr { breakpoints, .. } => breakpoints.clone(),
            _ => Vec::new(),
        }
    }

    pub fn from_spec(spec: &CoefficientSpec) -> Result<Coefficient> {
        match spec {
            CoefficientSpec::Expr { expr, breakpoints } => Ok(Coefficient::Expr {
                expr: Expr::parse(expr)?,
                breakpoints: breakpoints.clone(),
            }),
            CoefficientSpec::Piecewise { piecewise } => Ok(Coefficient::Piecewise {
                at: piecewise.at,
                left: Box::new(Coefficient::from_spec(&piecewise.left)?),
                right: Box::new(Coefficient::from_spec(&piecewise.right)?),
            }),
            CoefficientSpec::Builtin { builtin, params } => builtin_from_params(builtin, params),
        }
    }
}

fn param(params: &Map<String, Value>, name: &str, default: Option<f64>) -> Result<f64> {
    match params.get(name) {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Parse(format!("parameter `{name}` must be a number"))),
        None => default.ok_or_else(|| Error::Parse(format!("missing parameter `{name}`"))),
    }
}

fn check_params(builtin: &str, params: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Parse(format!("unknown parameter `{key}` for builtin `{builtin}`")));
        }
    }
    Ok(())
}

fn builtin_from_params(builtin: &str, params: &Map<String, Value>) -> Result<Coefficient> {
    let coefficient = match builtin {
        "constant" => {
            check_params(builtin, params, &["value"])?;
            Coefficient::Constant(param(params, "value", None)?)
        }
        "sign" => {
            check_params(builtin, params, &["at", "plus", "minus", "scale"])?;
            let scale = param(params, "scale", Some(1.0))?;
            Coefficient::Sign {
                at: param(params, "at", Some(0.0))?,
                plus: param(params, "plus", Some(scale))?,
                minus: param(params, "minus", Some(scale))?,
            }
        }
        "poschl_teller" => {
            check_params(builtin, params, &["kappa"])?;
            Coefficient::PoschlTeller { kappa: param(params, "kappa", None)? }
        }
        "sech2" => {
            check_params(builtin, params, &["offset", "amplitude", "width"])?;
            Coefficient::Sech2 {
                offset: param(params, "offset", None)?,
                amplitude: param(params, "amplitude", None)?,
                width: param(params, "width", Some(1.0))?,
            }
        }
        "rational_tail" => {
            check_params(builtin, params, &["q_inf", "gamma", "x0"])?;
            Coefficient::RationalTail {
                q_inf: param(params, "q_inf", None)?,
                gamma: param(params, "gamma", None)?,
                x0: param(params, "x0", Some(1.0))?,
            }
        }
        "cosine" => {
            check_params(builtin, params, &["mean", "amplitude", "period", "phase"])?;
            Coefficient::Cosine {
                mean: param(params, "mean", None)?,
                amplitude: param(params, "amplitude", None)?,
                period: param(params, "period", None)?,
                phase: param(params, "phase", Some(0.0))?,
            }
        }
        "gaussian_wells" => {
            check_params(builtin, params, &["q_inf", "wells"])?;
            let wells = match params.get("wells") {
                Some(v) => serde_json::from_value::<Vec<GaussianWell>>(v.clone())
                    .map_err(|e| Error::Parse(format!("bad `wells`: {e}")))?,
                None => Vec::new(),
            };
            Coefficient::GaussianWells { q_inf: param(params, "q_inf", None)?, wells }
        }
        other => return Err(Error::Parse(format!("unknown builtin `{other}`"))),
    };
    Ok(coefficient)
}

/// JSON form of a coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CoefficientSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: Map<String, Value>,
    },
    Expr {
        expr: String,
        #[serde(default)]
        breakpoints: Vec<f64>,
    },
    Piecewise { piecewise: PiecewiseSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSpec {
    pub at: f64,
    pub left: Box<CoefficientSpec>,
    pub right: Box<CoefficientSpec>,
}

impl CoefficientSpec {
    pub fn builtin(name: &str, params: Value) -> CoefficientSpec {
        CoefficientSpec::Builtin {
            builtin: name.to_string(),
            params: params.as_object().cloned().unwrap_or_default(),
        }
    }

    pub fn constant(value: f64) -> CoefficientSpec {
        CoefficientSpec::builtin("constant", serde_json::json!({ "value": value }))
    }

    pub fn expr(src: &str) -> CoefficientSpec {
        CoefficientSpec::Expr { expr: src.to_string(), breakpoints: Vec::new() }
    }
}

/// Model of `sigma_ess(A)` used to decide which spectral parameters are admissible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EssentialSpectrumModel {
    /// `sigma_ess(A) = [q_inf, inf)`.
    ConstantTail { q_inf: f64 },
    /// Coefficients are periodic with this period on each side of `c`.
    PeriodicBands { period: f64 },
    /// `sigma_ess(A) = [0, inf)` minus the listed open gaps.
    DeclaredGaps { gaps: Vec<(f64, f64)> },
}

impl EssentialSpectrumModel {
    fn validate(&self) -> Result<()> {
        match self {
            EssentialSpectrumModel::ConstantTail { q_inf } if !(*q_inf > 0.0) => {
                Err(Error::InvalidProblem(format!("q_inf must be positive, got {q_inf}")))
            }
            EssentialSpectrumModel::PeriodicBands { period } if !(*period > 0.0) => {
                Err(Error::InvalidProblem(format!("period must be positive, got {period}")))
            }
            EssentialSpectrumModel::DeclaredGaps { gaps } => {
                let mut sorted = gaps.clone();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                for (a, b) in &sorted {
                    if !(*a >= 0.0 && a < b) {
                        return Err(Error::InvalidProblem(format!("bad gap ({a}, {b})")));
                    }
                }
                for w in sorted.windows(2) {
                    if w[1].0 < w[0].1 {
                        return Err(Error::InvalidProblem("declared gaps overlap".into()));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Distance from `lambda` to the declared essential spectrum, `0` inside it.
    /// `None` when the model needs the discriminant (periodic bands).
    pub fn distance(&self, lambda: f64) -> Option<f64> {
        match self {
            EssentialSpectrumModel::ConstantTail { q_inf } => Some((q_inf - lambda).max(0.0)),
            EssentialSpectrumModel::PeriodicBands { .. } => None,
            EssentialSpectrumModel::DeclaredGaps { gaps } => {
                if lambda < 0.0 {
                    let first = gaps
                        .iter()
                        .filter(|(a, _)| *a == 0.0)
                        .map(|(_, b)| *b)
                        .next()
                        .unwrap_or(0.0);
                    return Some(first - lambda);
                }
                for (a, b) in gaps {
                    if lambda > *a && lambda < *b {
                        return Some((lambda - a).min(b - lambda));
                    }
                }
                Some(0.0)
            }
        }
    }

    /// `min sigma_ess(A)` when the model states it directly.
    pub fn min_essential(&self) -> Option<f64> {
        match self {
            EssentialSpectrumModel::ConstantTail { q_inf } => Some(*q_inf),
            EssentialSpectrumModel::PeriodicBands { .. } => None,
            EssentialSpectrumModel::DeclaredGaps { gaps } => Some(
                gaps.iter()
                    .filter(|(a, _)| *a == 0.0)
                    .map(|(_, b)| *b)
                    .next()
                    .unwrap_or(0.0),
            ),
        }
    }

    /// Whether `(a, b)` avoids the essential spectrum (endpoints may touch it).
    pub fn interval_is_gap(&self, a: f64, b: f64) -> Option<bool> {
        match self {
            EssentialSpectrumModel::ConstantTail { q_inf } => Some(b <= *q_inf),
            EssentialSpectrumModel::PeriodicBands { .. } => None,
            EssentialSpectrumModel::DeclaredGaps { gaps } => {
                let lo = a.max(0.0);
                if b <= 0.0 {
                    return Some(true);
                }
                let first = self.min_essential().unwrap_or(0.0);
                if b <= first {
                    return Some(true);
                }
                Some(gaps.iter().any(|(ga, gb)| *ga <= lo && b <= *gb))
            }
        }
    }
}

/// Truncation schedule: start at half-width `x0` around `c`, multiply by
/// `growth` until `max_x`, declare convergence when successive passes agree
/// to `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationPolicy {
    pub x0: f64,
    pub growth: f64,
    pub max_x: f64,
    pub tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { x0: 30.0, growth: 2.0, max_x: 240.0, tol: 1e-9 }
    }
}

impl TruncationPolicy {
    fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0 && self.growth > 1.0 && self.max_x >= self.x0 && self.tol > 0.0) {
            return Err(Error::InvalidProblem(format!("bad truncation policy {self:?}")));
        }
        Ok(())
    }

    /// Half-widths visited by the doubling schedule.
    pub fn schedule(&self) -> Vec<f64> {
        let mut out = vec![self.x0];
        let mut x = self.x0;
        while x * self.growth <= self.max_x * (1.0 + 1e-12) {
            x *= self.growth;
            out.push(x);
        }
        out
    }
}

/// JSON problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub r: CoefficientSpec,
    pub p: CoefficientSpec,
    pub q: CoefficientSpec,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub symmetric: bool,
    pub ess_model: EssentialSpectrumModel,
    #[serde(default)]
    pub truncation: TruncationPolicy,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<ProblemSpec> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem spec serializes")
    }

    /// Content hash of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("problem spec serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Sampled coefficients at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub p: Coefficient,
    pub q: Coefficient,
    pub r: Coefficient,
    breakpoints: Vec<f64>,
}

impl CoefficientField {
    pub fn new(p: Coefficient, q: Coefficient, r: Coefficient) -> CoefficientField {
        let mut breakpoints: Vec<f64> = p
            .breakpoints()
            .into_iter()
            .chain(q.breakpoints())
            .chain(r.breakpoints())
            .filter(|x| x.is_finite())
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        CoefficientField { p, q, r, breakpoints }
    }

    #[inline]
    pub fn sample(&self, x: f64) -> Sample {
        Sample { p: self.p.eval(x), q: self.q.eval(x), r: self.r.eval(x) }
    }

    /// Declared discontinuities, sorted.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

/// Outcome of the sampled structural checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRecord {
    pub grid_points: usize,
    pub sign_pattern_ok: bool,
    pub p_positive_ok: bool,
    pub symmetry: Option<SymmetryReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub grid_points: usize,
    pub p_defect: f64,
    pub q_defect: f64,
    pub r_defect: f64,
    pub symmetric: bool,
}

/// A validated problem. Immutable after construction.
#[derive(Debug, Clone)]
pub struct IndefiniteProblem {
    pub coeffs: CoefficientField,
    pub c: f64,
    pub symmetric: bool,
    pub ess_model: EssentialSpectrumModel,
    pub truncation: TruncationPolicy,
    pub validation: ValidationRecord,
    pub digest: String,
    pub name: Option<String>,
}

impl IndefiniteProblem {
    pub fn from_json(text: &str) -> Result<IndefiniteProblem> {
        build_problem(&ProblemSpec::from_json(text)?)
    }

    pub fn with_truncation(mut self, truncation: TruncationPolicy) -> IndefiniteProblem {
        self.truncation = truncation;
        self
    }

    /// Period of the coefficients when the essential spectrum is banded.
    pub fn period(&self) -> Option<f64> {
        match self.ess_model {
            EssentialSpectrumModel::PeriodicBands { period } => Some(period),
            _ => None,
        }
    }
}

fn validation_points(c: f64, half_width: f64, grid: usize, breakpoints: &[f64]) -> Vec<f64> {
    let n = grid.max(2);
    let mut xs: Vec<f64> = (0..n)
        .map(|k| c - half_width + 2.0 * half_width * (k as f64) / ((n - 1) as f64))
        .collect();
    for &b in breakpoints {
        let off = 1e-9 * b.abs().max(1.0);
        xs.push(b - off);
        xs.push(b + off);
    }
    xs
}

/// Validates a problem description and records which sampled checks passed.
pub fn build_problem(spec: &ProblemSpec) -> Result<IndefiniteProblem> {
    spec.ess_model.validate()?;
    spec.truncation.validate()?;
    if !spec.c.is_finite() {
        return Err(Error::InvalidProblem("c must be finite".into()));
    }
    let coeffs = CoefficientField::new(
        Coefficient::from_spec(&spec.p)?,
        Coefficient::from_spec(&spec.q)?,
        Coefficient::from_spec(&spec.r)?,
    );

    let xs = validation_points(spec.c, spec.truncation.x0, VALIDATION_GRID, coeffs.breakpoints());
    for &x in &xs {
        let s = coeffs.sample(x);
        if !(s.p.is_finite() && s.q.is_finite() && s.r.is_finite()) {
            return Err(Error::InvalidProblem(format!("coefficient not finite at x = {x}")));
        }
        if !(s.p > 0.0) {
            return Err(Error::NonpositiveP { x, value: s.p });
        }
        if x > spec.c && !(s.r > 0.0) || x < spec.c && !(s.r < 0.0) {
            return Err(Error::SignPatternViolation { x, value: s.r });
        }
    }

    let mut problem = IndefiniteProblem {
        coeffs,
        c: spec.c,
        symmetric: spec.symmetric,
        ess_model: spec.ess_model.clone(),
        truncation: spec.truncation,
        validation: ValidationRecord {
            grid_points: xs.len(),
            sign_pattern_ok: true,
            p_positive_ok: true,
            symmetry: None,
        },
        digest: spec.digest(),
        name: spec.name.clone(),
    };

    if spec.symmetric {
        if spec.c != 0.0 {
            return Err(Error::SymmetryDeclaredButViolated(format!(
                "symmetric problems need c = 0, got {}",
                spec.c
            )));
        }
        let report = check_symmetry(&problem, VALIDATION_GRID);
        if !report.symmetric {
            return Err(Error::SymmetryDeclaredButViolated(format!(
                "defects p {:e}, q {:e}, r {:e}",
                report.p_defect, report.q_defect, report.r_defect
            )));
        }
        problem.validation.symmetry = Some(report);
    }
    Ok(problem)
}

/// Samples `|p(x) - p(-x)|`, `|q(x) - q(-x)|`, `|r(x) + r(-x)|` on `(0, X0]`.
pub fn check_symmetry(problem: &IndefiniteProblem, grid: usize) -> SymmetryReport {
    let half_width = problem.truncation.x0;
    let n = grid.max(1);
    let (mut dp, mut dq, mut dr) = (0.0f64, 0.0f64, 0.0f64);
    let mut xs: Vec<f64> = (1..=n).map(|k| half_width * k as f64 / n as f64).collect();
    for &b in problem.coeffs.breakpoints() {
        let off = 1e-9 * b.abs().max(1.0);
        for x in [b.abs() + off, (b.abs() - off).abs()] {
            if x > 0.0 {
                xs.push(x);
            }
        }
    }
    for x in xs {
        let plus = problem.coeffs.sample(x);
        let minus = problem.coeffs.sample(-x);
        dp = dp.max((plus.p - minus.p).abs());
        dq = dq.max((plus.q - minus.q).abs());
        dr = dr.max((plus.r + minus.r).abs());
    }
    SymmetryReport {
        grid_points: n,
        p_defect: dp,
        q_defect: dq,
        r_defect: dr,
        symmetric: dp < SYMMETRY_TOL && dq < SYMMETRY_TOL && dr < SYMMETRY_TOL,
    }
}

/// Ready-made problems used throughout the tests, the CLI examples and the suite.
pub mod catalog {
    use super::*;
    use serde_json::json;

    fn sign() -> CoefficientSpec {
        CoefficientSpec::builtin("sign", json!({}))
    }

    /// `r = sgn x`, `p = 1`, `q = (kappa+1)^2 - kappa(kappa+1)/cosh^2 x`.
    pub fn poschl_teller(kappa: u32) -> ProblemSpec {
        ProblemSpec {
            name: Some(format!("sech2_k{kappa}")),
            r: sign(),
            p: CoefficientSpec::constant(1.0),
            q: CoefficientSpec::builtin("poschl_teller", json!({ "kappa": kappa as f64 })),
            c: 0.0,
            symmetric: true,
            ess_model: EssentialSpectrumModel::ConstantTail {
                q_inf: ((kappa + 1) * (kappa + 1)) as f64,
            },
            truncation: TruncationPolicy { x0: 30.0, growth: 2.0, max_x: 60.0, tol: 1e-9 },
        }
    }

    /// `r = sgn x`, `p = 1`, `q = q_inf` constant.
    pub fn constant(q_inf: f64) -> ProblemSpec {
        ProblemSpec {
            name: Some(format!("const_q{q_inf}")),
            r: sign(),
            p: CoefficientSpec::constant(1.0),
            q: CoefficientSpec::constant(q_inf),
            c: 0.0,
            symmetric: true,
            ess_model: EssentialSpectrumModel::ConstantTail { q_inf },
            truncation: TruncationPolicy { x0: 30.0, growth: 2.0, max_x: 120.0, tol: 1e-10 },
        }
    }

    /// Inverse-square tail `q = q_inf - gamma/(x0^2 + x^2)` on both sides.
    pub fn kneser(gamma: f64, x0: f64, max_x: f64) -> ProblemSpec {
        ProblemSpec {
            name: Some(format!("kneser_g{gamma}")),
            r: sign(),
            p: CoefficientSpec::constant(1.0),
            q: CoefficientSpec::builtin(
                "rational_tail",
                json!({ "q_inf": 1.0, "gamma": gamma, "x0": x0 }),
            ),
            c: 0.0,
            symmetric: true,
            ess_model: EssentialSpectrumModel::ConstantTail { q_inf: 1.0 },
            truncation: TruncationPolicy { x0: 25.0, growth: 2.0, max_x, tol: 1e-8 },
        }
    }

    /// `q = mean + amplitude cos(2 pi x / period)` with `r = sgn x`. With a
    /// nonzero `left_phase` the cosine on `x < 0` is shifted, breaking symmetry.
    pub fn periodic(mean: f64, amplitude: f64, period: f64, left_phase: f64) -> ProblemSpec {
        let right = CoefficientSpec::builtin(
            "cosine",
            json!({ "mean": mean, "amplitude": amplitude, "period": period, "phase": 0.0 }),
        );
        let q = if left_phase == 0.0 {
            right
        } else {
            CoefficientSpec::Piecewise {
                piecewise: PiecewiseSpec {
                    at: 0.0,
                    left: Box::new(CoefficientSpec::builtin(
                        "cosine",
                        json!({
                            "mean": mean, "amplitude": amplitude,
                            "period": period, "phase": left_phase
                        }),
                    )),
                    right: Box::new(right),
                },
            }
        };
        ProblemSpec {
            name: Some(format!("periodic_{mean}_{amplitude}_{left_phase}")),
            r: sign(),
            p: CoefficientSpec::constant(1.0),
            q,
            c: 0.0,
            symmetric: left_phase == 0.0,
            ess_model: EssentialSpectrumModel::PeriodicBands { period },
            truncation: TruncationPolicy::default(),
        }
    }

    /// Gaussian wells below a constant tail.
    pub fn wells(q_inf: f64, wells: &[GaussianWell], symmetric: bool) -> ProblemSpec {
        ProblemSpec {
            name: None,
            r: sign(),
            p: CoefficientSpec::constant(1.0),
            q: CoefficientSpec::builtin("gaussian_wells", json!({ "q_inf": q_inf, "wells": wells })),
            c: 0.0,
            symmetric,
            ess_model: EssentialSpectrumModel::ConstantTail { q_inf },
            truncation: TruncationPolicy { x0: 30.0, growth: 2.0, max_x: 60.0, tol: 1e-9 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use serde_json::json;

    #[test]
    fn poschl_teller_problem_is_valid_and_symmetric() {
        let problem = build_problem(&catalog::poschl_teller(2)).unwrap();
        assert!(problem.symmetric);
        let report = check_symmetry(&problem, 1000);
        assert_eq!(report.p_defect, 0.0);
        assert_eq!(report.q_defect, 0.0);
        assert_eq!(report.r_defect, 0.0);
        assert!(report.symmetric);
    }

    #[test]
    fn constant_problem_is_valid() {
        let problem = build_problem(&catalog::constant(1.0)).unwrap();
        assert_eq!(problem.ess_model, EssentialSpectrumModel::ConstantTail { q_inf: 1.0 });
        assert!(problem.validation.sign_pattern_ok);
    }

    #[test]
    fn positive_weight_everywhere_is_rejected() {
        let mut spec = catalog::constant(1.0);
        spec.r = CoefficientSpec::constant(1.0);
        spec.symmetric = false;
        match build_problem(&spec) {
            Err(Error::SignPatternViolation { x, .. }) => assert!(x < 0.0),
            other => panic!("expected SignPatternViolation, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_p_is_rejected() {
        let mut spec = catalog::constant(1.0);
        spec.p = CoefficientSpec::expr("x^2 - 1");
        spec.symmetric = false;
        assert!(matches!(build_problem(&spec), Err(Error::NonpositiveP { .. })));
    }

    #[test]
    fn shifted_bump_breaks_symmetry() {
        let mut spec = catalog::constant(1.0);
        spec.q = CoefficientSpec::expr("1 + exp(-(x-1)^2)");
        spec.symmetric = false;
        let problem = build_problem(&spec).unwrap();
        let report = check_symmetry(&problem, 1000);
        assert!(report.q_defect > 0.1);
        assert!(!report.symmetric);

        spec.symmetric = true;
        assert!(matches!(
            build_problem(&spec),
            Err(Error::SymmetryDeclaredButViolated(_))
        ));
    }

    #[test]
    fn periodic_cosine_is_symmetric() {
        let problem = build_problem(&catalog::periodic(10.0, 2.0, 1.0, 0.0)).unwrap();
        let report = check_symmetry(&problem, 10_000);
        // cos is even in floating point: cos(-t) is computed as cos(t).
        assert_eq!(report.q_defect, 0.0);
        assert_eq!(report.p_defect, 0.0);
        assert_eq!(report.r_defect, 0.0);
    }

    #[test]
    fn symmetric_declaration_needs_origin_split() {
        let mut spec = catalog::constant(1.0);
        spec.c = 0.5;
        spec.r = CoefficientSpec::builtin("sign", json!({ "at": 0.5 }));
        assert!(matches!(
            build_problem(&spec),
            Err(Error::SymmetryDeclaredButViolated(_))
        ));
    }

    #[test]
    fn validation_is_deterministic() {
        let spec = catalog::periodic(10.0, 2.0, 1.0, 0.7);
        let a = build_problem(&spec).unwrap();
        let b = build_problem(&spec).unwrap();
        assert_eq!(a.validation, b.validation);
        assert_eq!(a.digest, b.digest);
        let ra = check_symmetry(&a, 5000);
        let rb = check_symmetry(&b, 5000);
        assert_eq!(ra.q_defect.to_bits(), rb.q_defect.to_bits());
        assert!(!ra.symmetric);
    }

    #[test]
    fn json_round_trip_and_schema_errors() {
        let spec = catalog::poschl_teller(3);
        let text = spec.to_json();
        let back = ProblemSpec::from_json(&text).unwrap();
        assert_eq!(spec, back);

        let bad = r#"{"r": {"builtin": "sign"}, "p": {"expr": "1"}, "q": {"expr": "1"},
                      "ess_model": {"kind": "constant_tail", "q_inf": 1}, "bogus": 1}"#;
        assert!(matches!(ProblemSpec::from_json(bad), Err(Error::Parse(_))));

        let unknown_builtin = r#"{"r": {"builtin": "sign"}, "p": {"builtin": "nope"},
                      "q": {"expr": "1"}, "ess_model": {"kind": "constant_tail", "q_inf": 1}}"#;
        assert!(matches!(IndefiniteProblem::from_json(unknown_builtin), Err(Error::Parse(_))));

        let bad_expr = r#"{"r": {"builtin": "sign"}, "p": {"expr": "1 +"},
                      "q": {"expr": "1"}, "ess_model": {"kind": "constant_tail", "q_inf": 1}}"#;
        assert!(matches!(IndefiniteProblem::from_json(bad_expr), Err(Error::Parse(_))));
    }

    #[test]
    fn builtins_match_direct_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pt = Coefficient::PoschlTeller { kappa: 3.0 };
        let s2 = Coefficient::Sech2 { offset: 4.0, amplitude: 2.5, width: 1.7 };
        let rt = Coefficient::RationalTail { q_inf: 1.0, gamma: 0.5, x0: 1.0 };
        let cs = Coefficient::Cosine { mean: 10.0, amplitude: 2.0, period: 1.0, phase: 0.3 };
        let gw = Coefficient::GaussianWells {
            q_inf: 3.0,
            wells: vec![GaussianWell { amplitude: 2.0, center: 0.4, width: 1.3 }],
        };
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(-40.0..40.0);
            let c = x.cosh();
            assert!(rel(pt.eval(x), 16.0 - 12.0 / (c * c)) <= 1e-15);
            let c2 = (x / 1.7).cosh();
            assert!(rel(s2.eval(x), 4.0 - 2.5 / (c2 * c2)) <= 1e-15);
            assert!(rel(rt.eval(x), 1.0 - 0.5 / (1.0 + x * x)) <= 1e-15);
            let expected = 10.0 + 2.0 * (2.0 * std::f64::consts::PI * x + 0.3).cos();
            assert!(rel(cs.eval(x), expected) <= 1e-15);
            let expected = 3.0 - 2.0 * (-(x - 0.4) * (x - 0.4) / 1.3).exp();
            assert!(rel(gw.eval(x), expected) <= 1e-15);
        }
    }

    #[test]
    fn declared_gap_model() {
        let model = EssentialSpectrumModel::DeclaredGaps { gaps: vec![(0.0, 2.0), (3.0, 5.0)] };
        assert_eq!(model.min_essential(), Some(2.0));
        assert_eq!(model.distance(4.0), Some(1.0));
        assert_eq!(model.distance(2.5), Some(0.0));
        assert_eq!(model.interval_is_gap(3.5, 5.0), Some(true));
        assert_eq!(model.interval_is_gap(1.0, 3.5), Some(false));
        let overlapping = EssentialSpectrumModel::DeclaredGaps { gaps: vec![(0.0, 2.0), (1.0, 5.0)] };
        assert!(overlapping.validate().is_err());
    }

    #[test]
    fn truncation_schedule_doubles() {
        let policy = TruncationPolicy { x0: 30.0, growth: 2.0, max_x: 240.0, tol: 1e-9 };
        assert_eq!(policy.schedule(), vec![30.0, 60.0, 120.0, 240.0]);
    }
}
