//! Finite-difference matrix pencils, used only to cross-check the
//! shooting code.
//!
//! `T` discretizes `-(p f')' + q f` in divergence form with midpoint values
//! of `p`, scaled by the grid step so that `T v = lambda R v` with
//! `R = diag(r(x_i) h)`. Two routes produce eigenvalues: a dense reduction
//! `S = L^-1 R L^-T` of the whole pencil, and Sylvester inertia of the
//! tridiagonal `T - lambda R` followed by bisection. Both only ever factor
//! symmetric matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::coefficients::IndefiniteProblem;
use crate::count::{finish, CountReport, OperatorTag, PartCount, PassInfo, TruncationInfo};
use crate::error::{Error, Result};
use crate::report::Enclosure;

/// Which part of the line a pencil lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `(c - X, c + X)`.
    Full,
    /// `(c, c + X)`.
    Plus,
    /// `(c - X, c)`.
    Minus,
    /// One period starting at `c`, periodic boundary.
    Periodic,
    /// One period starting at `c`, antiperiodic boundary.
    Antiperiodic,
}

/// Weight used for `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// `r`, for `JA`.
    Signed,
    /// `|r|`, for `A` and the half-line operators.
    Abs,
}

/// Symmetric tridiagonal `T` (possibly with a corner entry) and diagonal `R`.
#[derive(Debug, Clone)]
pub struct Pencil {
    pub diag: Vec<f64>,
    /// `off[i]` couples nodes `i` and `i + 1`.
    pub off: Vec<f64>,
    /// Coupling between the last and first node; zero unless periodic.
    pub corner: f64,
    pub weight: Vec<f64>,
    pub nodes: Vec<f64>,
    pub h: f64,
    pub x: f64,
    pub domain: Domain,
}

impl Pencil {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Number of negative eigenvalues of `T - lambda R`.
    pub fn negative_count(&self, lambda: f64) -> usize {
        if self.corner != 0.0 {
            return self.cyclic_negative_count(lambda);
        }
        let mut neg = 0;
        let mut piv = 1.0;
        for i in 0..self.n() {
            let mut d = self.diag[i] - lambda * self.weight[i];
            if i > 0 {
                d -= self.off[i - 1] * self.off[i - 1] / piv;
            }
            if d == 0.0 {
                d = -f64::MIN_POSITIVE;
            }
            if d < 0.0 {
                neg += 1;
            }
            piv = d;
        }
        neg
    }

    /// Inertia of the cyclic matrix by bordering the last node: the
    /// leading block is tridiagonal, the Schur complement is a scalar.
    fn cyclic_negative_count(&self, lambda: f64) -> usize {
        let n = self.n();
        let m = n - 1;
        let mut piv = vec![0.0; m];
        let mut neg = 0;
        for i in 0..m {
            let mut d = self.diag[i] - lambda * self.weight[i];
            if i > 0 {
                d -= self.off[i - 1] * self.off[i - 1] / piv[i - 1];
            }
            if d == 0.0 {
                d = -f64::MIN_POSITIVE;
            }
            if d < 0.0 {
                neg += 1;
            }
            piv[i] = d;
        }
        // Solve M0 y = b with b = corner e_0 + off[m-1] e_{m-1}.
        let mut b = vec![0.0; m];
        b[0] += self.corner;
        b[m - 1] += self.off[m - 1];
        let mut z = b.clone();
        for i in 1..m {
            z[i] -= self.off[i - 1] / piv[i - 1] * z[i - 1];
        }
        let mut y = vec![0.0; m];
        y[m - 1] = z[m - 1] / piv[m - 1];
        for i in (0..m - 1).rev() {
            y[i] = (z[i] - self.off[i] * y[i + 1]) / piv[i];
        }
        let schur = self.diag[m] - lambda * self.weight[m] - b.iter().zip(&y).map(|(u, v)| u * v).sum::<f64>();
        neg + usize::from(schur <= 0.0)
    }

    /// `#{eigenvalues in (0, lambda)}` for `lambda > 0` and minus the number
    /// in `(lambda, 0)` for `lambda < 0`. With `T` positive definite both
    /// equal the number of negative eigenvalues of `T - lambda R`.
    pub fn counting_function(&self, lambda: f64) -> i64 {
        let neg = self.negative_count(lambda) as i64;
        if lambda < 0.0 {
            -neg
        } else {
            neg
        }
    }

    /// Pencil eigenvalues in the open interval `(a, b)`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        (self.counting_function(b) - self.counting_function(a)).max(0) as usize
    }

    /// Eigenvalues in `(a, b)`, each bisected to width `tol`.
    pub fn eigenvalues_in(&self, a: f64, b: f64, tol: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.split(a, b, self.counting_function(a), self.counting_function(b), tol, &mut out);
        out
    }

    fn split(&self, a: f64, b: f64, fa: i64, fb: i64, tol: f64, out: &mut Vec<f64>) {
        if fb <= fa {
            return;
        }
        let mid = 0.5 * (a + b);
        if b - a <= tol.max(4.0 * f64::EPSILON * mid.abs()) {
            for _ in fa..fb {
                out.push(mid);
            }
            return;
        }
        let fm = self.counting_function(mid);
        self.split(a, mid, fa, fm, tol, out);
        self.split(mid, b, fm, fb, tol, out);
    }

    /// The `k`-th smallest eigenvalue (from 0) of a pencil with positive
    /// weight.
    pub fn kth_eigenvalue(&self, k: usize, tol: f64) -> f64 {
        let mut lo = -1.0;
        while self.negative_count(lo) > k {
            lo *= 2.0;
        }
        let mut hi = 1.0;
        while self.negative_count(hi) <= k {
            hi *= 2.0;
        }
        while hi - lo > tol.max(4.0 * f64::EPSILON * hi.abs()) {
            let mid = 0.5 * (lo + hi);
            if self.negative_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `LDL^T` of `T`, failing at the first nonpositive pivot.
    pub fn check_positive_definite(&self) -> Result<()> {
        if self.corner != 0.0 {
            return if self.cyclic_negative_count(0.0) == 0 {
                Ok(())
            } else {
                Err(Error::NonPositiveDefiniteT { index: self.n() - 1, pivot: f64::NAN })
            };
        }
        let mut piv: f64 = 1.0;
        for i in 0..self.n() {
            let mut d = self.diag[i];
            if i > 0 {
                d -= self.off[i - 1] * self.off[i - 1] / piv;
            }
            if !(d > 0.0) {
                return Err(Error::NonPositiveDefiniteT { index: i, pivot: d });
            }
            piv = d;
        }
        Ok(())
    }

    fn dense_t(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut t = DMatrix::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = self.diag[i];
            if i + 1 < n {
                t[(i, i + 1)] = self.off[i];
                t[(i + 1, i)] = self.off[i];
            }
        }
        if self.corner != 0.0 {
            t[(0, n - 1)] += self.corner;
            t[(n - 1, 0)] += self.corner;
        }
        t
    }
}

fn sample_pencil(problem: &IndefiniteProblem, domain: Domain, weight: Weight, nodes: Vec<f64>, h: f64, x: f64) -> Pencil {
    let field = &problem.coeffs;
    let n = nodes.len();
    let p_mid = |xm: f64| field.p.eval(xm);
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for (i, &xi) in nodes.iter().enumerate() {
        let s = field.sample(xi);
        let pl = p_mid(xi - 0.5 * h);
        let pr = p_mid(xi + 0.5 * h);
        diag.push((pl + pr) / h + s.q * h);
        if i + 1 < n {
            off.push(-pr / h);
        }
        w.push(match weight {
            Weight::Signed => s.r * h,
            Weight::Abs => s.r.abs() * h,
        });
    }
    let corner = match domain {
        Domain::Periodic | Domain::Antiperiodic => {
            let c = -p_mid(nodes[n - 1] + 0.5 * h) / h;
            off.push(c);
            if domain == Domain::Periodic {
                c
            } else {
                -c
            }
        }
        _ => 0.0,
    };
    if corner == 0.0 {
        off.truncate(n.saturating_sub(1));
    }
    Pencil { diag, off, corner, weight: w, nodes, h, x, domain }
}

/// Dirichlet pencil on an arbitrary interval `(lo, hi)` with `n` interior nodes.
pub fn discretize_span(problem: &IndefiniteProblem, weight: Weight, lo: f64, hi: f64, n: usize) -> Result<Pencil> {
    if n < 16 || !(lo < hi) {
        return Err(Error::InvalidProblem(format!("need n >= 16 and lo < hi, got n = {n}, ({lo}, {hi})")));
    }
    let h = (hi - lo) / (n + 1) as f64;
    let nodes = (0..n).map(|i| lo + (i + 1) as f64 * h).collect();
    let pencil = sample_pencil(problem, Domain::Full, weight, nodes, h, 0.5 * (hi - lo));
    pencil.check_positive_definite()?;
    Ok(pencil)
}

/// Full-line pencil on `(c - X, c + X)` with `n` interior nodes and the
/// signed weight `r`.
pub fn discretize(problem: &IndefiniteProblem, x: f64, n: usize) -> Result<Pencil> {
    discretize_on(problem, Domain::Full, Weight::Signed, x, n)
}

/// Pencil on one of the domains. `x` is ignored for periodic domains,
/// which always span one period.
pub fn discretize_on(problem: &IndefiniteProblem, domain: Domain, weight: Weight, x: f64, n: usize) -> Result<Pencil> {
    if n < 16 {
        return Err(Error::InvalidProblem(format!("oracle grids need n >= 16, got {n}")));
    }
    let c = problem.c;
    let pencil = match domain {
        Domain::Full | Domain::Plus | Domain::Minus => {
            if !(x > 0.0) {
                return Err(Error::InvalidProblem(format!("cutoff must be positive, got {x}")));
            }
            let (start, len) = match domain {
                Domain::Full => (c - x, 2.0 * x),
                Domain::Plus => (c, x),
                _ => (c - x, x),
            };
            let h = len / (n + 1) as f64;
            let nodes = (0..n).map(|i| start + (i + 1) as f64 * h).collect();
            sample_pencil(problem, domain, weight, nodes, h, x)
        }
        Domain::Periodic | Domain::Antiperiodic => {
            let period = problem
                .period()
                .ok_or_else(|| Error::NotApplicable("periodic pencils need periodic coefficients".into()))?;
            let h = period / n as f64;
            let nodes = (0..n).map(|i| c + i as f64 * h).collect();
            sample_pencil(problem, domain, weight, nodes, h, period)
        }
    };
    pencil.check_positive_definite()?;
    Ok(pencil)
}

/// All eigenvalues of `T v = lambda R v`, sorted, by the reciprocal
/// Cholesky reduction: `T = L L^T`, `S = L^-1 R L^-T`, `lambda = 1 / mu`.
pub fn pencil_eigenvalues(pencil: &Pencil) -> Result<Vec<f64>> {
    let n = pencil.n();
    let chol = pencil
        .dense_t()
        .cholesky()
        .ok_or_else(|| Error::FactorizationFailure("T is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::FactorizationFailure("singular Cholesky factor".into()))?;
    let mut scaled = linv.clone();
    for (k, &r) in pencil.weight.iter().enumerate() {
        scaled.column_mut(k).scale_mut(r);
    }
    let s = &scaled * linv.transpose();
    let s = 0.5 * (&s + s.transpose());
    let eig = SymmetricEigen::new(s);
    let mut out = Vec::with_capacity(n);
    for &mu in eig.eigenvalues.iter() {
        if mu == 0.0 || !mu.is_finite() {
            return Err(Error::FactorizationFailure(format!("reduced eigenvalue {mu}")));
        }
        out.push(1.0 / mu);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Smallest distance between neighbouring values of a sorted list.
pub fn min_separation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Largest mismatch between `lambda` and `-mu` partners of a spectrum.
pub fn pairing_defect(values: &[f64]) -> f64 {
    let mut pos: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    let mut neg: Vec<f64> = values.iter().filter(|v| **v < 0.0).map(|v| -v).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    if pos.len() != neg.len() {
        return f64::INFINITY;
    }
    pos.iter().zip(&neg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Richardson extrapolation for an `O(h^2)` error.
pub fn richardson(coarse: f64, h_coarse: f64, fine: f64, h_fine: f64) -> f64 {
    let (a, b) = (h_coarse * h_coarse, h_fine * h_fine);
    (a * fine - b * coarse) / (a - b)
}

fn pencils_for(problem: &IndefiniteProblem, tag: OperatorTag, x: f64, n: usize) -> Result<Vec<(Pencil, i8)>> {
    use Domain::*;
    Ok(match tag {
        OperatorTag::A => vec![(discretize_on(problem, Full, Weight::Abs, x, n)?, 1)],
        OperatorTag::JA => vec![(discretize_on(problem, Full, Weight::Signed, x, n)?, 1)],
        OperatorTag::Bplus => vec![(discretize_on(problem, Plus, Weight::Abs, x, n)?, 1)],
        OperatorTag::Bminusneg => vec![(discretize_on(problem, Minus, Weight::Abs, x, n)?, -1)],
        OperatorTag::B => vec![
            (discretize_on(problem, Plus, Weight::Abs, x, n)?, 1),
            (discretize_on(problem, Minus, Weight::Abs, x, n)?, 1),
        ],
        OperatorTag::JB => vec![
            (discretize_on(problem, Plus, Weight::Abs, x, n)?, 1),
            (discretize_on(problem, Minus, Weight::Abs, x, n)?, -1),
        ],
    })
}

fn count_with(pencils: &[(Pencil, i8)], a: f64, b: f64) -> usize {
    pencils
        .iter()
        .map(|(p, s)| if *s < 0 { p.count_in(-b, -a) } else { p.count_in(a, b) })
        .sum()
}

fn locate_with(pencils: &[(Pencil, i8)], a: f64, b: f64, tol: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for (p, s) in pencils {
        if *s < 0 {
            out.extend(p.eigenvalues_in(-b, -a, tol).into_iter().map(|v| -v));
        } else {
            out.extend(p.eigenvalues_in(a, b, tol));
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Oracle counts and eigenvalues of an operator over `(a, b)` (or the
/// symmetric union for `JA`, `JB` with `a >= 0`) at cutoff `x` and `n` nodes.
///
/// Eigenvalues are Richardson extrapolations from `n` and `2n` nodes; the
/// enclosure radius is the size of the correction. The truncation record
/// lists the counts at `(n, X)`, `(2n, X)` and `(n, 2X)`; it is marked
/// converged when all three agree.
pub fn oracle_counts(problem: &IndefiniteProblem, tag: OperatorTag, a: f64, b: f64, x: f64, n: usize) -> Result<CountReport> {
    let intervals = crate::count::interpret_interval(tag, a, b);
    let eps = crate::count::endpoint_offset(a, b);
    let coarse = pencils_for(problem, tag, x, n)?;
    let fine = pencils_for(problem, tag, x, 2 * n)?;
    let wide = pencils_for(problem, tag, 2.0 * x, n)?;
    let total = |ps: &[(Pencil, i8)]| -> usize { intervals.iter().map(|&(lo, hi)| count_with(ps, lo + eps, hi - eps)).sum() };
    let counts = [total(&coarse), total(&fine), total(&wide)];
    let passes = vec![
        PassInfo { x: Some(x), count: counts[0] },
        PassInfo { x: Some(x), count: counts[1] },
        PassInfo { x: Some(2.0 * x), count: counts[2] },
    ];
    let converged = counts[0] == counts[1] && counts[1] == counts[2];
    let (hc, hf) = (coarse[0].0.h, fine[0].0.h);
    let mut eigs = Vec::new();
    let mut parts = Vec::new();
    for &(lo, hi) in &intervals {
        let lc = locate_with(&coarse, lo + eps, hi - eps, 1e-13);
        let lf = locate_with(&fine, lo + eps, hi - eps, 1e-13);
        parts.push(PartCount { interval: (lo, hi), count: lf.len() });
        if lc.len() == lf.len() {
            for (c, f) in lc.iter().zip(&lf) {
                let r = richardson(*c, hc, *f, hf);
                let rad = (r - f).abs().max(1e-13);
                eigs.push(Enclosure::new(r - rad, r + rad));
            }
        } else {
            eigs.extend(lf.iter().map(|&f| Enclosure::point(f)));
        }
    }
    let truncation = TruncationInfo { mode: "finite_difference", x_used: Some(x), passes, converged };
    let mut report = finish(tag, problem, intervals, parts, eigs, truncation);
    report.count = counts[1];
    report.count_is_lower_bound = false;
    report.flags.retain(|f| f != "truncation_not_converged" && f != "count_at_least_n_max");
    if !converged {
        report.flags.push("oracle_counts_unstable".into());
    }
    Ok(report)
}

/// The first `k` periodic or antiperiodic eigenvalues on one period with
/// weight `|r|`, Richardson-extrapolated from `n` and `2n` nodes.
pub fn periodic_eigenvalues(problem: &IndefiniteProblem, anti: bool, k: usize, n: usize) -> Result<Vec<f64>> {
    let domain = if anti { Domain::Antiperiodic } else { Domain::Periodic };
    let coarse = discretize_on(problem, domain, Weight::Abs, 0.0, n)?;
    let fine = discretize_on(problem, domain, Weight::Abs, 0.0, 2 * n)?;
    Ok((0..k)
        .map(|j| {
            let c = coarse.kth_eigenvalue(j, 1e-13);
            let f = fine.kth_eigenvalue(j, 1e-13);
            richardson(c, coarse.h, f, fine.h)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_problem, catalog};

    #[test]
    fn stencil_at_n3() {
        let p = build_problem(&catalog::constant(1.0)).unwrap();
        let x = 2.0;
        let h = 2.0 * x / 4.0;
        let nodes = vec![-1.0, 0.0, 1.0];
        let pen = sample_pencil(&p, Domain::Full, Weight::Signed, nodes, h, x);
        for i in 0..3 {
            assert!((pen.diag[i] - (2.0 / h + h)).abs() < 1e-15);
        }
        assert_eq!(pen.off, vec![-1.0 / h, -1.0 / h]);
        assert_eq!(pen.weight, vec![-h, -h, h]);
    }

    #[test]
    fn inertia_matches_dense() {
        let p = build_problem(&catalog::poschl_teller(2)).unwrap();
        let pen = discretize(&p, 10.0, 201).unwrap();
        let dense = pencil_eigenvalues(&pen).unwrap();
        for &(a, b) in &[(0.0, 9.0), (-9.0, 0.0), (3.0, 30.0), (-50.0, -2.0)] {
            let want = dense.iter().filter(|v| **v > a && **v < b).count();
            assert_eq!(pen.count_in(a, b), want, "({a}, {b})");
        }
        let located = pen.eigenvalues_in(0.0, 9.0, 1e-12);
        let from_dense: Vec<f64> = dense.iter().copied().filter(|v| *v > 0.0 && *v < 9.0).collect();
        for (x, y) in located.iter().zip(&from_dense) {
            assert!((x - y).abs() < 1e-8 * y.abs().max(1.0), "{x} {y}");
        }
    }

    #[test]
    fn abs_weight_is_standard_problem() {
        let p = build_problem(&catalog::constant(1.0)).unwrap();
        let pen = discretize_on(&p, Domain::Full, Weight::Abs, 5.0, 40).unwrap();
        let dense = pencil_eigenvalues(&pen).unwrap();
        let t = pen.dense_t();
        let mut direct: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().map(|v| v / pen.h).collect();
        direct.sort_by(f64::total_cmp);
        for (a, b) in dense.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-9 * b.abs(), "{a} {b}");
        }
    }

    #[test]
    fn weight_sign_pattern() {
        let p = build_problem(&catalog::poschl_teller(2)).unwrap();
        for n in [40, 41] {
            let pen = discretize(&p, 5.0, n).unwrap();
            assert_eq!(pen.weight.iter().filter(|w| **w < 0.0).count(), n.div_ceil(2));
        }
    }

    #[test]
    fn sech2_a_converges() {
        let p = build_problem(&catalog::poschl_teller(2)).unwrap();
        let r = oracle_counts(&p, OperatorTag::A, 3.0, 9.0, 30.0, 2000).unwrap();
        assert_eq!(r.count, 2);
        let v = r.values();
        assert!((v[0] - 5.0).abs() < 1e-5 && (v[1] - 8.0).abs() < 1e-5, "{v:?}");
        let ja = oracle_counts(&p, OperatorTag::JA, 3.0, 9.0, 30.0, 2000).unwrap();
        assert_eq!(ja.count, 2);
        assert_eq!(ja.parts.iter().map(|x| x.count).collect::<Vec<_>>(), vec![1, 1]);
    }

    #[test]
    fn cyclic_inertia_matches_dense() {
        let p = build_problem(&catalog::periodic(10.0, 2.0, 1.0, 0.0)).unwrap();
        for domain in [Domain::Periodic, Domain::Antiperiodic] {
            let pen = discretize_on(&p, domain, Weight::Abs, 0.0, 64).unwrap();
            let dense = pencil_eigenvalues(&pen).unwrap();
            for lam in [5.0, 12.0, 40.0, 100.0, 300.0] {
                let want = dense.iter().filter(|v| **v < lam).count();
                assert_eq!(pen.negative_count(lam), want, "{domain:?} {lam}");
            }
        }
    }

    #[test]
    fn free_periodic_spectrum() {
        // q = 10 constant: periodic eigenvalues 10 + (2 pi k)^2, antiperiodic 10 + (pi (2k+1))^2.
        let p = build_problem(&catalog::periodic(10.0, 0.0, 1.0, 0.0)).unwrap();
        let per = periodic_eigenvalues(&p, false, 3, 400).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let want = [10.0, 10.0 + 4.0 * pi2, 10.0 + 4.0 * pi2];
        for (a, b) in per.iter().zip(&want) {
            assert!((a - b).abs() < 1e-5, "{per:?}");
        }
        let anti = periodic_eigenvalues(&p, true, 2, 400).unwrap();
        assert!((anti[0] - (10.0 + pi2)).abs() < 1e-5 && (anti[1] - (10.0 + pi2)).abs() < 1e-5, "{anti:?}");
    }
}
