//! Safeguarded bracketing for sign changes of expensive functions.

use crate::error::{Error, Result};

/// A bracket `[lo, hi]` around a sign change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Shrinks `[lo, hi]` around the sign change of `f` until it is at most `tol`
/// wide. `flo` and `fhi` are `f(lo)`, `f(hi)` with opposite signs.
///
/// Illinois false position, falling back to bisection whenever an iteration
/// fails to halve the bracket twice in a row.
pub fn refine<F>(mut f: F, mut lo: f64, mut hi: f64, mut flo: f64, mut fhi: f64, tol: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    if flo == 0.0 {
        return Ok(Bracket { lo, hi: lo });
    }
    if fhi == 0.0 {
        return Ok(Bracket { lo: hi, hi });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::BisectionStall { lo, hi });
    }
    let mut retained = 0i8;
    let mut slow = 0u8;
    let mut iterations = 0usize;
    while hi - lo > tol {
        iterations += 1;
        if iterations > 400 {
            return Err(Error::BisectionStall { lo, hi });
        }
        let width = hi - lo;
        let mut x = if slow >= 2 {
            slow = 0;
            0.5 * (lo + hi)
        } else {
            lo - flo * (hi - lo) / (fhi - flo)
        };
        let guard = 0.25 * tol.min(0.5 * width);
        if !x.is_finite() {
            x = 0.5 * (lo + hi);
        }
        x = x.clamp(lo + guard, hi - guard);
        if x <= lo || x >= hi {
            break;
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(Bracket { lo: x, hi: x });
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if retained == 1 {
                fhi *= 0.5;
            }
            retained = 1;
        } else {
            hi = x;
            fhi = fx;
            if retained == -1 {
                flo *= 0.5;
            }
            retained = -1;
        }
        if hi - lo > 0.5 * width {
            slow += 1;
        } else {
            slow = 0;
        }
    }
    Ok(Bracket { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let mut calls = 0;
        let b = refine(
            |x| {
                calls += 1;
                Ok(x * x * x - 2.0)
            },
            0.0,
            3.0,
            -2.0,
            25.0,
            1e-12,
        )
        .unwrap();
        assert!(b.width() <= 1e-12);
        assert!(b.lo <= 2f64.cbrt() && 2f64.cbrt() <= b.hi);
        assert!(calls < 60, "{calls}");
    }

    #[test]
    fn handles_steep_functions() {
        let f = |x: f64| Ok((x - 0.3).tan() * 1e6 + if x > 0.3 { 1.0 } else { -1.0 });
        let b = refine(f, 0.0, 1.0, f(0.0).unwrap(), f(1.0).unwrap(), 1e-13).unwrap();
        assert!(b.lo <= 0.3 + 1e-13 && b.hi >= 0.3 - 1e-13);
    }

    #[test]
    fn rejects_same_signs() {
        assert!(refine(|x| Ok(x), 1.0, 2.0, 1.0, 2.0, 1e-9).is_err());
    }
}
