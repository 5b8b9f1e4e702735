//! Rate exponents for the propagation-of-chaos bounds, in exact arithmetic.

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{LabError, Result};

pub type Rational = Ratio<i128>;

/// A positive exponent that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

impl Exponent {
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_infinite() && x > 0.0 {
            Ok(Exponent::Infinite)
        } else {
            Ok(Exponent::Finite(rational(x)?))
        }
    }

    /// `a / self`, zero when infinite.
    fn under(&self, a: Rational) -> Rational {
        match self {
            Exponent::Finite(q) => a / *q,
            Exponent::Infinite => Rational::zero(),
        }
    }

    fn exceeds(&self, a: Rational) -> bool {
        match self {
            Exponent::Finite(q) => *q > a,
            Exponent::Infinite => true,
        }
    }
}

/// Exact rational for a float with a short decimal expansion.
pub fn rational(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(LabError::invalid(format!("{x} is not a finite number")));
    }
    Rational::approximate_float(x).ok_or_else(|| LabError::invalid(format!("cannot represent {x} as a fraction")))
}

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

/// Regularity assumption on the interaction kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegularityCase {
    Holder { alpha: Rational },
    /// Translation-invariant kernel with profile in `W^{s,q}`.
    Sobolev { s: Rational, q: Exponent },
}

impl RegularityCase {
    pub fn holder(alpha: f64) -> Result<Self> {
        Ok(RegularityCase::Holder { alpha: rational(alpha)? })
    }

    pub fn sobolev(s: f64, q: f64) -> Result<Self> {
        Ok(RegularityCase::Sobolev { s: rational(s)?, q: Exponent::from_f64(q)? })
    }
}

fn hyp(msg: String) -> LabError {
    LabError::Hypothesis(msg)
}

fn moment_term(p: Exponent, d: i128) -> Result<Rational> {
    match p {
        Exponent::Finite(p) => {
            if p <= Rational::one() {
                return Err(hyp(format!("moment order p = {p} must exceed 1")));
            }
            if p == r(2, 1) {
                return Err(hyp("moment order p = 2 is excluded".into()));
            }
            Ok(Rational::from_integer(d) / (p - Rational::one()))
        }
        Exponent::Infinite => Ok(Rational::zero()),
    }
}

fn max(a: Rational, b: Rational) -> Rational {
    if a > b {
        a
    } else {
        b
    }
}

fn check_q(q: Exponent) -> Result<()> {
    if !q.exceeds(r(2, 1)) {
        return Err(hyp("integrability q must lie in (2, inf]".into()));
    }
    Ok(())
}

fn d_over_q(q: Exponent, d: i128) -> Rational {
    q.under(Rational::from_integer(d))
}

/// Supremal exponent for first-order systems:
/// `1 / (2 + max((d+2)/a^2, d/(p-1)))` with `a` the Hölder or Sobolev index.
pub fn gamma_first_order(case: RegularityCase, p: Exponent, d: u32) -> Result<Rational> {
    if d == 0 {
        return Err(LabError::invalid("dimension must be positive"));
    }
    let di = d as i128;
    let a = match case {
        RegularityCase::Holder { alpha } => {
            if !(alpha > Rational::zero() && alpha <= Rational::one()) {
                return Err(hyp(format!("alpha = {alpha}: alpha must lie in (0,1]")));
            }
            alpha
        }
        RegularityCase::Sobolev { s, q } => {
            check_q(q)?;
            if s > Rational::one() {
                return Err(hyp(format!("s = {s} exceeds 1")));
            }
            let floor = q.under(Rational::from_integer(2 + di));
            if s <= floor {
                return Err(hyp(format!("s = {s} violates s > (2+d)/q = {floor}")));
            }
            if let Exponent::Finite(pv) = p {
                if pv <= d_over_q(q, di) {
                    return Err(hyp("moment order must exceed d/q".into()));
                }
            }
            s
        }
    };
    let m = moment_term(p, di)?;
    let reg = Rational::from_integer(di + 2) / (a * a);
    Ok(Rational::one() / (r(2, 1) + max(reg, m)))
}

/// Exponent for second-order (kinetic) systems. Hölder case:
/// `1 / (2 + max((d+1)/a^2, d/(p-1)))` for `a in (2/3, 1]`. Sobolev case:
/// `1 / (2 + (d+1)/s^2)` for `s <= 1`, else `1 / (2 + max((d+1)/s, d))`.
pub fn gamma_second_order(case: RegularityCase, p: Exponent, d: u32) -> Result<Rational> {
    if d == 0 {
        return Err(LabError::invalid("dimension must be positive"));
    }
    let di = d as i128;
    let dp1 = Rational::from_integer(di + 1);
    match case {
        RegularityCase::Holder { alpha } => {
            if alpha > Rational::one() {
                return Err(hyp(format!("alpha = {alpha}: alpha must lie in (0,1]")));
            }
            if alpha <= r(2, 3) {
                return Err(hyp(format!("alpha = {alpha}: needs a Hölder exponent greater than 2/3")));
            }
            let m = moment_term(p, di)?;
            Ok(Rational::one() / (r(2, 1) + max(dp1 / (alpha * alpha), m)))
        }
        RegularityCase::Sobolev { s, q } => {
            check_q(q)?;
            if !q.exceeds(dp1 / s) {
                return Err(hyp(format!("q must exceed (d+1)/s = {}", dp1 / s)));
            }
            let lower = r(2, 3) + d_over_q(q, di);
            if s > r(3, 2) || s <= lower {
                return Err(hyp(format!("s = {s} must satisfy {lower} < s <= 3/2")));
            }
            match p {
                Exponent::Finite(pv) if pv <= r(2, 1) || pv <= d_over_q(q, di) => {
                    return Err(hyp("moment order must exceed 2 and d/q".into()));
                }
                _ => {}
            }
            if s <= Rational::one() {
                Ok(Rational::one() / (r(2, 1) + dp1 / (s * s)))
            } else {
                Ok(Rational::one() / (r(2, 1) + max(dp1 / s, Rational::from_integer(di))))
            }
        }
    }
}

pub fn to_f64(x: Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Convenience: first-order Hölder exponent from floats.
pub fn gamma_holder_first_order(alpha: f64, p: f64, d: u32) -> Result<f64> {
    gamma_first_order(RegularityCase::holder(alpha)?, Exponent::from_f64(p)?, d).map(to_f64)
}


#[cfg(test)]
mod tests {
    use super::*;

    fn fin(x: f64) -> Exponent {
        Exponent::from_f64(x).unwrap()
    }

    #[test]
    fn first_order_values() {
        let g = gamma_first_order(RegularityCase::holder(1.0).unwrap(), fin(3.0), 1).unwrap();
        assert_eq!(g, r(1, 5));
        let g = gamma_first_order(RegularityCase::holder(0.5).unwrap(), fin(4.0), 1).unwrap();
        assert_eq!(g, r(1, 14));
        let g = gamma_first_order(RegularityCase::holder(1.0).unwrap(), Exponent::Infinite, 1).unwrap();
        assert_eq!(g, r(1, 5));
        assert!(gamma_first_order(RegularityCase::holder(0.5).unwrap(), fin(2.0), 1).is_err());
        let e = gamma_first_order(RegularityCase::sobolev(0.5, 4.0).unwrap(), fin(4.0), 1).unwrap_err();
        assert!(e.to_string().contains("(2+d)/q"));
    }

    #[test]
    fn second_order_values() {
        let g = gamma_second_order(RegularityCase::holder(0.75).unwrap(), fin(4.0), 1).unwrap();
        assert_eq!(g, r(9, 50));
        let g = gamma_second_order(RegularityCase::sobolev(1.5, f64::INFINITY).unwrap(), fin(4.0), 1).unwrap();
        assert_eq!(g, r(3, 10));
        assert!(gamma_second_order(RegularityCase::holder(0.67).unwrap(), fin(4.0), 1).is_ok());
        let e = gamma_second_order(RegularityCase::holder(0.66).unwrap(), fin(4.0), 1).unwrap_err();
        assert!(e.to_string().contains("greater than 2/3"));
    }

    #[test]
    fn monotone_in_alpha_and_p() {
        let mut last = Rational::zero();
        for k in 1..=20 {
            let g = gamma_first_order(RegularityCase::holder(k as f64 / 20.0).unwrap(), fin(4.0), 1).unwrap();
            assert!(g >= last);
            last = g;
        }
        let mut last = Rational::zero();
        for p in [1.5, 3.0, 4.0, 6.0, 10.0] {
            let g = gamma_first_order(RegularityCase::holder(1.0).unwrap(), fin(p), 2).unwrap();
            assert!(g >= last);
            last = g;
        }
    }
}
