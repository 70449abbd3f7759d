//! Exponent pairs `(1/p, 1/q)` and the regions of the Riesz diagram.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExponentPair {
    inv_p: BigRational,
    inv_q: BigRational,
}

impl ExponentPair {
    pub fn new(inv_p: BigRational, inv_q: BigRational) -> Result<Self> {
        let unit = |x: &BigRational| *x >= BigRational::zero() && *x <= BigRational::one();
        if !unit(&inv_p) || !unit(&inv_q) {
            return Err(Error::Hypothesis(format!("exponents ({inv_p}, {inv_q}) must lie in [0,1]")));
        }
        Ok(ExponentPair { inv_p, inv_q })
    }

    /// From `(1/p, 1/q)` given as small fractions.
    pub fn from_ratios(p: (i64, i64), q: (i64, i64)) -> Result<Self> {
        Self::new(ratio(p.0, p.1), ratio(q.0, q.1))
    }

    /// From the exponents `p`, `q` themselves, `q = None` meaning infinity.
    pub fn from_exponents(p: &BigRational, q: Option<&BigRational>) -> Result<Self> {
        let inv = |x: &BigRational| {
            if x.is_zero() {
                Err(Error::Hypothesis("exponent must be positive".into()))
            } else {
                Ok(x.recip())
            }
        };
        Self::new(inv(p)?, q.map(inv).transpose()?.unwrap_or_else(BigRational::zero))
    }

    pub fn inv_p(&self) -> &BigRational {
        &self.inv_p
    }

    pub fn inv_q(&self) -> &BigRational {
        &self.inv_q
    }

    /// `1/r = 1/p - 1/q`
    pub fn inv_r(&self) -> BigRational {
        &self.inv_p - &self.inv_q
    }

    pub fn inv_p_dual(&self) -> BigRational {
        BigRational::one() - &self.inv_p
    }

    pub fn inv_q_dual(&self) -> BigRational {
        BigRational::one() - &self.inv_q
    }

    /// `(1/q', 1/p')`
    pub fn dual(&self) -> ExponentPair {
        ExponentPair { inv_p: self.inv_q_dual(), inv_q: self.inv_p_dual() }
    }

    /// The critical vertex `(D/(2D-1), (D-1)/(2D-1))`.
    pub fn critical(total_degree: usize) -> ExponentPair {
        let d = total_degree as i64;
        ExponentPair { inv_p: ratio(d, 2 * d - 1), inv_q: ratio(d - 1, 2 * d - 1) }
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.inv_p, self.inv_q)
    }
}

pub(crate) fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `q < p`
    Outside,
    Supercritical,
    CriticalBoundary,
    Subcritical,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Outside => "outside",
            Region::Supercritical => "supercritical",
            Region::CriticalBoundary => "critical_boundary",
            Region::Subcritical => "subcritical",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_for_degree(total_degree: usize, e: &ExponentPair) -> Region {
    if e.inv_q > e.inv_p {
        return Region::Outside;
    }
    let d = BigRational::from_integer(BigInt::from(total_degree));
    let dm1 = &d - BigRational::one();
    let lhs1 = &d * &e.inv_q;
    let rhs1 = &dm1 * &e.inv_p;
    let lhs2 = &d * e.inv_p_dual();
    let rhs2 = &dm1 * e.inv_q_dual();
    if lhs1 > rhs1 && lhs2 > rhs2 {
        Region::Supercritical
    } else if lhs1 == rhs1 || lhs2 == rhs2 {
        Region::CriticalBoundary
    } else {
        Region::Subcritical
    }
}

pub fn classify_exponents(c: &Curve, e: &ExponentPair) -> Region {
    classify_for_degree(c.total_degree(), e)
}

/// The three terms of the conjectured constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// `N^{-D(1/p-1/q)}`, from parabolic boxes
    Box,
    /// `N^{-1/q'}`, from a point mass
    Dirac,
    /// `N^{-1/p}`, from the image of the curve
    CurveImage,
}

impl Term {
    pub fn as_str(self) -> &'static str {
        match self {
            Term::Box => "box",
            Term::Dirac => "dirac",
            Term::CurveImage => "curve_image",
        }
    }
}

/// Exponents of `N` in the three terms, in the order box, dirac, curve image.
pub fn term_exponents(total_degree: usize, e: &ExponentPair) -> [(Term, BigRational); 3] {
    let d = BigRational::from_integer(BigInt::from(total_degree));
    [
        (Term::Box, -(d * e.inv_r())),
        (Term::Dirac, -e.inv_q_dual()),
        (Term::CurveImage, -e.inv_p.clone()),
    ]
}

/// Terms attaining the largest exponent (several on ties).
pub fn dominant_terms(total_degree: usize, e: &ExponentPair) -> Vec<Term> {
    let ex = term_exponents(total_degree, e);
    let max = ex.iter().map(|(_, x)| x).max().unwrap().clone();
    ex.into_iter().filter(|(_, x)| *x == max).map(|(t, _)| t).collect()
}

/// `N^{-D(1/p-1/q)} + N^{-1/q'} + N^{-1/p}`
pub fn conjectured_constant(c: &Curve, e: &ExponentPair, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Hypothesis("N must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(term_exponents(c.total_degree(), e)
        .iter()
        .map(|(_, x)| nf.powf(x.to_f64().unwrap_or(f64::NAN)))
        .sum())
}
