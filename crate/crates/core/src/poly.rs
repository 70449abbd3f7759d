//! Univariate integer polynomials in the variable `n`.
//!
//! Coefficients are stored in ascending order of powers and are always
//! trimmed, so the zero polynomial is the empty coefficient vector.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new<I, T>(coeffs: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        let mut coeffs: Vec<BigInt> = coeffs.into_iter().map(Into::into).collect();
        trim(&mut coeffs);
        IntPoly { coeffs }
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    /// `c * n^k`
    pub fn monomial(c: impl Into<BigInt>, k: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = c.into();
        IntPoly::new(coeffs)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the convention `deg 0 = 0`.
    pub fn deg(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn leading(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_i64(&self, x: i64) -> BigInt {
        self.eval(&BigInt::from(x))
    }

    pub fn scale(&self, a: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| c * a))
    }

    pub fn add(&self, other: &IntPoly) -> IntPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        IntPoly::new((0..len).map(|k| self.coeff(k) + other.coeff(k)))
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        IntPoly::new((0..len).map(|k| self.coeff(k) - other.coeff(k)))
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    /// `self(inner(n))`
    pub fn compose(&self, inner: &IntPoly) -> IntPoly {
        let mut acc = IntPoly::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(inner).add(&IntPoly::new([c.clone()]));
        }
        acc
    }

    /// gcd of the coefficients (non-negative), zero for the zero polynomial.
    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Exact division by a nonzero integer, `None` if some coefficient is not divisible.
    pub fn div_exact(&self, d: &BigInt) -> Option<IntPoly> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            let (q, r) = c.div_rem(d);
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        Some(IntPoly::new(out))
    }
}

fn trim(coeffs: &mut Vec<BigInt>) {
    while coeffs.last().is_some_and(|c| c.is_zero()) {
        coeffs.pop();
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if neg {
                write!(f, "-")?;
            } else if !first {
                write!(f, "+")?;
            }
            first = false;
            let a = c.abs();
            let unit = a.is_one();
            match k {
                0 => write!(f, "{a}")?,
                1 if unit => write!(f, "n")?,
                1 => write!(f, "{a}n")?,
                _ if unit => write!(f, "n^{k}")?,
                _ => write!(f, "{a}n^{k}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for IntPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_poly(s)
    }
}

struct Lexer<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn digits(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.bytes[start..self.pos]).unwrap())
    }
}

/// Parses a sum of signed monomials in `n`, e.g. `2n^3-n+5` or `3*n^2 + 1`.
pub fn parse_poly(text: &str) -> Result<IntPoly> {
    let mut lx = Lexer { bytes: text.as_bytes(), pos: 0 };
    let mut acc: Vec<BigInt> = Vec::new();
    let mut first = true;
    loop {
        let mut sign = BigInt::one();
        match lx.peek() {
            None if first => return lx.err("empty polynomial"),
            None => break,
            Some(b'+') => lx.pos += 1,
            Some(b'-') => {
                sign = -sign;
                lx.pos += 1;
            }
            Some(_) if first => {}
            Some(c) => return lx.err(format!("expected '+' or '-', found '{}'", c as char)),
        }
        first = false;

        let coef = lx.digits().map(|d| d.parse::<BigInt>().unwrap());
        if matches!(lx.peek(), Some(b'.') | Some(b'/')) {
            return lx.err("non-integer coefficient");
        }
        let mut has_var = false;
        if coef.is_some() && lx.peek() == Some(b'*') {
            lx.pos += 1;
            if lx.peek() != Some(b'n') {
                return lx.err("expected 'n' after '*'");
            }
        }
        if lx.peek() == Some(b'n') {
            lx.pos += 1;
            has_var = true;
        }
        if coef.is_none() && !has_var {
            return match lx.peek() {
                Some(c) => lx.err(format!("unexpected character '{}'", c as char)),
                None => lx.err("dangling sign"),
            };
        }
        let mut power = usize::from(has_var);
        if has_var && lx.peek() == Some(b'^') {
            lx.pos += 1;
            match lx.digits() {
                Some(d) => {
                    power = d.parse::<usize>().map_err(|_| Error::Parse {
                        pos: lx.pos,
                        msg: "exponent too large".into(),
                    })?;
                    if power > 64 {
                        return lx.err("exponent too large");
                    }
                }
                None => return lx.err("expected exponent after '^'"),
            }
        }
        let c = sign * coef.unwrap_or_else(BigInt::one);
        if acc.len() <= power {
            acc.resize(power + 1, BigInt::zero());
        }
        acc[power] += c;
    }
    Ok(IntPoly::new(acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> IntPoly {
        parse_poly(s).unwrap()
    }

    #[test]
    fn parses_examples() {
        assert_eq!(p("n^2"), IntPoly::new([0, 0, 1]));
        assert!(p("0").is_zero());
        assert_eq!(p("2n^3-n"), IntPoly::new([0, -1, 0, 2]));
        assert_eq!(p(" 3*n^2 + 1 "), IntPoly::new([1, 0, 3]));
        assert_eq!(p("-n+n"), IntPoly::zero());
        assert_eq!(p("5"), IntPoly::new([5]));
    }

    #[test]
    fn rejects_bad_input() {
        for bad in ["", "n^", "2.5n", "1/2n", "n n", "x^2", "2n^3-", "++n"] {
            assert!(matches!(parse_poly(bad), Err(Error::Parse { .. })), "{bad}");
        }
        match parse_poly("n^2+2.5") {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("non-integer")),
            other => panic!("{other:?}"),
        }
        match parse_poly("n+x") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn printer() {
        assert_eq!(p("2n^3-n+5").to_string(), "2n^3-n+5");
        assert_eq!(p("-n^2").to_string(), "-n^2");
        assert_eq!(IntPoly::zero().to_string(), "0");
        assert_eq!(p("1-3n").to_string(), "-3n+1");
    }

    #[test]
    fn arithmetic() {
        let a = p("n^2+1");
        let b = p("n-1");
        assert_eq!(a.mul(&b), p("n^3-n^2+n-1"));
        assert_eq!(a.compose(&b), p("n^2-2n+2"));
        assert_eq!(p("6n^2+4").content(), BigInt::from(2));
        assert_eq!(p("6n^2+4").div_exact(&BigInt::from(2)), Some(p("3n^2+2")));
        assert_eq!(p("6n^2+3").div_exact(&BigInt::from(2)), None);
        assert_eq!(p("2n^3-n").eval_i64(-2), BigInt::from(-14));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn print_parse_roundtrip(cs in proptest::collection::vec(-50i64..50, 0..7)) {
                let q = IntPoly::new(cs);
                prop_assert_eq!(parse_poly(&q.to_string()).unwrap(), q);
            }

            #[test]
            fn horner_matches_power_sum(cs in proptest::collection::vec(-50i64..50, 0..7), x in -30i64..30) {
                let q = IntPoly::new(cs.clone());
                let direct: BigInt = cs.iter().enumerate()
                    .map(|(k, c)| BigInt::from(*c) * num_traits::pow(BigInt::from(x), k))
                    .sum();
                prop_assert_eq!(q.eval_i64(x), direct);
            }
        }
    }
}
