//! Sparse multivariate integer polynomials, just enough to form the
//! difference quotients of a univariate polynomial.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poly::IntPoly;

const VARS: [&str; 3] = ["X", "Y", "Z"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigInt>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: impl Into<BigInt>) -> Self {
        let mut p = MultiPoly::zero(nvars);
        p.add_term(vec![0; nvars], c.into());
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = MultiPoly::zero(nvars);
        p.add_term(e, BigInt::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigInt)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    /// Total degree; zero for constants and the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Degree in variable `i`.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_default();
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, o: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }

    pub fn mul(&self, o: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    /// `p(inner)` for a univariate `p`.
    pub fn compose_univariate(p: &IntPoly, inner: &MultiPoly) -> MultiPoly {
        let mut acc = MultiPoly::zero(inner.nvars);
        for c in p.coeffs().iter().rev() {
            acc = acc.mul(inner).add(&MultiPoly::constant(inner.nvars, c.clone()));
        }
        acc
    }

    pub fn eval(&self, x: &[BigInt]) -> BigInt {
        assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(x).fold(c.clone(), |acc, (&k, v)| acc * num_traits::pow(v.clone(), k as usize))
            })
            .sum()
    }

    pub fn eval_i128(&self, x: &[i128]) -> BigInt {
        let xb: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.eval(&xb)
    }

    /// Substitutes a univariate polynomial in `n` for every variable.
    pub fn substitute(&self, subs: &[IntPoly]) -> IntPoly {
        assert_eq!(subs.len(), self.nvars);
        let mut out = IntPoly::zero();
        for (e, c) in &self.terms {
            let mut t = IntPoly::new([c.clone()]);
            for (&k, s) in e.iter().zip(subs) {
                for _ in 0..k {
                    t = t.mul(s);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Exact quotient by `X_i - X_j`, or `None` if the division leaves a remainder.
    pub fn div_difference(&self, i: usize, j: usize) -> Option<MultiPoly> {
        assert!(i != j && i < self.nvars && j < self.nvars);
        // Write self = sum_k F_k X_i^k and run synthetic division by (X_i - X_j).
        let deg = self.degree_in(i);
        let mut layers: Vec<MultiPoly> = vec![MultiPoly::zero(self.nvars); deg as usize + 1];
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let k = e2[i];
            e2[i] = 0;
            layers[k as usize].add_term(e2, c.clone());
        }
        let xj = MultiPoly::var(self.nvars, j);
        let mut quotient = MultiPoly::zero(self.nvars);
        let mut carry = MultiPoly::zero(self.nvars);
        for k in (1..=deg as usize).rev() {
            // G_{k-1} = F_k + X_j G_k
            carry = layers[k].add(&xj.mul(&carry));
            for (e, c) in &carry.terms {
                let mut e2 = e.clone();
                e2[i] += k as u32 - 1;
                quotient.add_term(e2, c.clone());
            }
        }
        let remainder = layers[0].add(&xj.mul(&carry));
        remainder.is_zero().then_some(quotient)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // highest total degree first
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (e, c) in terms {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(v, &k)| {
                    let name = VARS.get(v).map(|s| s.to_string()).unwrap_or_else(|| format!("X{v}"));
                    if k == 1 { name } else { format!("{name}^{k}") }
                })
                .collect();
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            }
            first = false;
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{mag}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

/// `q2(X,Y) (X - Y) = P(X) - P(Y)` and
/// `q3(X,Y,Z) (X - Y)(Y - Z) = P(X) - P(Y) + P(Z) - P(X - Y + Z)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferenceQuotient {
    pub source: IntPoly,
    pub q2: MultiPoly,
    pub q3: MultiPoly,
}

pub fn difference_quotient(p: &IntPoly) -> Result<DifferenceQuotient> {
    if p.deg() < 2 {
        return Err(Error::Hypothesis("difference quotients need deg P >= 2".into()));
    }
    let x2 = MultiPoly::var(2, 0);
    let y2 = MultiPoly::var(2, 1);
    let d2 = MultiPoly::compose_univariate(p, &x2).sub(&MultiPoly::compose_univariate(p, &y2));
    let q2 = d2
        .div_difference(0, 1)
        .ok_or_else(|| Error::Internal("P(X) - P(Y) not divisible by X - Y".into()))?;

    let [x, y, z] = [0, 1, 2].map(|i| MultiPoly::var(3, i));
    let w = x.sub(&y).add(&z);
    let d3 = MultiPoly::compose_univariate(p, &x)
        .sub(&MultiPoly::compose_univariate(p, &y))
        .add(&MultiPoly::compose_univariate(p, &z))
        .sub(&MultiPoly::compose_univariate(p, &w));
    let q3 = d3
        .div_difference(0, 1)
        .and_then(|q| q.div_difference(1, 2))
        .ok_or_else(|| Error::Internal("four-term difference not divisible by (X - Y)(Y - Z)".into()))?;

    let dq = DifferenceQuotient { source: p.clone(), q2, q3 };
    dq.certify()?;
    Ok(dq)
}

impl DifferenceQuotient {
    /// Checks both identities on a `(deg P + 2)^3` grid.
    pub fn certify(&self) -> Result<()> {
        let m = self.source.deg() as i64 + 2;
        let pts: Vec<BigInt> = (0..m).map(|v| BigInt::from(v - m / 2)).collect();
        let p = |v: &BigInt| self.source.eval(v);
        for a in &pts {
            for b in &pts {
                if p(a) - p(b) != self.q2.eval(&[a.clone(), b.clone()]) * (a - b) {
                    return Err(Error::Internal(format!("q2 identity fails at ({a}, {b})")));
                }
                for c in &pts {
                    let lhs = p(a) - p(b) + p(c) - p(&(a - b + c));
                    let rhs = self.q3.eval(&[a.clone(), b.clone(), c.clone()]) * (a - b) * (b - c);
                    if lhs != rhs {
                        return Err(Error::Internal(format!("q3 identity fails at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `q2(n, n - shift)` as a polynomial in `n`.
    pub fn q2_along(&self, shift: i128) -> IntPoly {
        let n = IntPoly::new([0, 1]);
        let shifted = IntPoly::new([BigInt::from(-shift), BigInt::one()]);
        self.q2.substitute(&[n, shifted])
    }

    /// Evaluates `q3` at an integer point, or `None` if the value leaves `i128`.
    pub fn q3_at(&self, x: i128, y: i128, z: i128) -> Option<i128> {
        self.q3.eval_i128(&[x, y, z]).to_i128()
    }
}
