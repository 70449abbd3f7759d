//! Divisors, signed ordered factorizations and integer roots of univariate
//! integer polynomials, all by trial division.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Prime factorization of `n > 0` as `(prime, exponent)` pairs.
pub fn factorize(mut n: u128) -> Vec<(u128, u32)> {
    assert!(n > 0);
    let mut out = Vec::new();
    let mut push = |p: u128, n: &mut u128| {
        let mut e = 0;
        while (*n).is_multiple_of(p) {
            *n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut n);
    push(3, &mut n);
    let mut p: u128 = 5;
    while p * p <= n {
        push(p, &mut n);
        push(p + 2, &mut n);
        p += 6;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Sorted positive divisors of `|z|`.
pub fn divisors(z: i128) -> Result<Vec<u128>> {
    if z == 0 {
        return Err(Error::Hypothesis("divisors of zero are undefined".into()));
    }
    let mut divs = vec![1u128];
    for (p, e) in factorize(z.unsigned_abs()) {
        let len = divs.len();
        let mut pk = 1u128;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    Ok(divs)
}

/// Signed divisors `d` of `z != 0` with `|d| <= limit`, ascending.
pub fn signed_divisors_up_to(z: i128, limit: i128) -> Vec<i128> {
    let mut out: Vec<i128> = divisors(z)
        .expect("nonzero")
        .into_iter()
        .take_while(|&d| d <= limit.max(0) as u128)
        .flat_map(|d| [d as i128, -(d as i128)])
        .collect();
    out.sort_unstable();
    out
}

/// Every ordered tuple `(d_1, ..., d_parts)` of nonzero integers with product `z`.
pub fn ordered_factorizations(z: i128, parts: usize) -> Result<Vec<Vec<i128>>> {
    if z == 0 {
        return Err(Error::Hypothesis("cannot factor zero".into()));
    }
    if parts == 0 {
        return Err(Error::Hypothesis("need at least one part".into()));
    }
    let divs = divisors(z)?;
    let mut unsigned = Vec::new();
    positive_tuples(z.unsigned_abs(), parts, &divs, &mut Vec::with_capacity(parts), &mut unsigned);
    let negative = z < 0;
    let mut out = Vec::with_capacity(unsigned.len() << (parts - 1));
    for t in unsigned {
        for mask in 0u32..(1 << (parts - 1)) {
            let mut flips = negative;
            let mut v: Vec<i128> = Vec::with_capacity(parts);
            for (i, &d) in t.iter().enumerate() {
                let neg = if i + 1 < parts {
                    let b = mask >> i & 1 == 1;
                    flips ^= b;
                    b
                } else {
                    flips
                };
                v.push(if neg { -(d as i128) } else { d as i128 });
            }
            out.push(v);
        }
    }
    Ok(out)
}

fn positive_tuples(rest: u128, parts: usize, divs: &[u128], cur: &mut Vec<u128>, out: &mut Vec<Vec<u128>>) {
    if parts == 1 {
        cur.push(rest);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for &d in divs.iter().take_while(|&&d| d <= rest) {
        if rest.is_multiple_of(d) {
            cur.push(d);
            positive_tuples(rest / d, parts - 1, divs, cur, out);
            cur.pop();
        }
    }
}

/// Integer roots of a polynomial restricted to an interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Roots {
    /// The polynomial vanishes identically; every point of the interval is a root.
    All,
    Finite(Vec<i128>),
}

impl Roots {
    /// Number of roots in `[lo, hi]`.
    pub fn count_in(&self, lo: i128, hi: i128) -> u128 {
        match self {
            Roots::All => (hi - lo + 1).max(0) as u128,
            Roots::Finite(v) => v.iter().filter(|&&r| lo <= r && r <= hi).count() as u128,
        }
    }
}

/// Exact Horner evaluation; falls back to big integers on overflow.
pub fn eval_i128(coeffs: &[i128], x: i128) -> BigInt {
    let mut acc: i128 = 0;
    for &c in coeffs.iter().rev() {
        match acc.checked_mul(x).and_then(|v| v.checked_add(c)) {
            Some(v) => acc = v,
            None => {
                let xb = BigInt::from(x);
                return coeffs.iter().rev().fold(BigInt::zero(), |a, &c| a * &xb + c);
            }
        }
    }
    BigInt::from(acc)
}

/// Integer roots in `[lo, hi]` of `sum coeffs[i] x^i`, by divisor trial on the
/// constant term after removing the content and any power of `x`.
pub fn integer_roots(coeffs: &[i128], lo: i128, hi: i128) -> Roots {
    let mut c: Vec<i128> = coeffs.to_vec();
    while c.last() == Some(&0) {
        c.pop();
    }
    if c.is_empty() {
        return Roots::All;
    }
    let g = c.iter().fold(0i128, |g, &x| g.gcd(&x));
    c.iter_mut().for_each(|x| *x /= g);
    let mut roots = Vec::new();
    let shift = c.iter().take_while(|&&x| x == 0).count();
    if shift > 0 {
        if lo <= 0 && 0 <= hi {
            roots.push(0);
        }
        c.drain(..shift);
    }
    if c.len() > 1 && lo <= hi {
        let a0 = c[0].unsigned_abs();
        let width = (hi - lo) as u128 + 1;
        let isqrt = (a0 as f64).sqrt() as u128 + 1;
        let candidates: Vec<i128> = if width <= isqrt {
            (lo..=hi).filter(|&r| r != 0 && a0.is_multiple_of(r.unsigned_abs())).collect()
        } else {
            divisors(c[0])
                .unwrap()
                .into_iter()
                .filter_map(|d| d.to_i128())
                .flat_map(|d| [d, -d])
                .filter(|&r| lo <= r && r <= hi)
                .collect()
        };
        roots.extend(candidates.into_iter().filter(|&r| eval_i128(&c, r).is_zero()));
    }
    roots.sort_unstable();
    Roots::Finite(roots)
}
