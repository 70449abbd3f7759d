//! Factorization-based counters for the three inhomogeneous systems.
//!
//! All arithmetic is on `i128`; targets that no tuple in `[1,N]` can reach
//! return zero before any factorization is attempted, which keeps every
//! intermediate value far from overflow.

use num_integer::Roots as _;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::multipoly::{difference_quotient, DifferenceQuotient};
use crate::divisors::{integer_roots, ordered_factorizations, signed_divisors_up_to};
use crate::error::{Error, Result};
use crate::poly::IntPoly;

pub(crate) const MAX_N: i128 = 1 << 20;

fn check_n(n: u64) -> Result<i128> {
    if n == 0 || n as i128 > MAX_N {
        return Err(Error::Hypothesis(format!("N must lie in [1, {MAX_N}]")));
    }
    Ok(n as i128)
}

fn small_coeffs(p: &IntPoly) -> Result<Vec<i128>> {
    p.coeffs()
        .iter()
        .map(|c| c.to_i128().filter(|v| v.abs() < 1 << 40))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Overflow(format!("coefficients of {p} are too large")))
}

fn eval(c: &[i128], x: i128) -> i128 {
    c.iter().rev().fold(0, |acc, &a| acc * x + a)
}

/// Upper bound for `|P(n)|` over `n` in `[-x, x]`.
fn sup_abs(c: &[i128], x: i128) -> i128 {
    c.iter().enumerate().map(|(i, a)| a.abs() * x.pow(i as u32)).sum()
}

/// Number of `(n, m)` in `[1,N]^2` with `P(n) - P(m) = z`.
pub fn lemma1(p: &IntPoly, z: i128, n: u64) -> Result<u128> {
    if p.deg() < 2 {
        return Err(Error::Hypothesis("need deg P >= 2".into()));
    }
    if z == 0 {
        return Err(Error::Hypothesis("target must be nonzero".into()));
    }
    let big_n = check_n(n)?;
    let c = small_coeffs(p)?;
    if z.abs() > 2 * sup_abs(&c, big_n) {
        return Ok(0);
    }
    let dq = difference_quotient(p)?;
    let mut total = 0u128;
    // z = d1 d2 with d2 = n - m and d1 = Q(n, m)
    for f in ordered_factorizations(z, 2)? {
        let (d1, d2) = (f[0], f[1]);
        if d2.abs() >= big_n {
            continue;
        }
        let g = dq.q2_along(d2).sub(&IntPoly::new([d1]));
        let g = small_coeffs_wide(&g)?;
        let (lo, hi) = (1.max(1 + d2), big_n.min(big_n + d2));
        total += integer_roots(&g, lo, hi).count_in(lo, hi);
    }
    Ok(total)
}

fn small_coeffs_wide(p: &IntPoly) -> Result<Vec<i128>> {
    p.coeffs()
        .iter()
        .map(|c| c.to_i128())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Overflow("intermediate polynomial leaves i128".into()))
}

/// Number of `(n1, m1, n2, m2)` in `[1,N]^4` with
/// `n1 - m1 + n2 - m2 = z1` and `P(n1) - P(m1) + P(n2) - P(m2) = z2`.
pub fn lemma2(p: &IntPoly, z1: i128, z2: i128, n: u64) -> Result<u128> {
    if p.deg() < 2 {
        return Err(Error::Hypothesis("need deg P >= 2".into()));
    }
    if z1 == 0 && z2 == 0 {
        return Err(Error::Hypothesis("targets must not both vanish".into()));
    }
    let big_n = check_n(n)?;
    let c = small_coeffs(p)?;
    if z1.abs() > 2 * (big_n - 1) || z2.abs() > 4 * sup_abs(&c, big_n) {
        return Ok(0);
    }
    let dq = difference_quotient(p)?;
    let in_range = |x: i128| 1 <= x && x <= big_n;
    let mut total = 0u128;
    // w = n1 - m1 + n2, so m2 = w - z1 is forced
    let (w_lo, w_hi) = ((2 - big_n).max(1 + z1), (2 * big_n - 1).min(big_n + z1));
    for w in w_lo..=w_hi {
        let m2 = w - z1;
        let r = z2 - (eval(&c, w) - eval(&c, m2));
        if r != 0 {
            // Q(n1, m1, n2) (n1 - m1)(m1 - n2) = r
            for d2 in signed_divisors_up_to(r, big_n - 1) {
                for d3 in signed_divisors_up_to(r / d2, big_n - 1) {
                    let d1 = r / (d2 * d3);
                    let (n1, m1, n2) = (w + d3, w - d2 + d3, w - d2);
                    if in_range(n1) && in_range(m1) && in_range(n2) && q3(&dq, n1, m1, n2)? == d1 {
                        total += 1;
                    }
                }
            }
        } else {
            // n1 = m1, m1 = n2 or Q = 0: check the reduced equation directly
            let target = z2 + eval(&c, m2);
            for n1 in 1..=big_n {
                for m1 in 1..=big_n {
                    let n2 = w - n1 + m1;
                    if in_range(n2) && eval(&c, n1) - eval(&c, m1) + eval(&c, n2) == target {
                        total += 1;
                    }
                }
            }
        }
    }
    Ok(total)
}

fn q3(dq: &DifferenceQuotient, x: i128, y: i128, z: i128) -> Result<i128> {
    dq.q3_at(x, y, z).ok_or_else(|| Error::Overflow("q3 value leaves i128".into()))
}

/// One `(u, t)` cell of the cubic counter together with the factorization that
/// produced a solution. `factors` is empty for cells with `M = 0`, and holds
/// `(d1, d2, d3)` followed by `(d4, d5)` when the quadratic step factored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorCell {
    pub u: i128,
    pub t: i128,
    pub m: i128,
    pub factors: Vec<i128>,
}

impl FactorCell {
    pub fn recompute_m(u: i128, t: i128, z: [i128; 3]) -> i128 {
        let [z1, z2, z3] = z;
        let a = u * u - z2 - (u - z1) * (u - z1);
        let b = z3 + (u - z1).pow(3) - u.pow(3);
        3 * t * a + 2 * b
    }
}

/// Solutions `(n1, m1, n2, m2, n3, m3)` of the inhomogeneous cubic Vinogradov
/// system, each with the cell it was found in.
pub fn lemma3_solutions(z: [i128; 3], n: u64) -> Result<Vec<(FactorCell, [i128; 6])>> {
    let mut out = Vec::new();
    lemma3_visit(z, n, |cell, sol| out.push((cell.clone(), sol)))?;
    Ok(out)
}

pub fn lemma3(z: [i128; 3], n: u64) -> Result<u128> {
    let mut total = 0u128;
    lemma3_visit(z, n, |_, _| total += 1)?;
    Ok(total)
}

fn lemma3_visit(z: [i128; 3], n: u64, mut visit: impl FnMut(&FactorCell, [i128; 6])) -> Result<()> {
    let [z1, z2, z3] = z;
    if z == [0, 0, 0] {
        return Err(Error::Hypothesis("targets must not all vanish".into()));
    }
    let big_n = check_n(n)?;
    if z1.abs() > 3 * (big_n - 1) || z2.abs() > 3 * big_n.pow(2) || z3.abs() > 3 * big_n.pow(3) {
        return Ok(());
    }
    let in_range = |x: i128| 1 <= x && x <= big_n;
    let check = |s: &[i128; 6]| {
        let [n1, m1, n2, m2, n3, m3] = *s;
        let pw = |k: u32| n1.pow(k) - m1.pow(k) + n2.pow(k) - m2.pow(k) + n3.pow(k) - m3.pow(k);
        pw(1) == z1 && pw(2) == z2 && pw(3) == z3
    };
    for u in (2 - big_n)..=(2 * big_n - 1) {
        let a = u * u - z2 - (u - z1) * (u - z1);
        for t in 2..=2 * big_n {
            // m2 - n3 + m3 = u - z1 and m2 + m3 = t force n3
            let n3 = t - u + z1;
            if !in_range(n3) {
                continue;
            }
            let m = FactorCell::recompute_m(u, t, z);
            if m != 0 {
                if m % 6 != 0 {
                    continue;
                }
                let f = m / 6;
                // 6 (n1 + n2 - t)(n1 - m1)(m1 - n2) = M
                for d2 in signed_divisors_up_to(f, big_n - 1) {
                    for d3 in signed_divisors_up_to(f / d2, big_n - 1) {
                        let d1 = f / (d2 * d3);
                        let (n1, m1, n2) = (u + d3, u - d2 + d3, u - d2);
                        if !(in_range(n1) && in_range(m1) && in_range(n2)) || n1 + n2 - t != d1 {
                            continue;
                        }
                        // 2 (m2 - n3)(n3 - m3) = 2 d2 d3 + a
                        let rhs = 2 * d2 * d3 + a;
                        let mut emit = |m2: i128, m3: i128, factors: Vec<i128>| -> Result<()> {
                            if in_range(m2) && in_range(m3) && m2 + m3 == t {
                                let sol = [n1, m1, n2, m2, n3, m3];
                                if !check(&sol) {
                                    return Err(Error::Internal(format!("factored candidate {sol:?} fails")));
                                }
                                visit(&FactorCell { u, t, m, factors }, sol);
                            }
                            Ok(())
                        };
                        if rhs != 0 {
                            if rhs % 2 != 0 {
                                continue;
                            }
                            let g = rhs / 2;
                            for d4 in signed_divisors_up_to(g, big_n - 1) {
                                let d5 = g / d4;
                                emit(n3 + d4, n3 - d5, vec![d1, d2, d3, d4, d5])?;
                            }
                        } else {
                            emit(n3, t - n3, vec![d1, d2, d3])?;
                            if t - n3 != n3 {
                                emit(t - n3, n3, vec![d1, d2, d3])?;
                            }
                        }
                    }
                }
            } else {
                let cell = FactorCell { u, t, m, factors: Vec::new() };
                for m1 in 1..=big_n {
                    let s = u + m1;
                    for m2 in 1..=big_n {
                        let m3 = t - m2;
                        if !in_range(m3) {
                            continue;
                        }
                        // n1^2 + (s - n1)^2 = c
                        let c = z2 + m1 * m1 + m2 * m2 - n3 * n3 + m3 * m3;
                        let disc = 2 * c - s * s;
                        if disc < 0 {
                            continue;
                        }
                        let r = disc.sqrt();
                        if r * r != disc || (s + r) % 2 != 0 {
                            continue;
                        }
                        let roots = if r == 0 { vec![s / 2] } else { vec![(s - r) / 2, (s + r) / 2] };
                        for n1 in roots {
                            let sol = [n1, m1, s - n1, m2, n3, m3];
                            if in_range(n1) && in_range(s - n1) && check(&sol) {
                                visit(&cell, sol);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
