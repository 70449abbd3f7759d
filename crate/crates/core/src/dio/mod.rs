//! Exact counting for the homogeneous and inhomogeneous Diophantine systems
//! attached to a curve.

mod cache;
mod kernel;
mod lemmas;
mod multipoly;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

pub use cache::CountCache;
pub use lemmas::{lemma3_solutions, FactorCell};
pub use multipoly::{difference_quotient, DifferenceQuotient, MultiPoly};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::lattice::{curve_values, LatticePoint};
use crate::point::{pack_all, Coords, SmallPoint, SMALL_LIMIT};
use crate::poly::IntPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Mitm,
    Lemma1,
    Lemma2,
    Lemma3,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Mitm => "mitm",
            Method::Lemma1 => "lemma1",
            Method::Lemma2 => "lemma2",
            Method::Lemma3 => "lemma3",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "brute" => Method::Brute,
            "mitm" => Method::Mitm,
            "lemma1" => Method::Lemma1,
            "lemma2" => Method::Lemma2,
            "lemma3" => Method::Lemma3,
            _ => return Err(Error::Parse { pos: 0, msg: format!("unknown method '{s}'") }),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Homogeneous,
    Inhomogeneous,
    /// Maximum of the inhomogeneous count over nonzero targets; `z` holds the maximizer.
    MaxInhomogeneous,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Homogeneous => "homogeneous",
            Mode::Inhomogeneous => "inhomogeneous",
            Mode::MaxInhomogeneous => "max_inhomogeneous",
        }
    }
}

/// One exact count, serialized as a single JSON line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub curve: String,
    pub mode: Mode,
    pub s_or_k: u32,
    #[serde(rename = "N")]
    pub n: u64,
    /// Whitespace-separated target coordinates; absent for homogeneous counts.
    pub z: Option<String>,
    #[serde(with = "decimal")]
    pub count: BigUint,
    pub method: Method,
    pub elapsed: f64,
    #[serde(default)]
    pub cached: bool,
    /// Set when the target exceeds the lemma's size hypothesis.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub outside_hypothesis: bool,
}

impl CountRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Parse { pos: e.column(), msg: e.to_string() })
    }

    pub fn count_u128(&self) -> u128 {
        self.count.to_u128().expect("count fits u128")
    }
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountOptions {
    /// Maximum number of elementary enumeration steps.
    pub budget: u128,
    /// Slack `c` in the target guards `|z_j| <= c N^{deg}`.
    pub slack: i128,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions { budget: 4_000_000_000, slack: 4 }
    }
}

fn check_budget(what: &str, work: u128, opts: &CountOptions) -> Result<()> {
    if work > opts.budget {
        return Err(Error::Budget(format!("{what} needs about {work} steps, budget is {}", opts.budget)));
    }
    Ok(())
}

fn pow_sat(n: u64, e: usize) -> u128 {
    (0..e).fold(1u128, |acc, _| acc.saturating_mul(n as u128))
}

fn check_args(c: &Curve, k: usize, n: u64) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::Hypothesis("s (or k) and N must be at least 1".into()));
    }
    if c.dim() == 0 {
        return Err(Error::InvalidCurve("empty curve".into()));
    }
    Ok(())
}

/// Packs the curve values (and target) when every partial sum is guaranteed
/// to stay inside `i64`.
fn packed(vals: &[LatticePoint], z: &LatticePoint, k: usize) -> Option<(Vec<SmallPoint>, SmallPoint)> {
    if 2 * k > 256 || z.dim() > crate::point::SMALL_DIM {
        return None;
    }
    let small = pack_all(vals)?;
    let zs = SmallPoint::try_from_lattice(z)?;
    debug_assert!(zs.coords().iter().all(|c| c.abs() < SMALL_LIMIT));
    Some((small, zs))
}

fn count_kernel<P: Coords>(vals: &[P], k: usize, z: &P, method: Method) -> u128 {
    match method {
        Method::Brute => kernel::brute_count(vals, k, z),
        _ => {
            let r = kernel::tuple_sums(vals, k, z.dim());
            kernel::correlation(&r, z)
        }
    }
}

fn record(c: &Curve, mode: Mode, k: usize, n: u64, z: Option<&LatticePoint>, count: u128, method: Method, t: Instant) -> CountRecord {
    CountRecord {
        curve: c.to_string(),
        mode,
        s_or_k: k as u32,
        n,
        z: z.map(LatticePoint::to_plain),
        count: BigUint::from(count),
        method,
        elapsed: t.elapsed().as_secs_f64(),
        cached: false,
        outside_hypothesis: false,
    }
}

/// `J_{s,gamma}(N)`: solutions of `sum gamma(n_i) = sum gamma(m_i)` in `[1,N]^{2s}`.
pub fn count_homogeneous(c: &Curve, s: usize, n: u64, method: Method, opts: &CountOptions) -> Result<CountRecord> {
    let t = Instant::now();
    let z = LatticePoint::origin(c.dim());
    let count = count_system(c, s, n, &z, method, opts)?;
    Ok(record(c, Mode::Homogeneous, s, n, None, count, method, t))
}

/// Solutions of `sum gamma(n_i) - sum gamma(m_i) = z` in `[1,N]^{2k}`.
pub fn count_inhomogeneous(
    c: &Curve,
    k: usize,
    n: u64,
    z: &LatticePoint,
    method: Method,
    opts: &CountOptions,
) -> Result<CountRecord> {
    let t = Instant::now();
    let count = count_system(c, k, n, z, method, opts)?;
    Ok(record(c, Mode::Inhomogeneous, k, n, Some(z), count, method, t))
}

fn count_system(c: &Curve, k: usize, n: u64, z: &LatticePoint, method: Method, opts: &CountOptions) -> Result<u128> {
    check_args(c, k, n)?;
    if z.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: z.dim() });
    }
    match method {
        Method::Brute => check_budget("brute force", pow_sat(n, 2 * k), opts)?,
        Method::Mitm => check_budget("meet-in-the-middle", pow_sat(n, k), opts)?,
        _ => return Err(Error::Hypothesis(format!("method {method} does not apply to a general curve"))),
    }
    let vals = curve_values(c, n);
    Ok(match packed(&vals, z, k) {
        Some((small, zs)) => count_kernel(&small, k, &zs, method),
        None => count_kernel(&vals, k, z, method),
    })
}

/// Maximizer and value of the inhomogeneous count over `z != 0`.
///
/// Among maximizers the lexicographically largest target is returned. `None`
/// when every tuple lands on the origin, which cannot happen for a non-constant curve.
pub fn max_inhomogeneous(c: &Curve, k: usize, n: u64, opts: &CountOptions) -> Result<Option<(LatticePoint, u128)>> {
    check_args(c, k, n)?;
    check_budget("meet-in-the-middle", pow_sat(n, k), opts)?;
    let vals = curve_values(c, n);
    let origin = LatticePoint::origin(c.dim());
    fn run<P: Coords>(vals: &[P], k: usize, dim: usize, opts: &CountOptions) -> Result<Option<(LatticePoint, u128)>> {
        let r = kernel::tuple_sums(vals, k, dim);
        let groups = kernel::group_by_head(&r);
        check_budget("sliced maximum", kernel::max_pair_work(&groups), opts)?;
        Ok(kernel::max_correlation(&groups).map(|(z, m)| (z.to_lattice(), m)))
    }
    match packed(&vals, &origin, k) {
        Some((small, _)) => {
            let r = kernel::tuple_sums(&small, k, c.dim());
            let groups = kernel::group_by_head(&r);
            check_budget("sliced maximum", kernel::max_pair_work(&groups), opts)?;
            Ok(kernel::max_correlation_small(&groups).map(|(z, m)| (z.to_lattice(), m)))
        }
        None => run(&vals, k, c.dim(), opts),
    }
}

pub fn max_inhomogeneous_record(c: &Curve, k: usize, n: u64, opts: &CountOptions) -> Result<CountRecord> {
    let t = Instant::now();
    let (z, m) = max_inhomogeneous(c, k, n, opts)?
        .ok_or_else(|| Error::Hypothesis("no nonzero target is attained".into()))?;
    Ok(record(c, Mode::MaxInhomogeneous, k, n, Some(&z), m, Method::Mitm, t))
}

fn to_i128(z: &BigInt) -> Result<i128> {
    z.to_i128().ok_or_else(|| Error::Overflow(format!("target {z}")))
}

fn exceeds(z: i128, slack: i128, n: u64, deg: usize) -> bool {
    (z.unsigned_abs()) > (slack.unsigned_abs()).saturating_mul(pow_sat(n, deg))
}

/// Solutions of `P(n) - P(m) = z` in `[1,N]^2` via factorization of `z`.
pub fn count_lemma1(p: &IntPoly, z: &BigInt, n: u64, opts: &CountOptions) -> Result<CountRecord> {
    let t = Instant::now();
    let zi = to_i128(z)?;
    let count = lemmas::lemma1(p, zi, n)?;
    let curve = Curve::unchecked(vec![p.clone()])?;
    let zp = LatticePoint::new(vec![z.clone()]);
    let mut rec = record(&curve, Mode::Inhomogeneous, 1, n, Some(&zp), count, Method::Lemma1, t);
    rec.outside_hypothesis = exceeds(zi, opts.slack, n, p.deg());
    Ok(rec)
}

/// Solutions of the two-equation system with a linear first row, via the
/// three-part factorization of the second.
pub fn count_lemma2(p: &IntPoly, z1: &BigInt, z2: &BigInt, n: u64, opts: &CountOptions) -> Result<CountRecord> {
    let t = Instant::now();
    let (a, b) = (to_i128(z1)?, to_i128(z2)?);
    let count = lemmas::lemma2(p, a, b, n)?;
    let curve = Curve::unchecked(vec![IntPoly::new([0, 1]), p.clone()])?;
    let zp = LatticePoint::new(vec![z1.clone(), z2.clone()]);
    let mut rec = record(&curve, Mode::Inhomogeneous, 2, n, Some(&zp), count, Method::Lemma2, t);
    rec.outside_hypothesis = exceeds(a, opts.slack, n, 1) || exceeds(b, opts.slack, n, p.deg());
    Ok(rec)
}

/// Solutions of the inhomogeneous cubic Vinogradov system in `[1,N]^6`.
pub fn count_lemma3(z: [&BigInt; 3], n: u64, opts: &CountOptions) -> Result<CountRecord> {
    let t = Instant::now();
    let zi = [to_i128(z[0])?, to_i128(z[1])?, to_i128(z[2])?];
    let count = lemmas::lemma3(zi, n)?;
    let zp = LatticePoint::new(z.iter().map(|v| (*v).clone()).collect());
    let mut rec = record(&Curve::moment(3), Mode::Inhomogeneous, 3, n, Some(&zp), count, Method::Lemma3, t);
    rec.outside_hypothesis = (0..3).any(|j| exceeds(zi[j], opts.slack, n, j + 1));
    Ok(rec)
}
