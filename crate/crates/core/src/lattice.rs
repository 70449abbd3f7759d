//! Finite subsets of `Z^d`, finitely supported rational functions and the
//! averaging operators along a curve.
//!
//! Forward averages subtract `gamma(n)`; adjoints add it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::curve::{AffineTransform, Curve};
use crate::error::{Error, Result};
use crate::poly::IntPoly;
use crate::point::{Coords, SmallPoint};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    coords: Vec<BigInt>,
}

impl LatticePoint {
    pub fn new(coords: Vec<BigInt>) -> Self {
        LatticePoint { coords }
    }

    pub fn from_i64(c: &[i64]) -> Self {
        LatticePoint { coords: c.iter().map(|&x| BigInt::from(x)).collect() }
    }

    pub fn origin(dim: usize) -> Self {
        LatticePoint { coords: vec![BigInt::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    pub fn plus(&self, o: &LatticePoint) -> LatticePoint {
        LatticePoint::new(self.coords.iter().zip(&o.coords).map(|(a, b)| a + b).collect())
    }

    pub fn minus(&self, o: &LatticePoint) -> LatticePoint {
        LatticePoint::new(self.coords.iter().zip(&o.coords).map(|(a, b)| a - b).collect())
    }

    pub fn negated(&self) -> LatticePoint {
        LatticePoint::new(self.coords.iter().map(|a| -a).collect())
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    /// Whitespace-separated integers.
    pub fn parse(line: &str) -> Result<Self> {
        line.split_whitespace()
            .map(|t| {
                t.parse::<BigInt>()
                    .map_err(|_| Error::Parse { pos: 0, msg: format!("bad integer '{t}'") })
            })
            .collect::<Result<Vec<_>>>()
            .map(LatticePoint::new)
    }

    pub fn to_plain(&self) -> String {
        self.coords.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Strips a `#` comment and surrounding whitespace.
fn content(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SparseSet {
    dim: usize,
    points: BTreeSet<LatticePoint>,
}

impl SparseSet {
    pub fn new(dim: usize) -> Self {
        SparseSet { dim, points: BTreeSet::new() }
    }

    pub fn from_points<I: IntoIterator<Item = LatticePoint>>(dim: usize, pts: I) -> Result<Self> {
        let mut s = SparseSet::new(dim);
        for p in pts {
            s.insert(p)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, p: LatticePoint) -> Result<bool> {
        check_dim(self.dim, p.dim())?;
        Ok(self.points.insert(p))
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.points.contains(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &LatticePoint> {
        self.points.iter()
    }

    pub fn indicator(&self) -> SparseFunction {
        let mut f = SparseFunction::new(self.dim);
        for p in &self.points {
            f.values.insert(p.clone(), BigRational::one());
        }
        f
    }

    pub fn intersection_len(&self, other: &SparseSet) -> usize {
        self.points.intersection(&other.points).count()
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let mut s = SparseSet::new(dim);
        for (i, line) in text.lines().enumerate() {
            let body = content(line);
            if body.is_empty() {
                continue;
            }
            let p = LatticePoint::parse(body).map_err(|e| line_err(i, e))?;
            s.insert(p).map_err(|e| line_err(i, e))?;
        }
        Ok(s)
    }

    /// Parses with the dimension taken from the first point.
    pub fn parse_auto(text: &str) -> Result<Self> {
        let dim = text
            .lines()
            .map(content)
            .find(|l| !l.is_empty())
            .map(|l| l.split_whitespace().count())
            .ok_or_else(|| Error::Parse { pos: 0, msg: "empty set file".into() })?;
        Self::parse(text, dim)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&p.to_plain());
            out.push('\n');
        }
        out
    }
}

fn line_err(line: usize, e: Error) -> Error {
    match e {
        Error::Parse { msg, .. } => Error::Parse { pos: line + 1, msg: format!("line {}: {msg}", line + 1) },
        Error::DimensionMismatch { expected, got } => Error::Parse {
            pos: line + 1,
            msg: format!("line {}: expected {expected} coordinates, got {got}", line + 1),
        },
        e => e,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SparseFunction {
    dim: usize,
    values: BTreeMap<LatticePoint, BigRational>,
}

impl SparseFunction {
    pub fn new(dim: usize) -> Self {
        SparseFunction { dim, values: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, p: &LatticePoint) -> BigRational {
        self.values.get(p).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn set(&mut self, p: LatticePoint, v: BigRational) -> Result<()> {
        check_dim(self.dim, p.dim())?;
        if v.is_zero() {
            self.values.remove(&p);
        } else {
            self.values.insert(p, v);
        }
        Ok(())
    }

    /// Adds `v` at `p`, dropping the entry if it cancels.
    pub fn add_at(&mut self, p: LatticePoint, v: &BigRational) {
        use std::collections::btree_map::Entry;
        match self.values.entry(p) {
            Entry::Vacant(e) => {
                if !v.is_zero() {
                    e.insert(v.clone());
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += v;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, &BigRational)> {
        self.values.iter()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> BigRational {
        self.values.values().fold(BigRational::zero(), |a, v| a + v)
    }

    pub fn scale(&self, a: &BigRational) -> SparseFunction {
        let mut out = SparseFunction::new(self.dim);
        if !a.is_zero() {
            for (p, v) in &self.values {
                out.values.insert(p.clone(), v * a);
            }
        }
        out
    }

    pub fn plus(&self, other: &SparseFunction) -> Result<SparseFunction> {
        check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        for (p, v) in &other.values {
            out.add_at(p.clone(), v);
        }
        Ok(out)
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let mut f = SparseFunction::new(dim);
        for (i, line) in text.lines().enumerate() {
            let body = content(line);
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.len() != dim + 1 {
                return Err(line_err(i, Error::DimensionMismatch { expected: dim + 1, got: toks.len() }));
            }
            let p = LatticePoint::parse(&toks[..dim].join(" ")).map_err(|e| line_err(i, e))?;
            let v = parse_rational(toks[dim]).map_err(|e| line_err(i, e))?;
            f.add_at(p, &v);
        }
        Ok(f)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, v) in &self.values {
            out.push_str(&format!("{} {}/{}\n", p.to_plain(), v.numer(), v.denom()));
        }
        out
    }
}

pub fn parse_rational(t: &str) -> Result<BigRational> {
    let bad = || Error::Parse { pos: 0, msg: format!("bad rational '{t}'") };
    match t.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.parse().map_err(|_| bad())?;
            let b: BigInt = b.parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(a, b))
        }
        None => Ok(BigRational::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

/// The values `Q(n)`, `n` in `Z`, that fall in `[1, N]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictedSequence {
    generator: IntPoly,
}

impl RestrictedSequence {
    pub fn new(generator: IntPoly) -> Result<Self> {
        if generator.is_constant() || !generator.leading().is_positive() {
            return Err(Error::Hypothesis("generator must be non-constant with positive leading coefficient".into()));
        }
        Ok(RestrictedSequence { generator })
    }

    pub fn generator(&self) -> &IntPoly {
        &self.generator
    }

    /// Sorted, deduplicated values in `[1, N]`.
    pub fn values(&self, n: u64) -> Vec<BigInt> {
        // |Q(x)| > N as soon as |x| > N + sum |c_i|
        let bound: BigInt = self.generator.coeffs().iter().map(|c| c.abs()).sum::<BigInt>() + n + 1u32;
        let bound = bound.to_i64().unwrap_or(i64::MAX / 2);
        let top = BigInt::from(n);
        let mut out: Vec<BigInt> = (-bound..=bound)
            .map(|x| self.generator.eval_i64(x))
            .filter(|v| v.is_positive() && *v <= top)
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

fn check_curve(c: &Curve, f_dim: usize, n: u64) -> Result<()> {
    c.validate()?;
    check_dim(c.dim(), f_dim)?;
    if n == 0 {
        return Err(Error::Hypothesis("N must be at least 1".into()));
    }
    Ok(())
}

pub fn curve_values(c: &Curve, n: u64) -> Vec<LatticePoint> {
    (1..=n as i64).map(|k| c.eval_i64(k)).collect()
}

/// `sum_{n=1}^{N} f(x - gamma(n))`
pub fn average_unnormalized(c: &Curve, n: u64, f: &SparseFunction) -> Result<SparseFunction> {
    check_curve(c, f.dim, n)?;
    Ok(shift_sum(f, &curve_values(c, n), false))
}

/// `(1/N) sum_{n=1}^{N} f(x - gamma(n))`
pub fn average(c: &Curve, n: u64, f: &SparseFunction) -> Result<SparseFunction> {
    let un = average_unnormalized(c, n, f)?;
    Ok(un.scale(&BigRational::new(BigInt::one(), BigInt::from(n))))
}

/// `sum_{n=1}^{N} f(y + gamma(n))`
pub fn adjoint_unnormalized(c: &Curve, n: u64, f: &SparseFunction) -> Result<SparseFunction> {
    check_curve(c, f.dim, n)?;
    Ok(shift_sum(f, &curve_values(c, n), true))
}

/// Average over `m` in the restricted sequence intersected with `[1, N]`.
pub fn restricted_average(
    c: &Curve,
    seq: &RestrictedSequence,
    n: u64,
    f: &SparseFunction,
) -> Result<SparseFunction> {
    check_curve(c, f.dim, n)?;
    let ms = seq.values(n);
    if ms.is_empty() {
        return Err(Error::Hypothesis(format!("restricted sequence has no values in [1, {n}]")));
    }
    let shifts: Vec<LatticePoint> = ms.iter().map(|m| c.eval(m)).collect();
    let un = shift_sum(f, &shifts, false);
    Ok(un.scale(&BigRational::new(BigInt::one(), BigInt::from(ms.len()))))
}

/// Output point `p + s` (forward) or `p - s` (adjoint) receives `f(p)` for every shift `s`.
fn shift_sum(f: &SparseFunction, shifts: &[LatticePoint], adjoint: bool) -> SparseFunction {
    let mut out = SparseFunction::new(f.dim);
    for (p, v) in &f.values {
        for s in shifts {
            let x = if adjoint { p.minus(s) } else { p.plus(s) };
            out.add_at(x, v);
        }
    }
    out
}

pub fn pairing(f: &SparseFunction, g: &SparseFunction) -> Result<BigRational> {
    check_dim(f.dim, g.dim)?;
    let (small, large) = if f.support_len() <= g.support_len() { (f, g) } else { (g, f) };
    Ok(small
        .values
        .iter()
        .filter_map(|(p, v)| large.values.get(p).map(|w| v * w))
        .fold(BigRational::zero(), |a, x| a + x))
}

#[derive(Clone, Debug, PartialEq)]
pub enum NormExponent {
    Finite(BigRational),
    Infinity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LqNorm {
    /// `sum |f|^q`, exact when `q` is an integer.
    pub power_sum: Option<BigRational>,
    pub value: f64,
}

pub fn lq_norm(f: &SparseFunction, q: &NormExponent) -> Result<LqNorm> {
    match q {
        NormExponent::Infinity => {
            let m = f.values.values().map(|v| v.abs()).max().unwrap_or_else(BigRational::zero);
            Ok(LqNorm { power_sum: None, value: m.to_f64().unwrap_or(f64::INFINITY) })
        }
        NormExponent::Finite(q) => {
            if *q < BigRational::one() {
                return Err(Error::Hypothesis(format!("norm exponent {q} is below 1")));
            }
            if q.is_integer() {
                let k = q.to_integer().to_usize().ok_or_else(|| Error::Overflow("norm exponent".into()))?;
                let s = f
                    .values
                    .values()
                    .fold(BigRational::zero(), |a, v| a + num_traits::pow(v.abs(), k));
                let value = s.to_f64().unwrap_or(f64::INFINITY).powf(1.0 / k as f64);
                Ok(LqNorm { power_sum: Some(s), value })
            } else {
                let qf = q.to_f64().unwrap();
                let s: f64 = f.values.values().map(|v| v.abs().to_f64().unwrap().powf(qf)).sum();
                Ok(LqNorm { power_sum: None, value: s.powf(1.0 / qf) })
            }
        }
    }
}

/// `<A_N 1_E, 1_F>` for the un-normalised operator, as an integer count.
pub fn pairing_count(e: &SparseSet, f: &SparseSet, c: &Curve, n: u64) -> Result<u64> {
    check_curve(c, e.dim, n)?;
    check_dim(e.dim, f.dim)?;
    let gs = curve_values(c, n);
    let packed = || -> Option<u64> {
        let gs = crate::point::pack_all(&gs)?;
        let es: rustc_hash::FxHashSet<SmallPoint> = e.iter().map(SmallPoint::try_from_lattice).collect::<Option<_>>()?;
        let fs: Vec<SmallPoint> = f.iter().map(SmallPoint::try_from_lattice).collect::<Option<_>>()?;
        Some(fs.iter().map(|x| gs.iter().filter(|g| es.contains(&x.sub(g))).count() as u64).sum())
    };
    if let Some(total) = packed() {
        return Ok(total);
    }
    let mut total = 0u64;
    for x in f.iter() {
        for g in &gs {
            if e.contains(&x.minus(g)) {
                total += 1;
            }
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaBeta {
    pub pairing: u64,
    pub alpha: BigRational,
    pub beta: BigRational,
}

/// `alpha = <A 1_E, 1_F>/|F|`, `beta = <A* 1_F, 1_E>/|E|` with the un-normalised operator.
pub fn alpha_beta(e: &SparseSet, f: &SparseSet, c: &Curve, n: u64) -> Result<AlphaBeta> {
    if e.is_empty() || f.is_empty() {
        return Err(Error::Hypothesis("E and F must be nonempty".into()));
    }
    let pairing = pairing_count(e, f, c, n)?;
    Ok(AlphaBeta {
        pairing,
        alpha: BigRational::new(BigInt::from(pairing), BigInt::from(f.len())),
        beta: BigRational::new(BigInt::from(pairing), BigInt::from(e.len())),
    })
}

/// `f o T`, defined for transforms with an inverse on `Z^d`.
pub fn pull_back(f: &SparseFunction, t: &AffineTransform) -> Result<SparseFunction> {
    let inv = t
        .inverse()
        .ok_or_else(|| Error::Hypothesis("transform is not invertible over Z^d".into()))?;
    let mut out = SparseFunction::new(f.dim);
    for (p, v) in &f.values {
        out.add_at(inv.apply_point(p)?, v);
    }
    Ok(out)
}

/// Splits `f` along the first coordinate by residue mod `a > 0`:
/// `g_r(s, y) = f(a s + r, y)` for `r = 0..a`.
pub fn residue_slices(f: &SparseFunction, a: u32) -> Result<Vec<SparseFunction>> {
    if a == 0 || f.dim == 0 {
        return Err(Error::Hypothesis("need a > 0 and d >= 1".into()));
    }
    let a_big = BigInt::from(a);
    let mut out = vec![SparseFunction::new(f.dim); a as usize];
    for (p, v) in &f.values {
        let (s, r) = p.coords[0].div_mod_floor(&a_big);
        let mut c = p.coords.clone();
        c[0] = s;
        out[r.to_usize().unwrap()].add_at(LatticePoint::new(c), v);
    }
    Ok(out)
}
