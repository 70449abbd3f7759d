//! Extremizer families, restricted weak-type ratios, log-log regression,
//! moment norms and Riesz-diagram data.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::Curve;
use crate::dio::{count_homogeneous, CountOptions, Method};
use crate::error::{Error, Result};
use crate::exponent::{classify_for_degree, dominant_terms, ExponentPair, Region, Term};
use crate::lattice::{curve_values, pairing_count, LatticePoint, SparseSet};

/// Largest set `make_extremizer` will materialize.
pub const MAX_SET_POINTS: u128 = 1 << 22;

/// An exact positive real of the form `coeff * prod b_i^{e_i}` with rational `e_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerProduct {
    pub coeff: BigRational,
    /// Integer bases `> 1` with their nonzero exponents.
    pub powers: BTreeMap<BigInt, BigRational>,
}

impl PowerProduct {
    pub fn rational(coeff: BigRational) -> Self {
        PowerProduct { coeff, powers: BTreeMap::new() }
    }

    /// `base^exp`
    pub fn power(base: impl Into<BigInt>, exp: BigRational) -> Self {
        PowerProduct::rational(BigRational::one()).times_power(base, exp)
    }

    pub fn times_power(mut self, base: impl Into<BigInt>, exp: BigRational) -> Self {
        let base = base.into();
        assert!(base.is_positive(), "power base must be positive");
        if base.is_one() || exp.is_zero() {
            return self;
        }
        let e = self.powers.entry(base.clone()).or_insert_with(BigRational::zero);
        *e += exp;
        if e.is_zero() {
            self.powers.remove(&base);
        }
        self
    }

    pub fn ln(&self) -> f64 {
        let c = self.coeff.to_f64().unwrap_or(f64::NAN);
        let logs: f64 = self.powers.iter().map(|(b, e)| e.to_f64().unwrap() * ln_big(b)).sum();
        c.ln() + logs
    }

    pub fn to_f64(&self) -> f64 {
        if self.coeff.is_zero() {
            return 0.0;
        }
        self.ln().exp()
    }

    /// `self^l` when every exponent times `l` is an integer.
    pub fn pow_rational(&self, l: u32) -> Option<BigRational> {
        let mut acc = num_traits::pow(self.coeff.clone(), l as usize);
        for (b, e) in &self.powers {
            let t = e * BigInt::from(l);
            if !t.is_integer() {
                return None;
            }
            let k = t.to_integer().to_i32()?;
            let bb = BigRational::from_integer(b.clone());
            acc *= if k >= 0 { num_traits::pow(bb, k as usize) } else { num_traits::pow(bb.recip(), (-k) as usize) };
        }
        Some(acc)
    }

    fn denominator_lcm(&self) -> BigInt {
        self.powers.values().fold(BigInt::one(), |l, e| l.lcm(e.denom()))
    }

    /// Exact equality of the two reals, by comparing common integral powers.
    pub fn exact_eq(&self, other: &PowerProduct) -> bool {
        if self.coeff.is_zero() || other.coeff.is_zero() {
            return self.coeff.is_zero() && other.coeff.is_zero();
        }
        if self.coeff.is_negative() != other.coeff.is_negative() {
            return false;
        }
        let l = self.denominator_lcm().lcm(&other.denominator_lcm());
        let Some(l) = l.to_u32() else { return false };
        match (self.pow_rational(l), other.pow_rational(l)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for PowerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for (b, e) in &self.powers {
            write!(f, " * {b}^({e})")?;
        }
        Ok(())
    }
}

fn ln_big(b: &BigInt) -> f64 {
    match b.to_f64() {
        Some(v) if v.is_finite() => v.ln(),
        _ => {
            let bits = b.bits();
            let shifted: BigInt = b >> (bits - 60);
            shifted.to_f64().unwrap().ln() + (bits - 60) as f64 * std::f64::consts::LN_2
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtremizerKind {
    Dirac,
    CurveImageDual,
    /// Box with half-sides `floor(c_box N^{deg P_j})`.
    ParabolicBox(BigRational),
}

impl ExtremizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExtremizerKind::Dirac => "dirac",
            ExtremizerKind::CurveImageDual => "dual",
            ExtremizerKind::ParabolicBox(_) => "box",
        }
    }
}

impl FromStr for ExtremizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirac" => Ok(ExtremizerKind::Dirac),
            "dual" | "curve_image_dual" => Ok(ExtremizerKind::CurveImageDual),
            "box" | "parabolic_box" => Ok(ExtremizerKind::ParabolicBox(BigRational::one())),
            _ => Err(Error::Parse { pos: 0, msg: format!("unknown family '{s}' (dirac, dual, box)") }),
        }
    }
}

/// Half-sides `floor(c_box N^{deg P_j})`.
pub fn box_half_sides(c: &Curve, n: u64, c_box: &BigRational) -> Result<Vec<BigInt>> {
    if c_box.is_negative() {
        return Err(Error::Hypothesis("c_box must be non-negative".into()));
    }
    Ok(c.components()
        .iter()
        .map(|p| (c_box * BigInt::from(n).pow(p.deg() as u32)).floor().to_integer())
        .collect())
}

/// `prod_j (2 h_j + 1)`
pub fn box_size(half: &[BigInt]) -> BigInt {
    half.iter().map(|h| BigInt::from(2) * h + 1).product()
}

/// `<A 1_B, 1_B>` (un-normalised) for the centred box with the given half-sides:
/// `sum_n prod_j max(0, 2 h_j + 1 - |P_j(n)|)`.
pub fn box_self_pairing(c: &Curve, n: u64, half: &[BigInt]) -> BigInt {
    curve_values(c, n)
        .iter()
        .map(|g| {
            g.coords()
                .iter()
                .zip(half)
                .map(|(x, h)| {
                    let w: BigInt = BigInt::from(2) * h + 1 - x.abs();
                    if w.is_positive() { w } else { BigInt::zero() }
                })
                .product::<BigInt>()
        })
        .sum()
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Hypothesis("N must be at least 1".into()));
    }
    Ok(())
}

/// The sets `(E, F)` of a family at scale `N`.
pub fn make_extremizer(kind: &ExtremizerKind, c: &Curve, n: u64) -> Result<(SparseSet, SparseSet)> {
    check_n(n)?;
    let d = c.dim();
    let origin = SparseSet::from_points(d, [LatticePoint::origin(d)])?;
    let image = || curve_values(c, n);
    match kind {
        ExtremizerKind::Dirac => Ok((origin, SparseSet::from_points(d, image())?)),
        ExtremizerKind::CurveImageDual => {
            Ok((SparseSet::from_points(d, image().iter().map(LatticePoint::negated))?, origin))
        }
        ExtremizerKind::ParabolicBox(c_box) => {
            let half = box_half_sides(c, n, c_box)?;
            let size = box_size(&half);
            if size > BigInt::from(MAX_SET_POINTS) {
                return Err(Error::Budget(format!("box has {size} points, above {MAX_SET_POINTS}")));
            }
            let mut pts = vec![Vec::new()];
            for h in &half {
                let h = h.to_i64().expect("bounded by the size check");
                pts = pts
                    .into_iter()
                    .flat_map(|p: Vec<i64>| {
                        (-h..=h).map(move |x| {
                            let mut q = p.clone();
                            q.push(x);
                            q
                        })
                    })
                    .collect();
            }
            let b = SparseSet::from_points(d, pts.iter().map(|p| LatticePoint::from_i64(p)))?;
            Ok((b.clone(), b))
        }
    }
}

/// `<A_N 1_E, 1_F> / (|E|^{1/p} |F|^{1/q'})` with the normalised operator, exactly.
pub fn rwt_ratio(e: &SparseSet, f: &SparseSet, ex: &ExponentPair, c: &Curve, n: u64) -> Result<PowerProduct> {
    check_n(n)?;
    if e.is_empty() || f.is_empty() {
        return Err(Error::Hypothesis("E and F must be nonempty".into()));
    }
    let p = pairing_count(e, f, c, n)?;
    Ok(ratio_from_counts(BigInt::from(p), n, BigInt::from(e.len()), BigInt::from(f.len()), ex))
}

fn ratio_from_counts(pairing: BigInt, n: u64, e: BigInt, f: BigInt, ex: &ExponentPair) -> PowerProduct {
    PowerProduct::rational(BigRational::new(pairing, BigInt::from(n)))
        .times_power(e, -ex.inv_p().clone())
        .times_power(f, -ex.inv_q_dual())
}

/// The family's ratio at scale `N`; boxes use the closed-form pairing.
pub fn family_ratio(kind: &ExtremizerKind, ex: &ExponentPair, c: &Curve, n: u64) -> Result<PowerProduct> {
    match kind {
        ExtremizerKind::ParabolicBox(c_box) => {
            check_n(n)?;
            let half = box_half_sides(c, n, c_box)?;
            let size = box_size(&half);
            Ok(ratio_from_counts(box_self_pairing(c, n, &half), n, size.clone(), size, ex))
        }
        _ => {
            let (e, f) = make_extremizer(kind, c, n)?;
            rwt_ratio(&e, &f, ex, c, n)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    /// `(log N, log value)`
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

/// Ordinary least squares on `(log N, log value)`.
pub fn fit_exponent(values: &[(u64, f64)]) -> Result<FitResult> {
    if let Some((n, v)) = values.iter().find(|(n, v)| *n == 0 || !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Hypothesis(format!("value {v} at N = {n} must be positive and finite")));
    }
    let mut ns: Vec<u64> = values.iter().map(|(n, _)| *n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::Hypothesis(format!("need at least 3 distinct N, got {}", ns.len())));
    }
    let points: Vec<(f64, f64)> = values.iter().map(|(n, v)| ((*n as f64).ln(), v.ln())).collect();
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = points.iter().map(|p| (p.1 - slope * p.0 - intercept).abs()).fold(0.0, f64::max);
    Ok(FitResult { points, slope, intercept, max_residual })
}

/// CSV with columns `N,value`.
pub fn values_csv(values: &[(u64, f64)]) -> String {
    let mut s = String::from("N,value\n");
    for (n, v) in values {
        s.push_str(&format!("{n},{v:.17e}\n"));
    }
    s
}

/// `J_{s,gamma}(N)^{1/(2s)} / N`, exactly.
pub fn moment_norm(c: &Curve, s: usize, n: u64, opts: &CountOptions) -> Result<PowerProduct> {
    if s == 0 {
        return Err(Error::Hypothesis("s must be at least 1".into()));
    }
    check_n(n)?;
    let rec = count_homogeneous(c, s, n, Method::Mitm, opts)?;
    let j = BigInt::from(rec.count);
    Ok(PowerProduct::rational(BigRational::new(BigInt::one(), BigInt::from(n)))
        .times_power(j, BigRational::new(BigInt::one(), BigInt::from(2 * s))))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramRow {
    pub inv_p: BigRational,
    pub inv_q: BigRational,
    pub region: Region,
    pub dominant: Vec<Term>,
    pub vertex: bool,
}

impl DiagramRow {
    pub fn dominant_label(&self) -> String {
        self.dominant.iter().map(|t| t.as_str()).collect::<Vec<_>>().join("+")
    }
}

/// Grid `(i/res, j/res)` over the unit square plus the critical vertex.
pub fn riesz_diagram_data(c: &Curve, resolution: u32) -> Result<Vec<DiagramRow>> {
    if resolution < 2 {
        return Err(Error::Hypothesis("resolution must be at least 2".into()));
    }
    let d = c.total_degree();
    let res = BigInt::from(resolution);
    let row = |e: ExponentPair, vertex: bool| DiagramRow {
        region: classify_for_degree(d, &e),
        dominant: dominant_terms(d, &e),
        inv_p: e.inv_p().clone(),
        inv_q: e.inv_q().clone(),
        vertex,
    };
    let crit = ExponentPair::critical(d);
    let mut rows = Vec::new();
    let mut vertex_seen = false;
    for i in 0..=resolution {
        for j in 0..=resolution {
            let e = ExponentPair::new(BigRational::new(i.into(), res.clone()), BigRational::new(j.into(), res.clone()))?;
            let v = e == crit;
            vertex_seen |= v;
            rows.push(row(e, v));
        }
    }
    if !vertex_seen {
        rows.push(row(crit, true));
    }
    Ok(rows)
}

/// CSV with columns `inv_p,inv_q,region,dominant_term`.
pub fn diagram_csv(rows: &[DiagramRow]) -> String {
    let mut s = String::from("inv_p,inv_q,region,dominant_term\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.inv_p, r.inv_q, r.region, r.dominant_label()));
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoremCase {
    I,
    Ii,
    Iii,
}

impl TheoremCase {
    /// The exponent `theta` in `N^{-theta} |E|^theta |F|^theta`.
    pub fn theta(self) -> BigRational {
        match self {
            TheoremCase::I => BigRational::new(2.into(), 3.into()),
            TheoremCase::Ii => BigRational::new(3.into(), 5.into()),
            TheoremCase::Iii => BigRational::new(4.into(), 7.into()),
        }
    }

    /// Checks the case hypothesis on the curve.
    pub fn check(self, c: &Curve) -> Result<()> {
        c.validate()?;
        let degs: Vec<usize> = c.components().iter().map(|p| p.deg()).collect();
        let ok = match self {
            TheoremCase::I => !(degs.len() == 1 && degs[0] == 1),
            TheoremCase::Ii => degs.len() >= 2 && degs[0] == 1,
            TheoremCase::Iii => degs.len() >= 3 && degs[..3] == [1, 2, 3],
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!("curve {c} does not satisfy case {self}")))
        }
    }
}

impl fmt::Display for TheoremCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoremCase::I => "i",
            TheoremCase::Ii => "ii",
            TheoremCase::Iii => "iii",
        })
    }
}

impl FromStr for TheoremCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" | "1" => Ok(TheoremCase::I),
            "ii" | "2" => Ok(TheoremCase::Ii),
            "iii" | "3" => Ok(TheoremCase::Iii),
            _ => Err(Error::Parse { pos: 0, msg: format!("unknown case '{s}' (i, ii, iii)") }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanCell {
    #[serde(rename = "N")]
    pub n: u64,
    pub max_ratio: f64,
    /// Instance attaining the maximum: a family name or `random#t`.
    pub argmax: String,
    pub instances: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub case: TheoremCase,
    pub curve: String,
    pub seed: u64,
    pub trials: usize,
    pub theta: String,
    pub cells: Vec<ScanCell>,
    pub fit: FitResult,
    pub expected_slope: f64,
}

/// Largest number of points in one random scan set.
const SCAN_SET_CAP: u64 = 2048;

fn random_box_subset(rng: &mut ChaCha8Rng, d: usize, side: u64) -> SparseSet {
    let volume = (side as u128).saturating_pow(d as u32);
    let cap = (volume / 2).clamp(1, SCAN_SET_CAP as u128) as u64;
    let size = rng.gen_range(1..=cap);
    let mut s = SparseSet::new(d);
    for _ in 0..size {
        let p: Vec<i64> = (0..d).map(|_| rng.gen_range(0..side as i64)).collect();
        s.insert(LatticePoint::from_i64(&p)).expect("dimension matches");
    }
    s
}

fn theta_ratio(pairing: &BigInt, n: u64, e: &BigInt, f: &BigInt, theta: &BigRational) -> f64 {
    PowerProduct::rational(BigRational::new(pairing.clone(), BigInt::from(n)))
        .times_power(e.clone(), -theta.clone())
        .times_power(f.clone(), -theta.clone())
        .to_f64()
}

/// Maximum of `<A_N 1_E, 1_F> / (|E|^theta |F|^theta)` over the witness families and
/// `trials` seeded random pairs of subsets of `[0, N)^d`, regressed against `N`.
pub fn theorem_consistency_scan(case: TheoremCase, c: &Curve, ns: &[u64], trials: usize, seed: u64) -> Result<ScanReport> {
    case.check(c)?;
    let theta = case.theta();
    let d = c.dim();
    let cells: Vec<ScanCell> = ns
        .iter()
        .map(|&n| -> Result<ScanCell> {
            check_n(n)?;
            let mut cands: Vec<(String, f64)> = Vec::new();
            for kind in [ExtremizerKind::Dirac, ExtremizerKind::CurveImageDual] {
                let (e, f) = make_extremizer(&kind, c, n)?;
                let p = BigInt::from(pairing_count(&e, &f, c, n)?);
                cands.push((kind.name().into(), theta_ratio(&p, n, &e.len().into(), &f.len().into(), &theta)));
            }
            let half = box_half_sides(c, n, &BigRational::one())?;
            let size = box_size(&half);
            cands.push(("box".into(), theta_ratio(&box_self_pairing(c, n, &half), n, &size, &size, &theta)));
            let randoms: Vec<(String, f64)> = (0..trials)
                .into_par_iter()
                .map(|t| -> Result<(String, f64)> {
                    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, n, t as u64));
                    let e = random_box_subset(&mut rng, d, n);
                    let f = random_box_subset(&mut rng, d, n);
                    let p = BigInt::from(pairing_count(&e, &f, c, n)?);
                    let r = if p.is_zero() { 0.0 } else { theta_ratio(&p, n, &e.len().into(), &f.len().into(), &theta) };
                    Ok((format!("random#{t}"), r))
                })
                .collect::<Result<_>>()?;
            cands.extend(randoms);
            let instances = cands.len();
            // first maximum wins, so ties resolve to the fixed candidate order
            let (argmax, max_ratio) = cands
                .into_iter()
                .fold(None::<(String, f64)>, |b, x| match b {
                    Some(b) if b.1 >= x.1 => Some(b),
                    _ => Some(x),
                })
                .expect("witnesses are always present");
            Ok(ScanCell { n, max_ratio, argmax, instances })
        })
        .collect::<Result<_>>()?;
    let fit = fit_exponent(&cells.iter().map(|c| (c.n, c.max_ratio)).collect::<Vec<_>>())?;
    Ok(ScanReport {
        case,
        curve: c.to_string(),
        seed,
        trials,
        expected_slope: -theta.to_f64().unwrap(),
        theta: theta.to_string(),
        cells,
        fit,
    })
}

fn cell_seed(seed: u64, n: u64, t: u64) -> u64 {
    seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ t.wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(17)
}
