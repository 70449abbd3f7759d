//! The method of refinements: refined sets, parameter slices, the pruned tower
//! of parameters and the multiplicity of the endpoint map.
//!
//! All constants are explicit. At level `j` the current mass ratios
//! `alpha_j = <A 1_{E_{j-1}}, 1_{F_{j-1}}> / |F_{j-1}|` and
//! `beta_j = <A 1_{E_{j-1}}, 1_{F_j}> / |E_{j-1}|` are recomputed and the sets are
//! thresholded at half of them, so every step keeps at least half of the
//! current pairing mass.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Serialize, Serializer};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::lattice::{curve_values, LatticePoint, SparseSet};
use crate::point::{Coords, SmallPoint, SMALL_DIM};
use crate::poly::IntPoly;

fn ser_rational<S: Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ratio(a: impl Into<BigInt>, b: impl Into<BigInt>) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// Constants and sizes recorded at one refinement level `j >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Level {
    pub j: usize,
    #[serde(serialize_with = "ser_rational")]
    pub alpha_j: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub beta_j: BigRational,
    /// `<A 1_{E_{j-1}}, 1_{F_j}>`
    pub mass_f: u64,
    /// `<A* 1_{F_j}, 1_{E_j}>`
    pub mass_e: u64,
    pub size_e: usize,
    pub size_f: usize,
    /// `min_{x in F_j} A 1_{E_{j-1}}(x)`
    pub min_forward: u64,
    /// `min_{y in E_j} A* 1_{F_j}(y)`
    pub min_backward: u64,
}

impl Level {
    pub fn alpha_threshold(&self) -> BigRational {
        &self.alpha_j / BigInt::from(2)
    }

    pub fn beta_threshold(&self) -> BigRational {
        &self.beta_j / BigInt::from(2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    /// Number of instances the property was evaluated on.
    pub instances: u64,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, holds: bool, instances: u64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), holds, instances, detail: detail.into() }
    }
}

/// Output of [`refine`]: `e[j] = E_j`, `f[j] = F_j` for `j = 0..=k`.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub curve: Curve,
    pub n: u64,
    pub k: usize,
    pub pairing: u64,
    pub alpha: BigRational,
    pub beta: BigRational,
    pub e: Vec<SparseSet>,
    pub f: Vec<SparseSet>,
    pub levels: Vec<Level>,
    /// Properties (i)-(vi) of the refinement lemma, per level.
    pub checks: Vec<Check>,
}

/// Points, curve values and membership sets in one representation.
struct Engine<P: Coords> {
    gam: Vec<P>,
    k: usize,
    e: Vec<FxHashSet<P>>,
    f: Vec<FxHashSet<P>>,
}

impl<P: Coords> Engine<P> {
    /// `A 1_E(x) = #{n : x - gamma(n) in E}`
    fn forward(&self, set: &FxHashSet<P>, x: &P) -> u64 {
        self.gam.iter().filter(|g| set.contains(&x.sub(g))).count() as u64
    }

    /// `A* 1_F(y) = #{n : y + gamma(n) in F}`
    fn backward(&self, set: &FxHashSet<P>, y: &P) -> u64 {
        self.gam.iter().filter(|g| set.contains(&y.add(g))).count() as u64
    }

    fn pairing(&self, e: &FxHashSet<P>, f: &FxHashSet<P>) -> u64 {
        f.iter().map(|x| self.forward(e, x)).sum()
    }

    fn run_refinement(&mut self, pairing: u64) -> (Vec<Level>, Vec<Check>) {
        let mut levels = Vec::new();
        let mut checks = Vec::new();
        for j in 1..=self.k {
            let (e_prev, f_prev) = (&self.e[j - 1], &self.f[j - 1]);
            let mass_prev = self.pairing(e_prev, f_prev);
            let alpha_j = ratio(mass_prev, f_prev.len() as u64);
            // keep x with A 1_{E_{j-1}}(x) > alpha_j / 2, i.e. 2 |F_{j-1}| A(x) > mass_prev
            let fwd: Vec<(P, u64)> = f_prev.iter().map(|x| (x.clone(), self.forward(e_prev, x))).collect();
            let f_j: FxHashSet<P> = fwd
                .iter()
                .filter(|(_, a)| 2 * (f_prev.len() as u128) * (*a as u128) > mass_prev as u128)
                .map(|(x, _)| x.clone())
                .collect();
            let mass_f: u64 = fwd.iter().filter(|(x, _)| f_j.contains(x)).map(|(_, a)| a).sum();
            let beta_j = ratio(mass_f, e_prev.len() as u64);
            let bwd: Vec<(P, u64)> = e_prev.iter().map(|y| (y.clone(), self.backward(&f_j, y))).collect();
            let e_j: FxHashSet<P> = bwd
                .iter()
                .filter(|(_, b)| 2 * (e_prev.len() as u128) * (*b as u128) > mass_f as u128)
                .map(|(y, _)| y.clone())
                .collect();
            let mass_e: u64 = bwd.iter().filter(|(y, _)| e_j.contains(y)).map(|(_, b)| b).sum();
            let min_forward = f_j.iter().map(|x| self.forward(e_prev, x)).min().unwrap_or(0);
            let min_backward = e_j.iter().map(|y| self.backward(&f_j, y)).min().unwrap_or(0);
            let level = Level {
                j,
                alpha_j,
                beta_j,
                mass_f,
                mass_e,
                size_e: e_j.len(),
                size_f: f_j.len(),
                min_forward,
                min_backward,
            };
            checks.extend(lemma_checks(&level, f_j.is_subset(f_prev), e_j.is_subset(e_prev), pairing));
            levels.push(level);
            self.f.push(f_j);
            self.e.push(e_j);
        }
        (levels, checks)
    }
}

fn lemma_checks(l: &Level, f_sub: bool, e_sub: bool, pairing: u64) -> Vec<Check> {
    let j = l.j;
    let two_pow = |e: usize| BigInt::from(2).pow(e as u32);
    let p0 = BigInt::from(pairing);
    let c3 = ratio(1, two_pow(2 * j - 1));
    let c6 = ratio(1, two_pow(2 * j));
    vec![
        Check::new(format!("(i) F_{j} within F_{}", j - 1), f_sub, 1, format!("|F_{j}| = {}", l.size_f)),
        Check::new(
            format!("(ii) A 1_E_{} > alpha_{j}/2 on F_{j}", j - 1),
            l.size_f > 0 && BigRational::from_integer(l.min_forward.into()) > l.alpha_threshold(),
            l.size_f as u64,
            format!("min {} vs threshold {}", l.min_forward, l.alpha_threshold()),
        ),
        Check::new(
            format!("(iii) mass on F_{j} >= pairing/2^{}", 2 * j - 1),
            BigRational::from_integer(l.mass_f.into()) >= &c3 * &p0 && l.mass_f > 0,
            1,
            format!("{} vs {}", l.mass_f, &c3 * &p0),
        ),
        Check::new(format!("(iv) E_{j} within E_{}", j - 1), e_sub, 1, format!("|E_{j}| = {}", l.size_e)),
        Check::new(
            format!("(v) A* 1_F_{j} > beta_{j}/2 on E_{j}"),
            l.size_e > 0 && BigRational::from_integer(l.min_backward.into()) > l.beta_threshold(),
            l.size_e as u64,
            format!("min {} vs threshold {}", l.min_backward, l.beta_threshold()),
        ),
        Check::new(
            format!("(vi) mass on E_{j} >= pairing/2^{}", 2 * j),
            BigRational::from_integer(l.mass_e.into()) >= &c6 * &p0 && l.mass_e > 0,
            1,
            format!("{} vs {}", l.mass_e, &c6 * &p0),
        ),
    ]
}

fn pack_set(s: &SparseSet) -> Option<FxHashSet<SmallPoint>> {
    s.iter().map(SmallPoint::try_from_lattice).collect()
}

fn big_set(s: &SparseSet) -> FxHashSet<LatticePoint> {
    s.iter().cloned().collect()
}

fn to_sparse<P: Coords>(dim: usize, s: &FxHashSet<P>) -> SparseSet {
    SparseSet::from_points(dim, s.iter().map(Coords::to_lattice)).expect("dimension checked")
}

/// Builds the engine for `(E_0, F_0)` or for all levels of a refinement.
enum AnyEngine {
    Small(Engine<SmallPoint>),
    Big(Engine<LatticePoint>),
}

fn build_engine(c: &Curve, n: u64, k: usize, e: &[SparseSet], f: &[SparseSet]) -> AnyEngine {
    let vals = curve_values(c, n);
    let small = (c.dim() <= SMALL_DIM && 2 * k < 256)
        .then(|| {
            let gam = crate::point::pack_all(&vals)?;
            let e: Option<Vec<_>> = e.iter().map(pack_set).collect();
            let f: Option<Vec<_>> = f.iter().map(pack_set).collect();
            Some(Engine { gam, k, e: e?, f: f? })
        })
        .flatten();
    match small {
        Some(s) => AnyEngine::Small(s),
        None => AnyEngine::Big(Engine {
            gam: vals,
            k,
            e: e.iter().map(big_set).collect(),
            f: f.iter().map(big_set).collect(),
        }),
    }
}

fn check_sets(e: &SparseSet, f: &SparseSet, c: &Curve, n: u64) -> Result<()> {
    c.validate()?;
    if e.dim() != c.dim() || f.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: e.dim().max(f.dim()) });
    }
    if e.is_empty() || f.is_empty() {
        return Err(Error::Hypothesis("E and F must be nonempty".into()));
    }
    if n == 0 {
        return Err(Error::Hypothesis("N must be at least 1".into()));
    }
    Ok(())
}

/// Refined sets `E_j`, `F_j` for `j <= k`.
pub fn refine(e: &SparseSet, f: &SparseSet, c: &Curve, n: u64, k: usize) -> Result<Refinement> {
    check_sets(e, f, c, n)?;
    let mut engine = build_engine(c, n, k, std::slice::from_ref(e), std::slice::from_ref(f));
    fn go<P: Coords>(eng: &mut Engine<P>) -> Result<(u64, Vec<Level>, Vec<Check>)> {
        let pairing = eng.pairing(&eng.e[0], &eng.f[0]);
        if pairing == 0 {
            return Err(Error::Hypothesis("alpha = beta = 0: no flow between E and F".into()));
        }
        let (levels, checks) = eng.run_refinement(pairing);
        Ok((pairing, levels, checks))
    }
    let dim = c.dim();
    let (pairing, levels, checks, es, fs) = match &mut engine {
        AnyEngine::Small(eng) => {
            let (p, l, ch) = go(eng)?;
            (p, l, ch, eng.e.iter().map(|s| to_sparse(dim, s)).collect(), eng.f.iter().map(|s| to_sparse(dim, s)).collect())
        }
        AnyEngine::Big(eng) => {
            let (p, l, ch) = go(eng)?;
            (p, l, ch, eng.e.iter().map(|s| to_sparse(dim, s)).collect(), eng.f.iter().map(|s| to_sparse(dim, s)).collect())
        }
    };
    Ok(Refinement {
        curve: c.clone(),
        n,
        k,
        pairing,
        alpha: ratio(pairing, f.len() as u64),
        beta: ratio(pairing, e.len() as u64),
        e: es,
        f: fs,
        levels,
        checks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// Forward step, lands in an `F` set.
    B,
    /// Backward step, lands in an `E` set.
    A,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Slice {
    pub prefix: Vec<u32>,
    pub direction: Direction,
    pub members: Vec<u32>,
}

/// `y + gamma(n_1) - gamma(m_1) + ...` for a chain or chain prefix.
pub fn psi(y: &LatticePoint, chain: &[u32], c: &Curve) -> Result<LatticePoint> {
    if y.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: y.dim() });
    }
    let mut p = y.clone();
    for (i, &t) in chain.iter().enumerate() {
        let g = c.eval_i64(t as i64);
        p = if i % 2 == 0 { p.plus(&g) } else { p.minus(&g) };
    }
    Ok(p)
}

/// The slice following `prefix`, computed by direct membership tests.
pub fn slice_members(y: &LatticePoint, prefix: &[u32], r: &Refinement) -> Result<Slice> {
    let k = r.k;
    if prefix.len() >= 2 * k {
        return Err(Error::Hypothesis(format!("prefix length {} must be below 2k = {}", prefix.len(), 2 * k)));
    }
    if !r.e[k].contains(y) {
        return Err(Error::Hypothesis(format!("y = {y} is not in E_{k}")));
    }
    if let Some(&bad) = prefix.iter().find(|&&t| t == 0 || t as u64 > r.n) {
        return Err(Error::Hypothesis(format!("parameter {bad} outside [1, {}]", r.n)));
    }
    let point = psi(y, prefix, &r.curve)?;
    let j = prefix.len() / 2;
    let (direction, members) = if prefix.len().is_multiple_of(2) {
        let target = &r.f[k - j];
        (Direction::B, (1..=r.n as u32).filter(|&t| target.contains(&point.plus(&r.curve.eval_i64(t as i64)))).collect())
    } else {
        let target = &r.e[k - j - 1];
        (Direction::A, (1..=r.n as u32).filter(|&t| target.contains(&point.minus(&r.curve.eval_i64(t as i64)))).collect())
    };
    Ok(Slice { prefix: prefix.to_vec(), direction, members })
}

/// Removes from the final slice every `m_k` that closes the chain back at `y`.
pub fn prune_last_slice(y: &LatticePoint, slice: &Slice, c: &Curve) -> Result<Slice> {
    if slice.direction != Direction::A || slice.prefix.len().is_multiple_of(2) {
        return Err(Error::Hypothesis("only the final backward slice is pruned".into()));
    }
    let point = psi(y, &slice.prefix, c)?;
    let members = slice
        .members
        .iter()
        .copied()
        .filter(|&m| point.minus(&c.eval_i64(m as i64)) != *y)
        .collect();
    Ok(Slice { prefix: slice.prefix.clone(), direction: Direction::A, members })
}

/// Size of `T`, the multiset of images `Psi(T)` and per-position minimum slice sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    pub size: u128,
    pub images: BTreeMap<LatticePoint, u64>,
    /// `min_slice[d]` is the smallest slice met at chain position `d`.
    pub min_slice: Vec<u64>,
    /// Largest number of parameters removed from one final slice.
    pub max_removed: usize,
}

struct TowerAcc<P: Coords> {
    size: u128,
    images: FxHashMap<P, u64>,
    min_slice: Vec<u64>,
    max_removed: usize,
    budget: u128,
    chains: Option<Vec<Vec<u32>>>,
}

impl<P: Coords> Engine<P> {
    fn tower(&self, y: &P, budget: u128, collect: bool) -> Result<TowerAcc<P>> {
        let mut acc = TowerAcc {
            size: 0,
            images: FxHashMap::default(),
            min_slice: vec![u64::MAX; 2 * self.k],
            max_removed: 0,
            budget,
            chains: collect.then(Vec::new),
        };
        let mut prefix = Vec::with_capacity(2 * self.k);
        self.dfs(y, y.clone(), &mut prefix, &mut acc)?;
        Ok(acc)
    }

    fn dfs(&self, y: &P, point: P, prefix: &mut Vec<u32>, acc: &mut TowerAcc<P>) -> Result<()> {
        let depth = prefix.len();
        if depth == 2 * self.k {
            acc.size += 1;
            if acc.size > acc.budget {
                return Err(Error::Budget(format!(
                    "tower exceeds {} chains (distinct images so far: {}, minimum slices so far: {:?})",
                    acc.budget,
                    acc.images.len(),
                    acc.min_slice
                )));
            }
            *acc.images.entry(point).or_insert(0) += 1;
            if let Some(ch) = acc.chains.as_mut() {
                ch.push(prefix.clone());
            }
            return Ok(());
        }
        let j = depth / 2;
        let mut members: Vec<(u32, P)> = Vec::new();
        if depth.is_multiple_of(2) {
            let target = &self.f[self.k - j];
            for (i, g) in self.gam.iter().enumerate() {
                let next = point.add(g);
                if target.contains(&next) {
                    members.push((i as u32 + 1, next));
                }
            }
        } else {
            let target = &self.e[self.k - j - 1];
            for (i, g) in self.gam.iter().enumerate() {
                let next = point.sub(g);
                if target.contains(&next) {
                    members.push((i as u32 + 1, next));
                }
            }
            if depth == 2 * self.k - 1 {
                let before = members.len();
                members.retain(|(_, p)| p != y);
                acc.max_removed = acc.max_removed.max(before - members.len());
            }
        }
        acc.min_slice[depth] = acc.min_slice[depth].min(members.len() as u64);
        for (t, next) in members {
            prefix.push(t);
            self.dfs(y, next, prefix, acc)?;
            prefix.pop();
        }
        Ok(())
    }
}

fn finish_tower<P: Coords>(acc: TowerAcc<P>) -> (Tower, Option<Vec<Vec<u32>>>) {
    let images = acc.images.into_iter().map(|(p, c)| (p.to_lattice(), c)).collect();
    let min_slice = acc.min_slice.into_iter().map(|m| if m == u64::MAX { 0 } else { m }).collect();
    (Tower { size: acc.size, images, min_slice, max_removed: acc.max_removed }, acc.chains)
}

fn tower_with(y: &LatticePoint, r: &Refinement, budget: u128, collect: bool) -> Result<(Tower, Option<Vec<Vec<u32>>>)> {
    if !r.e[r.k].contains(y) {
        return Err(Error::Hypothesis(format!("y = {y} is not in E_{}", r.k)));
    }
    match build_engine(&r.curve, r.n, r.k, &r.e, &r.f) {
        AnyEngine::Small(eng) => {
            let ys = SmallPoint::try_from_lattice(y).expect("y is in E_k");
            Ok(finish_tower(eng.tower(&ys, budget, collect)?))
        }
        AnyEngine::Big(eng) => Ok(finish_tower(eng.tower(y, budget, collect)?)),
    }
}

/// Depth-first walk of the pruned tower rooted at `y`, counting chains without storing them.
pub fn build_tower(y: &LatticePoint, r: &Refinement, budget: u128) -> Result<Tower> {
    if r.k == 0 {
        return Err(Error::Hypothesis("the tower needs k >= 1".into()));
    }
    Ok(tower_with(y, r, budget, false)?.0)
}

/// Every chain of the pruned tower, in lexicographic order.
pub fn enumerate_chains(y: &LatticePoint, r: &Refinement, budget: u128) -> Result<Vec<Vec<u32>>> {
    if r.k == 0 {
        return Err(Error::Hypothesis("the tower needs k >= 1".into()));
    }
    Ok(tower_with(y, r, budget, true)?.1.unwrap_or_default())
}

/// Largest fibre of the image multiset, with the smallest point attaining it.
pub fn multiplicity(images: &BTreeMap<LatticePoint, u64>) -> Result<(u64, LatticePoint)> {
    let mut best: Option<(u64, &LatticePoint)> = None;
    for (p, &c) in images {
        if best.is_none_or(|(b, _)| c > b) {
            best = Some((c, p));
        }
    }
    best.map(|(c, p)| (c, p.clone()))
        .ok_or_else(|| Error::Hypothesis("empty tower has no multiplicity".into()))
}

/// Largest number of `n` in `[1, N]` sharing one curve value.
pub fn fiber_bound(c: &Curve, n: u64) -> usize {
    let mut counts: BTreeMap<LatticePoint, usize> = BTreeMap::new();
    for p in curve_values(c, n) {
        *counts.entry(p).or_insert(0) += 1;
    }
    counts.values().copied().max().unwrap_or(0)
}

/// Whether the curve has the special shape the subcritical argument uses for `k`.
pub fn is_reduced_form(c: &Curve, k: usize) -> bool {
    let comps = c.components();
    let id = IntPoly::new([0, 1]);
    match k {
        1 => comps.len() == 1 && comps[0].deg() >= 2,
        2 => comps.len() == 2 && comps[0] == id && comps[1].deg() >= 2,
        3 => *c == Curve::moment(3),
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefineOptions {
    /// Evaluate at most this many `y` in `E_k` (in sorted order).
    pub y_cap: Option<usize>,
    /// Maximum number of chains in one tower.
    pub tower_budget: u128,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { y_cap: None, tower_budget: 50_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementTrace {
    pub curve: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub k: usize,
    pub pairing: u64,
    #[serde(serialize_with = "ser_rational")]
    pub alpha: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub beta: BigRational,
    pub reduced_form: bool,
    pub fiber_bound: usize,
    /// Why the instance was settled by the trivial bound, if it was.
    pub trivial_regime: Option<String>,
    pub levels: Vec<Level>,
    pub sizes_e: Vec<usize>,
    pub sizes_f: Vec<usize>,
    pub y_total: usize,
    pub y_checked: usize,
    pub chosen_y: Option<String>,
    pub tower_size: Option<String>,
    pub image_count: Option<usize>,
    pub multiplicity: Option<u64>,
    pub witness_z: Option<String>,
    pub min_slices: Vec<u64>,
    /// Thresholds the slices at each chain position must exceed.
    pub slice_bounds: Vec<String>,
    pub max_removed: usize,
    pub checks: Vec<Check>,
}

impl RefinementTrace {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// Aligned plain-text report.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "curve        {}", self.curve);
        let _ = writeln!(s, "N, k         {}, {}", self.n, self.k);
        let _ = writeln!(s, "pairing      {}", self.pairing);
        let _ = writeln!(s, "alpha, beta  {}, {}", self.alpha, self.beta);
        let _ = writeln!(s, "reduced form {}", self.reduced_form);
        if let Some(t) = &self.trivial_regime {
            let _ = writeln!(s, "trivial      {t}");
        }
        if !self.levels.is_empty() {
            let _ = writeln!(s, "{:>5} {:>10} {:>10} {:>8} {:>8} {:>8} {:>8}", "level", "alpha_j", "beta_j", "|E_j|", "|F_j|", "mass_F", "mass_E");
            for l in &self.levels {
                let _ = writeln!(
                    s,
                    "{:>5} {:>10} {:>10} {:>8} {:>8} {:>8} {:>8}",
                    l.j,
                    l.alpha_j.to_string(),
                    l.beta_j.to_string(),
                    l.size_e,
                    l.size_f,
                    l.mass_f,
                    l.mass_e
                );
            }
        }
        if let Some(y) = &self.chosen_y {
            let _ = writeln!(s, "y            {y} ({} of {} checked)", self.y_checked, self.y_total);
            let _ = writeln!(s, "|T|          {}", self.tower_size.as_deref().unwrap_or("-"));
            let _ = writeln!(s, "|Psi(T)|     {}", self.image_count.unwrap_or(0));
            let _ = writeln!(s, "m(Psi;T)     {} at {}", self.multiplicity.unwrap_or(0), self.witness_z.as_deref().unwrap_or("-"));
        }
        for c in &self.checks {
            let mark = if c.holds { "pass" } else { "FAIL" };
            if c.detail.is_empty() {
                let _ = writeln!(s, "[{mark}] {} (n={})", c.name, c.instances);
            } else {
                let _ = writeln!(s, "[{mark}] {} ({}; n={})", c.name, c.detail, c.instances);
            }
        }
        s
    }
}

struct YResult {
    y: LatticePoint,
    tower: Tower,
    m: u64,
    witness: LatticePoint,
    returns_to_y: bool,
    images_in_e: bool,
}

/// Runs the whole pipeline on one instance and checks the inequality chain
/// `c_tower alpha^k beta^k <= |T| <= m |Psi(T)| <= m |E|` for every evaluated `y`.
pub fn verify_subcritical_instance(
    e: &SparseSet,
    f: &SparseSet,
    c: &Curve,
    n: u64,
    k: usize,
    opts: &RefineOptions,
) -> Result<RefinementTrace> {
    check_sets(e, f, c, n)?;
    if !(1..=3).contains(&k) {
        return Err(Error::Hypothesis("k must be 1, 2 or 3".into()));
    }
    let pairing = crate::lattice::pairing_count(e, f, c, n)?;
    let alpha = ratio(pairing, f.len() as u64);
    let beta = ratio(pairing, e.len() as u64);
    let fb = fiber_bound(c, n);
    let mut trace = RefinementTrace {
        curve: c.to_string(),
        n,
        k,
        pairing,
        alpha: alpha.clone(),
        beta: beta.clone(),
        reduced_form: is_reduced_form(c, k),
        fiber_bound: fb,
        trivial_regime: None,
        levels: Vec::new(),
        sizes_e: vec![e.len()],
        sizes_f: vec![f.len()],
        y_total: 0,
        y_checked: 0,
        chosen_y: None,
        tower_size: None,
        image_count: None,
        multiplicity: None,
        witness_z: None,
        min_slices: Vec::new(),
        slice_bounds: Vec::new(),
        max_removed: 0,
        checks: Vec::new(),
    };
    let nk = BigRational::from_integer(BigInt::from(n).pow(k as u32));
    let ab_k = num_traits::pow(&alpha * &beta, k);
    if pairing == 0 {
        trace.trivial_regime = Some("alpha = 0: no flow, the inequality is trivial".into());
        trace.checks.push(Check::new("trivial bound alpha^k beta^k <= N^k", ab_k <= nk, 1, "alpha = beta = 0"));
        return Ok(trace);
    }
    if alpha <= BigRational::from_integer(BigInt::from(2 * fb)) {
        let bound = num_traits::pow(BigRational::from_integer(BigInt::from(2 * fb)), k) * &nk;
        trace.trivial_regime = Some(format!("alpha = {alpha} <= 2 x fibre bound {fb}: pruned slices may be empty"));
        trace.checks.push(Check::new(
            format!("trivial bound alpha^k beta^k <= ({})^k N^k", 2 * fb),
            ab_k <= bound,
            1,
            format!("{} vs {}", ab_k, bound),
        ));
        return Ok(trace);
    }

    let r = refine(e, f, c, n, k)?;
    trace.levels = r.levels.clone();
    trace.sizes_e = r.e.iter().map(SparseSet::len).collect();
    trace.sizes_f = r.f.iter().map(SparseSet::len).collect();
    trace.checks.extend(r.checks.iter().cloned());

    // threshold at chain position d: B steps at level k-j use beta, A steps alpha;
    // the final slice loses at most the fibre bound to pruning
    let bounds: Vec<BigRational> = (0..2 * k)
        .map(|d| {
            let lvl = &r.levels[k - d / 2 - 1];
            if d % 2 == 0 {
                lvl.beta_threshold()
            } else if d == 2 * k - 1 {
                lvl.alpha_threshold() - BigInt::from(fb)
            } else {
                lvl.alpha_threshold()
            }
        })
        .collect();
    trace.slice_bounds = bounds.iter().map(ToString::to_string).collect();
    let prod_bounds = bounds.iter().fold(BigRational::one(), |a, b| a * b);
    let c_tower = &prod_bounds / &ab_k;

    let ys: Vec<LatticePoint> = r.e[k].iter().cloned().collect();
    trace.y_total = ys.len();
    let ys: Vec<LatticePoint> = match opts.y_cap {
        Some(cap) => ys.into_iter().take(cap).collect(),
        None => ys,
    };
    trace.y_checked = ys.len();
    let e_set = &r.e[0];
    let results: Vec<YResult> = match build_engine(c, n, k, &r.e, &r.f) {
        AnyEngine::Small(eng) => run_ys(&eng, &ys, opts, e_set)?,
        AnyEngine::Big(eng) => run_ys(&eng, &ys, opts, e_set)?,
    };

    let cnt = results.len() as u64;
    let mut min_slices = vec![u64::MAX; 2 * k];
    let (mut ok_slices, mut ok_prod, mut ok_prune, mut ok_images, mut ok_upper, mut ok_lower, mut ok_chain) =
        (true, true, true, true, true, true, true);
    let e_len = BigInt::from(e.len());
    for res in &results {
        let t = &res.tower;
        for (d, m) in t.min_slice.iter().enumerate() {
            min_slices[d] = min_slices[d].min(*m);
            if BigRational::from_integer((*m).into()) <= bounds[d] {
                ok_slices = false;
            }
        }
        let prod: u128 = t.min_slice.iter().map(|&m| m as u128).product();
        ok_prod &= t.size >= prod;
        ok_prune &= !res.returns_to_y;
        ok_images &= res.images_in_e;
        let size = BigInt::from(t.size);
        ok_upper &= size <= BigInt::from(res.m) * BigInt::from(t.images.len()) && t.images.len() <= e.len();
        ok_lower &= BigRational::from_integer(size.clone()) >= prod_bounds;
        ok_chain &= &c_tower * &ab_k <= BigRational::from_integer(BigInt::from(res.m) * &e_len);
        trace.max_removed = trace.max_removed.max(t.max_removed);
    }
    trace.min_slices = min_slices.into_iter().map(|m| if m == u64::MAX { 0 } else { m }).collect();
    let c_tower_f = c_tower.to_f64().unwrap_or(0.0);
    trace.checks.extend([
        Check::new("slice sizes exceed their thresholds", ok_slices, cnt, format!("min slices {:?}", trace.min_slices)),
        Check::new("|T| >= product of minimum slice sizes", ok_prod, cnt, ""),
        Check::new("pruning: Psi(chain) != y", ok_prune, cnt, format!("max removed {}", trace.max_removed)),
        Check::new("Psi(T) within E", ok_images, cnt, ""),
        Check::new("multiplicity: |T| <= m |Psi(T)| <= m |E|", ok_upper, cnt, ""),
        Check::new("tower lower bound: |T| >= c_tower alpha^k beta^k", ok_lower, cnt, format!("c_tower = {c_tower_f:.6e}")),
        Check::new("chain: alpha^k beta^k <= m |E| / c_tower", ok_chain, cnt, ""),
    ]);

    // the reported y has the largest tower; ties go to the smallest y
    if let Some(best) = results.iter().fold(None::<&YResult>, |b, x| match b {
        Some(b) if b.tower.size >= x.tower.size => Some(b),
        _ => Some(x),
    }) {
        trace.chosen_y = Some(best.y.to_plain());
        trace.tower_size = Some(best.tower.size.to_string());
        trace.image_count = Some(best.tower.images.len());
        trace.multiplicity = Some(best.m);
        trace.witness_z = Some(best.witness.to_plain());
    }
    Ok(trace)
}

fn run_ys<P: Coords>(eng: &Engine<P>, ys: &[LatticePoint], opts: &RefineOptions, e: &SparseSet) -> Result<Vec<YResult>> {
    // y lies in E_k, so it is one of the engine's own points
    let own: FxHashMap<LatticePoint, &P> = eng.e[eng.k].iter().map(|p| (p.to_lattice(), p)).collect();
    ys.par_iter()
        .map(|y| {
            let yp = own[y].clone();
            let (tower, _) = finish_tower(eng.tower(&yp, opts.tower_budget, false)?);
            let (m, witness) = multiplicity(&tower.images)?;
            let returns_to_y = tower.images.contains_key(y);
            let images_in_e = tower.images.keys().all(|p| e.contains(p));
            Ok(YResult { y: y.clone(), tower, m, witness, returns_to_y, images_in_e })
        })
        .collect()
}
