//! Enumeration kernels shared by the counters, generic over the point type.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::point::{Coords, SmallPoint};

const BUCKETS: usize = 1024;

pub(crate) type Multiset<P> = FxHashMap<P, u64>;

fn merge<P: Coords>(mut a: Multiset<P>, mut b: Multiset<P>) -> Multiset<P> {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

/// Multiset of `gamma(n_1) + ... + gamma(n_k)` over ordered k-tuples.
pub(crate) fn tuple_sums<P: Coords>(vals: &[P], k: usize, dim: usize) -> Multiset<P> {
    let mut cur: Multiset<P> = FxHashMap::default();
    cur.insert(P::origin(dim), 1);
    for _ in 0..k {
        let entries: Vec<(P, u64)> = cur.into_iter().collect();
        cur = entries
            .par_chunks(1024)
            .fold(FxHashMap::default, |mut acc: Multiset<P>, chunk| {
                for (p, c) in chunk {
                    for g in vals {
                        *acc.entry(p.add(g)).or_insert(0) += c;
                    }
                }
                acc
            })
            .reduce(FxHashMap::default, merge);
    }
    cur
}

/// Literal enumeration of `[1,N]^{2k}` counting `sum gamma(n_i) - sum gamma(m_i) = z`.
pub(crate) fn brute_count<P: Coords>(vals: &[P], k: usize, z: &P) -> u128 {
    debug_assert!(k >= 1);
    vals.par_iter().map(|g| brute_rec(vals, 1, k, g.clone(), z)).sum()
}

fn brute_rec<P: Coords>(vals: &[P], depth: usize, k: usize, acc: P, z: &P) -> u128 {
    if depth == 2 * k {
        return (acc == *z) as u128;
    }
    let plus = depth < k;
    vals.iter()
        .map(|g| {
            let next = if plus { acc.add(g) } else { acc.sub(g) };
            brute_rec(vals, depth + 1, k, next, z)
        })
        .sum()
}

/// `sum_v r(v) r(v - z)` for the k-fold sum multiset `r`.
pub(crate) fn correlation<P: Coords>(r: &Multiset<P>, z: &P) -> u128 {
    if z.is_origin() {
        return r.par_iter().map(|(_, &c)| c as u128 * c as u128).sum();
    }
    r.par_iter()
        .map(|(v, &c)| r.get(&v.sub(z)).map_or(0, |&d| c as u128 * d as u128))
        .sum()
}

/// Groups the multiset by first coordinate; tails are sorted for determinism.
pub(crate) fn group_by_head<P: Coords>(r: &Multiset<P>) -> BTreeMap<P, Vec<(P, u64)>> {
    let mut groups: BTreeMap<P, Vec<(P, u64)>> = BTreeMap::new();
    for (v, &c) in r {
        groups.entry(v.head()).or_default().push((v.tail(), c));
    }
    for g in groups.values_mut() {
        g.sort_unstable();
    }
    groups
}

/// Number of (key, key) pairs the sliced maximum visits.
pub(crate) fn max_pair_work<P: Coords>(groups: &BTreeMap<P, Vec<(P, u64)>>) -> u128 {
    let heads: Vec<(&P, usize)> = groups.iter().map(|(h, g)| (h, g.len())).collect();
    let mut work = 0u128;
    for (i, (_, a)) in heads.iter().enumerate() {
        for (_, b) in &heads[..=i] {
            work += (*a as u128) * (*b as u128);
        }
    }
    work
}

/// Maximum over `z != 0` of `sum_v r(v) r(v - z)`.
///
/// The search is sliced by the first coordinate of `z`; by the symmetry
/// `z -> -z` only slices with non-negative first coordinate are visited. Ties
/// are broken towards the lexicographically largest `z`, which therefore has a
/// non-negative first coordinate.
pub(crate) fn max_correlation<P: Coords>(groups: &BTreeMap<P, Vec<(P, u64)>>) -> Option<(P, u128)> {
    let heads: Vec<&P> = groups.keys().collect();
    let origin_head = P::origin(1);
    let mut shifts: Vec<P> = Vec::new();
    for a in &heads {
        for b in &heads {
            let d = a.sub(b);
            if d >= origin_head {
                shifts.push(d);
            }
        }
    }
    shifts.sort_unstable();
    shifts.dedup();
    shifts
        .par_iter()
        .filter_map(|z1| {
            let mut acc: FxHashMap<P, u128> = FxHashMap::default();
            for (a, ga) in groups {
                let Some(gb) = groups.get(&a.sub(z1)) else { continue };
                for (ta, ca) in ga {
                    for (tb, cb) in gb {
                        *acc.entry(ta.sub(tb)).or_insert(0) += *ca as u128 * *cb as u128;
                    }
                }
            }
            let zero_slice = z1.is_origin();
            acc.into_iter()
                .filter(|(t, _)| !(zero_slice && t.is_origin()))
                .max_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(&y.0)))
                .map(|(t, c)| (P::join(z1, &t), c))
        })
        .max_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(&y.0)))
}

/// Same as [`max_correlation`] with tails packed into single `i64` keys.
///
/// Tail coordinate `j` of a difference lies in `[-2 s_j, 2 s_j]` where `s_j`
/// bounds the tails, so mixed-radix digits of base `4 s_j + 1` encode it
/// exactly and key order equals lexicographic order. Falls back to the generic
/// kernel when the keys or the total mass would not fit.
pub(crate) fn max_correlation_small(
    groups: &BTreeMap<SmallPoint, Vec<(SmallPoint, u64)>>,
) -> Option<(SmallPoint, u128)> {
    let Some(first) = groups.values().flatten().next() else { return None };
    let tdim = first.0.dim();
    let mut span = vec![0i64; tdim];
    let mut mass = 0u128;
    let mut top = 0u64;
    for (t, c) in groups.values().flatten() {
        top = top.max(*c);
        for (s, x) in span.iter_mut().zip(t.coords()) {
            *s = (*s).max(x.abs());
        }
        mass += *c as u128;
    }
    let bases: Option<Vec<i64>> = span.iter().map(|s| s.checked_mul(4).and_then(|v| v.checked_add(1))).collect();
    let Some(bases) = bases else { return max_correlation(groups) };
    let mut weights = vec![1i64; tdim];
    let mut total: i64 = 1;
    for j in (0..tdim).rev() {
        weights[j] = total;
        match total.checked_mul(bases[j]) {
            Some(v) if v < 1 << 62 => total = v,
            _ => return max_correlation(groups),
        }
    }
    if mass.checked_mul(mass).is_none_or(|m| m > u64::MAX as u128) || top.saturating_mul(top) > u32::MAX as u64 {
        return max_correlation(groups);
    }
    // keys of differences lie in (-total, total); pick a shift giving at most BUCKETS buckets
    let mut shift = 0u32;
    while ((2 * total) >> shift) >= BUCKETS as i64 {
        shift += 1;
    }
    let encode = |t: &SmallPoint| t.coords().iter().zip(&weights).map(|(x, w)| x * w).sum::<i64>();
    let decode = |mut key: i64| {
        let mut d = vec![0i64; tdim];
        for j in (0..tdim).rev() {
            let half = 2 * span[j];
            let r = (key + half).rem_euclid(bases[j]) - half;
            d[j] = r;
            key = (key - r) / bases[j];
        }
        d
    };
    let packed: BTreeMap<i64, Vec<(i64, u64)>> = groups
        .iter()
        .map(|(h, g)| (h.coords()[0], g.iter().map(|(t, c)| (encode(t), *c)).collect()))
        .collect();
    let heads: Vec<i64> = packed.keys().copied().collect();
    let mut shifts: Vec<i64> = heads.iter().flat_map(|a| heads.iter().map(move |b| a - b)).filter(|d| *d >= 0).collect();
    shifts.sort_unstable();
    shifts.dedup();
    shifts
        .par_iter()
        .filter_map(|&z1| {
            // Radix-partition the products by key so each accumulation map stays cache-sized.
            let mut buckets: Vec<Vec<(i64, u32)>> = vec![Vec::new(); BUCKETS];
            for (a, ga) in &packed {
                let Some(gb) = packed.get(&(a - z1)) else { continue };
                for (ta, ca) in ga {
                    for (tb, cb) in gb {
                        let d = ta - tb;
                        buckets[((d + total) >> shift) as usize].push((d, (ca * cb) as u32));
                    }
                }
            }
            let mut acc: FxHashMap<i64, u64> = FxHashMap::default();
            let mut best: Option<(i64, u64)> = None;
            for b in buckets {
                acc.clear();
                for (d, w) in b {
                    *acc.entry(d).or_insert(0) += w as u64;
                }
                for (&d, &c) in &acc {
                    if z1 == 0 && d == 0 {
                        continue;
                    }
                    if best.is_none_or(|(bd, bc)| (c, d) > (bc, bd)) {
                        best = Some((d, c));
                    }
                }
            }
            best.map(|(t, c)| (z1, t, c as u128))
        })
        .max_by(|x, y| x.2.cmp(&y.2).then_with(|| (x.0, x.1).cmp(&(y.0, y.1))))
        .map(|(z1, t, c)| {
            let mut v = vec![z1];
            v.extend(decode(t));
            (SmallPoint::from_slice(&v), c)
        })
}
