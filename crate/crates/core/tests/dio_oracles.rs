use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use polyavg_core::dio::{count_homogeneous, count_inhomogeneous, count_lemma1, count_lemma2, count_lemma3, max_inhomogeneous};
use polyavg_core::{CountOptions, Curve, IntPoly, LatticePoint, Method};
use proptest::prelude::*;

fn gamma(c: &Curve, n: i64) -> Vec<i128> {
    c.components().iter().map(|p| p.eval_i64(n).to_i128().unwrap()).collect()
}

/// Every value of `sum gamma(n_i) - sum gamma(m_i)` over `[1,N]^{2k}`, with multiplicity.
fn difference_table(c: &Curve, k: usize, n: u64) -> BTreeMap<Vec<i128>, u128> {
    let vals: Vec<Vec<i128>> = (1..=n as i64).map(|t| gamma(c, t)).collect();
    let d = c.dim();
    let mut table = BTreeMap::new();
    let total = (n as usize).pow(2 * k as u32);
    for idx in 0..total {
        let mut rest = idx;
        let mut acc = vec![0i128; d];
        for pos in 0..2 * k {
            let v = &vals[rest % n as usize];
            rest /= n as usize;
            for j in 0..d {
                if pos < k {
                    acc[j] += v[j];
                } else {
                    acc[j] -= v[j];
                }
            }
        }
        *table.entry(acc).or_insert(0u128) += 1;
    }
    table
}

fn point(v: &[i128]) -> LatticePoint {
    LatticePoint::new(v.iter().map(|x| BigInt::from(*x)).collect())
}

fn opts() -> CountOptions {
    CountOptions::default()
}

fn small_curve() -> impl Strategy<Value = Curve> {
    let poly = |deg: usize| {
        proptest::collection::vec(-3i64..=3, deg + 1).prop_filter_map("degree", move |mut cs| {
            if cs[deg] == 0 {
                cs[deg] = 1;
            }
            Some(IntPoly::new(cs))
        })
    };
    prop_oneof![
        (1usize..=3).prop_flat_map(move |d| poly(d)).prop_map(|p| Curve::new(vec![p]).unwrap()),
        (poly(1), poly(2)).prop_map(|(a, b)| Curve::new(vec![a, b]).unwrap()),
        (poly(1), poly(3)).prop_map(|(a, b)| Curve::new(vec![a, b]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mitm_equals_brute(c in small_curve(), s in 1usize..=2, n in 1u64..=6) {
        let table = difference_table(&c, s, n);
        let oracle = table.get(&vec![0i128; c.dim()]).copied().unwrap_or(0);
        let mitm = count_homogeneous(&c, s, n, Method::Mitm, &opts()).unwrap().count_u128();
        let brute = count_homogeneous(&c, s, n, Method::Brute, &opts()).unwrap().count_u128();
        prop_assert_eq!(mitm, oracle);
        prop_assert_eq!(brute, oracle);
    }

    #[test]
    fn inhomogeneous_partition(c in small_curve(), k in 1usize..=2, n in 1u64..=5) {
        let table = difference_table(&c, k, n);
        let mut total = 0u128;
        for (z, &want) in &table {
            let got = count_inhomogeneous(&c, k, n, &point(z), Method::Mitm, &opts()).unwrap().count_u128();
            prop_assert_eq!(got, want);
            total += got;
        }
        prop_assert_eq!(total, (n as u128).pow(2 * k as u32));
        // a target outside the table has no solutions
        let far: Vec<i128> = table.keys().last().unwrap().iter().map(|x| x + 1000).collect();
        prop_assert_eq!(count_inhomogeneous(&c, k, n, &point(&far), Method::Brute, &opts()).unwrap().count_u128(), 0);
    }

    #[test]
    fn max_matches_table(c in small_curve(), k in 1usize..=2, n in 2u64..=5) {
        let table = difference_table(&c, k, n);
        let zero = vec![0i128; c.dim()];
        let best = table.iter().filter(|(z, _)| **z != zero).map(|(_, &v)| v).max();
        let got = max_inhomogeneous(&c, k, n, &opts()).unwrap();
        match (best, got) {
            (None, None) => {}
            (Some(v), Some((z, m))) => {
                prop_assert_eq!(m, v);
                let zv: Vec<i128> = z.coords().iter().map(|x| x.to_i128().unwrap()).collect();
                // lexicographically largest maximizer
                let want = table.iter().filter(|(t, &c)| **t != zero && c == v).map(|(t, _)| t.clone()).max().unwrap();
                prop_assert_eq!(zv, want);
            }
            (b, g) => prop_assert!(false, "oracle {:?} vs {:?}", b, g),
        }
    }

    #[test]
    fn homogeneous_monotone_in_n(c in small_curve(), s in 1usize..=2, n in 1u64..=8) {
        let a = count_homogeneous(&c, s, n, Method::Mitm, &opts()).unwrap().count_u128();
        let b = count_homogeneous(&c, s, n + 1, Method::Mitm, &opts()).unwrap().count_u128();
        prop_assert!(a <= b);
        // diagonal solutions
        prop_assert!(a >= (n as u128).pow(s as u32));
    }

    #[test]
    fn lemma1_matches_table(deg in 2usize..=3, lead in 1i64..=2, lin in -2i64..=2, n in 2u64..=9) {
        let p = IntPoly::new(match deg { 2 => vec![0, lin, lead], _ => vec![0, lin, 0, lead] });
        let c = Curve::unchecked(vec![p.clone()]).unwrap();
        let table = difference_table(&c, 1, n);
        for (z, &want) in table.iter().filter(|(z, _)| z[0] != 0) {
            let got = count_lemma1(&p, &BigInt::from(z[0]), n, &opts()).unwrap().count_u128();
            prop_assert_eq!(got, want, "z = {}", z[0]);
        }
        prop_assert_eq!(count_lemma1(&p, &BigInt::from(1_000_003), n, &opts()).unwrap().count_u128(),
            table.get(&vec![1_000_003]).copied().unwrap_or(0));
    }
}

#[test]
fn lemma2_grid_square() {
    let p = IntPoly::new([0, 0, 1]);
    let c = Curve::unchecked(vec![IntPoly::new([0, 1]), p.clone()]).unwrap();
    let n = 5;
    let table = difference_table(&c, 2, n);
    for z1 in -6i128..=6 {
        for z2 in -30i128..=30 {
            if (z1, z2) == (0, 0) {
                continue;
            }
            let want = table.get(&vec![z1, z2]).copied().unwrap_or(0);
            let got = count_lemma2(&p, &BigInt::from(z1), &BigInt::from(z2), n, &opts()).unwrap().count_u128();
            assert_eq!(got, want, "z = ({z1}, {z2})");
        }
    }
}

#[test]
fn lemma3_on_attained_targets() {
    let c = Curve::moment(3);
    let n = 4;
    let table = difference_table(&c, 3, n);
    let mut checked = 0;
    for (z, &want) in table.iter().filter(|(z, _)| z.iter().any(|x| *x != 0)) {
        let zb: Vec<BigInt> = z.iter().map(|x| BigInt::from(*x)).collect();
        let got = count_lemma3([&zb[0], &zb[1], &zb[2]], n, &opts()).unwrap().count_u128();
        assert_eq!(got, want, "z = {z:?}");
        checked += 1;
    }
    assert!(checked > 50, "{checked}");
}

#[test]
fn identities() {
    for n in 1..=30u64 {
        let j = count_homogeneous(&Curve::parse("n").unwrap(), 2, n, Method::Mitm, &opts()).unwrap().count_u128();
        assert_eq!(3 * j, 2 * (n as u128).pow(3) + n as u128);
    }
    for c in [Curve::parse("n^2").unwrap(), Curve::moment(2), Curve::moment(3), Curve::parse("n^3 - n^2").unwrap()] {
        for n in [1u64, 7, 20] {
            assert_eq!(count_homogeneous(&c, 1, n, Method::Mitm, &opts()).unwrap().count_u128(), n as u128);
        }
    }
}

#[test]
fn taxicab_excess() {
    let c = Curve::parse("n^3").unwrap();
    let table = difference_table(&c, 2, 12);
    let oracle = table[&vec![0]];
    let j = count_homogeneous(&c, 2, 12, Method::Mitm, &opts()).unwrap().count_u128();
    assert_eq!(j, oracle);
    // 1 + 12^3 = 9^3 + 10^3 in both orders on both sides
    assert_eq!(j, 2 * 144 - 12 + 8);
}

#[test]
fn budget_guard() {
    let tight = CountOptions { budget: 100, ..CountOptions::default() };
    let c = Curve::moment(2);
    assert!(matches!(count_homogeneous(&c, 2, 20, Method::Brute, &tight), Err(polyavg_core::Error::Budget(_))));
    assert!(matches!(count_homogeneous(&c, 2, 20, Method::Mitm, &tight), Err(polyavg_core::Error::Budget(_))));
}
