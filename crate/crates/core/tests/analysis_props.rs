use num_bigint::BigInt;
use num_rational::BigRational;
use polyavg_core::analysis::{
    diagram_csv, family_ratio, fit_exponent, make_extremizer, moment_norm, riesz_diagram_data, rwt_ratio,
    theorem_consistency_scan, ExtremizerKind, PowerProduct, TheoremCase,
};
use polyavg_core::dio::count_homogeneous;
use polyavg_core::exponent::classify_exponents;
use polyavg_core::{CountOptions, Curve, ExponentPair, LatticePoint, Method, SparseSet};
use proptest::prelude::*;

fn r(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn curves() -> Vec<Curve> {
    vec![Curve::parse("n^2").unwrap(), Curve::moment(2), Curve::moment(3), Curve::parse("n, n^3 + n").unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn witness_ratios_are_exact(n in 1u64..=40, a in 1i64..=6, b in 0i64..=6, ci in 0usize..4) {
        let (inv_p, inv_q) = (r(a.max(b), 6), r(a.min(b), 6));
        let e = ExponentPair::new(inv_p.clone(), inv_q).unwrap();
        let c = &curves()[ci];
        let dirac = family_ratio(&ExtremizerKind::Dirac, &e, c, n).unwrap();
        prop_assert!(dirac.exact_eq(&PowerProduct::power(n, -e.inv_q_dual())), "{}", dirac);
        let dual = family_ratio(&ExtremizerKind::CurveImageDual, &e, c, n).unwrap();
        prop_assert!(dual.exact_eq(&PowerProduct::power(n, -inv_p)), "{}", dual);
    }
}

#[test]
fn origin_pair_has_zero_ratio() {
    for c in curves() {
        let o = SparseSet::from_points(c.dim(), [LatticePoint::origin(c.dim())]).unwrap();
        let e = ExponentPair::from_ratios((2, 3), (1, 3)).unwrap();
        assert_eq!(rwt_ratio(&o, &o, &e, &c, 9).unwrap().to_f64(), 0.0);
    }
    let empty = SparseSet::new(2);
    let one = SparseSet::from_points(2, [LatticePoint::origin(2)]).unwrap();
    let e = ExponentPair::from_ratios((2, 3), (1, 3)).unwrap();
    assert!(rwt_ratio(&empty, &one, &e, &Curve::moment(2), 3).is_err());
}

#[test]
fn dirac_slope() {
    let c = Curve::parse("n^2").unwrap();
    let e = ExponentPair::from_ratios((2, 3), (1, 3)).unwrap();
    let vals: Vec<(u64, f64)> =
        [8u64, 16, 32, 64].iter().map(|&n| (n, family_ratio(&ExtremizerKind::Dirac, &e, &c, n).unwrap().to_f64())).collect();
    let fit = fit_exponent(&vals).unwrap();
    assert!((fit.slope + 2.0 / 3.0).abs() < 1e-9, "{}", fit.slope);
    assert!(fit.max_residual < 1e-9);
}

#[test]
fn box_slope_parabola() {
    let c = Curve::moment(2);
    let e = ExponentPair::from_ratios((2, 3), (1, 3)).unwrap();
    let target = -3.0 / 3.0;
    for cb in [r(1, 1), r(1, 2), r(3, 1)] {
        let vals: Vec<(u64, f64)> = [8u64, 16, 32, 64, 128]
            .iter()
            .map(|&n| (n, family_ratio(&ExtremizerKind::ParabolicBox(cb.clone()), &e, &c, n).unwrap().to_f64()))
            .collect();
        let fit = fit_exponent(&vals).unwrap();
        assert!((fit.slope - target).abs() < 0.15, "c_box {cb}: {}", fit.slope);
    }
}

#[test]
fn box_ratio_matches_sets() {
    let c = Curve::moment(2);
    let e = ExponentPair::from_ratios((3, 5), (2, 5)).unwrap();
    for n in [2u64, 4, 6] {
        let kind = ExtremizerKind::ParabolicBox(r(1, 1));
        let (b, f) = make_extremizer(&kind, &c, n).unwrap();
        let direct = rwt_ratio(&b, &f, &e, &c, n).unwrap();
        assert!(direct.exact_eq(&family_ratio(&kind, &e, &c, n).unwrap()));
    }
}

#[test]
fn moment_norms() {
    let o = CountOptions::default();
    for c in curves() {
        for n in [1u64, 5, 33] {
            let m = moment_norm(&c, 1, n, &o).unwrap();
            assert!(m.exact_eq(&PowerProduct::power(n, r(-1, 2))), "{m}");
        }
    }
    let c = Curve::parse("n^3").unwrap();
    let m = moment_norm(&c, 2, 12, &o).unwrap();
    assert!(m.exact_eq(&PowerProduct::rational(r(1, 12)).times_power(284, r(1, 4))));
    let js: Vec<(u64, f64)> = [16u64, 32, 64, 128, 256]
        .iter()
        .map(|&n| (n, count_homogeneous(&c, 2, n, Method::Mitm, &o).unwrap().count_u128() as f64))
        .collect();
    let fit = fit_exponent(&js).unwrap();
    assert!((fit.slope - 2.0).abs() < 0.2, "{}", fit.slope);
    assert!(moment_norm(&c, 0, 4, &o).is_err());
}

#[test]
fn diagram_is_consistent_with_classifier() {
    for c in curves() {
        for res in [2u32, 5, 12] {
            let rows = riesz_diagram_data(&c, res).unwrap();
            assert_eq!(rows.iter().filter(|r| r.vertex).count(), 1);
            for row in &rows {
                let e = ExponentPair::new(row.inv_p.clone(), row.inv_q.clone()).unwrap();
                assert_eq!(row.region, classify_exponents(&c, &e));
                if row.vertex {
                    assert_eq!(row.region, polyavg_core::Region::CriticalBoundary);
                }
                if row.inv_p == row.inv_q && row.inv_p > r(0, 1) && row.inv_p < r(1, 1) {
                    assert_eq!(row.region, polyavg_core::Region::Supercritical);
                }
                if row.inv_q > row.inv_p {
                    assert_eq!(row.region, polyavg_core::Region::Outside);
                }
            }
            assert_eq!(diagram_csv(&rows).lines().count(), rows.len() + 1);
        }
    }
}

#[test]
fn scan_case_i() {
    let rep = theorem_consistency_scan(TheoremCase::I, &Curve::parse("n^2").unwrap(), &[8, 16, 32, 64], 6, 7).unwrap();
    assert!(rep.fit.slope >= -2.0 / 3.0 - 0.05, "{}", rep.fit.slope);
    assert_eq!(rep.seed, 7);
}

#[test]
fn scan_case_ii() {
    let rep = theorem_consistency_scan(TheoremCase::Ii, &Curve::moment(2), &[8, 16, 32, 64], 6, 3).unwrap();
    assert!(rep.fit.slope >= -0.6 - 0.05 && rep.fit.slope <= -0.6 + 0.15, "{}", rep.fit.slope);
}

#[test]
fn scan_case_iii() {
    let rep = theorem_consistency_scan(TheoremCase::Iii, &Curve::moment(3), &[8, 16, 32], 4, 5).unwrap();
    assert!(rep.fit.slope >= -4.0 / 7.0 - 0.05 && rep.fit.slope <= -4.0 / 7.0 + 0.2, "{}", rep.fit.slope);
    assert!(theorem_consistency_scan(TheoremCase::Iii, &Curve::moment(2), &[8, 16, 32], 1, 5).is_err());
}

#[test]
fn scan_is_deterministic() {
    let a = theorem_consistency_scan(TheoremCase::Ii, &Curve::moment(2), &[8, 16, 24], 5, 99).unwrap();
    let b = polyavg_core::with_threads(3, || theorem_consistency_scan(TheoremCase::Ii, &Curve::moment(2), &[8, 16, 24], 5, 99).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
