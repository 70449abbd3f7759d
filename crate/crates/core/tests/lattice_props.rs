use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use polyavg_core::lattice::{
    adjoint_unnormalized, alpha_beta, average_unnormalized, lq_norm, pairing, pull_back, residue_slices, NormExponent,
};
use polyavg_core::{apply_transform, AffineTransform, Curve, LatticePoint, SparseFunction, SparseSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn random_function(rng: &mut ChaCha8Rng, d: usize) -> SparseFunction {
    let mut f = SparseFunction::new(d);
    for _ in 0..rng.gen_range(1..12) {
        let p: Vec<i64> = (0..d).map(|_| rng.gen_range(-9..=9)).collect();
        f.add_at(LatticePoint::from_i64(&p), &rat(rng.gen_range(-6..=6), rng.gen_range(1..=5)));
    }
    f
}

fn power_sum(f: &SparseFunction, q: i64) -> BigRational {
    lq_norm(f, &NormExponent::Finite(rat(q, 1))).unwrap().power_sum.unwrap()
}

fn curve_for(d: usize, rng: &mut ChaCha8Rng) -> Curve {
    let texts: &[&str] = if d == 1 { &["n^2", "n^3 - 2n", "2n^2 + n"] } else { &["n, n^2", "n - 1, n^3 + n", "2n, n^2 - n"] };
    Curve::parse(texts[rng.gen_range(0..texts.len())]).unwrap()
}

fn unimodular(d: usize, rng: &mut ChaCha8Rng) -> AffineTransform {
    let shift: Vec<BigInt> = (0..d).map(|_| BigInt::from(rng.gen_range(-4..=4))).collect();
    let lin = if d == 1 {
        AffineTransform::dilation(vec![BigInt::from(-1)]).unwrap()
    } else {
        AffineTransform::shear(1, 0, rng.gen_range(-3..=3)).unwrap()
    };
    lin.then(AffineTransform::translation(shift).unwrap())
}

#[test]
fn shear_transport_and_dilation_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 6;
    for i in 0..50 {
        let d = 1 + i % 2;
        let c = curve_for(d, &mut rng);
        let f = random_function(&mut rng, d);
        for q in [2, 3] {
            let t = unimodular(d, &mut rng);
            let tc = apply_transform(&c, &t).unwrap();
            let lhs = power_sum(&average_unnormalized(&tc, n, &f).unwrap(), q);
            let rhs = power_sum(&average_unnormalized(&c, n, &pull_back(&f, &t).unwrap()).unwrap(), q);
            assert_eq!(lhs, rhs, "transport, instance {i}, q = {q}");

            let a: u32 = rng.gen_range(2..=4);
            let mut factors = vec![BigInt::from(1); d];
            factors[0] = BigInt::from(a);
            let dc = apply_transform(&c, &AffineTransform::dilation(factors).unwrap()).unwrap();
            let lhs = power_sum(&average_unnormalized(&dc, n, &f).unwrap(), q);
            let rhs = residue_slices(&f, a)
                .unwrap()
                .iter()
                .map(|g| power_sum(&average_unnormalized(&c, n, g).unwrap(), q))
                .fold(BigRational::zero(), |s, x| s + x);
            assert_eq!(lhs, rhs, "dilation, instance {i}, q = {q}, a = {a}");
        }
    }
}

#[test]
fn adjointness_and_flow_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..40 {
        let d = 1 + i % 2;
        let c = curve_for(d, &mut rng);
        let n = rng.gen_range(1..9);
        let f = random_function(&mut rng, d);
        let g = random_function(&mut rng, d);
        let lhs = pairing(&average_unnormalized(&c, n, &f).unwrap(), &g).unwrap();
        let rhs = pairing(&f, &adjoint_unnormalized(&c, n, &g).unwrap()).unwrap();
        assert_eq!(lhs, rhs);

        let e = SparseSet::from_points(d, f.iter().map(|(p, _)| p.clone())).unwrap();
        let fs = SparseSet::from_points(d, g.iter().map(|(p, _)| p.clone())).unwrap();
        if e.is_empty() || fs.is_empty() {
            continue;
        }
        let ab = alpha_beta(&e, &fs, &c, n).unwrap();
        let nn = BigRational::from_integer(BigInt::from(n));
        assert!(ab.alpha <= nn && ab.beta <= nn);
        assert_eq!(&ab.alpha * BigInt::from(fs.len()), &ab.beta * BigInt::from(e.len()));
    }
}
