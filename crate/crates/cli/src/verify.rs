//! `polyavg verify`: library results against small local oracles.
//!
//! Every oracle here is written out by hand (nested loops, direct membership
//! tests) so a bug in the library cannot cancel against itself.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use polyavg_core::analysis::{family_ratio, ExtremizerKind, PowerProduct};
use polyavg_core::dio::{count_homogeneous, count_inhomogeneous, count_lemma1, count_lemma2, count_lemma3};
use polyavg_core::lattice::{
    adjoint_unnormalized, alpha_beta, average_unnormalized, lq_norm, pairing, pairing_count, pull_back,
    residue_slices, NormExponent,
};
use polyavg_core::refinement::{refine, verify_subcritical_instance, RefineOptions};
use polyavg_core::{
    apply_transform, AffineTransform, CountOptions, Curve, ExponentPair, IntPoly, LatticePoint, Method,
    SparseFunction, SparseSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CliError, CliResult, RunConfig, VerifyArgs, EXIT_OK, EXIT_USAGE};

type SuiteFn = fn(&mut Ctx) -> CliResult<()>;

const SUITES: &[(&str, SuiteFn)] = &[
    ("poly", suite_poly),
    ("mitm", suite_mitm),
    ("partition", suite_partition),
    ("lemma1", suite_lemma1),
    ("lemma2", suite_lemma2),
    ("lemma3", suite_lemma3),
    ("identities", suite_identities),
    ("operators", suite_operators),
    ("transport", suite_transport),
    ("refinement", suite_refinement),
    ("extremizers", suite_extremizers),
];

const DEFAULT_TRIALS: usize = 20;

/// One property: how often it was evaluated and the first counterexample.
struct Tally {
    suite: &'static str,
    name: String,
    instances: u64,
    failures: u64,
    first: Option<String>,
}

struct Ctx {
    suite: &'static str,
    rng: ChaCha8Rng,
    trials: usize,
    /// `-1` normally; `+1` when this suite's oracle is sabotaged.
    sign: i64,
    ns: Option<Vec<u64>>,
    opts: CountOptions,
    tallies: Vec<Tally>,
}

impl Ctx {
    fn record(&mut self, name: &str, holds: bool, detail: impl FnOnce() -> String) {
        self.record_n(name, holds, 1, detail)
    }

    /// `count` instances evaluated together, e.g. every chain of one tower.
    fn record_n(&mut self, name: &str, holds: bool, count: u64, detail: impl FnOnce() -> String) {
        let i = match self.tallies.iter().position(|t| t.suite == self.suite && t.name == name) {
            Some(i) => i,
            None => {
                self.tallies.push(Tally { suite: self.suite, name: name.to_string(), instances: 0, failures: 0, first: None });
                self.tallies.len() - 1
            }
        };
        let t = &mut self.tallies[i];
        t.instances += count;
        if !holds {
            t.failures += 1;
            if t.first.is_none() {
                t.first = Some(detail());
            }
        }
    }

    fn faulty(&self) -> bool {
        self.sign > 0
    }
}

pub fn run_suites(a: &VerifyArgs, cfg: &RunConfig, out: &mut Vec<u8>) -> CliResult<i32> {
    if a.list {
        for (name, _) in SUITES {
            writeln!(out, "{name}")?;
        }
        return Ok(EXIT_OK);
    }
    let wanted: Vec<String> = match a.suite.as_deref().or(cfg.file.get("suite")) {
        None => SUITES.iter().map(|(n, _)| n.to_string()).collect(),
        Some(s) => s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect(),
    };
    if wanted.is_empty() {
        return Err(CliError::usage("empty suite selection"));
    }
    for w in &wanted {
        if !SUITES.iter().any(|(n, _)| n == w) {
            return Err(CliError::usage(format!("unknown suite '{w}' (see --list)")));
        }
    }
    let fault = a.fault.as_deref().or(cfg.file.get("fault"));
    let trials = match a.trials {
        Some(t) => t,
        None => cfg.file.pick(None, "trials")?.unwrap_or(DEFAULT_TRIALS),
    };
    let mut tallies = Vec::new();
    for (i, (name, run)) in SUITES.iter().enumerate() {
        if !wanted.iter().any(|w| w == name) {
            continue;
        }
        let mut ctx = Ctx {
            suite: name,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(1_000_003).wrapping_add(i as u64)),
            trials,
            sign: if fault == Some(*name) { 1 } else { -1 },
            ns: cfg.ns.clone(),
            opts: cfg.count_options(),
            tallies: Vec::new(),
        };
        run(&mut ctx)?;
        tallies.extend(ctx.tallies);
    }

    let width = tallies.iter().map(|t| t.name.len()).max().unwrap_or(8).max(8);
    let mut text = String::new();
    let _ = writeln!(text, "{:<12} {:<width$} {:>9}  result", "suite", "property", "instances");
    let mut failed = 0;
    for t in &tallies {
        let verdict = if t.failures == 0 { "pass".to_string() } else { format!("FAIL ({} of {})", t.failures, t.instances) };
        let _ = writeln!(text, "{:<12} {:<width$} {:>9}  {verdict}", t.suite, t.name, t.instances);
        if let Some(d) = &t.first {
            let _ = writeln!(text, "{:<12} {:<width$}   first counterexample: {d}", "", "");
        }
        failed += usize::from(t.failures > 0);
    }
    let _ = writeln!(text, "{} properties, {} failed", tallies.len(), failed);
    out.write_all(text.as_bytes())?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_USAGE })
}

fn poly(c: &[i64]) -> IntPoly {
    IntPoly::new(c.iter().copied())
}

fn horner(p: &IntPoly, x: i64) -> i128 {
    p.coeffs().iter().rev().fold(0i128, |acc, c| acc * x as i128 + c.to_i128().expect("small coefficient"))
}

fn values(c: &Curve, n: u64) -> Vec<Vec<i128>> {
    (1..=n as i64).map(|x| c.components().iter().map(|p| horner(p, x)).collect()).collect()
}

fn random_curve(rng: &mut ChaCha8Rng, d: usize) -> Curve {
    loop {
        let comps: Vec<IntPoly> = (0..d)
            .map(|_| {
                let deg = rng.gen_range(1..=3);
                let mut cs: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-2..=2)).collect();
                cs[deg] = if rng.gen_bool(0.5) { 1 } else { rng.gen_range(1..=2) };
                poly(&cs)
            })
            .collect();
        if let Ok(c) = Curve::new(comps) {
            return c;
        }
    }
}

/// Histogram of `sum gamma(n_i) + sign * sum gamma(m_i)` over `[1,N]^{2k}`.
fn difference_histogram(vals: &[Vec<i128>], k: usize, sign: i64) -> HashMap<Vec<i128>, u128> {
    let n = vals.len();
    let d = vals[0].len();
    let mut idx = vec![0usize; 2 * k];
    let mut hist = HashMap::new();
    loop {
        let mut z = vec![0i128; d];
        for (slot, &i) in idx.iter().enumerate() {
            let s = if slot < k { 1 } else { sign as i128 };
            for (zj, v) in z.iter_mut().zip(&vals[i]) {
                *zj += s * v;
            }
        }
        *hist.entry(z).or_insert(0) += 1;
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return hist;
            }
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn point(z: &[i128]) -> LatticePoint {
    LatticePoint::new(z.iter().map(|&v| BigInt::from(v)).collect())
}

fn suite_poly(ctx: &mut Ctx) -> CliResult<()> {
    for _ in 0..ctx.trials {
        let deg = ctx.rng.gen_range(0..=5);
        let cs: Vec<i64> = (0..=deg).map(|_| ctx.rng.gen_range(-9..=9)).collect();
        let p = poly(&cs);
        let q = poly(&[ctx.rng.gen_range(-3..=3), ctx.rng.gen_range(-2..=2)]);
        let round = polyavg_core::parse_poly(&p.to_string()).map(|r| r == p).unwrap_or(false);
        ctx.record("print_parse_roundtrip", round, || format!("{p}"));
        for x in -4i64..=4 {
            let direct: i128 = cs.iter().enumerate().map(|(k, &c)| c as i128 * (x as i128).pow(k as u32)).sum();
            let lib = p.eval_i64(x);
            ctx.record("eval_matches_power_sum", lib == BigInt::from(-ctx.sign as i128 * direct), || format!("{p} at {x}"));
            let comp = p.compose(&q).eval_i64(x);
            let inner = q.eval_i64(x).to_i64().expect("small");
            ctx.record("compose_matches_nested_eval", comp == p.eval_i64(inner), || format!("{p} o {q} at {x}"));
        }
    }
    Ok(())
}

fn suite_mitm(ctx: &mut Ctx) -> CliResult<()> {
    for _ in 0..ctx.trials {
        let d = ctx.rng.gen_range(1..=2);
        let c = random_curve(&mut ctx.rng, d);
        let s = ctx.rng.gen_range(1..=2);
        let n = ctx.rng.gen_range(1..=if s == 1 { 9 } else { 5 });
        let hist = difference_histogram(&values(&c, n), s, ctx.sign);
        let want = hist.get(&vec![0i128; d]).copied().unwrap_or(0);
        let mitm = count_homogeneous(&c, s, n, Method::Mitm, &ctx.opts)?.count_u128();
        let brute = count_homogeneous(&c, s, n, Method::Brute, &ctx.opts)?.count_u128();
        ctx.record("mitm_equals_oracle", mitm == want, || format!("curve {c}, s={s}, N={n}: {mitm} vs {want}"));
        ctx.record("brute_equals_oracle", brute == want, || format!("curve {c}, s={s}, N={n}: {brute} vs {want}"));
    }
    Ok(())
}

fn suite_partition(ctx: &mut Ctx) -> CliResult<()> {
    for _ in 0..ctx.trials.div_ceil(2) {
        let d = ctx.rng.gen_range(1..=2);
        let c = random_curve(&mut ctx.rng, d);
        let k = ctx.rng.gen_range(1..=2);
        let n = ctx.rng.gen_range(1..=if k == 1 { 6 } else { 3 });
        let hist = difference_histogram(&values(&c, n), k, ctx.sign);
        let mut total = 0u128;
        let mut targets: Vec<_> = hist.iter().collect();
        targets.sort();
        for (z, &want) in targets {
            let got = count_inhomogeneous(&c, k, n, &point(z), Method::Mitm, &ctx.opts)?.count_u128();
            total += got;
            ctx.record("count_equals_oracle", got == want, || format!("curve {c}, k={k}, N={n}, z={z:?}: {got} vs {want}"));
        }
        let all = (n as u128).pow(2 * k as u32);
        ctx.record("sum_over_targets_is_n_2k", total == all, || format!("curve {c}, k={k}, N={n}: {total} vs {all}"));
    }
    Ok(())
}

fn suite_lemma1(ctx: &mut Ctx) -> CliResult<()> {
    let polys = [poly(&[0, 0, 1]), poly(&[0, 0, 0, 1]), poly(&[0, 1, 1]), poly(&[0, -1, 0, 2])];
    for _ in 0..ctx.trials {
        let p = &polys[ctx.rng.gen_range(0..polys.len())];
        let n = ctx.rng.gen_range(2..=12);
        let vals: Vec<i128> = (1..=n as i64).map(|x| horner(p, x)).collect();
        let bound = 2 * (n as i128).pow(p.deg() as u32);
        for _ in 0..8 {
            let z = loop {
                let z = if ctx.rng.gen_bool(0.5) {
                    vals[ctx.rng.gen_range(0..vals.len())] - vals[ctx.rng.gen_range(0..vals.len())]
                } else {
                    ctx.rng.gen_range(-bound..=bound)
                };
                if z != 0 {
                    break z;
                }
            };
            let sign = ctx.sign as i128;
            let want = vals.iter().flat_map(|a| vals.iter().map(move |b| a + sign * b)).filter(|&v| v == z).count() as u128;
            let got = count_lemma1(p, &BigInt::from(z), n, &ctx.opts)?.count_u128();
            ctx.record("lemma1_equals_oracle", got == want, || format!("P={p}, N={n}, z={z}: {got} vs {want}"));
        }
    }
    Ok(())
}

fn suite_lemma2(ctx: &mut Ctx) -> CliResult<()> {
    let polys = [poly(&[0, 0, 1]), poly(&[0, 0, 0, 1])];
    for _ in 0..ctx.trials.div_ceil(2) {
        let p = polys[ctx.rng.gen_range(0..2)].clone();
        let n = ctx.rng.gen_range(2..=5);
        let c = Curve::new(vec![poly(&[0, 1]), p.clone()])?;
        let hist = difference_histogram(&values(&c, n), 2, ctx.sign);
        let b1 = 2 * n as i128;
        let b2 = 2 * (n as i128).pow(p.deg() as u32);
        let mut attained: Vec<_> = hist.keys().filter(|z| z.iter().any(|v| *v != 0)).cloned().collect();
        attained.sort();
        for _ in 0..10 {
            let z = if ctx.rng.gen_bool(0.6) && !attained.is_empty() {
                attained[ctx.rng.gen_range(0..attained.len())].clone()
            } else {
                loop {
                    let z = vec![ctx.rng.gen_range(-b1..=b1), ctx.rng.gen_range(-b2..=b2)];
                    if z != [0, 0] {
                        break z;
                    }
                }
            };
            let want = hist.get(&z).copied().unwrap_or(0);
            let got = count_lemma2(&p, &BigInt::from(z[0]), &BigInt::from(z[1]), n, &ctx.opts)?.count_u128();
            ctx.record("lemma2_equals_oracle", got == want, || format!("P={p}, N={n}, z={z:?}: {got} vs {want}"));
        }
    }
    Ok(())
}

fn suite_lemma3(ctx: &mut Ctx) -> CliResult<()> {
    let c = Curve::moment(3);
    for &n in &[3u64, 4] {
        let hist = difference_histogram(&values(&c, n), 3, ctx.sign);
        let mut attained: Vec<_> = hist.keys().filter(|z| z.iter().any(|v| *v != 0)).cloned().collect();
        attained.sort();
        for _ in 0..ctx.trials {
            let z = if ctx.rng.gen_bool(0.7) {
                attained[ctx.rng.gen_range(0..attained.len())].clone()
            } else {
                let b: Vec<i128> = (1..=3).map(|j| 2 * (n as i128).pow(j)).collect();
                loop {
                    let z: Vec<i128> = b.iter().map(|&bj| ctx.rng.gen_range(-bj..=bj)).collect();
                    if z.iter().any(|v| *v != 0) {
                        break z;
                    }
                }
            };
            let want = hist.get(&z).copied().unwrap_or(0);
            let zb: Vec<BigInt> = z.iter().map(|&v| BigInt::from(v)).collect();
            let got = count_lemma3([&zb[0], &zb[1], &zb[2]], n, &ctx.opts)?.count_u128();
            ctx.record("lemma3_equals_oracle", got == want, || format!("N={n}, z={z:?}: {got} vs {want}"));
        }
    }
    Ok(())
}

fn suite_identities(ctx: &mut Ctx) -> CliResult<()> {
    for _ in 0..ctx.trials {
        let d = ctx.rng.gen_range(1..=3);
        let c = random_curve(&mut ctx.rng, d);
        let n = ctx.rng.gen_range(1..=30);
        if !c.is_injective_on(n as i64) {
            continue;
        }
        let j1 = count_homogeneous(&c, 1, n, Method::Mitm, &ctx.opts)?.count_u128();
        let want = if ctx.faulty() { n as u128 + 1 } else { n as u128 };
        ctx.record("j1_equals_n_for_injective", j1 == want, || format!("curve {c}, N={n}: {j1}"));
    }
    let line = Curve::parse("n")?;
    for n in 1..=30u64 {
        let nn = n as i128;
        let formula = (2 * nn.pow(3) - ctx.sign as i128 * nn) / 3;
        let hist = if n <= 8 { Some(difference_histogram(&values(&line, n), 2, -1)) } else { None };
        let j2 = count_homogeneous(&line, 2, n, Method::Mitm, &ctx.opts)?.count_u128() as i128;
        ctx.record("linear_j2_closed_form", j2 == formula, || format!("N={n}: {j2} vs {formula}"));
        if let Some(h) = hist {
            let brute = h.get(&vec![0]).copied().unwrap_or(0) as i128;
            ctx.record("closed_form_equals_brute", brute == formula, || format!("N={n}: {brute} vs {formula}"));
        }
    }
    Ok(())
}

fn random_function(rng: &mut ChaCha8Rng, d: usize) -> SparseFunction {
    let mut f = SparseFunction::new(d);
    for _ in 0..rng.gen_range(1..10) {
        let p: Vec<i64> = (0..d).map(|_| rng.gen_range(-8..=8)).collect();
        let v = BigRational::new(rng.gen_range(-5..=5).into(), rng.gen_range(1..=4).into());
        f.add_at(LatticePoint::from_i64(&p), &v);
    }
    f
}

fn random_set(rng: &mut ChaCha8Rng, d: usize, size: usize, radius: i64) -> SparseSet {
    let pts: Vec<LatticePoint> =
        (0..size).map(|_| LatticePoint::from_i64(&(0..d).map(|_| rng.gen_range(-radius..=radius)).collect::<Vec<_>>())).collect();
    SparseSet::from_points(d, pts).expect("dimension matches")
}

fn shifted(x: &LatticePoint, g: &[i128], sign: i64) -> LatticePoint {
    LatticePoint::new(x.coords().iter().zip(g).map(|(a, &b)| a + BigInt::from(sign as i128 * b)).collect())
}

fn suite_operators(ctx: &mut Ctx) -> CliResult<()> {
    for _ in 0..ctx.trials {
        let d = ctx.rng.gen_range(1..=2);
        let c = random_curve(&mut ctx.rng, d);
        let n = ctx.rng.gen_range(1..=8);
        let f = random_function(&mut ctx.rng, d);
        let g = random_function(&mut ctx.rng, d);
        let lhs = pairing(&average_unnormalized(&c, n, &f)?, &g)?;
        let rhs = pairing(&f, &adjoint_unnormalized(&c, n, &g)?)?;
        ctx.record("adjointness", lhs == rhs, || format!("curve {c}, N={n}"));

        let radius = 6 + 4 * n as i64;
        let e = random_set(&mut ctx.rng, d, 30, radius);
        let mut fs = random_set(&mut ctx.rng, d, 20, radius);
        let vals = values(&c, n);
        for x in e.iter().take(10) {
            let _ = fs.insert(shifted(x, &vals[ctx.rng.gen_range(0..vals.len())], 1));
        }
        // <A 1_E, 1_F> = #{(x, n) : x in F, x - gamma(n) in E}
        let want: u64 = fs.iter().map(|x| vals.iter().filter(|v| e.contains(&shifted(x, v, ctx.sign))).count() as u64).sum();
        let got = pairing_count(&e, &fs, &c, n)?;
        ctx.record("pairing_count_equals_oracle", got == want, || format!("curve {c}, N={n}: {got} vs {want}"));
        let ab = alpha_beta(&e, &fs, &c, n)?;
        let balanced = &ab.alpha * BigInt::from(fs.len()) == &ab.beta * BigInt::from(e.len());
        ctx.record("alpha_f_equals_beta_e", balanced, || format!("curve {c}, N={n}"));
        let nn = BigRational::from_integer(BigInt::from(n));
        ctx.record("alpha_beta_at_most_n", ab.alpha <= nn && ab.beta <= nn, || format!("curve {c}, N={n}"));
    }
    Ok(())
}

fn power_sum(f: &SparseFunction, q: u32) -> CliResult<BigRational> {
    let norm = lq_norm(f, &NormExponent::Finite(BigRational::from_integer(q.into())))?;
    norm.power_sum.ok_or_else(|| CliError::usage("integer q has an exact power sum"))
}

fn suite_transport(ctx: &mut Ctx) -> CliResult<()> {
    let n = 6;
    let flip = BigRational::from_integer(BigInt::from(-ctx.sign));
    for i in 0..ctx.trials.max(1) {
        let d = 1 + i % 2;
        let c = random_curve(&mut ctx.rng, d);
        let f = random_function(&mut ctx.rng, d);
        let shift: Vec<BigInt> = (0..d).map(|_| BigInt::from(ctx.rng.gen_range(-4..=4))).collect();
        let lin = if d == 1 {
            AffineTransform::dilation(vec![BigInt::from(-1)])?
        } else {
            AffineTransform::shear(1, 0, ctx.rng.gen_range(-3..=3))?
        };
        let t = lin.then(AffineTransform::translation(shift)?);
        let a: u32 = ctx.rng.gen_range(2..=4);
        let mut factors = vec![BigInt::one(); d];
        factors[0] = BigInt::from(a);
        let dil = AffineTransform::dilation(factors)?;
        for q in [2u32, 3] {
            let lhs = power_sum(&average_unnormalized(&apply_transform(&c, &t)?, n, &f)?, q)?;
            let rhs = power_sum(&average_unnormalized(&c, n, &pull_back(&f, &t)?)?, q)? * &flip;
            ctx.record("shear_transport", lhs == rhs, || format!("curve {c}, q={q}"));

            let lhs = power_sum(&average_unnormalized(&apply_transform(&c, &dil)?, n, &f)?, q)?;
            let mut rhs = BigRational::zero();
            for g in residue_slices(&f, a)? {
                rhs += power_sum(&average_unnormalized(&c, n, &g)?, q)?;
            }
            ctx.record("dilation_decomposition", lhs == rhs * &flip, || format!("curve {c}, q={q}, a={a}"));
        }
    }
    Ok(())
}

/// `(E_1, F_1)` straight from the thresholds.
fn first_level(e: &SparseSet, f: &SparseSet, vals: &[Vec<i128>], sign: i64) -> (Vec<LatticePoint>, Vec<LatticePoint>) {
    let forward = |x: &LatticePoint| vals.iter().filter(|v| e.contains(&shifted(x, v, sign))).count() as u64;
    let mass: u64 = f.iter().map(forward).sum();
    let f1: Vec<LatticePoint> = f.iter().filter(|x| 2 * f.len() as u64 * forward(x) > mass).cloned().collect();
    let f1set = SparseSet::from_points(f.dim(), f1.clone()).expect("dimension matches");
    let mass_f: u64 = f1.iter().map(forward).sum();
    let backward = |y: &LatticePoint| vals.iter().filter(|v| f1set.contains(&shifted(y, v, 1))).count() as u64;
    let e1 = e.iter().filter(|y| 2 * e.len() as u64 * backward(y) > mass_f).cloned().collect();
    (e1, f1)
}

/// A random `E` in `[0,N] x [0,N^2]` and the part of `E + gamma` hit at least three times,
/// so that `alpha > 2` and the tower is actually built.
fn dense_instance(rng: &mut ChaCha8Rng, vals: &[Vec<i128>], n: u64) -> (SparseSet, SparseSet) {
    let (w, h) = (n as i64, (n * n) as i64);
    let density = rng.gen_range(0.15..0.4);
    let pts: Vec<LatticePoint> =
        (0..=w).flat_map(|a| (0..=h).map(move |b| [a, b])).filter(|_| rng.gen_bool(density)).map(|p| LatticePoint::from_i64(&p)).collect();
    let e = SparseSet::from_points(2, pts).expect("planar");
    let mut hits: HashMap<LatticePoint, u32> = HashMap::new();
    for y in e.iter() {
        for v in vals {
            *hits.entry(shifted(y, v, 1)).or_insert(0) += 1;
        }
    }
    let mut dense: Vec<LatticePoint> = hits.into_iter().filter(|(_, c)| *c >= 3).map(|(x, _)| x).collect();
    dense.sort();
    let keep = rng.gen_range(0.3..1.0);
    let f: Vec<LatticePoint> = dense.into_iter().filter(|_| rng.gen_bool(keep)).collect();
    (e, SparseSet::from_points(2, f).expect("planar"))
}

/// Trace check names carry level indices; fold them into one property each.
fn property_name(check: &str) -> String {
    if let Some(rest) = check.strip_prefix('(') {
        return format!("level_property_{}", rest.split(')').next().unwrap_or(""));
    }
    let head = check.split(':').next().unwrap_or(check);
    let head = if head.starts_with("trivial bound") { "trivial bound" } else { head };
    let mut slug = String::new();
    for ch in head.chars() {
        if ch.is_ascii_alphanumeric() {
            slug.push(ch.to_ascii_lowercase());
        } else if !slug.is_empty() && !slug.ends_with('_') {
            slug.push('_');
        }
    }
    slug.trim_end_matches('_').to_string()
}

fn suite_refinement(ctx: &mut Ctx) -> CliResult<()> {
    let c = Curve::parse("n, n^2")?;
    let n = ctx.ns.as_ref().and_then(|v| v.first().copied()).unwrap_or(10);
    let vals = values(&c, n);
    let opts = RefineOptions { y_cap: Some(12), ..RefineOptions::default() };
    let mut instances: Vec<(String, SparseSet, SparseSet)> = Vec::new();
    for kind in [ExtremizerKind::CurveImageDual, ExtremizerKind::ParabolicBox(BigRational::new(1.into(), 2.into()))] {
        if let Ok((e, f)) = polyavg_core::analysis::make_extremizer(&kind, &c, n) {
            instances.push((kind.name().to_string(), e, f));
        }
    }
    for t in 0..ctx.trials {
        let (e, f) = dense_instance(&mut ctx.rng, &vals, n);
        instances.push((format!("random #{t}"), e, f));
    }
    for (i, (label, e, f)) in instances.iter().enumerate() {
        let k = 1 + i % 2;
        let r = refine(e, f, &c, n, k)?;
        let (e1, f1) = first_level(e, f, &vals, ctx.sign);
        let same = r.e[1].iter().eq(e1.iter()) && r.f[1].iter().eq(f1.iter());
        ctx.record("first_level_equals_oracle", same, || format!("{label}, N={n}"));
        let trace = verify_subcritical_instance(e, f, &c, n, k, &opts)?;
        for check in &trace.checks {
            ctx.record_n(&property_name(&check.name), check.holds, check.instances, || format!("{label}, k={k}: {}", check.detail));
        }
    }
    Ok(())
}

fn suite_extremizers(ctx: &mut Ctx) -> CliResult<()> {
    let curves = ["n^2", "n, n^2", "n, n^2, n^3"];
    for _ in 0..ctx.trials {
        let c = Curve::parse(curves[ctx.rng.gen_range(0..curves.len())])?;
        let n = ctx.rng.gen_range(4..=64);
        let (a, b) = (ctx.rng.gen_range(0..=6), ctx.rng.gen_range(1..=6));
        let ex = ExponentPair::from_ratios((a.min(b), b), (ctx.rng.gen_range(0..=b), b))?;
        let dirac = family_ratio(&ExtremizerKind::Dirac, &ex, &c, n)?;
        let want = PowerProduct::power(n, ex.inv_q_dual() * BigInt::from(ctx.sign));
        ctx.record("dirac_ratio_exact", dirac.exact_eq(&want), || format!("curve {c}, N={n}"));
        let dual = family_ratio(&ExtremizerKind::CurveImageDual, &ex, &c, n)?;
        let want = PowerProduct::power(n, ex.inv_p() * BigInt::from(ctx.sign));
        ctx.record("dual_ratio_exact", dual.exact_eq(&want), || format!("curve {c}, N={n}"));
    }
    Ok(())
}
