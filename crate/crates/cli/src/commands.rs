use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use polyavg_core::analysis::{
    diagram_csv, family_ratio, fit_exponent, moment_norm, riesz_diagram_data, theorem_consistency_scan, values_csv,
    ExtremizerKind, TheoremCase,
};
use polyavg_core::dio::CountCache;
use polyavg_core::dio::{
    count_homogeneous, count_inhomogeneous, count_lemma1, count_lemma2, count_lemma3, max_inhomogeneous_record,
};
use polyavg_core::lattice::parse_rational;
use polyavg_core::refinement::{verify_subcritical_instance, RefineOptions};
use polyavg_core::{CountRecord, Curve, ExponentPair, IntPoly, LatticePoint, Method, SparseSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::{demo, verify, CliError, CliResult, Command, CountArgs, ExponentArgs, RefineArgs, RieszArgs, EXIT_OK, EXIT_USAGE};

pub fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut Vec<u8>) -> CliResult<i32> {
    match cmd {
        Command::Count(a) => count(a, cfg, out),
        Command::Verify(a) => verify::run_suites(a, cfg, out),
        Command::Exponent(a) => exponent(a, cfg, out),
        Command::Refine(a) => refine(a, cfg, out),
        Command::Riesz(a) => riesz(a, cfg, out),
    }
}

/// Machine output goes to `--out` when given, otherwise to stdout.
fn emit(cfg: &RunConfig, text: &str, out: &mut Vec<u8>) -> CliResult<()> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::usage(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn parse_target(text: &str) -> CliResult<LatticePoint> {
    let coords = text
        .split([',', ' '])
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<BigInt>().map_err(|_| CliError::usage(format!("bad target component '{t}'"))))
        .collect::<CliResult<Vec<_>>>()?;
    if coords.is_empty() {
        return Err(CliError::usage("empty target"));
    }
    Ok(LatticePoint::new(coords))
}

fn require_dim(z: &LatticePoint, d: usize) -> CliResult<()> {
    if z.dim() != d {
        return Err(CliError::usage(format!("target has {} components, expected {d}", z.dim())));
    }
    Ok(())
}

type Job<'a> = Box<dyn Fn(u64) -> polyavg_core::Result<CountRecord> + 'a>;

fn count(a: &CountArgs, cfg: &RunConfig, out: &mut Vec<u8>) -> CliResult<i32> {
    let file = &cfg.file;
    let method = match file.pick(a.method.clone(), "method")? {
        Some(m) => Some(m.parse::<Method>()?),
        None => None,
    };
    let lemma = matches!(method, Some(Method::Lemma1 | Method::Lemma2 | Method::Lemma3));
    let mode = file
        .pick(a.mode.clone(), "mode")?
        .unwrap_or_else(|| if lemma { "inhomogeneous".into() } else { "homogeneous".into() });
    let s = match file.pick(a.s, "s")? {
        Some(s) => Some(s),
        None => file.pick(None, "k")?,
    };
    let ns = cfg.ns.clone().ok_or_else(|| CliError::usage("count needs --N"))?;
    let opts = cfg.count_options();
    let z = file.pick(a.z.clone(), "z")?.map(|t| parse_target(&t)).transpose()?;
    let z_text = z.as_ref().map(LatticePoint::to_plain);
    let c = Curve::parse(&cfg.curve_text)?;
    let curve_text = c.to_string();

    let (key_mode, k, job): (&str, usize, Job) = match (mode.as_str(), method) {
        ("homogeneous", m) => {
            let m = m.unwrap_or(Method::Mitm);
            let s = s.unwrap_or(2);
            let c = Curve::parse(&cfg.curve_text)?;
            ("homogeneous", s, Box::new(move |n| count_homogeneous(&c, s, n, m, &opts)))
        }
        ("inhomogeneous", Some(Method::Lemma1)) => {
            let z = z.ok_or_else(|| CliError::usage("lemma1 needs --z"))?;
            require_dim(&z, 1)?;
            let p = single_component(&c)?;
            ("inhomogeneous", 1, Box::new(move |n| count_lemma1(&p, &z.coords()[0], n, &opts)))
        }
        ("inhomogeneous", Some(Method::Lemma2)) => {
            let z = z.ok_or_else(|| CliError::usage("lemma2 needs --z"))?;
            require_dim(&z, 2)?;
            let comps = c.components();
            if comps.len() != 2 || comps[0] != IntPoly::new([0, 1]) {
                return Err(CliError::usage("lemma2 needs a curve of the form \"n, P\""));
            }
            let p = comps[1].clone();
            ("inhomogeneous", 2, Box::new(move |n| count_lemma2(&p, &z.coords()[0], &z.coords()[1], n, &opts)))
        }
        ("inhomogeneous", Some(Method::Lemma3)) => {
            let z = z.ok_or_else(|| CliError::usage("lemma3 needs --z"))?;
            require_dim(&z, 3)?;
            if c != Curve::moment(3) {
                return Err(CliError::usage("lemma3 needs the curve \"n, n^2, n^3\""));
            }
            let zc = z.coords().to_vec();
            ("inhomogeneous", 3, Box::new(move |n| count_lemma3([&zc[0], &zc[1], &zc[2]], n, &opts)))
        }
        ("inhomogeneous", m) => {
            let z = z.ok_or_else(|| CliError::usage("inhomogeneous counts need --z"))?;
            let c = Curve::parse(&cfg.curve_text)?;
            require_dim(&z, c.dim())?;
            let m = m.unwrap_or(Method::Mitm);
            let k = s.unwrap_or(2);
            ("inhomogeneous", k, Box::new(move |n| count_inhomogeneous(&c, k, n, &z, m, &opts)))
        }
        ("max" | "max_inhomogeneous", None | Some(Method::Mitm)) => {
            let c = Curve::parse(&cfg.curve_text)?;
            let k = s.unwrap_or(2);
            ("max_inhomogeneous", k, Box::new(move |n| max_inhomogeneous_record(&c, k, n, &opts)))
        }
        (other, m) => {
            return Err(CliError::usage(format!(
                "mode '{other}' with method '{}' is not supported",
                m.map_or("default", Method::as_str)
            )))
        }
    };
    let z_key = if key_mode == "inhomogeneous" { z_text } else { None };

    let mut cache = cfg.cache.as_ref().map(CountCache::open).transpose()?;
    let audit_rate = file.pick(a.audit_rate, "audit-rate")?.unwrap_or(0.01);
    if !(0.0..=1.0).contains(&audit_rate) {
        return Err(CliError::usage("audit rate must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut lines = String::new();
    for n in ns {
        let key = CountCache::key_parts(&curve_text, key_mode, k as u32, n, z_key.as_deref());
        let hit = cache.as_ref().and_then(|c| c.get(&key));
        let mut rec = match hit {
            Some(hit) => {
                if rng.gen_bool(audit_rate) {
                    let fresh = job(n)?;
                    if fresh.count != hit.count {
                        return Err(CliError::usage(format!(
                            "cache audit failed for {key}: cached {} but computed {}",
                            hit.count, fresh.count
                        )));
                    }
                }
                hit
            }
            None => {
                let rec = job(n)?;
                if let Some(c) = cache.as_mut() {
                    c.insert(&rec)?;
                }
                rec
            }
        };
        if cfg.no_timing {
            rec.elapsed = 0.0;
        }
        lines.push_str(&rec.to_json_line());
        lines.push('\n');
    }
    emit(cfg, &lines, out)?;
    Ok(EXIT_OK)
}

fn single_component(c: &Curve) -> CliResult<IntPoly> {
    match c.components() {
        [p] => Ok(p.clone()),
        _ => Err(CliError::usage("lemma1 needs a single polynomial curve")),
    }
}

fn rational_arg(flag: Option<String>, cfg: &RunConfig, key: &str, default: (i64, i64)) -> CliResult<BigRational> {
    match cfg.file.pick(flag, key)? {
        Some(t) => Ok(parse_rational(&t)?),
        None => Ok(BigRational::new(default.0.into(), default.1.into())),
    }
}

fn exponent(a: &ExponentArgs, cfg: &RunConfig, out: &mut Vec<u8>) -> CliResult<i32> {
    let file = &cfg.file;
    let family = file.pick(a.family.clone(), "family")?.unwrap_or_else(|| "dirac".into());
    let ns = cfg.ns.clone().ok_or_else(|| CliError::usage("exponent needs --N with at least 3 values"))?;
    if ns.len() < 3 {
        return Err(CliError::usage(format!("exponent needs at least 3 distinct N, got {}", ns.len())));
    }
    let c = cfg.curve()?;
    let d = c.total_degree() as f64;
    let s = match file.pick(a.s, "s")? {
        Some(s) => s,
        None => file.pick(None, "k")?.unwrap_or(2),
    };
    let opts = cfg.count_options();
    let pair = || -> CliResult<ExponentPair> {
        Ok(ExponentPair::new(
            rational_arg(a.inv_p.clone(), cfg, "inv-p", (2, 3))?,
            rational_arg(a.inv_q.clone(), cfg, "inv-q", (1, 3))?,
        )?)
    };
    let f64_of = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
    let vinogradov = |s: f64| s.max(2.0 * s - d);
    let (values, reference): (Vec<(u64, f64)>, f64) = match family.as_str() {
        "dirac" | "dual" | "box" => {
            let e = pair()?;
            let kind = match family.as_str() {
                "dirac" => ExtremizerKind::Dirac,
                "dual" => ExtremizerKind::CurveImageDual,
                _ => ExtremizerKind::ParabolicBox(cfg.c_box.clone()),
            };
            let reference = match kind {
                ExtremizerKind::Dirac => -f64_of(&e.inv_q_dual()),
                ExtremizerKind::CurveImageDual => -f64_of(e.inv_p()),
                ExtremizerKind::ParabolicBox(_) => -d * f64_of(&e.inv_r()),
            };
            let vals = ns
                .iter()
                .map(|&n| Ok((n, family_ratio(&kind, &e, &c, n)?.to_f64())))
                .collect::<CliResult<Vec<_>>>()?;
            (vals, reference)
        }
        "count" => {
            let vals = ns
                .iter()
                .map(|&n| Ok((n, count_homogeneous(&c, s, n, Method::Mitm, &opts)?.count_u128() as f64)))
                .collect::<CliResult<Vec<_>>>()?;
            (vals, vinogradov(s as f64))
        }
        "moment" => {
            let vals =
                ns.iter().map(|&n| Ok((n, moment_norm(&c, s, n, &opts)?.to_f64()))).collect::<CliResult<Vec<_>>>()?;
            (vals, vinogradov(s as f64) / (2.0 * s as f64) - 1.0)
        }
        "max" => {
            let vals = ns
                .iter()
                .map(|&n| Ok((n, max_inhomogeneous_record(&c, s, n, &opts)?.count_u128() as f64)))
                .collect::<CliResult<Vec<_>>>()?;
            (vals, s as f64 - 1.0)
        }
        "scan" => {
            let case: TheoremCase = file
                .pick(a.case.clone(), "case")?
                .ok_or_else(|| CliError::usage("the scan family needs --case"))?
                .parse()?;
            let trials = file.pick(a.trials, "trials")?.unwrap_or(8);
            let rep = theorem_consistency_scan(case, &c, &ns, trials, cfg.seed)?;
            (rep.cells.iter().map(|c| (c.n, c.max_ratio)).collect(), rep.expected_slope)
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown family '{other}' (dirac, dual, box, count, moment, max, scan)"
            )))
        }
    };
    let fit = fit_exponent(&values)?;
    let csv = values_csv(&values);
    if cfg.out.is_some() {
        emit(cfg, &csv, out)?;
    } else {
        out.write_all(csv.as_bytes())?;
    }
    writeln!(
        out,
        "family={family} slope={:.6} intercept={:.6} max_residual={:.3e} reference={:.6}",
        fit.slope, fit.intercept, fit.max_residual, reference
    )?;
    Ok(EXIT_OK)
}

fn refine(a: &RefineArgs, cfg: &RunConfig, out: &mut Vec<u8>) -> CliResult<i32> {
    let file = &cfg.file;
    let c = cfg.curve()?;
    let n = match cfg.ns.as_deref() {
        None => 8,
        Some([n]) => *n,
        Some(_) => return Err(CliError::usage("refine takes a single N")),
    };
    let k = file.pick(a.k, "k")?.unwrap_or(2);
    let e_path = file.pick(a.e.clone(), "e")?;
    let f_path = file.pick(a.f.clone(), "f")?;
    let (e, f) = match (e_path, f_path) {
        (Some(ep), Some(fp)) => {
            let read = |p: &std::path::Path| -> CliResult<SparseSet> {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
                Ok(SparseSet::parse(&text, c.dim())?)
            };
            (read(&ep)?, read(&fp)?)
        }
        (None, None) => {
            let name = file.pick(a.demo.clone(), "demo")?.unwrap_or_else(|| "grid".into());
            demo::demo_sets(&name, &c, n, &cfg.c_box)?
        }
        _ => return Err(CliError::usage("give both --e and --f, or neither")),
    };
    if e.is_empty() || f.is_empty() {
        return Err(CliError::usage("E and F must be nonempty"));
    }
    let opts = RefineOptions { y_cap: file.pick(a.y_cap, "y-cap")?, tower_budget: cfg.budget };
    let trace = verify_subcritical_instance(&e, &f, &c, n, k, &opts)?;
    let json = trace.to_json() + "\n";
    if cfg.out.is_some() {
        emit(cfg, &json, out)?;
    }
    if a.json {
        out.write_all(json.as_bytes())?;
    } else {
        out.write_all(trace.report().as_bytes())?;
    }
    Ok(if trace.all_hold() { EXIT_OK } else { EXIT_USAGE })
}

fn riesz(a: &RieszArgs, cfg: &RunConfig, out: &mut Vec<u8>) -> CliResult<i32> {
    let res = cfg.file.pick(a.resolution, "resolution")?.unwrap_or(12);
    let c = cfg.curve()?;
    let rows = riesz_diagram_data(&c, res)?;
    emit(cfg, &diagram_csv(&rows), out)?;
    let vertex = rows.iter().find(|r| r.vertex).expect("vertex row");
    if cfg.out.is_some() {
        writeln!(out, "critical vertex ({}, {}) D={}", vertex.inv_p, vertex.inv_q, c.total_degree())?;
    }
    Ok(EXIT_OK)
}
