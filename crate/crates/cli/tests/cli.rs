use std::fs;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["polyavg"];
    full.extend_from_slice(args);
    let code = polyavg_cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(line: &str) -> serde_json::Value {
    serde_json::from_str(line).unwrap()
}

#[test]
fn count_linear_j2() {
    let (code, out, _) = run(&["--curve", "n", "--N", "2", "count", "--s", "2"]);
    assert_eq!(code, 0);
    let v = json(out.trim());
    assert_eq!(v["count"], "6");
    assert_eq!(v["mode"], "homogeneous");
    assert_eq!(v["cached"], false);
}

#[test]
fn count_methods_agree() {
    let brute = run(&["--no-timing", "--curve", "n^2", "--N", "7", "count", "--mode", "inhomogeneous", "--k", "1", "--z", "-15", "--method", "brute"]);
    let lemma = run(&["--no-timing", "--curve", "n^2", "--N", "7", "count", "--mode", "inhomogeneous", "--z", "-15", "--method", "lemma1"]);
    assert_eq!((brute.0, lemma.0), (0, 0), "{} {}", brute.2, lemma.2);
    // only 1 - 16; 49 - 64 needs m = 8
    assert_eq!(json(brute.1.trim())["count"], "1");
    assert_eq!(json(lemma.1.trim())["count"], "1");
}

#[test]
fn cache_hit_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("counts.jsonl");
    let cache = cache.to_str().unwrap();
    let args = ["--curve", "n, n^2", "--N", "9", "--cache", cache, "count", "--k", "2"];
    let (c1, first, _) = run(&args);
    let (c2, second, _) = run(&args);
    assert_eq!((c1, c2), (0, 0));
    let (a, b) = (json(first.trim()), json(second.trim()));
    assert_eq!(a["cached"], false);
    assert_eq!(b["cached"], true);
    assert_eq!(a["count"], b["count"]);
    assert_eq!(b["elapsed"], 0.0);
    assert_eq!(fs::read_to_string(dir.path().join("counts.jsonl")).unwrap().lines().count(), 1);
}

#[test]
fn cache_audit_catches_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let p = path.to_str().unwrap();
    assert_eq!(run(&["--curve", "n", "--N", "5", "--cache", p, "count"]).0, 0);
    let text = fs::read_to_string(&path).unwrap().replace("\"count\":\"85\"", "\"count\":\"86\"");
    fs::write(&path, text).unwrap();
    let (code, _, err) = run(&["--curve", "n", "--N", "5", "--cache", p, "count", "--audit-rate", "1"]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("cache"), "{err}");
}

#[test]
fn lemma1_rejects_zero_target() {
    let (code, _, err) = run(&["--curve", "n^2", "--N", "5", "count", "--mode", "inhomogeneous", "--z", "0", "--method", "lemma1"]);
    assert_eq!(code, 1);
    assert!(err.contains("hypothesis"), "{err}");
}

#[test]
fn budget_exceeded_exits_two() {
    let (code, _, err) = run(&["--curve", "n", "--N", "50", "--budget-tuples", "100", "count", "--s", "3"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn max_mode_reports_target() {
    let (code, out, _) = run(&["--curve", "n", "--N", "6", "count", "--mode", "max", "--k", "1"]);
    assert_eq!(code, 0);
    let v = json(out.trim());
    assert_eq!(v["count"], "5");
    assert_eq!(v["z"], "1");
}

#[test]
fn refine_grid_demo() {
    let (code, out, err) = run(&["--curve", "n, n^2", "--N", "8", "refine", "--demo", "grid", "--k", "2"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("[pass] multiplicity"), "{out}");
    assert!(!out.contains("FAIL"));
    assert!(!out.contains("trivial "));
}

#[test]
fn refine_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.json");
    let (code, _, err) = run(&["--N", "8", "--out", path.to_str().unwrap(), "refine", "--demo", "grid", "--k", "1"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["k"], 1);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["holds"] == true));
}

#[test]
fn refine_far_demo_is_trivial() {
    let (code, out, _) = run(&["--N", "8", "refine", "--demo", "far"]);
    assert_eq!(code, 0);
    assert!(out.contains("trivial"), "{out}");
}

#[test]
fn refine_oversized_tower() {
    let (code, _, err) = run(&["--N", "8", "--budget-tuples", "50", "refine", "--demo", "grid", "--k", "2"]);
    assert_eq!(code, 2);
    assert!(err.contains("minimum slices so far"), "{err}");
}

#[test]
fn refine_from_set_files() {
    let dir = tempfile::tempdir().unwrap();
    let e = dir.path().join("e.txt");
    let f = dir.path().join("f.txt");
    fs::write(&e, "0 0\n1 0\n0 1\n1 1\n").unwrap();
    fs::write(&f, "1 1\n2 4\n2 2\n3 5\n").unwrap();
    let (code, out, err) =
        run(&["--N", "3", "refine", "--e", e.to_str().unwrap(), "--f", f.to_str().unwrap(), "--k", "1"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("pairing"));
    fs::write(&f, "").unwrap();
    assert_eq!(run(&["--N", "3", "refine", "--e", e.to_str().unwrap(), "--f", f.to_str().unwrap()]).0, 1);
}

#[test]
fn exponent_needs_three_n() {
    let (code, _, err) = run(&["--N", "8", "exponent", "--family", "dirac"]);
    assert_eq!(code, 1);
    assert!(err.contains("at least 3"), "{err}");
}

#[test]
fn exponent_dirac_slope() {
    let (code, out, _) = run(&["--curve", "n, n^2", "--N", "4:10", "exponent", "--family", "dirac", "--inv-p", "2/3", "--inv-q", "1/3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("N,value\n4,"));
    let last = out.lines().last().unwrap();
    assert!(last.contains("slope=-0.666667"), "{last}");
    assert!(last.contains("reference=-0.666667"), "{last}");
}

#[test]
fn exponent_count_family() {
    let (code, out, _) = run(&["--curve", "n^3", "--N", "16,32,64,128", "exponent", "--family", "count"]);
    assert_eq!(code, 0);
    let slope: f64 = out.lines().last().unwrap().split("slope=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((slope - 2.0).abs() < 0.2, "{slope}");
}

#[test]
fn riesz_csv() {
    let (code, out, _) = run(&["--curve", "n, n^2", "riesz", "--resolution", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next().unwrap(), "inv_p,inv_q,region,dominant_term");
    assert!(out.lines().count() > 10);
}

#[test]
fn verify_default_passes() {
    let (code, out, _) = run(&["verify", "--trials", "5"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("0 failed\n"));
    for suite in ["poly", "mitm", "partition", "lemma1", "lemma2", "lemma3", "identities", "operators", "transport", "refinement", "extremizers"] {
        assert!(out.lines().any(|l| l.starts_with(suite)), "missing {suite}");
    }
}

#[test]
fn verify_fault_names_property() {
    let (code, out, _) = run(&["verify", "--suite", "lemma1", "--fault", "lemma1", "--trials", "5"]);
    assert_eq!(code, 1);
    assert!(out.lines().any(|l| l.contains("lemma1_equals_oracle") && l.contains("FAIL")), "{out}");
}

#[test]
fn verify_empty_selection() {
    assert_eq!(run(&["verify", "--suite", ""]).0, 1);
    assert_eq!(run(&["verify", "--suite", "nope"]).0, 1);
    let (code, out, _) = run(&["verify", "--list"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 11);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# linear curve\ncurve = n\nN = 3\n").unwrap();
    let c = cfg.to_str().unwrap();
    let (_, out, _) = run(&["--config", c, "count"]);
    assert_eq!(json(out.trim())["count"], "19");
    let (_, out, _) = run(&["--config", c, "--N", "2", "count"]);
    assert_eq!(json(out.trim())["count"], "6");
    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(run(&["--config", c, "count"]).0, 1);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["--curve", "n^", "count"]).0, 1);
    assert_eq!(run(&["--N", "0", "count"]).0, 1);
}

#[test]
fn output_is_thread_independent() {
    let base = ["--no-timing", "--curve", "n, n^2", "--N", "6,9", "--seed", "4"];
    let mut seen = Vec::new();
    for threads in ["1", "8"] {
        let mut a = vec!["--threads", threads];
        a.extend_from_slice(&base);
        a.extend_from_slice(&["verify", "--suite", "refinement,partition", "--trials", "4"]);
        seen.push(run(&a).1);
    }
    assert_eq!(seen[0], seen[1]);
}
