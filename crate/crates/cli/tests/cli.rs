use std::process::Command;

use geotomo_cli::emit::{format_number, to_csv, to_json};
use geotomo_cli::{default_pairs, parse_body_spec, parse_pairs, run_suite, BodySpec, CliError, SuiteConfig, SuiteId};

#[test]
fn body_spec_examples() {
    let e = parse_body_spec(r#"{"family":"ellipsoid","dim":3,"params":[1,2,3]}"#).unwrap();
    assert_eq!(e.params, vec![1.0, 2.0, 3.0]);
    assert!(parse_body_spec(r#"{"family":"lp_ball","dim":5,"params":[4]}"#).is_ok());
    let bad = parse_body_spec(r#"{"family":"ellipsoid","dim":3,"params":[1,-2,3]}"#).unwrap_err();
    assert!(bad.to_string().contains("semi-axis") || bad.to_string().contains("positive"), "{bad}");
    let unknown = parse_body_spec(r#"{"family":"torus","dim":3,"params":[]}"#).unwrap_err();
    assert!(unknown.to_string().contains("zonotope"));
    assert!(parse_body_spec(r#"{"family":"ball","dim":7}"#).is_err());
    assert!(parse_body_spec(r#"{"family":"ball","dim":3"#).is_err());
    let asym = r#"{"family":"polytope","dim":2,"params":[1,0,1, -1,0,2, 0,1,1, 0,-1,1]}"#;
    assert!(parse_body_spec(asym).is_err());
}

#[test]
fn pairs_file_round_trip() {
    let text = r#"[[{"family":"ball","dim":3,"params":[1.1],"label":"K"},
                    {"family":"zonotope","dim":3,"params":[1,0,0, 0,1,0, 0,0,1]}]]"#;
    let pairs = parse_pairs(text).unwrap();
    assert_eq!(pairs.len(), 1);
    assert!(parse_pairs("[]").is_err());
    let mixed = r#"[[{"family":"ball","dim":3},{"family":"ball","dim":4}]]"#;
    assert!(parse_pairs(mixed).is_err());
}

#[test]
fn concentric_ball_report() {
    let cfg = SuiteConfig::new(SuiteId::BpStability);
    let b = BodySpec::new("ball", 3, vec![]);
    let reports = run_suite(&cfg, &[(b.clone().scaled(1.1), b)]).unwrap();
    let r = &reports[0];
    assert!(r.pass && r.hypothesis_met);
    assert!((r.epsilon - 0.6597).abs() < 1e-4);
    assert!((r.margin - (0.6597 - 0.5457)).abs() < 1e-3);
}

#[test]
fn identities_on_ball_and_ellipsoid() {
    let mut cfg = SuiteConfig::new(SuiteId::Identities);
    cfg.count = 0;
    let pairs = default_pairs(&cfg);
    assert_eq!(pairs.len(), 1);
    let reports = run_suite(&cfg, &pairs).unwrap();
    for r in &reports {
        assert!(r.pass, "{} failed: {:?}", r.theorem, r);
    }
    for id in ["parseval_sections", "parseval_projections", "radon_routes", "projection_routes", "gamma_lemma"] {
        assert!(reports.iter().any(|r| r.theorem == id), "{id}");
    }
}

#[test]
fn alpha_gate() {
    let mut cfg = SuiteConfig::new(SuiteId::FracSection);
    cfg.count = 1;
    cfg.alpha = Some(0.0);
    let reports = run_suite(&cfg, &default_pairs(&cfg)).unwrap();
    assert!(!reports.is_empty() && reports.iter().all(|r| r.error.is_none()));
    cfg.alpha = Some(-0.1);
    assert!(matches!(run_suite(&cfg, &default_pairs(&cfg)), Err(CliError::Config(_))));
    cfg.alpha = None;
    assert!(run_suite(&cfg, &default_pairs(&cfg)).is_err());
    let mut other = SuiteConfig::new(SuiteId::Shephard);
    other.alpha = Some(1.0);
    assert!(run_suite(&other, &default_pairs(&other)).is_err());
}

#[test]
fn pair_failures_do_not_abort() {
    let cfg = SuiteConfig::new(SuiteId::Shephard);
    let good = (BodySpec::new("ball", 3, vec![1.1]), BodySpec::new("ball", 3, vec![]));
    // l_4 balls carry no curvature data
    let missing = (BodySpec::new("lp_ball", 3, vec![4.0]), BodySpec::new("ball", 3, vec![]));
    let broken = (BodySpec::new("ellipsoid", 3, vec![1.0, -1.0, 1.0]), BodySpec::new("ball", 3, vec![]));
    let reports = run_suite(&cfg, &[good, missing, broken]).unwrap();
    assert_eq!(reports.len(), 3);
    assert!(reports[0].pass && reports[0].error.is_none());
    assert!(reports[1].error.is_some() && !reports[1].pass);
    assert!(reports[2].error.is_some());
    assert_eq!(reports[2].bodies[0].family, "ellipsoid");
}

#[test]
fn emitters_agree() {
    let cfg = SuiteConfig::new(SuiteId::ShephardSep);
    let b = BodySpec::new("ball", 3, vec![]);
    let reports = run_suite(&cfg, &[(b.clone().scaled(0.8), b)]).unwrap();
    let csv = to_csv(&reports).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("theorem,bodies,alpha,epsilon,lhs,rhs"));
    let json: serde_json::Value = serde_json::from_str(&to_json(&cfg, &reports).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    let r = &json["reports"][0];
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let row = rdr.records().next().unwrap().unwrap();
    for (i, key) in [(3usize, "epsilon"), (4, "lhs"), (5, "rhs"), (6, "constant"), (7, "margin")] {
        assert_eq!(row[i], format_number(r[key].as_f64().unwrap()), "{key}");
    }
    assert!(to_csv(&[]).is_err());
    assert!(to_json(&cfg, &[]).is_err());
}

#[test]
fn binary_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let status = Command::new(env!("CARGO_BIN_EXE_geotomo"))
        .args(["--suite", "bp-separation", "--count", "1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["suite"], "bp-separation");
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    let bad = Command::new(env!("CARGO_BIN_EXE_geotomo"))
        .args(["--suite", "frac-section", "--alpha", "-0.1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("alpha"));
    let unwritable = Command::new(env!("CARGO_BIN_EXE_geotomo"))
        .args(["--suite", "shephard", "--count", "0", "--out", "/nonexistent/dir/r.json"])
        .output()
        .unwrap();
    assert_eq!(unwritable.status.code(), Some(2));
}
