use std::path::Path;
use std::process::Command;

fn ved(args: &[&str], dir: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ved"))
        .args(args)
        .current_dir(dir)
        .env("VED_THREADS", "2")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

#[test]
fn detect_output_is_reproducible_and_documented() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "detect",
        "--state",
        "bell",
        "--map",
        "reduction",
        "--mode",
        "deterministic",
        "--shots",
        "8192",
        "--lr",
        "0.5",
        "--seed",
        "7",
        "--no-early-stop",
        "--max-iters",
        "40",
        "--out",
    ];
    let mut a = args.to_vec();
    a.push("a.csv");
    let mut b = args.to_vec();
    b.push("b.csv");
    assert_eq!(ved(&a, dir.path()).0, 0);
    assert_eq!(ved(&b, dir.path()).0, 0);
    let ta = std::fs::read(dir.path().join("a.csv")).unwrap();
    let tb = std::fs::read(dir.path().join("b.csv")).unwrap();
    let text = String::from_utf8(ta.clone()).unwrap();
    assert_eq!(
        text.replace("a.csv", "x"),
        String::from_utf8(tb).unwrap().replace("b.csv", "x")
    );
    assert!(text.starts_with(&format!("# ved {}\n", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("# config: {"));
    assert!(text.contains("# seed: 7"));
    assert!(text.contains("# gamma: 2"));
    assert_eq!(data_rows(&text).len(), 40);
    let last: f64 = data_rows(&text)[39]
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((last + 0.5).abs() < 0.05);
}

#[test]
fn probabilistic_header_has_budget_and_json_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = ved(
        &[
            "detect",
            "--mode",
            "probabilistic",
            "--max-iters",
            "5",
            "--json",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert!(out.contains("# budget: 4258"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["budget"], 4258);
    assert_eq!(report["map"], "reduction");
}

#[test]
fn quantify_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = ved(
        &[
            "quantify",
            "--state",
            "isotropic",
            "--n",
            "1",
            "--p-grid",
            "0:1:0.1",
            "--optimizer",
            "adam",
            "--max-iters",
            "60",
            "--attempts",
            "1",
            "--out",
            "en.csv",
        ],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(dir.path().join("en.csv")).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 11);
    let ps: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ps.windows(2).all(|w| w[0] < w[1]));
    for r in rows {
        let f: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        let expected = ((1.0 + 3.0 * f[0]) / 2.0).max(1.0).log2();
        assert!((f[2] - expected).abs() < 1e-9);
        assert!(f[1] <= f[2] + 1e-6);
    }
}

#[test]
fn oracle_curves_and_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = ved(
        &[
            "oracle",
            "--family",
            "isotropic",
            "--n",
            "2",
            "--map",
            "ppt,reduction,enhanced",
            "--grid",
            "101",
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 101);
    assert!(
        out.contains("p,lambda_min_ppt,lambda_min_reduction,lambda_min_enhanced,log_negativity")
    );
    let crossings: Vec<f64> = out
        .lines()
        .filter_map(|l| l.strip_prefix("# crossing: "))
        .map(|l| l.split('=').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(crossings.len(), 3);
    assert!(crossings.iter().all(|c| (c - 0.2).abs() < 1e-6));
}

#[test]
fn scan_and_budget() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = ved(
        &[
            "scan",
            "--family",
            "isotropic",
            "--n",
            "1",
            "--map",
            "ppt",
            "--p-grid",
            "0:1:0.5",
            "--attempts",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains("inconclusive") && rows[2].contains("entangled"));

    let (code, out, _) = ved(
        &[
            "budget",
            "--map",
            "reduction",
            "--delta",
            "0.1",
            "--epsilon",
            "0.05",
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert_eq!(data_rows(&out), vec!["reduction,1,4,2,4258"]);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"map": ["ppt"], "delta": 0.2, "epsilon": 0.5}"#,
    )
    .unwrap();
    let (code, out, _) = ved(
        &["budget", "--config", "c.json", "--epsilon", "0.05"],
        dir.path(),
    );
    assert_eq!(code, 0);
    // γ = 2, δ = 0.2, ε = 0.05 → ⌈8 log₂ 40 / 0.04⌉
    assert_eq!(data_rows(&out), vec!["ppt,1,4,2,1065"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ved(&["detect", "--map", "bogus"], dir.path()).0, 2);
    assert_eq!(ved(&["detect", "--state", "file"], dir.path()).0, 2);
    assert_eq!(
        ved(&["budget", "--config", "missing.json"], dir.path()).0,
        2
    );
    assert_eq!(
        ved(
            &["quantify", "--state", "bell", "--p-grid", "0:1:0.5"],
            dir.path()
        )
        .0,
        2
    );
    assert_eq!(
        ved(&["detect", "--out", "no/such/dir/x.csv"], dir.path()).0,
        1
    );
    assert_eq!(ved(&["--help"], dir.path()).0, 0);
}

#[test]
fn state_file_input() {
    let dir = tempfile::tempdir().unwrap();
    ved::states::bell()
        .save_json(dir.path().join("bell.json"))
        .unwrap();
    let (code, out, err) = ved(
        &[
            "detect",
            "--state",
            "file",
            "--state-file",
            "bell.json",
            "--map",
            "ppt",
        ],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("# verdict: entangled"));
}
