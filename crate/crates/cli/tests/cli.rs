use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const HALF_ONES: &str = r#"{"p":2.0,"blockDim":2,"block":[[0.5,0.5],[0.5,0.5]],"tail":{"kind":"zero"}}"#;
const UNIT_DIAG: &str = r#"{"entries":[0.7071067811865476,0.7071067811865476]}"#;

fn posop(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posop"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn posop")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("B.json"), HALF_ONES).unwrap();
    fs::write(dir.path().join("u.json"), UNIT_DIAG).unwrap();
    fs::write(
        dir.path().join("A.json"),
        r#"{"p":2.0,"blockDim":2,"block":[[0.3,0.1],[0.0,0.4]],"tail":{"kind":"zero"}}"#,
    )
    .unwrap();
    fs::write(
        dir.path().join("T.json"),
        r#"{"p":2.0,"blockDim":4,"block":[[0.5,0,0,0],[0,0.5,0,0],[0,0,0.5,0],[0,0,0,0.5]],"tail":{"kind":"zero"}}"#,
    )
    .unwrap();
    dir
}

fn read(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &TempDir, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// Parse the file with the library types and write it back; must be
/// byte-identical.
fn assert_operator_round_trip(dir: &TempDir, name: &str) {
    let text = read(dir, name);
    let model = posop::OperatorModel::from_json(&text).unwrap();
    assert_eq!(model.to_json() + "\n", text, "{name} does not round-trip");
}

#[test]
fn certify_spot_example() {
    let dir = setup();
    let out = posop(&["certify", "--op", "B.json", "--u", "u.json", "--eps", "0.1", "--out", "C.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let c = json(&dir, "C.json");
    assert_eq!(c["delta"].as_f64().unwrap(), 0.25f64.min(0.1 * 0.1 / 8.0));
    assert_eq!(c["provenance"]["parameters"]["K"].as_f64().unwrap(), 4.0);
    let text = read(&dir, "C.json");
    let cert = posop::certificates::ContinuityCertificate::from_json(&text).unwrap();
    assert_eq!(cert.to_json() + "\n", text);
    // Config sidecar records the run.
    let cfg = json(&dir, "C.json.config.json");
    assert_eq!(cfg["subcommand"], "certify");
    assert_eq!(cfg["args"]["eps"].as_f64().unwrap(), 0.1);
}

#[test]
fn certify_without_u_on_non_attaining_operator_is_invalid() {
    let dir = setup();
    let out = posop(&["construct", "non-attainer", "--c", "0.5", "--r", "0.9", "--out", "D.json"], dir.path());
    assert_eq!(code(&out), 0);
    assert_operator_round_trip(&dir, "D.json");
    let out = posop(&["certify", "--op", "D.json", "--eps", "0.1", "--out", "C.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--u"));
    assert!(!dir.path().join("C.json").exists());
}

#[test]
fn falsify_sound_and_inflated_certificates() {
    let dir = setup();
    posop(&["certify", "--op", "B.json", "--u", "u.json", "--eps", "0.1", "--out", "C.json"], dir.path());
    let out = posop(&["falsify", "--cert", "C.json", "--trials", "500", "--climbs", "50", "--report", "R.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir, "R.json")["violated"], false);
    assert!(!dir.path().join("C.witness.json").exists());

    // A far too large radius admits violating operators.
    let mut cert = json(&dir, "C.json");
    cert["delta"] = serde_json::json!(0.5);
    fs::write(dir.path().join("Big.json"), cert.to_string()).unwrap();
    let out = posop(&["falsify", "--cert", "Big.json", "--trials", "500", "--climbs", "50"], dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stdout));
    assert_operator_round_trip(&dir, "Big.witness.json");
    let w = posop::OperatorModel::from_json(&read(&dir, "Big.witness.json")).unwrap();
    let b = posop::OperatorModel::from_json(HALF_ONES).unwrap();
    let gap = (0..=1).map(|k| posop::topologies::row_gap(&w, &b, k)).fold(0.0, f64::max);
    assert!(gap >= 0.1);
}

#[test]
fn corrupt_or_missing_inputs_exit_2() {
    let dir = setup();
    fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    assert_eq!(code(&posop(&["falsify", "--cert", "bad.json"], dir.path())), 2);
    assert_eq!(code(&posop(&["falsify", "--cert", "nope.json"], dir.path())), 2);
    assert_eq!(code(&posop(&["norm", "--op", "bad.json"], dir.path())), 2);
    fs::write(
        dir.path().join("neg.json"),
        r#"{"p":2.0,"blockDim":1,"block":[[-0.5]],"tail":{"kind":"zero"}}"#,
    )
    .unwrap();
    let out = posop(&["norm", "--op", "neg.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative"));
    // Output directory must exist before anything is computed.
    let out = posop(&["construct", "extend", "--op", "A.json", "--eps", "0.05", "--out", "missing/B.json", "--u-out", "u2.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("u2.json").exists());
    // Unknown flag values.
    assert_eq!(code(&posop(&["sample", "--dist", "cauchy", "--out", "s.csv"], dir.path())), 2);
    assert_eq!(code(&posop(&["sample", "--probes", "bogus", "--out", "s.csv"], dir.path())), 2);
}

#[test]
fn non_convergence_exits_4() {
    let dir = setup();
    fs::write(
        dir.path().join("P.json"),
        r#"{"p":3.0,"blockDim":3,"block":[[0.2,0.7,0.1],[0.5,0.1,0.9],[0.3,0.3,0.2]],"tail":{"kind":"zero"}}"#,
    )
    .unwrap();
    assert_eq!(code(&posop(&["norm", "--op", "P.json", "--max-iterations", "2"], dir.path())), 4);
    let out = posop(&["norm", "--op", "P.json"], dir.path());
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["method"], "p-power-iteration");
}

#[test]
fn verify_norming_accepts_and_rejects() {
    let dir = setup();
    assert_eq!(code(&posop(&["verify-norming", "--op", "B.json", "--u", "u.json"], dir.path())), 0);
    fs::write(dir.path().join("e0.json"), r#"{"entries":[1.0,0.0]}"#).unwrap();
    let out = posop(&["verify-norming", "--op", "B.json", "--u", "e0.json"], dir.path());
    assert_eq!(code(&out), 3);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["accepted"], false);
}

#[test]
fn extend_output_passes_verification() {
    let dir = setup();
    let out = posop(&["construct", "extend", "--op", "A.json", "--eps", "0.05", "--out", "Bx.json", "--u-out", "ux.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_operator_round_trip(&dir, "Bx.json");
    let u = read(&dir, "ux.json");
    let v: posop::CoordVector = serde_json::from_str(&u).unwrap();
    assert_eq!(serde_json::to_string(&v).unwrap() + "\n", u);
    assert_eq!(code(&posop(&["verify-norming", "--op", "Bx.json", "--u", "ux.json"], dir.path())), 0);
    assert!(dir.path().join("Bx.json.config.json").exists());
}

#[test]
fn embedding_family_feeds_class_m_certificate() {
    let dir = setup();
    let out = posop(
        &["construct", "embed", "--op", "A.json", "--eps", "0.1", "--out", "Te.json", "--family-out", "F.json", "--family-prime-out", "Fp.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_operator_round_trip(&dir, "Te.json");
    let out = posop(&["certify", "--op", "Te.json", "--class-m", "F.json", "--eps", "0.2", "--r", "1", "--out", "CM.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let c = json(&dir, "CM.json");
    assert_eq!(c["provenance"]["operation"], "class_m_certificate");
    let out = posop(&["falsify", "--cert", "CM.json", "--trials", "300", "--climbs", "20"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn diameter_neighbourhood() {
    let dir = setup();
    let out = posop(&["construct", "extend", "--op", "A.json", "--eps", "0.05", "--out", "Bx.json", "--u-out", "ux.json"], dir.path());
    assert_eq!(code(&out), 0);
    // blockDim 4 but n0 = 5 for eta = 0.5: the corner cannot be certified.
    let out = posop(&["certify", "--op", "Bx.json", "--eta", "0.5", "--out", "W.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("blockDim"));
    let out = posop(&["certify", "--op", "Bx.json", "--eta", "4", "--out", "W.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let w = json(&dir, "W.json");
    assert!(w["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn converge_norm_deficit_trace() {
    let dir = setup();
    let out = posop(
        &["converge", "--seq", "prop_norm_deficit", "--param", r#"{"delta":0.4}"#, "--limit", "T.json", "--steps", "50", "--out", "tr.csv", "--svg", "tr.svg", "--report", "tr.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "tr.csv");
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "step,wot,sot,adj,metric_lo,metric_hi");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 50);
    for r in rows.iter().filter(|r| r[0] >= 4.0) {
        assert!(r[1] <= 1e-12, "wot {}", r[1]);
        assert!((r[3] - 0.4).abs() <= 1e-12, "adj {}", r[3]);
    }
    let svg = read(&dir, "tr.svg");
    assert!(svg.starts_with("<svg") && svg.contains("polyline") && !svg.contains("href"));
    let report = json(&dir, "tr.json");
    assert!(report["verdicts"]["adj"]["bounded_below"]["beta"].as_f64().unwrap() >= 0.4 - 1e-12);
    assert_eq!(json(&dir, "tr.csv.config.json")["args"]["sequence"]["seq"], "prop_norm_deficit");
}

#[test]
fn materialized_sequence_elements_round_trip() {
    let dir = setup();
    let cases = [
        ("prop_norm_deficit", r#"{"delta":0.2}"#),
        ("prop_non_attaining", r#"{"shift":2.0,"c":0.5,"r":0.9}"#),
    ];
    for (seq, param) in cases {
        let out = posop(&["construct", "sequence", "--seq", seq, "--param", param, "--limit", "A.json", "--n", "3", "--out", "Tn.json"], dir.path());
        assert_eq!(code(&out), 0, "{seq}: {}", String::from_utf8_lossy(&out.stderr));
        assert_operator_round_trip(&dir, "Tn.json");
    }
    // Row 0 of A is not zero.
    let out = posop(&["construct", "sequence", "--seq", "prop_zero_row", "--param", r#"{"l":0}"#, "--limit", "A.json", "--n", "3", "--out", "Tn.json"], dir.path());
    assert_eq!(code(&out), 2);
    let out = posop(&["construct", "sequence", "--seq", "nope", "--limit", "A.json", "--n", "3", "--out", "Tn.json"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn sample_campaign_is_reproducible() {
    let dir = setup();
    let args = |out: &str, summary: &str| -> Vec<String> {
        ["sample", "--dim", "10", "--count", "300", "--probes", "irreducible,not_coisometry,attained", "--seed", "7", "--out", out, "--summary", summary, "--svg", "s.svg"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    let run = |out: &str, summary: &str| {
        let a = args(out, summary);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        posop(&a, dir.path())
    };
    assert_eq!(code(&run("s1.csv", "j1.json")), 0);
    assert_eq!(code(&run("s2.csv", "j2.json")), 0);
    assert_eq!(read(&dir, "s1.csv"), read(&dir, "s2.csv"));
    assert_eq!(read(&dir, "j1.json"), read(&dir, "j2.json"));
    let csv = read(&dir, "s1.csv");
    assert!(csv.starts_with(
        "sample,seed,dim,p,norm,attained,not_coisometry,irreducible,class_m,class_m_prime,error\n"
    ));
    assert_eq!(csv.lines().count(), 301);
    let summary = json(&dir, "j1.json");
    assert!(summary["note"].as_str().unwrap().contains("sampler"));
    assert!(summary.get("wall_time_secs").is_none());
    assert!(read(&dir, "s.svg").contains("polyline"));
}

#[test]
fn norm_output_file_round_trips() {
    let dir = setup();
    assert_eq!(code(&posop(&["norm", "--op", "B.json", "--out", "n.json"], dir.path())), 0);
    let text = read(&dir, "n.json");
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    let path: PathBuf = dir.path().join("n.json.config.json");
    assert!(path.exists());
}
