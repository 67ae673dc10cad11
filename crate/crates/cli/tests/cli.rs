use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cdn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdn")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = cdn(args);
    assert!(o.status.success(), "cdn {args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn chain_model(dir: &TempDir, copula: &str, param: &str) -> PathBuf {
    let path = p(dir, "model.json");
    ok(&["generate", "--family", "chain", "--n", "3", "--copula", copula, "--param", param, "--out", s(&path)]);
    path
}

#[test]
fn generate_writes_a_valid_model() {
    let dir = TempDir::new().unwrap();
    let path = p(&dir, "grid.json");
    ok(&["generate", "--family", "grid", "--n", "3", "--copula", "clayton", "--seed", "4", "--out", s(&path)]);
    let m = cdn_core::model::parse_model(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(m.n_vars(), 9);
    assert_eq!(m.factors().len(), 12);
    // same seed, same file
    let again = ok(&["generate", "--family", "grid", "--n", "3", "--copula", "clayton", "--seed", "4"]);
    assert_eq!(again, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn marginal_cdf_at_zero_is_one_half() {
    let dir = TempDir::new().unwrap();
    for copula in ["clayton", "normal"] {
        let model = chain_model(&dir, copula, "0.6");
        let out = ok(&["query", "--model", s(&model), "--type", "marginal-cdf", "--at", "X1=0"]);
        assert!(out.starts_with("marginal-cdf "), "{out}");
        let value: f64 = out.trim().rsplit("value=").next().unwrap().parse().unwrap();
        assert!((value - 0.5).abs() < 1e-12, "{out}");
    }
}

#[test]
fn density_and_conditional_queries() {
    let dir = TempDir::new().unwrap();
    let model = chain_model(&dir, "normal", "0.5");
    let out = ok(&["query", "--model", s(&model), "--type", "density", "--at", "X1=0.3,X2=-0.2,X3=1"]);
    let log: f64 = out.split("log=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(log.is_finite() && log < 0.0);
    let out = ok(&["query", "--model", s(&model), "--type", "conditional", "--bound", "X2=0", "--given", "X1=0"]);
    let v: f64 = out.trim().rsplit("value=").next().unwrap().parse().unwrap();
    // X2 sits in two factors, so its copula argument is √½:
    // Φ(Φ⁻¹(√½)/√0.75)·√½
    assert!((v - 0.520012998824463338).abs() < 1e-9, "{out}");
}

#[test]
fn sampling_is_deterministic_given_the_seed() {
    let dir = TempDir::new().unwrap();
    let model = chain_model(&dir, "clayton", "2");
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    ok(&["sample", "--model", s(&model), "--count", "100", "--seed", "7", "--out", s(&a)]);
    ok(&["sample", "--model", s(&model), "--count", "100", "--seed", "7", "--out", s(&b)]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("X1,X2,X3"));
    assert_eq!(lines.count(), 100);
    // values round-trip exactly through the decimal output
    let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    for x in first {
        assert_eq!(x.to_string().parse::<f64>().unwrap(), x);
    }
}

#[test]
fn conditional_sampling_keeps_the_observation() {
    let dir = TempDir::new().unwrap();
    let model = chain_model(&dir, "normal", "0.9");
    let out = ok(&["sample", "--model", s(&model), "--count", "20", "--given", "X2=0.25"]);
    for line in out.lines().skip(1) {
        assert_eq!(line.split(',').nth(1), Some("0.25"));
    }
}

#[test]
fn learn_recovers_a_chain() {
    let dir = TempDir::new().unwrap();
    let model = chain_model(&dir, "normal", "0.7");
    let data = p(&dir, "data.csv");
    ok(&["sample", "--model", s(&model), "--count", "3000", "--seed", "1", "--out", s(&data)]);
    let out = p(&dir, "learned.json");
    ok(&["learn", "--model", s(&model), "--data", s(&data), "--method", "lbfgs-restart", "--eps", "1e-8", "--out", s(&out)]);
    let j: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(j["report"]["converged"], true);
    assert_eq!(j["report"]["method"], "lbfgs-restart");
    for f in j["factors"].as_array().unwrap() {
        let rho = f["param"].as_f64().unwrap();
        assert!((rho - 0.7).abs() < 0.06, "{rho}");
    }
}

#[test]
fn learn_accepts_missing_cells() {
    let dir = TempDir::new().unwrap();
    let model = chain_model(&dir, "clayton", "1");
    let data = p(&dir, "data.csv");
    std::fs::write(&data, "X1,X2,X3\n0.1,,0.3\n-1,-0.5,\n0.4,0.9,1.2\n,,\n-0.2,0.1,-0.4\n1.1,0.7,0.2\n").unwrap();
    ok(&["learn", "--model", s(&model), "--data", s(&data), "--method", "gd", "--restarts", "1"]);
}

#[test]
fn experiment_headers_are_stable() {
    let dir = TempDir::new().unwrap();
    let cases: [(&str, &[&str], &str); 5] = [
        ("inference", &["--family", "chain", "--n", "2-3", "--reps", "2", "--count", "5"], "family,n,copula,n_vars,space,reps,samples,mean_seconds,sd_seconds"),
        ("learning", &["--n", "3", "--count", "50", "--trials", "2", "--method", "lbfgs-restart"], "family,n,copula,samples,missing_frac,method,trial,mse,iterations,restarts,converged,energy,seconds"),
        ("mcar", &["--n", "3", "--count", "50", "--trials", "1", "--missing-frac", "0,0.5"], "family,n,copula,samples,missing_frac,method,trial,mse,iterations,restarts,converged,energy,seconds"),
        ("piecewise", &["--n", "2", "--count", "50", "--trials", "1"], "family,n,copula,samples,missing_frac,method,trial,mse,iterations,restarts,converged,energy,seconds"),
        ("limitation", &["--count", "200"], "family,n,trial,samples,agreement,all_agree,converged,params"),
    ];
    for (id, flags, header) in cases {
        let out = p(&dir, &format!("{id}.csv"));
        let mut args = vec!["experiment", id, "--out", s(&out)];
        args.extend_from_slice(flags);
        ok(&args);
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{id}");
        assert!(text.lines().count() > 1, "{id}");
    }
}

#[test]
fn experiments_are_deterministic() {
    let args = ["experiment", "learning", "--n", "3", "--count", "40", "--trials", "2", "--method", "gd", "--seed", "3"];
    let strip = |t: String| t.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>();
    assert_eq!(strip(ok(&args)), strip(ok(&args)));
}

#[test]
fn errors_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let bad = p(&dir, "bad.json");
    std::fs::write(&bad, "{\n  \"variables\": [],\n  \"factors\": [ oops ]\n}\n").unwrap();
    let o = cdn(&["query", "--model", s(&bad), "--type", "density", "--at", "X1=0"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!cdn(&["query", "--model", s(&p(&dir, "missing.json")), "--type", "density", "--at", "X1=0"]).status.success());
    assert!(!cdn(&["generate", "--family", "loop", "--n", "2"]).status.success());
    let model = chain_model(&dir, "clayton", "1");
    assert!(!cdn(&["query", "--model", s(&model), "--type", "density", "--at", "Y=0"]).status.success());
    assert!(!cdn(&["experiment", "nonsense"]).status.success());
}
