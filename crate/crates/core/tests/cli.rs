use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dfo-bounds"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dfo-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn poisedness_of_simplex() {
    let dir = workdir("simplex");
    let pts = dir.join("simplex.csv");
    std::fs::write(&pts, "y1,y2\n0,0\n1,0\n0,1\n").unwrap();
    let out = bin()
        .args(["poisedness", "--kind", "linear", "--delta", "1"])
        .arg(&pts)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["lambda"].as_f64().unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-6);

    // delta from the sidecar
    std::fs::write(dir.join("simplex.json"), r#"{"delta": 1.0}"#).unwrap();
    let out = bin()
        .args(["poisedness", "--kind", "linear"])
        .arg(&pts)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn collinear_is_not_poised() {
    let dir = workdir("collinear");
    let pts = dir.join("c.csv");
    std::fs::write(&pts, "y1,y2\n0,0\n0.5,0.5\n-0.5,-0.5\n").unwrap();
    let out = bin()
        .args(["poisedness", "--kind", "linear", "--delta", "1"])
        .arg(&pts)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not poised"));
}

#[test]
fn io_errors_exit_one() {
    let out = bin()
        .args(["poisedness", "--kind", "linear", "--delta", "1", "/nonexistent/pts.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let dir = workdir("badrow");
    let pts = dir.join("bad.csv");
    std::fs::write(&pts, "y1,y2\n0,0\n1,0\n0,x\n").unwrap();
    let out = bin()
        .args(["poisedness", "--kind", "linear", "--delta", "1"])
        .arg(&pts)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 4"));
}

#[test]
fn fit_bilinear_and_relaxation() {
    let dir = workdir("fit");
    let pts = dir.join("xy.csv");
    std::fs::write(&pts, "y1,y2,f\n0,0,0\n1,0,0\n0,1,0\n1,1,1\n").unwrap();
    let delta = 2f64.sqrt().to_string();
    let base = ["fit", "--kind", "mfn", "--delta", delta.as_str()];

    let plain = bin().args(base).arg(&pts).output().unwrap();
    assert_eq!(plain.status.code(), Some(0));
    let v = json(&plain);
    let h = &v["model"]["H"];
    for (i, j, want) in [(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 0.0)] {
        assert!((h[i][j].as_f64().unwrap() - want).abs() < 1e-10, "{h}");
    }
    assert!(v["residual"].is_number() && v["condition"].is_number());

    let zero = bin().args(base).args(["--kappa", "0"]).arg(&pts).output().unwrap();
    assert_eq!(zero.stdout, plain.stdout);

    let gamma = dir.join("gamma.csv");
    std::fs::write(&gamma, "gamma\n0\n0\n0.5\n1\n").unwrap();
    let out = bin()
        .args(base)
        .args(["--kappa", "0.01", "--gamma-file"])
        .arg(&gamma)
        .arg(&pts)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma[2]"));
}

#[test]
fn bounds_linear() {
    let out = bin()
        .args([
            "bounds", "--kind", "lin-det", "-L", "2", "--kappa", "0", "--lambda", "1", "--n", "4",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["C_g"].as_f64().unwrap() - 6.0).abs() < 1e-12);
    assert_eq!(v["C_H"].as_f64().unwrap(), 0.0);
}

#[test]
fn verify_writes_rows() {
    let dir = workdir("verify");
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"function": "quartic", "kind": "LIN_DET", "n": 2, "delta": 0.1, "seed": [0, 1, 2]}"#,
    )
    .unwrap();
    let csv = dir.join("out.csv");
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out-csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial_id,function,kind,n,p,delta,delta_max,kappa,seed,lambda,C_f,C_g,C_H,emp_f,emp_g,emp_H,margin_f,margin_g,margin_H,pass"
    );
    assert_eq!(lines.count(), 3);
    assert_eq!(json(&out)["trials"], 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[3/3]"));

    std::fs::write(&cfg, "[]").unwrap();
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out-csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1);
}

#[test]
fn oracle_on_affine() {
    let dir = workdir("oracle");
    let poly = dir.join("m.json");
    std::fs::write(&poly, r#"{"n": 2, "c": 1.0, "g": [-1.0, -1.0], "H": [[0, 0], [0, 0]]}"#).unwrap();
    let out = bin()
        .args(["oracle", "--poly"])
        .arg(&poly)
        .args(["--center", "0,0", "--radius", "1", "--resolution", "1e-3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["grid_max"].as_f64().unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-3);
}
