use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};

const SMALL_CT: &str = r#"
problem = "ct"
noise_level = 0.02

[ct]
size = 24
angles = 12
rays = 35

[penalty]
beta = 1.0
pdhg_iters = 30

[solver]
tau = 1.05
mu0_factor = 1.8
mu1_bar = 20000

[[method]]
name = "landweber"
strategy = "zero"

[[method]]
name = "nesterov"
strategy = "nesterov"

[[method]]
name = "tpg-dbts"
strategy = "dbts"
gamma0 = 0.1
gamma1 = 0.4
q_exponent = 1.1
"#;

fn tpg() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tpg"));
    cmd.stdout(Stdio::null()).stderr(Stdio::null());
    cmd
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    write_named(dir, "cfg.toml", text)
}

fn write_named(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "f64"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_CT);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let status = tpg()
            .arg("run")
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .env("TPG_THREADS", threads)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let files = csv_files(&a);
    let names: Vec<_> = files.iter().map(|(n, _)| n.as_str()).collect();
    for expected in ["summary.csv", "trace_landweber.csv", "trace_nesterov.csv", "trace_tpg-dbts.csv", "recon_nesterov.f64"] {
        assert!(names.contains(&expected), "{names:?}");
    }
    assert_eq!(files, csv_files(&b));
    let trace = String::from_utf8(fs::read(a.join("trace_nesterov.csv")).unwrap()).unwrap();
    assert!(trace.starts_with("n,lambda,mu,residual,error,delta_n,i_n\n"));
    let pgm = fs::read(a.join("recon_tpg-dbts.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n24 24\n65535\n"));
    assert_eq!(pgm.len(), b"P5\n24 24\n65535\n".len() + 2 * 24 * 24);
}

#[test]
fn seed_and_method_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_CT);
    let run = |seed: &str, out: &str| {
        let status = tpg()
            .args(["run", cfg.to_str().unwrap(), "--methods", "nesterov", "--seed", seed, "--out"])
            .arg(tmp.path().join(out))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        fs::read_to_string(tmp.path().join(out).join("summary.csv")).unwrap()
    };
    let s1 = run("1", "s1");
    let s2 = run("2", "s2");
    assert_eq!(s1.lines().count(), 2);
    assert!(s1.lines().nth(1).unwrap().starts_with("nesterov,"));
    assert_ne!(s1, s2);
    assert!(!tmp.path().join("s1").join("trace_landweber.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), &SMALL_CT.replace("angles = 12", "angles = 12\nangels = 3"));
    let out = tpg().arg("run").arg(&bad).stderr(Stdio::piped()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cfg.toml:"), "{stderr}");

    let missing = tpg().args(["run", "/nonexistent/cfg.toml"]).status().unwrap();
    assert_eq!(missing.code(), Some(2));

    let good = write_config(tmp.path(), SMALL_CT);
    let unknown = tpg().arg("run").arg(&good).args(["--methods", "bogus"]).status().unwrap();
    assert_eq!(unknown.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_CT
        .replace("mu0_factor = 1.8", "mu0_bar = 1e300")
        .replace("mu1_bar = 20000", "mu1_bar = 1e300");
    let cfg = write_config(tmp.path(), &text);
    let out = tpg().arg("run").arg(&cfg).args(["--methods", "landweber"]).stderr(Stdio::piped()).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn assemble_ct_cache_is_reused() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("m.csr");
    let text = SMALL_CT.replace("rays = 35", &format!("rays = 35\nmatrix_cache = {:?}", cache.to_str().unwrap()));
    let cfg = write_config(tmp.path(), &text);
    let status = tpg().arg("assemble-ct").arg(&cfg).arg("--cache").arg(&cache).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(&fs::read(&cache).unwrap()[..4], b"CSR1");

    let (cached, fresh) = (tmp.path().join("cached"), tmp.path().join("fresh"));
    let plain = write_named(tmp.path(), "plain.toml", SMALL_CT);
    assert_eq!(tpg().arg("run").arg(&plain).arg("--out").arg(&fresh).status().unwrap().code(), Some(0));
    assert_eq!(tpg().arg("run").arg(&cfg).arg("--out").arg(&cached).status().unwrap().code(), Some(0));
    assert_eq!(csv_files(&cached), csv_files(&fresh));
}
