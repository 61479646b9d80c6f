use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use ymflow_cli::commands::Command as Sub;
use ymflow_cli::config::RunConfig;
use ymflow_cli::CliError;

fn ymflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ymflow")).arg("--out").arg(dir).args(args).output().expect("binary runs")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn config_text_round_trips_through_canonical_form() {
    let cfg = RunConfig::parse("# comment\nn = 7\nseed = 3 # trailing\npicard_eps_list_rho = 1e-2, 1e-3\nkato_field = mixture\n").unwrap();
    assert_eq!((cfg.n, cfg.seed), (7, 3));
    assert_eq!(cfg.picard_eps_list_rho, vec![1e-2, 1e-3]);
    let again = RunConfig::parse(&cfg.canonical()).unwrap();
    assert_eq!(again.canonical(), cfg.canonical());
    assert_eq!(again.hash(), cfg.hash());
    assert_eq!(RunConfig::default().hash().len(), 64);
}

#[test]
fn output_dir_does_not_enter_the_hash() {
    let mut a = RunConfig::default();
    let b = RunConfig::default();
    a.output_dir = "elsewhere".into();
    assert_eq!(a.hash(), b.hash());
    a.seed = 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn config_errors_map_to_exit_code_two() {
    for text in ["bogus = 1", "n = 10", "n = five", "grid_r_max_y = 40", "kato_field = plane", "just words"] {
        let err = RunConfig::parse(text).unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "{text}: {err}");
        assert_eq!(err.exit_code(), 2);
    }
    let numerical = CliError::Numerical(ymflow::Error::Domain("x".into()));
    assert_eq!(numerical.exit_code(), 1);
}

#[test]
fn command_names_round_trip() {
    for c in Sub::ALL {
        assert_eq!(Sub::from_name(c.name()), Some(c));
    }
    assert_eq!(Sub::from_name("rerun"), None);
}

#[test]
fn invalid_invocations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--n", "10", "certify-nonequivariant"][..],
        &["--set", "bogus=1", "certify-nonequivariant"],
        &["--set", "nonsense", "certify-nonequivariant"],
        &["no-such-command"],
    ] {
        let out = ymflow(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "unknown_key = 3\n").unwrap();
    let out = ymflow(dir.path(), &["--config", cfg.to_str().unwrap(), "certify-nonequivariant"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupted_constant_fails_identities_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = ymflow(dir.path(), &["verify-identities", "--corrupt-constant", "1e-3", "--set", "identities_points_count=10"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("FAIL soliton_residual"), "{stderr}");
    let m = json(dir.path().join("verify-identities.manifest.json"));
    assert_eq!(m["passed"], false);
}

#[test]
fn config_file_and_overrides_are_layered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n = 6\nseed = 4\n").unwrap();
    let out = ymflow(dir.path(), &["--config", cfg.to_str().unwrap(), "--seed", "9", "certify-nonequivariant"]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("certify-nonequivariant.config.txt")).unwrap();
    let applied = RunConfig::parse(&text).unwrap();
    assert_eq!((applied.n, applied.seed), (6, 9));
}

#[test]
fn spectrum_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(ymflow(d.path(), &["spectrum"]).status.code(), Some(0));
    }
    for f in ["spectrum.csv", "spectrum.json", "spectrum.config.txt", "plot_spectrum.py"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.path().join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("# schema_version=1 command=spectrum\nj,lambda_j,"));
}

#[test]
fn manifest_checksums_match_the_files() {
    use sha2::{Digest, Sha256};
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ymflow(dir.path(), &["certify-nonequivariant"]).status.code(), Some(0));
    let m = json(dir.path().join("certify-nonequivariant.manifest.json"));
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), 4);
    for f in files {
        let bytes = fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    let limit = json(dir.path().join("certify-nonequivariant.json"))["scaled_margin_limit"].as_f64().unwrap();
    assert!(limit > 0.0);
}

#[test]
fn picard_single_size_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let out = ymflow(dir.path(), &["picard", "--set", "picard_eps_list_rho=1e-3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let j = json(dir.path().join("picard.json"));
    assert!(j["contraction_factor"].as_f64().unwrap() < 1.0);
    assert!(j["correction_slope"].is_null());
}

#[test]
fn rerun_reproduces_a_run_from_its_manifest() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["kato-fuzz", "--seed", "17", "--set", "kato_samples_count=200", "--set", "matrix_samples_count=1000"];
    assert_eq!(ymflow(a.path(), &args).status.code(), Some(0));
    let manifest = a.path().join("kato-fuzz.manifest.json");
    assert_eq!(ymflow(b.path(), &["rerun", "--manifest", manifest.to_str().unwrap()]).status.code(), Some(0));
    for f in ["kato-fuzz.csv", "kato-fuzz.json", "kato-fuzz.config.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let (ma, mb) = (json(&manifest), json(b.path().join("kato-fuzz.manifest.json")));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["files"], mb["files"]);
}

#[test]
fn thread_count_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["kato-fuzz", "--set", "kato_samples_count=300", "--set", "matrix_samples_count=1000"];
    for (d, threads) in [(&a, "1"), (&b, "3")] {
        let out = Command::new(env!("CARGO_BIN_EXE_ymflow"))
            .env("YMFLOW_THREADS", threads)
            .arg("--out")
            .arg(d.path())
            .args(args)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(a.path().join("kato-fuzz.csv")).unwrap(), fs::read(b.path().join("kato-fuzz.csv")).unwrap());
    let out = Command::new(env!("CARGO_BIN_EXE_ymflow")).env("YMFLOW_THREADS", "many").arg("certify-nonequivariant").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
