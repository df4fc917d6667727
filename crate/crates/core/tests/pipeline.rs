use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use capselect::chooser::select;
use capselect::experiments::config::LocalizationAnchor;
use capselect::experiments::report::{collect_summaries, read_summary, CANDIDATES_HEADER, PLOT_HEADER, SUMMARY_HEADER};
use capselect::experiments::truth::write_egm2008;
use capselect::experiments::{
    load_egm2008, random_potential, report_csv, run_experiment, ExperimentConfig, Scenario,
};
use capselect::field::{sample, DiscreteField};
use capselect::quadrature::{CapGeometry, QuadratureRule};
use capselect::sphharm::{order_index, SphCoeffs, Trig};
use capselect::{Error, QuadratureRuleF32, SphCoeffsF32};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/egm_tiny.gfc")
}

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_capselect"))
}

fn small() -> ExperimentConfig {
    ExperimentConfig::preset(Scenario::Case1Small)
}

#[test]
fn egm_fixture_loads_with_implicit_low_degrees() {
    let c = load_egm2008(&fixture(), 2, 6371.0).unwrap();
    let k = (4.0 * std::f64::consts::PI).sqrt() * 6371.0;
    assert_eq!(c.as_slice().len(), 9);
    assert!((c.get(0, 1) - k).abs() < 1e-9);
    assert_eq!(c.get(1, 1), 0.0);
    assert!((c.get(2, 1) / k + 0.484165143790815e-3).abs() < 1e-18);
    assert!((c.get(2, order_index(2, Trig::Sin)) / k + 0.140027370385934e-5).abs() < 1e-20);
    // asking for more than the file holds
    assert!(matches!(load_egm2008(&fixture(), 3, 6371.0), Err(Error::Parse { .. })));
}

#[test]
fn egm_fixture_round_trips_through_export() {
    let c = load_egm2008(&fixture(), 2, 6371.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.gfc");
    write_egm2008(&c, fs::File::create(&path).unwrap()).unwrap();
    let back = load_egm2008(&path, 2, 6371.0).unwrap();
    for ((_, _, a), (_, _, b)) in c.iter().zip(back.iter()) {
        assert!((a - b).abs() <= 1e-15 * a.abs());
    }
}

#[test]
fn egm_degree_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.gfc");
    write_egm2008(&random_potential(140, 2.0, 1, 6371.0), fs::File::create(&path).unwrap()).unwrap();
    assert_eq!(load_egm2008(&path, 30, 6371.0).unwrap().as_slice().len(), 961);
    assert_eq!(load_egm2008(&path, 130, 6371.0).unwrap().as_slice().len(), 17161);
}

#[test]
fn flat_random_spectrum_is_flat() {
    let deg = 30;
    let mut sums = vec![0.0f64; deg + 1];
    for seed in 0..50 {
        let c = random_potential(deg, 0.0, seed, 1.0);
        for (n, _, v) in c.iter() {
            sums[n] += v * v;
        }
    }
    // per degree, sums[n] ~ chi²(50(2n+1)); standardized squares add up to ~chi²(deg+1)
    let stat: f64 = sums
        .iter()
        .enumerate()
        .map(|(n, &s)| {
            let k = (50 * (2 * n + 1)) as f64;
            (s - k).powi(2) / (2.0 * k)
        })
        .sum();
    let p = 1.0 - ChiSquared::new((deg + 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn decaying_random_spectrum_follows_power_law() {
    let deg = 30;
    let mut sums = vec![0.0f64; deg + 1];
    for seed in 0..50 {
        for (n, _, v) in random_potential(deg, 2.0, seed, 1.0).iter() {
            sums[n] += v * v * ((n + 1) as f64).powi(4);
        }
    }
    for (n, s) in sums.iter().enumerate() {
        let k = (50 * (2 * n + 1)) as f64;
        let mean = s / k;
        assert!((mean - 1.0).abs() <= 5.0 * (2.0 / k).sqrt(), "degree {n}: {mean}");
    }
}

#[test]
fn summary_respects_order_statistics_and_files_are_well_formed() {
    let art = run_experiment(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    report_csv(&art, dir.path()).unwrap();
    let cand = fs::read_to_string(dir.path().join("candidates.csv")).unwrap();
    let mut lines = cand.lines();
    assert_eq!(lines.next(), Some(CANDIDATES_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 27);
    for row in &rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 8);
        for x in &f[1..6] {
            let mantissa = x.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "17 significant digits in {x}");
            x.parse::<f64>().unwrap();
        }
    }
    assert_eq!(rows.iter().filter(|r| r.ends_with(",1,0") || r.ends_with(",1,1")).count(), 1);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some(SUMMARY_HEADER));
    let plot = fs::read_to_string(dir.path().join("plot_data.csv")).unwrap();
    assert_eq!(plot.lines().next(), Some(PLOT_HEADER));
    assert!(!summary.contains('\r'));

    let s = read_summary(&dir.path().join("summary.csv")).unwrap();
    assert!(s.err_opt <= s.err_star && s.err_star <= s.err_max);
    assert!(s.err_opt <= s.err_av && s.err_av <= s.err_max);
    assert!(s.bound_holds);
    assert_eq!(s.k_star, art.report.k_star + 1);
    assert_eq!(s.required_exactness, 70);
    assert!(s.exactness_defect < 1e-10);
    assert_eq!(art.config.localization_anchor, LocalizationAnchor::Center);
}

#[test]
fn snapshot_rerun_is_bit_identical() {
    let cfg = small();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&ExperimentConfig::parse(&a.config.to_text()).unwrap()).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.f1, b.f1);
    assert_eq!(a.f2, b.f2);
    assert_eq!(a.truth, b.truth);
}

#[test]
fn parallel_and_serial_runs_agree() {
    let cfg = small();
    let run_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap())
    };
    let (one, many) = (run_with(1), run_with(4));
    assert_eq!(one.report, many.report);
    for (a, b) in one.candidates.iter().zip(&many.candidates) {
        assert_eq!(a.symbols, b.symbols);
        assert_eq!(a.on_cap, b.on_cap);
    }
}

#[test]
fn different_noise_seeds_differ() {
    let mut cfg = small();
    let a = run_experiment(&cfg).unwrap();
    cfg.noise_seed += 1;
    let b = run_experiment(&cfg).unwrap();
    assert_ne!(a.f1, b.f1);
    assert_eq!(a.truth, b.truth);
}

#[test]
fn single_precision_selection_matches_double() {
    let cap64 = CapGeometry::new(1.0f64, 0.8).unwrap();
    let rule64 = QuadratureRule::cap(cap64, 8);
    let rule32: QuadratureRuleF32 = QuadratureRule::cap(CapGeometry::new(1.0f32, 0.8).unwrap(), 8);
    let truth = random_potential(4, 0.0, 3, 1.0);
    let fields = |scale: &[f64]| -> (Vec<DiscreteField<f64>>, Vec<DiscreteField<f32>>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (k, &s) in scale.iter().enumerate() {
            let pert = random_potential(4, 0.0, 100 + k as u64, 1.0);
            let c = truth.lincomb(1.0, &pert, s).unwrap();
            let c32 = SphCoeffsF32::from_vec(4, 1.0, c.as_slice().iter().map(|&x| x as f32).collect()).unwrap();
            a.push(sample(&c, &rule64).unwrap());
            b.push(sample(&c32, &rule32).unwrap());
        }
        (a, b)
    };
    let (c64, c32) = fields(&[0.5, 0.05, 0.3, 0.9]);
    let t32 = SphCoeffs::from_vec(4, 1.0f32, truth.as_slice().iter().map(|&x| x as f32).collect()).unwrap();
    let k64 = select(&rule64, &c64, &sample(&truth, &rule64).unwrap(), 1e-12).unwrap().k_star;
    let k32 = select(&rule32, &c32, &sample(&t32, &rule32).unwrap(), 1e-6).unwrap().k_star;
    assert_eq!(k64, 1);
    assert_eq!(k32, k64);
}

#[test]
fn exit_codes() {
    assert_eq!(Error::Numerical("x".into()).exit_code(), 3);
    let code = |args: &[&str]| exe().args(args).output().unwrap().status.code();
    assert_eq!(code(&["run", "--preset", "nope"]), Some(1));
    assert_eq!(code(&["run", "--set", "unknown_key=1"]), Some(1));
    assert_eq!(code(&["run", "--config", "/nonexistent/config.txt"]), Some(1));
    assert_eq!(code(&["bogus-subcommand"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gfc");
    fs::write(&bad, "2 0 1 0 0 0\n2 x 1 1 0 0\n").unwrap();
    let out = dir.path().join("t.csv");
    let truth_args = |p: &Path| {
        vec![
            "gen-truth".to_string(),
            "--preset".into(),
            "case1-small".into(),
            "--set".into(),
            "truth_source=egm2008".into(),
            "--set".into(),
            format!("truth_path={}", p.display()),
            "--set".into(),
            "truth_degree=2".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let run = |args: Vec<String>| exe().args(args).output().unwrap().status.code();
    assert_eq!(run(truth_args(&bad)), Some(2));
    assert_eq!(run(truth_args(&dir.path().join("missing.gfc"))), Some(2));
    assert_eq!(run(truth_args(&fixture())), Some(0));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 10);
}

#[test]
fn cli_subcommands_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = exe()
        .args(["check-quadrature", "--preset", "case1", "--export-rule"])
        .arg(dir.path().join("rule.csv"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Gram defect at L = 55"), "{text}");
    let rule = fs::read_to_string(dir.path().join("rule.csv")).unwrap();
    assert_eq!(rule.lines().next(), Some("theta,phi,weight"));
    assert_eq!(rule.lines().count(), 1 + 56 * 111);

    let truth = dir.path().join("truth.csv");
    assert!(exe().args(["gen-truth", "--preset", "case1", "--out"]).arg(&truth).output().unwrap().status.success());
    assert_eq!(fs::read_to_string(&truth).unwrap().lines().count(), 1 + 961);

    let cfg_path = dir.path().join("small.txt");
    fs::write(&cfg_path, "scenario = case1-small\nbeta_grid = 1, 100\n").unwrap();
    let runs = dir.path().join("runs");
    let status = exe()
        .args(["run", "--repeat", "2", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&runs)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(runs.join("run_001/candidates.csv").is_file());
    assert!(runs.join("run_002/summary.csv").is_file());
    let plot = fs::read_to_string(runs.join("plot_data.csv")).unwrap();
    assert_eq!(plot.lines().count(), 3);
    assert_eq!(collect_summaries(&runs).unwrap().len(), 2);
    let cand = fs::read_to_string(runs.join("run_001/candidates.csv")).unwrap();
    assert_eq!(cand.lines().count(), 1 + 18);

    let rep = exe().args(["report", "--dir"]).arg(&runs).output().unwrap();
    assert!(rep.status.success());
    assert!(String::from_utf8(rep.stdout).unwrap().contains("of 2 runs"));
}
