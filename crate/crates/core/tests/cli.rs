use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_irs-alloc");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn allocate_prints_solution() {
    let out = run(&["allocate", "--scheme", "tapr", "--method", "closed-form"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("n_act       100"), "{text}");
    assert!(text.contains("n_pas       1000"), "{text}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.toml");
    std::fs::write(&big, "total_budget = 1000000.0\n").unwrap();
    let out = run(&["--config", big.to_str().unwrap(), "allocate", "--method", "exhaustive"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exhaustive search"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "pt_dbm = \"loud\"\n").unwrap();
    assert_eq!(run(&["--config", bad.to_str().unwrap(), "allocate"]).status.code(), Some(1));
    assert_eq!(run(&["--config", "/nonexistent/cfg.toml", "allocate"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--param", "total-budget", "--from", "5", "--to", "1", "--step", "1"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn optimal_close_to_exhaustive_at_small_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m200.toml");
    std::fs::write(&cfg, "total_budget = 200.0\n").unwrap();
    let mut rates = Vec::new();
    for method in ["optimal", "exhaustive"] {
        let out = dir.path().join(format!("{method}.csv"));
        let status = run(&["--config", cfg.to_str().unwrap(), "allocate", "--method", method, "--out", out.to_str().unwrap()]);
        assert_eq!(status.status.code(), Some(0));
        let rows = read_rows(&out);
        rates.push(rows[0][7].parse::<f64>().unwrap());
    }
    assert!((rates[0] - rates[1]).abs() <= 1e-2);
}

#[test]
fn sweep_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = run(&[
            "sweep", "--param", "total-budget", "--from", "500", "--to", "3000", "--step", "500", "--benchmarks", "all",
            "--seed", "7", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());

    let rows = read_rows(&a);
    assert_eq!(rows.len(), 6 * 6);
    let systems = ["tapr", "tpar", "single-pirs", "single-airs", "hybrid-irs", "double-pirs"];
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[1].parse::<f64>().unwrap(), 500.0 * (1 + i / 6) as f64);
        assert_eq!(&row[2], systems[i % 6]);
        let db: f64 = row[6].parse().unwrap();
        let rate: f64 = row[7].parse().unwrap();
        assert!((rate - (1.0 + 10f64.powf(db / 10.0)).log2()).abs() <= 1e-9);
    }
    let header = String::from_utf8(bytes).unwrap();
    assert!(header.starts_with("sweep_param,value,system,n_act,n_pas,amplitude,snr_db,rate_bps_hz,method,error\n"));
}

#[test]
fn closed_form_sweep_active_counts() {
    let out = run(&["sweep", "--param", "total-budget", "--from", "500", "--to", "3000", "--step", "500", "--method", "closed-form"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    for rec in rd.records() {
        let rec = rec.unwrap();
        let m: f64 = rec[1].parse().unwrap();
        assert_eq!(rec[3].parse::<f64>().unwrap(), (m / 15.0).round());
    }
}

#[test]
fn cost_ratio_sweep_non_increasing() {
    let out = run(&["sweep", "--param", "cost-ratio", "--from", "1", "--to", "20", "--step", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    let recs: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
    for scheme in ["tapr", "tpar"] {
        let rates: Vec<f64> = recs.iter().filter(|r| &r[2] == scheme).map(|r| r[7].parse().unwrap()).collect();
        assert_eq!(rates.len(), 20);
        assert!(rates.windows(2).all(|w| w[1] <= w[0]));
    }
}

fn placement_rates(args: &[&str]) -> Vec<f64> {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    rd.records().map(|r| r.unwrap()[10].parse().unwrap()).collect()
}

#[test]
fn placement_traces() {
    let single = placement_rates(&["placement", "--grid-width", "0", "--grid-depth", "0"]);
    assert_eq!(single.len(), 1);

    let narrow = placement_rates(&["placement", "--scheme", "tpar", "--grid-width", "10", "--grid-depth", "4"]);
    let wide = placement_rates(&["placement", "--scheme", "tpar", "--grid-width", "30", "--grid-depth", "10"]);
    for trace in [&narrow, &wide] {
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
    }
    assert!(wide.last().unwrap() >= narrow.last().unwrap());
}

#[test]
fn verify_passes_and_repeats() {
    let a = run(&["verify", "--seed", "9"]);
    let b = run(&["verify", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compare_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("low_pv.toml");
    std::fs::write(&cfg, "pv_dbm = 5.0\ntotal_budget = 500.0\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "compare", "--epsilon", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("preferred           tpar"), "{text}");
}
