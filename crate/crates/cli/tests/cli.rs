use std::fs;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use ttg_core::generator::{read_dataset, DatasetSummary};
use ttg_core::schema::{check_feasibility, parse_inventory, parse_itinerary, parse_request, Itinerary};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ttg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttg")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let r1 = ttg(&["generate", "--n", "100", "--seed", "1", "--out", path_str(&a)]);
    let r2 = ttg(&["generate", "--n", "100", "--seed", "1", "--out", path_str(&b), "--jobs", "3"]);
    assert_eq!((code(&r1), code(&r2)), (0, 0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(r1.stdout, r2.stdout);
    let c = dir.path().join("c.jsonl");
    ttg(&["generate", "--n", "100", "--seed", "2", "--out", path_str(&c)]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn generate_summary_buckets_sum_to_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.jsonl");
    let r = ttg(&["generate", "--n", "1000", "--seed", "4", "--out", path_str(&out)]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    let bucket_total = |title: &str| -> usize {
        text.split(title)
            .nth(1)
            .unwrap()
            .lines()
            .skip(1)
            .take_while(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().last().unwrap().parse::<usize>().unwrap())
            .sum()
    };
    assert_eq!(bucket_total("# airline constraints"), 1000);
    assert_eq!(bucket_total("# hotel constraints"), 1000);
    let pairs = read_dataset(&out).unwrap();
    assert_eq!(pairs.len(), 1000);
    let summary = DatasetSummary::of(&pairs);
    assert!(text.contains(&format!("one-way                {}", summary.one_way)));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["generate", "--n", "0", "--out", "x.jsonl"][..],
        &["generate", "--n", "3"],
        &["generate", "--n", "3", "--out", "x", "--unknown"],
        &["solve", "--request", "r.json"],
        &["eval", "--dataset", "d.jsonl"],
        &["eval", "--dataset", "d.jsonl", "--perturb", "p", "--estimates", "e"],
        &["frobnicate"],
    ] {
        let r = ttg(args);
        assert_eq!(code(&r), 2, "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let r = ttg(&["solve", "--request", "/nonexistent.json", "--inventory", "/nonexistent.json"]);
    assert_eq!(code(&r), 1);
    let bad = dir.path().join("config.json");
    fs::write(&bad, r#"{"p_one_way": 3.0}"#).unwrap();
    let out = dir.path().join("d.jsonl");
    let r = ttg(&["generate", "--n", "2", "--config", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("error"));
}

fn solve_fixture(objective: &str, out: &Path) -> Output {
    ttg(&[
        "solve",
        "--request",
        path_str(&fixture("appendix_request.json")),
        "--inventory",
        path_str(&fixture("appendix_inventory.json")),
        "--objective",
        objective,
        "--out",
        path_str(out),
    ])
}

#[test]
fn solve_fixture_within_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let it_path = dir.path().join("it.json");
    let r = solve_fixture("min_cost", &it_path);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let request = parse_request(&fs::read_to_string(fixture("appendix_request.json")).unwrap()).unwrap();
    let inventory =
        parse_inventory(&fs::read_to_string(fixture("appendix_inventory.json")).unwrap(), &request).unwrap();
    let it = parse_itinerary(&fs::read_to_string(&it_path).unwrap()).unwrap();
    assert!(check_feasibility(&it, &request, &inventory).unwrap().feasible);
    assert!(it.flight_cost <= request.budget.flight_total_budget.unwrap());
    assert!(it.hotel_cost <= request.budget.hotel_total_budget.unwrap());
    let text = stdout(&r);
    for id in &it.chosen_flights {
        assert!(text.contains(id.as_str()));
    }
    let total = text.lines().find(|l| l.starts_with("total")).unwrap();
    assert_eq!(total.split_whitespace().collect::<Vec<_>>(), ["total", "$1344.00"]);
    // Timing goes to stderr so stdout stays stable.
    assert!(String::from_utf8_lossy(&r.stderr).contains("load"));
}

#[test]
fn repeated_solves_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<(Vec<u8>, Vec<u8>)> = (0..3)
        .map(|i| {
            let p = dir.path().join(format!("it{i}.json"));
            let r = solve_fixture("better_flight", &p);
            assert_eq!(code(&r), 0);
            (r.stdout, fs::read(p).unwrap())
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn missing_route_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut inv: Value = serde_json::from_str(&fs::read_to_string(fixture("appendix_inventory.json")).unwrap()).unwrap();
    inv["flights"].as_array_mut().unwrap().retain(|f| f["segment"] != 0);
    let inv_path = dir.path().join("inv.json");
    fs::write(&inv_path, inv.to_string()).unwrap();
    let r = ttg(&[
        "solve",
        "--request",
        path_str(&fixture("appendix_request.json")),
        "--inventory",
        path_str(&inv_path),
    ]);
    assert_eq!(code(&r), 3);
    assert!(r.stdout.is_empty());

    // Flights on every segment, none within budget.
    let mut req: Value = serde_json::from_str(&fs::read_to_string(fixture("appendix_request.json")).unwrap()).unwrap();
    req["budget"]["flight_total_budget"] = json!(100);
    let req_path = dir.path().join("req.json");
    fs::write(&req_path, req.to_string()).unwrap();
    let r = ttg(&[
        "solve",
        "--request",
        path_str(&req_path),
        "--inventory",
        path_str(&fixture("appendix_inventory.json")),
    ]);
    assert_eq!(code(&r), 3);
}

fn mean_rating(it: &Itinerary, inv: &ttg_core::Inventory) -> f64 {
    ttg_cli::render::mean_hotel_rating(it, inv).unwrap()
}

#[test]
fn better_hotel_rating_is_at_least_min_cost() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    assert_eq!(code(&ttg(&["generate", "--n", "15", "--seed", "9", "--out", path_str(&data)])), 0);
    for (i, pair) in read_dataset(&data).unwrap().into_iter().enumerate() {
        if pair.request.away_blocks().is_empty() {
            continue;
        }
        let req = dir.path().join(format!("r{i}.json"));
        let inv = dir.path().join(format!("i{i}.json"));
        fs::write(&req, serde_json::to_string(&pair.request).unwrap()).unwrap();
        fs::write(&inv, serde_json::to_string(&pair.inventory).unwrap()).unwrap();
        let mut ratings = Vec::new();
        for objective in ["min_cost", "better_hotel"] {
            let out = dir.path().join(format!("{objective}{i}.json"));
            let r = ttg(&[
                "solve",
                "--request",
                path_str(&req),
                "--inventory",
                path_str(&inv),
                "--objective",
                objective,
                "--out",
                path_str(&out),
            ]);
            assert_eq!(code(&r), 0);
            let it = parse_itinerary(&fs::read_to_string(out).unwrap()).unwrap();
            ratings.push(mean_rating(&it, &pair.inventory));
        }
        assert!(ratings[1] >= ratings[0], "{}: {ratings:?}", pair.request.request_id);
    }
}

fn dataset(dir: &Path, n: &str, seed: &str) -> PathBuf {
    let data = dir.join(format!("d{seed}.jsonl"));
    assert_eq!(code(&ttg(&["generate", "--n", n, "--seed", seed, "--out", path_str(&data)])), 0);
    data
}

#[test]
fn eval_identity_spec() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), "24", "5");
    let spec = dir.path().join("identity.json");
    fs::write(&spec, r#"{"perturbations": []}"#).unwrap();
    let report = dir.path().join("report.json");
    let r = ttg(&["eval", "--dataset", path_str(&data), "--perturb", path_str(&spec), "--out", path_str(&report)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["em_accuracy"], 1.0);
    assert_eq!(v["ratio_mean"], 1.0);
    assert_eq!(v["ratio_std"], 0.0);
    assert_eq!(v["n_cases"], 24);
    assert!(stdout(&r).contains("exact match             1.000"));
}

#[test]
fn eval_dropped_field_dominates_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), "40", "6");
    let having = read_dataset(&data)
        .unwrap()
        .iter()
        .filter(|p| p.request.airline_constraints.must_not_basic_economy.is_some())
        .count();
    assert!(having > 0);
    let spec = dir.path().join("drop.json");
    fs::write(
        &spec,
        r#"{"perturbations": [{"kind": "drop_constraint", "field": "airline_constraints.must_not_basic_economy", "p": 1.0},
                              {"kind": "drop_constraint", "p": 0.05}]}"#,
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let r = ttg(&[
        "eval",
        "--dataset",
        path_str(&data),
        "--perturb",
        path_str(&spec),
        "--seed",
        "3",
        "--out",
        path_str(&report),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let hist = v["error_histogram"].as_object().unwrap();
    let top = hist.iter().max_by_key(|(_, n)| n.as_u64().unwrap()).unwrap();
    assert_eq!(top.0, "airline_constraints.must_not_basic_economy");
    assert_eq!(top.1.as_u64().unwrap() as usize, having);
}

#[test]
fn eval_estimates_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), "6", "7");
    let pairs = read_dataset(&data).unwrap();
    let lines: String = pairs.iter().map(|p| serde_json::to_string(&p.request).unwrap() + "\n").collect();
    let est = dir.path().join("est.jsonl");
    fs::write(&est, &lines).unwrap();
    let r = ttg(&["eval", "--dataset", path_str(&data), "--estimates", path_str(&est), "--subsets", "3"]);
    assert_eq!(code(&r), 0);
    assert!(stdout(&r).contains("1.000 ± 0.000 over 3 subsets"));

    let short: String = lines.lines().take(5).map(|l| format!("{l}\n")).collect();
    fs::write(&est, short).unwrap();
    let r = ttg(&["eval", "--dataset", path_str(&data), "--estimates", path_str(&est)]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("5 estimates for 6"));
}

#[test]
fn eval_lists_failing_cases() {
    // A ground truth with no feasible itinerary cannot be scored.
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), "5", "8");
    let mut text = String::new();
    for (i, line) in fs::read_to_string(&data).unwrap().lines().enumerate() {
        let mut v: Value = serde_json::from_str(line).unwrap();
        if i == 1 || i == 3 {
            v["request"]["budget"]["total_budget"] = json!(1);
        }
        text += &format!("{v}\n");
    }
    fs::write(&data, text).unwrap();
    let spec = dir.path().join("identity.json");
    fs::write(&spec, r#"{"perturbations": []}"#).unwrap();
    let r = ttg(&["eval", "--dataset", path_str(&data), "--perturb", path_str(&spec)]);
    assert_eq!(code(&r), 1);
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("#1") && err.contains("#3") && !err.contains("#0"), "{err}");
}

#[test]
fn ingest_three_rows_into_one_bucket() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fares.csv");
    fs::write(
        &csv,
        "origin,destination,cabin,total_fare,departure,arrival,airline\n\
         ATL,BOS,coach,120.00,2024-03-01 08:00,2024-03-01 10:00,DL\n\
         ATL,BOS,coach,180.00,2024-03-02 08:00,2024-03-02 10:10,DL\n\
         BOS,ATL,coach,150.00,2024-03-03 12:00,2024-03-03 14:05,B6\n",
    )
    .unwrap();
    let out = dir.path().join("pricemodel.json");
    let r = ttg(&["ingest", "--csv", path_str(&csv), "--out", path_str(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let model: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let buckets = model["flight_buckets"].as_array().unwrap();
    assert_eq!(buckets.len(), 1);
    let expected = (12000f64.ln() + 18000f64.ln() + 15000f64.ln()) / 3.0;
    assert!((buckets[0]["log_mean"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert_eq!(buckets[0]["count"], 3);
    assert!(stdout(&r).contains("rows read 3  used 3  skipped 0"));
}

#[test]
fn profile_prints_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), "100", "10");
    let r = ttg(&["profile", "--dataset", path_str(&data)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = stdout(&r);
    for row in ["Loading constraints", "Solving", "Total"] {
        let line = text.lines().find(|l| l.starts_with(row)).unwrap();
        let (mean, std) = line[22..].split_once('±').unwrap();
        assert!(mean.parse::<f64>().unwrap() >= 0.0);
        assert!(std.parse::<f64>().unwrap() >= 0.0);
    }
    assert!(text.contains("averaged over 100 runs"));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn http_get(port: u16, path: &str) -> std::io::Result<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port))?;
    s.set_read_timeout(Some(Duration::from_secs(5)))?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")?;
    let mut buf = String::new();
    s.read_to_string(&mut buf)?;
    Ok(buf)
}

#[test]
fn serve_answers_health() {
    let port = free_port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_ttg"))
        .args(["serve", "--port", &port.to_string()])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let start = Instant::now();
    let reply = loop {
        match http_get(port, "/api/health") {
            Ok(r) => break r,
            Err(_) if start.elapsed() < Duration::from_secs(20) => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => {
                let _ = child.kill();
                panic!("server never came up: {e}");
            }
        }
    };
    let _ = child.kill();
    let _ = child.wait();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    let body = reply.split("\r\n\r\n").nth(1).unwrap();
    let v: Value = serde_json::from_str(body).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}
