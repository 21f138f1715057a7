use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn broac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_broac")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("broac-cli-{}-{name}", std::process::id()));
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_prints_golden_output() {
    let scn = fixture("ex4_salaries.scn");
    let o = broac(&["run", scn.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fs::read_to_string(fixture("ex4_salaries.out")).unwrap());
}

#[test]
fn check_exit_code_carries_the_verdict() {
    let scn = fixture("ex1_board_review.scn");
    let path = scn.to_str().unwrap();
    let args = |agent| {
        [
            "check",
            path,
            "--agent",
            agent,
            "--item",
            "review_memo",
            "--ability",
            "view TextDocument.body",
        ]
    };

    let denied = broac(&args("ed"));
    assert_eq!(denied.status.code(), Some(1));
    assert_eq!(
        stdout(&denied),
        "DENIED level=2 reason=level_comparison via=OneToSome(deny)\n"
    );

    let allowed = broac(&args("chair"));
    assert_eq!(allowed.status.code(), Some(0));
    assert_eq!(
        stdout(&allowed),
        "ALLOWED level=5 reason=level_comparison via=SomeToSome(allow)\n"
    );

    let unknown = broac(&args("nobody"));
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("unknown entity `nobody`"));
}

#[test]
fn explain_lists_the_trace() {
    let scn = fixture("ex4_salaries.scn");
    let o = broac(&[
        "explain",
        scn.to_str().unwrap(),
        "--agent",
        "pat",
        "--item",
        "salary_sheet",
        "--ability",
        "view TextDocument.body",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains("* 2 OneToSome(allow) agent:pat collection:salaries"));
    assert!(lines[2].contains("5 SomeToSome(deny) group:staff collection:salaries"));
}

#[test]
fn exit_codes_for_bad_input() {
    let bad = scratch("bad.scn", "agent alice\npermit alice item:x \"y\" allow\n");
    let o = broac(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column 8"), "{}", stderr(&o));

    let dangling = scratch("dangling.scn", "agent alice\ncheck alice ghost \"delete\"\n");
    let o = broac(&["run", dangling.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));

    let forced = fixture("loophole_forced.scn");
    let o = broac(&["run", forced.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 8"));

    let missing = broac(&["run", "/nonexistent/file.scn"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn lint_reports_anonymous_loopholes() {
    let scn = scratch(
        "lint.scn",
        concat!(
            "agent alice\nagent bob\nitem doc type=TextDocument creator=alice\n",
            "permit agent:bob item:doc \"view TextDocument.body\" deny\n",
            "permit all all \"view TextDocument.body\" allow\n",
        ),
    );
    let o = broac(&["lint", scn.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("FLAGGED bob doc \"view TextDocument.body\""), "{out}");
    assert!(out.ends_with("1 loophole(s) found\n"), "{out}");
}

#[test]
fn fuzz_finds_no_divergence() {
    let o = broac(&["fuzz", "--trials", "25", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("25 worlds"));
}

#[test]
fn bench_writes_a_report() {
    let report = std::env::temp_dir().join(format!("broac-cli-{}-report.json", std::process::id()));
    let o = broac(&[
        "bench",
        "--sizes",
        "2,4,6",
        "--seed",
        "3",
        "--reps",
        "2",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("R^2"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let points = json["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    for p in points {
        assert!(p["item_count"].as_u64().unwrap() > 0);
        assert!(p["t_filtered_ns"].is_number() && p["t_unfiltered_ns"].is_number());
    }
    assert!(json["filtered"]["r_squared"].is_number());
    assert_eq!(json["reps"], 2);

    let unsorted = broac(&["bench", "--sizes", "4,2", "--report", report.to_str().unwrap()]);
    assert_eq!(unsorted.status.code(), Some(2));
}
