mod common;

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use caption_cli::app::{self, Workspace};

fn run(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caption-ir"))
        .arg("--data")
        .arg(data)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = common::data_copy();
    assert_eq!(run(dir.path(), &["parse", ""]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["parse", "missile", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(2));
    let out = run(dir.path(), &["parse", "the of with"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    assert_eq!(run(&dir.path().join("missing"), &["build"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["build"]).status.code(), Some(0));
}

#[test]
fn parse_output_forms() {
    let dir = common::data_copy();
    let out = run(dir.path(), &["parse", "big missile on stand", "--n", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "only two attachments exist");
    for (i, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.splitn(3, '\t').collect();
        assert_eq!(fields[0], (i + 1).to_string());
        assert!(fields[1].parse::<f64>().is_ok());
        assert!(fields[2].starts_with("(CAPTION head="));
    }

    let out = run(dir.path(), &["parse", "big missile on stand", "--meaning"]);
    let text = stdout(&out);
    assert!(text.ends_with("ako v2 projectile-1\nako v4 base-2\nprop v2 big-1\nrel locationover v2 v4\n"));

    let out = run(dir.path(), &["parse", "missile", "--trees"]);
    assert!(stdout(&out).contains("\n  NP projectile-1 "));

    let out = run(dir.path(), &["parse", "personnel mounting ghw-12 on an f-18"]);
    assert!(stdout(&out).starts_with("# unknown ghw-12 "));
}

#[test]
fn index_then_query() {
    let dir = common::data_copy();
    let out = run(dir.path(), &["index"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().last(), Some("indexed 52 captions, 0 without a parse"));
    assert!(dir.path().join("index/records.json").exists());

    let out = run(dir.path(), &["query", "missile mounted on aircraft"]);
    let ids: Vec<String> = stdout(&out).lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(ids, ["cap-01", "cap-03", "cap-02"]);
}

#[test]
fn gold_training_and_count_maintenance() {
    let dir = common::data_copy();
    let gold = dir.path().join("gold.txt");
    let out = run(dir.path(), &["train", "--gold", gold.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), "trained on 52 trees\n");

    let stats = stdout(&run(dir.path(), &["counts", "stats"]));
    let pairs: usize = stats.lines().next().unwrap().strip_prefix("pairs ").unwrap().parse().unwrap();
    assert!(pairs > 0);
    assert!(stats.contains("index FirstSense "));

    let est = stdout(&run(dir.path(), &["counts", "estimate", "NP->NP+PP/location", "projectile-1", "aircraft-1"]));
    assert!(est.starts_with("estimate "), "{est}");
    assert!(est.contains("\nsource {\"kind\":\"exact\"}\n"), "{est}");
    assert_eq!(run(dir.path(), &["counts", "estimate", "nonsense", "projectile-1", "aircraft-1"]).status.code(), Some(1));

    let out = run(dir.path(), &["counts", "compact"]);
    let line = stdout(&out);
    let remain: usize = line.trim().rsplit(' ').nth(1).unwrap().parse().unwrap();
    assert!(remain < pairs, "{line}");

    let out = run(dir.path(), &["query", "missile mounted on aircraft"]);
    assert_eq!(stdout(&out).lines().count(), 3);

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "cap-01\t(CAPTION head=x\n").unwrap();
    let before = std::fs::read_to_string(dir.path().join("counts.txt")).unwrap();
    assert_eq!(run(dir.path(), &["train", "--gold", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(std::fs::read_to_string(dir.path().join("counts.txt")).unwrap(), before);
}

#[test]
fn interactive_training_reads_commands() {
    let dir = common::data_copy();
    let mut child = Command::new(env!("CARGO_BIN_EXE_caption-ir"))
        .arg("--data")
        .arg(dir.path())
        .args(["train", "--interactive"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"r\na\ns\nq\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).ends_with("reviewed 2 accepted 1 first-try 0 skipped 1\n"));
    assert_eq!(std::fs::read_to_string(dir.path().join("journal.txt")).unwrap(), "cap-01 2\ncap-02 skip\n");
    assert!(!dir.path().join("session.lock").exists());
}

#[test]
fn command_line_and_library_agree() {
    let dir = common::data_copy();
    let ws = Workspace::new(dir.path(), None);
    let model = ws.load_model().unwrap();
    let report = app::parse_report(&model, "sidewinder attached to wing pylon", 4).unwrap();
    let expected: String = report
        .parses
        .iter()
        .map(|p| format!("{}\t{}\t{}\n", p.rank, p.score, p.bracketed))
        .collect();
    assert_eq!(stdout(&run(dir.path(), &["parse", "sidewinder attached to wing pylon", "--n", "4"])), expected);

    let index = ws.load_index(&model).unwrap();
    let hits = app::query_report(&model, &index, "aircraft on road", 5).unwrap();
    let expected: String = hits
        .iter()
        .map(|h| format!("{}\t{}\t{}\t{}\n", h.caption_id, h.matched_predicates, h.best_score, h.text))
        .collect();
    assert_eq!(stdout(&run(dir.path(), &["query", "aircraft on road", "--k", "5"])), expected);
}
