use std::path::Path;
use std::process::{Command, Output};

use searchbridge::{write_jsonl, Record};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_searchbridge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn searchbridge")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_corpus(dir: &Path) -> String {
    let records = vec![
        Record {
            title: "Higgs boson discovery".into(),
            fulltext: "the higgs boson was observed".into(),
            ..Record::new(1)
        },
        Record {
            title: "Electron".into(),
            fulltext: "electron higgs boson higgs".into(),
            ..Record::new(2)
        },
        Record {
            title: "Muon".into(),
            fulltext: "boson higgs muon".into(),
            ..Record::new(3)
        },
        Record {
            title: "Higgs boson".into(),
            fulltext: "a higgs boson candidate".into(),
            ..Record::new(4)
        },
    ];
    let path = dir.join("corpus.jsonl");
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &records).unwrap();
    std::fs::write(&path, buf).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["search", "--corpus", "x", "--field", "body", "q"]).status.code(), Some(1));
    assert_eq!(run(&["rank", "--corpus", "x", "--weights", "title=-1", "q"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(run(&["search", "--corpus", missing.to_str().unwrap(), "x"]).status.code(), Some(2));
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\": 0}\n").unwrap();
    let out = run(&["search", "--corpus", bad.to_str().unwrap(), "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn phrase_search_prints_ids() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    for engine in ["unified", "perfield"] {
        let out = run(&[
            "search", "--corpus", &corpus, "--kind", "phrase", "--engine", engine, "--ids", "Higgs Boson",
        ]);
        assert!(out.status.success());
        assert_eq!(stdout(&out), "hits: 3\n1\n2\n4\n");
    }
}

#[test]
fn rank_prints_table_and_tolerates_zero_weights() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let out = run(&["rank", "--corpus", &corpus, "--weights", "fulltext=1,title=1", "--top-k", "2", "higgs"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "total hits: 4");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].trim_end().ends_with("100.00"));

    let out = run(&["rank", "--corpus", &corpus, "--weights", "fulltext=0", "higgs"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn similar_excludes_source() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let out = run(&["similar", "--corpus", &corpus, "--id", "1", "--min-doc-freq", "1", "--min-term-freq", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for line in stdout(&out).lines().skip(1) {
        assert_ne!(line.split_whitespace().nth(1), Some("1"));
    }
    let out = run(&["similar", "--corpus", &corpus, "--id", "99"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["similar", "--corpus", &corpus, "--id", "1", "--engine", "perfield"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_corpus_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b] {
        let out = run(&["gen-corpus", "--docs", "300", "--seed", "7", "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), 300);

    let out = run(&["search", "--corpus", a.to_str().unwrap(), "--kind", "phrase", "higgs boson"]);
    assert_eq!(stdout(&out), "hits: 90\n");
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = run(&[
        "bench", "--generate", "500", "--reps", "3", "--csv", csv.to_str().unwrap(), "--check-shape",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = stdout(&out);
    assert!(table.contains("Search result count"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "engine,metric,seconds");
    assert_eq!(rows.len(), 13);
    assert_eq!(rows[1], "unified,search_result_count,150");
    assert_eq!(rows[7], "perfield,search_result_count,150");

    assert_eq!(run(&["bench", "--generate", "100", "--reps", "2"]).status.code(), Some(1));
}
