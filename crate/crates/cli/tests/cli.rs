use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn slcode(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slcode"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn codebook_list_reports_verified_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let out = slcode(tmp.path(), &["codebook", "list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("name,n,k,q,d_min,systematic"));
    for row in ["golay22,22,10,2,8,", "hamming15,15,10,2,4,", "bch63,63,10,2,27,"] {
        assert!(text.lines().any(|l| l.starts_with(row)), "missing {row}");
    }
}

#[test]
fn bad_input_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = slcode(tmp.path(), &["codebook", "export", "--preset", "golay99"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let out = slcode(tmp.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    fs::write(tmp.path().join("bad.toml"), "colour = 3\n").unwrap();
    let out = slcode(tmp.path(), &["--config", "bad.toml", "sweep"]);
    assert_eq!(out.status.code(), Some(1));

    let out = slcode(tmp.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn impossible_search_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = slcode(tmp.path(), &["codebook", "search", "--n", "8", "--k", "6", "--d", "5", "--budget", "20"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("search failure"));
}

#[test]
fn search_writes_a_verified_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = slcode(tmp.path(), &["--seed", "3", "codebook", "search", "--n", "20", "--k", "6", "--d", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("(20, 6, "), "{}", stdout(&out));
    assert!(tmp.path().join("out/codebooks/search-n20-k6-d6-seed3.txt").exists());
}

#[test]
fn sweep_csv_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        "seeds = [3, 4]\n[scene]\nrows = 32\ncols = 96\n[sweep]\ncodes = [\"gray10\", \"hamming15\"]\nratios = [0.5, 2.0]\n",
    )
    .unwrap();
    let run = |out: &str| {
        let o = slcode(tmp.path(), &["--config", "run.toml", "-o", out, "sweep"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let dir = tmp.path().join(out).join("sweep");
        let csv = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.extension().is_some_and(|e| e == "csv"))
            .unwrap();
        (csv.file_name().unwrap().to_owned(), fs::read(&csv).unwrap())
    };
    let (name_a, a) = run("a");
    let (name_b, b) = run("b");
    // the output directory is part of the configuration, so only contents must match
    assert_ne!(name_a, name_b);
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2);
}

#[test]
fn simulate_then_decode_from_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = slcode(
        tmp.path(),
        &["simulate", "--preset", "hamming15", "--rows", "16", "--cols", "64", "--ratio", "4", "--sigma-s", "0"],
    );
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let capture = fs::read_dir(tmp.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("capture-"))
        .unwrap();
    assert!(capture.join("frame_014.pfm").exists());
    let dec = slcode(tmp.path(), &["decode", "--input", capture.to_str().unwrap(), "--method", "hard"]);
    assert!(dec.status.success(), "{}", String::from_utf8_lossy(&dec.stderr));
    assert!(stdout(&dec).contains("hard error rate 0.000000"), "{}", stdout(&dec));
}

#[test]
fn mux_demo_reports_overhead() {
    let tmp = tempfile::tempdir().unwrap();
    let out = slcode(tmp.path(), &["mux", "--demo", "events"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("-> 0,"), "{text}");
    assert!(text.contains("frame overhead 4x"), "{text}");

    let same = slcode(tmp.path(), &["mux", "--demo", "curtains", "--chip", "1100", "--interferer", "1100"]);
    assert!(same.status.success());
    assert!(String::from_utf8_lossy(&same.stderr).contains("identical chips"));
}
