use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rattoep"))
}

fn example(id: u8) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("data/examples/example{id}.json"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(dir.parent().unwrap()).unwrap();
    dir
}

fn run(out: &Path, args: &[&str]) -> Output {
    bin()
        .arg("--out")
        .arg(out)
        .args(["--grid-n", "48", "--n-theta", "64"])
        .args(args)
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect(),
        Err(_) => Vec::new(),
    };
    v.sort();
    v
}

#[test]
fn spectrum_writes_all_outputs() {
    let out = scratch("spectrum");
    let o = run(&out, &["spectrum", example(3).to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        files(&out),
        ["ess_spectrum.csv", "ess_spectrum.json", "ess_spectrum.svg", "regions.csv", "regions.svg", "verdicts.json"]
    );
    let csv = fs::read_to_string(out.join("regions.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("re,im,label"));
    assert_eq!(csv.lines().count(), 1 + 48 * 48);
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (scratch("det_a"), scratch("det_b"));
    for dir in [&a, &b] {
        let o = run(dir, &["spectrum", example(2).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["ess_spectrum.csv", "regions.csv", "verdicts.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn resolvent_point() {
    let out = scratch("resolvent");
    let o = run(&out, &["resolvent", "--lambda=-2.5,0", example(2).to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("resolvent.json")).unwrap()).unwrap();
    let text = v.to_string();
    assert!(text.contains("Resolvent") && text.contains("stabilizing-solution"), "{text}");
}

#[test]
fn bad_inputs_exit_2_and_write_nothing() {
    let dir = scratch("bad");
    fs::create_dir_all(&dir).unwrap();
    let broken = dir.join("broken.json");
    fs::write(&broken, "{\"m\": 1, \"entries\": [[{\"num\": [[1, 0]]").unwrap();
    let zero_den = dir.join("zero_den.json");
    fs::write(&zero_den, r#"{"m": 1, "entries": [[{"num": [[1, 0]], "den": [[0, 0]]}]]}"#).unwrap();
    let missing = dir.join("missing.json");
    let out = dir.join("out");
    for input in [&broken, &zero_den, &missing] {
        let o = run(&out, &["spectrum", input.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{}", input.display());
        assert!(files(&out).is_empty(), "{:?}", files(&out));
    }
    let o = run(&out, &["--rank-tol=-1", "e-set", example(5).to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&out, &["example", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(files(&out).is_empty());
}

#[test]
fn unwritable_output_exits_1() {
    let dir = scratch("unwritable");
    fs::create_dir_all(&dir).unwrap();
    let blocker = dir.join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let o = run(&blocker, &["e-set", example(5).to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fs::read_to_string(&blocker).unwrap(), "not a directory");
}

#[test]
fn example_command_passes_and_leaves_no_temporaries() {
    let out = scratch("example5");
    let o = run(&out, &["example", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let names = files(&out);
    assert!(!names.is_empty());
    assert!(names.iter().all(|n| !n.contains(".tmp")), "{names:?}");
}

#[test]
fn factored_denominator_alone_is_enough() {
    let dir = scratch("factored");
    fs::create_dir_all(&dir).unwrap();
    let input = dir.join("symbol.json");
    fs::write(
        &input,
        r#"{"m": 1, "entries": [[{"num": [[1, 0]], "den_factored": {"lead": [1, 0], "factors": [[[1, 0], 2]]}}]]}"#,
    )
    .unwrap();
    let out = dir.join("out");
    let o = run(&out, &["realize", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let real: serde_json::Value = serde_json::from_slice(&fs::read(out.join("realization.json")).unwrap()).unwrap();
    assert_eq!(real["alpha"]["rows"], 2);

    let no_den = dir.join("no_den.json");
    fs::write(&no_den, r#"{"m": 1, "entries": [[{"num": [[1, 0]]}]]}"#).unwrap();
    let o = run(&dir.join("out2"), &["realize", no_den.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
