use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wbsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wbsr"))
        .args(args)
        .env("WBSR_WORKERS", "1")
        .output()
        .expect("run wbsr")
}

fn ok(args: &[&str]) -> String {
    let out = wbsr(args);
    assert!(out.status.success(), "wbsr {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn profiles_list_names_the_builtins() {
    let out = ok(&["profiles", "list"]);
    assert_eq!(out.lines().count(), 16);
    for name in ["ism-burst", "analog-broadcast", "mixed"] {
        assert!(out.contains(name), "{out}");
    }
    let shown: Value = serde_json::from_str(&ok(&["profiles", "show", "mixed"])).unwrap();
    assert_eq!(shown["name"], "mixed");
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["generate", "-p", "ism-burst", "-p", "mixed", "-n", "3", "-s", "11", "--record-length", "65536", "-o", s(out)]);
    }
    let mut names: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7, "{names:?}");
    for n in &names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n}");
    }
    let manifest = read_json(&a.join("manifest.json"));
    assert_eq!(manifest["records"][1]["profile"], "mixed");
    assert_eq!(manifest["seed"], 11);
    // A different seed changes the data.
    let c = dir.path().join("c");
    ok(&["generate", "-p", "ism-burst", "-n", "1", "-s", "12", "--record-length", "65536", "-o", s(&c)]);
    assert_ne!(
        std::fs::read(a.join("record_0000.sigmf-data")).unwrap(),
        std::fs::read(c.join("record_0000.sigmf-data")).unwrap()
    );
}

#[test]
fn empty_profile_gives_an_unannotated_record() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("quiet.json");
    let mut p = read_json(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/profiles/ism-burst.json")));
    p["name"] = "quiet".into();
    p["occupancy"] = 0.into();
    std::fs::write(&profile, p.to_string()).unwrap();
    let out = dir.path().join("out");
    ok(&["generate", "-p", s(&profile), "-n", "1", "--record-length", "4096", "-o", s(&out)]);
    let meta = read_json(&out.join("record_0000.sigmf-meta"));
    assert_eq!(meta["annotations"].as_array().unwrap().len(), 0);
    assert_eq!(meta["global"]["core:datatype"], "ci16_le");
    assert_eq!(std::fs::metadata(out.join("record_0000.sigmf-data")).unwrap().len(), 4096 * 4);
}

#[test]
fn detect_and_score_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["generate", "-p", "cellular-uplink", "-n", "1", "-s", "3", "--record-length", "262144", "-o", s(&data)]);
    let record = data.join("record_0000");
    let dets = dir.path().join("dets.jsonl");
    ok(&["detect", "-r", s(&record), "-o", s(&dets)]);
    for line in std::fs::read_to_string(&dets).unwrap().lines() {
        let d: Value = serde_json::from_str(line).unwrap();
        assert!(d["t_start"].as_f64().unwrap() < d["t_end"].as_f64().unwrap());
        assert!(d["f_low"].as_f64().unwrap() < d["f_high"].as_f64().unwrap());
    }
    let report = dir.path().join("report");
    let csv = ok(&["score", "-d", s(&dets), "-r", s(&record), "--coco", "-o", s(&report)]);
    assert!(csv.starts_with("snr_db,iou_threshold,precision,recall,f1,tp,fp,fn\n"));
    assert_eq!(csv.lines().count(), 11);
    assert_eq!(read_json(&report.with_extension("json"))["rows"].as_array().unwrap().len(), 10);
}

/// Detections copied from the record's own annotations.
fn truth_detections(meta: &Value) -> String {
    let fs = meta["global"]["core:sample_rate"].as_f64().unwrap();
    meta["annotations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| {
            let t0 = a["core:sample_start"].as_f64().unwrap();
            let n = a["core:sample_count"].as_f64().unwrap();
            serde_json::json!({
                "t_start": t0,
                "t_end": t0 + n,
                "f_low": a["core:freq_lower_edge"].as_f64().unwrap() / fs,
                "f_high": a["core:freq_upper_edge"].as_f64().unwrap() / fs,
                "score": 1.0,
                "label": a["core:label"],
            })
            .to_string()
                + "\n"
        })
        .collect()
}

#[test]
fn score_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["generate", "-p", "mixed", "-n", "1", "-s", "5", "--record-length", "131072", "-o", s(&data)]);
    let record = data.join("record_0000");
    let meta = read_json(&data.join("record_0000.sigmf-meta"));
    assert!(!meta["annotations"].as_array().unwrap().is_empty());

    let perfect = dir.path().join("perfect.jsonl");
    std::fs::write(&perfect, truth_detections(&meta)).unwrap();
    let out = dir.path().join("p");
    ok(&["score", "-d", s(&perfect), "-r", s(&record), "--iou", "0.5,0.95", "--class-aware", "-o", s(&out)]);
    for row in read_json(&out.with_extension("json"))["rows"].as_array().unwrap() {
        assert_eq!((row["precision"].as_f64(), row["recall"].as_f64(), row["f1"].as_f64()), (Some(1.0), Some(1.0), Some(1.0)));
    }

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = dir.path().join("e");
    ok(&["score", "-d", s(&empty), "-r", s(&record), "-o", s(&out)]);
    let row = &read_json(&out.with_extension("json"))["rows"][0];
    assert_eq!(row["recall"].as_f64(), Some(0.0));
    assert_eq!(row["tp"].as_u64(), Some(0));
}

#[test]
fn sweep_writes_the_stable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"snr_points_db": [-20, 30], "bursts_per_record": 2}"#).unwrap();
    let out = dir.path().join("sweep.csv");
    ok(&["sweep", "--spec", s(&spec), "--repeats", "1", "--record-length", "131072", "-o", s(&out)]);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("snr_db,iou_threshold,precision,recall,f1,tp,fp,fn"));
    assert_eq!(lines.count(), 2);
    assert!(out.with_extension("json").exists());
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    for args in [
        vec!["detect", "-r", s(&missing), "-o", "x.jsonl"],
        vec!["generate", "-p", "no-such-profile", "-o", s(&missing)],
        vec!["profiles", "show", "no-such-profile"],
    ] {
        let out = wbsr(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{args:?}");
    }
}
