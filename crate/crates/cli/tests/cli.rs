use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use reanchor::backends::{patch_embed, EmbeddingRecord};
use reanchor::featurepool::object_patch;
use reanchor::maskmedia::{d4_apply, rle_decode, CropParams, D4Transform, RleMask};
use reanchor::synth::{generate, preset, Family};
use serde_json::Value;

fn reanchor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reanchor"))
        .args(args)
        .env_remove("REANCHOR_CONFIG")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Relative path → bytes for every file under `dir` except manifests.
fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "manifest.json" {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn synth(dir: &Path, family: &str, seed: u64) -> PathBuf {
    let out = dir.join(format!("{family}{seed}"));
    let o = reanchor(&["synth", "--family", family, "--seed", &seed.to_string(), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

fn mine(video: &Path, extra: &[&str]) -> Output {
    let (frames, first, out) = (video.join("frames"), video.join("gt/target/00000.png"), video.join("mined/schedule.json"));
    let mut args = vec!["mine", "--frames", p(&frames), "--first-mask", p(&first), "--out", p(&out)];
    args.extend_from_slice(extra);
    reanchor(&args)
}

#[test]
fn help_version_and_usage_errors() {
    assert_eq!(code(&reanchor(&["--help"])), 0);
    assert_eq!(code(&reanchor(&["--version"])), 0);
    assert_eq!(code(&reanchor(&["mine", "--help"])), 0);
    assert_eq!(code(&reanchor(&[])), 1);
    assert_eq!(code(&reanchor(&["frobnicate"])), 1);
    let o = reanchor(&["synth", "--family", "spiral", "--out", "x"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("combined"));
    // both detector sources at once
    let o = reanchor(&[
        "mine", "--frames", "f", "--first-mask", "m", "--detections", "d", "--oracle", "g", "--patch-embed", "--out", "s",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn synth_is_deterministic_and_laid_out() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "distractor", 7);
    let b = dir.path().join("again");
    let o = reanchor(&["synth", "--family", "distractor", "--seed", "7", "--out", p(&b)]);
    assert_eq!(code(&o), 0);
    assert_eq!(files(&a), files(&b));

    assert!(a.join("frames/00119.png").is_file());
    assert!(a.join("gt/target/00119.png").is_file());
    assert!(a.join("gt/d1/00000.png").is_file());
    let scenario = json(&a.join("scenario.json"));
    assert_eq!(scenario["format_version"], 1);
    assert_eq!(scenario["seed"], 7);
    assert_eq!(json(&a.join("manifest.json"))["command"], "synth");
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.toml");
    fs::write(&short, "[synth]\nnum_frames = 1\n").unwrap();
    let o = reanchor(&["--config", p(&short), "synth", "--family", "baseline", "--out", p(&dir.path().join("x"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("invalid scenario"), "{}", stderr(&o));

    let typo = dir.path().join("typo.toml");
    fs::write(&typo, "[select]\nkay = 2\n").unwrap();
    let o = reanchor(&["--config", p(&typo), "synth", "--family", "baseline", "--out", p(&dir.path().join("x"))]);
    assert_eq!(code(&o), 1);

    let small = dir.path().join("small.toml");
    fs::write(&small, "[synth]\nwidth = 64\nheight = 48\nnum_frames = 10\n").unwrap();
    let out = dir.path().join("small");
    let o = Command::new(env!("CARGO_BIN_EXE_reanchor"))
        .args(["synth", "--family", "baseline", "--out", p(&out)])
        .env("REANCHOR_CONFIG", &small)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("frames/00009.png").is_file());
    assert!(!out.join("frames/00010.png").exists());
    let img = image::open(out.join("frames/00000.png")).unwrap();
    assert_eq!((img.width(), img.height()), (64, 48));
}

fn anchor_frames(schedule: &Value) -> Vec<(u64, String)> {
    schedule["anchors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["frame"].as_u64().unwrap(), a["source"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn mine_with_oracle_obeys_selection_rules() {
    let dir = tempfile::tempdir().unwrap();
    let v = synth(dir.path(), "combined", 2);
    let o = mine(&v, &["--oracle", p(&v.join("gt")), "--patch-embed"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let schedule = json(&v.join("mined/schedule.json"));
    assert_eq!(schedule["format_version"], 1);
    assert_eq!(schedule["video"], "combined2");
    let anchors = anchor_frames(&schedule);
    assert_eq!(anchors[0], (0, "first_frame".to_string()));
    let mined: Vec<u64> = anchors[1..].iter().map(|a| a.0).collect();
    assert!(!mined.is_empty() && mined.len() <= 3, "{mined:?}");
    assert!(anchors[1..].iter().all(|a| a.1 == "mined"));
    assert!(mined.windows(2).all(|w| w[1] - w[0] > 15), "{mined:?}");

    let scores = fs::read_to_string(v.join("mined/scores.csv")).unwrap();
    assert!(scores.starts_with("frame,id,score,best_transform\n"));
    let pool = json(&v.join("mined/pool.json"));
    assert_eq!(pool["entries"].as_array().unwrap().len(), 8);
    assert_eq!(pool["entries"][0]["transform"], "identity");
    assert!(v.join("mined/manifest.json").is_file());
}

#[test]
fn mine_degenerates_to_first_frame() {
    let dir = tempfile::tempdir().unwrap();
    let v = synth(dir.path(), "transform", 1);

    let k0 = dir.path().join("k0.toml");
    fs::write(&k0, "[select]\nk = 0\n").unwrap();
    let o = mine(&v, &["--config", p(&k0), "--oracle", p(&v.join("gt")), "--patch-embed"]);
    assert_eq!(code(&o), 0);
    assert_eq!(anchor_frames(&json(&v.join("mined/schedule.json"))).len(), 1);

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = mine(&v, &["--detections", p(&empty), "--patch-embed"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    let schedule = json(&v.join("mined/schedule.json"));
    assert_eq!(anchor_frames(&schedule), [(0, "first_frame".to_string())]);
    assert_eq!(
        json(&v.join("mined/manifest.json"))["warnings"].as_array().unwrap().len(),
        1
    );

    let bad = dir.path().join("bad.jsonl");
    fs::write(
        &bad,
        "{\"frame\":1,\"id\":\"a\",\"bbox\":[0,0,1,1],\"rle\":{\"size\":[128,128],\"counts\":[16384]},\"det_score\":1}\nnot json\n",
    )
    .unwrap();
    let o = mine(&v, &["--detections", p(&bad), "--patch-embed"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

/// Embeddings an external extractor would export for this video: pool
/// entries under frame -1 and one record per ground-truth instance.
fn export_embeddings(v: &Path, family: Family, seed: u64, path: &Path) {
    let (frames, gt) = generate(&preset(family, seed)).unwrap();
    let crop = CropParams::default();
    let mut out = fs::File::create(path).unwrap();
    let mut emit = |frame: i64, id: &str, vec: Vec<f64>| {
        let rec = EmbeddingRecord {
            frame,
            id: id.to_string(),
            vec,
        };
        writeln!(out, "{}", serde_json::to_string(&rec).unwrap()).unwrap();
    };
    let base = object_patch(&frames[0], &gt.target_masks()[0], crop).unwrap();
    for t in D4Transform::ALL {
        emit(-1, t.name(), patch_embed::<f64>(&d4_apply(&base, t)).values().to_vec());
    }
    for (f, instances) in gt.frames.iter().enumerate().skip(1) {
        for (id, mask) in instances {
            if !mask.is_empty() {
                emit(f as i64, id, patch_embed::<f64>(&object_patch(&frames[f], mask, crop).unwrap()).values().to_vec());
            }
        }
    }
    assert!(v.is_dir());
}

#[test]
fn exported_embeddings_reproduce_the_patch_embedder() {
    let dir = tempfile::tempdir().unwrap();
    let v = synth(dir.path(), "combined", 4);
    let emb = dir.path().join("emb.jsonl");
    export_embeddings(&v, Family::Combined, 4, &emb);

    let o = mine(&v, &["--oracle", p(&v.join("gt")), "--patch-embed"]);
    assert_eq!(code(&o), 0);
    let a = json(&v.join("mined/schedule.json"));
    let o = mine(&v, &["--oracle", p(&v.join("gt")), "--embeddings", p(&emb)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // file vectors are renormalized on load, so scores may move in the last bit
    let b = json(&v.join("mined/schedule.json"));
    let (a, b) = (a["anchors"].as_array().unwrap(), b["anchors"].as_array().unwrap());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!((&x["frame"], &x["id"], &x["rle"]), (&y["frame"], &y["id"], &y["rle"]));
        assert!((x["score"].as_f64().unwrap() - y["score"].as_f64().unwrap()).abs() < 1e-12);
    }

    let schedule = v.join("mined/schedule.json");
    let (frames, gt) = (v.join("frames"), v.join("gt"));
    let track = |embedder: &[&str], out: &Path| {
        let mut args = vec![
            "track",
            "--frames",
            p(&frames),
            "--schedule",
            p(&schedule),
            "--oracle",
            p(&gt),
            "--out",
            p(out),
        ];
        args.extend_from_slice(embedder);
        let o = reanchor(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    let (t1, t2) = (dir.path().join("t1"), dir.path().join("t2"));
    track(&["--patch-embed"], &t1);
    track(&["--embeddings", p(&emb)], &t2);
    assert_eq!(files(&t1.join("pred")), files(&t2.join("pred")));
}

#[test]
fn track_reproduces_anchor_masks_and_checks_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let v = synth(dir.path(), "combined", 3);
    assert_eq!(code(&mine(&v, &["--oracle", p(&v.join("gt")), "--patch-embed"])), 0);
    let schedule_path = v.join("mined/schedule.json");
    let out = dir.path().join("track");
    let o = reanchor(&[
        "track",
        "--frames",
        p(&v.join("frames")),
        "--schedule",
        p(&schedule_path),
        "--oracle",
        p(&v.join("gt")),
        "--patch-embed",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let track = json(&out.join("track.json"));
    assert_eq!(track["frames"].as_array().unwrap().len(), 120);
    for a in json(&schedule_path)["anchors"].as_array().unwrap() {
        let frame = a["frame"].as_u64().unwrap();
        let rle: RleMask = serde_json::from_value(a["rle"].clone()).unwrap();
        let want = rle_decode(&rle).unwrap();
        let img = image::open(out.join(format!("pred/{frame:05}.png"))).unwrap().to_luma8();
        for (i, px) in img.pixels().enumerate() {
            let (r, c) = (i as u32 / img.width(), i as u32 % img.width());
            assert_eq!(px[0] == 255, want.get(r, c));
            assert!(px[0] == 0 || px[0] == 255);
        }
        assert_eq!(track["frames"][frame as usize]["tag"], "anchor");
    }

    // an anchor beyond the last frame
    let mut bad = json(&schedule_path);
    bad["anchors"][1]["frame"] = 500.into();
    let bad_path = dir.path().join("bad.json");
    fs::write(&bad_path, bad.to_string()).unwrap();
    let o = reanchor(&[
        "track",
        "--frames",
        p(&v.join("frames")),
        "--schedule",
        p(&bad_path),
        "--oracle",
        p(&v.join("gt")),
        "--patch-embed",
        "--out",
        p(&dir.path().join("t2")),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn eval_reports_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let v = synth(dir.path(), "disappear_reappear", 5);
    let gt = v.join("gt/target");
    let out = dir.path().join("report.json");
    let o = reanchor(&["eval", "--pred", p(&gt), "--gt", p(&gt), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&out);
    assert_eq!(report["f_measure"], "F (dilated-boundary)");
    assert_eq!(report["boundary_tol"], 2);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["video"], "ALL");
    for col in ["J", "F", "J&F", "J&F_d", "J&F_r"] {
        assert_eq!(rows[0][col], 1.0, "{col}");
    }
    assert!(rows[0]["n_disappear"].as_u64().unwrap() > 0);

    let csv_out = dir.path().join("report.csv");
    let o = reanchor(&["eval", "--pred", p(&gt), "--gt", p(&gt), "--out", p(&csv_out), "--boundary-tol", "0"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(&csv_out).unwrap();
    assert!(csv.starts_with("video,object,J,F,J&F,J&F_d,J&F_r,n_frames,n_disappear,n_reappear\n"));
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().last().unwrap().starts_with("ALL,ALL,1,1,1,"));

    // missing prediction frame
    let pred = dir.path().join("pred");
    fs::create_dir_all(&pred).unwrap();
    for e in fs::read_dir(&gt).unwrap() {
        let e = e.unwrap();
        fs::copy(e.path(), pred.join(e.file_name())).unwrap();
    }
    fs::remove_file(pred.join("00119.png")).unwrap();
    let o = reanchor(&["eval", "--pred", p(&pred), "--gt", p(&gt), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("00119.png"), "{}", stderr(&o));

    // extra prediction frame
    fs::copy(gt.join("00000.png"), pred.join("00119.png")).unwrap();
    fs::copy(gt.join("00000.png"), pred.join("00120.png")).unwrap();
    let o = reanchor(&["eval", "--pred", p(&pred), "--gt", p(&gt), "--out", p(&out)]);
    assert_eq!(code(&o), 2);

    let o = reanchor(&["eval", "--pred", p(&pred), "--gt", p(&gt), "--out", p(&dir.path().join("r.txt"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn run_writes_both_modes_and_overlays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = reanchor(&["run", "--family", "combined", "--seed", "1", "--out", p(&out), "--overlays"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("baseline") && stdout.contains("mined"));

    let report = json(&out.join("report.json"));
    let rows = report["rows"].as_array().unwrap();
    let modes: Vec<(&str, &str)> = rows
        .iter()
        .map(|r| (r["video"].as_str().unwrap(), r["mode"].as_str().unwrap()))
        .collect();
    assert_eq!(
        modes,
        [("combined_0001", "baseline"), ("combined_0001", "mined"), ("ALL", "baseline"), ("ALL", "mined")]
    );
    for col in ["J", "F", "J&F", "J&F_d", "J&F_r", "n_frames", "n_disappear", "n_reappear"] {
        assert!(rows[0][col].is_number(), "{col}");
    }
    assert!(rows[1]["J&F"].as_f64().unwrap() > rows[0]["J&F"].as_f64().unwrap());

    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("video,object,mode,J,"));
    let video = out.join("combined_0001");
    for f in ["schedule.json", "scores.csv", "pool.json", "baseline/track.json", "mined/pred/00119.png", "frames/00000.png"] {
        assert!(video.join(f).is_file(), "{f}");
    }
    let overlay = image::open(video.join("overlays/00000.png")).unwrap();
    assert_eq!((overlay.width(), overlay.height()), (2 * 128 + 4, 128));

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["seed"], 1);
    for stage in ["synth", "mine", "track", "eval", "overlays"] {
        assert!(manifest["timings_ms"][stage].is_number(), "{stage}");
    }
}

#[test]
fn run_on_existing_video_matches_family_run() {
    let dir = tempfile::tempdir().unwrap();
    let v = synth(dir.path(), "transform", 6);
    let out = dir.path().join("ext");
    let o = reanchor(&[
        "run",
        "--frames",
        p(&v.join("frames")),
        "--gt",
        p(&v.join("gt")),
        "--video",
        "transform_0006",
        "--seed",
        "6",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fam = dir.path().join("fam");
    let o = reanchor(&["run", "--family", "transform", "--seed", "6", "--out", p(&fam)]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(out.join("report.json")).unwrap(), fs::read(fam.join("report.json")).unwrap());
}
