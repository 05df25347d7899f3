//! End-to-end CLI pipeline: synth → render → relabel → train → export →
//! plan → eval → ablate, all through the argv entry point.

use std::fs;
use std::path::Path;

use graspkit::cli;
use graspkit::gripper::{gspec_text, presets};

fn run_ok(args: &[&str]) {
    let code = cli::run(args.iter().map(|s| s.to_string()).collect());
    assert_eq!(code, 0, "command failed: {args:?}");
}

fn has_manifest(output: &Path) {
    let mut name = output.file_name().unwrap().to_os_string();
    name.push(".manifest.json");
    assert!(
        output.with_file_name(name).exists(),
        "missing manifest for {}",
        output.display()
    );
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let s = |path: &Path| path.to_str().unwrap().to_string();

    let pj = p("pj.gspec");
    let r3 = p("r3.gspec");
    fs::write(&pj, gspec_text(&presets::parallel_jaw())).unwrap();
    fs::write(&r3, gspec_text(&presets::radial_3f())).unwrap();

    let renders = p("renders");
    run_ok(&[
        "gripper", "render", "--spec", &s(&pj), "--na", "4", "--nw", "2", "--out", &s(&renders),
    ]);
    assert!(renders.join("a00_w00_mask.pgm").exists());
    assert!(renders.join("a03_w01_path.pgm").exists());
    has_manifest(&renders);

    let scenes = p("scenes");
    run_ok(&["synth", "--n", "6", "--seed", "11", "--out", &s(&scenes)]);
    // each scene writes a mask PGM and a grasp-point sidecar
    assert_eq!(fs::read_dir(&scenes).unwrap().count(), 12);
    let holdout = p("holdout");
    run_ok(&["synth", "--n", "3", "--seed", "12", "--out", &s(&holdout)]);

    let labels_pj = p("labels_pj.jsonl");
    let labels_r3 = p("labels_r3.jsonl");
    for (gspec, out) in [(&pj, &labels_pj), (&r3, &labels_r3)] {
        run_ok(&[
            "relabel", "--scenes", &s(&scenes), "--gripper", &s(gspec), "--na", "8", "--nw",
            "4", "--out", &s(out),
        ]);
        has_manifest(out);
    }
    let n_pj = fs::read_to_string(&labels_pj).unwrap().lines().count();
    assert!(n_pj > 0 && n_pj % 32 == 0, "Na*Nw records per grasp point");

    // multi-gripper variant = concatenated label files
    let labels_multi = p("labels_multi.jsonl");
    let mut multi = fs::read_to_string(&labels_pj).unwrap();
    multi.push_str(&fs::read_to_string(&labels_r3).unwrap());
    fs::write(&labels_multi, multi).unwrap();

    let model = p("model.bin");
    run_ok(&[
        "awp", "train", "--labels", &s(&labels_pj), "--scenes", &s(&scenes), "--gripper",
        &s(&pj), "--out", &s(&model), "--epochs", "3", "--triplets", "200", "--seed", "9",
    ]);
    assert!(p("model.bin.meta.json").exists());
    has_manifest(&model);

    let emb = p("embeddings.csv");
    run_ok(&[
        "awp", "export-embeddings", "--model", &s(&model), "--labels", &s(&labels_pj),
        "--scenes", &s(&scenes), "--gripper", &s(&pj), "--out", &s(&emb),
    ]);
    let csv = fs::read_to_string(&emb).unwrap();
    assert_eq!(csv.lines().count(), n_pj + 1, "header plus one row per record");
    has_manifest(&emb);

    for (mode, out_name, model_args) in [
        ("oracle", "plans_oracle.jsonl", vec![]),
        ("awp", "plans_awp.jsonl", vec!["--model".to_string(), s(&model)]),
    ] {
        let plans = p(out_name);
        let mut args: Vec<String> = [
            "plan", "--scene-dir", &s(&holdout), "--gripper", &s(&pj), "--mode", mode, "--na",
            "8", "--nw", "4", "--out", &s(&plans),
        ]
        .iter()
        .map(|a| a.to_string())
        .collect();
        args.extend(model_args);
        assert_eq!(cli::run(args), 0);
        assert_eq!(
            fs::read_to_string(&plans).unwrap().lines().count(),
            3,
            "one line per scene"
        );
        has_manifest(&plans);

        let report = p(&format!("report_{mode}.csv"));
        run_ok(&[
            "eval", "--plans", &s(&plans), "--scenes", &s(&holdout), "--gripper", &s(&pj),
            "--out", &s(&report),
        ]);
        let text = fs::read_to_string(&report).unwrap();
        assert!(text.starts_with("gripper_id,attempts,successes,success_rate_pct,mean_time_ms"));
        has_manifest(&report);
    }

    let ablation = p("ablation.csv");
    run_ok(&[
        "ablate",
        "--variants",
        &format!("{},{}", s(&labels_pj), s(&labels_multi)),
        "--gripper",
        &s(&r3),
        "--train-grippers",
        &format!("{},{}", s(&pj), s(&r3)),
        "--scenes",
        &s(&scenes),
        "--holdout",
        &s(&holdout),
        "--seed",
        "1",
        "--epochs",
        "2",
        "--triplets",
        "100",
        "--out",
        &s(&ablation),
    ]);
    let text = fs::read_to_string(&ablation).unwrap();
    // header, two variant rows, average row
    assert_eq!(text.lines().count(), 4, "unexpected report: {text}");
    has_manifest(&ablation);
}
