//! Success-rate evaluation, the rectangle match metric, dataset-composition
//! ablations, and CSV/JSON report emission.
//!
//! Desk-scale "success" ground truth is the geometric decision rule itself:
//! a planned grasp counts as a success iff it re-validates under
//! `evaluate_action`. These are not robot success rates.

use std::collections::BTreeMap;
use std::io::Write;

use thiserror::Error;

use crate::dataset::{crop_scene, BaseAnnotation, DatasetError, GraspRecord, SceneSample};
use crate::embedding::{
    compute_prototypes, make_descriptor, mine_triplets, train, EmbeddingError, MiningSample,
    TrainConfig,
};
use crate::graspability::{evaluate_action, RuleConfig, RuleError};
use crate::gripper::{render_action, GripperError, GripperSpec};
use crate::planner::{plan_batch, ModelBundle, PlanConfig, PlanMode, PlanResult};
use crate::raster::{rasterize_polygon, Polygon2D};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("results and scenes are misaligned: {0}")]
    AlignmentError(String),
    #[error("report sink error: {0}")]
    SinkError(#[from] std::io::Error),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Gripper(#[from] GripperError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub gripper_id: String,
    pub attempts: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_time_ms: f64,
    pub per_scene: Vec<(String, bool, f64)>,
}

/// Score aligned planner results against the rule oracle: a scene counts as
/// a success iff a grasp came back and re-validates; absent grasp = failure.
pub fn evaluate_success_rate(
    results: &[PlanResult],
    scenes: &[SceneSample],
    spec: &GripperSpec,
    rule: &RuleConfig,
    crop: u32,
) -> Result<EvalReport, EvalError> {
    if results.len() != scenes.len() {
        return Err(EvalError::AlignmentError(format!(
            "{} results vs {} scenes",
            results.len(),
            scenes.len()
        )));
    }
    let mut per_scene = Vec::with_capacity(results.len());
    let mut successes = 0usize;
    let mut total_ms = 0.0;
    for (r, scene) in results.iter().zip(scenes) {
        if r.scene_id != scene.scene_id {
            return Err(EvalError::AlignmentError(format!(
                "result {} vs scene {}",
                r.scene_id, scene.scene_id
            )));
        }
        let ok = match &r.grasp {
            None => false,
            Some(g) => {
                let (object_crop, _) = crop_scene(scene, (g.x, g.y), crop)?;
                match render_action(spec, g.theta, g.width, crop) {
                    Ok(action) => evaluate_action(&action, &object_crop, spec, rule)?.success,
                    Err(GripperError::GripperOutOfFrame) => false,
                    Err(e) => return Err(e.into()),
                }
            }
        };
        if ok {
            successes += 1;
        }
        total_ms += r.elapsed_ms;
        per_scene.push((scene.scene_id.clone(), ok, r.elapsed_ms));
    }
    let attempts = results.len();
    Ok(EvalReport {
        gripper_id: spec.id.clone(),
        attempts,
        successes,
        success_rate: if attempts == 0 {
            0.0
        } else {
            successes as f64 / attempts as f64
        },
        mean_time_ms: if attempts == 0 {
            0.0
        } else {
            total_ms / attempts as f64
        },
        per_scene,
    })
}

fn oriented_rect(x: f64, y: f64, theta: f64, w: f64, h: f64) -> Polygon2D {
    let (s, c) = theta.sin_cos();
    let (ux, uy) = (c, s);
    let (vx, vy) = (-s, c);
    Polygon2D::new(vec![
        (x - w / 2.0 * ux - h / 2.0 * vx, y - w / 2.0 * uy - h / 2.0 * vy),
        (x + w / 2.0 * ux - h / 2.0 * vx, y + w / 2.0 * uy - h / 2.0 * vy),
        (x + w / 2.0 * ux + h / 2.0 * vx, y + w / 2.0 * uy + h / 2.0 * vy),
        (x - w / 2.0 * ux + h / 2.0 * vx, y - w / 2.0 * uy + h / 2.0 * vy),
    ])
    .expect("rectangle with positive extents")
}

pub const DEFAULT_IOU_MIN: f64 = 0.25;
pub const DEFAULT_ANGLE_MAX: f64 = std::f64::consts::PI / 6.0;

/// Standard rectangle metric: the prediction matches iff some ground-truth
/// rectangle has rasterized IoU ≥ `iou_min` and angular difference (mod π)
/// ≤ `angle_max`. The IoU is computed by rasterizing both rectangles at
/// `scene` resolution, reusing the raster set algebra.
pub fn rectangle_match(
    pred: &BaseAnnotation,
    truths: &[BaseAnnotation],
    iou_min: f64,
    angle_max: f64,
    scene: (u32, u32),
) -> Result<bool, EvalError> {
    let (sw, sh) = scene;
    let pr = rasterize_polygon(&oriented_rect(pred.x, pred.y, pred.theta, pred.w, pred.h), sw, sh)
        .map_err(RuleError::from)?;
    for t in truths {
        let dt = (pred.theta - t.theta).rem_euclid(std::f64::consts::PI);
        let dt = dt.min(std::f64::consts::PI - dt);
        if dt > angle_max {
            continue;
        }
        let tr = rasterize_polygon(&oriented_rect(t.x, t.y, t.theta, t.w, t.h), sw, sh)
            .map_err(RuleError::from)?;
        let inter = pr.overlap_count(&tr).map_err(RuleError::from)? as f64;
        let union = pr.count() as f64 + tr.count() as f64 - inter;
        if union > 0.0 && inter / union >= iou_min {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Build descriptor-bearing training samples by re-rendering each record's
/// action against its scene crop. Records whose gripper is unknown or whose
/// action is out of frame are skipped.
pub fn build_mining_samples(
    records: &[GraspRecord],
    scenes: &BTreeMap<String, SceneSample>,
    specs: &BTreeMap<String, GripperSpec>,
    crop: u32,
) -> Result<Vec<MiningSample>, EvalError> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let Some(scene) = scenes.get(&r.scene_id) else {
            continue;
        };
        let Some(spec) = specs.get(&r.gripper_id) else {
            continue;
        };
        let (object_crop, _) = crop_scene(scene, (r.x, r.y), crop)?;
        let action = match render_action(spec, r.theta, r.width, crop) {
            Ok(a) => a,
            Err(GripperError::GripperOutOfFrame) => continue,
            Err(e) => return Err(e.into()),
        };
        let descriptor = make_descriptor(&object_crop, &action, spec)?;
        out.push(MiningSample {
            scene_id: r.scene_id.clone(),
            gripper_id: r.gripper_id.clone(),
            x: r.x,
            y: r.y,
            success: r.success,
            descriptor,
        });
    }
    Ok(out)
}

/// Mine, train, and package a model bundle from labeled samples.
pub fn train_bundle(
    samples: &[MiningSample],
    triplet_count: usize,
    cfg: &TrainConfig,
    gripper_id: Option<String>,
) -> Result<(ModelBundle, Vec<f64>), EvalError> {
    let triplets = mine_triplets(samples, triplet_count, cfg.seed)?;
    let (model, trace) = train(&triplets, cfg)?;
    let (mu_pos, mu_neg) = compute_prototypes(&model, samples)?;
    Ok((
        ModelBundle {
            model,
            mu_pos,
            mu_neg,
            gripper_id,
        },
        trace,
    ))
}

#[derive(Debug, Clone)]
pub struct AblationVariant {
    pub name: String,
    pub records: Vec<GraspRecord>,
}

/// Train one model per dataset variant (same seed) and evaluate each on a
/// shared held-out scene set with awp-mode planning. One report per variant,
/// in variant order; the report's gripper_id carries the variant name.
#[allow(clippy::too_many_arguments)]
pub fn ablation_run(
    variants: &[AblationVariant],
    train_scenes: &BTreeMap<String, SceneSample>,
    specs: &BTreeMap<String, GripperSpec>,
    eval_specs: &[GripperSpec],
    holdout: &[SceneSample],
    plan_cfg: &PlanConfig,
    train_cfg: &TrainConfig,
    triplet_count: usize,
) -> Result<Vec<EvalReport>, EvalError> {
    assert!(!variants.is_empty());
    let mut reports = Vec::with_capacity(variants.len());
    for variant in variants {
        let samples = build_mining_samples(&variant.records, train_scenes, specs, plan_cfg.crop)?;
        let (bundle, _) = train_bundle(&samples, triplet_count, train_cfg, None)?;
        let mut per_scene = Vec::new();
        let mut successes = 0usize;
        let mut total_ms = 0.0;
        let cfg = PlanConfig {
            mode: PlanMode::Awp,
            ..plan_cfg.clone()
        };
        for spec in eval_specs {
            let results = plan_batch(holdout, spec, &cfg, Some(&bundle));
            let report = evaluate_success_rate(&results, holdout, spec, &cfg.rule, cfg.crop)?;
            successes += report.successes;
            total_ms += report.mean_time_ms * report.attempts as f64;
            for (id, ok, ms) in report.per_scene {
                per_scene.push((format!("{}:{}", spec.id, id), ok, ms));
            }
        }
        let attempts = per_scene.len();
        reports.push(EvalReport {
            gripper_id: variant.name.clone(),
            attempts,
            successes,
            success_rate: if attempts == 0 {
                0.0
            } else {
                successes as f64 / attempts as f64
            },
            mean_time_ms: if attempts == 0 {
                0.0
            } else {
                total_ms / attempts as f64
            },
            per_scene,
        });
    }
    Ok(reports)
}

/// CSV report: one row per gripper plus an `avg` row of unweighted means.
pub fn emit_report<W: Write>(reports: &[EvalReport], mut sink: W) -> Result<usize, EvalError> {
    writeln!(
        sink,
        "gripper_id,attempts,successes,success_rate_pct,mean_time_ms"
    )?;
    for r in reports {
        writeln!(
            sink,
            "{},{},{},{:.6},{:.6}",
            r.gripper_id,
            r.attempts,
            r.successes,
            r.success_rate * 100.0,
            r.mean_time_ms
        )?;
    }
    if !reports.is_empty() {
        let n = reports.len() as f64;
        let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        writeln!(
            sink,
            "avg,{:.6},{:.6},{:.6},{:.6}",
            mean(|r| r.attempts as f64),
            mean(|r| r.successes as f64),
            mean(|r| r.success_rate * 100.0),
            mean(|r| r.mean_time_ms)
        )?;
    }
    Ok(reports.len())
}

/// JSON mirror of the CSV report with identical fields.
pub fn emit_report_json<W: Write>(reports: &[EvalReport], mut sink: W) -> Result<usize, EvalError> {
    for r in reports {
        writeln!(
            sink,
            "{{\"gripper_id\":{},\"attempts\":{},\"successes\":{},\"success_rate_pct\":{:.6},\"mean_time_ms\":{:.6}}}",
            serde_json::to_string(&r.gripper_id).unwrap(),
            r.attempts,
            r.successes,
            r.success_rate * 100.0,
            r.mean_time_ms
        )?;
    }
    Ok(reports.len())
}
