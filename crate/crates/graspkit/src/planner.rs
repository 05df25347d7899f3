//! Two-stage grasp planning on full scenes: global point proposal by
//! interior-distance ranking, then local angle/width selection by either the
//! decision-rule search (oracle mode) or the trained embedding (awp mode).
//!
//! AWP selections are always safety-validated by the geometric rule before
//! acceptance, so any returned grasp re-validates in both modes.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{crop_scene, DatasetError, SceneSample};
use crate::embedding::{
    make_descriptor, prototype_score, select_action, EmbeddingError, EmbeddingModel,
};
use crate::graspability::{evaluate_action, evaluate_grid, RuleConfig, RuleError};
use crate::gripper::{make_action_grid, render_action, ActionRaster, GripperError, GripperSpec};
use crate::raster::{distance_to_boundary_map, BinaryRaster};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("awp mode requires a trained model")]
    ModelRequired,
    #[error("model was trained for gripper {model} but planning uses {requested}")]
    ModelGripperMismatch { model: String, requested: String },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Gripper(#[from] GripperError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    Oracle,
    Awp,
}

impl PlanMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlanMode::Oracle => "oracle",
            PlanMode::Awp => "awp",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanConfig {
    pub mode: PlanMode,
    pub top_k_points: usize,
    pub crop: u32,
    pub na: usize,
    pub nw: usize,
    pub rule: RuleConfig,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            mode: PlanMode::Oracle,
            top_k_points: 5,
            crop: crate::gripper::DEFAULT_CROP,
            na: crate::gripper::DEFAULT_NA,
            nw: crate::gripper::DEFAULT_NW,
            rule: RuleConfig::default(),
        }
    }
}

/// Trained embedding plus its prototypes. `gripper_id` is checked against
/// the planning gripper when present.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub model: EmbeddingModel,
    pub mu_pos: Vec<f64>,
    pub mu_neg: Vec<f64>,
    pub gripper_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grasp {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub width: f64,
    pub quality: f64,
    /// Embedding score in awp mode; equals quality in oracle mode.
    pub score: f64,
}

const NMS_RADIUS: f64 = 8.0;

/// Rank set pixels by interior distance (descending) and suppress anything
/// within 8 px of an already-accepted point. Points are pixel centers.
pub fn propose_points(object_mask: &BinaryRaster, top_k: usize) -> Vec<(f64, f64)> {
    let w = object_mask.width() as usize;
    let dmap = distance_to_boundary_map(object_mask);
    let mut candidates: Vec<(u32, u32, f64)> = object_mask
        .iter_set()
        .map(|(x, y)| (x, y, dmap[y as usize * w + x as usize]))
        .filter(|&(_, _, d)| d > 0.0)
        .collect();
    // distance descending, then raster order for a deterministic total order
    candidates.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.0.cmp(&b.0))
    });
    let mut picked: Vec<(f64, f64)> = Vec::new();
    for (x, y, _) in candidates {
        if picked.len() >= top_k {
            break;
        }
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let clear = picked
            .iter()
            .all(|&(qx, qy)| (px - qx).powi(2) + (py - qy).powi(2) > NMS_RADIUS * NMS_RADIUS);
        if clear {
            picked.push((px, py));
        }
    }
    picked
}

/// Render the action grid at a crop, keeping actions that stay in frame.
fn render_actions(
    spec: &GripperSpec,
    cfg: &PlanConfig,
) -> Result<Vec<ActionRaster>, PlanError> {
    let grid = make_action_grid(spec, cfg.na, cfg.nw);
    let mut actions = Vec::with_capacity(grid.len());
    for (_, _, theta, w) in grid.iter() {
        match render_action(spec, theta, w, cfg.crop) {
            Ok(a) => actions.push(a),
            Err(GripperError::GripperOutOfFrame) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(actions)
}

/// Plan one grasp: walk proposed points in rank order and return the first
/// accepted action, or None when every point exhausts.
pub fn plan(
    scene: &SceneSample,
    spec: &GripperSpec,
    cfg: &PlanConfig,
    model: Option<&ModelBundle>,
) -> Result<Option<Grasp>, PlanError> {
    let bundle = match cfg.mode {
        PlanMode::Oracle => None,
        PlanMode::Awp => {
            let b = model.ok_or(PlanError::ModelRequired)?;
            if let Some(id) = &b.gripper_id {
                if id != &spec.id {
                    return Err(PlanError::ModelGripperMismatch {
                        model: id.clone(),
                        requested: spec.id.clone(),
                    });
                }
            }
            Some(b)
        }
    };
    let points = propose_points(&scene.object_mask, cfg.top_k_points);
    if points.is_empty() {
        return Ok(None);
    }
    // action geometry is point-independent; render once
    let actions = render_actions(spec, cfg)?;
    if actions.is_empty() {
        return Ok(None);
    }
    for &(px, py) in &points {
        let (object_crop, _) = crop_scene(scene, (px, py), cfg.crop)?;
        match cfg.mode {
            PlanMode::Oracle => {
                let (outcomes, best) = evaluate_grid(&actions, &object_crop, spec, &cfg.rule)?;
                if let Some(i) = best {
                    return Ok(Some(Grasp {
                        x: px,
                        y: py,
                        theta: actions[i].theta,
                        width: actions[i].width,
                        quality: outcomes[i].quality,
                        score: outcomes[i].quality,
                    }));
                }
            }
            PlanMode::Awp => {
                let b = bundle.unwrap();
                let (i, theta, width) = select_action(
                    &b.model,
                    (&b.mu_pos, &b.mu_neg),
                    &object_crop,
                    &actions,
                    spec,
                )?;
                let outcome = evaluate_action(&actions[i], &object_crop, spec, &cfg.rule)?;
                if outcome.success {
                    let d = make_descriptor(&object_crop, &actions[i], spec)?;
                    let score = prototype_score(&b.model, &d, &b.mu_pos, &b.mu_neg)?;
                    return Ok(Some(Grasp {
                        x: px,
                        y: py,
                        theta,
                        width,
                        quality: outcome.quality,
                        score,
                    }));
                }
                // embedding picked a failing action at this point: fall
                // through to the next proposed point
            }
        }
    }
    Ok(None)
}

/// One slot of a batch planning run.
#[derive(Debug, Clone)]
pub struct PlanResult {
    pub scene_id: String,
    pub grasp: Option<Grasp>,
    pub error: Option<String>,
    pub elapsed_ms: f64,
}

/// Plan every scene; per-scene errors are recorded in-slot and never abort
/// the batch. Results stay positionally aligned with the input.
pub fn plan_batch(
    scenes: &[SceneSample],
    spec: &GripperSpec,
    cfg: &PlanConfig,
    model: Option<&ModelBundle>,
) -> Vec<PlanResult> {
    scenes
        .par_iter()
        .map(|scene| {
            let start = Instant::now();
            let outcome = plan(scene, spec, cfg, model);
            let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
            match outcome {
                Ok(grasp) => PlanResult {
                    scene_id: scene.scene_id.clone(),
                    grasp,
                    error: None,
                    elapsed_ms,
                },
                Err(e) => PlanResult {
                    scene_id: scene.scene_id.clone(),
                    grasp: None,
                    error: Some(e.to_string()),
                    elapsed_ms,
                },
            }
        })
        .collect()
}

/// Single-line JSON for a planned grasp, floats fixed at 6 decimals.
pub fn plan_json_line(
    result: &PlanResult,
    gripper_id: &str,
    mode: PlanMode,
) -> String {
    match &result.grasp {
        Some(g) => format!(
            "{{\"scene_id\":{},\"gripper_id\":{},\"x\":{:.6},\"y\":{:.6},\"theta\":{:.6},\"width\":{:.6},\"quality\":{:.6},\"score\":{:.6},\"mode\":\"{}\",\"elapsed_ms\":{:.3}}}",
            serde_json::to_string(&result.scene_id).unwrap(),
            serde_json::to_string(gripper_id).unwrap(),
            g.x,
            g.y,
            g.theta,
            g.width,
            g.quality,
            g.score,
            mode.as_str(),
            result.elapsed_ms
        ),
        None => format!(
            "{{\"scene_id\":{},\"gripper_id\":{},\"grasp\":null,\"mode\":\"{}\",\"elapsed_ms\":{:.3}}}",
            serde_json::to_string(&result.scene_id).unwrap(),
            serde_json::to_string(gripper_id).unwrap(),
            mode.as_str(),
            result.elapsed_ms
        ),
    }
}
