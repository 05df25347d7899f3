//! Angle-Width Predictor at desk scale: hand-crafted scene–action
//! descriptors, an affine embedding trained with the triplet hinge loss by
//! plain SGD, and prototype-based action scoring.
//!
//! Descriptors pack three 16×16 block-mean channels (object crop, action
//! mask, action path) plus 8 scalar features. The embedding is a single
//! affine map to 128 dimensions; the loss is
//! max(‖f(A)−f(P)‖² − ‖f(A)−f(N)‖² + α, 0).

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gripper::{ActionRaster, GripperSpec};
use crate::raster::BinaryRaster;

pub const POOL_CELLS: u32 = 16;
pub const CHANNEL_DIM: usize = (POOL_CELLS * POOL_CELLS) as usize;
pub const SCALAR_DIM: usize = 8;
pub const DESCRIPTOR_DIM: usize = 3 * CHANNEL_DIM + SCALAR_DIM;
pub const EMBED_DIM: usize = 128;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("descriptor shape error: {0}")]
    DescriptorShape(String),
    #[error("no grasp point has >= 2 successes and >= 1 failure")]
    InsufficientTriplets,
    #[error("training diverged at epoch {0}: non-finite loss")]
    Diverged(usize),
    #[error("action list is empty")]
    NoActions,
    #[error("model file format error: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: Vec<f64>,
}

fn block_means(r: &BinaryRaster, out: &mut Vec<f64>) {
    let bs = r.width() / POOL_CELLS;
    let cell_area = (bs * bs) as f64;
    for cy in 0..POOL_CELLS {
        for cx in 0..POOL_CELLS {
            let mut count = 0u32;
            for y in cy * bs..(cy + 1) * bs {
                for x in cx * bs..(cx + 1) * bs {
                    if r.get(x, y) {
                        count += 1;
                    }
                }
            }
            out.push(count as f64 / cell_area);
        }
    }
}

/// Build the 776-d descriptor for one (object crop, action) pair.
pub fn make_descriptor(
    object_crop: &BinaryRaster,
    action: &ActionRaster,
    spec: &GripperSpec,
) -> Result<Descriptor, EmbeddingError> {
    let crop = object_crop.width();
    if object_crop.height() != crop
        || action.mask.width() != crop
        || action.mask.height() != crop
    {
        return Err(EmbeddingError::DescriptorShape(format!(
            "crop {}x{} and action {}x{} must be square and equal",
            object_crop.width(),
            object_crop.height(),
            action.mask.width(),
            action.mask.height()
        )));
    }
    if crop % POOL_CELLS != 0 {
        return Err(EmbeddingError::DescriptorShape(format!(
            "crop {crop} not divisible by {POOL_CELLS}"
        )));
    }
    let mut values = Vec::with_capacity(DESCRIPTOR_DIM);
    block_means(object_crop, &mut values);
    block_means(&action.mask, &mut values);
    block_means(&action.path, &mut values);

    let mask_n = action.mask.count() as f64;
    let path_n = action.path.count() as f64;
    let mask_overlap = action.mask.overlap_count(object_crop).unwrap() as f64;
    let path_overlap = action.path.overlap_count(object_crop).unwrap() as f64;
    values.push(mask_overlap / mask_n);
    values.push(path_overlap / path_n);
    // R3 stability distance normalized by crop side; 1.0 when no contact
    let center = crop as f64 / 2.0;
    let stability = match action.path.intersection(object_crop).unwrap().centroid() {
        Ok((cx, cy)) => ((cx - center).powi(2) + (cy - center).powi(2)).sqrt() / crop as f64,
        Err(_) => 1.0,
    };
    values.push(stability);
    values.push(action.theta.cos());
    values.push(action.theta.sin());
    values.push((action.width - spec.w_min) / (spec.w_max - spec.w_min));
    values.push(object_crop.count() as f64 / (crop as f64 * crop as f64));
    let offset = match object_crop.centroid() {
        Ok((cx, cy)) => ((cx - center).powi(2) + (cy - center).powi(2)).sqrt() / crop as f64,
        Err(_) => 0.0,
    };
    values.push(offset);
    debug_assert_eq!(values.len(), DESCRIPTOR_DIM);
    Ok(Descriptor { values })
}

/// Affine map from descriptor space to embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub d_in: usize,
    pub d_out: usize,
    /// Row-major, d_out rows of d_in.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl EmbeddingModel {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        EmbeddingModel {
            d_in,
            d_out,
            weights: vec![0.0; d_in * d_out],
            bias: vec![0.0; d_out],
        }
    }
}

pub fn embed(model: &EmbeddingModel, d: &Descriptor) -> Result<Vec<f64>, EmbeddingError> {
    if d.values.len() != model.d_in {
        return Err(EmbeddingError::DescriptorShape(format!(
            "descriptor dim {} != model d_in {}",
            d.values.len(),
            model.d_in
        )));
    }
    let mut out = Vec::with_capacity(model.d_out);
    for row in 0..model.d_out {
        let w = &model.weights[row * model.d_in..(row + 1) * model.d_in];
        let dot: f64 = w.iter().zip(&d.values).map(|(a, b)| a * b).sum();
        out.push(dot + model.bias[row]);
    }
    Ok(out)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// max(‖fa−fp‖² − ‖fa−fn‖² + α, 0) with squared Euclidean norms.
pub fn triplet_loss(fa: &[f64], fp: &[f64], fneg: &[f64], alpha: f64) -> Result<f64, EmbeddingError> {
    if fa.len() != fp.len() || fa.len() != fneg.len() {
        return Err(EmbeddingError::DescriptorShape(
            "embedding dimensions differ".into(),
        ));
    }
    Ok((sq_dist(fa, fp) - sq_dist(fa, fneg) + alpha).max(0.0))
}

#[derive(Debug, Clone)]
pub struct Triplet {
    pub anchor: Descriptor,
    pub positive: Descriptor,
    pub negative: Descriptor,
}

/// Exact gradient of the hinge composed with the affine embedding.
///
/// With u = anchor − positive and v = anchor − negative the distances are
/// ‖Wu‖² and ‖Wv‖², so the active-branch gradient is 2(Wu)uᵀ − 2(Wv)vᵀ and
/// the bias gradient is identically zero (it cancels in every difference).
/// At the hinge boundary the subgradient 0 is chosen.
pub fn triplet_loss_grad(
    model: &EmbeddingModel,
    t: &Triplet,
    alpha: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64), EmbeddingError> {
    let fa = embed(model, &t.anchor)?;
    let fp = embed(model, &t.positive)?;
    let fneg = embed(model, &t.negative)?;
    let loss = triplet_loss(&fa, &fp, &fneg, alpha)?;
    let mut grad_w = vec![0.0; model.weights.len()];
    let grad_b = vec![0.0; model.d_out];
    if loss > 0.0 {
        let u: Vec<f64> = t
            .anchor
            .values
            .iter()
            .zip(&t.positive.values)
            .map(|(a, b)| a - b)
            .collect();
        let v: Vec<f64> = t
            .anchor
            .values
            .iter()
            .zip(&t.negative.values)
            .map(|(a, b)| a - b)
            .collect();
        for row in 0..model.d_out {
            let wu = fa[row] - fp[row];
            let wv = fa[row] - fneg[row];
            let g = &mut grad_w[row * model.d_in..(row + 1) * model.d_in];
            for i in 0..model.d_in {
                g[i] = 2.0 * (wu * u[i] - wv * v[i]);
            }
        }
    }
    Ok((grad_w, grad_b, loss))
}

/// One labeled, descriptor-bearing action used for mining and prototypes.
#[derive(Debug, Clone)]
pub struct MiningSample {
    pub scene_id: String,
    pub gripper_id: String,
    pub x: f64,
    pub y: f64,
    pub success: bool,
    pub descriptor: Descriptor,
}

fn point_key(s: &MiningSample) -> (String, String, i64, i64) {
    (
        s.scene_id.clone(),
        s.gripper_id.clone(),
        s.x.round() as i64,
        s.y.round() as i64,
    )
}

/// Sample `count` triplets with a seeded generator. Anchor and positive are
/// distinct successes at the same grasp point for the same gripper; the
/// negative is a failure action from that point and gripper.
pub fn mine_triplets(
    samples: &[MiningSample],
    count: usize,
    seed: u64,
) -> Result<Vec<Triplet>, EmbeddingError> {
    let mut groups: std::collections::BTreeMap<(String, String, i64, i64), (Vec<usize>, Vec<usize>)> =
        std::collections::BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let entry = groups.entry(point_key(s)).or_default();
        if s.success {
            entry.0.push(i);
        } else {
            entry.1.push(i);
        }
    }
    let qualifying: Vec<&(Vec<usize>, Vec<usize>)> = groups
        .values()
        .filter(|(pos, neg)| pos.len() >= 2 && !neg.is_empty())
        .collect();
    if qualifying.is_empty() {
        return Err(EmbeddingError::InsufficientTriplets);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (pos, neg) = qualifying[rng.gen_range(0..qualifying.len())];
        let ai = pos[rng.gen_range(0..pos.len())];
        let pi = loop {
            let c = pos[rng.gen_range(0..pos.len())];
            if c != ai {
                break c;
            }
        };
        let ni = neg[rng.gen_range(0..neg.len())];
        out.push(Triplet {
            anchor: samples[ai].descriptor.clone(),
            positive: samples[pi].descriptor.clone(),
            negative: samples[ni].descriptor.clone(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            margin: 0.2,
            learning_rate: 0.01,
            epochs: 20,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Plain SGD over shuffled mini-batches with mean gradients. Weights start
/// uniform(−s, s), s = 1/√d_in, bias zero; deterministic for a fixed config.
/// Returns the trained model and the per-epoch mean loss trace.
pub fn train(
    triplets: &[Triplet],
    cfg: &TrainConfig,
) -> Result<(EmbeddingModel, Vec<f64>), EmbeddingError> {
    assert!(!triplets.is_empty(), "train requires at least one triplet");
    assert!(cfg.epochs >= 1 && cfg.batch_size >= 1);
    let d_in = triplets[0].anchor.values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = 1.0 / (d_in as f64).sqrt();
    let mut model = EmbeddingModel {
        d_in,
        d_out: EMBED_DIM,
        weights: (0..d_in * EMBED_DIM).map(|_| rng.gen_range(-s..s)).collect(),
        bias: vec![0.0; EMBED_DIM],
    };
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = vec![0.0; model.weights.len()];
            for &i in batch {
                let (gw, _, loss) = triplet_loss_grad(&model, &triplets[i], cfg.margin)?;
                if !loss.is_finite() {
                    return Err(EmbeddingError::Diverged(epoch));
                }
                epoch_loss += loss;
                for (g, gi) in grad.iter_mut().zip(&gw) {
                    *g += gi;
                }
            }
            let step = cfg.learning_rate / batch.len() as f64;
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= step * g;
            }
        }
        let mean = epoch_loss / triplets.len() as f64;
        if !mean.is_finite() {
            return Err(EmbeddingError::Diverged(epoch));
        }
        trace.push(mean);
    }
    Ok((model, trace))
}

/// Mean embeddings of the training positives and negatives.
pub fn compute_prototypes(
    model: &EmbeddingModel,
    samples: &[MiningSample],
) -> Result<(Vec<f64>, Vec<f64>), EmbeddingError> {
    let mut mu_pos = vec![0.0; model.d_out];
    let mut mu_neg = vec![0.0; model.d_out];
    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    for s in samples {
        let e = embed(model, &s.descriptor)?;
        let (mu, n) = if s.success {
            (&mut mu_pos, &mut n_pos)
        } else {
            (&mut mu_neg, &mut n_neg)
        };
        for (m, v) in mu.iter_mut().zip(&e) {
            *m += v;
        }
        *n += 1;
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(EmbeddingError::InsufficientTriplets);
    }
    for m in mu_pos.iter_mut() {
        *m /= n_pos as f64;
    }
    for m in mu_neg.iter_mut() {
        *m /= n_neg as f64;
    }
    Ok((mu_pos, mu_neg))
}

/// ‖f(d)−μ_neg‖² − ‖f(d)−μ_pos‖²; higher is more grasp-like.
pub fn prototype_score(
    model: &EmbeddingModel,
    d: &Descriptor,
    mu_pos: &[f64],
    mu_neg: &[f64],
) -> Result<f64, EmbeddingError> {
    let e = embed(model, d)?;
    if e.len() != mu_pos.len() || e.len() != mu_neg.len() {
        return Err(EmbeddingError::DescriptorShape(
            "prototype dimension mismatch".into(),
        ));
    }
    Ok(sq_dist(&e, mu_neg) - sq_dist(&e, mu_pos))
}

/// Argmax of prototype score over actions; ties broken by smaller width then
/// smaller position (angle) index. Returns (index, theta, width).
pub fn select_action(
    model: &EmbeddingModel,
    prototypes: (&[f64], &[f64]),
    object_crop: &BinaryRaster,
    actions: &[ActionRaster],
    spec: &GripperSpec,
) -> Result<(usize, f64, f64), EmbeddingError> {
    if actions.is_empty() {
        return Err(EmbeddingError::NoActions);
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, a) in actions.iter().enumerate() {
        let d = make_descriptor(object_crop, a, spec)?;
        let score = prototype_score(model, &d, prototypes.0, prototypes.1)?;
        best = match best {
            None => Some((i, score)),
            Some((bi, bs)) => {
                if score > bs || (score == bs && actions[i].width < actions[bi].width) {
                    Some((i, score))
                } else {
                    Some((bi, bs))
                }
            }
        };
    }
    let (i, _) = best.unwrap();
    Ok((i, actions[i].theta, actions[i].width))
}

/// Model sidecar metadata, written as `<model>.meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelMeta {
    pub gripper_id: String,
    pub margin: f64,
    pub seed: u64,
    pub epochs: usize,
    pub mu_pos: Vec<f64>,
    pub mu_neg: Vec<f64>,
}

/// Write the `GLW1 <D_in> <D_out>` header followed by little-endian f64
/// weights (row-major) then bias.
pub fn write_model<W: Write>(model: &EmbeddingModel, mut w: W) -> Result<(), EmbeddingError> {
    write!(w, "GLW1 {} {}\n", model.d_in, model.d_out)?;
    for v in model.weights.iter().chain(&model.bias) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<EmbeddingModel, EmbeddingError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let nl = buf
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| EmbeddingError::ModelFormat("missing header line".into()))?;
    let header = std::str::from_utf8(&buf[..nl])
        .map_err(|_| EmbeddingError::ModelFormat("non-utf8 header".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "GLW1" {
        return Err(EmbeddingError::ModelFormat(format!("bad header {header:?}")));
    }
    let d_in: usize = parts[1]
        .parse()
        .map_err(|_| EmbeddingError::ModelFormat("bad D_in".into()))?;
    let d_out: usize = parts[2]
        .parse()
        .map_err(|_| EmbeddingError::ModelFormat("bad D_out".into()))?;
    let need = (d_in * d_out + d_out) * 8;
    let data = &buf[nl + 1..];
    if data.len() != need {
        return Err(EmbeddingError::ModelFormat(format!(
            "expected {need} payload bytes, got {}",
            data.len()
        )));
    }
    let floats: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(EmbeddingModel {
        d_in,
        d_out,
        weights: floats[..d_in * d_out].to_vec(),
        bias: floats[d_in * d_out..].to_vec(),
    })
}
