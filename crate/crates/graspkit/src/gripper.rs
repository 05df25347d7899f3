//! Parametric k-finger grippers and two-channel (mask, path) action rendering.
//!
//! A gripper is a set of convex finger footprints placed radially around the
//! grasp center. Every finger closes along the straight line toward the
//! center, from the pre-grasp opening `w` down to `w_min`. The mask channel
//! is the finger assembly at opening `w`; the path channel is the closing
//! sweep, so mask ⊆ path always holds.

use std::f64::consts::PI;

use thiserror::Error;

use crate::raster::{
    rasterize_polygon_into, sweep_convex, BinaryRaster, Polygon2D, RasterError,
};

#[derive(Debug, Error)]
pub enum GripperError {
    #[error("gripper spec parse error: {0}")]
    SpecParse(String),
    #[error("declared symmetry_order {0} is inconsistent with finger placement")]
    SymmetryMismatch(u32),
    #[error("invalid opening range: w_min {0} must be >= 0 and < w_max {1}")]
    InvalidOpeningRange(f64, f64),
    #[error("width {0} outside opening range [{1}, {2}]")]
    WidthOutOfRange(f64, f64, f64),
    #[error("gripper mask is fully clipped at this crop size")]
    GripperOutOfFrame,
    #[error(transparent)]
    Raster(#[from] RasterError),
}

const ANGLE_TOL: f64 = 1e-6;

/// One finger: a convex footprint in its local frame (centered at the local
/// origin) plus the radial placement angle. The footprint rotates with the
/// placement angle, so radial grippers need only one footprint shape.
#[derive(Debug, Clone)]
pub struct FingerSpec {
    pub footprint: Polygon2D,
    pub phi: f64,
}

#[derive(Debug, Clone)]
pub struct GripperSpec {
    pub id: String,
    pub fingers: Vec<FingerSpec>,
    pub w_min: f64,
    pub w_max: f64,
    pub symmetry_order: u32,
}

impl GripperSpec {
    pub fn new(
        id: String,
        fingers: Vec<FingerSpec>,
        w_min: f64,
        w_max: f64,
        symmetry_order: u32,
    ) -> Result<Self, GripperError> {
        if fingers.is_empty() {
            return Err(GripperError::SpecParse("at least one finger required".into()));
        }
        if !(w_min >= 0.0 && w_min < w_max) {
            return Err(GripperError::InvalidOpeningRange(w_min, w_max));
        }
        if symmetry_order == 0 {
            return Err(GripperError::SpecParse("symmetry_order must be >= 1".into()));
        }
        for f in &fingers {
            if !f.footprint.is_convex() {
                return Err(GripperError::SpecParse(
                    "finger footprint must be convex".into(),
                ));
            }
        }
        let spec = GripperSpec {
            id,
            fingers,
            w_min,
            w_max,
            symmetry_order,
        };
        spec.validate_symmetry()?;
        Ok(spec)
    }

    /// Non-redundant angle range: [0, 2π / symmetry_order).
    pub fn angle_period(&self) -> f64 {
        2.0 * PI / self.symmetry_order as f64
    }

    /// Rotating all placement angles by the symmetry period must permute the
    /// finger set (same footprint, matching angle within tolerance).
    fn validate_symmetry(&self) -> Result<(), GripperError> {
        let delta = self.angle_period();
        for a in &self.fingers {
            let target = a.phi + delta;
            let found = self.fingers.iter().any(|b| {
                angles_close(b.phi, target) && footprints_close(&a.footprint, &b.footprint)
            });
            if !found {
                return Err(GripperError::SymmetryMismatch(self.symmetry_order));
            }
        }
        Ok(())
    }

    /// Footprint extent used when converting grasps back to rectangles: the
    /// largest bounding-box side over all fingers.
    pub fn jaw_extent(&self) -> f64 {
        self.fingers
            .iter()
            .map(|f| {
                let (x0, y0, x1, y1) = f.footprint.bbox();
                (x1 - x0).max(y1 - y0)
            })
            .fold(0.0, f64::max)
    }
}

fn angles_close(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(2.0 * PI);
    d < ANGLE_TOL || d > 2.0 * PI - ANGLE_TOL
}

fn footprints_close(a: &Polygon2D, b: &Polygon2D) -> bool {
    let va = a.vertices();
    let vb = b.vertices();
    if va.len() != vb.len() {
        return false;
    }
    let n = va.len();
    (0..n).any(|shift| {
        (0..n).all(|i| {
            let (ax, ay) = va[i];
            let (bx, by) = vb[(i + shift) % n];
            (ax - bx).abs() < ANGLE_TOL && (ay - by).abs() < ANGLE_TOL
        })
    })
}

/// The (θ, w) grid of actions evaluated per grasp point.
#[derive(Debug, Clone)]
pub struct ActionGrid {
    pub angles: Vec<f64>,
    pub widths: Vec<f64>,
}

impl ActionGrid {
    pub fn len(&self) -> usize {
        self.angles.len() * self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterate angle-major: all widths for angle 0, then angle 1, ...
    /// Yields (angle_index, width_index, theta, width).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.angles.iter().enumerate().flat_map(move |(j, &theta)| {
            self.widths
                .iter()
                .enumerate()
                .map(move |(k, &w)| (j, k, theta, w))
        })
    }
}

pub const DEFAULT_NA: usize = 16;
pub const DEFAULT_NW: usize = 8;
pub const DEFAULT_CROP: u32 = 96;

/// Evenly spaced angles over the non-redundant range and widths over the
/// opening range.
pub fn make_action_grid(spec: &GripperSpec, na: usize, nw: usize) -> ActionGrid {
    assert!(na >= 1 && nw >= 1);
    let period = spec.angle_period();
    let angles = (0..na).map(|j| j as f64 * period / na as f64).collect();
    let widths = if nw == 1 {
        vec![spec.w_max]
    } else {
        (0..nw)
            .map(|k| spec.w_min + k as f64 * (spec.w_max - spec.w_min) / (nw - 1) as f64)
            .collect()
    };
    ActionGrid { angles, widths }
}

/// One rendered action: the gripper mask at the pre-grasp opening plus the
/// closing-sweep path.
#[derive(Debug, Clone)]
pub struct ActionRaster {
    pub theta: f64,
    pub width: f64,
    pub mask: BinaryRaster,
    pub path: BinaryRaster,
}

/// Reduce theta into [0, period) on a fixed 2^32 lattice so that θ and
/// θ + period render bit-identically.
fn normalize_theta(theta: f64, period: f64) -> f64 {
    let t = theta / period;
    let frac = t - t.floor();
    let q = (frac * 4294967296.0).round() as u64 % 4294967296;
    q as f64 / 4294967296.0 * period
}

/// Render one (θ, w) action at `crop`×`crop`. Each finger footprint is
/// rotated by its placement angle, offset to radius w/2, the assembly is
/// rotated by θ about the crop center, and rasterized. The path is the
/// closing sweep from w down to w_min, unioned with the mask.
pub fn render_action(
    spec: &GripperSpec,
    theta: f64,
    width: f64,
    crop: u32,
) -> Result<ActionRaster, GripperError> {
    if !(spec.w_min <= width && width <= spec.w_max) {
        return Err(GripperError::WidthOutOfRange(width, spec.w_min, spec.w_max));
    }
    assert!(crop >= 1);
    let theta = normalize_theta(theta, spec.angle_period());
    let center = crop as f64 / 2.0;
    let mut mask = BinaryRaster::new(crop, crop);
    let mut path = BinaryRaster::new(crop, crop);
    for finger in &spec.fingers {
        let (s, c) = finger.phi.sin_cos();
        let placed = finger
            .footprint
            .rotated_about(finger.phi, 0.0, 0.0)
            .translated(width / 2.0 * c, width / 2.0 * s);
        let posed = placed.rotated_about(theta, 0.0, 0.0).translated(center, center);
        rasterize_polygon_into(&posed, &mut mask);
        let closing = (spec.w_min - width) / 2.0;
        let swept = sweep_convex(&placed, closing * c, closing * s)?;
        let swept_posed = swept.rotated_about(theta, 0.0, 0.0).translated(center, center);
        rasterize_polygon_into(&swept_posed, &mut path);
    }
    // rasterization of the swept hull already covers the mask; the union
    // makes mask ⊆ path hold bit-exactly
    path.union_with(&mask)?;
    if mask.is_empty() {
        return Err(GripperError::GripperOutOfFrame);
    }
    Ok(ActionRaster {
        theta,
        width,
        mask,
        path,
    })
}

/// Render the full action grid; actions that fall out of frame are skipped
/// by the caller via the Err slot.
pub fn render_grid(
    spec: &GripperSpec,
    grid: &ActionGrid,
    crop: u32,
) -> Vec<Result<ActionRaster, GripperError>> {
    grid.iter()
        .map(|(_, _, theta, w)| render_action(spec, theta, w, crop))
        .collect()
}

/// Parse the `.gspec` key-value document format.
///
/// Header keys `id`, `w_min`, `w_max`, `symmetry_order`, `scale` come first;
/// each `[finger]` block carries `phi` (radians) and `footprint` (flat CCW
/// vertex list). `scale` (px per unit, default 1.0) multiplies all lengths.
pub fn load_gripper_spec(text: &str) -> Result<GripperSpec, GripperError> {
    let mut id = None;
    let mut w_min = None;
    let mut w_max = None;
    let mut symmetry_order = None;
    let mut scale = 1.0f64;
    let mut fingers: Vec<(Option<f64>, Option<Vec<f64>>)> = Vec::new();
    let mut in_finger = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[finger]" {
            fingers.push((None, None));
            in_finger = true;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| GripperError::SpecParse(format!("line {}: expected key = value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| GripperError::SpecParse(format!("line {}: bad number {v:?}", lineno + 1)))
        };
        if in_finger {
            let finger = fingers.last_mut().unwrap();
            match key {
                "phi" => finger.0 = Some(parse_f64(value)?),
                "footprint" => {
                    let coords = value
                        .split_whitespace()
                        .map(parse_f64)
                        .collect::<Result<Vec<_>, _>>()?;
                    if coords.len() % 2 != 0 {
                        return Err(GripperError::SpecParse(format!(
                            "line {}: footprint needs an even coordinate count",
                            lineno + 1
                        )));
                    }
                    finger.1 = Some(coords);
                }
                _ => {
                    return Err(GripperError::SpecParse(format!(
                        "line {}: unknown finger key {key:?}",
                        lineno + 1
                    )))
                }
            }
        } else {
            match key {
                "id" => id = Some(value.to_string()),
                "w_min" => w_min = Some(parse_f64(value)?),
                "w_max" => w_max = Some(parse_f64(value)?),
                "symmetry_order" => {
                    symmetry_order = Some(value.parse::<u32>().map_err(|_| {
                        GripperError::SpecParse(format!("line {}: bad integer {value:?}", lineno + 1))
                    })?)
                }
                "scale" => scale = parse_f64(value)?,
                _ => {
                    return Err(GripperError::SpecParse(format!(
                        "line {}: unknown header key {key:?}",
                        lineno + 1
                    )))
                }
            }
        }
    }

    let id = id.ok_or_else(|| GripperError::SpecParse("missing id".into()))?;
    let w_min = w_min.ok_or_else(|| GripperError::SpecParse("missing w_min".into()))?;
    let w_max = w_max.ok_or_else(|| GripperError::SpecParse("missing w_max".into()))?;
    let symmetry_order =
        symmetry_order.ok_or_else(|| GripperError::SpecParse("missing symmetry_order".into()))?;
    if scale <= 0.0 {
        return Err(GripperError::SpecParse("scale must be positive".into()));
    }
    let fingers = fingers
        .into_iter()
        .enumerate()
        .map(|(i, (phi, coords))| {
            let phi = phi.ok_or_else(|| GripperError::SpecParse(format!("finger {i}: missing phi")))?;
            let coords =
                coords.ok_or_else(|| GripperError::SpecParse(format!("finger {i}: missing footprint")))?;
            let verts: Vec<(f64, f64)> = coords
                .chunks(2)
                .map(|c| (c[0] * scale, c[1] * scale))
                .collect();
            let footprint = Polygon2D::new(verts)
                .map_err(|e| GripperError::SpecParse(format!("finger {i}: {e}")))?;
            Ok(FingerSpec { footprint, phi })
        })
        .collect::<Result<Vec<_>, GripperError>>()?;

    GripperSpec::new(id, fingers, w_min * scale, w_max * scale, symmetry_order)
}

pub fn gspec_text(spec: &GripperSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "id = {}\nw_min = {}\nw_max = {}\nsymmetry_order = {}\n",
        spec.id, spec.w_min, spec.w_max, spec.symmetry_order
    ));
    for f in &spec.fingers {
        out.push_str(&format!("\n[finger]\nphi = {}\nfootprint =", f.phi));
        for &(x, y) in f.footprint.vertices() {
            out.push_str(&format!(" {x} {y}"));
        }
        out.push('\n');
    }
    out
}

/// Built-in example grippers, also used throughout the test fixtures.
pub mod presets {
    use super::*;

    fn rect_footprint(w: f64, h: f64) -> Polygon2D {
        Polygon2D::new(vec![
            (-w / 2.0, -h / 2.0),
            (w / 2.0, -h / 2.0),
            (w / 2.0, h / 2.0),
            (-w / 2.0, h / 2.0),
        ])
        .unwrap()
    }

    fn radial(id: &str, k: u32, w_min: f64, w_max: f64) -> GripperSpec {
        let fingers = (0..k)
            .map(|i| FingerSpec {
                footprint: rect_footprint(4.0, 12.0),
                phi: i as f64 * 2.0 * PI / k as f64,
            })
            .collect();
        GripperSpec::new(id.to_string(), fingers, w_min, w_max, k).unwrap()
    }

    /// Two 4×12 px jaws at φ = 0, π; opening 6..60 px.
    pub fn parallel_jaw() -> GripperSpec {
        radial("parallel_jaw", 2, 6.0, 60.0)
    }

    /// Three fingers at 2π/3 spacing.
    pub fn radial_3f() -> GripperSpec {
        radial("radial_3f", 3, 6.0, 60.0)
    }

    /// Four fingers at π/2 spacing.
    pub fn radial_4f() -> GripperSpec {
        radial("radial_4f", 4, 6.0, 60.0)
    }
}
