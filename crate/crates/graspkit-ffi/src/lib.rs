//! C ABI for the grasp toolkit: opaque gripper handles, status codes, and
//! value structs for rule evaluation and oracle planning.
//!
//! Conventions: every function returns a `GkStatus`; results go to out
//! pointers. Object images are row-major `width * height` byte buffers where
//! any nonzero byte marks an occupied pixel. Handles from `gk_gripper_*`
//! constructors must be released with `gk_gripper_free`.

use std::ffi::{c_char, CStr};

use graspkit::dataset::SceneSample;
use graspkit::graspability::{evaluate_action, FailedRule, RuleConfig};
use graspkit::gripper::{load_gripper_spec, presets, render_action, GripperError, GripperSpec};
use graspkit::planner::{plan, PlanConfig, PlanMode};
use graspkit::BinaryRaster;

/// Status code returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument value was out of range (dimensions, width, name).
    InvalidArgument = 2,
    /// The gripper spec text failed to parse or validate.
    InvalidSpec = 3,
    /// The rendered gripper fell entirely outside the crop.
    OutOfFrame = 4,
    /// No valid grasp was found (planning only).
    NoGrasp = 5,
    /// Unexpected internal failure.
    Internal = 6,
}

/// Opaque gripper handle.
pub struct GkGripper(GripperSpec);

/// Rule-evaluation outcome for one action.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GkOutcome {
    pub success: bool,
    /// 0 = none, 1..3 = first failed rule.
    pub failed_rule: i32,
    pub quality: f64,
    /// Distance from crop center to the contact centroid; -1 when the
    /// closing path never touches the object.
    pub stability_distance: f64,
}

/// A planned grasp.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GkGrasp {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub width: f64,
    pub quality: f64,
}

/// Toolkit version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn boxed(spec: GripperSpec, out: *mut *mut GkGripper) -> GkStatus {
    unsafe { *out = Box::into_raw(Box::new(GkGripper(spec))) };
    GkStatus::Ok
}

/// Parse a gripper spec document (`.gspec` text).
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_gripper_parse(
    text: *const c_char,
    out: *mut *mut GkGripper,
) -> GkStatus {
    if text.is_null() || out.is_null() {
        return GkStatus::NullArgument;
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        return GkStatus::InvalidArgument;
    };
    match load_gripper_spec(text) {
        Ok(spec) => boxed(spec, out),
        Err(_) => GkStatus::InvalidSpec,
    }
}

/// Construct a built-in gripper: "parallel_jaw", "radial_3f", or "radial_4f".
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_gripper_preset(
    name: *const c_char,
    out: *mut *mut GkGripper,
) -> GkStatus {
    if name.is_null() || out.is_null() {
        return GkStatus::NullArgument;
    }
    let Ok(name) = CStr::from_ptr(name).to_str() else {
        return GkStatus::InvalidArgument;
    };
    let spec = match name {
        "parallel_jaw" => presets::parallel_jaw(),
        "radial_3f" => presets::radial_3f(),
        "radial_4f" => presets::radial_4f(),
        _ => return GkStatus::InvalidArgument,
    };
    boxed(spec, out)
}

/// Release a gripper handle. Null is a no-op.
///
/// # Safety
/// `g` must be a handle from a `gk_gripper_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn gk_gripper_free(g: *mut GkGripper) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Opening range and symmetry order of a gripper.
///
/// # Safety
/// All pointers must be valid; out pointers may be null to skip a field.
#[no_mangle]
pub unsafe extern "C" fn gk_gripper_info(
    g: *const GkGripper,
    w_min: *mut f64,
    w_max: *mut f64,
    symmetry_order: *mut u32,
) -> GkStatus {
    if g.is_null() {
        return GkStatus::NullArgument;
    }
    let spec = &(*g).0;
    if !w_min.is_null() {
        *w_min = spec.w_min;
    }
    if !w_max.is_null() {
        *w_max = spec.w_max;
    }
    if !symmetry_order.is_null() {
        *symmetry_order = spec.symmetry_order;
    }
    GkStatus::Ok
}

unsafe fn raster_from_bytes(object: *const u8, width: u32, height: u32) -> BinaryRaster {
    let buf = std::slice::from_raw_parts(object, (width * height) as usize);
    let mut r = BinaryRaster::new(width, height);
    for y in 0..height {
        for x in 0..width {
            if buf[(y * width + x) as usize] != 0 {
                r.set(x, y, true);
            }
        }
    }
    r
}

/// Evaluate one action (θ, opening width) against a square object crop.
///
/// # Safety
/// `object` must point to `width * height` bytes; `g` and `out` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gk_evaluate(
    g: *const GkGripper,
    object: *const u8,
    width: u32,
    height: u32,
    theta: f64,
    opening: f64,
    tau: f64,
    out: *mut GkOutcome,
) -> GkStatus {
    if g.is_null() || object.is_null() || out.is_null() {
        return GkStatus::NullArgument;
    }
    if width == 0 || width != height || !tau.is_finite() || tau < 0.0 {
        return GkStatus::InvalidArgument;
    }
    let spec = &(*g).0;
    let crop = raster_from_bytes(object, width, height);
    let action = match render_action(spec, theta, opening, width) {
        Ok(a) => a,
        Err(GripperError::GripperOutOfFrame) => return GkStatus::OutOfFrame,
        Err(GripperError::WidthOutOfRange(..)) => return GkStatus::InvalidArgument,
        Err(_) => return GkStatus::Internal,
    };
    let rule = RuleConfig { tau_stable: tau };
    let Ok(outcome) = evaluate_action(&action, &crop, spec, &rule) else {
        return GkStatus::Internal;
    };
    *out = GkOutcome {
        success: outcome.success,
        failed_rule: match outcome.failed_rule {
            FailedRule::None => 0,
            FailedRule::R1 => 1,
            FailedRule::R2 => 2,
            FailedRule::R3 => 3,
        },
        quality: outcome.quality,
        stability_distance: outcome.stability_distance.unwrap_or(-1.0),
    };
    GkStatus::Ok
}

/// Plan one grasp on an object image with the brute-force oracle.
///
/// # Safety
/// `object` must point to `width * height` bytes; `g` and `out` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gk_plan_oracle(
    g: *const GkGripper,
    object: *const u8,
    width: u32,
    height: u32,
    tau: f64,
    out: *mut GkGrasp,
) -> GkStatus {
    if g.is_null() || object.is_null() || out.is_null() {
        return GkStatus::NullArgument;
    }
    if width == 0 || height == 0 || !tau.is_finite() || tau < 0.0 {
        return GkStatus::InvalidArgument;
    }
    let spec = &(*g).0;
    let scene = SceneSample {
        scene_id: "ffi".to_string(),
        object_mask: raster_from_bytes(object, width, height),
        depth: None,
        grasp_points: Vec::new(),
    };
    let cfg = PlanConfig {
        mode: PlanMode::Oracle,
        rule: RuleConfig { tau_stable: tau },
        ..PlanConfig::default()
    };
    match plan(&scene, spec, &cfg, None) {
        Ok(Some(grasp)) => {
            *out = GkGrasp {
                x: grasp.x,
                y: grasp.y,
                theta: grasp.theta,
                width: grasp.width,
                quality: grasp.quality,
            };
            GkStatus::Ok
        }
        Ok(None) => GkStatus::NoGrasp,
        Err(_) => GkStatus::Internal,
    }
}
