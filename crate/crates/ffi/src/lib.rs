//! C ABI over the slamsafe core.
//!
//! Every fallible call returns a [`SlamsafeStatus`]; on failure the message
//! is available from [`slamsafe_last_error`] on the same thread. Handles
//! are opaque and owned by the caller once created; free each with its
//! `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use slamsafe::features::{discretize, featurize, CellIndex, StateActionFeatures, NUM_CELLS};
use slamsafe::filter::{is_safe, FilterConfig};
use slamsafe::oracle::{calibrate_with, BreakageModel};
use slamsafe::planner::TrajectorySegment;
use slamsafe::qlearn::{load_qtable, qtable_from_json, reward, QTable, RewardWeights};
use slamsafe::world::gen::{generate, MapStyle, TextureProfile};
use slamsafe::world::{load_map, map_from_json, CameraModel, Direction, Pose, Vec2, WorldMap};
use slamsafe::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlamsafeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Format = 4,
    Io = 5,
    MissingArtifact = 6,
    Collision = 7,
    NoPath = 8,
    Degenerate = 9,
    Stuck = 10,
    Panic = 11,
}

impl From<&Error> for SlamsafeStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Collision { .. } => SlamsafeStatus::Collision,
            Error::Range(_) => SlamsafeStatus::InvalidArgument,
            Error::Config(_) => SlamsafeStatus::Config,
            Error::Format(_) | Error::Json(_) | Error::Csv(_) => SlamsafeStatus::Format,
            Error::Degenerate(_) => SlamsafeStatus::Degenerate,
            Error::NoPath(_) => SlamsafeStatus::NoPath,
            Error::Stuck { .. } => SlamsafeStatus::Stuck,
            Error::MissingArtifact(_) => SlamsafeStatus::MissingArtifact,
            Error::Io { .. } => SlamsafeStatus::Io,
        }
    }
}

/// Direction of travel relative to the camera heading. Passed across the
/// ABI as a `uint8_t` and validated.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlamsafeDirection {
    Forward = 0,
    Backward = 1,
}

fn direction(d: u8) -> FfiResult<Direction> {
    match d {
        0 => Ok(Direction::Forward),
        1 => Ok(Direction::Backward),
        _ => invalid(format!("direction {d} is neither forward (0) nor backward (1)")),
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlamsafeVec2 {
    pub x: f64,
    pub y: f64,
}

/// Pose in meters and radians.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlamsafePose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Step features: direction, absolute heading change in degrees [0, 30],
/// co-visible landmark count [0, 600].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlamsafeFeatures {
    /// A `SlamsafeDirection` value.
    pub direction: u8,
    pub dtheta_deg: f64,
    pub overlap: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlamsafeCell {
    pub eta_bin: u8,
    pub angle_bin: u8,
    pub overlap_bin: u8,
    /// Position in the flat 800-entry table.
    pub linear: u32,
}

pub struct SlamsafeMap(WorldMap);
pub struct SlamsafeQTable(QTable);
pub struct SlamsafeOracle(BreakageModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (SlamsafeStatus, String)>) -> SlamsafeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlamsafeStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SlamsafeStatus::Panic
        }
    }
}

type FfiResult<T> = Result<T, (SlamsafeStatus, String)>;

fn core<T>(r: slamsafe::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (SlamsafeStatus::from(&e), e.to_string()))
}

fn invalid<T>(msg: impl Into<String>) -> FfiResult<T> {
    Err((SlamsafeStatus::InvalidArgument, msg.into()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| (SlamsafeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| (SlamsafeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err((SlamsafeStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SlamsafeStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn features(f: &SlamsafeFeatures) -> FfiResult<StateActionFeatures> {
    let sf = StateActionFeatures {
        eta: direction(f.direction)?,
        dtheta_deg: f.dtheta_deg,
        overlap: f.overlap,
    };
    if !sf.in_range() {
        return invalid(format!("features out of range: dtheta {} overlap {}", f.dtheta_deg, f.overlap));
    }
    Ok(sf)
}

fn cell_out(c: CellIndex) -> SlamsafeCell {
    SlamsafeCell {
        eta_bin: c.eta_bin,
        angle_bin: c.angle_bin,
        overlap_bin: c.overlap_bin,
        linear: c.linear() as u32,
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn slamsafe_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread; empty if none failed.
#[no_mangle]
pub extern "C" fn slamsafe_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a map file.
#[no_mangle]
pub unsafe extern "C" fn slamsafe_map_load(path: *const c_char, out_map: *mut *mut SlamsafeMap) -> SlamsafeStatus {
    guard(|| {
        let path = text(path, "path")?;
        let slot = out(out_map, "out_map")?;
        *slot = Box::into_raw(Box::new(SlamsafeMap(core(load_map(path))?)));
        Ok(())
    })
}

/// Parses a map from its JSON text.
#[no_mangle]
pub unsafe extern "C" fn slamsafe_map_from_json(json: *const c_char, out_map: *mut *mut SlamsafeMap) -> SlamsafeStatus {
    guard(|| {
        let json = text(json, "json")?;
        let slot = out(out_map, "out_map")?;
        *slot = Box::into_raw(Box::new(SlamsafeMap(core(map_from_json(json))?)));
        Ok(())
    })
}

/// Generates a map. `style` is one of corridor, room, corner, mixed.
#[no_mangle]
pub unsafe extern "C" fn slamsafe_map_generate(
    seed: u64,
    style: *const c_char,
    density: f64,
    out_map: *mut *mut SlamsafeMap,
) -> SlamsafeStatus {
    guard(|| {
        let style: MapStyle = core(text(style, "style")?.parse())?;
        if !(density.is_finite() && density > 0.0) {
            return invalid("density must be positive");
        }
        let slot = out(out_map, "out_map")?;
        let texture = TextureProfile {
            density,
            ..TextureProfile::default()
        };
        *slot = Box::into_raw(Box::new(SlamsafeMap(generate(seed, style, &texture).map)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_map_free(map: *mut SlamsafeMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_map_start(map: *const SlamsafeMap, out_pose: *mut SlamsafePose) -> SlamsafeStatus {
    guard(|| {
        let m = &deref(map, "map")?.0;
        *out(out_pose, "out_pose")? = SlamsafePose {
            x: m.start.x,
            y: m.start.y,
            theta: m.start.theta,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_map_goal(map: *const SlamsafeMap, out_goal: *mut SlamsafeVec2) -> SlamsafeStatus {
    guard(|| {
        let m = &deref(map, "map")?.0;
        *out(out_goal, "out_goal")? = SlamsafeVec2 { x: m.goal.x, y: m.goal.y };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_map_landmark_count(map: *const SlamsafeMap, out_count: *mut usize) -> SlamsafeStatus {
    guard(|| {
        let m = &deref(map, "map")?.0;
        *out(out_count, "out_count")? = m.landmarks.len();
        Ok(())
    })
}

/// Features of the step `from → to` with the default camera.
#[no_mangle]
pub unsafe extern "C" fn slamsafe_featurize(
    map: *const SlamsafeMap,
    from: *const SlamsafePose,
    to: *const SlamsafePose,
    direction: u8,
    out_features: *mut SlamsafeFeatures,
) -> SlamsafeStatus {
    guard(|| {
        let m = &deref(map, "map")?.0;
        let (a, b) = (deref(from, "from")?, deref(to, "to")?);
        let f = featurize(
            m,
            &CameraModel::default(),
            &Pose::new(a.x, a.y, a.theta),
            &Pose::new(b.x, b.y, b.theta),
            self::direction(direction)?,
        );
        *out(out_features, "out_features")? = SlamsafeFeatures {
            direction,
            dtheta_deg: f.dtheta_deg,
            overlap: f.overlap,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_discretize(features_in: *const SlamsafeFeatures, out_cell: *mut SlamsafeCell) -> SlamsafeStatus {
    guard(|| {
        let f = features(deref(features_in, "features")?)?;
        *out(out_cell, "out_cell")? = cell_out(discretize(&f));
        Ok(())
    })
}

/// Step reward under the default weights; `broke` is nonzero on breakage.
#[no_mangle]
pub unsafe extern "C" fn slamsafe_reward(features_in: *const SlamsafeFeatures, broke: u8, out_reward: *mut f64) -> SlamsafeStatus {
    guard(|| {
        let f = features(deref(features_in, "features")?)?;
        *out(out_reward, "out_reward")? = reward(&RewardWeights::default(), &f, broke != 0);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_qtable_load(path: *const c_char, out_q: *mut *mut SlamsafeQTable) -> SlamsafeStatus {
    guard(|| {
        let path = text(path, "path")?;
        let slot = out(out_q, "out_q")?;
        *slot = Box::into_raw(Box::new(SlamsafeQTable(core(load_qtable(path))?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_qtable_from_json(json: *const c_char, out_q: *mut *mut SlamsafeQTable) -> SlamsafeStatus {
    guard(|| {
        let json = text(json, "json")?;
        let slot = out(out_q, "out_q")?;
        *slot = Box::into_raw(Box::new(SlamsafeQTable(core(qtable_from_json(json))?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_qtable_free(q: *mut SlamsafeQTable) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Value and visit count of the cell at flat index `linear`.
#[no_mangle]
pub unsafe extern "C" fn slamsafe_qtable_cell(
    q: *const SlamsafeQTable,
    linear: u32,
    out_value: *mut f64,
    out_visits: *mut u64,
) -> SlamsafeStatus {
    guard(|| {
        let q = &deref(q, "q")?.0;
        if linear as usize >= NUM_CELLS {
            return invalid(format!("cell {linear} out of range"));
        }
        let c = CellIndex::from_linear(linear as usize);
        *out(out_value, "out_value")? = q.value(c);
        *out(out_visits, "out_visits")? = q.visits(c);
        Ok(())
    })
}

/// Filter verdict: 1 when the step's cell has at least `min_visits` visits
/// and a value at or above `threshold`.
#[no_mangle]
pub unsafe extern "C" fn slamsafe_is_safe(
    q: *const SlamsafeQTable,
    features_in: *const SlamsafeFeatures,
    threshold: f64,
    min_visits: u64,
    out_safe: *mut u8,
) -> SlamsafeStatus {
    guard(|| {
        let q = &deref(q, "q")?.0;
        let f = features(deref(features_in, "features")?)?;
        if threshold.is_nan() {
            return invalid("threshold is NaN");
        }
        let cfg = FilterConfig { threshold, min_visits };
        *out(out_safe, "out_safe")? = u8::from(is_safe(q, &cfg, &f));
        Ok(())
    })
}

/// Breakage model with the given corner probabilities and overlap share.
#[no_mangle]
pub unsafe extern "C" fn slamsafe_oracle_calibrate(
    target_low: f64,
    target_high: f64,
    overlap_share: f64,
    seed: u64,
    out_oracle: *mut *mut SlamsafeOracle,
) -> SlamsafeStatus {
    guard(|| {
        let ok = |p: f64| p > 0.0 && p < 1.0;
        if !(ok(target_low) && ok(target_high) && target_low < target_high && (0.0..=1.0).contains(&overlap_share)) {
            return invalid("need 0 < low < high < 1 and overlap share in [0, 1]");
        }
        let slot = out(out_oracle, "out_oracle")?;
        let model = calibrate_with(target_low, target_high, overlap_share).with_seed(seed);
        *slot = Box::into_raw(Box::new(SlamsafeOracle(model)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_oracle_free(oracle: *mut SlamsafeOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

#[no_mangle]
pub unsafe extern "C" fn slamsafe_oracle_probability(
    oracle: *const SlamsafeOracle,
    features_in: *const SlamsafeFeatures,
    out_p: *mut f64,
) -> SlamsafeStatus {
    guard(|| {
        let o = &deref(oracle, "oracle")?.0;
        let f = features(deref(features_in, "features")?)?;
        *out(out_p, "out_p")? = core(o.probability(&f))?;
        Ok(())
    })
}

/// Point at `t` ∈ [0, 1] on the quintic Bernstein curve with the six
/// control points at `control`.
#[no_mangle]
pub unsafe extern "C" fn slamsafe_bernstein_eval(control: *const SlamsafeVec2, t: f64, out_point: *mut SlamsafeVec2) -> SlamsafeStatus {
    guard(|| {
        if control.is_null() {
            return Err((SlamsafeStatus::NullPointer, "control is null".into()));
        }
        let pts = std::slice::from_raw_parts(control, 6);
        let cp: [Vec2; 6] = std::array::from_fn(|i| Vec2::new(pts[i].x, pts[i].y));
        let p = core(TrajectorySegment::new(cp).eval(t))?;
        *out(out_point, "out_point")? = SlamsafeVec2 { x: p.x, y: p.y };
        Ok(())
    })
}
