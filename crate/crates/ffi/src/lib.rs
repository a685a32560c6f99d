//! C ABI over `crbridge`.
//!
//! Every function returns a [`CrbStatus`]. On failure a message describing
//! the last error on the calling thread is available from
//! [`crb_last_error`]. Generators are opaque handles created by
//! [`crb_generator_load`] and released with [`crb_generator_free`]; a
//! handle may be used for concurrent forward passes from several threads.
//!
//! Images cross the boundary as row-major buffers of `width * height`
//! elements owned by the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use crbridge::canny::{canny, CannyConfig};
use crbridge::data::{chebyshev_score, project_point_cloud, CameraIntrinsics, PointCloud};
use crbridge::generator::GeneratorWeights;
use crbridge::persist::{load_checkpoint, Role};
use crbridge::{Error, GrayImage};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    CorruptArtifact = 4,
    Io = 5,
    NonFinite = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrbRole {
    Image = 0,
    Depth = 1,
}

/// A loaded CR generator.
pub struct CrbGenerator {
    role: Role,
    weights: GeneratorWeights<f32>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(CrbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Shape(_) => CrbStatus::ShapeMismatch,
            Error::Corrupt { .. } | Error::Format(_) => CrbStatus::CorruptArtifact,
            Error::Io { .. } => CrbStatus::Io,
            Error::NonFinite { .. } => CrbStatus::NonFinite,
            Error::InvalidArgument(_) | Error::Config(_) | Error::InsufficientCorrespondences(_) => {
                CrbStatus::InvalidArgument
            }
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(CrbStatus::NullPointer, format!("{name} is NULL"))
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CrbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CrbStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {msg}"));
            CrbStatus::Panic
        }
    }
}

fn pixel_count(width: usize, height: usize) -> Result<usize, Failure> {
    match width.checked_mul(height) {
        Some(n) if n > 0 => Ok(n),
        _ => Err(Failure(
            CrbStatus::InvalidArgument,
            format!("invalid image size {width}x{height}"),
        )),
    }
}

/// # Safety
/// `ptr` must be NULL or valid for reading `len` elements.
unsafe fn input<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `ptr` must be NULL or valid for writing `len` elements.
unsafe fn output<'a, T>(ptr: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn gray(ptr: *const f32, width: usize, height: usize, name: &str) -> Result<GrayImage, Failure> {
    let n = pixel_count(width, height)?;
    let data = input(ptr, n, name)?.to_vec();
    Ok(GrayImage::new(width, height, data)?)
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `crb_*` call on the same thread.
#[no_mangle]
pub extern "C" fn crb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn crb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a generator checkpoint. On success `*out` receives a handle owned
/// by the caller.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crb_generator_load(path: *const c_char, out: *mut *mut CrbGenerator) -> CrbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(CrbStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let (role, weights) = load_checkpoint(Path::new(path))?;
        *out = Box::into_raw(Box::new(CrbGenerator { role, weights }));
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `generator` must come from [`crb_generator_load`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn crb_generator_free(generator: *mut CrbGenerator) {
    if !generator.is_null() {
        drop(Box::from_raw(generator));
    }
}

/// Input size the generator was trained for.
///
/// # Safety
/// `generator` must be a live handle; `width` and `height` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn crb_generator_dims(
    generator: *const CrbGenerator,
    width: *mut usize,
    height: *mut usize,
) -> CrbStatus {
    guard(|| {
        let g = generator.as_ref().ok_or_else(|| null("generator"))?;
        let w = width.as_mut().ok_or_else(|| null("width"))?;
        let h = height.as_mut().ok_or_else(|| null("height"))?;
        *w = g.weights.config.input_width;
        *h = g.weights.config.input_height;
        Ok(())
    })
}

/// Which modality the generator consumes.
///
/// # Safety
/// `generator` must be a live handle and `role` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crb_generator_role(generator: *const CrbGenerator, role: *mut CrbRole) -> CrbStatus {
    guard(|| {
        let g = generator.as_ref().ok_or_else(|| null("generator"))?;
        let r = role.as_mut().ok_or_else(|| null("role"))?;
        *r = match g.role {
            Role::Image => CrbRole::Image,
            Role::Depth => CrbRole::Depth,
        };
        Ok(())
    })
}

/// Computes the CR of an image in `[0, 1]` whose size equals the
/// generator's input size. `cr` receives `width * height` values.
///
/// # Safety
/// Buffers must hold `width * height` floats; `generator` must be live.
#[no_mangle]
pub unsafe extern "C" fn crb_generator_forward(
    generator: *const CrbGenerator,
    image: *const f32,
    width: usize,
    height: usize,
    cr: *mut f32,
) -> CrbStatus {
    guard(|| {
        let g = generator.as_ref().ok_or_else(|| null("generator"))?;
        let img = gray(image, width, height, "image")?;
        let out = output(cr, width * height, "cr")?;
        let result = g.weights.forward(&img)?;
        out.copy_from_slice(result.data());
        Ok(())
    })
}

/// Canny edge map; `edges` receives 1 on edge pixels and 0 elsewhere.
///
/// # Safety
/// `image` must hold `width * height` floats and `edges` as many bytes.
#[no_mangle]
pub unsafe extern "C" fn crb_canny(
    image: *const f32,
    width: usize,
    height: usize,
    sigma: f32,
    low_threshold: f32,
    high_threshold: f32,
    edges: *mut u8,
) -> CrbStatus {
    guard(|| {
        let img = gray(image, width, height, "image")?;
        let out = output(edges, width * height, "edges")?;
        let cfg = CannyConfig {
            sigma,
            low_threshold,
            high_threshold,
        };
        let e = canny(&img, &cfg)?;
        for (o, &v) in out.iter_mut().zip(e.data()) {
            *o = u8::from(v > 0.5);
        }
        Ok(())
    })
}

/// Projects `count` camera-frame points (`x, y, z` triples) through pinhole
/// intrinsics into a z-buffered depth image; pixels without a return are 0.
///
/// # Safety
/// `points` must hold `3 * count` doubles and `depth` `width * height`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn crb_project_point_cloud(
    points: *const f64,
    count: usize,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    depth: *mut f64,
) -> CrbStatus {
    guard(|| {
        let n = pixel_count(width, height)?;
        let coords = if count == 0 {
            &[][..]
        } else {
            let len = count
                .checked_mul(3)
                .ok_or_else(|| Failure(CrbStatus::InvalidArgument, "point count overflows".into()))?;
            input(points, len, "points")?
        };
        let out = output(depth, n, "depth")?;
        let intr = CameraIntrinsics::new(fx, fy, cx, cy, width, height)?;
        let cloud = PointCloud {
            points: coords.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect(),
        };
        let img = project_point_cloud(&cloud, &intr)?;
        out.copy_from_slice(img.data());
        Ok(())
    })
}

/// L∞ distance between two equally sized images in `[0, 1]`.
///
/// # Safety
/// `a` and `b` must hold `width * height` floats; `score` must be valid.
#[no_mangle]
pub unsafe extern "C" fn crb_chebyshev_score(
    a: *const f32,
    b: *const f32,
    width: usize,
    height: usize,
    score: *mut f32,
) -> CrbStatus {
    guard(|| {
        let s = score.as_mut().ok_or_else(|| null("score"))?;
        let a = gray(a, width, height, "a")?;
        let b = gray(b, width, height, "b")?;
        *s = chebyshev_score(&a, &b)?;
        Ok(())
    })
}
