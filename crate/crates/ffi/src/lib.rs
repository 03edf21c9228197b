//! C ABI over `tvg-core`.
//!
//! Every fallible function returns a [`TvgStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and
//! can be read with [`tvg_last_error_message`]. Latents cross the boundary
//! as opaque [`TvgLatent`] handles owned by the caller and released with
//! [`tvg_latent_free`]; strings returned by the library are released with
//! [`tvg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tvg_core::conditioning::{self, Embedding, SlerpMode};
use tvg_core::fbif::{self, FusionWeights};
use tvg_core::format;
use tvg_core::gpr::{self, LengthScale};
use tvg_core::pipeline::{self, PipelineConfig};
use tvg_core::select::{self, Metric, Source};
use tvg_core::{Error, ErrorKind, LatentVideo};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvgStatus {
    Ok = 0,
    /// Invalid parameter or argument.
    Usage = 1,
    /// Shape, format, config or I/O problem.
    Data = 2,
    /// Factorization failure, non-finite values, antiparallel embeddings.
    Numerical = 3,
    NullPointer = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvgMetric {
    L2 = 0,
    GradL2 = 1,
}

/// Opaque latent video, `frames x positions x channels`.
pub struct TvgLatent {
    inner: LatentVideo,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> TvgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TvgStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            match e.kind() {
                ErrorKind::Usage => TvgStatus::Usage,
                ErrorKind::Data => TvgStatus::Data,
                ErrorKind::Numerical => TvgStatus::Numerical,
            }
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer passed as `{name}`"));
            TvgStatus::NullPointer
        }
        Ok(Err(Failure::Usage(msg))) => {
            set_last_error(msg);
            TvgStatus::Usage
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            TvgStatus::Panic
        }
    }
}

unsafe fn handle<'a>(p: *const TvgLatent, name: &'static str) -> FfiResult<&'a LatentVideo> {
    p.as_ref().map(|l| &l.inner).ok_or(Failure::Null(name))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &'static str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &'static str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Usage(format!("`{name}` is not valid UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &'static str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn boxed(v: LatentVideo) -> *mut TvgLatent {
    Box::into_raw(Box::new(TvgLatent { inner: v }))
}

fn check_len(name: &str, expected: usize, actual: usize) -> FfiResult {
    if expected == actual {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "`{name}` holds {actual} elements, expected {expected}"
        )))
    }
}

/// Message for the last failed call on this thread, or null after a
/// successful call. Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn tvg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn tvg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `frames * positions * channels` frame-major values into a new latent.
///
/// # Safety
/// `data` must point to that many readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvg_latent_new(
    frames: usize,
    positions: usize,
    channels: usize,
    data: *const f64,
    out: *mut *mut TvgLatent,
) -> TvgStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let len = frames
            .checked_mul(positions)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Failure::Usage("dimensions overflow".into()))?;
        let data = slice(data, len, "data")?;
        *out = boxed(LatentVideo::new(
            frames,
            positions,
            channels,
            data.to_vec(),
        )?);
        Ok(())
    })
}

/// Releases a latent. Null is a no-op.
///
/// # Safety
/// `latent` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tvg_latent_free(latent: *mut TvgLatent) {
    if !latent.is_null() {
        drop(Box::from_raw(latent));
    }
}

/// # Safety
/// `latent` must be a live handle; the three out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvg_latent_dims(
    latent: *const TvgLatent,
    frames: *mut usize,
    positions: *mut usize,
    channels: *mut usize,
) -> TvgStatus {
    guard(|| {
        let v = handle(latent, "latent")?;
        let (s, n, p) = v.shape();
        *out_ptr(frames, "frames")? = s;
        *out_ptr(positions, "positions")? = n;
        *out_ptr(channels, "channels")? = p;
        Ok(())
    })
}

/// Copies the frame-major values into `buf`, whose length must match exactly.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tvg_latent_copy_data(
    latent: *const TvgLatent,
    buf: *mut f64,
    len: usize,
) -> TvgStatus {
    guard(|| {
        let v = handle(latent, "latent")?;
        check_len("buf", v.data().len(), len)?;
        slice_mut(buf, len, "buf")?.copy_from_slice(v.data());
        Ok(())
    })
}

/// Reads a TVGL file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvg_latent_read(
    path: *const c_char,
    out: *mut *mut TvgLatent,
) -> TvgStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let v = format::read_tensor(c_str(path, "path")?)?;
        *out = boxed(v);
        Ok(())
    })
}

/// Writes a TVGL file.
///
/// # Safety
/// `latent` must be a live handle; `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tvg_latent_write(
    latent: *const TvgLatent,
    path: *const c_char,
) -> TvgStatus {
    guard(|| {
        let v = handle(latent, "latent")?;
        format::write_tensor(v, c_str(path, "path")?)?;
        Ok(())
    })
}

/// Replaces the intermediate frames by the endpoint GPR posterior mean.
/// A `length_scale` of zero or less selects the median heuristic.
///
/// # Safety
/// `input` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvg_gpr_smooth(
    input: *const TvgLatent,
    length_scale: f64,
    noise_variance: f64,
    out: *mut *mut TvgLatent,
) -> TvgStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let z = handle(input, "input")?;
        let mode = if length_scale > 0.0 {
            LengthScale::Fixed(length_scale)
        } else {
            LengthScale::Median
        };
        *out = boxed(gpr::gpr_smooth_with(z, mode, noise_variance)?);
        Ok(())
    })
}

/// Frequency-aware fusion. `rev` is the raw reverse-direction latent; it
/// is re-reversed internally.
///
/// # Safety
/// `fwd` and `rev` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvg_fuse(
    fwd: *const TvgLatent,
    rev: *const TvgLatent,
    lambda_start: f64,
    lambda_end: f64,
    lambda_freq: f64,
    window: usize,
    out: *mut *mut TvgLatent,
) -> TvgStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let weights = FusionWeights {
            lambda_start,
            lambda_end,
            lambda_freq,
            window,
        };
        weights.validate()?;
        let fused = fbif::fuse(handle(fwd, "fwd")?, handle(rev, "rev")?, &weights)?;
        *out = boxed(fused);
        Ok(())
    })
}

/// Close-distance frame selection with a [`TvgMetric`] value. When
/// `sources` is non-null it receives one byte per output frame: 0 for
/// forward, 1 for reverse.
///
/// # Safety
/// `fwd` and `rev` must be live handles; `out` must be writable; `sources`
/// null or pointing to `sources_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tvg_select_frames(
    fwd: *const TvgLatent,
    rev: *const TvgLatent,
    metric: u32,
    out: *mut *mut TvgLatent,
    sources: *mut u8,
    sources_len: usize,
) -> TvgStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let metric = match metric {
            m if m == TvgMetric::L2 as u32 => Metric::L2,
            m if m == TvgMetric::GradL2 as u32 => Metric::GradL2,
            m => return Err(Failure::Usage(format!("unknown metric {m}"))),
        };
        let (merged, trace) =
            select::select_frames(handle(fwd, "fwd")?, handle(rev, "rev")?, &metric)?;
        if !sources.is_null() {
            check_len("sources", merged.frames(), sources_len)?;
            let dst = slice_mut(sources, sources_len, "sources")?;
            for (d, s) in dst.iter_mut().zip(trace.sources()) {
                *d = match s {
                    Source::Forward => 0,
                    Source::Reverse => 1,
                };
            }
        }
        *out = boxed(merged);
        Ok(())
    })
}

/// SLERP schedule between two `(tokens, dim)` embeddings, written into
/// `out` as `frames x tokens x dim`.
///
/// # Safety
/// `a` and `b` must point to `tokens * dim` doubles; `out` to `out_len`
/// writable doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn tvg_slerp_schedule(
    a: *const f64,
    b: *const f64,
    tokens: usize,
    dim: usize,
    frames: usize,
    w_start: f64,
    w_end: f64,
    per_token: bool,
    out: *mut f64,
    out_len: usize,
) -> TvgStatus {
    guard(|| {
        let len = tokens
            .checked_mul(dim)
            .ok_or_else(|| Failure::Usage("dimensions overflow".into()))?;
        let a = Embedding::new(tokens, dim, slice(a, len, "a")?.to_vec())?;
        let b = Embedding::new(tokens, dim, slice(b, len, "b")?.to_vec())?;
        let mode = if per_token {
            SlerpMode::PerToken
        } else {
            SlerpMode::Global
        };
        let sched = conditioning::slerp_schedule_with(&a, &b, frames, w_start, w_end, mode)?;
        check_len("out", frames * len, out_len)?;
        let dst = slice_mut(out, out_len, "out")?;
        for (chunk, e) in dst.chunks_exact_mut(len.max(1)).zip(sched.frames()) {
            chunk.copy_from_slice(e.data());
        }
        Ok(())
    })
}

/// Runs the pipeline from a JSON config. Relative paths in the config are
/// taken relative to the working directory. `report` receives the report
/// JSON, to be released with [`tvg_string_free`]; it may be null.
///
/// # Safety
/// `config_json` must be a nul-terminated string; `out` must be writable;
/// `report` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tvg_run(
    config_json: *const c_char,
    out: *mut *mut TvgLatent,
    report: *mut *mut c_char,
) -> TvgStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = PipelineConfig::from_json(c_str(config_json, "config_json")?)?;
        let (video, rep) = pipeline::run(&cfg)?;
        if let Some(r) = report.as_mut() {
            let text = CString::new(rep.to_json()).expect("json has no nul");
            *r = text.into_raw();
        }
        *out = boxed(video);
        Ok(())
    })
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tvg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
