//! C ABI over the `gecsr` solver.
//!
//! Objects are exposed as opaque handles created by `*_new`/`*_load`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`GecsrStatus`]; on failure the message is available from
//! [`gecsr_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gecsr::gecsr::{bessel_ratio, run, Schedule, SolverTrace};
use gecsr::hypernets::{Checkpoint, Overflow};
use gecsr::model::{DatasetManifest, Sample, SignalPrior};
use gecsr::training::Controller;
use gecsr::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GecsrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Config = 3,
    Checkpoint = 4,
    Incompatible = 5,
    Numeric = 6,
    Shape = 7,
    Io = 8,
    Format = 9,
    BufferTooSmall = 10,
    OutOfRange = 11,
    Panic = 12,
    Other = 13,
}

pub struct GecsrManifest {
    inner: DatasetManifest,
}

pub struct GecsrSample {
    inner: Sample,
}

pub struct GecsrController {
    inner: Controller,
    variant: CString,
}

pub struct GecsrTrace {
    inner: SolverTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(err: &Error) -> GecsrStatus {
    match err {
        Error::Config(_) | Error::Manifest(_) | Error::Json(_) | Error::InvalidPrior(_) | Error::InvalidSpectrum(_) => {
            GecsrStatus::Config
        }
        Error::Checkpoint(_) => GecsrStatus::Checkpoint,
        Error::Incompatible(_) | Error::LayerOverflow { .. } => GecsrStatus::Incompatible,
        Error::Numeric(_) | Error::Domain(_) | Error::Policy(_) => GecsrStatus::Numeric,
        Error::Shape(_) => GecsrStatus::Shape,
        Error::Io(_) => GecsrStatus::Io,
        Error::Format(_) => GecsrStatus::Format,
        _ => GecsrStatus::Other,
    }
}

fn fail(status: GecsrStatus, msg: impl Into<String>) -> GecsrStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), GecsrStatus>) -> GecsrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GecsrStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(GecsrStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: gecsr::Result<T>) -> Result<T, GecsrStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, GecsrStatus> {
    if s.is_null() {
        return Err(fail(GecsrStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(GecsrStatus::InvalidString, "string argument is not UTF-8"))
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, GecsrStatus> {
    p.as_ref().ok_or_else(|| fail(GecsrStatus::NullPointer, "null handle"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), GecsrStatus> {
    if out.is_null() {
        return Err(fail(GecsrStatus::NullPointer, "null output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn out_slice<'a>(buf: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], GecsrStatus> {
    if buf.is_null() {
        return Err(fail(GecsrStatus::NullPointer, "null output buffer"));
    }
    if len < need {
        return Err(fail(GecsrStatus::BufferTooSmall, format!("buffer holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(buf, need))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gecsr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gecsr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `I1(kappa) / I0(kappa)` for `kappa >= 0`.
///
/// # Safety
/// `out` must be a valid pointer to one `double`.
#[no_mangle]
pub unsafe extern "C" fn gecsr_bessel_ratio(kappa: f64, out: *mut f64) -> GecsrStatus {
    guard(|| {
        let r = lift(bessel_ratio(kappa))?;
        *get(out as *const f64).map(|_| out)? = r;
        Ok(())
    })
}

/// Parses and validates a dataset manifest.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gecsr_manifest_from_json(json: *const c_char, out: *mut *mut GecsrManifest) -> GecsrStatus {
    guard(|| {
        let m = lift(DatasetManifest::from_json(text(json)?))?;
        put(out, GecsrManifest { inner: m })
    })
}

/// Default training scenario with the given seed and sample count.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gecsr_manifest_default(seed: u64, count: usize, out: *mut *mut GecsrManifest) -> GecsrStatus {
    guard(|| put(out, GecsrManifest { inner: DatasetManifest::standard(seed, count) }))
}

/// # Safety
/// `manifest` must be a live handle; the out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn gecsr_manifest_shape(
    manifest: *const GecsrManifest,
    count: *mut usize,
    m: *mut usize,
    n: *mut usize,
) -> GecsrStatus {
    guard(|| {
        let man = &get(manifest)?.inner;
        for (p, v) in [(count, man.count), (m, man.m), (n, man.n)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `manifest` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gecsr_manifest_free(manifest: *mut GecsrManifest) {
    if !manifest.is_null() {
        drop(Box::from_raw(manifest));
    }
}

/// Regenerates sample `index` of the manifest.
///
/// # Safety
/// `manifest` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gecsr_sample_new(manifest: *const GecsrManifest, index: u64, out: *mut *mut GecsrSample) -> GecsrStatus {
    guard(|| {
        let man = &get(manifest)?.inner;
        if index >= man.count as u64 {
            return Err(fail(GecsrStatus::OutOfRange, format!("sample {index} of {}", man.count)));
        }
        let s = lift(man.sample(index))?;
        put(out, GecsrSample { inner: s })
    })
}

/// Measurement count `M` and signal length `N`.
///
/// # Safety
/// `sample` must be a live handle; the out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn gecsr_sample_shape(sample: *const GecsrSample, m: *mut usize, n: *mut usize) -> GecsrStatus {
    guard(|| {
        let s = &get(sample)?.inner;
        if !m.is_null() {
            *m = s.y.len();
        }
        if !n.is_null() {
            *n = s.x.len();
        }
        Ok(())
    })
}

/// Copies the `M` magnitude measurements into `buf`.
///
/// # Safety
/// `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gecsr_sample_measurements(sample: *const GecsrSample, buf: *mut f64, len: usize) -> GecsrStatus {
    guard(|| {
        let s = &get(sample)?.inner;
        out_slice(buf, len, s.y.len())?.copy_from_slice(&s.y);
        Ok(())
    })
}

/// Copies the true signal as separate real and imaginary parts.
///
/// # Safety
/// `re` and `im` must each hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gecsr_sample_signal(sample: *const GecsrSample, re: *mut f64, im: *mut f64, len: usize) -> GecsrStatus {
    guard(|| {
        let s = &get(sample)?.inner;
        let n = s.x.len();
        let re = out_slice(re, len, n)?;
        let im = out_slice(im, len, n)?;
        for (k, v) in s.x.iter().enumerate() {
            re[k] = v.re;
            im[k] = v.im;
        }
        Ok(())
    })
}

/// # Safety
/// `sample` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gecsr_sample_free(sample: *mut GecsrSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

fn controller_handle(c: Controller) -> GecsrController {
    let variant = CString::new(c.variant().name()).expect("variant names have no NUL");
    GecsrController { inner: c, variant }
}

/// Loads a controller from a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gecsr_controller_load(path: *const c_char, out: *mut *mut GecsrController) -> GecsrStatus {
    guard(|| {
        let ck = lift(Checkpoint::load(Path::new(text(path)?)))?;
        let c = lift(Controller::from_checkpoint(&ck))?;
        put(out, controller_handle(c))
    })
}

/// Builds a controller from checkpoint JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gecsr_controller_from_json(json: *const c_char, out: *mut *mut GecsrController) -> GecsrStatus {
    guard(|| {
        let ck = lift(Checkpoint::from_json(text(json)?))?;
        let c = lift(Controller::from_checkpoint(&ck))?;
        put(out, controller_handle(c))
    })
}

/// Variant name; owned by the handle.
///
/// # Safety
/// `controller` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gecsr_controller_variant(controller: *const GecsrController) -> *const c_char {
    match controller.as_ref() {
        Some(c) => c.variant.as_ptr(),
        None => ptr::null(),
    }
}

/// # Safety
/// `controller` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gecsr_controller_free(controller: *mut GecsrController) {
    if !controller.is_null() {
        drop(Box::from_raw(controller));
    }
}

/// Runs `layers` solver layers on a sample. A null controller selects the
/// fixed `0.9^t` schedule; static controllers use 0.5 past their depth.
///
/// # Safety
/// `sample` must be a live handle, `controller` null or live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gecsr_run(
    sample: *const GecsrSample,
    controller: *const GecsrController,
    layers: usize,
    out: *mut *mut GecsrTrace,
) -> GecsrStatus {
    guard(|| {
        let s = &get(sample)?.inner;
        let prior = lift(SignalPrior::new(s.rho))?;
        let trace = match controller.as_ref() {
            Some(c) => {
                lift(c.inner.check_compatible(s.x.len()))?;
                lift(run(s, &prior, &mut *c.inner.policy(Overflow::Constant(0.5)), layers))?
            }
            None => lift(run(s, &prior, &mut Schedule::Exponential(0.9), layers))?,
        };
        put(out, GecsrTrace { inner: trace })
    })
}

/// Number of layers the run completed.
///
/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gecsr_trace_len(trace: *const GecsrTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.layers.len())
}

/// Whether the run stopped early on a numeric failure.
///
/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gecsr_trace_diverged(trace: *const GecsrTrace) -> bool {
    trace.as_ref().is_some_and(|t| t.inner.diverged)
}

/// Per-layer NMSE in dB.
///
/// # Safety
/// `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gecsr_trace_nmse_db(trace: *const GecsrTrace, buf: *mut f64, len: usize) -> GecsrStatus {
    guard(|| {
        let t = &get(trace)?.inner;
        out_slice(buf, len, t.layers.len())?.copy_from_slice(&t.nmse_curve());
        Ok(())
    })
}

/// Per-layer damping factors of both sides.
///
/// # Safety
/// `beta_z` and `beta_x` must each hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gecsr_trace_betas(trace: *const GecsrTrace, beta_z: *mut f64, beta_x: *mut f64, len: usize) -> GecsrStatus {
    guard(|| {
        let t = &get(trace)?.inner;
        let k = t.layers.len();
        let z = out_slice(beta_z, len, k)?;
        let x = out_slice(beta_x, len, k)?;
        for (i, l) in t.layers.iter().enumerate() {
            z[i] = l.beta_z;
            x[i] = l.beta_x;
        }
        Ok(())
    })
}

/// Signal estimate after layer `t` (1-based), real and imaginary parts.
///
/// # Safety
/// `re` and `im` must each hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gecsr_trace_estimate(trace: *const GecsrTrace, t: usize, re: *mut f64, im: *mut f64, len: usize) -> GecsrStatus {
    guard(|| {
        let tr = &get(trace)?.inner;
        let Some(layer) = t.checked_sub(1).and_then(|i| tr.layers.get(i)) else {
            return Err(fail(GecsrStatus::OutOfRange, format!("layer {t} of {}", tr.layers.len())));
        };
        let n = layer.x_hat.len();
        let re = out_slice(re, len, n)?;
        let im = out_slice(im, len, n)?;
        for (k, v) in layer.x_hat.iter().enumerate() {
            re[k] = v.re;
            im[k] = v.im;
        }
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gecsr_trace_free(trace: *mut GecsrTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
