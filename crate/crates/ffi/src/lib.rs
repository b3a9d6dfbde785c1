//! C ABI over the echo-lab library.
//!
//! Every entry point returns an [`ElStatus`]. On failure a description is
//! kept per thread and can be copied out with [`el_last_error_message`].
//! Models are opaque handles created by [`el_model_new`] and released with
//! [`el_model_free`]. Fock indices cross the boundary doubled (`2l`), so
//! half-integer ladders need no floating point.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use echo_lab::coherent::{overlap_probability, SphereAngle};
use echo_lab::fidelity::{echo_matrix, fidelity_curve};
use echo_lab::floquet::ModelParams;
use echo_lab::interference::{extract_fidelity, synthesize_pattern, InterferencePattern, Noise, WavePacket};
use echo_lab::spinspace::{FockIndex, SpinBasis};
use echo_lab::{Complex64, Error};

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElStatus {
    Ok = 0,
    InvalidArgument = 1,
    Numerical = 2,
    NullPointer = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Model constants; `g = g_c / L` and `ε = σ / L` are derived internally.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ElModelParams {
    pub mu: f64,
    pub g_c: f64,
    pub kick: f64,
    pub period: f64,
    pub sigma: f64,
}

/// Opaque handle: a spin ladder plus one parameter set.
pub struct ElModel {
    basis: SpinBasis,
    params: ModelParams,
}

/// Samples in a pattern from [`el_synthesize_pattern`].
pub const EL_PATTERN_LEN: usize = 2048;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: ElStatus, msg: impl Into<String>) -> ElStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> ElStatus {
    let status = if e.is_numerical() {
        ElStatus::Numerical
    } else {
        ElStatus::InvalidArgument
    };
    fail(status, e.to_string())
}

/// Runs `body`, turning errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), ElStatus>) -> ElStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ElStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            fail(ElStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lib<T>(r: echo_lab::Result<T>) -> Result<T, ElStatus> {
    r.map_err(from_error)
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), ElStatus> {
    if p.is_null() {
        Err(fail(ElStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn room(len: usize, need: usize) -> Result<(), ElStatus> {
    if len < need {
        Err(fail(
            ElStatus::BufferTooSmall,
            format!("buffer holds {len} values, {need} needed"),
        ))
    } else {
        Ok(())
    }
}

/// Copies the last error of this thread into `buf` as a NUL-terminated
/// string, truncating if needed. Returns the full length including the NUL,
/// or 0 if there is no error. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn el_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            // SAFETY: caller guarantees `buf` holds `len >= n` bytes.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn el_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Creates a model for `n_atoms` atoms. On success `*out` owns the handle.
///
/// # Safety
/// `params` must point to a valid `ElModelParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn el_model_new(n_atoms: u32, params: *const ElModelParams, out: *mut *mut ElModel) -> ElStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        // SAFETY: checked non-null; caller guarantees validity.
        let p = unsafe { *params };
        let params = ModelParams {
            mu: p.mu,
            g_c: p.g_c,
            kick: p.kick,
            period: p.period,
            sigma: p.sigma,
        };
        lib(params.validate())?;
        let basis = lib(SpinBasis::new(n_atoms))?;
        let model = Box::new(ElModel { basis, params });
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(model) };
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`el_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn el_model_free(model: *mut ElModel) {
    if !model.is_null() {
        // SAFETY: caller passes a live handle from `el_model_new`.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Hilbert-space dimension `N + 1`, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn el_model_dim(model: *const ElModel) -> usize {
    // SAFETY: caller guarantees the handle is live when non-null.
    unsafe { model.as_ref() }.map_or(0, |m| m.basis.dim())
}

/// # Safety
/// `model` must be null or a live handle.
unsafe fn model_ref<'a>(model: *const ElModel) -> Result<&'a ElModel, ElStatus> {
    non_null(model, "model")?;
    // SAFETY: checked non-null; caller guarantees liveness.
    Ok(unsafe { &*model })
}

fn index(basis: &SpinBasis, twice: i64, what: &str) -> Result<FockIndex, ElStatus> {
    let l = FockIndex::from_twice(twice);
    basis
        .row(l)
        .map_err(|e| fail(ElStatus::InvalidArgument, format!("{what}: {e}")))?;
    Ok(l)
}

/// Writes `M(n)` for `n = 0..=n_max` from Fock state `k = k_twice / 2`.
/// `out` must hold at least `n_max + 1` values.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn el_model_fidelity_curve(
    model: *const ElModel,
    k_twice: i64,
    n_max: usize,
    out: *mut f64,
    len: usize,
) -> ElStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let m = unsafe { model_ref(model) }?;
        non_null(out, "out")?;
        room(len, n_max.saturating_add(1))?;
        let k = index(&m.basis, k_twice, "k")?;
        let curve = lib(fidelity_curve(&m.basis, &m.params, k, n_max))?;
        // SAFETY: `out` holds `len >= n_max + 1` values.
        let dst = unsafe { std::slice::from_raw_parts_mut(out, n_max + 1) };
        for (d, s) in dst.iter_mut().zip(&curve.samples) {
            *d = s.probability;
        }
        Ok(())
    })
}

/// Writes `M_lk(n) = |⟨l|(U_ε†)ⁿUⁿ|k⟩|²` for `n = 0..=n_max`.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn el_model_echo_row(
    model: *const ElModel,
    l_twice: i64,
    k_twice: i64,
    n_max: usize,
    out: *mut f64,
    len: usize,
) -> ElStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let m = unsafe { model_ref(model) }?;
        non_null(out, "out")?;
        room(len, n_max.saturating_add(1))?;
        let l = index(&m.basis, l_twice, "l")?;
        let k = index(&m.basis, k_twice, "k")?;
        let matrix = lib(echo_matrix(&m.basis, &m.params, l, &[k], n_max))?;
        // SAFETY: `out` holds `len >= n_max + 1` values.
        let dst = unsafe { std::slice::from_raw_parts_mut(out, n_max + 1) };
        for (d, v) in dst.iter_mut().zip(matrix.series(0)) {
            *d = v;
        }
        Ok(())
    })
}

/// `|⟨θ, φ|l⟩|²` for the coherent state at polar angle `theta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn el_coherent_overlap(n_atoms: u32, theta: f64, l_twice: i64, out: *mut f64) -> ElStatus {
    guard(|| {
        non_null(out, "out")?;
        let basis = lib(SpinBasis::new(n_atoms))?;
        let l = index(&basis, l_twice, "l")?;
        let angle = lib(SphereAngle::new(theta, 0.0))?;
        let p = lib(overlap_probability(&basis, &angle, l))?;
        // SAFETY: checked non-null.
        unsafe { *out = p };
        Ok(())
    })
}

/// Two-well density `P(x)` on the default packet pair of width `width`,
/// containing fidelity amplitude `f_re + i f_im`. A positive `noise` adds
/// seeded multiplicative noise of that relative size. Writes
/// [`EL_PATTERN_LEN`] samples.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn el_synthesize_pattern(
    width: f64,
    f_re: f64,
    f_im: f64,
    noise: f64,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> ElStatus {
    guard(|| {
        non_null(out, "out")?;
        room(len, EL_PATTERN_LEN)?;
        let (chi1, chi2) = lib(WavePacket::default_pair(width))?;
        let noise = (noise > 0.0).then_some(Noise::Multiplicative { relative: noise, seed });
        let pattern = lib(synthesize_pattern(&chi1, &chi2, Complex64::new(f_re, f_im), noise))?;
        // SAFETY: `out` holds `len >= EL_PATTERN_LEN` values.
        let dst = unsafe { std::slice::from_raw_parts_mut(out, EL_PATTERN_LEN) };
        dst.copy_from_slice(&pattern.intensities);
        Ok(())
    })
}

/// Fits `|f̃|` and its phase from a pattern on the default packet pair.
///
/// # Safety
/// `pattern` must be valid for `len` reads; `magnitude` and `phase` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn el_extract_fidelity(
    width: f64,
    pattern: *const f64,
    len: usize,
    magnitude: *mut f64,
    phase: *mut f64,
) -> ElStatus {
    guard(|| {
        non_null(pattern, "pattern")?;
        non_null(magnitude, "magnitude")?;
        non_null(phase, "phase")?;
        if len != EL_PATTERN_LEN {
            return Err(fail(
                ElStatus::InvalidArgument,
                format!("pattern has {len} samples, expected {EL_PATTERN_LEN}"),
            ));
        }
        let (chi1, chi2) = lib(WavePacket::default_pair(width))?;
        // SAFETY: checked non-null; caller guarantees `len` readable values.
        let values = unsafe { std::slice::from_raw_parts(pattern, len) }.to_vec();
        let pattern = InterferencePattern {
            grid: chi1.grid,
            intensities: values,
            noise: None,
        };
        let est = lib(extract_fidelity(&pattern, &chi1, &chi2))?;
        // SAFETY: checked non-null.
        unsafe {
            *magnitude = est.magnitude;
            *phase = est.phase;
        }
        Ok(())
    })
}
