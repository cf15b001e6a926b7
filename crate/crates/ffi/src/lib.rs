//! C ABI over the simulator.
//!
//! Every fallible call returns a [`DsStatus`]; on failure the message is
//! available from [`ds_last_error`]. Handles are opaque and must be
//! released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dickesim::analysis::{accidentals, jsi};
use dickesim::circuit::{preset, CircuitSpec};
use dickesim::pipeline::ideal_pipeline;
use dickesim::postselect::PostselectResult;
use dickesim::qubits::{reference_state, QubitBasis};
use dickesim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Truncation = 3,
    Space = 4,
    Spec = 5,
    Data = 6,
    Fit = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for DsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Truncation { .. } => DsStatus::Truncation,
            Error::Space(_) | Error::ZeroNorm => DsStatus::Space,
            Error::Spec(_) | Error::Config { .. } => DsStatus::Spec,
            Error::Data(_) | Error::Json(_) | Error::Csv(_) => DsStatus::Data,
            Error::Fit { .. } => DsStatus::Fit,
            Error::Io(_) => DsStatus::Io,
        }
    }
}

/// Opaque circuit description.
pub struct DsCircuit(CircuitSpec);

/// Opaque post-selected state.
pub struct DsResult(PostselectResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), (DsStatus, String)>) -> DsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (DsStatus, String) {
    (DsStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (DsStatus, String) {
    (DsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (DsStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library; valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Named network: `bell2`, `dicke4` or `dicke8`.
///
/// # Safety
/// `name` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_circuit_preset(name: *const c_char, out: *mut *mut DsCircuit) -> DsStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let spec = preset(name).map_err(lib)?;
        *out = Box::into_raw(Box::new(DsCircuit(spec)));
        Ok(())
    })
}

/// Circuit from its JSON description.
///
/// # Safety
/// `json` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_circuit_from_json(json: *const c_char, out: *mut *mut DsCircuit) -> DsStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let spec: CircuitSpec = serde_json::from_str(text).map_err(|e| lib(e.into()))?;
        spec.validate().map_err(lib)?;
        *out = Box::into_raw(Box::new(DsCircuit(spec)));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ds_circuit_free(c: *mut DsCircuit) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live handle and `ports`, `modes` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_circuit_size(c: *const DsCircuit, ports: *mut usize, modes: *mut usize) -> DsStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("circuit"))?;
        *out_arg(ports, "ports")? = c.0.ports.len();
        *out_arg(modes, "modes")? = c.0.modes;
        Ok(())
    })
}

/// Ideal source at phase `phi` through `c`, post-selected on one photon
/// per port.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_run_ideal(c: *const DsCircuit, phi: f64, out: *mut *mut DsResult) -> DsStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("circuit"))?;
        let out = out_arg(out, "out")?;
        if !phi.is_finite() {
            return Err((DsStatus::InvalidArgument, "phi must be finite".into()));
        }
        let n = c.0.ports.len();
        if n == 0 || n % 2 == 1 {
            return Err((DsStatus::InvalidArgument, "circuit needs an even number of ports".into()));
        }
        let r = ideal_pipeline(&c.0, phi, n / 2).map_err(lib)?;
        *out = Box::into_raw(Box::new(DsResult(r)));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ds_result_free(r: *mut DsResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_result_probability(r: *const DsResult, out: *mut f64) -> DsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        *out_arg(out, "out")? = r.0.probability;
        Ok(())
    })
}

/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_result_qubits(r: *const DsResult, out: *mut usize) -> DsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        *out_arg(out, "out")? = r.0.labels.len();
        Ok(())
    })
}

/// Fidelity with a named reference state such as `D4m2` or `psi4:0.3`.
///
/// # Safety
/// `r` must be a live handle, `reference` a valid C string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_result_fidelity(r: *const DsResult, reference: *const c_char, out: *mut f64) -> DsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        let name = str_arg(reference, "reference")?;
        let out = out_arg(out, "out")?;
        let psi = reference_state(name).map_err(lib)?;
        *out = r.0.fidelity_to(&psi).map_err(lib)?;
        Ok(())
    })
}

/// Outcome probabilities with every qubit measured in `basis` (`Z`, `X`,
/// `Y` or `R(theta)`). `buf` must hold `2^qubits` doubles.
///
/// # Safety
/// `r` must be a live handle, `basis` a valid C string and `buf` valid
/// for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ds_result_probabilities(
    r: *const DsResult,
    basis: *const c_char,
    buf: *mut f64,
    len: usize,
) -> DsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        let b: QubitBasis = str_arg(basis, "basis")?
            .parse()
            .map_err(|e: Error| (DsStatus::InvalidArgument, e.to_string()))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let n = r.0.labels.len();
        let rho = r.0.density().ok_or((DsStatus::Data, "no term survived post-selection".to_string()))?;
        let p = rho.probabilities_in(&vec![b; n]).map_err(lib)?;
        if len < p.len() {
            return Err((DsStatus::InvalidArgument, format!("buffer holds {len}, need {}", p.len())));
        }
        std::slice::from_raw_parts_mut(buf, p.len()).copy_from_slice(&p);
        Ok(())
    })
}

/// JSON rendering of the result; release with [`ds_string_free`].
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_result_json(r: *const DsResult, out: *mut *mut c_char) -> DsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        let out = out_arg(out, "out")?;
        let s = r.0.to_json().to_string();
        *out = CString::new(s).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Spectral purity of the dual-pump source at signal/pump Q ratio
/// `q_ratio` on an `n` x `n` grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_jsi_purity(q_ratio: f64, n: usize, out: *mut f64) -> DsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cfg = jsi::JsiConfig { n, ..jsi::JsiConfig::new(q_ratio) };
        *out = jsi::jsi(&cfg).map_err(lib)?.purity();
        Ok(())
    })
}

/// `1 + purity`
#[no_mangle]
pub extern "C" fn ds_accidental_ratio(purity: f64) -> f64 {
    accidentals::accidental_ratio(purity)
}
