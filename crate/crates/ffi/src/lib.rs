//! C interface. Instances and solutions are opaque handles; every call
//! returns an `NcStatus`, and the message for the last failure on the
//! calling thread is available from `nc_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nodecap::bench::status_of;
use nodecap::energy::solve_energy;
use nodecap::error::Error;
use nodecap::gen::{generate, Family, GenParams, Kind};
use nodecap::graph::cost_to_f64;
use nodecap::io::{Instance, InstanceFile, KnobsFile};
use nodecap::mcnc::solve_mcnc;
use nodecap::ssnc::solve_ssnc;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcStatus {
    Ok = 0,
    Internal = 1,
    Infeasible = 2,
    Stall = 3,
    Parse = 4,
    NullPointer = 5,
    InvalidArgument = 6,
}

pub struct NcInstance {
    file: InstanceFile,
}

pub struct NcSolution {
    cost: f64,
    congestion: f64,
    energy: f64,
    json: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status(e: &Error) -> NcStatus {
    set_error(e.to_string());
    match e.exit_code() {
        2 => NcStatus::Infeasible,
        3 => NcStatus::Stall,
        4 => NcStatus::Parse,
        _ => NcStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> NcStatus) -> NcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            NcStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, NcStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(NcStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        NcStatus::InvalidArgument
    })
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Parses a JSON instance. `strict` nonzero rejects unknown fields.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_instance_parse(text: *const c_char, strict: i32, out: *mut *mut NcInstance) -> NcStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return NcStatus::NullPointer;
        }
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match InstanceFile::parse(text, strict != 0).and_then(|f| f.instance().map(|_| f)) {
            Ok(file) => {
                *out = Box::into_raw(Box::new(NcInstance { file }));
                NcStatus::Ok
            }
            Err(e) => status(&e),
        }
    })
}

/// Generates an instance. `family` is one of `random-geometric`, `grid`,
/// `star-pathological`, `binary-merge`, `dumbbell`; `kind` one of `ssnc`,
/// `mcnc`, `eevrp`.
///
/// # Safety
/// String arguments must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_generate(
    family: *const c_char,
    kind: *const c_char,
    n: usize,
    demands: usize,
    capacity: u64,
    seed: u64,
    out: *mut *mut NcInstance,
) -> NcStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return NcStatus::NullPointer;
        }
        let (family, kind) = match (str_arg(family, "family"), str_arg(kind, "kind")) {
            (Ok(f), Ok(k)) => (f, k),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let (Ok(family), Ok(kind)) = (family.parse::<Family>(), kind.parse::<Kind>()) else {
            set_error("unknown family or kind");
            return NcStatus::InvalidArgument;
        };
        let p = GenParams {
            family,
            kind,
            n,
            demands,
            capacity,
            ..GenParams::default()
        };
        match generate(&p, seed) {
            Ok(file) => {
                *out = Box::into_raw(Box::new(NcInstance { file }));
                NcStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                NcStatus::InvalidArgument
            }
        }
    })
}

/// Serializes an instance; free the string with `nc_string_free`.
///
/// # Safety
/// `inst` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_instance_to_json(inst: *const NcInstance, out: *mut *mut c_char) -> NcStatus {
    guard(|| {
        if inst.is_null() || out.is_null() {
            set_error("null argument");
            return NcStatus::NullPointer;
        }
        *out = to_c_string((*inst).file.to_json());
        NcStatus::Ok
    })
}

/// # Safety
/// `inst` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nc_instance_free(inst: *mut NcInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Solves the instance with default knobs, dispatching on its kind.
///
/// # Safety
/// `inst` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_solve(inst: *const NcInstance, seed: u64, out: *mut *mut NcSolution) -> NcStatus {
    guard(|| {
        if inst.is_null() || out.is_null() {
            set_error("null argument");
            return NcStatus::NullPointer;
        }
        let knobs = KnobsFile::default();
        let solved = (*inst).file.instance().and_then(|i| {
            Ok(match i {
                Instance::Ssnc(i) => {
                    let s = solve_ssnc(&i, &knobs.ssnc())?;
                    (cost_to_f64(&s.cost), s.congestion, f64::NAN, serde_json::to_string(&s))
                }
                Instance::Mcnc(i) => {
                    let s = solve_mcnc(&i, &knobs.mcnc(false), seed)?;
                    (cost_to_f64(&s.cost), s.congestion, f64::NAN, serde_json::to_string(&s))
                }
                Instance::Eevrp(e) => {
                    let s = solve_energy(&e, &knobs.mcnc(false), seed)?;
                    (cost_to_f64(&s.reduced.cost), s.reduced.congestion, s.lifted.energy, serde_json::to_string(&s))
                }
            })
        });
        match solved {
            Ok((cost, congestion, energy, Ok(json))) => {
                *out = Box::into_raw(Box::new(NcSolution {
                    cost,
                    congestion,
                    energy,
                    json,
                }));
                NcStatus::Ok
            }
            Ok((.., Err(e))) => {
                set_error(e.to_string());
                NcStatus::Internal
            }
            Err(e) => {
                let s = status(&e);
                set_error(format!("{}: {e}", status_of(&e)));
                s
            }
        }
    })
}

/// Total node cost, or NaN for a null handle.
///
/// # Safety
/// `sol` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nc_solution_cost(sol: *const NcSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.cost)
}

/// Largest node load over capacity, or NaN for a null handle.
///
/// # Safety
/// `sol` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nc_solution_congestion(sol: *const NcSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.congestion)
}

/// Energy of the lifted routing for energy instances, NaN otherwise.
///
/// # Safety
/// `sol` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nc_solution_energy(sol: *const NcSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.energy)
}

/// Full solution as JSON; free the string with `nc_string_free`.
///
/// # Safety
/// `sol` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_solution_to_json(sol: *const NcSolution, out: *mut *mut c_char) -> NcStatus {
    guard(|| {
        if sol.is_null() || out.is_null() {
            set_error("null argument");
            return NcStatus::NullPointer;
        }
        *out = to_c_string((*sol).json.clone());
        NcStatus::Ok
    })
}

/// # Safety
/// `sol` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nc_solution_free(sol: *mut NcSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `s` must be a string returned by this library or null.
#[no_mangle]
pub unsafe extern "C" fn nc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
