//! C interface to the progfilter model.
//!
//! Inputs are loaded once into an opaque [`PfBundle`] from the same JSON
//! texts the command-line tool reads. Every fallible function returns a
//! [`PfStatus`]; on failure [`pf_last_error`] describes the problem.
//! Matrices are passed as four doubles in row-major order
//! (`tn, fp, fn, tp` or `w00, w01, w10, w11`).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use progfilter::io::{
    build_report, parse_inputs, write_report, Format, InputBundle, ReportOptions,
};
use progfilter::metrics::{pipeline_metrics, MetricFlag};
use progfilter::model::{psi, PsiMode};
use progfilter::{Error, Mat2, NormalizedConfusionMatrix, StageChain};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    InvalidTaxonomy = 4,
    UnknownCategory = 5,
    OutOfRange = 6,
    MissingProfile = 7,
    NotAPipeline = 8,
    InvalidConfig = 9,
    Internal = 10,
}

pub const PF_PRECISION_UNDEFINED: u32 = 1;
pub const PF_RECALL_UNDEFINED: u32 = 2;
pub const PF_F1_UNDEFINED: u32 = 4;
pub const PF_F1_ZERO_COMPONENT: u32 = 8;

/// Taxonomic metrics of a pipeline. Undefined values are NaN and flagged
/// with the `PF_*` bits above.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub flags: u32,
}

/// Validated taxonomy and classifier profiles.
pub struct PfBundle {
    inner: InputBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PfStatus {
    match e {
        Error::SyntaxError { .. } => PfStatus::Syntax,
        Error::InvalidCategoryName(_)
        | Error::DuplicateCategory(_)
        | Error::MultipleRoots(_)
        | Error::NoRoot
        | Error::RootMismatch { .. }
        | Error::CycleDetected(_)
        | Error::SelfLoop(_)
        | Error::DuplicateEdge { .. }
        | Error::Unreachable(_)
        | Error::MissingEdgeProbability { .. } => PfStatus::InvalidTaxonomy,
        Error::UnknownCategory(_) | Error::UnknownInstance(_) => PfStatus::UnknownCategory,
        Error::OutOfRangeProbability { .. } => PfStatus::OutOfRange,
        Error::MissingGamma(_) | Error::RootProfileForbidden(_) => PfStatus::MissingProfile,
        Error::NotAPipeline(_) => PfStatus::NotAPipeline,
        _ => PfStatus::InvalidConfig,
    }
}

struct Fail(PfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> PfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error".into());
            PfStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(PfStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn bundle<'a>(b: *const PfBundle) -> Result<&'a InputBundle, Fail> {
    b.as_ref()
        .map(|b| &b.inner)
        .ok_or_else(|| Fail(PfStatus::NullArgument, "bundle is null".into()))
}

fn non_null<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(PfStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn write_mat(out: *mut f64, m: Mat2) {
    let rows = m.rows();
    for (i, v) in [rows[0][0], rows[0][1], rows[1][0], rows[1][1]]
        .into_iter()
        .enumerate()
    {
        *out.add(i) = v;
    }
}

unsafe fn chain_for(b: *const PfBundle, pipeline: *const c_char) -> Result<StageChain, Fail> {
    let b = bundle(b)?;
    let path = text(pipeline, "pipeline")?;
    let p = b.taxonomy.pipeline(path)?;
    Ok(StageChain::from_pipeline(&p, &b.profiles)?)
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and validates a taxonomy and its profiles. On success `*out`
/// owns a bundle to be released with [`pf_bundle_free`].
///
/// # Safety
/// The texts must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_bundle_new(
    taxonomy_json: *const c_char,
    profiles_json: *const c_char,
    out: *mut *mut PfBundle,
) -> PfStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let inner = parse_inputs(
            text(taxonomy_json, "taxonomy")?,
            text(profiles_json, "profiles")?,
        )?;
        *out = Box::into_raw(Box::new(PfBundle { inner }));
        Ok(())
    })
}

/// # Safety
/// `b` must come from [`pf_bundle_new`] and not be used afterwards. NULL
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn pf_bundle_free(b: *mut PfBundle) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Number of pipelines, optionally only those ending at a leaf.
///
/// # Safety
/// `b` must be a live bundle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_pipeline_count(
    b: *const PfBundle,
    leaf_only: bool,
    out: *mut usize,
) -> PfStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = bundle(b)?.taxonomy.enumerate_pipelines(leaf_only).len();
        Ok(())
    })
}

/// Joint matrix `Ω` of a slash-joined pipeline such as `"A/B/D"`.
///
/// # Safety
/// `b` must be a live bundle, `pipeline` a NUL-terminated string and `out`
/// must have room for four doubles.
#[no_mangle]
pub unsafe extern "C" fn pf_omega(
    b: *const PfBundle,
    pipeline: *const c_char,
    out: *mut f64,
) -> PfStatus {
    guard(|| {
        non_null(out, "out")?;
        let chain = chain_for(b, pipeline)?;
        write_mat(out, progfilter::model::omega_recursive(&chain).as_mat());
        Ok(())
    })
}

/// Intrinsic matrix `Ψ` of a pipeline.
///
/// # Safety
/// As [`pf_omega`].
#[no_mangle]
pub unsafe extern "C" fn pf_psi(
    b: *const PfBundle,
    pipeline: *const c_char,
    out: *mut f64,
) -> PfStatus {
    guard(|| {
        non_null(out, "out")?;
        let chain = chain_for(b, pipeline)?;
        write_mat(out, psi(&chain.gammas(), PsiMode::Closed).as_mat());
        Ok(())
    })
}

/// # Safety
/// `b` must be a live bundle, `pipeline` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pf_metrics(
    b: *const PfBundle,
    pipeline: *const c_char,
    out: *mut PfMetrics,
) -> PfStatus {
    guard(|| {
        non_null(out, "out")?;
        let chain = chain_for(b, pipeline)?;
        let r = pipeline_metrics(&progfilter::model::omega_recursive(&chain));
        let flags = r.flags.iter().fold(0, |acc, f| {
            acc | match f {
                MetricFlag::PrecisionUndefined => PF_PRECISION_UNDEFINED,
                MetricFlag::RecallUndefined => PF_RECALL_UNDEFINED,
                MetricFlag::F1Undefined => PF_F1_UNDEFINED,
                MetricFlag::F1ZeroComponent => PF_F1_ZERO_COMPONENT,
            }
        });
        *out = PfMetrics {
            precision: r.precision.unwrap_or(f64::NAN),
            recall: r.recall.unwrap_or(f64::NAN),
            f1: r.f1.unwrap_or(f64::NAN),
            accuracy: r.accuracy,
            flags,
        };
        Ok(())
    })
}

/// `a ⊕ b` for two normalized confusion matrices.
///
/// # Safety
/// `a` and `b` must point to four doubles each, `out` must have room for
/// four.
#[no_mangle]
pub unsafe extern "C" fn pf_oplus(a: *const f64, b: *const f64, out: *mut f64) -> PfStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(Fail(PfStatus::NullArgument, "operand is null".into()));
        }
        non_null(out, "out")?;
        let load =
            |p: *const f64| NormalizedConfusionMatrix::new(*p, *p.add(1), *p.add(2), *p.add(3));
        let m = load(a)?.oplus(&load(b)?);
        write_mat(out, m.as_mat());
        Ok(())
    })
}

/// Full analysis report as JSON. `pipeline` may be NULL for all pipelines.
/// The returned string must be released with [`pf_string_free`].
///
/// # Safety
/// `b` must be a live bundle, `pipeline` NULL or a NUL-terminated string,
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_analyze_json(
    b: *const PfBundle,
    pipeline: *const c_char,
    leaf_only: bool,
    out: *mut *mut c_char,
) -> PfStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let b = bundle(b)?;
        let opts = ReportOptions {
            leaf_only,
            pipeline: if pipeline.is_null() {
                None
            } else {
                Some(text(pipeline, "pipeline")?.to_owned())
            },
        };
        let json = write_report(&build_report(b, &opts)?, Format::Json);
        *out = CString::new(json)
            .map_err(|_| Fail(PfStatus::Internal, "report contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn pf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
