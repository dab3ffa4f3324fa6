//! C ABI over the reconlab core.
//!
//! Every function returns a [`ReconlabStatus`]; results come back through
//! out-pointers. On failure a description is kept per thread and can be read
//! with [`reconlab_last_error_message`]. Objects are exposed as opaque
//! handles that must be released with their `_free` function, and strings
//! returned by the library are released with [`reconlab_string_free`].
//! Panics never cross the boundary; they surface as
//! `RECONLAB_STATUS_INTERNAL`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use reconlab::harness::{self, ExperimentConfig};
use reconlab::mechanisms::{
    laplace_tail, privacy_ratio, rr_p_from_epsilon, zcdp_to_epsilon, PrivacyAccountant, ZcdpParams,
};
use reconlab::model::{true_count, BinaryDatabase, QueryAnswer, SubsetQuery};
use reconlab::reconstruction::{exhaustive_feasible_set, lp_reconstruct};
use reconlab::rng::rng_from_seed;
use reconlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Range = 3,
    Capacity = 4,
    Budget = 5,
    Infeasible = 6,
    Solver = 7,
    Consistency = 8,
    Schema = 9,
    Io = 10,
    Internal = 11,
}

impl From<&Error> for ReconlabStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Range { .. } => Self::Range,
            Error::Capacity { .. } => Self::Capacity,
            Error::Parameter(_)
            | Error::Undefined(_)
            | Error::LengthMismatch { .. }
            | Error::InvalidScenario(_) => Self::InvalidArgument,
            Error::Budget { .. } => Self::Budget,
            Error::Infeasible(_) => Self::Infeasible,
            Error::Solver { .. } => Self::Solver,
            Error::Consistency(_) => Self::Consistency,
            Error::Schema(_) | Error::Data(_) | Error::Csv(_) | Error::Json(_) => Self::Schema,
            Error::Io(_) => Self::Io,
        }
    }
}

/// An n-bit database.
pub struct ReconlabDatabase {
    inner: BinaryDatabase,
}

/// Sequential-composition budget accountant.
pub struct ReconlabAccountant {
    inner: PrivacyAccountant,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Lab(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lab(e)
    }
}

type FfiResult = Result<(), Failure>;

/// Runs `f`, recording any error or panic for `reconlab_last_error_message`.
fn guard(f: impl FnOnce() -> FfiResult) -> ReconlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ReconlabStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("{what} must not be null"));
            ReconlabStatus::NullPointer
        }
        Ok(Err(Failure::Lab(e))) => {
            set_last_error(e.to_string());
            ReconlabStatus::from(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {msg}"));
            ReconlabStatus::Internal
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn input<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

/// A slice of `len` elements; null is accepted only when `len` is zero.
unsafe fn array<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::Lab(Error::Parameter(format!("{what} is not UTF-8: {e}"))))
}

fn give_string(s: String, dst: &mut *mut c_char) -> FfiResult {
    let c = CString::new(s).map_err(|e| Error::Data(format!("string holds a NUL byte: {e}")))?;
    *dst = c.into_raw();
    Ok(())
}

// ------------------------------------------------------------------ errors

/// Message for the last failure on this thread, or null if there was none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn reconlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn reconlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn reconlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ----------------------------------------------------------------- scalars

#[no_mangle]
pub unsafe extern "C" fn reconlab_rr_p_from_epsilon(
    epsilon: f64,
    out_p: *mut f64,
) -> ReconlabStatus {
    guard(|| {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(
                Error::Parameter(format!("epsilon must be non-negative, got {epsilon}")).into(),
            );
        }
        *out(out_p, "out_p")? = rr_p_from_epsilon(epsilon);
        Ok(())
    })
}

/// P(|X| ≤ bound) for Laplace noise of scale 1/epsilon.
#[no_mangle]
pub unsafe extern "C" fn reconlab_laplace_tail(
    epsilon: f64,
    bound: f64,
    out_p: *mut f64,
) -> ReconlabStatus {
    guard(|| {
        if epsilon.is_nan() || epsilon <= 0.0 || bound.is_nan() || bound < 0.0 {
            return Err(Error::Parameter(format!(
                "need epsilon > 0 and bound ≥ 0, got {epsilon} and {bound}"
            ))
            .into());
        }
        *out(out_p, "out_p")? = laplace_tail(epsilon, bound);
        Ok(())
    })
}

/// e^(eps_a − eps_b).
#[no_mangle]
pub unsafe extern "C" fn reconlab_privacy_ratio(
    eps_a: f64,
    eps_b: f64,
    out_ratio: *mut f64,
) -> ReconlabStatus {
    guard(|| {
        *out(out_ratio, "out_ratio")? = privacy_ratio(eps_a, eps_b);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reconlab_zcdp_to_epsilon(
    rho: f64,
    delta: f64,
    out_epsilon: *mut f64,
) -> ReconlabStatus {
    guard(|| {
        let params = ZcdpParams::new(rho, delta)?;
        *out(out_epsilon, "out_epsilon")? = zcdp_to_epsilon(&params);
        Ok(())
    })
}

// ---------------------------------------------------------------- database

#[no_mangle]
pub unsafe extern "C" fn reconlab_database_random(
    n: usize,
    seed: u64,
    out_db: *mut *mut ReconlabDatabase,
) -> ReconlabStatus {
    guard(|| {
        let dst = out(out_db, "out_db")?;
        let inner = BinaryDatabase::random(n, &mut rng_from_seed(seed))?;
        *dst = Box::into_raw(Box::new(ReconlabDatabase { inner }));
        Ok(())
    })
}

/// Copies `n` bits (each 0 or 1) into a new database.
#[no_mangle]
pub unsafe extern "C" fn reconlab_database_from_bits(
    bits: *const u8,
    n: usize,
    out_db: *mut *mut ReconlabDatabase,
) -> ReconlabStatus {
    guard(|| {
        let dst = out(out_db, "out_db")?;
        let inner = BinaryDatabase::new(array(bits, n, "bits")?.to_vec())?;
        *dst = Box::into_raw(Box::new(ReconlabDatabase { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reconlab_database_free(db: *mut ReconlabDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

#[no_mangle]
pub unsafe extern "C" fn reconlab_database_len(
    db: *const ReconlabDatabase,
    out_n: *mut usize,
) -> ReconlabStatus {
    guard(|| {
        *out(out_n, "out_n")? = input(db, "db")?.inner.len();
        Ok(())
    })
}

/// Writes the database's bits into `buf`, which must hold `buf_len` ≥ n bytes.
#[no_mangle]
pub unsafe extern "C" fn reconlab_database_copy_bits(
    db: *const ReconlabDatabase,
    buf: *mut u8,
    buf_len: usize,
) -> ReconlabStatus {
    guard(|| {
        let bits = input(db, "db")?.inner.bits();
        if buf_len < bits.len() {
            return Err(Error::LengthMismatch {
                left: buf_len,
                right: bits.len(),
            }
            .into());
        }
        if bits.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        slice::from_raw_parts_mut(buf, bits.len()).copy_from_slice(bits);
        Ok(())
    })
}

/// Exact count of 1-records among `indices`.
#[no_mangle]
pub unsafe extern "C" fn reconlab_database_count(
    db: *const ReconlabDatabase,
    indices: *const usize,
    len: usize,
    out_count: *mut usize,
) -> ReconlabStatus {
    guard(|| {
        let db = &input(db, "db")?.inner;
        let q = SubsetQuery::new(array(indices, len, "indices")?.to_vec(), db.len())?;
        *out(out_count, "out_count")? = true_count(db, &q)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reconlab_database_hamming_distance(
    a: *const ReconlabDatabase,
    b: *const ReconlabDatabase,
    out_distance: *mut usize,
) -> ReconlabStatus {
    guard(|| {
        let d = input(a, "a")?
            .inner
            .hamming_distance(&input(b, "b")?.inner)?;
        *out(out_distance, "out_distance")? = d;
        Ok(())
    })
}

// ---------------------------------------------------------- reconstruction

/// Queries in compressed-row form: query `i` covers
/// `indices[row_offsets[i] .. row_offsets[i + 1]]`.
unsafe fn csr_queries(
    n: usize,
    m: usize,
    row_offsets: *const usize,
    indices: *const usize,
    answers: *const f64,
) -> Result<(Vec<SubsetQuery>, Vec<QueryAnswer>), Failure> {
    let offsets = array(row_offsets, m + 1, "row_offsets")?;
    if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(
            Error::Parameter("row_offsets must start at 0 and be non-decreasing".into()).into(),
        );
    }
    let idx = array(indices, offsets[m], "indices")?;
    let values = array(answers, m, "answers")?;
    let queries = offsets
        .windows(2)
        .map(|w| SubsetQuery::new(idx[w[0]..w[1]].to_vec(), n))
        .collect::<Result<Vec<_>, _>>()?;
    let answers = values
        .iter()
        .enumerate()
        .map(|(query_id, &value)| QueryAnswer { query_id, value })
        .collect();
    Ok((queries, answers))
}

/// LP reconstruction of an n-bit database from `m` noisy subset counts.
/// Writes n bits to `out_bits` and, if non-null, the residual constraint
/// violation of the LP point to `out_violation`.
#[no_mangle]
pub unsafe extern "C" fn reconlab_lp_reconstruct(
    n: usize,
    m: usize,
    row_offsets: *const usize,
    indices: *const usize,
    answers: *const f64,
    bound: f64,
    out_bits: *mut u8,
    out_violation: *mut f64,
) -> ReconlabStatus {
    guard(|| {
        let (queries, answers) = csr_queries(n, m, row_offsets, indices, answers)?;
        let result = lp_reconstruct(&queries, &answers, n, bound)?;
        if out_bits.is_null() {
            return Err(Failure::Null("out_bits"));
        }
        slice::from_raw_parts_mut(out_bits, n).copy_from_slice(result.candidate.bits());
        if let Some(v) = out_violation.as_mut() {
            *v = result.lp_violation.unwrap_or(0.0);
        }
        Ok(())
    })
}

/// Number of n-bit databases consistent with every answer to within `bound`.
#[no_mangle]
pub unsafe extern "C" fn reconlab_exhaustive_feasible_count(
    n: usize,
    m: usize,
    row_offsets: *const usize,
    indices: *const usize,
    answers: *const f64,
    bound: f64,
    out_count: *mut u64,
) -> ReconlabStatus {
    guard(|| {
        let (queries, answers) = csr_queries(n, m, row_offsets, indices, answers)?;
        let dst = out(out_count, "out_count")?;
        *dst = exhaustive_feasible_set(n, &queries, &answers, bound)?.len() as u64;
        Ok(())
    })
}

// -------------------------------------------------------------- accountant

#[no_mangle]
pub unsafe extern "C" fn reconlab_accountant_new(
    total_epsilon: f64,
    out_accountant: *mut *mut ReconlabAccountant,
) -> ReconlabStatus {
    guard(|| {
        let dst = out(out_accountant, "out_accountant")?;
        let inner = PrivacyAccountant::new(total_epsilon)?;
        *dst = Box::into_raw(Box::new(ReconlabAccountant { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reconlab_accountant_free(accountant: *mut ReconlabAccountant) {
    if !accountant.is_null() {
        drop(Box::from_raw(accountant));
    }
}

/// Records a query costing `epsilon`. Returns `RECONLAB_STATUS_BUDGET`, and
/// records nothing, when the remaining budget cannot cover it.
#[no_mangle]
pub unsafe extern "C" fn reconlab_accountant_spend(
    accountant: *mut ReconlabAccountant,
    query_id: usize,
    epsilon: f64,
) -> ReconlabStatus {
    guard(|| {
        out(accountant, "accountant")?
            .inner
            .spend(query_id, epsilon)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reconlab_accountant_spent(
    accountant: *const ReconlabAccountant,
    out_epsilon: *mut f64,
) -> ReconlabStatus {
    guard(|| {
        *out(out_epsilon, "out_epsilon")? = input(accountant, "accountant")?.inner.spent();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reconlab_accountant_remaining(
    accountant: *const ReconlabAccountant,
    out_epsilon: *mut f64,
) -> ReconlabStatus {
    guard(|| {
        *out(out_epsilon, "out_epsilon")? = input(accountant, "accountant")?.inner.remaining();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reconlab_accountant_ledger_len(
    accountant: *const ReconlabAccountant,
    out_len: *mut usize,
) -> ReconlabStatus {
    guard(|| {
        *out(out_len, "out_len")? = input(accountant, "accountant")?.inner.ledger().len();
        Ok(())
    })
}

// ------------------------------------------------------------- experiments

/// Validates an experiment config given as JSON. Writes a JSON array of
/// violation strings (empty when valid) to `out_json`; free it with
/// [`reconlab_string_free`]. Violations are not a failure status.
#[no_mangle]
pub unsafe extern "C" fn reconlab_validate_config(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> ReconlabStatus {
    guard(|| {
        let dst = out(out_json, "out_json")?;
        let config = ExperimentConfig::from_json(text(config_json, "config_json")?)?;
        let violations: Vec<String> = harness::validate(&config)
            .iter()
            .map(ToString::to_string)
            .collect();
        give_string(
            serde_json::to_string(&violations).map_err(Error::from)?,
            dst,
        )
    })
}

/// Runs an experiment and writes its report as JSON to `out_json`; free it
/// with [`reconlab_string_free`]. Nothing is written to disk. An invalid
/// config yields `RECONLAB_STATUS_INVALID_ARGUMENT`.
#[no_mangle]
pub unsafe extern "C" fn reconlab_run_experiment(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> ReconlabStatus {
    guard(|| {
        let dst = out(out_json, "out_json")?;
        let config = ExperimentConfig::from_json(text(config_json, "config_json")?)?;
        let report = harness::run(&config)?;
        give_string(report.to_json()?, dst)
    })
}
