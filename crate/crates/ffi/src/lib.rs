//! C interface to `churnseg`.
//!
//! Every fallible function returns a [`ChurnsegStatus`]. On failure the
//! message is available from [`churnseg_last_error`] on the same thread.
//! Strings handed out by the library are freed with
//! [`churnseg_string_free`]; handles with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use churnseg::eval::{
    compute_report, expand_matrix, render_report, ClassMetrics, ConfusionMatrix, EvaluationReport,
    RenderOptions,
};
use churnseg::features::{derive_age_group, derive_county, InvoiceAggregates};
use churnseg::ingest::write_csv;
use churnseg::model::Model;
use churnseg::money::Cents;
use churnseg::rules::{segment_invoices, AccountClass, SpenderStatus};
use churnseg::synth::{generate, GeneratorConfig};
use churnseg::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChurnsegStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad configuration, schema or model file.
    Config = 3,
    /// Bad input data.
    Data = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChurnsegSpenderStatus {
    Low = 0,
    Average = 1,
    AboveAverage = 2,
    High = 3,
    VeryHigh = 4,
    Investigate = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChurnsegAccountClass {
    Standard = 0,
    UnpaidInvoice = 1,
    Premium = 2,
    Vip = 3,
    /// No class: the spender status is `Investigate`.
    None = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChurnsegClassMetrics {
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mcc: f64,
    /// NaN when undefined.
    pub roc_area: f64,
    /// NaN when undefined.
    pub prc_area: f64,
}

/// Opaque trained model.
pub struct ChurnsegModel {
    model: Model,
}

/// Opaque evaluation report.
pub struct ChurnsegReport {
    report: EvaluationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(ChurnsegStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            2 => ChurnsegStatus::Config,
            3 => ChurnsegStatus::Data,
            _ => ChurnsegStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ChurnsegStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ChurnsegStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ChurnsegStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ChurnsegStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ChurnsegStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn owned(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        Failure(
            ChurnsegStatus::Internal,
            "string contains a NUL byte".into(),
        )
    })
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn churnseg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn churnseg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---- scalar derivations ----

/// Age-group label for `age`; pass `has_age = false` for an unknown age.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn churnseg_age_group(
    age: i32,
    has_age: bool,
    out: *mut *mut c_char,
) -> ChurnsegStatus {
    guard(|| {
        let label = derive_age_group(has_age.then_some(age)).label();
        put(out, owned(label.to_string())?, "out")
    })
}

/// County named in a free-text address, or `#N/A`.
///
/// # Safety
/// `address` may be NULL (no address) or a NUL-terminated string; `out`
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn churnseg_derive_county(
    address: *const c_char,
    out: *mut *mut c_char,
) -> ChurnsegStatus {
    guard(|| {
        let addr = if address.is_null() {
            None
        } else {
            Some(text(address, "address")?)
        };
        put(out, owned(derive_county(addr).to_string())?, "out")
    })
}

fn spender(s: SpenderStatus) -> ChurnsegSpenderStatus {
    match s {
        SpenderStatus::Low => ChurnsegSpenderStatus::Low,
        SpenderStatus::Average => ChurnsegSpenderStatus::Average,
        SpenderStatus::AboveAverage => ChurnsegSpenderStatus::AboveAverage,
        SpenderStatus::High => ChurnsegSpenderStatus::High,
        SpenderStatus::VeryHigh => ChurnsegSpenderStatus::VeryHigh,
        SpenderStatus::Investigate => ChurnsegSpenderStatus::Investigate,
    }
}

fn class(c: Option<AccountClass>) -> ChurnsegAccountClass {
    match c {
        Some(AccountClass::Standard) => ChurnsegAccountClass::Standard,
        Some(AccountClass::UnpaidInvoice) => ChurnsegAccountClass::UnpaidInvoice,
        Some(AccountClass::Premium) => ChurnsegAccountClass::Premium,
        Some(AccountClass::Vip) => ChurnsegAccountClass::Vip,
        None => ChurnsegAccountClass::None,
    }
}

/// Spender status and account class of an account from its invoice
/// aggregates. Amounts are in cents.
///
/// # Safety
/// Both out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn churnseg_segment(
    total_invoice_excl_bf_cents: i64,
    total_invoices: u32,
    paid_count: u32,
    out_status: *mut ChurnsegSpenderStatus,
    out_class: *mut ChurnsegAccountClass,
) -> ChurnsegStatus {
    guard(|| {
        if paid_count > total_invoices {
            return Err(Failure(
                ChurnsegStatus::Data,
                "paid_count exceeds total_invoices".into(),
            ));
        }
        let agg = InvoiceAggregates {
            total_invoice_excl_bf: Cents(total_invoice_excl_bf_cents),
            total_invoices,
            paid_count,
            declined_count: 0,
            unpaid_count: total_invoices - paid_count,
        };
        let seg = segment_invoices(&agg);
        put(out_status, spender(seg.spender_status), "out_status")?;
        put(out_class, class(seg.account_class), "out_class")
    })
}

// ---- models ----

/// Loads a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn churnseg_model_load(
    json: *const c_char,
    out: *mut *mut ChurnsegModel,
) -> ChurnsegStatus {
    guard(|| {
        let model =
            Model::from_json(text(json, "json")?).map_err(|e| Failure::from(Error::from(e)))?;
        put(out, Box::into_raw(Box::new(ChurnsegModel { model })), "out")
    })
}

/// # Safety
/// `model` must come from [`churnseg_model_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn churnseg_model_free(model: *mut ChurnsegModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of classes the model predicts; 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn churnseg_model_num_classes(model: *const ChurnsegModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.header().classes.len())
}

/// Name of class `index`.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn churnseg_model_class_name(
    model: *const ChurnsegModel,
    index: usize,
    out: *mut *mut c_char,
) -> ChurnsegStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let name = m.model.header().classes.get(index).ok_or_else(|| {
            Failure(
                ChurnsegStatus::Data,
                format!("class index {index} out of range"),
            )
        })?;
        put(out, owned(name.clone())?, "out")
    })
}

fn split_csv_line(line: &str) -> Result<Vec<String>, Failure> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(line.as_bytes());
    match r.records().next() {
        Some(Ok(rec)) => Ok(rec.iter().map(str::to_string).collect()),
        Some(Err(e)) => Err(Failure(ChurnsegStatus::Data, format!("csv: {e}"))),
        None => Ok(Vec::new()),
    }
}

/// Classifies one row given as a CSV header line and a CSV data line.
/// Columns the model does not use are ignored; absent ones count as
/// missing. `probs` receives `probs_len` class probabilities, which must
/// equal the model's class count.
///
/// # Safety
/// Strings must be NUL-terminated; `out_class` must be valid for writes and
/// `probs` for `probs_len` doubles (it may be NULL when `probs_len` is 0).
#[no_mangle]
pub unsafe extern "C" fn churnseg_model_predict_csv(
    model: *const ChurnsegModel,
    header_csv: *const c_char,
    row_csv: *const c_char,
    out_class: *mut usize,
    probs: *mut f64,
    probs_len: usize,
) -> ChurnsegStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let names = split_csv_line(text(header_csv, "header_csv")?)?;
        let fields = split_csv_line(text(row_csv, "row_csv")?)?;
        if names.len() != fields.len() {
            return Err(Failure(
                ChurnsegStatus::Data,
                format!(
                    "header has {} columns but row has {}",
                    names.len(),
                    fields.len()
                ),
            ));
        }
        let row = m.model.header().encode_row(|name| {
            names
                .iter()
                .position(|n| n == name)
                .map(|i| fields[i].as_str())
        });
        let (predicted, dist) = m.model.predict(&row);
        if probs_len > 0 {
            if probs.is_null() {
                return Err(null("probs"));
            }
            if probs_len != dist.len() {
                return Err(Failure(
                    ChurnsegStatus::Data,
                    format!(
                        "probs_len {probs_len} but the model has {} classes",
                        dist.len()
                    ),
                ));
            }
            std::slice::from_raw_parts_mut(probs, probs_len).copy_from_slice(&dist);
        }
        put(out_class, predicted, "out_class")
    })
}

// ---- reports ----

/// Builds a report from a row-major `k` x `k` confusion matrix (rows are
/// actual classes) with one-hot scores. `class_names` holds `k` strings.
///
/// # Safety
/// `counts` must hold `k * k` values and `class_names` `k` NUL-terminated
/// strings; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn churnseg_report_from_matrix(
    counts: *const u64,
    k: usize,
    class_names: *const *const c_char,
    out: *mut *mut ChurnsegReport,
) -> ChurnsegStatus {
    guard(|| {
        if k == 0 {
            return Err(Failure(
                ChurnsegStatus::Data,
                "matrix has no classes".into(),
            ));
        }
        if counts.is_null() {
            return Err(null("counts"));
        }
        if class_names.is_null() {
            return Err(null("class_names"));
        }
        let flat = std::slice::from_raw_parts(counts, k * k);
        let names = std::slice::from_raw_parts(class_names, k)
            .iter()
            .map(|&p| text(p, "class name").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        let rows: Vec<Vec<u64>> = flat.chunks(k).map(<[u64]>::to_vec).collect();
        let matrix = ConfusionMatrix::from_counts(names.clone(), rows)
            .map_err(|e| Failure::from(Error::from(e)))?;
        let (actual, predicted, scores) = expand_matrix(&matrix);
        let n = matrix.total() as f64;
        let prior: Vec<f64> = (0..k)
            .map(|i| (matrix.row_total(i) as f64 + 1.0) / (n + k as f64))
            .collect();
        let report = compute_report(&names, &actual, &predicted, &scores, &prior)
            .map_err(|e| Failure::from(Error::from(e)))?;
        put(
            out,
            Box::into_raw(Box::new(ChurnsegReport { report })),
            "out",
        )
    })
}

/// # Safety
/// `report` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn churnseg_report_free(report: *mut ChurnsegReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Percentage of correctly classified instances; NaN for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn churnseg_report_accuracy_pct(report: *const ChurnsegReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.correct_pct)
}

/// Kappa statistic; NaN for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn churnseg_report_kappa(report: *const ChurnsegReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.kappa)
}

fn c_metrics(m: &ClassMetrics) -> ChurnsegClassMetrics {
    ChurnsegClassMetrics {
        tp_rate: m.tp_rate,
        fp_rate: m.fp_rate,
        precision: m.precision,
        recall: m.recall,
        f_measure: m.f_measure,
        mcc: m.mcc,
        roc_area: m.roc_area.unwrap_or(f64::NAN),
        prc_area: m.prc_area.unwrap_or(f64::NAN),
    }
}

/// Per-class metrics for `index`, or the weighted average when `index`
/// equals the class count.
///
/// # Safety
/// `report` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn churnseg_report_class_metrics(
    report: *const ChurnsegReport,
    index: usize,
    out: *mut ChurnsegClassMetrics,
) -> ChurnsegStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.report;
        let m = if index == r.per_class.len() {
            &r.weighted_avg
        } else {
            r.per_class.get(index).ok_or_else(|| {
                Failure(
                    ChurnsegStatus::Data,
                    format!("class index {index} out of range"),
                )
            })?
        };
        put(out, c_metrics(m), "out")
    })
}

/// Fixed-width text rendering of the report.
///
/// # Safety
/// `report` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn churnseg_report_text(
    report: *const ChurnsegReport,
    out: *mut *mut c_char,
) -> ChurnsegStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.report;
        put(
            out,
            owned(render_report("Evaluation", r, RenderOptions::default()))?,
            "out",
        )
    })
}

// ---- synthetic data ----

/// Generates a synthetic raw export as CSV text with default settings
/// apart from the given row count, seed and label noise.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn churnseg_synth_csv(
    rows: usize,
    seed: u64,
    noise: f64,
    out: *mut *mut c_char,
) -> ChurnsegStatus {
    guard(|| {
        let config = GeneratorConfig {
            n_rows: rows,
            seed,
            label_noise: noise,
            ..Default::default()
        };
        let (records, _) = generate(&config).map_err(|e| Failure::from(Error::from(e)))?;
        let mut buf = Vec::new();
        write_csv(&records, config.months, &mut buf).map_err(|e| Failure::from(Error::from(e)))?;
        let csv = String::from_utf8(buf)
            .map_err(|_| Failure(ChurnsegStatus::Internal, "non-UTF-8 output".into()))?;
        put(out, owned(csv)?, "out")
    })
}
