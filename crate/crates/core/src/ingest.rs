//! Parsing and validation of raw bill-pay customer exports.
//!
//! The CSV layout is one header row followed by one row per account. Besides
//! the demographic and date columns, each observed month contributes three
//! columns: `inv_NN` (invoice amount), `bf_NN` (balance brought forward) and
//! `pay_NN` (`PAID`, `DECLINED`, `UNPAID`, or empty for a month before the
//! account existed). Months are numbered `01` (oldest) upwards.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Cents;

/// Length of the observed billing window.
pub const MAX_MONTHS: usize = 16;

pub const COL_ACCOUNT_ID: &str = "account_id";
pub const COL_AGE: &str = "age";
pub const COL_GENDER: &str = "gender";
pub const COL_ADDRESS: &str = "bill_address_county";
pub const COL_NETWORK_STATUS: &str = "network_status";
pub const COL_ACTIVATION: &str = "activation_date";
pub const COL_INACTIVE: &str = "inactive_date";
pub const COL_SALE_DATE: &str = "sale_date";
pub const COL_SALE_TIME: &str = "sale_time";

pub fn invoice_column(month: usize) -> String {
    format!("inv_{month:02}")
}

pub fn brought_forward_column(month: usize) -> String {
    format!("bf_{month:02}")
}

pub fn payment_column(month: usize) -> String {
    format!("pay_{month:02}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "Male",
            Gender::Female => "Female",
            Gender::Unknown => "Unknown",
        }
    }

    fn parse(s: &str) -> Option<Gender> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Some(Gender::Male),
            "female" | "f" => Some(Gender::Female),
            "" | "unknown" | "u" => Some(Gender::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkStatus {
    Active,
    Inactive,
}

impl NetworkStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NetworkStatus::Active => "Active",
            NetworkStatus::Inactive => "Inactive",
        }
    }

    fn parse(s: &str) -> Option<NetworkStatus> {
        match s.trim().to_ascii_lowercase().as_str() {
            "active" => Some(NetworkStatus::Active),
            "inactive" => Some(NetworkStatus::Inactive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaymentStatus {
    Paid,
    Declined,
    Unpaid,
    /// The month predates the account; no invoice was issued.
    Absent,
}

impl PaymentStatus {
    /// CSV spelling; `Absent` is the empty string.
    pub fn as_csv(self) -> &'static str {
        match self {
            PaymentStatus::Paid => "PAID",
            PaymentStatus::Declined => "DECLINED",
            PaymentStatus::Unpaid => "UNPAID",
            PaymentStatus::Absent => "",
        }
    }

    fn parse(s: &str) -> Option<PaymentStatus> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PAID" => Some(PaymentStatus::Paid),
            "DECLINED" => Some(PaymentStatus::Declined),
            "UNPAID" => Some(PaymentStatus::Unpaid),
            "" => Some(PaymentStatus::Absent),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthlyInvoice {
    pub amount: Option<Cents>,
    pub brought_forward: Option<Cents>,
    pub status: PaymentStatus,
}

impl MonthlyInvoice {
    pub const ABSENT: MonthlyInvoice = MonthlyInvoice {
        amount: None,
        brought_forward: None,
        status: PaymentStatus::Absent,
    };

    pub fn billed(amount: Cents, brought_forward: Cents, status: PaymentStatus) -> Self {
        MonthlyInvoice {
            amount: Some(amount),
            brought_forward: Some(brought_forward),
            status,
        }
    }

    pub fn is_absent(&self) -> bool {
        self.status == PaymentStatus::Absent
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCustomerRecord {
    pub account_id: String,
    pub age: Option<i32>,
    pub gender: Gender,
    pub bill_address_county: Option<String>,
    pub network_status: NetworkStatus,
    pub activation_date: NaiveDate,
    pub inactive_date: Option<NaiveDate>,
    pub sale_date: NaiveDate,
    pub sale_time: NaiveTime,
    /// Oldest month first.
    pub monthly_invoices: Vec<MonthlyInvoice>,
}

/// A breached record invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Violation {
    /// `inactive_date` precedes `activation_date`.
    DateOrderViolation,
    /// The account was activated after the month of its sale.
    ActivationAfterSaleViolation,
    /// More monthly triples than the observation window holds.
    WindowOverflowViolation { months: usize },
    /// A month whose status and amounts disagree about whether it was billed.
    AbsentMonthMismatch { month: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DateOrderViolation => write!(f, "inactive date precedes activation date"),
            Violation::ActivationAfterSaleViolation => {
                write!(f, "activation date is after the sale month")
            }
            Violation::WindowOverflowViolation { months } => {
                write!(
                    f,
                    "{months} monthly invoices exceed the {MAX_MONTHS}-month window"
                )
            }
            Violation::AbsentMonthMismatch { month } => write!(
                f,
                "month {month:02}: payment status and amounts disagree on whether an invoice exists"
            ),
        }
    }
}

fn month_end(date: NaiveDate) -> NaiveDate {
    let (y, m) = if date.month() == 12 {
        (date.year() + 1, 1)
    } else {
        (date.year(), date.month() + 1)
    };
    NaiveDate::from_ymd_opt(y, m, 1)
        .and_then(|d| d.pred_opt())
        .unwrap_or(NaiveDate::MAX)
}

/// Checks every record invariant; an empty list means the record is clean.
pub fn validate(record: &RawCustomerRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Some(inactive) = record.inactive_date {
        if inactive < record.activation_date {
            out.push(Violation::DateOrderViolation);
        }
    }
    if record.activation_date > month_end(record.sale_date) {
        out.push(Violation::ActivationAfterSaleViolation);
    }
    if record.monthly_invoices.len() > MAX_MONTHS {
        out.push(Violation::WindowOverflowViolation {
            months: record.monthly_invoices.len(),
        });
    }
    for (i, m) in record.monthly_invoices.iter().enumerate() {
        let has_amounts = m.amount.is_some() && m.brought_forward.is_some();
        let no_amounts = m.amount.is_none() && m.brought_forward.is_none();
        let consistent = if m.is_absent() {
            no_amounts
        } else {
            has_amounts
        };
        if !consistent {
            out.push(Violation::AbsentMonthMismatch { month: i + 1 });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Nominal,
    Date,
    Time,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Named, typed columns of a CSV file, optionally with a class column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    columns: Vec<Column>,
    class_column: Option<String>,
}

impl DatasetSchema {
    pub fn new(columns: Vec<Column>, class_column: Option<String>) -> Result<Self, SchemaError> {
        let mut seen = HashMap::new();
        for c in &columns {
            if seen.insert(c.name.as_str(), ()).is_some() {
                return Err(SchemaError::DuplicateColumn(c.name.clone()));
            }
        }
        if let Some(class) = &class_column {
            match columns.iter().find(|c| &c.name == class) {
                None => return Err(SchemaError::MissingColumn(class.clone())),
                Some(c) if c.kind != ColumnKind::Nominal => {
                    return Err(SchemaError::ClassNotNominal(class.clone()))
                }
                Some(_) => {}
            }
        }
        Ok(DatasetSchema {
            columns,
            class_column,
        })
    }

    /// Layout of a raw export observing `months` billing months.
    pub fn raw_customer(months: usize) -> Self {
        let mut columns = vec![
            col(COL_ACCOUNT_ID, ColumnKind::Text),
            col(COL_AGE, ColumnKind::Numeric),
            col(COL_GENDER, ColumnKind::Nominal),
            col(COL_ADDRESS, ColumnKind::Text),
            col(COL_NETWORK_STATUS, ColumnKind::Nominal),
            col(COL_ACTIVATION, ColumnKind::Date),
            col(COL_INACTIVE, ColumnKind::Date),
            col(COL_SALE_DATE, ColumnKind::Date),
            col(COL_SALE_TIME, ColumnKind::Time),
        ];
        for m in 1..=months {
            columns.push(Column {
                name: invoice_column(m),
                kind: ColumnKind::Numeric,
            });
        }
        for m in 1..=months {
            columns.push(Column {
                name: brought_forward_column(m),
                kind: ColumnKind::Numeric,
            });
        }
        for m in 1..=months {
            columns.push(Column {
                name: payment_column(m),
                kind: ColumnKind::Nominal,
            });
        }
        DatasetSchema {
            columns,
            class_column: None,
        }
    }

    /// Raw layout sized to the month columns present in `header`.
    pub fn raw_customer_for_header<S: AsRef<str>>(header: &[S]) -> Self {
        let months = (1..)
            .take_while(|&m| header.iter().any(|h| h.as_ref() == invoice_column(m)))
            .count();
        Self::raw_customer(months)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn kind_of(&self, name: &str) -> Option<ColumnKind> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.kind)
    }

    pub fn class_column(&self) -> Option<&str> {
        self.class_column.as_deref()
    }

    pub fn push(&mut self, name: impl Into<String>, kind: ColumnKind) -> Result<(), SchemaError> {
        let name = name.into();
        if self.kind_of(&name).is_some() {
            return Err(SchemaError::DuplicateColumn(name));
        }
        self.columns.push(Column { name, kind });
        Ok(())
    }

    pub fn with_class(mut self, class: &str) -> Result<Self, SchemaError> {
        self.class_column = Some(class.to_string());
        DatasetSchema::new(self.columns, self.class_column)
    }

    /// Number of `inv_NN` columns.
    pub fn months(&self) -> usize {
        (1..)
            .take_while(|&m| self.kind_of(&invoice_column(m)).is_some())
            .count()
    }
}

fn col(name: &str, kind: ColumnKind) -> Column {
    Column {
        name: name.to_string(),
        kind,
    }
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("header is missing column {0:?}")]
    MissingColumn(String),
    #[error("column {0:?} appears more than once")]
    DuplicateColumn(String),
    #[error("class column {0:?} is not nominal")]
    ClassNotNominal(String),
    #[error("input has no header row")]
    EmptyHeader,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RowErrorKind {
    NonNumericAge { value: String },
    InvalidDate { column: String, value: String },
    InvalidTime { column: String, value: String },
    InvalidCurrency { column: String, value: String },
    InvalidCategory { column: String, value: String },
    MissingField { column: String },
    Malformed { message: String },
    Invalid { violations: Vec<Violation> },
}

/// A data row that could not become a typed record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based data row number (the header is not counted).
    pub row: usize,
    #[serde(flatten)]
    pub kind: RowErrorKind,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: ", self.row)?;
        match &self.kind {
            RowErrorKind::NonNumericAge { value } => write!(f, "age {value:?} is not a number"),
            RowErrorKind::InvalidDate { column, value } => {
                write!(f, "{column}: {value:?} is not a DD/MM/YYYY date")
            }
            RowErrorKind::InvalidTime { column, value } => {
                write!(f, "{column}: {value:?} is not a HH:MM:SS time")
            }
            RowErrorKind::InvalidCurrency { column, value } => {
                write!(f, "{column}: {value:?} is not an amount")
            }
            RowErrorKind::InvalidCategory { column, value } => {
                write!(f, "{column}: unrecognised value {value:?}")
            }
            RowErrorKind::MissingField { column } => write!(f, "{column} is required"),
            RowErrorKind::Malformed { message } => f.write_str(message),
            RowErrorKind::Invalid { violations } => {
                let parts: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                f.write_str(&parts.join("; "))
            }
        }
    }
}

/// Records parsed from one CSV stream, in input order.
#[derive(Debug, Clone, Default)]
pub struct ParseOutput {
    pub header: Vec<String>,
    pub records: Vec<RawCustomerRecord>,
    /// Original string fields of each record, parallel to `records`.
    pub fields: Vec<Vec<String>>,
    pub errors: Vec<RowError>,
}

impl ParseOutput {
    pub fn rows_read(&self) -> usize {
        self.records.len() + self.errors.len()
    }
}

/// Strict `DD/MM/YYYY`; two-digit years are rejected.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let mut parts = s.trim().split('/');
    let (d, m, y) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some()
        || !(1..=2).contains(&d.len())
        || !(1..=2).contains(&m.len())
        || y.len() != 4
    {
        return None;
    }
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if !(all_digits(d) && all_digits(m) && all_digits(y)) {
        return None;
    }
    NaiveDate::from_ymd_opt(y.parse().ok()?, m.parse().ok()?, d.parse().ok()?)
}

pub fn format_date(d: NaiveDate) -> String {
    d.format("%d/%m/%Y").to_string()
}

pub fn parse_time(s: &str) -> Option<NaiveTime> {
    NaiveTime::parse_from_str(s.trim(), "%H:%M:%S").ok()
}

pub fn format_time(t: NaiveTime) -> String {
    t.format("%H:%M:%S").to_string()
}

struct ColumnIndex {
    base: [usize; 9],
    months: Vec<[usize; 3]>,
}

impl ColumnIndex {
    fn resolve(header: &[String], schema: &DatasetSchema) -> Result<Self, SchemaError> {
        let pos: HashMap<&str, usize> = header
            .iter()
            .enumerate()
            .map(|(i, h)| (h.as_str(), i))
            .collect();
        if pos.len() != header.len() {
            let mut seen = HashMap::new();
            for h in header {
                if seen.insert(h.as_str(), ()).is_some() {
                    return Err(SchemaError::DuplicateColumn(h.clone()));
                }
            }
        }
        for name in schema.column_names() {
            if !pos.contains_key(name) {
                return Err(SchemaError::MissingColumn(name.to_string()));
            }
        }
        let need = |name: &str| {
            pos.get(name)
                .copied()
                .ok_or_else(|| SchemaError::MissingColumn(name.to_string()))
        };
        let base = [
            need(COL_ACCOUNT_ID)?,
            need(COL_AGE)?,
            need(COL_GENDER)?,
            need(COL_ADDRESS)?,
            need(COL_NETWORK_STATUS)?,
            need(COL_ACTIVATION)?,
            need(COL_INACTIVE)?,
            need(COL_SALE_DATE)?,
            need(COL_SALE_TIME)?,
        ];
        let months = (1..=schema.months())
            .map(|m| {
                Ok([
                    need(&invoice_column(m))?,
                    need(&brought_forward_column(m))?,
                    need(&payment_column(m))?,
                ])
            })
            .collect::<Result<_, SchemaError>>()?;
        Ok(ColumnIndex { base, months })
    }
}

fn parse_row(fields: &[String], ix: &ColumnIndex) -> Result<RawCustomerRecord, RowErrorKind> {
    let get = |i: usize| fields[i].trim();
    let name_of = |i: usize| -> &'static str {
        [
            COL_ACCOUNT_ID,
            COL_AGE,
            COL_GENDER,
            COL_ADDRESS,
            COL_NETWORK_STATUS,
            COL_ACTIVATION,
            COL_INACTIVE,
            COL_SALE_DATE,
            COL_SALE_TIME,
        ][i]
    };
    let b = &ix.base;

    let account_id = get(b[0]).to_string();
    if account_id.is_empty() {
        return Err(RowErrorKind::MissingField {
            column: COL_ACCOUNT_ID.into(),
        });
    }
    let age = match get(b[1]) {
        "" => None,
        s => Some(s.parse::<i32>().map_err(|_| RowErrorKind::NonNumericAge {
            value: s.to_string(),
        })?),
    };
    let gender = Gender::parse(get(b[2])).ok_or_else(|| RowErrorKind::InvalidCategory {
        column: COL_GENDER.into(),
        value: get(b[2]).into(),
    })?;
    let bill_address_county = match get(b[3]) {
        "" => None,
        s => Some(s.to_string()),
    };
    let network_status =
        NetworkStatus::parse(get(b[4])).ok_or_else(|| RowErrorKind::InvalidCategory {
            column: COL_NETWORK_STATUS.into(),
            value: get(b[4]).into(),
        })?;
    let date = |k: usize| -> Result<Option<NaiveDate>, RowErrorKind> {
        match get(b[k]) {
            "" => Ok(None),
            s => parse_date(s)
                .map(Some)
                .ok_or_else(|| RowErrorKind::InvalidDate {
                    column: name_of(k).into(),
                    value: s.into(),
                }),
        }
    };
    let required = |k: usize, v: Option<NaiveDate>| {
        v.ok_or_else(|| RowErrorKind::MissingField {
            column: name_of(k).into(),
        })
    };
    let activation_date = required(5, date(5)?)?;
    let inactive_date = date(6)?;
    let sale_date = required(7, date(7)?)?;
    let sale_time = match get(b[8]) {
        "" => {
            return Err(RowErrorKind::MissingField {
                column: COL_SALE_TIME.into(),
            })
        }
        s => parse_time(s).ok_or_else(|| RowErrorKind::InvalidTime {
            column: COL_SALE_TIME.into(),
            value: s.into(),
        })?,
    };

    let mut monthly_invoices = Vec::with_capacity(ix.months.len());
    for (m, cols) in ix.months.iter().enumerate() {
        let money = |i: usize, column: String| -> Result<Option<Cents>, RowErrorKind> {
            match get(i) {
                "" => Ok(None),
                s => s
                    .parse::<Cents>()
                    .map(Some)
                    .map_err(|_| RowErrorKind::InvalidCurrency {
                        column,
                        value: s.into(),
                    }),
            }
        };
        let amount = money(cols[0], invoice_column(m + 1))?;
        let brought_forward = money(cols[1], brought_forward_column(m + 1))?;
        let status =
            PaymentStatus::parse(get(cols[2])).ok_or_else(|| RowErrorKind::InvalidCategory {
                column: payment_column(m + 1),
                value: get(cols[2]).into(),
            })?;
        monthly_invoices.push(MonthlyInvoice {
            amount,
            brought_forward,
            status,
        });
    }

    Ok(RawCustomerRecord {
        account_id,
        age,
        gender,
        bill_address_county,
        network_status,
        activation_date,
        inactive_date,
        sale_date,
        sale_time,
        monthly_invoices,
    })
}

/// Parses a raw export. A header that does not carry every schema column is
/// fatal; problems in individual rows are collected as [`RowError`]s.
pub fn parse_csv<R: Read>(source: R, schema: &DatasetSchema) -> Result<ParseOutput, SchemaError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(SchemaError::EmptyHeader);
    }
    let ix = ColumnIndex::resolve(&header, schema)?;

    let mut out = ParseOutput {
        header,
        ..Default::default()
    };
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.errors.push(RowError {
                    row: row_no,
                    kind: RowErrorKind::Malformed {
                        message: e.to_string(),
                    },
                });
                continue;
            }
        };
        if row.len() != out.header.len() {
            out.errors.push(RowError {
                row: row_no,
                kind: RowErrorKind::Malformed {
                    message: format!("expected {} fields, found {}", out.header.len(), row.len()),
                },
            });
            continue;
        }
        let fields: Vec<String> = row.iter().map(str::to_string).collect();
        match parse_row(&fields, &ix) {
            Ok(record) => {
                let violations = validate(&record);
                if violations.is_empty() {
                    out.records.push(record);
                    out.fields.push(fields);
                } else {
                    out.errors.push(RowError {
                        row: row_no,
                        kind: RowErrorKind::Invalid { violations },
                    });
                }
            }
            Err(kind) => out.errors.push(RowError { row: row_no, kind }),
        }
    }
    Ok(out)
}

/// String fields of `record` in [`DatasetSchema::raw_customer`] column order.
/// Records with fewer than `months` triples are padded with leading absent
/// months.
pub fn record_fields(record: &RawCustomerRecord, months: usize) -> Vec<String> {
    let opt = |c: Option<Cents>| c.map(|c| c.to_string()).unwrap_or_default();
    let mut f = vec![
        record.account_id.clone(),
        record.age.map(|a| a.to_string()).unwrap_or_default(),
        record.gender.as_str().to_string(),
        record.bill_address_county.clone().unwrap_or_default(),
        record.network_status.as_str().to_string(),
        format_date(record.activation_date),
        record.inactive_date.map(format_date).unwrap_or_default(),
        format_date(record.sale_date),
        format_time(record.sale_time),
    ];
    let pad = months.saturating_sub(record.monthly_invoices.len());
    let slots: Vec<MonthlyInvoice> = std::iter::repeat_n(MonthlyInvoice::ABSENT, pad)
        .chain(record.monthly_invoices.iter().copied())
        .collect();
    f.extend(slots.iter().map(|m| opt(m.amount)));
    f.extend(slots.iter().map(|m| opt(m.brought_forward)));
    f.extend(slots.iter().map(|m| m.status.as_csv().to_string()));
    f
}

/// Writes records in the raw export layout.
pub fn write_csv<W: Write>(
    records: &[RawCustomerRecord],
    months: usize,
    sink: W,
) -> Result<(), SchemaError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(DatasetSchema::raw_customer(months).column_names())?;
    for r in records {
        w.write_record(record_fields(r, months))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(months: usize) -> String {
        DatasetSchema::raw_customer(months)
            .column_names()
            .collect::<Vec<_>>()
            .join(",")
    }

    fn clean_record() -> RawCustomerRecord {
        RawCustomerRecord {
            account_id: "A1".into(),
            age: Some(30),
            gender: Gender::Female,
            bill_address_county: Some("12 Main St, Galway".into()),
            network_status: NetworkStatus::Active,
            activation_date: NaiveDate::from_ymd_opt(2015, 7, 28).unwrap(),
            inactive_date: None,
            sale_date: NaiveDate::from_ymd_opt(2015, 7, 28).unwrap(),
            sale_time: NaiveTime::from_hms_opt(10, 17, 55).unwrap(),
            monthly_invoices: vec![
                MonthlyInvoice::ABSENT,
                MonthlyInvoice::billed(Cents(2000), Cents(0), PaymentStatus::Paid),
            ],
        }
    }

    #[test]
    fn empty_file_with_header() {
        let csv = header(16) + "\n";
        let out = parse_csv(csv.as_bytes(), &DatasetSchema::raw_customer(16)).unwrap();
        assert_eq!(out.records.len(), 0);
        assert_eq!(out.errors.len(), 0);
    }

    #[test]
    fn header_mismatch_is_fatal() {
        let csv = "account_id,age\nA,3\n";
        let err = parse_csv(csv.as_bytes(), &DatasetSchema::raw_customer(2)).unwrap_err();
        assert!(matches!(err, SchemaError::MissingColumn(_)));
    }

    #[test]
    fn non_numeric_age_is_row_error() {
        let mut buf = Vec::new();
        write_csv(&[clean_record(), clean_record()], 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen(",30,", ",abc,", 1);
        let out = parse_csv(text.as_bytes(), &DatasetSchema::raw_customer(2)).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].row, 1);
        assert_eq!(
            out.errors[0].kind,
            RowErrorKind::NonNumericAge {
                value: "abc".into()
            }
        );
    }

    #[test]
    fn write_then_parse_roundtrip() {
        let rec = clean_record();
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&rec), 2, &mut buf).unwrap();
        let out = parse_csv(buf.as_slice(), &DatasetSchema::raw_customer(2)).unwrap();
        assert_eq!(out.records, vec![rec]);
    }

    #[test]
    fn missing_optional_fields_become_unknown() {
        let mut rec = clean_record();
        rec.age = None;
        rec.gender = Gender::Unknown;
        rec.bill_address_county = None;
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&rec), 2, &mut buf).unwrap();
        let out = parse_csv(buf.as_slice(), &DatasetSchema::raw_customer(2)).unwrap();
        assert!(out.errors.is_empty());
        assert_eq!(out.records[0], rec);
    }

    #[test]
    fn two_digit_years_rejected() {
        assert_eq!(
            parse_date("28/07/2015"),
            NaiveDate::from_ymd_opt(2015, 7, 28)
        );
        assert_eq!(parse_date("28/07/15"), None);
        assert_eq!(parse_date("2015-07-28"), None);
        assert_eq!(parse_date("31/02/2015"), None);
    }

    #[test]
    fn validate_clean_record() {
        assert!(validate(&clean_record()).is_empty());
    }

    #[test]
    fn validate_date_order() {
        let mut rec = clean_record();
        rec.network_status = NetworkStatus::Inactive;
        rec.inactive_date = NaiveDate::from_ymd_opt(2015, 7, 1);
        assert_eq!(validate(&rec), vec![Violation::DateOrderViolation]);
    }

    #[test]
    fn validate_window_overflow() {
        let mut rec = clean_record();
        rec.monthly_invoices =
            vec![MonthlyInvoice::billed(Cents(100), Cents(0), PaymentStatus::Paid); 17];
        assert_eq!(
            validate(&rec),
            vec![Violation::WindowOverflowViolation { months: 17 }]
        );
    }

    #[test]
    fn validate_absent_mismatch() {
        let mut rec = clean_record();
        rec.monthly_invoices[0].amount = Some(Cents(100));
        assert_eq!(
            validate(&rec),
            vec![Violation::AbsentMonthMismatch { month: 1 }]
        );
        let mut rec = clean_record();
        rec.monthly_invoices[1].amount = None;
        assert_eq!(
            validate(&rec),
            vec![Violation::AbsentMonthMismatch { month: 2 }]
        );
    }

    #[test]
    fn invalid_rows_downgraded_to_errors() {
        let mut rec = clean_record();
        rec.monthly_invoices[0].amount = Some(Cents(100));
        let mut buf = Vec::new();
        write_csv(&[rec], 2, &mut buf).unwrap();
        let out = parse_csv(buf.as_slice(), &DatasetSchema::raw_customer(2)).unwrap();
        assert!(out.records.is_empty());
        assert!(matches!(out.errors[0].kind, RowErrorKind::Invalid { .. }));
    }

    #[test]
    fn activation_after_sale_month() {
        let mut rec = clean_record();
        rec.activation_date = NaiveDate::from_ymd_opt(2015, 7, 31).unwrap();
        assert!(validate(&rec).is_empty());
        rec.activation_date = NaiveDate::from_ymd_opt(2015, 8, 1).unwrap();
        assert_eq!(
            validate(&rec),
            vec![Violation::ActivationAfterSaleViolation]
        );
    }

    #[test]
    fn header_detects_month_count() {
        let schema = DatasetSchema::raw_customer(5);
        let names: Vec<&str> = schema.column_names().collect();
        assert_eq!(DatasetSchema::raw_customer_for_header(&names).months(), 5);
    }

    #[test]
    fn class_column_must_be_nominal() {
        let schema = DatasetSchema::raw_customer(1);
        assert!(schema.clone().with_class("gender").is_ok());
        assert!(matches!(
            schema.clone().with_class("age"),
            Err(SchemaError::ClassNotNominal(_))
        ));
        assert!(matches!(
            schema.with_class("nope"),
            Err(SchemaError::MissingColumn(_))
        ));
    }
}
