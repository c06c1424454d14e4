//! Derived customer attributes.
//!
//! Every derivation is a pure function of one record plus an explicit
//! reference date, so re-running a pipeline never depends on the wall clock.

use std::fmt;

use chrono::{Datelike, NaiveDate, NaiveTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{MonthlyInvoice, NetworkStatus, PaymentStatus, RawCustomerRecord};
use crate::money::Cents;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("length of service is negative: {from} .. {to}")]
    NegativeService { from: NaiveDate, to: NaiveDate },
    #[error("column {column:?}: cannot read {value:?}")]
    BadField { column: String, value: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeGroup {
    #[serde(rename = "0-14")]
    Child,
    #[serde(rename = "15-24")]
    Youth,
    #[serde(rename = "25-44")]
    Adult,
    #[serde(rename = "45-64")]
    MiddleAged,
    #[serde(rename = "65+")]
    Senior,
    Unknown,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 6] = [
        AgeGroup::Child,
        AgeGroup::Youth,
        AgeGroup::Adult,
        AgeGroup::MiddleAged,
        AgeGroup::Senior,
        AgeGroup::Unknown,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AgeGroup::Child => "0-14",
            AgeGroup::Youth => "15-24",
            AgeGroup::Adult => "25-44",
            AgeGroup::MiddleAged => "45-64",
            AgeGroup::Senior => "65+",
            AgeGroup::Unknown => "Unknown",
        }
    }

    pub fn from_label(s: &str) -> Option<AgeGroup> {
        AgeGroup::ALL.into_iter().find(|g| g.label() == s)
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn derive_age_group(age: Option<i32>) -> AgeGroup {
    match age {
        Some(0..=14) => AgeGroup::Child,
        Some(15..=24) => AgeGroup::Youth,
        Some(25..=44) => AgeGroup::Adult,
        Some(45..=64) => AgeGroup::MiddleAged,
        Some(65..) => AgeGroup::Senior,
        _ => AgeGroup::Unknown,
    }
}

/// The 32 counties of the island of Ireland in canonical (alphabetical)
/// order. When an address names more than one, the earliest here wins.
pub const COUNTIES: [&str; 32] = [
    "Antrim",
    "Armagh",
    "Carlow",
    "Cavan",
    "Clare",
    "Cork",
    "Derry",
    "Donegal",
    "Down",
    "Dublin",
    "Fermanagh",
    "Galway",
    "Kerry",
    "Kildare",
    "Kilkenny",
    "Laois",
    "Leitrim",
    "Limerick",
    "Longford",
    "Louth",
    "Mayo",
    "Meath",
    "Monaghan",
    "Offaly",
    "Roscommon",
    "Sligo",
    "Tipperary",
    "Tyrone",
    "Waterford",
    "Westmeath",
    "Wexford",
    "Wicklow",
];

pub const COUNTY_NOT_AVAILABLE: &str = "#N/A";

/// Whole-word, case-insensitive county search over a free-text address.
pub fn derive_county(bill_address: Option<&str>) -> &'static str {
    let Some(address) = bill_address else {
        return COUNTY_NOT_AVAILABLE;
    };
    let words: Vec<String> = address
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    COUNTIES
        .iter()
        .find(|county| {
            let lc = county.to_lowercase();
            words.contains(&lc)
        })
        .copied()
        .unwrap_or(COUNTY_NOT_AVAILABLE)
}

/// Days in service: up to the inactive date for inactive accounts, up to
/// `reference_today` otherwise (or when no inactive date was recorded).
pub fn derive_length_of_service(
    status: NetworkStatus,
    activation: NaiveDate,
    inactive: Option<NaiveDate>,
    reference_today: NaiveDate,
) -> Result<u32, FeatureError> {
    let end = match (status, inactive) {
        (NetworkStatus::Inactive, Some(d)) => d,
        _ => reference_today,
    };
    let days = (end - activation).num_days();
    u32::try_from(days).map_err(|_| FeatureError::NegativeService {
        from: activation,
        to: end,
    })
}

pub fn weekday_name(day: Weekday) -> &'static str {
    match day {
        Weekday::Mon => "Monday",
        Weekday::Tue => "Tuesday",
        Weekday::Wed => "Wednesday",
        Weekday::Thu => "Thursday",
        Weekday::Fri => "Friday",
        Weekday::Sat => "Saturday",
        Weekday::Sun => "Sunday",
    }
}

pub fn weekday_from_name(name: &str) -> Option<Weekday> {
    (0..7)
        .map(|i| Weekday::try_from(i as u8).expect("0..7 is a weekday"))
        .find(|d| weekday_name(*d) == name)
}

pub fn derive_sale_day(sale_date: NaiveDate) -> Weekday {
    sale_date.weekday()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimeOfDay {
    Night,
    Morning,
    Afternoon,
    Evening,
}

impl TimeOfDay {
    pub const ALL: [TimeOfDay; 4] = [
        TimeOfDay::Night,
        TimeOfDay::Morning,
        TimeOfDay::Afternoon,
        TimeOfDay::Evening,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TimeOfDay::Night => "Night",
            TimeOfDay::Morning => "Morning",
            TimeOfDay::Afternoon => "Afternoon",
            TimeOfDay::Evening => "Evening",
        }
    }

    pub fn from_label(s: &str) -> Option<TimeOfDay> {
        TimeOfDay::ALL.into_iter().find(|t| t.label() == s)
    }
}

pub fn derive_time_of_day(sale_time: NaiveTime) -> TimeOfDay {
    match sale_time.hour() {
        h if h < 6 => TimeOfDay::Night,
        h if h < 12 => TimeOfDay::Morning,
        h if h < 17 => TimeOfDay::Afternoon,
        _ => TimeOfDay::Evening,
    }
}

/// Invoice totals and payment counts over the billed months.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvoiceAggregates {
    pub total_invoice_excl_bf: Cents,
    pub total_invoices: u32,
    pub paid_count: u32,
    pub declined_count: u32,
    pub unpaid_count: u32,
}

impl InvoiceAggregates {
    /// Average invoice in (fractional) cents; zero when the total is zero.
    pub fn avg_invoice_cents(&self) -> f64 {
        if self.total_invoice_excl_bf.is_zero() {
            0.0
        } else {
            self.total_invoice_excl_bf.0 as f64 / f64::from(self.total_invoices)
        }
    }

    pub fn avg_invoice_euros(&self) -> f64 {
        self.avg_invoice_cents() / 100.0
    }

    /// Average rounded half-up to whole cents, computed in integers.
    pub fn avg_invoice_rounded(&self) -> Cents {
        if self.total_invoice_excl_bf.is_zero() {
            return Cents::ZERO;
        }
        let n = i64::from(self.total_invoices);
        // floor(total / n + 1/2)
        Cents((2 * self.total_invoice_excl_bf.0 + n).div_euclid(2 * n))
    }
}

pub fn derive_invoice_aggregates(monthly: &[MonthlyInvoice]) -> InvoiceAggregates {
    let mut agg = InvoiceAggregates::default();
    for m in monthly.iter().filter(|m| !m.is_absent()) {
        let amount = m.amount.unwrap_or_default();
        let bf = m.brought_forward.unwrap_or_default();
        agg.total_invoice_excl_bf += amount - bf;
        agg.total_invoices += 1;
        match m.status {
            PaymentStatus::Paid => agg.paid_count += 1,
            PaymentStatus::Declined => agg.declined_count += 1,
            PaymentStatus::Unpaid => agg.unpaid_count += 1,
            PaymentStatus::Absent => unreachable!(),
        }
    }
    agg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedProfile {
    pub age_group: AgeGroup,
    pub county: String,
    pub length_of_service_days: u32,
    pub sale_day: Weekday,
    pub sale_time_of_day: TimeOfDay,
    pub invoices: InvoiceAggregates,
}

pub fn derive_profile(
    record: &RawCustomerRecord,
    reference_today: NaiveDate,
) -> Result<DerivedProfile, FeatureError> {
    Ok(DerivedProfile {
        age_group: derive_age_group(record.age),
        county: derive_county(record.bill_address_county.as_deref()).to_string(),
        length_of_service_days: derive_length_of_service(
            record.network_status,
            record.activation_date,
            record.inactive_date,
            reference_today,
        )?,
        sale_day: derive_sale_day(record.sale_date),
        sale_time_of_day: derive_time_of_day(record.sale_time),
        invoices: derive_invoice_aggregates(&record.monthly_invoices),
    })
}

/// Column names appended by the `derive` step, in output order.
pub const PROFILE_COLUMNS: [&str; 11] = [
    "age_group",
    "county",
    "length_of_service_days",
    "sale_day",
    "sale_time_of_day",
    "total_invoice_excl_bf",
    "total_invoices",
    "avg_invoice",
    "paid_count",
    "declined_count",
    "unpaid_count",
];

impl DerivedProfile {
    pub fn to_fields(&self) -> Vec<String> {
        let inv = &self.invoices;
        vec![
            self.age_group.label().to_string(),
            self.county.clone(),
            self.length_of_service_days.to_string(),
            weekday_name(self.sale_day).to_string(),
            self.sale_time_of_day.label().to_string(),
            inv.total_invoice_excl_bf.to_string(),
            inv.total_invoices.to_string(),
            format!("{:.4}", inv.avg_invoice_euros()),
            inv.paid_count.to_string(),
            inv.declined_count.to_string(),
            inv.unpaid_count.to_string(),
        ]
    }

    /// Rebuilds a profile from the [`PROFILE_COLUMNS`] of a derived file.
    /// `get` looks a column up by name. `avg_invoice` is recomputed from the
    /// exact total and count rather than read back.
    pub fn from_fields<'a>(
        get: impl Fn(&str) -> Option<&'a str>,
    ) -> Result<DerivedProfile, FeatureError> {
        let field = |name: &str| get(name).ok_or_else(|| FeatureError::MissingColumn(name.into()));
        let bad = |name: &str, v: &str| FeatureError::BadField {
            column: name.into(),
            value: v.into(),
        };
        let parse_u32 = |name: &str| -> Result<u32, FeatureError> {
            let v = field(name)?;
            v.trim().parse().map_err(|_| bad(name, v))
        };
        let age = field("age_group")?;
        let day = field("sale_day")?;
        let tod = field("sale_time_of_day")?;
        let total = field("total_invoice_excl_bf")?;
        Ok(DerivedProfile {
            age_group: AgeGroup::from_label(age).ok_or_else(|| bad("age_group", age))?,
            county: field("county")?.to_string(),
            length_of_service_days: parse_u32("length_of_service_days")?,
            sale_day: weekday_from_name(day).ok_or_else(|| bad("sale_day", day))?,
            sale_time_of_day: TimeOfDay::from_label(tod)
                .ok_or_else(|| bad("sale_time_of_day", tod))?,
            invoices: InvoiceAggregates {
                total_invoice_excl_bf: total
                    .parse()
                    .map_err(|_| bad("total_invoice_excl_bf", total))?,
                total_invoices: parse_u32("total_invoices")?,
                paid_count: parse_u32("paid_count")?,
                declined_count: parse_u32("declined_count")?,
                unpaid_count: parse_u32("unpaid_count")?,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn t(h: u32, m: u32, s: u32) -> NaiveTime {
        NaiveTime::from_hms_opt(h, m, s).unwrap()
    }

    fn paid(amount: i64, bf: i64, status: PaymentStatus) -> MonthlyInvoice {
        MonthlyInvoice::billed(Cents::from_euros(amount), Cents::from_euros(bf), status)
    }

    #[test]
    fn age_groups() {
        assert_eq!(derive_age_group(Some(30)), AgeGroup::Adult);
        assert_eq!(derive_age_group(Some(0)), AgeGroup::Child);
        assert_eq!(derive_age_group(Some(14)), AgeGroup::Child);
        assert_eq!(derive_age_group(Some(15)), AgeGroup::Youth);
        assert_eq!(derive_age_group(Some(64)), AgeGroup::MiddleAged);
        assert_eq!(derive_age_group(Some(65)), AgeGroup::Senior);
        assert_eq!(derive_age_group(None), AgeGroup::Unknown);
        assert_eq!(derive_age_group(Some(-1)), AgeGroup::Unknown);
    }

    #[test]
    fn counties() {
        assert_eq!(derive_county(Some("12 Main St, Galway")), "Galway");
        assert_eq!(derive_county(Some("")), COUNTY_NOT_AVAILABLE);
        assert_eq!(derive_county(None), COUNTY_NOT_AVAILABLE);
        assert_eq!(derive_county(Some("Dublin Road, Galway")), "Dublin");
        assert_eq!(derive_county(Some("apt 3, co. CORK")), "Cork");
        // whole words only
        assert_eq!(
            derive_county(Some("Londonderry Lane")),
            COUNTY_NOT_AVAILABLE
        );
        assert_eq!(derive_county(Some("Corkscrew Hill")), COUNTY_NOT_AVAILABLE);
    }

    #[test]
    fn county_tie_break_matches_enumeration() {
        // every pair: the alphabetically earlier county wins regardless of position
        for (i, a) in COUNTIES.iter().enumerate() {
            for b in &COUNTIES[i + 1..] {
                let addr = format!("{b} Street, {a}");
                assert_eq!(derive_county(Some(&addr)), *a);
            }
        }
        let mut sorted = COUNTIES;
        sorted.sort_unstable();
        assert_eq!(sorted, COUNTIES);
    }

    #[test]
    fn length_of_service() {
        let today = d(2016, 11, 28);
        assert_eq!(
            derive_length_of_service(
                NetworkStatus::Inactive,
                d(2015, 1, 1),
                Some(d(2015, 1, 31)),
                today
            ),
            Ok(30)
        );
        assert_eq!(
            derive_length_of_service(NetworkStatus::Active, today, None, today),
            Ok(0)
        );
        assert_eq!(
            derive_length_of_service(NetworkStatus::Active, d(2015, 7, 28), None, today),
            Ok(489)
        );
        assert!(matches!(
            derive_length_of_service(NetworkStatus::Active, d(2017, 1, 1), None, today),
            Err(FeatureError::NegativeService { .. })
        ));
    }

    #[test]
    fn length_of_service_matches_day_count_oracle() {
        // count days by stepping one at a time
        let start = d(2015, 7, 28);
        let end = d(2016, 11, 28);
        let mut days = 0;
        let mut cur = start;
        while cur < end {
            cur = cur.succ_opt().unwrap();
            days += 1;
        }
        assert_eq!(days, 489);
    }

    #[test]
    fn sale_day() {
        assert_eq!(weekday_name(derive_sale_day(d(2015, 7, 28))), "Tuesday");
        assert_eq!(weekday_name(derive_sale_day(d(2015, 1, 1))), "Thursday");
        for offset in 0..30 {
            let a = d(2015, 3, 1) + chrono::Duration::days(offset);
            assert_eq!(
                derive_sale_day(a),
                derive_sale_day(a + chrono::Duration::days(7))
            );
        }
        for name in ["Monday", "Sunday"] {
            assert_eq!(weekday_name(weekday_from_name(name).unwrap()), name);
        }
    }

    #[test]
    fn time_of_day() {
        assert_eq!(derive_time_of_day(t(10, 17, 55)), TimeOfDay::Morning);
        assert_eq!(derive_time_of_day(t(0, 0, 0)), TimeOfDay::Night);
        assert_eq!(derive_time_of_day(t(5, 59, 59)), TimeOfDay::Night);
        assert_eq!(derive_time_of_day(t(16, 59, 59)), TimeOfDay::Afternoon);
        assert_eq!(derive_time_of_day(t(17, 0, 0)), TimeOfDay::Evening);
        assert_eq!(derive_time_of_day(t(23, 59, 59)), TimeOfDay::Evening);
    }

    #[test]
    fn time_of_day_partition_sizes() {
        let mut sizes = [0; 4];
        for h in 0..24 {
            sizes[derive_time_of_day(t(h, 0, 0)) as usize] += 1;
        }
        assert_eq!(sizes, [6, 6, 5, 7]);
    }

    #[test]
    fn invoice_aggregates() {
        assert_eq!(derive_invoice_aggregates(&[]), InvoiceAggregates::default());
        assert_eq!(derive_invoice_aggregates(&[]).avg_invoice_cents(), 0.0);

        let one = derive_invoice_aggregates(&[paid(30, 0, PaymentStatus::Paid)]);
        assert_eq!(one.total_invoice_excl_bf, Cents(3000));
        assert_eq!(one.total_invoices, 1);
        assert_eq!(one.avg_invoice_rounded(), Cents(3000));
        assert_eq!(
            (one.paid_count, one.declined_count, one.unpaid_count),
            (1, 0, 0)
        );

        let three = derive_invoice_aggregates(&[
            MonthlyInvoice::ABSENT,
            paid(20, 0, PaymentStatus::Paid),
            paid(25, 5, PaymentStatus::Paid),
            paid(30, 0, PaymentStatus::Unpaid),
        ]);
        assert_eq!(three.total_invoice_excl_bf, Cents(7000));
        assert_eq!(three.total_invoices, 3);
        assert!((three.avg_invoice_euros() - 70.0 / 3.0).abs() < 1e-12);
        assert_eq!(three.avg_invoice_rounded(), Cents(2333));
        assert_eq!(
            (three.paid_count, three.declined_count, three.unpaid_count),
            (2, 0, 1)
        );
    }

    #[test]
    fn zero_total_with_invoices_averages_zero() {
        let agg = derive_invoice_aggregates(&[
            paid(10, 10, PaymentStatus::Paid),
            paid(0, 0, PaymentStatus::Declined),
        ]);
        assert_eq!(agg.total_invoices, 2);
        assert_eq!(agg.avg_invoice_cents(), 0.0);
        assert_eq!(agg.avg_invoice_rounded(), Cents::ZERO);
    }

    #[test]
    fn rounding_is_half_up() {
        let agg = |total, n| InvoiceAggregates {
            total_invoice_excl_bf: Cents(total),
            total_invoices: n,
            ..Default::default()
        };
        assert_eq!(agg(5, 2).avg_invoice_rounded(), Cents(3));
        assert_eq!(agg(-5, 2).avg_invoice_rounded(), Cents(-2));
        assert_eq!(agg(7, 3).avg_invoice_rounded(), Cents(2));
        assert_eq!(agg(-7, 3).avg_invoice_rounded(), Cents(-2));
        assert_eq!(agg(1499, 1).avg_invoice_rounded(), Cents(1499));
    }

    fn month_strategy() -> impl Strategy<Value = MonthlyInvoice> {
        prop_oneof![
            Just(MonthlyInvoice::ABSENT),
            (0i64..20_000, 0i64..5_000, 0usize..3).prop_map(|(a, b, s)| {
                let status = [
                    PaymentStatus::Paid,
                    PaymentStatus::Declined,
                    PaymentStatus::Unpaid,
                ][s];
                MonthlyInvoice::billed(Cents(a + b), Cents(b), status)
            }),
        ]
    }

    proptest! {
        #[test]
        fn counts_partition_invoices(months in prop::collection::vec(month_strategy(), 0..=16)) {
            let agg = derive_invoice_aggregates(&months);
            prop_assert_eq!(agg.paid_count + agg.declined_count + agg.unpaid_count, agg.total_invoices);
            if agg.total_invoices == 0 {
                prop_assert_eq!(agg.total_invoice_excl_bf, Cents::ZERO);
                prop_assert_eq!(agg.avg_invoice_cents(), 0.0);
            }
            if !agg.total_invoice_excl_bf.is_zero() {
                let n = i64::from(agg.total_invoices);
                // the rounded average is within half a cent of the exact one
                let err = agg.avg_invoice_rounded().0 * n - agg.total_invoice_excl_bf.0;
                prop_assert!(2 * err.abs() <= n);
                let back = agg.avg_invoice_cents() * n as f64;
                prop_assert!((back - agg.total_invoice_excl_bf.0 as f64).abs() < 1e-6);
            }
        }

        #[test]
        fn age_groups_partition(age in 0i32..200) {
            let g = derive_age_group(Some(age));
            prop_assert_ne!(g, AgeGroup::Unknown);
            let bins = [(0, 14), (15, 24), (25, 44), (45, 64), (65, i32::MAX)];
            let hits = bins.iter().filter(|(lo, hi)| (*lo..=*hi).contains(&age)).count();
            prop_assert_eq!(hits, 1);
        }

        #[test]
        fn profile_fields_roundtrip(total in -100_000i64..100_000, n in 1u32..16, p in 0u32..16) {
            let profile = DerivedProfile {
                age_group: AgeGroup::Adult,
                county: "Cork".into(),
                length_of_service_days: 12,
                sale_day: Weekday::Fri,
                sale_time_of_day: TimeOfDay::Evening,
                invoices: InvoiceAggregates {
                    total_invoice_excl_bf: Cents(total),
                    total_invoices: n,
                    paid_count: p.min(n),
                    declined_count: 0,
                    unpaid_count: n - p.min(n),
                },
            };
            let fields = profile.to_fields();
            let back = DerivedProfile::from_fields(|name| {
                PROFILE_COLUMNS.iter().position(|c| *c == name).map(|i| fields[i].as_str())
            }).unwrap();
            prop_assert_eq!(back, profile);
        }
    }
}
