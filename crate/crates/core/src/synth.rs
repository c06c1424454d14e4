//! Seeded generator of labelled raw billing exports.
//!
//! Each row is built backwards from an intended account class: the generator
//! picks a spend tier compatible with the class, an average monthly invoice
//! inside that tier's band, and a payment history that is either paid up or
//! carries at least two outstanding months. The class rules are re-derived
//! here from their definitions rather than borrowed from [`crate::rules`], so
//! the two implementations can be checked against each other.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, Months, NaiveDate, NaiveTime};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::with_thread_cap;
use crate::features::COUNTY_NOT_AVAILABLE;
use crate::ingest::{
    Gender, MonthlyInvoice, NetworkStatus, PaymentStatus, RawCustomerRecord, MAX_MONTHS,
};
use crate::money::Cents;
use crate::rules::{AccountClass, SpenderStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("infeasible generator config: {0}")]
    Infeasible(String),
    #[error("invalid generator config: {0}")]
    Invalid(String),
}

/// Target class proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMix {
    pub standard: f64,
    pub unpaid_invoice: f64,
    pub premium: f64,
    pub vip: f64,
}

impl Default for ClassMix {
    fn default() -> Self {
        let total = 9079.0;
        ClassMix {
            standard: 4876.0 / total,
            unpaid_invoice: 1915.0 / total,
            premium: 2194.0 / total,
            vip: 94.0 / total,
        }
    }
}

impl ClassMix {
    fn weights(&self) -> [(AccountClass, f64); 4] {
        [
            (AccountClass::Standard, self.standard),
            (AccountClass::UnpaidInvoice, self.unpaid_invoice),
            (AccountClass::Premium, self.premium),
            (AccountClass::Vip, self.vip),
        ]
    }

    pub fn proportion(&self, class: AccountClass) -> f64 {
        self.weights()
            .iter()
            .find(|(c, _)| *c == class)
            .map_or(0.0, |(_, w)| *w)
    }
}

/// Average monthly invoice distribution for one spend tier, in euros.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierParams {
    pub mean: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpendParams {
    pub low: TierParams,
    pub average: TierParams,
    pub above_average: TierParams,
    pub high: TierParams,
    pub very_high: TierParams,
}

impl Default for SpendParams {
    fn default() -> Self {
        SpendParams {
            low: TierParams {
                mean: 9.0,
                spread: 3.5,
            },
            average: TierParams {
                mean: 22.0,
                spread: 3.5,
            },
            above_average: TierParams {
                mean: 39.5,
                spread: 5.0,
            },
            high: TierParams {
                mean: 60.0,
                spread: 5.0,
            },
            very_high: TierParams {
                mean: 88.0,
                spread: 12.0,
            },
        }
    }
}

/// Spend tiers by average invoice in cents: lower bound inclusive, upper
/// bound exclusive.
const TIERS: [(SpenderStatus, i64, Option<i64>); 5] = [
    (SpenderStatus::Low, 0, Some(1500)),
    (SpenderStatus::Average, 1500, Some(2900)),
    (SpenderStatus::AboveAverage, 2900, Some(5000)),
    (SpenderStatus::High, 5000, Some(7000)),
    (SpenderStatus::VeryHigh, 7000, None),
];

/// Distance in cents kept between a drawn average and its band edges.
const BAND_MARGIN: i64 = 5;

impl SpendParams {
    fn get(&self, tier: usize) -> TierParams {
        [
            self.low,
            self.average,
            self.above_average,
            self.high,
            self.very_high,
        ][tier]
    }
}

fn default_counties() -> BTreeMap<String, f64> {
    [
        ("Antrim", 1.0),
        ("Armagh", 1.0),
        ("Carlow", 85.0),
        ("Cavan", 2.0),
        ("Clare", 74.0),
        ("Cork", 852.0),
        ("Derry", 60.0),
        ("Donegal", 122.0),
        ("Down", 60.0),
        ("Dublin", 2608.0),
        ("Fermanagh", 1.0),
        ("Galway", 437.0),
        ("Kerry", 11.0),
        ("Kildare", 26.0),
        ("Kilkenny", 189.0),
        ("Laois", 161.0),
        ("Leitrim", 111.0),
        ("Limerick", 8.0),
        ("Longford", 89.0),
        ("Louth", 11.0),
        ("Mayo", 9.0),
        ("Meath", 434.0),
        ("Monaghan", 4.0),
        ("Offaly", 3.0),
        ("Roscommon", 8.0),
        ("Sligo", 1.0),
        ("Tipperary", 15.0),
        ("Tyrone", 1.0),
        ("Waterford", 9.0),
        ("Westmeath", 1.0),
        ("Wexford", 10.0),
        ("Wicklow", 15.0),
        (COUNTY_NOT_AVAILABLE, 607.0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_rows: usize,
    pub seed: u64,
    pub class_mix: ClassMix,
    pub label_noise: f64,
    pub spend_params: SpendParams,
    /// Weight per county name; `#N/A` produces addresses without a county.
    pub county_weights: BTreeMap<String, f64>,
    /// Length of the invoice window.
    pub months: usize,
    /// Any day in the last month of the window.
    pub window_end: NaiveDate,
    /// Date used for the length of service of active accounts.
    pub reference_date: NaiveDate,
    pub inactive_fraction: f64,
    /// Probability that a row's age is drawn from a class-dependent range
    /// instead of the shared distribution. Zero keeps demographics
    /// independent of the label.
    pub demographic_signal: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_rows: 10_000,
            seed: 1,
            class_mix: ClassMix::default(),
            label_noise: 0.0,
            spend_params: SpendParams::default(),
            county_weights: default_counties(),
            months: MAX_MONTHS,
            window_end: NaiveDate::from_ymd_opt(2016, 11, 1).expect("valid date"),
            reference_date: NaiveDate::from_ymd_opt(2016, 11, 28).expect("valid date"),
            inactive_fraction: 0.15,
            demographic_signal: 0.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let mix: Vec<f64> = self.class_mix.weights().iter().map(|(_, w)| *w).collect();
        if mix.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(SynthError::Invalid(
                "class_mix entries must be non-negative".into(),
            ));
        }
        let sum: f64 = mix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SynthError::Invalid(format!(
                "class_mix sums to {sum}, not 1"
            )));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(SynthError::Invalid(format!(
                "label_noise {} outside [0, 1)",
                self.label_noise
            )));
        }
        for (name, p) in [
            ("inactive_fraction", self.inactive_fraction),
            ("demographic_signal", self.demographic_signal),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::Invalid(format!("{name} {p} outside [0, 1]")));
            }
        }
        if self.months == 0 || self.months > MAX_MONTHS {
            return Err(SynthError::Invalid(format!(
                "months must be 1..={MAX_MONTHS}"
            )));
        }
        if self.class_mix.unpaid_invoice > 0.0 && self.months < 2 {
            return Err(SynthError::Infeasible(
                "unpaid accounts need a window of at least 2 months".into(),
            ));
        }
        if self.reference_date < self.window_end {
            return Err(SynthError::Invalid(
                "reference_date precedes the end of the window".into(),
            ));
        }
        if self.county_weights.is_empty()
            || self
                .county_weights
                .values()
                .any(|w| !(w.is_finite() && *w >= 0.0))
            || self.county_weights.values().sum::<f64>() <= 0.0
        {
            return Err(SynthError::Invalid(
                "county_weights need a positive total".into(),
            ));
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, (status, lo, hi)) in TIERS.iter().enumerate() {
            let p = self.spend_params.get(i);
            let cents = p.mean * 100.0;
            let inside = cents > (*lo + BAND_MARGIN) as f64
                && hi.is_none_or(|h| cents < (h - BAND_MARGIN) as f64);
            if !inside {
                return Err(SynthError::Infeasible(format!(
                    "{status} mean {:.2} lies outside its band",
                    p.mean
                )));
            }
            if !(p.spread.is_finite() && p.spread > 0.0) {
                return Err(SynthError::Infeasible(format!(
                    "{status} spread must be positive"
                )));
            }
            if p.mean <= prev {
                return Err(SynthError::Infeasible("tier means must increase".into()));
            }
            prev = p.mean;
        }
        Ok(())
    }
}

/// What the generator meant each row to be, plus the aggregates it actually
/// wrote (after any noise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub account_id: String,
    pub spender_status: SpenderStatus,
    pub account_class: AccountClass,
    pub perturbed: bool,
    pub total_invoices: u32,
    pub paid_count: u32,
    pub declined_count: u32,
    pub unpaid_count: u32,
    pub total_invoice_excl_bf: Cents,
    pub county: String,
    pub length_of_service_days: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub rows: Vec<TruthRow>,
}

impl GroundTruth {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "account_id",
            "spender_status",
            "account_class",
            "perturbed",
            "total_invoices",
            "paid_count",
            "declined_count",
            "unpaid_count",
            "total_invoice_excl_bf",
            "county",
            "length_of_service_days",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.account_id.clone(),
                r.spender_status.label().to_string(),
                r.account_class.label().to_string(),
                r.perturbed.to_string(),
                r.total_invoices.to_string(),
                r.paid_count.to_string(),
                r.declined_count.to_string(),
                r.unpaid_count.to_string(),
                r.total_invoice_excl_bf.to_string(),
                r.county.clone(),
                r.length_of_service_days.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

const STREETS: [&str; 8] = [
    "Main Street",
    "Church Road",
    "Station Road",
    "Park Avenue",
    "Mill Lane",
    "Green Street",
    "High Street",
    "Bridge Street",
];

/// Tier indices a class may come from, with relative weights.
fn tier_choices(class: AccountClass) -> &'static [(usize, f64)] {
    match class {
        AccountClass::Standard => &[(0, 0.55), (1, 0.45)],
        AccountClass::Premium => &[(2, 0.6), (3, 0.4)],
        AccountClass::Vip => &[(4, 1.0)],
        AccountClass::UnpaidInvoice => &[(0, 0.3), (1, 0.3), (2, 0.2), (3, 0.15), (4, 0.05)],
    }
}

/// Class implied by a tier and a payment history, written out from the
/// segmentation definitions.
fn intended_class(tier: usize, outstanding: usize) -> AccountClass {
    if outstanding >= 2 {
        AccountClass::UnpaidInvoice
    } else if tier <= 1 {
        AccountClass::Standard
    } else if tier <= 3 {
        AccountClass::Premium
    } else {
        AccountClass::Vip
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[(T, f64)]) -> T {
    let dist = WeightedIndex::new(items.iter().map(|(_, w)| *w)).expect("validated weights");
    items[dist.sample(rng)].0
}

/// Average invoice in cents, drawn from a normal truncated to the tier's
/// band shrunk by [`BAND_MARGIN`].
fn draw_average(rng: &mut ChaCha8Rng, tier: usize, params: &SpendParams) -> i64 {
    let (_, lo, hi) = TIERS[tier];
    let p = params.get(tier);
    let lo = lo + BAND_MARGIN;
    let hi = hi.map_or_else(
        || (p.mean * 100.0 + 6.0 * p.spread * 100.0).ceil() as i64,
        |h| h - BAND_MARGIN,
    );
    let normal = Normal::new(p.mean * 100.0, p.spread * 100.0).expect("validated spread");
    for _ in 0..64 {
        let x = normal.sample(rng).round() as i64;
        if (lo..hi).contains(&x) {
            return x;
        }
    }
    rng.random_range(lo..hi)
}

fn age_for(rng: &mut ChaCha8Rng, class: AccountClass, signal: f64) -> Option<i32> {
    if rng.random::<f64>() < 0.02 {
        return None;
    }
    if signal > 0.0 && rng.random::<f64>() < signal {
        let (lo, hi) = match class {
            AccountClass::Standard => (25, 44),
            AccountClass::UnpaidInvoice => (15, 24),
            AccountClass::Premium => (45, 64),
            AccountClass::Vip => (65, 90),
        };
        return Some(rng.random_range(lo..=hi));
    }
    let bins = [
        ((5, 14), 0.01),
        ((15, 24), 0.14),
        ((25, 44), 0.40),
        ((45, 64), 0.32),
        ((65, 90), 0.13),
    ];
    let (lo, hi) = pick(rng, &bins);
    Some(rng.random_range(lo..=hi))
}

fn sale_time(rng: &mut ChaCha8Rng) -> NaiveTime {
    let hours: Vec<(u32, f64)> = (0..24)
        .map(|h| {
            (
                h,
                if (9..21).contains(&h) {
                    6.0
                } else if (6..9).contains(&h) || h >= 21 {
                    2.0
                } else {
                    0.5
                },
            )
        })
        .collect();
    let h = pick(rng, &hours);
    NaiveTime::from_hms_opt(h, rng.random_range(0..60), rng.random_range(0..60))
        .expect("valid time")
}

fn generate_row(
    config: &GeneratorConfig,
    index: usize,
    counties: &[(&str, f64)],
    first_month: NaiveDate,
) -> (RawCustomerRecord, TruthRow) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);

    let class = pick(&mut rng, &config.class_mix.weights());
    let mut tier = pick(&mut rng, tier_choices(class));
    let months = config.months;
    let min_active = if class == AccountClass::UnpaidInvoice {
        2
    } else {
        1
    };
    let active = rng.random_range(min_active..=months);

    // statuses for the active months, oldest first
    let outstanding_count = match class {
        AccountClass::UnpaidInvoice => rng.random_range(2..=active),
        _ => usize::from(active > 0 && rng.random::<f64>() < 0.3),
    };
    let mut statuses = vec![PaymentStatus::Paid; active];
    for i in sample(&mut rng, active, outstanding_count) {
        statuses[i] = if rng.random::<bool>() {
            PaymentStatus::Declined
        } else {
            PaymentStatus::Unpaid
        };
    }

    let spender_status = TIERS[tier].0;
    let mut perturbed = false;
    if config.label_noise > 0.0 && rng.random::<f64>() < config.label_noise {
        perturbed = true;
        if rng.random::<bool>() {
            let i = rng.random_range(0..active);
            statuses[i] = if statuses[i] == PaymentStatus::Paid {
                if rng.random::<bool>() {
                    PaymentStatus::Declined
                } else {
                    PaymentStatus::Unpaid
                }
            } else {
                PaymentStatus::Paid
            };
        } else {
            tier = match tier {
                0 => 1,
                4 => 3,
                t if rng.random::<bool>() => t - 1,
                t => t + 1,
            };
        }
    }

    // monthly nets sum to exactly average * active
    let average = draw_average(&mut rng, tier, &config.spend_params);
    let mut nets = vec![average; active];
    let swing_cap = average.min((config.spend_params.get(tier).spread * 100.0) as i64);
    for pair in (0..active / 2).map(|p| 2 * p) {
        let d = if swing_cap > 0 {
            rng.random_range(-swing_cap..=swing_cap)
        } else {
            0
        };
        nets[pair] += d;
        nets[pair + 1] -= d;
    }

    let mut invoices = vec![MonthlyInvoice::ABSENT; months - active];
    let mut carried = 0i64;
    for (net, status) in nets.iter().zip(&statuses) {
        let amount = net + carried;
        invoices.push(MonthlyInvoice::billed(
            Cents(amount),
            Cents(carried),
            *status,
        ));
        carried = if *status == PaymentStatus::Paid {
            0
        } else {
            amount
        };
    }

    let first_billed = first_month + Months::new((months - active) as u32);
    let activation = first_billed
        .with_day(rng.random_range(1..=28))
        .expect("valid day");
    let last_month = first_month + Months::new((months - 1) as u32);
    let network_status = if rng.random::<f64>() < config.inactive_fraction {
        NetworkStatus::Inactive
    } else {
        NetworkStatus::Active
    };
    let inactive_date = (network_status == NetworkStatus::Inactive).then(|| {
        let day = rng.random_range(1..=28);
        let d = last_month.with_day(day).expect("valid day");
        d.max(activation)
    });
    let service_end = inactive_date.unwrap_or(config.reference_date);
    let length_of_service_days = (service_end - activation).num_days() as u32;

    let county = pick(&mut rng, counties);
    let number = rng.random_range(1..200);
    let street = STREETS[rng.random_range(0..STREETS.len())];
    let address = if county == COUNTY_NOT_AVAILABLE {
        if rng.random::<f64>() < 0.3 {
            None
        } else {
            Some(format!("{number} {street}"))
        }
    } else {
        Some(format!("{number} {street}, Co. {county}"))
    };

    let gender = pick(
        &mut rng,
        &[
            (Gender::Male, 0.48),
            (Gender::Female, 0.48),
            (Gender::Unknown, 0.04),
        ],
    );
    let age = age_for(&mut rng, class, config.demographic_signal);
    let account_id = format!("BP{:07}", index + 1);

    let paid = statuses
        .iter()
        .filter(|s| **s == PaymentStatus::Paid)
        .count() as u32;
    let declined = statuses
        .iter()
        .filter(|s| **s == PaymentStatus::Declined)
        .count() as u32;
    let unpaid = statuses
        .iter()
        .filter(|s| **s == PaymentStatus::Unpaid)
        .count() as u32;

    let truth = TruthRow {
        account_id: account_id.clone(),
        spender_status,
        account_class: intended_class(
            TIERS
                .iter()
                .position(|t| t.0 == spender_status)
                .unwrap_or(0),
            outstanding_count,
        ),
        perturbed,
        total_invoices: active as u32,
        paid_count: paid,
        declined_count: declined,
        unpaid_count: unpaid,
        total_invoice_excl_bf: Cents(nets.iter().sum()),
        county: county.to_string(),
        length_of_service_days,
    };
    debug_assert_eq!(truth.account_class, class);

    let record = RawCustomerRecord {
        account_id,
        age,
        gender,
        bill_address_county: address,
        network_status,
        activation_date: activation,
        inactive_date,
        sale_date: activation,
        sale_time: sale_time(&mut rng),
        monthly_invoices: invoices,
    };
    (record, truth)
}

/// Generates `config.n_rows` records. Row `i` depends only on the seed and
/// `i`, so output is identical however rows are scheduled.
pub fn generate(
    config: &GeneratorConfig,
) -> Result<(Vec<RawCustomerRecord>, GroundTruth), SynthError> {
    config.validate()?;
    let counties: Vec<(&str, f64)> = config
        .county_weights
        .iter()
        .map(|(k, v)| (k.as_str(), *v))
        .collect();
    let first_month = config
        .window_end
        .with_day(1)
        .and_then(|d| d.checked_sub_months(Months::new((config.months - 1) as u32)))
        .ok_or_else(|| SynthError::Invalid("window_end out of range".into()))?;
    let pairs: Vec<(RawCustomerRecord, TruthRow)> = with_thread_cap(|| {
        (0..config.n_rows)
            .into_par_iter()
            .map(|i| generate_row(config, i, &counties, first_month))
            .collect()
    });
    let (records, rows) = pairs.into_iter().unzip();
    Ok((records, GroundTruth { rows }))
}
