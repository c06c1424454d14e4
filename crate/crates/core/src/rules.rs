//! Spender-status bands and account classification.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{DerivedProfile, InvoiceAggregates};
use crate::money::Cents;

/// Average-invoice band. The five spend bands are ordered low to high;
/// `Investigate` is the fall-through for amounts no band covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpenderStatus {
    Low,
    Average,
    AboveAverage,
    High,
    VeryHigh,
    Investigate,
}

impl SpenderStatus {
    pub const SPEND_BANDS: [SpenderStatus; 5] = [
        SpenderStatus::Low,
        SpenderStatus::Average,
        SpenderStatus::AboveAverage,
        SpenderStatus::High,
        SpenderStatus::VeryHigh,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SpenderStatus::Low => "Low Spender",
            SpenderStatus::Average => "Average Spender",
            SpenderStatus::AboveAverage => "Above Average Spender",
            SpenderStatus::High => "High Spender",
            SpenderStatus::VeryHigh => "Very High Spender",
            SpenderStatus::Investigate => "Investigate",
        }
    }

    pub fn from_label(s: &str) -> Option<SpenderStatus> {
        SpenderStatus::SPEND_BANDS
            .into_iter()
            .chain([SpenderStatus::Investigate])
            .find(|b| b.label() == s)
    }
}

impl fmt::Display for SpenderStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccountClass {
    Standard,
    Premium,
    #[serde(rename = "VIP")]
    Vip,
    UnpaidInvoice,
}

impl AccountClass {
    /// Reporting order: Standard, Unpaid Invoice, Premium, VIP.
    pub const REPORT_ORDER: [AccountClass; 4] = [
        AccountClass::Standard,
        AccountClass::UnpaidInvoice,
        AccountClass::Premium,
        AccountClass::Vip,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AccountClass::Standard => "Standard",
            AccountClass::Premium => "Premium",
            AccountClass::Vip => "VIP",
            AccountClass::UnpaidInvoice => "Unpaid Invoice",
        }
    }

    pub fn from_label(s: &str) -> Option<AccountClass> {
        AccountClass::REPORT_ORDER
            .into_iter()
            .find(|c| c.label() == s)
    }

    pub fn report_labels() -> Vec<String> {
        AccountClass::REPORT_ORDER
            .iter()
            .map(|c| c.label().to_string())
            .collect()
    }
}

impl fmt::Display for AccountClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RulesError {
    #[error("profiles flagged Investigate have no account class")]
    InvestigateNotClassifiable,
}

/// Lower band edges in cents; each band is closed on the left.
const BAND_FLOORS: [(i64, SpenderStatus); 5] = [
    (7000, SpenderStatus::VeryHigh),
    (5000, SpenderStatus::High),
    (2900, SpenderStatus::AboveAverage),
    (1500, SpenderStatus::Average),
    (0, SpenderStatus::Low),
];

pub fn spender_status(avg_invoice: Cents) -> SpenderStatus {
    BAND_FLOORS
        .iter()
        .find(|(floor, _)| avg_invoice.0 >= *floor)
        .map(|(_, s)| *s)
        .unwrap_or(SpenderStatus::Investigate)
}

/// True when at most one invoice is outstanding.
fn paid_up(invoices: &InvoiceAggregates) -> bool {
    i64::from(invoices.paid_count) >= i64::from(invoices.total_invoices) - 1
}

pub fn classify_invoices(
    invoices: &InvoiceAggregates,
    status: SpenderStatus,
) -> Result<AccountClass, RulesError> {
    if status == SpenderStatus::Investigate {
        return Err(RulesError::InvestigateNotClassifiable);
    }
    if !paid_up(invoices) {
        return Ok(AccountClass::UnpaidInvoice);
    }
    Ok(match status {
        SpenderStatus::Low | SpenderStatus::Average => AccountClass::Standard,
        SpenderStatus::AboveAverage | SpenderStatus::High => AccountClass::Premium,
        SpenderStatus::VeryHigh => AccountClass::Vip,
        SpenderStatus::Investigate => unreachable!(),
    })
}

pub fn classify_account(
    profile: &DerivedProfile,
    status: SpenderStatus,
) -> Result<AccountClass, RulesError> {
    classify_invoices(&profile.invoices, status)
}

/// Outcome for one profile. `account_class` is `None` exactly when the
/// status is `Investigate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub spender_status: SpenderStatus,
    pub account_class: Option<AccountClass>,
}

impl Segment {
    pub fn investigate(&self) -> bool {
        self.account_class.is_none()
    }
}

pub fn segment_invoices(invoices: &InvoiceAggregates) -> Segment {
    let status = spender_status(invoices.avg_invoice_rounded());
    Segment {
        spender_status: status,
        account_class: classify_invoices(invoices, status).ok(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub total: usize,
    pub investigate: usize,
    pub account_class: BTreeMap<String, usize>,
    pub spender_status: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    pub summary: SegmentSummary,
}

pub fn segment_dataset<'a, I>(profiles: I) -> Segmentation
where
    I: IntoIterator<Item = &'a DerivedProfile>,
{
    let segments: Vec<Segment> = profiles
        .into_iter()
        .map(|p| segment_invoices(&p.invoices))
        .collect();
    let mut summary = SegmentSummary {
        total: segments.len(),
        ..Default::default()
    };
    for class in AccountClass::REPORT_ORDER {
        summary.account_class.insert(class.label().to_string(), 0);
    }
    for s in &segments {
        *summary
            .spender_status
            .entry(s.spender_status.label().to_string())
            .or_default() += 1;
        match s.account_class {
            Some(c) => {
                *summary
                    .account_class
                    .entry(c.label().to_string())
                    .or_default() += 1
            }
            None => summary.investigate += 1,
        }
    }
    Segmentation { segments, summary }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inv(total_cents: i64, paid: u32, total: u32) -> InvoiceAggregates {
        InvoiceAggregates {
            total_invoice_excl_bf: Cents(total_cents),
            total_invoices: total,
            paid_count: paid,
            declined_count: 0,
            unpaid_count: total - paid,
        }
    }

    #[test]
    fn bands() {
        assert_eq!(spender_status(Cents::from_euros(10)), SpenderStatus::Low);
        assert_eq!(
            spender_status(Cents::from_euros(20)),
            SpenderStatus::Average
        );
        assert_eq!(
            spender_status(Cents::from_euros(29)),
            SpenderStatus::AboveAverage
        );
        assert_eq!(
            spender_status(Cents::from_euros(40)),
            SpenderStatus::AboveAverage
        );
        assert_eq!(spender_status(Cents::from_euros(60)), SpenderStatus::High);
        assert_eq!(
            spender_status(Cents::from_euros(70)),
            SpenderStatus::VeryHigh
        );
        assert_eq!(
            spender_status(Cents::from_euros(80)),
            SpenderStatus::VeryHigh
        );
        assert_eq!(
            spender_status(Cents::from_euros(-5)),
            SpenderStatus::Investigate
        );
        assert_eq!(spender_status(Cents(0)), SpenderStatus::Low);
        assert_eq!(spender_status(Cents(1499)), SpenderStatus::Low);
        assert_eq!(spender_status(Cents(1500)), SpenderStatus::Average);
        assert_eq!(spender_status(Cents(-1)), SpenderStatus::Investigate);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_invoices(&inv(600, 5, 6), SpenderStatus::Average),
            Ok(AccountClass::Standard)
        );
        assert_eq!(
            classify_invoices(&inv(600, 3, 6), SpenderStatus::VeryHigh),
            Ok(AccountClass::UnpaidInvoice)
        );
        assert_eq!(
            classify_invoices(&inv(0, 0, 0), SpenderStatus::Low),
            Ok(AccountClass::Standard)
        );
        assert_eq!(
            classify_invoices(&inv(0, 0, 0), SpenderStatus::Investigate),
            Err(RulesError::InvestigateNotClassifiable)
        );
        assert_eq!(
            classify_invoices(&inv(0, 4, 6), SpenderStatus::High),
            Ok(AccountClass::UnpaidInvoice)
        );
    }

    #[test]
    fn empty_segmentation() {
        let s = segment_dataset(std::iter::empty());
        assert!(s.segments.is_empty());
        assert_eq!(s.summary.total, 0);
    }

    #[test]
    fn labels_roundtrip() {
        for c in AccountClass::REPORT_ORDER {
            assert_eq!(AccountClass::from_label(c.label()), Some(c));
        }
        for s in SpenderStatus::SPEND_BANDS {
            assert_eq!(SpenderStatus::from_label(s.label()), Some(s));
        }
    }

    fn rank(c: AccountClass) -> u8 {
        match c {
            AccountClass::Standard => 0,
            AccountClass::Premium => 1,
            AccountClass::Vip => 2,
            AccountClass::UnpaidInvoice => 3,
        }
    }

    #[test]
    fn exhaustive_grid() {
        for total in 0u32..=16 {
            for paid in 0..=total {
                for avg in (0..12_000).step_by(7) {
                    let agg = inv(avg * i64::from(total), paid, total);
                    let seg = segment_invoices(&agg);
                    assert_ne!(seg.spender_status, SpenderStatus::Investigate);
                    assert!(seg.account_class.is_some());
                }
            }
        }
    }

    proptest! {
        #[test]
        fn monotone_in_spend(total in 1u32..17, a in 0i64..15_000, b in 0i64..15_000) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let paid = total;
            let c_lo = classify_invoices(&inv(lo, paid, total), spender_status(Cents(lo))).unwrap();
            let c_hi = classify_invoices(&inv(hi, paid, total), spender_status(Cents(hi))).unwrap();
            prop_assert!(rank(c_lo) <= rank(c_hi));
        }

        #[test]
        fn unpaid_dominates(total in 2u32..17, gap in 2u32..17, avg in -10_000i64..20_000) {
            let paid = total.saturating_sub(gap);
            prop_assume!(i64::from(paid) < i64::from(total) - 1);
            let status = spender_status(Cents(avg));
            if status != SpenderStatus::Investigate {
                prop_assert_eq!(classify_invoices(&inv(avg, paid, total), status), Ok(AccountClass::UnpaidInvoice));
            }
        }
    }
}
