use std::collections::BTreeMap;

use churnseg::features::derive_profile;
use churnseg::ingest::{parse_csv, validate, write_csv, DatasetSchema};
use churnseg::rules::{segment_dataset, AccountClass};
use churnseg::synth::{generate, GeneratorConfig};

fn config(n_rows: usize, seed: u64, noise: f64) -> GeneratorConfig {
    GeneratorConfig {
        n_rows,
        seed,
        label_noise: noise,
        ..Default::default()
    }
}

#[test]
fn class_proportions_follow_the_mix() {
    let cfg = config(10_000, 3, 0.0);
    let (_, truth) = generate(&cfg).unwrap();
    let mut counts: BTreeMap<AccountClass, usize> = BTreeMap::new();
    for r in &truth.rows {
        *counts.entry(r.account_class).or_default() += 1;
    }
    for class in AccountClass::REPORT_ORDER {
        let got = *counts.get(&class).unwrap_or(&0) as f64 / 10_000.0;
        let want = cfg.class_mix.proportion(class);
        assert!(
            (got - want).abs() <= 0.02,
            "{class:?}: {got:.4} vs {want:.4}"
        );
    }
}

#[test]
fn zero_noise_labels_match_the_rules() {
    let cfg = config(5_000, 9, 0.0);
    let (records, truth) = generate(&cfg).unwrap();
    let profiles: Vec<_> = records
        .iter()
        .map(|r| derive_profile(r, cfg.reference_date).unwrap())
        .collect();
    let seg = segment_dataset(&profiles);
    for ((s, t), p) in seg.segments.iter().zip(&truth.rows).zip(&profiles) {
        assert!(!t.perturbed);
        assert_eq!(s.account_class, Some(t.account_class), "{}", t.account_id);
        assert_eq!(s.spender_status, t.spender_status, "{}", t.account_id);
        assert_eq!(p.county, t.county);
        assert_eq!(p.length_of_service_days, t.length_of_service_days);
        assert_eq!(p.invoices.total_invoices, t.total_invoices);
        assert_eq!(p.invoices.paid_count, t.paid_count);
        assert_eq!(p.invoices.declined_count, t.declined_count);
        assert_eq!(p.invoices.unpaid_count, t.unpaid_count);
        assert_eq!(p.invoices.total_invoice_excl_bf, t.total_invoice_excl_bf);
    }
}

#[test]
fn noise_perturbs_roughly_the_requested_fraction() {
    let cfg = config(10_000, 4, 0.1);
    let (records, truth) = generate(&cfg).unwrap();
    let perturbed = truth.rows.iter().filter(|r| r.perturbed).count() as f64 / 10_000.0;
    assert!(
        (perturbed - 0.1).abs() < 0.02,
        "perturbed fraction {perturbed}"
    );
    let profiles: Vec<_> = records
        .iter()
        .map(|r| derive_profile(r, cfg.reference_date).unwrap())
        .collect();
    let seg = segment_dataset(&profiles);
    for (s, t) in seg
        .segments
        .iter()
        .zip(&truth.rows)
        .filter(|(_, t)| !t.perturbed)
    {
        assert_eq!(s.account_class, Some(t.account_class));
    }
}

#[test]
fn generated_records_validate() {
    let (records, _) = generate(&config(3_000, 5, 0.05)).unwrap();
    for r in &records {
        assert!(
            validate(r).is_empty(),
            "{}: {:?}",
            r.account_id,
            validate(r)
        );
    }
}

#[test]
fn small_file_round_trips_through_ingest() {
    let cfg = config(3, 1, 0.0);
    let (records, _) = generate(&cfg).unwrap();
    let mut buf = Vec::new();
    write_csv(&records, cfg.months, &mut buf).unwrap();
    let parsed = parse_csv(buf.as_slice(), &DatasetSchema::raw_customer(cfg.months)).unwrap();
    assert!(parsed.errors.is_empty(), "{:?}", parsed.errors);
    assert_eq!(parsed.records, records);
}

#[test]
fn seeds_change_output_and_repeat_exactly() {
    let a = generate(&config(200, 1, 0.05)).unwrap();
    let b = generate(&config(200, 1, 0.05)).unwrap();
    let c = generate(&config(200, 2, 0.05)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(generate(&config(10, 1, 1.5)).is_err());
    let mut cfg = config(10, 1, 0.0);
    cfg.class_mix.standard = -1.0;
    assert!(generate(&cfg).is_err());
}
