use std::ffi::{CStr, CString};
use std::ptr;

use churnseg::model::LearnerSpec;
use churnseg::table::{Attribute, Dataset, Header, Value};
use churnseg_ffi::*;

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    churnseg_string_free(s);
    out
}

#[test]
fn scalar_derivations() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(churnseg_age_group(30, true, &mut s), ChurnsegStatus::Ok);
        assert_eq!(take(s), "25-44");
        assert_eq!(churnseg_age_group(0, false, &mut s), ChurnsegStatus::Ok);
        assert_eq!(take(s), "Unknown");

        let addr = CString::new("12 Main Street, Co. Galway").unwrap();
        assert_eq!(
            churnseg_derive_county(addr.as_ptr(), &mut s),
            ChurnsegStatus::Ok
        );
        assert_eq!(take(s), "Galway");
        assert_eq!(
            churnseg_derive_county(ptr::null(), &mut s),
            ChurnsegStatus::Ok
        );
        assert_eq!(take(s), "#N/A");
    }
}

#[test]
fn segmentation() {
    let mut status = ChurnsegSpenderStatus::Low;
    let mut class = ChurnsegAccountClass::None;
    unsafe {
        assert_eq!(
            churnseg_segment(7000, 3, 3, &mut status, &mut class),
            ChurnsegStatus::Ok
        );
        assert_eq!(
            (status, class),
            (
                ChurnsegSpenderStatus::Average,
                ChurnsegAccountClass::Standard
            )
        );
        assert_eq!(
            churnseg_segment(7000, 3, 1, &mut status, &mut class),
            ChurnsegStatus::Ok
        );
        assert_eq!(class, ChurnsegAccountClass::UnpaidInvoice);
        assert_eq!(
            churnseg_segment(-300, 3, 3, &mut status, &mut class),
            ChurnsegStatus::Ok
        );
        assert_eq!(
            (status, class),
            (
                ChurnsegSpenderStatus::Investigate,
                ChurnsegAccountClass::None
            )
        );
        assert_eq!(
            churnseg_segment(100, 1, 2, &mut status, &mut class),
            ChurnsegStatus::Data
        );
        assert!(!churnseg_last_error().is_null());
        assert_eq!(
            churnseg_segment(0, 0, 0, ptr::null_mut(), &mut class),
            ChurnsegStatus::NullPointer
        );
    }
}

#[test]
fn model_handle_predicts_like_the_library() {
    let header = Header {
        attributes: vec![Attribute::numeric("x"), Attribute::nominal("c", ["p", "q"])],
        class_name: "k".into(),
        classes: vec!["a".into(), "b".into()],
    };
    let rows: Vec<Vec<Value>> = (0..30)
        .map(|i| vec![Value::Num(f64::from(i)), Value::Nom((i % 2) as u32)])
        .collect();
    let labels = (0..30).map(|i| usize::from(i >= 15)).collect();
    let data = Dataset::new(header, rows, labels).unwrap();
    for spec in ["c45", "nb"] {
        let model = spec.parse::<LearnerSpec>().unwrap().fit(&data).unwrap();
        let json = CString::new(model.to_json().unwrap()).unwrap();
        unsafe {
            let mut handle = ptr::null_mut();
            assert_eq!(
                churnseg_model_load(json.as_ptr(), &mut handle),
                ChurnsegStatus::Ok
            );
            assert_eq!(churnseg_model_num_classes(handle), 2);
            let mut name = ptr::null_mut();
            assert_eq!(
                churnseg_model_class_name(handle, 1, &mut name),
                ChurnsegStatus::Ok
            );
            assert_eq!(take(name), "b");

            let header = CString::new("id,c,x").unwrap();
            for i in 0..30 {
                let row = CString::new(format!("r{i},{},{i}", if i % 2 == 0 { "p" } else { "q" }))
                    .unwrap();
                let mut class = usize::MAX;
                let mut probs = [0.0; 2];
                let st = churnseg_model_predict_csv(
                    handle,
                    header.as_ptr(),
                    row.as_ptr(),
                    &mut class,
                    probs.as_mut_ptr(),
                    2,
                );
                assert_eq!(st, ChurnsegStatus::Ok);
                let (want, dist) = model.predict(&data.rows[i]);
                assert_eq!(class, want);
                assert_eq!(probs.to_vec(), dist);
            }
            let short = CString::new("r1,p").unwrap();
            let mut class = 0;
            assert_eq!(
                churnseg_model_predict_csv(
                    handle,
                    header.as_ptr(),
                    short.as_ptr(),
                    &mut class,
                    ptr::null_mut(),
                    0
                ),
                ChurnsegStatus::Data
            );
            churnseg_model_free(handle);
        }
    }
}

#[test]
fn bad_model_json_is_a_config_error() {
    let junk = CString::new("{\"format\":\"x\",\"version\":1,\"model\":{}}").unwrap();
    let mut handle = ptr::null_mut();
    unsafe {
        let st = churnseg_model_load(junk.as_ptr(), &mut handle);
        assert_ne!(st, ChurnsegStatus::Ok);
        assert!(handle.is_null());
        let msg = CStr::from_ptr(churnseg_last_error()).to_str().unwrap();
        assert!(!msg.is_empty());
    }
}

#[test]
fn report_from_matrix() {
    let counts: [u64; 4] = [40, 10, 5, 45];
    let a = CString::new("yes").unwrap();
    let b = CString::new("no").unwrap();
    let names = [a.as_ptr(), b.as_ptr()];
    unsafe {
        let mut report = ptr::null_mut();
        assert_eq!(
            churnseg_report_from_matrix(counts.as_ptr(), 2, names.as_ptr(), &mut report),
            ChurnsegStatus::Ok
        );
        assert!((churnseg_report_accuracy_pct(report) - 85.0).abs() < 1e-12);
        // p_o = 0.85, p_e = 0.5*0.45 + 0.5*0.55 = 0.5
        assert!((churnseg_report_kappa(report) - 0.7).abs() < 1e-12);
        let mut m = ChurnsegClassMetrics::default();
        assert_eq!(
            churnseg_report_class_metrics(report, 0, &mut m),
            ChurnsegStatus::Ok
        );
        assert!((m.precision - 40.0 / 45.0).abs() < 1e-12);
        assert!((m.recall - 0.8).abs() < 1e-12);
        assert_eq!(
            churnseg_report_class_metrics(report, 2, &mut m),
            ChurnsegStatus::Ok
        );
        assert_eq!(
            churnseg_report_class_metrics(report, 3, &mut m),
            ChurnsegStatus::Data
        );
        let mut text = ptr::null_mut();
        assert_eq!(churnseg_report_text(report, &mut text), ChurnsegStatus::Ok);
        assert!(take(text).contains("=== Confusion Matrix ==="));
        churnseg_report_free(report);
        assert!(churnseg_report_kappa(ptr::null()).is_nan());
    }
}

#[test]
fn synth_csv_is_deterministic() {
    unsafe {
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(churnseg_synth_csv(25, 4, 0.0, &mut a), ChurnsegStatus::Ok);
        assert_eq!(churnseg_synth_csv(25, 4, 0.0, &mut b), ChurnsegStatus::Ok);
        let (a, b) = (take(a), take(b));
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 26);
        let mut c = ptr::null_mut();
        assert_eq!(
            churnseg_synth_csv(5, 1, 1.5, &mut c),
            ChurnsegStatus::Config
        );
    }
}
