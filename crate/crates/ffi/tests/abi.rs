use std::ffi::{CStr, CString};
use std::ptr;

use bayeslogit_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bl_last_error_message()) }.to_string_lossy().into_owned()
}

fn two_class_dataset() -> *mut BlDataset {
    let features = [-2.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.5, 3.0];
    let labels = [1u32, 1, 1, 1, 2, 2, 2, 2];
    let mut ds = ptr::null_mut();
    let st = unsafe { bl_dataset_new(features.as_ptr(), labels.as_ptr(), 8, 1, 2, &mut ds) };
    assert_eq!(st, BlStatus::Ok);
    ds
}

#[test]
fn dataset_accessors_and_null_handling() {
    let ds = two_class_dataset();
    unsafe {
        assert_eq!(bl_dataset_len(ds), 8);
        assert_eq!(bl_dataset_dim(ds), 1);
        assert_eq!(bl_dataset_num_classes(ds), 2);
        assert_eq!(bl_dataset_len(ptr::null()), 0);
        bl_dataset_free(ds);
        bl_dataset_free(ptr::null_mut());
    }
    let st = unsafe { bl_dataset_new(ptr::null(), ptr::null(), 0, 1, 2, ptr::null_mut()) };
    assert_eq!(st, BlStatus::NullPointer);
    assert!(!last_error().is_empty());
}

#[test]
fn invalid_label_reports_error_message() {
    let features = [0.0, 1.0];
    let labels = [1u32, 3];
    let mut ds = ptr::null_mut();
    let st = unsafe { bl_dataset_new(features.as_ptr(), labels.as_ptr(), 2, 1, 2, &mut ds) };
    assert_ne!(st, BlStatus::Ok);
    assert!(ds.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn single_class_fit_is_empty_class() {
    let features = [0.0, 1.0, 2.0];
    let labels = [1u32, 1, 1];
    let mut ds = ptr::null_mut();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(bl_dataset_new(features.as_ptr(), labels.as_ptr(), 3, 1, 1, &mut ds), BlStatus::Ok);
        let st = bl_generative_fit_gaussian(ds, BlVarianceEstimator::Population, &mut model);
        assert_eq!(st, BlStatus::EmptyClass);
        assert!(last_error().contains("EmptyClass"));
        bl_dataset_free(ds);
    }
}

#[test]
fn generative_posterior_routes_agree_and_roundtrip() {
    let ds = two_class_dataset();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(bl_generative_fit_gaussian(ds, BlVarianceEstimator::Population, &mut model), BlStatus::Ok);
        assert_eq!(bl_generative_num_classes(model), 2);
        for x in [-3.0, 0.0, 0.7, 4.0] {
            let mut probs = [0.0; 2];
            assert_eq!(bl_generative_posterior(model, &x, 1, probs.as_mut_ptr(), 2), BlStatus::Ok);
            let mut p0 = 0.0;
            assert_eq!(bl_generative_posterior_logistic_form(model, 0, &x, 1, &mut p0), BlStatus::Ok);
            assert!((probs[0] - p0).abs() < 1e-12);
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let mut probs = [0.0; 3];
        assert_eq!(bl_generative_posterior(model, &0.0, 1, probs.as_mut_ptr(), 3), BlStatus::DimensionMismatch);

        let (mut alpha, mut beta, mut gamma) = (0.0, [0.0; 1], [0.0; 1]);
        let st = bl_generative_discriminant(model, 0, 1, &mut alpha, beta.as_mut_ptr(), 1, gamma.as_mut_ptr(), 1);
        assert_eq!(st, BlStatus::Ok);
        let x = 0.7;
        let mut p0 = 0.0;
        bl_generative_posterior_logistic_form(model, 0, &x, 1, &mut p0);
        let z = alpha + beta[0] * x + gamma[0] * x * x;
        assert!((1.0 / (1.0 + (-z).exp()) - p0).abs() < 1e-12);

        let text = bl_generative_to_text(model);
        let mut back = ptr::null_mut();
        assert_eq!(bl_generative_from_text(text, &mut back), BlStatus::Ok);
        let again = bl_generative_to_text(back);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(again));
        bl_string_free(text);
        bl_string_free(again);
        bl_generative_free(back);
        bl_generative_free(model);
        bl_dataset_free(ds);
    }
}

#[test]
fn uniform_outside_support_is_undefined() {
    let features = [0.0, 2.0, 1.0, 3.0];
    let labels = [1u32, 1, 2, 2];
    let mut ds = ptr::null_mut();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(bl_dataset_new(features.as_ptr(), labels.as_ptr(), 4, 1, 2, &mut ds), BlStatus::Ok);
        assert_eq!(bl_generative_fit_uniform(ds, &mut model), BlStatus::Ok);
        let mut probs = [0.0; 2];
        assert_eq!(bl_generative_posterior(model, &-1.0, 1, probs.as_mut_ptr(), 2), BlStatus::UndefinedPosterior);
        assert_eq!(bl_generative_posterior(model, &0.5, 1, probs.as_mut_ptr(), 2), BlStatus::Ok);
        assert_eq!(probs, [1.0, 0.0]);
        bl_generative_free(model);
        bl_dataset_free(ds);
    }
}

#[test]
fn logit_train_predict_and_roundtrip() {
    let ds = two_class_dataset();
    let mut model = ptr::null_mut();
    let mut report = BlTrainReport::default();
    let cfg = bl_train_config_default();
    unsafe {
        let st = bl_logit_train(ds, BlFeatureKind::Quadratic, &cfg, &mut model, &mut report);
        assert_eq!(st, BlStatus::Ok, "{}", last_error());
        assert!(report.iterations > 0);
        assert_eq!(bl_logit_num_classes(model), 2);
        assert_eq!(bl_logit_weight_len(model), 3);
        let mut w = [0.0; 3];
        assert_eq!(bl_logit_weights(model, 0, w.as_mut_ptr(), 3), BlStatus::Ok);
        assert!(w.iter().all(|v| v.is_finite()));
        let mut probs = [0.0; 2];
        assert_eq!(bl_logit_predict_proba(model, &0.0, 1, probs.as_mut_ptr(), 2), BlStatus::Ok);
        assert!((probs[0] + probs[1] - 1.0).abs() < 1e-12);

        let text = bl_logit_to_text(model);
        let mut back = ptr::null_mut();
        assert_eq!(bl_logit_from_text(text, &mut back), BlStatus::Ok);
        let mut probs2 = [0.0; 2];
        bl_logit_predict_proba(back, &0.0, 1, probs2.as_mut_ptr(), 2);
        assert_eq!(probs, probs2);

        let mut wrong = ptr::null_mut();
        assert_eq!(bl_generative_from_text(text, &mut wrong), BlStatus::InvalidArgument);
        bl_string_free(text);
        bl_logit_free(back);
        bl_logit_free(model);
        bl_dataset_free(ds);
    }
}

#[test]
fn compare_exact_mode() {
    let spec = CString::new(
        "kind = \"univariate_gaussian\"\nmeans = [0.0, 1.0]\nvariances = [1.0, 4.0]\nclass_sizes = [100, 100]\nseed = 1\n",
    )
    .unwrap();
    let mut summary = BlCompareSummary::default();
    let mut text = ptr::null_mut();
    unsafe {
        let st = bl_compare(spec.as_ptr(), BlCompareMode::Exact, 200, &mut summary, &mut text);
        assert_eq!(st, BlStatus::Ok, "{}", last_error());
        assert!(summary.max_abs_prob_diff < 1e-10);
        assert!(CStr::from_ptr(text).to_string_lossy().contains("mode: exact"));
        bl_string_free(text);
    }
    let bad = CString::new("kind = \"uniform_pair\"\nintervals = [[2.0, 2.5], [1.0, 3.0]]\nclass_sizes = [5, 5]\n").unwrap();
    let st = unsafe { bl_compare(bad.as_ptr(), BlCompareMode::Estimated, 10, &mut summary, ptr::null_mut()) };
    assert_eq!(st, BlStatus::InvalidArgument);
}
