//! Quantitative measures: agreement with rationales, minimality, bootstrap
//! significance, inter-annotator agreement and majority voting.

mod annotations;
mod bootstrap;
mod kappa;
mod prf;

pub use annotations::{
    annotation_accuracy, annotator_agreement, judged, label_counts, majority_by_instance,
    majority_vote, AnnotationRecord, Condition, Label, LabelMetric, Scope, Sublabel, Vote,
};
pub use bootstrap::{
    bootstrap_pvalue, bootstrap_test, bootstrap_test_seq, mean, BootstrapResult, DEFAULT_RESAMPLES,
};
pub use kappa::{cohen_kappa, mean_pairwise_kappa, Kappa};
pub use prf::{
    evaluate, instance_counts, minimality, token_prf, AverageMode, Counts, EvalReport, Prf,
};
