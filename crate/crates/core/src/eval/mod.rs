//! Downstream evaluation of representations and raw series.

pub mod kmeans;
pub mod linreg;
pub mod neighbors;
pub mod protocol;
pub mod svm;

pub use kmeans::{kmeans, kmeans_with, KMeansOptions, KMeansResult};
pub use linreg::{linreg_mse, linreg_train, stable_learning_rate, RegressionProbe};
pub use neighbors::{dtw_classify, dtw_distance, dtw_distance_1d, knn1_classify};
pub use protocol::{
    accuracy, c_grid, fit_svm, sparse_label_protocol, stratified_folds, svm_cross_validate_c, ReportRow,
    REPORT_HEADER,
};
pub use svm::{
    default_gamma, rbf_kernel, svm_train, svm_train_binary, svm_train_with, BinarySolution, SmoOptions,
    SvmClassifier, SvmModel, C_INFINITE,
};
