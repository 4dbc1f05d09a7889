//! Datasets, matrices and file formats.

mod dataset;
mod io;
pub(crate) mod matrix;
mod synth;

pub use dataset::{Dataset, LabelTriple, Labels, Pool};
pub use io::{load_csv_dataset, load_matrix, read_matrix, store_matrix, store_matrix_f32, write_matrix};
pub use matrix::{euclidean_distance, squared_distance, Matrix};
pub use synth::{synth_gaussian_mixture, GaussianMixture, MultilabelMixture};
