//! Fixed inputs shared by the benchmarks.

use setar_core::dgp::{gen_chaotic_logistic, LogisticParams};
use setar_core::{create_input_matrix, EmbeddedMatrix, SeriesCollection};

/// Noisy chaotic logistic collection and its lag embedding.
pub fn logistic_fixture(n_series: usize, length: usize, lag: usize) -> (SeriesCollection, EmbeddedMatrix) {
    let params = LogisticParams { noise_sd: 0.02, ..Default::default() };
    let data = gen_chaotic_logistic(n_series, length, 7, params).expect("simulate");
    let matrix = create_input_matrix(&data, lag, None).expect("embed");
    (data, matrix)
}
