//! Forward-model builders, the synthetic noise model and matrix files.

pub mod annulus;
pub mod heat;
pub mod io;
pub mod noise;

pub use annulus::{build_annulus_matrix, AnnulusMatrix, AnnulusModelConfig, AnnulusRole};
pub use heat::{build_heat_matrix, heat_data_from_function, HeatModelConfig};
pub use io::{load_matrix, parse_matrix, save_matrix};
pub use noise::{add_noise, NoisyData, NoiseSpec};
