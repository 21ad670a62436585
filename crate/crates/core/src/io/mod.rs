//! File formats, images, experiment configs and the bench runner.

mod bench;
mod config;
mod container;
mod image;

pub use bench::{run_bench, BenchReport, BenchRow};
pub use config::{BenchSpec, ExperimentConfig, NoiseBlock, Outputs};
pub use container::{
    read_cube, read_cube_from, read_volume, read_volume_from, write_cube, write_cube_to, write_volume, write_volume_to,
    CUBE_MAGIC, FORMAT_VERSION, VOLUME_MAGIC,
};
pub use image::{decode_pfm, encode_pfm, encode_pgm, read_pfm, write_image, ImageFormat};
