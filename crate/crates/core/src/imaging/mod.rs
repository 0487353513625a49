//! Rasters, pyramid decomposition and image I/O.

mod io;
mod pyramid;
mod raster;

pub use io::{load_image, load_mask, save_image, save_mask};
pub use pyramid::{burt_kernel, build_pyramid, reduce, reduce_with, upsample_mask, Pyramid, BURT_A, MAX_LEVELS};
pub use raster::{BinaryMask, GrayImage};
