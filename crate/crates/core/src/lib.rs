pub mod numeric;
pub mod parallel;
pub mod raster;
pub mod tin;
pub mod vector_io;
pub mod morphometry;
pub mod zonal;
pub mod profile;
pub mod hydro;
pub mod synthetic;
