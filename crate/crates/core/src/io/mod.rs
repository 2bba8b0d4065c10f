//! Job files, result documents and plots.

pub mod job;
pub mod svg;
