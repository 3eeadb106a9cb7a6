//! Schematic image to SPICE netlist extraction.
//!
//! The pipeline runs raster decoding and binarization, component detection,
//! wire connectivity, text binding and netlist emission. A seeded synthetic
//! corpus and an evaluation harness close the loop.

pub mod assist;
pub mod config;
pub mod connect;
pub mod detect;
pub mod eval;
pub mod flags;
pub mod geom;
pub mod netlist;
pub mod pipeline;
pub mod raster;
pub mod synth;
pub mod text;
