//! Seeded synthetic schematics: circuit generation, rendering with pixel-exact
//! golden annotations, and image degradations.

pub mod case;
pub mod circuit;
pub mod degrade;
pub mod font;
pub mod library;
pub mod prng;
pub mod render;

pub use circuit::{generate_circuit, parts_for_seed, Circuit, Part, Step};
pub use degrade::{degrade, Degrade};
pub use render::{render, GoldenSchematic, LayoutError, Wire};

/// Generate and render in one call.
pub fn synthesize(seed: u64, n: usize) -> Result<GoldenSchematic, SynthError> {
    Ok(render(&generate_circuit(seed, n)?)?)
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Count(#[from] circuit::CountError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}
