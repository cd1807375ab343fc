//! Directed region-connection relations over axis-aligned rectangles, CNF
//! class specifications over them, and inference of such specifications from
//! object-placement demonstrations.

pub mod evaluator;
pub mod formula;
pub mod geometry;
pub mod inference;
pub mod io;
pub mod study;
pub mod synthesizer;
