//! CrossGL: a shader and compute-language transpiler.
//!
//! Source programs are parsed into one typed intermediate representation,
//! checked, and printed to GLSL, HLSL, Metal, CUDA, Rust or back to CrossGL.
//! A tree-walking interpreter serves as the equivalence oracle for the
//! conformance harness.

pub mod backend;
pub mod conformance;
pub mod frontend;
pub mod import;
pub mod interp;
pub mod ir;
pub mod semantics;
