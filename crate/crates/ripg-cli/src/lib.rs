//! Command-line front end of the ripg library: problem generation, solver
//! runs, reference sweeps, bound checks and byte-exact file formats.

pub mod commands;
pub mod formats;
pub mod manifest;
