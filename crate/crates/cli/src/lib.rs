//! Library side of the `nlogflow` command: verb implementations and the
//! report they produce, usable without spawning the binary.

pub mod commands;
pub mod report;
