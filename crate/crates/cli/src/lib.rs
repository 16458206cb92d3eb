//! Support library for the `semtrans` command line: static rule checking,
//! the latency bench harness, and seeded fixture generation.

pub mod bench;
pub mod check;
pub mod synth;
