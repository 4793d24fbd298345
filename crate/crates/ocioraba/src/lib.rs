//! Error-free asynchronous Byzantine agreement at desk scale.
//!
//! The stack agrees on an ell-bit value among n nodes of which up to t may
//! be Byzantine (n >= 3t+1): inputs are erasure-coded, each node reliably
//! broadcasts its own share, and nodes agree on which shares matched their
//! own encoding — either with n parallel binary-agreement instances or with
//! a single partial-vector agreement built from an indicator-dispersal layer
//! and biased one-shot votes. Everything runs on pure state machines driven
//! by a deterministic discrete-event simulator with adversarial scheduling,
//! Byzantine behaviors, and per-protocol communication accounting.
//!
//! Start with [`sim::run_scenario`] for one scenario, or the `examples/`
//! directory for one runnable walkthrough per capability.

pub mod core;

pub mod codec;

pub mod coin;

pub mod rbc;

pub mod abba;

pub mod abbba;

pub mod acidd;

pub mod apva;

pub mod aba;

pub mod node;

pub mod net;

pub mod sim;

pub mod suites;
