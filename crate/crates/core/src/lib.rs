//! Energy-aware approximate arithmetic for explainability workloads.
//!
//! The crate is organised around a single primitive: a software model of a
//! configurable approximate bfloat16 multiplier ([`apxnum`]). Twelve accuracy
//! levels trade result quality against a declared per-multiply energy cost,
//! and every approximate multiply is charged to an [`apxnum::EnergyLedger`].
//!
//! On top of the multiplier sit:
//!
//! * [`apxfft`] — a radix-2 FFT whose butterfly multiplies run at a
//!   per-stage approximation level, plus an exact double-precision FFT and a
//!   PSNR meter for quality audits;
//! * [`parexec`] — a row-partitioned thread-pool runner that applies an FFT,
//!   inverse FFT, or approximate mat-vec to each row of a matrix and
//!   transposes the result, so two passes give a 2-D transform;
//! * [`tinymodel`] — a minimal dense/conv inference stack with analytic
//!   input gradients, used as the subject of the explanation methods;
//! * [`distill`], [`ig`], [`shapley`] — three attribution methods (response
//!   distillation via FFT deconvolution, integrated gradients, exact Shapley
//!   values) whose inner products run on the approximate multiplier;
//! * [`levelopt`] — exhaustive and greedy searches for the cheapest
//!   per-stage level schedule that still meets a PSNR/energy target.
//!
//! Supporting modules: [`config`] (JSON run configuration), [`io`] (CSV and
//! PGM serialisation), [`rng`] (seeded, stream-split random data), and
//! [`fixtures`] (small deterministic models for tests and demos).

pub mod apxfft;
pub mod apxnum;
pub mod config;
pub mod distill;
mod error;
pub mod fixtures;
pub mod ig;
pub mod io;
pub mod levelopt;
pub mod parexec;
pub mod rng;
pub mod shapley;
pub mod tinymodel;

pub use error::{Error, Result};
