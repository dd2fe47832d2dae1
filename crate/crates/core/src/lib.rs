//! Spiking cerebellar feed-forward control of a one-joint arm driven by an
//! antagonistic pair of McKibben pneumatic muscles.
//!
//! The crate is organized bottom-up:
//!
//! - [`snn`]: fixed-step leaky integrate-and-fire populations, delta-current
//!   synapses and rate encoders/decoders.
//! - [`plasticity`]: granule-driven potentiation and olive-gated,
//!   kernel-weighted depression on the granule→Purkinje synapses.
//! - [`cerebellum`]: the five-layer network (MF, GR, PK, IO, DCN), its sensory
//!   encoders and the motor decoder.
//! - [`plant`]: muscle force law, valve pressure dynamics and the arm integrator.
//! - [`control`]: the cascade controller (PD + spiking feed-forward, bang-bang
//!   pressure loop).
//! - [`harness`]: configuration, experiment runner, metrics, CSV/SVG output and
//!   strategy comparison.
//! - [`batch`]: data-parallel execution of independent runs (rayon when the
//!   `parallel` feature is enabled, sequential otherwise).

// negated comparisons in validation also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod cerebellum;
pub mod control;
mod error;
pub mod harness;
pub mod plant;
pub mod plasticity;
pub mod snn;

pub use error::{Error, Result};
