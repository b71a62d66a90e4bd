//! Pseudo-Bayesian learning over random Fourier features.
//!
//! A shift-invariant kernel's Fourier transform is treated as a prior
//! distribution over trigonometric hypotheses `h_ω(δ) = cos(ω·δ)`.
//! Sampled hypotheses are reweighted with a closed-form Gibbs
//! pseudo-posterior that minimizes PAC-Bayes kernel-alignment bounds.
//! Two learning strategies are built on top of this:
//!
//! - **Landmarks**: learn one posterior per selected landmark point and
//!   map inputs to the vector of learned similarities ψ(x).
//! - **Greedy kernel learning**: compute the pseudo-posterior over a
//!   large frequency pool, resample a small feature set from it, and
//!   train a linear classifier on the resulting random feature map.
//!
//! Modules follow the pipeline order: [`data`] ingestion, [`fourier`]
//! frequency sampling and feature maps, [`loss`] alignment losses,
//! [`posterior`] Gibbs reweighting, [`bounds`] PAC-Bayes bound values,
//! [`landmarks`] similarity representations, and [`svm`] the linear
//! classifier consumed by every pipeline.

pub mod bounds;
pub mod data;
pub mod error;
pub mod fourier;
pub mod landmarks;
pub mod loss;
pub mod posterior;
pub mod svm;

pub use error::{Error, Result};
