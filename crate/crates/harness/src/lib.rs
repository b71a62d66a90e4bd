//! Experiment pipelines and result emission for the pseudo-Bayesian
//! random-feature models in the `pbrff` crate.

pub mod config;
pub mod greedy;
pub mod landmarks_table;
pub mod model;
pub mod results;
pub mod synth;
pub mod toy;
