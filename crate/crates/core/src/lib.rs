//! Cooperative multi-agent Q-learning for downlink power allocation in a
//! dense femtocell network.
//!
//! Each femto base station is a tabular Q-learner whose state is the pair of
//! rings it occupies around the macro base station and the macro user, and
//! whose actions are discrete transmit powers. Agents that share a state
//! average the corresponding Q-table row after every iteration.
//!
//! ```no_run
//! use femtoq::{config::ScenarioConfig, coordinator::run_experiment};
//!
//! let trace = run_experiment(&ScenarioConfig::default())?;
//! for s in trace.summaries() {
//!     println!("M={} C_MUE={:.2} Jain={:.3}", s.m, s.c_mue, s.jain);
//! }
//! # Ok::<(), femtoq::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod coordinator;
pub mod error;
pub mod learning;
pub mod oracle;
pub mod output;
pub mod reward;
pub mod topology;

pub use error::{Error, Result};
