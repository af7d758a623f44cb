//! Slot-level simulator for XR video downlink scheduling.
//!
//! Start from [`scenario::build_episode`] to get an episode, then run it with a
//! priority policy through [`simcore::Simulator`] or step it one decision at a
//! time through [`rlenv::XrEnv`]. The guide in `book/` covers the model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod experiments;
pub mod neuralnet;
pub mod rlenv;
pub mod scenario;
pub mod schedulers;
pub mod seeding;
pub mod simcore;
pub mod traffic;
pub mod trainer;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/traffic.md")]
mod book_traffic {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/channel.md")]
mod book_channel {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scheduling.md")]
mod book_scheduling {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/environment.md")]
mod book_environment {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/learning.md")]
mod book_learning {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
mod book_experiments {}
