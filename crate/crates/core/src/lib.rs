//! Contamination-aware dynamic ensemble selection for multichannel EMG/MMG
//! gesture recognition.
//!
//! The pipeline has two committees:
//!
//! * a per-channel committee of one-class detectors ([`detection`]) that
//!   flags channels whose features look contaminated, and
//! * a multiclassifier ([`ensemble`]) whose members are random forests
//!   trained on every K-sized channel subset. At prediction time only the
//!   members that see exclusively clean channels vote.
//!
//! Around that core sit a synthetic signal generator ([`signalset`]), five
//! contamination models with exact SNR control ([`contamination`]), DWT
//! features ([`features`]), the base learners ([`learners`]) and the
//! cross-validated evaluation protocol with nonparametric tests
//! ([`evaluation`]).

pub mod contamination;
pub mod detection;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod learners;
pub mod seed;
pub mod signalset;

pub use error::{Error, Result};
