//! Linear coding over partially connected wired interference networks whose
//! topology alternates between connectivity states.
//!
//! The crate is organized bottom-up:
//!
//! - [`field`]: GF(p) arithmetic and dense elimination.
//! - [`topology`]: connectivity states, state fractions, sequences and
//!   channel coefficient realizations.
//! - [`scheme`]: block-linear coding schemes, the joint schemes and the
//!   time-sharing schedules, plus the scheme file format.
//! - [`capacity`]: closed-form capacities and outer bounds.
//! - [`verifier`]: zero-error decodability checks over one, all, or sampled
//!   realizations.
//! - [`oracle`]: exhaustive search for the best linear zero-error rate and
//!   reconstruction of three-user examples.

pub mod capacity;
pub mod field;
pub mod oracle;
pub mod rational;
pub mod scheme;
pub mod topology;
pub mod verifier;

pub use field::{Field, FieldElement, FieldError, Matrix};
pub use rational::{RateValue, Rational};
pub use scheme::{LinearScheme, MessageConfig, MessageMode, SchemeError};
pub use topology::{ChannelRealization, StateFractions, StateSequence, TopologyState, TwoUserState};
