//! Congestion pricing by online driver-route matching with anticipatory tolls.
//!
//! Drivers arriving online are matched to one of several parallel routes by
//! projected utility (or route cost); route tolls follow predicted flow and
//! are split among travelling drivers once a route is congested.
//!
//! [`verification`] holds the property checkers and the RANKING ratio
//! harness. [`auction`] implements the two-driver auction baseline.

pub mod auction;
pub mod bipartite;
pub mod error;
pub mod matching;
pub mod model;
pub mod predictor;
pub mod sim;
pub mod toll;
pub mod verification;

pub use error::{Error, Result};
