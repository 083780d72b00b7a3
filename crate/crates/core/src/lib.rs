//! Stochastic-geometry models of automotive radar interference.
//!
//! Streets are Poisson or binomial line processes ([`geometry`]), vehicles a
//! Cox process on them ([`cox`]). [`sector`] holds the literal mutual
//! visibility predicate, [`interference`] its closed-form reduction to one
//! interval per street, and [`detection`] the resulting detection
//! probability, computed both by quadrature and by Monte Carlo.
//! [`cityfit`] fits line-process parameters to street-length curves.

pub mod cityfit;
pub mod cox;
pub mod detection;
pub mod error;
pub mod geometry;
pub mod interference;
pub mod quad;
pub mod rng;
pub mod sector;

pub use cox::{CoxModel, Heading, NetworkRealization, PalmConfig, VehiclePoint};
pub use error::{Error, Result};
pub use geometry::{BlpSpec, LineParam, LineSet, PlpSpec, Point};
pub use interference::{interval_blcp, interval_plcp, InterferenceInterval, IntervalCase};
pub use sector::{Beam, SectorSpec};
