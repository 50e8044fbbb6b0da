//! Clustering of scalar-field ensembles through their extremum persistence
//! diagrams.
//!
//! The pipeline is: [`persistence::compute_diagram`] turns each member of an
//! [`Ensemble`] into a [`PersistenceDiagram`]; [`clustering::cluster`] runs
//! k-means in diagram space under the Wasserstein metric of [`metric`], using
//! the Fréchet means of [`barycenter`] as centroids; [`selection::select_k`]
//! scores a sweep over k with AIC and BIC and picks the minimizer.
//!
//! All long-running operations accept a [`TimeBudget`] and return their best
//! result so far when it expires.

pub mod assignment;
pub mod barycenter;
pub mod budget;
pub mod clustering;
mod error;
pub mod field;
pub mod io;
pub mod metric;
pub mod persistence;
pub mod selection;
pub mod synth;

pub use barycenter::{barycenter, BarycenterResult};
pub use budget::TimeBudget;
pub use clustering::{cluster, sweep, ClusteringResult};
pub use error::{Error, Result};
pub use field::{Ensemble, ScalarField};
pub use metric::{pointwise_distance, wasserstein_distance, DiagramAssignment, LiftingParams};
pub use persistence::{compute_diagram, prune_by_persistence, DiagramPoint, Family, PairClass, PersistenceDiagram};
pub use selection::{select_k, ScoreReport};
