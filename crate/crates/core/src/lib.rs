//! Følner averages, Besicovitch-type distances, empirical measures and
//! exact transport for symbolic configurations over ℤ^d.
//!
//! Distributions, couplings and the transport solver are generic over
//! [`Scalar`]; the aliases below fix the exact and floating instantiations.

pub mod config;
pub mod constructions;
pub mod error;
pub mod flow;
pub mod group;
pub mod measures;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod transport;

pub use config::{
    default_metric, restrict, shift, AdmissibleMetric, Alphabet, Configuration, Interval, Lattice, Pattern, Symbol,
};
pub use error::{LabError, Result};
pub use group::{make_box_folner, FiniteSubset, FolnerKind, FolnerSequence, GroupPoint, IntegerGroup};
pub use measures::{empirical_measure, prokhorov_distance, MeasureSet, PatternDistribution};
pub use scalar::{rational, Scalar};
pub use transport::{min_cost_transport, CostKind, Coupling, PeriodicOrbitMeasure};

pub type Rational = num_rational::BigRational;
pub type ExactDistribution = PatternDistribution<Rational>;
pub type FloatDistribution = PatternDistribution<f64>;
pub type ExactCoupling = Coupling<Rational>;
