//! Finsler metrics on tori built from convex fiber bodies, with the
//! machinery around them: closed-geodesic length minimization per winding
//! class, radial Hamiltonian flows with exact action bookkeeping, the convex
//! quadratic smoothing of F², and BPS-capacity evaluation.

pub mod bodies;
pub mod error;
pub mod fourier;
pub mod geodesics;
pub mod metric;
pub mod numeric;
pub mod profile;
pub mod smoothing;
pub mod simplex;

pub use bodies::{Cone, ConvexBody, Halfspace, SupportValue, UnboundedReport, CERTIFICATION_BAR};
pub use error::{Error, Result};
pub use fourier::{FourierSeries, OneForm};
pub use metric::{loop_energy, loop_length, DiscreteLoop, FinslerMetric, MetricSpec};
