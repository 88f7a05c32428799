//! Periodic delayed reaction-diffusion systems: model construction, the
//! period map, and the search for periodic orbits.

mod model;
mod orbit;

pub use model::{build_delayed_logistic, build_delayed_logistic_unchecked, DelayedLogistic, RdModel};
pub use orbit::{
    boundedness_probe, distinct_orbits, find_periodic, find_periodic_from_seeds, find_periodic_weighted,
    orbit_residual, period_map, verify_periodicity, BoundednessReport, PeriodicOrbitResult,
    PeriodicityReport,
};
