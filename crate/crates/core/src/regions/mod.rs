//! Closed-form stability regions and optimal access probabilities.

mod polyline;
mod pstar;
mod rates;
mod region;

pub use polyline::{boundary_polyline, region_metadata, BoundaryPolyline};
pub use pstar::{
    grid_pstar_oracle, grid_pstar_oracle_secondary_axis, optimal_p, optimal_p_secondary_axis,
    GridOptimum, PStar,
};
pub use rates::{
    dominant1_active_fraction, mu1_dominant1, mu1_dominant2, mu2_dominant1, mu2_dominant2,
    primary_bound_dominant2, primary_success_per_active_slot, secondary_bound_dominant1,
};
pub use region::{
    build_region, AffineConstraint, FrontierPoint, Interval, StabilityRegion, SubregionKind,
    SubregionSpec,
};
