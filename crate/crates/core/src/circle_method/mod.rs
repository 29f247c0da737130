//! Major-arc decomposition of the multiplier of the prime average.

mod bump;
mod kernel;
mod multiplier;
mod series;
mod surface;

pub use bump::{eta, BumpFunction};
pub use kernel::{
    decay_target, kernel_convolution, kernel_decay_target, kernel_term, kernel_triangle_bound, main_kernel, main_kernel_with,
    trivial_a_sum_bound, KernelBudget, MainKernel,
};
pub use multiplier::{
    error_multiplier, main_at_origin, main_multiplier, q_from_log_power, raw_multiplier, ActiveArc, ArcSettings, MajorArcParams,
    MultiplierModel, MultiplierTriple, MultiplierValue,
};
pub use series::{gauss_component, singular_series, PhaseConvention, SingularSeries};
pub use surface::{
    default_theta, orthant_mass, surface_ft, SimplexRule, SurfaceNormalization, SurfaceTransform, DOUBLING_TOLERANCE,
};
