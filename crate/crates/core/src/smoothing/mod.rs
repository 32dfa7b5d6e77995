//! Approximation of finite-cost paths by smooth interior ones: hydrodynamic
//! prepend, convex blending with the hydrodynamic path, forward time
//! mollification and Dirichlet/Neumann resolvent smoothing in space.

mod check;
mod constructions;
mod mollifier;
mod resolvent;

pub use check::{density_check, smooth_chain, DensityReport, DensityRow};
pub use constructions::{
    blend_with_hydro, hold_constant, prepend_hydro, resolvent_smooth, time_mollify,
};
pub use mollifier::MollifierSpec;
pub use resolvent::{
    apply_resolvent, kernel_value, resolvent_kernel, KernelKind, ResolventKernel, MIN_EPSILON,
};
