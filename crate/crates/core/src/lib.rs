//! Harmonic lattice dynamics with random initial data and their hydrodynamic limits.

pub mod block;
pub mod conservation;
pub mod covariance;
pub mod dispersion;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod lattice;
pub mod limits;
pub mod linalg;
pub mod profile;
pub mod wigner;

pub use block::BlockCov;
pub use dispersion::{
    build_nearest_neighbor, check_conditions, fourier_symbol, spectral_data, Band, Condition, ConditionReport,
    ConditionStatus, InteractionMatrix, SpectralOptions, SpectralPoint, Witness,
};
pub use dynamics::{evolve, evolve_halfspace, green_function, hamiltonian, FieldState, GreenFunction};
pub use error::{Error, Result};
pub use lattice::LatticeBox;
pub use linalg::{CMat, RMat, C64};
pub use profile::{
    covariance_q, gibbs_spectral, product_profile, sample_field, CovarianceProfile, FieldSampler, SpectralDensity,
    TemperatureProfile,
};
pub use covariance::{
    empirical_covariance, halfspace_covariance, propagate_covariance, BoxPolicy, CovarianceMap, EmpiricalEntry,
    ScaledQuery,
};
pub use limits::{
    euler_limit, halfspace_euler, halfspace_ns, higher_correction, limit_covariance, ns_correction, ns_kernel, Branch,
    LimitAnchor, LimitModel,
};
pub use wigner::{
    a_field, transport_residual, wigner_empirical, wigner_exact, wigner_limit, wigner_limit_grid, WignerConvention,
    WignerGrid, WignerQuery, WignerVariant, WignerWindow,
};
pub use conservation::{
    conserved_quantities, continuity_residual, energy_current_limit, energy_density_limit, micro_conserved, micro_energy,
    TestFunction, ThetaQuadrature,
};
