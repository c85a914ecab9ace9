//! Matrix-valued Kuramoto oscillators.
//!
//! Each oscillator is a real symmetric n×n matrix `M_i`. The ensemble follows
//! the gradient flow of the commutator energy
//!
//! ```text
//! E = ¼ Σ_ij a_ij ‖[M_i, M_j]‖²
//! ```
//!
//! which drives the matrices toward a commuting family. The crate provides
//! the flow itself ([`model`], [`integrator`]), the reduced dynamics of 2×2
//! ensembles in spectral coordinates ([`spectral2`]), the linearization
//! around twisted states ([`twist`]) and around commuting families
//! ([`commstab`]).
//!
//! ```
//! use commuteflow_core::{integrate, Ensemble, IntegratorConfig, SymMat};
//!
//! let a = SymMat::from_rows(&[[1.0, 2.0], [2.0, 3.0]]).unwrap();
//! let b = SymMat::from_rows(&[[2.0, 1.0], [1.0, 5.0]]).unwrap();
//! let ens = Ensemble::new(vec![a, b]).unwrap();
//! let traj = integrate(&ens, ens.mats().to_vec(), &IntegratorConfig::fixed(1e-3, 1.0)).unwrap();
//! assert!(traj.energies.last().unwrap() < &traj.energies[0]);
//! ```

pub mod commstab;
pub mod error;
pub mod integrator;
pub mod model;
pub mod spectral2;
pub mod spectrum;
pub mod symmat;
pub mod twist;

#[cfg(doctest)]
pub mod book;

pub use error::{Error, Result};
pub use integrator::{integrate, step_rk4, Dynamics, IntegratorConfig, Method, OdeState, Trajectory};
pub use model::{all_to_all, pair_norms, Ensemble};
pub use spectral2::{from_spectral, to_spectral, SpectralFlow, SpectralState2};
pub use spectrum::Spectrum;

pub use symmat::{commutator, eigh, hs_inner, nested_commutator, EigenDecomp, Mat, SkewMat, SymMat};
