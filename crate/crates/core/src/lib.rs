//! Numerical laboratory for asymptotic scattering in the relativistic
//! Vlasov–Maxwell system (Gaussian units, `c = 1`).
//!
//! The crate is `no_std` with `alloc`. Everything that touches the file
//! system, configuration or the command line lives in the `modscat`
//! companion crate.
//!
//! Module map:
//!
//! * [`kinematics`]: species, energies, the `hat`/`check` velocity maps.
//! * [`lorentz`]: the restricted Lorentz group `SO₀(3,1)`.
//! * [`faraday`]: Faraday tensor packaging of `(E, B)` and its transformation law.
//! * [`fieldmodels`]: prescribed fields, self-similar asymptotic profiles,
//!   the analytic Coulomb pair.
//! * [`transport`]: characteristics, integrators, worldlines, drift fits,
//!   boosted slices.
//! * [`maxwell`]: Yee grid, charge-conserving deposition, constraint monitors.
//! * [`asymptotics`]: `Q∞` and `𝕃` profiles, the Gauss identity, witness
//!   search, scattering classifier, transformation laws.
//! * [`quadrature`]: Gauss–Legendre and product spherical rules.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;

pub mod asymptotics;
pub mod error;
pub mod faraday;
pub mod fieldmodels;
pub mod kinematics;
pub mod lorentz;
pub mod math;
pub mod maxwell;
pub mod quadrature;
pub mod transport;

pub use error::{Error, Result};
pub use math::{Mat3, Mat4, Vec3};
