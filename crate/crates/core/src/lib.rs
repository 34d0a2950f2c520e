//! Mean-value machinery for the classical, Ornstein-Uhlenbeck (OU) and
//! Hermite heat equations
//!
//! ```text
//!     ∂t u = Δu,      ∂t U = (Δ − 2x·∇)U,      ∂t V = (Δ − |x|²)V
//! ```
//!
//! The three equations are linked by exact transforms: composition with the
//! diffeomorphism `φ(x,t) = (x e^{−2t}, (1 − e^{−4t})/4)` maps heat solutions
//! to OU solutions, and multiplication by `e^{−nt − |x|²/2}` maps OU solutions
//! to Hermite solutions. Pulling the classical heat balls back through `φ`
//! gives the balls `Ξ(x,t;r)` and kernels `K^OU`, `K^H` on which the OU and
//! Hermite mean-value formulas hold.
//!
//! Modules:
//!
//! * [`transference`]: `φ`, `φ⁻¹`, the field transforms and finite-difference
//!   operator residuals.
//! * [`geometry`]: heat balls `Ω`, `Ξ`, `Ω_m`, Hermite cylinders `Γ_R`, and
//!   strictly-decreasing-time reachability on rasterized domains.
//! * [`kernels`]: fundamental solution and the mean-value kernels, including
//!   the bounded descent kernels.
//! * [`quadrature`]: mean-value integrals (tensor Gauss rules for `n ≤ 2`,
//!   Monte Carlo in any dimension), residuals and the sub/super classifier.
//! * [`solvers`]: closed-form catalog and theta-scheme finite differences.
//! * [`growth`]: Täcklind growth-class diagnostics.
//! * [`verify`]: maximum principles, infinite propagation, Harnack quotients.

pub mod error;
pub mod field;
pub mod geometry;
pub mod growth;
pub mod kernels;
pub mod point;
pub mod quadrature;
pub mod solvers;
pub mod transference;
pub mod verify;

mod stats;

pub use error::{Error, Result};
pub use field::{Equation, FieldKind, ScalarField};
pub use geometry::{BallFamily, DomainBox, HeatBall, Raster};
pub use kernels::{KernelFamily, KernelSpec};
pub use point::SpaceTimePoint;
pub use quadrature::{Classification, MvConfig, MvMethod, MvResult};
pub use solvers::{GridSolution, Scheme};
pub use growth::GrowthFunction;
pub use verify::{HarnackReport, MaxPrincipleReport};

/// Crate version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
