//! Numerical building blocks for bubble-driven finite-time blow-up of the
//! two-dimensional Landau-Lifshitz-Gilbert equation
//! `u_t = a (Lap u + |grad u|^2 u) - b u x Lap u`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod evolve;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod linops;
pub mod nonlocal;
pub mod ode;
pub mod quad;
pub mod reduced;
pub mod spectral;
pub mod vec3;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{BubbleParams, FrameSample, PhysParams};
pub use grid::{RadialGrid, Spacing};
pub use linops::{ModeKernelPair, PolarComplexField, PolarGrid, RadialComplexField, TangentField};
pub use vec3::{S2Vector, Vec3};
