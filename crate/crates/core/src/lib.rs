//! Numerical special geometry: projective special Kähler bases from
//! holomorphic prepotentials, the one-loop deformed Ferrara-Sabharwal metric
//! of the supergravity c-map, and numerical curvature and completeness probes.
//!
//! Modules, bottom-up:
//!
//! * [`diff`]: Richardson-extrapolated finite differences on real charts.
//! * [`prepotential`]: quadratic and cubic prepotentials, `N`, `𝒩`, `Ĥ`.
//! * [`special_kahler`]: `𝒦`, `ḡ`, `d^c𝒦` and the r-map closed forms.
//! * [`forms`]: one- and two-form algebra in a fixed chart.
//! * [`cmap`]: the deformed metric, frame forms, Kähler forms, holomorphic
//!   coordinates, scaling isometry and domain classification.
//! * [`curvature`]: Christoffel symbols, Riemann/Ricci/scalar, `|Riem|²`, `‖∇R‖`.
//! * [`geodesics`]: geodesic integration and curve lengths.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmap;
pub mod curvature;
pub mod diff;
pub mod error;
pub mod forms;
pub mod geodesics;
pub mod prepotential;
pub mod special_kahler;

pub use error::{GeomError, Result};
