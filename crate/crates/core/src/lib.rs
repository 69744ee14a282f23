//! Workbench for physics-informed neural network (PINN) modeling of dynamic
//! chemical processes governed by partially-known semi-explicit DAE systems.
//!
//! The crate is organized around a scalar autodiff tape ([`autodiff`]), an MLP
//! expressed over that tape ([`net`]), synthetic data generation with an
//! adaptive RK45 integrator ([`datagen`]), an incidence-matrix estimability
//! heuristic ([`structural`]), two process models ([`cstr`], [`separator`]),
//! the PINN training stack ([`training`]), and experiment orchestration with
//! metrics and reports ([`harness`]).

pub mod autodiff;
pub mod cstr;
pub mod datagen;
pub mod harness;
pub mod net;
pub mod separator;
pub mod structural;
pub mod training;
