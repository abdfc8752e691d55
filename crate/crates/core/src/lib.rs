// SPDX-License-Identifier: Apache-2.0

//! Transductive node classification on weighted heterogeneous information
//! networks: meta-path PathSim similarities, ε-SVR path weighting and
//! graph-regularized label propagation.

pub mod config;
pub mod datagen;
pub mod dense;
pub mod error;
pub mod eval;
pub mod hin;
pub mod manifest;
pub mod metapath;
pub mod pipeline;
pub mod propagate;
pub mod sparse;
pub mod weights;

pub use error::{Error, Result};
