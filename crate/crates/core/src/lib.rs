//! Continuous-time Ruelle transfer operators for finite Markov chains.
//!
//! Generators use the column convention: entry `(i, j)` of `L` is the jump
//! rate from `j` to `i`, columns sum to zero and `P^t = e^{tL}` is column
//! stochastic. States are 0-based in the library and 1-based in JSON, on
//! the command line and across the C interface.

pub mod ctmc;
pub mod cylinder;
pub mod error;
pub mod feynman_kac;
pub mod gibbs;
mod kernel;
pub mod model;
pub mod perron;
pub mod random;
pub mod time;
pub mod transfer;
pub mod verify;

pub use ctmc::{
    semigroup, stationary_vector, uniformized_exp, validate_generator, Generator, StationaryVector, TransitionMatrix,
};
pub use cylinder::{shift_spec, CylinderFunction, CylinderSpec, PathMeasure};
pub use error::{Error, Result};
pub use feynman_kac::{action_integral, bridge_cylinder_eval, fk_estimate, sample_path, FkEstimate, PathSample};
pub use gibbs::{GibbsModel, NuMode};
pub use perron::{perron_triple, PerronTriple, Potential};
pub use time::TimePoint;
pub use transfer::{compose_shift, conditional_expectation, disintegration_eval, transfer_apply};
