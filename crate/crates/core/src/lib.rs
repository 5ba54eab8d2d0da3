//! Random and generalized robustness of few-qubit entanglement over
//! PPT relaxations of the k-separable sets, with optimal witnesses, family
//! scans with kink detection, and a simulated tomography pipeline.

// `!(x > 0.0)` style guards are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numerics;
pub mod robustness;
pub mod scan;
pub mod sdp;
pub mod separability;
pub mod states;
pub mod tomo;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, HermitianMatrix};
pub use robustness::{robustness, robustness_with, RobustnessOptions, RobustnessResult};
pub use scan::{KinkReport, ScanOptions, ScanResult};
pub use sdp::{SdpProblem, SdpSolution, SolveStatus, SolverOptions};
pub use separability::{ModelKind, Quantifier, SeparabilityModel, Witness};
pub use states::{Bipartition, DensityMatrix, Ket, StateFamily};
