//! Multi-plane phase retrieval from noisy intensity observations.
//!
//! The object wavefield `u0` is recovered from `K` intensity images recorded
//! at increasing distances. Three reconstruction loops are provided:
//!
//! * SBMIR-FB: magnitude replacement with averaged back-propagation.
//! * AL: augmented-Lagrangian fitting of each plane, coupled through an exact
//!   frequency-domain object update.
//! * D-AL: AL with the object amplitude and phase shrunk in an overcomplete
//!   block-DCT frame at every iteration.

pub mod algorithms;
pub mod error;
pub mod fft;
pub mod field;
pub mod frame;
pub mod io;
pub mod metrics;
pub mod observe;
pub mod propagation;
pub mod setup;
pub mod solvers;

pub use algorithms::{FramePair, Problem, ReconstructionState, TraceRecord};
pub use error::{Error, Result};
pub use field::{make_chessboard_object, RealGrid, WaveField};
pub use frame::{soft_threshold, FrameOperator, SpectrumVector};
pub use metrics::{rmse, rmse_phase_aligned, FieldErrors};
pub use observe::{simulate_observations, ObservationStack};
pub use propagation::{make_transfer, propagate_adjoint, propagate_forward, Propagator, TransferFunction};
pub use setup::OpticalSetup;
pub use solvers::{fit_observation_pixel, fit_observation_plane, lagrange_update, object_update, AlgoParams};
