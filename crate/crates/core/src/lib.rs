//! Complex quantum Hamilton–Jacobi analysis of two interfering Gaussian
//! wave packets: analytic fields in the complex plane, nodal-line dynamics,
//! complex trajectories, wrapping and lifetime metrics, and space-time
//! volume sampling.

pub mod cave;
pub mod error;
pub mod format;
pub mod integrator;
pub mod metrics;
pub mod nodal;
pub mod scenario;
pub mod trajectory;
pub mod wavefield;

pub use cave::{Axis, CaveGrid, GridSpec, VolumeFormat};
pub use error::{Error, Result};
pub use metrics::{LifetimeWindow, WrappingRecord, WrappingSummary};
pub use nodal::{CharacteristicPoint, ContourSpec, NodalLineState, NodalTrajectoryLine, PointKind, SymmetricPair};
pub use num_complex::Complex64;
pub use scenario::Scenario;
pub use trajectory::{IsochroneResult, StagnationExpansion, Trajectory, TrajectoryKind, TrajectorySample, TrajectoryStatus};
pub use wavefield::{FieldSample, GaussianPacket, QmfDerivative, Superposition};
