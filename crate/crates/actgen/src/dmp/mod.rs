//! Dynamic movement primitives and the simulated kitchen executor:
//! fit primitives from demonstrations, map decoded action steps to
//! primitive sequences, execute them kinematically, and judge task
//! completion.

mod kitchen;
mod library;
mod primitive;

pub use kitchen::{align_and_execute, ExecutionReport, HaltReason, KitchenState, Pose};
pub use library::{
    builtin_library, builtin_task, Condition, DmpLibrary, Effect, LibraryEntry, PrimitiveCall,
    Target, TaskSpec, LIBRARY_VERSION,
};
pub use primitive::{fit_dmp, rollout, write_trajectory_csv, DmpPrimitive, Trajectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DmpError {
    #[error("fit error: {0}")]
    Fit(String),
    #[error("integration error: {0}")]
    Integration(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DmpError>;
