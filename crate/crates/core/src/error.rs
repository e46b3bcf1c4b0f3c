use thiserror::Error;

use crate::alloc::AllocError;
use crate::bench::BenchError;
use crate::cluster::ClusterError;
use crate::control::ControlError;
use crate::farm::FarmError;
use crate::manifest::ManifestError;
use crate::pipeline::PipelineError;
use crate::session::SessionError;
use crate::sim::LogError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Farm(#[from] FarmError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("corrupt log: {0}")]
    Log(#[from] LogError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status: 2 validation/schema, 3 insufficient resources,
    /// 4 corrupt state or log, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Manifest(_) | Error::Cluster(ClusterError::Parse(_)) => 2,
            Error::Control(e) if e.is_validation() => 2,
            Error::Session(SessionError::InvalidChild(_)) => 2,
            Error::Farm(FarmError::InvalidJob(_) | FarmError::InvalidDelta(_)) => 2,
            Error::Bench(BenchError::Invalid(_)) => 2,
            Error::Alloc(
                AllocError::InsufficientResources { .. } | AllocError::EmptyShare { .. },
            ) => 3,
            Error::Pipeline(PipelineError::InsufficientResources { .. }) => 3,
            Error::Farm(FarmError::Starvation { .. } | FarmError::NoIdleExecutors { .. }) => 3,
            Error::Bench(BenchError::NotEnoughNodes { .. }) => 3,
            Error::Alloc(AllocError::CorruptState(_)) | Error::Log(_) => 4,
            Error::Cluster(ClusterError::InvalidInventory(_)) => 4,
            Error::Control(ControlError::CorruptLog(_)) => 4,
            _ => 1,
        }
    }

    /// Errors after which the events emitted so far are still committed.
    pub(crate) fn commits(&self) -> bool {
        matches!(
            self,
            Error::Pipeline(PipelineError::InsufficientResources { .. })
        )
    }
}
