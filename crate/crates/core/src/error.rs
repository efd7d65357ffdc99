use thiserror::Error;

/// Which stage of the map produced a point exactly on the equator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Rotation about the z-axis by alpha.
    First,
    /// Rotation about the x-axis by beta.
    Second,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point lands on the equator after the {0:?} rotation stage")]
    BoundaryPoint(Stage),

    #[error("disk coordinate ({u}, {v}) lies outside the projection disk")]
    OutsideDisk { u: f64, v: f64 },

    #[error("equator angle is undefined at the poles (x = z = 0)")]
    UndefinedDirection,

    #[error("invalid protocol ({alpha}, {beta}): angles must lie in [0, pi)")]
    InvalidProtocol { alpha: f64, beta: f64 },

    #[error("cut parameter {0} outside [0, 4pi)")]
    InvalidCutParam(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
