use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("link distance is zero; pathloss is singular at r = 0")]
    SingularDistance,

    #[error("region has zero area")]
    DegenerateRegion,

    #[error("layout has no base stations")]
    EmptyLayout,

    #[error("could not place {wanted} users after {attempts} attempts (region too small for d_min?)")]
    PlacementFailed { wanted: usize, attempts: usize },

    #[error("empty scenario: {0}")]
    EmptyScenario(&'static str),

    #[error("{link} user {user} is not served by the base station of interest")]
    NotServedByCenter { link: &'static str, user: usize },

    #[error("{link} user index {user} out of range")]
    UserOutOfRange { link: &'static str, user: usize },

    #[error("inconsistent scenario: {0}")]
    InconsistentScenario(String),

    #[error("covariance is not positive semidefinite (entry {index} = {value})")]
    NotPositiveSemidefinite { index: usize, value: f64 },

    #[error("matched filter needs a non-zero channel estimate")]
    ZeroChannel,

    #[error("no samples")]
    EmptySamples,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
