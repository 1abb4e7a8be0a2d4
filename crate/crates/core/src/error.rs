use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("outcome {outcome} has zero probability under both hypotheses")]
    UndefinedEvidence { outcome: u8 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("belief p1 = {0} is degenerate; no further measurement is defined")]
    DegenerateBelief(f64),

    #[error(
        "no convergence after {depth} copies: residual mass {residual_mass:e}, \
         enclosure width {bound_width:e}"
    )]
    NonConvergence {
        depth: u64,
        residual_mass: f64,
        bound_width: f64,
    },

    #[error("enumeration depth {requested} exceeds the limit of {limit}")]
    DepthLimit { requested: usize, limit: usize },

    #[error("string enumeration exceeded {limit} open prefixes")]
    EnumerationLimit { limit: usize },

    #[error("trial {trial} exceeded the cap of {cap} copies")]
    TrialOverflow { trial: u64, cap: u64 },

    #[error("no angle in the scanned range produced a finite cost")]
    NoFeasibleAngle,
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            domain,
        }
    }
}
