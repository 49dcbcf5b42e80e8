use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    // polytope
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty")]
    Empty,
    #[error("polytope has empty interior")]
    EmptyInterior,
    #[error("facet {0} is redundant")]
    Redundant(usize),
    #[error("vertex system is near-singular beyond tolerance")]
    Degenerate,
    #[error("grouping mismatch: {0}")]
    GroupingMismatch(String),
    #[error("polytope is not a cuboid")]
    NotCuboid,
    #[error("normals are not integral")]
    NonIntegral,

    // levi
    #[error("labels do not span the chart")]
    RankDeficient,
    #[error("characteristic system is singular")]
    SingularSystem,
    #[error("moment system is inconsistent (residual {0:e})")]
    Inconsistent(f64),
    #[error("self-check failure: {0}")]
    SelfCheckFailure(String),

    // potential
    #[error("not a positive Levi pair")]
    NotPositivePair,
    #[error("point is within the boundary margin")]
    BoundaryProximity,
    #[error("metric is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    // curvature
    #[error("weight is not positive at the point")]
    NonpositiveWeight,
    #[error("sample set is degenerate for an affine fit")]
    DegenerateSampleSet,
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    // cube / quad
    #[error("point lies beyond the characteristic hyperplane")]
    CharacteristicHyperplane,
    #[error("degenerate roots: {0}")]
    DegenerateRoots(String),
    #[error("positivity failure: {0}")]
    PositivityFailure(String),

    // calabi
    #[error("composition identity failed (spread {0:e})")]
    IdentityFailure(f64),
    #[error("label sign failure: {0}")]
    SignFailure(String),
    #[error("condition fails: {0}")]
    ConditionFailure(String),
    #[error("scalar curvature is not constant (relative spread {0:e})")]
    NonConstantScalar(f64),

    // sphere_lab
    #[error("containment failure (worst label {0:e})")]
    ContainmentFailure(f64),
    #[error("coverage failure (ratio {0})")]
    CoverageFailure(f64),
    #[error("restriction to the horizontal space is singular")]
    SingularRestriction,
}
