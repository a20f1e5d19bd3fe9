use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("no sampler registered for stream `{0}`")]
    UnknownSampler(String),
    #[error("stream instantiation saturated without supporting the goal: {unsupported:?}")]
    LevelBudgetExhausted { unsupported: Vec<String> },
    #[error("no plan: {0}")]
    NoPlan(String),
    #[error("constant `{0}` has no binding in the object store")]
    MissingBinding(String),
    #[error(transparent)]
    Pddl(#[from] pddl_core::PddlError),
}
