//! Task grounding and search: level-bounded stream instantiation with a
//! deferral policy, static-join grounding, greedy best-first search on the
//! goal-count heuristic, and merging of adjacent actions into the combined
//! actions the executor compiles.

pub mod combine;
pub mod error;
pub mod ground;
pub mod instantiate;
pub mod join;
pub mod registry;
pub mod search;
pub mod store;

pub use combine::{combine_actions, CombinedAction};
pub use error::PlannerError;
pub use ground::{ground_task, GroundTask};
pub use instantiate::{instantiate_streams, DeferralPolicy, Instantiation};
pub use registry::{
    resolve_inputs, ConditionalSampler, Phase, ResolvedInputs, SamplerKind, SamplerRegistry,
    VIEWPOINT_SAMPLER,
};
pub use search::{
    bfs_optimal_length, plan, reachable_states, relaxed_goal_reachable, SearchLimits,
};
pub use store::{Binding, ObjectStore};
