//! The single-node trigger backdoor.
//!
//! 1. [`feature_frequencies`] counts how often each binary feature is set.
//! 2. [`select_trigger_indices`] / [`build_trigger`] give the trigger node
//!    ones at the `k` least frequent columns.
//! 3. [`select_poison_pairs`] picks `q = ⌊p·N⌋` unlinked pairs with the
//!    smallest node-pair score `‖X_u‖₁ + ‖X_v‖₁`.
//! 4. [`inject_backdoor`] adds the trigger node, links it to both ends of
//!    every selected pair and marks the pairs themselves linked.
//! 5. [`activation_overlay`] produces the two trigger edges that activate
//!    the backdoor on a target pair at inference time.

mod inject;
mod plan;
mod trigger;

pub use inject::{activation_overlay, inject_backdoor, Backdoor, PoisonPositives};
pub use plan::{
    nps, parse_plan_json, plan_to_json, select_poison_pairs, PlanFile, PoisonMode, PoisonPlan,
    ScoredPair, Selection,
};
pub(crate) use trigger::floor_times;
pub use trigger::{budget_for, build_trigger, feature_frequencies, select_trigger_indices, TriggerSpec};
