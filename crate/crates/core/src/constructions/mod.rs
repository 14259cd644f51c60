//! Stage-by-stage constructions of tests and sets, each recording its
//! finite-stage obligations in a [`ConstructionTrace`].

mod cones;
mod diagonal;
mod halting;
mod sigma_chain;
mod totality;

pub use cones::{right_shift_cones, Cones};
pub use diagonal::{diagonal, Diagonal};
pub use halting::{halting_overlay, HaltingOverlay};
pub use sigma_chain::{non_optimal_universal, sigma_chain, NonOptimal, SigmaChain};
pub use totality::{totality_coding, TotalityCoding};

use serde_json::{json, Value};

use crate::enumeration::Test;
use crate::trace::ConstructionTrace;

/// Record one obligation per test that every component respects its budget
/// at every stage.
pub(crate) fn check_budgets(trace: &mut ConstructionTrace, name: &str, t: &Test) {
    let (count, bad) = t.budget_sweep(1);
    let data = json!({"test": name, "checks": count, "violation": bad.map(|(i, s)| json!({"i": i, "s": s}))});
    trace.check("budget", bad.is_none(), data);
}

pub(crate) fn strs<'a, I: IntoIterator<Item = &'a crate::Bits>>(it: I) -> Value {
    Value::Array(it.into_iter().map(|b| Value::String(b.to_string())).collect())
}
