//! An effectively open set whose intersection with a positive-measure tree is
//! not covered by any finite subfamily of its cones.

use std::collections::BTreeSet;

use serde_json::json;

use crate::bits::{unpair, Bits};
use crate::clopen::{canonicalize, first_of_length, Clopen};
use crate::dyadic::Dyadic;
use crate::enumeration::Enum;
use crate::error::{Error, Result};
use crate::scenario::Budgets;
use crate::trace::ConstructionTrace;

#[derive(Clone, Debug)]
pub struct Cones {
    pub a: Enum,
    /// Enumerated cones in order, with their stage.
    pub cones: Vec<(usize, Bits)>,
    pub n0: usize,
    pub tree_measure: Dyadic,
    pub trace: ConstructionTrace,
}

/// Number of leading cones checked for the non-compactness witness.
pub const PREFIX_CHECKS: usize = 20;

fn has_prefix_in(raw: &BTreeSet<Bits>, s: &Bits, strict: bool) -> bool {
    let top = if strict { s.len() } else { s.len() + 1 };
    (0..top).any(|k| raw.contains(&s.prefix(k)))
}

/// The tree is `σ ∈ T_s` iff `[σ] ⊄ D_s` for the dead enumeration `D`. At stage
/// `s = ⟨i,t⟩`, working at length `n₀+i`: with no cone of that length yet,
/// enumerate the leftmost string not extending an enumerated cone; otherwise
/// take the current one `σ` and replace it by its right neighbour when it
/// strictly extends an enumerated cone or its cylinder is dead at `s`.
pub fn right_shift_cones(dead: &Enum, b: &Budgets) -> Result<Cones> {
    let big_s = dead.max_stage();
    let k = b.max_depth;
    let d_final = dead.final_view();
    let tree_measure =
        Dyadic::one().checked_sub(&d_final.measure()).expect("dead set has measure at most 1");
    if tree_measure.is_zero() {
        return Err(Error::Validation("the tree has measure zero".into()));
    }
    let n0 = (0..k)
        .find(|&n| Dyadic::pow2_neg(n as u64).mul_u64(4) <= tree_measure)
        .ok_or_else(|| Error::Validation(format!("the tree's measure {tree_measure} needs n0 ≥ K = {k}")))?;
    let mut trace = ConstructionTrace::new();
    trace.event(0, "setup", json!({"n0": n0, "tree_measure": tree_measure}));
    let mut tracked: Vec<Option<Bits>> = vec![None; k - n0 + 1];
    let mut raw: BTreeSet<Bits> = BTreeSet::new();
    let mut cones: Vec<(usize, Bits)> = Vec::new();
    for s in 0..=big_s {
        let (i, _t) = unpair(s as u64);
        let i = i as usize;
        if n0 + i > k {
            continue;
        }
        let n = n0 + i;
        let (next, reason) = match &tracked[i] {
            None => {
                let blocked = canonicalize(raw.iter().filter(|c| c.len() <= n).cloned());
                let sg = first_of_length(n, &blocked, &[], &|_: &Bits| true).ok_or_else(|| {
                    Error::SearchExhausted(format!("every string of length {n} extends an enumerated cone"))
                })?;
                (sg, "initial")
            }
            Some(sg) => {
                let covered = has_prefix_in(&raw, sg, true);
                let alive = !dead.view(s).covers(sg);
                if !covered && alive {
                    continue;
                }
                let reason = if covered { "covered" } else { "dead" };
                let nb = sg.right_neighbor().ok_or_else(|| {
                    Error::SearchExhausted(format!("no right neighbour of {sg} at length {n}"))
                })?;
                (nb, reason)
            }
        };
        trace.event(s, "cone", json!({"length": n, "sigma": next.to_string(), "reason": reason}));
        raw.insert(next.clone());
        cones.push((s, next.clone()));
        tracked[i] = Some(next);
    }
    let a = Enum::new(cones.clone(), big_s)?;

    let half = tree_measure.shr(1);
    let mut stages: BTreeSet<usize> = [0].into_iter().collect();
    stages.extend(a.change_stages());
    let worst = stages.iter().map(|&s| a.view(s).difference(d_final).measure()).max().unwrap_or_else(Dyadic::zero);
    trace.check("tree-intersection-bound", worst <= half, json!({"max": worst, "bound": half}));
    for m in 0..=PREFIX_CHECKS {
        let head = canonicalize(cones.iter().take(m).map(|(_, c)| c.clone()));
        let later = cones.iter().enumerate().skip(m).find(|(_, (_, c))| {
            !Clopen::cylinder(c.clone()).difference(&head).difference(d_final).is_empty()
        });
        trace.check(
            "non-compactness",
            later.is_some(),
            json!({"m": m, "cones": cones.len(), "later": later.map(|(j, (_, c))| json!({"index": j, "sigma": c.to_string()}))}),
        );
    }
    trace.output("a", a.to_json());
    Ok(Cones { a, cones, n0, tree_measure, trace })
}
