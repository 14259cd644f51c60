//! A universal test built over a stratified test while watching a halting
//! table, so that exact deficiency advice for the stratified test decodes
//! halting.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;

use super::check_budgets;
use crate::bits::Bits;
use crate::clopen::Clopen;
use crate::deficiency::{rd_final, Point};
use crate::enumeration::{stratify, Enum, Test};
use crate::error::Result;
use crate::scenario::{Budgets, HaltEntry, Stream};
use crate::trace::ConstructionTrace;

#[derive(Clone, Debug)]
pub struct HaltingOverlay {
    pub u: Test,
    pub strat: Test,
    pub trace: ConstructionTrace,
}

fn head(e: usize) -> Bits {
    Bits::repeat(true, e).pushed(false)
}

/// `U_0 = V^str_0`, `U_{i+1} = V^str_{i+1} ∪ ([1^e0] ∩ V^str_i)` for every `e`
/// halting by the current stage. `v` must satisfy `λ(V_i) ≤ 2^{-(i+2)}`.
pub fn halting_overlay(v: &Test, halting: &[HaltEntry], streams: &[Stream], b: &Budgets) -> Result<HaltingOverlay> {
    let big_s = v.max_stage();
    let ell = b.ell();
    let strat = stratify(v, ell, b.max_depth)?;
    // First halting stage per index.
    let mut halts: BTreeMap<usize, usize> = BTreeMap::new();
    for h in halting.iter().filter(|h| h.stage <= big_s) {
        let st = halts.entry(h.e).or_insert(h.stage);
        *st = (*st).min(h.stage);
    }
    let mut trace = ConstructionTrace::new();
    for (e, h) in &halts {
        trace.event(*h, "halt", json!({"e": e}));
    }
    let halt_stages: BTreeSet<usize> = halts.values().copied().collect();
    let mut comps = vec![strat.component(0).clone()];
    for i in 0..strat.top() {
        let mut changes = strat.change_stages_of(&[i, i + 1]);
        changes.extend(halt_stages.iter().copied());
        comps.push(Enum::derive(big_s, &changes, |s| {
            let mut view = strat.view(i + 1, s).clone();
            for (&e, &h) in &halts {
                if h <= s {
                    view = view.union(&Clopen::cylinder(head(e)).intersect(strat.view(i, s)));
                }
            }
            Ok(view)
        })?);
    }
    let u = Test::new(comps, false)?;
    check_budgets(&mut trace, "u", &u);

    for i in 0..u.top() {
        let lhs = u.component(i + 1).final_view().measure();
        let rhs = &strat.component(i + 1).final_view().measure() + &strat.component(i).final_view().measure();
        trace.check("overlay-measure", lhs <= rhs, json!({"i": i + 1, "measure": lhs, "bound": rhs}));
    }
    let all_stages = u.all_change_stages().union(&strat.all_change_stages()).copied().collect::<BTreeSet<_>>();
    for e in (0..=ell).filter(|e| !halts.contains_key(e)) {
        let cyl = Clopen::cylinder(head(e));
        let bad = all_stages.iter().find_map(|&s| {
            (0..u.len()).find(|&i| u.view(i, s).intersect(&cyl) != strat.view(i, s).intersect(&cyl)).map(|i| (i, s))
        });
        trace.check("non-halting-unchanged", bad.is_none(), json!({"e": e, "differs_at": bad}));
    }
    for x in streams.iter().filter(|x| x.random) {
        let d = rd_final(Point::Stream(x), v);
        if d < 2 || d > v.top() {
            continue;
        }
        for e in 0..=ell {
            let y = x.prepend(&head(e));
            let du = rd_final(Point::Stream(&y), &u);
            let dstr = rd_final(Point::Stream(&y), &strat);
            let halted = halts.contains_key(&e);
            if halted {
                trace.check(
                    "halting-raises-deficiency",
                    du > d - 1,
                    json!({"stream": x.name, "e": e, "d": d, "rd_u": du}),
                );
            }
            if e <= d + 1 {
                // Decoding is sound only where the stratified shift is exact.
                let decoded = du != d - 1;
                trace.check(
                    "halting-decode",
                    dstr == d - 1 && decoded == halted,
                    json!({"stream": x.name, "e": e, "d": d, "rd_u": du, "rd_str": dstr, "halted": halted}),
                );
            }
        }
    }
    trace.output("u", u.to_json());
    Ok(HaltingOverlay { u, strat, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;

    #[test]
    fn overlay_raises_only_halting_heads() {
        // V_i = [0^{i+2}], so X = 0001^ω has deficiency 2.
        let comps = (0..=3).map(|i| Enum::new(vec![(0, Bits::repeat(false, i + 2))], 4).unwrap()).collect();
        let v = Test::new(comps, false).unwrap();
        let mut x = Stream::new("x", bits("000"), bits("1")).unwrap();
        x.random = true;
        let b = Budgets { max_index: 3, max_stage: 4, max_depth: 12, max_ell: Some(3) };
        let halting = [HaltEntry { e: 1, stage: 2 }];
        let r = halting_overlay(&v, &halting, &[x], &b).unwrap();
        assert!(r.trace.all_pass(), "{:?}", r.trace.failures().collect::<Vec<_>>());
        assert!(r.trace.witnesses.iter().any(|w| w.claim == "halting-decode"));
    }
}
