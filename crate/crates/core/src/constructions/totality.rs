//! A universal test `W` and a test `V` such that any `f` with `V_{f(i)} ⊆ W_i`
//! bounds the first divergence point of each tabled partial function.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;

use super::check_budgets;
use crate::bits::{pair, Bits};
use crate::clopen::{canonicalize, first_in_str_order, Clopen, PrefixSet};
use crate::dyadic::Dyadic;
use crate::enumeration::{Enum, Test};
use crate::error::{Error, Result};
use crate::scenario::{Budgets, PartialFn};
use crate::trace::ConstructionTrace;

#[derive(Clone, Debug)]
pub struct TotalityCoding {
    pub w: Test,
    pub v: Test,
    /// Final `(n_i, e_i)` for each component of `W`.
    pub state: Vec<(u64, usize)>,
    pub trace: ConstructionTrace,
}

struct Row {
    n: u64,
    e: usize,
    view: Clopen,
    views: Vec<(usize, Clopen)>,
    /// Stages at which `Φ_{i,s}(n_{i,s})` converged.
    converged: BTreeSet<usize>,
    e_history: Vec<usize>,
    /// `(j, σ)` placed while serving this row.
    placed: Vec<(u64, Bits)>,
}

/// Stage `⟨i,s⟩`: on divergence of `Φ_{i,s}(n_{i,s})` enumerate `U_{e_{i,s},s}` into
/// `W_i`; on convergence enumerate `U_{i+1,s}`, put the first `σ` with `[σ]`
/// disjoint from `W_i` and `λ(V_j ∪ [σ]) < 2^{-j}` for `j ≤ n_{i,s}` into each such
/// `V_j`, then `n ← n+1`, `e ← max(e, |σ|)+1`. `W` has components `i < top`.
pub fn totality_coding(u: &Test, tables: &BTreeMap<usize, PartialFn>, b: &Budgets) -> Result<TotalityCoding> {
    if u.top() < 1 {
        return Err(Error::OutOfBudget("totality coding needs at least two components".into()));
    }
    let big_s = u.max_stage();
    let k = b.max_depth;
    let rows_n = u.top();
    let vtop = u.top();
    let empty = PartialFn::default();
    let mut rows: Vec<Row> = (0..rows_n)
        .map(|i| Row {
            n: 0,
            e: i + 1,
            view: Clopen::empty(),
            views: Vec::new(),
            converged: BTreeSet::new(),
            e_history: vec![i + 1],
            placed: Vec::new(),
        })
        .collect();
    let mut v_views: Vec<Clopen> = vec![Clopen::empty(); vtop + 1];
    let mut v_sched: Vec<Vec<(usize, Bits)>> = vec![Vec::new(); vtop + 1];
    let mut trace = ConstructionTrace::new();

    let mut order: Vec<(usize, usize)> = (0..rows_n).flat_map(|i| (0..=big_s).map(move |s| (i, s))).collect();
    order.sort_by_key(|&(i, s)| pair(i as u64, s as u64));
    for (i, s) in order {
        let phi = tables.get(&i).unwrap_or(&empty);
        let g = pair(i as u64, s as u64) as usize;
        let row = &mut rows[i];
        if phi.converged(row.n, s).is_none() {
            let add = u.view(row.e, s);
            if !add.subset(&row.view) {
                row.view = row.view.union(add);
                row.views.push((s, row.view.clone()));
            }
        } else {
            row.converged.insert(s);
            let add = u.view(i + 1, s);
            if !add.subset(&row.view) {
                row.view = row.view.union(add);
                row.views.push((s, row.view.clone()));
            }
            let n = row.n as usize;
            let reach = n.min(vtop);
            let pred = |sg: &Bits| {
                let c = Clopen::cylinder(sg.clone());
                (0..=reach).all(|j| v_views[j].union(&c).measure() < Dyadic::pow2_neg(j as u64))
                    && (n <= vtop || sg.len() > n)
            };
            let aux: Vec<&dyn PrefixSet> = v_views[..=reach].iter().map(|c| c as &dyn PrefixSet).collect();
            let sigma = first_in_str_order(0, k, &row.view, &aux, &pred).ok_or_else(|| {
                Error::SearchExhausted(format!("no witness string within depth {k} for W_{i} at stage {s}"))
            })?;
            for j in 0..=reach {
                v_views[j] = v_views[j].union(&Clopen::cylinder(sigma.clone()));
                v_sched[j].push((s, sigma.clone()));
            }
            if n > vtop {
                trace.event(g, "truncated", json!({"i": i, "n": n, "top": vtop}));
            }
            row.placed.push((row.n, sigma.clone()));
            row.n += 1;
            row.e = row.e.max(sigma.len()) + 1;
            row.e_history.push(row.e);
            trace.event(
                g,
                "witness",
                json!({"i": i, "s": s, "sigma": sigma.to_string(), "n": row.n, "e": row.e}),
            );
            if row.e > u.top() {
                return Err(Error::Validation(format!(
                    "W_{i} would need U_{} but the top index is {}; raise I",
                    row.e,
                    u.top()
                )));
            }
        }
    }

    let w_comps = rows
        .iter()
        .map(|r| Enum::from_views(r.views.iter().cloned(), big_s))
        .collect::<Result<Vec<_>>>()?;
    let w = Test::new(w_comps, false)?;
    let v_comps = v_sched.into_iter().map(|sch| Enum::new(sch, big_s)).collect::<Result<Vec<_>>>()?;
    let v = Test::new(v_comps, false)?;
    check_budgets(&mut trace, "w", &w);
    check_budgets(&mut trace, "v", &v);

    for (i, row) in rows.iter().enumerate() {
        let phi = tables.get(&i).unwrap_or(&empty);
        let least_div = (0..).find(|&n| phi.converged(n, big_s).is_none()).unwrap_or(0);
        trace.check("divergence-point", row.n == least_div, json!({"i": i, "n": row.n, "least_divergence": least_div}));
        let monotone = row.e_history.windows(2).all(|p| p[0] <= p[1]);
        let per_event = row.e_history.len() == row.placed.len() + 1;
        trace.check("e-monotone", monotone && per_event, json!({"i": i, "e": row.e_history}));
        let mut stages: BTreeSet<usize> = [0, big_s].into_iter().collect();
        stages.extend(w.component(i).change_stages());
        for j in 0..(row.n as usize).min(vtop + 1) {
            let vj = v.component(j).final_view();
            let hit = stages.iter().copied().find(|&s| vj.subset(w.view(i, s)));
            trace.check("witness-bound", hit.is_none(), json!({"i": i, "j": j, "contained_at": hit}));
        }
        let uncovered: Vec<usize> =
            row.converged.iter().copied().filter(|&s| !u.view(i + 1, s).subset(w.view(i, s))).collect();
        trace.check("converged-cover", uncovered.is_empty(), json!({"i": i, "stages": row.converged.len(), "bad": uncovered}));
        if row.converged.len() == big_s + 1 {
            let lag_bad: Vec<usize> =
                (1..=big_s).filter(|&s| !u.view(i + 1, s - 1).subset(w.view(i, s))).collect();
            trace.check("total-cover", lag_bad.is_empty(), json!({"i": i, "bad": lag_bad}));
        }
        if let Some((_, last)) = row.placed.last() {
            let inside = Clopen::cylinder(last.clone()).intersect(w.component(i).final_view()).measure();
            trace.check(
                "last-witness-gap",
                inside < Dyadic::pow2_neg(last.len() as u64),
                json!({"i": i, "sigma": last.to_string(), "inside": inside}),
            );
        }
    }
    let state: Vec<(u64, usize)> = rows.iter().map(|r| (r.n, r.e)).collect();
    let placed = canonicalize(rows.iter().flat_map(|r| r.placed.iter().map(|(_, b)| b.clone())));
    trace.output("w", w.to_json());
    trace.output("v", v.to_json());
    trace.output("state", json!(state.iter().map(|(n, e)| json!({"n": n, "e": e})).collect::<Vec<_>>()));
    trace.output("placed", json!(placed));
    Ok(TotalityCoding { w, v, state, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::scenario::TableEntry;

    fn geometric(top: usize, stages: usize) -> Test {
        let comps = (0..=top)
            .map(|i| Enum::new(vec![(i.min(stages), Bits::repeat(false, i + 1))], stages).unwrap())
            .collect();
        Test::new(comps, false).unwrap()
    }

    #[test]
    fn divergence_bounds_witnesses() {
        let u = geometric(12, 8);
        let b = Budgets { max_index: 12, max_stage: 8, max_depth: 16, max_ell: None };
        let mut tables = BTreeMap::new();
        tables.insert(
            0,
            PartialFn {
                entries: vec![
                    TableEntry { arg: 0, stage: 1, value: 3 },
                    TableEntry { arg: 1, stage: 2, value: 3 },
                ],
            },
        );
        let r = totality_coding(&u, &tables, &b).unwrap();
        assert_eq!(r.state[0].0, 2);
        assert_eq!(r.state[1], (0, 2));
        assert!(r.trace.all_pass(), "{:?}", r.trace.failures().collect::<Vec<_>>());
        assert!(r.v.component(0).final_view().meets(&bits("1")));
    }
}
