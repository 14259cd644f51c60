//! Stage-scheduled enumerations of open sets, tests with enforced measure
//! budgets, and the combinators that build new tests from old ones.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::bits::Bits;
use crate::clopen::{canonicalize, Clopen};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// A monotone enumeration: cylinders scheduled at stages `0..=max_stage`.
/// Views are materialized once, at the stages where they change.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enum {
    schedule: Vec<(usize, Bits)>,
    checkpoints: Vec<(usize, Clopen, Dyadic)>,
    max_stage: usize,
}

impl Enum {
    pub fn empty(max_stage: usize) -> Self {
        Enum { schedule: Vec::new(), checkpoints: Vec::new(), max_stage }
    }

    pub fn new(mut schedule: Vec<(usize, Bits)>, max_stage: usize) -> Result<Self> {
        if let Some((s, c)) = schedule.iter().find(|(s, _)| *s > max_stage) {
            return Err(Error::OutOfBudget(format!("cylinder {c} scheduled at stage {s} > {max_stage}")));
        }
        schedule.sort_by_key(|(s, _)| *s);
        let mut checkpoints: Vec<(usize, Clopen, Dyadic)> = Vec::new();
        let mut cur = Clopen::empty();
        let mut k = 0;
        while k < schedule.len() {
            let s = schedule[k].0;
            let mut batch = Vec::new();
            while k < schedule.len() && schedule[k].0 == s {
                batch.push(schedule[k].1.clone());
                k += 1;
            }
            let next = canonicalize(cur.iter().cloned().chain(batch));
            if next != cur {
                let m = next.measure();
                checkpoints.push((s, next.clone(), m));
                cur = next;
            }
        }
        Ok(Enum { schedule, checkpoints, max_stage })
    }

    /// Build from a monotone sequence of views given at their change stages.
    pub fn from_views<I: IntoIterator<Item = (usize, Clopen)>>(views: I, max_stage: usize) -> Result<Self> {
        let mut schedule = Vec::new();
        let mut checkpoints: Vec<(usize, Clopen, Dyadic)> = Vec::new();
        let mut prev = Clopen::empty();
        for (s, v) in views {
            if s > max_stage {
                return Err(Error::OutOfBudget(format!("view at stage {s} > {max_stage}")));
            }
            if !prev.subset(&v) {
                return Err(Error::Validation(format!("enumeration not monotone at stage {s}")));
            }
            if v == prev {
                continue;
            }
            for c in v.iter() {
                if !prev.contains_string(c) {
                    schedule.push((s, c.clone()));
                }
            }
            let m = v.measure();
            checkpoints.push((s, v.clone(), m));
            prev = v;
        }
        Ok(Enum { schedule, checkpoints, max_stage })
    }

    /// Derive an enumeration whose view at `s` is `f(s)`, evaluated at the
    /// given change stages (the view is assumed constant between them).
    pub fn derive<F>(max_stage: usize, changes: &BTreeSet<usize>, f: F) -> Result<Self>
    where
        F: Fn(usize) -> Result<Clopen>,
    {
        let mut views = Vec::with_capacity(changes.len());
        for &s in changes.iter().filter(|&&s| s <= max_stage) {
            views.push((s, f(s)?));
        }
        Enum::from_views(views, max_stage)
    }

    pub fn max_stage(&self) -> usize {
        self.max_stage
    }

    pub fn schedule(&self) -> &[(usize, Bits)] {
        &self.schedule
    }

    fn checkpoint_index(&self, s: usize) -> Option<usize> {
        let k = self.checkpoints.partition_point(|(t, _, _)| *t <= s);
        k.checked_sub(1)
    }

    /// Canonical view at stage `s`, or an error beyond the stage budget.
    pub fn stage_view(&self, s: usize) -> Result<&Clopen> {
        if s > self.max_stage {
            return Err(Error::OutOfBudget(format!("stage {s} > {}", self.max_stage)));
        }
        Ok(self.view(s))
    }

    /// View at stage `s`, clamped to the final stage.
    pub fn view(&self, s: usize) -> &Clopen {
        static EMPTY: std::sync::OnceLock<Clopen> = std::sync::OnceLock::new();
        match self.checkpoint_index(s.min(self.max_stage)) {
            Some(k) => &self.checkpoints[k].1,
            None => EMPTY.get_or_init(Clopen::empty),
        }
    }

    pub fn measure_at(&self, s: usize) -> Dyadic {
        match self.checkpoint_index(s.min(self.max_stage)) {
            Some(k) => self.checkpoints[k].2.clone(),
            None => Dyadic::zero(),
        }
    }

    pub fn final_view(&self) -> &Clopen {
        self.view(self.max_stage)
    }

    /// Stages at which the view changes.
    pub fn change_stages(&self) -> impl Iterator<Item = usize> + '_ {
        self.checkpoints.iter().map(|(s, _, _)| *s)
    }

    pub fn depth(&self) -> usize {
        self.schedule.iter().map(|(_, b)| b.len()).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.checkpoints
                .iter()
                .map(|(s, v, m)| json!({"stage": s, "view": v, "measure": m}))
                .collect(),
        )
    }
}

/// A finite family of enumerations `i ↦ V_i`, `i ≤ top`, each within the
/// budget `λ(V_{i,s}) ≤ 2^{-i}` at every stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Test {
    components: Vec<Enum>,
    nested: bool,
    max_stage: usize,
}

impl Test {
    pub fn new(components: Vec<Enum>, nested: bool) -> Result<Self> {
        let max_stage = components.first().map(Enum::max_stage).unwrap_or(0);
        if components.iter().any(|c| c.max_stage() != max_stage) {
            return Err(Error::Validation("components disagree on the stage budget".into()));
        }
        for (i, c) in components.iter().enumerate() {
            check_budget(c, i)?;
        }
        let t = Test { components, nested, max_stage };
        if nested {
            t.check_nested()?;
        }
        Ok(t)
    }

    fn check_nested(&self) -> Result<()> {
        for i in 0..self.components.len().saturating_sub(1) {
            let stages = self.change_stages_of(&[i, i + 1]);
            for s in stages {
                if !self.view(i + 1, s).subset(self.view(i, s)) {
                    return Err(Error::Validation(format!("not nested at component {} stage {s}", i + 1)));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Largest component index.
    pub fn top(&self) -> usize {
        self.components.len().saturating_sub(1)
    }

    pub fn nested(&self) -> bool {
        self.nested
    }

    pub fn max_stage(&self) -> usize {
        self.max_stage
    }

    pub fn component(&self, i: usize) -> &Enum {
        &self.components[i]
    }

    pub fn components(&self) -> &[Enum] {
        &self.components
    }

    pub fn stage_view(&self, i: usize, s: usize) -> Result<&Clopen> {
        let c = self
            .components
            .get(i)
            .ok_or_else(|| Error::OutOfBudget(format!("component {i} > {}", self.top())))?;
        c.stage_view(s)
    }

    /// View of component `i` at stage `s` (clamped, `i` must exist).
    pub fn view(&self, i: usize, s: usize) -> &Clopen {
        self.components[i].view(s)
    }

    /// `∩_{i ≤ k} V_{i,s}`, with `k` clamped to `top`.
    pub fn intersection_upto(&self, k: usize, s: usize) -> Clopen {
        let k = k.min(self.top());
        let mut acc = self.view(0, s).clone();
        for i in 1..=k {
            if acc.is_empty() {
                break;
            }
            acc = acc.intersect(self.view(i, s));
        }
        acc
    }

    pub fn change_stages_of(&self, idx: &[usize]) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = [0].into_iter().collect();
        for &i in idx {
            if let Some(c) = self.components.get(i) {
                out.extend(c.change_stages());
            }
        }
        out
    }

    pub fn all_change_stages(&self) -> BTreeSet<usize> {
        let idx: Vec<usize> = (0..self.components.len()).collect();
        self.change_stages_of(&idx)
    }


    pub fn to_json(&self) -> Value {
        json!({
            "nested": self.nested,
            "components": self.components.iter().map(Enum::to_json).collect::<Vec<_>>(),
        })
    }

    /// Count of `(i, s)` budget checks at the given stride, and the first
    /// violation if any.
    pub fn budget_sweep(&self, stride: usize) -> (usize, Option<(usize, usize)>) {
        let stride = stride.max(1);
        let mut count = 0;
        let mut bad = None;
        for (i, c) in self.components.iter().enumerate() {
            let bound = Dyadic::pow2_neg(i as u64);
            for s in (0..=self.max_stage).step_by(stride) {
                count += 1;
                if bad.is_none() && c.measure_at(s) > bound {
                    bad = Some((i, s));
                }
            }
        }
        (count, bad)
    }
}

fn check_budget(c: &Enum, i: usize) -> Result<()> {
    let bound = Dyadic::pow2_neg(i as u64);
    for (s, _, m) in &c.checkpoints {
        if *m > bound {
            return Err(Error::BudgetViolation(format!("component {i} has measure {m} > 2^-{i} at stage {s}")));
        }
    }
    Ok(())
}

/// Component-wise union `U_n = ∪_e V^e_{n+e+1}` for `n ≤ top`. Terms whose
/// index exceeds a member's top are dropped; the returned notes list them.
pub fn universal_sum(tests: &[Test], top: usize) -> Result<(Test, Vec<String>)> {
    let first = tests.first().ok_or_else(|| Error::Validation("no registered tests".into()))?;
    let max_stage = first.max_stage();
    let mut notes = Vec::new();
    let mut comps = Vec::with_capacity(top + 1);
    for n in 0..=top {
        let terms: Vec<(usize, usize)> = tests
            .iter()
            .enumerate()
            .filter_map(|(e, t)| {
                let j = n + e + 1;
                if j > t.top() {
                    notes.push(format!("U_{n}: term V^{e}_{j} beyond top {}", t.top()));
                    None
                } else {
                    Some((e, j))
                }
            })
            .collect();
        let mut changes: BTreeSet<usize> = [0].into_iter().collect();
        for &(e, j) in &terms {
            changes.extend(tests[e].component(j).change_stages());
        }
        comps.push(Enum::derive(max_stage, &changes, |s| {
            Ok(canonicalize(terms.iter().flat_map(|&(e, j)| tests[e].view(j, s).iter().cloned())))
        })?);
    }
    Ok((Test::new(comps, false)?, notes))
}

/// `V_n = ∩_{i ≤ n} U_i`, stagewise; the result is nested.
pub fn descending_chain(u: &Test) -> Result<Test> {
    let mut comps = Vec::with_capacity(u.len());
    for n in 0..u.len() {
        let idx: Vec<usize> = (0..=n).collect();
        let changes = u.change_stages_of(&idx);
        comps.push(Enum::derive(u.max_stage(), &changes, |s| Ok(u.intersection_upto(n, s)))?);
    }
    Test::new(comps, true)
}

/// `W_n = V_{2n+1}` for every `n` with `2n+1 ≤ top`.
pub fn even_shift(v: &Test) -> Result<Test> {
    if v.top() < 1 {
        return Err(Error::OutOfBudget("odd shift needs at least two components".into()));
    }
    let comps = (0..=(v.top() - 1) / 2).map(|n| v.component(2 * n + 1).clone()).collect();
    Test::new(comps, v.nested())
}

/// `V_i = U_{i+c}` for `i ≤ top - c`.
pub fn index_shift(u: &Test, c: usize) -> Result<Test> {
    if c > u.top() {
        return Err(Error::OutOfBudget(format!("shift {c} beyond top {}", u.top())));
    }
    let comps = (c..=u.top()).map(|j| u.component(j).clone()).collect();
    Test::new(comps, u.nested())
}

/// `V'_i = ∪_{i < j ≤ top} V_j`, stagewise; `V'_top` is empty.
pub fn shift_union(v: &Test) -> Result<Test> {
    let mut comps = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let idx: Vec<usize> = (i + 1..v.len()).collect();
        let changes = v.change_stages_of(&idx);
        comps.push(Enum::derive(v.max_stage(), &changes, |s| {
            Ok(canonicalize(idx.iter().flat_map(|&j| v.view(j, s).iter().cloned())))
        })?);
    }
    Test::new(comps, false)
}

/// Stratification: `U^str_i = [1^{i+3}] ∪ {1^ℓ0⌢σ : ℓ ≤ max_ell, [σ] ⊆ U_{i+1}}`,
/// every string kept within depth `k`.
pub fn stratify(u: &Test, max_ell: usize, k: usize) -> Result<Test> {
    let mut comps = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        if i + 3 > k {
            return Err(Error::DepthExceeded { len: i + 3, bound: k });
        }
        let head = Bits::repeat(true, i + 3);
        let src = (i < u.top()).then(|| u.component(i + 1));
        if let Some(src) = src {
            let need = max_ell + 1 + src.depth();
            if need > k {
                return Err(Error::DepthExceeded { len: need, bound: k });
            }
        }
        let mut changes: BTreeSet<usize> = [0].into_iter().collect();
        if let Some(src) = src {
            changes.extend(src.change_stages());
        }
        comps.push(Enum::derive(u.max_stage(), &changes, |s| {
            let mut strings = vec![head.clone()];
            if let Some(src) = src {
                for ell in 0..=max_ell {
                    let p = Bits::repeat(true, ell).pushed(false);
                    strings.extend(src.view(s).iter().map(|c| p.concat(c)));
                }
            }
            Ok(canonicalize(strings))
        })?);
    }
    Test::new(comps, false)
}

/// Copy of `u` with component `i` replaced by `w`.
pub fn replace_component(u: &Test, i: usize, w: Enum) -> Result<Test> {
    if i > u.top() {
        return Err(Error::OutOfBudget(format!("component {i} > {}", u.top())));
    }
    if w.max_stage() != u.max_stage() {
        return Err(Error::Validation("replacement has a different stage budget".into()));
    }
    check_budget(&w, i)?;
    let mut comps = u.components().to_vec();
    comps[i] = w;
    Test::new(comps, false)
}
