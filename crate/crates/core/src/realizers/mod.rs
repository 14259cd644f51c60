//! Realizer pairs `(Φ, Ψ)` as monotone stream transducers.
//!
//! A stream-valued `Φ` keeps a committed pad and copies its source after it.
//! On a trigger the pad is extended by the str_order-least `τ` with
//! `[pad⌢τ]` inside the demanded intersection, and copying restarts from
//! position 0 of the source. The source bits copied since the previous
//! commit are a provisional plan and are dropped on restart, so the final
//! output is always `pad⌢X`.

mod choice;
mod compose;
mod delta02;
mod lay;
mod semidecidable;

pub use choice::{a_s, cn_run, cn_times_mlr_to_lay, lay_to_cn, least_prime_index, nth_prime, CnRun, CnTimesMlr, FireRule};
pub use compose::{compose_star, ComposeStar, Identity, StarRun};
pub use delta02::{delta02_to_lay, Delta02};
pub use lay::{lay_to_lay, parallel_merge, product_merge, rd_from_lay, LayToLay, ParallelMerge, ProductMerge, RdFromLay};
pub use semidecidable::{semidecidable_sides, semidecidable_to_rd_star, MembershipSide, RdSide};

use serde::Serialize;
use serde_json::{json, Value};

use crate::bits::Bits;
use crate::clopen::Clopen;
use crate::deficiency::{rd_at_stage, Point};
use crate::enumeration::Test;
use crate::error::{Error, Result};
use crate::scenario::Stream;
use crate::trace::{ConstructionTrace, Event};

/// One pad extension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Commit {
    pub stage: usize,
    pub tau: Bits,
    /// Pad after the extension.
    pub pad: Bits,
    /// Components whose stage view must contain `[pad]`.
    pub indices: Vec<usize>,
    pub reason: String,
}

/// The run of a stream-valued `Φ` on one source.
#[derive(Clone, Debug)]
pub struct StreamRun {
    pub source: Stream,
    pub pad: Bits,
    pub commits: Vec<Commit>,
    pub events: Vec<Event>,
}

impl StreamRun {
    pub fn new(source: &Stream) -> Self {
        StreamRun { source: source.clone(), pad: Bits::empty(), commits: Vec::new(), events: Vec::new() }
    }

    /// Final output `pad⌢X`.
    pub fn output(&self) -> Stream {
        let mut o = self.source.prepend(&self.pad);
        o.name = format!("{}*", self.source.name);
        o
    }

    /// Committed output at stage `s`.
    pub fn pad_at(&self, s: usize) -> Bits {
        self.commits.iter().rev().find(|c| c.stage <= s).map(|c| c.pad.clone()).unwrap_or_default()
    }

    pub fn note(&mut self, stage: usize, action: &str, mut payload: Value) {
        payload["stream"] = json!(self.source.name);
        self.events.push(Event { stage, action: action.to_string(), payload });
    }

    /// Extend the pad into `∩_{i ∈ indices} t_{i,s}` and restart copying.
    pub fn commit(&mut self, t: &Test, indices: Vec<usize>, s: usize, reason: &str) -> Result<()> {
        let target = intersection(t, &indices, s);
        let tau = target.shortest_extension_inside(&self.pad).ok_or_else(|| {
            Error::PaddingExhausted(format!(
                "stream {}: no extension of pad {} inside components {indices:?} at stage {s}",
                self.source.name, self.pad
            ))
        })?;
        self.pad = self.pad.concat(&tau);
        self.note(
            s,
            "pad",
            json!({"tau": tau.to_string(), "pad": self.pad.to_string(), "indices": indices, "reason": reason}),
        );
        self.commits.push(Commit { stage: s, tau, pad: self.pad.clone(), indices, reason: reason.to_string() });
        Ok(())
    }
}

/// `∩_{i ∈ indices} t_{i,s}`, the full space for no indices.
pub fn intersection(t: &Test, indices: &[usize], s: usize) -> Clopen {
    let mut acc = Clopen::full();
    for &i in indices {
        acc = acc.intersect(t.view(i, s));
        if acc.is_empty() {
            break;
        }
    }
    acc
}

/// `0..=min(k, top)`.
pub fn upto(k: usize, t: &Test) -> Vec<usize> {
    (0..=k.min(t.top())).collect()
}

/// Structural checks on a run: pads grow by extension, the output is
/// `pad⌢X`, and every pad lies inside its demanded intersection both at
/// commit time and at the final stage.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunChecks {
    pub monotone: bool,
    pub shape: bool,
    pub padding: bool,
}

impl RunChecks {
    pub fn all(&self) -> bool {
        self.monotone && self.shape && self.padding
    }
}

pub fn check_run(run: &StreamRun, t: &Test, depth: usize) -> RunChecks {
    let mut prev = Bits::empty();
    let mut prev_stage = 0;
    let mut monotone = true;
    for c in &run.commits {
        monotone &= prev.is_prefix_of(&c.pad) && c.stage >= prev_stage && prev.concat(&c.tau) == c.pad;
        prev = c.pad.clone();
        prev_stage = c.stage;
    }
    monotone &= prev == run.pad;
    let out = run.output();
    let n = run.pad.len() + depth.max(run.source.pad.len() + 2 * run.source.period.len());
    let expect = run.pad.concat(&run.source.prefix(n - run.pad.len()));
    let shape = out.prefix(n) == expect && run.pad.is_prefix_of(&out.prefix(n));
    let s_final = t.max_stage();
    let padding = run.commits.iter().all(|c| {
        intersection(t, &c.indices, c.stage).covers(&c.pad) && intersection(t, &c.indices, s_final).covers(&c.pad)
    });
    RunChecks { monotone, shape, padding }
}

/// Record of one reduction instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionRun {
    pub pre_output: String,
    pub oracle_answer: Value,
    pub post_output: Value,
    pub verdict: bool,
}

/// A Weihrauch reduction to a deficiency problem: `Φ` maps an instance to a
/// stream, `Ψ` maps the instance and a natural advice to a solution.
pub trait Reduction {
    type In: Clone;
    type Out: Clone + PartialEq + std::fmt::Debug;
    fn phi(&self, x: &Self::In) -> Result<StreamRun>;
    fn psi(&self, x: &Self::In, advice: usize) -> Option<Self::Out>;
}

pub fn describe(run: &StreamRun) -> String {
    format!("{}+{}", run.pad, run.source.name)
}

/// Runs of one realizer over a list of instances.
#[derive(Clone, Debug, Default)]
pub struct Realized {
    pub runs: Vec<ReductionRun>,
    pub trace: ConstructionTrace,
}

impl Realized {
    /// Record the structural checks of `run` against the padding test `t`.
    pub(crate) fn structure(&mut self, run: &StreamRun, t: &Test, depth: usize) -> bool {
        let c = check_run(run, t, depth);
        let ok = c.all();
        self.trace.check("run-structure", ok, json!({"stream": run.source.name, "checks": c, "pad": run.pad.to_string()}));
        self.trace.absorb(run.events.iter().cloned());
        ok
    }

    pub(crate) fn record(&mut self, pre: String, oracle: Value, post: Value, verdict: bool, data: Value) {
        self.trace.check("contract", verdict, json!({"pre": pre, "oracle": oracle, "post": post, "data": data}));
        self.runs.push(ReductionRun { pre_output: pre, oracle_answer: oracle, post_output: post, verdict });
    }
}

/// Final deficiency of the output of `run` against `u`, `None` when the
/// output is captured by every component.
pub fn output_rd(run: &StreamRun, u: &Test) -> Option<usize> {
    let r = rd_at_stage(Point::Stream(&run.output()), u, u.max_stage());
    r.determined.then_some(r.value)
}
