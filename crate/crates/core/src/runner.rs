//! Selector dispatch, trace rendering and replay verification.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::constructions as c;
use crate::deficiency::{rd_final, Point};
use crate::enumeration::{descending_chain, index_shift, Enum, Test};
use crate::error::{Error, Result};
use crate::realizers::{self as r, ComposeStar, Delta02, FireRule, Identity, RdFromLay, Realized};
use crate::scenario::{OpenFamily, Overrides, Scenario, ScenarioFile, StagedCylinder, Stream, TreePair};
use crate::trace::{ConstructionTrace, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Construction,
    Reduction,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Entry {
    pub name: &'static str,
    pub kind: Kind,
    pub summary: &'static str,
}

pub const CATALOG: &[Entry] = &[
    Entry { name: "non_optimal_universal", kind: Kind::Construction, summary: "universal test whose component 0 misses the cylinders of a captured chain" },
    Entry { name: "totality_coding", kind: Kind::Construction, summary: "tests coding totality of tabled partial functions into containment" },
    Entry { name: "layerwise_diagonal", kind: Kind::Construction, summary: "open set no tabled functional decides layerwise" },
    Entry { name: "halting_overlay", kind: Kind::Construction, summary: "universal test over a stratified test that encodes halting into deficiency" },
    Entry { name: "right_shift_cones", kind: Kind::Construction, summary: "open set whose trace on a positive-measure tree is not closed" },
    Entry { name: "lay_to_lay", kind: Kind::Reduction, summary: "alternating layer advice to layer advice" },
    Entry { name: "rd_from_lay", kind: Kind::Reduction, summary: "exact deficiency from layer advice" },
    Entry { name: "product_merge", kind: Kind::Reduction, summary: "layer advice for a pair of streams" },
    Entry { name: "parallel_merge", kind: Kind::Reduction, summary: "one layer index for a finite list of streams" },
    Entry { name: "compose_star", kind: Kind::Reduction, summary: "composition of two layer reductions" },
    Entry { name: "lay_to_cn", kind: Kind::Reduction, summary: "layer advice through closed choice on the naturals" },
    Entry { name: "cn_times_mlr_to_lay", kind: Kind::Reduction, summary: "closed choice paired with a random stream, to layer advice" },
    Entry { name: "delta02_to_lay", kind: Kind::Reduction, summary: "membership in a set given by two tree families" },
    Entry { name: "semidecidable_to_rd_star", kind: Kind::Reduction, summary: "layerwise semi-decidable membership through two deficiency queries" },
];

pub fn lookup(name: &str) -> Result<&'static Entry> {
    CATALOG.iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<&str> = CATALOG.iter().map(|e| e.name).collect();
        Error::Validation(format!("unknown selector {name}; expected one of {}", names.join(", ")))
    })
}

/// Dead set for the cone construction: the scenario's, or else `U_i` for the
/// least `i` with `λ(U_{i,S}) < 1`.
pub fn cone_tree(sc: &Scenario, u: &Test) -> Result<Enum> {
    let s = sc.budgets.max_stage;
    if !sc.file.tree.is_empty() {
        return Enum::new(sc.file.tree.iter().map(|c| (c.stage, c.cylinder.clone())).collect(), s);
    }
    (0..u.len())
        .find(|&i| u.component(i).final_view().measure() < crate::Dyadic::one())
        .map(|i| u.component(i).clone())
        .ok_or_else(|| Error::Validation("every component of U has measure 1".into()))
}

/// The scenario's tree pair, or the clopen pair `A = U_{0,S}`: one `T_k` per
/// cylinder of `A` and a single `S_0` with dead region `A`.
pub fn tree_pair(sc: &Scenario, u: &Test) -> Result<TreePair> {
    if !sc.file.tree_pair.t.is_empty() || !sc.file.tree_pair.s.is_empty() {
        return Ok(sc.file.tree_pair.clone());
    }
    let a = u.component(0).final_view();
    let k = sc.budgets.max_depth;
    let mut t = Vec::new();
    for cyl in a.iter() {
        t.push(crate::Clopen::cylinder(cyl.clone()).complement(k)?.iter().cloned().collect());
    }
    Ok(TreePair { t, s: vec![a.iter().cloned().collect()] })
}

/// The scenario's open family, or `A = U_{0}` with no per-layer extras.
pub fn open_family(sc: &Scenario, u: &Test) -> OpenFamily {
    if !sc.file.open_family.set.is_empty() || !sc.file.open_family.layers.is_empty() {
        return sc.file.open_family.clone();
    }
    let set = u
        .component(0)
        .schedule()
        .iter()
        .map(|(stage, cylinder)| StagedCylinder { stage: *stage, cylinder: cylinder.clone() })
        .collect();
    OpenFamily { set, layers: BTreeMap::new() }
}

fn choice_instances(sc: &Scenario) -> Vec<Vec<u64>> {
    if sc.file.choice_instances.is_empty() {
        vec![vec![], vec![1, 2, 3, 4, 5]]
    } else {
        sc.file.choice_instances.clone()
    }
}

fn realized(mut out: Realized) -> ConstructionTrace {
    out.trace.output("runs", json!(out.runs));
    out.trace
}

/// Run one selector on a validated scenario.
pub fn run_selector(sc: &Scenario, select: &str) -> Result<ConstructionTrace> {
    lookup(select)?;
    sc.validate()?;
    let b = &sc.budgets;
    let k = b.max_depth;
    let u = sc.universal()?;
    let xs: Vec<Stream> = sc.random_streams().cloned().collect();
    let chain = || descending_chain(&u);
    let trace = match select {
        "non_optimal_universal" => c::non_optimal_universal(&u, b)?.trace,
        "totality_coding" => c::totality_coding(&u, &sc.partial_functions, b)?.trace,
        "layerwise_diagonal" => c::diagonal(&u, &sc.functionals, b)?.trace,
        "halting_overlay" => c::halting_overlay(&index_shift(&u, 2)?, &sc.file.halting, &sc.streams, b)?.trace,
        "right_shift_cones" => c::right_shift_cones(&cone_tree(sc, &u)?, b)?.trace,
        "lay_to_lay" => realized(r::lay_to_lay(sc.source(), &u, &xs, k)?),
        "rd_from_lay" => realized(r::rd_from_lay(sc.source(), &u, &xs, k)?),
        "product_merge" => {
            let pairs: Vec<(Stream, Stream)> = (0..xs.len())
                .flat_map(|i| [(xs[i].clone(), xs[i].clone()), (xs[i].clone(), xs[(i + 1) % xs.len()].clone())])
                .collect();
            realized(r::product_merge(&chain()?, &pairs, k)?)
        }
        "parallel_merge" => {
            let mut lists: Vec<Vec<Stream>> = xs.iter().map(|x| vec![x.clone()]).collect();
            lists.push(xs.clone());
            realized(r::parallel_merge(&chain()?, &lists, k)?)
        }
        "compose_star" => {
            let w = chain()?;
            let f = RdFromLay { v: sc.source().clone(), u: w.clone() };
            let star = ComposeStar { g: &Identity, f: &f, u: &w };
            let v = sc.source();
            realized(r::compose_star(&star, &xs, k, |x| rd_final(Point::Stream(x), v))?)
        }
        "lay_to_cn" => realized(r::lay_to_cn(&u, &xs)?),
        "cn_times_mlr_to_lay" => {
            let inst: Vec<(Vec<u64>, Stream)> =
                choice_instances(sc).into_iter().flat_map(|f| xs.iter().map(move |x| (f.clone(), x.clone()))).collect();
            realized(r::cn_times_mlr_to_lay(&u, FireRule::OnChange, &inst, k)?)
        }
        "delta02_to_lay" => {
            let w = chain()?;
            let red = Delta02::new(&w, &tree_pair(sc, &u)?, k);
            realized(r::delta02_to_lay(&red, &xs)?)
        }
        "semidecidable_to_rd_star" => {
            let w = chain()?;
            realized(r::semidecidable_to_rd_star(&w, &open_family(sc, &u), &xs, k)?)
        }
        _ => unreachable!("selector checked against the catalog"),
    };
    Ok(trace)
}

/// What is written into the first trace line and replayed by [`verify`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub select: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_index: Option<usize>,
}

impl RunConfig {
    pub fn overrides(&self) -> Overrides {
        Overrides { stages: self.stages, depth: self.depth, max_index: self.max_index }
    }
}

/// Full trace text: a config line embedding the scenario, then the trace.
pub fn run_text(file: &ScenarioFile, cfg: &RunConfig) -> Result<(String, ConstructionTrace)> {
    let sc = Scenario::build(file.clone(), &cfg.overrides())?;
    let trace = run_selector(&sc, &cfg.select)?;
    let head = json!({"stage": 0, "action": "config", "payload": {"config": cfg, "scenario": file}});
    let mut lines = vec![head.to_string()];
    lines.extend(trace.to_lines());
    let mut text = lines.join("\n");
    text.push('\n');
    Ok((text, trace))
}

pub fn load_file(text: &str) -> Result<ScenarioFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimTally {
    pub pass: usize,
    pub fail: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub select: String,
    pub deterministic: bool,
    /// First differing line (1-based) when the replay does not match.
    pub first_mismatch: Option<usize>,
    pub claims: BTreeMap<String, ClaimTally>,
    /// `(i, s)` budget checks on the universal test at the configured stride.
    pub budget_checks: usize,
    pub budget_violation: Option<(usize, usize)>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.deterministic && self.budget_violation.is_none() && self.claims.values().all(|t| t.fail == 0)
    }
}

/// Replay the run recorded in `text` and compare byte for byte.
pub fn verify(text: &str, stride: usize) -> Result<VerifyReport> {
    let first = text.lines().next().ok_or_else(|| Error::Parse("empty trace".into()))?;
    let head: Value = serde_json::from_str(first).map_err(|e| Error::Parse(format!("trace line 1: {e}")))?;
    if head["action"] != "config" {
        return Err(Error::Validation("trace does not start with a config record".into()));
    }
    let cfg: RunConfig = serde_json::from_value(head["payload"]["config"].clone())
        .map_err(|e| Error::Parse(format!("config record: {e}")))?;
    let file: ScenarioFile = serde_json::from_value(head["payload"]["scenario"].clone())
        .map_err(|e| Error::Validation(format!("trace/scenario mismatch: {e}")))?;
    let (replay, _) = run_text(&file, &cfg)?;
    let first_mismatch = if replay == text {
        None
    } else {
        let n = replay.lines().zip(text.lines()).position(|(a, b)| a != b);
        Some(n.unwrap_or_else(|| replay.lines().count().min(text.lines().count())) + 1)
    };
    let recorded = ConstructionTrace::parse_lines(text)?;
    let mut claims: BTreeMap<String, ClaimTally> = BTreeMap::new();
    for w in &recorded.witnesses {
        let t = claims.entry(w.claim.clone()).or_insert(ClaimTally { pass: 0, fail: 0 });
        match w.status {
            Status::Pass => t.pass += 1,
            Status::Fail => t.fail += 1,
        }
    }
    let sc = Scenario::build(file, &cfg.overrides())?;
    let (budget_checks, budget_violation) = sc.universal()?.budget_sweep(stride);
    Ok(VerifyReport {
        select: cfg.select,
        deterministic: first_mismatch.is_none(),
        first_mismatch,
        claims,
        budget_checks,
        budget_violation,
    })
}
