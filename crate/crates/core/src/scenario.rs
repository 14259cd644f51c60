//! Scenario files: budgets, registered tests, partial-function tables,
//! halting data, streams, and the auxiliary tables some runs consume.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::clopen::Clopen;
use crate::deficiency::{rd_at_stage, Point};
use crate::enumeration::{universal_sum, Enum, Test};
use crate::error::{Error, Result};

pub const MAX_INDEX_CAP: usize = 64;
pub const MAX_STAGE_CAP: usize = 1_000_000;
pub const MAX_DEPTH_CAP: usize = 64;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Budgets {
    #[serde(rename = "I")]
    pub max_index: usize,
    #[serde(rename = "S")]
    pub max_stage: usize,
    #[serde(rename = "K")]
    pub max_depth: usize,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub max_ell: Option<usize>,
}

impl Budgets {
    /// Stratification prefix bound, `K/2` unless given.
    pub fn ell(&self) -> usize {
        self.max_ell.unwrap_or(self.max_depth / 2)
    }

    pub fn check_caps(&self) -> Result<()> {
        if self.max_index > MAX_INDEX_CAP {
            return Err(Error::Validation(format!("I = {} exceeds cap {MAX_INDEX_CAP}", self.max_index)));
        }
        if self.max_stage > MAX_STAGE_CAP {
            return Err(Error::Validation(format!("S = {} exceeds cap {MAX_STAGE_CAP}", self.max_stage)));
        }
        if self.max_depth > MAX_DEPTH_CAP {
            return Err(Error::Validation(format!("K = {} exceeds cap {MAX_DEPTH_CAP}", self.max_depth)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Scheduled {
    pub stage: usize,
    #[serde(default)]
    pub component: usize,
    pub cylinder: Bits,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct StagedCylinder {
    #[serde(default)]
    pub stage: usize,
    pub cylinder: Bits,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TableEntry {
    pub arg: u64,
    pub stage: usize,
    pub value: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FunctionalEntry {
    pub prefix: Bits,
    pub advice: usize,
    pub value: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct HaltEntry {
    pub e: usize,
    pub stage: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct StreamSpec {
    pub name: String,
    #[serde(default)]
    pub pad: Bits,
    pub period: Bits,
    #[serde(default)]
    pub random: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct TreePair {
    /// Dead sets of the trees `T_k`: `σ ∈ T_k` iff no prefix of `σ` is listed.
    #[serde(default)]
    pub t: Vec<Vec<Bits>>,
    #[serde(default)]
    pub s: Vec<Vec<Bits>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct OpenFamily {
    /// Shared enumeration of `U_n` for every `n`.
    #[serde(default)]
    pub set: Vec<StagedCylinder>,
    /// Extra per-layer cylinders, keyed by layer index.
    #[serde(default)]
    pub layers: BTreeMap<usize, Vec<StagedCylinder>>,
}

/// The on-disk scenario format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub budgets: Budgets,
    pub tests: Vec<Vec<Scheduled>>,
    #[serde(default)]
    pub partial_functions: BTreeMap<usize, Vec<TableEntry>>,
    #[serde(default)]
    pub halting: Vec<HaltEntry>,
    #[serde(default)]
    pub streams: Vec<StreamSpec>,
    #[serde(default)]
    pub functionals: BTreeMap<usize, Vec<FunctionalEntry>>,
    /// Registered test used as the source side of reductions.
    #[serde(default)]
    pub source_test: usize,
    /// Dead set, as a staged enumeration, of the tree used by the cone construction.
    #[serde(default)]
    pub tree: Vec<StagedCylinder>,
    #[serde(default)]
    pub tree_pair: TreePair,
    #[serde(default)]
    pub open_family: OpenFamily,
    /// Finite prefixes of closed-choice instances `f`, zero beyond the prefix.
    #[serde(default)]
    pub choice_instances: Vec<Vec<u64>>,
}

/// An eventually periodic sequence `pad⌢period^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stream {
    pub name: String,
    pub pad: Bits,
    pub period: Bits,
    pub random: bool,
}

impl Stream {
    pub fn new(name: &str, pad: Bits, period: Bits) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Validation(format!("stream {name} has an empty period")));
        }
        Ok(Stream { name: name.to_string(), pad, period, random: false })
    }

    pub fn bit(&self, n: usize) -> bool {
        if n < self.pad.len() {
            self.pad.get(n)
        } else {
            self.period.get((n - self.pad.len()) % self.period.len())
        }
    }

    pub fn prefix(&self, n: usize) -> Bits {
        Bits::from_bools((0..n).map(|k| self.bit(k)))
    }

    /// `p⌢self`.
    pub fn prepend(&self, p: &Bits) -> Stream {
        Stream { name: self.name.clone(), pad: p.concat(&self.pad), period: self.period.clone(), random: self.random }
    }

    pub fn in_clopen(&self, c: &Clopen) -> bool {
        c.contains_point(|n| self.bit(n))
    }
}

/// Partial function table: `arg ↦ (convergence stage, value)`; absence is divergence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialFn {
    pub entries: Vec<TableEntry>,
}

impl PartialFn {
    /// Value of `Φ_s(n)` when it has converged by stage `s`.
    pub fn converged(&self, n: u64, s: usize) -> Option<u64> {
        self.entries.iter().find(|e| e.arg == n && e.stage <= s).map(|e| e.value)
    }
}

/// Functional on strings with advice: a prefix table, monotone in the string.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Functional {
    pub entries: Vec<FunctionalEntry>,
}

impl Functional {
    pub fn new(entries: Vec<FunctionalEntry>) -> Self {
        Functional { entries }
    }

    /// `Φ(σ)(advice)`: the value of the shortest matching entry whose prefix
    /// is a prefix of `σ`.
    pub fn eval(&self, s: &Bits, advice: usize) -> Option<u64> {
        self.entries
            .iter()
            .filter(|e| e.advice == advice && e.prefix.is_prefix_of(s))
            .min_by_key(|e| e.prefix.len())
            .map(|e| e.value)
    }

    pub fn eval_stream(&self, x: &Stream, advice: usize) -> Option<u64> {
        self.entries
            .iter()
            .filter(|e| e.advice == advice && e.prefix == x.prefix(e.prefix.len()))
            .min_by_key(|e| e.prefix.len())
            .map(|e| e.value)
    }

    pub fn prefixes(&self, advice: usize) -> std::collections::BTreeSet<Bits> {
        self.entries.iter().filter(|e| e.advice == advice).map(|e| e.prefix.clone()).collect()
    }
}

/// A loaded scenario with its tests built and budgets checked.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub budgets: Budgets,
    pub tests: Vec<Test>,
    pub partial_functions: BTreeMap<usize, PartialFn>,
    pub functionals: BTreeMap<usize, Functional>,
    pub streams: Vec<Stream>,
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub stages: Option<usize>,
    pub depth: Option<usize>,
    pub max_index: Option<usize>,
}

impl Scenario {
    pub fn from_path(path: &Path, ov: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, ov)
    }

    pub fn from_json(text: &str, ov: &Overrides) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::build(file, ov)
    }

    pub fn build(mut file: ScenarioFile, ov: &Overrides) -> Result<Self> {
        if let Some(s) = ov.stages {
            file.budgets.max_stage = s;
        }
        if let Some(k) = ov.depth {
            file.budgets.max_depth = k;
        }
        if let Some(i) = ov.max_index {
            file.budgets.max_index = i;
        }
        let b = file.budgets.clone();
        b.check_caps()?;
        let (s_max, k_max, i_max) = (b.max_stage, b.max_depth, b.max_index);
        let check_cyl = |c: &Bits| -> Result<()> {
            if c.len() > k_max {
                return Err(Error::DepthExceeded { len: c.len(), bound: k_max });
            }
            Ok(())
        };
        let mut tests = Vec::with_capacity(file.tests.len());
        for (e, items) in file.tests.iter().enumerate() {
            // Member e may extend to index I+e+1 so the universal sum is untruncated.
            let top = i_max + e + 1;
            let mut per: Vec<Vec<(usize, Bits)>> = vec![Vec::new(); top + 1];
            for it in items {
                check_cyl(&it.cylinder)?;
                if it.component > top {
                    return Err(Error::OutOfBudget(format!("test {e}: component {} > {top}", it.component)));
                }
                if it.stage > s_max {
                    return Err(Error::OutOfBudget(format!("test {e}: stage {} > S = {s_max}", it.stage)));
                }
                per[it.component].push((it.stage, it.cylinder.clone()));
            }
            let comps = per.into_iter().map(|sch| Enum::new(sch, s_max)).collect::<Result<Vec<_>>>()?;
            let t = Test::new(comps, false).map_err(|err| match err {
                Error::BudgetViolation(m) => Error::BudgetViolation(format!("test {e}: {m}")),
                other => other,
            })?;
            tests.push(t);
        }
        let mut streams = Vec::new();
        for sp in &file.streams {
            let mut st = Stream::new(&sp.name, sp.pad.clone(), sp.period.clone())?;
            st.random = sp.random;
            streams.push(st);
        }
        for c in file.tree.iter().map(|c| &c.cylinder).chain(file.open_family.set.iter().map(|c| &c.cylinder)) {
            check_cyl(c)?;
        }
        let partial_functions =
            file.partial_functions.iter().map(|(k, v)| (*k, PartialFn { entries: v.clone() })).collect();
        let functionals = file.functionals.iter().map(|(k, v)| (*k, Functional::new(v.clone()))).collect();
        if !file.tests.is_empty() && file.source_test >= file.tests.len() {
            return Err(Error::Validation(format!("source_test {} not registered", file.source_test)));
        }
        Ok(Scenario { budgets: b, file, tests, partial_functions, functionals, streams })
    }

    pub fn universal(&self) -> Result<Test> {
        Ok(universal_sum(&self.tests, self.budgets.max_index)?.0)
    }

    pub fn source(&self) -> &Test {
        &self.tests[self.file.source_test]
    }

    pub fn random_streams(&self) -> impl Iterator<Item = &Stream> {
        self.streams.iter().filter(|s| s.random)
    }

    /// Scenario-level checks beyond those done while loading: a padding
    /// reservoir inside every component of the universal sum at stage 0, and
    /// every stream declared random escaping some component at the last stage.
    pub fn validate(&self) -> Result<()> {
        let u = self.universal()?;
        let mut acc = u.view(0, 0).clone();
        for k in 0..=u.top() {
            if k > 0 {
                acc = acc.intersect(u.view(k, 0));
            }
            if acc.is_empty() {
                return Err(Error::SearchExhausted(format!(
                    "no padding reservoir: the intersection of U_0..U_{k} at stage 0 is empty"
                )));
            }
        }
        let s = self.budgets.max_stage;
        for x in self.random_streams() {
            let r = rd_at_stage(Point::Stream(x), &u, s);
            if r.value > u.top() {
                return Err(Error::Validation(format!("stream {} is declared random but lies in every component", x.name)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;

    const TINY: &str = r#"{
        "budgets": {"I": 2, "S": 4, "K": 8},
        "tests": [[
            {"stage": 0, "component": 0, "cylinder": "0"},
            {"stage": 0, "component": 1, "cylinder": "00"},
            {"stage": 0, "component": 2, "cylinder": "000"},
            {"stage": 0, "component": 3, "cylinder": "0000"}
        ]],
        "streams": [{"name": "x", "pad": "1", "period": "10", "random": true}]
    }"#;

    #[test]
    fn loads_and_validates() {
        let sc = Scenario::from_json(TINY, &Overrides::default()).unwrap();
        assert_eq!(sc.tests[0].len(), 4);
        sc.validate().unwrap();
        assert_eq!(sc.budgets.ell(), 4);
        assert_eq!(sc.streams[0].prefix(5), bits("11010"));
    }

    #[test]
    fn caps_and_reservoir() {
        let ov = Overrides { depth: Some(65), ..Default::default() };
        assert!(matches!(Scenario::from_json(TINY, &ov), Err(Error::Validation(_))));
        let no_res = TINY.replace(r#""cylinder": "0000""#, r#""cylinder": "1111""#);
        let sc = Scenario::from_json(&no_res, &Overrides::default()).unwrap();
        let err = sc.validate().unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("U_0..U_2"), "{err}");
    }

    #[test]
    fn functional_lookup() {
        let f = Functional::new(vec![
            FunctionalEntry { prefix: bits("01"), advice: 2, value: 1 },
            FunctionalEntry { prefix: bits("0"), advice: 2, value: 0 },
        ]);
        assert_eq!(f.eval(&bits("011"), 2), Some(0));
        assert_eq!(f.eval(&bits("1"), 2), None);
        assert_eq!(f.eval(&bits("011"), 1), None);
    }
}
