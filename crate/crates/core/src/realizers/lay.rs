//! Transducers into the layer problem and the exact deficiency problem.

use std::collections::BTreeSet;

use serde_json::json;

use super::{describe, output_rd, upto, Realized, Reduction, StreamRun};
use crate::bits::pair;
use crate::deficiency::{rd_at_stage, rd_final, Point};
use crate::enumeration::{shift_union, Test};
use crate::error::Result;
use crate::scenario::Stream;

/// Alternating-layer advice to layer advice: watch the shifted union
/// `V'_k = ∪_{j>k} V_j`, and each time `X ∈ V'_{k,s}` pad into
/// `∩_{i≤k+1} U_{i,s}` and move to `k+1`. `Ψ` is the identity.
#[derive(Clone, Debug)]
pub struct LayToLay {
    pub vprime: Test,
    pub u: Test,
}

impl LayToLay {
    pub fn new(v: &Test, u: &Test) -> Result<Self> {
        Ok(LayToLay { vprime: shift_union(v)?, u: u.clone() })
    }
}

impl Reduction for LayToLay {
    type In = Stream;
    type Out = usize;

    fn phi(&self, x: &Stream) -> Result<StreamRun> {
        let mut run = StreamRun::new(x);
        let mut k = 0;
        for s in self.vprime.all_change_stages() {
            while k <= self.vprime.top() && x.in_clopen(self.vprime.view(k, s)) {
                if k + 1 > self.u.top() {
                    run.note(s, "truncated", json!({"k": k, "top": self.u.top()}));
                }
                run.commit(&self.u, upto(k + 1, &self.u), s, "shifted-union")?;
                k += 1;
            }
        }
        Ok(run)
    }

    fn psi(&self, _x: &Stream, advice: usize) -> Option<usize> {
        Some(advice)
    }
}

/// Every `i ≥ rd(Φ(X))` must be a layer of `X` in `V`. Index 0 is excluded: the
/// shifted union cannot see `V_0`.
pub fn lay_to_lay(v: &Test, u: &Test, xs: &[Stream], depth: usize) -> Result<Realized> {
    let red = LayToLay::new(v, u)?;
    let mut out = Realized::default();
    let s_final = v.max_stage();
    for x in xs {
        let run = red.phi(x)?;
        let ok = out.structure(&run, u, depth);
        let rd = output_rd(&run, u);
        let bad = rd.map(|r| (r.max(1)..=v.top()).filter(|&i| x.in_clopen(v.view(i, s_final))).collect::<Vec<_>>());
        let verdict = ok && bad.as_ref().is_some_and(Vec::is_empty);
        out.record(
            describe(&run),
            json!(rd),
            json!(rd.and_then(|r| red.psi(x, r))),
            verdict,
            json!({"stream": x.name, "not_layers": bad}),
        );
    }
    Ok(out)
}

/// Layer advice to exact deficiency: each time `X ∈ V_{k,s}` pad into
/// `∩_{i≤s} U_{i,s}` so that `rd(Φ(X)) > s`; then `Ψ(X, k)` is the least `i`
/// with `X ∉ V_{i,k}`.
#[derive(Clone, Debug)]
pub struct RdFromLay {
    pub v: Test,
    pub u: Test,
}

impl Reduction for RdFromLay {
    type In = Stream;
    type Out = usize;

    fn phi(&self, x: &Stream) -> Result<StreamRun> {
        let mut run = StreamRun::new(x);
        let mut k = 0;
        for s in self.v.all_change_stages() {
            while k <= self.v.top() && x.in_clopen(self.v.view(k, s)) {
                if s > self.u.top() {
                    run.note(s, "truncated", json!({"k": k, "top": self.u.top()}));
                }
                run.commit(&self.u, upto(s, &self.u), s, "layer")?;
                k += 1;
            }
        }
        Ok(run)
    }

    fn psi(&self, x: &Stream, advice: usize) -> Option<usize> {
        Some((0..self.v.len()).find(|&i| !x.in_clopen(self.v.view(i, advice))).unwrap_or(self.v.len()))
    }
}

/// `Ψ` must return the final deficiency of `X` at every advice `≥ rd(Φ(X))`.
pub fn rd_from_lay(v: &Test, u: &Test, xs: &[Stream], depth: usize) -> Result<Realized> {
    let red = RdFromLay { v: v.clone(), u: u.clone() };
    let mut out = Realized::default();
    for x in xs {
        let run = red.phi(x)?;
        let ok = out.structure(&run, u, depth);
        let rd = output_rd(&run, u);
        let truth = rd_final(Point::Stream(x), v);
        // Ψ only changes at change stages of `v`.
        let wrong = rd.map(|r| {
            let mut adv: BTreeSet<usize> = v.all_change_stages().into_iter().filter(|&s| s >= r).collect();
            adv.insert(r);
            adv.insert(v.max_stage().max(r));
            adv.into_iter().filter(|&a| red.psi(x, a) != Some(truth)).collect::<Vec<_>>()
        });
        let verdict = ok && truth <= v.top() && wrong.as_ref().is_some_and(Vec::is_empty);
        out.record(
            describe(&run),
            json!(rd),
            json!(rd.and_then(|r| red.psi(x, r))),
            verdict,
            json!({"stream": x.name, "rd_source": truth, "wrong_advice": wrong}),
        );
    }
    Ok(out)
}

/// Product merge over a nested `u`: pad into `U_{m-1}` whenever
/// `m = max(rd_s X, rd_s Y)` grows. The decoder is `n ↦ (n, n)`.
#[derive(Clone, Debug)]
pub struct ProductMerge {
    pub u: Test,
}

impl Reduction for ProductMerge {
    type In = (Stream, Stream);
    type Out = (usize, usize);

    fn phi(&self, (x, y): &(Stream, Stream)) -> Result<StreamRun> {
        let mut run = StreamRun::new(x);
        let mut m_prev = 0;
        for s in self.u.all_change_stages() {
            let dx = rd_at_stage(Point::Stream(x), &self.u, s).value;
            let dy = rd_at_stage(Point::Stream(y), &self.u, s).value;
            let m = dx.max(dy);
            if m > m_prev {
                run.note(s, "max-deficiency", json!({"m": m, "x": dx, "y": dy}));
                run.commit(&self.u, upto(m - 1, &self.u), s, "max-deficiency")?;
                m_prev = m;
            }
        }
        Ok(run)
    }

    fn psi(&self, _x: &(Stream, Stream), advice: usize) -> Option<(usize, usize)> {
        Some((advice, advice))
    }
}

pub fn product_merge(u: &Test, pairs: &[(Stream, Stream)], depth: usize) -> Result<Realized> {
    let red = ProductMerge { u: u.clone() };
    let mut out = Realized::default();
    for p in pairs {
        let run = red.phi(p)?;
        let ok = out.structure(&run, u, depth);
        let rd = output_rd(&run, u);
        let (dx, dy) = (rd_final(Point::Stream(&p.0), u), rd_final(Point::Stream(&p.1), u));
        let decoded = rd.and_then(|r| red.psi(p, r));
        let escapes = decoded.is_some_and(|(a, b)| {
            (a..=u.top()).all(|m| !p.0.in_clopen(u.component(m).final_view()))
                && (b..=u.top()).all(|m| !p.1.in_clopen(u.component(m).final_view()))
        });
        let verdict = ok && rd.is_some_and(|r| r >= dx.max(dy)) && escapes;
        out.record(
            format!("{} with {}", describe(&run), p.1.name),
            json!(rd),
            json!(decoded),
            verdict,
            json!({"x": p.0.name, "y": p.1.name, "rd_x": dx, "rd_y": dy}),
        );
    }
    Ok(out)
}

/// Parallel merge over a nested `u`: dovetail over `q = ⟨i, ⟨n, t⟩⟩` and pad into
/// `∩_{m≤n} U_{m,q}` when `X_i ∈ U_{n,t}` but the pad is not yet inside.
#[derive(Clone, Debug)]
pub struct ParallelMerge {
    pub u: Test,
}

impl Reduction for ParallelMerge {
    type In = Vec<Stream>;
    type Out = Vec<usize>;

    fn phi(&self, xs: &Vec<Stream>) -> Result<StreamRun> {
        let first = xs.first().cloned().unwrap_or_else(|| Stream::new("empty", crate::Bits::empty(), crate::bits::bits("0")).expect("nonempty period"));
        let mut run = StreamRun::new(&first);
        let s_final = self.u.max_stage();
        // Membership of X_i in U_n only changes at change stages of U_n, and a
        // pad once inside stays inside, so other `t` never trigger.
        let mut order: Vec<(u64, usize, usize, usize)> = Vec::new();
        for i in 0..xs.len() {
            for n in 0..=self.u.top() {
                for t in self.u.change_stages_of(&[n]) {
                    order.push((pair(i as u64, pair(n as u64, t as u64)), i, n, t));
                }
            }
        }
        order.sort_unstable();
        for (q, i, n, t) in order {
            let s = usize::try_from(q).unwrap_or(usize::MAX).min(s_final);
            if xs[i].in_clopen(self.u.view(n, t)) && !self.u.intersection_upto(n, s).covers(&run.pad) {
                run.note(s, "dovetail", json!({"q": q, "i": i, "n": n, "t": t}));
                run.commit(&self.u, upto(n, &self.u), s, "dovetail")?;
            }
        }
        Ok(run)
    }

    fn psi(&self, xs: &Vec<Stream>, advice: usize) -> Option<Vec<usize>> {
        Some(vec![advice; xs.len()])
    }
}

pub fn parallel_merge(u: &Test, lists: &[Vec<Stream>], depth: usize) -> Result<Realized> {
    let red = ParallelMerge { u: u.clone() };
    let mut out = Realized::default();
    for xs in lists {
        let run = red.phi(xs)?;
        let ok = out.structure(&run, u, depth);
        let rd = output_rd(&run, u);
        let need = xs.iter().map(|x| rd_final(Point::Stream(x), u)).max().unwrap_or(0);
        let decoded = rd.and_then(|r| red.psi(xs, r));
        let escapes = decoded.as_ref().is_some_and(|ns| {
            xs.iter().zip(ns).all(|(x, &n)| (n..=u.top()).all(|m| !x.in_clopen(u.component(m).final_view())))
        });
        let verdict = ok && rd.is_some_and(|r| r >= need) && escapes;
        let names: Vec<&str> = xs.iter().map(|x| x.name.as_str()).collect();
        out.record(
            format!("{}+[{}]", run.pad, names.join(",")),
            json!(rd),
            json!(decoded),
            verdict,
            json!({"streams": names, "max_rd": need}),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{bits, Bits};
    use crate::enumeration::{descending_chain, Enum};

    /// `U_i = [0^{i+2}] ∪ [1^{i+2}]` over stages 0..=4, `1^{i+2}` arriving at stage 2.
    fn reservoir(top: usize) -> Test {
        let comps = (0..=top)
            .map(|i| Enum::new(vec![(0, Bits::repeat(false, i + 2)), (2, Bits::repeat(true, i + 2))], 4).unwrap())
            .collect();
        Test::new(comps, true).unwrap()
    }

    fn stream(name: &str, pad: &str, period: &str) -> Stream {
        let mut x = Stream::new(name, bits(pad), bits(period)).unwrap();
        x.random = true;
        x
    }

    #[test]
    fn rd_from_lay_recovers_deficiency() {
        let u = reservoir(8);
        let v = reservoir(8);
        let x = stream("x", "1110", "10");
        let r = rd_from_lay(&v, &u, std::slice::from_ref(&x), 16).unwrap();
        assert!(r.trace.all_pass(), "{:?}", r.trace.failures().collect::<Vec<_>>());
        assert_eq!(rd_final(Point::Stream(&x), &v), 2);
    }

    #[test]
    fn non_member_is_copied() {
        let u = reservoir(6);
        let red = RdFromLay { v: u.clone(), u: u.clone() };
        let x = stream("x", "10", "01");
        let run = red.phi(&x).unwrap();
        assert!(run.pad.is_empty());
        assert_eq!(run.output().prefix(10), x.prefix(10));
    }

    #[test]
    fn merges_bound_every_deficiency() {
        let u = descending_chain(&reservoir(8)).unwrap();
        let x = stream("x", "110", "10");
        let y = stream("y", "11110", "10");
        let z = stream("z", "10", "1");
        let p = product_merge(&u, &[(x.clone(), y.clone())], 16).unwrap();
        assert!(p.trace.all_pass(), "{:?}", p.trace.failures().collect::<Vec<_>>());
        let q = parallel_merge(&u, &[vec![x, y, z]], 16).unwrap();
        assert!(q.trace.all_pass(), "{:?}", q.trace.failures().collect::<Vec<_>>());
    }

    #[test]
    fn shifted_union_advice() {
        let u = reservoir(8);
        let x = stream("x", "1110", "01");
        let r = lay_to_lay(&u, &u, &[x], 16).unwrap();
        assert!(r.trace.all_pass(), "{:?}", r.trace.failures().collect::<Vec<_>>());
    }
}
