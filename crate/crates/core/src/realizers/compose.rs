//! Compositional product of two reductions to the layer problem.

use std::collections::BTreeMap;

use serde_json::json;

use super::{upto, Reduction, StreamRun};
use crate::deficiency::{rd_final, Point};
use crate::enumeration::Test;
use crate::error::{Error, Result};
use crate::scenario::Stream;

/// `Φ = id`, `Ψ(X, n) = X`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Reduction for Identity {
    type In = Stream;
    type Out = Stream;

    fn phi(&self, x: &Stream) -> Result<StreamRun> {
        Ok(StreamRun::new(x))
    }

    fn psi(&self, x: &Stream, _advice: usize) -> Option<Stream> {
        Some(x.clone())
    }
}

/// `f ∘ g` from `g, f ≤ LAY` over a nested `u`: `Φ(X) = ⟨Y, W⟩` with
/// `Y = Φ_g(X)` and `W` a padded copy of `Y`, and
/// `Ψ(X, (n, m)) = Ψ_f(Ψ_g(X, n), m)`.
pub struct ComposeStar<'a, G, F> {
    pub g: &'a G,
    pub f: &'a F,
    pub u: &'a Test,
}

#[derive(Clone, Debug)]
pub struct StarRun {
    pub y: StreamRun,
    pub w: StreamRun,
    /// `(stage, new value)` for each increment.
    pub d_y: Vec<(usize, usize)>,
    pub d_z: Vec<(usize, usize)>,
    /// `Φ_f(Ψ_g(X, d))` for every `d` the search looked at.
    pub z: BTreeMap<usize, StreamRun>,
}

impl StarRun {
    pub fn final_d_y(&self) -> usize {
        self.d_y.last().map_or(0, |p| p.1)
    }

    pub fn final_d_z(&self) -> usize {
        self.d_z.last().map_or(0, |p| p.1)
    }
}

impl<G, F> ComposeStar<'_, G, F>
where
    G: Reduction<In = Stream>,
    F: Reduction<In = G::Out>,
{
    fn z_for(&self, x: &Stream, d: usize) -> Result<StreamRun> {
        let r = self
            .g
            .psi(x, d)
            .ok_or_else(|| Error::SearchExhausted(format!("inner decoder diverges on {} at advice {d}", x.name)))?;
        self.f.phi(&r)
    }

    /// The inner transducers are run to completion first; the search then
    /// reads their final streams stage by stage.
    pub fn phi(&self, x: &Stream) -> Result<StarRun> {
        let y = self.g.phi(x)?;
        let yo = y.output();
        let mut w = StreamRun::new(&yo);
        let top = self.u.top();
        let (mut dy, mut dz) = (0usize, 0usize);
        let mut run = StarRun { y, w: StreamRun::new(&yo), d_y: Vec::new(), d_z: Vec::new(), z: BTreeMap::new() };
        run.z.insert(0, self.z_for(x, 0)?);
        for s in self.u.all_change_stages() {
            loop {
                let mut moved = false;
                if dy <= top && yo.in_clopen(self.u.view(dy, s)) {
                    dy += 1;
                    run.d_y.push((s, dy));
                    w.note(s, "d_y", json!({"d_y": dy}));
                    if let std::collections::btree_map::Entry::Vacant(e) = run.z.entry(dy) {
                        e.insert(self.z_for(x, dy)?);
                    }
                    moved = true;
                }
                let zo = run.z[&dy].output();
                if dz <= top && zo.in_clopen(self.u.view(dz, s)) {
                    w.commit(self.u, upto(dz, self.u), s, "inner-deficiency")?;
                    dz += 1;
                    run.d_z.push((s, dz));
                    moved = true;
                }
                if !moved {
                    break;
                }
            }
        }
        run.w = w;
        Ok(run)
    }

    pub fn psi(&self, x: &Stream, n: usize, m: usize) -> Option<F::Out> {
        self.f.psi(&self.g.psi(x, n)?, m)
    }
}

/// Claims shared by every use of [`ComposeStar`]; returns the advice pair
/// `(rd Y, rd W)` when both are determined.
pub(crate) fn star_claims(
    out: &mut super::Realized,
    run: &StarRun,
    u: &Test,
    depth: usize,
) -> Option<(usize, usize)> {
    let ok_y = out.structure(&run.y, u, depth);
    let ok_w = out.structure(&run.w, u, depth);
    let yo = run.y.output();
    let n = rd_final(Point::Stream(&yo), u);
    let m = rd_final(Point::Stream(&run.w.output()), u);
    let z_final = run.z.get(&run.final_d_y()).map(|z| rd_final(Point::Stream(&z.output()), u));
    let stable_y = run.d_y.last().map_or(0, |p| p.0);
    let dz_at = run.d_z.iter().rfind(|p| p.0 <= stable_y).map_or(0, |p| p.1);
    let settles = z_final.is_some_and(|rz| run.final_d_z() == dz_at.max(rz).min(u.top() + 1));
    let name = &run.y.source.name;
    out.trace.check(
        "compose-d-y",
        ok_y && run.final_d_y() == n,
        json!({"stream": name, "d_y": run.final_d_y(), "rd_y": n}),
    );
    out.trace.check(
        "compose-d-z",
        ok_w && settles && z_final.is_some_and(|rz| m >= rz),
        json!({"stream": name, "d_z": run.final_d_z(), "d_z_when_d_y_settled": dz_at, "rd_z": z_final, "rd_w": m}),
    );
    (n <= u.top() && m <= u.top()).then_some((n, m))
}

/// `f ∘ g` on every stream; `expect` gives the composite's correct answer.
pub fn compose_star<G, F>(
    star: &ComposeStar<'_, G, F>,
    xs: &[Stream],
    depth: usize,
    expect: impl Fn(&Stream) -> F::Out,
) -> Result<super::Realized>
where
    G: Reduction<In = Stream>,
    F: Reduction<In = G::Out>,
    F::Out: serde::Serialize,
{
    let mut out = super::Realized::default();
    for x in xs {
        let run = star.phi(x)?;
        let advice = star_claims(&mut out, &run, star.u, depth);
        let got = advice.and_then(|(n, m)| star.psi(x, n, m));
        let want = expect(x);
        let verdict = got.as_ref() == Some(&want);
        out.record(
            format!("<{}, {}>", super::describe(&run.y), super::describe(&run.w)),
            json!(advice),
            json!(got),
            verdict,
            json!({"stream": x.name, "expected": want}),
        );
    }
    Ok(out)
}
