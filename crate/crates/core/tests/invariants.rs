use cantor_lab::deficiency::{rd_at_stage, Point};
use cantor_lab::enumeration::{descending_chain, even_shift, index_shift, shift_union, stratify, universal_sum, Enum, Test};
use cantor_lab::realizers::{check_run, output_rd, RdFromLay, Reduction};
use cantor_lab::scenario::Stream;
use cantor_lab::Bits;
use proptest::prelude::*;

const TOP: usize = 6;
const STAGES: usize = 10;

fn bits_of(len: usize) -> impl Strategy<Value = Bits> {
    prop::collection::vec(any::<bool>(), len).prop_map(Bits::from_bools)
}

/// Component `i` gets up to two cylinders of length `i+2`; measure stays within `2^-i`.
fn test_strategy() -> impl Strategy<Value = Test> {
    let comps: Vec<_> = (0..=TOP)
        .map(|i| prop::collection::vec((0..=STAGES, bits_of(i + 2)), 0..=2))
        .collect();
    comps.prop_map(|per| {
        let comps = per.into_iter().map(|sch| Enum::new(sch, STAGES).unwrap()).collect();
        Test::new(comps, false).unwrap()
    })
}

/// A nested test: component `i` is the zero reservoir `[0^{i+2}]` from stage 0
/// plus, for each `j ≥ i`, a cylinder `[1 b_j]` with `|b_j| = j+1` from stage `s_j`.
fn reservoir_strategy() -> impl Strategy<Value = Test> {
    let extra: Vec<_> = (0..=TOP).map(|j| (0..=STAGES, bits_of(j + 1))).collect();
    extra.prop_map(|ex| {
        let comps = (0..=TOP)
            .map(|i| {
                let mut sch = vec![(0, Bits::repeat(false, i + 2))];
                sch.extend(ex[i..].iter().map(|(s, b)| (*s, Bits::empty().pushed(true).concat(b))));
                Enum::new(sch, STAGES).unwrap()
            })
            .collect();
        Test::new(comps, true).unwrap()
    })
}

fn stream_strategy() -> impl Strategy<Value = Stream> {
    (prop::collection::vec(any::<bool>(), 0..6), prop::collection::vec(any::<bool>(), 1..4)).prop_map(|(p, q)| {
        let pad = Bits::empty().pushed(true).concat(&Bits::from_bools(p));
        Stream::new("x", pad, Bits::from_bools(q).pushed(true)).unwrap()
    })
}

fn budgets_hold(t: &Test) -> bool {
    t.budget_sweep(1).1.is_none()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn views_grow_with_stage(t in test_strategy()) {
        for i in 0..t.len() {
            for s in 1..=STAGES {
                prop_assert!(t.view(i, s - 1).subset(t.view(i, s)));
            }
        }
    }

    #[test]
    fn combinators_keep_budgets(t in test_strategy(), t2 in test_strategy()) {
        prop_assert!(budgets_hold(&descending_chain(&t).unwrap()));
        prop_assert!(budgets_hold(&shift_union(&t).unwrap()));
        prop_assert!(budgets_hold(&index_shift(&t, 2).unwrap()));
        prop_assert!(budgets_hold(&even_shift(&t).unwrap()));
        prop_assert!(budgets_hold(&stratify(&t, 4, 4 + 1 + TOP + 2).unwrap()));
        let (u, _) = universal_sum(&[t, t2], TOP - 2).unwrap();
        prop_assert!(budgets_hold(&u));
    }

    #[test]
    fn descending_chain_is_nested(t in test_strategy()) {
        let d = descending_chain(&t).unwrap();
        for i in 1..d.len() {
            for s in 0..=STAGES {
                prop_assert!(d.view(i, s).subset(d.view(i - 1, s)));
            }
        }
    }

    #[test]
    fn deficiency_never_drops(t in test_strategy(), x in stream_strategy()) {
        let mut prev = 0;
        for s in 0..=STAGES {
            let r = rd_at_stage(Point::Stream(&x), &t, s);
            prop_assert!(r.value >= prev);
            prev = r.value;
        }
    }

    #[test]
    fn measure_is_additive(a in test_strategy()) {
        let (p, q) = (a.view(1, STAGES), a.view(2, STAGES));
        let lhs = &p.union(q).measure() + &p.intersect(q).measure();
        prop_assert_eq!(lhs, &p.measure() + &q.measure());
        prop_assert!(p.difference(q).measure() <= p.measure());
    }

    #[test]
    fn transducer_runs_are_monotone_and_shaped(v in test_strategy(), u in reservoir_strategy(), x in stream_strategy()) {
        let red = RdFromLay { v, u: u.clone() };
        let run = red.phi(&x).unwrap();
        let checks = check_run(&run, &u, 24);
        prop_assert!(checks.all(), "{:?}", checks);
    }

    #[test]
    fn deficiency_decoder_is_stable(v in test_strategy(), u in reservoir_strategy(), x in stream_strategy()) {
        let red = RdFromLay { v: v.clone(), u: u.clone() };
        let run = red.phi(&x).unwrap();
        if let Some(rd) = output_rd(&run, &u) {
            let first = red.psi(&x, rd);
            for adv in rd..=STAGES.max(rd) {
                prop_assert_eq!(red.psi(&x, adv), first);
            }
        }
    }
}
