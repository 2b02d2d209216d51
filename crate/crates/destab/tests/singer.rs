mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{dl_rewrite, fixtures, Strategy, FIXTURES};
use destab::f2linalg::F2Vec;
use destab::modlib::builtin;
use destab::singer::{singer_d, Engine, SingerError};

/// `d(Q^I x) = sum_i Q^I Q^{i-1}(x Sq^i)` expanded by the oracle rewriter.
fn oracle_d(m: &destab::amodule::FModule, gen: usize, gdeg: i64, upper: &[i64]) -> BTreeSet<(usize, Vec<i64>)> {
    let top = m.degree_of(gen) - m.min_degree().unwrap();
    let mut out = BTreeSet::new();
    for i in 0..=top {
        for z in m.sq(gen, i as u32) {
            let mut word = upper.to_vec();
            word.push(i - 1);
            for lower in dl_rewrite(&word, gdeg - i + 1, Strategy::Leftmost) {
                let key = (z, lower);
                if !out.remove(&key) {
                    out.insert(key);
                }
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn differential_matches_oracle(i in 0..FIXTURES.len(), j in -2i64..3, s in 0usize..3, pick in any::<prop::sample::Index>()) {
        let m = builtin(FIXTURES[i]).unwrap();
        let r = destab::dlfree::build_rs(&m.suspend(j), s, 14);
        prop_assume!(!r.monos.is_empty());
        let y = &r.monos[pick.index(r.monos.len())];
        let ours: BTreeSet<(usize, Vec<i64>)> = singer_d(y, &m).iter().map(|t| (t.gen, t.idx.to_vec())).collect();
        prop_assert_eq!(ours, oracle_d(&m, y.gen, y.gdeg, &y.upper()));
    }
}

#[test]
fn d_squared_vanishes_on_suspensions() {
    for m in fixtures() {
        let e = Engine::new(&m, 14);
        for j in -3..=3 {
            for s in 0..=2usize {
                let d1 = e.d(s, j);
                let d2 = e.d(s + 1, j + 1);
                for (n, a) in &d1.blocks {
                    if let Some(b) = d2.blocks.get(n) {
                        assert!(b.mul(a).is_zero(), "{}: S^{j}, s = {s}, degree {n}", m.name);
                    }
                }
            }
        }
    }
}

#[test]
fn bottom_derived_functor_is_unstable_part() {
    for m in fixtures() {
        for k in -2..=2 {
            let sm = m.suspend(k);
            let e = Engine::new(&sm, 16);
            let h0 = e.derived_functor(0, 16, true).unwrap();
            let u = sm.unstable_part();
            for n in sm.degrees().filter(|&n| n <= h0.bound) {
                assert_eq!(h0.dim(n), u.dim(n), "{}, degree {n}", sm.name);
            }
        }
    }
}

#[test]
fn cp2_bottom_functor_is_x() {
    let e = Engine::new(&builtin("cp2-desusp").unwrap(), 12);
    let h0 = e.derived_functor(0, 10, true).unwrap();
    assert_eq!(h0.degrees.len(), 1);
    assert_eq!(h0.degrees[&1].labels, vec!["x".to_string()]);
}

#[test]
fn long_exact_sequence_on_more_modules() {
    for name in ["sphere:0", "sphere:2", "rp:4", "rp4-ext", "hz:10", "hz2r:10"] {
        let e = Engine::new(&builtin(name).unwrap(), 18);
        let r = e.les_check(2, 16).unwrap();
        assert!(r.is_exact(), "{name}: {:?}", r.failures);
        assert!(r.slots_checked > 0, "{name}");
    }
    let e = Engine::new(&builtin("rp:3").unwrap().suspend(-2), 18);
    assert!(e.les_check(2, 14).unwrap().is_exact());
}

#[test]
fn l_routes_agree_on_suspensions() {
    for m in fixtures() {
        for k in [-2, -1, 1, 2] {
            let e = Engine::new(&m.suspend(k), 14);
            for s in 0..=2usize {
                let top = e.l_bound(s).min(14);
                for n in e.rs(s, 0).module.degrees().filter(|&n| n <= top) {
                    let l = e.l_space(s, n).unwrap_or_else(|x| panic!("{}, S^{k}: {x}", m.name));
                    assert!(l.dim() <= e.hr(s, 0, n).unwrap().dim);
                }
            }
        }
    }
}

#[test]
fn q_carries_l_into_the_next_stage() {
    let e = Engine::new(&builtin("rp:4").unwrap(), 16);
    let mut hits = 0;
    for n in 1..=4 {
        let l = e.l_space(0, n).unwrap();
        for b in l.basis() {
            for i in 0..=6 {
                let c = e.q_on_l(i, 0, n, b).unwrap();
                hits += usize::from(!c.is_zero());
            }
        }
    }
    assert!(hits > 0);
}

#[test]
fn truncation_is_reported() {
    let e = Engine::new(&builtin("dual-steenrod:10").unwrap(), 40);
    match e.derived_functor(1, 100, false) {
        Err(SingerError::TruncationInsufficient { requested, bound, .. }) => assert!(requested > bound),
        other => panic!("{other:?}"),
    }
    let clipped = e.derived_functor(1, 100, true).unwrap();
    assert!(clipped.bound < 100);
    assert!(matches!(e.l_space(2, 1000), Err(SingerError::TruncationInsufficient { .. })));
}

#[test]
fn q_on_l_rejects_classes_outside_l() {
    // in degree -1 of S^-1 hz2r the kernel route is zero
    let m = builtin("hz2r:8").unwrap().suspend(-1);
    let e = Engine::new(&m, 12);
    let h = e.hr(0, 0, -1).unwrap();
    assert!(h.dim > 0);
    let c = F2Vec::unit(h.dim, 0);
    assert!(matches!(e.q_on_l(0, 0, -1, &c), Err(SingerError::OutsideL { .. })));
}

#[test]
fn derived_functors_are_highly_connected() {
    // M n-connected puts Omega^inf_s M in degrees above 2^s (n + s)
    for m in fixtures() {
        for k in [-1, 0, 2] {
            let sm = m.suspend(k);
            let n = sm.min_degree().unwrap() - 1;
            let e = Engine::new(&sm, 16);
            for s in 1..=3usize {
                let r = e.derived_functor(s, 16, true).unwrap();
                let floor = (1i64 << s) * (n + s as i64) + 1;
                if let Some((&lo, _)) = r.degrees.iter().next() {
                    assert!(lo >= floor, "{}, s = {s}: class in degree {lo}, floor {floor}", sm.name);
                }
            }
        }
    }
}
