use std::sync::OnceLock;

use chevlink::chains::*;
use chevlink::complex::{build_link_complex, CosetComplex};
use chevlink::f2rank::{F2Solver, RankOptions};
use chevlink::roots::{Color, Config};
use proptest::prelude::*;

fn a3() -> &'static CosetComplex {
    static CX: OnceLock<CosetComplex> = OnceLock::new();
    CX.get_or_init(|| build_link_complex(Config::A3, 3).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bound_trials_hold(seed in any::<u64>()) {
        let ch = Chains::new(a3()).unwrap();
        let t = ch.random_bound_trial(seed).unwrap();
        prop_assert!(t.pass, "{:?}", t);
    }

    #[test]
    fn translates_fill_translates(seed in any::<u64>(), y in 0usize..729) {
        let cx = a3();
        let ch = Chains::new(cx).unwrap();
        let mut rng = chevlink::rng(seed);
        let s = ch.random_member(Color::Red, &mut rng);
        let t = ch.random_member(Color::Blue, &mut rng);
        let u = ch.random_member(Color::Green, &mut rng);
        let w = ColoredWord::new(
            vec![(s, Color::Red), (t, Color::Blue), (u, Color::Green), (ch.inv(u), Color::Green), (ch.inv(t), Color::Blue), (ch.inv(s), Color::Red)],
            true,
        );
        let l = ch.word_to_loop(&w).unwrap();
        let fill = ch.solve_filling(&l.chain).unwrap().unwrap();
        let ty = ch.translate(&fill, y);
        prop_assert_eq!(ty.size(), fill.size());
        prop_assert_eq!(ch.boundary(&ty), ch.translate_one(&l.chain, y));
    }

    #[test]
    fn cyclic_shift_is_a_translate(seed in any::<u64>(), k in 0usize..4) {
        let cx = a3();
        let ch = Chains::new(cx).unwrap();
        let mut rng = chevlink::rng(seed);
        let s = ch.random_member(Color::Red, &mut rng);
        let t = ch.random_member(Color::Green, &mut rng);
        let w = ColoredWord::new(vec![(s, Color::Red), (t, Color::Green), (ch.inv(t), Color::Green), (ch.inv(s), Color::Red)], true);
        let r = w.rotate(k);
        let pre = ch.phi(&w.slice(0, k));
        let l = ch.word_to_loop(&w).unwrap();
        let lr = ch.word_to_loop(&r).unwrap();
        prop_assert_eq!(ch.translate_one(&lr.chain, pre), l.chain.clone());
        prop_assert_eq!(ch.solve_filling(&lr.chain).unwrap().is_some(), ch.solve_filling(&l.chain).unwrap().is_some());
    }
}

#[test]
fn commutator_loop_fills_at_q3() {
    let r = verify_named_filling_a3(3).unwrap();
    assert!(r.pass && r.triangles.len() == 20);
}

#[test]
fn named_filling_q5() {
    let r = verify_named_filling_a3(5).unwrap();
    assert!(r.pass && r.triangles.len() == 20 && r.boundary_matches);
    assert_eq!(r.apexes.len(), 5);
}

#[test]
fn b3_large_q2_has_unfillable_edge_cycle() {
    let cx = build_link_complex(Config::B3Large, 2).unwrap();
    let ch = Chains::new(&cx).unwrap();
    // b1 > 0, so some cone loop is outside the boundary space
    let r = ch.cone_radius_bound(0).unwrap();
    assert_eq!(r.radius, None);
    assert!(r.unsat_edges > 0);
    let rows: Vec<Vec<u32>> = cx.tri_edges.iter().map(|t| t.to_vec()).collect();
    let rank = F2Solver::new(&rows, cx.edges.len(), RankOptions::default().mem_budget).unwrap().rank();
    assert!(cx.edges.len() - (cx.num_vertices() - 1) - rank > 0);
}

#[test]
fn b3_small_q3_cone_radius_is_infinite() {
    let cx = build_link_complex(Config::B3Small, 3).unwrap();
    let ch = Chains::new(&cx).unwrap();
    let r = ch.cone_radius_bound(0).unwrap();
    assert!(r.radius.is_none() && r.expansion_lower_bound.is_none());
}

#[test]
fn a3_cone_radius_is_finite() {
    let ch_cx = a3();
    let ch = Chains::new(ch_cx).unwrap();
    let r = ch.cone_radius_bound(5).unwrap();
    let rad = r.radius.unwrap();
    assert!(r.expansion_lower_bound.unwrap() == 1.0 / (3.0 * rad as f64));
    assert_eq!(r.fill_sizes.len(), ch_cx.edges.len());
}
