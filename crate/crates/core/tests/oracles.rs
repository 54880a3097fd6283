mod common;

use std::collections::BTreeSet;

use common::*;
use hardy_core::generate::{random_mean_zero, random_nonnegative, random_open_set};
use hardy_core::journe::{maximal_rectangles, Direction};
use hardy_core::maximal::{ell_enlarge, epsilon0, layer_cake, layer_cake_integral, level_sets, strong_maximal};
use hardy_core::product::{cmo_candidates, cmo_p, product_transform, square_function};
use hardy_core::{enlarge, BuildOptions, GridFunction, OpenSet, ProductSpace, RectangleKey};
use rand::Rng;

fn two_point() -> ProductSpace {
    let s = line(&[0.0, 1.0], vec![1.0, 1.0]);
    ProductSpace::from_spaces(s.clone(), s, BuildOptions::default()).unwrap()
}

fn line_product() -> ProductSpace {
    let s = line(&[0.0, 1.0, 2.0, 10.0], vec![1.0; 4]);
    ProductSpace::from_spaces(s.clone(), s, BuildOptions::desk(0.25)).unwrap()
}

#[test]
fn strong_maximal_matches_exhaustive_on_micro_grids() {
    let shapes = [(1, 3), (2, 2), (2, 3), (3, 2), (2, 5), (3, 3), (3, 4), (4, 3), (2, 6), (6, 2)];
    for (seed, &(n1, n2)) in shapes.iter().enumerate() {
        let ps = random_pspace(seed as u64, n1, n2);
        let mut r = rng(100 + seed as u64);
        for _ in 0..5 {
            let g = GridFunction::from_fn(n1, n2, |_, _| r.random_range(-1.0..1.0));
            let fast = strong_maximal(&ps, &g).unwrap();
            let slow = brute_strong_maximal(&ps, &g);
            for (a, b) in fast.values.iter().zip(&slow.values) {
                assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn one_point_indicator_on_two_by_two() {
    let ps = two_point();
    let chi = GridFunction::from_fn(2, 2, |a, b| if (a, b) == (0, 0) { 1.0 } else { 0.0 });
    let m = strong_maximal(&ps, &chi).unwrap();
    // Frozen from the exhaustive ball-pair scan.
    let expected = [1.0, 0.5, 0.5, 0.25];
    assert_eq!(brute_strong_maximal(&ps, &chi).values, expected);
    assert_eq!(m.values, expected);

    let eps0 = epsilon0(&ps);
    assert!((eps0 - 1.0 / 10368.0).abs() < 1e-18);
    let omega = OpenSet::from_points(ps.weights(), &[(0, 0)]);
    assert_eq!(enlarge(&ps, &omega, eps0).unwrap().len(), 4);
    assert_eq!(enlarge(&ps, &omega, 0.3).unwrap().points(), vec![(0, 0), (0, 1), (1, 0)]);
    assert!(enlarge(&ps, &omega, 1.0).is_err());
}

#[test]
fn enlarge_trivial_sets() {
    let ps = random_pspace(3, 4, 3);
    let full = OpenSet::from_mask(ps.weights(), vec![true; 12]);
    assert_eq!(enlarge(&ps, &full, 0.5).unwrap().len(), 12);
    assert!(enlarge(&ps, &OpenSet::empty(4, 3), 0.5).unwrap().is_empty());
}

#[test]
fn constant_function_is_its_own_maximal_function() {
    let ps = random_pspace(4, 4, 3);
    let g = GridFunction::from_fn(4, 3, |_, _| -2.0);
    for v in strong_maximal(&ps, &g).unwrap().values {
        assert!((v - 2.0).abs() < 1e-14);
    }
}

#[test]
fn ell_enlarge_matches_dilate_oracle() {
    let ps = line_product();
    let q = ps.system(0).cube_at(-1, 0);
    let omega = ps.rect_set(RectangleKey { q1: q, q2: q });
    let out = ell_enlarge(&ps, &omega, [1, 0]);
    // Direct ball scan over every cube pair inside Ω.
    let mut expected = BTreeSet::new();
    for c1 in ps.system(0).all_cubes() {
        for c2 in ps.system(1).all_cubes() {
            if !omega.contains_product(&c1.members, &c2.members) {
                continue;
            }
            let r1 = 2.0 * ps.system(0).constants().outer * c1.side_length;
            let r2 = ps.system(1).constants().outer * c2.side_length;
            for x1 in 0..4 {
                for x2 in 0..4 {
                    if ps.space(0).d(c1.center, x1) < r1 && ps.space(1).d(c2.center, x2) < r2 {
                        expected.insert((x1, x2));
                    }
                }
            }
        }
    }
    assert_eq!(out.set.points(), expected.into_iter().collect::<Vec<_>>());
    // Every first-factor point, second factor {0, 1, 2}.
    assert_eq!(out.set.len(), 12);
    assert!(omega.is_subset_of(&out.set));
    let zero = ell_enlarge(&ps, &OpenSet::empty(4, 4), [2, 2]);
    assert!(zero.set.is_empty());
}

#[test]
fn layer_cake_ratio_brackets_the_integral() {
    for seed in 0..20 {
        let ps = random_pspace(seed, 6, 5);
        let mut r = rng(seed);
        let sf = random_nonnegative(6, 5, &mut r);
        let fam = level_sets(ps.weights(), &sf).unwrap();
        for w in fam.sets.windows(2) {
            assert!(w[1].is_subset_of(&w[0]));
        }
        let report = layer_cake(ps.weights(), &sf, &fam, 1.0);
        assert!(report.ratio >= 0.5 && report.ratio <= 2.0, "{}", report.ratio);
        let direct: f64 = (0..6)
            .flat_map(|a| (0..5).map(move |b| (a, b)))
            .map(|(a, b)| sf.get(a, b) * ps.weights()[0][a] * ps.weights()[1][b])
            .sum();
        assert!((layer_cake_integral(ps.weights(), &sf, 1.0) - direct).abs() < 1e-12 * direct);
    }
}

#[test]
fn cmo_candidates_reach_the_subset_supremum() {
    let shapes = [(2, 2), (2, 3), (3, 3), (3, 4), (4, 3), (2, 6)];
    for (seed, &(n1, n2)) in shapes.iter().enumerate() {
        let ps = random_pspace(20 + seed as u64, n1, n2);
        let mut r = rng(seed as u64);
        let f = random_mean_zero(&ps, &mut r).unwrap();
        let c = product_transform(&ps, &f).unwrap();
        let support = (n1 - 1) * (n2 - 1);
        let cands = cmo_candidates(&ps, &c, support);
        for p in [0.6, 1.0] {
            let fast = cmo_p(&ps, &c, p, &cands).unwrap().value;
            let slow = brute_cmo(&ps, &c, p);
            assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0), "{fast} vs {slow}");
        }
    }
}

fn coarsest(ps: &ProductSpace, factor: usize, id: hardy_core::CubeId) -> bool {
    let sys = ps.system(factor);
    sys.parent(id).is_none_or(|p| sys.cube(p).members != sys.cube(id).members)
}

fn strict_superset(a: &[usize], b: &[usize]) -> bool {
    a.len() > b.len() && b.iter().all(|x| a.contains(x))
}

#[test]
fn journe_families_match_brute_force() {
    let ps = line_product();
    let mut cases = vec![OpenSet::from_points(
        ps.weights(),
        &[(0, 0), (1, 0), (2, 0), (0, 1), (0, 2), (0, 3)],
    )];
    let mut r = rng(7);
    for _ in 0..10 {
        cases.push(random_open_set(&ps, &mut r));
    }
    let cubes1: Vec<_> = ps.system(0).all_cubes().collect();
    let cubes2: Vec<_> = ps.system(1).all_cubes().collect();
    for omega in &cases {
        let fam = maximal_rectangles(&ps, omega);
        let mut m1 = Vec::new();
        let mut m2 = Vec::new();
        let mut m_all = Vec::new();
        for c1 in &cubes1 {
            for c2 in &cubes2 {
                if !omega.contains_product(&c1.members, &c2.members) {
                    continue;
                }
                let grow1 = cubes1.iter().any(|o| {
                    strict_superset(&o.members, &c1.members) && omega.contains_product(&o.members, &c2.members)
                });
                let grow2 = cubes2.iter().any(|o| {
                    strict_superset(&o.members, &c2.members) && omega.contains_product(&c1.members, &o.members)
                });
                let key = RectangleKey { q1: c1.id, q2: c2.id };
                let top1 = coarsest(&ps, 0, c1.id);
                let top2 = coarsest(&ps, 1, c2.id);
                if !grow1 && top1 {
                    m1.push(key);
                }
                if !grow2 && top2 {
                    m2.push(key);
                }
                if !grow1 && !grow2 && top1 && top2 {
                    m_all.push(key);
                }
            }
        }
        m1.sort();
        m2.sort();
        m_all.sort();
        assert_eq!(fam.m1, m1);
        assert_eq!(fam.m2, m2);
        assert_eq!(fam.m_all, m_all);
        // Stretch: the coarsest cube over Q₂ with more than half of Q₁ × Q̂₂ inside Ω.
        let w = ps.weights();
        for r in &fam.m1 {
            let q1 = ps.system(0).cube(r.q1);
            let q2 = ps.system(1).cube(r.q2);
            let best = cubes2
                .iter()
                .filter(|a| q2.members.iter().all(|x| a.members.contains(x)))
                .filter(|a| {
                    let mut inside = 0.0;
                    let mut total = 0.0;
                    for &x in &q1.members {
                        for &y in &a.members {
                            total += w[0][x] * w[1][y];
                            if omega.contains(x, y) {
                                inside += w[0][x] * w[1][y];
                            }
                        }
                    }
                    inside > total / 2.0
                })
                .max_by(|a, b| a.side_length.total_cmp(&b.side_length))
                .unwrap();
            assert_eq!(fam.stretch(Direction::First, *r).unwrap(), best.id);
        }
    }
}

#[test]
fn square_function_is_isometric() {
    for seed in 0..10 {
        let ps = random_pspace(seed, 8, 8);
        let f = random_mean_zero(&ps, &mut rng(seed)).unwrap();
        let s = square_function(&ps, &product_transform(&ps, &f).unwrap());
        let (a, b) = (ps.lp_norm(&s, 2.0), ps.lp_norm(&f, 2.0));
        assert!((a - b).abs() <= 1e-10 * b);
    }
}
