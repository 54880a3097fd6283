mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use common::*;
use hardy_core::atoms::{gamma_bound, random_atom};
use hardy_core::blocks::building_blocks;
use hardy_core::certify::basis_checks;
use hardy_core::dyadic::verify_system;
use hardy_core::generate::{random_mean_zero, random_open_set, random_space};
use hardy_core::maximal::layer_cake;
use hardy_core::product::{cmo_candidates, cmo_p};
use hardy_core::*;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn run(id: &str, name: &str, budget: Option<f64>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let secs = start.elapsed().as_secs_f64();
    let in_time = budget.is_none_or(|b| secs <= b);
    let ok = out.passed && in_time;
    let limit = budget.map(|b| format!(" / {b} s")).unwrap_or_default();
    println!(
        "{} {id:<3} {name:<28} {:.2} s{limit}  {}",
        if ok { "PASS" } else { "FAIL" },
        secs,
        out.detail
    );
    ok
}

fn gamma_for(ps: &ProductSpace, p: f64, q: f64) -> [f64; 2] {
    [0, 1].map(|i| gamma_bound(ps.space(i).omega(), p, q) + 1.0)
}

/// Fixed 8×8 geometry shared by the corpus criteria.
fn desk_product() -> ProductSpace {
    random_pspace(0, 8, 8)
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::MIN, f64::max);
    let lo = values.iter().copied().fold(f64::MAX, f64::min);
    hi / lo
}

fn dyadic_axioms() -> Outcome {
    let mut r = rng(1);
    let mut failures = Vec::new();
    let mut worst_outer: f64 = 0.0;
    for i in 0..30 {
        let quasi = i >= 25;
        let n = r.random_range(2..=200);
        let dim = r.random_range(1..=3);
        let space = Arc::new(random_space(n, dim, if quasi { 2.0 } else { 1.0 }, &mut r).unwrap());
        let a0 = space.a0();
        let sys = DyadicSystem::build(space, BuildOptions::default()).unwrap();
        let rep = verify_system(&sys).unwrap();
        worst_outer = worst_outer.max(rep.measured_outer / rep.certified.outer);
        let ok = rep.nested && rep.disjoint_union && rep.separated && rep.certificate_holds && (!quasi || a0 > 1.0);
        if !ok {
            failures.push(format!("space {i} (n = {n}, a0 = {a0:.3})"));
        }
    }
    Outcome {
        passed: failures.is_empty(),
        detail: format!(
            "25 metric + 5 quasi; max measured/certified outer {worst_outer:.3}; failures {failures:?}"
        ),
    }
}

fn basis() -> Outcome {
    let mut r = rng(2);
    let mut gram: f64 = 0.0;
    let mut counts = true;
    for _ in 0..10 {
        let n = r.random_range(2..=120);
        let space = Arc::new(random_space(n, 2, 1.0, &mut r).unwrap());
        let b = build_haar(Arc::new(DyadicSystem::build(space, BuildOptions::default()).unwrap()));
        let (e, c) = basis_checks(&b);
        gram = gram.max(e);
        counts &= c;
    }
    let space = Arc::new(random_space(64, 2, 1.0, &mut r).unwrap());
    let b = build_haar(Arc::new(DyadicSystem::build(space, BuildOptions::default()).unwrap()));
    let mut recon: f64 = 0.0;
    for _ in 0..100 {
        let f: Vec<f64> = (0..64).map(|_| r.random_range(-1.0..1.0)).collect();
        let back = b.inverse_transform(&b.transform(&f).unwrap()).unwrap();
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in back.iter().zip(&f) {
            recon = recon.max((x - y).abs() / scale);
        }
    }
    Outcome {
        passed: gram <= 1e-10 && counts && recon <= 1e-10,
        detail: format!("max |G − I| {gram:.2e}; counts {counts}; reconstruction {recon:.2e} over 100 f"),
    }
}

fn building_block_checks() -> Outcome {
    let space = Arc::new(random_space(64, 2, 1.0, &mut rng(3)).unwrap());
    let b = build_haar(Arc::new(DyadicSystem::build(space.clone(), BuildOptions::default()).unwrap()));
    let omega = space.omega();
    let mut tele: f64 = 0.0;
    let mut mean: f64 = 0.0;
    let mut radii_ok = true;
    for (gamma, cbar) in [(omega + 1.0, 2.0), (2.0 * omega + 1.0, 4.0)] {
        for w in b.wavelets() {
            let set = building_blocks(&space, w, gamma, cbar, 1.0).unwrap();
            let scale = set.normalized.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            for x in 0..space.len() {
                let total: f64 = (0..set.blocks.len()).map(|l| set.weight(l) * set.blocks[l][x]).sum();
                tele = tele.max((total - set.normalized[x]).abs() / scale);
            }
            for (l, block) in set.blocks.iter().enumerate() {
                let size = block.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
                let m: f64 = block.iter().zip(space.weights()).map(|(v, w)| v * w).sum();
                mean = mean.max(m.abs() / (size * space.total_measure()));
                let reach = 2.0 * space.a0().powi(2) * set.radii[l];
                radii_ok &= (0..space.len()).all(|x| block[x] == 0.0 || space.d(w.center, x) < reach);
            }
        }
    }
    Outcome {
        passed: tele <= 1e-12 && mean <= 1e-12 && radii_ok,
        detail: format!(
            "{} wavelets × 2 settings; telescoping {tele:.2e}; mean {mean:.2e}; radii {radii_ok}",
            b.wavelets().len()
        ),
    }
}

fn square_function_checks() -> Outcome {
    let ps = desk_product();
    let mut r = rng(4);
    let mut parseval: f64 = 0.0;
    let mut ratio = [f64::INFINITY, 0.0f64];
    for _ in 0..100 {
        let f = random_mean_zero(&ps, &mut r).unwrap();
        let sf = square_function(&ps, &product_transform(&ps, &f).unwrap());
        let (a, b) = (ps.lp_norm(&sf, 2.0), ps.lp_norm(&f, 2.0));
        parseval = parseval.max((a - b).abs() / b);
        let fam = level_sets(ps.weights(), &sf).unwrap();
        let rep = layer_cake(ps.weights(), &sf, &fam, 1.0);
        ratio = [ratio[0].min(rep.ratio), ratio[1].max(rep.ratio)];
    }
    Outcome {
        passed: parseval <= 1e-10 && ratio[0] >= 0.5 && ratio[1] <= 2.0,
        detail: format!(
            "Parseval {parseval:.2e} over 100 f; layer-cake ratio [{:.4}, {:.4}]",
            ratio[0], ratio[1]
        ),
    }
}

fn lp_by_square_function() -> Outcome {
    let ps = desk_product();
    let mut passed = true;
    let mut parts = Vec::new();
    for p in [0.8, 1.0] {
        let per_seed: Vec<f64> = (0..5u64)
            .map(|seed| {
                let mut r = rng(500 + seed);
                (0..100)
                    .map(|_| {
                        let f = random_mean_zero(&ps, &mut r).unwrap();
                        let sf = square_function(&ps, &product_transform(&ps, &f).unwrap());
                        ps.lp_norm(&f, p) / ps.lp_norm(&sf, p)
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let s = spread(&per_seed);
        passed &= per_seed.iter().all(|c| c.is_finite()) && s <= 2.0;
        parts.push(format!("p = {p}: C_p {per_seed:.4?} spread {s:.3}"));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn journe_random() -> Outcome {
    let ps = desk_product();
    let mut r = rng(6);
    let sets: Vec<OpenSet> = (0..50).map(|_| random_open_set(&ps, &mut r)).collect();
    let mut parts = Vec::new();
    let mut passed = true;
    for delta in [0.5, 1.0, 2.0] {
        let worst = sets
            .iter()
            .map(|o| {
                let rep = journe_check(&ps, o, delta).unwrap();
                rep.c1.max(rep.c2)
            })
            .fold(0.0, f64::max);
        passed &= worst.is_finite();
        parts.push(format!("δ = {delta}: {worst:.4}"));
    }
    Outcome {
        passed,
        detail: format!("max constant over 50 sets, {}", parts.join(", ")),
    }
}

fn journe_single_rectangle() -> Outcome {
    let ps = desk_product();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for key in ps.all_rectangles() {
        let omega = ps.rect_set(key);
        let rep = journe_check(&ps, &omega, 1.0).unwrap();
        worst = worst.max(rep.c1.max(rep.c2));
        count += 1;
    }
    Outcome {
        passed: worst <= 1.0,
        detail: format!("max constant over {count} single rectangles at δ = 1: {worst:.4}"),
    }
}

fn forward_decomposition() -> Outcome {
    let ps = desk_product();
    let mut residual: f64 = 0.0;
    let mut atoms = 0usize;
    let mut failures = 0usize;
    let mut tally = |dec: &AtomicDecomposition| {
        residual = residual.max(dec.residual);
        for t in &dec.terms {
            atoms += 1;
            failures += usize::from(!verify_atom(&t.atom).passed());
        }
    };
    let gamma = gamma_for(&ps, 1.0, 2.0);
    let mut per_seed = Vec::new();
    for seed in 0..5u64 {
        let mut r = rng(700 + seed);
        let mut c: f64 = 0.0;
        for _ in 0..50 {
            let f = random_mean_zero(&ps, &mut r).unwrap();
            let dec = atomic_decompose(&ps, &f, 1.0, 2.0, gamma).unwrap();
            c = c.max(dec.lambda_constant);
            if seed == 0 {
                tally(&dec);
            }
        }
        per_seed.push(c);
    }
    let mut r = rng(710);
    for q in [1.5, 3.0] {
        let g = gamma_for(&ps, 1.0, q);
        for _ in 0..10 {
            let f = random_mean_zero(&ps, &mut r).unwrap();
            tally(&atomic_decompose(&ps, &f, 1.0, q, g).unwrap());
        }
    }
    let s = spread(&per_seed);
    Outcome {
        passed: residual <= 1e-8 && failures == 0 && s <= 2.0,
        detail: format!(
            "residual {residual:.2e}; {atoms} atoms, {failures} failed; C {per_seed:.4?} spread {s:.3}"
        ),
    }
}

fn converse_atoms() -> Outcome {
    let ps = desk_product();
    let foreign = [0, 1].map(|i| {
        RegularFamily::generate(ps.space(i), Some(ps.system(i).delta()), &[11]).unwrap().systems[0].clone()
    });
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    let mut on_foreign = 0;
    let mut failures = 0;
    for n in 0..200 {
        let grids = if n % 2 == 0 {
            [ps.system(0).clone(), ps.system(1).clone()]
        } else {
            on_foreign += 1;
            foreign.clone()
        };
        let (p, q) = [(1.0, 2.0), (0.8, 2.0), (1.0, 1.5), (0.9, 3.0)][n % 4];
        let ell = [r.random_range(0..=3), r.random_range(0..=3)];
        let atom = random_atom(grids, p, q, ell, &mut r).unwrap();
        failures += usize::from(!verify_atom(&atom).passed());
        worst = worst.max(atom_hp_bound(&ps, &atom, p).unwrap());
    }
    Outcome {
        passed: worst.is_finite() && failures == 0,
        detail: format!("200 atoms ({on_foreign} on a foreign grid), {failures} failed verification; max ‖S(a)‖_p {worst:.4}"),
    }
}

fn oracles() -> Outcome {
    let mut shapes = Vec::new();
    for n1 in 1..=12usize {
        for n2 in 1..=12 / n1 {
            shapes.push((n1, n2));
        }
    }
    let mut maximal_err: f64 = 0.0;
    let mut cmo_err: f64 = 0.0;
    let mut cmo_cases = 0;
    for (i, &(n1, n2)) in shapes.iter().enumerate() {
        for seed in 0..2u64 {
            let ps = random_pspace(900 + 10 * i as u64 + seed, n1, n2);
            let mut r = rng(seed);
            for _ in 0..3 {
                let g = GridFunction::from_fn(n1, n2, |_, _| r.random_range(-1.0..1.0));
                let fast = strong_maximal(&ps, &g).unwrap();
                let slow = brute_strong_maximal(&ps, &g);
                for (a, b) in fast.values.iter().zip(&slow.values) {
                    maximal_err = maximal_err.max((a - b).abs());
                }
            }
            if n1 > 1 && n2 > 1 {
                let f = random_mean_zero(&ps, &mut r).unwrap();
                let c = product_transform(&ps, &f).unwrap();
                let cands = cmo_candidates(&ps, &c, n1 * n2);
                for p in [0.6, 1.0] {
                    let fast = cmo_p(&ps, &c, p, &cands).unwrap().value;
                    let slow = brute_cmo(&ps, &c, p);
                    cmo_err = cmo_err.max((fast - slow).abs() / slow.max(1.0));
                    cmo_cases += 1;
                }
            }
        }
    }
    Outcome {
        passed: maximal_err <= 1e-12 && cmo_err <= 1e-12,
        detail: format!(
            "{} shapes; strong maximal max diff {maximal_err:.2e}; cmo {cmo_cases} cases, max diff {cmo_err:.2e}",
            shapes.len()
        ),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let results = [
        run("1", "dyadic axioms", Some(10.0), dyadic_axioms),
        run("2", "wavelet basis", Some(5.0), basis),
        run("3", "building blocks", Some(10.0), building_block_checks),
        run("4", "square function", Some(5.0), square_function_checks),
        run("5", "L^p by square function", None, lp_by_square_function),
        run("6a", "Journé random sets", Some(30.0), journe_random),
        run("6b", "Journé single rectangle", Some(30.0), journe_single_rectangle),
        run("7", "atomic decomposition", None, forward_decomposition),
        run("8", "converse atoms", None, converse_atoms),
        run("9", "oracle equivalences", None, oracles),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!(
        "acceptance: {passed}/{} passed in {:.2} s",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
