//! End-to-end acceptance checks. Each test covers one numbered criterion,
//! prints one PASS line with the measured values (visible with
//! `cargo test --test acceptance -- --nocapture`), and enforces the
//! criterion's runtime budget.

use std::collections::HashSet;
use std::time::Instant;

use rand::Rng;
use superfractal::apps;
use superfractal::dimension;
use superfractal::geometry::Point2;
use superfractal::ifs::{self, Address};
use superfractal::presets;
use superfractal::raster::{Raster, UNIT_FRAME};
use superfractal::rng;
use superfractal::superifs::{self, SuperIfs};
use superfractal::trees::{self, CodeTree, FunctionTree, Grove};

const LN3_LN2: f64 = 1.584962500721156;

fn pass(n: usize, what: &str, t0: Instant, budget_ms: u128, details: &str) {
    let ms = t0.elapsed().as_millis();
    assert!(
        ms <= budget_ms,
        "criterion {n} ({what}) exceeded its {budget_ms} ms budget: took {ms} ms"
    );
    println!("PASS criterion {n:2}: {what} [{details}] ({ms} ms)");
}

fn homogeneous_root() -> f64 {
    2.0 * 3f64.ln() / (2f64.ln() + 3f64.ln())
}

fn sort_points(pts: &mut [Point2]) {
    pts.sort_by(|p, q| {
        p.x.partial_cmp(&q.x)
            .unwrap()
            .then(p.y.partial_cmp(&q.y).unwrap())
    });
}

#[test]
fn criterion_01_moran_dimensions() {
    let t0 = Instant::now();
    let d1 = dimension::moran_dimension(&[0.5, 0.5, 0.5]).unwrap();
    let third = 1.0 / 3.0;
    let d2 = dimension::moran_dimension(&[third, third, third]).unwrap();
    assert!((d1 - LN3_LN2).abs() < 1e-9, "half-gasket dimension {d1}");
    assert!((d2 - 1.0).abs() < 1e-9, "third-gasket dimension {d2}");
    pass(
        1,
        "Moran dimensions",
        t0,
        1,
        &format!("D = {d1:.12} and {d2:.12}"),
    );
}

#[test]
fn criterion_02_random_dimension() {
    let t0 = Instant::now();
    let table = presets::sierpinski_scale_table();
    let d = dimension::random_dimension(&table, &[0.5, 0.5]).unwrap();
    assert!((d - 1.262).abs() <= 1e-3, "random dimension {d}");
    pass(2, "random dimension", t0, 1, &format!("D_R = {d:.6}"));
}

#[test]
fn criterion_03_homogeneous_dimension() {
    let t0 = Instant::now();
    let target = homogeneous_root();
    let table = presets::sierpinski_scale_table();
    let probs = [0.5, 0.5];
    let closed = dimension::homogeneous_dimension(&table, &probs).unwrap();
    assert!(
        (closed - target).abs() < 1e-9,
        "closed form {closed} vs {target}"
    );
    let est = dimension::vvariable_dimension(&table, &probs, 1, 100_000, 31, 1e-3).unwrap();
    assert!(
        (est.dimension - target).abs() < 0.01,
        "V=1 estimate {} vs {target} (uncertainty {})",
        est.dimension,
        est.uncertainty
    );
    pass(
        3,
        "homogeneous dimension",
        t0,
        30_000,
        &format!("closed = {closed:.9}, V=1 estimate = {:.4}", est.dimension),
    );
}

#[test]
fn criterion_04_vvariable_bracketing() {
    let t0 = Instant::now();
    let table = presets::sierpinski_scale_table();
    let probs = [0.5, 0.5];
    let mut results = Vec::new();
    for v in [2usize, 8, 64] {
        let est = dimension::vvariable_dimension(&table, &probs, v, 100_000, 41, 1e-3).unwrap();
        assert!(
            est.dimension > 1.226 - 0.01 && est.dimension < 1.262 + 0.01,
            "V = {v}: estimate {} outside (1.216, 1.272)",
            est.dimension
        );
        results.push((v, est.dimension, est.uncertainty));
    }
    for pair in results.windows(2) {
        let (v0, d0, u0) = pair[0];
        let (v1, d1, u1) = pair[1];
        assert!(
            d1 >= d0 - (u0 + u1),
            "estimates decrease from V={v0} ({d0} ± {u0}) to V={v1} ({d1} ± {u1})"
        );
    }
    let shown: Vec<String> = results
        .iter()
        .map(|(v, d, u)| format!("V={v}: {d:.4}±{u:.4}"))
        .collect();
    pass(4, "V-variable bracketing", t0, 300_000, &shown.join(", "));
}

#[test]
fn criterion_05_cylinder_measure_bound() {
    let t0 = Instant::now();
    let probs = [0.5, 0.5];
    let samples = 100_000u64;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    // Cylinders of order k are code trees of depth k - 1.
    for k in [1usize, 2] {
        let cylinders = trees::enumerate_trees(2, k - 1, 2).unwrap();
        for v in [16usize, 64] {
            let bound = 2.0 * 4f64.powi(k as i32) / (3.0 * v as f64);
            for (i, tau) in cylinders.iter().enumerate() {
                let seed = 500 + (k * 100 + v + i) as u64;
                let est = trees::rho_v_cylinder_mc(tau, &probs, v, samples, seed).unwrap();
                let rho = trees::rho_cylinder(tau, &probs).unwrap();
                let gap = (est.value - rho).abs();
                assert!(
                    gap <= bound + 3.0 * est.stderr,
                    "k={k} V={v} tree {}: |{} - {rho}| = {gap} > {bound} + 3·{}",
                    tau.to_text(),
                    est.value,
                    est.stderr
                );
                worst = worst.max(gap / (bound + 3.0 * est.stderr));
                checked += 1;
            }
        }
    }
    pass(
        5,
        "cylinder-measure bound",
        t0,
        120_000,
        &format!("{checked} cylinders, worst gap at {:.0}% of allowance", worst * 100.0),
    );
}

#[test]
fn criterion_06_free_tree_probability() {
    let t0 = Instant::now();
    let est = trees::free_probability_mc(2, 64, 2, 100_000, 61).unwrap();
    let bound = 1.0 - 2.0 * 4f64.powi(2) / (3.0 * 64.0);
    assert!(
        est.value >= bound - 3.0 * est.stderr,
        "Pr(free) = {} ± {} below {bound}",
        est.value,
        est.stderr
    );
    pass(
        6,
        "free-tree probability",
        t0,
        60_000,
        &format!("Pr(free) = {:.4} ≥ {bound:.4}", est.value),
    );
}

#[test]
fn criterion_07_conjugacy() {
    let t0 = Instant::now();
    let s = presets::fish_superifs(3);
    let x0 = Point2::new(0.5, 0.5);
    let mut rng = rng::from_seed(71);
    for case in 0..100 {
        let depth = rng::draw_uniform(&mut rng, 6);
        let grove = Grove::new(
            (0..3)
                .map(|_| trees::random_tree(&mut rng, 2, depth, 2).unwrap())
                .collect(),
        )
        .unwrap();
        let a = trees::sample_index(&mut rng, &s.probs, 2, 3).unwrap();

        let expanded: Vec<Vec<Point2>> = grove
            .trees()
            .iter()
            .map(|tau| superifs::backward_expand(&s, tau, x0).unwrap())
            .collect();
        let rhs = superifs::super_step_points(&s, &a, &expanded).unwrap();

        let stepped = trees::xi(&a, &grove).unwrap();
        for v in 0..3 {
            let mut lhs = superifs::backward_expand(&s, &stepped.trees()[v], x0).unwrap();
            let mut rhs_v = rhs[v].clone();
            assert_eq!(lhs.len(), rhs_v.len(), "case {case} screen {v}");
            sort_points(&mut lhs);
            sort_points(&mut rhs_v);
            for (p, q) in lhs.iter().zip(&rhs_v) {
                assert!(
                    p.dist(*q) <= 1e-9,
                    "case {case} screen {v}: {p:?} vs {q:?}"
                );
            }
        }
    }
    pass(7, "expand/step conjugacy", t0, 30_000, "100 instances, depth ≤ 6");
}

#[test]
fn criterion_08_v_variability_of_groves() {
    let t0 = Instant::now();
    let v_count = 4usize;
    let probs = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    let mut rng = rng::from_seed(81);
    let mut grove = Grove::constant(2, v_count, 0, 1).unwrap();
    for step in 0..1000 {
        let a = trees::sample_index(&mut rng, &probs, 2, v_count).unwrap();
        grove = trees::xi(&a, &grove).unwrap().truncate(6);
        for (level, count) in trees::subtree_profile(&grove).iter().enumerate() {
            assert!(
                *count <= v_count,
                "step {step}: {count} distinct subtrees at level {level}"
            );
        }
    }
    pass(8, "grove V-variability", t0, 30_000, "1000 steps, V = 4, depth 6");
}

#[test]
fn criterion_09_function_tree_algebra() {
    let t0 = Instant::now();
    let probs = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    let mut rng = rng::from_seed(91);
    for case in 0..1000 {
        let a = trees::sample_index(&mut rng, &probs, 2, 3).unwrap();
        let b = trees::sample_index(&mut rng, &probs, 2, 3).unwrap();
        let c = trees::sample_index(&mut rng, &probs, 2, 3).unwrap();
        let (fa, fb, fc) = (
            FunctionTree::from_index(&a),
            FunctionTree::from_index(&b),
            FunctionTree::from_index(&c),
        );
        let left = trees::compose(&trees::compose(&fa, &fb).unwrap(), &fc).unwrap();
        let right = trees::compose(&fa, &trees::compose(&fb, &fc).unwrap()).unwrap();
        assert_eq!(left, right, "case {case}: composition is not associative");

        let depth = rng::draw_uniform(&mut rng, 3);
        let grove = Grove::new(
            (0..3)
                .map(|_| trees::random_tree(&mut rng, 2, depth, 3).unwrap())
                .collect(),
        )
        .unwrap();
        let ab = trees::compose(&fa, &fb).unwrap();
        let joint = trees::eta(&ab, &grove).unwrap();
        let nested = trees::eta(&fa, &trees::eta(&fb, &grove).unwrap()).unwrap();
        assert_eq!(joint, nested, "case {case}: eta does not respect composition");
    }
    pass(9, "function-tree algebra", t0, 10_000, "1000 random triples, exact");
}

#[test]
fn criterion_10_chaos_game_vs_deterministic() {
    let t0 = Instant::now();
    let ifs = presets::sierpinski_half();
    let full = Raster::full(256, 256, UNIT_FRAME).unwrap();
    let det = ifs::deterministic_attractor(&ifs, &full, 40).unwrap();
    let chaos = ifs::chaos_game(&ifs, 101, 1_000_000, 100, 256, 256, UNIT_FRAME).unwrap();
    let det_px: HashSet<(usize, usize)> = det.iter_set().collect();
    let chaos_px: HashSet<(usize, usize)> = chaos.iter_set().collect();
    let covered = det_px.intersection(&chaos_px).count();
    let extra = chaos_px.difference(&det_px).count();
    let coverage = covered as f64 / det_px.len() as f64;
    let extra_frac = extra as f64 / det_px.len() as f64;
    assert!(coverage >= 0.99, "coverage {coverage}");
    assert!(extra_frac <= 0.005, "extra fraction {extra_frac}");
    pass(
        10,
        "chaos game vs deterministic",
        t0,
        10_000,
        &format!("coverage = {:.2}%, extra = {:.3}%", coverage * 100.0, extra_frac * 100.0),
    );
}

#[test]
fn criterion_11_fish_point_relations() {
    let t0 = Instant::now();
    let a = Point2::new(0.25, 0.5);
    let b = Point2::new(0.5, 0.75);
    let c = Point2::new(0.75, 0.5);
    let d = Point2::new(0.5, 0.25);
    let b1 = Point2::new(9.0 / 32.0, 23.0 / 32.0);
    let b2 = Point2::new(23.0 / 32.0, 23.0 / 32.0);
    let b3 = Point2::new(9.0 / 32.0, 9.0 / 32.0);
    // The mirror image of b2 under y ↦ 1 − y, matching b3 vs b1.
    let b4 = Point2::new(23.0 / 32.0, 9.0 / 32.0);
    let relations = [
        (1, 1, a, a),
        (1, 1, b, b1),
        (1, 1, c, b),
        (1, 2, a, b),
        (1, 2, b, b2),
        (1, 2, c, c),
        (2, 1, a, a),
        (2, 1, b, b3),
        (2, 1, c, d),
        (2, 2, a, d),
        (2, 2, b, b4),
        (2, 2, c, c),
    ];
    for (n, m, from, to) in relations {
        let got = presets::fish_map(n, m).apply(from).unwrap();
        assert!(
            (got.x - to.x).abs() < 1e-12 && (got.y - to.y).abs() < 1e-12,
            "component {n} map {m}: {from:?} -> {got:?}, wanted {to:?}"
        );
    }
    pass(11, "fish point-map relations", t0, 1, "all twelve, exact");
}

#[test]
fn criterion_12_spacefill_fixture() {
    let t0 = Instant::now();
    let s = apps::spacefill_superifs();
    let level1 = apps::spacefill_approximant(&s, &CodeTree::constant(3, 0, 1).unwrap(), 1).unwrap();
    let expected = [
        Point2::new(0.0, 0.0),
        Point2::new(0.25, 0.5),
        Point2::new(0.5, 1.0),
        Point2::new(1.0, 0.5),
    ];
    assert_eq!(level1.points().len(), 4);
    for (p, q) in level1.points().iter().zip(&expected) {
        assert!(
            (p.x - q.x).abs() < 1e-12 && (p.y - q.y).abs() < 1e-12,
            "level-1 chain point {p:?}, wanted {q:?}"
        );
    }
    // Every deeper approximant keeps the fixed endpoints. The right endpoint
    // is the third map's fixed point (1, 1/2): chaining the printed maps
    // forces C_y = 1/2, not 0.
    let mut rng = rng::from_seed(121);
    for k in 1..=7usize {
        for _ in 0..3 {
            let sigma = trees::random_tree(&mut rng, 3, k - 1, 2).unwrap();
            let curve = apps::spacefill_approximant(&s, &sigma, k).unwrap();
            let first = curve.points().first().unwrap();
            let last = curve.points().last().unwrap();
            assert!(first.dist(Point2::new(0.0, 0.0)) <= 1e-9, "depth {k}: {first:?}");
            assert!(last.dist(Point2::new(1.0, 0.5)) <= 1e-9, "depth {k}: {last:?}");
            assert_eq!(curve.segments().len(), 3usize.pow(k as u32));
        }
    }
    pass(
        12,
        "space-filling approximants",
        t0,
        1_000,
        "level-1 chain exact; endpoints (0,0) and (1,0.5) at depths 1..=7",
    );
}

#[test]
fn criterion_13_interpolation_through_all_nodes() {
    let t0 = Instant::now();
    let mut rng = rng::from_seed(131);
    let mut worst: f64 = 0.0;
    for case in 0..100usize {
        let intervals = [2, 2, 2, 3, 4, 5][case % 6];
        let mut xs = vec![0.0f64];
        let gaps: Vec<f64> = (0..intervals).map(|_| 0.05 + rng.gen::<f64>()).collect();
        let total: f64 = gaps.iter().sum();
        for g in &gaps {
            xs.push(xs.last().unwrap() + g / total);
        }
        *xs.last_mut().unwrap() = 1.0;
        let points: Vec<Point2> = xs
            .iter()
            .map(|&x| Point2::new(x, 2.0 * rng.gen::<f64>() - 1.0))
            .collect();
        let vertical: Vec<f64> = (0..intervals)
            .map(|_| 1.8 * rng.gen::<f64>() - 0.9)
            .collect();
        let data = apps::InterpolationData::new(points, vertical).unwrap();
        let ifs = apps::build_interpolation_ifs(&data).unwrap();
        let m = ifs.map_count();

        let miss = if m == 2 {
            // Small alphabet: materialise the whole depth-16 expansion from
            // both endpoints and scan for each node.
            let wrap = SuperIfs::new("graph", vec![ifs], vec![1.0], 1).unwrap();
            let sigma = CodeTree::constant(2, 16, 1).unwrap();
            let mut cloud = superifs::backward_expand(&wrap, &sigma, data.points[0]).unwrap();
            cloud
                .extend(superifs::backward_expand(&wrap, &sigma, *data.points.last().unwrap()).unwrap());
            data.points
                .iter()
                .map(|node| {
                    cloud
                        .iter()
                        .map(|p| p.dist(*node))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        } else {
            // Larger alphabets: the depth-16 address (j+1, 1, 1, ...) lands on
            // node j, and the all-(M) address from the right endpoint lands on
            // node I.
            let mut worst_node: f64 = 0.0;
            for j in 0..m {
                let mut digits = vec![1u8; 16];
                digits[0] = j as u8 + 1;
                let addr = Address::new(digits, m).unwrap();
                let hit = ifs::address_point(&ifs, &addr, data.points[0]).unwrap();
                worst_node = worst_node.max(hit.dist(data.points[j]));
            }
            let addr = Address::new(vec![m as u8; 16], m).unwrap();
            let hit = ifs::address_point(&ifs, &addr, *data.points.last().unwrap()).unwrap();
            worst_node.max(hit.dist(*data.points.last().unwrap()))
        };
        assert!(miss < 1e-6, "case {case} ({intervals} intervals): miss {miss}");
        worst = worst.max(miss);
    }
    pass(
        13,
        "interpolation through nodes",
        t0,
        30_000,
        &format!("100 data sets, worst miss {worst:.2e}"),
    );
}

#[test]
fn criterion_14_box_counting_sanity() {
    let t0 = Instant::now();
    let full = Raster::full(1024, 1024, UNIT_FRAME).unwrap();
    let half = ifs::deterministic_attractor(&presets::sierpinski_half(), &full, 40).unwrap();
    let d_half = ifs::box_dimension(&half, &[1, 2, 4, 8, 16, 32]).unwrap();
    assert!((d_half - 1.585).abs() <= 0.05, "half-gasket box dimension {d_half}");
    // Triadic box sizes on a 3^6 grid, matching the thirds-gasket cell
    // structure; dyadic boxes misalign and bias the slope upward.
    let full3 = Raster::full(729, 729, UNIT_FRAME).unwrap();
    let third = ifs::deterministic_attractor(&presets::sierpinski_third(), &full3, 40).unwrap();
    let d_third = ifs::box_dimension(&third, &[3, 9, 27, 81]).unwrap();
    assert!((d_third - 1.0).abs() <= 0.08, "third-gasket box dimension {d_third}");
    pass(
        14,
        "box-counting sanity",
        t0,
        60_000,
        &format!("box dims {d_half:.4} and {d_third:.4}"),
    );
}
