//! The superIFS and the V-screen random iteration algorithm on rasters and
//! measure rasters, the backward code-tree expansion, and the grove chain
//! that tracks tree addresses alongside the images.

use crate::error::{invalid, numerical, Result};
use crate::geometry::Point2;
use crate::ifs::Ifs;
use crate::raster::{Frame, MeasureRaster, Raster};
use crate::rng::{self, ArtifactRng};
use crate::trees::{sample_index, xi, CodeTree, Grove, IndexA};

const MASS_PRE_TOL: f64 = 1e-9;
const MASS_DRIFT_TOL: f64 = 1e-6;
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// ℱ = {X; F^1, ..., F^N; P_1, ..., P_N} together with the screen count V.
#[derive(Clone, Debug)]
pub struct SuperIfs {
    pub name: String,
    pub components: Vec<Ifs>,
    pub probs: Vec<f64>,
    pub v_count: usize,
}

impl SuperIfs {
    pub fn new(
        name: impl Into<String>,
        components: Vec<Ifs>,
        probs: Vec<f64>,
        v_count: usize,
    ) -> Result<SuperIfs> {
        let name = name.into();
        if components.is_empty() {
            return Err(invalid(format!("SuperIfs::new('{name}'): no components")));
        }
        if v_count == 0 {
            return Err(invalid(format!("SuperIfs::new('{name}'): V must be ≥ 1")));
        }
        let m = components[0].map_count();
        if let Some(c) = components.iter().find(|c| c.map_count() != m) {
            return Err(invalid(format!(
                "SuperIfs::new('{name}'): component '{}' has {} maps, expected the shared {m}",
                c.name,
                c.map_count()
            )));
        }
        if components.len() != probs.len() {
            return Err(invalid(format!(
                "SuperIfs::new('{name}'): {} components but {} probabilities",
                components.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(invalid(format!(
                "SuperIfs::new('{name}'): negative or non-finite probability"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(invalid(format!(
                "SuperIfs::new('{name}'): probabilities sum to {sum}, not 1"
            )));
        }
        Ok(SuperIfs {
            name,
            components,
            probs,
            v_count,
        })
    }

    pub fn m(&self) -> usize {
        self.components[0].map_count()
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    fn check_index(&self, op: &str, a: &IndexA) -> Result<()> {
        if a.m() != self.m() || a.v_count() != self.v_count {
            return Err(invalid(format!(
                "{op}: index shaped (M = {}, V = {}) against superIFS (M = {}, V = {})",
                a.m(),
                a.v_count(),
                self.m(),
                self.v_count
            )));
        }
        if let Some(c) = a.comps().iter().find(|c| c.n as usize > self.n()) {
            return Err(invalid(format!(
                "{op}: index names component {} of {}",
                c.n,
                self.n()
            )));
        }
        Ok(())
    }

    fn check_tree(&self, op: &str, sigma: &CodeTree) -> Result<()> {
        if sigma.m() != self.m() {
            return Err(invalid(format!(
                "{op}: tree branching {} against superIFS M = {}",
                sigma.m(),
                self.m()
            )));
        }
        if sigma.max_label() as usize > self.n() {
            return Err(invalid(format!(
                "{op}: tree label {} outside 1..={}",
                sigma.max_label(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// The V screens of one buffer, with a generation counter that advances on
/// every step.
#[derive(Clone, Debug, PartialEq)]
pub struct ScreenBank<T> {
    screens: Vec<T>,
    pub generation: u64,
}

impl<T> ScreenBank<T> {
    pub fn new(screens: Vec<T>) -> Result<ScreenBank<T>> {
        if screens.is_empty() {
            return Err(invalid("ScreenBank::new: no screens".to_string()));
        }
        Ok(ScreenBank {
            screens,
            generation: 0,
        })
    }

    pub fn screens(&self) -> &[T] {
        &self.screens
    }

    pub fn len(&self) -> usize {
        self.screens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.screens.is_empty()
    }

    pub fn into_screens(self) -> Vec<T> {
        self.screens
    }
}

/// V copies of the full raster: the usual starting bank for set mode.
pub fn full_set_bank(
    v_count: usize,
    width: usize,
    height: usize,
    frame: Frame,
) -> Result<ScreenBank<Raster>> {
    let screen = Raster::full(width, height, frame)?;
    ScreenBank::new(vec![screen; v_count.max(1)])
}

/// V copies of the uniform unit-mass measure.
pub fn uniform_measure_bank(
    v_count: usize,
    width: usize,
    height: usize,
    frame: Frame,
) -> Result<ScreenBank<MeasureRaster>> {
    let mut screen = MeasureRaster::zero(width, height, frame)?;
    let w = 1.0 / (width * height) as f64;
    screen.mass.iter_mut().for_each(|m| *m = w);
    ScreenBank::new(vec![screen; v_count.max(1)])
}

fn check_uniform_shape<T>(op: &str, screens: &[T], same: impl Fn(&T, &T) -> bool) -> Result<()> {
    if screens.iter().any(|s| !same(s, &screens[0])) {
        return Err(invalid(format!("{op}: screens disagree on shape")));
    }
    Ok(())
}

/// One application of f^a on sets: output screen v is the union over
/// branches q of f_q^{n_v} applied to input screen v_{v,q}. The input bank
/// is read only.
pub fn super_step_sets(
    s: &SuperIfs,
    a: &IndexA,
    bank: &ScreenBank<Raster>,
) -> Result<ScreenBank<Raster>> {
    s.check_index("super_step_sets", a)?;
    if bank.len() != s.v_count {
        return Err(invalid(format!(
            "super_step_sets: {} screens for V = {}",
            bank.len(),
            s.v_count
        )));
    }
    check_uniform_shape("super_step_sets", bank.screens(), Raster::same_shape)?;
    let shape = &bank.screens()[0];
    let mut out = Vec::with_capacity(s.v_count);
    for comp in a.comps() {
        let ifs = &s.components[comp.n as usize - 1];
        let mut screen = Raster::empty(shape.width, shape.height, shape.frame)?;
        for (q, &w) in comp.screens.iter().enumerate() {
            let src = &bank.screens()[w as usize - 1];
            let map = &ifs.maps[q];
            for (col, row) in src.iter_set() {
                let p = src.frame.center(col, row, src.width, src.height);
                screen.set_point(map.apply(p)?);
            }
        }
        out.push(screen);
    }
    Ok(ScreenBank {
        screens: out,
        generation: bank.generation + 1,
    })
}

/// One application of f^a on measures: output screen v sums the pushforwards
/// of the input screens v_{v,q} weighted by p_q^{n_v}. Mass is checked
/// before (within 1e-9 of 1) and after (drift beyond 1e-6 is an error), then
/// renormalized.
pub fn super_step_measures(
    s: &SuperIfs,
    a: &IndexA,
    bank: &ScreenBank<MeasureRaster>,
) -> Result<ScreenBank<MeasureRaster>> {
    s.check_index("super_step_measures", a)?;
    if bank.len() != s.v_count {
        return Err(invalid(format!(
            "super_step_measures: {} screens for V = {}",
            bank.len(),
            s.v_count
        )));
    }
    check_uniform_shape(
        "super_step_measures",
        bank.screens(),
        MeasureRaster::same_shape,
    )?;
    for (v, screen) in bank.screens().iter().enumerate() {
        let mass = screen.total_mass();
        if (mass - 1.0).abs() > MASS_PRE_TOL {
            return Err(invalid(format!(
                "super_step_measures: input screen {} has mass {mass}, expected 1",
                v + 1
            )));
        }
    }
    let shape = &bank.screens()[0];
    let mut out = Vec::with_capacity(s.v_count);
    for (v, comp) in a.comps().iter().enumerate() {
        let ifs = &s.components[comp.n as usize - 1];
        let mut screen = MeasureRaster::zero(shape.width, shape.height, shape.frame)?;
        for (q, &w) in comp.screens.iter().enumerate() {
            let src = &bank.screens()[w as usize - 1];
            let map = &ifs.maps[q];
            let weight = ifs.probs[q];
            for row in 0..src.height {
                for col in 0..src.width {
                    let mass = src.at(col, row);
                    if mass > 0.0 {
                        let p = src.frame.center(col, row, src.width, src.height);
                        screen.add_at_point(map.apply(p)?, mass * weight);
                    }
                }
            }
        }
        let total = screen.total_mass();
        if (total - 1.0).abs() > MASS_DRIFT_TOL {
            return Err(numerical(format!(
                "super_step_measures: screen {} drifted to mass {total} (mass escaped the frame?)",
                v + 1
            )));
        }
        screen.normalize()?;
        out.push(screen);
    }
    Ok(ScreenBank {
        screens: out,
        generation: bank.generation + 1,
    })
}

/// f^a on V-tuples of finite point lists, branch-major: the exact-arithmetic
/// form used by the conjugacy checks.
pub fn super_step_points(
    s: &SuperIfs,
    a: &IndexA,
    screens: &[Vec<Point2>],
) -> Result<Vec<Vec<Point2>>> {
    s.check_index("super_step_points", a)?;
    if screens.len() != s.v_count {
        return Err(invalid(format!(
            "super_step_points: {} screens for V = {}",
            screens.len(),
            s.v_count
        )));
    }
    let mut out = Vec::with_capacity(s.v_count);
    for comp in a.comps() {
        let ifs = &s.components[comp.n as usize - 1];
        let mut pts = Vec::new();
        for (q, &w) in comp.screens.iter().enumerate() {
            let map = &ifs.maps[q];
            for p in &screens[w as usize - 1] {
                pts.push(map.apply(*p)?);
            }
        }
        out.push(pts);
    }
    Ok(out)
}

/// The per-step index sampler of the chain: all randomness of a run flows
/// through one of these, so set, measure and grove tracks of the same seed
/// see the same indices.
pub struct IndexStream {
    probs: Vec<f64>,
    m: usize,
    v_count: usize,
    rng: ArtifactRng,
}

impl IndexStream {
    pub fn new(s: &SuperIfs, seed: u64) -> IndexStream {
        IndexStream {
            probs: s.probs.clone(),
            m: s.m(),
            v_count: s.v_count,
            rng: rng::from_seed(seed),
        }
    }

    pub fn next_index(&mut self) -> IndexA {
        sample_index(&mut self.rng, &self.probs, self.m, self.v_count)
            .expect("stream shape was validated at construction")
    }
}

/// Runs `iterations` set-mode steps from `init`, invoking `on_step` after
/// each one; returns the final bank and the sampled index log.
pub fn run_superfractal_sets(
    s: &SuperIfs,
    init: ScreenBank<Raster>,
    iterations: u64,
    seed: u64,
    mut on_step: impl FnMut(u64, &ScreenBank<Raster>) -> Result<()>,
) -> Result<(ScreenBank<Raster>, Vec<IndexA>)> {
    let mut stream = IndexStream::new(s, seed);
    let mut bank = init;
    let mut log = Vec::with_capacity(iterations.min(1 << 20) as usize);
    for step in 1..=iterations {
        let a = stream.next_index();
        bank = super_step_sets(s, &a, &bank)?;
        log.push(a);
        on_step(step, &bank)?;
    }
    Ok((bank, log))
}

pub fn run_superfractal_measures(
    s: &SuperIfs,
    init: ScreenBank<MeasureRaster>,
    iterations: u64,
    seed: u64,
    mut on_step: impl FnMut(u64, &ScreenBank<MeasureRaster>) -> Result<()>,
) -> Result<(ScreenBank<MeasureRaster>, Vec<IndexA>)> {
    let mut stream = IndexStream::new(s, seed);
    let mut bank = init;
    let mut log = Vec::with_capacity(iterations.min(1 << 20) as usize);
    for step in 1..=iterations {
        let a = stream.next_index();
        bank = super_step_measures(s, &a, &bank)?;
        log.push(a);
        on_step(step, &bank)?;
    }
    Ok((bank, log))
}

/// Runs the grove chain: each step applies ξ with a fresh index, then
/// truncates to `depth_cap` so the state stays bounded.
pub fn run_superfractal_groves(
    s: &SuperIfs,
    iterations: u64,
    depth_cap: usize,
    seed: u64,
) -> Result<(Grove, Vec<IndexA>)> {
    let mut stream = IndexStream::new(s, seed);
    let mut grove = Grove::constant(s.m(), s.v_count, 0, 1)?;
    let mut log = Vec::with_capacity(iterations.min(1 << 20) as usize);
    for _ in 0..iterations {
        let a = stream.next_index();
        grove = xi(&a, &grove)?.truncate(depth_cap);
        log.push(a);
    }
    Ok((grove, log))
}

fn branch_labels(sigma: &CodeTree, branch: usize) -> Vec<(usize, usize)> {
    // For one length-k branch in lex order: the (level, digit) pairs read
    // from the tree, outermost first.
    let m = sigma.m();
    let k = sigma.depth();
    let mut digits = vec![0usize; k];
    let mut b = branch;
    for j in (0..k).rev() {
        digits[j] = b % m;
        b /= m;
    }
    let mut out = Vec::with_capacity(k);
    let mut pos = 0usize;
    for (j, &d) in digits.iter().enumerate() {
        out.push((sigma.label(j, pos) as usize, d));
        pos = pos * m + d;
    }
    out
}

/// The M^k points f_{q_1}^{σ(∅)} ∘ f_{q_2}^{σ(q_1)} ∘ … (x0), one per
/// length-k branch of σ in lex order. Level-k labels of σ are not read.
pub fn backward_expand(s: &SuperIfs, sigma: &CodeTree, x0: Point2) -> Result<Vec<Point2>> {
    s.check_tree("backward_expand", sigma)?;
    let k = sigma.depth();
    let count = s.m().pow(k as u32);
    let mut out = Vec::with_capacity(count);
    for branch in 0..count {
        let mut p = x0;
        for &(n, d) in branch_labels(sigma, branch).iter().rev() {
            p = s.components[n - 1].maps[d].apply(p)?;
        }
        out.push(p);
    }
    Ok(out)
}

/// As [`backward_expand`], with each point weighted by the product of its
/// branch probabilities p_{q_j}^{σ(...)}; the weights sum to 1.
pub fn backward_expand_measure(
    s: &SuperIfs,
    sigma: &CodeTree,
    x0: Point2,
) -> Result<Vec<(Point2, f64)>> {
    s.check_tree("backward_expand_measure", sigma)?;
    let k = sigma.depth();
    let count = s.m().pow(k as u32);
    let mut out = Vec::with_capacity(count);
    let mut total = 0.0;
    for branch in 0..count {
        let labels = branch_labels(sigma, branch);
        let mut p = x0;
        let mut weight = 1.0;
        for &(n, d) in labels.iter().rev() {
            p = s.components[n - 1].maps[d].apply(p)?;
        }
        for &(n, d) in &labels {
            weight *= s.components[n - 1].probs[d];
        }
        total += weight;
        out.push((p, weight));
    }
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(numerical(format!(
            "backward_expand_measure: branch weights sum to {total}"
        )));
    }
    Ok(out)
}
