//! The code-tree calculus: M-ary labelled trees and groves, the indices that
//! drive the screen chain, function trees with their composition law, the
//! maps ξ and η on groves, dependence trees with the freeness test, and the
//! cylinder measures ρ (fully random limit) and ρ_V (Monte Carlo).

use crate::error::{invalid, Result};
use crate::rng::{self, ArtifactRng};
use crate::Estimate;
use std::collections::HashMap;

/// Hard cap on stored labels per tree, to catch runaway depths early.
const NODE_CAP: usize = 1 << 24;

/// Nodes strictly above `level`: (m^level − 1)/(m − 1).
fn level_offset(m: usize, level: usize) -> usize {
    if m == 1 {
        level
    } else {
        (m.pow(level as u32) - 1) / (m - 1)
    }
}

fn level_size(m: usize, level: usize) -> usize {
    m.pow(level as u32)
}

fn check_shape(op: &str, m: usize, depth: usize) -> Result<usize> {
    if m == 0 {
        return Err(invalid(format!("{op}: branching factor must be ≥ 1")));
    }
    let bits = (m as f64).log2() * (depth as f64 + 1.0);
    if bits > 25.0 || level_offset(m, depth + 1) > NODE_CAP {
        return Err(invalid(format!(
            "{op}: tree with m = {m}, depth = {depth} exceeds the node cap"
        )));
    }
    Ok(level_offset(m, depth + 1))
}

/// A full M-ary tree of the given depth with a label ≥ 1 on every node,
/// stored level by level. Node (level ℓ, position i) has children at
/// (ℓ+1, i·M + q).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CodeTree {
    m: usize,
    depth: usize,
    labels: Vec<u16>,
}

impl CodeTree {
    pub fn constant(m: usize, depth: usize, label: u16) -> Result<CodeTree> {
        let total = check_shape("CodeTree::constant", m, depth)?;
        if label == 0 {
            return Err(invalid("CodeTree::constant: labels start at 1".to_string()));
        }
        Ok(CodeTree {
            m,
            depth,
            labels: vec![label; total],
        })
    }

    pub fn from_levels(m: usize, levels: Vec<Vec<u16>>) -> Result<CodeTree> {
        if levels.is_empty() {
            return Err(invalid("CodeTree::from_levels: no levels".to_string()));
        }
        let depth = levels.len() - 1;
        let total = check_shape("CodeTree::from_levels", m, depth)?;
        let mut labels = Vec::with_capacity(total);
        for (l, level) in levels.iter().enumerate() {
            if level.len() != level_size(m, l) {
                return Err(invalid(format!(
                    "CodeTree::from_levels: level {l} has {} labels, expected {}",
                    level.len(),
                    level_size(m, l)
                )));
            }
            if level.iter().any(|x| *x == 0) {
                return Err(invalid(format!(
                    "CodeTree::from_levels: zero label at level {l}"
                )));
            }
            labels.extend_from_slice(level);
        }
        Ok(CodeTree { m, depth, labels })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level(&self, l: usize) -> &[u16] {
        let start = level_offset(self.m, l);
        &self.labels[start..start + level_size(self.m, l)]
    }

    pub fn label(&self, level: usize, pos: usize) -> u16 {
        self.level(level)[pos]
    }

    pub fn max_label(&self) -> u16 {
        *self.labels.iter().max().expect("trees are never empty")
    }

    pub fn truncate(&self, depth: usize) -> CodeTree {
        let depth = depth.min(self.depth);
        CodeTree {
            m: self.m,
            depth,
            labels: self.labels[..level_offset(self.m, depth + 1)].to_vec(),
        }
    }

    /// The full subtree hanging at (level, pos), as a tree of depth
    /// `self.depth − level`.
    pub fn subtree(&self, level: usize, pos: usize) -> Result<CodeTree> {
        if level > self.depth || pos >= level_size(self.m, level) {
            return Err(invalid(format!(
                "CodeTree::subtree: ({level}, {pos}) outside tree of depth {}",
                self.depth
            )));
        }
        let mut labels = Vec::with_capacity(level_offset(self.m, self.depth - level + 1));
        for l in level..=self.depth {
            let width = level_size(self.m, l - level);
            let block = &self.level(l)[pos * width..(pos + 1) * width];
            labels.extend_from_slice(block);
        }
        Ok(CodeTree {
            m: self.m,
            depth: self.depth - level,
            labels,
        })
    }

    /// Text form `M k : root ; a b ; a b c d ; ...`, levels separated by
    /// `;`, labels by spaces.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} :", self.m, self.depth);
        for l in 0..=self.depth {
            if l > 0 {
                out.push_str(" ;");
            }
            for x in self.level(l) {
                out.push(' ');
                out.push_str(&x.to_string());
            }
        }
        out
    }

    pub fn from_text(s: &str) -> Result<CodeTree> {
        let (header, body) = s
            .split_once(':')
            .ok_or_else(|| invalid(format!("CodeTree::from_text: missing ':' in '{s}'")))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(invalid(format!(
                "CodeTree::from_text: header '{}' is not 'M k'",
                header.trim()
            )));
        }
        let m: usize = head[0]
            .parse()
            .map_err(|_| invalid(format!("CodeTree::from_text: bad branching '{}'", head[0])))?;
        let depth: usize = head[1]
            .parse()
            .map_err(|_| invalid(format!("CodeTree::from_text: bad depth '{}'", head[1])))?;
        let mut levels = Vec::new();
        for (l, chunk) in body.split(';').enumerate() {
            let mut level = Vec::new();
            for tok in chunk.split_whitespace() {
                let x: u16 = tok.parse().map_err(|_| {
                    invalid(format!("CodeTree::from_text: bad label '{tok}' at level {l}"))
                })?;
                level.push(x);
            }
            levels.push(level);
        }
        if levels.len() != depth + 1 {
            return Err(invalid(format!(
                "CodeTree::from_text: {} levels for declared depth {depth}",
                levels.len()
            )));
        }
        CodeTree::from_levels(m, levels)
    }
}

impl std::fmt::Debug for CodeTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CodeTree({})", self.to_text())
    }
}

/// Uniform random labels in 1..=n_count, for tests and demos.
pub fn random_tree(
    rng: &mut ArtifactRng,
    m: usize,
    depth: usize,
    n_count: usize,
) -> Result<CodeTree> {
    let total = check_shape("random_tree", m, depth)?;
    if n_count == 0 || n_count > u16::MAX as usize {
        return Err(invalid(format!("random_tree: bad label count {n_count}")));
    }
    let labels = (0..total)
        .map(|_| rng::draw_uniform(rng, n_count) as u16 + 1)
        .collect();
    Ok(CodeTree {
        m,
        depth,
        labels,
    })
}

/// A V-tuple of code trees sharing one branching factor and depth: the state
/// of the screen chain.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Grove {
    trees: Vec<CodeTree>,
}

impl Grove {
    pub fn new(trees: Vec<CodeTree>) -> Result<Grove> {
        if trees.is_empty() {
            return Err(invalid("Grove::new: no trees".to_string()));
        }
        let (m, depth) = (trees[0].m, trees[0].depth);
        if trees.iter().any(|t| t.m != m || t.depth != depth) {
            return Err(invalid(format!(
                "Grove::new: trees disagree on shape (expected m = {m}, depth = {depth})"
            )));
        }
        Ok(Grove { trees })
    }

    pub fn constant(m: usize, v_count: usize, depth: usize, label: u16) -> Result<Grove> {
        if v_count == 0 {
            return Err(invalid("Grove::constant: no screens".to_string()));
        }
        Ok(Grove {
            trees: vec![CodeTree::constant(m, depth, label)?; v_count],
        })
    }

    pub fn trees(&self) -> &[CodeTree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn m(&self) -> usize {
        self.trees[0].m
    }

    pub fn depth(&self) -> usize {
        self.trees[0].depth
    }

    pub fn truncate(&self, depth: usize) -> Grove {
        Grove {
            trees: self.trees.iter().map(|t| t.truncate(depth)).collect(),
        }
    }
}

/// One row of an index: the component n chosen for a screen and the M input
/// screens its branches read.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IndexComp {
    pub n: u16,
    pub screens: Vec<u16>,
}

/// A full index a = (a_1, ..., a_V): the randomness of one chain step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IndexA {
    comps: Vec<IndexComp>,
}

impl IndexA {
    pub fn new(comps: Vec<IndexComp>, n_count: usize) -> Result<IndexA> {
        if comps.is_empty() {
            return Err(invalid("IndexA::new: no screens".to_string()));
        }
        let v_count = comps.len();
        let m = comps[0].screens.len();
        if m == 0 {
            return Err(invalid("IndexA::new: no branches".to_string()));
        }
        for (v, comp) in comps.iter().enumerate() {
            if comp.n == 0 || comp.n as usize > n_count {
                return Err(invalid(format!(
                    "IndexA::new: screen {}: component {} outside 1..={n_count}",
                    v + 1,
                    comp.n
                )));
            }
            if comp.screens.len() != m {
                return Err(invalid(format!(
                    "IndexA::new: screen {}: {} branches, expected {m}",
                    v + 1,
                    comp.screens.len()
                )));
            }
            if let Some(w) = comp
                .screens
                .iter()
                .find(|w| **w == 0 || **w as usize > v_count)
            {
                return Err(invalid(format!(
                    "IndexA::new: screen {}: input screen {w} outside 1..={v_count}",
                    v + 1
                )));
            }
        }
        Ok(IndexA { comps })
    }

    pub fn comps(&self) -> &[IndexComp] {
        &self.comps
    }

    pub fn v_count(&self) -> usize {
        self.comps.len()
    }

    pub fn m(&self) -> usize {
        self.comps[0].screens.len()
    }
}

/// Draws an index with the product law 𝒫: for each screen in order, the
/// component n with law `n_probs`, then its M input screens uniformly.
pub fn sample_index(
    rng: &mut ArtifactRng,
    n_probs: &[f64],
    m: usize,
    v_count: usize,
) -> Result<IndexA> {
    if m == 0 || v_count == 0 || n_probs.is_empty() {
        return Err(invalid(format!(
            "sample_index: degenerate shape (M = {m}, V = {v_count}, N = {})",
            n_probs.len()
        )));
    }
    let comps = (0..v_count)
        .map(|_| {
            let n = rng::draw_index(rng, n_probs) as u16 + 1;
            let screens = (0..m)
                .map(|_| rng::draw_uniform(rng, v_count) as u16 + 1)
                .collect();
            IndexComp { n, screens }
        })
        .collect();
    IndexA::new(comps, n_probs.len())
}

/// 𝒫^a = P_{n_1} ⋯ P_{n_V} / V^{MV}.
pub fn index_probability(a: &IndexA, n_probs: &[f64]) -> Result<f64> {
    let v_count = a.v_count();
    let mut p = 1.0;
    for comp in a.comps() {
        let n = comp.n as usize;
        if n > n_probs.len() {
            return Err(invalid(format!(
                "index_probability: component {n} outside 1..={}",
                n_probs.len()
            )));
        }
        p *= n_probs[n - 1];
    }
    Ok(p / (v_count as f64).powi((a.m() * v_count) as i32))
}

/// One screen of a function tree: component labels on nodes (levels
/// 0..k−1) and screen labels on limbs (levels 1..k), both level-ordered.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FunctionComponent {
    nodes: Vec<u16>,
    limbs: Vec<u16>,
}

impl FunctionComponent {
    fn node_level(&self, m: usize, l: usize) -> &[u16] {
        let start = level_offset(m, l);
        &self.nodes[start..start + level_size(m, l)]
    }

    fn limb_level(&self, m: usize, l: usize) -> &[u16] {
        let start = level_offset(m, l) - 1;
        &self.limbs[start..start + level_size(m, l)]
    }
}

/// A depth-k function tree: for each output screen, a tree of k node levels
/// naming components and k limb levels naming input screens. Composition of
/// k indices; acts on groves through [`eta`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FunctionTree {
    m: usize,
    v_count: usize,
    k: usize,
    comps: Vec<FunctionComponent>,
}

impl FunctionTree {
    pub fn from_index(a: &IndexA) -> FunctionTree {
        let comps = a
            .comps()
            .iter()
            .map(|c| FunctionComponent {
                nodes: vec![c.n],
                limbs: c.screens.clone(),
            })
            .collect();
        FunctionTree {
            m: a.m(),
            v_count: a.v_count(),
            k: 1,
            comps,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn v_count(&self) -> usize {
        self.v_count
    }

    pub fn depth(&self) -> usize {
        self.k
    }

    pub fn node_label(&self, screen: usize, level: usize, pos: usize) -> u16 {
        self.comps[screen - 1].node_level(self.m, level)[pos]
    }

    pub fn limb_label(&self, screen: usize, level: usize, pos: usize) -> u16 {
        self.comps[screen - 1].limb_level(self.m, level)[pos]
    }
}

/// (g∘h): keep g's nodes and limbs, then hang component h_w below each
/// leaf limb of g labelled w. Depths add.
pub fn compose(g: &FunctionTree, h: &FunctionTree) -> Result<FunctionTree> {
    if g.m != h.m || g.v_count != h.v_count {
        return Err(invalid(format!(
            "compose: mismatched shapes (M {} vs {}, V {} vs {})",
            g.m, h.m, g.v_count, h.v_count
        )));
    }
    let m = g.m;
    let k = g.k + h.k;
    check_shape("compose", m, k)?;
    let mut comps = Vec::with_capacity(g.v_count);
    for gc in &g.comps {
        let leaf_limbs = gc.limb_level(m, g.k);
        let mut nodes = gc.nodes.clone();
        for l in 0..h.k {
            for &w in leaf_limbs {
                nodes.extend_from_slice(h.comps[w as usize - 1].node_level(m, l));
            }
        }
        let mut limbs = gc.limbs.clone();
        for l in 1..=h.k {
            for &w in leaf_limbs {
                limbs.extend_from_slice(h.comps[w as usize - 1].limb_level(m, l));
            }
        }
        comps.push(FunctionComponent { nodes, limbs });
    }
    Ok(FunctionTree {
        m,
        v_count: g.v_count,
        k,
        comps,
    })
}

/// η^g: screen v of the output takes g_v's node labels for its top levels,
/// then continues with the input tree named by each leaf limb. Output depth
/// is g.depth() + grove.depth().
pub fn eta(g: &FunctionTree, grove: &Grove) -> Result<Grove> {
    if g.m != grove.m() || g.v_count != grove.len() {
        return Err(invalid(format!(
            "eta: function tree (M = {}, V = {}) against grove (M = {}, V = {})",
            g.m,
            g.v_count,
            grove.m(),
            grove.len()
        )));
    }
    let m = g.m;
    let out_depth = g.k + grove.depth();
    check_shape("eta", m, out_depth)?;
    let mut trees = Vec::with_capacity(g.v_count);
    for gc in &g.comps {
        let mut labels = gc.nodes.clone();
        let leaf_limbs = gc.limb_level(m, g.k);
        for l in 0..=grove.depth() {
            for &w in leaf_limbs {
                labels.extend_from_slice(grove.trees()[w as usize - 1].level(l));
            }
        }
        trees.push(CodeTree {
            m,
            depth: out_depth,
            labels,
        });
    }
    Grove::new(trees)
}

/// One chain step ξ_a = η^a on groves: each screen grows a new root.
pub fn xi(a: &IndexA, grove: &Grove) -> Result<Grove> {
    eta(&FunctionTree::from_index(a), grove)
}

/// The screens reached by each branch string when the indices
/// `indices[0], indices[1], ...` (outermost first) are applied from
/// `start_screen`: K(∅) = start, K(i·q) = (input screen q of component
/// K(i)) read from indices[|i|].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DependenceTree {
    m: usize,
    v_count: usize,
    depth: usize,
    screens: Vec<u16>,
}

impl DependenceTree {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level(&self, l: usize) -> &[u16] {
        let start = level_offset(self.m, l);
        &self.screens[start..start + level_size(self.m, l)]
    }

    /// Free up to its depth: within every level below the root, no screen
    /// repeats, so the labels hanging off those screens are independent.
    pub fn is_free(&self) -> bool {
        let mut seen = vec![false; self.v_count + 1];
        for l in 1..=self.depth {
            seen.iter_mut().for_each(|s| *s = false);
            for &w in self.level(l) {
                if seen[w as usize] {
                    return false;
                }
                seen[w as usize] = true;
            }
        }
        true
    }
}

fn check_index_chain(op: &str, indices: &[IndexA], need: usize, start_screen: usize) -> Result<()> {
    if indices.len() < need {
        return Err(invalid(format!(
            "{op}: needs {need} indices, got {}",
            indices.len()
        )));
    }
    let (m, v_count) = (indices[0].m(), indices[0].v_count());
    if indices.iter().any(|a| a.m() != m || a.v_count() != v_count) {
        return Err(invalid(format!("{op}: indices disagree on shape")));
    }
    if start_screen == 0 || start_screen > v_count {
        return Err(invalid(format!(
            "{op}: start screen {start_screen} outside 1..={v_count}"
        )));
    }
    Ok(())
}

pub fn dependence_tree(
    indices: &[IndexA],
    depth: usize,
    start_screen: usize,
) -> Result<DependenceTree> {
    check_index_chain("dependence_tree", indices, depth, start_screen)?;
    let (m, v_count) = (indices[0].m(), indices[0].v_count());
    check_shape("dependence_tree", m, depth)?;
    let mut screens = vec![start_screen as u16];
    let mut level_start = 0usize;
    for l in 0..depth {
        let level: Vec<u16> = screens[level_start..].to_vec();
        level_start = screens.len();
        for &w in &level {
            screens.extend_from_slice(&indices[l].comps()[w as usize - 1].screens);
        }
    }
    Ok(DependenceTree {
        m,
        v_count,
        depth,
        screens,
    })
}

/// The depth-k code tree seen on `start_screen` after applying the chain
/// `indices[0]∘indices[1]∘…`: node at (ℓ, i) is labelled by the component
/// indices[ℓ] assigns to the screen K(i).
pub fn composed_code_tree(
    indices: &[IndexA],
    depth: usize,
    start_screen: usize,
) -> Result<CodeTree> {
    check_index_chain("composed_code_tree", indices, depth + 1, start_screen)?;
    let dep = dependence_tree(indices, depth, start_screen)?;
    let mut levels = Vec::with_capacity(depth + 1);
    for l in 0..=depth {
        let level = dep
            .level(l)
            .iter()
            .map(|&w| indices[l].comps()[w as usize - 1].n)
            .collect();
        levels.push(level);
    }
    CodeTree::from_levels(indices[0].m(), levels)
}

/// Monte Carlo probability that a random dependence tree is free to the
/// given depth. Only the screen draws matter, so component labels are never
/// sampled.
pub fn free_probability_mc(
    m: usize,
    v_count: usize,
    depth: usize,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if m == 0 || v_count == 0 || samples == 0 {
        return Err(invalid(format!(
            "free_probability_mc: degenerate input (M = {m}, V = {v_count}, samples = {samples})"
        )));
    }
    check_shape("free_probability_mc", m, depth)?;
    let mut rng = rng::from_seed(seed);
    // Lazy per-level draws: one set of M child screens per distinct screen,
    // stamped by era so repeats within a level reuse the same draw.
    let mut child_of = vec![0u16; (v_count + 1) * m];
    let mut stamp = vec![0u64; v_count + 1];
    let mut era = 0u64;
    let mut hits = 0u64;
    let mut cur: Vec<u16> = Vec::new();
    let mut next: Vec<u16> = Vec::new();
    let mut seen = vec![false; v_count + 1];
    for _ in 0..samples {
        cur.clear();
        cur.push(1);
        let mut free = true;
        for _l in 0..depth {
            era += 1;
            next.clear();
            for &w in &cur {
                let w = w as usize;
                if stamp[w] != era {
                    stamp[w] = era;
                    for q in 0..m {
                        child_of[w * m + q] = rng::draw_uniform(&mut rng, v_count) as u16 + 1;
                    }
                }
                next.extend_from_slice(&child_of[w * m..(w + 1) * m]);
            }
            seen.iter_mut().for_each(|s| *s = false);
            for &w in &next {
                if seen[w as usize] {
                    free = false;
                    break;
                }
                seen[w as usize] = true;
            }
            if !free {
                break;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        hits += free as u64;
    }
    let p = hits as f64 / samples as f64;
    Ok(Estimate {
        value: p,
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

/// ρ([τ]) under the fully random (V → ∞) tree law: every node label is an
/// independent draw from `n_probs`, the root included.
pub fn rho_cylinder(tree: &CodeTree, n_probs: &[f64]) -> Result<f64> {
    let mut p = 1.0;
    for l in 0..=tree.depth() {
        for &x in tree.level(l) {
            if x as usize > n_probs.len() {
                return Err(invalid(format!(
                    "rho_cylinder: label {x} outside 1..={}",
                    n_probs.len()
                )));
            }
            p *= n_probs[x as usize - 1];
        }
    }
    Ok(p)
}

/// Monte Carlo estimate of ρ_V([τ]): the probability that screen 1 of the
/// V-screen chain shows exactly τ down to its depth. Indices are drawn
/// lazily level by level, one component row per distinct screen touched.
pub fn rho_v_cylinder_mc(
    tree: &CodeTree,
    n_probs: &[f64],
    v_count: usize,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if v_count == 0 || samples == 0 || n_probs.is_empty() {
        return Err(invalid(format!(
            "rho_v_cylinder_mc: degenerate input (V = {v_count}, N = {}, samples = {samples})",
            n_probs.len()
        )));
    }
    if tree.max_label() as usize > n_probs.len() {
        return Err(invalid(format!(
            "rho_v_cylinder_mc: tree label {} outside 1..={}",
            tree.max_label(),
            n_probs.len()
        )));
    }
    let m = tree.m();
    let mut rng = rng::from_seed(seed);
    let mut comp_n = vec![0u16; v_count + 1];
    let mut comp_screens = vec![0u16; (v_count + 1) * m];
    let mut stamp = vec![0u64; v_count + 1];
    let mut era = 0u64;
    let mut hits = 0u64;
    let mut cur: Vec<u16> = Vec::new();
    let mut next: Vec<u16> = Vec::new();
    for _ in 0..samples {
        cur.clear();
        cur.push(1);
        let mut ok = true;
        for l in 0..=tree.depth() {
            era += 1;
            let want = tree.level(l);
            for (pos, &w) in cur.iter().enumerate() {
                let w = w as usize;
                if stamp[w] != era {
                    stamp[w] = era;
                    comp_n[w] = rng::draw_index(&mut rng, n_probs) as u16 + 1;
                    for q in 0..m {
                        comp_screens[w * m + q] =
                            rng::draw_uniform(&mut rng, v_count) as u16 + 1;
                    }
                }
                if comp_n[w] != want[pos] {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
            if l < tree.depth() {
                next.clear();
                for &w in &cur {
                    let w = w as usize;
                    next.extend_from_slice(&comp_screens[w * m..(w + 1) * m]);
                }
                std::mem::swap(&mut cur, &mut next);
            }
        }
        hits += ok as u64;
    }
    let p = hits as f64 / samples as f64;
    Ok(Estimate {
        value: p,
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

/// Samples the depth-k code tree shown on screen 1 of the V-screen chain,
/// `samples` times, and tallies how often each tree appears. Rows are sorted
/// by count (descending), ties by tree text, so output is deterministic.
pub fn sample_tree_histogram(
    n_probs: &[f64],
    m: usize,
    v_count: usize,
    depth: usize,
    samples: u64,
    seed: u64,
) -> Result<Vec<(CodeTree, u64)>> {
    if m == 0 || v_count == 0 || samples == 0 || n_probs.is_empty() {
        return Err(invalid(format!(
            "sample_tree_histogram: degenerate input (M = {m}, V = {v_count}, N = {}, samples = {samples})",
            n_probs.len()
        )));
    }
    check_shape("sample_tree_histogram", m, depth)?;
    let mut rng = rng::from_seed(seed);
    let mut comp_n = vec![0u16; v_count + 1];
    let mut comp_screens = vec![0u16; (v_count + 1) * m];
    let mut stamp = vec![0u64; v_count + 1];
    let mut era = 0u64;
    let mut counts: HashMap<CodeTree, u64> = HashMap::new();
    for _ in 0..samples {
        let mut cur: Vec<u16> = vec![1];
        let mut levels: Vec<Vec<u16>> = Vec::with_capacity(depth + 1);
        for l in 0..=depth {
            era += 1;
            let mut labels = Vec::with_capacity(cur.len());
            for &w in &cur {
                let w = w as usize;
                if stamp[w] != era {
                    stamp[w] = era;
                    comp_n[w] = rng::draw_index(&mut rng, n_probs) as u16 + 1;
                    for q in 0..m {
                        comp_screens[w * m + q] =
                            rng::draw_uniform(&mut rng, v_count) as u16 + 1;
                    }
                }
                labels.push(comp_n[w]);
            }
            levels.push(labels);
            if l < depth {
                let mut next = Vec::with_capacity(cur.len() * m);
                for &w in &cur {
                    let w = w as usize;
                    next.extend_from_slice(&comp_screens[w * m..(w + 1) * m]);
                }
                cur = next;
            }
        }
        *counts.entry(CodeTree::from_levels(m, levels)?).or_insert(0) += 1;
    }
    let mut rows: Vec<(CodeTree, u64)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.to_text().cmp(&b.0.to_text())));
    Ok(rows)
}

/// Every depth-`depth` code tree with labels in 1..=n_count, in lexicographic
/// level-order. Capped at 65536 trees so callers cannot blow up by accident.
pub fn enumerate_trees(m: usize, depth: usize, n_count: usize) -> Result<Vec<CodeTree>> {
    if n_count == 0 {
        return Err(invalid("enumerate_trees: need at least one label".to_string()));
    }
    let nodes = check_shape("enumerate_trees", m, depth)?;
    let combos = (n_count as f64).powi(nodes as i32);
    if combos > 65536.0 {
        return Err(invalid(format!(
            "enumerate_trees: {n_count}^{nodes} cylinders exceed the 65536 cap"
        )));
    }
    let mut out = Vec::with_capacity(combos as usize);
    let mut labels = vec![1u16; nodes];
    'outer: loop {
        let mut levels = Vec::with_capacity(depth + 1);
        let mut off = 0;
        let mut width = 1;
        for _ in 0..=depth {
            levels.push(labels[off..off + width].to_vec());
            off += width;
            width *= m;
        }
        out.push(CodeTree::from_levels(m, levels)?);
        let mut i = nodes;
        while i > 0 {
            i -= 1;
            if (labels[i] as usize) < n_count {
                labels[i] += 1;
                labels[i + 1..].fill(1);
                continue 'outer;
            }
        }
        return Ok(out);
    }
}

/// Distinct full subtrees rooted at each level, pooled across the grove's
/// screens; a chain-generated grove never exceeds V at any level.
pub fn subtree_profile(grove: &Grove) -> Vec<usize> {
    let m = grove.m();
    let depth = grove.depth();
    let mut counts = vec![0usize; depth + 1];
    // Bottom-up hash consing: a subtree's id is determined by its root label
    // and its children's ids.
    let mut below: Vec<Vec<u32>> = vec![Vec::new(); grove.len()];
    for l in (0..=depth).rev() {
        let mut interner: HashMap<(u16, Vec<u32>), u32> = HashMap::new();
        let mut here: Vec<Vec<u32>> = Vec::with_capacity(grove.len());
        for (ti, tree) in grove.trees().iter().enumerate() {
            let level = tree.level(l);
            let mut ids = Vec::with_capacity(level.len());
            for (pos, &label) in level.iter().enumerate() {
                let kids = if l == depth {
                    Vec::new()
                } else {
                    below[ti][pos * m..(pos + 1) * m].to_vec()
                };
                let fresh = interner.len() as u32;
                ids.push(*interner.entry((label, kids)).or_insert(fresh));
            }
            here.push(ids);
        }
        counts[l] = interner.len();
        below = here;
    }
    counts
}

pub fn count_distinct_subtrees(grove: &Grove, level: usize) -> Result<usize> {
    if level > grove.depth() {
        return Err(invalid(format!(
            "count_distinct_subtrees: level {level} exceeds depth {}",
            grove.depth()
        )));
    }
    Ok(subtree_profile(grove)[level])
}
