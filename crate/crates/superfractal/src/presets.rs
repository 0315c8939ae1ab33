//! Built-in map families, IFSs and superIFSs used by the CLI configs, the
//! examples and the test suite.

use crate::dimension::ScaleTable;
use crate::geometry::Map2;
use crate::ifs::Ifs;
use crate::superifs::SuperIfs;

/// The two-component "fish" family: four affine contractions on the unit
/// square, indexed by component n ∈ {1,2} and map m ∈ {1,2}. Not
/// similitudes: each map scales its two axes by √½ and ⅜√2.
pub fn fish_map(n: usize, m: usize) -> Map2 {
    match (n, m) {
        (1, 1) => Map2::affine(0.5, -0.375, 0.3125, 0.5, 0.375, 0.1875),
        (1, 2) => Map2::affine(0.5, 0.375, 0.1875, -0.5, 0.375, 0.6875),
        (2, 1) => Map2::affine(0.5, -0.375, 0.3125, -0.5, -0.375, 0.8125),
        (2, 2) => Map2::affine(0.5, 0.375, 0.1875, 0.5, -0.375, 0.3125),
        _ => panic!("fish_map: component {n}, map {m} outside 1..=2"),
    }
}

pub fn fish_component(n: usize) -> Ifs {
    let maps = vec![fish_map(n, 1), fish_map(n, 2)];
    Ifs::new(format!("fish-{n}"), maps, vec![0.5, 0.5]).expect("fish component is valid")
}

pub fn fish_superifs(v: usize) -> SuperIfs {
    SuperIfs::new(
        "fish",
        vec![fish_component(1), fish_component(2)],
        vec![0.5, 0.5],
        v,
    )
    .expect("fish superIFS is valid")
}

/// A three-map blend of the two fish components, for single-IFS demos.
pub fn fish_single_ifs() -> Ifs {
    let maps = vec![fish_map(1, 1), fish_map(1, 2), fish_map(2, 2)];
    Ifs::new("fish-single", maps, vec![0.36, 0.28, 0.36]).expect("fish single IFS is valid")
}

/// Right-angle gasket: x ↦ (x + q)/2 for q ∈ {(0,0), (1,0), (0,1)}.
pub fn sierpinski_half() -> Ifs {
    let maps = vec![
        Map2::affine(0.5, 0.0, 0.0, 0.0, 0.5, 0.0),
        Map2::affine(0.5, 0.0, 0.5, 0.0, 0.5, 0.0),
        Map2::affine(0.5, 0.0, 0.0, 0.0, 0.5, 0.5),
    ];
    let p = 1.0 / 3.0;
    Ifs::new("sierpinski-half", maps, vec![p, p, p]).expect("gasket IFS is valid")
}

/// Same three fixed points with contraction 1/3: x ↦ x/3 + 2q/3.
pub fn sierpinski_third() -> Ifs {
    let s = 1.0 / 3.0;
    let t = 2.0 / 3.0;
    let maps = vec![
        Map2::affine(s, 0.0, 0.0, 0.0, s, 0.0),
        Map2::affine(s, 0.0, t, 0.0, s, 0.0),
        Map2::affine(s, 0.0, 0.0, 0.0, s, t),
    ];
    Ifs::new("sierpinski-third", maps, vec![s, s, s]).expect("gasket IFS is valid")
}

pub fn sierpinski_superifs(v: usize) -> SuperIfs {
    SuperIfs::new(
        "sierpinski",
        vec![sierpinski_half(), sierpinski_third()],
        vec![0.5, 0.5],
        v,
    )
    .expect("gasket superIFS is valid")
}

pub fn sierpinski_scale_table() -> ScaleTable {
    let third = 1.0 / 3.0;
    ScaleTable::new(vec![vec![0.5, 0.5, 0.5], vec![third, third, third]])
        .expect("gasket scale table is valid")
}

/// Two projective IFSs producing branching "ti-tree" silhouettes. The
/// attractors sit inside [0.1, 0.97] × [-0.04, 0.97]; a frame of
/// [-0.15, 1.15]² keeps every denominator bounded away from zero.
pub fn titree_map(n: usize, m: usize) -> Map2 {
    let build = |num_x, den_x, num_y, den_y| {
        Map2::projective(num_x, den_x, num_y, den_y).expect("ti-tree map is valid")
    };
    match (n, m) {
        (1, 1) => build(
            [1.629, 0.135, -1.99],
            [-0.780, 0.864, -2.569],
            [0.505, 1.935, -0.216],
            [0.780, -0.864, 2.569],
        ),
        (1, 2) => build(
            [1.616, -2.758, 3.678],
            [1.664, -0.944, 3.883],
            [2.151, 0.567, 2.020],
            [1.664, -0.944, 3.883],
        ),
        (2, 1) => build(
            [1.667, 0.098, -2.005],
            [-0.773, 0.790, -2.575],
            [0.563, 2.064, -0.278],
            [0.773, -0.790, 2.575],
        ),
        (2, 2) => build(
            [1.470, -2.193, 3.035],
            [2.432, -0.581, 2.872],
            [1.212, 0.686, 2.059],
            [2.432, -0.581, 2.872],
        ),
        _ => panic!("titree_map: component {n}, map {m} outside 1..=2"),
    }
}

pub fn titree_component(n: usize) -> Ifs {
    let maps = vec![titree_map(n, 1), titree_map(n, 2)];
    // Contractive near the attractor, not across the whole square, so the
    // per-map grid check is skipped.
    Ifs::average_contractive(format!("titree-{n}"), maps, vec![0.74, 0.26])
        .expect("ti-tree component is valid")
}

pub fn titree_superifs(v: usize) -> SuperIfs {
    SuperIfs::new(
        "titree",
        vec![titree_component(1), titree_component(2)],
        vec![0.5, 0.5],
        v,
    )
    .expect("ti-tree superIFS is valid")
}
