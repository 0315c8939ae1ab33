//! Fractal dimension solvers: the Moran equation, its fully random and
//! homogeneous generalizations, and the V-variable dimension via Lyapunov
//! exponents of random flow-matrix products with noisy bisection.

use crate::error::{invalid, numerical, Result};
use crate::geometry::Similitude2;
use crate::rng::{self};
use crate::superifs::SuperIfs;
use crate::trees::{sample_index, IndexA};
use crate::Estimate;
use rayon::prelude::*;

const BISECT_LO: f64 = 0.0;
const BISECT_HI: f64 = 50.0;
const BISECT_TOL: f64 = 1e-12;
const REPLICAS: u64 = 8;
/// Offset separating the validation replica's streams from the bisection's.
const CHECK_STREAM: u64 = 0x5eed_0001;

/// Similitude ratios s_m^n, one row of M ratios per component IFS.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleTable {
    pub ratios: Vec<Vec<f64>>,
}

impl ScaleTable {
    pub fn new(ratios: Vec<Vec<f64>>) -> Result<ScaleTable> {
        if ratios.is_empty() {
            return Err(invalid("ScaleTable::new: no components".to_string()));
        }
        let m = ratios[0].len();
        if m == 0 {
            return Err(invalid("ScaleTable::new: empty ratio row".to_string()));
        }
        for (n, row) in ratios.iter().enumerate() {
            if row.len() != m {
                return Err(invalid(format!(
                    "ScaleTable::new: row {} has {} ratios, expected {m}",
                    n + 1,
                    row.len()
                )));
            }
            if let Some(s) = row.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
                return Err(invalid(format!(
                    "ScaleTable::new: ratio {s} in row {} outside (0,1)",
                    n + 1
                )));
            }
        }
        Ok(ScaleTable { ratios })
    }

    /// Reads the ratio of every component map, which must therefore be a
    /// similitude (x ↦ s·Ox + t with O orthogonal).
    pub fn from_superifs(s: &SuperIfs) -> Result<ScaleTable> {
        let mut ratios = Vec::with_capacity(s.n());
        for ifs in &s.components {
            let mut row = Vec::with_capacity(ifs.map_count());
            for (m, map) in ifs.maps.iter().enumerate() {
                let sim = Similitude2::from_map(map).map_err(|e| {
                    invalid(format!(
                        "dimension requires similitude maps (equal-ratio scaling in every \
                         direction); component '{}' map {} is not one: {e}",
                        ifs.name,
                        m + 1
                    ))
                })?;
                row.push(sim.scale);
            }
            ratios.push(row);
        }
        ScaleTable::new(ratios)
    }

    pub fn n(&self) -> usize {
        self.ratios.len()
    }

    pub fn m(&self) -> usize {
        self.ratios[0].len()
    }
}

fn check_probs(op: &str, table: &ScaleTable, probs: &[f64]) -> Result<()> {
    if probs.len() != table.n() {
        return Err(invalid(format!(
            "{op}: {} probabilities for {} components",
            probs.len(),
            table.n()
        )));
    }
    if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
        return Err(invalid(format!("{op}: negative or non-finite probability")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("{op}: probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

/// Σ_m s_m^D − 1: strictly decreasing in D, with the Moran dimension at its
/// root.
pub fn moran_objective(scales: &[f64], d: f64) -> f64 {
    scales.iter().map(|s| s.powf(d)).sum::<f64>() - 1.0
}

/// Σ_n P_n Σ_m (s_m^n)^D − 1.
pub fn random_objective(table: &ScaleTable, probs: &[f64], d: f64) -> f64 {
    table
        .ratios
        .iter()
        .zip(probs)
        .map(|(row, p)| p * row.iter().map(|s| s.powf(d)).sum::<f64>())
        .sum::<f64>()
        - 1.0
}

/// Σ_n P_n ln Σ_m (s_m^n)^D: zero at the homogeneous (V = 1) dimension.
pub fn homogeneous_objective(table: &ScaleTable, probs: &[f64], d: f64) -> f64 {
    table
        .ratios
        .iter()
        .zip(probs)
        .map(|(row, p)| p * row.iter().map(|s| s.powf(d)).sum::<f64>().ln())
        .sum()
}

/// Bisection for the root of a strictly decreasing function on [lo, hi].
fn bisect_decreasing(op: &str, lo0: f64, hi0: f64, tol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo0, hi0);
    let flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    if flo < 0.0 || f(hi) > 0.0 {
        return Err(numerical(format!(
            "{op}: no sign change on [{lo0}, {hi0}] (f({lo0}) = {flo})"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The root D of Σ_m s_m^D = 1.
pub fn moran_dimension(scales: &[f64]) -> Result<f64> {
    let table = ScaleTable::new(vec![scales.to_vec()])?;
    bisect_decreasing("moran_dimension", BISECT_LO, BISECT_HI, BISECT_TOL, |d| {
        moran_objective(&table.ratios[0], d)
    })
}

/// The root of Σ_n P_n Σ_m (s_m^n)^D = 1: the almost-sure dimension in the
/// fully random (V → ∞) regime.
pub fn random_dimension(table: &ScaleTable, probs: &[f64]) -> Result<f64> {
    check_probs("random_dimension", table, probs)?;
    bisect_decreasing("random_dimension", BISECT_LO, BISECT_HI, BISECT_TOL, |d| {
        random_objective(table, probs, d)
    })
}

/// The root of Σ_n P_n ln Σ_m (s_m^n)^D = 0: the homogeneous (V = 1)
/// dimension.
pub fn homogeneous_dimension(table: &ScaleTable, probs: &[f64]) -> Result<f64> {
    check_probs("homogeneous_dimension", table, probs)?;
    bisect_decreasing(
        "homogeneous_dimension",
        BISECT_LO,
        BISECT_HI,
        BISECT_TOL,
        |d| homogeneous_objective(table, probs, d),
    )
}

/// M^a(α): entry (v, w) sums (s_m^{n_v})^α over the branches m of screen v
/// that read screen w.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMatrix {
    pub v_count: usize,
    pub alpha: f64,
    /// Row-major V×V entries.
    pub entries: Vec<f64>,
}

impl FlowMatrix {
    pub fn at(&self, v: usize, w: usize) -> f64 {
        self.entries[v * self.v_count + w]
    }

    pub fn row_sum(&self, v: usize) -> f64 {
        self.entries[v * self.v_count..(v + 1) * self.v_count]
            .iter()
            .sum()
    }
}

pub fn flow_matrix(a: &IndexA, table: &ScaleTable, alpha: f64) -> Result<FlowMatrix> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("flow_matrix: alpha {alpha} must be ≥ 0")));
    }
    if a.m() != table.m() {
        return Err(invalid(format!(
            "flow_matrix: index has M = {}, table has M = {}",
            a.m(),
            table.m()
        )));
    }
    let v_count = a.v_count();
    let mut entries = vec![0.0; v_count * v_count];
    for (v, comp) in a.comps().iter().enumerate() {
        let n = comp.n as usize;
        if n > table.n() {
            return Err(invalid(format!(
                "flow_matrix: index names component {n} of {}",
                table.n()
            )));
        }
        for (q, &w) in comp.screens.iter().enumerate() {
            entries[v * v_count + w as usize - 1] += table.ratios[n - 1][q].powf(alpha);
        }
    }
    Ok(FlowMatrix {
        v_count,
        alpha,
        entries,
    })
}

fn lyapunov_replica(
    table: &ScaleTable,
    probs: &[f64],
    v_count: usize,
    alpha: f64,
    k: u64,
    seed: u64,
    renorm_every: u64,
) -> Result<f64> {
    let m = table.m();
    // One powf per table cell, amortized over all k steps.
    let pow: Vec<Vec<f64>> = table
        .ratios
        .iter()
        .map(|row| row.iter().map(|s| s.powf(alpha)).collect())
        .collect();
    let mut rng = rng::from_seed(seed);
    let mut y = vec![1.0 / v_count as f64; v_count];
    let mut y_next = vec![0.0; v_count];
    let mut log_norm = 0.0f64;
    for step in 1..=k {
        let a = sample_index(&mut rng, probs, m, v_count)?;
        y_next.iter_mut().for_each(|x| *x = 0.0);
        for (v, comp) in a.comps().iter().enumerate() {
            let row = &pow[comp.n as usize - 1];
            let mass = y[v];
            for (q, &w) in comp.screens.iter().enumerate() {
                y_next[w as usize - 1] += mass * row[q];
            }
        }
        std::mem::swap(&mut y, &mut y_next);
        if step % renorm_every == 0 || step == k {
            let total: f64 = y.iter().sum();
            if !(total > 0.0) || !total.is_finite() {
                return Err(numerical(format!(
                    "lyapunov: vector norm degenerated to {total} at step {step}"
                )));
            }
            log_norm += total.ln();
            y.iter_mut().for_each(|x| *x /= total);
        }
    }
    Ok(log_norm / k as f64)
}

pub(crate) fn lyapunov_with_schedule(
    table: &ScaleTable,
    probs: &[f64],
    v_count: usize,
    alpha: f64,
    k: u64,
    seed: u64,
    renorm_every: u64,
) -> Result<Estimate> {
    check_probs("lyapunov", table, probs)?;
    if k == 0 || v_count == 0 || renorm_every == 0 {
        return Err(invalid(format!(
            "lyapunov: k = {k}, V = {v_count}, renorm stride {renorm_every} must all be ≥ 1"
        )));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("lyapunov: alpha {alpha} must be ≥ 0")));
    }
    let gammas: Vec<Result<f64>> = (0..REPLICAS)
        .into_par_iter()
        .map(|r| {
            lyapunov_replica(
                table,
                probs,
                v_count,
                alpha,
                k,
                rng::substream_seed(seed, r),
                renorm_every,
            )
        })
        .collect();
    let mut values = Vec::with_capacity(REPLICAS as usize);
    for g in gammas {
        values.push(g?);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1.0);
    Ok(Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    })
}

/// γ(α) = lim k⁻¹ log‖M^1(α)⋯M^k(α)‖, estimated by left vector iteration
/// over k sampled indices with per-step renormalization; mean ± stderr over
/// 8 independent replicas. Deterministic per seed, independent of threads.
pub fn lyapunov(
    table: &ScaleTable,
    probs: &[f64],
    v_count: usize,
    alpha: f64,
    k: u64,
    seed: u64,
) -> Result<Estimate> {
    lyapunov_with_schedule(table, probs, v_count, alpha, k, seed, 1)
}

/// One recorded γ evaluation of a V-variable dimension run.
#[derive(Clone, Debug)]
pub struct GammaEval {
    pub alpha: f64,
    pub gamma: f64,
    pub stderr: f64,
    pub k: u64,
    pub v_count: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct VvarDimension {
    pub dimension: f64,
    /// Propagated |γ̂| + stderr at the root over the local slope, plus the
    /// bisection tolerance.
    pub uncertainty: f64,
    /// Independent γ replication at the returned root.
    pub residual: Estimate,
    pub evals: Vec<GammaEval>,
}

/// Bisection for γ(D) = 0. Every bracketing evaluation reuses the same seed
/// (common random numbers), which makes the noisy γ̂ exactly monotone in α;
/// the root is then validated with an independent replication.
pub fn vvariable_dimension(
    table: &ScaleTable,
    probs: &[f64],
    v_count: usize,
    k: u64,
    seed: u64,
    tol: f64,
) -> Result<VvarDimension> {
    if !(tol > 0.0) {
        return Err(invalid(format!("vvariable_dimension: tol {tol} must be > 0")));
    }
    let mut evals: Vec<GammaEval> = Vec::new();
    let eval = |alpha: f64, s: u64, evals: &mut Vec<GammaEval>| -> Result<Estimate> {
        let e = lyapunov(table, probs, v_count, alpha, k, s)?;
        evals.push(GammaEval {
            alpha,
            gamma: e.value,
            stderr: e.stderr,
            k,
            v_count,
            seed: s,
        });
        Ok(e)
    };

    let g0 = eval(0.0, seed, &mut evals)?;
    if g0.value <= 0.0 {
        return Err(numerical(format!(
            "vvariable_dimension: γ(0) = {} ≤ 0, no root in [0, ∞)",
            g0.value
        )));
    }
    let mut lo = 0.0;
    let mut hi = 2.0;
    let mut g_hi = eval(hi, seed, &mut evals)?;
    while g_hi.value > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BISECT_HI {
            return Err(numerical(format!(
                "vvariable_dimension: γ still positive at α = {lo}"
            )));
        }
        g_hi = eval(hi, seed, &mut evals)?;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let g_mid = eval(mid, seed, &mut evals)?;
        if g_mid.value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let dimension = 0.5 * (lo + hi);

    // Local slope from a wider, noise-robust chord.
    let delta = tol.max(0.05);
    let g_left = eval((dimension - delta).max(0.0), seed, &mut evals)?;
    let g_right = eval(dimension + delta, seed, &mut evals)?;
    let slope = ((g_left.value - g_right.value)
        / (dimension + delta - (dimension - delta).max(0.0)))
    .max(1e-9);

    let check_seed = rng::substream_seed(seed, CHECK_STREAM);
    let residual = {
        let e = eval(dimension, check_seed, &mut evals)?;
        Estimate {
            value: e.value,
            stderr: e.stderr,
        }
    };
    let uncertainty = (residual.value.abs() + residual.stderr) / slope + tol;
    Ok(VvarDimension {
        dimension,
        uncertainty,
        residual,
        evals,
    })
}
