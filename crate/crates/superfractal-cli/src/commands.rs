//! Implementations of the six subcommands. Every command that writes files
//! also drops a manifest.json carrying the seed, the config hash, and the
//! tool version, so a run can be reproduced byte-identically.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use superfractal::apps::{self, Polyline};
use superfractal::dimension::{self, ScaleTable};
use superfractal::ifs::{self, Address};
use superfractal::raster::Raster;
use superfractal::superifs::{self, SuperIfs};
use superfractal::trees::{self, CodeTree, IndexA};
use superfractal::{Error, Result};

use crate::config::{self, Loaded};
use crate::{
    DimensionArgs, InterpArgs, Regime, RenderArgs, RenderMode, SpacefillArgs, SuperMode,
    SuperrunArgs, TreestatsArgs,
};

const BURN_IN: u64 = 100;
const MEASURE_GAMMA: f64 = 0.5;
/// Closed-form regimes solve by bisection to this tolerance.
const SOLVER_TOL: f64 = 1e-12;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: Option<u64>,
    config_path: Option<String>,
    config_sha256: Option<String>,
    parameters: serde_json::Value,
    outputs: Vec<String>,
}

fn write_manifest(
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    loaded: Option<&Loaded>,
    parameters: serde_json::Value,
    outputs: Vec<String>,
) -> Result<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_path: loaded.map(|l| l.path.display().to_string()),
        config_sha256: loaded.map(|l| l.sha256.clone()),
        parameters,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidInput(format!("manifest: {e}")))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| {
        Error::InvalidInput(format!(
            "{what} needs an explicit --seed (there is no wall-clock default)"
        ))
    })
}

pub fn render(args: &RenderArgs) -> Result<()> {
    let loaded = config::load(&args.config)?;
    let ifs = loaded.single_ifs()?;
    let frame = loaded.frame()?;
    let (w, h) = (loaded.cfg.width, loaded.cfg.height);
    let mode = resolve_mode(args.mode, loaded.cfg.mode.as_deref())?;
    std::fs::create_dir_all(&args.out)?;
    let out_file = args.out.join("render.pgm");
    let iterations = args.iterations.or(loaded.cfg.iterations);
    let mut seed_used = None;
    let iterations = match mode {
        RenderMode::Deterministic => {
            let k = iterations.unwrap_or(30);
            let start = Raster::full(w, h, frame)?;
            ifs::deterministic_attractor(&ifs, &start, k as usize)?.write_pgm(&out_file)?;
            k
        }
        RenderMode::ChaosSet => {
            let seed = require_seed(args.seed.or(loaded.cfg.seed), "chaos-set render")?;
            seed_used = Some(seed);
            let n = iterations.unwrap_or(1_000_000);
            ifs::chaos_game(&ifs, seed, n, BURN_IN, w, h, frame)?.write_pgm(&out_file)?;
            n
        }
        RenderMode::ChaosMeasure => {
            let seed = require_seed(args.seed.or(loaded.cfg.seed), "chaos-measure render")?;
            seed_used = Some(seed);
            let n = iterations.unwrap_or(1_000_000);
            ifs::chaos_game_measure(&ifs, seed, n, BURN_IN, w, h, frame)?
                .write_pgm(&out_file, MEASURE_GAMMA)?;
            n
        }
    };
    write_manifest(
        &args.out,
        "render",
        seed_used,
        Some(&loaded),
        json!({
            "mode": mode_name(mode),
            "iterations": iterations,
            "width": w,
            "height": h,
        }),
        vec!["render.pgm".to_string()],
    )
}

fn resolve_mode(flag: Option<RenderMode>, cfg: Option<&str>) -> Result<RenderMode> {
    if let Some(m) = flag {
        return Ok(m);
    }
    match cfg {
        None | Some("deterministic") => Ok(RenderMode::Deterministic),
        Some("chaos-set") => Ok(RenderMode::ChaosSet),
        Some("chaos-measure") => Ok(RenderMode::ChaosMeasure),
        Some(other) => Err(Error::InvalidInput(format!(
            "mode '{other}' is not one of deterministic, chaos-set, chaos-measure"
        ))),
    }
}

fn mode_name(mode: RenderMode) -> &'static str {
    match mode {
        RenderMode::Deterministic => "deterministic",
        RenderMode::ChaosSet => "chaos-set",
        RenderMode::ChaosMeasure => "chaos-measure",
    }
}

pub fn superrun(args: &SuperrunArgs) -> Result<()> {
    let loaded = config::load(&args.config)?;
    let s = loaded.superifs()?;
    let frame = loaded.frame()?;
    let (w, h) = (loaded.cfg.width, loaded.cfg.height);
    let seed = require_seed(args.seed.or(loaded.cfg.seed), "superrun")?;
    let iterations = args.iterations.or(loaded.cfg.iterations).unwrap_or(25);
    if args.stride == 0 {
        return Err(Error::InvalidInput("stride must be ≥ 1".to_string()));
    }
    std::fs::create_dir_all(&args.out)?;
    let mut outputs = Vec::new();
    let log = match args.mode {
        SuperMode::Sets => {
            let init = superifs::full_set_bank(s.v_count, w, h, frame)?;
            let (_, log) =
                superifs::run_superfractal_sets(&s, init, iterations, seed, |step, bank| {
                    if step % args.stride == 0 {
                        for (v, screen) in bank.screens().iter().enumerate() {
                            let name = frame_name(v, step);
                            screen.write_pgm(args.out.join(&name))?;
                            outputs.push(name);
                        }
                    }
                    Ok(())
                })?;
            log
        }
        SuperMode::Measures => {
            let init = superifs::uniform_measure_bank(s.v_count, w, h, frame)?;
            let (_, log) =
                superifs::run_superfractal_measures(&s, init, iterations, seed, |step, bank| {
                    if step % args.stride == 0 {
                        for (v, screen) in bank.screens().iter().enumerate() {
                            let name = frame_name(v, step);
                            screen.write_pgm(args.out.join(&name), MEASURE_GAMMA)?;
                            outputs.push(name);
                        }
                    }
                    Ok(())
                })?;
            log
        }
    };
    write_index_log(&args.out.join("index_log.csv"), &log, s.m())?;
    outputs.push("index_log.csv".to_string());
    write_manifest(
        &args.out,
        "superrun",
        Some(seed),
        Some(&loaded),
        json!({
            "mode": match args.mode { SuperMode::Sets => "sets", SuperMode::Measures => "measures" },
            "iterations": iterations,
            "stride": args.stride,
            "v_count": s.v_count,
        }),
        outputs,
    )
}

fn frame_name(v: usize, step: u64) -> String {
    format!("screen{}_step{:04}.pgm", v + 1, step)
}

/// One row per screen per step: the component n_v applied there and the M
/// source screens it read from.
fn write_index_log(path: &Path, log: &[IndexA], m: usize) -> Result<()> {
    let mut text = String::from("step, v, n");
    for q in 1..=m {
        write!(text, ", screen_{q}").unwrap();
    }
    text.push('\n');
    for (i, a) in log.iter().enumerate() {
        for (v, comp) in a.comps().iter().enumerate() {
            write!(text, "{}, {}, {}", i + 1, v + 1, comp.n).unwrap();
            for w in &comp.screens {
                write!(text, ", {w}").unwrap();
            }
            text.push('\n');
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn dimension(args: &DimensionArgs) -> Result<()> {
    let loaded = config::load(&args.config)?;
    let s = loaded.superifs()?;
    let table = ScaleTable::from_superifs(&s)?;
    let mut gamma_csv = None;
    let mut seed_used = None;
    let (label, d, uncertainty, residual) = match args.regime {
        Regime::Moran => {
            if table.n() != 1 {
                return Err(Error::InvalidInput(format!(
                    "moran regime needs a single component, config has {}",
                    table.n()
                )));
            }
            let d = dimension::moran_dimension(&table.ratios[0])?;
            let resid = dimension::moran_objective(&table.ratios[0], d);
            ("moran", d, SOLVER_TOL, resid)
        }
        Regime::Random => {
            let d = dimension::random_dimension(&table, &s.probs)?;
            ("random", d, SOLVER_TOL, dimension::random_objective(&table, &s.probs, d))
        }
        Regime::Homogeneous => {
            let d = dimension::homogeneous_dimension(&table, &s.probs)?;
            (
                "homogeneous",
                d,
                SOLVER_TOL,
                dimension::homogeneous_objective(&table, &s.probs, d),
            )
        }
        Regime::Vvariable => {
            let v_count = args.v_count.unwrap_or(s.v_count);
            let k = args.k.unwrap_or(20_000);
            let tol = args.tol.unwrap_or(1e-3);
            let seed = require_seed(args.seed.or(loaded.cfg.seed), "vvariable dimension")?;
            seed_used = Some(seed);
            let est = dimension::vvariable_dimension(&table, &s.probs, v_count, k, seed, tol)?;
            let mut text = String::from("alpha, gamma_estimate, stderr, k, V, seed\n");
            for e in &est.evals {
                writeln!(
                    text,
                    "{}, {}, {}, {}, {}, {}",
                    e.alpha, e.gamma, e.stderr, e.k, e.v_count, e.seed
                )
                .unwrap();
            }
            gamma_csv = Some(text);
            println!(
                "gamma residual at root = {:.3e} ± {:.3e}",
                est.residual.value, est.residual.stderr
            );
            ("vvariable", est.dimension, est.uncertainty, est.residual.value)
        }
    };
    println!("{label} dimension = {d:.12}");
    println!("uncertainty = {uncertainty:.3e}");
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        let mut outputs = vec!["dimension.csv".to_string()];
        std::fs::write(
            out.join("dimension.csv"),
            format!("regime, dimension, uncertainty, residual\n{label}, {d}, {uncertainty}, {residual}\n"),
        )?;
        if let Some(text) = gamma_csv {
            std::fs::write(out.join("gamma_evals.csv"), text)?;
            outputs.push("gamma_evals.csv".to_string());
        }
        write_manifest(
            out,
            "dimension",
            seed_used,
            Some(&loaded),
            json!({
                "regime": label,
                "v_count": args.v_count,
                "k": args.k,
                "tol": args.tol,
            }),
            outputs,
        )?;
    }
    Ok(())
}

pub fn treestats(args: &TreestatsArgs) -> Result<()> {
    if args.depth > 3 {
        return Err(Error::InvalidInput(format!(
            "depth {} exceeds the cost guard (≤ 3)",
            args.depth
        )));
    }
    let probs = match &args.probs {
        Some(text) => parse_probs(text)?,
        None => vec![1.0 / args.n_comps as f64; args.n_comps],
    };
    if probs.len() != args.n_comps {
        return Err(Error::InvalidInput(format!(
            "--probs lists {} values but --n-comps is {}",
            probs.len(),
            args.n_comps
        )));
    }
    let rows = trees::sample_tree_histogram(
        &probs,
        args.m,
        args.v_count,
        args.depth,
        args.samples,
        args.seed,
    )?;
    // List every cylinder when the total count is small enough; otherwise
    // only the observed ones.
    let all: Vec<CodeTree> = match trees::enumerate_trees(args.m, args.depth, args.n_comps) {
        Ok(ts) => ts,
        Err(_) => rows.iter().map(|(t, _)| t.clone()).collect(),
    };
    let counts: HashMap<&CodeTree, u64> = rows.iter().map(|(t, c)| (t, *c)).collect();
    let n = args.samples as f64;
    let bound =
        2.0 * (args.m as f64).powi(2 * (args.depth as i32 + 1)) / (3.0 * args.v_count as f64);
    let mut records = Vec::with_capacity(all.len());
    for t in &all {
        let est = counts.get(t).copied().unwrap_or(0) as f64 / n;
        let stderr = (est * (1.0 - est) / n).sqrt();
        let rho = trees::rho_cylinder(t, &probs)?;
        let pass = (est - rho).abs() <= bound + 3.0 * stderr;
        records.push((t.to_text(), est, stderr, rho, pass));
    }
    records.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    let mut csv = String::from("tree, v_count, estimate, stderr, rho, bound, pass\n");
    for (text, est, stderr, rho, pass) in &records {
        writeln!(
            csv,
            "\"{text}\", {}, {est}, {stderr}, {rho}, {bound}, {}",
            args.v_count,
            if *pass { "yes" } else { "no" }
        )
        .unwrap();
    }
    let passing = records.iter().filter(|r| r.4).count();
    println!(
        "{} cylinders, {passing} within bound {bound:.6} + 3·stderr",
        records.len()
    );
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("treestats.csv"), csv)?;
    write_manifest(
        &args.out,
        "treestats",
        Some(args.seed),
        None,
        json!({
            "m": args.m,
            "n_comps": args.n_comps,
            "v_count": args.v_count,
            "depth": args.depth,
            "samples": args.samples,
            "probs": probs,
        }),
        vec!["treestats.csv".to_string()],
    )
}

fn parse_probs(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("--probs entry '{part}': {e}")))
        })
        .collect()
}

pub fn interp(args: &InterpArgs) -> Result<()> {
    let loaded = config::load(&args.config)?;
    let data = loaded.interpolation()?;
    let ifs = apps::build_interpolation_ifs(&data)?;
    let m = ifs.map_count();
    let depth = args.depth.unwrap_or_else(|| {
        let mut d = 1;
        while (m as u64).pow(d + 1) <= 4096 {
            d += 1;
        }
        d as usize
    });
    let branches = (m as u64)
        .checked_pow(depth as u32)
        .filter(|&b| b <= 1 << 20)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "depth {depth} gives more than 2^20 segments for {m} intervals"
            ))
        })?;
    let wrap = SuperIfs::new("interpolation-graph", vec![ifs], vec![1.0], 1)?;
    let sigma = CodeTree::constant(m, depth, 1)?;
    // Branches in lexicographic order have increasing x because every x-map
    // is increasing and the intervals abut left to right.
    let mut points = superifs::backward_expand(&wrap, &sigma, data.points[0])?;
    points.push(*data.points.last().unwrap());
    let segments = (0..branches)
        .map(|i| {
            let mut digits = vec![0u8; depth];
            let mut rest = i;
            for slot in digits.iter_mut().rev() {
                *slot = (rest % m as u64) as u8 + 1;
                rest /= m as u64;
            }
            Address::new(digits, m)
        })
        .collect::<Result<Vec<_>>>()?;
    let line = Polyline::new(points, segments)?;
    std::fs::create_dir_all(&args.out)?;
    line.write_svg(args.out.join("interp.svg"))?;
    line.write_csv(args.out.join("interp.csv"))?;
    println!(
        "interpolation graph: {} intervals, depth {depth}, {} vertices",
        m,
        line.points().len()
    );
    write_manifest(
        &args.out,
        "interp",
        None,
        Some(&loaded),
        json!({"depth": depth, "intervals": m}),
        vec!["interp.svg".to_string(), "interp.csv".to_string()],
    )
}

pub fn spacefill(args: &SpacefillArgs) -> Result<()> {
    let loaded = match &args.config {
        Some(path) => Some(config::load(path)?),
        None => None,
    };
    let s = match &loaded {
        Some(l) => l.superifs()?,
        None => apps::spacefill_superifs(),
    };
    let depth = args.depth.unwrap_or(5);
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be ≥ 1".to_string()));
    }
    let tree_depth = depth - 1;
    let iterations = args.iterations.unwrap_or(depth as u64);
    let seed_used = if iterations == 0 {
        args.seed
    } else {
        Some(require_seed(args.seed, "spacefill with iterations > 0")?)
    };
    let sigma = if iterations == 0 {
        CodeTree::constant(s.m(), tree_depth, 1)?
    } else {
        let (grove, _) =
            superifs::run_superfractal_groves(&s, iterations, tree_depth, seed_used.unwrap_or(0))?;
        let sigma = grove.trees()[0].clone();
        if sigma.depth() < tree_depth {
            return Err(Error::InvalidInput(format!(
                "after {iterations} iterations the code tree has depth {}; depth {depth} needs --iterations ≥ {tree_depth}",
                sigma.depth()
            )));
        }
        sigma
    };
    let curve = apps::spacefill_approximant(&s, &sigma, depth)?;
    std::fs::create_dir_all(&args.out)?;
    curve.write_svg(args.out.join("spacefill.svg"))?;
    curve.write_csv(args.out.join("spacefill.csv"))?;
    let first = curve.points().first().unwrap();
    let last = curve.points().last().unwrap();
    println!(
        "{} segments; endpoints ({}, {}) .. ({}, {})",
        curve.segments().len(),
        first.x,
        first.y,
        last.x,
        last.y
    );
    write_manifest(
        &args.out,
        "spacefill",
        seed_used,
        loaded.as_ref(),
        json!({
            "depth": depth,
            "iterations": iterations,
            "builtin_ifs": loaded.is_none(),
        }),
        vec!["spacefill.svg".to_string(), "spacefill.csv".to_string()],
    )
}
