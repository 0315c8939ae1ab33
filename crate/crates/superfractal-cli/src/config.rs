//! JSON configuration: schema types, loading with a content hash, and
//! builders that hand validated library objects to the commands.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use superfractal::apps::InterpolationData;
use superfractal::geometry::{Map2, Point2};
use superfractal::ifs::Ifs;
use superfractal::raster::Frame;
use superfractal::superifs::SuperIfs;
use superfractal::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: String,
    #[serde(default = "one")]
    pub v_count: usize,
    /// x_min, x_max, y_min, y_max
    #[serde(default = "unit_frame")]
    pub frame: [f64; 4],
    #[serde(default = "default_size")]
    pub width: usize,
    #[serde(default = "default_size")]
    pub height: usize,
    /// Component selection probabilities; uniform when omitted.
    #[serde(default)]
    pub probs: Vec<f64>,
    #[serde(default)]
    pub components: Vec<ComponentCfg>,
    #[serde(default)]
    pub interpolation: Option<InterpCfg>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub iterations: Option<u64>,
    #[serde(default)]
    pub mode: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentCfg {
    pub name: String,
    /// Accept maps whose pointwise Lipschitz grid bound exceeds 1 (contraction
    /// on average only).
    #[serde(default)]
    pub average_contractive: bool,
    pub probs: Vec<f64>,
    pub maps: Vec<MapCfg>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum MapCfg {
    /// coefficients = [a, b, e, c, d, g] for (x, y) -> (ax + by + e, cx + dy + g)
    Affine { coefficients: [f64; 6] },
    Projective {
        num_x: [f64; 3],
        den_x: [f64; 3],
        num_y: [f64; 3],
        den_y: [f64; 3],
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpCfg {
    /// Interpolation nodes (x strictly increasing).
    pub points: Vec<[f64; 2]>,
    /// One vertical scaling d_m per interval, |d| < 1.
    pub vertical: Vec<f64>,
}

fn one() -> usize {
    1
}

fn unit_frame() -> [f64; 4] {
    [0.0, 1.0, 0.0, 1.0]
}

fn default_size() -> usize {
    512
}

pub struct Loaded {
    pub cfg: ConfigFile,
    pub path: PathBuf,
    pub sha256: String,
}

pub fn load(path: &Path) -> Result<Loaded> {
    let raw = std::fs::read(path)
        .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))?;
    let cfg: ConfigFile = serde_json::from_slice(&raw)
        .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))?;
    let sha256 = Sha256::digest(&raw)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(Loaded {
        cfg,
        path: path.to_path_buf(),
        sha256,
    })
}

fn build_map(cfg: &MapCfg) -> Result<Map2> {
    match cfg {
        MapCfg::Affine { coefficients: k } => Ok(Map2::affine(k[0], k[1], k[2], k[3], k[4], k[5])),
        MapCfg::Projective {
            num_x,
            den_x,
            num_y,
            den_y,
        } => Map2::projective(*num_x, *den_x, *num_y, *den_y),
    }
}

fn build_component(cfg: &ComponentCfg) -> Result<Ifs> {
    let maps = cfg.maps.iter().map(build_map).collect::<Result<Vec<_>>>()?;
    if cfg.average_contractive {
        Ifs::average_contractive(cfg.name.clone(), maps, cfg.probs.clone())
    } else {
        Ifs::new(cfg.name.clone(), maps, cfg.probs.clone())
    }
}

impl Loaded {
    pub fn frame(&self) -> Result<Frame> {
        let [x_min, x_max, y_min, y_max] = self.cfg.frame;
        if !(x_min < x_max && y_min < y_max) || self.cfg.frame.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "config {}: frame must be finite [x_min, x_max, y_min, y_max] with min < max, got {:?}",
                self.path.display(),
                self.cfg.frame
            )));
        }
        Ok(Frame {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn superifs(&self) -> Result<SuperIfs> {
        let components = self
            .cfg
            .components
            .iter()
            .map(build_component)
            .collect::<Result<Vec<_>>>()?;
        if components.is_empty() {
            return Err(Error::InvalidInput(format!(
                "config {}: no components",
                self.path.display()
            )));
        }
        let probs = if self.cfg.probs.is_empty() {
            vec![1.0 / components.len() as f64; components.len()]
        } else {
            self.cfg.probs.clone()
        };
        SuperIfs::new(self.cfg.name.clone(), components, probs, self.cfg.v_count)
    }

    pub fn single_ifs(&self) -> Result<Ifs> {
        if self.cfg.components.len() != 1 {
            return Err(Error::InvalidInput(format!(
                "config {}: this command needs exactly one component, found {}",
                self.path.display(),
                self.cfg.components.len()
            )));
        }
        build_component(&self.cfg.components[0])
    }

    pub fn interpolation(&self) -> Result<InterpolationData> {
        let interp = self.cfg.interpolation.as_ref().ok_or_else(|| {
            Error::InvalidInput(format!(
                "config {}: missing field `interpolation`",
                self.path.display()
            ))
        })?;
        let points = interp
            .points
            .iter()
            .map(|&[x, y]| Point2::new(x, y))
            .collect();
        InterpolationData::new(points, interp.vertical.clone())
    }
}
