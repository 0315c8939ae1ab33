//! A single IFS with probabilities and its classical algorithms: the
//! Hutchinson operator on rasters, the deterministic attractor iteration, the
//! chaos game for sets and measures, code-space addressing, the cylinder
//! measure of the shift IFS, plus raster metrics (Hausdorff distance,
//! box-counting dimension).

use crate::error::{invalid, numerical, Result};
use crate::geometry::{estimate_lipschitz, Map2, Point2};
use crate::raster::{Frame, MeasureRaster, Raster};
use crate::rng::{self, ArtifactRng};

const PROBS_TOL: f64 = 1e-12;
const CONTRACTION_CHECK_GRID: usize = 8;

#[derive(Clone, Debug)]
pub struct Ifs {
    pub name: String,
    pub maps: Vec<Map2>,
    pub probs: Vec<f64>,
    /// Set when the family is only contractive on average; disables the
    /// per-map contraction check (used e.g. by space-filling generators).
    pub average_contractive: bool,
}

fn check_probs(op: &str, probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
        return Err(invalid(format!("{op}: negative or non-finite probability in {probs:?}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROBS_TOL {
        return Err(invalid(format!("{op}: probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

impl Ifs {
    /// Validates probabilities and checks each map is a contraction (grid
    /// estimate; a lower bound, so this can miss expansion off-grid).
    pub fn new(name: impl Into<String>, maps: Vec<Map2>, probs: Vec<f64>) -> Result<Ifs> {
        let ifs = Ifs::average_contractive(name, maps, probs)?;
        for (m, map) in ifs.maps.iter().enumerate() {
            let l = estimate_lipschitz(map, CONTRACTION_CHECK_GRID)?;
            if l >= 1.0 {
                return Err(invalid(format!(
                    "Ifs::new('{}'): map {} has estimated Lipschitz {l} ≥ 1; \
                     use Ifs::average_contractive if contraction only holds on average",
                    ifs.name,
                    m + 1
                )));
            }
        }
        Ok(Ifs {
            average_contractive: false,
            ..ifs
        })
    }

    /// Same as [`Ifs::new`] but skips the per-map contraction check and
    /// flags the family as contractive on average only.
    pub fn average_contractive(
        name: impl Into<String>,
        maps: Vec<Map2>,
        probs: Vec<f64>,
    ) -> Result<Ifs> {
        let name = name.into();
        if maps.is_empty() {
            return Err(invalid(format!("Ifs::new('{name}'): no maps")));
        }
        if maps.len() != probs.len() {
            return Err(invalid(format!(
                "Ifs::new('{name}'): {} maps but {} probabilities",
                maps.len(),
                probs.len()
            )));
        }
        check_probs(&format!("Ifs::new('{name}')"), &probs)?;
        Ok(Ifs {
            name,
            maps,
            probs,
            average_contractive: true,
        })
    }

    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    /// Largest per-map Lipschitz grid estimate, for convergence-rate bounds.
    pub fn lipschitz_bound(&self, grid_n: usize) -> Result<f64> {
        let mut l = 0.0f64;
        for map in &self.maps {
            l = l.max(estimate_lipschitz(map, grid_n)?);
        }
        Ok(l)
    }
}

/// A finite code-space address: digits over {1..M}, leftmost applied last.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Address {
    digits: Vec<u8>,
}

impl Address {
    pub fn new(digits: Vec<u8>, m: usize) -> Result<Address> {
        if let Some(d) = digits.iter().find(|d| **d == 0 || **d as usize > m) {
            return Err(invalid(format!("Address: digit {d} outside 1..={m}")));
        }
        Ok(Address { digits })
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

impl std::fmt::Display for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// One application of F(K) = ⋃_m f_m(K): every set pixel's center is pushed
/// through every map and the target pixel set. Frame and shape are preserved.
pub fn hutchinson_set(ifs: &Ifs, r: &Raster) -> Result<Raster> {
    let mut out = Raster::empty(r.width, r.height, r.frame)?;
    for (col, row) in r.iter_set() {
        let p = r.frame.center(col, row, r.width, r.height);
        for map in &ifs.maps {
            out.set_point(map.apply(p)?);
        }
    }
    Ok(out)
}

/// A_k = F(A_{k−1}) for k steps, stopping early once pixel-stable.
pub fn deterministic_attractor(ifs: &Ifs, r0: &Raster, k: usize) -> Result<Raster> {
    let mut cur = r0.clone();
    for _ in 0..k {
        let next = hutchinson_set(ifs, &cur)?;
        if next == cur {
            return Ok(next);
        }
        cur = next;
    }
    Ok(cur)
}

pub(crate) struct ChaosStream<'a> {
    ifs: &'a Ifs,
    rng: ArtifactRng,
    pub x: Point2,
}

impl<'a> ChaosStream<'a> {
    pub fn new(ifs: &'a Ifs, seed: u64, start: Point2) -> ChaosStream<'a> {
        ChaosStream {
            ifs,
            rng: rng::from_seed(seed),
            x: start,
        }
    }

    /// Draws m with law p, moves x ← f_m(x); returns the 0-based digit.
    pub fn step(&mut self) -> Result<usize> {
        let m = rng::draw_index(&mut self.rng, &self.ifs.probs);
        self.x = self.ifs.maps[m].apply(self.x)?;
        Ok(m)
    }
}

fn chaos_points(
    ifs: &Ifs,
    seed: u64,
    n_points: u64,
    burn_in: u64,
    frame: Frame,
    mut visit: impl FnMut(Point2),
) -> Result<()> {
    if n_points <= burn_in {
        return Err(invalid(format!(
            "chaos_game: n_points {n_points} must exceed burn_in {burn_in}"
        )));
    }
    let start = Point2::new((frame.x_min + frame.x_max) / 2.0, (frame.y_min + frame.y_max) / 2.0);
    let mut stream = ChaosStream::new(ifs, seed, start);
    if burn_in == 0 {
        visit(stream.x);
    }
    for l in 1..n_points {
        stream.step()?;
        if l >= burn_in {
            visit(stream.x);
        }
    }
    Ok(())
}

/// The random iteration algorithm: the orbit x_{l+1} = f_m(x_l), m drawn
/// with law p, started at the frame center. The first `burn_in` points of
/// the n-point orbit are discarded; the rest set pixels. Bit-reproducible
/// for a given seed.
pub fn chaos_game(
    ifs: &Ifs,
    seed: u64,
    n_points: u64,
    burn_in: u64,
    width: usize,
    height: usize,
    frame: Frame,
) -> Result<Raster> {
    let mut r = Raster::empty(width, height, frame)?;
    chaos_points(ifs, seed, n_points, burn_in, frame, |p| r.set_point(p))?;
    Ok(r)
}

/// As [`chaos_game`] but accumulating per-pixel visit counts, normalized to
/// total mass 1.
pub fn chaos_game_measure(
    ifs: &Ifs,
    seed: u64,
    n_points: u64,
    burn_in: u64,
    width: usize,
    height: usize,
    frame: Frame,
) -> Result<MeasureRaster> {
    let mut m = MeasureRaster::zero(width, height, frame)?;
    chaos_points(ifs, seed, n_points, burn_in, frame, |p| m.add_at_point(p, 1.0))?;
    m.normalize()?;
    Ok(m)
}

/// f_{σ1}∘f_{σ2}∘…∘f_{σk}(x0): the depth-k approximation of the point the
/// address σ names on the attractor.
pub fn address_point(ifs: &Ifs, addr: &Address, x0: Point2) -> Result<Point2> {
    if addr.is_empty() {
        return Err(invalid("address_point: empty address".to_string()));
    }
    let m = ifs.map_count();
    let mut p = x0;
    for &d in addr.digits().iter().rev() {
        if d as usize > m {
            return Err(invalid(format!("address_point: digit {d} outside 1..={m}")));
        }
        p = ifs.maps[d as usize - 1].apply(p)?;
    }
    Ok(p)
}

/// Measure of the cylinder set of all infinite addresses extending `addr`
/// under the shift IFS: the product of the digit probabilities.
pub fn shift_cylinder_measure(ifs: &Ifs, addr: &Address) -> Result<f64> {
    let m = ifs.map_count();
    let mut prod = 1.0;
    for &d in addr.digits() {
        if d as usize > m {
            return Err(invalid(format!(
                "shift_cylinder_measure: digit {d} outside 1..={m}"
            )));
        }
        prod *= ifs.probs[d as usize - 1];
    }
    Ok(prod)
}

fn set_pixels(r: &Raster) -> Vec<(f64, f64)> {
    r.iter_set().map(|(c, row)| (c as f64, row as f64)).collect()
}

fn directed_hausdorff_sq(from: &[(f64, f64)], to: &[(f64, f64)]) -> f64 {
    let mut worst = 0.0f64;
    for &(ax, ay) in from {
        let mut best = f64::INFINITY;
        for &(bx, by) in to {
            let d = (ax - bx).powi(2) + (ay - by).powi(2);
            if d < best {
                best = d;
                if best <= worst {
                    break;
                }
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// Exact discrete Hausdorff distance between the set pixels of two rasters,
/// measured between pixel centers in pixel units.
pub fn hausdorff_distance(a: &Raster, b: &Raster) -> Result<f64> {
    let pa = set_pixels(a);
    let pb = set_pixels(b);
    if pa.is_empty() || pb.is_empty() {
        return Err(invalid(format!(
            "hausdorff_distance: empty raster (|a| = {}, |b| = {})",
            pa.len(),
            pb.len()
        )));
    }
    let d = directed_hausdorff_sq(&pa, &pb).max(directed_hausdorff_sq(&pb, &pa));
    Ok(d.sqrt())
}

/// Least-squares slope of log N_δ against log(1/δ) over grid-aligned boxes
/// anchored at the raster origin; δ in pixels.
pub fn box_dimension(r: &Raster, box_sizes: &[usize]) -> Result<f64> {
    if box_sizes.len() < 3 {
        return Err(invalid(format!(
            "box_dimension: need ≥ 3 box sizes, got {}",
            box_sizes.len()
        )));
    }
    if r.is_empty() {
        return Err(invalid("box_dimension: empty raster".to_string()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &delta in box_sizes {
        if delta == 0 || delta > r.width.max(r.height) {
            return Err(invalid(format!(
                "box_dimension: box size {delta} outside 1..={}",
                r.width.max(r.height)
            )));
        }
        let bw = (r.width + delta - 1) / delta;
        let bh = (r.height + delta - 1) / delta;
        let mut occupied = vec![false; bw * bh];
        for (c, row) in r.iter_set() {
            occupied[(row / delta) * bw + c / delta] = true;
        }
        let n = occupied.iter().filter(|o| **o).count();
        xs.push(-(delta as f64).ln());
        ys.push((n as f64).ln());
    }
    if ys.iter().all(|y| (*y - ys[0]).abs() < 1e-12) {
        return Err(numerical(format!(
            "box_dimension: degenerate counts, N_δ = {} for every box size",
            ys[0].exp().round()
        )));
    }
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    Ok(sxy / sxx)
}

/// Demo-only colour propagation for the texture effect: every target pixel
/// takes the colour of the source pixel that last wrote it. Not golden
/// tested; the effect is unstable by design.
#[derive(Clone)]
pub struct TexturedRaster {
    pub set: Raster,
    pub colors: Vec<[u8; 3]>,
}

impl TexturedRaster {
    pub fn new(set: Raster, colors: Vec<[u8; 3]>) -> Result<TexturedRaster> {
        if colors.len() != set.width * set.height {
            return Err(invalid(format!(
                "TexturedRaster: {} colours for {} pixels",
                colors.len(),
                set.width * set.height
            )));
        }
        Ok(TexturedRaster { set, colors })
    }

    pub fn to_color_raster(&self) -> crate::raster::ColorRaster {
        let mut out =
            crate::raster::ColorRaster::black(self.set.width, self.set.height, self.set.frame)
                .expect("shape already validated");
        for (c, r) in self.set.iter_set() {
            out.put(c, r, self.colors[r * self.set.width + c]);
        }
        out
    }
}

pub fn deterministic_attractor_textured(
    ifs: &Ifs,
    r0: &TexturedRaster,
    k: usize,
) -> Result<TexturedRaster> {
    let (w, h) = (r0.set.width, r0.set.height);
    let mut cur = r0.clone();
    for _ in 0..k {
        let mut set = Raster::empty(w, h, r0.set.frame)?;
        let mut colors = vec![[0u8; 3]; w * h];
        for (col, row) in cur.set.iter_set() {
            let p = cur.set.frame.center(col, row, w, h);
            for map in &ifs.maps {
                if let Some((tc, tr)) = cur.set.frame.pixel_of(map.apply(p)?, w, h) {
                    set.set(tc, tr);
                    colors[tr * w + tc] = cur.colors[row * w + col];
                }
            }
        }
        cur = TexturedRaster { set, colors };
    }
    Ok(cur)
}
