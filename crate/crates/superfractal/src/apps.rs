//! Applications: fractal interpolation IFS construction, V-variable
//! space-filling curve approximants, and colour-stealing renders.

use crate::error::{invalid, numerical, Result};
use crate::geometry::{Map2, MapKind, Point2};
use crate::ifs::{Address, Ifs};
use crate::raster::{ColorRaster, Frame};
use crate::rng::{self, ArtifactRng};
use crate::superifs::SuperIfs;
use crate::trees::CodeTree;

const CHAIN_TOL: f64 = 1e-9;
const SEGMENT_CAP: usize = 1 << 22;
/// Colour addresses keep this many most-recent digits; deeper digits are
/// below 8-bit colour quantization for any reasonable contraction ratio.
const ADDR_DIGITS: usize = 24;
const STEAL_BURN_IN: u64 = 64;

/// Interpolation nodes (x_i, y_i) with strictly increasing x, plus one
/// vertical scaling factor d_m per interval.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationData {
    pub points: Vec<Point2>,
    pub vertical: Vec<f64>,
}

impl InterpolationData {
    pub fn new(points: Vec<Point2>, vertical: Vec<f64>) -> Result<InterpolationData> {
        let data = InterpolationData { points, vertical };
        data.check()?;
        Ok(data)
    }

    fn check(&self) -> Result<()> {
        if self.points.len() < 3 {
            return Err(invalid(format!(
                "InterpolationData: {} points, need at least 3",
                self.points.len()
            )));
        }
        if self.vertical.len() != self.points.len() - 1 {
            return Err(invalid(format!(
                "InterpolationData: {} vertical factors for {} intervals",
                self.vertical.len(),
                self.points.len() - 1
            )));
        }
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err(invalid("InterpolationData: non-finite point".to_string()));
        }
        for w in self.points.windows(2) {
            if !(w[1].x > w[0].x) {
                return Err(invalid(format!(
                    "InterpolationData: x values {} and {} not strictly increasing",
                    w[0].x, w[1].x
                )));
            }
        }
        if let Some(d) = self.vertical.iter().find(|d| !(d.abs() < 1.0)) {
            return Err(invalid(format!(
                "InterpolationData: vertical factor {d} needs |d| < 1"
            )));
        }
        Ok(())
    }

    pub fn interval_count(&self) -> usize {
        self.points.len() - 1
    }
}

/// Builds the graph IFS of the data: maps f_m(x,y) = (a_m x + e_m,
/// c_m x + d_m y + g_m) pinned by f_m(P_0) = P_{m−1} and f_m(P_I) = P_m, so
/// the attractor is a continuous function graph through every node.
/// Probabilities are the x-interval shares a_m, which makes the x-marginal
/// of the measure attractor uniform. Steep data can push individual maps
/// past Lipschitz 1, so the family is flagged contractive on average (the
/// vertical factors still contract every fibre).
pub fn build_interpolation_ifs(data: &InterpolationData) -> Result<Ifs> {
    data.check()?;
    let pts = &data.points;
    let last = pts.len() - 1;
    let (x0, y0) = (pts[0].x, pts[0].y);
    let (xi, yi) = (pts[last].x, pts[last].y);
    let span = xi - x0;
    let mut maps = Vec::with_capacity(last);
    let mut probs = Vec::with_capacity(last);
    for m in 1..=last {
        let d = data.vertical[m - 1];
        let a = (pts[m].x - pts[m - 1].x) / span;
        let e = (xi * pts[m - 1].x - x0 * pts[m].x) / span;
        let c = (pts[m].y - pts[m - 1].y - d * (yi - y0)) / span;
        let g = pts[m - 1].y - c * x0 - d * y0;
        maps.push(Map2::affine(a, 0.0, e, c, d, g));
        probs.push(a);
    }
    Ifs::average_contractive("interpolation", maps, probs)
}

/// The two 3-map IFSs of the space-filling example: component 1 subdivides
/// the unit square into two squares and a rectangle, component 2 into three
/// rectangles. Both carry the base segment to a three-segment chain whose
/// middle segment is traversed in reverse. Map probabilities are
/// proportional to image areas; component probabilities are (½, ½); V = 2.
pub fn spacefill_superifs() -> SuperIfs {
    let third = 1.0 / 3.0;
    let f1 = Ifs::average_contractive(
        "spacefill-1",
        vec![
            Map2::affine(0.0, 0.5, 0.0, 0.5, 0.0, 0.0),
            Map2::affine(0.0, -0.5, 0.5, -0.5, 0.0, 1.0),
            Map2::affine(0.5, 0.0, 0.5, 0.0, -1.0, 1.0),
        ],
        vec![0.25, 0.25, 0.5],
    )
    .expect("spacefill component 1 is valid");
    let f2 = Ifs::average_contractive(
        "spacefill-2",
        vec![
            Map2::affine(0.0, 2.0 * third, 0.0, 0.5, 0.0, 0.0),
            Map2::affine(0.0, -2.0 * third, 2.0 * third, -0.5, 0.0, 1.0),
            Map2::affine(third, 0.0, 2.0 * third, 0.0, -1.0, 1.0),
        ],
        vec![third, third, third],
    )
    .expect("spacefill component 2 is valid");
    SuperIfs::new("spacefill", vec![f1, f2], vec![0.5, 0.5], 2)
        .expect("spacefill superIFS is valid")
}

/// A connected chain of ≥ 2 vertices; segment i carries the branch address
/// of the map composition that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
    segments: Vec<Address>,
}

impl Polyline {
    pub fn new(points: Vec<Point2>, segments: Vec<Address>) -> Result<Polyline> {
        if points.len() < 2 {
            return Err(invalid(format!(
                "Polyline: {} points, need at least 2",
                points.len()
            )));
        }
        if segments.len() != points.len() - 1 {
            return Err(invalid(format!(
                "Polyline: {} addresses for {} segments",
                segments.len(),
                points.len() - 1
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(invalid("Polyline: non-finite point".to_string()));
        }
        Ok(Polyline { points, segments })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn segments(&self) -> &[Address] {
        &self.segments
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    /// Vertices as `x, y, segment_address`; the address column names the
    /// segment that starts at the vertex and is empty on the final row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x, y, segment_address\n");
        for (i, p) in self.points.iter().enumerate() {
            let addr = self
                .segments
                .get(i)
                .map(|a| a.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{}, {}, {}\n", p.x, p.y, addr));
        }
        out
    }

    /// One `<line>` per segment, coloured by address, inside a group that
    /// flips y so the curve appears in the usual orientation.
    pub fn to_svg(&self) -> String {
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            x_min = x_min.min(p.x);
            x_max = x_max.max(p.x);
            y_min = y_min.min(p.y);
            y_max = y_max.max(p.y);
        }
        let extent = (x_max - x_min).max(y_max - y_min).max(1e-9);
        let pad = 0.04 * extent;
        let m = self
            .segments
            .iter()
            .flat_map(|a| a.digits())
            .copied()
            .max()
            .unwrap_or(2)
            .max(2) as usize;
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
            x_min - pad,
            y_min - pad,
            x_max - x_min + 2.0 * pad,
            y_max - y_min + 2.0 * pad
        );
        out.push_str(&format!(
            "<g transform=\"matrix(1 0 0 -1 0 {})\" stroke-width=\"{}\" stroke-linecap=\"round\">\n",
            y_min + y_max,
            0.003 * extent
        ));
        for (i, w) in self.points.windows(2).enumerate() {
            let [r, g, b] = hue_color(address_fraction(&self.segments[i], m));
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#{r:02x}{g:02x}{b:02x}\"/>\n",
                w[0].x, w[0].y, w[1].x, w[1].y
            ));
        }
        out.push_str("</g>\n</svg>\n");
        out
    }

    pub fn write_svg(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_svg())?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Position of the address cylinder in [0,1): Σ (d_i − 1) / m^i.
fn address_fraction(addr: &Address, m: usize) -> f64 {
    let mut t = 0.0;
    let mut scale = 1.0;
    for d in addr.digits() {
        scale /= m as f64;
        t += (*d - 1) as f64 * scale;
    }
    t
}

fn hue_color(t: f64) -> [u8; 3] {
    let h = t.clamp(0.0, 1.0) * 5.0;
    let i = h.floor().min(4.0);
    let f = h - i;
    let (r, g, b) = match i as u32 {
        0 => (1.0, f, 0.0),
        1 => (1.0 - f, 1.0, 0.0),
        2 => (0.0, 1.0, f),
        3 => (0.0, 1.0 - f, 1.0),
        _ => (f, 0.0, 1.0),
    };
    [
        (255.0 * r).round() as u8,
        (255.0 * g).round() as u8,
        (255.0 * b).round() as u8,
    ]
}

fn affine_fixed_point(map: &Map2) -> Result<Point2> {
    match map.kind {
        MapKind::Affine { a, b, e, c, d, g } => {
            let det = (1.0 - a) * (1.0 - d) - b * c;
            if det.abs() < 1e-12 {
                return Err(numerical(
                    "fixed point: the affine map has eigenvalue 1".to_string(),
                ));
            }
            Ok(Point2::new(
                ((1.0 - d) * e + b * g) / det,
                (c * e + (1.0 - a) * g) / det,
            ))
        }
        MapKind::Projective { .. } => Err(invalid(
            "space-filling chains require affine maps".to_string(),
        )),
    }
}

struct ChainSpec {
    o: Point2,
    c: Point2,
    /// Per component, per branch: does the traversal run the image from
    /// f_m(C) back to f_m(O)?
    reversed: Vec<Vec<bool>>,
}

/// Derives the base segment and per-branch traversal directions: the curve
/// runs from the fixed point of the first map to the fixed point of the
/// last, and branch images must chain endpoint-to-endpoint.
fn chain_spec(s: &SuperIfs) -> Result<ChainSpec> {
    let o = affine_fixed_point(&s.components[0].maps[0])?;
    let c = affine_fixed_point(s.components[0].maps.last().unwrap())?;
    let mut reversed = Vec::with_capacity(s.n());
    for ifs in &s.components {
        let mut rev = Vec::with_capacity(ifs.map_count());
        let mut cur = o;
        for (m, map) in ifs.maps.iter().enumerate() {
            let p = map.apply(o)?;
            let q = map.apply(c)?;
            if p.dist(cur) <= CHAIN_TOL {
                rev.push(false);
                cur = q;
            } else if q.dist(cur) <= CHAIN_TOL {
                rev.push(true);
                cur = p;
            } else {
                return Err(invalid(format!(
                    "chaining violation: component '{}' branch {} endpoints ({:.6}, {:.6}) and \
                     ({:.6}, {:.6}) both miss the chain at ({:.6}, {:.6})",
                    ifs.name,
                    m + 1,
                    p.x,
                    p.y,
                    q.x,
                    q.y,
                    cur.x,
                    cur.y
                )));
            }
        }
        if cur.dist(c) > CHAIN_TOL {
            return Err(invalid(format!(
                "chaining violation: component '{}' chain ends at ({:.6}, {:.6}), not at the \
                 base endpoint ({:.6}, {:.6})",
                ifs.name, cur.x, cur.y, c.x, c.y
            )));
        }
        reversed.push(rev);
    }
    Ok(ChainSpec { o, c, reversed })
}

fn build_curve(
    s: &SuperIfs,
    sigma: &CodeTree,
    spec: &ChainSpec,
    level: usize,
    pos: usize,
    remaining: usize,
) -> Result<(Vec<Point2>, Vec<Vec<u8>>)> {
    if remaining == 0 {
        return Ok((vec![spec.o, spec.c], vec![Vec::new()]));
    }
    let n = sigma.label(level, pos) as usize;
    if n > s.n() {
        return Err(invalid(format!(
            "spacefill_approximant: tree names component {n} of {}",
            s.n()
        )));
    }
    let ifs = &s.components[n - 1];
    let m_count = ifs.map_count();
    let mut points: Vec<Point2> = Vec::new();
    let mut addrs: Vec<Vec<u8>> = Vec::new();
    for m in 0..m_count {
        let (child_pts, child_addrs) =
            build_curve(s, sigma, spec, level + 1, pos * m_count + m, remaining - 1)?;
        let mut pts = Vec::with_capacity(child_pts.len());
        for p in &child_pts {
            pts.push(ifs.maps[m].apply(*p)?);
        }
        let mut seg_addrs: Vec<Vec<u8>> = child_addrs
            .into_iter()
            .map(|mut a| {
                a.insert(0, (m + 1) as u8);
                a
            })
            .collect();
        if spec.reversed[n - 1][m] {
            pts.reverse();
            seg_addrs.reverse();
        }
        if points.is_empty() {
            points = pts;
            addrs = seg_addrs;
        } else {
            let gap = points.last().unwrap().dist(pts[0]);
            if gap > CHAIN_TOL {
                return Err(numerical(format!(
                    "chaining violation: {gap:.3e} gap before branch {} at level {level}",
                    m + 1
                )));
            }
            points.extend(pts.into_iter().skip(1));
            addrs.extend(seg_addrs);
        }
    }
    Ok((points, addrs))
}

/// Depth-k polyline approximant of the V-variable curve selected by the code
/// tree: the M^k branch images of the base segment, visited in curve order,
/// each carrying its branch address. Endpoint mismatches beyond 1e-9 are
/// reported as chaining violations.
pub fn spacefill_approximant(s: &SuperIfs, sigma: &CodeTree, k: usize) -> Result<Polyline> {
    if sigma.m() != s.m() {
        return Err(invalid(format!(
            "spacefill_approximant: tree branching {} but superIFS has M = {}",
            sigma.m(),
            s.m()
        )));
    }
    if k > 0 && sigma.depth() < k - 1 {
        return Err(invalid(format!(
            "spacefill_approximant: depth {k} reads node labels to level {}, tree has depth {}",
            k - 1,
            sigma.depth()
        )));
    }
    match s.m().checked_pow(k as u32) {
        Some(total) if total <= SEGMENT_CAP => {}
        _ => {
            return Err(invalid(format!(
                "spacefill_approximant: {}^{k} segments exceed the cap {SEGMENT_CAP}",
                s.m()
            )))
        }
    }
    let spec = chain_spec(s)?;
    let (points, addrs) = build_curve(s, sigma, &spec, 0, 0, k)?;
    let m_count = s.m();
    let segments = addrs
        .into_iter()
        .map(|digits| Address::new(digits, m_count))
        .collect::<Result<Vec<_>>>()?;
    Polyline::new(points, segments)
}

/// Per-pixel colour plus the 24-digit address that claimed it; an all-zero
/// address marks an untouched pixel.
pub(crate) struct StealCanvas {
    pub addr: Vec<[u8; ADDR_DIGITS]>,
    pub color: Vec<[u8; 3]>,
}

/// Palette points live on [0,1]², embedded on the blue = 0 face of the RGB
/// cube; channels clamp to [0,255].
fn palette_color(p: Point2) -> [u8; 3] {
    [
        (255.0 * p.x.clamp(0.0, 1.0)).round() as u8,
        (255.0 * p.y.clamp(0.0, 1.0)).round() as u8,
        0,
    ]
}

fn steal_core(
    mut step: impl FnMut(&mut ArtifactRng) -> Result<(usize, Point2)>,
    palette: &Ifs,
    frame: Frame,
    width: usize,
    height: usize,
    n_points: u64,
    seed: u64,
) -> Result<(ColorRaster, StealCanvas)> {
    let warmup = STEAL_BURN_IN.max(ADDR_DIGITS as u64);
    if n_points <= warmup {
        return Err(invalid(format!(
            "colour stealing: n_points {n_points} must exceed the {warmup}-step warm-up"
        )));
    }
    let mut raster = ColorRaster::black(width, height, frame)?;
    let mut canvas = StealCanvas {
        addr: vec![[0; ADDR_DIGITS]; width * height],
        color: vec![[0; 3]; width * height],
    };
    let mut rng = rng::from_seed(seed);
    let mut y = Point2::new(0.5, 0.5);
    let mut window = [0u8; ADDR_DIGITS];
    for l in 0..n_points {
        let (m, x) = step(&mut rng)?;
        y = palette.maps[m].apply(y)?;
        window.copy_within(0..ADDR_DIGITS - 1, 1);
        window[0] = (m + 1) as u8;
        if l + 1 < warmup {
            continue;
        }
        if let Some((col, row)) = frame.pixel_of(x, width, height) {
            let idx = row * width + col;
            if canvas.addr[idx][0] == 0 || window < canvas.addr[idx] {
                canvas.addr[idx] = window;
                canvas.color[idx] = palette_color(y);
            }
        }
    }
    raster.rgb.copy_from_slice(&canvas.color);
    Ok((raster, canvas))
}

pub(crate) fn colour_steal_canvas(
    base: &Ifs,
    palette: &Ifs,
    frame: Frame,
    width: usize,
    height: usize,
    n_points: u64,
    seed: u64,
) -> Result<(ColorRaster, StealCanvas)> {
    if palette.map_count() != base.map_count() {
        return Err(invalid(format!(
            "colour stealing: palette has M = {} maps but the geometry has M = {}; \
             addresses must share one digit alphabet",
            palette.map_count(),
            base.map_count()
        )));
    }
    let mut x = Point2::new(
        (frame.x_min + frame.x_max) / 2.0,
        (frame.y_min + frame.y_max) / 2.0,
    );
    steal_core(
        move |rng| {
            let m = rng::draw_index(rng, &base.probs);
            x = base.maps[m].apply(x)?;
            Ok((m, x))
        },
        palette,
        frame,
        width,
        height,
        n_points,
        seed,
    )
}

/// Paired chaos games sharing one digit stream: the geometry orbit lands the
/// pixel, the palette orbit supplies its colour. When several addresses hit
/// a pixel the lexicographically lowest 24-digit window wins, so reruns and
/// point-order changes cannot flip colours.
pub fn colour_steal_render(
    base: &Ifs,
    palette: &Ifs,
    frame: Frame,
    width: usize,
    height: usize,
    n_points: u64,
    seed: u64,
) -> Result<ColorRaster> {
    Ok(colour_steal_canvas(base, palette, frame, width, height, n_points, seed)?.0)
}

/// Colour stealing driven by a superIFS: each step redraws the component by
/// its probability (the single-screen mixture orbit), then shares the digit
/// with the palette exactly as in [`colour_steal_render`].
pub fn colour_steal_render_super(
    s: &SuperIfs,
    palette: &Ifs,
    frame: Frame,
    width: usize,
    height: usize,
    n_points: u64,
    seed: u64,
) -> Result<ColorRaster> {
    if palette.map_count() != s.m() {
        return Err(invalid(format!(
            "colour stealing: palette has M = {} maps but the geometry has M = {}; \
             addresses must share one digit alphabet",
            palette.map_count(),
            s.m()
        )));
    }
    let mut x = Point2::new(
        (frame.x_min + frame.x_max) / 2.0,
        (frame.y_min + frame.y_max) / 2.0,
    );
    let (raster, _) = steal_core(
        move |rng| {
            let n = rng::draw_index(rng, &s.probs);
            let ifs = &s.components[n];
            let m = rng::draw_index(rng, &ifs.probs);
            x = ifs.maps[m].apply(x)?;
            Ok((m, x))
        },
        palette,
        frame,
        width,
        height,
        n_points,
        seed,
    )?;
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::raster::UNIT_FRAME;
    use crate::superifs::backward_expand;
    use crate::trees::random_tree;
    use proptest::prelude::*;

    fn fixture_data() -> InterpolationData {
        InterpolationData::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(0.5, 1.0),
                Point2::new(1.0, 0.0),
            ],
            vec![0.3, 0.3],
        )
        .unwrap()
    }

    #[test]
    fn interpolation_data_validation() {
        let two = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        assert!(InterpolationData::new(two, vec![0.5]).is_err());
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.5, 1.0),
            Point2::new(0.5, 0.0),
        ];
        assert!(InterpolationData::new(pts.clone(), vec![0.3, 0.3]).is_err());
        let good = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.5, 1.0),
            Point2::new(1.0, 0.0),
        ];
        assert!(InterpolationData::new(good.clone(), vec![0.3]).is_err());
        assert!(InterpolationData::new(good.clone(), vec![0.3, 1.0]).is_err());
        assert!(InterpolationData::new(good, vec![0.3, -0.99]).is_ok());
    }

    #[test]
    fn interpolation_fixture_maps_pin_endpoints() {
        let ifs = build_interpolation_ifs(&fixture_data()).unwrap();
        assert_eq!(ifs.map_count(), 2);
        assert_eq!(ifs.probs, vec![0.5, 0.5]);
        let p0 = Point2::new(0.0, 0.0);
        let pi = Point2::new(1.0, 0.0);
        let hits = [
            (0, p0, Point2::new(0.0, 0.0)),
            (0, pi, Point2::new(0.5, 1.0)),
            (1, p0, Point2::new(0.5, 1.0)),
            (1, pi, Point2::new(1.0, 0.0)),
        ];
        for (m, from, to) in hits {
            let got = ifs.maps[m].apply(from).unwrap();
            assert!(got.dist(to) < 1e-12, "map {m}: {got:?} vs {to:?}");
        }
    }

    #[test]
    fn adjacent_interpolation_maps_share_nodes() {
        let data = InterpolationData::new(
            vec![
                Point2::new(-1.0, 2.0),
                Point2::new(0.2, -0.5),
                Point2::new(0.9, 1.3),
                Point2::new(2.0, 0.7),
            ],
            vec![0.4, -0.6, 0.2],
        )
        .unwrap();
        let ifs = build_interpolation_ifs(&data).unwrap();
        let p0 = data.points[0];
        let pi = *data.points.last().unwrap();
        for m in 0..ifs.map_count() - 1 {
            let left = ifs.maps[m].apply(pi).unwrap();
            let right = ifs.maps[m + 1].apply(p0).unwrap();
            assert!(left.dist(right) < 1e-12);
            assert!(left.dist(data.points[m + 1]) < 1e-12);
        }
    }

    #[test]
    fn collinear_data_keeps_the_chord_invariant() {
        let line = |x: f64| 2.0 * x + 1.0;
        let data = InterpolationData::new(
            vec![
                Point2::new(0.0, line(0.0)),
                Point2::new(0.25, line(0.25)),
                Point2::new(1.0, line(1.0)),
            ],
            vec![0.0, 0.0],
        )
        .unwrap();
        let ifs = build_interpolation_ifs(&data).unwrap();
        for map in &ifs.maps {
            for i in 0..=10 {
                let x = i as f64 / 10.0;
                let img = map.apply(Point2::new(x, line(x))).unwrap();
                assert!((img.y - line(img.x)).abs() < 1e-12);
            }
        }
    }

    fn graph_points(data: &InterpolationData, depth: usize) -> Vec<Point2> {
        let ifs = build_interpolation_ifs(data).unwrap();
        let m = ifs.map_count();
        let s = SuperIfs::new("wrap", vec![ifs], vec![1.0], 1).unwrap();
        let sigma = CodeTree::constant(m, depth, 1).unwrap();
        let mut pts = backward_expand(&s, &sigma, data.points[0]).unwrap();
        pts.extend(backward_expand(&s, &sigma, *data.points.last().unwrap()).unwrap());
        pts
    }

    fn max_miss(data: &InterpolationData, pts: &[Point2]) -> f64 {
        data.points
            .iter()
            .map(|node| {
                pts.iter()
                    .map(|p| p.dist(*node))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn interpolation_attractor_passes_through_fixture_nodes() {
        let data = fixture_data();
        let pts = graph_points(&data, 16);
        assert!(max_miss(&data, &pts) < 1e-6);
    }

    #[test]
    fn interpolation_attractor_stays_a_function_graph() {
        let data = fixture_data();
        let depth = 12;
        let mut pts = graph_points(&data, depth);
        pts.sort_by(|p, q| p.x.total_cmp(&q.x));
        let d_max: f64 = 0.3;
        let y_range = 2.0;
        let bound = d_max.powi(depth as i32) * y_range + 1e-9;
        for w in pts.windows(2) {
            if w[1].x - w[0].x <= 1e-9 {
                assert!(
                    (w[1].y - w[0].y).abs() <= bound,
                    "same x {} with y gap {}",
                    w[0].x,
                    (w[1].y - w[0].y).abs()
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn interpolation_attractor_contains_random_data(
            u in 0.05f64..0.95,
            ys in prop::array::uniform3(-1.0f64..1.0),
            ds in prop::array::uniform2(-0.9f64..0.9),
        ) {
            let data = InterpolationData::new(
                vec![
                    Point2::new(0.0, ys[0]),
                    Point2::new(u, ys[1]),
                    Point2::new(1.0, ys[2]),
                ],
                ds.to_vec(),
            )
            .unwrap();
            let pts = graph_points(&data, 16);
            prop_assert!(max_miss(&data, &pts) < 1e-6);
        }
    }

    const O: Point2 = Point2 { x: 0.0, y: 0.0 };
    const C: Point2 = Point2 { x: 1.0, y: 0.5 };
    const A1: Point2 = Point2 { x: 0.25, y: 0.5 };
    const B1: Point2 = Point2 { x: 0.5, y: 1.0 };

    #[test]
    fn spacefill_printed_map_values() {
        let s = spacefill_superifs();
        let probe = Point2::new(1.0, 0.0);
        let f = |n: usize, m: usize, p: Point2| s.components[n - 1].maps[m - 1].apply(p).unwrap();
        assert!(f(1, 1, probe).dist(Point2::new(0.0, 0.5)) < 1e-12);
        assert!(f(1, 3, probe).dist(Point2::new(1.0, 1.0)) < 1e-12);
        assert!(f(2, 1, probe).dist(Point2::new(0.0, 0.5)) < 1e-12);
    }

    #[test]
    fn spacefill_segment_relations() {
        let s = spacefill_superifs();
        let third = 1.0 / 3.0;
        let a2 = Point2::new(third, 0.5);
        let b2 = Point2::new(2.0 * third, 1.0);
        let f = |n: usize, m: usize, p: Point2| s.components[n - 1].maps[m - 1].apply(p).unwrap();
        for (n, a, b) in [(1, A1, B1), (2, a2, b2)] {
            assert!(f(n, 1, O).dist(O) < 1e-12);
            assert!(f(n, 1, C).dist(a) < 1e-12);
            assert!(f(n, 2, C).dist(a) < 1e-12);
            assert!(f(n, 2, O).dist(b) < 1e-12);
            assert!(f(n, 3, O).dist(b) < 1e-12);
            assert!(f(n, 3, C).dist(C) < 1e-12);
        }
    }

    #[test]
    fn approximant_level_one_chains_the_example_segments() {
        let s = spacefill_superifs();
        let sigma = CodeTree::constant(3, 0, 1).unwrap();
        let curve = spacefill_approximant(&s, &sigma, 1).unwrap();
        let expect = [O, A1, B1, C];
        assert_eq!(curve.points().len(), 4);
        for (got, want) in curve.points().iter().zip(expect) {
            assert!(got.dist(want) < 1e-12);
        }
        let addrs: Vec<String> = curve.segments().iter().map(|a| a.to_string()).collect();
        assert_eq!(addrs, ["1", "2", "3"]);

        let sigma2 = CodeTree::constant(3, 0, 2).unwrap();
        let curve2 = spacefill_approximant(&s, &sigma2, 1).unwrap();
        let third = 1.0 / 3.0;
        let expect2 = [O, Point2::new(third, 0.5), Point2::new(2.0 * third, 1.0), C];
        for (got, want) in curve2.points().iter().zip(expect2) {
            assert!(got.dist(want) < 1e-12);
        }
    }

    #[test]
    fn approximant_keeps_endpoints_at_every_depth() {
        let s = spacefill_superifs();
        let mut rng = rng::from_seed(7);
        for k in 0..=7usize {
            let depth = k.saturating_sub(1);
            let sigma = random_tree(&mut rng, 3, depth, 2).unwrap();
            let curve = spacefill_approximant(&s, &sigma, k).unwrap();
            assert_eq!(curve.segment_count(), 3usize.pow(k as u32));
            assert!(curve.points()[0].dist(O) < 1e-9, "k = {k}");
            assert!(curve.points().last().unwrap().dist(C) < 1e-9, "k = {k}");
            for p in curve.points() {
                assert!(
                    (-1e-9..=1.0 + 1e-9).contains(&p.x) && (-1e-9..=1.0 + 1e-9).contains(&p.y),
                    "point {p:?} left the unit square at k = {k}"
                );
            }
        }
    }

    #[test]
    fn approximant_length_grows_by_the_ratio_sum() {
        let s = spacefill_superifs();
        for label in [1u16, 2] {
            let sigma = CodeTree::constant(3, 1, label).unwrap();
            let base = spacefill_approximant(&s, &sigma, 0).unwrap().length();
            let level1 = spacefill_approximant(&s, &sigma, 1).unwrap();
            let ratio_sum: f64 = level1
                .points()
                .windows(2)
                .map(|w| w[0].dist(w[1]) / base)
                .sum();
            assert!((level1.length() / base - ratio_sum).abs() < 1e-12);
            let expected = if label == 1 {
                0.5 + 0.5 + (0.4f64).sqrt()
            } else {
                3.0 * (13.0f64 / 45.0).sqrt()
            };
            assert!(
                (ratio_sum - expected).abs() < 1e-12,
                "component {label}: {ratio_sum} vs {expected}"
            );
        }
    }

    #[test]
    fn approximant_rejects_broken_chains() {
        let third = 1.0 / 3.0;
        let bad = Ifs::average_contractive(
            "broken",
            vec![
                Map2::affine(0.0, 0.5, 0.0, 0.5, 0.0, 0.0),
                Map2::affine(0.0, -0.5, 0.51, -0.5, 0.0, 1.0),
                Map2::affine(0.5, 0.0, 0.5, 0.0, -1.0, 1.0),
            ],
            vec![third, third, third],
        )
        .unwrap();
        let s = SuperIfs::new("broken", vec![bad], vec![1.0], 1).unwrap();
        let sigma = CodeTree::constant(3, 1, 1).unwrap();
        let err = spacefill_approximant(&s, &sigma, 2).unwrap_err();
        assert!(err.to_string().contains("chaining violation"), "{err}");
    }

    #[test]
    fn approximant_depth_guards() {
        let s = spacefill_superifs();
        let shallow = CodeTree::constant(3, 0, 1).unwrap();
        assert!(spacefill_approximant(&s, &shallow, 3).is_err());
        let sigma = CodeTree::constant(3, 2, 1).unwrap();
        assert!(spacefill_approximant(&s, &sigma, 30).is_err());
    }

    fn constant_palette(m: usize, target: Point2) -> Ifs {
        let maps = vec![Map2::affine(0.0, 0.0, target.x, 0.0, 0.0, target.y); m];
        Ifs::new("palette", maps, vec![1.0 / m as f64; m]).unwrap()
    }

    #[test]
    fn colour_steal_requires_matching_digit_alphabets() {
        let geo = presets::sierpinski_half();
        let palette = constant_palette(2, Point2::new(1.0, 0.0));
        let err =
            colour_steal_render(&geo, &palette, UNIT_FRAME, 32, 32, 10_000, 1).unwrap_err();
        assert!(err.to_string().contains("M ="), "{err}");
    }

    #[test]
    fn constant_palette_paints_everything_red() {
        let geo = presets::sierpinski_half();
        let palette = constant_palette(3, Point2::new(1.0, 0.0));
        let img = colour_steal_render(&geo, &palette, UNIT_FRAME, 64, 64, 50_000, 5).unwrap();
        let red = img.rgb.iter().filter(|c| **c == [255, 0, 0]).count();
        let other = img
            .rgb
            .iter()
            .filter(|c| **c != [255, 0, 0] && **c != [0, 0, 0])
            .count();
        // The 64×64 gasket has exactly 3^6 = 729 pixels.
        assert!(red > 700, "only {red} red pixels");
        assert_eq!(other, 0);
    }

    #[test]
    fn shared_address_prefixes_give_nearby_colours() {
        let geo = presets::sierpinski_half();
        let (_, canvas) =
            colour_steal_canvas(&geo, &geo, UNIT_FRAME, 128, 128, 200_000, 9).unwrap();
        let mut groups: std::collections::HashMap<[u8; 4], [u8; 3]> =
            std::collections::HashMap::new();
        let bound = 255.0 * 0.5f64.powi(4) * 3.0f64.sqrt();
        let mut checked = 0usize;
        for (addr, color) in canvas.addr.iter().zip(&canvas.color) {
            if addr[0] == 0 {
                continue;
            }
            let prefix = [addr[0], addr[1], addr[2], addr[3]];
            let first = *groups.entry(prefix).or_insert(*color);
            let dist = (0..3)
                .map(|ch| (color[ch] as f64 - first[ch] as f64).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(dist <= bound, "prefix {prefix:?}: colour distance {dist}");
            checked += 1;
        }
        assert!(checked > 1500);
    }

    #[test]
    fn lowest_address_claims_contested_pixels() {
        let centre = Point2::new(0.5, 0.5);
        let geo = Ifs::new(
            "point",
            vec![
                Map2::affine(0.0, 0.0, centre.x, 0.0, 0.0, centre.y),
                Map2::affine(0.0, 0.0, centre.x, 0.0, 0.0, centre.y),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let palette = Ifs::new(
            "two-tone",
            vec![
                Map2::affine(0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
                Map2::affine(0.0, 0.0, 1.0, 0.0, 0.0, 1.0),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let n_points = 5_000u64;
        let seed = 12;
        let (_, canvas) =
            colour_steal_canvas(&geo, &palette, UNIT_FRAME, 9, 9, n_points, seed).unwrap();

        let mut replay = rng::from_seed(seed);
        let mut window = [0u8; ADDR_DIGITS];
        let mut best: Option<[u8; ADDR_DIGITS]> = None;
        let warmup = STEAL_BURN_IN.max(ADDR_DIGITS as u64);
        for l in 0..n_points {
            let m = rng::draw_index(&mut replay, &geo.probs);
            window.copy_within(0..ADDR_DIGITS - 1, 1);
            window[0] = (m + 1) as u8;
            if l + 1 < warmup {
                continue;
            }
            if best.map_or(true, |b| window < b) {
                best = Some(window);
            }
        }
        let idx = 4 * 9 + 4;
        assert_eq!(canvas.addr[idx], best.unwrap());
        let first_digit = canvas.addr[idx][0];
        let expect = if first_digit == 1 { [0, 0, 0] } else { [255, 255, 0] };
        assert_eq!(canvas.color[idx], expect);
        for (i, addr) in canvas.addr.iter().enumerate() {
            assert!(i == idx || addr[0] == 0);
        }
    }

    #[test]
    fn colour_steal_is_seed_deterministic() {
        let geo = presets::sierpinski_half();
        let a = colour_steal_render(&geo, &geo, UNIT_FRAME, 64, 64, 30_000, 77).unwrap();
        let b = colour_steal_render(&geo, &geo, UNIT_FRAME, 64, 64, 30_000, 77).unwrap();
        assert_eq!(a.to_ppm(), b.to_ppm());
        let c = colour_steal_render(&geo, &geo, UNIT_FRAME, 64, 64, 30_000, 78).unwrap();
        assert_ne!(a.rgb, c.rgb);
    }

    #[test]
    fn super_variant_renders_deterministically() {
        let s = spacefill_superifs();
        let palette = presets::sierpinski_half();
        let a =
            colour_steal_render_super(&s, &palette, UNIT_FRAME, 64, 64, 30_000, 3).unwrap();
        let b =
            colour_steal_render_super(&s, &palette, UNIT_FRAME, 64, 64, 30_000, 3).unwrap();
        assert_eq!(a.rgb, b.rgb);
        assert!(a.rgb.iter().any(|c| *c != [0, 0, 0]));
    }

    #[test]
    fn polyline_exports_carry_vertices_and_addresses() {
        let s = spacefill_superifs();
        let sigma = CodeTree::constant(3, 2, 1).unwrap();
        let curve = spacefill_approximant(&s, &sigma, 3).unwrap();
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x, y, segment_address"));
        assert_eq!(lines.next(), Some("0, 0, 1.1.1"));
        assert_eq!(csv.lines().count(), curve.points().len() + 1);
        assert_eq!(csv.lines().last(), Some("1, 0.5, "));

        let svg = curve.to_svg();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<line").count(), curve.segment_count());
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn polyline_validation() {
        assert!(Polyline::new(vec![Point2::new(0.0, 0.0)], vec![]).is_err());
        let pts = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        assert!(Polyline::new(pts.clone(), vec![]).is_err());
        assert!(Polyline::new(pts, vec![Address::new(vec![1], 2).unwrap()]).is_ok());
    }
}
