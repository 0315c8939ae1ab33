//! Planar affine and projective maps: evaluation, contraction-factor
//! estimation and fixed points. Everything downstream (IFS algorithms,
//! screens, dimension tables) is built out of these.

use crate::error::{invalid, numerical, Result};

/// Minimum absolute projective denominator before evaluation is refused.
pub const DENOMINATOR_EPS: f64 = 1e-12;

/// Grid resolution cap for lipschitz estimation and projective validation.
pub const GRID_CAP: usize = 64;

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITERS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Point2 {
        Point2 { x, y }
    }

    /// Construction with the finiteness invariant enforced (for input
    /// boundaries; arithmetic-internal points use `new`).
    pub fn validated(x: f64, y: f64) -> Result<Point2> {
        if !x.is_finite() || !y.is_finite() {
            return Err(invalid(format!("Point2: non-finite coordinates ({x}, {y})")));
        }
        Ok(Point2 { x, y })
    }

    pub fn dist(self, other: Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Map coefficients. Affine is (x,y) ↦ (ax+by+e, cx+dy+g). Projective keeps
/// separate numerator and denominator rows per coordinate, each row holding
/// (coef of x, coef of y, constant); division happens last.
#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Affine {
        a: f64,
        b: f64,
        e: f64,
        c: f64,
        d: f64,
        g: f64,
    },
    Projective {
        num_x: [f64; 3],
        den_x: [f64; 3],
        num_y: [f64; 3],
        den_y: [f64; 3],
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Map2 {
    pub kind: MapKind,
    pub lipschitz_hint: Option<f64>,
}

fn row(r: &[f64; 3], p: Point2) -> f64 {
    r[0] * p.x + r[1] * p.y + r[2]
}

impl Map2 {
    pub fn affine(a: f64, b: f64, e: f64, c: f64, d: f64, g: f64) -> Map2 {
        Map2 {
            kind: MapKind::Affine { a, b, e, c, d, g },
            lipschitz_hint: None,
        }
    }

    /// Builds a projective map, refusing coefficients whose denominators get
    /// within [`DENOMINATOR_EPS`] of zero anywhere on a 64×64 grid over the
    /// unit square (pragmatic stand-in for a nonvanishing proof).
    pub fn projective(
        num_x: [f64; 3],
        den_x: [f64; 3],
        num_y: [f64; 3],
        den_y: [f64; 3],
    ) -> Result<Map2> {
        for gy in 0..GRID_CAP {
            for gx in 0..GRID_CAP {
                let p = Point2::new(
                    gx as f64 / (GRID_CAP - 1) as f64,
                    gy as f64 / (GRID_CAP - 1) as f64,
                );
                for den in [&den_x, &den_y] {
                    let d = row(den, p);
                    if d.abs() < DENOMINATOR_EPS {
                        return Err(invalid(format!(
                            "projective: denominator {d:e} at ({}, {}) vanishes on the unit square",
                            p.x, p.y
                        )));
                    }
                }
            }
        }
        Ok(Map2 {
            kind: MapKind::Projective {
                num_x,
                den_x,
                num_y,
                den_y,
            },
            lipschitz_hint: None,
        })
    }

    pub fn with_lipschitz_hint(mut self, hint: f64) -> Map2 {
        self.lipschitz_hint = Some(hint);
        self
    }

    pub fn apply(&self, p: Point2) -> Result<Point2> {
        match &self.kind {
            MapKind::Affine { a, b, e, c, d, g } => {
                Ok(Point2::new(a * p.x + b * p.y + e, c * p.x + d * p.y + g))
            }
            MapKind::Projective {
                num_x,
                den_x,
                num_y,
                den_y,
            } => {
                let dx = row(den_x, p);
                let dy = row(den_y, p);
                if dx.abs() < DENOMINATOR_EPS || dy.abs() < DENOMINATOR_EPS {
                    return Err(numerical(format!(
                        "apply: projective denominator {:e} at ({}, {}) below {DENOMINATOR_EPS:e}",
                        if dx.abs() < dy.abs() { dx } else { dy },
                        p.x,
                        p.y
                    )));
                }
                Ok(Point2::new(row(num_x, p) / dx, row(num_y, p) / dy))
            }
        }
    }
}

/// Max of d(f(p),f(q))/d(p,q) over all pairs of an n×n grid on the unit
/// square. A lower bound of the true Lipschitz constant; `grid_n` is capped
/// at [`GRID_CAP`] to keep the O(n⁴) pair scan bounded.
pub fn estimate_lipschitz(map: &Map2, grid_n: usize) -> Result<f64> {
    if grid_n < 2 {
        return Err(invalid(format!("estimate_lipschitz: grid_n {grid_n} < 2")));
    }
    let n = grid_n.min(GRID_CAP);
    let mut pts = Vec::with_capacity(n * n);
    let mut imgs = Vec::with_capacity(n * n);
    for gy in 0..n {
        for gx in 0..n {
            let p = Point2::new(gx as f64 / (n - 1) as f64, gy as f64 / (n - 1) as f64);
            imgs.push(map.apply(p)?);
            pts.push(p);
        }
    }
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let ratio = imgs[i].dist(imgs[j]) / pts[i].dist(pts[j]);
            best = best.max(ratio);
        }
    }
    Ok(best)
}

/// Iterates from the unit square's center until the image moves less than
/// 1e-10. Valid for maps contractive near their fixed point.
pub fn fixed_point(map: &Map2) -> Result<Point2> {
    let mut p = Point2::new(0.5, 0.5);
    for _ in 0..FIXED_POINT_MAX_ITERS {
        let q = map.apply(p)?;
        if q.dist(p) < FIXED_POINT_TOL {
            return Ok(q);
        }
        p = q;
    }
    Err(numerical(format!(
        "fixed_point: no convergence after {FIXED_POINT_MAX_ITERS} iterations (last point ({}, {}))",
        p.x, p.y
    )))
}

/// A contraction s·O·x + t with O orthonormal, the map class for which the
/// dimension equations hold.
#[derive(Clone, Copy, Debug)]
pub struct Similitude2 {
    pub scale: f64,
    pub ortho: [[f64; 2]; 2],
    pub translation: Point2,
}

const ORTHO_TOL: f64 = 1e-12;

impl Similitude2 {
    pub fn new(scale: f64, ortho: [[f64; 2]; 2], translation: Point2) -> Result<Similitude2> {
        if !(scale > 0.0 && scale < 1.0) {
            return Err(invalid(format!("Similitude2: scale {scale} outside (0,1)")));
        }
        let [[a, b], [c, d]] = ortho;
        let col1 = (a * a + c * c).sqrt();
        let col2 = (b * b + d * d).sqrt();
        let dot = a * b + c * d;
        if (col1 - 1.0).abs() > ORTHO_TOL || (col2 - 1.0).abs() > ORTHO_TOL || dot.abs() > ORTHO_TOL
        {
            return Err(invalid(format!(
                "Similitude2: linear part not orthonormal (column norms {col1}, {col2}, dot {dot})"
            )));
        }
        Ok(Similitude2 {
            scale,
            ortho,
            translation,
        })
    }

    /// Reads a similitude back out of an affine map; errors if the linear
    /// part is not a uniform scaling of an orthonormal matrix.
    pub fn from_map(map: &Map2) -> Result<Similitude2> {
        let MapKind::Affine { a, b, e, c, d, g } = map.kind else {
            return Err(invalid(
                "Similitude2::from_map: projective maps are never similitudes on the plane",
            ));
        };
        let s1 = (a * a + c * c).sqrt();
        let s2 = (b * b + d * d).sqrt();
        let dot = a * b + c * d;
        if (s1 - s2).abs() > ORTHO_TOL || dot.abs() > ORTHO_TOL * s1.max(1.0) {
            return Err(invalid(format!(
                "Similitude2::from_map: column norms {s1}, {s2} and dot {dot} do not form s·O"
            )));
        }
        Similitude2::new(
            s1,
            [[a / s1, b / s1], [c / s1, d / s1]],
            Point2::new(e, g),
        )
    }

    pub fn to_map(&self) -> Map2 {
        let s = self.scale;
        let [[a, b], [c, d]] = self.ortho;
        Map2::affine(
            s * a,
            s * b,
            self.translation.x,
            s * c,
            s * d,
            self.translation.y,
        )
        .with_lipschitz_hint(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn f11() -> Map2 {
        presets::fish_map(1, 1)
    }

    #[test]
    fn apply_identity() {
        let id = Map2::affine(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let p = Point2::new(0.3, 0.7);
        assert_eq!(id.apply(p).unwrap(), p);
    }

    #[test]
    fn apply_fish_fixtures() {
        let a = Point2::new(0.25, 0.5);
        let c = Point2::new(0.75, 0.5);
        let b = Point2::new(0.5, 0.75);
        assert!(f11().apply(a).unwrap().dist(a) == 0.0);
        assert!(f11().apply(c).unwrap().dist(b) == 0.0);
    }

    #[test]
    fn projective_rejects_vanishing_denominator() {
        // den_x = x + y − 1 crosses zero inside the unit square.
        let err = Map2::projective(
            [1.0, 0.0, 0.0],
            [1.0, 1.0, -1.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        );
        assert!(err.is_err());
    }

    #[test]
    fn projective_singular_evaluation_errors() {
        // Denominator x + 2 is safe on [0,1]² but vanishes at x = −2.
        let m = Map2::projective(
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 2.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 2.0],
        )
        .unwrap();
        assert!(m.apply(Point2::new(-2.0, 0.0)).is_err());
        assert!(m.apply(Point2::new(0.5, 0.5)).is_ok());
    }

    #[test]
    fn lipschitz_similitude_is_exact() {
        let half = Map2::affine(0.5, 0.0, 0.0, 0.0, 0.5, 0.0);
        let est = estimate_lipschitz(&half, 16).unwrap();
        assert!((est - 0.5).abs() < 1e-9);
    }

    #[test]
    fn lipschitz_identity_is_one() {
        let id = Map2::affine(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert!((estimate_lipschitz(&id, 16).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lipschitz_fish_matches_singular_value() {
        // Largest singular value of [[1/2,−3/8],[1/2,3/8]] is √½, attained in
        // the (1,0) direction which the grid contains.
        let est = estimate_lipschitz(&f11(), 64).unwrap();
        assert!((est - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(est < 1.0);
    }

    #[test]
    fn lipschitz_rejects_tiny_grid() {
        assert!(estimate_lipschitz(&f11(), 1).is_err());
    }

    #[test]
    fn fixed_points_of_fish_maps() {
        // f_2^2's fixed point solves (I−L)p = t exactly: p = (3/4, 1/2).
        let p = fixed_point(&f11()).unwrap();
        assert!(p.dist(Point2::new(0.25, 0.5)) < 1e-9);
        let q = fixed_point(&presets::fish_map(2, 2)).unwrap();
        assert!(q.dist(Point2::new(0.75, 0.5)) < 1e-9);
    }

    #[test]
    fn fixed_point_of_half_map_is_origin() {
        let half = Map2::affine(0.5, 0.0, 0.0, 0.0, 0.5, 0.0);
        let p = fixed_point(&half).unwrap();
        assert!(p.dist(Point2::new(0.0, 0.0)) < 1e-9);
    }

    #[test]
    fn fixed_point_rejects_non_contraction() {
        let shift = Map2::affine(1.0, 0.0, 1.0, 0.0, 1.0, 0.0);
        assert!(fixed_point(&shift).is_err());
    }

    #[test]
    fn similitude_scales_all_distances() {
        let s = Similitude2::new(
            0.5,
            [[0.0, -1.0], [1.0, 0.0]],
            Point2::new(0.2, 0.1),
        )
        .unwrap();
        let m = s.to_map();
        let pairs = [
            (Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)),
            (Point2::new(0.3, 0.9), Point2::new(0.7, 0.2)),
            (Point2::new(0.1, 0.1), Point2::new(0.2, 0.8)),
        ];
        for (p, q) in pairs {
            let lhs = m.apply(p).unwrap().dist(m.apply(q).unwrap());
            assert!((lhs - 0.5 * p.dist(q)).abs() < 1e-10);
        }
    }

    #[test]
    fn similitude_roundtrip_and_rejection() {
        let s = Similitude2::new(0.25, [[1.0, 0.0], [0.0, 1.0]], Point2::new(0.5, 0.0)).unwrap();
        let back = Similitude2::from_map(&s.to_map()).unwrap();
        assert!((back.scale - 0.25).abs() < 1e-12);
        // Fish maps scale differently along the two columns.
        assert!(Similitude2::from_map(&f11()).is_err());
    }

    #[test]
    fn similitude_new_rejects_bad_inputs() {
        assert!(Similitude2::new(1.5, [[1.0, 0.0], [0.0, 1.0]], Point2::new(0.0, 0.0)).is_err());
        assert!(Similitude2::new(0.5, [[1.0, 1.0], [0.0, 1.0]], Point2::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn validated_rejects_nan() {
        assert!(Point2::validated(f64::NAN, 0.0).is_err());
        assert!(Point2::validated(0.0, f64::INFINITY).is_err());
    }
}
