//! Seeded synthetic datasets: unions of circles, lines, spheres, planes,
//! conics and Lissajous curves, plus two-view correspondences of rigidly
//! moving point clouds.
//!
//! Dataset parameters live in TOML manifests. The canonical ones ship with
//! the crate (see [`canonical`]); any other manifest can be parsed with
//! [`DatasetSpec::from_toml`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{KsccError, Result};

/// Dataset families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Circles,
    LinesAndCircles,
    Spheres,
    SpheresAndPlane,
    Conics,
    Lissajous,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Circles,
        Family::LinesAndCircles,
        Family::Spheres,
        Family::SpheresAndPlane,
        Family::Conics,
        Family::Lissajous,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Circles => "circles",
            Family::LinesAndCircles => "lines_and_circles",
            Family::Spheres => "spheres",
            Family::SpheresAndPlane => "spheres_and_plane",
            Family::Conics => "conics",
            Family::Lissajous => "lissajous",
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Family::Spheres | Family::SpheresAndPlane => 3,
            _ => 2,
        }
    }

    fn allows(&self, surface: &Surface) -> bool {
        use Surface::*;
        matches!(
            (self, surface),
            (Family::Circles, Circle { .. })
                | (Family::LinesAndCircles, Circle { .. } | Segment { .. })
                | (Family::Spheres, Sphere { .. })
                | (Family::SpheresAndPlane, Sphere { .. } | Plane { .. })
                | (Family::Conics, Ellipse { .. } | Parabola { .. } | Hyperbola { .. })
                | (Family::Lissajous, Lissajous { .. })
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = KsccError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| KsccError::invalid(format!("unknown dataset family `{s}`")))
    }
}

/// One generating surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Surface {
    /// Circle in the plane, sampled uniformly in angle.
    Circle { center: [f64; 2], radius: f64 },
    /// Line segment in the plane, sampled uniformly along its length.
    Segment { from: [f64; 2], to: [f64; 2] },
    /// Sphere in R^3, sampled uniformly by area.
    Sphere { center: [f64; 3], radius: f64 },
    /// Parallelogram patch `origin + s u + t v`, `s, t` uniform in `[0, 1]`.
    Plane { origin: [f64; 3], u: [f64; 3], v: [f64; 3] },
    /// Axis-aligned ellipse, sampled uniformly in angle.
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
    /// `y - vy = curvature * (x - vx)^2` for `|x - vx| <= half_width`.
    Parabola { vertex: [f64; 2], curvature: f64, half_width: f64 },
    /// `(x - cx)(y - cy) = product`, both branches, with
    /// `|x - cx|` uniform in `[u_min, u_max]`.
    Hyperbola { center: [f64; 2], product: f64, u_min: f64, u_max: f64 },
    /// `x = amp_x sin(freq_x t + phase)`, `y = amp_y sin(freq_y t)`, `t`
    /// uniform over one period `2 pi / freq_y`.
    Lissajous { amp_x: f64, amp_y: f64, freq_x: f64, freq_y: f64, phase: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(KsccError::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Surface {
    pub fn validate(&self) -> Result<()> {
        match self {
            Surface::Circle { radius, .. } | Surface::Sphere { radius, .. } => positive("radius", *radius),
            Surface::Segment { from, to } => {
                positive("segment length", ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt())
            }
            Surface::Plane { u, v, .. } => {
                positive("plane patch area", Vector3::from(*u).cross(&Vector3::from(*v)).norm())
            }
            Surface::Ellipse { semi_axes, .. } => {
                positive("semi-axis", semi_axes[0])?;
                positive("semi-axis", semi_axes[1])
            }
            Surface::Parabola { curvature, half_width, .. } => {
                positive("parabola |curvature|", curvature.abs())?;
                positive("half_width", *half_width)
            }
            Surface::Hyperbola { product, u_min, u_max, .. } => {
                positive("hyperbola |product|", product.abs())?;
                positive("u_min", *u_min)?;
                positive("u_max - u_min", u_max - u_min)
            }
            Surface::Lissajous { amp_x, amp_y, freq_x, freq_y, .. } => {
                positive("amp_x", *amp_x)?;
                positive("amp_y", *amp_y)?;
                positive("freq_y", *freq_y)?;
                if (freq_x - 2.0 * freq_y).abs() > 1e-12 * freq_y {
                    return Err(KsccError::invalid(format!(
                        "Lissajous curves need freq_x / freq_y = 2, got {freq_x} / {freq_y}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Draws one noiseless point.
    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            Surface::Circle { center, radius } => {
                let t = rng.random_range(0.0..2.0 * PI);
                vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
            Surface::Segment { from, to } => {
                let s: f64 = rng.random();
                vec![from[0] + s * (to[0] - from[0]), from[1] + s * (to[1] - from[1])]
            }
            Surface::Sphere { center, radius } => {
                // normalized Gaussian direction is area-uniform
                let dir = loop {
                    let g: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
                    let v = Vector3::from(g);
                    let norm = v.norm();
                    if norm > 1e-12 {
                        break v / norm;
                    }
                };
                (0..3).map(|i| center[i] + radius * dir[i]).collect()
            }
            Surface::Plane { origin, u, v } => {
                let s: f64 = rng.random();
                let t: f64 = rng.random();
                (0..3).map(|i| origin[i] + s * u[i] + t * v[i]).collect()
            }
            Surface::Ellipse { center, semi_axes } => {
                let t = rng.random_range(0.0..2.0 * PI);
                vec![center[0] + semi_axes[0] * t.cos(), center[1] + semi_axes[1] * t.sin()]
            }
            Surface::Parabola { vertex, curvature, half_width } => {
                let dx = rng.random_range(-half_width..=half_width);
                vec![vertex[0] + dx, vertex[1] + curvature * dx * dx]
            }
            Surface::Hyperbola { center, product, u_min, u_max } => {
                let mag = rng.random_range(u_min..=u_max);
                let u = if rng.random::<bool>() { mag } else { -mag };
                vec![center[0] + u, center[1] + product / u]
            }
            Surface::Lissajous { amp_x, amp_y, freq_x, freq_y, phase } => {
                let t = rng.random_range(0.0..2.0 * PI / freq_y);
                vec![amp_x * (freq_x * t + phase).sin(), amp_y * (freq_y * t).sin()]
            }
        }
    }

    /// Implicit-equation residual; zero for points on the surface.
    ///
    /// Circles and spheres report `|x - c| - r`; the others report their
    /// defining polynomial.
    pub fn residual(&self, x: &[f64]) -> f64 {
        match *self {
            Surface::Circle { center, radius } => {
                ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt() - radius
            }
            Surface::Sphere { center, radius } => {
                (0..3).map(|i| (x[i] - center[i]).powi(2)).sum::<f64>().sqrt() - radius
            }
            Surface::Segment { from, to } => {
                (to[0] - from[0]) * (x[1] - from[1]) - (to[1] - from[1]) * (x[0] - from[0])
            }
            Surface::Plane { origin, u, v } => {
                let normal = Vector3::from(u).cross(&Vector3::from(v)).normalize();
                (0..3).map(|i| normal[i] * (x[i] - origin[i])).sum()
            }
            Surface::Ellipse { center, semi_axes } => {
                ((x[0] - center[0]) / semi_axes[0]).powi(2) + ((x[1] - center[1]) / semi_axes[1]).powi(2) - 1.0
            }
            Surface::Parabola { vertex, curvature, .. } => {
                x[1] - vertex[1] - curvature * (x[0] - vertex[0]).powi(2)
            }
            Surface::Hyperbola { center, product, .. } => (x[0] - center[0]) * (x[1] - center[1]) - product,
            Surface::Lissajous { amp_x, amp_y, phase, .. } => {
                // with s = freq_y t: x = A (2 sin s cos s cos d + (1 - 2 sin^2 s) sin d), y = B sin s
                let yy = (x[1] / amp_y).powi(2);
                let lhs = x[0] - amp_x * phase.sin() * (1.0 - 2.0 * yy);
                lhs * lhs - 4.0 * amp_x * amp_x * phase.cos().powi(2) * yy * (1.0 - yy)
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Surface::Sphere { .. } | Surface::Plane { .. } => 3,
            _ => 2,
        }
    }
}

/// Full description of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub family: Family,
    pub surfaces: Vec<Surface>,
    #[serde(default = "default_points_per_surface")]
    pub points_per_surface: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_points_per_surface() -> usize {
    100
}

impl DatasetSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: DatasetSpec =
            toml::from_str(text).map_err(|e| KsccError::invalid(format!("bad dataset manifest: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("dataset spec serializes")
    }

    pub fn n_surfaces(&self) -> usize {
        self.surfaces.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.family.ambient_dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.surfaces.is_empty() {
            return Err(KsccError::invalid("dataset has no surfaces"));
        }
        if self.points_per_surface == 0 {
            return Err(KsccError::invalid("points_per_surface must be positive"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(KsccError::invalid("noise_sigma must be finite and nonnegative"));
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            if !self.family.allows(s) {
                return Err(KsccError::invalid(format!(
                    "surface {i} ({s:?}) does not belong to family {}",
                    self.family
                )));
            }
            debug_assert_eq!(s.dim(), self.family.ambient_dim());
            s.validate()?;
            if self.surfaces[..i].contains(s) {
                return Err(KsccError::invalid(format!("surface {i} duplicates an earlier surface")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_points_per_surface(mut self, n: usize) -> Self {
        self.points_per_surface = n;
        self
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }
}

/// Points (one per row) with their generating-surface labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: DMatrix<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

/// Samples `points_per_surface` points from each surface in order, then adds
/// isotropic Gaussian noise.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.ambient_dim();
    let n = spec.points_per_surface * spec.n_surfaces();
    let mut points = DMatrix::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (label, surface) in spec.surfaces.iter().enumerate() {
        for _ in 0..spec.points_per_surface {
            for (c, v) in surface.sample(&mut rng).into_iter().enumerate() {
                points[(row, c)] = v;
            }
            labels.push(label);
            row += 1;
        }
    }
    if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        for v in points.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    Ok(Dataset { points, labels })
}

/// Names of the bundled canonical manifests.
pub const CANONICAL: [&str; 7] = [
    "two_circles",
    "five_circles",
    "lines_and_circles",
    "three_spheres",
    "spheres_and_plane",
    "conics",
    "lissajous",
];

/// Source text of a bundled manifest.
pub fn canonical_manifest(name: &str) -> Option<&'static str> {
    Some(match name {
        "two_circles" => include_str!("../manifests/two_circles.toml"),
        "five_circles" => include_str!("../manifests/five_circles.toml"),
        "lines_and_circles" => include_str!("../manifests/lines_and_circles.toml"),
        "three_spheres" => include_str!("../manifests/three_spheres.toml"),
        "spheres_and_plane" => include_str!("../manifests/spheres_and_plane.toml"),
        "conics" => include_str!("../manifests/conics.toml"),
        "lissajous" => include_str!("../manifests/lissajous.toml"),
        _ => return None,
    })
}

/// A bundled manifest by name.
pub fn canonical(name: &str) -> Result<DatasetSpec> {
    let text = canonical_manifest(name)
        .ok_or_else(|| KsccError::invalid(format!("no canonical dataset named `{name}`")))?;
    DatasetSpec::from_toml(text)
}

/// Default bundled manifest for a family.
pub fn canonical_for_family(family: Family) -> DatasetSpec {
    let name = match family {
        Family::Circles => "two_circles",
        Family::LinesAndCircles => "lines_and_circles",
        Family::Spheres => "three_spheres",
        Family::SpheresAndPlane => "spheres_and_plane",
        Family::Conics => "conics",
        Family::Lissajous => "lissajous",
    };
    canonical(name).expect("bundled manifests are valid")
}

/// Synthetic two-view correspondences of independently moving rigid bodies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoViewSpec {
    pub motions: usize,
    pub points_per_motion: usize,
    /// Gaussian noise added to the image coordinates.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl TwoViewSpec {
    pub fn new(motions: usize, points_per_motion: usize, seed: u64) -> Self {
        TwoViewSpec { motions, points_per_motion, noise_sigma: 0.0, seed }
    }
}

/// Relative pose of one moving body between the two views.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidMotion {
    /// Essential matrix `[t]x R`: every correspondence `p1 -> p2` of this
    /// body satisfies `(p2, 1)' E (p1, 1) = 0`.
    pub fn essential(&self) -> nalgebra::Matrix3<f64> {
        self.translation.cross_matrix() * self.rotation.matrix()
    }
}

/// Correspondences `(x1, y1, x2, y2)` in normalized pinhole coordinates.
///
/// Each body is a cloud of points in front of the first camera; the second
/// view sees it after a random rotation (up to ~0.35 rad) and translation.
pub fn generate_two_view(spec: &TwoViewSpec) -> Result<(Dataset, Vec<RigidMotion>)> {
    if spec.motions == 0 || spec.points_per_motion == 0 {
        return Err(KsccError::invalid("two-view data needs at least one motion and one point"));
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(KsccError::invalid("noise_sigma must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.motions * spec.points_per_motion;
    let mut points = DMatrix::zeros(n, 4);
    let mut labels = Vec::with_capacity(n);
    let mut motions = Vec::with_capacity(spec.motions);
    let mut row = 0;
    for m in 0..spec.motions {
        let axis = loop {
            let g = Vector3::from(std::array::from_fn::<f64, 3, _>(|_| rng.sample(StandardNormal)));
            if g.norm() > 1e-6 {
                break Unit::new_normalize(g);
            }
        };
        let rotation = Rotation3::from_axis_angle(&axis, rng.random_range(0.1..0.35));
        let translation = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-0.5..0.5),
        );
        let motion = RigidMotion { rotation, translation };
        for _ in 0..spec.points_per_motion {
            let (p, q) = loop {
                let p = Vector3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(4.0..7.0),
                );
                let q = motion.rotation * p + motion.translation;
                if q.z > 1.0 {
                    break (p, q);
                }
            };
            let coords = [p.x / p.z, p.y / p.z, q.x / q.z, q.y / q.z];
            for (c, v) in coords.into_iter().enumerate() {
                points[(row, c)] = v;
            }
            labels.push(m);
            row += 1;
        }
        motions.push(motion);
    }
    if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        for v in points.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    Ok((Dataset { points, labels }, motions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_residual(spec: &DatasetSpec, data: &Dataset) -> f64 {
        (0..data.n())
            .map(|i| {
                let row: Vec<f64> = data.points.row(i).iter().copied().collect();
                spec.surfaces[data.labels[i]].residual(&row).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn every_canonical_manifest_parses_and_lies_on_its_surfaces() {
        for name in CANONICAL {
            let spec = canonical(name).unwrap();
            let data = generate(&spec).unwrap();
            assert_eq!(data.n(), spec.points_per_surface * spec.n_surfaces(), "{name}");
            assert_eq!(data.dim(), spec.ambient_dim());
            let r = max_residual(&spec, &data);
            assert!(r <= 1e-10, "{name}: residual {r}");
            for l in 0..spec.n_surfaces() {
                assert_eq!(data.labels.iter().filter(|&&x| x == l).count(), spec.points_per_surface);
            }
        }
    }

    #[test]
    fn unit_circle_points_have_unit_norm() {
        let spec = DatasetSpec {
            family: Family::Circles,
            surfaces: vec![Surface::Circle { center: [0.0, 0.0], radius: 1.0 }],
            points_per_surface: 200,
            noise_sigma: 0.0,
            seed: 5,
        };
        let data = generate(&spec).unwrap();
        for row in data.points.row_iter() {
            assert!((row.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn plane_points_satisfy_plane_equation() {
        let spec = canonical("spheres_and_plane").unwrap();
        let data = generate(&spec).unwrap();
        assert_eq!(data.n_classes(), 4);
        let plane = spec.surfaces.iter().position(|s| matches!(s, Surface::Plane { .. })).unwrap();
        for i in (0..data.n()).filter(|&i| data.labels[i] == plane) {
            assert_eq!(data.points[(i, 2)], 0.0);
        }
    }

    #[test]
    fn lissajous_parameter_recovery() {
        let spec = canonical("lissajous").unwrap();
        let data = generate(&spec).unwrap();
        for i in 0..data.n() {
            let Surface::Lissajous { amp_x, amp_y, freq_x, freq_y, phase } = spec.surfaces[data.labels[i]] else {
                panic!("lissajous manifest holds only Lissajous curves");
            };
            let (x, y) = (data.points[(i, 0)], data.points[(i, 1)]);
            let s = (y / amp_y).clamp(-1.0, 1.0).asin();
            // freq_y * t is either s or pi - s
            let ok = [s, PI - s].iter().any(|&st| {
                let t = st / freq_y;
                (amp_x * (freq_x * t + phase).sin() - x).abs() < 1e-7
                    && (amp_y * (freq_y * t).sin() - y).abs() < 1e-12
            });
            assert!(ok, "point {i} ({x}, {y}) is off its curve");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = canonical("conics").unwrap().with_noise(0.01);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_ne!(generate(&spec).unwrap(), generate(&spec.clone().with_seed(99)).unwrap());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = canonical("two_circles").unwrap();
        spec.surfaces[0] = Surface::Circle { center: [0.0, 0.0], radius: 0.0 };
        assert!(generate(&spec).is_err());

        let mut spec = canonical("two_circles").unwrap();
        spec.surfaces[1] = spec.surfaces[0].clone();
        assert!(generate(&spec).is_err());

        let mut spec = canonical("lissajous").unwrap();
        spec.surfaces[0] = Surface::Lissajous { amp_x: 1.0, amp_y: 1.0, freq_x: 3.0, freq_y: 1.0, phase: 0.0 };
        assert!(generate(&spec).is_err());

        let mut spec = canonical("two_circles").unwrap();
        spec.surfaces.push(Surface::Sphere { center: [0.0; 3], radius: 1.0 });
        assert!(generate(&spec).is_err());

        assert!("torus".parse::<Family>().is_err());
        assert!(canonical("nope").is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let spec = canonical("conics").unwrap();
        assert_eq!(DatasetSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }

    #[test]
    fn two_view_points_satisfy_epipolar_constraint() {
        let (data, motions) = generate_two_view(&TwoViewSpec::new(3, 40, 8)).unwrap();
        assert_eq!(data.n(), 120);
        for i in 0..data.n() {
            let e = motions[data.labels[i]].essential();
            let p1 = Vector3::new(data.points[(i, 0)], data.points[(i, 1)], 1.0);
            let p2 = Vector3::new(data.points[(i, 2)], data.points[(i, 3)], 1.0);
            assert!((p2.transpose() * e * p1)[0].abs() < 1e-12);
        }
    }
}
