//! Seeded synthetic scenes, ray-cast straight into a range image.
//!
//! The sensor sits at the origin; scene geometry is built from horizontal
//! ground planes, boxes, vertical cylinders and spheres. Every pixel whose
//! ray hits something within `max_range` gets that distance plus Gaussian
//! noise, unless it randomly drops out.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{Point3, SensorGeometry};
use crate::range_image::RangeImage;

/// Sensor height above the street ground, meters.
pub const SENSOR_HEIGHT: f64 = 1.73;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Horizontal plane `z = height`, seen from above.
    Ground {
        height: f64,
    },
    /// Axis-aligned box seen from outside.
    Block {
        min: Point3,
        max: Point3,
    },
    /// Axis-aligned box enclosing the sensor.
    Enclosure {
        min: Point3,
        max: Point3,
    },
    /// Vertical cylinder between `z0` and `z1`.
    Pole {
        x: f64,
        y: f64,
        radius: f64,
        z0: f64,
        z1: f64,
    },
    Ball {
        center: Point3,
        radius: f64,
    },
}

const EPS: f64 = 1e-9;

fn slab(dir: Point3, min: Point3, max: Point3) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for (d, lo, hi) in [(dir.x, min.x, max.x), (dir.y, min.y, max.y), (dir.z, min.z, max.z)] {
        if d.abs() < 1e-15 {
            if 0.0 < lo || 0.0 > hi {
                return None;
            }
            continue;
        }
        let a = lo / d;
        let b = hi / d;
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 <= t1).then_some((t0, t1))
}

impl Shape {
    /// Distance along the unit ray `dir` from the origin, if it hits.
    pub fn hit(&self, dir: Point3) -> Option<f64> {
        match *self {
            Shape::Ground { height } => {
                let t = height / dir.z;
                (dir.z < 0.0 && t > EPS).then_some(t)
            }
            Shape::Block { min, max } => slab(dir, min, max).and_then(|(t0, _)| (t0 > EPS).then_some(t0)),
            Shape::Enclosure { min, max } => slab(dir, min, max).and_then(|(_, t1)| (t1 > EPS).then_some(t1)),
            Shape::Pole { x, y, radius, z0, z1 } => {
                let a = dir.x * dir.x + dir.y * dir.y;
                if a < 1e-15 {
                    return None;
                }
                let b = -2.0 * (dir.x * x + dir.y * y);
                let c = x * x + y * y - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    return None;
                }
                let t = (-b - disc.sqrt()) / (2.0 * a);
                let z = t * dir.z;
                (t > EPS && z >= z0 && z <= z1).then_some(t)
            }
            Shape::Ball { center, radius } => {
                let b = dir.dot(center);
                let disc = b * b - center.norm_sq() + radius * radius;
                if disc < 0.0 {
                    return None;
                }
                let t = b - disc.sqrt();
                (t > EPS).then_some(t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub shapes: Vec<Shape>,
}

impl Scene {
    pub fn first_hit(&self, dir: Point3) -> Option<f64> {
        self.shapes.iter().filter_map(|s| s.hit(dir)).min_by(|a, b| a.total_cmp(b))
    }

    pub fn render(&self, params: &SceneParams) -> Result<RangeImage> {
        params.validate()?;
        let geom = params.geometry;
        let rays = geom.rays();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5ee_d0f5_ce4e);
        let noise = Normal::new(0.0, params.noise_std).map_err(|e| Error::Config(e.to_string()))?;
        let mut img = RangeImage::empty(geom);
        for row in 0..geom.height() {
            for col in 0..geom.width() {
                // draw unconditionally so the stream does not depend on hits
                let drop = rng.gen_bool(params.dropout);
                let n = noise.sample(&mut rng);
                if drop {
                    continue;
                }
                if let Some(t) = self.first_hit(rays.dir(row, col)) {
                    let r = t + n;
                    if t <= params.max_range && r > 0.0 {
                        img.set(row, col, r);
                    }
                }
            }
        }
        Ok(img)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub geometry: SensorGeometry,
    pub seed: u64,
    /// Standard deviation of additive range noise, meters.
    pub noise_std: f64,
    /// Probability that a pixel returns nothing.
    pub dropout: f64,
    pub max_range: f64,
}

impl SceneParams {
    pub fn new(geometry: SensorGeometry, seed: u64) -> Self {
        SceneParams { geometry, seed, noise_std: 0.005, dropout: 0.01, max_range: 80.0 }
    }

    /// A 16-beam sensor at 1 degree azimuth steps: quick to generate and
    /// compress, handy for examples and doctests.
    pub fn small(seed: u64) -> Self {
        SceneParams::new(SensorGeometry::new(16, 1.0, -15.0, 15.0).expect("valid geometry"), seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config("noise_std must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must be a probability".into()));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::Config("max_range must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// Box-shaped room with furniture.
    Room,
    /// Ground, facades on both sides, poles, parked cars and trees.
    Street,
    /// Ground with randomly placed boxes, poles and balls.
    Clutter,
}

impl SceneKind {
    pub const ALL: [SceneKind; 3] = [SceneKind::Room, SceneKind::Street, SceneKind::Clutter];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Room => "room",
            SceneKind::Street => "street",
            SceneKind::Clutter => "clutter",
        }
    }

    pub fn build(self, seed: u64) -> Scene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            SceneKind::Room => room(&mut rng),
            SceneKind::Street => street(&mut rng),
            SceneKind::Clutter => clutter(&mut rng),
        }
    }

    pub fn generate(self, params: &SceneParams) -> Result<RangeImage> {
        self.build(params.seed).render(params)
    }
}

impl FromStr for SceneKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "room" => Ok(SceneKind::Room),
            "street" => Ok(SceneKind::Street),
            "clutter" => Ok(SceneKind::Clutter),
            _ => Err(Error::Config(format!("unknown scene '{s}'"))),
        }
    }
}

fn block(x0: f64, y0: f64, z0: f64, x1: f64, y1: f64, z1: f64) -> Shape {
    Shape::Block { min: Point3::new(x0, y0, z0), max: Point3::new(x1, y1, z1) }
}

fn room(rng: &mut ChaCha8Rng) -> Scene {
    let hx = rng.gen_range(3.0..7.0);
    let hy = rng.gen_range(2.5..5.0);
    let floor = -rng.gen_range(0.8..1.5);
    let ceiling = floor + rng.gen_range(2.6..3.5);
    let mut shapes =
        vec![Shape::Enclosure { min: Point3::new(-hx, -hy, floor), max: Point3::new(hx, hy, ceiling) }];
    for _ in 0..rng.gen_range(2..6) {
        let w = rng.gen_range(0.4..1.5);
        let d = rng.gen_range(0.4..1.0);
        let x = rng.gen_range(-hx + 0.1..hx - w - 0.1);
        let y = rng.gen_range(-hy + 0.1..hy - d - 0.1);
        if x.abs() < 0.8 && y.abs() < 0.8 {
            continue;
        }
        shapes.push(block(x, y, floor, x + w, y + d, floor + rng.gen_range(0.4..1.8)));
    }
    Scene { shapes }
}

fn street(rng: &mut ChaCha8Rng) -> Scene {
    let g = -SENSOR_HEIGHT;
    let mut shapes = vec![Shape::Ground { height: g }];
    for side in [-1.0, 1.0] {
        let offset = rng.gen_range(6.0..10.0);
        let mut x = -90.0;
        while x < 90.0 {
            let len = rng.gen_range(8.0..25.0);
            let depth = rng.gen_range(6.0..15.0);
            let front = offset + rng.gen_range(-0.5..1.5);
            let (y0, y1) = if side > 0.0 { (front, front + depth) } else { (-front - depth, -front) };
            shapes.push(block(x, y0, g, x + len, y1, g + rng.gen_range(6.0..20.0)));
            x += len + if rng.gen_bool(0.3) { rng.gen_range(2.0..6.0) } else { 0.0 };
        }
        // poles and trees along the kerb
        let kerb = offset - 1.5;
        let mut x = -70.0 + rng.gen_range(0.0..10.0);
        while x < 70.0 {
            let y = side * kerb;
            if rng.gen_bool(0.5) {
                shapes.push(Shape::Pole { x, y, radius: rng.gen_range(0.08..0.15), z0: g, z1: g + 6.0 });
            } else {
                let h = rng.gen_range(2.0..3.5);
                shapes.push(Shape::Pole { x, y, radius: 0.2, z0: g, z1: g + h });
                shapes.push(Shape::Ball {
                    center: Point3::new(x, y, g + h + 1.0),
                    radius: rng.gen_range(1.2..2.2),
                });
            }
            x += rng.gen_range(8.0..18.0);
        }
        // parked cars
        let lane = offset - 3.0;
        let mut x: f64 = -50.0 + rng.gen_range(0.0..5.0);
        while x < 50.0 {
            if rng.gen_bool(0.6) && x.abs() > 3.0 {
                let y = side * lane;
                shapes.push(block(x, y - 0.9, g, x + 4.2, y + 0.9, g + 1.5));
            }
            x += rng.gen_range(5.0..9.0);
        }
    }
    Scene { shapes }
}

fn clutter(rng: &mut ChaCha8Rng) -> Scene {
    let g = -rng.gen_range(1.0..2.0);
    let mut shapes = vec![Shape::Ground { height: g }];
    for _ in 0..rng.gen_range(20..60) {
        let r = rng.gen_range(3.0..40.0);
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let (x, y) = (r * a.cos(), r * a.sin());
        match rng.gen_range(0..3) {
            0 => {
                let s = rng.gen_range(0.3..3.0);
                shapes.push(block(x, y, g, x + s, y + rng.gen_range(0.3..3.0), g + rng.gen_range(0.3..4.0)));
            }
            1 => shapes.push(Shape::Pole {
                x,
                y,
                radius: rng.gen_range(0.05..0.5),
                z0: g,
                z1: g + rng.gen_range(1.0..8.0),
            }),
            _ => shapes.push(Shape::Ball {
                center: Point3::new(x, y, g + rng.gen_range(0.0..3.0)),
                radius: rng.gen_range(0.2..1.5),
            }),
        }
    }
    Scene { shapes }
}
