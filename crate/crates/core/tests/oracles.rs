//! Library results checked against slow, independent reference
//! implementations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use rpcc::codec::compress_detailed;
use rpcc::geometry::{backproject, project};
use rpcc::plane::{ransac_plane, RansacConfig};
use rpcc::scene::{Scene, SceneParams, Shape};
use rpcc::segmentation::{assign, dbscan, fps_indices, DbscanLabel, GROUND_LABEL, UNLABELED};
use rpcc::{CodecConfig, Point3, RangeImage, SensorGeometry};

fn brute_nearest(p: Point3, centers: &[Point3]) -> usize {
    let mut best = 0;
    for (i, c) in centers.iter().enumerate() {
        if p.dist_sq(*c) < p.dist_sq(centers[best]) {
            best = i;
        }
    }
    best
}

#[test]
fn nearest_center_assignment_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let geom = SensorGeometry::new(8, 3.0, -10.0, 10.0).unwrap();
    let rays = geom.rays();
    for _ in 0..5 {
        let mut img = RangeImage::empty(geom);
        for i in 0..geom.pixel_count() {
            if rng.gen_bool(0.8) {
                img.set(i / geom.width(), i % geom.width(), rng.gen_range(1.0..30.0));
            }
        }
        let ground: Vec<bool> = (0..img.len()).map(|i| img.valid_mask()[i] && rng.gen_bool(0.1)).collect();
        let centers: Vec<Point3> = (0..rng.gen_range(1..40))
            .map(|_| {
                Point3::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0), rng.gen_range(-5.0..5.0))
            })
            .collect();
        let a = assign(&img, &ground, &centers);
        for i in 0..img.len() {
            let expected = if !img.valid_mask()[i] {
                UNLABELED
            } else if ground[i] {
                GROUND_LABEL
            } else {
                let p = rays.point(i / geom.width(), i % geom.width(), img.depths()[i]);
                brute_nearest(p, &centers) as u32 + 1
            };
            assert_eq!(a.labels[i], expected, "pixel {i}");
        }
    }
}

/// Textbook DBSCAN with linear-scan range queries.
fn reference_dbscan(points: &[Point3], eps: f64, min_pts: usize) -> Vec<Option<u32>> {
    #[derive(Clone, Copy, PartialEq)]
    enum L {
        Undefined,
        Noise,
        C(u32),
    }
    let query = |p: usize| -> Vec<usize> {
        (0..points.len()).filter(|&q| points[p].dist(points[q]) <= eps).collect()
    };
    let mut labels = vec![L::Undefined; points.len()];
    let mut c = 0;
    for p in 0..points.len() {
        if labels[p] != L::Undefined {
            continue;
        }
        let n = query(p);
        if n.len() < min_pts {
            labels[p] = L::Noise;
            continue;
        }
        labels[p] = L::C(c);
        let mut seeds: Vec<usize> = n.into_iter().filter(|&q| q != p).collect();
        let mut k = 0;
        while k < seeds.len() {
            let q = seeds[k];
            k += 1;
            if labels[q] == L::Noise {
                labels[q] = L::C(c);
            }
            if labels[q] != L::Undefined {
                continue;
            }
            labels[q] = L::C(c);
            let nq = query(q);
            if nq.len() >= min_pts {
                seeds.extend(nq);
            }
        }
        c += 1;
    }
    labels
        .into_iter()
        .map(|l| match l {
            L::C(c) => Some(c),
            _ => None,
        })
        .collect()
}

#[test]
fn dbscan_matches_reference_implementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let n = rng.gen_range(1..=500);
        let blobs: Vec<Point3> = (0..rng.gen_range(1..6))
            .map(|_| {
                Point3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-2.0..2.0))
            })
            .collect();
        let spread = Normal::new(0.0, rng.gen_range(0.2..1.0)).unwrap();
        let points: Vec<Point3> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    Point3::new(
                        rng.gen_range(-15.0..15.0),
                        rng.gen_range(-15.0..15.0),
                        rng.gen_range(-3.0..3.0),
                    )
                } else {
                    let b = blobs[rng.gen_range(0..blobs.len())];
                    b + Point3::new(spread.sample(&mut rng), spread.sample(&mut rng), spread.sample(&mut rng))
                }
            })
            .collect();
        let eps = rng.gen_range(0.2..1.0);
        let min_pts = rng.gen_range(1..8);
        let got: Vec<Option<u32>> = dbscan(&points, eps, min_pts)
            .unwrap()
            .into_iter()
            .map(|l| match l {
                DbscanLabel::Cluster(c) => Some(c),
                DbscanLabel::Noise => None,
            })
            .collect();
        assert_eq!(got, reference_dbscan(&points, eps, min_pts), "trial {trial}");
    }
}

#[test]
fn fps_matches_quadratic_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let pts: Vec<Point3> = (0..rng.gen_range(1..400))
            .map(|_| {
                Point3::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0), rng.gen_range(-1.0..1.0))
            })
            .collect();
        let k = rng.gen_range(1..=pts.len().min(30));
        let seed = rng.gen_range(0..pts.len());
        let mut chosen = vec![seed];
        while chosen.len() < k {
            let mut best = (0, -1.0);
            for (i, p) in pts.iter().enumerate() {
                let d = chosen.iter().map(|c| p.dist_sq(pts[*c])).fold(f64::INFINITY, f64::min);
                if d > best.1 {
                    best = (i, d);
                }
            }
            chosen.push(best.0);
        }
        assert_eq!(fps_indices(&pts, k, seed).unwrap(), chosen);
    }
}

#[test]
fn noisy_plane_normal_within_two_degrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let truth = {
        let n = Point3::new(0.2, -0.3, 0.9);
        n * (1.0 / n.norm())
    };
    // two in-plane axes
    let u = truth.cross(Point3::new(1.0, 0.0, 0.0));
    let u = u * (1.0 / u.norm());
    let v = truth.cross(u);
    let origin = truth * -4.0;
    let pts: Vec<Point3> = (0..400)
        .map(|_| {
            origin
                + u * rng.gen_range(-5.0..5.0)
                + v * rng.gen_range(-5.0..5.0)
                + truth * noise.sample(&mut rng)
        })
        .collect();
    let fit = ransac_plane(&pts, &RansacConfig { inlier_threshold: 0.05, ..Default::default() }).unwrap();
    let n = fit.plane.normal();
    let angle = n.dot(truth).abs().min(1.0).acos().to_degrees();
    assert!(angle < 2.0, "normal off by {angle} degrees");
    assert!((fit.plane.d.abs() - 4.0).abs() < 0.02);
}

proptest! {
    #[test]
    fn projection_round_trip_within_bin_bound(
        beams in 2usize..128,
        rho in 0.05f64..2.0,
        lo in -40.0f64..-1.0,
        hi in 1.0f64..20.0,
        u in 0.0f64..1.0,
        az in 0.0f64..360.0,
        r in 0.5f64..120.0,
    ) {
        let g = SensorGeometry::new(beams, rho, lo, hi).unwrap();
        let phi = (lo + u * (hi - lo)).to_radians();
        let theta = az.to_radians();
        let p = Point3::new(r * phi.cos() * theta.cos(), r * phi.cos() * theta.sin(), r * phi.sin());
        let px = project(p, &g).unwrap();
        let q = backproject(px.row, px.col, px.range, &g);
        let step = (hi - lo) / (beams - 1) as f64;
        let bound = r * (rho.to_radians() / 2.0 + step.to_radians() / 2.0) + 1e-9;
        prop_assert!(p.dist(q) <= bound, "{} > {}", p.dist(q), bound);
    }
}

#[test]
fn separated_objects_need_no_label_exceptions() {
    // six balls on a ring, no ground: every proxy lands in the right ball
    let shapes = (0..6)
        .map(|k| {
            let a = k as f64 * std::f64::consts::TAU / 6.0;
            Shape::Ball { center: Point3::new(10.0 * a.cos(), 10.0 * a.sin(), 0.0), radius: 1.0 }
        })
        .collect();
    let geom = SensorGeometry::new(16, 0.5, -15.0, 15.0).unwrap();
    let mut params = SceneParams::new(geom, 0);
    params.dropout = 0.0;
    let img = Scene { shapes }.render(&params).unwrap();
    let cfg = CodecConfig { cluster_count: 6, ..Default::default() };
    let enc = compress_detailed(&img, &cfg).unwrap();
    assert_eq!(enc.stats.cluster_count, 6);
    assert_eq!(enc.stats.label_exceptions, 0);
}
