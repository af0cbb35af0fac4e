mod common;

use std::f64::consts::{PI, TAU};
use std::fs;

use billiard_core::exact;
use billiard_core::geometry::{self, minkowski_sum, point, zoo};
use billiard_core::harness::{self, Mode, RunConfig, ScheduleSpec, Status};
use billiard_core::loopspace::{self, DiscreteCurve};
use billiard_core::penalty::{self, Order, PenaltyParams};
use billiard_core::saddle::{self, seeds, SolverOptions};
use billiard_core::trajectory::{self, BilliardTrajectory};
use billiard_core::variational::{self, MuStrategy};
use billiard_core::{Body, Point};
use nalgebra::{DMatrix, DVector, Rotation2};
use proptest::prelude::*;

fn unit(theta: f64) -> Point {
    point(&[theta.cos(), theta.sin()])
}

fn zoo_body(i: usize) -> Body {
    zoo::planar().swap_remove(i % 5).1
}

fn rotate(p: &Point, angle: f64) -> Point {
    let r = Rotation2::new(angle);
    let v = r * nalgebra::Vector2::new(p[0], p[1]);
    point(&[v.x, v.y])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_is_positively_homogeneous(b in 0..5usize, theta in 0.0..TAU, c in 0.1..10.0f64) {
        let body = zoo_body(b);
        let u = unit(theta);
        let h1 = body.support(&u).unwrap();
        let hc = body.support(&(&u * c)).unwrap();
        prop_assert!((hc - c * h1).abs() <= 1e-12 * (c * h1).abs().max(1.0));
    }

    #[test]
    fn support_is_additive_under_sums(a in 0..5usize, b in 0..5usize, theta in 0.0..TAU) {
        let (ka, kb) = (zoo_body(a), zoo_body(b));
        let sum = minkowski_sum(&ka, &kb).unwrap();
        let u = unit(theta);
        let expected = ka.support(&u).unwrap() + kb.support(&u).unwrap();
        prop_assert!((sum.support(&u).unwrap() - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn projection_of_interior_points(b in 0..5usize, theta in 0.0..TAU, s in 0.0..0.99f64) {
        let body = zoo_body(b);
        let q = common::radial_point(&body, theta, 0.0, s);
        let proj = body.project(&q).unwrap();
        prop_assert!(proj.distance > 0.0);
        prop_assert!(((&q - &proj.foot).norm() - proj.distance).abs() <= 1e-9);
        let normal = body.boundary_normal(&proj.foot).unwrap();
        prop_assert!(normal.dot(&(&q - &proj.foot)) <= 1e-12);
    }

    #[test]
    fn cutoff_bounds(t in 0.0..6.0f64) {
        let (r, d1) = (penalty::rho(t).unwrap(), penalty::rho_d1(t).unwrap());
        prop_assert!((0.0..=2.0).contains(&r));
        prop_assert!((0.0..=1.0).contains(&d1));
        if (0.0..=1.0).contains(&t) {
            prop_assert!((r - t).abs() <= 1e-15);
        }
        if t >= 3.0 {
            prop_assert_eq!(r, 2.0);
        }
    }

    #[test]
    fn barrier_grows_toward_the_boundary(b in 0..5usize, theta in 0.0..TAU) {
        let body = zoo_body(b);
        let delta = penalty::default_delta(&body).unwrap();
        let c = body.center();
        let u = unit(theta);
        let (foot, t_exit) = exact::ray_exit(&body, &c, &u).unwrap();
        let inward = -body.boundary_normal(&foot).unwrap();
        let mut last = f64::NEG_INFINITY;
        for k in 0..12 {
            let d = 0.9 * delta * 0.5f64.powi(k);
            let q = &foot + &inward * d;
            let value = penalty::U_delta(&body, delta, &q).unwrap();
            prop_assert!(value > last, "U not increasing at d = {d:e}");
            last = value;
        }
        let _ = t_exit;
    }

    #[test]
    fn barrier_grad_matches_differences(b in 0..5usize, theta in 0.0..TAU, frac in 0.1..3.0f64) {
        let body = zoo_body(b);
        let delta = penalty::default_delta(&body).unwrap();
        let (foot, _) = exact::ray_exit(&body, &body.center(), &unit(theta)).unwrap();
        let q = &foot - body.boundary_normal(&foot).unwrap() * (frac * delta);
        let grad = penalty::grad_U(&body, delta, &q).unwrap();
        let fd = common::fd_gradient(|y| penalty::U_delta(&body, delta, y).unwrap(), &q, 1e-7 * delta);
        prop_assert!((&fd - &grad).norm() <= 1e-6 * grad.norm().max(1.0));

        let hess = penalty::hess_U(&body, delta, &q).unwrap();
        prop_assert!((&hess - hess.transpose()).norm() <= 1e-8 * hess.norm().max(1.0));
        let h = 1e-6 * delta;
        let mut fd_h = DMatrix::zeros(2, 2);
        for i in 0..2 {
            let mut p = q.clone();
            let mut m = q.clone();
            p[i] += h;
            m[i] -= h;
            let col = (penalty::grad_U(&body, delta, &p).unwrap() - penalty::grad_U(&body, delta, &m).unwrap()) / (2.0 * h);
            fd_h.set_column(i, &col);
        }
        prop_assert!((&fd_h - &hess).norm() <= 1e-4 * hess.norm().max(1.0));
    }

    #[test]
    fn rigid_motions_preserve_energy_and_length(
        angle in 0.0..TAU,
        shift in (-3.0..3.0f64, -3.0..3.0f64),
        samples in prop::collection::vec((0.0..TAU, 0.1..0.9f64), 8..16),
    ) {
        let disc = zoo::disc();
        let curve = common::radial_curve(&disc, &samples.iter().map(|&(t, s)| (t, 0.0, s)).collect::<Vec<_>>(), true);
        let shift = point(&[shift.0, shift.1]);
        let moved = curve.map(|p| rotate(p, angle) + &shift);
        let (e, l) = (loopspace::energy(&curve), loopspace::length(&curve));
        prop_assert!((loopspace::energy(&moved) - e).abs() <= 1e-12 * e.max(1.0));
        prop_assert!((loopspace::length(&moved) - l).abs() <= 1e-12 * l.max(1.0));

        let params = PenaltyParams::new(penalty::default_delta(&disc).unwrap(), 0.05).unwrap();
        let turned = curve.map(|p| rotate(p, angle));
        let lag = loopspace::lagrangian(&curve, &disc, &params).unwrap();
        prop_assert!((loopspace::lagrangian(&turned, &disc, &params).unwrap() - lag).abs() <= 1e-10 * lag.abs().max(1.0));
    }

    #[test]
    fn plateau_gradient_annihilates_translations(samples in prop::collection::vec((0.0..TAU, 0.0..0.5f64), 8..16)) {
        let disc = zoo::disc();
        let curve = common::radial_curve(&disc, &samples.iter().map(|&(t, s)| (t, 0.0, s)).collect::<Vec<_>>(), true);
        let params = PenaltyParams::new(penalty::default_delta(&disc).unwrap(), 0.05).unwrap();
        let grad = loopspace::grad_lagrangian(&curve, &disc, &params).unwrap();
        let total = grad.vectors().iter().fold(DVector::zeros(2), |acc: Point, v| acc + v);
        prop_assert!(total.norm() <= 1e-10 * grad.node_norm().max(1.0));
    }

    #[test]
    fn lagrangian_hessian_is_symmetric(b in 0..5usize, samples in prop::collection::vec((0.0..TAU, 0.55..0.97f64), 8..12)) {
        let body = zoo_body(b);
        let curve = common::radial_curve(&body, &samples.iter().map(|&(t, s)| (t, 0.0, s)).collect::<Vec<_>>(), true);
        let params = PenaltyParams::new(penalty::default_delta(&body).unwrap(), 0.05).unwrap();
        let hess = loopspace::hess_lagrangian(&curve, &body, &params).unwrap();
        prop_assert!(hess.symmetry_defect() <= 1e-8 * hess.to_dense().norm());
    }

    #[test]
    fn reflection_is_an_involutive_isometry(theta in 0.0..TAU, v in (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), phi in -1.0..1.0f64) {
        let z = phi;
        let r = (1.0 - z * z).sqrt();
        let nu = point(&[r * theta.cos(), r * theta.sin(), z]);
        let v = point(&[v.0, v.1, v.2]);
        let once = exact::reflect(&v, &nu).unwrap();
        let twice = exact::reflect(&once, &nu).unwrap();
        prop_assert!((&twice - &v).norm() <= 1e-12 * v.norm().max(1.0));
        prop_assert!((once.norm() - v.norm()).abs() <= 1e-12 * v.norm().max(1.0));
        prop_assert!((once.dot(&nu) + v.dot(&nu)).abs() <= 1e-12 * v.norm().max(1.0));
    }

    #[test]
    fn shooting_outputs_reflect_exactly(b in 0..5usize, k in 2..6usize, phase in 0.0..TAU) {
        let body = zoo_body(b);
        if let Ok(poly) = exact::shoot_periodic(&body, k, &exact::star_seed(k, 1, phase)) {
            let traj = BilliardTrajectory::from_polygon(&poly).unwrap();
            let report = trajectory::verify_reflection(&traj, &body, 1e-9).unwrap();
            prop_assert!(report.passes, "residual {:e}", report.max_residual);
        }
    }

    #[test]
    fn vertex_support_is_homogeneous(
        samples in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..8),
        theta in 0.0..TAU,
        c in 0.1..10.0f64,
    ) {
        let points: Vec<Point> = samples.iter().map(|&(x, y)| point(&[x, y])).collect();
        let u = unit(theta);
        let h = variational::curve_support(&points, &u).unwrap();
        let scaled: Vec<Point> = points.iter().map(|p| p * c).collect();
        prop_assert!((variational::curve_support(&scaled, &u).unwrap() - c * h).abs() <= 1e-12 * (c * h).abs().max(1.0));
    }
}

#[test]
fn inscribed_ball_fits_in_the_thinnest_slab() {
    for (name, body) in zoo::planar() {
        let r = geometry::inradius(&body).unwrap().radius;
        let slab = geometry::width(&body).unwrap();
        assert!(r <= slab.width / 2.0 + 1e-9, "{name}: r = {r}, width = {}", slab.width);
        for k in 0..90 {
            let u = unit(PI * k as f64 / 90.0);
            let w = body.support(&u).unwrap() + body.support(&-&u).unwrap();
            assert!(slab.width <= w + 1e-9, "{name}: width exceeds slab at {k}");
        }
    }
}

#[test]
fn inradius_is_monotone_under_inclusion() {
    for (ni, inner, no, outer) in common::nested_pairs() {
        let dominated = (0..360).all(|k| {
            let u = unit(TAU * k as f64 / 360.0);
            inner.support(&u).unwrap() <= outer.support(&u).unwrap() + 1e-12
        });
        assert!(dominated, "{ni} is not inside {no}");
        let (ri, ro) = (
            geometry::inradius(&inner).unwrap().radius,
            geometry::inradius(&outer).unwrap().radius,
        );
        assert!(ri <= ro + 1e-9, "{ni}: {ri} > {no}: {ro}");
    }
}

#[test]
fn barrier_outpaces_its_value_near_the_boundary() {
    for (name, body) in zoo::planar() {
        let delta = penalty::default_delta(&body).unwrap();
        let (foot, _) = exact::ray_exit(&body, &body.center(), &unit(0.3)).unwrap();
        let inward = -body.boundary_normal(&foot).unwrap();
        let ratios: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|f| {
                let s = penalty::evaluate(&body, delta, &(&foot + &inward * (f * delta)), Order::Gradient).unwrap();
                s.value / s.gradient.unwrap().norm()
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{name}: {ratios:?}");
    }
}

#[test]
fn lagrangian_converges_under_refinement() {
    let disc = zoo::disc();
    let params = PenaltyParams::new(penalty::default_delta(&disc).unwrap(), 0.05).unwrap();
    let curve = |n: usize| {
        let nodes = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                point(&[0.8 * t.cos() + 0.1 * (3.0 * t).cos(), 0.7 * t.sin()])
            })
            .collect();
        DiscreteCurve::new(nodes, true).unwrap()
    };
    let values: Vec<f64> = [32, 64, 128, 256, 512]
        .iter()
        .map(|&n| loopspace::lagrangian(&curve(n), &disc, &params).unwrap())
        .collect();
    let errors: Vec<f64> = values[..4].iter().map(|v| (v - values[4]).abs()).collect();
    let xs: Vec<f64> = [32f64, 64.0, 128.0, 256.0].iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(-slope >= 1.8, "observed order {}", -slope);
}

#[test]
fn shortest_bouncing_ball_is_twice_the_width() {
    for (name, body) in zoo::planar() {
        let orbits = exact::bouncing_ball_orbits(&body).unwrap();
        let shortest = orbits.iter().map(|o| o.polygon().length()).fold(f64::INFINITY, f64::min);
        let width = geometry::width(&body).unwrap().width;
        assert!((shortest - 2.0 * width).abs() <= 1e-6, "{name}: {shortest} vs {}", 2.0 * width);
    }
}

#[test]
fn estimates_scale_with_the_body() {
    let strategy = MuStrategy::default();
    for body in [zoo::disc(), zoo::ellipse()] {
        let base = variational::estimate_mu_p(&body, &strategy).unwrap().value;
        for c in [0.5, 2.0] {
            let scaled = variational::estimate_mu_p(&body.scaled(c).unwrap(), &strategy).unwrap().value;
            assert!((scaled - c * base).abs() <= 1e-6 * c * base, "c = {c}: {scaled} vs {}", c * base);
        }
    }
}

#[test]
fn continuation_conserves_energy_in_the_limit() {
    let disc = zoo::disc();
    let chord = exact::bouncing_ball_orbits(&disc).unwrap().remove(0);
    let seed = seeds::chord_loop(&chord.start, &chord.end, 64, 0.9).unwrap();
    let delta = penalty::default_delta(&disc).unwrap();
    let trace = saddle::continue_to_zero(&seed, &disc, delta, &saddle::geometric_schedule(0.1, 0.25, 13).unwrap(), &SolverOptions::default()).unwrap();
    let eps: Vec<f64> = trace.records().map(|r| r.epsilon).collect();
    assert!(eps.windows(2).all(|w| w[1] < w[0]));
    let spreads: Vec<f64> = trace.records().map(|r| saddle::energy_spread(r, &disc).unwrap()).collect();
    for step in &trace.steps {
        assert!(step.record.identity_defect() <= 1e-8);
        assert!(step.force_profile.iter().all(|f| *f >= 0.0));
    }
    assert!(*spreads.last().unwrap() <= 1e-3, "{spreads:?}");
    assert!(spreads[spreads.len() - 6..].windows(2).all(|w| w[1] < w[0]), "{spreads:?}");
    let ratios = trace.warm_start_ratios();
    assert!(ratios.iter().all(|r| *r <= 10.0), "{ratios:?}");
}

#[test]
fn identical_configs_reproduce_identical_outputs() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        for (mode, sub) in [(Mode::Shoot, "shoot"), (Mode::Solve, "solve"), (Mode::Geom, "geom")] {
            let config = RunConfig {
                mode,
                bodies: vec!["ellipse".into()],
                out: dir.path().join(sub),
                nodes: 64,
                schedule: ScheduleSpec { start: 0.1, ratio: 0.25, steps: 13 },
                seed: 11,
                perturbation: 1e-3,
                ..RunConfig::default()
            };
            let (status, _) = harness::run(&config);
            assert_ne!(status, Status::ConfigError);
            assert_ne!(status, Status::SolverFailure);
        }
    }
    let mut compared = 0;
    for entry in walk(dirs[0].path()) {
        let rel = entry.strip_prefix(dirs[0].path()).unwrap();
        let other = dirs[1].path().join(rel);
        assert_eq!(fs::read(&entry).unwrap(), fs::read(&other).unwrap(), "{} differs", rel.display());
        compared += 1;
    }
    assert!(compared >= 3);
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}
