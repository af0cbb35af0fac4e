//! Limit trajectories: bounce detection from the force density, assembly
//! into straight segments, and reflection-law verification.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::BouncePolygon;
use crate::geometry::{Body, Point};
use crate::saddle::{ContinuationTrace, CriticalPointRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Periodic,
    Brake,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
    /// Unit vector from `start` to `end`.
    pub direction: Point,
    /// Traversal speed on this segment.
    pub speed: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilliardTrajectory {
    pub kind: TrajectoryKind,
    pub bounce_times: Vec<f64>,
    pub bounce_points: Vec<Point>,
    /// Brake trajectories: the two boundary endpoints.
    pub endpoints: Option<(Point, Point)>,
    pub segments: Vec<Segment>,
    pub speed: f64,
    pub total_length: f64,
    /// Sum of the segment lengths.
    pub polygon_length: f64,
    /// Largest distance between a curve node and the assembled trajectory
    /// at the same time (zero for exact orbits).
    pub straightness: f64,
}

fn segment(start: &Point, end: &Point, speed: f64) -> Result<Segment> {
    let diff = end - start;
    let len = diff.norm();
    if len <= 0.0 {
        return Err(Error::invalid("degenerate trajectory segment"));
    }
    Ok(Segment {
        start: start.clone(),
        end: end.clone(),
        direction: diff / len,
        speed,
    })
}

impl BilliardTrajectory {
    /// Constant-speed periodic trajectory through a closed bounce polygon
    /// on unit time.
    pub fn from_polygon(poly: &BouncePolygon) -> Result<Self> {
        if !poly.closed || poly.len() < 2 {
            return Err(Error::invalid("periodic trajectories need a closed polygon"));
        }
        let length = poly.length();
        let k = poly.len();
        let mut times = Vec::with_capacity(k);
        let mut acc = 0.0;
        let mut segments = Vec::with_capacity(k);
        for i in 0..k {
            times.push(acc / length);
            let (a, b) = (&poly.points[i], &poly.points[(i + 1) % k]);
            acc += (b - a).norm();
            segments.push(segment(a, b, length)?);
        }
        Ok(BilliardTrajectory {
            kind: TrajectoryKind::Periodic,
            bounce_times: times,
            bounce_points: poly.points.clone(),
            endpoints: None,
            segments,
            speed: length,
            total_length: length,
            polygon_length: length,
            straightness: 0.0,
        })
    }

    /// Brake trajectory along a single chord.
    pub fn brake_chord(start: &Point, end: &Point) -> Result<Self> {
        let length = (end - start).norm();
        Ok(BilliardTrajectory {
            kind: TrajectoryKind::Brake,
            bounce_times: Vec::new(),
            bounce_points: Vec::new(),
            endpoints: Some((start.clone(), end.clone())),
            segments: vec![segment(start, end, length)?],
            speed: length,
            total_length: length,
            polygon_length: length,
            straightness: 0.0,
        })
    }

    pub fn bounce_count(&self) -> usize {
        self.bounce_points.len()
    }

    /// Outer normals at the bounce points.
    pub fn bounce_normals(&self, body: &Body) -> Result<Vec<Point>> {
        self.bounce_points
            .iter()
            .map(|p| Ok(body.project(p)?.normal))
            .collect()
    }

    /// Vertices of the closed polygon traced by the trajectory.
    pub fn polygon(&self) -> Vec<Point> {
        self.segments.iter().map(|s| s.start.clone()).chain(
            (self.kind == TrajectoryKind::Brake)
                .then(|| self.segments.last().map(|s| s.end.clone()))
                .flatten(),
        )
        .collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BounceOptions {
    /// Multiple of the mean force density that marks a contact.
    pub threshold: f64,
    /// Minimum number of quiet grid cells between two contacts.
    pub gap: usize,
}

impl Default for BounceOptions {
    fn default() -> Self {
        BounceOptions {
            threshold: 5.0,
            gap: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bounce {
    pub time: f64,
    pub point: Point,
    /// Grid cells of the contact cluster.
    pub cells: Vec<usize>,
}

/// Contiguous runs of `flags`, wrapping around for closed grids.
fn clusters(flags: &[bool], closed: bool) -> Vec<Vec<usize>> {
    let n = flags.len();
    let mut runs: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for (i, &on) in flags.iter().enumerate() {
        if on {
            current.push(i);
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    if closed && runs.len() > 1 && flags[0] && flags[n - 1] {
        let last = runs.pop().expect("at least two runs");
        let mut merged = last;
        merged.extend(runs[0].iter().copied());
        runs[0] = merged;
    }
    runs
}

/// Bounce times and boundary points from the final force-density profile.
/// Contacts of an open curve at its first or last node are endpoint
/// contacts and are not bounces.
pub fn detect_bounces(trace: &ContinuationTrace, body: &Body, opts: &BounceOptions) -> Result<Vec<Bounce>> {
    let step = trace.last();
    let curve = &step.record.curve;
    let profile = &step.force_profile;
    let n = profile.len();
    let mean = profile.iter().sum::<f64>() / n as f64;
    if mean.is_nan() || mean <= 0.0 {
        return Err(Error::NoBounces);
    }
    let flags: Vec<bool> = profile.iter().map(|f| *f > opts.threshold * mean).collect();
    let runs = clusters(&flags, curve.closed());
    if runs.is_empty() {
        return Err(Error::NoBounces);
    }
    // Gap check between cyclically consecutive clusters.
    for w in 0..runs.len() {
        if !curve.closed() && w + 1 == runs.len() {
            break;
        }
        if runs.len() == 1 {
            break;
        }
        let a = &runs[w];
        let b = &runs[(w + 1) % runs.len()];
        let end = *a.last().expect("nonempty");
        let start = b[0];
        let quiet = (start + n - end - 1) % n;
        if quiet < opts.gap {
            return Err(Error::MergeAmbiguity {
                first: end,
                second: start,
            });
        }
    }
    let mut bounces = Vec::new();
    for run in runs {
        if !curve.closed() && (run.contains(&0) || run.contains(&(n - 1))) {
            continue;
        }
        // Unwrap indices so a cluster straddling node 0 has increasing times.
        let base = run[0];
        let (mut weight, mut moment) = (0.0, 0.0);
        for &i in &run {
            let offset = (i + n - base) % n;
            weight += profile[i];
            moment += profile[i] * (base + offset) as f64;
        }
        let index = moment / weight;
        let mut time = index * curve.dt();
        if curve.closed() {
            time = time.rem_euclid(1.0);
        }
        let foot = body.project(&curve.at_time(time))?.foot;
        bounces.push(Bounce {
            time,
            point: foot,
            cells: run,
        });
    }
    bounces.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(bounces)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Largest accepted node deviation from the assembled trajectory.
    pub straightness: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { straightness: 1e-2 }
    }
}

/// Median of node speeds whose segments lie strictly between `t0` and `t1`.
fn segment_speed(rec: &CriticalPointRecord, t0: f64, t1: f64) -> f64 {
    let c = &rec.curve;
    let dt = c.dt();
    let span = if t1 > t0 { t1 - t0 } else { t1 + 1.0 - t0 };
    let mut speeds: Vec<f64> = (0..c.segment_count())
        .filter(|&k| {
            let mid = (k as f64 + 0.5) * dt;
            let rel = (mid - t0).rem_euclid(1.0);
            rel > 1.5 * dt && rel < span - 1.5 * dt
        })
        .map(|k| {
            let (a, b) = c.segment_nodes(k);
            (b - a).norm() / dt
        })
        .collect();
    if speeds.is_empty() {
        return (2.0 * rec.energy_value).sqrt();
    }
    speeds.sort_by(f64::total_cmp);
    speeds[speeds.len() / 2]
}

/// Replaces the penalized curve by straight segments between bounce
/// points (and boundary endpoints for open curves).
pub fn assemble(
    rec: &CriticalPointRecord,
    bounces: &[Bounce],
    body: &Body,
    opts: &AssemblyOptions,
) -> Result<BilliardTrajectory> {
    let c = &rec.curve;
    let speed = (2.0 * rec.energy_value).sqrt();
    let (kind, knots): (TrajectoryKind, Vec<(f64, Point)>) = if c.closed() {
        if bounces.len() < 2 {
            return Err(Error::NoBounces);
        }
        (
            TrajectoryKind::Periodic,
            bounces.iter().map(|b| (b.time, b.point.clone())).collect(),
        )
    } else {
        let first = body.project(&c.nodes()[0])?.foot;
        let last = body.project(&c.nodes()[c.len() - 1])?.foot;
        let mut knots = vec![(0.0, first)];
        knots.extend(bounces.iter().map(|b| (b.time, b.point.clone())));
        knots.push((1.0, last));
        (TrajectoryKind::Brake, knots)
    };
    let legs = if c.closed() { knots.len() } else { knots.len() - 1 };
    let mut segments = Vec::with_capacity(legs);
    for k in 0..legs {
        let (t0, p0) = &knots[k];
        let (t1, p1) = &knots[(k + 1) % knots.len()];
        segments.push(segment(p0, p1, segment_speed(rec, *t0, *t1))?);
    }
    // Deviation of each node from the piecewise-linear-in-time trajectory.
    let mut straightness: f64 = 0.0;
    for (i, x) in c.nodes().iter().enumerate() {
        let t = c.time(i);
        let mut leg = legs - 1;
        for k in 0..legs {
            let t0 = knots[k].0;
            let t1 = if c.closed() && k + 1 == knots.len() { knots[0].0 + 1.0 } else { knots[(k + 1) % knots.len()].0 };
            let rel = if c.closed() { (t - t0).rem_euclid(1.0) } else { t - t0 };
            if rel >= 0.0 && rel <= t1 - t0 {
                leg = k;
                break;
            }
        }
        let t0 = knots[leg].0;
        let t1 = if c.closed() && leg + 1 == knots.len() { knots[0].0 + 1.0 } else { knots[(leg + 1) % knots.len()].0 };
        let rel = if c.closed() { (t - t0).rem_euclid(1.0) } else { t - t0 };
        let s = if t1 > t0 { rel / (t1 - t0) } else { 0.0 };
        let seg = &segments[leg];
        let expected = &seg.start * (1.0 - s) + &seg.end * s;
        straightness = straightness.max((x - expected).norm());
    }
    if straightness > opts.straightness {
        return Err(Error::AssemblyFailure {
            residual: straightness,
            limit: opts.straightness,
        });
    }
    let polygon_length = segments.iter().map(|s| (&s.end - &s.start).norm()).sum();
    let (bounce_times, bounce_points) = bounces.iter().map(|b| (b.time, b.point.clone())).unzip();
    Ok(BilliardTrajectory {
        kind,
        bounce_times,
        bounce_points,
        endpoints: (kind == TrajectoryKind::Brake)
            .then(|| (knots[0].1.clone(), knots[knots.len() - 1].1.clone())),
        segments,
        speed,
        total_length: speed,
        polygon_length,
        straightness,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BounceResidual {
    pub point: Point,
    /// `|tangential part of (v⁺ − v⁻)| / speed`.
    pub tangential: f64,
    /// `|normal part of (v⁺ + v⁻)| / speed`.
    pub normal_sum: f64,
    /// `|v⁺| − |v⁻|` relative to the speed.
    pub speed_mismatch: f64,
    /// `|normal part of (v⁺ − v⁻)| / speed`; zero means a grazing touch.
    pub normal_jump: f64,
    /// Signed boundary distance of the bounce point.
    pub boundary_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReflectionReport {
    pub bounces: Vec<BounceResidual>,
    /// Brake kind: `|tangential part of γ̇|/|γ̇|` at both endpoints.
    pub endpoint_perpendicularity: Vec<f64>,
    pub max_residual: f64,
    pub grazing: bool,
    pub passes: bool,
    pub tolerance: f64,
}

fn tangential_part(v: &Point, normal: &Point) -> Point {
    v - normal * v.dot(normal)
}

/// Checks the law of reflection at every bounce and, for brake
/// trajectories, perpendicular arrival at both endpoints.
pub fn verify_reflection(traj: &BilliardTrajectory, body: &Body, tol: f64) -> Result<ReflectionReport> {
    let k = traj.segments.len();
    let scale = traj.speed.max(f64::MIN_POSITIVE);
    let mut bounces = Vec::new();
    let incoming = |i: usize| -> Option<usize> {
        match traj.kind {
            TrajectoryKind::Periodic => Some((i + k - 1) % k),
            TrajectoryKind::Brake => Some(i),
        }
    };
    for (i, p) in traj.bounce_points.iter().enumerate() {
        let (before, after) = match traj.kind {
            TrajectoryKind::Periodic => (incoming(i).expect("periodic"), i),
            TrajectoryKind::Brake => (i, i + 1),
        };
        let (s_in, s_out) = (&traj.segments[before], &traj.segments[after]);
        let proj = body.project(p)?;
        let nu = &proj.normal;
        let v_in = &s_in.direction * s_in.speed;
        let v_out = &s_out.direction * s_out.speed;
        let diff = &v_out - &v_in;
        let sum = &v_out + &v_in;
        bounces.push(BounceResidual {
            point: p.clone(),
            tangential: tangential_part(&diff, nu).norm() / scale,
            normal_sum: sum.dot(nu).abs() / scale,
            speed_mismatch: (s_out.speed - s_in.speed).abs() / scale,
            normal_jump: diff.dot(nu).abs() / scale,
            boundary_distance: proj.distance,
        });
    }
    let mut endpoint_perpendicularity = Vec::new();
    if let (TrajectoryKind::Brake, Some((a, b))) = (traj.kind, &traj.endpoints) {
        let first = &traj.segments[0].direction;
        let last = &traj.segments[k - 1].direction;
        for (p, d) in [(a, first), (b, last)] {
            let nu = body.project(p)?.normal;
            endpoint_perpendicularity.push(tangential_part(d, &nu).norm());
        }
    }
    let boundary_slack = |d: f64| d.abs() / body.extent().max(1.0);
    let max_residual = bounces
        .iter()
        .flat_map(|b| [b.tangential, b.normal_sum, b.speed_mismatch, boundary_slack(b.boundary_distance)])
        .chain(endpoint_perpendicularity.iter().copied())
        .fold(0.0, f64::max);
    let grazing = bounces.iter().any(|b| b.normal_jump <= tol);
    Ok(ReflectionReport {
        passes: max_residual <= tol && !grazing,
        bounces,
        endpoint_perpendicularity,
        max_residual,
        grazing,
        tolerance: tol,
    })
}

/// SVG drawing of a planar body, a trajectory and its bounce normals.
pub fn render_svg(body: &Body, traj: &BilliardTrajectory) -> Result<String> {
    if body.dim() != 2 {
        return Err(Error::invalid("SVG rendering needs a planar body"));
    }
    let boundary: Vec<Point> = (0..360)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 360.0;
            body.support_and_point(&crate::geometry::point(&[t.cos(), t.sin()])).1
        })
        .collect();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &boundary {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let pad = 0.1 * (xmax - xmin).max(ymax - ymin);
    let size = 480.0;
    let span = (xmax - xmin).max(ymax - ymin) + 2.0 * pad;
    let map = |p: &Point| {
        (
            (p[0] - xmin + pad) / span * size,
            size - (p[1] - ymin + pad) / span * size,
        )
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let pts: Vec<String> = boundary
        .iter()
        .map(|p| {
            let (x, y) = map(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="#f4f4f4" stroke="#222" stroke-width="1.5"/>"##,
        pts.join(" ")
    );
    for s in &traj.segments {
        let (x1, y1) = map(&s.start);
        let (x2, y2) = map(&s.end);
        let _ = writeln!(
            out,
            r##"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="#c0392b" stroke-width="1.5"/>"##
        );
    }
    let arrow = 0.15 * span;
    for (p, nu) in traj.bounce_points.iter().zip(traj.bounce_normals(body)?) {
        let q = p - &nu * arrow;
        let (x1, y1) = map(p);
        let (x2, y2) = map(&q);
        let _ = writeln!(
            out,
            r##"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="#2980b9" stroke-dasharray="4 3"/>"##
        );
        let _ = writeln!(out, r##"<circle cx="{x1:.3}" cy="{y1:.3}" r="3" fill="#2980b9"/>"##);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point, zoo};

    fn square_on_disc(rotate_first: f64) -> BilliardTrajectory {
        let pts: Vec<Point> = (0..4)
            .map(|i| {
                let mut t = std::f64::consts::FRAC_PI_2 * i as f64 + 0.3;
                if i == 0 {
                    t += rotate_first;
                }
                point(&[t.cos(), t.sin()])
            })
            .collect();
        BilliardTrajectory::from_polygon(&BouncePolygon {
            points: pts,
            closed: true,
            angles: None,
            max_residual: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn inscribed_square_reflects_exactly() {
        let disc = zoo::disc();
        let report = verify_reflection(&square_on_disc(0.0), &disc, 1e-12).unwrap();
        assert!(report.passes, "{report:?}");
    }

    #[test]
    fn rotated_vertex_fails() {
        let disc = zoo::disc();
        let report = verify_reflection(&square_on_disc(0.1), &disc, 1e-3).unwrap();
        assert!(!report.passes);
        assert!(report.bounces.iter().any(|b| b.tangential > 1e-2));
    }

    #[test]
    fn brake_diameter_is_perpendicular() {
        let traj = BilliardTrajectory::brake_chord(&point(&[-1.0, 0.0]), &point(&[1.0, 0.0])).unwrap();
        let report = verify_reflection(&traj, &zoo::disc(), 1e-12).unwrap();
        assert!(report.passes);
        assert_eq!(report.endpoint_perpendicularity.len(), 2);
        let tilted = BilliardTrajectory::brake_chord(&point(&[-1.0, 0.0]), &point(&[0.0, 1.0])).unwrap();
        assert!(!verify_reflection(&tilted, &zoo::disc(), 1e-3).unwrap().passes);
    }

    #[test]
    fn cluster_wraparound() {
        let flags = [true, false, false, true, true, false, true];
        assert_eq!(clusters(&flags, true), vec![vec![6, 0], vec![3, 4]]);
        assert_eq!(clusters(&flags, false).len(), 3);
    }

    #[test]
    fn svg_contains_segments() {
        let svg = render_svg(&zoo::disc(), &square_on_disc(0.0)).unwrap();
        assert_eq!(svg.matches("<line").count(), 8);
    }
}
