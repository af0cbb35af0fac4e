//! Translation-obstruction membership (the class of closed polygons no
//! translate of which fits inside the open body), support certificates,
//! shortest-orbit estimates and the inequality checks built on them.

use std::fmt;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::geometry::{self, directions, Body, Point};
use crate::penalty;
use crate::saddle::{self, seeds, SolverOptions};
use crate::trajectory::{self, BilliardTrajectory, TrajectoryKind};

/// Largest accepted `|Σ λⱼ νⱼ|` for a hull witness.
pub const HULL_TOLERANCE: f64 = 1e-10;
/// Margin below which no strict translate is considered to fit.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-7;
/// Reflection tolerance for orbits produced by exact shooting.
pub const EXACT_REFLECTION_TOLERANCE: f64 = 1e-9;
/// Reflection tolerance for trajectories assembled from penalized curves.
pub const PENALTY_REFLECTION_TOLERANCE: f64 = 1e-3;

/// `max_i xᵢ·ν` over a vertex set.
pub fn curve_support(points: &[Point], nu: &Point) -> Result<f64> {
    if nu.norm() == 0.0 {
        return Err(Error::invalid("support direction must be nonzero"));
    }
    points
        .iter()
        .map(|p| p.dot(nu))
        .reduce(f64::max)
        .ok_or_else(|| Error::invalid("empty vertex set"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PPlusCertificate {
    /// Unit normals.
    pub normals: Vec<Point>,
    /// Convex weights with `Σ λⱼ νⱼ ≈ 0`.
    pub hull_witness: Vec<f64>,
    pub hull_residual: f64,
    /// `h(curve: ν) − h(K: ν)` per normal.
    pub support_slacks: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Refusal {
    /// The curve does not reach the supporting line of `K` along a normal.
    SupportGap { index: usize, slack: f64 },
    /// The origin is not in the convex hull of the normals; `residual` is
    /// the norm of the closest convex combination found.
    OriginOutsideHull { residual: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CertificateOutcome {
    Certified(PPlusCertificate),
    Refused(Refusal),
}

impl CertificateOutcome {
    pub fn certificate(&self) -> Option<&PPlusCertificate> {
        match self {
            CertificateOutcome::Certified(c) => Some(c),
            CertificateOutcome::Refused(_) => None,
        }
    }
}

/// Sufficient condition for membership: the curve touches every
/// supporting hyperplane of `K` with normal in `normals`, and `0` lies in
/// the convex hull of those normals.
pub fn p_plus_certificate(points: &[Point], body: &Body, normals: &[Point]) -> Result<CertificateOutcome> {
    if normals.is_empty() {
        return Err(Error::invalid("certificate needs at least one normal"));
    }
    let mut unit = Vec::with_capacity(normals.len());
    for nu in normals {
        let norm = nu.norm();
        if norm == 0.0 {
            return Err(Error::invalid("certificate normals must be nonzero"));
        }
        unit.push(nu / norm);
    }
    let (weights, residual) = crate::lp::min_convex_combination(&unit)?;
    if residual > HULL_TOLERANCE {
        return Ok(CertificateOutcome::Refused(Refusal::OriginOutsideHull { residual }));
    }
    let tol = MEMBERSHIP_TOLERANCE * body.extent().max(1.0);
    let mut support_slacks = Vec::with_capacity(unit.len());
    for (index, nu) in unit.iter().enumerate() {
        let slack = curve_support(points, nu)? - body.support(nu)?;
        if slack < -tol {
            return Ok(CertificateOutcome::Refused(Refusal::SupportGap { index, slack }));
        }
        support_slacks.push(slack);
    }
    Ok(CertificateOutcome::Certified(PPlusCertificate {
        normals: unit,
        hull_witness: weights,
        hull_residual: residual,
        support_slacks,
    }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MembershipReport {
    /// True when no translate of the curve fits strictly inside `K`.
    pub member: bool,
    /// Largest margin `t` with `x·ν + t ≤ h(K:ν) − h(curve:ν)` on the grid.
    pub margin: f64,
    /// Translation that fits the curve inside, when `member` is false.
    pub witness: Option<Point>,
    /// Every translated vertex checked strictly inside `K`.
    pub witness_verified: bool,
    /// Number of directions in the final linear program.
    pub directions: usize,
}

fn membership_grid(dim: usize) -> Vec<Point> {
    match dim {
        2 => (0..720)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 720.0;
                geometry::point(&[t.cos(), t.sin()])
            })
            .collect(),
        3 => directions::fibonacci_sphere(2562),
        n => directions::sphere_grid(n, 4096),
    }
}

const CUTTING_ROUNDS: usize = 50;

fn margin_rows(points: &[Point], body: &Body, dirs: &[Point]) -> Result<Vec<(Point, f64)>> {
    dirs.iter()
        .map(|nu| Ok((nu.clone(), body.support(nu)? - curve_support(points, nu)?)))
        .collect()
}

/// Decides whether some translate of the vertex set fits strictly inside
/// `K` by maximizing the common margin over a direction grid, then adding
/// the exact boundary normals of the translated vertices as cutting planes.
pub fn in_p_plus(points: &[Point], body: &Body) -> Result<MembershipReport> {
    if points.is_empty() {
        return Err(Error::invalid("empty vertex set"));
    }
    if points.iter().any(|p| p.len() != body.dim()) {
        return Err(Error::invalid("vertex dimension does not match the body"));
    }
    let dim = body.dim();
    let scale = body.extent().max(1.0);
    let tol = MEMBERSHIP_TOLERANCE * scale;
    let mut dirs = membership_grid(dim);
    let mut rows = margin_rows(points, body, &dirs)?;
    let (mut x, mut t) = crate::lp::max_margin(dim, &rows)?;
    // `t` bounds the best margin from above, the worst vertex distance at
    // `x` from below.
    let mut lower = f64::NEG_INFINITY;
    for _ in 0..CUTTING_ROUNDS {
        let projections = points
            .iter()
            .map(|p| body.project(&(p + &x)))
            .collect::<Result<Vec<_>>>()?;
        lower = projections.iter().map(|q| q.distance).fold(f64::INFINITY, f64::min);
        if t <= tol || lower > tol || t - lower <= 1e-3 * tol {
            break;
        }
        let cuts: Vec<Point> = projections.into_iter().map(|q| q.normal).collect();
        rows.extend(margin_rows(points, body, &cuts)?);
        dirs.extend(cuts);
        (x, t) = crate::lp::max_margin(dim, &rows)?;
    }
    let member = t <= tol || (lower <= tol && t - lower <= 1e-3 * tol);
    let witness_verified = !member
        && points
            .iter()
            .map(|p| body.distance_to_boundary(&(p + &x)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .all(|d| d > 0.0);
    Ok(MembershipReport {
        member,
        margin: t,
        witness: (!member).then_some(x),
        witness_verified,
        directions: dirs.len(),
    })
}

/// `2kr·sin(πj/k)`, the length of the `(k, j)` star orbit in a disc of radius `r`.
pub fn mu_p_ball(r: f64, k: usize, j: usize) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    if k < 2 || j == 0 || j >= k {
        return Err(Error::invalid(format!("need k ≥ 2 and 1 ≤ j ≤ k−1, got k={k}, j={j}")));
    }
    Ok(exact::disc_orbit_length(r, k, j))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Shooting { k: usize, j: usize },
    BouncingBall,
    BrakeChord,
    Penalty { seed: String },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Shooting { k, j } => write!(f, "shooting k={k} j={j}"),
            Method::BouncingBall => write!(f, "bouncing ball"),
            Method::BrakeChord => write!(f, "perpendicular chord"),
            Method::Penalty { seed } => write!(f, "penalty continuation from {seed}"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PenaltyStrategy {
    pub nodes: usize,
    pub schedule: Vec<f64>,
    /// Defaults to [`penalty::default_delta`].
    pub delta: Option<f64>,
    pub shrink: f64,
    /// Number of shortest bouncing-ball chords used as seeds.
    pub seeds: usize,
}

impl Default for PenaltyStrategy {
    fn default() -> Self {
        PenaltyStrategy {
            nodes: 256,
            schedule: saddle::geometric_schedule(0.1, 0.25, 13).expect("valid constants"),
            delta: None,
            shrink: 0.9,
            seeds: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuStrategy {
    /// Planar shooting over `k = 2..=max_bounces`.
    pub max_bounces: usize,
    /// Seed rotations per `(k, j)` family.
    pub phases: usize,
    pub bouncing_balls: bool,
    pub penalty: Option<PenaltyStrategy>,
}

impl Default for MuStrategy {
    fn default() -> Self {
        MuStrategy {
            max_bounces: 5,
            phases: 4,
            bouncing_balls: true,
            penalty: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Candidate {
    pub method: Method,
    pub length: f64,
    pub reflection_residual: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuEstimate {
    pub value: f64,
    pub trajectory: BilliardTrajectory,
    pub method: Method,
    pub candidates: Vec<Candidate>,
    /// `2·wid(K)`, the bouncing-ball value along the width direction.
    pub bouncing_ball_bound: f64,
    /// Membership of the returned periodic trajectory.
    pub membership: Option<MembershipReport>,
}

struct Found {
    method: Method,
    trajectory: BilliardTrajectory,
    tolerance: f64,
}

fn shooting_candidates(body: &Body, strategy: &MuStrategy) -> Vec<Found> {
    let mut jobs = Vec::new();
    for k in 2..=strategy.max_bounces {
        for j in 1..=k / 2 {
            if j.gcd(&k) != 1 {
                continue;
            }
            for p in 0..strategy.phases.max(1) {
                let phase = std::f64::consts::TAU * p as f64 / (k * strategy.phases.max(1)) as f64;
                jobs.push((k, j, phase));
            }
        }
    }
    jobs.par_iter()
        .filter_map(|&(k, j, phase)| {
            let poly = exact::shoot_periodic(body, k, &exact::star_seed(k, j, phase)).ok()?;
            Some(Found {
                method: Method::Shooting { k, j },
                trajectory: BilliardTrajectory::from_polygon(&poly).ok()?,
                tolerance: EXACT_REFLECTION_TOLERANCE,
            })
        })
        .collect()
}

fn penalty_candidates(body: &Body, strategy: &PenaltyStrategy, kind: TrajectoryKind) -> Result<Vec<Found>> {
    let delta = match strategy.delta {
        Some(d) => d,
        None => penalty::default_delta(body)?,
    };
    let chords = exact::bouncing_ball_orbits(body)?;
    let found = chords
        .par_iter()
        .take(strategy.seeds)
        .enumerate()
        .filter_map(|(i, orbit)| {
            let seed = match kind {
                TrajectoryKind::Periodic => seeds::chord_loop(&orbit.start, &orbit.end, strategy.nodes, strategy.shrink),
                TrajectoryKind::Brake => seeds::brake_chord(&orbit.start, &orbit.end, strategy.nodes, strategy.shrink),
            }
            .ok()?;
            let trace =
                saddle::continue_to_zero(&seed, body, delta, &strategy.schedule, &SolverOptions::default()).ok()?;
            let bounces = trajectory::detect_bounces(&trace, body, &Default::default()).ok()?;
            let traj = trajectory::assemble(&trace.last().record, &bounces, body, &Default::default()).ok()?;
            Some(Found {
                method: Method::Penalty {
                    seed: format!("bouncing-ball chord {i}"),
                },
                trajectory: traj,
                tolerance: PENALTY_REFLECTION_TOLERANCE,
            })
        })
        .collect();
    Ok(found)
}

fn select(body: &Body, mut found: Vec<Found>, periodic: bool) -> Result<MuEstimate> {
    found.sort_by(|a, b| a.trajectory.total_length.total_cmp(&b.trajectory.total_length));
    let mut candidates = Vec::with_capacity(found.len());
    let mut chosen: Option<(usize, Option<MembershipReport>)> = None;
    for (i, f) in found.iter().enumerate() {
        let report = trajectory::verify_reflection(&f.trajectory, body, f.tolerance)?;
        let mut accepted = report.passes && chosen.is_none();
        let mut membership = None;
        if accepted && periodic {
            let m = in_p_plus(&f.trajectory.bounce_points, body)?;
            accepted = m.member;
            membership = Some(m);
        }
        if accepted {
            chosen = Some((i, membership));
        }
        candidates.push(Candidate {
            method: f.method.clone(),
            length: f.trajectory.total_length,
            reflection_residual: report.max_residual,
            accepted,
        });
    }
    let Some((index, membership)) = chosen else {
        return Err(Error::NoCandidates(format!(
            "{} candidate orbits, none verified",
            found.len()
        )));
    };
    let width = geometry::width(body)?.width;
    let best = found.swap_remove(index);
    Ok(MuEstimate {
        value: best.trajectory.total_length,
        trajectory: best.trajectory,
        method: best.method,
        candidates,
        bouncing_ball_bound: 2.0 * width,
        membership,
    })
}

/// Shortest verified periodic billiard trajectory over exact shooting
/// (planar), bouncing-ball chords, and optionally penalty continuation.
pub fn estimate_mu_p(body: &Body, strategy: &MuStrategy) -> Result<MuEstimate> {
    let mut found = Vec::new();
    if body.dim() == 2 {
        found.extend(shooting_candidates(body, strategy));
    }
    if strategy.bouncing_balls {
        for orbit in exact::bouncing_ball_orbits(body)? {
            found.push(Found {
                method: Method::BouncingBall,
                trajectory: BilliardTrajectory::from_polygon(&orbit.polygon())?,
                tolerance: EXACT_REFLECTION_TOLERANCE,
            });
        }
    }
    if let Some(p) = &strategy.penalty {
        found.extend(penalty_candidates(body, p, TrajectoryKind::Periodic)?);
    }
    select(body, found, true)
}

/// Shortest verified brake trajectory over perpendicular chords and
/// optionally open-curve penalty continuation.
pub fn estimate_mu_b(body: &Body, strategy: &MuStrategy) -> Result<MuEstimate> {
    let mut found = Vec::new();
    for orbit in exact::bouncing_ball_orbits(body)? {
        found.push(Found {
            method: Method::BrakeChord,
            trajectory: BilliardTrajectory::brake_chord(&orbit.start, &orbit.end)?,
            tolerance: EXACT_REFLECTION_TOLERANCE,
        });
    }
    if let Some(p) = &strategy.penalty {
        found.extend(penalty_candidates(body, p, TrajectoryKind::Brake)?);
    }
    select(body, found, false)
}

/// Two bounces at the ends of a chord whose endpoint normals are
/// antiparallel and aligned with it.
pub fn is_bouncing_ball(traj: &BilliardTrajectory, body: &Body, tol: f64) -> Result<bool> {
    if traj.kind != TrajectoryKind::Periodic || traj.bounce_points.len() != 2 {
        return Ok(false);
    }
    let normals = traj.bounce_normals(body)?;
    let chord = &traj.bounce_points[1] - &traj.bounce_points[0];
    let dir = &chord / chord.norm();
    Ok((&normals[0] + &normals[1]).norm() <= tol && (&normals[1] - &dir).norm() <= tol)
}

/// Vertex sets equal up to translation, positive scaling, cyclic shift
/// and reversal.
pub fn same_shape(a: &[Point], b: &[Point], tol: f64) -> bool {
    if a.len() != b.len() || a.is_empty() {
        return false;
    }
    let normalize = |pts: &[Point]| -> Option<Vec<Point>> {
        let centroid = pts.iter().fold(Point::zeros(pts[0].len()), |acc, p| acc + p) / pts.len() as f64;
        let scale = pts.iter().map(|p| (p - &centroid).norm()).fold(0.0, f64::max);
        (scale > 0.0).then(|| pts.iter().map(|p| (p - &centroid) / scale).collect())
    };
    let (Some(a), Some(b)) = (normalize(a), normalize(b)) else {
        return false;
    };
    let n = a.len();
    (0..n).any(|shift| {
        let forward = (0..n).all(|i| (&a[i] - &b[(i + shift) % n]).norm() <= tol);
        let backward = (0..n).all(|i| (&a[i] - &b[(shift + n - i) % n]).norm() <= tol);
        forward || backward
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    EqualityWithinTol,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::EqualityWithinTol => "equality-within-tol",
        })
    }
}

/// One checked inequality `lhs ≥ rhs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub subject: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: Verdict,
    pub lhs_source: String,
    pub rhs_source: String,
    /// Structural condition attached to an equality verdict (bouncing-ball
    /// witness, homothetic witnesses); `None` when not applicable.
    pub witness_ok: Option<bool>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InequalityTolerances {
    pub absolute: f64,
    pub equality_relative: f64,
}

impl Default for InequalityTolerances {
    fn default() -> Self {
        InequalityTolerances {
            absolute: 1e-3,
            equality_relative: 1e-4,
        }
    }
}

impl InequalityTolerances {
    fn verdict(&self, lhs: f64, rhs: f64) -> Verdict {
        let slack = lhs - rhs;
        if slack.abs() <= self.equality_relative * lhs.abs().max(rhs.abs()) {
            Verdict::EqualityWithinTol
        } else if slack >= -self.absolute {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }
}

fn report(
    name: &str,
    subject: String,
    (lhs, lhs_source): (f64, String),
    (rhs, rhs_source): (f64, String),
    tol: &InequalityTolerances,
) -> InequalityReport {
    InequalityReport {
        name: name.to_string(),
        subject,
        lhs,
        rhs,
        slack: lhs - rhs,
        verdict: tol.verdict(lhs, rhs),
        lhs_source,
        rhs_source,
        witness_ok: None,
    }
}

/// A body with its estimates and extremal quantities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyEntry {
    pub name: String,
    pub body: Body,
    pub inradius: f64,
    pub width: f64,
    pub mu_p: Option<MuEstimate>,
    pub mu_b: Option<MuEstimate>,
}

impl BodyEntry {
    /// Computes inradius, width and both estimates.
    pub fn build(name: &str, body: Body, strategy: &MuStrategy) -> Result<Self> {
        Ok(BodyEntry {
            name: name.to_string(),
            inradius: geometry::inradius(&body)?.radius,
            width: geometry::width(&body)?.width,
            mu_p: Some(estimate_mu_p(&body, strategy)?),
            mu_b: Some(estimate_mu_b(&body, strategy)?),
            body,
        })
    }

    fn mu_p(&self) -> Result<&MuEstimate> {
        self.mu_p
            .as_ref()
            .ok_or_else(|| Error::IncompleteReport(format!("no periodic estimate for {}", self.name)))
    }
}

/// Relations between entries: Minkowski sums and nested pairs, by index.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Relations {
    /// `(first, second, sum)`.
    pub sums: Vec<(usize, usize, usize)>,
    /// `(inner, outer)`.
    pub nested: Vec<(usize, usize)>,
}

fn support_dominated(inner: &Body, outer: &Body) -> Result<bool> {
    let grid = membership_grid(inner.dim());
    let tol = MEMBERSHIP_TOLERANCE * outer.extent().max(1.0);
    for nu in &grid {
        if inner.support(nu)? > outer.support(nu)? + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether the summand's support points at the sum witness's bounce
/// normals form a billiard trajectory of the summand of the estimated
/// length and of the same shape. Rotational families make the estimated
/// witnesses themselves an unreliable comparison.
fn summand_witness(entry: &BodyEntry, estimate: &MuEstimate, sum: &MuEstimate) -> Result<bool> {
    let rel = InequalityTolerances::default().equality_relative;
    let sum_points = sum.trajectory.polygon();
    let segs = &sum.trajectory.segments;
    // Outer normal at the start of segment i: incoming minus outgoing direction.
    let normals: Vec<Point> = (0..segs.len())
        .map(|i| {
            let d = &segs[(i + segs.len() - 1) % segs.len()].direction - &segs[i].direction;
            &d / d.norm()
        })
        .collect();
    let points: Vec<Point> = normals
        .iter()
        .map(|nu| entry.body.support_and_point(nu).1)
        .collect();
    let Ok(traj) = BilliardTrajectory::from_polygon(&exact::BouncePolygon {
        points: points.clone(),
        closed: true,
        angles: None,
        max_residual: 0.0,
    }) else {
        return Ok(false);
    };
    let report = trajectory::verify_reflection(&traj, &entry.body, rel)?;
    Ok(report.passes
        && (traj.total_length - estimate.value).abs() <= rel * estimate.value
        && same_shape(&points, &sum_points, rel))
}

/// All applicable inequality reports: per body the inradius lower bound
/// with its equality condition, the upper bounds by `2(n+1)r` and (brake)
/// `2n·r`; per sum the superadditivity bound; per nested pair monotonicity.
pub fn check_inequalities(
    entries: &[BodyEntry],
    relations: &Relations,
    tol: &InequalityTolerances,
) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for e in entries {
        let mu = e.mu_p()?;
        let n = e.body.dim() as f64;
        let mu_src = format!("estimate ({})", mu.method);
        let mut ghomi = report(
            "inradius_lower_bound",
            e.name.clone(),
            (mu.value, mu_src.clone()),
            (4.0 * e.inradius, "4·inradius (LP)".into()),
            tol,
        );
        if ghomi.verdict == Verdict::EqualityWithinTol {
            ghomi.witness_ok = Some(
                (2.0 * e.inradius - e.width).abs() <= tol.equality_relative
                    && is_bouncing_ball(&mu.trajectory, &e.body, 1e-6)?,
            );
        }
        out.push(ghomi);
        out.push(report(
            "width_equality_condition",
            e.name.clone(),
            (e.width, "width (sphere Newton)".into()),
            (2.0 * e.inradius, "2·inradius (LP)".into()),
            tol,
        ));
        out.push(report(
            "periodic_upper_bound",
            e.name.clone(),
            (2.0 * (n + 1.0) * e.inradius, "2(n+1)·inradius".into()),
            (mu.value, mu_src),
            tol,
        ));
        match &e.mu_b {
            Some(b) => out.push(report(
                "brake_upper_bound",
                e.name.clone(),
                (2.0 * n * e.inradius, "2n·inradius".into()),
                (b.value, format!("estimate ({})", b.method)),
                tol,
            )),
            None => {
                return Err(Error::IncompleteReport(format!("no brake estimate for {}", e.name)));
            }
        }
    }
    let get = |i: usize| {
        entries
            .get(i)
            .ok_or_else(|| Error::IncompleteReport(format!("relation refers to missing entry {i}")))
    };
    for &(a, b, s) in &relations.sums {
        let (ea, eb, es) = (get(a)?, get(b)?, get(s)?);
        let (ma, mb, ms) = (ea.mu_p()?, eb.mu_p()?, es.mu_p()?);
        let mut r = report(
            "sum_superadditivity",
            format!("{} + {}", ea.name, eb.name),
            (ms.value, format!("estimate of {}", es.name)),
            (ma.value + mb.value, "sum of summand estimates".into()),
            tol,
        );
        if r.verdict == Verdict::EqualityWithinTol {
            let ps = ms.trajectory.polygon();
            let direct = same_shape(&ma.trajectory.polygon(), &ps, 1e-6) && same_shape(&mb.trajectory.polygon(), &ps, 1e-6);
            r.witness_ok = Some(direct || (summand_witness(ea, ma, ms)? && summand_witness(eb, mb, ms)?));
        }
        out.push(r);
    }
    for &(inner, outer) in &relations.nested {
        let (ei, eo) = (get(inner)?, get(outer)?);
        if !support_dominated(&ei.body, &eo.body)? {
            return Err(Error::invalid(format!("{} is not contained in {}", ei.name, eo.name)));
        }
        out.push(report(
            "monotonicity",
            format!("{} ⊆ {}", ei.name, eo.name),
            (eo.mu_p()?.value, format!("estimate of {}", eo.name)),
            (ei.mu_p()?.value, format!("estimate of {}", ei.name)),
            tol,
        ));
    }
    Ok(out)
}

/// Writes reports as CSV, one row per inequality.
pub fn write_reports_csv<W: std::io::Write>(reports: &[InequalityReport], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["name", "subject", "lhs", "rhs", "slack", "verdict", "lhs_source", "rhs_source", "witness_ok"])?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.subject.clone(),
            format!("{:.12}", r.lhs),
            format!("{:.12}", r.rhs),
            format!("{:.3e}", r.slack),
            r.verdict.to_string(),
            r.lhs_source.clone(),
            r.rhs_source.clone(),
            r.witness_ok.map_or(String::new(), |b| b.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point, zoo};

    fn minor_axis() -> Vec<Point> {
        vec![point(&[0.0, -1.0]), point(&[0.0, 1.0])]
    }

    #[test]
    fn support_of_vertex_sets() {
        let square = vec![point(&[1.0, 1.0]), point(&[-1.0, 1.0]), point(&[-1.0, -1.0]), point(&[1.0, -1.0])];
        assert_eq!(curve_support(&square, &point(&[1.0, 0.0])).unwrap(), 1.0);
        let diameter = vec![point(&[1.0, 0.0]), point(&[-1.0, 0.0])];
        assert_eq!(curve_support(&diameter, &point(&[1.0, 0.0])).unwrap(), 1.0);
        assert!(curve_support(&diameter, &point(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn minor_axis_certificate() {
        let normals = [point(&[0.0, 1.0]), point(&[0.0, -1.0])];
        let out = p_plus_certificate(&minor_axis(), &zoo::ellipse(), &normals).unwrap();
        let cert = out.certificate().expect("certified");
        assert!((cert.hull_witness[0] - 0.5).abs() < 1e-12);
        assert!(cert.support_slacks.iter().all(|s| s.abs() < 1e-12));

        let shrunk: Vec<Point> = minor_axis().iter().map(|p| p * 0.99).collect();
        let out = p_plus_certificate(&shrunk, &zoo::ellipse(), &normals).unwrap();
        assert!(matches!(out, CertificateOutcome::Refused(Refusal::SupportGap { index: 0, .. })));

        let out = p_plus_certificate(&minor_axis(), &zoo::ellipse(), &[point(&[1.0, 0.0])]).unwrap();
        assert!(matches!(out, CertificateOutcome::Refused(Refusal::OriginOutsideHull { .. })));
    }

    #[test]
    fn membership_examples() {
        let disc = zoo::disc();
        let diameter = vec![point(&[-1.0, 0.0]), point(&[1.0, 0.0])];
        assert!(in_p_plus(&diameter, &disc).unwrap().member);
        let tiny = vec![point(&[0.01, 0.0]), point(&[-0.005, 0.008]), point(&[-0.005, -0.008])];
        let report = in_p_plus(&tiny, &disc).unwrap();
        assert!(!report.member);
        assert!(report.witness_verified);
        assert!(report.witness.unwrap().norm() < 0.1);
    }

    #[test]
    fn star_orbit_lengths() {
        assert_eq!(mu_p_ball(1.0, 2, 1).unwrap(), 4.0);
        assert!((mu_p_ball(1.0, 3, 1).unwrap() - 27f64.sqrt()).abs() < 1e-12);
        assert!((mu_p_ball(2.0, 2, 1).unwrap() - 8.0).abs() < 1e-12);
        assert!(mu_p_ball(1.0, 3, 3).is_err());
        assert!(mu_p_ball(-1.0, 3, 1).is_err());
    }

    #[test]
    fn estimates_on_discs_and_ellipse() {
        let s = MuStrategy::default();
        let disc = estimate_mu_p(&zoo::disc(), &s).unwrap();
        assert!((disc.value - 4.0).abs() < 1e-8);
        let ellipse = estimate_mu_p(&zoo::ellipse(), &s).unwrap();
        assert!((ellipse.value - 4.0).abs() < 1e-8);
        assert!(is_bouncing_ball(&ellipse.trajectory, &zoo::ellipse(), 1e-6).unwrap());
        let big = estimate_mu_p(&zoo::disc_of_radius(3.0), &s).unwrap();
        assert!((big.value - 12.0).abs() < 1e-7);
    }

    #[test]
    fn shape_comparison() {
        let a = vec![point(&[0.0, 0.0]), point(&[1.0, 0.0]), point(&[0.0, 1.0])];
        let b: Vec<Point> = a.iter().rev().map(|p| p * 3.0 + point(&[5.0, -2.0])).collect();
        assert!(same_shape(&a, &b, 1e-12));
        let c = vec![point(&[0.0, 0.0]), point(&[1.0, 0.0]), point(&[0.0, 2.0])];
        assert!(!same_shape(&a, &c, 1e-6));
    }

    #[test]
    fn missing_estimate_is_incomplete() {
        let entry = BodyEntry {
            name: "disc".into(),
            body: zoo::disc(),
            inradius: 1.0,
            width: 2.0,
            mu_p: None,
            mu_b: None,
        };
        let err = check_inequalities(&[entry], &Relations::default(), &Default::default()).unwrap_err();
        assert!(matches!(err, Error::IncompleteReport(_)));
    }
}
