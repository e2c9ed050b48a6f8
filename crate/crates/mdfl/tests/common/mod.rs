//! Shared test oracles, independent of the library's implementation paths.
//!
//! * brute-force enumeration for the cut-off constrained assignment,
//! * a forward ray-casting visibility oracle (sweep launch angles, follow
//!   specular bounces, accept when a ray passes through the receiver),
//! * central finite differences for measurement-model gradients.

#![allow(dead_code)]

use mdfl::geometry::{Environment, Link, PathGeometry, Point, Surface};
use mdfl::measurement::{user_impact_db, ShadowingParams};
use rand::Rng;

// ───────────────────────── assignment oracle ─────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAssignment {
    /// Total clamped cost including `cutoff` per unmatched slot of the
    /// square-padded problem.
    pub total_cost: f64,
    /// Matched sub-cutoff pairs (expected index, estimated index).
    pub pairs: Vec<(usize, usize)>,
}

/// Exhaustive search over all partial injections, with the same preference
/// order as the library: rows in order, smallest compatible estimate first,
/// unmatched last.
pub fn associate_bruteforce(expected: &[f64], estimated: &[f64], cutoff: f64) -> OracleAssignment {
    let n = expected.len();
    let m = estimated.len();
    let s = n.max(m);

    // Pass 1: minimal total cost by branch and bound.
    let mut best = f64::INFINITY;
    fn search_min(
        row: usize,
        used: &mut Vec<bool>,
        partial: f64,
        expected: &[f64],
        estimated: &[f64],
        cutoff: f64,
        best: &mut f64,
    ) {
        if partial >= *best {
            return;
        }
        let n = expected.len();
        if row == n {
            // Remaining unmatched estimates beyond row count are covered by
            // the square padding; account for them once at the end.
            let extra = estimated.len().saturating_sub(n);
            let total = partial + extra as f64 * 0.0; // padding handled below
            let _ = total;
            *best = (*best).min(partial);
            return;
        }
        for j in 0..estimated.len() {
            if !used[j] {
                let d = (expected[row] - estimated[j]).abs();
                if d < cutoff {
                    used[j] = true;
                    search_min(row + 1, used, partial + d, expected, estimated, cutoff, best);
                    used[j] = false;
                }
            }
        }
        search_min(row + 1, used, partial + cutoff, expected, estimated, cutoff, best);
    }
    let mut used = vec![false; m];
    // Base cost of padded slots not tied to rows: when m > n, the extra
    // columns always cost `cutoff` each.
    let base = (s - n) as f64 * cutoff;
    // Unmatched columns among the first min(n, m)... handled implicitly: a
    // row either consumes a column at true cost or a padded slot at cutoff;
    // columns left over are covered by `base` plus the rows that went
    // unmatched (their padded slots absorb one column-equivalent each).
    search_min(0, &mut used, 0.0, expected, estimated, cutoff, &mut best);
    let total = best + base;

    // Pass 2: first assignment in preference order achieving the optimum.
    let tol = 1e-9 * (1.0 + total.abs());
    fn search_first(
        row: usize,
        used: &mut Vec<bool>,
        partial: f64,
        target: f64,
        tol: f64,
        expected: &[f64],
        estimated: &[f64],
        cutoff: f64,
        pairs: &mut Vec<(usize, usize)>,
    ) -> bool {
        if partial > target + tol {
            return false;
        }
        let n = expected.len();
        if row == n {
            return partial <= target + tol;
        }
        let mut order: Vec<usize> = (0..estimated.len()).filter(|&j| !used[j]).collect();
        order.sort_by(|&a, &b| estimated[a].total_cmp(&estimated[b]));
        for j in order {
            let d = (expected[row] - estimated[j]).abs();
            if d < cutoff {
                used[j] = true;
                pairs.push((row, j));
                if search_first(row + 1, used, partial + d, target, tol, expected, estimated, cutoff, pairs) {
                    return true;
                }
                pairs.pop();
                used[j] = false;
            }
        }
        search_first(row + 1, used, partial + cutoff, target, tol, expected, estimated, cutoff, pairs)
    }
    let mut pairs = Vec::new();
    let mut used = vec![false; m];
    let found = search_first(0, &mut used, 0.0, best, tol, expected, estimated, cutoff, &mut pairs);
    assert!(found, "oracle pass 2 must reach the pass-1 optimum");
    OracleAssignment { total_cost: total, pairs }
}

/// Total padded cost of a library association result, comparable to
/// [`OracleAssignment::total_cost`].
pub fn padded_cost_of(
    result: &mdfl::association::AssociationResult,
    n_expected: usize,
    n_estimated: usize,
    cutoff: f64,
) -> f64 {
    let s = n_expected.max(n_estimated);
    result.cost + (s - result.pairs.len()) as f64 * cutoff
}

// ───────────────────────── ray-casting oracle ─────────────────────────

struct RayHit {
    surface: usize,
    t: f64,
    point: Point,
}

fn ray_segment_hit(origin: Point, dir: (f64, f64), surface: &Surface) -> Option<(f64, Point)> {
    let wx = surface.b.x - surface.a.x;
    let wy = surface.b.y - surface.a.y;
    let denom = dir.0 * wy - dir.1 * wx;
    if denom.abs() < 1e-14 {
        return None;
    }
    let ax = surface.a.x - origin.x;
    let ay = surface.a.y - origin.y;
    let t = (ax * wy - ay * wx) / denom;
    let u = (ax * dir.1 - ay * dir.0) / denom;
    if t <= 1e-9 || !(0.0..=1.0).contains(&u) {
        return None;
    }
    Some((t, Point::new(origin.x + t * dir.0, origin.y + t * dir.1)))
}

fn nearest_hit(origin: Point, dir: (f64, f64), env: &Environment, skip: Option<usize>) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    for (si, surface) in env.surfaces().iter().enumerate() {
        if skip == Some(si) {
            continue;
        }
        if let Some((t, point)) = ray_segment_hit(origin, dir, surface) {
            if best.as_ref().map_or(true, |b| t < b.t) {
                best = Some(RayHit { surface: si, t, point });
            }
        }
    }
    best
}

fn reflect_dir(dir: (f64, f64), surface: &Surface) -> (f64, f64) {
    let wx = surface.b.x - surface.a.x;
    let wy = surface.b.y - surface.a.y;
    let len2 = wx * wx + wy * wy;
    let d = (dir.0 * wx + dir.1 * wy) / len2;
    (2.0 * d * wx - dir.0, 2.0 * d * wy - dir.1)
}

/// Signed miss of the receiver on the ray leg that follows the given bounce
/// prefix; `None` when the ray does not realize the prefix or the receiver's
/// closest approach is obstructed.
fn leg_miss(link: &Link, seq: &[usize], env: &Environment, angle: f64) -> Option<f64> {
    let mut origin = link.tx;
    let mut dir = (angle.cos(), angle.sin());
    let mut skip = None;
    for &want in seq {
        let hit = nearest_hit(origin, dir, env, skip)?;
        if hit.surface != want {
            return None;
        }
        dir = reflect_dir(dir, env.surfaces().get(hit.surface).unwrap());
        origin = hit.point;
        skip = Some(hit.surface);
    }
    let rx = (link.rx.x - origin.x, link.rx.y - origin.y);
    let along = rx.0 * dir.0 + rx.1 * dir.1;
    if along <= 1e-9 {
        return None;
    }
    if let Some(hit) = nearest_hit(origin, dir, env, skip) {
        if hit.t <= along {
            return None;
        }
    }
    Some(dir.0 * rx.1 - dir.1 * rx.0)
}

/// Forward visibility by dense angle sweep plus sign-change bisection.
pub fn forward_visible(link: &Link, seq: &[usize], env: &Environment, sweep: usize) -> bool {
    let tolerance = 1e-7;
    let evaluate = |angle: f64| leg_miss(link, seq, env, angle);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=sweep {
        let angle = std::f64::consts::TAU * i as f64 / sweep as f64;
        let miss = evaluate(angle);
        if let Some(m) = miss {
            if m.abs() < tolerance {
                return true;
            }
            if let Some((pa, pm)) = prev {
                if pm.signum() != m.signum() {
                    // Bisect the bracket.
                    let (mut lo, mut hi, mut flo) = (pa, angle, pm);
                    let mut ok = true;
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        match evaluate(mid) {
                            Some(fm) => {
                                if fm.abs() < tolerance {
                                    return true;
                                }
                                if fm.signum() == flo.signum() {
                                    lo = mid;
                                    flo = fm;
                                } else {
                                    hi = mid;
                                }
                            }
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        if let Some(fm) = evaluate(0.5 * (lo + hi)) {
                            if fm.abs() < tolerance {
                                return true;
                            }
                        }
                    }
                }
            }
            prev = Some((angle, m));
        } else {
            prev = None;
        }
    }
    false
}

// ───────────────────── boundary-scene rejection ──────────────────────

/// True when every visibility decision of the scene is comfortably away from
/// the conventions' boundaries (reflection points near segment endpoints,
/// crossings grazing leg endpoints, near-parallel geometry). Equivalence of
/// two visibility definitions is only meaningful on such scenes.
pub fn scene_is_clear(link: &Link, env: &Environment, max_order: usize) -> bool {
    use mdfl::geometry::{build_virtual_nodes, enumerate_sequences};
    let margin = 1e-3;
    for seq in enumerate_sequences(env, max_order) {
        let Ok(pairs) = build_virtual_nodes(link, &seq, env) else {
            return false;
        };
        let n = seq.len();
        let mut points = vec![link.tx];
        let mut trace_ok = true;
        for k in 0..n {
            let surface = &env.surfaces()[seq.indices()[k]];
            let p = pairs[k].vt;
            let q = pairs[k].vr;
            let rx = q.x - p.x;
            let ry = q.y - p.y;
            let wx = surface.b.x - surface.a.x;
            let wy = surface.b.y - surface.a.y;
            let denom = rx * wy - ry * wx;
            let scale = rx.hypot(ry) * wx.hypot(wy);
            if denom.abs() < 1e-6 * scale {
                return false; // near-parallel mirror geometry
            }
            let ax = surface.a.x - p.x;
            let ay = surface.a.y - p.y;
            let t = (ax * wy - ay * wx) / denom;
            let hit = Point::new(p.x + t * rx, p.y + t * ry);
            let wlen2 = wx * wx + wy * wy;
            let s = ((hit.x - surface.a.x) * wx + (hit.y - surface.a.y) * wy) / wlen2;
            if (t - 0.0).abs() < margin || (t - 1.0).abs() < margin {
                return false;
            }
            if (s - 0.0).abs() < margin || (s - 1.0).abs() < margin {
                return false;
            }
            if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&s) {
                trace_ok = false;
                break;
            }
            points.push(hit);
        }
        if !trace_ok {
            continue;
        }
        points.push(link.rx);
        for leg in 0..points.len() - 1 {
            let a = points[leg];
            let b = points[leg + 1];
            let len = a.distance_to(b);
            if len < margin {
                return false;
            }
            for surface in env.surfaces() {
                for endpoint in [surface.a, surface.b] {
                    if point_segment_distance(endpoint, a, b) < margin {
                        return false;
                    }
                }
                // Crossing parameters near the leg endpoints are ambiguous
                // unless they are the sanctioned reflection touch itself.
                if let Some((t, u)) = crossing_params(a, b, surface.a, surface.b) {
                    let interior_t = t > margin && t < 1.0 - margin;
                    let boundary_u = u.abs() < margin || (u - 1.0).abs() < margin;
                    if boundary_u && t > -margin && t < 1.0 + margin {
                        return false;
                    }
                    if !interior_t && (t.abs() < margin || (t - 1.0).abs() < margin) {
                        // Touch at a leg endpoint: fine only if that endpoint
                        // lies on this surface (the reflection itself).
                        let endpoint = if t < 0.5 { a } else { b };
                        let on_surface = point_segment_distance(endpoint, surface.a, surface.b)
                            < mdfl::geometry::GEOM_TOLERANCE_M;
                        if !on_surface {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

fn crossing_params(a: Point, b: Point, c: Point, d: Point) -> Option<(f64, f64)> {
    let rx = b.x - a.x;
    let ry = b.y - a.y;
    let sx = d.x - c.x;
    let sy = d.y - c.y;
    let denom = rx * sy - ry * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let acx = c.x - a.x;
    let acy = c.y - a.y;
    let t = (acx * sy - acy * sx) / denom;
    let u = (acx * ry - acy * rx) / denom;
    Some((t, u))
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.distance_to(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    p.distance_to(Point::new(a.x + t * abx, a.y + t * aby))
}

// ─────────────────────── gradient oracle ───────────────────────

/// Central finite differences of the modeled power change.
pub fn gradient_central_difference(
    r: Point,
    geometry: &PathGeometry,
    params: &ShadowingParams,
    step: f64,
) -> [f64; 2] {
    let f = |p: Point| user_impact_db(p, geometry, params);
    [
        (f(Point::new(r.x + step, r.y)) - f(Point::new(r.x - step, r.y))) / (2.0 * step),
        (f(Point::new(r.x, r.y + step)) - f(Point::new(r.x, r.y - step))) / (2.0 * step),
    ]
}

// ─────────────────────── random scene helpers ───────────────────────

pub fn random_point<R: Rng>(rng: &mut R, half: f64) -> Point {
    Point::new(rng.random_range(-half..half), rng.random_range(-half..half))
}

/// Random scene with up to three macroscopic surfaces and a link, for the
/// geometry oracle suite. Surfaces are at least 1.2 m long and all geometry
/// lives in a 10 m box, so visibility windows are wide relative to the sweep.
pub fn random_scene<R: Rng>(rng: &mut R) -> (Link, Environment) {
    let n_surfaces = rng.random_range(0..=3usize);
    let mut surfaces = Vec::with_capacity(n_surfaces);
    for i in 0..n_surfaces {
        loop {
            let a = random_point(rng, 5.0);
            let b = random_point(rng, 5.0);
            if a.distance_to(b) >= 1.2 {
                surfaces.push(Surface::new(format!("s{i}"), a, b).unwrap());
                break;
            }
        }
    }
    let env = Environment::new(surfaces).unwrap();
    let (tx, rx) = loop {
        let tx = random_point(rng, 4.0);
        let rx = random_point(rng, 4.0);
        if tx.distance_to(rx) >= 1.0 {
            break (tx, rx);
        }
    };
    (Link::new(0, 0, 1, tx, rx), env)
}
