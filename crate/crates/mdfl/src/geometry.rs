//! Planar environment model and image-source path geometry.
//!
//! The environment is a finite set of reflecting line segments. For a pair of
//! nodes, a reflection sequence lists the surfaces a signal bounces off in
//! chronological order; the empty sequence is the direct (LoS) path. Virtual
//! transmitters are built by mirroring the physical transmitter across the
//! sequence surfaces in order, virtual receivers by mirroring the receiver in
//! reverse order. The distance between the u-th virtual transmitter and its
//! related virtual receiver is the same for every u and equals the physical
//! path length; consecutive pair segments intersect at the physical
//! reflection points, which is what the visibility trace checks.
//!
//! Everything here is 2-D: nodes and evaluated user locations sit on one
//! plane, so mirrors are reflections across infinite lines through the
//! surface segments.

use crate::error::{Error, Result};

/// Tolerance for on-segment and equidistance checks, meters.
///
/// Far below any physical path-length scale handled by this crate.
pub const GEOM_TOLERANCE_M: f64 = 1e-6;

/// A point (or position vector) in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance_to(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// A finite reflecting segment of the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub id: String,
    pub a: Point,
    pub b: Point,
}

impl Surface {
    pub fn new(id: impl Into<String>, a: Point, b: Point) -> Result<Self> {
        let id = id.into();
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::config(format!("surface `{id}`: non-finite endpoint")));
        }
        if a.distance_to(b) <= GEOM_TOLERANCE_M {
            return Err(Error::DegenerateSurface { id });
        }
        Ok(Surface { id, a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.distance_to(self.b)
    }
}

/// The set of reflecting surfaces, sorted by id.
///
/// Reflection sequences index into this sorted order, so enumeration order is
/// independent of the order surfaces were supplied in.
#[derive(Debug, Clone)]
pub struct Environment {
    surfaces: Vec<Surface>,
}

impl Environment {
    /// Builds an environment from surfaces with unique ids.
    pub fn new(mut surfaces: Vec<Surface>) -> Result<Self> {
        surfaces.sort_by(|a, b| a.id.cmp(&b.id));
        for w in surfaces.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::config(format!("duplicate surface id `{}`", w[0].id)));
            }
        }
        Ok(Environment { surfaces })
    }

    pub fn empty() -> Self {
        Environment { surfaces: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn surface(&self, index: usize) -> Result<&Surface> {
        self.surfaces.get(index).ok_or(Error::UnknownSurface {
            index,
            count: self.surfaces.len(),
        })
    }

    /// Environment restricted to the first `n` surfaces (id order).
    pub fn prefix(&self, n: usize) -> Environment {
        Environment {
            surfaces: self.surfaces.iter().take(n).cloned().collect(),
        }
    }
}

/// One transmitter/receiver pair of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    /// Position of the link in the configured link set.
    pub index: usize,
    pub tx_index: usize,
    pub rx_index: usize,
    pub tx: Point,
    pub rx: Point,
}

impl Link {
    pub fn new(index: usize, tx_index: usize, rx_index: usize, tx: Point, rx: Point) -> Self {
        Link { index, tx_index, rx_index, tx, rx }
    }

    /// Link with transmitter and receiver roles exchanged.
    pub fn reversed(&self) -> Link {
        Link {
            index: self.index,
            tx_index: self.rx_index,
            rx_index: self.tx_index,
            tx: self.rx,
            rx: self.tx,
        }
    }
}

/// Ordered surface indices a path bounces off; empty means line of sight.
///
/// A ray cannot reflect off the same plane twice in a row, so consecutive
/// duplicate indices are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReflectionSequence {
    indices: Vec<usize>,
}

impl ReflectionSequence {
    pub fn los() -> Self {
        ReflectionSequence { indices: Vec::new() }
    }

    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config(
                "reflection sequence repeats a surface consecutively",
            ));
        }
        Ok(ReflectionSequence { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_los(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn reversed(&self) -> ReflectionSequence {
        ReflectionSequence {
            indices: self.indices.iter().rev().copied().collect(),
        }
    }

    /// Human-readable form using environment surface ids, e.g. `(s1,s2)`.
    pub fn display(&self, env: &Environment) -> String {
        if self.is_los() {
            return "los".to_string();
        }
        let ids: Vec<&str> = self
            .indices
            .iter()
            .map(|&i| env.surfaces()[i].id.as_str())
            .collect();
        format!("({})", ids.join(","))
    }
}

/// Positions of the u-th virtual transmitter and its related virtual receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualNodePair {
    pub vt: Point,
    pub vr: Point,
}

impl VirtualNodePair {
    pub fn distance(&self) -> f64 {
        self.vt.distance_to(self.vr)
    }
}

/// Virtual node pairs of one sequence together with the common path length.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGeometry {
    pub pairs: Vec<VirtualNodePair>,
    pub length: f64,
}

/// Outcome of the visibility trace for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Visibility {
    /// All reflection points lie inside their segments and no leg is occluded.
    Visible { reflection_points: Vec<Point> },
    /// Some reflection point falls outside its surface segment (or exactly on
    /// an endpoint, which counts as outside: corner diffraction is not
    /// modeled).
    OffSegment,
    /// Some leg of the reconstructed polyline is intersected by a surface.
    Blocked,
}

impl Visibility {
    pub fn is_visible(&self) -> bool {
        matches!(self, Visibility::Visible { .. })
    }
}

/// One visible multipath component of a link.
#[derive(Debug, Clone)]
pub struct VisibleMpc {
    pub sequence: ReflectionSequence,
    pub geometry: PathGeometry,
    pub reflection_points: Vec<Point>,
}

/// All visible sequences of a link and their expected path lengths.
#[derive(Debug, Clone)]
pub struct VisibleSet {
    pub link: Link,
    pub mpcs: Vec<VisibleMpc>,
}

impl VisibleSet {
    /// Expected path lengths in enumeration order, meters.
    pub fn path_lengths(&self) -> Vec<f64> {
        self.mpcs.iter().map(|m| m.geometry.length).collect()
    }
}

/// Reflects `p` across the infinite line through the surface segment.
///
/// The mirror map is an involution; points on the line are fixed.
pub fn mirror_point(p: Point, s: &Surface) -> Result<Point> {
    let dx = s.b.x - s.a.x;
    let dy = s.b.y - s.a.y;
    let len2 = dx * dx + dy * dy;
    if len2 <= GEOM_TOLERANCE_M * GEOM_TOLERANCE_M {
        return Err(Error::DegenerateSurface { id: s.id.clone() });
    }
    let t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2;
    let foot_x = s.a.x + t * dx;
    let foot_y = s.a.y + t * dy;
    Ok(Point::new(2.0 * foot_x - p.x, 2.0 * foot_y - p.y))
}

/// Enumerates every reflection sequence of length `0..=max_order`.
///
/// Consecutive duplicates are excluded. Order is deterministic: LoS first,
/// then ascending length, lexicographic by surface index (ids are sorted, so
/// this is lexicographic by id).
pub fn enumerate_sequences(env: &Environment, max_order: usize) -> Vec<ReflectionSequence> {
    let n = env.len();
    let mut out = vec![ReflectionSequence::los()];
    let mut current: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for seq in &current {
            for s in 0..n {
                if seq.last() == Some(&s) {
                    continue;
                }
                let mut longer = seq.clone();
                longer.push(s);
                next.push(longer);
            }
        }
        out.extend(next.iter().cloned().map(|indices| ReflectionSequence { indices }));
        current = next;
        if current.is_empty() {
            break;
        }
    }
    out
}

/// Builds the virtual transmitter/receiver pairs of a sequence.
///
/// Pair `u` holds the transmitter mirrored across the first `u` surfaces and
/// the receiver mirrored across the remaining surfaces in reverse order, so
/// pair 0 contains the physical transmitter and the last pair the physical
/// receiver. All pairs are equidistant.
pub fn build_virtual_nodes(
    link: &Link,
    seq: &ReflectionSequence,
    env: &Environment,
) -> Result<Vec<VirtualNodePair>> {
    let n = seq.len();
    let mut vt = Vec::with_capacity(n + 1);
    vt.push(link.tx);
    for &s in seq.indices() {
        let surface = env.surface(s)?;
        let prev = *vt.last().unwrap();
        vt.push(mirror_point(prev, surface)?);
    }
    let mut vr = Vec::with_capacity(n + 1);
    vr.push(link.rx);
    for &s in seq.indices().iter().rev() {
        let surface = env.surface(s)?;
        let prev = *vr.last().unwrap();
        vr.push(mirror_point(prev, surface)?);
    }
    Ok((0..=n)
        .map(|u| VirtualNodePair { vt: vt[u], vr: vr[n - u] })
        .collect())
}

/// Common distance of the virtual node pairs, i.e. the physical path length.
pub fn path_length(pairs: &[VirtualNodePair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::config("path_length: no virtual node pairs"));
    }
    let distances: Vec<f64> = pairs.iter().map(|p| p.distance()).collect();
    let min = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = distances.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min > GEOM_TOLERANCE_M {
        return Err(Error::InconsistentPairDistances { spread_m: max - min });
    }
    Ok(distances[0])
}

/// Virtual nodes plus path length in one call.
pub fn build_path_geometry(
    link: &Link,
    seq: &ReflectionSequence,
    env: &Environment,
) -> Result<PathGeometry> {
    let pairs = build_virtual_nodes(link, seq, env)?;
    let length = path_length(&pairs)?;
    Ok(PathGeometry { pairs, length })
}

/// Extra length of the detour through `r` over the direct pair distance.
///
/// Non-negative (up to rounding) by the triangle inequality; zero exactly
/// when `r` lies on the segment between the pair's nodes.
pub fn excess_path_length(pair: &VirtualNodePair, r: Point, path_len: f64) -> f64 {
    pair.vt.distance_to(r) + pair.vr.distance_to(r) - path_len
}

/// Crossing of segment `[p, q]` with the infinite line through a surface.
///
/// Returns `(t, s, point)` with `t` the parameter on `[p, q]` and `s` the
/// parameter along the surface segment, or `None` if the segment is parallel
/// to the line.
fn line_crossing(p: Point, q: Point, surface: &Surface) -> Option<(f64, f64, Point)> {
    let rx = q.x - p.x;
    let ry = q.y - p.y;
    let wx = surface.b.x - surface.a.x;
    let wy = surface.b.y - surface.a.y;
    let denom = cross(rx, ry, wx, wy);
    let scale = (rx.hypot(ry)) * (wx.hypot(wy));
    if denom.abs() <= 1e-14 * scale {
        return None;
    }
    let ax = surface.a.x - p.x;
    let ay = surface.a.y - p.y;
    let t = cross(ax, ay, wx, wy) / denom;
    let point = Point::new(p.x + t * rx, p.y + t * ry);
    let wlen2 = wx * wx + wy * wy;
    let s = ((point.x - surface.a.x) * wx + (point.y - surface.a.y) * wy) / wlen2;
    Some((t, s, point))
}

/// Proper intersection test between two segments.
enum SegCross {
    None,
    /// Crossing at parameter `t` on the first segment.
    At { t: f64 },
    /// Segments are collinear with overlapping extents.
    Overlap,
}

fn segment_crossing(a: Point, b: Point, c: Point, d: Point) -> SegCross {
    let rx = b.x - a.x;
    let ry = b.y - a.y;
    let sx = d.x - c.x;
    let sy = d.y - c.y;
    let denom = cross(rx, ry, sx, sy);
    let acx = c.x - a.x;
    let acy = c.y - a.y;
    let scale = rx.hypot(ry) * sx.hypot(sy);
    if denom.abs() <= 1e-14 * scale.max(1e-300) {
        // Parallel; collinear overlap still blocks.
        if cross(acx, acy, rx, ry).abs() > 1e-12 * scale.max(1e-300) {
            return SegCross::None;
        }
        let rlen2 = rx * rx + ry * ry;
        if rlen2 == 0.0 {
            return SegCross::None;
        }
        let t0 = (acx * rx + acy * ry) / rlen2;
        let t1 = ((d.x - a.x) * rx + (d.y - a.y) * ry) / rlen2;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        if hi < 0.0 || lo > 1.0 {
            SegCross::None
        } else {
            SegCross::Overlap
        }
    } else {
        let t = cross(acx, acy, sx, sy) / denom;
        let s = cross(acx, acy, rx, ry) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&s) {
            SegCross::At { t }
        } else {
            SegCross::None
        }
    }
}

/// Reconstructs the physical propagation path of a sequence and classifies it.
///
/// Reflection points are recovered by walking backward from the receiver
/// toward the successive transmitter images: the point on the last surface is
/// the crossing of segment `[rx, image_n]` with that surface, the next one
/// the crossing of `[p_n, image_{n-1}]`, and so on. The walk enforces the leg
/// ordering of the propagation; the resulting points coincide with the
/// crossings of the related virtual node pair segments. The path is visible
/// only if each reflection point falls strictly inside its surface segment
/// and no leg of the polyline `tx -> p_1 -> ... -> p_n -> rx` is intersected
/// by any surface (touching the leg's own reflection surfaces at the leg
/// endpoints does not count).
pub fn trace_visibility(
    link: &Link,
    seq: &ReflectionSequence,
    env: &Environment,
) -> Result<Visibility> {
    let n = seq.len();
    // Transmitter images across the sequence prefixes.
    let mut images = Vec::with_capacity(n + 1);
    images.push(link.tx);
    for &s in seq.indices() {
        let surface = env.surface(s)?;
        let prev = *images.last().unwrap();
        images.push(mirror_point(prev, surface)?);
    }

    let mut reflection_points = vec![Point::new(0.0, 0.0); n];
    let mut current = link.rx;
    for k in (1..=n).rev() {
        let surface = env.surface(seq.indices()[k - 1])?;
        let Some((t, s, point)) = line_crossing(current, images[k], surface) else {
            return Ok(Visibility::OffSegment);
        };
        // The crossing must happen strictly between the walk point and the
        // image and, with tolerance, strictly inside the surface segment.
        // Points at a segment endpoint count as off-segment.
        if t <= 0.0 || t >= 1.0 {
            return Ok(Visibility::OffSegment);
        }
        let margin = GEOM_TOLERANCE_M / surface.length();
        if s < margin || s > 1.0 - margin {
            return Ok(Visibility::OffSegment);
        }
        reflection_points[k - 1] = point;
        current = point;
    }

    let mut polyline = Vec::with_capacity(n + 2);
    polyline.push(link.tx);
    polyline.extend(reflection_points.iter().copied());
    polyline.push(link.rx);

    for leg in 0..=n {
        let a = polyline[leg];
        let b = polyline[leg + 1];
        let leg_len = a.distance_to(b);
        if leg_len <= GEOM_TOLERANCE_M {
            continue;
        }
        let t_excl = GEOM_TOLERANCE_M / leg_len;
        let start_surface = if leg >= 1 { Some(seq.indices()[leg - 1]) } else { None };
        let end_surface = if leg < n { Some(seq.indices()[leg]) } else { None };
        for (si, surface) in env.surfaces().iter().enumerate() {
            match segment_crossing(a, b, surface.a, surface.b) {
                SegCross::None => {}
                SegCross::Overlap => return Ok(Visibility::Blocked),
                SegCross::At { t, .. } => {
                    if start_surface == Some(si) && t <= t_excl {
                        continue;
                    }
                    if end_surface == Some(si) && t >= 1.0 - t_excl {
                        continue;
                    }
                    return Ok(Visibility::Blocked);
                }
            }
        }
    }

    Ok(Visibility::Visible { reflection_points })
}

/// Filters all candidate sequences of a link through the visibility trace.
pub fn visible_set(link: &Link, env: &Environment, max_order: usize) -> Result<VisibleSet> {
    let mut mpcs = Vec::new();
    for seq in enumerate_sequences(env, max_order) {
        if let Visibility::Visible { reflection_points } = trace_visibility(link, &seq, env)? {
            let geometry = build_path_geometry(link, &seq, env)?;
            mpcs.push(VisibleMpc { sequence: seq, geometry, reflection_points });
        }
    }
    Ok(VisibleSet { link: *link, mpcs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn surface(id: &str, a: (f64, f64), b: (f64, f64)) -> Surface {
        Surface::new(id, Point::new(a.0, a.1), Point::new(b.0, b.1)).unwrap()
    }

    fn link(tx: (f64, f64), rx: (f64, f64)) -> Link {
        Link::new(0, 0, 1, Point::new(tx.0, tx.1), Point::new(rx.0, rx.1))
    }

    #[test]
    fn mirror_across_x_axis() {
        let s = surface("s", (0.0, 0.0), (1.0, 0.0));
        let m = mirror_point(Point::new(2.0, 3.0), &s).unwrap();
        assert_relative_eq!(m.x, 2.0);
        assert_relative_eq!(m.y, -3.0);
    }

    #[test]
    fn mirror_fixes_points_on_the_line() {
        let s = surface("s", (0.0, 0.0), (1.0, 0.0));
        let m = mirror_point(Point::new(0.5, 0.0), &s).unwrap();
        assert_relative_eq!(m.x, 0.5);
        assert_relative_eq!(m.y, 0.0, epsilon = 1e-12);

        let diag = surface("d", (0.0, 0.0), (1.0, 1.0));
        let m = mirror_point(Point::new(1.0, 1.0), &diag).unwrap();
        assert_relative_eq!(m.x, 1.0);
        assert_relative_eq!(m.y, 1.0);
    }

    #[test]
    fn degenerate_surface_is_rejected() {
        let err = Surface::new("bad", Point::new(1.0, 1.0), Point::new(1.0, 1.0));
        assert!(matches!(err, Err(Error::DegenerateSurface { .. })));
    }

    #[test]
    fn enumeration_orders_and_excludes_repeats() {
        let env = Environment::new(vec![
            surface("s2", (0.0, 5.0), (1.0, 5.0)),
            surface("s1", (0.0, 0.0), (1.0, 0.0)),
        ])
        .unwrap();
        // ids sort to [s1, s2]
        let k1: Vec<_> = enumerate_sequences(&env, 1)
            .iter()
            .map(|s| s.indices().to_vec())
            .collect();
        assert_eq!(k1, vec![vec![], vec![0], vec![1]]);

        let k2: Vec<_> = enumerate_sequences(&env, 2)
            .iter()
            .map(|s| s.indices().to_vec())
            .collect();
        assert_eq!(
            k2,
            vec![vec![], vec![0], vec![1], vec![0, 1], vec![1, 0]]
        );
    }

    #[test]
    fn enumeration_of_empty_environment_is_los_only() {
        let env = Environment::empty();
        let seqs = enumerate_sequences(&env, 3);
        assert_eq!(seqs, vec![ReflectionSequence::los()]);
    }

    #[test]
    fn virtual_nodes_of_single_wall() {
        let env = Environment::new(vec![surface("w", (-10.0, 5.0), (10.0, 5.0))]).unwrap();
        let l = link((0.0, 0.0), (4.0, 0.0));
        let seq = ReflectionSequence::new(vec![0]).unwrap();
        let pairs = build_virtual_nodes(&l, &seq, &env).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].vt, Point::new(0.0, 0.0));
        assert_eq!(pairs[0].vr, Point::new(4.0, 10.0));
        assert_eq!(pairs[1].vt, Point::new(0.0, 10.0));
        assert_eq!(pairs[1].vr, Point::new(4.0, 0.0));

        let d = path_length(&pairs).unwrap();
        assert_relative_eq!(d, (16.0f64 + 100.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn los_pair_is_the_physical_link() {
        let l = link((0.0, 0.0), (4.0, 0.0));
        let pairs = build_virtual_nodes(&l, &ReflectionSequence::los(), &Environment::empty()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_relative_eq!(path_length(&pairs).unwrap(), 4.0);

        let degenerate = link((1.0, 1.0), (1.0, 1.0));
        let pairs = build_virtual_nodes(&degenerate, &ReflectionSequence::los(), &Environment::empty()).unwrap();
        assert_relative_eq!(path_length(&pairs).unwrap(), 0.0);
    }

    #[test]
    fn path_length_rejects_inconsistent_pairs() {
        let pairs = vec![
            VirtualNodePair { vt: Point::new(0.0, 0.0), vr: Point::new(1.0, 0.0) },
            VirtualNodePair { vt: Point::new(0.0, 0.0), vr: Point::new(2.0, 0.0) },
        ];
        assert!(matches!(
            path_length(&pairs),
            Err(Error::InconsistentPairDistances { .. })
        ));
    }

    #[test]
    fn unknown_surface_index_errors() {
        let env = Environment::empty();
        let l = link((0.0, 0.0), (4.0, 0.0));
        let seq = ReflectionSequence::new(vec![0]).unwrap();
        assert!(matches!(
            build_virtual_nodes(&l, &seq, &env),
            Err(Error::UnknownSurface { .. })
        ));
    }

    #[test]
    fn trace_single_wall_visible_with_expected_reflection_point() {
        let env = Environment::new(vec![surface("w", (-10.0, 5.0), (10.0, 5.0))]).unwrap();
        let l = link((0.0, 0.0), (4.0, 0.0));
        let seq = ReflectionSequence::new(vec![0]).unwrap();
        match trace_visibility(&l, &seq, &env).unwrap() {
            Visibility::Visible { reflection_points } => {
                assert_eq!(reflection_points.len(), 1);
                assert_relative_eq!(reflection_points[0].x, 2.0, epsilon = 1e-12);
                assert_relative_eq!(reflection_points[0].y, 5.0, epsilon = 1e-12);
            }
            other => panic!("expected visible, got {other:?}"),
        }
    }

    #[test]
    fn trace_reflection_point_outside_segment() {
        let env = Environment::new(vec![surface("w", (5.0, 5.0), (10.0, 5.0))]).unwrap();
        let l = link((0.0, 0.0), (4.0, 0.0));
        let seq = ReflectionSequence::new(vec![0]).unwrap();
        assert_eq!(trace_visibility(&l, &seq, &env).unwrap(), Visibility::OffSegment);
    }

    #[test]
    fn trace_los_blocked_by_crossing_surface() {
        let env = Environment::new(vec![surface("w", (2.0, -1.0), (2.0, 1.0))]).unwrap();
        let l = link((0.0, 0.0), (4.0, 0.0));
        assert_eq!(
            trace_visibility(&l, &ReflectionSequence::los(), &env).unwrap(),
            Visibility::Blocked
        );
    }

    #[test]
    fn reflection_point_at_segment_endpoint_is_off_segment() {
        // Wall ends exactly at the mirror crossing x = 2.
        let env = Environment::new(vec![surface("w", (2.0, 5.0), (10.0, 5.0))]).unwrap();
        let l = link((0.0, 0.0), (4.0, 0.0));
        let seq = ReflectionSequence::new(vec![0]).unwrap();
        assert_eq!(trace_visibility(&l, &seq, &env).unwrap(), Visibility::OffSegment);
    }

    #[test]
    fn visible_set_of_empty_environment_is_los() {
        let l = link((0.0, 0.0), (4.0, 0.0));
        let vs = visible_set(&l, &Environment::empty(), 2).unwrap();
        assert_eq!(vs.mpcs.len(), 1);
        assert!(vs.mpcs[0].sequence.is_los());
        assert_relative_eq!(vs.path_lengths()[0], 4.0);
    }

    #[test]
    fn visible_set_one_parallel_wall() {
        let env = Environment::new(vec![surface("w", (-10.0, 5.0), (10.0, 5.0))]).unwrap();
        let l = link((0.0, 0.0), (4.0, 0.0));
        let vs = visible_set(&l, &env, 1).unwrap();
        let seqs: Vec<_> = vs.mpcs.iter().map(|m| m.sequence.indices().to_vec()).collect();
        assert_eq!(seqs, vec![vec![], vec![0]]);
    }

    /// Two-surface scene where exactly LoS, (s1) and (s1,s2) connect: the
    /// single bounce off s2 and the reversed double bounce both land outside
    /// the s2 segment.
    #[test]
    fn visible_set_two_surface_scene_has_three_components() {
        let env = Environment::new(vec![
            surface("s1", (-2.0, -3.0), (8.0, -3.0)),
            surface("s2", (9.0, -2.5), (9.0, -0.5)),
        ])
        .unwrap();
        let l = link((0.0, 0.0), (6.0, 0.0));
        let vs = visible_set(&l, &env, 2).unwrap();
        let seqs: Vec<_> = vs.mpcs.iter().map(|m| m.sequence.indices().to_vec()).collect();
        assert_eq!(seqs, vec![vec![], vec![0], vec![0, 1]]);

        // The double bounce reflects at (6,-3) on s1 and (9,-1.5) on s2.
        let double = &vs.mpcs[2];
        assert_relative_eq!(double.reflection_points[0].x, 6.0, epsilon = 1e-12);
        assert_relative_eq!(double.reflection_points[0].y, -3.0, epsilon = 1e-12);
        assert_relative_eq!(double.reflection_points[1].x, 9.0, epsilon = 1e-12);
        assert_relative_eq!(double.reflection_points[1].y, -1.5, epsilon = 1e-12);
    }

    #[test]
    fn excess_path_length_examples() {
        let pair = VirtualNodePair {
            vt: Point::new(0.0, 0.0),
            vr: Point::new(4.0, 0.0),
        };
        assert_relative_eq!(excess_path_length(&pair, Point::new(2.0, 0.0), 4.0), 0.0);
        assert_relative_eq!(
            excess_path_length(&pair, Point::new(2.0, 1.5), 4.0),
            1.0,
            epsilon = 1e-12
        );
        // r coincident with the transmitter of a LoS pair.
        assert_relative_eq!(excess_path_length(&pair, Point::new(0.0, 0.0), 4.0), 0.0);
    }

    fn arb_point() -> impl Strategy<Value = Point> {
        (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| Point::new(x, y))
    }

    fn arb_surface() -> impl Strategy<Value = Surface> {
        (arb_point(), arb_point())
            .prop_filter("endpoints distinct", |(a, b)| a.distance_to(*b) > 0.1)
            .prop_map(|(a, b)| Surface::new("s", a, b).unwrap())
    }

    proptest! {
        #[test]
        fn mirror_is_involutive(p in arb_point(), s in arb_surface()) {
            let m = mirror_point(p, &s).unwrap();
            let back = mirror_point(m, &s).unwrap();
            prop_assert!(back.distance_to(p) < 1e-9);
        }

        #[test]
        fn pairs_are_equidistant(
            tx in arb_point(),
            rx in arb_point(),
            surfs in prop::collection::vec(arb_surface(), 1..4),
            order in 1usize..4,
        ) {
            let surfaces: Vec<Surface> = surfs
                .into_iter()
                .enumerate()
                .map(|(i, s)| Surface::new(format!("s{i}"), s.a, s.b).unwrap())
                .collect();
            let n_surf = surfaces.len();
            let env = Environment::new(surfaces).unwrap();
            let indices: Vec<usize> = (0..order).map(|k| k % n_surf).collect();
            prop_assume!(indices.windows(2).all(|w| w[0] != w[1]));
            let seq = ReflectionSequence::new(indices).unwrap();
            let l = Link::new(0, 0, 1, tx, rx);
            let pairs = build_virtual_nodes(&l, &seq, &env).unwrap();
            let d: Vec<f64> = pairs.iter().map(|p| p.distance()).collect();
            let spread = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - d.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(spread < 1e-9);
        }

        #[test]
        fn tx_rx_symmetry(
            tx in arb_point(),
            rx in arb_point(),
            s0 in arb_surface(),
            s1 in arb_surface(),
        ) {
            let env = Environment::new(vec![
                Surface::new("a", s0.a, s0.b).unwrap(),
                Surface::new("b", s1.a, s1.b).unwrap(),
            ]).unwrap();
            let seq = ReflectionSequence::new(vec![0, 1]).unwrap();
            let l = Link::new(0, 0, 1, tx, rx);
            let fwd = build_path_geometry(&l, &seq, &env).unwrap();
            let bwd = build_path_geometry(&l.reversed(), &seq.reversed(), &env).unwrap();
            prop_assert!((fwd.length - bwd.length).abs() < 1e-9);

            let mut df: Vec<f64> = fwd.pairs.iter().map(|p| p.distance()).collect();
            let mut db: Vec<f64> = bwd.pairs.iter().map(|p| p.distance()).collect();
            df.sort_by(f64::total_cmp);
            db.sort_by(f64::total_cmp);
            for (a, b) in df.iter().zip(db.iter()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn excess_is_nonnegative(
            tx in arb_point(),
            rx in arb_point(),
            r in arb_point(),
            s in arb_surface(),
        ) {
            let env = Environment::new(vec![Surface::new("s", s.a, s.b).unwrap()]).unwrap();
            let l = Link::new(0, 0, 1, tx, rx);
            for seq in [ReflectionSequence::los(), ReflectionSequence::new(vec![0]).unwrap()] {
                let geom = build_path_geometry(&l, &seq, &env).unwrap();
                for pair in &geom.pairs {
                    prop_assert!(excess_path_length(pair, r, geom.length) >= -1e-9);
                }
            }
        }
    }
}
