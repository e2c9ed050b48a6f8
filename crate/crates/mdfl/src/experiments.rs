//! Reference scenarios and evaluation drivers.
//!
//! Reproduces the bundled evaluation setups: circular transceiver networks,
//! a four-wall rectangular reference room, RMSE-bound heatmaps with
//! effective-area statistics, node-count sweeps over nested surface subsets,
//! the signal-level initialization/association run, and Monte-Carlo bound
//! validation with a maximum-likelihood grid estimator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::association::{associate, build_union, perfect_union, AssociationResult, MpcUnion};
use crate::channel::{derive_seed, idle_realization, initialize_link, EstimatorConfig, Pulse};
use crate::crlb::{
    expected_rmse, fisher_information, rmse_bound_grid, ExpectedRmse, GridResult, GridSpec,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{visible_set, Point, Surface};
use crate::measurement::{predict_vector, sample_vector, ShadowingParams};
use crate::scenario::{ChannelConfig, Scenario};

/// RMSE threshold defining the effective observation area, meters.
pub const EFFECTIVE_AREA_THRESHOLD_M: f64 = 1.0;

/// Places `n` nodes equally spaced on a circle, first node at angle zero,
/// counterclockwise.
pub fn make_circle_network(n: usize, radius: f64, center: Point) -> Result<Vec<Point>> {
    if n < 2 {
        return Err(Error::config("a network needs at least two nodes"));
    }
    if !(radius > 0.0) {
        return Err(Error::config("network radius must be positive"));
    }
    Ok((0..n)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n as f64;
            Point::new(center.x + radius * angle.cos(), center.y + radius * angle.sin())
        })
        .collect())
}

/// Reference room: a 23 m x 15.5 m rectangle of four reflecting walls with a
/// 20-node, 4 m-radius circular transceiver network at its center.
///
/// First-order reflections only, the reference shadowing parameters, a 0.1 m
/// evaluation grid spanning the room, and an undirected full mesh (190
/// links). Wall coordinates are recorded explicitly in the emitted file so
/// results stay reproducible.
pub fn make_paper_room() -> Result<Scenario> {
    let half_w = 23.0 / 2.0;
    let half_h = 15.5 / 2.0;
    let surfaces = vec![
        Surface::new("s1", Point::new(-half_w, -half_h), Point::new(half_w, -half_h))?,
        Surface::new("s2", Point::new(half_w, -half_h), Point::new(half_w, half_h))?,
        Surface::new("s3", Point::new(-half_w, half_h), Point::new(half_w, half_h))?,
        Surface::new("s4", Point::new(-half_w, -half_h), Point::new(-half_w, half_h))?,
    ];
    let nodes = make_circle_network(20, 4.0, Point::new(0.0, 0.0))?;
    let grid = GridSpec::new(-half_w, half_w, -half_h, half_h, 0.1)?;
    Scenario::assemble(
        20260,
        1,
        ShadowingParams::reference(),
        grid,
        ChannelConfig::default(),
        surfaces,
        nodes,
        false,
    )
}

/// Which sequences enter the measurement union.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    /// Direct paths only.
    Dfl,
    /// Direct paths plus visible reflections up to the scenario order.
    Mdfl,
}

impl MapMode {
    pub fn label(&self) -> &'static str {
        match self {
            MapMode::Dfl => "dfl",
            MapMode::Mdfl => "mdfl",
        }
    }
}

/// Builds the measurement union of a scenario under perfect association.
pub fn scenario_union(scenario: &Scenario, mode: MapMode) -> Result<MpcUnion> {
    perfect_union(
        &scenario.links,
        &scenario.environment,
        scenario.max_order,
        &scenario.params,
        mode == MapMode::Dfl,
    )
}

/// RMSE-bound heatmap plus the effective-area statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct CrlbMap {
    pub mode: MapMode,
    pub result: GridResult,
    /// Fraction of grid points with bound < 1 m.
    pub effective_fraction: f64,
}

/// Evaluates the RMSE bound over the scenario grid.
pub fn run_crlb_map(scenario: &Scenario, mode: MapMode) -> Result<CrlbMap> {
    let union = scenario_union(scenario, mode)?;
    let result = rmse_bound_grid(&scenario.grid, &union)?;
    let effective_fraction = result.effective_fraction(EFFECTIVE_AREA_THRESHOLD_M);
    Ok(CrlbMap { mode, result, effective_fraction })
}

/// One row of a node-count sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub nodes: usize,
    pub surfaces: usize,
    pub expected: ExpectedRmse,
}

/// Expected RMSE per node count and nested surface subset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn get(&self, nodes: usize, surfaces: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.nodes == nodes && r.surfaces == surfaces)
    }
}

/// Region used for expected-RMSE statistics: a centered square of the given
/// side length, sampled at the centers of `step`-sized cells.
///
/// Midpoint sampling keeps sample points off the region's symmetry lines;
/// grid points exactly on a propagation path carry no gradient information
/// from it, so sampling on such lines would skew the area statistic.
pub fn central_region(center: Point, side_m: f64, step: f64) -> Result<GridSpec> {
    let half = side_m / 2.0 - step / 2.0;
    if half < 0.0 {
        return Err(Error::config("region smaller than one sampling cell"));
    }
    GridSpec::new(
        center.x - half,
        center.x + half,
        center.y - half,
        center.y + half,
        step,
    )
}

/// Recomputes the expected RMSE over `region` for every node count and every
/// nested surface prefix (0 up to all surfaces of the scenario).
///
/// Node positions are regenerated as circles matching the base scenario's
/// network (center and mean radius of its nodes).
pub fn run_node_sweep(
    scenario: &Scenario,
    node_counts: &[usize],
    region: &GridSpec,
) -> Result<SweepResult> {
    if node_counts.iter().any(|&n| n < 3) {
        return Err(Error::config("node sweep needs at least 3 nodes per count"));
    }
    let center = node_centroid(&scenario.nodes)?;
    let radius = mean_radius(&scenario.nodes, center)?;
    let n_surfaces = scenario.environment.len();

    let mut combos = Vec::new();
    for &n in node_counts {
        for s in 0..=n_surfaces {
            combos.push((n, s));
        }
    }
    let rows: Vec<Result<SweepRow>> = exec::map_slice(&combos, |&(n, s)| {
        let nodes = make_circle_network(n, radius, center)?;
        let sc = scenario.with_nodes(nodes)?.with_surface_prefix(s)?;
        let union = scenario_union(&sc, MapMode::Mdfl)?;
        let expected = expected_rmse(region, &union)?;
        Ok(SweepRow { nodes: n, surfaces: s, expected })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

fn node_centroid(nodes: &[Point]) -> Result<Point> {
    if nodes.is_empty() {
        return Err(Error::config("scenario has no nodes"));
    }
    let n = nodes.len() as f64;
    Ok(Point::new(
        nodes.iter().map(|p| p.x).sum::<f64>() / n,
        nodes.iter().map(|p| p.y).sum::<f64>() / n,
    ))
}

fn mean_radius(nodes: &[Point], center: Point) -> Result<f64> {
    let n = nodes.len() as f64;
    let r = nodes.iter().map(|p| p.distance_to(center)).sum::<f64>() / n;
    if !(r > 0.0) {
        return Err(Error::config("nodes are collocated; cannot infer a radius"));
    }
    Ok(r)
}

/// Writes sweep rows as CSV: `nodes,surfaces,expected_rmse_m,singular_points`.
pub fn write_sweep_csv<W: std::io::Write>(out: &mut W, sweep: &SweepResult) -> std::io::Result<()> {
    writeln!(out, "nodes,surfaces,expected_rmse_m,singular_points")?;
    for row in &sweep.rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.nodes, row.surfaces, row.expected.mean_m, row.expected.singular_points
        )?;
    }
    Ok(())
}

/// Signal-level initialization and association of one scenario.
#[derive(Debug, Clone)]
pub struct LinkAssociation {
    pub link_index: usize,
    /// Expected path lengths in enumeration order, meters.
    pub expected_m: Vec<f64>,
    /// Sequence labels matching `expected_m`.
    pub sequence_labels: Vec<String>,
    /// Estimated path lengths, ascending, meters.
    pub estimated_m: Vec<f64>,
    pub result: AssociationResult,
}

/// Runs idle-channel initialization and association on every link.
///
/// Per link: synthesize the idle channel from the visible geometry, average
/// matched-filter estimates over the initialization snapshots, then match the
/// estimated path lengths against the expected ones under the configured
/// cut-off.
pub fn run_association(scenario: &Scenario, seed: u64) -> Result<Vec<LinkAssociation>> {
    let cfg = &scenario.channel;
    let pulse = Pulse::root_raised_cosine(
        cfg.bandwidth_hz,
        cfg.rolloff,
        cfg.sample_rate_hz,
        cfg.symbol_duration_s,
    )?;
    let est_cfg = EstimatorConfig {
        max_components: cfg.max_components,
        detection_margin_db: cfg.detection_margin_db,
        ..EstimatorConfig::for_pulse(&pulse)
    };
    let cutoff = cfg.cutoff_m();

    let outputs: Vec<Result<LinkAssociation>> = exec::map_slice(&scenario.links, |link| {
        let vs = visible_set(link, &scenario.environment, scenario.max_order)?;
        let expected = vs.path_lengths();
        let labels: Vec<String> = vs
            .mpcs
            .iter()
            .map(|m| m.sequence.display(&scenario.environment))
            .collect();
        let realization = idle_realization(
            link,
            &scenario.environment,
            scenario.max_order,
            cfg.noise_variance,
            cfg.reflection_coeff,
            seed,
        )?;
        let stats = initialize_link(
            link.index,
            &realization,
            &pulse,
            cfg.t_ini_s,
            cfg.t_g_s,
            &est_cfg,
            seed,
        )?;
        let estimated = stats.path_lengths();
        let result = associate(&expected, &estimated, cutoff)?;
        Ok(LinkAssociation {
            link_index: link.index,
            expected_m: expected,
            sequence_labels: labels,
            estimated_m: estimated,
            result,
        })
    });
    outputs.into_iter().collect()
}

/// Writes the association report as CSV:
/// `link,sequence,expected_m,estimated_m,residual_m,matched`.
pub fn write_association_csv<W: std::io::Write>(
    out: &mut W,
    report: &[LinkAssociation],
) -> std::io::Result<()> {
    writeln!(out, "link,sequence,expected_m,estimated_m,residual_m,matched")?;
    for la in report {
        for &(ei, qi) in &la.result.pairs {
            writeln!(
                out,
                "{},{},{},{},{},1",
                la.link_index,
                la.sequence_labels[ei],
                la.expected_m[ei],
                la.estimated_m[qi],
                (la.expected_m[ei] - la.estimated_m[qi]).abs()
            )?;
        }
        for &ei in &la.result.unmatched_expected {
            writeln!(out, "{},{},{},,,0", la.link_index, la.sequence_labels[ei], la.expected_m[ei])?;
        }
        for &qi in &la.result.unmatched_estimated {
            writeln!(out, "{},,,{},,0", la.link_index, la.estimated_m[qi])?;
        }
    }
    Ok(())
}

/// Union built from a signal-level association run.
pub fn associated_union(scenario: &Scenario, report: &[LinkAssociation]) -> Result<MpcUnion> {
    let mut per_link = Vec::new();
    let mut sets = Vec::new();
    for la in report {
        let link = scenario
            .links
            .iter()
            .find(|l| l.index == la.link_index)
            .ok_or_else(|| Error::config("association report references unknown link"))?;
        sets.push((visible_set(link, &scenario.environment, scenario.max_order)?, la));
    }
    for (vs, la) in &sets {
        per_link.push((vs, &la.result));
    }
    let pairs: Vec<(&crate::geometry::VisibleSet, &AssociationResult)> =
        per_link.iter().map(|(vs, r)| (*vs, *r)).collect();
    Ok(build_union(&pairs, &scenario.params))
}

/// Maximum-likelihood grid estimator used for bound validation.
///
/// Coarse grid search over a window around the search center followed by a
/// few rounds of coordinate-wise golden-section refinement. Estimates are
/// clamped to the window.
#[derive(Debug, Clone, Copy)]
pub struct MlGridSearch {
    /// Half-width of the square search window, meters.
    pub window_half_m: f64,
    /// Coarse grid step, meters.
    pub coarse_step_m: f64,
    /// Coordinate-descent rounds of golden-section refinement.
    pub refine_rounds: usize,
}

impl Default for MlGridSearch {
    fn default() -> Self {
        MlGridSearch { window_half_m: 1.0, coarse_step_m: 0.1, refine_rounds: 2 }
    }
}

struct PreparedSearch {
    points: Vec<Point>,
    /// Model prediction per point, laid out `point * n_entries + entry`.
    predictions: Vec<f64>,
    inv_variances: Vec<f64>,
    window: GridSpec,
}

impl MlGridSearch {
    fn prepare(&self, center: Point, union: &MpcUnion) -> Result<PreparedSearch> {
        let window = GridSpec::new(
            center.x - self.window_half_m,
            center.x + self.window_half_m,
            center.y - self.window_half_m,
            center.y + self.window_half_m,
            self.coarse_step_m,
        )?;
        let points = window.points();
        let n_entries = union.len();
        let mut predictions = Vec::with_capacity(points.len() * n_entries);
        for &p in &points {
            let (z, _) = predict_vector(p, union)?;
            predictions.extend_from_slice(&z);
        }
        let inv_variances = union.noise_variances().iter().map(|v| 1.0 / v).collect();
        Ok(PreparedSearch { points, predictions, inv_variances, window })
    }
}

fn weighted_misfit(z: &[f64], prediction: &[f64], inv_var: &[f64]) -> f64 {
    z.iter()
        .zip(prediction)
        .zip(inv_var)
        .map(|((&zi, &hi), &wi)| {
            let d = zi - hi;
            wi * d * d
        })
        .sum()
}

fn golden_min_1d(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn ml_estimate(prepared: &PreparedSearch, union: &MpcUnion, search: &MlGridSearch, z: &[f64]) -> Point {
    let n_entries = union.len();
    let mut best = 0usize;
    let mut best_q = f64::INFINITY;
    for (idx, _) in prepared.points.iter().enumerate() {
        let pred = &prepared.predictions[idx * n_entries..(idx + 1) * n_entries];
        let q = weighted_misfit(z, pred, &prepared.inv_variances);
        if q < best_q {
            best_q = q;
            best = idx;
        }
    }
    let mut r = prepared.points[best];
    let w = &prepared.window;
    let step = search.coarse_step_m;
    let objective = |p: Point| {
        let (pred, _) = predict_vector(p, union).expect("non-empty union");
        weighted_misfit(z, &pred, &prepared.inv_variances)
    };
    for _ in 0..search.refine_rounds {
        let lo = (r.x - step).max(w.x_min);
        let hi = (r.x + step).min(w.x_max);
        r.x = golden_min_1d(|x| objective(Point::new(x, r.y)), lo, hi, 20);
        let lo = (r.y - step).max(w.y_min);
        let hi = (r.y + step).min(w.y_max);
        r.y = golden_min_1d(|y| objective(Point::new(r.x, y)), lo, hi, 20);
    }
    r
}

/// Empirical estimator accuracy versus the bound at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionValidation {
    pub position: Point,
    pub trials: usize,
    pub empirical_rmse_m: f64,
    /// Monte-Carlo standard error of the empirical RMSE.
    pub standard_error_m: f64,
    pub bound_m: f64,
}

/// Monte-Carlo validation of the RMSE bound.
///
/// At each true position, draws noisy measurement vectors from the model,
/// estimates the position with the maximum-likelihood grid search, and
/// reports the empirical RMSE next to the bound. The search window is
/// centered on the true position; estimates are clamped inside it.
pub fn run_monte_carlo_validation(
    scenario: &Scenario,
    positions: &[Point],
    trials: usize,
    seed: u64,
    search: &MlGridSearch,
) -> Result<Vec<PositionValidation>> {
    if trials < 100 {
        return Err(Error::config("Monte-Carlo validation needs at least 100 trials"));
    }
    let union = scenario_union(scenario, MapMode::Mdfl)?;
    let mut out = Vec::with_capacity(positions.len());
    for (pi, &position) in positions.iter().enumerate() {
        let bound = fisher_information(position, &union)?.rmse_bound;
        let prepared = search.prepare(position, &union)?;
        let sq_errors: Vec<Result<f64>> = exec::map_range(trials, |trial| {
            let trial_seed = derive_seed(seed, 0x4d43 ^ pi as u64, trial as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
            let z = sample_vector(position, &union, &mut rng)?;
            let estimate = ml_estimate(&prepared, &union, search, &z);
            Ok(estimate.distance_to(position).powi(2))
        });
        let sq_errors = sq_errors.into_iter().collect::<Result<Vec<f64>>>()?;
        let n = sq_errors.len() as f64;
        let mean_sq = sq_errors.iter().sum::<f64>() / n;
        let rmse = mean_sq.sqrt();
        let var_sq =
            sq_errors.iter().map(|e| (e - mean_sq).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let se_mean_sq = (var_sq / n).sqrt();
        let standard_error = if rmse > 0.0 { se_mean_sq / (2.0 * rmse) } else { 0.0 };
        out.push(PositionValidation {
            position,
            trials,
            empirical_rmse_m: rmse,
            standard_error_m: standard_error,
            bound_m: bound,
        });
    }
    Ok(out)
}

/// Writes Monte-Carlo validation rows as CSV.
pub fn write_validation_csv<W: std::io::Write>(
    out: &mut W,
    rows: &[PositionValidation],
) -> std::io::Result<()> {
    writeln!(out, "x_m,y_m,trials,empirical_rmse_m,standard_error_m,crlb_bound_m")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.position.x, r.position.y, r.trials, r.empirical_rmse_m, r.standard_error_m, r.bound_m
        )?;
    }
    Ok(())
}
