//! Fisher information and RMSE lower bounds for location estimation.
//!
//! With a Gaussian dB-domain measurement model, the Fisher information at a
//! query location is `J^T R^-1 J` where each Jacobian row is the analytic
//! gradient of one component's modeled power change. The environment is
//! planar, so the information matrix is 2x2 and the positioning RMSE of any
//! unbiased estimator is bounded below by `sqrt(trace(F^-1))`.
//!
//! Grid evaluation is a pure map over query points: it runs in parallel with
//! the `parallel` feature and the result order is the grid order either way.

use crate::association::MpcUnion;
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{excess_path_length, PathGeometry, Point, GEOM_TOLERANCE_M};
use crate::measurement::ShadowingParams;

/// Condition number above which the information matrix counts as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Fisher information and bound at one query location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimResult {
    pub r: Point,
    /// Symmetric 2x2 information matrix `[[xx, xy], [xy, yy]]`, 1/m^2.
    pub fim: [[f64; 2]; 2],
    /// `trace(F^-1)`, m^2; `None` when the matrix is singular.
    pub crlb_trace: Option<f64>,
    /// RMSE lower bound, meters; infinite when singular.
    pub rmse_bound: f64,
}

impl FimResult {
    fn singular(r: Point, fim: [[f64; 2]; 2]) -> Self {
        FimResult { r, fim, crlb_trace: None, rmse_bound: f64::INFINITY }
    }
}

/// Analytic gradient of one component's modeled power change, dB/m.
///
/// For each virtual node pair the gradient direction is the sum of the unit
/// vectors from the query point toward the pair's nodes, scaled by
/// `phi/kappa * exp(-delta/kappa)`. Matches central finite differences of the
/// model; undefined when the query point coincides with a virtual node.
pub fn jacobian_row(
    r: Point,
    geometry: &PathGeometry,
    params: &ShadowingParams,
) -> Result<[f64; 2]> {
    let mut gx = 0.0;
    let mut gy = 0.0;
    let scale = params.phi_db / params.kappa_m;
    for pair in &geometry.pairs {
        let dvt_x = pair.vt.x - r.x;
        let dvt_y = pair.vt.y - r.y;
        let dvr_x = pair.vr.x - r.x;
        let dvr_y = pair.vr.y - r.y;
        let nt = dvt_x.hypot(dvt_y);
        let nr = dvr_x.hypot(dvr_y);
        if nt <= GEOM_TOLERANCE_M || nr <= GEOM_TOLERANCE_M {
            return Err(Error::SingularGradient);
        }
        let delta = excess_path_length(pair, r, geometry.length).max(0.0);
        let weight = scale * (-delta / params.kappa_m).exp();
        gx += weight * (dvt_x / nt + dvr_x / nr);
        gy += weight * (dvt_y / nt + dvr_y / nr);
    }
    Ok([gx, gy])
}

/// Fisher information matrix and RMSE bound at a query location.
///
/// Accumulates `g g^T / sigma^2` over the union entries, so the matrix is
/// symmetric positive semidefinite by construction. Singular or
/// ill-conditioned information (condition number above [`CONDITION_LIMIT`]),
/// and query points coinciding with a virtual node, report an infinite bound.
pub fn fisher_information(r: Point, union: &MpcUnion) -> Result<FimResult> {
    if union.is_empty() {
        return Err(Error::EmptyUnion);
    }
    let mut fxx = 0.0;
    let mut fxy = 0.0;
    let mut fyy = 0.0;
    for entry in &union.entries {
        let g = match jacobian_row(r, &entry.geometry, &entry.params) {
            Ok(g) => g,
            Err(Error::SingularGradient) => {
                return Ok(FimResult::singular(r, [[f64::NAN; 2]; 2]));
            }
            Err(e) => return Err(e),
        };
        let inv_var = 1.0 / (entry.params.sigma_db * entry.params.sigma_db);
        fxx += inv_var * g[0] * g[0];
        fxy += inv_var * g[0] * g[1];
        fyy += inv_var * g[1] * g[1];
    }
    let fim = [[fxx, fxy], [fxy, fyy]];

    let det = fxx * fyy - fxy * fxy;
    let trace = fxx + fyy;
    // Eigenvalues of a symmetric 2x2; both are >= 0 up to rounding.
    let disc = ((fxx - fyy).powi(2) + 4.0 * fxy * fxy).sqrt();
    let lambda_max = 0.5 * (trace + disc);
    let lambda_min = 0.5 * (trace - disc);
    if !(det > 0.0) || lambda_min <= 0.0 || lambda_max / lambda_min > CONDITION_LIMIT {
        return Ok(FimResult::singular(r, fim));
    }
    let crlb_trace = trace / det;
    Ok(FimResult {
        r,
        fim,
        crlb_trace: Some(crlb_trace),
        rmse_bound: crlb_trace.sqrt(),
    })
}

/// Rectangular evaluation grid, inclusive bounds, row-major points.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Grid step, meters.
    pub step: f64,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || x_max < x_min || y_max < y_min {
            return Err(Error::config("invalid grid specification"));
        }
        Ok(GridSpec { x_min, x_max, y_min, y_max, step })
    }

    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn ny(&self) -> usize {
        ((self.y_max - self.y_min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Points in row-major order: y ascending outer, x ascending inner.
    pub fn points(&self) -> Vec<Point> {
        let nx = self.nx();
        let ny = self.ny();
        let mut out = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                out.push(Point::new(
                    self.x_min + ix as f64 * self.step,
                    self.y_min + iy as f64 * self.step,
                ));
            }
        }
        out
    }
}

/// RMSE bounds over a grid, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub grid: GridSpec,
    /// `rmse_bound` per point; infinite where singular.
    pub values: Vec<f64>,
}

impl GridResult {
    /// Fraction of grid points with a bound below `threshold_m`.
    pub fn effective_fraction(&self, threshold_m: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let hits = self.values.iter().filter(|&&v| v < threshold_m).count();
        hits as f64 / self.values.len() as f64
    }
}

/// Evaluates the RMSE bound at every grid point (parallel when enabled).
pub fn rmse_bound_grid(grid: &GridSpec, union: &MpcUnion) -> Result<GridResult> {
    if union.is_empty() {
        return Err(Error::EmptyUnion);
    }
    let points = grid.points();
    let values = exec::map_slice(&points, |&p| {
        fisher_information(p, union).map(|f| f.rmse_bound).unwrap_or(f64::INFINITY)
    });
    Ok(GridResult { grid: *grid, values })
}

/// Sequential reference implementation of [`rmse_bound_grid`].
///
/// Exists for the benchmark comparison and as the `parallel`-off fallback;
/// output is bit-identical to the parallel path.
pub fn rmse_bound_grid_seq(grid: &GridSpec, union: &MpcUnion) -> Result<GridResult> {
    if union.is_empty() {
        return Err(Error::EmptyUnion);
    }
    let values = grid
        .points()
        .iter()
        .map(|&p| fisher_information(p, union).map(|f| f.rmse_bound).unwrap_or(f64::INFINITY))
        .collect();
    Ok(GridResult { grid: *grid, values })
}

/// Mean RMSE bound over a sampled region, excluding singular points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedRmse {
    pub mean_m: f64,
    pub singular_points: usize,
    pub total_points: usize,
}

/// Averages the bound over the uniformly sampled region.
///
/// Singular points are excluded from the mean and reported separately; if
/// every point is singular the expectation is undefined.
pub fn expected_rmse(region: &GridSpec, union: &MpcUnion) -> Result<ExpectedRmse> {
    let result = rmse_bound_grid(region, union)?;
    let finite: Vec<f64> = result.values.iter().copied().filter(|v| v.is_finite()).collect();
    let total = result.values.len();
    if finite.is_empty() {
        return Err(Error::AllPointsSingular { points: total });
    }
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    Ok(ExpectedRmse {
        mean_m: mean,
        singular_points: total - finite.len(),
        total_points: total,
    })
}

/// Writes a grid as CSV: `x_m,y_m,rmse_m` with `inf` for singular points.
pub fn write_grid_csv<W: std::io::Write>(out: &mut W, result: &GridResult) -> std::io::Result<()> {
    writeln!(out, "x_m,y_m,rmse_m")?;
    for (p, v) in result.grid.points().iter().zip(&result.values) {
        writeln!(out, "{},{},{}", p.x, p.y, v)?;
    }
    Ok(())
}

/// Writes a grid as a binary (P5) PGM image.
///
/// Values are clamped to [0, 2] m and mapped linearly to gray levels with
/// white = 0 m and black = 2 m or worse (singular points are black). Image
/// rows run from `y_max` down to `y_min` so north is up.
pub fn write_grid_pgm<W: std::io::Write>(out: &mut W, result: &GridResult) -> std::io::Result<()> {
    const CLAMP_M: f64 = 2.0;
    let nx = result.grid.nx();
    let ny = result.grid.ny();
    writeln!(out, "P5")?;
    writeln!(out, "# rmse_m clamped to [0, {CLAMP_M}]; white = 0 m, black >= {CLAMP_M} m")?;
    writeln!(out, "{nx} {ny}")?;
    writeln!(out, "255")?;
    let mut row = Vec::with_capacity(nx);
    for iy in (0..ny).rev() {
        row.clear();
        for ix in 0..nx {
            let v = result.values[iy * nx + ix];
            let clamped = if v.is_finite() { v.clamp(0.0, CLAMP_M) } else { CLAMP_M };
            row.push(255 - (clamped / CLAMP_M * 255.0).round() as u8);
        }
        out.write_all(&row)?;
    }
    Ok(())
}
