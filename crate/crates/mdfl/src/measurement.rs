//! User-impact measurement model.
//!
//! During operation, the amplitude of every associated multipath component is
//! re-estimated by projecting the residual signal onto the unit pulse at the
//! component's mean delay; the measured quantity is the dB power change
//! relative to the idle channel. The model predicts that change with an
//! exponential decay in the excess path length, superimposed over all virtual
//! node pairs of the component's sequence: a user close to any leg of the
//! physical path attenuates the component, with maximum change `phi_db` and
//! decay length `kappa_m`, observed through Gaussian noise of deviation
//! `sigma_db`.

use num_complex::Complex64;
use rand::Rng;

use crate::association::MpcUnion;
use crate::channel::Pulse;
use crate::error::{Error, Result};
use crate::geometry::{excess_path_length, PathGeometry, Point};

/// Saturation floor for measured power changes, dB.
///
/// Keeps vanished components representable in measurement vectors.
pub const POWER_CHANGE_FLOOR_DB: f64 = -60.0;

/// Exponential shadowing-model parameters of one component.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShadowingParams {
    /// Maximum modeled change in power, dB (negative: attenuation).
    pub phi_db: f64,
    /// Decay rate of the impact over excess path length, meters.
    pub kappa_m: f64,
    /// Measurement noise standard deviation, dB.
    pub sigma_db: f64,
}

impl ShadowingParams {
    pub fn new(phi_db: f64, kappa_m: f64, sigma_db: f64) -> Result<Self> {
        if !(kappa_m > 0.0) {
            return Err(Error::config("shadowing decay rate must be positive"));
        }
        if !(sigma_db > 0.0) {
            return Err(Error::config("measurement noise deviation must be positive"));
        }
        Ok(ShadowingParams { phi_db, kappa_m, sigma_db })
    }

    /// Reference parameter set used throughout the bundled scenarios.
    pub fn reference() -> Self {
        ShadowingParams { phi_db: -2.5, kappa_m: 0.05, sigma_db: 1.5 }
    }
}

/// Diagonal measurement noise covariance, dB^2 entries in union order.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariance {
    diag: Vec<f64>,
}

impl NoiseCovariance {
    pub fn from_variances(diag: Vec<f64>) -> Result<Self> {
        if diag.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::config("noise covariance entries must be positive"));
        }
        Ok(NoiseCovariance { diag })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn variances(&self) -> &[f64] {
        &self.diag
    }
}

/// Successive amplitude projections at known delays.
///
/// The residual for component `n` is the signal minus the reconstructed
/// components `1..n-1`, cancelled in ascending delay order; the amplitude is
/// the inner product of that residual with the unit pulse at the component's
/// delay. Delays must be provided sorted ascending. Channel initialization
/// uses the same recursion for the idle references.
pub fn project_amplitudes(
    signal: &[Complex64],
    pulse: &Pulse,
    delays_s: &[f64],
) -> Result<Vec<Complex64>> {
    crate::channel::successive_projection(signal, pulse, delays_s)
}

/// Amplitude of the `n`-th component (0-based) from the projection recursion.
pub fn project_amplitude(
    signal: &[Complex64],
    pulse: &Pulse,
    delays_s: &[f64],
    n: usize,
) -> Result<Complex64> {
    if n >= delays_s.len() {
        return Err(Error::config(format!(
            "component index {n} out of range for {} delays",
            delays_s.len()
        )));
    }
    Ok(project_amplitudes(signal, pulse, &delays_s[..=n])?[n])
}

/// Measured power change of a component relative to its idle mean, dB.
///
/// Saturates at [`POWER_CHANGE_FLOOR_DB`] when the measured amplitude
/// vanishes; a zero reference amplitude is an error (the component must be
/// dropped upstream).
pub fn power_change_db(measured: Complex64, reference: Complex64) -> Result<f64> {
    let reference = reference.norm();
    if reference == 0.0 {
        return Err(Error::ZeroReferenceAmplitude);
    }
    let measured = measured.norm();
    if measured == 0.0 {
        return Ok(POWER_CHANGE_FLOOR_DB);
    }
    Ok((20.0 * (measured / reference).log10()).max(POWER_CHANGE_FLOOR_DB))
}

/// Modeled user-induced power change of one component, dB.
///
/// Sums the exponential impact over every virtual node pair of the sequence:
/// `sum_u phi * exp(-delta_u(r) / kappa)` with `delta_u` the excess path
/// length of pair `u`. Strictly negative for `phi < 0` and vanishing as the
/// user recedes from every leg of the path.
pub fn user_impact_db(r: Point, geometry: &PathGeometry, params: &ShadowingParams) -> f64 {
    geometry
        .pairs
        .iter()
        .map(|pair| {
            let delta = excess_path_length(pair, r, geometry.length).max(0.0);
            params.phi_db * (-delta / params.kappa_m).exp()
        })
        .sum()
}

/// Stacks the model prediction over the union into a measurement vector and
/// the matching diagonal noise covariance.
pub fn predict_vector(r: Point, union: &MpcUnion) -> Result<(Vec<f64>, NoiseCovariance)> {
    if union.is_empty() {
        return Err(Error::EmptyUnion);
    }
    let values = union
        .entries
        .iter()
        .map(|e| user_impact_db(r, &e.geometry, &e.params))
        .collect();
    let cov = NoiseCovariance::from_variances(union.noise_variances())?;
    Ok((values, cov))
}

/// Draws one noisy measurement vector from the model at user location `r`.
pub fn sample_vector<R: Rng>(r: Point, union: &MpcUnion, rng: &mut R) -> Result<Vec<f64>> {
    let (mean, cov) = predict_vector(r, union)?;
    let noisy = mean
        .iter()
        .zip(cov.variances())
        .map(|(&m, &v)| {
            let std = v.sqrt();
            let draw: f64 = rand_distr::Distribution::sample(
                &rand_distr::StandardNormal,
                rng,
            );
            m + std * draw
        })
        .collect();
    Ok(noisy)
}
