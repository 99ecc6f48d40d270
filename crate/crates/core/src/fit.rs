//! Single-exponential decay fits `v(t) = A exp(-t/tau)` by log-linear least
//! squares.

use crate::error::{Error, Result};

/// Samples below this fraction of the first value are left out of a fit.
pub const FIT_FLOOR: f64 = 1e-6;

/// Sampled decay series with strictly increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayCurve {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl DecayCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::Domain("decay curve contains non-finite entries".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("decay curve times must be strictly increasing".into()));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Leading samples up to (excluding) the first value `<= floor`.
    pub fn truncate_above(&self, floor: f64) -> DecayCurve {
        let n = self.values.iter().position(|&v| v <= floor).unwrap_or(self.values.len());
        DecayCurve {
            times: self.times[..n].to_vec(),
            values: self.values[..n].to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    /// Decay constant (s).
    pub tau: f64,
    pub amplitude: f64,
    /// Root-mean-square residual of the model over the fitted samples.
    pub residual_rms: f64,
    /// Number of samples that entered the fit.
    pub n_used: usize,
}

/// Fits `A exp(-t/tau)`, holding `A` at `amplitude_fixed` when given.
///
/// Every sample must be strictly positive; samples below [`FIT_FLOOR`] times
/// the first value are excluded. A curve that does not decay is an error.
pub fn fit_exponential(curve: &DecayCurve, amplitude_fixed: Option<f64>) -> Result<FitResult> {
    if let Some(k) = curve.values.iter().position(|&v| v <= 0.0) {
        return Err(Error::Fit(format!(
            "sample {k} (t = {:e}) is {:e}; log-linear fitting needs positive values, \
             truncate the curve above a floor first (e.g. DecayCurve::truncate_above)",
            curve.times[k], curve.values[k]
        )));
    }
    if let Some(a) = amplitude_fixed {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Fit(format!("fixed amplitude must be positive, got {a}")));
        }
    }
    let v0 = *curve.values.first().ok_or_else(|| Error::Fit("empty curve".into()))?;
    let cut = FIT_FLOOR * v0;
    let (ts, logs): (Vec<f64>, Vec<f64>) = curve
        .times
        .iter()
        .zip(&curve.values)
        .filter(|(_, &v)| v >= cut)
        .map(|(&t, &v)| (t, v.ln()))
        .unzip();
    let n = ts.len();
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 samples above the floor, have {n}")));
    }
    let (slope, ln_a) = match amplitude_fixed {
        Some(a) => {
            let ln_a = a.ln();
            let stt: f64 = ts.iter().map(|t| t * t).sum();
            if stt == 0.0 {
                return Err(Error::Fit("all samples at t = 0".into()));
            }
            let sty: f64 = ts.iter().zip(&logs).map(|(t, y)| t * (y - ln_a)).sum();
            (sty / stt, ln_a)
        }
        None => {
            let nf = n as f64;
            let tm = ts.iter().sum::<f64>() / nf;
            let ym = logs.iter().sum::<f64>() / nf;
            let stt: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
            let sty: f64 = ts.iter().zip(&logs).map(|(t, y)| (t - tm) * (y - ym)).sum();
            let slope = sty / stt;
            (slope, ym - slope * tm)
        }
    };
    if !(slope < 0.0) {
        return Err(Error::Fit(format!("curve does not decay (log slope {slope:e})")));
    }
    let amplitude = ln_a.exp();
    let tau = -1.0 / slope;
    let residual_rms = (ts
        .iter()
        .zip(&curve.values)
        .filter(|(_, &v)| v >= cut)
        .map(|(&t, &v)| (v - amplitude * (-t / tau).exp()).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok(FitResult {
        tau,
        amplitude,
        residual_rms,
        n_used: n,
    })
}
