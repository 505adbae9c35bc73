use serde::{Deserialize, Serialize};

use super::ToleranceBands;
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::manifold::{fmt_vec, ManifoldChart, Vector};
use crate::potential::PotentialSum;

/// Quantities of a reference trajectory that enter the certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    /// Maximum covariant acceleration norm along the reference.
    pub a: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub v0_norm: f64,
}

impl ReferenceSummary {
    /// Checks that `reference` stays outside every `B_R(p)` and records its
    /// largest covariant acceleration.
    pub fn from_trajectory(
        chart: &dyn ManifoldChart,
        reference: &Trajectory,
        centers: &[Vector],
        bands: &ToleranceBands,
        v0_norm: f64,
    ) -> Result<Self> {
        bands.validate()?;
        let mut a = 0.0f64;
        for (t, s) in reference.times.iter().zip(&reference.states) {
            for (i, p) in centers.iter().enumerate() {
                let d = chart.distance(p, &s.q)?;
                if !(d > bands.big_r) {
                    return Err(Error::Precondition(format!(
                        "reference trajectory leaves the safety region at t = {t}: distance {d} to center {i} {} is not above R = {}",
                        fmt_vec(p),
                        bands.big_r
                    )));
                }
            }
            a = a.max(chart.norm(&s.q, &s.a)?);
        }
        let summary = ReferenceSummary {
            a,
            horizon: reference.end_time() - reference.start_time(),
            v0_norm,
        };
        summary.validate()?;
        Ok(summary)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::validation(format!("acceleration bound must be non-negative, got {}", self.a)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::validation(format!("horizon T must be positive, got {}", self.horizon)));
        }
        if !(self.v0_norm.is_finite() && self.v0_norm >= 0.0) {
            return Err(Error::validation(format!("initial speed must be non-negative, got {}", self.v0_norm)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub a: f64,
    pub c: f64,
    pub v: f64,
    pub threshold: f64,
    #[serde(rename = "V_star_lower")]
    pub v_star_lower: f64,
    pub satisfied: bool,
    pub bands: ToleranceBands,
    #[serde(rename = "V_minus")]
    pub v_minus: f64,
}

impl Certificate {
    /// `V_star_lower / threshold`; infinite for a zero threshold.
    pub fn ratio(&self) -> f64 {
        if self.threshold > 0.0 {
            self.v_star_lower / self.threshold
        } else {
            f64::INFINITY
        }
    }
}

/// `(c, v, threshold)` from the reference constants.
pub fn certificate_chain(a: f64, v_minus: f64, horizon: f64, v0_norm: f64, bands: &ToleranceBands) -> (f64, f64, f64) {
    let c = (a * a + v_minus) * horizon;
    let ct = c * horizon;
    let v = ct.sqrt() + (ct + v0_norm * v0_norm).sqrt();
    let threshold = c * v / (2.0 * (bands.r_star - bands.r));
    (c, v, threshold)
}

/// Upper bound of the potential on the safety region.
fn safety_upper_bound(sum: &PotentialSum, bands: &ToleranceBands) -> f64 {
    sum.terms.iter().map(|t| t.profile(bands.big_r)).sum()
}

/// Lower bound of the potential on the risk ball around each center, minimised over centers.
///
/// On `B_{r*}(p_i)` each term satisfies `V_j ≥ profile_j(d(p_i, p_j) + r*)` since
/// the profile decreases radially.
fn risk_lower_bound(chart: &dyn ManifoldChart, sum: &PotentialSum, bands: &ToleranceBands) -> Result<f64> {
    let mut lower = f64::INFINITY;
    for p in &sum.terms {
        let mut total = 0.0;
        for q in &sum.terms {
            let d = chart.distance(&p.center, &q.center)?;
            total += q.profile(d + bands.r_star);
        }
        lower = lower.min(total);
    }
    Ok(lower)
}

fn evaluate(chart: &dyn ManifoldChart, summary: &ReferenceSummary, sum: &PotentialSum, bands: &ToleranceBands) -> Result<Certificate> {
    let v_minus = safety_upper_bound(sum, bands);
    let v_star_lower = risk_lower_bound(chart, sum, bands)?;
    let (c, v, threshold) = certificate_chain(summary.a, v_minus, summary.horizon, summary.v0_norm, bands);
    Ok(Certificate {
        a: summary.a,
        c,
        v,
        threshold,
        v_star_lower,
        satisfied: v_star_lower > threshold,
        bands: *bands,
        v_minus,
    })
}

/// Avoidance certificate of `sum` for the obstacles at its term centers.
///
/// The certificate speaks about minimisers of the action; it says nothing
/// about the particular critical point a shooting run returns.
pub fn certify(
    chart: &dyn ManifoldChart,
    reference: &Trajectory,
    sum: &PotentialSum,
    bands: &ToleranceBands,
    v0_norm: f64,
    horizon: f64,
) -> Result<Certificate> {
    bands.validate()?;
    if sum.is_empty() {
        return Err(Error::validation("certificate needs at least one potential term"));
    }
    sum.validate(chart.dim(), None)?;
    let centers: Vec<Vector> = sum.terms.iter().map(|t| t.center.clone()).collect();
    let mut summary = ReferenceSummary::from_trajectory(chart, reference, &centers, bands, v0_norm)?;
    summary.horizon = horizon;
    summary.validate()?;
    evaluate(chart, &summary, sum, bands)
}

/// Search grid; `k` is scanned first, then `τ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParameterGrid {
    pub ks: Vec<u32>,
    pub taus: Vec<f64>,
    /// Required relative excess of `V_star_lower` over the threshold.
    pub margin: f64,
}

impl Default for ParameterGrid {
    fn default() -> Self {
        let mut taus = Vec::new();
        for m in 0..=6 {
            for base in [1.0, 2.0, 5.0] {
                taus.push(base * 10f64.powi(m));
            }
        }
        taus.truncate(taus.len() - 2);
        ParameterGrid {
            ks: (1..=32).collect(),
            taus,
            margin: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSelection {
    pub tau: f64,
    pub k: u32,
    pub certificate: Certificate,
}

/// Smallest grid parameters `(τ, k)` whose certificate holds with the grid margin.
///
/// Every center receives a bump of support `R`.
pub fn select_parameters(
    chart: &dyn ManifoldChart,
    bands: &ToleranceBands,
    h_sense: f64,
    summary: &ReferenceSummary,
    centers: &[Vector],
    grid: &ParameterGrid,
) -> Result<ParameterSelection> {
    bands.validate()?;
    summary.validate()?;
    if !(bands.big_r <= h_sense) {
        return Err(Error::validation(format!(
            "safety radius R = {} exceeds the sensing radius {h_sense}",
            bands.big_r
        )));
    }
    if centers.is_empty() {
        return Err(Error::validation("parameter selection needs at least one center"));
    }
    if grid.ks.is_empty() || grid.taus.is_empty() {
        return Err(Error::validation("parameter grid is empty"));
    }
    let mut last_threshold = f64::NAN;
    for &k in &grid.ks {
        for &tau in &grid.taus {
            let sum = super::build_avoidance_potential(centers, bands.big_r, tau, k)?;
            let cert = evaluate(chart, summary, &sum, bands)?;
            last_threshold = cert.threshold;
            if cert.satisfied && cert.v_star_lower >= (1.0 + grid.margin) * cert.threshold {
                return Ok(ParameterSelection { tau, k, certificate: cert });
            }
        }
    }
    Err(Error::Infeasible {
        threshold: last_threshold,
        reason: format!(
            "no (tau, k) in the grid ({} values of k up to {}, {} values of tau up to {}) certifies with a {}% margin",
            grid.ks.len(),
            grid.ks.iter().max().copied().unwrap_or(0),
            grid.taus.len(),
            grid.taus.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            grid.margin * 100.0
        ),
    })
}
