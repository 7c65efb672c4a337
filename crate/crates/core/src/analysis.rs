//! Coupled-versus-decoupled comparison metrics and reports.

use crate::error::{AcmError, Result};
use crate::simulation::SimTrace;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Floor applied to denominators of relative quantities.
pub const EPS: f64 = 1e-12;

/// Per-step cost ratio reported for the reference implementation (32 ms / 22 ms).
pub const REFERENCE_COST_RATIO: f64 = 32.0 / 22.0;

/// Channel group compared by [`nrmse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channels {
    /// Tip position components.
    Translation,
    /// Tip rotation-vector components.
    Rotation,
}

fn rows(trace: &SimTrace, ch: Channels) -> &[Vector3<f64>] {
    match ch {
        Channels::Translation => &trace.tip_positions,
        Channels::Rotation => &trace.tip_rotvecs,
    }
}

fn check_aligned(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(AcmError::Misaligned(format!("lengths {} and {}", a.len(), b.len())));
    }
    if let Some(i) = a.iter().zip(b).position(|(x, y)| x != y) {
        return Err(AcmError::Misaligned(format!("timestamps differ at sample {i}: {} vs {}", a[i], b[i])));
    }
    Ok(())
}

/// NRMSE result plus the rows whose range degenerated.
#[derive(Debug, Clone, PartialEq)]
pub struct Nrmse {
    pub value: f64,
    /// Components whose union range was zero; their denominator was replaced by 1.
    pub degenerate_rows: Vec<usize>,
}

/// `sqrt( sum_i sum_k (Wc - Wd)^2 / sum_i sum_k (Wmax_i - Wmin_i)^2 )` over the three
/// components `i` of the channel group, with each row's range taken over the union
/// of both traces.
pub fn nrmse_detailed(c: &SimTrace, d: &SimTrace, ch: Channels) -> Result<Nrmse> {
    check_aligned(&c.times, &d.times)?;
    let (wc, wd) = (rows(c, ch), rows(d, ch));
    let mut num = 0.0;
    let mut den = 0.0;
    let mut degenerate_rows = Vec::new();
    for i in 0..3 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in wc.iter().chain(wd) {
            lo = lo.min(v[i]);
            hi = hi.max(v[i]);
        }
        let n = wc.len() as f64;
        let range = hi - lo;
        if range > 0.0 {
            den += n * range * range;
        } else {
            degenerate_rows.push(i);
            den += n;
        }
        num += wc.iter().zip(wd).map(|(a, b)| (a[i] - b[i]).powi(2)).sum::<f64>();
    }
    if wc.is_empty() {
        return Ok(Nrmse {
            value: 0.0,
            degenerate_rows,
        });
    }
    Ok(Nrmse {
        value: (num / den).sqrt(),
        degenerate_rows,
    })
}

/// NRMSE between the coupled and decoupled traces on one channel group.
pub fn nrmse(c: &SimTrace, d: &SimTrace, ch: Channels) -> Result<f64> {
    nrmse_detailed(c, d, ch).map(|r| r.value)
}

/// One closed-loop record reduced to what the DS metric needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub t: f64,
    /// Image-feature error norm [px].
    pub e_norm_px: f64,
}

/// `DS(t) = ||e||_coupled - ||e||_decoupled` in pixels.
pub fn ds_metric(c: &[ErrorSample], d: &[ErrorSample]) -> Result<Vec<(f64, f64)>> {
    let tc: Vec<f64> = c.iter().map(|s| s.t).collect();
    let td: Vec<f64> = d.iter().map(|s| s.t).collect();
    check_aligned(&tc, &td)?;
    Ok(c.iter().zip(d).map(|(a, b)| (a.t, a.e_norm_px - b.e_norm_px)).collect())
}

/// Median and 95th percentile of per-step wall time [s].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub median: f64,
    pub p95: f64,
    pub steps: usize,
}

impl StepStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(AcmError::Domain("no timed steps".into()));
        }
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(Self {
            median: percentile_sorted(&v, 0.5),
            p95: percentile_sorted(&v, 0.95),
            steps: v.len(),
        })
    }
}

/// Linear-interpolated percentile of sorted data.
fn percentile_sorted(v: &[f64], p: f64) -> f64 {
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Per-mode step-cost statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub coupled: Option<StepStats>,
    pub decoupled: Option<StepStats>,
    /// Coupled median over decoupled median.
    pub ratio: Option<f64>,
    pub reference_ratio: f64,
}

/// Step statistics from the timed (post-warm-up) steps of each trace.
pub fn timing_report(coupled: Option<&SimTrace>, decoupled: Option<&SimTrace>) -> Result<TimingReport> {
    timing_from_samples(coupled.map(SimTrace::timed_steps), decoupled.map(SimTrace::timed_steps))
}

pub fn timing_from_samples(coupled: Option<&[f64]>, decoupled: Option<&[f64]>) -> Result<TimingReport> {
    let c = coupled.map(StepStats::from_samples).transpose()?;
    let d = decoupled.map(StepStats::from_samples).transpose()?;
    let ratio = match (c, d) {
        (Some(c), Some(d)) => Some(c.median / d.median.max(EPS)),
        _ => None,
    };
    Ok(TimingReport {
        coupled: c,
        decoupled: d,
        ratio,
        reference_ratio: REFERENCE_COST_RATIO,
    })
}

/// `max_t |E(t) - E(0)| / max(|E(0)|, eps)`.
pub fn energy_audit(trace: &SimTrace) -> f64 {
    let e = trace.total_energy();
    match e.first() {
        None => 0.0,
        Some(&e0) => e.iter().map(|v| (v - e0).abs()).fold(0.0, f64::max) / e0.abs().max(EPS),
    }
}

/// Coupled-versus-decoupled summary of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub nrmse_t: Option<f64>,
    pub nrmse_r: Option<f64>,
    pub ds_series: Option<Vec<(f64, f64)>>,
    pub timing: TimingReport,
    pub energy_drift_coupled: Option<f64>,
    pub energy_drift_decoupled: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ComparisonReport {
    /// Metrics of one open-loop run; fields needing both modes stay `None` for single-mode runs.
    pub fn from_traces(scenario: &str, c: Option<&SimTrace>, d: Option<&SimTrace>) -> Result<Self> {
        let mut warnings = Vec::new();
        let (nrmse_t, nrmse_r) = match (c, d) {
            (Some(c), Some(d)) => {
                let t = nrmse_detailed(c, d, Channels::Translation)?;
                let r = nrmse_detailed(c, d, Channels::Rotation)?;
                for (name, n) in [("translation", &t), ("rotation", &r)] {
                    if !n.degenerate_rows.is_empty() {
                        warnings.push(format!(
                            "{name}: constant rows {:?}; denominator replaced by 1",
                            n.degenerate_rows
                        ));
                    }
                }
                (Some(t.value), Some(r.value))
            }
            _ => (None, None),
        };
        let non_empty = |t: &SimTrace| t.len() > 1;
        Ok(Self {
            scenario: scenario.to_string(),
            nrmse_t,
            nrmse_r,
            ds_series: None,
            timing: timing_report(c.filter(|t| non_empty(t)), d.filter(|t| non_empty(t)))?,
            energy_drift_coupled: c.map(energy_audit),
            energy_drift_decoupled: d.map(energy_audit),
            warnings,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned two-column text rendering.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
        let mut rows: Vec<(String, String)> = vec![
            ("scenario".into(), self.scenario.clone()),
            ("nrmse_T".into(), opt(self.nrmse_t)),
            ("nrmse_R".into(), opt(self.nrmse_r)),
            ("energy_drift coupled".into(), opt(self.energy_drift_coupled)),
            ("energy_drift decoupled".into(), opt(self.energy_drift_decoupled)),
        ];
        for (name, s) in [("coupled", self.timing.coupled), ("decoupled", self.timing.decoupled)] {
            if let Some(s) = s {
                rows.push((format!("step median {name} [s]"), format!("{:.3e}", s.median)));
                rows.push((format!("step p95 {name} [s]"), format!("{:.3e}", s.p95)));
            }
        }
        rows.push(("cost ratio c/d".into(), opt(self.timing.ratio)));
        rows.push(("reference ratio".into(), format!("{:.3}", self.timing.reference_ratio)));
        if let Some(ds) = &self.ds_series {
            let max = ds.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
            rows.push(("max |DS| [px]".into(), format!("{max:.4}")));
        }
        let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<w$}  {v}");
        }
        for warn in &self.warnings {
            let _ = writeln!(out, "warning: {warn}");
        }
        out
    }
}
