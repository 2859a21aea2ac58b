//! On-disk JSON formats: problem instances, optimization results, fit
//! records, continuous schedules, and annealing manifests.
//!
//! All writers emit pretty-printed JSON with a trailing newline; field order
//! is fixed by the struct definitions, so identical data produces identical
//! bytes.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::annealer::Integrator;
use crate::error::{Error, Result};
use crate::problems::QuboInstance;
use crate::simulator::AngleSchedule;
use crate::thermofit::BoltzmannFit;
use crate::trajectory::{ContinuousSchedule, InterpKind};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Problem instance file: the matrix is stored as its row-major upper
/// triangle, diagonal included.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub seed: u64,
    pub q: Vec<f64>,
    pub instance_id: String,
}

impl InstanceFile {
    pub fn from_instance(q: &QuboInstance) -> Self {
        Self {
            n: q.n(),
            seed: q.seed(),
            q: q.upper_triangle(),
            instance_id: q.instance_id().to_string(),
        }
    }

    pub fn to_instance(&self) -> Result<QuboInstance> {
        QuboInstance::from_upper_triangle(
            self.n,
            self.seed,
            self.instance_id.clone(),
            &self.q,
        )
    }
}

/// Optimization result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub instance_id: String,
    pub p: usize,
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    pub value: f64,
    pub ground_overlap: f64,
    pub evals: u64,
    pub seed: u64,
    pub n: usize,
}

impl ResultFile {
    pub fn schedule(&self) -> Result<AngleSchedule> {
        AngleSchedule::new(self.gamma.clone(), self.theta.clone())
    }
}

/// One persisted thermal-fit record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRecordFile {
    pub instance_id: String,
    pub p: usize,
    pub beta_high: f64,
    pub beta_low: f64,
    pub c_high: f64,
    pub p_low: f64,
    pub kl: f64,
    pub flags: Vec<String>,
}

impl FitRecordFile {
    pub fn new(instance_id: &str, p: usize, fit: &BoltzmannFit) -> Self {
        let mut flags = Vec::new();
        if fit.single_mode {
            flags.push("single_mode".to_string());
        }
        Self {
            instance_id: instance_id.to_string(),
            p,
            beta_high: fit.beta_high,
            beta_low: fit.beta_low,
            c_high: fit.c_high,
            p_low: fit.p_low,
            kl: fit.kl,
            flags,
        }
    }
}

/// Continuous schedule file: knot list plus interpolant tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub knots: Vec<(f64, f64)>,
    pub interpolant: InterpKind,
    pub theta_max: f64,
    pub gamma_max: f64,
}

impl ScheduleFile {
    pub fn from_schedule(cs: &ContinuousSchedule) -> Self {
        Self {
            knots: cs.knots(),
            interpolant: cs.kind(),
            theta_max: cs.theta_max(),
            gamma_max: cs.gamma_max(),
        }
    }

    pub fn to_schedule(&self) -> Result<ContinuousSchedule> {
        let cs = ContinuousSchedule::from_knots(&self.knots, self.interpolant)?;
        if (cs.theta_max() - self.theta_max).abs() > 1e-9 * self.theta_max.abs()
            || (cs.gamma_max() - self.gamma_max).abs() > 1e-9 * self.gamma_max.abs()
        {
            return Err(Error::InvalidConfig(
                "schedule endpoint does not match its knots".into(),
            ));
        }
        Ok(cs)
    }
}

/// Manifest of one annealing run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnealManifest {
    pub instance_id: String,
    pub schedule_ref: String,
    pub steps: usize,
    pub integrator: Integrator,
    pub final_norm: f64,
    pub fidelity_checks: FidelityChecks,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityChecks {
    /// Accumulated norm drift before renormalization.
    pub norm_drift: f64,
    /// Largest per-step phase encountered (guard bound is 0.5 rad).
    pub max_step_phase: f64,
}

/// Debug dump of basis-state probabilities as little-endian f64, indexed by
/// bitstring. Not a stable interchange format.
pub fn write_probabilities_le(path: &Path, probs: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(probs.len() * 8);
    for p in probs {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}
