//! Certification report types and their JSON / CSV forms.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LightconeError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Which inequality a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Maximal-velocity bound on `‖χ_X e^{-iHt} χ_Y‖`.
    Mvb,
    /// Probability transferred from X to Y by the state evolution.
    StateLightcone,
    /// Light-cone truncation of the Heisenberg evolution.
    Lca,
    /// Lieb-Robinson commutator bound.
    Lrb,
    /// Out-of-time-order correlator.
    Otoc,
    /// Power-law bound for finitely differentiable symbols.
    PowerMvb,
    /// N-particle leakage through the product cutoff.
    Nbody,
}

impl Theorem {
    pub fn name(self) -> &'static str {
        match self {
            Theorem::Mvb => "mvb",
            Theorem::StateLightcone => "state_lightcone",
            Theorem::Lca => "lca",
            Theorem::Lrb => "lrb",
            Theorem::Otoc => "otoc",
            Theorem::PowerMvb => "power_mvb",
            Theorem::Nbody => "nbody",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Pass,
    /// Measured value and envelope are both below the numerical floor.
    VacuousBelowFloor,
    Fail,
}

/// One `(t, d)` point of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub t: f64,
    pub d: f64,
    pub measured: f64,
    pub envelope: f64,
    /// `ln(envelope)`; empty when the envelope is exactly zero.
    pub log_envelope: Option<f64>,
    /// `ln(envelope) - ln(measured)`; empty when `measured` is zero.
    pub log_margin: Option<f64>,
    pub status: RowStatus,
    /// The envelope is at least 1 (the point lies inside the light cone).
    pub inside_cone: bool,
    /// Whether a failure of this row is a genuine counterexample (C = 1 is
    /// rigorous for the geometry).
    pub certified: bool,
    pub mu_star: f64,
    pub mu_prime: f64,
    /// Secondary comparison quantity; see `reference_label` of the report.
    pub reference: Option<f64>,
}

/// Classify a measured value against its envelope.
pub fn classify(measured: f64, envelope: f64, floor: f64) -> RowStatus {
    if measured <= floor && envelope <= floor {
        RowStatus::VacuousBelowFloor
    } else if measured <= envelope || measured <= floor {
        RowStatus::Pass
    } else {
        RowStatus::Fail
    }
}

impl ReportRow {
    /// Row from a measured value and a log-envelope.
    pub fn new(t: f64, d: f64, measured: f64, log_envelope: f64, floor: f64, certified: bool) -> Self {
        let envelope = log_envelope.exp();
        let log_envelope_opt = if log_envelope == f64::NEG_INFINITY { None } else { Some(log_envelope) };
        let log_margin = if measured > 0.0 { log_envelope_opt.map(|l| l - measured.ln()) } else { None };
        ReportRow {
            t,
            d,
            measured,
            envelope,
            log_envelope: log_envelope_opt,
            log_margin,
            status: classify(measured, envelope, floor),
            inside_cone: log_envelope >= 0.0,
            certified,
            mu_star: 0.0,
            mu_prime: 0.0,
            reference: None,
        }
    }

    pub fn with_mu(mut self, mu_star: f64, epsilon: f64) -> Self {
        self.mu_star = mu_star;
        self.mu_prime = (1.0 - epsilon) * mu_star;
        self
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.reference = reference.is_finite().then_some(reference);
        self
    }

    pub fn is_genuine_failure(&self) -> bool {
        self.certified && self.status == RowStatus::Fail
    }
}

/// A scalar check attached to a report (slope fits, ratios, proof-chain
/// comparisons).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn bounded(name: impl Into<String>, value: f64, lower: Option<f64>, upper: Option<f64>, detail: impl Into<String>) -> Self {
        let passed = value.is_finite() && lower.map_or(true, |l| value >= l) && upper.map_or(true, |u| value <= u);
        Check { name: name.into(), value, lower, upper, passed, detail: detail.into() }
    }

    /// Recorded but not asserted.
    pub fn info(name: impl Into<String>, value: f64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), value, lower: None, upper: None, passed: true, detail: detail.into() }
    }
}

/// Geometry summary stored with a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Geometry {
    pub regions: Vec<RegionSummary>,
    pub distance: f64,
    pub half_space_separable: bool,
    pub gap: Option<f64>,
    pub direction: Option<Vec<f64>>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub label: String,
    pub sites: usize,
}

/// Provenance of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub hamiltonian_digest: String,
    pub seed: u64,
    pub times: Vec<f64>,
    pub mu_grid: Vec<f64>,
    pub epsilon: f64,
    pub floor: f64,
    pub velocity_converged: bool,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub schema_version: u32,
    pub theorem: Theorem,
    pub rows: Vec<ReportRow>,
    pub reference_label: Option<String>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub environment: Environment,
    pub verdict: Verdict,
}

impl CertificationReport {
    /// Assemble a report; rows are sorted by `(t, d)` and the verdict derived.
    pub fn assemble(
        theorem: Theorem,
        mut rows: Vec<ReportRow>,
        reference_label: Option<String>,
        checks: Vec<Check>,
        notes: Vec<String>,
        environment: Environment,
    ) -> Self {
        rows.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.d.total_cmp(&b.d)));
        let failed = rows.iter().any(ReportRow::is_genuine_failure) || checks.iter().any(|c| !c.passed);
        CertificationReport {
            schema_version: SCHEMA_VERSION,
            theorem,
            rows,
            reference_label,
            checks,
            notes,
            environment,
            verdict: if failed { Verdict::Fail } else { Verdict::Pass },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn row_at(&self, t: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.t == t)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| LightconeError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| LightconeError::Serialization(e.to_string()))
    }

    /// Rows as CSV with a header line.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| LightconeError::Serialization(e.to_string()))?;
        }
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER).map_err(|e| LightconeError::Serialization(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| LightconeError::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| LightconeError::Serialization(e.to_string()))
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "t", "d", "measured", "envelope", "log_envelope", "log_margin", "status", "inside_cone", "certified", "mu_star",
    "mu_prime", "reference",
];

/// Hex SHA-256 of the canonical JSON of `value`.
pub fn digest<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value).map_err(|e| LightconeError::Serialization(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Least-squares line `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(classify(1e-20, 1e-30, 1e-13), RowStatus::VacuousBelowFloor);
        assert_eq!(classify(1e-5, 1e-3, 1e-13), RowStatus::Pass);
        assert_eq!(classify(1e-14, 1e-16, 1e-13), RowStatus::VacuousBelowFloor);
        assert_eq!(classify(1e-14, 1e-12, 1e-13), RowStatus::Pass);
        assert_eq!(classify(1e-10, 1e-12, 1e-13), RowStatus::Fail);
        assert_eq!(classify(1e-10, 1e-20, 1e-13), RowStatus::Fail);
    }

    #[test]
    fn fit_recovers_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| -2.5 * x + 0.25).collect();
        let (s, i) = linear_fit(&xs, &ys).unwrap();
        assert!((s + 2.5).abs() < 1e-12 && (i - 0.25).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn row_margin() {
        let r = ReportRow::new(1.0, 5.0, 0.0, -3.0, 1e-13, true);
        assert_eq!(r.log_margin, None);
        assert!(!r.inside_cone);
        let r = ReportRow::new(1.0, 0.0, 0.5, 0.2, 1e-13, true);
        assert!(r.inside_cone);
        assert!((r.log_margin.unwrap() - (0.2 - 0.5f64.ln())).abs() < 1e-15);
    }
}
