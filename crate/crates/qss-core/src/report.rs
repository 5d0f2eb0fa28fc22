//! Machine-readable report documents.
//!
//! Reports are JSON with a stable field order, deterministic for fixed inputs
//! and seed; only the `generated_at_unix` stamp varies between runs. Player
//! positions are 1-based in reports, matching the CLI surface.

use serde::Serialize;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::access::{AccessReport, RampParams};
use crate::protocol::{NoiseModel, SessionTranscript};
use crate::qecc::QeccReport;
use crate::scheme::Scheme;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
    pub report_schema: u32,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: "qss",
            version: env!("CARGO_PKG_VERSION"),
            report_schema: REPORT_SCHEMA_VERSION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeMeta {
    pub name: String,
    pub share_dim: usize,
    pub secret_dim: usize,
    pub n_total: usize,
    /// 1-based positions of discarded shares.
    pub discarded: Vec<usize>,
    /// 1-based positions of active shares.
    pub active: Vec<usize>,
    pub pure: bool,
    pub ideal: bool,
}

impl SchemeMeta {
    pub fn of(scheme: &Scheme) -> Self {
        SchemeMeta {
            name: scheme.name().to_string(),
            share_dim: scheme.share_dim(),
            secret_dim: scheme.secret_dim(),
            n_total: scheme.n_total(),
            discarded: to_one_based(scheme.discarded()),
            active: to_one_based(&scheme.active_positions()),
            pure: scheme.is_pure(),
            ideal: scheme.is_ideal(),
        }
    }
}

/// Ramp parameters with 1-based semantics preserved (sizes, not positions).
#[derive(Debug, Clone, Serialize)]
pub struct RampSummary {
    pub k: Option<usize>,
    pub k_prime: usize,
    pub n: usize,
}

impl From<RampParams> for RampSummary {
    fn from(r: RampParams) -> Self {
        RampSummary {
            k: r.k,
            k_prime: r.k_prime,
            n: r.n,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsetEntry {
    /// 1-based player positions.
    pub players: Vec<usize>,
    pub mutual_info_bits: f64,
    pub holevo_bits: Vec<HolevoEntry>,
    pub qq_class: String,
    pub rcq_class: String,
    pub rcq_class_two_bases: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolevoEntry {
    pub t: usize,
    pub bits: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceSummary {
    pub all_pass: bool,
    pub min_info_bound_margin: f64,
    pub failures: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AccessSection {
    pub tolerance_bits: f64,
    pub ramp: RampSummary,
    pub rcq_ramp: RampSummary,
    pub perfect_threshold: bool,
    pub threshold_midpoint_violated: Option<bool>,
    pub equivalence: EquivalenceSummary,
    pub subsets: Vec<SubsetEntry>,
}

impl AccessSection {
    pub fn of(report: &AccessReport) -> Self {
        let class_name = |c: crate::access::AccessClass| {
            match c {
                crate::access::AccessClass::Authorised => "authorised",
                crate::access::AccessClass::Unauthorised => "unauthorised",
                crate::access::AccessClass::Intermediate => "intermediate",
            }
            .to_string()
        };
        AccessSection {
            tolerance_bits: report.tolerance,
            ramp: report.ramp.into(),
            rcq_ramp: report.rcq_ramp.into(),
            perfect_threshold: report.perfect_threshold,
            threshold_midpoint_violated: report.threshold_midpoint_violated,
            equivalence: EquivalenceSummary {
                all_pass: report.equivalence.all_pass,
                min_info_bound_margin: report.equivalence.min_info_bound_margin,
                failures: report
                    .equivalence
                    .per_subset
                    .iter()
                    .filter(|v| {
                        !(v.qq_auth_implies_rcq_auth
                            && v.qq_unauth_implies_rcq_unauth
                            && v.rcq_auth_implies_qq_auth
                            && v.info_bound_ok)
                    })
                    .map(|v| to_one_based(&v.players))
                    .collect(),
            },
            subsets: report
                .classifications
                .iter()
                .map(|c| SubsetEntry {
                    players: to_one_based(&c.players),
                    mutual_info_bits: c.mutual_info,
                    holevo_bits: c
                        .holevo
                        .iter()
                        .map(|h| HolevoEntry {
                            t: h.t,
                            bits: h.bits,
                        })
                        .collect(),
                    qq_class: class_name(c.qq_class),
                    rcq_class: class_name(c.rcq_class),
                    rcq_class_two_bases: class_name(c.rcq_class_two_bases),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErasureRow {
    /// 1-based erased share positions.
    pub erased: Vec<usize>,
    pub correctable: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QeccSection {
    pub distance: Option<usize>,
    pub k_from_distance: Option<usize>,
    pub bounds: crate::qecc::BoundChecks,
    pub duality_exceptions: Vec<Vec<usize>>,
    pub erasure_table: Vec<ErasureRow>,
}

impl QeccSection {
    pub fn of(report: &QeccReport) -> Self {
        QeccSection {
            distance: report.distance,
            k_from_distance: report.k_from_distance,
            bounds: report.bounds.clone(),
            duality_exceptions: report
                .duality_exceptions
                .iter()
                .map(|e| to_one_based(e))
                .collect(),
            erasure_table: report
                .erasure_table
                .iter()
                .map(|e| ErasureRow {
                    erased: to_one_based(&e.erased),
                    correctable: e.correctable,
                    residual: e.residual,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QqSimSection {
    pub trials: usize,
    pub seed: u64,
    /// 1-based player positions.
    pub subset: Vec<usize>,
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    /// Bell outcome counts, row-major over (a, b).
    pub outcome_histogram: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RcqSimSection {
    pub rounds: usize,
    pub seed: u64,
    /// 1-based player positions.
    pub subset: Vec<usize>,
    pub noise: NoiseModel,
    pub sift_count: usize,
    pub sift_rate: f64,
    pub sifted_agreement: f64,
    pub qber_estimate: f64,
    pub abort_threshold: f64,
    pub aborted: bool,
    pub final_key_len: usize,
    /// Final key digits as a compact string.
    pub final_key: String,
}

impl RcqSimSection {
    pub fn of(subset: &[usize], transcript: &SessionTranscript) -> Self {
        let config = &transcript.config;
        RcqSimSection {
            rounds: config.rounds,
            seed: config.seed,
            subset: to_one_based(subset),
            noise: config.noise,
            sift_count: transcript.sift_count(),
            sift_rate: transcript.sift_count() as f64 / config.rounds as f64,
            sifted_agreement: transcript.sifted_agreement(),
            qber_estimate: transcript.qber_estimate,
            abort_threshold: config.abort_qber,
            aborted: transcript.aborted,
            final_key_len: transcript.final_key.len(),
            final_key: transcript
                .final_key
                .iter()
                .map(|d| d.to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Simulation {
    Qq(QqSimSection),
    Rcq(RcqSimSection),
}

/// Top-level report document.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool: ToolInfo,
    pub generated_at_unix: u64,
    pub scheme: SchemeMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub access: Option<AccessSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qecc: Option<QeccSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Simulation>,
}

impl ReportDocument {
    pub fn analyze(scheme: &Scheme, access: &AccessReport, qecc: &QeccReport) -> Self {
        ReportDocument {
            tool: ToolInfo::current(),
            generated_at_unix: unix_now(),
            scheme: SchemeMeta::of(scheme),
            access: Some(AccessSection::of(access)),
            qecc: Some(QeccSection::of(qecc)),
            simulation: None,
        }
    }

    pub fn simulation(scheme: &Scheme, simulation: Simulation) -> Self {
        ReportDocument {
            tool: ToolInfo::current(),
            generated_at_unix: unix_now(),
            scheme: SchemeMeta::of(scheme),
            access: None,
            qecc: None,
            simulation: Some(simulation),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn to_one_based(positions: &[usize]) -> Vec<usize> {
    positions.iter().map(|&p| p + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access::{analyze_access_structure, DEFAULT_TOL};
    use crate::qecc::bound_report;
    use crate::scheme::cgl23_scheme;

    #[test]
    fn analyze_report_serializes_with_one_based_players() {
        let s = cgl23_scheme();
        let access = analyze_access_structure(&s, DEFAULT_TOL).unwrap();
        let qecc = bound_report(&s, &access).unwrap();
        let doc = ReportDocument::analyze(&s, &access, &qecc);
        let json = doc.to_json();
        assert!(json.contains("\"players\": [\n          1\n        ]"));
        assert!(json.contains("\"report_schema\": 1"));
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["scheme"]["share_dim"], 3);
        assert_eq!(value["access"]["ramp"]["k"], 2);
    }

    #[test]
    fn reports_differ_only_in_timestamp() {
        let s = cgl23_scheme();
        let access = analyze_access_structure(&s, DEFAULT_TOL).unwrap();
        let qecc = bound_report(&s, &access).unwrap();
        let a = ReportDocument::analyze(&s, &access, &qecc);
        let b = ReportDocument::analyze(&s, &access, &qecc);
        let strip = |text: &str| {
            text.lines()
                .filter(|l| !l.contains("generated_at_unix"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&a.to_json()), strip(&b.to_json()));
    }
}
