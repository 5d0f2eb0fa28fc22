//! Erasure-correction view of a scheme: correctability tables, code
//! distance, ramp duality and the dimension bounds.
//!
//! Losing a set E of shares is correctable exactly when the remaining shares
//! satisfy the erasure condition, so every check here reuses the Gram
//! machinery of the decoder module with the roles of the two sides swapped.

use serde::Serialize;

use crate::access::{AccessClass, AccessReport};
use crate::decoder::{erasure_residual, AUTHORISED_RESIDUAL};
use crate::error::{Error, Result};
use crate::scheme::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl BoundStatus {
    pub fn failed(&self) -> bool {
        matches!(self, BoundStatus::Fail)
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            BoundStatus::Pass
        } else {
            BoundStatus::Fail
        }
    }
}

/// Correctability of one erasure set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErasureEntry {
    /// Erased active share positions, 0-based.
    pub erased: Vec<usize>,
    pub correctable: bool,
    pub residual: f64,
}

/// Dimension and structure bounds evaluated for a scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundChecks {
    /// κ <= q for pure perfect threshold schemes.
    pub singleton_kappa: BoundStatus,
    /// 2q^2 >= n+2 for ideal pure perfect threshold schemes.
    pub share_size: BoundStatus,
    /// q^2 >= n-1, the conjectured stronger scaling; advisory.
    pub mds_advisory: BoundStatus,
    /// k' = n-k for pure schemes, checked against the measured ramp.
    pub pure_duality: BoundStatus,
    /// k = (n+1)/2 for pure perfect threshold schemes with odd n.
    pub threshold_midpoint: BoundStatus,
    /// Claimed ramp metadata matches the measured ramp.
    pub claimed_ramp_consistent: BoundStatus,
}

impl BoundChecks {
    pub fn any_failed(&self) -> bool {
        [
            self.singleton_kappa,
            self.share_size,
            self.mds_advisory,
            self.pure_duality,
            self.threshold_midpoint,
            self.claimed_ramp_consistent,
        ]
        .iter()
        .any(BoundStatus::failed)
    }
}

/// Error-correction report for a scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QeccReport {
    pub scheme_name: String,
    pub n_active: usize,
    pub secret_dim: usize,
    pub share_dim: usize,
    pub is_pure: bool,
    /// Code distance; None for mixed schemes, which report the erasure table
    /// per set instead of a single scalar.
    pub distance: Option<usize>,
    /// k implied by the distance through k = n-d+1 (pure schemes).
    pub k_from_distance: Option<usize>,
    pub erasure_table: Vec<ErasureEntry>,
    pub bounds: BoundChecks,
    /// Exhaustive duality check: losing E is correctable iff the complement
    /// of E is authorised.
    pub duality_exceptions: Vec<Vec<usize>>,
    pub discarded: Vec<usize>,
}

/// Whether the loss of the active shares in `erased` can be corrected by the
/// remaining ones. The empty erasure is trivially correctable; discarded
/// shares always count as lost.
pub fn correctable_erasure(scheme: &Scheme, erased: &[usize]) -> Result<(bool, f64)> {
    let active = scheme.active_positions();
    let mut sorted = erased.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != erased.len() {
        return Err(Error::InvalidSubset("repeated share".into()));
    }
    for &p in &sorted {
        if !active.contains(&p) {
            return Err(Error::InvalidSubset(format!(
                "share {p} is not an active share"
            )));
        }
    }
    if sorted.len() >= active.len() {
        return Err(Error::InvalidSubset(
            "erasure set must be a proper subset of the active shares".into(),
        ));
    }
    let rest: Vec<usize> = active.iter().copied().filter(|p| !sorted.contains(p)).collect();
    let residual = erasure_residual(scheme, &rest)?;
    Ok((residual < AUTHORISED_RESIDUAL, residual))
}

/// Code distance of a pure scheme: 1 + the largest e such that every size-e
/// erasure of shares is correctable.
pub fn distance(scheme: &Scheme) -> Result<usize> {
    if !scheme.is_pure() {
        return Err(Error::PureSchemeOnly("distance"));
    }
    let n = scheme.n_total();
    let mut tolerated = 0usize;
    'sizes: for e in 1..n {
        for mask in 0usize..(1 << n) {
            if (mask.count_ones() as usize) != e {
                continue;
            }
            let erased: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).collect();
            let (ok, _) = correctable_erasure(scheme, &erased)?;
            if !ok {
                break 'sizes;
            }
        }
        tolerated = e;
    }
    Ok(tolerated + 1)
}

/// Per-claim bound check for a hypothetical ideal pure perfect threshold
/// scheme with the stated parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdClaim {
    pub k: usize,
    pub n: usize,
    pub share_dim: usize,
    pub secret_dim: usize,
    pub singleton_kappa: BoundStatus,
    pub share_size: BoundStatus,
    pub threshold_midpoint: BoundStatus,
    /// False when some bound rules the claimed scheme out.
    pub possible: bool,
}

/// Evaluates the dimension bounds for a claimed ideal pure perfect (k, n)
/// threshold scheme over shares of dimension q, without constructing it.
pub fn check_threshold_claim(k: usize, n: usize, q: usize, kappa: usize) -> ThresholdClaim {
    let singleton_kappa = BoundStatus::from_bool(kappa <= q);
    // exact integer arithmetic: q >= sqrt((n+2)/2) iff 2q^2 >= n+2
    let share_size = BoundStatus::from_bool(2 * q * q >= n + 2);
    let threshold_midpoint = if n % 2 == 1 {
        BoundStatus::from_bool(2 * k == n + 1)
    } else {
        BoundStatus::NotApplicable
    };
    let possible = !singleton_kappa.failed() && !share_size.failed() && !threshold_midpoint.failed();
    ThresholdClaim {
        k,
        n,
        share_dim: q,
        secret_dim: kappa,
        singleton_kappa,
        share_size,
        threshold_midpoint,
        possible,
    }
}

/// Builds the full error-correction report for a scheme, cross-checked
/// against its measured access structure.
pub fn bound_report(scheme: &Scheme, analysis: &AccessReport) -> Result<QeccReport> {
    if analysis.scheme_name != scheme.name() {
        return Err(Error::SchemeMismatch {
            expected: scheme.name().to_string(),
            got: analysis.scheme_name.clone(),
        });
    }
    let active = scheme.active_positions();
    let n = active.len();
    let q = scheme.share_dim();
    let kappa = scheme.secret_dim();
    let is_pure = scheme.is_pure();

    // every proper subset of the active shares, smallest first
    let mut erasure_table = Vec::new();
    let mut duality_exceptions = Vec::new();
    for mask in 0usize..(1 << n) {
        let erased: Vec<usize> = (0..n)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| active[b])
            .collect();
        if erased.len() == n {
            continue;
        }
        let (correctable, residual) = correctable_erasure(scheme, &erased)?;
        if is_pure && !erased.is_empty() {
            // duality: correctable loss of E <=> complement(E) authorised;
            // the complement here is everything outside E, which is the set
            // that performs the recovery
            let complement: Vec<usize> = active
                .iter()
                .copied()
                .filter(|p| !erased.contains(p))
                .collect();
            let authorised = analysis
                .classification_of(&complement)
                .map(|c| c.qq_class == AccessClass::Authorised)
                .unwrap_or(false);
            if authorised != correctable {
                duality_exceptions.push(erased.clone());
            }
        }
        erasure_table.push(ErasureEntry {
            erased,
            correctable,
            residual,
        });
    }

    let dist = if is_pure { Some(distance(scheme)?) } else { None };
    let k_from_distance = dist.map(|d| n + 1 - d);

    let perfect = analysis.perfect_threshold;
    let measured_k = analysis.ramp.k;
    let measured_k_prime = analysis.ramp.k_prime;

    let singleton_kappa = if is_pure && perfect {
        BoundStatus::from_bool(kappa <= q)
    } else {
        BoundStatus::NotApplicable
    };
    let share_size = if is_pure && perfect && scheme.is_ideal() {
        BoundStatus::from_bool(2 * q * q >= n + 2)
    } else {
        BoundStatus::NotApplicable
    };
    let mds_advisory = if is_pure && perfect && scheme.is_ideal() {
        BoundStatus::from_bool(q * q >= n.saturating_sub(1))
    } else {
        BoundStatus::NotApplicable
    };
    let pure_duality = if is_pure {
        match measured_k {
            Some(k) => BoundStatus::from_bool(
                duality_exceptions.is_empty() && (!perfect || measured_k_prime == n - k),
            ),
            None => BoundStatus::from_bool(duality_exceptions.is_empty()),
        }
    } else {
        BoundStatus::NotApplicable
    };
    let threshold_midpoint = if is_pure && perfect && n % 2 == 1 {
        BoundStatus::from_bool(measured_k == Some(n.div_ceil(2)))
    } else {
        BoundStatus::NotApplicable
    };
    let claimed_ramp_consistent = match scheme.claimed_ramp() {
        Some(claim) => {
            let k_ok = measured_k == Some(claim.k);
            let kp_ok = claim.k_prime.is_none_or(|kp| kp == measured_k_prime);
            let n_ok = claim.n == n;
            BoundStatus::from_bool(k_ok && kp_ok && n_ok)
        }
        None => BoundStatus::NotApplicable,
    };

    Ok(QeccReport {
        scheme_name: scheme.name().to_string(),
        n_active: n,
        secret_dim: kappa,
        share_dim: q,
        is_pure,
        distance: dist,
        k_from_distance,
        erasure_table,
        bounds: BoundChecks {
            singleton_kappa,
            share_size,
            mds_advisory,
            pure_duality,
            threshold_midpoint,
            claimed_ramp_consistent,
        },
        duality_exceptions,
        discarded: scheme.discarded().to_vec(),
    })
}
