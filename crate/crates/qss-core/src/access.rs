//! Access-structure analysis.
//!
//! For each player subset B the module evaluates the channel from the secret
//! to B's shares: the quantum mutual information I(τ;Λ_B) decides whether B
//! can recover the quantum secret, and the Holevo information of the dealer's
//! measurement ensembles decides whether B can read the dealer's classical
//! outcome in every basis. Subsets are classified from these quantities and
//! the (k, k', n) ramp parameters are extracted exhaustively.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qudit::{basis_labels, subsystem_entropy, DensityMatrix, PureState, SystemShape};
use crate::scheme::{logical_basis_state_pure, purified_channel_state, Scheme};

/// Default classification tolerance in bits.
pub const DEFAULT_TOL: f64 = 1e-7;

/// Exhaustive analysis refuses above this player count.
pub const MAX_PLAYERS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessClass {
    Authorised,
    Unauthorised,
    Intermediate,
}

/// Holevo information of one dealer-basis ensemble, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisHolevo {
    pub t: usize,
    pub bits: f64,
}

/// Information quantities and classes for one player subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetClassification {
    /// Active share positions of the subset, 0-based, ascending.
    pub players: Vec<usize>,
    /// Quantum mutual information I(τ;Λ_B) in bits.
    pub mutual_info: f64,
    /// Holevo information per dealer basis label.
    pub holevo: Vec<BasisHolevo>,
    pub qq_class: AccessClass,
    /// Classification over all available bases.
    pub rcq_class: AccessClass,
    /// Classification using only the first two bases (the pair entering the
    /// information bound); recorded separately because the two notions could
    /// in principle differ.
    pub rcq_class_two_bases: AccessClass,
    pub tolerance: f64,
}

/// Measured ramp parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RampParams {
    /// Smallest size s such that every subset of size >= s is authorised.
    pub k: Option<usize>,
    /// Largest size s such that every subset of size <= s is unauthorised.
    pub k_prime: usize,
    pub n: usize,
}

/// Per-subset consistency checks between the QQ and RCQ classifications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceVerdict {
    pub players: Vec<usize>,
    pub qq_auth_implies_rcq_auth: bool,
    pub qq_unauth_implies_rcq_unauth: bool,
    pub rcq_auth_implies_qq_auth: bool,
    /// Margin of the two-basis information bound,
    /// I(τ;Λ_B) - χ(first basis) - χ(second basis).
    pub info_bound_margin: f64,
    pub info_bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceChecks {
    pub per_subset: Vec<EquivalenceVerdict>,
    pub all_pass: bool,
    pub min_info_bound_margin: f64,
}

/// Full exhaustive access report for a scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessReport {
    pub scheme_name: String,
    pub share_dim: usize,
    pub secret_dim: usize,
    pub n_active: usize,
    pub classifications: Vec<SubsetClassification>,
    pub ramp: RampParams,
    pub rcq_ramp: RampParams,
    /// True when the measured QQ ramp is a perfect threshold (k' = k-1).
    pub perfect_threshold: bool,
    /// Set when a pure perfect-threshold scheme with odd n violates
    /// k = (n+1)/2; None when the condition does not apply.
    pub threshold_midpoint_violated: Option<bool>,
    pub equivalence: EquivalenceChecks,
    pub tolerance: f64,
}

/// Precomputed channel and logical states for one scheme.
///
/// Subset queries share the purified channel state and the per-basis
/// post-measurement logical states, so repeated classifications agree bit
/// for bit with `analyze_access_structure`.
pub struct AnalysisContext<'a> {
    scheme: &'a Scheme,
    channel: PureState,
    /// (t, outcome) -> player state on the full share register.
    logical: Vec<(usize, Vec<PureState>)>,
}

impl<'a> AnalysisContext<'a> {
    pub fn new(scheme: &'a Scheme) -> Result<Self> {
        let channel = purified_channel_state(scheme)?;
        let labels = if scheme.is_ideal() {
            basis_labels(scheme.share_dim())
        } else {
            vec![0]
        };
        let mut logical = Vec::with_capacity(labels.len());
        for t in labels {
            let states = (0..scheme.secret_dim())
                .map(|i| logical_basis_state_pure(scheme, t, i))
                .collect::<Result<Vec<_>>>()?;
            logical.push((t, states));
        }
        Ok(AnalysisContext {
            scheme,
            channel,
            logical,
        })
    }

    pub fn scheme(&self) -> &Scheme {
        self.scheme
    }

    /// Basis labels available for this scheme.
    pub fn labels(&self) -> Vec<usize> {
        self.logical.iter().map(|(t, _)| *t).collect()
    }

    fn check_subset(&self, subset: &[usize]) -> Result<Vec<usize>> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let active = self.scheme.active_positions();
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != subset.len() {
            return Err(Error::InvalidSubset("repeated player".into()));
        }
        for &p in &sorted {
            if !active.contains(&p) {
                return Err(Error::InvalidSubset(format!(
                    "player {p} is not an active share"
                )));
            }
        }
        Ok(sorted)
    }

    /// Entropy of B's share state, averaged over the dealer.
    fn share_entropy(&self, subset: &[usize]) -> Result<f64> {
        // positions shift by one: dealer occupies slot 0 of the channel state
        let keep: Vec<usize> = subset.iter().map(|&p| p + 1).collect();
        subsystem_entropy(&self.channel, &keep)
    }

    /// Entropy of the joint dealer + B state.
    fn dealer_share_entropy(&self, subset: &[usize]) -> Result<f64> {
        let keep: Vec<usize> = std::iter::once(0)
            .chain(subset.iter().map(|&p| p + 1))
            .collect();
        subsystem_entropy(&self.channel, &keep)
    }

    /// Quantum mutual information I(τ;Λ_B) in bits:
    /// S(τ) + S(Λ_B(τ)) - S((id ⊗ Λ_B)|Φ⟩⟨Φ|).
    pub fn mutual_info(&self, subset: &[usize]) -> Result<f64> {
        let subset = self.check_subset(subset)?;
        let s_tau = (self.scheme.secret_dim() as f64).log2();
        Ok(s_tau + self.share_entropy(&subset)? - self.dealer_share_entropy(&subset)?)
    }

    /// Holevo information of the dealer ensemble at basis label `t`, in bits.
    pub fn holevo(&self, subset: &[usize], t: usize) -> Result<f64> {
        let subset = self.check_subset(subset)?;
        let (_, states) = self
            .logical
            .iter()
            .find(|(label, _)| *label == t)
            .ok_or_else(|| {
                if self.scheme.is_ideal() {
                    Error::UnsupportedBasis {
                        q: self.scheme.share_dim(),
                        t,
                    }
                } else {
                    Error::NonIdealScheme {
                        kappa: self.scheme.secret_dim(),
                        q: self.scheme.share_dim(),
                    }
                }
            })?;
        let average_entropy = self.share_entropy(&subset)?;
        let mut conditional = 0.0;
        for state in states {
            conditional += subsystem_entropy(state, &subset)?;
        }
        conditional /= states.len() as f64;
        Ok(average_entropy - conditional)
    }

    pub fn classify(&self, subset: &[usize], tol: f64) -> Result<SubsetClassification> {
        let subset = self.check_subset(subset)?;
        let kappa_bits = (self.scheme.secret_dim() as f64).log2();
        let mutual_info = self.mutual_info(&subset)?;
        let mut holevo = Vec::new();
        for t in self.labels() {
            holevo.push(BasisHolevo {
                t,
                bits: self.holevo(&subset, t)?,
            });
        }
        debug_assert!(mutual_info >= -tol && mutual_info <= 2.0 * kappa_bits + tol);
        debug_assert!(holevo
            .iter()
            .all(|h| h.bits >= -tol && h.bits <= kappa_bits + tol));

        let qq_class = if (mutual_info - 2.0 * kappa_bits).abs() < tol {
            AccessClass::Authorised
        } else if mutual_info < tol {
            AccessClass::Unauthorised
        } else {
            AccessClass::Intermediate
        };
        let classify_chi = |entries: &[&BasisHolevo]| {
            if entries.iter().all(|h| h.bits > kappa_bits - tol) {
                AccessClass::Authorised
            } else if entries.iter().all(|h| h.bits < tol) {
                AccessClass::Unauthorised
            } else {
                AccessClass::Intermediate
            }
        };
        let all: Vec<&BasisHolevo> = holevo.iter().collect();
        let two: Vec<&BasisHolevo> = holevo.iter().take(2).collect();
        let rcq_class = classify_chi(&all);
        let rcq_class_two_bases = classify_chi(&two);
        Ok(SubsetClassification {
            players: subset,
            mutual_info,
            holevo,
            qq_class,
            rcq_class,
            rcq_class_two_bases,
            tolerance: tol,
        })
    }
}

/// The channel Λ_B applied to an arbitrary secret-space input: encode, trace
/// out discarded shares and the complement of B.
pub fn apply_share_channel(
    scheme: &Scheme,
    subset: &[usize],
    input: &DensityMatrix,
) -> Result<DensityMatrix> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let kappa = scheme.secret_dim();
    if input.shape().total_dim() != kappa {
        return Err(Error::DimensionMismatch {
            expected: kappa,
            got: input.shape().total_dim(),
        });
    }
    let active = scheme.active_positions();
    for &p in subset {
        if !active.contains(&p) {
            return Err(Error::InvalidSubset(format!(
                "player {p} is not an active share"
            )));
        }
    }
    let enc = scheme.encoding();
    let encoded = enc * input.matrix() * enc.adjoint();
    let full = DensityMatrix::from_trusted(scheme.share_shape(), encoded);
    crate::qudit::partial_trace_density(&full, subset)
}

/// Quantum mutual information I(τ;Λ_B) of a subset, in bits.
pub fn mutual_info(scheme: &Scheme, subset: &[usize]) -> Result<f64> {
    AnalysisContext::new(scheme)?.mutual_info(subset)
}

/// Holevo information of the dealer ensemble at basis `t` as seen by B.
pub fn holevo_information(scheme: &Scheme, subset: &[usize], t: usize) -> Result<f64> {
    AnalysisContext::new(scheme)?.holevo(subset, t)
}

/// Classifies one subset at the given tolerance.
pub fn classify_subset(scheme: &Scheme, subset: &[usize], tol: f64) -> Result<SubsetClassification> {
    AnalysisContext::new(scheme)?.classify(subset, tol)
}

/// Exhaustively classifies every non-empty subset of active players and
/// extracts the ramp parameters.
pub fn analyze_access_structure(scheme: &Scheme, tol: f64) -> Result<AccessReport> {
    let active = scheme.active_positions();
    let n = active.len();
    if n > MAX_PLAYERS {
        return Err(Error::TooManyPlayers {
            n,
            max: MAX_PLAYERS,
        });
    }
    let ctx = AnalysisContext::new(scheme)?;
    let mut classifications = Vec::with_capacity((1usize << n) - 1);
    for mask in 1usize..(1 << n) {
        let subset: Vec<usize> = (0..n)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| active[b])
            .collect();
        classifications.push(ctx.classify(&subset, tol)?);
    }
    let ramp = extract_ramp(&classifications, n, |c| c.qq_class);
    let rcq_ramp = extract_ramp(&classifications, n, |c| c.rcq_class);
    let perfect_threshold =
        scheme.is_pure() && matches!(ramp.k, Some(k) if ramp.k_prime + 1 == k);
    let threshold_midpoint_violated = if perfect_threshold && n % 2 == 1 {
        Some(ramp.k != Some(n.div_ceil(2)))
    } else {
        None
    };
    let equivalence = verify_equivalence(&classifications, tol);
    Ok(AccessReport {
        scheme_name: scheme.name().to_string(),
        share_dim: scheme.share_dim(),
        secret_dim: scheme.secret_dim(),
        n_active: n,
        classifications,
        ramp,
        rcq_ramp,
        perfect_threshold,
        threshold_midpoint_violated,
        equivalence,
        tolerance: tol,
    })
}

fn extract_ramp(
    classifications: &[SubsetClassification],
    n: usize,
    class: impl Fn(&SubsetClassification) -> AccessClass,
) -> RampParams {
    // all_auth[s] / all_unauth[s]: every subset of size s is so classified
    let mut all_auth = vec![true; n + 1];
    let mut all_unauth = vec![true; n + 1];
    for c in classifications {
        let size = c.players.len();
        match class(c) {
            AccessClass::Authorised => all_unauth[size] = false,
            AccessClass::Unauthorised => all_auth[size] = false,
            AccessClass::Intermediate => {
                all_auth[size] = false;
                all_unauth[size] = false;
            }
        }
    }
    let mut k = None;
    for s in (1..=n).rev() {
        if all_auth[s] {
            k = Some(s);
        } else {
            break;
        }
    }
    let k_prime = all_unauth[1..=n].iter().take_while(|&&u| u).count();
    RampParams { k, k_prime, n }
}

/// Checks, for every classified subset, the implications between the QQ and
/// RCQ classes and the two-basis information bound
/// χ(first) + χ(second) <= I(τ;Λ_B).
pub fn verify_equivalence(
    classifications: &[SubsetClassification],
    tol: f64,
) -> EquivalenceChecks {
    let mut per_subset = Vec::with_capacity(classifications.len());
    let mut min_margin = f64::INFINITY;
    for c in classifications {
        let chi0 = c.holevo.first().map(|h| h.bits).unwrap_or(0.0);
        let chi1 = c.holevo.get(1).map(|h| h.bits).unwrap_or(0.0);
        let margin = c.mutual_info - chi0 - chi1;
        min_margin = min_margin.min(margin);
        per_subset.push(EquivalenceVerdict {
            players: c.players.clone(),
            qq_auth_implies_rcq_auth: c.qq_class != AccessClass::Authorised
                || c.rcq_class == AccessClass::Authorised,
            qq_unauth_implies_rcq_unauth: c.qq_class != AccessClass::Unauthorised
                || c.rcq_class == AccessClass::Unauthorised,
            rcq_auth_implies_qq_auth: c.rcq_class != AccessClass::Authorised
                || c.qq_class == AccessClass::Authorised,
            info_bound_margin: margin,
            info_bound_ok: margin >= -tol,
        });
    }
    let all_pass = per_subset.iter().all(|v| {
        v.qq_auth_implies_rcq_auth
            && v.qq_unauth_implies_rcq_unauth
            && v.rcq_auth_implies_qq_auth
            && v.info_bound_ok
    });
    EquivalenceChecks {
        per_subset,
        all_pass,
        min_info_bound_margin: if min_margin.is_finite() {
            min_margin
        } else {
            0.0
        },
    }
}

impl AccessReport {
    /// Classification of an exact subset, if present.
    pub fn classification_of(&self, subset: &[usize]) -> Option<&SubsetClassification> {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        self.classifications.iter().find(|c| c.players == sorted)
    }

    /// True when the subset is QQ-authorised.
    pub fn is_qq_authorised(&self, subset: &[usize]) -> Option<bool> {
        self.classification_of(subset)
            .map(|c| c.qq_class == AccessClass::Authorised)
    }
}

/// The maximally mixed secret-space input τ for a scheme.
pub fn maximally_mixed_secret(scheme: &Scheme) -> DensityMatrix {
    DensityMatrix::maximally_mixed(
        SystemShape::new(&[scheme.secret_dim()]).expect("secret space is valid"),
    )
}
