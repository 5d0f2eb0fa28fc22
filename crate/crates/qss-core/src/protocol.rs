//! Protocol execution: quantum-secret teleportation (QQ) and random-key
//! establishment (RCQ) with pluggable noise.
//!
//! Rounds draw their randomness from a counter-based generator: round i's
//! randomness is a pure function of (seed, i), so transcripts are fully
//! reproducible and rounds are independent.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decoder::{synthesize_decoder, Decoder};
use crate::error::{Error, Result};
use crate::qudit::{
    apply_to_subsystems, basis_labels, measurement_probabilities, mub_basis, omega,
    partial_trace_pure, project_out, pauli_ops, CMatrix, CVector, OrthonormalBasis, PureState,
    SystemShape,
};
use crate::scheme::{purified_channel_state, Scheme};

/// Where a noise map acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    /// An active share position (0-based).
    Share(usize),
    /// The decoded output system, after the recovery map.
    Decoded,
}

/// How the eavesdropper picks her measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EveBasis {
    Fixed(usize),
    Random,
}

/// Noise applied to each round's share register.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseModel {
    None,
    /// With probability p, replace the target system by the maximally mixed
    /// state (sampled as a uniformly random generalized Pauli).
    Depolarizing { target: NoiseTarget, p: f64 },
    /// With probability p the share is lost and the round yields no outcome.
    Erasure { share: usize, p: f64 },
    /// An eavesdropper measures the share in transit and resends the
    /// post-measurement state.
    InterceptResend { share: usize, basis: EveBasis },
}

impl NoiseModel {
    fn validate(&self, scheme: &Scheme) -> Result<()> {
        let active = scheme.active_positions();
        let check_share = |s: usize| {
            if active.contains(&s) {
                Ok(())
            } else {
                Err(Error::InvalidPositions(format!(
                    "noise share {s} is not an active share"
                )))
            }
        };
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::Depolarizing { target, p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidShape(format!("probability {p} not in [0,1]")));
                }
                match target {
                    NoiseTarget::Share(s) => check_share(*s),
                    NoiseTarget::Decoded => Ok(()),
                }
            }
            NoiseModel::Erasure { share, p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidShape(format!("probability {p} not in [0,1]")));
                }
                check_share(*share)
            }
            NoiseModel::InterceptResend { share, basis } => {
                check_share(*share)?;
                if let EveBasis::Fixed(t) = basis {
                    let labels = basis_labels(scheme.share_dim());
                    if !labels.contains(t) {
                        return Err(Error::UnsupportedBasis {
                            q: scheme.share_dim(),
                            t: *t,
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// One RCQ measurement round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub index: usize,
    /// Dealer basis label t.
    pub dealer_basis: usize,
    /// Dealer outcome r(t).
    pub dealer_outcome: usize,
    /// Player basis label t'.
    pub player_basis: usize,
    /// Player outcome s(t'); None when the round was lost to erasure.
    pub player_outcome: Option<usize>,
    pub sifted: bool,
}

/// RCQ session parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionConfig {
    pub rounds: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    /// Abort when the estimated error rate exceeds this threshold.
    pub abort_qber: f64,
    /// Fraction of sifted rounds sacrificed for error estimation.
    pub test_fraction: f64,
    /// Compression factor of privacy amplification.
    pub pa_output_rate: f64,
}

impl SessionConfig {
    pub fn new(rounds: usize, seed: u64) -> Self {
        SessionConfig {
            rounds,
            seed,
            noise: NoiseModel::None,
            abort_qber: 0.11,
            test_fraction: 0.5,
            pa_output_rate: 0.5,
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidShape("session needs at least one round".into()));
        }
        if !(0.0..=1.0).contains(&self.abort_qber) {
            return Err(Error::InvalidShape(format!(
                "abort threshold {} not in [0,1]",
                self.abort_qber
            )));
        }
        for (name, v) in [
            ("test_fraction", self.test_fraction),
            ("pa_output_rate", self.pa_output_rate),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidShape(format!("{name} {v} not in (0,1)")));
            }
        }
        Ok(())
    }
}

/// Full record of an RCQ run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionTranscript {
    pub rounds: Vec<RoundRecord>,
    pub sifted_key_dealer: Vec<u8>,
    pub sifted_key_players: Vec<u8>,
    /// Positions into the sifted key sacrificed for error estimation.
    pub test_positions: Vec<usize>,
    pub qber_estimate: f64,
    pub aborted: bool,
    /// Privacy-amplified key digits (dealer side); empty when aborted.
    pub final_key: Vec<u8>,
    pub config: SessionConfig,
}

impl SessionTranscript {
    pub fn sift_count(&self) -> usize {
        self.sifted_key_dealer.len()
    }

    /// Fraction of sifted rounds whose outcomes agree.
    pub fn sifted_agreement(&self) -> f64 {
        if self.sifted_key_dealer.is_empty() {
            return 1.0;
        }
        let agree = self
            .sifted_key_dealer
            .iter()
            .zip(&self.sifted_key_players)
            .filter(|(a, b)| a == b)
            .count();
        agree as f64 / self.sifted_key_dealer.len() as f64
    }
}

/// Counter-based per-round generator: a pure function of (seed, index).
pub fn round_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

fn session_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Samples an index from unnormalized probabilities with one uniform draw.
fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = probs.iter().sum();
    let draw: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            return i;
        }
    }
    // rounding pushed the draw past the last bin: take the last viable one
    probs
        .iter()
        .rposition(|&p| p > 1e-300)
        .unwrap_or(probs.len() - 1)
}

/// Teleports a secret through the channel state.
///
/// Returns the post-correction share register (the logical encoding of the
/// secret, exactly) together with the generalized Bell outcome (a, b). The
/// outcome distribution is uniform over q^2 for every input secret.
pub fn teleport_encode(
    scheme: &Scheme,
    secret: &PureState,
    rng: &mut impl Rng,
) -> Result<(PureState, (usize, usize))> {
    let q = scheme.share_dim();
    if !scheme.is_ideal() {
        return Err(Error::NonIdealScheme {
            kappa: scheme.secret_dim(),
            q,
        });
    }
    if secret.shape().total_dim() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: secret.shape().total_dim(),
        });
    }
    let a = rng.gen_range(0..q);
    let b = rng.gen_range(0..q);
    let state = teleported_state(scheme, secret, a, b)?;
    Ok((state, (a, b)))
}

/// Post-correction share register for a fixed Bell outcome (a, b).
///
/// Projecting the dealer pair onto the Bell state (I ⊗ X^a Z^b)|Φ_q⟩ leaves
/// the players holding the logical image of X^a Z^{-b}|ζ⟩; the correction
/// undoes that displacement at the logical level, so the result is the
/// encoding of the secret itself for every outcome.
pub fn teleported_state(
    scheme: &Scheme,
    secret: &PureState,
    a: usize,
    b: usize,
) -> Result<PureState> {
    let q = scheme.share_dim();
    let w = omega(q);
    let alpha = secret.amplitudes();
    // pre-correction logical amplitudes: β_i = α_{i-a} ω^{-(i-a)b}
    let mut beta = CVector::zeros(q);
    for i in 0..q {
        let src = (i + q - a % q) % q;
        beta[i] = alpha[src] * w.powu(((q - b % q) % q * src % q) as u32);
    }
    // logical correction Z^b X^{-a}
    let (x, z, _) = pauli_ops(q);
    let mut correction = CMatrix::identity(q, q);
    for _ in 0..b {
        correction = &z * correction;
    }
    let mut x_inv = CMatrix::identity(q, q);
    for _ in 0..(q - a % q) % q {
        x_inv = &x * x_inv;
    }
    correction *= x_inv;
    let corrected = correction * beta;
    let logical = PureState::new(SystemShape::new(&[q])?, corrected)?;
    scheme.encode(&logical)
}

/// Outcome of one QQ protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqRun {
    pub bell_outcome: (usize, usize),
    pub fidelity: f64,
}

/// Runs the QQ protocol end to end for an authorised set: teleport the
/// secret through the channel state, decode, and compare.
pub fn qq_run(
    scheme: &Scheme,
    subset: &[usize],
    secret: &PureState,
    rng: &mut impl Rng,
) -> Result<QqRun> {
    let decoder = synthesize_decoder(scheme, subset)?;
    qq_run_with(scheme, &decoder, secret, rng)
}

/// As `qq_run` with a pre-synthesized decoder.
pub fn qq_run_with(
    scheme: &Scheme,
    decoder: &Decoder,
    secret: &PureState,
    rng: &mut impl Rng,
) -> Result<QqRun> {
    let (shares, outcome) = teleport_encode(scheme, secret, rng)?;
    let decoded = decoder.decode_state(&shares)?;
    let recovered = partial_trace_pure(&decoded, &[0])?;
    Ok(QqRun {
        bell_outcome: outcome,
        fidelity: recovered.fidelity_with_pure(secret)?,
    })
}

/// Prepared bases and states reused across RCQ rounds.
struct RoundEngine<'a> {
    scheme: &'a Scheme,
    decoder: &'a Decoder,
    labels: Vec<usize>,
    dealer_bases: Vec<OrthonormalBasis>,
    /// Player measurement bases: entrywise conjugates of the dealer bases,
    /// so that matched bases give identical outcomes on the channel state.
    player_bases: Vec<OrthonormalBasis>,
    channel: PureState,
    paulis: (CMatrix, CMatrix),
}

impl<'a> RoundEngine<'a> {
    fn new(scheme: &'a Scheme, decoder: &'a Decoder, noise: &NoiseModel) -> Result<Self> {
        let q = scheme.share_dim();
        if !scheme.is_ideal() {
            return Err(Error::NonIdealScheme {
                kappa: scheme.secret_dim(),
                q,
            });
        }
        noise.validate(scheme)?;
        let labels = basis_labels(q);
        let dealer_bases: Vec<OrthonormalBasis> = labels
            .iter()
            .map(|&t| mub_basis(q, t))
            .collect::<Result<Vec<_>>>()?;
        let player_bases = dealer_bases.iter().map(|b| b.conjugated()).collect();
        let channel = purified_channel_state(scheme)?;
        let (x, z, _) = pauli_ops(q);
        Ok(RoundEngine {
            scheme,
            decoder,
            labels,
            dealer_bases,
            player_bases,
            channel,
            paulis: (x, z),
        })
    }

    fn random_pauli(&self, rng: &mut impl Rng) -> CMatrix {
        let q = self.scheme.share_dim();
        let a = rng.gen_range(0..q);
        let b = rng.gen_range(0..q);
        let (x, z) = &self.paulis;
        let mut op = CMatrix::identity(q, q);
        for _ in 0..a {
            op = x * op;
        }
        for _ in 0..b {
            op = z * op;
        }
        op
    }

    fn run_round(&self, index: usize, rng: &mut impl Rng, noise: &NoiseModel) -> Result<RoundRecord> {
        let q = self.scheme.share_dim();
        // dealer picks a basis and measures her half of the channel state
        let t_idx = rng.gen_range(0..self.labels.len());
        let dealer_basis = &self.dealer_bases[t_idx];
        let probs = measurement_probabilities(&self.channel, 0, dealer_basis)?;
        let r = sample_index(&probs, rng);
        let (mut players, _) = project_out(&self.channel, 0, dealer_basis.vector(r))?;

        // channel noise on the share register
        let mut erased = false;
        match noise {
            NoiseModel::None => {}
            NoiseModel::Erasure { p, .. } => {
                if rng.gen::<f64>() < *p {
                    erased = true;
                }
            }
            NoiseModel::Depolarizing {
                target: NoiseTarget::Share(s),
                p,
            } => {
                if rng.gen::<f64>() < *p {
                    let op = self.random_pauli(rng);
                    players = apply_to_subsystems(&players, &op, &[*s], &[q])?;
                    players = restore_order(&players, *s)?;
                }
            }
            NoiseModel::Depolarizing {
                target: NoiseTarget::Decoded,
                ..
            } => {}
            NoiseModel::InterceptResend { share, basis } => {
                let t_eve = match basis {
                    EveBasis::Fixed(t) => *t,
                    EveBasis::Random => self.labels[rng.gen_range(0..self.labels.len())],
                };
                let eve_basis = mub_basis(q, t_eve)?;
                let eve_probs = measurement_probabilities(&players, *share, &eve_basis)?;
                let e = sample_index(&eve_probs, rng);
                // project and resend: the share collapses onto |e(t_eve)>
                let v = eve_basis.vector(e);
                let projector = v * v.adjoint();
                players = apply_to_subsystems(&players, &projector, &[*share], &[q])?;
                players = restore_order(&players, *share)?;
            }
        }

        let t_prime_idx = rng.gen_range(0..self.labels.len());
        let player_outcome = if erased {
            None
        } else {
            let mut decoded = self.decoder.decode_state(&players)?;
            if let NoiseModel::Depolarizing {
                target: NoiseTarget::Decoded,
                p,
            } = noise
            {
                if rng.gen::<f64>() < *p {
                    let op = self.random_pauli(rng);
                    decoded = apply_to_subsystems(&decoded, &op, &[0], &[q])?;
                }
            }
            let player_basis = &self.player_bases[t_prime_idx];
            let out_probs = measurement_probabilities(&decoded, 0, player_basis)?;
            Some(sample_index(&out_probs, rng))
        };

        let sifted = !erased && t_idx == t_prime_idx;
        Ok(RoundRecord {
            index,
            dealer_basis: self.labels[t_idx],
            dealer_outcome: r,
            player_basis: self.labels[t_prime_idx],
            player_outcome,
            sifted,
        })
    }
}

/// Moves the front subsystem of an `apply_to_subsystems` result back to its
/// original position, restoring the register layout.
fn restore_order(state: &PureState, original_pos: usize) -> Result<PureState> {
    if original_pos == 0 {
        return Ok(state.clone());
    }
    let n = state.shape().num_systems();
    // the register currently reads [orig_pos, 0, .., orig_pos-1, orig_pos+1, ..];
    // listing current positions in restored order undoes the move
    let mut order: Vec<usize> = (1..=original_pos).collect();
    order.push(0);
    order.extend(original_pos + 1..n);
    let m = state.as_bipartite_matrix(&order)?;
    let d = state.shape().total_dim();
    let mut v = CVector::zeros(d);
    for i in 0..d {
        v[i] = m[(i, 0)];
    }
    let dims: Vec<usize> = order.iter().map(|&p| state.shape().dim_at(p)).collect();
    PureState::new(SystemShape::new(&dims)?, v)
}

/// Executes one RCQ round with externally supplied randomness.
pub fn rcq_round(
    scheme: &Scheme,
    decoder: &Decoder,
    index: usize,
    rng: &mut impl Rng,
    noise: &NoiseModel,
) -> Result<RoundRecord> {
    RoundEngine::new(scheme, decoder, noise)?.run_round(index, rng, noise)
}

/// Runs a full RCQ session: rounds, sifting, error estimation, abort
/// decision and privacy amplification. Deterministic given the seed.
pub fn rcq_session(
    scheme: &Scheme,
    subset: &[usize],
    config: &SessionConfig,
) -> Result<SessionTranscript> {
    config.validate()?;
    let decoder = synthesize_decoder(scheme, subset)?;
    let engine = RoundEngine::new(scheme, &decoder, &config.noise)?;
    let mut rounds = Vec::with_capacity(config.rounds);
    for i in 0..config.rounds {
        let mut rng = round_rng(config.seed, i as u64);
        rounds.push(engine.run_round(i, &mut rng, &config.noise)?);
    }

    let mut sifted_key_dealer = Vec::new();
    let mut sifted_key_players = Vec::new();
    for record in &rounds {
        if record.sifted {
            sifted_key_dealer.push(record.dealer_outcome as u8);
            sifted_key_players.push(record.player_outcome.expect("sifted round has outcome") as u8);
        }
    }

    // deterministic sacrifice of a fraction of the sifted key
    let mut post_rng = session_rng(config.seed);
    let sift_count = sifted_key_dealer.len();
    let test_count = (config.test_fraction * sift_count as f64).floor() as usize;
    let mut indices: Vec<usize> = (0..sift_count).collect();
    for j in 0..test_count {
        let pick = j + post_rng.gen_range(0..sift_count - j);
        indices.swap(j, pick);
    }
    let mut test_positions: Vec<usize> = indices[..test_count].to_vec();
    test_positions.sort_unstable();

    let mismatches = test_positions
        .iter()
        .filter(|&&i| sifted_key_dealer[i] != sifted_key_players[i])
        .count();
    let qber_estimate = if test_count > 0 {
        mismatches as f64 / test_count as f64
    } else {
        0.0
    };
    let aborted = qber_estimate > config.abort_qber;

    let final_key = if aborted {
        Vec::new()
    } else {
        let remaining: Vec<u8> = (0..sift_count)
            .filter(|i| test_positions.binary_search(i).is_err())
            .map(|i| sifted_key_dealer[i])
            .collect();
        let out_len = (config.pa_output_rate * remaining.len() as f64).floor() as usize;
        let pa_seed = post_rng.next_u64();
        privacy_amplification(&remaining, scheme.share_dim(), out_len, pa_seed)?
    };

    Ok(SessionTranscript {
        rounds,
        sifted_key_dealer,
        sifted_key_players,
        test_positions,
        qber_estimate,
        aborted,
        final_key,
        config: *config,
    })
}

/// Toeplitz-matrix universal hash over Z_q.
///
/// The matrix diagonals are drawn from a seeded generator, so the same seed
/// and input always produce the same output.
pub fn privacy_amplification(
    key: &[u8],
    q: usize,
    out_len: usize,
    seed: u64,
) -> Result<Vec<u8>> {
    if out_len > key.len() {
        return Err(Error::LengthError {
            out_len,
            in_len: key.len(),
        });
    }
    if out_len == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag_count = out_len + key.len() - 1;
    let diagonals: Vec<u64> = (0..diag_count)
        .map(|_| rng.gen_range(0..q as u64))
        .collect();
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let mut acc: u64 = 0;
        for (i, &digit) in key.iter().enumerate() {
            // entry T[j,i] = diagonals[i - j + out_len - 1]
            let t = diagonals[i + out_len - 1 - j];
            acc = (acc + t * digit as u64) % q as u64;
        }
        out.push(acc as u8);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;

    use crate::qudit::C64;
    use crate::scheme::{cgl23_scheme, discard_shares, five_qubit_scheme, ghz_scheme};

    fn random_secret(dim: usize, rng: &mut impl Rng) -> PureState {
        let mut v = CVector::from_fn(dim, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let norm = v.norm();
        v /= C64::new(norm, 0.0);
        PureState::new(SystemShape::new(&[dim]).unwrap(), v).unwrap()
    }

    #[test]
    fn teleport_identity_without_correction() {
        // outcome (0,0) needs no correction: the shares carry the encoding
        let mut rng = StdRng::seed_from_u64(3);
        let s = cgl23_scheme();
        let secret = random_secret(3, &mut rng);
        let state = teleported_state(&s, &secret, 0, 0).unwrap();
        let expect = s.encode(&secret).unwrap();
        assert!((state.inner(&expect).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn teleport_every_outcome_recovers_exactly() {
        let mut rng = StdRng::seed_from_u64(4);
        for s in [cgl23_scheme(), ghz_scheme(3, 2).unwrap()] {
            let q = s.share_dim();
            let secret = random_secret(q, &mut rng);
            let expect = s.encode(&secret).unwrap();
            for a in 0..q {
                for b in 0..q {
                    let state = teleported_state(&s, &secret, a, b).unwrap();
                    let overlap = state.inner(&expect).norm();
                    assert!(
                        (overlap - 1.0).abs() < 1e-10,
                        "outcome ({a},{b}) overlap {overlap}"
                    );
                }
            }
        }
    }

    #[test]
    fn teleport_matches_explicit_bell_projection() {
        // independent oracle: build |ζ⟩_{d'} ⊗ |CS⟩, project (d', d) onto the
        // Bell state (I ⊗ X^a Z^b)|Φ_q⟩, and compare with the closed form
        let mut rng = StdRng::seed_from_u64(5);
        let s = cgl23_scheme();
        let q = 3usize;
        let secret = random_secret(q, &mut rng);
        let channel = purified_channel_state(&s).unwrap();
        let joint = secret.tensor(&channel).unwrap();
        let (x, z, _) = pauli_ops(q);
        for a in 0..q {
            for b in 0..q {
                let mut op = CMatrix::identity(q, q);
                for _ in 0..a {
                    op = &x * op;
                }
                for _ in 0..b {
                    op = &z * op;
                }
                let phi = crate::qudit::max_entangled(q).unwrap();
                let bell_vec = apply_to_subsystems(&phi, &op, &[1], &[q]).unwrap();
                // bell_vec systems are (second, first); reorder to (d', d)
                let bell = restore_order(&bell_vec, 1).unwrap();
                // project the pair (positions 0,1) of the joint state
                let m = joint.as_bipartite_matrix(&[0, 1]).unwrap();
                let projected = bell.amplitudes().adjoint() * m;
                let norm = projected.norm();
                assert!((norm * norm - 1.0 / (q * q) as f64).abs() < 1e-10);
                let players = CVector::from_iterator(
                    projected.len(),
                    projected.iter().map(|c| c / C64::new(norm, 0.0)),
                );
                let oracle =
                    PureState::new(s.share_shape(), players).unwrap();
                let pre_correction = {
                    // closed form before correction: encode X^a Z^{-b} ζ
                    let w = omega(q);
                    let alpha = secret.amplitudes();
                    let mut beta = CVector::zeros(q);
                    for i in 0..q {
                        let src = (i + q - a) % q;
                        beta[i] = alpha[src] * w.powu((((q - b) % q) * src % q) as u32);
                    }
                    let logical =
                        PureState::new(SystemShape::new(&[q]).unwrap(), beta).unwrap();
                    s.encode(&logical).unwrap()
                };
                let overlap = oracle.inner(&pre_correction).norm();
                assert!(
                    (overlap - 1.0).abs() < 1e-10,
                    "Bell projection mismatch at ({a},{b}): {overlap}"
                );
            }
        }
    }

    #[test]
    fn bell_outcomes_are_uniform() {
        let s = cgl23_scheme();
        let mut rng = StdRng::seed_from_u64(12);
        let secret = random_secret(3, &mut rng);
        let m = 4500usize;
        let mut counts = vec![0usize; 9];
        for _ in 0..m {
            let (_, (a, b)) = teleport_encode(&s, &secret, &mut rng).unwrap();
            counts[a * 3 + b] += 1;
        }
        let expect = m as f64 / 9.0;
        let sigma = (m as f64 * (1.0 / 9.0) * (8.0 / 9.0)).sqrt();
        for &c in &counts {
            assert!((c as f64 - expect).abs() < 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn qq_run_examples() {
        let mut rng = StdRng::seed_from_u64(21);
        let s = cgl23_scheme();
        for _ in 0..20 {
            let secret = random_secret(3, &mut rng);
            let run = qq_run(&s, &[0, 2], &secret, &mut rng).unwrap();
            assert!(run.fidelity >= 1.0 - 1e-9);
        }
        let five = five_qubit_scheme();
        for _ in 0..10 {
            let secret = random_secret(2, &mut rng);
            let run = qq_run(&five, &[1, 3, 4], &secret, &mut rng).unwrap();
            assert!(run.fidelity >= 1.0 - 1e-9);
        }
        assert!(matches!(
            qq_run(&s, &[0], &random_secret(3, &mut rng), &mut rng),
            Err(Error::NotAuthorized { .. })
        ));
    }

    #[test]
    fn dealer_outcomes_are_uniform_in_every_basis() {
        // the channel state makes every dealer measurement unbiased exactly
        for s in [cgl23_scheme(), five_qubit_scheme(), ghz_scheme(3, 3).unwrap()] {
            let cs = purified_channel_state(&s).unwrap();
            let q = s.share_dim();
            for t in basis_labels(q) {
                let basis = mub_basis(q, t).unwrap();
                let probs = measurement_probabilities(&cs, 0, &basis).unwrap();
                for p in probs {
                    assert!((p - 1.0 / q as f64).abs() < 1e-12, "{} t={t}", s.name());
                }
            }
        }
    }

    #[test]
    fn rcq_noiseless_rounds_agree_when_sifted() {
        let s = cgl23_scheme();
        let decoder = synthesize_decoder(&s, &[0, 1]).unwrap();
        for i in 0..400usize {
            let mut rng = round_rng(99, i as u64);
            let record = rcq_round(&s, &decoder, i, &mut rng, &NoiseModel::None).unwrap();
            if record.sifted {
                assert_eq!(Some(record.dealer_outcome), record.player_outcome);
            }
        }
    }

    #[test]
    fn rcq_mismatched_bases_are_uniform() {
        // conditional on t != t', outcomes decorrelate completely
        let s = cgl23_scheme();
        let decoder = synthesize_decoder(&s, &[0, 1]).unwrap();
        let mut matches = 0usize;
        let mut total = 0usize;
        for i in 0..3000usize {
            let mut rng = round_rng(7, i as u64);
            let record = rcq_round(&s, &decoder, i, &mut rng, &NoiseModel::None).unwrap();
            if !record.sifted {
                total += 1;
                if record.player_outcome == Some(record.dealer_outcome) {
                    matches += 1;
                }
            }
        }
        let rate = matches as f64 / total as f64;
        let sigma = ((1.0 / 3.0) * (2.0 / 3.0) / total as f64).sqrt();
        assert!((rate - 1.0 / 3.0).abs() < 4.0 * sigma, "rate {rate}");
    }

    #[test]
    fn rcq_session_noiseless_statistics() {
        let s = cgl23_scheme();
        let config = SessionConfig::new(2000, 7);
        let t = rcq_session(&s, &[0, 1], &config).unwrap();
        assert!(!t.aborted);
        assert_eq!(t.qber_estimate, 0.0);
        assert!((t.sifted_agreement() - 1.0).abs() < 1e-12);
        // sift rate ~ 1/(q+1) = 1/4
        let expect = 2000.0 / 4.0;
        let sigma = (2000.0_f64 * 0.25 * 0.75).sqrt();
        assert!((t.sift_count() as f64 - expect).abs() < 3.0 * sigma);
        assert!(!t.final_key.is_empty());
        assert!(t.final_key.iter().all(|&d| d < 3));
    }

    #[test]
    fn rcq_session_is_deterministic() {
        let s = cgl23_scheme();
        let config = SessionConfig::new(300, 1234);
        let a = rcq_session(&s, &[1, 2], &config).unwrap();
        let b = rcq_session(&s, &[1, 2], &config).unwrap();
        assert_eq!(a, b);
        let different_seed = SessionConfig::new(300, 1235);
        let c = rcq_session(&s, &[1, 2], &different_seed).unwrap();
        assert_ne!(a.rounds, c.rounds);
    }

    #[test]
    fn depolarized_output_decorrelates_at_full_strength() {
        let s = cgl23_scheme();
        let config = SessionConfig::new(3000, 5).with_noise(NoiseModel::Depolarizing {
            target: NoiseTarget::Decoded,
            p: 1.0,
        });
        let t = rcq_session(&s, &[0, 1], &config).unwrap();
        // fully mixed output: sifted agreement ~ 1/q and the session aborts
        let n = t.sift_count() as f64;
        let sigma = ((1.0 / 3.0) * (2.0 / 3.0) / n).sqrt();
        assert!((t.sifted_agreement() - 1.0 / 3.0).abs() < 4.0 * sigma);
        assert!(t.aborted);
        assert!(t.final_key.is_empty());
    }

    #[test]
    fn noise_outside_the_authorised_set_is_harmless() {
        let s = cgl23_scheme();
        let config = SessionConfig::new(800, 42).with_noise(NoiseModel::Depolarizing {
            target: NoiseTarget::Share(2),
            p: 1.0,
        });
        let t = rcq_session(&s, &[0, 1], &config).unwrap();
        assert_eq!(t.qber_estimate, 0.0);
        assert!(!t.aborted);
        assert!((t.sifted_agreement() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn erasure_drops_rounds() {
        let s = cgl23_scheme();
        let config = SessionConfig::new(1000, 9).with_noise(NoiseModel::Erasure {
            share: 0,
            p: 0.5,
        });
        let t = rcq_session(&s, &[0, 1], &config).unwrap();
        let lost = t.rounds.iter().filter(|r| r.player_outcome.is_none()).count();
        let sigma = (1000.0f64 * 0.25).sqrt();
        assert!((lost as f64 - 500.0).abs() < 3.0 * sigma);
        assert!(t.rounds.iter().all(|r| r.player_outcome.is_some() || !r.sifted));
        assert_eq!(t.qber_estimate, 0.0);
    }

    #[test]
    fn mixed_scheme_sessions_work() {
        let dropped = discard_shares(&five_qubit_scheme(), &[4]).unwrap();
        let config = SessionConfig::new(600, 3);
        let t = rcq_session(&dropped, &[0, 1, 2], &config).unwrap();
        assert!((t.sifted_agreement() - 1.0).abs() < 1e-12);
        assert!(!t.aborted);
    }

    #[test]
    fn privacy_amplification_properties() {
        let key: Vec<u8> = vec![0, 1, 2, 1, 0, 2, 2, 1];
        let a = privacy_amplification(&key, 3, 4, 77).unwrap();
        let b = privacy_amplification(&key, 3, 4, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert!(matches!(
            privacy_amplification(&key, 3, 9, 0),
            Err(Error::LengthError { .. })
        ));
        // identical inputs yield identical outputs at full length
        let c = privacy_amplification(&key, 3, 8, 123).unwrap();
        let d = privacy_amplification(&key, 3, 8, 123).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn privacy_amplification_separates_differing_keys() {
        // universal-hash property: collisions at rate ~ q^{-out_len}
        let key_a: Vec<u8> = vec![0, 1, 2, 1, 0, 2];
        let mut key_b = key_a.clone();
        key_b[3] = 0;
        let trials = 400;
        let collisions = (0..trials)
            .filter(|&seed| {
                privacy_amplification(&key_a, 3, 3, seed).unwrap()
                    == privacy_amplification(&key_b, 3, 3, seed).unwrap()
            })
            .count();
        // expected collision rate 3^-3 ~ 3.7%; allow generous slack
        assert!(collisions < 40, "collisions {collisions}");
    }

    #[test]
    fn session_config_validation() {
        let s = cgl23_scheme();
        let mut config = SessionConfig::new(0, 1);
        assert!(rcq_session(&s, &[0, 1], &config).is_err());
        config = SessionConfig::new(10, 1);
        config.test_fraction = 1.0;
        assert!(rcq_session(&s, &[0, 1], &config).is_err());
        let bad_noise = SessionConfig::new(10, 1).with_noise(NoiseModel::Depolarizing {
            target: NoiseTarget::Share(9),
            p: 0.5,
        });
        assert!(rcq_session(&s, &[0, 1], &bad_noise).is_err());
        assert!(matches!(
            rcq_session(&s, &[2], &SessionConfig::new(10, 1)),
            Err(Error::NotAuthorized { .. })
        ));
    }
}
