//! Decoder synthesis for authorised sets.
//!
//! Recovery from a subset B is possible exactly when the Gram blocks of the
//! logical basis, reshaped across the B/complement cut, are proportional to a
//! single positive operator. When they are, an isometry on B's shares moves
//! the secret onto a dedicated output system and leaves an input-independent
//! junk state behind.

use crate::error::{Error, Result};
use crate::qudit::{
    apply_to_subsystems, matmul, partial_trace_pure, C64, CMatrix, CVector, PureState,
    SystemShape,
};
use crate::scheme::Scheme;

/// Erasure residual above which a subset is rejected as not authorised.
pub const AUTHORISED_RESIDUAL: f64 = 1e-8;

/// Eigenvalue cutoff when inverting the Gram operator.
const RANK_CUTOFF: f64 = 1e-10;

/// Largest share-space dimension for which the recovery isometry is
/// materialized densely, completion included. Above it the decoder keeps
/// only the code-space block and rejects inputs outside it.
const DENSE_COMPLETION_LIMIT: usize = 1024;

/// Residual above which the cheap trace-based screen rejects outright; in
/// the band between it and `AUTHORISED_RESIDUAL` the exact blocks decide.
const FAST_DECISION: f64 = 1e-4;

/// Logical basis states reshaped across the B/complement cut, with the
/// validation shared by every erasure check. Discarded shares sit on the
/// complement side.
fn logical_blocks(scheme: &Scheme, subset: &[usize]) -> Result<(Vec<usize>, Vec<CMatrix>)> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != subset.len() {
        return Err(Error::InvalidSubset("repeated player".into()));
    }
    let active = scheme.active_positions();
    for &p in &sorted {
        if !active.contains(&p) {
            return Err(Error::InvalidSubset(format!(
                "player {p} is not an active share"
            )));
        }
    }
    let blocks = (0..scheme.secret_dim())
        .map(|i| {
            let state = scheme.logical_state(i)?;
            state.as_bipartite_matrix(&sorted)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((sorted, blocks))
}

fn exact_gram(blocks: &[CMatrix]) -> (CMatrix, f64) {
    let kappa = blocks.len();
    let d_comp = blocks[0].ncols();
    let adjoints: Vec<CMatrix> = blocks.iter().map(|b| b.adjoint()).collect();
    let mut sigma = CMatrix::zeros(d_comp, d_comp);
    for (adj, block) in adjoints.iter().zip(blocks) {
        sigma += matmul(adj, block);
    }
    sigma /= C64::new(kappa as f64, 0.0);
    let mut residual = 0.0f64;
    for (i, adj) in adjoints.iter().enumerate() {
        for (j, block) in blocks.iter().enumerate() {
            let gram = matmul(adj, block);
            let dev = if i == j { &gram - &sigma } else { gram };
            residual = residual.max(dev.norm());
        }
    }
    (sigma, residual)
}

/// Residual of the erasure condition from the share-side operators
/// Q_il = M_i M_l†, which stay d_B x d_B however large the complement is:
/// ‖G_ij‖² = Tr(Q_ii Q_jj) and Tr(G_ii G_ll) = ‖Q_il‖².
///
/// Exact in value but computed through differences of traces, so its noise
/// floor sits near √ε; it can only reject, not accept.
fn fast_residual(blocks: &[CMatrix]) -> f64 {
    let kappa = blocks.len();
    let products: Vec<Vec<CMatrix>> = blocks
        .iter()
        .map(|bi| {
            blocks
                .iter()
                .map(|bl| matmul(bi, &bl.adjoint()))
                .collect()
        })
        .collect();
    let overlaps: Vec<Vec<f64>> = (0..kappa)
        .map(|i| (0..kappa).map(|l| products[i][l].norm_squared()).collect())
        .collect();
    let total: f64 = overlaps.iter().flatten().sum();
    let mut worst_sq = 0.0f64;
    for i in 0..kappa {
        for j in 0..kappa {
            if i == j {
                let cross: f64 = (0..kappa).map(|l| overlaps[i][l]).sum();
                let dev = overlaps[i][i] - 2.0 * cross / kappa as f64
                    + total / (kappa * kappa) as f64;
                worst_sq = worst_sq.max(dev.max(0.0));
            } else {
                let off = (&products[i][i] * &products[j][j]).trace().re;
                worst_sq = worst_sq.max(off.max(0.0));
            }
        }
    }
    worst_sq.sqrt()
}

/// Residual of the erasure condition for recovery from subset B, zero
/// exactly when B can recover the encoded space.
///
/// Dispatches between the direct block computation and the share-side
/// screen, picking whichever avoids materializing the large side of the cut;
/// ambiguous screen results fall back to the direct computation.
pub fn erasure_residual(scheme: &Scheme, subset: &[usize]) -> Result<f64> {
    let (_, blocks) = logical_blocks(scheme, subset)?;
    let d_b = blocks[0].nrows();
    let d_comp = blocks[0].ncols();
    if d_comp <= d_b {
        return Ok(exact_gram(&blocks).1);
    }
    let fast = fast_residual(&blocks);
    if fast >= FAST_DECISION {
        return Ok(fast);
    }
    Ok(exact_gram(&blocks).1)
}

/// Gram data of the erasure condition for a subset B.
///
/// `sigma` is the average diagonal block; the residual is the largest
/// Frobenius norm among the off-diagonal blocks and the deviations of the
/// diagonal blocks from `sigma`. Recovery from B is possible iff the residual
/// vanishes.
pub fn erasure_gram(scheme: &Scheme, subset: &[usize]) -> Result<(CMatrix, f64)> {
    let (_, blocks) = logical_blocks(scheme, subset)?;
    Ok(exact_gram(&blocks))
}

/// How the recovery map is stored and applied.
#[derive(Debug, Clone)]
enum RecoveryMap {
    /// Full isometry on B's share space, completion included.
    Full(CMatrix),
    /// Only the code-space columns, as the d_B x (kappa * rank) matrix whose
    /// column i*rank+k is v_{i,k}. Inputs outside the span are rejected.
    CodeSpace(CMatrix),
}

/// Recovery isometry for an authorised subset.
///
/// Applying it to B's shares produces (secret, junk) in place of B, with the
/// secret on the first output system. For share spaces too large to carry a
/// dense completion, only states inside the code space can be decoded, which
/// covers every encoded input.
#[derive(Debug, Clone)]
pub struct Decoder {
    subset: Vec<usize>,
    secret_dim: usize,
    junk_dim: usize,
    rank: usize,
    map: RecoveryMap,
    junk_state: CVector,
    residual: f64,
}

impl Decoder {
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn secret_dim(&self) -> usize {
        self.secret_dim
    }

    pub fn junk_dim(&self) -> usize {
        self.junk_dim
    }

    /// Rank of the Gram operator (Schmidt rank of the codewords across the cut).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The dense recovery isometry, when one was materialized.
    pub fn isometry(&self) -> Option<&CMatrix> {
        match &self.map {
            RecoveryMap::Full(w) => Some(w),
            RecoveryMap::CodeSpace(_) => None,
        }
    }

    /// The input-independent residue left on (junk, complement) when decoding
    /// a logical basis state.
    pub fn junk_state(&self) -> &CVector {
        &self.junk_state
    }

    /// Erasure residual measured during synthesis.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Applies the decoder to a state on the full share register.
    ///
    /// The output systems are (secret, junk, remaining shares in original
    /// order); the secret sits at position 0.
    pub fn decode_state(&self, state: &PureState) -> Result<PureState> {
        match &self.map {
            RecoveryMap::Full(w) => apply_to_subsystems(
                state,
                w,
                &self.subset,
                &[self.secret_dim, self.junk_dim],
            ),
            RecoveryMap::CodeSpace(vectors) => {
                let a = state.as_bipartite_matrix(&self.subset)?;
                let coeffs = matmul(&vectors.adjoint(), &a); // (kappa*rank) x d_rest
                let kept: f64 = coeffs.norm_squared();
                let total: f64 = a.norm_squared();
                if (total - kept).abs() > 1e-9 * total.max(1.0) {
                    return Err(Error::InvariantViolation(format!(
                        "decoder input leaves the code space (residual {:.3e}); \
                         the completion is not materialized for subsets this large",
                        total - kept
                    )));
                }
                let rank = self.rank;
                let junk = self.junk_dim;
                let d_rest = a.ncols();
                let rest: Vec<usize> = state.shape().complement(&self.subset);
                let mut dims = vec![self.secret_dim, junk];
                dims.extend(rest.iter().map(|&p| state.shape().dim_at(p)));
                let shape = SystemShape::new(&dims)?;
                let mut out = CVector::zeros(shape.total_dim());
                for i in 0..self.secret_dim {
                    for k in 0..rank {
                        for c in 0..d_rest {
                            out[(i * junk + k) * d_rest + c] = coeffs[(i * rank + k, c)];
                        }
                    }
                }
                let norm = out.norm();
                Ok(PureState::from_trusted(shape, out / C64::new(norm, 0.0)))
            }
        }
    }
}

/// Synthesizes the recovery isometry for subset B from the Gram operator.
///
/// The Gram operator σ is diagonalized; for each logical index i and each
/// eigenpair (λ_k, e_k) the vector M_i e_k / √λ_k lies in B's share space and
/// the whole family is orthonormal, so mapping it to |i⟩⊗|k⟩ and completing
/// on the orthogonal complement defines the isometry. The completion is a
/// deterministic Gram-Schmidt sweep over the computational basis.
pub fn synthesize_decoder(scheme: &Scheme, subset: &[usize]) -> Result<Decoder> {
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    // quick rejection avoids building the complement-side Gram blocks for
    // far-from-authorised subsets
    let screened = erasure_residual(scheme, subset)?;
    if screened >= AUTHORISED_RESIDUAL {
        return Err(Error::NotAuthorized {
            subset: sorted,
            residual: screened,
        });
    }
    let (sigma, residual) = erasure_gram(scheme, subset)?;
    if residual >= AUTHORISED_RESIDUAL {
        return Err(Error::NotAuthorized {
            subset: sorted,
            residual,
        });
    }
    let kappa = scheme.secret_dim();
    let d_b: usize = scheme.share_dim().pow(sorted.len() as u32);

    let eigen = sigma.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, CVector)> = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > RANK_CUTOFF)
        .map(|(k, &l)| (l, eigen.eigenvectors.column(k).clone_owned()))
        .collect();
    // descending eigenvalue order keeps the construction reproducible
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
    let rank = pairs.len();
    let junk_dim = rank.max(d_b.div_ceil(kappa));

    let blocks: Vec<CMatrix> = (0..kappa)
        .map(|i| scheme.logical_state(i)?.as_bipartite_matrix(&sorted))
        .collect::<Result<Vec<_>>>()?;

    let mut code_vectors = CMatrix::zeros(d_b, kappa * rank);
    for (i, block) in blocks.iter().enumerate() {
        for (k, (lambda, e)) in pairs.iter().enumerate() {
            let v = (block * e) / C64::new(lambda.sqrt(), 0.0);
            code_vectors.set_column(i * rank + k, &v);
        }
    }

    // the i-independent residue on (junk, complement)
    let d_comp = blocks[0].ncols();
    let mut junk_state = CVector::zeros(junk_dim * d_comp);
    for (k, (lambda, e)) in pairs.iter().enumerate() {
        let scale = C64::new(lambda.sqrt(), 0.0);
        for c in 0..d_comp {
            junk_state[k * d_comp + c] = scale * e[c].conj();
        }
    }

    // certify: the code-space block maps |i_L> to |i> ⊗ junk exactly
    for (i, block) in blocks.iter().enumerate() {
        let image = matmul(&code_vectors.adjoint(), block); // (kappa*rank) x d_comp
        for row in 0..kappa * rank {
            for c in 0..d_comp {
                let expect = if row / rank == i {
                    junk_state[(row % rank) * d_comp + c]
                } else {
                    C64::new(0.0, 0.0)
                };
                if (image[(row, c)] - expect).norm() > 1e-8 {
                    return Err(Error::InvariantViolation(format!(
                        "decoder certification failed for logical state {i}"
                    )));
                }
            }
        }
    }

    let map = if d_b <= DENSE_COMPLETION_LIMIT {
        let mut basis: Vec<CVector> = (0..kappa * rank)
            .map(|c| code_vectors.column(c).clone_owned())
            .collect();
        let mut rows: Vec<usize> = (0..kappa)
            .flat_map(|i| (0..rank).map(move |k| i * junk_dim + k))
            .collect();
        let used: std::collections::BTreeSet<usize> = rows.iter().copied().collect();
        let mut free_rows = (0..kappa * junk_dim).filter(|r| !used.contains(r));
        let mut candidate = 0usize;
        while basis.len() < d_b {
            if candidate >= d_b {
                return Err(Error::InvariantViolation(
                    "failed to complete the decoder isometry".into(),
                ));
            }
            let mut v = CVector::zeros(d_b);
            v[candidate] = C64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for b in &basis {
                    let overlap = b.dotc(&v);
                    v -= b * overlap;
                }
            }
            let norm = v.norm();
            if norm > 1e-6 {
                basis.push(v / C64::new(norm, 0.0));
                rows.push(free_rows.next().ok_or_else(|| {
                    Error::InvariantViolation("decoder target space exhausted".into())
                })?);
            }
        }
        let mut isometry = CMatrix::zeros(kappa * junk_dim, d_b);
        for (v, &row) in basis.iter().zip(&rows) {
            for c in 0..d_b {
                isometry[(row, c)] = v[c].conj();
            }
        }
        RecoveryMap::Full(isometry)
    } else {
        RecoveryMap::CodeSpace(code_vectors)
    };

    Ok(Decoder {
        subset: sorted,
        secret_dim: kappa,
        junk_dim,
        rank,
        map,
        junk_state,
        residual,
    })
}

/// Fidelity between `secret` and the state recovered on the output system
/// after encoding and decoding.
pub fn recovery_fidelity(scheme: &Scheme, decoder: &Decoder, secret: &PureState) -> Result<f64> {
    if secret.shape().total_dim() != scheme.secret_dim() {
        return Err(Error::DimensionMismatch {
            expected: scheme.secret_dim(),
            got: secret.shape().total_dim(),
        });
    }
    let encoded = scheme.encode(secret)?;
    let decoded = decoder.decode_state(&encoded)?;
    let recovered = partial_trace_pure(&decoded, &[0])?;
    recovered.fidelity_with_pure(secret)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use crate::scheme::{
        cgl23_scheme, discard_shares, five_qubit_scheme, ghz_scheme, reed_solomon_scheme,
    };

    fn random_secret(dim: usize, rng: &mut impl Rng) -> PureState {
        let mut v = CVector::from_fn(dim, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let norm = v.norm();
        v /= C64::new(norm, 0.0);
        PureState::new(SystemShape::new(&[dim]).unwrap(), v).unwrap()
    }

    #[test]
    fn gram_residuals_separate_authorised_sets() {
        let s = cgl23_scheme();
        let (_, ok) = erasure_gram(&s, &[0, 1]).unwrap();
        assert!(ok < 1e-10);
        let (_, bad) = erasure_gram(&s, &[0]).unwrap();
        assert!(bad > 1e-2);
        // full share set: scalar sigma = 1
        let (sigma, r) = erasure_gram(&s, &[0, 1, 2]).unwrap();
        assert_eq!(sigma.nrows(), 1);
        assert!((sigma[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(r < 1e-12);
    }

    #[test]
    fn fast_screen_agrees_with_exact_blocks() {
        // the trace route and the direct blocks compute the same quantity
        for s in [cgl23_scheme(), five_qubit_scheme(), ghz_scheme(3, 2).unwrap()] {
            let n = s.n_total();
            for mask in 1usize..(1 << n) {
                let subset: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).collect();
                let (_, blocks) = logical_blocks(&s, &subset).unwrap();
                let exact = exact_gram(&blocks).1;
                let fast = fast_residual(&blocks);
                if exact > 1e-3 {
                    assert!(
                        (fast - exact).abs() < 1e-7 * exact.max(1.0),
                        "{}: {:?} fast {fast} vs exact {exact}",
                        s.name(),
                        subset
                    );
                } else {
                    // near-zero residuals drown in the screen's noise floor
                    assert!(fast < FAST_DECISION);
                }
            }
        }
    }

    #[test]
    fn decoder_recovers_random_secrets() {
        let mut rng = StdRng::seed_from_u64(11);
        let s = cgl23_scheme();
        let dec = synthesize_decoder(&s, &[1, 2]).unwrap();
        for _ in 0..25 {
            let secret = random_secret(3, &mut rng);
            let f = recovery_fidelity(&s, &dec, &secret).unwrap();
            assert!(f >= 1.0 - 1e-9, "fidelity {f}");
        }
        let five = five_qubit_scheme();
        let dec = synthesize_decoder(&five, &[0, 1, 2]).unwrap();
        for _ in 0..25 {
            let secret = random_secret(2, &mut rng);
            let f = recovery_fidelity(&five, &dec, &secret).unwrap();
            assert!(f >= 1.0 - 1e-9, "fidelity {f}");
        }
    }

    #[test]
    fn decoder_isometry_and_junk_invariants() {
        let s = cgl23_scheme();
        let dec = synthesize_decoder(&s, &[0, 2]).unwrap();
        let w = dec.isometry().expect("small subset has a dense isometry");
        let id = CMatrix::identity(w.ncols(), w.ncols());
        assert!((w.adjoint() * w - id).norm() < 1e-10);
        assert!((dec.junk_state().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn large_subsets_use_the_code_space_path() {
        let mut rng = StdRng::seed_from_u64(19);
        let s = reed_solomon_scheme(3, 7).unwrap();
        // d_B = 7^4 is beyond the dense-completion limit
        let dec = synthesize_decoder(&s, &[0, 1, 2, 3]).unwrap();
        assert!(dec.isometry().is_none());
        for _ in 0..5 {
            let secret = random_secret(7, &mut rng);
            let f = recovery_fidelity(&s, &dec, &secret).unwrap();
            assert!(f >= 1.0 - 1e-9, "fidelity {f}");
        }
        // states outside the code space are rejected rather than mis-decoded
        let stray = PureState::basis_state(s.share_shape(), &[0, 0, 0, 0, 0]).unwrap();
        assert!(dec.decode_state(&stray).is_err());
    }

    #[test]
    fn unauthorised_sets_are_rejected() {
        let s = cgl23_scheme();
        match synthesize_decoder(&s, &[2]) {
            Err(Error::NotAuthorized { residual, .. }) => assert!(residual > 1e-3),
            other => panic!("expected NotAuthorized, got {other:?}"),
        }
        let ghz = ghz_scheme(3, 2).unwrap();
        assert!(synthesize_decoder(&ghz, &[0, 1]).is_err());
        assert!(synthesize_decoder(&ghz, &[0, 1, 2]).is_ok());
    }

    #[test]
    fn mixed_scheme_decoding_uses_the_purification() {
        let mut rng = StdRng::seed_from_u64(5);
        let dropped = discard_shares(&five_qubit_scheme(), &[4]).unwrap();
        let dec = synthesize_decoder(&dropped, &[0, 1, 3]).unwrap();
        for _ in 0..10 {
            let secret = random_secret(2, &mut rng);
            let f = recovery_fidelity(&dropped, &dec, &secret).unwrap();
            assert!(f >= 1.0 - 1e-9);
        }
        // pairs of the mixed scheme stay unauthorised
        assert!(synthesize_decoder(&dropped, &[0, 1]).is_err());
    }

    #[test]
    fn decoder_misapplied_to_another_scheme_is_detected() {
        let mut rng = StdRng::seed_from_u64(7);
        let s = cgl23_scheme();
        let dec = synthesize_decoder(&s, &[0, 1]).unwrap();
        let other = ghz_scheme(3, 3).unwrap();
        let secret = random_secret(3, &mut rng);
        let encoded = other.encode(&secret).unwrap();
        let decoded = dec.decode_state(&encoded).unwrap();
        let recovered = partial_trace_pure(&decoded, &[0]).unwrap();
        let f = recovered.fidelity_with_pure(&secret).unwrap();
        assert!(f < 0.99, "wrong-scheme decode should not look perfect: {f}");
    }

    #[test]
    fn linearity_of_recovery() {
        // recovery of a superposition matches the superposition of recoveries
        let s = cgl23_scheme();
        let dec = synthesize_decoder(&s, &[1, 2]).unwrap();
        let shape = SystemShape::new(&[3]).unwrap();
        let mut v = CVector::zeros(3);
        v[0] = C64::new(0.6, 0.0);
        v[1] = C64::new(0.0, 0.8);
        let secret = PureState::new(shape, v).unwrap();
        let encoded = s.encode(&secret).unwrap();
        let decoded = dec.decode_state(&encoded).unwrap();
        // the decoded state factorizes: secret on system 0, junk elsewhere
        let recovered = partial_trace_pure(&decoded, &[0]).unwrap();
        let f = recovered.fidelity_with_pure(&secret).unwrap();
        assert!(f >= 1.0 - 1e-10);
        let purity = (recovered.matrix() * recovered.matrix()).trace().re;
        assert!((purity - 1.0).abs() < 1e-9);
    }
}
