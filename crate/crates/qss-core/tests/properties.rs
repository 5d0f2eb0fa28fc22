//! Structural invariants checked on randomized inputs.

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qss_core::qudit::{
    partial_trace_density, partial_trace_pure, pauli_ops, von_neumann_entropy, C64, CMatrix,
    CVector, PureState, SystemShape,
};
use qss_core::scheme::{scheme_from_str, scheme_to_string, Construction, Scheme};

fn random_state(dims: &[usize], rng: &mut StdRng) -> PureState {
    let shape = SystemShape::new(dims).unwrap();
    let mut v = CVector::from_fn(shape.total_dim(), |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let norm = v.norm();
    v /= C64::new(norm, 0.0);
    PureState::new(shape, v).unwrap()
}

fn random_unitary(dim: usize, rng: &mut StdRng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    g.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Tracing out in two steps agrees with tracing out at once.
    #[test]
    fn partial_trace_composes(seed in 0u64..10_000) {
        let mut rng = StdRng::seed_from_u64(seed);
        let dims: Vec<usize> = (0..4).map(|_| rng.gen_range(2..=3)).collect();
        let state = random_state(&dims, &mut rng);

        // keep1 ⊃ keep2, both non-empty
        let keep1: Vec<usize> = (0..4).filter(|_| rng.gen_bool(0.7)).collect();
        let keep1 = if keep1.is_empty() { vec![0, 2] } else { keep1 };
        let keep2: Vec<usize> = keep1.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
        let keep2 = if keep2.is_empty() { vec![keep1[0]] } else { keep2 };

        let one_step = partial_trace_pure(&state, &keep2).unwrap();
        let intermediate = partial_trace_pure(&state, &keep1).unwrap();
        let relative: Vec<usize> = keep2
            .iter()
            .map(|p| keep1.iter().position(|q| q == p).unwrap())
            .collect();
        let two_step = partial_trace_density(&intermediate, &relative).unwrap();
        prop_assert!((one_step.matrix() - two_step.matrix()).norm() < 1e-12);
    }

    /// Entropy is invariant under unitary conjugation.
    #[test]
    fn entropy_is_unitarily_invariant(seed in 0u64..10_000) {
        let mut rng = StdRng::seed_from_u64(seed);
        let d = rng.gen_range(2..=5usize);
        // generic mixed state: reduce a random bipartite pure state
        let state = random_state(&[d, d], &mut rng);
        let rho = partial_trace_pure(&state, &[0]).unwrap();
        let u = random_unitary(d, &mut rng);
        let rotated = &u * rho.matrix() * u.adjoint();
        let rotated = qss_core::qudit::DensityMatrix::new(
            SystemShape::new(&[d]).unwrap(),
            rotated,
        ).unwrap();
        prop_assert!((von_neumann_entropy(&rho) - von_neumann_entropy(&rotated)).abs() < 1e-10);
    }

    /// Weyl commutation ZX = ωXZ and X^q = Z^q = I for a range of dimensions.
    #[test]
    fn pauli_relations(q in 2usize..=9) {
        let (x, z, w) = pauli_ops(q);
        let id = CMatrix::identity(q, q);
        let mut xq = id.clone();
        let mut zq = id.clone();
        for _ in 0..q {
            xq = &xq * &x;
            zq = &zq * &z;
        }
        prop_assert!((&xq - &id).norm() < 1e-12);
        prop_assert!((&zq - &id).norm() < 1e-12);
        prop_assert!((&z * &x - (&x * &z) * w).norm() < 1e-12);
    }

    /// Saving and loading an explicit scheme reproduces the amplitudes.
    #[test]
    fn explicit_file_roundtrip(seed in 0u64..10_000) {
        let mut rng = StdRng::seed_from_u64(seed);
        let q = rng.gen_range(2..=3usize);
        let n = rng.gen_range(1..=3usize);
        let total = q.pow(n as u32);
        let kappa = rng.gen_range(1..=total.min(3));
        // random isometry via QR
        let u = random_unitary(total, &mut rng);
        let mut enc = CMatrix::zeros(total, kappa);
        for c in 0..kappa {
            enc.set_column(c, &u.column(c));
        }
        let scheme = Scheme::new(
            "random", q, kappa, n, vec![], enc, None, Construction::Explicit,
        ).unwrap();
        let text = scheme_to_string(&scheme);
        let loaded = scheme_from_str(&text).unwrap();
        prop_assert!((loaded.encoding() - scheme.encoding()).norm() < 1e-15);
    }
}
