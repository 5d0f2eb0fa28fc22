//! Linear algebra over composite qudit systems.
//!
//! States are dense complex vectors indexed mixed-radix over the local
//! dimensions, with position 0 the slowest-varying index. All operations are
//! pure functions on immutable inputs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default cap on the number of amplitudes of any constructed system.
pub const DEFAULT_DIM_GUARD: usize = 1 << 20;

/// Tolerance below which eigenvalues are treated as zero in entropies.
pub const EIGENVALUE_CLAMP: f64 = 1e-12;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const PSD_SLACK: f64 = -1e-10;
const BASIS_TOL: f64 = 1e-10;

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Ordered local dimensions of a composite system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemShape {
    dims: Vec<usize>,
    total_dim: usize,
}

impl SystemShape {
    /// Builds a shape with the default amplitude guard.
    pub fn new(dims: &[usize]) -> Result<Self> {
        Self::with_guard(dims, DEFAULT_DIM_GUARD)
    }

    /// Builds a shape, refusing systems whose total dimension exceeds `guard`.
    pub fn with_guard(dims: &[usize], guard: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("no subsystems".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidShape(format!("local dimension {d} < 2")));
        }
        let mut total: u128 = 1;
        for &d in dims {
            total *= d as u128;
            if total > guard as u128 {
                return Err(Error::DimensionGuard {
                    requested: total,
                    guard,
                });
            }
        }
        Ok(SystemShape {
            dims: dims.to_vec(),
            total_dim: total as usize,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn num_systems(&self) -> usize {
        self.dims.len()
    }

    pub fn dim_at(&self, pos: usize) -> usize {
        self.dims[pos]
    }

    /// Product of the local dimensions at `positions`.
    pub fn dim_of(&self, positions: &[usize]) -> usize {
        positions.iter().map(|&p| self.dims[p]).product()
    }

    /// Positions not listed in `positions`, in original order.
    pub fn complement(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.dims.len())
            .filter(|p| !positions.contains(p))
            .collect()
    }

    fn check_positions(&self, positions: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.dims.len()];
        for &p in positions {
            if p >= self.dims.len() {
                return Err(Error::InvalidPositions(format!(
                    "position {p} out of range for {} subsystems",
                    self.dims.len()
                )));
            }
            if seen[p] {
                return Err(Error::InvalidPositions(format!("position {p} repeated")));
            }
            seen[p] = true;
        }
        Ok(())
    }
}

/// Permutation plan moving `front` positions before the rest.
///
/// `map[old_flat] = new_flat` where the new index is mixed-radix over
/// `[dims[front..], dims[rest..]]` with the original relative order kept
/// inside each group. Built by walking the original indices in order with an
/// incremental mixed-radix counter.
fn permutation_map(shape: &SystemShape, front: &[usize]) -> Vec<usize> {
    let rest = shape.complement(front);
    let order: Vec<usize> = front.iter().chain(rest.iter()).copied().collect();
    let n = shape.num_systems();
    // stride of each original position in the permuted layout
    let mut new_stride = vec![0usize; n];
    let mut stride = 1usize;
    for &p in order.iter().rev() {
        new_stride[p] = stride;
        stride *= shape.dims[p];
    }
    let mut map = vec![0usize; shape.total_dim];
    let mut digits = vec![0usize; n];
    let mut new_flat = 0usize;
    for slot in map.iter_mut() {
        *slot = new_flat;
        for p in (0..n).rev() {
            digits[p] += 1;
            if digits[p] < shape.dims[p] {
                new_flat += new_stride[p];
                break;
            }
            digits[p] = 0;
            new_flat -= (shape.dims[p] - 1) * new_stride[p];
        }
    }
    map
}

/// Normalized state vector over a composite system.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    shape: SystemShape,
    amplitudes: CVector,
}

impl PureState {
    /// Validating constructor: the squared norm must be 1 within 1e-12.
    pub fn new(shape: SystemShape, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != shape.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: shape.total_dim(),
                got: amplitudes.len(),
            });
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvariantViolation(format!(
                "state norm^2 = {norm_sq}, expected 1"
            )));
        }
        Ok(PureState { shape, amplitudes })
    }

    /// Internal constructor for amplitudes produced by norm-preserving maps.
    pub(crate) fn from_trusted(shape: SystemShape, amplitudes: CVector) -> Self {
        debug_assert!((amplitudes.norm_squared() - 1.0).abs() < 1e-9);
        PureState { shape, amplitudes }
    }

    /// Computational basis state |digits⟩.
    pub fn basis_state(shape: SystemShape, digits: &[usize]) -> Result<Self> {
        if digits.len() != shape.num_systems() {
            return Err(Error::DimensionMismatch {
                expected: shape.num_systems(),
                got: digits.len(),
            });
        }
        let mut flat = 0usize;
        for (p, &d) in digits.iter().enumerate() {
            if d >= shape.dim_at(p) {
                return Err(Error::InvalidPositions(format!(
                    "digit {d} out of range at position {p}"
                )));
            }
            flat = flat * shape.dim_at(p) + d;
        }
        let mut v = CVector::zeros(shape.total_dim());
        v[flat] = C64::new(1.0, 0.0);
        Ok(PureState {
            shape,
            amplitudes: v,
        })
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// |self⟩ ⊗ |other⟩ with `other`'s subsystems appended.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let dims: Vec<usize> = self
            .shape
            .dims()
            .iter()
            .chain(other.shape.dims())
            .copied()
            .collect();
        let shape = SystemShape::new(&dims)?;
        let mut v = CVector::zeros(shape.total_dim());
        let nb = other.shape.total_dim();
        for i in 0..self.shape.total_dim() {
            for j in 0..nb {
                v[i * nb + j] = self.amplitudes[i] * other.amplitudes[j];
            }
        }
        Ok(PureState::from_trusted(shape, v))
    }

    /// |ψ⟩⟨ψ| as a density matrix.
    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_trusted(self.shape.clone(), m)
    }

    /// Reshapes the state into a matrix with row index running over `front`
    /// subsystems and column index over the rest (original order kept).
    pub fn as_bipartite_matrix(&self, front: &[usize]) -> Result<CMatrix> {
        self.shape.check_positions(front)?;
        let d_front = self.shape.dim_of(front);
        let d_rest = self.shape.total_dim() / d_front;
        let map = permutation_map(&self.shape, front);
        let mut m = CMatrix::zeros(d_front, d_rest);
        for (old, &new) in map.iter().enumerate() {
            m[(new / d_rest, new % d_rest)] = self.amplitudes[old];
        }
        Ok(m)
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    shape: SystemShape,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validating constructor: Hermitian and unit trace within 1e-12, minimum
    /// eigenvalue >= -1e-10.
    pub fn new(shape: SystemShape, matrix: CMatrix) -> Result<Self> {
        let n = shape.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.nrows(),
            });
        }
        let herm_err = (&matrix - matrix.adjoint()).norm();
        if herm_err > HERMITIAN_TOL * (n as f64) {
            return Err(Error::InvariantViolation(format!(
                "matrix not Hermitian (deviation {herm_err:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL * (n as f64) || tr.im.abs() > NORM_TOL {
            return Err(Error::InvariantViolation(format!(
                "trace = {tr}, expected 1"
            )));
        }
        let dm = DensityMatrix { shape, matrix };
        if let Some(min) = dm.eigenvalues().iter().cloned().reduce(f64::min) {
            if min < PSD_SLACK {
                return Err(Error::InvariantViolation(format!(
                    "matrix not positive semidefinite (min eigenvalue {min:.3e})"
                )));
            }
        }
        Ok(dm)
    }

    pub(crate) fn from_trusted(shape: SystemShape, matrix: CMatrix) -> Self {
        DensityMatrix { shape, matrix }
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Maximally mixed state I/d on the given shape.
    pub fn maximally_mixed(shape: SystemShape) -> Self {
        let d = shape.total_dim();
        let m = CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
        DensityMatrix::from_trusted(shape, m)
    }

    /// Real spectrum of the Hermitian part, unsorted.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// ⟨ζ|ρ|ζ⟩ for a pure reference state.
    pub fn fidelity_with_pure(&self, reference: &PureState) -> Result<f64> {
        if reference.shape().total_dim() != self.shape.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.shape.total_dim(),
                got: reference.shape().total_dim(),
            });
        }
        let v = reference.amplitudes();
        let f = (v.adjoint() * &self.matrix * v)[(0, 0)].re;
        Ok(f.clamp(0.0, 1.0 + 1e-9))
    }
}

/// Pure or mixed state of a (sub)system.
#[derive(Debug, Clone)]
pub enum QuantumState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn shape(&self) -> &SystemShape {
        match self {
            QuantumState::Pure(s) => s.shape(),
            QuantumState::Mixed(m) => m.shape(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(s) => s.to_density(),
            QuantumState::Mixed(m) => m.clone(),
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        match self {
            QuantumState::Pure(s) => partial_trace_pure(s, keep),
            QuantumState::Mixed(m) => partial_trace_density(m, keep),
        }
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            QuantumState::Pure(s) => Some(s),
            QuantumState::Mixed(_) => None,
        }
    }
}

/// Eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().as_slice().to_vec()
}

fn split_parts(m: &CMatrix) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let mut re = nalgebra::DMatrix::<f64>::zeros(rows, cols);
    let mut im = nalgebra::DMatrix::<f64>::zeros(rows, cols);
    let (rs, is) = (re.as_mut_slice(), im.as_mut_slice());
    for (k, z) in m.as_slice().iter().enumerate() {
        rs[k] = z.re;
        is[k] = z.im;
    }
    (re, im)
}

fn join_parts(re: nalgebra::DMatrix<f64>, im: nalgebra::DMatrix<f64>) -> CMatrix {
    let (rows, cols) = re.shape();
    let mut out = CMatrix::zeros(rows, cols);
    let os = out.as_mut_slice();
    for (k, (r, i)) in re.as_slice().iter().zip(im.as_slice()).enumerate() {
        os[k] = C64::new(*r, *i);
    }
    out
}

/// Complex matrix product routed through four real GEMMs, which the linear
/// algebra backend blocks and vectorizes (its complex path does not).
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    // below this size the split/join overhead dominates
    if a.nrows() * b.ncols() < 4096 {
        return a * b;
    }
    let (ar, ai) = split_parts(a);
    let (br, bi) = split_parts(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join_parts(re, im)
}

/// a · a†, the Gram operator of the rows of `a`.
pub fn gram_matrix(a: &CMatrix) -> CMatrix {
    if a.nrows() * a.nrows() < 4096 && a.ncols() < 4096 {
        return a * a.adjoint();
    }
    let (ar, ai) = split_parts(a);
    let art = ar.transpose();
    let ait = ai.transpose();
    let re = &ar * &art + &ai * &ait;
    let im = &ai * &art - &ar * &ait;
    join_parts(re, im)
}

/// Reduced density matrix of a pure state on the `keep` subsystems, original
/// relative order preserved.
pub fn partial_trace_pure(state: &PureState, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    state.shape().check_positions(keep)?;
    let a = state.as_bipartite_matrix(keep)?;
    let rho = gram_matrix(&a);
    let dims: Vec<usize> = keep.iter().map(|&p| state.shape().dim_at(p)).collect();
    Ok(DensityMatrix::from_trusted(SystemShape::new(&dims)?, rho))
}

/// Reduced density matrix of a mixed state on the `keep` subsystems.
pub fn partial_trace_density(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    rho.shape().check_positions(keep)?;
    let map = permutation_map(rho.shape(), keep);
    let d_keep = rho.shape().dim_of(keep);
    let d_env = rho.shape().total_dim() / d_keep;
    let mut out = CMatrix::zeros(d_keep, d_keep);
    // out[a,b] = sum_e rho_perm[a*d_env+e, b*d_env+e]
    let m = rho.matrix();
    let n = rho.shape().total_dim();
    let mut inv = vec![0usize; n];
    for (old, &new) in map.iter().enumerate() {
        inv[new] = old;
    }
    for a in 0..d_keep {
        for b in 0..d_keep {
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..d_env {
                acc += m[(inv[a * d_env + e], inv[b * d_env + e])];
            }
            out[(a, b)] = acc;
        }
    }
    let dims: Vec<usize> = keep.iter().map(|&p| rho.shape().dim_at(p)).collect();
    Ok(DensityMatrix::from_trusted(SystemShape::new(&dims)?, out))
}

/// Von Neumann entropy in bits; eigenvalues below 1e-12 contribute zero.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues())
}

pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&p| p > EIGENVALUE_CLAMP)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Entropy of the reduction of a pure state onto `keep`, computed on the
/// smaller of the two sides of the cut (the nonzero spectra agree).
pub fn subsystem_entropy(state: &PureState, keep: &[usize]) -> Result<f64> {
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    state.shape().check_positions(keep)?;
    let comp = state.shape().complement(keep);
    if comp.is_empty() {
        return Ok(0.0);
    }
    let side = if state.shape().dim_of(keep) <= state.shape().dim_of(&comp) {
        keep.to_vec()
    } else {
        comp
    };
    Ok(von_neumann_entropy(&partial_trace_pure(state, &side)?))
}

/// Half the trace norm of ρ - σ.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.shape().total_dim() != b.shape().total_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.shape().total_dim(),
            got: b.shape().total_dim(),
        });
    }
    let diff = a.matrix() - b.matrix();
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>())
}

/// Applies `op` to the listed target subsystems of a pure state.
///
/// `op` has `prod(out_dims)` rows and `prod(dims of targets)` columns; the
/// result carries `out_dims` in place of the targets, moved to the front,
/// followed by the remaining subsystems in their original order.
pub fn apply_to_subsystems(
    state: &PureState,
    op: &CMatrix,
    targets: &[usize],
    out_dims: &[usize],
) -> Result<PureState> {
    state.shape().check_positions(targets)?;
    if targets.is_empty() {
        return Err(Error::EmptySubset);
    }
    let d_t = state.shape().dim_of(targets);
    if op.ncols() != d_t {
        return Err(Error::DimensionMismatch {
            expected: d_t,
            got: op.ncols(),
        });
    }
    let d_out: usize = out_dims.iter().product();
    if op.nrows() != d_out {
        return Err(Error::DimensionMismatch {
            expected: d_out,
            got: op.nrows(),
        });
    }
    let a = state.as_bipartite_matrix(targets)?;
    let b = matmul(op, &a);
    let rest = state.shape().complement(targets);
    let mut dims: Vec<usize> = out_dims.to_vec();
    dims.extend(rest.iter().map(|&p| state.shape().dim_at(p)));
    let shape = SystemShape::new(&dims)?;
    let d_rest = state.shape().total_dim() / d_t;
    let mut v = CVector::zeros(shape.total_dim());
    for r in 0..d_out {
        for c in 0..d_rest {
            v[r * d_rest + c] = b[(r, c)];
        }
    }
    // callers apply isometries; renormalize away rounding drift only
    let norm = v.norm();
    if norm < 1e-9 {
        return Err(Error::InvariantViolation(
            "operator annihilated the state".into(),
        ));
    }
    Ok(PureState::from_trusted(shape, v / C64::new(norm, 0.0)))
}

/// Projects subsystem `pos` onto the given bra vector and drops it.
///
/// Returns the renormalized remainder and the outcome probability.
pub fn project_out(state: &PureState, pos: usize, bra: &CVector) -> Result<(PureState, f64)> {
    state.shape().check_positions(&[pos])?;
    let d = state.shape().dim_at(pos);
    if bra.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bra.len(),
        });
    }
    let a = state.as_bipartite_matrix(&[pos])?;
    let row = bra.adjoint() * a;
    let prob = row.norm_squared();
    let rest = state.shape().complement(&[pos]);
    let dims: Vec<usize> = rest.iter().map(|&p| state.shape().dim_at(p)).collect();
    let shape = SystemShape::new(&dims)?;
    let v = if prob > 1e-300 {
        CVector::from_iterator(shape.total_dim(), row.iter().map(|z| z / prob.sqrt()))
    } else {
        CVector::zeros(shape.total_dim())
    };
    Ok((PureState { shape, amplitudes: v }, prob))
}

/// Born-rule probabilities of measuring subsystem `pos` in `basis`.
pub fn measurement_probabilities(
    state: &PureState,
    pos: usize,
    basis: &OrthonormalBasis,
) -> Result<Vec<f64>> {
    state.shape().check_positions(&[pos])?;
    if basis.dim() != state.shape().dim_at(pos) {
        return Err(Error::DimensionMismatch {
            expected: state.shape().dim_at(pos),
            got: basis.dim(),
        });
    }
    let a = state.as_bipartite_matrix(&[pos])?;
    Ok((0..basis.dim())
        .map(|i| (basis.vector(i).adjoint() * &a).norm_squared())
        .collect())
}

/// Generalized Pauli pair for dimension `q`: X|i⟩ = |i+1 mod q⟩,
/// Z|i⟩ = ω^i|i⟩ with ω = e^{2πi/q}.
pub fn pauli_ops(q: usize) -> (CMatrix, CMatrix, C64) {
    assert!(q >= 2, "qudit dimension must be at least 2");
    let w = omega(q);
    let mut x = CMatrix::zeros(q, q);
    let mut z = CMatrix::zeros(q, q);
    for i in 0..q {
        x[((i + 1) % q, i)] = C64::new(1.0, 0.0);
        z[(i, i)] = w.powu(i as u32);
    }
    (x, z, w)
}

/// Primitive q-th root of unity e^{2πi/q}.
pub fn omega(q: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI / q as f64)
}

/// Discrete Fourier transform of rank q: U_{jk} = ω^{jk}/√q.
///
/// U is unitary, sends |0⟩ to the uniform superposition and maps the
/// computational basis to the X eigenbasis (U†ZU = X).
pub fn fourier(q: usize) -> CMatrix {
    assert!(q >= 2, "qudit dimension must be at least 2");
    let scale = 1.0 / (q as f64).sqrt();
    CMatrix::from_fn(q, q, |j, k| {
        C64::from_polar(scale, 2.0 * PI * ((j * k) % q) as f64 / q as f64)
    })
}

/// Maximally entangled state (1/√q) Σ|ii⟩ on a (q,q) system.
pub fn max_entangled(q: usize) -> Result<PureState> {
    let shape = SystemShape::new(&[q, q])?;
    let mut v = CVector::zeros(q * q);
    let amp = C64::new(1.0 / (q as f64).sqrt(), 0.0);
    for i in 0..q {
        v[i * q + i] = amp;
    }
    Ok(PureState::from_trusted(shape, v))
}

/// One of the q+1 complementary measurement bases of a q-dimensional system.
///
/// Label t in 0..q is the eigenbasis of X^tZ, label t = q the eigenbasis of X.
/// Vector i is the eigenvector whose eigenvalue, divided by the eigenvalue of
/// largest real part (ties broken by largest imaginary part), has phase
/// 2πi/q. Label 0 is the computational basis.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    dim: usize,
    label: usize,
    vectors: Vec<CVector>,
    non_prime: bool,
}

impl OrthonormalBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Basis label t.
    pub fn label(&self) -> usize {
        self.label
    }

    /// Set when the basis was constructed for a composite dimension.
    pub fn non_prime_warning(&self) -> bool {
        self.non_prime
    }

    pub fn vector(&self, i: usize) -> &CVector {
        &self.vectors[i]
    }

    /// Entrywise complex conjugate of every basis vector.
    pub fn conjugated(&self) -> OrthonormalBasis {
        OrthonormalBasis {
            dim: self.dim,
            label: self.label,
            vectors: self
                .vectors
                .iter()
                .map(|v| v.map(|z| z.conj()))
                .collect(),
            non_prime: self.non_prime,
        }
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let ip = self.vectors[i].dotc(&self.vectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                if (ip.norm() - expect).abs() > BASIS_TOL {
                    return Err(Error::InvariantViolation(format!(
                        "basis t={} not orthonormal at pair ({i},{j})",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Basis labels available for a given dimension: all of 0..=q for prime q,
/// only {0, q} otherwise.
pub fn basis_labels(q: usize) -> Vec<usize> {
    if is_prime(q) {
        (0..=q).collect()
    } else {
        vec![0, q]
    }
}

/// Eigenbasis of X^tZ (t in 0..q) or of X (t = q).
///
/// Composite dimensions only admit t in {0, q}; the returned basis then
/// carries a non-prime warning flag.
pub fn mub_basis(q: usize, t: usize) -> Result<OrthonormalBasis> {
    assert!(q >= 2, "qudit dimension must be at least 2");
    let prime = is_prime(q);
    if t > q || (!prime && t != 0 && t != q) {
        return Err(Error::UnsupportedBasis { q, t });
    }
    let vectors = if t == 0 {
        // computational basis: Z eigenvectors labeled by eigenvalue phase
        (0..q)
            .map(|i| {
                let mut v = CVector::zeros(q);
                v[i] = C64::new(1.0, 0.0);
                v
            })
            .collect()
    } else if t == q {
        // X eigenbasis: X (1/√q) Σ_j ω^{-ij}|j⟩ = ω^i · (same)
        let scale = 1.0 / (q as f64).sqrt();
        (0..q)
            .map(|i| {
                CVector::from_fn(q, |j, _| {
                    C64::from_polar(scale, -2.0 * PI * ((i * j) % q) as f64 / q as f64)
                })
            })
            .collect()
    } else {
        xtz_eigenbasis(q, t)
    };
    let basis = OrthonormalBasis {
        dim: q,
        label: t,
        vectors,
        non_prime: !prime,
    };
    basis.validate()?;
    Ok(basis)
}

/// Closed-form eigenbasis of X^tZ for prime q and 1 <= t <= q-1.
///
/// (X^tZ)^q = ω^{t q(q-1)/2} I, so the spectrum is the set of q-th roots of
/// that scalar; each eigenvector follows from the recurrence
/// v_{k} = v_{k-t} ω^{k-t} / λ along the cycle k = 0, t, 2t, ...
fn xtz_eigenbasis(q: usize, t: usize) -> Vec<CVector> {
    let w = omega(q);
    // global phase of the spectrum: the q-th roots of ω^{t·q(q-1)/2}
    let phase = PI * (t * (q - 1)) as f64; // arg of ω^{t q(q-1)/2}
    let roots: Vec<C64> = (0..q)
        .map(|j| C64::from_polar(1.0, (phase + 2.0 * PI * j as f64) / q as f64))
        .collect();
    // reference eigenvalue: largest real part, ties by largest imaginary part
    let reference = roots
        .iter()
        .copied()
        .max_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .expect("finite eigenvalue phases")
        })
        .expect("non-empty spectrum");
    let amp0 = 1.0 / (q as f64).sqrt();
    (0..q)
        .map(|i| {
            let lambda = reference * w.powu(i as u32);
            let mut v = CVector::zeros(q);
            v[0] = C64::new(amp0, 0.0);
            let mut k = 0usize;
            for _ in 1..q {
                let next = (k + t) % q;
                v[next] = v[k] * w.powu(k as u32) / lambda;
                k = next;
            }
            v
        })
        .collect()
}
