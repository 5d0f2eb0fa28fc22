//! Secret-sharing scheme constructions: logical bases, channel states, mixed
//! schemes by discarding shares, and the scheme file format.
//!
//! A scheme is an isometry from a κ-dimensional secret space onto n shares of
//! dimension q each, given column-wise by the logical basis. Mixed schemes
//! are represented by their purification plus the list of discarded share
//! positions; all positions in this crate's API are 0-based.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qudit::{
    self, is_prime, mub_basis, partial_trace_pure, trace_distance, C64, CMatrix, CVector,
    DensityMatrix, PureState, QuantumState, SystemShape,
};

const COLUMN_ORTHO_TOL: f64 = 1e-10;
const CHANNEL_STATE_TOL: f64 = 1e-10;

/// Claimed (k, k', n) ramp parameters carried as metadata until measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RampClaim {
    pub k: usize,
    pub k_prime: Option<usize>,
    pub n: usize,
}

/// How a scheme was built; drives the compact scheme-file representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Construction {
    Ghz { n: usize, q: usize },
    Cgl23,
    FiveQubit,
    ReedSolomon { k: usize, q: usize },
    Explicit,
}

impl Construction {
    fn file_token(&self) -> String {
        match self {
            Construction::Ghz { .. } => "ghz".into(),
            Construction::Cgl23 => "cgl23".into(),
            Construction::FiveQubit => "five_qubit".into(),
            Construction::ReedSolomon { k, q } => format!("rs k={k} q={q}"),
            Construction::Explicit => "explicit".into(),
        }
    }
}

/// A secret-sharing scheme: encoding isometry plus discarded-share list.
#[derive(Debug, Clone)]
pub struct Scheme {
    name: String,
    share_dim: usize,
    secret_dim: usize,
    n_total: usize,
    discarded: Vec<usize>,
    encoding: CMatrix, // q^n_total x kappa, column i = |i_L>
    claimed_ramp: Option<RampClaim>,
    construction: Construction,
}

impl Scheme {
    /// Validating constructor used by every builder and the file loader.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        share_dim: usize,
        secret_dim: usize,
        n_total: usize,
        discarded: Vec<usize>,
        encoding: CMatrix,
        claimed_ramp: Option<RampClaim>,
        construction: Construction,
    ) -> Result<Self> {
        let shape = SystemShape::new(&vec![share_dim; n_total])?;
        if encoding.nrows() != shape.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: shape.total_dim(),
                got: encoding.nrows(),
            });
        }
        if secret_dim == 0 || encoding.ncols() != secret_dim {
            return Err(Error::DimensionMismatch {
                expected: secret_dim,
                got: encoding.ncols(),
            });
        }
        if secret_dim > shape.total_dim() {
            return Err(Error::InvariantViolation(format!(
                "secret dimension {secret_dim} exceeds total share dimension"
            )));
        }
        let mut discarded = discarded;
        discarded.sort_unstable();
        let mut scheme = Scheme {
            name: name.into(),
            share_dim,
            secret_dim,
            n_total,
            discarded: Vec::new(),
            encoding,
            claimed_ramp,
            construction,
        };
        scheme.check_columns_orthonormal()?;
        scheme.set_discarded(discarded)?;
        Ok(scheme)
    }

    fn check_columns_orthonormal(&self) -> Result<()> {
        for i in 0..self.secret_dim {
            for j in i..self.secret_dim {
                let ip = self.encoding.column(i).dotc(&self.encoding.column(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                if (ip.norm() - expect).abs() > COLUMN_ORTHO_TOL {
                    return Err(Error::InvariantViolation(format!(
                        "logical basis not orthonormal at columns ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn set_discarded(&mut self, discarded: Vec<usize>) -> Result<()> {
        for w in discarded.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidPositions(format!(
                    "share {} discarded twice",
                    w[0]
                )));
            }
        }
        if let Some(&p) = discarded.iter().find(|&&p| p >= self.n_total) {
            return Err(Error::InvalidPositions(format!(
                "share {p} out of range for {} shares",
                self.n_total
            )));
        }
        if discarded.len() >= self.n_total {
            return Err(Error::InvalidPositions(
                "at least one active share must remain".into(),
            ));
        }
        self.discarded = discarded;
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Dimension q of each share.
    pub fn share_dim(&self) -> usize {
        self.share_dim
    }

    /// Dimension κ of the secret space.
    pub fn secret_dim(&self) -> usize {
        self.secret_dim
    }

    /// Shares produced by the pure encoding, including discarded ones.
    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Discarded share positions (0-based, sorted).
    pub fn discarded(&self) -> &[usize] {
        &self.discarded
    }

    /// Active share positions, in order.
    pub fn active_positions(&self) -> Vec<usize> {
        (0..self.n_total)
            .filter(|p| !self.discarded.contains(p))
            .collect()
    }

    pub fn n_active(&self) -> usize {
        self.n_total - self.discarded.len()
    }

    pub fn is_pure(&self) -> bool {
        self.discarded.is_empty()
    }

    /// Secret dimension equals share dimension.
    pub fn is_ideal(&self) -> bool {
        self.secret_dim == self.share_dim
    }

    pub fn encoding(&self) -> &CMatrix {
        &self.encoding
    }

    pub fn claimed_ramp(&self) -> Option<RampClaim> {
        self.claimed_ramp
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    /// Shape of the full share register (all n_total shares).
    pub fn share_shape(&self) -> SystemShape {
        SystemShape::new(&vec![self.share_dim; self.n_total]).expect("validated at construction")
    }

    /// Logical basis state |i_L⟩ on the full share register.
    pub fn logical_state(&self, i: usize) -> Result<PureState> {
        if i >= self.secret_dim {
            return Err(Error::DimensionMismatch {
                expected: self.secret_dim,
                got: i,
            });
        }
        let col = CVector::from_column_slice(self.encoding.column(i).as_slice());
        PureState::new(self.share_shape(), col)
    }

    /// Applies the encoding isometry to a secret-space state vector.
    pub fn encode(&self, secret: &PureState) -> Result<PureState> {
        if secret.shape().total_dim() != self.secret_dim {
            return Err(Error::DimensionMismatch {
                expected: self.secret_dim,
                got: secret.shape().total_dim(),
            });
        }
        let v = &self.encoding * secret.amplitudes();
        PureState::new(self.share_shape(), v)
    }

    fn with_name(mut self, name: String) -> Self {
        self.name = name;
        self
    }
}

/// GHZ-type scheme: |i_L⟩ = |i⟩^{⊗n}, an (n, 0, n) ramp scheme.
pub fn ghz_scheme(n: usize, q: usize) -> Result<Scheme> {
    if n < 2 || q < 2 {
        return Err(Error::InvalidShape(format!(
            "ghz scheme needs n >= 2 and q >= 2, got n={n} q={q}"
        )));
    }
    let shape = SystemShape::new(&vec![q; n])?;
    let mut enc = CMatrix::zeros(shape.total_dim(), q);
    for i in 0..q {
        let mut flat = 0usize;
        for _ in 0..n {
            flat = flat * q + i;
        }
        enc[(flat, i)] = C64::new(1.0, 0.0);
    }
    Scheme::new(
        format!("ghz_{n}_{q}"),
        q,
        q,
        n,
        vec![],
        enc,
        Some(RampClaim {
            k: n,
            k_prime: Some(0),
            n,
        }),
        Construction::Ghz { n, q },
    )
}

/// The (2,1,3) qutrit threshold scheme with logical basis
/// |s_L⟩ = (1/√3) Σ_c |c, c+s, c+2s⟩ over Z_3.
pub fn cgl23_scheme() -> Scheme {
    let mut enc = CMatrix::zeros(27, 3);
    let amp = C64::new(1.0 / 3f64.sqrt(), 0.0);
    for s in 0..3usize {
        for c in 0..3usize {
            let digits = [c, (c + s) % 3, (c + 2 * s) % 3];
            let flat = digits.iter().fold(0, |acc, &d| acc * 3 + d);
            enc[(flat, s)] = amp;
        }
    }
    Scheme::new(
        "cgl23",
        3,
        3,
        3,
        vec![],
        enc,
        Some(RampClaim {
            k: 2,
            k_prime: Some(1),
            n: 3,
        }),
        Construction::Cgl23,
    )
    .expect("fixed construction is valid")
}

/// The five-qubit ((5,2,3)) code as a (3,2,5) ramp scheme.
///
/// Built from the cyclic stabilizer generators XZZXI, IXZZX, XIXZZ, ZXIXZ;
/// the logical basis consists of the Z^⊗5 eigenstates of the code space.
pub fn five_qubit_scheme() -> Scheme {
    let (x, z, _) = qudit::pauli_ops(2);
    let id = CMatrix::identity(2, 2);
    let pick = |c: char| -> &CMatrix {
        match c {
            'X' => &x,
            'Z' => &z,
            _ => &id,
        }
    };
    let string_op = |s: &str| -> CMatrix {
        s.chars()
            .map(pick)
            .fold(CMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
    };
    let generators = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"].map(string_op);
    // projector onto the code space: average of the stabilizer group
    let mut projector = CMatrix::zeros(32, 32);
    for mask in 0..16u32 {
        let mut g = CMatrix::identity(32, 32);
        for (bit, generator) in generators.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                g = &g * generator;
            }
        }
        projector += g;
    }
    projector /= C64::new(16.0, 0.0);
    let mut enc = CMatrix::zeros(32, 2);
    for (i, seed) in [0usize, 31].iter().enumerate() {
        let mut col = projector.column(*seed).clone_owned();
        let norm = col.norm();
        col /= C64::new(norm, 0.0);
        enc.set_column(i, &col);
    }
    Scheme::new(
        "five_qubit",
        2,
        2,
        5,
        vec![],
        enc,
        Some(RampClaim {
            k: 3,
            k_prime: Some(2),
            n: 5,
        }),
        Construction::FiveQubit,
    )
    .expect("fixed construction is valid")
}

/// Reed-Solomon threshold scheme over GF(q): degree-(k-1) polynomials with
/// f(0) = s evaluated at points 1..n, n = 2k-1. Yields a (k, k-1, 2k-1)
/// perfect threshold scheme.
pub fn reed_solomon_scheme(k: usize, q: usize) -> Result<Scheme> {
    if k < 1 {
        return Err(Error::InvalidShape("threshold k must be >= 1".into()));
    }
    if !is_prime(q) {
        return Err(Error::NotPrime { q });
    }
    let n = 2 * k - 1;
    if q <= n {
        return Err(Error::FieldTooSmall { q, n });
    }
    let shape = SystemShape::new(&vec![q; n])?;
    let coeff_count = q.pow((k - 1) as u32);
    let amp = C64::new((q as f64).powf(-((k - 1) as f64) / 2.0), 0.0);
    let mut enc = CMatrix::zeros(shape.total_dim(), q);
    for s in 0..q {
        for idx in 0..coeff_count {
            // decode idx into the higher coefficients c_1..c_{k-1}
            let mut coeffs = Vec::with_capacity(k);
            coeffs.push(s);
            let mut rem = idx;
            for _ in 1..k {
                coeffs.push(rem % q);
                rem /= q;
            }
            let mut flat = 0usize;
            for point in 1..=n {
                // Horner evaluation of f at x = point, mod q
                let mut value = 0usize;
                for &c in coeffs.iter().rev() {
                    value = (value * point + c) % q;
                }
                flat = flat * q + value;
            }
            enc[(flat, s)] = amp;
        }
    }
    Scheme::new(
        format!("rs_{k}_{q}"),
        q,
        q,
        n,
        vec![],
        enc,
        Some(RampClaim {
            k,
            k_prime: Some(k - 1),
            n,
        }),
        Construction::ReedSolomon { k, q },
    )
}

/// Discards additional shares, turning the scheme into a mixed one.
///
/// The encoding isometry is unchanged; the claimed lower ramp parameter is
/// reset pending fresh analysis.
pub fn discard_shares(scheme: &Scheme, drop: &[usize]) -> Result<Scheme> {
    if drop.is_empty() {
        return Ok(scheme.clone());
    }
    for &p in drop {
        if scheme.discarded.contains(&p) {
            return Err(Error::InvalidPositions(format!(
                "share {p} is already discarded"
            )));
        }
    }
    let mut discarded = scheme.discarded.clone();
    discarded.extend_from_slice(drop);
    let claimed = scheme.claimed_ramp.map(|r| RampClaim {
        k: r.k,
        k_prime: None,
        n: r.n.saturating_sub(drop.len()),
    });
    let mut out = scheme.clone();
    out.claimed_ramp = claimed;
    out.set_discarded(discarded)?;
    Ok(out.with_name(format!(
        "{}_drop{}",
        scheme.name,
        drop.iter()
            .map(|p| (p + 1).to_string())
            .collect::<Vec<_>>()
            .join("_")
    )))
}

/// The dealer-players channel state of a scheme.
///
/// For pure schemes this is the pure state (1/√κ) Σ_i |i⟩_d |i_L⟩ on systems
/// (dealer, shares...); for mixed schemes the discarded shares are traced
/// out. The dealer marginal is always maximally mixed.
#[derive(Debug, Clone)]
pub struct ChannelState {
    scheme_name: String,
    state: QuantumState,
}

impl ChannelState {
    pub fn scheme_name(&self) -> &str {
        &self.scheme_name
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }
}

/// Channel state on (dealer, all n_total shares), before any discarding.
pub fn purified_channel_state(scheme: &Scheme) -> Result<PureState> {
    let kappa = scheme.secret_dim();
    let mut dims = vec![kappa];
    dims.extend(vec![scheme.share_dim(); scheme.n_total()]);
    let shape = SystemShape::new(&dims)?;
    let share_dim_total = scheme.share_shape().total_dim();
    let scale = C64::new(1.0 / (kappa as f64).sqrt(), 0.0);
    let mut v = CVector::zeros(shape.total_dim());
    for i in 0..kappa {
        for row in 0..share_dim_total {
            v[i * share_dim_total + row] = scale * scheme.encoding()[(row, i)];
        }
    }
    PureState::new(shape, v)
}

/// Channel state on (dealer, active shares), validated to have a maximally
/// mixed dealer marginal.
pub fn channel_state(scheme: &Scheme) -> Result<ChannelState> {
    let purified = purified_channel_state(scheme)?;
    let state = if scheme.is_pure() {
        QuantumState::Pure(purified)
    } else {
        let keep: Vec<usize> = std::iter::once(0)
            .chain(scheme.active_positions().iter().map(|&p| p + 1))
            .collect();
        QuantumState::Mixed(partial_trace_pure(&purified, &keep)?)
    };
    let dealer = state.partial_trace(&[0])?;
    let tau = DensityMatrix::maximally_mixed(SystemShape::new(&[scheme.secret_dim()])?);
    let dist = trace_distance(&dealer, &tau)?;
    if dist > CHANNEL_STATE_TOL {
        return Err(Error::InvariantViolation(format!(
            "dealer marginal of the channel state is not maximally mixed (distance {dist:.3e})"
        )));
    }
    Ok(ChannelState {
        scheme_name: scheme.name().to_string(),
        state,
    })
}

/// Post-measurement player state after the dealer projects onto |i(t)⟩.
///
/// Equals the encoding applied to the complex conjugate of |i(t)⟩; for mixed
/// schemes the discarded shares are traced out of the result. Basis labels
/// other than 0 require an ideal scheme.
pub fn logical_basis_state(scheme: &Scheme, t: usize, i: usize) -> Result<QuantumState> {
    let pure = logical_basis_state_pure(scheme, t, i)?;
    if scheme.is_pure() {
        Ok(QuantumState::Pure(pure))
    } else {
        Ok(QuantumState::Mixed(partial_trace_pure(
            &pure,
            &scheme.active_positions(),
        )?))
    }
}

/// As `logical_basis_state`, but on the full purified share register.
pub fn logical_basis_state_pure(scheme: &Scheme, t: usize, i: usize) -> Result<PureState> {
    let kappa = scheme.secret_dim();
    if t != 0 && !scheme.is_ideal() {
        return Err(Error::NonIdealScheme {
            kappa,
            q: scheme.share_dim(),
        });
    }
    if i >= kappa {
        return Err(Error::DimensionMismatch {
            expected: kappa,
            got: i,
        });
    }
    if t == 0 {
        return scheme.logical_state(i);
    }
    let basis = mub_basis(scheme.share_dim(), t)?;
    let conj = CVector::from_iterator(kappa, basis.vector(i).iter().map(|z| z.conj()));
    let secret = PureState::new(SystemShape::new(&[kappa])?, conj)?;
    scheme.encode(&secret)
}

// ---------------------------------------------------------------------------
// Scheme file format
// ---------------------------------------------------------------------------

/// Serializes a scheme to the text format (see `scheme_from_str`).
pub fn scheme_to_string(scheme: &Scheme) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name={}", scheme.name());
    let _ = writeln!(out, "q={}", scheme.share_dim());
    let _ = writeln!(out, "kappa={}", scheme.secret_dim());
    let _ = writeln!(out, "n={}", scheme.n_total());
    if !scheme.discarded().is_empty() {
        let list: Vec<String> = scheme
            .discarded()
            .iter()
            .map(|p| (p + 1).to_string())
            .collect();
        let _ = writeln!(out, "discarded={}", list.join(","));
    }
    let _ = writeln!(out, "construction={}", scheme.construction().file_token());
    if matches!(scheme.construction(), Construction::Explicit) {
        for i in 0..scheme.secret_dim() {
            let _ = writeln!(out, "logical {i}");
            for row in 0..scheme.encoding().nrows() {
                let amp = scheme.encoding()[(row, i)];
                if amp.norm() > 0.0 {
                    let _ = writeln!(out, "{row} {:.16e} {:.16e}", amp.re, amp.im);
                }
            }
        }
    }
    out
}

/// Parses the scheme text format.
///
/// Header lines `key=value` (name, q, kappa, n, optional discarded with
/// 1-based positions, construction), then for `construction=explicit` one
/// `logical i` block per column with `index re im` amplitude lines. Blank
/// lines and `#` comments are ignored.
pub fn scheme_from_str(text: &str) -> Result<Scheme> {
    let mut name: Option<String> = None;
    let mut q: Option<usize> = None;
    let mut kappa: Option<usize> = None;
    let mut n: Option<usize> = None;
    let mut discarded: Vec<usize> = Vec::new();
    let mut construction: Option<(String, usize)> = None; // token + line no

    let mut lines = text.lines().enumerate().peekable();
    let perr = |line: usize, message: String| Error::ParseError {
        line: line + 1,
        message,
    };

    while let Some(&(idx, raw)) = lines.peek() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            lines.next();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            break; // start of the amplitude blocks
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "name" => name = Some(value.to_string()),
            "q" => {
                q = Some(value.parse().map_err(|_| {
                    perr(idx, format!("invalid share dimension '{value}'"))
                })?)
            }
            "kappa" => {
                kappa = Some(value.parse().map_err(|_| {
                    perr(idx, format!("invalid secret dimension '{value}'"))
                })?)
            }
            "n" => {
                n = Some(value.parse().map_err(|_| {
                    perr(idx, format!("invalid share count '{value}'"))
                })?)
            }
            "discarded" => {
                for item in value.split(',') {
                    let p: usize = item.trim().parse().map_err(|_| {
                        perr(idx, format!("invalid discarded position '{item}'"))
                    })?;
                    if p == 0 {
                        return Err(perr(idx, "share positions are 1-based".into()));
                    }
                    discarded.push(p - 1);
                }
            }
            "construction" => construction = Some((value.to_string(), idx)),
            other => return Err(perr(idx, format!("unknown header '{other}'"))),
        }
        lines.next();
    }

    let n = n.ok_or_else(|| perr(0, "missing 'n' header".into()))?;
    let q = q.ok_or_else(|| perr(0, "missing 'q' header".into()))?;
    let kappa = kappa.ok_or_else(|| perr(0, "missing 'kappa' header".into()))?;
    let (token, cons_line) =
        construction.ok_or_else(|| perr(0, "missing 'construction' header".into()))?;

    let base = if token == "explicit" {
        let shape = SystemShape::new(&vec![q; n])?;
        let mut enc = CMatrix::zeros(shape.total_dim(), kappa);
        let mut current: Option<usize> = None;
        let mut seen = vec![false; kappa];
        for (idx, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("logical") {
                let i: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| perr(idx, format!("invalid logical block '{line}'")))?;
                if i >= kappa {
                    return Err(perr(idx, format!("logical index {i} out of range")));
                }
                if seen[i] {
                    return Err(perr(idx, format!("duplicate logical block {i}")));
                }
                seen[i] = true;
                current = Some(i);
                continue;
            }
            let col = current.ok_or_else(|| {
                perr(idx, "amplitude line before any 'logical' block".into())
            })?;
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), Some(c), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(perr(idx, format!("expected 'index re im', got '{line}'")));
            };
            let row: usize = a
                .parse()
                .map_err(|_| perr(idx, format!("invalid basis index '{a}'")))?;
            if row >= shape.total_dim() {
                return Err(perr(idx, format!("basis index {row} out of range")));
            }
            let re: f64 = b
                .parse()
                .map_err(|_| perr(idx, format!("invalid amplitude '{b}'")))?;
            let im: f64 = c
                .parse()
                .map_err(|_| perr(idx, format!("invalid amplitude '{c}'")))?;
            enc[(row, col)] = C64::new(re, im);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(perr(
                cons_line,
                format!("missing 'logical {missing}' block"),
            ));
        }
        Scheme::new(
            name.clone().unwrap_or_else(|| "explicit".into()),
            q,
            kappa,
            n,
            vec![],
            enc,
            None,
            Construction::Explicit,
        )?
    } else {
        let built = match token.as_str() {
            "ghz" => ghz_scheme(n, q)?,
            "cgl23" => cgl23_scheme(),
            "five_qubit" => five_qubit_scheme(),
            rs if rs.starts_with("rs") => {
                let mut k_param: Option<usize> = None;
                let mut q_param: Option<usize> = None;
                for part in rs.split_whitespace().skip(1) {
                    match part.split_once('=') {
                        Some(("k", v)) => {
                            k_param = Some(v.parse().map_err(|_| {
                                perr(cons_line, format!("invalid rs parameter '{part}'"))
                            })?)
                        }
                        Some(("q", v)) => {
                            q_param = Some(v.parse().map_err(|_| {
                                perr(cons_line, format!("invalid rs parameter '{part}'"))
                            })?)
                        }
                        _ => {
                            return Err(perr(
                                cons_line,
                                format!("invalid rs parameter '{part}'"),
                            ))
                        }
                    }
                }
                let k = k_param
                    .ok_or_else(|| perr(cons_line, "rs construction needs k=".into()))?;
                let qq = q_param
                    .ok_or_else(|| perr(cons_line, "rs construction needs q=".into()))?;
                reed_solomon_scheme(k, qq)?
            }
            other => {
                return Err(perr(
                    cons_line,
                    format!("unknown construction '{other}'"),
                ))
            }
        };
        if built.share_dim() != q || built.secret_dim() != kappa || built.n_total() != n {
            return Err(perr(
                cons_line,
                format!(
                    "headers (q={q}, kappa={kappa}, n={n}) do not match construction \
                     (q={}, kappa={}, n={})",
                    built.share_dim(),
                    built.secret_dim(),
                    built.n_total()
                ),
            ));
        }
        built
    };

    let mut scheme = if discarded.is_empty() {
        base
    } else {
        discard_shares(&base, &discarded)?
    };
    if let Some(name) = name {
        scheme = scheme.with_name(name);
    }
    Ok(scheme)
}

/// Writes a scheme file.
pub fn save_scheme(scheme: &Scheme, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, scheme_to_string(scheme))?;
    Ok(())
}

/// Loads a scheme file.
pub fn load_scheme(path: impl AsRef<Path>) -> Result<Scheme> {
    let text = std::fs::read_to_string(path)?;
    scheme_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::{subsystem_entropy, von_neumann_entropy};

    #[test]
    fn ghz_logical_basis() {
        let s = ghz_scheme(3, 2).unwrap();
        let zero = s.logical_state(0).unwrap();
        let one = s.logical_state(1).unwrap();
        assert!((zero.amplitudes()[0].re - 1.0).abs() < 1e-15);
        assert!((one.amplitudes()[7].re - 1.0).abs() < 1e-15);
        assert_eq!(s.claimed_ramp().unwrap().k, 3);
    }

    #[test]
    fn ghz_channel_state_is_ghz() {
        let s = ghz_scheme(3, 2).unwrap();
        let cs = purified_channel_state(&s).unwrap();
        let amp = 1.0 / 2f64.sqrt();
        assert!((cs.amplitudes()[0].re - amp).abs() < 1e-14);
        assert!((cs.amplitudes()[15].re - amp).abs() < 1e-14);
        assert!((cs.amplitudes().norm_squared() - 1.0).abs() < 1e-12);
        channel_state(&s).unwrap();
    }

    #[test]
    fn cgl23_is_valid_and_ideal() {
        let s = cgl23_scheme();
        assert_eq!((s.share_dim(), s.secret_dim(), s.n_total()), (3, 3, 3));
        assert!(s.is_pure() && s.is_ideal());
        channel_state(&s).unwrap();
    }

    #[test]
    fn five_qubit_code_space() {
        let s = five_qubit_scheme();
        assert_eq!(s.n_total(), 5);
        // logical Z = Z^⊗5 fixes |0_L⟩, logical X = X^⊗5 maps |0_L⟩ to |1_L⟩
        let (x, z, _) = qudit::pauli_ops(2);
        let zbar = (0..5).fold(CMatrix::identity(1, 1), |acc, _| acc.kronecker(&z));
        let xbar = (0..5).fold(CMatrix::identity(1, 1), |acc, _| acc.kronecker(&x));
        let zero = s.logical_state(0).unwrap();
        let one = s.logical_state(1).unwrap();
        assert!((&zbar * zero.amplitudes() - zero.amplitudes()).norm() < 1e-12);
        assert!((&xbar * zero.amplitudes() - one.amplitudes()).norm() < 1e-12);
        // single-share reductions of codewords are maximally mixed
        let rho = partial_trace_pure(&zero, &[2]).unwrap();
        assert!((von_neumann_entropy(&rho) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reed_solomon_shapes_and_errors() {
        let s = reed_solomon_scheme(2, 5).unwrap();
        assert_eq!((s.share_dim(), s.secret_dim(), s.n_total()), (5, 5, 3));
        assert!(matches!(
            reed_solomon_scheme(2, 3),
            Err(Error::FieldTooSmall { q: 3, n: 3 })
        ));
        assert!(matches!(
            reed_solomon_scheme(2, 6),
            Err(Error::NotPrime { q: 6 })
        ));
        let s37 = reed_solomon_scheme(3, 7).unwrap();
        assert_eq!(s37.n_total(), 5);
        assert_eq!(s37.claimed_ramp().unwrap().k, 3);
    }

    #[test]
    fn discard_share_bookkeeping() {
        let s = five_qubit_scheme();
        let dropped = discard_shares(&s, &[4]).unwrap();
        assert_eq!(dropped.n_active(), 4);
        assert_eq!(dropped.discarded(), &[4]);
        assert!(!dropped.is_pure());
        assert_eq!(dropped.claimed_ramp().unwrap().k_prime, None);
        // dropping nothing is the identity
        let same = discard_shares(&s, &[]).unwrap();
        assert_eq!(same.encoding(), s.encoding());
        assert!(matches!(
            discard_shares(&dropped, &[4]),
            Err(Error::InvalidPositions(_))
        ));
        assert!(discard_shares(&s, &[0, 1, 2, 3, 4]).is_err());
        // mixed channel state still has unit trace
        let cs = channel_state(&dropped).unwrap();
        let rho = cs.state().to_density();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logical_basis_state_examples() {
        let ghz = ghz_scheme(3, 2).unwrap();
        let one = logical_basis_state(&ghz, 0, 1).unwrap();
        let v = one.as_pure().unwrap().amplitudes();
        assert!((v[7].re - 1.0).abs() < 1e-14);

        // X-basis logical state checked against direct projection of the
        // channel state: ⟨i(t)|_d ⊗ I |CS⟩, renormalized.
        let cs = purified_channel_state(&ghz).unwrap();
        let basis = mub_basis(2, 2).unwrap();
        for i in 0..2 {
            let (projected, p) = qudit::project_out(&cs, 0, basis.vector(i)).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
            let direct = logical_basis_state(&ghz, 2, i).unwrap();
            let overlap = projected.inner(direct.as_pure().unwrap()).norm();
            assert!((overlap - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn logical_complementarity_cgl23() {
        let s = cgl23_scheme();
        for t in 0..=3usize {
            for tp in 0..=3usize {
                if t == tp {
                    continue;
                }
                for i in 0..3 {
                    for j in 0..3 {
                        let a = logical_basis_state_pure(&s, t, i).unwrap();
                        let b = logical_basis_state_pure(&s, tp, j).unwrap();
                        let ov = a.inner(&b).norm_sqr();
                        assert!((ov - 1.0 / 3.0).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn logical_basis_state_requires_ideal_scheme() {
        // a non-ideal explicit scheme: kappa=2 in one qutrit share pair
        let mut enc = CMatrix::zeros(9, 2);
        enc[(0, 0)] = C64::new(1.0, 0.0);
        enc[(4, 1)] = C64::new(1.0, 0.0);
        let s = Scheme::new(
            "nonideal",
            3,
            2,
            2,
            vec![],
            enc,
            None,
            Construction::Explicit,
        )
        .unwrap();
        assert!(logical_basis_state(&s, 0, 1).is_ok());
        assert!(matches!(
            logical_basis_state(&s, 1, 0),
            Err(Error::NonIdealScheme { kappa: 2, q: 3 })
        ));
    }

    #[test]
    fn channel_state_dealer_entropy() {
        for s in [ghz_scheme(2, 3).unwrap(), cgl23_scheme(), five_qubit_scheme()] {
            let cs = purified_channel_state(&s).unwrap();
            let e = subsystem_entropy(&cs, &[0]).unwrap();
            assert!((e - (s.secret_dim() as f64).log2()).abs() < 1e-10);
        }
    }

    #[test]
    fn file_roundtrip_construction_tag() {
        let s = ghz_scheme(3, 2).unwrap();
        let text = scheme_to_string(&s);
        let loaded = scheme_from_str(&text).unwrap();
        assert_eq!(loaded.encoding(), s.encoding());
        assert_eq!(loaded.name(), s.name());
    }

    #[test]
    fn file_roundtrip_explicit_amplitudes() {
        let mut s = cgl23_scheme();
        s.construction = Construction::Explicit;
        let text = scheme_to_string(&s);
        let loaded = scheme_from_str(&text).unwrap();
        assert!((loaded.encoding() - s.encoding()).norm() < 1e-15);
    }

    #[test]
    fn file_parse_errors_carry_line_numbers() {
        let text = "name=bad\nq=oops\n";
        match scheme_from_str(text) {
            Err(Error::ParseError { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        // non-normalized explicit column
        let text = "name=x\nq=2\nkappa=1\nn=1\nconstruction=explicit\nlogical 0\n0 0.5 0.0\n";
        assert!(matches!(
            scheme_from_str(text),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn mixed_scheme_roundtrip() {
        let dropped = discard_shares(&five_qubit_scheme(), &[4]).unwrap();
        let text = scheme_to_string(&dropped);
        let loaded = scheme_from_str(&text).unwrap();
        assert_eq!(loaded.discarded(), &[4]);
        assert_eq!(loaded.encoding(), dropped.encoding());
    }

    #[test]
    fn save_and_load_through_the_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rs.scheme");
        let s = reed_solomon_scheme(2, 5).unwrap();
        save_scheme(&s, &path).unwrap();
        let loaded = load_scheme(&path).unwrap();
        assert_eq!(loaded.encoding(), s.encoding());
        assert!(matches!(
            load_scheme(dir.path().join("missing.scheme")),
            Err(Error::Io(_))
        ));
    }
}
