//! Sparse 3-tensors represented by their support.
//!
//! Everything downstream (orbit reduction, entropy programs, barrier bounds)
//! consumes only the set of nonzero index triples of a tensor together with
//! its axis dimensions. Coefficients are kept as exact rationals so that
//! support membership is never blurred by rounding: a coefficient is either
//! zero (not a support point) or it is not.
//!
//! Pair indices produced by [`Tensor::kronecker`] and [`Tensor::matmul`] are
//! flattened row-major (`(a, b) -> a * n_b + b`), so constructed supports are
//! reproducible bit for bit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use num_rational::Ratio;
use thiserror::Error;

/// Exact coefficient type; only zero/nonzero matters downstream.
pub type Coeff = Ratio<i64>;

/// One nonzero position of a 3-tensor, 0-based on each axis.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl Triple {
    pub fn new(i: usize, j: usize, k: usize) -> Self {
        Triple { i, j, k }
    }

    pub fn axis(&self, ax: usize) -> usize {
        match ax {
            0 => self.i,
            1 => self.j,
            2 => self.k,
            _ => panic!("axis index {ax} out of range"),
        }
    }
}

impl fmt::Debug for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.i, self.j, self.k)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TensorError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("support must be nonempty")]
    EmptySupport,
    #[error("triple {0:?} out of range for dims {1:?}")]
    OutOfRange(Triple, (usize, usize, usize)),
    #[error("duplicate triple {0:?}")]
    DuplicateTriple(Triple),
    #[error("zero coefficient at {0:?}")]
    ZeroCoefficient(Triple),
    #[error("dimension product exceeds capacity")]
    Capacity,
    #[error("coefficient arithmetic overflow")]
    CoefficientOverflow,
}

/// Dimensions plus the set of nonzero index triples; the object every
/// functional consumes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorSupport {
    dims: (usize, usize, usize),
    points: BTreeSet<Triple>,
}

impl TensorSupport {
    pub fn new(
        dims: (usize, usize, usize),
        points: impl IntoIterator<Item = Triple>,
    ) -> Result<Self, TensorError> {
        if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
            return Err(TensorError::ZeroDimension);
        }
        let mut set = BTreeSet::new();
        for p in points {
            if p.i >= dims.0 || p.j >= dims.1 || p.k >= dims.2 {
                return Err(TensorError::OutOfRange(p, dims));
            }
            if !set.insert(p) {
                return Err(TensorError::DuplicateTriple(p));
            }
        }
        if set.is_empty() {
            return Err(TensorError::EmptySupport);
        }
        Ok(TensorSupport { dims, points: set })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn dim(&self, ax: usize) -> usize {
        match ax {
            0 => self.dims.0,
            1 => self.dims.1,
            2 => self.dims.2,
            _ => panic!("axis index {ax} out of range"),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &Triple) -> bool {
        self.points.contains(p)
    }

    /// Points in sorted (lexicographic) order.
    pub fn points(&self) -> impl Iterator<Item = &Triple> + '_ {
        self.points.iter()
    }
}

/// A tensor: support plus an exact nonzero coefficient per support point.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Tensor {
    support: TensorSupport,
    coeffs: BTreeMap<Triple, Coeff>,
}

impl Tensor {
    /// Builds a tensor from explicit (triple, coefficient) entries.
    pub fn new(
        dims: (usize, usize, usize),
        entries: impl IntoIterator<Item = (Triple, Coeff)>,
    ) -> Result<Self, TensorError> {
        let mut coeffs = BTreeMap::new();
        let mut points = Vec::new();
        for (p, c) in entries {
            if c == Coeff::from_integer(0) {
                return Err(TensorError::ZeroCoefficient(p));
            }
            if coeffs.insert(p, c).is_some() {
                return Err(TensorError::DuplicateTriple(p));
            }
            points.push(p);
        }
        let support = TensorSupport::new(dims, points)?;
        Ok(Tensor { support, coeffs })
    }

    fn from_unit_points(
        dims: (usize, usize, usize),
        points: impl IntoIterator<Item = Triple>,
    ) -> Result<Self, TensorError> {
        let one = Coeff::from_integer(1);
        Tensor::new(dims, points.into_iter().map(|p| (p, one)))
    }

    /// The diagonal tensor with `n` unit entries.
    pub fn diagonal(n: usize) -> Result<Self, TensorError> {
        if n == 0 {
            return Err(TensorError::ZeroDimension);
        }
        Tensor::from_unit_points((n, n, n), (0..n).map(|i| Triple::new(i, i, i)))
    }

    /// The matrix multiplication tensor for an `l x m` by `m x n` product.
    ///
    /// Support points are `((i,j), (j,k), (k,i))` with each pair flattened
    /// row-major, giving dims `(l*m, m*n, n*l)` and `l*m*n` points.
    pub fn matmul(l: usize, m: usize, n: usize) -> Result<Self, TensorError> {
        if l == 0 || m == 0 || n == 0 {
            return Err(TensorError::ZeroDimension);
        }
        let dims = (
            l.checked_mul(m).ok_or(TensorError::Capacity)?,
            m.checked_mul(n).ok_or(TensorError::Capacity)?,
            n.checked_mul(l).ok_or(TensorError::Capacity)?,
        );
        let mut pts = Vec::with_capacity(l * m * n);
        for i in 0..l {
            for j in 0..m {
                for k in 0..n {
                    pts.push(Triple::new(i * m + j, j * n + k, k * l + i));
                }
            }
        }
        Tensor::from_unit_points(dims, pts)
    }

    /// The big Coppersmith-Winograd tensor on `q + 2` labels per axis.
    ///
    /// Support: `(i,i,0), (i,0,i), (0,i,i)` for `1 <= i <= q` plus the three
    /// corner points carrying label `q + 1`; `3q + 3` points in total.
    pub fn cw_big(q: usize) -> Result<Self, TensorError> {
        if q == 0 {
            return Err(TensorError::ZeroDimension);
        }
        let n = q + 2;
        let mut pts = Vec::with_capacity(3 * q + 3);
        for i in 1..=q {
            pts.push(Triple::new(i, i, 0));
            pts.push(Triple::new(i, 0, i));
            pts.push(Triple::new(0, i, i));
        }
        pts.push(Triple::new(0, 0, q + 1));
        pts.push(Triple::new(0, q + 1, 0));
        pts.push(Triple::new(q + 1, 0, 0));
        Tensor::from_unit_points((n, n, n), pts)
    }

    /// The small Coppersmith-Winograd tensor: `cw_big` without the corners.
    pub fn cw_small(q: usize) -> Result<Self, TensorError> {
        if q == 0 {
            return Err(TensorError::ZeroDimension);
        }
        let n = q + 1;
        let mut pts = Vec::with_capacity(3 * q);
        for i in 1..=q {
            pts.push(Triple::new(i, i, 0));
            pts.push(Triple::new(i, 0, i));
            pts.push(Triple::new(0, i, i));
        }
        Tensor::from_unit_points((n, n, n), pts)
    }

    /// Kronecker product; pair indices flattened row-major, coefficients
    /// multiply exactly.
    pub fn kronecker(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        let (a, b) = (self.support.dims, other.support.dims);
        let dims = (
            a.0.checked_mul(b.0).ok_or(TensorError::Capacity)?,
            a.1.checked_mul(b.1).ok_or(TensorError::Capacity)?,
            a.2.checked_mul(b.2).ok_or(TensorError::Capacity)?,
        );
        let mut entries = Vec::with_capacity(self.coeffs.len() * other.coeffs.len());
        for (p, cp) in &self.coeffs {
            for (r, cr) in &other.coeffs {
                let t = Triple::new(p.i * b.0 + r.i, p.j * b.1 + r.j, p.k * b.2 + r.k);
                let c = checked_mul(*cp, *cr).ok_or(TensorError::CoefficientOverflow)?;
                entries.push((t, c));
            }
        }
        Tensor::new(dims, entries)
    }

    /// Direct sum: supports placed in disjoint diagonal blocks.
    pub fn direct_sum(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        let (a, b) = (self.support.dims, other.support.dims);
        let dims = (
            a.0.checked_add(b.0).ok_or(TensorError::Capacity)?,
            a.1.checked_add(b.1).ok_or(TensorError::Capacity)?,
            a.2.checked_add(b.2).ok_or(TensorError::Capacity)?,
        );
        let mut entries: Vec<(Triple, Coeff)> =
            self.coeffs.iter().map(|(p, c)| (*p, *c)).collect();
        for (p, c) in &other.coeffs {
            entries.push((Triple::new(p.i + a.0, p.j + a.1, p.k + a.2), *c));
        }
        Tensor::new(dims, entries)
    }

    pub fn support(&self) -> &TensorSupport {
        &self.support
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.support.dims
    }

    pub fn coeff(&self, p: &Triple) -> Option<&Coeff> {
        self.coeffs.get(p)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Triple, &Coeff)> + '_ {
        self.coeffs.iter()
    }
}

fn checked_mul(a: Coeff, b: Coeff) -> Option<Coeff> {
    let num = a.numer().checked_mul(*b.numer())?;
    let den = a.denom().checked_mul(*b.denom())?;
    if den == 0 {
        return None;
    }
    Some(Coeff::new(num, den))
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DocumentError {
    #[error("line {line}: malformed entry: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: triple ({i},{j},{k}) out of range for dims ({d0},{d1},{d2})")]
    OutOfRange {
        line: usize,
        i: usize,
        j: usize,
        k: usize,
        d0: usize,
        d1: usize,
        d2: usize,
    },
    #[error("line {line}: explicit zero coefficient")]
    ZeroCoefficient { line: usize },
    #[error("line {line}: duplicate triple ({i},{j},{k})")]
    Duplicate { line: usize, i: usize, j: usize, k: usize },
    #[error("missing `dims n1 n2 n3` header")]
    MissingHeader,
    #[error("document has no support points")]
    EmptySupport,
}

/// Parses the tensor document format.
///
/// A header line `dims n1 n2 n3`, then one line per support point
/// `i j k num/den` (a bare integer coefficient is accepted); `#` starts a
/// comment; lines may appear in any order after the header; duplicates are
/// rejected.
pub fn parse_tensor(doc: &str) -> Result<Tensor, DocumentError> {
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut entries: Vec<(Triple, Coeff)> = Vec::new();
    let mut seen: BTreeSet<Triple> = BTreeSet::new();

    for (idx, raw) in doc.lines().enumerate() {
        let line = idx + 1;
        let text = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if dims.is_none() {
            if tokens[0] != "dims" || tokens.len() != 4 {
                return Err(DocumentError::Malformed {
                    line,
                    reason: "expected header `dims n1 n2 n3`".into(),
                });
            }
            let mut d = [0usize; 3];
            for (slot, tok) in d.iter_mut().zip(&tokens[1..]) {
                *slot = tok.parse().map_err(|_| DocumentError::Malformed {
                    line,
                    reason: format!("bad dimension `{tok}`"),
                })?;
                if *slot == 0 {
                    return Err(DocumentError::Malformed {
                        line,
                        reason: "zero dimension".into(),
                    });
                }
            }
            dims = Some((d[0], d[1], d[2]));
            continue;
        }
        let (d0, d1, d2) = dims.unwrap();
        if tokens.len() != 4 {
            return Err(DocumentError::Malformed {
                line,
                reason: format!("expected `i j k coeff`, got {} fields", tokens.len()),
            });
        }
        let mut idx3 = [0usize; 3];
        for (slot, tok) in idx3.iter_mut().zip(&tokens[..3]) {
            *slot = tok.parse().map_err(|_| DocumentError::Malformed {
                line,
                reason: format!("bad index `{tok}`"),
            })?;
        }
        let (i, j, k) = (idx3[0], idx3[1], idx3[2]);
        if i >= d0 || j >= d1 || k >= d2 {
            return Err(DocumentError::OutOfRange { line, i, j, k, d0, d1, d2 });
        }
        let coeff = parse_coeff(tokens[3]).ok_or_else(|| DocumentError::Malformed {
            line,
            reason: format!("bad coefficient `{}`", tokens[3]),
        })?;
        if coeff == Coeff::from_integer(0) {
            return Err(DocumentError::ZeroCoefficient { line });
        }
        let t = Triple::new(i, j, k);
        if !seen.insert(t) {
            return Err(DocumentError::Duplicate { line, i, j, k });
        }
        entries.push((t, coeff));
    }

    let dims = dims.ok_or(DocumentError::MissingHeader)?;
    if entries.is_empty() {
        return Err(DocumentError::EmptySupport);
    }
    // constructor invariants re-checked, but all class of errors handled above
    Tensor::new(dims, entries).map_err(|_| DocumentError::EmptySupport)
}

fn parse_coeff(tok: &str) -> Option<Coeff> {
    match tok.split_once('/') {
        Some((num, den)) => {
            let num: i64 = num.parse().ok()?;
            let den: i64 = den.parse().ok()?;
            if den == 0 {
                return None;
            }
            Some(Coeff::new(num, den))
        }
        None => tok.parse::<i64>().ok().map(Coeff::from_integer),
    }
}

/// Serializes a tensor to the document format; `parse_tensor` of the result
/// reproduces the tensor exactly.
pub fn serialize_tensor(t: &Tensor) -> String {
    let (d0, d1, d2) = t.dims();
    let mut out = String::new();
    let _ = writeln!(out, "dims {d0} {d1} {d2}");
    for (p, c) in t.entries() {
        let _ = writeln!(out, "{} {} {} {}/{}", p.i, p.j, p.k, c.numer(), c.denom());
    }
    out
}

// ---------------------------------------------------------------------------
// Built-in tensor ids and the asymptotic rank registry
// ---------------------------------------------------------------------------

/// Ids for the tensors used throughout: `diag:n`, `mm:l,m,n`, `cw:q`,
/// `cwsmall:q`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BuiltinId {
    Diag(usize),
    MatMul(usize, usize, usize),
    CwBig(usize),
    CwSmall(usize),
}

impl fmt::Display for BuiltinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinId::Diag(n) => write!(f, "diag:{n}"),
            BuiltinId::MatMul(l, m, n) => write!(f, "mm:{l},{m},{n}"),
            BuiltinId::CwBig(q) => write!(f, "cw:{q}"),
            BuiltinId::CwSmall(q) => write!(f, "cwsmall:{q}"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdError {
    #[error("unknown tensor id `{0}` (expected diag:n, mm:l,m,n, cw:q or cwsmall:q)")]
    Unknown(String),
    #[error("bad parameter in tensor id `{0}`")]
    BadParameter(String),
}

impl std::str::FromStr for BuiltinId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, IdError> {
        let (kind, args) = s.split_once(':').ok_or_else(|| IdError::Unknown(s.into()))?;
        let bad = || IdError::BadParameter(s.into());
        match kind {
            "diag" => Ok(BuiltinId::Diag(args.parse().map_err(|_| bad())?)),
            "cw" => Ok(BuiltinId::CwBig(args.parse().map_err(|_| bad())?)),
            "cwsmall" => Ok(BuiltinId::CwSmall(args.parse().map_err(|_| bad())?)),
            "mm" => {
                let parts: Vec<&str> = args.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                let l = parts[0].parse().map_err(|_| bad())?;
                let m = parts[1].parse().map_err(|_| bad())?;
                let n = parts[2].parse().map_err(|_| bad())?;
                Ok(BuiltinId::MatMul(l, m, n))
            }
            _ => Err(IdError::Unknown(s.into())),
        }
    }
}

impl BuiltinId {
    pub fn build(&self) -> Result<Tensor, TensorError> {
        match *self {
            BuiltinId::Diag(n) => Tensor::diagonal(n),
            BuiltinId::MatMul(l, m, n) => Tensor::matmul(l, m, n),
            BuiltinId::CwBig(q) => Tensor::cw_big(q),
            BuiltinId::CwSmall(q) => Tensor::cw_small(q),
        }
    }
}

/// A known asymptotic rank value with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct RankRegistryEntry {
    pub tensor_id: String,
    pub asymptotic_rank: f64,
    pub provenance: String,
}

/// Built-in asymptotic ranks: `q + 2` for the big CW family and `n` for the
/// diagonal tensors. Everything else must be supplied by the caller.
pub fn builtin_rank(id: &BuiltinId) -> Option<RankRegistryEntry> {
    match *id {
        BuiltinId::CwBig(q) => Some(RankRegistryEntry {
            tensor_id: id.to_string(),
            asymptotic_rank: (q + 2) as f64,
            provenance: "degeneration methods for the big CW family".into(),
        }),
        BuiltinId::Diag(n) => Some(RankRegistryEntry {
            tensor_id: id.to_string(),
            asymptotic_rank: n as f64,
            provenance: "diagonal tensor".into(),
        }),
        _ => None,
    }
}
