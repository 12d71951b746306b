//! Real Clifford algebras Cl(p,q) over an orthonormal basis.
//!
//! Generators are numbered `0..n`; generator `i` squares to `+1` when
//! `i < p` and to `-1` otherwise. A basis blade is a bitmask over the
//! generators, with bit `i` standing for `e_i`, and blades are ordered
//! lexicographically by bitmask. The product of two blades is the XOR of
//! their masks times a sign fixed by the number of transpositions needed to
//! sort the concatenated generator list plus the squares of shared generators.
//!
//! Signs are integers, so generator-level relations are checked exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};

/// Largest supported number of generators.
pub const MAX_DIM: usize = 12;
/// Product tables are precomputed up to this many generators; above it the
/// sign is evaluated on the fly.
pub const TABLE_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub p: usize,
    pub q: usize,
}

impl Signature {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p + q == 0 {
            return Err(Error::EmptySignature { p, q });
        }
        Ok(Signature { p, q })
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }

    /// Dimension of the algebra, `2^n`.
    pub fn algebra_dim(&self) -> usize {
        1 << self.n()
    }

    /// Square of generator `i`.
    pub fn square(&self, i: usize) -> i8 {
        if i < self.p {
            1
        } else {
            -1
        }
    }

    /// Diagonal metric `diag(+1 x p, -1 x q)`.
    pub fn metric(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.square(i) as f64).collect()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cl({},{})", self.p, self.q)
    }
}

/// Sign and result blade of `a * b` for blade bitmasks under `sig`.
pub fn blade_product(sig: Signature, a: usize, b: usize) -> (i8, usize) {
    let mut swaps = 0u32;
    let mut rest = a >> 1;
    while rest != 0 {
        swaps += (rest & b).count_ones();
        rest >>= 1;
    }
    let mut sign: i8 = if swaps % 2 == 0 { 1 } else { -1 };
    // Generators at or beyond p square to -1.
    let negative_common = (a & b) >> sig.p;
    if negative_common.count_ones() % 2 == 1 {
        sign = -sign;
    }
    (sign, a ^ b)
}

/// Precomputed product signs, indexed `a * dim + b`. The result blade is
/// always `a ^ b`, so only the sign is stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BladeSignTable {
    dim: usize,
    signs: Vec<i8>,
}

impl BladeSignTable {
    fn build(sig: Signature) -> Self {
        let dim = sig.algebra_dim();
        let mut signs = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                signs.push(blade_product(sig, a, b).0);
            }
        }
        BladeSignTable { dim, signs }
    }

    #[inline]
    pub fn sign(&self, a: usize, b: usize) -> i8 {
        self.signs[a * self.dim + b]
    }
}

/// Signature together with its product table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Algebra {
    sig: Signature,
    table: Option<BladeSignTable>,
}

/// Build the algebra Cl(p,q).
pub fn make_algebra(p: usize, q: usize) -> Result<Arc<Algebra>> {
    let sig = Signature::new(p, q)?;
    if sig.n() > MAX_DIM {
        return Err(Error::Capacity { n: sig.n(), max: MAX_DIM });
    }
    let table = (sig.n() <= TABLE_DIM).then(|| BladeSignTable::build(sig));
    Ok(Arc::new(Algebra { sig, table }))
}

impl Algebra {
    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn n(&self) -> usize {
        self.sig.n()
    }

    pub fn dim(&self) -> usize {
        self.sig.algebra_dim()
    }

    pub fn has_table(&self) -> bool {
        self.table.is_some()
    }

    #[inline]
    pub fn product(&self, a: usize, b: usize) -> (i8, usize) {
        match &self.table {
            Some(t) => (t.sign(a, b), a ^ b),
            None => blade_product(self.sig, a, b),
        }
    }

    /// Generator `e_i` as a multivector.
    pub fn generator(self: &Arc<Self>, i: usize) -> Multivector {
        Multivector::blade(self, 1 << i, 1.0).expect("generator index below n")
    }

    pub fn scalar(self: &Arc<Self>, value: f64) -> Multivector {
        Multivector::blade(self, 0, value).expect("scalar blade")
    }

    /// Exact integer check of `e_i e_j + e_j e_i = 2 g_ij` for all pairs.
    pub fn generator_relations_hold(&self) -> bool {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                let (s1, b1) = self.product(1 << i, 1 << j);
                let (s2, b2) = self.product(1 << j, 1 << i);
                if i == j {
                    if b1 != 0 || s1 != self.sig.square(i) || s1 != s2 {
                        return false;
                    }
                } else if b1 != b2 || s1 + s2 != 0 {
                    return false;
                }
            }
        }
        true
    }
}

pub fn grade(blade: usize) -> usize {
    blade.count_ones() as usize
}

/// Dense multivector: `2^n` real coefficients indexed by blade bitmask.
#[derive(Clone, PartialEq)]
pub struct Multivector {
    alg: Arc<Algebra>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [", self.alg.sig)?;
        let mut first = true;
        for (b, v) in self.coeffs.iter().enumerate() {
            if *v != 0.0 {
                if !first {
                    write!(f, ", ")?;
                }
                write!(f, "{b:#b}: {v}")?;
                first = false;
            }
        }
        write!(f, "]")
    }
}

impl Multivector {
    pub fn zero(alg: &Arc<Algebra>) -> Self {
        Multivector { alg: alg.clone(), coeffs: vec![0.0; alg.dim()] }
    }

    pub fn blade(alg: &Arc<Algebra>, index: usize, value: f64) -> Result<Self> {
        if index >= alg.dim() {
            return Err(Error::BladeOutOfRange { index, n: alg.n() });
        }
        let mut m = Self::zero(alg);
        m.coeffs[index] = value;
        Ok(m)
    }

    pub fn from_coeffs(alg: &Arc<Algebra>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != alg.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for algebra of dimension {}",
                coeffs.len(),
                alg.dim()
            )));
        }
        Ok(Multivector { alg: alg.clone(), coeffs })
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.alg
    }

    pub fn signature(&self) -> Signature {
        self.alg.sig
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, blade: usize) -> f64 {
        self.coeffs.get(blade).copied().unwrap_or(0.0)
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        let (a, b) = (self.alg.sig, other.alg.sig);
        if a != b {
            return Err(Error::SignatureMismatch(a.p, a.q, b.p, b.q));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Multivector { alg: self.alg.clone(), coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Multivector { alg: self.alg.clone(), coeffs })
    }

    pub fn scale(&self, s: f64) -> Self {
        Multivector { alg: self.alg.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }
}

pub fn geometric_product(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    a.check_same(b)?;
    let alg = &a.alg;
    let mut out = vec![0.0; alg.dim()];
    for (i, &x) in a.coeffs.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.coeffs.iter().enumerate() {
            if y == 0.0 {
                continue;
            }
            let (s, k) = alg.product(i, j);
            out[k] += f64::from(s) * x * y;
        }
    }
    Ok(Multivector { alg: alg.clone(), coeffs: out })
}

/// `ab + ba`.
pub fn anticommutator(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    geometric_product(a, b)?.add(&geometric_product(b, a)?)
}

/// `ab - ba`.
pub fn commutator(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    geometric_product(a, b)?.sub(&geometric_product(b, a)?)
}

/// Keep only blades of grade `k`.
pub fn grade_project(a: &Multivector, k: usize) -> Result<Multivector> {
    let n = a.alg.n();
    if k > n {
        return Err(Error::GradeOutOfRange { k, n });
    }
    let coeffs = a
        .coeffs
        .iter()
        .enumerate()
        .map(|(b, &v)| if grade(b) == k { v } else { 0.0 })
        .collect();
    Ok(Multivector { alg: a.alg.clone(), coeffs })
}

// JSON form: {"sig":[p,q], "coeffs": {"<bitmask>": value}}; zeros are omitted.
#[derive(Serialize, Deserialize)]
struct MultivectorJson {
    sig: [usize; 2],
    coeffs: BTreeMap<String, f64>,
}

impl Serialize for Multivector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(b, v)| (b.to_string(), *v))
            .collect();
        MultivectorJson { sig: [self.alg.sig.p, self.alg.sig.q], coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Multivector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MultivectorJson::deserialize(d)?;
        let alg = make_algebra(raw.sig[0], raw.sig[1]).map_err(D::Error::custom)?;
        let mut m = Multivector::zero(&alg);
        for (key, v) in raw.coeffs {
            let idx: usize = key.parse().map_err(D::Error::custom)?;
            if idx >= alg.dim() {
                return Err(D::Error::custom(Error::BladeOutOfRange { index: idx, n: alg.n() }));
            }
            m.coeffs[idx] = v;
        }
        Ok(m)
    }
}

/// Outcome of [`check_matrix_isomorphism`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsomorphismReport {
    pub signature: Signature,
    /// Largest Frobenius residual of `{E_i, E_j} - 2 g_ij 1`.
    pub relation_residual: f64,
    /// Rank of the `2^n` blade images viewed as real vectors.
    pub blade_rank: usize,
    pub algebra_dim: usize,
    /// Real dimension of the ambient matrix algebra (`m^2` for real
    /// matrices, `2 m^2` for complex ones).
    pub matrix_algebra_dim: usize,
    /// The representation is injective.
    pub faithful: bool,
    /// The blade span fills the whole matrix algebra.
    pub isomorphic: bool,
}

/// Tolerance used for relation residuals and the rank cut-off.
pub const ISOMORPHISM_TOL: f64 = 1e-12;

/// Check that `rep` (one matrix per generator, in generator order) is a
/// faithful representation of `alg`, and whether it is onto the matrix algebra.
pub fn check_matrix_isomorphism(alg: &Algebra, rep: &[CMat]) -> Result<IsomorphismReport> {
    let n = alg.n();
    if rep.len() != n {
        return Err(Error::DimensionMismatch(format!("{} matrices for {n} generators", rep.len())));
    }
    let m = rep[0].nrows();
    if rep.iter().any(|g| g.shape() != (m, m)) {
        return Err(Error::DimensionMismatch("generator matrices differ in shape".into()));
    }
    let one = linalg::eye(m);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { one.scale(2.0 * f64::from(alg.sig.square(i))) } else { CMat::zeros(m, m) };
            let r = linalg::frobenius(&(linalg::anticommutator(&rep[i], &rep[j]) - target));
            if r > ISOMORPHISM_TOL {
                return Err(Error::RelationViolation { i, j, residual: r });
            }
            worst = worst.max(r);
        }
    }
    let complex = rep.iter().any(|g| g.iter().any(|z| z.im != 0.0));
    let per = if complex { 2 * m * m } else { m * m };
    let dim = alg.dim();
    let mut images = RMat::zeros(per, dim);
    for blade in 0..dim {
        let mut img = one.clone();
        for (i, g) in rep.iter().enumerate() {
            if blade & (1 << i) != 0 {
                img *= g;
            }
        }
        for (k, z) in img.iter().enumerate() {
            images[(k, blade)] = z.re;
            if complex {
                images[(m * m + k, blade)] = z.im;
            }
        }
    }
    let rank = linalg::real_rank(&images, ISOMORPHISM_TOL);
    if rank < dim {
        return Err(Error::LinearDependence { rank, expected: dim });
    }
    Ok(IsomorphismReport {
        signature: alg.sig,
        relation_residual: worst,
        blade_rank: rank,
        algebra_dim: dim,
        matrix_algebra_dim: per,
        faithful: true,
        isomorphic: rank == per,
    })
}
