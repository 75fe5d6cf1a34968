//! Exact arithmetic in unipotent upper-triangular rational matrix groups:
//! products, inverses, commutators, the finite log/exp pair, and rational
//! powers along one-parameter subgroups.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{Int, Rat};

/// An element of the full unipotent group: upper triangular with unit
/// diagonal, rational entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnipotentMatrix {
    dim: usize,
    entries: Vec<Rat>, // row-major, dim * dim
}

/// A strictly upper triangular rational matrix; nilpotent of index < dim.
/// These are the Lie algebra elements paired with [`UnipotentMatrix`] by
/// `mat_log` / `mat_exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrictUpperMatrix {
    dim: usize,
    entries: Vec<Rat>,
}

impl UnipotentMatrix {
    pub fn new(dim: usize, entries: Vec<Rat>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let m = UnipotentMatrix { dim, entries };
        for i in 0..dim {
            if !m.get(i, i).is_one() {
                return Err(Error::DimMismatch(format!("diagonal entry ({i},{i}) is not 1")));
            }
            for j in 0..i {
                if !m.get(i, j).is_zero() {
                    return Err(Error::DimMismatch(format!("entry ({i},{j}) below the diagonal is nonzero")));
                }
            }
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Rat::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Rat::one();
        }
        UnipotentMatrix { dim, entries }
    }

    /// I + c·E_{ij} (zero-based indices, i < j).
    pub fn elementary(dim: usize, i: usize, j: usize, c: Rat) -> Self {
        assert!(i < j && j < dim, "elementary position out of range");
        let mut m = Self::identity(dim);
        m.set(i, j, c);
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.entries[i * self.dim + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.entries[i * self.dim + j] = v;
    }

    /// Sets a strictly-upper entry.
    pub fn set_entry(&mut self, i: usize, j: usize, v: Rat) {
        assert!(i < j && j < self.dim, "entry must be strictly upper");
        self.set(i, j, v);
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "UnipotentMatrix::mul dimension");
        let n = self.dim;
        let mut out = Self::identity(n);
        for i in 0..n {
            for j in i + 1..n {
                // Only the triangular band contributes.
                let mut acc = Rat::zero();
                for k in i..=j {
                    let a = self.get(i, k);
                    if a.is_zero() {
                        continue;
                    }
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    acc += a * b;
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// Exact inverse via the terminating Neumann series (I + N)^{-1} = Σ (−N)^m.
    pub fn inverse(&self) -> Self {
        let n = self.strict_part();
        let mut acc = StrictUpperMatrix::zero(self.dim);
        let mut pow = StrictUpperMatrix::zero(self.dim);
        // pow = (−N)^m accumulated iteratively.
        let neg = n.scale(&-Rat::one());
        let mut cur = neg.clone();
        for _ in 1..self.dim {
            acc = acc.add(&cur);
            cur = cur.mat_mul(&neg);
        }
        pow = pow.add(&acc);
        Self::identity(self.dim).add_strict(&pow)
    }

    /// Integer power by binary exponentiation; negative exponents invert.
    pub fn int_pow(&self, e: &Int) -> Self {
        if e.is_negative() {
            return self.inverse().int_pow(&-e);
        }
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        let mut e = e.clone();
        let two = Int::from(2);
        while !e.is_zero() {
            if (&e % &two).is_one() {
                result = result.mul(&base);
            }
            e /= &two;
            if !e.is_zero() {
                base = base.mul(&base);
            }
        }
        result
    }

    /// [g, h] = g⁻¹ h⁻¹ g h. The convention is fixed crate-wide; the
    /// Hall–Petresco coefficient extraction depends on it.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(format!(
                "commutator of {}x{} with {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        Ok(self.inverse().mul(&other.inverse()).mul(self).mul(other))
    }

    /// N = g − I as a strict upper matrix.
    pub fn strict_part(&self) -> StrictUpperMatrix {
        let mut s = StrictUpperMatrix::zero(self.dim);
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                s.set(i, j, self.get(i, j).clone());
            }
        }
        s
    }

    fn add_strict(&self, s: &StrictUpperMatrix) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let v = out.get(i, j) + s.get(i, j);
                out.set(i, j, v);
            }
        }
        out
    }

    /// Largest denominator appearing in any entry.
    pub fn max_denom(&self) -> Int {
        self.entries.iter().map(|e| e.denom().clone()).max().unwrap_or_else(Int::one)
    }

    pub fn entries(&self) -> &[Rat] {
        &self.entries
    }
}

impl std::ops::Mul for &UnipotentMatrix {
    type Output = UnipotentMatrix;
    fn mul(self, rhs: &UnipotentMatrix) -> UnipotentMatrix {
        self.mul(rhs)
    }
}

impl StrictUpperMatrix {
    pub fn new(dim: usize, entries: Vec<Rat>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let m = StrictUpperMatrix { dim, entries };
        for i in 0..dim {
            for j in 0..=i {
                if !m.get(i, j).is_zero() {
                    return Err(Error::DimMismatch(format!("entry ({i},{j}) on or below the diagonal is nonzero")));
                }
            }
        }
        Ok(m)
    }

    pub fn zero(dim: usize) -> Self {
        StrictUpperMatrix { dim, entries: vec![Rat::zero(); dim * dim] }
    }

    pub fn basis_elem(dim: usize, i: usize, j: usize) -> Self {
        assert!(i < j && j < dim);
        let mut m = Self::zero(dim);
        m.set(i, j, Rat::one());
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        StrictUpperMatrix { dim: self.dim, entries }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> Self {
        let entries = self.entries.iter().map(|a| a * c).collect();
        StrictUpperMatrix { dim: self.dim, entries }
    }

    pub fn mat_mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zero(n);
        for i in 0..n {
            for j in i + 2..n {
                let mut acc = Rat::zero();
                for k in i + 1..j {
                    let a = self.get(i, k);
                    if a.is_zero() {
                        continue;
                    }
                    acc += a * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// Lie bracket [a, b] = ab − ba.
    pub fn bracket(&self, other: &Self) -> Self {
        self.mat_mul(other).sub(&other.mat_mul(self))
    }

    /// Flattened strictly-upper coordinates in row-major position order.
    pub fn upper_coords(&self) -> Vec<Rat> {
        let mut v = Vec::with_capacity(self.dim * (self.dim - 1) / 2);
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                v.push(self.get(i, j).clone());
            }
        }
        v
    }

    pub fn from_upper_coords(dim: usize, coords: &[Rat]) -> Result<Self> {
        if coords.len() != dim * (dim - 1) / 2 {
            return Err(Error::DimMismatch("wrong number of strictly-upper coordinates".into()));
        }
        let mut m = Self::zero(dim);
        let mut it = coords.iter();
        for i in 0..dim {
            for j in i + 1..dim {
                m.set(i, j, it.next().unwrap().clone());
            }
        }
        Ok(m)
    }
}

/// log(I + N) = Σ_{m ≥ 1} (−1)^{m+1} N^m / m, a finite sum. Exact inverse of
/// [`mat_exp`] on unitriangular matrices.
pub fn mat_log(g: &UnipotentMatrix) -> StrictUpperMatrix {
    let n = g.strict_part();
    let mut acc = StrictUpperMatrix::zero(g.dim());
    let mut pow = n.clone();
    let mut sign = Rat::one();
    for m in 1..g.dim() {
        acc = acc.add(&pow.scale(&(&sign / Rat::from_integer(Int::from(m)))));
        pow = pow.mat_mul(&n);
        sign = -sign;
    }
    acc
}

/// exp(X) = Σ_{m ≥ 0} X^m / m!, a finite sum.
pub fn mat_exp(x: &StrictUpperMatrix) -> UnipotentMatrix {
    let dim = x.dim();
    let mut acc = StrictUpperMatrix::zero(dim);
    let mut pow = x.clone();
    let mut fact = Int::one();
    for m in 1..dim {
        fact *= Int::from(m);
        acc = acc.add(&pow.scale(&Rat::new(Int::one(), fact.clone())));
        pow = pow.mat_mul(x);
    }
    let mut out = UnipotentMatrix::identity(dim);
    for i in 0..dim {
        for j in i + 1..dim {
            out.set(i, j, acc.get(i, j).clone());
        }
    }
    out
}

/// g^t := exp(t·log g) for rational t; restricts to ordinary powers at
/// integers and satisfies rat_pow(g, s) · rat_pow(g, t) = rat_pow(g, s+t).
pub fn rat_pow(g: &UnipotentMatrix, t: &Rat) -> UnipotentMatrix {
    mat_exp(&mat_log(g).scale(t))
}

/// binom(x, k) = x(x−1)···(x−k+1)/k! for integer (possibly negative) x.
pub fn binom_int(x: &Int, k: usize) -> Int {
    let mut num = Int::one();
    for m in 0..k {
        num *= x - Int::from(m);
    }
    let mut den = Int::one();
    for m in 1..=k {
        den *= Int::from(m);
    }
    num / den
}

pub fn factorial(k: usize) -> Int {
    let mut f = Int::one();
    for m in 2..=k {
        f *= Int::from(m);
    }
    f
}

/// Convenience constructor for rationals.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rat {
    BigRational::from_integer(BigInt::from(p))
}
