//! Exact integer and rational linear algebra: Smith normal form, integer
//! linear systems, and rational elimination. These back the surjectivity
//! tests, fiber solvers and lattice lifts elsewhere in the crate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Int = BigInt;
pub type Rat = BigRational;

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Int>,
}

impl IntMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, data: vec![Int::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Int::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Int>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimMismatch("ragged rows in integer matrix".into()));
        }
        Ok(IntMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| Int::from(x)).collect()).collect())
    }

    pub fn diagonal(diag: &[Int]) -> Self {
        let n = diag.len();
        let mut m = Self::zero(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = d.clone();
        }
        m
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows, "IntMat::mul shape");
        let mut out = IntMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let p = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += p;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(self.cols, v.len(), "IntMat::mul_vec shape");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row a += c * row b
    fn add_row(&mut self, a: usize, b: usize, c: &Int) {
        for j in 0..self.cols {
            let p = c * &self[(b, j)];
            self[(a, j)] += p;
        }
    }

    /// col a += c * col b
    fn add_col(&mut self, a: usize, b: usize, c: &Int) {
        for i in 0..self.rows {
            let p = c * &self[(i, b)];
            self[(i, a)] += p;
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            let v = -self[(a, j)].clone();
            self[(a, j)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = Int;
    fn index(&self, (i, j): (usize, usize)) -> &Int {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Int {
        &mut self.data[i * self.cols + j]
    }
}

/// Smith normal form decomposition `u * m * v = d` with `u`, `v` unimodular
/// and `d` diagonal with each diagonal entry dividing the next.
#[derive(Debug, Clone)]
pub struct Snf {
    pub u: IntMat,
    pub d: IntMat,
    pub v: IntMat,
}

impl Snf {
    /// Diagonal entries (length min(rows, cols)), nonnegative.
    pub fn diag(&self) -> Vec<Int> {
        (0..self.d.rows.min(self.d.cols)).map(|i| self.d[(i, i)].clone()).collect()
    }
}

pub fn smith_normal_form(m: &IntMat) -> Snf {
    let mut d = m.clone();
    let mut u = IntMat::identity(m.rows);
    let mut v = IntMat::identity(m.cols);
    let n = m.rows.min(m.cols);

    let mut t = 0;
    while t < n {
        // Find a pivot of minimal absolute value in the remaining block.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..d.rows {
            for j in t..d.cols {
                if !d[(i, j)].is_zero()
                    && pivot.is_none_or(|(pi, pj)| d[(i, j)].abs() < d[(pi, pj)].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);

        // Clear row t and column t by euclidean steps.
        let mut dirty = true;
        while dirty {
            dirty = false;
            for i in t + 1..d.rows {
                if !d[(i, t)].is_zero() {
                    let q = d[(i, t)].div_floor(&d[(t, t)]);
                    d.add_row(i, t, &-q.clone());
                    u.add_row(i, t, &-q);
                    if !d[(i, t)].is_zero() {
                        d.swap_rows(t, i);
                        u.swap_rows(t, i);
                        dirty = true;
                    }
                }
            }
            for j in t + 1..d.cols {
                if !d[(t, j)].is_zero() {
                    let q = d[(t, j)].div_floor(&d[(t, t)]);
                    d.add_col(j, t, &-q.clone());
                    v.add_col(j, t, &-q);
                    if !d[(t, j)].is_zero() {
                        d.swap_cols(t, j);
                        v.swap_cols(t, j);
                        dirty = true;
                    }
                }
            }
        }

        // The pivot must divide every entry of the remaining block; if it
        // does not, fold the offending row in and redo this step.
        let mut redo = false;
        'scan: for i in t + 1..d.rows {
            for j in t + 1..d.cols {
                if !(&d[(i, j)] % &d[(t, t)]).is_zero() {
                    d.add_row(t, i, &Int::one());
                    u.add_row(t, i, &Int::one());
                    redo = true;
                    break 'scan;
                }
            }
        }
        if !redo {
            t += 1;
        }
    }

    // Normalize signs on the diagonal.
    for i in 0..n {
        if d[(i, i)].is_negative() {
            d.negate_row(i);
            u.negate_row(i);
        }
    }
    Snf { u, d, v }
}

/// Solves `a * x = b` over the integers. Returns a particular solution.
pub fn solve_integer(a: &IntMat, b: &[Int]) -> Option<Vec<Int>> {
    assert_eq!(a.rows, b.len(), "solve_integer shape");
    let snf = smith_normal_form(a);
    let y = snf.u.mul_vec(b);
    let n = a.rows.min(a.cols);
    let mut xp = vec![Int::zero(); a.cols];
    for (i, yi) in y.iter().enumerate() {
        if i < n && !snf.d[(i, i)].is_zero() {
            let (q, r) = yi.div_rem(&snf.d[(i, i)]);
            if !r.is_zero() {
                return None;
            }
            xp[i] = q;
        } else if !yi.is_zero() {
            return None;
        }
    }
    Some(snf.v.mul_vec(&xp))
}

// ---------------------------------------------------------------------------
// Rational elimination
// ---------------------------------------------------------------------------

/// Dense row-major rational matrix, used only for elimination work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Rat>,
}

impl RatMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        RatMat { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimMismatch("ragged rows in rational matrix".into()));
        }
        Ok(RatMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len(), "RatMat::mul_vec shape");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> RatMat {
        let mut out = RatMat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for RatMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut RatMat) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
        for j in 0..m.cols {
            let t = m.data[p * m.cols + j].clone();
            m.data[p * m.cols + j] = m.data[r * m.cols + j].clone();
            m.data[r * m.cols + j] = t;
        }
        let inv = m[(r, c)].recip();
        for j in 0..m.cols {
            let v = &m[(r, j)] * &inv;
            m[(r, j)] = v;
        }
        for i in 0..m.rows {
            if i != r && !m[(i, c)].is_zero() {
                let f = m[(i, c)].clone();
                for j in 0..m.cols {
                    let v = &m[(i, j)] - &f * &m[(r, j)];
                    m[(i, j)] = v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &RatMat) -> usize {
    let mut work = m.clone();
    rref(&mut work).len()
}

/// Solves `a * x = b` over the rationals; `None` if inconsistent.
pub fn solve_rational(a: &RatMat, b: &[Rat]) -> Option<Vec<Rat>> {
    assert_eq!(a.rows, b.len(), "solve_rational shape");
    let mut aug = RatMat::zero(a.rows, a.cols + 1);
    for i in 0..a.rows {
        for j in 0..a.cols {
            aug[(i, j)] = a[(i, j)].clone();
        }
        aug[(i, a.cols)] = b[i].clone();
    }
    let pivots = rref(&mut aug);
    if pivots.contains(&a.cols) {
        return None;
    }
    let mut x = vec![Rat::zero(); a.cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[(r, a.cols)].clone();
    }
    Some(x)
}

/// Basis of the left null space of `a` (vectors n with n * a = 0).
pub fn left_nullspace(a: &RatMat) -> Vec<Vec<Rat>> {
    let at = a.transpose();
    let mut work = at.clone();
    let pivots = rref(&mut work);
    let rank = pivots.len();
    let mut basis = Vec::new();
    let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
    for free in 0..at.cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![Rat::zero(); at.cols];
        v[free] = Rat::one();
        for (r, &c) in pivots.iter().enumerate().take(rank) {
            v[c] = -work[(r, free)].clone();
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_snf(m: &IntMat) -> Snf {
        let snf = smith_normal_form(m);
        assert_eq!(snf.u.mul(m).mul(&snf.v), snf.d, "U·M·V = D");
        let diag = snf.diag();
        for w in diag.windows(2) {
            if !w[0].is_zero() {
                assert!((&w[1] % &w[0]).is_zero(), "divisibility chain");
            } else {
                assert!(w[1].is_zero());
            }
        }
        // Off-diagonal entries of D vanish.
        for i in 0..snf.d.rows {
            for j in 0..snf.d.cols {
                if i != j {
                    assert!(snf.d[(i, j)].is_zero());
                }
            }
        }
        snf
    }

    #[test]
    fn snf_diag_2_3() {
        let m = IntMat::from_i64_rows(&[vec![2, 0], vec![0, 3]]).unwrap();
        let snf = check_snf(&m);
        assert_eq!(snf.diag(), vec![Int::from(1), Int::from(6)]);
    }

    #[test]
    fn snf_identity() {
        let m = IntMat::identity(3);
        let snf = check_snf(&m);
        assert_eq!(snf.diag(), vec![Int::one(); 3]);
    }

    #[test]
    fn snf_2x2_example() {
        let m = IntMat::from_i64_rows(&[vec![2, 4], vec![6, 8]]).unwrap();
        let snf = check_snf(&m);
        assert_eq!(snf.diag(), vec![Int::from(2), Int::from(4)]);
    }

    #[test]
    fn snf_rectangular_and_zero() {
        check_snf(&IntMat::from_i64_rows(&[vec![4, 6, 10], vec![2, 2, 2]]).unwrap());
        check_snf(&IntMat::zero(2, 3));
        check_snf(&IntMat::from_i64_rows(&[vec![0, 5], vec![0, 0], vec![10, 0]]).unwrap());
    }

    #[test]
    fn integer_solve_roundtrip() {
        let a = IntMat::from_i64_rows(&[vec![2, 4], vec![6, 8]]).unwrap();
        let b = vec![Int::from(10), Int::from(26)];
        let x = solve_integer(&a, &b).unwrap();
        assert_eq!(a.mul_vec(&x), b);
        // 2x + 4y = 1 has no integer solution.
        assert!(solve_integer(&a, &[Int::from(1), Int::from(3)]).is_none());
    }

    #[test]
    fn rational_solve_and_nullspace() {
        let a = RatMat::from_rows(vec![
            vec![Rat::from_integer(1.into()), Rat::from_integer(2.into())],
            vec![Rat::from_integer(2.into()), Rat::from_integer(4.into())],
        ])
        .unwrap();
        let b = vec![Rat::from_integer(3.into()), Rat::from_integer(6.into())];
        let x = solve_rational(&a, &b).unwrap();
        assert_eq!(a.mul_vec(&x), b);
        assert!(solve_rational(&a, &[Rat::from_integer(3.into()), Rat::from_integer(7.into())]).is_none());

        let ns = left_nullspace(&a);
        assert_eq!(ns.len(), 1);
        for v in &ns {
            for j in 0..a.cols {
                let dot: Rat = (0..a.rows).map(|i| &v[i] * &a[(i, j)]).sum();
                assert!(dot.is_zero());
            }
        }
    }
}
