//! Band filtrations on unipotent groups together with an integer-like
//! lattice: membership tests, filtration levels, rationality orders, the
//! uniform-rationality word check, product-set factorization, and
//! Zariski-closure membership via exact Lie-algebra spans.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, Int, Rat, RatMat};
use crate::matrix::{factorial, mat_log, StrictUpperMatrix, UnipotentMatrix};

/// Default cap on matrix dimension; factorial denominators in log/exp stay
/// tractable below it.
pub const DEFAULT_DIM_CAP: usize = 12;

/// A filtration G_• of degree k on the unipotent group of a fixed dimension,
/// described by a level ℓ(i,j) between 1 and k per strictly-upper position,
/// plus the lattice Γ of elements with s(i,j)·entry ∈ Z. Positions may be
/// masked out (`active = false`) to model quotients by upper bands: inactive
/// positions are an ideal under entry composition, so zeroing them is a
/// group homomorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilteredLattice {
    dim: usize,
    degree: usize,
    level: Vec<Vec<usize>>, // level[i][j] for i < j, 0 elsewhere
    denom: Vec<Vec<u64>>,   // s(i,j) >= 1
    active: Vec<Vec<bool>>,
}

impl FilteredLattice {
    pub fn new(dim: usize, degree: usize, level: Vec<Vec<usize>>, denom: Vec<Vec<u64>>) -> Result<Self> {
        Self::with_mask(dim, degree, level, denom, None)
    }

    pub fn with_mask(
        dim: usize,
        degree: usize,
        level: Vec<Vec<usize>>,
        denom: Vec<Vec<u64>>,
        mask: Option<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        if !(1..=DEFAULT_DIM_CAP).contains(&dim) {
            return Err(Error::TooLarge(format!("dimension {dim} outside [1, {DEFAULT_DIM_CAP}]")));
        }
        let square = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::DimMismatch(format!("{name} matrix must be {dim}x{dim}")))
            }
        };
        square("level", level.len() == dim && level.iter().all(|r| r.len() == dim))?;
        square("denominator", denom.len() == dim && denom.iter().all(|r| r.len() == dim))?;
        let active = mask.unwrap_or_else(|| {
            (0..dim).map(|i| (0..dim).map(|j| j > i).collect()).collect()
        });
        square("mask", active.len() == dim && active.iter().all(|r| r.len() == dim))?;
        let mut fl = FilteredLattice { dim, degree, level, denom, active };
        for (i, j) in fl.positions() {
            let l = fl.level[i][j];
            if l < 1 || l > degree {
                return Err(Error::FiltrationViolation(i, j));
            }
            if fl.denom[i][j] == 0 {
                return Err(Error::Parse(format!("denominator at ({i},{j}) must be positive")));
            }
        }
        // Canonicalize unused entries so equality is semantic.
        for i in 0..dim {
            for j in 0..dim {
                if !fl.active[i][j] {
                    fl.level[i][j] = 0;
                    fl.denom[i][j] = 1;
                }
            }
        }
        // Masked-out positions must form a composition ideal (as produced by
        // quotients): anything composed through an inactive position stays
        // inactive, so zeroing them is a homomorphism.
        for i in 0..dim {
            for j in i + 1..dim {
                if fl.active[i][j] {
                    continue;
                }
                for l in j + 1..dim {
                    if fl.active[i][l] {
                        return Err(Error::FiltrationViolation(i, l));
                    }
                }
                for h in 0..i {
                    if fl.active[h][j] {
                        return Err(Error::FiltrationViolation(h, j));
                    }
                }
            }
        }
        fl.check_filtration().map_err(|(i, j)| Error::FiltrationViolation(i, j))?;
        Ok(fl)
    }

    /// Lower central series filtration ℓ(i,j) = j−i with the integer lattice.
    pub fn lower_central(dim: usize) -> Self {
        let level = (0..dim)
            .map(|i| (0..dim).map(|j| j.saturating_sub(i)).collect())
            .collect();
        let denom = vec![vec![1u64; dim]; dim];
        Self::new(dim, (dim - 1).max(1), level, denom)
            .expect("lower central series is a filtration")
    }

    /// The 3×3 Heisenberg group with its integer lattice (degree 2).
    pub fn heisenberg() -> Self {
        Self::lower_central(3)
    }

    /// The degree-k abelian torus D_k(T) realized on a single 2×2 band:
    /// G_1 = ⋯ = G_k = T, G_{k+1} trivial.
    pub fn abelian_torus(k: usize) -> Self {
        let level = vec![vec![0, k], vec![0, 0]];
        let denom = vec![vec![1u64; 2]; 2];
        Self::new(2, k, level, denom).expect("degree-k abelian band is a filtration")
    }

    /// Verifies [G_a, G_b] ⊆ G_{a+b} on band-basis elementary matrices and
    /// closure of Γ under products of its elementary generators. A violation
    /// is reported by the witness position that lands in too low a band (or
    /// breaks integrality).
    pub fn check_filtration(&self) -> std::result::Result<(), (usize, usize)> {
        let pos = self.positions();
        for &(i, j) in &pos {
            for &(a, b) in &pos {
                if j != a {
                    continue;
                }
                // [I+E_{ij}, I+E_{ab}] = I + E_{ib} exactly, so the new
                // entry must be admissible at level ℓ(i,j)+ℓ(a,b). An
                // inactive composite lies in the quotient kernel.
                if !self.active[i][b] {
                    continue;
                }
                let need = self.level[i][j] + self.level[a][b];
                if need > self.degree || self.level[i][b] < need {
                    return Err((i, b));
                }
                // Γ-closure: the product of lattice generators at (i,j), (a,b)
                // contributes 1/(s_ij s_ab) at (i, b).
                let prod = self.denom[i][j] as u128 * self.denom[a][b] as u128;
                if !(self.denom[i][b] as u128).is_multiple_of(prod) {
                    return Err((i, b));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn level_at(&self, i: usize, j: usize) -> usize {
        self.level[i][j]
    }

    pub fn denom_at(&self, i: usize, j: usize) -> u64 {
        self.denom[i][j]
    }

    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.active[i][j]
    }

    pub fn level_rows(&self) -> &[Vec<usize>] {
        &self.level
    }

    pub fn denom_rows(&self) -> &[Vec<u64>] {
        &self.denom
    }

    /// Active strictly-upper positions in row-major order.
    pub fn positions(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                if self.active[i][j] {
                    v.push((i, j));
                }
            }
        }
        v
    }

    /// Active positions ordered by superdiagonal distance, lex within a band.
    pub fn positions_by_distance(&self) -> Vec<(usize, usize)> {
        let mut v = self.positions();
        v.sort_by_key(|&(i, j)| (j - i, i));
        v
    }

    pub fn level_positions(&self, l: usize) -> Vec<(usize, usize)> {
        self.positions().into_iter().filter(|&(i, j)| self.level[i][j] == l).collect()
    }

    pub fn top_positions(&self) -> Vec<(usize, usize)> {
        self.level_positions(self.degree)
    }

    /// Zeroes all inactive positions (the quotient reduction).
    pub fn reduce(&self, g: &UnipotentMatrix) -> UnipotentMatrix {
        let mut out = g.clone();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                if !self.active[i][j] {
                    out.set(i, j, Rat::zero());
                }
            }
        }
        out
    }

    pub fn mul(&self, a: &UnipotentMatrix, b: &UnipotentMatrix) -> UnipotentMatrix {
        self.reduce(&a.mul(b))
    }

    pub fn inv(&self, a: &UnipotentMatrix) -> UnipotentMatrix {
        self.reduce(&a.inverse())
    }

    pub fn int_pow(&self, a: &UnipotentMatrix, e: &Int) -> UnipotentMatrix {
        self.reduce(&a.int_pow(e))
    }

    pub fn check_dim(&self, g: &UnipotentMatrix) -> Result<()> {
        if g.dim() != self.dim {
            return Err(Error::DimMismatch(format!(
                "matrix dimension {} does not match lattice dimension {}",
                g.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Membership in the supported group (inactive entries must vanish).
    pub fn in_group(&self, g: &UnipotentMatrix) -> bool {
        g.dim() == self.dim
            && (0..self.dim).all(|i| {
                (i + 1..self.dim).all(|j| self.active[i][j] || g.get(i, j).is_zero())
            })
    }

    /// Membership in Γ: s(i,j)·entry ∈ Z on every active position.
    pub fn in_lattice(&self, g: &UnipotentMatrix) -> bool {
        self.in_group(g)
            && self.positions().iter().all(|&(i, j)| {
                (g.get(i, j) * Rat::from_integer(Int::from(self.denom[i][j]))).is_integer()
            })
    }

    /// Membership in G_m (entries vanish wherever ℓ(i,j) < m).
    pub fn in_level(&self, g: &UnipotentMatrix, m: usize) -> bool {
        self.in_group(g)
            && self.positions().iter().all(|&(i, j)| self.level[i][j] >= m || g.get(i, j).is_zero())
    }

    /// The largest m with g ∈ G_m; k+1 exactly when g = I.
    pub fn filtration_level(&self, g: &UnipotentMatrix) -> Result<usize> {
        self.check_dim(g)?;
        let mut m = self.degree + 1;
        for (i, j) in self.positions() {
            if !g.get(i, j).is_zero() {
                m = m.min(self.level[i][j]);
            }
        }
        Ok(m)
    }

    /// Quotient by the top band G_k: drops the degree by one and masks out
    /// the top-level positions.
    pub fn quotient_drop_top(&self) -> FilteredLattice {
        let mut active = self.active.clone();
        let mut level = self.level.clone();
        let mut denom = self.denom.clone();
        for (i, j) in self.top_positions() {
            active[i][j] = false;
            level[i][j] = 0;
            denom[i][j] = 1;
        }
        FilteredLattice { dim: self.dim, degree: self.degree - 1, level, denom, active }
    }

    /// Is the group trivial (no active positions)?
    pub fn is_trivial(&self) -> bool {
        self.positions().is_empty()
    }

    /// Re-declares the degree (the top bands may be empty); every active
    /// position must keep its level within [1, degree].
    pub fn with_degree(&self, degree: usize) -> Result<FilteredLattice> {
        for (i, j) in self.positions() {
            if self.level[i][j] > degree {
                return Err(Error::FiltrationViolation(i, j));
            }
        }
        let mut out = self.clone();
        out.degree = degree;
        Ok(out)
    }

    /// Largest level carried by an active position (0 if trivial).
    pub fn effective_degree(&self) -> usize {
        self.positions().iter().map(|&(i, j)| self.level[i][j]).max().unwrap_or(0)
    }

    // -----------------------------------------------------------------------
    // Rationality
    // -----------------------------------------------------------------------

    /// Minimal q ≥ 1 with g^q ∈ Γ, or None if no power lands in Γ.
    ///
    /// Entries of g^q are polynomials in q of degree < dim, expanded in the
    /// binomial basis by forward differences. Each congruence
    /// s·c_m·binom(q,m) ∈ Z is periodic in q with period dividing
    /// denom(s·c_m)·m!, so the valid exponents form a subgroup of Z whose
    /// positive generator divides L = lcm of those periods; it is found by
    /// scanning the divisors of L in increasing order.
    pub fn rationality_order(&self, g: &UnipotentMatrix) -> Result<Option<Int>> {
        self.check_dim(g)?;
        let g = self.reduce(g);
        let r = self.dim;
        // Forward differences of the entry polynomials at q = 0..r-1.
        let mut powers = Vec::with_capacity(r);
        let mut cur = UnipotentMatrix::identity(r);
        for _ in 0..r {
            powers.push(cur.clone());
            cur = self.mul(&cur, &g);
        }
        let positions = self.positions();
        // coeffs[m] holds c_m per position: entry(q) = Σ_m c_m binom(q, m).
        let mut table: Vec<Vec<Rat>> = powers
            .iter()
            .map(|p| positions.iter().map(|&(i, j)| p.get(i, j).clone()).collect())
            .collect();
        let mut coeffs: Vec<Vec<Rat>> = Vec::with_capacity(r);
        for m in 0..r {
            coeffs.push(table[0].clone());
            for row in 0..r - 1 - m {
                table[row] = table[row + 1]
                    .iter()
                    .zip(&table[row])
                    .map(|(a, b)| a - b)
                    .collect();
            }
            table.truncate(r - 1 - m);
            if table.is_empty() {
                break;
            }
        }
        let mut l = Int::one();
        for (m, cm) in coeffs.iter().enumerate().skip(1) {
            for (&(i, j), c) in positions.iter().zip(cm) {
                let scaled = c * Rat::from_integer(Int::from(self.denom[i][j]));
                if !scaled.is_integer() {
                    l = l.lcm(&(scaled.denom() * factorial(m)));
                }
            }
        }
        let l_u64 = l
            .to_u64()
            .ok_or_else(|| Error::TooLarge(format!("rationality search bound {l} exceeds u64")))?;
        for q in sorted_divisors(l_u64) {
            if self.in_lattice(&self.int_pow(&g, &Int::from(q))) {
                return Ok(Some(Int::from(q)));
            }
        }
        Ok(None)
    }

    /// Uniform-rationality check: given generators with gᵢ^q ∈ Γ (verified),
    /// evaluates the word b and tests b^N ∈ Γ for N = q^{k(k+1)/2}.
    pub fn word_power_check(
        &self,
        generators: &[UnipotentMatrix],
        q: u64,
        word: &[(usize, i64)],
    ) -> Result<(bool, Int)> {
        for (idx, g) in generators.iter().enumerate() {
            self.check_dim(g)?;
            if !self.in_lattice(&self.int_pow(g, &Int::from(q))) {
                return Err(Error::PreconditionFailed(format!(
                    "generator {idx} does not satisfy g^{q} ∈ Γ"
                )));
            }
        }
        let k = self.degree;
        let n = Int::from(q).pow((k * (k + 1) / 2) as u32);
        let mut b = UnipotentMatrix::identity(self.dim);
        for &(idx, exp) in word {
            let g = generators
                .get(idx)
                .ok_or_else(|| Error::PreconditionFailed(format!("word references generator {idx}")))?;
            b = self.mul(&b, &self.int_pow(g, &Int::from(exp)));
        }
        Ok((self.in_lattice(&self.int_pow(&b, &n)), n))
    }

    // -----------------------------------------------------------------------
    // Product sets
    // -----------------------------------------------------------------------

    /// Greedy factorization t = ∏_i g_i^{m_i} with g_i ∈ Γ ∩ G_i, extracting
    /// band by band: at band i the residual's band-i coordinates must be
    /// m_i-th multiples of lattice coordinates. Requires m_i/m_{i+1} ∈ k!·Z.
    pub fn product_set_factor(
        &self,
        t: &UnipotentMatrix,
        m: &[Int],
    ) -> Result<Option<Vec<(UnipotentMatrix, usize)>>> {
        self.check_dim(t)?;
        let k = self.degree;
        if m.len() != k {
            return Err(Error::BadExponents(format!("need {k} exponents, got {}", m.len())));
        }
        if m.iter().any(|mi| !mi.is_positive()) {
            return Err(Error::BadExponents("exponents must be positive".into()));
        }
        let kfac = factorial(k);
        for i in 0..k.saturating_sub(1) {
            let (quot, rem) = m[i].div_rem(&m[i + 1]);
            if !rem.is_zero() || !(&quot % &kfac).is_zero() {
                return Err(Error::BadExponents(format!(
                    "m_{}/m_{} must be an integer multiple of {k}!",
                    i + 1,
                    i + 2
                )));
            }
        }
        let mut residual = self.reduce(t);
        let mut factors = Vec::new();
        for band in 1..=k {
            let mut gi = UnipotentMatrix::identity(self.dim);
            for (i, j) in self.level_positions(band) {
                let x = residual.get(i, j);
                let y = x / Rat::from_integer(m[band - 1].clone());
                let scaled = &y * Rat::from_integer(Int::from(self.denom[i][j]));
                if !scaled.is_integer() {
                    return Ok(None);
                }
                gi.set(i, j, y);
            }
            residual = self.mul(&self.int_pow(&gi, &-m[band - 1].clone()), &residual);
            if !gi.is_identity() {
                factors.push((gi, band));
            }
        }
        if !residual.is_identity() {
            return Ok(None);
        }
        // Exactness: the returned factors reassemble t.
        let mut check = UnipotentMatrix::identity(self.dim);
        for (g, band) in &factors {
            check = self.mul(&check, &self.int_pow(g, &m[band - 1]));
        }
        debug_assert_eq!(check, self.reduce(t));
        Ok(Some(factors))
    }

    // -----------------------------------------------------------------------
    // Zariski closure
    // -----------------------------------------------------------------------

    /// The rational Lie algebra generated by the logarithms of the given
    /// lattice elements, closed under brackets to a fixpoint. Membership in
    /// the corresponding connected closed subgroup is `log g ∈ span`.
    pub fn zariski_span(&self, generators: &[UnipotentMatrix]) -> Result<LieAlgebraBasis> {
        for g in generators {
            self.check_dim(g)?;
            if !self.in_lattice(g) {
                return Err(Error::PreconditionFailed("Zariski generators must lie in Γ".into()));
            }
        }
        let mut basis: Vec<StrictUpperMatrix> = Vec::new();
        for g in generators {
            add_to_span(&mut basis, mat_log(g));
        }
        loop {
            let mut added = false;
            let snapshot = basis.clone();
            for a in &snapshot {
                for b in &snapshot {
                    if add_to_span(&mut basis, a.bracket(b)) {
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
        Ok(LieAlgebraBasis { dim: self.dim, basis })
    }
}

/// A basis of a rational Lie subalgebra of the strictly upper matrices.
#[derive(Debug, Clone)]
pub struct LieAlgebraBasis {
    pub dim: usize,
    pub basis: Vec<StrictUpperMatrix>,
}

impl LieAlgebraBasis {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// g lies in the Zariski closure iff log g lies in the span.
    pub fn member(&self, g: &UnipotentMatrix) -> Result<bool> {
        if g.dim() != self.dim {
            return Err(Error::DimMismatch("Zariski membership dimension".into()));
        }
        let mut probe = self.basis.clone();
        Ok(!add_to_span(&mut probe, mat_log(g)))
    }
}

/// Divisors of n in increasing order, by trial division up to sqrt(n).
fn sorted_divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d != n / d {
                large.push(n / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Gaussian-reduces `candidate` against `basis`; if independent, appends the
/// reduced vector and returns true.
fn add_to_span(basis: &mut Vec<StrictUpperMatrix>, candidate: StrictUpperMatrix) -> bool {
    if candidate.is_zero() {
        return false;
    }
    let dim = candidate.dim();
    let ncoords = dim * (dim - 1) / 2;
    let mut rows: Vec<Vec<Rat>> = basis.iter().map(|b| b.upper_coords()).collect();
    rows.push(candidate.upper_coords());
    let mat = RatMat::from_rows(rows.clone()).expect("rectangular");
    let _ = ncoords;
    if linalg::rank(&mat) == basis.len() {
        return false;
    }
    basis.push(candidate);
    true
}
