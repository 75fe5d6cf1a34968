//! Polynomial maps Z^n → G relative to a band filtration, stored by Taylor
//! coefficients: evaluation, interpolation, discrete derivatives,
//! Hall–Petresco coefficient extraction, exact periodicity testing,
//! rationalization of coefficients, and the explicit period bound.
//!
//! The coefficient order is fixed crate-wide: increasing weight |t|, ties
//! broken lexicographically. Evaluation in a nonabelian group depends on
//! this order, so it is part of the data contract.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::abelian::{CALGroup, CALPoint};
use crate::error::{Error, Result};
use crate::filtered::FilteredLattice;
use crate::linalg::{Int, Rat};
use crate::matrix::{binom_int, factorial, UnipotentMatrix};

/// A multi-index t ∈ Z_{≥0}^n ordered by (|t|, lexicographic).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(arity: usize) -> Self {
        MultiIndex(vec![0; arity])
    }

    pub fn weight(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&t| t == 0)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    /// binom(x, t) = ∏_i binom(x_i, t_i).
    pub fn binom(&self, x: &[Int]) -> Int {
        self.0
            .iter()
            .zip(x)
            .map(|(&t, xi)| binom_int(xi, t))
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.weight(), &self.0).cmp(&(other.weight(), &other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// All multi-indices of the given arity with weight ≤ max, in canonical order.
pub fn multi_indices(arity: usize, max_weight: usize) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::zero(arity)];
    if arity == 0 {
        return out;
    }
    let mut frontier = out.clone();
    for _ in 0..max_weight {
        let mut next = Vec::new();
        for t in &frontier {
            for i in 0..arity {
                let mut u = t.0.clone();
                u[i] += 1;
                let u = MultiIndex(u);
                if !next.contains(&u) {
                    next.push(u);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out.dedup();
    out
}

/// Integer grid [0, max]^n.
pub fn grid_points(arity: usize, max: i64) -> Vec<Vec<i64>> {
    let mut pts = vec![vec![]];
    for _ in 0..arity {
        let mut next = Vec::new();
        for p in &pts {
            for v in 0..=max {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

fn to_int_vec(x: &[i64]) -> Vec<Int> {
    x.iter().map(|&v| Int::from(v)).collect()
}

/// A polynomial map Z^n → G with Taylor coefficients a_t ∈ G_{|t|}. The
/// `relax` field lowers the required filtration level by that many steps
/// (used by group-valued derivatives, whose coefficients live one band up).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMap {
    arity: usize,
    fl: FilteredLattice,
    coeffs: BTreeMap<MultiIndex, UnipotentMatrix>,
    relax: usize,
}

impl PolyMap {
    pub fn new(
        arity: usize,
        fl: FilteredLattice,
        coeffs: BTreeMap<MultiIndex, UnipotentMatrix>,
    ) -> Result<Self> {
        Self::with_relax(arity, fl, coeffs, 0)
    }

    pub fn with_relax(
        arity: usize,
        fl: FilteredLattice,
        coeffs: BTreeMap<MultiIndex, UnipotentMatrix>,
        relax: usize,
    ) -> Result<Self> {
        let mut reduced = BTreeMap::new();
        for (t, a) in coeffs {
            if t.arity() != arity {
                return Err(Error::ArityMismatch { expected: arity, got: t.arity() });
            }
            if t.weight() > fl.degree() {
                return Err(Error::NotPolynomial {
                    index: t.0.clone(),
                    detail: format!("weight {} exceeds degree {}", t.weight(), fl.degree()),
                });
            }
            fl.check_dim(&a)?;
            let a = fl.reduce(&a);
            let required = t.weight().saturating_sub(relax);
            if !fl.in_level(&a, required) {
                return Err(Error::NotPolynomial {
                    index: t.0.clone(),
                    detail: format!("coefficient not in G_{required}"),
                });
            }
            if !a.is_identity() {
                reduced.insert(t, a);
            }
        }
        Ok(PolyMap { arity, fl, coeffs: reduced, relax })
    }

    pub fn constant(arity: usize, fl: FilteredLattice, g: UnipotentMatrix) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex::zero(arity), g);
        Self::new(arity, fl, coeffs)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn lattice(&self) -> &FilteredLattice {
        &self.fl
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, UnipotentMatrix> {
        &self.coeffs
    }

    pub fn coeff(&self, t: &MultiIndex) -> UnipotentMatrix {
        self.coeffs
            .get(t)
            .cloned()
            .unwrap_or_else(|| UnipotentMatrix::identity(self.fl.dim()))
    }

    pub fn relax(&self) -> usize {
        self.relax
    }

    /// f(x) = ∏_t a_t^{binom(x,t)} in the canonical coefficient order.
    pub fn eval(&self, x: &[Int]) -> Result<UnipotentMatrix> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: x.len() });
        }
        let mut acc = UnipotentMatrix::identity(self.fl.dim());
        for (t, a) in &self.coeffs {
            let b = t.binom(x);
            if !b.is_zero() {
                acc = self.fl.mul(&acc, &self.fl.int_pow(a, &b));
            }
        }
        Ok(acc)
    }

    pub fn eval_i64(&self, x: &[i64]) -> Result<UnipotentMatrix> {
        self.eval(&to_int_vec(x))
    }

    /// Extracts the unique Taylor coefficients reproducing `f` on the grid
    /// [0, k]^n, in the canonical order: a_t = (partial product at t)⁻¹ f(t).
    /// Fails with `NotPolynomial` if a coefficient misses its band or the
    /// grid is not reproduced.
    pub fn interpolate(
        fl: &FilteredLattice,
        arity: usize,
        relax: usize,
        f: &mut dyn FnMut(&[i64]) -> Result<UnipotentMatrix>,
    ) -> Result<Self> {
        let k = fl.degree();
        let mut coeffs: BTreeMap<MultiIndex, UnipotentMatrix> = BTreeMap::new();
        for t in multi_indices(arity, k) {
            let point: Vec<i64> = t.0.iter().map(|&v| v as i64).collect();
            let value = fl.reduce(&f(&point)?);
            let mut partial = UnipotentMatrix::identity(fl.dim());
            let int_point = to_int_vec(&point);
            for (u, a) in &coeffs {
                let b = u.binom(&int_point);
                if !b.is_zero() {
                    partial = fl.mul(&partial, &fl.int_pow(a, &b));
                }
            }
            let a_t = fl.mul(&fl.inv(&partial), &value);
            let required = t.weight().saturating_sub(relax);
            if !fl.in_level(&a_t, required) {
                return Err(Error::NotPolynomial {
                    index: t.0.clone(),
                    detail: format!("extracted coefficient not in G_{required}"),
                });
            }
            if !a_t.is_identity() {
                coeffs.insert(t, a_t);
            }
        }
        let pm = PolyMap { arity, fl: fl.clone(), coeffs, relax };
        // The remaining grid points certify that the input was polynomial.
        for point in grid_points(arity, k as i64) {
            if pm.eval_i64(&point)? != fl.reduce(&f(&point)?) {
                return Err(Error::NotPolynomial {
                    index: point.iter().map(|&v| v as usize).collect(),
                    detail: "grid values are not reproduced by a degree-k expansion".into(),
                });
            }
        }
        Ok(pm)
    }

    /// Discrete derivative Δ_h f(x) = f(x)⁻¹ f(x+h), interpolated with the
    /// filtration requirement relaxed by one level.
    pub fn derivative(&self, h: &[Int]) -> Result<PolyMap> {
        if h.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: h.len() });
        }
        if h.iter().all(|v| v.is_zero()) {
            return Err(Error::PreconditionFailed("derivative direction must be nonzero".into()));
        }
        let fl = self.fl.clone();
        let relax = self.relax + 1;
        Self::interpolate(&fl, self.arity, relax, &mut |x: &[i64]| {
            let xi = to_int_vec(x);
            let shifted: Vec<Int> = xi.iter().zip(h).map(|(a, b)| a + b).collect();
            Ok(fl.mul(&fl.inv(&self.eval(&xi)?), &self.eval(&shifted)?))
        })
    }

    /// Image in the quotient by the top band.
    pub fn truncate(&self) -> PolyMap {
        let qfl = self.fl.quotient_drop_top();
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(t, _)| t.weight() <= qfl.degree())
            .map(|(t, a)| (t.clone(), qfl.reduce(a)))
            .filter(|(_, a)| !a.is_identity())
            .collect();
        PolyMap { arity: self.arity, fl: qfl, coeffs, relax: self.relax }
    }

    /// Exact periodicity of x ↦ f(x)Γ with period `periods[i]` in coordinate
    /// i: interpolates h_i(x) = f(x)⁻¹ f(x + P_i e_i) and tests all its
    /// Taylor coefficients for lattice membership. This is exact because a
    /// polynomial map takes values in Γ at all integer points iff all its
    /// coefficients lie in Γ (binomials are integers and the extraction
    /// stays in the subgroup).
    pub fn is_periodic(&self, periods: &[Int]) -> Result<bool> {
        if periods.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: periods.len() });
        }
        for (i, p) in periods.iter().enumerate() {
            if !p.is_positive() {
                return Err(Error::PreconditionFailed("periods must be positive".into()));
            }
            let mut shift = vec![Int::zero(); self.arity];
            shift[i] = p.clone();
            let h = self.difference_map(&shift)?;
            if !h.coeffs.values().all(|a| self.fl.in_lattice(a)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_periodic_uniform(&self, m: &Int) -> Result<bool> {
        self.is_periodic(&vec![m.clone(); self.arity])
    }

    /// Difference map x ↦ f(x)⁻¹ f(x+h) with no band requirement: the
    /// periodicity test and the lift search only need lattice membership of
    /// its coefficients.
    pub fn difference_map(&self, h: &[Int]) -> Result<PolyMap> {
        let fl = self.fl.clone();
        Self::interpolate(&fl, self.arity, fl.degree(), &mut |x: &[i64]| {
            let xi = to_int_vec(x);
            let shifted: Vec<Int> = xi.iter().zip(h).map(|(a, b)| a + b).collect();
            Ok(fl.mul(&fl.inv(&self.eval(&xi)?), &self.eval(&shifted)?))
        })
    }

    /// The explicit period bound M = q^{1 + k²(k+1)²/4}·k! for a map whose
    /// nonconstant coefficients all satisfy a_t^q ∈ Γ (verified).
    pub fn period_from_rational(&self, q: &Int) -> Result<Int> {
        if !q.is_positive() {
            return Err(Error::PreconditionFailed("q must be positive".into()));
        }
        for (t, a) in &self.coeffs {
            if t.is_zero() {
                continue;
            }
            match self.fl.rationality_order(a)? {
                Some(o) if (q % &o).is_zero() => {}
                other => {
                    return Err(Error::PreconditionFailed(format!(
                        "coefficient {:?} has rationality order {:?}, not dividing q = {}",
                        t.0, other, q
                    )))
                }
            }
        }
        let m = explicit_period_bound(q, self.fl.degree());
        debug_assert!(self.is_periodic_uniform(&m)?, "period bound must verify");
        Ok(m)
    }

    /// Rationalization of a verified-periodic map: returns q with exact
    /// witnesses a_t^q ∈ Γ for every nonconstant coefficient, following the
    /// degree induction (quotient by the top band, central corrections, then
    /// the abelian case on the top-band discrepancy).
    pub fn rationalize(&self, m: &Int) -> Result<RationalizeReport> {
        if !self.is_periodic_uniform(m)? {
            return Err(Error::PreconditionFailed(format!("map is not {m}-periodic mod Γ")));
        }
        let report = self.rationalize_inner(m)?;
        // Exactness of every witness.
        for w in &report.witnesses {
            if !self.fl.in_lattice(&w.witness_power) {
                return Err(Error::Internal("rationalize produced an unverified witness".into()));
            }
        }
        Ok(report)
    }

    fn rationalize_inner(&self, m: &Int) -> Result<RationalizeReport> {
        let k = self.fl.degree();
        let nonconstant: Vec<&MultiIndex> = self.coeffs.keys().filter(|t| !t.is_zero()).collect();
        if self.fl.is_trivial() || nonconstant.is_empty() {
            return Ok(RationalizeReport { q: Int::one(), witnesses: vec![] });
        }
        if k == 1 {
            // Abelian linear case: every nonconstant coefficient already
            // satisfies a_t^M ∈ Γ; use the exact orders.
            let mut q = Int::one();
            let mut witnesses = Vec::new();
            for t in nonconstant {
                let a = &self.coeffs[t];
                let order = self
                    .fl
                    .rationality_order(a)?
                    .ok_or_else(|| Error::Internal("periodic linear coefficient with no rational power".into()))?;
                if !(m % &order).is_zero() {
                    return Err(Error::Internal(format!(
                        "linear coefficient order {order} does not divide the period {m}"
                    )));
                }
                q = q.lcm(&order);
                witnesses.push(RationalizeWitness {
                    index: t.clone(),
                    order: order.clone(),
                    correction: UnipotentMatrix::identity(self.fl.dim()),
                    witness_power: self.fl.int_pow(a, &order),
                });
            }
            return Ok(RationalizeReport { q, witnesses });
        }

        // Degree induction: rationalize the truncation, correct each
        // coefficient into the lattice by a central element, then treat the
        // central discrepancy as an abelian polynomial.
        let trunc = self.truncate();
        let q0 = trunc.rationalize(m)?.q;

        let mut corrections: BTreeMap<MultiIndex, UnipotentMatrix> = BTreeMap::new();
        for t in &nonconstant {
            let a = &self.coeffs[*t];
            let r = self.fl.central_correction(a, &q0)?;
            corrections.insert((*t).clone(), r);
        }

        let mprime = explicit_period_bound(&q0, k);
        let mpp = m.lcm(&mprime);

        // δ(x) = f̃(x)⁻¹ f(x) = ∏ r_t^{-binom(x,t)} lives in the top-band
        // torus; its coefficients are the inverses of the corrections.
        let torus = CALGroup::torus(self.fl.top_positions().len());
        let mut delta_coeffs: BTreeMap<MultiIndex, CALPoint> = BTreeMap::new();
        for (t, r) in &corrections {
            let coords = self.top_band_torus_coords(&r.inverse());
            let p = torus.point(coords, vec![]);
            if !torus.is_zero(&p) {
                delta_coeffs.insert(t.clone(), p);
            }
        }
        let delta = AbelianPolyMap::new(self.arity, k, torus.clone(), delta_coeffs)?;
        let q1 = delta.rationalize_periodic(&mpp)?;

        let q = q0.lcm(&q1);
        let mut witnesses = Vec::new();
        for t in nonconstant {
            let a = &self.coeffs[t];
            witnesses.push(RationalizeWitness {
                index: t.clone(),
                order: self.fl.rationality_order(a)?.unwrap_or_else(|| q.clone()),
                correction: corrections[t].clone(),
                witness_power: self.fl.int_pow(a, &q),
            });
        }
        Ok(RationalizeReport { q, witnesses })
    }

    /// Normalized torus coordinates u_p = s_p · entry_p of a top-band element.
    fn top_band_torus_coords(&self, g: &UnipotentMatrix) -> Vec<Rat> {
        self.fl
            .top_positions()
            .iter()
            .map(|&(i, j)| g.get(i, j) * Rat::from_integer(Int::from(self.fl.denom_at(i, j))))
            .collect()
    }
}

/// M = q^{1 + k²(k+1)²/4}·k!.
pub fn explicit_period_bound(q: &Int, k: usize) -> Int {
    let e = 1 + (k * k * (k + 1) * (k + 1)) / 4;
    q.pow(e as u32) * factorial(k)
}

#[derive(Debug, Clone)]
pub struct RationalizeWitness {
    pub index: MultiIndex,
    /// Minimal rationality order of this coefficient.
    pub order: Int,
    /// Central correction used by the degree induction (identity at k = 1).
    pub correction: UnipotentMatrix,
    /// a_t^q, an exact lattice element.
    pub witness_power: UnipotentMatrix,
}

#[derive(Debug, Clone)]
pub struct RationalizeReport {
    pub q: Int,
    pub witnesses: Vec<RationalizeWitness>,
}

impl FilteredLattice {
    /// Central rational correction: given g with (g mod G_k)^q ∈ Γ·G_k,
    /// returns r ∈ G_k with (g·r)^q ∈ Γ. The top band is central, so
    /// (gr)^q = g^q r^q and r solves q·r ≡ −h (mod Γ ∩ G_k) where
    /// g^q = h·γ, h ∈ G_k, γ ∈ Γ.
    pub fn central_correction(&self, g: &UnipotentMatrix, q: &Int) -> Result<UnipotentMatrix> {
        self.check_dim(g)?;
        let u = self.int_pow(g, q);
        // Split u = h·γ with γ the zero-top-band part (γ ∈ Γ iff the
        // truncation is lattice-integral) and h central.
        let mut gamma = u.clone();
        for (i, j) in self.top_positions() {
            gamma.set(i, j, Rat::zero());
        }
        if !self.in_lattice(&gamma) {
            return Err(Error::PreconditionFailed(
                "g^q does not lie in Γ·G_k (truncation is not in the quotient lattice)".into(),
            ));
        }
        let h = self.mul(&u, &self.inv(&gamma));
        let mut r = UnipotentMatrix::identity(self.dim());
        let qr = Rat::from_integer(q.clone());
        for (i, j) in self.top_positions() {
            r.set(i, j, -(h.get(i, j) / &qr));
        }
        debug_assert!(self.in_level(&r, self.degree()));
        debug_assert!(self.in_lattice(&self.int_pow(&self.mul(g, &r), q)));
        Ok(r)
    }
}

/// The Hall–Petresco coefficients c_2, …, c_k of a pair (g, h): the unique
/// elements with g^n h^n = (gh)^n ∏_{i=2}^k c_i^{binom(n,i)}, c_i ∈ G_i,
/// extracted by interpolating n ↦ (gh)^{-n} g^n h^n and verified for
/// n = 0..2k by direct powering.
pub fn hall_petresco(
    fl: &FilteredLattice,
    g: &UnipotentMatrix,
    h: &UnipotentMatrix,
) -> Result<Vec<UnipotentMatrix>> {
    fl.check_dim(g)?;
    fl.check_dim(h)?;
    let k = fl.degree();
    let gh = fl.mul(g, h);
    let u = |n: &Int| -> UnipotentMatrix {
        fl.mul(&fl.int_pow(&gh, &-n.clone()), &fl.mul(&fl.int_pow(g, n), &fl.int_pow(h, n)))
    };
    let pm = PolyMap::interpolate(fl, 1, k, &mut |x: &[i64]| Ok(u(&Int::from(x[0]))))?;
    let mut cs = Vec::new();
    for i in 0..=k {
        let c = pm.coeff(&MultiIndex(vec![i]));
        if i <= 1 {
            if !c.is_identity() {
                return Err(Error::Internal("Hall–Petresco c_0, c_1 must be trivial".into()));
            }
            continue;
        }
        if !fl.in_level(&c, i) {
            let (bi, bj) = fl
                .positions()
                .into_iter()
                .find(|&(a, b)| !c.get(a, b).is_zero() && fl.level_at(a, b) < i)
                .unwrap_or((0, fl.dim() - 1));
            return Err(Error::FiltrationViolation(bi, bj));
        }
        cs.push(c);
    }
    // Identity check over n = 0..2k.
    for n in 0..=(2 * k as i64) {
        let ni = Int::from(n);
        let lhs = fl.mul(&fl.int_pow(g, &ni), &fl.int_pow(h, &ni));
        let mut rhs = fl.int_pow(&gh, &ni);
        for (idx, c) in cs.iter().enumerate() {
            let i = idx + 2;
            rhs = fl.mul(&rhs, &fl.int_pow(c, &binom_int(&ni, i)));
        }
        if lhs != rhs {
            return Err(Error::Internal(format!("Hall–Petresco identity fails at n = {n}")));
        }
    }
    Ok(cs)
}

// ---------------------------------------------------------------------------
// Abelian polynomial maps
// ---------------------------------------------------------------------------

/// A polynomial map Z^n → A of degree ≤ k into a compact abelian Lie group,
/// by Taylor coefficients in the same canonical index order.
#[derive(Debug, Clone)]
pub struct AbelianPolyMap {
    arity: usize,
    degree: usize,
    group: CALGroup,
    coeffs: BTreeMap<MultiIndex, CALPoint>,
}

impl AbelianPolyMap {
    pub fn new(
        arity: usize,
        degree: usize,
        group: CALGroup,
        coeffs: BTreeMap<MultiIndex, CALPoint>,
    ) -> Result<Self> {
        for t in coeffs.keys() {
            if t.arity() != arity {
                return Err(Error::ArityMismatch { expected: arity, got: t.arity() });
            }
            if t.weight() > degree {
                return Err(Error::NotPolynomial {
                    index: t.0.clone(),
                    detail: format!("weight exceeds degree {degree}"),
                });
            }
        }
        Ok(AbelianPolyMap { arity, degree, group, coeffs })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn group(&self) -> &CALGroup {
        &self.group
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, CALPoint> {
        &self.coeffs
    }

    pub fn coeff(&self, t: &MultiIndex) -> CALPoint {
        self.coeffs.get(t).cloned().unwrap_or_else(|| self.group.zero())
    }

    pub fn eval(&self, x: &[Int]) -> Result<CALPoint> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: x.len() });
        }
        let mut acc = self.group.zero();
        for (t, a) in &self.coeffs {
            let b = t.binom(x);
            if !b.is_zero() {
                acc = self.group.add(&acc, &self.group.int_mul(&b, a));
            }
        }
        Ok(acc)
    }

    pub fn eval_i64(&self, x: &[i64]) -> Result<CALPoint> {
        self.eval(&to_int_vec(x))
    }

    pub fn interpolate(
        group: &CALGroup,
        arity: usize,
        degree: usize,
        f: &mut dyn FnMut(&[i64]) -> Result<CALPoint>,
    ) -> Result<Self> {
        let mut coeffs: BTreeMap<MultiIndex, CALPoint> = BTreeMap::new();
        for t in multi_indices(arity, degree) {
            let point: Vec<i64> = t.0.iter().map(|&v| v as i64).collect();
            let value = f(&point)?;
            let mut partial = group.zero();
            let int_point = to_int_vec(&point);
            for (u, a) in &coeffs {
                let b = u.binom(&int_point);
                if !b.is_zero() {
                    partial = group.add(&partial, &group.int_mul(&b, a));
                }
            }
            let a_t = group.sub(&value, &partial);
            if !group.is_zero(&a_t) {
                coeffs.insert(t, a_t);
            }
        }
        let m = AbelianPolyMap { arity, degree, group: group.clone(), coeffs };
        for point in grid_points(arity, degree as i64) {
            if m.eval_i64(&point)? != f(&point)? {
                return Err(Error::NotPolynomial {
                    index: point.iter().map(|&v| v as usize).collect(),
                    detail: "grid values are not reproduced by a degree-k expansion".into(),
                });
            }
        }
        Ok(m)
    }

    /// Δ_h m(x) = m(x+h) − m(x), computed on coefficients via Chu–Vandermonde:
    /// the t-th coefficient is Σ_{j ≠ 0} binom(h, j) a_{t+j}. Degree drops by
    /// at least one.
    pub fn derivative(&self, h: &[Int]) -> Result<AbelianPolyMap> {
        if h.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: h.len() });
        }
        let mut coeffs: BTreeMap<MultiIndex, CALPoint> = BTreeMap::new();
        for t in multi_indices(self.arity, self.degree.saturating_sub(1)) {
            let mut acc = self.group.zero();
            for (u, a) in &self.coeffs {
                if u.0.iter().zip(&t.0).all(|(&ui, &ti)| ui >= ti) && *u != t {
                    let j = MultiIndex(u.0.iter().zip(&t.0).map(|(&ui, &ti)| ui - ti).collect());
                    let b = j.binom(h);
                    if !b.is_zero() {
                        acc = self.group.add(&acc, &self.group.int_mul(&b, a));
                    }
                }
            }
            if !self.group.is_zero(&acc) {
                coeffs.insert(t, acc);
            }
        }
        AbelianPolyMap::new(self.arity, self.degree.saturating_sub(1), self.group.clone(), coeffs)
    }

    /// Exact coordinatewise periodicity: all coefficients of every
    /// difference Δ_{P_i e_i} m must vanish in A.
    pub fn is_periodic(&self, periods: &[Int]) -> Result<bool> {
        if periods.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: periods.len() });
        }
        for (i, p) in periods.iter().enumerate() {
            let mut shift = vec![Int::zero(); self.arity];
            shift[i] = p.clone();
            let d = self.derivative(&shift)?;
            if !d.coeffs.is_empty() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_periodic_uniform(&self, m: &Int) -> Result<bool> {
        self.is_periodic(&vec![m.clone(); self.arity])
    }

    /// q with q·a_t = 0 for every nonconstant coefficient of a verified
    /// M-periodic map, following the weight induction: top-weight
    /// coefficients are annihilated by the current period (checked through
    /// the iterated-derivative extraction), the top-weight part is dropped,
    /// and the remainder is (k!·period)-periodic.
    pub fn rationalize_periodic(&self, m: &Int) -> Result<Int> {
        if !self.is_periodic_uniform(m)? {
            return Err(Error::PreconditionFailed(format!("abelian map is not {m}-periodic")));
        }
        let kfac = factorial(self.degree.max(1));
        let mut q = Int::one();
        let mut work = self.clone();
        let mut period = m.clone();
        for d in (1..=self.degree).rev() {
            let tops: Vec<MultiIndex> =
                work.coeffs.keys().filter(|t| t.weight() == d).cloned().collect();
            for t in &tops {
                let a = work.coeffs[t].clone();
                // Iterated derivatives reduce binom(x,t) to the linear term:
                // with w the first active coordinate, t_w − 1 derivatives in
                // e_w and t_u in each other e_u leave coefficient a_t on e_w.
                let w = t.0.iter().position(|&v| v > 0).expect("nonconstant index");
                let mut reduced: AbelianPolyMap = work.clone();
                for (u, &tu) in t.0.iter().enumerate() {
                    let steps = if u == w { tu - 1 } else { tu };
                    for _ in 0..steps {
                        let mut dir = vec![Int::zero(); self.arity];
                        dir[u] = Int::one();
                        reduced = reduced.derivative(&dir)?;
                    }
                }
                let mut ew = vec![0usize; self.arity];
                ew[w] = 1;
                let lin = reduced.coeff(&MultiIndex(ew));
                if lin != a {
                    return Err(Error::Internal(
                        "iterated derivative does not isolate the top coefficient".into(),
                    ));
                }
                if !self.group.is_zero(&self.group.int_mul(&period, &a)) {
                    return Err(Error::Internal(
                        "top-weight coefficient not annihilated by the period".into(),
                    ));
                }
                q = q.lcm(&self.group.point_order(&a));
            }
            for t in tops {
                work.coeffs.remove(&t);
            }
            work.degree = d - 1;
            period *= &kfac;
            if !work.is_periodic_uniform(&period)? {
                return Err(Error::Internal("remainder lost its periodicity".into()));
            }
        }
        Ok(q)
    }
}
