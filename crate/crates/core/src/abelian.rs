//! Finite abelian groups and their homomorphisms, fibers of surjections,
//! rational points of compact abelian Lie groups, complex function tables,
//! Gowers uniformity norms and correlations.

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, Int, IntMat, Rat, RatMat};

/// Upper bound on |Z|^{s+1} for Gowers-norm evaluation.
const GOWERS_GUARD: u128 = 100_000_000;
/// Upper bound on group orders enumerated element-by-element.
const ENUM_GUARD: u128 = 10_000_000;

/// A finite abelian group presented as Z/d_1 × ⋯ × Z/d_r. The presentation
/// moduli fix the coordinate system; the invariant factors are computed on
/// construction and expose the canonical rank and exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAbelianGroup {
    moduli: Vec<u64>,
    invariants: Vec<u64>, // invariant-factor form, d_1 | d_2 | ..., entries > 1
}

/// Coordinates of a group element, stored reduced into [0, d_i).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub coords: Vec<i64>,
}

impl FiniteAbelianGroup {
    pub fn new(moduli: Vec<u64>) -> Result<Self> {
        if moduli.contains(&0) {
            return Err(Error::Parse("group moduli must be positive".into()));
        }
        let diag: Vec<Int> = moduli.iter().map(|&d| Int::from(d)).collect();
        let snf = linalg::smith_normal_form(&IntMat::diagonal(&diag));
        let invariants: Vec<u64> = snf
            .diag()
            .iter()
            .filter_map(|d| d.to_u64())
            .filter(|&d| d > 1)
            .collect();
        Ok(FiniteAbelianGroup { moduli, invariants })
    }

    pub fn trivial() -> Self {
        FiniteAbelianGroup { moduli: vec![], invariants: vec![] }
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// Number of presentation coordinates.
    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn order(&self) -> u128 {
        self.moduli.iter().map(|&d| d as u128).product()
    }

    /// lcm of the element orders = largest invariant factor.
    pub fn exponent(&self) -> u64 {
        self.invariants.last().copied().unwrap_or(1)
    }

    /// Minimal number of generators.
    pub fn rank(&self) -> usize {
        self.invariants.len()
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.invariants
    }

    pub fn reduce(&self, coords: &[i64]) -> GroupElement {
        assert_eq!(coords.len(), self.len(), "coordinate length");
        let coords = coords
            .iter()
            .zip(&self.moduli)
            .map(|(&c, &d)| c.rem_euclid(d as i64))
            .collect();
        GroupElement { coords }
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement { coords: vec![0; self.len()] }
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let coords = a
            .coords
            .iter()
            .zip(&b.coords)
            .zip(&self.moduli)
            .map(|((&x, &y), &d)| (x + y).rem_euclid(d as i64))
            .collect();
        GroupElement { coords }
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        let coords = a.coords.iter().zip(&self.moduli).map(|(&x, &d)| (-x).rem_euclid(d as i64)).collect();
        GroupElement { coords }
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.add(a, &self.neg(b))
    }

    /// Mixed-radix index of an element, in the iteration order of `elements`.
    pub fn index_of(&self, a: &GroupElement) -> usize {
        let mut idx = 0usize;
        for (c, d) in a.coords.iter().zip(&self.moduli) {
            idx = idx * (*d as usize) + *c as usize;
        }
        idx
    }

    pub fn element_at(&self, mut idx: usize) -> GroupElement {
        let mut coords = vec![0i64; self.len()];
        for i in (0..self.len()).rev() {
            let d = self.moduli[i] as usize;
            coords[i] = (idx % d) as i64;
            idx /= d;
        }
        GroupElement { coords }
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        let n = self.order() as usize;
        (0..n).map(move |i| self.element_at(i))
    }

    /// Order of a single element.
    pub fn element_order(&self, a: &GroupElement) -> u64 {
        let mut ord: u64 = 1;
        for (&c, &d) in a.coords.iter().zip(&self.moduli) {
            let g = (c as u64).gcd(&d);
            ord = ord.lcm(&(d / g.max(1)));
        }
        ord.max(1)
    }
}

/// A homomorphism between finite abelian groups, given by an integer matrix
/// acting on presentation coordinates (target length × source length).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbelianHom {
    pub source: FiniteAbelianGroup,
    pub target: FiniteAbelianGroup,
    pub matrix: Vec<Vec<i64>>,
}

impl AbelianHom {
    /// Checks well-definedness: d_i times the i-th column must vanish in the
    /// target for every source generator of order d_i.
    pub fn new(source: FiniteAbelianGroup, target: FiniteAbelianGroup, matrix: Vec<Vec<i64>>) -> Result<Self> {
        if matrix.len() != target.len() || matrix.iter().any(|row| row.len() != source.len()) {
            return Err(Error::DimMismatch(format!(
                "hom matrix must be {}x{}",
                target.len(),
                source.len()
            )));
        }
        for (i, &d) in source.moduli.iter().enumerate() {
            for (row, &dt) in matrix.iter().zip(&target.moduli) {
                let v = (row[i] as i128) * (d as i128);
                if v.rem_euclid(dt as i128) != 0 {
                    return Err(Error::Parse(format!(
                        "hom not well-defined on source generator {i} (order {d})"
                    )));
                }
            }
        }
        Ok(AbelianHom { source, target, matrix })
    }

    pub fn identity(group: FiniteAbelianGroup) -> Self {
        let n = group.len();
        let matrix = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        AbelianHom { source: group.clone(), target: group, matrix }
    }

    pub fn apply(&self, y: &GroupElement) -> GroupElement {
        assert_eq!(y.coords.len(), self.source.len(), "hom argument length");
        let coords: Vec<i64> = self
            .matrix
            .iter()
            .zip(&self.target.moduli)
            .map(|(row, &d)| {
                let s: i128 = row.iter().zip(&y.coords).map(|(&m, &c)| m as i128 * c as i128).sum();
                s.rem_euclid(d as i128) as i64
            })
            .collect();
        GroupElement { coords }
    }

    /// Surjectivity via the Smith normal form of [matrix | diag(target moduli)]:
    /// the image together with the relation lattice must span Z^t.
    pub fn is_surjective(&self) -> bool {
        let t = self.target.len();
        if t == 0 {
            return true;
        }
        let s = self.source.len();
        let mut rows = Vec::with_capacity(t);
        for i in 0..t {
            let mut row: Vec<Int> = self.matrix[i].iter().map(|&x| Int::from(x)).collect();
            for j in 0..t {
                row.push(if i == j { Int::from(self.target.moduli[j]) } else { Int::zero() });
            }
            rows.push(row);
        }
        let _ = s;
        let m = IntMat::from_rows(rows).expect("rectangular");
        let snf = linalg::smith_normal_form(&m);
        snf.diag().iter().all(|d| d.is_one())
    }

    /// The full fiber τ^{-1}(x), enumerated; every fiber has |Z'|/|Z| points.
    pub fn fiber(&self, x: &GroupElement) -> Result<Vec<GroupElement>> {
        if !self.is_surjective() {
            return Err(Error::NonSurjective);
        }
        if self.source.order() > ENUM_GUARD {
            return Err(Error::TooLarge(format!("fiber enumeration over order {}", self.source.order())));
        }
        Ok(self.source.elements().filter(|y| &self.apply(y) == x).collect())
    }
}

// ---------------------------------------------------------------------------
// Complex tables, Gowers norms, correlation
// ---------------------------------------------------------------------------

/// e(t) = exp(2πi t) for rational t, reduced mod 1 before exponentiation.
pub fn e(t: &Rat) -> Complex64 {
    let reduced = t - t.floor();
    let val = reduced.numer().to_f64().unwrap_or(0.0) / reduced.denom().to_f64().unwrap_or(1.0);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * val)
}

/// A total complex-valued function on a finite abelian group, indexed in the
/// mixed-radix element order.
#[derive(Debug, Clone)]
pub struct ComplexTable {
    pub group: FiniteAbelianGroup,
    pub values: Vec<Complex64>,
}

impl ComplexTable {
    pub fn new(group: FiniteAbelianGroup, values: Vec<Complex64>) -> Result<Self> {
        if values.len() as u128 != group.order() {
            return Err(Error::DimMismatch(format!(
                "table has {} values for a group of order {}",
                values.len(),
                group.order()
            )));
        }
        Ok(ComplexTable { group, values })
    }

    pub fn from_fn(group: FiniteAbelianGroup, mut f: impl FnMut(&GroupElement) -> Complex64) -> Self {
        let values = group.elements().map(|x| f(&x)).collect();
        ComplexTable { group, values }
    }

    pub fn constant(group: FiniteAbelianGroup, v: Complex64) -> Self {
        let n = group.order() as usize;
        ComplexTable { group, values: vec![v; n] }
    }

    pub fn value(&self, x: &GroupElement) -> Complex64 {
        self.values[self.group.index_of(x)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_one_bounded(&self) -> bool {
        self.sup_norm() <= 1.0 + 1e-9
    }

    /// f ∘ τ as a table on the source group of τ.
    pub fn pullback(&self, tau: &AbelianHom) -> Result<ComplexTable> {
        if tau.target != self.group {
            return Err(Error::GroupMismatch("pullback target differs from table group".into()));
        }
        Ok(ComplexTable::from_fn(tau.source.clone(), |y| self.value(&tau.apply(y))))
    }
}

/// E_x f(x) conj(g(x)).
pub fn correlate(f: &ComplexTable, g: &ComplexTable) -> Result<Complex64> {
    if f.group != g.group {
        return Err(Error::GroupMismatch("correlate requires equal groups".into()));
    }
    let n = f.values.len() as f64;
    Ok(f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() / n)
}

struct AddOps {
    order: usize,
    table: Option<Vec<u32>>,
    strides: Vec<usize>,
    moduli: Vec<usize>,
}

impl AddOps {
    fn new(group: &FiniteAbelianGroup) -> Self {
        let order = group.order() as usize;
        let moduli: Vec<usize> = group.moduli().iter().map(|&d| d as usize).collect();
        let mut strides = vec![1usize; moduli.len()];
        for i in (0..moduli.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * moduli[i + 1];
        }
        let table = if order > 0 && order <= 2048 {
            let mut t = vec![0u32; order * order];
            for a in 0..order {
                let ea = group.element_at(a);
                for b in 0..order {
                    let eb = group.element_at(b);
                    t[a * order + b] = group.index_of(&group.add(&ea, &eb)) as u32;
                }
            }
            Some(t)
        } else {
            None
        };
        AddOps { order, table, strides, moduli }
    }

    #[inline]
    fn add(&self, a: usize, b: usize) -> usize {
        if let Some(t) = &self.table {
            return t[a * self.order + b] as usize;
        }
        let mut idx = 0usize;
        let mut ra = a;
        let mut rb = b;
        for i in 0..self.moduli.len() {
            let (da, sa) = (ra / self.strides[i], ra % self.strides[i]);
            let (db, sb) = (rb / self.strides[i], rb % self.strides[i]);
            idx += ((da + db) % self.moduli[i]) * self.strides[i];
            ra = sa;
            rb = sb;
        }
        idx
    }
}

fn u_pow(values: &[Complex64], ops: &AddOps, s: u32) -> f64 {
    let n = values.len();
    if s == 1 {
        let mean = values.iter().sum::<Complex64>() / n as f64;
        return mean.norm_sqr();
    }
    let mut acc = 0.0;
    let mut derived = vec![Complex64::new(0.0, 0.0); n];
    for h in 0..n {
        for x in 0..n {
            derived[x] = values[ops.add(x, h)] * values[x].conj();
        }
        acc += u_pow(&derived, ops, s - 1);
    }
    acc / n as f64
}

/// ‖f‖_{U^s} via the recursive box-norm identity
/// ‖f‖_{U^s}^{2^s} = E_h ‖Δ_h f‖_{U^{s-1}}^{2^{s-1}} with Δ_h f(x) = f(x+h) conj(f(x)).
/// Tiny negative round-off inside the final root is clamped to zero.
pub fn gowers_norm(f: &ComplexTable, s: u32) -> Result<f64> {
    if s == 0 {
        return Err(Error::PreconditionFailed("Gowers norm requires s >= 1".into()));
    }
    let order = f.group.order();
    let mut size: u128 = 1;
    for _ in 0..=s {
        size = size.saturating_mul(order.max(1));
        if size > GOWERS_GUARD {
            return Err(Error::TooLarge(format!("|Z|^{} = {}^{} exceeds the Gowers guard", s + 1, order, s + 1)));
        }
    }
    let ops = AddOps::new(&f.group);
    let p = u_pow(&f.values, &ops, s).max(0.0);
    Ok(p.powf(1.0 / f64::from(1u32 << s)))
}

/// Reference implementation by the defining 2^s-fold sum
/// ‖f‖_{U^s}^{2^s} = E_{x,h_1..h_s} ∏_{v ∈ {0,1}^s} C^{|v|} f(x + v·h).
/// Kept as an independent oracle for the recursive route.
pub fn gowers_norm_naive(f: &ComplexTable, s: u32) -> Result<f64> {
    if s == 0 {
        return Err(Error::PreconditionFailed("Gowers norm requires s >= 1".into()));
    }
    let order = f.group.order();
    let mut size: u128 = 1;
    for _ in 0..=s {
        size = size.saturating_mul(order.max(1));
        if size > GOWERS_GUARD {
            return Err(Error::TooLarge("naive Gowers sum exceeds the guard".into()));
        }
    }
    let n = order as usize;
    let ops = AddOps::new(&f.group);
    let mut total = Complex64::new(0.0, 0.0);
    let mut hs = vec![0usize; s as usize];
    loop {
        for x in 0..n {
            let mut prod = Complex64::new(1.0, 0.0);
            for v in 0..(1usize << s) {
                let mut pt = x;
                let mut bits = 0u32;
                for (i, &h) in hs.iter().enumerate() {
                    if v >> i & 1 == 1 {
                        pt = ops.add(pt, h);
                        bits += 1;
                    }
                }
                let val = f.values[pt];
                prod *= if bits.is_multiple_of(2) { val } else { val.conj() };
            }
            total += prod;
        }
        // Advance the h-vector odometer.
        let mut i = 0;
        loop {
            if i == hs.len() {
                let count = (n as f64).powi(s as i32 + 1);
                let avg = total / count;
                return Ok(avg.re.max(0.0).powf(1.0 / f64::from(1u32 << s)));
            }
            hs[i] += 1;
            if hs[i] < n {
                break;
            }
            hs[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Compact abelian Lie groups: rational points of T^a × finite
// ---------------------------------------------------------------------------

/// T^a × (Z/d_1 × ⋯ × Z/d_r), with torus points restricted to rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CALGroup {
    pub torus_rank: usize,
    pub finite: FiniteAbelianGroup,
}

/// A rational point: torus coordinates reduced into [0,1), finite part stored
/// reduced in its group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CALPoint {
    pub torus: Vec<Rat>,
    pub finite: GroupElement,
}

impl CALGroup {
    pub fn torus(rank: usize) -> Self {
        CALGroup { torus_rank: rank, finite: FiniteAbelianGroup::trivial() }
    }

    pub fn finite(group: FiniteAbelianGroup) -> Self {
        CALGroup { torus_rank: 0, finite: group }
    }

    /// Total coordinate count (torus then finite).
    pub fn dim(&self) -> usize {
        self.torus_rank + self.finite.len()
    }

    pub fn point(&self, torus: Vec<Rat>, finite: Vec<i64>) -> CALPoint {
        assert_eq!(torus.len(), self.torus_rank, "torus coordinate count");
        let torus = torus.into_iter().map(|t| frac(&t)).collect();
        CALPoint { torus, finite: self.finite.reduce(&finite) }
    }

    pub fn zero(&self) -> CALPoint {
        CALPoint { torus: vec![Rat::zero(); self.torus_rank], finite: self.finite.zero() }
    }

    pub fn add(&self, a: &CALPoint, b: &CALPoint) -> CALPoint {
        let torus = a.torus.iter().zip(&b.torus).map(|(x, y)| frac(&(x + y))).collect();
        CALPoint { torus, finite: self.finite.add(&a.finite, &b.finite) }
    }

    pub fn neg(&self, a: &CALPoint) -> CALPoint {
        let torus = a.torus.iter().map(|x| frac(&-x)).collect();
        CALPoint { torus, finite: self.finite.neg(&a.finite) }
    }

    pub fn sub(&self, a: &CALPoint, b: &CALPoint) -> CALPoint {
        self.add(a, &self.neg(b))
    }

    pub fn int_mul(&self, n: &Int, a: &CALPoint) -> CALPoint {
        let nr = Rat::from_integer(n.clone());
        let torus = a.torus.iter().map(|x| frac(&(x * &nr))).collect();
        let finite = {
            let coords: Vec<i64> = a
                .finite
                .coords
                .iter()
                .zip(self.finite.moduli())
                .map(|(&c, &d)| {
                    let m = (n % Int::from(d)).to_i64().unwrap_or(0);
                    (m as i128 * c as i128).rem_euclid(d as i128) as i64
                })
                .collect();
            GroupElement { coords }
        };
        CALPoint { torus, finite }
    }

    pub fn is_zero(&self, a: &CALPoint) -> bool {
        a.torus.iter().all(|t| t.is_zero()) && a.finite.coords.iter().all(|&c| c == 0)
    }

    /// Order of a rational point: lcm of torus denominators and finite orders.
    pub fn point_order(&self, a: &CALPoint) -> Int {
        let mut ord = Int::one();
        for t in &a.torus {
            ord = ord.lcm(t.denom());
        }
        ord.lcm(&Int::from(self.finite.element_order(&a.finite)))
    }
}

/// Fractional part in [0, 1).
pub fn frac(t: &Rat) -> Rat {
    t - t.floor()
}

/// A continuous homomorphism of compact abelian Lie groups, presented by a
/// rational matrix on (torus ⊕ finite) coordinates with integer action on the
/// coordinate lattices.
#[derive(Debug, Clone)]
pub struct CALHom {
    pub source: CALGroup,
    pub target: CALGroup,
    pub matrix: RatMat, // target.dim() × source.dim()
}

impl CALHom {
    pub fn new(source: CALGroup, target: CALGroup, matrix: RatMat) -> Result<Self> {
        if matrix.rows != target.dim() || matrix.cols != source.dim() {
            return Err(Error::DimMismatch(format!(
                "CAL hom matrix must be {}x{}",
                target.dim(),
                source.dim()
            )));
        }
        let a = target.torus_rank;
        for j in 0..source.torus_rank {
            for i in 0..a {
                if !matrix[(i, j)].is_integer() {
                    return Err(Error::Parse("torus-to-torus block must be integer".into()));
                }
            }
            for i in a..target.dim() {
                if !matrix[(i, j)].is_zero() {
                    return Err(Error::Parse("a torus cannot map onto finite coordinates".into()));
                }
            }
        }
        for (jf, &dprime) in source.finite.moduli().iter().enumerate() {
            let j = source.torus_rank + jf;
            for i in 0..target.dim() {
                let v = &matrix[(i, j)] * Rat::from_integer(Int::from(dprime));
                if !v.is_integer() {
                    return Err(Error::Parse("finite column does not respect the source relation".into()));
                }
                if i >= a {
                    if !matrix[(i, j)].is_integer() {
                        return Err(Error::Parse("finite-to-finite block must be integer".into()));
                    }
                    let dt = target.finite.moduli()[i - a];
                    if !(v.to_integer() % Int::from(dt)).is_zero() {
                        return Err(Error::Parse("finite column does not vanish in the target".into()));
                    }
                }
            }
        }
        Ok(CALHom { source, target, matrix })
    }

    pub fn apply(&self, p: &CALPoint) -> CALPoint {
        let coords: Vec<Rat> = p
            .torus
            .iter()
            .cloned()
            .chain(p.finite.coords.iter().map(|&c| Rat::from_integer(Int::from(c))))
            .collect();
        let image = self.matrix.mul_vec(&coords);
        let torus = image[..self.target.torus_rank].to_vec();
        let finite: Vec<i64> = image[self.target.torus_rank..]
            .iter()
            .map(|v| v.to_integer().to_i64().expect("finite coordinate fits i64"))
            .collect();
        self.target.point(torus, finite)
    }

    /// Surjectivity: the torus-torus block has full rank over Q, and the
    /// finite-finite block is onto modulo the target relations.
    pub fn is_surjective(&self) -> bool {
        let a = self.target.torus_rank;
        let ap = self.source.torus_rank;
        let tt = {
            let mut m = RatMat::zero(a, ap);
            for i in 0..a {
                for j in 0..ap {
                    m[(i, j)] = self.matrix[(i, j)].clone();
                }
            }
            m
        };
        if linalg::rank(&tt) != a {
            return false;
        }
        let r = self.target.finite.len();
        if r == 0 {
            return true;
        }
        let rp = self.source.finite.len();
        let mut rows = Vec::with_capacity(r);
        for i in 0..r {
            let mut row: Vec<Int> = (0..rp)
                .map(|j| self.matrix[(a + i, ap + j)].to_integer())
                .collect();
            for jj in 0..r {
                row.push(if i == jj { Int::from(self.target.finite.moduli()[jj]) } else { Int::zero() });
            }
            rows.push(row);
        }
        let m = IntMat::from_rows(rows).expect("rectangular");
        linalg::smith_normal_form(&m).diag().iter().all(|d| d.is_one())
    }

    /// Finds a preimage of `alpha` with minimal torus denominator among
    /// multiples of ord(alpha), by integer solvability at each candidate
    /// modulus. Errors if no preimage is found within `cap` multiples.
    pub fn preimage_with_order(&self, alpha: &CALPoint, cap: u64) -> Result<CALPoint> {
        if !self.is_surjective() {
            return Err(Error::NonSurjective);
        }
        let q = self.target.point_order(alpha);
        let a = self.target.torus_rank;
        let r = self.target.finite.len();
        let ap = self.source.torus_rank;
        let rp = self.source.finite.len();

        for m in 1..=cap {
            let l = &q * Int::from(m);
            // Unknowns: v (ap, torus numerators), u (rp, finite coords),
            // z (a), w (r) integer slack. Rows: torus rows, then finite rows.
            let cols = ap + rp + a + r;
            let mut rows: Vec<Vec<Rat>> = Vec::new();
            let mut rhs: Vec<Rat> = Vec::new();
            let lr = Rat::from_integer(l.clone());
            for i in 0..a {
                let mut row = vec![Rat::zero(); cols];
                for (j, slot) in row.iter_mut().enumerate().take(ap) {
                    *slot = self.matrix[(i, j)].clone();
                }
                for j in 0..rp {
                    row[ap + j] = &self.matrix[(i, ap + j)] * &lr;
                }
                row[ap + rp + i] = -lr.clone();
                rows.push(row);
                rhs.push(&alpha.torus[i] * &lr);
            }
            for i in 0..r {
                let mut row = vec![Rat::zero(); cols];
                for j in 0..rp {
                    row[ap + j] = self.matrix[(a + i, ap + j)].clone();
                }
                row[ap + rp + a + i] = Rat::from_integer(Int::from(self.target.finite.moduli()[i]));
                rows.push(row);
                rhs.push(Rat::from_integer(Int::from(alpha.finite.coords[i])));
            }
            // Clear denominators row by row and solve over Z.
            let mut int_rows = Vec::with_capacity(rows.len());
            let mut int_rhs = Vec::with_capacity(rows.len());
            for (row, b) in rows.iter().zip(&rhs) {
                let mut den = b.denom().clone();
                for v in row {
                    den = den.lcm(v.denom());
                }
                let dr = Rat::from_integer(den);
                int_rows.push(row.iter().map(|v| (v * &dr).to_integer()).collect::<Vec<Int>>());
                int_rhs.push((b * &dr).to_integer());
            }
            let mat = IntMat::from_rows(int_rows).expect("rectangular");
            if let Some(x) = linalg::solve_integer(&mat, &int_rhs) {
                let torus: Vec<Rat> = (0..ap).map(|j| Rat::new(x[j].clone(), l.clone())).collect();
                let finite: Vec<i64> = (0..rp)
                    .map(|j| {
                        let d = self.source.finite.moduli()[j];
                        x[ap + j].mod_floor(&Int::from(d)).to_i64().unwrap()
                    })
                    .collect();
                let beta = self.source.point(torus, finite);
                debug_assert_eq!(self.apply(&beta), *alpha);
                return Ok(beta);
            }
        }
        Err(Error::Internal(format!(
            "no preimage with torus denominator up to {}·{} found for a surjective hom",
            q, cap
        )))
    }
}

/// Normalized rational coordinate of a BigRational suitable for display.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.numer().to_f64().unwrap_or(0.0) / r.denom().to_f64().unwrap_or(1.0)
}

pub fn big_lcm(a: &Int, b: &Int) -> Int {
    a.lcm(b)
}
