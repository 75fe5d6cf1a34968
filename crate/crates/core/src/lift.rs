//! The periodic lifting pipeline: central rational corrections, abelian
//! lifting through a surjective homomorphism, last-level lifting to a full
//! nilmanifold, the recursive lift through a filtered fibration, and the
//! exact-period search used by the Heisenberg experiment.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::abelian::{CALGroup, CALHom, CALPoint};
use crate::error::{Error, Result};
use crate::linalg::{self, Int, IntMat, Rat, RatMat};
use crate::matrix::{binom_int, factorial, StrictUpperMatrix, UnipotentMatrix};
use crate::polymap::{explicit_period_bound, multi_indices, AbelianPolyMap, MultiIndex, PolyMap};
use crate::filtered::FilteredLattice;

/// A filtered surjective homomorphism Ψ: G_Y → G_X presented as a linear map
/// on strictly-upper coordinates (active positions of X × active positions
/// of Y, row-major position order).
#[derive(Debug, Clone)]
pub struct FibrationDatum {
    y: FilteredLattice,
    x: FilteredLattice,
    matrix: RatMat,
}

/// Outcome record of a lift: the verified output period, the rationality
/// order actually used, and the per-coefficient central corrections.
#[derive(Debug, Clone)]
pub struct LiftReport {
    pub input_period: Int,
    pub output_period: Int,
    pub q: Int,
    /// Exponent of the component group of the top-band torus; always 1 for
    /// band lattices.
    pub q_prime: u64,
    pub corrections: Vec<(MultiIndex, UnipotentMatrix)>,
}

impl FibrationDatum {
    pub fn new(y: FilteredLattice, x: FilteredLattice, matrix: RatMat) -> Result<Self> {
        let ypos = y.positions();
        let xpos = x.positions();
        if matrix.rows != xpos.len() || matrix.cols != ypos.len() {
            return Err(Error::DimMismatch(format!(
                "fibration matrix must be {}x{}",
                xpos.len(),
                ypos.len()
            )));
        }
        if x.degree() > y.degree() {
            return Err(Error::PreconditionFailed("fibration cannot raise the degree".into()));
        }
        let datum = FibrationDatum { y, x, matrix };

        // Band compatibility and lattice action of the basis images.
        for (col, &(i, j)) in ypos.iter().enumerate() {
            for (row, &(a, b)) in xpos.iter().enumerate() {
                let v = &datum.matrix[(row, col)];
                if !v.is_zero() && datum.x.level_at(a, b) < datum.y.level_at(i, j) {
                    return Err(Error::FiltrationViolation(a, b));
                }
                let scaled = v * Rat::new(Int::from(datum.x.denom_at(a, b)), Int::from(datum.y.denom_at(i, j)));
                if !scaled.is_integer() {
                    return Err(Error::PreconditionFailed(format!(
                        "lattice image at ({a},{b}) of position ({i},{j}) is not integral"
                    )));
                }
            }
        }

        // Homomorphism: the linear map must be multiplicative on the strict
        // upper algebra, checked on all pairs of basis positions.
        for (ca, &(i, j)) in ypos.iter().enumerate() {
            for (cb, &(a, b)) in ypos.iter().enumerate() {
                let lhs = datum.reduce_strict_x(datum.column_strict(ca).mat_mul(&datum.column_strict(cb)));
                let rhs = if j == a && datum.y.is_active(i, b) {
                    let col = ypos.iter().position(|&p| p == (i, b)).expect("active position indexed");
                    datum.column_strict(col)
                } else {
                    StrictUpperMatrix::zero(datum.x.dim())
                };
                if lhs != rhs {
                    return Err(Error::PreconditionFailed(format!(
                        "coordinate map is not multiplicative on positions ({i},{j})·({a},{b})"
                    )));
                }
            }
        }

        // Level surjectivity: Ψ(G_{Y,m}) = G_{X,m} for every m.
        for m in 1..=datum.x.degree() {
            let cols: Vec<usize> = ypos
                .iter()
                .enumerate()
                .filter(|(_, &(i, j))| datum.y.level_at(i, j) >= m)
                .map(|(c, _)| c)
                .collect();
            let want: usize = xpos.iter().filter(|&&(a, b)| datum.x.level_at(a, b) >= m).count();
            let mut sub = RatMat::zero(xpos.len(), cols.len());
            for (cc, &c) in cols.iter().enumerate() {
                for r in 0..xpos.len() {
                    sub[(r, cc)] = datum.matrix[(r, c)].clone();
                }
            }
            if linalg::rank(&sub) != want {
                return Err(Error::NonSurjective);
            }
        }
        Ok(datum)
    }

    pub fn identity(fl: &FilteredLattice) -> Self {
        let n = fl.positions().len();
        FibrationDatum { y: fl.clone(), x: fl.clone(), matrix: RatMat::identity(n) }
    }

    /// The quotient fibration Y → Y/G_k.
    pub fn quotient_top(fl: &FilteredLattice) -> Self {
        let x = fl.quotient_drop_top();
        let ypos = fl.positions();
        let xpos = x.positions();
        let mut matrix = RatMat::zero(xpos.len(), ypos.len());
        for (r, &p) in xpos.iter().enumerate() {
            let c = ypos.iter().position(|&q| q == p).expect("quotient position");
            matrix[(r, c)] = Rat::one();
        }
        FibrationDatum { y: fl.clone(), x, matrix }
    }

    pub fn source(&self) -> &FilteredLattice {
        &self.y
    }

    pub fn target(&self) -> &FilteredLattice {
        &self.x
    }

    pub fn matrix(&self) -> &RatMat {
        &self.matrix
    }

    pub fn is_identity(&self) -> bool {
        self.y == self.x && self.matrix == RatMat::identity(self.y.positions().len())
    }

    fn column_strict(&self, col: usize) -> StrictUpperMatrix {
        let mut s = StrictUpperMatrix::zero(self.x.dim());
        for (row, &(a, b)) in self.x.positions().iter().enumerate() {
            s.set(a, b, self.matrix[(row, col)].clone());
        }
        s
    }

    fn reduce_strict_x(&self, mut s: StrictUpperMatrix) -> StrictUpperMatrix {
        for i in 0..self.x.dim() {
            for j in i + 1..self.x.dim() {
                if !self.x.is_active(i, j) {
                    s.set(i, j, Rat::zero());
                }
            }
        }
        s
    }

    /// Ψ(g), exact.
    pub fn apply(&self, g: &UnipotentMatrix) -> Result<UnipotentMatrix> {
        self.y.check_dim(g)?;
        let ypos = self.y.positions();
        let coords: Vec<Rat> = ypos.iter().map(|&(i, j)| g.get(i, j).clone()).collect();
        let image = self.matrix.mul_vec(&coords);
        let mut out = UnipotentMatrix::identity(self.x.dim());
        for (row, &(a, b)) in self.x.positions().iter().enumerate() {
            out.set(a, b, image[row].clone());
        }
        Ok(out)
    }

    pub fn apply_polymap(&self, f: &PolyMap) -> Result<PolyMap> {
        let mut coeffs = BTreeMap::new();
        for (t, a) in f.coeffs() {
            coeffs.insert(t.clone(), self.apply(a)?);
        }
        PolyMap::with_relax(f.arity(), self.x.clone(), coeffs, f.relax())
    }

    /// The induced fibration Y/G_{Y,k} → X/(level-k part of X), where k is
    /// the degree of Y.
    pub fn induced_quotient(&self) -> Result<FibrationDatum> {
        let k = self.y.degree();
        let yq = self.y.quotient_drop_top();
        let xq = if self.x.level_positions(k).is_empty() {
            self.x.with_degree(k - 1)?
        } else {
            self.x.quotient_drop_top()
        };
        let ypos = self.y.positions();
        let xpos = self.x.positions();
        let yqpos = yq.positions();
        let xqpos = xq.positions();
        let mut matrix = RatMat::zero(xqpos.len(), yqpos.len());
        for (r, &xp) in xqpos.iter().enumerate() {
            let orow = xpos.iter().position(|&p| p == xp).expect("quotient row");
            for (c, &yp) in yqpos.iter().enumerate() {
                let ocol = ypos.iter().position(|&p| p == yp).expect("quotient col");
                matrix[(r, c)] = self.matrix[(orow, ocol)].clone();
            }
        }
        FibrationDatum::new(yq, xq, matrix)
    }

    /// The induced homomorphism between the top-band tori (normalized torus
    /// coordinates u_p = s_p·entry_p); integer entries by the lattice
    /// condition.
    pub fn top_structure_hom(&self) -> Result<CALHom> {
        let k = self.y.degree();
        let ytop = self.y.level_positions(k);
        let xtop = self.x.level_positions(k);
        let ypos = self.y.positions();
        let xpos = self.x.positions();
        let mut matrix = RatMat::zero(xtop.len(), ytop.len());
        for (r, &xq) in xtop.iter().enumerate() {
            let orow = xpos.iter().position(|&p| p == xq).expect("top row");
            for (c, &yp) in ytop.iter().enumerate() {
                let ocol = ypos.iter().position(|&p| p == yp).expect("top col");
                matrix[(r, c)] = &self.matrix[(orow, ocol)]
                    * Rat::new(
                        Int::from(self.x.denom_at(xq.0, xq.1)),
                        Int::from(self.y.denom_at(yp.0, yp.1)),
                    );
            }
        }
        CALHom::new(CALGroup::torus(ytop.len()), CALGroup::torus(xtop.len()), matrix)
    }
}

/// Re-exported spec entry point: r ∈ G_k with (g·r)^q ∈ Γ, assuming
/// (g mod G_k)^q ∈ Γ·G_k.
pub fn central_rational_correction(
    fl: &FilteredLattice,
    g: &UnipotentMatrix,
    q: &Int,
) -> Result<UnipotentMatrix> {
    fl.central_correction(g, q)
}

/// Result of lifting an abelian polynomial through a CAL-group surjection.
#[derive(Debug, Clone)]
pub struct AbelianLift {
    pub map: AbelianPolyMap,
    /// lcm of the lifted nonconstant coefficient orders.
    pub order: Int,
    /// Verified period of the lift: order·k!.
    pub period: Int,
}

/// Lifts an M-periodic abelian polynomial m through η so that η∘m' = m,
/// with every nonconstant coefficient lifted to a preimage of controlled
/// order. The output period order·k! is verified exactly.
pub fn lift_abelian_poly(m: &AbelianPolyMap, eta: &CALHom, period: &Int) -> Result<AbelianLift> {
    if eta.target != *m.group() {
        return Err(Error::GroupMismatch("lift target group differs from the map's group".into()));
    }
    if !eta.is_surjective() {
        return Err(Error::NonSurjective);
    }
    if !m.is_periodic_uniform(period)? {
        return Err(Error::PreconditionFailed(format!("abelian map is not {period}-periodic")));
    }
    // Rationalize: confirms every nonconstant coefficient order divides a
    // power-style bound of the period (exact orders come with the points).
    let _q = m.rationalize_periodic(period)?;

    let cap = preimage_search_cap(eta);
    let mut coeffs: BTreeMap<MultiIndex, CALPoint> = BTreeMap::new();
    let mut order = Int::one();
    for (t, a) in m.coeffs() {
        let b = eta.preimage_with_order(a, cap)?;
        if !t.is_zero() {
            order = order.lcm(&eta.source.point_order(&b));
        }
        coeffs.insert(t.clone(), b);
    }
    let lifted = AbelianPolyMap::new(m.arity(), m.degree(), eta.source.clone(), coeffs)?;
    // η∘m' = m coefficientwise (hence pointwise).
    for (t, b) in lifted.coeffs() {
        if eta.apply(b) != m.coeff(t) {
            return Err(Error::Internal("lifted coefficient does not project back".into()));
        }
    }
    let out_period = &order * factorial(m.degree().max(1));
    if !lifted.is_periodic_uniform(&out_period)? {
        return Err(Error::Internal("abelian lift lost its period bound".into()));
    }
    Ok(AbelianLift { map: lifted, order, period: out_period })
}

fn preimage_search_cap(eta: &CALHom) -> u64 {
    use num_traits::ToPrimitive;
    let mut cap: u64 = 16;
    cap = cap.max(4 * eta.source.finite.exponent());
    let mut den: u64 = 1;
    for v in &eta.matrix.data {
        den = den.lcm(&v.denom().to_u64().unwrap_or(1).max(1));
    }
    cap.saturating_mul(den).max(64)
}

/// Lifts an M-periodic polynomial map into Y/G_k to one into Y: rationalize
/// in the quotient, apply a central correction per coefficient, reassemble.
/// Both π_{k-1}∘f̃ = f (coefficientwise, exact) and the output period are
/// verified.
pub fn lift_last_level(
    fl_y: &FilteredLattice,
    f: &PolyMap,
    period: &Int,
) -> Result<(PolyMap, LiftReport)> {
    let quotient = fl_y.quotient_drop_top();
    if *f.lattice() != quotient {
        return Err(Error::PreconditionFailed(
            "map must live on the quotient of Y by its top band".into(),
        ));
    }
    if !f.is_periodic_uniform(period)? {
        return Err(Error::PreconditionFailed(format!("quotient map is not {period}-periodic")));
    }
    let q = f.rationalize(period)?.q;
    let k = fl_y.degree();
    let mut coeffs: BTreeMap<MultiIndex, UnipotentMatrix> = BTreeMap::new();
    let mut corrections = Vec::new();
    for (t, a) in f.coeffs() {
        if t.is_zero() {
            // Constant coefficient: lift to the zero-top-band representative.
            coeffs.insert(t.clone(), a.clone());
            continue;
        }
        let r = fl_y.central_correction(a, &q)?;
        if !fl_y.in_lattice(&fl_y.int_pow(&fl_y.mul(a, &r), &q)) {
            return Err(Error::Internal("central correction failed to rationalize".into()));
        }
        coeffs.insert(t.clone(), fl_y.mul(a, &r));
        corrections.push((t.clone(), r));
    }
    let lifted = PolyMap::new(f.arity(), fl_y.clone(), coeffs)?;
    if lifted.truncate() != *f {
        return Err(Error::Internal("truncation of the lift differs from the input".into()));
    }
    let out_period = explicit_period_bound(&q, k);
    if !lifted.is_periodic_uniform(&out_period)? {
        return Err(Error::Internal("lift lost its period bound".into()));
    }
    Ok((
        lifted,
        LiftReport {
            input_period: period.clone(),
            output_period: out_period,
            q,
            q_prime: 1,
            corrections,
        },
    ))
}

/// Lifts an M-periodic polynomial map f into X through the fibration Ψ,
/// returning f' into Y with Ψ∘f' = f (exact in X/Γ_X, certified through the
/// Taylor coefficients of x ↦ Ψ(f'(x))⁻¹f(x)) and a verified period.
pub fn lift_through_fibration(
    phi: &FibrationDatum,
    f: &PolyMap,
    period: &Int,
) -> Result<(PolyMap, LiftReport)> {
    if *f.lattice() != *phi.target() {
        return Err(Error::PreconditionFailed("map does not live on the fibration target".into()));
    }
    if !f.is_periodic_uniform(period)? {
        return Err(Error::PreconditionFailed(format!("map is not {period}-periodic")));
    }
    if phi.is_identity() {
        return Ok((
            f.clone(),
            LiftReport {
                input_period: period.clone(),
                output_period: period.clone(),
                q: Int::one(),
                q_prime: 1,
                corrections: vec![],
            },
        ));
    }
    if phi.source().is_trivial() {
        let lifted = PolyMap::new(f.arity(), phi.source().clone(), BTreeMap::new())?;
        return Ok((
            lifted,
            LiftReport {
                input_period: period.clone(),
                output_period: Int::one(),
                q: Int::one(),
                q_prime: 1,
                corrections: vec![],
            },
        ));
    }

    let k = phi.source().degree();
    let x_has_top = !phi.target().level_positions(k).is_empty();

    // Recursive lift of the (k-1)-truncation.
    let phi_q = phi.induced_quotient()?;
    let f_q = if x_has_top {
        f.truncate()
    } else {
        let coeffs = f.coeffs().clone();
        PolyMap::with_relax(f.arity(), phi_q.target().clone(), coeffs, f.relax())?
    };
    let (f_tilde_km1, rep1) = lift_through_fibration(&phi_q, &f_q, period)?;

    // Extend through the last level of Y.
    let (f_tilde, rep2) = lift_last_level(phi.source(), &f_tilde_km1, &rep1.output_period)?;
    let mut q_final = rep2.q.clone();
    let mut corrections = rep2.corrections.clone();

    // Central discrepancy in the top structure group of X.
    let lifted = if x_has_top {
        let torus_x = CALGroup::torus(phi.target().level_positions(k).len());
        let xtop = phi.target().level_positions(k);
        let ftl = f_tilde.clone();
        let phic = phi.clone();
        let fc = f.clone();
        let xl = phi.target().clone();
        let discrepancy = AbelianPolyMap::interpolate(
            &torus_x,
            f.arity(),
            k,
            &mut |pt: &[i64]| {
                let y = ftl.eval_i64(pt)?;
                let d = xl.mul(&xl.inv(&phic.apply(&y)?), &fc.eval_i64(pt)?);
                // Split d = γ·h with h central; γ must be in Γ_X.
                let mut gamma = d.clone();
                for &(a, b) in &xtop {
                    gamma.set(a, b, Rat::zero());
                }
                if !xl.in_lattice(&gamma) {
                    return Err(Error::DiscrepancyNotAbelian(
                        "truncated discrepancy leaves the quotient lattice".into(),
                    ));
                }
                let h = xl.mul(&xl.inv(&gamma), &d);
                let coords: Vec<Rat> = xtop
                    .iter()
                    .map(|&(a, b)| h.get(a, b) * Rat::from_integer(Int::from(xl.denom_at(a, b))))
                    .collect();
                Ok(torus_x.point(coords, vec![]))
            },
        )
        .map_err(|e| match e {
            Error::NotPolynomial { detail, .. } => Error::DiscrepancyNotAbelian(detail),
            other => other,
        })?;

        let m_period = period.lcm(&rep2.output_period);
        if !discrepancy.is_periodic_uniform(&m_period)? {
            return Err(Error::DiscrepancyNotAbelian("discrepancy is not periodic".into()));
        }
        let eta = phi.top_structure_hom()?;
        let abelian = lift_abelian_poly(&discrepancy, &eta, &m_period)?;
        q_final = q_final.lcm(&abelian.order);

        // f' = f̃ + m' with the correction embedded centrally in Y.
        let ytop = phi.source().level_positions(k);
        let mut coeffs = f_tilde.coeffs().clone();
        for (t, p) in abelian.map.coeffs() {
            let mut w = UnipotentMatrix::identity(phi.source().dim());
            for (c, &(a, b)) in ytop.iter().enumerate() {
                w.set(a, b, &p.torus[c] / Rat::from_integer(Int::from(phi.source().denom_at(a, b))));
            }
            let base = coeffs
                .remove(t)
                .unwrap_or_else(|| UnipotentMatrix::identity(phi.source().dim()));
            let combined = phi.source().mul(&base, &w);
            if !combined.is_identity() {
                coeffs.insert(t.clone(), combined);
            }
            corrections.push((t.clone(), w));
        }
        PolyMap::new(f.arity(), phi.source().clone(), coeffs)?
    } else {
        f_tilde
    };

    // Commuting certificate: all Taylor coefficients of
    // x ↦ Ψ(f'(x))⁻¹ f(x) lie in Γ_X, which certifies Ψ∘f' = f on all of
    // Z^n in X/Γ_X.
    let xl = phi.target().clone();
    let witness = PolyMap::interpolate(&xl, f.arity(), xl.degree(), &mut |pt: &[i64]| {
        Ok(xl.mul(&xl.inv(&phi.apply(&lifted.eval_i64(pt)?)?), &f.eval_i64(pt)?))
    })?;
    if !witness.coeffs().values().all(|a| xl.in_lattice(a)) {
        return Err(Error::DiscrepancyNotAbelian(
            "lift does not commute with the fibration modulo the lattice".into(),
        ));
    }

    let out_period = explicit_period_bound(&q_final, k);
    if !lifted.is_periodic_uniform(&out_period)? {
        return Err(Error::Internal("fibration lift lost its period bound".into()));
    }
    Ok((
        lifted,
        LiftReport {
            input_period: period.clone(),
            output_period: out_period,
            q: q_final,
            q_prime: 1,
            corrections,
        },
    ))
}

/// Decides whether f mod G_k admits a lift to Y with exactly the given
/// coordinate periods, by solving the affine congruence system on the
/// top-band corrections; returns a verified witness if one exists.
pub fn minimal_period_lift_search(
    fl_y: &FilteredLattice,
    f: &PolyMap,
    periods: &[Int],
) -> Result<Option<PolyMap>> {
    let quotient = fl_y.quotient_drop_top();
    if *f.lattice() != quotient {
        return Err(Error::PreconditionFailed(
            "map must live on the quotient of Y by its top band".into(),
        ));
    }
    if !f.is_periodic(periods)? {
        return Err(Error::PreconditionFailed("quotient map misses its coordinate periods".into()));
    }
    let arity = f.arity();
    let k = fl_y.degree();
    let top = fl_y.top_positions();
    let indices: Vec<MultiIndex> =
        multi_indices(arity, k).into_iter().filter(|t| !t.is_zero()).collect();
    let var_of = |u: &MultiIndex, p: usize| -> usize {
        indices.iter().position(|v| v == u).expect("index") * top.len() + p
    };
    let nvars = indices.len() * top.len();

    // Base lift with zero top band.
    let f0 = PolyMap::new(arity, fl_y.clone(), f.coeffs().clone())?;

    // Rows: for each direction i, coefficient index t, top position p:
    //   s_p·w_t[p] + Σ_{j≥1} binom(P_i, j)·s_p·r_{t+j·e_i, p} ∈ Z.
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    for (dir, p_i) in periods.iter().enumerate() {
        let mut shift = vec![Int::zero(); arity];
        shift[dir] = p_i.clone();
        let h0 = f0.difference_map(&shift)?;
        for t in multi_indices(arity, k) {
            let c = h0.coeff(&t);
            // Off-band coordinates are fixed by f alone and must already be
            // integral (guaranteed by the quotient periodicity).
            for &(a, b) in &fl_y.positions() {
                if fl_y.level_at(a, b) < k {
                    let scaled = c.get(a, b) * Rat::from_integer(Int::from(fl_y.denom_at(a, b)));
                    if !scaled.is_integer() {
                        return Err(Error::Internal("quotient periodicity lost in the base lift".into()));
                    }
                }
            }
            let mut any = false;
            let mut row = vec![Rat::zero(); nvars];
            for u in indices.iter() {
                // u = t + j·e_dir for some j ≥ 1?
                let mut diff_ok = u.0.len() == t.0.len();
                let mut step = 0usize;
                for (c_idx, (&uu, &tt)) in u.0.iter().zip(&t.0).enumerate() {
                    if c_idx == dir {
                        if uu <= tt {
                            diff_ok = false;
                        } else {
                            step = uu - tt;
                        }
                    } else if uu != tt {
                        diff_ok = false;
                    }
                }
                if !diff_ok || step == 0 {
                    continue;
                }
                let coef = binom_int(p_i, step);
                if coef.is_zero() {
                    continue;
                }
                any = true;
                for (pi, &(a, b)) in top.iter().enumerate() {
                    let sp = Rat::from_integer(Int::from(fl_y.denom_at(a, b)));
                    row[var_of(u, pi)] = Rat::from_integer(coef.clone()) * sp;
                }
            }
            for (pi, &(a, b)) in top.iter().enumerate() {
                let sp = Rat::from_integer(Int::from(fl_y.denom_at(a, b)));
                let w = c.get(a, b) * &sp;
                if any || !w.is_integer() {
                    // One congruence row per top position: only the p-th
                    // variable entries of this row are nonzero.
                    let mut prow = vec![Rat::zero(); nvars];
                    for u in indices.iter() {
                        let v = &row[var_of(u, pi)];
                        if !v.is_zero() {
                            prow[var_of(u, pi)] = v.clone();
                        }
                    }
                    rows.push(prow);
                    rhs.push(-w);
                }
            }
        }
    }

    if rows.is_empty() {
        let lifted = f0;
        if !lifted.is_periodic(periods)? {
            return Err(Error::Internal("period verification failed on the trivial system".into()));
        }
        return Ok(Some(lifted));
    }

    // Solve C r ≡ rhs (mod Z^rows) with r rational, i.e. C r = rhs + z for
    // some integer vector z. Since N·C = 0 for the left null space N, the
    // system is solvable iff N z = −N rhs has an integer solution.
    let c = RatMat::from_rows(rows.clone())?;
    let null = linalg::left_nullspace(&c);
    let z = if null.is_empty() {
        vec![Int::zero(); rows.len()]
    } else {
        let mut int_rows = Vec::new();
        let mut int_rhs = Vec::new();
        for n in &null {
            let target: Rat = -n.iter().zip(&rhs).map(|(a, b)| a * b).sum::<Rat>();
            let mut den = target.denom().clone();
            for v in n {
                den = den.lcm(v.denom());
            }
            let dr = Rat::from_integer(den);
            int_rows.push(n.iter().map(|v| (v * &dr).to_integer()).collect::<Vec<Int>>());
            int_rhs.push((&target * &dr).to_integer());
        }
        let mat = IntMat::from_rows(int_rows)?;
        match linalg::solve_integer(&mat, &int_rhs) {
            Some(z) => z,
            None => return Ok(None),
        }
    };
    let goal: Vec<Rat> = z.iter().zip(&rhs).map(|(zi, b)| b + Rat::from_integer(zi.clone())).collect();
    let Some(r) = linalg::solve_rational(&c, &goal) else {
        return Ok(None);
    };

    // Assemble the corrected lift and verify the exact periods.
    let mut coeffs = f0.coeffs().clone();
    for u in &indices {
        let mut w = UnipotentMatrix::identity(fl_y.dim());
        let mut nontrivial = false;
        for (pi, &(a, b)) in top.iter().enumerate() {
            let v = r[var_of(u, pi)].clone();
            if !v.is_zero() {
                nontrivial = true;
            }
            w.set(a, b, v);
        }
        if nontrivial {
            let base = coeffs
                .remove(u)
                .unwrap_or_else(|| UnipotentMatrix::identity(fl_y.dim()));
            coeffs.insert(u.clone(), fl_y.mul(&base, &w));
        }
    }
    let lifted = PolyMap::new(arity, fl_y.clone(), coeffs)?;
    if !lifted.is_periodic(periods)? {
        return Err(Error::Internal("congruence witness fails its period verification".into()));
    }
    if lifted.truncate() != *f {
        return Err(Error::Internal("correction left the fiber of the truncation".into()));
    }
    Ok(Some(lifted))
}

/// The Heisenberg orbit map of the coprimality experiment: the quotient
/// Z² → Heis/G_2 ≅ T² generated by I + (1/n)E12 and I + (1/m)E23.
pub fn heisenberg_orbit(n: u64, m: u64) -> Result<(FilteredLattice, PolyMap)> {
    if n == 0 || m == 0 {
        return Err(Error::PreconditionFailed("orbit periods must be positive".into()));
    }
    let fl = FilteredLattice::heisenberg();
    let q = fl.quotient_drop_top();
    let g1 = UnipotentMatrix::elementary(3, 0, 1, Rat::new(Int::one(), Int::from(n)));
    let g2 = UnipotentMatrix::elementary(3, 1, 2, Rat::new(Int::one(), Int::from(m)));
    let mut coeffs = BTreeMap::new();
    coeffs.insert(MultiIndex(vec![1, 0]), q.reduce(&g1));
    coeffs.insert(MultiIndex(vec![0, 1]), q.reduce(&g2));
    let f = PolyMap::new(2, q, coeffs)?;
    Ok((fl, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::FiniteAbelianGroup;
    use crate::matrix::{rat, rat_int};

    fn elem(dim: usize, i: usize, j: usize, c: Rat) -> UnipotentMatrix {
        UnipotentMatrix::elementary(dim, i, j, c)
    }

    #[test]
    fn abelian_lift_z4_to_z2() {
        let s = CALGroup::finite(FiniteAbelianGroup::new(vec![4]).unwrap());
        let t = CALGroup::finite(FiniteAbelianGroup::new(vec![2]).unwrap());
        let eta = CALHom::new(s, t.clone(), RatMat::from_rows(vec![vec![rat_int(1)]]).unwrap()).unwrap();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex(vec![1]), t.point(vec![], vec![1]));
        let m = AbelianPolyMap::new(1, 1, t, coeffs).unwrap();
        let lift = lift_abelian_poly(&m, &eta, &Int::from(2)).unwrap();
        for x in 0..12 {
            let up = lift.map.eval(&[Int::from(x)]).unwrap();
            assert_eq!(eta.apply(&up), m.eval(&[Int::from(x)]).unwrap());
        }
        assert!(lift.map.is_periodic_uniform(&lift.period).unwrap());
    }

    #[test]
    fn abelian_lift_torus_doubling() {
        let t = CALGroup::torus(1);
        let eta = CALHom::new(t.clone(), t.clone(), RatMat::from_rows(vec![vec![rat_int(2)]]).unwrap()).unwrap();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex(vec![1]), t.point(vec![rat(1, 3)], vec![]));
        let m = AbelianPolyMap::new(1, 1, t.clone(), coeffs).unwrap();
        let lift = lift_abelian_poly(&m, &eta, &Int::from(3)).unwrap();
        for x in 0..10 {
            assert_eq!(eta.apply(&lift.map.eval(&[Int::from(x)]).unwrap()), m.eval(&[Int::from(x)]).unwrap());
        }
        assert!(lift.map.is_periodic_uniform(&lift.period).unwrap());
        // Divides the x/6-witness period.
        assert!((Int::from(6) % &lift.period.gcd(&Int::from(6))).is_zero());
    }

    #[test]
    fn abelian_lift_zero_map() {
        let t = CALGroup::torus(1);
        let eta = CALHom::new(t.clone(), t.clone(), RatMat::from_rows(vec![vec![rat_int(2)]]).unwrap()).unwrap();
        let m = AbelianPolyMap::new(1, 2, t.clone(), BTreeMap::new()).unwrap();
        let lift = lift_abelian_poly(&m, &eta, &Int::from(5)).unwrap();
        assert!(lift.map.coeffs().is_empty() || lift.map.coeffs().values().all(|p| t.is_zero(p)));
    }

    #[test]
    fn last_level_lift_heisenberg_half_half() {
        let fl = FilteredLattice::heisenberg();
        let (y, f) = heisenberg_orbit(2, 2).unwrap();
        assert_eq!(y, fl);
        let (lifted, report) = lift_last_level(&fl, &f, &Int::from(2)).unwrap();
        assert_eq!(lifted.truncate(), f);
        assert_eq!(report.q, Int::from(2));
        assert_eq!(report.output_period, Int::from(2048));
        assert!(lifted.is_periodic_uniform(&Int::from(2048)).unwrap());
    }

    #[test]
    fn last_level_lift_trivial_corrections() {
        let fl = FilteredLattice::heisenberg();
        let q = fl.quotient_drop_top();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex(vec![1]), q.reduce(&elem(3, 0, 1, rat_int(3))));
        let f = PolyMap::new(1, q, coeffs).unwrap();
        let (lifted, report) = lift_last_level(&fl, &f, &Int::from(1)).unwrap();
        assert_eq!(report.q, Int::one());
        assert_eq!(report.output_period, Int::from(2));
        assert!(report.corrections.iter().all(|(_, r)| r.is_identity()));
        assert_eq!(lifted.truncate(), f);
    }

    #[test]
    fn fibration_identity_lift() {
        let fl = FilteredLattice::heisenberg();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex(vec![1]), elem(3, 0, 1, rat(1, 2)));
        let f = PolyMap::new(1, fl.clone(), coeffs).unwrap();
        let phi = FibrationDatum::identity(&fl);
        let (lifted, report) = lift_through_fibration(&phi, &f, &Int::from(2)).unwrap();
        assert_eq!(lifted, f);
        assert_eq!(report.output_period, Int::from(2));
    }

    #[test]
    fn fibration_lift_heisenberg_2_3() {
        let fl = FilteredLattice::heisenberg();
        let phi = FibrationDatum::quotient_top(&fl);
        let (_, f) = heisenberg_orbit(2, 3).unwrap();
        let (lifted, report) = lift_through_fibration(&phi, &f, &Int::from(6)).unwrap();
        // Ψ∘f' = f coefficientwise in the quotient.
        for (t, a) in f.coeffs() {
            let img = phi.apply(&lifted.coeff(t)).unwrap();
            let diff = phi.target().mul(&phi.target().inv(&img), a);
            assert!(phi.target().in_lattice(&diff));
        }
        assert!(lifted.is_periodic_uniform(&report.output_period).unwrap());
    }

    #[test]
    fn fibration_lift_4x4_quotient() {
        let fl = FilteredLattice::lower_central(4);
        let phi = FibrationDatum::quotient_top(&fl);
        let q = fl.quotient_drop_top();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex(vec![1]), q.reduce(&elem(4, 0, 1, rat(1, 2))));
        coeffs.insert(MultiIndex(vec![2]), q.reduce(&elem(4, 0, 2, rat(1, 3))));
        let f = PolyMap::new(1, q, coeffs).unwrap();
        let m = f.period_from_rational(&Int::from(6)).unwrap();
        let (lifted, report) = lift_through_fibration(&phi, &f, &m).unwrap();
        for (t, a) in f.coeffs() {
            let img = phi.apply(&lifted.coeff(t)).unwrap();
            let diff = phi.target().mul(&phi.target().inv(&img), a);
            assert!(phi.target().in_lattice(&diff));
        }
        assert!(lifted.is_periodic_uniform(&report.output_period).unwrap());
    }

    #[test]
    fn heisenberg_period_search_matches_gcd() {
        let fl = FilteredLattice::heisenberg();
        for (n, m) in [(2u64, 2u64), (2, 3), (3, 4), (2, 4), (3, 3), (5, 6)] {
            let (_, f) = heisenberg_orbit(n, m).unwrap();
            let found = minimal_period_lift_search(&fl, &f, &[Int::from(n), Int::from(m)]).unwrap();
            let coprime = num_integer::gcd(n, m) == 1;
            assert_eq!(found.is_some(), coprime, "N={n}, M={m}");
            if let Some(lift) = found {
                assert!(lift.is_periodic(&[Int::from(n), Int::from(m)]).unwrap());
                assert_eq!(lift.truncate(), f);
            }
        }
    }

    #[test]
    fn fibration_lift_through_scaling_automorphism() {
        // Ψ(a12, a23, a13) = (2a12, a23, 2a13) is a non-quotient fibration;
        // the lift halves the first band and controls the resulting orders.
        let fl = FilteredLattice::heisenberg();
        let n = fl.positions().len();
        let mut m = RatMat::identity(n);
        m[(0, 0)] = Rat::from_integer(Int::from(2));
        m[(1, 1)] = Rat::from_integer(Int::from(2));
        let phi = FibrationDatum::new(fl.clone(), fl.clone(), m).unwrap();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(
            MultiIndex(vec![1]),
            UnipotentMatrix::elementary(3, 0, 1, Rat::new(Int::one(), Int::from(2))),
        );
        coeffs.insert(
            MultiIndex(vec![2]),
            UnipotentMatrix::elementary(3, 0, 2, Rat::new(Int::one(), Int::from(3))),
        );
        let f = PolyMap::new(1, fl.clone(), coeffs).unwrap();
        let period = f.period_from_rational(&Int::from(6)).unwrap();
        let (lifted, report) = lift_through_fibration(&phi, &f, &period).unwrap();
        for (t, a) in f.coeffs() {
            let img = phi.apply(&lifted.coeff(t)).unwrap();
            let diff = fl.mul(&fl.inv(&img), a);
            assert!(fl.in_lattice(&diff), "coefficient {:?}", t.0);
        }
        assert!(lifted.is_periodic_uniform(&report.output_period).unwrap());
    }

    #[test]
    fn fibration_lift_rejects_wrong_period() {
        let fl = FilteredLattice::heisenberg();
        let phi = FibrationDatum::quotient_top(&fl);
        let (_, f) = heisenberg_orbit(2, 3).unwrap();
        // The orbit is (2,3)-periodic, hence 6-periodic but not 5-periodic.
        assert!(matches!(
            lift_through_fibration(&phi, &f, &Int::from(5)),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn fibration_rejects_non_homomorphism() {
        // Scaling only the (1,2) coordinate of the Heisenberg group is not
        // multiplicative.
        let fl = FilteredLattice::heisenberg();
        let n = fl.positions().len();
        let mut m = RatMat::identity(n);
        m[(0, 0)] = rat_int(2);
        assert!(FibrationDatum::new(fl.clone(), fl, m).is_err());
    }

    #[test]
    fn fibration_scaling_is_valid() {
        // (a12, a23, a13) -> (2a12, a23, 2a13) is a filtered automorphism.
        let fl = FilteredLattice::heisenberg();
        let n = fl.positions().len();
        let mut m = RatMat::identity(n);
        // positions order: (0,1), (0,2), (1,2)
        m[(0, 0)] = rat_int(2);
        m[(1, 1)] = rat_int(2);
        let phi = FibrationDatum::new(fl.clone(), fl, m).unwrap();
        let g = elem(3, 0, 1, rat(1, 2)).mul(&elem(3, 1, 2, rat(1, 3)));
        let h = elem(3, 0, 2, rat(1, 5)).mul(&elem(3, 1, 2, rat(2, 7)));
        assert_eq!(
            phi.apply(&g.mul(&h)).unwrap(),
            phi.apply(&g).unwrap().mul(&phi.apply(&h).unwrap())
        );
    }
}
