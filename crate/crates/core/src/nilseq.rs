//! Mal'cev fundamental-domain reduction, frequency test functions on the
//! nilmanifold, projected nilsequences, and the obstruction report pairing a
//! function with a projected nilsequence.

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abelian::{correlate, e, gowers_norm, AbelianHom, ComplexTable};
use crate::error::{Error, Result};
use crate::filtered::FilteredLattice;
use crate::linalg::{Int, Rat};
use crate::matrix::UnipotentMatrix;
use crate::polymap::PolyMap;

/// Fundamental-domain coordinates: x(i,j) ∈ [0, 1/s(i,j)) per active
/// position, stored in row-major position order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalcevCoords {
    pub positions: Vec<(usize, usize)>,
    pub values: Vec<Rat>,
}

/// Writes g = rep(coords)·γ with γ ∈ Γ, reducing band by band (superdiagonal
/// distance ascending, lex within a band) by right-multiplication with
/// integer elementary matrices. The representative is the canonical one, so
/// reduction is idempotent and constant on cosets gΓ.
pub fn malcev_reduce(fl: &FilteredLattice, g: &UnipotentMatrix) -> Result<(MalcevCoords, UnipotentMatrix)> {
    fl.check_dim(g)?;
    let mut rep = fl.reduce(g);
    let mut gamma_inv = UnipotentMatrix::identity(fl.dim());
    for (i, j) in fl.positions_by_distance() {
        let s = Rat::from_integer(Int::from(fl.denom_at(i, j)));
        let x = rep.get(i, j).clone();
        let n = (&x * &s).floor();
        if !n.is_zero() {
            let step = UnipotentMatrix::elementary(fl.dim(), i, j, -&n / &s);
            rep = fl.mul(&rep, &step);
            gamma_inv = fl.mul(&gamma_inv, &step);
        }
    }
    let positions = fl.positions();
    let values = positions.iter().map(|&(i, j)| rep.get(i, j).clone()).collect();
    let gamma = fl.inv(&gamma_inv);
    debug_assert_eq!(fl.mul(&rep, &gamma), fl.reduce(g));
    Ok((MalcevCoords { positions, values }, gamma))
}

/// How the Γ-invariance of a frequency function is certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvarianceMode {
    /// Support confined to the top band or to the abelianization positions:
    /// invariance holds algebraically.
    Exact,
    /// Checked on random lattice translates at tolerance 1e-9.
    Sampled,
}

/// A character in the Mal'cev coordinates: F(x) = e(Σ m(i,j)·s(i,j)·x(i,j)),
/// always of modulus one.
#[derive(Debug, Clone)]
pub struct FrequencySpec {
    freqs: Vec<i64>, // aligned with fl.positions()
    mode: InvarianceMode,
}

impl FrequencySpec {
    pub fn new(fl: &FilteredLattice, freqs: Vec<i64>) -> Result<Self> {
        let positions = fl.positions();
        if freqs.len() != positions.len() {
            return Err(Error::DimMismatch(format!(
                "need one frequency per active position ({})",
                positions.len()
            )));
        }
        let support: Vec<(usize, usize)> = positions
            .iter()
            .zip(&freqs)
            .filter(|(_, &m)| m != 0)
            .map(|(&p, _)| p)
            .collect();
        let top_only = support.iter().all(|&(i, j)| fl.level_at(i, j) == fl.degree());
        // Abelianization positions: no active chain i < l < j passes through.
        let abelian_only = support.iter().all(|&(i, j)| {
            !(i + 1..j).any(|l| fl.is_active(i, l) && fl.is_active(l, j))
        });
        let mode = if top_only || abelian_only { InvarianceMode::Exact } else { InvarianceMode::Sampled };
        Ok(FrequencySpec { freqs, mode })
    }

    pub fn freqs(&self) -> &[i64] {
        &self.freqs
    }

    pub fn mode(&self) -> InvarianceMode {
        self.mode
    }

    pub fn eval(&self, fl: &FilteredLattice, coords: &MalcevCoords) -> Complex64 {
        let mut phase = Rat::zero();
        for ((&(i, j), x), &m) in coords.positions.iter().zip(&coords.values).zip(&self.freqs) {
            if m != 0 {
                phase += x * Rat::from_integer(Int::from(m) * Int::from(fl.denom_at(i, j)));
            }
        }
        e(&phase)
    }

    pub fn eval_at(&self, fl: &FilteredLattice, g: &UnipotentMatrix) -> Result<Complex64> {
        let (coords, _) = malcev_reduce(fl, g)?;
        Ok(self.eval(fl, &coords))
    }

    /// Sampled Γ-invariance: compares F over random coset representatives.
    /// A deviation beyond the tolerance is a reduction defect and is
    /// reported as `NotInvariant`.
    pub fn check_invariance(&self, fl: &FilteredLattice, seed: u64, samples: usize) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let g = random_group_element(fl, &mut rng);
            let gamma = random_lattice_element(fl, &mut rng);
            let a = self.eval_at(fl, &g)?;
            let b = self.eval_at(fl, &fl.mul(&g, &gamma))?;
            worst = worst.max((a - b).norm());
        }
        if worst > 1e-9 {
            return Err(Error::NotInvariant(worst));
        }
        Ok(())
    }
}

pub fn random_group_element(fl: &FilteredLattice, rng: &mut ChaCha8Rng) -> UnipotentMatrix {
    let mut g = UnipotentMatrix::identity(fl.dim());
    for (i, j) in fl.positions() {
        let num = rng.gen_range(-6i64..=6);
        let den = rng.gen_range(1i64..=4);
        g.set(i, j, Rat::new(Int::from(num), Int::from(den)));
    }
    fl.reduce(&g)
}

pub fn random_lattice_element(fl: &FilteredLattice, rng: &mut ChaCha8Rng) -> UnipotentMatrix {
    let mut g = UnipotentMatrix::identity(fl.dim());
    for (i, j) in fl.positions() {
        let num = rng.gen_range(-4i64..=4);
        g.set(i, j, Rat::new(Int::from(num), Int::from(fl.denom_at(i, j))));
    }
    fl.reduce(&g)
}

/// A projected nilsequence: a surjective τ, a
/// verified coordinate-periodic polynomial map on the covering group, a
/// frequency function, and the evaluated table φ(x) = E_{y ∈ τ⁻¹(x)} F(g(y)).
#[derive(Debug, Clone)]
pub struct ProjectedNilsequence {
    pub tau: AbelianHom,
    pub gmap: PolyMap,
    pub freq: FrequencySpec,
    pub table: ComplexTable,
    /// Whether rk(Z') = rk(Z) (recorded, not required).
    pub rank_preserving: bool,
}

/// Builds the projected nilsequence table. Verifies surjectivity of τ, the
/// coordinate periods of g against the moduli of Z', and the Γ-invariance
/// mode of F.
pub fn project(tau: &AbelianHom, gmap: &PolyMap, freq: &FrequencySpec, seed: u64) -> Result<ProjectedNilsequence> {
    if !tau.is_surjective() {
        return Err(Error::NonSurjective);
    }
    if gmap.arity() != tau.source.len() {
        return Err(Error::ArityMismatch { expected: tau.source.len(), got: gmap.arity() });
    }
    let periods: Vec<Int> = tau.source.moduli().iter().map(|&d| Int::from(d)).collect();
    if !gmap.is_periodic(&periods)? {
        return Err(Error::PeriodMismatch(format!(
            "polynomial map is not periodic with the coordinate orders {:?}",
            tau.source.moduli()
        )));
    }
    if freq.mode() == InvarianceMode::Sampled {
        freq.check_invariance(gmap.lattice(), seed, 1000)?;
    }
    let fl = gmap.lattice().clone();
    let mut values = Vec::with_capacity(tau.target.order() as usize);
    for x in tau.target.elements() {
        let fiber = tau.fiber(&x)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for y in &fiber {
            let point: Vec<Int> = y.coords.iter().map(|&c| Int::from(c)).collect();
            let val = gmap.eval(&point)?;
            acc += freq.eval_at(&fl, &val)?;
        }
        values.push(acc / fiber.len() as f64);
    }
    let table = ComplexTable::new(tau.target.clone(), values)?;
    Ok(ProjectedNilsequence {
        tau: tau.clone(),
        gmap: gmap.clone(),
        freq: freq.clone(),
        table,
        rank_preserving: tau.source.rank() == tau.target.rank(),
    })
}

/// Quantitative summary of an obstruction pairing: the observed correlation,
/// the Gowers norm of f, and complexity descriptors of the nilsequence.
#[derive(Debug, Clone)]
pub struct ObstructionReport {
    pub delta: f64,
    pub gowers: f64,
    pub gowers_pullback: f64,
    pub k: u32,
    pub dim: usize,
    pub degree: usize,
    pub max_denom: Int,
    pub freq_l1: i64,
}

/// δ = |⟨f, φ⟩| and ‖f‖_{U^{k+1}}, together with the verification of the
/// pullback identity ‖f‖_{U^{k+1}(Z)} = ‖f∘τ‖_{U^{k+1}(Z')} to 1e-9.
pub fn obstruction_report(f: &ComplexTable, phi: &ProjectedNilsequence, k: u32) -> Result<ObstructionReport> {
    if f.group != phi.table.group {
        return Err(Error::GroupMismatch("function and nilsequence live on different groups".into()));
    }
    let delta = correlate(f, &phi.table)?.norm();
    let gowers = gowers_norm(f, k + 1)?;
    let pullback = f.pullback(&phi.tau)?;
    let gowers_pullback = gowers_norm(&pullback, k + 1)?;
    if (gowers - gowers_pullback).abs() > 1e-9 {
        return Err(Error::Internal(format!(
            "pullback norm identity violated: {gowers} vs {gowers_pullback}"
        )));
    }
    let max_denom = phi
        .gmap
        .coeffs()
        .values()
        .map(|a| a.max_denom())
        .max()
        .unwrap_or_else(Int::one);
    Ok(ObstructionReport {
        delta,
        gowers,
        gowers_pullback,
        k,
        dim: phi.gmap.lattice().dim(),
        degree: phi.gmap.lattice().degree(),
        max_denom,
        freq_l1: phi.freq.freqs().iter().map(|m| m.abs()).sum(),
    })
}
