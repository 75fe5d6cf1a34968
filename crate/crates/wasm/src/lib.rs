//! Browser bindings for three interactive experiments: Gowers norms of
//! polynomial phases, projected nilsequence tables, and the Heisenberg
//! exact-period lift grid.

use std::collections::BTreeMap;

use wasm_bindgen::prelude::*;

use nilkit::abelian::{e, gowers_norm, AbelianHom, ComplexTable, FiniteAbelianGroup};
use nilkit::filtered::FilteredLattice;
use nilkit::lift::{heisenberg_orbit, minimal_period_lift_search};
use nilkit::linalg::Int;
use nilkit::matrix::{rat, UnipotentMatrix};
use nilkit::nilseq::{project, FrequencySpec};
use nilkit::polymap::{MultiIndex, PolyMap};

fn err_to_js(e: nilkit::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn phase(n: u32, c2: i32, c1: i32, c0: i32, denom: u32) -> Result<ComplexTable, JsValue> {
    if n == 0 || denom == 0 {
        return Err(JsValue::from_str("modulus and denominator must be positive"));
    }
    let group = FiniteAbelianGroup::new(vec![n as u64]).map_err(err_to_js)?;
    Ok(ComplexTable::from_fn(group, |x| {
        let v = x.coords[0];
        e(&rat(
            i64::from(c2) * v * v + i64::from(c1) * v + i64::from(c0),
            i64::from(denom),
        ))
    }))
}

/// f(x) = e((c2 x² + c1 x + c0)/denom) on Z/n as interleaved (re, im) pairs.
#[wasm_bindgen]
pub fn phase_table(n: u32, c2: i32, c1: i32, c0: i32, denom: u32) -> Result<Vec<f64>, JsValue> {
    let table = phase(n, c2, c1, c0, denom)?;
    let mut out = Vec::with_capacity(table.values.len() * 2);
    for v in &table.values {
        out.push(v.re);
        out.push(v.im);
    }
    Ok(out)
}

/// The U^s norm of the same phase family.
#[wasm_bindgen]
pub fn phase_gowers(n: u32, c2: i32, c1: i32, c0: i32, denom: u32, s: u32) -> Result<f64, JsValue> {
    let table = phase(n, c2, c1, c0, denom)?;
    gowers_norm(&table, s).map_err(err_to_js)
}

/// The projected nilsequence of the quadratic family: τ: Z/(n·mult) → Z/n,
/// g(y) = freq·y²/(n·mult) in a degree-2 torus, F = e(·). Returns the table
/// on Z/n as interleaved (re, im) pairs.
#[wasm_bindgen]
pub fn project_quadratic(n: u32, mult: u32, freq: i32) -> Result<Vec<f64>, JsValue> {
    if n == 0 || mult == 0 {
        return Err(JsValue::from_str("group sizes must be positive"));
    }
    let np = u64::from(n) * u64::from(mult);
    if np > 4096 {
        return Err(JsValue::from_str("covering group capped at order 4096"));
    }
    let fl = FilteredLattice::abelian_torus(2);
    let source = FiniteAbelianGroup::new(vec![np]).map_err(err_to_js)?;
    let target = FiniteAbelianGroup::new(vec![n as u64]).map_err(err_to_js)?;
    let tau = AbelianHom::new(source, target, vec![vec![1]]).map_err(err_to_js)?;
    // y²/np = binom(y,1)/np + 2·binom(y,2)/np.
    let mut coeffs = BTreeMap::new();
    coeffs.insert(
        MultiIndex(vec![1]),
        UnipotentMatrix::elementary(2, 0, 1, rat(1, np as i64)),
    );
    coeffs.insert(
        MultiIndex(vec![2]),
        UnipotentMatrix::elementary(2, 0, 1, rat(2, np as i64)),
    );
    let g = PolyMap::new(1, fl.clone(), coeffs).map_err(err_to_js)?;
    let spec = FrequencySpec::new(&fl, vec![i64::from(freq)]).map_err(err_to_js)?;
    let phi = project(&tau, &g, &spec, 0).map_err(err_to_js)?;
    let mut out = Vec::with_capacity(phi.table.values.len() * 2);
    for v in &phi.table.values {
        out.push(v.re);
        out.push(v.im);
    }
    Ok(out)
}

/// Exact-period lift existence for the Heisenberg orbit family: row-major
/// grid over N, M ∈ [2, max], 1 where an (N,M)-periodic lift exists (exactly
/// the coprime pairs).
#[wasm_bindgen]
pub fn heisenberg_lift_grid(max: u32) -> Result<Vec<u8>, JsValue> {
    if !(2..=12).contains(&max) {
        return Err(JsValue::from_str("max must be between 2 and 12"));
    }
    let fl = FilteredLattice::heisenberg();
    let mut out = Vec::new();
    for n in 2..=max as u64 {
        for m in 2..=max as u64 {
            let (_, f) = heisenberg_orbit(n, m).map_err(err_to_js)?;
            let found = minimal_period_lift_search(&fl, &f, &[Int::from(n), Int::from(m)])
                .map_err(err_to_js)?;
            out.push(u8::from(found.is_some()));
        }
    }
    Ok(out)
}
