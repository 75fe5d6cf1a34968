//! Host–Kra cubes on filtered groups: membership via greedy face
//! factorization, and corner completion for degree-k abelian targets.
//!
//! A cube configuration on {0,1}^n is accepted iff it factors as a product
//! of face configurations g^F with g in the filtration level matching the
//! face codimension. The greedy peel visits vertices in increasing Hamming
//! weight (lex ties) and corrects on the upper face {w ≥ v}; the correction
//! at v must lie in G_{|v|}.

use crate::abelian::{CALGroup, CALPoint};
use crate::error::{Error, Result};
use crate::filtered::FilteredLattice;
use crate::matrix::UnipotentMatrix;

/// Group operations plus level membership, as needed by the cube peel.
pub trait FilteredOps {
    type Elem: Clone + PartialEq;
    fn identity(&self) -> Self::Elem;
    fn compose(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn invert(&self, a: &Self::Elem) -> Self::Elem;
    /// Membership in G_m, with G_0 the whole group.
    fn in_filtration_level(&self, a: &Self::Elem, m: usize) -> bool;
}

impl FilteredOps for FilteredLattice {
    type Elem = UnipotentMatrix;
    fn identity(&self) -> UnipotentMatrix {
        UnipotentMatrix::identity(self.dim())
    }
    fn compose(&self, a: &UnipotentMatrix, b: &UnipotentMatrix) -> UnipotentMatrix {
        self.mul(a, b)
    }
    fn invert(&self, a: &UnipotentMatrix) -> UnipotentMatrix {
        self.inv(a)
    }
    fn in_filtration_level(&self, a: &UnipotentMatrix, m: usize) -> bool {
        m == 0 || self.in_level(a, m)
    }
}

/// The degree-k abelian filtration D_k(A): G_m = A for m ≤ k, trivial above.
#[derive(Debug, Clone)]
pub struct DegreeAbelian {
    pub group: CALGroup,
    pub degree: usize,
}

impl FilteredOps for DegreeAbelian {
    type Elem = CALPoint;
    fn identity(&self) -> CALPoint {
        self.group.zero()
    }
    fn compose(&self, a: &CALPoint, b: &CALPoint) -> CALPoint {
        self.group.add(a, b)
    }
    fn invert(&self, a: &CALPoint) -> CALPoint {
        self.group.neg(a)
    }
    fn in_filtration_level(&self, a: &CALPoint, m: usize) -> bool {
        m <= self.degree || self.group.is_zero(a)
    }
}

/// A total configuration on the vertices of {0,1}^n, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct CubeConfig<E> {
    pub n: usize,
    pub values: Vec<E>,
}

/// Cube dimension cap (2^6 vertices suffices for corner tests up to k = 5).
pub const MAX_CUBE_DIM: usize = 6;

impl<E: Clone> CubeConfig<E> {
    pub fn new(n: usize, values: Vec<E>) -> Result<Self> {
        if n > MAX_CUBE_DIM {
            return Err(Error::TooLarge(format!("cube dimension {n} exceeds {MAX_CUBE_DIM}")));
        }
        if values.len() != 1 << n {
            return Err(Error::DimMismatch(format!(
                "cube on {{0,1}}^{n} needs {} vertices, got {}",
                1 << n,
                values.len()
            )));
        }
        Ok(CubeConfig { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(u32) -> E) -> Result<Self> {
        if n > MAX_CUBE_DIM {
            return Err(Error::TooLarge(format!("cube dimension {n} exceeds {MAX_CUBE_DIM}")));
        }
        Ok(CubeConfig { n, values: (0..1u32 << n).map(f).collect() })
    }

    pub fn value(&self, v: u32) -> &E {
        &self.values[v as usize]
    }
}

/// Vertices of {0,1}^n in increasing Hamming weight, lex ties (bit 0 is the
/// first coordinate).
pub fn vertex_order(n: usize) -> Vec<u32> {
    let mut vs: Vec<u32> = (0..1u32 << n).collect();
    vs.sort_by_key(|&v| {
        let coords: Vec<u32> = (0..n).map(|i| v >> i & 1).collect();
        (v.count_ones(), coords)
    });
    vs
}

/// Greedy Host–Kra factorization. Returns the list of (vertex, correction)
/// pairs whose upper-face products reassemble the cube, or the witness
/// vertex at which membership fails.
pub fn hk_cube_factor<O: FilteredOps>(
    ops: &O,
    cube: &CubeConfig<O::Elem>,
) -> std::result::Result<Vec<(u32, O::Elem)>, u32> {
    let n = cube.n;
    let mut running: Vec<O::Elem> = vec![ops.identity(); 1 << n];
    let mut factors = Vec::new();
    for v in vertex_order(n) {
        let correction = ops.compose(&ops.invert(&running[v as usize]), cube.value(v));
        let codim = v.count_ones() as usize;
        if !ops.in_filtration_level(&correction, codim) {
            return Err(v);
        }
        if correction != ops.identity() {
            for w in 0..1u32 << n {
                if w & v == v {
                    running[w as usize] = ops.compose(&running[w as usize], &correction);
                }
            }
            factors.push((v, correction));
        }
    }
    Ok(factors)
}

/// Membership in C^n(G_•).
pub fn is_hk_cube<O: FilteredOps>(ops: &O, cube: &CubeConfig<O::Elem>) -> bool {
    hk_cube_factor(ops, cube).is_ok()
}

/// Completes an abelian (k+1)-corner: values on {0,1}^{k+1} minus the top
/// vertex determine the completion through the vanishing alternating sum
/// Σ_v (−1)^{|v|} c(v) = 0.
pub fn complete_corner_abelian(
    ops: &DegreeAbelian,
    corner: &[CALPoint],
) -> Result<CALPoint> {
    let n = ops.degree + 1;
    if corner.len() != (1 << n) - 1 {
        return Err(Error::DimMismatch(format!(
            "corner on {{0,1}}^{n} needs {} vertices, got {}",
            (1 << n) - 1,
            corner.len()
        )));
    }
    let mut sum = ops.group.zero();
    for (idx, val) in corner.iter().enumerate() {
        let v = idx as u32;
        if v.count_ones().is_multiple_of(2) {
            sum = ops.group.add(&sum, val);
        } else {
            sum = ops.group.sub(&sum, val);
        }
    }
    // (−1)^{k+1} c(top) + sum = 0.
    Ok(if n.is_multiple_of(2) { ops.group.neg(&sum) } else { sum })
}

/// Exhaustive generation of C^n(D_k(A)) for a finite abelian A, by closing
/// the face-configuration generators under the group operation. Test oracle
/// for the greedy factorization.
pub fn enumerate_hk_cubes(ops: &DegreeAbelian, n: usize) -> Result<Vec<Vec<CALPoint>>> {
    if ops.group.torus_rank != 0 {
        return Err(Error::PreconditionFailed("enumeration needs a finite group".into()));
    }
    let order = ops.group.finite.order();
    let verts = 1usize << n;
    let total = order.checked_pow(verts as u32).ok_or_else(|| Error::TooLarge("cube space".into()))?;
    if total > 1_000_000 {
        return Err(Error::TooLarge(format!("cube enumeration over {total} configurations")));
    }

    // Face generators: for every face F with codim(F) ≤ k and every group
    // element g, the configuration g^F.
    let mut faces: Vec<(u32, u32)> = Vec::new(); // (fixed mask, fixed values)
    for mask in 0..1u32 << n {
        let codim = mask.count_ones() as usize;
        if codim > ops.degree {
            continue;
        }
        for vals in 0..1u32 << n {
            if vals & !mask != 0 {
                continue;
            }
            faces.push((mask, vals));
        }
    }
    let elements: Vec<CALPoint> = ops
        .group
        .finite
        .elements()
        .map(|e| CALPoint { torus: vec![], finite: e })
        .collect();

    let encode = |cfg: &[CALPoint]| -> u64 {
        let mut idx: u64 = 0;
        for p in cfg {
            idx = idx * order as u64 + ops.group.finite.index_of(&p.finite) as u64;
        }
        idx
    };

    let zero_cfg = vec![ops.group.zero(); verts];
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut queue = vec![zero_cfg.clone()];
    seen.insert(encode(&zero_cfg));
    while let Some(cfg) = queue.pop() {
        out.push(cfg.clone());
        for &(mask, vals) in &faces {
            for g in &elements {
                if ops.group.is_zero(g) {
                    continue;
                }
                let mut next = cfg.clone();
                for v in 0..verts as u32 {
                    if v & mask == vals {
                        next[v as usize] = ops.group.add(&next[v as usize], g);
                    }
                }
                if seen.insert(encode(&next)) {
                    queue.push(next);
                }
            }
        }
    }
    Ok(out)
}
