//! Plain-text formats: groups as `group: [d1,d2,...]`, tables as
//! `coords ; re ; im` lines, homs and lattices as small headed blocks,
//! matrices as row-major `p/q` lists with inferred dimension, polynomial
//! maps as `t ; matrix` lines, cubes as `vertex ; matrix` lines.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::abelian::{AbelianHom, CALGroup, CALPoint, ComplexTable, FiniteAbelianGroup};
use crate::cubes::CubeConfig;
use crate::error::{Error, Result};
use crate::filtered::FilteredLattice;
use crate::lift::FibrationDatum;
use crate::linalg::{Int, Rat, RatMat};
use crate::matrix::UnipotentMatrix;
use crate::nilseq::FrequencySpec;
use crate::polymap::{AbelianPolyMap, MultiIndex, PolyMap};

fn parse_err(what: &str, detail: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{what}: {detail}"))
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let num: Int = p.trim().parse().map_err(|e| parse_err("rational numerator", e))?;
        let den: Int = q.trim().parse().map_err(|e| parse_err("rational denominator", e))?;
        if den == Int::from(0) {
            return Err(parse_err("rational", "zero denominator"));
        }
        Ok(Rat::new(num, den))
    } else {
        let num: Int = s.parse().map_err(|e| parse_err("rational", e))?;
        Ok(Rat::from_integer(num))
    }
}

pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `[d1,d2,...]`, possibly prefixed by `group:`.
pub fn parse_group(s: &str) -> Result<FiniteAbelianGroup> {
    let s = s.trim();
    let s = s.strip_prefix("group:").unwrap_or(s).trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| parse_err("group", "expected [d1,d2,...]"))?;
    let moduli: Vec<u64> = if inner.trim().is_empty() {
        vec![]
    } else {
        inner
            .split(',')
            .map(|t| t.trim().parse().map_err(|e| parse_err("group modulus", e)))
            .collect::<Result<_>>()?
    };
    FiniteAbelianGroup::new(moduli)
}

pub fn format_group(g: &FiniteAbelianGroup) -> String {
    let mods: Vec<String> = g.moduli().iter().map(|d| d.to_string()).collect();
    format!("group: [{}]", mods.join(","))
}

/// Table lines `c1,c2,... ; re ; im`; blank lines and `#` comments ignored.
pub fn parse_table(group: &FiniteAbelianGroup, text: &str) -> Result<ComplexTable> {
    let mut values = vec![None; group.order() as usize];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(';').collect();
        if parts.len() != 3 {
            return Err(parse_err("table line", format!("expected `coords ; re ; im`, got `{line}`")));
        }
        let coords: Vec<i64> = if parts[0].trim().is_empty() {
            vec![]
        } else {
            parts[0]
                .split(',')
                .map(|t| t.trim().parse().map_err(|e| parse_err("table coordinate", e)))
                .collect::<Result<_>>()?
        };
        if coords.len() != group.len() {
            return Err(parse_err("table line", "coordinate count does not match the group"));
        }
        let re: f64 = parts[1].trim().parse().map_err(|e| parse_err("table re", e))?;
        let im: f64 = parts[2].trim().parse().map_err(|e| parse_err("table im", e))?;
        let idx = group.index_of(&group.reduce(&coords));
        values[idx] = Some(Complex64::new(re, im));
    }
    let values: Vec<Complex64> = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| parse_err("table", format!("missing value for element index {i}"))))
        .collect::<Result<_>>()?;
    ComplexTable::new(group.clone(), values)
}

pub fn format_table(t: &ComplexTable) -> String {
    let mut out = String::new();
    for (idx, x) in t.group.elements().enumerate() {
        let coords: Vec<String> = x.coords.iter().map(|c| c.to_string()).collect();
        let v = t.values[idx];
        out.push_str(&format!("{} ; {:.12} ; {:.12}\n", coords.join(","), v.re, v.im));
    }
    out
}

/// Hom block: `source: [..]`, `target: [..]`, `matrix:` then row-major
/// integer rows (target length × source length).
pub fn parse_hom(text: &str) -> Result<AbelianHom> {
    let mut source = None;
    let mut target = None;
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut in_matrix = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("source:") {
            source = Some(parse_group(rest)?);
        } else if let Some(rest) = line.strip_prefix("target:") {
            target = Some(parse_group(rest)?);
        } else if line == "matrix:" {
            in_matrix = true;
        } else if in_matrix {
            let row: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|e| parse_err("hom entry", e)))
                .collect::<Result<_>>()?;
            rows.push(row);
        } else {
            return Err(parse_err("hom", format!("unexpected line `{line}`")));
        }
    }
    let source = source.ok_or_else(|| parse_err("hom", "missing source"))?;
    let target = target.ok_or_else(|| parse_err("hom", "missing target"))?;
    if target.is_empty() && rows.is_empty() {
        return AbelianHom::new(source, target, vec![]);
    }
    AbelianHom::new(source, target, rows)
}

pub fn format_hom(h: &AbelianHom) -> String {
    let mut out = String::new();
    out.push_str(&format!("source: {}\n", format_group(&h.source).trim_start_matches("group: ")));
    out.push_str(&format!("target: {}\n", format_group(&h.target).trim_start_matches("group: ")));
    out.push_str("matrix:\n");
    for row in &h.matrix {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

/// Lattice block: `dim:`, `degree:`, `levels:` and `denoms:` as upper
/// triangles, one row per matrix row (entries for columns i+1..dim).
pub fn parse_lattice(text: &str) -> Result<FilteredLattice> {
    let mut dim = None;
    let mut degree = None;
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut denoms: Vec<Vec<u64>> = Vec::new();
    #[derive(PartialEq)]
    enum Section {
        None,
        Levels,
        Denoms,
    }
    let mut sec = Section::None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("dim:") {
            dim = Some(rest.trim().parse().map_err(|e| parse_err("lattice dim", e))?);
        } else if let Some(rest) = line.strip_prefix("degree:") {
            degree = Some(rest.trim().parse().map_err(|e| parse_err("lattice degree", e))?);
        } else if line == "levels:" {
            sec = Section::Levels;
        } else if line == "denoms:" {
            sec = Section::Denoms;
        } else {
            match sec {
                Section::Levels => levels.push(
                    line.split_whitespace()
                        .map(|t| t.parse().map_err(|e| parse_err("level", e)))
                        .collect::<Result<_>>()?,
                ),
                Section::Denoms => denoms.push(
                    line.split_whitespace()
                        .map(|t| t.parse().map_err(|e| parse_err("denominator", e)))
                        .collect::<Result<_>>()?,
                ),
                Section::None => return Err(parse_err("lattice", format!("unexpected line `{line}`"))),
            }
        }
    }
    let dim: usize = dim.ok_or_else(|| parse_err("lattice", "missing dim"))?;
    let degree: usize = degree.ok_or_else(|| parse_err("lattice", "missing degree"))?;
    let expand = |tri: &[Vec<u64>]| -> Result<Vec<Vec<u64>>> {
        if tri.len() != dim.saturating_sub(1) {
            return Err(parse_err("lattice", "triangle must have dim-1 rows"));
        }
        let mut full = vec![vec![0u64; dim]; dim];
        for (i, row) in tri.iter().enumerate() {
            if row.len() != dim - 1 - i {
                return Err(parse_err("lattice", format!("row {i} must have {} entries", dim - 1 - i)));
            }
            for (off, &v) in row.iter().enumerate() {
                full[i][i + 1 + off] = v;
            }
        }
        Ok(full)
    };
    let levels_u64: Vec<Vec<u64>> = levels
        .iter()
        .map(|r| r.iter().map(|&v| v as u64).collect())
        .collect();
    let level_full: Vec<Vec<usize>> = expand(&levels_u64)?
        .into_iter()
        .map(|r| r.into_iter().map(|v| v as usize).collect())
        .collect();
    let mut denom_full = expand(&denoms)?;
    for (i, row) in denom_full.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if j > i && *v == 0 {
                *v = 1;
            }
        }
    }
    // Level 0 above the diagonal marks a masked-out (quotient) position.
    let mask: Vec<Vec<bool>> = (0..dim)
        .map(|i| (0..dim).map(|j| j > i && level_full[i][j] > 0).collect())
        .collect();
    FilteredLattice::with_mask(dim, degree, level_full, denom_full, Some(mask))
}

pub fn format_lattice(fl: &FilteredLattice) -> String {
    let mut out = format!("dim: {}\ndegree: {}\nlevels:\n", fl.dim(), fl.degree());
    for i in 0..fl.dim() - 1 {
        let row: Vec<String> = (i + 1..fl.dim()).map(|j| fl.level_at(i, j).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str("denoms:\n");
    for i in 0..fl.dim() - 1 {
        let row: Vec<String> = (i + 1..fl.dim()).map(|j| fl.denom_at(i, j).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Row-major rationals; the dimension is the square root of the count.
pub fn parse_matrix(text: &str) -> Result<UnipotentMatrix> {
    let entries: Vec<Rat> = text
        .split_whitespace()
        .map(parse_rat)
        .collect::<Result<_>>()?;
    let dim = (entries.len() as f64).sqrt().round() as usize;
    if dim * dim != entries.len() {
        return Err(parse_err("matrix", format!("{} entries is not a square count", entries.len())));
    }
    UnipotentMatrix::new(dim, entries)
}

pub fn format_matrix(m: &UnipotentMatrix) -> String {
    let cells: Vec<String> = m.entries().iter().map(format_rat).collect();
    cells.join(" ")
}

/// PolyMap lines `t1,t2,... ; matrix`; arity inferred from the first line.
pub fn parse_polymap(fl: &FilteredLattice, text: &str) -> Result<PolyMap> {
    let mut coeffs: BTreeMap<MultiIndex, UnipotentMatrix> = BTreeMap::new();
    let mut arity = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (tpart, mpart) = line
            .split_once(';')
            .ok_or_else(|| parse_err("polymap line", "expected `t ; matrix`"))?;
        let t: Vec<usize> = if tpart.trim().is_empty() {
            vec![]
        } else {
            tpart
                .split(',')
                .map(|v| v.trim().parse().map_err(|e| parse_err("multi-index", e)))
                .collect::<Result<_>>()?
        };
        match arity {
            None => arity = Some(t.len()),
            Some(a) if a != t.len() => return Err(parse_err("polymap", "inconsistent index arity")),
            _ => {}
        }
        coeffs.insert(MultiIndex(t), parse_matrix(mpart)?);
    }
    let arity = arity.ok_or_else(|| parse_err("polymap", "no coefficients"))?;
    PolyMap::new(arity, fl.clone(), coeffs)
}

pub fn format_polymap(pm: &PolyMap) -> String {
    let mut out = String::new();
    for (t, a) in pm.coeffs() {
        let idx: Vec<String> = t.0.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{} ; {}\n", idx.join(","), format_matrix(a)));
    }
    if out.is_empty() {
        // Identity map: keep the arity readable by writing the zero index.
        let idx = vec!["0".to_string(); pm.arity()];
        out.push_str(&format!(
            "{} ; {}\n",
            idx.join(","),
            format_matrix(&UnipotentMatrix::identity(pm.lattice().dim()))
        ));
    }
    out
}

/// Abelian polymap block: `torus: a`, `finite: [..]`, `degree: k`, then
/// lines `t ; torus rationals ; finite coords` (sections may be empty).
pub fn parse_abelian_polymap(text: &str) -> Result<AbelianPolyMap> {
    let mut torus_rank = 0usize;
    let mut finite = FiniteAbelianGroup::trivial();
    let mut degree = None;
    let mut arity = None;
    let mut lines = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("torus:") {
            torus_rank = rest.trim().parse().map_err(|e| parse_err("torus rank", e))?;
        } else if let Some(rest) = line.strip_prefix("finite:") {
            finite = parse_group(rest)?;
        } else if let Some(rest) = line.strip_prefix("degree:") {
            degree = Some(rest.trim().parse().map_err(|e| parse_err("degree", e))?);
        } else {
            lines.push(line.to_string());
        }
    }
    let group = CALGroup { torus_rank, finite };
    let mut coeffs: BTreeMap<MultiIndex, CALPoint> = BTreeMap::new();
    for line in lines {
        let parts: Vec<&str> = line.split(';').collect();
        if parts.len() != 3 {
            return Err(parse_err("abelian polymap line", "expected `t ; torus ; finite`"));
        }
        let t: Vec<usize> = if parts[0].trim().is_empty() {
            vec![]
        } else {
            parts[0]
                .split(',')
                .map(|v| v.trim().parse().map_err(|e| parse_err("multi-index", e)))
                .collect::<Result<_>>()?
        };
        match arity {
            None => arity = Some(t.len()),
            Some(a) if a != t.len() => return Err(parse_err("abelian polymap", "inconsistent arity")),
            _ => {}
        }
        let torus: Vec<Rat> = parts[1].split_whitespace().map(parse_rat).collect::<Result<_>>()?;
        let fin: Vec<i64> = parts[2]
            .split_whitespace()
            .map(|v| v.parse().map_err(|e| parse_err("finite coord", e)))
            .collect::<Result<_>>()?;
        if torus.len() != group.torus_rank || fin.len() != group.finite.len() {
            return Err(parse_err("abelian polymap", "coordinate counts do not match the group"));
        }
        coeffs.insert(MultiIndex(t), group.point(torus, fin));
    }
    let arity = arity.ok_or_else(|| parse_err("abelian polymap", "no coefficients"))?;
    let degree = degree.unwrap_or_else(|| coeffs.keys().map(|t| t.weight()).max().unwrap_or(0));
    AbelianPolyMap::new(arity, degree, group, coeffs)
}

pub fn format_abelian_polymap(m: &AbelianPolyMap) -> String {
    let mut out = format!(
        "torus: {}\nfinite: {}\ndegree: {}\n",
        m.group().torus_rank,
        format_group(&m.group().finite).trim_start_matches("group: "),
        m.degree()
    );
    for (t, p) in m.coeffs() {
        let idx: Vec<String> = t.0.iter().map(|v| v.to_string()).collect();
        let torus: Vec<String> = p.torus.iter().map(format_rat).collect();
        let fin: Vec<String> = p.finite.coords.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("{} ; {} ; {}\n", idx.join(","), torus.join(" "), fin.join(" ")));
    }
    out
}

/// Cube lines `binary-vertex ; matrix` (vertex bit i = coordinate i).
pub fn parse_cube(text: &str) -> Result<CubeConfig<UnipotentMatrix>> {
    let mut entries: BTreeMap<u32, UnipotentMatrix> = BTreeMap::new();
    let mut n = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (vpart, mpart) = line
            .split_once(';')
            .ok_or_else(|| parse_err("cube line", "expected `vertex ; matrix`"))?;
        let bits = vpart.trim();
        match n {
            None => n = Some(bits.len()),
            Some(k) if k != bits.len() => return Err(parse_err("cube", "inconsistent vertex lengths")),
            _ => {}
        }
        let mut v = 0u32;
        for (i, ch) in bits.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v |= 1 << i,
                _ => return Err(parse_err("cube vertex", "expected a 0/1 string")),
            }
        }
        entries.insert(v, parse_matrix(mpart)?);
    }
    let n = n.ok_or_else(|| parse_err("cube", "no vertices"))?;
    let mut values = Vec::with_capacity(1 << n);
    for v in 0..1u32 << n {
        values.push(
            entries
                .get(&v)
                .cloned()
                .ok_or_else(|| parse_err("cube", format!("missing vertex {v:0n$b}")))?,
        );
    }
    CubeConfig::new(n, values)
}

pub fn format_cube(c: &CubeConfig<UnipotentMatrix>) -> String {
    let mut out = String::new();
    for v in 0..1u32 << c.n {
        let bits: String = (0..c.n).map(|i| if v >> i & 1 == 1 { '1' } else { '0' }).collect();
        out.push_str(&format!("{} ; {}\n", bits, format_matrix(c.value(v))));
    }
    out
}

/// Frequency block: `freqs:` then the upper triangle, one row per matrix row.
pub fn parse_freqs(fl: &FilteredLattice, text: &str) -> Result<FrequencySpec> {
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut in_freqs = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "freqs:" {
            in_freqs = true;
        } else if in_freqs {
            rows.push(
                line.split_whitespace()
                    .map(|t| t.parse().map_err(|e| parse_err("frequency", e)))
                    .collect::<Result<_>>()?,
            );
        } else {
            return Err(parse_err("freqs", format!("unexpected line `{line}`")));
        }
    }
    if rows.len() != fl.dim() - 1 {
        return Err(parse_err("freqs", "triangle must have dim-1 rows"));
    }
    let mut by_pos = Vec::new();
    for (i, j) in fl.positions() {
        let row = rows
            .get(i)
            .ok_or_else(|| parse_err("freqs", "missing row"))?;
        let v = row
            .get(j - i - 1)
            .ok_or_else(|| parse_err("freqs", format!("row {i} is too short")))?;
        by_pos.push(*v);
    }
    FrequencySpec::new(fl, by_pos)
}

pub fn format_freqs(fl: &FilteredLattice, f: &FrequencySpec) -> String {
    let mut out = String::from("freqs:\n");
    let positions = fl.positions();
    for i in 0..fl.dim() - 1 {
        let row: Vec<String> = (i + 1..fl.dim())
            .map(|j| {
                positions
                    .iter()
                    .position(|&p| p == (i, j))
                    .map(|idx| f.freqs()[idx].to_string())
                    .unwrap_or_else(|| "0".to_string())
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Fibration block: the Y lattice, the X lattice, then `psi:` rows
/// (|X positions| rows × |Y positions| rationals, row-major position order).
pub fn parse_fibration(text: &str) -> Result<FibrationDatum> {
    let mut parts = text.split("psi:");
    let head = parts.next().ok_or_else(|| parse_err("fibration", "missing lattices"))?;
    let tail = parts.next().ok_or_else(|| parse_err("fibration", "missing psi block"))?;
    let mut blocks = head.split("---");
    let yb = blocks.next().ok_or_else(|| parse_err("fibration", "missing Y lattice"))?;
    let xb = blocks.next().ok_or_else(|| parse_err("fibration", "missing X lattice"))?;
    let y = parse_lattice(yb)?;
    let x = parse_lattice(xb)?;
    let mut rows = Vec::new();
    for line in tail.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rows.push(line.split_whitespace().map(parse_rat).collect::<Result<Vec<Rat>>>()?);
    }
    let matrix = RatMat::from_rows(rows)?;
    FibrationDatum::new(y, x, matrix)
}

pub fn format_fibration(phi: &FibrationDatum) -> String {
    let mut out = format_lattice(phi.source());
    out.push_str("---\n");
    out.push_str(&format_lattice(phi.target()));
    out.push_str("psi:\n");
    let m = phi.matrix();
    for r in 0..m.rows {
        let row: Vec<String> = (0..m.cols).map(|c| format_rat(&m[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.10}")
}

pub fn complex_to_string(v: Complex64) -> String {
    format!("{:.10} {:+.10}i", v.re, v.im)
}

pub fn rat_display(r: &Rat) -> f64 {
    r.numer().to_f64().unwrap_or(0.0) / r.denom().to_f64().unwrap_or(1.0)
}
