//! Barcode modules, primitively generated Hopf algebras `U_q(V)`, and the
//! algebraic spectral sequence of destabilization.
//!
//! A barcode module has columns `V_{2^k}`, each a graded space in internal
//! degree, with `q: V_{2^k} -> V_{2^{k+1}}` doubling degree. Column `k`
//! carries weight `2^k`; an element of weight `w` and internal degree `n`
//! sits at chart position `(-w, w + n)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlfree::{DLSum, FreeDLModule};
use crate::f2linalg::{kernel_image, F2Matrix, F2Vec, Subquotient, Subspace};
use crate::singer::{render_sum, singer_d, Engine, SingerError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HopfError {
    #[error("q is not monic on column {column} in degree {degree}, so the diamond condition fails")]
    DiamondViolation { column: usize, degree: i64 },
    #[error("d q is nonzero on column {column} in degree {degree}")]
    NotDifferential { column: usize, degree: i64 },
    #[error("page {page}: {detail}")]
    PageMismatch { page: u64, detail: String },
    #[error(transparent)]
    Singer(#[from] SingerError),
}

/// One column: dimensions per internal degree through `bound`, and `q`
/// from degree `e` to degree `2e` of the next column where that is known.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Column {
    pub bound: i64,
    pub dims: BTreeMap<i64, usize>,
    pub q: BTreeMap<i64, F2Matrix>,
    pub labels: BTreeMap<i64, Vec<String>>,
}

impl Column {
    pub fn dim(&self, e: i64) -> usize {
        self.dims.get(&e).copied().unwrap_or(0)
    }

    pub fn min_degree(&self) -> Option<i64> {
        self.dims.iter().find(|(_, &d)| d > 0).map(|(&e, _)| e)
    }

    /// `q` out of degree `e`, if known.
    pub fn q_at(&self, e: i64, next_dim: usize) -> Option<F2Matrix> {
        if self.dim(e) == 0 {
            return Some(F2Matrix::zeros(next_dim, 0));
        }
        self.q.get(&e).cloned()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BarcodeModule {
    pub columns: Vec<Column>,
}

/// A bar starting at column `column` in internal degree `degree` and
/// surviving `length` columns. Open bars reach the last column (or the last
/// degree) in range and may continue beyond it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bar {
    pub column: usize,
    pub degree: i64,
    pub length: usize,
    pub open: bool,
}

impl BarcodeModule {
    pub fn top_column(&self) -> usize {
        self.columns.len().saturating_sub(1)
    }

    /// `q^l` from `(k, e)`, or `None` once the chain leaves the known range.
    fn q_power(&self, k: usize, e: i64, l: usize) -> Option<F2Matrix> {
        let mut m = F2Matrix::identity(self.columns.get(k)?.dim(e));
        if e > self.columns[k].bound {
            return None;
        }
        let mut deg = e;
        for c in k..k + l {
            let next = self.columns.get(c + 1)?;
            if 2 * deg > next.bound {
                return None;
            }
            let q = self.columns[c].q_at(deg, next.dim(2 * deg))?;
            m = q.mul(&m);
            deg *= 2;
        }
        Some(m)
    }

    /// Number of further columns reachable from `(k, e)`.
    fn reach(&self, k: usize, e: i64) -> usize {
        let mut l = 0;
        let mut deg = e;
        while k + l < self.top_column() {
            let next = &self.columns[k + l + 1];
            if 2 * deg > next.bound || self.columns[k + l].q_at(deg, next.dim(2 * deg)).is_none() {
                break;
            }
            deg *= 2;
            l += 1;
        }
        l
    }

    /// Rank of `q^l` from `(k, e)`; `None` past the known range.
    pub fn rank(&self, k: usize, e: i64, l: usize) -> Option<usize> {
        self.q_power(k, e, l).map(|m| m.rank())
    }
}

/// Bars from the ranks of iterated `q`, in canonical order.
pub fn barcode_decompose(b: &BarcodeModule) -> Vec<Bar> {
    let mut bars = Vec::new();
    for (k, col) in b.columns.iter().enumerate() {
        for (&e, &dim) in &col.dims {
            if dim == 0 || e > col.bound {
                continue;
            }
            let last = b.reach(k, e);
            let r = |l: usize| b.rank(k, e, l).unwrap_or(0);
            let has_pred = k > 0 && e % 2 == 0 && b.columns[k - 1].dim(e / 2) > 0;
            let p = |l: usize| {
                if has_pred {
                    b.rank(k - 1, e / 2, l).unwrap_or(0)
                } else {
                    0
                }
            };
            // born at (k, e) and alive through column k + j
            let alive = |j: usize| r(j) - p(j + 1);
            for m in 1..=last {
                let n = alive(m - 1) - alive(m);
                for _ in 0..n {
                    bars.push(Bar { column: k, degree: e, length: m, open: false });
                }
            }
            for _ in 0..alive(last) {
                bars.push(Bar { column: k, degree: e, length: last + 1, open: true });
            }
        }
    }
    bars.sort();
    bars
}

/// Bigraded dimensions of `U_q(V)`, keyed by (weight, internal degree).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UqSeries {
    pub max_weight: u64,
    #[serde(with = "series_records")]
    pub entries: BTreeMap<(u64, i64), u64>,
}

/// JSON maps need string keys, so entries travel as records.
mod series_records {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Record {
        weight: u64,
        degree: i64,
        dim: u64,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<(u64, i64), u64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Record> = m.iter().map(|(&(weight, degree), &dim)| Record { weight, degree, dim }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(u64, i64), u64>, D::Error> {
        let v = Vec::<Record>::deserialize(d)?;
        Ok(v.into_iter().map(|r| ((r.weight, r.degree), r.dim)).collect())
    }
}

impl UqSeries {
    pub fn get(&self, w: u64, n: i64) -> u64 {
        self.entries.get(&(w, n)).copied().unwrap_or(0)
    }

    /// Total dimension in internal degree `n` over all weights in range.
    pub fn total(&self, n: i64) -> u64 {
        self.entries.iter().filter(|((_, d), _)| *d == n).map(|(_, c)| c).sum()
    }

    pub fn restrict(&self, lo: i64, hi: i64) -> UqSeries {
        UqSeries {
            max_weight: self.max_weight,
            entries: self.entries.iter().filter(|((_, n), _)| (lo..=hi).contains(n)).map(|(&k, &v)| (k, v)).collect(),
        }
    }
}

/// Product over bars of `Z/2[x]/(x^{2^m})` (or `Z/2[x]` for open bars),
/// with `x` of weight `2^k` and internal degree `e`, through weight
/// `max_weight`.
pub fn uq_series(bars: &[Bar], max_weight: u64) -> UqSeries {
    let mut acc: BTreeMap<(u64, i64), u64> = BTreeMap::new();
    acc.insert((0, 0), 1);
    for bar in bars {
        let w = 1u64 << bar.column;
        if w > max_weight {
            continue;
        }
        let max_pow = if bar.open { max_weight / w } else { ((1u64 << bar.length) - 1).min(max_weight / w) };
        let mut next: BTreeMap<(u64, i64), u64> = BTreeMap::new();
        for (&(aw, an), &c) in &acc {
            for j in 0..=max_pow {
                let nw = aw + j * w;
                if nw > max_weight {
                    break;
                }
                *next.entry((nw, an + j as i64 * bar.degree)).or_default() += c;
            }
        }
        acc = next;
    }
    UqSeries { max_weight, entries: acc }
}

/// A barcode module with one differential component from column `s` to
/// column `t`, shifting internal degree by `shift`.
#[derive(Clone, Debug)]
pub struct DiffBarcode {
    pub v: BarcodeModule,
    pub s: usize,
    pub t: usize,
    pub shift: i64,
    pub d: BTreeMap<i64, F2Matrix>,
}

/// Homology of a differential barcode module, with each new column given
/// as a subquotient of the old one.
#[derive(Clone, Debug)]
pub struct PageHomology {
    pub barcode: BarcodeModule,
    pub parts: Vec<BTreeMap<i64, Subquotient>>,
}

/// The barcode module of `H(U_q(V); d)` for `(V, d)` satisfying the
/// diamond condition from column `t`: unchanged below `t` except `ker d`
/// at `s`, and `V / q^{k-t} im d` from column `t` on. The condition is
/// checked on every known `q` out of columns `t..top`.
pub fn page_homology(p: &DiffBarcode) -> Result<PageHomology, HopfError> {
    let v = &p.v;
    let top = v.top_column();
    let d_at = |e: i64| -> Option<F2Matrix> {
        let tgt = &v.columns[p.t];
        if e + p.shift > tgt.bound {
            return None;
        }
        if v.columns[p.s].dim(e) == 0 {
            return Some(F2Matrix::zeros(tgt.dim(e + p.shift), 0));
        }
        p.d.get(&e).cloned()
    };
    if p.s > 0 {
        let prev = &v.columns[p.s - 1];
        for (&e, q) in &prev.q {
            if let Some(d) = d_at(2 * e) {
                if !d.mul(q).is_zero() {
                    return Err(HopfError::NotDifferential { column: p.s - 1, degree: e });
                }
            }
        }
    }
    for k in p.t..top {
        for (&e, q) in &v.columns[k].q {
            if q.rank() != q.cols() {
                return Err(HopfError::DiamondViolation { column: k, degree: e });
            }
        }
    }
    // columns from t on are exact only where every relevant d is known
    let src = &v.columns[p.s];
    let mut t_bound = v.columns[p.t].bound.min(src.bound.saturating_add(p.shift));
    for (&e, &dim) in &src.dims {
        if dim > 0 && e <= src.bound && d_at(e).is_none() {
            t_bound = t_bound.min(e + p.shift - 1);
        }
    }
    let den_bound = |k: usize| -> i64 {
        if k < p.t {
            i64::MAX
        } else {
            (t_bound + 1).saturating_mul(1i64 << (k - p.t)) - 1
        }
    };
    // q^{k-t} im d, column by column
    let mut dens: Vec<BTreeMap<i64, Subspace>> = vec![BTreeMap::new(); v.columns.len()];
    for (&e, &dim) in &v.columns[p.s].dims {
        if dim == 0 {
            continue;
        }
        if let Some(d) = d_at(e) {
            let img = kernel_image(&d).1;
            if img.dim() > 0 {
                dens[p.t].insert(e + p.shift, img);
            }
        }
    }
    for k in p.t..top {
        let entries: Vec<(i64, Subspace)> = dens[k].iter().map(|(&e, s)| (e, s.clone())).collect();
        for (e, sub) in entries {
            let next = &v.columns[k + 1];
            if 2 * e > next.bound {
                continue;
            }
            if let Some(q) = v.columns[k].q_at(e, next.dim(2 * e)) {
                let img = sub.image(&q);
                if img.dim() > 0 {
                    dens[k + 1].insert(2 * e, img);
                }
            }
        }
    }
    let mut parts: Vec<BTreeMap<i64, Subquotient>> = Vec::with_capacity(v.columns.len());
    let mut out = BarcodeModule::default();
    for (k, col) in v.columns.iter().enumerate() {
        let mut bound = col.bound.min(den_bound(k));
        let mut sq = BTreeMap::new();
        for (&e, &dim) in &col.dims {
            if e > col.bound {
                continue;
            }
            let num = if k == p.s {
                match d_at(e) {
                    Some(d) => kernel_image(&d).0,
                    None => {
                        bound = bound.min(e - 1);
                        continue;
                    }
                }
            } else {
                Subspace::full(dim)
            };
            let den = dens[k].get(&e).cloned().unwrap_or_else(|| Subspace::zero(dim));
            sq.insert(e, Subquotient::new(num, den));
        }
        sq.retain(|&e, _| e <= bound);
        parts.push(sq);
        out.columns.push(Column { bound, ..Column::default() });
    }
    for k in 0..v.columns.len() {
        let mut dims = BTreeMap::new();
        let mut qs = BTreeMap::new();
        for (&e, part) in &parts[k] {
            if part.dim() > 0 {
                dims.insert(e, part.dim());
            }
            if k == top {
                continue;
            }
            let next_dim = v.columns[k + 1].dim(2 * e);
            let Some(q) = v.columns[k].q_at(e, next_dim) else {
                continue;
            };
            let Some(tgt) = parts[k + 1].get(&(2 * e)) else {
                if 2 * e <= out.columns[k + 1].bound {
                    qs.insert(e, F2Matrix::zeros(0, part.dim()));
                }
                continue;
            };
            let cols = part
                .reps
                .iter()
                .map(|r| tgt.project(&q.apply(r)).expect("q leaves the subquotient"))
                .collect::<Vec<_>>();
            qs.insert(e, F2Matrix::from_columns(tgt.dim(), &cols));
        }
        out.columns[k].dims = dims;
        out.columns[k].q = qs;
    }
    Ok(PageHomology { barcode: out, parts })
}

/// Compares `q`-rank data of two barcode modules wherever both know it.
pub fn rank_profile_diff(a: &BarcodeModule, b: &BarcodeModule) -> Option<String> {
    let n = a.columns.len().min(b.columns.len());
    for k in 0..n {
        let bound = a.columns[k].bound.min(b.columns[k].bound);
        let degrees: std::collections::BTreeSet<i64> =
            a.columns[k].dims.keys().chain(b.columns[k].dims.keys()).copied().filter(|&e| e <= bound).collect();
        for e in degrees {
            for l in 0..n - k {
                match (a.rank(k, e, l), b.rank(k, e, l)) {
                    (Some(x), Some(y)) if x != y => {
                        return Some(format!("column {k}, degree {e}: rank of q^{l} is {x} versus {y}"));
                    }
                    (Some(_), Some(_)) => {}
                    _ => break,
                }
            }
        }
    }
    None
}

/// One page `E^{2^s}`: the barcode module `V(s)` with each column realised
/// as a subquotient of `R_k M`, and the differential `R_{s,s} -> R_{s+1,s}`.
#[derive(Clone, Debug)]
pub struct SSPage {
    pub s: usize,
    pub diff: DiffBarcode,
    pub spaces: Vec<BTreeMap<i64, Subquotient>>,
}

impl SSPage {
    pub fn page(&self) -> u64 {
        1u64 << self.s
    }

    pub fn barcode(&self) -> &BarcodeModule {
        &self.diff.v
    }

    /// Ranks of the differential by source degree.
    pub fn differential_ranks(&self) -> BTreeMap<i64, usize> {
        self.diff.d.iter().map(|(&e, m)| (e, m.rank())).filter(|&(_, r)| r > 0).collect()
    }
}

fn q0_vector(src: &FreeDLModule, tgt: &FreeDLModule, n: i64, v: &F2Vec) -> F2Vec {
    let mut out = DLSum::zero();
    for m in src.sum(n, v).iter() {
        out.toggle(m.q0());
    }
    tgt.vector(2 * n, &out)
}

/// Working ranges for a run: columns `0..=top_column`, internal degrees
/// through `max_internal`.
#[derive(Clone, Copy, Debug)]
pub struct Range {
    pub top_column: usize,
    pub max_internal: i64,
}

/// Degree through which column `k` of `V(s)` is exact.
fn column_bound(engine: &Engine, s: usize, k: usize, cap: i64) -> i64 {
    if k < s {
        return engine.l_bound(k).min(cap);
    }
    let mut b = engine.auth(k, 0).min(cap);
    if s > 0 {
        let a = engine.auth(s - 1, -1);
        if a < i64::MAX {
            b = b.min((a + 1).saturating_mul(1i64 << (k - s)) - 1);
        }
    }
    b
}

/// Builds the page `E^{2^s}` of the algebraic spectral sequence.
pub fn build_page(engine: &Engine, s: usize, range: Range) -> Result<SSPage, HopfError> {
    let cap = range.max_internal;
    let kmax = range.top_column;
    let mut spaces: Vec<BTreeMap<i64, Subquotient>> = Vec::new();
    let mut columns: Vec<Column> = Vec::new();
    for k in 0..=kmax {
        let bound = column_bound(engine, s, k, cap);
        let r = engine.rs(k, 0);
        let mut parts = BTreeMap::new();
        let mut labels = BTreeMap::new();
        for n in r.module.degrees() {
            if n > bound {
                break;
            }
            let dim = r.module.dim(n);
            let boundaries =
                if k == 0 { Subspace::zero(dim) } else { kernel_image(&engine.d_block(k as i64 - 1, -1, n)).1 };
            let part = if k < s {
                let l = engine.l_space(k, n)?;
                let h = engine.hr(k, 0, n)?;
                let reps: Vec<F2Vec> = l.basis().iter().map(|c| h.sub.lift(c)).collect();
                let num = boundaries.sum(&Subspace::span(dim, reps.iter().cloned()));
                Subquotient::with_reps(num, boundaries, reps)
            } else {
                let den = if s == 0 { Subspace::zero(dim) } else { pushed_boundaries(engine, s, k, n)? };
                Subquotient::quotient_of(dim, den)
            };
            if part.dim() > 0 {
                labels.insert(n, part.reps.iter().map(|z| render_sum(&r, n, z)).collect());
            }
            parts.insert(n, part);
        }
        columns.push(Column {
            bound,
            dims: parts.iter().filter(|(_, p)| p.dim() > 0).map(|(&n, p)| (n, p.dim())).collect(),
            q: BTreeMap::new(),
            labels,
        });
        spaces.push(parts);
    }
    for k in 0..kmax {
        let src = engine.rs(k, 0);
        let tgt = engine.rs(k + 1, 0);
        let mut qs = BTreeMap::new();
        for (&n, part) in &spaces[k] {
            if 2 * n > columns[k + 1].bound {
                continue;
            }
            let Some(target) = spaces[k + 1].get(&(2 * n)) else {
                qs.insert(n, F2Matrix::zeros(0, part.dim()));
                continue;
            };
            let cols = part
                .reps
                .iter()
                .map(|z| {
                    target.project(&q0_vector(&src, &tgt, n, z)).ok_or_else(|| HopfError::PageMismatch {
                        page: 1 << s,
                        detail: format!("q out of column {k} in degree {n} leaves column {}", k + 1),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            qs.insert(n, F2Matrix::from_columns(target.dim(), &cols));
        }
        columns[k].q = qs;
    }
    let mut d = BTreeMap::new();
    if s < kmax {
        let src = engine.rs(s, 0);
        let lifted = engine.rs(s, -1);
        let tgt = engine.rs(s + 1, 0);
        for (&n, part) in &spaces[s] {
            if n - 1 > engine.auth(s, -1) || n - 1 > columns[s + 1].bound {
                continue;
            }
            let Some(target) = spaces[s + 1].get(&(n - 1)) else {
                d.insert(n, F2Matrix::zeros(0, part.dim()));
                continue;
            };
            let cols: Vec<F2Vec> = part
                .reps
                .iter()
                .map(|z| {
                    let mut out = DLSum::zero();
                    for m in src.sum(n, z).iter() {
                        let l = m.epsilon_lift();
                        debug_assert!(lifted.index_of(&l).is_some());
                        out.add_assign(&singer_d(&l, engine.base()));
                    }
                    target.project(&tgt.vector(n - 1, &out)).expect("quotient of the full space")
                })
                .collect();
            d.insert(n, F2Matrix::from_columns(target.dim(), &cols));
        }
    }
    Ok(SSPage { s, diff: DiffBarcode { v: BarcodeModule { columns }, s, t: s + 1, shift: -1, d }, spaces })
}

/// `im(q^{k-s} d_{s-1})` inside `R_k M` in degree `n`.
fn pushed_boundaries(engine: &Engine, s: usize, k: usize, n: i64) -> Result<Subspace, HopfError> {
    let dim = engine.rs(k, 0).module.dim(n);
    let steps = k - s;
    let scale = 1i64 << steps;
    if n.rem_euclid(scale) != 0 {
        return Ok(Subspace::zero(dim));
    }
    let m = n / scale;
    let mut sub = kernel_image(&engine.d_block(s as i64 - 1, -1, m)).1;
    let mut deg = m;
    for j in s..k {
        let src = engine.rs(j, 0);
        let tgt = engine.rs(j + 1, 0);
        let vecs: Vec<F2Vec> = sub.basis().iter().map(|v| q0_vector(&src, &tgt, deg, v)).collect();
        deg *= 2;
        sub = Subspace::span(tgt.module.dim(deg), vecs);
    }
    Ok(sub)
}

/// `L_*M` as a barcode module, with `q` the bottom operation.
pub fn l_barcode(engine: &Engine, range: Range) -> Result<BarcodeModule, HopfError> {
    let mut columns = Vec::new();
    let mut spaces: Vec<BTreeMap<i64, Subspace>> = Vec::new();
    for k in 0..=range.top_column {
        let bound = engine.l_bound(k).min(range.max_internal);
        let r = engine.rs(k, 0);
        let mut dims = BTreeMap::new();
        let mut labels = BTreeMap::new();
        let mut sp = BTreeMap::new();
        for n in r.module.degrees() {
            if n > bound {
                break;
            }
            let l = engine.l_space(k, n)?;
            if l.dim() > 0 {
                let h = engine.hr(k, 0, n)?;
                dims.insert(n, l.dim());
                labels.insert(n, l.basis().iter().map(|c| render_sum(&r, n, &h.sub.lift(c))).collect());
            }
            sp.insert(n, l);
        }
        columns.push(Column { bound, dims, q: BTreeMap::new(), labels });
        spaces.push(sp);
    }
    for k in 0..range.top_column {
        let mut qs = BTreeMap::new();
        for (&n, l) in &spaces[k] {
            if l.dim() == 0 || 2 * n > columns[k + 1].bound {
                continue;
            }
            let target = &spaces[k + 1][&(2 * n)];
            let coords =
                Subquotient::with_reps(target.clone(), Subspace::zero(target.ambient_dim()), target.basis().to_vec());
            let cols = l
                .basis()
                .iter()
                .map(|c| {
                    let img = engine.q_on_l(n, k, n, c)?;
                    Ok(coords.project(&img).expect("q_on_l lands in L"))
                })
                .collect::<Result<Vec<_>, HopfError>>()?;
            qs.insert(n, F2Matrix::from_columns(target.dim(), &cols));
        }
        columns[k].q = qs;
    }
    Ok(BarcodeModule { columns })
}

/// Outcome of the checks at one page transition.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TransitionReport {
    pub page: u64,
    pub kernel_checks: usize,
    pub cokernel_checks: usize,
    pub profile_matches: bool,
}

#[derive(Clone, Debug)]
pub struct SSRun {
    pub pages: Vec<SSPage>,
    pub transitions: Vec<TransitionReport>,
    pub e_infinity: BarcodeModule,
}

/// Builds pages `E^1, E^2, ..., E^{2^max_s}` and `E^inf`, verifying each
/// transition: the kernel of the page differential is `L_s`, its cokernel
/// is `R_{s+1,s+1}`, and the homology barcode matches the next page.
pub fn run_ss(engine: &Engine, max_s: usize, range: Range) -> Result<SSRun, HopfError> {
    let mut pages = Vec::new();
    for s in 0..=max_s {
        pages.push(build_page(engine, s, range)?);
    }
    let mut transitions = Vec::new();
    for s in 0..max_s.min(range.top_column) {
        transitions.push(check_transition(engine, &pages[s], &pages[s + 1])?);
    }
    let e_infinity = l_barcode(engine, range)?;
    Ok(SSRun { pages, transitions, e_infinity })
}

pub fn check_transition(engine: &Engine, page: &SSPage, next: &SSPage) -> Result<TransitionReport, HopfError> {
    let s = page.s;
    let mismatch = |detail: String| HopfError::PageMismatch { page: page.page(), detail };
    let mut report = TransitionReport { page: page.page(), ..Default::default() };
    // kernel of d on R_{s,s} against L_s
    for (&n, d) in &page.diff.d {
        if n > engine.l_bound(s) {
            continue;
        }
        let part = &page.spaces[s][&n];
        let ker = kernel_image(d).0;
        let l = engine.l_space(s, n)?;
        let h = engine.hr(s, 0, n)?;
        let l_coords: Vec<F2Vec> =
            l.basis().iter().map(|c| part.project(&h.sub.lift(c)).expect("full numerator")).collect();
        let l_sub = Subspace::span(part.dim(), l_coords);
        if l_sub != ker {
            return Err(mismatch(format!(
                "degree {n}: kernel of the differential has dimension {}, L_{s} has dimension {}",
                ker.dim(),
                l_sub.dim()
            )));
        }
        report.kernel_checks += 1;
    }
    // cokernel against R_{s+1,s+1}: the new denominators are im d_s
    for (&n, d) in &page.diff.d {
        let tgt_n = n - 1;
        let Some(target) = page.spaces[s + 1].get(&tgt_n) else {
            continue;
        };
        let ambient = target.ambient_dim();
        let mut span = target.denominator.clone();
        for c in d.columns() {
            span = span.sum(&Subspace::span(ambient, [target.lift(&c)]));
        }
        let expected = kernel_image(&engine.d_block(s as i64, -1, tgt_n)).1;
        if span != expected {
            return Err(mismatch(format!(
                "degree {tgt_n}: image of the differential plus old relations has dimension {}, im d_{s} has dimension {}",
                span.dim(),
                expected.dim()
            )));
        }
        report.cokernel_checks += 1;
    }
    let hom = page_homology(&page.diff)?;
    if let Some(diff) = rank_profile_diff(&hom.barcode, next.barcode()) {
        return Err(mismatch(diff));
    }
    report.profile_matches = true;
    Ok(report)
}

/// The internal-degree slack needed for products of weight at most
/// `max_weight`: primitives of negative degree let other factors exceed
/// the target degree.
pub fn degree_slack(b: &BarcodeModule, max_weight: u64) -> i64 {
    let mut c = 0i64;
    for (k, col) in b.columns.iter().enumerate() {
        if let Some(e) = col.min_degree() {
            if e < 0 {
                let w = 1i64 << k;
                c = c.max((-e + w - 1) / w);
            }
        }
    }
    c * max_weight as i64
}

/// Series of `U_q(V)` through weight `2^{top+1} - 1`, together with the
/// internal degree through which it is exact.
pub fn page_series(b: &BarcodeModule) -> (UqSeries, i64) {
    let max_weight = (1u64 << (b.top_column() + 1)) - 1;
    let bars = barcode_decompose(b);
    let bound = b.columns.iter().map(|c| c.bound).min().unwrap_or(0) - degree_slack(b, max_weight);
    (uq_series(&bars, max_weight), bound)
}
