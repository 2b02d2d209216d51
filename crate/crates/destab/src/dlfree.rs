//! Free unstable modules over the Dyer-Lashof algebra.
//!
//! A monomial `Q_{i0} Q_{i1} ... Q_{i(s-1)} x` is stored by its lower
//! indices, outermost first, where `Q_i y = Q^{|y|+i} y`. It is admissible
//! when `0 <= i0 <= i1 <= ...`. The generator degree `gdeg` includes any
//! suspension, so the same base generator can sit under several shifts.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use smallvec::SmallVec;

use crate::amodule::{FModule, GradedMap};
use crate::f2linalg::{F2Matrix, F2Vec};
use crate::steenrod::binom2;

pub type Indices = SmallVec<[i64; 6]>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Mono {
    pub gen: usize,
    pub gdeg: i64,
    pub idx: Indices,
}

impl Mono {
    pub fn bare(gen: usize, gdeg: i64) -> Self {
        Mono { gen, gdeg, idx: Indices::new() }
    }

    pub fn length(&self) -> usize {
        self.idx.len()
    }

    pub fn degree(&self) -> i64 {
        self.idx.iter().rev().fold(self.gdeg, |d, &i| 2 * d + i)
    }

    pub fn is_admissible(&self) -> bool {
        self.idx.first().is_none_or(|&i| i >= 0) && self.idx.windows(2).all(|w| w[0] <= w[1])
    }

    /// The monomial with its outermost operation removed.
    pub fn rest(&self) -> Mono {
        Mono { gen: self.gen, gdeg: self.gdeg, idx: self.idx[1..].into() }
    }

    /// Upper indices, outermost first.
    pub fn upper(&self) -> Vec<i64> {
        let mut d = self.gdeg;
        let mut out = Vec::with_capacity(self.idx.len());
        for &i in self.idx.iter().rev() {
            out.push(d + i);
            d = 2 * d + i;
        }
        out.reverse();
        out
    }

    pub fn from_lower(gen: usize, gdeg: i64, lower: &[i64]) -> Self {
        Mono { gen, gdeg, idx: lower.into() }
    }

    pub fn render(&self, label: &str) -> String {
        let mut s = String::new();
        for j in self.upper() {
            let _ = write!(s, "Q^{j}");
        }
        if !s.is_empty() {
            s.push(' ');
        }
        s.push_str(label);
        s
    }

    /// `epsilon`: keeps upper indices and suspends the generator, so every
    /// lower index drops by one. Zero when the outer index is 0.
    pub fn epsilon(&self) -> Option<Mono> {
        if self.idx.first() == Some(&0) {
            return None;
        }
        Some(Mono { gen: self.gen, gdeg: self.gdeg + 1, idx: self.idx.iter().map(|&i| i - 1).collect() })
    }

    /// Inverse of `epsilon` on its image.
    pub fn epsilon_lift(&self) -> Mono {
        Mono { gen: self.gen, gdeg: self.gdeg - 1, idx: self.idx.iter().map(|&i| i + 1).collect() }
    }

    /// `q0(phi(y)) = Q_0 y`.
    pub fn q0(&self) -> Mono {
        let mut idx = Indices::with_capacity(self.idx.len() + 1);
        idx.push(0);
        idx.extend_from_slice(&self.idx);
        Mono { gen: self.gen, gdeg: self.gdeg, idx }
    }
}

/// A sum of monomials over F2.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct DLSum {
    pub terms: BTreeSet<Mono>,
}

impl DLSum {
    pub fn zero() -> Self {
        DLSum::default()
    }

    pub fn from_mono(m: Mono) -> Self {
        let mut s = DLSum::zero();
        s.toggle(m);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn toggle(&mut self, m: Mono) {
        if !self.terms.remove(&m) {
            self.terms.insert(m);
        }
    }

    pub fn add_assign(&mut self, other: &DLSum) {
        for m in &other.terms {
            self.toggle(m.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Mono> {
        self.terms.iter()
    }
}

/// `Q^j` applied to an admissible monomial, rewritten into admissible form
/// with the Adem relation
/// `Q^r Q^s = sum_i binom(i-s-1, 2i-r) Q^{r+s-i} Q^i` for `r > 2s`
/// and the unstable relation `Q^j y = 0` for `j < |y|`.
pub fn apply_q(j: i64, y: &Mono) -> DLSum {
    let d = y.degree();
    if j < d {
        return DLSum::zero();
    }
    let l = j - d;
    if y.idx.first().is_none_or(|&i0| l <= i0) {
        let mut idx = Indices::with_capacity(y.idx.len() + 1);
        idx.push(l);
        idx.extend_from_slice(&y.idx);
        return DLSum::from_mono(Mono { gen: y.gen, gdeg: y.gdeg, idx });
    }
    let rest = y.rest();
    let a = y.idx[0] + rest.degree();
    let mut out = DLSum::zero();
    for i in (j + 1).div_euclid(2)..=(j - a - 1) {
        if !binom2(i - a - 1, 2 * i - j) {
            continue;
        }
        for z in apply_q(i, &rest).terms {
            out.add_assign(&apply_q(j + a - i, &z));
        }
    }
    out
}

pub fn apply_q_sum(j: i64, y: &DLSum) -> DLSum {
    let mut out = DLSum::zero();
    for m in &y.terms {
        out.add_assign(&apply_q(j, m));
    }
    out
}

/// Normal form of `Q^{j1} Q^{j2} ... Q^{js} x` (upper indices, outermost
/// first) for a generator of degree `gdeg`.
pub fn dl_adem_normalize(word: &[i64], gen: usize, gdeg: i64) -> DLSum {
    let mut sum = DLSum::from_mono(Mono::bare(gen, gdeg));
    for &j in word.iter().rev() {
        sum = apply_q_sum(j, &sum);
    }
    sum
}

/// `y Sq^r` for an admissible monomial over `base`, via the Nishida
/// relation `(Q^j y) Sq^r = sum_i binom(j-r, r-2i) Q^{j-r+i}(y Sq^i)`.
/// Generator ids index `base`; `base` must already carry the suspension
/// matching `gdeg`.
pub fn act_sq(y: &Mono, r: u32, base: &FModule) -> DLSum {
    if r == 0 {
        return DLSum::from_mono(y.clone());
    }
    if y.idx.is_empty() {
        let mut out = DLSum::zero();
        for g in base.sq(y.gen, r) {
            out.toggle(Mono::bare(g, y.gdeg - r as i64));
        }
        return out;
    }
    let rest = y.rest();
    let j = y.idx[0] + rest.degree();
    let r = r as i64;
    let mut out = DLSum::zero();
    for i in 0..=r / 2 {
        if !binom2(j - r, r - 2 * i) {
            continue;
        }
        let inner = act_sq(&rest, i as u32, base);
        out.add_assign(&apply_q_sum(j - r + i, &inner));
    }
    out
}

/// Calls `f` with every nondecreasing sequence of `len` nonnegative lower
/// indices whose weighted sum `sum_k i_k 2^k` is at most `budget`.
fn lower_sequences(len: usize, budget: i64, f: &mut impl FnMut(&[i64])) {
    fn rec(k: usize, len: usize, min: i64, budget: i64, cur: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
        if k == len {
            f(cur);
            return;
        }
        let mut i = min;
        // the remaining entries are all at least i
        let weight_rest: i64 = (k..len).map(|t| 1i64 << t).sum();
        while i * weight_rest <= budget {
            cur.push(i);
            rec(k + 1, len, i, budget - i * (1i64 << k), cur, f);
            cur.pop();
            i += 1;
        }
    }
    if budget < 0 {
        return;
    }
    rec(0, len, 0, budget, &mut Vec::with_capacity(len), f);
}

/// `R_s(M)` through a degree bound, realised as a module whose basis is
/// the admissible monomials.
#[derive(Clone, Debug)]
pub struct FreeDLModule {
    pub s: usize,
    pub module: FModule,
    pub monos: Vec<Mono>,
    index: HashMap<Mono, usize>,
}

impl FreeDLModule {
    pub fn index_of(&self, m: &Mono) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Coordinates of a sum in degree `d`. Panics if a term is missing.
    pub fn vector(&self, d: i64, sum: &DLSum) -> F2Vec {
        let mut v = F2Vec::zeros(self.module.dim(d));
        for m in sum.iter() {
            let g = self.index[m];
            debug_assert_eq!(self.module.degree_of(g), d);
            v.flip(self.module.position(g));
        }
        v
    }

    pub fn sum(&self, d: i64, v: &F2Vec) -> DLSum {
        let mut out = DLSum::zero();
        for p in v.ones() {
            out.toggle(self.monos[self.module.basis(d)[p]].clone());
        }
        out
    }

    pub fn mono_at(&self, d: i64, p: usize) -> &Mono {
        &self.monos[self.module.basis(d)[p]]
    }

    pub fn bound(&self) -> i64 {
        self.module.bound()
    }
}

/// Degree through which `R_s` of a module authoritative through `d` is
/// itself authoritative: generators above `d` only feed degrees
/// `>= 2^s (d+1)`.
pub fn authoritative_bound(s: usize, d: Option<i64>) -> Option<i64> {
    d.map(|d| (d + 1).saturating_mul(1i64 << s) - 1)
}

/// Builds `R_s(m)` in degrees at most `max_degree`, with the Steenrod
/// action from the Nishida relations.
pub fn build_rs(m: &FModule, s: usize, max_degree: i64) -> FreeDLModule {
    let mut monos: Vec<Mono> = Vec::new();
    for g in 0..m.num_gens() {
        let gdeg = m.degree_of(g);
        let budget = max_degree - (gdeg << s);
        lower_sequences(s, budget, &mut |seq| monos.push(Mono::from_lower(g, gdeg, seq)));
    }
    monos.sort_by_key(|x| (x.degree(), x.clone()));
    let bound = match authoritative_bound(s, m.max_degree) {
        Some(b) => b.min(max_degree),
        None => max_degree,
    };
    let name = if s == 0 { m.name.clone() } else { format!("R{s} {}", m.name) };
    let mut module = FModule::new(name, Some(bound));
    let mut index = HashMap::with_capacity(monos.len());
    for (k, x) in monos.iter().enumerate() {
        let label = x.render(m.label(x.gen));
        let g = module.add_gen(label, x.degree());
        debug_assert_eq!(g, k);
        index.insert(x.clone(), k);
    }
    let lo = module.min_degree().unwrap_or(0);
    use rayon::prelude::*;
    let actions: Vec<Vec<(u32, Vec<usize>)>> = monos
        .par_iter()
        .map(|x| {
            let d = x.degree();
            (1..=(d - lo) as u32)
                .filter_map(|r| {
                    let t = act_sq(x, r, m);
                    if t.is_zero() {
                        return None;
                    }
                    Some((r, t.iter().map(|y| index[y]).collect()))
                })
                .collect()
        })
        .collect();
    for (k, acts) in actions.into_iter().enumerate() {
        for (r, t) in acts {
            module.set_sq(k, r, &t);
        }
    }
    FreeDLModule { s, module, monos, index }
}

/// `epsilon: R_s(N)_n -> R_s(Sigma N)_{n+1}` as a graded map with shift 1.
pub fn epsilon(src: &FreeDLModule, tgt: &FreeDLModule) -> GradedMap {
    let mut blocks = std::collections::BTreeMap::new();
    for d in src.module.degrees() {
        let cols: Vec<F2Vec> = src
            .module
            .basis(d)
            .iter()
            .map(|&g| {
                let mut v = F2Vec::zeros(tgt.module.dim(d + 1));
                if let Some(e) = src.monos[g].epsilon() {
                    if let Some(k) = tgt.index_of(&e) {
                        v.set(tgt.module.position(k), true);
                    }
                }
                v
            })
            .collect();
        blocks.insert(d, F2Matrix::from_columns(tgt.module.dim(d + 1), &cols));
    }
    GradedMap { shift: 1, blocks }
}

/// `q0: Phi(R_{s-1} M) -> R_s M`, indexed by the degree `d` of the
/// undoubled source; the block at `d` lands in degree `2d`.
pub fn q0_map(src: &FreeDLModule, tgt: &FreeDLModule) -> GradedMap {
    let mut blocks = std::collections::BTreeMap::new();
    for d in src.module.degrees() {
        let cols: Vec<F2Vec> = src
            .module
            .basis(d)
            .iter()
            .map(|&g| {
                let mut v = F2Vec::zeros(tgt.module.dim(2 * d));
                if let Some(k) = tgt.index_of(&src.monos[g].q0()) {
                    v.set(tgt.module.position(k), true);
                }
                v
            })
            .collect();
        blocks.insert(d, F2Matrix::from_columns(tgt.module.dim(2 * d), &cols));
    }
    GradedMap { shift: 0, blocks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x1() -> Mono {
        Mono::bare(0, 1)
    }

    fn up(word: &[i64], gdeg: i64) -> DLSum {
        dl_adem_normalize(word, 0, gdeg)
    }

    #[test]
    fn normal_forms() {
        assert!(up(&[3, 1], 1).is_zero());
        let q21 = up(&[2, 1], 1);
        assert_eq!(q21.terms.len(), 1);
        assert_eq!(q21.iter().next().unwrap().upper(), vec![2, 1]);
        let q41 = up(&[4, 1], 1);
        assert_eq!(q41.terms.len(), 1);
        assert_eq!(q41.iter().next().unwrap().upper(), vec![3, 2]);
        assert!(up(&[0], 1).is_zero());
    }

    #[test]
    fn degrees_and_upper_indices() {
        let m = Mono::from_lower(0, 1, &[0, 1]);
        // Q_0 Q_1 x = Q^3 Q^2 x, degree 6
        assert_eq!(m.upper(), vec![3, 2]);
        assert_eq!(m.degree(), 6);
        assert_eq!(m.epsilon(), None);
        let m = Mono::from_lower(0, 1, &[1, 2]);
        let e = m.epsilon().unwrap();
        assert_eq!(e.idx.as_slice(), &[0, 1]);
        assert_eq!(e.upper(), m.upper());
        assert_eq!(e.epsilon_lift(), m);
    }

    #[test]
    fn bottom_operation() {
        let y = Mono::from_lower(0, 2, &[1]);
        let z = apply_q(y.degree(), &y);
        assert_eq!(z, DLSum::from_mono(y.q0()));
        assert!(apply_q(y.degree() - 1, &y).is_zero());
    }

    #[test]
    fn nishida_example() {
        let mut m = FModule::new("S1", None);
        m.add_gen("x", 1);
        let q2 = Mono::from_lower(0, 1, &[1]);
        let out = act_sq(&q2, 1, &m);
        assert_eq!(out, DLSum::from_mono(Mono::from_lower(0, 1, &[0])));
    }

    #[test]
    fn r1_of_circle() {
        let mut m = FModule::new("S1", None);
        m.add_gen("x", 1);
        let r = build_rs(&m, 1, 12);
        for n in 0..=12 {
            assert_eq!(r.module.dim(n), usize::from(n >= 2), "degree {n}");
        }
        assert!(r.module.validate().is_ok());
        let r0 = build_rs(&m, 0, 12);
        assert_eq!(r0.module.gens(), m.gens());
    }

    #[test]
    fn unstable_terms_never_survive() {
        for a in 0..8 {
            for b in 0..8 {
                for t in up(&[a, b], 1).iter() {
                    assert!(t.is_admissible());
                    assert_eq!(t.degree(), a + b + 1);
                }
            }
        }
        assert!(apply_q(0, &x1()).is_zero());
    }
}
