//! Independent oracles shared by the integration tests and the acceptance
//! run. Nothing here calls the rewriting or barcode code under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use destab::amodule::FModule;
use destab::f2linalg::{kernel_image, F2Matrix};
use destab::hopfss::{BarcodeModule, Column, DiffBarcode};
use destab::modlib::builtin;

pub const FIXTURES: &[&str] = &[
    "sphere:0",
    "sphere:1",
    "sphere:3",
    "rp:3",
    "rp:4",
    "rp4-ext",
    "cp2-desusp",
    "dual-steenrod:10",
    "hz:12",
    "hz2r:12",
];

pub fn fixtures() -> Vec<FModule> {
    FIXTURES.iter().map(|n| builtin(n).expect("fixture builds")).collect()
}

/// `binom(n, k) mod 2` from Pascal's triangle, for `0 <= n < 256`.
pub fn pascal2(n: i64, k: i64) -> bool {
    static TABLE: OnceLock<Vec<Vec<bool>>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut rows = vec![vec![true]];
        for n in 1..256usize {
            let prev = &rows[n - 1];
            let row: Vec<bool> = (0..=n)
                .map(|k| {
                    let a = if k > 0 { prev[k - 1] } else { false };
                    let b = if k < n { prev[k] } else { false };
                    a ^ b
                })
                .collect();
            rows.push(row);
        }
        rows
    });
    assert!((0..256).contains(&n), "pascal2 table covers 0..256");
    if k < 0 || k > n {
        return false;
    }
    t[n as usize][k as usize]
}

#[derive(Clone, Copy, Debug)]
pub enum Strategy {
    Leftmost,
    Rightmost,
    Random(u64),
}

impl Strategy {
    fn pick(&self, n: usize, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Strategy::Leftmost => 0,
            Strategy::Rightmost => n - 1,
            Strategy::Random(_) => rng.gen_range(0..n),
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        match self {
            Strategy::Random(seed) => ChaCha8Rng::seed_from_u64(*seed),
            _ => ChaCha8Rng::seed_from_u64(0),
        }
    }
}

fn toggle<T: Ord>(set: &mut BTreeSet<T>, x: T) {
    if !set.remove(&x) {
        set.insert(x);
    }
}

/// Admissible normal form of a Steenrod word, rewriting pairs in the order
/// the strategy chooses. Words are composed left to right as written.
pub fn sq_rewrite(word: &[u32], strategy: Strategy) -> BTreeSet<Vec<u32>> {
    let mut rng = strategy.rng();
    let mut out = BTreeSet::new();
    let mut pending = vec![word.to_vec()];
    while let Some(w) = pending.pop() {
        if w.contains(&0) {
            pending.push(w.into_iter().filter(|&i| i > 0).collect());
            continue;
        }
        let bad: Vec<usize> = (0..w.len().saturating_sub(1)).filter(|&p| w[p] < 2 * w[p + 1]).collect();
        if bad.is_empty() {
            toggle(&mut out, w);
            continue;
        }
        let p = bad[strategy.pick(bad.len(), &mut rng)];
        let (a, b) = (w[p] as i64, w[p + 1] as i64);
        for j in 0..=a / 2 {
            if pascal2(b - 1 - j, a - 2 * j) {
                let mut nw = w[..p].to_vec();
                nw.push((a + b - j) as u32);
                nw.push(j as u32);
                nw.extend_from_slice(&w[p + 2..]);
                pending.push(nw);
            }
        }
    }
    out
}

/// Normal form of `Q^{w_0} Q^{w_1} ... x` (upper indices, outermost
/// first, `|x| = gdeg`) as lower-index sequences, rewriting with the
/// Adem and unstable relations in the order the strategy chooses.
pub fn dl_rewrite(word: &[i64], gdeg: i64, strategy: Strategy) -> BTreeSet<Vec<i64>> {
    let mut rng = strategy.rng();
    let mut out = BTreeSet::new();
    let mut pending = vec![word.to_vec()];
    // degree of the element that w[p] is applied to
    let below = |w: &[i64], p: usize| gdeg + w[p + 1..].iter().sum::<i64>();
    while let Some(w) = pending.pop() {
        // (position, is_unstable_zero)
        let mut moves: Vec<(usize, bool)> = Vec::new();
        for p in 0..w.len() {
            if w[p] < below(&w, p) {
                moves.push((p, true));
            }
            if p + 1 < w.len() && w[p] > 2 * w[p + 1] {
                moves.push((p, false));
            }
        }
        if moves.is_empty() {
            let lower = (0..w.len()).map(|p| w[p] - below(&w, p)).collect();
            toggle(&mut out, lower);
            continue;
        }
        let (p, zero) = moves[strategy.pick(moves.len(), &mut rng)];
        if zero {
            continue;
        }
        let (r, s) = (w[p], w[p + 1]);
        for i in (r + 1) / 2..=r - s - 1 {
            if pascal2(i - s - 1, 2 * i - r) {
                let mut nw = w[..p].to_vec();
                nw.push(r + s - i);
                nw.push(i);
                nw.extend_from_slice(&w[p + 2..]);
                pending.push(nw);
            }
        }
    }
    out
}

/// All words of positive entries with length `1..=max_len` and entry sum
/// at most `max_sum`.
pub fn words(max_len: usize, max_sum: i64, min_entry: i64) -> Vec<Vec<i64>> {
    fn rec(len: usize, budget: i64, min_entry: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if len == 0 {
            out.push(cur.clone());
            return;
        }
        for e in min_entry..=budget {
            cur.push(e);
            rec(len - 1, budget - e, min_entry, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for len in 1..=max_len {
        rec(len, max_sum, min_entry, &mut Vec::new(), &mut out);
    }
    out
}

/// Number of admissible lower sequences of length `s` on a generator of
/// degree `g` landing in degree `n`, by direct enumeration.
pub fn count_admissible(s: usize, g: i64, n: i64) -> usize {
    fn rec(k: usize, s: usize, min: i64, remaining: i64) -> usize {
        if k == s {
            return usize::from(remaining == 0);
        }
        let mut c = 0;
        let mut i = min;
        while i * (1i64 << k) <= remaining {
            c += rec(k + 1, s, i, remaining - i * (1i64 << k));
            i += 1;
        }
        c
    }
    let base = g * (1i64 << s);
    if n < base {
        return 0;
    }
    rec(0, s, 0, n - base)
}

/// A differential barcode module small enough to expand in full.
#[derive(Clone, Debug)]
pub struct HopfInstance {
    pub top: usize,
    /// (column, degree) per primitive basis element
    pub prims: Vec<(usize, i64)>,
    /// `q` of each primitive as a set of primitives
    pub q: Vec<Vec<usize>>,
    pub s: usize,
    pub t: usize,
    pub shift: i64,
    /// `d` of each primitive in column `s`
    pub d: Vec<Vec<usize>>,
}

impl HopfInstance {
    fn block(&self, k: usize, e: i64) -> Vec<usize> {
        (0..self.prims.len()).filter(|&p| self.prims[p] == (k, e)).collect()
    }

    fn matrix(&self, src: &[usize], tgt: &[usize], f: &[Vec<usize>]) -> F2Matrix {
        let mut m = F2Matrix::zeros(tgt.len(), src.len());
        for (c, &p) in src.iter().enumerate() {
            for &r in &f[p] {
                let row = tgt.iter().position(|&x| x == r).expect("target in block");
                m.set(row, c, !m.get(row, c));
            }
        }
        m
    }

    pub fn to_diff_barcode(&self) -> DiffBarcode {
        let mut columns = Vec::new();
        for k in 0..=self.top {
            let mut c = Column { bound: 1000, ..Column::default() };
            for &(col, e) in &self.prims {
                if col == k {
                    *c.dims.entry(e).or_default() += 1;
                }
            }
            if k < self.top {
                for &e in c.dims.keys() {
                    let src = self.block(k, e);
                    let tgt = self.block(k + 1, 2 * e);
                    c.q.insert(e, self.matrix(&src, &tgt, &self.q));
                }
            }
            columns.push(c);
        }
        let mut d = BTreeMap::new();
        for &e in columns[self.s].dims.keys() {
            let src = self.block(self.s, e);
            let tgt = self.block(self.t, e + self.shift);
            d.insert(e, self.matrix(&src, &tgt, &self.d));
        }
        DiffBarcode { v: BarcodeModule { columns }, s: self.s, t: self.t, shift: self.shift, d }
    }

    /// Whether `q` carries part of `im d` into a column still in range, so
    /// that the quotient has to be pushed forward.
    pub fn propagates(&self) -> bool {
        if (1u64 << (self.t + 1)) > self.max_weight() - self.weight_shift() {
            return false;
        }
        let p = self.to_diff_barcode();
        p.d.iter().any(|(&e, d)| {
            let img = kernel_image(d).1;
            p.v.columns[self.t].q.get(&(e + self.shift)).is_some_and(|q| img.image(q).dim() > 0)
        })
    }

    pub fn max_weight(&self) -> u64 {
        (1u64 << (self.top + 1)) - 1
    }

    /// Weight added by the differential.
    pub fn weight_shift(&self) -> u64 {
        (1u64 << self.t) - (1u64 << self.s)
    }

    fn weight(&self, mask: u32) -> u64 {
        (0..self.prims.len()).filter(|p| mask >> p & 1 == 1).map(|p| 1u64 << self.prims[p].0).sum()
    }

    fn degree(&self, mask: u32) -> i64 {
        (0..self.prims.len()).filter(|p| mask >> p & 1 == 1).map(|p| self.prims[p].1).sum()
    }

    /// `mask * x_p` in the square-free basis, using `x^2 = q(x)`.
    fn times(&self, mask: u32, p: usize) -> BTreeSet<u32> {
        let bit = 1u32 << p;
        if mask & bit == 0 {
            return [mask | bit].into_iter().collect();
        }
        let rest = mask & !bit;
        let mut out = BTreeSet::new();
        for &r in &self.q[p] {
            for m in self.times(rest, r) {
                toggle(&mut out, m);
            }
        }
        out
    }

    /// The derivation extending `d` on primitives.
    fn diff(&self, mask: u32) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for p in 0..self.prims.len() {
            if mask >> p & 1 == 0 || self.prims[p].0 != self.s {
                continue;
            }
            let rest = mask & !(1 << p);
            for &r in &self.d[p] {
                for m in self.times(rest, r) {
                    toggle(&mut out, m);
                }
            }
        }
        out
    }

    /// Homology of `(U_q(V), d)` by (weight, degree), for weights where
    /// truncating at the top column does not interfere.
    pub fn brute_force_homology(&self) -> BTreeMap<(u64, i64), u64> {
        let n = self.prims.len();
        let mut cells: BTreeMap<(u64, i64), Vec<u32>> = BTreeMap::new();
        for mask in 0..(1u32 << n) {
            cells.entry((self.weight(mask), self.degree(mask))).or_default().push(mask);
        }
        let r = self.weight_shift();
        let rank_from = |w: u64, e: i64| -> usize {
            let Some(src) = cells.get(&(w, e)) else { return 0 };
            let tgt = cells.get(&(w + r, e + self.shift)).cloned().unwrap_or_default();
            let mut m = F2Matrix::zeros(tgt.len(), src.len());
            for (c, &mask) in src.iter().enumerate() {
                for img in self.diff(mask) {
                    let row = tgt.iter().position(|&x| x == img).expect("d preserves the bigrading");
                    m.set(row, c, true);
                }
            }
            m.rank()
        };
        let mut out = BTreeMap::new();
        for (&(w, e), basis) in &cells {
            if w + r > self.max_weight() {
                continue;
            }
            let outgoing = rank_from(w, e);
            let incoming = if w >= r { rank_from(w - r, e - self.shift) } else { 0 };
            let h = basis.len() - outgoing - incoming;
            if h > 0 {
                out.insert((w, e), h as u64);
            }
        }
        out
    }
}

/// A random instance with at most six primitives in degrees `1..=12`,
/// satisfying the diamond condition from column `t` and `d q = 0`.
pub fn random_instance(rng: &mut ChaCha8Rng) -> HopfInstance {
    loop {
        let top = rng.gen_range(1..=3usize);
        // half the time, plant a -d-> b -q-> c so that im d propagates
        let planted = top >= 2 && rng.gen_bool(0.5);
        let s = rng.gen_range(0..if planted { top - 1 } else { top });
        let t = rng.gen_range(s + 1..=if planted { top - 1 } else { top });
        let count = rng.gen_range(if planted { 3 } else { 2 }..=6usize);
        let mut prims: Vec<(usize, i64)> = Vec::new();
        let mut planted_shift = None;
        if planted {
            let eb = rng.gen_range(1..=6i64);
            let ea = rng.gen_range(1..=12i64);
            prims.extend([(s, ea), (t, eb), (t + 1, 2 * eb)]);
            planted_shift = Some(eb - ea);
        }
        while prims.len() < count {
            let doubles: Vec<(usize, i64)> =
                prims.iter().filter(|&&(k, e)| k < top && 2 * e <= 12).map(|&(k, e)| (k + 1, 2 * e)).collect();
            if !doubles.is_empty() && rng.gen_bool(0.5) {
                prims.push(doubles[rng.gen_range(0..doubles.len())]);
            } else {
                prims.push((rng.gen_range(0..=top), rng.gen_range(1..=12)));
            }
        }
        let n = prims.len();
        let mut q = vec![Vec::new(); n];
        let mut ok = true;
        // q block by block, monic from column t on
        let blocks: BTreeSet<(usize, i64)> = prims.iter().copied().filter(|&(k, _)| k < top).collect();
        for (k, e) in blocks {
            let src: Vec<usize> = (0..n).filter(|&p| prims[p] == (k, e)).collect();
            let tgt: Vec<usize> = (0..n).filter(|&p| prims[p] == (k + 1, 2 * e)).collect();
            let monic = k >= t;
            let mut found = false;
            for _ in 0..32 {
                let pick: Vec<Vec<usize>> =
                    src.iter().map(|_| tgt.iter().copied().filter(|_| rng.gen_bool(0.6)).collect()).collect();
                let mut m = F2Matrix::zeros(tgt.len(), src.len());
                for (c, img) in pick.iter().enumerate() {
                    for r in img {
                        let row = tgt.iter().position(|x| x == r).unwrap();
                        m.set(row, c, true);
                    }
                }
                if !monic || m.rank() == src.len() {
                    for (c, &p) in src.iter().enumerate() {
                        q[p] = pick[c].clone();
                    }
                    found = true;
                    break;
                }
            }
            if !found {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let in_s: Vec<usize> = (0..n).filter(|&p| prims[p].0 == s).collect();
        let in_t: Vec<usize> = (0..n).filter(|&p| prims[p].0 == t).collect();
        let shift = if let Some(sh) = planted_shift {
            sh
        } else if !in_s.is_empty() && !in_t.is_empty() {
            prims[in_t[rng.gen_range(0..in_t.len())]].1 - prims[in_s[rng.gen_range(0..in_s.len())]].1
        } else {
            rng.gen_range(-3..=3)
        };
        let mut d = vec![Vec::new(); n];
        for _ in 0..32 {
            let mut trial = vec![Vec::new(); n];
            for &p in &in_s {
                trial[p] =
                    in_t.iter().copied().filter(|&r| prims[r].1 == prims[p].1 + shift && rng.gen_bool(0.7)).collect();
            }
            // d q = 0 on column s - 1
            let kills_q = (0..n).filter(|&u| s > 0 && prims[u].0 == s - 1).all(|u| {
                let mut acc = BTreeSet::new();
                for &v in &q[u] {
                    for &w in &trial[v] {
                        toggle(&mut acc, w);
                    }
                }
                acc.is_empty()
            });
            if kills_q {
                d = trial;
                break;
            }
        }
        // mostly keep instances where the differential does something
        if d.iter().all(|v| v.is_empty()) && rng.gen_bool(0.9) {
            continue;
        }
        return HopfInstance { top, prims, q, s, t, shift, d };
    }
}

/// Series of `E^1 = U_Q(R_* M)` from the admissible monomials directly:
/// `Q_0` is injective, so `E^1` is polynomial on the monomials that do not
/// start with `Q_0`.
pub fn e1_series_oracle(m: &FModule, top: usize, max_n: i64) -> BTreeMap<(u64, i64), u64> {
    let max_weight = (1u64 << (top + 1)) - 1;
    let mut gens: Vec<(u64, i64)> = Vec::new();
    for k in 0..=top {
        for g in 0..m.num_gens() {
            let d = m.degree_of(g);
            for n in (d << k)..=max_n {
                let mut c = count_admissible(k, d, n);
                if k > 0 {
                    // those starting with Q_0 are Q_0 of a length k-1 monomial in degree n/2
                    if n % 2 == 0 {
                        c -= count_admissible(k - 1, d, n / 2);
                    }
                }
                for _ in 0..c {
                    gens.push((1 << k, n));
                }
            }
        }
    }
    let mut acc: BTreeMap<(u64, i64), u64> = [((0, 0), 1)].into_iter().collect();
    for (w, e) in gens {
        let mut next: BTreeMap<(u64, i64), u64> = BTreeMap::new();
        for (&(aw, an), &c) in &acc {
            let mut j = 0u64;
            while aw + j * w <= max_weight {
                let n = an + j as i64 * e;
                if n <= max_n {
                    *next.entry((aw + j * w, n)).or_default() += c;
                }
                j += 1;
            }
        }
        acc = next;
    }
    acc
}
