//! Dense linear algebra over F2 with bit-packed rows.
//!
//! Everything else in the crate reduces to elimination over F2, so the
//! types here are kept small: a packed vector, a row-major matrix, a
//! subspace held in reduced row-echelon form, and a few helpers for
//! kernels, images and subquotients.

use std::fmt;

use thiserror::Error;

const BITS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinAlgError {
    #[error("composite of the two maps is nonzero ({rows}x{cols} product has a nonzero entry)")]
    CompositeNonzero { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// A vector in F2^n, packed 64 entries per word.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct F2Vec {
    len: usize,
    words: Vec<u64>,
}

impl F2Vec {
    pub fn zeros(len: usize) -> Self {
        F2Vec { len, words: vec![0; len.div_ceil(BITS)] }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector by toggling each listed index (repeats cancel).
    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in idx {
            v.flip(i);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / BITS] >> (i % BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i % BITS);
        if b {
            self.words[i / BITS] |= m;
        } else {
            self.words[i / BITS] &= !m;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / BITS] ^= 1u64 << (i % BITS);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn add_assign(&mut self, other: &F2Vec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn sum(&self, other: &F2Vec) -> F2Vec {
        let mut v = self.clone();
        v.add_assign(other);
        v
    }

    pub fn dot(&self, other: &F2Vec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    pub fn first_one(&self) -> Option<usize> {
        for (k, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(k * BITS + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Indices of the nonzero entries, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * BITS + t)
                }
            })
        })
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// The vector restricted to the entries `start..start+len`.
    pub fn slice(&self, start: usize, len: usize) -> F2Vec {
        F2Vec::from_indices(len, self.ones().filter(|&i| i >= start && i < start + len).map(|i| i - start))
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &F2Vec) -> F2Vec {
        let mut v = F2Vec::zeros(self.len + other.len);
        for i in self.ones() {
            v.set(i, true);
        }
        for i in other.ones() {
            v.set(self.len + i, true);
        }
        v
    }
}

impl fmt::Debug for F2Vec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, "]")
    }
}

/// A rows x cols matrix over F2, stored row by row. A matrix acts on
/// column vectors, so it represents a map F2^cols -> F2^rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<F2Vec>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        F2Matrix { rows, cols, data: vec![F2Vec::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        F2Matrix { rows: rows.len(), cols, data: rows.iter().map(|r| F2Vec::from_bits(r)).collect() }
    }

    pub fn from_row_vecs(cols: usize, rows: Vec<F2Vec>) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "row length mismatch");
        F2Matrix { rows: rows.len(), cols, data: rows }
    }

    /// The matrix whose j-th column is `images[j]` (the image of the j-th
    /// basis vector of the domain).
    pub fn from_columns(rows: usize, images: &[F2Vec]) -> Self {
        let mut m = Self::zeros(rows, images.len());
        for (j, v) in images.iter().enumerate() {
            assert_eq!(v.len(), rows, "column length mismatch");
            for i in v.ones() {
                m.data[i].set(j, true);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, b: bool) {
        self.data[r].set(c, b)
    }

    pub fn row(&self, r: usize) -> &F2Vec {
        &self.data[r]
    }

    pub fn row_vecs(&self) -> &[F2Vec] {
        &self.data
    }

    pub fn column(&self, c: usize) -> F2Vec {
        F2Vec::from_indices(self.rows, (0..self.rows).filter(|&r| self.get(r, c)))
    }

    /// Columns as vectors, i.e. the images of the domain basis.
    pub fn columns(&self) -> Vec<F2Vec> {
        self.transpose().data
    }

    pub fn transpose(&self) -> F2Matrix {
        let mut t = F2Matrix::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for c in row.ones() {
                t.data[c].set(r, true);
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(F2Vec::is_zero)
    }

    /// Matrix-vector product `self * v`.
    pub fn apply(&self, v: &F2Vec) -> F2Vec {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        F2Vec::from_indices(self.rows, (0..self.rows).filter(|&r| self.data[r].dot(v)))
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &F2Matrix) -> F2Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = F2Matrix::zeros(self.rows, other.cols);
        for (r, row) in self.data.iter().enumerate() {
            for k in row.ones() {
                out.data[r].add_assign(&other.data[k]);
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        rref(self).rank
    }
}

impl fmt::Debug for F2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "F2Matrix {}x{}", self.rows, self.cols)?;
        for r in &self.data {
            writeln!(f, "  {r:?}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub rank: usize,
    pub echelon: F2Matrix,
    pub pivots: Vec<usize>,
}

/// Reduced row-echelon form. Zero rows are moved to the bottom.
pub fn rref(m: &F2Matrix) -> Rref {
    let mut rows = m.data.clone();
    let pivots = eliminate(&mut rows);
    let rank = pivots.len();
    let mut data: Vec<F2Vec> = rows;
    data.resize(m.rows, F2Vec::zeros(m.cols));
    Rref { rank, echelon: F2Matrix { rows: m.rows, cols: m.cols, data }, pivots }
}

/// Gauss-Jordan elimination in place. On return `rows` is in reduced
/// echelon form with strictly increasing pivots; zero rows are dropped.
fn eliminate(rows: &mut Vec<F2Vec>) -> Vec<usize> {
    eliminate_tracked(rows, &mut Vec::new())
}

/// Gauss-Jordan elimination carrying a companion vector per row, which
/// receives the same row operations. Zero rows (and their companions) are
/// moved past the returned rank but kept.
fn eliminate_tracked(rows: &mut Vec<F2Vec>, companions: &mut [F2Vec]) -> Vec<usize> {
    let tracked = !companions.is_empty();
    if tracked {
        assert_eq!(rows.len(), companions.len());
    }
    let ncols = rows.first().map_or(0, F2Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| rows[i].get(c)) else {
            continue;
        };
        rows.swap(r, p);
        if tracked {
            companions.swap(r, p);
        }
        let (head, tail) = rows.split_at_mut(r);
        let (prow, tail) = tail.split_first_mut().unwrap();
        for (i, row) in head.iter_mut().chain(tail.iter_mut()).enumerate() {
            if row.get(c) {
                row.add_assign(prow);
                if tracked {
                    let idx = if i < r { i } else { i + 1 };
                    let src = companions[r].clone();
                    companions[idx].add_assign(&src);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if !tracked {
        rows.truncate(r);
    }
    pivots
}

/// A subspace of F2^n, held as its canonical reduced echelon basis.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<F2Vec>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: (0..ambient).map(|i| F2Vec::unit(ambient, i)).collect(),
            pivots: (0..ambient).collect(),
        }
    }

    pub fn span(ambient: usize, vecs: impl IntoIterator<Item = F2Vec>) -> Self {
        let mut rows: Vec<F2Vec> = vecs.into_iter().collect();
        assert!(rows.iter().all(|v| v.len() == ambient), "vector length mismatch");
        let pivots = eliminate(&mut rows);
        Subspace { ambient, basis: rows, pivots }
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[F2Vec] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// The residue of `v` after clearing every pivot column.
    pub fn reduce(&self, v: &F2Vec) -> F2Vec {
        let mut v = v.clone();
        for (b, &p) in self.basis.iter().zip(&self.pivots) {
            if v.get(p) {
                v.add_assign(b);
            }
        }
        v
    }

    pub fn contains(&self, v: &F2Vec) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn contains_space(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::span(self.ambient, self.basis.iter().chain(other.basis.iter()).cloned())
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        // Solve a + b = 0 with a in self, b in other: the kernel of
        // [self; other]^T restricted to the first block spans the meet.
        let k = self.dim();
        let mut rows: Vec<F2Vec> = self.basis.iter().chain(other.basis.iter()).cloned().collect();
        let mut comp: Vec<F2Vec> = (0..rows.len()).map(|i| F2Vec::unit(rows.len(), i)).collect();
        if rows.is_empty() {
            return Subspace::zero(self.ambient);
        }
        let rank = eliminate_tracked(&mut rows, &mut comp).len();
        let meet = comp[rank..].iter().map(|c| {
            let mut v = F2Vec::zeros(self.ambient);
            for i in c.ones().filter(|&i| i < k) {
                v.add_assign(&self.basis[i]);
            }
            v
        });
        Subspace::span(self.ambient, meet.collect::<Vec<_>>())
    }

    /// Preimage of this subspace under `m` (a map into this ambient space).
    pub fn preimage(&self, m: &F2Matrix) -> Subspace {
        assert_eq!(m.rows(), self.ambient);
        let images: Vec<F2Vec> = m.columns().iter().map(|c| self.reduce(c)).collect();
        let reduced = F2Matrix::from_columns(self.ambient, &images);
        kernel_image(&reduced).0
    }

    /// Image of this subspace under `m`.
    pub fn image(&self, m: &F2Matrix) -> Subspace {
        assert_eq!(m.cols(), self.ambient);
        Subspace::span(m.rows(), self.basis.iter().map(|v| m.apply(v)).collect::<Vec<_>>())
    }

    /// Basis vectors of a complement: the standard vectors on non-pivot
    /// columns, in increasing order.
    pub fn complement_indices(&self) -> Vec<usize> {
        let mut is_pivot = vec![false; self.ambient];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.ambient).filter(|&i| !is_pivot[i]).collect()
    }
}

/// Kernel (in the domain F2^cols) and image (in F2^rows) of `m`.
pub fn kernel_image(m: &F2Matrix) -> (Subspace, Subspace) {
    let n = m.cols();
    let mut rows = m.columns();
    if n == 0 {
        return (Subspace::zero(0), Subspace::zero(m.rows()));
    }
    let mut comp: Vec<F2Vec> = (0..n).map(|i| F2Vec::unit(n, i)).collect();
    let pivots = eliminate_tracked(&mut rows, &mut comp);
    let rank = pivots.len();
    let image = Subspace { ambient: m.rows(), basis: rows[..rank].to_vec(), pivots };
    let kernel = Subspace::span(n, comp.split_off(rank));
    (kernel, image)
}

/// Expresses vectors in terms of a fixed linearly independent family.
#[derive(Clone, Debug)]
pub struct Coordinates {
    ambient: usize,
    family: usize,
    rows: Vec<F2Vec>,
    combos: Vec<F2Vec>,
    pivots: Vec<usize>,
}

impl Coordinates {
    /// Panics if the family is dependent.
    pub fn new(ambient: usize, family: &[F2Vec]) -> Self {
        let k = family.len();
        let mut rows = family.to_vec();
        let mut combos: Vec<F2Vec> = (0..k).map(|i| F2Vec::unit(k, i)).collect();
        let pivots = if k == 0 { Vec::new() } else { eliminate_tracked(&mut rows, &mut combos) };
        assert_eq!(pivots.len(), k, "family is linearly dependent");
        Coordinates { ambient, family: k, rows, combos, pivots }
    }

    pub fn family_len(&self) -> usize {
        self.family
    }

    /// Coefficients `c` with `v = sum c_i family[i]`, or `None` when `v` is
    /// outside the span.
    pub fn coords(&self, v: &F2Vec) -> Option<F2Vec> {
        assert_eq!(v.len(), self.ambient, "vector length mismatch");
        let mut v = v.clone();
        let mut c = F2Vec::zeros(self.family);
        for ((row, combo), &p) in self.rows.iter().zip(&self.combos).zip(&self.pivots) {
            if v.get(p) {
                v.add_assign(row);
                c.add_assign(combo);
            }
        }
        v.is_zero().then_some(c)
    }
}

/// A subquotient `numerator / denominator` of F2^n with a chosen basis of
/// representatives.
#[derive(Clone, Debug)]
pub struct Subquotient {
    pub numerator: Subspace,
    pub denominator: Subspace,
    pub reps: Vec<F2Vec>,
    coords: Coordinates,
}

impl Subquotient {
    /// `denominator` must lie inside `numerator`. Representatives are the
    /// echelon rows of the numerator that are new modulo the denominator.
    pub fn new(numerator: Subspace, denominator: Subspace) -> Self {
        assert!(numerator.contains_space(&denominator), "denominator not inside numerator");
        let mut acc = denominator.clone();
        let mut reps = Vec::new();
        for v in numerator.basis() {
            let r = acc.reduce(v);
            if !r.is_zero() {
                reps.push(v.clone());
                acc = acc.sum(&Subspace::span(acc.ambient_dim(), [r]));
            }
        }
        Self::with_reps(numerator, denominator, reps)
    }

    pub fn with_reps(numerator: Subspace, denominator: Subspace, reps: Vec<F2Vec>) -> Self {
        let n = numerator.ambient_dim();
        let family: Vec<F2Vec> = reps.iter().chain(denominator.basis()).cloned().collect();
        let coords = Coordinates::new(n, &family);
        assert_eq!(reps.len() + denominator.dim(), numerator.dim(), "representatives do not span");
        Subquotient { numerator, denominator, reps, coords }
    }

    pub fn quotient_of(ambient: usize, denominator: Subspace) -> Self {
        let num = Subspace::full(ambient);
        let reps = denominator.complement_indices().into_iter().map(|i| F2Vec::unit(ambient, i)).collect();
        Self::with_reps(num, denominator, reps)
    }

    pub fn ambient_dim(&self) -> usize {
        self.numerator.ambient_dim()
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Class of `v` in the chosen basis, or `None` if `v` is not in the
    /// numerator.
    pub fn project(&self, v: &F2Vec) -> Option<F2Vec> {
        self.coords.coords(v).map(|c| c.slice(0, self.reps.len()))
    }

    /// A representative of the class with the given coordinates.
    pub fn lift(&self, c: &F2Vec) -> F2Vec {
        let mut v = F2Vec::zeros(self.ambient_dim());
        for i in c.ones() {
            v.add_assign(&self.reps[i]);
        }
        v
    }
}

/// Homology of `A --d_in--> B --d_out--> C` at `B`.
#[derive(Clone, Debug)]
pub struct Homology {
    pub dim: usize,
    pub cycle_reps: Vec<F2Vec>,
    pub sub: Subquotient,
}

impl Homology {
    /// Homology coordinates of a cycle; `None` for non-cycles.
    pub fn project(&self, v: &F2Vec) -> Option<F2Vec> {
        self.sub.project(v)
    }
}

pub fn subquotient_homology(d_in: &F2Matrix, d_out: &F2Matrix) -> Result<Homology, LinAlgError> {
    if d_in.rows() != d_out.cols() {
        return Err(LinAlgError::Shape(format!(
            "d_in lands in dimension {}, d_out starts in dimension {}",
            d_in.rows(),
            d_out.cols()
        )));
    }
    let comp = d_out.mul(d_in);
    if !comp.is_zero() {
        return Err(LinAlgError::CompositeNonzero { rows: comp.rows(), cols: comp.cols() });
    }
    let (z, _) = kernel_image(d_out);
    let (_, b) = kernel_image(d_in);
    let sub = Subquotient::new(z, b);
    Ok(Homology { dim: sub.dim(), cycle_reps: sub.reps.clone(), sub })
}
