//! Truncated, locally finite right modules over the Steenrod algebra.
//!
//! The action is right-handed and lowers degree: `|x Sq^i| = |x| - i`,
//! and `x (Sq^a Sq^b) = (x Sq^a) Sq^b`. A module knows the degree `D`
//! through which it is authoritative; `None` means the module is complete.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::f2linalg::{Coordinates, F2Matrix, F2Vec, Subspace};
use crate::steenrod::adem_sq;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModuleError {
    #[error("{element} (degree {degree}): {relation}")]
    Validation { element: String, degree: i64, relation: String },
    #[error("module {0} is not unstable: {1}")]
    NotUnstable(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub label: String,
    pub degree: i64,
}

/// A right module with a finite homogeneous basis. `Sq^i` for `i >= 1` is
/// stored sparsely per basis element as the list of basis elements in its
/// image; missing entries are zero.
#[derive(Clone, PartialEq, Eq)]
pub struct FModule {
    pub name: String,
    pub max_degree: Option<i64>,
    gens: Vec<Generator>,
    by_degree: BTreeMap<i64, Vec<usize>>,
    position: Vec<usize>,
    action: Vec<BTreeMap<u32, Vec<usize>>>,
}

impl fmt::Debug for FModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FModule {} (through {:?})", self.name, self.max_degree)?;
        for (g, gen) in self.gens.iter().enumerate() {
            write!(f, "  {} [{}]", gen.label, gen.degree)?;
            for (i, t) in &self.action[g] {
                let names: Vec<&str> = t.iter().map(|&j| self.gens[j].label.as_str()).collect();
                write!(f, "  Sq{i} -> {}", names.join("+"))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FModule {
    pub fn new(name: impl Into<String>, max_degree: Option<i64>) -> Self {
        FModule {
            name: name.into(),
            max_degree,
            gens: Vec::new(),
            by_degree: BTreeMap::new(),
            position: Vec::new(),
            action: Vec::new(),
        }
    }

    /// Adds a basis element; returns its index.
    pub fn add_gen(&mut self, label: impl Into<String>, degree: i64) -> usize {
        let g = self.gens.len();
        self.gens.push(Generator { label: label.into(), degree });
        let slot = self.by_degree.entry(degree).or_default();
        self.position.push(slot.len());
        slot.push(g);
        self.action.push(BTreeMap::new());
        g
    }

    /// Sets `x Sq^i` to the sum of the listed basis elements (repeats
    /// cancel). Panics if a target has the wrong degree.
    pub fn set_sq(&mut self, x: usize, i: u32, targets: &[usize]) {
        assert!(i >= 1, "Sq0 acts as the identity");
        let want = self.gens[x].degree - i as i64;
        let mut t: Vec<usize> = Vec::new();
        for &y in targets {
            assert_eq!(self.gens[y].degree, want, "Sq{i} on {} has wrong degree", self.gens[x].label);
            if let Some(p) = t.iter().position(|&z| z == y) {
                t.remove(p);
            } else {
                t.push(y);
            }
        }
        t.sort_unstable();
        if t.is_empty() {
            self.action[x].remove(&i);
        } else {
            self.action[x].insert(i, t);
        }
    }

    pub fn gens(&self) -> &[Generator] {
        &self.gens
    }

    pub fn num_gens(&self) -> usize {
        self.gens.len()
    }

    pub fn degree_of(&self, g: usize) -> i64 {
        self.gens[g].degree
    }

    pub fn label(&self, g: usize) -> &str {
        &self.gens[g].label
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.label == label)
    }

    /// Position of a basis element within its degree.
    pub fn position(&self, g: usize) -> usize {
        self.position[g]
    }

    /// Degrees with a nonzero basis, ascending.
    pub fn degrees(&self) -> impl Iterator<Item = i64> + '_ {
        self.by_degree.keys().copied()
    }

    pub fn basis(&self, d: i64) -> &[usize] {
        self.by_degree.get(&d).map_or(&[], Vec::as_slice)
    }

    pub fn dim(&self, d: i64) -> usize {
        self.basis(d).len()
    }

    pub fn min_degree(&self) -> Option<i64> {
        self.by_degree.keys().next().copied()
    }

    pub fn top_degree(&self) -> Option<i64> {
        self.by_degree.keys().next_back().copied()
    }

    /// Degrees through which the module is authoritative; `i64::MAX` for
    /// complete modules.
    pub fn bound(&self) -> i64 {
        self.max_degree.unwrap_or(i64::MAX)
    }

    /// The nonzero `Sq^i` (i >= 1) on a basis element.
    pub fn actions(&self, g: usize) -> &BTreeMap<u32, Vec<usize>> {
        &self.action[g]
    }

    /// `g Sq^i` as a list of basis elements; `Sq^0` is the identity.
    pub fn sq(&self, g: usize, i: u32) -> Vec<usize> {
        if i == 0 {
            return vec![g];
        }
        self.action[g].get(&i).cloned().unwrap_or_default()
    }

    /// `v Sq^i` for a vector `v` in degree `d`, in the basis of degree `d - i`.
    pub fn act(&self, d: i64, v: &F2Vec, i: u32) -> F2Vec {
        let t = d - i as i64;
        let mut out = F2Vec::zeros(self.dim(t));
        for p in v.ones() {
            let g = self.basis(d)[p];
            for y in self.sq(g, i) {
                out.flip(self.position[y]);
            }
        }
        out
    }

    /// The matrix of `Sq^i` from degree `d` to degree `d - i`.
    pub fn sq_matrix(&self, d: i64, i: u32) -> F2Matrix {
        let t = d - i as i64;
        let cols: Vec<F2Vec> = (0..self.dim(d)).map(|p| self.act(d, &F2Vec::unit(self.dim(d), p), i)).collect();
        F2Matrix::from_columns(self.dim(t), &cols)
    }

    /// Applies `Sq^{w1} Sq^{w2} ...` on the right, left to right.
    pub fn act_word(&self, d: i64, v: &F2Vec, word: &[u32]) -> F2Vec {
        let mut v = v.clone();
        let mut d = d;
        for &i in word {
            v = self.act(d, &v, i);
            d -= i as i64;
        }
        v
    }

    pub fn vector_label(&self, d: i64, v: &F2Vec) -> String {
        if v.is_zero() {
            return "0".into();
        }
        let parts: Vec<&str> = v.ones().map(|p| self.label(self.basis(d)[p])).collect();
        parts.join(" + ")
    }

    /// Checks every Adem relation `Sq^a Sq^b` (a < 2b) on every basis
    /// element, using right composition.
    pub fn validate(&self) -> Result<ValidationReport, ModuleError> {
        let Some(lo) = self.min_degree() else {
            return Ok(ValidationReport::default());
        };
        let mut checked = 0usize;
        for (g, gen) in self.gens.iter().enumerate() {
            let d = gen.degree;
            let span = (d - lo).max(0) as u32;
            let unit = F2Vec::unit(self.dim(d), self.position[g]);
            for b in 1..=span {
                for a in 1..(2 * b).min(span + 1) {
                    if a + b > span {
                        break;
                    }
                    let lhs = self.act_word(d, &unit, &[a, b]);
                    let mut rhs = F2Vec::zeros(lhs.len());
                    for w in adem_sq(a, b) {
                        rhs.add_assign(&self.act_word(d, &unit, &w));
                    }
                    checked += 1;
                    if lhs != rhs {
                        let t = d - (a + b) as i64;
                        return Err(ModuleError::Validation {
                            element: gen.label.clone(),
                            degree: d,
                            relation: format!(
                                "Adem relation for Sq{a}Sq{b} fails: (x Sq{a})Sq{b} = {}, expansion gives {}",
                                self.vector_label(t, &lhs),
                                self.vector_label(t, &rhs)
                            ),
                        });
                    }
                }
            }
        }
        Ok(ValidationReport { generators: self.gens.len(), relations_checked: checked })
    }

    pub fn suspend(&self, k: i64) -> FModule {
        let name = if k == 0 { self.name.clone() } else { format!("S^{k} {}", self.name) };
        let mut m = FModule::new(name, self.max_degree.map(|d| d + k));
        for g in &self.gens {
            m.add_gen(g.label.clone(), g.degree + k);
        }
        m.action = self.action.clone();
        m
    }

    /// The doubling functor: `Phi(M)_{2n} = M_n`, `phi(x)Sq^{2i} = phi(xSq^i)`,
    /// odd squares zero.
    pub fn phi(&self) -> FModule {
        let mut m = FModule::new(format!("Phi {}", self.name), self.max_degree.map(|d| 2 * d));
        for g in &self.gens {
            m.add_gen(format!("phi({})", g.label), 2 * g.degree);
        }
        for (g, acts) in self.action.iter().enumerate() {
            for (&i, t) in acts {
                m.set_sq(g, 2 * i, t);
            }
        }
        m
    }

    /// `sq0(x) = phi(x Sq^n)` for `x` in degree `2n`, zero in odd degrees.
    pub fn sq0(&self) -> GradedMap {
        let mut blocks = BTreeMap::new();
        for d in self.degrees() {
            if d % 2 != 0 {
                continue;
            }
            let n = d / 2;
            let m = if n < 0 { F2Matrix::zeros(self.dim(n), self.dim(d)) } else { self.sq_matrix(d, n as u32) };
            blocks.insert(d, m);
        }
        GradedMap { shift: 0, blocks }
    }

    /// The largest unstable submodule: `x Sq^i = 0` whenever `2i > |x|`
    /// (including `i = 0`, so negative degrees drop out), intersected with
    /// the preimages of the lower pieces. Since the action lowers degree, one
    /// ascending pass reaches the fixed point.
    pub fn unstable_part(&self) -> Submodule {
        let mut spaces: BTreeMap<i64, Subspace> = BTreeMap::new();
        let lo = self.min_degree().unwrap_or(0);
        for d in self.degrees() {
            let n = self.dim(d);
            if d < 0 {
                spaces.insert(d, Subspace::zero(n));
                continue;
            }
            let mut s = Subspace::full(n);
            for i in 1..=(d - lo) as u32 {
                let t = d - i as i64;
                if self.dim(t) == 0 {
                    continue;
                }
                let target = if 2 * i as i64 > d {
                    Subspace::zero(self.dim(t))
                } else {
                    spaces.get(&t).cloned().unwrap_or_else(|| Subspace::zero(self.dim(t)))
                };
                s = s.intersect(&target.preimage(&self.sq_matrix(d, i)));
            }
            spaces.insert(d, s);
        }
        Submodule { spaces }
    }

    pub fn is_unstable(&self) -> bool {
        let u = self.unstable_part();
        self.degrees().all(|d| u.dim(d) == self.dim(d))
    }

    fn require_unstable(&self) -> Result<(), ModuleError> {
        let u = self.unstable_part();
        for d in self.degrees() {
            if u.dim(d) != self.dim(d) {
                return Err(ModuleError::NotUnstable(
                    self.name.clone(),
                    format!("degree {d} has {} unstable classes out of {}", u.dim(d), self.dim(d)),
                ));
            }
        }
        Ok(())
    }

    /// `Omega M`, the desuspension of `ker(sq0: M -> Phi M)`.
    pub fn omega(&self) -> Result<FModule, ModuleError> {
        self.require_unstable()?;
        let sq0 = self.sq0();
        let mut spaces = BTreeMap::new();
        for d in self.degrees() {
            let k = match sq0.blocks.get(&d) {
                Some(m) => crate::f2linalg::kernel_image(m).0,
                None => Subspace::full(self.dim(d)),
            };
            spaces.insert(d, k);
        }
        let sub = Submodule { spaces }.to_module(self, format!("Omega {}", self.name));
        Ok(sub.suspend(-1).renamed(format!("Omega {}", self.name)))
    }

    /// `Omega_1 M`, the desuspension of `coker(sq0: M -> Phi M)`.
    pub fn omega1(&self) -> Result<FModule, ModuleError> {
        self.require_unstable()?;
        let phi = self.phi();
        let sq0 = self.sq0();
        let mut denominators = BTreeMap::new();
        for d in phi.degrees() {
            let img = match sq0.blocks.get(&d) {
                Some(m) => crate::f2linalg::kernel_image(m).1,
                None => Subspace::zero(phi.dim(d)),
            };
            denominators.insert(d, img);
        }
        let q = quotient_module(&phi, &denominators, format!("Omega1 {}", self.name));
        Ok(q.suspend(-1).renamed(format!("Omega1 {}", self.name)))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> FModule {
        self.name = name.into();
        self
    }

    /// Restriction to degrees at most `d` (a submodule, since the action
    /// lowers degree).
    pub fn truncate(&self, d: i64) -> FModule {
        let keep: Vec<usize> = (0..self.gens.len()).filter(|&g| self.gens[g].degree <= d).collect();
        let mut map = vec![usize::MAX; self.gens.len()];
        let bound = Some(self.max_degree.map_or(d, |m| m.min(d)));
        let mut m = FModule::new(self.name.clone(), bound);
        for &g in &keep {
            map[g] = m.add_gen(self.gens[g].label.clone(), self.gens[g].degree);
        }
        for &g in &keep {
            for (&i, t) in &self.action[g] {
                let t: Vec<usize> = t.iter().map(|&y| map[y]).collect();
                m.set_sq(map[g], i, &t);
            }
        }
        m
    }

    /// Direct sum; labels of the second summand get `suffix` appended when
    /// they collide.
    pub fn direct_sum(&self, other: &FModule, name: impl Into<String>) -> FModule {
        let bound = match (self.max_degree, other.max_degree) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let mut m = FModule::new(name, bound);
        for g in &self.gens {
            m.add_gen(g.label.clone(), g.degree);
        }
        let off = self.gens.len();
        for g in &other.gens {
            let mut label = g.label.clone();
            while self.find(&label).is_some() {
                label.push('\'');
            }
            m.add_gen(label, g.degree);
        }
        m.action = self.action.clone();
        for acts in &other.action {
            m.action.push(acts.iter().map(|(&i, t)| (i, t.iter().map(|&y| y + off).collect())).collect());
        }
        m
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub generators: usize,
    pub relations_checked: usize,
}

/// A degreewise linear map of graded spaces; the block at `d` goes from
/// source degree `d` to target degree `d + shift`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedMap {
    pub shift: i64,
    pub blocks: BTreeMap<i64, F2Matrix>,
}

impl GradedMap {
    pub fn rank(&self, d: i64) -> usize {
        self.blocks.get(&d).map_or(0, F2Matrix::rank)
    }
}

/// A submodule given degreewise by subspaces of the ambient basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Submodule {
    pub spaces: BTreeMap<i64, Subspace>,
}

impl Submodule {
    pub fn dim(&self, d: i64) -> usize {
        self.spaces.get(&d).map_or(0, Subspace::dim)
    }

    /// Realises the submodule as a module in its own right, with the echelon
    /// basis of each degree as generators.
    pub fn to_module(&self, ambient: &FModule, name: String) -> FModule {
        let mut m = FModule::new(name, ambient.max_degree);
        let mut ids: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (&d, s) in &self.spaces {
            for v in s.basis() {
                let g = m.add_gen(ambient.vector_label(d, v), d);
                ids.entry(d).or_default().push(g);
            }
        }
        for (&d, s) in &self.spaces {
            for (k, v) in s.basis().iter().enumerate() {
                let g = ids[&d][k];
                for i in 1..=(d - ambient.min_degree().unwrap_or(d)) as u32 {
                    let t = d - i as i64;
                    let w = ambient.act(d, v, i);
                    if w.is_zero() {
                        continue;
                    }
                    let target = &self.spaces[&t];
                    let c = Coordinates::new(target.ambient_dim(), target.basis())
                        .coords(&w)
                        .expect("subspace is not closed under the action");
                    let t_ids: Vec<usize> = c.ones().map(|p| ids[&t][p]).collect();
                    m.set_sq(g, i, &t_ids);
                }
            }
        }
        m
    }
}

/// The quotient of `m` by a submodule given degreewise; the basis of each
/// degree is the set of basis elements off the echelon pivots.
pub fn quotient_module(m: &FModule, denominators: &BTreeMap<i64, Subspace>, name: String) -> FModule {
    let mut q = FModule::new(name, m.max_degree);
    let mut keep: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let mut ids: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let zero = |d: i64| Subspace::zero(m.dim(d));
    for d in m.degrees() {
        let den = denominators.get(&d).cloned().unwrap_or_else(|| zero(d));
        let comp = den.complement_indices();
        for &p in &comp {
            let g = q.add_gen(m.label(m.basis(d)[p]).to_string(), d);
            ids.entry(d).or_default().push(g);
        }
        keep.insert(d, comp);
    }
    let lo = m.min_degree().unwrap_or(0);
    for d in m.degrees() {
        for (k, &p) in keep[&d].iter().enumerate() {
            let v = F2Vec::unit(m.dim(d), p);
            for i in 1..=(d - lo) as u32 {
                let t = d - i as i64;
                let w = m.act(d, &v, i);
                if w.is_zero() {
                    continue;
                }
                let den = denominators.get(&t).cloned().unwrap_or_else(|| zero(t));
                let r = den.reduce(&w);
                let t_ids: Vec<usize> =
                    keep[&t].iter().enumerate().filter(|&(_, &c)| r.get(c)).map(|(j, _)| ids[&t][j]).collect();
                q.set_sq(ids[&d][k], i, &t_ids);
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(n: i64) -> FModule {
        let mut m = FModule::new(format!("S{n}"), None);
        m.add_gen("x", n);
        m
    }

    fn cp2_desusp() -> FModule {
        let mut m = FModule::new("cp2-desusp", None);
        let x = m.add_gen("x", 1);
        let y = m.add_gen("y", 3);
        m.set_sq(y, 2, &[x]);
        m
    }

    fn rp(n: i64) -> FModule {
        let mut m = FModule::new(format!("rp{n}"), None);
        for k in 1..=n {
            m.add_gen(format!("a{k}"), k);
        }
        for k in 1..=n {
            for i in 1..k {
                if crate::steenrod::binom2(k - i, i) {
                    m.set_sq((k - 1) as usize, i as u32, &[(k - i - 1) as usize]);
                }
            }
        }
        m
    }

    #[test]
    fn validation() {
        assert!(sphere(4).validate().is_ok());
        assert!(cp2_desusp().validate().is_ok());
        assert!(rp(6).validate().is_ok());
        let mut bad = FModule::new("bad", None);
        let z = bad.add_gen("z", 0);
        let y = bad.add_gen("y", 1);
        let x = bad.add_gen("x", 2);
        bad.set_sq(x, 1, &[y]);
        bad.set_sq(y, 1, &[z]);
        let err = bad.validate().unwrap_err();
        assert!(matches!(err, ModuleError::Validation { ref element, .. } if element == "x"));
    }

    #[test]
    fn suspension() {
        let s = sphere(0).suspend(3);
        assert_eq!(s.degree_of(0), 3);
        assert_eq!(sphere(2).suspend(0), sphere(2));
        let m = cp2_desusp().suspend(1);
        assert_eq!((m.degree_of(0), m.degree_of(1)), (2, 4));
        assert_eq!(m.sq(1, 2), vec![0]);
        let a = cp2_desusp().suspend(2).suspend(-1);
        let b = cp2_desusp().suspend(1);
        assert_eq!(a.gens(), b.gens());
    }

    #[test]
    fn doubling() {
        assert_eq!(sphere(3).phi().degree_of(0), 6);
        let p = cp2_desusp().phi();
        assert_eq!(p.degree_of(1), 6);
        assert_eq!(p.sq(1, 4), vec![0]);
        assert!(p.sq(1, 2).is_empty());
        // Phi(Sigma M) = Sigma^2 Phi(M)
        let m = rp(4);
        let a = m.suspend(1).phi();
        let b = m.phi().suspend(2);
        for g in 0..m.num_gens() {
            assert_eq!(a.degree_of(g), b.degree_of(g));
            assert_eq!(a.actions(g), b.actions(g));
        }
    }

    #[test]
    fn sq0_examples() {
        let mut m = FModule::new("m", None);
        let w = m.add_gen("w", 1);
        let x = m.add_gen("x", 2);
        m.set_sq(x, 1, &[w]);
        let s = m.sq0();
        assert_eq!(s.blocks[&2], F2Matrix::from_rows(&[vec![1]]));
        assert!(sphere(3).sq0().blocks.is_empty());
    }

    #[test]
    fn unstable_parts() {
        let r = rp(4);
        let u = r.unstable_part();
        assert!(r.degrees().all(|d| u.dim(d) == r.dim(d)));
        let c = cp2_desusp();
        let u = c.unstable_part();
        assert_eq!((u.dim(1), u.dim(3)), (1, 0));
        assert_eq!(sphere(-1).unstable_part().dim(-1), 0);
        assert_eq!(sphere(0).unstable_part().dim(0), 1);
    }

    #[test]
    fn loops() {
        // Omega(Sigma N) = N for unstable N
        let n = rp(3);
        let o = n.suspend(1).omega().unwrap();
        for d in n.degrees() {
            assert_eq!(o.dim(d), n.dim(d));
        }
        assert_eq!(sphere(0).omega().unwrap().num_gens(), 0);
        assert!(matches!(cp2_desusp().omega(), Err(ModuleError::NotUnstable(..))));
        // sq0 onto for F2 in degree 0, so Omega_1 vanishes
        assert_eq!(sphere(0).omega1().unwrap().num_gens(), 0);
    }

    #[test]
    fn four_term_sequence_dims() {
        for m in [rp(4), rp(5), sphere(2), rp(3).suspend(2)] {
            let sq0 = m.sq0();
            let o = m.omega().unwrap();
            let o1 = m.omega1().unwrap();
            let phi = m.phi();
            for n in -2..12 {
                let r = sq0.rank(n);
                assert_eq!(m.dim(n), o.dim(n - 1) + r, "{} degree {n}", m.name);
                assert_eq!(o1.dim(n - 1), phi.dim(n) - r, "{} degree {n}", m.name);
            }
        }
    }
}
