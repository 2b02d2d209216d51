//! Built-in modules, the JSON module format, and duals of cyclic quotients
//! of the Steenrod algebra.
//!
//! Module files look like
//!
//! ```json
//! {
//!   "name": "cp2-desusp",
//!   "max_degree": null,
//!   "generators": [{"id": "x", "deg": 1}, {"id": "y", "deg": 3}],
//!   "actions": [{"sq": 2, "on": "y", "value": ["x"]}]
//! }
//! ```
//!
//! `max_degree` may be omitted or null for a module known in all degrees.
//! Omitted actions are zero.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amodule::{FModule, ModuleError};
use crate::f2linalg::{F2Vec, Subspace};
use crate::steenrod::{adem_normalize_sq, admissible_basis, binom2, SqWord};

/// Largest degree for which the dual Steenrod fixtures are offered.
pub const MAX_BUILTIN_DEGREE: i64 = 32;

#[derive(Debug, Error)]
pub enum ModLibError {
    #[error("unknown builtin module {0:?}")]
    UnknownName(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(#[from] ModuleError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub id: String,
    pub deg: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionEntry {
    pub sq: u32,
    pub on: String,
    pub value: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleFile {
    pub name: String,
    #[serde(default)]
    pub max_degree: Option<i64>,
    pub generators: Vec<GeneratorEntry>,
    #[serde(default)]
    pub actions: Vec<ActionEntry>,
}

impl ModuleFile {
    pub fn from_module(m: &FModule) -> Self {
        let generators = m.gens().iter().map(|g| GeneratorEntry { id: g.label.clone(), deg: g.degree }).collect();
        let mut actions = Vec::new();
        for g in 0..m.num_gens() {
            for (&i, t) in m.actions(g) {
                actions.push(ActionEntry {
                    sq: i,
                    on: m.label(g).to_string(),
                    value: t.iter().map(|&y| m.label(y).to_string()).collect(),
                });
            }
        }
        ModuleFile { name: m.name.clone(), max_degree: m.max_degree, generators, actions }
    }

    /// Builds and validates the module.
    pub fn to_module(&self) -> Result<FModule, ModLibError> {
        let mut m = FModule::new(self.name.clone(), self.max_degree);
        let mut ids: HashMap<&str, usize> = HashMap::new();
        for g in &self.generators {
            if ids.insert(g.id.as_str(), m.num_gens()).is_some() {
                return Err(ModLibError::Parse(format!("duplicate generator id {:?}", g.id)));
            }
            m.add_gen(g.id.clone(), g.deg);
        }
        let lookup = |id: &str, ctx: &str| {
            ids.get(id).copied().ok_or_else(|| ModLibError::Parse(format!("unknown generator id {id:?} in {ctx}")))
        };
        let mut seen = std::collections::HashSet::new();
        for (n, a) in self.actions.iter().enumerate() {
            let ctx = format!("action {n} (Sq{} on {})", a.sq, a.on);
            if a.sq == 0 {
                return Err(ModLibError::Parse(format!("{ctx}: Sq0 is the identity and cannot be set")));
            }
            let on = lookup(&a.on, &ctx)?;
            if !seen.insert((on, a.sq)) {
                return Err(ModLibError::Parse(format!("{ctx}: given twice")));
            }
            let want = m.degree_of(on) - a.sq as i64;
            let mut targets = Vec::new();
            for v in &a.value {
                let t = lookup(v, &ctx)?;
                if m.degree_of(t) != want {
                    return Err(ModuleError::Validation {
                        element: a.on.clone(),
                        degree: m.degree_of(on),
                        relation: format!("Sq{} lands in degree {want} but {v} has degree {}", a.sq, m.degree_of(t)),
                    }
                    .into());
                }
                targets.push(t);
            }
            m.set_sq(on, a.sq, &targets);
        }
        m.validate()?;
        Ok(m)
    }
}

pub fn parse(text: &str) -> Result<FModule, ModLibError> {
    let f: ModuleFile = serde_json::from_str(text).map_err(|e| ModLibError::Parse(e.to_string()))?;
    f.to_module()
}

pub fn to_json(m: &FModule) -> String {
    let mut s = serde_json::to_string_pretty(&ModuleFile::from_module(m)).expect("module files serialize");
    s.push('\n');
    s
}

pub fn load(path: &Path) -> Result<FModule, ModLibError> {
    let text = std::fs::read_to_string(path)?;
    parse(&text).map_err(|e| match e {
        ModLibError::Parse(msg) => ModLibError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save(m: &FModule, path: &Path) -> Result<(), ModLibError> {
    std::fs::write(path, to_json(m))?;
    Ok(())
}

pub fn sphere(n: i64) -> FModule {
    let mut m = FModule::new(format!("sphere:{n}"), None);
    m.add_gen("x", n);
    m
}

/// Reduced homology of `RP^n`: `a_k Sq^i = binom(k-i, i) a_{k-i}`.
pub fn rp(n: i64) -> FModule {
    let mut m = FModule::new(format!("rp:{n}"), None);
    for k in 1..=n {
        m.add_gen(format!("a{k}"), k);
    }
    for k in 1..=n {
        for i in 1..k {
            if binom2(k - i, i) {
                m.set_sq((k - 1) as usize, i as u32, &[(k - i - 1) as usize]);
            }
        }
    }
    m
}

/// `H_*(RP^4) + S H_*(RP^4)`, with `b_k` the suspension of `a_k`.
pub fn rp4_ext() -> FModule {
    let a = rp(4);
    let b = a.suspend(1);
    let mut m = FModule::new("rp4-ext", None);
    for g in a.gens() {
        m.add_gen(g.label.clone(), g.degree);
    }
    for (k, g) in b.gens().iter().enumerate() {
        m.add_gen(format!("b{}", k + 1), g.degree);
    }
    for g in 0..a.num_gens() {
        for (&i, t) in a.actions(g) {
            m.set_sq(g, i, t);
            let shifted: Vec<usize> = t.iter().map(|&y| y + 4).collect();
            m.set_sq(g + 4, i, &shifted);
        }
    }
    m
}

/// `S^-1` of the reduced homology of `CP^2`: `x` in degree 1, `y` in
/// degree 3, `y Sq^2 = x`.
pub fn cp2_desusp() -> FModule {
    let mut m = FModule::new("cp2-desusp", None);
    let x = m.add_gen("x", 1);
    let y = m.add_gen("y", 3);
    m.set_sq(y, 2, &[x]);
    m
}

/// A cyclic quotient `A / J` of the Steenrod algebra by a left ideal, given
/// through `max_degree` by a spanning set of `J` in each degree.
pub struct CyclicQuotient {
    pub name: String,
    pub max_degree: i64,
    pub relations: Box<dyn Fn(u32) -> Vec<Vec<u32>>>,
}

impl CyclicQuotient {
    pub fn full(max_degree: i64) -> Self {
        CyclicQuotient { name: format!("dual-steenrod:{max_degree}"), max_degree, relations: Box::new(|_| Vec::new()) }
    }

    /// `A / A Sq^1`, spanned in degree `n` by `w Sq^1` for admissible `w`
    /// of degree `n - 1`.
    pub fn mod_sq1(max_degree: i64) -> Self {
        CyclicQuotient {
            name: format!("hz:{max_degree}"),
            max_degree,
            relations: Box::new(|n| {
                if n == 0 {
                    return Vec::new();
                }
                admissible_basis(n - 1)
                    .into_iter()
                    .map(|w| {
                        let mut v = w.0;
                        v.push(1);
                        v
                    })
                    .collect()
            }),
        }
    }
}

fn word_vector(basis: &[SqWord], word: &[u32]) -> F2Vec {
    let pos: BTreeMap<&SqWord, usize> = basis.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut v = F2Vec::zeros(basis.len());
    for w in adem_normalize_sq(word).terms {
        v.flip(pos[&w]);
    }
    v
}

fn dual_label(w: &SqWord) -> String {
    if w.0.is_empty() {
        "1".to_string()
    } else {
        format!("({w})*")
    }
}

/// The right module `(A / J)^*`, with `<xi Sq^i, a> = <xi, Sq^i a>`.
/// The quotient basis in each degree is the set of admissible words off
/// the echelon pivots of `J`.
pub fn dualize(q: &CyclicQuotient) -> FModule {
    let mut m = FModule::new(q.name.clone(), Some(q.max_degree));
    let top = q.max_degree.max(-1);
    let mut bases: Vec<Vec<SqWord>> = Vec::new();
    let mut ideals: Vec<Subspace> = Vec::new();
    let mut keep: Vec<Vec<usize>> = Vec::new();
    let mut ids: Vec<Vec<usize>> = Vec::new();
    for n in 0..=top {
        let basis = admissible_basis(n as u32);
        let rels: Vec<F2Vec> = (q.relations)(n as u32).iter().map(|w| word_vector(&basis, w)).collect();
        let ideal = Subspace::span(basis.len(), rels);
        let comp = ideal.complement_indices();
        let gids = comp.iter().map(|&p| m.add_gen(dual_label(&basis[p]), n)).collect();
        bases.push(basis);
        ideals.push(ideal);
        keep.push(comp);
        ids.push(gids);
    }
    for n in 0..=top as usize {
        for i in 1..=n {
            let t = n - i;
            // column c of the matrix: Sq^i times quotient basis element c of
            // degree t, reduced into degree n
            let images: Vec<F2Vec> = keep[t]
                .iter()
                .map(|&c| {
                    let mut word = vec![i as u32];
                    word.extend_from_slice(&bases[t][c].0);
                    ideals[n].reduce(&word_vector(&bases[n], &word))
                })
                .collect();
            for (b_idx, &b) in keep[n].iter().enumerate() {
                let targets: Vec<usize> =
                    images.iter().enumerate().filter(|(_, img)| img.get(b)).map(|(c, _)| ids[t][c]).collect();
                if !targets.is_empty() {
                    m.set_sq(ids[n][b_idx], i as u32, &targets);
                }
            }
        }
    }
    m
}

pub fn dual_steenrod(d: i64) -> FModule {
    dualize(&CyclicQuotient::full(d))
}

/// `(A / A Sq^1)^*`, the homology of the integral Eilenberg-MacLane
/// spectrum.
pub fn hz(d: i64) -> FModule {
    dualize(&CyclicQuotient::mod_sq1(d))
}

/// `hz + S hz`, the module used for `HZ/2^r` for every `r >= 2` (the
/// dependence on `r` is not visible to the module structure).
pub fn hz2r(d: i64) -> FModule {
    let a = hz(d);
    let b = hz(d - 1).suspend(1);
    let mut m = FModule::new(format!("hz2r:{d}"), Some(d));
    for g in a.gens() {
        m.add_gen(g.label.clone(), g.degree);
    }
    let off = a.num_gens();
    for g in b.gens() {
        m.add_gen(format!("s{}", g.label), g.degree);
    }
    for g in 0..a.num_gens() {
        for (&i, t) in a.actions(g) {
            m.set_sq(g, i, t);
        }
    }
    for g in 0..b.num_gens() {
        for (&i, t) in b.actions(g) {
            let t: Vec<usize> = t.iter().map(|&y| y + off).collect();
            m.set_sq(g + off, i, &t);
        }
    }
    m
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &["sphere:N", "rp:N", "rp4-ext", "cp2-desusp", "dual-steenrod:D", "hz:D", "hz2r:D"];

/// Looks up a builtin such as `rp:4` or `hz:12`.
pub fn builtin(name: &str) -> Result<FModule, ModLibError> {
    let unknown = || ModLibError::UnknownName(name.to_string());
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a.parse::<i64>().map_err(|_| unknown())?)),
        None => (name, None),
    };
    let bounded = |d: i64| (0..=MAX_BUILTIN_DEGREE).contains(&d);
    let m = match (head, arg) {
        ("sphere", Some(n)) => sphere(n),
        ("rp", Some(n)) if n >= 1 => rp(n),
        ("rp4-ext", None) => rp4_ext(),
        ("cp2-desusp", None) => cp2_desusp(),
        ("dual-steenrod", Some(d)) if bounded(d) => dual_steenrod(d),
        ("hz", Some(d)) if bounded(d) => hz(d),
        ("hz2r", Some(d)) if bounded(d) && d >= 1 => hz2r(d),
        _ => return Err(unknown()),
    };
    m.validate()?;
    Ok(m)
}

/// Resolves `builtin:NAME` or a path to a module file.
pub fn resolve(source: &str) -> Result<FModule, ModLibError> {
    match source.strip_prefix("builtin:") {
        Some(name) => builtin(name),
        None => load(Path::new(source)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for name in ["sphere:3", "rp:4", "rp:7", "rp4-ext", "cp2-desusp", "dual-steenrod:12", "hz:12", "hz2r:12"] {
            builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(matches!(builtin("torus"), Err(ModLibError::UnknownName(_))));
        assert!(matches!(builtin("hz:99"), Err(ModLibError::UnknownName(_))));
    }

    #[test]
    fn rp4_action() {
        let m = rp(4);
        let a = |k: usize| k - 1;
        assert_eq!(m.sq(a(2), 1), vec![a(1)]);
        // a3 Sq2 = binom(1, 2) a1 = 0, as instability requires
        assert!(m.sq(a(3), 2).is_empty());
        assert_eq!(m.sq(a(4), 1), vec![a(3)]);
        assert_eq!(m.sq(a(4), 2), vec![a(2)]);
        assert!(m.sq(a(3), 1).is_empty());
    }

    #[test]
    fn hz_dims() {
        let m = hz(12);
        let dims: Vec<usize> = (0..4).map(|n| m.dim(n)).collect();
        assert_eq!(dims, vec![1, 0, 1, 1]);
        let a = dual_steenrod(12);
        let dims: Vec<usize> = (0..8).map(|n| a.dim(n)).collect();
        assert_eq!(dims, vec![1, 1, 1, 2, 2, 2, 3, 4]);
    }

    #[test]
    fn round_trip() {
        for name in ["sphere:0", "rp:4", "rp4-ext", "cp2-desusp", "dual-steenrod:8", "hz:10", "hz2r:10"] {
            let m = builtin(name).unwrap();
            assert_eq!(parse(&to_json(&m)).unwrap(), m, "{name}");
        }
    }

    #[test]
    fn parse_errors() {
        let dangling = r#"{"name":"m","generators":[{"id":"x","deg":1}],"actions":[{"sq":1,"on":"x","value":["w"]}]}"#;
        match parse(dangling) {
            Err(ModLibError::Parse(msg)) => assert!(msg.contains("\"w\"")),
            other => panic!("{other:?}"),
        }
        let unknown_key = r#"{"name":"m","generators":[],"colour":1}"#;
        assert!(matches!(parse(unknown_key), Err(ModLibError::Parse(_))));
        let bad = r#"{"name":"m","generators":[{"id":"z","deg":0},{"id":"y","deg":1},{"id":"x","deg":2}],
            "actions":[{"sq":1,"on":"x","value":["y"]},{"sq":1,"on":"y","value":["z"]}]}"#;
        assert!(matches!(parse(bad), Err(ModLibError::Validation(_))));
        let cp2 = r#"{"name":"cp2-desusp","generators":[{"id":"x","deg":1},{"id":"y","deg":3}],
            "actions":[{"sq":2,"on":"y","value":["x"]}]}"#;
        assert_eq!(parse(cp2).unwrap(), cp2_desusp());
    }
}
