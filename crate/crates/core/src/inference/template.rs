//! Templates restricting which clauses the candidate search enumerates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::formula::{Atom, Clause, RelationKind};
use crate::geometry::Direction;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template `{0}`: max_len must be at least 1")]
    ZeroLength(String),
    #[error("template `{0}` excludes every relation")]
    NothingAllowed(String),
    #[error("unknown template `{0}` (built-ins: original, relaxed, restrictive)")]
    Unknown(String),
    #[error("invalid template file: {0}")]
    Config(String),
}

/// A `(kind, direction)` pair such as `DR_N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationPattern {
    pub kind: RelationKind,
    pub dir: Direction,
}

impl fmt::Display for RelationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.kind, self.dir)
    }
}

impl FromStr for RelationPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, dir) = s.split_once('_').ok_or_else(|| format!("malformed relation `{s}`"))?;
        Ok(RelationPattern { kind: kind.parse()?, dir: dir.parse()? })
    }
}

impl Serialize for RelationPattern {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RelationPattern {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Restricts the `(head, related)` class pairs atoms may use.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassFilter {
    /// Allowed head classes; `None` allows all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heads: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub related: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub excluded_pairs: BTreeSet<(String, String)>,
}

impl ClassFilter {
    pub fn allows(&self, head: &str, related: &str) -> bool {
        self.heads.as_ref().is_none_or(|h| h.contains(head))
            && self.related.as_ref().is_none_or(|r| r.contains(related))
            && !self.excluded_pairs.contains(&(head.to_string(), related.to_string()))
    }
}

fn default_true() -> bool {
    true
}

fn default_max_len() -> usize {
    Template::DEFAULT_MAX_LEN
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub name: String,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    /// All atoms of a clause share one head class.
    #[serde(default)]
    pub same_head: bool,
    /// A clause is all-`DR` or all-`EC`.
    #[serde(default)]
    pub homogeneous_kind: bool,
    #[serde(default = "default_true")]
    pub allow_negation: bool,
    #[serde(default = "default_true")]
    pub negation_only_in_unit_clauses: bool,
    #[serde(default)]
    pub excluded_atoms: BTreeSet<RelationPattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_filter: Option<ClassFilter>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateFile {
    #[serde(default, rename = "template")]
    templates: Vec<Template>,
}

impl Template {
    pub const DEFAULT_MAX_LEN: usize = 4;
    pub const BUILTIN_NAMES: [&'static str; 3] = ["original", "relaxed", "restrictive"];

    /// Same head class and a single relation kind per clause.
    pub fn original() -> Self {
        Template {
            name: "original".into(),
            max_len: Self::DEFAULT_MAX_LEN,
            same_head: true,
            homogeneous_kind: true,
            allow_negation: true,
            negation_only_in_unit_clauses: true,
            excluded_atoms: BTreeSet::new(),
            class_filter: None,
        }
    }

    /// Drops the shared-head requirement of [`Template::original`].
    pub fn relaxed() -> Self {
        Template { name: "relaxed".into(), same_head: false, ..Self::original() }
    }

    /// [`Template::original`] without any `DR_N` or `DR_S` atom.
    pub fn restrictive() -> Self {
        Template {
            name: "restrictive".into(),
            excluded_atoms: [Direction::N, Direction::S]
                .into_iter()
                .map(|dir| RelationPattern { kind: RelationKind::DR, dir })
                .collect(),
            ..Self::original()
        }
    }

    pub fn builtins() -> Vec<Template> {
        vec![Self::original(), Self::relaxed(), Self::restrictive()]
    }

    pub fn builtin(name: &str) -> Result<Template, TemplateError> {
        match name {
            "original" => Ok(Self::original()),
            "relaxed" => Ok(Self::relaxed()),
            "restrictive" => Ok(Self::restrictive()),
            other => Err(TemplateError::Unknown(other.to_string())),
        }
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.max_len == 0 {
            return Err(TemplateError::ZeroLength(self.name.clone()));
        }
        let all_excluded = RelationKind::ALL.iter().all(|&kind| {
            Direction::ALL.iter().all(|&dir| self.excluded_atoms.contains(&RelationPattern { kind, dir }))
        });
        if all_excluded {
            return Err(TemplateError::NothingAllowed(self.name.clone()));
        }
        Ok(())
    }

    /// Parses a TOML document holding one or more `[[template]]` tables.
    pub fn from_toml(text: &str) -> Result<Vec<Template>, TemplateError> {
        let file: TemplateFile = toml::from_str(text).map_err(|e| TemplateError::Config(e.to_string()))?;
        for t in &file.templates {
            t.validate()?;
        }
        Ok(file.templates)
    }

    fn allows_relation(&self, kind: RelationKind, dir: Direction) -> bool {
        !self.excluded_atoms.contains(&RelationPattern { kind, dir })
    }

    fn allows_pair(&self, head: &str, related: &str) -> bool {
        self.class_filter.as_ref().is_none_or(|f| f.allows(head, related))
    }

    /// Whether `atom` may appear in a clause of length `len`.
    pub fn admits_atom(&self, atom: &Atom, len: usize) -> bool {
        if !self.allows_relation(atom.kind, atom.dir) || !self.allows_pair(&atom.head, &atom.related) {
            return false;
        }
        if atom.negated {
            self.allow_negation && (len == 1 || !self.negation_only_in_unit_clauses)
        } else {
            true
        }
    }

    /// Whether the template permits `clause` (ignoring class membership).
    pub fn admits(&self, clause: &Clause) -> bool {
        let atoms = clause.atoms();
        if atoms.len() > self.max_len || !atoms.iter().all(|a| self.admits_atom(a, atoms.len())) {
            return false;
        }
        let first = &atoms[0];
        (!self.same_head || atoms.iter().all(|a| a.head == first.head))
            && (!self.homogeneous_kind || atoms.iter().all(|a| a.kind == first.kind))
    }
}

/// Maps class names to dense indices in sorted name order, and atoms to
/// dense indices whose numeric order is the canonical atom order.
#[derive(Debug, Clone)]
pub struct AtomUniverse {
    classes: Vec<String>,
}

impl AtomUniverse {
    pub fn new<S: AsRef<str>>(classes: &[S]) -> Self {
        let classes: BTreeSet<String> = classes.iter().map(|c| c.as_ref().to_string()).collect();
        AtomUniverse { classes: classes.into_iter().collect() }
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.binary_search_by(|c| c.as_str().cmp(name)).ok()
    }

    pub fn len(&self) -> usize {
        16 * self.classes.len() * self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index(&self, atom: &Atom) -> Option<u32> {
        let k = self.classes.len();
        let head = self.class_index(&atom.head)?;
        let related = self.class_index(&atom.related)?;
        let kind = atom.kind as usize;
        let dir = atom.dir as usize;
        let neg = atom.negated as usize;
        Some(((((kind * 4 + dir) * 2 + neg) * k + head) * k + related) as u32)
    }

    pub fn atom(&self, index: u32) -> Atom {
        let k = self.classes.len();
        let mut i = index as usize;
        let related = i % k;
        i /= k;
        let head = i % k;
        i /= k;
        let negated = i % 2 == 1;
        i /= 2;
        let dir = Direction::ALL[i % 4];
        let kind = RelationKind::ALL[i / 4];
        Atom { kind, dir, negated, head: self.classes[head].clone(), related: self.classes[related].clone() }
    }

    pub fn head_of(&self, index: u32) -> usize {
        (index as usize / self.classes.len()) % self.classes.len()
    }

    pub fn clause(&self, indices: &[u32]) -> Clause {
        Clause::from_sorted(indices.iter().map(|&i| self.atom(i)).collect())
    }

    pub fn indices(&self, clause: &Clause) -> Option<Vec<u32>> {
        clause.atoms().iter().map(|a| self.index(a)).collect()
    }
}

/// Atom pools from which length-`n` clauses are drawn as combinations.
fn pools(template: &Template, universe: &AtomUniverse, n: usize) -> Vec<Vec<u32>> {
    let mut grouped: BTreeMap<(Option<RelationKind>, Option<usize>), Vec<u32>> = BTreeMap::new();
    for index in 0..universe.len() as u32 {
        let atom = universe.atom(index);
        if !template.admits_atom(&atom, n) {
            continue;
        }
        if n == 1 {
            grouped.entry((None, None)).or_default().push(index);
            continue;
        }
        let kind = template.homogeneous_kind.then_some(atom.kind);
        let head = template.same_head.then(|| universe.head_of(index));
        grouped.entry((kind, head)).or_default().push(index);
    }
    grouped.into_values().collect()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Atom-index combinations for every length-`n` clause the template permits,
/// in canonical order.
pub fn enumerate_indexed(template: &Template, universe: &AtomUniverse, n: usize) -> impl Iterator<Item = Vec<u32>> {
    let pools = if n == 0 || n > template.max_len { Vec::new() } else { pools(template, universe, n) };
    pools.into_iter().flat_map(move |pool| pool.into_iter().combinations(n))
}

/// Every canonical length-`n` clause the template permits over `classes`,
/// each exactly once and in a deterministic order.
pub fn enumerate_clauses<S: AsRef<str>>(template: &Template, classes: &[S], n: usize) -> impl Iterator<Item = Clause> {
    let universe = AtomUniverse::new(classes);
    enumerate_indexed(template, &universe, n).map(move |ix| universe.clause(&ix))
}

/// Number of clauses `enumerate_clauses` yields for length `n`.
pub fn count_clauses<S: AsRef<str>>(template: &Template, classes: &[S], n: usize) -> u128 {
    if n == 0 || n > template.max_len {
        return 0;
    }
    let universe = AtomUniverse::new(classes);
    pools(template, &universe, n).iter().map(|p| binomial(p.len(), n)).sum()
}

/// Size of the whole candidate space, lengths 1 through `max_len`.
pub fn candidate_space_size<S: AsRef<str>>(template: &Template, classes: &[S]) -> u128 {
    (1..=template.max_len).map(|n| count_clauses(template, classes, n)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLASSES: [&str; 4] = ["R", "G", "B", "WA"];

    #[test]
    fn universe_index_order_is_canonical_order() {
        let u = AtomUniverse::new(&CLASSES);
        let atoms: Vec<Atom> = (0..u.len() as u32).map(|i| u.atom(i)).collect();
        assert!(atoms.windows(2).all(|w| w[0] < w[1]));
        for (i, a) in atoms.iter().enumerate() {
            assert_eq!(u.index(a), Some(i as u32));
        }
    }

    #[test]
    fn unit_clauses_of_original() {
        // 2 kinds x 4 dirs x 4 heads x 4 related, each positive or negated
        assert_eq!(count_clauses(&Template::original(), &CLASSES, 1), 256);
        assert_eq!(enumerate_clauses(&Template::original(), &CLASSES, 1).count(), 256);
    }

    #[test]
    fn restrictive_has_no_vertical_dr() {
        let t = Template::restrictive();
        for n in 1..=3 {
            for c in enumerate_clauses(&t, &CLASSES, n) {
                assert!(c
                    .atoms()
                    .iter()
                    .all(|a| !(a.kind == RelationKind::DR && matches!(a.dir, Direction::N | Direction::S))));
            }
        }
    }

    #[test]
    fn relaxed_contains_original() {
        for n in 1..=3 {
            let relaxed: BTreeSet<Clause> = enumerate_clauses(&Template::relaxed(), &CLASSES, n).collect();
            for c in enumerate_clauses(&Template::original(), &CLASSES, n) {
                assert!(relaxed.contains(&c), "{c}");
            }
        }
    }

    #[test]
    fn enumeration_is_canonical_unique_and_admitted() {
        let classes = ["A", "B", "C"];
        for t in Template::builtins() {
            for n in 1..=3 {
                let all: Vec<Clause> = enumerate_clauses(&t, &classes, n).collect();
                let unique: BTreeSet<&Clause> = all.iter().collect();
                assert_eq!(unique.len(), all.len());
                assert_eq!(all.len() as u128, count_clauses(&t, &classes, n));
                for c in &all {
                    assert_eq!(c.len(), n);
                    assert_eq!(&c.canonicalize(), c);
                    assert!(t.admits(c), "{} rejects {c}", t.name);
                }
            }
        }
    }

    #[test]
    fn negation_in_disjunctions_when_lifted() {
        let t = Template { negation_only_in_unit_clauses: false, ..Template::original() };
        assert!(enumerate_clauses(&t, &["A"], 2).any(|c| c.atoms().iter().any(|a| a.negated)));
        assert!(!enumerate_clauses(&Template::original(), &["A"], 2).any(|c| c.atoms().iter().any(|a| a.negated)));
        let t = Template { allow_negation: false, ..Template::original() };
        assert_eq!(count_clauses(&t, &["A"], 1), 8);
    }

    #[test]
    fn class_filter_limits_pairs() {
        let filter = ClassFilter {
            heads: Some(["A".to_string()].into()),
            excluded_pairs: [("A".to_string(), "B".to_string())].into(),
            ..Default::default()
        };
        let t = Template { class_filter: Some(filter), ..Template::original() };
        for c in enumerate_clauses(&t, &["A", "B"], 1) {
            let a = &c.atoms()[0];
            assert_eq!((a.head.as_str(), a.related.as_str()), ("A", "A"));
        }
    }

    #[test]
    fn template_validation() {
        assert!(Template::original().with_max_len(0).validate().is_err());
        let all: BTreeSet<RelationPattern> = RelationKind::ALL
            .iter()
            .flat_map(|&kind| Direction::ALL.iter().map(move |&dir| RelationPattern { kind, dir }))
            .collect();
        let t = Template { excluded_atoms: all, ..Template::original() };
        assert_eq!(t.validate(), Err(TemplateError::NothingAllowed("original".into())));
        assert!(matches!(Template::builtin("nope"), Err(TemplateError::Unknown(_))));
    }

    #[test]
    fn toml_templates() {
        let text = r#"
            [[template]]
            name = "walls-only"
            max_len = 2
            same_head = true
            homogeneous_kind = true
            excluded_atoms = ["DR_E", "DR_W"]
            class_filter = { related = ["WA"] }
        "#;
        let ts = Template::from_toml(text).unwrap();
        assert_eq!(ts.len(), 1);
        let t = &ts[0];
        assert_eq!(t.max_len, 2);
        assert!(t.allow_negation && t.negation_only_in_unit_clauses);
        assert!(t.excluded_atoms.contains(&"DR_E".parse().unwrap()));
        assert!(enumerate_clauses(t, &["B", "WA"], 1).all(|c| c.atoms()[0].related == "WA"));

        assert!(Template::from_toml("[[template]]\nname = \"x\"\nmax_len = 0\n").is_err());
        assert!(Template::from_toml("[[template]]\nname = \"x\"\nbogus = 1\n").is_err());
    }
}
