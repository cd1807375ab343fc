//! CNF formulas over directed class relations.
//!
//! An [`Atom`] is a possibly negated class relation such as `DR_N(B, R)` or
//! `!EC_W(G, WA)`. A [`Clause`] is a disjunction of atoms kept in canonical
//! order, and a [`Spec`] is a conjunction of clauses.

mod parser;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Direction;

pub use parser::{parse_clause, parse_spec, ParseError};

/// The two relations of the RCC fragment: discrete-from and externally-connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    DR,
    EC,
}

impl RelationKind {
    pub const ALL: [RelationKind; 2] = [RelationKind::DR, RelationKind::EC];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::DR => "DR",
            RelationKind::EC => "EC",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "DR" => Ok(RelationKind::DR),
            "EC" => Ok(RelationKind::EC),
            other => Err(format!("unknown relation kind `{other}` (expected DR or EC)")),
        }
    }
}

/// A class relation, possibly negated.
///
/// Field order is the canonical sort order: kind, direction, negation, head,
/// related.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub kind: RelationKind,
    pub dir: Direction,
    pub negated: bool,
    /// Class whose objects the atom quantifies over.
    pub head: String,
    pub related: String,
}

impl Atom {
    pub fn new(kind: RelationKind, dir: Direction, head: impl Into<String>, related: impl Into<String>) -> Self {
        Atom { kind, dir, negated: false, head: head.into(), related: related.into() }
    }

    pub fn dr(dir: Direction, head: impl Into<String>, related: impl Into<String>) -> Self {
        Atom::new(RelationKind::DR, dir, head, related)
    }

    pub fn ec(dir: Direction, head: impl Into<String>, related: impl Into<String>) -> Self {
        Atom::new(RelationKind::EC, dir, head, related)
    }

    pub fn negate(mut self) -> Self {
        self.negated = !self.negated;
        self
    }

    /// The same relation with the opposite polarity.
    pub fn complement(&self) -> Atom {
        self.clone().negate()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        write!(f, "{}_{}({}, {})", self.kind, self.dir, self.head, self.related)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("a clause needs at least one atom")]
    EmptyClause,
}

/// A nonempty disjunction of atoms in canonical order without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    atoms: Vec<Atom>,
}

impl Clause {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Result<Self, FormulaError> {
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(FormulaError::EmptyClause);
        }
        atoms.sort();
        atoms.dedup();
        Ok(Clause { atoms })
    }

    /// Wraps atoms already known to be sorted and distinct.
    pub(crate) fn from_sorted(atoms: Vec<Atom>) -> Self {
        debug_assert!(!atoms.is_empty() && atoms.windows(2).all(|p| p[0] < p[1]));
        Clause { atoms }
    }

    pub fn unit(atom: Atom) -> Self {
        Clause { atoms: vec![atom] }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.binary_search(atom).is_ok()
    }

    /// Distinct head classes, sorted.
    pub fn heads(&self) -> BTreeSet<&str> {
        self.atoms.iter().map(|a| a.head.as_str()).collect()
    }

    pub fn heads_class(&self, class: &str) -> bool {
        self.atoms.iter().any(|a| a.head == class)
    }

    /// Every class name mentioned in the clause.
    pub fn classes(&self) -> BTreeSet<&str> {
        self.atoms.iter().flat_map(|a| [a.head.as_str(), a.related.as_str()]).collect()
    }

    /// Re-sorts and dedups. Clauses built through the public API are already
    /// canonical, so this is the identity on them.
    pub fn canonicalize(&self) -> Clause {
        Clause::new(self.atoms.iter().cloned()).expect("clauses are nonempty")
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

impl FromStr for Clause {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_clause(s)
    }
}

impl Serialize for Clause {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Clause {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_clause(&text).map_err(serde::de::Error::custom)
    }
}

/// True iff every atom of `c1` occurs in `c2`, so `c1` implies `c2`.
pub fn subsumes(c1: &Clause, c2: &Clause) -> bool {
    if c1.len() > c2.len() {
        return false;
    }
    let mut rest = c2.atoms.iter();
    // both sides sorted: a single forward scan suffices
    'outer: for a in &c1.atoms {
        for b in rest.by_ref() {
            match b.cmp(a) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// A conjunction of clauses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Spec {
    clauses: BTreeSet<Clause>,
}

impl Spec {
    pub fn new(clauses: impl IntoIterator<Item = Clause>) -> Self {
        Spec { clauses: clauses.into_iter().collect() }
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = &Clause> {
        self.clauses.iter()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn insert(&mut self, clause: Clause) -> bool {
        self.clauses.insert(clause)
    }

    pub fn contains(&self, clause: &Clause) -> bool {
        self.clauses.contains(clause)
    }

    /// Syntactic implication: some clause of `self` subsumes `clause`.
    pub fn implies_clause(&self, clause: &Clause) -> bool {
        self.clauses.iter().any(|c| subsumes(c, clause))
    }

    /// Every clause of `other` is implied clause-wise by `self`.
    pub fn implies(&self, other: &Spec) -> bool {
        other.clauses.iter().all(|c| self.implies_clause(c))
    }

    /// Every class name mentioned anywhere in the spec.
    pub fn classes(&self) -> BTreeSet<&str> {
        self.clauses.iter().flat_map(|c| c.classes()).collect()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.clauses.iter().flat_map(|c| c.atoms.iter())
    }
}

impl FromIterator<Clause> for Spec {
    fn from_iter<T: IntoIterator<Item = Clause>>(iter: T) -> Self {
        Spec::new(iter)
    }
}

impl fmt::Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, clause) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{clause}")?;
        }
        Ok(())
    }
}

impl FromStr for Spec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_spec(s)
    }
}

/// Canonical text: one clause per line in sorted order, no trailing newline.
pub fn print_spec(spec: &Spec) -> String {
    spec.to_string()
}
