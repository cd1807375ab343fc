//! Satisfaction of atoms, clauses and specs by demonstrations.
//!
//! Positive `DR` atoms are universal over the related class and positive
//! `EC` atoms existential; negation flips the per-object condition. An
//! object is never its own partner, even when head and related coincide.
//!
//! Multi-atom clauses use per-object semantics: every object whose class
//! heads some atom of the clause must satisfy at least one atom headed by
//! its class. [`ClauseSemantics::ClassLevel`] instead takes the disjunction
//! of whole class relations; the two differ when, say, half of the `A`
//! objects are north of every `B` and the other half south.

use serde::{Deserialize, Serialize};

use crate::formula::{Atom, Clause, RelationKind, Spec};
use crate::geometry::{dr_directed, ec_directed, Demonstration, SceneObject};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("object `{object}` has class `{class}` but the atom is headed by `{head}`")]
    ClassMismatch { object: String, class: String, head: String },
    #[error("class `{0}` is referenced by the spec but absent from the demonstration")]
    UnknownClass(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClauseSemantics {
    #[default]
    PerObject,
    ClassLevel,
}

/// Checks that every class the spec mentions is declared by the demonstration.
pub fn check_spec_classes(spec: &Spec, demo: &Demonstration) -> Result<(), EvalError> {
    for class in spec.classes() {
        if !demo.has_class(class) {
            return Err(EvalError::UnknownClass(class.to_string()));
        }
    }
    Ok(())
}

/// The positive relation for one head object, ignoring the atom's polarity.
fn positive_relation(o: &SceneObject, atom: &Atom, demo: &Demonstration, tau: f64) -> bool {
    let mut partners = demo.objects_of(&atom.related).filter(|b| b.id != o.id);
    match atom.kind {
        RelationKind::DR => partners.all(|b| dr_directed(o, b, atom.dir, tau)),
        RelationKind::EC => partners.any(|b| ec_directed(o, b, atom.dir, tau)),
    }
}

/// Whether object `o` (of the atom's head class) satisfies `atom` in `demo`.
pub fn object_satisfies_atom(o: &SceneObject, atom: &Atom, demo: &Demonstration, tau: f64) -> Result<bool, EvalError> {
    if o.cls != atom.head {
        return Err(EvalError::ClassMismatch { object: o.id.clone(), class: o.cls.clone(), head: atom.head.clone() });
    }
    Ok(positive_relation(o, atom, demo, tau) != atom.negated)
}

/// The class relation: every head object satisfies the atom.
///
/// For negated atoms this is the "no head object has the relation" reading.
pub fn class_relation_holds(atom: &Atom, demo: &Demonstration, tau: f64) -> bool {
    demo.objects_of(&atom.head).all(|o| positive_relation(o, atom, demo, tau) != atom.negated)
}

/// `None` when `o` is not constrained by the clause (its class heads no atom).
pub fn object_satisfies_clause(o: &SceneObject, clause: &Clause, demo: &Demonstration, tau: f64) -> Option<bool> {
    let mut relevant = false;
    for atom in clause.atoms().iter().filter(|a| a.head == o.cls) {
        relevant = true;
        if positive_relation(o, atom, demo, tau) != atom.negated {
            return Some(true);
        }
    }
    relevant.then_some(false)
}

pub fn demo_satisfies_clause(clause: &Clause, demo: &Demonstration, tau: f64) -> bool {
    demo.objects.iter().all(|o| object_satisfies_clause(o, clause, demo, tau) != Some(false))
}

/// Class-level disjunction: some atom holds as a whole class relation.
pub fn class_level_satisfies_clause(clause: &Clause, demo: &Demonstration, tau: f64) -> bool {
    clause.atoms().iter().any(|a| class_relation_holds(a, demo, tau))
}

pub fn clause_holds(clause: &Clause, demo: &Demonstration, tau: f64, semantics: ClauseSemantics) -> bool {
    match semantics {
        ClauseSemantics::PerObject => demo_satisfies_clause(clause, demo, tau),
        ClauseSemantics::ClassLevel => class_level_satisfies_clause(clause, demo, tau),
    }
}

pub fn demo_satisfies_spec(spec: &Spec, demo: &Demonstration, tau: f64) -> bool {
    spec.clauses().all(|c| demo_satisfies_clause(c, demo, tau))
}

/// Number of clauses of `spec` that `demo` satisfies.
pub fn satisfied_clause_count(spec: &Spec, demo: &Demonstration, tau: f64) -> usize {
    spec.clauses().filter(|c| demo_satisfies_clause(c, demo, tau)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectViolation {
    pub object_id: String,
    /// Atoms headed by the object's class; all of them failed.
    pub failed_atoms: Vec<String>,
}

/// Why a clause is unsatisfied: the objects that satisfy none of their atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub clause: Clause,
    pub violating_object_ids: Vec<String>,
    pub per_atom_detail: Vec<ObjectViolation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violating_object_ids.is_empty()
    }
}

pub fn explain_clause(clause: &Clause, demo: &Demonstration, tau: f64) -> ViolationReport {
    let mut ids = Vec::new();
    let mut detail = Vec::new();
    for o in &demo.objects {
        if object_satisfies_clause(o, clause, demo, tau) == Some(false) {
            ids.push(o.id.clone());
            detail.push(ObjectViolation {
                object_id: o.id.clone(),
                failed_atoms: clause.atoms().iter().filter(|a| a.head == o.cls).map(|a| a.to_string()).collect(),
            });
        }
    }
    ViolationReport { clause: clause.clone(), violating_object_ids: ids, per_atom_detail: detail }
}

/// One report per unsatisfied clause, in canonical clause order.
pub fn explain(spec: &Spec, demo: &Demonstration, tau: f64) -> Vec<ViolationReport> {
    spec.clauses().map(|c| explain_clause(c, demo, tau)).filter(|r| !r.is_empty()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_spec;
    use crate::geometry::Direction::*;
    use crate::geometry::{ObjectClass, Space};

    fn demo(objects: Vec<SceneObject>, classes: &[&str]) -> Demonstration {
        Demonstration::new(
            objects,
            Space::new(-20.0, 20.0, -20.0, 20.0).unwrap(),
            classes.iter().map(|c| ObjectClass::movable(*c)).collect(),
        )
        .unwrap()
    }

    fn obj(id: &str, cls: &str, x: f64, y: f64) -> SceneObject {
        SceneObject::new(id, cls, 1.0, 1.0, x, y)
    }

    /// Apples east of cans; apples a1,a2 touch side by side, a3 stands apart.
    fn apples_and_cans() -> Demonstration {
        demo(
            vec![
                obj("c1", "C", 0.0, 0.0),
                obj("c2", "C", 0.0, 3.0),
                obj("a1", "A", 3.0, 0.0),
                obj("a2", "A", 4.0, 0.0),
                obj("a3", "A", 3.0, 3.0),
            ],
            &["A", "C"],
        )
    }

    #[test]
    fn every_apple_east_of_every_can() {
        let d = apples_and_cans();
        let atom = Atom::dr(E, "A", "C");
        for a in d.objects_of("A") {
            assert!(object_satisfies_atom(a, &atom, &d, 0.0).unwrap());
        }
        assert!(class_relation_holds(&atom, &d, 0.0));
    }

    #[test]
    fn not_every_apple_touches_one_to_the_east() {
        let d = apples_and_cans();
        let atom = Atom::ec(E, "A", "A");
        assert!(object_satisfies_atom(d.object("a1").unwrap(), &atom, &d, 0.0).unwrap());
        assert!(!object_satisfies_atom(d.object("a2").unwrap(), &atom, &d, 0.0).unwrap());
        assert!(!class_relation_holds(&atom, &d, 0.0));
    }

    #[test]
    fn lone_object_has_no_partner() {
        let d = demo(vec![obj("a", "A", 0.0, 0.0)], &["A"]);
        let atom = Atom::ec(N, "A", "A");
        assert!(!object_satisfies_atom(&d.objects[0], &atom, &d, 0.0).unwrap());
        // DR over an empty partner set is vacuous
        assert!(object_satisfies_atom(&d.objects[0], &Atom::dr(N, "A", "A"), &d, 0.0).unwrap());
        assert!(!object_satisfies_atom(&d.objects[0], &Atom::dr(N, "A", "A").negate(), &d, 0.0).unwrap());
    }

    #[test]
    fn class_mismatch_is_an_error() {
        let d = apples_and_cans();
        let err = object_satisfies_atom(d.object("c1").unwrap(), &Atom::dr(E, "A", "C"), &d, 0.0);
        assert!(matches!(err, Err(EvalError::ClassMismatch { .. })));
    }

    #[test]
    fn empty_head_class_is_vacuous() {
        let d = demo(vec![obj("c", "C", 0.0, 0.0)], &["A", "C"]);
        assert!(class_relation_holds(&Atom::ec(N, "A", "C"), &d, 0.0));
        assert!(class_relation_holds(&Atom::dr(N, "A", "C"), &d, 0.0));
        assert!(class_relation_holds(&Atom::dr(N, "A", "C").negate(), &d, 0.0));
    }

    #[test]
    fn column_of_oranges() {
        let d = demo(vec![obj("o1", "O", 0.0, 0.0), obj("o2", "O", 0.0, 1.0), obj("o3", "O", 0.0, 2.0)], &["O"]);
        let c: Clause = "EC_N(O,O) | EC_S(O,O)".parse().unwrap();
        assert!(demo_satisfies_clause(&c, &d, 1e-9));
        // neither direction alone covers the ends of the column
        assert!(!demo_satisfies_clause(&"EC_N(O,O)".parse().unwrap(), &d, 1e-9));
        assert!(!class_level_satisfies_clause(&c, &d, 1e-9));
    }

    #[test]
    fn per_object_and_class_level_diverge() {
        // a1 north of the only B, a2 south of it
        let d = demo(vec![obj("b", "B", 0.0, 0.0), obj("a1", "A", 0.0, 3.0), obj("a2", "A", 0.0, -3.0)], &["A", "B"]);
        let c: Clause = "DR_N(A,B) | DR_S(A,B)".parse().unwrap();
        assert!(clause_holds(&c, &d, 0.0, ClauseSemantics::PerObject));
        assert!(!clause_holds(&c, &d, 0.0, ClauseSemantics::ClassLevel));
    }

    #[test]
    fn unit_clause_matches_class_relation() {
        let d = apples_and_cans();
        for text in ["DR_E(A, C)", "EC_E(A, A)", "!EC_E(A, A)", "!DR_W(A, C)", "EC_W(A, A)"] {
            let c: Clause = text.parse().unwrap();
            assert_eq!(demo_satisfies_clause(&c, &d, 0.0), class_relation_holds(&c.atoms()[0], &d, 0.0), "{text}");
        }
    }

    #[test]
    fn spec_violations_are_reported() {
        let d = demo(vec![obj("b1", "B", 0.0, 0.0), obj("r1", "R", 0.0, 3.0)], &["B", "R"]);
        let spec = parse_spec("DR_N(B, R)").unwrap();
        assert!(!demo_satisfies_spec(&spec, &d, 0.0));
        let reports = explain(&spec, &d, 0.0);
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].violating_object_ids, vec!["b1".to_string()]);
        assert_eq!(reports[0].per_atom_detail[0].failed_atoms, vec!["DR_N(B, R)".to_string()]);

        assert!(demo_satisfies_spec(&Spec::default(), &d, 0.0));
        assert!(explain(&Spec::default(), &d, 0.0).is_empty());
    }

    #[test]
    fn unknown_spec_class_detected() {
        let d = apples_and_cans();
        let spec = parse_spec("DR_E(A, Z)").unwrap();
        assert_eq!(check_spec_classes(&spec, &d), Err(EvalError::UnknownClass("Z".into())));
    }
}
