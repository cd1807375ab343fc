//! Learning a CNF spec from demonstrations.
//!
//! Inference runs in two stages:
//!
//! 1. [`find_disjunctions`] enumerates clauses permitted by a [`Template`] in
//!    order of increasing length and keeps those satisfied by every
//!    demonstration. A clause with a proper subset already kept is implied
//!    by that subset and is skipped without being checked.
//! 2. [`infer`] scores each surviving clause by the chance that randomly
//!    re-placed demonstrations satisfy it. With `f` the fraction of relevant
//!    objects in the random set satisfying the clause (floored at `ε`), and
//!    objects treated as independent, the chance that all demonstrations
//!    satisfy it by accident is `f` raised to the number of relevant objects
//!    they contain. Clauses whose chance falls below `p_c` are accepted.
//!
//! An object is relevant to a clause when its class heads at least one of
//! the clause's atoms.

mod sampling;
mod table;
mod template;

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evaluator::object_satisfies_clause;
use crate::formula::{Clause, Spec};
use crate::geometry::{Demonstration, ObjectClass};

pub use sampling::{sample_rand_demo, sample_rand_demos, stream_rng, SamplingError, SamplingOptions};
pub use table::{clause_heads, DemoTable};
pub use template::{
    candidate_space_size, count_clauses, enumerate_clauses, enumerate_indexed, AtomUniverse, ClassFilter,
    RelationPattern, Template, TemplateError,
};

/// Candidates processed per parallel batch during the search.
const BATCH: usize = 1 << 15;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InferenceError {
    #[error("at least one demonstration is required")]
    NoDemonstrations,
    #[error("demonstration {index} is inconsistent with the first: {reason}")]
    InconsistentDemos { index: usize, reason: String },
    #[error("invalid inference parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("no object in the random demonstrations is relevant to `{0}`")]
    NoRelevantObjects(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

fn default_p_cutoff() -> f64 {
    0.05
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_k_r() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceParams {
    /// Acceptance cutoff `p_c`.
    #[serde(default = "default_p_cutoff", rename = "p_c")]
    pub p_cutoff: f64,
    /// Probability floor `ε`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Number of random demonstrations `k_r`.
    #[serde(default = "default_k_r")]
    pub k_r: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub collision_free_sampling: bool,
    #[serde(default)]
    pub resample_fixed_classes: bool,
}

impl Default for InferenceParams {
    fn default() -> Self {
        InferenceParams {
            p_cutoff: default_p_cutoff(),
            epsilon: default_epsilon(),
            k_r: default_k_r(),
            seed: 0,
            collision_free_sampling: false,
            resample_fixed_classes: false,
        }
    }
}

impl InferenceParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.epsilon) {
            return Err(InferenceError::InvalidParams(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !open_unit(self.p_cutoff) {
            return Err(InferenceError::InvalidParams(format!("p_c must lie in (0, 1), got {}", self.p_cutoff)));
        }
        if self.k_r == 0 {
            return Err(InferenceError::InvalidParams("k_r must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sampling(&self) -> SamplingOptions {
        SamplingOptions {
            collision_free: self.collision_free_sampling,
            resample_fixed_classes: self.resample_fixed_classes,
        }
    }
}

/// Demonstrations must share one space and one class set.
pub fn check_consistent(demos: &[Demonstration]) -> Result<(), InferenceError> {
    let first = demos.first().ok_or(InferenceError::NoDemonstrations)?;
    let classes = |d: &Demonstration| d.classes.iter().cloned().collect::<BTreeSet<ObjectClass>>();
    let reference = classes(first);
    for (index, d) in demos.iter().enumerate().skip(1) {
        if d.space != first.space {
            return Err(InferenceError::InconsistentDemos { index, reason: "different placement space".into() });
        }
        if classes(d) != reference {
            return Err(InferenceError::InconsistentDemos { index, reason: "different class set".into() });
        }
    }
    Ok(())
}

/// Output of the candidate search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disjunctions {
    /// Kept clauses in discovery order.
    pub clauses: Vec<Clause>,
    /// Clauses produced by the template.
    pub enumerated: u64,
    /// Clauses actually checked against the demonstrations (not pruned).
    pub checked: u64,
}

struct IndexedSearch {
    clauses: Vec<Vec<u32>>,
    enumerated: u64,
    checked: u64,
}

fn has_kept_subset(clause: &[u32], kept: &HashSet<Box<[u32]>>, kept_lens: &[bool]) -> bool {
    let n = clause.len();
    if n < 2 {
        return false;
    }
    let mut buf = Vec::with_capacity(n);
    for mask in 1u64..(1u64 << n) - 1 {
        let size = mask.count_ones() as usize;
        if !kept_lens.get(size).copied().unwrap_or(false) {
            continue;
        }
        buf.clear();
        buf.extend((0..n).filter(|i| mask >> i & 1 == 1).map(|i| clause[i]));
        if kept.contains(buf.as_slice()) {
            return true;
        }
    }
    false
}

fn search(template: &Template, universe: &AtomUniverse, tables: &[DemoTable]) -> IndexedSearch {
    let mut kept_set: HashSet<Box<[u32]>> = HashSet::new();
    let mut kept_lens = vec![false; template.max_len + 1];
    let mut kept = Vec::new();
    let (mut enumerated, mut checked) = (0u64, 0u64);

    for n in 1..=template.max_len {
        let mut stream = enumerate_indexed(template, universe, n).peekable();
        let mut level = Vec::new();
        while stream.peek().is_some() {
            let batch: Vec<Vec<u32>> = stream.by_ref().take(BATCH).collect();
            enumerated += batch.len() as u64;
            // proper subsets are strictly shorter, so same-length additions never prune each other
            let verdicts: Vec<(bool, bool)> = batch
                .par_iter()
                .map(|c| {
                    if has_kept_subset(c, &kept_set, &kept_lens) {
                        return (false, false);
                    }
                    let heads = clause_heads(universe, c);
                    (true, tables.iter().all(|t| t.satisfies(c, &heads)))
                })
                .collect();
            for (c, (was_checked, satisfied)) in batch.into_iter().zip(verdicts) {
                checked += was_checked as u64;
                if satisfied {
                    level.push(c);
                }
            }
        }
        if !level.is_empty() {
            kept_lens[n] = true;
        }
        for c in level {
            kept_set.insert(c.clone().into_boxed_slice());
            kept.push(c);
        }
    }
    IndexedSearch { clauses: kept, enumerated, checked }
}

fn class_names(demo: &Demonstration) -> Vec<&str> {
    demo.class_names()
}

/// Clauses satisfied by every demonstration, minimal under subsumption.
pub fn find_disjunctions(
    demos: &[Demonstration],
    template: &Template,
    tau: f64,
) -> Result<Disjunctions, InferenceError> {
    check_consistent(demos)?;
    template.validate()?;
    let universe = AtomUniverse::new(&class_names(&demos[0]));
    let tables: Vec<DemoTable> = demos.par_iter().map(|d| DemoTable::build(d, &universe, tau)).collect();
    let found = search(template, &universe, &tables);
    Ok(Disjunctions {
        clauses: found.clauses.iter().map(|c| universe.clause(c)).collect(),
        enumerated: found.enumerated,
        checked: found.checked,
    })
}

/// Fraction of relevant random-demo objects satisfying a clause.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatFraction {
    pub satisfied: u64,
    pub relevant: u64,
    /// `max(ε, satisfied / relevant)`.
    pub value: f64,
}

impl SatFraction {
    fn new(satisfied: u64, relevant: u64, epsilon: f64) -> Option<Self> {
        (relevant > 0).then(|| SatFraction {
            satisfied,
            relevant,
            value: (satisfied as f64 / relevant as f64).max(epsilon),
        })
    }
}

fn relevant_objects(clause: &Clause, demo: &Demonstration) -> u64 {
    demo.objects.iter().filter(|o| clause.heads_class(&o.cls)).count() as u64
}

/// Share of relevant objects across `random` that satisfy `clause`, floored at `epsilon`.
pub fn object_sat_fraction(
    clause: &Clause,
    random: &[Demonstration],
    epsilon: f64,
    tau: f64,
) -> Result<SatFraction, InferenceError> {
    let (mut sat, mut relevant) = (0u64, 0u64);
    for demo in random {
        for o in &demo.objects {
            match object_satisfies_clause(o, clause, demo, tau) {
                Some(true) => {
                    sat += 1;
                    relevant += 1;
                }
                Some(false) => relevant += 1,
                None => {}
            }
        }
    }
    SatFraction::new(sat, relevant, epsilon).ok_or_else(|| InferenceError::NoRelevantObjects(clause.to_string()))
}

/// Chance that every demonstration satisfies `clause` without intent.
pub fn clause_accept_probability(
    clause: &Clause,
    demos: &[Demonstration],
    random: &[Demonstration],
    epsilon: f64,
    tau: f64,
) -> Result<f64, InferenceError> {
    let f = object_sat_fraction(clause, random, epsilon, tau)?;
    let count: u64 = demos.iter().map(|d| relevant_objects(clause, d)).sum();
    Ok(f.value.powf(count as f64))
}

/// Score of one candidate clause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub clause: Clause,
    /// Chance of accidental satisfaction by all demonstrations. Very small
    /// values may round to zero; `log10_p_phi` stays exact.
    pub p_phi: f64,
    pub log10_p_phi: f64,
    pub accepted: bool,
    /// Per-demonstration factors whose product is `p_phi`.
    pub per_demo_probabilities: Vec<f64>,
    /// `None` when no demonstration contains a relevant object.
    pub sat_fraction: Option<SatFraction>,
    /// Relevant objects summed over the demonstrations.
    pub relevant_objects: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceStats {
    pub enumerated: u64,
    pub checked: u64,
    pub candidates: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub spec: Spec,
    pub reports: Vec<CandidateReport>,
    pub stats: InferenceStats,
}

fn score(clause: Clause, fraction: Option<SatFraction>, per_demo_relevant: &[u64], p_cutoff: f64) -> CandidateReport {
    let relevant: u64 = per_demo_relevant.iter().sum();
    let ln_f = fraction.map_or(0.0, |f| f.value.ln());
    let per_demo: Vec<f64> = per_demo_relevant.iter().map(|&n| (ln_f * n as f64).exp()).collect();
    let ln_p = ln_f * relevant as f64;
    CandidateReport {
        clause,
        p_phi: ln_p.exp(),
        log10_p_phi: ln_p / std::f64::consts::LN_10,
        accepted: ln_p < p_cutoff.ln(),
        per_demo_probabilities: per_demo,
        sat_fraction: fraction,
        relevant_objects: relevant,
    }
}

/// Scores clauses against a given set of random demonstrations.
pub fn score_candidates(
    clauses: &[Clause],
    demos: &[Demonstration],
    random: &[Demonstration],
    params: &InferenceParams,
    tau: f64,
) -> Result<Vec<CandidateReport>, InferenceError> {
    params.validate()?;
    check_consistent(demos)?;
    let universe = AtomUniverse::new(&class_names(&demos[0]));
    let demo_tables: Vec<DemoTable> = demos.par_iter().map(|d| DemoTable::build(d, &universe, tau)).collect();
    let random_tables: Vec<DemoTable> = random.par_iter().map(|d| DemoTable::build(d, &universe, tau)).collect();
    clauses
        .par_iter()
        .map(|clause| {
            let ix = universe
                .indices(clause)
                .ok_or_else(|| InferenceError::InvalidParams(format!("`{clause}` uses an unknown class")))?;
            let heads = clause_heads(&universe, &ix);
            let per_demo: Vec<u64> = demo_tables.iter().map(|t| t.relevant(&heads)).collect();
            let (sat, rel) =
                random_tables.iter().map(|t| t.count(&ix, &heads)).fold((0, 0), |(s, r), (a, b)| (s + a, r + b));
            let fraction = SatFraction::new(sat, rel, params.epsilon);
            if fraction.is_none() && per_demo.iter().any(|&n| n > 0) {
                return Err(InferenceError::NoRelevantObjects(clause.to_string()));
            }
            Ok(score(clause.clone(), fraction, &per_demo, params.p_cutoff))
        })
        .collect()
}

/// Full two-stage inference. Deterministic for a given seed.
pub fn infer(
    demos: &[Demonstration],
    template: &Template,
    params: &InferenceParams,
    tau: f64,
) -> Result<Inference, InferenceError> {
    params.validate()?;
    let found = find_disjunctions(demos, template, tau)?;
    let random = sample_rand_demos(demos, params.k_r, params.seed, &params.sampling())?;
    let reports = score_candidates(&found.clauses, demos, &random, params, tau)?;
    let spec: Spec = reports.iter().filter(|r| r.accepted).map(|r| r.clause.clone()).collect();
    let stats = InferenceStats {
        enumerated: found.enumerated,
        checked: found.checked,
        candidates: reports.len(),
        accepted: spec.len(),
    };
    Ok(Inference { spec, reports, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::demo_satisfies_clause;
    use crate::formula::subsumes;
    use crate::geometry::{SceneObject, Space};

    fn space() -> Space {
        Space::new(0.0, 10.0, 0.0, 10.0).unwrap()
    }

    fn demo_of(objects: Vec<SceneObject>, classes: &[&str]) -> Demonstration {
        Demonstration::new(objects, space(), classes.iter().map(|c| ObjectClass::movable(*c)).collect()).unwrap()
    }

    fn blue_over_red(shift: f64) -> Demonstration {
        demo_of(
            vec![
                SceneObject::new("b1", "B", 1.0, 1.0, 2.0 + shift, 8.0),
                SceneObject::new("b2", "B", 1.0, 1.0, 3.0 + shift, 8.0),
                SceneObject::new("r1", "R", 1.0, 1.0, 2.0, 2.0 + shift),
                SceneObject::new("r2", "R", 1.0, 1.0, 5.0, 1.0),
            ],
            &["B", "R"],
        )
    }

    #[test]
    fn blue_north_of_red_is_found() {
        let demos = vec![blue_over_red(0.0), blue_over_red(1.5)];
        let found = find_disjunctions(&demos, &Template::original(), 1e-6).unwrap();
        assert!(found.clauses.contains(&"DR_N(B, R)".parse().unwrap()));
        assert!(found.checked <= found.enumerated);
    }

    #[test]
    fn kept_clauses_are_never_subsumed_by_each_other() {
        let demos = vec![blue_over_red(0.0), blue_over_red(1.5)];
        let found = find_disjunctions(&demos, &Template::original(), 1e-6).unwrap();
        for (i, a) in found.clauses.iter().enumerate() {
            for b in &found.clauses[i + 1..] {
                assert!(!subsumes(a, b), "{a} subsumes later {b}");
            }
            for d in &demos {
                assert!(demo_satisfies_clause(a, d, 1e-6));
            }
        }
        // b1 touches b2 on its east side, so this single atom prunes its extensions
        let ec: Clause = "EC_E(B, B) | EC_W(B, B)".parse().unwrap();
        assert!(found.clauses.contains(&ec));
        assert!(!found.clauses.contains(&"EC_E(B, B) | EC_W(B, B) | EC_N(B, B)".parse().unwrap()));
    }

    #[test]
    fn inconsistent_metadata_rejected() {
        let a = blue_over_red(0.0);
        let mut b = blue_over_red(0.0);
        b.space = Space::new(0.0, 11.0, 0.0, 10.0).unwrap();
        assert!(matches!(
            find_disjunctions(&[a.clone(), b], &Template::original(), 0.0),
            Err(InferenceError::InconsistentDemos { index: 1, .. })
        ));
        let c = demo_of(vec![], &["B"]);
        assert!(matches!(check_consistent(&[a, c]), Err(InferenceError::InconsistentDemos { .. })));
        assert_eq!(check_consistent(&[]), Err(InferenceError::NoDemonstrations));
    }

    /// 10 relevant `A` objects, the first `k` of them touching a `B` on the north.
    fn fraction_demo(k: usize) -> Demonstration {
        let mut objects = Vec::new();
        for i in 0..10 {
            let x = i as f64 * 0.9 + 0.5;
            objects.push(SceneObject::new(format!("a{i}"), "A", 0.5, 0.5, x, 1.0));
            if i < k {
                objects.push(SceneObject::new(format!("b{i}"), "B", 0.5, 0.5, x, 1.5));
            }
        }
        demo_of(objects, &["A", "B"])
    }

    #[test]
    fn sat_fraction_examples() {
        let c: Clause = "EC_N(A, B)".parse().unwrap();
        let f = object_sat_fraction(&c, &[fraction_demo(2)], 0.01, 1e-9).unwrap();
        assert_eq!((f.satisfied, f.relevant), (2, 10));
        assert!((f.value - 0.2).abs() < 1e-15);
        let f = object_sat_fraction(&c, &[fraction_demo(0)], 0.01, 1e-9).unwrap();
        assert_eq!(f.value, 0.01);
        let f = object_sat_fraction(&c, &[fraction_demo(10)], 0.01, 1e-9).unwrap();
        assert_eq!(f.value, 1.0);

        let none = demo_of(vec![SceneObject::new("b", "B", 1.0, 1.0, 5.0, 5.0)], &["A", "B"]);
        assert!(matches!(object_sat_fraction(&c, &[none], 0.01, 0.0), Err(InferenceError::NoRelevantObjects(_))));
    }

    #[test]
    fn accept_probability_examples() {
        let c: Clause = "EC_N(A, B)".parse().unwrap();
        let random = [fraction_demo(2)];
        let three_a = |n: usize| {
            demo_of(
                (0..n).map(|i| SceneObject::new(format!("a{i}"), "A", 1.0, 1.0, 1.0 + 2.0 * i as f64, 5.0)).collect(),
                &["A", "B"],
            )
        };
        // 0.2 cubed
        let p = clause_accept_probability(&c, &[three_a(1), three_a(2)], &random, 0.01, 1e-9).unwrap();
        assert!((p - 0.008).abs() < 1e-15, "{p}");
        let p = clause_accept_probability(&c, &[three_a(3)], &[fraction_demo(10)], 0.01, 1e-9).unwrap();
        assert_eq!(p, 1.0);
        let p = clause_accept_probability(&c, &[three_a(2)], &[fraction_demo(0)], 0.01, 1e-9).unwrap();
        assert!((p - 1e-4).abs() < 1e-18, "{p}");
    }

    #[test]
    fn scoring_matches_reference_probability() {
        let demos = vec![blue_over_red(0.0), blue_over_red(1.5)];
        let params = InferenceParams { k_r: 20, ..Default::default() };
        let random = sample_rand_demos(&demos, 20, 5, &params.sampling()).unwrap();
        let found = find_disjunctions(&demos, &Template::original(), 1e-6).unwrap();
        let reports = score_candidates(&found.clauses, &demos, &random, &params, 1e-6).unwrap();
        for r in &reports {
            let p = clause_accept_probability(&r.clause, &demos, &random, params.epsilon, 1e-6).unwrap();
            assert!((r.p_phi - p).abs() <= 1e-12 * p.max(1e-300), "{}: {} vs {}", r.clause, r.p_phi, p);
            assert!(r.p_phi > 0.0 && r.p_phi <= 1.0);
            assert_eq!(r.accepted, r.p_phi < params.p_cutoff);
            let product: f64 = r.per_demo_probabilities.iter().product();
            assert!((product - r.p_phi).abs() <= 1e-12);
        }
    }

    #[test]
    fn inference_is_deterministic_and_sound() {
        let demos = vec![blue_over_red(0.0), blue_over_red(1.5), blue_over_red(0.7)];
        let params = InferenceParams { seed: 9, ..Default::default() };
        let a = infer(&demos, &Template::original(), &params, 1e-6).unwrap();
        let b = infer(&demos, &Template::original(), &params, 1e-6).unwrap();
        assert_eq!(a.spec, b.spec);
        assert_eq!(a.reports, b.reports);
        for c in a.spec.clauses() {
            for d in &demos {
                assert!(demo_satisfies_clause(c, d, 1e-6));
            }
        }
        assert!(a.spec.contains(&"DR_N(B, R)".parse().unwrap()));
    }

    #[test]
    fn parameter_validation() {
        let bad = [
            InferenceParams { epsilon: 0.0, ..Default::default() },
            InferenceParams { epsilon: 1.0, ..Default::default() },
            InferenceParams { p_cutoff: 1.5, ..Default::default() },
            InferenceParams { k_r: 0, ..Default::default() },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(InferenceError::InvalidParams(_))));
        }
        assert!(InferenceParams::default().validate().is_ok());
    }
}
