//! Placement synthesis: lay out an object inventory so that a spec holds.
//!
//! Objects are placed one at a time, most-constrained class first. Candidate
//! positions come from snap lines (edges flush against, or aligned with,
//! every placed object and the space boundary) plus a few uniform draws;
//! contact constraints have measure-zero solution sets, so uniform sampling
//! alone essentially never satisfies them. After each placement the spec is
//! evaluated three-valued over the partial layout and any definitely violated
//! clause prunes the branch. Dead ends backtrack; exhausted runs restart with
//! fresh randomness until the iteration budget runs out.
//!
//! Infeasibility is only proven for direct contradictions between unit
//! clauses. Every other failure is reported as budget exhaustion.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evaluator::{demo_satisfies_spec, satisfied_clause_count};
use crate::formula::{Atom, Clause, RelationKind, Spec};
use crate::geometry::{
    dr_directed, ec_directed, interiors_disjoint, Demonstration, Direction, GeometryError, ObjectClass, SceneObject,
    Space, DEFAULT_TAU,
};
use crate::inference::stream_rng;

pub const DEFAULT_BUDGET: usize = 400_000;

/// Candidates scored per placement step.
const MAX_CANDIDATES: usize = 96;
/// Alternatives tried at each level before backtracking further.
const BRANCHING: usize = 3;
/// Uniform coordinate draws mixed into the snap lines.
const UNIFORM_DRAWS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventoryItem {
    #[serde(rename = "class")]
    pub cls: String,
    pub l: f64,
    pub w: f64,
    pub count: usize,
}

/// Objects to place, the space to place them in, and fixed scenery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inventory {
    pub space: Space,
    pub items: Vec<InventoryItem>,
    #[serde(default)]
    pub fixed_objects: Vec<SceneObject>,
}

impl Inventory {
    /// Movable classes in item order, then fixed classes in order of appearance.
    pub fn classes(&self) -> Vec<ObjectClass> {
        let mut seen = BTreeSet::new();
        let mut classes = Vec::new();
        for item in &self.items {
            if seen.insert(item.cls.clone()) {
                classes.push(ObjectClass::movable(&item.cls));
            }
        }
        for o in &self.fixed_objects {
            if seen.insert(o.cls.clone()) {
                classes.push(ObjectClass::fixed(&o.cls));
            }
        }
        classes
    }

    pub fn count_of(&self, class: &str) -> usize {
        self.items.iter().filter(|i| i.cls == class).map(|i| i.count).sum::<usize>()
            + self.fixed_objects.iter().filter(|o| o.cls == class).count()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.space.validate()?;
        if self.items.is_empty() {
            return Err(SynthError::InvalidInventory("inventory has no items".into()));
        }
        let mut names = BTreeSet::new();
        for item in &self.items {
            if item.count == 0 {
                return Err(SynthError::InvalidInventory(format!("item `{}` has count 0", item.cls)));
            }
            if !(item.l > 0.0 && item.w > 0.0) || !item.l.is_finite() || !item.w.is_finite() {
                return Err(SynthError::InvalidInventory(format!("item `{}` needs positive extents", item.cls)));
            }
            if !names.insert(item.cls.as_str()) {
                return Err(SynthError::InvalidInventory(format!("class `{}` listed twice", item.cls)));
            }
        }
        let mut ids = BTreeSet::new();
        for o in &self.fixed_objects {
            o.validate()?;
            if names.contains(o.cls.as_str()) {
                return Err(SynthError::InvalidInventory(format!("class `{}` is both movable and fixed", o.cls)));
            }
            if !ids.insert(o.id.as_str()) {
                return Err(GeometryError::DuplicateObject(o.id.clone()).into());
            }
        }
        for (item, i) in self.items.iter().flat_map(|it| (1..=it.count).map(move |i| (it, i))) {
            let id = object_id(&item.cls, i);
            if ids.contains(id.as_str()) {
                return Err(SynthError::InvalidInventory(format!("generated id `{id}` clashes with a fixed object")));
            }
        }
        Ok(())
    }
}

fn object_id(class: &str, index: usize) -> String {
    format!("{class}{index}")
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("invalid inventory: {0}")]
    InvalidInventory(String),
    #[error("spec refers to class `{0}`, which the inventory does not contain")]
    UnknownClass(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("placement {index} failed: {}", .infeasible.reason)]
    Infeasible { index: usize, infeasible: Infeasibility },
}

/// Why no layout was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Infeasibility {
    /// `true` when the spec is contradictory for this inventory; `false`
    /// when the search merely ran out of budget.
    pub proven: bool,
    pub reason: String,
    /// Most movable objects placed without violating the spec.
    pub best_placed: usize,
    /// Clauses satisfied by that best partial layout.
    pub best_satisfied: usize,
    pub total_clauses: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Placed(Demonstration),
    Infeasible(Infeasibility),
}

impl Placement {
    pub fn demonstration(&self) -> Option<&Demonstration> {
        match self {
            Placement::Placed(d) => Some(d),
            Placement::Infeasible(_) => None,
        }
    }
}

/// Direct contradictions between unit clauses, given class sizes.
fn unit_contradiction(spec: &Spec, count: impl Fn(&str) -> usize) -> Option<String> {
    let units: Vec<&Atom> = spec.clauses().filter(|c| c.is_unit()).map(|c| &c.atoms()[0]).collect();
    // an object of `head` with at least one partner in `related`
    let has_pair = |head: &str, related: &str| {
        let h = count(head);
        let r = count(related);
        h >= 1 && if head == related { r >= 2 } else { r >= 1 }
    };
    for a in &units {
        if a.kind == RelationKind::EC && !a.negated && count(&a.head) >= 1 && !has_pair(&a.head, &a.related) {
            return Some(format!("`{a}` needs a partner but `{}` has none", a.related));
        }
    }
    for (i, a) in units.iter().enumerate() {
        for b in &units[i + 1..] {
            let same_relation = a.kind == b.kind && a.dir == b.dir && a.head == b.head && a.related == b.related;
            if same_relation && a.negated != b.negated && count(&a.head) >= 1 {
                return Some(format!("`{a}` contradicts `{b}`"));
            }
            if a.kind != RelationKind::DR || b.kind != RelationKind::DR || a.negated || b.negated {
                continue;
            }
            let opposite = a.dir == b.dir.opposite() && a.head == b.head && a.related == b.related;
            let swapped = a.dir == b.dir && a.head == b.related && a.related == b.head && a.head != a.related;
            if (opposite || swapped) && has_pair(&a.head, &a.related) {
                return Some(format!("`{a}` contradicts `{b}`"));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn flip(self, negated: bool) -> Truth {
        match (self, negated) {
            (Truth::True, true) => Truth::False,
            (Truth::False, true) => Truth::True,
            (t, _) => t,
        }
    }
}

struct Pending {
    id: String,
    cls: String,
    l: f64,
    w: f64,
    item: usize,
    index: usize,
}

struct Layout {
    placed: Vec<SceneObject>,
    remaining: HashMap<String, usize>,
}

struct Search<'a> {
    spec: &'a Spec,
    clauses: Vec<&'a Clause>,
    /// Clause indices mentioning each class.
    by_class: HashMap<&'a str, Vec<usize>>,
    order: Vec<Pending>,
    space: Space,
    classes: Vec<ObjectClass>,
    fixed: Vec<SceneObject>,
    tau: f64,
}

struct Progress {
    budget: usize,
    used: usize,
    best_placed: usize,
    best_layout: Vec<SceneObject>,
}

impl<'a> Search<'a> {
    fn atom_truth(&self, layout: &Layout, o: &SceneObject, atom: &Atom) -> Truth {
        let remaining = layout.remaining.get(&atom.related).copied().unwrap_or(0);
        let mut partners = layout.placed.iter().filter(|b| b.cls == atom.related && b.id != o.id);
        let positive = match atom.kind {
            RelationKind::DR => {
                if partners.any(|b| !dr_directed(o, b, atom.dir, self.tau)) {
                    Truth::False
                } else if remaining == 0 {
                    Truth::True
                } else {
                    Truth::Unknown
                }
            }
            RelationKind::EC => {
                if partners.any(|b| ec_directed(o, b, atom.dir, self.tau)) {
                    Truth::True
                } else if remaining == 0 {
                    Truth::False
                } else {
                    Truth::Unknown
                }
            }
        };
        positive.flip(atom.negated)
    }

    fn object_clause_truth(&self, layout: &Layout, o: &SceneObject, clause: &Clause) -> Option<Truth> {
        let mut relevant = false;
        let mut unknown = false;
        for atom in clause.atoms().iter().filter(|a| a.head == o.cls) {
            relevant = true;
            match self.atom_truth(layout, o, atom) {
                Truth::True => return Some(Truth::True),
                Truth::Unknown => unknown = true,
                Truth::False => {}
            }
        }
        relevant.then_some(if unknown { Truth::Unknown } else { Truth::False })
    }

    /// `None` if some clause is definitely violated, else the number of
    /// (object, clause) pairs already definitely satisfied.
    fn assess(&self, layout: &Layout, clauses: &[usize]) -> Option<usize> {
        let mut satisfied = 0;
        for &ci in clauses {
            let clause = self.clauses[ci];
            for o in &layout.placed {
                match self.object_clause_truth(layout, o, clause) {
                    Some(Truth::False) => return None,
                    Some(Truth::True) => satisfied += 1,
                    _ => {}
                }
            }
        }
        Some(satisfied)
    }

    fn candidates<R: Rng>(&self, layout: &Layout, l: f64, w: f64, rng: &mut R) -> Vec<(f64, f64)> {
        let s = self.space;
        let (hl, hw) = (l / 2.0, w / 2.0);
        let mut xs = vec![s.x_min + hl, s.x_max - hl];
        let mut ys = vec![s.y_min + hw, s.y_max - hw];
        for p in &layout.placed {
            let e = p.edges();
            xs.extend([e.left - hl, e.right + hl, e.left + hl, e.right - hl]);
            ys.extend([e.bottom - hw, e.top + hw, e.bottom + hw, e.top - hw]);
        }
        for _ in 0..UNIFORM_DRAWS {
            xs.push(rng.random_range(s.x_min + hl..=s.x_max - hl));
            ys.push(rng.random_range(s.y_min + hw..=s.y_max - hw));
        }
        let inside_x = |x: f64| x - hl >= s.x_min - self.tau && x + hl <= s.x_max + self.tau;
        let inside_y = |y: f64| y - hw >= s.y_min - self.tau && y + hw <= s.y_max + self.tau;
        xs.retain(|&x| inside_x(x));
        ys.retain(|&y| inside_y(y));
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() <= self.tau);
        ys.sort_by(f64::total_cmp);
        ys.dedup_by(|a, b| (*a - *b).abs() <= self.tau);

        // bucket by number of side contacts; corners (two or more) matter most
        let mut buckets: [Vec<(f64, f64)>; 3] = Default::default();
        let mut probe = SceneObject::new("", "", l, w, 0.0, 0.0);
        for &x in &xs {
            for &y in &ys {
                probe.x = x;
                probe.y = y;
                if !layout.placed.iter().all(|p| interiors_disjoint(&probe, p, self.tau)) {
                    continue;
                }
                let contacts = layout
                    .placed
                    .iter()
                    .filter(|p| Direction::ALL.iter().any(|&d| ec_directed(&probe, p, d, self.tau)))
                    .count();
                buckets[contacts.min(2)].push((x, y));
            }
        }
        let quotas = [MAX_CANDIDATES / 6, MAX_CANDIDATES / 3, MAX_CANDIDATES];
        let mut out = Vec::with_capacity(MAX_CANDIDATES);
        for bucket in buckets.iter_mut().rev() {
            bucket.shuffle(rng);
        }
        let [none, one, many] = buckets;
        out.extend(many.into_iter().take(quotas[2]));
        let room = MAX_CANDIDATES.saturating_sub(out.len());
        out.extend(one.into_iter().take(quotas[1].max(room.saturating_sub(quotas[0]))));
        let room = MAX_CANDIDATES.saturating_sub(out.len());
        out.extend(none.into_iter().take(quotas[0].max(room)));
        out
    }

    fn to_demo(&self, placed: &[SceneObject]) -> Demonstration {
        Demonstration { objects: placed.to_vec(), space: self.space, classes: self.classes.clone() }
    }

    /// Fixed objects first, then movable objects in inventory order.
    fn finish(&self, placed: &[SceneObject]) -> Demonstration {
        let key: HashMap<&str, (usize, usize)> =
            self.order.iter().map(|p| (p.id.as_str(), (p.item, p.index))).collect();
        let mut movable: Vec<SceneObject> =
            placed.iter().filter(|o| key.contains_key(o.id.as_str())).cloned().collect();
        movable.sort_by_key(|o| key[o.id.as_str()]);
        let mut objects = self.fixed.clone();
        objects.extend(movable);
        self.to_demo(&objects)
    }

    fn dfs<R: Rng>(&self, depth: usize, layout: &mut Layout, rng: &mut R, progress: &mut Progress) -> bool {
        let n_fixed = self.fixed.len();
        if depth > progress.best_placed {
            progress.best_placed = depth;
            progress.best_layout = layout.placed.clone();
        }
        if depth == self.order.len() {
            return demo_satisfies_spec(self.spec, &self.to_demo(&layout.placed), self.tau);
        }
        let next = &self.order[depth];
        let touched = self.by_class.get(next.cls.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let mut scored = Vec::new();
        *layout.remaining.get_mut(&next.cls).expect("pending class is tracked") -= 1;
        for (x, y) in self.candidates(layout, next.l, next.w, rng) {
            if progress.used >= progress.budget {
                break;
            }
            progress.used += 1;
            layout.placed.push(SceneObject::new(next.id.clone(), next.cls.clone(), next.l, next.w, x, y));
            if let Some(score) = self.assess(layout, touched) {
                scored.push((score, rng.random::<u32>(), x, y));
            }
            layout.placed.pop();
        }
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, _, x, y) in scored.iter().take(BRANCHING) {
            layout.placed.push(SceneObject::new(next.id.clone(), next.cls.clone(), next.l, next.w, x, y));
            if self.dfs(depth + 1, layout, rng, progress) {
                return true;
            }
            layout.placed.pop();
            debug_assert!(layout.placed.len() == n_fixed + depth);
            if progress.used >= progress.budget {
                break;
            }
        }
        *layout.remaining.get_mut(&next.cls).expect("pending class is tracked") += 1;
        false
    }
}

/// Lays out `inventory` so that `spec` holds, or explains why not.
///
/// `budget` caps the number of candidate positions evaluated. A returned
/// layout has been re-verified against the full spec.
pub fn place<R: Rng>(spec: &Spec, inventory: &Inventory, rng: &mut R, budget: usize) -> Result<Placement, SynthError> {
    place_with_tolerance(spec, inventory, rng, budget, DEFAULT_TAU)
}

pub fn place_with_tolerance<R: Rng>(
    spec: &Spec,
    inventory: &Inventory,
    rng: &mut R,
    budget: usize,
    tau: f64,
) -> Result<Placement, SynthError> {
    inventory.validate()?;
    let classes = inventory.classes();
    for class in spec.classes() {
        if !classes.iter().any(|c| c.name == class) {
            return Err(SynthError::UnknownClass(class.to_string()));
        }
    }
    let clauses: Vec<&Clause> = spec.clauses().collect();
    if let Some(reason) = unit_contradiction(spec, |c| inventory.count_of(c)) {
        return Ok(Placement::Infeasible(Infeasibility {
            proven: true,
            reason,
            best_placed: 0,
            best_satisfied: 0,
            total_clauses: clauses.len(),
            iterations: 0,
        }));
    }

    let mut by_class: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut degree: BTreeMap<&str, usize> = BTreeMap::new();
    for (ci, clause) in clauses.iter().enumerate() {
        for class in clause.classes() {
            by_class.entry(class).or_default().push(ci);
        }
        for atom in clause.atoms() {
            *degree.entry(atom.head.as_str()).or_default() += 1;
            if atom.related != atom.head {
                *degree.entry(atom.related.as_str()).or_default() += 1;
            }
        }
    }
    let mut order: Vec<Pending> = inventory
        .items
        .iter()
        .enumerate()
        .flat_map(|(item, it)| {
            (1..=it.count).map(move |index| Pending {
                id: object_id(&it.cls, index),
                cls: it.cls.clone(),
                l: it.l,
                w: it.w,
                item,
                index,
            })
        })
        .collect();
    let degree_of = |c: &str| degree.get(c).copied().unwrap_or(0);
    order.sort_by(|a, b| {
        degree_of(&b.cls).cmp(&degree_of(&a.cls)).then_with(|| a.cls.cmp(&b.cls)).then(a.index.cmp(&b.index))
    });

    let search = Search {
        spec,
        clauses,
        by_class,
        order,
        space: inventory.space,
        classes,
        fixed: inventory.fixed_objects.clone(),
        tau,
    };
    let total_clauses = search.clauses.len();
    let fresh_layout = || Layout {
        placed: search.fixed.clone(),
        remaining: inventory.items.iter().map(|i| (i.cls.clone(), i.count)).collect(),
    };

    let all: Vec<usize> = (0..total_clauses).collect();
    if search.assess(&fresh_layout(), &all).is_none() {
        return Ok(Placement::Infeasible(Infeasibility {
            proven: true,
            reason: "the fixed objects alone already violate the spec".into(),
            best_placed: 0,
            best_satisfied: satisfied_clause_count(spec, &search.to_demo(&search.fixed), tau),
            total_clauses,
            iterations: 0,
        }));
    }

    let run_budget = 40 * MAX_CANDIDATES * search.order.len().max(1);
    let mut progress = Progress { budget: 0, used: 0, best_placed: 0, best_layout: search.fixed.clone() };
    while progress.used < budget {
        progress.budget = (progress.used + run_budget).min(budget);
        let mut layout = fresh_layout();
        if search.dfs(0, &mut layout, rng, &mut progress) {
            return Ok(Placement::Placed(search.finish(&layout.placed)));
        }
    }
    Ok(Placement::Infeasible(Infeasibility {
        proven: false,
        reason: format!("no satisfying layout found within {budget} iterations"),
        best_placed: progress.best_placed,
        best_satisfied: satisfied_clause_count(spec, &search.to_demo(&progress.best_layout), tau),
        total_clauses,
        iterations: progress.used,
    }))
}

/// `k` verified layouts; layout `i` uses stream `i` of `seed`. On failure
/// the error names the lowest failing index.
pub fn sample_satisfying_set(
    spec: &Spec,
    inventory: &Inventory,
    k: usize,
    seed: u64,
    budget: usize,
) -> Result<Vec<Demonstration>, SynthError> {
    sample_satisfying_set_with(spec, |_| inventory.clone(), k, seed, budget, DEFAULT_TAU)
}

/// Like [`sample_satisfying_set`] with a per-layout inventory.
pub fn sample_satisfying_set_with<F>(
    spec: &Spec,
    inventory_for: F,
    k: usize,
    seed: u64,
    budget: usize,
    tau: f64,
) -> Result<Vec<Demonstration>, SynthError>
where
    F: Fn(usize) -> Inventory + Sync,
{
    (0..k)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream_rng(seed, index as u64);
            match place_with_tolerance(spec, &inventory_for(index), &mut rng, budget, tau)? {
                Placement::Placed(demo) => Ok(demo),
                Placement::Infeasible(infeasible) => Err(SynthError::Infeasible { index, infeasible }),
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
