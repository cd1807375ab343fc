//! Axis-aligned rectangles and the directed `DR`/`EC` object relations.
//!
//! Argument conventions differ between the two relation kinds and are kept
//! exactly as the notation reads:
//!
//! * `DR_d(a, b)` places **a** in direction `d` of `b`: `DR_N(a, b)` means `a`
//!   lies entirely north of `b`.
//! * `EC_d(a, b)` places **b** on the `d` side of `a`: `EC_N(a, b)` means `b`
//!   rests against the top edge of `a`.
//!
//! Every predicate takes a contact tolerance `tau` (absolute coordinate
//! units). Edges closer than `tau` count as touching.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Contact tolerance used when none is given.
pub const DEFAULT_TAU: f64 = 1e-6;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("space must satisfy x_min < x_max and y_min < y_max")]
    DegenerateSpace,
    #[error("object `{id}` must have positive extents (got l={l}, w={w})")]
    NonPositiveExtent { id: String, l: f64, w: f64 },
    #[error("object `{id}` has a non-finite coordinate")]
    NonFinite { id: String },
    #[error("duplicate object id `{0}`")]
    DuplicateObject(String),
    #[error("duplicate class `{0}`")]
    DuplicateClass(String),
    #[error("object `{id}` refers to unknown class `{class}`")]
    UnknownClass { id: String, class: String },
    #[error("object `{id}` has its center outside the placement space")]
    OutsideSpace { id: String },
}

/// Rectangular region of the plane available for placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Space {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Space {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, GeometryError> {
        let space = Space { x_min, x_max, y_min, y_max };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        // NaN fails both comparisons
        if self.x_min < self.x_max && self.y_min < self.y_max {
            Ok(())
        } else {
            Err(GeometryError::DegenerateSpace)
        }
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// A label shared by objects governed by the same rules.
///
/// `fixed` marks environment classes (walls) that demonstrators and random
/// re-samplers leave in place.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectClass {
    pub name: String,
    #[serde(default)]
    pub fixed: bool,
}

impl ObjectClass {
    pub fn movable(name: impl Into<String>) -> Self {
        ObjectClass { name: name.into(), fixed: false }
    }

    pub fn fixed(name: impl Into<String>) -> Self {
        ObjectClass { name: name.into(), fixed: true }
    }
}

/// An axis-aligned rectangle given by its center and extents.
///
/// `l` is the extent along x and `w` the extent along y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: String,
    #[serde(rename = "class")]
    pub cls: String,
    pub l: f64,
    pub w: f64,
    pub x: f64,
    pub y: f64,
}

/// Derived edge coordinates of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edges {
    pub left: f64,
    pub right: f64,
    pub bottom: f64,
    pub top: f64,
}

impl SceneObject {
    pub fn new(id: impl Into<String>, cls: impl Into<String>, l: f64, w: f64, x: f64, y: f64) -> Self {
        SceneObject { id: id.into(), cls: cls.into(), l, w, x, y }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if ![self.l, self.w, self.x, self.y].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite { id: self.id.clone() });
        }
        if self.l <= 0.0 || self.w <= 0.0 {
            return Err(GeometryError::NonPositiveExtent { id: self.id.clone(), l: self.l, w: self.w });
        }
        Ok(())
    }

    pub fn edges(&self) -> Edges {
        edges(self)
    }
}

pub fn edges(o: &SceneObject) -> Edges {
    let (hl, hw) = (o.l / 2.0, o.w / 2.0);
    Edges { left: o.x - hl, right: o.x + hl, bottom: o.y - hw, top: o.y + hw }
}

/// Cardinal direction; north is positive y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    S,
    E,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::S, Direction::E, Direction::W];

    pub fn opposite(self) -> Direction {
        match self {
            Direction::N => Direction::S,
            Direction::S => Direction::N,
            Direction::E => Direction::W,
            Direction::W => Direction::E,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::N => "N",
            Direction::S => "S",
            Direction::E => "E",
            Direction::W => "W",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" => Ok(Direction::N),
            "S" => Ok(Direction::S),
            "E" => Ok(Direction::E),
            "W" => Ok(Direction::W),
            other => Err(format!("unknown direction `{other}` (expected N, S, E or W)")),
        }
    }
}

/// True iff the open interiors of `a` and `b` do not overlap.
pub fn interiors_disjoint(a: &SceneObject, b: &SceneObject, tau: f64) -> bool {
    let (ea, eb) = (a.edges(), b.edges());
    ea.right <= eb.left + tau || eb.right <= ea.left + tau || ea.top <= eb.bottom + tau || eb.top <= ea.bottom + tau
}

fn closures_intersect(ea: &Edges, eb: &Edges, tau: f64) -> bool {
    ea.left <= eb.right + tau && eb.left <= ea.right + tau && ea.bottom <= eb.top + tau && eb.bottom <= ea.top + tau
}

/// Undirected `EC`: boundaries share at least one point, interiors disjoint.
/// A single corner point is enough.
pub fn externally_connected(a: &SceneObject, b: &SceneObject, tau: f64) -> bool {
    interiors_disjoint(a, b, tau) && closures_intersect(&a.edges(), &b.edges(), tau)
}

/// `DR_d(a, b)`: `a` is discrete from `b` and lies entirely in direction `d` of `b`.
///
/// Edge-aligned objects satisfy `DR` (the comparison is non-strict).
pub fn dr_directed(a: &SceneObject, b: &SceneObject, d: Direction, tau: f64) -> bool {
    let (ea, eb) = (a.edges(), b.edges());
    let positioned = match d {
        Direction::N => ea.bottom >= eb.top - tau,
        Direction::S => ea.top <= eb.bottom + tau,
        Direction::E => ea.left >= eb.right - tau,
        Direction::W => ea.right <= eb.left + tau,
    };
    positioned && interiors_disjoint(a, b, tau)
}

/// Overlap of two open intervals by more than `tau`.
fn open_overlap(lo_a: f64, hi_a: f64, lo_b: f64, hi_b: f64, tau: f64) -> bool {
    lo_a < hi_b - tau && lo_b < hi_a - tau
}

/// `EC_d(a, b)`: `b` touches the `d` side of `a` along a segment of positive
/// length. Pure corner contact has no side and never satisfies this.
pub fn ec_directed(a: &SceneObject, b: &SceneObject, d: Direction, tau: f64) -> bool {
    let (ea, eb) = (a.edges(), b.edges());
    match d {
        Direction::N => (eb.bottom - ea.top).abs() <= tau && open_overlap(ea.left, ea.right, eb.left, eb.right, tau),
        Direction::S => (eb.top - ea.bottom).abs() <= tau && open_overlap(ea.left, ea.right, eb.left, eb.right, tau),
        Direction::E => (eb.left - ea.right).abs() <= tau && open_overlap(ea.bottom, ea.top, eb.bottom, eb.top, tau),
        Direction::W => (eb.right - ea.left).abs() <= tau && open_overlap(ea.bottom, ea.top, eb.bottom, eb.top, tau),
    }
}

/// A placed object set together with its space and class set.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub objects: Vec<SceneObject>,
    pub space: Space,
    pub classes: Vec<ObjectClass>,
}

impl Demonstration {
    /// Builds a demonstration after checking every structural invariant.
    pub fn new(objects: Vec<SceneObject>, space: Space, classes: Vec<ObjectClass>) -> Result<Self, GeometryError> {
        let demo = Demonstration { objects, space, classes };
        demo.validate()?;
        Ok(demo)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        self.space.validate()?;
        let mut names = BTreeSet::new();
        for c in &self.classes {
            if !names.insert(c.name.as_str()) {
                return Err(GeometryError::DuplicateClass(c.name.clone()));
            }
        }
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            o.validate()?;
            if !ids.insert(o.id.as_str()) {
                return Err(GeometryError::DuplicateObject(o.id.clone()));
            }
            let class = self
                .class(&o.cls)
                .ok_or_else(|| GeometryError::UnknownClass { id: o.id.clone(), class: o.cls.clone() })?;
            if !class.fixed && !self.space.contains_point(o.x, o.y) {
                return Err(GeometryError::OutsideSpace { id: o.id.clone() });
            }
        }
        Ok(())
    }

    pub fn class(&self, name: &str) -> Option<&ObjectClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.class(name).is_some()
    }

    pub fn is_fixed(&self, class: &str) -> bool {
        self.class(class).is_some_and(|c| c.fixed)
    }

    /// Objects belonging to class `name`.
    pub fn objects_of<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a SceneObject> + 'a {
        self.objects.iter().filter(move |o| o.cls == name)
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn class_names(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.name.as_str()).collect()
    }
}
