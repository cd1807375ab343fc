//! The box-packing scenario: three colored block classes on a table,
//! packed inside an open box whose four walls form a fixed class `WA`.

use rand::Rng;

use crate::formula::{parse_spec, Spec};
use crate::geometry::{Demonstration, SceneObject, Space};
use crate::inference::stream_rng;
use crate::synthesizer::{sample_satisfying_set_with, Inventory, InventoryItem, SynthError};

/// The full box-packing spec, one clause per line.
pub const BOX_PACKING: &str = include_str!("../fixtures/box_packing.parcc");

/// The spec split into its twelve rules, in the order they are stated.
pub const BOX_PACKING_RULES: [&str; 12] = [
    "DR_N(B, R)",
    "DR_E(G, R)",
    "DR_E(G, B)",
    "EC_N(B, B) | EC_S(B, B) | EC_E(B, B) | EC_W(B, B)",
    "EC_N(R, R) | EC_S(R, R) | EC_E(R, R) | EC_W(R, R)",
    "EC_N(G, G) | EC_S(G, G) | EC_E(G, G) | EC_W(G, G)",
    "EC_W(B, B) | EC_W(B, WA)\n\
     EC_N(B, B) | EC_N(B, WA) | EC_N(B, R) | EC_S(B, B) | EC_S(B, WA) | EC_S(B, R)",
    "EC_W(R, R) | EC_W(R, WA)\n\
     EC_N(R, B) | EC_N(R, WA) | EC_N(R, R) | EC_S(R, B) | EC_S(R, WA) | EC_S(R, R)",
    "EC_E(G, G) | EC_E(G, WA)\nEC_N(G, G) | EC_N(G, WA) | EC_S(G, G) | EC_S(G, WA)",
    "!DR_N(B, WA)\n!DR_S(B, WA)\n!DR_E(B, WA)\n!DR_W(B, WA)",
    "!DR_N(R, WA)\n!DR_S(R, WA)\n!DR_E(R, WA)\n!DR_W(R, WA)",
    "!DR_N(G, WA)\n!DR_S(G, WA)\n!DR_E(G, WA)\n!DR_W(G, WA)",
];

pub const WALL_CLASS: &str = "WA";
pub const BLOCK_CLASSES: [&str; 3] = ["B", "R", "G"];
/// Block footprints `(l, w)` in class order.
pub const BLOCK_SIZES: [(f64, f64); 3] = [(1.5, 1.0), (2.0, 1.0), (1.0, 1.5)];
pub const MIN_BLOCKS: usize = 2;
pub const MAX_BLOCKS: usize = 4;

const TABLE: (f64, f64) = (0.0, 20.0);
const BOX_INNER: (f64, f64) = (6.0, 14.0);
const WALL: f64 = 0.5;

pub fn box_packing_spec() -> Spec {
    parse_spec(BOX_PACKING).expect("bundled spec parses")
}

pub fn box_packing_rules() -> Vec<Spec> {
    BOX_PACKING_RULES.iter().map(|r| parse_spec(r).expect("bundled rule parses")).collect()
}

pub fn table_space() -> Space {
    Space::new(TABLE.0, TABLE.1, TABLE.0, TABLE.1).expect("table is non-degenerate")
}

/// The four box walls.
pub fn box_walls() -> Vec<SceneObject> {
    let (lo, hi) = BOX_INNER;
    let mid = (lo + hi) / 2.0;
    let span = hi - lo;
    let outer = span + 2.0 * WALL;
    vec![
        SceneObject::new("wall_n", WALL_CLASS, outer, WALL, mid, hi + WALL / 2.0),
        SceneObject::new("wall_s", WALL_CLASS, outer, WALL, mid, lo - WALL / 2.0),
        SceneObject::new("wall_e", WALL_CLASS, WALL, span, hi + WALL / 2.0, mid),
        SceneObject::new("wall_w", WALL_CLASS, WALL, span, lo - WALL / 2.0, mid),
    ]
}

/// Inventory with `counts` blocks of B, R and G.
pub fn box_inventory(counts: [usize; 3]) -> Inventory {
    Inventory {
        space: table_space(),
        items: BLOCK_CLASSES
            .iter()
            .zip(BLOCK_SIZES)
            .zip(counts)
            .map(|((&cls, (l, w)), count)| InventoryItem { cls: cls.into(), l, w, count })
            .collect(),
        fixed_objects: box_walls(),
    }
}

pub fn random_box_inventory<R: Rng + ?Sized>(rng: &mut R) -> Inventory {
    box_inventory(std::array::from_fn(|_| rng.random_range(MIN_BLOCKS..=MAX_BLOCKS)))
}

/// `k` packed demonstrations with independently drawn block counts.
pub fn box_packing_demos(k: usize, seed: u64, budget: usize) -> Result<Vec<Demonstration>, SynthError> {
    let spec = box_packing_spec();
    sample_satisfying_set_with(
        &spec,
        |i| random_box_inventory(&mut stream_rng(seed.wrapping_add(1), i as u64)),
        k,
        seed,
        budget,
        crate::geometry::DEFAULT_TAU,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::demo_satisfies_spec;
    use crate::geometry::DEFAULT_TAU;

    #[test]
    fn rules_make_up_the_spec() {
        let spec = box_packing_spec();
        let rules = box_packing_rules();
        assert_eq!(spec.len(), 24);
        let joined: Spec = rules.iter().flat_map(|r| r.clauses().cloned()).collect();
        assert_eq!(joined, spec);
    }

    #[test]
    fn walls_enclose_the_interior() {
        let walls = box_walls();
        let inner = walls.iter().map(|w| w.edges()).collect::<Vec<_>>();
        assert_eq!(inner[0].bottom, BOX_INNER.1);
        assert_eq!(inner[1].top, BOX_INNER.0);
        assert_eq!(inner[2].left, BOX_INNER.1);
        assert_eq!(inner[3].right, BOX_INNER.0);
        assert!(box_inventory([2, 2, 2]).validate().is_ok());
    }

    #[test]
    fn packed_demos_satisfy_the_spec() {
        let spec = box_packing_spec();
        let demos = box_packing_demos(4, 5, crate::synthesizer::DEFAULT_BUDGET).unwrap();
        for d in &demos {
            assert!(demo_satisfies_spec(&spec, d, DEFAULT_TAU));
        }
    }
}
