use parcc_core::evaluator::{demo_satisfies_spec, explain};
use parcc_core::formula::parse_spec;
use parcc_core::geometry::{ec_directed, interiors_disjoint, Direction, DEFAULT_TAU};
use parcc_core::inference::stream_rng;
use parcc_core::io::{demo_from_str, demo_to_string};
use parcc_core::study::{box_inventory, box_packing_spec, random_box_inventory, WALL_CLASS};
use parcc_core::synthesizer::{place, sample_satisfying_set, Placement, DEFAULT_BUDGET};

#[test]
fn box_packing_layouts_are_valid() {
    let spec = box_packing_spec();
    for seed in 0..25 {
        let mut rng = stream_rng(seed, 0);
        let inv = random_box_inventory(&mut rng);
        let Placement::Placed(demo) = place(&spec, &inv, &mut rng, DEFAULT_BUDGET).unwrap() else {
            panic!("seed {seed} found no layout");
        };
        assert!(demo_satisfies_spec(&spec, &demo, DEFAULT_TAU), "{:?}", explain(&spec, &demo, DEFAULT_TAU));
        let movable = demo.objects.iter().filter(|o| o.cls != WALL_CLASS);
        assert_eq!(movable.count(), inv.items.iter().map(|i| i.count).sum::<usize>());
        for (i, a) in demo.objects.iter().enumerate() {
            for b in &demo.objects[i + 1..] {
                assert!(interiors_disjoint(a, b, DEFAULT_TAU));
            }
        }
    }
}

#[test]
fn every_block_touches_a_block_of_its_class() {
    let spec = box_packing_spec();
    let demos = sample_satisfying_set(&spec, &box_inventory([3, 2, 4]), 3, 9, DEFAULT_BUDGET).unwrap();
    for demo in &demos {
        for a in demo.objects.iter().filter(|o| o.cls != WALL_CLASS) {
            let touching = demo.objects.iter().any(|b| {
                b.id != a.id && b.cls == a.cls && Direction::ALL.iter().any(|&d| ec_directed(a, b, d, DEFAULT_TAU))
            });
            assert!(touching, "{} is isolated", a.id);
        }
    }
}

#[test]
fn synthesized_documents_have_a_canonical_form() {
    let spec = box_packing_spec();
    let demo = sample_satisfying_set(&spec, &box_inventory([2, 3, 2]), 1, 4, DEFAULT_BUDGET).unwrap().remove(0);
    let first = demo_to_string(&demo);
    let reloaded = demo_from_str(&first).unwrap();
    assert_eq!(reloaded, demo);
    assert_eq!(demo_to_string(&reloaded), first);
    assert!(demo_satisfies_spec(&spec, &reloaded, DEFAULT_TAU));
}

#[test]
fn contradictions_with_the_box_are_proven() {
    let mut text = String::from(parcc_core::study::BOX_PACKING);
    text.push_str("\nDR_S(B, R)\n");
    let spec = parse_spec(&text).unwrap();
    match place(&spec, &box_inventory([2, 2, 2]), &mut stream_rng(0, 0), DEFAULT_BUDGET).unwrap() {
        Placement::Infeasible(i) => {
            assert!(i.proven);
            assert_eq!(i.total_clauses, 25);
        }
        Placement::Placed(_) => panic!("blue cannot be both above and below red"),
    }
}

#[test]
fn seeded_sets_are_reproducible() {
    let spec = box_packing_spec();
    let inv = box_inventory([2, 2, 2]);
    let a = sample_satisfying_set(&spec, &inv, 4, 11, DEFAULT_BUDGET).unwrap();
    let b = sample_satisfying_set(&spec, &inv, 4, 11, DEFAULT_BUDGET).unwrap();
    let text = |ds: &[parcc_core::geometry::Demonstration]| ds.iter().map(demo_to_string).collect::<Vec<_>>();
    assert_eq!(text(&a), text(&b));
}
