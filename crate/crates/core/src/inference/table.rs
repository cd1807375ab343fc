//! Per-object atom truth tables.
//!
//! Candidate search evaluates hundreds of thousands of clauses against the
//! same few demonstrations, so each object's truth value for every atom it
//! heads is computed once and stored as a bitset over the [`AtomUniverse`].
//! A clause then holds for an object iff any of its atom bits is set.

use super::template::AtomUniverse;
use crate::evaluator::object_satisfies_atom;
use crate::geometry::Demonstration;

#[derive(Debug, Clone)]
pub struct DemoTable {
    words: usize,
    bits: Vec<u64>,
    objects_by_class: Vec<Vec<usize>>,
}

impl DemoTable {
    pub fn build(demo: &Demonstration, universe: &AtomUniverse, tau: f64) -> Self {
        let k = universe.classes().len();
        let words = universe.len().div_ceil(64);
        let mut bits = vec![0u64; words * demo.objects.len()];
        let mut objects_by_class = vec![Vec::new(); k];
        for (oi, o) in demo.objects.iter().enumerate() {
            let Some(head) = universe.class_index(&o.cls) else { continue };
            objects_by_class[head].push(oi);
            for index in 0..universe.len() as u32 {
                if universe.head_of(index) != head {
                    continue;
                }
                let atom = universe.atom(index);
                if object_satisfies_atom(o, &atom, demo, tau).expect("head class matches") {
                    bits[oi * words + index as usize / 64] |= 1 << (index % 64);
                }
            }
        }
        DemoTable { words, bits, objects_by_class }
    }

    #[inline]
    fn bit(&self, object: usize, index: u32) -> bool {
        self.bits[object * self.words + index as usize / 64] >> (index % 64) & 1 == 1
    }

    #[inline]
    fn object_satisfies(&self, object: usize, clause: &[u32]) -> bool {
        clause.iter().any(|&i| self.bit(object, i))
    }

    /// Per-object clause satisfaction for the whole demonstration.
    pub fn satisfies(&self, clause: &[u32], heads: &[usize]) -> bool {
        heads.iter().all(|&h| self.objects_by_class[h].iter().all(|&o| self.object_satisfies(o, clause)))
    }

    /// `(satisfying, relevant)` object counts for the clause.
    pub fn count(&self, clause: &[u32], heads: &[usize]) -> (u64, u64) {
        let mut sat = 0;
        let mut relevant = 0;
        for &h in heads {
            for &o in &self.objects_by_class[h] {
                relevant += 1;
                sat += self.object_satisfies(o, clause) as u64;
            }
        }
        (sat, relevant)
    }

    pub fn relevant(&self, heads: &[usize]) -> u64 {
        heads.iter().map(|&h| self.objects_by_class[h].len() as u64).sum()
    }
}

/// Distinct head-class indices of an indexed clause, sorted.
pub fn clause_heads(universe: &AtomUniverse, clause: &[u32]) -> Vec<usize> {
    let mut heads: Vec<usize> = clause.iter().map(|&i| universe.head_of(i)).collect();
    heads.sort_unstable();
    heads.dedup();
    heads
}
