//! Random re-placement of demonstrations ("non-specification" baselines).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{interiors_disjoint, Demonstration, SceneObject};

/// Attempts per object before a collision-free layout is restarted.
const PLACEMENT_RETRIES: usize = 2_000;
/// Whole-layout restarts before giving up.
const LAYOUT_RESTARTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SamplingOptions {
    /// Reject layouts in which two interiors overlap.
    #[serde(default)]
    pub collision_free: bool,
    /// Also move objects of fixed (environment) classes.
    #[serde(default)]
    pub resample_fixed_classes: bool,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SamplingError {
    #[error("no demonstrations to sample from")]
    NoDemonstrations,
    #[error("could not find a collision-free layout within the retry budget")]
    BudgetExhausted,
}

/// Deterministic child generator for draw number `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Copies a uniformly chosen demonstration and gives each movable object a
/// fresh center drawn uniformly from the space.
pub fn sample_rand_demo<R: Rng + ?Sized>(
    demos: &[Demonstration],
    rng: &mut R,
    options: &SamplingOptions,
) -> Result<Demonstration, SamplingError> {
    if demos.is_empty() {
        return Err(SamplingError::NoDemonstrations);
    }
    let source = &demos[rng.random_range(0..demos.len())];
    let mut demo = source.clone();
    let space = demo.space;
    let movable: Vec<bool> =
        demo.objects.iter().map(|o| options.resample_fixed_classes || !source.is_fixed(&o.cls)).collect();

    let draw = |rng: &mut R, o: &mut SceneObject| {
        o.x = rng.random_range(space.x_min..space.x_max);
        o.y = rng.random_range(space.y_min..space.y_max);
    };

    if !options.collision_free {
        for (o, &m) in demo.objects.iter_mut().zip(&movable) {
            if m {
                draw(rng, o);
            }
        }
        return Ok(demo);
    }

    'restart: for _ in 0..LAYOUT_RESTARTS {
        let mut placed: Vec<SceneObject> =
            demo.objects.iter().zip(&movable).filter(|(_, &m)| !m).map(|(o, _)| o.clone()).collect();
        let mut layout = demo.objects.clone();
        for (o, &m) in layout.iter_mut().zip(&movable) {
            if !m {
                continue;
            }
            let mut ok = false;
            for _ in 0..PLACEMENT_RETRIES {
                draw(rng, o);
                if placed.iter().all(|p| interiors_disjoint(o, p, 0.0)) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                continue 'restart;
            }
            placed.push(o.clone());
        }
        demo.objects = layout;
        return Ok(demo);
    }
    Err(SamplingError::BudgetExhausted)
}

/// `count` samples, draw `i` using stream `i` of `seed`; the result does not
/// depend on how the draws are scheduled across threads.
pub fn sample_rand_demos(
    demos: &[Demonstration],
    count: usize,
    seed: u64,
    options: &SamplingOptions,
) -> Result<Vec<Demonstration>, SamplingError> {
    (0..count as u64).into_par_iter().map(|i| sample_rand_demo(demos, &mut stream_rng(seed, i), options)).collect()
}
