//! Synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vidret_core::{Embedding, FrameMatrix};

pub fn random_embeddings(n: usize, dim: usize, seed: u64) -> Vec<Embedding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Embedding::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap())
        .collect()
}

/// A video of `frames` columns drifting slowly around a few scene vectors.
pub fn random_video(frames: usize, dim: usize, seed: u64) -> FrameMatrix {
    let scenes = random_embeddings(4, dim, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let columns = (0..frames)
        .map(|i| {
            let base = &scenes[i * scenes.len() / frames];
            Embedding::new(
                base.values()
                    .iter()
                    .map(|v| v + rng.gen_range(-0.05..0.05))
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    FrameMatrix::new(format!("video{seed}"), columns).unwrap()
}
