use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator every sampling path draws from.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An independent stream of the generator seeded with `seed`, so that two
/// consumers sharing a seed never see correlated draws.
pub fn seeded_stream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}
