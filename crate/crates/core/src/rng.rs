use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used everywhere randomness enters a simulation.
pub type SimRng = ChaCha8Rng;

/// Independent streams split from one replication seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Environment = 0,
    Policy = 1,
    Oracle = 2,
    EnvInit = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
