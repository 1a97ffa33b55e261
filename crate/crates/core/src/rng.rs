//! Named random sub-streams derived from one master seed.
//!
//! Every consumer gets `ChaCha8Rng::seed_from_u64(master)` positioned on its
//! own ChaCha stream id, so streams never overlap and the draws of one
//! consumer do not depend on whether another one ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// User realizations.
    Batch,
    /// Candidate indicator draws of the chain.
    Proposal,
    /// Uniform acceptance draws of the chain.
    Chain,
}

impl Stream {
    pub const fn id(self) -> u64 {
        match self {
            Stream::Batch => 1,
            Stream::Proposal => 2,
            Stream::Chain => 3,
        }
    }
}

pub fn substream(master: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream.id());
    rng
}
