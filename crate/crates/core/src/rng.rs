//! Seeded substreams: trial `i` of a run with seed `s` always draws from the
//! same ChaCha stream, so serial and parallel runs agree bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::SetWindow;

pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A uniformly random subset of `[0, horizon)`: every bit an independent fair coin.
pub fn fair_window<R: Rng>(rng: &mut R, horizon: u32) -> SetWindow {
    let mut window = SetWindow::empty(horizon);
    let mut k = 0;
    while k < horizon {
        let word: u64 = rng.gen();
        for b in 0..64.min(horizon - k) {
            if word >> b & 1 == 1 {
                window.insert(k + b);
            }
        }
        k += 64.min(horizon - k);
    }
    window
}
