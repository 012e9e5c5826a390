//! Shared inputs for the projector benchmarks.
use tiltlab::verify::composable_words;
use tiltlab::QuiverWord;

/// All composable words of length `len` starting below `vmax`.
pub fn words(p: u64, vmax: u64, len: usize) -> Vec<QuiverWord> {
    composable_words(p, vmax, len).expect("valid prime")
}
