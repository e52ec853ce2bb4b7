//! Shared fixtures for the benchmarks.

use permbp::automorphism::PermutationReservoir;
use permbp::channel::{stream_rng, AwgnChannel, SnrKind};
use permbp::{build_bch_code_circulant, CodeSpec};

/// BCH(31,16) in circulant form with its permutation reservoir.
pub fn bch31_16() -> (CodeSpec, PermutationReservoir) {
    let code = build_bch_code_circulant(5, 3).expect("valid BCH parameters");
    let reservoir = PermutationReservoir::for_code(&code, 20, 60, 16).expect("BCH automorphisms");
    (code, reservoir)
}

/// `count` all-zero-codeword LLR vectors at `snr_db` (Eb/N0).
pub fn llr_frames(code: &CodeSpec, snr_db: f64, count: usize) -> Vec<Vec<f64>> {
    let channel = AwgnChannel::for_code(code, SnrKind::EbN0);
    let zero = vec![0u8; code.n()];
    (0..count as u64)
        .map(|f| channel.transmit(&zero, snr_db, &mut stream_rng(77, f)))
        .collect()
}
