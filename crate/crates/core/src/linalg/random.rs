use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{householder_qr, ComplexMatrix, C64};

/// The crate-wide deterministic generator.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent seed for stream `tag` of a run seeded with `base`
/// (SplitMix64 finalizer over the pair).
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Haar-distributed `2^n × 2^n` unitary.
///
/// QR of a complex Ginibre matrix, with the columns of `Q` rephased so that
/// `R` has a positive real diagonal; without that correction the
/// distribution is not invariant.
pub fn haar_random_unitary(n_qubits: u32, seed: u64) -> ComplexMatrix {
    assert!(n_qubits >= 1, "haar_random_unitary needs at least one qubit");
    let dim = 1usize << n_qubits;
    let mut rng = seeded_rng(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = ComplexMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re * scale, im * scale)
    });
    let qr = householder_qr(&ginibre).expect("square by construction");
    let phases: Vec<C64> = (0..dim)
        .map(|k| {
            let d = qr.r[(k, k)];
            if d.norm() == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                d / d.norm()
            }
        })
        .collect();
    ComplexMatrix::from_fn(dim, dim, |i, j| qr.q[(i, j)] * phases[j])
}
