//! Seed derivation for the independent random streams of an experiment.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a seed for `stream` at step `index` from a base seed.
pub fn derive(base: u64, stream: u64, index: u64) -> u64 {
    mix(mix(base ^ mix(stream)) ^ index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ() {
        assert_ne!(derive(0, 1, 0), derive(0, 2, 0));
        assert_ne!(derive(0, 1, 0), derive(0, 1, 1));
        assert_eq!(derive(5, 3, 2), derive(5, 3, 2));
    }
}
