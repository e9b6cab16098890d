use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a 64-bit stream seed from path-like components.
///
/// The components are joined with `/` and hashed with SHA-256; the first eight
/// digest bytes, read little-endian, form the seed. For augmentation plans the
/// components are `global_seed/source_id/op_index`.
pub fn derive_seed(parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            hasher.update(b"/");
        }
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_depends_on_every_component() {
        let a = derive_seed(&["7", "img_001", "3"]);
        assert_eq!(a, derive_seed(&["7", "img_001", "3"]));
        assert_ne!(a, derive_seed(&["7", "img_001", "4"]));
        assert_ne!(a, derive_seed(&["8", "img_001", "3"]));
        // the separator keeps ("ab","c") and ("a","bc") apart
        assert_ne!(derive_seed(&["ab", "c"]), derive_seed(&["a", "bc"]));
    }
}
