//! SHA-256 helpers. All digests in the crate are lowercase hex.

use sha2::{Digest, Sha256};

/// Length of a hex-encoded SHA-256 digest.
pub const HEX_LEN: usize = 64;

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Digest of the compact JSON encoding of `value`.
///
/// Going through `serde_json::Value` sorts every object's keys, so two values
/// that differ only in map insertion order hash identically.
pub fn canonical_json_hash<T: serde::Serialize>(value: &T) -> String {
    sha256_hex(canonical_json(value).as_bytes())
}

pub fn canonical_json<T: serde::Serialize>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("in-memory values always serialize");
    serde_json::to_string(&tree).expect("json values always serialize")
}

pub fn is_hex_digest(s: &str) -> bool {
    s.len() == HEX_LEN && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn map_order_does_not_matter() {
        let a: std::collections::HashMap<&str, u32> = [("x", 1), ("y", 2)].into_iter().collect();
        let b: std::collections::HashMap<&str, u32> = [("y", 2), ("x", 1)].into_iter().collect();
        assert_eq!(canonical_json_hash(&a), canonical_json_hash(&b));
    }

    #[test]
    fn hex_digest_shape() {
        assert!(is_hex_digest(&sha256_hex(b"")));
        assert!(!is_hex_digest("ABC"));
    }
}
