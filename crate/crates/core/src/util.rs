//! Small shared helpers: fixed-precision float formatting and content
//! fingerprints for artifact integrity checks.

/// Formats a float with 12 significant digits in scientific notation.
///
/// Serialized models and matrices use this everywhere so that re-reading a
/// file and writing it again reproduces the bytes exactly.
pub fn fmt_g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{:.11e}", x)
}

/// Parses a float written by [`fmt_g12`].
pub fn parse_g12(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse::<f64>().ok(),
    }
}

/// 64-bit FNV-1a over a byte slice.
///
/// Used as a content fingerprint for vocabularies and configs (mismatch
/// detection, not cryptography).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Hex-encoded FNV-1a fingerprint.
pub fn fingerprint_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}
