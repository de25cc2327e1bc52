//! Canonical JSON: sorted object keys, floats printed with a fixed six decimals.
//!
//! Used for state digests, golden files and relay frame bodies, so the same
//! value always produces the same bytes regardless of platform or field order.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const FLOAT_DECIMALS: usize = 6;

#[derive(Debug, thiserror::Error)]
#[error("value is not representable as canonical JSON: {0}")]
pub struct CanonicalError(#[from] serde_json::Error);

pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String, CanonicalError> {
    let value = serde_json::to_value(value)?;
    let mut out = String::with_capacity(256);
    write_value(&value, &mut out);
    Ok(out)
}

pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    to_canonical_string(value).map(String::into_bytes)
}

/// Hex SHA-256 of the canonical encoding.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> Result<String, CanonicalError> {
    let bytes = to_canonical_bytes(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn value_to_canonical(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(0.0)));
            }
        }
        Value::String(s) => {
            // serde_json's string escaping is already deterministic.
            out.push_str(&serde_json::to_string(s).expect("string serialization"));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("key serialization"));
                out.push(':');
                write_value(&map[key], out);
            }
            out.push('}');
        }
    }
}

/// Fixed six-decimal rendering with negative zero folded to zero.
pub fn format_float(f: f64) -> String {
    if !f.is_finite() {
        // serde_json never produces these, but keep the output valid JSON.
        return "null".to_owned();
    }
    let s = format!("{:.*}", FLOAT_DECIMALS, f);
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_owned()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let v = json!({"b": 1.5, "a": [1, -0.0000001, 2.0], "c": {"z": true, "y": null}});
        assert_eq!(
            value_to_canonical(&v),
            r#"{"a":[1,0.000000,2.000000],"b":1.500000,"c":{"y":null,"z":true}}"#
        );
    }

    #[test]
    fn rounding_is_stable() {
        assert_eq!(format_float(0.1 + 0.2), "0.300000");
        assert_eq!(format_float(-1.25), "-1.250000");
        assert_eq!(format_float(-0.0), "0.000000");
    }

    #[test]
    fn digest_ignores_field_order() {
        let a = json!({"x": 1.0, "y": 2.0});
        let b = json!({"y": 2.0, "x": 1.0});
        assert_eq!(digest(&a).unwrap(), digest(&b).unwrap());
    }
}
