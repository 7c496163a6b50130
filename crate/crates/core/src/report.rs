//! Report envelope for the command-line front end.
//!
//! Payload bytes are deterministic for fixed inputs: parameters live in a
//! sorted map, struct fields serialize in declaration order, and exact
//! integers are emitted as decimal strings. Wall-clock timing sits outside
//! the determinism contract.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Serialize, Serializer};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub version: &'static str,
    pub seed: u64,
    pub caps: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportEnvelope<T: Serialize> {
    pub schema: u32,
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub results: T,
    pub provenance: Provenance,
    pub timing_seconds: f64,
}

impl<T: Serialize> ReportEnvelope<T> {
    pub fn new(
        command: &str,
        parameters: BTreeMap<String, serde_json::Value>,
        results: T,
        provenance: Provenance,
        timing_seconds: f64,
    ) -> Self {
        ReportEnvelope {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            parameters,
            results,
            provenance,
            timing_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Serializes a big integer as its exact decimal string.
pub fn bigint_as_string<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Wrapper for exact integers inside result payloads.
#[derive(Clone, Debug)]
pub struct ExactInt(pub BigInt);

impl Serialize for ExactInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        bigint_as_string(&self.0, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_bytes_are_deterministic() {
        let mk = || {
            let mut params = BTreeMap::new();
            params.insert("k".to_string(), serde_json::json!(2));
            params.insert("n_max".to_string(), serde_json::json!(10));
            ReportEnvelope::new(
                "tm-moments",
                params,
                vec![ExactInt(BigInt::from(28))],
                Provenance { version: "test", seed: 0, caps: BTreeMap::new() },
                0.0,
            )
            .to_json()
        };
        assert_eq!(mk(), mk());
    }

    #[test]
    fn exact_integers_round_trip_as_strings() {
        let v: serde_json::Value =
            serde_json::to_value(ExactInt(BigInt::from(1u64 << 60))).unwrap();
        assert_eq!(v, serde_json::json!("1152921504606846976"));
    }
}
