//! Serde adapter for extended-real parameters, where `∞` is spelled `"inf"`.
//!
//! Use with `#[serde(with = "xlab_core::extreal")]` on an `f64` field that
//! may legitimately be infinite (a secondary exponent, a Lorentz `q`).
//! Finite values round-trip as plain JSON numbers.

use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};
use std::fmt;

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    struct ExtReal;

    impl Visitor<'_> for ExtReal {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or the string \"inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" | "Inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    d.deserialize_any(ExtReal)
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Wrap(#[serde(with = "super")] f64);

    #[test]
    fn finite_values_round_trip_as_numbers() {
        let json = serde_json::to_string(&Wrap(4.0)).unwrap();
        assert_eq!(json, "4.0");
        assert_eq!(serde_json::from_str::<Wrap>("4.0").unwrap(), Wrap(4.0));
    }

    #[test]
    fn infinity_round_trips_as_string() {
        let json = serde_json::to_string(&Wrap(f64::INFINITY)).unwrap();
        assert_eq!(json, "\"inf\"");
        assert_eq!(
            serde_json::from_str::<Wrap>("\"inf\"").unwrap(),
            Wrap(f64::INFINITY)
        );
    }

    #[test]
    fn integers_are_accepted() {
        assert_eq!(serde_json::from_str::<Wrap>("4").unwrap(), Wrap(4.0));
    }
}
