//! JSON emission with every float written to 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

struct SignificantDigits;

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` on one line; object keys come out sorted because
/// `serde_json::Map` is ordered.
pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Parses a report and re-emits it; the result is byte-identical for any
/// output of [`to_string`].
pub fn reformat(text: &str) -> serde_json::Result<String> {
    let value: Value = serde_json::from_str(text)?;
    to_string(&value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(to_string(&json!(7.84)).unwrap(), "7.8399999999999999e0");
        assert_eq!(to_string(&json!(-0.5)).unwrap(), "-5.0000000000000000e-1");
        assert_eq!(to_string(&json!(3)).unwrap(), "3");
    }

    #[test]
    fn keys_are_sorted() {
        let text = to_string(&json!({"b": 1, "a": [1.0, 2], "c": {"z": null, "y": true}})).unwrap();
        assert_eq!(
            text,
            r#"{"a":[1.0000000000000000e0,2],"b":1,"c":{"y":true,"z":null}}"#
        );
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let values = [
            0.1,
            1.0 / 3.0,
            1e-300,
            -2.5e17,
            f64::MIN_POSITIVE,
            123456789.12345679,
        ];
        let text = to_string(&json!({"x": values})).unwrap();
        assert_eq!(reformat(&text).unwrap(), text);
    }
}
