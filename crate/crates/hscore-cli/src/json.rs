//! Canonical JSON emission.
//!
//! Reports must be byte-identical across identical invocations, so the
//! serializer is pinned: compact layout, struct fields in declaration order,
//! and every float written as `{:.16e}` (17 significant digits, which
//! round-trips f64 exactly). Non-finite numbers are a bug in the caller;
//! they abort serialization instead of silently becoming `null`.

use std::io::{self, Write};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        if !value.is_finite() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "non-finite number reached the JSON serializer",
            ));
        }
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes a report to canonical JSON bytes, newline-terminated.
///
/// Non-finite floats are rejected up front: serde_json silently turns them
/// into `null` before the formatter sees them, and `null` already means
/// "skipped" in several reports.
pub fn to_canonical_vec<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    value
        .serialize(FiniteCheck)
        .map_err(|e| CliError::NonFiniteReport(e.0))?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::NonFiniteReport(format!("JSON serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(buf)
}

/// Error raised by the pre-serialization finiteness walk.
#[derive(Debug)]
struct NonFiniteFound(String);

impl std::fmt::Display for NonFiniteFound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for NonFiniteFound {}

impl serde::ser::Error for NonFiniteFound {
    fn custom<T: std::fmt::Display>(msg: T) -> Self {
        NonFiniteFound(msg.to_string())
    }
}

/// A serializer that produces nothing and fails on any non-finite float.
struct FiniteCheck;

impl FiniteCheck {
    fn float(value: f64) -> Result<(), NonFiniteFound> {
        if value.is_finite() {
            Ok(())
        } else {
            Err(NonFiniteFound(format!(
                "JSON report would contain the non-finite number {value}"
            )))
        }
    }
}

macro_rules! finite_ok {
    ($name:ident, $ty:ty) => {
        fn $name(self, _v: $ty) -> Result<(), NonFiniteFound> {
            Ok(())
        }
    };
}

impl serde::Serializer for FiniteCheck {
    type Ok = ();
    type Error = NonFiniteFound;
    type SerializeSeq = FiniteCheckCompound;
    type SerializeTuple = FiniteCheckCompound;
    type SerializeTupleStruct = FiniteCheckCompound;
    type SerializeTupleVariant = FiniteCheckCompound;
    type SerializeMap = FiniteCheckCompound;
    type SerializeStruct = FiniteCheckCompound;
    type SerializeStructVariant = FiniteCheckCompound;

    finite_ok!(serialize_bool, bool);
    finite_ok!(serialize_i8, i8);
    finite_ok!(serialize_i16, i16);
    finite_ok!(serialize_i32, i32);
    finite_ok!(serialize_i64, i64);
    finite_ok!(serialize_u8, u8);
    finite_ok!(serialize_u16, u16);
    finite_ok!(serialize_u32, u32);
    finite_ok!(serialize_u64, u64);
    finite_ok!(serialize_char, char);
    finite_ok!(serialize_str, &str);
    finite_ok!(serialize_bytes, &[u8]);

    fn serialize_f32(self, v: f32) -> Result<(), NonFiniteFound> {
        Self::float(f64::from(v))
    }

    fn serialize_f64(self, v: f64) -> Result<(), NonFiniteFound> {
        Self::float(v)
    }

    fn serialize_none(self) -> Result<(), NonFiniteFound> {
        Ok(())
    }

    fn serialize_some<T: Serialize + ?Sized>(self, value: &T) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn serialize_unit(self) -> Result<(), NonFiniteFound> {
        Ok(())
    }

    fn serialize_unit_struct(self, _name: &'static str) -> Result<(), NonFiniteFound> {
        Ok(())
    }

    fn serialize_unit_variant(
        self,
        _name: &'static str,
        _index: u32,
        _variant: &'static str,
    ) -> Result<(), NonFiniteFound> {
        Ok(())
    }

    fn serialize_newtype_struct<T: Serialize + ?Sized>(
        self,
        _name: &'static str,
        value: &T,
    ) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn serialize_newtype_variant<T: Serialize + ?Sized>(
        self,
        _name: &'static str,
        _index: u32,
        _variant: &'static str,
        value: &T,
    ) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn serialize_seq(self, _len: Option<usize>) -> Result<FiniteCheckCompound, NonFiniteFound> {
        Ok(FiniteCheckCompound)
    }

    fn serialize_tuple(self, _len: usize) -> Result<FiniteCheckCompound, NonFiniteFound> {
        Ok(FiniteCheckCompound)
    }

    fn serialize_tuple_struct(
        self,
        _name: &'static str,
        _len: usize,
    ) -> Result<FiniteCheckCompound, NonFiniteFound> {
        Ok(FiniteCheckCompound)
    }

    fn serialize_tuple_variant(
        self,
        _name: &'static str,
        _index: u32,
        _variant: &'static str,
        _len: usize,
    ) -> Result<FiniteCheckCompound, NonFiniteFound> {
        Ok(FiniteCheckCompound)
    }

    fn serialize_map(self, _len: Option<usize>) -> Result<FiniteCheckCompound, NonFiniteFound> {
        Ok(FiniteCheckCompound)
    }

    fn serialize_struct(
        self,
        _name: &'static str,
        _len: usize,
    ) -> Result<FiniteCheckCompound, NonFiniteFound> {
        Ok(FiniteCheckCompound)
    }

    fn serialize_struct_variant(
        self,
        _name: &'static str,
        _index: u32,
        _variant: &'static str,
        _len: usize,
    ) -> Result<FiniteCheckCompound, NonFiniteFound> {
        Ok(FiniteCheckCompound)
    }
}

struct FiniteCheckCompound;

impl serde::ser::SerializeSeq for FiniteCheckCompound {
    type Ok = ();
    type Error = NonFiniteFound;

    fn serialize_element<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn end(self) -> Result<(), NonFiniteFound> {
        Ok(())
    }
}

impl serde::ser::SerializeTuple for FiniteCheckCompound {
    type Ok = ();
    type Error = NonFiniteFound;

    fn serialize_element<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn end(self) -> Result<(), NonFiniteFound> {
        Ok(())
    }
}

impl serde::ser::SerializeTupleStruct for FiniteCheckCompound {
    type Ok = ();
    type Error = NonFiniteFound;

    fn serialize_field<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn end(self) -> Result<(), NonFiniteFound> {
        Ok(())
    }
}

impl serde::ser::SerializeTupleVariant for FiniteCheckCompound {
    type Ok = ();
    type Error = NonFiniteFound;

    fn serialize_field<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn end(self) -> Result<(), NonFiniteFound> {
        Ok(())
    }
}

impl serde::ser::SerializeMap for FiniteCheckCompound {
    type Ok = ();
    type Error = NonFiniteFound;

    fn serialize_key<T: Serialize + ?Sized>(&mut self, key: &T) -> Result<(), NonFiniteFound> {
        key.serialize(FiniteCheck)
    }

    fn serialize_value<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn end(self) -> Result<(), NonFiniteFound> {
        Ok(())
    }
}

impl serde::ser::SerializeStruct for FiniteCheckCompound {
    type Ok = ();
    type Error = NonFiniteFound;

    fn serialize_field<T: Serialize + ?Sized>(
        &mut self,
        _key: &'static str,
        value: &T,
    ) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn end(self) -> Result<(), NonFiniteFound> {
        Ok(())
    }
}

impl serde::ser::SerializeStructVariant for FiniteCheckCompound {
    type Ok = ();
    type Error = NonFiniteFound;

    fn serialize_field<T: Serialize + ?Sized>(
        &mut self,
        _key: &'static str,
        value: &T,
    ) -> Result<(), NonFiniteFound> {
        value.serialize(FiniteCheck)
    }

    fn end(self) -> Result<(), NonFiniteFound> {
        Ok(())
    }
}

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// One input file in the provenance block.
#[derive(Debug, Serialize)]
pub struct InputRecord {
    /// What the file was used as (`features`, `labels`, ...).
    pub role: String,
    /// Path exactly as it was given on the command line.
    pub path: String,
    /// SHA-256 of the file bytes.
    pub sha256: String,
}

/// Envelope around every report: enough provenance to reproduce the run,
/// none of it wall-clock dependent.
#[derive(Debug, Serialize)]
pub struct Envelope<C: Serialize, R: Serialize> {
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<InputRecord>,
    pub config: C,
    pub report: R,
}

impl<C: Serialize, R: Serialize> Envelope<C, R> {
    pub fn new(command: &'static str, inputs: Vec<InputRecord>, config: C, report: R) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs,
            config,
            report,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_significant_digits() {
        #[derive(Serialize)]
        struct Doc {
            x: f64,
        }
        let bytes = to_canonical_vec(&Doc { x: 0.36 }).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text, "{\"x\":3.5999999999999999e-1}\n");
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["x"].as_f64().unwrap(), 0.36);
    }

    #[test]
    fn non_finite_numbers_are_rejected() {
        #[derive(Serialize)]
        struct Doc {
            x: f64,
        }
        let err = to_canonical_vec(&Doc { x: f64::NAN }).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn sha256_matches_known_vector() {
        // SHA-256 of the empty string.
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
