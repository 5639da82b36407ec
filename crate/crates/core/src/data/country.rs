use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Country of a user or a track: a two-letter uppercase code, or `OTHER`
/// for anything that could not be mapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CountryLabel {
    Code([u8; 2]),
    Other,
}

impl CountryLabel {
    pub const US: CountryLabel = CountryLabel::Code(*b"US");
    pub const OTHER_SENTINEL: &'static str = "OTHER";

    pub fn code(code: &str) -> Result<Self, InvalidCountry> {
        match code.as_bytes() {
            [a, b] if a.is_ascii_uppercase() && b.is_ascii_uppercase() => {
                Ok(CountryLabel::Code([*a, *b]))
            }
            _ => Err(InvalidCountry(code.to_string())),
        }
    }

    pub fn is_other(self) -> bool {
        self == CountryLabel::Other
    }

    pub fn is_us(self) -> bool {
        self == CountryLabel::US
    }

    /// `true` when both labels name the same concrete country. `OTHER` never
    /// matches anything, itself included.
    pub fn coincides_with(self, other: CountryLabel) -> bool {
        !self.is_other() && self == other
    }

    pub fn as_str(&self) -> &str {
        match self {
            // Codes are validated ASCII on construction.
            CountryLabel::Code(c) => std::str::from_utf8(c).unwrap_or("??"),
            CountryLabel::Other => Self::OTHER_SENTINEL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid country label {0:?}: expected two uppercase ASCII letters or OTHER")]
pub struct InvalidCountry(pub String);

impl FromStr for CountryLabel {
    type Err = InvalidCountry;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == Self::OTHER_SENTINEL {
            Ok(CountryLabel::Other)
        } else {
            CountryLabel::code(s)
        }
    }
}

impl fmt::Display for CountryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for CountryLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CountryLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
