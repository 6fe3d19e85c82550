use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `LPA:<version>$<smdpAddress>$<matchingId>[$<oid>]`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationCode {
    pub version: u32,
    pub smdp_address: String,
    pub matching_id: String,
    pub oid: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BadActivationCode {
    #[error("activation code must start with `LPA:`")]
    Prefix,
    #[error("activation code has {0} sections, expected 3 or 4")]
    FieldCount(usize),
    #[error("unsupported activation code version `{0}`")]
    Version(String),
    #[error("empty SM-DP+ address")]
    EmptyAddress,
    #[error("empty matching id")]
    EmptyMatchingId,
    #[error("empty OID section")]
    EmptyOid,
}

impl ActivationCode {
    pub fn new(smdp_address: impl Into<String>, matching_id: impl Into<String>) -> Self {
        ActivationCode {
            version: 1,
            smdp_address: smdp_address.into(),
            matching_id: matching_id.into(),
            oid: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, BadActivationCode> {
        let rest = text.strip_prefix("LPA:").ok_or(BadActivationCode::Prefix)?;
        let parts: Vec<&str> = rest.split('$').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(BadActivationCode::FieldCount(parts.len()));
        }
        if parts[0] != "1" {
            return Err(BadActivationCode::Version(parts[0].to_string()));
        }
        if parts[1].is_empty() {
            return Err(BadActivationCode::EmptyAddress);
        }
        if parts[2].is_empty() {
            return Err(BadActivationCode::EmptyMatchingId);
        }
        let oid = match parts.get(3) {
            Some(o) if o.is_empty() => return Err(BadActivationCode::EmptyOid),
            Some(o) => Some(o.to_string()),
            None => None,
        };
        Ok(ActivationCode {
            version: 1,
            smdp_address: parts[1].to_string(),
            matching_id: parts[2].to_string(),
            oid,
        })
    }
}

impl fmt::Display for ActivationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LPA:{}${}${}", self.version, self.smdp_address, self.matching_id)?;
        if let Some(oid) = &self.oid {
            write!(f, "${oid}")?;
        }
        Ok(())
    }
}

impl FromStr for ActivationCode {
    type Err = BadActivationCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActivationCode::parse(s)
    }
}

impl Serialize for ActivationCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ActivationCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_sections() {
        let ac = ActivationCode::parse("LPA:1$smdp.example.com$MATCH-001").unwrap();
        assert_eq!(ac, ActivationCode::new("smdp.example.com", "MATCH-001"));
        assert_eq!(ac.to_string(), "LPA:1$smdp.example.com$MATCH-001");
    }

    #[test]
    fn parses_optional_oid() {
        let text = "LPA:1$smdp.example.com$M$1.3.6.1.4.1.31746.1.1";
        let ac = ActivationCode::parse(text).unwrap();
        assert_eq!(ac.oid.as_deref(), Some("1.3.6.1.4.1.31746.1.1"));
        assert_eq!(ac.to_string(), text);
    }

    #[test]
    fn rejects_malformed_codes() {
        use BadActivationCode::*;
        assert_eq!(ActivationCode::parse("LPA:1$smdp.example.com$"), Err(EmptyMatchingId));
        assert_eq!(ActivationCode::parse("XYZ:1$a$b"), Err(Prefix));
        assert_eq!(ActivationCode::parse("LPA:1$$b"), Err(EmptyAddress));
        assert_eq!(ActivationCode::parse("LPA:1$a"), Err(FieldCount(2)));
        assert_eq!(ActivationCode::parse("LPA:1$a$b$c$d"), Err(FieldCount(5)));
        assert_eq!(ActivationCode::parse("LPA:2$a$b"), Err(Version("2".into())));
        assert_eq!(ActivationCode::parse("LPA:1$a$b$"), Err(EmptyOid));
    }
}
