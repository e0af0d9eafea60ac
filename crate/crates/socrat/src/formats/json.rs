//! JSON documents carrying a `schema_version` field.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_versioned_json<T: Serialize>(body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned { schema_version: SCHEMA_VERSION, body })?;
    s.push('\n');
    Ok(s)
}

pub fn from_versioned_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let v: Versioned<T> = serde_json::from_str(text)
        .map_err(|e| AppError::parse(origin, e.line(), e.to_string()))?;
    if v.schema_version != SCHEMA_VERSION {
        return Err(AppError::parse(origin, 1, format!("unsupported schema_version {}", v.schema_version)));
    }
    Ok(v.body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn version_is_checked() {
        let m = BTreeMap::from([("a".to_string(), 1)]);
        let text = to_versioned_json(&m).unwrap();
        assert_eq!(from_versioned_json::<BTreeMap<String, i32>>(&text, "t").unwrap(), m);
        let err = from_versioned_json::<BTreeMap<String, i32>>("{\"schema_version\": 2}", "t").unwrap_err();
        assert!(err.to_string().contains("unsupported schema_version 2"));
        assert!(matches!(from_versioned_json::<BTreeMap<String, i32>>("{", "t"), Err(AppError::Parse { .. })));
    }
}
