//! Attribute schema files and value dictionaries.
//!
//! A schema is a TOML document:
//!
//! ```toml
//! seed = 42
//!
//! [[attribute]]
//! name = "src"
//! kind = "categorical"
//!
//! [[attribute]]
//! name = "len"
//! kind = "numeric"
//! domain_bits = 16
//! range = true
//! ```
//!
//! Attributes are indexed from 1 in file order and can always be referred to
//! as `a1`, `a2`, ... in queries. Categorical values are mapped to integer
//! codes `1, 2, ...` in order of first appearance.

use std::collections::HashMap;
use std::path::Path;

use omnisketch_core::{AttributeValue, Schema};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeConfig {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_bits: Option<u32>,
    #[serde(default)]
    pub range: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "attribute")]
    pub attributes: Vec<AttributeConfig>,
}

impl SchemaConfig {
    /// `count` numeric, equality-only attributes named `a1..ak`.
    pub fn numeric(count: usize) -> Self {
        SchemaConfig {
            seed: None,
            attributes: (1..=count)
                .map(|i| AttributeConfig {
                    name: format!("a{i}"),
                    kind: AttributeKind::Numeric,
                    domain_bits: None,
                    range: false,
                })
                .collect(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SchemaConfig =
            toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::Schema("at least one attribute is required".into()));
        }
        let mut seen = HashMap::new();
        for (i, a) in self.attributes.iter().enumerate() {
            if a.name.is_empty() || a.name.contains(|c: char| c.is_whitespace() || c == ',') {
                return Err(Error::Schema(format!(
                    "attribute {} has an invalid name",
                    i + 1
                )));
            }
            if let Some(prev) = seen.insert(a.name.as_str(), i) {
                return Err(Error::Schema(format!(
                    "attributes {} and {} share the name `{}`",
                    prev + 1,
                    i + 1,
                    a.name
                )));
            }
            if a.range {
                if a.kind != AttributeKind::Numeric {
                    return Err(Error::Schema(format!(
                        "range attribute `{}` must be numeric",
                        a.name
                    )));
                }
                match a.domain_bits {
                    Some(1..=32) => {}
                    _ => {
                        return Err(Error::Schema(format!(
                            "range attribute `{}` needs domain_bits in 1..=32",
                            a.name
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn sketch_schema(&self) -> Schema {
        let bits = self
            .attributes
            .iter()
            .map(|a| if a.range { a.domain_bits } else { None })
            .collect();
        Schema::new(bits).expect("validated schema")
    }

    /// Zero-based index of an attribute given by name or as `aN`.
    pub fn resolve(&self, name: &str) -> Result<usize> {
        if let Some(i) = self.attributes.iter().position(|a| a.name == name) {
            return Ok(i);
        }
        name.strip_prefix(['a', 'A'])
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n >= 1 && n <= self.attributes.len())
            .map(|n| n - 1)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }
}

/// Per-attribute string-to-code maps for categorical attributes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionaries {
    // index = attribute; codes start at 1, entry i holds code i + 1
    values: Vec<Vec<String>>,
    codes: Vec<HashMap<String, AttributeValue>>,
}

impl Dictionaries {
    pub fn new(attributes: usize) -> Self {
        Dictionaries {
            values: vec![Vec::new(); attributes],
            codes: vec![HashMap::new(); attributes],
        }
    }

    /// Rebuilds dictionaries from the code-ordered value lists.
    pub fn from_values(values: Vec<Vec<String>>) -> Self {
        let codes = values
            .iter()
            .map(|vs| {
                vs.iter()
                    .enumerate()
                    .map(|(i, v)| (v.clone(), i as u64 + 1))
                    .collect()
            })
            .collect();
        Dictionaries { values, codes }
    }

    pub fn values(&self, attribute: usize) -> &[String] {
        &self.values[attribute]
    }

    /// Code for `value`, assigning the next one if it is new.
    pub fn encode(&mut self, attribute: usize, value: &str) -> AttributeValue {
        if let Some(&code) = self.codes[attribute].get(value) {
            return code;
        }
        self.values[attribute].push(value.to_string());
        let code = self.values[attribute].len() as u64;
        self.codes[attribute].insert(value.to_string(), code);
        code
    }

    /// Existing code for `value`; unseen values map to 0, which no record
    /// carries.
    pub fn lookup(&self, attribute: usize, value: &str) -> AttributeValue {
        self.codes[attribute].get(value).copied().unwrap_or(0)
    }
}
