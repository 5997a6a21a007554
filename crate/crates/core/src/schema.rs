//! Path-tracking accessors over `serde_json::Value`.
//!
//! Every error names the JSON path (`$.train[0].input`) of the first
//! violation, which serde's derive-based errors do not do reliably.

use std::fmt;

use serde_json::{Map, Value};

use crate::grid::{Grid, GridRole, GridVerdict, RawMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("{path}: missing required field")]
    Missing { path: String },
    #[error("{path}: expected {expected}, found {found}")]
    WrongType { path: String, expected: &'static str, found: &'static str },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {verdict}")]
    Grid { path: String, verdict: GridVerdict },
    #[error("document is not valid JSON: {0}")]
    Syntax(String),
}

impl SchemaError {
    pub fn path(&self) -> Option<&str> {
        match self {
            SchemaError::Missing { path }
            | SchemaError::WrongType { path, .. }
            | SchemaError::Invalid { path, .. }
            | SchemaError::Grid { path, .. } => Some(path),
            SchemaError::Syntax(_) => None,
        }
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// A borrowed value together with its path from the document root.
#[derive(Clone)]
pub struct Cursor<'a> {
    value: &'a Value,
    path: String,
}

impl fmt::Debug for Cursor<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cursor({})", self.path)
    }
}

impl<'a> Cursor<'a> {
    pub fn root(value: &'a Value) -> Self {
        Cursor { value, path: "$".to_string() }
    }

    pub fn value(&self) -> &'a Value {
        self.value
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    fn child_path(&self, key: &str) -> String {
        format!("{}.{}", self.path, key)
    }

    pub fn invalid(&self, message: impl Into<String>) -> SchemaError {
        SchemaError::Invalid { path: self.path.clone(), message: message.into() }
    }

    fn wrong(&self, expected: &'static str) -> SchemaError {
        SchemaError::WrongType { path: self.path.clone(), expected, found: type_name(self.value) }
    }

    pub fn object(&self) -> Result<&'a Map<String, Value>, SchemaError> {
        self.value.as_object().ok_or_else(|| self.wrong("object"))
    }

    pub fn field(&self, key: &str) -> Result<Cursor<'a>, SchemaError> {
        self.opt_field(key)?.ok_or_else(|| SchemaError::Missing { path: self.child_path(key) })
    }

    /// Missing and `null` are both treated as absent.
    pub fn opt_field(&self, key: &str) -> Result<Option<Cursor<'a>>, SchemaError> {
        let obj = self.object()?;
        Ok(obj
            .get(key)
            .filter(|v| !v.is_null())
            .map(|value| Cursor { value, path: self.child_path(key) }))
    }

    pub fn str(&self) -> Result<&'a str, SchemaError> {
        self.value.as_str().ok_or_else(|| self.wrong("string"))
    }

    pub fn non_empty_str(&self) -> Result<&'a str, SchemaError> {
        let s = self.str()?;
        if s.trim().is_empty() {
            return Err(self.invalid("must not be empty"));
        }
        Ok(s)
    }

    pub fn u64(&self) -> Result<u64, SchemaError> {
        self.value.as_u64().ok_or_else(|| self.wrong("non-negative integer"))
    }

    pub fn f64(&self) -> Result<f64, SchemaError> {
        self.value.as_f64().ok_or_else(|| self.wrong("number"))
    }

    pub fn array(&self) -> Result<Vec<Cursor<'a>>, SchemaError> {
        let items = self.value.as_array().ok_or_else(|| self.wrong("array"))?;
        Ok(items
            .iter()
            .enumerate()
            .map(|(i, value)| Cursor { value, path: format!("{}[{}]", self.path, i) })
            .collect())
    }

    pub fn string_list(&self) -> Result<Vec<String>, SchemaError> {
        self.array()?.iter().map(|c| c.str().map(str::to_string)).collect()
    }

    /// Object entries with string values, in key order.
    pub fn string_map(&self) -> Result<Vec<(String, String)>, SchemaError> {
        let obj = self.object()?;
        obj.iter()
            .map(|(k, v)| {
                let c = Cursor { value: v, path: self.child_path(k) };
                Ok((k.clone(), c.str()?.to_string()))
            })
            .collect()
    }

    pub fn grid(&self, role: GridRole) -> Result<Grid, SchemaError> {
        Grid::from_raw(&RawMatrix::from_json(self.value), role)
            .map_err(|verdict| SchemaError::Grid { path: self.path.clone(), verdict })
    }
}

pub fn parse_document(bytes: &[u8]) -> Result<Value, SchemaError> {
    serde_json::from_slice(bytes).map_err(|e| SchemaError::Syntax(e.to_string()))
}
