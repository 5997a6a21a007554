//! Locating and validating the JSON object inside a model reply.

use serde_json::Value;

use crate::abstraction::abstraction_from_value;
use crate::grid::GridRole;
use crate::schema::{Cursor, SchemaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReplySchema {
    Abstraction,
    Sketch,
    /// `library`, `main_code`, `generate_input_code`, `total_code`.
    ProgramV1,
    /// `input_bitmap_generation_code`, `used_concept`, `solution_code`.
    ProgramV2,
    /// `bitmap`, `pixel_meaning`, `parameter_desc`, `function_code`,
    /// `sample_execute_code`.
    BitmapSeed,
}

impl ReplySchema {
    pub fn as_str(self) -> &'static str {
        match self {
            ReplySchema::Abstraction => "abstraction",
            ReplySchema::Sketch => "sketch",
            ReplySchema::ProgramV1 => "program_v1",
            ReplySchema::ProgramV2 => "program_v2",
            ReplySchema::BitmapSeed => "bitmap_seed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractError {
    #[error("no JSON object found in reply")]
    NoJson,
    #[error("reply does not match the {schema} schema: {source}")]
    Schema { schema: &'static str, source: SchemaError },
}

impl ExtractError {
    pub fn path(&self) -> Option<&str> {
        match self {
            ExtractError::NoJson => None,
            ExtractError::Schema { source, .. } => source.path(),
        }
    }
}

/// The first `{` from which a complete JSON object parses. Earlier starts
/// enclose later ones, so this is the outermost object; stray braces in
/// prose fail to parse and are skipped.
pub fn find_json_object(text: &str) -> Option<Value> {
    for (i, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(v @ Value::Object(_))) = stream.next() {
            return Some(v);
        }
    }
    None
}

/// Finds the outermost JSON object in `reply`, tolerating surrounding prose
/// and code fences, and validates it against `schema`.
pub fn extract_json(reply: &str, schema: ReplySchema) -> Result<Value, ExtractError> {
    let value = find_json_object(reply).ok_or(ExtractError::NoJson)?;
    validate(&value, schema).map_err(|source| ExtractError::Schema { schema: schema.as_str(), source })?;
    Ok(value)
}

fn require_strings(root: &Cursor<'_>, keys: &[&str]) -> Result<(), SchemaError> {
    for key in keys {
        root.field(key)?.str()?;
    }
    Ok(())
}

pub fn validate(value: &Value, schema: ReplySchema) -> Result<(), SchemaError> {
    let root = Cursor::root(value);
    root.object()?;
    match schema {
        ReplySchema::Abstraction => abstraction_from_value(value).map(|_| ()),
        ReplySchema::Sketch => {
            let concepts = root.field("concepts")?;
            if concepts.string_list()?.is_empty() {
                return Err(concepts.invalid("must not be empty"));
            }
            root.field("description")?.non_empty_str().map(|_| ())
        }
        ReplySchema::ProgramV1 => {
            require_strings(&root, &["library", "main_code", "generate_input_code"])?;
            root.field("total_code")?.non_empty_str().map(|_| ())
        }
        ReplySchema::ProgramV2 => {
            root.field("input_bitmap_generation_code")?.non_empty_str()?;
            let used = root.field("used_concept")?;
            match used.value() {
                Value::Array(_) => {
                    used.string_list()?;
                }
                _ => {
                    used.str()?;
                }
            }
            root.field("solution_code")?.non_empty_str().map(|_| ())
        }
        ReplySchema::BitmapSeed => {
            root.field("bitmap")?.grid(GridRole::Output)?;
            root.field("pixel_meaning")?.string_map()?;
            root.field("parameter_desc")?.string_map()?;
            root.field("function_code")?.non_empty_str()?;
            root.field("sample_execute_code")?.str().map(|_| ())
        }
    }
}
