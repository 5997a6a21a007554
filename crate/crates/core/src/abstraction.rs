//! The seven-field visual abstraction record distilled from a clip.

use std::fmt;

use serde_json::{json, Value};

use crate::schema::{parse_document, Cursor, SchemaError};

/// Whether an object is a bounded physical thing or a pattern composed of
/// other objects. Only explicit objects get generator seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Explicit,
    Implicit,
}

impl ObjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Explicit => "explicit",
            ObjectKind::Implicit => "implicit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "explicit" => Some(ObjectKind::Explicit),
            "implicit" => Some(ObjectKind::Implicit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InteractionType {
    Clear,
    Ambiguous,
    Constraint,
}

impl InteractionType {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionType::Clear => "clear",
            InteractionType::Ambiguous => "ambiguous",
            InteractionType::Constraint => "constraint",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clear" => Some(InteractionType::Clear),
            "ambiguous" => Some(InteractionType::Ambiguous),
            "constraint" => Some(InteractionType::Constraint),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneObject {
    pub name: String,
    pub kind: ObjectKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub objects_involved: Vec<String>,
    pub interaction_type: InteractionType,
    pub interaction_parameters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisualAbstraction {
    pub scenario: String,
    pub visual_elements: Vec<String>,
    pub objects: Vec<SceneObject>,
    pub static_patterns: Vec<String>,
    pub dynamic_patterns: Vec<String>,
    pub core_principles: Vec<String>,
    pub interactions: Vec<Interaction>,
}

/// Soft-bound deviations. These never reject a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbstractionWarning {
    ObjectCount(usize),
    InteractionCount(usize),
}

impl fmt::Display for AbstractionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractionWarning::ObjectCount(n) => {
                write!(f, "{n} objects listed; expected between 2 and 8")
            }
            AbstractionWarning::InteractionCount(n) => {
                write!(f, "{n} interactions listed; expected between 2 and 6")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedAbstraction {
    pub abstraction: VisualAbstraction,
    pub warnings: Vec<AbstractionWarning>,
}

pub const OBJECT_RANGE: std::ops::RangeInclusive<usize> = 2..=8;
pub const INTERACTION_RANGE: std::ops::RangeInclusive<usize> = 2..=6;

pub fn parse_abstraction(bytes: &[u8]) -> Result<ParsedAbstraction, SchemaError> {
    let doc = parse_document(bytes)?;
    abstraction_from_value(&doc)
}

pub fn abstraction_from_value(doc: &Value) -> Result<ParsedAbstraction, SchemaError> {
    let root = Cursor::root(doc);
    root.object()?;

    // The model sometimes answers the scenario as a list of sentences.
    let scenario_cursor = root.field("scenario")?;
    let scenario = match scenario_cursor.value() {
        Value::Array(_) => scenario_cursor.string_list()?.join(" "),
        _ => scenario_cursor.str()?.to_string(),
    };

    let visual_elements = root.field("visual_elements")?.string_list()?;

    let mut objects = Vec::new();
    for item in root.field("objects")?.array()? {
        let name = item.field("name")?.non_empty_str()?.to_string();
        let kind_cursor = match item.opt_field("type")? {
            Some(c) => c,
            None => item.field("kind")?,
        };
        let kind = ObjectKind::parse(kind_cursor.str()?).ok_or_else(|| {
            kind_cursor.invalid(format!(
                "unknown object type {:?}; expected explicit or implicit",
                kind_cursor.str().unwrap_or_default()
            ))
        })?;
        objects.push(SceneObject { name, kind });
    }

    let static_patterns = root.field("static_patterns")?.string_list()?;
    let dynamic_patterns = root.field("dynamic_patterns")?.string_list()?;
    let core_principles = root.field("core_principles")?.string_list()?;

    let mut interactions = Vec::new();
    for item in root.field("interactions")?.array()? {
        let objects_involved = item.field("objects_involved")?.string_list()?;
        let type_cursor = item.field("interaction_type")?;
        let interaction_type = InteractionType::parse(type_cursor.str()?).ok_or_else(|| {
            type_cursor.invalid(format!(
                "unknown interaction type {:?}; expected clear, ambiguous or constraint",
                type_cursor.str().unwrap_or_default()
            ))
        })?;
        let interaction_parameters = match item.opt_field("interaction_parameters")? {
            Some(c) => c.string_list()?,
            None => Vec::new(),
        };
        interactions.push(Interaction { objects_involved, interaction_type, interaction_parameters });
    }

    let mut warnings = Vec::new();
    if !OBJECT_RANGE.contains(&objects.len()) {
        warnings.push(AbstractionWarning::ObjectCount(objects.len()));
    }
    if !INTERACTION_RANGE.contains(&interactions.len()) {
        warnings.push(AbstractionWarning::InteractionCount(interactions.len()));
    }

    Ok(ParsedAbstraction {
        abstraction: VisualAbstraction {
            scenario,
            visual_elements,
            objects,
            static_patterns,
            dynamic_patterns,
            core_principles,
            interactions,
        },
        warnings,
    })
}

impl VisualAbstraction {
    pub fn to_json(&self) -> Value {
        json!({
            "scenario": self.scenario,
            "visual_elements": self.visual_elements,
            "objects": self.objects.iter().map(|o| json!({
                "name": o.name,
                "type": o.kind.as_str(),
            })).collect::<Vec<_>>(),
            "static_patterns": self.static_patterns,
            "dynamic_patterns": self.dynamic_patterns,
            "core_principles": self.core_principles,
            "interactions": self.interactions.iter().map(|i| json!({
                "objects_involved": i.objects_involved,
                "interaction_type": i.interaction_type.as_str(),
                "interaction_parameters": i.interaction_parameters,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn explicit_objects(&self) -> impl Iterator<Item = &SceneObject> {
        self.objects.iter().filter(|o| o.kind == ObjectKind::Explicit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SNOWFALL: &str = r#"{
        "scenario": "Snowflakes drift down and pile up on the ground.",
        "visual_elements": ["white flakes", "dark sky", "white ground strip"],
        "objects": [
            {"name": "snowflake", "type": "explicit"},
            {"name": "ground", "type": "explicit"}
        ],
        "static_patterns": ["ground stays at the bottom"],
        "dynamic_patterns": ["flakes fall one row at a time", "snow layer thickens"],
        "core_principles": ["gravity causes downward motion"],
        "interactions": [
            {"objects_involved": ["snowflake", "ground"], "interaction_type": "clear",
             "interaction_parameters": ["contact", "stacking"]},
            {"objects_involved": ["snowflake", "snowflake"], "interaction_type": "constraint",
             "interaction_parameters": ["occupied cell blocks descent"]}
        ]
    }"#;

    #[test]
    fn seven_field_record_parses() {
        let parsed = parse_abstraction(SNOWFALL.as_bytes()).unwrap();
        assert!(parsed.warnings.is_empty());
        let a = parsed.abstraction;
        assert_eq!(a.objects.len(), 2);
        assert_eq!(a.objects[0], SceneObject { name: "snowflake".into(), kind: ObjectKind::Explicit });
        assert_eq!(a.interactions[1].interaction_type, InteractionType::Constraint);
        let again = abstraction_from_value(&a.to_json()).unwrap().abstraction;
        assert_eq!(again, a);
    }

    #[test]
    fn unknown_interaction_type_is_an_enum_error() {
        let doc = SNOWFALL.replace("\"clear\"", "\"fuzzy\"");
        let err = parse_abstraction(doc.as_bytes()).unwrap_err();
        assert_eq!(err.path(), Some("$.interactions[0].interaction_type"));
    }

    #[test]
    fn nine_objects_is_a_warning_not_an_error() {
        let mut v: Value = serde_json::from_str(SNOWFALL).unwrap();
        let objs: Vec<Value> =
            (0..9).map(|i| json!({"name": format!("obj{i}"), "type": "explicit"})).collect();
        v["objects"] = Value::Array(objs);
        let parsed = abstraction_from_value(&v).unwrap();
        assert_eq!(parsed.warnings, vec![AbstractionWarning::ObjectCount(9)]);
        assert_eq!(parsed.abstraction.objects.len(), 9);
    }

    #[test]
    fn missing_field_and_wrong_shape() {
        let mut v: Value = serde_json::from_str(SNOWFALL).unwrap();
        v.as_object_mut().unwrap().remove("core_principles");
        assert_eq!(abstraction_from_value(&v).unwrap_err().path(), Some("$.core_principles"));

        let mut v: Value = serde_json::from_str(SNOWFALL).unwrap();
        v["static_patterns"] = json!("ground");
        assert!(matches!(
            abstraction_from_value(&v).unwrap_err(),
            SchemaError::WrongType { expected: "array", .. }
        ));
    }
}
