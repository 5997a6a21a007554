//! Prompt templates with `{name}` placeholders.
//!
//! Templates are TOML files with `name`, `placeholders`, `system` and `user`
//! keys. `{{` and `}}` stand for literal braces. Every placeholder used in
//! the text must be declared and every declared placeholder must be used, so
//! a typo fails at load time rather than leaking a marker into a prompt.
//! Rendering is a single pass: substituted values are never re-scanned.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use crate::llm::Stage;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TemplateError {
    #[error("template {name}: {message}")]
    Syntax { name: String, message: String },
    #[error("template {name}: placeholder {{{placeholder}}} is used but not declared")]
    Undeclared { name: String, placeholder: String },
    #[error("template {name}: placeholder {{{placeholder}}} is declared but never used")]
    Unused { name: String, placeholder: String },
    #[error("template {name}: no value for {{{placeholder}}}")]
    MissingValue { name: String, placeholder: String },
    #[error("template file {path}: {message}")]
    File { path: String, message: String },
    #[error("no template for {0}")]
    NotFound(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Slot(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateFile {
    name: String,
    #[serde(default)]
    placeholders: Vec<String>,
    system: String,
    user: String,
}

/// A parsed system/user prompt pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub name: String,
    pub system: String,
    pub user: String,
    pub placeholders: BTreeSet<String>,
    system_pieces: Vec<Piece>,
    user_pieces: Vec<Piece>,
}

/// The two texts sent to the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn tokenize(name: &str, text: &str) -> Result<Vec<Piece>, TemplateError> {
    let syntax = |message: String| TemplateError::Syntax { name: name.to_string(), message };
    let mut pieces = Vec::new();
    let mut buf = String::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if chars.peek().map(|&(_, n)| n) == Some('{') => {
                chars.next();
                buf.push('{');
            }
            '}' if chars.peek().map(|&(_, n)| n) == Some('}') => {
                chars.next();
                buf.push('}');
            }
            '{' => {
                let rest = &text[i + 1..];
                let len = rest.find(|ch: char| !is_ident_char(ch)).unwrap_or(rest.len());
                if len == 0 || !rest[len..].starts_with('}') {
                    return Err(syntax(format!("unescaped '{{' at byte {i}; write '{{{{' for a literal brace")));
                }
                if !buf.is_empty() {
                    pieces.push(Piece::Text(std::mem::take(&mut buf)));
                }
                pieces.push(Piece::Slot(rest[..len].to_string()));
                // Skip the identifier and the closing brace.
                for _ in 0..=len {
                    chars.next();
                }
            }
            '}' => return Err(syntax(format!("unescaped '}}' at byte {i}; write '}}}}' for a literal brace"))),
            _ => buf.push(c),
        }
    }
    if !buf.is_empty() {
        pieces.push(Piece::Text(buf));
    }
    Ok(pieces)
}

fn slots(pieces: &[Piece]) -> impl Iterator<Item = &str> {
    pieces.iter().filter_map(|p| match p {
        Piece::Slot(s) => Some(s.as_str()),
        Piece::Text(_) => None,
    })
}

impl PromptTemplate {
    pub fn new(
        name: impl Into<String>,
        system: impl Into<String>,
        user: impl Into<String>,
        placeholders: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self, TemplateError> {
        let name = name.into();
        let system = system.into();
        let user = user.into();
        let placeholders: BTreeSet<String> = placeholders.into_iter().map(Into::into).collect();
        let system_pieces = tokenize(&name, &system)?;
        let user_pieces = tokenize(&name, &user)?;
        let used: BTreeSet<&str> = slots(&system_pieces).chain(slots(&user_pieces)).collect();
        if let Some(p) = used.iter().find(|p| !placeholders.contains(**p)) {
            return Err(TemplateError::Undeclared { name, placeholder: p.to_string() });
        }
        if let Some(p) = placeholders.iter().find(|p| !used.contains(p.as_str())) {
            return Err(TemplateError::Unused { name, placeholder: p.clone() });
        }
        Ok(PromptTemplate { name, system, user, placeholders, system_pieces, user_pieces })
    }

    pub fn parse_toml(text: &str) -> Result<Self, TemplateError> {
        let file: TemplateFile =
            toml::from_str(text).map_err(|e| TemplateError::File { path: "<inline>".into(), message: e.to_string() })?;
        // TOML multi-line strings keep the newline after the opening quotes
        // out of the value but keep the final one; trim both ends so layout
        // in the file does not leak into prompts.
        PromptTemplate::new(file.name, file.system.trim(), file.user.trim(), file.placeholders)
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let file_err = |message: String| TemplateError::File { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        PromptTemplate::parse_toml(&text).map_err(|e| match e {
            TemplateError::File { message, .. } => file_err(message),
            other => other,
        })
    }

    /// Substitutes every placeholder. Values are inserted verbatim.
    pub fn render(&self, values: &BTreeMap<&str, String>) -> Result<RenderedPrompt, TemplateError> {
        let fill = |pieces: &[Piece]| -> Result<String, TemplateError> {
            let mut out = String::new();
            for p in pieces {
                match p {
                    Piece::Text(t) => out.push_str(t),
                    Piece::Slot(s) => out.push_str(values.get(s.as_str()).ok_or_else(|| {
                        TemplateError::MissingValue { name: self.name.clone(), placeholder: s.clone() }
                    })?),
                }
            }
            Ok(out)
        };
        Ok(RenderedPrompt { system: fill(&self.system_pieces)?, user: fill(&self.user_pieces)? })
    }
}

/// The reprompt template; appended to the user text after a schema failure.
pub const REPROMPT: &str = "reprompt";

const BUILTIN: [(&str, &str); 8] = [
    ("step1", include_str!("../../prompts/step1.toml")),
    ("step2", include_str!("../../prompts/step2.toml")),
    ("step3", include_str!("../../prompts/step3.toml")),
    ("step3_1", include_str!("../../prompts/step3_1.toml")),
    ("step3_2", include_str!("../../prompts/step3_2.toml")),
    ("judge", include_str!("../../prompts/judge.toml")),
    ("classifier", include_str!("../../prompts/classifier.toml")),
    (REPROMPT, include_str!("../../prompts/reprompt.toml")),
];

/// Templates keyed by name: one per stage plus [`REPROMPT`].
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl PromptSet {
    /// The templates shipped in `prompts/`, compiled into the binary.
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, text)| {
                let t = PromptTemplate::parse_toml(text).unwrap_or_else(|e| panic!("builtin template {name}: {e}"));
                (name.to_string(), t)
            })
            .collect();
        PromptSet { templates }
    }

    /// Starts from the builtin set and replaces every template that has a
    /// `{name}.toml` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = PromptSet::builtin();
        let names: Vec<String> = set.templates.keys().cloned().collect();
        for name in names {
            let path = dir.join(format!("{name}.toml"));
            if path.exists() {
                let t = PromptTemplate::load(&path)?;
                if t.name != name {
                    return Err(TemplateError::File {
                        path: path.display().to_string(),
                        message: format!("declares name {:?}, expected {name:?}", t.name),
                    });
                }
                set.templates.insert(name, t);
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate, TemplateError> {
        self.templates.get(name).ok_or_else(|| TemplateError::NotFound(name.to_string()))
    }

    pub fn for_stage(&self, stage: Stage) -> Result<&PromptTemplate, TemplateError> {
        self.get(stage.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}
