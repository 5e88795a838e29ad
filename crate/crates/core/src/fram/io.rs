use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Aspect, Coupling, FramFunction, FramModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("couplings[{index}] ({from} -> {to}): aspect \"output\" cannot be a coupling target")]
    AspectMisuse { index: usize, from: String, to: String },
    #[error("couplings[{index}]: unknown aspect {aspect:?}")]
    UnknownAspect { index: usize, aspect: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::Parse { .. } => "parse",
            ModelError::AspectMisuse { .. } => "aspect_misuse",
            ModelError::UnknownAspect { .. } => "unknown_aspect",
            ModelError::Io { .. } => "io",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: String,
    functions: Vec<FramFunction>,
    couplings: Vec<CouplingFile>,
    #[serde(default)]
    sources: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingFile {
    from: String,
    to: String,
    aspect: String,
    #[serde(default)]
    label: String,
}

/// Parses a model document. Either the whole model is returned or an error;
/// nothing partial escapes.
pub fn parse_model(text: &str) -> Result<FramModel, ModelError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut couplings = Vec::with_capacity(file.couplings.len());
    for (index, c) in file.couplings.into_iter().enumerate() {
        let aspect = match Aspect::parse(&c.aspect) {
            Some(a) => a,
            None if c.aspect == "output" => {
                return Err(ModelError::AspectMisuse {
                    index,
                    from: c.from,
                    to: c.to,
                })
            }
            None => {
                return Err(ModelError::UnknownAspect {
                    index,
                    aspect: c.aspect,
                })
            }
        };
        couplings.push(Coupling {
            from: c.from,
            to: c.to,
            aspect,
            label: c.label,
        });
    }

    Ok(FramModel {
        name: file.name,
        functions: file.functions,
        couplings,
        sources: file.sources,
    })
}

pub fn to_json(model: &FramModel) -> String {
    let file = ModelFile {
        name: model.name.clone(),
        functions: model.functions.clone(),
        couplings: model
            .couplings
            .iter()
            .map(|c| CouplingFile {
                from: c.from.clone(),
                to: c.to.clone(),
                aspect: c.aspect.as_str().to_string(),
                label: c.label.clone(),
            })
            .collect(),
        sources: model.sources.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FramModel, ModelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

pub fn save_model(model: &FramModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    fs::write(path, to_json(model)).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fram::shipped_initial;

    #[test]
    fn output_aspect_is_rejected_at_parse_time() {
        let text = r#"{"name":"m","functions":[
            {"id":"a","name":"A","actor_class":"amr","group":"judgment"},
            {"id":"b","name":"B","actor_class":"amr","group":"action"}],
            "couplings":[{"from":"a","to":"b","aspect":"output","label":"x"}],
            "sources":["a"]}"#;
        let err = parse_model(text).unwrap_err();
        assert_eq!(err.code(), "aspect_misuse");
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let full = to_json(&shipped_initial());
        let err = parse_model(&full[..full.len() / 2]).unwrap_err();
        match err {
            ModelError::Parse { line, .. } => assert!(line > 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let top = r#"{"name":"m","functions":[],"couplings":[],"sources":[],"extra":1}"#;
        assert_eq!(parse_model(top).unwrap_err().code(), "parse");
        let func = r#"{"name":"m","functions":[
            {"id":"a","name":"A","actor_class":"amr","group":"judgment","colour":"red"}],
            "couplings":[],"sources":["a"]}"#;
        assert_eq!(parse_model(func).unwrap_err().code(), "parse");
    }

    #[test]
    fn save_then_load_is_structurally_equal() {
        let m = shipped_initial();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.fram.json");
        save_model(&m, &p).unwrap();
        assert_eq!(load_model(&p).unwrap(), m);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert_eq!(load_model("/nonexistent/m.json").unwrap_err().code(), "io");
    }
}
