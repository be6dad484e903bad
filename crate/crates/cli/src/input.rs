//! Loading JSON inputs; the kind of document is recognized from its keys.

use std::path::Path;

use melonforge::feynman::{FeynmanGraph, FeynmanGraphJson};
use melonforge::gluing::{decompose, GluingGraph};
use melonforge::ifield::{DecoratedMap, MapJson};
use melonforge::plane_tree::{to_plane_tree, PlaneTree};
use melonforge::{recognize_gm, Bubble, GmCertificate, RawBubble};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::CliError;

pub enum Document {
    Bubble(Bubble),
    Certificate(GmCertificate),
    Gluing(GluingGraph),
    Tree(PlaneTree),
    Map(DecoratedMap),
    Feynman(FeynmanGraph),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Bubble(_) => "bubble",
            Document::Certificate(_) => "certificate",
            Document::Gluing(_) => "gluing",
            Document::Tree(_) => "tree",
            Document::Map(_) => "map",
            Document::Feynman(_) => "feynman",
        }
    }
}

pub fn read_value(path: &Path) -> Result<Value, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn parse<T: DeserializeOwned>(path: &Path, v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<Document, CliError> {
    let v = read_value(path)?;
    let has = |k: &str| v.get(k).is_some();
    let invalid = |e: String| CliError::Invalid(format!("{}: {e}", path.display()));
    if has("whites") {
        let raw: RawBubble = parse(path, v)?;
        return Bubble::validate(&raw).map(Document::Bubble).map_err(|e| invalid(e.to_string()));
    }
    if has("sequence") {
        return Ok(Document::Certificate(parse(path, v)?));
    }
    if has("quartics") {
        return Ok(Document::Gluing(parse(path, v)?));
    }
    if has("bubbles") && has("matching") {
        let j: FeynmanGraphJson = parse(path, v)?;
        return FeynmanGraph::from_json(&j).map(Document::Feynman).map_err(|e| invalid(e.to_string()));
    }
    let tree_like = v.get("vertices").and_then(|vs| vs.as_array()).and_then(|vs| vs.first()).map(|x| x.is_object());
    match tree_like {
        Some(true) => Ok(Document::Tree(parse(path, v)?)),
        Some(false) => {
            let j: MapJson = parse(path, v)?;
            DecoratedMap::from_json(&j).map(Document::Map).map_err(|e| invalid(e.to_string()))
        }
        None => Err(invalid("unrecognized document".into())),
    }
}

pub fn load_bubble(path: &Path) -> Result<Bubble, CliError> {
    match load(path)? {
        Document::Bubble(b) => Ok(b),
        Document::Certificate(c) => c.replay().map_err(|e| CliError::Invalid(e.to_string())),
        other => Err(CliError::Invalid(format!("{}: expected a bubble, found a {}", path.display(), other.kind()))),
    }
}

/// A plane tree, either given directly or derived from a GM bubble or a
/// tree gluing.
pub fn load_tree(path: &Path) -> Result<PlaneTree, CliError> {
    let invalid = |e: String| CliError::Invalid(format!("{}: {e}", path.display()));
    let gluing = match load(path)? {
        Document::Tree(t) => return Ok(t),
        Document::Gluing(g) => g,
        Document::Bubble(b) => {
            let cert = recognize_gm(&b).ok_or_else(|| invalid("bubble is not generalized melonic".into()))?;
            decompose(&b, &cert).map_err(|e| invalid(e.to_string()))?
        }
        other => return Err(invalid(format!("expected a tree, gluing or bubble, found a {}", other.kind()))),
    };
    to_plane_tree(&gluing).map_err(|e| invalid(e.to_string()))
}
