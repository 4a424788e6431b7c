use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Attraction, City, Hotel, Restaurant, Sandbox, SandboxError, TransportLeg};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of a sandbox.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxDocument {
    pub schema_version: u32,
    #[serde(default)]
    pub cities: Vec<City>,
    #[serde(default)]
    pub attractions: Vec<Attraction>,
    #[serde(default)]
    pub restaurants: Vec<Restaurant>,
    #[serde(default)]
    pub hotels: Vec<Hotel>,
    #[serde(default)]
    pub transport: Vec<TransportLeg>,
}

pub fn load_sandbox(path: impl AsRef<Path>) -> Result<Sandbox, SandboxError> {
    let text = fs::read_to_string(path)?;
    let doc: SandboxDocument = serde_json::from_str(&text)?;
    Sandbox::from_document(doc)
}

/// Canonical form: entities sorted by id (cities by name), pretty JSON,
/// durations in structured hours, trailing newline.
pub fn to_canonical_json(sandbox: &Sandbox) -> String {
    let mut doc = sandbox.to_document();
    doc.cities.sort_by(|a, b| a.name.cmp(&b.name));
    doc.attractions.sort_by(|a, b| a.id.cmp(&b.id));
    doc.restaurants.sort_by(|a, b| a.id.cmp(&b.id));
    doc.hotels.sort_by(|a, b| a.id.cmp(&b.id));
    doc.transport.sort_by(|a, b| a.id.cmp(&b.id));
    let mut s = serde_json::to_string_pretty(&doc).expect("sandbox document serializes");
    s.push('\n');
    s
}

pub fn save_sandbox(sandbox: &Sandbox, path: impl AsRef<Path>) -> Result<(), SandboxError> {
    fs::write(path, to_canonical_json(sandbox))?;
    Ok(())
}
