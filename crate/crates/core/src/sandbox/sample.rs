//! A small hand-written Wuhan to Xi'an catalog, plus a four-day reference
//! trip over it, used by examples and tests.

use super::{Sandbox, SandboxDocument};
use crate::itinerary::Itinerary;

pub const XIAN_SAMPLE_JSON: &str = include_str!("../../data/xian_sample.json");
pub const XIAN_REFERENCE_JSON: &str = include_str!("../../data/xian_reference.json");

pub fn xian_sample() -> Sandbox {
    let doc: SandboxDocument = serde_json::from_str(XIAN_SAMPLE_JSON).expect("bundled sample parses");
    Sandbox::from_document(doc).expect("bundled sample validates")
}

pub fn xian_reference_trip() -> Itinerary {
    serde_json::from_str(XIAN_REFERENCE_JSON).expect("bundled reference trip parses")
}
