//! Travel itinerary planning engine: sandbox catalog, POI recall, spatial
//! clustering, multi-agent consensus planning, constraint validation and
//! gated reward scoring.

pub mod ccot;
pub mod clock;
pub mod config;
pub mod constraints;
pub mod eval;
pub mod geo;
pub mod itinerary;
pub mod pipeline;
pub mod profile;
pub mod prompts;
pub mod providers;
pub mod recall;
pub mod reward;
pub mod sandbox;
pub mod sim;
