//! Day plans, proposals and trip itineraries in their JSON document form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clock::TimeWindow;
use crate::sandbox::TransportMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActivityType {
    #[serde(rename = "transportation")]
    Transportation,
    #[serde(rename = "check-in")]
    CheckIn,
    #[serde(rename = "check-out")]
    CheckOut,
    #[serde(rename = "sightseeing")]
    Sightseeing,
    #[serde(rename = "meal")]
    Meal,
    #[serde(rename = "local_transfer")]
    LocalTransfer,
}

impl ActivityType {
    pub fn as_str(self) -> &'static str {
        match self {
            ActivityType::Transportation => "transportation",
            ActivityType::CheckIn => "check-in",
            ActivityType::CheckOut => "check-out",
            ActivityType::Sightseeing => "sightseeing",
            ActivityType::Meal => "meal",
            ActivityType::LocalTransfer => "local_transfer",
        }
    }
}

impl fmt::Display for ActivityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    #[serde(rename = "time")]
    pub window: TimeWindow,
    #[serde(rename = "activity type")]
    pub activity: ActivityType,
    pub name: String,
    #[serde(default)]
    pub description: String,
}

impl Step {
    pub fn new(window: TimeWindow, activity: ActivityType, name: impl Into<String>) -> Self {
        Step {
            window,
            activity,
            name: name.into(),
            description: String::new(),
        }
    }

    pub fn with_description(mut self, d: impl Into<String>) -> Self {
        self.description = d.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayPlan {
    pub day_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub daily_cost: Option<f64>,
    #[serde(rename = "plan")]
    pub steps: Vec<Step>,
}

impl DayPlan {
    /// Times and names only, one step per line; the text compared across
    /// agents, so phrasing differences in descriptions do not count.
    pub fn content_key(&self) -> String {
        self.steps
            .iter()
            .map(|s| format!("{} {} {}", s.window, s.activity, s.name))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn steps_of(&self, kind: ActivityType) -> impl Iterator<Item = &Step> {
        self.steps.iter().filter(move |s| s.activity == kind)
    }
}

/// One agent's plan for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub agent_id: String,
    #[serde(flatten)]
    pub day: DayPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportRef {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<TransportMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripTransport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outbound: Option<TransportRef>,
    #[serde(rename = "return", default, skip_serializing_if = "Option::is_none")]
    pub inbound: Option<TransportRef>,
}

pub const ITINERARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub config_hash: String,
    #[serde(default)]
    pub query: String,
    pub origin_city: String,
    pub dest_city: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TripTransport>,
    /// Hotel name as listed in the sandbox.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hotel: Option<String>,
    #[serde(default)]
    pub total_cost: f64,
    pub days: Vec<DayPlan>,
}

fn default_version() -> u32 {
    ITINERARY_SCHEMA_VERSION
}

impl Itinerary {
    pub fn duration(&self) -> usize {
        self.days.len()
    }

    /// Stable text form sent to preference and judge models.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for d in &self.days {
            out.push_str(&d.day_label);
            out.push('\n');
            out.push_str(&d.content_key());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("itinerary serializes");
        s.push('\n');
        s
    }
}

pub fn day_label(day: usize) -> String {
    format!("Day {day}")
}

/// Role of a day within the trip; determines which structural rules apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayRole {
    First,
    Middle,
    Last,
    /// One-day trip: outbound and return transport on the same day.
    Single,
}

impl DayRole {
    /// Role of 1-based `day` in a trip of `duration` days.
    pub fn of(day: usize, duration: usize) -> DayRole {
        match (day, duration) {
            (_, 1) => DayRole::Single,
            (1, _) => DayRole::First,
            (d, n) if d == n => DayRole::Last,
            _ => DayRole::Middle,
        }
    }

    pub fn is_first(self) -> bool {
        matches!(self, DayRole::First | DayRole::Single)
    }

    pub fn is_last(self) -> bool {
        matches!(self, DayRole::Last | DayRole::Single)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proposal_json_matches_documented_shape() {
        let text = r#"{
            "agent_id": "heritage_historian",
            "day_label": "Day 1",
            "daily_cost": 1250,
            "plan": [{"time": "07:45-09:15", "activity type": "transportation",
                      "name": "CA8219", "description": "Travel from Wuhan to Xi'an via flight CA8219."}]
        }"#;
        let p: Proposal = serde_json::from_str(text).unwrap();
        assert_eq!(p.day.steps[0].activity, ActivityType::Transportation);
        assert_eq!(p.day.daily_cost, Some(1250.0));
        let back = serde_json::to_value(&p).unwrap();
        assert_eq!(back["plan"][0]["activity type"], "transportation");
        assert_eq!(back["plan"][0]["time"], "07:45-09:15");
    }

    #[test]
    fn unknown_activity_type_is_rejected() {
        let text = r#"{"day_label": "Day 1", "plan": [{"time": "07:45-09:15", "activity type": "breakfast", "name": "x"}]}"#;
        assert!(serde_json::from_str::<DayPlan>(text).is_err());
    }

    #[test]
    fn roles() {
        assert_eq!(DayRole::of(1, 1), DayRole::Single);
        assert_eq!(DayRole::of(1, 4), DayRole::First);
        assert_eq!(DayRole::of(4, 4), DayRole::Last);
        assert_eq!(DayRole::of(2, 4), DayRole::Middle);
    }
}
