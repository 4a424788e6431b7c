//! User profile: explicit demands parsed from the query and preferences
//! inferred from budget and city price statistics.

use std::collections::BTreeMap;

use chrono::Weekday;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompts;
use crate::providers::{chat_structured, ChatModel, ChatRequest, ProviderConfig, ProviderError};
use crate::sandbox::{Cuisine, DaySlot, HotelCategory, Sandbox};

pub const HOTEL_SHARE: f64 = 0.55;
pub const MEAL_SHARE: f64 = 0.35;
/// Per-meal price bounds as fractions of the per-day meal budget.
pub const MEAL_RANGE_FRACTIONS: (f64, f64) = (0.15, 0.45);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("could not extract {0} from the query")]
    Extraction(&'static str),
    #[error("invalid demands: {0}")]
    InvalidDemands(String),
    #[error("no hotel category has a price")]
    StatsMissing,
    #[error("unknown city {0:?}")]
    UnknownCity(String),
    #[error("city {city:?} has no {what}")]
    EmptyCategorySet { city: String, what: &'static str },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

pub(crate) mod weekday_name {
    use chrono::Weekday;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn full(d: Weekday) -> &'static str {
        match d {
            Weekday::Mon => "Monday",
            Weekday::Tue => "Tuesday",
            Weekday::Wed => "Wednesday",
            Weekday::Thu => "Thursday",
            Weekday::Fri => "Friday",
            Weekday::Sat => "Saturday",
            Weekday::Sun => "Sunday",
        }
    }

    pub fn serialize<S: Serializer>(d: &Option<Weekday>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_str(full(*d)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Weekday>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| t.trim().parse::<Weekday>().map_err(|_| serde::de::Error::custom(format!("bad weekday {t:?}"))))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitDemands {
    #[serde(with = "weekday_name", default)]
    pub departure_day: Option<Weekday>,
    #[serde(with = "weekday_name", default)]
    pub return_day: Option<Weekday>,
    #[serde(default)]
    pub departure_slot: Option<DaySlot>,
    #[serde(default)]
    pub return_slot: Option<DaySlot>,
    pub duration_days: u32,
    pub origin_city: String,
    pub dest_city: String,
    #[serde(default)]
    pub other_requirements: Vec<String>,
    pub budget: f64,
    #[serde(default)]
    pub cuisine_prefs: Vec<Cuisine>,
}

impl ExplicitDemands {
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.duration_days < 1 {
            return Err(ProfileError::InvalidDemands("duration must be at least 1 day".into()));
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(ProfileError::InvalidDemands("budget must be positive".into()));
        }
        if self.origin_city.trim().is_empty() || self.dest_city.trim().is_empty() {
            return Err(ProfileError::InvalidDemands("cities must be named".into()));
        }
        Ok(())
    }

    /// Nights of the stay, clamped to 1 so one-day trips share the formulas.
    pub fn nights_divisor(&self) -> f64 {
        (self.duration_days.saturating_sub(1)).max(1) as f64
    }

    /// Requirements and cuisines as one text, the semantic recall query.
    pub fn interest_text(&self) -> String {
        let mut parts = self.other_requirements.clone();
        parts.extend(self.cuisine_prefs.iter().map(|c| c.label().to_string()));
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredPrefs {
    pub hotel_category: HotelCategory,
    pub meal_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityPriceStats {
    pub city: String,
    /// Cheapest nightly price per category present in the data.
    pub hotel_min_price: BTreeMap<HotelCategory, f64>,
    /// First quartile, median and third quartile of restaurant prices.
    pub meal_quartiles: [f64; 3],
    pub meal_price_range: (f64, f64),
    pub transport_price_range: Option<(f64, f64)>,
    /// False when a higher category is cheaper than a lower one.
    pub category_order_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub explicit: ExplicitDemands,
    pub inferred: InferredPrefs,
    pub raw_query: String,
}

impl UserProfile {
    pub fn budget(&self) -> f64 {
        self.explicit.budget
    }

    pub fn duration(&self) -> usize {
        self.explicit.duration_days as usize
    }
}

/// Linear-interpolation quantile over sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn city_stats(sandbox: &Sandbox, city: &str) -> Result<CityPriceStats, ProfileError> {
    let city_name = sandbox
        .city(city)
        .ok_or_else(|| ProfileError::UnknownCity(city.to_string()))?
        .name
        .clone();
    let mut hotel_min_price: BTreeMap<HotelCategory, f64> = BTreeMap::new();
    for h in sandbox.hotels_in(&city_name) {
        let e = hotel_min_price.entry(h.category).or_insert(h.price_per_night);
        *e = e.min(h.price_per_night);
    }
    if hotel_min_price.is_empty() {
        return Err(ProfileError::EmptyCategorySet {
            city: city_name,
            what: "hotels",
        });
    }
    let mut prices: Vec<f64> = sandbox.restaurants_in(&city_name).map(|r| r.avg_price).collect();
    if prices.is_empty() {
        return Err(ProfileError::EmptyCategorySet {
            city: city_name,
            what: "restaurants",
        });
    }
    prices.sort_by(f64::total_cmp);
    let legs: Vec<f64> = sandbox
        .transport()
        .iter()
        .filter(|l| l.origin_city == city_name || l.dest_city == city_name)
        .map(|l| l.price)
        .collect();
    let transport_price_range = (!legs.is_empty()).then(|| {
        (
            legs.iter().copied().fold(f64::INFINITY, f64::min),
            legs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    });
    let mins: Vec<f64> = hotel_min_price.values().copied().collect();
    let category_order_ok = mins.windows(2).all(|w| w[0] <= w[1]);
    if !category_order_ok {
        log::warn!("hotel category prices in {city_name} are not ordered by tier");
    }
    Ok(CityPriceStats {
        city: city_name,
        hotel_min_price,
        meal_quartiles: [
            quantile_sorted(&prices, 0.25),
            quantile_sorted(&prices, 0.5),
            quantile_sorted(&prices, 0.75),
        ],
        meal_price_range: (prices[0], prices[prices.len() - 1]),
        transport_price_range,
        category_order_ok,
    })
}

pub fn per_night_hotel_budget(d: &ExplicitDemands) -> f64 {
    d.budget * HOTEL_SHARE / d.nights_divisor()
}

pub fn per_day_meal_budget(d: &ExplicitDemands) -> f64 {
    d.budget * MEAL_SHARE / d.nights_divisor()
}

pub fn meal_range_for(per_day: f64) -> (f64, f64) {
    let lo = (per_day * MEAL_RANGE_FRACTIONS.0).floor().max(1.0);
    let hi = (per_day * MEAL_RANGE_FRACTIONS.1).ceil().max(lo + 1.0);
    (lo, hi)
}

pub fn infer_preferences(d: &ExplicitDemands, stats: &CityPriceStats) -> Result<InferredPrefs, ProfileError> {
    d.validate()?;
    if stats.hotel_min_price.is_empty() {
        return Err(ProfileError::StatsMissing);
    }
    let per_night = per_night_hotel_budget(d);
    let fitting = stats
        .hotel_min_price
        .iter()
        .rev()
        .find(|(_, &min)| min <= per_night)
        .map(|(c, _)| *c);
    let hotel_category = fitting.unwrap_or_else(|| {
        stats
            .hotel_min_price
            .iter()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)))
            .map(|(c, _)| *c)
            .expect("non-empty map")
    });
    Ok(InferredPrefs {
        hotel_category,
        meal_range: meal_range_for(per_day_meal_budget(d)),
    })
}

fn first_capture<'a>(re: &Regex, text: &'a str) -> Option<&'a str> {
    re.captures(text).and_then(|c| c.get(1)).map(|m| m.as_str().trim())
}

fn split_list(s: &str) -> Vec<String> {
    let sep = Regex::new(r",\s*and\s+|,\s*|\s+and\s+").expect("static regex");
    sep.split(s)
        .map(|t| t.trim().trim_end_matches('.').trim())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_cuisines(items: &[String]) -> Vec<Cuisine> {
    let mut out = Vec::new();
    for item in items {
        match item.parse::<Cuisine>() {
            Ok(c) if !out.contains(&c) => out.push(c),
            Ok(_) => {}
            Err(e) => log::warn!("ignoring cuisine: {e}"),
        }
    }
    out
}

fn parse_budget(s: &str) -> Option<f64> {
    let digits: String = s.chars().filter(|c| c.is_ascii_digit() || *c == '.').collect();
    digits.parse().ok().filter(|b: &f64| *b > 0.0)
}

const SLOT_PATTERN: &str = r"(early morning|late morning|morning|afternoon|evening)";

/// Parse the templated query phrasing used by the benchmark queries.
pub fn extract_rule_based(query: &str) -> Result<ExplicitDemands, ProfileError> {
    let duration_re = Regex::new(r"(?i)(\d+)-day\s+trip").expect("static regex");
    let cities_re = Regex::new(r"(?i)\bfrom\s+(.+?)\s+to\s+(.+?)(?:,|\s+departing|\.)").expect("static regex");
    let depart_re = Regex::new(&format!(r"(?i)departing on (\w+)\s+{SLOT_PATTERN}")).expect("static regex");
    let return_re = Regex::new(&format!(r"(?i)returning on (\w+)\s+{SLOT_PATTERN}")).expect("static regex");
    let budget_re = Regex::new(r"(?i)budget of\s*([¥￥$]?\s*[\d,]+(?:\.\d+)?)").expect("static regex");
    let interests_re = Regex::new(r"(?i)interested in (.+?)(?:,\s*along with|\.\s|\.$)").expect("static regex");
    let cuisines_re = Regex::new(r"(?i)cuisines like (.+?)\s+dishes").expect("static regex");

    let duration_days: u32 = first_capture(&duration_re, query)
        .and_then(|s| s.parse().ok())
        .filter(|d| *d >= 1)
        .ok_or(ProfileError::Extraction("duration"))?;
    let caps = cities_re.captures(query).ok_or(ProfileError::Extraction("cities"))?;
    let origin_city = caps[1].trim().to_string();
    let dest_city = caps[2].trim().to_string();
    let budget = first_capture(&budget_re, query)
        .and_then(parse_budget)
        .ok_or(ProfileError::Extraction("budget"))?;
    let day_and_slot = |re: &Regex| -> (Option<Weekday>, Option<DaySlot>) {
        re.captures(query)
            .map(|c| (c[1].parse().ok(), c[2].parse().ok()))
            .unwrap_or((None, None))
    };
    let (departure_day, departure_slot) = day_and_slot(&depart_re);
    let (return_day, return_slot) = day_and_slot(&return_re);
    let other_requirements = first_capture(&interests_re, query).map(split_list).unwrap_or_default();
    let cuisine_prefs = first_capture(&cuisines_re, query)
        .map(|s| parse_cuisines(&split_list(s)))
        .unwrap_or_default();
    let d = ExplicitDemands {
        departure_day,
        return_day,
        departure_slot,
        return_slot,
        duration_days,
        origin_city,
        dest_city,
        other_requirements,
        budget,
        cuisine_prefs,
    };
    d.validate()?;
    Ok(d)
}

fn join_natural(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

fn budget_text(b: f64) -> String {
    if b.fract() == 0.0 {
        format!("{b:.0}")
    } else {
        format!("{b}")
    }
}

/// Render demands in the templated phrasing that [`extract_rule_based`] reads.
pub fn render_query(d: &ExplicitDemands) -> String {
    let leg = |verb: &str, day: Option<Weekday>, slot: Option<DaySlot>| match (day, slot) {
        (Some(day), Some(slot)) => format!(", {verb} on {} {}", weekday_name::full(day), slot.as_str()),
        _ => String::new(),
    };
    let mut q = format!(
        "I am looking for a {}-day trip from {} to {}{}{}, with a budget of ¥{}.",
        d.duration_days,
        d.origin_city,
        d.dest_city,
        leg("departing", d.departure_day, d.departure_slot),
        leg("returning", d.return_day, d.return_slot),
        budget_text(d.budget),
    );
    if !d.other_requirements.is_empty() || !d.cuisine_prefs.is_empty() {
        q.push_str(" I'm interested in ");
        q.push_str(&join_natural(&d.other_requirements));
        if !d.cuisine_prefs.is_empty() {
            let labels: Vec<String> = d.cuisine_prefs.iter().map(|c| c.label().to_string()).collect();
            if !d.other_requirements.is_empty() {
                q.push_str(", along with");
            } else {
                q.push_str("food, along with");
            }
            q.push_str(&format!(" enjoying diverse cuisines like {} dishes", join_natural(&labels)));
        }
        q.push('.');
    }
    q
}

fn bracket_fields(reply: &str) -> BTreeMap<String, String> {
    let line_re = Regex::new(r"^\s*(?:\d+\.\s*)?([A-Za-z ]+?)\s*:\s*\[(.*)\]\s*$").expect("static regex");
    reply
        .lines()
        .filter_map(|l| line_re.captures(l))
        .map(|c| (c[1].trim().to_lowercase(), c[2].trim().to_string()))
        .collect()
}

/// Parse the bracketed extraction block returned by a chat provider.
pub fn parse_extraction_reply(reply: &str) -> Result<ExplicitDemands, String> {
    let f = bracket_fields(reply);
    let get = |k: &str| f.get(k).map(String::as_str).filter(|s| !s.is_empty());
    let need = |k: &'static str| get(k).ok_or(format!("missing field {k:?}"));
    let duration_days: u32 = need("duration")?
        .split_whitespace()
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or("duration is not a number")?;
    let budget = parse_budget(need("budget")?).ok_or("budget is not a number")?;
    let items = |k: &str| get(k).map(split_list).unwrap_or_default();
    let mut cuisine_items = items("restaurant type");
    cuisine_items.extend(items("reastaurant type"));
    let d = ExplicitDemands {
        departure_day: get("departure day").and_then(|s| s.parse().ok()),
        return_day: get("return day").and_then(|s| s.parse().ok()),
        departure_slot: get("departure time").and_then(|s| s.parse().ok()),
        return_slot: get("return time").and_then(|s| s.parse().ok()),
        duration_days,
        origin_city: need("departure city")?.to_string(),
        dest_city: need("destination city")?.to_string(),
        other_requirements: items("other requirements"),
        budget,
        cuisine_prefs: parse_cuisines(&cuisine_items),
    };
    d.validate().map_err(|e| e.to_string())?;
    Ok(d)
}

/// Extract demands with the provider when given, else with the rule parser.
pub fn extract_demands(
    query: &str,
    provider: Option<(&dyn ChatModel, &ProviderConfig)>,
) -> Result<ExplicitDemands, ProfileError> {
    if query.trim().is_empty() {
        return Err(ProfileError::Extraction("query"));
    }
    match provider {
        None => extract_rule_based(query),
        Some((model, cfg)) => {
            let req = ChatRequest::structured(prompts::SYSTEM, prompts::extraction_prompt(query));
            Ok(chat_structured(model, &req, cfg, parse_extraction_reply)?)
        }
    }
}

pub fn parse_inference_reply(reply: &str) -> Result<InferredPrefs, String> {
    let f = bracket_fields(reply);
    let hotel_category: HotelCategory = f
        .get("hotel cost")
        .ok_or("missing field \"Hotel Cost\"")?
        .parse()?;
    let range = f.get("meal cost range").ok_or("missing field \"Meal Cost Range\"")?;
    let nums: Vec<f64> = range
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match nums[..] {
        [lo, hi] if lo > 0.0 && lo <= hi => Ok(InferredPrefs {
            hotel_category,
            meal_range: (lo, hi),
        }),
        _ => Err(format!("meal range {range:?} is not two positive ordered numbers")),
    }
}

pub fn stats_prompt_fields(stats: &CityPriceStats) -> (String, String, String) {
    let transport = match stats.transport_price_range {
        Some((lo, hi)) => format!("{{\"min\": {lo}, \"max\": {hi}}}"),
        None => "{}".to_string(),
    };
    let hotels = serde_json::to_string(
        &stats
            .hotel_min_price
            .iter()
            .map(|(c, p)| (c.as_str(), serde_json::json!({"min_price": p})))
            .collect::<BTreeMap<_, _>>(),
    )
    .expect("stats serialize");
    let [q1, q2, q3] = stats.meal_quartiles;
    let meals = format!(
        "{{\"min\": {}, \"q1\": {q1}, \"median\": {q2}, \"q3\": {q3}, \"max\": {}}}",
        stats.meal_price_range.0, stats.meal_price_range.1
    );
    (transport, hotels, meals)
}

pub fn infer_preferences_with_provider(
    query: &str,
    d: &ExplicitDemands,
    stats: &CityPriceStats,
    model: &dyn ChatModel,
    cfg: &ProviderConfig,
) -> Result<InferredPrefs, ProfileError> {
    let (transport, hotels, meals) = stats_prompt_fields(stats);
    let prompt = prompts::inference_prompt(query, &transport, &hotels, &meals, &budget_text(d.budget));
    let req = ChatRequest::structured(prompts::SYSTEM, prompt);
    Ok(chat_structured(model, &req, cfg, parse_inference_reply)?)
}

/// Explicit demands plus inferred preferences for the destination city.
pub fn build_profile(
    query: &str,
    sandbox: &Sandbox,
    provider: Option<(&dyn ChatModel, &ProviderConfig)>,
) -> Result<UserProfile, ProfileError> {
    let explicit = extract_demands(query, provider)?;
    let stats = city_stats(sandbox, &explicit.dest_city)?;
    let inferred = match provider {
        Some((model, cfg)) => infer_preferences_with_provider(query, &explicit, &stats, model, cfg)?,
        None => infer_preferences(&explicit, &stats)?,
    };
    Ok(UserProfile {
        explicit,
        inferred,
        raw_query: query.to_string(),
    })
}
