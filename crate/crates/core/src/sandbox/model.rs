//! Entity types of the travel world.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clock::{ClockTime, TimeWindow};

/// Hours a "day" of recommended visiting time stands for in source data.
pub const HOURS_PER_DAY_VISIT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct City {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Grade {
    #[serde(rename = "none")]
    Ungraded,
    #[serde(rename = "3A")]
    ThreeA,
    #[serde(rename = "4A")]
    FourA,
    #[serde(rename = "5A")]
    FiveA,
}

/// Hotel tiers in ascending order; `Ord` follows price priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HotelCategory {
    Economy,
    Midscale,
    Upscale,
    Luxury,
}

impl HotelCategory {
    pub const ALL: [HotelCategory; 4] = [
        HotelCategory::Economy,
        HotelCategory::Midscale,
        HotelCategory::Upscale,
        HotelCategory::Luxury,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HotelCategory::Economy => "Economy",
            HotelCategory::Midscale => "Midscale",
            HotelCategory::Upscale => "Upscale",
            HotelCategory::Luxury => "Luxury",
        }
    }
}

impl fmt::Display for HotelCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HotelCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        HotelCategory::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| format!("unknown hotel category {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportMode {
    Flight,
    Train,
}

impl TransportMode {
    /// Minutes before departure during which nothing else may be scheduled.
    pub fn departure_buffer_minutes(self) -> u16 {
        match self {
            TransportMode::Flight => 120,
            TransportMode::Train => 60,
        }
    }
}

impl fmt::Display for TransportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransportMode::Flight => "flight",
            TransportMode::Train => "train",
        })
    }
}

/// Coarse departure period named in user queries.
///
/// Boundaries: early morning departs before 09:00, late morning 09:00-12:00,
/// afternoon 12:00-18:00, evening from 18:00.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DaySlot {
    #[serde(rename = "early morning")]
    EarlyMorning,
    #[serde(rename = "late morning")]
    LateMorning,
    #[serde(rename = "afternoon")]
    Afternoon,
    #[serde(rename = "evening")]
    Evening,
}

impl DaySlot {
    pub const ALL: [DaySlot; 4] = [
        DaySlot::EarlyMorning,
        DaySlot::LateMorning,
        DaySlot::Afternoon,
        DaySlot::Evening,
    ];

    pub fn of(depart: ClockTime) -> DaySlot {
        match depart.minutes() {
            m if m < 9 * 60 => DaySlot::EarlyMorning,
            m if m < 12 * 60 => DaySlot::LateMorning,
            m if m < 18 * 60 => DaySlot::Afternoon,
            _ => DaySlot::Evening,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DaySlot::EarlyMorning => "early morning",
            DaySlot::LateMorning => "late morning",
            DaySlot::Afternoon => "afternoon",
            DaySlot::Evening => "evening",
        }
    }
}

impl fmt::Display for DaySlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DaySlot {
    type Err = String;

    /// Plain "morning" reads as early morning.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = crate::sandbox::normalize_name(s);
        if t == "morning" {
            return Ok(DaySlot::EarlyMorning);
        }
        DaySlot::ALL
            .into_iter()
            .find(|d| d.as_str() == t)
            .ok_or_else(|| format!("unknown day slot {s:?}"))
    }
}

macro_rules! cuisines {
    ($($variant:ident => $label:literal),+ $(,)?) => {
        /// Closed restaurant-type vocabulary used by queries and restaurant records.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Cuisine {
            $(#[serde(rename = $label)] $variant,)+
        }

        impl Cuisine {
            pub const ALL: &'static [Cuisine] = &[$(Cuisine::$variant,)+];

            pub fn label(self) -> &'static str {
                match self {
                    $(Cuisine::$variant => $label,)+
                }
            }
        }
    };
}

cuisines! {
    HotPot => "Hot Pot",
    FastFood => "Fast Food",
    Northwestern => "Northwestern Cuisine",
    Snacks => "Snacks",
    Buffet => "Buffet",
    Seafood => "Seafood",
    Pizza => "Pizza",
    Barbecue => "Barbecue",
    Crayfish => "Crayfish",
    Hainan => "Hainan Cuisine",
    WontonsAndDumplings => "Wontons and Dumplings",
    Sichuan => "Sichuan Cuisine",
    SoutheastAsian => "Southeast Asian Cuisine",
    JiangsuZhejiang => "Jiangsu and Zhejiang Cuisine",
    Hunan => "Hunan Cuisine",
    YunnanGuizhou => "Yunnan and Guizhou Cuisine",
    PorridgeShop => "Porridge Shop",
    OtherDelicacies => "Other Delicacies",
    RiceNoodles => "Rice Noodles",
    Korean => "Korean Cuisine",
    Guangdong => "Guangdong cuisine",
    Japanese => "Japanese Cuisine",
    Xinjiang => "Xinjiang Cuisine",
    Western => "Western Cuisine",
    Northeastern => "Northeastern Cuisine",
    Malatang => "Malatang",
    Shandong => "Shandong Cuisine",
    Farmhouse => "Farmhouse Cuisine",
    Huaiyang => "Huaiyang Cuisine",
    Creative => "Creative Cuisine",
    Vegetarian => "Vegetarian Cuisine",
    Jiangxi => "Jiangxi Cuisine",
    Chaoshan => "Chaoshan Cuisine",
    Anhui => "Anhui Cuisine",
    Taiwanese => "Taiwanese Cuisine",
    TeaRestaurant => "Tea Restaurant",
    HomeStyle => "Home-style Cooking",
    Hubei => "Hubei Cuisine",
    Beijing => "Beijing Cuisine",
    Fujian => "Fujian Cuisine",
    Guizhou => "Guizhou Cuisine",
    PrivateKitchen => "Private Kitchen",
    Guangxi => "Guangxi Cuisine",
    Hakka => "Hakka Cuisine",
    Tianjin => "Tianjin Cuisine",
    Shanxi => "Shanxi Cuisine",
    Henan => "Henan Cuisine",
    Shaanxi => "Shaanxi Cuisine",
}

impl fmt::Display for Cuisine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Cuisine {
    type Err = String;

    /// Matches the full label or the label without its "Cuisine" suffix,
    /// case-insensitively, so "Chaoshan" and "hot pot" both resolve.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = crate::sandbox::normalize_name(s);
        let t = t.strip_suffix(" dishes").unwrap_or(&t);
        Cuisine::ALL
            .iter()
            .copied()
            .find(|c| {
                let label = c.label().to_lowercase();
                label == t || label.strip_suffix(" cuisine") == Some(t)
            })
            .ok_or_else(|| format!("unknown cuisine {s:?}"))
    }
}

/// Recommended visit length in hours, `0 < min_hours <= max_hours`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DurationBounds {
    pub min_hours: f64,
    pub max_hours: f64,
}

impl DurationBounds {
    pub fn min_minutes(&self) -> f64 {
        self.min_hours * 60.0
    }

    pub fn max_minutes(&self) -> f64 {
        self.max_hours * 60.0
    }

    pub fn admits(&self, minutes: u16) -> bool {
        let m = f64::from(minutes);
        m + 1e-9 >= self.min_minutes() && m <= self.max_minutes() + 1e-9
    }

    /// Parses source-data phrasing such as `"2-3 hours"`, `"0.5-1 day"` or
    /// `"1 day"`; day quantities convert at ten hours per day.
    pub fn parse_text(s: &str) -> Result<Self, String> {
        let t = s.trim().to_lowercase();
        let (quantity, unit) = t
            .rsplit_once(' ')
            .ok_or_else(|| format!("duration {s:?} lacks a unit"))?;
        let scale = match unit.trim_end_matches('s') {
            "hour" | "hr" | "h" => 1.0,
            "day" => HOURS_PER_DAY_VISIT,
            "minute" | "min" => 1.0 / 60.0,
            other => return Err(format!("unknown duration unit {other:?} in {s:?}")),
        };
        let parse = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad duration quantity {x:?} in {s:?}"))
        };
        let (lo, hi) = match quantity.split_once(['-', '\u{2013}']) {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let v = parse(quantity)?;
                (v, v)
            }
        };
        Ok(DurationBounds {
            min_hours: lo * scale,
            max_hours: hi * scale,
        })
    }
}

impl<'de> Deserialize<'de> for DurationBounds {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Bounds { min_hours: f64, max_hours: f64 },
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => DurationBounds::parse_text(&s).map_err(serde::de::Error::custom),
            Raw::Bounds {
                min_hours,
                max_hours,
            } => Ok(DurationBounds {
                min_hours,
                max_hours,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attraction {
    pub id: String,
    pub name: String,
    pub city: String,
    pub lat: f64,
    pub lon: f64,
    pub grade: Grade,
    pub popularity: f64,
    pub rating: f64,
    pub entrance_fee: f64,
    pub opening_hours: TimeWindow,
    /// Latest admission when the venue stops letting visitors in before closing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_admission: Option<ClockTime>,
    pub recommended_duration: DurationBounds,
    #[serde(default)]
    pub feature_text: String,
    /// Food streets and quarters; a visit in a meal window counts as that meal.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub serves_food: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_label: Option<i32>,
}

impl Attraction {
    /// Whether a visit over `window` respects opening hours and admission cutoff.
    pub fn admits_visit(&self, window: &TimeWindow) -> bool {
        self.opening_hours.contains_window(window)
            && self.last_admission.is_none_or(|cut| window.start() <= cut)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restaurant {
    pub id: String,
    pub name: String,
    pub city: String,
    pub lat: f64,
    pub lon: f64,
    pub cuisine: Cuisine,
    pub avg_price: f64,
    pub rating: f64,
    pub env_rating: f64,
    pub service_rating: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_label: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotel {
    pub id: String,
    pub name: String,
    pub city: String,
    pub lat: f64,
    pub lon: f64,
    pub category: HotelCategory,
    pub price_per_night: f64,
    pub rating: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_label: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportLeg {
    /// Flight or train code, e.g. `CA8219`.
    pub id: String,
    pub mode: TransportMode,
    pub origin_city: String,
    pub dest_city: String,
    pub depart: ClockTime,
    pub arrive: ClockTime,
    pub price: f64,
    pub day_slot: DaySlot,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_text_normalizes_days() {
        let d = DurationBounds::parse_text("0.5-1 day").unwrap();
        assert_eq!((d.min_hours, d.max_hours), (5.0, 10.0));
        let d = DurationBounds::parse_text("2-3 hours").unwrap();
        assert_eq!((d.min_hours, d.max_hours), (2.0, 3.0));
        let d = DurationBounds::parse_text("1 day").unwrap();
        assert_eq!((d.min_hours, d.max_hours), (10.0, 10.0));
        assert!(DurationBounds::parse_text("a while").is_err());
    }

    #[test]
    fn cuisine_matching_is_loose_on_suffix() {
        assert_eq!("Chaoshan".parse::<Cuisine>().unwrap(), Cuisine::Chaoshan);
        assert_eq!("seafood".parse::<Cuisine>().unwrap(), Cuisine::Seafood);
        assert_eq!("hot pot".parse::<Cuisine>().unwrap(), Cuisine::HotPot);
        assert_eq!("Guangdong".parse::<Cuisine>().unwrap(), Cuisine::Guangdong);
        assert_eq!(Cuisine::ALL.len(), 48);
        assert!("Martian".parse::<Cuisine>().is_err());
    }

    #[test]
    fn day_slot_boundaries() {
        assert_eq!(DaySlot::of(ClockTime::hm(8, 59)), DaySlot::EarlyMorning);
        assert_eq!(DaySlot::of(ClockTime::hm(9, 0)), DaySlot::LateMorning);
        assert_eq!(DaySlot::of(ClockTime::hm(12, 0)), DaySlot::Afternoon);
        assert_eq!(DaySlot::of(ClockTime::hm(18, 0)), DaySlot::Evening);
        assert_eq!("Morning".parse::<DaySlot>().unwrap(), DaySlot::EarlyMorning);
    }
}
