//! Seeded generator for desk-scale sandboxes.
//!
//! Points of interest exist only in the first `destinations` cities; the
//! remaining cities act as trip origins. Attractions are planted in tight
//! groups (radius ~250 m) around `n_clusters_hint` centers 3-8 km from the
//! city center, so density clustering at 1 km recovers the groups.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    Attraction, City, Cuisine, DaySlot, DurationBounds, Grade, Hotel, HotelCategory, Restaurant,
    Sandbox, SandboxDocument, SandboxError, TransportLeg, TransportMode, SCHEMA_VERSION,
};
use crate::clock::{ClockTime, TimeWindow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub cities: usize,
    pub destinations: usize,
    /// Per destination city.
    pub attractions: usize,
    pub restaurants: usize,
    pub hotels: usize,
    /// Legs per (origin, destination, direction, day slot) combination.
    pub legs_per_slot: usize,
    pub n_clusters_hint: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            cities: 2,
            destinations: 1,
            attractions: 20,
            restaurants: 40,
            hotels: 12,
            legs_per_slot: 2,
            n_clusters_hint: 4,
        }
    }
}

const CITY_TABLE: &[(&str, f64, f64)] = &[
    ("Xi'an", 34.3416, 108.9398),
    ("Wuhan", 30.5928, 114.3055),
    ("Chengdu", 30.5728, 104.0668),
    ("Hangzhou", 30.2741, 120.1551),
    ("Nanjing", 32.0603, 118.7969),
    ("Shenzhen", 22.5431, 114.0579),
    ("Beijing", 39.9042, 116.4074),
    ("Shanghai", 31.2304, 121.4737),
    ("Guangzhou", 23.1291, 113.2644),
    ("Chongqing", 29.4316, 106.9123),
    ("Suzhou", 31.2989, 120.5853),
    ("Qingdao", 36.0671, 120.3826),
];

const ADJECTIVES: &[&str] = &[
    "Ancient", "Jade", "Golden", "Quiet", "Crimson", "Misty", "Eastern", "Western", "Lotus",
    "Bamboo", "Silver", "Dragon", "Phoenix", "Cloud", "Pine", "Willow",
];

const THEMES: &[(&str, &str)] = &[
    ("Museum", "museum history cultural relics exhibition hall"),
    ("Temple", "temple historical sites buddhist architecture culture"),
    ("Park", "park scenic nature garden walks relaxing"),
    ("Mountain", "mountain hiking nature scenic views"),
    ("Lake", "lake scenic nature boat relaxing"),
    ("Pagoda", "pagoda historical architecture landmark"),
    ("Gallery", "art gallery culture exhibition modern"),
    ("Old Street", "historic district street architecture night view"),
    ("Garden", "classical garden architecture scenic"),
    ("Palace", "palace imperial history architecture landmark"),
];

const FOOD_THEME: (&str, &str) = ("Food Quarter", "food street snacks local cuisine night market");

const RESTAURANT_NOUNS: &[&str] = &[
    "Kitchen", "House", "Tavern", "Bistro", "Garden Restaurant", "Eatery", "Dining Hall", "Table",
];

const OPENING: &[((u16, u16), (u16, u16))] = &[
    ((8, 0), (18, 0)),
    ((8, 30), (17, 30)),
    ((9, 0), (21, 0)),
    ((7, 0), (22, 0)),
    ((8, 0), (20, 0)),
];

const DURATIONS: &[(f64, f64)] = &[(1.0, 3.0), (2.0, 3.0), (1.5, 3.0), (2.0, 4.0), (1.0, 4.0), (1.0, 2.0)];

pub fn generate_synthetic(seed: u64, spec: &SyntheticSpec) -> Result<Sandbox, SandboxError> {
    if spec.cities == 0 {
        return Err(SandboxError::InvalidSpec("at least one city is required".into()));
    }
    if spec.cities > CITY_TABLE.len() {
        return Err(SandboxError::InvalidSpec(format!(
            "at most {} cities are available",
            CITY_TABLE.len()
        )));
    }
    if spec.destinations == 0 || spec.destinations > spec.cities {
        return Err(SandboxError::InvalidSpec(
            "destinations must be between 1 and the city count".into(),
        ));
    }
    if spec.attractions > 0 && spec.n_clusters_hint == 0 {
        return Err(SandboxError::InvalidSpec("n_clusters_hint must be >= 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cities: Vec<City> = CITY_TABLE[..spec.cities]
        .iter()
        .map(|&(name, lat, lon)| City {
            name: name.to_string(),
            lat,
            lon,
        })
        .collect();

    let mut doc = SandboxDocument {
        schema_version: SCHEMA_VERSION,
        cities: cities.clone(),
        attractions: Vec::new(),
        restaurants: Vec::new(),
        hotels: Vec::new(),
        transport: Vec::new(),
    };

    for (ci, city) in cities.iter().take(spec.destinations).enumerate() {
        let centers = cluster_centers(&mut rng, city, spec.n_clusters_hint.max(1));
        generate_attractions(&mut rng, ci, city, &centers, spec.attractions, &mut doc.attractions);
        generate_restaurants(&mut rng, ci, city, &centers, spec.restaurants, &mut doc.restaurants);
        generate_hotels(&mut rng, ci, city, &centers, spec.hotels, &mut doc.hotels);
    }

    let mut counter = 0usize;
    for dest in cities.iter().take(spec.destinations) {
        for origin in &cities {
            if origin.name == dest.name {
                continue;
            }
            for (from, to) in [(origin, dest), (dest, origin)] {
                for slot in DaySlot::ALL {
                    for k in 0..spec.legs_per_slot {
                        counter += 1;
                        doc.transport.push(make_leg(&mut rng, counter, k, from, to, slot));
                    }
                }
            }
        }
    }

    Sandbox::from_document(doc)
}

fn cluster_centers(rng: &mut ChaCha8Rng, city: &City, n: usize) -> Vec<(f64, f64)> {
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    (0..n)
        .map(|i| {
            let angle = phase + std::f64::consts::TAU * i as f64 / n as f64;
            let radius_km = rng.gen_range(3.0..8.0);
            offset(city.lat, city.lon, radius_km * angle.cos(), radius_km * angle.sin())
        })
        .collect()
}

/// Shift a point by (north_km, east_km).
fn offset(lat: f64, lon: f64, north_km: f64, east_km: f64) -> (f64, f64) {
    let dlat = north_km / 111.195;
    let dlon = east_km / (111.195 * lat.to_radians().cos());
    (lat + dlat, lon + dlon)
}

fn jitter(rng: &mut ChaCha8Rng, center: (f64, f64), radius_km: f64) -> (f64, f64) {
    let r = radius_km * rng.gen_range(0.0f64..1.0).sqrt();
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    let (lat, lon) = offset(center.0, center.1, r * a.cos(), r * a.sin());
    (round6(lat), round6(lon))
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn generate_attractions(
    rng: &mut ChaCha8Rng,
    city_index: usize,
    city: &City,
    centers: &[(f64, f64)],
    count: usize,
    out: &mut Vec<Attraction>,
) {
    for i in 0..count {
        let center = centers[i % centers.len()];
        let (lat, lon) = jitter(rng, center, 0.25);
        let theme = if i % 10 == 9 {
            FOOD_THEME
        } else {
            THEMES[rng.gen_range(0..THEMES.len())]
        };
        let adjective = ADJECTIVES[i % ADJECTIVES.len()];
        let name = format!("{adjective} {} {}", theme.0, i / ADJECTIVES.len() + 1);
        let (open, close) = OPENING[rng.gen_range(0..OPENING.len())];
        let opening_hours = TimeWindow::hm(open, close);
        let last_admission = rng
            .gen_bool(0.3)
            .then(|| opening_hours.end().minus(60));
        let (min_hours, max_hours) = DURATIONS[rng.gen_range(0..DURATIONS.len())];
        let grade = match rng.gen_range(0..10) {
            0..=2 => Grade::Ungraded,
            3..=4 => Grade::ThreeA,
            5..=7 => Grade::FourA,
            _ => Grade::FiveA,
        };
        let fee = if rng.gen_bool(0.3) {
            0.0
        } else {
            f64::from(rng.gen_range(2..30u32) * 5)
        };
        out.push(Attraction {
            id: format!("A{city_index:02}{i:04}"),
            name,
            city: city.name.clone(),
            lat,
            lon,
            grade,
            popularity: round1(rng.gen_range(1.0..100.0)),
            rating: round1(rng.gen_range(3.0..5.0)),
            entrance_fee: fee,
            opening_hours,
            last_admission,
            recommended_duration: DurationBounds {
                min_hours,
                max_hours,
            },
            feature_text: format!("{} {}", theme.1, adjective.to_lowercase()),
            serves_food: theme.0 == FOOD_THEME.0,
            cluster_label: None,
        });
    }
}

fn generate_restaurants(
    rng: &mut ChaCha8Rng,
    city_index: usize,
    city: &City,
    centers: &[(f64, f64)],
    count: usize,
    out: &mut Vec<Restaurant>,
) {
    for i in 0..count {
        let center = centers[i % centers.len()];
        let (lat, lon) = jitter(rng, center, 0.6);
        let cuisine = *Cuisine::ALL.choose(rng).expect("non-empty vocabulary");
        let noun = RESTAURANT_NOUNS[i % RESTAURANT_NOUNS.len()];
        out.push(Restaurant {
            id: format!("R{city_index:02}{i:04}"),
            name: format!("{} {noun} {}", cuisine.label(), i + 1),
            city: city.name.clone(),
            lat,
            lon,
            cuisine,
            avg_price: f64::from(rng.gen_range(16..50u32)) * 5.0 / 2.0 + 30.0,
            rating: round1(rng.gen_range(3.0..5.0)),
            env_rating: round1(rng.gen_range(5.0..9.5)),
            service_rating: round1(rng.gen_range(5.0..9.5)),
            cluster_label: None,
        });
    }
}

fn generate_hotels(
    rng: &mut ChaCha8Rng,
    city_index: usize,
    city: &City,
    centers: &[(f64, f64)],
    count: usize,
    out: &mut Vec<Hotel>,
) {
    for i in 0..count {
        let center = centers[i % centers.len()];
        let (lat, lon) = jitter(rng, center, 0.8);
        let category = HotelCategory::ALL[i % 4];
        let (lo, hi) = match category {
            HotelCategory::Economy => (150, 250),
            HotelCategory::Midscale => (250, 400),
            HotelCategory::Upscale => (400, 700),
            HotelCategory::Luxury => (700, 1500),
        };
        out.push(Hotel {
            id: format!("H{city_index:02}{i:04}"),
            name: format!("{} {} Hotel {}", ADJECTIVES[(i * 7) % ADJECTIVES.len()], category, i + 1),
            city: city.name.clone(),
            lat,
            lon,
            category,
            price_per_night: f64::from(rng.gen_range(lo..hi)),
            rating: round1(rng.gen_range(3.5..5.0)),
            cluster_label: None,
        });
    }
}

fn make_leg(
    rng: &mut ChaCha8Rng,
    counter: usize,
    k: usize,
    from: &City,
    to: &City,
    slot: DaySlot,
) -> TransportLeg {
    let mode = if k.is_multiple_of(2) {
        TransportMode::Flight
    } else {
        TransportMode::Train
    };
    let (lo, hi) = match slot {
        DaySlot::EarlyMorning => (6 * 60 + 30, 8 * 60 + 55),
        DaySlot::LateMorning => (9 * 60, 11 * 60 + 55),
        DaySlot::Afternoon => (12 * 60, 17 * 60 + 55),
        DaySlot::Evening => (18 * 60, 20 * 60 + 30),
    };
    let depart = rng.gen_range(lo / 5..=hi / 5) * 5;
    let travel = match mode {
        TransportMode::Flight => rng.gen_range(17..=26) * 5,
        TransportMode::Train => rng.gen_range(24..=40) * 5,
    };
    let arrive = (depart + travel).min(23 * 60 + 55);
    let (prefix, price) = match mode {
        TransportMode::Flight => ("CA", f64::from(rng.gen_range(60..120u32)) * 5.0),
        TransportMode::Train => ("G", f64::from(rng.gen_range(30..90u32)) * 5.0),
    };
    TransportLeg {
        id: format!("{prefix}{}", 1000 + counter),
        mode,
        origin_city: from.name.clone(),
        dest_city: to.name.clone(),
        depart: ClockTime::from_minutes(depart).expect("slot bounds lie within the day"),
        arrive: ClockTime::from_minutes(arrive).expect("clamped before midnight"),
        price,
        day_slot: slot,
    }
}
