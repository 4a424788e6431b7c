//! The static travel world: cities, attractions, restaurants, hotels and
//! intercity transport, with strict name-based entity resolution.
//!
//! A [`Sandbox`] is only obtainable through validation ([`Sandbox::from_document`],
//! [`load_sandbox`] or [`generate_synthetic`]), so every held entity satisfies
//! its invariants and names are unambiguous after normalization.

mod io;
mod model;
mod sample;
mod synth;

use std::collections::HashMap;

use thiserror::Error;

pub use io::{load_sandbox, save_sandbox, to_canonical_json, SandboxDocument, SCHEMA_VERSION};
pub use model::{
    Attraction, City, Cuisine, DaySlot, DurationBounds, Grade, Hotel, HotelCategory, Restaurant,
    TransportLeg, TransportMode, HOURS_PER_DAY_VISIT,
};
pub use sample::{xian_reference_trip, xian_sample, XIAN_REFERENCE_JSON, XIAN_SAMPLE_JSON};
pub use synth::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("cannot read sandbox: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed sandbox document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("{kind} {id:?}: invalid {field}: {detail}")]
    Parse {
        kind: EntityKind,
        id: String,
        field: &'static str,
        detail: String,
    },
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: EntityKind, id: String },
    #[error("{kind} names {first:?} and {second:?} collide after normalization in {city}")]
    DuplicateName {
        kind: EntityKind,
        city: String,
        first: String,
        second: String,
    },
    #[error("{kind} {id:?} references unknown city {city:?}")]
    UnknownCity {
        kind: EntityKind,
        id: String,
        city: String,
    },
    #[error("synthetic spec invalid: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    City,
    Attraction,
    Restaurant,
    Hotel,
    Transport,
}

impl std::fmt::Display for EntityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EntityKind::City => "city",
            EntityKind::Attraction => "attraction",
            EntityKind::Restaurant => "restaurant",
            EntityKind::Hotel => "hotel",
            EntityKind::Transport => "transport",
        })
    }
}

/// Case-fold, trim and collapse internal whitespace.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// A resolved reference into the sandbox.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntityRef<'a> {
    Attraction(&'a Attraction),
    Restaurant(&'a Restaurant),
    Hotel(&'a Hotel),
    Transport(&'a TransportLeg),
}

impl EntityRef<'_> {
    pub fn id(&self) -> &str {
        match self {
            EntityRef::Attraction(a) => &a.id,
            EntityRef::Restaurant(r) => &r.id,
            EntityRef::Hotel(h) => &h.id,
            EntityRef::Transport(t) => &t.id,
        }
    }
}

type NameIndex = HashMap<(String, String), usize>;

#[derive(Debug, Clone, Default)]
pub struct Sandbox {
    cities: Vec<City>,
    attractions: Vec<Attraction>,
    restaurants: Vec<Restaurant>,
    hotels: Vec<Hotel>,
    transport: Vec<TransportLeg>,
    attraction_names: NameIndex,
    restaurant_names: NameIndex,
    hotel_names: NameIndex,
    transport_ids: HashMap<String, usize>,
    attraction_ids: HashMap<String, usize>,
    restaurant_ids: HashMap<String, usize>,
    hotel_ids: HashMap<String, usize>,
}

impl Sandbox {
    /// Validates every entity and builds the lookup indexes. Total-or-fail.
    pub fn from_document(doc: SandboxDocument) -> Result<Self, SandboxError> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(SandboxError::UnsupportedVersion {
                found: doc.schema_version,
                supported: SCHEMA_VERSION,
            });
        }
        let mut city_names = HashMap::new();
        for c in &doc.cities {
            check_coords(EntityKind::City, &c.name, c.lat, c.lon)?;
            if city_names.insert(normalize_name(&c.name), ()).is_some() {
                return Err(SandboxError::DuplicateId {
                    kind: EntityKind::City,
                    id: c.name.clone(),
                });
            }
        }
        let known_city = |kind, id: &str, city: &str| {
            if city_names.contains_key(&normalize_name(city)) {
                Ok(())
            } else {
                Err(SandboxError::UnknownCity {
                    kind,
                    id: id.to_string(),
                    city: city.to_string(),
                })
            }
        };

        for a in &doc.attractions {
            let kind = EntityKind::Attraction;
            known_city(kind, &a.id, &a.city)?;
            check_coords(kind, &a.id, a.lat, a.lon)?;
            check_nonneg(kind, &a.id, "popularity", a.popularity)?;
            check_range(kind, &a.id, "rating", a.rating, 0.0, 5.0)?;
            check_nonneg(kind, &a.id, "entrance_fee", a.entrance_fee)?;
            let d = a.recommended_duration;
            if !(d.min_hours > 0.0 && d.min_hours <= d.max_hours && d.max_hours.is_finite()) {
                return Err(parse_err(
                    kind,
                    &a.id,
                    "recommended_duration",
                    format!("need 0 < min <= max, got {}-{}", d.min_hours, d.max_hours),
                ));
            }
        }
        for r in &doc.restaurants {
            let kind = EntityKind::Restaurant;
            known_city(kind, &r.id, &r.city)?;
            check_coords(kind, &r.id, r.lat, r.lon)?;
            check_positive(kind, &r.id, "avg_price", r.avg_price)?;
            check_range(kind, &r.id, "rating", r.rating, 0.0, 5.0)?;
            check_range(kind, &r.id, "env_rating", r.env_rating, 0.0, 10.0)?;
            check_range(kind, &r.id, "service_rating", r.service_rating, 0.0, 10.0)?;
        }
        for h in &doc.hotels {
            let kind = EntityKind::Hotel;
            known_city(kind, &h.id, &h.city)?;
            check_coords(kind, &h.id, h.lat, h.lon)?;
            check_positive(kind, &h.id, "price_per_night", h.price_per_night)?;
            check_range(kind, &h.id, "rating", h.rating, 0.0, 5.0)?;
        }
        for t in &doc.transport {
            let kind = EntityKind::Transport;
            known_city(kind, &t.id, &t.origin_city)?;
            known_city(kind, &t.id, &t.dest_city)?;
            check_positive(kind, &t.id, "price", t.price)?;
            if t.depart.minutes() >= 1440 || t.arrive.minutes() >= 1440 {
                return Err(parse_err(kind, &t.id, "depart", "times must lie in 00:00-23:59".into()));
            }
            if DaySlot::of(t.depart) != t.day_slot {
                return Err(parse_err(
                    kind,
                    &t.id,
                    "day_slot",
                    format!("{} does not match departure {}", t.day_slot, t.depart),
                ));
            }
        }

        let attraction_ids = id_index(EntityKind::Attraction, doc.attractions.iter().map(|a| &a.id))?;
        let restaurant_ids = id_index(EntityKind::Restaurant, doc.restaurants.iter().map(|r| &r.id))?;
        let hotel_ids = id_index(EntityKind::Hotel, doc.hotels.iter().map(|h| &h.id))?;
        let transport_ids = normalized_id_index(&doc.transport)?;
        let attraction_names = name_index(
            EntityKind::Attraction,
            doc.attractions.iter().map(|a| (&a.city, &a.name)),
        )?;
        let restaurant_names = name_index(
            EntityKind::Restaurant,
            doc.restaurants.iter().map(|r| (&r.city, &r.name)),
        )?;
        let hotel_names = name_index(EntityKind::Hotel, doc.hotels.iter().map(|h| (&h.city, &h.name)))?;

        Ok(Sandbox {
            cities: doc.cities,
            attractions: doc.attractions,
            restaurants: doc.restaurants,
            hotels: doc.hotels,
            transport: doc.transport,
            attraction_names,
            restaurant_names,
            hotel_names,
            transport_ids,
            attraction_ids,
            restaurant_ids,
            hotel_ids,
        })
    }

    pub fn to_document(&self) -> SandboxDocument {
        SandboxDocument {
            schema_version: SCHEMA_VERSION,
            cities: self.cities.clone(),
            attractions: self.attractions.clone(),
            restaurants: self.restaurants.clone(),
            hotels: self.hotels.clone(),
            transport: self.transport.clone(),
        }
    }

    /// Entity counts as `(cities, attractions, restaurants, hotels, transport)`.
    pub fn counts(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.cities.len(),
            self.attractions.len(),
            self.restaurants.len(),
            self.hotels.len(),
            self.transport.len(),
        )
    }

    pub fn cities(&self) -> &[City] {
        &self.cities
    }

    pub fn attractions(&self) -> &[Attraction] {
        &self.attractions
    }

    pub fn restaurants(&self) -> &[Restaurant] {
        &self.restaurants
    }

    pub fn hotels(&self) -> &[Hotel] {
        &self.hotels
    }

    pub fn transport(&self) -> &[TransportLeg] {
        &self.transport
    }

    pub fn city(&self, name: &str) -> Option<&City> {
        let n = normalize_name(name);
        self.cities.iter().find(|c| normalize_name(&c.name) == n)
    }

    pub fn attractions_in<'a>(&'a self, city: &str) -> impl Iterator<Item = &'a Attraction> + 'a {
        let n = normalize_name(city);
        self.attractions.iter().filter(move |a| normalize_name(&a.city) == n)
    }

    pub fn restaurants_in<'a>(&'a self, city: &str) -> impl Iterator<Item = &'a Restaurant> + 'a {
        let n = normalize_name(city);
        self.restaurants.iter().filter(move |r| normalize_name(&r.city) == n)
    }

    pub fn hotels_in<'a>(&'a self, city: &str) -> impl Iterator<Item = &'a Hotel> + 'a {
        let n = normalize_name(city);
        self.hotels.iter().filter(move |h| normalize_name(&h.city) == n)
    }

    /// Legs from `origin` to `dest`, in document order.
    pub fn legs_between<'a>(
        &'a self,
        origin: &str,
        dest: &str,
    ) -> impl Iterator<Item = &'a TransportLeg> + 'a {
        let (o, d) = (normalize_name(origin), normalize_name(dest));
        self.transport
            .iter()
            .filter(move |t| normalize_name(&t.origin_city) == o && normalize_name(&t.dest_city) == d)
    }

    pub fn attraction_by_id(&self, id: &str) -> Option<&Attraction> {
        self.attraction_ids.get(id).map(|&i| &self.attractions[i])
    }

    pub fn restaurant_by_id(&self, id: &str) -> Option<&Restaurant> {
        self.restaurant_ids.get(id).map(|&i| &self.restaurants[i])
    }

    pub fn hotel_by_id(&self, id: &str) -> Option<&Hotel> {
        self.hotel_ids.get(id).map(|&i| &self.hotels[i])
    }

    pub fn resolve_attraction(&self, city: &str, name: &str) -> Option<&Attraction> {
        self.attraction_names
            .get(&(normalize_name(city), normalize_name(name)))
            .map(|&i| &self.attractions[i])
    }

    pub fn resolve_restaurant(&self, city: &str, name: &str) -> Option<&Restaurant> {
        self.restaurant_names
            .get(&(normalize_name(city), normalize_name(name)))
            .map(|&i| &self.restaurants[i])
    }

    pub fn resolve_hotel(&self, city: &str, name: &str) -> Option<&Hotel> {
        self.hotel_names
            .get(&(normalize_name(city), normalize_name(name)))
            .map(|&i| &self.hotels[i])
    }

    /// Transport codes are global, so no city is involved.
    pub fn resolve_transport(&self, code: &str) -> Option<&TransportLeg> {
        self.transport_ids
            .get(&normalize_name(code))
            .map(|&i| &self.transport[i])
    }

    /// Exact match after normalization; absence is a value, not an error.
    pub fn resolve(&self, city: &str, name: &str, kind: EntityKind) -> Option<EntityRef<'_>> {
        match kind {
            EntityKind::Attraction => self.resolve_attraction(city, name).map(EntityRef::Attraction),
            EntityKind::Restaurant => self.resolve_restaurant(city, name).map(EntityRef::Restaurant),
            EntityKind::Hotel => self.resolve_hotel(city, name).map(EntityRef::Hotel),
            EntityKind::Transport => self.resolve_transport(name).map(EntityRef::Transport),
            EntityKind::City => None,
        }
    }

    /// Replace cluster labels (used by spatial anchoring to build a labeled view).
    pub(crate) fn with_labels(
        &self,
        attraction: &HashMap<String, i32>,
        restaurant: &HashMap<String, i32>,
        hotel: &HashMap<String, i32>,
    ) -> Sandbox {
        let mut view = self.clone();
        for a in &mut view.attractions {
            a.cluster_label = attraction.get(&a.id).copied();
        }
        for r in &mut view.restaurants {
            r.cluster_label = restaurant.get(&r.id).copied();
        }
        for h in &mut view.hotels {
            h.cluster_label = hotel.get(&h.id).copied();
        }
        view
    }
}

fn parse_err(kind: EntityKind, id: &str, field: &'static str, detail: String) -> SandboxError {
    SandboxError::Parse {
        kind,
        id: id.to_string(),
        field,
        detail,
    }
}

fn check_coords(kind: EntityKind, id: &str, lat: f64, lon: f64) -> Result<(), SandboxError> {
    check_range(kind, id, "lat", lat, -90.0, 90.0)?;
    check_range(kind, id, "lon", lon, -180.0, 180.0)
}

fn check_range(
    kind: EntityKind,
    id: &str,
    field: &'static str,
    v: f64,
    lo: f64,
    hi: f64,
) -> Result<(), SandboxError> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(parse_err(kind, id, field, format!("{v} outside [{lo}, {hi}]")))
    }
}

fn check_nonneg(kind: EntityKind, id: &str, field: &'static str, v: f64) -> Result<(), SandboxError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(parse_err(kind, id, field, format!("{v} must be >= 0")))
    }
}

fn check_positive(kind: EntityKind, id: &str, field: &'static str, v: f64) -> Result<(), SandboxError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(parse_err(kind, id, field, format!("{v} must be > 0")))
    }
}

fn id_index<'a>(
    kind: EntityKind,
    ids: impl Iterator<Item = &'a String>,
) -> Result<HashMap<String, usize>, SandboxError> {
    let mut out = HashMap::new();
    for (i, id) in ids.enumerate() {
        if out.insert(id.clone(), i).is_some() {
            return Err(SandboxError::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(out)
}

fn normalized_id_index(legs: &[TransportLeg]) -> Result<HashMap<String, usize>, SandboxError> {
    let mut out = HashMap::new();
    for (i, t) in legs.iter().enumerate() {
        if out.insert(normalize_name(&t.id), i).is_some() {
            return Err(SandboxError::DuplicateId {
                kind: EntityKind::Transport,
                id: t.id.clone(),
            });
        }
    }
    Ok(out)
}

/// Pairwise check that no two stored names in a city collide once normalized.
fn name_index<'a>(
    kind: EntityKind,
    entries: impl Iterator<Item = (&'a String, &'a String)>,
) -> Result<NameIndex, SandboxError> {
    let mut out: NameIndex = HashMap::new();
    let mut originals: Vec<&String> = Vec::new();
    for (i, (city, name)) in entries.enumerate() {
        originals.push(name);
        let key = (normalize_name(city), normalize_name(name));
        if let Some(&prev) = out.get(&key) {
            return Err(SandboxError::DuplicateName {
                kind,
                city: city.clone(),
                first: originals[prev].clone(),
                second: name.clone(),
            });
        }
        out.insert(key, i);
    }
    Ok(out)
}
