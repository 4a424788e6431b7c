//! Offline chat responder. Recognizes every prompt template, reads the
//! structured data embedded in it and answers in the requested format, so the
//! whole pipeline runs deterministically without a network.
//!
//! Day plans come from a bounded depth-first scheduler whose candidate days
//! are checked with the real schedule validator before they are returned.

use std::collections::{BTreeMap, HashSet};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::ccot::{AgentSpec, GivenInfo};
use crate::clock::{ClockTime, TimeWindow};
use crate::constraints::{validate_proposal, DayContext, RuleConfig};
use crate::geo::{haversine, GeoPoint};
use crate::itinerary::{ActivityType, DayPlan, DayRole, Proposal, Step};
use crate::profile::{extract_rule_based, infer_preferences, CityPriceStats, ExplicitDemands};
use crate::providers::mock::Responder;
use crate::providers::{parse_json_document, ChatRequest};
use crate::sandbox::{normalize_name, Attraction, HotelCategory, Restaurant, TransportLeg};

/// Deterministic stand-in for a chat model.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineResponder;

impl Responder for OfflineResponder {
    fn respond(&self, req: &ChatRequest, seed: u64) -> String {
        respond(req, seed)
    }
}

const REPAIR_MARKER: &str = "\n\nYour previous reply could not be parsed (";

pub fn respond(req: &ChatRequest, seed: u64) -> String {
    let prompt = match req.user_prompt.rfind(REPAIR_MARKER) {
        Some(i) => &req.user_prompt[..i],
        None => req.user_prompt.as_str(),
    };
    let head = prompt.lines().next().unwrap_or("");
    let reply = if head.starts_with("You are a travel assistant. When a user provides") {
        extraction_reply(prompt)
    } else if head.starts_with("You are a travel assistant. Use the given statistics") {
        inference_reply(prompt)
    } else if head.starts_with("You are a Chief Travel Planner") {
        Some(agents_reply(prompt, seed))
    } else if head.starts_with("You are a Agent with the following profile:") {
        day_plan_reply(prompt, seed)
    } else if head.starts_with("You are role-playing as a travel agent") {
        review_reply(prompt, seed)
    } else if head.starts_with("You are the COMMITTEE ARBITRATOR") {
        arbitration_reply(prompt)
    } else if head.starts_with("You are a strict travel plan validator") {
        repair_reply(prompt, seed)
    } else if head.starts_with("You are a local travel expert") {
        Some(suggestion_reply(prompt))
    } else if head.starts_with("You are an AI assistant evaluating two travel plans") {
        Some(judge_reply(prompt, seed))
    } else {
        None
    };
    reply.unwrap_or_else(|| "I cannot help with that request.".to_string())
}

fn between<'a>(text: &'a str, start: &str, end: Option<&str>) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let rest = &text[from..];
    match end {
        Some(e) => rest.find(e).map(|i| &rest[..i]),
        None => Some(rest),
    }
}

fn hash_u64(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is long enough"))
}

fn extraction_reply(prompt: &str) -> Option<String> {
    let q = between(prompt, "Now respond to the user query based on the examples provided above:\n", None)?;
    let d = extract_rule_based(q).ok()?;
    Some(render_extraction(&d))
}

pub fn render_extraction(d: &ExplicitDemands) -> String {
    let day = |w: Option<chrono::Weekday>| w.map(crate::profile::weekday_name::full).unwrap_or("");
    let slot = |s: Option<crate::sandbox::DaySlot>| s.map(|s| s.as_str()).unwrap_or("");
    let cuisines: Vec<&str> = d.cuisine_prefs.iter().map(|c| c.label()).collect();
    format!(
        "Departure Day: [{}]\nReturn Day: [{}]\nDeparture Time: [{}]\nReturn Time: [{}]\nDuration: [{}]\n\
         Departure City: [{}]\nDestination City: [{}]\nOther Requirements: [{}]\nBudget: [{}]\nRestaurant Type: [{}]",
        day(d.departure_day),
        day(d.return_day),
        slot(d.departure_slot),
        slot(d.return_slot),
        d.duration_days,
        d.origin_city,
        d.dest_city,
        d.other_requirements.join(", "),
        d.budget,
        cuisines.join(", "),
    )
}

fn inference_reply(prompt: &str) -> Option<String> {
    #[derive(Deserialize)]
    struct MinPrice {
        min_price: f64,
    }
    #[derive(Deserialize)]
    struct Meals {
        min: f64,
        q1: f64,
        median: f64,
        q3: f64,
        max: f64,
    }
    let query = between(prompt, "User Query:\n", Some("\n\nPrice Information:"))?;
    let hotels: BTreeMap<String, MinPrice> =
        serde_json::from_str(between(prompt, "\nHotel Prices: ", Some("\n"))?).ok()?;
    let meals: Meals = serde_json::from_str(between(prompt, "\nRestaurant Meal Prices: ", Some("\n"))?).ok()?;
    let budget: f64 = between(prompt, "\nBudget: ", None)?.trim().parse().ok()?;
    let mut d = extract_rule_based(query).ok()?;
    d.budget = budget;
    let hotel_min_price = hotels
        .into_iter()
        .filter_map(|(k, v)| k.parse::<HotelCategory>().ok().map(|c| (c, v.min_price)))
        .collect();
    let stats = CityPriceStats {
        city: d.dest_city.clone(),
        hotel_min_price,
        meal_quartiles: [meals.q1, meals.median, meals.q3],
        meal_price_range: (meals.min, meals.max),
        transport_price_range: None,
        category_order_ok: true,
    };
    let p = infer_preferences(&d, &stats).ok()?;
    Some(format!(
        "Hotel Cost: [{}]\nMeal Cost Range: [{},{}]",
        p.hotel_category.as_str(),
        p.meal_range.0,
        p.meal_range.1
    ))
}

/// Planning styles the offline agents can play.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Archetype {
    Base,
    Cultural,
    Foodie,
    Budget,
    Route,
    Nature,
    Pace,
}

impl Archetype {
    const TEAM: [Archetype; 6] = [
        Archetype::Cultural,
        Archetype::Foodie,
        Archetype::Budget,
        Archetype::Route,
        Archetype::Nature,
        Archetype::Pace,
    ];

    pub fn of_agent(agent_id: &str) -> Archetype {
        let id = agent_id.to_lowercase();
        [
            ("cultur", Archetype::Cultural),
            ("food", Archetype::Foodie),
            ("budget", Archetype::Budget),
            ("route", Archetype::Route),
            ("nature", Archetype::Nature),
            ("pace", Archetype::Pace),
        ]
        .into_iter()
        .find(|(k, _)| id.contains(k))
        .map_or(Archetype::Base, |(_, a)| a)
    }

    fn spec(self) -> AgentSpec {
        let (id, objective, priorities, personality): (&str, &str, &[&str], &str) = match self {
            Archetype::Base => ("base", "Produce a valid compact route", &["Validity"], "Methodical"),
            Archetype::Cultural => (
                "cultural_scholar",
                "Maximize cultural and historical sightseeing hours per day (target >= 4 h)",
                &["Museums and heritage sites", "Historic districts"],
                "Rigorous, inquisitive",
            ),
            Archetype::Foodie => (
                "foodie_explorer",
                "Maximize average restaurant rating while keeping each meal within the meal range (CNY)",
                &["Preferred cuisines", "Highly rated local spots"],
                "Curious, sociable",
            ),
            Archetype::Budget => (
                "budget_manager",
                "Keep total daily cost <= budget / days (CNY) and minimize entrance fees",
                &["Free or cheap attractions", "Economical meals"],
                "Pragmatic, cost-aware",
            ),
            Archetype::Route => (
                "route_optimizer",
                "Minimize average leg distance (km) between consecutive stops",
                &["Single cluster per day", "Restaurants along the route"],
                "Efficient, orderly",
            ),
            Archetype::Nature => (
                "nature_seeker",
                "Maximize hours spent in parks, mountains and scenic areas (target >= 3 h)",
                &["Scenic spots", "Outdoor walks"],
                "Calm, outdoorsy",
            ),
            Archetype::Pace => (
                "pace_keeper",
                "Keep active time between 7 and 8 hours per day with <= 3 sightseeing stops",
                &["Balanced rhythm", "No idle gaps over 1 h"],
                "Steady, attentive",
            ),
        };
        AgentSpec {
            agent_id: id.into(),
            objective: objective.into(),
            priorities: priorities.iter().map(|s| s.to_string()).collect(),
            personality: personality.into(),
        }
    }
}

fn agents_reply(prompt: &str, seed: u64) -> String {
    let query = between(prompt, "Now respond based on the user query:\n", None).unwrap_or("");
    let count = 4 + (hash_u64(seed, &["team", query]) % 3) as usize;
    let team: Vec<AgentSpec> = Archetype::TEAM[..count].iter().map(|a| a.spec()).collect();
    serde_json::to_string_pretty(&team).expect("agents serialize")
}

const CULTURE_WORDS: &[&str] = &[
    "museum", "temple", "histor", "palace", "wall", "tomb", "mausoleum", "pagoda", "heritage", "culture",
    "cultural", "ancient", "dynasty", "tower", "relic", "warrior",
];
const NATURE_WORDS: &[&str] = &[
    "park", "mountain", "lake", "garden", "scenic", "river", "forest", "spring", "nature", "valley", "hill",
    "wetland", "island",
];

fn keyword_hits(text: &str, words: &[&str]) -> f64 {
    let t = text.to_lowercase();
    words.iter().filter(|w| t.contains(*w)).count() as f64
}

fn interest_words(interests: &[String]) -> Vec<String> {
    interests
        .iter()
        .flat_map(|s| s.split(|c: char| !c.is_alphanumeric()))
        .filter(|w| w.len() >= 4)
        .map(|w| w.to_lowercase().trim_end_matches('s').to_string())
        .collect()
}

fn point_of_a(a: &Attraction) -> GeoPoint {
    GeoPoint::new(a.lat, a.lon)
}

fn point_of_r(r: &Restaurant) -> GeoPoint {
    GeoPoint::new(r.lat, r.lon)
}

fn round_up(minutes: f64, step: u16) -> u16 {
    let m = minutes.max(1.0).ceil() as u16;
    m.div_ceil(step) * step
}

#[derive(Debug, Clone)]
struct Anchor {
    window: TimeWindow,
    activity: ActivityType,
    name: String,
    description: String,
}

#[derive(Debug, Clone)]
struct State {
    body: Vec<Anchor>,
    /// Earliest start for the next activity; `None` before the first one.
    t_free: Option<u16>,
    at: GeoPoint,
    used_a: Vec<usize>,
    used_r: Vec<usize>,
    lunch: Option<u16>,
    dinner: Option<u16>,
}

const TRANSFER: u16 = 30;
const MAX_WAIT: u16 = 60;
const MEAL_MINUTES: u16 = 60;
const DAY_OPEN: u16 = 8 * 60 + 30;
const MAX_VISITS: usize = 3;
const VISIT_BRANCHES: usize = 6;
const MEAL_BRANCHES: usize = 3;
const NODE_LIMIT: usize = 40_000;

struct Planner<'a> {
    info: &'a GivenInfo,
    prior: &'a [DayPlan],
    rules: RuleConfig,
    sandbox: crate::sandbox::Sandbox,
    style: Archetype,
    attractions: Vec<&'a Attraction>,
    restaurants: Vec<&'a Restaurant>,
    attr_score: Vec<f64>,
    rest_bias: Vec<f64>,
    need_lunch: bool,
    need_dinner: bool,
    deadline: u16,
    nodes: usize,
}

impl<'a> Planner<'a> {
    fn new(
        info: &'a GivenInfo,
        prior: &'a [DayPlan],
        style: Archetype,
        favored: &HashSet<String>,
        seed: u64,
        agent_id: &str,
    ) -> Option<Self> {
        let sandbox = info.to_sandbox().ok()?;
        let used: HashSet<String> = prior
            .iter()
            .flat_map(|d| d.steps.iter())
            .map(|s| normalize_name(&s.name))
            .collect();
        let attractions: Vec<&Attraction> = info
            .attractions()
            .filter(|a| !a.serves_food && !used.contains(&normalize_name(&a.name)))
            .collect();
        let restaurants: Vec<&Restaurant> = info
            .restaurants()
            .filter(|r| !used.contains(&normalize_name(&r.name)))
            .collect();
        let interests = interest_words(&info.trip.interests);
        let max_pop = attractions.iter().map(|a| a.popularity).fold(1e-9, f64::max);
        let hotel = info.hotel.as_ref().map(|h| GeoPoint::new(h.lat, h.lon));
        let jitter = |id: &str| (hash_u64(seed, &[agent_id, id]) % 1000) as f64 / 2000.0;
        let attr_score = attractions
            .iter()
            .map(|a| {
                let text = format!("{} {}", a.name, a.feature_text);
                let pop = a.popularity / max_pop;
                let interest = interests
                    .iter()
                    .filter(|w| text.to_lowercase().contains(w.as_str()))
                    .count() as f64;
                let dist = hotel.map_or(0.0, |h| haversine(h, point_of_a(a)));
                let style_term = match style {
                    Archetype::Base => 2.0 * pop + 0.3 * a.rating,
                    Archetype::Cultural => 3.0 * keyword_hits(&text, CULTURE_WORDS) + pop,
                    Archetype::Nature => 3.0 * keyword_hits(&text, NATURE_WORDS) + pop,
                    Archetype::Budget => pop - a.entrance_fee / 40.0,
                    Archetype::Route => pop - 0.5 * dist,
                    Archetype::Foodie => 2.0 * pop,
                    Archetype::Pace => 2.0 * pop - a.recommended_duration.min_hours / 2.0,
                };
                let bonus = if style != Archetype::Base && favored.contains(&normalize_name(&a.name)) {
                    3.0
                } else {
                    0.0
                };
                style_term + 1.5 * interest + bonus + jitter(&a.id)
            })
            .collect();
        let (lo, hi) = info.trip.meal_range;
        let rest_bias = restaurants
            .iter()
            .map(|r| {
                let in_range = if r.avg_price >= lo && r.avg_price <= hi { 2.0 } else { 0.0 };
                let cuisine = if info.trip.cuisine_prefs.contains(&r.cuisine) { 2.0 } else { 0.0 };
                let style_term = match style {
                    Archetype::Foodie => 2.0 * r.rating + 1.5 * cuisine,
                    Archetype::Budget => 0.5 * r.rating - r.avg_price / 50.0,
                    _ => r.rating,
                };
                let bonus = if style != Archetype::Base && favored.contains(&normalize_name(&r.name)) {
                    2.0
                } else {
                    0.0
                };
                style_term + in_range + cuisine + bonus + jitter(&r.id)
            })
            .collect();
        Some(Planner {
            info,
            prior,
            rules: RuleConfig::default(),
            sandbox,
            style,
            attractions,
            restaurants,
            attr_score,
            rest_bias,
            need_lunch: false,
            need_dinner: false,
            deadline: 0,
            nodes: 0,
        })
    }

    fn distance_weight(&self) -> f64 {
        match self.style {
            Archetype::Route => 1.0,
            Archetype::Foodie => 0.2,
            _ => 0.4,
        }
    }

    fn head(&self) -> (Vec<Anchor>, Option<u16>, GeoPoint) {
        let role = self.info.trip.role;
        let hotel = self.info.hotel.as_ref();
        let start_point = hotel
            .map(|h| GeoPoint::new(h.lat, h.lon))
            .or_else(|| self.attractions.first().map(|a| point_of_a(a)))
            .unwrap_or(GeoPoint::new(0.0, 0.0));
        if !role.is_first() {
            return (vec![], None, start_point);
        }
        let Some(leg) = &self.info.transportation.outbound else {
            return (vec![], None, start_point);
        };
        let mut out = vec![transport_anchor(leg)];
        let arrive = leg.arrive.minutes();
        let mut t = arrive;
        if role == DayRole::First {
            if let Some(h) = hotel {
                let s = arrive + TRANSFER;
                out.push(Anchor {
                    window: window(s, s + 30),
                    activity: ActivityType::CheckIn,
                    name: h.name.clone(),
                    description: format!("Check in at {}.", h.name),
                });
                t = s + 30;
            }
        }
        (out, Some(t + TRANSFER), start_point)
    }

    /// Latest end of the last body activity.
    fn body_deadline(&self) -> u16 {
        let latest = self.rules.latest_end.minutes();
        let role = self.info.trip.role;
        let leg = self.info.transportation.inbound.as_ref();
        match (role, leg) {
            (DayRole::Last, Some(l)) => {
                let cut = l.depart.minutes().saturating_sub(l.mode.departure_buffer_minutes());
                cut.saturating_sub(2 * TRANSFER).min(latest)
            }
            (DayRole::Single, Some(l)) => {
                let cut = l.depart.minutes().saturating_sub(l.mode.departure_buffer_minutes());
                cut.saturating_sub(TRANSFER).min(latest)
            }
            _ => latest.min(22 * 60),
        }
    }

    fn tail(&self, last_end: Option<u16>) -> Option<Vec<Anchor>> {
        let role = self.info.trip.role;
        let Some(leg) = &self.info.transportation.inbound else {
            return Some(vec![]);
        };
        if !role.is_last() {
            return Some(vec![]);
        }
        let cut = leg.depart.minutes().checked_sub(leg.mode.departure_buffer_minutes())?;
        let mut out = Vec::new();
        if role == DayRole::Last {
            let hotel = self.info.hotel.as_ref()?;
            let s = match last_end {
                Some(e) => e + TRANSFER,
                None => (9 * 60).min(cut.checked_sub(30)?),
            };
            if s + 30 > cut {
                return None;
            }
            out.push(Anchor {
                window: window(s, s + 30),
                activity: ActivityType::CheckOut,
                name: hotel.name.clone(),
                description: format!("Check out of {}.", hotel.name),
            });
        } else if last_end.is_some_and(|e| e > cut) {
            return None;
        }
        out.push(transport_anchor(leg));
        Some(out)
    }

    fn assemble(&self, head: &[Anchor], body: &[Anchor], tail: &[Anchor]) -> DayPlan {
        let anchors: Vec<&Anchor> = head.iter().chain(body).chain(tail).collect();
        let mut steps = Vec::new();
        for (i, a) in anchors.iter().enumerate() {
            if i > 0 {
                let prev = anchors[i - 1];
                let (pe, ns) = (prev.window.end().minutes(), a.window.start().minutes());
                if ns > pe {
                    let te = (pe + TRANSFER).min(ns);
                    steps.push(
                        Step::new(window(pe, te), ActivityType::LocalTransfer, format!("Transfer to {}", a.name))
                            .with_description("Taxi or metro between stops."),
                    );
                }
            }
            steps.push(Step::new(a.window, a.activity, a.name.clone()).with_description(a.description.clone()));
        }
        DayPlan {
            day_label: self.info.trip.day_label.clone(),
            daily_cost: Some(self.estimate_cost(&anchors)),
            steps,
        }
    }

    fn estimate_cost(&self, anchors: &[&Anchor]) -> f64 {
        let mut total = 0.0;
        for a in anchors {
            match a.activity {
                ActivityType::Transportation => {
                    total += [&self.info.transportation.outbound, &self.info.transportation.inbound]
                        .into_iter()
                        .flatten()
                        .find(|l| l.id == a.name)
                        .map_or(0.0, |l| l.price)
                }
                ActivityType::Sightseeing => {
                    total += self.attractions.iter().find(|x| x.name == a.name).map_or(0.0, |x| x.entrance_fee)
                }
                ActivityType::Meal => {
                    total += self.restaurants.iter().find(|x| x.name == a.name).map_or(0.0, |x| x.avg_price)
                }
                _ => {}
            }
        }
        if !self.info.trip.role.is_last() {
            total += self.info.hotel.as_ref().map_or(0.0, |h| h.price_per_night);
        }
        total
    }

    fn accept(&self, plan: &DayPlan) -> bool {
        let ctx = DayContext {
            sandbox: &self.sandbox,
            origin_city: &self.info.trip.origin_city,
            dest_city: &self.info.trip.dest_city,
            role: self.info.trip.role,
            prior_days: self.prior,
            hotel: self.info.hotel.as_ref().map(|h| h.name.as_str()),
        };
        validate_proposal(plan, &ctx, &self.rules).passed()
    }

    fn meal_start(&self, st: &State, earliest: u16, latest: u16) -> Option<u16> {
        let s = st.t_free.map_or(earliest, |t| t.max(earliest));
        let waited = st.t_free.map_or(0, |t| s - t);
        (s <= latest && waited <= MAX_WAIT && s + MEAL_MINUTES <= self.deadline).then_some(s)
    }

    fn lunch_start(&self, st: &State) -> Option<u16> {
        if st.lunch.is_some() || st.dinner.is_some() {
            return None;
        }
        self.meal_start(st, self.rules.lunch_start.start().minutes(), self.rules.lunch_start.end().minutes())
    }

    fn dinner_start(&self, st: &State) -> Option<u16> {
        if st.dinner.is_some() || (self.need_lunch && st.lunch.is_none()) {
            return None;
        }
        let mut earliest = self.rules.dinner_start.start().minutes();
        if let Some(l) = st.lunch {
            earliest = earliest.max(l + self.rules.min_meal_gap_minutes);
        }
        self.meal_start(st, earliest, self.rules.dinner_start.end().minutes())
    }

    fn meal_options(&self, st: &State, start: u16, lunch: bool) -> Vec<State> {
        let w = self.distance_weight();
        let mut ranked: Vec<(f64, usize)> = self
            .restaurants
            .iter()
            .enumerate()
            .filter(|(i, _)| !st.used_r.contains(i))
            .map(|(i, r)| (self.rest_bias[i] - w * haversine(st.at, point_of_r(r)), i))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        ranked
            .into_iter()
            .take(MEAL_BRANCHES)
            .map(|(_, i)| {
                let r = self.restaurants[i];
                let mut next = st.clone();
                let end = start + MEAL_MINUTES;
                next.body.push(Anchor {
                    window: window(start, end),
                    activity: ActivityType::Meal,
                    name: r.name.clone(),
                    description: format!(
                        "{} for {}, about ¥{} per person (cluster {}).",
                        if lunch { "Lunch" } else { "Dinner" },
                        r.cuisine.label(),
                        r.avg_price,
                        r.cluster_label.unwrap_or(-1)
                    ),
                });
                next.t_free = Some(end + TRANSFER);
                next.at = point_of_r(r);
                next.used_r.push(i);
                if lunch {
                    next.lunch = Some(start);
                } else {
                    next.dinner = Some(start);
                }
                next
            })
            .collect()
    }

    fn durations(&self, a: &Attraction) -> Vec<u16> {
        let d = a.recommended_duration;
        let lo = round_up(d.min_minutes(), 15);
        let hi = d.max_minutes().floor() as u16;
        let mut out: Vec<u16> = (0..4).map(|k| lo + 30 * k).filter(|m| *m <= hi && d.admits(*m)).collect();
        if out.is_empty() && d.admits(hi) {
            out.push(hi);
        }
        if self.style != Archetype::Pace && out.len() > 1 {
            out.swap(0, 1);
        }
        out
    }

    fn visit_options(&self, st: &State) -> Vec<State> {
        let visits = st.body.iter().filter(|a| a.activity == ActivityType::Sightseeing).count();
        if visits >= MAX_VISITS {
            return vec![];
        }
        let w = self.distance_weight();
        let mut ranked: Vec<(f64, usize)> = self
            .attractions
            .iter()
            .enumerate()
            .filter(|(i, _)| !st.used_a.contains(i))
            .map(|(i, a)| (self.attr_score[i] - 0.5 * w * haversine(st.at, point_of_a(a)), i))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let lunch_by = self.rules.lunch_start.end().minutes();
        let dinner_by = self.rules.dinner_start.end().minutes();
        let mut out = Vec::new();
        let mut feasible = 0;
        for (_, i) in ranked {
            if feasible >= VISIT_BRANCHES {
                break;
            }
            let a = self.attractions[i];
            let open = a.opening_hours.start().minutes();
            let start = match st.t_free {
                Some(t) => t.max(open),
                None => DAY_OPEN.max(open),
            };
            if st.t_free.is_some_and(|t| start - t > MAX_WAIT) {
                continue;
            }
            let mut any = false;
            for d in self.durations(a) {
                let end = start + d;
                if end > self.deadline || end >= 24 * 60 {
                    continue;
                }
                let w = window(start, end);
                if !a.admits_visit(&w) {
                    continue;
                }
                let free = end + TRANSFER;
                if self.need_lunch && st.lunch.is_none() && free > lunch_by {
                    continue;
                }
                if self.need_dinner && st.dinner.is_none() && free > dinner_by {
                    continue;
                }
                any = true;
                let mut next = st.clone();
                next.body.push(Anchor {
                    window: w,
                    activity: ActivityType::Sightseeing,
                    name: a.name.clone(),
                    description: describe(a),
                });
                next.t_free = Some(free);
                next.at = point_of_a(a);
                next.used_a.push(i);
                out.push(next);
            }
            if any {
                feasible += 1;
            }
        }
        out
    }

    fn done(&self, st: &State) -> bool {
        (!self.need_lunch || st.lunch.is_some()) && (!self.need_dinner || st.dinner.is_some())
    }

    fn search(&mut self, st: State, head: &[Anchor]) -> Option<DayPlan> {
        self.nodes += 1;
        if self.nodes > NODE_LIMIT {
            return None;
        }
        if let Some(t) = st.t_free {
            if self.need_lunch && st.lunch.is_none() && t > self.rules.lunch_start.end().minutes() + MAX_WAIT {
                return None;
            }
        }
        let finish = |p: &Self, st: &State| -> Option<DayPlan> {
            if !p.done(st) {
                return None;
            }
            let last_end = st.body.last().map(|a| a.window.end().minutes());
            let tail = p.tail(last_end)?;
            let plan = p.assemble(head, &st.body, &tail);
            p.accept(&plan).then_some(plan)
        };
        if st.dinner.is_some() {
            return finish(self, &st);
        }
        let mut children = Vec::new();
        if let Some(s) = self.dinner_start(&st) {
            children.extend(self.meal_options(&st, s, false));
        }
        let lunch = self.lunch_start(&st);
        let lunch_now = lunch.filter(|s| st.t_free.is_some_and(|t| *s == t));
        if let Some(s) = lunch_now {
            children.extend(self.meal_options(&st, s, true));
        }
        children.extend(self.visit_options(&st));
        if let Some(s) = lunch.filter(|_| lunch_now.is_none()) {
            children.extend(self.meal_options(&st, s, true));
        }
        for child in children {
            if let Some(p) = self.search(child, head) {
                return Some(p);
            }
        }
        finish(self, &st)
    }

    fn plan(&mut self) -> Option<DayPlan> {
        let (head, t0, at) = self.head();
        self.deadline = self.body_deadline();
        let role = self.info.trip.role;
        let start = t0.unwrap_or(DAY_OPEN);
        let fits = |lo: u16, hi: u16, dl: u16| {
            let s = start.max(lo);
            s <= hi && s + MEAL_MINUTES <= dl
        };
        let (ls, ds) = (self.rules.lunch_start, self.rules.dinner_start);
        let lunch_fits = fits(ls.start().minutes(), ls.end().minutes(), self.deadline);
        let dinner_fits = fits(ds.start().minutes(), ds.end().minutes(), self.deadline);
        let attempts: Vec<(bool, bool)> = if role == DayRole::Middle {
            vec![(true, true)]
        } else {
            let mut v = vec![(lunch_fits, dinner_fits), (lunch_fits, false), (false, dinner_fits), (false, false)];
            v.dedup();
            v
        };
        for (need_lunch, need_dinner) in attempts {
            self.need_lunch = need_lunch;
            self.need_dinner = need_dinner;
            self.nodes = 0;
            let st = State {
                body: vec![],
                t_free: t0,
                at,
                used_a: vec![],
                used_r: vec![],
                lunch: None,
                dinner: None,
            };
            if let Some(p) = self.search(st, &head) {
                return Some(p);
            }
        }
        None
    }

    /// Structural steps only; returned when no valid day exists.
    fn bare(&self) -> DayPlan {
        let (head, _, _) = self.head();
        let tail = self.tail(None).unwrap_or_default();
        self.assemble(&head, &[], &tail)
    }
}

fn window(start: u16, end: u16) -> TimeWindow {
    TimeWindow::new(
        ClockTime::from_minutes(start).expect("start within the day"),
        ClockTime::from_minutes(end).expect("end within the day"),
    )
    .expect("ordered window")
}

fn transport_anchor(leg: &TransportLeg) -> Anchor {
    Anchor {
        window: TimeWindow::new(leg.depart, leg.arrive).expect("legs are same-day"),
        activity: ActivityType::Transportation,
        name: leg.id.clone(),
        description: format!(
            "Travel from {} to {} via {} {}.",
            leg.origin_city, leg.dest_city, leg.mode, leg.id
        ),
    }
}

fn describe(a: &Attraction) -> String {
    let feature: String = a.feature_text.chars().take(100).collect();
    let cluster = a.cluster_label.unwrap_or(-1);
    if feature.is_empty() {
        format!("Visit {} (cluster {cluster}).", a.name)
    } else {
        format!("{feature} (cluster {cluster}).")
    }
}

/// Plan one day for `agent_id` with the offline scheduler.
pub fn plan_day_offline(
    info: &GivenInfo,
    prior: &[DayPlan],
    agent_id: &str,
    favored: &[&DayPlan],
    seed: u64,
) -> Option<DayPlan> {
    let favored: HashSet<String> = favored
        .iter()
        .flat_map(|d| d.steps.iter())
        .map(|s| normalize_name(&s.name))
        .collect();
    let mut p = Planner::new(info, prior, Archetype::of_agent(agent_id), &favored, seed, agent_id)?;
    Some(p.plan().unwrap_or_else(|| p.bare()))
}

fn day_plan_reply(prompt: &str, seed: u64) -> Option<String> {
    let profile: AgentSpec =
        serde_json::from_str(between(prompt, "with the following profile: ", Some("\nYour task is"))?).ok()?;
    let info: GivenInfo =
        serde_json::from_str(between(prompt, "## GIVEN_INFORMATION\n", Some("\n\n## Previous Days Plan\n"))?).ok()?;
    let prior: Vec<DayPlan> = serde_json::from_str(between(
        prompt,
        "\n\n## Previous Days Plan\n",
        Some("\n\n## USER QUERY (Must align with it.)\n"),
    )?)
    .ok()?;
    let skeleton: Option<DayPlan> = between(
        prompt,
        "## BASE ROUTE SKELETON (refine it toward your objectives; keep it valid)\n",
        None,
    )
    .and_then(|s| parse_json_document(s).ok());
    let favored: Vec<&DayPlan> = skeleton.iter().collect();
    let day = plan_day_offline(&info, &prior, &profile.agent_id, &favored, seed)?;
    let proposal = Proposal {
        agent_id: profile.agent_id,
        day,
    };
    Some(serde_json::to_string_pretty(&proposal).expect("proposal serializes"))
}

fn repair_reply(prompt: &str, seed: u64) -> Option<String> {
    let draft: DayPlan = parse_json_document(between(prompt, "\nINITIAL_PLAN: ", Some("\nGIVEN_INFO: "))?).ok()?;
    let info: GivenInfo =
        serde_json::from_str(between(prompt, "\nGIVEN_INFO: ", Some("\nPrevious days' plan: "))?).ok()?;
    let prior: Vec<DayPlan> = serde_json::from_str(between(prompt, "\nPrevious days' plan: ", None)?).ok()?;
    let day = plan_day_offline(&info, &prior, "repair_route", &[&draft], seed)?;
    Some(serde_json::to_string_pretty(&day).expect("day serializes"))
}

fn arbitration_reply(prompt: &str) -> Option<String> {
    let proposals: Vec<Proposal> =
        serde_json::from_str(between(prompt, "Proposals (JSON): ", Some("\nUser Query: "))?).ok()?;
    let top = proposals.into_iter().next()?;
    Some(serde_json::to_string_pretty(&top.day).expect("day serializes"))
}

/// How well a plan serves an archetype, from the plan text alone.
fn fit_metric(style: Archetype, day: &DayPlan, query: &str) -> f64 {
    let sights: Vec<&Step> = day.steps_of(ActivityType::Sightseeing).collect();
    let meals: Vec<&Step> = day.steps_of(ActivityType::Meal).collect();
    let text = |steps: &[&Step]| {
        steps
            .iter()
            .map(|s| format!("{} {}", s.name, s.description))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let minutes = |steps: &[&Step]| steps.iter().map(|s| f64::from(s.window.duration_minutes())).sum::<f64>();
    let transfer: Vec<&Step> = day.steps_of(ActivityType::LocalTransfer).collect();
    let clusters: HashSet<&str> = day
        .steps
        .iter()
        .filter_map(|s| s.description.rsplit_once("(cluster ").map(|(_, c)| c))
        .collect();
    let q = query.to_lowercase();
    match style {
        Archetype::Base => sights.len() as f64 + 0.5 * meals.len() as f64,
        Archetype::Cultural => keyword_hits(&text(&sights), CULTURE_WORDS) + minutes(&sights) / 120.0,
        Archetype::Nature => keyword_hits(&text(&sights), NATURE_WORDS) + minutes(&sights) / 180.0,
        Archetype::Budget => -day.daily_cost.unwrap_or(0.0) / 100.0,
        Archetype::Route => -(clusters.len() as f64) - minutes(&transfer) / 60.0,
        Archetype::Foodie => {
            let matched = meals
                .iter()
                .filter(|m| {
                    m.description
                        .split(" for ")
                        .nth(1)
                        .and_then(|rest| rest.split(',').next())
                        .is_some_and(|c| q.contains(&c.to_lowercase()))
                })
                .count();
            meals.len() as f64 + 2.0 * matched as f64
        }
        Archetype::Pace => -((minutes(&sights) + minutes(&meals)) / 60.0 - 7.5).abs(),
    }
}

fn review_reply(prompt: &str, seed: u64) -> Option<String> {
    let profile: AgentSpec =
        serde_json::from_str(between(prompt, "with this profile: ", Some("\n\nTask:"))?).ok()?;
    let query = between(prompt, "Must align with user query: ", Some("\n\n--- ALL COMPETING PLANS ---"))?;
    let plans: Vec<Proposal> = serde_json::from_str(between(prompt, "--- ALL COMPETING PLANS ---\n", None)?).ok()?;
    let style = Archetype::of_agent(&profile.agent_id);
    let metrics: Vec<f64> = plans.iter().map(|p| fit_metric(style, &p.day, query)).collect();
    let best = metrics.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let worst = metrics.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = serde_json::Map::new();
    for (p, m) in plans.iter().zip(&metrics) {
        let base = if best > worst {
            7.0 - 10.0 * (best - m) / (best - worst)
        } else {
            5.0
        };
        let jitter = (hash_u64(seed, &[&profile.agent_id, &p.agent_id, &p.day.content_key()]) % 3) as f64 - 1.0;
        let score = (base.round() + jitter).clamp(-10.0, 10.0);
        out.insert(
            p.agent_id.clone(),
            serde_json::json!({
                "score": score as i64,
                "critique": format!("Fit {m:.1} against {} priorities.", profile.agent_id),
            }),
        );
    }
    Some(serde_json::to_string_pretty(&out).expect("review serializes"))
}

fn suggestion_reply(prompt: &str) -> String {
    let query = between(prompt, "Traveler query: ", Some("\nKnown attractions: ")).unwrap_or("");
    let names = between(prompt, "\nKnown attractions: ", None).unwrap_or("");
    let words: HashSet<String> = query
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.len() >= 4)
        .map(|w| w.to_lowercase().trim_end_matches('s').to_string())
        .collect();
    let mut scored: Vec<(usize, &str)> = names
        .split("; ")
        .filter(|n| !n.trim().is_empty())
        .map(|n| {
            let hits = n
                .split(|c: char| !c.is_alphanumeric())
                .filter(|w| words.contains(w.to_lowercase().trim_end_matches('s')))
                .count();
            (hits, n.trim())
        })
        .filter(|(h, _)| *h > 0)
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
    let picks: Vec<&str> = scored.into_iter().take(5).map(|(_, n)| n).collect();
    serde_json::to_string(&picks).expect("names serialize")
}

fn judge_reply(prompt: &str, seed: u64) -> String {
    let a = 1 + hash_u64(seed, &["A", prompt]) % 5;
    let b = 1 + hash_u64(seed, &["B", prompt]) % 5;
    format!(
        "#### Comparative Analysis:\nBoth plans were compared on how closely they follow the stated interests.\n\
         #### Scoring Results:\n{{\"Personalization Evaluation\": {{\"Scores\": {{\"Plan A\": {a}, \"Plan B\": {b}}}}}}}"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::parse_judge_reply;

    #[test]
    fn recognizes_unknown_prompt() {
        let r = respond(&ChatRequest::plain("s", "Hello there"), 1);
        assert!(r.contains("cannot help"));
    }

    #[test]
    fn judge_reply_parses() {
        let v = parse_judge_reply(&judge_reply("x", 3)).unwrap();
        assert!((1..=5).contains(&v.score_a) && (1..=5).contains(&v.score_b));
    }

    #[test]
    fn extraction_round_trips() {
        let q = "I am looking for a 3-day trip from Wuhan to Xi'an, departing on Friday early morning and returning on Sunday evening, with a budget of ¥3500. I'm interested in history and museums.";
        let reply = respond(&ChatRequest::structured("s", crate::prompts::extraction_prompt(q)), 0);
        let d = crate::profile::parse_extraction_reply(&reply).unwrap();
        assert_eq!(d, extract_rule_based(q).unwrap());
    }

    #[test]
    fn team_size_in_bounds() {
        for seed in 0..20 {
            let reply = agents_reply(&crate::prompts::agents_prompt("a query"), seed);
            let team: Vec<AgentSpec> = serde_json::from_str(&reply).unwrap();
            assert!((4..=6).contains(&team.len()));
        }
    }

    #[test]
    fn suggestions_follow_query_words() {
        let p = crate::prompts::recall_prompt("Xi'an", "I love museums and pagodas", "Shaanxi History Museum; Big Wild Goose Pagoda; Bell Tower");
        let names: Vec<String> = serde_json::from_str(&suggestion_reply(&p)).unwrap();
        assert_eq!(names, vec!["Big Wild Goose Pagoda", "Shaanxi History Museum"]);
    }
}
