//! Hard-constraint checks: the per-day schedule rules used to screen
//! proposals, the six binary indicators aggregated into eta, and cost
//! accounting.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{ClockTime, TimeWindow};
use crate::itinerary::{ActivityType, DayPlan, DayRole, Itinerary, Step};
use crate::profile::ExplicitDemands;
use crate::sandbox::{normalize_name, Attraction, EntityKind, Hotel, Sandbox, TransportLeg};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("cannot price unresolved {kind} {name:?}")]
    UnresolvedEntity { kind: EntityKind, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Sequencing,
    Transfer,
    Idle,
    EndOfDay,
    LunchWindow,
    DinnerWindow,
    MealSpacing,
    NoBreakfast,
    Repeats,
    DepartureBuffer,
    DayStructure,
    SourceIntegrity,
    VisitDuration,
    OpeningHours,
    ClusterLocality,
}

impl Rule {
    pub const ALL: [Rule; 15] = [
        Rule::Sequencing,
        Rule::Transfer,
        Rule::Idle,
        Rule::EndOfDay,
        Rule::LunchWindow,
        Rule::DinnerWindow,
        Rule::MealSpacing,
        Rule::NoBreakfast,
        Rule::Repeats,
        Rule::DepartureBuffer,
        Rule::DayStructure,
        Rule::SourceIntegrity,
        Rule::VisitDuration,
        Rule::OpeningHours,
        Rule::ClusterLocality,
    ];

    /// Advisory rules annotate a report but never fail it.
    pub fn is_advisory(self) -> bool {
        matches!(self, Rule::ClusterLocality)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Sequencing => "sequencing",
            Rule::Transfer => "transfer",
            Rule::Idle => "idle",
            Rule::EndOfDay => "end_of_day",
            Rule::LunchWindow => "lunch_window",
            Rule::DinnerWindow => "dinner_window",
            Rule::MealSpacing => "meal_spacing",
            Rule::NoBreakfast => "no_breakfast",
            Rule::Repeats => "repeats",
            Rule::DepartureBuffer => "departure_buffer",
            Rule::DayStructure => "day_structure",
            Rule::SourceIntegrity => "source_integrity",
            Rule::VisitDuration => "visit_duration",
            Rule::OpeningHours => "opening_hours",
            Rule::ClusterLocality => "cluster_locality",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds of the schedule rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub min_transfer_minutes: u16,
    pub max_idle_minutes: u16,
    pub latest_end: ClockTime,
    pub lunch_start: TimeWindow,
    pub dinner_start: TimeWindow,
    pub min_meal_gap_minutes: u16,
    /// Meals starting before this time count as breakfast.
    pub breakfast_cutoff: ClockTime,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            min_transfer_minutes: 15,
            max_idle_minutes: 60,
            latest_end: ClockTime::hm(22, 30),
            lunch_start: TimeWindow::hm((11, 0), (14, 0)),
            dinner_start: TimeWindow::hm((17, 0), (20, 0)),
            min_meal_gap_minutes: 300,
            breakfast_cutoff: ClockTime::hm(11, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub rule: Rule,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleReport {
    pub day_label: String,
    pub role: DayRole,
    pub outcomes: Vec<RuleOutcome>,
}

impl RuleReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed || o.rule.is_advisory())
    }

    pub fn failed_rules(&self) -> Vec<Rule> {
        self.outcomes
            .iter()
            .filter(|o| !o.passed && !o.rule.is_advisory())
            .map(|o| o.rule)
            .collect()
    }

    pub fn outcome(&self, rule: Rule) -> &RuleOutcome {
        self.outcomes
            .iter()
            .find(|o| o.rule == rule)
            .expect("every rule has an outcome")
    }

    /// One line per failed rule detail, for repair prompts and logs.
    pub fn violation_lines(&self) -> Vec<String> {
        self.outcomes
            .iter()
            .filter(|o| !o.passed && !o.rule.is_advisory())
            .flat_map(|o| o.details.iter().map(move |d| format!("[{}] {d}", o.rule)))
            .collect()
    }
}

/// What a day is validated against.
#[derive(Debug, Clone, Copy)]
pub struct DayContext<'a> {
    pub sandbox: &'a Sandbox,
    pub origin_city: &'a str,
    pub dest_city: &'a str,
    pub role: DayRole,
    pub prior_days: &'a [DayPlan],
    /// Hotel the trip stays at; when absent the earlier check-in decides.
    pub hotel: Option<&'a str>,
}

impl<'a> DayContext<'a> {
    pub fn for_demands(
        sandbox: &'a Sandbox,
        demands: &'a ExplicitDemands,
        role: DayRole,
        prior_days: &'a [DayPlan],
        hotel: Option<&'a str>,
    ) -> Self {
        DayContext {
            sandbox,
            origin_city: &demands.origin_city,
            dest_city: &demands.dest_city,
            role,
            prior_days,
            hotel,
        }
    }
}

/// A step bound to the sandbox entity it names, when it resolves.
#[derive(Debug, Clone, Copy)]
enum Bound<'a> {
    Transport(&'a TransportLeg),
    Hotel,
    Attraction(&'a Attraction),
    Restaurant,
    Transfer,
    Unresolved,
}

fn bind<'a>(sandbox: &'a Sandbox, city: &str, step: &Step) -> Bound<'a> {
    let found = match step.activity {
        ActivityType::Transportation => sandbox.resolve_transport(&step.name).map(Bound::Transport),
        ActivityType::CheckIn | ActivityType::CheckOut => sandbox.resolve_hotel(city, &step.name).map(|_| Bound::Hotel),
        ActivityType::Sightseeing => sandbox.resolve_attraction(city, &step.name).map(Bound::Attraction),
        ActivityType::Meal => sandbox.resolve_restaurant(city, &step.name).map(|_| Bound::Restaurant),
        ActivityType::LocalTransfer => Some(Bound::Transfer),
    };
    found.unwrap_or(Bound::Unresolved)
}

/// Identity used for repeat detection: sandbox id when resolvable.
fn visit_key(sandbox: &Sandbox, city: &str, step: &Step) -> Option<String> {
    match step.activity {
        ActivityType::Sightseeing => Some(
            sandbox
                .resolve_attraction(city, &step.name)
                .map(|a| format!("attraction:{}", a.id))
                .unwrap_or_else(|| format!("attraction-name:{}", normalize_name(&step.name))),
        ),
        ActivityType::Meal => Some(
            sandbox
                .resolve_restaurant(city, &step.name)
                .map(|r| format!("restaurant:{}", r.id))
                .unwrap_or_else(|| format!("restaurant-name:{}", normalize_name(&step.name))),
        ),
        _ => None,
    }
}

/// Start time at which a step counts as a meal within `window`, if it does.
/// Restaurant meals count when they start inside the window; a visit to a
/// food district counts when it spans any instant of the window.
fn meal_start_in(step: &Step, bound: Bound<'_>, window: &TimeWindow) -> Option<ClockTime> {
    match (step.activity, bound) {
        (ActivityType::Meal, _) if window.contains(step.window.start()) => Some(step.window.start()),
        (ActivityType::Sightseeing, Bound::Attraction(a))
            if a.serves_food && step.window.start() <= window.end() && step.window.end() >= window.start() =>
        {
            Some(step.window.start().max(window.start()))
        }
        _ => None,
    }
}

struct Checker {
    outcomes: Vec<RuleOutcome>,
}

impl Checker {
    fn record(&mut self, rule: Rule, details: Vec<String>) {
        self.outcomes.push(RuleOutcome {
            rule,
            passed: details.is_empty(),
            details,
        });
    }
}

/// Check one day's plan against every schedule rule.
pub fn validate_proposal(day: &DayPlan, ctx: &DayContext<'_>, cfg: &RuleConfig) -> RuleReport {
    let steps = &day.steps;
    let bound: Vec<Bound<'_>> = steps.iter().map(|s| bind(ctx.sandbox, ctx.dest_city, s)).collect();
    let mut c = Checker { outcomes: Vec::new() };

    let mut v = Vec::new();
    for (a, b) in steps.iter().zip(steps.iter().skip(1)) {
        if b.window.start() < a.window.end() {
            v.push(format!("{:?} ({}) overlaps or precedes {:?} ({})", b.name, b.window, a.name, a.window));
        }
    }
    c.record(Rule::Sequencing, v);

    let anchors: Vec<&Step> = steps.iter().filter(|s| s.activity != ActivityType::LocalTransfer).collect();
    let mut v = Vec::new();
    for (a, b) in anchors.iter().zip(anchors.iter().skip(1)) {
        let gap = b.window.start().since(a.window.end());
        if (0..i32::from(cfg.min_transfer_minutes)).contains(&gap) {
            v.push(format!(
                "only {gap} min between {:?} and {:?}; at least {} min needed",
                a.name, b.name, cfg.min_transfer_minutes
            ));
        }
    }
    c.record(Rule::Transfer, v);

    let mut v = Vec::new();
    for (a, b) in steps.iter().zip(steps.iter().skip(1)) {
        let gap = b.window.start().since(a.window.end());
        if gap > i32::from(cfg.max_idle_minutes) && b.activity != ActivityType::Transportation {
            v.push(format!("{gap} min idle between {:?} and {:?}", a.name, b.name));
        }
    }
    c.record(Rule::Idle, v);

    let v = steps
        .iter()
        .filter(|s| s.activity != ActivityType::Transportation && s.window.end() > cfg.latest_end)
        .map(|s| format!("{:?} ends at {}, after {}", s.name, s.window.end(), cfg.latest_end))
        .collect();
    c.record(Rule::EndOfDay, v);

    let first_meal_in = |w: &TimeWindow| {
        steps
            .iter()
            .zip(&bound)
            .find_map(|(s, b)| meal_start_in(s, *b, w))
    };
    let lunch = first_meal_in(&cfg.lunch_start);
    let dinner = first_meal_in(&cfg.dinner_start);
    let middle = ctx.role == DayRole::Middle;
    c.record(
        Rule::LunchWindow,
        if middle && lunch.is_none() {
            vec![format!("no lunch starting within {}", cfg.lunch_start)]
        } else {
            vec![]
        },
    );
    c.record(
        Rule::DinnerWindow,
        if middle && dinner.is_none() {
            vec![format!("no dinner starting within {}", cfg.dinner_start)]
        } else {
            vec![]
        },
    );
    let mut v = Vec::new();
    if let (Some(l), Some(d)) = (lunch, dinner) {
        let gap = d.since(l);
        if gap < i32::from(cfg.min_meal_gap_minutes) {
            v.push(format!(
                "lunch at {l} and dinner at {d} are {gap} min apart; at least {} min needed",
                cfg.min_meal_gap_minutes
            ));
        }
    }
    c.record(Rule::MealSpacing, v);

    let v = steps
        .iter()
        .filter(|s| s.activity == ActivityType::Meal && s.window.start() < cfg.breakfast_cutoff)
        .map(|s| format!("meal {:?} at {} is a breakfast", s.name, s.window.start()))
        .collect();
    c.record(Rule::NoBreakfast, v);

    let mut earlier: HashSet<String> = ctx
        .prior_days
        .iter()
        .flat_map(|d| d.steps.iter())
        .filter_map(|s| visit_key(ctx.sandbox, ctx.dest_city, s))
        .collect();
    let mut v = Vec::new();
    for s in steps {
        if let Some(k) = visit_key(ctx.sandbox, ctx.dest_city, s) {
            if !earlier.insert(k) {
                v.push(format!("{:?} is visited more than once", s.name));
            }
        }
    }
    c.record(Rule::Repeats, v);

    let mut v = Vec::new();
    for (t, b) in steps.iter().zip(&bound) {
        let Bound::Transport(leg) = b else { continue };
        let buffer = leg.mode.departure_buffer_minutes();
        for s in steps {
            let exempt = matches!(s.activity, ActivityType::Transportation | ActivityType::LocalTransfer);
            if !exempt && s.window.start() < t.window.start() && t.window.start().since(s.window.end()) < i32::from(buffer) {
                v.push(format!(
                    "{:?} ends at {}, within {buffer} min of {} {} departing {}",
                    s.name,
                    s.window.end(),
                    leg.mode,
                    leg.id,
                    t.window.start()
                ));
            }
        }
    }
    c.record(Rule::DepartureBuffer, v);

    c.record(Rule::DayStructure, structure_violations(steps, &bound, ctx));

    let v = steps
        .iter()
        .zip(&bound)
        .filter(|(_, b)| matches!(b, Bound::Unresolved))
        .map(|(s, _)| format!("{} {:?} is not in the catalog for {}", s.activity, s.name, ctx.dest_city))
        .collect();
    c.record(Rule::SourceIntegrity, v);

    let mut dur = Vec::new();
    let mut hours = Vec::new();
    for (s, b) in steps.iter().zip(&bound) {
        if let Bound::Attraction(a) = b {
            if !a.recommended_duration.admits(s.window.duration_minutes()) {
                dur.push(format!(
                    "{:?} visited {} min; recommended {}-{} h",
                    s.name,
                    s.window.duration_minutes(),
                    a.recommended_duration.min_hours,
                    a.recommended_duration.max_hours
                ));
            }
            if !a.admits_visit(&s.window) {
                hours.push(match a.last_admission {
                    Some(cut) => format!("{:?} at {} outside {} (last admission {cut})", s.name, s.window, a.opening_hours),
                    None => format!("{:?} at {} outside {}", s.name, s.window, a.opening_hours),
                });
            }
        }
    }
    c.record(Rule::VisitDuration, dur);
    c.record(Rule::OpeningHours, hours);

    let labels: HashSet<i32> = bound
        .iter()
        .filter_map(|b| match b {
            Bound::Attraction(a) => a.cluster_label.filter(|l| *l >= 0),
            _ => None,
        })
        .collect();
    let note = if labels.len() > 1 {
        let mut l: Vec<i32> = labels.into_iter().collect();
        l.sort_unstable();
        vec![format!("sightseeing spans clusters {l:?}")]
    } else {
        vec![]
    };
    c.outcomes.push(RuleOutcome {
        rule: Rule::ClusterLocality,
        passed: true,
        details: note,
    });

    RuleReport {
        day_label: day.day_label.clone(),
        role: ctx.role,
        outcomes: c.outcomes,
    }
}

fn structure_violations(steps: &[Step], bound: &[Bound<'_>], ctx: &DayContext<'_>) -> Vec<String> {
    let mut v = Vec::new();
    let kinds: Vec<ActivityType> = steps
        .iter()
        .map(|s| s.activity)
        .filter(|k| *k != ActivityType::LocalTransfer)
        .collect();
    let count = |k: ActivityType| kinds.iter().filter(|x| **x == k).count();
    let (transports, check_ins, check_outs) = match ctx.role {
        DayRole::First => (1, 1, 0),
        DayRole::Middle => (0, 0, 0),
        DayRole::Last => (1, 0, 1),
        DayRole::Single => (2, 0, 0),
    };
    for (kind, want) in [
        (ActivityType::Transportation, transports),
        (ActivityType::CheckIn, check_ins),
        (ActivityType::CheckOut, check_outs),
    ] {
        let got = count(kind);
        if got != want {
            v.push(format!("{:?} day has {got} {kind} step(s); expected {want}", ctx.role));
        }
    }
    if ctx.role.is_first() {
        if kinds.first() != Some(&ActivityType::Transportation) {
            v.push("day must begin with the outbound transportation".into());
        }
        if ctx.role == DayRole::First && kinds.get(1) != Some(&ActivityType::CheckIn) {
            v.push("check-in must follow arrival".into());
        }
    }
    if ctx.role.is_last() {
        if kinds.last() != Some(&ActivityType::Transportation) {
            v.push("day must end with the return transportation".into());
        }
        if ctx.role == DayRole::Last && kinds.len() >= 2 && kinds[kinds.len() - 2] != ActivityType::CheckOut {
            v.push("check-out must precede the return transportation".into());
        }
    }

    let legs: Vec<&TransportLeg> = bound
        .iter()
        .filter_map(|b| match b {
            Bound::Transport(l) => Some(*l),
            _ => None,
        })
        .collect();
    let same = |a: &str, b: &str| normalize_name(a) == normalize_name(b);
    if ctx.role.is_first() {
        if let Some(l) = legs.first() {
            if !(same(&l.origin_city, ctx.origin_city) && same(&l.dest_city, ctx.dest_city)) {
                v.push(format!("{} runs {} to {}, not the outbound route", l.id, l.origin_city, l.dest_city));
            }
        }
    }
    if ctx.role.is_last() {
        if let Some(l) = legs.last().filter(|_| ctx.role == DayRole::Last || legs.len() == 2) {
            if !(same(&l.origin_city, ctx.dest_city) && same(&l.dest_city, ctx.origin_city)) {
                v.push(format!("{} runs {} to {}, not the return route", l.id, l.origin_city, l.dest_city));
            }
        }
    }
    for (s, b) in steps.iter().zip(bound) {
        if let Bound::Transport(leg) = b {
            if s.window.start() != leg.depart || s.window.end() != leg.arrive {
                v.push(format!(
                    "{} is scheduled {} but runs {}-{}",
                    leg.id, s.window, leg.depart, leg.arrive
                ));
            }
        }
    }

    if ctx.role == DayRole::Last {
        let stay = ctx.hotel.map(str::to_string).or_else(|| {
            ctx.prior_days
                .iter()
                .flat_map(|d| d.steps.iter())
                .find(|s| s.activity == ActivityType::CheckIn)
                .map(|s| s.name.clone())
        });
        if let (Some(stay), Some(out)) = (stay, steps.iter().find(|s| s.activity == ActivityType::CheckOut)) {
            if !same(&stay, &out.name) {
                v.push(format!("checks out of {:?} but stays at {stay:?}", out.name));
            }
        }
    }
    if ctx.role == DayRole::First {
        if let (Some(h), Some(s)) = (ctx.hotel, steps.iter().find(|s| s.activity == ActivityType::CheckIn)) {
            if !same(h, &s.name) {
                v.push(format!("checks in to {:?} but the trip hotel is {h:?}", s.name));
            }
        }
    }
    v
}

/// Validate every day of an itinerary in order, each against its predecessors.
pub fn validate_itinerary(
    it: &Itinerary,
    sandbox: &Sandbox,
    cfg: &RuleConfig,
) -> Vec<RuleReport> {
    let n = it.days.len();
    (0..n)
        .map(|i| {
            let ctx = DayContext {
                sandbox,
                origin_city: &it.origin_city,
                dest_city: &it.dest_city,
                role: DayRole::of(i + 1, n),
                prior_days: &it.days[..i],
                hotel: it.hotel.as_deref(),
            };
            validate_proposal(&it.days[i], &ctx, cfg)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub entity: String,
    pub detail: String,
}

impl Violation {
    fn new(rule: &str, entity: impl Into<String>, detail: impl Into<String>) -> Self {
        Violation {
            rule: rule.into(),
            entity: entity.into(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardScore {
    pub i_sandbox: u8,
    pub i_comp: u8,
    pub i_rest: u8,
    pub i_attr: u8,
    pub i_dur: u8,
    pub i_time: u8,
    pub s_feas: f64,
    pub s_rat: f64,
    pub eta: f64,
    pub r_hard: f64,
    pub violations: Vec<Violation>,
}

impl HardScore {
    pub fn from_indicators(ind: [bool; 6], violations: Vec<Violation>) -> Self {
        let [sb, comp, rest, attr, dur, time] = ind.map(u8::from);
        let s_feas = f64::from(sb + comp) / 2.0;
        let s_rat = f64::from(rest + attr + dur + time) / 4.0;
        HardScore {
            i_sandbox: sb,
            i_comp: comp,
            i_rest: rest,
            i_attr: attr,
            i_dur: dur,
            i_time: time,
            s_feas,
            s_rat,
            eta: (s_feas + s_rat) / 2.0,
            r_hard: s_feas + s_rat,
            violations,
        }
    }
}

/// Every named hotel, transport, attraction and restaurant must resolve.
pub fn sandbox_violations(it: &Itinerary, sandbox: &Sandbox) -> Vec<Violation> {
    let mut v = Vec::new();
    if let Some(h) = &it.hotel {
        if sandbox.resolve_hotel(&it.dest_city, h).is_none() {
            v.push(Violation::new("sandbox", h, "hotel not in catalog"));
        }
    }
    if let Some(t) = &it.transport {
        for r in [&t.outbound, &t.inbound].into_iter().flatten() {
            if sandbox.resolve_transport(&r.id).is_none() {
                v.push(Violation::new("sandbox", &r.id, "transport not in catalog"));
            }
        }
    }
    for d in &it.days {
        for s in &d.steps {
            if let Bound::Unresolved = bind(sandbox, &it.dest_city, s) {
                v.push(Violation::new("sandbox", &s.name, format!("{} not in catalog ({})", s.activity, d.day_label)));
            }
        }
    }
    v
}

/// Presence of the fields a complete plan must state.
pub fn completeness_violations(it: &Itinerary, demands: &ExplicitDemands) -> Vec<Violation> {
    let mut v = Vec::new();
    if it.days.len() != demands.duration_days as usize {
        v.push(Violation::new(
            "completeness",
            "days",
            format!("{} days planned for a {}-day trip", it.days.len(), demands.duration_days),
        ));
    }
    for d in &it.days {
        if d.daily_cost.is_none_or(|c| !c.is_finite() || c < 0.0) {
            v.push(Violation::new("completeness", &d.day_label, "daily cost missing"));
        }
        if d.steps.is_empty() {
            v.push(Violation::new("completeness", &d.day_label, "no steps"));
        }
        for s in &d.steps {
            if s.name.trim().is_empty() {
                v.push(Violation::new("completeness", &d.day_label, format!("{} step at {} unnamed", s.activity, s.window)));
            }
        }
    }
    let legs = it.transport.as_ref();
    for (what, r) in [
        ("outbound", legs.and_then(|t| t.outbound.as_ref())),
        ("return", legs.and_then(|t| t.inbound.as_ref())),
    ] {
        match r {
            None => v.push(Violation::new("completeness", what, "transport missing")),
            Some(r) if r.mode.is_none() => v.push(Violation::new("completeness", &r.id, format!("{what} mode missing"))),
            Some(_) => {}
        }
    }
    if demands.duration_days >= 2 && it.hotel.as_deref().is_none_or(|h| h.trim().is_empty()) {
        v.push(Violation::new("completeness", "hotel", "hotel missing"));
    }
    v
}

/// The six indicators and their aggregates.
pub fn hard_score(it: &Itinerary, sandbox: &Sandbox, demands: &ExplicitDemands) -> HardScore {
    let mut violations = sandbox_violations(it, sandbox);
    let i_sandbox = violations.is_empty();
    let comp = completeness_violations(it, demands);
    let i_comp = comp.is_empty();
    violations.extend(comp);

    let mut seen_rest = HashSet::new();
    let mut seen_attr = HashSet::new();
    let (mut i_rest, mut i_attr, mut i_dur, mut i_time) = (true, true, true, true);
    for d in &it.days {
        for s in &d.steps {
            match s.activity {
                ActivityType::Meal => {
                    if !seen_rest.insert(visit_key(sandbox, &it.dest_city, s)) {
                        i_rest = false;
                        violations.push(Violation::new("restaurant_repeat", &s.name, format!("repeated in {}", d.day_label)));
                    }
                }
                ActivityType::Sightseeing => {
                    if !seen_attr.insert(visit_key(sandbox, &it.dest_city, s)) {
                        i_attr = false;
                        violations.push(Violation::new("attraction_repeat", &s.name, format!("repeated in {}", d.day_label)));
                    }
                    match sandbox.resolve_attraction(&it.dest_city, &s.name) {
                        Some(a) => {
                            if !a.recommended_duration.admits(s.window.duration_minutes()) {
                                i_dur = false;
                                violations.push(Violation::new(
                                    "duration",
                                    &s.name,
                                    format!("{} min outside {}-{} h", s.window.duration_minutes(), a.recommended_duration.min_hours, a.recommended_duration.max_hours),
                                ));
                            }
                            if !a.admits_visit(&s.window) {
                                i_time = false;
                                violations.push(Violation::new("opening_hours", &s.name, format!("{} outside {}", s.window, a.opening_hours)));
                            }
                        }
                        None => {
                            // Unverifiable visits count against both checks.
                            i_dur = false;
                            i_time = false;
                        }
                    }
                }
                _ => {}
            }
        }
    }
    HardScore::from_indicators([i_sandbox, i_comp, i_rest, i_attr, i_dur, i_time], violations)
}

fn unresolved(kind: EntityKind, name: &str) -> CostError {
    CostError::UnresolvedEntity {
        kind,
        name: name.to_string(),
    }
}

/// Transport fares, entrance fees and meal prices of one day, plus one hotel
/// night unless it is the final day.
pub fn day_cost(
    day: &DayPlan,
    dest_city: &str,
    hotel: Option<&Hotel>,
    is_final_day: bool,
    sandbox: &Sandbox,
) -> Result<f64, CostError> {
    let mut total = 0.0;
    for s in &day.steps {
        total += match s.activity {
            ActivityType::Transportation => {
                sandbox
                    .resolve_transport(&s.name)
                    .ok_or_else(|| unresolved(EntityKind::Transport, &s.name))?
                    .price
            }
            ActivityType::Sightseeing => {
                sandbox
                    .resolve_attraction(dest_city, &s.name)
                    .ok_or_else(|| unresolved(EntityKind::Attraction, &s.name))?
                    .entrance_fee
            }
            ActivityType::Meal => {
                sandbox
                    .resolve_restaurant(dest_city, &s.name)
                    .ok_or_else(|| unresolved(EntityKind::Restaurant, &s.name))?
                    .avg_price
            }
            _ => 0.0,
        };
    }
    if !is_final_day {
        if let Some(h) = hotel {
            total += h.price_per_night;
        }
    }
    Ok(total)
}

fn trip_hotel<'a>(it: &Itinerary, sandbox: &'a Sandbox) -> Result<Option<&'a Hotel>, CostError> {
    match &it.hotel {
        Some(h) if it.days.len() >= 2 => sandbox
            .resolve_hotel(&it.dest_city, h)
            .map(Some)
            .ok_or_else(|| unresolved(EntityKind::Hotel, h)),
        _ => Ok(None),
    }
}

/// Per-day costs in order.
pub fn day_costs(it: &Itinerary, sandbox: &Sandbox) -> Result<Vec<f64>, CostError> {
    let hotel = trip_hotel(it, sandbox)?;
    let n = it.days.len();
    it.days
        .iter()
        .enumerate()
        .map(|(i, d)| day_cost(d, &it.dest_city, hotel, i + 1 == n, sandbox))
        .collect()
}

pub fn total_cost(it: &Itinerary, sandbox: &Sandbox) -> Result<f64, CostError> {
    Ok(day_costs(it, sandbox)?.iter().sum())
}
