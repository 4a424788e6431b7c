//! Competitive consensus planning: a team of specialized agents proposes
//! day plans, reviews each other, and an arbitrator fuses the top-ranked
//! proposals. Valid plans are screened by the schedule validator at every
//! stage, with a repair round and a fallback to the best valid proposal.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::constraints::{day_cost, validate_proposal, DayContext, RuleConfig, RuleReport};
use crate::itinerary::{day_label, DayPlan, DayRole, Itinerary, Proposal, TransportRef, TripTransport, ITINERARY_SCHEMA_VERSION};
use crate::profile::UserProfile;
use crate::prompts;
use crate::providers::{
    chat_structured, embed, map_bounded, parse_json_document, ChatModel, ChatRequest, Embedder, EmbeddingVector,
    ProviderConfig, ProviderError,
};
use crate::sandbox::{normalize_name, Attraction, Cuisine, Hotel, Restaurant, Sandbox, TransportLeg};

#[derive(Debug, Error)]
pub enum CcotError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{day}: no valid plan ({reasons})")]
    NoValidPlan { day: String, reasons: String },
    #[error("invalid planning setup: {0}")]
    Setup(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_id: String,
    pub objective: String,
    #[serde(default)]
    pub priorities: Vec<String>,
    #[serde(default)]
    pub personality: String,
}

impl AgentSpec {
    pub fn profile_text(&self) -> String {
        serde_json::to_string(self).expect("agent serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CcotConfig {
    pub min_agents: usize,
    pub max_agents: usize,
    pub top_k: usize,
    /// Extra review requests when a reviewer omits a plan.
    pub review_retries: usize,
    pub repair_rounds: usize,
    pub rules: RuleConfig,
}

impl Default for CcotConfig {
    fn default() -> Self {
        CcotConfig {
            min_agents: 4,
            max_agents: 6,
            top_k: 3,
            review_retries: 1,
            repair_rounds: 1,
            rules: RuleConfig::default(),
        }
    }
}

impl CcotConfig {
    pub fn validate(&self) -> Result<(), CcotError> {
        if self.min_agents == 0 || self.min_agents > self.max_agents {
            return Err(CcotError::Setup(format!(
                "team bounds {}..={} are invalid",
                self.min_agents, self.max_agents
            )));
        }
        if self.top_k == 0 {
            return Err(CcotError::Setup("top_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Chat, embedding and call settings shared by every stage.
#[derive(Clone, Copy)]
pub struct Models<'a> {
    pub chat: &'a dyn ChatModel,
    pub embedder: &'a dyn Embedder,
    pub provider: &'a ProviderConfig,
}

pub const BASE_AGENT_ID: &str = "base";

fn parse_agents(reply: &str, cfg: &CcotConfig) -> Result<Vec<AgentSpec>, String> {
    let agents: Vec<AgentSpec> = parse_json_document(reply)?;
    if !(cfg.min_agents..=cfg.max_agents).contains(&agents.len()) {
        return Err(format!(
            "expected {}-{} agents, got {}",
            cfg.min_agents,
            cfg.max_agents,
            agents.len()
        ));
    }
    let mut seen = HashSet::new();
    for a in &agents {
        if a.agent_id.trim().is_empty() || a.agent_id == BASE_AGENT_ID {
            return Err(format!("agent id {:?} is reserved or empty", a.agent_id));
        }
        if !seen.insert(a.agent_id.as_str()) {
            return Err(format!("duplicate agent id {:?}", a.agent_id));
        }
    }
    Ok(agents)
}

pub fn instantiate_agents(query: &str, models: &Models<'_>, cfg: &CcotConfig) -> Result<Vec<AgentSpec>, CcotError> {
    let req = ChatRequest::structured(prompts::SYSTEM, prompts::agents_prompt(query));
    Ok(chat_structured(models.chat, &req, models.provider, |r| parse_agents(r, cfg))?)
}

/// Facts about the trip and the day being planned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripFacts {
    pub origin_city: String,
    pub dest_city: String,
    pub day_label: String,
    pub day_index: usize,
    pub duration: usize,
    pub role: DayRole,
    pub budget: f64,
    pub meal_range: (f64, f64),
    #[serde(default)]
    pub interests: Vec<String>,
    #[serde(default)]
    pub cuisine_prefs: Vec<Cuisine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegPair {
    pub outbound: Option<TransportLeg>,
    #[serde(rename = "return")]
    pub inbound: Option<TransportLeg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub cluster: i32,
    pub attractions: Vec<Attraction>,
    pub restaurants: Vec<Restaurant>,
}

/// The catalog excerpt handed to planners for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GivenInfo {
    pub trip: TripFacts,
    pub transportation: LegPair,
    pub hotel: Option<Hotel>,
    pub clusters: Vec<ClusterInfo>,
}

impl GivenInfo {
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("given info serializes")
    }

    pub fn attractions(&self) -> impl Iterator<Item = &Attraction> {
        self.clusters.iter().flat_map(|c| c.attractions.iter())
    }

    pub fn restaurants(&self) -> impl Iterator<Item = &Restaurant> {
        self.clusters.iter().flat_map(|c| c.restaurants.iter())
    }

    /// A sandbox holding exactly the listed entities, for validation.
    pub fn to_sandbox(&self) -> Result<Sandbox, crate::sandbox::SandboxError> {
        use crate::sandbox::{City, SandboxDocument, SCHEMA_VERSION};
        let anchor = self
            .hotel
            .as_ref()
            .map(|h| (h.lat, h.lon))
            .or_else(|| self.attractions().next().map(|a| (a.lat, a.lon)))
            .unwrap_or((0.0, 0.0));
        let mut cities = vec![City {
            name: self.trip.dest_city.clone(),
            lat: anchor.0,
            lon: anchor.1,
        }];
        if normalize_name(&self.trip.origin_city) != normalize_name(&self.trip.dest_city) {
            cities.push(City {
                name: self.trip.origin_city.clone(),
                lat: anchor.0,
                lon: anchor.1,
            });
        }
        let mut transport: Vec<TransportLeg> = Vec::new();
        for l in [&self.transportation.outbound, &self.transportation.inbound].into_iter().flatten() {
            if !transport.iter().any(|t| t.id == l.id) {
                transport.push(l.clone());
            }
        }
        Sandbox::from_document(SandboxDocument {
            schema_version: SCHEMA_VERSION,
            cities,
            attractions: self.attractions().cloned().collect(),
            restaurants: self.restaurants().cloned().collect(),
            hotels: self.hotel.iter().cloned().collect(),
            transport,
        })
    }
}

/// Everything fixed for the whole trip before day planning starts.
#[derive(Debug, Clone)]
pub struct TripSetup<'a> {
    /// Catalog view whose entities carry cluster labels.
    pub sandbox: &'a Sandbox,
    pub profile: &'a UserProfile,
    pub candidates: Vec<&'a Attraction>,
    pub restaurants: Vec<&'a Restaurant>,
    pub hotel: Option<&'a Hotel>,
    pub outbound: &'a TransportLeg,
    pub inbound: &'a TransportLeg,
}

impl TripSetup<'_> {
    pub fn duration(&self) -> usize {
        self.profile.duration()
    }

    fn used_names(prior: &[DayPlan]) -> HashSet<String> {
        prior
            .iter()
            .flat_map(|d| d.steps.iter())
            .map(|s| normalize_name(&s.name))
            .collect()
    }

    /// Catalog excerpt for 1-based `day`, without venues used on earlier days.
    pub fn given_info(&self, day: usize, prior: &[DayPlan]) -> GivenInfo {
        let n = self.duration();
        let used = Self::used_names(prior);
        let attractions: Vec<&Attraction> = self
            .candidates
            .iter()
            .copied()
            .filter(|a| !used.contains(&normalize_name(&a.name)))
            .collect();
        let free_restaurants: Vec<&Restaurant> = self
            .restaurants
            .iter()
            .copied()
            .filter(|r| !used.contains(&normalize_name(&r.name)))
            .collect();
        let (lo, hi) = self.profile.inferred.meal_range;
        let affordable: Vec<&Restaurant> = free_restaurants
            .iter()
            .copied()
            .filter(|r| r.avg_price >= lo * 0.5 && r.avg_price <= hi * 1.5)
            .collect();
        let remaining_days = n + 1 - day;
        let restaurants = if affordable.len() >= 2 * remaining_days + 2 {
            affordable
        } else {
            free_restaurants
        };
        let mut clusters: BTreeMap<i32, ClusterInfo> = BTreeMap::new();
        let empty = |l: i32| ClusterInfo {
            cluster: l,
            attractions: vec![],
            restaurants: vec![],
        };
        for a in attractions {
            let l = a.cluster_label.unwrap_or(-1);
            clusters.entry(l).or_insert_with(|| empty(l)).attractions.push(a.clone());
        }
        for r in restaurants {
            let l = r.cluster_label.unwrap_or(-1);
            clusters.entry(l).or_insert_with(|| empty(l)).restaurants.push(r.clone());
        }
        let mut clusters: Vec<ClusterInfo> = clusters.into_values().collect();
        clusters.sort_by_key(|c| (c.cluster < 0, c.cluster));
        let role = DayRole::of(day, n);
        let e = &self.profile.explicit;
        GivenInfo {
            trip: TripFacts {
                origin_city: e.origin_city.clone(),
                dest_city: e.dest_city.clone(),
                day_label: day_label(day),
                day_index: day,
                duration: n,
                role,
                budget: e.budget,
                meal_range: self.profile.inferred.meal_range,
                interests: e.other_requirements.clone(),
                cuisine_prefs: e.cuisine_prefs.clone(),
            },
            transportation: LegPair {
                outbound: role.is_first().then(|| self.outbound.clone()),
                inbound: role.is_last().then(|| self.inbound.clone()),
            },
            hotel: self.hotel.cloned(),
            clusters,
        }
    }

    fn context<'b>(&'b self, day: usize, prior: &'b [DayPlan]) -> DayContext<'b> {
        DayContext {
            sandbox: self.sandbox,
            origin_city: &self.profile.explicit.origin_city,
            dest_city: &self.profile.explicit.dest_city,
            role: DayRole::of(day, self.duration()),
            prior_days: prior,
            hotel: self.hotel.map(|h| h.name.as_str()),
        }
    }
}

fn previous_text(prior: &[DayPlan]) -> String {
    serde_json::to_string_pretty(prior).expect("days serialize")
}

fn parse_day(reply: &str) -> Result<DayPlan, String> {
    parse_json_document(reply)
}

fn parse_proposal(reply: &str) -> Result<Proposal, String> {
    parse_json_document(reply)
}

fn base_agent() -> AgentSpec {
    AgentSpec {
        agent_id: BASE_AGENT_ID.into(),
        objective: "Produce a valid, compact route covering the top-ranked candidates (minimize km between stops)".into(),
        priorities: vec!["Schedule validity".into(), "Single cluster per day".into()],
        personality: "Methodical".into(),
    }
}

/// Plan produced without a skeleton; agents refine it.
pub fn generate_skeleton(
    setup: &TripSetup<'_>,
    day: usize,
    prior: &[DayPlan],
    models: &Models<'_>,
) -> Result<DayPlan, CcotError> {
    let info = setup.given_info(day, prior);
    let prompt = prompts::day_plan_prompt(
        &base_agent().profile_text(),
        &info.trip.day_label,
        &info.to_text(),
        &previous_text(prior),
        &setup.profile.raw_query,
        None,
    );
    let req = ChatRequest::structured(prompts::SYSTEM, prompt);
    Ok(chat_structured(models.chat, &req, models.provider, parse_day)?)
}

pub fn refine_proposal(
    agent: &AgentSpec,
    setup: &TripSetup<'_>,
    day: usize,
    prior: &[DayPlan],
    skeleton: &DayPlan,
    models: &Models<'_>,
) -> Result<Proposal, CcotError> {
    let info = setup.given_info(day, prior);
    let skeleton_text = serde_json::to_string_pretty(skeleton).expect("day serializes");
    let prompt = prompts::day_plan_prompt(
        &agent.profile_text(),
        &info.trip.day_label,
        &info.to_text(),
        &previous_text(prior),
        &setup.profile.raw_query,
        Some(&skeleton_text),
    );
    let req = ChatRequest::structured(prompts::SYSTEM, prompt);
    let mut p = chat_structured(models.chat, &req, models.provider, parse_proposal)?;
    // The proposal belongs to the agent that was asked, whatever it claims.
    p.agent_id = agent.agent_id.clone();
    Ok(p)
}

pub const DIVERSITY_EPS: f64 = 0.01;

/// Agents whose proposals resemble their peers' less get more weight.
pub fn diversity_weights(embeddings: &[EmbeddingVector]) -> Vec<f64> {
    let n = embeddings.len();
    if n == 0 {
        return vec![];
    }
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let mean_sim = if n == 1 {
                0.0
            } else {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| embeddings[i].cosine(&embeddings[j]).unwrap_or(0.0))
                    .sum::<f64>()
                    / (n - 1) as f64
            };
            // Anti-correlated proposals count as fully distinct.
            1.0 / (mean_sim.max(0.0) + DIVERSITY_EPS)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

pub const REVIEW_MIN: f64 = -10.0;
pub const REVIEW_MAX: f64 = 10.0;

/// Reviewer i's score of proposal j at `scores[i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewMatrix {
    pub agent_ids: Vec<String>,
    pub scores: Vec<Vec<f64>>,
    /// (reviewer, reviewed, critique)
    pub critiques: Vec<(String, String, String)>,
    /// (reviewer, reviewed) pairs that never received a score.
    pub missing: Vec<(String, String)>,
}

fn review_entries(reply: &str) -> Result<serde_json::Map<String, Value>, String> {
    match parse_json_document::<Value>(reply)? {
        Value::Object(m) => Ok(m),
        _ => Err("review must be a JSON object keyed by agent_id".into()),
    }
}

fn entry_score(v: &Value) -> Option<(f64, String)> {
    let num = |x: &Value| x.as_f64().or_else(|| x.as_str().and_then(|s| s.trim().parse().ok()));
    let (score, critique) = match v {
        Value::Object(o) => (
            o.get("score").and_then(num)?,
            o.get("critique").and_then(Value::as_str).unwrap_or("").to_string(),
        ),
        other => (num(other)?, String::new()),
    };
    score
        .is_finite()
        .then(|| (score.round().clamp(REVIEW_MIN, REVIEW_MAX), critique))
}

/// Every agent with a valid proposal reviews all valid proposals (its own
/// included). Scores are rounded and clamped; a score still missing after
/// the retries counts as 0.
pub fn peer_review(
    agents: &[&AgentSpec],
    proposals: &[&Proposal],
    query: &str,
    models: &Models<'_>,
    cfg: &CcotConfig,
) -> Result<ReviewMatrix, CcotError> {
    let plans_joined = serde_json::to_string_pretty(proposals).expect("proposals serialize");
    let ids: Vec<String> = proposals.iter().map(|p| p.agent_id.clone()).collect();
    let rows = map_bounded(agents, models.provider.parallelism_limit, |agent| {
        let req = ChatRequest::structured(
            prompts::SYSTEM,
            prompts::review_prompt(&agent.profile_text(), query, &plans_joined),
        );
        let mut got: BTreeMap<String, (f64, String)> = BTreeMap::new();
        for _ in 0..=cfg.review_retries {
            let entries = chat_structured(models.chat, &req, models.provider, review_entries)?;
            for id in &ids {
                if let Some(s) = entries.get(id).and_then(entry_score) {
                    got.entry(id.clone()).or_insert(s);
                }
            }
            if ids.iter().all(|id| got.contains_key(id)) {
                break;
            }
        }
        Ok::<_, ProviderError>(got)
    });
    let mut m = ReviewMatrix {
        agent_ids: ids.clone(),
        scores: Vec::new(),
        critiques: Vec::new(),
        missing: Vec::new(),
    };
    for (agent, row) in agents.iter().zip(rows) {
        let row = row?;
        let mut scores = Vec::with_capacity(ids.len());
        for id in &ids {
            match row.get(id) {
                Some((s, c)) => {
                    scores.push(*s);
                    if !c.is_empty() {
                        m.critiques.push((agent.agent_id.clone(), id.clone(), c.clone()));
                    }
                }
                None => {
                    scores.push(0.0);
                    m.missing.push((agent.agent_id.clone(), id.clone()));
                }
            }
        }
        m.scores.push(scores);
    }
    Ok(m)
}

/// Weighted column sums: score_j = sum_i w_i * s_ij.
pub fn consensus_scores(weights: &[f64], scores: &[Vec<f64>]) -> Vec<f64> {
    let cols = scores.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| weights.iter().zip(scores).map(|(w, row)| w * row[j]).sum())
        .collect()
}

/// Indices of the `k` best proposals by consensus score; ties go to the
/// higher single review, then the smaller agent id.
pub fn select_top_k(consensus: &[f64], scores: &[Vec<f64>], ids: &[String], k: usize) -> Vec<usize> {
    let best_single = |j: usize| scores.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
    let mut order: Vec<usize> = (0..consensus.len()).collect();
    order.sort_by(|&a, &b| {
        consensus[b]
            .total_cmp(&consensus[a])
            .then(best_single(b).total_cmp(&best_single(a)))
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    order.truncate(k);
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisOutcome {
    Arbitrated,
    Repaired,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArbitrationRecord {
    pub day_label: String,
    pub team: Vec<String>,
    /// Agents whose proposals failed validation, with the failed rules.
    pub rejected: Vec<(String, Vec<String>)>,
    pub weights: Vec<f64>,
    pub reviews: ReviewMatrix,
    pub consensus: Vec<f64>,
    pub top_k: Vec<String>,
    pub outcome: SynthesisOutcome,
}

fn critique_summary(m: &ReviewMatrix, top: &[usize]) -> String {
    let mut out = String::new();
    for &j in top {
        let id = &m.agent_ids[j];
        out.push_str(&format!("- {id}:"));
        for (reviewer, reviewed, c) in &m.critiques {
            if reviewed == id {
                out.push_str(&format!(" [{reviewer}] {c}"));
            }
        }
        out.push('\n');
    }
    out
}

/// Fuse the winners; repair an invalid fusion; fall back to the top winner.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_day(
    setup: &TripSetup<'_>,
    day: usize,
    prior: &[DayPlan],
    winners: &[&Proposal],
    critiques: &str,
    models: &Models<'_>,
    cfg: &CcotConfig,
) -> Result<(DayPlan, SynthesisOutcome), CcotError> {
    let top = winners
        .first()
        .ok_or_else(|| CcotError::Setup("synthesis needs at least one winner".into()))?;
    let ctx = setup.context(day, prior);
    let info_text = setup.given_info(day, prior).to_text();
    let role = ctx.role;
    let label = day_label(day);
    let check = |d: &DayPlan| validate_proposal(d, &ctx, &cfg.rules);

    let budget = format!("{}", setup.profile.budget());
    let plans_joined = serde_json::to_string_pretty(winners).expect("proposals serialize");
    let prev = previous_text(prior);
    let prompt = prompts::arbitration_prompt(&prompts::ArbitrationInputs {
        day_label: &label,
        critique_summary: critiques,
        given_info_text: &info_text,
        plans_joined: &plans_joined,
        user_query: &setup.profile.raw_query,
        budget: &budget,
        is_first_day: role.is_first(),
        is_last_day: role.is_last(),
        previous_days_plan: &prev,
    });
    let req = ChatRequest::structured(prompts::SYSTEM, prompt);
    let mut candidate = match chat_structured(models.chat, &req, models.provider, parse_day) {
        Ok(d) => Some(d),
        Err(ProviderError::Schema { last_error, .. }) => {
            log::warn!("{label}: arbitration reply unusable: {last_error}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(d) = &candidate {
        if check(d).passed() {
            return Ok((d.clone(), SynthesisOutcome::Arbitrated));
        }
    }
    for _ in 0..cfg.repair_rounds {
        let draft = candidate.clone().unwrap_or_else(|| top.day.clone());
        let report = check(&draft);
        let violations = report.violation_lines().join("; ");
        let draft_text = serde_json::to_string_pretty(&draft).expect("day serializes");
        let req = ChatRequest::structured(
            prompts::SYSTEM,
            prompts::repair_prompt(&violations, &setup.profile.raw_query, &draft_text, &info_text, &prev),
        );
        match chat_structured(models.chat, &req, models.provider, parse_day) {
            Ok(fixed) if check(&fixed).passed() => return Ok((fixed, SynthesisOutcome::Repaired)),
            Ok(fixed) => candidate = Some(fixed),
            Err(ProviderError::Schema { last_error, .. }) => log::warn!("{label}: repair reply unusable: {last_error}"),
            Err(e) => return Err(e.into()),
        }
    }
    log::info!("{label}: falling back to the top-ranked proposal by {}", top.agent_id);
    Ok((top.day.clone(), SynthesisOutcome::Fallback))
}

/// One day through the full propose / review / arbitrate protocol.
pub fn plan_day(
    setup: &TripSetup<'_>,
    agents: &[AgentSpec],
    day: usize,
    prior: &[DayPlan],
    models: &Models<'_>,
    cfg: &CcotConfig,
) -> Result<(DayPlan, ArbitrationRecord), CcotError> {
    let label = day_label(day);
    let ctx = setup.context(day, prior);
    let skeleton = generate_skeleton(setup, day, prior, models)?;
    let proposals = map_bounded(agents, models.provider.parallelism_limit, |a| {
        refine_proposal(a, setup, day, prior, &skeleton, models)
    });

    let mut valid: Vec<(&AgentSpec, Proposal)> = Vec::new();
    let mut rejected = Vec::new();
    for (agent, p) in agents.iter().zip(proposals) {
        match p {
            Ok(p) => {
                let report: RuleReport = validate_proposal(&p.day, &ctx, &cfg.rules);
                if report.passed() {
                    valid.push((agent, p));
                } else {
                    rejected.push((agent.agent_id.clone(), report.violation_lines()));
                }
            }
            Err(CcotError::Provider(ProviderError::Schema { last_error, .. })) => {
                rejected.push((agent.agent_id.clone(), vec![format!("unparseable proposal: {last_error}")]));
            }
            Err(e) => return Err(e),
        }
    }
    if valid.is_empty() {
        let skeleton_report = validate_proposal(&skeleton, &ctx, &cfg.rules);
        if skeleton_report.passed() {
            log::warn!("{label}: every proposal failed validation; using the skeleton");
            valid.push((agents.first().expect("team is non-empty"), Proposal {
                agent_id: BASE_AGENT_ID.into(),
                day: skeleton,
            }));
        } else {
            let reasons = rejected
                .iter()
                .map(|(id, v)| format!("{id}: {}", v.join("; ")))
                .collect::<Vec<_>>()
                .join(" | ");
            return Err(CcotError::NoValidPlan { day: label, reasons });
        }
    }

    let texts: Vec<String> = valid.iter().map(|(_, p)| p.day.content_key()).collect();
    let vectors = embed(models.embedder, &texts)?;
    let weights = diversity_weights(&vectors);
    let reviewers: Vec<&AgentSpec> = valid.iter().map(|(a, _)| *a).collect();
    let props: Vec<&Proposal> = valid.iter().map(|(_, p)| p).collect();
    let reviews = peer_review(&reviewers, &props, &setup.profile.raw_query, models, cfg)?;
    let consensus = consensus_scores(&weights, &reviews.scores);
    let top = select_top_k(&consensus, &reviews.scores, &reviews.agent_ids, cfg.top_k);
    let winners: Vec<&Proposal> = top.iter().map(|&j| props[j]).collect();
    let summary = critique_summary(&reviews, &top);
    let (mut day_plan, outcome) = synthesize_day(setup, day, prior, &winners, &summary, models, cfg)?;
    day_plan.day_label = label.clone();
    let record = ArbitrationRecord {
        day_label: label,
        team: agents.iter().map(|a| a.agent_id.clone()).collect(),
        rejected,
        weights,
        top_k: top.iter().map(|&j| reviews.agent_ids[j].clone()).collect(),
        consensus,
        reviews,
        outcome,
    };
    Ok((day_plan, record))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripResult {
    pub itinerary: Itinerary,
    pub agents: Vec<AgentSpec>,
    pub records: Vec<ArbitrationRecord>,
}

/// Plan every day in order and assemble the itinerary with recomputed costs.
pub fn plan_trip(
    setup: &TripSetup<'_>,
    models: &Models<'_>,
    cfg: &CcotConfig,
    config_hash: &str,
) -> Result<TripResult, CcotError> {
    cfg.validate()?;
    let n = setup.duration();
    if n >= 2 && setup.hotel.is_none() {
        return Err(CcotError::Setup("a multi-day trip needs a hotel".into()));
    }
    let agents = instantiate_agents(&setup.profile.raw_query, models, cfg)?;
    let mut days: Vec<DayPlan> = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    for day in 1..=n {
        let (mut plan, record) = plan_day(setup, &agents, day, &days, models, cfg)?;
        let cost = day_cost(&plan, &setup.profile.explicit.dest_city, setup.hotel, day == n, setup.sandbox)
            .map_err(|e| CcotError::NoValidPlan {
                day: plan.day_label.clone(),
                reasons: e.to_string(),
            })?;
        plan.daily_cost = Some(cost);
        days.push(plan);
        records.push(record);
    }
    let e = &setup.profile.explicit;
    let itinerary = Itinerary {
        schema_version: ITINERARY_SCHEMA_VERSION,
        config_hash: config_hash.to_string(),
        query: setup.profile.raw_query.clone(),
        origin_city: e.origin_city.clone(),
        dest_city: e.dest_city.clone(),
        transport: Some(TripTransport {
            outbound: Some(TransportRef {
                id: setup.outbound.id.clone(),
                mode: Some(setup.outbound.mode),
            }),
            inbound: Some(TransportRef {
                id: setup.inbound.id.clone(),
                mode: Some(setup.inbound.mode),
            }),
        }),
        hotel: setup.hotel.map(|h| h.name.clone()),
        total_cost: days.iter().filter_map(|d| d.daily_cost).sum(),
        days,
    };
    Ok(TripResult {
        itinerary,
        agents,
        records,
    })
}

/// Human-readable rendering of an itinerary.
pub fn render_markdown(it: &Itinerary) -> String {
    let mut out = format!("# {} to {}\n\n", it.origin_city, it.dest_city);
    if let Some(h) = &it.hotel {
        out.push_str(&format!("Hotel: {h}\n\n"));
    }
    for d in &it.days {
        out.push_str(&format!("## {}\n\n", d.day_label));
        for s in &d.steps {
            out.push_str(&format!("### {} | {} ({})\n", s.window, s.name, s.activity));
            if !s.description.is_empty() {
                out.push_str(&s.description);
                out.push('\n');
            }
            out.push('\n');
        }
        if let Some(c) = d.daily_cost {
            out.push_str(&format!("**Total Daily Cost**: ¥{c}\n\n"));
        }
    }
    out.push_str(&format!("**Trip Total**: ¥{}\n", it.total_cost));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> EmbeddingVector {
        EmbeddingVector(x.to_vec())
    }

    #[test]
    fn identical_proposals_share_weight() {
        let w = diversity_weights(&[v(&[1.0, 0.0]), v(&[1.0, 0.0]), v(&[1.0, 0.0]), v(&[1.0, 0.0])]);
        for x in w {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn two_identical_one_orthogonal() {
        let w = diversity_weights(&[v(&[1.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])]);
        // mean sims 0.5, 0.5, 0 -> raw 1/0.51, 1/0.51, 1/0.01
        let raw = [1.0 / 0.51, 1.0 / 0.51, 100.0];
        let total: f64 = raw.iter().sum();
        for (got, r) in w.iter().zip(raw) {
            assert!((got - r / total).abs() < 1e-12);
        }
        assert!((w[0] - 0.0189).abs() < 1e-3 && (w[2] - 0.9623).abs() < 1e-3);
        assert_eq!(diversity_weights(&[v(&[0.3, 0.4])]), vec![1.0]);
        let opposed = diversity_weights(&[v(&[1.0, 0.0]), v(&[-1.0, 0.0])]);
        assert_eq!(opposed, vec![0.5, 0.5]);
    }

    #[test]
    fn review_scores_round_and_clamp() {
        assert_eq!(entry_score(&serde_json::json!({"score": 12.6, "critique": "x"})), Some((10.0, "x".into())));
        assert_eq!(entry_score(&serde_json::json!({"score": "-3.4"})), Some((-3.0, String::new())));
        assert_eq!(entry_score(&serde_json::json!(2.5)), Some((3.0, String::new())));
        assert_eq!(entry_score(&serde_json::json!({"critique": "no score"})), None);
    }

    #[test]
    fn top_k_tie_breaks() {
        let ids: Vec<String> = ["c", "a", "b"].iter().map(|s| s.to_string()).collect();
        let scores = vec![vec![1.0, 2.0, 1.0], vec![1.0, 0.0, 1.0]];
        // consensus with equal weights: c=1, a=1, b=1; max single: c=1, a=2, b=1.
        let cons = consensus_scores(&[0.5, 0.5], &scores);
        assert_eq!(select_top_k(&cons, &scores, &ids, 3), vec![1, 2, 0]);
        assert_eq!(select_top_k(&cons, &scores, &ids, 1), vec![1]);
    }

    #[test]
    fn agent_reply_validation() {
        let cfg = CcotConfig::default();
        let one = r#"{"agent_id": "a", "objective": "keep cost <= 100 CNY"}"#;
        let four = format!("[{}]", [one; 4].join(","));
        assert!(parse_agents(&four, &cfg).unwrap_err().contains("duplicate"));
        let ok = r#"[{"agent_id":"a","objective":"o"},{"agent_id":"b","objective":"o"},{"agent_id":"c","objective":"o"},{"agent_id":"d","objective":"o"}]"#;
        assert_eq!(parse_agents(ok, &cfg).unwrap().len(), 4);
        assert!(parse_agents(&format!("[{one}]"), &cfg).unwrap_err().contains("expected 4-6"));
    }

    fn naive_consensus(w: &[f64], s: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; s[0].len()];
        for i in 0..w.len() {
            for j in 0..s[0].len() {
                out[j] += w[i] * s[i][j];
            }
        }
        out
    }

    fn argmax(x: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in x.iter().enumerate() {
            if *v > x[best] {
                best = i;
            }
        }
        best
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(vs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..7)) {
            prop_assume!(vs.iter().all(|x| x.iter().any(|c| c.abs() > 1e-3)));
            let e: Vec<EmbeddingVector> = vs.into_iter().map(EmbeddingVector).collect();
            let w = diversity_weights(&e);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(w.iter().all(|x| *x > 0.0));
        }

        #[test]
        fn consensus_matches_double_loop(
            n in 1usize..6,
            seed in prop::collection::vec(-10i8..=10, 36),
            ws in prop::collection::vec(0.01f64..1.0, 6),
        ) {
            let s: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(seed[i * 6 + j])).collect()).collect();
            let w = &ws[..n];
            let got = consensus_scores(w, &s);
            let want = naive_consensus(w, &s);
            for (a, b) in got.iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn reviewer_shift_keeps_argmax(
            n in 2usize..6,
            seed in prop::collection::vec(-10i8..=10, 36),
            ws in prop::collection::vec(0.01f64..1.0, 6),
            shifts in prop::collection::vec(-5.0f64..5.0, 6),
        ) {
            let s: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(seed[i * 6 + j])).collect()).collect();
            let w = &ws[..n];
            let base = consensus_scores(w, &s);
            let shifted: Vec<Vec<f64>> = s.iter().zip(&shifts).map(|(row, d)| row.iter().map(|x| x + d).collect()).collect();
            let moved = consensus_scores(w, &shifted);
            // A constant per-reviewer shift adds the same amount to every column.
            let best = argmax(&base);
            let margin = base.iter().enumerate().filter(|(j, _)| *j != best).map(|(_, v)| base[best] - v).fold(f64::INFINITY, f64::min);
            prop_assume!(margin > 1e-9);
            prop_assert_eq!(argmax(&moved), best);
        }
    }
}
