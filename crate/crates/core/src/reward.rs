//! Soft scores, the sigmoid gate over eta, total reward and the group
//! sequence policy optimization (GSPO) batch arithmetic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{total_cost, HardScore};
use crate::geo::{haversine, GeoPoint};
use crate::itinerary::{ActivityType, Itinerary};
use crate::providers::{score_preference, PreferenceModel, ProviderError};
use crate::sandbox::Sandbox;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("no day has two located points of interest")]
    NoLocatedDays,
    #[error("log-prob sequences differ in length ({new} vs {old})")]
    LengthMismatch { new: usize, old: usize },
    #[error("empty log-prob sequence")]
    EmptySequence,
    #[error("{what}: expected {expected} entries, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("a group needs at least 2 rollouts, got {0}")]
    GroupTooSmall(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    pub tau: f64,
    pub k: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig { tau: 0.75, k: 28.0 }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(RewardError::Invalid(format!("gate steepness must be positive, got {}", self.k)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(RewardError::Invalid(format!("gate threshold must be in (0, 1), got {}", self.tau)));
        }
        Ok(())
    }
}

pub fn gate(eta: f64, cfg: &GateConfig) -> f64 {
    1.0 / (1.0 + (-cfg.k * (eta - cfg.tau)).exp())
}

/// Spending up to the budget scores its fraction; overspending decays linearly.
pub fn budget_score(cost: f64, budget: f64) -> f64 {
    if cost <= budget {
        cost / budget
    } else {
        (1.0 - (cost - budget) / budget).max(0.0)
    }
}

pub const ROUTE_SLACK: f64 = 0.8;

pub fn route_score(d_gen: f64, d_ref: f64) -> f64 {
    (-(d_gen / d_ref - ROUTE_SLACK).max(0.0)).exp()
}

pub fn preference_score(raw: f64) -> f64 {
    (raw / 6.0).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftScore {
    pub s_budget: f64,
    pub s_route: f64,
    pub s_model: f64,
    pub r_soft: f64,
}

impl SoftScore {
    pub fn new(s_budget: f64, s_route: f64, s_model: f64) -> Self {
        SoftScore {
            s_budget,
            s_route,
            s_model,
            r_soft: s_budget + s_route + s_model,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub hard: HardScore,
    pub soft: SoftScore,
    pub alpha: f64,
    pub total: f64,
}

pub fn total_reward(hard: HardScore, soft: SoftScore, cfg: &GateConfig) -> RewardBreakdown {
    let alpha = gate(hard.eta, cfg);
    RewardBreakdown {
        total: hard.r_hard + alpha * soft.r_soft,
        hard,
        soft,
        alpha,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteStats {
    /// Consecutive-POI distances in km, per day.
    pub segments: Vec<Vec<f64>>,
    pub poi_counts: Vec<usize>,
    pub day_count: usize,
    pub d_avg: f64,
}

impl RouteStats {
    /// Days with fewer than two POIs (no segments) are left out of the mean.
    pub fn from_segments(segments: Vec<Vec<f64>>) -> Result<Self, RewardError> {
        let daily: Vec<f64> = segments
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.iter().sum::<f64>() / s.len() as f64)
            .collect();
        if daily.is_empty() {
            return Err(RewardError::NoLocatedDays);
        }
        Ok(RouteStats {
            poi_counts: segments.iter().map(|s| if s.is_empty() { 0 } else { s.len() + 1 }).collect(),
            day_count: segments.len(),
            d_avg: daily.iter().sum::<f64>() / daily.len() as f64,
            segments,
        })
    }

    pub fn total_km(&self) -> f64 {
        self.segments.iter().flatten().sum()
    }
}

/// Sightseeing and meal venues of each day in visiting order. Steps that do
/// not resolve in the catalog have no location and are skipped.
pub fn located_pois(it: &Itinerary, sandbox: &Sandbox) -> Vec<Vec<GeoPoint>> {
    it.days
        .iter()
        .map(|d| {
            d.steps
                .iter()
                .filter_map(|s| match s.activity {
                    ActivityType::Sightseeing => sandbox
                        .resolve_attraction(&it.dest_city, &s.name)
                        .map(|a| GeoPoint::new(a.lat, a.lon)),
                    ActivityType::Meal => sandbox
                        .resolve_restaurant(&it.dest_city, &s.name)
                        .map(|r| GeoPoint::new(r.lat, r.lon)),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

pub fn route_stats(it: &Itinerary, sandbox: &Sandbox) -> Result<RouteStats, RewardError> {
    let segments = located_pois(it, sandbox)
        .iter()
        .map(|pts| pts.windows(2).map(|w| haversine(w[0], w[1])).collect())
        .collect();
    RouteStats::from_segments(segments)
}

/// Inputs of the soft score besides the plan itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub gate: GateConfig,
    /// Reference average daily segment length used when no reference plan is given.
    pub default_d_ref_km: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            gate: GateConfig::default(),
            default_d_ref_km: 5.0,
        }
    }
}

/// Full reward of a plan. The route term is 0 when the plan has no located
/// day; the cost term uses the plan's stated total when entities do not resolve.
pub fn score_itinerary(
    it: &Itinerary,
    hard: HardScore,
    sandbox: &Sandbox,
    budget: f64,
    preference: &dyn PreferenceModel,
    reference: Option<&Itinerary>,
    cfg: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(RewardError::Invalid(format!("budget must be positive, got {budget}")));
    }
    let cost = total_cost(it, sandbox).unwrap_or(it.total_cost);
    let d_ref = match reference {
        Some(r) => route_stats(r, sandbox)?.d_avg,
        None => cfg.default_d_ref_km,
    };
    let s_route = match route_stats(it, sandbox) {
        Ok(s) if d_ref > 0.0 => route_score(s.d_avg, d_ref),
        Ok(_) => 1.0,
        Err(RewardError::NoLocatedDays) => 0.0,
        Err(e) => return Err(e),
    };
    let raw = score_preference(preference, &it.query, &it.canonical_text())?;
    let soft = SoftScore::new(budget_score(cost, budget), s_route, preference_score(raw));
    Ok(total_reward(hard, soft, &cfg.gate))
}

pub const EPS_LOW: f64 = 0.0003;
pub const EPS_HIGH: f64 = 0.0004;

/// Rewards normalized within the group by mean and population std.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, RewardError> {
    if rewards.len() < 2 {
        return Err(RewardError::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std < 1e-12 {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Length-normalized sequence likelihood ratio.
pub fn seq_importance_ratio(logp_new: &[f64], logp_old: &[f64]) -> Result<f64, RewardError> {
    if logp_new.len() != logp_old.len() {
        return Err(RewardError::LengthMismatch {
            new: logp_new.len(),
            old: logp_old.len(),
        });
    }
    if logp_new.is_empty() {
        return Err(RewardError::EmptySequence);
    }
    let sum: f64 = logp_new.iter().zip(logp_old).map(|(a, b)| a - b).sum();
    Ok((sum / logp_new.len() as f64).exp())
}

pub fn gspo_objective(ratios: &[f64], advantages: &[f64], eps_low: f64, eps_high: f64) -> Result<f64, RewardError> {
    if ratios.len() != advantages.len() {
        return Err(RewardError::DimensionMismatch {
            what: "advantages",
            expected: ratios.len(),
            got: advantages.len(),
        });
    }
    if ratios.is_empty() {
        return Err(RewardError::GroupTooSmall(0));
    }
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(RewardError::Invalid(format!("ratio {r} is not positive")));
    }
    let sum: f64 = ratios
        .iter()
        .zip(advantages)
        .map(|(&r, &a)| (r * a).min(r.clamp(1.0 - eps_low, 1.0 + eps_high) * a))
        .sum();
    Ok(sum / ratios.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub logp_new: Vec<f64>,
    pub logp_old: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GspoBatch {
    pub rewards: Vec<f64>,
    pub rollouts: Vec<Rollout>,
    #[serde(default = "default_eps_low")]
    pub eps_low: f64,
    #[serde(default = "default_eps_high")]
    pub eps_high: f64,
}

fn default_eps_low() -> f64 {
    EPS_LOW
}

fn default_eps_high() -> f64 {
    EPS_HIGH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GspoResult {
    pub advantages: Vec<f64>,
    pub ratios: Vec<f64>,
    pub objective: f64,
}

impl GspoBatch {
    pub fn evaluate(&self) -> Result<GspoResult, RewardError> {
        if self.rollouts.len() != self.rewards.len() {
            return Err(RewardError::DimensionMismatch {
                what: "rollouts",
                expected: self.rewards.len(),
                got: self.rollouts.len(),
            });
        }
        let advantages = group_advantages(&self.rewards)?;
        let ratios = self
            .rollouts
            .iter()
            .map(|r| seq_importance_ratio(&r.logp_new, &r.logp_old))
            .collect::<Result<Vec<_>, _>>()?;
        let objective = gspo_objective(&ratios, &advantages, self.eps_low, self.eps_high)?;
        Ok(GspoResult {
            advantages,
            ratios,
            objective,
        })
    }
}
