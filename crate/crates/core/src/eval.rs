//! Benchmark metrics over a set of generated plans paired with references:
//! feasibility and rationality pass rates, route distance ratio, final pass
//! rate and a judge-based surpassing rate.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{completeness_violations, hard_score, sandbox_violations, total_cost};
use crate::itinerary::{ActivityType, Itinerary};
use crate::profile::{city_stats, extract_rule_based, infer_preferences, ExplicitDemands, ProfileError};
use crate::providers::{judge_pair, map_bounded, ChatModel, ProviderConfig};
use crate::reward::{route_stats, RewardError};
use crate::sandbox::{normalize_name, DaySlot, Sandbox, TransportLeg};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no rows to aggregate")]
    EmptyInput,
    #[error("flag rows differ in length")]
    RaggedRows,
    #[error("unparseable case: {0}")]
    Parse(String),
    #[error("case {id}: generated plan goes to {generated:?} but the reference goes to {reference:?}")]
    CityMismatch {
        id: String,
        generated: String,
        reference: String,
    },
    #[error("reference route has zero length")]
    ZeroReference,
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Route(#[from] RewardError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Meal prices may fall this fraction outside the profile meal range.
    pub meal_price_slack: f64,
    /// Generated route may be at most this multiple of the reference length.
    pub route_factor: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            meal_price_slack: 0.5,
            route_factor: 1.5,
        }
    }
}

/// A generated plan with its reference. Demands and meal range are derived
/// from the query and sandbox when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCase {
    #[serde(default)]
    pub id: String,
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<ExplicitDemands>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meal_range: Option<(f64, f64)>,
    pub generated: Itinerary,
    pub reference: Itinerary,
}

impl PlanCase {
    pub fn check(&self) -> Result<(), EvalError> {
        if normalize_name(&self.generated.dest_city) != normalize_name(&self.reference.dest_city) {
            return Err(EvalError::CityMismatch {
                id: self.id.clone(),
                generated: self.generated.dest_city.clone(),
                reference: self.reference.dest_city.clone(),
            });
        }
        Ok(())
    }

    pub fn demands(&self) -> Result<ExplicitDemands, EvalError> {
        match &self.demands {
            Some(d) => Ok(d.clone()),
            None => Ok(extract_rule_based(&self.query)?),
        }
    }

    pub fn meal_range(&self, demands: &ExplicitDemands, sandbox: &Sandbox) -> Result<(f64, f64), EvalError> {
        match self.meal_range {
            Some(r) => Ok(r),
            None => Ok(infer_preferences(demands, &city_stats(sandbox, &demands.dest_city)?)?.meal_range),
        }
    }
}

pub const FEASIBILITY_FLAGS: [&str; 4] = ["sandbox", "completeness", "departure", "return"];
pub const RATIONALITY_FLAGS: [&str; 6] = [
    "diverse_restaurants",
    "reasonable_meal_prices",
    "diverse_attractions",
    "appropriate_visit_duration",
    "appropriate_visit_time",
    "budget_limit",
];

fn leg_matches(
    leg: Option<&TransportLeg>,
    from: &str,
    to: &str,
    slot: Option<DaySlot>,
) -> bool {
    leg.is_some_and(|l| {
        normalize_name(&l.origin_city) == normalize_name(from)
            && normalize_name(&l.dest_city) == normalize_name(to)
            && slot.is_none_or(|s| DaySlot::of(l.depart) == s)
    })
}

/// Flags in [`FEASIBILITY_FLAGS`] order.
pub fn feasibility(it: &Itinerary, demands: &ExplicitDemands, sandbox: &Sandbox) -> Vec<bool> {
    let cities_ok = normalize_name(&it.origin_city) == normalize_name(&demands.origin_city)
        && normalize_name(&it.dest_city) == normalize_name(&demands.dest_city);
    let transport = it.transport.as_ref();
    let leg = |r: Option<&crate::itinerary::TransportRef>| r.and_then(|r| sandbox.resolve_transport(&r.id));
    let outbound = leg(transport.and_then(|t| t.outbound.as_ref()));
    let inbound = leg(transport.and_then(|t| t.inbound.as_ref()));
    vec![
        sandbox_violations(it, sandbox).is_empty(),
        completeness_violations(it, demands).is_empty(),
        cities_ok && leg_matches(outbound, &demands.origin_city, &demands.dest_city, demands.departure_slot),
        cities_ok && leg_matches(inbound, &demands.dest_city, &demands.origin_city, demands.return_slot),
    ]
}

/// Flags in [`RATIONALITY_FLAGS`] order.
pub fn rationality(
    it: &Itinerary,
    demands: &ExplicitDemands,
    meal_range: (f64, f64),
    sandbox: &Sandbox,
    cfg: &EvalConfig,
) -> Vec<bool> {
    let h = hard_score(it, sandbox, demands);
    let (lo, hi) = meal_range;
    let (lo, hi) = (lo * (1.0 - cfg.meal_price_slack), hi * (1.0 + cfg.meal_price_slack));
    let meals_ok = it
        .days
        .iter()
        .flat_map(|d| d.steps_of(ActivityType::Meal))
        .all(|s| {
            sandbox
                .resolve_restaurant(&it.dest_city, &s.name)
                .is_some_and(|r| r.avg_price >= lo && r.avg_price <= hi)
        });
    let cost = total_cost(it, sandbox).unwrap_or(it.total_cost);
    vec![
        h.i_rest == 1,
        meals_ok,
        h.i_attr == 1,
        h.i_dur == 1,
        h.i_time == 1,
        cost <= demands.budget,
    ]
}

/// Per-flag pass fraction and all-pass row fraction over a flag matrix.
pub fn micro_macro(rows: &[Vec<bool>]) -> Result<(f64, f64), EvalError> {
    let width = rows.first().map_or(0, Vec::len);
    if width == 0 {
        return Err(EvalError::EmptyInput);
    }
    if rows.iter().any(|r| r.len() != width) {
        return Err(EvalError::RaggedRows);
    }
    let total = width * rows.len();
    let passed = rows.iter().flatten().filter(|f| **f).count();
    let all_pass = rows.iter().filter(|r| r.iter().all(|f| *f)).count();
    Ok((passed as f64 / total as f64, all_pass as f64 / rows.len() as f64))
}

pub fn distance_ratio(generated: &Itinerary, reference: &Itinerary, sandbox: &Sandbox) -> Result<f64, EvalError> {
    let g = route_stats(generated, sandbox)?;
    let r = route_stats(reference, sandbox)?;
    if r.d_avg <= 0.0 {
        return Err(EvalError::ZeroReference);
    }
    Ok(g.d_avg / r.d_avg)
}

/// All flags pass and the generated route is at most `route_factor` times
/// the reference length (inclusive).
pub fn final_pass(flags: &[bool], generated_km: f64, reference_km: f64, cfg: &EvalConfig) -> bool {
    flags.iter().all(|f| *f) && generated_km <= cfg.route_factor * reference_km
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub id: String,
    pub feasibility: Vec<bool>,
    pub rationality: Vec<bool>,
    pub distance_ratio: Option<f64>,
    pub final_pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge: Option<(u8, u8)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub const METRIC_DEFINITIONS: &str = "micro = passed flags / all flags; macro = share of cases passing every flag; \
surpassing counts ties (generated >= reference)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub definitions: String,
    pub cases: usize,
    pub feasibility_micro: f64,
    pub feasibility_macro: f64,
    pub rationality_micro: f64,
    pub rationality_macro: f64,
    pub avg_route_distance_ratio: Option<f64>,
    pub final_pass_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_surpassing_rate: Option<f64>,
    pub rows: Vec<CaseRow>,
}

/// Flags, route ratio and final pass for one case.
pub fn evaluate_case(case: &PlanCase, sandbox: &Sandbox, cfg: &EvalConfig) -> Result<CaseRow, EvalError> {
    case.check()?;
    let demands = case.demands()?;
    let meal_range = case.meal_range(&demands, sandbox)?;
    let feas = feasibility(&case.generated, &demands, sandbox);
    let rat = rationality(&case.generated, &demands, meal_range, sandbox, cfg);
    let (ratio, passed) = match (route_stats(&case.generated, sandbox), route_stats(&case.reference, sandbox)) {
        (Ok(g), Ok(r)) => {
            let flags: Vec<bool> = feas.iter().chain(&rat).copied().collect();
            let ratio = (r.d_avg > 0.0).then(|| g.d_avg / r.d_avg);
            (ratio, final_pass(&flags, g.total_km(), r.total_km(), cfg))
        }
        _ => (None, false),
    };
    Ok(CaseRow {
        id: case.id.clone(),
        feasibility: feas,
        rationality: rat,
        distance_ratio: ratio,
        final_pass: passed,
        judge: None,
        error: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurpassOutcome {
    /// `None` when every case failed to be judged.
    pub rate: Option<f64>,
    pub scores: Vec<Option<(u8, u8)>>,
    pub errors: Vec<(String, String)>,
}

/// Share of cases whose generated plan scores at least the reference; cases
/// whose judge call fails are skipped.
pub fn surpass_rate(cases: &[PlanCase], judge: &dyn ChatModel, cfg: &ProviderConfig) -> SurpassOutcome {
    let verdicts = map_bounded(cases, cfg.parallelism_limit, |c| {
        judge_pair(
            judge,
            &c.query,
            &c.generated.canonical_text(),
            &c.reference.canonical_text(),
            cfg,
        )
    });
    let mut scores = Vec::with_capacity(cases.len());
    let mut errors = Vec::new();
    let (mut judged, mut wins) = (0usize, 0usize);
    for (c, v) in cases.iter().zip(verdicts) {
        match v {
            Ok(v) => {
                judged += 1;
                wins += usize::from(v.score_a >= v.score_b);
                scores.push(Some((v.score_a, v.score_b)));
            }
            Err(e) => {
                log::warn!("judge failed on case {}: {e}", c.id);
                errors.push((c.id.clone(), e.to_string()));
                scores.push(None);
            }
        }
    }
    SurpassOutcome {
        rate: (judged > 0).then(|| wins as f64 / judged as f64),
        scores,
        errors,
    }
}

/// Evaluate every case and aggregate. Cases that cannot be evaluated count
/// as failing every flag.
pub fn evaluate(
    cases: &[PlanCase],
    sandbox: &Sandbox,
    cfg: &EvalConfig,
    judge: Option<(&dyn ChatModel, &ProviderConfig)>,
    parallelism: usize,
) -> Result<MetricsReport, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let results = map_bounded(cases, parallelism.max(1), |c| evaluate_case(c, sandbox, cfg));
    let mut rows: Vec<CaseRow> = cases
        .iter()
        .zip(results)
        .map(|(c, r)| {
            r.unwrap_or_else(|e| CaseRow {
                id: c.id.clone(),
                feasibility: vec![false; FEASIBILITY_FLAGS.len()],
                rationality: vec![false; RATIONALITY_FLAGS.len()],
                distance_ratio: None,
                final_pass: false,
                judge: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let surpass = judge.map(|(model, pcfg)| surpass_rate(cases, model, pcfg));
    if let Some(s) = &surpass {
        for (row, score) in rows.iter_mut().zip(&s.scores) {
            row.judge = *score;
        }
    }
    let feas: Vec<Vec<bool>> = rows.iter().map(|r| r.feasibility.clone()).collect();
    let rat: Vec<Vec<bool>> = rows.iter().map(|r| r.rationality.clone()).collect();
    let (feasibility_micro, feasibility_macro) = micro_macro(&feas)?;
    let (rationality_micro, rationality_macro) = micro_macro(&rat)?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.distance_ratio).collect();
    let seen: HashSet<&str> = rows.iter().map(|r| r.id.as_str()).collect();
    if seen.len() < rows.len() {
        log::warn!("case ids are not unique");
    }
    Ok(MetricsReport {
        definitions: METRIC_DEFINITIONS.to_string(),
        cases: rows.len(),
        feasibility_micro,
        feasibility_macro,
        rationality_micro,
        rationality_macro,
        avg_route_distance_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        final_pass_rate: rows.iter().filter(|r| r.final_pass).count() as f64 / rows.len() as f64,
        final_surpassing_rate: surpass.and_then(|s| s.rate),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::TimeWindow;
    use crate::providers::mock::ScriptedChat;
    use crate::sandbox::{xian_reference_trip, xian_sample};
    use proptest::prelude::*;

    fn case() -> PlanCase {
        let reference = xian_reference_trip();
        PlanCase {
            id: "ref".into(),
            query: reference.query.clone(),
            demands: None,
            meal_range: None,
            generated: reference.clone(),
            reference,
        }
    }

    #[test]
    fn reference_trip_is_feasible() {
        let sb = xian_sample();
        let c = case();
        let d = c.demands().unwrap();
        assert_eq!(feasibility(&c.generated, &d, &sb), vec![true; 4]);
        let h = hard_score(&c.generated, &sb, &d);
        let f = feasibility(&c.generated, &d, &sb);
        assert_eq!((f[0], f[1]), (h.i_sandbox == 1, h.i_comp == 1));
    }

    #[test]
    fn wrong_departure_city_fails_departure_only() {
        let sb = xian_sample();
        let c = case();
        let mut d = c.demands().unwrap();
        d.origin_city = "Beijing".into();
        let f = feasibility(&c.generated, &d, &sb);
        assert!(!f[2] && !f[3]);
        assert!(f[0]);
    }

    #[test]
    fn museum_visit_is_on_time_and_long_enough() {
        let sb = xian_sample();
        let c = case();
        let d = c.demands().unwrap();
        let r = rationality(&c.generated, &d, (30.0, 90.0), &sb, &EvalConfig::default());
        let step = &c.generated.days[0].steps[3];
        assert_eq!(step.window, TimeWindow::hm((12, 30), (17, 30)));
        assert!(r[3] && r[4]);
    }

    #[test]
    fn repeated_restaurant_fails_diversity() {
        let sb = xian_sample();
        let mut c = case();
        c.generated.days[2].steps[3].name = "Weng Kee Seafood".into();
        let d = c.demands().unwrap();
        let r = rationality(&c.generated, &d, (30.0, 300.0), &sb, &EvalConfig::default());
        assert!(!r[0]);
        assert!(r[2]);
    }

    #[test]
    fn micro_macro_fixture() {
        let rows = vec![vec![true, true], vec![true, false]];
        assert_eq!(micro_macro(&rows).unwrap(), (0.75, 0.5));
        assert_eq!(micro_macro(&vec![vec![true; 3]; 2]).unwrap(), (1.0, 1.0));
        assert!(matches!(micro_macro(&[]), Err(EvalError::EmptyInput)));
        assert!(matches!(micro_macro(&[vec![true], vec![true, false]]), Err(EvalError::RaggedRows)));
    }

    #[test]
    fn final_pass_threshold() {
        let cfg = EvalConfig::default();
        assert!(final_pass(&[true; 3], 12.0, 10.0, &cfg));
        assert!(final_pass(&[true; 3], 15.0, 10.0, &cfg));
        assert!(!final_pass(&[true; 3], 16.0, 10.0, &cfg));
        assert!(!final_pass(&[true, false], 1.0, 10.0, &cfg));
    }

    #[test]
    fn self_ratio_is_one() {
        let sb = xian_sample();
        let c = case();
        assert_eq!(distance_ratio(&c.generated, &c.reference, &sb).unwrap(), 1.0);
    }

    fn judge_reply(a: u8, b: u8) -> String {
        format!("#### Scoring Results:\n{{\"Personalization Evaluation\": {{\"Scores\": {{\"Plan A\": {a}, \"Plan B\": {b}}}}}}}")
    }

    #[test]
    fn surpass_counts_ties() {
        let cases = vec![case(), case()];
        let cfg = ProviderConfig::default();
        for ((a, b), want) in [((4, 3), 1.0), ((3, 3), 1.0), ((2, 5), 0.0)] {
            let judge = ScriptedChat::new(vec![judge_reply(a, b); 2]);
            assert_eq!(surpass_rate(&cases, &judge, &cfg).rate, Some(want));
        }
    }

    #[test]
    fn judge_errors_shrink_the_denominator() {
        let cases = vec![case(), case()];
        let cfg = ProviderConfig {
            max_retries: 0,
            parallelism_limit: 1,
            ..ProviderConfig::default()
        };
        let judge = ScriptedChat::new(vec![judge_reply(4, 3), "no scores here".into()]);
        let out = surpass_rate(&cases, &judge, &cfg);
        assert_eq!(out.rate, Some(1.0));
        assert_eq!(out.errors.len(), 1);
    }

    #[test]
    fn report_over_reference_case() {
        let sb = xian_sample();
        let r = evaluate(&[case()], &sb, &EvalConfig::default(), None, 2).unwrap();
        assert_eq!(r.feasibility_macro, 1.0);
        assert_eq!(r.avg_route_distance_ratio, Some(1.0));
        assert_eq!(r.rows[0].final_pass, r.rows[0].feasibility.iter().chain(&r.rows[0].rationality).all(|f| *f));
    }

    proptest! {
        #[test]
        fn macro_never_exceeds_micro(
            rows in (1usize..8).prop_flat_map(|w| prop::collection::vec(prop::collection::vec(any::<bool>(), w), 1..20)),
        ) {
            let (micro, macro_) = micro_macro(&rows).unwrap();
            prop_assert!(macro_ <= micro + 1e-12);
            prop_assert!((0.0..=1.0).contains(&micro) && (0.0..=1.0).contains(&macro_));
        }
    }
}
