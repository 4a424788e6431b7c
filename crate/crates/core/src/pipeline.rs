//! End-to-end planning: profile, recall, clustering, trip choices and
//! consensus day planning.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ccot::{plan_trip, CcotConfig, CcotError, Models, TripResult, TripSetup};
use crate::geo::{adaptive_cluster, anchor, AnchoredView, ClusterConfig, ClusterResult, GeoError, GeoPoint};
use crate::profile::{build_profile, ProfileError, UserProfile};
use crate::recall::{recall_candidates, RecallError, RecallOutcome};
use crate::sandbox::{Attraction, Hotel, Sandbox, TransportLeg};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Recall(#[from] RecallError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Planning(#[from] CcotError),
    #[error("no {what} available from {from} to {to}")]
    NoTransport { what: &'static str, from: String, to: String },
    #[error("no hotel in {0}")]
    NoHotel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub ccot: CcotConfig,
    /// Clustering settings; derived from the trip length when absent.
    pub cluster: Option<ClusterConfig>,
    /// Ask the chat model for demands instead of the rule-based parser.
    pub llm_profile: bool,
    /// Add chat-model suggestions as a recall channel.
    pub llm_recall: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ccot: CcotConfig::default(),
            cluster: None,
            llm_profile: true,
            llm_recall: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRun {
    pub profile: UserProfile,
    pub recall: RecallOutcome,
    pub clusters: ClusterResult,
    pub anchors: AnchoredView,
    pub hotel: Option<String>,
    pub outbound: String,
    pub inbound: String,
    pub trip: TripResult,
}

/// Cluster the candidates; when density clustering finds nothing, every
/// candidate joins one cluster around the mean position.
pub fn cluster_candidates(attractions: &[&Attraction], cfg: &ClusterConfig) -> Result<ClusterResult, GeoError> {
    cfg.validate()?;
    let points: Vec<GeoPoint> = attractions.iter().map(|a| GeoPoint::new(a.lat, a.lon)).collect();
    match adaptive_cluster(&points, cfg) {
        Ok(r) if r.cluster_count() > 0 => Ok(r),
        Ok(_) | Err(GeoError::InsufficientPoints { .. }) if !points.is_empty() => {
            log::info!("density clustering found no cluster; grouping all {} candidates", points.len());
            let n = points.len() as f64;
            let (lat, lon) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.lat, b + p.lon));
            Ok(ClusterResult {
                labels: vec![0; points.len()],
                centroids: vec![GeoPoint::new(lat / n, lon / n)],
                final_eps_km: cfg.eps_floor_km,
                iterations: 0,
            })
        }
        Ok(_) => Err(GeoError::NoClusters),
        Err(e) => Err(e),
    }
}

/// Hotel in the inferred category (any category when none exists), best
/// rated first, then cheapest, then by id.
pub fn choose_hotel<'a>(sandbox: &'a Sandbox, profile: &UserProfile) -> Option<&'a Hotel> {
    let city = &profile.explicit.dest_city;
    let in_category: Vec<&Hotel> = sandbox
        .hotels_in(city)
        .filter(|h| h.category == profile.inferred.hotel_category)
        .collect();
    let pool: Vec<&Hotel> = if in_category.is_empty() {
        sandbox.hotels_in(city).collect()
    } else {
        in_category
    };
    pool.into_iter().min_by(|a, b| {
        b.rating
            .total_cmp(&a.rating)
            .then(a.price_per_night.total_cmp(&b.price_per_night))
            .then_with(|| a.id.cmp(&b.id))
    })
}

/// Latest arrival that still leaves time to check in and go out.
const LATEST_ARRIVAL: u16 = 21 * 60 + 30;
/// Earliest return departure that leaves time to check out.
const EARLIEST_RETURN: u16 = 8 * 60;

/// Outbound and return legs honoring the requested slots when possible.
pub fn choose_legs<'a>(
    sandbox: &'a Sandbox,
    profile: &UserProfile,
) -> Result<(&'a TransportLeg, &'a TransportLeg), PipelineError> {
    let e = &profile.explicit;
    let outs: Vec<&TransportLeg> = sandbox.legs_between(&e.origin_city, &e.dest_city).collect();
    let rets: Vec<&TransportLeg> = sandbox.legs_between(&e.dest_city, &e.origin_city).collect();
    let missing = |what, from: &str, to: &str| PipelineError::NoTransport {
        what,
        from: from.to_string(),
        to: to.to_string(),
    };
    let pick_out = |pool: &[&'a TransportLeg]| {
        pool.iter()
            .copied()
            .filter(|l| l.arrive.minutes() <= LATEST_ARRIVAL)
            .min_by(|a, b| {
                (Some(a.day_slot) != e.departure_slot)
                    .cmp(&(Some(b.day_slot) != e.departure_slot))
                    .then(a.depart.cmp(&b.depart))
                    .then(a.price.total_cmp(&b.price))
                    .then_with(|| a.id.cmp(&b.id))
            })
    };
    let outbound = pick_out(&outs)
        .or_else(|| outs.iter().copied().min_by(|a, b| a.arrive.cmp(&b.arrive).then_with(|| a.id.cmp(&b.id))))
        .ok_or_else(|| missing("outbound leg", &e.origin_city, &e.dest_city))?;
    let single_day = profile.duration() == 1;
    let fits = |l: &TransportLeg| {
        if single_day {
            let ready = outbound.arrive.minutes() + 60 + l.mode.departure_buffer_minutes();
            l.depart.minutes() >= ready
        } else {
            l.depart.minutes() >= EARLIEST_RETURN
        }
    };
    let inbound = rets
        .iter()
        .copied()
        .filter(|l| fits(l))
        .min_by(|a, b| {
            (Some(a.day_slot) != e.return_slot)
                .cmp(&(Some(b.day_slot) != e.return_slot))
                .then(b.depart.cmp(&a.depart))
                .then(a.price.total_cmp(&b.price))
                .then_with(|| a.id.cmp(&b.id))
        })
        .or_else(|| rets.iter().copied().max_by(|a, b| a.depart.cmp(&b.depart).then_with(|| b.id.cmp(&a.id))))
        .ok_or_else(|| missing("return leg", &e.dest_city, &e.origin_city))?;
    Ok((outbound, inbound))
}

/// Run the full planner for `query` against `sandbox`.
pub fn run_pipeline(
    query: &str,
    sandbox: &Sandbox,
    models: &Models<'_>,
    cfg: &PipelineConfig,
    config_hash: &str,
) -> Result<PlanRun, PipelineError> {
    let chat = Some((models.chat, models.provider));
    let profile = build_profile(query, sandbox, if cfg.llm_profile { chat } else { None })?;
    let e = &profile.explicit;
    let recall = recall_candidates(e, query, sandbox, models.embedder, if cfg.llm_recall { chat } else { None })?;
    let candidates: Vec<&Attraction> = recall
        .merged
        .ids()
        .iter()
        .filter_map(|id| sandbox.attraction_by_id(id))
        .collect();
    let cluster_cfg = cfg
        .cluster
        .clone()
        .unwrap_or_else(|| ClusterConfig::for_duration(profile.duration()));
    let clusters = cluster_candidates(&candidates, &cluster_cfg)?;
    let hotels: Vec<&Hotel> = sandbox.hotels_in(&e.dest_city).collect();
    let restaurants: Vec<_> = sandbox.restaurants_in(&e.dest_city).collect();
    let anchors = anchor(&clusters, &candidates, &hotels, &restaurants)?;
    let labeled = anchors.label_sandbox(sandbox);

    let hotel = choose_hotel(&labeled, &profile);
    if profile.duration() >= 2 && hotel.is_none() {
        return Err(PipelineError::NoHotel(e.dest_city.clone()));
    }
    let (outbound, inbound) = choose_legs(&labeled, &profile)?;
    let setup = TripSetup {
        sandbox: &labeled,
        profile: &profile,
        candidates: candidates
            .iter()
            .filter_map(|a| labeled.attraction_by_id(&a.id))
            .collect(),
        restaurants: labeled.restaurants_in(&e.dest_city).collect(),
        hotel: hotel.filter(|_| profile.duration() >= 2),
        outbound,
        inbound,
    };
    let trip = plan_trip(&setup, models, &cfg.ccot, config_hash)?;
    Ok(PlanRun {
        hotel: setup.hotel.map(|h| h.name.clone()),
        outbound: outbound.id.clone(),
        inbound: inbound.id.clone(),
        profile: profile.clone(),
        recall,
        clusters,
        anchors,
        trip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{hard_score, validate_itinerary, RuleConfig};
    use crate::providers::mock::{HashEmbedder, MockChat};
    use crate::providers::ProviderConfig;
    use crate::sandbox::xian_sample;
    use crate::sim::OfflineResponder;

    const QUERY: &str = "I am looking for a 4-day trip from Wuhan to Xi'an, departing on Friday early morning and returning on Monday afternoon, with a budget of ¥4500. I'm interested in historical sites and museums.";

    #[test]
    fn sample_trip_is_fully_valid() {
        let sb = xian_sample();
        let chat = MockChat::new(OfflineResponder, 11);
        let embedder = HashEmbedder::new(11);
        let provider = ProviderConfig::default();
        let models = Models {
            chat: &chat,
            embedder: &embedder,
            provider: &provider,
        };
        let run = run_pipeline(QUERY, &sb, &models, &PipelineConfig::default(), "test").unwrap();
        let it = &run.trip.itinerary;
        assert_eq!(it.days.len(), 4);
        assert_eq!(run.outbound, "CA8219");
        for r in validate_itinerary(it, &sb, &RuleConfig::default()) {
            assert!(r.passed(), "{:?}", r.violation_lines());
        }
        let h = hard_score(it, &sb, &run.profile.explicit);
        assert_eq!(h.eta, 1.0, "{:?}", h.violations);
    }

    #[test]
    fn hotel_choice_prefers_category_then_rating() {
        let sb = xian_sample();
        let profile = build_profile(QUERY, &sb, None).unwrap();
        let h = choose_hotel(&sb, &profile).unwrap();
        assert_eq!(h.category, profile.inferred.hotel_category);
    }
}
