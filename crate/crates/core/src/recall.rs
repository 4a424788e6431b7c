//! Candidate attraction recall over three channels (semantic similarity,
//! landmark popularity, model suggestions) merged into one ranked pool.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::ExplicitDemands;
use crate::prompts;
use crate::providers::{
    chat_structured, embed, parse_json_document, ChatModel, ChatRequest, Embedder, ProviderConfig, ProviderError,
};
use crate::sandbox::{Attraction, Grade, Sandbox};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecallError {
    #[error("ground truth is empty")]
    EmptyTruth,
    #[error("no attractions to recall from")]
    NoAttractions,
    #[error("recall count must be at least 1")]
    ZeroCount,
    #[error("embedding failed: {0}")]
    Embedder(ProviderError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallConfig {
    pub semantic_count: usize,
    pub total_count: usize,
    pub landmark_grade_floor: Grade,
}

impl RecallConfig {
    pub const SEMANTIC_PER_DAY: usize = 3;
    pub const TOTAL_PER_DAY: usize = 9;

    pub fn for_duration(duration_days: usize) -> Self {
        let d = duration_days.max(1);
        RecallConfig {
            semantic_count: Self::SEMANTIC_PER_DAY * d,
            total_count: Self::TOTAL_PER_DAY * d,
            landmark_grade_floor: Grade::FourA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Semantic,
    Landmark,
    Suggested,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub provenance: Provenance,
    /// Score within the originating channel.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateSet {
    pub attractions: Vec<Candidate>,
}

impl CandidateSet {
    pub fn ids(&self) -> Vec<&str> {
        self.attractions.iter().map(|c| c.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.attractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attractions.is_empty()
    }

    pub fn count_of(&self, p: Provenance) -> usize {
        self.attractions.iter().filter(|c| c.provenance == p).count()
    }
}

fn by_score_then_popularity(a: (&Attraction, f64), b: (&Attraction, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then(b.0.popularity.total_cmp(&a.0.popularity))
        .then(a.0.id.cmp(&b.0.id))
}

/// Top-`n` attractions by cosine similarity to the profile. The query is
/// the joined interest text plus each requirement phrase on its own; an
/// attraction scores its best match across those query texts.
pub fn semantic_recall(
    demands: &ExplicitDemands,
    attractions: &[&Attraction],
    embedder: &dyn Embedder,
    n: usize,
) -> Result<Vec<Scored>, RecallError> {
    if n == 0 {
        return Err(RecallError::ZeroCount);
    }
    if attractions.is_empty() {
        return Err(RecallError::NoAttractions);
    }
    let mut queries = vec![demands.interest_text()];
    for r in &demands.other_requirements {
        if !queries.contains(r) {
            queries.push(r.clone());
        }
    }
    semantic_rank(&queries, attractions, embedder, n)
}

pub fn semantic_rank(
    queries: &[String],
    attractions: &[&Attraction],
    embedder: &dyn Embedder,
    n: usize,
) -> Result<Vec<Scored>, RecallError> {
    let mut texts: Vec<String> = queries.to_vec();
    texts.extend(attractions.iter().map(|a| a.feature_text.clone()));
    let vecs = embed(embedder, &texts).map_err(RecallError::Embedder)?;
    let (qv, av) = vecs.split_at(queries.len());
    let mut scored: Vec<(&Attraction, f64)> = attractions
        .iter()
        .zip(av)
        .map(|(a, v)| {
            let best = qv
                .iter()
                .filter_map(|q| q.cosine(v))
                .fold(f64::NEG_INFINITY, f64::max);
            (*a, if best.is_finite() { best } else { 0.0 })
        })
        .collect();
    scored.sort_by(|a, b| by_score_then_popularity(*a, *b));
    Ok(scored
        .into_iter()
        .take(n)
        .map(|(a, s)| Scored {
            id: a.id.clone(),
            score: s,
        })
        .collect())
}

/// Graded landmarks ordered by popularity, then rating, then id.
pub fn landmark_recall(attractions: &[&Attraction], cfg: &RecallConfig, n: usize) -> Vec<Scored> {
    let mut picks: Vec<&Attraction> = attractions
        .iter()
        .copied()
        .filter(|a| a.grade >= cfg.landmark_grade_floor)
        .collect();
    picks.sort_by(|a, b| {
        b.popularity
            .total_cmp(&a.popularity)
            .then(b.rating.total_cmp(&a.rating))
            .then(a.id.cmp(&b.id))
    });
    picks
        .into_iter()
        .take(n)
        .map(|a| Scored {
            id: a.id.clone(),
            score: a.popularity,
        })
        .collect()
}

/// Names in a suggestion reply; an empty reply is an empty list.
pub fn parse_suggestion_reply(reply: &str) -> Result<Vec<String>, String> {
    if reply.trim().is_empty() {
        return Ok(Vec::new());
    }
    let v: serde_json::Value = parse_json_document(reply)?;
    let arr = v.as_array().ok_or("expected a JSON array of names")?;
    Ok(arr.iter().filter_map(|x| x.as_str().map(str::to_string)).collect())
}

/// Attractions suggested by a chat model, kept only when they resolve in
/// the sandbox. Order follows the reply; duplicates are dropped.
pub fn llm_recall(
    query: &str,
    city: &str,
    sandbox: &Sandbox,
    model: &dyn ChatModel,
    cfg: &ProviderConfig,
) -> Result<Vec<Scored>, RecallError> {
    let names: Vec<&str> = sandbox.attractions_in(city).map(|a| a.name.as_str()).collect();
    let prompt = prompts::recall_prompt(city, query, &names.join("; "));
    let req = ChatRequest::structured(prompts::SYSTEM, prompt);
    let suggested = chat_structured(model, &req, cfg, parse_suggestion_reply)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (rank, name) in suggested.iter().enumerate() {
        match sandbox.resolve_attraction(city, name) {
            Some(a) if seen.insert(a.id.clone()) => out.push(Scored {
                id: a.id.clone(),
                score: 1.0 / (rank + 1) as f64,
            }),
            Some(_) => {}
            None => log::info!("dropping unknown suggested attraction {name:?}"),
        }
    }
    Ok(out)
}

/// Round-robin by rank across channels in priority order; the first
/// channel to contribute an id keeps it.
pub fn merge_recall(semantic: &[Scored], landmark: &[Scored], suggested: &[Scored], cfg: &RecallConfig) -> CandidateSet {
    let channels = [
        (&semantic[..semantic.len().min(cfg.semantic_count)], Provenance::Semantic),
        (landmark, Provenance::Landmark),
        (suggested, Provenance::Suggested),
    ];
    let mut seen: HashSet<&str> = HashSet::new();
    let mut out = Vec::new();
    let deepest = channels.iter().map(|(c, _)| c.len()).max().unwrap_or(0);
    'fill: for rank in 0..deepest {
        for (list, prov) in &channels {
            if out.len() >= cfg.total_count {
                break 'fill;
            }
            if let Some(s) = list.get(rank) {
                if seen.insert(s.id.as_str()) {
                    out.push(Candidate {
                        id: s.id.clone(),
                        provenance: *prov,
                        score: s.score,
                    });
                }
            }
        }
    }
    CandidateSet { attractions: out }
}

pub fn recall_rate(candidate_ids: &[&str], truth: &[&str]) -> Result<f64, RecallError> {
    let truth: HashSet<&str> = truth.iter().copied().collect();
    if truth.is_empty() {
        return Err(RecallError::EmptyTruth);
    }
    let cands: HashSet<&str> = candidate_ids.iter().copied().collect();
    Ok(truth.intersection(&cands).count() as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallOutcome {
    pub config: RecallConfig,
    pub semantic: Vec<Scored>,
    pub landmark: Vec<Scored>,
    pub suggested: Vec<Scored>,
    pub merged: CandidateSet,
}

/// Run every channel for the destination city and merge.
pub fn recall_candidates(
    demands: &ExplicitDemands,
    query: &str,
    sandbox: &Sandbox,
    embedder: &dyn Embedder,
    suggester: Option<(&dyn ChatModel, &ProviderConfig)>,
) -> Result<RecallOutcome, RecallError> {
    let config = RecallConfig::for_duration(demands.duration_days as usize);
    let pool: Vec<&Attraction> = sandbox.attractions_in(&demands.dest_city).collect();
    let semantic = semantic_recall(demands, &pool, embedder, config.semantic_count)?;
    let landmark = landmark_recall(&pool, &config, config.total_count);
    let suggested = match suggester {
        Some((model, cfg)) => llm_recall(query, &demands.dest_city, sandbox, model, cfg)?,
        None => Vec::new(),
    };
    let merged = merge_recall(&semantic, &landmark, &suggested, &config);
    Ok(RecallOutcome {
        config,
        semantic,
        landmark,
        suggested,
        merged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::TimeWindow;
    use crate::providers::mock::HashEmbedder;
    use crate::sandbox::DurationBounds;
    use proptest::prelude::*;

    fn attraction(id: &str, grade: Grade, popularity: f64, rating: f64, text: &str) -> Attraction {
        Attraction {
            id: id.into(),
            name: format!("Place {id}"),
            city: "C".into(),
            lat: 30.0,
            lon: 114.0,
            grade,
            popularity,
            rating,
            entrance_fee: 0.0,
            opening_hours: TimeWindow::hm((8, 0), (18, 0)),
            last_admission: None,
            recommended_duration: DurationBounds {
                min_hours: 1.0,
                max_hours: 2.0,
            },
            feature_text: text.into(),
            serves_food: false,
            cluster_label: None,
        }
    }

    fn scored(ids: &[&str]) -> Vec<Scored> {
        ids.iter()
            .map(|id| Scored {
                id: id.to_string(),
                score: 1.0,
            })
            .collect()
    }

    #[test]
    fn counts_follow_duration() {
        let c = RecallConfig::for_duration(4);
        assert_eq!((c.semantic_count, c.total_count), (12, 36));
    }

    #[test]
    fn self_similar_text_ranks_first() {
        let attrs = [
            attraction("a", Grade::Ungraded, 1.0, 4.0, "quiet lake and gardens"),
            attraction("b", Grade::Ungraded, 9.0, 4.0, "ancient city wall history"),
            attraction("c", Grade::Ungraded, 5.0, 4.0, "night market snacks"),
        ];
        let refs: Vec<&Attraction> = attrs.iter().collect();
        let e = HashEmbedder::new(0);
        let out = semantic_rank(&["ancient city wall history".into()], &refs, &e, 10).unwrap();
        assert_eq!(out[0].id, "b");
        assert!((out[0].score - 1.0).abs() < 1e-12);
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn landmark_filter_and_order() {
        let attrs = [
            attraction("x", Grade::FiveA, 80.0, 4.0, ""),
            attraction("y", Grade::FiveA, 90.0, 4.0, ""),
            attraction("z", Grade::ThreeA, 99.0, 5.0, ""),
        ];
        let refs: Vec<&Attraction> = attrs.iter().collect();
        let cfg = RecallConfig::for_duration(1);
        let ids: Vec<String> = landmark_recall(&refs, &cfg, 10).into_iter().map(|s| s.id).collect();
        assert_eq!(ids, vec!["y", "x"]);
        assert!(landmark_recall(&refs[2..], &cfg, 10).is_empty());
    }

    #[test]
    fn same_poi_in_all_channels_is_semantic() {
        let cfg = RecallConfig::for_duration(1);
        let one = scored(&["p"]);
        let set = merge_recall(&one, &one, &one, &cfg);
        assert_eq!(set.len(), 1);
        assert_eq!(set.attractions[0].provenance, Provenance::Semantic);
    }

    #[test]
    fn disjoint_channels_fill_round_robin() {
        let cfg = RecallConfig::for_duration(4);
        let s: Vec<String> = (0..12).map(|i| format!("s{i}")).collect();
        let l: Vec<String> = (0..20).map(|i| format!("l{i}")).collect();
        let g: Vec<String> = (0..20).map(|i| format!("g{i}")).collect();
        let as_refs = |v: &Vec<String>| scored(&v.iter().map(String::as_str).collect::<Vec<_>>());
        let set = merge_recall(&as_refs(&s), &as_refs(&l), &as_refs(&g), &cfg);
        // Oracle: rank r contributes s_r, l_r, g_r in that order; 12 full rounds fill 36.
        let mut expected = Vec::new();
        for r in 0..12 {
            expected.extend([s[r].clone(), l[r].clone(), g[r].clone()]);
        }
        assert_eq!(set.ids(), expected.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(set.count_of(Provenance::Semantic), 12);
    }

    #[test]
    fn recall_rate_edges() {
        assert_eq!(recall_rate(&["a", "b", "c"], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(recall_rate(&["x"], &["a"]).unwrap(), 0.0);
        assert_eq!(recall_rate(&["x"], &[]), Err(RecallError::EmptyTruth));
    }

    #[test]
    fn suggestion_reply_forms() {
        assert!(parse_suggestion_reply("").unwrap().is_empty());
        assert_eq!(parse_suggestion_reply("[\"A\", \"B\"]").unwrap(), vec!["A", "B"]);
        assert!(parse_suggestion_reply("{\"a\": 1}").is_err());
    }

    fn arb_attractions() -> impl Strategy<Value = Vec<Attraction>> {
        prop::collection::vec(
            (0u8..4, 0u32..100, 0u32..50, prop::sample::select(vec!["museum", "park", "temple", "lake", "market"])),
            1..30,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (g, pop, rat, word))| {
                    let grade = [Grade::Ungraded, Grade::ThreeA, Grade::FourA, Grade::FiveA][g as usize];
                    attraction(&format!("a{i:03}"), grade, pop as f64, rat as f64 / 10.0, word)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn semantic_ranking_matches_brute_force(attrs in arb_attractions(), n in 1usize..40) {
            let refs: Vec<&Attraction> = attrs.iter().collect();
            let e = HashEmbedder::new(3);
            let q = "history museum".to_string();
            let got: Vec<String> = semantic_rank(std::slice::from_ref(&q), &refs, &e, n).unwrap().into_iter().map(|s| s.id).collect();
            let qv = e.vector(&q);
            let mut oracle: Vec<(f64, f64, String)> = attrs.iter().map(|a| {
                let v = e.vector(&a.feature_text);
                let dot: f64 = qv.0.iter().zip(&v.0).map(|(x, y)| x * y).sum();
                (dot, a.popularity, a.id.clone())
            }).collect();
            oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.partial_cmp(&a.1).unwrap()).then(a.2.cmp(&b.2)));
            let want: Vec<String> = oracle.into_iter().take(n).map(|t| t.2).collect();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn semantic_ranking_is_permutation_invariant(attrs in arb_attractions(), seed in any::<u64>()) {
            let e = HashEmbedder::new(5);
            let q = vec!["quiet park".to_string()];
            let refs: Vec<&Attraction> = attrs.iter().collect();
            let mut shuffled = refs.clone();
            let len = shuffled.len();
            for i in 0..len {
                shuffled.swap(i, (seed as usize).wrapping_mul(i + 7) % len);
            }
            prop_assert_eq!(semantic_rank(&q, &refs, &e, 50).unwrap(), semantic_rank(&q, &shuffled, &e, 50).unwrap());
        }

        #[test]
        fn landmark_order_matches_sort_oracle(attrs in arb_attractions()) {
            let refs: Vec<&Attraction> = attrs.iter().collect();
            let cfg = RecallConfig::for_duration(2);
            let got: Vec<String> = landmark_recall(&refs, &cfg, 100).into_iter().map(|s| s.id).collect();
            let mut want: Vec<&Attraction> = attrs.iter().filter(|a| matches!(a.grade, Grade::FourA | Grade::FiveA)).collect();
            want.sort_by(|a, b| (b.popularity, b.rating).partial_cmp(&(a.popularity, a.rating)).unwrap().then(a.id.cmp(&b.id)));
            prop_assert_eq!(got, want.into_iter().map(|a| a.id.clone()).collect::<Vec<_>>());
        }

        #[test]
        fn merge_is_bounded_and_unique(
            s in prop::collection::vec(0u8..60, 0..40),
            l in prop::collection::vec(0u8..60, 0..40),
            g in prop::collection::vec(0u8..60, 0..40),
            dur in 1usize..6,
        ) {
            let to = |v: &Vec<u8>| v.iter().map(|i| Scored { id: format!("p{i}"), score: 0.0 }).collect::<Vec<_>>();
            let cfg = RecallConfig::for_duration(dur);
            let set = merge_recall(&to(&s), &to(&l), &to(&g), &cfg);
            prop_assert!(set.len() <= 9 * dur);
            let ids = set.ids();
            let uniq: HashSet<&str> = ids.iter().copied().collect();
            prop_assert_eq!(uniq.len(), ids.len());
        }

        #[test]
        fn dropping_a_channel_never_raises_recall(
            s in prop::collection::vec(0u8..30, 0..10),
            l in prop::collection::vec(0u8..30, 0..10),
            g in prop::collection::vec(0u8..30, 0..10),
            truth in prop::collection::vec(0u8..30, 1..10),
        ) {
            let to = |v: &Vec<u8>| v.iter().map(|i| Scored { id: format!("p{i}"), score: 0.0 }).collect::<Vec<_>>();
            let cfg = RecallConfig { semantic_count: 100, total_count: 1000, landmark_grade_floor: Grade::FourA };
            let truth_ids: Vec<String> = truth.iter().map(|i| format!("p{i}")).collect();
            let truth_refs: Vec<&str> = truth_ids.iter().map(String::as_str).collect();
            let full = merge_recall(&to(&s), &to(&l), &to(&g), &cfg);
            let partial = merge_recall(&to(&s), &to(&l), &[], &cfg);
            prop_assert!(recall_rate(&partial.ids(), &truth_refs).unwrap() <= recall_rate(&full.ids(), &truth_refs).unwrap());
        }
    }
}
