//! Great-circle distances and density clustering of attractions.
//!
//! Epsilon is expressed in kilometres under the haversine metric. When the
//! initial radius yields fewer clusters than the trip has days, the radius
//! shrinks geometrically until enough clusters appear or the floor is hit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sandbox::{Attraction, Hotel, Restaurant, Sandbox};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const NOISE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("need at least {needed} points to cluster, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("clustering produced no clusters (every point is noise)")]
    NoClusters,
    #[error("invalid cluster config: {0}")]
    InvalidConfig(String),
}

pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub min_samples: usize,
    pub eps0_km: f64,
    pub min_clusters: usize,
    pub eps_decay: f64,
    pub eps_floor_km: f64,
}

impl ClusterConfig {
    pub fn for_duration(duration_days: usize) -> Self {
        ClusterConfig {
            min_clusters: duration_days,
            ..ClusterConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if self.min_samples == 0 {
            return Err(GeoError::InvalidConfig("min_samples must be >= 1".into()));
        }
        if !(self.eps_floor_km > 0.0 && self.eps_floor_km < self.eps0_km) {
            return Err(GeoError::InvalidConfig("need 0 < eps_floor < eps0".into()));
        }
        if !(self.eps_decay > 0.0 && self.eps_decay < 1.0) {
            return Err(GeoError::InvalidConfig("need 0 < eps_decay < 1".into()));
        }
        Ok(())
    }

    /// Upper bound on clustering passes before the schedule reaches the floor.
    pub fn max_iterations(&self) -> usize {
        let steps = (self.eps_floor_km / self.eps0_km).ln() / self.eps_decay.ln();
        steps.ceil() as usize + 1
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            min_samples: 4,
            eps0_km: 1.0,
            min_clusters: 1,
            eps_decay: 0.8,
            eps_floor_km: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Per input point; [`NOISE`] for noise.
    pub labels: Vec<i32>,
    pub centroids: Vec<GeoPoint>,
    pub final_eps_km: f64,
    /// Number of clustering passes that were run.
    pub iterations: usize,
}

impl ClusterResult {
    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }
}

/// Neighbor lookup that prunes by latitude band: any pair within `eps` km
/// differs in latitude by at most `eps / R` radians.
struct BandIndex<'a> {
    points: &'a [GeoPoint],
    by_lat: Vec<usize>,
    band_deg: f64,
    eps: f64,
}

impl<'a> BandIndex<'a> {
    fn new(points: &'a [GeoPoint], eps: f64) -> Self {
        let mut by_lat: Vec<usize> = (0..points.len()).collect();
        by_lat.sort_by(|&a, &b| points[a].lat.total_cmp(&points[b].lat).then(a.cmp(&b)));
        BandIndex {
            points,
            by_lat,
            band_deg: (eps / EARTH_RADIUS_KM).to_degrees() + 1e-12,
            eps,
        }
    }

    /// Indices within `eps` of point `i` (including `i`), ascending.
    fn neighbors(&self, i: usize) -> Vec<usize> {
        let p = self.points[i];
        let lo = self
            .by_lat
            .partition_point(|&j| self.points[j].lat < p.lat - self.band_deg);
        let mut out: Vec<usize> = self.by_lat[lo..]
            .iter()
            .take_while(|&&j| self.points[j].lat <= p.lat + self.band_deg)
            .copied()
            .filter(|&j| haversine(p, self.points[j]) <= self.eps)
            .collect();
        out.sort_unstable();
        out
    }
}

/// DBSCAN with `eps` in km. A point is core when at least `min_samples`
/// points (itself included) lie within `eps`. Clusters are numbered in the
/// order their first core point appears; border points join the first
/// cluster that reaches them.
pub fn dbscan(points: &[GeoPoint], eps: f64, min_samples: usize) -> Vec<i32> {
    assert!(eps > 0.0, "eps must be positive");
    assert!(min_samples >= 1, "min_samples must be at least 1");
    const UNSEEN: i32 = -2;
    let index = BandIndex::new(points, eps);
    let mut labels = vec![UNSEEN; points.len()];
    let mut next_label = 0;
    for seed in 0..points.len() {
        if labels[seed] != UNSEEN {
            continue;
        }
        let seed_neighbors = index.neighbors(seed);
        if seed_neighbors.len() < min_samples {
            labels[seed] = NOISE;
            continue;
        }
        let label = next_label;
        next_label += 1;
        labels[seed] = label;
        let mut frontier: std::collections::VecDeque<usize> = seed_neighbors.into();
        while let Some(q) = frontier.pop_front() {
            if labels[q] == NOISE {
                labels[q] = label;
            }
            if labels[q] != UNSEEN {
                continue;
            }
            labels[q] = label;
            let reach = index.neighbors(q);
            if reach.len() >= min_samples {
                frontier.extend(reach);
            }
        }
    }
    labels
}

fn centroids(points: &[GeoPoint], labels: &[i32]) -> Vec<GeoPoint> {
    let k = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        if l >= 0 {
            let s = &mut sums[l as usize];
            s.0 += p.lat;
            s.1 += p.lon;
            s.2 += 1;
        }
    }
    sums.into_iter()
        .map(|(lat, lon, n)| GeoPoint::new(lat / n as f64, lon / n as f64))
        .collect()
}

pub fn adaptive_cluster(points: &[GeoPoint], cfg: &ClusterConfig) -> Result<ClusterResult, GeoError> {
    cfg.validate()?;
    if points.len() < cfg.min_samples {
        return Err(GeoError::InsufficientPoints {
            needed: cfg.min_samples,
            got: points.len(),
        });
    }
    let mut eps = cfg.eps0_km;
    let mut iterations = 0;
    loop {
        let labels = dbscan(points, eps, cfg.min_samples);
        iterations += 1;
        let centroids = centroids(points, &labels);
        if centroids.len() >= cfg.min_clusters || eps <= cfg.eps_floor_km {
            log::debug!("clustering settled at eps={eps:.4} km with {} clusters", centroids.len());
            return Ok(ClusterResult {
                labels,
                centroids,
                final_eps_km: eps,
                iterations,
            });
        }
        eps *= cfg.eps_decay;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueAnchor {
    pub id: String,
    pub label: i32,
    pub distance_km: f64,
}

/// Attractions labeled by clustering plus hotels and restaurants labeled by
/// their nearest centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchoredView {
    pub attraction_labels: Vec<(String, i32)>,
    pub hotels: Vec<VenueAnchor>,
    pub restaurants: Vec<VenueAnchor>,
    pub centroids: Vec<GeoPoint>,
}

impl AnchoredView {
    /// A copy of `sandbox` whose entities carry these cluster labels.
    pub fn label_sandbox(&self, sandbox: &Sandbox) -> Sandbox {
        let a: HashMap<String, i32> = self.attraction_labels.iter().cloned().collect();
        let r: HashMap<String, i32> = self.restaurants.iter().map(|v| (v.id.clone(), v.label)).collect();
        let h: HashMap<String, i32> = self.hotels.iter().map(|v| (v.id.clone(), v.label)).collect();
        sandbox.with_labels(&a, &r, &h)
    }
}

/// Nearest centroid; equidistant centroids resolve to the lower index.
pub fn nearest_centroid(centroids: &[GeoPoint], p: GeoPoint) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &c) in centroids.iter().enumerate() {
        let d = haversine(p, c);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best
}

pub fn anchor(
    clusters: &ClusterResult,
    attractions: &[&Attraction],
    hotels: &[&Hotel],
    restaurants: &[&Restaurant],
) -> Result<AnchoredView, GeoError> {
    assert_eq!(
        clusters.labels.len(),
        attractions.len(),
        "cluster labels must come from the same attraction list"
    );
    if clusters.centroids.is_empty() {
        return Err(GeoError::NoClusters);
    }
    let place = |id: &str, lat: f64, lon: f64| {
        let (label, distance_km) =
            nearest_centroid(&clusters.centroids, GeoPoint::new(lat, lon)).expect("centroids non-empty");
        VenueAnchor {
            id: id.to_string(),
            label: label as i32,
            distance_km,
        }
    };
    Ok(AnchoredView {
        attraction_labels: attractions
            .iter()
            .zip(&clusters.labels)
            .map(|(a, &l)| (a.id.clone(), l))
            .collect(),
        hotels: hotels.iter().map(|h| place(&h.id, h.lat, h.lon)).collect(),
        restaurants: restaurants.iter().map(|r| place(&r.id, r.lat, r.lon)).collect(),
        centroids: clusters.centroids.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haversine_identity_and_degree() {
        let p = GeoPoint::new(34.0, 108.9);
        assert_eq!(haversine(p, p), 0.0);
        // one degree of longitude on the equator = 2*pi*6371/360
        let d = haversine(GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 1.0));
        assert!((d - 111.19492664455873).abs() < 1e-9, "{d}");
    }

    #[test]
    fn coincident_points_form_one_cluster() {
        let pts = vec![GeoPoint::new(30.0, 114.0); 5];
        assert_eq!(dbscan(&pts, 1.0, 4), vec![0; 5]);
    }

    #[test]
    fn isolated_point_is_noise() {
        let mut pts = vec![GeoPoint::new(30.0, 114.0); 4];
        pts.push(GeoPoint::new(30.9, 114.0)); // ~100 km north
        let labels = dbscan(&pts, 1.0, 4);
        assert_eq!(labels[4], NOISE);
        assert_eq!(&labels[..4], &[0, 0, 0, 0]);
    }

    #[test]
    fn iteration_bound_for_defaults() {
        // ceil(ln(0.1)/ln(0.8)) + 1 = ceil(10.318) + 1
        assert_eq!(ClusterConfig::default().max_iterations(), 12);
    }

    #[test]
    fn one_blob_runs_to_the_floor() {
        let pts: Vec<_> = (0..12)
            .map(|i| GeoPoint::new(30.0 + 0.0001 * i as f64, 114.0))
            .collect();
        let cfg = ClusterConfig::for_duration(3);
        let res = adaptive_cluster(&pts, &cfg).unwrap();
        assert!(res.final_eps_km <= cfg.eps_floor_km);
        assert_eq!(res.iterations, cfg.max_iterations());
        assert!(res.cluster_count() < 3);
    }

    #[test]
    fn insufficient_points() {
        let pts = vec![GeoPoint::new(0.0, 0.0); 3];
        assert_eq!(
            adaptive_cluster(&pts, &ClusterConfig::default()),
            Err(GeoError::InsufficientPoints { needed: 4, got: 3 })
        );
    }

    #[test]
    fn equidistant_venue_takes_lower_cluster() {
        let c = vec![GeoPoint::new(0.0, -0.01), GeoPoint::new(0.0, 0.01)];
        let (i, _) = nearest_centroid(&c, GeoPoint::new(0.0, 0.0)).unwrap();
        assert_eq!(i, 0);
    }
}
