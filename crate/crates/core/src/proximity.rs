//! Real versus expected partner distances for sector-company collaborations.
//!
//! For a site and a sector, the candidate partners are the universities with
//! at least one scientist in the sector. Three expectations of the partner
//! distance are compared with the real one:
//!
//! * expected distance: every candidate equally likely;
//! * mass-barycentric distance (MBD): candidates weighted by head count;
//! * strength-barycentric distance (SSBD): candidates weighted by
//!   Scientific Strength.
//!
//! Each is `Σ_i w_i · d_i / Σ_i w_i` over the candidates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collab::{enumerate_sc, percent, ScCollab};
use crate::dataset::{Dataset, GeoPoint};
use crate::geo::{great_circle_km, DistanceKm};
use crate::indicators::Indicators;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProximityError {
    #[error("unknown site `{0}`")]
    UnknownSite(String),
    #[error("no university is active in sector `{0}`")]
    NoCandidates(String),
    #[error("total staff in sector `{0}` is zero")]
    ZeroMass(String),
    #[error("total scientific strength in sector `{0}` is zero")]
    ZeroStrength(String),
}

/// `Σ w·d / Σ w`, or `None` when the weights sum to zero. Offsets are taken
/// from the smallest distance so equidistant candidates give that distance
/// back exactly.
fn weighted_mean(pairs: impl IntoIterator<Item = (f64, f64)> + Clone) -> Option<f64> {
    let base = pairs.clone().into_iter().map(|(_, d)| d).fold(f64::INFINITY, f64::min);
    let (num, den) = pairs
        .into_iter()
        .fold((0.0, 0.0), |(n, d), (w, dist)| (n + w * (dist - base), d + w));
    (den > 0.0).then(|| base + num / den)
}

fn site_location(dataset: &Dataset, site: &str) -> Result<GeoPoint, ProximityError> {
    dataset
        .site(site)
        .map(|s| s.location)
        .ok_or_else(|| ProximityError::UnknownSite(site.to_owned()))
}

// (university, distance to site) for every candidate of the sector.
fn candidates<'a>(dataset: &'a Dataset, at: GeoPoint, sds: &str) -> Result<Vec<(&'a str, f64)>, ProximityError> {
    let active = dataset.active_universities(sds);
    if active.is_empty() {
        return Err(ProximityError::NoCandidates(sds.to_owned()));
    }
    Ok(active
        .iter()
        .filter_map(|u| {
            dataset
                .university(u)
                .map(|uni| (u.as_str(), great_circle_km(at, uni.location).km()))
        })
        .collect())
}

fn km(x: f64) -> DistanceKm {
    DistanceKm::new(x).expect("weighted mean of distances is a distance")
}

/// Unweighted mean distance from the site to the sector's candidates.
pub fn expected_distance(dataset: &Dataset, site: &str, sds: &str) -> Result<DistanceKm, ProximityError> {
    let at = site_location(dataset, site)?;
    let c = candidates(dataset, at, sds)?;
    weighted_mean(c.iter().map(|&(_, d)| (1.0, d)))
        .map(km)
        .ok_or_else(|| ProximityError::NoCandidates(sds.to_owned()))
}

/// Candidate distances weighted by the universities' head count in the
/// sector.
pub fn mass_barycentric_distance(dataset: &Dataset, site: &str, sds: &str) -> Result<DistanceKm, ProximityError> {
    let at = site_location(dataset, site)?;
    let c = candidates(dataset, at, sds)?;
    weighted_mean(c.iter().map(|&(u, d)| (dataset.staff(u, sds) as f64, d)))
        .map(km)
        .ok_or_else(|| ProximityError::ZeroMass(sds.to_owned()))
}

/// Candidate distances weighted by the universities' Scientific Strength in
/// the sector.
pub fn ss_barycentric_distance(
    dataset: &Dataset,
    indicators: &Indicators,
    site: &str,
    sds: &str,
) -> Result<DistanceKm, ProximityError> {
    let at = site_location(dataset, site)?;
    let c = candidates(dataset, at, sds)?;
    weighted_mean(c.iter().map(|&(u, d)| (indicators.sector_ss(u, sds), d)))
        .map(km)
        .ok_or_else(|| ProximityError::ZeroStrength(sds.to_owned()))
}

/// The three expectations for one (site, sector) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub expected_km: f64,
    pub mbd_km: f64,
    /// Absent when the sector has zero total strength.
    pub ssbd_km: Option<f64>,
}

pub fn expectations(
    dataset: &Dataset,
    indicators: &Indicators,
    site: &str,
    sds: &str,
) -> Result<Expectations, ProximityError> {
    let at = site_location(dataset, site)?;
    let c = candidates(dataset, at, sds)?;
    let expected =
        weighted_mean(c.iter().map(|&(_, d)| (1.0, d))).ok_or_else(|| ProximityError::NoCandidates(sds.to_owned()))?;
    let mbd = weighted_mean(c.iter().map(|&(u, d)| (dataset.staff(u, sds) as f64, d)))
        .ok_or_else(|| ProximityError::ZeroMass(sds.to_owned()))?;
    let ssbd = weighted_mean(c.iter().map(|&(u, d)| (indicators.sector_ss(u, sds), d)));
    Ok(Expectations {
        expected_km: expected,
        mbd_km: mbd,
        ssbd_km: ssbd,
    })
}

/// Real and expected distances of one sector-company collaboration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityRow {
    pub publication_id: String,
    pub university_id: String,
    pub sds_code: String,
    pub site_id: String,
    pub real_km: f64,
    pub expected_km: f64,
    pub mbd_km: f64,
    pub ssbd_km: Option<f64>,
    pub expected_exceeds_real: bool,
    pub mbd_exceeds_real: bool,
    pub ssbd_exceeds_real: Option<bool>,
}

/// Averages of one distance column and how often it exceeds the real
/// distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceLine {
    pub mean_km: Option<f64>,
    /// `mean_km` over the mean real distance.
    pub ratio_to_real: Option<f64>,
    /// Rows where this expectation is strictly greater than the real distance.
    pub exceeds_real: usize,
    /// Rows on which the column is defined.
    pub rows: usize,
}

impl DistanceLine {
    pub fn exceeds_share_pct(&self) -> f64 {
        percent(self.exceeds_real, self.rows)
    }
}

/// Averages over all sector-company collaborations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityReport {
    pub collaborations: usize,
    pub real: DistanceLine,
    pub expected: DistanceLine,
    pub mass_barycentric: DistanceLine,
    pub ss_barycentric: DistanceLine,
    /// Collaborations left out of the SSBD column because their sector has
    /// zero total strength.
    pub ssbd_excluded: usize,
}

/// Per-collaboration rows in (publication, university, sector, site) order.
pub fn proximity_rows(dataset: &Dataset, indicators: &Indicators) -> Vec<ProximityRow> {
    rows_for(dataset, indicators, &enumerate_sc(dataset))
}

pub fn rows_for(dataset: &Dataset, indicators: &Indicators, collabs: &[ScCollab]) -> Vec<ProximityRow> {
    use std::collections::BTreeMap;
    let mut cache: BTreeMap<(&str, &str), Expectations> = BTreeMap::new();
    let mut rows = Vec::with_capacity(collabs.len());
    for c in collabs {
        let key = (c.site_id.as_str(), c.sds_code.as_str());
        let e = match cache.get(&key) {
            Some(e) => *e,
            None => {
                // The co-authoring university is itself a candidate, so the
                // sector is never empty for an enumerated collaboration.
                let e = expectations(dataset, indicators, &c.site_id, &c.sds_code)
                    .expect("collaboration sector has at least one active university");
                cache.insert(key, e);
                e
            }
        };
        let real = c.distance.km();
        rows.push(ProximityRow {
            publication_id: c.publication_id.clone(),
            university_id: c.university_id.clone(),
            sds_code: c.sds_code.clone(),
            site_id: c.site_id.clone(),
            real_km: real,
            expected_km: e.expected_km,
            mbd_km: e.mbd_km,
            ssbd_km: e.ssbd_km,
            expected_exceeds_real: e.expected_km > real,
            mbd_exceeds_real: e.mbd_km > real,
            ssbd_exceeds_real: e.ssbd_km.map(|s| s > real),
        });
    }
    rows
}

/// Aggregates rows into the four-line distance comparison.
pub fn summarize_rows(rows: &[ProximityRow]) -> ProximityReport {
    let n = rows.len();
    let mean = |sum: f64, k: usize| (k > 0).then(|| sum / k as f64);
    let real_mean = mean(rows.iter().map(|r| r.real_km).sum(), n);
    let ratio = |m: Option<f64>| match (m, real_mean) {
        (Some(m), Some(r)) if r > 0.0 => Some(m / r),
        _ => None,
    };
    let line = |m: Option<f64>, exceeds: usize, defined: usize| DistanceLine {
        mean_km: m,
        ratio_to_real: ratio(m),
        exceeds_real: exceeds,
        rows: defined,
    };

    let expected_mean = mean(rows.iter().map(|r| r.expected_km).sum(), n);
    let mbd_mean = mean(rows.iter().map(|r| r.mbd_km).sum(), n);
    let ss_rows: Vec<f64> = rows.iter().filter_map(|r| r.ssbd_km).collect();
    let ssbd_mean = mean(ss_rows.iter().sum(), ss_rows.len());

    ProximityReport {
        collaborations: n,
        real: line(real_mean, 0, n),
        expected: line(
            expected_mean,
            rows.iter().filter(|r| r.expected_exceeds_real).count(),
            n,
        ),
        mass_barycentric: line(mbd_mean, rows.iter().filter(|r| r.mbd_exceeds_real).count(), n),
        ss_barycentric: line(
            ssbd_mean,
            rows.iter().filter(|r| r.ssbd_exceeds_real == Some(true)).count(),
            ss_rows.len(),
        ),
        ssbd_excluded: n - ss_rows.len(),
    }
}

pub fn proximity_report(dataset: &Dataset) -> ProximityReport {
    let indicators = Indicators::compute(dataset);
    summarize_rows(&proximity_rows(dataset, &indicators))
}
