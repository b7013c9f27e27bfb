//! Collaboration enumeration at the university-company and sector-company
//! levels, and the descriptive reports built on top of it.
//!
//! A publication co-authored by `m` distinct universities and `n` distinct
//! company sites is `m * n` university-company collaborations. At the
//! sector level each university contributes one unit per distinct sector
//! among its co-authors, so the publication counts `(Σ_k sectors_k) * n`
//! sector-company collaborations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::geo::{great_circle_km, DistanceKm};

/// One (publication, university, site) collaboration event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcCollab {
    pub publication_id: String,
    pub university_id: String,
    pub site_id: String,
    pub distance: DistanceKm,
}

/// One (publication, university, sector, site) collaboration event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScCollab {
    pub publication_id: String,
    pub university_id: String,
    pub sds_code: String,
    pub site_id: String,
    pub distance: DistanceKm,
}

/// Anything that carries a partner distance.
pub trait Collaboration {
    fn distance(&self) -> DistanceKm;
}

impl Collaboration for UcCollab {
    fn distance(&self) -> DistanceKm {
        self.distance
    }
}

impl Collaboration for ScCollab {
    fn distance(&self) -> DistanceKm {
        self.distance
    }
}

impl Collaboration for DistanceKm {
    fn distance(&self) -> DistanceKm {
        *self
    }
}

/// University-company collaborations, ordered by (publication, university,
/// site).
///
/// The dataset must be valid; unresolved ids are skipped.
pub fn enumerate_uc(dataset: &Dataset) -> Vec<UcCollab> {
    let mut out = Vec::new();
    for p in dataset.publications().values() {
        let sites = dataset.publication_sites(p);
        for u in dataset.publication_universities(p) {
            let Some(uni) = dataset.university(u) else { continue };
            for &s in &sites {
                let Some(site) = dataset.site(s) else { continue };
                out.push(UcCollab {
                    publication_id: p.id.clone(),
                    university_id: u.to_owned(),
                    site_id: s.to_owned(),
                    distance: great_circle_km(uni.location, site.location),
                });
            }
        }
    }
    out
}

/// Sector-company collaborations, ordered by (publication, university,
/// sector, site).
pub fn enumerate_sc(dataset: &Dataset) -> Vec<ScCollab> {
    let mut out = Vec::new();
    for p in dataset.publications().values() {
        let sites = dataset.publication_sites(p);
        for (u, sds) in dataset.publication_sectors(p) {
            let Some(uni) = dataset.university(u) else { continue };
            for &s in &sites {
                let Some(site) = dataset.site(s) else { continue };
                out.push(ScCollab {
                    publication_id: p.id.clone(),
                    university_id: u.to_owned(),
                    sds_code: sds.to_owned(),
                    site_id: s.to_owned(),
                    distance: great_circle_km(uni.location, site.location),
                });
            }
        }
    }
    out
}

/// Collaboration and distinct-pair counts at both levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollabSummary {
    pub publications: usize,
    pub uc_collaborations: usize,
    pub uc_pairs: usize,
    pub sc_collaborations: usize,
    pub sc_pairs: usize,
}

pub fn summary(dataset: &Dataset) -> CollabSummary {
    let uc = enumerate_uc(dataset);
    let sc = enumerate_sc(dataset);
    summarize(dataset.publications().len(), &uc, &sc)
}

/// Same as [`summary`] over already enumerated collaborations.
pub fn summarize(publications: usize, uc: &[UcCollab], sc: &[ScCollab]) -> CollabSummary {
    let uc_pairs: BTreeSet<(&str, &str)> = uc
        .iter()
        .map(|c| (c.university_id.as_str(), c.site_id.as_str()))
        .collect();
    let sc_pairs: BTreeSet<(&str, &str, &str)> = sc
        .iter()
        .map(|c| (c.university_id.as_str(), c.sds_code.as_str(), c.site_id.as_str()))
        .collect();
    CollabSummary {
        publications,
        uc_collaborations: uc.len(),
        uc_pairs: uc_pairs.len(),
        sc_collaborations: sc.len(),
        sc_pairs: sc_pairs.len(),
    }
}

/// One cell of the companies-by-universities grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub companies: usize,
    pub universities: usize,
    pub publications: usize,
    /// Mean over the cell's publications of `Σ_k sectors_k`.
    pub mean_sds_total: f64,
}

impl GridCell {
    /// University-company collaborations contributed by the cell.
    pub fn uc_collaborations(&self) -> usize {
        self.publications * self.companies * self.universities
    }
}

/// Publications tabulated by the number of co-authoring company sites and
/// universities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    /// Non-empty cells ordered by (companies, universities).
    pub cells: Vec<GridCell>,
    pub total_publications: usize,
    /// Mean `Σ_k sectors_k` over all publications; absent when empty.
    pub mean_sds_total: Option<f64>,
}

impl FrequencyGrid {
    /// Rebuilds a grid from bare cell counts `(companies, universities,
    /// publications)`. Sector means are left at zero.
    pub fn from_counts(counts: &[(usize, usize, usize)]) -> Self {
        let mut cells: Vec<GridCell> = counts
            .iter()
            .filter(|c| c.2 > 0)
            .map(|&(companies, universities, publications)| GridCell {
                companies,
                universities,
                publications,
                mean_sds_total: 0.0,
            })
            .collect();
        cells.sort_by_key(|c| (c.companies, c.universities));
        FrequencyGrid {
            total_publications: cells.iter().map(|c| c.publications).sum(),
            cells,
            mean_sds_total: None,
        }
    }

    /// Σ publications · companies · universities, which equals the number
    /// of university-company collaborations.
    pub fn uc_collaborations(&self) -> usize {
        self.cells.iter().map(GridCell::uc_collaborations).sum()
    }

    pub fn cell(&self, companies: usize, universities: usize) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.companies == companies && c.universities == universities)
    }

    /// Share of all publications falling into `cell`, in percent.
    pub fn share_pct(&self, cell: &GridCell) -> f64 {
        percent(cell.publications, self.total_publications)
    }
}

pub fn frequency_grids(dataset: &Dataset) -> FrequencyGrid {
    // (companies, universities) -> (publications, Σ sds totals)
    let mut acc: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    let mut sds_sum = 0usize;
    for p in dataset.publications().values() {
        let n = dataset.publication_sites(p).len();
        let m = dataset.publication_universities(p).len();
        let sds_total = dataset.publication_sectors(p).len();
        let e = acc.entry((n, m)).or_default();
        e.0 += 1;
        e.1 += sds_total;
        sds_sum += sds_total;
    }
    let total = dataset.publications().len();
    FrequencyGrid {
        cells: acc
            .into_iter()
            .map(|((companies, universities), (publications, sds))| GridCell {
                companies,
                universities,
                publications,
                mean_sds_total: sds as f64 / publications as f64,
            })
            .collect(),
        total_publications: total,
        mean_sds_total: (total > 0).then(|| sds_sum as f64 / total as f64),
    }
}

/// Whether collaborations are attributed to company sites or to legal
/// entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    #[default]
    Site,
    Company,
}

/// Row label of an intensity table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "count")]
pub enum IntensityBucket {
    Exactly(usize),
    MoreThan(usize),
}

impl std::fmt::Display for IntensityBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntensityBucket::Exactly(n) => write!(f, "{n}"),
            IntensityBucket::MoreThan(n) => write!(f, "more than {n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityRow {
    pub bucket: IntensityBucket,
    /// Entities whose collaboration count falls in the bucket.
    pub entities: usize,
    /// Collaborations contributed by those entities.
    pub subtotal: usize,
    pub entity_pct: f64,
    pub cumulative_entity_pct: f64,
    pub collaboration_pct: f64,
    pub cumulative_collaboration_pct: f64,
}

/// Distribution of collaboration counts per company (site or entity).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntensityTable {
    pub group_by: GroupBy,
    pub rows: Vec<IntensityRow>,
}

impl IntensityTable {
    /// Builds the table from `(bucket, entities, subtotal)` rows, filling in
    /// the percentage columns.
    pub fn from_rows(group_by: GroupBy, rows: &[(IntensityBucket, usize, usize)]) -> Self {
        let total_entities: usize = rows.iter().map(|r| r.1).sum();
        let total_collabs: usize = rows.iter().map(|r| r.2).sum();
        let mut cum_e = 0;
        let mut cum_c = 0;
        let rows = rows
            .iter()
            .map(|&(bucket, entities, subtotal)| {
                cum_e += entities;
                cum_c += subtotal;
                IntensityRow {
                    bucket,
                    entities,
                    subtotal,
                    entity_pct: percent(entities, total_entities),
                    cumulative_entity_pct: percent(cum_e, total_entities),
                    collaboration_pct: percent(subtotal, total_collabs),
                    cumulative_collaboration_pct: percent(cum_c, total_collabs),
                }
            })
            .collect();
        IntensityTable { group_by, rows }
    }

    pub fn total_entities(&self) -> usize {
        self.rows.iter().map(|r| r.entities).sum()
    }

    pub fn total_collaborations(&self) -> usize {
        self.rows.iter().map(|r| r.subtotal).sum()
    }
}

/// Counts university-company collaborations per site or per company and
/// tabulates how many entities reached each count. Counts above
/// `more_than`, when given, are merged into one final bucket.
pub fn company_intensity(dataset: &Dataset, group_by: GroupBy, more_than: Option<usize>) -> IntensityTable {
    let mut per_entity: BTreeMap<&str, usize> = BTreeMap::new();
    for c in enumerate_uc(dataset) {
        let key = match group_by {
            GroupBy::Site => dataset.site(&c.site_id).map(|s| s.id.as_str()),
            GroupBy::Company => dataset.site(&c.site_id).map(|s| s.company_id.as_str()),
        };
        if let Some(key) = key {
            *per_entity.entry(key).or_default() += 1;
        }
    }
    let mut buckets: BTreeMap<IntensityBucket, (usize, usize)> = BTreeMap::new();
    for count in per_entity.into_values() {
        let bucket = match more_than {
            Some(cap) if count > cap => IntensityBucket::MoreThan(cap),
            _ => IntensityBucket::Exactly(count),
        };
        let e = buckets.entry(bucket).or_default();
        e.0 += 1;
        e.1 += count;
    }
    let rows: Vec<_> = buckets.into_iter().map(|(b, (n, s))| (b, n, s)).collect();
    IntensityTable::from_rows(group_by, &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("bin width must be a positive finite number of km, got {0}")]
pub struct BinWidthError(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower_km: f64,
    pub upper_km: f64,
    pub count: usize,
}

/// Distances grouped in `[k·w, (k+1)·w)` bins, contiguous from zero up to
/// the bin holding the maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    pub bin_km: f64,
    pub bins: Vec<HistogramBin>,
    pub total: usize,
    pub mean_km: Option<f64>,
    pub max_km: Option<f64>,
}

impl DistanceHistogram {
    pub fn share_pct(&self, bin: &HistogramBin) -> f64 {
        percent(bin.count, self.total)
    }

    /// Percentage of collaborations strictly below `km`.
    pub fn share_below_pct(&self, km: f64) -> f64 {
        let below: usize = self.bins.iter().filter(|b| b.upper_km <= km).map(|b| b.count).sum();
        percent(below, self.total)
    }
}

pub fn distance_histogram<C: Collaboration>(collabs: &[C], bin_km: f64) -> Result<DistanceHistogram, BinWidthError> {
    if !(bin_km.is_finite() && bin_km > 0.0) {
        return Err(BinWidthError(bin_km));
    }
    let mut counts: Vec<usize> = Vec::new();
    let mut sum = 0.0;
    let mut max: Option<f64> = None;
    for c in collabs {
        let d = c.distance().km();
        let k = (d / bin_km).floor() as usize;
        if counts.len() <= k {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
        sum += d;
        max = Some(max.map_or(d, |m: f64| m.max(d)));
    }
    let total = collabs.len();
    Ok(DistanceHistogram {
        bin_km,
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(k, count)| HistogramBin {
                lower_km: k as f64 * bin_km,
                upper_km: (k + 1) as f64 * bin_km,
                count,
            })
            .collect(),
        total,
        mean_km: (total > 0).then(|| sum / total as f64),
        max_km: max,
    })
}

pub(crate) fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}
