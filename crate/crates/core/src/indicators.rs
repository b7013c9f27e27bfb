//! Journal percentiles, Scientific Strength, Qualitative Productivity and the
//! per-sector rankings derived from them.
//!
//! Scientific Strength (SS) of a scope is the sum, over the publications on
//! which the scope has at least one author, of the publishing journal's
//! impact-factor percentile within its category. A publication counts once
//! per scope however many of its authors fall in that scope. Qualitative
//! Productivity (QP) divides a university sector's SS by its head count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Journal};

/// Mid-rank percentile of a journal's impact factor within its category,
/// in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IfPercentile(f64);

impl IfPercentile {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for IfPercentile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndicatorError {
    #[error("journal `{journal}` has no peers in category `{category}`")]
    EmptyCategory { journal: String, category: String },
    #[error("QP undefined for university `{university}` in `{sds}`: no staff")]
    UndefinedQp { university: String, sds: String },
    #[error("no rankable entity in sector `{sds}`")]
    EmptyRanking { sds: String },
}

/// `(below + 0.5 · ties) / n` over the journals of `journal`'s category in
/// `journals`, where `ties` counts every journal with an equal impact
/// factor, `journal` itself included when it is in the set.
pub fn if_percentile<'a>(
    journal: &Journal,
    journals: impl IntoIterator<Item = &'a Journal>,
) -> Result<IfPercentile, IndicatorError> {
    let mut n = 0usize;
    let mut below = 0usize;
    let mut ties = 0usize;
    for j in journals {
        if j.category != journal.category {
            continue;
        }
        n += 1;
        if j.impact_factor < journal.impact_factor {
            below += 1;
        } else if j.impact_factor == journal.impact_factor {
            ties += 1;
        }
    }
    if n == 0 {
        return Err(IndicatorError::EmptyCategory {
            journal: journal.id.clone(),
            category: journal.category.clone(),
        });
    }
    Ok(IfPercentile((below as f64 + 0.5 * ties as f64) / n as f64))
}

/// Percentiles of every journal in the dataset, by journal id.
pub fn journal_percentiles(dataset: &Dataset) -> BTreeMap<String, IfPercentile> {
    let mut by_category: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for j in dataset.journals().values() {
        by_category.entry(&j.category).or_default().push(j.impact_factor);
    }
    for ifs in by_category.values_mut() {
        ifs.sort_by(f64::total_cmp);
    }
    dataset
        .journals()
        .values()
        .map(|j| {
            let ifs = &by_category[j.category.as_str()];
            let below = ifs.partition_point(|&x| x < j.impact_factor);
            let upto = ifs.partition_point(|&x| x <= j.impact_factor);
            let p = (below as f64 + 0.5 * (upto - below) as f64) / ifs.len() as f64;
            (j.id.clone(), IfPercentile(p))
        })
        .collect()
}

/// What a Scientific Strength value is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope<'a> {
    /// One university in one sector.
    Sector {
        university: &'a str,
        sds: &'a str,
    },
    Scientist(&'a str),
}

/// Scientific Strength of one scope, computed directly from the records.
///
/// Use [`Indicators`] when many scopes are needed.
pub fn scientific_strength(dataset: &Dataset, scope: Scope<'_>) -> f64 {
    let percentiles = journal_percentiles(dataset);
    let mut ss = 0.0;
    for p in dataset.publications().values() {
        let in_scope = p.academic_author_ids.iter().any(|a| match scope {
            Scope::Scientist(id) => a == id,
            Scope::Sector { university, sds } => dataset
                .scientist(a)
                .is_some_and(|s| s.university_id == university && s.sds_code == sds),
        });
        if in_scope {
            if let Some(pct) = percentiles.get(&p.journal_id) {
                ss += pct.value();
            }
        }
    }
    ss
}

/// Mass, strength and productivity of one university in one sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorProfile {
    pub university_id: String,
    pub sds_code: String,
    pub mass: usize,
    pub ss: f64,
    pub qp: f64,
}

/// Which entities a ranking orders, and by what.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankLevel {
    /// Universities active in the sector, by QP.
    UniversityByQp,
    /// Scientists of the sector, by SS. `stable_only` keeps only scientists
    /// with a stable affiliation.
    ScientistBySs { stable_only: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub entity_id: String,
    pub score: f64,
    /// 1-based position after ordering.
    pub rank: usize,
}

/// Entities of one sector ordered by descending score, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub sds_code: String,
    pub level: RankLevel,
    pub entries: Vec<RankEntry>,
}

impl Ranking {
    pub fn position(&self, entity_id: &str) -> Option<&RankEntry> {
        self.entries.iter().find(|e| e.entity_id == entity_id)
    }
}

pub(crate) fn order_scores(mut scored: Vec<(String, f64)>) -> Vec<RankEntry> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (entity_id, score))| RankEntry {
            entity_id,
            score,
            rank: i + 1,
        })
        .collect()
}

/// All indicators of a dataset, computed in one pass over the publications
/// in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Indicators {
    percentiles: BTreeMap<String, IfPercentile>,
    profiles: BTreeMap<(String, String), SectorProfile>,
    scientist_ss: BTreeMap<String, f64>,
    // sds -> total SS over its universities
    sds_ss: BTreeMap<String, f64>,
}

impl Indicators {
    pub fn compute(dataset: &Dataset) -> Self {
        let percentiles = journal_percentiles(dataset);
        let mut sector_ss: BTreeMap<(&str, &str), f64> = BTreeMap::new();
        let mut scientist_ss: BTreeMap<String, f64> = dataset.scientists().keys().map(|id| (id.clone(), 0.0)).collect();

        for p in dataset.publications().values() {
            let Some(pct) = percentiles.get(&p.journal_id) else {
                continue;
            };
            let pct = pct.value();
            for sector in dataset.publication_sectors(p) {
                *sector_ss.entry(sector).or_default() += pct;
            }
            let authors: BTreeSet<&str> = p.academic_author_ids.iter().map(String::as_str).collect();
            for a in authors {
                if let Some(ss) = scientist_ss.get_mut(a) {
                    *ss += pct;
                }
            }
        }

        let mut profiles = BTreeMap::new();
        let mut sds_ss: BTreeMap<String, f64> = BTreeMap::new();
        for ((u, s), &mass) in dataset.staff_index() {
            let ss = sector_ss.get(&(u.as_str(), s.as_str())).copied().unwrap_or(0.0);
            *sds_ss.entry(s.clone()).or_default() += ss;
            profiles.insert(
                (u.clone(), s.clone()),
                SectorProfile {
                    university_id: u.clone(),
                    sds_code: s.clone(),
                    mass,
                    ss,
                    qp: ss / mass as f64,
                },
            );
        }

        Indicators {
            percentiles,
            profiles,
            scientist_ss,
            sds_ss,
        }
    }

    pub fn percentile(&self, journal_id: &str) -> Option<IfPercentile> {
        self.percentiles.get(journal_id).copied()
    }

    /// Profiles of every `(university, sds)` pair with staff, in key order.
    pub fn profiles(&self) -> impl Iterator<Item = &SectorProfile> {
        self.profiles.values()
    }

    pub fn profile(&self, university: &str, sds: &str) -> Option<&SectorProfile> {
        self.profiles.get(&(university.to_owned(), sds.to_owned()))
    }

    pub fn sector_ss(&self, university: &str, sds: &str) -> f64 {
        self.profile(university, sds).map_or(0.0, |p| p.ss)
    }

    /// Sum of SS over all universities of a sector.
    pub fn sds_total_ss(&self, sds: &str) -> f64 {
        self.sds_ss.get(sds).copied().unwrap_or(0.0)
    }

    pub fn scientist_ss(&self, scientist: &str) -> f64 {
        self.scientist_ss.get(scientist).copied().unwrap_or(0.0)
    }

    pub fn qp(&self, university: &str, sds: &str) -> Result<f64, IndicatorError> {
        self.profile(university, sds)
            .map(|p| p.qp)
            .ok_or_else(|| IndicatorError::UndefinedQp {
                university: university.to_owned(),
                sds: sds.to_owned(),
            })
    }

    pub fn rank(&self, dataset: &Dataset, sds: &str, level: RankLevel) -> Result<Ranking, IndicatorError> {
        let scored: Vec<(String, f64)> = match level {
            RankLevel::UniversityByQp => dataset
                .active_universities(sds)
                .iter()
                .map(|u| (u.clone(), self.profile(u, sds).map_or(0.0, |p| p.qp)))
                .collect(),
            RankLevel::ScientistBySs { stable_only } => dataset
                .sds_members(sds)
                .iter()
                .filter(|id| !stable_only || dataset.scientist(id).is_some_and(|s| s.stable_affiliation))
                .map(|id| (id.clone(), self.scientist_ss(id)))
                .collect(),
        };
        if scored.is_empty() {
            return Err(IndicatorError::EmptyRanking { sds: sds.to_owned() });
        }
        Ok(Ranking {
            sds_code: sds.to_owned(),
            level,
            entries: order_scores(scored),
        })
    }
}

/// SS divided by the sector's head count.
pub fn qualitative_productivity(dataset: &Dataset, university: &str, sds: &str) -> Result<f64, IndicatorError> {
    let mass = dataset.staff(university, sds);
    if mass == 0 {
        return Err(IndicatorError::UndefinedQp {
            university: university.to_owned(),
            sds: sds.to_owned(),
        });
    }
    Ok(scientific_strength(dataset, Scope::Sector { university, sds }) / mass as f64)
}

pub fn rank(dataset: &Dataset, sds: &str, level: RankLevel) -> Result<Ranking, IndicatorError> {
    Indicators::compute(dataset).rank(dataset, sds, level)
}
