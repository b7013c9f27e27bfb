//! Counterfactual partner analysis: for each single-company publication,
//! how many potential partners in the same sector scored strictly better
//! than the one chosen, and how many of those were also strictly closer to
//! the company site.
//!
//! At university level the score is Qualitative Productivity and the chosen
//! partner (the benchmark) is the co-authoring university ranked highest in
//! the sector. At scientist level the score is Scientific Strength, only
//! scientists with a stable affiliation take part, and the benchmark is the
//! co-author with the highest strength. A scientist's distance is the
//! distance of their university.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collab::percent;
use crate::dataset::{Dataset, GeoPoint, Publication};
use crate::geo::great_circle_km;
use crate::indicators::{order_scores, Indicators};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    University,
    Scientist,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Level::University => "university",
            Level::Scientist => "scientist",
        })
    }
}

/// Why a publication is left out of the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IneligibleReason {
    /// Not exactly one company site among the co-authors, so there is no
    /// single decision-maker.
    MultiCompany,
    /// An academic co-author changed university or sector during the window.
    UnstableAuthor,
}

impl std::fmt::Display for IneligibleReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IneligibleReason::MultiCompany => "multi_company",
            IneligibleReason::UnstableAuthor => "unstable_author",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub sds_code: String,
    pub benchmark_id: String,
    pub benchmark_score: f64,
    pub benchmark_distance_km: f64,
    /// Entities in the sector's ranking, benchmark included.
    pub active: usize,
    pub better_count: usize,
    pub better_and_closer_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResult {
    pub publication_id: String,
    pub ineligible: Option<IneligibleReason>,
    pub verdict: Option<Verdict>,
}

impl CounterfactualResult {
    pub fn eligible(&self) -> bool {
        self.verdict.is_some()
    }

    fn ineligible(publication_id: &str, reason: IneligibleReason) -> Self {
        CounterfactualResult {
            publication_id: publication_id.to_owned(),
            ineligible: Some(reason),
            verdict: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EfficiencyError {
    #[error("unknown publication `{0}`")]
    UnknownPublication(String),
    #[error("unknown sector `{0}`")]
    UnknownSds(String),
    #[error("top_n must be positive")]
    ZeroTopN,
}

/// Per-sector score tables shared by every publication.
#[derive(Debug, Clone)]
pub struct Counterfactuals<'a> {
    dataset: &'a Dataset,
    indicators: &'a Indicators,
    // sds -> (university, qp) for active universities
    universities: BTreeMap<&'a str, Vec<(&'a str, f64)>>,
    // sds -> university -> stable scientists' SS, descending
    scientists: BTreeMap<&'a str, BTreeMap<&'a str, Vec<f64>>>,
}

impl<'a> Counterfactuals<'a> {
    pub fn new(dataset: &'a Dataset, indicators: &'a Indicators) -> Self {
        let mut universities: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
        for p in indicators.profiles() {
            let sds = dataset.sectors().get_key_value(&p.sds_code).map(|(k, _)| k.as_str());
            let uni = dataset
                .universities()
                .get_key_value(&p.university_id)
                .map(|(k, _)| k.as_str());
            if let (Some(sds), Some(uni)) = (sds, uni) {
                universities.entry(sds).or_default().push((uni, p.qp));
            }
        }
        let mut scientists: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
        for s in dataset.scientists().values().filter(|s| s.stable_affiliation) {
            scientists
                .entry(s.sds_code.as_str())
                .or_default()
                .entry(s.university_id.as_str())
                .or_default()
                .push(indicators.scientist_ss(&s.id));
        }
        for per_uni in scientists.values_mut() {
            for ss in per_uni.values_mut() {
                ss.sort_by(|a, b| b.total_cmp(a));
            }
        }
        Counterfactuals {
            dataset,
            indicators,
            universities,
            scientists,
        }
    }

    fn distance(&self, at: GeoPoint, university: &str) -> f64 {
        self.dataset
            .university(university)
            .map_or(f64::INFINITY, |u| great_circle_km(at, u.location).km())
    }

    fn single_site(&self, p: &Publication) -> Option<GeoPoint> {
        match self.dataset.publication_sites(p).as_slice() {
            [only] => self.dataset.site(only).map(|s| s.location),
            _ => None,
        }
    }

    fn publication(&self, id: &str) -> Result<&'a Publication, EfficiencyError> {
        self.dataset
            .publication(id)
            .ok_or_else(|| EfficiencyError::UnknownPublication(id.to_owned()))
    }

    pub fn evaluate(&self, publication_id: &str, level: Level) -> Result<CounterfactualResult, EfficiencyError> {
        match level {
            Level::University => self.university(publication_id),
            Level::Scientist => self.scientist(publication_id),
        }
    }

    pub fn university(&self, publication_id: &str) -> Result<CounterfactualResult, EfficiencyError> {
        let p = self.publication(publication_id)?;
        let Some(at) = self.single_site(p) else {
            return Ok(CounterfactualResult::ineligible(&p.id, IneligibleReason::MultiCompany));
        };

        let mut chosen_by_sds: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (u, sds) in self.dataset.publication_sectors(p) {
            chosen_by_sds.entry(sds).or_default().push(u);
        }

        let mut best: Option<Verdict> = None;
        for (sds, chosen) in chosen_by_sds {
            let Some(table) = self.universities.get(sds) else {
                continue;
            };
            let qp = |u: &str| table.iter().find(|(x, _)| *x == u).map_or(0.0, |&(_, q)| q);
            // The best-ranked co-authoring university: highest QP, then id.
            let bench = order_scores(chosen.iter().map(|&u| (u.to_owned(), qp(u))).collect())
                .into_iter()
                .next()
                .expect("sector has a co-author");
            let bench_d = self.distance(at, &bench.entity_id);
            let mut better = 0;
            let mut closer = 0;
            for &(u, q) in table {
                if q > bench.score {
                    better += 1;
                    if self.distance(at, u) < bench_d {
                        closer += 1;
                    }
                }
            }
            let v = Verdict {
                sds_code: sds.to_owned(),
                benchmark_id: bench.entity_id,
                benchmark_score: bench.score,
                benchmark_distance_km: bench_d,
                active: table.len(),
                better_count: better,
                better_and_closer_count: closer,
            };
            // Several sectors: keep the one least unfavourable to the
            // company's choice.
            let replace = best.as_ref().is_none_or(|b| {
                (v.better_count, v.better_and_closer_count) < (b.better_count, b.better_and_closer_count)
            });
            if replace {
                best = Some(v);
            }
        }
        Ok(CounterfactualResult {
            publication_id: p.id.clone(),
            ineligible: None,
            verdict: best,
        })
    }

    pub fn scientist(&self, publication_id: &str) -> Result<CounterfactualResult, EfficiencyError> {
        let p = self.publication(publication_id)?;
        let Some(at) = self.single_site(p) else {
            return Ok(CounterfactualResult::ineligible(&p.id, IneligibleReason::MultiCompany));
        };
        let authors: Vec<_> = p
            .academic_author_ids
            .iter()
            .filter_map(|a| self.dataset.scientist(a))
            .collect();
        if authors.is_empty() || authors.iter().any(|s| !s.stable_affiliation) {
            return Ok(CounterfactualResult::ineligible(
                &p.id,
                IneligibleReason::UnstableAuthor,
            ));
        }

        let bench = order_scores(
            authors
                .iter()
                .map(|s| (s.id.clone(), self.indicators.scientist_ss(&s.id)))
                .collect(),
        )
        .into_iter()
        .next()
        .expect("publication has an author");
        let bench_sci = self.dataset.scientist(&bench.entity_id).expect("author resolves");
        let bench_d = self.distance(at, &bench_sci.university_id);

        let mut better = 0;
        let mut closer = 0;
        let mut active = 0;
        if let Some(per_uni) = self.scientists.get(bench_sci.sds_code.as_str()) {
            for (&u, scores) in per_uni {
                active += scores.len();
                // scores are descending
                let n = scores.partition_point(|&s| s > bench.score);
                better += n;
                if n > 0 && self.distance(at, u) < bench_d {
                    closer += n;
                }
            }
        }
        Ok(CounterfactualResult {
            publication_id: p.id.clone(),
            ineligible: None,
            verdict: Some(Verdict {
                sds_code: bench_sci.sds_code.clone(),
                benchmark_id: bench.entity_id,
                benchmark_score: bench.score,
                benchmark_distance_km: bench_d,
                active,
                better_count: better,
                better_and_closer_count: closer,
            }),
        })
    }

    /// Results for every publication, in publication id order.
    pub fn all(&self, level: Level) -> Vec<CounterfactualResult> {
        self.dataset
            .publications()
            .keys()
            .map(|id| self.evaluate(id, level).expect("id comes from the dataset"))
            .collect()
    }
}

pub fn university_counterfactual(
    dataset: &Dataset,
    publication_id: &str,
) -> Result<CounterfactualResult, EfficiencyError> {
    let indicators = Indicators::compute(dataset);
    Counterfactuals::new(dataset, &indicators).university(publication_id)
}

pub fn scientist_counterfactual(
    dataset: &Dataset,
    publication_id: &str,
) -> Result<CounterfactualResult, EfficiencyError> {
    let indicators = Indicators::compute(dataset);
    Counterfactuals::new(dataset, &indicators).scientist(publication_id)
}

/// Aggregate verdicts over eligible publications. Shares are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub level: Level,
    pub publications: usize,
    pub eligible: usize,
    pub ineligible_multi_company: usize,
    pub ineligible_unstable_author: usize,
    /// Eligible publications with at least one better partner.
    pub better_exists: usize,
    /// Eligible publications with at least one better and closer partner.
    pub better_and_closer_exists: usize,
    pub better_exists_pct: Option<f64>,
    /// Over the publications where a better partner exists.
    pub better_and_closer_pct_of_better: Option<f64>,
    /// Over all eligible publications.
    pub better_and_closer_pct_of_eligible: Option<f64>,
    pub mean_better: Option<f64>,
    pub mean_better_and_closer: Option<f64>,
    /// Mean over eligible publications of better / active, in percent.
    pub mean_better_pct_of_active: Option<f64>,
}

impl EfficiencyReport {
    pub fn is_empty(&self) -> bool {
        self.eligible == 0
    }

    pub fn from_results(level: Level, results: &[CounterfactualResult]) -> Self {
        let verdicts: Vec<&Verdict> = results.iter().filter_map(|r| r.verdict.as_ref()).collect();
        let eligible = verdicts.len();
        let reason = |x| results.iter().filter(|r| r.ineligible == Some(x)).count();
        let better = verdicts.iter().filter(|v| v.better_count > 0).count();
        let both = verdicts.iter().filter(|v| v.better_and_closer_count > 0).count();
        let some = |x: f64| (eligible > 0).then_some(x);
        EfficiencyReport {
            level,
            publications: results.len(),
            eligible,
            ineligible_multi_company: reason(IneligibleReason::MultiCompany),
            ineligible_unstable_author: reason(IneligibleReason::UnstableAuthor),
            better_exists: better,
            better_and_closer_exists: both,
            better_exists_pct: some(percent(better, eligible)),
            better_and_closer_pct_of_better: (better > 0).then(|| percent(both, better)),
            better_and_closer_pct_of_eligible: some(percent(both, eligible)),
            mean_better: some(verdicts.iter().map(|v| v.better_count as f64).sum::<f64>() / eligible as f64),
            mean_better_and_closer: some(
                verdicts.iter().map(|v| v.better_and_closer_count as f64).sum::<f64>() / eligible as f64,
            ),
            mean_better_pct_of_active: some(
                verdicts.iter().map(|v| percent(v.better_count, v.active)).sum::<f64>() / eligible as f64,
            ),
        }
    }
}

pub fn efficiency_report(dataset: &Dataset, level: Level) -> EfficiencyReport {
    let indicators = Indicators::compute(dataset);
    let results = Counterfactuals::new(dataset, &indicators).all(level);
    EfficiencyReport::from_results(level, &results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub rank: usize,
    pub university_id: String,
    pub qp: f64,
    pub distance_km: f64,
}

/// Universities of a sector by descending QP (ties by id), annotated with
/// their distance from `point`, truncated to `top_n`.
pub fn recommend(
    dataset: &Dataset,
    indicators: &Indicators,
    point: GeoPoint,
    sds: &str,
    top_n: usize,
) -> Result<Vec<Recommendation>, EfficiencyError> {
    if top_n == 0 {
        return Err(EfficiencyError::ZeroTopN);
    }
    let ranking = indicators
        .rank(dataset, sds, crate::indicators::RankLevel::UniversityByQp)
        .map_err(|_| EfficiencyError::UnknownSds(sds.to_owned()))?;
    Ok(ranking
        .entries
        .into_iter()
        .take(top_n)
        .map(|e| {
            let distance_km = dataset
                .university(&e.entity_id)
                .map_or(f64::NAN, |u| great_circle_km(point, u.location).km());
            Recommendation {
                rank: e.rank,
                university_id: e.entity_id,
                qp: e.score,
                distance_km,
            }
        })
        .collect())
}
