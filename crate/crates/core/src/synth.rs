//! Seeded synthetic markets with a configurable partner-choice model.
//!
//! Every synthetic publication has one company site, one sector, one
//! university and one scientist. The site and the sector are drawn
//! uniformly; the university is drawn among those active in the sector with
//! probability proportional to the choice model's weight:
//!
//! | model | weight of university `i` |
//! |-------|--------------------------|
//! | `uniform` | 1 |
//! | `proximity` | `exp(-d_i / λ)` |
//! | `mass` | head count in the sector |
//! | `quality` | `prior` + strength accumulated so far in the sector |
//!
//! The scientist is then drawn uniformly within the chosen university and
//! sector. The whole dataset is a pure function of the configuration.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CompanySite, Dataset, GeoPoint, Journal, Publication, Scientist, Sds, University};
use crate::geo::great_circle_km;
use crate::indicators::journal_percentiles;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geography {
    /// Uniform in latitude and longitude within the box. A box with equal
    /// latitude bounds is a line.
    BoundingBox {
        min_lat: f64,
        max_lat: f64,
        min_lon: f64,
        max_lon: f64,
    },
    /// Each entity is placed at a point drawn uniformly from the list of
    /// `[lat, lon]` pairs.
    PointCloud { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChoiceModel {
    Uniform,
    Proximity { lambda_km: f64 },
    Mass,
    Quality { prior: f64 },
}

/// Log-normal impact factors: `exp(N(mu, sigma²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactFactorParams {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub universities: usize,
    pub sites: usize,
    /// Legal entities owning the sites; defaults to one per site.
    pub companies: Option<usize>,
    pub sds: usize,
    pub macro_areas: usize,
    /// Inclusive range of scientists per (university, sector).
    pub scientists_per_sds: [usize; 2],
    /// Probability that a scientist has a stable affiliation.
    pub stable_share: f64,
    pub categories: usize,
    pub journals_per_category: usize,
    pub publications: usize,
    /// Inclusive range of publication years.
    pub years: [i32; 2],
    pub geography: Geography,
    pub impact_factor: ImpactFactorParams,
    pub choice: ChoiceModel,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            universities: 20,
            sites: 50,
            companies: None,
            sds: 5,
            macro_areas: 1,
            scientists_per_sds: [0, 10],
            stable_share: 1.0,
            categories: 4,
            journals_per_category: 25,
            publications: 1000,
            years: [2001, 2003],
            // roughly the Italian peninsula
            geography: Geography::BoundingBox {
                min_lat: 37.0,
                max_lat: 46.5,
                min_lon: 7.0,
                max_lon: 18.5,
            },
            impact_factor: ImpactFactorParams { mu: 0.5, sigma: 0.8 },
            choice: ChoiceModel::Uniform,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
}

impl SynthConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let config: SynthConfig = toml::from_str(text)?;
        config.check()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn check(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.to_owned()));
        for (name, n) in [
            ("universities", self.universities),
            ("sites", self.sites),
            ("sds", self.sds),
            ("macro_areas", self.macro_areas),
            ("categories", self.categories),
            ("journals_per_category", self.journals_per_category),
            ("publications", self.publications),
        ] {
            if n == 0 {
                return bad(&format!("`{name}` must be positive"));
            }
        }
        if let Some(c) = self.companies {
            if c == 0 || c > self.sites {
                return bad("`companies` must be between 1 and `sites`");
            }
        }
        let [lo, hi] = self.scientists_per_sds;
        if lo > hi || hi == 0 {
            return bad("`scientists_per_sds` must be [min, max] with min <= max and max > 0");
        }
        if !(0.0..=1.0).contains(&self.stable_share) {
            return bad("`stable_share` must lie in [0, 1]");
        }
        if self.years[0] > self.years[1] {
            return bad("`years` must be [first, last] with first <= last");
        }
        let ImpactFactorParams { mu, sigma } = self.impact_factor;
        if !(mu.is_finite() && sigma.is_finite() && sigma >= 0.0) {
            return bad("impact factor `mu` must be finite and `sigma` finite and non-negative");
        }
        match &self.geography {
            Geography::BoundingBox {
                min_lat,
                max_lat,
                min_lon,
                max_lon,
            } => {
                let corners = GeoPoint::new(*min_lat, *min_lon).and(GeoPoint::new(*max_lat, *max_lon));
                if corners.is_err() || min_lat > max_lat || min_lon > max_lon {
                    return bad("bounding box must have valid, ordered corners");
                }
            }
            Geography::PointCloud { points } => {
                if points.is_empty() || points.iter().any(|p| GeoPoint::new(p[0], p[1]).is_err()) {
                    return bad("point cloud must hold at least one valid [lat, lon] point");
                }
            }
        }
        match self.choice {
            ChoiceModel::Proximity { lambda_km } if !(lambda_km.is_finite() && lambda_km > 0.0) => {
                bad("`lambda_km` must be positive")
            }
            ChoiceModel::Quality { prior } if !(prior.is_finite() && prior > 0.0) => bad("`prior` must be positive"),
            _ => Ok(()),
        }
    }
}

fn width(n: usize) -> usize {
    n.to_string().len()
}

fn place(geo: &Geography, rng: &mut ChaCha8Rng) -> GeoPoint {
    match geo {
        Geography::BoundingBox {
            min_lat,
            max_lat,
            min_lon,
            max_lon,
        } => GeoPoint {
            lat: rng.random_range(*min_lat..=*max_lat),
            lon: rng.random_range(*min_lon..=*max_lon),
        },
        Geography::PointCloud { points } => {
            let [lat, lon] = points[rng.random_range(0..points.len())];
            GeoPoint { lat, lon }
        }
    }
}

/// Generates a dataset. Two calls with the same configuration return equal
/// datasets.
pub fn generate(config: &SynthConfig) -> Result<Dataset, SynthError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut b = Dataset::builder();

    let uw = width(config.universities);
    let universities: Vec<University> = (1..=config.universities)
        .map(|i| University {
            id: format!("U{i:0uw$}"),
            name: format!("University {i}"),
            location: place(&config.geography, &mut rng),
        })
        .collect();

    let companies = config.companies.unwrap_or(config.sites);
    let cw = width(companies);
    let sw = width(config.sites);
    let sites: Vec<CompanySite> = (1..=config.sites)
        .map(|i| {
            let company = if companies == config.sites {
                i
            } else {
                rng.random_range(1..=companies)
            };
            CompanySite {
                id: format!("C{i:0sw$}"),
                company_id: format!("F{company:0cw$}"),
                location: place(&config.geography, &mut rng),
            }
        })
        .collect();

    let dw = width(config.sds).max(2);
    let sectors: Vec<Sds> = (1..=config.sds)
        .map(|i| Sds {
            code: format!("SDS/{i:0dw$}"),
            macro_area: format!("A{}", (i - 1) % config.macro_areas + 1),
        })
        .collect();

    // (university index, sds index) -> scientist ids
    let mut staff: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    let mut scientists = Vec::new();
    let [lo, hi] = config.scientists_per_sds;
    for (ui, u) in universities.iter().enumerate() {
        for (si, s) in sectors.iter().enumerate() {
            let n = rng.random_range(lo..=hi);
            for _ in 0..n {
                let id = format!("R{:07}", scientists.len() + 1);
                let stable = rng.random::<f64>() < config.stable_share;
                scientists.push(Scientist {
                    id: id.clone(),
                    university_id: u.id.clone(),
                    sds_code: s.code.clone(),
                    stable_affiliation: stable,
                });
                staff.entry((ui, si)).or_default().push(id);
            }
        }
    }
    // sds index -> active university indices
    let mut active: Vec<Vec<usize>> = vec![Vec::new(); sectors.len()];
    for &(ui, si) in staff.keys() {
        active[si].push(ui);
    }
    if let Some(si) = active.iter().position(Vec::is_empty) {
        return Err(SynthError::Infeasible(format!(
            "sector `{}` has no scientist at any university",
            sectors[si].code
        )));
    }

    let if_dist = LogNormal::new(config.impact_factor.mu, config.impact_factor.sigma)
        .map_err(|e| SynthError::Config(e.to_string()))?;
    let kw = width(config.categories);
    let jw = width(config.journals_per_category);
    let mut journals = Vec::new();
    for c in 1..=config.categories {
        for k in 1..=config.journals_per_category {
            journals.push(Journal {
                id: format!("J{c:0kw$}-{k:0jw$}"),
                category: format!("CAT{c:0kw$}"),
                impact_factor: if_dist.sample(&mut rng),
            });
        }
    }

    for u in &universities {
        b.push_university(u.clone());
    }
    for s in &sites {
        b.push_site(s.clone());
    }
    for s in &sectors {
        b.push_sds(s.clone());
    }
    for s in scientists {
        b.push_scientist(s);
    }
    for j in &journals {
        b.push_journal(j.clone());
    }

    // Percentiles are needed up front by the quality model.
    let percentiles = {
        let mut jb = Dataset::builder();
        for j in &journals {
            jb.push_journal(j.clone());
        }
        let jd = jb.build().expect("generated journal ids are unique");
        journal_percentiles(&jd)
    };
    let mut strength: BTreeMap<(usize, usize), f64> = BTreeMap::new();

    let pw = width(config.publications);
    let mut weights = Vec::new();
    for i in 1..=config.publications {
        let site = &sites[rng.random_range(0..sites.len())];
        let si = rng.random_range(0..sectors.len());
        let candidates = &active[si];

        weights.clear();
        match config.choice {
            ChoiceModel::Uniform => weights.extend(candidates.iter().map(|_| 1.0)),
            ChoiceModel::Mass => weights.extend(candidates.iter().map(|&ui| staff[&(ui, si)].len() as f64)),
            ChoiceModel::Quality { prior } => weights.extend(
                candidates
                    .iter()
                    .map(|&ui| prior + strength.get(&(ui, si)).copied().unwrap_or(0.0)),
            ),
            ChoiceModel::Proximity { lambda_km } => {
                let d: Vec<f64> = candidates
                    .iter()
                    .map(|&ui| great_circle_km(site.location, universities[ui].location).km())
                    .collect();
                // shifted by the nearest candidate so the largest weight is 1
                let nearest = d.iter().copied().fold(f64::INFINITY, f64::min);
                weights.extend(d.iter().map(|x| (-(x - nearest) / lambda_km).exp()));
            }
        }
        let pick = WeightedIndex::new(&weights).map_err(|e| SynthError::Infeasible(e.to_string()))?;
        let ui = candidates[pick.sample(&mut rng)];
        let members = &staff[&(ui, si)];
        let author = &members[rng.random_range(0..members.len())];
        let journal = &journals[rng.random_range(0..journals.len())];
        let year = rng.random_range(config.years[0]..=config.years[1]);

        *strength.entry((ui, si)).or_default() += percentiles[&journal.id].value();
        b.push_publication(Publication {
            id: format!("P{i:0pw$}"),
            year,
            journal_id: journal.id.clone(),
            academic_author_ids: vec![author.clone()],
            company_site_ids: vec![site.id.clone()],
        });
    }

    Ok(b.build().expect("generated ids are unique"))
}
