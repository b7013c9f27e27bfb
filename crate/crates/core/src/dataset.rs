//! Domain records for one observation window and the immutable [`Dataset`]
//! that indexes them.
//!
//! A dataset is assembled through [`DatasetBuilder`], which only rejects
//! duplicate ids. Everything else (coordinates, references, empty author
//! lists) is reported by [`validate`], so that a half-broken dataset can
//! still be inspected. The CSV loader in [`crate::io`] runs both steps and
//! turns the first finding into an error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point on the Earth's surface in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoordinateError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, CoordinateError> {
        if !lat_ok(lat) {
            return Err(CoordinateError::Latitude(lat));
        }
        if !lon_ok(lon) {
            return Err(CoordinateError::Longitude(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn is_valid(&self) -> bool {
        lat_ok(self.lat) && lon_ok(self.lon)
    }
}

fn lat_ok(lat: f64) -> bool {
    lat.is_finite() && (-90.0..=90.0).contains(&lat)
}

fn lon_ok(lon: f64) -> bool {
    lon.is_finite() && (-180.0..=180.0).contains(&lon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct University {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
}

/// One physical location of a company. Sites, not legal entities, are the
/// unit of geography and of partner choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanySite {
    pub id: String,
    pub company_id: String,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scientist {
    pub id: String,
    pub university_id: String,
    pub sds_code: String,
    /// Same university and same sector for the whole window.
    pub stable_affiliation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Journal {
    pub id: String,
    pub category: String,
    pub impact_factor: f64,
}

/// A scientific disciplinary sector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sds {
    pub code: String,
    pub macro_area: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Publication {
    pub id: String,
    pub year: i32,
    pub journal_id: String,
    pub academic_author_ids: Vec<String>,
    pub company_site_ids: Vec<String>,
}

/// The kinds of record a dataset holds. Used in error and finding locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    University,
    Site,
    Scientist,
    Journal,
    Sds,
    Publication,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::University => "university",
            EntityKind::Site => "site",
            EntityKind::Scientist => "scientist",
            EntityKind::Journal => "journal",
            EntityKind::Sds => "sds",
            EntityKind::Publication => "publication",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate {entity} id `{id}`")]
pub struct DuplicateIdError {
    pub entity: EntityKind,
    pub id: String,
}

/// Collects records and freezes them into a [`Dataset`].
#[derive(Debug, Default, Clone)]
pub struct DatasetBuilder {
    universities: Vec<University>,
    sites: Vec<CompanySite>,
    scientists: Vec<Scientist>,
    journals: Vec<Journal>,
    sectors: Vec<Sds>,
    publications: Vec<Publication>,
}

impl DatasetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn university(mut self, id: &str, name: &str, location: GeoPoint) -> Self {
        self.universities.push(University {
            id: id.to_owned(),
            name: name.to_owned(),
            location,
        });
        self
    }

    pub fn site(mut self, id: &str, company_id: &str, location: GeoPoint) -> Self {
        self.sites.push(CompanySite {
            id: id.to_owned(),
            company_id: company_id.to_owned(),
            location,
        });
        self
    }

    pub fn sds(mut self, code: &str, macro_area: &str) -> Self {
        self.sectors.push(Sds {
            code: code.to_owned(),
            macro_area: macro_area.to_owned(),
        });
        self
    }

    pub fn scientist(mut self, id: &str, university_id: &str, sds_code: &str, stable: bool) -> Self {
        self.scientists.push(Scientist {
            id: id.to_owned(),
            university_id: university_id.to_owned(),
            sds_code: sds_code.to_owned(),
            stable_affiliation: stable,
        });
        self
    }

    pub fn journal(mut self, id: &str, category: &str, impact_factor: f64) -> Self {
        self.journals.push(Journal {
            id: id.to_owned(),
            category: category.to_owned(),
            impact_factor,
        });
        self
    }

    pub fn publication(mut self, id: &str, year: i32, journal_id: &str, authors: &[&str], sites: &[&str]) -> Self {
        self.publications.push(Publication {
            id: id.to_owned(),
            year,
            journal_id: journal_id.to_owned(),
            academic_author_ids: authors.iter().map(|s| s.to_string()).collect(),
            company_site_ids: sites.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    pub fn push_university(&mut self, u: University) {
        self.universities.push(u);
    }

    pub fn push_site(&mut self, s: CompanySite) {
        self.sites.push(s);
    }

    pub fn push_scientist(&mut self, s: Scientist) {
        self.scientists.push(s);
    }

    pub fn push_journal(&mut self, j: Journal) {
        self.journals.push(j);
    }

    pub fn push_sds(&mut self, s: Sds) {
        self.sectors.push(s);
    }

    pub fn push_publication(&mut self, p: Publication) {
        self.publications.push(p);
    }

    pub fn build(self) -> Result<Dataset, DuplicateIdError> {
        let universities = keyed(self.universities, EntityKind::University, |u| &u.id)?;
        let sites = keyed(self.sites, EntityKind::Site, |s| &s.id)?;
        let scientists = keyed(self.scientists, EntityKind::Scientist, |s| &s.id)?;
        let journals = keyed(self.journals, EntityKind::Journal, |j| &j.id)?;
        let sectors = keyed(self.sectors, EntityKind::Sds, |s| &s.code)?;
        let publications = keyed(self.publications, EntityKind::Publication, |p| &p.id)?;

        let mut staff: BTreeMap<(String, String), usize> = BTreeMap::new();
        let mut members: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for s in scientists.values() {
            *staff.entry((s.university_id.clone(), s.sds_code.clone())).or_default() += 1;
            members.entry(s.sds_code.clone()).or_default().push(s.id.clone());
        }
        let mut active: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (university, sds) in staff.keys() {
            active.entry(sds.clone()).or_default().push(university.clone());
        }

        Ok(Dataset {
            universities,
            sites,
            scientists,
            journals,
            sectors,
            publications,
            staff,
            active,
            members,
        })
    }
}

fn keyed<T>(
    items: Vec<T>,
    entity: EntityKind,
    key: impl Fn(&T) -> &String,
) -> Result<BTreeMap<String, T>, DuplicateIdError> {
    let mut map = BTreeMap::new();
    for item in items {
        let id = key(&item).clone();
        if map.contains_key(&id) {
            return Err(DuplicateIdError { entity, id });
        }
        map.insert(id, item);
    }
    Ok(map)
}

/// Identity-resolved snapshot of one observation window.
///
/// All maps iterate in lexicographic id order, which every report relies on
/// for determinism.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    universities: BTreeMap<String, University>,
    sites: BTreeMap<String, CompanySite>,
    scientists: BTreeMap<String, Scientist>,
    journals: BTreeMap<String, Journal>,
    sectors: BTreeMap<String, Sds>,
    publications: BTreeMap<String, Publication>,
    // (university, sds) -> head count
    staff: BTreeMap<(String, String), usize>,
    // sds -> universities with at least one scientist, sorted
    active: BTreeMap<String, Vec<String>>,
    // sds -> scientist ids, sorted
    members: BTreeMap<String, Vec<String>>,
}

impl Dataset {
    pub fn builder() -> DatasetBuilder {
        DatasetBuilder::new()
    }

    pub fn universities(&self) -> &BTreeMap<String, University> {
        &self.universities
    }

    pub fn sites(&self) -> &BTreeMap<String, CompanySite> {
        &self.sites
    }

    pub fn scientists(&self) -> &BTreeMap<String, Scientist> {
        &self.scientists
    }

    pub fn journals(&self) -> &BTreeMap<String, Journal> {
        &self.journals
    }

    pub fn sectors(&self) -> &BTreeMap<String, Sds> {
        &self.sectors
    }

    pub fn publications(&self) -> &BTreeMap<String, Publication> {
        &self.publications
    }

    pub fn university(&self, id: &str) -> Option<&University> {
        self.universities.get(id)
    }

    pub fn site(&self, id: &str) -> Option<&CompanySite> {
        self.sites.get(id)
    }

    pub fn scientist(&self, id: &str) -> Option<&Scientist> {
        self.scientists.get(id)
    }

    pub fn journal(&self, id: &str) -> Option<&Journal> {
        self.journals.get(id)
    }

    pub fn publication(&self, id: &str) -> Option<&Publication> {
        self.publications.get(id)
    }

    /// Number of scientists of `university` in `sds` (the sector's mass).
    pub fn staff(&self, university: &str, sds: &str) -> usize {
        self.staff
            .get(&(university.to_owned(), sds.to_owned()))
            .copied()
            .unwrap_or(0)
    }

    /// Every `(university, sds)` pair with at least one scientist.
    pub fn staff_index(&self) -> &BTreeMap<(String, String), usize> {
        &self.staff
    }

    /// Universities with at least one scientist in `sds`, in id order.
    pub fn active_universities(&self, sds: &str) -> &[String] {
        self.active.get(sds).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Scientists belonging to `sds`, in id order.
    pub fn sds_members(&self, sds: &str) -> &[String] {
        self.members.get(sds).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct universities of a publication's academic authors, sorted.
    /// Authors that do not resolve are skipped.
    pub fn publication_universities<'a>(&'a self, publication: &'a Publication) -> Vec<&'a str> {
        let set: BTreeSet<&str> = publication
            .academic_author_ids
            .iter()
            .filter_map(|a| self.scientists.get(a))
            .map(|s| s.university_id.as_str())
            .collect();
        set.into_iter().collect()
    }

    /// Distinct `(university, sds)` pairs among a publication's academic
    /// authors, sorted.
    pub fn publication_sectors<'a>(&'a self, publication: &'a Publication) -> Vec<(&'a str, &'a str)> {
        let set: BTreeSet<(&str, &str)> = publication
            .academic_author_ids
            .iter()
            .filter_map(|a| self.scientists.get(a))
            .map(|s| (s.university_id.as_str(), s.sds_code.as_str()))
            .collect();
        set.into_iter().collect()
    }

    /// Distinct company sites of a publication, sorted.
    pub fn publication_sites<'a>(&self, publication: &'a Publication) -> Vec<&'a str> {
        let set: BTreeSet<&str> = publication.company_site_ids.iter().map(String::as_str).collect();
        set.into_iter().collect()
    }
}

/// What kind of invariant a [`Finding`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    /// Coordinate out of range or not finite.
    Geometric,
    /// A required value or set is empty.
    Completeness,
    /// An id does not resolve.
    Reference,
    /// An id repeated inside one set.
    Duplicate,
    /// A numeric value out of its domain.
    Value,
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingKind::Geometric => "geometric",
            FindingKind::Completeness => "completeness",
            FindingKind::Reference => "reference",
            FindingKind::Duplicate => "duplicate",
            FindingKind::Value => "value",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub entity: EntityKind,
    pub id: String,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, kind: FindingKind, entity: EntityKind, id: &str, field: &str, message: String) {
        self.findings.push(Finding {
            kind,
            entity,
            id: id.to_owned(),
            field: field.to_owned(),
            message,
        });
    }
}

/// Checks every record invariant and returns the violations as data.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();

    for u in dataset.universities.values() {
        check_id(&mut report, EntityKind::University, &u.id);
        check_point(&mut report, EntityKind::University, &u.id, u.location);
    }
    for s in dataset.sites.values() {
        check_id(&mut report, EntityKind::Site, &s.id);
        check_point(&mut report, EntityKind::Site, &s.id, s.location);
        if s.company_id.is_empty() {
            report.push(
                FindingKind::Completeness,
                EntityKind::Site,
                &s.id,
                "company_id",
                "site has no parent company".into(),
            );
        }
    }
    for s in dataset.sectors.values() {
        check_id(&mut report, EntityKind::Sds, &s.code);
    }
    for s in dataset.scientists.values() {
        check_id(&mut report, EntityKind::Scientist, &s.id);
        if !dataset.universities.contains_key(&s.university_id) {
            report.push(
                FindingKind::Reference,
                EntityKind::Scientist,
                &s.id,
                "university_id",
                format!("unknown university id `{}`", s.university_id),
            );
        }
        if !dataset.sectors.contains_key(&s.sds_code) {
            report.push(
                FindingKind::Reference,
                EntityKind::Scientist,
                &s.id,
                "sds_code",
                format!("unknown sds code `{}`", s.sds_code),
            );
        }
    }
    for j in dataset.journals.values() {
        check_id(&mut report, EntityKind::Journal, &j.id);
        if j.category.is_empty() {
            report.push(
                FindingKind::Completeness,
                EntityKind::Journal,
                &j.id,
                "category",
                "empty category".into(),
            );
        }
        if !(j.impact_factor.is_finite() && j.impact_factor >= 0.0) {
            report.push(
                FindingKind::Value,
                EntityKind::Journal,
                &j.id,
                "impact_factor",
                format!("impact factor {} is not a non-negative number", j.impact_factor),
            );
        }
    }
    for p in dataset.publications.values() {
        check_id(&mut report, EntityKind::Publication, &p.id);
        if !dataset.journals.contains_key(&p.journal_id) {
            report.push(
                FindingKind::Reference,
                EntityKind::Publication,
                &p.id,
                "journal_id",
                format!("unknown journal id `{}`", p.journal_id),
            );
        }
        check_id_set(
            &mut report,
            p,
            "academic_author_ids",
            &p.academic_author_ids,
            |id| dataset.scientists.contains_key(id),
            "scientist",
        );
        check_id_set(
            &mut report,
            p,
            "company_site_ids",
            &p.company_site_ids,
            |id| dataset.sites.contains_key(id),
            "site",
        );
    }
    report
}

fn check_id(report: &mut ValidationReport, entity: EntityKind, id: &str) {
    if id.trim().is_empty() {
        report.push(FindingKind::Completeness, entity, id, "id", "empty id".into());
    }
}

fn check_point(report: &mut ValidationReport, entity: EntityKind, id: &str, p: GeoPoint) {
    if !lat_ok(p.lat) {
        report.push(
            FindingKind::Geometric,
            entity,
            id,
            "lat",
            format!("latitude {} outside [-90, 90]", p.lat),
        );
    }
    if !lon_ok(p.lon) {
        report.push(
            FindingKind::Geometric,
            entity,
            id,
            "lon",
            format!("longitude {} outside [-180, 180]", p.lon),
        );
    }
}

fn check_id_set(
    report: &mut ValidationReport,
    p: &Publication,
    field: &str,
    ids: &[String],
    resolves: impl Fn(&str) -> bool,
    target: &str,
) {
    if ids.is_empty() {
        report.push(
            FindingKind::Completeness,
            EntityKind::Publication,
            &p.id,
            field,
            format!("no {target} listed"),
        );
    }
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            report.push(
                FindingKind::Duplicate,
                EntityKind::Publication,
                &p.id,
                field,
                format!("{target} `{id}` listed twice"),
            );
        }
        if !resolves(id) {
            report.push(
                FindingKind::Reference,
                EntityKind::Publication,
                &p.id,
                field,
                format!("unknown {target} id `{id}`"),
            );
        }
    }
}
