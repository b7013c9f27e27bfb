//! Reading and writing the five-file CSV layout.
//!
//! | file | columns |
//! |------|---------|
//! | `universities.csv` | `id,name,lat,lon` |
//! | `sites.csv` | `id,company_id,lat,lon` |
//! | `scientists.csv` | `id,university_id,sds_code,macro_area,stable` |
//! | `journals.csv` | `id,category,impact_factor` |
//! | `publications.csv` | `id,year,journal_id,academic_author_ids,company_site_ids` |
//!
//! The two id-set columns of `publications.csv` hold `;`-separated lists.
//! Sectors are not stored in their own file: they are collected from the
//! `sds_code` and `macro_area` columns of `scientists.csv`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::{
    validate, CompanySite, Dataset, EntityKind, FindingKind, GeoPoint, Journal, Publication, Scientist, Sds, University,
};

pub const UNIVERSITIES_FILE: &str = "universities.csv";
pub const SITES_FILE: &str = "sites.csv";
pub const SCIENTISTS_FILE: &str = "scientists.csv";
pub const JOURNALS_FILE: &str = "journals.csv";
pub const PUBLICATIONS_FILE: &str = "publications.csv";

const UNIVERSITY_COLUMNS: &[&str] = &["id", "name", "lat", "lon"];
const SITE_COLUMNS: &[&str] = &["id", "company_id", "lat", "lon"];
const SCIENTIST_COLUMNS: &[&str] = &["id", "university_id", "sds_code", "macro_area", "stable"];
const JOURNAL_COLUMNS: &[&str] = &["id", "category", "impact_factor"];
const PUBLICATION_COLUMNS: &[&str] = &["id", "year", "journal_id", "academic_author_ids", "company_site_ids"];

/// Locations of the five input files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPaths {
    pub universities: PathBuf,
    pub sites: PathBuf,
    pub scientists: PathBuf,
    pub journals: PathBuf,
    pub publications: PathBuf,
}

impl DataPaths {
    /// The conventional file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        DataPaths {
            universities: dir.join(UNIVERSITIES_FILE),
            sites: dir.join(SITES_FILE),
            scientists: dir.join(SCIENTISTS_FILE),
            journals: dir.join(JOURNALS_FILE),
            publications: dir.join(PUBLICATIONS_FILE),
        }
    }

    fn for_entity(&self, entity: EntityKind) -> &Path {
        match entity {
            EntityKind::University => &self.universities,
            EntityKind::Site => &self.sites,
            EntityKind::Scientist | EntityKind::Sds => &self.scientists,
            EntityKind::Journal => &self.journals,
            EntityKind::Publication => &self.publications,
        }
    }
}

/// Where in the input a problem was found. `line` is the 1-based line of
/// the record in its file (the header is line 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: PathBuf,
    pub line: u64,
    pub field: String,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: field `{}`", self.file.display(), self.line, self.field)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", file.display())]
    Io {
        file: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", file.display())]
    Csv {
        file: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: missing column `{column}`", file.display())]
    MissingColumn { file: PathBuf, column: String },
    #[error("{location}: {message}")]
    Parse { location: Location, message: String },
    #[error("{location}: unknown {target} id `{id}`")]
    DanglingReference {
        location: Location,
        target: String,
        id: String,
    },
    #[error("{location}: duplicate id `{id}`")]
    DuplicateId { location: Location, id: String },
    #[error("{location}: {message}")]
    Invalid { location: Location, message: String },
}

struct Table {
    file: PathBuf,
    columns: HashMap<String, usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(file: &Path, required: &[&str]) -> Result<Table, LoadError> {
        let handle = File::open(file).map_err(|source| LoadError::Io {
            file: file.to_owned(),
            source,
        })?;
        let csv_err = |source| LoadError::Csv {
            file: file.to_owned(),
            source,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(handle);
        let columns: HashMap<String, usize> = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_owned(), i))
            .collect();
        for column in required {
            if !columns.contains_key(*column) {
                return Err(LoadError::MissingColumn {
                    file: file.to_owned(),
                    column: (*column).to_owned(),
                });
            }
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, record));
        }
        Ok(Table {
            file: file.to_owned(),
            columns,
            rows,
        })
    }

    fn location(&self, line: u64, field: &str) -> Location {
        Location {
            file: self.file.clone(),
            line,
            field: field.to_owned(),
        }
    }

    fn text<'r>(&self, record: &'r csv::StringRecord, column: &str) -> &'r str {
        record.get(self.columns[column]).unwrap_or("")
    }

    fn parsed<T: std::str::FromStr>(&self, line: u64, record: &csv::StringRecord, column: &str) -> Result<T, LoadError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.text(record, column);
        raw.parse::<T>().map_err(|e| LoadError::Parse {
            location: self.location(line, column),
            message: format!("cannot parse `{raw}`: {e}"),
        })
    }

    fn point(&self, line: u64, record: &csv::StringRecord) -> Result<GeoPoint, LoadError> {
        let lat: f64 = self.parsed(line, record, "lat")?;
        let lon: f64 = self.parsed(line, record, "lon")?;
        GeoPoint::new(lat, lon).map_err(|e| LoadError::Parse {
            location: self.location(
                line,
                match e {
                    crate::dataset::CoordinateError::Latitude(_) => "lat",
                    crate::dataset::CoordinateError::Longitude(_) => "lon",
                },
            ),
            message: e.to_string(),
        })
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Some(true),
        "false" | "0" | "no" | "n" => Some(false),
        _ => None,
    }
}

fn split_ids(raw: &str) -> Vec<String> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

// Records the line of every id so findings on the built dataset can be
// traced back to the input.
#[derive(Default)]
struct Lines(BTreeMap<(EntityKind, String), u64>);

impl Lines {
    fn claim(&mut self, table: &Table, entity: EntityKind, id: &str, line: u64) -> Result<(), LoadError> {
        if self.0.insert((entity, id.to_owned()), line).is_some() {
            return Err(LoadError::DuplicateId {
                location: table.location(line, "id"),
                id: id.to_owned(),
            });
        }
        Ok(())
    }

    fn get(&self, entity: EntityKind, id: &str) -> u64 {
        self.0.get(&(entity, id.to_owned())).copied().unwrap_or(0)
    }
}

/// Parses the five files and builds a [`Dataset`] without checking
/// references. Syntax errors, bad coordinates and duplicate ids still fail.
pub fn read_dataset(paths: &DataPaths) -> Result<Dataset, LoadError> {
    read_with_lines(paths).map(|(d, _)| d)
}

fn read_with_lines(paths: &DataPaths) -> Result<(Dataset, Lines), LoadError> {
    let mut lines = Lines::default();
    let mut builder = Dataset::builder();

    let t = Table::read(&paths.universities, UNIVERSITY_COLUMNS)?;
    for (line, r) in &t.rows {
        let id = t.text(r, "id");
        lines.claim(&t, EntityKind::University, id, *line)?;
        builder.push_university(University {
            id: id.to_owned(),
            name: t.text(r, "name").to_owned(),
            location: t.point(*line, r)?,
        });
    }

    let t = Table::read(&paths.sites, SITE_COLUMNS)?;
    for (line, r) in &t.rows {
        let id = t.text(r, "id");
        lines.claim(&t, EntityKind::Site, id, *line)?;
        builder.push_site(CompanySite {
            id: id.to_owned(),
            company_id: t.text(r, "company_id").to_owned(),
            location: t.point(*line, r)?,
        });
    }

    let t = Table::read(&paths.scientists, SCIENTIST_COLUMNS)?;
    let mut sectors: BTreeMap<String, String> = BTreeMap::new();
    for (line, r) in &t.rows {
        let id = t.text(r, "id");
        lines.claim(&t, EntityKind::Scientist, id, *line)?;
        let code = t.text(r, "sds_code");
        let macro_area = t.text(r, "macro_area");
        if code.is_empty() {
            return Err(LoadError::Invalid {
                location: t.location(*line, "sds_code"),
                message: "empty sds code".into(),
            });
        }
        match sectors.get(code) {
            Some(known) if known != macro_area => {
                return Err(LoadError::Invalid {
                    location: t.location(*line, "macro_area"),
                    message: format!("sds `{code}` already assigned to macro area `{known}`"),
                });
            }
            Some(_) => {}
            None => {
                sectors.insert(code.to_owned(), macro_area.to_owned());
                lines.0.insert((EntityKind::Sds, code.to_owned()), *line);
            }
        }
        let raw = t.text(r, "stable");
        let stable = parse_bool(raw).ok_or_else(|| LoadError::Parse {
            location: t.location(*line, "stable"),
            message: format!("cannot parse `{raw}` as a boolean"),
        })?;
        builder.push_scientist(Scientist {
            id: id.to_owned(),
            university_id: t.text(r, "university_id").to_owned(),
            sds_code: code.to_owned(),
            stable_affiliation: stable,
        });
    }
    for (code, macro_area) in sectors {
        builder.push_sds(Sds { code, macro_area });
    }

    let t = Table::read(&paths.journals, JOURNAL_COLUMNS)?;
    for (line, r) in &t.rows {
        let id = t.text(r, "id");
        lines.claim(&t, EntityKind::Journal, id, *line)?;
        builder.push_journal(Journal {
            id: id.to_owned(),
            category: t.text(r, "category").to_owned(),
            impact_factor: t.parsed(*line, r, "impact_factor")?,
        });
    }

    let t = Table::read(&paths.publications, PUBLICATION_COLUMNS)?;
    for (line, r) in &t.rows {
        let id = t.text(r, "id");
        lines.claim(&t, EntityKind::Publication, id, *line)?;
        builder.push_publication(Publication {
            id: id.to_owned(),
            year: t.parsed(*line, r, "year")?,
            journal_id: t.text(r, "journal_id").to_owned(),
            academic_author_ids: split_ids(t.text(r, "academic_author_ids")),
            company_site_ids: split_ids(t.text(r, "company_site_ids")),
        });
    }

    // Duplicates were caught above with their lines.
    let dataset = builder.build().expect("ids were checked while reading");
    Ok((dataset, lines))
}

/// Reads, builds and validates a dataset. The first validation finding is
/// returned as an error carrying its file, line and field.
pub fn load_dataset(paths: &DataPaths) -> Result<Dataset, LoadError> {
    let (dataset, lines) = read_with_lines(paths)?;
    let report = validate(&dataset);
    if let Some(f) = report.findings.into_iter().next() {
        let location = Location {
            file: paths.for_entity(f.entity).to_owned(),
            line: lines.get(f.entity, &f.id),
            field: f.field.clone(),
        };
        return Err(match f.kind {
            FindingKind::Reference => LoadError::DanglingReference {
                location,
                target: reference_target(&f.field).to_owned(),
                id: dangling_id(&f.message),
            },
            FindingKind::Geometric => LoadError::Parse {
                location,
                message: f.message,
            },
            _ => LoadError::Invalid {
                location,
                message: f.message,
            },
        });
    }
    Ok(dataset)
}

fn reference_target(field: &str) -> &'static str {
    match field {
        "university_id" => "university",
        "sds_code" => "sds",
        "journal_id" => "journal",
        "academic_author_ids" => "scientist",
        "company_site_ids" => "site",
        _ => "record",
    }
}

fn dangling_id(message: &str) -> String {
    message.split('`').nth(1).map(str::to_owned).unwrap_or_default()
}

const FILES: [&str; 5] = [
    UNIVERSITIES_FILE,
    SITES_FILE,
    SCIENTISTS_FILE,
    JOURNALS_FILE,
    PUBLICATIONS_FILE,
];

/// Writes the dataset as the five CSV files in `dir` (created if needed).
/// Output is a pure function of the dataset.
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<(), csv::Error> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    for name in FILES {
        write_file(dataset, name, File::create(dir.join(name))?)?;
    }
    Ok(())
}

/// Serializes every file of the dataset into one byte buffer, each file
/// preceded by its name on a line of its own.
pub fn dataset_bytes(dataset: &Dataset) -> Result<Vec<u8>, csv::Error> {
    let mut out = Vec::new();
    for name in FILES {
        out.extend_from_slice(name.as_bytes());
        out.push(b'\n');
        write_file(dataset, name, &mut out)?;
    }
    Ok(out)
}

fn write_file<W: Write>(dataset: &Dataset, name: &str, sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    match name {
        UNIVERSITIES_FILE => {
            w.write_record(UNIVERSITY_COLUMNS)?;
            for u in dataset.universities().values() {
                w.write_record([
                    u.id.as_str(),
                    &u.name,
                    &u.location.lat.to_string(),
                    &u.location.lon.to_string(),
                ])?;
            }
        }
        SITES_FILE => {
            w.write_record(SITE_COLUMNS)?;
            for s in dataset.sites().values() {
                w.write_record([
                    s.id.as_str(),
                    &s.company_id,
                    &s.location.lat.to_string(),
                    &s.location.lon.to_string(),
                ])?;
            }
        }
        SCIENTISTS_FILE => {
            w.write_record(SCIENTIST_COLUMNS)?;
            for s in dataset.scientists().values() {
                let macro_area = dataset
                    .sectors()
                    .get(&s.sds_code)
                    .map(|x| x.macro_area.as_str())
                    .unwrap_or("");
                w.write_record([
                    s.id.as_str(),
                    &s.university_id,
                    &s.sds_code,
                    macro_area,
                    if s.stable_affiliation { "true" } else { "false" },
                ])?;
            }
        }
        JOURNALS_FILE => {
            w.write_record(JOURNAL_COLUMNS)?;
            for j in dataset.journals().values() {
                w.write_record([j.id.as_str(), &j.category, &j.impact_factor.to_string()])?;
            }
        }
        PUBLICATIONS_FILE => {
            w.write_record(PUBLICATION_COLUMNS)?;
            for p in dataset.publications().values() {
                w.write_record([
                    p.id.as_str(),
                    &p.year.to_string(),
                    &p.journal_id,
                    &p.academic_author_ids.join(";"),
                    &p.company_site_ids.join(";"),
                ])?;
            }
        }
        _ => unreachable!("unknown dataset file {name}"),
    }
    w.flush()?;
    Ok(())
}
