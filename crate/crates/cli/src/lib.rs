//! The `collabmkt` command line. [`run`] is the whole program; `main` only
//! wires it to the process streams.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use collabmkt::collab::{self, GroupBy};
use collabmkt::dataset::{validate, Dataset, GeoPoint};
use collabmkt::efficiency::{self, Counterfactuals, EfficiencyReport, Level};
use collabmkt::indicators::Indicators;
use collabmkt::io::{load_dataset, read_dataset, write_dataset, DataPaths, LoadError};
use collabmkt::proximity;
use collabmkt::synth::{self, SynthConfig, SynthError};

pub mod report;

use report::{pct, Report, Value};

pub const DATA_DIR_ENV: &str = "COLLABMKT_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "collabmkt",
    version,
    about = "University-industry collaboration market analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset and list every problem found
    Validate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Descriptive tables and the distance histogram
    Tables {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        which: Which,
        /// Histogram bin width
        #[arg(long, default_value_t = 50.0, value_parser = positive_km)]
        bin_km: f64,
        /// Granularity of the intensity table
        #[arg(long, value_enum, default_value_t = Granularity::Site)]
        group_by: Granularity,
        /// Last explicit row of the intensity table
        #[arg(long, default_value_t = 10)]
        more_than: usize,
        /// Collaborations counted by the histogram
        #[arg(long, value_enum, default_value_t = CollabLevel::University)]
        level: CollabLevel,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Real versus expected partner distances
    Proximity {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Were better, closer partners available?
    Efficiency {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        level: EfficiencyLevel,
        /// One row per publication instead of the summary
        #[arg(long)]
        detail: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Best universities of a sector, with their distance from a point
    Recommend {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        #[arg(long)]
        sds: String,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        top: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a synthetic dataset
    Synth {
        /// TOML configuration; defaults are used for missing keys
        #[arg(long)]
        config: PathBuf,
        /// Directory receiving the five CSV files
        #[arg(long)]
        out: PathBuf,
        /// Format of the summary printed on standard output
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding the five CSV files
    #[arg(long, env = DATA_DIR_ENV)]
    pub data_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Table1,
    Table2,
    Table3,
    Table4,
    Fig1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Granularity {
    Site,
    Company,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CollabLevel {
    University,
    Sds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EfficiencyLevel {
    University,
    Scientist,
}

fn positive_km(raw: &str) -> Result<f64, String> {
    match raw.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{raw}` is not a positive distance")),
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

/// Runs one invocation. `args` includes the program name. Returns the exit
/// code: 0 on success, 1 on data errors, 2 on usage errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

fn load(data: &DataArgs) -> Result<Dataset, Failure> {
    Ok(load_dataset(&DataPaths::in_dir(&data.data_dir))?)
}

fn emit(report: &Report, output: &OutputArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let bytes = match output.format {
        Format::Csv => report.to_csv()?,
        Format::Json => report.to_json(),
    };
    match &output.out {
        Some(path) => report::write_atomic(path, &bytes)?,
        None => stdout.write_all(&bytes)?,
    }
    Ok(())
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Validate { data, output } => {
            let d = read_dataset(&DataPaths::in_dir(&data.data_dir))?;
            let findings = validate(&d).findings;
            let mut r = Report::new(&["kind", "entity", "id", "field", "message"]);
            for f in &findings {
                r.push(vec![
                    f.kind.to_string().into(),
                    f.entity.to_string().into(),
                    f.id.as_str().into(),
                    f.field.as_str().into(),
                    f.message.as_str().into(),
                ]);
            }
            emit(&r, &output, stdout)?;
            Ok(if findings.is_empty() { 0 } else { 1 })
        }
        Command::Tables {
            data,
            which,
            bin_km,
            group_by,
            more_than,
            level,
            output,
        } => {
            let d = load(&data)?;
            let r = match which {
                Which::Table1 => table1(&d),
                Which::Table2 => table2(&d),
                Which::Table3 => table3(&d),
                Which::Table4 => table4(&d, group_by, more_than),
                Which::Fig1 => fig1(&d, level, bin_km)?,
            };
            emit(&r, &output, stdout)?;
            Ok(0)
        }
        Command::Proximity { data, output } => {
            emit(&proximity_table(&load(&data)?), &output, stdout)?;
            Ok(0)
        }
        Command::Efficiency {
            data,
            level,
            detail,
            output,
        } => {
            let d = load(&data)?;
            let level = match level {
                EfficiencyLevel::University => Level::University,
                EfficiencyLevel::Scientist => Level::Scientist,
            };
            let ind = Indicators::compute(&d);
            let results = Counterfactuals::new(&d, &ind).all(level);
            let r = if detail {
                efficiency_detail(&results)
            } else {
                efficiency_summary(&EfficiencyReport::from_results(level, &results))
            };
            emit(&r, &output, stdout)?;
            Ok(0)
        }
        Command::Recommend {
            data,
            lat,
            lon,
            sds,
            top,
            output,
        } => {
            let point = GeoPoint::new(lat, lon).map_err(|e| Failure::Usage(e.to_string()))?;
            let d = load(&data)?;
            let ind = Indicators::compute(&d);
            let recs =
                efficiency::recommend(&d, &ind, point, &sds, top as usize).map_err(|e| Failure::Data(e.to_string()))?;
            let mut r = Report::new(&["rank", "university_id", "qp", "distance_km"]);
            for rec in recs {
                r.push(vec![
                    rec.rank.into(),
                    rec.university_id.into(),
                    rec.qp.into(),
                    rec.distance_km.into(),
                ]);
            }
            emit(&r, &output, stdout)?;
            Ok(0)
        }
        Command::Synth { config, out, format } => {
            let cfg = SynthConfig::from_file(&config).map_err(|e| match e {
                SynthError::Io { .. } => Failure::Data(e.to_string()),
                _ => Failure::Data(format!("{}: {e}", config.display())),
            })?;
            let d = synth::generate(&cfg).map_err(|e| Failure::Data(e.to_string()))?;
            write_dataset(&d, &out).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
            let r = synth_summary(&d, &out);
            let output = OutputArgs { format, out: None };
            emit(&r, &output, stdout)?;
            Ok(0)
        }
    }
}

fn table1(d: &Dataset) -> Report {
    let s = collab::summary(d);
    let mut r = Report::new(&["level", "publications", "collaborations", "pairs"]);
    r.push(vec![
        "university-company".into(),
        s.publications.into(),
        s.uc_collaborations.into(),
        s.uc_pairs.into(),
    ]);
    r.push(vec![
        "sds-company".into(),
        s.publications.into(),
        s.sc_collaborations.into(),
        s.sc_pairs.into(),
    ]);
    r
}

fn table2(d: &Dataset) -> Report {
    let g = collab::frequency_grids(d);
    let mut r = Report::new(&["companies", "universities", "publications", "share_pct"]);
    for c in &g.cells {
        r.push(vec![
            c.companies.into(),
            c.universities.into(),
            c.publications.into(),
            Value::Pct(g.share_pct(c)),
        ]);
    }
    r
}

fn table3(d: &Dataset) -> Report {
    let g = collab::frequency_grids(d);
    let mut r = Report::new(&["companies", "universities", "mean_sds", "share_pct"]);
    for c in &g.cells {
        r.push(vec![
            c.companies.into(),
            c.universities.into(),
            c.mean_sds_total.into(),
            Value::Pct(g.share_pct(c)),
        ]);
    }
    r
}

fn table4(d: &Dataset, group_by: Granularity, more_than: usize) -> Report {
    let group_by = match group_by {
        Granularity::Site => GroupBy::Site,
        Granularity::Company => GroupBy::Company,
    };
    let t = collab::company_intensity(d, group_by, Some(more_than));
    let mut r = Report::new(&[
        "collaborations_per_entity",
        "entities",
        "entity_pct",
        "cumulative_entity_pct",
        "subtotal",
        "collaboration_pct",
        "cumulative_collaboration_pct",
    ]);
    for row in &t.rows {
        r.push(vec![
            row.bucket.to_string().into(),
            row.entities.into(),
            Value::Pct(row.entity_pct),
            Value::Pct(row.cumulative_entity_pct),
            row.subtotal.into(),
            Value::Pct(row.collaboration_pct),
            Value::Pct(row.cumulative_collaboration_pct),
        ]);
    }
    r
}

fn fig1(d: &Dataset, level: CollabLevel, bin_km: f64) -> Result<Report, Failure> {
    let h = match level {
        CollabLevel::University => collab::distance_histogram(&collab::enumerate_uc(d), bin_km),
        CollabLevel::Sds => collab::distance_histogram(&collab::enumerate_sc(d), bin_km),
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let mut r = Report::new(&["lower_km", "upper_km", "collaborations", "share_pct", "cumulative_pct"]);
    let mut below = 0;
    for b in &h.bins {
        below += b.count;
        r.push(vec![
            b.lower_km.into(),
            b.upper_km.into(),
            b.count.into(),
            Value::Pct(h.share_pct(b)),
            Value::Pct(100.0 * below as f64 / h.total as f64),
        ]);
    }
    Ok(r)
}

fn proximity_table(d: &Dataset) -> Report {
    let p = proximity::proximity_report(d);
    let mut r = Report::new(&[
        "distance",
        "value_km",
        "ratio",
        "used_information",
        "rows",
        "exceeding_real",
        "exceeding_real_pct",
    ]);
    r.push(vec![
        "real average distance".into(),
        p.real.mean_km.into(),
        p.real.ratio_to_real.into(),
        "none".into(),
        p.real.rows.into(),
        Value::Missing,
        Value::Missing,
    ]);
    let lines = [
        ("expected average distance", &p.expected, "geographic"),
        (
            "expected mass barycentric distance",
            &p.mass_barycentric,
            "geographic + sds mass",
        ),
        (
            "expected ss barycentric distance",
            &p.ss_barycentric,
            "geographic + sds performance",
        ),
    ];
    for (name, line, info) in lines {
        r.push(vec![
            name.into(),
            line.mean_km.into(),
            line.ratio_to_real.into(),
            info.into(),
            line.rows.into(),
            line.exceeds_real.into(),
            pct((line.rows > 0).then(|| line.exceeds_share_pct())),
        ]);
    }
    r
}

fn efficiency_summary(e: &EfficiencyReport) -> Report {
    let mut r = Report::new(&[
        "level",
        "publications",
        "eligible",
        "ineligible_multi_company",
        "ineligible_unstable_author",
        "better_exists",
        "better_exists_pct",
        "better_and_closer_exists",
        "better_and_closer_pct_of_better",
        "better_and_closer_pct_of_eligible",
        "mean_better",
        "mean_better_and_closer",
        "mean_better_pct_of_active",
    ]);
    r.push(vec![
        e.level.to_string().into(),
        e.publications.into(),
        e.eligible.into(),
        e.ineligible_multi_company.into(),
        e.ineligible_unstable_author.into(),
        e.better_exists.into(),
        pct(e.better_exists_pct),
        e.better_and_closer_exists.into(),
        pct(e.better_and_closer_pct_of_better),
        pct(e.better_and_closer_pct_of_eligible),
        e.mean_better.into(),
        e.mean_better_and_closer.into(),
        pct(e.mean_better_pct_of_active),
    ]);
    r
}

fn efficiency_detail(results: &[efficiency::CounterfactualResult]) -> Report {
    let mut r = Report::new(&[
        "publication_id",
        "eligible",
        "ineligible_reason",
        "sds_code",
        "benchmark_id",
        "benchmark_score",
        "benchmark_distance_km",
        "active",
        "better",
        "better_and_closer",
    ]);
    for res in results {
        let v = res.verdict.as_ref();
        r.push(vec![
            res.publication_id.as_str().into(),
            res.eligible().into(),
            res.ineligible.map(|x| x.to_string()).into(),
            v.map(|v| v.sds_code.as_str()).into(),
            v.map(|v| v.benchmark_id.as_str()).into(),
            v.map(|v| v.benchmark_score).into(),
            v.map(|v| v.benchmark_distance_km).into(),
            v.map(|v| v.active).into(),
            v.map(|v| v.better_count).into(),
            v.map(|v| v.better_and_closer_count).into(),
        ]);
    }
    r
}

fn synth_summary(d: &Dataset, dir: &Path) -> Report {
    let mut r = Report::new(&["file", "records"]);
    let counts = [
        (collabmkt::io::UNIVERSITIES_FILE, d.universities().len()),
        (collabmkt::io::SITES_FILE, d.sites().len()),
        (collabmkt::io::SCIENTISTS_FILE, d.scientists().len()),
        (collabmkt::io::JOURNALS_FILE, d.journals().len()),
        (collabmkt::io::PUBLICATIONS_FILE, d.publications().len()),
    ];
    for (file, n) in counts {
        r.push(vec![dir.join(file).display().to_string().into(), n.into()]);
    }
    r
}
