//! CSV tables and the key=value configuration file.
//!
//! researchers.csv: `researcher_id,institution_id,field_code,rank,years_active`
//! publications.csv: `publication_id,year,subject_category,citations,authors`
//! where `authors` is `pos:researcher_id_or_dash:institution_id;...`
//! baselines.csv: `year,subject_category,mean_citations`

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use crate::indicator::WeightingScheme;
use crate::model::{
    AssessmentConfig, AuthorSlot, CitationBaseline, GrandMeanMode, PublicationRecord, Rank,
    ResearcherRecord, SkewnessTarget,
};

use super::CliError;

pub const RESEARCHER_COLUMNS: [&str; 5] = [
    "researcher_id",
    "institution_id",
    "field_code",
    "rank",
    "years_active",
];
pub const PUBLICATION_COLUMNS: [&str; 5] = [
    "publication_id",
    "year",
    "subject_category",
    "citations",
    "authors",
];
pub const BASELINE_COLUMNS: [&str; 3] = ["year", "subject_category", "mean_citations"];

/// A parsed record with the 1-based line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Located<T> {
    pub line: u64,
    pub value: T,
}

pub(crate) fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse_error(file: &str, line: u64, column: usize, reason: impl Into<String>) -> CliError {
    CliError::Parse {
        file: file.to_owned(),
        line,
        column,
        reason: reason.into(),
    }
}

/// Reads a headed CSV table, checking the header, and hands every data row
/// (with its line number) to `row`.
fn read_table<R: Read, T>(
    reader: R,
    file: &str,
    columns: &[&str],
    mut row: impl FnMut(u64, &csv::StringRecord) -> Result<T, CliError>,
) -> Result<Vec<Located<T>>, CliError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = csv.headers().map_err(|e| csv_error(file, e))?.clone();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != columns {
        return Err(parse_error(
            file,
            1,
            1,
            format!(
                "expected header {:?}, found {:?}",
                columns.join(","),
                found.join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| csv_error(file, e))?;
        let line = record.position().map_or(0, |p| p.line());
        out.push(Located {
            line,
            value: row(line, &record)?,
        });
    }
    Ok(out)
}

fn csv_error(file: &str, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    parse_error(file, line, 0, e.to_string())
}

fn field<'r>(
    file: &str,
    line: u64,
    record: &'r csv::StringRecord,
    column: usize,
) -> Result<&'r str, CliError> {
    let value = record.get(column).unwrap_or("").trim();
    if value.is_empty() {
        Err(parse_error(file, line, column + 1, "empty field"))
    } else {
        Ok(value)
    }
}

fn parsed<T: FromStr>(
    file: &str,
    line: u64,
    record: &csv::StringRecord,
    column: usize,
    what: &str,
) -> Result<T, CliError> {
    let raw = field(file, line, record, column)?;
    raw.parse().map_err(|_| {
        parse_error(
            file,
            line,
            column + 1,
            format!("{raw:?} is not a valid {what}"),
        )
    })
}

pub fn parse_researchers<R: Read>(
    reader: R,
    file: &str,
) -> Result<Vec<Located<ResearcherRecord>>, CliError> {
    read_table(reader, file, &RESEARCHER_COLUMNS, |line, rec| {
        let rank_raw = field(file, line, rec, 3)?;
        let rank = rank_raw
            .parse::<Rank>()
            .map_err(|reason| parse_error(file, line, 4, reason))?;
        Ok(ResearcherRecord {
            researcher_id: field(file, line, rec, 0)?.to_owned(),
            institution_id: field(file, line, rec, 1)?.to_owned(),
            field_code: field(file, line, rec, 2)?.to_owned(),
            rank,
            years_active: parsed(file, line, rec, 4, "non-negative integer")?,
        })
    })
}

/// Parses an author cell such as `1:r17:UNI-A;2:-:UNI-B`.
pub fn parse_authors(cell: &str) -> Result<Vec<AuthorSlot>, String> {
    cell.split(';')
        .map(str::trim)
        .filter(|slot| !slot.is_empty())
        .map(|slot| {
            let mut parts = slot.splitn(3, ':');
            let (Some(pos), Some(id), Some(inst)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(format!(
                    "author slot {slot:?} is not pos:researcher_id:institution_id"
                ));
            };
            let position = pos
                .trim()
                .parse::<u32>()
                .map_err(|_| format!("author position {pos:?} is not a positive integer"))?;
            let id = id.trim();
            let inst = inst.trim();
            if id.is_empty() || inst.is_empty() {
                return Err(format!("author slot {slot:?} has an empty field"));
            }
            Ok(AuthorSlot {
                position,
                researcher_id: (id != "-").then(|| id.to_owned()),
                institution_id: inst.to_owned(),
            })
        })
        .collect()
}

pub fn format_authors(authors: &[AuthorSlot]) -> String {
    authors
        .iter()
        .map(|a| {
            format!(
                "{}:{}:{}",
                a.position,
                a.researcher_id.as_deref().unwrap_or("-"),
                a.institution_id
            )
        })
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_publications<R: Read>(
    reader: R,
    file: &str,
) -> Result<Vec<Located<PublicationRecord>>, CliError> {
    read_table(reader, file, &PUBLICATION_COLUMNS, |line, rec| {
        let authors = parse_authors(rec.get(4).unwrap_or(""))
            .map_err(|reason| parse_error(file, line, 5, reason))?;
        Ok(PublicationRecord {
            publication_id: field(file, line, rec, 0)?.to_owned(),
            year: parsed(file, line, rec, 1, "year")?,
            subject_category: field(file, line, rec, 2)?.to_owned(),
            citations: parsed(file, line, rec, 3, "non-negative citation count")?,
            authors,
        })
    })
}

pub fn parse_baselines<R: Read>(reader: R, file: &str) -> Result<CitationBaseline<f64>, CliError> {
    let rows = read_table(reader, file, &BASELINE_COLUMNS, |line, rec| {
        let year: i32 = parsed(file, line, rec, 0, "year")?;
        let category = field(file, line, rec, 1)?.to_owned();
        let mean: f64 = parsed(file, line, rec, 2, "number")?;
        Ok((year, category, mean))
    })?;
    let mut baselines = CitationBaseline::new();
    let mut seen = HashSet::new();
    for Located {
        line,
        value: (year, category, mean),
    } in rows
    {
        if !seen.insert((year, category.clone())) {
            return Err(parse_error(
                file,
                line,
                1,
                format!("duplicate baseline for ({year}, {category:?})"),
            ));
        }
        baselines
            .insert(year, category, mean)
            .map_err(|e| parse_error(file, line, 3, e.to_string()))?;
    }
    Ok(baselines)
}

fn parse_number_list(raw: &str) -> Option<Vec<f64>> {
    raw.split(',').map(|v| v.trim().parse().ok()).collect()
}

/// Parses a configuration file. Unset keys keep their defaults; unknown keys
/// are rejected.
pub fn parse_config(text: &str, file: &str) -> Result<AssessmentConfig<f64>, CliError> {
    let mut config = AssessmentConfig::default();
    for (index, raw) in text.lines().enumerate() {
        let line = index as u64 + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(parse_error(file, line, 1, "expected key = value"));
        };
        let (key, value) = (key.trim(), value.trim());
        let column = raw.find(value).map_or(1, |c| c + 1);
        let bad = |what: &str| {
            parse_error(
                file,
                line,
                column,
                format!("{key}: {value:?} is not {what}"),
            )
        };
        macro_rules! number {
            ($t:ty, $what:expr) => {
                value.parse::<$t>().map_err(|_| bad($what))?
            };
        }
        match key {
            "period_start" => config.period_start = number!(i32, "a year"),
            "period_end" => config.period_end = number!(i32, "a year"),
            "min_years_active" => config.min_years_active = number!(u32, "a non-negative integer"),
            "min_faculty" => config.min_faculty = number!(usize, "a non-negative integer"),
            "salary_assistant" => config.salary_coefficients.assistant = number!(f64, "a number"),
            "salary_associate" => config.salary_coefficients.associate = number!(f64, "a number"),
            "salary_full" => config.salary_coefficients.full = number!(f64, "a number"),
            "band_z_levels" => {
                config.band_z_levels = parse_number_list(value)
                    .ok_or_else(|| bad("a comma-separated list of numbers"))?
            }
            "delta_bracket" => match parse_number_list(value).as_deref() {
                Some(&[lo, hi]) => config.delta_bracket = (lo, hi),
                _ => return Err(bad("two comma-separated numbers")),
            },
            "skewness_tolerance" => config.skewness_tolerance = number!(f64, "a number"),
            "max_iterations" => config.max_iterations = number!(usize, "a positive integer"),
            "weighting_scheme" => {
                config.weighting = match value {
                    "life_science" => WeightingScheme::LifeScience,
                    "uniform" => WeightingScheme::Uniform,
                    _ => return Err(bad("life_science or uniform")),
                }
            }
            "skewness_target" => {
                config.skewness_target = match value {
                    "individuals" => SkewnessTarget::Individuals,
                    "institution_means" => SkewnessTarget::InstitutionMeans,
                    _ => return Err(bad("individuals or institution_means")),
                }
            }
            "grand_mean" => {
                config.grand_mean = match value {
                    "individuals" => GrandMeanMode::Individuals,
                    "unweighted_means" => GrandMeanMode::UnweightedMeans,
                    _ => return Err(bad("individuals or unweighted_means")),
                }
            }
            _ => return Err(parse_error(file, line, 1, format!("unknown key {key:?}"))),
        }
    }
    config
        .validate()
        .map_err(|e| parse_error(file, 0, 0, e.to_string()))?;
    Ok(config)
}

pub fn read_researchers(path: &Path) -> Result<Vec<Located<ResearcherRecord>>, CliError> {
    parse_researchers(open(path)?, &path.display().to_string())
}

pub fn read_publications(path: &Path) -> Result<Vec<Located<PublicationRecord>>, CliError> {
    parse_publications(open(path)?, &path.display().to_string())
}

pub fn read_baselines(path: &Path) -> Result<CitationBaseline<f64>, CliError> {
    parse_baselines(open(path)?, &path.display().to_string())
}

pub fn read_config(path: &Path) -> Result<AssessmentConfig<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}
