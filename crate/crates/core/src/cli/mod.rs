//! File-based front end: CSV inputs, a key=value config, JSON and SVG outputs.

pub mod input;
pub mod report;
pub mod synth;

use std::collections::HashMap;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::funnel::{build_funnel_report, FunnelError, FunnelReport};
use crate::indicator::score_population;
use crate::model::{
    apply_exclusions, validate_dataset, AssessmentConfig, ModelError, ValidationError,
};
use crate::render::{render_caterpillar_svg, render_funnel_svg, render_qq_svg, PlotStyle};

use input::Located;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{file}:{line}:{column}: {reason}")]
    Parse {
        file: String,
        line: u64,
        column: usize,
        reason: String,
    },
    #[error("invalid input:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("assessment failed: {0}")]
    Pipeline(String),
}

impl CliError {
    /// 1 for bad input content, 2 for file system problems, 3 when the
    /// numerical pipeline cannot complete.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Pipeline(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunRequest {
    pub researchers: PathBuf,
    pub publications: PathBuf,
    pub baselines: PathBuf,
    pub config: Option<PathBuf>,
    pub report: PathBuf,
    pub funnel_svg: Option<PathBuf>,
    pub qq_svg: Option<PathBuf>,
    pub caterpillar_svg: Option<PathBuf>,
    pub show_labels: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: FunnelReport<f64>,
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    /// One-paragraph summary for the terminal.
    pub fn summary(&self) -> String {
        use crate::funnel::Classification;
        let r = &self.report;
        let mut text = format!(
            "{} institutions, {} researchers (excluded {} researchers, {} institutions)\n\
             delta = {:.6} (skewness {:.2e}), pooled sd = {:.6}\n",
            r.fit.group_count,
            r.fit.total_n,
            r.dropped_researchers,
            r.dropped_institutions,
            r.transform.delta,
            r.transform.achieved_skewness,
            r.fit.pooled_sd,
        );
        for class in Classification::ALL {
            text.push_str(&format!("  {:<12} {}\n", class.as_str(), r.count(class)));
        }
        for path in &self.written {
            text.push_str(&format!("wrote {}\n", path.display()));
        }
        text
    }
}

fn values<T: Clone>(rows: &[Located<T>]) -> Vec<T> {
    rows.iter().map(|l| l.value.clone()).collect()
}

fn line_of(lines: &HashMap<&str, u64>, id: &str) -> String {
    lines
        .get(id)
        .map_or_else(String::new, |l| format!(" (line {l})"))
}

fn describe_validation(
    errors: &[ValidationError],
    request: &RunRequest,
    duplicate_lines: &HashMap<&str, u64>,
    publication_lines: &HashMap<&str, u64>,
) -> Vec<String> {
    let researchers = request.researchers.display();
    let publications = request.publications.display();
    errors
        .iter()
        .map(|e| match e {
            ValidationError::DuplicateResearcherId(id) => {
                format!("{researchers}{}: {e}", line_of(duplicate_lines, id))
            }
            ValidationError::MissingBaseline { publication_id, .. }
            | ValidationError::MalformedAuthorList { publication_id, .. }
            | ValidationError::UnknownResearcherRef { publication_id, .. } => {
                format!(
                    "{publications}{}: {e}",
                    line_of(publication_lines, publication_id)
                )
            }
        })
        .collect()
}

fn model_error(
    e: ModelError,
    request: &RunRequest,
    researcher_lines: &HashMap<&str, u64>,
) -> CliError {
    match e {
        ModelError::YearsActiveExceedsPeriod {
            ref researcher_id, ..
        } => CliError::Validation(vec![format!(
            "{}{}: {e}",
            request.researchers.display(),
            line_of(researcher_lines, researcher_id)
        )]),
        ModelError::InvalidConfig(_) | ModelError::NonPositiveBaseline { .. } => {
            CliError::Validation(vec![e.to_string()])
        }
        other => CliError::Pipeline(other.to_string()),
    }
}

fn funnel_error(e: FunnelError) -> CliError {
    match e {
        FunnelError::Model(ModelError::InvalidConfig(_)) => {
            CliError::Validation(vec![e.to_string()])
        }
        other => CliError::Pipeline(other.to_string()),
    }
}

/// Reads, validates and assesses the inputs, then writes every requested
/// output. Nothing is written unless the whole computation succeeds.
pub fn run_assessment(request: &RunRequest) -> Result<RunOutcome, CliError> {
    let config: AssessmentConfig<f64> = match &request.config {
        Some(path) => input::read_config(path)?,
        None => AssessmentConfig::default(),
    };
    let researchers = input::read_researchers(&request.researchers)?;
    let publications = input::read_publications(&request.publications)?;
    let baselines = input::read_baselines(&request.baselines)?;

    let mut researcher_lines = HashMap::new();
    let mut duplicate_lines = HashMap::new();
    for r in &researchers {
        if researcher_lines
            .insert(r.value.researcher_id.as_str(), r.line)
            .is_some()
        {
            duplicate_lines
                .entry(r.value.researcher_id.as_str())
                .or_insert(r.line);
        }
    }
    let publication_lines: HashMap<&str, u64> = publications
        .iter()
        .map(|p| (p.value.publication_id.as_str(), p.line))
        .collect();

    let dataset = validate_dataset(values(&researchers), values(&publications), baselines)
        .map_err(|e| match e {
            ModelError::Validation(errors) => CliError::Validation(describe_validation(
                &errors,
                request,
                &duplicate_lines,
                &publication_lines,
            )),
            other => model_error(other, request, &researcher_lines),
        })?;
    let population = apply_exclusions(dataset, &config)
        .map_err(|e| model_error(e, request, &researcher_lines))?;
    let scores =
        score_population(&population, &config).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let report = build_funnel_report(&population, &scores, &config).map_err(funnel_error)?;

    let style = PlotStyle {
        show_labels: request.show_labels,
        ..PlotStyle::default()
    };
    let render_err = |e: crate::render::RenderError| CliError::Pipeline(e.to_string());
    let mut outputs = vec![(request.report.clone(), report::emit_report(&report))];
    if let Some(path) = &request.funnel_svg {
        outputs.push((
            path.clone(),
            render_funnel_svg(&report, &style).map_err(render_err)?,
        ));
    }
    if let Some(path) = &request.qq_svg {
        outputs.push((
            path.clone(),
            render_qq_svg(&report, &style).map_err(render_err)?,
        ));
    }
    if let Some(path) = &request.caterpillar_svg {
        outputs.push((
            path.clone(),
            render_caterpillar_svg(&report, &style, report.inner_z()).map_err(render_err)?,
        ));
    }
    write_all_atomic(&outputs)?;
    Ok(RunOutcome {
        written: outputs.into_iter().map(|(p, _)| p).collect(),
        report,
    })
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes every file to a sibling temporary and renames them into place only
/// once all temporaries are complete.
pub(crate) fn write_all_atomic(files: &[(PathBuf, String)]) -> Result<(), CliError> {
    let mut staged: Vec<(PathBuf, &Path)> = Vec::with_capacity(files.len());
    let cleanup = |staged: &[(PathBuf, &Path)]| {
        for (tmp, _) in staged {
            let _ = std::fs::remove_file(tmp);
        }
    };
    for (path, contents) in files {
        let tmp = temp_path(path);
        let result = std::fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(contents.as_bytes())?;
            f.sync_all()
        });
        if let Err(source) = result {
            let _ = std::fs::remove_file(&tmp);
            cleanup(&staged);
            return Err(CliError::Io {
                path: path.clone(),
                source,
            });
        }
        staged.push((tmp, path.as_path()));
    }
    for (i, (tmp, path)) in staged.iter().enumerate() {
        if let Err(source) = std::fs::rename(tmp, path) {
            cleanup(&staged[i..]);
            return Err(CliError::Io {
                path: path.to_path_buf(),
                source,
            });
        }
    }
    Ok(())
}
