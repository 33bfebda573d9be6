//! JSON form of a [`FunnelReport`]. Field order is fixed by the struct
//! definitions; floats are written in shortest round-trip form.

use serde::{Deserialize, Serialize};

use crate::funnel::{BandPoint, Classification, FunnelReport};
use crate::indicator::WeightingScheme;
use crate::model::{AssessmentConfig, GrandMeanMode, SkewnessTarget};
use crate::RANKING_CAVEAT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub config: ConfigDocument,
    pub transform: TransformDocument,
    pub fit: FitDocument,
    pub institutions: Vec<InstitutionDocument>,
    pub diagnostics: DiagnosticsDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalaryDocument {
    pub assistant: f64,
    pub associate: f64,
    pub full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDocument {
    pub period_start: i32,
    pub period_end: i32,
    pub min_years_active: u32,
    pub min_faculty: usize,
    pub salary_coefficients: SalaryDocument,
    pub band_z_levels: Vec<f64>,
    pub delta_bracket: [f64; 2],
    pub skewness_tolerance: f64,
    pub max_iterations: usize,
    pub weighting_scheme: String,
    pub skewness_target: String,
    pub grand_mean: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformDocument {
    pub delta: f64,
    pub achieved_skewness: f64,
    pub converged: bool,
    pub iterations: usize,
    pub bracket_used: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub grand_mean: f64,
    pub pooled_sd: f64,
    pub total_n: usize,
    pub group_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDocument {
    pub z: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDocument {
    pub rank: usize,
    pub of: usize,
    pub caveat: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstitutionDocument {
    pub id: String,
    pub size: usize,
    pub mean_original: f64,
    pub mean_transformed: f64,
    pub classification: Classification,
    pub inner_band: BandDocument,
    pub outer_band: BandDocument,
    pub rank_with_caveat: RankDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeDocument {
    pub slope: f64,
    pub standard_error: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsDocument {
    /// `[theoretical, sample]` pairs.
    pub qq_points: Vec<[f64; 2]>,
    pub max_qq_deviation: Option<f64>,
    pub adjusted_means: Vec<f64>,
    pub size_slope: Option<SlopeDocument>,
    pub excluded_researchers: usize,
    pub excluded_institutions: usize,
}

fn scheme_name(scheme: WeightingScheme) -> &'static str {
    match scheme {
        WeightingScheme::LifeScience => "life_science",
        WeightingScheme::Uniform => "uniform",
    }
}

fn target_name(target: SkewnessTarget) -> &'static str {
    match target {
        SkewnessTarget::Individuals => "individuals",
        SkewnessTarget::InstitutionMeans => "institution_means",
    }
}

fn grand_mean_name(mode: GrandMeanMode) -> &'static str {
    match mode {
        GrandMeanMode::Individuals => "individuals",
        GrandMeanMode::UnweightedMeans => "unweighted_means",
    }
}

fn band(b: &BandPoint<f64>) -> BandDocument {
    BandDocument {
        z: b.level_z,
        lower: b.lower,
        upper: b.upper,
    }
}

impl ConfigDocument {
    fn from_config(c: &AssessmentConfig<f64>) -> Self {
        Self {
            period_start: c.period_start,
            period_end: c.period_end,
            min_years_active: c.min_years_active,
            min_faculty: c.min_faculty,
            salary_coefficients: SalaryDocument {
                assistant: c.salary_coefficients.assistant,
                associate: c.salary_coefficients.associate,
                full: c.salary_coefficients.full,
            },
            band_z_levels: c.band_z_levels.clone(),
            delta_bracket: [c.delta_bracket.0, c.delta_bracket.1],
            skewness_tolerance: c.skewness_tolerance,
            max_iterations: c.max_iterations,
            weighting_scheme: scheme_name(c.weighting).into(),
            skewness_target: target_name(c.skewness_target).into(),
            grand_mean: grand_mean_name(c.grand_mean).into(),
        }
    }
}

impl ReportDocument {
    pub fn from_report(report: &FunnelReport<f64>) -> Self {
        let t = &report.transform;
        let of = report.summaries.len();
        Self {
            config: ConfigDocument::from_config(&report.config),
            transform: TransformDocument {
                delta: t.delta,
                achieved_skewness: t.achieved_skewness,
                converged: t.converged,
                iterations: t.iterations,
                bracket_used: [t.bracket_used.0, t.bracket_used.1],
            },
            fit: FitDocument {
                grand_mean: report.fit.grand_mean,
                pooled_sd: report.fit.pooled_sd,
                total_n: report.fit.total_n,
                group_count: report.fit.group_count,
            },
            institutions: report
                .summaries
                .iter()
                .map(|s| InstitutionDocument {
                    id: s.institution_id.clone(),
                    size: s.size,
                    mean_original: s.mean_original,
                    mean_transformed: s.mean_transformed,
                    classification: s.classification,
                    inner_band: band(&s.inner_band),
                    outer_band: band(&s.outer_band),
                    rank_with_caveat: RankDocument {
                        rank: s.rank,
                        of,
                        caveat: RANKING_CAVEAT.to_owned(),
                    },
                })
                .collect(),
            diagnostics: DiagnosticsDocument {
                qq_points: report
                    .qq_points
                    .iter()
                    .map(|p| [p.theoretical, p.sample])
                    .collect(),
                max_qq_deviation: report.max_qq_deviation,
                adjusted_means: report.adjusted_means.clone(),
                size_slope: report.size_slope.map(|s| SlopeDocument {
                    slope: s.slope,
                    standard_error: s.standard_error,
                    intercept: s.intercept,
                }),
                excluded_researchers: report.dropped_researchers,
                excluded_institutions: report.dropped_institutions,
            },
        }
    }
}

/// Pretty-printed JSON text of the report, newline terminated.
pub fn emit_report(report: &FunnelReport<f64>) -> String {
    let mut text = serde_json::to_string_pretty(&ReportDocument::from_report(report))
        .expect("report document serializes");
    text.push('\n');
    text
}
