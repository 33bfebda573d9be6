//! Domain records, dataset validation and the exclusion rules that define
//! the assessable population.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::indicator::WeightingScheme;
use crate::scalar::Scalar;

/// Academic rank of a professor. Selects the salary coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rank {
    Assistant,
    Associate,
    Full,
}

impl Rank {
    pub fn as_str(self) -> &'static str {
        match self {
            Rank::Assistant => "assistant",
            Rank::Associate => "associate",
            Rank::Full => "full",
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rank {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "assistant" => Ok(Rank::Assistant),
            "associate" => Ok(Rank::Associate),
            "full" => Ok(Rank::Full),
            other => Err(format!(
                "unknown rank {other:?} (expected assistant, associate or full)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResearcherRecord {
    pub researcher_id: String,
    pub institution_id: String,
    pub field_code: String,
    pub rank: Rank,
    /// Years on faculty within the observation period.
    pub years_active: u32,
}

/// One entry of a publication byline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorSlot {
    /// 1-based byline position.
    pub position: u32,
    /// `None` for authors outside the assessed population.
    pub researcher_id: Option<String>,
    pub institution_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicationRecord {
    pub publication_id: String,
    pub year: i32,
    pub subject_category: String,
    pub citations: u64,
    pub authors: Vec<AuthorSlot>,
}

impl PublicationRecord {
    /// Byline position of `researcher_id` on this publication, as an index
    /// into `authors`.
    pub fn author_index(&self, researcher_id: &str) -> Option<usize> {
        self.authors
            .iter()
            .position(|a| a.researcher_id.as_deref() == Some(researcher_id))
    }
}

/// Mean citations of cited publications per (year, subject category).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CitationBaseline<S> {
    entries: BTreeMap<(i32, String), S>,
}

impl<S: Scalar> CitationBaseline<S> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Adds or replaces an entry. The mean must be strictly positive and finite.
    pub fn insert(
        &mut self,
        year: i32,
        subject_category: impl Into<String>,
        mean_citations: S,
    ) -> Result<(), ModelError> {
        let subject_category = subject_category.into();
        if !(mean_citations > S::zero() && mean_citations.is_finite()) {
            return Err(ModelError::NonPositiveBaseline {
                year,
                category: subject_category,
            });
        }
        self.entries
            .insert((year, subject_category), mean_citations);
        Ok(())
    }

    pub fn get(&self, year: i32, subject_category: &str) -> Option<S> {
        self.entries
            .get(&(year, subject_category.to_owned()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &str, S)> + '_ {
        self.entries
            .iter()
            .map(|((year, cat), &v)| (*year, cat.as_str(), v))
    }

    /// Builds baselines from a corpus: the mean citation count of the cited
    /// (citations > 0) publications in each (year, subject category).
    /// Cells with no cited publication get no entry.
    pub fn from_corpus<'a>(corpus: impl IntoIterator<Item = &'a PublicationRecord>) -> Self {
        let mut sums: BTreeMap<(i32, String), (u64, usize)> = BTreeMap::new();
        for publication in corpus {
            if publication.citations == 0 {
                continue;
            }
            let cell = sums
                .entry((publication.year, publication.subject_category.clone()))
                .or_insert((0, 0));
            cell.0 += publication.citations;
            cell.1 += 1;
        }
        let entries = sums
            .into_iter()
            .map(|(key, (total, count))| (key, S::of(total as f64) / S::of_usize(count)))
            .collect();
        Self { entries }
    }
}

/// Salary normalization coefficient per rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalaryCoefficients<S> {
    pub assistant: S,
    pub associate: S,
    pub full: S,
}

impl<S: Scalar> SalaryCoefficients<S> {
    pub fn get(&self, rank: Rank) -> S {
        match rank {
            Rank::Assistant => self.assistant,
            Rank::Associate => self.associate,
            Rank::Full => self.full,
        }
    }
}

impl<S: Scalar> Default for SalaryCoefficients<S> {
    fn default() -> Self {
        Self {
            assistant: S::one(),
            associate: S::of(1.4),
            full: S::of(2.0),
        }
    }
}

/// Which sample the log-shift is tuned to make symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkewnessTarget {
    /// All researchers pooled.
    #[default]
    Individuals,
    /// The institution means of the transformed values.
    InstitutionMeans,
}

/// Estimator for the centre line of the funnel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GrandMeanMode {
    /// Mean over all individuals (size-weighted mean of institution means).
    #[default]
    Individuals,
    /// Unweighted mean of the institution means.
    UnweightedMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentConfig<S> {
    pub period_start: i32,
    pub period_end: i32,
    pub min_years_active: u32,
    pub min_faculty: usize,
    pub salary_coefficients: SalaryCoefficients<S>,
    /// Inner and outer band multipliers, strictly increasing.
    pub band_z_levels: Vec<S>,
    pub delta_bracket: (S, S),
    pub skewness_tolerance: S,
    pub max_iterations: usize,
    pub weighting: WeightingScheme,
    pub skewness_target: SkewnessTarget,
    pub grand_mean: GrandMeanMode,
}

impl<S: Scalar> Default for AssessmentConfig<S> {
    fn default() -> Self {
        Self {
            period_start: 2008,
            period_end: 2012,
            min_years_active: 3,
            min_faculty: 5,
            salary_coefficients: SalaryCoefficients::default(),
            band_z_levels: vec![S::of(2.0), S::of(3.0)],
            delta_bracket: (S::of(1e-9), S::of(10.0)),
            skewness_tolerance: S::of(1e-9),
            max_iterations: 200,
            weighting: WeightingScheme::LifeScience,
            skewness_target: SkewnessTarget::Individuals,
            grand_mean: GrandMeanMode::Individuals,
        }
    }
}

impl<S: Scalar> AssessmentConfig<S> {
    /// Length of the observation period in years (inclusive of both ends).
    pub fn period_years(&self) -> u32 {
        (self.period_end - self.period_start + 1).max(0) as u32
    }

    pub fn inner_z(&self) -> S {
        self.band_z_levels[0]
    }

    pub fn outer_z(&self) -> S {
        self.band_z_levels[1]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |reason: &str| Err(ModelError::InvalidConfig(reason.to_owned()));
        if self.period_end < self.period_start {
            return invalid("period_end precedes period_start");
        }
        if self.min_years_active < 1 {
            return invalid("min_years_active must be at least 1");
        }
        if self.min_faculty < 1 {
            return invalid("min_faculty must be at least 1");
        }
        let s = &self.salary_coefficients;
        if [s.assistant, s.associate, s.full]
            .iter()
            .any(|&c| !(c > S::zero() && c.is_finite()))
        {
            return invalid("salary coefficients must be positive");
        }
        if self.band_z_levels.len() != 2 {
            return invalid("band_z_levels must hold exactly two levels (inner, outer)");
        }
        if !(self.band_z_levels[0] > S::zero() && self.band_z_levels[0] < self.band_z_levels[1])
            || !self.band_z_levels[1].is_finite()
        {
            return invalid("band_z_levels must be positive and strictly increasing");
        }
        let (lo, hi) = self.delta_bracket;
        if !(lo > S::zero() && lo < hi && hi.is_finite()) {
            return invalid("delta_bracket must satisfy 0 < low < high");
        }
        if !(self.skewness_tolerance > S::zero()) {
            return invalid("skewness_tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return invalid("max_iterations must be positive");
        }
        Ok(())
    }
}

/// A single data problem found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("publication {publication_id}: no citation baseline for ({year}, {category:?})")]
    MissingBaseline {
        publication_id: String,
        year: i32,
        category: String,
    },
    #[error("duplicate researcher id {0:?}")]
    DuplicateResearcherId(String),
    #[error("publication {publication_id}: malformed author list: {reason}")]
    MalformedAuthorList {
        publication_id: String,
        reason: String,
    },
    #[error("publication {publication_id}: unknown researcher {researcher_id:?}")]
    UnknownResearcherRef {
        publication_id: String,
        researcher_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{} validation error(s)", .0.len())]
    Validation(Vec<ValidationError>),
    #[error("citation baseline for ({year}, {category:?}) must be positive")]
    NonPositiveBaseline { year: i32, category: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("researcher {researcher_id:?}: years_active {years_active} exceeds the {period_years}-year observation period")]
    YearsActiveExceedsPeriod {
        researcher_id: String,
        years_active: u32,
        period_years: u32,
    },
    #[error("every institution was excluded; nothing left to assess")]
    EmptyPopulation,
}

/// Researchers, publications and baselines that passed [`validate_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedDataset<S> {
    researchers: Vec<ResearcherRecord>,
    publications: Vec<PublicationRecord>,
    baselines: CitationBaseline<S>,
}

impl<S> ValidatedDataset<S> {
    pub fn researchers(&self) -> &[ResearcherRecord] {
        &self.researchers
    }

    pub fn publications(&self) -> &[PublicationRecord] {
        &self.publications
    }

    pub fn baselines(&self) -> &CitationBaseline<S> {
        &self.baselines
    }
}

fn check_author_list(publication: &PublicationRecord) -> Result<(), String> {
    if publication.authors.is_empty() {
        return Err("author list is empty".into());
    }
    let count = publication.authors.len();
    let mut positions: Vec<u32> = publication.authors.iter().map(|a| a.position).collect();
    positions.sort_unstable();
    if positions
        .iter()
        .enumerate()
        .any(|(i, &p)| p as usize != i + 1)
    {
        return Err(format!(
            "positions {positions:?} are not the contiguous range 1..={count}"
        ));
    }
    let mut seen = HashSet::new();
    for id in publication
        .authors
        .iter()
        .filter_map(|a| a.researcher_id.as_deref())
    {
        if !seen.insert(id) {
            return Err(format!("researcher {id:?} appears more than once"));
        }
    }
    Ok(())
}

/// Checks the whole dataset and reports every violation found.
pub fn validate_dataset<S: Scalar>(
    researchers: Vec<ResearcherRecord>,
    publications: Vec<PublicationRecord>,
    baselines: CitationBaseline<S>,
) -> Result<ValidatedDataset<S>, ModelError> {
    let mut errors = Vec::new();

    let mut ids = HashSet::new();
    let mut reported = HashSet::new();
    for r in &researchers {
        if !ids.insert(r.researcher_id.as_str()) && reported.insert(r.researcher_id.as_str()) {
            errors.push(ValidationError::DuplicateResearcherId(
                r.researcher_id.clone(),
            ));
        }
    }

    for publication in &publications {
        if baselines
            .get(publication.year, &publication.subject_category)
            .is_none()
        {
            errors.push(ValidationError::MissingBaseline {
                publication_id: publication.publication_id.clone(),
                year: publication.year,
                category: publication.subject_category.clone(),
            });
        }
        if let Err(reason) = check_author_list(publication) {
            errors.push(ValidationError::MalformedAuthorList {
                publication_id: publication.publication_id.clone(),
                reason,
            });
        }
        for id in publication
            .authors
            .iter()
            .filter_map(|a| a.researcher_id.as_deref())
        {
            if !ids.contains(id) {
                errors.push(ValidationError::UnknownResearcherRef {
                    publication_id: publication.publication_id.clone(),
                    researcher_id: id.to_owned(),
                });
            }
        }
    }

    if !errors.is_empty() {
        return Err(ModelError::Validation(errors));
    }
    Ok(ValidatedDataset {
        researchers,
        publications,
        baselines,
    })
}

/// Researchers that survived the exclusion rules, grouped by institution.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessablePopulation<S> {
    dataset: ValidatedDataset<S>,
    institutions: BTreeMap<String, Vec<usize>>,
    pub dropped_researchers: usize,
    pub dropped_institutions: usize,
}

impl<S: Scalar> AssessablePopulation<S> {
    /// Retained researchers in input order.
    pub fn researchers(&self) -> &[ResearcherRecord] {
        self.dataset.researchers()
    }

    pub fn publications(&self) -> &[PublicationRecord] {
        self.dataset.publications()
    }

    pub fn baselines(&self) -> &CitationBaseline<S> {
        self.dataset.baselines()
    }

    pub fn institution_count(&self) -> usize {
        self.institutions.len()
    }

    /// Institutions in id order with their members.
    pub fn institutions(&self) -> impl Iterator<Item = (&str, Vec<&ResearcherRecord>)> + '_ {
        self.institutions.iter().map(move |(id, members)| {
            (
                id.as_str(),
                members
                    .iter()
                    .map(|&i| &self.dataset.researchers[i])
                    .collect(),
            )
        })
    }

    /// The retained records as a dataset, e.g. to re-run the exclusions.
    pub fn to_dataset(&self) -> ValidatedDataset<S> {
        self.dataset.clone()
    }
}

/// Drops researchers with too few active years, then institutions left with
/// too few researchers.
pub fn apply_exclusions<S: Scalar>(
    dataset: ValidatedDataset<S>,
    config: &AssessmentConfig<S>,
) -> Result<AssessablePopulation<S>, ModelError> {
    config.validate()?;
    let period_years = config.period_years();
    if let Some(r) = dataset
        .researchers
        .iter()
        .find(|r| r.years_active > period_years)
    {
        return Err(ModelError::YearsActiveExceedsPeriod {
            researcher_id: r.researcher_id.clone(),
            years_active: r.years_active,
            period_years,
        });
    }

    let ValidatedDataset {
        researchers,
        publications,
        baselines,
    } = dataset;
    let total = researchers.len();
    let institutions_before: BTreeSet<String> = researchers
        .iter()
        .map(|r| r.institution_id.clone())
        .collect();

    let active: Vec<ResearcherRecord> = researchers
        .into_iter()
        .filter(|r| r.years_active >= config.min_years_active)
        .collect();

    let mut sizes: HashMap<&str, usize> = HashMap::new();
    for r in &active {
        *sizes.entry(r.institution_id.as_str()).or_default() += 1;
    }
    let keep: HashSet<String> = sizes
        .into_iter()
        .filter(|&(_, n)| n >= config.min_faculty)
        .map(|(id, _)| id.to_owned())
        .collect();
    let retained: Vec<ResearcherRecord> = active
        .into_iter()
        .filter(|r| keep.contains(&r.institution_id))
        .collect();

    if retained.is_empty() {
        return Err(ModelError::EmptyPopulation);
    }

    let mut institutions: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in retained.iter().enumerate() {
        institutions
            .entry(r.institution_id.clone())
            .or_default()
            .push(i);
    }
    let dropped_researchers = total - retained.len();
    let dropped_institutions = institutions_before.len() - institutions.len();

    Ok(AssessablePopulation {
        dataset: ValidatedDataset {
            researchers: retained,
            publications,
            baselines,
        },
        institutions,
        dropped_researchers,
        dropped_institutions,
    })
}
