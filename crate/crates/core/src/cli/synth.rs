//! Synthetic datasets with a controlled FSS distribution.
//!
//! Target FSS values are drawn from a shifted lognormal matched to a mean,
//! standard deviation and skewness, and clipped at zero. Publications and
//! baselines are then built so that the pipeline recomputes exactly those
//! targets: each researcher publishes in a private subject category whose
//! baseline is solved from the target.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::indicator::{fractional_weights, FractionalWeights, WeightingScheme};
use crate::model::{
    AuthorSlot, CitationBaseline, PublicationRecord, Rank, ResearcherRecord, SalaryCoefficients,
};

use super::input::{format_authors, BASELINE_COLUMNS, PUBLICATION_COLUMNS, RESEARCHER_COLUMNS};
use super::{write_all_atomic, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub institutions: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// Total assessable researchers; `None` lets the sizes fall where drawn.
    pub total: Option<usize>,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    /// SD of a per-institution log-scale multiplier; 0 means every
    /// institution shares one distribution.
    pub institution_effect_sd: f64,
    /// Extra researchers with fewer than three active years.
    pub short_tenure: usize,
    pub period_start: i32,
    pub period_end: i32,
    pub field_code: String,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            institutions: 42,
            min_size: 5,
            max_size: 61,
            total: Some(877),
            mean: 0.25,
            sd: 0.34,
            skewness: 3.1,
            institution_effect_sd: 0.0,
            short_tenure: 34,
            period_start: 2008,
            period_end: 2012,
            field_code: "Biochemistry".into(),
            seed: 2015,
        }
    }
}

/// `X = exp(mu + sigma * Z) - shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedLogNormal {
    pub mu: f64,
    pub sigma: f64,
    pub shift: f64,
}

impl ShiftedLogNormal {
    /// Matches the first three moments. Requires `sd > 0` and `skewness > 0`.
    pub fn from_moments(mean: f64, sd: f64, skewness: f64) -> Result<Self, String> {
        if !(sd > 0.0 && skewness > 0.0 && mean.is_finite()) {
            return Err("shifted lognormal needs sd > 0 and skewness > 0".into());
        }
        // Skewness of a lognormal, with w = exp(sigma^2): (w + 2) sqrt(w - 1).
        let skew_of = |w: f64| (w + 2.0) * (w - 1.0).sqrt();
        let (mut lo, mut hi) = (1.0, 2.0);
        while skew_of(hi) < skewness {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if skew_of(mid) < skewness {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = 0.5 * (lo + hi);
        let sigma = w.ln().sqrt();
        // Var = (w - 1) w exp(2 mu)
        let mu = 0.5 * (sd * sd / ((w - 1.0) * w)).ln();
        let lognormal_mean = (mu + 0.5 * sigma * sigma).exp();
        Ok(Self {
            mu,
            sigma,
            shift: lognormal_mean - mean,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        (self.mu + self.sigma * z).exp() - self.shift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub researchers: Vec<ResearcherRecord>,
    pub publications: Vec<PublicationRecord>,
    pub baselines: CitationBaseline<f64>,
    /// Intended FSS per researcher, aligned with `researchers`.
    pub target_fss: Vec<f64>,
}

/// Institution sizes in `[min, max]`, including both extremes, summing to
/// `total` when given.
pub fn institution_sizes<R: Rng + ?Sized>(
    params: &SynthParams,
    rng: &mut R,
) -> Result<Vec<usize>, String> {
    let (count, min, max) = (params.institutions, params.min_size, params.max_size);
    if count == 0 || min == 0 || min > max {
        return Err("need at least one institution and 1 <= min_size <= max_size".into());
    }
    // With two or more institutions one is pinned at each extreme.
    let pinned = if count > 1 { max - min } else { 0 };
    if let Some(total) = params.total {
        if total < min * count + pinned || total > max * count - pinned {
            return Err(format!(
                "total {total} is not reachable with {count} institutions of {min}..={max} members"
            ));
        }
    }
    // Right-skewed sizes: many small faculties, a few large ones.
    let span = (max - min) as f64;
    let mut sizes: Vec<usize> = (0..count)
        .map(|_| min + (span * rng.random::<f64>().powf(2.6)).round() as usize)
        .collect();
    if count > 1 {
        sizes[0] = min;
        sizes[1] = max;
    }
    if let Some(total) = params.total {
        let adjustable: Vec<usize> = (if count > 1 { 2 } else { 0 }..count).collect();
        let mut current: usize = sizes.iter().sum();
        while current != total {
            let candidates: Vec<usize> = adjustable
                .iter()
                .copied()
                .filter(|&i| {
                    if current > total {
                        sizes[i] > min
                    } else {
                        sizes[i] < max
                    }
                })
                .collect();
            let Some(&i) = candidates.choose(rng) else {
                return Err(format!(
                    "cannot reach total {total} with the extremes pinned"
                ));
            };
            if current > total {
                sizes[i] -= 1;
                current -= 1;
            } else {
                sizes[i] += 1;
                current += 1;
            }
        }
    }
    sizes.shuffle(rng);
    Ok(sizes)
}

fn pick_rank<R: Rng + ?Sized>(rng: &mut R) -> Rank {
    match rng.random_range(0..20) {
        0..=5 => Rank::Assistant,
        6..=12 => Rank::Associate,
        _ => Rank::Full,
    }
}

pub fn generate(params: &SynthParams) -> Result<SynthDataset, String> {
    if params.period_end < params.period_start {
        return Err("period_end precedes period_start".into());
    }
    let period_years = (params.period_end - params.period_start + 1) as u32;
    if period_years < 3 {
        return Err("observation period must span at least 3 years".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let sizes = institution_sizes(params, &mut rng)?;
    let distribution = ShiftedLogNormal::from_moments(params.mean, params.sd, params.skewness)?;
    let effect =
        Normal::new(0.0, params.institution_effect_sd.max(0.0)).map_err(|e| e.to_string())?;
    let salaries = SalaryCoefficients::<f64>::default();
    let institution_ids: Vec<String> = (1..=sizes.len()).map(|j| format!("U{j:02}")).collect();

    let mut members: Vec<(String, u32, f64)> = Vec::new();
    for (j, &size) in sizes.iter().enumerate() {
        let multiplier = effect.sample(&mut rng).exp();
        for _ in 0..size {
            let fss = distribution.sample(&mut rng).max(0.0) * multiplier;
            let years = rng.random_range(3..=period_years);
            members.push((institution_ids[j].clone(), years, fss));
        }
    }
    for _ in 0..params.short_tenure {
        let inst = institution_ids[rng.random_range(0..institution_ids.len())].clone();
        let fss = distribution.sample(&mut rng).max(0.0);
        members.push((inst, rng.random_range(1..=2), fss));
    }

    let mut dataset = SynthDataset {
        researchers: Vec::with_capacity(members.len()),
        publications: Vec::new(),
        baselines: CitationBaseline::new(),
        target_fss: Vec::with_capacity(members.len()),
    };
    for (index, (institution_id, years_active, fss)) in members.into_iter().enumerate() {
        let researcher_id = format!("R{:04}", index + 1);
        let rank = pick_rank(&mut rng);
        let category = format!("{}/{researcher_id}", params.field_code);
        let paper_count = rng.random_range(1..=4usize);
        let mut credit = 0.0;
        let mut years_used = Vec::new();
        for k in 0..paper_count {
            let year = rng.random_range(params.period_start..=params.period_end);
            let authors = byline(&mut rng, &researcher_id, &institution_id);
            let weights: FractionalWeights<f64> =
                fractional_weights(&authors, WeightingScheme::LifeScience)
                    .expect("non-empty byline");
            let own = authors
                .iter()
                .position(|a| a.researcher_id.as_deref() == Some(researcher_id.as_str()))
                .expect("researcher on own byline");
            let citations = if fss > 0.0 {
                rng.random_range(1..=80u64)
            } else {
                0
            };
            credit += citations as f64 * weights.0[own];
            years_used.push(year);
            dataset.publications.push(PublicationRecord {
                publication_id: format!("P{:04}-{}", index + 1, k + 1),
                year,
                subject_category: category.clone(),
                citations,
                authors,
            });
        }
        // Solve the private baseline so that the recomputed FSS equals the target.
        let salary = salaries.get(rank);
        let mean_citations = if fss > 0.0 {
            credit / (fss * salary * years_active as f64)
        } else {
            1.0
        };
        years_used.sort_unstable();
        years_used.dedup();
        for year in years_used {
            dataset
                .baselines
                .insert(year, category.clone(), mean_citations)
                .map_err(|e| e.to_string())?;
        }
        dataset.researchers.push(ResearcherRecord {
            researcher_id,
            institution_id,
            field_code: params.field_code.clone(),
            rank,
            years_active,
        });
        dataset.target_fss.push(fss);
    }
    Ok(dataset)
}

/// A byline of 1 to 8 authors with the researcher at a random position and
/// external co-authors from the same or another institution.
fn byline<R: Rng + ?Sized>(
    rng: &mut R,
    researcher_id: &str,
    institution_id: &str,
) -> Vec<AuthorSlot> {
    let count = rng.random_range(1..=8u32);
    let own = rng.random_range(1..=count);
    (1..=count)
        .map(|position| {
            if position == own {
                AuthorSlot {
                    position,
                    researcher_id: Some(researcher_id.to_owned()),
                    institution_id: institution_id.to_owned(),
                }
            } else {
                let external = rng.random_bool(0.4);
                AuthorSlot {
                    position,
                    researcher_id: None,
                    institution_id: if external {
                        format!("EXT{}", rng.random_range(1..=30))
                    } else {
                        institution_id.to_owned()
                    },
                }
            }
        })
        .collect()
}

fn csv_text(columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Pipeline(format!("csv encoding failed: {e}"));
    writer.write_record(columns).map_err(csv_err)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Pipeline(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn researchers_csv(dataset: &SynthDataset) -> Result<String, CliError> {
    csv_text(
        &RESEARCHER_COLUMNS,
        dataset.researchers.iter().map(|r| {
            vec![
                r.researcher_id.clone(),
                r.institution_id.clone(),
                r.field_code.clone(),
                r.rank.to_string(),
                r.years_active.to_string(),
            ]
        }),
    )
}

pub fn publications_csv(dataset: &SynthDataset) -> Result<String, CliError> {
    csv_text(
        &PUBLICATION_COLUMNS,
        dataset.publications.iter().map(|p| {
            vec![
                p.publication_id.clone(),
                p.year.to_string(),
                p.subject_category.clone(),
                p.citations.to_string(),
                format_authors(&p.authors),
            ]
        }),
    )
}

pub fn baselines_csv(dataset: &SynthDataset) -> Result<String, CliError> {
    csv_text(
        &BASELINE_COLUMNS,
        dataset.baselines.iter().map(|(year, category, mean)| {
            vec![year.to_string(), category.to_owned(), format!("{mean}")]
        }),
    )
}

/// A config file matching the generated period, for `assess --config`.
pub fn config_text(params: &SynthParams) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "# synthetic dataset, seed {}", params.seed);
    let _ = writeln!(text, "period_start = {}", params.period_start);
    let _ = writeln!(text, "period_end = {}", params.period_end);
    text
}

/// Writes researchers.csv, publications.csv, baselines.csv and config.txt
/// into `dir`, creating it if needed.
pub fn write_dataset(
    dataset: &SynthDataset,
    params: &SynthParams,
    dir: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_owned(),
        source,
    })?;
    write_all_atomic(&[
        (dir.join("researchers.csv"), researchers_csv(dataset)?),
        (dir.join("publications.csv"), publications_csv(dataset)?),
        (dir.join("baselines.csv"), baselines_csv(dataset)?),
        (dir.join("config.txt"), config_text(params)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lognormal_moments_match() {
        let d = ShiftedLogNormal::from_moments(0.25, 0.34, 3.1).unwrap();
        let w = (d.sigma * d.sigma).exp();
        let mean = (d.mu + 0.5 * d.sigma * d.sigma).exp() - d.shift;
        let sd = ((w - 1.0) * w * (2.0 * d.mu).exp()).sqrt();
        let skew = (w + 2.0) * (w - 1.0).sqrt();
        assert!((mean - 0.25).abs() < 1e-12);
        assert!((sd - 0.34).abs() < 1e-12);
        assert!((skew - 3.1).abs() < 1e-9);
        assert!(ShiftedLogNormal::from_moments(0.25, 0.34, -1.0).is_err());
    }

    #[test]
    fn sizes_hit_extremes_and_total() {
        let params = SynthParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sizes = institution_sizes(&params, &mut rng).unwrap();
        assert_eq!(sizes.len(), 42);
        assert_eq!(sizes.iter().sum::<usize>(), 877);
        assert_eq!(sizes.iter().min(), Some(&5));
        assert_eq!(sizes.iter().max(), Some(&61));
        let impossible = SynthParams {
            total: Some(5000),
            ..SynthParams::default()
        };
        assert!(institution_sizes(&impossible, &mut rng).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let params = SynthParams {
            institutions: 4,
            max_size: 10,
            total: Some(30),
            short_tenure: 2,
            ..SynthParams::default()
        };
        let a = generate(&params).unwrap();
        let b = generate(&params).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.researchers.len(), 32);
        assert_eq!(researchers_csv(&a).unwrap(), researchers_csv(&b).unwrap());
    }
}
