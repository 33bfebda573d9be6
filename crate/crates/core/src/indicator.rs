//! Fractional scientific strength (FSS): field-normalized citations, split
//! among co-authors by byline position, per year and per unit of salary.

use std::collections::HashMap;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, One, Zero};
use thiserror::Error;

use crate::model::{
    AssessablePopulation, AssessmentConfig, AuthorSlot, CitationBaseline, PublicationRecord,
    ResearcherRecord,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndicatorError {
    #[error("author list is empty")]
    EmptyAuthorList,
    #[error("no citation baseline for ({year}, {category:?})")]
    MissingBaseline { year: i32, category: String },
    #[error("researcher {0:?} has zero years active")]
    ZeroYearsActive(String),
    #[error("researcher {researcher_id:?} is not an author of publication {publication_id:?}")]
    NotAnAuthor {
        publication_id: String,
        researcher_id: String,
    },
    #[error("no score for researcher {0:?}")]
    MissingScore(String),
}

/// How the credit of one publication is split among its authors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightingScheme {
    /// Positional life-science convention: first and last authors weigh most,
    /// with the split depending on whether they share an institution.
    #[default]
    LifeScience,
    /// Every author receives 1/A.
    Uniform,
}

/// Per-author credit shares, aligned with the author list they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalWeights<W>(pub Vec<W>);

impl<W> FractionalWeights<W> {
    pub fn as_slice(&self) -> &[W] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

type Share = Ratio<u64>;

fn percent(p: u64) -> Share {
    Share::new(p, 100)
}

/// Exact shares indexed by byline rank (0 = first author).
fn positional_shares(authors: &[&AuthorSlot], scheme: WeightingScheme) -> Vec<Share> {
    let count = authors.len();
    if count == 1 {
        return vec![Share::one()];
    }
    let (named, remainder): (Vec<(usize, Share)>, Share) = match scheme {
        WeightingScheme::Uniform => return vec![Share::new(1, count as u64); count],
        WeightingScheme::LifeScience => {
            let last = count - 1;
            if authors[0].institution_id == authors[last].institution_id {
                (vec![(0, percent(40)), (last, percent(40))], percent(20))
            } else {
                // Priority order: a slot already claimed by a stronger role is skipped.
                (
                    vec![
                        (0, percent(30)),
                        (last, percent(30)),
                        (1, percent(15)),
                        (last - 1, percent(15)),
                    ],
                    percent(10),
                )
            }
        }
    };

    let mut shares: Vec<Option<Share>> = vec![None; count];
    for (rank, share) in named {
        if shares[rank].is_none() {
            shares[rank] = Some(share);
        }
    }
    let others = shares.iter().filter(|s| s.is_none()).count();
    if others > 0 {
        let each = remainder / Share::from_integer(others as u64);
        shares.iter().map(|s| s.unwrap_or(each)).collect()
    } else {
        let shares: Vec<Share> = shares.into_iter().flatten().collect();
        let total = shares.iter().fold(Share::zero(), |acc, s| acc + s);
        shares.into_iter().map(|s| s / total).collect()
    }
}

/// Splits one unit of credit across `authors`.
///
/// The returned weights follow the order of `authors`; byline roles are taken
/// from each slot's `position`. Every weight is the correctly rounded value
/// of an exact fraction, so exact numeric types reproduce the rule without
/// rounding at all.
pub fn fractional_weights<W>(
    authors: &[AuthorSlot],
    scheme: WeightingScheme,
) -> Result<FractionalWeights<W>, IndicatorError>
where
    W: Num + FromPrimitive,
{
    if authors.is_empty() {
        return Err(IndicatorError::EmptyAuthorList);
    }
    let mut order: Vec<usize> = (0..authors.len()).collect();
    order.sort_by_key(|&i| authors[i].position);
    let byline: Vec<&AuthorSlot> = order.iter().map(|&i| &authors[i]).collect();
    let shares = positional_shares(&byline, scheme);

    let mut slots: Vec<Option<W>> = (0..authors.len()).map(|_| None).collect();
    for (rank, share) in shares.into_iter().enumerate() {
        let numer = W::from_u64(*share.numer()).expect("share numerator representable");
        let denom = W::from_u64(*share.denom()).expect("share denominator representable");
        slots[order[rank]] = Some(numer / denom);
    }
    Ok(FractionalWeights(slots.into_iter().flatten().collect()))
}

/// Citations of a publication relative to its (year, subject category) baseline.
pub fn normalized_impact<S: Scalar>(
    publication: &PublicationRecord,
    baselines: &CitationBaseline<S>,
) -> Result<S, IndicatorError> {
    let mean = baselines
        .get(publication.year, &publication.subject_category)
        .ok_or_else(|| IndicatorError::MissingBaseline {
            year: publication.year,
            category: publication.subject_category.clone(),
        })?;
    Ok(S::of(publication.citations as f64) / mean)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResearcherScore<S> {
    pub researcher_id: String,
    pub fss: S,
    pub salary_coefficient: S,
    pub years_active: u32,
    pub publication_count: usize,
}

/// FSS of one researcher over the publications they authored.
///
/// `fss = 1 / (w_R * t) * sum_i (c_i / c_mean_i) * f_i`, with `w_R` the salary
/// coefficient of the researcher's rank, `t` the years active and `f_i` the
/// researcher's fractional weight on publication `i`.
pub fn researcher_fss<S: Scalar>(
    researcher: &ResearcherRecord,
    publications: &[&PublicationRecord],
    baselines: &CitationBaseline<S>,
    config: &AssessmentConfig<S>,
) -> Result<ResearcherScore<S>, IndicatorError> {
    if researcher.years_active == 0 {
        return Err(IndicatorError::ZeroYearsActive(
            researcher.researcher_id.clone(),
        ));
    }
    let mut credit = S::zero();
    for publication in publications {
        let index = publication
            .author_index(&researcher.researcher_id)
            .ok_or_else(|| IndicatorError::NotAnAuthor {
                publication_id: publication.publication_id.clone(),
                researcher_id: researcher.researcher_id.clone(),
            })?;
        let weights: FractionalWeights<S> =
            fractional_weights(&publication.authors, config.weighting)?;
        credit += normalized_impact(publication, baselines)? * weights.0[index];
    }
    let salary_coefficient = config.salary_coefficients.get(researcher.rank);
    let years = S::of(researcher.years_active as f64);
    Ok(ResearcherScore {
        researcher_id: researcher.researcher_id.clone(),
        fss: credit / (salary_coefficient * years),
        salary_coefficient,
        years_active: researcher.years_active,
        publication_count: publications.len(),
    })
}

/// Scores every researcher of the population, in population order.
pub fn score_population<S: Scalar>(
    population: &AssessablePopulation<S>,
    config: &AssessmentConfig<S>,
) -> Result<Vec<ResearcherScore<S>>, IndicatorError> {
    let mut authored: HashMap<&str, Vec<&PublicationRecord>> = HashMap::new();
    for publication in population.publications() {
        for id in publication
            .authors
            .iter()
            .filter_map(|a| a.researcher_id.as_deref())
        {
            authored.entry(id).or_default().push(publication);
        }
    }
    population
        .researchers()
        .iter()
        .map(|r| {
            let pubs = authored
                .get(r.researcher_id.as_str())
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            researcher_fss(r, pubs, population.baselines(), config)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstitutionAggregate<S> {
    pub institution_id: String,
    pub size: usize,
    pub mean_fss: S,
    pub member_scores: Vec<ResearcherScore<S>>,
}

/// One aggregate per institution, sorted by institution id.
pub fn institution_means<S: Scalar>(
    population: &AssessablePopulation<S>,
    scores: &[ResearcherScore<S>],
) -> Result<Vec<InstitutionAggregate<S>>, IndicatorError> {
    let by_id: HashMap<&str, &ResearcherScore<S>> = scores
        .iter()
        .map(|s| (s.researcher_id.as_str(), s))
        .collect();
    population
        .institutions()
        .map(|(institution_id, members)| {
            let member_scores = members
                .iter()
                .map(|r| {
                    by_id
                        .get(r.researcher_id.as_str())
                        .map(|&s| s.clone())
                        .ok_or_else(|| IndicatorError::MissingScore(r.researcher_id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let size = member_scores.len();
            let mean_fss = member_scores.iter().map(|s| s.fss).sum::<S>() / S::of_usize(size);
            Ok(InstitutionAggregate {
                institution_id: institution_id.to_owned(),
                size,
                mean_fss,
                member_scores,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_exclusions, validate_dataset, Rank};
    use num_rational::Rational64;

    fn byline(insts: &[&str]) -> Vec<AuthorSlot> {
        insts
            .iter()
            .enumerate()
            .map(|(i, inst)| AuthorSlot {
                position: i as u32 + 1,
                researcher_id: None,
                institution_id: (*inst).into(),
            })
            .collect()
    }

    fn weights(insts: &[&str]) -> Vec<f64> {
        fractional_weights::<f64>(&byline(insts), WeightingScheme::LifeScience)
            .unwrap()
            .0
    }

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= tol, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn intramural_five_authors() {
        let third = 0.2 / 3.0;
        assert_close(
            &weights(&["u", "x", "y", "z", "u"]),
            &[0.4, third, third, third, 0.4],
            1e-15,
        );
    }

    #[test]
    fn extramural_six_authors() {
        assert_close(
            &weights(&["u", "x", "y", "z", "w", "v"]),
            &[0.30, 0.15, 0.05, 0.05, 0.15, 0.30],
            1e-15,
        );
    }

    #[test]
    fn single_author_takes_all() {
        assert_eq!(weights(&["u"]), vec![1.0]);
    }

    #[test]
    fn degenerate_bylines_renormalize() {
        // Hand enumeration: each listed role share, duplicates skipped, divided by the total.
        let exact = |insts: &[&str]| {
            fractional_weights::<Rational64>(&byline(insts), WeightingScheme::LifeScience)
                .unwrap()
                .0
        };
        let r = Rational64::new;
        // 0.4, 0.4 over 0.8
        assert_eq!(exact(&["u", "u"]), vec![r(1, 2), r(1, 2)]);
        // 0.3, 0.3 over 0.6; second/penultimate already taken by last/first
        assert_eq!(exact(&["u", "v"]), vec![r(1, 2), r(1, 2)]);
        // 0.3, 0.15, 0.3 over 0.75
        assert_eq!(exact(&["u", "x", "v"]), vec![r(2, 5), r(1, 5), r(2, 5)]);
        // 0.3, 0.15, 0.15, 0.3 over 0.9
        assert_eq!(
            exact(&["u", "x", "y", "v"]),
            vec![r(1, 3), r(1, 6), r(1, 6), r(1, 3)]
        );
        // intramural, 3 authors: the middle author takes the whole 0.2
        assert_eq!(exact(&["u", "x", "u"]), vec![r(2, 5), r(1, 5), r(2, 5)]);
        assert_eq!(weights(&["u", "u"]), vec![0.5, 0.5]);
    }

    #[test]
    fn weights_follow_positions_not_list_order() {
        let mut slots = byline(&["u", "x", "y", "z", "w", "v"]);
        slots.reverse();
        let w = fractional_weights::<f64>(&slots, WeightingScheme::LifeScience)
            .unwrap()
            .0;
        assert_close(&w, &[0.30, 0.15, 0.05, 0.05, 0.15, 0.30], 1e-15);
        slots.swap(0, 2);
        let w = fractional_weights::<f64>(&slots, WeightingScheme::LifeScience)
            .unwrap()
            .0;
        assert_close(&w, &[0.05, 0.15, 0.30, 0.05, 0.15, 0.30], 1e-15);
    }

    #[test]
    fn uniform_scheme() {
        let w = fractional_weights::<f64>(&byline(&["a", "b", "c", "d"]), WeightingScheme::Uniform)
            .unwrap();
        assert_eq!(w.0, vec![0.25; 4]);
    }

    #[test]
    fn empty_author_list() {
        assert_eq!(
            fractional_weights::<f64>(&[], WeightingScheme::LifeScience),
            Err(IndicatorError::EmptyAuthorList)
        );
    }

    fn publication(citations: u64, year: i32, authors: Vec<AuthorSlot>) -> PublicationRecord {
        PublicationRecord {
            publication_id: format!("p{citations}-{year}"),
            year,
            subject_category: "Biochemistry".into(),
            citations,
            authors,
        }
    }

    fn baselines() -> CitationBaseline<f64> {
        let mut b = CitationBaseline::new();
        b.insert(2010, "Biochemistry", 5.0).unwrap();
        b.insert(2011, "Biochemistry", 4.2).unwrap();
        b
    }

    #[test]
    fn normalized_impact_examples() {
        let b = baselines();
        let p = |c, y| publication(c, y, byline(&["u"]));
        assert_eq!(normalized_impact(&p(10, 2010), &b), Ok(2.0));
        assert_eq!(normalized_impact(&p(0, 2011), &b), Ok(0.0));
        assert!((normalized_impact(&p(7, 2011), &b).unwrap() - 7.0 / 4.2).abs() < 1e-9);
        assert!((normalized_impact(&p(7, 2011), &b).unwrap() - 1.666_666_666_7).abs() < 1e-9);
        assert!(matches!(
            normalized_impact(&p(1, 1999), &b),
            Err(IndicatorError::MissingBaseline { year: 1999, .. })
        ));
    }

    fn professor(rank: Rank, years: u32) -> ResearcherRecord {
        ResearcherRecord {
            researcher_id: "me".into(),
            institution_id: "u".into(),
            field_code: "Biochemistry".into(),
            rank,
            years_active: years,
        }
    }

    fn with_me(mut authors: Vec<AuthorSlot>, at: usize) -> Vec<AuthorSlot> {
        authors[at].researcher_id = Some("me".into());
        authors
    }

    #[test]
    fn fss_assistant_example() {
        // Five intramural authors, first-author share 0.4; c=10, c_mean=5, t=4.
        let p = publication(10, 2010, with_me(byline(&["u", "a", "b", "c", "u"]), 0));
        let score = researcher_fss(
            &professor(Rank::Assistant, 4),
            &[&p],
            &baselines(),
            &AssessmentConfig::default(),
        )
        .unwrap();
        assert!((score.fss - 0.2).abs() < 1e-15);
        assert_eq!(score.publication_count, 1);
    }

    #[test]
    fn fss_full_professor_example() {
        // Two solo papers with normalized impact 1.0 each; (1/2)(1/5)(2.0) = 0.2.
        let p1 = publication(5, 2010, with_me(byline(&["u"]), 0));
        let p2 = publication(5, 2010, with_me(byline(&["u"]), 0));
        let score = researcher_fss(
            &professor(Rank::Full, 5),
            &[&p1, &p2],
            &baselines(),
            &AssessmentConfig::default(),
        )
        .unwrap();
        assert!((score.fss - 0.2).abs() < 1e-15);
        assert_eq!(score.salary_coefficient, 2.0);
    }

    #[test]
    fn fss_without_publications_is_zero() {
        let score = researcher_fss(
            &professor(Rank::Associate, 3),
            &[],
            &baselines(),
            &AssessmentConfig::default(),
        )
        .unwrap();
        assert_eq!(score.fss, 0.0);
    }

    #[test]
    fn fss_errors() {
        let config = AssessmentConfig::default();
        assert_eq!(
            researcher_fss(&professor(Rank::Full, 0), &[], &baselines(), &config),
            Err(IndicatorError::ZeroYearsActive("me".into()))
        );
        let foreign = publication(3, 2010, byline(&["u"]));
        assert!(matches!(
            researcher_fss(
                &professor(Rank::Full, 3),
                &[&foreign],
                &baselines(),
                &config
            ),
            Err(IndicatorError::NotAnAuthor { .. })
        ));
    }

    fn member(id: &str, inst: &str) -> ResearcherRecord {
        ResearcherRecord {
            researcher_id: id.into(),
            institution_id: inst.into(),
            field_code: "Biochemistry".into(),
            rank: Rank::Assistant,
            years_active: 4,
        }
    }

    fn score(id: &str, fss: f64) -> ResearcherScore<f64> {
        ResearcherScore {
            researcher_id: id.into(),
            fss,
            salary_coefficient: 1.0,
            years_active: 4,
            publication_count: 0,
        }
    }

    fn population(members: &[(&str, &str)]) -> AssessablePopulation<f64> {
        let config = AssessmentConfig {
            min_faculty: 1,
            ..AssessmentConfig::default()
        };
        let rs = members.iter().map(|(id, inst)| member(id, inst)).collect();
        apply_exclusions(validate_dataset(rs, vec![], baselines()).unwrap(), &config).unwrap()
    }

    #[test]
    fn institution_mean_examples() {
        let pop = population(&[("a", "u1"), ("b", "u1")]);
        let aggs = institution_means(&pop, &[score("a", 0.1), score("b", 0.3)]).unwrap();
        assert_eq!(aggs.len(), 1);
        assert_eq!(aggs[0].size, 2);
        assert!((aggs[0].mean_fss - 0.2).abs() < 1e-15);

        let aggs = institution_means(&pop, &[score("a", 0.0), score("b", 0.0)]).unwrap();
        assert_eq!(aggs[0].mean_fss, 0.0);

        assert_eq!(
            institution_means(&pop, &[score("a", 0.1)]),
            Err(IndicatorError::MissingScore("b".into()))
        );
    }

    #[test]
    fn three_institution_fixture() {
        // Expected means recomputed by hand: (0.1+0.2+0.6)/3, (0+0.5)/2, 0.9.
        let pop = population(&[
            ("a", "u2"),
            ("b", "u1"),
            ("c", "u2"),
            ("d", "u3"),
            ("e", "u2"),
            ("f", "u1"),
        ]);
        let scores = [
            score("a", 0.1),
            score("b", 0.0),
            score("c", 0.2),
            score("d", 0.9),
            score("e", 0.6),
            score("f", 0.5),
        ];
        let aggs = institution_means(&pop, &scores).unwrap();
        let got: Vec<(&str, usize, f64)> = aggs
            .iter()
            .map(|a| (a.institution_id.as_str(), a.size, a.mean_fss))
            .collect();
        let expected = [("u1", 2, 0.25), ("u2", 3, 0.3), ("u3", 1, 0.9)];
        for (g, e) in got.iter().zip(expected) {
            assert_eq!((g.0, g.1), (e.0, e.1));
            assert!((g.2 - e.2).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_byline() -> impl Strategy<Value = Vec<AuthorSlot>> {
            prop::collection::vec(0u8..3, 1..30).prop_map(|insts| {
                insts
                    .into_iter()
                    .enumerate()
                    .map(|(i, u)| AuthorSlot {
                        position: i as u32 + 1,
                        researcher_id: None,
                        institution_id: format!("u{u}"),
                    })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn weights_conserve_credit(authors in arb_byline(), uniform in any::<bool>()) {
                let scheme = if uniform { WeightingScheme::Uniform } else { WeightingScheme::LifeScience };
                let w = fractional_weights::<f64>(&authors, scheme).unwrap();
                prop_assert_eq!(w.len(), authors.len());
                prop_assert!(w.0.iter().all(|&x| (0.0..=1.0).contains(&x)));
                prop_assert!((w.0.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                let exact = fractional_weights::<Rational64>(&authors, scheme).unwrap();
                prop_assert_eq!(exact.0.iter().sum::<Rational64>(), Rational64::one());
            }

            #[test]
            fn intramural_weights_reverse_with_byline(mut authors in arb_byline()) {
                let last = authors.len() - 1;
                authors[last].institution_id = authors[0].institution_id.clone();
                let forward = fractional_weights::<Rational64>(&authors, WeightingScheme::LifeScience).unwrap().0;
                let count = authors.len() as u32;
                let reversed: Vec<AuthorSlot> = authors
                    .iter()
                    .rev()
                    .map(|a| AuthorSlot { position: count + 1 - a.position, ..a.clone() })
                    .collect();
                let mut backward = fractional_weights::<Rational64>(&reversed, WeightingScheme::LifeScience).unwrap().0;
                backward.reverse();
                prop_assert_eq!(forward, backward);
            }

            #[test]
            fn fss_scales_and_ignores_order(
                papers in prop::collection::vec((0u64..200, arb_byline(), 0usize..30), 0..8),
                years in 1u32..6,
            ) {
                let pubs: Vec<PublicationRecord> = papers
                    .into_iter()
                    .map(|(c, authors, at)| {
                        let at = at % authors.len();
                        publication(c, 2010, with_me(authors, at))
                    })
                    .collect();
                let doubled: Vec<PublicationRecord> = pubs
                    .iter()
                    .map(|p| PublicationRecord { citations: 2 * p.citations, ..p.clone() })
                    .collect();
                let config = AssessmentConfig::default();
                let b = baselines();
                let fss = |rank, years, pubs: &[PublicationRecord], rev: bool| {
                    let mut refs: Vec<&PublicationRecord> = pubs.iter().collect();
                    if rev { refs.reverse(); }
                    researcher_fss(&professor(rank, years), &refs, &b, &config).unwrap().fss
                };
                let base = fss(Rank::Assistant, years, &pubs, false);
                let tol = 1e-12 * base.max(1e-300);
                prop_assert!((fss(Rank::Assistant, years, &doubled, false) - 2.0 * base).abs() <= 2.0 * tol);
                prop_assert!((fss(Rank::Assistant, 2 * years, &pubs, false) - base / 2.0).abs() <= tol);
                prop_assert!((fss(Rank::Full, years, &pubs, false) - base / 2.0).abs() <= tol);
                prop_assert!((fss(Rank::Assistant, years, &pubs, true) - base).abs() <= tol);
            }

            #[test]
            fn institution_totals_are_preserved(fss in prop::collection::vec((0u8..4, 0.0f64..3.0), 1..40)) {
                let members: Vec<(String, String)> = fss
                    .iter()
                    .enumerate()
                    .map(|(i, (u, _))| (format!("r{i}"), format!("u{u}")))
                    .collect();
                let refs: Vec<(&str, &str)> = members.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                let pop = population(&refs);
                let scores: Vec<_> = fss.iter().enumerate().map(|(i, (_, f))| score(&format!("r{i}"), *f)).collect();
                let aggs = institution_means(&pop, &scores).unwrap();
                let weighted: f64 = aggs.iter().map(|a| a.size as f64 * a.mean_fss).sum();
                let total: f64 = fss.iter().map(|(_, f)| f).sum();
                prop_assert!((weighted - total).abs() <= 1e-9);
                prop_assert!(aggs.windows(2).all(|w| w[0].institution_id < w[1].institution_id));
            }
        }
    }
}
