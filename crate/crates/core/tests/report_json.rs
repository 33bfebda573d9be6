use fss_funnel::cli::report::{emit_report, ReportDocument};
use fss_funnel::funnel::assess_groups;
use fss_funnel::{AssessmentConfig, Classification, FunnelReport, Group};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(seed: u64, groups: usize) -> FunnelReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Group<f64>> = (0..groups)
        .map(|j| {
            let n = rng.random_range(5..30);
            let lift = rng.random_range(0.5..2.0);
            Group::new(
                format!("inst-{j}"),
                (0..n).map(|_| lift * rng.random::<f64>().powi(3)).collect(),
            )
        })
        .collect();
    assess_groups(&raw, &AssessmentConfig::default()).unwrap()
}

#[test]
fn round_trip_is_identical() {
    let r = report(1, 12);
    let text = emit_report(&r);
    let parsed: ReportDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, ReportDocument::from_report(&r));
    let again = serde_json::to_string_pretty(&parsed).unwrap() + "\n";
    assert_eq!(again, text);
}

#[test]
fn institutions_match_group_count() {
    let doc = ReportDocument::from_report(&report(2, 17));
    assert_eq!(doc.institutions.len(), doc.fit.group_count);
    assert!(doc.institutions.iter().all(|i| i.rank_with_caveat.of == 17));
}

#[test]
fn classification_strings_come_from_closed_set() {
    let allowed = [
        "within",
        "above_inner",
        "above_outer",
        "below_inner",
        "below_outer",
    ];
    let text = emit_report(&report(3, 30));
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for inst in value["institutions"].as_array().unwrap() {
        let class = inst["classification"].as_str().unwrap();
        assert!(allowed.contains(&class), "{class}");
    }
    let names: Vec<&str> = Classification::ALL.iter().map(|c| c.as_str()).collect();
    assert_eq!(names, allowed);
}

#[test]
fn top_level_key_order_is_fixed() {
    let text = emit_report(&report(4, 5));
    let positions: Vec<usize> = [
        "\"config\"",
        "\"transform\"",
        "\"fit\"",
        "\"institutions\"",
        "\"diagnostics\"",
    ]
    .iter()
    .map(|k| text.find(k).unwrap())
    .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn floats_keep_full_precision() {
    let r = report(5, 8);
    let value: serde_json::Value = serde_json::from_str(&emit_report(&r)).unwrap();
    assert_eq!(
        value["transform"]["delta"].as_f64().unwrap(),
        r.transform.delta
    );
    assert_eq!(value["fit"]["pooled_sd"].as_f64().unwrap(), r.fit.pooled_sd);
}
