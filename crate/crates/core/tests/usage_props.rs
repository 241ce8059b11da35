use std::sync::OnceLock;

use chrono::{TimeZone, Utc};
use curator_core::quality::{profile_quality, Cutoffs, QualityProfile};
use curator_core::subset::FilterSpec;
use curator_core::synth;
use curator_core::table::Dataset;
use curator_core::usage::{profile_usage, SessionRecord, UsageConfig, UsageDimension, UsageProfile};
use proptest::prelude::*;

fn fixture() -> &'static (Dataset, QualityProfile) {
    static CELL: OnceLock<(Dataset, QualityProfile)> = OnceLock::new();
    CELL.get_or_init(|| {
        let d = synth::marketing_table(300, 5);
        let q = profile_quality(&d, &synth::marketing_config()).unwrap();
        (d, q)
    })
}

/// Recount straight from the raw session fields.
fn recount(d: &Dataset, sessions: &[SessionRecord]) -> (Vec<[usize; 3]>, Vec<usize>) {
    let attrs = d
        .attributes()
        .iter()
        .map(|m| {
            let name = m.name.as_str();
            let mut hits = [0usize; 3];
            for s in sessions {
                if s.final_selected_attributes.iter().any(|a| a == name) {
                    hits[0] += 1;
                }
                if s.final_filters
                    .iter()
                    .any(|f| matches!(f, FilterSpec::AttributeValue { attribute, .. } if attribute == name))
                {
                    hits[1] += 1;
                }
                if s.final_visualizations.iter().any(|v| v.x.as_deref() == Some(name) || v.y.as_deref() == Some(name)) {
                    hits[2] += 1;
                }
            }
            hits
        })
        .collect();
    let records = (0..d.record_count())
        .map(|r| sessions.iter().filter(|s| s.final_selected_record_indices.contains(&r)).count())
        .collect();
    (attrs, records)
}

fn assert_matches_recount(d: &Dataset, sessions: &[SessionRecord], p: &UsageProfile) -> Result<(), TestCaseError> {
    let n = sessions.len();
    let (attrs, records) = recount(d, sessions);
    prop_assert_eq!(p.session_count, n);
    for (a, hits) in p.attributes.iter().zip(&attrs) {
        let expected = hits.map(|k| 100.0 * k as f64 / n as f64);
        prop_assert_eq!([a.in_subsets.value, a.in_filters.value, a.in_visualizations.value], expected);
        prop_assert_eq!(a.overall.value, expected.into_iter().fold(f64::MIN, f64::max));
    }
    for (score, &k) in p.records.iter().zip(&records) {
        prop_assert_eq!(score.value, 100.0 * k as f64 / n as f64);
    }
    Ok(())
}

fn sessions(count: usize, seed: u64) -> Vec<SessionRecord> {
    let (d, q) = fixture();
    synth::session_log(d, q, count, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engine_matches_recount(seed in any::<u64>(), count in 1usize..30) {
        let (d, _) = fixture();
        let log = sessions(count, seed);
        let p = profile_usage(d, &log, &UsageConfig::default(), &Cutoffs::default()).unwrap().unwrap();
        assert_matches_recount(d, &log, &p)?;
    }

    #[test]
    fn scores_are_multiples_of_one_over_n(seed in any::<u64>(), count in 1usize..30) {
        let (d, _) = fixture();
        let log = sessions(count, seed);
        let p = profile_usage(d, &log, &UsageConfig::default(), &Cutoffs::default()).unwrap().unwrap();
        let all = p.attributes.iter().flat_map(|a| [a.in_subsets, a.in_filters, a.in_visualizations, a.overall])
            .chain(p.records.iter().copied());
        for s in all {
            let k = s.value * count as f64 / 100.0;
            prop_assert!((0.0..=100.0).contains(&s.value));
            prop_assert!((k - k.round()).abs() < 1e-9, "{} is not k*100/{}", s.value, count);
        }
    }

    #[test]
    fn idle_session_never_raises_scores(seed in any::<u64>(), count in 1usize..20) {
        let (d, _) = fixture();
        let mut log = sessions(count, seed);
        let before = profile_usage(d, &log, &UsageConfig::default(), &Cutoffs::default()).unwrap().unwrap();
        log.push(SessionRecord {
            session_id: "idle".into(),
            dataset_id: d.id().to_string(),
            user_id: "idle".into(),
            finalized_at: Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
            final_selected_attributes: Default::default(),
            final_filters: Vec::new(),
            final_visualizations: Vec::new(),
            final_selected_record_indices: Vec::new(),
        });
        let after = profile_usage(d, &log, &UsageConfig::default(), &Cutoffs::default()).unwrap().unwrap();
        for (b, a) in before.attributes.iter().zip(&after.attributes) {
            for dim in UsageDimension::ALL {
                let (x, y) = (b.dimension(dim), a.dimension(dim));
                prop_assert!(y < x || (x == 0.0 && y == 0.0));
            }
        }
    }

    #[test]
    fn overall_is_max_of_kept_dimensions(seed in any::<u64>(), ignore in proptest::sample::subsequence(UsageDimension::ALL.to_vec(), 0..=2)) {
        let (d, _) = fixture();
        let log = sessions(8, seed);
        let cfg = UsageConfig { ignored_dimensions: ignore.iter().copied().collect(), ..Default::default() };
        let p = profile_usage(d, &log, &cfg, &Cutoffs::default()).unwrap().unwrap();
        for a in &p.attributes {
            let kept: Vec<f64> = UsageDimension::ALL.iter().filter(|d| !ignore.contains(d)).map(|&d| a.dimension(d)).collect();
            prop_assert!(kept.iter().all(|&k| a.overall.value >= k));
            prop_assert!(kept.contains(&a.overall.value));
        }
    }
}

#[test]
fn no_sessions_means_absent() {
    let (d, _) = fixture();
    assert!(profile_usage(d, &[], &UsageConfig::default(), &Cutoffs::default()).unwrap().is_none());
}

#[test]
fn deleted_charts_are_not_in_final_state() {
    use curator_core::dashboard::{Aggregation, ChartType, Dashboard, DeleteTarget, VizSpec};
    use curator_core::subset::{SubsetContext, SubsetState};

    let (d, q) = fixture();
    let ctx = SubsetContext::new(d, q, None);
    let mut state = SubsetState::new(&ctx);
    for name in ["product.category", "purchase.price", "customer.age"] {
        state.set_attribute_selection(&ctx, name, true).unwrap();
    }
    let subset = state.export(d).unwrap();
    let mut dash = Dashboard::new();
    let bar = VizSpec {
        chart: ChartType::Bar,
        x: Some("product.category".into()),
        y: Some("purchase.price".into()),
        aggregation: Some(Aggregation::Sum),
        title: "revenue".into(),
    };
    let scatter = VizSpec {
        chart: ChartType::Scatter,
        x: Some("customer.age".into()),
        y: Some("purchase.price".into()),
        aggregation: None,
        title: String::new(),
    };
    dash.save(bar.clone(), &subset).unwrap();
    let gone = dash.save(scatter, &subset).unwrap();
    dash.delete(DeleteTarget::One(gone)).unwrap();
    let at = Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap();
    let s = SessionRecord::finalize("s", "u", d, &state, &dash, at);
    assert_eq!(s.final_visualizations, vec![bar]);
    let p = profile_usage(d, &[s], &UsageConfig::default(), &Cutoffs::default()).unwrap().unwrap();
    let age = d.attribute_index("customer.age").unwrap();
    assert_eq!(p.attributes[age].in_visualizations.value, 0.0);
    assert_eq!(p.attributes[age].in_subsets.value, 100.0);
}
