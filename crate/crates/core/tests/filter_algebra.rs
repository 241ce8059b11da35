use std::collections::BTreeSet;
use std::sync::OnceLock;

use curator_core::quality::{profile_quality, QualityProfile};
use curator_core::subset::{FilterSpec, ScoreDimension, ScoreSource, SubsetContext, SubsetState, ValueSelection};
use curator_core::synth;
use curator_core::table::{Dataset, Datatype, IngestConfig};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn fixture() -> &'static (Dataset, QualityProfile) {
    static CELL: OnceLock<(Dataset, QualityProfile)> = OnceLock::new();
    CELL.get_or_init(|| {
        let d = synth::marketing_table(1000, 42);
        let q = profile_quality(&d, &synth::marketing_config()).unwrap();
        (d, q)
    })
}

fn random_filters(d: &Dataset, rng: &mut StdRng, count: usize) -> Vec<FilterSpec> {
    let mut out = Vec::new();
    let mut attrs: Vec<usize> = (0..d.attribute_count()).collect();
    attrs.shuffle(rng);
    for &a in attrs.iter().take(count) {
        if let Some(f) = synth::random_value_filter(d, a, rng) {
            out.push(f);
        }
    }
    out
}

fn derived(s: &SubsetState) -> (Vec<usize>, Vec<usize>) {
    (s.visible_attributes().to_vec(), s.visible_records().to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adding_a_filter_never_grows_visible(seed in any::<u64>(), count in 1usize..6) {
        let (d, q) = fixture();
        let ctx = SubsetContext::new(d, q, None);
        let mut rng = StdRng::seed_from_u64(seed);
        let mut s = SubsetState::new(&ctx);
        for f in random_filters(d, &mut rng, count) {
            let before: BTreeSet<usize> = s.visible_records().iter().copied().collect();
            s.apply_filter(&ctx, f).unwrap();
            let after: BTreeSet<usize> = s.visible_records().iter().copied().collect();
            prop_assert!(after.is_subset(&before));
            prop_assert_eq!(s.selected_records(), s.visible_records());
        }
    }

    #[test]
    fn filter_order_is_irrelevant(seed in any::<u64>(), count in 1usize..6) {
        let (d, q) = fixture();
        let ctx = SubsetContext::new(d, q, None);
        let mut rng = StdRng::seed_from_u64(seed);
        let mut filters = random_filters(d, &mut rng, count);
        filters.push(FilterSpec::AttributeScore {
            source: ScoreSource::Quality,
            dimension: ScoreDimension::Completeness,
            low: 70.0,
            high: 100.0,
        });
        let mut a = SubsetState::new(&ctx);
        for f in &filters {
            a.apply_filter(&ctx, f.clone()).unwrap();
        }
        filters.shuffle(&mut rng);
        let mut b = SubsetState::new(&ctx);
        for f in &filters {
            b.apply_filter(&ctx, f.clone()).unwrap();
        }
        prop_assert_eq!(derived(&a), derived(&b));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn apply_then_remove_is_identity(seed in any::<u64>(), count in 0usize..5) {
        let (d, q) = fixture();
        let ctx = SubsetContext::new(d, q, None);
        let mut rng = StdRng::seed_from_u64(seed);
        let mut s = SubsetState::new(&ctx);
        for f in random_filters(d, &mut rng, count) {
            s.apply_filter(&ctx, f).unwrap();
        }
        let before = s.clone();
        let used: BTreeSet<String> = s.filters().iter().filter_map(|f| f.value_attribute().map(String::from)).collect();
        let extra = (0..d.attribute_count())
            .find(|&a| !used.contains(&d.attribute(a).name))
            .and_then(|a| synth::random_value_filter(d, a, &mut rng));
        if let Some(f) = extra {
            let key = f.key();
            s.apply_filter(&ctx, f).unwrap();
            s.remove_filter(&ctx, &key).unwrap();
            prop_assert_eq!(derived(&s), derived(&before));
            prop_assert_eq!(s, before);
        }
    }
}

#[derive(Clone, Debug)]
struct Small {
    columns: Vec<(bool, Vec<&'static str>)>,
    filters: Vec<SmallFilter>,
}

#[derive(Clone, Debug)]
enum SmallFilter {
    Cats { attr: usize, keep: Vec<&'static str>, include_missing: bool },
    Range { attr: usize, low: i32, span: i32, include_missing: bool },
    AttrCompleteness { low: u8 },
    RecordCompleteness { low: u8 },
}

const CAT_POOL: [&str; 5] = ["x", "y", "z", "", "NA"];
const NUM_POOL: [&str; 6] = ["1", "2", "3", "5", "8", ""];

fn small() -> impl Strategy<Value = Small> {
    (1usize..=20, 0usize..=50).prop_flat_map(|(attrs, rows)| {
        let column = any::<bool>().prop_flat_map(move |numeric| {
            let pool: Vec<&'static str> = if numeric { NUM_POOL.to_vec() } else { CAT_POOL.to_vec() };
            proptest::collection::vec(prop::sample::select(pool), rows).prop_map(move |v| (numeric, v))
        });
        let filter = prop_oneof![
            (0..attrs, proptest::sample::subsequence(vec!["x", "y", "z"], 0..=3), any::<bool>())
                .prop_map(|(attr, keep, include_missing)| SmallFilter::Cats { attr, keep, include_missing }),
            (0..attrs, 0i32..9, 0i32..5, any::<bool>()).prop_map(|(attr, low, span, include_missing)| {
                SmallFilter::Range { attr, low, span, include_missing }
            }),
            (0u8..=100).prop_map(|low| SmallFilter::AttrCompleteness { low }),
            (0u8..=100).prop_map(|low| SmallFilter::RecordCompleteness { low }),
        ];
        (proptest::collection::vec(column, attrs), proptest::collection::vec(filter, 0..5))
            .prop_map(|(columns, filters)| Small { columns, filters })
    })
}

fn missing(raw: &str) -> bool {
    raw.is_empty() || raw.eq_ignore_ascii_case("na")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn visible_sets_match_brute_force(case in small()) {
        let names: Vec<String> = (0..case.columns.len()).map(|i| format!("a{i}")).collect();
        let raw: Vec<Vec<String>> =
            case.columns.iter().map(|(_, v)| v.iter().map(|s| s.to_string()).collect()).collect();
        let d = Dataset::from_raw_columns(names.clone(), raw.clone(), &IngestConfig::default()).unwrap();
        let q = profile_quality(&d, &Default::default()).unwrap();
        let ctx = SubsetContext::new(&d, &q, None);
        let mut s = SubsetState::new(&ctx);
        let rows = d.record_count();
        let width = d.attribute_count();

        // brute-force predicates; later filters with the same key replace earlier ones
        type RowPred = Box<dyn Fn(usize) -> bool>;
        let mut row_preds: Vec<(String, RowPred)> = Vec::new();
        let mut attr_low: Option<f64> = None;
        for f in &case.filters {
            let (spec, key, pred): (FilterSpec, String, Option<RowPred>) = match f {
                SmallFilter::Cats { attr, keep, include_missing } => {
                    if d.attribute(*attr).datatype != Datatype::Categorical {
                        continue;
                    }
                    let col = raw[*attr].clone();
                    let keep_set: BTreeSet<String> = keep.iter().map(|s| s.to_string()).collect();
                    let inc = *include_missing;
                    let ks = keep_set.clone();
                    (
                        FilterSpec::AttributeValue {
                            attribute: names[*attr].clone(),
                            selection: ValueSelection::Categories { values: keep_set },
                            include_missing: inc,
                        },
                        names[*attr].clone(),
                        Some(Box::new(move |r| if missing(&col[r]) { inc } else { ks.contains(&col[r]) })),
                    )
                }
                SmallFilter::Range { attr, low, span, include_missing } => {
                    if d.attribute(*attr).datatype != Datatype::Numerical {
                        continue;
                    }
                    let col = raw[*attr].clone();
                    let (lo, hi) = (f64::from(*low), f64::from(low + span));
                    let inc = *include_missing;
                    (
                        FilterSpec::AttributeValue {
                            attribute: names[*attr].clone(),
                            selection: ValueSelection::Range { low: lo, high: hi },
                            include_missing: inc,
                        },
                        names[*attr].clone(),
                        Some(Box::new(move |r| {
                            if missing(&col[r]) {
                                inc
                            } else {
                                let v: f64 = col[r].parse().unwrap();
                                lo <= v && v <= hi
                            }
                        })),
                    )
                }
                SmallFilter::AttrCompleteness { low } => {
                    attr_low = Some(f64::from(*low));
                    (
                        FilterSpec::AttributeScore {
                            source: ScoreSource::Quality,
                            dimension: ScoreDimension::Completeness,
                            low: f64::from(*low),
                            high: 100.0,
                        },
                        "#attr".into(),
                        None,
                    )
                }
                SmallFilter::RecordCompleteness { low } => {
                    let lo = f64::from(*low);
                    let raw = raw.clone();
                    (
                        FilterSpec::RecordScore {
                            source: ScoreSource::Quality,
                            dimension: ScoreDimension::Completeness,
                            low: lo,
                            high: 100.0,
                        },
                        "#record".into(),
                        Some(Box::new(move |r| {
                            let present = raw.iter().filter(|c| !missing(&c[r])).count();
                            100.0 * present as f64 / raw.len() as f64 >= lo
                        })),
                    )
                }
            };
            s.apply_filter(&ctx, spec).unwrap();
            row_preds.retain(|(k, _)| *k != key);
            if let Some(p) = pred {
                row_preds.push((key, p));
            }
        }
        let expected_rows: Vec<usize> = (0..rows).filter(|&r| row_preds.iter().all(|(_, p)| p(r))).collect();
        let expected_attrs: Vec<usize> = (0..width)
            .filter(|&a| {
                let present = raw[a].iter().filter(|v| !missing(v)).count();
                let c = if rows == 0 { 100.0 } else { 100.0 * present as f64 / rows as f64 };
                attr_low.is_none_or(|lo| c >= lo)
            })
            .collect();
        prop_assert_eq!(s.visible_records(), expected_rows.as_slice());
        prop_assert_eq!(s.visible_attributes(), expected_attrs.as_slice());
    }
}
