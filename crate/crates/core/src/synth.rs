//! Seeded synthetic marketing tables, rule sets and analyst sessions.
//!
//! Used by the benches, the integration tests and `curator synth`. The
//! default layout has 42 attributes: categorical, numerical and email
//! columns with injected missing and out-of-rule values.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::dashboard::{Aggregation, ChartType, Dashboard, VizSpec};
use crate::quality::{QualityConfig, QualityProfile, TargetDistribution};
use crate::subset::{FilterSpec, ScoreDimension, ScoreSource, SubsetContext, SubsetState, ValueSelection};
use crate::table::{ColumnData, Dataset, Datatype, IngestConfig};
use crate::usage::SessionRecord;

#[derive(Clone, Debug)]
enum Kind {
    Categorical { values: &'static [&'static str] },
    Integer { low: i64, high: i64 },
    Decimal { low: f64, high: f64 },
    Email,
}

#[derive(Clone, Debug)]
struct ColumnSpec {
    name: &'static str,
    kind: Kind,
    missing_rate: f64,
    invalid_rate: f64,
}

const COUNTRIES: &[&str] = &["US", "DE", "FR", "IN", "BR", "JP"];
const CHANNELS: &[&str] = &["email", "search", "social", "display", "referral"];
const DEVICES: &[&str] = &["desktop", "mobile", "tablet"];
const GENDERS: &[&str] = &["female", "male"];
const SEGMENTS: &[&str] = &["new", "returning", "loyal", "lapsed"];
const CATEGORIES: &[&str] = &["apparel", "electronics", "home", "beauty", "sports", "toys", "books"];
const BROWSERS: &[&str] = &["chrome", "firefox", "safari", "edge"];
const TIERS: &[&str] = &["bronze", "silver", "gold"];
const YESNO: &[&str] = &["yes", "no"];
const REGIONS: &[&str] = &["north", "south", "east", "west"];
const PAYMENTS: &[&str] = &["card", "paypal", "transfer", "voucher"];
const LANGS: &[&str] = &["en", "de", "fr", "pt", "ja"];
const SOURCES: &[&str] = &["organic", "paid", "partner"];
const WEEKDAYS: &[&str] = &["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

fn cat(name: &'static str, values: &'static [&'static str], missing: f64, invalid: f64) -> ColumnSpec {
    ColumnSpec { name, kind: Kind::Categorical { values }, missing_rate: missing, invalid_rate: invalid }
}

fn int(name: &'static str, low: i64, high: i64, missing: f64, invalid: f64) -> ColumnSpec {
    ColumnSpec { name, kind: Kind::Integer { low, high }, missing_rate: missing, invalid_rate: invalid }
}

fn dec(name: &'static str, low: f64, high: f64, missing: f64, invalid: f64) -> ColumnSpec {
    ColumnSpec { name, kind: Kind::Decimal { low, high }, missing_rate: missing, invalid_rate: invalid }
}

fn layout() -> Vec<ColumnSpec> {
    vec![
        cat("customer.country", COUNTRIES, 0.02, 0.04),
        cat("customer.gender", GENDERS, 0.10, 0.0),
        cat("customer.segment", SEGMENTS, 0.0, 0.0),
        int("customer.age", 18, 80, 0.05, 0.03),
        ColumnSpec { name: "customer.email", kind: Kind::Email, missing_rate: 0.08, invalid_rate: 0.10 },
        cat("customer.language", LANGS, 0.15, 0.0),
        cat("customer.region", REGIONS, 0.0, 0.0),
        cat("customer.tier", TIERS, 0.30, 0.0),
        int("customer.tenure_days", 0, 3000, 0.0, 0.0),
        cat("customer.newsletter", YESNO, 0.20, 0.05),
        cat("session.channel", CHANNELS, 0.0, 0.0),
        cat("session.device", DEVICES, 0.01, 0.0),
        cat("session.browser", BROWSERS, 0.05, 0.0),
        cat("session.source", SOURCES, 0.0, 0.0),
        cat("session.weekday", WEEKDAYS, 0.0, 0.0),
        int("session.hour", 0, 23, 0.0, 0.02),
        int("session.pages", 1, 40, 0.03, 0.0),
        dec("session.duration_min", 0.1, 90.0, 0.04, 0.0),
        dec("session.bounce_rate", 0.0, 1.0, 0.12, 0.06),
        int("session.clicks", 0, 200, 0.0, 0.0),
        cat("product.category", CATEGORIES, 0.0, 0.0),
        cat("product.name", &["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"], 0.0, 0.0),
        dec("product.list_price", 5.0, 500.0, 0.0, 0.02),
        dec("product.rating", 1.0, 5.0, 0.25, 0.0),
        int("product.reviews", 0, 5000, 0.18, 0.0),
        cat("product.in_stock", YESNO, 0.0, 0.0),
        dec("purchase.price", 5.0, 600.0, 0.02, 0.03),
        int("purchase.quantity", 1, 10, 0.0, 0.02),
        dec("purchase.discount", 0.0, 0.6, 0.35, 0.0),
        dec("purchase.shipping", 0.0, 30.0, 0.05, 0.0),
        dec("purchase.tax", 0.0, 80.0, 0.05, 0.0),
        cat("purchase.payment", PAYMENTS, 0.0, 0.0),
        cat("purchase.returned", YESNO, 0.40, 0.0),
        int("purchase.month", 1, 12, 0.0, 0.0),
        int("campaign.id", 100, 140, 0.45, 0.0),
        dec("campaign.spend", 0.0, 10000.0, 0.45, 0.0),
        dec("campaign.ctr", 0.0, 0.3, 0.50, 0.04),
        int("campaign.impressions", 0, 100000, 0.50, 0.0),
        cat("campaign.variant", &["a", "b"], 0.55, 0.0),
        dec("web.load_time_s", 0.2, 12.0, 0.07, 0.0),
        int("web.errors", 0, 9, 0.60, 0.0),
        dec("web.scroll_depth", 0.0, 1.0, 0.22, 0.0),
    ]
}

/// Number of attributes in [`marketing_table`].
pub const ATTRIBUTES: usize = 42;

/// A `records`-row table with the fixed 42-attribute layout.
pub fn marketing_table(records: usize, seed: u64) -> Dataset {
    marketing_table_with(records, ATTRIBUTES, seed)
}

/// The first `attributes` columns of the layout, repeated with numbered
/// copies when more than 42 are asked for.
pub fn marketing_table_with(records: usize, attributes: usize, seed: u64) -> Dataset {
    let base = layout();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut names = Vec::with_capacity(attributes);
    let mut columns = Vec::with_capacity(attributes);
    for a in 0..attributes {
        let spec = &base[a % base.len()];
        names.push(if a < base.len() { spec.name.to_string() } else { format!("{}.{}", spec.name, a / base.len()) });
        columns.push((0..records).map(|_| cell(spec, &mut rng)).collect());
    }
    Dataset::from_raw_columns(names, columns, &IngestConfig::default()).expect("synthetic layout is valid")
}

fn cell(spec: &ColumnSpec, rng: &mut StdRng) -> String {
    if rng.gen_bool(spec.missing_rate) {
        return if rng.gen_bool(0.5) { String::new() } else { "NA".into() };
    }
    let invalid = rng.gen_bool(spec.invalid_rate);
    match &spec.kind {
        Kind::Categorical { values } => {
            if invalid {
                "??".to_string()
            } else {
                // mild skew toward the first values so objectivity is not trivially 100
                let i = (rng.gen::<f64>().powf(1.4) * values.len() as f64) as usize;
                values[i.min(values.len() - 1)].to_string()
            }
        }
        Kind::Integer { low, high } => {
            if invalid {
                (high + rng.gen_range(1..=(high - low).max(1))).to_string()
            } else {
                rng.gen_range(*low..=*high).to_string()
            }
        }
        Kind::Decimal { low, high } => {
            let v = if invalid { high + rng.gen_range(0.01..=(high - low)) } else { rng.gen_range(*low..=*high) };
            format!("{v:.2}")
        }
        Kind::Email => {
            let user: String = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
            if invalid {
                match rng.gen_range(0..3) {
                    0 => format!("{user}.example.com"),
                    1 => format!("{user}@x.c"),
                    _ => format!("@{user}.org"),
                }
            } else {
                format!("{user}@{}.com", ["mail", "example", "shop"][rng.gen_range(0..3)])
            }
        }
    }
}

/// Rules matching the injected defects and a few objectivity targets.
pub fn marketing_config() -> QualityConfig {
    let mut cfg = QualityConfig::default();
    for spec in layout() {
        let field = spec.name;
        let quoted = format!("\"{field}\"");
        let rule = match &spec.kind {
            _ if spec.invalid_rate == 0.0 => continue,
            Kind::Categorical { values } => {
                let list: Vec<String> = values.iter().map(|v| format!("'{v}'")).collect();
                format!("{quoted} IN ({})", list.join(", "))
            }
            Kind::Integer { low, high } => format!("{quoted} BETWEEN {low} AND {high}"),
            Kind::Decimal { low, high } => format!("{quoted} BETWEEN {low} AND {high}"),
            Kind::Email => format!("{quoted} LIKE '%_@__%.__%'"),
        };
        cfg.rules.insert_text(field, &rule, false).expect("synthetic rule parses");
    }
    for name in ["customer.gender", "session.device", "product.category", "customer.region"] {
        cfg.objectivity_targets.insert(name.into(), TargetDistribution::Uniform);
    }
    cfg.objectivity_targets.insert("session.hour".into(), TargetDistribution::Uniform);
    cfg
}

/// A random but valid analyst session: a few selected attributes, up to
/// three value filters, an optional record-completeness filter and up to
/// four charts over the selected subset.
pub fn random_session(
    dataset: &Dataset,
    quality: &QualityProfile,
    rng: &mut StdRng,
    session_id: &str,
    user_id: &str,
    at: DateTime<Utc>,
) -> SessionRecord {
    let ctx = SubsetContext::new(dataset, quality, None);
    let mut state = SubsetState::new(&ctx);
    let n = dataset.attribute_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let picked = rng.gen_range(2..=n.clamp(2, 10));
    for &a in &order[..picked.min(n)] {
        state.set_attribute_selection(&ctx, &dataset.attribute(a).name, true).expect("known attribute");
    }
    for _ in 0..rng.gen_range(0..=3) {
        let a = rng.gen_range(0..n);
        if let Some(f) = random_value_filter(dataset, a, rng) {
            state.apply_filter(&ctx, f).expect("generated filter is valid");
        }
    }
    if rng.gen_bool(0.25) {
        let low = rng.gen_range(0..=80) as f64;
        let f = FilterSpec::RecordScore {
            source: ScoreSource::Quality,
            dimension: ScoreDimension::Completeness,
            low,
            high: 100.0,
        };
        state.apply_filter(&ctx, f).expect("generated filter is valid");
    }

    let mut dashboard = Dashboard::new();
    if let Ok(subset) = state.export(dataset) {
        let cats: Vec<&str> = attrs_of(&subset, Datatype::Categorical);
        let nums: Vec<&str> = attrs_of(&subset, Datatype::Numerical);
        for _ in 0..rng.gen_range(0..=4) {
            let spec = match rng.gen_range(0..3) {
                0 if !cats.is_empty() && !nums.is_empty() => VizSpec {
                    chart: ChartType::Bar,
                    x: cats.choose(rng).map(|s| s.to_string()),
                    y: nums.choose(rng).map(|s| s.to_string()),
                    aggregation: Some(
                        *[Aggregation::Sum, Aggregation::Mean, Aggregation::Max, Aggregation::Min].choose(rng).unwrap(),
                    ),
                    title: String::new(),
                },
                1 if nums.len() >= 2 => VizSpec {
                    chart: ChartType::Scatter,
                    x: nums.choose(rng).map(|s| s.to_string()),
                    y: nums.choose(rng).map(|s| s.to_string()),
                    aggregation: None,
                    title: String::new(),
                },
                _ if !cats.is_empty() => VizSpec {
                    chart: ChartType::Bar,
                    x: cats.choose(rng).map(|s| s.to_string()),
                    y: None,
                    aggregation: None,
                    title: String::new(),
                },
                _ => continue,
            };
            dashboard.save(spec, &subset).expect("generated chart is valid");
        }
        // occasionally delete one, which must drop it from the final state
        if dashboard.len() > 1 && rng.gen_bool(0.3) {
            let id = dashboard.items()[0].id;
            dashboard.delete(crate::dashboard::DeleteTarget::One(id)).expect("id exists");
        }
    }
    SessionRecord::finalize(session_id, user_id, dataset, &state, &dashboard, at)
}

fn attrs_of(d: &Dataset, t: Datatype) -> Vec<&str> {
    d.attributes().iter().filter(|m| m.datatype == t).map(|m| m.name.as_str()).collect()
}

/// A value filter on attribute `a` keeping a random part of its domain.
pub fn random_value_filter(dataset: &Dataset, a: usize, rng: &mut StdRng) -> Option<FilterSpec> {
    let column = dataset.column(a);
    let selection = match column.data() {
        ColumnData::Categorical { dictionary, .. } => {
            if dictionary.is_empty() {
                return None;
            }
            let values = dictionary.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
            ValueSelection::Categories { values }
        }
        ColumnData::Numerical(_) => {
            let (lo, hi) = column.numbers().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            if lo > hi {
                return None;
            }
            let a_ = rng.gen_range(0.0..=1.0);
            let b_ = rng.gen_range(0.0..=1.0);
            let (p, q) = if a_ <= b_ { (a_, b_) } else { (b_, a_) };
            ValueSelection::Range { low: lo + p * (hi - lo), high: lo + q * (hi - lo) }
        }
    };
    Some(FilterSpec::AttributeValue {
        attribute: dataset.attribute(a).name.clone(),
        selection,
        include_missing: rng.gen_bool(0.2),
    })
}

/// `count` finalized sessions, one per user, a minute apart.
pub fn session_log(dataset: &Dataset, quality: &QualityProfile, count: usize, seed: u64) -> Vec<SessionRecord> {
    let mut rng = StdRng::seed_from_u64(seed);
    let start = Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap();
    (0..count)
        .map(|i| {
            let at = start + Duration::minutes(i as i64);
            random_session(dataset, quality, &mut rng, &format!("session-{i:03}"), &format!("analyst-{i:03}"), at)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::profile_quality;

    #[test]
    fn layout_is_42_wide_with_both_types() {
        let d = marketing_table(200, 7);
        assert_eq!(d.attribute_count(), ATTRIBUTES);
        assert!(d.attributes().iter().any(|m| m.datatype == Datatype::Numerical));
        assert!(d.attributes().iter().any(|m| m.datatype == Datatype::Categorical));
        assert_eq!(marketing_table(200, 7).id(), d.id());
        assert_ne!(marketing_table(200, 8).id(), d.id());
    }

    #[test]
    fn config_applies_and_finds_defects() {
        let d = marketing_table(500, 1);
        let q = profile_quality(&d, &marketing_config()).unwrap();
        let email = d.attribute_index("customer.email").unwrap();
        let c = q.attributes[email].correctness.unwrap().value;
        assert!(c < 100.0 && c > 70.0, "{c}");
    }

    #[test]
    fn sessions_are_consistent() {
        let d = marketing_table(300, 2);
        let q = profile_quality(&d, &marketing_config()).unwrap();
        for s in session_log(&d, &q, 10, 3) {
            assert_eq!(s.dataset_id, d.id());
            assert!(s.final_selected_record_indices.windows(2).all(|w| w[0] < w[1]));
            assert!(!s.final_selected_attributes.is_empty());
        }
    }
}
