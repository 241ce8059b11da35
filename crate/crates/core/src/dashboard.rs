//! Chart specifications, the data series they render, and the saved list.
//!
//! Charts only ever see the analyst's exported subset, never the full table.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{CellValue, Dataset, Datatype};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartType {
    Bar,
    Scatter,
    Line,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Sum,
    Mean,
    Max,
    Min,
}

impl Aggregation {
    pub fn fold(self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        Some(match self {
            Aggregation::Sum => values.iter().sum(),
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregation::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VizSpec {
    pub chart: ChartType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<Aggregation>,
    #[serde(default)]
    pub title: String,
}

impl VizSpec {
    /// Attributes bound to the X or Y channel.
    pub fn encoded_attributes(&self) -> impl Iterator<Item = &str> {
        self.x.iter().chain(self.y.iter()).map(String::as_str)
    }
}

/// Which encoding rule a specification broke.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VizRule {
    NoEncoding,
    UnknownAttribute(String),
    BarNeedsCategoricalX,
    ScatterNeedsNumericalXY,
    LineNeedsXAndY,
    YNotNumerical,
    AggregationRequired,
    AggregationNotAllowed,
}

impl VizRule {
    pub fn code(&self) -> &'static str {
        match self {
            VizRule::NoEncoding => "no_encoding",
            VizRule::UnknownAttribute(_) => "unknown_attribute",
            VizRule::BarNeedsCategoricalX => "bar_needs_categorical_x",
            VizRule::ScatterNeedsNumericalXY => "scatter_needs_numerical_x_y",
            VizRule::LineNeedsXAndY => "line_needs_x_and_y",
            VizRule::YNotNumerical => "y_not_numerical",
            VizRule::AggregationRequired => "aggregation_required",
            VizRule::AggregationNotAllowed => "aggregation_not_allowed",
        }
    }
}

impl fmt::Display for VizRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VizRule::NoEncoding => f.write_str("at least one of x or y must be encoded"),
            VizRule::UnknownAttribute(a) => write!(f, "attribute {a:?} is not in the selected subset"),
            VizRule::BarNeedsCategoricalX => f.write_str("bar charts need a categorical x"),
            VizRule::ScatterNeedsNumericalXY => f.write_str("scatter plots need numerical x and y"),
            VizRule::LineNeedsXAndY => f.write_str("line charts need x and an aggregated y"),
            VizRule::YNotNumerical => f.write_str("the aggregated y channel must be numerical"),
            VizRule::AggregationRequired => f.write_str("an aggregation is required for y"),
            VizRule::AggregationNotAllowed => f.write_str("aggregation is not allowed for this encoding"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VizError {
    #[error("invalid visualization: {0}")]
    Rejected(VizRule),
    #[error("no saved visualization with id {0}")]
    UnknownId(u64),
}

fn reject<T>(rule: VizRule) -> Result<T, VizError> {
    Err(VizError::Rejected(rule))
}

/// Checks a spec against the encoding rules for its chart type.
pub fn validate_spec(spec: &VizSpec, subset: &Dataset) -> Result<(), VizError> {
    if spec.x.is_none() && spec.y.is_none() {
        return reject(VizRule::NoEncoding);
    }
    let datatype = |name: &Option<String>| -> Result<Option<Datatype>, VizError> {
        match name {
            None => Ok(None),
            Some(n) => match subset.attribute_index(n) {
                Some(i) => Ok(Some(subset.attribute(i).datatype)),
                None => reject(VizRule::UnknownAttribute(n.clone())),
            },
        }
    };
    let (x, y) = (datatype(&spec.x)?, datatype(&spec.y)?);
    match spec.chart {
        ChartType::Bar => {
            if x != Some(Datatype::Categorical) {
                return reject(VizRule::BarNeedsCategoricalX);
            }
            match y {
                None if spec.aggregation.is_some() => reject(VizRule::AggregationNotAllowed),
                None => Ok(()),
                Some(Datatype::Categorical) => reject(VizRule::YNotNumerical),
                Some(Datatype::Numerical) if spec.aggregation.is_none() => reject(VizRule::AggregationRequired),
                Some(Datatype::Numerical) => Ok(()),
            }
        }
        ChartType::Scatter => {
            if x != Some(Datatype::Numerical) || y != Some(Datatype::Numerical) {
                return reject(VizRule::ScatterNeedsNumericalXY);
            }
            if spec.aggregation.is_some() {
                return reject(VizRule::AggregationNotAllowed);
            }
            Ok(())
        }
        ChartType::Line => match (x, y) {
            (Some(_), Some(Datatype::Numerical)) if spec.aggregation.is_none() => reject(VizRule::AggregationRequired),
            (Some(_), Some(Datatype::Numerical)) => Ok(()),
            (Some(_), Some(Datatype::Categorical)) => reject(VizRule::YNotNumerical),
            _ => reject(VizRule::LineNeedsXAndY),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub x: AxisValue,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum GroupKey {
    Number(f64),
    Text(String),
}

impl GroupKey {
    fn of(cell: CellValue<'_>) -> Option<GroupKey> {
        match cell {
            CellValue::Missing => None,
            CellValue::Number { value, .. } => Some(GroupKey::Number(value)),
            CellValue::Text(t) => Some(GroupKey::Text(t.to_string())),
        }
    }

    fn cmp_key(&self, other: &GroupKey) -> Ordering {
        match (self, other) {
            (GroupKey::Number(a), GroupKey::Number(b)) => a.total_cmp(b),
            (GroupKey::Text(a), GroupKey::Text(b)) => a.cmp(b),
            (GroupKey::Number(_), GroupKey::Text(_)) => Ordering::Less,
            (GroupKey::Text(_), GroupKey::Number(_)) => Ordering::Greater,
        }
    }

    fn into_axis(self) -> AxisValue {
        match self {
            GroupKey::Number(n) => AxisValue::Number(n),
            GroupKey::Text(t) => AxisValue::Text(t),
        }
    }
}

/// The points a chart draws.
///
/// Rows missing any encoded channel are dropped. Bar and line charts group by
/// x; bars are ordered by descending y (ties by label), lines by ascending x.
/// Scatter plots keep raw pairs in row order.
pub fn compute_series(spec: &VizSpec, subset: &Dataset) -> Result<Vec<SeriesPoint>, VizError> {
    validate_spec(spec, subset)?;
    let col = |name: &Option<String>| name.as_ref().and_then(|n| subset.attribute_index(n));
    let (xi, yi) = (col(&spec.x), col(&spec.y));
    let rows = 0..subset.record_count();

    if spec.chart == ChartType::Scatter {
        let (xi, yi) = (xi.expect("validated"), yi.expect("validated"));
        return Ok(rows
            .filter_map(|r| {
                let x = subset.cell(xi, r).number()?;
                let y = subset.cell(yi, r).number()?;
                Some(SeriesPoint { x: AxisValue::Number(x), y })
            })
            .collect());
    }

    let xi = xi.expect("validated");
    let mut groups: Vec<(GroupKey, Vec<f64>)> = Vec::new();
    let mut slot: BTreeMap<String, usize> = BTreeMap::new();
    for r in rows {
        let Some(key) = GroupKey::of(subset.cell(xi, r)) else { continue };
        let value = match yi {
            Some(yi) => match subset.cell(yi, r).number() {
                Some(v) => v,
                None => continue,
            },
            None => 1.0,
        };
        let label = match &key {
            GroupKey::Number(n) => format!("n:{n}"),
            GroupKey::Text(t) => format!("t:{t}"),
        };
        let at = *slot.entry(label).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[at].1.push(value);
    }
    let aggregation = spec.aggregation.unwrap_or(Aggregation::Sum);
    let mut points: Vec<(GroupKey, f64)> =
        groups.into_iter().filter_map(|(k, vals)| aggregation.fold(&vals).map(|y| (k, y))).collect();
    match spec.chart {
        ChartType::Bar => points.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp_key(&b.0))),
        _ => points.sort_by(|a, b| a.0.cmp_key(&b.0)),
    }
    Ok(points.into_iter().map(|(k, y)| SeriesPoint { x: k.into_axis(), y }).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedViz {
    pub id: u64,
    pub spec: VizSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeleteTarget {
    One(u64),
    All,
}

/// Saved visualizations in save order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dashboard {
    items: Vec<SavedViz>,
    next_id: u64,
}

impl Dashboard {
    pub fn new() -> Dashboard {
        Dashboard::default()
    }

    pub fn items(&self) -> &[SavedViz] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&SavedViz> {
        self.items.iter().find(|v| v.id == id)
    }

    pub fn specs(&self) -> impl Iterator<Item = &VizSpec> {
        self.items.iter().map(|v| &v.spec)
    }

    /// Validates and appends; returns the new id.
    pub fn save(&mut self, spec: VizSpec, subset: &Dataset) -> Result<u64, VizError> {
        validate_spec(&spec, subset)?;
        let id = self.next_id;
        self.next_id += 1;
        self.items.push(SavedViz { id, spec });
        Ok(id)
    }

    pub fn delete(&mut self, target: DeleteTarget) -> Result<(), VizError> {
        match target {
            DeleteTarget::All => self.items.clear(),
            DeleteTarget::One(id) => {
                let at = self.items.iter().position(|v| v.id == id).ok_or(VizError::UnknownId(id))?;
                self.items.remove(at);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::IngestConfig;

    fn subset() -> Dataset {
        let cols = [
            ("product.name", vec!["A", "A", "B", "C", ""]),
            ("purchase.price", vec!["1", "2", "4", "", "9"]),
            ("qty", vec!["3", "1", "2", "2", "1"]),
        ];
        Dataset::from_raw_columns(
            cols.iter().map(|(n, _)| n.to_string()).collect(),
            cols.iter().map(|(_, v)| v.iter().map(|s| s.to_string()).collect()).collect(),
            &IngestConfig::default(),
        )
        .unwrap()
    }

    fn spec(chart: ChartType, x: Option<&str>, y: Option<&str>, aggregation: Option<Aggregation>) -> VizSpec {
        VizSpec { chart, x: x.map(Into::into), y: y.map(Into::into), aggregation, title: String::new() }
    }

    fn rule(r: Result<(), VizError>) -> Option<VizRule> {
        match r {
            Err(VizError::Rejected(rule)) => Some(rule),
            _ => None,
        }
    }

    #[test]
    fn validation() {
        let d = subset();
        let ok = spec(ChartType::Bar, Some("product.name"), Some("purchase.price"), Some(Aggregation::Sum));
        assert_eq!(validate_spec(&ok, &d), Ok(()));
        let univariate = spec(ChartType::Bar, Some("product.name"), None, None);
        assert_eq!(validate_spec(&univariate, &d), Ok(()));
        let s = spec(ChartType::Scatter, Some("qty"), Some("purchase.price"), Some(Aggregation::Sum));
        assert_eq!(rule(validate_spec(&s, &d)), Some(VizRule::AggregationNotAllowed));
        let s = spec(ChartType::Scatter, Some("product.name"), Some("purchase.price"), None);
        assert_eq!(rule(validate_spec(&s, &d)), Some(VizRule::ScatterNeedsNumericalXY));
        let s = spec(ChartType::Bar, Some("qty"), Some("purchase.price"), Some(Aggregation::Sum));
        assert_eq!(rule(validate_spec(&s, &d)), Some(VizRule::BarNeedsCategoricalX));
        let s = spec(ChartType::Bar, Some("product.name"), Some("purchase.price"), None);
        assert_eq!(rule(validate_spec(&s, &d)), Some(VizRule::AggregationRequired));
        let s = spec(ChartType::Bar, Some("product.name"), Some("product.name"), Some(Aggregation::Sum));
        assert_eq!(rule(validate_spec(&s, &d)), Some(VizRule::YNotNumerical));
        let s = spec(ChartType::Line, Some("qty"), None, None);
        assert_eq!(rule(validate_spec(&s, &d)), Some(VizRule::LineNeedsXAndY));
        let s = spec(ChartType::Line, None, None, None);
        assert_eq!(rule(validate_spec(&s, &d)), Some(VizRule::NoEncoding));
        let s = spec(ChartType::Bar, Some("gone"), None, None);
        assert_eq!(rule(validate_spec(&s, &d)), Some(VizRule::UnknownAttribute("gone".into())));
    }

    #[test]
    fn bar_sum_orders_by_descending_y() {
        let d = subset();
        let s = spec(ChartType::Bar, Some("product.name"), Some("purchase.price"), Some(Aggregation::Sum));
        let series = compute_series(&s, &d).unwrap();
        // C has only a missing price and is omitted; the blank product row is dropped
        assert_eq!(
            series,
            vec![
                SeriesPoint { x: AxisValue::Text("B".into()), y: 4.0 },
                SeriesPoint { x: AxisValue::Text("A".into()), y: 3.0 },
            ]
        );
    }

    #[test]
    fn univariate_counts_and_ties() {
        let d = subset();
        let s = spec(ChartType::Bar, Some("product.name"), None, None);
        let series = compute_series(&s, &d).unwrap();
        let labels: Vec<_> = series.iter().map(|p| (p.x.clone(), p.y)).collect();
        assert_eq!(
            labels,
            vec![
                (AxisValue::Text("A".into()), 2.0),
                (AxisValue::Text("B".into()), 1.0),
                (AxisValue::Text("C".into()), 1.0),
            ]
        );
    }

    #[test]
    fn line_orders_by_x() {
        let d = subset();
        let s = spec(ChartType::Line, Some("qty"), Some("purchase.price"), Some(Aggregation::Mean));
        let series = compute_series(&s, &d).unwrap();
        assert_eq!(
            series,
            vec![
                SeriesPoint { x: AxisValue::Number(1.0), y: 5.5 },
                SeriesPoint { x: AxisValue::Number(2.0), y: 4.0 },
                SeriesPoint { x: AxisValue::Number(3.0), y: 1.0 },
            ]
        );
    }

    #[test]
    fn scatter_pairs_skip_missing() {
        let d = subset();
        let s = spec(ChartType::Scatter, Some("qty"), Some("purchase.price"), None);
        assert_eq!(compute_series(&s, &d).unwrap().len(), 4);
    }

    #[test]
    fn empty_subset_gives_empty_series() {
        let d = subset().project(&[0, 1], &[]);
        let s = spec(ChartType::Bar, Some("product.name"), Some("purchase.price"), Some(Aggregation::Max));
        assert_eq!(compute_series(&s, &d).unwrap(), vec![]);
    }

    #[test]
    fn dashboard_save_and_delete() {
        let d = subset();
        let mut dash = Dashboard::new();
        for _ in 0..3 {
            dash.save(spec(ChartType::Bar, Some("product.name"), None, None), &d).unwrap();
        }
        assert_eq!(dash.len(), 3);
        assert!(dash.save(spec(ChartType::Line, None, None, None), &d).is_err());
        assert_eq!(dash.len(), 3);
        dash.delete(DeleteTarget::One(1)).unwrap();
        assert_eq!(dash.items().iter().map(|v| v.id).collect::<Vec<_>>(), vec![0, 2]);
        let before = dash.clone();
        assert_eq!(dash.delete(DeleteTarget::One(99)), Err(VizError::UnknownId(99)));
        assert_eq!(dash, before);
        dash.delete(DeleteTarget::All).unwrap();
        assert!(dash.is_empty());
        let id = dash.save(spec(ChartType::Bar, Some("product.name"), None, None), &d).unwrap();
        assert_eq!(id, 3);
    }
}
