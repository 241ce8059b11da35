//! Immutable typed columnar tables.
//!
//! A [`Dataset`] is built once from CSV (or from raw columns) and never
//! mutated afterwards. Each column keeps the raw cell text next to its parsed
//! form so that exports reproduce the source exactly and string predicates
//! see what the user typed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Number of equal-width bins used for numerical histograms.
pub const NUMERIC_BINS: usize = 20;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is empty")]
    Empty,
    #[error("row {row}: {message}")]
    Malformed { row: u64, message: String },
    #[error("duplicate attribute name {0:?}")]
    DuplicateAttribute(String),
    #[error("attribute name at position {0} is empty")]
    EmptyAttributeName(usize),
    #[error("column {attribute:?} has {found} values, expected {expected}")]
    ColumnLength { attribute: String, expected: usize, found: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("record index {index} out of range (record count {count})")]
    RecordOutOfRange { index: usize, count: usize },
    #[error("mask has {found} entries, expected {expected}")]
    MaskLength { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    Categorical,
    Numerical,
}

impl Datatype {
    fn tag(self) -> &'static str {
        match self {
            Datatype::Categorical => "categorical",
            Datatype::Numerical => "numerical",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeMeta {
    pub name: String,
    pub datatype: Datatype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Missing-value detection settings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Tokens treated as missing. The empty string is always missing.
    pub missing_tokens: Vec<String>,
    pub trim_whitespace: bool,
    pub case_insensitive: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            missing_tokens: ["", "null", "na", "nan", "n/a"].iter().map(|s| s.to_string()).collect(),
            trim_whitespace: true,
            case_insensitive: true,
        }
    }
}

impl IngestConfig {
    pub fn is_missing(&self, raw: &str) -> bool {
        let probe = if self.trim_whitespace { raw.trim() } else { raw };
        if probe.is_empty() || raw.is_empty() {
            return true;
        }
        self.missing_tokens.iter().any(|token| {
            let token = if self.trim_whitespace { token.trim() } else { token.as_str() };
            if self.case_insensitive {
                token.eq_ignore_ascii_case(probe) || token.to_lowercase() == probe.to_lowercase()
            } else {
                token == probe
            }
        })
    }
}

/// True iff `raw` is a missing value under `config`.
pub fn is_missing(raw: &str, config: &IngestConfig) -> bool {
    config.is_missing(raw)
}

/// Parses a plain decimal literal: optional sign, digits, optional fraction,
/// optional exponent. Rejects `inf`, `nan` and hex forms that `f64::from_str`
/// would otherwise accept.
pub fn parse_decimal(raw: &str) -> Option<f64> {
    let s = raw.trim();
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(at) => (&body[..at], Some(&body[at + 1..])),
        None => (body, None),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (mantissa, None),
    };
    let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || !frac.is_none_or(digits) {
        return None;
    }
    if int.is_empty() && frac.is_none_or(str::is_empty) {
        return None;
    }
    if let Some(exp) = exponent {
        let exp = exp.strip_prefix(['+', '-']).unwrap_or(exp);
        if exp.is_empty() || !digits(exp) {
            return None;
        }
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// One cell as seen by predicates and aggregations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellValue<'a> {
    Missing,
    Number { value: f64, raw: &'a str },
    Text(&'a str),
}

impl<'a> CellValue<'a> {
    pub fn is_missing(&self) -> bool {
        matches!(self, CellValue::Missing)
    }

    /// Raw text for non-missing cells.
    pub fn text(&self) -> Option<&'a str> {
        match *self {
            CellValue::Missing => None,
            CellValue::Number { raw, .. } => Some(raw),
            CellValue::Text(t) => Some(t),
        }
    }

    pub fn number(&self) -> Option<f64> {
        match *self {
            CellValue::Number { value, .. } => Some(value),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Numerical(Vec<Option<f64>>),
    /// Dictionary-encoded tokens; dictionary order is first appearance.
    Categorical {
        dictionary: Vec<String>,
        codes: Vec<Option<u32>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    raw: Vec<String>,
    data: ColumnData,
}

impl Column {
    fn build(raw: Vec<String>, config: &IngestConfig, force: Option<Datatype>) -> Column {
        let missing: Vec<bool> = raw.iter().map(|r| config.is_missing(r)).collect();
        let parsed: Option<Vec<Option<f64>>> = if force == Some(Datatype::Categorical) {
            None
        } else {
            raw.iter().zip(&missing).map(|(r, &m)| if m { Some(None) } else { parse_decimal(r).map(Some) }).collect()
        };
        let data = match parsed {
            Some(values) => ColumnData::Numerical(values),
            None => {
                let mut lookup: HashMap<&str, u32> = HashMap::new();
                let mut dictionary = Vec::new();
                let codes = raw
                    .iter()
                    .zip(&missing)
                    .map(|(r, &m)| {
                        if m {
                            return None;
                        }
                        let next = dictionary.len() as u32;
                        let code = *lookup.entry(r.as_str()).or_insert_with(|| {
                            dictionary.push(r.clone());
                            next
                        });
                        Some(code)
                    })
                    .collect();
                ColumnData::Categorical { dictionary, codes }
            }
        };
        Column { raw, data }
    }

    pub fn datatype(&self) -> Datatype {
        match self.data {
            ColumnData::Numerical(_) => Datatype::Numerical,
            ColumnData::Categorical { .. } => Datatype::Categorical,
        }
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn raw(&self, row: usize) -> &str {
        &self.raw[row]
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.data {
            ColumnData::Numerical(v) => v[row].is_none(),
            ColumnData::Categorical { codes, .. } => codes[row].is_none(),
        }
    }

    pub fn cell(&self, row: usize) -> CellValue<'_> {
        let raw = self.raw[row].as_str();
        match &self.data {
            ColumnData::Numerical(v) => match v[row] {
                Some(value) => CellValue::Number { value, raw },
                None => CellValue::Missing,
            },
            ColumnData::Categorical { codes, .. } => match codes[row] {
                Some(_) => CellValue::Text(raw),
                None => CellValue::Missing,
            },
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&r| self.is_missing(r)).count()
    }

    /// Non-missing numeric values, in row order.
    pub fn numbers(&self) -> impl Iterator<Item = f64> + '_ {
        let values: &[Option<f64>] = match &self.data {
            ColumnData::Numerical(v) => v,
            ColumnData::Categorical { .. } => &[],
        };
        values.iter().flatten().copied()
    }
}

/// Equal-width bins over the non-missing range of a numerical column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericBins {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl NumericBins {
    /// `None` when there are no values.
    pub fn over(values: impl IntoIterator<Item = f64>) -> Option<NumericBins> {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        for v in values {
            any = true;
            min = min.min(v);
            max = max.max(v);
        }
        if !any {
            return None;
        }
        let count = if min == max { 1 } else { NUMERIC_BINS };
        Some(NumericBins { min, max, count })
    }

    pub fn index(&self, v: f64) -> usize {
        if self.count == 1 || v <= self.min {
            return 0;
        }
        let width = (self.max - self.min) / self.count as f64;
        (((v - self.min) / width).floor() as usize).min(self.count - 1)
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        if self.count == 1 {
            return (self.min, self.max);
        }
        let width = (self.max - self.min) / self.count as f64;
        let low = self.min + width * i as f64;
        let high = if i + 1 == self.count { self.max } else { self.min + width * (i + 1) as f64 };
        (low, high)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BinLabel {
    Category { value: String },
    Range { low: f64, high: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub label: BinLabel,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeStats {
    pub cardinality: usize,
    pub missing_count: usize,
    pub histogram: Vec<HistogramBin>,
}

/// Read access to one record by attribute name.
pub struct RecordView<'a> {
    dataset: &'a Dataset,
    row: usize,
}

impl<'a> RecordView<'a> {
    pub fn index(&self) -> usize {
        self.row
    }

    pub fn get(&self, attribute: &str) -> Option<CellValue<'a>> {
        let col = self.dataset.attribute_index(attribute)?;
        Some(self.dataset.columns[col].cell(self.row))
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    id: String,
    attributes: Vec<AttributeMeta>,
    columns: Vec<Column>,
    index: HashMap<String, usize>,
    record_count: usize,
    config: IngestConfig,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.attributes == other.attributes && self.columns == other.columns
    }
}

impl Dataset {
    /// Builds a dataset from named raw columns, inferring datatypes.
    pub fn from_raw_columns(
        names: Vec<String>,
        raw_columns: Vec<Vec<String>>,
        config: &IngestConfig,
    ) -> Result<Dataset, IngestError> {
        let inferred = vec![None; names.len()];
        Dataset::build(names, raw_columns, inferred, config)
    }

    fn build(
        names: Vec<String>,
        raw_columns: Vec<Vec<String>>,
        datatypes: Vec<Option<Datatype>>,
        config: &IngestConfig,
    ) -> Result<Dataset, IngestError> {
        let mut seen = HashSet::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(IngestError::EmptyAttributeName(i));
            }
            if !seen.insert(name.as_str()) {
                return Err(IngestError::DuplicateAttribute(name.clone()));
            }
        }
        assert_eq!(names.len(), raw_columns.len(), "one raw column per name");
        let record_count = raw_columns.first().map_or(0, Vec::len);
        for (name, col) in names.iter().zip(&raw_columns) {
            if col.len() != record_count {
                return Err(IngestError::ColumnLength {
                    attribute: name.clone(),
                    expected: record_count,
                    found: col.len(),
                });
            }
        }
        let work: Vec<(Vec<String>, Option<Datatype>)> = raw_columns.into_iter().zip(datatypes).collect();
        let columns: Vec<Column> =
            crate::Execution::default().map_vec(work, |(raw, force)| Column::build(raw, config, force));
        let attributes: Vec<AttributeMeta> = names
            .into_iter()
            .zip(&columns)
            .map(|(name, col)| AttributeMeta { name, datatype: col.datatype(), description: None })
            .collect();
        let index = attributes.iter().enumerate().map(|(i, a)| (a.name.clone(), i)).collect();
        let id = content_id(&attributes, &columns, record_count);
        Ok(Dataset { id, attributes, columns, index, record_count, config: config.clone() })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn attributes(&self) -> &[AttributeMeta] {
        &self.attributes
    }

    pub fn attribute(&self, index: usize) -> &AttributeMeta {
        &self.attributes[index]
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn record_count(&self) -> usize {
        self.record_count
    }

    pub fn ingest_config(&self) -> &IngestConfig {
        &self.config
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require_attribute(&self, name: &str) -> Result<usize, TableError> {
        self.attribute_index(name).ok_or_else(|| TableError::UnknownAttribute(name.to_string()))
    }

    pub fn require_record(&self, index: usize) -> Result<(), TableError> {
        if index < self.record_count {
            Ok(())
        } else {
            Err(TableError::RecordOutOfRange { index, count: self.record_count })
        }
    }

    pub fn column(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn cell(&self, attribute: usize, row: usize) -> CellValue<'_> {
        self.columns[attribute].cell(row)
    }

    pub fn record(&self, row: usize) -> RecordView<'_> {
        RecordView { dataset: self, row }
    }

    /// Copies the given attributes × records into a new dataset.
    ///
    /// Categorical attributes stay categorical even if the kept rows happen
    /// to be all numeric, so charts and filters see the same datatypes as
    /// the source table.
    pub fn project(&self, attributes: &[usize], records: &[usize]) -> Dataset {
        let names = attributes.iter().map(|&a| self.attributes[a].name.clone()).collect();
        let datatypes = attributes.iter().map(|&a| Some(self.attributes[a].datatype)).collect();
        let raw =
            attributes.iter().map(|&a| records.iter().map(|&r| self.columns[a].raw[r].clone()).collect()).collect();
        let mut out =
            Dataset::build(names, raw, datatypes, &self.config).expect("projection of a valid dataset is valid");
        for (dst, &src) in out.attributes.iter_mut().zip(attributes) {
            dst.description = self.attributes[src].description.clone();
        }
        out
    }

    /// Writes the dataset as RFC-4180 CSV with a header row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record(self.attributes.iter().map(|a| a.name.as_str()))?;
        for row in 0..self.record_count {
            w.write_record(self.columns.iter().map(|c| c.raw[row].as_str()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("cells are UTF-8")
    }
}

fn content_id(attributes: &[AttributeMeta], columns: &[Column], record_count: usize) -> String {
    let mut h = Sha256::new();
    let mut field = |bytes: &[u8]| {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    };
    field(&(attributes.len() as u64).to_le_bytes());
    field(&(record_count as u64).to_le_bytes());
    for a in attributes {
        field(a.name.as_bytes());
        field(a.datatype.tag().as_bytes());
    }
    for row in 0..record_count {
        for c in columns {
            field(c.raw[row].as_bytes());
        }
    }
    hex::encode(&h.finalize()[..16])
}

/// Finds the first record (1-based, header = 1) whose quoting is broken:
/// a quoted field that never closes or a quote inside an unquoted field.
fn unbalanced_quote_row(bytes: &[u8]) -> Option<u64> {
    let mut in_quotes = false;
    let mut row = 1u64;
    let mut opened_at = 0u64;
    let mut field_start = true;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        i += 1;
        if in_quotes {
            if b == b'"' {
                if bytes.get(i) == Some(&b'"') {
                    i += 1;
                } else {
                    in_quotes = false;
                }
            }
            continue;
        }
        match b {
            b'"' if field_start => {
                in_quotes = true;
                opened_at = row;
            }
            b'"' => return Some(row),
            b',' => {
                field_start = true;
                continue;
            }
            b'\n' => {
                row += 1;
                field_start = true;
                continue;
            }
            _ => {}
        }
        field_start = false;
    }
    in_quotes.then_some(opened_at)
}

/// Reads a CSV stream with a header row into a [`Dataset`].
pub fn ingest_csv<R: Read>(mut source: R, config: &IngestConfig) -> Result<Dataset, IngestError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(IngestError::Empty);
    }
    if let Some(row) = unbalanced_quote_row(&bytes) {
        return Err(IngestError::Malformed { row, message: "unbalanced quote".into() });
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(bytes.as_slice());
    let malformed = |e: csv::Error| {
        let row = e.position().map_or(0, |p| p.line());
        let message = match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("expected {expected_len} fields, found {len}")
            }
            csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
            _ => e.to_string(),
        };
        IngestError::Malformed { row, message }
    };
    let headers = reader.headers().map_err(malformed)?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let mut raw_columns: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(malformed)?;
        for (col, value) in raw_columns.iter_mut().zip(record.iter()) {
            col.push(value.to_string());
        }
    }
    Dataset::from_raw_columns(names, raw_columns, config)
}

/// Summary statistics for one attribute, optionally over a subset of rows.
///
/// Numerical bin edges always span the whole column so masked and unmasked
/// histograms line up bin for bin.
pub fn attribute_stats(
    dataset: &Dataset,
    attribute: &str,
    mask: Option<&[bool]>,
) -> Result<AttributeStats, TableError> {
    let a = dataset.require_attribute(attribute)?;
    if let Some(m) = mask {
        if m.len() != dataset.record_count() {
            return Err(TableError::MaskLength { expected: dataset.record_count(), found: m.len() });
        }
    }
    let keep = |r: usize| mask.is_none_or(|m| m[r]);
    let column = dataset.column(a);
    let rows = (0..dataset.record_count()).filter(|&r| keep(r));
    let mut missing_count = 0;
    match column.data() {
        ColumnData::Categorical { dictionary, codes } => {
            let mut counts = vec![0usize; dictionary.len()];
            for r in rows {
                match codes[r] {
                    Some(c) => counts[c as usize] += 1,
                    None => missing_count += 1,
                }
            }
            let mut histogram: Vec<HistogramBin> = counts
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(|(c, &n)| HistogramBin { label: BinLabel::Category { value: dictionary[c].clone() }, count: n })
                .collect();
            histogram.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| label_text(x).cmp(label_text(y))));
            Ok(AttributeStats { cardinality: histogram.len(), missing_count, histogram })
        }
        ColumnData::Numerical(values) => {
            let bins = NumericBins::over(column.numbers());
            let mut distinct: BTreeMap<u64, ()> = BTreeMap::new();
            let mut counts = vec![0usize; bins.map_or(0, |b| b.count)];
            for r in rows {
                match values[r] {
                    Some(v) => {
                        // normalise -0.0 so it is not counted apart from 0.0
                        distinct.insert((v + 0.0).to_bits(), ());
                        if let Some(b) = &bins {
                            counts[b.index(v)] += 1;
                        }
                    }
                    None => missing_count += 1,
                }
            }
            let non_missing: usize = counts.iter().sum();
            let histogram = match bins {
                Some(b) if non_missing > 0 => counts
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| {
                        let (low, high) = b.bounds(i);
                        HistogramBin { label: BinLabel::Range { low, high }, count: n }
                    })
                    .collect(),
                _ => Vec::new(),
            };
            Ok(AttributeStats { cardinality: distinct.len(), missing_count, histogram })
        }
    }
}

fn label_text(bin: &HistogramBin) -> &str {
    match &bin.label {
        BinLabel::Category { value } => value,
        BinLabel::Range { .. } => "",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str) -> Result<Dataset, IngestError> {
        ingest_csv(text.as_bytes(), &IngestConfig::default())
    }

    #[test]
    fn missing_tokens() {
        let cfg = IngestConfig::default();
        assert!(is_missing("", &cfg));
        assert!(is_missing("   ", &cfg));
        assert!(is_missing("NaN", &cfg));
        assert!(is_missing("NULL", &cfg));
        assert!(is_missing(" n/a ", &cfg));
        assert!(!is_missing("iOS", &cfg));
        assert!(!is_missing("0", &cfg));
    }

    #[test]
    fn empty_string_missing_under_any_config() {
        let cfg = IngestConfig { missing_tokens: vec![], trim_whitespace: false, case_insensitive: false };
        assert!(is_missing("", &cfg));
        assert!(!is_missing(" ", &cfg));
    }

    #[test]
    fn infers_numerical() {
        let d = ingest("a,b\n1,x\n2.5,\n3,y\n,z\n").unwrap();
        assert_eq!(d.attribute(0).datatype, Datatype::Numerical);
        assert_eq!(d.attribute(1).datatype, Datatype::Categorical);
        assert_eq!(d.record_count(), 4);
        assert_eq!(d.cell(0, 1), CellValue::Number { value: 2.5, raw: "2.5" });
        assert!(d.cell(0, 3).is_missing());
        assert!(d.cell(1, 1).is_missing());
    }

    #[test]
    fn decimal_literals() {
        assert_eq!(parse_decimal("-1.5e3"), Some(-1500.0));
        assert_eq!(parse_decimal(".5"), Some(0.5));
        assert_eq!(parse_decimal("inf"), None);
        assert_eq!(parse_decimal("nan"), None);
        assert_eq!(parse_decimal("1e"), None);
        assert_eq!(parse_decimal("."), None);
        assert_eq!(parse_decimal("0x10"), None);
    }

    #[test]
    fn header_only() {
        let d = ingest("a,b\n").unwrap();
        assert_eq!(d.record_count(), 0);
        assert_eq!(d.attribute_count(), 2);
        let s = attribute_stats(&d, "a", None).unwrap();
        assert_eq!(s.cardinality, 0);
        assert!(s.histogram.is_empty());
    }

    #[test]
    fn ingest_errors() {
        assert!(matches!(ingest(""), Err(IngestError::Empty)));
        assert!(matches!(ingest("a,a\n1,2\n"), Err(IngestError::DuplicateAttribute(n)) if n == "a"));
        match ingest("a,b\n1,2\n3\n") {
            Err(IngestError::Malformed { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        match ingest("a,b\n1,2\n\"3,4\n5,6\n") {
            Err(IngestError::Malformed { row, message }) => {
                assert_eq!(row, 3);
                assert!(message.contains("quote"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quoted_fields() {
        let d = ingest("name,note\n\"Smith, J\",\"said \"\"hi\"\"\"\n").unwrap();
        assert_eq!(d.column(0).raw(0), "Smith, J");
        assert_eq!(d.column(1).raw(0), "said \"hi\"");
        let again = ingest(&d.to_csv_string()).unwrap();
        assert_eq!(again.id(), d.id());
    }

    #[test]
    fn id_is_deterministic() {
        let text = "a,b\n1,x\n2,y\n";
        assert_eq!(ingest(text).unwrap().id(), ingest(text).unwrap().id());
        assert_ne!(ingest(text).unwrap().id(), ingest("a,b\n1,x\n2,z\n").unwrap().id());
        assert_ne!(ingest(text).unwrap().id(), ingest("a,b\n2,y\n1,x\n").unwrap().id());
    }

    #[test]
    fn stats_missing_and_cardinality() {
        let raw: Vec<String> = (0..50).map(|i| if i < 10 { String::new() } else { i.to_string() }).collect();
        let d = Dataset::from_raw_columns(vec!["v".into()], vec![raw], &IngestConfig::default()).unwrap();
        let s = attribute_stats(&d, "v", None).unwrap();
        assert_eq!(s.missing_count, 10);
        assert_eq!(s.cardinality, 40);
        assert_eq!(s.histogram.iter().map(|b| b.count).sum::<usize>(), 40);
        assert_eq!(s.histogram.len(), NUMERIC_BINS);
    }

    #[test]
    fn all_distinct() {
        let text: String =
            std::iter::once("v".to_string()).chain((0..50).map(|i| format!("id{i}"))).collect::<Vec<_>>().join("\n");
        let d = ingest(&text).unwrap();
        assert_eq!(attribute_stats(&d, "v", None).unwrap().cardinality, 50);
    }

    #[test]
    fn masked_histogram() {
        let d = ingest("cat,keep\nA,y\nA,y\nA,n\nB,n\n").unwrap();
        let mask: Vec<bool> = (0..4).map(|r| d.column(1).raw(r) == "y").collect();
        let s = attribute_stats(&d, "cat", Some(&mask)).unwrap();
        assert_eq!(s.histogram, vec![HistogramBin { label: BinLabel::Category { value: "A".into() }, count: 2 }]);
        let full = attribute_stats(&d, "cat", None).unwrap();
        assert_eq!(full.histogram[0].count, 3);
        assert_eq!(full.histogram[1].count, 1);
    }

    #[test]
    fn single_valued_numeric_column_has_one_bin() {
        let d = ingest("v\n7\n7\n7\n").unwrap();
        let s = attribute_stats(&d, "v", None).unwrap();
        assert_eq!(s.histogram.len(), 1);
        assert_eq!(s.histogram[0].count, 3);
    }

    #[test]
    fn stats_errors() {
        let d = ingest("v\n1\n").unwrap();
        assert_eq!(attribute_stats(&d, "w", None), Err(TableError::UnknownAttribute("w".into())));
        assert!(matches!(attribute_stats(&d, "v", Some(&[])), Err(TableError::MaskLength { .. })));
    }

    #[test]
    fn projection_reingests_identically() {
        let d = ingest("a,b,c\n1,x,\n2,y,q\n3,z,r\n").unwrap();
        let p = d.project(&[0, 2], &[0, 2]);
        assert_eq!(p.record_count(), 2);
        assert_eq!(p.attribute_count(), 2);
        let again = ingest(&p.to_csv_string()).unwrap();
        assert_eq!(again.id(), p.id());
        let all = d.project(&[0, 1, 2], &[0, 1, 2]);
        assert_eq!(all.id(), d.id());
    }
}
