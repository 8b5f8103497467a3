//! Balanced entity × period × variable panels: loading, gap filling,
//! standardisation and pooled correlations.
//!
//! Two CSV layouts are accepted and told apart by their header:
//!
//! * **long**: one row per entity-period, with a period column and one
//!   column per variable (`country,year,EN.ATM.CO2E.KT,...`);
//! * **wide**: one row per entity-variable, with a column naming the
//!   variable and one column per year (`country,series,1990,1991,...`).
//!   Year headers may carry a suffix, as in World Bank exports
//!   (`1990 [YR1990]`).
//!
//! Cells that are empty, `..`, `NA` or `NaN` are gaps. After loading, the
//! panel covers the longest period range observed for every entity; gaps
//! inside that range stay as `NaN` until [`impute_missing`] fills them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("column `{0}` is missing from the input")]
    MissingColumn(String),
    #[error("cannot parse `{value}` at row {row}, column `{column}`")]
    UnparseableCell { row: usize, column: String, value: String },
    #[error("entities share no common period range")]
    EmptyIntersection,
    #[error("series {variable} for {entity} has no observations")]
    AllMissingSeries { entity: String, variable: String },
    #[error("dropping incomplete periods leaves no data")]
    UnfillableGap,
    #[error("series is degenerate (fewer than two points or zero variance)")]
    DegenerateSeries,
    #[error("panel contains {0} missing cells; impute before modelling")]
    MissingValues(usize),
    #[error("duplicate entry: {0}")]
    Duplicate(String),
    #[error("periods must be strictly increasing consecutive integers")]
    NonConsecutivePeriods,
    #[error("invalid variable specification: {0}")]
    InvalidSpec(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("value table has {got} cells, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableRole {
    Dependent,
    CandidatePredictor,
    Passthrough,
}

/// Maps a short variable code onto a column of the input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub code: String,
    pub source_column: String,
    pub role: VariableRole,
}

impl VariableSpec {
    pub fn new(code: &str, source_column: &str, role: VariableRole) -> Self {
        Self {
            code: code.to_string(),
            source_column: source_column.to_string(),
            role,
        }
    }
}

fn validate_specs(specs: &[VariableSpec]) -> Result<(), PanelError> {
    let dependents = specs.iter().filter(|s| s.role == VariableRole::Dependent).count();
    if dependents != 1 {
        return Err(PanelError::InvalidSpec(format!(
            "exactly one dependent variable required, found {dependents}"
        )));
    }
    let mut seen = HashSet::new();
    for s in specs {
        if !seen.insert(s.code.as_str()) {
            return Err(PanelError::InvalidSpec(format!("duplicate code `{}`", s.code)));
        }
    }
    Ok(())
}

/// One entity's values for one variable, aligned to the panel periods.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesView {
    pub entity: String,
    pub variable: String,
    pub values: Vec<f64>,
}

/// Dense entity × period × variable table.
///
/// Values are stored entity-major, then period, then variable. The dataset
/// is immutable once built; transformations return new panels.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    entities: Vec<String>,
    periods: Vec<i32>,
    variables: Vec<String>,
    roles: Vec<VariableRole>,
    values: Vec<f64>,
}

impl PanelDataset {
    pub fn new(
        entities: Vec<String>,
        periods: Vec<i32>,
        variables: Vec<String>,
        roles: Vec<VariableRole>,
        values: Vec<f64>,
    ) -> Result<Self, PanelError> {
        check_unique(&entities, "entity")?;
        check_unique(&variables, "variable")?;
        if roles.len() != variables.len() {
            return Err(PanelError::InvalidSpec("one role per variable required".into()));
        }
        if periods.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(PanelError::NonConsecutivePeriods);
        }
        let expected = entities.len() * periods.len() * variables.len();
        if values.len() != expected {
            return Err(PanelError::ShapeMismatch {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(PanelError::InvalidSpec("infinite value in panel".into()));
        }
        Ok(Self {
            entities,
            periods,
            variables,
            roles,
            values,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn periods(&self) -> &[i32] {
        &self.periods
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn roles(&self) -> &[VariableRole] {
        &self.roles
    }

    /// `(entities, periods, variables)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.entities.len(), self.periods.len(), self.variables.len())
    }

    pub fn n_obs(&self) -> usize {
        self.entities.len() * self.periods.len()
    }

    fn idx(&self, e: usize, t: usize, v: usize) -> usize {
        (e * self.periods.len() + t) * self.variables.len() + v
    }

    pub fn value(&self, entity: usize, period: usize, variable: usize) -> f64 {
        self.values[self.idx(entity, period, variable)]
    }

    pub fn variable_index(&self, code: &str) -> Result<usize, PanelError> {
        self.variables
            .iter()
            .position(|v| v == code)
            .ok_or_else(|| PanelError::UnknownVariable(code.to_string()))
    }

    pub fn entity_index(&self, name: &str) -> Result<usize, PanelError> {
        self.entities
            .iter()
            .position(|e| e == name)
            .ok_or_else(|| PanelError::UnknownEntity(name.to_string()))
    }

    pub fn role(&self, code: &str) -> Result<VariableRole, PanelError> {
        Ok(self.roles[self.variable_index(code)?])
    }

    /// Code of the dependent variable.
    pub fn dependent(&self) -> &str {
        let i = self.roles.iter().position(|r| *r == VariableRole::Dependent).unwrap_or(0);
        &self.variables[i]
    }

    pub fn candidate_predictors(&self) -> Vec<String> {
        self.variables
            .iter()
            .zip(&self.roles)
            .filter(|(_, r)| **r == VariableRole::CandidatePredictor)
            .map(|(v, _)| v.clone())
            .collect()
    }

    /// Values of one entity's series in period order.
    pub fn series(&self, entity: usize, variable: usize) -> Vec<f64> {
        (0..self.periods.len()).map(|t| self.value(entity, t, variable)).collect()
    }

    pub fn series_view(&self, entity: &str, code: &str) -> Result<SeriesView, PanelError> {
        let e = self.entity_index(entity)?;
        let v = self.variable_index(code)?;
        Ok(SeriesView {
            entity: entity.to_string(),
            variable: code.to_string(),
            values: self.series(e, v),
        })
    }

    /// All entity-period values of one variable, entity-major.
    pub fn column(&self, code: &str) -> Result<Vec<f64>, PanelError> {
        let v = self.variable_index(code)?;
        let mut out = Vec::with_capacity(self.n_obs());
        for e in 0..self.entities.len() {
            for t in 0..self.periods.len() {
                out.push(self.value(e, t, v));
            }
        }
        Ok(out)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn ensure_complete(&self) -> Result<(), PanelError> {
        match self.missing_count() {
            0 => Ok(()),
            n => Err(PanelError::MissingValues(n)),
        }
    }

    /// Restrict to the periods `first..=last`.
    pub fn slice_periods(&self, first: i32, last: i32) -> Result<Self, PanelError> {
        let keep: Vec<usize> = (0..self.periods.len())
            .filter(|&t| self.periods[t] >= first && self.periods[t] <= last)
            .collect();
        if keep.is_empty() {
            return Err(PanelError::EmptyIntersection);
        }
        Ok(self.with_periods(&keep))
    }

    fn with_periods(&self, keep: &[usize]) -> Self {
        let nv = self.variables.len();
        let mut values = Vec::with_capacity(self.entities.len() * keep.len() * nv);
        for e in 0..self.entities.len() {
            for &t in keep {
                let start = self.idx(e, t, 0);
                values.extend_from_slice(&self.values[start..start + nv]);
            }
        }
        Self {
            entities: self.entities.clone(),
            periods: keep.iter().map(|&t| self.periods[t]).collect(),
            variables: self.variables.clone(),
            roles: self.roles.clone(),
            values,
        }
    }

    /// Keep only the named entities, in the given order.
    pub fn select_entities(&self, names: &[String]) -> Result<Self, PanelError> {
        let idx: Vec<usize> = names.iter().map(|n| self.entity_index(n)).collect::<Result<_, _>>()?;
        check_unique(names, "entity")?;
        let block = self.periods.len() * self.variables.len();
        let mut values = Vec::with_capacity(idx.len() * block);
        for &e in &idx {
            values.extend_from_slice(&self.values[e * block..(e + 1) * block]);
        }
        Ok(Self {
            entities: names.to_vec(),
            periods: self.periods.clone(),
            variables: self.variables.clone(),
            roles: self.roles.clone(),
            values,
        })
    }

    /// Variable specs that reload a file written by [`Self::write_long_csv`].
    pub fn identity_specs(&self) -> Vec<VariableSpec> {
        self.variables
            .iter()
            .zip(&self.roles)
            .map(|(v, r)| VariableSpec::new(v, v, *r))
            .collect()
    }

    /// Canonical long-format CSV: `entity,period,<codes…>`, rows ordered by
    /// entity then period, columns in variable order. Gaps are written empty.
    pub fn write_long_csv<W: Write>(&self, writer: W) -> Result<(), PanelError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["entity".to_string(), "period".to_string()];
        header.extend(self.variables.iter().cloned());
        w.write_record(&header)?;
        for (e, name) in self.entities.iter().enumerate() {
            for (t, period) in self.periods.iter().enumerate() {
                let mut row = vec![name.clone(), period.to_string()];
                for v in 0..self.variables.len() {
                    let x = self.value(e, t, v);
                    row.push(if x.is_nan() { String::new() } else { x.to_string() });
                }
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_unique(items: &[String], what: &str) -> Result<(), PanelError> {
    let mut seen = HashSet::new();
    for item in items {
        if !seen.insert(item.as_str()) {
            return Err(PanelError::Duplicate(format!("{what} `{item}`")));
        }
    }
    Ok(())
}

/// Load a panel from a CSV file. See the module docs for accepted layouts.
pub fn load_panel(
    path: impl AsRef<Path>,
    specs: &[VariableSpec],
    entity_column: &str,
    period_column: &str,
) -> Result<PanelDataset, PanelError> {
    let file = std::fs::File::open(path.as_ref())?;
    read_panel(file, specs, entity_column, period_column)
}

/// Like [`load_panel`] but from any reader.
pub fn read_panel<R: Read>(
    reader: R,
    specs: &[VariableSpec],
    entity_column: &str,
    period_column: &str,
) -> Result<PanelDataset, PanelError> {
    validate_specs(specs)?;
    let mut rdr = csv::ReaderBuilder::new().flexible(false).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim_start_matches('\u{feff}').to_string()).collect();
    let entity_idx = headers
        .iter()
        .position(|h| h == entity_column)
        .ok_or_else(|| PanelError::MissingColumn(entity_column.to_string()))?;

    let mut cells = CellTable::default();
    if let Some(period_idx) = headers.iter().position(|h| h == period_column) {
        read_long(&mut rdr, &headers, entity_idx, period_idx, specs, &mut cells)?;
    } else if headers.iter().any(|h| header_year(h).is_some()) {
        read_wide(&mut rdr, &headers, entity_idx, specs, &mut cells)?;
    } else {
        return Err(PanelError::MissingColumn(period_column.to_string()));
    }
    cells.into_panel(specs)
}

#[derive(Default)]
struct CellTable {
    entity_order: Vec<String>,
    entity_pos: HashMap<String, usize>,
    // (entity, variable) -> period -> value
    cells: HashMap<(usize, usize), BTreeMap<i32, f64>>,
    // periods that appear at all for an entity (rows present), used for span
    observed: HashMap<usize, (i32, i32)>,
}

impl CellTable {
    fn entity(&mut self, name: &str) -> usize {
        if let Some(&i) = self.entity_pos.get(name) {
            return i;
        }
        let i = self.entity_order.len();
        self.entity_order.push(name.to_string());
        self.entity_pos.insert(name.to_string(), i);
        i
    }

    fn insert(&mut self, entity: usize, variable: usize, period: i32, value: Option<f64>) -> Result<(), PanelError> {
        let series = self.cells.entry((entity, variable)).or_default();
        if series.contains_key(&period) {
            return Err(PanelError::Duplicate(format!(
                "entity `{}` period {period}",
                self.entity_order[entity]
            )));
        }
        if let Some(v) = value {
            series.insert(period, v);
            let span = self.observed.entry(entity).or_insert((period, period));
            span.0 = span.0.min(period);
            span.1 = span.1.max(period);
        } else {
            series.insert(period, f64::NAN);
        }
        Ok(())
    }

    fn into_panel(self, specs: &[VariableSpec]) -> Result<PanelDataset, PanelError> {
        if self.entity_order.is_empty() {
            return Err(PanelError::EmptyIntersection);
        }
        let mut first = i32::MIN;
        let mut last = i32::MAX;
        for e in 0..self.entity_order.len() {
            let (lo, hi) = self.observed.get(&e).copied().ok_or(PanelError::EmptyIntersection)?;
            first = first.max(lo);
            last = last.min(hi);
        }
        if first > last {
            return Err(PanelError::EmptyIntersection);
        }
        let periods: Vec<i32> = (first..=last).collect();
        let nv = specs.len();
        let mut values = vec![f64::NAN; self.entity_order.len() * periods.len() * nv];
        for ((e, v), series) in &self.cells {
            for (&p, &x) in series.range(first..=last) {
                let t = (p - first) as usize;
                values[(e * periods.len() + t) * nv + v] = x;
            }
        }
        PanelDataset::new(
            self.entity_order,
            periods,
            specs.iter().map(|s| s.code.clone()).collect(),
            specs.iter().map(|s| s.role).collect(),
            values,
        )
    }
}

fn parse_value(raw: &str, row: usize, column: &str) -> Result<Option<f64>, PanelError> {
    let s = raw.trim();
    if s.is_empty() || s == ".." || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(PanelError::UnparseableCell {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn parse_period(raw: &str, row: usize, column: &str) -> Result<i32, PanelError> {
    raw.trim().parse::<i32>().map_err(|_| PanelError::UnparseableCell {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

/// Year encoded in a wide-format header (`1990` or `1990 [YR1990]`).
fn header_year(h: &str) -> Option<i32> {
    let bytes = h.as_bytes();
    if bytes.len() < 4 || !bytes[..4].iter().all(u8::is_ascii_digit) {
        return None;
    }
    if bytes.len() > 4 && bytes[4].is_ascii_digit() {
        return None;
    }
    h[..4].parse().ok()
}

fn read_long<R: Read>(
    rdr: &mut csv::Reader<R>,
    headers: &[String],
    entity_idx: usize,
    period_idx: usize,
    specs: &[VariableSpec],
    cells: &mut CellTable,
) -> Result<(), PanelError> {
    let columns: Vec<usize> = specs
        .iter()
        .map(|s| {
            headers
                .iter()
                .position(|h| *h == s.source_column)
                .ok_or_else(|| PanelError::MissingColumn(s.source_column.clone()))
        })
        .collect::<Result<_, _>>()?;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // Header is row 1.
        let row = r + 2;
        let entity = cells.entity(&record[entity_idx]);
        let period = parse_period(&record[period_idx], row, &headers[period_idx])?;
        for (v, &c) in columns.iter().enumerate() {
            let value = parse_value(&record[c], row, &headers[c])?;
            cells.insert(entity, v, period, value)?;
        }
    }
    Ok(())
}

fn read_wide<R: Read>(
    rdr: &mut csv::Reader<R>,
    headers: &[String],
    entity_idx: usize,
    specs: &[VariableSpec],
    cells: &mut CellTable,
) -> Result<(), PanelError> {
    let years: Vec<(usize, i32)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| header_year(h).map(|y| (i, y)))
        .collect();
    let label_columns: Vec<usize> = (0..headers.len())
        .filter(|&i| i != entity_idx && !years.iter().any(|(c, _)| *c == i))
        .collect();
    let mut seen_vars = vec![false; specs.len()];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 2;
        let var = label_columns
            .iter()
            .find_map(|&c| specs.iter().position(|s| s.source_column == record[c].trim()));
        let Some(v) = var else { continue };
        seen_vars[v] = true;
        let entity = cells.entity(&record[entity_idx]);
        for &(c, year) in &years {
            let value = parse_value(&record[c], row, &headers[c])?;
            cells.insert(entity, v, year, value)?;
        }
    }
    if let Some(v) = seen_vars.iter().position(|s| !s) {
        return Err(PanelError::MissingColumn(specs[v].source_column.clone()));
    }
    Ok(())
}

/// How [`impute_missing`] fills gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Carry the last observation forward; leading gaps take the first one.
    ForwardFill,
    /// Straight line between observed neighbours, nearest value at the edges.
    #[default]
    LinearInterpolate,
    /// Keep the longest run of consecutive complete periods (latest on ties).
    DropPeriod,
}

/// Fill every gap so the panel becomes complete.
pub fn impute_missing(panel: &PanelDataset, policy: MissingPolicy) -> Result<PanelDataset, PanelError> {
    let (ne, nt, nv) = panel.shape();
    for e in 0..ne {
        for v in 0..nv {
            if (0..nt).all(|t| panel.value(e, t, v).is_nan()) {
                return Err(PanelError::AllMissingSeries {
                    entity: panel.entities[e].clone(),
                    variable: panel.variables[v].clone(),
                });
            }
        }
    }
    if panel.missing_count() == 0 {
        return Ok(panel.clone());
    }
    match policy {
        MissingPolicy::DropPeriod => {
            let complete: Vec<bool> = (0..nt)
                .map(|t| (0..ne).all(|e| (0..nv).all(|v| !panel.value(e, t, v).is_nan())))
                .collect();
            let mut best: Option<(usize, usize)> = None;
            let mut t = 0;
            while t < nt {
                if complete[t] {
                    let start = t;
                    while t < nt && complete[t] {
                        t += 1;
                    }
                    if best.map_or(true, |(s, e)| t - start >= e - s) {
                        best = Some((start, t));
                    }
                } else {
                    t += 1;
                }
            }
            let (s, e) = best.ok_or(PanelError::UnfillableGap)?;
            let keep: Vec<usize> = (s..e).collect();
            Ok(panel.with_periods(&keep))
        }
        MissingPolicy::ForwardFill | MissingPolicy::LinearInterpolate => {
            let mut out = panel.clone();
            for e in 0..ne {
                for v in 0..nv {
                    let filled = fill_series(&panel.series(e, v), policy);
                    for (t, x) in filled.into_iter().enumerate() {
                        let i = out.idx(e, t, v);
                        out.values[i] = x;
                    }
                }
            }
            Ok(out)
        }
    }
}

fn fill_series(series: &[f64], policy: MissingPolicy) -> Vec<f64> {
    let observed: Vec<usize> = (0..series.len()).filter(|&t| !series[t].is_nan()).collect();
    let first = observed[0];
    let last = *observed.last().unwrap_or(&first);
    let mut out = series.to_vec();
    for t in 0..series.len() {
        if !out[t].is_nan() {
            continue;
        }
        out[t] = if t < first {
            series[first]
        } else if t > last {
            series[last]
        } else {
            let prev = observed.iter().rev().find(|&&o| o < t).copied().unwrap_or(first);
            match policy {
                MissingPolicy::ForwardFill => series[prev],
                _ => {
                    let next = observed.iter().find(|&&o| o > t).copied().unwrap_or(last);
                    let w = (t - prev) as f64 / (next - prev) as f64;
                    series[prev] + w * (series[next] - series[prev])
                }
            }
        };
    }
    out
}

/// z-score with the sample (n − 1) standard deviation.
pub fn standardize_series(values: &[f64]) -> Result<Vec<f64>, PanelError> {
    let (mean, sd) = mean_sd(values)?;
    Ok(values.iter().map(|x| (x - mean) / sd).collect())
}

fn mean_sd(values: &[f64]) -> Result<(f64, f64), PanelError> {
    let n = values.len();
    if n < 2 || values.iter().any(|v| !v.is_finite()) {
        return Err(PanelError::DegenerateSeries);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    // Relative check so that constant large-magnitude series are caught.
    if !(sd > 1e-14 * mean.abs().max(f64::MIN_POSITIVE)) {
        return Err(PanelError::DegenerateSeries);
    }
    Ok((mean, sd))
}

/// Symmetric matrix of pooled Pearson coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub codes: Vec<String>,
    pub values: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.codes.iter().position(|c| c == a)?;
        let j = self.codes.iter().position(|c| c == b)?;
        Some(self.values[(i, j)])
    }
}

/// Pearson correlations pooled over every entity-period row.
pub fn correlation_matrix(panel: &PanelDataset, codes: &[String]) -> Result<CorrelationMatrix, PanelError> {
    let mut centred = Vec::with_capacity(codes.len());
    for code in codes {
        let col = panel.column(code)?;
        if col.iter().any(|v| v.is_nan()) {
            return Err(PanelError::MissingValues(col.iter().filter(|v| v.is_nan()).count()));
        }
        let (mean, _) = mean_sd(&col)?;
        let c: Vec<f64> = col.iter().map(|x| x - mean).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        centred.push(c.into_iter().map(|x| x / norm).collect::<Vec<_>>());
    }
    let k = codes.len();
    let mut values = DMatrix::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let r: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            let r = r.clamp(-1.0, 1.0);
            values[(i, j)] = r;
            values[(j, i)] = r;
        }
    }
    Ok(CorrelationMatrix {
        codes: codes.to_vec(),
        values,
    })
}
