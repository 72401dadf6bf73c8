//! Panel datasets: ingestion from long-form CSV, per-feature statistics,
//! sliding (lookback, horizon) windows, and a synthetic generator with
//! planted ground-truth importance.
//!
//! A panel is a rectangular entity x time x feature tensor plus a target
//! series per entity. Timestamps are ISO-8601 days with uniform daily
//! spacing, shared by all entities. All types are immutable after
//! construction.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{s, Array1, Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{rank, RankVector};

/// Entity x time x feature observations plus a per-entity target series.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    entities: Vec<String>,
    timestamps: Vec<NaiveDate>,
    features: Vec<String>,
    /// Shape [entity][time][feature].
    values: Array3<f64>,
    /// Shape [entity][time].
    target: Array2<f64>,
    /// True for features that are constant in time within each entity.
    static_mask: Vec<bool>,
}

impl Panel {
    /// Builds a panel and verifies every invariant: uniform daily spacing,
    /// finite values, unique feature names, and zero within-entity variance
    /// for every static-masked feature.
    pub fn new(
        entities: Vec<String>,
        timestamps: Vec<NaiveDate>,
        features: Vec<String>,
        values: Array3<f64>,
        target: Array2<f64>,
        static_mask: Vec<bool>,
    ) -> Result<Self> {
        let (e, t, k) = (entities.len(), timestamps.len(), features.len());
        if k == 0 {
            return Err(Error::Data("panel needs at least one feature".into()));
        }
        if e == 0 || t == 0 {
            return Err(Error::Data("panel needs at least one entity and one day".into()));
        }
        {
            let mut sorted = features.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != k {
                return Err(Error::Data("feature names must be unique".into()));
            }
        }
        if static_mask.len() != k {
            return Err(Error::Data(format!(
                "static mask length {} != feature count {k}",
                static_mask.len()
            )));
        }
        if values.dim() != (e, t, k) {
            return Err(Error::Data(format!(
                "values shape {:?} != ({e}, {t}, {k})",
                values.dim()
            )));
        }
        if target.dim() != (e, t) {
            return Err(Error::Data(format!(
                "target shape {:?} != ({e}, {t})",
                target.dim()
            )));
        }
        for w in timestamps.windows(2) {
            if w[1] - w[0] != chrono::Duration::days(1) {
                return Err(Error::Data(format!(
                    "non-uniform spacing between {} and {}",
                    w[0], w[1]
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) || target.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("panel contains non-finite values".into()));
        }
        for (f, &is_static) in static_mask.iter().enumerate() {
            if !is_static {
                continue;
            }
            for ei in 0..e {
                let first = values[[ei, 0, f]];
                for ti in 1..t {
                    if values[[ei, ti, f]] != first {
                        return Err(Error::Data(format!(
                            "feature '{}' is marked static but varies within entity '{}'",
                            features[f], entities[ei]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            entities,
            timestamps,
            features,
            values,
            target,
            static_mask,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    /// Number of features `k`.
    pub fn k(&self) -> usize {
        self.features.len()
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    /// Number of time steps `T`.
    pub fn num_times(&self) -> usize {
        self.timestamps.len()
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn target(&self) -> &Array2<f64> {
        &self.target
    }

    pub fn static_mask(&self) -> &[bool] {
        &self.static_mask
    }

    /// Per-feature mean, population standard deviation, min, and max over
    /// all (entity, time) cells.
    pub fn feature_stats(&self) -> FeatureStats {
        let k = self.k();
        let n = (self.num_entities() * self.num_times()) as f64;
        let mut mean = vec![0.0; k];
        let mut std = vec![0.0; k];
        let mut min = vec![f64::INFINITY; k];
        let mut max = vec![f64::NEG_INFINITY; k];
        for f in 0..k {
            let col = self.values.slice(s![.., .., f]);
            let mut sum = 0.0;
            for &v in col.iter() {
                sum += v;
                if v < min[f] {
                    min[f] = v;
                }
                if v > max[f] {
                    max[f] = v;
                }
            }
            // A globally constant feature must report std exactly 0; the
            // two-pass formula can leak rounding noise there.
            if min[f] == max[f] {
                mean[f] = min[f];
                std[f] = 0.0;
                continue;
            }
            mean[f] = sum / n;
            let mut ss = 0.0;
            for &v in col.iter() {
                let d = v - mean[f];
                ss += d * d;
            }
            std[f] = (ss / n).sqrt();
        }
        FeatureStats {
            features: self.features.clone(),
            mean,
            std,
            min,
            max,
        }
    }
}

/// Per-feature summary statistics in feature units (population convention).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub features: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// One sliding-window sample: `lookback` input steps over all features and
/// the following `horizon` target steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub entity: String,
    /// Index of the first input time step within the panel.
    pub start: usize,
    /// Shape [lookback][k].
    pub input: Array2<f64>,
    /// Shape [horizon].
    pub target: Array1<f64>,
}

/// All sliding windows of a panel, ordered by (entity, start).
#[derive(Debug, Clone)]
pub struct WindowSet {
    windows: Vec<Window>,
    lookback: usize,
    horizon: usize,
    k: usize,
}

impl WindowSet {
    /// Assembles a window set from explicit windows, checking that every
    /// input is `[lookback][k]`, every target is `[horizon]`, and all values
    /// are finite.
    pub fn from_windows(
        windows: Vec<Window>,
        lookback: usize,
        horizon: usize,
        k: usize,
    ) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::EmptyWindows("window list is empty".into()));
        }
        for (i, w) in windows.iter().enumerate() {
            if w.input.dim() != (lookback, k) {
                return Err(Error::Data(format!(
                    "window {i}: input shape {:?} != ({lookback}, {k})",
                    w.input.dim()
                )));
            }
            if w.target.len() != horizon {
                return Err(Error::Data(format!(
                    "window {i}: target length {} != horizon {horizon}",
                    w.target.len()
                )));
            }
            if w.input.iter().chain(w.target.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("window {i} contains non-finite values")));
            }
        }
        Ok(Self {
            windows,
            lookback,
            horizon,
            k,
        })
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Population standard deviation of all window targets. Used as the
    /// output scale when normalizing sensitivity indices.
    pub fn target_std(&self) -> f64 {
        let n: usize = self.windows.iter().map(|w| w.target.len()).sum();
        if n == 0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for w in &self.windows {
            for &v in w.target.iter() {
                sum += v;
            }
        }
        let mean = sum / n as f64;
        let mut ss = 0.0;
        for w in &self.windows {
            for &v in w.target.iter() {
                let d = v - mean;
                ss += d * d;
            }
        }
        (ss / n as f64).sqrt()
    }
}

/// Slices a panel into sliding (lookback, horizon) windows. Each entity with
/// `T >= lookback + horizon` days contributes `T - lookback - horizon + 1`
/// windows; an entirely infeasible panel is an error.
pub fn make_windows(panel: &Panel, lookback: usize, horizon: usize) -> Result<WindowSet> {
    if lookback < 1 || horizon < 1 {
        return Err(Error::Config(format!(
            "lookback and horizon must be >= 1, got {lookback} and {horizon}"
        )));
    }
    let t = panel.num_times();
    let mut windows = Vec::new();
    if t >= lookback + horizon {
        let per_entity = t - lookback - horizon + 1;
        for (e, name) in panel.entities().iter().enumerate() {
            for start in 0..per_entity {
                let input = panel
                    .values()
                    .slice(s![e, start..start + lookback, ..])
                    .to_owned();
                let target = panel
                    .target()
                    .slice(s![e, start + lookback..start + lookback + horizon])
                    .to_owned();
                windows.push(Window {
                    entity: name.clone(),
                    start,
                    input,
                    target,
                });
            }
        }
    }
    if windows.is_empty() {
        return Err(Error::EmptyWindows(format!(
            "no entity has lookback + horizon = {} days (panel has {t})",
            lookback + horizon
        )));
    }
    Ok(WindowSet {
        windows,
        lookback,
        horizon,
        k: panel.k(),
    })
}

/// Column mapping and fill policy for the long-form CSV schema
/// (entity, date, target, feature columns; header row required).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub entity_column: String,
    pub date_column: String,
    pub target_column: String,
    pub feature_columns: Vec<String>,
    /// Feature columns expected to be constant in time within each entity.
    #[serde(default)]
    pub static_features: Vec<String>,
    /// Maximum length of a NaN run to forward-fill per entity and column.
    /// 0 rejects any missing value.
    #[serde(default)]
    pub max_fill_gap: usize,
    /// Z-score non-static features per entity over time. Static features are
    /// left untouched: their scale lives across entities, not time.
    #[serde(default)]
    pub normalize_per_entity: bool,
}

impl CsvSchema {
    /// Schema with conventional column names for a `k`-feature panel
    /// (`entity, date, target, f1..fk`), matching [`write_panel_csv`].
    pub fn default_for_k(k: usize) -> Self {
        Self {
            entity_column: "entity".into(),
            date_column: "date".into(),
            target_column: "target".into(),
            feature_columns: (1..=k).map(|i| format!("f{i}")).collect(),
            static_features: Vec::new(),
            max_fill_gap: 0,
            normalize_per_entity: false,
        }
    }
}

fn parse_cell(raw: &str, row: usize, col: &str) -> Result<f64> {
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    trimmed.parse::<f64>().map_err(|_| {
        Error::Data(format!("row {row}: cannot parse '{raw}' in column '{col}'"))
    })
}

/// Forward-fills NaN runs of length <= `max_gap` in place. Longer runs, or
/// NaNs with no preceding value, are data errors.
fn forward_fill(series: &mut [f64], max_gap: usize, context: &str) -> Result<()> {
    let mut i = 0;
    while i < series.len() {
        if series[i].is_nan() {
            let run_start = i;
            while i < series.len() && series[i].is_nan() {
                i += 1;
            }
            let run = i - run_start;
            if run_start == 0 {
                return Err(Error::Data(format!(
                    "{context}: missing value at the start of the series cannot be filled"
                )));
            }
            if run > max_gap {
                return Err(Error::Data(format!(
                    "{context}: {run} consecutive missing values exceed max fill gap {max_gap}"
                )));
            }
            let fill = series[run_start - 1];
            for v in &mut series[run_start..run_start + run] {
                *v = fill;
            }
        } else {
            i += 1;
        }
    }
    Ok(())
}

/// Loads a panel from a long-form CSV file. Rows are sorted by
/// (entity, date); all entities must cover the same uniformly spaced daily
/// range, and declared static features are verified.
pub fn load_panel(path: &Path, schema: &CsvSchema) -> Result<Panel> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}' in {}", path.display())))
    };
    let entity_idx = col_index(&schema.entity_column)?;
    let date_idx = col_index(&schema.date_column)?;
    let target_idx = col_index(&schema.target_column)?;
    let feature_idx: Vec<usize> = schema
        .feature_columns
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_>>()?;
    for sf in &schema.static_features {
        if !schema.feature_columns.contains(sf) {
            return Err(Error::Schema(format!(
                "static feature '{sf}' is not one of the declared feature columns"
            )));
        }
    }

    struct Row {
        date: NaiveDate,
        target: f64,
        features: Vec<f64>,
    }
    let mut by_entity: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for (ri, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = ri + 2; // 1-based, after the header
        let entity = record
            .get(entity_idx)
            .ok_or_else(|| Error::Data(format!("row {row_no}: too few columns")))?
            .to_string();
        let date_raw = record
            .get(date_idx)
            .ok_or_else(|| Error::Data(format!("row {row_no}: too few columns")))?;
        let date = NaiveDate::parse_from_str(date_raw.trim(), "%Y-%m-%d").map_err(|_| {
            Error::Data(format!("row {row_no}: invalid ISO-8601 date '{date_raw}'"))
        })?;
        let target = parse_cell(
            record.get(target_idx).unwrap_or(""),
            row_no,
            &schema.target_column,
        )?;
        let features = feature_idx
            .iter()
            .zip(&schema.feature_columns)
            .map(|(&idx, name)| parse_cell(record.get(idx).unwrap_or(""), row_no, name))
            .collect::<Result<Vec<f64>>>()?;
        by_entity.entry(entity).or_default().push(Row {
            date,
            target,
            features,
        });
    }
    if by_entity.is_empty() {
        return Err(Error::Data(format!("{} contains no data rows", path.display())));
    }

    let entities: Vec<String> = by_entity.keys().cloned().collect();
    let mut timestamps: Option<Vec<NaiveDate>> = None;
    for (entity, rows) in by_entity.iter_mut() {
        rows.sort_by_key(|r| r.date);
        for w in rows.windows(2) {
            if w[1].date == w[0].date {
                return Err(Error::Data(format!(
                    "duplicate date {} for entity '{entity}'",
                    w[0].date
                )));
            }
            if w[1].date - w[0].date != chrono::Duration::days(1) {
                return Err(Error::Data(format!(
                    "non-uniform spacing between {} and {} for entity '{entity}'",
                    w[0].date, w[1].date
                )));
            }
        }
        let dates: Vec<NaiveDate> = rows.iter().map(|r| r.date).collect();
        match &timestamps {
            None => timestamps = Some(dates),
            Some(expected) => {
                if expected != &dates {
                    return Err(Error::Data(format!(
                        "entity '{entity}' covers a different date range than the first entity"
                    )));
                }
            }
        }
    }
    let timestamps = timestamps.unwrap();
    let (e, t, k) = (entities.len(), timestamps.len(), schema.feature_columns.len());

    let mut values = Array3::<f64>::zeros((e, t, k));
    let mut target = Array2::<f64>::zeros((e, t));
    for (ei, entity) in entities.iter().enumerate() {
        let rows = &by_entity[entity];
        let mut series = vec![0.0; t];
        for (ti, row) in rows.iter().enumerate() {
            series[ti] = row.target;
        }
        forward_fill(
            &mut series,
            schema.max_fill_gap,
            &format!("entity '{entity}' target"),
        )?;
        for ti in 0..t {
            target[[ei, ti]] = series[ti];
        }
        for f in 0..k {
            for (ti, row) in rows.iter().enumerate() {
                series[ti] = row.features[f];
            }
            forward_fill(
                &mut series,
                schema.max_fill_gap,
                &format!("entity '{entity}' feature '{}'", schema.feature_columns[f]),
            )?;
            for ti in 0..t {
                values[[ei, ti, f]] = series[ti];
            }
        }
    }

    let static_mask: Vec<bool> = schema
        .feature_columns
        .iter()
        .map(|c| schema.static_features.contains(c))
        .collect();

    if schema.normalize_per_entity {
        for f in 0..k {
            if static_mask[f] {
                continue;
            }
            for ei in 0..e {
                let mut sum = 0.0;
                for ti in 0..t {
                    sum += values[[ei, ti, f]];
                }
                let mean = sum / t as f64;
                let mut ss = 0.0;
                for ti in 0..t {
                    let d = values[[ei, ti, f]] - mean;
                    ss += d * d;
                }
                let std = (ss / t as f64).sqrt();
                for ti in 0..t {
                    let centered = values[[ei, ti, f]] - mean;
                    values[[ei, ti, f]] = if std > 0.0 { centered / std } else { centered };
                }
            }
        }
    }

    Panel::new(
        entities,
        timestamps,
        schema.feature_columns.clone(),
        values,
        target,
        static_mask,
    )
}

/// Writes a panel in the long-form CSV schema
/// (`entity,date,target,<features...>`). Floats are printed in shortest
/// round-trip form, so a written panel reloads bitwise-equal.
pub fn write_panel_csv(panel: &Panel, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("entity,date,target");
    for f in panel.features() {
        out.push(',');
        out.push_str(f);
    }
    out.push('\n');
    for (ei, entity) in panel.entities().iter().enumerate() {
        for (ti, date) in panel.timestamps().iter().enumerate() {
            let _ = write!(out, "{entity},{date},{}", panel.target()[[ei, ti]]);
            for f in 0..panel.k() {
                let _ = write!(out, ",{}", panel.values()[[ei, ti, f]]);
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Where a ground-truth ranking came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthSource {
    PlantedWeights,
    ExternalFile,
}

/// Reference importance ordering of the panel's features.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRanking {
    pub features: Vec<String>,
    pub ranks: RankVector,
    pub source: TruthSource,
}

#[derive(Serialize, Deserialize)]
struct TruthFile {
    features: Vec<String>,
    ranks: Vec<f64>,
}

impl GroundTruthRanking {
    /// Serializes as `{"features": [...], "ranks": [...]}`.
    pub fn to_json(&self) -> Result<String> {
        let file = TruthFile {
            features: self.features.clone(),
            ranks: self.ranks.ranks().to_vec(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Loads and validates a ground-truth file. `invert` flips the ranking
    /// for sources whose convention is opposite to "rank 1 = most important".
    pub fn load(path: &Path, invert: bool) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let file: TruthFile = serde_json::from_str(&raw)?;
        if file.features.len() != file.ranks.len() {
            return Err(Error::Input(format!(
                "ground truth file {}: {} features but {} ranks",
                path.display(),
                file.features.len(),
                file.ranks.len()
            )));
        }
        let ranks = RankVector::new(file.ranks)?;
        Ok(Self {
            features: file.features,
            ranks: if invert { ranks.inverted() } else { ranks },
            source: TruthSource::ExternalFile,
        })
    }
}

/// Configuration for the synthetic panel generator.
///
/// Features are i.i.d. standard normal per (entity, time) except the first
/// `static_count` features, which are drawn once per entity and repeated
/// across time. The target is the weighted feature sum plus Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub entities: usize,
    pub days: usize,
    pub k: usize,
    pub weights: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
    /// Number of leading features that are static per entity.
    pub static_count: usize,
}

/// Generates a synthetic panel and the ground-truth ranking planted by the
/// generator weights (|weight| descending, average ranks on ties). A fixed
/// (config, seed) pair reproduces the panel bit for bit.
pub fn synth_generate(config: &SynthConfig) -> Result<(Panel, GroundTruthRanking)> {
    if config.k < 2 {
        return Err(Error::Config(format!(
            "synthetic panels need k >= 2 features, got {}",
            config.k
        )));
    }
    if config.weights.len() != config.k {
        return Err(Error::Config(format!(
            "{} weights for k = {} features",
            config.weights.len(),
            config.k
        )));
    }
    if config.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Config("weights must be finite".into()));
    }
    if !config.noise_sd.is_finite() || config.noise_sd < 0.0 {
        return Err(Error::Config(format!(
            "noise_sd must be a finite non-negative number, got {}",
            config.noise_sd
        )));
    }
    if config.entities == 0 || config.days == 0 {
        return Err(Error::Config("entities and days must be >= 1".into()));
    }
    if config.static_count > config.k {
        return Err(Error::Config(format!(
            "static_count {} exceeds k = {}",
            config.static_count, config.k
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = StandardNormal;
    let (e, t, k) = (config.entities, config.days, config.k);
    let mut values = Array3::<f64>::zeros((e, t, k));
    let mut target = Array2::<f64>::zeros((e, t));
    // Draw order is entity-major and fixed: static values first, then the
    // dynamic grid, then noise. Changing it would change generated bytes.
    for ei in 0..e {
        let static_vals: Vec<f64> = (0..config.static_count)
            .map(|_| normal.sample(&mut rng))
            .collect();
        for ti in 0..t {
            for f in 0..k {
                values[[ei, ti, f]] = if f < config.static_count {
                    static_vals[f]
                } else {
                    normal.sample(&mut rng)
                };
            }
        }
        for ti in 0..t {
            let noise: f64 = normal.sample(&mut rng);
            let mut y = 0.0;
            for f in 0..k {
                y += config.weights[f] * values[[ei, ti, f]];
            }
            target[[ei, ti]] = y + config.noise_sd * noise;
        }
    }

    let width = (e.max(2) - 1).to_string().len();
    let entities: Vec<String> = (0..e).map(|i| format!("e{i:0width$}")).collect();
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let timestamps: Vec<NaiveDate> = (0..t as i64)
        .map(|d| start + chrono::Duration::days(d))
        .collect();
    let features: Vec<String> = (1..=k).map(|i| format!("f{i}")).collect();
    let static_mask: Vec<bool> = (0..k).map(|f| f < config.static_count).collect();

    let abs_weights: Vec<f64> = config.weights.iter().map(|w| w.abs()).collect();
    let truth = GroundTruthRanking {
        features: features.clone(),
        ranks: rank(&abs_weights)?,
        source: TruthSource::PlantedWeights,
    };
    let panel = Panel::new(entities, timestamps, features, values, target, static_mask)?;
    Ok((panel, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_schema(k: usize) -> CsvSchema {
        CsvSchema::default_for_k(k)
    }

    fn write_csv(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn load_two_entities_three_days() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "p.csv",
            "entity,date,target,f1,f2\n\
             a,2020-03-01,1.0,0.1,0.2\n\
             a,2020-03-02,2.0,0.3,0.4\n\
             a,2020-03-03,3.0,0.5,0.6\n\
             b,2020-03-01,4.0,0.7,0.8\n\
             b,2020-03-02,5.0,0.9,1.0\n\
             b,2020-03-03,6.0,1.1,1.2\n",
        );
        let panel = load_panel(&path, &small_schema(2)).unwrap();
        assert_eq!(panel.values().dim(), (2, 3, 2));
        assert_eq!(panel.entities(), &["a".to_string(), "b".to_string()]);
        assert_eq!(panel.target()[[1, 2]], 6.0);
    }

    #[test]
    fn load_rejects_date_gap() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "gap.csv",
            "entity,date,target,f1,f2\n\
             a,2020-03-04,1.0,0.1,0.2\n\
             a,2020-03-06,2.0,0.3,0.4\n",
        );
        let err = load_panel(&path, &small_schema(2)).unwrap_err();
        assert!(err.to_string().contains("non-uniform spacing"), "{err}");
    }

    #[test]
    fn load_rejects_missing_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(&dir, "m.csv", "entity,date,target,f1\na,2020-01-01,1.0,0.5\n");
        let err = load_panel(&path, &small_schema(2)).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
        assert!(err.to_string().contains("f2"));
    }

    #[test]
    fn load_county_scale_shape() {
        // 3,142 entities x 3 days x 8 features.
        let mut csv = String::from("entity,date,target,f1,f2,f3,f4,f5,f6,f7,f8\n");
        for e in 0..3142 {
            for d in 1..=3 {
                csv.push_str(&format!(
                    "c{e:04},2020-03-0{d},1.0,1,2,3,4,5,6,7,8\n"
                ));
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(&dir, "county.csv", &csv);
        let panel = load_panel(&path, &small_schema(8)).unwrap();
        assert_eq!(panel.k(), 8);
        assert_eq!(panel.num_entities(), 3142);
    }

    #[test]
    fn forward_fill_respects_max_gap() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "nan.csv",
            "entity,date,target,f1,f2\n\
             a,2020-03-01,1.0,0.5,1.0\n\
             a,2020-03-02,2.0,,1.0\n\
             a,2020-03-03,3.0,0.7,1.0\n",
        );
        // Default policy (gap 0) rejects.
        let err = load_panel(&path, &small_schema(2)).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
        // Gap 1 forward-fills from the previous day.
        let mut schema = small_schema(2);
        schema.max_fill_gap = 1;
        let panel = load_panel(&path, &schema).unwrap();
        assert_eq!(panel.values()[[0, 1, 0]], 0.5);
    }

    #[test]
    fn static_declaration_is_verified() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "static.csv",
            "entity,date,target,f1,f2\n\
             a,2020-03-01,1.0,0.5,1.0\n\
             a,2020-03-02,2.0,0.6,1.0\n",
        );
        let mut schema = small_schema(2);
        schema.static_features = vec!["f1".into()];
        let err = load_panel(&path, &schema).unwrap_err();
        assert!(err.to_string().contains("static"), "{err}");
        schema.static_features = vec!["f2".into()];
        let panel = load_panel(&path, &schema).unwrap();
        assert_eq!(panel.static_mask(), &[false, true]);
    }

    #[test]
    fn stats_constant_feature() {
        let (panel, _) = synth_generate(&SynthConfig {
            entities: 2,
            days: 3,
            k: 2,
            weights: vec![1.0, 1.0],
            noise_sd: 0.0,
            seed: 1,
            static_count: 0,
        })
        .unwrap();
        // Overwrite through a rebuilt panel: constant feature column.
        let mut values = panel.values().clone();
        for e in 0..2 {
            for t in 0..3 {
                values[[e, t, 0]] = 5.0;
            }
        }
        let panel = Panel::new(
            panel.entities().to_vec(),
            panel.timestamps().to_vec(),
            panel.features().to_vec(),
            values,
            panel.target().clone(),
            panel.static_mask().to_vec(),
        )
        .unwrap();
        let stats = panel.feature_stats();
        assert_eq!(stats.mean[0], 5.0);
        assert_eq!(stats.std[0], 0.0);
        assert_eq!(stats.min[0], 5.0);
        assert_eq!(stats.max[0], 5.0);
    }

    #[test]
    fn stats_simple_column() {
        // One entity, feature values {1, 2, 3}: mean 2, min 1, max 3,
        // population std sqrt(2/3).
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "s.csv",
            "entity,date,target,f1,f2\n\
             a,2020-01-01,0,1,9\n\
             a,2020-01-02,0,2,9\n\
             a,2020-01-03,0,3,9\n",
        );
        let panel = load_panel(&path, &small_schema(2)).unwrap();
        let stats = panel.feature_stats();
        assert_eq!(stats.mean[0], 2.0);
        assert_eq!(stats.min[0], 1.0);
        assert_eq!(stats.max[0], 3.0);
        let oracle = (2.0f64 / 3.0).sqrt();
        assert!((stats.std[0] - oracle).abs() < 1e-15);
        assert!((stats.std[0] - 0.8165).abs() < 1e-4);
    }

    #[test]
    fn window_counts_match_geometry() {
        let config = SynthConfig {
            entities: 2,
            days: 30,
            k: 2,
            weights: vec![1.0, -1.0],
            noise_sd: 0.0,
            seed: 3,
            static_count: 0,
        };
        let (panel, _) = synth_generate(&config).unwrap();
        let ws = make_windows(&panel, 13, 15).unwrap();
        assert_eq!(ws.len(), 2 * 3);

        let (panel28, _) = synth_generate(&SynthConfig { days: 28, ..config.clone() }).unwrap();
        assert_eq!(make_windows(&panel28, 13, 15).unwrap().len(), 2);

        let (panel27, _) = synth_generate(&SynthConfig { days: 27, ..config }).unwrap();
        assert!(matches!(
            make_windows(&panel27, 13, 15),
            Err(Error::EmptyWindows(_))
        ));
    }

    #[test]
    fn window_slices_match_panel() {
        let (panel, _) = synth_generate(&SynthConfig {
            entities: 2,
            days: 10,
            k: 3,
            weights: vec![1.0, 2.0, 3.0],
            noise_sd: 0.1,
            seed: 4,
            static_count: 1,
        })
        .unwrap();
        let ws = make_windows(&panel, 4, 2).unwrap();
        assert_eq!(ws.len(), 2 * 5);
        for (wi, w) in ws.windows().iter().enumerate() {
            let e = wi / 5;
            assert_eq!(w.start, wi % 5);
            for t in 0..4 {
                for f in 0..3 {
                    assert_eq!(w.input[[t, f]], panel.values()[[e, w.start + t, f]]);
                }
            }
            for h in 0..2 {
                assert_eq!(w.target[h], panel.target()[[e, w.start + 4 + h]]);
            }
        }
    }

    #[test]
    fn synth_truth_orderings() {
        let mk = |weights: Vec<f64>| {
            let k = weights.len();
            synth_generate(&SynthConfig {
                entities: 2,
                days: 4,
                k,
                weights,
                noise_sd: 0.0,
                seed: 5,
                static_count: 0,
            })
            .unwrap()
            .1
        };
        assert_eq!(mk(vec![4.0, 2.0, 1.0]).ranks.ranks(), &[1.0, 2.0, 3.0]);
        assert_eq!(mk(vec![1.0, -5.0]).ranks.ranks(), &[2.0, 1.0]);
        assert_eq!(mk(vec![3.0, 3.0, 1.0]).ranks.ranks(), &[1.5, 1.5, 3.0]);
    }

    #[test]
    fn synth_is_deterministic() {
        let config = SynthConfig {
            entities: 3,
            days: 20,
            k: 4,
            weights: vec![4.0, 3.0, 2.0, 1.0],
            noise_sd: 0.5,
            seed: 42,
            static_count: 2,
        };
        let (p1, t1) = synth_generate(&config).unwrap();
        let (p2, t2) = synth_generate(&config).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(t1, t2);
        // Static features constant within entity by construction.
        for e in 0..3 {
            for t in 1..20 {
                assert_eq!(p1.values()[[e, t, 0]], p1.values()[[e, 0, 0]]);
                assert_eq!(p1.values()[[e, t, 1]], p1.values()[[e, 0, 1]]);
                assert_ne!(p1.values()[[e, t, 3]], p1.values()[[e, 0, 2]]);
            }
        }
    }

    #[test]
    fn synth_rejects_small_k() {
        let err = synth_generate(&SynthConfig {
            entities: 2,
            days: 4,
            k: 1,
            weights: vec![1.0],
            noise_sd: 0.0,
            seed: 0,
            static_count: 0,
        })
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let (panel, _) = synth_generate(&SynthConfig {
            entities: 4,
            days: 15,
            k: 3,
            weights: vec![2.0, -1.0, 0.5],
            noise_sd: 0.3,
            seed: 9,
            static_count: 1,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round.csv");
        write_panel_csv(&panel, &path).unwrap();
        let mut schema = small_schema(3);
        schema.static_features = vec!["f1".into()];
        let reloaded = load_panel(&path, &schema).unwrap();
        assert_eq!(panel.values(), reloaded.values());
        assert_eq!(panel.target(), reloaded.target());
        assert_eq!(panel.timestamps(), reloaded.timestamps());
    }

    #[test]
    fn truth_file_round_trip_and_invert() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.json");
        let truth = GroundTruthRanking {
            features: vec!["f1".into(), "f2".into(), "f3".into()],
            ranks: RankVector::new(vec![2.0, 1.0, 3.0]).unwrap(),
            source: TruthSource::PlantedWeights,
        };
        truth.save(&path).unwrap();
        let loaded = GroundTruthRanking::load(&path, false).unwrap();
        assert_eq!(loaded.ranks, truth.ranks);
        assert_eq!(loaded.source, TruthSource::ExternalFile);
        let inverted = GroundTruthRanking::load(&path, true).unwrap();
        assert_eq!(inverted.ranks.ranks(), &[2.0, 3.0, 1.0]);
    }

    proptest! {
        /// Every feasible start index appears exactly once per entity.
        #[test]
        fn prop_window_coverage(
            days in 5usize..40,
            lookback in 1usize..6,
            horizon in 1usize..6,
        ) {
            let config = SynthConfig {
                entities: 2,
                days,
                k: 2,
                weights: vec![1.0, 1.0],
                noise_sd: 0.0,
                seed: 7,
                static_count: 0,
            };
            let (panel, _) = synth_generate(&config).unwrap();
            match make_windows(&panel, lookback, horizon) {
                Ok(ws) => {
                    let expected = days as i64 - lookback as i64 - horizon as i64 + 1;
                    prop_assert!(expected > 0);
                    prop_assert_eq!(ws.len() as i64, 2 * expected);
                    for e in 0..2usize {
                        let starts: Vec<usize> = ws.windows()
                            .iter()
                            .filter(|w| w.entity == panel.entities()[e])
                            .map(|w| w.start)
                            .collect();
                        let want: Vec<usize> = (0..expected as usize).collect();
                        prop_assert_eq!(starts, want);
                    }
                }
                Err(Error::EmptyWindows(_)) => {
                    prop_assert!(days < lookback + horizon);
                }
                Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
            }
        }
    }
}
