//! Sensor and NoC CSV readers/writers, and the synthetic telemetry generator.
//!
//! Sensor CSV: UTF-8, comma separated, one header row whose first column is
//! `timestamp`. Timestamps are integer epoch seconds or ISO-8601 and are
//! normalised to integer epoch seconds. Values that are empty, non-numeric or
//! non-finite are recorded as missing. Lines starting with `#` are comments.
//! The writer emits 17 significant digits (`{:.16e}`) and `NaN` for missing
//! cells.
//!
//! NoC CSV: header `start,end`, one `[start, end)` interval per row.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::SensorFrame;
use crate::fsutil::{fmt_f64, read_to_string, write_atomic};
use crate::matrix::Matrix;
use crate::schedule::NocSchedule;
use crate::seed::RunSeed;

/// Parses integer epoch seconds or an ISO-8601 date-time (UTC when no offset
/// is given). Fractional seconds are truncated toward negative infinity.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::format(path.display(), line, e.to_string())
}

pub fn read_sensor_csv(path: &Path) -> Result<SensorFrame> {
    let text = read_to_string(path)?;
    parse_sensor_csv(&text, path)
}

pub fn parse_sensor_csv(text: &str, path: &Path) -> Result<SensorFrame> {
    let mut rdr = csv_reader(text);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::format(path.display(), 1, "missing header row"));
    }
    if &header[0] != "timestamp" {
        return Err(Error::format(
            path.display(),
            1,
            format!("first column must be `timestamp`, found `{}`", &header[0]),
        ));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let d = names.len();
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let ts = parse_timestamp(&rec[0])
            .ok_or_else(|| Error::format(path.display(), line, format!("unparseable timestamp `{}`", &rec[0])))?;
        if let Some(&prev) = timestamps.last() {
            if ts < prev {
                return Err(Error::format(path.display(), line, "timestamps are not monotone"));
            }
        }
        timestamps.push(ts);
        for cell in rec.iter().skip(1) {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    values.push(v);
                    mask.push(false);
                }
                _ => {
                    values.push(0.0);
                    mask.push(true);
                }
            }
        }
    }
    let n = timestamps.len();
    let m = Matrix::from_vec(n, d, values)?;
    SensorFrame::with_mask(timestamps, names, m, Some(mask))
        .map_err(|e| Error::format(path.display(), 1, e.to_string()))
}

/// Serialises a frame; each entry of `comments` becomes a leading `# ` line.
pub fn sensor_csv_string(frame: &SensorFrame, comments: &[String]) -> Result<String> {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["timestamp".to_string()];
    header.extend(frame.feature_names().iter().cloned());
    w.write_record(&header).map_err(|e| Error::Config(e.to_string()))?;
    let mut rec: Vec<String> = Vec::with_capacity(frame.n_features() + 1);
    for i in 0..frame.n_rows() {
        rec.clear();
        rec.push(frame.timestamps()[i].to_string());
        for j in 0..frame.n_features() {
            if frame.is_missing(i, j) {
                rec.push("NaN".into());
            } else {
                rec.push(fmt_f64(frame.values().get(i, j)));
            }
        }
        w.write_record(&rec).map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    out.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
    Ok(out)
}

pub fn write_sensor_csv(path: &Path, frame: &SensorFrame) -> Result<()> {
    write_atomic(path, sensor_csv_string(frame, &[])?.as_bytes())
}

pub fn read_noc_csv(path: &Path) -> Result<NocSchedule> {
    let text = read_to_string(path)?;
    parse_noc_csv(&text, path)
}

pub fn parse_noc_csv(text: &str, path: &Path) -> Result<NocSchedule> {
    let mut rdr = csv_reader(text);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() != 2 || &header[0] != "start" || &header[1] != "end" {
        return Err(Error::format(path.display(), 1, "expected header `start,end`"));
    }
    let mut intervals = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse = |s: &str| {
            parse_timestamp(s).ok_or_else(|| Error::format(path.display(), line, format!("unparseable time `{s}`")))
        };
        let (s, e) = (parse(&rec[0])?, parse(&rec[1])?);
        if s >= e {
            return Err(Error::format(path.display(), line, format!("start {s} is not before end {e}")));
        }
        intervals.push((s, e));
    }
    NocSchedule::new(intervals)
}

pub fn noc_csv_string(schedule: &NocSchedule) -> String {
    let mut out = String::from("start,end\n");
    for (s, e) in schedule.intervals() {
        out.push_str(&format!("{s},{e}\n"));
    }
    out
}

pub fn write_noc_csv(path: &Path, schedule: &NocSchedule) -> Result<()> {
    write_atomic(path, noc_csv_string(schedule).as_bytes())
}

/// First timestamp of generated telemetry (2024-01-01T00:00:00Z).
pub const SYNTH_EPOCH: i64 = 1_704_067_200;

/// Shape of the synthetic compressor telemetry.
///
/// Informative channels are two fast sinusoids plus Gaussian noise. Inside
/// abnormal window `w` every informative channel `j` is offset by
/// `regime_shift * s_j * (-1)^w`, with `s_j` a random sign per channel, so
/// consecutive fault periods push the machine to opposite sides of its
/// nominal operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_informative: usize,
    pub n_correlated: usize,
    pub n_noise: usize,
    pub abnormal_windows: Vec<(usize, usize)>,
    pub regime_shift: f64,
    pub noise_sigma: f64,
    pub sampling_period_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        // Three windows of 1111 rows: 3333 abnormal rows out of 20000.
        Self {
            n_rows: 20_000,
            n_informative: 6,
            n_correlated: 4,
            n_noise: 4,
            abnormal_windows: vec![(3_000, 4_111), (9_000, 10_111), (15_000, 16_111)],
            regime_shift: 1.5,
            noise_sigma: 0.3,
            sampling_period_s: 60.0,
        }
    }
}

impl SynthConfig {
    /// The default layout scaled to `n_rows` (windows keep their relative
    /// positions and lengths).
    pub fn scaled(n_rows: usize) -> Self {
        let base = Self::default();
        let scale = |r: usize| (r as f64 * n_rows as f64 / base.n_rows as f64).round() as usize;
        Self {
            n_rows,
            abnormal_windows: base.abnormal_windows.iter().map(|&(s, e)| (scale(s), scale(e))).collect(),
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::Parameter("n_rows must be positive".into()));
        }
        if self.n_informative == 0 {
            return Err(Error::Parameter("n_informative must be at least 1".into()));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Parameter("noise_sigma must be positive".into()));
        }
        if !self.regime_shift.is_finite() {
            return Err(Error::Parameter("regime_shift must be finite".into()));
        }
        // Timestamps are whole seconds; a shorter period would collapse rows.
        if !(self.sampling_period_s >= 1.0 && self.sampling_period_s.is_finite()) {
            return Err(Error::Parameter("sampling_period_s must be at least 1 second".into()));
        }
        let mut windows = self.abnormal_windows.clone();
        windows.sort_unstable();
        for &(s, e) in &windows {
            if s >= e || e > self.n_rows {
                return Err(Error::Parameter(format!(
                    "abnormal window [{s}, {e}) must be non-empty and inside [0, {})",
                    self.n_rows
                )));
            }
        }
        if windows.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(Error::Parameter("abnormal windows overlap".into()));
        }
        Ok(())
    }

    /// Per-row flag: inside an abnormal window, and which one.
    fn window_of_rows(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n_rows];
        for (w, &(s, e)) in self.abnormal_windows.iter().enumerate() {
            for slot in &mut out[s..e] {
                *slot = Some(w);
            }
        }
        out
    }

    pub fn timestamp(&self, row: usize) -> i64 {
        SYNTH_EPOCH + (row as f64 * self.sampling_period_s).round() as i64
    }
}

/// Channel name prefixes used by the generator.
pub const INFORMATIVE_PREFIX: &str = "informative_";
pub const CORRELATED_PREFIX: &str = "correlated_";
pub const NOISE_PREFIX: &str = "noise_";

pub fn generate_synthetic(config: &SynthConfig, seed: RunSeed) -> Result<(SensorFrame, NocSchedule)> {
    config.validate()?;
    let n = config.n_rows;
    let windows = config.window_of_rows();
    let d = config.n_informative + config.n_correlated + config.n_noise;
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut names = Vec::with_capacity(d);
    let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| Error::Parameter(e.to_string()))?;

    for j in 0..config.n_informative {
        let mut rng = seed.rng_for("synth.informative", j as u64);
        let p1: f64 = rng.random_range(15.0..60.0);
        let p2: f64 = rng.random_range(4.0..12.0);
        let ph1: f64 = rng.random_range(0.0..2.0 * PI);
        let ph2: f64 = rng.random_range(0.0..2.0 * PI);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let col = (0..n)
            .map(|i| {
                let t = i as f64;
                let base = (2.0 * PI * t / p1 + ph1).sin() + 0.5 * (2.0 * PI * t / p2 + ph2).sin();
                let shift = match windows[i] {
                    Some(w) if w % 2 == 0 => config.regime_shift * sign,
                    Some(_) => -config.regime_shift * sign,
                    None => 0.0,
                };
                base + noise.sample(&mut rng) + shift
            })
            .collect();
        columns.push(col);
        names.push(format!("{INFORMATIVE_PREFIX}{j:02}"));
    }
    for c in 0..config.n_correlated {
        let mut rng = seed.rng_for("synth.correlated", c as u64);
        let parent = c % config.n_informative;
        let slope = rng.random_range(0.8..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let offset = rng.random_range(-2.0..2.0);
        let tiny = Normal::new(0.0, 0.05 * config.noise_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
        let col = columns[parent]
            .iter()
            .map(|&x| slope * x + offset + tiny.sample(&mut rng))
            .collect();
        columns.push(col);
        names.push(format!("{CORRELATED_PREFIX}{c:02}"));
    }
    for k in 0..config.n_noise {
        let mut rng = seed.rng_for("synth.noise", k as u64);
        columns.push((0..n).map(|_| noise.sample(&mut rng)).collect());
        names.push(format!("{NOISE_PREFIX}{k:02}"));
    }

    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        data.extend(columns.iter().map(|c| c[i]));
    }
    let timestamps: Vec<i64> = (0..n).map(|i| config.timestamp(i)).collect();
    let frame = SensorFrame::new(timestamps, names, Matrix::from_vec(n, d, data)?)?;

    // Normal runs of rows, mapped to [ts(first), ts(last + 1)).
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < n {
        if windows[i].is_some() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && windows[i].is_none() {
            i += 1;
        }
        intervals.push((config.timestamp(start), config.timestamp(i)));
    }
    Ok((frame, NocSchedule::new(intervals)?))
}
