//! Light-curve, periodogram and report files.
//!
//! Light curves are read from delimiter-separated text with columns
//! `time, value[, accuracy]`. Lines starting with `#` are comments and a
//! non-numeric first row is taken as a header. Rows are sorted by time;
//! repeated times are rejected. Files ending in `.json` hold a serialized
//! [`LightCurve`].

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sppgram_core::periodogram::{Detection, Periodogram};
use sppgram_core::power::{PowerReport, RedWhiteReport};
use sppgram_core::LightCurve;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] sppgram_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

/// Column layout of a light-curve text file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub delimiter: u8,
    /// Read the third column as measurement accuracies when present.
    pub accuracies: bool,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self { delimiter: b',', accuracies: true }
    }
}

/// Parses `time, value[, accuracy]` rows.
pub fn parse_lightcurve<R: Read>(source: R, spec: &ColumnSpec) -> Result<LightCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .comment(Some(b'#'))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut rows: Vec<(f64, f64, Option<f64>, u64)> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        let fields: Vec<&str> = record.iter().filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        if rows.is_empty() && width.is_none() && fields[0].parse::<f64>().is_err() {
            // header row
            width = Some(0);
            continue;
        }
        let cols = if spec.accuracies { fields.len().min(3) } else { 2 };
        if fields.len() < 2 {
            return Err(IoError::Parse { line, message: format!("expected at least 2 columns, found {}", fields.len()) });
        }
        match width {
            Some(w) if w != 0 && w != cols => {
                return Err(IoError::Parse { line, message: format!("expected {w} columns like the rows above, found {cols}") });
            }
            _ => width = Some(cols),
        }
        let num = |k: usize| {
            fields[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IoError::Parse { line, message: format!("column {}: '{}' is not a finite number", k + 1, fields[k]) })
        };
        let acc = if cols == 3 { Some(num(2)?) } else { None };
        if let Some(a) = acc {
            if a <= 0.0 {
                return Err(IoError::Parse { line, message: format!("accuracy must be positive, got {a}") });
            }
        }
        rows.push((num(0)?, num(1)?, acc, line));
    }
    if rows.is_empty() {
        return Err(IoError::Parse { line: 0, message: "no data rows".into() });
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(IoError::Parse { line: w[1].3, message: format!("time {} repeats the row on line {}", w[1].0, w[0].3) });
    }
    let times = rows.iter().map(|r| r.0).collect();
    let values = rows.iter().map(|r| r.1).collect();
    let accuracies = rows[0].2.is_some().then(|| rows.iter().map(|r| r.2.unwrap_or(f64::NAN)).collect());
    Ok(LightCurve::new(times, values, accuracies)?)
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads a light curve from a CSV/TSV file or, for `.json`, its serialized form.
pub fn read_lightcurve(path: &Path, spec: &ColumnSpec) -> Result<LightCurve> {
    let file = open(path)?;
    if is_json(path) {
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    } else {
        parse_lightcurve(file, spec)
    }
}

pub fn write_lightcurve_csv<W: Write>(out: W, lc: &LightCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match lc.accuracies() {
        Some(acc) => {
            w.write_record(["time", "value", "accuracy"])?;
            for ((t, v), a) in lc.times().iter().zip(lc.values()).zip(acc) {
                w.write_record([t.to_string(), v.to_string(), a.to_string()])?;
            }
        }
        None => {
            w.write_record(["time", "value"])?;
            for (t, v) in lc.times().iter().zip(lc.values()) {
                w.write_record([t.to_string(), v.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| IoError::Csv(e.into()))?;
    Ok(())
}

/// Plot-ready periodogram rows: `period, statistic, p_value, significant, flag`.
pub fn write_periodogram_csv<W: Write>(out: W, pg: &Periodogram) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["period", "statistic", "p_value", "significant", "flag"])?;
    for e in &pg.entries {
        let flag = e.flag.map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default());
        w.write_record([e.period.to_string(), e.statistic.to_string(), e.p_value.to_string(), e.significant.to_string(), flag.unwrap_or_default()])?;
    }
    w.flush().map_err(|e| IoError::Csv(e.into()))?;
    Ok(())
}

pub fn write_power_csv<W: Write>(out: W, report: &PowerReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["family", "statistic", "objective", "snr", "level", "power", "se", "mean_false_periods", "correct_peak_rate", "reps", "failures"])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in &report.rows {
        w.write_record([
            label(&r.method.family),
            label(&r.method.statistic),
            label(&r.method.objective),
            r.snr.to_string(),
            r.level.to_string(),
            r.power.to_string(),
            r.se.to_string(),
            opt(r.mean_false_periods),
            opt(r.correct_peak_rate),
            r.reps.to_string(),
            r.failures.to_string(),
        ])?;
    }
    w.flush().map_err(|e| IoError::Csv(e.into()))?;
    Ok(())
}

pub fn write_red_white_csv<W: Write>(out: W, report: &RedWhiteReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rho", "family", "correct_peak_rate", "correct_peak_se", "mean_false_periods", "false_periods_se", "true_detection_rate", "reps", "failures"])?;
    for row in &report.rows {
        for (name, s) in [("gpr_red", &row.red), ("gpr", &row.white)] {
            w.write_record([
                row.rho.to_string(),
                name.to_string(),
                s.correct_peak_rate.to_string(),
                s.correct_peak_se.to_string(),
                s.mean_false_periods.to_string(),
                s.false_periods_se.to_string(),
                s.true_detection_rate.to_string(),
                s.reps.to_string(),
                s.failures.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| IoError::Csv(e.into()))?;
    Ok(())
}

/// The serde name of a unit enum variant.
pub fn label<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

/// Periodogram with the detections drawn from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub periodogram: Periodogram,
    pub detection: Detection,
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` next to `path` and renames it into place, so a failed
/// run never leaves a truncated file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let err = |source| IoError::File { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    fs::write(&tmp, contents).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<LightCurve> {
        parse_lightcurve(s.as_bytes(), &ColumnSpec::default())
    }

    #[test]
    fn minimal_input() {
        let lc = parse("0.0,10.0\n1.0,10.5\n2.5,9.8").unwrap();
        assert_eq!(lc.n(), 3);
        assert!(lc.accuracies().is_none());
        assert_eq!(lc.values(), &[10.0, 10.5, 9.8]);
    }

    #[test]
    fn accuracies_comments_and_header() {
        let lc = parse("# survey export\ntime,mag,err\n0.5, 12.1, 0.02\n# gap\n0.1,12.0,0.03\n0.9,12.3,0.01\n").unwrap();
        assert_eq!(lc.times(), &[0.1, 0.5, 0.9]);
        assert_eq!(lc.accuracies().unwrap(), &[0.03, 0.02, 0.01]);
    }

    #[test]
    fn duplicate_times_are_rejected() {
        let err = parse("1.0,5.0\n1.0,6.0\n2.0,1.0").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn malformed_rows_report_their_line() {
        assert!(matches!(parse("0,1\n1,x\n2,3").unwrap_err(), IoError::Parse { line: 2, .. }));
        assert!(matches!(parse("0,1,0.1\n1,2\n2,3,0.1").unwrap_err(), IoError::Parse { line: 2, .. }));
        assert!(matches!(parse("0,1,0.1\n1,2,-0.1\n2,3,0.1").unwrap_err(), IoError::Parse { line: 2, .. }));
        assert!(matches!(parse("0,1\n1,2").unwrap_err(), IoError::Invalid(_)));
    }

    #[test]
    fn tab_delimited_without_accuracies() {
        let spec = ColumnSpec { delimiter: b'\t', accuracies: false };
        let lc = parse_lightcurve("0\t1\t0.5\n1\t2\t0.5\n2\t3\t0.5\n".as_bytes(), &spec).unwrap();
        assert!(lc.accuracies().is_none());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let lc = LightCurve::new(vec![0.1, 1.0 / 3.0, 2.718281828459045], vec![12.345678901234567, -1e-300, 7.0], Some(vec![0.01, 0.2, 3.0]))
            .unwrap();
        let mut buf = Vec::new();
        write_lightcurve_csv(&mut buf, &lc).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), lc);
    }
}
