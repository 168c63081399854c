//! Loading angle series from delimited text and from the NASA POWER daily
//! point API (10 m wind direction, `WD10M`).

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::circular::wrap_angle;
use crate::{Error, Result};

/// Missing-data sentinel used by POWER.
pub const POWER_SENTINEL: f64 = -999.0;

pub const POWER_ENDPOINT: &str = "https://power.larc.nasa.gov/api/temporal/daily/point";

pub const WD10M: &str = "WD10M";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    Degrees,
    Radians,
}

impl AngleUnit {
    pub fn to_radians(self, v: f64) -> f64 {
        match self {
            AngleUnit::Degrees => v.to_radians(),
            AngleUnit::Radians => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub source: String,
    pub count: usize,
    /// Rows dropped as missing or unparseable.
    pub skipped: usize,
}

/// Angles in radians on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSeries {
    pub values: Vec<f64>,
    pub unit_source: AngleUnit,
    pub meta: SeriesMeta,
}

impl AngleSeries {
    fn from_raw(raw: &[f64], unit: AngleUnit, source: String, skipped: usize) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::NoValidRows(source));
        }
        let values: Vec<f64> = raw.iter().map(|v| wrap_angle(unit.to_radians(*v))).collect();
        Ok(Self {
            meta: SeriesMeta { source, count: values.len(), skipped },
            values,
            unit_source: unit,
        })
    }
}

/// Column selector for [`load_angles_file`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSel {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ColumnSel {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSel::Index(i),
            Err(_) => ColumnSel::Name(s.to_string()),
        })
    }
}

impl Default for ColumnSel {
    fn default() -> Self {
        ColumnSel::Index(0)
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn is_missing(v: f64) -> bool {
    !v.is_finite() || v == POWER_SENTINEL
}

/// Parse delimited text. The first non-empty line is treated as a header
/// when its selected field is not numeric; a named column requires one.
pub fn parse_angles(text: &str, column: &ColumnSel, unit: AngleUnit, source: &str) -> Result<AngleSeries> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let Some(first) = lines.peek().copied() else {
        return Err(Error::NoValidRows(source.to_string()));
    };
    let header = split_fields(first);
    let looks_numeric = |f: &str| f.parse::<f64>().is_ok();
    let idx = match column {
        ColumnSel::Name(name) => {
            let i = header
                .iter()
                .position(|h| h.trim_matches('"') == name)
                .ok_or_else(|| Error::ColumnNotFound(name.clone()))?;
            lines.next();
            i
        }
        ColumnSel::Index(i) => {
            if header.len() <= *i {
                return Err(Error::ColumnNotFound(format!("index {i}")));
            }
            if !looks_numeric(header[*i]) {
                lines.next();
            }
            *i
        }
    };
    let mut raw = Vec::new();
    let mut skipped = 0;
    for line in lines {
        match split_fields(line).get(idx).and_then(|f| f.parse::<f64>().ok()) {
            Some(v) if !is_missing(v) => raw.push(v),
            _ => skipped += 1,
        }
    }
    AngleSeries::from_raw(&raw, unit, source.to_string(), skipped)
}

pub fn load_angles_file(path: &Path, column: &ColumnSel, unit: AngleUnit) -> Result<AngleSeries> {
    let text = fs::read_to_string(path)?;
    parse_angles(&text, column, unit, &path.display().to_string())
}

/// Write a one-column file in radians. Values are printed with the shortest
/// representation that parses back to the same `f64`.
pub fn write_angles_file(path: &Path, series: &AngleSeries) -> Result<()> {
    let mut out = String::with_capacity(series.values.len() * 20 + 8);
    out.push_str("theta\n");
    for v in &series.values {
        out.push_str(&format!("{v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Query for the POWER daily point endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerQuery {
    pub latitude: f64,
    pub longitude: f64,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Keep only days in this calendar month (1–12).
    pub month: Option<u32>,
}

impl PowerQuery {
    pub fn new(latitude: f64, longitude: f64, start: NaiveDate, end: NaiveDate, month: Option<u32>) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::InvalidParameter(format!(
                "coordinates out of range: ({latitude}, {longitude})"
            )));
        }
        if end < start {
            return Err(Error::InvalidParameter(format!("end {end} precedes start {start}")));
        }
        if let Some(m) = month {
            if !(1..=12).contains(&m) {
                return Err(Error::InvalidParameter(format!("month must be 1-12, got {m}")));
            }
        }
        Ok(Self { latitude, longitude, start, end, month })
    }

    pub fn url(&self) -> String {
        format!(
            "{POWER_ENDPOINT}?parameters={WD10M}&community=AG&latitude={}&longitude={}&start={}&end={}&format=JSON",
            self.latitude,
            self.longitude,
            self.start.format("%Y%m%d"),
            self.end.format("%Y%m%d"),
        )
    }

    /// File stem for the cache; the month filter is applied after loading so
    /// it is not part of the key.
    pub fn cache_key(&self) -> String {
        format!(
            "power_{WD10M}_{}_{}_{}_{}",
            self.latitude,
            self.longitude,
            self.start.format("%Y%m%d"),
            self.end.format("%Y%m%d"),
        )
    }
}

/// Parse a date given as `YYYY-MM-DD` or `YYYYMMDD`.
pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y%m%d"))
        .map_err(|e| Error::Parse(format!("bad date '{s}': {e}")))
}

fn excerpt(s: &str) -> String {
    s.chars().take(300).collect()
}

/// Daily `(date, value)` pairs from a POWER JSON body, sentinels included.
pub fn parse_power_json(body: &str) -> Result<Vec<(NaiveDate, f64)>> {
    let v: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| Error::Parse(format!("POWER response is not JSON ({e}): {}", excerpt(body))))?;
    let series = v
        .pointer("/properties/parameter/WD10M")
        .and_then(|s| s.as_object())
        .ok_or_else(|| {
            Error::Parse(format!("POWER response lacks properties.parameter.WD10M: {}", excerpt(body)))
        })?;
    let mut out = Vec::with_capacity(series.len());
    for (k, val) in series {
        let date = NaiveDate::parse_from_str(k, "%Y%m%d")
            .map_err(|e| Error::Parse(format!("bad POWER date key '{k}': {e}")))?;
        let x = val
            .as_f64()
            .ok_or_else(|| Error::Parse(format!("non-numeric POWER value for {k}: {val}")))?;
        out.push((date, x));
    }
    out.sort_by_key(|(d, _)| *d);
    Ok(out)
}

/// Turn daily rows into a series: keep dates inside the query range and
/// month, drop sentinels, convert degrees to radians.
pub fn series_from_daily(rows: &[(NaiveDate, f64)], q: &PowerQuery, source: String) -> Result<AngleSeries> {
    let mut raw = Vec::new();
    let mut skipped = 0;
    for &(d, v) in rows {
        if d < q.start || d > q.end || q.month.is_some_and(|m| d.month() != m) {
            continue;
        }
        if is_missing(v) {
            skipped += 1;
        } else {
            raw.push(v);
        }
    }
    AngleSeries::from_raw(&raw, AngleUnit::Degrees, source, skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheMeta {
    parameter: String,
    latitude: f64,
    longitude: f64,
    start: NaiveDate,
    end: NaiveDate,
    url: String,
    rows: usize,
}

pub fn cache_paths(dir: &Path, q: &PowerQuery) -> (PathBuf, PathBuf) {
    let key = q.cache_key();
    (dir.join(format!("{key}.csv")), dir.join(format!("{key}.json")))
}

fn write_cache(dir: &Path, q: &PowerQuery, rows: &[(NaiveDate, f64)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (csv, meta) = cache_paths(dir, q);
    let mut out = String::from("date,wd10m\n");
    for (d, v) in rows {
        out.push_str(&format!("{},{v}\n", d.format("%Y-%m-%d")));
    }
    fs::write(csv, out)?;
    let m = CacheMeta {
        parameter: WD10M.into(),
        latitude: q.latitude,
        longitude: q.longitude,
        start: q.start,
        end: q.end,
        url: q.url(),
        rows: rows.len(),
    };
    fs::write(meta, serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

fn read_cache(dir: &Path, q: &PowerQuery) -> Result<Option<Vec<(NaiveDate, f64)>>> {
    let (csv, meta) = cache_paths(dir, q);
    if !csv.exists() || !meta.exists() {
        return Ok(None);
    }
    let m: CacheMeta = serde_json::from_str(&fs::read_to_string(&meta)?)?;
    if m.parameter != WD10M || m.latitude != q.latitude || m.longitude != q.longitude || m.start != q.start || m.end != q.end {
        return Ok(None);
    }
    let text = fs::read_to_string(&csv)?;
    let mut rows = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let (d, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad cache line '{line}'")))?;
        let v = v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad cache value '{v}': {e}")))?;
        rows.push((parse_date(d.trim())?, v));
    }
    Ok(Some(rows))
}

/// Options controlling [`fetch_power_wd10m`].
#[derive(Debug, Clone, Default)]
pub struct FetchOptions {
    /// Cache directory; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
    /// Never touch the network. A cache hit still succeeds.
    pub offline: bool,
}

#[cfg(feature = "fetch")]
fn http_get(url: &str) -> Result<String> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(std::time::Duration::from_secs(120)))
        .build()
        .into();
    let mut resp = agent.get(url).call().map_err(|e| Error::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    let body = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| Error::Transport(e.to_string()))?;
    if status != 200 {
        return Err(Error::Http { status, excerpt: excerpt(&body) });
    }
    Ok(body)
}

#[cfg(not(feature = "fetch"))]
fn http_get(_url: &str) -> Result<String> {
    Err(Error::Offline(
        "built without the `fetch` feature; load a local file with load_angles_file instead".into(),
    ))
}

/// Fetch daily `WD10M` for a point, using and refreshing the cache when one
/// is configured.
pub fn fetch_power_wd10m(q: &PowerQuery, opts: &FetchOptions) -> Result<AngleSeries> {
    if let Some(dir) = &opts.cache_dir {
        if let Some(rows) = read_cache(dir, q)? {
            let src = cache_paths(dir, q).0.display().to_string();
            return series_from_daily(&rows, q, src);
        }
    }
    if opts.offline {
        return Err(Error::Offline(
            "offline mode and no cached POWER data; use load_angles_file on a local copy".into(),
        ));
    }
    let url = q.url();
    let rows = parse_power_json(&http_get(&url)?)?;
    if let Some(dir) = &opts.cache_dir {
        write_cache(dir, q, &rows)?;
    }
    series_from_daily(&rows, q, url)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("circtorus-ingest-{}-{name}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    #[test]
    fn single_values_convert_and_wrap() {
        let s = parse_angles("180\n", &ColumnSel::Index(0), AngleUnit::Degrees, "t").unwrap();
        assert_eq!(s.values, vec![PI]);
        let s = parse_angles("450\n", &ColumnSel::Index(0), AngleUnit::Degrees, "t").unwrap();
        assert!((s.values[0] - PI / 2.0).abs() < 1e-15);
        let s = parse_angles("-90\n360\n", &ColumnSel::Index(0), AngleUnit::Degrees, "t").unwrap();
        assert!((s.values[0] - 1.5 * PI).abs() < 1e-15);
        assert_eq!(s.values[1], 0.0);
    }

    #[test]
    fn headers_columns_and_skips() {
        let text = "date,wd10m\n2020-08-01,90\n2020-08-02,-999\n2020-08-03,oops\n2020-08-04,270\n";
        let s = parse_angles(text, &ColumnSel::Name("wd10m".into()), AngleUnit::Degrees, "t").unwrap();
        assert_eq!(s.values.len(), 2);
        assert_eq!(s.meta.skipped, 2);
        assert_eq!(s.meta.count, 2);
        let s = parse_angles(text, &ColumnSel::Index(1), AngleUnit::Degrees, "t").unwrap();
        assert_eq!(s.values.len(), 2);
        let ws = "a b\n1 0.5\n2 1.5\n";
        let s = parse_angles(ws, &ColumnSel::Name("b".into()), AngleUnit::Radians, "t").unwrap();
        assert_eq!(s.values, vec![0.5, 1.5]);
        assert!(matches!(
            parse_angles(text, &ColumnSel::Name("speed".into()), AngleUnit::Degrees, "t"),
            Err(Error::ColumnNotFound(_))
        ));
        assert!(matches!(
            parse_angles("x\nfoo\n", &ColumnSel::Index(0), AngleUnit::Degrees, "t"),
            Err(Error::NoValidRows(_))
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = load_angles_file(Path::new("/nonexistent/angles.csv"), &ColumnSel::Index(0), AngleUnit::Degrees);
        assert!(matches!(e, Err(Error::Io(_))));
    }

    #[test]
    fn write_then_load_is_bit_exact() {
        let dir = tmp("roundtrip");
        let values: Vec<f64> = (0..500).map(|i| wrap_angle(i as f64 * 0.731_234_567_891_234_5)).collect();
        let s = AngleSeries::from_raw(&values, AngleUnit::Radians, "mem".into(), 0).unwrap();
        let p = dir.join("a.csv");
        write_angles_file(&p, &s).unwrap();
        let back = load_angles_file(&p, &ColumnSel::Name("theta".into()), AngleUnit::Radians).unwrap();
        assert_eq!(back.values.len(), s.values.len());
        for (a, b) in back.values.iter().zip(&s.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn url_has_required_parameters() {
        let q = PowerQuery::new(22.57, 88.36, d("1982-01-01"), d("2023-12-31"), Some(8)).unwrap();
        let u = q.url();
        for part in [
            "parameters=WD10M",
            "community=AG",
            "latitude=22.57",
            "longitude=88.36",
            "start=19820101",
            "end=20231231",
            "format=JSON",
        ] {
            assert!(u.contains(part), "{u} lacks {part}");
        }
        assert!(u.starts_with(POWER_ENDPOINT));
    }

    #[test]
    fn query_validation() {
        assert!(PowerQuery::new(22.57, 88.36, d("2023-12-31"), d("1982-01-01"), None).is_err());
        assert!(PowerQuery::new(95.0, 88.36, d("1982-01-01"), d("1983-01-01"), None).is_err());
        assert!(PowerQuery::new(22.57, 88.36, d("1982-01-01"), d("1983-01-01"), Some(13)).is_err());
        assert_eq!(d("19820801"), d("1982-08-01"));
        assert!(parse_date("1982/08/01").is_err());
    }

    const CANNED: &str = r#"{"type":"Feature","geometry":{"type":"Point","coordinates":[88.36,22.57,9.1]},
        "properties":{"parameter":{"WD10M":{"20200731":200.5,"20200801":180.0,"20200802":-999.0,
        "20200803":270.0,"20200901":10.0}}},"header":{"fill_value":-999.0}}"#;

    #[test]
    fn power_json_parsing_and_filtering() {
        let rows = parse_power_json(CANNED).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].0, d("2020-07-31"));
        let q = PowerQuery::new(22.57, 88.36, d("2020-01-01"), d("2020-12-31"), Some(8)).unwrap();
        let s = series_from_daily(&rows, &q, "canned".into()).unwrap();
        assert_eq!(s.values, vec![PI, 1.5 * PI]);
        assert_eq!(s.meta.skipped, 1);
        let q = PowerQuery::new(22.57, 88.36, d("2020-08-02"), d("2020-12-31"), None).unwrap();
        let s = series_from_daily(&rows, &q, "canned".into()).unwrap();
        assert_eq!(s.values.len(), 2);
        assert!(parse_power_json(r#"{"properties":{}}"#).is_err());
        assert!(parse_power_json("<html>busy</html>").is_err());
    }

    #[test]
    fn offline_without_cache_errors() {
        let q = PowerQuery::new(22.57, 88.36, d("2020-01-01"), d("2020-12-31"), Some(8)).unwrap();
        let opts = FetchOptions { cache_dir: Some(tmp("empty-cache")), offline: true };
        let e = fetch_power_wd10m(&q, &opts).unwrap_err();
        assert!(matches!(e, Error::Offline(_)));
        assert!(e.to_string().contains("load_angles_file"));
    }

    #[test]
    fn cache_round_trip_serves_offline() {
        let dir = tmp("cache");
        let q = PowerQuery::new(22.57, 88.36, d("2020-01-01"), d("2020-12-31"), Some(8)).unwrap();
        let rows = parse_power_json(CANNED).unwrap();
        write_cache(&dir, &q, &rows).unwrap();
        let opts = FetchOptions { cache_dir: Some(dir.clone()), offline: true };
        let s = fetch_power_wd10m(&q, &opts).unwrap();
        assert_eq!(s.values, vec![PI, 1.5 * PI]);
        // a different range is a different key
        let other = PowerQuery::new(22.57, 88.36, d("2019-01-01"), d("2020-12-31"), Some(8)).unwrap();
        assert!(fetch_power_wd10m(&other, &opts).is_err());
    }
}
