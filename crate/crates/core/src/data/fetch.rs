//! Optional remote retrieval of two-column `date,value` series with an
//! on-disk cache.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};

/// FRED's public CSV endpoint.
pub const DEFAULT_BASE_URL: &str = "https://fred.stlouisfed.org/graph/fredgraph.csv";

#[derive(Debug, Clone)]
pub struct FetchOptions {
    /// Series id is appended as `?id=<source_id>`.
    pub base_url: String,
    pub start: Option<String>,
    pub end: Option<String>,
    /// Serve from cache only; never touch the network.
    pub offline: bool,
    pub timeout: Duration,
}

impl Default for FetchOptions {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            start: None,
            end: None,
            offline: false,
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteSeries {
    pub source_id: String,
    /// Date labels as served.
    pub dates: Vec<String>,
    /// `.` and empty cells are NaN.
    pub values: Vec<f64>,
}

/// `<source_id>.csv`, or `<source_id>_<start>_<end>.csv` for a date range.
pub fn cache_path(source_id: &str, cache_dir: &Path, opts: &FetchOptions) -> PathBuf {
    let name = match (&opts.start, &opts.end) {
        (None, None) => format!("{source_id}.csv"),
        (s, e) => format!(
            "{source_id}_{}_{}.csv",
            s.as_deref().unwrap_or("start"),
            e.as_deref().unwrap_or("end")
        ),
    };
    cache_dir.join(name)
}

fn validate_id(source_id: &str) -> Result<()> {
    let ok = !source_id.is_empty()
        && source_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!("invalid series id '{source_id}'")))
    }
}

/// Parses a `date,value` payload with a header row.
pub fn parse_two_column(source_id: &str, payload: &[u8]) -> Result<RemoteSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(payload);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("{source_id}: {e}")))?;
    if headers.len() != 2 {
        return Err(Error::Parse(format!(
            "{source_id}: expected two columns, found {}",
            headers.len()
        )));
    }
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("{source_id}: {e}")))?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!("{source_id}: ragged row")));
        }
        let v = rec[1].trim();
        let value = if v.is_empty() || v == "." {
            f64::NAN
        } else {
            v.parse()
                .map_err(|_| Error::Parse(format!("{source_id}: bad value '{v}'")))?
        };
        dates.push(rec[0].trim().to_string());
        values.push(value);
    }
    Ok(RemoteSeries {
        source_id: source_id.to_string(),
        dates,
        values,
    })
}

fn download(source_id: &str, opts: &FetchOptions) -> Result<Vec<u8>> {
    let mut url = format!("{}?id={source_id}", opts.base_url);
    if let Some(s) = &opts.start {
        url.push_str(&format!("&cosd={s}"));
    }
    if let Some(e) = &opts.end {
        url.push_str(&format!("&coed={e}"));
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(opts.timeout))
        .build()
        .into();
    let mut resp = agent
        .get(&url)
        .call()
        .map_err(|e| Error::Fetch(format!("{source_id}: {e}")))?;
    resp.body_mut()
        .read_to_vec()
        .map_err(|e| Error::Fetch(format!("{source_id}: {e}")))
}

/// Raw cached bytes for `source_id`, downloading on a cache miss.
///
/// The cache file is written to a temporary file in `cache_dir` and renamed
/// into place, so concurrent readers never see a partial payload.
pub fn fetch_remote_bytes(source_id: &str, cache_dir: &Path, opts: &FetchOptions) -> Result<Vec<u8>> {
    validate_id(source_id)?;
    let path = cache_path(source_id, cache_dir, opts);
    if path.exists() {
        return fs::read(&path).map_err(|e| Error::io(&path, e));
    }
    if opts.offline {
        return Err(Error::Fetch(format!(
            "{source_id}: not cached in {} and offline",
            cache_dir.display()
        )));
    }
    let payload = download(source_id, opts)?;
    // Refuse to cache something we cannot parse.
    parse_two_column(source_id, &payload)?;
    fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    tmp.write_all(&payload).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
    Ok(payload)
}

pub fn fetch_remote_series(source_id: &str, cache_dir: &Path, opts: &FetchOptions) -> Result<RemoteSeries> {
    let bytes = fetch_remote_bytes(source_id, cache_dir, opts)?;
    parse_two_column(source_id, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unreachable() -> FetchOptions {
        FetchOptions {
            // Nothing listens on port 9 of the loopback interface.
            base_url: "http://127.0.0.1:9/series".into(),
            timeout: Duration::from_secs(2),
            ..FetchOptions::default()
        }
    }

    #[test]
    fn cached_id_is_served_without_network() {
        let dir = tempfile::tempdir().unwrap();
        let body = b"DATE,JPNRGDPEXP\n2002-01-01,500.1\n2002-04-01,.\n";
        fs::write(dir.path().join("JPNRGDPEXP.csv"), body).unwrap();
        let a = fetch_remote_bytes("JPNRGDPEXP", dir.path(), &unreachable()).unwrap();
        let b = fetch_remote_bytes("JPNRGDPEXP", dir.path(), &unreachable()).unwrap();
        assert_eq!(a, body);
        assert_eq!(a, b);
        let s = fetch_remote_series("JPNRGDPEXP", dir.path(), &unreachable()).unwrap();
        assert_eq!(s.dates.len(), 2);
        assert!(s.values[1].is_nan());
    }

    #[test]
    fn network_failure_without_cache_is_fetch_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = fetch_remote_series("NOSUCHSERIES", dir.path(), &unreachable()).unwrap_err();
        assert!(matches!(err, Error::Fetch(_)), "{err}");
        assert!(!dir.path().join("NOSUCHSERIES.csv").exists());
        let offline = FetchOptions {
            offline: true,
            ..unreachable()
        };
        assert!(matches!(
            fetch_remote_series("X", dir.path(), &offline),
            Err(Error::Fetch(_))
        ));
    }

    #[test]
    fn parser_contract() {
        let s = parse_two_column("eq", b"date,value\n2002-01-01,1.0\n2002-02-01,2.5\n2002-03-01,3\n")
            .unwrap();
        assert_eq!(s.values, vec![1.0, 2.5, 3.0]);
        assert_eq!(s.dates.len(), 3);
        assert!(matches!(
            parse_two_column("eq", b"date,a,b\n1,2,3\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_two_column("eq", b"date,value\n2002-01-01,abc\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn range_changes_cache_key() {
        let opts = FetchOptions {
            start: Some("2002-01-01".into()),
            end: Some("2016-12-31".into()),
            ..FetchOptions::default()
        };
        let p = cache_path("eq", Path::new("/c"), &opts);
        assert_eq!(p, Path::new("/c/eq_2002-01-01_2016-12-31.csv"));
        assert_eq!(cache_path("eq", Path::new("/c"), &FetchOptions::default()), Path::new("/c/eq.csv"));
        assert!(validate_id("../etc").is_err());
    }
}
