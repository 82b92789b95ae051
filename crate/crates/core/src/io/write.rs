use std::fs;
use std::io::{BufWriter, Write};
use std::os::unix::fs::PermissionsExt;
use std::path::Path;

use crate::error::{Error, Result};

/// 17 significant digits, enough to read back the same `f64`.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NA".to_string()
    } else if x > 0.0 {
        "Inf".to_string()
    } else {
        "-Inf".to_string()
    }
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), format_real)
}

/// Inverse of [`format_real`]; `NA` reads as NaN.
pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "NA" => Some(f64::NAN),
        "Inf" => Some(f64::INFINITY),
        "-Inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

/// Write through a temporary file in the target directory and rename it
/// into place. An existing target is an error unless `overwrite` is set.
pub fn write_atomic<F>(path: &Path, overwrite: bool, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    if path.exists() && !overwrite {
        return Err(Error::Exists(path.to_path_buf()));
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tempfile::Builder::new()
        .permissions(fs::Permissions::from_mode(0o644))
        .tempfile_in(dir)
        .map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{}: {other:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_round_trip() {
        for x in [
            0.1f64,
            -1.0 / 3.0,
            1e-300,
            123456.789,
            f64::MIN_POSITIVE,
            0.0,
        ] {
            assert_eq!(parse_real(&format_real(x)).unwrap().to_bits(), x.to_bits());
        }
        assert!(parse_real(&format_opt(None)).unwrap().is_nan());
    }

    #[test]
    fn refuses_overwrite_without_flag() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, false, |w| {
            w.write_all(b"one").unwrap();
            Ok(())
        })
        .unwrap();
        assert!(matches!(
            write_atomic(&p, false, |w| {
                w.write_all(b"two").unwrap();
                Ok(())
            }),
            Err(Error::Exists(_))
        ));
        assert_eq!(fs::read_to_string(&p).unwrap(), "one");
        write_atomic(&p, true, |w| {
            w.write_all(b"two").unwrap();
            Ok(())
        })
        .unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
    }
}
