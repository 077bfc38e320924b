use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use kerr_modes::presets::Series;
use serde::Serialize;

use crate::CliError;

pub const OUT_DIR_ENV: &str = "KERR_MODES_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        <Self as ValueEnum>::from_str(s, true).map_err(|_| CliError::Config(format!("unknown output format `{s}`")))
    }

    pub fn extension(&self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Svg => "svg",
        }
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Explicit `--out`, else `$KERR_MODES_OUT_DIR/<name>`, else standard output.
pub fn destination(out: Option<&Path>, name: &str) -> Option<PathBuf> {
    if let Some(p) = out {
        return Some(p.to_path_buf());
    }
    std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(name))
}

/// Directory for multi-file outputs.
pub fn directory(out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn emit(dest: Option<&Path>, text: &str) -> Result<(), CliError> {
    match dest {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            std::fs::write(path, text).map_err(|e| CliError::io(path, e))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Long format: `series,x,y`.
pub fn series_csv(series: &[Series]) -> String {
    csv(
        &["series", "x", "y"],
        series.iter().flat_map(|s| {
            s.x.iter()
                .zip(&s.y)
                .map(move |(x, y)| vec![quote(&s.label), num(*x), num(*y)])
        }),
    )
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(num(0.125), "1.2500000000000000e-1");
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn labels_are_quoted_when_needed() {
        assert_eq!(quote("p=3 dphi=1"), "p=3 dphi=1");
        assert_eq!(quote("a,b"), "\"a,b\"");
    }
}
