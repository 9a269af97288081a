//! Line-delimited JSON reading and writing shared by every file format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parses one record per non-blank line. `source` names the input in errors.
pub fn parse<T: DeserializeOwned, R: Read>(reader: R, source: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            context: format!("{source}:{lineno}"),
            message: e.to_string(),
        })?;
        out.push((lineno, record));
    }
    Ok(out)
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse(file, &path.display().to_string())
}

pub fn to_string<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_blank_lines_and_reports_line_numbers() {
        let input = "{\"a\":1}\n\n{\"a\":2}\n{oops}\n";
        let err = parse::<serde_json::Value, _>(input.as_bytes(), "mem").unwrap_err();
        match err {
            Error::Parse { context, .. } => assert_eq!(context, "mem:4"),
            other => panic!("unexpected {other}"),
        }
        let ok = parse::<serde_json::Value, _>("{\"a\":1}\n\n{\"a\":2}\n".as_bytes(), "mem").unwrap();
        assert_eq!(ok.iter().map(|(l, _)| *l).collect::<Vec<_>>(), [1, 3]);
    }
}
