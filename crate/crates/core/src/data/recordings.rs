//! Canonical recording text format and the recording → viewed-item map.
//!
//! A recordings file is a sequence of records. Each record is a header
//! line `M N label recording_id` followed by `M` lines of `N`
//! space-separated floats. The viewed-item map is `recording_id<TAB>item_id`
//! per line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::catalog::ItemId;
use crate::error::{QuarkError, Result};
use crate::numerics::Matrix;
use crate::preprocess::{EegRecording, Label};

pub fn write_record(out: &mut String, rec: &EegRecording) {
    let (m, n) = rec.signal.dim();
    let _ = writeln!(out, "{m} {n} {} {}", rec.label, rec.recording_id);
    for row in rec.signal.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
}

pub fn to_text(recordings: &[EegRecording]) -> String {
    let mut out = String::new();
    for rec in recordings {
        write_record(&mut out, rec);
    }
    out
}

pub fn parse_recordings(text: &str) -> Result<Vec<EegRecording>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut out = Vec::new();
    while let Some((n, header)) = lines.next() {
        let line = n + 1;
        let perr = |line: usize, message: String| QuarkError::Parse { line, message };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(perr(line, "expected header `M N label recording_id`".into()));
        }
        let m: usize = fields[0].parse().map_err(|_| perr(line, format!("bad electrode count {:?}", fields[0])))?;
        let cols: usize = fields[1].parse().map_err(|_| perr(line, format!("bad sample count {:?}", fields[1])))?;
        let label: Label = fields[2].parse().map_err(|_| perr(line, format!("bad label {:?}", fields[2])))?;
        let id = fields[3].to_string();
        let mut data = Vec::with_capacity(m * cols);
        for r in 0..m {
            let Some((k, row)) = lines.next() else {
                return Err(perr(line, format!("record {id} ends after {r} of {m} rows")));
            };
            let before = data.len();
            for v in row.split_whitespace() {
                data.push(v.parse::<f64>().map_err(|_| perr(k + 1, format!("bad value {v:?}")))?);
            }
            if data.len() - before != cols {
                return Err(perr(k + 1, format!("expected {cols} values, found {}", data.len() - before)));
            }
        }
        let signal = Matrix::from_shape_vec((m, cols), data).expect("row lengths checked");
        out.push(EegRecording::new(signal, label, id).map_err(|e| perr(line, e.to_string()))?);
    }
    Ok(out)
}

pub fn read_recordings(path: &Path) -> Result<Vec<EegRecording>> {
    let text = fs::read_to_string(path).map_err(|e| QuarkError::io(path, e))?;
    parse_recordings(&text)
}

pub fn write_recordings(path: &Path, recordings: &[EegRecording]) -> Result<()> {
    fs::write(path, to_text(recordings)).map_err(|e| QuarkError::io(path, e))
}

pub type ViewedItems = BTreeMap<String, ItemId>;

pub fn parse_viewed(text: &str) -> Result<ViewedItems> {
    let mut map = ViewedItems::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (rec, item) = line.split_once('\t').ok_or_else(|| QuarkError::Parse {
            line: n + 1,
            message: "expected recording_id<TAB>item_id".into(),
        })?;
        let item: ItemId = item.trim().parse().map_err(|_| QuarkError::Parse {
            line: n + 1,
            message: format!("bad item id {item:?}"),
        })?;
        map.insert(rec.to_string(), item);
    }
    Ok(map)
}

pub fn viewed_to_text(map: &ViewedItems) -> String {
    map.iter().map(|(r, i)| format!("{r}\t{i}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> Vec<EegRecording> {
        vec![
            EegRecording::new(array![[0.1, -2.0, 3.5], [1e-9, 4.0, -0.0]], Label(3), "e1").unwrap(),
            EegRecording::new(array![[7.0]], Label(-1), "e2").unwrap(),
        ]
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let text = to_text(&sample());
        let parsed = parse_recordings(&text).unwrap();
        assert_eq!(parsed, sample());
        assert_eq!(to_text(&parsed), text);
    }

    #[test]
    fn short_row_names_line() {
        let err = parse_recordings("1 3 0 r\n1 2\n").unwrap_err();
        assert!(matches!(err, QuarkError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn truncated_record_rejected() {
        assert!(parse_recordings("2 1 0 r\n1\n").is_err());
    }

    #[test]
    fn viewed_round_trip() {
        let map = parse_viewed("a\t1\nb\t22\n").unwrap();
        assert_eq!(map["b"], 22);
        assert_eq!(parse_viewed(&viewed_to_text(&map)).unwrap(), map);
    }
}
