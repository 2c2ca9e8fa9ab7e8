//! Reader for MindBigData-style tab-separated EEG dumps.
//!
//! Each line is `record_id event_id device channel class_code size data`
//! with comma-separated samples in `data`. Lines sharing an `event_id` are
//! assembled into one recording with rows in [`CHANNELS`] order; other
//! channels are ignored.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{QuarkError, Result};
use crate::numerics::Matrix;
use crate::preprocess::{EegRecording, Label};

pub const CHANNELS: [&str; 5] = ["AF3", "AF4", "T7", "T8", "Pz"];
pub const SAMPLES: usize = 360;

#[derive(Debug, Default)]
pub struct ParsedSource {
    pub recordings: Vec<EegRecording>,
    /// Events dropped because a channel was missing.
    pub skipped_events: usize,
}

struct Pending {
    label: Label,
    rows: [Option<Vec<f64>>; 5],
}

/// Parse from any reader. `samples` is the harmonized row length.
pub fn parse_source<R: BufRead>(reader: R, samples: usize) -> Result<ParsedSource> {
    let mut order: Vec<String> = Vec::new();
    let mut pending: HashMap<String, Pending> = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| QuarkError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let perr = |message: String| QuarkError::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(perr(format!("expected 7 tab-separated fields, found {}", fields.len())));
        }
        let event = fields[1].trim().to_string();
        let channel = fields[3].trim();
        let label: Label = fields[4].parse().map_err(|_| perr(format!("bad class code {:?}", fields[4])))?;
        let size: usize = fields[5].trim().parse().map_err(|_| perr(format!("bad size {:?}", fields[5])))?;
        let values = fields[6]
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| perr(format!("bad sample {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != size {
            return Err(perr(format!("size field {size} but {} samples", values.len())));
        }
        let Some(slot) = CHANNELS.iter().position(|c| *c == channel) else {
            continue;
        };
        let entry = pending.entry(event.clone()).or_insert_with(|| {
            order.push(event.clone());
            Pending {
                label,
                rows: Default::default(),
            }
        });
        if entry.label != label {
            return Err(perr(format!("event {event} has conflicting class codes")));
        }
        entry.rows[slot] = Some(values);
    }

    let mut parsed = ParsedSource::default();
    for event in order {
        let p = pending.remove(&event).expect("recorded in order");
        if p.rows.iter().any(Option::is_none) {
            parsed.skipped_events += 1;
            continue;
        }
        let mut signal = Matrix::zeros((CHANNELS.len(), samples));
        for (r, row) in p.rows.iter().enumerate() {
            let row = row.as_ref().expect("checked");
            for (c, v) in row.iter().take(samples).enumerate() {
                signal[[r, c]] = *v;
            }
        }
        parsed.recordings.push(EegRecording::new(signal, p.label, event)?);
    }
    if parsed.skipped_events > 0 {
        log::warn!("skipped {} events with missing channels", parsed.skipped_events);
    }
    Ok(parsed)
}

pub fn parse_eeg_source(path: &Path) -> Result<ParsedSource> {
    let file = File::open(path).map_err(|e| QuarkError::io(path, e))?;
    parse_source(BufReader::new(file), SAMPLES)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(event: &str, channel: &str, code: i64, n: usize) -> String {
        let data: Vec<String> = (0..n).map(|v| format!("{}", v as f64 + 0.5)).collect();
        format!("1\t{event}\tIN\t{channel}\t{code}\t{n}\t{}\n", data.join(","))
    }

    #[test]
    fn five_channels_make_one_recording() {
        let text: String = CHANNELS.iter().rev().map(|c| line("42", c, 6, 400)).collect();
        let parsed = parse_source(text.as_bytes(), SAMPLES).unwrap();
        assert_eq!(parsed.recordings.len(), 1);
        let rec = &parsed.recordings[0];
        assert_eq!(rec.signal.dim(), (5, 360));
        assert_eq!(rec.label, Label(6));
        assert_eq!(rec.recording_id, "42");
        assert_eq!(rec.signal[[0, 359]], 359.5);
    }

    #[test]
    fn missing_channel_skips_event() {
        let text: String = CHANNELS[..4].iter().map(|c| line("1", c, 0, 10)).collect();
        let parsed = parse_source(text.as_bytes(), 10).unwrap();
        assert!(parsed.recordings.is_empty());
        assert_eq!(parsed.skipped_events, 1);
    }

    #[test]
    fn short_channel_is_zero_padded() {
        let mut text: String = CHANNELS[1..].iter().map(|c| line("1", c, 0, 360)).collect();
        text.push_str(&line("1", "AF3", 0, 300));
        let rec = &parse_source(text.as_bytes(), SAMPLES).unwrap().recordings[0];
        assert_eq!(rec.signal[[0, 299]], 299.5);
        assert!(rec.signal.row(0).iter().skip(300).all(|v| *v == 0.0));
        assert_eq!(rec.signal.row(0).iter().skip(300).count(), 60);
    }

    #[test]
    fn other_channels_ignored() {
        let mut text: String = CHANNELS.iter().map(|c| line("1", c, 2, 5)).collect();
        text.push_str(&line("1", "O1", 2, 5));
        assert_eq!(parse_source(text.as_bytes(), 5).unwrap().recordings.len(), 1);
    }

    #[test]
    fn malformed_line_reports_number() {
        let mut text = line("1", "AF3", 0, 3);
        text.push_str("1\t1\tIN\tAF4\tx\t3\t1,2,3\n");
        let err = parse_source(text.as_bytes(), 3).unwrap_err();
        assert!(matches!(err, QuarkError::Parse { line: 2, .. }), "{err}");
    }
}
