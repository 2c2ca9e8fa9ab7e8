//! Class merging via a `child<TAB>merged` mapping file.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{QuarkError, Result};
use crate::preprocess::{EegRecording, Label};

pub type ClassMap = HashMap<Label, Label>;

pub fn parse_class_map(text: &str) -> Result<ClassMap> {
    let mut map = ClassMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let perr = |message: String| QuarkError::Parse { line: n + 1, message };
        let (child, merged) = line
            .split_once('\t')
            .ok_or_else(|| perr("expected child<TAB>merged".into()))?;
        let child: Label = child.parse().map_err(|_| perr(format!("bad class {child:?}")))?;
        let merged: Label = merged.parse().map_err(|_| perr(format!("bad class {merged:?}")))?;
        if map.insert(child, merged).is_some_and(|prev| prev != merged) {
            return Err(perr(format!("class {child} mapped twice")));
        }
    }
    Ok(map)
}

pub fn load_class_map(path: &Path) -> Result<ClassMap> {
    let text = fs::read_to_string(path).map_err(|e| QuarkError::io(path, e))?;
    parse_class_map(&text)
}

/// Relabel through `map`; unmapped labels are kept.
pub fn apply_class_map(recordings: &mut [EegRecording], map: &ClassMap) {
    for rec in recordings {
        if let Some(merged) = map.get(&rec.label) {
            rec.label = *merged;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    #[test]
    fn relabels_mapped_only() {
        let map = parse_class_map("1\t10\n2\t10\n").unwrap();
        let mut recs: Vec<_> = [1, 2, 3]
            .into_iter()
            .map(|l| EegRecording::new(Matrix::ones((1, 2)), Label(l), l.to_string()).unwrap())
            .collect();
        apply_class_map(&mut recs, &map);
        let labels: Vec<i64> = recs.iter().map(|r| r.label.0).collect();
        assert_eq!(labels, vec![10, 10, 3]);
    }

    #[test]
    fn conflicting_entries_rejected() {
        assert!(parse_class_map("1\t2\n1\t3\n").is_err());
        assert!(parse_class_map("1 2\n").is_err());
    }
}
