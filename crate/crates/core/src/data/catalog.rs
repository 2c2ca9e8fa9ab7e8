//! Item catalog: id, class, embedding and an optional grayscale image.
//!
//! Embedding file format, one item per line:
//! `item_id<TAB>label<TAB>f1 f2 … fE`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array1;

use crate::error::{QuarkError, Result};
use crate::numerics::Matrix;
use crate::preprocess::Label;

pub type ItemId = u64;

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub id: ItemId,
    pub label: Label,
    pub embedding: Array1<f64>,
    /// Grayscale pixels in `[0, 255]`.
    pub image: Option<Matrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItemCatalog {
    items: Vec<Item>,
    by_id: HashMap<ItemId, usize>,
    by_label: BTreeMap<Label, Vec<usize>>,
    dim: usize,
}

impl ItemCatalog {
    pub fn new(items: Vec<Item>) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(QuarkError::Format("empty item catalog".into()));
        };
        let dim = first.embedding.len();
        if dim == 0 {
            return Err(QuarkError::Format(format!("item {} has an empty embedding", first.id)));
        }
        let mut by_id = HashMap::with_capacity(items.len());
        let mut by_label: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
        for (n, item) in items.iter().enumerate() {
            if item.embedding.len() != dim {
                return Err(QuarkError::Format(format!(
                    "item {} has embedding length {}, expected {dim}",
                    item.id,
                    item.embedding.len()
                )));
            }
            if !item.embedding.iter().all(|v| v.is_finite()) {
                return Err(QuarkError::NonFinite(format!("embedding of item {}", item.id)));
            }
            if by_id.insert(item.id, n).is_some() {
                return Err(QuarkError::Format(format!("duplicate item id {}", item.id)));
            }
            by_label.entry(item.label).or_default().push(n);
        }
        Ok(Self {
            items,
            by_id,
            by_label,
            dim,
        })
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Embedding width `E`.
    pub fn embedding_dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: ItemId) -> Option<&Item> {
        self.by_id.get(&id).map(|&n| &self.items[n])
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.by_label.keys().copied()
    }

    /// Positions (into [`Self::items`]) of items in `label`'s class.
    pub fn class_indices(&self, label: Label) -> &[usize] {
        self.by_label.get(&label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn class_size(&self, label: Label) -> usize {
        self.class_indices(label).len()
    }

    /// Items outside `label`'s class.
    pub fn outside_count(&self, label: Label) -> usize {
        self.items.len() - self.class_size(label)
    }

    /// Positions of items outside `label`'s class, in catalog order.
    pub fn other_indices(&self, label: Label) -> Vec<usize> {
        (0..self.items.len()).filter(|&n| self.items[n].label != label).collect()
    }

    pub fn attach_image(&mut self, id: ItemId, image: Matrix) -> Result<()> {
        let n = *self
            .by_id
            .get(&id)
            .ok_or_else(|| QuarkError::Format(format!("no item with id {id}")))?;
        self.items[n].image = Some(image);
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            let _ = write!(out, "{}\t{}\t", item.id, item.label);
            let values: Vec<String> = item.embedding.iter().map(|v| v.to_string()).collect();
            out.push_str(&values.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn write_embeddings(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| QuarkError::io(path, e))
    }
}

/// Parse the embedding text format.
pub fn parse_embeddings(text: &str) -> Result<ItemCatalog> {
    let mut items = Vec::new();
    let mut dim: Option<usize> = None;
    let mut seen = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| QuarkError::Parse { line: line_no, message };
        let mut fields = line.splitn(3, '\t');
        let (Some(id), Some(label), Some(values)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err("expected item_id<TAB>label<TAB>values".into()));
        };
        let id: ItemId = id.trim().parse().map_err(|_| parse_err(format!("bad item id {id:?}")))?;
        let label: Label = label.parse().map_err(|_| parse_err(format!("bad label {label:?}")))?;
        let embedding = values
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| parse_err(format!("bad value {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None => dim = Some(embedding.len()),
            Some(d) if d != embedding.len() => {
                return Err(QuarkError::Format(format!(
                    "line {line_no}: embedding length {} differs from {d}",
                    embedding.len()
                )))
            }
            _ => {}
        }
        if let Some(prev) = seen.insert(id, line_no) {
            return Err(QuarkError::Format(format!(
                "duplicate item id {id} on lines {prev} and {line_no}"
            )));
        }
        items.push(Item {
            id,
            label,
            embedding: Array1::from(embedding),
            image: None,
        });
    }
    ItemCatalog::new(items)
}

pub fn load_embeddings(path: &Path) -> Result<ItemCatalog> {
    let text = fs::read_to_string(path).map_err(|e| QuarkError::io(path, e))?;
    parse_embeddings(&text).map_err(|e| match e {
        QuarkError::Format(m) => QuarkError::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Attach `<dir>/<item_id>.png` to every item that has one. Returns the
/// number of images loaded.
pub fn load_images(catalog: &mut ItemCatalog, dir: &Path) -> Result<usize> {
    let ids: Vec<ItemId> = catalog.items().iter().map(|i| i.id).collect();
    let mut loaded = 0;
    for id in ids {
        let path = dir.join(format!("{id}.png"));
        if !path.exists() {
            continue;
        }
        let image = crate::data::images::read_grayscale(&path)?;
        catalog.attach_image(id, image)?;
        loaded += 1;
    }
    Ok(loaded)
}
