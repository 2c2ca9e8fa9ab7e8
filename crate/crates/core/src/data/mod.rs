//! Dataset ingestion, item catalogs, shaping, splitting and synthetic data.

pub mod catalog;
pub mod class_map;
pub mod images;
pub mod mindbigdata;
pub mod recordings;
pub mod shaping;
pub mod synthetic;

use std::fs;
use std::path::Path;

pub use catalog::{load_embeddings, Item, ItemCatalog, ItemId};
pub use recordings::ViewedItems;
pub use shaping::{shape_distribution, split, DatasetSplit, DistributionSpec};
pub use synthetic::{generate_synthetic, SyntheticConfig};

use crate::error::{QuarkError, Result};
use crate::preprocess::EegRecording;

/// Recordings, the item catalog, and which item each recording viewed.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub recordings: Vec<EegRecording>,
    pub catalog: ItemCatalog,
    pub viewed: ViewedItems,
}

pub const RECORDINGS_FILE: &str = "recordings.txt";
pub const EMBEDDINGS_FILE: &str = "embeddings.tsv";
pub const VIEWED_FILE: &str = "viewed.tsv";
pub const IMAGES_DIR: &str = "images";

impl Dataset {
    /// Write the dataset directory layout: recordings, embeddings, viewed
    /// map, and one PNG per item image.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| QuarkError::io(dir, e))?;
        recordings::write_recordings(&dir.join(RECORDINGS_FILE), &self.recordings)?;
        self.catalog.write_embeddings(&dir.join(EMBEDDINGS_FILE))?;
        let viewed = dir.join(VIEWED_FILE);
        fs::write(&viewed, recordings::viewed_to_text(&self.viewed)).map_err(|e| QuarkError::io(&viewed, e))?;
        if self.catalog.items().iter().any(|i| i.image.is_some()) {
            let images = dir.join(IMAGES_DIR);
            fs::create_dir_all(&images).map_err(|e| QuarkError::io(&images, e))?;
            for item in self.catalog.items() {
                if let Some(img) = &item.image {
                    images::write_grayscale_png(&images.join(format!("{}.png", item.id)), img)?;
                }
            }
        }
        Ok(())
    }

    /// Read a directory written by [`Dataset::save`]. The viewed map and
    /// images are optional.
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(QuarkError::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
            ));
        }
        let recordings = recordings::read_recordings(&dir.join(RECORDINGS_FILE))?;
        let mut catalog = load_embeddings(&dir.join(EMBEDDINGS_FILE))?;
        let viewed_path = dir.join(VIEWED_FILE);
        let viewed = if viewed_path.exists() {
            let text = fs::read_to_string(&viewed_path).map_err(|e| QuarkError::io(&viewed_path, e))?;
            recordings::parse_viewed(&text)?
        } else {
            ViewedItems::new()
        };
        let images = dir.join(IMAGES_DIR);
        if images.is_dir() {
            catalog::load_images(&mut catalog, &images)?;
        }
        Ok(Self {
            recordings,
            catalog,
            viewed,
        })
    }
}
