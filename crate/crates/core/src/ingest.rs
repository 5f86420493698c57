//! Rating and catalog ingestion plus train/test splitting.
//!
//! Rating files use the MovieLens CSV layout (`userId,movieId,rating,timestamp`
//! with one header line). External user and item ids are compacted into
//! contiguous internal indices; [`IdMap`] keeps the mapping in both directions.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("duplicate item_id {0} in catalog")]
    DuplicateItem(u64),
    #[error("test fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
}

/// A non-fatal problem found while loading; the offending line was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadWarning {
    pub line: u64,
    pub message: String,
}

/// A loaded value together with the lines that were skipped on the way.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub warnings: Vec<LoadWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingFormat {
    MovielensCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub const MOVIELENS: RatingScale = RatingScale { min: 0.5, max: 5.0 };

    pub fn contains(&self, rating: f64) -> bool {
        rating >= self.min && rating <= self.max
    }
}

impl Default for RatingScale {
    fn default() -> Self {
        Self::MOVIELENS
    }
}

/// Bijection between external ids and compact internal indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    external: Vec<u64>,
    index: HashMap<u64, u32>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the internal index for `ext`, allocating the next one if unseen.
    pub fn intern(&mut self, ext: u64) -> u32 {
        if let Some(&idx) = self.index.get(&ext) {
            return idx;
        }
        let idx = self.external.len() as u32;
        self.external.push(ext);
        self.index.insert(ext, idx);
        idx
    }

    pub fn internal(&self, ext: u64) -> Option<u32> {
        self.index.get(&ext).copied()
    }

    pub fn external(&self, internal: u32) -> Option<u64> {
        self.external.get(internal as usize).copied()
    }

    pub fn externals(&self) -> &[u64] {
        &self.external
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    /// Rebuilds a map from an ordered list of external ids. Fails on duplicates.
    pub fn from_externals(external: Vec<u64>) -> Option<Self> {
        let mut index = HashMap::with_capacity(external.len());
        for (i, &ext) in external.iter().enumerate() {
            if index.insert(ext, i as u32).is_some() {
                return None;
            }
        }
        Some(Self { external, index })
    }
}

/// One observed rating, addressed by internal indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingTriple {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingDataset {
    triples: Vec<RatingTriple>,
    users: IdMap,
    items: IdMap,
    scale: RatingScale,
    item_counts: Vec<u32>,
}

impl RatingDataset {
    /// Builds a dataset from `(external user, external item, rating, timestamp)` rows.
    /// A repeated (user, item) pair overwrites the earlier rating in place.
    pub fn from_external<I>(rows: I, scale: RatingScale) -> Self
    where
        I: IntoIterator<Item = (u64, u64, f64, Option<i64>)>,
    {
        let mut users = IdMap::new();
        let mut items = IdMap::new();
        let mut triples: Vec<RatingTriple> = Vec::new();
        let mut seen: HashMap<(u32, u32), usize> = HashMap::new();
        for (u, i, rating, timestamp) in rows {
            let triple = RatingTriple {
                user: users.intern(u),
                item: items.intern(i),
                rating,
                timestamp,
            };
            match seen.get(&(triple.user, triple.item)) {
                Some(&pos) => triples[pos] = triple,
                None => {
                    seen.insert((triple.user, triple.item), triples.len());
                    triples.push(triple);
                }
            }
        }
        Self::with_maps(triples, users, items, scale)
    }

    fn with_maps(triples: Vec<RatingTriple>, users: IdMap, items: IdMap, scale: RatingScale) -> Self {
        let mut item_counts = vec![0u32; items.len()];
        for t in &triples {
            item_counts[t.item as usize] += 1;
        }
        Self {
            triples,
            users,
            items,
            scale,
            item_counts,
        }
    }

    pub fn triples(&self) -> &[RatingTriple] {
        &self.triples
    }

    pub fn users(&self) -> &IdMap {
        &self.users
    }

    pub fn items(&self) -> &IdMap {
        &self.items
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Number of ratings referencing internal item `item`.
    pub fn rating_count(&self, item: u32) -> u32 {
        self.item_counts.get(item as usize).copied().unwrap_or(0)
    }

    pub fn rating_count_external(&self, item_id: u64) -> u32 {
        self.items.internal(item_id).map_or(0, |i| self.rating_count(i))
    }

    pub fn mean_rating(&self) -> Option<f64> {
        if self.triples.is_empty() {
            return None;
        }
        Some(self.triples.iter().map(|t| t.rating).sum::<f64>() / self.triples.len() as f64)
    }
}

pub fn load_ratings(path: impl AsRef<Path>, format: RatingFormat) -> Result<Loaded<RatingDataset>, IngestError> {
    let file = File::open(path)?;
    parse_ratings(BufReader::new(file), format, RatingScale::MOVIELENS)
}

/// Parses ratings from a reader. Malformed rows and out-of-scale ratings are
/// skipped and reported as warnings; a file with no surviving rows is an error.
pub fn parse_ratings<R: Read>(
    reader: R,
    format: RatingFormat,
    scale: RatingScale,
) -> Result<Loaded<RatingDataset>, IngestError> {
    let RatingFormat::MovielensCsv = format;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for result in rdr.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(IngestError::Io(e.into()));
                }
                warnings.push(LoadWarning {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        match parse_rating_row(&record) {
            Ok(row) if scale.contains(row.2) => rows.push(row),
            Ok(row) => warnings.push(LoadWarning {
                line,
                message: format!("rating {} outside scale [{}, {}]", row.2, scale.min, scale.max),
            }),
            Err(message) => warnings.push(LoadWarning { line, message }),
        }
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    Ok(Loaded {
        value: RatingDataset::from_external(rows, scale),
        warnings,
    })
}

fn parse_rating_row(record: &csv::StringRecord) -> Result<(u64, u64, f64, Option<i64>), String> {
    if record.len() < 3 || record.len() > 4 {
        return Err(format!("expected 3 or 4 fields, found {}", record.len()));
    }
    let user = record[0]
        .parse::<u64>()
        .map_err(|e| format!("bad userId {:?}: {e}", &record[0]))?;
    let item = record[1]
        .parse::<u64>()
        .map_err(|e| format!("bad itemId {:?}: {e}", &record[1]))?;
    let rating = record[2]
        .parse::<f64>()
        .ok()
        .filter(|r| r.is_finite())
        .ok_or_else(|| format!("bad rating {:?}", &record[2]))?;
    let timestamp = match record.get(3) {
        None | Some("") => None,
        Some(ts) => Some(ts.parse::<i64>().map_err(|e| format!("bad timestamp {ts:?}: {e}"))?),
    };
    Ok((user, item, rating, timestamp))
}

/// Display metadata for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub item_id: u64,
    pub title: String,
    #[serde(default)]
    pub poster_url: String,
    #[serde(default)]
    pub plot: String,
    #[serde(default)]
    pub cast: Vec<String>,
    #[serde(default)]
    pub director: String,
    #[serde(default, skip_serializing)]
    pub rating_count: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    items: BTreeMap<u64, ItemMeta>,
}

#[derive(Deserialize)]
struct CatalogRecord {
    item_id: u64,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    poster_url: Option<String>,
    #[serde(default)]
    plot: Option<String>,
    #[serde(default)]
    cast: Option<Vec<String>>,
    #[serde(default)]
    director: Option<String>,
}

impl Catalog {
    pub fn get(&self, item_id: u64) -> Option<&ItemMeta> {
        self.items.get(&item_id)
    }

    pub fn contains(&self, item_id: u64) -> bool {
        self.items.contains_key(&item_id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ItemMeta> {
        self.items.values()
    }

    pub fn insert(&mut self, meta: ItemMeta) -> Result<(), IngestError> {
        if self.items.contains_key(&meta.item_id) {
            return Err(IngestError::DuplicateItem(meta.item_id));
        }
        self.items.insert(meta.item_id, meta);
        Ok(())
    }

    /// Fills every item's `rating_count` from the dataset.
    pub fn attach_rating_counts(&mut self, ds: &RatingDataset) {
        for meta in self.items.values_mut() {
            meta.rating_count = ds.rating_count_external(meta.item_id);
        }
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Loaded<Catalog>, IngestError> {
    let file = File::open(path)?;
    parse_catalog(BufReader::new(file))
}

/// Parses newline-delimited JSON item records.
pub fn parse_catalog<R: BufRead>(reader: R) -> Result<Loaded<Catalog>, IngestError> {
    let mut catalog = Catalog::default();
    let mut warnings = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CatalogRecord = serde_json::from_str(&line).map_err(|e| IngestError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let title = rec.title.unwrap_or_default();
        if title.trim().is_empty() {
            warnings.push(LoadWarning {
                line: line_no,
                message: format!("item {} has no title", rec.item_id),
            });
            continue;
        }
        catalog.insert(ItemMeta {
            item_id: rec.item_id,
            title,
            poster_url: rec.poster_url.unwrap_or_default(),
            plot: rec.plot.unwrap_or_default(),
            cast: rec.cast.unwrap_or_default(),
            director: rec.director.unwrap_or_default(),
            rating_count: 0,
        })?;
    }
    Ok(Loaded {
        value: catalog,
        warnings,
    })
}

/// Splits a dataset into train and test parts that share the id maps.
///
/// Each user with at least two ratings contributes `round(n * test_fraction)`
/// ratings to the test part, capped so that one rating always stays in train.
/// Users with a single rating keep it in train.
pub fn split_dataset(
    ds: &RatingDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(RatingDataset, RatingDataset), IngestError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(IngestError::InvalidFraction(test_fraction));
    }
    if ds.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let mut by_user: Vec<Vec<usize>> = vec![Vec::new(); ds.user_count()];
    for (pos, t) in ds.triples.iter().enumerate() {
        by_user[t.user as usize].push(pos);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; ds.len()];
    for positions in &mut by_user {
        let n = positions.len();
        if n < 2 {
            continue;
        }
        let take = ((n as f64 * test_fraction).round() as usize).min(n - 1);
        positions.shuffle(&mut rng);
        for &pos in &positions[..take] {
            in_test[pos] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (pos, t) in ds.triples.iter().enumerate() {
        if in_test[pos] {
            test.push(*t);
        } else {
            train.push(*t);
        }
    }
    Ok((
        RatingDataset::with_maps(train, ds.users.clone(), ds.items.clone(), ds.scale),
        RatingDataset::with_maps(test, ds.users.clone(), ds.items.clone(), ds.scale),
    ))
}
