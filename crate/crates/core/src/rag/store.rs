use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::weights::{adapt_weights, RetrievalWeights};
use super::StoreError;
use crate::record::{Feature, FormulationInput, FormulationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    Added,
    Replaced,
}

/// One ranked hit.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved<'a> {
    pub record: &'a FormulationRecord,
    /// Weighted scaled L1 distance; ranking uses this so far-away hits that
    /// underflow to a zero score keep their order.
    pub distance: f64,
    pub score: f64,
}

/// Append-only JSONL store with an in-memory index.
///
/// Overwrites append a new line; on reload the last line for an id wins and
/// keeps the position of the first one.
#[derive(Debug, Default)]
pub struct RecordStore {
    path: Option<PathBuf>,
    records: Vec<FormulationRecord>,
    index: HashMap<String, usize>,
    weights: Option<RetrievalWeights>,
}

impl RecordStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or prepares to create) the store at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut store = Self {
            path: Some(path.clone()),
            ..Self::default()
        };
        if !path.exists() {
            return Ok(store);
        }
        let file = File::open(&path).map_err(|e| StoreError::io(&path, e))?;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| StoreError::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: FormulationRecord = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                line: n + 1,
                message: e.to_string(),
            })?;
            record.validate()?;
            store.insert(record);
        }
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn insert(&mut self, record: FormulationRecord) -> IngestOutcome {
        self.weights = None;
        match self.index.get(&record.id) {
            Some(&i) => {
                self.records[i] = record;
                IngestOutcome::Replaced
            }
            None => {
                self.index.insert(record.id.clone(), self.records.len());
                self.records.push(record);
                IngestOutcome::Added
            }
        }
    }

    pub fn ingest(&mut self, record: FormulationRecord, overwrite: bool) -> Result<IngestOutcome, StoreError> {
        record.validate()?;
        if !overwrite && self.index.contains_key(&record.id) {
            return Err(StoreError::Conflict(record.id));
        }
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
            }
            let mut line = serde_json::to_string(&record).expect("records serialize");
            line.push('\n');
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| StoreError::io(path, e))?;
            file.write_all(line.as_bytes()).map_err(|e| StoreError::io(path, e))?;
        }
        Ok(self.insert(record))
    }

    pub fn get(&self, id: &str) -> Option<&FormulationRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[FormulationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Adapted weights, recomputed after any ingest.
    pub fn weights(&mut self) -> Result<RetrievalWeights, StoreError> {
        if self.records.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        Ok(self.weights.get_or_insert_with(|| adapt_weights(&self.records)).clone())
    }

    pub fn retrieve(
        &self,
        query: &FormulationInput,
        k: usize,
        weights: &RetrievalWeights,
    ) -> Result<Vec<Retrieved<'_>>, StoreError> {
        let values: Vec<(Feature, f64)> = Feature::ALL.iter().map(|&f| (f, query.get(f))).collect();
        self.retrieve_features(&values, k, weights)
    }

    /// Ranks records against a partial query. Only the listed features
    /// contribute; their weights are renormalised.
    pub fn retrieve_features(
        &self,
        query: &[(Feature, f64)],
        k: usize,
        weights: &RetrievalWeights,
    ) -> Result<Vec<Retrieved<'_>>, StoreError> {
        if k == 0 {
            return Err(StoreError::ZeroK);
        }
        if self.records.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        let features: Vec<Feature> = query.iter().map(|&(f, _)| f).collect();
        let w = if features.len() == Feature::ALL.len() {
            weights.clone()
        } else {
            weights.restricted_to(&features)
        };
        let mut hits: Vec<Retrieved<'_>> = self
            .records
            .iter()
            .map(|record| {
                let distance = distance(query, &record.features, &w);
                Retrieved {
                    record,
                    distance,
                    score: (-distance).exp(),
                }
            })
            .collect();
        hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.record.id.cmp(&b.record.id)));
        hits.truncate(k);
        Ok(hits)
    }
}

/// `Σ w_j |q_j - r_j| / s_j` over the query's features.
pub fn distance(query: &[(Feature, f64)], record: &FormulationInput, weights: &RetrievalWeights) -> f64 {
    query
        .iter()
        .map(|&(f, q)| weights.weight(f) * (q - record.get(f)).abs() / weights.scale(f))
        .sum()
}

/// `exp(-distance)`, in (0, 1] up to floating-point underflow.
pub fn score(query: &[(Feature, f64)], record: &FormulationInput, weights: &RetrievalWeights) -> f64 {
    (-distance(query, record, weights)).exp()
}
