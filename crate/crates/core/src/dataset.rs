//! Labeled routing data: per-query embeddings, per-arm correctness and token counts.

use std::collections::HashSet;

use thiserror::Error;

use crate::money::Picodollars;
use crate::roster::{Roster, RosterError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("schema error at line {line}{}: {reason}", query_id.as_ref().map(|q| format!(" (query_id {q:?})")).unwrap_or_default())]
    Schema {
        line: usize,
        query_id: Option<String>,
        reason: String,
    },
    #[error("invalid record {query_id:?}: {reason}")]
    Record { query_id: String, reason: String },
    #[error(transparent)]
    Roster(#[from] RosterError),
    #[error("incompatible datasets: {0}")]
    Incompatible(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One labeled query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: String,
    pub text: Option<String>,
    pub embedding: Vec<f32>,
    /// `correct[j]` is 1 iff arm j answered this query correctly.
    pub correct: Vec<bool>,
    pub tokens: Vec<u64>,
}

impl QueryRecord {
    pub fn embedding_f64(&self) -> Vec<f64> {
        self.embedding.iter().map(|v| f64::from(*v)).collect()
    }
}

/// Roster plus ordered records; the records x arms correctness matrix lives here.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingDataset {
    roster: Roster,
    embedding_dim: usize,
    encoder: Option<String>,
    records: Vec<QueryRecord>,
}

impl RoutingDataset {
    pub fn new(roster: Roster, embedding_dim: usize, records: Vec<QueryRecord>) -> Result<Self, DatasetError> {
        Self::with_encoder(roster, embedding_dim, None, records)
    }

    pub fn with_encoder(
        roster: Roster,
        embedding_dim: usize,
        encoder: Option<String>,
        records: Vec<QueryRecord>,
    ) -> Result<Self, DatasetError> {
        if embedding_dim == 0 {
            return Err(DatasetError::Schema {
                line: 1,
                query_id: None,
                reason: "embedding_dim must be positive".into(),
            });
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            check_record(r, roster.len(), embedding_dim)
                .map_err(|reason| DatasetError::Record { query_id: r.query_id.clone(), reason })?;
            if !seen.insert(r.query_id.as_str()) {
                return Err(DatasetError::Record {
                    query_id: r.query_id.clone(),
                    reason: "duplicate query_id".into(),
                });
            }
        }
        Ok(Self { roster, embedding_dim, encoder, records })
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn encoder(&self) -> Option<&str> {
        self.encoder.as_deref()
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_arms(&self) -> usize {
        self.roster.len()
    }

    /// Spend of sending record `i` to arm `j`.
    pub fn spend(&self, i: usize, j: usize) -> Picodollars {
        let arm = &self.roster.arms()[j];
        arm.price_per_1k.cost_of(self.records[i].tokens[j])
    }

    /// Number of records arm `j` answers correctly.
    pub fn correct_count(&self, j: usize) -> usize {
        self.records.iter().filter(|r| r.correct[j]).count()
    }

    /// First `n` records and the rest, sharing roster and encoder.
    pub fn split_at(&self, n: usize) -> (RoutingDataset, RoutingDataset) {
        let n = n.min(self.records.len());
        let head = self.records[..n].to_vec();
        let tail = self.records[n..].to_vec();
        (self.with_records(head), self.with_records(tail))
    }

    pub fn subset(&self, indices: &[usize]) -> RoutingDataset {
        self.with_records(indices.iter().map(|&i| self.records[i].clone()).collect())
    }

    fn with_records(&self, records: Vec<QueryRecord>) -> RoutingDataset {
        RoutingDataset {
            roster: self.roster.clone(),
            embedding_dim: self.embedding_dim,
            encoder: self.encoder.clone(),
            records,
        }
    }

    /// Same roster, embedding width and encoder.
    pub fn ensure_compatible(&self, other: &RoutingDataset) -> Result<(), DatasetError> {
        if self.roster.fingerprint() != other.roster.fingerprint() {
            return Err(DatasetError::Incompatible("arm rosters differ".into()));
        }
        if self.embedding_dim != other.embedding_dim {
            return Err(DatasetError::Incompatible(format!(
                "embedding_dim {} vs {}",
                self.embedding_dim, other.embedding_dim
            )));
        }
        if self.encoder != other.encoder {
            return Err(DatasetError::Incompatible(format!(
                "encoder {:?} vs {:?}",
                self.encoder, other.encoder
            )));
        }
        Ok(())
    }

    /// Non-fatal oddities worth reporting from `validate-data`.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            if r.embedding.iter().any(|v| !v.is_finite()) {
                out.push(format!("record {i} ({:?}) has a non-finite embedding value", r.query_id));
            }
        }
        for arm in self.roster.arms() {
            if arm.price_per_1k.nanodollars() == 0 {
                out.push(format!("arm {:?} has zero price", arm.name));
            }
        }
        out
    }
}

fn check_record(r: &QueryRecord, n_arms: usize, dim: usize) -> Result<(), String> {
    if r.query_id.is_empty() {
        return Err("empty query_id".into());
    }
    if r.embedding.len() != dim {
        return Err(format!("embedding length {} != embedding_dim {dim}", r.embedding.len()));
    }
    if r.correct.len() != n_arms {
        return Err(format!("{} correctness bits for {n_arms} arms", r.correct.len()));
    }
    if r.tokens.len() != n_arms {
        return Err(format!("{} token counts for {n_arms} arms", r.tokens.len()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(id: &str, emb: &[f32], correct: &[bool], tokens: &[u64]) -> QueryRecord {
        QueryRecord {
            query_id: id.into(),
            text: None,
            embedding: emb.to_vec(),
            correct: correct.to_vec(),
            tokens: tokens.to_vec(),
        }
    }

    fn roster() -> Roster {
        Roster::from_pairs(&[("cheap", "0.001"), ("dear", "0.01")]).unwrap()
    }

    #[test]
    fn rejects_dimension_mismatch_naming_record() {
        let err = RoutingDataset::new(
            roster(),
            2,
            vec![rec("a", &[0.0, 1.0], &[true, false], &[1, 1]), rec("b", &[0.0], &[true, false], &[1, 1])],
        )
        .unwrap_err();
        assert!(matches!(&err, DatasetError::Record { query_id, .. } if query_id == "b"), "{err}");
    }

    #[test]
    fn rejects_duplicates_and_arm_count() {
        let dup = RoutingDataset::new(
            roster(),
            1,
            vec![rec("a", &[0.0], &[true, false], &[1, 1]), rec("a", &[1.0], &[true, false], &[1, 1])],
        );
        assert!(dup.unwrap_err().to_string().contains("duplicate"));
        let arms = RoutingDataset::new(roster(), 1, vec![rec("a", &[0.0], &[true], &[1, 1])]);
        assert!(arms.is_err());
    }

    #[test]
    fn empty_dataset_is_valid() {
        let ds = RoutingDataset::new(roster(), 3, vec![]).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn spend_uses_arm_price() {
        let ds = RoutingDataset::new(roster(), 1, vec![rec("a", &[0.0], &[true, false], &[1000, 500])]).unwrap();
        assert_eq!(ds.spend(0, 0).as_dollars(), 0.001);
        assert_eq!(ds.spend(0, 1).as_dollars(), 0.005);
    }
}
