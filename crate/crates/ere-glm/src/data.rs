//! Design-matrix container and modality bookkeeping.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::family::GlmFamily;

/// A response vector with its n×p design matrix and column names.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub column_names: Vec<String>,
}

impl Dataset {
    /// Validates dimensions and finiteness. Response admissibility is checked
    /// separately once the family is known (see [`Dataset::check_family`]).
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, column_names: Vec<String>) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 {
            return Err(Error::InvalidData(format!("need at least 2 rows, got {n}")));
        }
        if y.len() != n {
            return Err(Error::InvalidData(format!(
                "response length {} does not match {} design rows",
                y.len(),
                n
            )));
        }
        if column_names.len() != p {
            return Err(Error::InvalidData(format!(
                "{} column names for {} columns",
                column_names.len(),
                p
            )));
        }
        for (i, v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidData(format!("non-finite response in row {}", i + 1)));
            }
        }
        for j in 0..p {
            for i in 0..n {
                if !x[(i, j)].is_finite() {
                    return Err(Error::InvalidData(format!(
                        "non-finite value in row {}, column {:?}",
                        i + 1,
                        column_names[j]
                    )));
                }
            }
        }
        Ok(Dataset { x, y, column_names })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Errors unless every response value is admissible for `family`.
    pub fn check_family(&self, family: &GlmFamily) -> Result<()> {
        for (i, y) in self.y.iter().enumerate() {
            if !family.admissible_response(*y) {
                return Err(Error::InvalidData(format!(
                    "response {} in row {} is not admissible for the {} family",
                    y,
                    i + 1,
                    family.kind.name()
                )));
            }
        }
        Ok(())
    }

    /// Index of a named column.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }
}

/// Named, disjoint blocks of column indices defining modalities.
#[derive(Debug, Clone)]
pub struct ModalityPartition {
    names: Vec<String>,
    blocks: Vec<Vec<usize>>,
}

impl ModalityPartition {
    /// Builds a partition, checking that blocks are disjoint and non-empty.
    /// Columns left out of every block are allowed (e.g. an intercept).
    pub fn new(named_blocks: Vec<(String, Vec<usize>)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        let mut names = Vec::with_capacity(named_blocks.len());
        let mut blocks = Vec::with_capacity(named_blocks.len());
        for (name, mut block) in named_blocks {
            if block.is_empty() {
                return Err(Error::InvalidConfig(format!("modality {name:?} has no columns")));
            }
            block.sort_unstable();
            block.dedup();
            for &j in &block {
                if !seen.insert(j) {
                    return Err(Error::InvalidConfig(format!(
                        "column index {j} appears in more than one modality"
                    )));
                }
            }
            if names.contains(&name) {
                return Err(Error::InvalidConfig(format!("duplicate modality name {name:?}")));
            }
            names.push(name);
            blocks.push(block);
        }
        Ok(ModalityPartition { names, blocks })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn name(&self, m: usize) -> &str {
        &self.names[m]
    }

    pub fn block(&self, m: usize) -> &[usize] {
        &self.blocks[m]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// All column indices belonging to modality `m`.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.names.iter().map(|s| s.as_str()).zip(self.blocks.iter().map(|b| b.as_slice()))
    }
}
