use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::series::{SeriesMatrix, SparseSeriesMatrix};

/// One failed check, named by a stable identifier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub id: String,
    pub detail: String,
}

/// Collection of violations; empty means every check passed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: &str, detail: impl Into<String>) {
        self.violations.push(Violation {
            id: id.to_string(),
            detail: detail.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn extend(&mut self, other: Report) {
        self.violations.extend(other.violations);
    }

    pub fn ids(&self) -> Vec<String> {
        let mut v: Vec<String> = self.violations.iter().map(|x| x.id.clone()).collect();
        v.dedup();
        v
    }

    pub fn mentions(&self, id: &str) -> bool {
        self.violations.iter().any(|v| v.id == id)
    }

    /// Records a violation if the matrix is not zero.
    pub fn require_zero(&mut self, id: &str, label: &str, m: &SeriesMatrix) {
        if !m.is_zero() {
            self.push(id, format!("{label}: nonzero residual {}", compact(m)));
        }
    }

    pub fn require_zero_sparse(&mut self, id: &str, label: &str, m: &SparseSeriesMatrix) {
        if !m.is_zero() {
            match m.to_dense() {
                Ok(d) => self.require_zero(id, label, &d),
                Err(e) => self.push(id, format!("{label}: {e}")),
            }
        }
    }
}

/// Short human-readable rendering of a residual matrix.
pub fn compact(m: &SeriesMatrix) -> String {
    let s = m.to_string().replace('\n', " ");
    if s.len() > 240 {
        format!("{}...", &s[..240])
    } else {
        s
    }
}

/// Residual matrices keyed by equation identifier.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residuals: BTreeMap<String, SeriesMatrix>,
}

impl ResidualReport {
    pub fn insert(&mut self, id: String, m: SeriesMatrix) {
        self.residuals.insert(id, m);
    }

    /// Identifiers with a nonzero residual.
    pub fn nonzero(&self) -> Vec<String> {
        self.residuals
            .iter()
            .filter(|(_, m)| !m.is_zero())
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn all_zero(&self) -> bool {
        self.residuals.values().all(|m| m.is_zero())
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        for (k, m) in &self.residuals {
            r.require_zero(base_id(k), k, m);
        }
        r
    }
}

/// Equation identifier without the index suffix (`f_closed[1,2]` -> `f_closed`).
pub fn base_id(k: &str) -> &str {
    k.split('[').next().unwrap_or(k)
}
