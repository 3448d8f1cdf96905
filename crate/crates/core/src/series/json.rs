//! Canonical JSON forms.
//!
//! A series is `{"vars": [...], "order": N, "terms": [[[e..], "p/q"], ...]}`
//! with terms sorted lexicographically by exponent vector. A matrix adds
//! `rows`, `cols` and row-major `entries`, each entry being a term list.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::sync::Arc;

use super::index::MultiIndex;
use super::linalg::QMat;
use super::matrix::SeriesMatrix;
use super::rational::{format_rat, parse_rat, Rational};
use super::trunc::{TruncSeries, Vars};
use crate::error::{Error, Result};

pub type TermList = Vec<(Vec<u32>, String)>;

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    vars: Vec<String>,
    order: i32,
    terms: TermList,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    vars: Vec<String>,
    order: i32,
    rows: usize,
    cols: usize,
    entries: Vec<TermList>,
}

pub fn terms_to_list(s: &TruncSeries) -> TermList {
    s.terms().iter().map(|(e, c)| (e.0.clone(), format_rat(c))).collect()
}

pub fn list_to_series(vars: &Vars, order: i32, list: &TermList) -> Result<TruncSeries> {
    let mut terms = Vec::with_capacity(list.len());
    for (e, c) in list {
        terms.push((MultiIndex(e.clone()), parse_rat(c)?));
    }
    TruncSeries::from_terms(vars, order, terms)
}

impl Serialize for TruncSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRepr {
            vars: self.vars().to_vec(),
            order: self.order(),
            terms: terms_to_list(self),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SeriesRepr::deserialize(d)?;
        let vars: Vars = Arc::new(r.vars);
        list_to_series(&vars, r.order, &r.terms).map_err(serde::de::Error::custom)
    }
}

impl Serialize for SeriesMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            vars: self.vars().to_vec(),
            order: self.order(),
            rows: self.rows(),
            cols: self.cols(),
            entries: self.entries().iter().map(terms_to_list).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SeriesMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        matrix_from_repr(r).map_err(serde::de::Error::custom)
    }
}

fn matrix_from_repr(r: MatrixRepr) -> Result<SeriesMatrix> {
    if r.entries.len() != r.rows * r.cols {
        return Err(Error::Structural(format!(
            "matrix declares {}x{} but has {} entries",
            r.rows,
            r.cols,
            r.entries.len()
        )));
    }
    let vars: Vars = Arc::new(r.vars);
    if r.entries.is_empty() {
        return Ok(SeriesMatrix::zeros(&vars, r.order, r.rows, r.cols));
    }
    let entries = r
        .entries
        .iter()
        .map(|t| list_to_series(&vars, r.order, t))
        .collect::<Result<Vec<_>>>()?;
    let m = SeriesMatrix::from_entries(r.rows, r.cols, entries)?;
    Ok(m)
}

/// Constant rational matrix as a list of rows of `"p/q"` strings.
pub fn qmat_to_json(m: &QMat) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(format_rat).collect())
        .collect()
}

pub fn qmat_from_json(rows: &[Vec<String>]) -> Result<QMat> {
    let parsed = rows
        .iter()
        .map(|r| r.iter().map(|s| parse_rat(s)).collect::<Result<Vec<Rational>>>())
        .collect::<Result<Vec<_>>>()?;
    let c = parsed.first().map_or(0, |r| r.len());
    if parsed.iter().any(|r| r.len() != c) {
        return Err(Error::Structural("ragged matrix rows".into()));
    }
    Ok(QMat::from_rows(parsed))
}

/// Serde adapter for `QMat` fields.
pub mod qmat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &QMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        qmat_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<QMat, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        qmat_from_json(&rows).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Rational` fields.
pub mod rat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        format_rat(q).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>` fields.
pub mod rat_vec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(format_rat).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rat(s))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vars` fields.
pub mod vars_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Vars, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vars, D::Error> {
        Ok(std::sync::Arc::new(Vec::<String>::deserialize(d)?))
    }
}
