//! Input schemas, one per command.

use serde::Deserialize;

use frobenius_core::connection::{ConnectionPencil, PairingMatrix};
use frobenius_core::frobstruct::{
    filtration_to_ftype, jacobi_to_filtration, shift_family, FiltrationData, FrobeniusTypeStructure,
};
use frobenius_core::jacobi::{codim_one_instance, fermat, JacobiAlgebra, PolyInput, WeightSystem};
use frobenius_core::reconstruct::{FrobeniusGermData, InitialData};
use frobenius_core::series::{parse_rat, vars, MultiIndex, Rational, TruncSeries};
use frobenius_core::{Error, Result};

/// A weighted homogeneous polynomial.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PolySource {
    Polynomial(PolyInput),
    /// `x_1^degree + ... + x_nvars^degree` with weights `1/degree`.
    Fermat {
        nvars: usize,
        degree: u32,
    },
    /// Six variables with weights `(1,1,1,2,2,2)/9`.
    CodimOneInstance,
}

impl PolySource {
    pub fn algebra(&self) -> Result<JacobiAlgebra> {
        let (f, ws) = match self {
            PolySource::Polynomial(p) => p.parse()?,
            PolySource::Fermat { nvars, degree } => {
                if *nvars == 0 || *degree < 2 {
                    return Err(Error::Structural("fermat needs nvars >= 1 and degree >= 2".into()));
                }
                (
                    fermat(*nvars, *degree),
                    WeightSystem::homogeneous(*nvars, *degree as i64)?,
                )
            }
            PolySource::CodimOneInstance => codim_one_instance(),
        };
        JacobiAlgebra::build(&f, &ws)
    }
}

/// A Frobenius type structure, given directly or by a construction.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureSource {
    Ftype(FrobeniusTypeStructure),
    Filtration(FiltrationData),
    /// One-parameter shift family of weight `weight`; each free coefficient
    /// is a list of rationals, the coefficients of `1, t, t^2, ...`.
    ShiftFamily {
        weight: i64,
        free: Vec<Vec<String>>,
    },
    Jacobi(PolySource),
}

impl StructureSource {
    /// Builds the structure; constructions are carried to `order`.
    pub fn build(&self, order: i32) -> Result<FrobeniusTypeStructure> {
        match self {
            StructureSource::Ftype(f) => {
                f.validate()?;
                Ok(f.clone())
            }
            StructureSource::Filtration(d) => filtration_to_ftype(d),
            StructureSource::ShiftFamily { weight, free } => {
                let free = free.iter().map(|c| t_series(c, order)).collect::<Result<Vec<_>>>()?;
                filtration_to_ftype(&shift_family(*weight, &free, order)?)
            }
            StructureSource::Jacobi(p) => {
                let jf = jacobi_to_filtration(&p.algebra()?, None, order)?;
                filtration_to_ftype(&jf.data)
            }
        }
    }

    pub fn filtration(&self, order: i32) -> Result<Option<FiltrationData>> {
        match self {
            StructureSource::Ftype(_) => Ok(None),
            StructureSource::Filtration(d) => Ok(Some(d.clone())),
            StructureSource::ShiftFamily { weight, free } => {
                let free = free.iter().map(|c| t_series(c, order)).collect::<Result<Vec<_>>>()?;
                Ok(Some(shift_family(*weight, &free, order)?))
            }
            StructureSource::Jacobi(p) => Ok(Some(jacobi_to_filtration(&p.algebra()?, None, order)?.data)),
        }
    }
}

fn t_series(coeffs: &[String], order: i32) -> Result<TruncSeries> {
    let tv = vars(&["t"]);
    let mut terms = Vec::new();
    for (k, c) in coeffs.iter().enumerate() {
        if k as i32 > order {
            break;
        }
        terms.push((MultiIndex(vec![k as u32]), parse_rat(c)?));
    }
    TruncSeries::from_terms(&tv, order, terms)
}

pub fn rationals(v: &[String]) -> Result<Vec<Rational>> {
    v.iter().map(|s| parse_rat(s)).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConnectionInput {
    pub structure: StructureSource,
    pub weight: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniversalInput {
    pub pencil: ConnectionPencil,
    pub zeta: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructInput {
    pub structure: StructureSource,
    /// Defaults to the first frame vector.
    #[serde(default)]
    pub zeta: Option<Vec<String>>,
}

impl ReconstructInput {
    pub fn initial_data(&self, order: i32) -> Result<InitialData> {
        let ftype = self.structure.build(order)?;
        let zeta = match &self.zeta {
            Some(z) => rationals(z)?,
            None => {
                let mut z = vec![Rational::from_integer(0.into()); ftype.rank()];
                if let Some(first) = z.first_mut() {
                    *first = Rational::from_integer(1.into());
                }
                z
            }
        };
        InitialData::new(ftype, zeta)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareInput {
    pub first: FrobeniusGermData,
    pub second: FrobeniusGermData,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingInput {
    pub pencil: ConnectionPencil,
    pub pairing: PairingMatrix,
}
