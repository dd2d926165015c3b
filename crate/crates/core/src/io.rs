//! JSON wire formats.
//!
//! * complex scalar: `[re, im]` (a bare number is accepted as a real scalar)
//! * matrix: row-major array of rows
//! * tuple: `{"n": …, "d": …, "hermitian": bool, "mats": [matrix, …]}`

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{ComplexMatrix, OperatorTuple, C64};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarJson {
    Complex([f64; 2]),
    Real(f64),
}

impl From<ScalarJson> for C64 {
    fn from(s: ScalarJson) -> Self {
        match s {
            ScalarJson::Complex([re, im]) => C64::new(re, im),
            ScalarJson::Real(re) => C64::new(re, 0.0),
        }
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: Vec<Vec<ScalarJson>>) -> Result<ComplexMatrix, Error> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::InvalidInput("matrix has no rows".into()));
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|row| row.len() != cols) {
        return Err(Error::InvalidInput("matrix rows must be non-empty and of equal length".into()));
    }
    let flat: Vec<C64> = rows.into_iter().flatten().map(C64::from).collect();
    Ok(DMatrix::from_row_slice(r, cols, &flat))
}

pub mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> Result<S::Ok, S::Error> {
        matrix_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexMatrix, D::Error> {
        let rows = Vec::<Vec<ScalarJson>>::deserialize(d)?;
        matrix_from_json(rows).map_err(serde::de::Error::custom)
    }
}

pub mod matrix_list_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[ComplexMatrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(matrix_to_json).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<ComplexMatrix>, D::Error> {
        let raw = Vec::<Vec<Vec<ScalarJson>>>::deserialize(d)?;
        raw.into_iter().map(|m| matrix_from_json(m).map_err(serde::de::Error::custom)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TupleJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default)]
    pub hermitian: Option<bool>,
    pub mats: Vec<Vec<Vec<ScalarJson>>>,
}

impl TryFrom<TupleJson> for OperatorTuple {
    type Error = Error;

    fn try_from(j: TupleJson) -> Result<Self, Error> {
        let mats = j.mats.into_iter().map(matrix_from_json).collect::<Result<Vec<_>, _>>()?;
        if let Some(d) = j.d {
            if d != mats.len() {
                return Err(Error::InvalidInput(format!("declared d = {d} but {} matrices given", mats.len())));
            }
        }
        let t = match j.hermitian {
            Some(h) => OperatorTuple::new(mats, h)?,
            None => OperatorTuple::auto(mats)?,
        };
        if let Some(n) = j.n {
            if n != t.n() {
                return Err(Error::InvalidInput(format!("declared n = {n} but matrices are {0}x{0}", t.n())));
            }
        }
        Ok(t)
    }
}

impl From<OperatorTuple> for TupleJson {
    fn from(t: OperatorTuple) -> Self {
        let to_scalars = |m: &ComplexMatrix| {
            matrix_to_json(m).into_iter().map(|row| row.into_iter().map(ScalarJson::Complex).collect()).collect()
        };
        TupleJson {
            n: Some(t.n()),
            d: Some(t.d()),
            hermitian: Some(t.is_hermitian()),
            mats: t.mats().iter().map(to_scalars).collect(),
        }
    }
}
