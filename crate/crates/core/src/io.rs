//! Field dumps and number formatting shared by the command-line tools.
//!
//! A dump is a header (`m`, grid, lengths, twist, spinor dimension `N`)
//! plus the values in row-major grid order, spinor index fastest, each
//! complex entry as `re, im`. The JSON form stores both in one object; the
//! binary form is the magic `PDSF`, a little-endian `u32` header length,
//! the header as JSON, then `2·N·sites` little-endian `f64`s.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{SpinorField, TorusModel};

const MAGIC: &[u8; 4] = b"PDSF";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub m: usize,
    pub grid: Vec<usize>,
    pub lengths: Vec<f64>,
    pub twist: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
}

impl FieldHeader {
    pub fn of(field: &SpinorField) -> Self {
        let model = field.model();
        Self {
            m: model.m(),
            grid: model.grid().to_vec(),
            lengths: model.lengths().to_vec(),
            twist: model.twist().to_vec(),
            n: field.spinor_dim(),
        }
    }

    pub fn model(&self) -> Result<TorusModel> {
        if self.grid.len() != self.m {
            return Err(Error::InvalidModel(format!("header m = {} but grid has {} axes", self.m, self.grid.len())));
        }
        TorusModel::new(self.lengths.clone(), self.grid.clone(), self.twist.clone())
    }

    fn value_count(&self) -> usize {
        self.grid.iter().product::<usize>() * self.n
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDump {
    header: FieldHeader,
    /// Interleaved `re, im`.
    values: Vec<f64>,
}

fn interleaved(field: &SpinorField) -> Vec<f64> {
    field.values().iter().flat_map(|z| [z.re, z.im]).collect()
}

fn assemble(header: &FieldHeader, flat: &[f64]) -> Result<SpinorField> {
    if flat.len() != 2 * header.value_count() {
        return Err(Error::ShapeMismatch(format!("header wants {} reals, found {}", 2 * header.value_count(), flat.len())));
    }
    let model = Arc::new(header.model()?);
    let values = flat.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    SpinorField::from_values(model, header.n, values)
}

pub fn write_field_json<W: Write>(w: W, field: &SpinorField) -> Result<()> {
    let dump = JsonDump { header: FieldHeader::of(field), values: interleaved(field) };
    serde_json::to_writer(w, &dump)?;
    Ok(())
}

pub fn read_field_json<R: Read>(r: R) -> Result<SpinorField> {
    let dump: JsonDump = serde_json::from_reader(r)?;
    assemble(&dump.header, &dump.values)
}

pub fn write_field_binary<W: Write>(mut w: W, field: &SpinorField) -> Result<()> {
    let header = serde_json::to_vec(&FieldHeader::of(field))?;
    let len = u32::try_from(header.len()).map_err(|_| Error::InvalidArgument("field header too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(16 * field.values().len());
    for x in interleaved(field) {
        body.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read_field_binary<R: Read>(mut r: R) -> Result<SpinorField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("not a spinor field dump".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut header)?;
    let header: FieldHeader = serde_json::from_slice(&header)?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() % 8 != 0 {
        return Err(Error::ShapeMismatch("truncated field body".into()));
    }
    let flat: Vec<f64> = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    assemble(&header, &flat)
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
