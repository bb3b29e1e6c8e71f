//! Binary model checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "SRMC" | version u8 | latent_index u32 | layer_count u32
//! per layer:
//!   in u32 | out u32 | activation u8 (0 none, 1 tanh, 2 gtanh)
//!   gtanh only: correction u8 | m u32 | kind u8 | has_seed u8 | seed u64
//!               | sha256 fingerprint (64 ascii hex) | m·out f64 basis rows
//!   out·in f64 weights (row-major) | out f64 bias
//! ```

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};

use super::model::{Activation, Layer, MlpModel};
use crate::activation::GeneralizedTanh;
use crate::basis::{BasisKind, BasisSet};
use crate::error::{Result, SrmError};

const MAGIC: &[u8; 4] = b"SRMC";
pub const CHECKPOINT_VERSION: u8 = 1;

const KINDS: [BasisKind; 6] = [
    BasisKind::Standard,
    BasisKind::Elementwise,
    BasisKind::Simplex,
    BasisKind::Thompson,
    BasisKind::Random,
    BasisKind::Custom,
];

fn kind_tag(kind: BasisKind) -> u8 {
    KINDS.iter().position(|&k| k == kind).expect("every kind is listed") as u8
}

fn write_f64s<'a>(out: &mut Vec<u8>, values: impl Iterator<Item = &'a f64>) {
    for v in values {
        out.write_f64::<LittleEndian>(*v).expect("writing to a Vec cannot fail");
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect()
}

pub fn checkpoint_bytes(model: &MlpModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(CHECKPOINT_VERSION);
    let w = |v: u32, out: &mut Vec<u8>| out.write_u32::<LittleEndian>(v).expect("vec write");
    w(model.latent_index as u32, &mut out);
    w(model.layers.len() as u32, &mut out);
    for layer in &model.layers {
        w(layer.in_dim() as u32, &mut out);
        w(layer.out_dim() as u32, &mut out);
        match &layer.activation {
            Activation::None => out.push(0),
            Activation::ElementwiseTanh => out.push(1),
            Activation::GTanh(act) => {
                out.push(2);
                out.push(act.apply_correction as u8);
                let basis = act.basis();
                w(basis.len() as u32, &mut out);
                out.push(kind_tag(basis.kind));
                out.push(basis.seed.is_some() as u8);
                out.write_u64::<LittleEndian>(basis.seed.unwrap_or(0)).expect("vec write");
                out.extend_from_slice(basis.fingerprint().as_bytes());
                write_f64s(&mut out, row_major(basis.matrix()).iter());
            }
        }
        write_f64s(&mut out, row_major(&layer.weight).iter());
        write_f64s(&mut out, layer.bias.iter());
    }
    out
}

pub fn save_checkpoint(model: &MlpModel, path: &Path) -> Result<()> {
    fs::write(path, checkpoint_bytes(model))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<MlpModel> {
    parse_checkpoint(&fs::read(path)?)
}

fn truncated(e: std::io::Error) -> SrmError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        SrmError::TruncatedFile("checkpoint ended early".into())
    } else {
        SrmError::Io(e)
    }
}

fn read_f64s(cur: &mut Cursor<&[u8]>, count: usize) -> Result<Vec<f64>> {
    let remaining = cur.get_ref().len() as u64 - cur.position();
    if remaining < 8 * count as u64 {
        return Err(SrmError::TruncatedFile("checkpoint ended early".into()));
    }
    let mut v = vec![0.0; count];
    cur.read_f64_into::<LittleEndian>(&mut v).map_err(truncated)?;
    Ok(v)
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<MlpModel> {
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(SrmError::BadMagic {
            expected: u32::from_be_bytes(*MAGIC),
            found: u32::from_be_bytes(magic),
        });
    }
    let version = cur.read_u8().map_err(truncated)?;
    if version != CHECKPOINT_VERSION {
        return Err(SrmError::InvalidInput(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let latent_index = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let count = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let mut layers = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let in_dim = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let out_dim = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let activation = match cur.read_u8().map_err(truncated)? {
            0 => Activation::None,
            1 => Activation::ElementwiseTanh,
            2 => {
                let correction = cur.read_u8().map_err(truncated)? != 0;
                let m = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
                let kind = *KINDS
                    .get(cur.read_u8().map_err(truncated)? as usize)
                    .ok_or_else(|| SrmError::InvalidInput("unknown basis kind tag".into()))?;
                let has_seed = cur.read_u8().map_err(truncated)? != 0;
                let seed = cur.read_u64::<LittleEndian>().map_err(truncated)?;
                let mut fp = [0u8; 64];
                cur.read_exact(&mut fp).map_err(truncated)?;
                let rows = read_f64s(&mut cur, m * out_dim)?;
                let basis = BasisSet::from_rows(
                    DMatrix::from_row_slice(m, out_dim, &rows),
                    kind,
                    has_seed.then_some(seed),
                )?;
                if basis.fingerprint().as_bytes() != fp {
                    return Err(SrmError::InvalidInput(
                        "checkpoint basis does not match its fingerprint".into(),
                    ));
                }
                Activation::GTanh(GeneralizedTanh::from_shared(Arc::new(basis), correction)?)
            }
            t => return Err(SrmError::InvalidInput(format!("unknown activation tag {t}"))),
        };
        let weight = DMatrix::from_row_slice(out_dim, in_dim, &read_f64s(&mut cur, out_dim * in_dim)?);
        let bias = DVector::from_vec(read_f64s(&mut cur, out_dim)?);
        layers.push(Layer {
            weight,
            bias,
            activation,
        });
    }
    if cur.position() as usize != bytes.len() {
        return Err(SrmError::InvalidInput("trailing bytes after checkpoint".into()));
    }
    MlpModel::new(layers, latent_index)
}
