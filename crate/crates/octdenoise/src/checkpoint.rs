//! Model checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic        4   "OCTM"
//! version      u32
//! variant      u8   0 rnn_oct, 1 drnn, 2 rnn_avg, 3 rnn_gan
//! steps        u32  analysis patch depth L_t
//! width        u32  analysis patch width N_x
//! left, right  u32 ×2
//! output       u8   0 one pixel per step, 1 full row per step
//! norm         f64 ×2  dB range mapped onto [0, 1]
//! hidden       u32
//! blur flag    u8   1 then rows u32, cols u32, sigma f64
//! disc flag    u8   1 then input u32, hidden u32
//! tensors      u32  count, then per tensor:
//!                   name length u16, name bytes, rank u8, dims u32 × rank, f64 payload
//! checksum     u64  FNV-1a over every preceding byte
//! ```

use std::collections::HashMap;
use std::path::Path;

use octdenoise_core::despeckler::{
    BlurSpec, Discriminator, Normalization, OutputWidth, PatchGeometry, RnnDespeckler, RnnWeights, Tensor, Variant,
};

use crate::bytes::{fnv1a, to_u32, Reader, Writer};
use crate::error::{at, IoError, Result};

pub const MODEL_MAGIC: [u8; 4] = *b"OCTM";
pub const MODEL_VERSION: u32 = 1;

fn put_tensor(out: &mut Vec<u8>, t: &Tensor<'_>) -> Result<()> {
    out.put_u16(t.name.len() as u16);
    out.extend_from_slice(t.name.as_bytes());
    out.put_u8(t.dims.len() as u8);
    for &d in &t.dims {
        out.put_u32(to_u32(d, "tensor dimension")?);
    }
    t.data.iter().for_each(|&v| out.put_f64(v));
    Ok(())
}

pub fn encode_model(model: &RnnDespeckler) -> Result<Vec<u8>> {
    if !model.weights().is_finite() {
        return Err(octdenoise_core::Error::NonFinite("weights").into());
    }
    let g = model.geometry();
    let n = model.normalization();
    let mut out = Vec::new();
    out.extend_from_slice(&MODEL_MAGIC);
    out.put_u32(MODEL_VERSION);
    out.put_u8(model.variant().tag());
    for v in [g.steps(), g.width(), g.left(), g.right()] {
        out.put_u32(to_u32(v, "geometry")?);
    }
    out.put_u8(match g.output() {
        OutputWidth::Single => 0,
        OutputWidth::Full => 1,
    });
    out.put_f64(n.min_db());
    out.put_f64(n.max_db());
    out.put_u32(to_u32(model.hidden(), "hidden")?);
    match model.preprocess() {
        Some(b) => {
            out.put_u8(1);
            out.put_u32(to_u32(b.rows, "blur rows")?);
            out.put_u32(to_u32(b.cols, "blur cols")?);
            out.put_f64(b.sigma);
        }
        None => out.put_u8(0),
    }
    match model.discriminator() {
        Some(d) => {
            out.put_u8(1);
            out.put_u32(to_u32(d.input(), "discriminator input")?);
            out.put_u32(to_u32(d.hidden(), "discriminator hidden")?);
        }
        None => out.put_u8(0),
    }
    let mut tensors: Vec<Tensor<'_>> = model.weights().tensors().to_vec();
    if let Some(d) = model.discriminator() {
        tensors.extend(d.tensors());
    }
    out.put_u32(tensors.len() as u32);
    for t in &tensors {
        put_tensor(&mut out, t)?;
    }
    let sum = fnv1a(&out);
    out.put_u64(sum);
    Ok(out)
}

struct Loaded {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn take_tensors(table: &mut HashMap<String, Loaded>, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    names
        .iter()
        .map(|&name| {
            table
                .remove(name)
                .map(|t| t.data)
                .ok_or_else(|| IoError::Malformed(format!("missing tensor `{name}`")))
        })
        .collect()
}

pub fn decode_model(bytes: &[u8]) -> Result<RnnDespeckler> {
    let mut r = Reader::new(bytes, "checkpoint header");
    let magic: [u8; 4] = r.array()?;
    if magic != MODEL_MAGIC {
        return Err(IoError::BadMagic {
            found: magic,
            expected: MODEL_MAGIC,
        });
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(IoError::UnsupportedVersion {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    if bytes.len() < 16 {
        return Err(IoError::Truncated {
            what: "checkpoint",
            needed: 16,
            missing: 16 - bytes.len(),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    let computed = fnv1a(body);
    if stored != computed {
        return Err(IoError::Checksum { stored, computed });
    }
    let mut r = Reader::new(body, "checkpoint");
    r.take(8)?;

    let tag = r.u8()?;
    let variant = Variant::from_tag(tag).ok_or_else(|| IoError::Malformed(format!("unknown variant tag {tag}")))?;
    let (steps, width, left, right) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let output = match r.u8()? {
        0 => OutputWidth::Single,
        1 => OutputWidth::Full,
        t => return Err(IoError::Malformed(format!("unknown output tag {t}"))),
    };
    let geometry = PatchGeometry::new(steps, width, left, right, output)?;
    let normalization = Normalization::new(r.f64()?, r.f64()?)?;
    let hidden = r.u32()? as usize;
    let preprocess = match r.u8()? {
        0 => None,
        _ => Some(BlurSpec::new(r.u32()? as usize, r.u32()? as usize, r.f64()?)?),
    };
    let disc_shape = match r.u8()? {
        0 => None,
        _ => Some((r.u32()? as usize, r.u32()? as usize)),
    };

    let count = r.u32()? as usize;
    let mut table = HashMap::new();
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| IoError::Malformed("tensor name is not UTF-8".into()))?;
        let rank = r.u8()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or(IoError::DimensionOverflow {
            rows: dims.first().copied().unwrap_or(0) as u64,
            cols: dims.get(1).copied().unwrap_or(0) as u64,
        })?;
        if n.checked_mul(8).is_none_or(|b| b > r.remaining()) {
            return Err(IoError::Truncated {
                what: "tensor payload",
                needed: n.saturating_mul(8),
                missing: n.saturating_mul(8).saturating_sub(r.remaining()),
            });
        }
        let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        if table.insert(name.clone(), Loaded { dims, data }).is_some() {
            return Err(IoError::Malformed(format!("duplicate tensor `{name}`")));
        }
    }
    if r.remaining() > 0 {
        return Err(IoError::TrailingBytes(r.remaining()));
    }

    let expected = RnnWeights::zeros(geometry.width(), hidden, geometry.output_width());
    for t in expected.tensors() {
        match table.get(t.name) {
            Some(l) if l.dims == t.dims => {}
            Some(l) => {
                return Err(IoError::Malformed(format!(
                    "tensor `{}` has shape {:?}, expected {:?}",
                    t.name, l.dims, t.dims
                )))
            }
            None => return Err(IoError::Malformed(format!("missing tensor `{}`", t.name))),
        }
    }
    let w = take_tensors(&mut table, &RnnWeights::TENSOR_NAMES)?;
    let refs: Vec<&[f64]> = w.iter().map(Vec::as_slice).collect();
    let weights = RnnWeights::from_tensors(geometry.width(), hidden, geometry.output_width(), &refs)?;
    let disc = match disc_shape {
        Some((input, h)) => {
            let d = take_tensors(&mut table, &Discriminator::TENSOR_NAMES)?;
            let refs: Vec<&[f64]> = d.iter().map(Vec::as_slice).collect();
            Some(Discriminator::from_tensors(input, h, &refs)?)
        }
        None => None,
    };
    if let Some(name) = table.keys().next() {
        return Err(IoError::Malformed(format!("unexpected tensor `{name}`")));
    }
    Ok(RnnDespeckler::new(weights, geometry, normalization, variant, preprocess)?.with_discriminator(disc))
}

pub fn save_model(path: &Path, model: &RnnDespeckler) -> Result<()> {
    std::fs::write(path, encode_model(model)?).map_err(at(path))
}

pub fn load_model(path: &Path) -> Result<RnnDespeckler> {
    decode_model(&std::fs::read(path).map_err(at(path))?)
}
