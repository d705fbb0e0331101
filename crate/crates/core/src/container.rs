//! Self-describing tensor container.
//!
//! Layout: the 8-byte magic `HGRTNSR1`, a little-endian `u64` header length,
//! a JSON header (`meta` plus a tensor table), then raw little-endian tensor
//! data in table order. Tensors are stored in their own dtype and converted
//! on read when the requested scalar differs.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"HGRTNSR1";

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    dtype: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: serde_json::Value,
    tensors: Vec<Entry>,
}

/// Serialize `meta` and named tensors into bytes.
pub fn encode<T: Scalar>(meta: &serde_json::Value, tensors: &[(&str, &Tensor<T>)]) -> Result<Vec<u8>> {
    let header = Header {
        meta: meta.clone(),
        tensors: tensors
            .iter()
            .map(|(n, t)| Entry {
                name: n.to_string(),
                shape: t.shape().to_vec(),
                dtype: T::DTYPE.to_string(),
            })
            .collect(),
    };
    let hjson = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    let width = if T::DTYPE == "f32" { 4 } else { 8 };
    let total: usize = tensors.iter().map(|(_, t)| t.len()).sum();
    let mut out = Vec::with_capacity(16 + hjson.len() + total * width);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(hjson.len() as u64).to_le_bytes());
    out.extend_from_slice(&hjson);
    for (_, t) in tensors {
        for &v in t.data() {
            if width == 4 {
                out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
            } else {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Decoded container.
pub struct Decoded<T> {
    pub meta: serde_json::Value,
    pub tensors: Vec<(String, Tensor<T>)>,
}

pub fn decode<T: Scalar>(bytes: &[u8]) -> Result<Decoded<T>> {
    let bad = |m: &str| Error::Format(format!("tensor container: {m}"));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| Error::Format(e.to_string()))?;
    let mut cursor = &bytes[16 + hlen..];
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for e in header.tensors {
        let n: usize = e.shape.iter().product();
        let width = match e.dtype.as_str() {
            "f32" => 4,
            "f64" => 8,
            d => return Err(bad(&format!("unknown dtype {d}"))),
        };
        let mut data = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            cursor.read_exact(&mut buf[..width]).map_err(|_| bad("truncated data"))?;
            let v = if width == 4 {
                f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64
            } else {
                f64::from_le_bytes(buf)
            };
            data.push(T::from_f64_lossy(v));
        }
        tensors.push((e.name, Tensor::from_vec(&e.shape, data)?));
    }
    if !cursor.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(Decoded {
        meta: header.meta,
        tensors,
    })
}

pub fn write_file<T: Scalar>(path: &Path, meta: &serde_json::Value, tensors: &[(&str, &Tensor<T>)]) -> Result<()> {
    let bytes = encode(meta, tensors)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file<T: Scalar>(path: &Path) -> Result<Decoded<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
