//! Binary parameter checkpoints.
//!
//! Layout: the 4-byte magic `HRCK`, a little-endian `u32` format version, a
//! length-prefixed UTF-8 kind tag, a `u32` block count, then per block a
//! length-prefixed name and `u64` rows/cols, followed by every block's values
//! as little-endian `f64` in declaration order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamSet};

const MAGIC: &[u8; 4] = b"HRCK";
const VERSION: u32 = 1;

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_params(kind: &str, params: &ParamSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * params.num_scalars());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    write_str(&mut out, kind);
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for b in params.blocks() {
        write_str(&mut out, &b.name);
        out.extend_from_slice(&(b.value.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(b.value.cols() as u64).to_le_bytes());
    }
    for b in params.blocks() {
        for v in b.value.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.bad("truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| self.bad("non-UTF-8 name"))
    }

    fn bad(&self, reason: &str) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            reason: reason.to_string(),
        }
    }
}

pub fn decode_params(bytes: &[u8], expected_kind: &str, path: &Path) -> Result<ParamSet> {
    let mut c = Cursor { bytes, pos: 0, path };
    if c.take(4)? != MAGIC {
        return Err(c.bad("bad magic"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(c.bad(&format!("unsupported version {version}")));
    }
    let kind = c.string()?;
    if kind != expected_kind {
        return Err(c.bad(&format!("expected a `{expected_kind}` checkpoint, found `{kind}`")));
    }
    let n = c.u32()? as usize;
    let mut shapes = Vec::with_capacity(n);
    for _ in 0..n {
        let name = c.string()?;
        let rows = c.u64()? as usize;
        let cols = c.u64()? as usize;
        shapes.push((name, rows, cols));
    }
    let mut params = ParamSet::new();
    for (name, rows, cols) in shapes {
        let raw = c.take(rows * cols * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        params.push(name, Matrix::from_vec(rows, cols, data)?);
    }
    if c.pos != bytes.len() {
        return Err(c.bad("trailing bytes"));
    }
    Ok(params)
}

pub fn save_params(path: &Path, kind: &str, params: &ParamSet) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_params(kind, params))?;
    Ok(())
}

pub fn load_params(path: &Path, kind: &str) -> Result<ParamSet> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_params(&bytes, kind, path)
}

/// Loaded blocks must carry the same names and shapes as `template`.
pub fn check_layout(loaded: &ParamSet, template: &ParamSet, path: &Path) -> Result<()> {
    let same = loaded.len() == template.len()
        && loaded
            .blocks()
            .iter()
            .zip(template.blocks())
            .all(|(a, b)| a.name == b.name && a.value.shape() == b.value.shape());
    if same {
        Ok(())
    } else {
        Err(Error::Format {
            path: path.to_path_buf(),
            reason: "parameter layout does not match the configured model".into(),
        })
    }
}
