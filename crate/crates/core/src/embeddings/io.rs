//! Model files.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! "DHEM1"                      5 bytes magic
//! dim                          u32
//! vocab size                   u32
//! vocab size x { len: u32, utf-8 word bytes, count: u64 }
//! input matrix                 vocab size x dim f32, row-major
//! context matrix               vocab size x dim f32, row-major
//! ```
//!
//! The text export writes one `word v1 v2 ... vd` line per word.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::EmbeddingModel;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"DHEM1";

pub fn write_model_to<W: Write>(model: &EmbeddingModel, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(model.dim() as u32).to_le_bytes())?;
    w.write_all(&(model.len() as u32).to_le_bytes())?;
    for (word, count) in model.words().iter().zip(model.counts()) {
        w.write_all(&(word.len() as u32).to_le_bytes())?;
        w.write_all(word.as_bytes())?;
        w.write_all(&count.to_le_bytes())?;
    }
    for x in model.raw_input_matrix().iter().chain(model.raw_context_matrix()) {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()
}

pub fn write_model(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_model_to(model, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

fn read_exact<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated {what}: {e}")))?;
    Ok(buf)
}

pub fn read_model_from<R: Read>(mut r: R) -> Result<EmbeddingModel> {
    let magic: [u8; 5] = read_exact(&mut r, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let dim = u32::from_le_bytes(read_exact(&mut r, "dim")?) as usize;
    let n = u32::from_le_bytes(read_exact(&mut r, "vocab size")?) as usize;
    let mut words = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    for _ in 0..n {
        let len = u32::from_le_bytes(read_exact(&mut r, "word length")?) as usize;
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes)
            .map_err(|e| Error::Format(format!("truncated word: {e}")))?;
        words.push(String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?);
        counts.push(u64::from_le_bytes(read_exact(&mut r, "count")?));
    }
    let mut read_matrix = |what: &str| -> Result<Vec<f32>> {
        let mut bytes = vec![0u8; n * dim * 4];
        r.read_exact(&mut bytes)
            .map_err(|e| Error::Format(format!("truncated {what} matrix: {e}")))?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    };
    let input = read_matrix("input")?;
    let context = read_matrix("context")?;
    EmbeddingModel::from_parts(dim, words, counts, input, context)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model_from(BufReader::new(file))
}

/// Writes post-processed vectors when available, raw input vectors otherwise.
pub fn write_text<W: Write>(model: &EmbeddingModel, mut w: W) -> std::io::Result<()> {
    for (i, word) in model.words().iter().enumerate() {
        write!(w, "{word}")?;
        if model.is_postprocessed() {
            for x in model.row(i) {
                write!(w, " {x}")?;
            }
        } else {
            for x in model.raw_input(i) {
                write!(w, " {x}")?;
            }
        }
        writeln!(w)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_layout() {
        let m = EmbeddingModel::from_parts(
            2,
            vec!["ab".into(), "c".into()],
            vec![7, 3],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.5, 0.25, 0.0, -1.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_model_to(&m, &mut buf).unwrap();
        assert_eq!(&buf[..5], b"DHEM1");
        assert_eq!(&buf[5..9], &2u32.to_le_bytes());
        assert_eq!(&buf[9..13], &2u32.to_le_bytes());
        assert_eq!(&buf[13..17], &2u32.to_le_bytes());
        assert_eq!(&buf[17..19], b"ab");
        assert_eq!(&buf[19..27], &7u64.to_le_bytes());
        // header + vocab + 2 matrices of 4 floats
        assert_eq!(buf.len(), 13 + (4 + 2 + 8) + (4 + 1 + 8) + 8 * 4);
        let back = read_model_from(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert!(read_model_from(&buf[..buf.len() - 1]).is_err());
        assert!(read_model_from(&b"DHEM2"[..]).is_err());
    }

    #[test]
    fn text_export() {
        let m = EmbeddingModel::from_parts(2, vec!["x".into()], vec![1], vec![1.0, -0.5], vec![0.0, 0.0])
            .unwrap();
        let mut out = Vec::new();
        write_text(&m, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x 1 -0.5\n");
    }
}
