//! Binary model files, plain-text vector export and loss traces.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! magic  b"L2VM"
//! u32    format version (1)
//! u64    vocabulary size
//! u32    feature count F
//! u8     architecture (0 = skip-gram, 1 = CBOW)
//! per token: u32 byte length, UTF-8 bytes, u64 frequency
//! f32 × |V|·F   input matrix, row-major
//! f32 × |V|·F   output matrix, row-major
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Architecture, EmbeddingModel, EpochStats, TrainingConfig};
use crate::corpus::Vocabulary;
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"L2VM";
pub const MODEL_VERSION: u32 = 1;

pub fn write_model<W: Write>(mut w: W, model: &EmbeddingModel) -> Result<()> {
    w.write_all(MODEL_MAGIC)?;
    w.write_u32::<LittleEndian>(MODEL_VERSION)?;
    w.write_u64::<LittleEndian>(model.vocab.len() as u64)?;
    w.write_u32::<LittleEndian>(model.features() as u32)?;
    w.write_u8(model.config.architecture.flag())?;
    for (tok, &freq) in model.vocab.tokens().iter().zip(model.vocab.frequencies()) {
        w.write_u32::<LittleEndian>(tok.len() as u32)?;
        w.write_all(tok.as_bytes())?;
        w.write_u64::<LittleEndian>(freq)?;
    }
    for &x in model.input.iter().chain(&model.output) {
        w.write_f32::<LittleEndian>(x)?;
    }
    Ok(())
}

/// Reads a model written by [`write_model`]. Only the architecture and
/// feature count of the training configuration are stored; everything else
/// comes back at its default.
pub fn read_model<R: Read>(mut r: R) -> Result<EmbeddingModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let n = r.read_u64::<LittleEndian>()? as usize;
    let f = r.read_u32::<LittleEndian>()? as usize;
    let flag = r.read_u8()?;
    let architecture = Architecture::from_flag(flag)
        .ok_or_else(|| Error::Format(format!("unknown architecture flag {flag}")))?;

    let mut tokens = Vec::with_capacity(n);
    let mut freq = Vec::with_capacity(n);
    for _ in 0..n {
        let len = r.read_u32::<LittleEndian>()? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        tokens.push(String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?);
        freq.push(r.read_u64::<LittleEndian>()?);
    }
    let vocab = Vocabulary::from_parts(tokens, freq, 1)?;
    let mut input = vec![0f32; n * f];
    let mut output = vec![0f32; n * f];
    r.read_f32_into::<LittleEndian>(&mut input)?;
    r.read_f32_into::<LittleEndian>(&mut output)?;
    let config = TrainingConfig {
        features: f,
        ..TrainingConfig::for_architecture(architecture)
    };
    EmbeddingModel::from_parts(vocab, config, input, output)
}

/// One line per token: the token, then its F input-vector components.
pub fn write_text_vectors<W: Write>(mut w: W, model: &EmbeddingModel) -> Result<()> {
    for (i, tok) in model.vocab.tokens().iter().enumerate() {
        write!(w, "{tok}")?;
        for x in model.input_row(i) {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_loss_csv<W: Write>(w: W, epochs: &[EpochStats]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for e in epochs {
        csv.serialize(e)?;
    }
    csv.flush()?;
    Ok(())
}
