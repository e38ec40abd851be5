//! Pretrained word vectors in the word2vec binary and text formats.
//!
//! Binary layout: ASCII header `"<count> <dim>\n"`, then per word the word's
//! bytes, one space, `dim` little-endian f32 values and an optional newline.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, OOV, PAD};
use super::TextError;
use crate::tensor::{uniform, Tensor};

/// Range for rows absent from the pretrained file.
pub const MISSING_INIT: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingFormat {
    Binary,
    Text,
    #[default]
    Auto,
}

/// Vocabulary-aligned embedding matrix. Row 0 (padding) is zero and never updated.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub vocab: Vocabulary,
    pub matrix: Tensor<f32>,
    pub trainable: bool,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// Every row uniform in ±0.25 except the zero padding row.
    pub fn random<R: Rng + ?Sized>(vocab: Vocabulary, dim: usize, rng: &mut R) -> Self {
        let mut matrix = uniform::<f32, R>(&[vocab.len(), dim], MISSING_INIT, rng);
        matrix.row_mut(PAD).fill(0.0);
        EmbeddingTable {
            vocab,
            matrix,
            trainable: true,
        }
    }

    pub fn row(&self, token: &str) -> Option<&[f32]> {
        self.vocab.index_of(token).map(|i| self.matrix.row(i))
    }
}

/// Counting reader so format errors can name a byte offset.
struct Counted<R> {
    inner: R,
    pos: u64,
}

impl<R: BufRead> Counted<R> {
    fn read_until(&mut self, delim: u8, buf: &mut Vec<u8>) -> std::io::Result<usize> {
        let n = self.inner.read_until(delim, buf)?;
        self.pos += n as u64;
        Ok(n)
    }

    fn read_exact(&mut self, buf: &mut [u8]) -> std::io::Result<()> {
        self.inner.read_exact(buf)?;
        self.pos += buf.len() as u64;
        Ok(())
    }

    fn peek(&mut self) -> std::io::Result<Option<u8>> {
        Ok(self.inner.fill_buf()?.first().copied())
    }

    fn skip_byte(&mut self) {
        self.inner.consume(1);
        self.pos += 1;
    }
}

fn format_err(offset: u64, message: impl Into<String>) -> TextError {
    TextError::Format {
        offset,
        message: message.into(),
    }
}

fn parse_header(line: &[u8], offset: u64) -> Result<(usize, usize), TextError> {
    let text = std::str::from_utf8(line).map_err(|_| format_err(offset, "header is not ASCII"))?;
    let mut parts = text.split_whitespace();
    let count = parts.next().and_then(|p| p.parse().ok());
    let dim = parts.next().and_then(|p| p.parse().ok());
    match (count, dim, parts.next()) {
        (Some(c), Some(d), None) if d > 0 => Ok((c, d)),
        _ => Err(format_err(
            offset,
            format!("expected \"<count> <dim>\" header, found {:?}", text.trim_end()),
        )),
    }
}

/// Streams every (word, vector) pair of a binary file through `visit`.
/// Returns the header's (count, dim).
pub fn scan_binary<R: BufRead>(reader: R, mut visit: impl FnMut(&str, &[f32])) -> Result<(usize, usize), TextError> {
    let mut r = Counted { inner: reader, pos: 0 };
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(format_err(r.pos, "header line is not newline-terminated"));
    }
    let (count, dim) = parse_header(&line[..line.len() - 1], 0)?;
    let mut word = Vec::new();
    let mut raw = vec![0u8; dim * 4];
    let mut vector = vec![0f32; dim];
    for entry in 0..count {
        while r.peek()? == Some(b'\n') {
            r.skip_byte();
        }
        let start = r.pos;
        word.clear();
        r.read_until(b' ', &mut word)?;
        if word.last() != Some(&b' ') {
            return Err(format_err(
                start,
                format!("entry {entry}: unexpected end of file in word"),
            ));
        }
        word.pop();
        let at = r.pos;
        r.read_exact(&mut raw)
            .map_err(|_| format_err(at, format!("entry {entry}: truncated vector")))?;
        for (v, c) in vector.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        }
        visit(&String::from_utf8_lossy(&word), &vector);
    }
    Ok((count, dim))
}

/// Streams a text-format file: optional `"<count> <dim>"` header, then one
/// word and its values per line.
pub fn scan_text<R: BufRead>(reader: R, mut visit: impl FnMut(&str, &[f32])) -> Result<(usize, usize), TextError> {
    let mut offset = 0u64;
    let mut dim: Option<usize> = None;
    let mut count = 0usize;
    let mut vector = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let here = offset;
        offset += line.len() as u64 + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if lineno == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            dim = Some(parse_header(line.as_bytes(), here)?.1);
            continue;
        }
        let d = fields.len() - 1;
        match dim {
            None if d > 0 => dim = Some(d),
            Some(expected) if expected == d => {}
            _ => {
                return Err(format_err(
                    here,
                    format!("line {}: expected {} values, found {d}", lineno + 1, dim.unwrap_or(0)),
                ))
            }
        }
        vector.clear();
        for f in &fields[1..] {
            vector.push(
                f.parse::<f32>()
                    .map_err(|_| format_err(here, format!("line {}: bad number {f:?}", lineno + 1)))?,
            );
        }
        visit(fields[0], &vector);
        count += 1;
    }
    Ok((count, dim.unwrap_or(0)))
}

fn sniff(path: &Path) -> Result<EmbeddingFormat, TextError> {
    let mut head = Vec::new();
    File::open(path)?.take(1 << 16).read_to_end(&mut head)?;
    let Some(nl) = head.iter().position(|&b| b == b'\n') else {
        return Ok(EmbeddingFormat::Text);
    };
    let first = String::from_utf8_lossy(&head[..nl]);
    let fields: Vec<&str> = first.split_whitespace().collect();
    let is_header = fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok());
    if !is_header {
        return Ok(EmbeddingFormat::Text);
    }
    let dim: usize = fields[1].parse().unwrap_or(0);
    let rest = &head[nl + 1..];
    let line_end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
    let second = std::str::from_utf8(&rest[..line_end]).unwrap_or("");
    let parts: Vec<&str> = second.split_whitespace().collect();
    let textual = parts.len() == dim + 1 && parts[1..].iter().all(|p| p.parse::<f32>().is_ok());
    Ok(if textual {
        EmbeddingFormat::Text
    } else {
        EmbeddingFormat::Binary
    })
}

/// Loaded table plus the fraction of non-reserved vocabulary rows found in the file.
#[derive(Clone, Debug)]
pub struct LoadedEmbeddings {
    pub table: EmbeddingTable,
    pub coverage: f64,
}

/// Builds a vocabulary-aligned table from a pretrained file. Rows found in
/// the file are copied as-is (exact token match first, lowercased file
/// entries otherwise); the rest, including the shared OOV row, are drawn
/// uniform in ±0.25; the padding row is zero.
pub fn load_embeddings<R: Rng + ?Sized>(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    format: EmbeddingFormat,
    rng: &mut R,
) -> Result<LoadedEmbeddings, TextError> {
    let format = match format {
        EmbeddingFormat::Auto => sniff(path)?,
        f => f,
    };
    let reader = BufReader::new(File::open(path)?);
    let mut table = EmbeddingTable::random(vocab.clone(), dim, rng);
    // 0 = missing, 1 = lowercased match, 2 = exact match
    let mut found = vec![0u8; vocab.len()];
    let mut mismatch: Option<usize> = None;
    let mut visit = |word: &str, v: &[f32]| {
        if v.len() != dim {
            mismatch.get_or_insert(v.len());
            return;
        }
        if let Some(i) = vocab.index_of(word).filter(|&i| i > OOV) {
            table.matrix.row_mut(i).copy_from_slice(v);
            found[i] = 2;
        } else if let Some(i) = vocab.index_of(&word.to_lowercase()).filter(|&i| i > OOV) {
            if found[i] == 0 {
                table.matrix.row_mut(i).copy_from_slice(v);
                found[i] = 1;
            }
        }
    };
    let (_, file_dim) = match format {
        EmbeddingFormat::Binary => scan_binary(reader, &mut visit)?,
        _ => scan_text(reader, &mut visit)?,
    };
    if file_dim != dim || mismatch.is_some() {
        return Err(TextError::Format {
            offset: 0,
            message: format!(
                "embedding dimension {} does not match configured {dim}",
                mismatch.unwrap_or(file_dim)
            ),
        });
    }
    let real = vocab.len().saturating_sub(2);
    let hits = found.iter().skip(2).filter(|&&f| f > 0).count();
    let coverage = if real == 0 { 0.0 } else { hits as f64 / real as f64 };
    Ok(LoadedEmbeddings { table, coverage })
}

/// Words of a pretrained file, in file order.
pub fn embedding_words(path: &Path, format: EmbeddingFormat) -> Result<Vec<String>, TextError> {
    let format = match format {
        EmbeddingFormat::Auto => sniff(path)?,
        f => f,
    };
    let reader = BufReader::new(File::open(path)?);
    let mut words = Vec::new();
    let mut visit = |word: &str, _: &[f32]| words.push(word.to_string());
    match format {
        EmbeddingFormat::Binary => scan_binary(reader, &mut visit)?,
        _ => scan_text(reader, &mut visit)?,
    };
    Ok(words)
}

/// Writes every non-reserved row in vocabulary order in the binary format.
pub fn write_w2v_binary<W: Write>(mut w: W, table: &EmbeddingTable) -> Result<(), TextError> {
    let n = table.vocab.len().saturating_sub(2);
    writeln!(w, "{} {}", n, table.dim())?;
    for i in 2..table.vocab.len() {
        w.write_all(table.vocab.token(i).unwrap_or_default().as_bytes())?;
        w.write_all(b" ")?;
        for v in table.matrix.row(i) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Text variant: header then one word and its values per line.
pub fn write_w2v_text<W: Write>(mut w: W, table: &EmbeddingTable) -> Result<(), TextError> {
    let n = table.vocab.len().saturating_sub(2);
    writeln!(w, "{} {}", n, table.dim())?;
    for i in 2..table.vocab.len() {
        write!(w, "{}", table.vocab.token(i).unwrap_or_default())?;
        for v in table.matrix.row(i) {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
