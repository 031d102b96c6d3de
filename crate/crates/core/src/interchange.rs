//! Embedding and label interchange files.
//!
//! Embeddings travel in the EMB1 container: a fixed 20-byte little-endian
//! header followed by a row-major `f32` payload.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "EMB1"
//! 4       4     u32 version (= 1)
//! 8       4     u32 count
//! 12      4     u32 dim
//! 16      1     u8 dtype (1 = f32)
//! 17      3     zero padding
//! 20      ...   count * dim * 4 bytes
//! ```
//!
//! Labels travel as a UTF-8 CSV with the header `row,image_id,label`.

use std::fmt;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EMB1_MAGIC: [u8; 4] = *b"EMB1";
pub const EMB1_VERSION: u32 = 1;
pub const EMB1_HEADER_LEN: usize = 20;
pub const DTYPE_F32: u8 = 1;

const LABELS_HEADER: [&str; 3] = ["row", "image_id", "label"];

#[derive(Debug, Error)]
pub enum InterchangeError {
    #[error("bad magic {0:?}, expected \"EMB1\"")]
    BadMagic([u8; 4]),
    #[error("unsupported EMB1 version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("non-zero header padding")]
    BadPadding,
    #[error("header truncated: got {0} of 20 bytes")]
    TruncatedHeader(usize),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("declared size {count}x{dim} overflows")]
    Oversize { count: u64, dim: u64 },
    #[error("payload truncated: expected {expected} bytes, got {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("unexpected trailing bytes after payload")]
    TrailingBytes,
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("data length {len} is not a multiple of dim {dim}")]
    RaggedData { len: usize, dim: usize },
    #[error("count {0} does not fit the EMB1 u32 field")]
    TooLarge(usize),
    #[error("vector CSV line {line}: {msg}")]
    MalformedVector { line: usize, msg: String },
    #[error("labels header must be exactly `row,image_id,label`")]
    BadLabelsHeader,
    #[error("labels line {line}: {msg}")]
    MalformedLabel { line: usize, msg: String },
    #[error("labels line {line}: label {value} outside BIRADS range 1-6")]
    LabelOutOfRange { line: usize, value: i64 },
    #[error("labels line {line}: expected row index {expected}, found {found}")]
    Misaligned { line: usize, expected: usize, found: usize },
    #[error("alignment mismatch: {embeddings} embeddings vs {labels} labels")]
    CountMismatch { embeddings: usize, labels: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = InterchangeError> = std::result::Result<T, E>;

/// `count` row-major vectors of width `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    data: Vec<f32>,
    /// Name of the producing model, e.g. `densenet121`. Not stored in EMB1.
    pub source_tag: String,
}

impl EmbeddingSet {
    pub fn new(dim: usize, data: Vec<f32>, source_tag: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(InterchangeError::ZeroDim);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(InterchangeError::RaggedData { len: data.len(), dim });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(InterchangeError::NonFinite { row: pos / dim, col: pos % dim });
        }
        Ok(Self { dim, data, source_tag: source_tag.into() })
    }

    /// Builds a set from equal-width rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R], source_tag: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(InterchangeError::RaggedData { len: r.len(), dim });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data, source_tag)
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Widened copy as an `count x dim` matrix.
    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_iterator(
            self.count(),
            self.dim,
            self.data.iter().map(|&v| f64::from(v)),
        )
    }
}

/// Writes `set` as EMB1 and returns the number of bytes written.
pub fn write_embeddings<W: Write>(set: &EmbeddingSet, mut sink: W) -> Result<u64> {
    if let Some(pos) = set.data.iter().position(|v| !v.is_finite()) {
        return Err(InterchangeError::NonFinite { row: pos / set.dim, col: pos % set.dim });
    }
    let count = u32::try_from(set.count()).map_err(|_| InterchangeError::TooLarge(set.count()))?;
    let dim = u32::try_from(set.dim).map_err(|_| InterchangeError::TooLarge(set.dim))?;

    let mut header = [0u8; EMB1_HEADER_LEN];
    header[0..4].copy_from_slice(&EMB1_MAGIC);
    header[4..8].copy_from_slice(&EMB1_VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&count.to_le_bytes());
    header[12..16].copy_from_slice(&dim.to_le_bytes());
    header[16] = DTYPE_F32;
    sink.write_all(&header)?;

    let mut buf = Vec::with_capacity(set.dim * 4);
    for row in set.rows() {
        buf.clear();
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
    }
    sink.flush()?;
    Ok(EMB1_HEADER_LEN as u64 + set.data.len() as u64 * 4)
}

/// Parses an EMB1 stream. The returned set has an empty `source_tag`.
pub fn read_embeddings<R: Read>(mut source: R) -> Result<EmbeddingSet> {
    let mut header = [0u8; EMB1_HEADER_LEN];
    let got = read_up_to(&mut source, &mut header)?;
    if got < EMB1_HEADER_LEN {
        return Err(InterchangeError::TruncatedHeader(got));
    }
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != EMB1_MAGIC {
        return Err(InterchangeError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != EMB1_VERSION {
        return Err(InterchangeError::UnsupportedVersion(version));
    }
    let count = u32::from_le_bytes(header[8..12].try_into().unwrap()) as u64;
    let dim = u32::from_le_bytes(header[12..16].try_into().unwrap()) as u64;
    if header[16] != DTYPE_F32 {
        return Err(InterchangeError::UnsupportedDtype(header[16]));
    }
    if header[17..20] != [0, 0, 0] {
        return Err(InterchangeError::BadPadding);
    }
    if dim == 0 {
        return Err(InterchangeError::ZeroDim);
    }
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .filter(|&n| usize::try_from(n).is_ok())
        .ok_or(InterchangeError::Oversize { count, dim })?;

    // Grow with the data actually present instead of trusting the header.
    let mut payload = Vec::new();
    (&mut source).take(expected).read_to_end(&mut payload)?;
    if (payload.len() as u64) < expected {
        return Err(InterchangeError::Truncated { expected, actual: payload.len() as u64 });
    }
    let mut probe = [0u8; 1];
    if read_up_to(&mut source, &mut probe)? != 0 {
        return Err(InterchangeError::TrailingBytes);
    }

    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    EmbeddingSet::new(dim as usize, data, String::new())
}

fn read_up_to<R: Read>(source: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// A BIRADS assessment category restricted to 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Birads(u8);

impl Birads {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 6;

    pub fn new(value: u8) -> Option<Self> {
        (Self::MIN..=Self::MAX).contains(&value).then_some(Self(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Birads {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, String> {
        Self::new(value).ok_or_else(|| format!("BIRADS {value} outside 1-6"))
    }
}

impl From<Birads> for u8 {
    fn from(b: Birads) -> u8 {
        b.0
    }
}

impl fmt::Display for Birads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub row: usize,
    pub image_id: String,
    pub label: Birads,
}

/// Per-row image identifiers and labels, indexed by embedding row.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    rows: Vec<LabelRow>,
}

impl LabelTable {
    /// Builds a table from `(image_id, label)` pairs in row order.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Birads)>,
        S: Into<String>,
    {
        let rows = pairs
            .into_iter()
            .enumerate()
            .map(|(row, (id, label))| LabelRow { row, image_id: id.into(), label })
            .collect();
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[LabelRow] {
        &self.rows
    }

    pub fn label(&self, row: usize) -> Option<Birads> {
        self.rows.get(row).map(|r| r.label)
    }

    pub fn labels(&self) -> impl Iterator<Item = Birads> + '_ {
        self.rows.iter().map(|r| r.label)
    }
}

/// Parses a headerless or single-header CSV of floats, one vector per line.
/// A first line that does not parse as numbers is taken as a header.
pub fn read_vectors_csv<R: Read>(source: R) -> Result<EmbeddingSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut data = Vec::new();
    let mut dim = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 1;
        let parsed: std::result::Result<Vec<f32>, _> = record.iter().map(str::parse::<f32>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(InterchangeError::MalformedVector { line, msg: e.to_string() }),
        };
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(InterchangeError::MalformedVector {
                    line,
                    msg: format!("expected {d} fields, found {}", row.len()),
                })
            }
            Some(_) => {}
        }
        data.extend(row);
    }
    EmbeddingSet::new(dim.ok_or(InterchangeError::ZeroDim)?, data, "")
}

/// Parses a labels CSV. Row indices must run `0..n` in ascending order.
pub fn read_labels<R: Read>(source: R) -> Result<LabelTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let header = reader.headers()?;
    if header.iter().ne(LABELS_HEADER) {
        return Err(InterchangeError::BadLabelsHeader);
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != 3 {
            return Err(InterchangeError::MalformedLabel {
                line,
                msg: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let row: usize = record[0].trim().parse().map_err(|_| InterchangeError::MalformedLabel {
            line,
            msg: format!("row index {:?} is not a non-negative integer", &record[0]),
        })?;
        if row != rows.len() {
            return Err(InterchangeError::Misaligned { line, expected: rows.len(), found: row });
        }
        let value: i64 = record[2].trim().parse().map_err(|_| InterchangeError::MalformedLabel {
            line,
            msg: format!("label {:?} is not an integer", &record[2]),
        })?;
        let label = u8::try_from(value)
            .ok()
            .and_then(Birads::new)
            .ok_or(InterchangeError::LabelOutOfRange { line, value })?;
        rows.push(LabelRow { row, image_id: record[1].to_string(), label });
    }
    Ok(LabelTable { rows })
}

/// Writes a labels CSV with LF line endings.
pub fn write_labels<W: Write>(labels: &LabelTable, sink: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    writer.write_record(LABELS_HEADER)?;
    for r in &labels.rows {
        writer.write_record([r.row.to_string(), r.image_id.clone(), r.label.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    Ok,
    Mismatch { embeddings: usize, labels: usize },
}

impl Alignment {
    pub fn is_ok(self) -> bool {
        self == Alignment::Ok
    }

    pub fn into_result(self) -> Result<()> {
        match self {
            Alignment::Ok => Ok(()),
            Alignment::Mismatch { embeddings, labels } => {
                Err(InterchangeError::CountMismatch { embeddings, labels })
            }
        }
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alignment::Ok => f.write_str("ok"),
            Alignment::Mismatch { embeddings, labels } => {
                write!(f, "mismatch: {embeddings} embeddings vs {labels} labels")
            }
        }
    }
}

pub fn validate_alignment(set: &EmbeddingSet, labels: &LabelTable) -> Alignment {
    if set.count() == labels.len() {
        Alignment::Ok
    } else {
        Alignment::Mismatch { embeddings: set.count(), labels: labels.len() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_csv_with_and_without_header() {
        let set = read_vectors_csv("0.5,1,2\n3,4,5\n".as_bytes()).unwrap();
        assert_eq!((set.count(), set.dim()), (2, 3));
        assert_eq!(set.row(1), &[3.0, 4.0, 5.0]);
        let set = read_vectors_csv("a,b\n1,2\n".as_bytes()).unwrap();
        assert_eq!((set.count(), set.dim()), (1, 2));
        assert!(matches!(
            read_vectors_csv("1,2\n3\n".as_bytes()),
            Err(InterchangeError::MalformedVector { line: 2, .. })
        ));
        assert!(matches!(read_vectors_csv("1,x\n2,y\n".as_bytes()), Err(InterchangeError::MalformedVector { .. })));
        assert!(matches!(read_vectors_csv("".as_bytes()), Err(InterchangeError::ZeroDim)));
        assert!(matches!(read_vectors_csv("1,nan\n".as_bytes()), Err(InterchangeError::NonFinite { .. })));
    }

    fn encode(set: &EmbeddingSet) -> Vec<u8> {
        let mut buf = Vec::new();
        write_embeddings(set, &mut buf).unwrap();
        buf
    }

    #[test]
    fn empty_set_is_header_only() {
        let set = EmbeddingSet::new(8, vec![], "x").unwrap();
        let bytes = encode(&set);
        assert_eq!(bytes.len(), 20);
        assert_eq!(&bytes[..4], b"EMB1");
        assert_eq!(&bytes[12..16], &8u32.to_le_bytes());
        let back = read_embeddings(&bytes[..]).unwrap();
        assert_eq!(back.count(), 0);
        assert_eq!(back.dim(), 8);
    }

    #[test]
    fn two_by_three_layout() {
        let set = EmbeddingSet::from_rows(&[[1.0f32, 2.0, 3.0], [4.0, 5.0, 6.0]], "").unwrap();
        let mut buf = Vec::new();
        let n = write_embeddings(&set, &mut buf).unwrap();
        assert_eq!(n, 20 + 24);
        assert_eq!(buf.len(), 44);
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(buf[16], 1);
        assert_eq!(&buf[17..20], &[0, 0, 0]);
        assert_eq!(&buf[20..24], &1.0f32.to_le_bytes());
        assert_eq!(&buf[40..44], &6.0f32.to_le_bytes());
        let back = read_embeddings(&buf[..]).unwrap();
        assert_eq!((back.count(), back.dim()), (2, 3));
        assert_eq!(back.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn rejects_bad_magic() {
        let set = EmbeddingSet::from_rows(&[[1.0f32]], "").unwrap();
        let mut buf = encode(&set);
        buf[..4].copy_from_slice(b"XXXX");
        assert!(matches!(read_embeddings(&buf[..]), Err(InterchangeError::BadMagic(m)) if &m == b"XXXX"));
    }

    #[test]
    fn rejects_truncated_payload() {
        let rows: Vec<[f32; 2]> = (0..10).map(|i| [i as f32, 1.0]).collect();
        let set = EmbeddingSet::from_rows(&rows, "").unwrap();
        let buf = encode(&set);
        let short = &buf[..buf.len() - 8];
        assert!(matches!(
            read_embeddings(short),
            Err(InterchangeError::Truncated { expected: 80, actual: 72 })
        ));
    }

    #[test]
    fn rejects_trailing_bytes_and_version_and_dtype() {
        let set = EmbeddingSet::from_rows(&[[1.0f32, 2.0]], "").unwrap();
        let mut buf = encode(&set);
        buf.push(0);
        assert!(matches!(read_embeddings(&buf[..]), Err(InterchangeError::TrailingBytes)));

        let mut buf = encode(&set);
        buf[4] = 2;
        assert!(matches!(read_embeddings(&buf[..]), Err(InterchangeError::UnsupportedVersion(2))));

        let mut buf = encode(&set);
        buf[16] = 2;
        assert!(matches!(read_embeddings(&buf[..]), Err(InterchangeError::UnsupportedDtype(2))));
    }

    #[test]
    fn rejects_nan_payload_and_nan_write() {
        let set = EmbeddingSet::from_rows(&[[1.0f32, 2.0]], "").unwrap();
        let mut buf = encode(&set);
        buf[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            read_embeddings(&buf[..]),
            Err(InterchangeError::NonFinite { row: 0, col: 1 })
        ));
        assert!(EmbeddingSet::new(2, vec![1.0, f32::INFINITY], "").is_err());
    }

    #[test]
    fn huge_declaration_does_not_preallocate() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"EMB1");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&u32::MAX.to_le_bytes());
        buf.extend_from_slice(&u32::MAX.to_le_bytes());
        buf.extend_from_slice(&[1, 0, 0, 0]);
        let err = read_embeddings(&buf[..]).unwrap_err();
        assert!(matches!(
            err,
            InterchangeError::Truncated { actual: 0, .. } | InterchangeError::Oversize { .. }
        ));
    }

    #[test]
    fn labels_parse() {
        let text = "row,image_id,label\n0,P1_L_CC,2\n1,P1_L_MLO,2\n";
        let t = read_labels(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.labels().map(Birads::get).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!(t.rows()[1].image_id, "P1_L_MLO");
    }

    #[test]
    fn labels_reject_zero_and_seven() {
        let text = "row,image_id,label\n0,a,0\n";
        assert!(matches!(
            read_labels(text.as_bytes()),
            Err(InterchangeError::LabelOutOfRange { value: 0, .. })
        ));
        let text = "row,image_id,label\n0,a,7\n";
        assert!(matches!(
            read_labels(text.as_bytes()),
            Err(InterchangeError::LabelOutOfRange { value: 7, .. })
        ));
    }

    #[test]
    fn labels_reject_gap_duplicate_and_non_integer() {
        let gap = "row,image_id,label\n0,a,1\n2,b,1\n";
        assert!(matches!(
            read_labels(gap.as_bytes()),
            Err(InterchangeError::Misaligned { expected: 1, found: 2, .. })
        ));
        let dup = "row,image_id,label\n0,a,1\n0,b,1\n";
        assert!(matches!(read_labels(dup.as_bytes()), Err(InterchangeError::Misaligned { .. })));
        let frac = "row,image_id,label\n0,a,2.5\n";
        assert!(matches!(read_labels(frac.as_bytes()), Err(InterchangeError::MalformedLabel { .. })));
        let header = "idx,image_id,label\n0,a,2\n";
        assert!(matches!(read_labels(header.as_bytes()), Err(InterchangeError::BadLabelsHeader)));
    }

    #[test]
    fn labels_write_round_trip() {
        let t = LabelTable::from_pairs([
            ("P1_L_CC", Birads::new(2).unwrap()),
            ("odd,name", Birads::new(5).unwrap()),
        ]);
        let mut buf = Vec::new();
        write_labels(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("row,image_id,label\n0,P1_L_CC,2\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_labels(&buf[..]).unwrap(), t);
    }

    #[test]
    fn alignment_reports_both_counts() {
        let set = EmbeddingSet::new(1, vec![0.0; 2006], "").unwrap();
        let full = LabelTable::from_pairs((0..2006).map(|i| (i.to_string(), Birads::new(1).unwrap())));
        let half = LabelTable::from_pairs((0..1003).map(|i| (i.to_string(), Birads::new(1).unwrap())));
        assert!(validate_alignment(&set, &full).is_ok());
        assert_eq!(
            validate_alignment(&set, &half),
            Alignment::Mismatch { embeddings: 2006, labels: 1003 }
        );
        let empty = EmbeddingSet::new(4, vec![], "").unwrap();
        assert!(validate_alignment(&empty, &LabelTable::default()).is_ok());
    }
}
