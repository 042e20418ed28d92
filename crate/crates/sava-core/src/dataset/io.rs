//! Dataset file formats.
//!
//! Binary: magic `SAVA1\0`, little-endian u64 `N`, `D`, `V`, then `N*D` f64
//! features row-major, `N` u32 labels, `N` u64 ids. Round-trips bit-exactly.
//!
//! CSV: header `id,label,f0,...,f{D-1}`, UTF-8, `.` decimal separator. Floats
//! are written in shortest round-trip form, so this round-trips bit-exactly
//! too.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::Real;

use super::LabeledDataset;

const MAGIC: &[u8; 6] = b"SAVA1\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Csv,
}

impl Format {
    /// Picks the format from a file extension (`.csv` means CSV, anything
    /// else binary).
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

pub fn save_dataset(ds: &LabeledDataset, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Binary => save_binary(ds, path),
        Format::Csv => save_csv(ds, path),
    }
}

pub fn load_dataset(path: &Path, format: Format) -> Result<LabeledDataset> {
    match format {
        Format::Binary => load_binary(path),
        Format::Csv => load_csv(path),
    }
}

fn save_binary(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u64::<LittleEndian>(ds.n() as u64)?;
    w.write_u64::<LittleEndian>(ds.d() as u64)?;
    w.write_u64::<LittleEndian>(ds.v() as u64)?;
    for &x in ds.features().iter() {
        w.write_f64::<LittleEndian>(x)?;
    }
    for &l in ds.labels() {
        w.write_u32::<LittleEndian>(l)?;
    }
    for &id in ds.ids() {
        w.write_u64::<LittleEndian>(id)?;
    }
    w.flush()?;
    Ok(())
}

fn load_binary(path: &Path) -> Result<LabeledDataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)
        .map_err(|_| Error::MalformedHeader("file too short for magic bytes".into()))?;
    if &magic != MAGIC {
        return Err(Error::MalformedHeader(format!(
            "bad magic bytes {magic:?}, not a dataset file"
        )));
    }
    let n = read_dim(&mut r, "N")?;
    let d = read_dim(&mut r, "D")?;
    let v = read_dim(&mut r, "V")?;
    let entries = n.checked_mul(d).ok_or_else(|| {
        Error::MalformedHeader(format!("N*D overflows ({n} * {d})"))
    })?;
    let mut features = Vec::with_capacity(entries);
    for _ in 0..entries {
        features.push(r.read_f64::<LittleEndian>().map_err(truncated)?);
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(r.read_u32::<LittleEndian>().map_err(truncated)?);
    }
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        ids.push(r.read_u64::<LittleEndian>().map_err(truncated)?);
    }
    let features = Array2::from_shape_vec((n, d), features)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    LabeledDataset::new(features, labels, ids, v)
}

fn read_dim(r: &mut impl Read, name: &str) -> Result<usize> {
    let raw = r
        .read_u64::<LittleEndian>()
        .map_err(|_| Error::MalformedHeader(format!("missing {name} in header")))?;
    usize::try_from(raw)
        .map_err(|_| Error::MalformedHeader(format!("{name}={raw} exceeds address space")))
}

fn truncated(_: std::io::Error) -> Error {
    Error::DimensionMismatch("file ends before the payload promised by its header".into())
}

fn save_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "id,label")?;
    for j in 0..ds.d() {
        write!(w, ",f{j}")?;
    }
    writeln!(w)?;
    for i in 0..ds.n() {
        write!(w, "{},{}", ds.ids()[i], ds.labels()[i])?;
        for &x in ds.row(i).iter() {
            // Shortest round-trip formatting keeps save/load bit-exact.
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn load_csv(path: &Path) -> Result<LabeledDataset> {
    // Flexible mode lets rows with the wrong arity reach our own length
    // check below, which reports them as a dimension mismatch.
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Csv(e.to_string()))?;

    let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if headers.len() < 3 || &headers[0] != "id" || &headers[1] != "label" {
        return Err(Error::MalformedHeader(
            "CSV header must start with id,label,f0,...".into(),
        ));
    }
    let d = headers.len() - 2;
    for (j, name) in headers.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(Error::MalformedHeader(format!(
                "feature column {} is named {name}, expected f{j}",
                j + 2
            )));
        }
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        if record.len() != d + 2 {
            return Err(Error::DimensionMismatch(format!(
                "row {row} has {} values, header promises {}",
                record.len(),
                d + 2
            )));
        }
        ids.push(parse_field::<u64>(&record[0], row, "id")?);
        labels.push(parse_field::<u32>(&record[1], row, "label")?);
        for col in 0..d {
            features.push(parse_field::<Real>(&record[col + 2], row, "feature")?);
        }
    }
    if ids.is_empty() {
        return Err(Error::MalformedHeader("CSV has no data rows".into()));
    }
    let n = ids.len();
    let v = labels.iter().copied().max().unwrap_or(0) as usize + 1;
    let features = Array2::from_shape_vec((n, d), features)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    LabeledDataset::new(features, labels, ids, v)
}

fn parse_field<T: std::str::FromStr>(s: &str, row: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Csv(format!("row {row}: cannot parse {what} from {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> LabeledDataset {
        LabeledDataset::new(
            array![[0.5, -1.25], [3.0e-7, 2.0], [1.0 / 3.0, f64::MIN_POSITIVE]],
            vec![0, 1, 1],
            vec![100, 200, 300],
            2,
        )
        .unwrap()
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.bin");
        let ds = sample();
        save_dataset(&ds, &path, Format::Binary).unwrap();
        let back = load_dataset(&path, Format::Binary).unwrap();
        assert_eq!(ds, back);
        assert_eq!(ds.content_hash(), back.content_hash());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        let ds = sample();
        save_dataset(&ds, &path, Format::Csv).unwrap();
        let back = load_dataset(&path, Format::Csv).unwrap();
        assert_eq!(ds.features(), back.features());
        assert_eq!(ds.labels(), back.labels());
        assert_eq!(ds.ids(), back.ids());
    }

    #[test]
    fn csv_parses_a_small_hand_written_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(&path, "id,label,f0,f1\n0,0,1.5,2.5\n1,1,-1.0,0.0\n2,0,0.25,4.0\n")
            .unwrap();
        let ds = load_dataset(&path, Format::Csv).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.v(), 2);
        assert_eq!(ds.row(0)[1], 2.5);
    }

    #[test]
    fn csv_row_arity_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "id,label,f0,f1,f2,f3\n0,0,1.0,2.0,3.0\n").unwrap();
        // Header promises D=4, the row carries 3 features.
        assert!(matches!(
            load_dataset(&path, Format::Csv),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn bad_magic_is_a_header_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"NOTSAVA000000000").unwrap();
        assert!(matches!(
            load_dataset(&path, Format::Binary),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.bin");
        let ds = sample();
        save_dataset(&ds, &path, Format::Binary).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(load_dataset(&path, Format::Binary).is_err());
    }

    #[test]
    fn format_inference_uses_extension() {
        assert_eq!(Format::infer(Path::new("a/b/data.csv")), Format::Csv);
        assert_eq!(Format::infer(Path::new("a/b/data.CSV")), Format::Csv);
        assert_eq!(Format::infer(Path::new("a/b/data.bin")), Format::Binary);
        assert_eq!(Format::infer(Path::new("a/b/data")), Format::Binary);
    }
}
