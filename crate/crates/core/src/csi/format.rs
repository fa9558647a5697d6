//! `SRVCSI01` dataset files.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic    8 bytes  "SRVCSI01"
//! version  u32      1
//! classes  u32      M
//! then, repeated until end of file, one record per instance:
//!   rows      u32   N
//!   cols      u32   C
//!   label     i32   class index, -1 when unlabelled
//!   duration  f64   seconds
//!   N x f64         timestamps
//!   N*C x f32       amplitudes, row-major
//! ```
//!
//! Class names live in a UTF-8 manifest next to the binary file
//! (`<path>.names`), one name per line, exactly M lines.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::{CsiInstance, Dataset};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SRVCSI01";
pub const FORMAT_VERSION: u32 = 1;

fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".names");
    PathBuf::from(name)
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    encode(ds, &mut w).map_err(io)?;
    w.flush().map_err(io)?;

    let names = manifest_path(path);
    let mut manifest = String::new();
    for name in ds.class_names() {
        if name.contains('\n') || name.contains('\r') {
            return Err(Error::format(format!("class name {name:?} spans lines")));
        }
        manifest.push_str(name);
        manifest.push('\n');
    }
    std::fs::write(&names, manifest).map_err(|e| Error::io(&names, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (num_classes, instances) = decode(&mut BufReader::new(file)).map_err(|e| match e {
        Decode::Io(source) => Error::io(path, source),
        Decode::Format(msg) => Error::format(msg),
    })?;

    let names_path = manifest_path(path);
    let text = std::fs::read_to_string(&names_path).map_err(|e| Error::io(&names_path, e))?;
    let class_names: Vec<String> = text.lines().map(str::to_owned).collect();
    if class_names.len() != num_classes {
        return Err(Error::format(format!(
            "manifest lists {} class names, header declares {num_classes}",
            class_names.len()
        )));
    }
    Dataset::new(instances, class_names).map_err(|e| Error::format(e.to_string()))
}

fn encode(ds: &Dataset, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ds.num_classes() as u32).to_le_bytes())?;
    for inst in ds.instances() {
        let (n, c) = inst.values().dim();
        w.write_all(&(n as u32).to_le_bytes())?;
        w.write_all(&(c as u32).to_le_bytes())?;
        let label = inst.label().map_or(-1, |l| l as i32);
        w.write_all(&label.to_le_bytes())?;
        w.write_all(&inst.duration().to_le_bytes())?;
        for t in inst.timestamps() {
            w.write_all(&t.to_le_bytes())?;
        }
        for v in inst.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

enum Decode {
    Io(std::io::Error),
    Format(String),
}

impl From<std::io::Error> for Decode {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == ErrorKind::UnexpectedEof {
            Decode::Format("truncated file".into())
        } else {
            Decode::Io(e)
        }
    }
}

fn read_array<const K: usize>(r: &mut impl Read) -> std::result::Result<[u8; K], Decode> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// True at a clean end of file, false when more bytes follow.
fn at_eof(r: &mut impl Read, first: &mut [u8; 1]) -> std::result::Result<bool, Decode> {
    loop {
        match r.read(first) {
            Ok(0) => return Ok(true),
            Ok(_) => return Ok(false),
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) => return Err(Decode::Io(e)),
        }
    }
}

fn decode(r: &mut impl Read) -> std::result::Result<(usize, Vec<CsiInstance>), Decode> {
    let magic: [u8; 8] = read_array(r)?;
    if &magic != MAGIC {
        return Err(Decode::Format("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(read_array(r)?);
    if version != FORMAT_VERSION {
        return Err(Decode::Format(format!("unsupported version {version}")));
    }
    let num_classes = u32::from_le_bytes(read_array(r)?) as usize;
    if num_classes == 0 {
        return Err(Decode::Format("zero classes declared".into()));
    }

    let mut instances = Vec::new();
    let mut first = [0u8; 1];
    while !at_eof(r, &mut first)? {
        let rest: [u8; 3] = read_array(r)?;
        let n = u32::from_le_bytes([first[0], rest[0], rest[1], rest[2]]) as usize;
        let c = u32::from_le_bytes(read_array(r)?) as usize;
        let label = i32::from_le_bytes(read_array(r)?);
        let duration = f64::from_le_bytes(read_array(r)?);
        let label = match label {
            -1 => None,
            l if l >= 0 && (l as usize) < num_classes => Some(l as usize),
            l => {
                return Err(Decode::Format(format!(
                    "label {l} out of range for {num_classes} classes"
                )))
            }
        };
        let mut timestamps = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            timestamps.push(f64::from_le_bytes(read_array(r)?));
        }
        let total = n
            .checked_mul(c)
            .ok_or_else(|| Decode::Format("instance shape overflows".into()))?;
        let mut values = Vec::with_capacity(total.min(1 << 24));
        for _ in 0..total {
            values.push(f32::from_le_bytes(read_array(r)?));
        }
        let values =
            Array2::from_shape_vec((n, c), values).map_err(|e| Decode::Format(e.to_string()))?;
        let inst = CsiInstance::new(values, timestamps, duration, label)
            .map_err(|e| Decode::Format(e.to_string()))?;
        instances.push(inst);
    }
    Ok((num_classes, instances))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let a = CsiInstance::new(
            Array2::from_shape_fn((3, 2), |(i, j)| (i * 2 + j) as f32 * 0.3),
            vec![0.0, 0.25, 0.5],
            1.0,
            Some(1),
        )
        .unwrap();
        let b = CsiInstance::new(
            Array2::from_shape_fn((2, 2), |(i, j)| 1.0 / (1 + i + j) as f32),
            vec![0.1, 0.7],
            2.0,
            None,
        )
        .unwrap();
        Dataset::new(
            vec![a, b],
            vec!["walk".into(), "wave".into(), "empty".into()],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.srvcsi");
        let ds = sample();
        write_dataset(&ds, &path).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), ds);
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.srvcsi");
        write_dataset(&sample(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.srvcsi");
        write_dataset(&sample(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Format(_))));
    }

    #[test]
    fn label_beyond_declared_classes_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.srvcsi");
        write_dataset(&sample(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // first record's label field sits after magic, version, M, N, C
        bytes[24..28].copy_from_slice(&5i32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Format(_))));
    }

    #[test]
    fn manifest_must_match_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.srvcsi");
        write_dataset(&sample(), &path).unwrap();
        std::fs::write(manifest_path(&path), "walk\nwave\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Format(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_dataset("/nonexistent/file.srvcsi"),
            Err(Error::Io { .. })
        ));
    }
}
