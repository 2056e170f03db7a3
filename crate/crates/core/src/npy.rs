//! Minimal NPY v1.0 reader and writer.
//!
//! Only little-endian `float32`/`float64`, C order, with one or two
//! dimensions. Stored `f32` values are widened to `f64` exactly. Arrays are
//! always written as `<f8`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";

/// Header plus payload is padded to a multiple of this.
const ALIGNMENT: usize = 64;

#[derive(Debug, Error)]
pub enum NpyError {
    #[error("{path}: bad magic, not an NPY file")]
    BadMagic { path: String },
    #[error("{path}: unsupported NPY version {major}.{minor} (only 1.0)")]
    UnsupportedVersion { path: String, major: u8, minor: u8 },
    #[error("{path}: unsupported dtype {descr:?} (expected \"<f4\" or \"<f8\")")]
    UnsupportedDtype { path: String, descr: String },
    #[error("{path}: Fortran-ordered arrays are not supported")]
    FortranOrder { path: String },
    #[error("{path}: expected {expected} dimension(s), found shape {shape:?}")]
    WrongDimensionality {
        path: String,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: String, reason: String },
    #[error("{path}: truncated file, expected {expected} payload bytes, found {actual}")]
    TruncatedFile {
        path: String,
        expected: usize,
        actual: usize,
    },
    #[error("{path}: non-finite value at flat index {index}")]
    NonFinite { path: String, index: usize },
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F4,
    F8,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }
}

/// Parsed array header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    /// Byte offset of the payload.
    pub data_offset: usize,
}

/// A decoded array: shape plus widened values.
#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

fn malformed(path: &str, reason: impl Into<String>) -> NpyError {
    NpyError::MalformedHeader {
        path: path.to_string(),
        reason: reason.into(),
    }
}

/// Extracts the raw value text following `'key':` in a Python dict literal.
fn dict_value<'a>(dict: &'a str, key: &str) -> Option<&'a str> {
    let pattern = format!("'{key}'");
    let start = dict.find(&pattern)? + pattern.len();
    let rest = dict[start..].trim_start().strip_prefix(':')?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')')? + 1
    } else if let Some(quoted) = rest.strip_prefix('\'') {
        quoted.find('\'')? + 2
    } else {
        rest.find([',', '}']).unwrap_or(rest.len())
    };
    Some(rest[..end].trim())
}

fn parse_shape(path: &str, text: &str) -> Result<Vec<usize>, NpyError> {
    let inner = text
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| malformed(path, format!("shape {text:?} is not a tuple")))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| malformed(path, format!("bad shape entry {s:?}")))
        })
        .collect()
}

/// Parses the header of an NPY byte buffer.
pub fn parse_header(path: &str, bytes: &[u8]) -> Result<Header, NpyError> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(NpyError::BadMagic {
            path: path.to_string(),
        });
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(NpyError::UnsupportedVersion {
            path: path.to_string(),
            major,
            minor,
        });
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_offset = 10 + header_len;
    if bytes.len() < data_offset {
        return Err(NpyError::TruncatedFile {
            path: path.to_string(),
            expected: data_offset,
            actual: bytes.len(),
        });
    }
    let dict = std::str::from_utf8(&bytes[10..data_offset])
        .map_err(|_| malformed(path, "header is not ASCII"))?;

    let descr = dict_value(dict, "descr").ok_or_else(|| malformed(path, "missing 'descr'"))?;
    let descr = descr.trim_matches('\'');
    let dtype = match descr {
        "<f4" => Dtype::F4,
        "<f8" => Dtype::F8,
        other => {
            return Err(NpyError::UnsupportedDtype {
                path: path.to_string(),
                descr: other.to_string(),
            })
        }
    };
    match dict_value(dict, "fortran_order") {
        Some("False") => {}
        Some("True") => {
            return Err(NpyError::FortranOrder {
                path: path.to_string(),
            })
        }
        _ => return Err(malformed(path, "missing or invalid 'fortran_order'")),
    }
    let shape = dict_value(dict, "shape")
        .ok_or_else(|| malformed(path, "missing 'shape'"))
        .and_then(|s| parse_shape(path, s))?;

    Ok(Header {
        dtype,
        shape,
        data_offset,
    })
}

/// Decodes a complete NPY buffer.
pub fn decode(path: &str, bytes: &[u8]) -> Result<Array, NpyError> {
    let header = parse_header(path, bytes)?;
    let count: usize = header.shape.iter().product();
    let size = header.dtype.size();
    let payload = &bytes[header.data_offset..];
    if payload.len() < count * size {
        return Err(NpyError::TruncatedFile {
            path: path.to_string(),
            expected: count * size,
            actual: payload.len(),
        });
    }
    let data: Vec<f64> = match header.dtype {
        Dtype::F4 => payload
            .chunks_exact(4)
            .take(count)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect(),
        Dtype::F8 => payload
            .chunks_exact(8)
            .take(count)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    if let Some(index) = data.iter().position(|x| !x.is_finite()) {
        return Err(NpyError::NonFinite {
            path: path.to_string(),
            index,
        });
    }
    Ok(Array {
        shape: header.shape,
        data,
    })
}

/// Encodes `data` with the given shape as an `<f8` NPY v1.0 buffer.
pub fn encode(shape: &[usize], data: &[f64]) -> Vec<u8> {
    debug_assert_eq!(shape.iter().product::<usize>(), data.len());
    let shape_text = match shape {
        [n] => format!("({n},)"),
        dims => format!(
            "({})",
            dims.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut dict = format!("{{'descr': '<f8', 'fortran_order': False, 'shape': {shape_text}, }}");
    let unpadded = 10 + dict.len() + 1;
    let padding = (ALIGNMENT - unpadded % ALIGNMENT) % ALIGNMENT;
    dict.extend(std::iter::repeat_n(' ', padding));
    dict.push('\n');

    let mut out = Vec::with_capacity(10 + dict.len() + data.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    for x in data {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

fn io_error(path: &Path, source: io::Error) -> NpyError {
    NpyError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_file(path: &Path) -> Result<Array, NpyError> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    decode(&path.display().to_string(), &bytes)
}

/// Reads just enough of the file to parse its header.
pub fn read_file_header(path: &Path) -> Result<Header, NpyError> {
    let mut file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut prefix = [0u8; 10];
    let mut filled = 0;
    while filled < prefix.len() {
        match file.read(&mut prefix[filled..]).map_err(|e| io_error(path, e))? {
            0 => break,
            n => filled += n,
        }
    }
    let name = path.display().to_string();
    if filled < 10 || &prefix[..6] != MAGIC {
        return Err(NpyError::BadMagic { path: name });
    }
    let header_len = u16::from_le_bytes([prefix[8], prefix[9]]) as usize;
    let mut bytes = prefix.to_vec();
    bytes.resize(10 + header_len, 0);
    file.read_exact(&mut bytes[10..])
        .map_err(|_| NpyError::TruncatedFile {
            path: name.clone(),
            expected: 10 + header_len,
            actual: filled,
        })?;
    parse_header(&name, &bytes)
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = match dir {
        Some(d) => d.join(tmp_name),
        None => tmp_name.into(),
    };
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn write_file(path: &Path, shape: &[usize], data: &[f64]) -> Result<(), NpyError> {
    write_atomic(path, &encode(shape, data)).map_err(|e| io_error(path, e))
}
