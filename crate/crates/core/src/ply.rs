//! Minimal reader/writer for vertex-only PLY point clouds.
//!
//! Handles `binary_little_endian 1.0` and `ascii 1.0` bodies with scalar
//! properties. List properties and non-vertex elements with a non-zero count
//! are rejected. Values are surfaced as `f64`, which represents every
//! supported property type exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    BinaryLittleEndian,
    Ascii,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => b[0] as i8 as f64,
            ScalarType::U8 => b[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub ty: ScalarType,
}

/// A vertex table: named columns, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub properties: Vec<Property>,
    pub rows: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|p| p.name == name)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

struct Header {
    encoding: PlyEncoding,
    vertex_count: usize,
    properties: Vec<Property>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| Error::Format("missing end_header".into()))?;
    let mut body_offset = end + END.len();
    // header terminator is "\n" or "\r\n"
    if bytes.get(body_offset) == Some(&b'\r') {
        body_offset += 1;
    }
    if bytes.get(body_offset) == Some(&b'\n') {
        body_offset += 1;
    }
    let text = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::Format("header is not valid UTF-8".into()))?;

    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some("ply") {
        return Err(Error::Format("not a PLY file (missing magic)".into()));
    }

    let mut encoding = None;
    let mut vertex_count = None;
    let mut properties = Vec::new();
    let mut in_vertex = false;
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, "1.0"] => {
                encoding = Some(match *fmt {
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    "ascii" => PlyEncoding::Ascii,
                    other => {
                        return Err(Error::Format(format!("unsupported PLY encoding `{other}`")))
                    }
                });
            }
            ["element", "vertex", n] => {
                if vertex_count.is_some() {
                    return Err(Error::Format("duplicate vertex element".into()));
                }
                vertex_count = Some(
                    n.parse::<usize>()
                        .map_err(|_| Error::Format(format!("bad vertex count `{n}`")))?,
                );
                in_vertex = true;
            }
            ["element", name, n] => {
                if *n != "0" {
                    return Err(Error::Format(format!(
                        "unsupported non-empty element `{name}`"
                    )));
                }
                in_vertex = false;
            }
            ["property", "list", ..] => {
                return Err(Error::Format("list properties are not supported".into()));
            }
            ["property", ty, name] => {
                if in_vertex {
                    let ty = ScalarType::parse(ty)
                        .ok_or_else(|| Error::Format(format!("unknown property type `{ty}`")))?;
                    properties.push(Property {
                        name: (*name).to_string(),
                        ty,
                    });
                }
            }
            _ => return Err(Error::Format(format!("unrecognized header line `{line}`"))),
        }
    }

    Ok(Header {
        encoding: encoding.ok_or_else(|| Error::Format("missing format line".into()))?,
        vertex_count: vertex_count.ok_or_else(|| Error::Format("missing vertex element".into()))?,
        properties,
        body_offset,
    })
}

pub fn parse(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_offset..];
    let ncols = header.properties.len();
    let mut rows = Vec::with_capacity(header.vertex_count);

    match header.encoding {
        PlyEncoding::BinaryLittleEndian => {
            let stride: usize = header.properties.iter().map(|p| p.ty.size()).sum();
            let need = stride * header.vertex_count;
            if body.len() < need {
                return Err(Error::Format(format!(
                    "truncated body: expected {need} bytes, found {}",
                    body.len()
                )));
            }
            for chunk in body[..need].chunks_exact(stride.max(1)).take(header.vertex_count) {
                let mut row = Vec::with_capacity(ncols);
                let mut off = 0;
                for p in &header.properties {
                    row.push(p.ty.decode_le(&chunk[off..]));
                    off += p.ty.size();
                }
                rows.push(row);
            }
        }
        PlyEncoding::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|_| Error::Format("ascii body is not valid UTF-8".into()))?;
            for (i, line) in text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .take(header.vertex_count)
                .enumerate()
            {
                let row: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| match t {
                        "nan" | "NaN" => Ok(f64::NAN),
                        "inf" => Ok(f64::INFINITY),
                        "-inf" => Ok(f64::NEG_INFINITY),
                        _ => t.parse::<f64>(),
                    })
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Format(format!("bad number on vertex line {i}")))?;
                if row.len() != ncols {
                    return Err(Error::Format(format!(
                        "vertex line {i} has {} values, expected {ncols}",
                        row.len()
                    )));
                }
                rows.push(row);
            }
            if rows.len() != header.vertex_count {
                return Err(Error::Format(format!(
                    "expected {} vertex lines, found {}",
                    header.vertex_count,
                    rows.len()
                )));
            }
        }
    }

    Ok(PointCloud {
        properties: header.properties,
        rows,
    })
}

pub fn read(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse(&bytes)
}

/// Serialize a point cloud. Binary output writes each column with its
/// declared type; ascii output writes shortest round-trip decimal text.
pub fn encode(cloud: &PointCloud, encoding: PlyEncoding) -> Vec<u8> {
    let mut out = Vec::new();
    let fmt = match encoding {
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
        PlyEncoding::Ascii => "ascii",
    };
    let _ = writeln!(out, "ply\nformat {fmt} 1.0\nelement vertex {}", cloud.len());
    for p in &cloud.properties {
        let ty = match p.ty {
            ScalarType::I8 => "char",
            ScalarType::U8 => "uchar",
            ScalarType::I16 => "short",
            ScalarType::U16 => "ushort",
            ScalarType::I32 => "int",
            ScalarType::U32 => "uint",
            ScalarType::F32 => "float",
            ScalarType::F64 => "double",
        };
        let _ = writeln!(out, "property {ty} {}", p.name);
    }
    out.extend_from_slice(b"end_header\n");

    for row in &cloud.rows {
        match encoding {
            PlyEncoding::BinaryLittleEndian => {
                for (v, p) in row.iter().zip(&cloud.properties) {
                    let v = *v;
                    match p.ty {
                        ScalarType::I8 => out.push(v as i8 as u8),
                        ScalarType::U8 => out.push(v as u8),
                        ScalarType::I16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
                        ScalarType::U16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
                        ScalarType::I32 => out.extend_from_slice(&(v as i32).to_le_bytes()),
                        ScalarType::U32 => out.extend_from_slice(&(v as u32).to_le_bytes()),
                        ScalarType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                        ScalarType::F64 => out.extend_from_slice(&v.to_le_bytes()),
                    }
                }
            }
            PlyEncoding::Ascii => {
                let line: Vec<String> = row
                    .iter()
                    .zip(&cloud.properties)
                    .map(|(v, p)| match p.ty {
                        ScalarType::F32 => format!("{}", *v as f32),
                        _ => format!("{v}"),
                    })
                    .collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}

pub fn write(cloud: &PointCloud, encoding: PlyEncoding, path: &Path) -> Result<()> {
    fs::write(path, encode(cloud, encoding)).map_err(|e| Error::io(path, e))
}
