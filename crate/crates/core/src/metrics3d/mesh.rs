//! Triangle meshes: OBJ / PLY loading, normalization, area and boundary checks.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[u32; 3]>,
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Point3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn extent(&self) -> Point3 {
        sub(self.max, self.min)
    }

    pub fn center(&self) -> Point3 {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: [0, 1, 2].map(|i| self.min[i].min(other.min[i])),
            max: [0, 1, 2].map(|i| self.max[i].max(other.max[i])),
        }
    }

    /// Grows every side by `fraction` of the longest extent.
    pub fn padded(&self, fraction: f64) -> Aabb {
        let e = self.extent();
        let pad = fraction * e[0].max(e[1]).max(e[2]);
        Aabb {
            min: self.min.map(|v| v - pad),
            max: self.max.map(|v| v + pad),
        }
    }
}

impl TriMesh {
    /// Validates indices and rejects meshes without faces or with zero total area.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = TriMesh { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        if self.faces.is_empty() {
            return Err(Error::Degenerate("mesh has zero faces".into()));
        }
        let n = self.vertices.len();
        for (i, f) in self.faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v as usize >= n) {
                return Err(Error::Degenerate(format!(
                    "face {i} references vertex {bad} but mesh has {n} vertices"
                )));
            }
        }
        if self.vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite vertex coordinate".into()));
        }
        if !(self.area() > 0.0) {
            return Err(Error::Degenerate("total surface area is zero".into()));
        }
        Ok(())
    }

    pub fn triangle(&self, f: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.triangle_area(f)).sum()
    }

    /// Bounding box of the vertices referenced by faces.
    pub fn bounds(&self) -> Aabb {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for f in &self.faces {
            for &v in f {
                let p = self.vertices[v as usize];
                for i in 0..3 {
                    min[i] = min[i].min(p[i]);
                    max[i] = max[i].max(p[i]);
                }
            }
        }
        Aabb { min, max }
    }

    /// Number of undirected edges used by exactly one face. Zero for closed
    /// (watertight) meshes.
    pub fn boundary_edge_count(&self) -> usize {
        let mut counts: HashMap<(u32, u32), u32> = HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts.values().filter(|&&c| c == 1).count()
    }

    pub fn is_watertight(&self) -> bool {
        self.boundary_edge_count() == 0
    }

    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn translated(&self, t: Point3) -> TriMesh {
        self.map_vertices(|v| [v[0] + t[0], v[1] + t[1], v[2] + t[2]])
    }

    pub fn scaled(&self, s: f64) -> TriMesh {
        self.map_vertices(|v| v.map(|c| c * s))
    }

    /// Rigid rotation by `deg` about a coordinate axis (0 = x, 1 = y, 2 = z).
    pub fn rotated(&self, axis: usize, deg: f64) -> TriMesh {
        let (s, c) = deg.to_radians().sin_cos();
        let (i, j) = match axis {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        };
        self.map_vertices(|v| {
            let mut out = v;
            out[i] = c * v[i] - s * v[j];
            out[j] = s * v[i] + c * v[j];
            out
        })
    }

    pub fn to_obj_string(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {} {} {}\n", v[0], v[1], v[2]));
        }
        for f in &self.faces {
            s.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
        }
        s
    }
}

/// Centers the bounding box at the origin and scales the longest edge to 1.
pub fn normalize_mesh(mesh: &TriMesh) -> Result<TriMesh> {
    let b = mesh.bounds();
    let e = b.extent();
    let longest = e[0].max(e[1]).max(e[2]);
    if !(longest > 0.0 && longest.is_finite()) {
        return Err(Error::Degenerate("bounding box has zero extent".into()));
    }
    let c = b.center();
    let s = 1.0 / longest;
    Ok(mesh.map_vertices(|v| [(v[0] - c[0]) * s, (v[1] - c[1]) * s, (v[2] - c[2]) * s]))
}

/// Loads OBJ or PLY based on the file extension.
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let parsed = match ext.as_deref() {
        Some("obj") => parse_obj(&bytes),
        Some("ply") => parse_ply(&bytes),
        _ => Err(format!("unsupported mesh extension for {}", path.display())),
    };
    let (vertices, faces) = parsed.map_err(|message| Error::MeshLoad {
        path: path.to_path_buf(),
        message,
    })?;
    TriMesh::new(vertices, faces).map_err(|e| Error::MeshLoad {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

type Parsed = std::result::Result<(Vec<Point3>, Vec<[u32; 3]>), String>;

fn fan(poly: &[u32], faces: &mut Vec<[u32; 3]>) {
    for k in 1..poly.len() - 1 {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
}

/// OBJ `v` and `f` records; polygons are fan-triangulated, other records ignored.
pub fn parse_obj(bytes: &[u8]) -> Parsed {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("not utf-8: {e}"))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let coords: Vec<f64> = toks
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| format!("line {line}: bad vertex coordinate: {e}"))?;
                if coords.len() != 3 {
                    return Err(format!("line {line}: vertex needs 3 coordinates"));
                }
                vertices.push([coords[0], coords[1], coords[2]]);
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in toks {
                    let idx_str = t.split('/').next().unwrap_or("");
                    let idx: i64 = idx_str
                        .parse()
                        .map_err(|_| format!("line {line}: bad face index {t:?}"))?;
                    let n = vertices.len() as i64;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        n + idx
                    } else {
                        return Err(format!("line {line}: face index 0 is invalid"));
                    };
                    if resolved < 0 || resolved >= n {
                        return Err(format!(
                            "line {line}: face index {idx} out of range ({n} vertices defined)"
                        ));
                    }
                    poly.push(resolved as u32);
                }
                if poly.len() < 3 {
                    return Err(format!("line {line}: face needs at least 3 vertices"));
                }
                fan(&poly, &mut faces);
            }
            _ => {}
        }
    }
    if faces.is_empty() {
        return Err("no faces".into());
    }
    Ok((vertices, faces))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyFormat {
    Ascii,
    BinaryLe,
}

/// ASCII or binary-little-endian PLY with `vertex` (x, y, z) and `face`
/// (`vertex_indices` / `vertex_index` list) elements.
pub fn parse_ply(bytes: &[u8]) -> Parsed {
    let (format, elements, body_start) = parse_ply_header(bytes)?;
    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or("missing vertex element")?;
    let fi = elements
        .iter()
        .position(|e| e.name == "face")
        .ok_or("missing face element")?;
    let vertex_el = &elements[vi];
    let coord_idx: Vec<usize> = ["x", "y", "z"]
        .iter()
        .map(|axis| {
            vertex_el
                .props
                .iter()
                .position(|p| matches!(p, Property::Scalar { name, .. } if name == axis))
                .ok_or_else(|| format!("vertex element lacks property {axis}"))
        })
        .collect::<std::result::Result<_, _>>()?;
    let face_list = elements[fi]
        .props
        .iter()
        .position(|p| matches!(p, Property::List { name, .. } if name == "vertex_indices" || name == "vertex_index"))
        .ok_or("face element lacks vertex_indices list")?;

    let mut vertices = Vec::with_capacity(vertex_el.count);
    let mut faces = Vec::new();
    let mut reader = PlyBody::new(format, &bytes[body_start..]);
    for (ei, el) in elements.iter().enumerate() {
        for item in 0..el.count {
            let mut scalars: Vec<f64> = Vec::with_capacity(el.props.len());
            let mut list: Vec<f64> = Vec::new();
            for (pi, p) in el.props.iter().enumerate() {
                let ctx = || format!("element {} #{item}, property {pi}", el.name);
                match p {
                    Property::Scalar { ty, .. } => scalars.push(reader.value(*ty).map_err(|e| format!("{}: {e}", ctx()))?),
                    Property::List { count, item: it, .. } => {
                        let n = reader.value(*count).map_err(|e| format!("{}: {e}", ctx()))?;
                        if !(n >= 0.0) || n.fract() != 0.0 {
                            return Err(format!("{}: bad list length {n}", ctx()));
                        }
                        let mut vals = Vec::with_capacity(n as usize);
                        for _ in 0..n as usize {
                            vals.push(reader.value(*it).map_err(|e| format!("{}: {e}", ctx()))?);
                        }
                        if ei == fi && pi == face_list {
                            list = vals;
                        }
                        scalars.push(f64::NAN);
                    }
                }
            }
            reader.end_record().map_err(|e| format!("element {} #{item}: {e}", el.name))?;
            if ei == vi {
                vertices.push([scalars[coord_idx[0]], scalars[coord_idx[1]], scalars[coord_idx[2]]]);
            } else if ei == fi {
                if list.len() < 3 {
                    return Err(format!("element face #{item}: fewer than 3 indices"));
                }
                let mut poly = Vec::with_capacity(list.len());
                for v in list {
                    if v < 0.0 || v.fract() != 0.0 || v >= vertex_el.count as f64 {
                        return Err(format!(
                            "element face #{item}: vertex index {v} out of range ({} vertices)",
                            vertex_el.count
                        ));
                    }
                    poly.push(v as u32);
                }
                fan(&poly, &mut faces);
            }
        }
    }
    if faces.is_empty() {
        return Err("no faces".into());
    }
    Ok((vertices, faces))
}

fn parse_ply_header(bytes: &[u8]) -> std::result::Result<(PlyFormat, Vec<Element>, usize), String> {
    let mut pos = 0usize;
    let next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..].iter().position(|&b| b == b'\n').map(|i| *pos + i)?;
        let line = String::from_utf8_lossy(&bytes[*pos..end]).trim_end_matches('\r').to_string();
        *pos = end + 1;
        Some(line)
    };
    if next_line(&mut pos).as_deref() != Some("ply") {
        return Err("header line 1: missing 'ply' magic".into());
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut lineno = 1;
    loop {
        lineno += 1;
        let line = next_line(&mut pos).ok_or("unterminated header")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first().copied() {
            Some("format") => {
                format = Some(match toks.get(1).copied() {
                    Some("ascii") => PlyFormat::Ascii,
                    Some("binary_little_endian") => PlyFormat::BinaryLe,
                    other => return Err(format!("header line {lineno}: unsupported format {other:?}")),
                });
            }
            Some("element") => {
                let name = toks.get(1).ok_or(format!("header line {lineno}: element without name"))?;
                let count = toks
                    .get(2)
                    .and_then(|c| c.parse().ok())
                    .ok_or(format!("header line {lineno}: bad element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or(format!("header line {lineno}: property before element"))?;
                let prop = if toks.get(1) == Some(&"list") {
                    let (c, i, n) = match (toks.get(2), toks.get(3), toks.get(4)) {
                        (Some(c), Some(i), Some(n)) => (c, i, n),
                        _ => return Err(format!("header line {lineno}: malformed list property")),
                    };
                    Property::List {
                        name: n.to_string(),
                        count: Scalar::parse(c).ok_or(format!("header line {lineno}: bad type {c}"))?,
                        item: Scalar::parse(i).ok_or(format!("header line {lineno}: bad type {i}"))?,
                    }
                } else {
                    let (t, n) = match (toks.get(1), toks.get(2)) {
                        (Some(t), Some(n)) => (t, n),
                        _ => return Err(format!("header line {lineno}: malformed property")),
                    };
                    Property::Scalar {
                        name: n.to_string(),
                        ty: Scalar::parse(t).ok_or(format!("header line {lineno}: bad type {t}"))?,
                    }
                };
                el.props.push(prop);
            }
            Some("end_header") => break,
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => return Err(format!("header line {lineno}: unexpected keyword {other}")),
        }
    }
    Ok((format.ok_or("missing format line")?, elements, pos))
}

struct PlyBody<'a> {
    format: PlyFormat,
    data: &'a [u8],
    pos: usize,
    tokens: std::vec::IntoIter<String>,
    line: usize,
}

impl<'a> PlyBody<'a> {
    fn new(format: PlyFormat, data: &'a [u8]) -> Self {
        PlyBody {
            format,
            data,
            pos: 0,
            tokens: Vec::new().into_iter(),
            line: 0,
        }
    }

    fn value(&mut self, ty: Scalar) -> std::result::Result<f64, String> {
        match self.format {
            PlyFormat::BinaryLe => {
                let n = ty.size();
                if self.pos + n > self.data.len() {
                    return Err("unexpected end of binary data".into());
                }
                let v = ty.read_le(&self.data[self.pos..self.pos + n]);
                self.pos += n;
                Ok(v)
            }
            PlyFormat::Ascii => {
                if self.tokens.len() == 0 {
                    self.load_line()?;
                }
                let tok = self.tokens.next().ok_or("record too short")?;
                tok.parse::<f64>()
                    .map_err(|_| format!("body line {}: bad number {tok:?}", self.line))
            }
        }
    }

    fn load_line(&mut self) -> std::result::Result<(), String> {
        loop {
            if self.pos >= self.data.len() {
                return Err("unexpected end of ascii data".into());
            }
            let end = self.data[self.pos..]
                .iter()
                .position(|&b| b == b'\n')
                .map(|i| self.pos + i)
                .unwrap_or(self.data.len());
            let line = String::from_utf8_lossy(&self.data[self.pos..end]).to_string();
            self.pos = (end + 1).min(self.data.len().max(end + 1));
            self.line += 1;
            let toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if !toks.is_empty() {
                self.tokens = toks.into_iter();
                return Ok(());
            }
        }
    }

    fn end_record(&mut self) -> std::result::Result<(), String> {
        if self.format == PlyFormat::Ascii && self.tokens.len() != 0 {
            return Err(format!("body line {}: trailing values in record", self.line));
        }
        Ok(())
    }
}

/// Axis-aligned box `[min, max]` as a closed 8-vertex, 12-triangle mesh with
/// outward-facing winding.
pub fn box_mesh(min: Point3, max: Point3) -> TriMesh {
    let v = |i: usize| -> Point3 {
        [
            if i & 1 == 0 { min[0] } else { max[0] },
            if i & 2 == 0 { min[1] } else { max[1] },
            if i & 4 == 0 { min[2] } else { max[2] },
        ]
    };
    let vertices = (0..8).map(v).collect();
    let faces = vec![
        [0, 2, 3], [0, 3, 1], // z = min
        [4, 5, 7], [4, 7, 6], // z = max
        [0, 1, 5], [0, 5, 4], // y = min
        [2, 6, 7], [2, 7, 3], // y = max
        [0, 4, 6], [0, 6, 2], // x = min
        [1, 3, 7], [1, 7, 5], // x = max
    ];
    TriMesh { vertices, faces }
}

/// UV sphere centred at `center`.
pub fn uv_sphere(center: Point3, radius: f64, stacks: u32, slices: u32) -> TriMesh {
    let mut vertices = vec![[center[0], center[1], center[2] + radius]];
    for i in 1..stacks {
        let phi = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / slices as f64;
            vertices.push([
                center[0] + radius * phi.sin() * theta.cos(),
                center[1] + radius * phi.sin() * theta.sin(),
                center[2] + radius * phi.cos(),
            ]);
        }
    }
    vertices.push([center[0], center[1], center[2] - radius]);
    let south = vertices.len() as u32 - 1;
    let ring = |i: u32, j: u32| 1 + (i - 1) * slices + (j % slices);
    let mut faces = Vec::new();
    for j in 0..slices {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    for j in 0..slices {
        faces.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    TriMesh { vertices, faces }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE_OBJ: &str = "# unit cube\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\nvn 0 0 1\n\
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\nf 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n";

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, bytes).unwrap();
        p
    }

    #[test]
    fn loads_unit_cube_obj() {
        let dir = tempfile::tempdir().unwrap();
        let m = load_mesh(&write(dir.path(), "c.obj", CUBE_OBJ.as_bytes())).unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.faces.len(), 12);
        assert!((m.area() - 6.0).abs() < 1e-12);
        assert!(m.is_watertight());
    }

    #[test]
    fn quads_are_fan_triangulated() {
        let quads = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nf 1/1/1 2/2/2 3/3/3 4/4/4\nf -4 -3 -1\n";
        let (_, faces) = parse_obj(quads.as_bytes()).unwrap();
        assert_eq!(faces.len(), 3);
        assert_eq!(faces[0], [0, 1, 2]);
        assert_eq!(faces[1], [0, 2, 3]);
        assert_eq!(faces[2], [1, 2, 4]);
    }

    #[test]
    fn out_of_range_index_names_line() {
        let bad = CUBE_OBJ.replace("f 4 5 8", "f 4 5 9");
        let dir = tempfile::tempdir().unwrap();
        let err = load_mesh(&write(dir.path(), "bad.obj", bad.as_bytes())).unwrap_err().to_string();
        assert!(err.contains("line 22"), "{err}");
        assert!(err.contains("out of range"), "{err}");
    }

    #[test]
    fn zero_faces_and_zero_area_rejected() {
        assert!(parse_obj(b"v 0 0 0\n").is_err());
        let dir = tempfile::tempdir().unwrap();
        let flat = "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n";
        assert!(load_mesh(&write(dir.path(), "flat.obj", flat.as_bytes())).is_err());
    }

    #[test]
    fn ascii_and_binary_ply() {
        let ascii = "ply\nformat ascii 1.0\ncomment x\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\n\
element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0 1\n1 0 0 1\n1 1 0 1\n0 1 0 1\n4 0 1 2 3\n";
        let (v, f) = parse_ply(ascii.as_bytes()).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(f, vec![[0, 1, 2], [0, 2, 3]]);

        let mut bin = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\n\
element face 1\nproperty list uchar uint vertex_index\nend_header\n"
            .to_vec();
        for p in [[0.0f64, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 3.0, 0.0]] {
            for c in p {
                bin.extend_from_slice(&c.to_le_bytes());
            }
        }
        bin.push(3);
        for i in [0u32, 1, 2] {
            bin.extend_from_slice(&i.to_le_bytes());
        }
        let dir = tempfile::tempdir().unwrap();
        let m = load_mesh(&write(dir.path(), "t.ply", &bin)).unwrap();
        assert_eq!(m.vertices[2], [0.0, 3.0, 0.0]);
        assert!((m.area() - 3.0).abs() < 1e-12);

        let mut truncated = bin.clone();
        truncated.truncate(bin.len() - 2);
        assert!(parse_ply(&truncated).is_err());
        let bad_idx = ascii.replace("4 0 1 2 3", "4 0 1 2 7");
        assert!(parse_ply(bad_idx.as_bytes()).unwrap_err().contains("face #0"));
    }

    #[test]
    fn normalization_rules() {
        let cube = box_mesh([0.0; 3], [2.0; 3]);
        let n = normalize_mesh(&cube).unwrap();
        let b = n.bounds();
        assert_eq!(b.min, [-0.5; 3]);
        assert_eq!(b.max, [0.5; 3]);
        let again = normalize_mesh(&n).unwrap();
        for (a, b) in again.vertices.iter().zip(&n.vertices) {
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-12);
            }
        }
        let slab = normalize_mesh(&box_mesh([1.0, 1.0, 1.0], [3.0, 2.0, 1.5])).unwrap();
        let e = slab.bounds().extent();
        assert_eq!(e, [1.0, 0.5, 0.25]);
        assert_eq!(slab.bounds().center(), [0.0; 3]);
    }

    #[test]
    fn box_and_sphere_are_closed() {
        assert!(box_mesh([0.0; 3], [1.0; 3]).is_watertight());
        let s = uv_sphere([0.0; 3], 0.5, 16, 24);
        assert!(s.is_watertight());
        let mut open = s.clone();
        open.faces.pop();
        assert!(!open.is_watertight());
    }
}
