//! Line-oriented text mesh format:
//!
//! ```text
//! meshfmt 1
//! vertices N
//! x y z            (N lines)
//! elements M
//! v0 v1 v2 v3 mat  (M lines)
//! materials P
//! id eps_rel mu_rel (P lines)
//! boundary Q
//! v0 v1 v2 PEC|ABC (Q lines)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{FaceKind, Material, Mesh};
use crate::error::{Error, Result};
use crate::{Vec3, EPS0, MU0};

struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Self {
            path: path.to_path_buf(),
            inner: it.peekable(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::MeshParse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some(l) => Ok(l),
            None => Err(self.err(0, format!("unexpected end of file while reading {what}"))),
        }
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let (line, text) = self.next(name)?;
        let mut parts = text.split_whitespace();
        if parts.next() != Some(name) {
            return Err(self.err(line, format!("expected section `{name}`")));
        }
        let count = parts
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| self.err(line, format!("section `{name}` needs a count")))?;
        Ok(count)
    }

    fn fields<T: std::str::FromStr>(&mut self, what: &str, n: usize) -> Result<(usize, Vec<T>, Option<&'a str>)> {
        let (line, text) = self.next(what)?;
        let mut parts = text.split_whitespace();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let tok = parts
                .next()
                .ok_or_else(|| self.err(line, format!("too few fields in {what}")))?;
            out.push(
                tok.parse()
                    .map_err(|_| self.err(line, format!("cannot parse `{tok}` in {what}")))?,
            );
        }
        Ok((line, out, parts.next()))
    }
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_mesh(path, &text)
}

/// Parses mesh text; `path` is only used in error messages.
pub fn parse_mesh(path: &Path, text: &str) -> Result<Mesh> {
    let mut lines = Lines::new(path, text);
    let (line, header) = lines.next("header")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["meshfmt", "1"] {
        return Err(lines.err(line, "expected header `meshfmt 1`"));
    }

    let nv = lines.section("vertices")?;
    let mut raw_vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (_, xyz, _) = lines.fields::<f64>("vertex", 3)?;
        raw_vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }
    let (vertices, remap) = dedup_vertices(&raw_vertices);

    let ne = lines.section("elements")?;
    let mut elements = Vec::with_capacity(ne);
    let mut material_ids = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (line, ids, _) = lines.fields::<usize>("element", 5)?;
        if ids[..4].iter().any(|&v| v >= nv) {
            return Err(lines.err(line, "element references a missing vertex"));
        }
        elements.push([remap[ids[0]], remap[ids[1]], remap[ids[2]], remap[ids[3]]]);
        material_ids.push(ids[4]);
    }

    let nm = lines.section("materials")?;
    let mut table: HashMap<usize, Material> = HashMap::new();
    for _ in 0..nm {
        let (line, vals, _) = lines.fields::<f64>("material", 3)?;
        if vals[0] < 0.0 || vals[0].fract() != 0.0 {
            return Err(lines.err(line, "material id must be a non-negative integer"));
        }
        table.insert(vals[0] as usize, Material::relative(vals[1], vals[2]));
    }
    let mut ids: Vec<usize> = table.keys().copied().collect();
    ids.sort_unstable();
    let index: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let materials: Vec<Material> = ids.iter().map(|id| table[id]).collect();
    let mut element_material = Vec::with_capacity(ne);
    for (k, id) in material_ids.iter().enumerate() {
        let m = index.get(id).ok_or_else(|| {
            Error::InvalidInput(format!("element {k} uses undefined material id {id}"))
        })?;
        element_material.push(*m);
    }

    let nb = lines.section("boundary")?;
    let mut tags: HashMap<[usize; 3], FaceKind> = HashMap::new();
    for _ in 0..nb {
        let (line, ids, tag) = lines.fields::<usize>("boundary face", 3)?;
        if ids.iter().any(|&v| v >= nv) {
            return Err(lines.err(line, "boundary face references a missing vertex"));
        }
        let kind = match tag {
            Some("PEC") => FaceKind::Pec,
            Some("ABC") => FaceKind::Abc,
            other => return Err(lines.err(line, format!("unknown boundary tag {other:?}"))),
        };
        let mut key = [remap[ids[0]], remap[ids[1]], remap[ids[2]]];
        key.sort_unstable();
        tags.insert(key, kind);
    }

    Mesh::from_parts(vertices, elements, element_material, materials, true, |f| {
        tags.get(&f.vertices).copied()
    })
}

/// Merges vertices closer than `1e-10` times the bounding-box diagonal.
fn dedup_vertices(raw: &[Vec3]) -> (Vec<Vec3>, Vec<usize>) {
    if raw.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let mut lo = raw[0];
    let mut hi = raw[0];
    for v in raw {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let tol = 1e-10 * (hi - lo).norm();
    if tol == 0.0 {
        return (raw.to_vec(), (0..raw.len()).collect());
    }
    let cell = |v: &Vec3| {
        let c = (v - lo) / tol;
        (c.x.floor() as i64, c.y.floor() as i64, c.z.floor() as i64)
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut unique: Vec<Vec3> = Vec::with_capacity(raw.len());
    let mut remap = Vec::with_capacity(raw.len());
    for v in raw {
        let (cx, cy, cz) = cell(v);
        let mut hit = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        if let Some(&u) = list.iter().find(|&&u| (unique[u] - v).norm() <= tol) {
                            hit = Some(u);
                            break 'search;
                        }
                    }
                }
            }
        }
        let id = hit.unwrap_or_else(|| {
            unique.push(*v);
            grid.entry((cx, cy, cz)).or_default().push(unique.len() - 1);
            unique.len() - 1
        });
        remap.push(id);
    }
    (unique, remap)
}

/// Serializes a mesh; floats use the shortest round-trip representation.
pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub(crate) fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "meshfmt 1");
    let _ = writeln!(s, "vertices {}", mesh.vertices().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "elements {}", mesh.num_elements());
    for (k, e) in mesh.elements().iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {} {}", e[0], e[1], e[2], e[3], mesh.material_id(k));
    }
    let _ = writeln!(s, "materials {}", mesh.materials().len());
    for (i, m) in mesh.materials().iter().enumerate() {
        let _ = writeln!(s, "{} {} {}", i, m.eps / EPS0, m.mu / MU0);
    }
    let boundary: Vec<_> = mesh
        .faces()
        .iter()
        .filter(|f| f.kind != FaceKind::Interior)
        .collect();
    let _ = writeln!(s, "boundary {}", boundary.len());
    for f in boundary {
        let tag = if f.kind == FaceKind::Pec { "PEC" } else { "ABC" };
        let _ = writeln!(s, "{} {} {} {}", f.vertices[0], f.vertices[1], f.vertices[2], tag);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_cube_mesh;

    fn parse(text: &str) -> Result<Mesh> {
        parse_mesh(Path::new("test.mesh"), text)
    }

    #[test]
    fn round_trip_of_structured_mesh() {
        let mesh = build_structured_cube_mesh(1, 1.0, Material::VACUUM, |f| {
            if f.normal.z > 0.5 { FaceKind::Abc } else { FaceKind::Pec }
        })
        .unwrap();
        let back = parse(&mesh_to_string(&mesh)).unwrap();
        assert_eq!(back.num_elements(), mesh.num_elements());
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.elements(), mesh.elements());
        assert_eq!(back.num_faces(), mesh.num_faces());
        for f in mesh.faces() {
            let g = back.faces().iter().find(|g| g.vertices == f.vertices).unwrap();
            assert_eq!(g.kind, f.kind);
        }
        assert!((back.material(0).eps - EPS0).abs() < 1e-25);
    }

    #[test]
    fn duplicated_element_violates_conformity() {
        let mesh = build_structured_cube_mesh(1, 1.0, Material::VACUUM, |_| FaceKind::Pec).unwrap();
        let text = mesh_to_string(&mesh);
        let e0 = mesh.elements()[0];
        let text = text
            .replace("elements 6", "elements 7")
            .replace("materials 1", &format!("{} {} {} {} 0\nmaterials 1", e0[0], e0[1], e0[2], e0[3]));
        assert!(matches!(parse(&text), Err(Error::Conformity { count: 3, .. }) | Err(Error::Conformity { count: 2, .. })));
    }

    #[test]
    fn inverted_element_is_repaired_on_load() {
        let text = "meshfmt 1\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nelements 1\n0 2 1 3 0\nmaterials 1\n0 1 1\nboundary 4\n1 2 3 PEC\n0 2 3 PEC\n0 1 3 PEC\n0 1 2 ABC\n";
        let mesh = parse(text).unwrap();
        assert!(mesh.geometry(0).det > 0.0);
        assert_eq!(mesh.count_faces(FaceKind::Abc), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "meshfmt 1\nvertices 1\n0 0 zero\n";
        match parse(text) {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("meshfmt 2\n"), Err(Error::MeshParse { line: 1, .. })));
    }

    #[test]
    fn missing_boundary_tag_is_rejected() {
        let text = "meshfmt 1\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nelements 1\n0 1 2 3 0\nmaterials 1\n0 1 1\nboundary 3\n1 2 3 PEC\n0 2 3 PEC\n0 1 3 PEC\n";
        assert!(matches!(parse(text), Err(Error::UntaggedBoundary { .. })));
    }

    #[test]
    fn near_duplicate_vertices_are_merged() {
        let text = "meshfmt 1\nvertices 5\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1e-13 0 0\nelements 1\n4 1 2 3 0\nmaterials 1\n0 1 1\nboundary 4\n1 2 3 PEC\n0 2 3 PEC\n0 1 3 PEC\n0 1 2 PEC\n";
        let mesh = parse(text).unwrap();
        assert_eq!(mesh.vertices().len(), 4);
        assert_eq!(mesh.elements()[0][0], 0);
    }
}
