use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::DomainSpec;
use crate::error::{Error, Result};

const MAX_LEVEL: usize = 10;
const MIN_AREA: f64 = 1e-14;

/// Conforming triangulation with counterclockwise elements.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 3]>,
    /// Sorted indices of the nodes on `∂Ω`.
    pub boundary_nodes: Vec<usize>,
    pub level: usize,
    pub h_max: f64,
    is_boundary: Vec<bool>,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds a mesh from raw data, orienting elements counterclockwise and
    /// checking for degenerate triangles.
    pub fn new(nodes: Vec<[f64; 2]>, elements: Vec<[usize; 3]>, boundary_nodes: Vec<usize>, level: usize) -> Result<Self> {
        let mut elements = elements;
        for (k, e) in elements.iter_mut().enumerate() {
            if e.iter().any(|&i| i >= nodes.len()) {
                return Err(Error::MeshFormat { line: 0, message: format!("element {k} references a missing node") });
            }
            let a = signed_area(nodes[e[0]], nodes[e[1]], nodes[e[2]]);
            if a.abs() <= MIN_AREA {
                return Err(Error::DegenerateElement(k));
            }
            if a < 0.0 {
                e.swap(1, 2);
            }
        }
        let mut boundary_nodes = boundary_nodes;
        boundary_nodes.sort_unstable();
        boundary_nodes.dedup();
        let mut is_boundary = vec![false; nodes.len()];
        for &b in &boundary_nodes {
            if b >= nodes.len() {
                return Err(Error::MeshFormat { line: 0, message: format!("boundary node {b} out of range") });
            }
            is_boundary[b] = true;
        }
        let mut mesh = Self { nodes, elements, boundary_nodes, level, h_max: 0.0, is_boundary };
        mesh.h_max = mesh.compute_h_max();
        Ok(mesh)
    }

    fn compute_h_max(&self) -> f64 {
        let mut h: f64 = 0.0;
        for e in &self.elements {
            for k in 0..3 {
                let (a, b) = (self.nodes[e[k]], self.nodes[e[(k + 1) % 3]]);
                h = h.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        h
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    pub fn vertices(&self, k: usize) -> [[f64; 2]; 3] {
        let e = self.elements[k];
        [self.nodes[e[0]], self.nodes[e[1]], self.nodes[e[2]]]
    }

    pub fn area(&self, k: usize) -> f64 {
        let v = self.vertices(k);
        signed_area(v[0], v[1], v[2])
    }

    /// Constant gradients of the three barycentric basis functions.
    pub fn basis_gradients(&self, k: usize) -> [[f64; 2]; 3] {
        let v = self.vertices(k);
        let two_a = 2.0 * signed_area(v[0], v[1], v[2]);
        let mut g = [[0.0; 2]; 3];
        for i in 0..3 {
            let (b, c) = (v[(i + 1) % 3], v[(i + 2) % 3]);
            g[i] = [(b[1] - c[1]) / two_a, (c[0] - b[0]) / two_a];
        }
        g
    }

    pub fn centroid(&self, k: usize) -> [f64; 2] {
        let v = self.vertices(k);
        [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0]
    }

    /// Edges that belong to exactly one element.
    fn boundary_edges(&self) -> HashMap<(usize, usize), usize> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &self.elements {
            for k in 0..3 {
                *count.entry(edge_key(e[k], e[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        count.retain(|_, c| *c == 1);
        count
    }

    /// One uniform red refinement; new boundary nodes are moved onto the
    /// analytic boundary of `spec`.
    pub fn refine(&self, spec: &DomainSpec) -> Result<Mesh> {
        let boundary_edges = self.boundary_edges();
        let mut nodes = self.nodes.clone();
        let mut boundary = self.boundary_nodes.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.elements.len() * 2);
        let mut elements = Vec::with_capacity(self.elements.len() * 4);
        let mut mid = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
            let key = edge_key(a, b);
            *midpoint.entry(key).or_insert_with(|| {
                let (pa, pb) = (nodes[a], nodes[b]);
                let mut m = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                if boundary_edges.contains_key(&key) {
                    m = spec.project_to_boundary(m);
                    boundary.push(nodes.len());
                }
                nodes.push(m);
                nodes.len() - 1
            })
        };
        for e in &self.elements {
            let [a, b, c] = *e;
            let ab = mid(a, b, &mut nodes);
            let bc = mid(b, c, &mut nodes);
            let ca = mid(c, a, &mut nodes);
            elements.push([a, ab, ca]);
            elements.push([ab, b, bc]);
            elements.push([ca, bc, c]);
            elements.push([ab, bc, ca]);
        }
        Mesh::new(nodes, elements, boundary, self.level + 1)
    }
}

fn ring(radius: f64, count: usize, phase: f64) -> impl Iterator<Item = [f64; 2]> {
    (0..count).map(move |k| {
        let t = phase + std::f64::consts::TAU * k as f64 / count as f64;
        [radius * t.cos(), radius * t.sin()]
    })
}

fn base_mesh(spec: &DomainSpec) -> Result<Mesh> {
    match *spec {
        DomainSpec::UnitSquare => Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![0, 1, 2, 3],
            0,
        ),
        DomainSpec::UnitDisk => {
            let mut nodes = vec![[0.0, 0.0]];
            nodes.extend(ring(0.5, 6, 0.0));
            nodes.extend(ring(1.0, 12, 0.0));
            let inner = |i: usize| 1 + i % 6;
            let outer = |i: usize| 7 + i % 12;
            let mut elements = Vec::with_capacity(24);
            for i in 0..6 {
                elements.push([0, inner(i), inner(i + 1)]);
            }
            for i in 0..6 {
                elements.push([inner(i), outer(2 * i), outer(2 * i + 1)]);
                elements.push([inner(i), outer(2 * i + 1), inner(i + 1)]);
                elements.push([inner(i + 1), outer(2 * i + 1), outer(2 * i + 2)]);
            }
            Mesh::new(nodes, elements, (7..19).collect(), 0)
        }
        DomainSpec::Annulus { r_in, r_out } => {
            let mut nodes: Vec<[f64; 2]> = ring(r_in, 12, 0.0).collect();
            nodes.extend(ring(r_out, 12, 0.0));
            let inner = |i: usize| i % 12;
            let outer = |i: usize| 12 + i % 12;
            let mut elements = Vec::with_capacity(24);
            for i in 0..12 {
                elements.push([inner(i), outer(i), outer(i + 1)]);
                elements.push([inner(i), outer(i + 1), inner(i + 1)]);
            }
            Mesh::new(nodes, elements, (0..24).collect(), 0)
        }
    }
}

/// Uniformly refined mesh of `spec` at the given level.
pub fn build_mesh(spec: &DomainSpec, level: usize) -> Result<Mesh> {
    spec.validate()?;
    if level > MAX_LEVEL {
        return Err(Error::LevelOverflow(level));
    }
    let mut mesh = base_mesh(spec)?;
    for _ in 0..level {
        mesh = mesh.refine(spec)?;
    }
    Ok(mesh)
}

/// Writes the plain-text mesh format. Coordinates use the shortest
/// round-tripping decimal form, so a read gives back identical values.
pub fn write_mesh<W: Write>(mesh: &Mesh, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "NODES {}", mesh.nodes.len())?;
    for x in &mesh.nodes {
        writeln!(out, "{:?} {:?}", x[0], x[1])?;
    }
    writeln!(out, "ELEMENTS {}", mesh.elements.len())?;
    for e in &mesh.elements {
        writeln!(out, "{} {} {}", e[0], e[1], e[2])?;
    }
    writeln!(out, "BOUNDARY {}", mesh.boundary_nodes.len())?;
    for b in &mesh.boundary_nodes {
        writeln!(out, "{b}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the plain-text mesh format. The refinement level is not stored and
/// is reported as 0. Blank lines and lines starting with `#` are skipped.
pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() || s.starts_with('#') => None,
        other => Some((i + 1, other)),
    });
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(s))) => Ok((n, s)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::MeshFormat { line: 0, message: format!("unexpected end of file, expected {what}") }),
        }
    };
    let header = |line: usize, s: &str, key: &str| -> Result<usize> {
        let mut it = s.split_whitespace();
        match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
            (Some(k), Some(Ok(n)), None) if k == key => Ok(n),
            _ => Err(Error::MeshFormat { line, message: format!("expected '{key} <count>'") }),
        }
    };
    fn fields<T: std::str::FromStr>(line: usize, s: &str, n: usize) -> Result<Vec<T>> {
        let v: Vec<T> = s
            .split_whitespace()
            .map(|t| t.parse::<T>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::MeshFormat { line, message: format!("cannot parse '{s}'") })?;
        if v.len() != n {
            return Err(Error::MeshFormat { line, message: format!("expected {n} fields") });
        }
        Ok(v)
    }

    let (l, s) = next("NODES")?;
    let n = header(l, &s, "NODES")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (l, s) = next("a node")?;
        let v: Vec<f64> = fields(l, &s, 2)?;
        nodes.push([v[0], v[1]]);
    }
    let (l, s) = next("ELEMENTS")?;
    let m = header(l, &s, "ELEMENTS")?;
    let mut elements = Vec::with_capacity(m);
    for _ in 0..m {
        let (l, s) = next("an element")?;
        let v: Vec<usize> = fields(l, &s, 3)?;
        elements.push([v[0], v[1], v[2]]);
    }
    let (l, s) = next("BOUNDARY")?;
    let k = header(l, &s, "BOUNDARY")?;
    let mut boundary = Vec::with_capacity(k);
    for _ in 0..k {
        let (l, s) = next("a boundary index")?;
        let v: Vec<usize> = fields(l, &s, 1)?;
        boundary.push(v[0]);
    }
    Mesh::new(nodes, elements, boundary, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_levels() {
        let m = build_mesh(&DomainSpec::UnitSquare, 0).unwrap();
        assert_eq!((m.n_nodes(), m.n_elements()), (4, 2));
        for level in 1..=4 {
            let m = build_mesh(&DomainSpec::UnitSquare, level).unwrap();
            assert_eq!(m.n_elements(), 2 * 4usize.pow(level as u32));
            let side = (1usize << level) + 1;
            assert_eq!(m.n_nodes(), side * side);
            assert_eq!(m.boundary_nodes.len(), 4 * (side - 1));
            for &b in &m.boundary_nodes {
                assert!(DomainSpec::UnitSquare.signed_depth(m.nodes[b]).abs() < 1e-15);
            }
            assert!((m.h_max - 2f64.sqrt() / (1 << level) as f64).abs() < 1e-14);
        }
        assert!(matches!(build_mesh(&DomainSpec::UnitSquare, 11), Err(Error::LevelOverflow(11))));
    }

    #[test]
    fn disk_boundary_on_circle() {
        let mut prev_h = f64::INFINITY;
        for level in 0..=4 {
            let m = build_mesh(&DomainSpec::UnitDisk, level).unwrap();
            assert_eq!(m.n_elements(), 24 * 4usize.pow(level as u32));
            for &b in &m.boundary_nodes {
                let r = m.nodes[b][0].hypot(m.nodes[b][1]);
                assert!((r - 1.0).abs() < 1e-10);
            }
            // interior nodes stay strictly inside
            for i in 0..m.n_nodes() {
                if !m.is_boundary(i) {
                    assert!(m.nodes[i][0].hypot(m.nodes[i][1]) < 1.0 - 1e-12);
                }
            }
            for k in 0..m.n_elements() {
                assert!(m.area(k) > 0.0);
            }
            if level > 1 {
                let ratio = m.h_max / prev_h;
                assert!(ratio > 0.45 && ratio < 0.55, "level {level}: {ratio}");
            }
            prev_h = m.h_max;
        }
    }

    #[test]
    fn annulus_boundary_on_circles() {
        let spec = DomainSpec::Annulus { r_in: 0.4, r_out: 1.0 };
        let m = build_mesh(&spec, 3).unwrap();
        for &b in &m.boundary_nodes {
            let r = m.nodes[b][0].hypot(m.nodes[b][1]);
            assert!((r - 0.4).abs() < 1e-10 || (r - 1.0).abs() < 1e-10);
        }
        assert_eq!(m.boundary_nodes.len(), 2 * 12 * 8);
    }

    #[test]
    fn mesh_is_conforming() {
        let m = build_mesh(&DomainSpec::UnitDisk, 3).unwrap();
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &m.elements {
            for k in 0..3 {
                *count.entry(edge_key(e[k], e[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        assert!(count.values().all(|&c| c == 1 || c == 2));
        // Euler: V − E + F = 1 for a disk
        assert_eq!(m.n_nodes() as i64 - count.len() as i64 + m.n_elements() as i64, 1);
    }

    #[test]
    fn basis_gradients_sum_to_zero() {
        let m = build_mesh(&DomainSpec::UnitDisk, 1).unwrap();
        for k in 0..m.n_elements() {
            let g = m.basis_gradients(k);
            let v = m.vertices(k);
            assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-13);
            // ∇(Σ x_i λ_i) = e_x
            let gx: f64 = (0..3).map(|i| v[i][0] * g[i][0]).sum();
            assert!((gx - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mesh_file_round_trip_is_exact() {
        let m = build_mesh(&DomainSpec::UnitDisk, 2).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.elements, m.elements);
        assert_eq!(back.boundary_nodes, m.boundary_nodes);
        let mut again = Vec::new();
        write_mesh(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn mesh_file_errors_carry_line_numbers() {
        let bad = "NODES 2\n0 0\n1 x\nELEMENTS 0\nBOUNDARY 0\n";
        match read_mesh(std::io::Cursor::new(bad)) {
            Err(Error::MeshFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let degenerate = "NODES 3\n0 0\n1 0\n2 0\nELEMENTS 1\n0 1 2\nBOUNDARY 0\n";
        assert!(matches!(read_mesh(std::io::Cursor::new(degenerate)), Err(Error::DegenerateElement(0))));
    }
}
