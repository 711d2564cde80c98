//! Conforming triangulations of a rectangle: construction, uniform
//! refinement, and the cotangent edge criterion that guarantees a
//! diagonally dominant stiffness matrix (equivalent to the Delaunay
//! property in 2D).
//!
//! Meshes are immutable after construction; refinement returns a new mesh
//! together with a [`ProlongationMap`] so nodal data can be carried to the
//! finer level exactly (P1 spaces are nested under midpoint refinement).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Slack for the cotangent sum check; the criterion is exact (>= 0) but
/// right angles produce sums at roundoff scale.
pub const TOL_GEOM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Axis-aligned domain rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if !(xmin < xmax && ymin < ymax)
            || !xmin.is_finite()
            || !xmax.is_finite()
            || !ymin.is_finite()
            || !ymax.is_finite()
        {
            return Err(Error::InvalidMesh(format!(
                "degenerate rectangle [{xmin},{xmax}]x[{ymin},{ymax}]"
            )));
        }
        Ok(Rect {
            xmin,
            xmax,
            ymin,
            ymax,
        })
    }

    /// The square `[-1,1]^2` used by all built-in experiment configs.
    pub fn unit_square_centered() -> Self {
        Rect {
            xmin: -1.0,
            xmax: 1.0,
            ymin: -1.0,
            ymax: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    fn contains(&self, p: &Point, slack: f64) -> bool {
        p.x >= self.xmin - slack
            && p.x <= self.xmax + slack
            && p.y >= self.ymin - slack
            && p.y <= self.ymax + slack
    }
}

/// Undirected mesh edge with its 1-2 adjacent triangles.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    /// Node indices, smaller first.
    pub nodes: [usize; 2],
    /// Adjacent triangle indices; boundary edges have one.
    pub triangles: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1].is_none()
    }
}

/// Immutable conforming triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    boundary_node: Vec<bool>,
    level: u32,
    rect: Rect,
}

/// Result of the per-edge cotangent criterion.
#[derive(Debug, Clone)]
pub struct MeshCheckReport {
    pub pass: bool,
    /// Cotangent sum for each edge, in edge order.
    pub per_edge_values: Vec<f64>,
    /// Indices of edges whose sum fell below `-TOL_GEOM`.
    pub violating_edges: Vec<usize>,
}

impl MeshCheckReport {
    /// Worst (most negative) edge value, if the mesh has edges.
    pub fn worst(&self) -> Option<f64> {
        self.per_edge_values.iter().cloned().reduce(f64::min)
    }
}

/// Coarse-to-fine nodal transfer for one refinement step. Each fine node
/// depends on at most two coarse nodes: retained nodes inject with weight
/// one, edge midpoints average their endpoints.
#[derive(Debug, Clone)]
pub struct ProlongationMap {
    pub coarse_level: u32,
    pub fine_level: u32,
    n_coarse: usize,
    rows: Vec<([usize; 2], [f64; 2])>,
}

impl ProlongationMap {
    pub fn n_coarse(&self) -> usize {
        self.n_coarse
    }

    pub fn n_fine(&self) -> usize {
        self.rows.len()
    }

    /// Identity transfer on a single level (useful when a study's coarsest
    /// "level" coincides with its reference).
    pub fn identity(n: usize, level: u32) -> Self {
        ProlongationMap {
            coarse_level: level,
            fine_level: level,
            n_coarse: n,
            rows: (0..n).map(|i| ([i, i], [1.0, 0.0])).collect(),
        }
    }

    /// Apply the transfer to raw coarse nodal values.
    pub fn apply(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        if coarse.len() != self.n_coarse {
            return Err(Error::DimensionMismatch {
                expected: self.n_coarse,
                got: coarse.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|(nodes, w)| w[0] * coarse[nodes[0]] + w[1] * coarse[nodes[1]])
            .collect())
    }

    pub fn rows(&self) -> &[([usize; 2], [f64; 2])] {
        &self.rows
    }
}

/// Signed area of the triangle `(a, b, c)`; positive for counterclockwise
/// vertex order.
pub fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
}

impl Mesh {
    /// Structured triangulation of `rect` with `nx * ny` cells, each split
    /// along the lower-left to upper-right diagonal. The resulting mesh is
    /// Delaunay (right triangles) and has mesh size `spacing * sqrt(2)` for
    /// square cells.
    pub fn build_uniform(nx: usize, ny: usize, rect: Rect) -> Result<Mesh> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!(
                "cell counts must be positive (got nx={nx}, ny={ny})"
            )));
        }
        let dx = (rect.xmax - rect.xmin) / nx as f64;
        let dy = (rect.ymax - rect.ymin) / ny as f64;

        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // Hit the far boundary exactly.
                let x = if i == nx {
                    rect.xmax
                } else {
                    rect.xmin + i as f64 * dx
                };
                let y = if j == ny {
                    rect.ymax
                } else {
                    rect.ymin + j as f64 * dy
                };
                nodes.push(Point::new(x, y));
            }
        }

        let idx = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let a = idx(i, j);
                let b = idx(i + 1, j);
                let c = idx(i + 1, j + 1);
                let d = idx(i, j + 1);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }

        Mesh::from_parts(nodes, triangles, rect, 0)
    }

    /// Build a mesh from raw node and triangle lists (e.g. an imported
    /// file). The domain rectangle is taken as the bounding box.
    pub fn from_raw(nodes: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        if nodes.is_empty() || triangles.is_empty() {
            return Err(Error::InvalidMesh("empty node or triangle list".into()));
        }
        let mut xmin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        let mut ymin = f64::INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for p in &nodes {
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        let rect = Rect::new(xmin, xmax, ymin, ymax)?;
        Mesh::from_parts(nodes, triangles, rect, 0)
    }

    fn from_parts(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        rect: Rect,
        level: u32,
    ) -> Result<Mesh> {
        let n = nodes.len();
        let slack = 1e-12 * (rect.area().sqrt() + 1.0);
        for (i, p) in nodes.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::InvalidMesh(format!("node {i} is not finite")));
            }
            if !rect.contains(p, slack) {
                return Err(Error::InvalidMesh(format!(
                    "node {i} ({}, {}) outside domain rectangle",
                    p.x, p.y
                )));
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references node {v} >= {n}"
                    )));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a node")));
            }
            let area = signed_area(&nodes[tri[0]], &nodes[tri[1]], &nodes[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area {area:.3e} (vertices must be counterclockwise)"
                )));
            }
        }

        // Edge table: first-seen order keeps construction deterministic.
        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match edge_of.get(&key) {
                    None => {
                        edge_of.insert(key, edges.len());
                        edges.push(Edge {
                            nodes: [key.0, key.1],
                            triangles: [Some(t), None],
                        });
                    }
                    Some(&e) => {
                        if edges[e].triangles[1].is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({}, {}) shared by more than two triangles",
                                key.0, key.1
                            )));
                        }
                        edges[e].triangles[1] = Some(t);
                    }
                }
            }
        }

        let mut boundary_node = vec![false; n];
        for e in &edges {
            if e.is_boundary() {
                boundary_node[e.nodes[0]] = true;
                boundary_node[e.nodes[1]] = true;
            }
        }

        Ok(Mesh {
            nodes,
            triangles,
            edges,
            boundary_node,
            level,
            rect,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.boundary_node[i]
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    /// Vertex coordinates of triangle `t`.
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Mesh size `h`: the maximum edge length.
    pub fn mesh_size(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| self.nodes[e.nodes[0]].dist(&self.nodes[e.nodes[1]]))
            .fold(0.0, f64::max)
    }

    /// Midpoint refinement: every triangle splits into four congruent
    /// children, halving the mesh size. Coarse nodes keep their indices;
    /// edge midpoints are appended in edge order.
    pub fn refine_uniform(&self) -> (Mesh, ProlongationMap) {
        let n_coarse = self.n_nodes();
        let mut nodes = self.nodes.clone();
        let mut rows: Vec<([usize; 2], [f64; 2])> =
            (0..n_coarse).map(|i| ([i, i], [1.0, 0.0])).collect();

        let mut midpoint_of = vec![0usize; self.edges.len()];
        for (e, edge) in self.edges.iter().enumerate() {
            let [a, b] = edge.nodes;
            let pa = self.nodes[a];
            let pb = self.nodes[b];
            midpoint_of[e] = nodes.len();
            nodes.push(Point::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)));
            rows.push(([a, b], [0.5, 0.5]));
        }

        let edge_index: HashMap<(usize, usize), usize> = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| ((edge.nodes[0], edge.nodes[1]), e))
            .collect();
        let mid = |a: usize, b: usize| midpoint_of[edge_index[&(a.min(b), a.max(b))]];

        let mut triangles = Vec::with_capacity(4 * self.n_triangles());
        for &[a, b, c] in &self.triangles {
            let mab = mid(a, b);
            let mbc = mid(b, c);
            let mca = mid(c, a);
            triangles.push([a, mab, mca]);
            triangles.push([mab, b, mbc]);
            triangles.push([mca, mbc, c]);
            triangles.push([mab, mbc, mca]);
        }

        let fine = Mesh::from_parts(nodes, triangles, self.rect, self.level + 1)
            .expect("refinement of a valid mesh is valid");
        let map = ProlongationMap {
            coarse_level: self.level,
            fine_level: self.level + 1,
            n_coarse,
            rows,
        };
        (fine, map)
    }

    /// Per-edge cotangent criterion: for each edge, the cotangents of the
    /// angles opposite the edge in its adjacent triangles must sum to a
    /// nonnegative value. Degenerate triangles are a hard error rather
    /// than a tolerance miss.
    pub fn check_mesh_assumption(&self) -> Result<MeshCheckReport> {
        let mut per_edge_values = vec![0.0f64; self.edges.len()];
        for (e, edge) in self.edges.iter().enumerate() {
            let mut sum = 0.0;
            for tri_idx in edge.triangles.iter().flatten() {
                let tri = self.triangles[*tri_idx];
                let opposite = *tri
                    .iter()
                    .find(|v| **v != edge.nodes[0] && **v != edge.nodes[1])
                    .expect("conforming triangle has a vertex off the edge");
                let pv = self.nodes[opposite];
                let pa = self.nodes[edge.nodes[0]];
                let pb = self.nodes[edge.nodes[1]];
                let ux = pa.x - pv.x;
                let uy = pa.y - pv.y;
                let vx = pb.x - pv.x;
                let vy = pb.y - pv.y;
                let cross = ux * vy - uy * vx;
                let scale = (ux * ux + uy * uy).sqrt() * (vx * vx + vy * vy).sqrt();
                if cross.abs() <= 1e-14 * scale {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {tri_idx} is degenerate at edge ({}, {})",
                        edge.nodes[0], edge.nodes[1]
                    )));
                }
                sum += (ux * vx + uy * vy) / cross.abs();
            }
            per_edge_values[e] = sum;
        }
        let violating_edges: Vec<usize> = per_edge_values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v < -TOL_GEOM)
            .map(|(e, _)| e)
            .collect();
        Ok(MeshCheckReport {
            pass: violating_edges.is_empty(),
            per_edge_values,
            violating_edges,
        })
    }

    /// Serialize as plain text: a `<nodes> <triangles>` header, then one
    /// `x y` line per node (17 significant digits), then one `a b c`
    /// 0-based index line per triangle.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n_nodes(), self.n_triangles());
        for p in &self.nodes {
            let _ = writeln!(out, "{:.16e} {:.16e}", p.x, p.y);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty mesh file".into()))?;
        let mut parts = header.split_whitespace();
        let n: usize = parse_token(parts.next(), "node count")?;
        let t: usize = parse_token(parts.next(), "triangle count")?;

        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing node line {i}")))?;
            let mut p = line.split_whitespace();
            let x: f64 = parse_token(p.next(), "node x")?;
            let y: f64 = parse_token(p.next(), "node y")?;
            nodes.push(Point::new(x, y));
        }
        let mut triangles = Vec::with_capacity(t);
        for i in 0..t {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing triangle line {i}")))?;
            let mut p = line.split_whitespace();
            let a: usize = parse_token(p.next(), "triangle index")?;
            let b: usize = parse_token(p.next(), "triangle index")?;
            let c: usize = parse_token(p.next(), "triangle index")?;
            triangles.push([a, b, c]);
        }
        Mesh::from_raw(nodes, triangles)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_file(path: &Path) -> Result<Mesh> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Mesh::from_text(&text)
    }
}

fn parse_token<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("malformed {what}")))
}
