//! Conforming triangulations of the space-time square `Q = (0,1)_t × (0,1)_x`.
//!
//! Points are stored as `[t, x]`. Elements are counter-clockwise vertex triples. Local edge `k`
//! of an element is the edge opposite local vertex `k`, i.e. it runs from vertex `(k+1) % 3` to
//! vertex `(k+2) % 3`. Every element designates one of its edges as the refinement edge used by
//! newest-vertex bisection (NVB).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute tolerance for classifying coordinates against the unit-square boundary.
const GEOM_TOL: f64 = 1e-14;

/// Which face of the space-time square a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// `J × ∂Ω`, the faces `x = 0` and `x = 1`.
    Lateral,
    /// `{0} × Ω`, the face `t = 0`.
    Initial,
    /// `{1} × Ω`, the face `t = 1`.
    Terminal,
}

impl BoundaryTag {
    /// Classifies a segment lying on the boundary of the unit square. Returns `None` when the
    /// segment is not contained in one face.
    pub fn classify(a: [f64; 2], b: [f64; 2]) -> Option<BoundaryTag> {
        let on = |v: f64, c: f64| (v - c).abs() <= GEOM_TOL;
        if on(a[1], 0.0) && on(b[1], 0.0) || on(a[1], 1.0) && on(b[1], 1.0) {
            Some(BoundaryTag::Lateral)
        } else if on(a[0], 0.0) && on(b[0], 0.0) {
            Some(BoundaryTag::Initial)
        } else if on(a[0], 1.0) && on(b[0], 1.0) {
            Some(BoundaryTag::Terminal)
        } else {
            None
        }
    }
}

/// A tagged boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub edge: usize,
    /// The single element adjacent to the edge.
    pub element: usize,
    /// Local edge index within `element`.
    pub local_edge: usize,
    pub tag: BoundaryTag,
}

/// Affine geometry of one triangle: `p = origin + jacobian · r` for reference points `r` in
/// `{(0,0), (1,0), (0,1)}`'s convex hull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub diameter: f64,
    pub origin: [f64; 2],
    /// Columns are `p1 − p0` and `p2 − p0`.
    pub jacobian: [[f64; 2]; 2],
}

impl ElementGeometry {
    pub fn from_points(points: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = points;
        let e1 = [p1[0] - p0[0], p1[1] - p0[1]];
        let e2 = [p2[0] - p0[0], p2[1] - p0[1]];
        let det = e1[0] * e2[1] - e2[0] * e1[1];
        let len = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let diameter = len(p0, p1).max(len(p1, p2)).max(len(p2, p0));
        ElementGeometry {
            area: 0.5 * det.abs(),
            diameter,
            origin: p0,
            jacobian: [[e1[0], e2[0]], [e1[1], e2[1]]],
        }
    }

    pub fn det(&self) -> f64 {
        let j = &self.jacobian;
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// Reference point to physical point.
    pub fn map(&self, r: [f64; 2]) -> [f64; 2] {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * r[0] + j[0][1] * r[1],
            self.origin[1] + j[1][0] * r[0] + j[1][1] * r[1],
        ]
    }

    /// Physical point to reference point.
    pub fn to_reference(&self, p: [f64; 2]) -> [f64; 2] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        let inv = self.inverse_jacobian();
        [
            inv[0][0] * d[0] + inv[0][1] * d[1],
            inv[1][0] * d[0] + inv[1][1] * d[1],
        ]
    }

    pub fn inverse_jacobian(&self) -> [[f64; 2]; 2] {
        let j = &self.jacobian;
        let det = self.det();
        [
            [j[1][1] / det, -j[0][1] / det],
            [-j[1][0] / det, j[0][0] / det],
        ]
    }

    /// Maps a reference gradient `(∂u, ∂w)` to the physical gradient `(∂t, ∂x)`.
    pub fn physical_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let inv = self.inverse_jacobian();
        // ∇_phys = J^{-T} ∇_ref
        [
            inv[0][0] * g[0] + inv[1][0] * g[1],
            inv[0][1] * g[0] + inv[1][1] * g[1],
        ]
    }
}

/// A conforming triangulation of the unit space-time square.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    refinement_edge: Vec<u8>,
    edges: Vec<[usize; 2]>,
    element_edges: Vec<[usize; 3]>,
    edge_elements: Vec<[Option<usize>; 2]>,
    boundary_facets: Vec<BoundaryFacet>,
}

impl Mesh {
    /// Builds a mesh from explicit data and checks every invariant.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        refinement_edge: Vec<u8>,
    ) -> Result<Mesh> {
        if refinement_edge.len() != elements.len() {
            return Err(Error::InvalidArgument(format!(
                "{} refinement edges for {} elements",
                refinement_edge.len(),
                elements.len()
            )));
        }
        if let Some(&r) = refinement_edge.iter().find(|&&r| r > 2) {
            return Err(Error::InvalidArgument(format!(
                "refinement edge index {r} not in 0..3"
            )));
        }
        for (e, tri) in elements.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "element {e} references missing vertex {v}"
                )));
            }
        }
        let mesh = Mesh::build_topology(vertices, elements, refinement_edge)?;
        mesh.check_invariants()?;
        Ok(mesh)
    }

    /// Builds a mesh whose refinement edges are the longest edges, ties broken by the smallest
    /// global index of the opposite vertex.
    pub fn from_triangles(vertices: Vec<[f64; 2]>, elements: Vec<[usize; 3]>) -> Result<Mesh> {
        let refinement_edge = elements
            .iter()
            .map(|tri| {
                let len2 = |k: usize| {
                    let a = vertices[tri[(k + 1) % 3]];
                    let b = vertices[tri[(k + 2) % 3]];
                    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
                };
                (0..3)
                    .max_by(|&i, &j| {
                        len2(i)
                            .partial_cmp(&len2(j))
                            .unwrap()
                            .then_with(|| tri[j].cmp(&tri[i]))
                    })
                    .unwrap() as u8
            })
            .collect();
        Mesh::new(vertices, elements, refinement_edge)
    }

    /// `n × n` squares, each split along the diagonal from `(i/n, j/n)` to `((i+1)/n, (j+1)/n)`.
    pub fn uniform(n: usize) -> Result<Mesh> {
        Mesh::rectangular(n, n)
    }

    /// `nt × nx` grid of rectangles, each cut along its `(t, x) → (t + h_t, x + h_x)` diagonal.
    ///
    /// For `nt ≠ nx` no edge lies on a line `x = ±t + c`, unlike the square grids of
    /// [`Mesh::uniform`] and their bisections.
    pub fn rectangular(nt: usize, nx: usize) -> Result<Mesh> {
        if nt == 0 || nx == 0 {
            return Err(Error::InvalidArgument(
                "grid needs at least one cell per direction".into(),
            ));
        }
        let idx = |i: usize, j: usize| j * (nt + 1) + i;
        let mut vertices = Vec::with_capacity((nt + 1) * (nx + 1));
        for j in 0..=nx {
            for i in 0..=nt {
                vertices.push([i as f64 / nt as f64, j as f64 / nx as f64]);
            }
        }
        let mut elements = Vec::with_capacity(2 * nt * nx);
        for j in 0..nx {
            for i in 0..nt {
                let a = idx(i, j);
                let b = idx(i + 1, j);
                let c = idx(i + 1, j + 1);
                let d = idx(i, j + 1);
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
        Mesh::from_triangles(vertices, elements)
    }

    fn build_topology(
        vertices: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        refinement_edge: Vec<u8>,
    ) -> Result<Mesh> {
        let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(elements.len() * 2);
        let mut edges = Vec::with_capacity(elements.len() * 3 / 2 + 4);
        let mut edge_elements: Vec<[Option<usize>; 2]> = Vec::with_capacity(edges.capacity());
        let mut element_edges = Vec::with_capacity(elements.len());
        for (e, tri) in elements.iter().enumerate() {
            let mut local = [0; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let key = edge_key(tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_elements.push([None, None]);
                    edges.len() - 1
                });
                match edge_elements[id] {
                    [None, _] => edge_elements[id][0] = Some(e),
                    [Some(_), None] => edge_elements[id][1] = Some(e),
                    _ => {
                        return Err(Error::NonConforming(format!(
                            "edge {:?} is shared by more than two elements",
                            key
                        )))
                    }
                }
                *slot = id;
            }
            element_edges.push(local);
        }

        let mut boundary_facets = Vec::new();
        for (id, adj) in edge_elements.iter().enumerate() {
            if let [Some(e), None] = *adj {
                let [a, b] = edges[id];
                let tag = BoundaryTag::classify(vertices[a], vertices[b]).ok_or_else(|| {
                    Error::NonConforming(format!(
                        "edge {:?}–{:?} has a single neighbour but is not on the boundary (hanging node?)",
                        vertices[a], vertices[b]
                    ))
                })?;
                let local_edge = element_edges[e].iter().position(|&x| x == id).unwrap();
                boundary_facets.push(BoundaryFacet {
                    edge: id,
                    element: e,
                    local_edge,
                    tag,
                });
            }
        }

        Ok(Mesh {
            vertices,
            elements,
            refinement_edge,
            edges,
            element_edges,
            edge_elements,
            boundary_facets,
        })
    }

    /// Verifies positive orientation, conformity and that the elements tile the unit square.
    pub fn check_invariants(&self) -> Result<()> {
        let mut areas = Vec::with_capacity(self.elements.len());
        for e in 0..self.elements.len() {
            let area = self.signed_area(e);
            if !(area > 0.0) {
                return Err(Error::DegenerateElement { element: e, area });
            }
            areas.push(area);
        }
        let total = compensated_sum(areas);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NonConforming(format!(
                "element areas sum to {total}, not 1"
            )));
        }
        for adj in &self.edge_elements {
            if adj[0].is_none() {
                return Err(Error::NonConforming("edge without elements".into()));
            }
        }
        // Each boundary facet tagged exactly once by construction; check the tiling of the
        // boundary itself so that holes along a face are caught.
        let expect = [
            (BoundaryTag::Lateral, 2.0),
            (BoundaryTag::Initial, 1.0),
            (BoundaryTag::Terminal, 1.0),
        ];
        for (tag, want) in expect {
            let got = compensated_sum(self.boundary_facets.iter().filter(|f| f.tag == tag).map(
                |f| {
                    let [a, b] = self.edges[f.edge];
                    let (pa, pb) = (self.vertices[a], self.vertices[b]);
                    ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt()
                },
            ));
            if (got - want).abs() > 1e-12 {
                return Err(Error::NonConforming(format!(
                    "{tag:?} boundary has length {got}, expected {want}"
                )));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn refinement_edges(&self) -> &[u8] {
        &self.refinement_edge
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as sorted vertex pairs.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge ids of each element, indexed by local edge (opposite vertex).
    pub fn element_edges(&self) -> &[[usize; 3]] {
        &self.element_edges
    }

    pub fn edge_elements(&self, edge: usize) -> [Option<usize>; 2] {
        self.edge_elements[edge]
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    /// Tag of an edge, `None` for interior edges.
    pub fn edge_tag(&self, edge: usize) -> Option<BoundaryTag> {
        match self.edge_elements[edge] {
            [Some(_), None] => {
                let [a, b] = self.edges[edge];
                BoundaryTag::classify(self.vertices[a], self.vertices[b])
            }
            _ => None,
        }
    }

    pub fn element_points(&self, e: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[e];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    fn signed_area(&self, e: usize) -> f64 {
        let [p0, p1, p2] = self.element_points(e);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    /// Area, diameter and affine map of element `id`.
    pub fn element_geometry(&self, id: usize) -> Result<ElementGeometry> {
        if id >= self.elements.len() {
            return Err(Error::ElementOutOfRange {
                id,
                n_elements: self.elements.len(),
            });
        }
        let geom = ElementGeometry::from_points(self.element_points(id));
        if !(geom.det() > 0.0) {
            return Err(Error::DegenerateElement {
                element: id,
                area: 0.5 * geom.det(),
            });
        }
        Ok(geom)
    }

    pub(crate) fn geometry_unchecked(&self, id: usize) -> ElementGeometry {
        ElementGeometry::from_points(self.element_points(id))
    }

    pub fn total_area(&self) -> f64 {
        compensated_sum((0..self.n_elements()).map(|e| self.signed_area(e)))
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.geometry_unchecked(e).diameter)
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all elements, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for e in 0..self.n_elements() {
            let p = self.element_points(e);
            for k in 0..3 {
                let a = p[k];
                let b = p[(k + 1) % 3];
                let c = p[(k + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / ((u[0].hypot(u[1])) * (v[0].hypot(v[1])));
                min = min.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        min
    }

    /// Bisects every element twice (two full NVB sweeps), halving the mesh size.
    pub fn refine_uniform(&self) -> Mesh {
        let all: Vec<usize> = (0..self.n_elements()).collect();
        let once = self.refine_marked(&all).expect("all ids are valid");
        let all: Vec<usize> = (0..once.n_elements()).collect();
        once.refine_marked(&all).expect("all ids are valid")
    }

    /// Newest-vertex bisection of the marked elements plus the closure needed for conformity.
    pub fn refine_marked(&self, marked: &[usize]) -> Result<Mesh> {
        if let Some(&id) = marked.iter().find(|&&id| id >= self.n_elements()) {
            return Err(Error::ElementOutOfRange {
                id,
                n_elements: self.n_elements(),
            });
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }

        // Mark refinement edges and close: an element with any marked edge must also have its
        // refinement edge marked.
        let mut edge_marked = vec![false; self.n_edges()];
        let mut stack = Vec::new();
        for &e in marked {
            let id = self.element_edges[e][self.refinement_edge[e] as usize];
            if !edge_marked[id] {
                edge_marked[id] = true;
                stack.push(id);
            }
        }
        while let Some(edge) = stack.pop() {
            for e in self.edge_elements[edge].into_iter().flatten() {
                let id = self.element_edges[e][self.refinement_edge[e] as usize];
                if !edge_marked[id] {
                    edge_marked[id] = true;
                    stack.push(id);
                }
            }
        }

        // Midpoints in edge-id order. Each marked edge gets exactly one new vertex, so no
        // coordinate-based deduplication is needed.
        let mut vertices = self.vertices.clone();
        let mut midpoint = HashMap::new();
        for (id, &[a, b]) in self.edges.iter().enumerate() {
            if edge_marked[id] {
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                midpoint.insert([a, b], vertices.len() - 1);
            }
        }

        let mut elements = Vec::with_capacity(self.n_elements() + 2 * midpoint.len());
        let mut refinement_edge = Vec::with_capacity(elements.capacity());
        for (tri, &r) in self.elements.iter().zip(&self.refinement_edge) {
            bisect(*tri, r, &midpoint, &mut elements, &mut refinement_edge);
        }

        let mesh = Mesh::build_topology(vertices, elements, refinement_edge)?;
        debug_assert!(mesh.check_invariants().is_ok());
        Ok(mesh)
    }

    /// Plain-text dump: a header `vertices <n> elements <m>`, then `t x` per vertex and
    /// `i j k refedge` per element.
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "vertices {} elements {}",
            self.n_vertices(),
            self.n_elements()
        )
        .unwrap();
        for v in &self.vertices {
            writeln!(s, "{} {}", v[0], v[1]).unwrap();
        }
        for (tri, r) in self.elements.iter().zip(&self.refinement_edge) {
            writeln!(s, "{} {} {} {}", tri[0], tri[1], tri[2], r).unwrap();
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Mesh> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))?
            .split_whitespace()
            .collect();
        let (nv, ne) = match header.as_slice() {
            ["vertices", nv, "elements", ne] => (parse::<usize>(nv)?, parse::<usize>(ne)?),
            _ => return Err(Error::Parse(format!("bad header {header:?}"))),
        };
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("missing vertex line".into()))?;
            match line.split_whitespace().collect::<Vec<_>>().as_slice() {
                [t, x] => vertices.push([parse(t)?, parse(x)?]),
                other => return Err(Error::Parse(format!("bad vertex line {other:?}"))),
            }
        }
        let mut elements = Vec::with_capacity(ne);
        let mut refinement_edge = Vec::with_capacity(ne);
        for _ in 0..ne {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("missing element line".into()))?;
            match line.split_whitespace().collect::<Vec<_>>().as_slice() {
                [i, j, k, r] => {
                    elements.push([parse(i)?, parse(j)?, parse(k)?]);
                    refinement_edge.push(parse(r)?);
                }
                other => return Err(Error::Parse(format!("bad element line {other:?}"))),
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing lines".into()));
        }
        Mesh::new(vertices, elements, refinement_edge)
    }

    pub fn into_shared(self) -> Arc<Mesh> {
        Arc::new(self)
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("cannot parse {s:?}")))
}

/// Neumaier summation.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub(crate) fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Recursively bisects `tri` while its refinement edge carries a midpoint. The new vertex
/// becomes the newest vertex of both children, whose refinement edges are opposite to it.
fn bisect(
    tri: [usize; 3],
    r: u8,
    midpoint: &HashMap<[usize; 2], usize>,
    elements: &mut Vec<[usize; 3]>,
    refinement_edge: &mut Vec<u8>,
) {
    let r = r as usize;
    let apex = tri[r];
    let a = tri[(r + 1) % 3];
    let b = tri[(r + 2) % 3];
    match midpoint.get(&edge_key(a, b)) {
        Some(&m) => {
            bisect([apex, a, m], 2, midpoint, elements, refinement_edge);
            bisect([apex, m, b], 1, midpoint, elements, refinement_edge);
        }
        None => {
            elements.push(tri);
            refinement_edge.push(r as u8);
        }
    }
}
