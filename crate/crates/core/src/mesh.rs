//! Structured triangulations of the unit square and their face skeleton.
//!
//! Each of the `N × N` grid squares is cut by one diagonal. The direction is
//! chosen per quadrant: `\` in the lower-left and upper-right quadrants, `/`
//! in the other two, so the diagonals form nested diamonds around the centre.
//! The mesh is invariant under both midline reflections and the quarter turn.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// One side of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    fn index(self) -> usize {
        match self {
            Side::Bottom => 0,
            Side::Right => 1,
            Side::Top => 2,
            Side::Left => 3,
        }
    }
}

/// Boundary condition carried by a side of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Clamped side (displacement fixed).
    Dirichlet,
    /// Traction-free side (`σn = 0`, essential in the mixed setting).
    Neumann,
}

/// Assignment of each side of the unit square to a boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryPartition {
    /// Kinds indexed bottom, right, top, left.
    sides: [BoundaryKind; 4],
}

impl BoundaryPartition {
    /// Builds a partition from explicit side kinds (bottom, right, top, left).
    pub fn new(sides: [BoundaryKind; 4]) -> Result<Self> {
        if !sides.contains(&BoundaryKind::Dirichlet) {
            return Err(Error::invalid(
                "partition",
                "at least one side of the square must be clamped",
            ));
        }
        Ok(Self { sides })
    }

    /// Clamped on `side`, traction-free elsewhere.
    pub fn clamped(side: Side) -> Self {
        let mut sides = [BoundaryKind::Neumann; 4];
        sides[side.index()] = BoundaryKind::Dirichlet;
        Self { sides }
    }

    pub fn all_dirichlet() -> Self {
        Self {
            sides: [BoundaryKind::Dirichlet; 4],
        }
    }

    pub fn kind(&self, side: Side) -> BoundaryKind {
        self.sides[side.index()]
    }

    pub fn has_neumann(&self) -> bool {
        self.sides.contains(&BoundaryKind::Neumann)
    }

    /// Parses the CLI spelling: `bottom|left|top|right|all-dirichlet`.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bottom" => Ok(Self::clamped(Side::Bottom)),
            "right" => Ok(Self::clamped(Side::Right)),
            "top" => Ok(Self::clamped(Side::Top)),
            "left" => Ok(Self::clamped(Side::Left)),
            "all-dirichlet" => Ok(Self::all_dirichlet()),
            other => Err(Error::invalid(
                "bc",
                format!("unknown boundary partition `{other}` (expected bottom|left|top|right|all-dirichlet)"),
            )),
        }
    }
}

impl Default for BoundaryPartition {
    fn default() -> Self {
        Self::clamped(Side::Bottom)
    }
}

impl fmt::Display for BoundaryPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let clamped: Vec<Side> = Side::ALL
            .into_iter()
            .filter(|s| self.kind(*s) == BoundaryKind::Dirichlet)
            .collect();
        match clamped.as_slice() {
            [Side::Bottom] => f.write_str("bottom"),
            [Side::Right] => f.write_str("right"),
            [Side::Top] => f.write_str("top"),
            [Side::Left] => f.write_str("left"),
            s if s.len() == 4 => f.write_str("all-dirichlet"),
            s => {
                let names: Vec<String> = s.iter().map(|x| format!("{x:?}").to_lowercase()).collect();
                write!(f, "dirichlet[{}]", names.join("+"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceLabel {
    Interior,
    Dirichlet,
    Neumann,
}

/// An element incident to a face, with the local index of the face in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceSide {
    pub element: usize,
    pub local_face: usize,
}

/// A mesh edge. `vertices` are ordered counterclockwise with respect to the
/// left element, so the stored normal points out of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub vertices: [usize; 2],
    pub left: FaceSide,
    pub right: Option<FaceSide>,
    pub label: FaceLabel,
    pub normal: Point,
    pub length: f64,
}

impl Face {
    /// True for faces carrying DG face terms (interior and traction-free).
    pub fn in_skeleton(&self) -> bool {
        self.label != FaceLabel::Dirichlet
    }
}

/// Endpoints, unit normal (out of the left element) and length of a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceGeometry {
    pub endpoints: [Point; 2],
    pub normal: Point,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub faces: Vec<Face>,
    /// `element_faces[e][l]` is the face joining local vertices `l` and `l+1`.
    pub element_faces: Vec<[usize; 3]>,
    pub diameters: Vec<f64>,
    /// Largest element diameter.
    pub h: f64,
    /// Number of squares along each side; 0 for meshes built by `from_triangles`.
    pub refinement: usize,
    pub partition: BoundaryPartition,
}

impl Mesh {
    /// Builds the symmetric `N × N` triangulation of the unit square.
    pub fn uniform(n: usize, partition: BoundaryPartition) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::invalid(
                "N",
                format!("refinement must be a positive even integer, got {n}"),
            ));
        }
        let np = n + 1;
        let vid = |i: usize, j: usize| j * np + i;
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }

        let half = n / 2;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                if (i < half) != (j < half) {
                    triangles.push([v00, v10, v11]);
                    triangles.push([v00, v11, v01]);
                } else {
                    triangles.push([v00, v10, v01]);
                    triangles.push([v10, v11, v01]);
                }
            }
        }

        Self::build(vertices, triangles, n, partition)
    }

    /// Builds a mesh of the unit square from counterclockwise triangles.
    /// Boundary faces are assigned to sides by their coordinates.
    pub fn from_triangles(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        partition: BoundaryPartition,
    ) -> Result<Self> {
        for t in &triangles {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::invalid("triangles", "vertex index out of range"));
            }
            let [a, b, c] = t.map(|v| vertices[v]);
            if (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]) <= 0.0 {
                return Err(Error::invalid("triangles", "triangles must be counterclockwise"));
            }
        }
        Self::build(vertices, triangles, 0, partition)
    }

    fn build(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        refinement: usize,
        partition: BoundaryPartition,
    ) -> Result<Self> {
        let on = |v: f64, c: f64| (v - c).abs() < 1e-12;
        let side_of = |a: usize, b: usize| -> Option<Side> {
            let (pa, pb) = (vertices[a], vertices[b]);
            if on(pa[1], 0.0) && on(pb[1], 0.0) {
                Some(Side::Bottom)
            } else if on(pa[0], 1.0) && on(pb[0], 1.0) {
                Some(Side::Right)
            } else if on(pa[1], 1.0) && on(pb[1], 1.0) {
                Some(Side::Top)
            } else if on(pa[0], 0.0) && on(pb[0], 0.0) {
                Some(Side::Left)
            } else {
                None
            }
        };

        let mut lookup = std::collections::HashMap::with_capacity(2 * triangles.len());
        let mut faces: Vec<Face> = Vec::with_capacity(2 * triangles.len());
        let mut element_faces = vec![[usize::MAX; 3]; triangles.len()];
        for (e, tri) in triangles.iter().enumerate() {
            for l in 0..3 {
                let (a, b) = (tri[l], tri[(l + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let side = FaceSide { element: e, local_face: l };
                match lookup.get(&key) {
                    Some(&f) => {
                        let face: &mut Face = &mut faces[f];
                        face.right = Some(side);
                        face.label = FaceLabel::Interior;
                        element_faces[e][l] = f;
                    }
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
                        let length = dx.hypot(dy);
                        let label = match side_of(a, b) {
                            Some(s) => match partition.kind(s) {
                                BoundaryKind::Dirichlet => FaceLabel::Dirichlet,
                                BoundaryKind::Neumann => FaceLabel::Neumann,
                            },
                            // provisional, fixed once the right element shows up
                            None => FaceLabel::Interior,
                        };
                        lookup.insert(key, faces.len());
                        element_faces[e][l] = faces.len();
                        faces.push(Face {
                            vertices: [a, b],
                            left: side,
                            right: None,
                            label,
                            normal: [dy / length, -dx / length],
                            length,
                        });
                    }
                }
            }
        }

        let diameters: Vec<f64> = triangles
            .iter()
            .map(|t| {
                (0..3)
                    .map(|l| dist(vertices[t[l]], vertices[t[(l + 1) % 3]]))
                    .fold(0.0, f64::max)
            })
            .collect();
        let h = diameters.iter().cloned().fold(0.0, f64::max);

        Ok(Self {
            vertices,
            triangles,
            faces,
            element_faces,
            diameters,
            h,
            refinement,
            partition,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    /// Short identifier used to tag assembled operators.
    pub fn id(&self) -> String {
        if self.refinement == 0 {
            format!("triangles{}-{}", self.triangles.len(), self.partition)
        } else {
            format!("uniform-N{}-{}", self.refinement, self.partition)
        }
    }

    pub fn element_vertices(&self, e: usize) -> [Point; 3] {
        let t = self.triangles[e];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    /// Signed area (positive for counterclockwise triangles).
    pub fn signed_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_vertices(e);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn face_geometry(&self, face: usize) -> Result<FaceGeometry> {
        let f = self.faces.get(face).ok_or(Error::OutOfRange {
            index: face,
            len: self.faces.len(),
        })?;
        Ok(FaceGeometry {
            endpoints: [self.vertices[f.vertices[0]], self.vertices[f.vertices[1]]],
            normal: f.normal,
            length: f.length,
        })
    }

    /// Outward unit normal of element `e` on its local face `l`.
    pub fn outward_normal(&self, e: usize, l: usize) -> Point {
        let f = &self.faces[self.element_faces[e][l]];
        if f.left.element == e {
            f.normal
        } else {
            [-f.normal[0], -f.normal[1]]
        }
    }

    pub fn count_label(&self, label: FaceLabel) -> usize {
        self.faces.iter().filter(|f| f.label == label).count()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}
