use nalgebra::DMatrix;

use super::material::{MaterialModel, Tensor2};
use super::pencil::{AssembledPencil, PencilLayout};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::space::{make_quadrature, DGSpacePair, Domain, QuadratureRule, ScalarBasis, COMPONENTS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Quadrature exactness for volume and face integrals; `2k` when `None`.
    pub exactness: Option<usize>,
}

/// Affine map `x = v0 + J ξ` from the reference triangle.
#[derive(Debug, Clone, Copy)]
struct Affine {
    v0: Point,
    jac: [[f64; 2]; 2],
    inv: [[f64; 2]; 2],
    det: f64,
}

impl Affine {
    fn new(v: [Point; 3]) -> Self {
        let jac = [[v[1][0] - v[0][0], v[2][0] - v[0][0]], [v[1][1] - v[0][1], v[2][1] - v[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        Self { v0: v[0], jac, inv, det }
    }

    fn to_physical(&self, xi: Point) -> Point {
        [
            self.v0[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.v0[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    fn to_reference(&self, x: Point) -> Point {
        let d = [x[0] - self.v0[0], x[1] - self.v0[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// `J⁻ᵀ g`.
    fn gradient(&self, g: Point) -> Point {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

/// Basis values and physical gradients at a set of points.
struct Tabulation {
    values: Vec<f64>,
    grads: Vec<Point>,
    d: usize,
}

impl Tabulation {
    fn phi(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.d + i]
    }

    fn grad(&self, q: usize, i: usize) -> Point {
        self.grads[q * self.d + i]
    }
}

/// One side of a skeleton face: element, jump sign and average weight.
#[derive(Debug, Clone, Copy)]
struct FaceTrace {
    element: usize,
    sign: f64,
    weight: f64,
}

/// Element-by-element assembler for the mixed DG forms.
///
/// Rotation functions reuse the first `dim P_{k-1}` stress basis functions,
/// which span `P_{k-1}` because the basis is hierarchical.
pub struct Assembler<'a> {
    mesh: &'a Mesh,
    spaces: &'a DGSpacePair,
    material: MaterialModel,
    basis: ScalarBasis,
    tri: QuadratureRule,
    edge: QuadratureRule,
    maps: Vec<Affine>,
}

impl<'a> Assembler<'a> {
    pub fn new(
        mesh: &'a Mesh,
        spaces: &'a DGSpacePair,
        material: &MaterialModel,
        options: &AssemblyOptions,
    ) -> Result<Self> {
        spaces.check_mesh(mesh)?;
        let k = spaces.degree;
        let exactness = options.exactness.unwrap_or(2 * k);
        if exactness < 2 * k {
            return Err(Error::invalid(
                "exactness",
                format!("quadrature exactness {exactness} is below 2k = {}", 2 * k),
            ));
        }
        let maps = (0..mesh.num_elements())
            .map(|e| Affine::new(mesh.element_vertices(e)))
            .collect();
        Ok(Self {
            mesh,
            spaces,
            material: *material,
            basis: ScalarBasis::new(k)?,
            tri: make_quadrature(Domain::Triangle, exactness)?,
            edge: make_quadrature(Domain::Edge, exactness)?,
            maps,
        })
    }

    fn tabulate(&self, e: usize, points: impl Iterator<Item = Point>) -> Tabulation {
        let d = self.basis.len();
        let map = &self.maps[e];
        let mut values = Vec::new();
        let mut grads = Vec::new();
        let mut v = vec![0.0; d];
        let mut g = vec![[0.0; 2]; d];
        for xi in points {
            self.basis.eval_with_grad(xi, &mut v, &mut g);
            values.extend_from_slice(&v);
            grads.extend(g.iter().map(|gr| map.gradient(*gr)));
        }
        Tabulation { values, grads, d }
    }

    /// Volume triplets. `divdiv` adds `ρ⁻¹ ∫ div σ · div τ`.
    fn volume_triplets(&self, divdiv: bool, out: &mut Vec<(usize, usize, f64)>) {
        let d = self.spaces.scalar_dim;
        let dq = self.spaces.rotation_scalar_dim;
        let nb = 4 * d;
        let cm = self.material.compliance_matrix();
        let rho_inv = 1.0 / self.material.rho;
        // r : τ = s (τ01 − τ10) for r = s J
        let skew = [0.0, 1.0, -1.0, 0.0];
        let mut local = vec![0.0; nb * nb];
        let mut coupling = vec![0.0; dq * nb];
        for e in 0..self.mesh.num_elements() {
            let jac = self.maps[e].det.abs();
            let tab = self.tabulate(e, self.tri.points.iter().copied());
            local.iter_mut().for_each(|x| *x = 0.0);
            coupling.iter_mut().for_each(|x| *x = 0.0);
            for (q, wref) in self.tri.weights.iter().enumerate() {
                let w = wref * jac;
                for a in 0..4 {
                    for b in 0..4 {
                        let c = cm[a][b];
                        let (ra, ca) = COMPONENTS[a];
                        let (rb, cb) = COMPONENTS[b];
                        let div_couples = divdiv && ra == rb;
                        if c == 0.0 && !div_couples {
                            continue;
                        }
                        for i in 0..d {
                            let pi = tab.phi(q, i);
                            let gi = tab.grad(q, i)[ca];
                            for j in 0..d {
                                let mut v = c * pi * tab.phi(q, j);
                                if div_couples {
                                    v += rho_inv * gi * tab.grad(q, j)[cb];
                                }
                                local[(a * d + i) * nb + b * d + j] += w * v;
                            }
                        }
                    }
                }
                for j in 0..dq {
                    let pj = tab.phi(q, j);
                    for a in [1, 2] {
                        for i in 0..d {
                            coupling[j * nb + a * d + i] += w * skew[a] * pj * tab.phi(q, i);
                        }
                    }
                }
            }
            let s0 = self.spaces.stress_dof(e, 0, 0);
            for r in 0..nb {
                for c in 0..nb {
                    let v = local[r * nb + c];
                    if v != 0.0 {
                        out.push((s0 + r, s0 + c, v));
                    }
                }
            }
            for j in 0..dq {
                let rj = self.spaces.rotation_dof(e, j);
                for c in 0..nb {
                    let v = coupling[j * nb + c];
                    if v != 0.0 {
                        out.push((rj, s0 + c, v));
                        out.push((s0 + c, rj, v));
                    }
                }
            }
        }
    }

    fn traces(&self, face: usize) -> Vec<FaceTrace> {
        let f = &self.mesh.faces[face];
        match f.right {
            Some(r) => vec![
                FaceTrace { element: f.left.element, sign: 1.0, weight: 0.5 },
                FaceTrace { element: r.element, sign: -1.0, weight: 0.5 },
            ],
            None => vec![FaceTrace { element: f.left.element, sign: 1.0, weight: 1.0 }],
        }
    }

    /// Physical quadrature points and weights on a face.
    fn face_points(&self, face: usize) -> (Vec<Point>, Vec<f64>) {
        let f = &self.mesh.faces[face];
        let [p0, p1] = f.vertices.map(|v| self.mesh.vertices[v]);
        let pts = self
            .edge
            .points
            .iter()
            .map(|t| [p0[0] + t[0] * (p1[0] - p0[0]), p0[1] + t[0] * (p1[1] - p0[1])])
            .collect();
        let w = self.edge.weights.iter().map(|w| w * f.length).collect();
        (pts, w)
    }

    /// Penalty and consistency triplets over interior and Neumann faces.
    fn face_triplets(&self, a_s: f64, out: &mut Vec<(usize, usize, f64)>) {
        let d = self.spaces.scalar_dim;
        let rho_inv = 1.0 / self.material.rho;
        for (fi, f) in self.mesh.faces.iter().enumerate() {
            if !f.in_skeleton() {
                continue;
            }
            let n = f.normal;
            let pen = a_s / f.length;
            let (pts, wts) = self.face_points(fi);
            let traces = self.traces(fi);
            let tabs: Vec<Tabulation> = traces
                .iter()
                .map(|t| {
                    let map = self.maps[t.element];
                    self.tabulate(t.element, pts.iter().map(|x| map.to_reference(*x)))
                })
                .collect();
            let ns = traces.len();
            let nb = 4 * d;
            let mut local = vec![0.0; ns * nb * ns * nb];
            let width = ns * nb;
            for (q, w) in wts.iter().enumerate() {
                for (sa, ta) in traces.iter().enumerate() {
                    for (sb, tb) in traces.iter().enumerate() {
                        for a in 0..4 {
                            let (ra, ca) = COMPONENTS[a];
                            for b in 0..4 {
                                let (rb, cb) = COMPONENTS[b];
                                if ra != rb {
                                    continue;
                                }
                                for i in 0..d {
                                    let ji = ta.sign * n[ca] * tabs[sa].phi(q, i);
                                    let di = ta.weight * tabs[sa].grad(q, i)[ca];
                                    for j in 0..d {
                                        let jj = tb.sign * n[cb] * tabs[sb].phi(q, j);
                                        let dj = tb.weight * tabs[sb].grad(q, j)[cb];
                                        let v = pen * ji * jj - rho_inv * (di * jj + dj * ji);
                                        local[(sa * nb + a * d + i) * width + sb * nb + b * d + j] += w * v;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            for (sa, ta) in traces.iter().enumerate() {
                let ra = self.spaces.stress_dof(ta.element, 0, 0);
                for (sb, tb) in traces.iter().enumerate() {
                    let rb = self.spaces.stress_dof(tb.element, 0, 0);
                    for r in 0..nb {
                        for c in 0..nb {
                            let v = local[(sa * nb + r) * width + sb * nb + c];
                            if v != 0.0 {
                                out.push((ra + r, rb + c, v));
                            }
                        }
                    }
                }
            }
        }
    }

    /// The matrix of `B`.
    pub fn b(&self) -> Result<CsrMatrix> {
        let mut t = Vec::new();
        self.volume_triplets(false, &mut t);
        CsrMatrix::from_triplets(self.spaces.dim(), self.spaces.dim(), &t)
    }

    /// The matrix of `A_h` with stabilization `a_s`.
    pub fn ah(&self, a_s: f64) -> Result<CsrMatrix> {
        check_stabilization(a_s)?;
        let mut t = Vec::new();
        self.volume_triplets(true, &mut t);
        self.face_triplets(a_s, &mut t);
        CsrMatrix::from_triplets(self.spaces.dim(), self.spaces.dim(), &t)
    }

    /// The conforming form `A` (volume terms only).
    pub fn conforming(&self) -> Result<CsrMatrix> {
        let mut t = Vec::new();
        self.volume_triplets(true, &mut t);
        CsrMatrix::from_triplets(self.spaces.dim(), self.spaces.dim(), &t)
    }

    pub fn pencil(&self, a_s: f64) -> Result<AssembledPencil> {
        let a = self.ah(a_s)?;
        let b = self.b()?;
        Ok(AssembledPencil {
            dim: self.spaces.dim(),
            a,
            b,
            a_s: Some(a_s),
            degree: Some(self.spaces.degree),
            material: Some(self.material),
            mesh_id: self.mesh.id(),
            layout: Some(PencilLayout::from_spaces(self.spaces)),
        })
    }

    /// Stress tensor of the coefficient vector `x` on element `e` at `xi`.
    fn stress_at(&self, x: &[f64], e: usize, xi: Point) -> (Tensor2, [Point; 2]) {
        let d = self.spaces.scalar_dim;
        let mut v = vec![0.0; d];
        let mut g = vec![[0.0; 2]; d];
        self.basis.eval_with_grad(xi, &mut v, &mut g);
        let mut s = [[0.0; 2]; 2];
        let mut div = [[0.0; 2]; 2];
        for (a, &(r, c)) in COMPONENTS.iter().enumerate() {
            for i in 0..d {
                let coef = x[self.spaces.stress_dof(e, a, i)];
                s[r][c] += coef * v[i];
                let gp = self.maps[e].gradient(g[i]);
                div[r][c] += coef * gp[c];
            }
        }
        // div[r][c] holds ∂_c σ_rc; row sums give (div σ)_r
        (s, div)
    }

    /// Largest pointwise `|[σ]|` over the skeleton faces.
    pub fn max_jump(&self, x: &[f64]) -> (usize, f64) {
        let mut worst = (0, 0.0f64);
        for (fi, f) in self.mesh.faces.iter().enumerate() {
            if !f.in_skeleton() {
                continue;
            }
            let (pts, _) = self.face_points(fi);
            for p in &pts {
                let mut jump = [0.0; 2];
                for t in self.traces(fi) {
                    let (s, _) = self.stress_at(x, t.element, self.maps[t.element].to_reference(*p));
                    for r in 0..2 {
                        jump[r] += t.sign * (s[r][0] * f.normal[0] + s[r][1] * f.normal[1]);
                    }
                }
                let m = jump[0].hypot(jump[1]);
                if m > worst.1 {
                    worst = (fi, m);
                }
            }
        }
        worst
    }

    /// Squared DG norm `‖σ‖² + ‖div_h σ‖² + ‖h^{-1/2}[σ]‖² + ‖r‖²` over the
    /// skeleton; `starred` adds `‖h^{1/2}{div σ}‖²`.
    pub fn dg_norm_squared(&self, x: &[f64], starred: bool) -> f64 {
        let dq = self.spaces.rotation_scalar_dim;
        let mut total = 0.0;
        for e in 0..self.mesh.num_elements() {
            let jac = self.maps[e].det.abs();
            for (p, w) in self.tri.points.iter().zip(&self.tri.weights) {
                let (s, div) = self.stress_at(x, e, *p);
                let dv = [div[0][0] + div[0][1], div[1][0] + div[1][1]];
                let v = self.basis.eval(*p);
                let rot: f64 = (0..dq).map(|j| x[self.spaces.rotation_dof(e, j)] * v[j]).sum();
                let ss: f64 = s.iter().flatten().map(|c| c * c).sum();
                total += w * jac * (ss + dv[0] * dv[0] + dv[1] * dv[1] + 2.0 * rot * rot);
            }
        }
        for (fi, f) in self.mesh.faces.iter().enumerate() {
            if !f.in_skeleton() {
                continue;
            }
            let (pts, wts) = self.face_points(fi);
            for (p, w) in pts.iter().zip(&wts) {
                let mut jump = [0.0; 2];
                let mut avg = [0.0; 2];
                for t in self.traces(fi) {
                    let (s, div) = self.stress_at(x, t.element, self.maps[t.element].to_reference(*p));
                    for r in 0..2 {
                        jump[r] += t.sign * (s[r][0] * f.normal[0] + s[r][1] * f.normal[1]);
                        avg[r] += t.weight * (div[r][0] + div[r][1]);
                    }
                }
                total += w * (jump[0] * jump[0] + jump[1] * jump[1]) / f.length;
                if starred {
                    total += w * f.length * (avg[0] * avg[0] + avg[1] * avg[1]);
                }
            }
        }
        total
    }

    /// Element-wise `L²` projection of a stress field and a rotation density
    /// `s` (rotation `s J`) onto the discrete spaces.
    pub fn project(
        &self,
        stress: impl Fn(Point) -> Tensor2,
        rotation: impl Fn(Point) -> f64,
    ) -> Result<Vec<f64>> {
        let k = self.spaces.degree;
        let rule = make_quadrature(Domain::Triangle, (2 * k + 4).min(crate::space::quadrature::MAX_EXACTNESS))?;
        let mut x = vec![0.0; self.spaces.dim()];
        let d = self.spaces.scalar_dim;
        for e in 0..self.mesh.num_elements() {
            let map = &self.maps[e];
            // the reference basis is orthonormal, so coefficients are reference moments
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let v = self.basis.eval(*p);
                let xp = map.to_physical(*p);
                let s = stress(xp);
                let r = rotation(xp);
                for (a, &(ri, ci)) in COMPONENTS.iter().enumerate() {
                    for i in 0..d {
                        x[self.spaces.stress_dof(e, a, i)] += w * s[ri][ci] * v[i];
                    }
                }
                for j in 0..self.spaces.rotation_scalar_dim {
                    x[self.spaces.rotation_dof(e, j)] += w * r * v[j];
                }
            }
        }
        Ok(x)
    }
}

fn check_stabilization(a_s: f64) -> Result<()> {
    if !(a_s.is_finite() && a_s > 0.0) {
        return Err(Error::invalid("a_s", format!("stabilization must be positive, got {a_s}")));
    }
    Ok(())
}

pub fn assemble_b(mesh: &Mesh, spaces: &DGSpacePair, material: &MaterialModel) -> Result<CsrMatrix> {
    Assembler::new(mesh, spaces, material, &AssemblyOptions::default())?.b()
}

pub fn assemble_ah(mesh: &Mesh, spaces: &DGSpacePair, material: &MaterialModel, a_s: f64) -> Result<CsrMatrix> {
    check_stabilization(a_s)?;
    Assembler::new(mesh, spaces, material, &AssemblyOptions::default())?.ah(a_s)
}

pub fn assemble_pencil(
    mesh: &Mesh,
    spaces: &DGSpacePair,
    material: &MaterialModel,
    a_s: f64,
    options: &AssemblyOptions,
) -> Result<AssembledPencil> {
    check_stabilization(a_s)?;
    Assembler::new(mesh, spaces, material, options)?.pencil(a_s)
}

/// Gram matrix `G_ij = A(x_i, x_j)` of the conforming form on the span of
/// `fields`, which must have no normal jumps on interior or Neumann faces.
pub fn assemble_conforming_a(
    mesh: &Mesh,
    spaces: &DGSpacePair,
    material: &MaterialModel,
    fields: &[Vec<f64>],
) -> Result<DMatrix<f64>> {
    let asm = Assembler::new(mesh, spaces, material, &AssemblyOptions::default())?;
    for x in fields {
        if x.len() != spaces.dim() {
            return Err(Error::DimensionMismatch(format!(
                "field has length {}, space dimension is {}",
                x.len(),
                spaces.dim()
            )));
        }
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let (face, jump) = asm.max_jump(x);
        if jump > 1e-12 * scale {
            return Err(Error::NonconformingField { face, jump });
        }
    }
    let a = asm.conforming()?;
    let ax: Vec<Vec<f64>> = fields.iter().map(|x| a.mul_vec(x)).collect();
    Ok(DMatrix::from_fn(fields.len(), fields.len(), |i, j| {
        fields[i].iter().zip(&ax[j]).map(|(p, q)| p * q).sum()
    }))
}
