use dgmix::forms::{assemble_b, assemble_pencil, material_from_E_nu, AssemblyOptions};
use dgmix::mesh::{BoundaryPartition, FaceLabel, Mesh};
use dgmix::space::{build_spaces, ScalarBasis};

fn two_triangles() -> Mesh {
    let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    Mesh::from_triangles(vertices, vec![[0, 1, 2], [0, 2, 3]], BoundaryPartition::all_dirichlet()).unwrap()
}

/// Five-point Gauss–Legendre rule on [0, 1].
fn gauss5() -> [(f64, f64); 5] {
    let x = [0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
    let w = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1];
    let m = |t: f64, w: f64| (0.5 * (t + 1.0), 0.5 * w);
    [m(-x[2], w[2]), m(-x[1], w[1]), m(x[0], w[0]), m(x[1], w[1]), m(x[2], w[2])]
}

#[test]
fn two_triangle_penalty_block_is_a_scaled_edge_mass() {
    let mesh = two_triangles();
    assert_eq!(mesh.count_label(FaceLabel::Interior), 1);
    let spaces = build_spaces(&mesh, 1).unwrap();
    let mat = material_from_E_nu(1.0, 0.35, 1.0).unwrap();
    let p1 = assemble_pencil(&mesh, &spaces, &mat, 1.0, &AssemblyOptions::default()).unwrap();
    let p2 = assemble_pencil(&mesh, &spaces, &mat, 2.0, &AssemblyOptions::default()).unwrap();
    let pen = p2.a.add_scaled(-1.0, &p1.a).unwrap().to_dense();

    // reference coordinates of x on each triangle, by hand
    let to_ref = [|x: [f64; 2]| [x[0] - x[1], x[1]], |x: [f64; 2]| [x[0], x[1] - x[0]]];
    let sign = [1.0, -1.0];
    let h = 2f64.sqrt();
    let n = [-1.0 / h, 1.0 / h];
    let basis = ScalarBasis::new(1).unwrap();
    let d = 3;
    let comps = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let mut worst = 0.0f64;
    for sa in 0..2 {
        for sb in 0..2 {
            for (a, &(ra, ca)) in comps.iter().enumerate() {
                for (b, &(rb, cb)) in comps.iter().enumerate() {
                    for i in 0..d {
                        for j in 0..d {
                            let mut oracle = 0.0;
                            if ra == rb {
                                for (t, w) in gauss5() {
                                    let x = [t, t];
                                    let fi = basis.eval(to_ref[sa](x))[i];
                                    let fj = basis.eval(to_ref[sb](x))[j];
                                    oracle += w * h * sign[sa] * sign[sb] * n[ca] * n[cb] * fi * fj / h;
                                }
                            }
                            let got = pen[(spaces.stress_dof(sa, a, i), spaces.stress_dof(sb, b, j))];
                            worst = worst.max((got - oracle).abs());
                        }
                    }
                }
            }
        }
    }
    assert!(worst < 1e-13, "{worst}");
    // no penalty reaches the rotation dofs
    for r in spaces.stress_dim()..spaces.dim() {
        for c in 0..spaces.dim() {
            assert_eq!(pen[(r, c)], 0.0);
        }
    }
}

#[test]
fn identity_on_one_triangle() {
    let mesh = two_triangles();
    let spaces = build_spaces(&mesh, 1).unwrap();
    let mat = material_from_E_nu(1.0, 0.35, 1.0).unwrap();
    let b = assemble_b(&mesh, &spaces, &mat).unwrap();
    // the constant basis function is √2 on the reference triangle
    let mut x = vec![0.0; spaces.dim()];
    x[spaces.stress_dof(0, 0, 0)] = 1.0 / 2f64.sqrt();
    x[spaces.stress_dof(0, 3, 0)] = 1.0 / 2f64.sqrt();
    let area = 0.5;
    let expect = area / (mat.lambda.unwrap() + mat.mu);
    assert!((b.quadratic_form(&x, &x) - expect).abs() < 1e-14);
}
