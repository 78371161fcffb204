//! Assembly of the mixed DG bilinear forms into sparse matrices.
//!
//! For a stress `σ ∈ P_k(T_h)^{2×2}` and rotation `r = s J`, `s ∈ P_{k-1}(T_h)`:
//!
//! ```text
//! B((σ, r), (τ, s)) = ∫ C⁻¹σ:τ + ∫ r:τ + ∫ s:σ
//! A_h = B + ∫ ρ⁻¹ div_h σ · div_h τ
//!         + Σ_{F ∈ F*} a_S / h_F ∫_F [σ]·[τ]
//!         − Σ_{F ∈ F*} ∫_F ({ρ⁻¹ div_h σ}·[τ] + {ρ⁻¹ div_h τ}·[σ])
//! ```
//!
//! where `F*` holds the interior and Neumann faces.

pub mod assembly;
pub mod material;
pub mod pencil;
pub mod sparse;

pub use assembly::{
    assemble_ah, assemble_b, assemble_conforming_a, assemble_pencil, Assembler, AssemblyOptions,
};
pub use material::{MaterialModel, Tensor2};
pub use pencil::{AssembledPencil, PencilLayout};
pub use sparse::CsrMatrix;

use crate::error::Result;

#[allow(non_snake_case)]
pub fn material_from_E_nu(young: f64, nu: f64, rho: f64) -> Result<MaterialModel> {
    MaterialModel::from_e_nu(young, nu, rho)
}

pub fn compliance_pairing(sigma: &Tensor2, tau: &Tensor2, material: &MaterialModel) -> f64 {
    material.compliance_pairing(sigma, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryPartition, FaceLabel, Mesh, Side};
    use crate::space::build_spaces;
    use proptest::prelude::*;

    fn setup(n: usize, k: usize, nu: f64) -> (Mesh, crate::space::DGSpacePair, MaterialModel) {
        let mesh = Mesh::uniform(n, BoundaryPartition::clamped(Side::Bottom)).unwrap();
        let spaces = build_spaces(&mesh, k).unwrap();
        (mesh, spaces, material_from_E_nu(1.0, nu, 1.0).unwrap())
    }

    fn rotation_only(spaces: &crate::space::DGSpacePair, seed: u64) -> Vec<f64> {
        let mut x = vec![0.0; spaces.dim()];
        for (i, v) in x[spaces.stress_dim()..].iter_mut().enumerate() {
            *v = ((i as u64 * 2654435761 + seed) % 1000) as f64 / 500.0 - 1.0;
        }
        x
    }

    #[test]
    fn symmetric_over_the_grid() {
        for n in [2, 4] {
            for k in [1, 2, 3] {
                for nu in [0.35, 0.5] {
                    let (m, s, mat) = setup(n, k, nu);
                    let p = assemble_pencil(&m, &s, &mat, 10.0, &AssemblyOptions::default()).unwrap();
                    let (ra, rb) = p.asymmetry();
                    assert!(ra <= 1e-12 && rb <= 1e-12, "N={n} k={k} nu={nu}: {ra} {rb}");
                }
            }
        }
    }

    #[test]
    fn quadrature_invariance() {
        for k in [1, 2, 3] {
            let (m, s, mat) = setup(4, k, 0.35);
            let lo = assemble_pencil(&m, &s, &mat, 10.0, &AssemblyOptions::default()).unwrap();
            let hi = assemble_pencil(&m, &s, &mat, 10.0, &AssemblyOptions { exactness: Some(2 * k + 4) }).unwrap();
            for (x, y) in [(&lo.a, &hi.a), (&lo.b, &hi.b)] {
                let d = x.add_scaled(-1.0, y).unwrap().max_abs();
                assert!(d <= 1e-12 * x.max_abs(), "k={k}: {d}");
            }
        }
    }

    #[test]
    fn rotation_block_of_b_is_zero() {
        let (m, s, mat) = setup(4, 2, 0.35);
        let b = assemble_b(&m, &s, &mat).unwrap();
        for i in s.stress_dim()..s.dim() {
            for (j, _) in b.row(i) {
                assert!(j < s.stress_dim());
            }
        }
        let x = rotation_only(&s, 3);
        assert_eq!(b.quadratic_form(&x, &x), 0.0);
    }

    #[test]
    fn rotation_only_vectors_are_kernel_modes() {
        for nu in [0.35, 0.5] {
            let (m, s, mat) = setup(4, 2, nu);
            let p = assemble_pencil(&m, &s, &mat, 20.0, &AssemblyOptions::default()).unwrap();
            let x = rotation_only(&s, 17);
            let ax = p.a.mul_vec(&x);
            let bx = p.b.mul_vec(&x);
            let diff = ax.iter().zip(&bx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff <= 1e-13, "{diff}");
        }
    }

    #[test]
    fn constant_traceless_field() {
        let (m, s, mat) = setup(4, 2, 0.35);
        let asm = Assembler::new(&m, &s, &mat, &AssemblyOptions::default()).unwrap();
        let x = asm.project(|_| [[0.0, 1.0], [1.0, 0.0]], |_| 0.0).unwrap();
        let a_s = 7.0;
        let a = asm.ah(a_s).unwrap();
        let neumann = m.count_label(FaceLabel::Neumann) as f64;
        // |σ n| = 1 on every axis-aligned face
        let expect = 2.7 + a_s * neumann;
        let got = a.quadratic_form(&x, &x);
        assert!((got - expect).abs() < 1e-11 * expect, "{got} vs {expect}");
    }

    #[test]
    fn rejects_nonpositive_stabilization() {
        let (m, s, mat) = setup(2, 1, 0.35);
        assert!(assemble_ah(&m, &s, &mat, 0.0).is_err());
        assert!(assemble_ah(&m, &s, &mat, -1.0).is_err());
        let other = Mesh::uniform(4, BoundaryPartition::default()).unwrap();
        assert!(assemble_b(&other, &s, &mat).is_err());
    }

    #[test]
    fn trace_fields_are_null_in_the_incompressible_limit() {
        let (m, s, mat) = setup(4, 2, 0.5);
        let asm = Assembler::new(&m, &s, &mat, &AssemblyOptions::default()).unwrap();
        let b = asm.b().unwrap();
        let q = |p: crate::mesh::Point| 1.0 + p[0] * p[1] - 2.0 * p[1] * p[1];
        let x = asm.project(|p| [[q(p), 0.0], [0.0, q(p)]], |_| 0.0).unwrap();
        assert!(b.quadratic_form(&x, &x).abs() < 1e-13);
    }

    #[test]
    fn b_is_continuous_in_lambda() {
        let (m, s, inc) = setup(2, 2, 0.5);
        let near = material_from_E_nu(1.0, 0.4999999, 1.0).unwrap();
        let b0 = assemble_b(&m, &s, &inc).unwrap();
        let b1 = assemble_b(&m, &s, &near).unwrap();
        let d = b1.add_scaled(-1.0, &b0).unwrap().max_abs();
        assert!(d > 0.0 && d <= 10.0 / near.lambda.unwrap(), "{d}");
    }

    #[test]
    fn conforming_form_matches_dg_form() {
        for nu in [0.35, 0.5] {
            let (m, s, mat) = setup(4, 3, nu);
            let asm = Assembler::new(&m, &s, &mat, &AssemblyOptions::default()).unwrap();
            // σ n = 0 on the Neumann sides x = 0, x = 1, y = 1
            let f1 = asm
                .project(
                    |p| {
                        let (x, y) = (p[0], p[1]);
                        let a = x * (1.0 - x);
                        [[a * (1.0 - y), a * (1.0 - y)], [a * y, (1.0 - y) * (2.0 + x)]]
                    },
                    |p| p[0] - p[1],
                )
                .unwrap();
            let f2 = asm.project(|p| [[p[0] * (1.0 - p[0]), 0.0], [0.0, 1.0 - p[1]]], |_| 1.0).unwrap();
            let fields = vec![f1, f2];
            let g = assemble_conforming_a(&m, &s, &mat, &fields).unwrap();
            let a = asm.ah(13.0).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let dg = a.quadratic_form(&fields[i], &fields[j]);
                    assert!((g[(i, j)] - dg).abs() <= 1e-11 * dg.abs().max(1.0), "{} vs {dg}", g[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn conforming_form_rejects_jumps() {
        let (m, s, mat) = setup(2, 1, 0.35);
        let asm = Assembler::new(&m, &s, &mat, &AssemblyOptions::default()).unwrap();
        let mut x = vec![0.0; s.dim()];
        x[s.stress_dof(0, 0, 0)] = 1.0;
        let err = assemble_conforming_a(&m, &s, &mat, &[x]).unwrap_err();
        assert!(matches!(err, crate::Error::NonconformingField { .. }));
        let r = rotation_only(&s, 5);
        let g = assemble_conforming_a(&m, &s, &mat, &[r.clone()]).unwrap();
        assert_eq!(g[(0, 0)], asm.b().unwrap().quadratic_form(&r, &r));
    }

    #[test]
    fn dg_norm_of_a_smooth_field() {
        let (m, s, mat) = setup(4, 2, 0.35);
        let asm = Assembler::new(&m, &s, &mat, &AssemblyOptions::default()).unwrap();
        // σ = [[x, 0], [0, 0]]: ‖σ‖² = 1/3, div σ = (1, 0), σ n = (x n_0, 0)
        let x = asm.project(|p| [[p[0], 0.0], [0.0, 0.0]], |_| 0.0).unwrap();
        let jumps: f64 = m
            .faces
            .iter()
            .filter(|f| f.label == FaceLabel::Neumann && f.normal[0].abs() > 0.5)
            .map(|f| {
                let x0 = m.vertices[f.vertices[0]][0];
                x0 * x0 / f.length * f.length
            })
            .sum();
        let expect = 1.0 / 3.0 + 1.0 + jumps;
        let got = asm.dg_norm_squared(&x, false);
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        assert!(asm.dg_norm_squared(&x, true) > got);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn difference_ignores_rotation_part(
            stress in proptest::collection::vec(-1.0f64..1.0, 96),
            rot1 in proptest::collection::vec(-1.0f64..1.0, 8),
            rot2 in proptest::collection::vec(-1.0f64..1.0, 8),
            a_s in 0.5f64..100.0,
        ) {
            let (m, s, mat) = setup(2, 1, 0.35);
            let p = assemble_pencil(&m, &s, &mat, a_s, &AssemblyOptions::default()).unwrap();
            let d = p.a.add_scaled(-1.0, &p.b).unwrap();
            let x1: Vec<f64> = stress.iter().chain(&rot1).copied().collect();
            let x2: Vec<f64> = stress.iter().chain(&rot2).copied().collect();
            let v1 = d.quadratic_form(&x1, &x1);
            let v2 = d.quadratic_form(&x2, &x2);
            prop_assert!((v1 - v2).abs() <= 1e-10 * v1.abs().max(1.0));
        }

        #[test]
        fn forms_are_symmetric_bilinear(
            x in proptest::collection::vec(-1.0f64..1.0, 104),
            y in proptest::collection::vec(-1.0f64..1.0, 104),
        ) {
            let (m, s, mat) = setup(2, 1, 0.49);
            let p = assemble_pencil(&m, &s, &mat, 5.0, &AssemblyOptions::default()).unwrap();
            for mm in [&p.a, &p.b] {
                let xy = mm.quadratic_form(&x, &y);
                let yx = mm.quadratic_form(&y, &x);
                prop_assert!((xy - yx).abs() <= 1e-11 * xy.abs().max(1.0));
            }
        }
    }
}
