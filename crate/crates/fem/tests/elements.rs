use cvis_fem::plane_stress::{assemble_plane_stress_with, element_strain, strain_energy};
use cvis_fem::{
    assemble_mindlin, assemble_plane_stress, mindlin, MindlinProperties, NodeOrdering, PointLoad,
    StructuredMesh,
};
use proptest::prelude::*;

fn linear_field(p: [f64; 2]) -> [f64; 2] {
    [0.01 + 0.002 * p[0] - 0.003 * p[1], -0.02 + 0.004 * p[0] + 0.001 * p[1]]
}

#[test]
fn single_element_reproduces_constant_strain() {
    let mesh = StructuredMesh::new(1, 1, 1.0, 1.0).unwrap();
    let x = mesh.element_coords(0);
    let mut u = [0.0; 8];
    for a in 0..4 {
        let v = linear_field(x[a]);
        u[2 * a] = v[0];
        u[2 * a + 1] = v[1];
    }
    for &(xi, eta) in &[(0.0, 0.0), (-0.7, 0.2), (0.9, -0.9), (1.0, 1.0)] {
        let eps = element_strain(&x, &u, xi, eta);
        assert!((eps[0] - 0.002).abs() < 1e-14);
        assert!((eps[1] - 0.001).abs() < 1e-14);
        assert!((eps[2] - 0.001).abs() < 1e-14);
    }
}

#[test]
fn patch_of_elements_reproduces_linear_field() {
    let mesh = StructuredMesh::new(4, 3, 2.0, 1.5).unwrap();
    let mut constraints = vec![None; 2 * mesh.n_nodes()];
    for i in 0..=mesh.nx {
        for j in 0..=mesh.ny {
            if i == 0 || j == 0 || i == mesh.nx || j == mesh.ny {
                let n = mesh.node_id(i, j);
                let v = linear_field(mesh.coords[n]);
                constraints[2 * n] = Some(v[0]);
                constraints[2 * n + 1] = Some(v[1]);
            }
        }
    }
    let e = vec![1.7; mesh.n_elements()];
    let sys = assemble_plane_stress_with(&mesh, &e, 0.3, 1.0, &[], &constraints).unwrap();
    let u = sys.solve().unwrap();
    assert!(sys.relative_residual(&u) < 1e-10);
    for n in 0..mesh.n_nodes() {
        let v = linear_field(mesh.coords[n]);
        assert!((u[2 * n] - v[0]).abs() < 1e-12);
        assert!((u[2 * n + 1] - v[1]).abs() < 1e-12);
    }
}

#[test]
fn rigid_translation_stores_no_energy() {
    let mesh = StructuredMesh::new(6, 2, 0.6, 0.2).unwrap();
    let mut constraints = vec![None; 2 * mesh.n_nodes()];
    for j in 0..=mesh.ny {
        let n = mesh.node_id(0, j);
        constraints[2 * n] = Some(0.3);
        constraints[2 * n + 1] = Some(-0.2);
    }
    let e = vec![1.5; mesh.n_elements()];
    let sys = assemble_plane_stress_with(&mesh, &e, 0.3, 1.0, &[], &constraints).unwrap();
    let u = sys.solve().unwrap();
    assert!(strain_energy(&mesh, &e, 0.3, 1.0, &u) < 1e-10);
    for n in 0..mesh.n_nodes() {
        assert!((u[2 * n] - 0.3).abs() < 1e-10 && (u[2 * n + 1] + 0.2).abs() < 1e-10);
    }
}

fn cantilever_tip(nx: usize, ny: usize, ordering: NodeOrdering, e: &[f64], p: f64) -> f64 {
    let mesh = StructuredMesh::with_ordering(nx, ny, 0.6, 0.2, ordering).unwrap();
    let tip = mesh.node_id(nx, ny);
    let load = PointLoad { node: tip, fx: 0.0, fy: -p };
    let sys = assemble_plane_stress(&mesh, e, 0.3, 1.0, &[load]).unwrap();
    let u = sys.solve().unwrap();
    assert!(sys.relative_residual(&u) < 1e-10);
    -u[2 * tip + 1]
}

#[test]
fn cantilever_matches_timoshenko_beam() {
    let (e, nu, l, h, p): (f64, f64, f64, f64, f64) = (1.5, 0.3, 0.6, 0.2, 1.0);
    let inertia = h * h * h / 12.0;
    let g = e / (2.0 * (1.0 + nu));
    let oracle = p * l.powi(3) / (3.0 * e * inertia) + p * l / (5.0 / 6.0 * g * h);
    let fe = cantilever_tip(60, 20, NodeOrdering::ColumnMajor, &vec![e; 1200], p);
    let rel = (fe - oracle).abs() / oracle;
    assert!(rel < 0.15, "fe {fe} vs beam theory {oracle} ({rel})");
}

#[test]
fn plane_stress_is_invariant_under_renumbering() {
    let e: Vec<f64> = (0..200).map(|k| 1.0 + (k as f64 * 0.37).sin().abs()).collect();
    let a = cantilever_tip(20, 10, NodeOrdering::RowMajor, &e, 1.0);
    let b = cantilever_tip(20, 10, NodeOrdering::ColumnMajor, &e, 1.0);
    assert!((a - b).abs() < 1e-10 * a.abs());
}

fn plate_center(n: usize, ordering: NodeOrdering, h: [f64; 4], s: [f64; 4]) -> f64 {
    let mesh = StructuredMesh::with_ordering(n, n, 1.0, 1.0, ordering).unwrap();
    let sys = assemble_mindlin(&mesh, &h, &s, &MindlinProperties::default()).unwrap();
    let u = sys.solve().unwrap();
    assert!(sys.relative_residual(&u) < 1e-10);
    u[3 * mindlin::center_node(&mesh).unwrap()]
}

#[test]
fn thin_clamped_plate_matches_classical_coefficient() {
    let props = MindlinProperties::default();
    let h = 0.01;
    let oracle = 0.00126 / props.flexural_rigidity(h);
    let fe = plate_center(30, NodeOrdering::RowMajor, [h; 4], [1.0; 4]);
    let rel = (fe - oracle).abs() / oracle;
    assert!(rel < 0.05, "fe {fe} vs classical {oracle} ({rel})");
}

#[test]
fn coarse_and_fine_plates_agree() {
    let h = [0.1; 4];
    let s = [1.0; 4];
    let coarse = plate_center(10, NodeOrdering::RowMajor, h, s);
    let fine = plate_center(30, NodeOrdering::RowMajor, h, s);
    assert!((coarse - fine).abs() / fine < 0.1, "{coarse} vs {fine}");
}

#[test]
fn plate_is_invariant_under_renumbering() {
    let h = [0.05, 0.07, 0.09, 0.1];
    let s = [1.0, 1.3, 1.9, 1.5];
    let a = plate_center(12, NodeOrdering::RowMajor, h, s);
    let b = plate_center(12, NodeOrdering::ColumnMajor, h, s);
    assert!((a - b).abs() < 1e-10 * a.abs());
}

#[test]
fn stiffest_least_loaded_plate_deflects_least() {
    let corners = [(0.05, 1.0), (0.05, 2.0), (0.1, 1.0), (0.1, 2.0)];
    let w: Vec<f64> = corners
        .iter()
        .map(|&(h, s)| plate_center(10, NodeOrdering::RowMajor, [h; 4], [s; 4]))
        .collect();
    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(min, w[2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plane_stress_is_linear_in_load(p in 0.1f64..10.0, scale in 0.5f64..4.0) {
        let e = vec![1.3; 60];
        let a = cantilever_tip(10, 6, NodeOrdering::ColumnMajor, &e, p);
        let b = cantilever_tip(10, 6, NodeOrdering::ColumnMajor, &e, scale * p);
        prop_assert!((b - scale * a).abs() <= 1e-10 * b.abs());
    }

    #[test]
    fn plate_is_linear_in_load(
        h in proptest::array::uniform4(0.05f64..0.1),
        s in proptest::array::uniform4(1.0f64..2.0),
    ) {
        let a = plate_center(8, NodeOrdering::RowMajor, h, s);
        let doubled = s.map(|v| 2.0 * v);
        let b = plate_center(8, NodeOrdering::RowMajor, h, doubled);
        prop_assert!((b - 2.0 * a).abs() <= 1e-10 * b.abs());
    }

    #[test]
    fn random_moduli_give_small_residual(
        e in proptest::collection::vec(1.0f64..2.0, 48),
    ) {
        let mesh = StructuredMesh::new(8, 6, 0.6, 0.2).unwrap();
        let tip = mesh.node_id(8, 6);
        let load = PointLoad { node: tip, fx: 0.2, fy: -1.0 };
        let sys = assemble_plane_stress(&mesh, &e, 0.3, 1.0, &[load]).unwrap();
        let u = sys.solve().unwrap();
        prop_assert!(sys.relative_residual(&u) < 1e-10);
        prop_assert!(strain_energy(&mesh, &e, 0.3, 1.0, &u) > 0.0);
    }
}
