//! Reference models checked against brute-force constructions, and Gauss assembly
//! checked against Monte-Carlo integration.

use std::collections::BTreeMap;

use roombem::assembly::Assembler;
use roombem::kernels::LaplacePoint;
use roombem::oracle::{
    mirror_plane, monte_carlo_entry, rigid_box_modes, McKernel, McTarget, Plane, ShoeboxIsm,
};
use roombem::scene::{make_plate, Impedance, Medium, TriangleSpec};
use roombem::{BoundaryMesh, Point3, QuadratureRule};

const WALL_REFLECTION: [f64; 6] = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4];

fn walls(lengths: [f64; 3]) -> [Plane; 6] {
    [
        Plane::axis(0, 0.0),
        Plane::axis(0, lengths[0]),
        Plane::axis(1, 0.0),
        Plane::axis(1, lengths[1]),
        Plane::axis(2, 0.0),
        Plane::axis(2, lengths[2]),
    ]
}

fn key(p: &Point3) -> [i64; 3] {
    [0, 1, 2].map(|i| (p[i] * 1e9).round() as i64)
}

#[test]
fn image_lattice_matches_recursive_mirroring() {
    let lengths = [2.0, 1.5, 1.1];
    let source = Point3::new(0.3, 1.1, 0.45);
    let room = ShoeboxIsm::new(lengths, source, WALL_REFLECTION, Medium::default()).unwrap();
    let planes = walls(lengths);
    let max_order = 3;

    // Mirror every image across every wall except the one that produced it.
    let mut brute: BTreeMap<[i64; 3], (Point3, f64, usize)> = BTreeMap::new();
    brute.insert(key(&source), (source, 1.0, 0));
    let mut frontier = vec![(source, 1.0, None::<usize>)];
    for order in 1..=max_order {
        let mut next = Vec::new();
        for (p, gain, last) in frontier {
            for (w, plane) in planes.iter().enumerate() {
                if Some(w) == last {
                    continue;
                }
                let image = mirror_plane(&p, plane);
                let g = gain * WALL_REFLECTION[w];
                brute.entry(key(&image)).or_insert((image, g, order));
                next.push((image, g, Some(w)));
            }
        }
        frontier = next;
    }

    let lattice = room.images(max_order);
    assert_eq!(lattice.len(), brute.len());
    for img in &lattice {
        let (pos, gain, order) = brute[&key(&img.position)];
        assert!((pos - img.position).norm() < 1e-12);
        assert_eq!(order, img.order, "image at {:?}", img.position);
        assert!(
            (gain - img.gain).abs() < 1e-15,
            "image at {:?}",
            img.position
        );
    }
}

#[test]
fn rigid_box_modes_match_direct_enumeration() {
    let medium = Medium::default();
    let lengths = [2.0, 1.5, 1.0];
    let f_max = 300.0;
    let modes = rigid_box_modes(lengths, &medium, f_max).unwrap();

    let mut direct = Vec::new();
    for nx in 0..20usize {
        for ny in 0..20usize {
            for nz in 0..20usize {
                let f = 0.5
                    * medium.sound_speed
                    * ((nx as f64 / lengths[0]).powi(2)
                        + (ny as f64 / lengths[1]).powi(2)
                        + (nz as f64 / lengths[2]).powi(2))
                    .sqrt();
                if f > 0.0 && f <= f_max {
                    direct.push(f);
                }
            }
        }
    }
    direct.sort_by(f64::total_cmp);
    assert_eq!(modes.len(), direct.len());
    for (m, f) in modes.iter().zip(&direct) {
        assert!((m.frequency - f).abs() < 1e-9);
    }
    assert!((modes[0].frequency - 343.0 / 4.0).abs() < 1e-12);
    assert_eq!(modes[0].indices, [1, 0, 0]);
}

/// Two rigid unit squares facing each other 1 m apart, two triangles each.
fn facing_patches() -> BoundaryMesh {
    let mut vertices = Vec::new();
    for z in [0.0, 1.0] {
        for (x, y) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
            vertices.push(Point3::new(x, y, z));
        }
    }
    let tri = |v: [usize; 3]| TriangleSpec {
        vertices: v,
        impedance: Impedance::Rigid,
        group: "patch".into(),
    };
    BoundaryMesh::new(
        vertices,
        vec![
            tri([0, 1, 2]),
            tri([0, 2, 3]),
            tri([4, 6, 5]),
            tri([4, 7, 6]),
        ],
    )
    .unwrap()
}

#[test]
fn facing_patches_agree_with_monte_carlo() {
    let mesh = facing_patches();
    assert!(mesh.elements()[0].normal.z > 0.0 && mesh.elements()[2].normal.z < 0.0);
    let medium = Medium::default();
    let assembler =
        Assembler::from_parts(&mesh, medium, None, &[], QuadratureRule::default()).unwrap();
    let s = LaplacePoint::new(0.0, 0.0);
    let a = assembler.assemble_a(s);
    for (i, (row, col)) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 0), (3, 1)]
        .into_iter()
        .enumerate()
    {
        let est = monte_carlo_entry(
            &mesh,
            &medium,
            McTarget::ElementPair { row, col },
            McKernel::Operator,
            s,
            10_000_000,
            40 + i as u64,
        )
        .unwrap();
        let ratio = (a[(row, col)] - est.value).norm() / est.std_error();
        assert!(
            ratio < 3.0,
            "entry ({row}, {col}): {} vs {} ({ratio:.2} SE)",
            a[(row, col)],
            est.value
        );
    }
}

#[test]
fn receiver_entry_on_the_normal_axis_agrees_with_monte_carlo() {
    let mesh = make_plate([1.0, 1.0], 0.0, 1.0, Impedance::Rigid).unwrap();
    let medium = Medium::default();
    let receivers = [Point3::new(0.1, -0.05, 0.6)];
    let assembler =
        Assembler::from_parts(&mesh, medium, None, &receivers, QuadratureRule::default()).unwrap();
    for (k, s) in [
        LaplacePoint::new(0.0, 0.0),
        LaplacePoint::from_frequency(250.0),
    ]
    .into_iter()
    .enumerate()
    {
        let c = assembler.assemble_c(s);
        for element in 0..mesh.len() {
            let est = monte_carlo_entry(
                &mesh,
                &medium,
                McTarget::ElementPoint {
                    element,
                    point: receivers[0],
                },
                McKernel::Operator,
                s,
                1_000_000,
                (10 * k + element) as u64,
            )
            .unwrap();
            let ratio = (c[(0, element)] - est.value).norm() / est.std_error();
            assert!(ratio < 3.0, "element {element} at {s:?}: {ratio:.2} SE");
        }
    }
}
