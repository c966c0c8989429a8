use formation_core::field::{analyze, CylinderGrid, FieldKind};
use formation_core::kernels::PlantCoeffs;
use formation_core::steady::{steady_field, steady_mode, BoundaryData, ChannelSpec};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn boundary_rows_are_imposed(lam in -5.0f64..25.0, beta in -1.0f64..1.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let grid = CylinderGrid::new(31, 16).unwrap();
        let spec = ChannelSpec {
            coeffs: PlantCoeffs::real(lam, beta),
            f: BoundaryData::new(vec![(1, C64::new(a, 0.3)), (-2, C64::new(0.2, b))]),
            g: BoundaryData::new(vec![(0, C64::new(b, 0.0)), (1, C64::new(0.5, -a))]),
        };
        let Ok(u) = steady_field(&spec, &grid, FieldKind::Complex) else { return Ok(()); };
        let f = spec.f.profile(&grid, FieldKind::Complex);
        let g = spec.g.profile(&grid, FieldKind::Complex);
        for j in 0..grid.n {
            prop_assert!((u.at(0, j) - f[j]).norm() <= 1e-12);
            prop_assert!((u.at(grid.m - 1, j) - g[j]).norm() <= 1e-12);
        }
    }

    #[test]
    fn conjugate_symmetric_data_give_real_heights(lam in 0.0f64..20.0, a in -2.0f64..2.0, c in -1.0f64..1.0) {
        let grid = CylinderGrid::new(31, 16).unwrap();
        let coeffs = PlantCoeffs::real(lam, 1.0);
        let data = BoundaryData::new(vec![(0, C64::new(a, 0.0)), (2, C64::new(c, 0.4)), (-2, C64::new(c, -0.4))]);
        let g = BoundaryData::new(data.modes.iter().map(|&(n, v)| (n, v * 0.5)).collect());
        let spec = ChannelSpec { coeffs, f: data, g };
        let Ok(z) = steady_field(&spec, &grid, FieldKind::Complex) else { return Ok(()); };
        // near a Dirichlet resonance the field is large; rounding scales with it
        let scale = z.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(z.values.iter().all(|v| v.im.abs() <= 1e-12 * scale));
    }
}

#[test]
fn modes_of_the_steady_field_are_the_mode_solutions() {
    let grid = CylinderGrid::new(41, 16).unwrap();
    let spec = ChannelSpec {
        coeffs: PlantCoeffs::real(8.0, 0.5),
        f: BoundaryData::new(vec![(1, C64::new(1.0, 0.0))]),
        g: BoundaryData::new(vec![(1, C64::new(1.0, 0.0)), (0, C64::new(0.4, 0.0))]),
    };
    let u = steady_field(&spec, &grid, FieldKind::Complex).unwrap();
    let modes = analyze(&u);
    let m1 = steady_mode(1, &spec.coeffs, C64::new(1.0, 0.0), C64::new(1.0, 0.0), &grid).unwrap();
    for k in 0..grid.m {
        assert!((modes.mode(1)[k] - m1[k]).norm() < 1e-12);
    }
}
