mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use ris_nulling::po_field::*;
use ris_nulling::weights::WeightVector;

use common::{deg, full_geometry, model};

#[test]
fn full_scale_tiling_matches_the_element_count() {
    let g = full_geometry();
    let n = g.element_count() as f64;
    assert!((n - 2756.0).abs() <= 0.01 * 2756.0, "N = {n}");
    assert!((g.element_side_m - 0.1).abs() < 1e-3);
    assert!(g.theta1_rad < g.theta0_rad && g.theta0_rad < PI / 2.0);
    let inner = g.diameter_m / 2.0 - g.rim_width_m;
    for e in &g.elements {
        let rho = e.position.x.hypot(e.position.y);
        assert!(rho >= inner - 1e-12 && rho <= g.diameter_m / 2.0 + 1e-12);
        assert!(e.normal.z > 0.0);
    }
}

#[test]
fn build_geometry_takes_the_basic_parameters() {
    let g = build_geometry(18.0, 0.5, 0.4, 1.5e9).unwrap();
    assert_eq!(g.element_count(), full_geometry().element_count());
    assert!((g.focal_length_m - 7.2).abs() < 1e-12);
    assert!(build_geometry(18.0, 9.5, 0.4, 1.5e9).is_err());
    assert!(build_geometry(18.0, 0.05, 0.4, 1.5e9).is_err());
    assert!(build_geometry(-1.0, 0.5, 0.4, 1.5e9).is_err());
}

#[test]
fn unit_vector_examples() {
    let v = far_field_unit_vector(FarFieldDirection::new(0.0, 1.3).unwrap());
    assert!((v.z - 1.0).abs() < 1e-15 && v.x.abs() < 1e-15 && v.y.abs() < 1e-15);
    let v = far_field_unit_vector(FarFieldDirection::new(PI / 4.0, PI / 2.0).unwrap());
    let h = 2f64.sqrt() / 2.0;
    assert!(v.x.abs() < 1e-15 && (v.y - h).abs() < 1e-15 && (v.z - h).abs() < 1e-15);
    assert!(FarFieldDirection::new(PI / 2.0, 0.0).is_err());
}

#[test]
fn rim_field_ratio_between_feeds() {
    let g = full_geometry();
    let rim = g.surface_point(g.theta0_rad, 0.3);
    let a = incident_magnetic_field(&g, &FeedModel::with_q(1.14).unwrap(), rim)
        .unwrap()
        .norm();
    let b = incident_magnetic_field(&g, &FeedModel::with_q(1.5).unwrap(), rim)
        .unwrap()
        .norm();
    assert!((b / a - g.theta0_rad.cos().powf(0.36)).abs() < 1e-12);
}

#[test]
fn superposition_and_linearity() {
    let g = full_geometry();
    let m = model(&g, 1.14);
    let fv = m.field_vector(deg(1.7, 0.0));
    let mut rng = ris_nulling::weights::chain_rng(3, 0);
    let a = WeightVector::random(g.element_count(), 4, &mut rng)
        .unwrap()
        .to_complex();
    let b = WeightVector::random(g.element_count(), 4, &mut rng)
        .unwrap()
        .to_complex();
    let (alpha, beta) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
    let mixed: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
    let lhs = fv.rim_field(&mixed).unwrap();
    let rhs = alpha * fv.rim_field(&a).unwrap() + beta * fv.rim_field(&b).unwrap();
    assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(rhs.norm()));
    // All-ones weights give the discretized rim sum.
    let ones = vec![Complex64::new(1.0, 0.0); g.element_count()];
    let sum: Complex64 = fv.element_copol.iter().sum();
    assert!((fv.rim_field(&ones).unwrap() - sum).norm() <= 1e-12 * sum.norm());
}

#[test]
fn gain_is_independent_of_radius_and_feed_amplitude() {
    let g = full_geometry();
    let m = model(&g, 1.14);
    let w = WeightVector::uniform(g.element_count(), 4).unwrap();
    let fv = m.field_vector(deg(2.5, 0.0));
    let reference = normalized_gain(&fv, &w).unwrap();
    for r in [1.0, 1e3, 1e6] {
        let at_r = fv.gain_at_radius(&w, g.wavenumber(), r).unwrap();
        assert!(
            (at_r - reference).abs() <= 1e-12 * reference.abs(),
            "{at_r} vs {reference}"
        );
    }
    let loud = PatternModel::new(
        g.clone(),
        FeedModel::new(Complex64::new(10.0, 0.0), 1.14).unwrap(),
        QuadratureSettings::default(),
    )
    .unwrap();
    let louder = loud.gain(deg(2.5, 0.0), &w).unwrap();
    assert!((louder - reference).abs() < 1e-9);
    let doubled = PatternModel::new(
        g.clone(),
        FeedModel::new(Complex64::new(2.0, 0.0), 1.14).unwrap(),
        QuadratureSettings::default(),
    )
    .unwrap();
    let ratio = doubled.fixed_dish_field(deg(0.0, 0.0)).norm() / m.fixed_dish_field(deg(0.0, 0.0)).norm();
    assert!((ratio - 2.0).abs() < 1e-12);
}

#[test]
fn h_plane_mirror_symmetry() {
    let g = full_geometry();
    let m = model(&g, 1.14);
    let w = WeightVector::uniform(g.element_count(), 4).unwrap();
    let grid: Vec<f64> = (0..=30).map(|i| (0.1 * i as f64).to_radians()).collect();
    let a = m.pattern_sweep(&w, &grid, 0.0).unwrap();
    let b = m.pattern_sweep(&w, &grid, PI).unwrap();
    for ((psi, ga), (_, gb)) in a.iter().zip(&b) {
        assert!((ga - gb).abs() < 1e-9, "psi {psi}: {ga} vs {gb}");
    }
    let fa = m.fixed_dish_field(deg(2.0, 0.0));
    let fb = m.fixed_dish_field(deg(2.0, 180.0));
    assert!((fa - fb).norm() <= 1e-9 * fa.norm());
}

#[test]
fn quadrature_converges_at_the_default_resolution() {
    let g = full_geometry();
    for q in [1.14, 1.5] {
        let m = model(&g, q);
        let change = m.check_convergence(deg(0.0, 0.0)).unwrap();
        assert!(change < 0.01, "q {q}: {change} dB");
        let change = m.check_convergence(deg(2.5, 0.0)).unwrap();
        assert!(change < 0.01, "q {q} at 2.5 deg: {change} dB");
    }
}

#[test]
fn discrete_rim_matches_the_continuous_annulus() {
    let g = full_geometry();
    let m = model(&g, 1.14);
    let d = deg(0.0, 0.0);
    let fv = m.field_vector(d);
    let discrete: Complex64 = fv.element_copol.iter().sum();
    let continuous = m.continuous_rim_field(d).unwrap();
    let change = 20.0 * (discrete.norm() / continuous.norm()).log10();
    assert!(change.abs() < 0.1, "{change} dB");
}

#[test]
fn rim_adds_in_phase_at_boresight() {
    let g = full_geometry();
    let fv = model(&g, 1.14).field_vector(deg(0.0, 0.0));
    let rim: Complex64 = fv.element_copol.iter().sum();
    assert!((fv.fixed_copol + rim).norm() > fv.fixed_copol.norm());
}

#[test]
fn pattern_shape_of_the_two_feeds() {
    let g = full_geometry();
    let w = WeightVector::uniform(g.element_count(), 4).unwrap();
    let grid: Vec<f64> = (0..=300).map(|i| (0.01 * i as f64).to_radians()).collect();
    let theoretical = model(&g, 1.14).pattern_sweep(&w, &grid, 0.0).unwrap();
    let true_pattern = model(&g, 1.5).pattern_sweep(&w, &grid, 0.0).unwrap();
    let peak = theoretical[0].1;
    assert!((45.0..=50.0).contains(&peak), "peak {peak} dBi");
    assert!(theoretical.iter().all(|(_, gdb)| *gdb <= peak));
    assert!((peak - true_pattern[0].1).abs() < 1.0);
    // Sidelobes near 2.5 deg differ visibly.
    let at = |p: &[(f64, f64)]| p[250].1;
    assert!((at(&theoretical) - at(&true_pattern)).abs() > 0.5);
    // Same lobe structure: nulls within 0.1 deg (the taper changes the beamwidth slightly).
    let minima = |p: &[(f64, f64)]| -> Vec<usize> {
        (1..p.len() - 1)
            .filter(|&i| p[i].1 < p[i - 1].1 && p[i].1 < p[i + 1].1)
            .collect()
    };
    let (ma, mb) = (minima(&theoretical), minima(&true_pattern));
    assert_eq!(ma.len(), mb.len());
    for (a, b) in ma.iter().zip(&mb) {
        assert!(a.abs_diff(*b) <= 10, "nulls at {a} and {b}");
    }
}

#[test]
fn sweep_rejects_unsorted_grids() {
    let g = full_geometry();
    let w = WeightVector::uniform(g.element_count(), 4).unwrap();
    assert!(model(&g, 1.14).pattern_sweep(&w, &[0.02, 0.01], 0.0).is_err());
}

mod unit {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use num_complex::Complex64;
    use ris_nulling::po_field::*;
    use ris_nulling::vector::Vec3;
    use ris_nulling::Error;

    fn desk_geometry() -> ReflectorGeometry {
        ReflectorGeometry::build(&GeometryParams {
            element_side_wavelengths: 2.5,
            elements_per_ring: Some(40),
            ..GeometryParams::default()
        })
        .unwrap()
    }

    #[test]
    fn default_geometry_tiles_about_2756_elements() {
        let g = build_geometry(18.0, 0.5, 0.4, 1.5e9).unwrap();
        let n = g.element_count() as f64;
        assert!((n - 2756.0).abs() / 2756.0 <= 0.01, "count {n}");
        assert!((g.element_side_m - 0.1).abs() < 1e-3);
        assert!(g.theta1_rad < g.theta0_rad && g.theta0_rad < PI / 2.0);
        assert_eq!(g.ring_counts.iter().sum::<usize>(), g.element_count());
    }

    #[test]
    fn element_sites_lie_on_the_rim_of_the_paraboloid() {
        let g = build_geometry(18.0, 0.5, 0.4, 1.5e9).unwrap();
        let f = g.focal_length_m;
        for e in &g.elements {
            let rho = e.position.x.hypot(e.position.y);
            assert!((e.position.z - rho * rho / (4.0 * f)).abs() < 1e-9);
            assert!((8.5 - 1e-12..=9.0 + 1e-12).contains(&rho));
            assert!((e.normal.norm() - 1.0).abs() < 1e-12);
            assert!(e.normal.dot(Vec3::Z) > 0.0);
        }
    }

    #[test]
    fn oversized_elements_are_rejected() {
        let err = ReflectorGeometry::build(&GeometryParams {
            element_side_wavelengths: 3.0,
            ..GeometryParams::default()
        })
        .unwrap_err();
        assert!(matches!(err, Error::InvalidGeometry(_)));
        assert!(build_geometry(18.0, 9.5, 0.4, 1.5e9).is_err());
        assert!(build_geometry(-1.0, 0.5, 0.4, 1.5e9).is_err());
    }

    #[test]
    fn element_areas_sum_to_the_annulus_surface() {
        let g = desk_geometry();
        let total: f64 = g.elements.iter().map(|e| e.area_m2).sum();
        let expected = paraboloid_band_area(g.focal_length_m, 8.5, 9.0);
        assert!((total - expected).abs() < 1e-9 * expected);
        // slope factor makes the surface band larger than its projection
        assert!(expected > PI * (81.0 - 72.25));
    }

    #[test]
    fn far_field_unit_vector_cases() {
        let v = far_field_unit_vector(FarFieldDirection::new(0.0, 1.3).unwrap());
        assert!((v - Vec3::Z).norm() < 1e-15);
        let d = FarFieldDirection {
            psi_rad: PI / 2.0,
            phi_rad: 0.0,
        };
        assert!((far_field_unit_vector(d) - Vec3::X).norm() < 1e-15);
        let v = far_field_unit_vector(FarFieldDirection::new(PI / 4.0, PI / 2.0).unwrap());
        let h = 2f64.sqrt() / 2.0;
        assert!((v - Vec3::new(0.0, h, h)).norm() < 1e-15);
    }

    #[test]
    fn co_pol_is_y_on_the_h_plane_and_transverse() {
        let d = FarFieldDirection::from_degrees(2.5, 0.0).unwrap();
        let e = co_pol_unit_vector(d);
        assert!((e - Vec3::Y).norm() < 1e-15);
        let d = FarFieldDirection::from_degrees(30.0, 47.0).unwrap();
        assert!(co_pol_unit_vector(d).dot(far_field_unit_vector(d)).abs() < 1e-15);
    }

    #[test]
    fn direction_ranges_are_enforced() {
        assert!(FarFieldDirection::new(PI / 2.0, 0.0).is_err());
        assert!(FarFieldDirection::new(-0.1, 0.0).is_err());
        assert!(FarFieldDirection::new(0.1, 2.0 * PI).is_err());
        assert!((FarFieldDirection::from_degrees(1.0, 360.0).unwrap().phi_rad).abs() < 1e-15);
    }

    #[test]
    fn incident_field_on_axis_has_unit_taper() {
        let g = desk_geometry();
        let feed = FeedModel::new(Complex64::new(2.0, 1.0), 1.14).unwrap();
        // the vertex sits at distance F from the feed
        let h = incident_magnetic_field(&g, &feed, Vec3::new(0.0, 0.0, 0.0)).unwrap();
        assert!((h.norm() - feed.i0.norm() / g.focal_length_m).abs() < 1e-12);
    }

    #[test]
    fn incident_field_scales_with_cos_power_of_q() {
        let g = build_geometry(18.0, 0.5, 0.4, 1.5e9).unwrap();
        let rim = g.surface_point(g.theta0_rad, 0.3);
        let h114 = incident_magnetic_field(&g, &FeedModel::with_q(1.14).unwrap(), rim).unwrap();
        let h15 = incident_magnetic_field(&g, &FeedModel::with_q(1.5).unwrap(), rim).unwrap();
        let ratio = h15.norm() / h114.norm();
        // oracle: cos(θ0)^0.36 evaluated directly from the rim angle
        let expected = g.theta0_rad.cos().powf(0.36);
        assert!((ratio - expected).abs() < 1e-12, "{ratio} vs {expected}");
        let h228 = incident_magnetic_field(&g, &FeedModel::with_q(2.28).unwrap(), rim).unwrap();
        assert!((h228.norm() / h114.norm() - g.theta0_rad.cos().powf(1.14)).abs() < 1e-12);
    }

    #[test]
    fn feed_polarization_singularity_is_reported() {
        let g = desk_geometry();
        let feed = FeedModel::with_q(1.0).unwrap();
        let p = g.focus() + Vec3::Y * 3.0;
        assert!(matches!(
            incident_magnetic_field(&g, &feed, p),
            Err(Error::PolarizationSingularity)
        ));
    }

    #[test]
    fn feed_validation() {
        assert!(FeedModel::with_q(0.0).is_err());
        assert!(FeedModel::new(Complex64::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn fixed_field_is_linear_in_feed_excitation() {
        let g = Arc::new(desk_geometry());
        let d = FarFieldDirection::from_degrees(0.7, 0.0).unwrap();
        let a = PatternModel::new(
            g.clone(),
            FeedModel::with_q(1.14).unwrap(),
            QuadratureSettings::default(),
        )
        .unwrap();
        let b = PatternModel::new(
            g,
            FeedModel::new(Complex64::new(2.0, 0.0), 1.14).unwrap(),
            QuadratureSettings::default(),
        )
        .unwrap();
        let ratio = b.fixed_dish_field(d).norm() / a.fixed_dish_field(d).norm();
        assert!((ratio - 2.0).abs() < 1e-12);
    }
}
