use approx::assert_relative_eq;
use proptest::prelude::*;
use quadmimo::beampattern::{array_factor, half_power_beamwidth, AngleGrid, Aperture, Cut, Direction, Taper, TaperKind};
use quadmimo::echo::{simulate, PulsingScheme, SchemeKind, WeatherScene};
use quadmimo::experiments::{reconstruct_profile, ReconstructionMode, TimeseriesSettings};
use quadmimo::geometry::{build_planar_array, quadrant_phase_centers, virtual_array};
use quadmimo::io::{read_iq_csv, write_iq_csv};
use quadmimo::moments::{alt_pol_moments, mimo_moments};
use quadmimo::profile::{ReflectivityProfile, StepProfileSpec};
use quadmimo::steering::{path_matrix, synthesize_snapshot, SteeringContext};
use quadmimo::wavelength;

fn lam() -> f64 {
    wavelength(9.4e9)
}

#[test]
fn iq_file_reproduces_the_moments_of_the_block() {
    for kind in [SchemeKind::QuadrantMimo, SchemeKind::AlternatingPol] {
        let scheme = PulsingScheme {
            kind,
            n_pulses: 2048,
            seed: 31,
            ..PulsingScheme::default()
        };
        let scene = WeatherScene {
            velocity_ms: 6.0,
            phi_dp_rad: 0.4,
            ..WeatherScene::default()
        };
        let b = simulate(&scene, &scheme, 2, lam()).unwrap();
        let mut buf = Vec::new();
        write_iq_csv(&mut buf, &b).unwrap();
        let rec = read_iq_csv(buf.as_slice()).unwrap();
        let mut back = b.clone();
        back.samples = rec.samples;
        let m = |blk| match kind {
            SchemeKind::QuadrantMimo => mimo_moments(blk, 1.0).unwrap(),
            SchemeKind::AlternatingPol => alt_pol_moments(blk, blk.v_nyq_base, 1.0).unwrap(),
        };
        let (a, c) = (m(&b), m(&back));
        assert_eq!(format!("{a:?}"), format!("{c:?}"));
        assert!((a[0].v_ms - 6.0).abs() < 0.3, "{kind:?} {}", a[0].v_ms);
    }
}

#[test]
fn virtual_aperture_narrows_the_beam_by_the_aperture_ratio() {
    let layout = build_planar_array(16, 16, 0.016).unwrap();
    let va = virtual_array(&quadrant_phase_centers(&layout), &layout).unwrap();
    let grid = AngleGrid::symmetric(30.0, 0.01);
    let cut = Cut::Azimuth { elevation_deg: 0.0 };
    let phys = Aperture::from_layout(&layout, &Taper::uniform(16), &Taper::uniform(16)).unwrap();
    let virt = Aperture::virtual_grid(&va, TaperKind::Uniform).unwrap();
    let hp = half_power_beamwidth(&array_factor(&phys, 9.4e9, Direction::BORESIGHT, &grid, cut).unwrap()).unwrap();
    let hv = half_power_beamwidth(&array_factor(&virt, 9.4e9, Direction::BORESIGHT, &grid, cut).unwrap()).unwrap();
    assert_relative_eq!(hp / hv, 1.5, max_relative = 0.02);
}

#[test]
fn csv_profile_reconstructs_like_the_built_in_one() {
    let spec = StepProfileSpec {
        half_span_deg: 10.0,
        ..StepProfileSpec::default()
    };
    let p = ReflectivityProfile::step(&spec).unwrap();
    let dir = tempfile_dir();
    let path = dir.join("profile.csv");
    p.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let q = ReflectivityProfile::load_csv(&path, spec.range_m).unwrap();
    let grid = AngleGrid::symmetric(15.0, 0.01);
    let beam = quadmimo::experiments::line_two_way_pattern(57, 0.016, 9.4e9, TaperKind::Taylor { sll_db: -55.0, nbar: 6 }, &grid).unwrap();
    let ts = TimeseriesSettings {
        pulses: 64,
        pri_s: 1e-3,
        wavelength_m: lam(),
        radar_constant: 1.0,
        scene: WeatherScene::default(),
        seed: 1,
    };
    let a = reconstruct_profile(&p, &beam, "b", 1.0, ReconstructionMode::PatternWeighting, &ts).unwrap();
    let b = reconstruct_profile(&q, &beam, "b", 1.0, ReconstructionMode::PatternWeighting, &ts).unwrap();
    assert_eq!(a.scan_azimuths_deg.len(), b.scan_azimuths_deg.len());
    for (x, y) in a.reconstructed_dbz.iter().zip(&b.reconstructed_dbz) {
        assert!((x - y).abs() < 1e-9);
    }
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("quadmimo-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unit_snapshot_is_the_transmit_array_sum(az in -40.0f64..40.0, el in -20.0f64..20.0) {
        let layout = build_planar_array(4, 4, 0.016).unwrap();
        let pcs = quadrant_phase_centers(&layout);
        let a = path_matrix(&SteeringContext::from_geometry(&pcs, Direction::new(az, el), 9.4e9).unwrap());
        prop_assert_eq!((a.n_tx(), a.n_rx()), (4, 1));
        let s = synthesize_snapshot(&a, &[num_complex::Complex64::new(1.0, 0.0); 4]).unwrap();
        let (u, v) = (el.to_radians().cos() * az.to_radians().sin(), el.to_radians().sin());
        let k = 2.0 * std::f64::consts::PI / lam();
        let want: num_complex::Complex64 = pcs
            .tx_centers
            .iter()
            .map(|p| num_complex::Complex64::from_polar(1.0, k * (p.x * u + p.y * v)))
            .sum();
        prop_assert!((s[0].norm() - want.norm()).abs() < 1e-9);
    }
}
