//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use quadmimo::beampattern::{
    array_factor, array_factor_complex, half_power_beamwidth, peak_sidelobe, two_way_pattern, AngleGrid, Aperture,
    Cut, Direction, TaperKind,
};
use quadmimo::echo::{
    alternating_offsets, simulate_alternating_pol, simulate_quadrant_mimo, PulsingScheme, QuadrantDiversity,
    SchemeKind, WeatherScene,
};
use quadmimo::experiments::{
    design_beam, reconstruct_profile, sample_variance, scan_time, variance_vs_samples, ReconstructionMode,
    TimeseriesSettings,
};
use quadmimo::geometry::{
    build_planar_array, lattice_coords, overlap_factor, quadrant_phase_centers, virtual_array, Point2,
};
use quadmimo::moments::{
    alt_pol_moments, mimo_doppler, mimo_power, power_variance_model, quadrant_covariances, single_quadrant_velocity,
    VarianceModelInput, MIMO_LAGS,
};
use quadmimo::profile::{ReflectivityProfile, StepProfileSpec};
use quadmimo::{wavelength, SPEED_OF_LIGHT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const F_HZ: f64 = 9.4e9;
const SPACING_M: f64 = 0.016;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn taylor() -> TaperKind {
    TaperKind::Taylor { sll_db: -55.0, nbar: 6 }
}

/// Exact per-axis aperture ratio from integer lattice indices.
fn criterion_1() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for n in [8usize, 16] {
        let layout = build_planar_array(n, n, SPACING_M).map_err(|e| e.to_string())?;
        let va = virtual_array(&quadrant_phase_centers(&layout), &layout).map_err(|e| e.to_string())?;
        let unit = layout.lattice_unit();
        let pitch_units = 2i64;
        let axis_span = |pts: &[Point2], x: bool| -> Result<i64, String> {
            let idx: BTreeSet<i64> = pts
                .iter()
                .map(|p| lattice_coords(*p, unit).map(|c| if x { c.0 } else { c.1 }))
                .collect::<Option<_>>()
                .ok_or("off-lattice position")?;
            Ok(idx.last().unwrap() - idx.first().unwrap() + pitch_units)
        };
        let phys = layout.positions();
        let virt = va.positions();
        for x in [true, false] {
            let p = axis_span(&phys, x)?;
            let v = axis_span(&virt, x)?;
            ok &= 2 * v == 3 * p;
            detail.push(format!("{n}x{n} {}: {v}/{p} units", if x { "x" } else { "y" }));
        }
        let of = overlap_factor(&va, &layout).map_err(|e| e.to_string())?;
        ok &= of.equals_ratio(3, 2);
        detail.push(format!(
            "overlap {}/{} x {}/{}",
            of.virtual_x, of.physical_x, of.virtual_y, of.physical_y
        ));
    }
    check(ok, detail.join(", "))
}

fn criterion_2() -> Outcome {
    let layout = build_planar_array(34, 34, SPACING_M).map_err(|e| e.to_string())?;
    let va = virtual_array(&quadrant_phase_centers(&layout), &layout).map_err(|e| e.to_string())?;
    let grid = AngleGrid::symmetric(90.0, 0.01);
    let cut = Cut::Azimuth { elevation_deg: 0.0 };
    let one = |kind| -> Result<_, String> {
        let ap = Aperture::virtual_grid(&va, kind).map_err(|e| e.to_string())?;
        array_factor(&ap, F_HZ, Direction::BORESIGHT, &grid, cut).map_err(|e| e.to_string())
    };
    let uni = one(TaperKind::Uniform)?;
    let uni2 = two_way_pattern(&uni, &uni).map_err(|e| e.to_string())?;
    let hpbw = half_power_beamwidth(&uni2).map_err(|e| e.to_string())?;
    let tap = one(taylor())?;
    let tap2 = two_way_pattern(&tap, &tap).map_err(|e| e.to_string())?;
    let psl1 = peak_sidelobe(&tap).map_err(|e| e.to_string())?;
    let psl2 = peak_sidelobe(&tap2).map_err(|e| e.to_string())?;
    check(
        (hpbw - 1.5).abs() <= 0.25 && psl1 <= -50.0 && psl2 <= -55.0,
        format!(
            "aperture {:.3} m, two-way HPBW {hpbw:.4} deg, Taylor PSL {psl1:.2} dBc one-way / {psl2:.2} dBc two-way",
            va.aperture.0
        ),
    )
}

/// Direct sum over 3-D unit vectors, independent of the library's cosines.
fn naive_af(pos: &[Point2], w: &[f64], steer: (f64, f64), dir: (f64, f64)) -> Complex64 {
    let k = 2.0 * PI * F_HZ / SPEED_OF_LIGHT;
    let unit = |(az, el): (f64, f64)| {
        let (a, e) = (az.to_radians(), el.to_radians());
        [e.cos() * a.sin(), e.sin(), e.cos() * a.cos()]
    };
    let (s, d) = (unit(steer), unit(dir));
    pos.iter()
        .zip(w)
        .map(|(p, &wi)| {
            let r = [p.x, p.y, 0.0];
            let phase: f64 = (0..3).map(|i| r[i] * (d[i] - s[i])).sum::<f64>() * k;
            Complex64::new(wi * phase.cos(), wi * phase.sin())
        })
        .sum()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_303);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(4..80);
        let pos: Vec<Point2> = (0..n)
            .map(|_| Point2::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)))
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
        let ap = Aperture::new(pos.clone(), w.clone()).map_err(|e| e.to_string())?;
        let steer = Direction::new(rng.random_range(-45.0..45.0), rng.random_range(-45.0..45.0));
        let fixed = rng.random_range(-40.0..40.0);
        let azimuth_cut = rng.random_bool(0.5);
        let cut = if azimuth_cut {
            Cut::Azimuth { elevation_deg: fixed }
        } else {
            Cut::Elevation { azimuth_deg: fixed }
        };
        let angles: Vec<f64> = (0..20).map(|_| rng.random_range(-90.0..90.0)).collect();
        let af = array_factor_complex(&ap, F_HZ, steer, &angles, cut).map_err(|e| e.to_string())?;
        let scale: f64 = w.iter().map(|x| x.abs()).sum();
        for (a, got) in angles.iter().zip(&af) {
            let dir = if azimuth_cut { (*a, fixed) } else { (fixed, *a) };
            let want = naive_af(&pos, &w, (steer.az_deg, steer.el_deg), dir);
            worst = worst.max((got - want).norm() / scale);
        }
    }
    check(worst <= 1e-12, format!("max |error| / sum|w| = {worst:.2e} over 400 evaluations"))
}

fn criterion_4() -> Outcome {
    let lam = wavelength(F_HZ);
    let gates = 40;
    let mut ok = true;
    let mut lines = Vec::new();
    for v in [-5.0, 0.0, 5.0] {
        for phi in [0.0, 0.3] {
            let scene = WeatherScene {
                velocity_ms: v,
                phi_dp_rad: phi,
                spectrum_width_ms: 1.0,
                snr_db: 25.0,
                zdr_db: 1.0,
                ..WeatherScene::default()
            };
            let scheme = PulsingScheme {
                kind: SchemeKind::AlternatingPol,
                n_pulses: 10_000,
                seed: 400 + (v as i64 + 10) as u64 * 10 + (phi * 10.0) as u64,
                ..PulsingScheme::default()
            };
            let b = simulate_alternating_pol(&scene, &scheme, gates, lam).map_err(|e| e.to_string())?;
            let m = alt_pol_moments(&b, b.v_nyq_base, 1.0).map_err(|e| e.to_string())?;
            let stat = |f: fn(&quadmimo::moments::MomentSet) -> f64, truth: f64| {
                let x: Vec<f64> = m.iter().map(f).collect();
                (mean(&x) - truth, 3.0 * (sample_variance(&x) / x.len() as f64).sqrt())
            };
            let (bv, sv) = stat(|m| m.v_ms, v);
            let (bp, sp) = stat(|m| m.phidp_rad, phi);
            let (bz, sz) = stat(|m| m.zdr_db, 1.0);
            ok &= bv.abs() <= 0.3 && bp.abs() <= 0.03 && bz.abs() <= 0.2;
            lines.push(format!(
                "v={v:+} phi={phi}: dv {bv:+.4}(3s {sv:.4}) dphi {bp:+.4}(3s {sp:.4}) dzdr {bz:+.4}(3s {sz:.4})"
            ));
        }
    }
    check(ok, lines.join("; "))
}

fn criterion_5() -> Outcome {
    let lam = wavelength(F_HZ);
    let vb = lam / 4e-3;
    let gates = 60;
    let scene = WeatherScene {
        velocity_ms: 3.0 * vb,
        spectrum_width_ms: 1.0,
        snr_db: 25.0,
        ..WeatherScene::default()
    };
    let base = PulsingScheme {
        n_pulses: 4096,
        seed: 505,
        ..PulsingScheme::default()
    };
    let estimates = |scheme: &PulsingScheme| -> Result<(Vec<f64>, Vec<f64>), String> {
        let b = simulate_quadrant_mimo(&scene, scheme, gates, lam).map_err(|e| e.to_string())?;
        let mut mimo = Vec::new();
        let mut single = Vec::new();
        for g in 0..gates {
            let cov = quadrant_covariances(&b.gate(g), &MIMO_LAGS).map_err(|e| e.to_string())?;
            mimo.push(mimo_doppler(&cov, b.v_nyq_base).map_err(|e| e.to_string())?.velocity_ms);
            single.push(single_quadrant_velocity(&cov, 0, b.v_nyq_base).map_err(|e| e.to_string())?);
        }
        Ok((mimo, single))
    };
    let (v0, single) = estimates(&base)?;
    let recovered = v0.iter().all(|v| (v - 3.0 * vb).abs() <= 0.1 * vb);
    let aliased = single.iter().all(|v| (v - 3.0 * vb).abs() > vb);
    let sigma3 = 3.0 * sample_variance(&v0).sqrt();
    let mut worst_shift: f64 = 0.0;
    for offsets in [alternating_offsets(PI / 3.0), [PI / 6.0, -PI / 6.0, 0.1, -0.3]] {
        let (v1, _) = estimates(&PulsingScheme {
            quadrant_offsets_rad: offsets,
            ..base.clone()
        })?;
        for (a, b) in v0.iter().zip(&v1) {
            worst_shift = worst_shift.max((a - b).abs());
        }
    }
    check(
        recovered && aliased && worst_shift < sigma3,
        format!(
            "v_nyq_base {vb:.3} m/s, mimo mean {:.3} m/s (true {:.3}), lag-4 mean {:.3} m/s, offset shift max {worst_shift:.2e} < 3s {sigma3:.2e}",
            mean(&v0),
            3.0 * vb,
            mean(&single)
        ),
    )
}

fn criterion_6() -> Outcome {
    let lam = wavelength(F_HZ);
    let trials = 2000;
    let scene = WeatherScene {
        snr_db: 25.0,
        ..WeatherScene::default()
    };
    let scheme = PulsingScheme {
        n_pulses: 128,
        diversity: QuadrantDiversity::IndependentRealizations,
        seed: 606,
        ..PulsingScheme::default()
    };
    let b = simulate_quadrant_mimo(&scene, &scheme, trials, lam).map_err(|e| e.to_string())?;
    let mut all = Vec::with_capacity(trials);
    let mut one = Vec::with_capacity(trials);
    for g in 0..trials {
        let cov = quadrant_covariances(&b.gate(g), &[0]).map_err(|e| e.to_string())?;
        all.push(mimo_power(&cov, None).map_err(|e| e.to_string())?);
        one.push(cov.get(0, 0).unwrap().re);
    }
    let ratio = sample_variance(&all) / sample_variance(&one);
    check((ratio - 0.25).abs() <= 0.05, format!("variance ratio {ratio:.4} over {trials} trials"))
}

fn criterion_7() -> Outcome {
    let mut exact = true;
    for n in [1usize, 16, 37, 128] {
        let mut rho = vec![0.0; n];
        rho[0] = 1.0;
        let p = 2.5;
        let v = power_variance_model(&VarianceModelInput { p_mean: p, n, rho_p: rho }).map_err(|e| e.to_string())?;
        exact &= v == p * p / n as f64;
    }
    let scene = WeatherScene {
        spectrum_width_ms: 2.0,
        snr_db: f64::INFINITY,
        ..WeatherScene::default()
    };
    let rows = variance_vs_samples(&scene, &[16, 32, 64, 128], 1e-3, 0.1, 3000, 707).map_err(|e| e.to_string())?;
    let within = rows.iter().all(|r| (r.mc_var / r.model_var - 1.0).abs() <= 0.15);
    let monotone = rows.windows(2).all(|w| w[1].model_var < w[0].model_var);
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("N={} mc/model {:.3}", r.n, r.mc_var / r.model_var))
        .collect();
    check(
        exact && within && monotone,
        format!("uncorrelated exact: {exact}, {}, monotone: {monotone}", detail.join(", ")),
    )
}

fn criterion_8() -> Outcome {
    let profile = ReflectivityProfile::step(&StepProfileSpec::default()).map_err(|e| e.to_string())?;
    let grid = AngleGrid::symmetric(15.0, 0.01);
    let ts = TimeseriesSettings {
        pulses: 10_000,
        pri_s: 1e-3,
        wavelength_m: wavelength(F_HZ),
        radar_constant: 1.0,
        scene: WeatherScene::default(),
        seed: 808,
    };
    let mut rmse = Vec::new();
    let mut worst: f64 = 0.0;
    let mut labels = Vec::new();
    for (label, target) in [("2deg", 2.0), ("1p5deg", 1.5)] {
        let d = design_beam(target, SPACING_M, F_HZ, taylor(), &grid).map_err(|e| e.to_string())?;
        let pw = reconstruct_profile(&profile, &d.two_way, label, 1.0, ReconstructionMode::PatternWeighting, &ts)
            .map_err(|e| e.to_string())?;
        let ft = reconstruct_profile(&profile, &d.two_way, label, 1.0, ReconstructionMode::FullTimeseries, &ts)
            .map_err(|e| e.to_string())?;
        for (a, b) in pw.reconstructed_dbz.iter().zip(&ft.reconstructed_dbz) {
            worst = worst.max((a - b).abs());
        }
        labels.push(format!(
            "{label}: {} el, HPBW {:.3}, rmse {:.3}/{:.3} dB",
            d.elements, d.hpbw_deg, pw.rmse_db, ft.rmse_db
        ));
        rmse.push((pw.rmse_db, ft.rmse_db));
    }
    let ordered = rmse[1].0 < rmse[0].0 && rmse[1].1 < rmse[0].1;
    check(
        ordered && worst <= 0.3,
        format!("{}; max mode difference {worst:.4} dB", labels.join("; ")),
    )
}

fn criterion_9() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (beams, want_ms) in [(1u32, 60u64), (2, 30), (4, 15)] {
        let t = scan_time(90.0, 1.5, 1e-3, beams).map_err(|e| e.to_string())?;
        let ms = t.seconds * 1e3;
        ok &= t.beam_positions == 60 && (ms - want_ms as f64).abs() < 1e-9;
        parts.push(format!("{beams} beam(s): {ms} ms"));
    }
    check(ok, parts.join(", "))
}

fn run_cli(dir: &Path, out: &str, sub: &str, sets: &[&str]) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_quadmimo"));
    cmd.current_dir(dir).args([sub, "--out", out, "--seed", "1234"]);
    for s in sets {
        cmd.args(["--set", s]);
    }
    let o = cmd.output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{sub}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(())
}

fn data_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut v = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let p = e.map_err(|e| e.to_string())?.path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if !name.ends_with(".summary.txt") {
            v.push((name, fs::read(&p).map_err(|e| e.to_string())?));
        }
    }
    v.sort();
    Ok(v)
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&str, &[&str]); 7] = [
        ("geometry", &[]),
        ("pattern", &["pattern.grid.step_deg=0.05"]),
        ("simulate", &["scheme.n_pulses=256", "scheme.gates=4"]),
        ("moments", &["scheme.n_pulses=1024", "scheme.gates=4", "scheme.kind=alternating_pol"]),
        ("reconstruct", &["reconstruct.mode=full_timeseries", "reconstruct.pulses=256"]),
        ("variance", &["variance.trials=200"]),
        ("scantime", &[]),
    ];
    let out = tmp.path().join("out");
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        if out.exists() {
            fs::remove_dir_all(&out).map_err(|e| e.to_string())?;
        }
        for (sub, sets) in runs {
            run_cli(tmp.path(), "out", sub, sets)?;
        }
        snapshots.push(data_files(&out)?);
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    let same = a == b;
    check(
        same && a.len() >= 2 * runs.len(),
        format!("{} data files across {} subcommands identical: {same}", a.len(), runs.len()),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("virtual-array 1.5x law", criterion_1),
        ("virtual aperture pattern metrics", criterion_2),
        ("array factor vs direct-sum oracle", criterion_3),
        ("alternating-pol closed loop", criterion_4),
        ("MIMO Doppler extension", criterion_5),
        ("four-quadrant averaging gain", criterion_6),
        ("power variance model", criterion_7),
        ("reconstruction ordering", criterion_8),
        ("scan-time table", criterion_9),
        ("CLI determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {tag} {name} [{:.1}s]: {detail}",
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
