//! Profile reconstruction, mean-power variance curves and scan-time
//! accounting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beampattern::{
    array_factor, first_nulls, half_power_beamwidth, two_way_pattern, Aperture, AngleGrid, BeamPattern, Cut,
    Direction, Taper, TaperKind,
};
use crate::echo::{gaussian_spectrum_series, WeatherScene};
use crate::moments::{gaussian_power_correlation, power_variance_model, VarianceModelInput};
use crate::profile::{ReflectivityProfile, PROFILE_STEP_DEG};
use crate::rng::derive_seed;
use crate::{db_to_linear, linear_to_db, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionMode {
    /// Weighted average of the profile's linear powers.
    PatternWeighting,
    /// Weighted average of per-cell powers estimated from simulated pulses.
    FullTimeseries,
}

/// Parameters for simulating the per-cell echoes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeseriesSettings {
    pub pulses: usize,
    pub pri_s: f64,
    pub wavelength_m: f64,
    pub radar_constant: f64,
    /// Velocity, width and polarimetric fields; power comes from the profile.
    pub scene: WeatherScene,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub beam_label: String,
    pub hpbw_deg: f64,
    pub scan_azimuths_deg: Vec<f64>,
    pub true_dbz: Vec<f64>,
    pub reconstructed_dbz: Vec<f64>,
    pub error_db: Vec<f64>,
    pub rmse_db: f64,
}

/// Cell offsets, relative to beam center, covered by the main lobe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub left_deg: f64,
    pub right_deg: f64,
}

/// Main-lobe extent between the first nulls.
pub fn footprint(pattern: &BeamPattern) -> Result<Footprint> {
    let (l, r) = first_nulls(pattern)?;
    let peak = pattern.peak_angle();
    Ok(Footprint {
        left_deg: pattern.angles_deg[l] - peak,
        right_deg: pattern.angles_deg[r] - peak,
    })
}

/// Beam centers at multiples of `step_deg` whose footprint stays inside the profile.
pub fn scan_azimuths(profile: &ReflectivityProfile, fp: Footprint, step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg > 0.0) {
        return Err(Error::Experiment(format!("scan step must be positive, got {step_deg}")));
    }
    let lo = profile.start_deg - fp.left_deg;
    let hi = profile.stop_deg() - fp.right_deg;
    let eps = 1e-9;
    let k0 = ((lo - eps) / step_deg).ceil() as i64;
    let k1 = ((hi + eps) / step_deg).floor() as i64;
    if k1 < k0 {
        return Err(Error::Experiment(format!(
            "beam footprint [{:.3}, {:.3}] deg does not fit in the profile span [{}, {}]",
            fp.left_deg,
            fp.right_deg,
            profile.start_deg,
            profile.stop_deg()
        )));
    }
    Ok((k0..=k1).map(|k| k as f64 * step_deg).collect())
}

/// Per-cell mean power of `pulses` simulated signal-only echoes.
pub fn simulate_cell_powers(profile: &ReflectivityProfile, ts: &TimeseriesSettings) -> Result<Vec<f64>> {
    if ts.pulses < 8 {
        return Err(Error::Experiment("need at least 8 pulses per cell".into()));
    }
    if !(ts.radar_constant > 0.0) {
        return Err(Error::Experiment("radar constant must be positive".into()));
    }
    let template = WeatherScene {
        snr_db: f64::INFINITY,
        ..ts.scene
    };
    (0..profile.len())
        .into_par_iter()
        .map(|i| {
            let scene = WeatherScene {
                mean_power: db_to_linear(profile.values_dbz[i]) / ts.radar_constant,
                ..template
            };
            let s = gaussian_spectrum_series(ts.pulses, &scene, ts.pri_s, ts.wavelength_m, derive_seed(ts.seed, i as u64))?;
            Ok(s.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / ts.pulses as f64)
        })
        .collect()
}

/// Beam-weighted reconstruction from per-cell linear powers (already
/// divided by the radar constant).
pub fn reconstruct_from_powers(
    profile: &ReflectivityProfile,
    cell_power: &[f64],
    radar_constant: f64,
    pattern: &BeamPattern,
    beam_label: &str,
    step_deg: f64,
) -> Result<ReconstructionResult> {
    if cell_power.len() != profile.len() {
        return Err(Error::Experiment("cell powers do not match the profile".into()));
    }
    let hpbw = half_power_beamwidth(pattern)?;
    if hpbw < 5.0 * PROFILE_STEP_DEG {
        return Err(Error::Experiment(format!(
            "beam HPBW {hpbw:.4} deg is narrower than five profile samples"
        )));
    }
    let fp = footprint(pattern)?;
    let scans = scan_azimuths(profile, fp, step_deg)?;
    let peak = pattern.peak_angle();

    let mut true_dbz = Vec::with_capacity(scans.len());
    let mut recon = Vec::with_capacity(scans.len());
    for &s in &scans {
        let i0 = profile.nearest_index(s + fp.left_deg)?;
        let i1 = profile.nearest_index(s + fp.right_deg)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in i0..=i1 {
            let off = profile.azimuth(i) - s;
            if off < fp.left_deg - 1e-9 || off > fp.right_deg + 1e-9 {
                continue;
            }
            let w = pattern.gain_at(off + peak);
            num += w * cell_power[i];
            den += w;
        }
        if den <= 0.0 {
            return Err(Error::Experiment(format!("empty beam footprint at {s} deg")));
        }
        recon.push(linear_to_db(num / den * radar_constant));
        true_dbz.push(profile.value_at(s)?);
    }
    let error_db: Vec<f64> = recon.iter().zip(&true_dbz).map(|(r, t)| r - t).collect();
    let rmse_db = (error_db.iter().map(|e| e * e).sum::<f64>() / error_db.len() as f64).sqrt();
    Ok(ReconstructionResult {
        beam_label: beam_label.to_string(),
        hpbw_deg: hpbw,
        scan_azimuths_deg: scans,
        true_dbz,
        reconstructed_dbz: recon,
        error_db,
        rmse_db,
    })
}

/// Reconstructs `profile` as seen through the two-way `pattern`.
pub fn reconstruct_profile(
    profile: &ReflectivityProfile,
    pattern: &BeamPattern,
    beam_label: &str,
    step_deg: f64,
    mode: ReconstructionMode,
    ts: &TimeseriesSettings,
) -> Result<ReconstructionResult> {
    let powers = match mode {
        ReconstructionMode::PatternWeighting => profile
            .values_dbz
            .iter()
            .map(|&z| db_to_linear(z) / ts.radar_constant)
            .collect(),
        ReconstructionMode::FullTimeseries => simulate_cell_powers(profile, ts)?,
    };
    reconstruct_from_powers(profile, &powers, ts.radar_constant, pattern, beam_label, step_deg)
}

/// A Taylor-weighted line aperture sized for a two-way beamwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamDesign {
    pub elements: usize,
    pub two_way: BeamPattern,
    pub hpbw_deg: f64,
}

/// Two-way pattern of an `n`-element line aperture.
pub fn line_two_way_pattern(
    n: usize,
    spacing_m: f64,
    frequency_hz: f64,
    taper: TaperKind,
    grid: &AngleGrid,
) -> Result<BeamPattern> {
    let t = Taper::from_kind(taper, n)?;
    let ap = Aperture::line(n, spacing_m, &t)?;
    let one = array_factor(&ap, frequency_hz, Direction::BORESIGHT, grid, Cut::Azimuth { elevation_deg: 0.0 })?;
    two_way_pattern(&one, &one)
}

/// Chooses the element count whose two-way HPBW is closest to the target.
pub fn design_beam(
    target_hpbw_deg: f64,
    spacing_m: f64,
    frequency_hz: f64,
    taper: TaperKind,
    grid: &AngleGrid,
) -> Result<BeamDesign> {
    if !(target_hpbw_deg > 0.0) {
        return Err(Error::Experiment("target beamwidth must be positive".into()));
    }
    let width = |n: usize| -> Result<(BeamPattern, f64)> {
        let p = line_two_way_pattern(n, spacing_m, frequency_hz, taper, grid)?;
        let h = half_power_beamwidth(&p)?;
        Ok((p, h))
    };
    // HPBW falls with n; bisect for the crossing then take the nearer side
    let (mut lo, mut hi) = (4usize, 1024usize);
    if width(hi)?.1 > target_hpbw_deg {
        return Err(Error::Experiment(format!("{target_hpbw_deg} deg needs more than {hi} elements")));
    }
    if width(lo)?.1 <= target_hpbw_deg {
        hi = lo;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if width(mid)?.1 > target_hpbw_deg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (pl, hl) = width(lo)?;
    let (ph, hh) = width(hi)?;
    let (elements, two_way, hpbw_deg) = if (hl - target_hpbw_deg).abs() <= (hh - target_hpbw_deg).abs() {
        (lo, pl, hl)
    } else {
        (hi, ph, hh)
    };
    Ok(BeamDesign {
        elements,
        two_way,
        hpbw_deg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub n: usize,
    pub mc_var: f64,
    pub mc_sd_linear: f64,
    pub mc_sd_db: f64,
    pub model_var: f64,
    pub model_sd_linear: f64,
    pub model_sd_db: f64,
}

/// Monte-Carlo spread of the mean-power estimate against the analytic model.
pub fn variance_vs_samples(
    scene: &WeatherScene,
    n_list: &[usize],
    pri_s: f64,
    wavelength_m: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<VarianceRow>> {
    if trials < 100 {
        return Err(Error::Experiment(format!("need at least 100 trials, got {trials}")));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::Experiment("sample counts must be positive".into()));
    }
    let n_max = *n_list.iter().max().unwrap();
    let len = n_max.max(8);
    let estimates: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = gaussian_spectrum_series(len, scene, pri_s, wavelength_m, derive_seed(seed, t as u64))?;
            let mut out = Vec::with_capacity(n_list.len());
            for &n in n_list {
                out.push(s.samples[..n].iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let total = scene.signal_power() + if scene.snr_db == f64::INFINITY { 0.0 } else { scene.noise_power() };
    let snr = if scene.snr_db == f64::NEG_INFINITY { f64::NEG_INFINITY } else { scene.snr_db };
    let db = 10.0 / std::f64::consts::LN_10;
    n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let lin: Vec<f64> = estimates.iter().map(|e| e[j]).collect();
            let dbs: Vec<f64> = lin.iter().map(|&p| linear_to_db(p)).collect();
            let mc_var = sample_variance(&lin);
            let rho_p = if snr == f64::NEG_INFINITY {
                let mut r = vec![0.0; n];
                r[0] = 1.0;
                r
            } else {
                gaussian_power_correlation(n, scene.spectrum_width_ms, pri_s, wavelength_m, snr)
            };
            let model_var = power_variance_model(&VarianceModelInput {
                p_mean: total,
                n,
                rho_p,
            })?;
            Ok(VarianceRow {
                n,
                mc_var,
                mc_sd_linear: mc_var.sqrt(),
                mc_sd_db: sample_variance(&dbs).sqrt(),
                model_var,
                model_sd_linear: model_var.sqrt(),
                model_sd_db: db * model_var.sqrt() / total,
            })
        })
        .collect()
}

pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanTime {
    pub beam_positions: u64,
    pub seconds: f64,
}

/// `ceil(sector / beamwidth) * dwell / simultaneous_beams`.
pub fn scan_time(sector_deg: f64, beamwidth_deg: f64, dwell_s: f64, simultaneous_beams: u32) -> Result<ScanTime> {
    if !(sector_deg > 0.0 && beamwidth_deg > 0.0 && dwell_s > 0.0) || simultaneous_beams == 0 {
        return Err(Error::Experiment("scan-time inputs must be positive".into()));
    }
    let positions = (sector_deg / beamwidth_deg - 1e-9).ceil() as u64;
    Ok(ScanTime {
        beam_positions: positions,
        seconds: positions as f64 * dwell_s / simultaneous_beams as f64,
    })
}
