//! Weather echo time series and pulsing schemes.
//!
//! Series are drawn with the spectral method: complex Gaussian coefficients
//! are shaped by a periodized Gaussian Doppler spectrum and inverse
//! transformed. A positive radial velocity produces a positive Doppler
//! frequency, i.e. the sample phase advances with time.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, stream};
use crate::{db_to_linear, Error, Result};

const MAX_FFT_LEN: usize = 1 << 22;

/// Stream indices within one gate seed.
const SIGNAL_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const CROSS_POL_STREAM: u64 = 2;
const QUADRANT_STREAM_BASE: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherScene {
    /// Mean signal power, linear (horizontal channel for dual-pol).
    pub mean_power: f64,
    pub velocity_ms: f64,
    pub spectrum_width_ms: f64,
    /// Signal-to-noise ratio; `-inf` turns the signal off and `inf` removes noise.
    pub snr_db: f64,
    pub rho_hv: f64,
    pub zdr_db: f64,
    pub phi_dp_rad: f64,
}

impl Default for WeatherScene {
    fn default() -> Self {
        WeatherScene {
            mean_power: 1.0,
            velocity_ms: 0.0,
            spectrum_width_ms: 1.0,
            snr_db: 30.0,
            rho_hv: 0.98,
            zdr_db: 0.0,
            phi_dp_rad: 0.0,
        }
    }
}

impl WeatherScene {
    /// Every violated invariant, in field order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.mean_power > 0.0 && self.mean_power.is_finite()) {
            v.push(format!("mean_power must be positive and finite, got {}", self.mean_power));
        }
        if !self.velocity_ms.is_finite() {
            v.push("velocity_ms must be finite".into());
        }
        if !(self.spectrum_width_ms > 0.0 && self.spectrum_width_ms.is_finite()) {
            v.push(format!("spectrum_width_ms must be > 0, got {}", self.spectrum_width_ms));
        }
        if self.snr_db.is_nan() {
            v.push("snr_db must not be NaN".into());
        }
        if !(0.0..=1.0).contains(&self.rho_hv) {
            v.push(format!("rho_hv must lie in [0, 1], got {}", self.rho_hv));
        }
        if !self.zdr_db.is_finite() {
            v.push("zdr_db must be finite".into());
        }
        if !self.phi_dp_rad.is_finite() {
            v.push("phi_dp_rad must be finite".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(msg) => Err(Error::Simulation(msg)),
            None => Ok(()),
        }
    }

    /// Signal power actually generated (zero when the SNR is `-inf`).
    pub fn signal_power(&self) -> f64 {
        if self.snr_db == f64::NEG_INFINITY {
            0.0
        } else {
            self.mean_power
        }
    }

    /// Noise power per channel, referenced to `mean_power`.
    pub fn noise_power(&self) -> f64 {
        if self.snr_db == f64::NEG_INFINITY {
            self.mean_power
        } else {
            self.mean_power * db_to_linear(-self.snr_db)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    AlternatingPol,
    QuadrantMimo,
}

/// How the four quadrant transmissions relate to the scatterers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadrantDiversity {
    /// All quadrants observe one scattering process.
    #[default]
    CommonVolume,
    /// Each quadrant observes its own, statistically identical, realization.
    IndependentRealizations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsingScheme {
    pub kind: SchemeKind,
    pub pri_s: f64,
    pub n_pulses: usize,
    /// Extra phase carried by every pulse of quadrant 1..4, radians.
    pub quadrant_offsets_rad: [f64; 4],
    /// Residual of the other quadrants' returns, dB; `None` means perfect separation.
    pub leakage_db: Option<f64>,
    pub diversity: QuadrantDiversity,
    pub seed: u64,
}

impl Default for PulsingScheme {
    fn default() -> Self {
        PulsingScheme {
            kind: SchemeKind::QuadrantMimo,
            pri_s: 1e-3,
            n_pulses: 4096,
            quadrant_offsets_rad: [0.0; 4],
            leakage_db: None,
            diversity: QuadrantDiversity::CommonVolume,
            seed: 0,
        }
    }
}

/// Offsets `[0, phi, 0, phi]`: adjacent quadrant pairs see `+phi` then `-phi`.
pub fn alternating_offsets(phi: f64) -> [f64; 4] {
    [0.0, phi, 0.0, phi]
}

impl PulsingScheme {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.pri_s > 0.0 && self.pri_s.is_finite()) {
            v.push(format!("pri_s must be positive, got {}", self.pri_s));
        }
        if self.n_pulses < 8 {
            v.push(format!("n_pulses must be at least 8, got {}", self.n_pulses));
        }
        if self.kind == SchemeKind::QuadrantMimo && !self.n_pulses.is_multiple_of(4) {
            v.push(format!("n_pulses must be divisible by 4, got {}", self.n_pulses));
        }
        if self.quadrant_offsets_rad.iter().any(|x| !x.is_finite()) {
            v.push("quadrant_offsets_rad must be finite".into());
        }
        if let Some(l) = self.leakage_db {
            if l.is_nan() || l > 0.0 {
                v.push(format!("leakage_db must be <= 0, got {l}"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(msg) => Err(Error::Simulation(msg)),
            None => Ok(()),
        }
    }

    /// Spacing between consecutive pulses of the block.
    pub fn sample_interval(&self) -> f64 {
        match self.kind {
            SchemeKind::AlternatingPol => self.pri_s,
            SchemeKind::QuadrantMimo => self.pri_s / 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseSource {
    H,
    V,
    Quadrant(u8),
}

impl std::fmt::Display for PulseSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PulseSource::H => f.write_str("H"),
            PulseSource::V => f.write_str("V"),
            PulseSource::Quadrant(q) => write!(f, "Q{q}"),
        }
    }
}

impl std::str::FromStr for PulseSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(PulseSource::H),
            "V" => Ok(PulseSource::V),
            _ => s
                .strip_prefix('Q')
                .and_then(|n| n.parse::<u8>().ok())
                .filter(|q| (1..=4).contains(q))
                .map(PulseSource::Quadrant)
                .ok_or_else(|| Error::Format(format!("unknown pulse label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseLabel {
    pub source: PulseSource,
    pub time_s: f64,
}

/// Pulse-by-gate complex samples with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct IQBlock {
    /// Rows are pulses, columns range gates.
    pub samples: Array2<Complex64>,
    pub labels: Vec<PulseLabel>,
    pub kind: SchemeKind,
    pub pri_s: f64,
    pub wavelength_m: f64,
    /// `lambda / (4 pri)`.
    pub v_nyq_base: f64,
    /// Per-channel noise power, when known.
    pub noise_power: Option<f64>,
    /// Set when the spectrum is too wide for the sampling rate.
    pub truncation_warning: bool,
}

impl IQBlock {
    pub fn n_pulses(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_gates(&self) -> usize {
        self.samples.ncols()
    }

    pub fn gate(&self, g: usize) -> Vec<Complex64> {
        self.samples.column(g).to_vec()
    }
}

/// Complex series plus generation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub samples: Vec<Complex64>,
    pub noise_power: f64,
    pub truncation_warning: bool,
}

fn complex_normal(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Unit-power Gaussian-spectrum process of length `n`.
///
/// Returns the samples and whether the spectrum exceeds a third of the
/// sampling band.
fn gaussian_process(
    n: usize,
    doppler_hz: f64,
    sigma_hz: f64,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<Complex64>, bool) {
    let fs = 1.0 / dt;
    let resolve = (5.0 / (sigma_hz * dt)).ceil();
    let want = if resolve.is_finite() {
        (2 * n).max(resolve as usize)
    } else {
        MAX_FFT_LEN
    };
    let m = want.next_power_of_two().min(MAX_FFT_LEN).max(n.next_power_of_two());

    let center = doppler_hz.rem_euclid(fs);
    let mut spectrum: Vec<f64> = (0..m)
        .map(|k| {
            let f = k as f64 * fs / m as f64;
            (-3..=3)
                .map(|j| {
                    let d = f - center + j as f64 * fs;
                    (-d * d / (2.0 * sigma_hz * sigma_hz)).exp()
                })
                .sum()
        })
        .collect();
    let total: f64 = spectrum.iter().sum();
    if total > 0.0 {
        spectrum.iter_mut().for_each(|s| *s /= total);
    } else {
        // narrower than one bin: all power in the nearest bin
        let k = ((center / fs) * m as f64).round() as usize % m;
        spectrum.iter_mut().for_each(|s| *s = 0.0);
        spectrum[k] = 1.0;
    }

    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .map(|&s| complex_normal(rng, 1.0) * s.sqrt())
        .collect();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf.truncate(n);
    (buf, sigma_hz > fs / 3.0)
}

fn check_len(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::Simulation(format!("need at least 8 samples, got {n}")));
    }
    Ok(())
}

/// Gaussian-spectrum weather series with additive white noise.
pub fn gaussian_spectrum_series(
    n: usize,
    scene: &WeatherScene,
    sample_interval_s: f64,
    wavelength_m: f64,
    seed: u64,
) -> Result<Series> {
    check_len(n)?;
    scene.validate()?;
    if !(sample_interval_s > 0.0) || !(wavelength_m > 0.0) {
        return Err(Error::Simulation("sample interval and wavelength must be positive".into()));
    }
    let fd = 2.0 * scene.velocity_ms / wavelength_m;
    let sf = 2.0 * scene.spectrum_width_ms / wavelength_m;
    let (mut x, warn) = gaussian_process(n, fd, sf, sample_interval_s, &mut stream(seed, SIGNAL_STREAM));
    let amp = scene.signal_power().sqrt();
    x.iter_mut().for_each(|s| *s *= amp);
    let noise = add_noise(&mut x, scene, &mut stream(seed, NOISE_STREAM));
    Ok(Series {
        samples: x,
        noise_power: noise,
        truncation_warning: warn,
    })
}

fn add_noise(x: &mut [Complex64], scene: &WeatherScene, rng: &mut ChaCha8Rng) -> f64 {
    let np = if scene.snr_db == f64::INFINITY { 0.0 } else { scene.noise_power() };
    if np > 0.0 {
        x.iter_mut().for_each(|s| *s += complex_normal(rng, np));
    }
    np
}

fn check_gates(gates: usize) -> Result<()> {
    if gates == 0 {
        return Err(Error::Simulation("need at least one range gate".into()));
    }
    Ok(())
}

/// Alternating H/V pulses; pulse 0 is horizontal.
pub fn simulate_alternating_pol(
    scene: &WeatherScene,
    scheme: &PulsingScheme,
    gates: usize,
    wavelength_m: f64,
) -> Result<IQBlock> {
    if scheme.kind != SchemeKind::AlternatingPol {
        return Err(Error::Simulation("scheme is not alternating_pol".into()));
    }
    scheme.validate()?;
    scene.validate()?;
    check_gates(gates)?;
    let n = scheme.n_pulses;
    let dt = scheme.pri_s;
    let fd = 2.0 * scene.velocity_ms / wavelength_m;
    let sf = 2.0 * scene.spectrum_width_ms / wavelength_m;

    let ph = scene.signal_power();
    let pv = ph * db_to_linear(-scene.zdr_db);
    let rho = scene.rho_hv;
    let rho_c = (1.0 - rho * rho).max(0.0).sqrt();
    // V lags H by phi_dp so that the lag-1 products carry -/+ phi_dp
    let rot = Complex64::from_polar(1.0, -scene.phi_dp_rad);

    let mut samples = Array2::zeros((n, gates));
    let mut warn = false;
    let mut noise = 0.0;
    for g in 0..gates {
        let gs = derive_seed(scheme.seed, g as u64);
        let (a, w1) = gaussian_process(n, fd, sf, dt, &mut stream(gs, SIGNAL_STREAM));
        let (b, w2) = gaussian_process(n, fd, sf, dt, &mut stream(gs, CROSS_POL_STREAM));
        warn |= w1 || w2;
        let mut col: Vec<Complex64> = (0..n)
            .map(|p| {
                if p % 2 == 0 {
                    a[p] * ph.sqrt()
                } else {
                    (a[p] * rho + b[p] * rho_c) * rot * pv.sqrt()
                }
            })
            .collect();
        noise = add_noise(&mut col, scene, &mut stream(gs, NOISE_STREAM));
        for (p, s) in col.into_iter().enumerate() {
            samples[[p, g]] = s;
        }
    }

    let labels = (0..n)
        .map(|p| PulseLabel {
            source: if p % 2 == 0 { PulseSource::H } else { PulseSource::V },
            time_s: p as f64 * dt,
        })
        .collect();
    Ok(IQBlock {
        samples,
        labels,
        kind: SchemeKind::AlternatingPol,
        pri_s: scheme.pri_s,
        wavelength_m,
        v_nyq_base: wavelength_m / (4.0 * scheme.pri_s),
        noise_power: Some(noise),
        truncation_warning: warn,
    })
}

/// Four-quadrant staggered transmission: pulse `p` comes from quadrant
/// `p mod 4 + 1`, one quarter PRI after the previous pulse.
pub fn simulate_quadrant_mimo(
    scene: &WeatherScene,
    scheme: &PulsingScheme,
    gates: usize,
    wavelength_m: f64,
) -> Result<IQBlock> {
    if scheme.kind != SchemeKind::QuadrantMimo {
        return Err(Error::Simulation("scheme is not quadrant_mimo".into()));
    }
    scheme.validate()?;
    scene.validate()?;
    check_gates(gates)?;
    let n = scheme.n_pulses;
    let dt = scheme.sample_interval();
    let fd = 2.0 * scene.velocity_ms / wavelength_m;
    let sf = 2.0 * scene.spectrum_width_ms / wavelength_m;
    let amp = scene.signal_power().sqrt();
    let offsets: Vec<Option<Complex64>> = scheme
        .quadrant_offsets_rad
        .iter()
        .map(|&t| (t != 0.0).then(|| Complex64::from_polar(1.0, t)))
        .collect();
    let leak = scheme.leakage_db.map(|db| 10f64.powf(db / 20.0)).filter(|&g| g > 0.0);

    let mut samples = Array2::zeros((n, gates));
    let mut warn = false;
    let mut noise = 0.0;
    for g in 0..gates {
        let gs = derive_seed(scheme.seed, g as u64);
        let mut x = match scheme.diversity {
            QuadrantDiversity::CommonVolume => {
                let (x, w) = gaussian_process(n, fd, sf, dt, &mut stream(gs, SIGNAL_STREAM));
                warn |= w;
                x
            }
            QuadrantDiversity::IndependentRealizations => {
                let mut x = vec![Complex64::new(0.0, 0.0); n];
                for q in 0..4 {
                    let (r, w) = gaussian_process(n, fd, sf, dt, &mut stream(gs, QUADRANT_STREAM_BASE + q as u64));
                    warn |= w;
                    for p in (q..n).step_by(4) {
                        x[p] = r[p];
                    }
                }
                x
            }
        };
        for (p, s) in x.iter_mut().enumerate() {
            *s *= amp;
            if let Some(r) = offsets[p % 4] {
                *s *= r;
            }
        }
        if let Some(gain) = leak {
            let clean = x.clone();
            for p in 0..n {
                for j in 1..=3 {
                    if p >= j {
                        x[p] += clean[p - j] * gain;
                    }
                }
            }
        }
        noise = add_noise(&mut x, scene, &mut stream(gs, NOISE_STREAM));
        for (p, s) in x.into_iter().enumerate() {
            samples[[p, g]] = s;
        }
    }

    let labels = (0..n)
        .map(|p| PulseLabel {
            source: PulseSource::Quadrant((p % 4 + 1) as u8),
            time_s: p as f64 * dt,
        })
        .collect();
    Ok(IQBlock {
        samples,
        labels,
        kind: SchemeKind::QuadrantMimo,
        pri_s: scheme.pri_s,
        wavelength_m,
        v_nyq_base: wavelength_m / (4.0 * scheme.pri_s),
        noise_power: Some(noise),
        truncation_warning: warn,
    })
}

/// Dispatches on the scheme kind.
pub fn simulate(scene: &WeatherScene, scheme: &PulsingScheme, gates: usize, wavelength_m: f64) -> Result<IQBlock> {
    match scheme.kind {
        SchemeKind::AlternatingPol => simulate_alternating_pol(scene, scheme, gates, wavelength_m),
        SchemeKind::QuadrantMimo => simulate_quadrant_mimo(scene, scheme, gates, wavelength_m),
    }
}

/// Analytic normalized autocorrelation of a Gaussian spectrum at lag `tau`.
pub fn gaussian_autocorrelation(velocity_ms: f64, width_ms: f64, tau_s: f64, wavelength_m: f64) -> Complex64 {
    let mag = (-8.0 * PI * PI * width_ms * width_ms * tau_s * tau_s / (wavelength_m * wavelength_m)).exp();
    Complex64::from_polar(mag, 4.0 * PI * velocity_ms * tau_s / wavelength_m)
}
