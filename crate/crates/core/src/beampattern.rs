//! Array factors, Taylor tapers and pattern metrics.
//!
//! Elements are isotropic; a pattern is the coherent sum
//! `sum_k w_k exp(j 2 pi / lambda * p_k . (u - u0))` over the aperture, where
//! `u` holds the in-plane direction cosines `(cos el sin az, sin el)` and `u0`
//! is the steering direction. Patterns are stored as linear power normalized
//! to a unit peak.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{lattice_coords, ArrayLayout, Point2, Quadrant, VirtualArray};
use crate::{linear_to_db, wavelength, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaperKind {
    Uniform,
    Taylor { sll_db: f64, nbar: usize },
}

/// Per-element amplitude weights, normalized to a unit average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taper {
    pub weights: Vec<f64>,
    pub kind: TaperKind,
}

impl Taper {
    pub fn uniform(n: usize) -> Taper {
        Taper {
            weights: vec![1.0; n],
            kind: TaperKind::Uniform,
        }
    }

    /// Builds the taper described by `kind` for `n` elements.
    pub fn from_kind(kind: TaperKind, n: usize) -> Result<Taper> {
        match kind {
            TaperKind::Uniform => Ok(Taper::uniform(n)),
            TaperKind::Taylor { sll_db, nbar } => taylor_taper(n, sll_db, nbar),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Classical Taylor line-source distribution sampled at `n` element centers.
///
/// `sll_db` is the design sidelobe level (negative dB), `nbar` the number of
/// nearly equal sidelobes next to the main lobe.
pub fn taylor_taper(n: usize, sll_db: f64, nbar: usize) -> Result<Taper> {
    if n < 2 {
        return Err(Error::Pattern(format!("taper needs at least 2 elements, got {n}")));
    }
    if !(-70.0..=-13.0).contains(&sll_db) {
        return Err(Error::Pattern(format!(
            "Taylor sidelobe level {sll_db} dB outside [-70, -13]"
        )));
    }
    if nbar < 2 {
        return Err(Error::Pattern(format!("Taylor nbar must be >= 2, got {nbar}")));
    }

    let r = 10f64.powf(-sll_db / 20.0);
    let a = r.acosh() / PI;
    let a2 = a * a;
    let nb = nbar as f64;
    let sigma2 = nb * nb / (a2 + (nb - 0.5).powi(2));

    let coeffs: Vec<f64> = (1..nbar)
        .map(|m| {
            let mf = m as f64;
            let num: f64 = (1..nbar)
                .map(|i| 1.0 - mf * mf / sigma2 / (a2 + (i as f64 - 0.5).powi(2)))
                .product();
            let den: f64 = (1..nbar)
                .filter(|&i| i != m)
                .map(|i| 1.0 - mf * mf / (i as f64).powi(2))
                .product();
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            sign * num / (2.0 * den)
        })
        .collect();

    let mut weights: Vec<f64> = (0..n)
        .map(|k| {
            let x = (k as f64 - (n as f64 - 1.0) / 2.0) / n as f64;
            1.0 + 2.0
                * coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, f)| f * (2.0 * PI * (i + 1) as f64 * x).cos())
                    .sum::<f64>()
        })
        .collect();

    // Past a certain nbar the distribution stops decaying toward the edges.
    let half = n / 2;
    let rising = (0..half.saturating_sub(1)).any(|i| weights[i] > weights[i + 1] * (1.0 + 1e-12));
    if rising || weights.iter().any(|&w| w <= 0.0) {
        return Err(Error::Pattern(format!(
            "nbar = {nbar} too large for {sll_db} dB sidelobes: weights are not monotone toward the aperture edge"
        )));
    }

    let mean = weights.iter().sum::<f64>() / n as f64;
    weights.iter_mut().for_each(|w| *w /= mean);
    Ok(Taper {
        weights,
        kind: TaperKind::Taylor { sll_db, nbar },
    })
}

/// Weighted radiating positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aperture {
    pub positions: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl Aperture {
    pub fn new(positions: Vec<Point2>, weights: Vec<f64>) -> Result<Aperture> {
        if positions.is_empty() {
            return Err(Error::Pattern("aperture has no elements".into()));
        }
        if positions.len() != weights.len() {
            return Err(Error::Pattern(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        Ok(Aperture { positions, weights })
    }

    /// Uniform linear array along x, centered at the origin.
    pub fn line(n: usize, spacing: f64, taper: &Taper) -> Result<Aperture> {
        if taper.len() != n {
            return Err(Error::Pattern(format!(
                "taper has {} weights for {n} elements",
                taper.len()
            )));
        }
        let positions = (0..n)
            .map(|k| Point2::new((k as f64 - (n as f64 - 1.0) / 2.0) * spacing, 0.0))
            .collect();
        Aperture::new(positions, taper.weights.clone())
    }

    /// Full planar layout with a separable taper `wx[ix] * wy[iy]`.
    pub fn from_layout(layout: &ArrayLayout, taper_x: &Taper, taper_y: &Taper) -> Result<Aperture> {
        if taper_x.len() != layout.nx() || taper_y.len() != layout.ny() {
            return Err(Error::Pattern("taper length does not match layout".into()));
        }
        let weights = layout
            .elements()
            .iter()
            .map(|e| taper_x.weights[e.ix] * taper_y.weights[e.iy])
            .collect();
        Aperture::new(layout.positions(), weights)
    }

    /// One quadrant sub-aperture, uniformly weighted.
    pub fn quadrant(layout: &ArrayLayout, q: Quadrant) -> Result<Aperture> {
        let positions: Vec<Point2> = layout.quadrant_elements(q).map(|e| e.position).collect();
        let n = positions.len();
        Aperture::new(positions, vec![1.0; n])
    }

    /// Every virtual channel with unit weight (coincident channels add).
    pub fn from_virtual(va: &VirtualArray) -> Result<Aperture> {
        Aperture::new(va.positions(), vec![1.0; va.len()])
    }

    /// Distinct virtual positions weighted by a separable taper across the
    /// virtual aperture. Requires the virtual positions to fill a full grid.
    pub fn virtual_grid(va: &VirtualArray, kind: TaperKind) -> Result<Aperture> {
        let unit = va.pitch / 2.0;
        let mut cells: BTreeMap<(i64, i64), Point2> = BTreeMap::new();
        for p in va.positions() {
            let q = lattice_coords(p, unit)
                .ok_or_else(|| Error::Pattern("virtual position off the element lattice".into()))?;
            cells.entry(q).or_insert(p);
        }
        let xs: Vec<i64> = {
            let mut v: Vec<i64> = cells.keys().map(|k| k.0).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let ys: Vec<i64> = {
            let mut v: Vec<i64> = cells.keys().map(|k| k.1).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        if xs.len() * ys.len() != cells.len() {
            return Err(Error::Pattern(
                "virtual positions do not form a full rectangular grid".into(),
            ));
        }
        let tx = Taper::from_kind(kind, xs.len())?;
        let ty = Taper::from_kind(kind, ys.len())?;
        let mut positions = Vec::with_capacity(cells.len());
        let mut weights = Vec::with_capacity(cells.len());
        for ((qx, qy), p) in cells {
            let ix = xs.binary_search(&qx).expect("x present");
            let iy = ys.binary_search(&qy).expect("y present");
            positions.push(p);
            weights.push(tx.weights[ix] * ty.weights[iy]);
        }
        Aperture::new(positions, weights)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Pointing direction, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Direction {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl Direction {
    pub const BORESIGHT: Direction = Direction {
        az_deg: 0.0,
        el_deg: 0.0,
    };

    pub fn new(az_deg: f64, el_deg: f64) -> Direction {
        Direction { az_deg, el_deg }
    }

    /// In-plane direction cosines `(cos el sin az, sin el)`.
    pub fn cosines(&self) -> (f64, f64) {
        let (az, el) = (self.az_deg.to_radians(), self.el_deg.to_radians());
        (el.cos() * az.sin(), el.sin())
    }

    /// Unit vector with boresight along +z.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (az, el) = (self.az_deg.to_radians(), self.el_deg.to_radians());
        [el.cos() * az.sin(), el.sin(), el.cos() * az.cos()]
    }
}

/// A 1-D principal-plane cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "plane", rename_all = "snake_case")]
pub enum Cut {
    /// Azimuth sweep at a fixed elevation.
    Azimuth { elevation_deg: f64 },
    /// Elevation sweep at a fixed azimuth.
    Elevation { azimuth_deg: f64 },
}

impl Cut {
    pub fn direction(&self, angle_deg: f64) -> Direction {
        match *self {
            Cut::Azimuth { elevation_deg } => Direction::new(angle_deg, elevation_deg),
            Cut::Elevation { azimuth_deg } => Direction::new(azimuth_deg, angle_deg),
        }
    }
}

/// Uniformly spaced angles `start, start + step, ..., stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleGrid {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        AngleGrid {
            start_deg: -90.0,
            stop_deg: 90.0,
            step_deg: 0.01,
        }
    }
}

impl AngleGrid {
    pub fn symmetric(half_span_deg: f64, step_deg: f64) -> AngleGrid {
        AngleGrid {
            start_deg: -half_span_deg,
            stop_deg: half_span_deg,
            step_deg,
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        if !(self.step_deg > 0.0) || self.stop_deg < self.start_deg {
            return Vec::new();
        }
        let n = ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| self.start_deg + i as f64 * self.step_deg)
            .collect()
    }
}

/// Normalized power pattern along a 1-D cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamPattern {
    pub angles_deg: Vec<f64>,
    pub gain: Vec<f64>,
    pub frequency_hz: f64,
}

impl BeamPattern {
    /// Normalizes `power` to a unit peak.
    pub fn from_power(angles_deg: Vec<f64>, power: Vec<f64>, frequency_hz: f64) -> Result<BeamPattern> {
        if angles_deg.is_empty() {
            return Err(Error::Pattern("empty angle grid".into()));
        }
        if angles_deg.len() != power.len() {
            return Err(Error::Pattern("angle and gain lengths differ".into()));
        }
        if angles_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Pattern("angles must be strictly increasing".into()));
        }
        let peak = power.iter().cloned().fold(f64::MIN, f64::max);
        if !(peak > 0.0 && peak.is_finite()) {
            return Err(Error::Pattern("pattern has no positive finite peak".into()));
        }
        let gain = power.into_iter().map(|p| p / peak).collect();
        Ok(BeamPattern {
            angles_deg,
            gain,
            frequency_hz,
        })
    }

    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, &g) in self.gain.iter().enumerate() {
            if g > self.gain[best] {
                best = i;
            }
        }
        best
    }

    pub fn peak_angle(&self) -> f64 {
        self.angles_deg[self.peak_index()]
    }

    pub fn gain_db(&self) -> Vec<f64> {
        self.gain.iter().map(|&g| linear_to_db(g)).collect()
    }

    /// Linear interpolation of the gain at `angle_deg`; zero outside the grid.
    pub fn gain_at(&self, angle_deg: f64) -> f64 {
        let a = &self.angles_deg;
        if angle_deg < a[0] || angle_deg > a[a.len() - 1] {
            return 0.0;
        }
        let i = a.partition_point(|&x| x <= angle_deg);
        if i == 0 {
            return self.gain[0];
        }
        if i >= a.len() {
            return self.gain[a.len() - 1];
        }
        let t = (angle_deg - a[i - 1]) / (a[i] - a[i - 1]);
        self.gain[i - 1] + t * (self.gain[i] - self.gain[i - 1])
    }
}

/// Complex array factor at one direction, by direct summation.
pub fn array_factor_at(ap: &Aperture, frequency_hz: f64, steer: Direction, dir: Direction) -> Complex64 {
    let k = 2.0 * PI / wavelength(frequency_hz);
    let (u0, v0) = steer.cosines();
    let (u, v) = dir.cosines();
    let (du, dv) = (u - u0, v - v0);
    ap.positions
        .iter()
        .zip(&ap.weights)
        .map(|(p, &w)| Complex64::from_polar(w, k * (p.x * du + p.y * dv)))
        .sum()
}

/// Collapses the aperture onto one axis when the other direction-cosine
/// offset is the same at every angle of the cut: elements sharing an x
/// (or y) coordinate merge into one complex coefficient.
fn collapse(ap: &Aperture, k: f64, fixed: f64, along_x: bool) -> Vec<(f64, Complex64)> {
    let mut groups: BTreeMap<u64, (f64, Complex64)> = BTreeMap::new();
    for (p, &w) in ap.positions.iter().zip(&ap.weights) {
        let (key, other) = if along_x { (p.x, p.y) } else { (p.y, p.x) };
        let c = Complex64::from_polar(w, k * other * fixed);
        groups
            .entry(key.to_bits())
            .and_modify(|e| e.1 += c)
            .or_insert((key, c));
    }
    groups.into_values().collect()
}

/// Complex array factor over a 1-D cut.
pub fn array_factor_complex(
    ap: &Aperture,
    frequency_hz: f64,
    steer: Direction,
    angles_deg: &[f64],
    cut: Cut,
) -> Result<Vec<Complex64>> {
    if angles_deg.is_empty() {
        return Err(Error::Pattern("empty angle grid".into()));
    }
    if ap.is_empty() {
        return Err(Error::Pattern("aperture has no elements".into()));
    }
    if steer.az_deg.abs() > 90.0 || steer.el_deg.abs() > 90.0 {
        return Err(Error::Pattern(format!(
            "steering ({}, {}) deg outside +-90",
            steer.az_deg, steer.el_deg
        )));
    }
    let k = 2.0 * PI / wavelength(frequency_hz);
    let (u0, v0) = steer.cosines();
    let offsets: Vec<(f64, f64)> = angles_deg
        .iter()
        .map(|&a| {
            let (u, v) = cut.direction(a).cosines();
            (u - u0, v - v0)
        })
        .collect();

    let same = |f: fn(&(f64, f64)) -> f64| offsets.iter().all(|o| f(o) == f(&offsets[0]));
    let collapsed = if same(|o| o.1) {
        Some((collapse(ap, k, offsets[0].1, true), true))
    } else if same(|o| o.0) {
        Some((collapse(ap, k, offsets[0].0, false), false))
    } else {
        None
    };

    let af = match collapsed {
        Some((terms, along_x)) => offsets
            .par_iter()
            .map(|&(du, dv)| {
                let d = if along_x { du } else { dv };
                terms
                    .iter()
                    .map(|&(pos, c)| c * Complex64::from_polar(1.0, k * pos * d))
                    .sum()
            })
            .collect(),
        None => offsets
            .par_iter()
            .map(|&(du, dv)| {
                ap.positions
                    .iter()
                    .zip(&ap.weights)
                    .map(|(p, &w)| Complex64::from_polar(w, k * (p.x * du + p.y * dv)))
                    .sum()
            })
            .collect(),
    };
    Ok(af)
}

/// Power pattern of `ap` along `cut`, normalized to peak 1.
pub fn array_factor(
    ap: &Aperture,
    frequency_hz: f64,
    steer: Direction,
    grid: &AngleGrid,
    cut: Cut,
) -> Result<BeamPattern> {
    let angles = grid.angles();
    let af = array_factor_complex(ap, frequency_hz, steer, &angles, cut)?;
    BeamPattern::from_power(angles, af.iter().map(|c| c.norm_sqr()).collect(), frequency_hz)
}

/// Normalized power over a full azimuth x elevation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternGrid {
    pub az_deg: Vec<f64>,
    pub el_deg: Vec<f64>,
    /// Row-major, one row per elevation.
    pub gain: Vec<f64>,
}

pub fn array_factor_2d(
    ap: &Aperture,
    frequency_hz: f64,
    steer: Direction,
    az: &AngleGrid,
    el: &AngleGrid,
) -> Result<PatternGrid> {
    let az_deg = az.angles();
    let el_deg = el.angles();
    if az_deg.is_empty() || el_deg.is_empty() {
        return Err(Error::Pattern("empty angle grid".into()));
    }
    let mut power = Vec::with_capacity(az_deg.len() * el_deg.len());
    for &e in &el_deg {
        let row = array_factor_complex(ap, frequency_hz, steer, &az_deg, Cut::Azimuth { elevation_deg: e })?;
        power.extend(row.iter().map(|c| c.norm_sqr()));
    }
    let peak = power.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::Pattern("pattern has no positive peak".into()));
    }
    Ok(PatternGrid {
        az_deg,
        el_deg,
        gain: power.into_iter().map(|p| p / peak).collect(),
    })
}

/// Pointwise product of two patterns on the same grid, renormalized.
pub fn two_way_pattern(tx: &BeamPattern, rx: &BeamPattern) -> Result<BeamPattern> {
    if tx.angles_deg.len() != rx.angles_deg.len()
        || tx
            .angles_deg
            .iter()
            .zip(&rx.angles_deg)
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::Pattern("transmit and receive angle grids differ".into()));
    }
    let power = tx.gain.iter().zip(&rx.gain).map(|(a, b)| a * b).collect();
    BeamPattern::from_power(tx.angles_deg.clone(), power, rx.frequency_hz)
}

/// -3 dB width around the peak, linearly interpolated between samples.
pub fn half_power_beamwidth(p: &BeamPattern) -> Result<f64> {
    let g = &p.gain;
    let a = &p.angles_deg;
    let peak = p.peak_index();
    let level = 0.5 * g[peak];

    let mut l = peak;
    while l > 0 && g[l] >= level {
        l -= 1;
    }
    let mut r = peak;
    while r + 1 < g.len() && g[r] >= level {
        r += 1;
    }
    if g[l] >= level || g[r] >= level {
        return Err(Error::Pattern("no -3 dB crossing inside the angle grid".into()));
    }
    let left = a[l] + (level - g[l]) / (g[l + 1] - g[l]) * (a[l + 1] - a[l]);
    let right = a[r - 1] + (g[r - 1] - level) / (g[r - 1] - g[r]) * (a[r] - a[r - 1]);
    Ok(right - left)
}

/// Indices of the first local minima on either side of the peak.
pub fn first_nulls(p: &BeamPattern) -> Result<(usize, usize)> {
    let g = &p.gain;
    let peak = p.peak_index();
    let mut r = peak;
    while r + 1 < g.len() && g[r + 1] < g[r] {
        r += 1;
    }
    let mut l = peak;
    while l > 0 && g[l - 1] < g[l] {
        l -= 1;
    }
    if r + 1 >= g.len() || l == 0 {
        return Err(Error::Pattern("main lobe nulls not found inside the angle grid".into()));
    }
    Ok((l, r))
}

/// Highest gain outside the first nulls, dB relative to the peak.
pub fn peak_sidelobe(p: &BeamPattern) -> Result<f64> {
    let (l, r) = first_nulls(p)?;
    let peak = p.gain[p.peak_index()];
    let side = p.gain[..l]
        .iter()
        .chain(&p.gain[r + 1..])
        .cloned()
        .fold(0.0, f64::max);
    Ok(linear_to_db(side / peak))
}

/// Summary metrics written by the pattern report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternMetrics {
    pub hpbw_deg: f64,
    pub psl_dbc: f64,
}

pub fn metrics(p: &BeamPattern) -> Result<PatternMetrics> {
    Ok(PatternMetrics {
        hpbw_deg: half_power_beamwidth(p)?,
        psl_dbc: peak_sidelobe(p)?,
    })
}
