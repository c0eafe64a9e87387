//! CSV and JSON writers for every result type, plus IQ import.
//!
//! Floats are written with Rust's shortest round-trip formatting so that a
//! written file reads back bit-exactly.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::beampattern::BeamPattern;
use crate::echo::{IQBlock, PulseSource};
use crate::experiments::{ReconstructionResult, VarianceRow};
use crate::geometry::{ArrayLayout, VirtualArray};
use crate::moments::MomentSet;
use crate::{Error, Result};

fn f(x: f64) -> String {
    x.to_string()
}

/// Physical elements, then (optionally) virtual positions with role `virtual`.
pub fn write_geometry_csv<W: Write>(w: W, layout: &ArrayLayout, va: Option<&VirtualArray>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x_m", "y_m", "quadrant", "role"])?;
    for e in layout.elements() {
        wr.write_record([f(e.position.x), f(e.position.y), e.quadrant.number().to_string(), e.role.to_string()])?;
    }
    if let Some(va) = va {
        for v in &va.elements {
            wr.write_record([f(v.position.x), f(v.position.y), (v.tx + 1).to_string(), "virtual".to_string()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_pattern_csv<W: Write>(w: W, p: &BeamPattern) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["angle_deg", "gain_db"])?;
    for (a, g) in p.angles_deg.iter().zip(p.gain_db()) {
        wr.write_record([f(*a), f(g)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Several patterns sharing one angle grid, one column per label.
pub fn write_patterns_csv<W: Write>(w: W, patterns: &[(&str, &BeamPattern)]) -> Result<()> {
    let first = patterns
        .first()
        .ok_or_else(|| Error::Format("no patterns to write".into()))?
        .1;
    if patterns.iter().any(|(_, p)| p.angles_deg != first.angles_deg) {
        return Err(Error::Format("patterns use different angle grids".into()));
    }
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["angle_deg".to_string()];
    header.extend(patterns.iter().map(|(l, _)| format!("{l}_gain_db")));
    wr.write_record(&header)?;
    let dbs: Vec<Vec<f64>> = patterns.iter().map(|(_, p)| p.gain_db()).collect();
    for (i, a) in first.angles_deg.iter().enumerate() {
        let mut row = vec![f(*a)];
        row.extend(dbs.iter().map(|d| f(d[i])));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_iq_csv<W: Write>(w: W, block: &IQBlock) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["pulse_index", "gate_index", "re", "im", "label"])?;
    for p in 0..block.n_pulses() {
        let label = block.labels[p].source.to_string();
        for g in 0..block.n_gates() {
            let z = block.samples[[p, g]];
            wr.write_record([p.to_string(), g.to_string(), f(z.re), f(z.im), label.clone()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// IQ samples and per-pulse labels read back from [`write_iq_csv`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct IqRecords {
    pub samples: Array2<Complex64>,
    pub labels: Vec<PulseSource>,
}

pub fn read_iq_csv<R: Read>(r: R) -> Result<IqRecords> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let (p, g, re, im, label): (usize, usize, f64, f64, String) = rec?;
        rows.push((p, g, Complex64::new(re, im), label.parse::<PulseSource>()?));
    }
    if rows.is_empty() {
        return Err(Error::Format("IQ file has no samples".into()));
    }
    let np = rows.iter().map(|r| r.0).max().unwrap() + 1;
    let ng = rows.iter().map(|r| r.1).max().unwrap() + 1;
    if rows.len() != np * ng {
        return Err(Error::Format(format!(
            "expected {} samples for {np} pulses x {ng} gates, found {}",
            np * ng,
            rows.len()
        )));
    }
    let mut samples = Array2::from_elem((np, ng), Complex64::new(f64::NAN, f64::NAN));
    let mut labels: Vec<Option<PulseSource>> = vec![None; np];
    for (p, g, z, l) in rows {
        if !samples[[p, g]].re.is_nan() {
            return Err(Error::Format(format!("duplicate sample at pulse {p} gate {g}")));
        }
        samples[[p, g]] = z;
        match labels[p] {
            Some(prev) if prev != l => {
                return Err(Error::Format(format!("pulse {p} has inconsistent labels")));
            }
            _ => labels[p] = Some(l),
        }
    }
    Ok(IqRecords {
        samples,
        labels: labels.into_iter().map(|l| l.expect("every pulse seen")).collect(),
    })
}

pub fn write_moments_csv<W: Write>(w: W, rows: &[MomentSet]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["gate"];
    header.extend(MomentSet::COLUMNS);
    wr.write_record(&header)?;
    for (g, m) in rows.iter().enumerate() {
        let mut rec = vec![g.to_string()];
        rec.extend(m.values().iter().map(|v| f(*v)));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reconstructions side by side on the scan azimuths every beam covers.
/// Columns are `recon_<label>_dbz` then `err_<label>_db` per beam.
pub fn write_reconstruction_csv<W: Write>(w: W, results: &[ReconstructionResult]) -> Result<()> {
    let first = results
        .first()
        .ok_or_else(|| Error::Format("no reconstructions to write".into()))?;
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["azimuth_deg".to_string(), "true_dbz".to_string()];
    header.extend(results.iter().map(|r| format!("recon_{}_dbz", r.beam_label)));
    header.extend(results.iter().map(|r| format!("err_{}_db", r.beam_label)));
    wr.write_record(&header)?;
    'scan: for (i, az) in first.scan_azimuths_deg.iter().enumerate() {
        let mut idx = Vec::with_capacity(results.len());
        for r in results {
            match r.scan_azimuths_deg.iter().position(|a| (a - az).abs() < 1e-9) {
                Some(j) => idx.push(j),
                None => continue 'scan,
            }
        }
        let mut row = vec![f(*az), f(first.true_dbz[i])];
        row.extend(results.iter().zip(&idx).map(|(r, &j)| f(r.reconstructed_dbz[j])));
        row.extend(results.iter().zip(&idx).map(|(r, &j)| f(r.error_db[j])));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_variance_csv<W: Write>(w: W, rows: &[VarianceRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "n_samples",
        "mc_sd_db",
        "model_sd_db",
        "mc_sd_linear",
        "model_sd_linear",
        "mc_var",
        "model_var",
    ])?;
    for r in rows {
        wr.write_record([
            r.n.to_string(),
            f(r.mc_sd_db),
            f(r.model_sd_db),
            f(r.mc_sd_linear),
            f(r.model_sd_linear),
            f(r.mc_var),
            f(r.model_var),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::echo::{simulate_quadrant_mimo, PulsingScheme, WeatherScene};
    use crate::geometry::{build_planar_array, quadrant_phase_centers, virtual_array};

    #[test]
    fn iq_round_trip_is_exact() {
        let scheme = PulsingScheme {
            n_pulses: 32,
            ..PulsingScheme::default()
        };
        let b = simulate_quadrant_mimo(&WeatherScene::default(), &scheme, 3, 0.0319).unwrap();
        let mut buf = Vec::new();
        write_iq_csv(&mut buf, &b).unwrap();
        let r = read_iq_csv(buf.as_slice()).unwrap();
        assert_eq!(r.samples, b.samples);
        let labels: Vec<PulseSource> = b.labels.iter().map(|l| l.source).collect();
        assert_eq!(r.labels, labels);
    }

    #[test]
    fn iq_reader_rejects_gaps_and_bad_labels() {
        let gap = "pulse_index,gate_index,re,im,label\n0,0,1,0,Q1\n1,1,1,0,Q2\n";
        assert!(read_iq_csv(gap.as_bytes()).is_err());
        let bad = "pulse_index,gate_index,re,im,label\n0,0,1,0,X\n";
        assert!(read_iq_csv(bad.as_bytes()).is_err());
        assert!(read_iq_csv("pulse_index,gate_index,re,im,label\n".as_bytes()).is_err());
    }

    #[test]
    fn geometry_csv_lists_physical_then_virtual() {
        let a = build_planar_array(2, 2, 0.016).unwrap();
        let va = virtual_array(&quadrant_phase_centers(&a), &a).unwrap();
        let mut buf = Vec::new();
        write_geometry_csv(&mut buf, &a, Some(&va)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x_m,y_m,quadrant,role");
        assert_eq!(lines.len(), 1 + 4 + 16);
        assert!(lines[1].ends_with("tx+rx"));
        assert!(lines[20].ends_with("virtual"));
    }

    #[test]
    fn reconstruction_csv_uses_common_azimuths() {
        let mk = |label: &str, az: Vec<f64>| ReconstructionResult {
            beam_label: label.into(),
            hpbw_deg: 1.0,
            true_dbz: vec![20.0; az.len()],
            reconstructed_dbz: vec![21.0; az.len()],
            error_db: vec![1.0; az.len()],
            scan_azimuths_deg: az,
            rmse_db: 1.0,
        };
        let wide = mk("2deg", vec![-1.0, 0.0, 1.0]);
        let narrow = mk("1p5deg", vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let mut buf = Vec::new();
        write_reconstruction_csv(&mut buf, &[wide, narrow]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "azimuth_deg,true_dbz,recon_2deg_dbz,recon_1p5deg_dbz,err_2deg_db,err_1p5deg_db"
        );
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn moments_csv_header_and_nan() {
        let mut buf = Vec::new();
        write_moments_csv(&mut buf, &[MomentSet::empty()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("gate,z_dbz,v_ms,w_ms,phidp_rad,zdr_db,rhohv,snr_db,ncp\n"));
        assert!(text.contains("0,NaN,NaN"));
    }
}
