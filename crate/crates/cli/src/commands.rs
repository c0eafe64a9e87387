//! Subcommand bodies.

use std::fs::File;

use quadmimo::beampattern::{
    array_factor, metrics, two_way_pattern, Aperture, AngleGrid, BeamPattern, PatternMetrics, Taper, TaperKind,
};
use quadmimo::echo::{simulate, IQBlock, PulseLabel, PulseSource, SchemeKind};
use quadmimo::experiments::{design_beam, reconstruct_profile, scan_time, variance_vs_samples, TimeseriesSettings};
use quadmimo::geometry::{build_planar_array, overlap_factor, quadrant_phase_centers, virtual_array, ArrayLayout, Quadrant};
use quadmimo::io;
use quadmimo::moments::{alt_pol_moments, mimo_moments, MomentSet};
use quadmimo::profile::{ReflectivityProfile, PROFILE_STEP_DEG};
use quadmimo::wavelength;
use serde::Serialize;

use crate::config::{defaulted_fields, missing_files, violations, LoadedConfig, ScenarioConfig};
use crate::output::RunOutput;
use crate::{CliError, Command};

/// Half-span of the angle grid on which reconstruction beams are designed.
const DESIGN_HALF_SPAN_DEG: f64 = 15.0;

/// Runs one subcommand; returns the process exit code.
pub fn run(cmd: Command, loaded: &LoadedConfig) -> Result<u8, CliError> {
    let cfg = &loaded.config;
    if cmd == Command::Validate {
        return Ok(validate(loaded));
    }
    let problems = missing_files(cfg);
    if !problems.is_empty() {
        return Err(CliError::Config(problems.join("; ")));
    }
    match cmd {
        Command::Geometry => geometry(cfg),
        Command::Pattern => pattern(cfg),
        Command::Simulate => simulate_cmd(cfg),
        Command::Moments => moments(cfg),
        Command::Reconstruct => reconstruct(cfg),
        Command::Variance => variance(cfg),
        Command::Scantime => scantime(cfg),
        Command::Validate => unreachable!("handled above"),
    }?;
    Ok(0)
}

fn validate(loaded: &LoadedConfig) -> u8 {
    let effective = serde_json::to_value(&loaded.config).expect("config serializes");
    let problems = violations(&loaded.config);
    let defaulted = defaulted_fields(&loaded.user, &effective);
    println!("violations: {}", problems.len());
    for p in &problems {
        println!("  - {p}");
    }
    println!("defaulted fields: {}", defaulted.len());
    for d in &defaulted {
        let v = d
            .split('.')
            .try_fold(&effective, |v, k| v.get(k))
            .map(|v| v.to_string())
            .unwrap_or_default();
        println!("  {d} = {v}");
    }
    if problems.is_empty() {
        0
    } else {
        1
    }
}

fn layout(cfg: &ScenarioConfig) -> Result<ArrayLayout, CliError> {
    Ok(build_planar_array(cfg.array.nx, cfg.array.ny, cfg.array.spacing_m)?)
}

#[derive(Serialize)]
struct GeometryReport {
    physical_elements: usize,
    virtual_elements: usize,
    distinct_virtual_positions: usize,
    physical_extent_m: (f64, f64),
    physical_aperture_m: (f64, f64),
    virtual_extent_m: (f64, f64),
    virtual_aperture_m: (f64, f64),
    overlap_factor_x: f64,
    overlap_factor_y: f64,
}

fn geometry(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let a = layout(cfg)?;
    let va = virtual_array(&quadrant_phase_centers(&a), &a)?;
    let of = overlap_factor(&va, &a)?;
    let report = GeometryReport {
        physical_elements: a.len(),
        virtual_elements: va.len(),
        distinct_virtual_positions: va.len() - va.coincidence_count,
        physical_extent_m: a.extent(),
        physical_aperture_m: a.aperture(),
        virtual_extent_m: va.extent,
        virtual_aperture_m: va.aperture,
        overlap_factor_x: of.x(),
        overlap_factor_y: of.y(),
    };
    let mut out = RunOutput::new(cfg, "geometry")?;
    out.write("csv", |w| io::write_geometry_csv(w, &a, Some(&va)))?;
    out.write("json", |w| io::write_json(w, &report))?;
    let summary = format!(
        "physical_aperture_m={:.4}x{:.4} virtual_aperture_m={:.4}x{:.4} overlap_factor={}",
        report.physical_aperture_m.0,
        report.physical_aperture_m.1,
        report.virtual_aperture_m.0,
        report.virtual_aperture_m.1,
        of.value()
    );
    out.finish(cfg, &summary)
}

#[derive(Serialize)]
struct PatternEntry {
    label: &'static str,
    #[serde(flatten)]
    metrics: PatternMetrics,
}

fn pattern(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let a = layout(cfg)?;
    let pcs = quadrant_phase_centers(&a);
    let va = virtual_array(&pcs, &a)?;
    let pc = &cfg.pattern;
    let f = cfg.frequency_hz;
    let one_way = |ap: &Aperture| array_factor(ap, f, pc.steer, &pc.grid, pc.cut);

    let tx = Taper::from_kind(cfg.taper, a.nx())?;
    let ty = Taper::from_kind(cfg.taper, a.ny())?;
    let physical = one_way(&Aperture::from_layout(&a, &tx, &ty)?)?;
    let quadrant_tx = one_way(&Aperture::quadrant(&a, Quadrant::Q1)?)?;
    let full_rx = one_way(&Aperture::from_layout(&a, &Taper::uniform(a.nx()), &Taper::uniform(a.ny()))?)?;
    let mimo = two_way_pattern(&quadrant_tx, &full_rx)?;
    let v_uniform = one_way(&Aperture::virtual_grid(&va, TaperKind::Uniform)?)?;
    let v_uniform_2 = two_way_pattern(&v_uniform, &v_uniform)?;
    let v_taper = one_way(&Aperture::virtual_grid(&va, cfg.taper)?)?;
    let v_taper_2 = two_way_pattern(&v_taper, &v_taper)?;

    let patterns: [(&'static str, &BeamPattern); 6] = [
        ("physical", &physical),
        ("mimo_two_way", &mimo),
        ("virtual_uniform", &v_uniform),
        ("virtual_uniform_two_way", &v_uniform_2),
        ("virtual_tapered", &v_taper),
        ("virtual_tapered_two_way", &v_taper_2),
    ];
    let entries = patterns
        .iter()
        .map(|(label, p)| Ok(PatternEntry { label, metrics: metrics(p)? }))
        .collect::<Result<Vec<_>, quadmimo::Error>>()?;

    let mut out = RunOutput::new(cfg, "pattern")?;
    out.write("csv", |w| io::write_patterns_csv(w, &patterns))?;
    out.write("json", |w| io::write_json(w, &entries))?;
    let summary = format!(
        "hpbw_deg={:.4} (virtual uniform two-way) psl_dbc={:.2} (virtual tapered one-way) psl_two_way_dbc={:.2}",
        entries[3].metrics.hpbw_deg, entries[4].metrics.psl_dbc, entries[5].metrics.psl_dbc
    );
    out.finish(cfg, &summary)
}

fn simulated_block(cfg: &ScenarioConfig) -> Result<IQBlock, CliError> {
    let scheme = cfg.scheme.to_scheme(cfg.seed);
    Ok(simulate(&cfg.scene, &scheme, cfg.scheme.gates, wavelength(cfg.frequency_hz))?)
}

#[derive(Serialize)]
struct BlockReport {
    kind: SchemeKind,
    pulses: usize,
    gates: usize,
    pri_s: f64,
    wavelength_m: f64,
    v_nyq_base_ms: f64,
    noise_power: Option<f64>,
    mean_power: f64,
    truncation_warning: bool,
}

fn block_report(b: &IQBlock) -> BlockReport {
    let mean_power = b.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / b.samples.len() as f64;
    BlockReport {
        kind: b.kind,
        pulses: b.n_pulses(),
        gates: b.n_gates(),
        pri_s: b.pri_s,
        wavelength_m: b.wavelength_m,
        v_nyq_base_ms: b.v_nyq_base,
        noise_power: b.noise_power,
        mean_power,
        truncation_warning: b.truncation_warning,
    }
}

fn simulate_cmd(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let block = simulated_block(cfg)?;
    let report = block_report(&block);
    let mut out = RunOutput::new(cfg, "simulate")?;
    out.write("csv", |w| io::write_iq_csv(w, &block))?;
    out.write("json", |w| io::write_json(w, &report))?;
    let mut summary = format!(
        "{:?} pulses={} gates={} mean_power={:.6} v_nyq_base_ms={:.4}",
        report.kind, report.pulses, report.gates, report.mean_power, report.v_nyq_base_ms
    );
    if report.truncation_warning {
        summary.push_str(" warning=spectrum_truncated");
    }
    out.finish(cfg, &summary)
}

/// Rebuilds a block from an imported IQ file using the configured timing.
fn imported_block(cfg: &ScenarioConfig, path: &std::path::Path) -> Result<IQBlock, CliError> {
    let rec = io::read_iq_csv(File::open(path).map_err(quadmimo::Error::from)?)?;
    let kind = match rec.labels.first() {
        Some(PulseSource::H | PulseSource::V) => SchemeKind::AlternatingPol,
        _ => SchemeKind::QuadrantMimo,
    };
    let consistent = rec.labels.iter().all(|l| match kind {
        SchemeKind::AlternatingPol => matches!(l, PulseSource::H | PulseSource::V),
        SchemeKind::QuadrantMimo => matches!(l, PulseSource::Quadrant(_)),
    });
    if !consistent {
        return Err(quadmimo::Error::Format(format!("{}: mixes polarization and quadrant labels", path.display())).into());
    }
    let pri = cfg.scheme.pri_s;
    let dt = match kind {
        SchemeKind::AlternatingPol => pri,
        SchemeKind::QuadrantMimo => pri / 4.0,
    };
    let lambda = wavelength(cfg.frequency_hz);
    Ok(IQBlock {
        labels: rec
            .labels
            .iter()
            .enumerate()
            .map(|(p, &source)| PulseLabel {
                source,
                time_s: p as f64 * dt,
            })
            .collect(),
        samples: rec.samples,
        kind,
        pri_s: pri,
        wavelength_m: lambda,
        v_nyq_base: lambda / (4.0 * pri),
        noise_power: None,
        truncation_warning: false,
    })
}

fn moments(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let block = match &cfg.moments.input {
        Some(p) => imported_block(cfg, p)?,
        None => simulated_block(cfg)?,
    };
    let rows: Vec<MomentSet> = match block.kind {
        SchemeKind::AlternatingPol => alt_pol_moments(&block, block.v_nyq_base, cfg.radar_constant)?,
        SchemeKind::QuadrantMimo => mimo_moments(&block, cfg.radar_constant)?,
    };
    let mut out = RunOutput::new(cfg, "moments")?;
    out.write("csv", |w| io::write_moments_csv(w, &rows))?;
    let m = &rows[0];
    let summary = format!(
        "gates={} z_dbz={:.3} v_ms={:.4} w_ms={:.4} zdr_db={:.3} phidp_rad={:.4}",
        rows.len(),
        m.z_dbz,
        m.v_ms,
        m.w_ms,
        m.zdr_db,
        m.phidp_rad
    );
    out.finish(cfg, &summary)
}

#[derive(Serialize)]
struct ReconstructionReport<'a> {
    label: &'a str,
    target_hpbw_deg: f64,
    elements: usize,
    hpbw_deg: f64,
    rmse_db: f64,
}

fn reconstruct(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let profile = match &cfg.profile.path {
        Some(p) => ReflectivityProfile::load_csv(p, cfg.profile.step.range_m)?,
        None => ReflectivityProfile::step(&cfg.profile.step)?,
    };
    let rc = &cfg.reconstruct;
    let ts = TimeseriesSettings {
        pulses: rc.pulses,
        pri_s: cfg.scheme.pri_s,
        wavelength_m: wavelength(cfg.frequency_hz),
        radar_constant: cfg.radar_constant,
        scene: cfg.scene,
        seed: cfg.seed,
    };
    let grid = AngleGrid::symmetric(DESIGN_HALF_SPAN_DEG, PROFILE_STEP_DEG / 2.0);
    let mut results = Vec::with_capacity(rc.beams.len());
    let mut reports = Vec::with_capacity(rc.beams.len());
    for b in &rc.beams {
        let d = design_beam(b.hpbw_deg, cfg.array.spacing_m, cfg.frequency_hz, cfg.taper, &grid)?;
        let r = reconstruct_profile(&profile, &d.two_way, &b.label, rc.step_deg, rc.mode, &ts)?;
        reports.push(ReconstructionReport {
            label: &b.label,
            target_hpbw_deg: b.hpbw_deg,
            elements: d.elements,
            hpbw_deg: d.hpbw_deg,
            rmse_db: r.rmse_db,
        });
        results.push(r);
    }
    let mut out = RunOutput::new(cfg, "reconstruct")?;
    out.write("csv", |w| io::write_reconstruction_csv(w, &results))?;
    out.write("json", |w| io::write_json(w, &reports))?;
    let parts: Vec<String> = reports
        .iter()
        .map(|r| format!("rmse_db[{}]={:.4}", r.label, r.rmse_db))
        .collect();
    out.finish(cfg, &parts.join(" "))
}

fn variance(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let rows = variance_vs_samples(
        &cfg.scene,
        &cfg.variance.n_list,
        cfg.scheme.pri_s,
        wavelength(cfg.frequency_hz),
        cfg.variance.trials,
        cfg.seed,
    )?;
    let mut out = RunOutput::new(cfg, "variance")?;
    out.write("csv", |w| io::write_variance_csv(w, &rows))?;
    let parts: Vec<String> = rows
        .iter()
        .map(|r| format!("sd_db[{}]={:.4}/{:.4}", r.n, r.mc_sd_db, r.model_sd_db))
        .collect();
    out.finish(cfg, &format!("mc/model {}", parts.join(" ")))
}

#[derive(Serialize)]
struct ScanTimeReport {
    sector_deg: f64,
    beamwidth_deg: f64,
    dwell_s: f64,
    beams: u32,
    beam_positions: u64,
    seconds: f64,
}

fn scantime(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let s = &cfg.scantime;
    let t = scan_time(s.sector_deg, s.beamwidth_deg, s.dwell_s, s.beams)?;
    let report = ScanTimeReport {
        sector_deg: s.sector_deg,
        beamwidth_deg: s.beamwidth_deg,
        dwell_s: s.dwell_s,
        beams: s.beams,
        beam_positions: t.beam_positions,
        seconds: t.seconds,
    };
    let mut out = RunOutput::new(cfg, "scantime")?;
    out.write("json", |w| io::write_json(w, &report))?;
    let summary = format!(
        "beam_positions={} beams={} scan_time_ms={}",
        t.beam_positions,
        s.beams,
        format_ms(t.seconds)
    );
    out.finish(cfg, &summary)
}

/// Milliseconds without floating-point noise such as `30.000000000000004`.
fn format_ms(seconds: f64) -> String {
    let ms = seconds * 1e3;
    let r = (ms * 1e6).round() / 1e6;
    format!("{r}")
}
