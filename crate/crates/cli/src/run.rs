use std::path::PathBuf;

use dop_core::imaging::{estimate_map, osci_map, render_scene, write_pfmap};
use dop_core::{run_campaign, DopError, EstimatorKind};
use thiserror::Error;

use crate::config::{ConfigError, Mode, RunConfig};
use crate::emit::{campaign_table, figure_tables, write_atomically, EmitError, Field, Table};

/// Scenes up to this many pixels also get per-pixel tables.
pub const MAX_TABLE_PIXELS: usize = 256 * 256;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("estimation error: {0}")]
    Estimation(#[from] DopError),
    #[error(transparent)]
    Emit(#[from] EmitError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Estimation(_) | RunError::Emit(_) => 3,
        }
    }
}

fn pfmap(channels: &[&[f64]], width: usize, height: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    write_pfmap(&mut buf, width, height, channels).expect("in-memory write");
    buf
}

/// Runs the configured job and writes its artifacts into `cfg.output_dir`.
pub fn execute(cfg: &RunConfig, workers: usize) -> Result<Vec<PathBuf>, RunError> {
    let missing = |what: &str| ConfigError {
        line: None,
        key: None,
        message: format!("{} mode needs a {what} payload", cfg.mode.name()),
    };
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut add = |t: &Table| {
        let (name, body) = t.render(cfg.format);
        files.push((name, body.into_bytes()));
    };
    match cfg.mode {
        Mode::Campaign | Mode::Figures => {
            let c = cfg.campaign.as_ref().ok_or_else(|| missing("campaign"))?;
            let report = run_campaign(&c.spec, workers)?;
            let figures = match cfg.mode {
                Mode::Figures => figure_tables(&report, &c.figures)?,
                _ => Vec::new(),
            };
            add(&campaign_table(&report));
            figures.iter().for_each(&mut add);
        }
        Mode::Scene => {
            let sc = cfg.scene.as_ref().ok_or_else(|| missing("scene"))?;
            let spec = sc.scene_spec()?;
            let keep_cross = sc.estimators.contains(&EstimatorKind::FourImage);
            let pair = render_scene(&spec, keep_cross)?;
            let (w, h) = (pair.width, pair.height);
            let osci = osci_map(&pair);
            let mask: Vec<f64> = osci.degenerate.data.iter().map(|&d| f64::from(u8::from(d))).collect();
            let mut summary = Table {
                name: "scene".into(),
                columns: ["estimator", "window", "mean_p2", "valid_pixels"].map(String::from).to_vec(),
                rows: vec![],
            };
            let mut binaries = vec![
                ("pair.pfmap".to_string(), pfmap(&[&pair.i1.data, &pair.i2.data], w, h)),
                ("osci.pfmap".to_string(), pfmap(&[&osci.contrast.data, &mask], w, h)),
            ];
            let mut pixel_tables = Vec::new();
            for &kind in &sc.estimators {
                let map = estimate_map(&pair, sc.window, kind)?;
                let counts: Vec<f64> = map.counts.data.iter().map(|&c| c as f64).collect();
                binaries.push((format!("p2_{}.pfmap", kind.name()), pfmap(&[&map.p2.data, &counts], w, h)));
                let finite: Vec<f64> = map.p2.data.iter().copied().filter(|v| v.is_finite()).collect();
                let mean = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
                summary.rows.push(vec![
                    Field::Text(kind.name().into()),
                    Field::Int(sc.window),
                    Field::Real(if finite.is_empty() { f64::NAN } else { mean }),
                    Field::Int(finite.len()),
                ]);
                if w * h <= MAX_TABLE_PIXELS {
                    let mut t = Table {
                        name: format!("p2_{}", kind.name()),
                        columns: ["x", "y", "value"].map(String::from).to_vec(),
                        rows: Vec::with_capacity(w * h),
                    };
                    for (i, v) in map.p2.data.iter().enumerate() {
                        t.rows.push(vec![Field::Int(i % w), Field::Int(i / w), Field::Real(*v)]);
                    }
                    pixel_tables.push(t);
                }
            }
            add(&summary);
            pixel_tables.iter().for_each(&mut add);
            files.extend(binaries);
        }
    }
    Ok(write_atomically(&cfg.output_dir, &files)?)
}
