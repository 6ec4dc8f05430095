//! Executes resolved configs: parallel sweep points, atomic artifact writes, manifest last.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use photonet::bornmarkov::{bm_parameters, bm_table};
use photonet::coefficients::coefficient_trace;
use photonet::pipeline::{run_exact, ExactRun};
use photonet::trace::format_float;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Method, ResolvedConfig, SweepPoint};
use crate::plots;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Trace,
    Kernels,
    Propagators,
    Coefficients,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    /// File name relative to the output directory.
    pub path: String,
    pub kind: ArtifactKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub parameters: BTreeMap<&'static str, f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub point: usize,
    pub description: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub methods: Vec<Method>,
    pub points: Vec<PointRecord>,
    pub files: Vec<Artifact>,
    pub failures: Vec<Failure>,
}

impl Manifest {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .context("output path has no file name")?;
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn propagator_dump(run: &ExactRun) -> String {
    let p = &run.propagators;
    let n = p.dim;
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("re_u_{i}_{j}"));
            header.push(format!("im_u_{i}_{j}"));
        }
    }
    for i in 0..n {
        header.push(format!("re_y_{i}"));
        header.push(format!("im_y_{i}"));
    }
    for i in 0..n {
        for j in 0..n {
            header.push(format!("re_v_{i}_{j}"));
            header.push(format!("im_v_{i}_{j}"));
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for k in p.grid.output_indices() {
        out.push_str(&format_float(p.grid.time(k)));
        for z in p.u_at(k).iter().chain(p.y_at(k)).chain(p.v_diag_at(k)) {
            let _ = write!(out, ",{},{}", format_float(z.re), format_float(z.im));
        }
        out.push('\n');
    }
    out
}

struct PointOutput {
    record: PointRecord,
    files: Vec<Artifact>,
}

fn run_point(point: &SweepPoint, config: &ResolvedConfig, dir: &Path) -> Result<PointOutput> {
    let idx = point.index;
    let mut files = Vec::new();
    let mut warnings: Vec<String> = point
        .spec
        .validate()
        .warnings
        .iter()
        .map(|w| format!("{}: {}", w.location, w.message))
        .collect();
    let mut emit = |name: String, kind: ArtifactKind, method: Option<Method>, body: &[u8]| -> Result<()> {
        write_atomic(&dir.join(&name), body)?;
        files.push(Artifact {
            path: name,
            kind,
            method,
            point: Some(idx),
        });
        Ok(())
    };
    for &method in &config.methods {
        match method {
            Method::Exact => {
                let run = run_exact(&point.spec)?;
                let table = run.transport.to_table(method.name());
                emit(format!("exact-{idx:03}.csv"), ArtifactKind::Trace, Some(method), table.to_csv().as_bytes())?;
                if config.dump.kernels {
                    let mut buf = Vec::new();
                    run.kernels.write_dump(&mut buf)?;
                    emit(format!("kernels-{idx:03}.csv"), ArtifactKind::Kernels, None, &buf)?;
                }
                if config.dump.propagators {
                    emit(
                        format!("propagators-{idx:03}.csv"),
                        ArtifactKind::Propagators,
                        None,
                        propagator_dump(&run).as_bytes(),
                    )?;
                }
                if config.dump.coefficients {
                    let mut buf = Vec::new();
                    coefficient_trace(&point.spec, &run.propagators)?.write_csv(&mut buf)?;
                    emit(format!("coefficients-{idx:03}.csv"), ArtifactKind::Coefficients, None, &buf)?;
                }
            }
            Method::Bm => {
                if let Some(w) = bm_parameters(&point.spec)?.validity_warning() {
                    warnings.push(w);
                }
                let table = bm_table(&point.spec)?;
                emit(format!("bm-{idx:03}.csv"), ArtifactKind::Trace, Some(method), table.to_csv().as_bytes())?;
            }
        }
    }
    Ok(PointOutput {
        record: PointRecord {
            index: idx,
            parameters: point.parameters.iter().map(|(p, v)| (p.name(), *v)).collect(),
            warnings,
        },
        files,
    })
}

/// Runs every sweep point on at most `jobs` threads and writes the manifest last.
///
/// Per-point failures are recorded in the manifest instead of aborting the other points.
pub fn run(config: &ResolvedConfig, output_dir: Option<&Path>, jobs: Option<usize>) -> Result<Manifest> {
    let dir: PathBuf = output_dir.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("building thread pool")?;
    let outcomes: Vec<Result<PointOutput>> = pool.install(|| {
        config
            .points
            .par_iter()
            .map(|p| run_point(p, config, &dir))
            .collect()
    });
    let mut manifest = Manifest {
        schema: photonet::trace::SCHEMA_VERSION,
        methods: config.methods.clone(),
        points: Vec::new(),
        files: Vec::new(),
        failures: Vec::new(),
    };
    for (point, outcome) in config.points.iter().zip(outcomes) {
        match outcome {
            Ok(out) => {
                manifest.points.push(out.record);
                manifest.files.extend(out.files);
            }
            Err(e) => manifest.failures.push(Failure {
                point: point.index,
                description: point.describe(),
                error: format!("{e:#}"),
            }),
        }
    }
    if config.emit_plots {
        for (name, body) in plots::SCRIPTS {
            write_atomic(&dir.join(name), body.as_bytes())?;
            manifest.files.push(Artifact {
                path: name.to_string(),
                kind: ArtifactKind::Plot,
                method: None,
                point: None,
            });
        }
    }
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(&dir.join(MANIFEST), text.as_bytes())?;
    Ok(manifest)
}
