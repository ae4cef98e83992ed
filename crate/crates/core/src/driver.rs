//! Manifest-driven batch runs shared by the command-line tool and the tests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::PartitionedHamiltonian;
use crate::integrals::{freeze_core, IntegralSet};
use crate::qubitmap::TaperingPlan;
use crate::sbpt::{self, Method, PerturberState, ReferenceSolution, SbptOptions, SbptResult};
use crate::symmetry::{GroupingFile, IrrepLabel, SymmetryModel};

pub const CSV_SCHEMA: &str = "# schema: sbpt-scan/1";
pub const CSV_COLUMNS: [&str; 13] = [
    "tag",
    "e0",
    "e1_diag",
    "e2_uc",
    "e2_sc",
    "e2_en",
    "e_total_sc",
    "ref_energy",
    "error_mEh",
    "n_det_ref",
    "n_irreps",
    "n_qubits_tapered",
    "wall_ms",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestPoint {
    pub tag: String,
    pub fcidump: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nevpt2_energy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SciSettings {
    pub eps1: f64,
    pub eps2: f64,
    pub selection_point: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub points: Vec<ManifestPoint>,
    pub grouping: PathBuf,
    #[serde(default)]
    pub frozen: Vec<usize>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sci: Option<SciSettings>,
}

impl Manifest {
    /// Loads a manifest and resolves its paths relative to the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut m: Manifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        m.grouping = dir.join(&m.grouping);
        for p in &mut m.points {
            p.fcidump = dir.join(&p.fcidump);
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut tags = std::collections::HashSet::new();
        for p in &self.points {
            if !tags.insert(&p.tag) {
                return Err(Error::Usage(format!("duplicate tag {}", p.tag)));
            }
            if !p.fcidump.exists() {
                return Err(Error::Usage(format!("missing {}", p.fcidump.display())));
            }
        }
        if !self.grouping.exists() {
            return Err(Error::Usage(format!("missing {}", self.grouping.display())));
        }
        if let Some(sci) = &self.sci {
            if !self.points.iter().any(|p| p.tag == sci.selection_point) {
                return Err(Error::Usage(format!(
                    "selection point {} is not a manifest tag",
                    sci.selection_point
                )));
            }
        }
        Ok(())
    }

    pub fn point(&self, tag: &str) -> Result<&ManifestPoint> {
        self.points
            .iter()
            .find(|p| p.tag == tag)
            .ok_or_else(|| Error::Usage(format!("no point tagged {tag}")))
    }
}

/// Frozen-core integrals with the symmetry model, target label and partition built from them.
#[derive(Debug, Clone)]
pub struct Problem {
    pub integrals: IntegralSet,
    pub model: SymmetryModel,
    pub target: IrrepLabel,
    pub partition: PartitionedHamiltonian,
}

impl Problem {
    pub fn new(integrals: IntegralSet, grouping: &GroupingFile) -> Result<Self> {
        let (na, nb) = integrals.n_alpha_beta();
        let (model, target) = grouping.model_and_target(integrals.n_spatial, na, nb)?;
        let partition = PartitionedHamiltonian::new(&integrals, &model);
        Ok(Self {
            integrals,
            model,
            target,
            partition,
        })
    }

    pub fn load(fcidump: &Path, frozen: &[usize], grouping: &Path) -> Result<Self> {
        let raw = IntegralSet::from_path(fcidump)?;
        let integrals = freeze_core(&raw, frozen)?;
        Self::new(integrals, &GroupingFile::from_path(grouping)?)
    }

    pub fn solve(
        &self,
        methods: &[Method],
        opts: &SbptOptions,
    ) -> Result<(SbptResult, ReferenceSolution, Vec<PerturberState>)> {
        sbpt::run(
            &self.integrals,
            &self.partition,
            &self.target,
            methods,
            opts,
        )
    }

    pub fn n_qubits_tapered(&self) -> Result<usize> {
        Ok(TaperingPlan::from_model(&self.model, &self.target)?.n_tapered())
    }
}

/// One scan row plus per-irrep breakdowns.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PointRecord {
    pub tag: String,
    pub e0: f64,
    pub e1_diag: f64,
    pub e2_uc: Option<f64>,
    pub e2_sc: Option<f64>,
    pub e2_en: Option<f64>,
    pub e_total_sc: Option<f64>,
    pub ref_energy: Option<f64>,
    #[serde(rename = "error_mEh")]
    pub error_meh: Option<f64>,
    pub n_det_ref: usize,
    pub n_irreps: usize,
    pub n_qubits_tapered: usize,
    pub wall_ms: Option<u128>,
    pub contributions: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub sbpt: SbptOptions,
    pub omit_timing: bool,
}

/// Runs one point; errors carry the point tag.
pub fn run_point(
    tag: &str,
    problem: &Problem,
    methods: &[Method],
    ref_energy: Option<f64>,
    opts: &RunOptions,
) -> Result<PointRecord> {
    let wrap = |e: Error| Error::Point {
        tag: tag.to_string(),
        source: Box::new(e),
    };
    let start = Instant::now();
    let (res, _, _) = problem.solve(methods, &opts.sbpt).map_err(wrap)?;
    let n_qubits_tapered = problem.n_qubits_tapered().map_err(wrap)?;
    let e_total_sc = res.total(Method::Sc);
    let best = e_total_sc.unwrap_or(res.e0);
    let contributions = res
        .second_order
        .iter()
        .map(|(m, so)| {
            (
                m.to_string(),
                so.contributions
                    .iter()
                    .map(|(l, v)| (l.to_string(), *v))
                    .collect(),
            )
        })
        .collect();
    Ok(PointRecord {
        tag: tag.to_string(),
        e0: res.e0,
        e1_diag: res.e1,
        e2_uc: res.e2(Method::Uc),
        e2_sc: res.e2(Method::Sc),
        e2_en: res.e2(Method::En),
        e_total_sc,
        ref_energy,
        error_meh: ref_energy.map(|r| (best - r) * 1000.0),
        n_det_ref: res.n_det_ref,
        n_irreps: res.n_irreps,
        n_qubits_tapered,
        wall_ms: (!opts.omit_timing).then(|| start.elapsed().as_millis()),
        contributions,
    })
}

/// Runs every manifest point (concurrently) and returns results in manifest order.
pub fn run_scan(
    manifest: &Manifest,
    methods: &[Method],
    opts: &RunOptions,
) -> Vec<std::result::Result<PointRecord, Error>> {
    let grouping = match GroupingFile::from_path(&manifest.grouping) {
        Ok(g) => g,
        Err(e) => {
            let msg = e.to_string();
            return manifest
                .points
                .iter()
                .map(|p| {
                    Err(Error::Point {
                        tag: p.tag.clone(),
                        source: Box::new(Error::Usage(msg.clone())),
                    })
                })
                .collect();
        }
    };
    manifest
        .points
        .par_iter()
        .map(|p| {
            let problem = IntegralSet::from_path(&p.fcidump)
                .and_then(|raw| freeze_core(&raw, &manifest.frozen))
                .and_then(|ints| Problem::new(ints, &grouping))
                .map_err(|e| Error::Point {
                    tag: p.tag.clone(),
                    source: Box::new(e),
                })?;
            run_point(&p.tag, &problem, methods, p.reference_energy, opts)
        })
        .collect()
}

fn fmt_energy(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10}")).unwrap_or_default()
}

/// Writes the versioned CSV: a schema comment, the header row, one row per point.
pub fn write_csv<W: Write>(out: W, rows: &[PointRecord]) -> Result<()> {
    let mut out = out;
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.tag.clone(),
            fmt_energy(Some(r.e0)),
            fmt_energy(Some(r.e1_diag)),
            fmt_energy(r.e2_uc),
            fmt_energy(r.e2_sc),
            fmt_energy(r.e2_en),
            fmt_energy(r.e_total_sc),
            fmt_energy(r.ref_energy),
            r.error_meh.map(|x| format!("{x:.6}")).unwrap_or_default(),
            r.n_det_ref.to_string(),
            r.n_irreps.to_string(),
            r.n_qubits_tapered.to_string(),
            r.wall_ms.map(|x| x.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `resources` input: one FCIDUMP and several named groupings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResourceSpec {
    pub fcidump: PathBuf,
    #[serde(default)]
    pub frozen: Vec<usize>,
    pub rows: Vec<ResourceSpecRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResourceSpecRow {
    pub name: String,
    pub grouping: PathBuf,
}

impl ResourceSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut s: ResourceSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        s.fcidump = dir.join(&s.fcidump);
        for r in &mut s.rows {
            r.grouping = dir.join(&r.grouping);
        }
        Ok(s)
    }

    pub fn report(&self) -> Result<Vec<crate::qubitmap::ResourceRow>> {
        let ints = freeze_core(&IntegralSet::from_path(&self.fcidump)?, &self.frozen)?;
        let (na, nb) = ints.n_alpha_beta();
        let models = self
            .rows
            .iter()
            .map(|r| {
                let (m, t) = GroupingFile::from_path(&r.grouping)?.model_and_target(
                    ints.n_spatial,
                    na,
                    nb,
                )?;
                Ok((r.name.clone(), m, t))
            })
            .collect::<Result<Vec<_>>>()?;
        crate::qubitmap::resource_report(&models)
    }
}
