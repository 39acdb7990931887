//! Map quality metrics and run reports comparing the geometric and learned
//! inverse sensor models.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidential::{evidence_to_dirichlet, evidence_to_mass, kl_dirichlet, BeliefMass, DirichletBinary};
use crate::geometric_ism::{geometric_ism, GeometricIsmParams};
use crate::grid::{load_grid, render_evidential, render_rgb, EvidentialGrid, GridSpec, GroundTruthGrid, Label};
use crate::loss::Accumulator;
use crate::model::Model;
use crate::pointcloud::{load_cloud, PointCloud};
use crate::synth::Manifest;

/// Evidence given to the true class when turning labels into Dirichlets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthDirichletConfig {
    pub true_evidence: f64,
}

impl Default for TruthDirichletConfig {
    fn default() -> Self {
        TruthDirichletConfig { true_evidence: 50.0 }
    }
}

impl TruthDirichletConfig {
    pub fn validate(&self) -> Result<()> {
        if self.true_evidence > 0.0 && self.true_evidence.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "true evidence must be positive, got {}",
                self.true_evidence
            )))
        }
    }

    pub fn dirichlet(&self, label: Label) -> DirichletBinary {
        let e = self.true_evidence;
        match label {
            Label::Unknown => DirichletBinary::UNIFORM,
            Label::Free => DirichletBinary::new(1.0 + e, 1.0),
            Label::Occupied => DirichletBinary::new(1.0, 1.0 + e),
        }
    }
}

/// Per-cell Dirichlet of the label grid, row-major.
pub fn truth_to_dirichlet(truth: &GroundTruthGrid, cfg: &TruthDirichletConfig) -> Vec<DirichletBinary> {
    truth.cells().iter().map(|&l| cfg.dirichlet(l)).collect()
}

/// Belief masses averaged over every cell of the grid.
pub fn mean_belief_masses(grid: &EvidentialGrid) -> BeliefMass {
    let (mut f, mut o, mut u) = (Accumulator::default(), Accumulator::default(), Accumulator::default());
    for &e in grid.cells() {
        let m = evidence_to_mass(e).expect("grid holds valid evidence");
        f.add(m.free);
        o.add(m.occupied);
        u.add(m.unknown);
    }
    let n = grid.cells().len().max(1) as f64;
    BeliefMass {
        free: f.value() / n,
        occupied: o.value() / n,
        unknown: u.value() / n,
    }
}

/// Mean over cells of KL[predicted ‖ true Dirichlet]. With `observed_only`
/// the mean runs over labelled (non-Unknown) cells only; a grid without
/// any then scores 0.
pub fn mean_kl_to_truth(
    pred: &EvidentialGrid,
    truth: &GroundTruthGrid,
    cfg: &TruthDirichletConfig,
    observed_only: bool,
) -> Result<f64> {
    cfg.validate()?;
    if pred.spec() != truth.spec() {
        return Err(Error::Domain(format!(
            "prediction grid {:?} does not match label grid {:?}",
            pred.spec(),
            truth.spec()
        )));
    }
    let mut acc = Accumulator::default();
    let mut n = 0usize;
    for (&e, &label) in pred.cells().iter().zip(truth.cells()) {
        if observed_only && label == Label::Unknown {
            continue;
        }
        acc.add(kl_dirichlet(evidence_to_dirichlet(e)?, cfg.dirichlet(label)));
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { acc.value() / n as f64 })
}

/// Bird's-eye view of a cloud: brightness grows with the number of points
/// in a cell.
pub fn render_cloud(cloud: &PointCloud, spec: &GridSpec) -> Vec<u8> {
    let mut counts = vec![0u32; spec.num_cells()];
    for p in cloud.points() {
        if let Some((r, c)) = spec.world_to_cell(p.x, p.y) {
            counts[spec.index(r, c)] += 1;
        }
    }
    render_rgb(spec, |r, c| {
        let n = counts[spec.index(r, c)];
        let v = if n == 0 { 0 } else { (95 + 32 * n).min(255) as u8 };
        [v, v, v]
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub truth: TruthDirichletConfig,
    /// Average KL over labelled cells only instead of all cells.
    pub observed_only: bool,
    /// Extra true-evidence values at which the aggregate KL is reported.
    pub sensitivity: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            truth: TruthDirichletConfig::default(),
            observed_only: false,
            sensitivity: vec![10.0, 50.0, 200.0],
        }
    }
}

/// Masses and KL of one map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapMetrics {
    pub masses: BeliefMass,
    pub mean_kl: f64,
    /// KL at each `EvalConfig::sensitivity` value, in order.
    pub kl_sensitivity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub index: usize,
    pub geometric: MapMetrics,
    pub deep: MapMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub ism: &'static str,
    pub frames: usize,
    pub masses: BeliefMass,
    pub mean_kl: f64,
    pub kl_sensitivity: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub frames: Vec<FrameRow>,
    pub aggregate: Vec<AggregateRow>,
}

impl Report {
    pub fn frames_csv(&self) -> String {
        let mut s = String::from(
            "frame,geom_m_free,geom_m_occupied,geom_m_unknown,geom_mean_kl,deep_m_free,deep_m_occupied,deep_m_unknown,deep_mean_kl\n",
        );
        for f in &self.frames {
            let _ = write!(s, "{}", f.index);
            for m in [&f.geometric, &f.deep] {
                let _ = write!(
                    s,
                    ",{},{},{},{}",
                    m.masses.free, m.masses.occupied, m.masses.unknown, m.mean_kl
                );
            }
            s.push('\n');
        }
        s
    }

    pub fn aggregate_csv(&self) -> String {
        let mut s = String::from("ism,frames,m_free,m_occupied,m_unknown,mean_kl");
        if let Some(first) = self.aggregate.first() {
            for (e, _) in &first.kl_sensitivity {
                let _ = write!(s, ",mean_kl_e{e}");
            }
        }
        s.push('\n');
        for a in &self.aggregate {
            let _ = write!(
                s,
                "{},{},{},{},{},{}",
                a.ism, a.frames, a.masses.free, a.masses.occupied, a.masses.unknown, a.mean_kl
            );
            for (_, v) in &a.kl_sensitivity {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

fn metrics(grid: &EvidentialGrid, truth: &GroundTruthGrid, cfg: &EvalConfig) -> Result<MapMetrics> {
    let mut kl_sensitivity = [0.0; 3];
    for (dst, &e) in kl_sensitivity.iter_mut().zip(&cfg.sensitivity) {
        *dst = mean_kl_to_truth(grid, truth, &TruthDirichletConfig { true_evidence: e }, cfg.observed_only)?;
    }
    Ok(MapMetrics {
        masses: mean_belief_masses(grid),
        mean_kl: mean_kl_to_truth(grid, truth, &cfg.truth, cfg.observed_only)?,
        kl_sensitivity,
    })
}

fn aggregate(ism: &'static str, rows: &[MapMetrics], cfg: &EvalConfig) -> AggregateRow {
    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&MapMetrics) -> f64| {
        let mut acc = Accumulator::default();
        rows.iter().for_each(|m| acc.add(f(m)));
        acc.value() / n
    };
    AggregateRow {
        ism,
        frames: rows.len(),
        masses: BeliefMass {
            free: mean(&|m| m.masses.free),
            occupied: mean(&|m| m.masses.occupied),
            unknown: mean(&|m| m.masses.unknown),
        },
        mean_kl: mean(&|m| m.mean_kl),
        kl_sensitivity: cfg
            .sensitivity
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, mean(&|m| m.kl_sensitivity[k])))
            .collect(),
    }
}

/// Runs both inverse sensor models on every frame of a dataset and scores
/// them against the labels.
///
/// With `out_dir`, writes `report.csv`, `report_aggregate.csv` and per
/// frame `frame_NNNNN_{input,geom,deep}.ppm`. Rows are ordered by frame
/// index whatever the order of the manifest.
pub fn evaluate_run(
    manifest: &Manifest,
    model: &Model<f32>,
    geom: &GeometricIsmParams,
    cfg: &EvalConfig,
    out_dir: Option<&Path>,
) -> Result<Report> {
    cfg.truth.validate()?;
    geom.validate()?;
    if cfg.sensitivity.len() > 3 {
        return Err(Error::Config("at most three sensitivity values are supported".into()));
    }
    let spec = model.config().grid;
    if manifest.config.grid != spec {
        return Err(Error::Config(format!(
            "dataset grid {:?} does not match model grid {spec:?}",
            manifest.config.grid
        )));
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let mut frames = manifest
        .samples
        .par_iter()
        .map(|entry| {
            let cloud = load_cloud(manifest.cloud_path(entry))?;
            let truth = load_grid(manifest.label_path(entry))?.into_labels()?;
            let geo = geometric_ism(&cloud, &spec, geom)?;
            let deep = model.predict(&cloud, &spec)?;
            if let Some(dir) = out_dir {
                let i = entry.index;
                for (name, bytes) in [
                    ("input", render_cloud(&cloud, &spec)),
                    ("geom", render_evidential(&geo)),
                    ("deep", render_evidential(&deep)),
                ] {
                    let path = dir.join(format!("frame_{i:05}_{name}.ppm"));
                    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
                }
            }
            Ok(FrameRow {
                index: entry.index,
                geometric: metrics(&geo, &truth, cfg)?,
                deep: metrics(&deep, &truth, cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    frames.sort_by_key(|f| f.index);

    let geo_rows: Vec<_> = frames.iter().map(|f| f.geometric).collect();
    let deep_rows: Vec<_> = frames.iter().map(|f| f.deep).collect();
    let report = Report {
        aggregate: vec![aggregate("geometric", &geo_rows, cfg), aggregate("deep", &deep_rows, cfg)],
        frames,
    };
    if let Some(dir) = out_dir {
        for (name, text) in [
            ("report.csv", report.frames_csv()),
            ("report_aggregate.csv", report.aggregate_csv()),
        ] {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidential::EvidencePair;

    fn spec() -> GridSpec {
        GridSpec::new(2, 2, 1.0).unwrap()
    }

    #[test]
    fn truth_mapping() {
        let cfg = TruthDirichletConfig::default();
        assert_eq!(cfg.dirichlet(Label::Unknown), DirichletBinary::new(1.0, 1.0));
        assert_eq!(cfg.dirichlet(Label::Free), DirichletBinary::new(51.0, 1.0));
        assert_eq!(cfg.dirichlet(Label::Occupied), DirichletBinary::new(1.0, 51.0));
    }

    #[test]
    fn mean_masses() {
        let g = EvidentialGrid::new(spec());
        assert_eq!(
            mean_belief_masses(&g),
            BeliefMass {
                free: 0.0,
                occupied: 0.0,
                unknown: 1.0
            }
        );
        let mut g = EvidentialGrid::new(spec());
        g.set(0, 0, EvidencePair::new(18.0, 0.0));
        g.set(1, 1, EvidencePair::new(18.0, 0.0));
        let m = mean_belief_masses(&g);
        assert!((m.free - 0.45).abs() < 1e-12 && m.occupied == 0.0 && (m.unknown - 0.55).abs() < 1e-12);
    }

    #[test]
    fn kl_is_zero_for_matching_maps() {
        let cfg = TruthDirichletConfig::default();
        let g = EvidentialGrid::new(spec());
        let truth = GroundTruthGrid::new(spec());
        assert_eq!(mean_kl_to_truth(&g, &truth, &cfg, false).unwrap(), 0.0);

        let mut truth = GroundTruthGrid::new(spec());
        truth.set(0, 1, Label::Free);
        truth.set(1, 0, Label::Occupied);
        let mut g = EvidentialGrid::new(spec());
        g.set(0, 1, EvidencePair::new(50.0, 0.0));
        g.set(1, 0, EvidencePair::new(0.0, 50.0));
        assert!(mean_kl_to_truth(&g, &truth, &cfg, false).unwrap().abs() < 1e-12);
        g.set(1, 0, EvidencePair::new(0.0, 5.0));
        let all = mean_kl_to_truth(&g, &truth, &cfg, false).unwrap();
        let observed = mean_kl_to_truth(&g, &truth, &cfg, true).unwrap();
        assert!(all > 0.0 && (observed - 2.0 * all).abs() < 1e-12);
    }

    #[test]
    fn render_cloud_marks_hit_cells() {
        let cloud = PointCloud::new(vec![crate::pointcloud::Point::new(0.5, 0.5, 0.0, 0.0)], 1.8).unwrap();
        let img = render_cloud(&cloud, &spec());
        let header = b"P6\n2 2\n255\n".len();
        let lit: Vec<_> = img[header..].chunks(3).map(|p| p[0]).collect();
        // Cell (1, 1) is forward-left: top-left of the image.
        assert_eq!(lit, vec![127, 0, 0, 0]);
    }
}
