//! Paired sparse clouds and label grids written to disk.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lidar::{raycast, LabeledCloud, LidarConfig};
use super::scene::{generate_scene, Scene, SceneParams};
use super::truth::{ground_truth_from_hd, DEFAULT_MIN_HITS};
use crate::error::{Error, Result};
use crate::grid::{save_grid, GridFile, GridSpec, GroundTruthGrid};
use crate::pointcloud::save_cloud;
use crate::rng::derive_seed;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub grid: GridSpec,
    pub scene: SceneParams,
    pub sparse: LidarConfig,
    pub hd: LidarConfig,
    pub min_hits: usize,
}

impl Default for DatasetConfig {
    /// Desk-scale grid with the scene filling it.
    fn default() -> Self {
        DatasetConfig::for_grid(GridSpec::desk())
    }
}

impl DatasetConfig {
    /// Default sensors and scene density on the given grid, with the scene
    /// filling the grid.
    pub fn for_grid(grid: GridSpec) -> Self {
        DatasetConfig {
            scene: SceneParams {
                extent_m: [grid.length_m(), grid.width_m()],
                ..SceneParams::default()
            },
            grid,
            sparse: LidarConfig::sparse(),
            hd: LidarConfig::hd(),
            min_hits: DEFAULT_MIN_HITS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sparse.validate()?;
        self.hd.validate()?;
        let [l, w] = self.scene.extent_m;
        if l > self.grid.length_m() + 1e-9 || w > self.grid.width_m() + 1e-9 {
            return Err(Error::Config(format!(
                "scene extent {l}×{w} m exceeds grid extent {}×{} m",
                self.grid.length_m(),
                self.grid.width_m()
            )));
        }
        Ok(())
    }
}

/// Everything simulated for one sample.
#[derive(Debug, Clone)]
pub struct Sample {
    pub scene: Scene,
    pub sparse: LabeledCloud,
    pub hd: LabeledCloud,
    pub truth: GroundTruthGrid,
}

/// Simulates one sample; the result depends only on `config` and `seed`.
pub fn generate_sample(config: &DatasetConfig, seed: u64) -> Result<Sample> {
    let scene = generate_scene(derive_seed(seed, 0), &config.scene)?;
    let sparse = raycast(&scene, &config.sparse, derive_seed(seed, 1))?;
    let hd = raycast(&scene, &config.hd, derive_seed(seed, 2))?;
    let truth = ground_truth_from_hd(&scene, &hd, &sparse, &config.grid, config.min_hits)?;
    Ok(Sample {
        scene,
        sparse,
        hd,
        truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEntry {
    pub index: usize,
    pub seed: u64,
    /// Paths relative to the manifest's directory.
    pub cloud: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub config: DatasetConfig,
    pub samples: Vec<SampleEntry>,
    /// Directory holding the manifest; filled in on load.
    #[serde(skip)]
    pub root: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Manifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported manifest version {}",
                path.display(),
                m.version
            )));
        }
        m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn cloud_path(&self, entry: &SampleEntry) -> PathBuf {
        self.root.join(&entry.cloud)
    }

    pub fn label_path(&self, entry: &SampleEntry) -> PathBuf {
        self.root.join(&entry.label)
    }
}

/// Writes `n_samples` cloud/label pairs and a manifest into `out_dir`.
///
/// Sample `i` is generated from `derive_seed(seed, i)`, so the files do
/// not depend on how work is spread over threads.
pub fn generate_dataset(out_dir: &Path, n_samples: usize, seed: u64, config: &DatasetConfig) -> Result<Manifest> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let samples = (0..n_samples)
        .into_par_iter()
        .map(|index| {
            let sample_seed = derive_seed(seed, index as u64);
            let sample = generate_sample(config, sample_seed)?;
            let entry = SampleEntry {
                index,
                seed: sample_seed,
                cloud: format!("{index:05}.evpc"),
                label: format!("{index:05}.evgrid"),
            };
            save_cloud(out_dir.join(&entry.cloud), &sample.sparse.to_point_cloud()?)?;
            save_grid(out_dir.join(&entry.label), &GridFile::Labels(sample.truth))?;
            log::debug!("sample {index} written");
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        version: MANIFEST_VERSION,
        seed,
        config: config.clone(),
        samples,
        root: out_dir.to_path_buf(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DatasetConfig {
        let mut c = DatasetConfig::default();
        c.hd.channels = 64;
        c
    }

    #[test]
    fn writes_pairs_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_dataset(dir.path(), 1, 7, &small()).unwrap();
        assert_eq!(m.samples.len(), 1);
        let mut names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, ["00000.evgrid", "00000.evpc", "manifest.json"]);
        let loaded = Manifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(loaded, m);
    }

    #[test]
    fn oversized_scene_is_rejected() {
        let mut c = small();
        c.scene.extent_m = [500.0, 10.0];
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(generate_dataset(dir.path(), 1, 0, &c), Err(Error::Config(_))));
    }

    #[test]
    fn unwritable_target_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, b"x").unwrap();
        let err = generate_dataset(&file, 1, 0, &small()).unwrap_err();
        assert!(err.to_string().contains("occupied"), "{err}");
    }
}
