//! Flat key/value run configuration (TOML syntax, no tables).
//!
//! Every key is optional and falls back to its default; unknown keys are an
//! error. Depth limits take `-1` for "no limit".
//!
//! ```toml
//! task = "brate"
//! models = ["linear", "tree", "forest", "xgb_like", "lgbm_like"]
//! seed = 42
//! train_fraction = 0.8
//! input = "telemetry.csv"
//! out = "out"
//! forest_n_trees = 100
//! xgb_max_depth = 6
//! n_samples = 20000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dataset::{Target, TaskSpec};
use crate::ingest::CleaningPolicy;
use crate::metrics::DEFAULT_ERROR_BINS;
use crate::regressors::{ForestParams, LeafwiseParams, ModelKind, SecondOrderParams, TreeParams};
use crate::synthgen::GenConfig;

/// Which partition `evaluate` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Target,
    pub models: Vec<ModelKind>,
    /// Drives the train/test shuffle, forest sampling and the generator.
    pub seed: u64,
    pub train_fraction: f64,
    /// Keep input order for the split instead of shuffling.
    pub temporal_split: bool,
    /// Feature columns; the task default when empty.
    pub features: Vec<String>,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub eval_partition: Partition,
    pub error_bins: usize,

    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub zscore_cutoff: f64,
    pub drop_zero_brate: bool,

    pub tree_max_depth: i64,
    pub tree_min_samples_leaf: usize,

    pub forest_n_trees: usize,
    pub forest_max_depth: i64,
    pub forest_min_samples_leaf: usize,
    pub forest_feature_fraction: f64,
    pub forest_bootstrap: bool,

    pub xgb_n_rounds: usize,
    pub xgb_learning_rate: f64,
    pub xgb_lambda: f64,
    pub xgb_max_depth: i64,
    pub xgb_min_samples_leaf: usize,

    pub lgbm_n_rounds: usize,
    pub lgbm_learning_rate: f64,
    pub lgbm_lambda: f64,
    pub lgbm_num_leaves: usize,
    pub lgbm_n_bins: usize,
    pub lgbm_min_samples_leaf: usize,
    pub lgbm_max_depth: i64,

    pub n_samples: usize,
    pub snr_mean_db: f64,
    pub snr_std_db: f64,
    pub mcs_table: Vec<f64>,
    pub snr_thresholds_db: Vec<f64>,
    pub bler_steepness: f64,
    pub brate_scale_kbps: f64,
    pub noise_std_kbps: f64,
    pub tti_period: u64,
}

fn depth_key(d: Option<usize>) -> i64 {
    d.map_or(-1, |d| d as i64)
}

impl Default for RunConfig {
    fn default() -> Self {
        let clean = CleaningPolicy::default();
        let tree = TreeParams::default();
        let forest = ForestParams::default();
        let xgb = SecondOrderParams::default();
        let lgbm = LeafwiseParams::default();
        let gen = GenConfig::default();
        Self {
            task: Target::Brate,
            models: ModelKind::ALL.to_vec(),
            seed: 42,
            train_fraction: 0.8,
            temporal_split: false,
            features: Vec::new(),
            input: None,
            out: PathBuf::from("out"),
            eval_partition: Partition::Test,
            error_bins: DEFAULT_ERROR_BINS,
            snr_min_db: clean.snr_min_db,
            snr_max_db: clean.snr_max_db,
            zscore_cutoff: clean.zscore_cutoff,
            drop_zero_brate: clean.drop_zero_brate,
            tree_max_depth: depth_key(tree.max_depth),
            tree_min_samples_leaf: tree.min_samples_leaf,
            forest_n_trees: forest.n_trees,
            forest_max_depth: depth_key(forest.tree.max_depth),
            forest_min_samples_leaf: forest.tree.min_samples_leaf,
            forest_feature_fraction: forest.feature_fraction,
            forest_bootstrap: forest.bootstrap,
            xgb_n_rounds: xgb.n_rounds,
            xgb_learning_rate: xgb.learning_rate,
            xgb_lambda: xgb.lambda,
            xgb_max_depth: depth_key(xgb.max_depth),
            xgb_min_samples_leaf: xgb.min_samples_leaf,
            lgbm_n_rounds: lgbm.n_rounds,
            lgbm_learning_rate: lgbm.learning_rate,
            lgbm_lambda: lgbm.lambda,
            lgbm_num_leaves: lgbm.num_leaves,
            lgbm_n_bins: lgbm.n_bins,
            lgbm_min_samples_leaf: lgbm.min_samples_leaf,
            lgbm_max_depth: depth_key(lgbm.max_depth),
            n_samples: gen.n_samples,
            snr_mean_db: gen.snr_mean_db,
            snr_std_db: gen.snr_std_db,
            mcs_table: gen.mcs_table,
            snr_thresholds_db: gen.snr_thresholds_db,
            bler_steepness: gen.bler_steepness,
            brate_scale_kbps: gen.brate_scale_kbps,
            noise_std_kbps: gen.noise_std_kbps,
            tti_period: gen.tti_period,
        }
    }
}

fn depth(key: &str, v: i64) -> Result<Option<usize>, PipelineError> {
    match v {
        -1 => Ok(None),
        d if d >= 0 => Ok(Some(d as usize)),
        _ => Err(PipelineError::Config(format!("{key} must be >= 0 or -1, got {v}"))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            PipelineError::Config(msg) => PipelineError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.message().to_string()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.models.is_empty() {
            return Err(PipelineError::Config("at least one model must be selected".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(PipelineError::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.error_bins == 0 {
            return Err(PipelineError::Config("error_bins must be at least 1".into()));
        }
        self.task_spec()?;
        self.cleaning_policy()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.tree_params()?;
        self.forest_params()?;
        self.second_order_params()?;
        self.leafwise_params()?;
        Ok(())
    }

    pub fn task_spec(&self) -> Result<TaskSpec, PipelineError> {
        if self.features.is_empty() {
            return Ok(TaskSpec::new(self.task));
        }
        let names: Vec<&str> = self.features.iter().map(String::as_str).collect();
        TaskSpec::with_feature_names(self.task, &names).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn cleaning_policy(&self) -> CleaningPolicy {
        CleaningPolicy {
            snr_min_db: self.snr_min_db,
            snr_max_db: self.snr_max_db,
            zscore_cutoff: self.zscore_cutoff,
            drop_zero_brate: self.drop_zero_brate,
        }
    }

    pub fn tree_params(&self) -> Result<TreeParams, PipelineError> {
        Ok(TreeParams {
            max_depth: depth("tree_max_depth", self.tree_max_depth)?,
            min_samples_leaf: self.tree_min_samples_leaf,
        })
    }

    pub fn forest_params(&self) -> Result<ForestParams, PipelineError> {
        Ok(ForestParams {
            n_trees: self.forest_n_trees,
            tree: TreeParams {
                max_depth: depth("forest_max_depth", self.forest_max_depth)?,
                min_samples_leaf: self.forest_min_samples_leaf,
            },
            feature_fraction: self.forest_feature_fraction,
            bootstrap: self.forest_bootstrap,
            seed: self.seed,
        })
    }

    pub fn second_order_params(&self) -> Result<SecondOrderParams, PipelineError> {
        Ok(SecondOrderParams {
            n_rounds: self.xgb_n_rounds,
            learning_rate: self.xgb_learning_rate,
            lambda: self.xgb_lambda,
            max_depth: depth("xgb_max_depth", self.xgb_max_depth)?,
            min_samples_leaf: self.xgb_min_samples_leaf,
            base_score: None,
        })
    }

    pub fn leafwise_params(&self) -> Result<LeafwiseParams, PipelineError> {
        Ok(LeafwiseParams {
            n_rounds: self.lgbm_n_rounds,
            learning_rate: self.lgbm_learning_rate,
            lambda: self.lgbm_lambda,
            num_leaves: self.lgbm_num_leaves,
            n_bins: self.lgbm_n_bins,
            min_samples_leaf: self.lgbm_min_samples_leaf,
            max_depth: depth("lgbm_max_depth", self.lgbm_max_depth)?,
            base_score: None,
        })
    }

    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            n_samples: self.n_samples,
            seed: self.seed,
            snr_mean_db: self.snr_mean_db,
            snr_std_db: self.snr_std_db,
            mcs_table: self.mcs_table.clone(),
            snr_thresholds_db: self.snr_thresholds_db.clone(),
            bler_steepness: self.bler_steepness,
            brate_scale_kbps: self.brate_scale_kbps,
            noise_std_kbps: self.noise_std_kbps,
            tti_period: self.tti_period,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn parses_flat_keys() {
        let cfg = RunConfig::from_toml(
            "task = \"snr\"\nmodels = [\"tree\", \"lgbm_like\"]\nseed = 7\ntree_max_depth = -1\nnoise_std_kbps = 5.0\n",
        )
        .unwrap();
        assert_eq!(cfg.task, Target::Snr);
        assert_eq!(cfg.models, [ModelKind::Tree, ModelKind::LgbmLike]);
        assert_eq!(cfg.tree_params().unwrap().max_depth, None);
        assert_eq!(cfg.gen_config().noise_std_kbps, 5.0);
        assert_eq!(cfg.forest_params().unwrap().seed, 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_config_error() {
        assert!(matches!(
            RunConfig::from_toml("n_estimators = 3"),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn validation_catches_bad_values() {
        for cfg in [
            RunConfig { models: vec![], ..Default::default() },
            RunConfig { train_fraction: 1.0, ..Default::default() },
            RunConfig { xgb_max_depth: -3, ..Default::default() },
            RunConfig { features: vec!["snr".into(), "brate".into()], ..Default::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        }
    }
}
