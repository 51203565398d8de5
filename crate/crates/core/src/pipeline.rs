//! Training strategies selectable by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::pdb::{Dataset, MissingMask};
use crate::rng::derive_seed;
use crate::trainer::{make_split, train_semi_supervised, train_unsupervised, TrainConfig, TrainedModel};

/// Everything a strategy may look at. `ground_truth` is the full clean dataset;
/// strategies decide how much of it they are allowed to see.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub corrupted: &'a Dataset,
    pub mask: Option<&'a MissingMask>,
    pub ground_truth: Option<&'a Dataset>,
}

pub trait TrainingPipeline: Send + Sync {
    fn name(&self) -> &'static str;
    fn train(&self, data: &TrainingData<'_>, cfg: &TrainConfig) -> Result<TrainedModel>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Unsupervised;

impl TrainingPipeline for Unsupervised {
    fn name(&self) -> &'static str {
        "unsupervised"
    }

    fn train(&self, data: &TrainingData<'_>, cfg: &TrainConfig) -> Result<TrainedModel> {
        train_unsupervised(data.corrupted, data.mask, cfg)
    }
}

/// Reveals the ground truth of a random `labeled_fraction` of the records.
#[derive(Debug, Clone, Copy, Default)]
pub struct SemiSupervised;

const SPLIT_STAGE: u64 = 5;

impl TrainingPipeline for SemiSupervised {
    fn name(&self) -> &'static str {
        "semi-supervised"
    }

    fn train(&self, data: &TrainingData<'_>, cfg: &TrainConfig) -> Result<TrainedModel> {
        let truth = data
            .ground_truth
            .ok_or_else(|| Error::InvalidConfig("semi-supervised training needs ground truth".into()))?;
        if truth.len() != data.corrupted.len() {
            return Err(Error::DimensionMismatch {
                expected: data.corrupted.len(),
                actual: truth.len(),
                context: "ground-truth records".into(),
            });
        }
        let split_seed = derive_seed(cfg.seed, &[SPLIT_STAGE]);
        let split = make_split(data.corrupted.len(), cfg.labeled_fraction, split_seed)?;
        let mut trained =
            train_semi_supervised(data.corrupted, &truth.subset(&split.labeled), &split, data.mask, cfg)?;
        trained.params.record_seed("labeled split", split_seed);
        Ok(trained)
    }
}

#[derive(Clone)]
pub struct PipelineRegistry {
    entries: BTreeMap<String, Arc<dyn TrainingPipeline>>,
}

impl PipelineRegistry {
    pub fn empty() -> Self {
        PipelineRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, pipeline: Arc<dyn TrainingPipeline>) -> Result<()> {
        let name = pipeline.name().to_string();
        if self.entries.contains_key(&name) {
            return Err(Error::InvalidConfig(format!("pipeline `{name}` registered twice")));
        }
        self.entries.insert(name, pipeline);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TrainingPipeline>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownStrategy {
            kind: "pipeline",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for PipelineRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Unsupervised)).expect("fresh registry");
        r.register(Arc::new(SemiSupervised)).expect("fresh registry");
        r
    }
}

impl std::fmt::Debug for PipelineRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}
