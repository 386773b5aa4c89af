//! The 4-step weak-supervision workflow and its configuration.
//!
//! 1. train the configured backend on the labeled train split;
//! 2. pseudo-label the unlabeled corpus with it;
//! 3. train a fresh backend on the pseudo-labels only;
//! 4. re-train on the labeled split, warm-started from step 3 through an
//!    anchor penalty.
//!
//! Stages run sequentially; every run writes the gold standard, split,
//! pseudo-labels, stage artifacts, final predictions, an evaluation report,
//! and a run manifest into the output directory. With a fixed seed all
//! emitted files except the manifest (which carries timings) are
//! byte-identical across runs.

mod eval;
mod report;

pub use eval::{
    evaluate_run, human_story_agreement, quintile_assignment, quintile_sizes, story_correlation_analysis,
    DimensionEval, EvaluationReport, StoryCorrelationRow, StoryCorrelations, REPORT_SCHEMA_VERSION,
};
pub use report::{render_report, sha256_hex, validate_report, RunManifest, StageRecord};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{
    apply_manifest, ingest_labeled, ingest_unlabeled_jsonl, load_manifest, stratified_split,
    Author, Partition, PartitionName, SplitTargets, Story, StoryId, UnlabeledCorpus,
};
use crate::error::{Error, Result};
use crate::fusion::{export_signals, fuse_corpus, EweConfig, TrajectorySignal};
use crate::mapping::{LabelMap, VadLexicon};
use crate::metrics::ccc;
use crate::predict::{
    lexicon_predict_texts, predict_linear_texts, sentence_features, train_linear,
    train_linear_anchored, FeatureConfig, LinearModel, PredictionSet, WindowSpec,
};

/// Predictor backend the pipeline trains and runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Lexicon,
    Linear,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lexicon" => Ok(Backend::Lexicon),
            "linear" => Ok(Backend::Linear),
            _ => Err(Error::Config(format!(
                "unknown backend '{s}' (expected 'lexicon' or 'linear')"
            ))),
        }
    }
}

/// Everything a pipeline run needs; see the config-file grammar in
/// [`parse_config`].
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub labeled_corpus: PathBuf,
    pub unlabeled_corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub label_table: Option<PathBuf>,
    pub backend: Backend,
    pub context_size: usize,
    pub max_tokens: usize,
    pub l2_grid: Vec<f64>,
    pub half_life_grid: Vec<f64>,
    pub anchor: f64,
    pub targets: Option<SplitTargets>,
    pub manifest: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub ewe: EweConfig,
    pub exclude_author: Option<Author>,
}

impl PipelineConfig {
    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec::new(self.context_size, self.max_tokens)
    }

    /// JSON echo of the configuration. The digest variant leaves out the
    /// output directory so relocated runs stay comparable.
    pub fn echo(&self, include_out_dir: bool) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("labeled_corpus".into(), json!(self.labeled_corpus));
        map.insert("unlabeled_corpus".into(), json!(self.unlabeled_corpus));
        map.insert("lexicon".into(), json!(self.lexicon));
        map.insert("label_table".into(), json!(self.label_table));
        map.insert("backend".into(), serde_json::to_value(self.backend).unwrap());
        map.insert("context_size".into(), json!(self.context_size));
        map.insert("max_tokens".into(), json!(self.max_tokens));
        map.insert("l2".into(), json!(self.l2_grid));
        map.insert("half_life".into(), json!(self.half_life_grid));
        map.insert("anchor".into(), json!(self.anchor));
        map.insert(
            "targets".into(),
            match self.targets {
                Some(t) => json!({"train": t.train, "dev": t.dev, "test": t.test}),
                None => serde_json::Value::Null,
            },
        );
        map.insert("manifest".into(), json!(self.manifest));
        map.insert("seed".into(), json!(self.seed));
        if include_out_dir {
            map.insert("out_dir".into(), json!(self.out_dir));
        }
        map.insert("ewe_weight".into(), serde_json::to_value(self.ewe.metric).unwrap());
        map.insert("ewe_ref".into(), serde_json::to_value(self.ewe.reference).unwrap());
        map.insert(
            "exclude_author".into(),
            match self.exclude_author {
                Some(a) => json!(a.as_str()),
                None => serde_json::Value::Null,
            },
        );
        serde_json::Value::Object(map)
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.echo(false).to_string().as_bytes())
    }
}

fn parse_grid(value: &str, key: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{v}' in '{key}'")))
        })
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        return Err(Error::Config(format!("'{key}' needs at least one value")));
    }
    Ok(grid)
}

/// Parse the flat `key = value` config format. `#` starts a comment, blank
/// lines are skipped, unknown and duplicate keys are errors, and relative
/// paths resolve against the config file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |v: &str| -> PathBuf {
        let p = PathBuf::from(v);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };

    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut labeled_corpus = None;
    let mut unlabeled_corpus = None;
    let mut lexicon = None;
    let mut label_table = None;
    let mut backend = None;
    let mut context_size = 2usize;
    let mut max_tokens = 512usize;
    let mut l2_grid = vec![1.0];
    let mut half_life_grid = vec![0.0];
    let mut anchor = 1.0;
    let mut train = None;
    let mut dev = None;
    let mut test = None;
    let mut manifest = None;
    let mut seed = 0u64;
    let mut out_dir = None;
    let mut ewe = EweConfig::default();
    let mut exclude_author = None;

    for (i, raw) in content.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{}:{lineno}: expected 'key = value'", path.display()))
        })?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!(
                "{}:{lineno}: duplicate key '{key}'",
                path.display()
            )));
        }
        let bad_num = |what: &str| Error::Config(format!("{}:{lineno}: bad {what} '{value}'", path.display()));
        match key {
            "labeled_corpus" => labeled_corpus = Some(resolve(value)),
            "unlabeled_corpus" => unlabeled_corpus = Some(resolve(value)),
            "lexicon" => lexicon = Some(resolve(value)),
            "label_table" => label_table = Some(resolve(value)),
            "backend" => backend = Some(value.parse::<Backend>()?),
            "context_size" => context_size = value.parse().map_err(|_| bad_num("context_size"))?,
            "max_tokens" => max_tokens = value.parse().map_err(|_| bad_num("max_tokens"))?,
            "l2" => l2_grid = parse_grid(value, "l2")?,
            "half_life" => half_life_grid = parse_grid(value, "half_life")?,
            "anchor" => anchor = value.parse().map_err(|_| bad_num("anchor"))?,
            "train" => train = Some(value.parse().map_err(|_| bad_num("train"))?),
            "dev" => dev = Some(value.parse().map_err(|_| bad_num("dev"))?),
            "test" => test = Some(value.parse().map_err(|_| bad_num("test"))?),
            "manifest" => manifest = Some(resolve(value)),
            "seed" => seed = value.parse().map_err(|_| bad_num("seed"))?,
            "out_dir" => out_dir = Some(resolve(value)),
            "ewe_weight" => ewe.metric = value.parse()?,
            "ewe_ref" => ewe.reference = value.parse()?,
            "exclude_author" => exclude_author = Some(Author::parse(value)),
            other => {
                return Err(Error::Config(format!(
                    "{}:{lineno}: unknown key '{other}'",
                    path.display()
                )))
            }
        }
    }

    let labeled_corpus = labeled_corpus
        .ok_or_else(|| Error::Config("missing required key 'labeled_corpus'".into()))?;
    let backend = backend.ok_or_else(|| Error::Config("missing required key 'backend'".into()))?;
    let targets = match (train, dev, test) {
        (Some(train), Some(dev), Some(test)) => Some(SplitTargets { train, dev, test }),
        (None, None, None) => None,
        _ => {
            return Err(Error::Config(
                "split targets need all three of 'train', 'dev', 'test'".into(),
            ))
        }
    };
    if targets.is_none() && manifest.is_none() {
        return Err(Error::Config(
            "either split targets or a manifest is required".into(),
        ));
    }
    Ok(PipelineConfig {
        labeled_corpus,
        unlabeled_corpus,
        lexicon,
        label_table,
        backend,
        context_size,
        max_tokens,
        l2_grid,
        half_life_grid,
        anchor,
        targets,
        manifest,
        seed,
        out_dir: out_dir.unwrap_or_else(|| base.join("out")),
        ewe,
        exclude_author,
    })
}

/// A trained stage artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelArtifact {
    Lexicon { half_life: f64 },
    Linear { model: LinearModel },
}

impl ModelArtifact {
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("artifact serializes"))
    }

    pub fn predict_texts(
        &self,
        story_id: &StoryId,
        texts: &[&str],
        window: &WindowSpec,
        lexicon: &VadLexicon,
    ) -> Result<TrajectorySignal> {
        match self {
            ModelArtifact::Lexicon { half_life } => {
                lexicon_predict_texts(story_id, texts, lexicon, *half_life)
            }
            ModelArtifact::Linear { model } => {
                predict_linear_texts(model, story_id, texts, window, lexicon)
            }
        }
    }
}

/// One stage's output: the artifact, its digest, the digest it was
/// warm-started from (stage 4), and the dev selection score.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub artifact: ModelArtifact,
    pub digest: String,
    pub input_digest: Option<String>,
    pub dev_score: Option<f64>,
}

impl StageOutcome {
    fn new(artifact: ModelArtifact, dev_score: Option<f64>, input_digest: Option<String>) -> StageOutcome {
        let digest = artifact.digest();
        StageOutcome {
            artifact,
            digest,
            input_digest,
            dev_score,
        }
    }
}

/// The unlabeled corpus plus its pseudo-label predictions.
#[derive(Debug, Clone)]
pub struct PseudoLabeledCorpus {
    pub corpus: UnlabeledCorpus,
    pub predictions: PredictionSet,
}

impl PseudoLabeledCorpus {
    pub fn is_empty(&self) -> bool {
        self.corpus.documents.is_empty()
    }

    /// Every document fully covered, one VA point per sentence.
    pub fn validate(&self) -> Result<()> {
        for doc in &self.corpus.documents {
            let id = StoryId::new(doc.doc_id.clone());
            let Some(signal) = self.predictions.signals.get(&id) else {
                return Err(Error::CoverageGap {
                    story: doc.doc_id.clone(),
                    index: 0,
                });
            };
            if signal.len() != doc.sentences.len() {
                return Err(Error::CoverageGap {
                    story: doc.doc_id.clone(),
                    index: signal.len().min(doc.sentences.len()),
                });
            }
        }
        Ok(())
    }
}

/// Prepared pipeline state: corpus, gold standard, split, and resources.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub table: LabelMap,
    pub lexicon: VadLexicon,
    pub stories: Vec<Story>,
    pub gold: BTreeMap<StoryId, TrajectorySignal>,
    pub partitions: Vec<Partition>,
    /// train/dev after the optional author exclusion
    pub train_ids: BTreeSet<StoryId>,
    pub dev_ids: BTreeSet<StoryId>,
    pub warnings: Vec<String>,
}

impl Pipeline {
    /// Ingest, fuse the gold standard, and split.
    pub fn prepare(config: PipelineConfig) -> Result<Pipeline> {
        let table = match &config.label_table {
            Some(path) => LabelMap::from_tsv_path(path)?,
            None => LabelMap::default(),
        };
        let mut warnings = Vec::new();
        let lexicon = match &config.lexicon {
            Some(path) => {
                let load = crate::mapping::load_lexicon(path)?;
                if load.duplicate_warnings > 0 {
                    warnings.push(format!(
                        "lexicon: {} duplicate tokens (last value wins)",
                        load.duplicate_warnings
                    ));
                }
                if load.skipped_multiword > 0 {
                    warnings.push(format!(
                        "lexicon: {} multi-word entries skipped",
                        load.skipped_multiword
                    ));
                }
                load.lexicon
            }
            None => {
                warnings.push("no lexicon supplied; lexicon features fall back to the neutral anchor".into());
                VadLexicon::empty("none")
            }
        };
        let stories = ingest_labeled(&config.labeled_corpus)?;
        let fused = fuse_corpus(&stories, &table, &config.ewe)?;
        let gold = fused
            .into_iter()
            .map(|(id, f)| (id, f.gold))
            .collect::<BTreeMap<_, _>>();
        let partitions = match (&config.manifest, config.targets) {
            (Some(path), _) => apply_manifest(&stories, &load_manifest(path)?)?,
            (None, Some(targets)) => stratified_split(&stories, targets, config.seed)?,
            (None, None) => {
                return Err(Error::Config(
                    "either split targets or a manifest is required".into(),
                ))
            }
        };
        let keep = |ids: &BTreeSet<StoryId>| -> BTreeSet<StoryId> {
            let Some(excluded) = config.exclude_author else {
                return ids.clone();
            };
            let by_id: BTreeMap<&StoryId, Author> =
                stories.iter().map(|s| (&s.story_id, s.author)).collect();
            ids.iter()
                .filter(|id| by_id.get(id) != Some(&excluded))
                .cloned()
                .collect()
        };
        let train_ids = keep(&partitions[0].story_ids);
        let dev_ids = keep(&partitions[1].story_ids);
        Ok(Pipeline {
            config,
            table,
            lexicon,
            stories,
            gold,
            partitions,
            train_ids,
            dev_ids,
            warnings,
        })
    }

    fn feature_config(&self) -> FeatureConfig {
        FeatureConfig::new(self.config.window_spec())
    }

    fn story(&self, id: &StoryId) -> Result<&Story> {
        self.stories
            .iter()
            .find(|s| s.story_id == *id)
            .ok_or_else(|| Error::UnknownStory { story: id.to_string() })
    }

    /// Mean of the valence and arousal CCCs over the concatenated dev split.
    pub fn dev_score(&self, artifact: &ModelArtifact) -> Result<f64> {
        if self.dev_ids.is_empty() {
            return Err(Error::EmptyPartition("dev".to_string()));
        }
        let window = self.config.window_spec();
        let mut gold_v = Vec::new();
        let mut gold_a = Vec::new();
        let mut pred_v = Vec::new();
        let mut pred_a = Vec::new();
        for id in &self.dev_ids {
            let story = self.story(id)?;
            let gold = self.gold.get(id).ok_or_else(|| Error::UnknownStory {
                story: id.to_string(),
            })?;
            let pred = artifact.predict_texts(id, &story.texts(), &window, &self.lexicon)?;
            gold_v.extend_from_slice(&gold.valence);
            gold_a.extend_from_slice(&gold.arousal);
            pred_v.extend_from_slice(&pred.valence);
            pred_a.extend_from_slice(&pred.arousal);
        }
        Ok((ccc(&gold_v, &pred_v)? + ccc(&gold_a, &pred_a)?) / 2.0)
    }

    /// Labeled training rows: features and gold targets over the train split.
    fn train_rows(&self) -> Result<(Vec<crate::predict::SentenceFeatures>, Vec<(f64, f64)>)> {
        let cfg = self.feature_config();
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for id in &self.train_ids {
            let story = self.story(id)?;
            let gold = self.gold.get(id).ok_or_else(|| Error::UnknownStory {
                story: id.to_string(),
            })?;
            rows.extend(sentence_features(id, &story.texts(), &cfg, &self.lexicon));
            targets.extend(gold.valence.iter().zip(&gold.arousal).map(|(&v, &a)| (v, a)));
        }
        Ok((rows, targets))
    }

    fn select_lexicon_backend(&self) -> Result<StageOutcome> {
        let mut best: Option<(f64, f64)> = None; // (score, half_life)
        for &h in &self.config.half_life_grid {
            let score = self.dev_score(&ModelArtifact::Lexicon { half_life: h })?;
            if best.map(|(s, _)| score > s).unwrap_or(true) {
                best = Some((score, h));
            }
        }
        let (score, half_life) = best.expect("grid is non-empty");
        Ok(StageOutcome::new(
            ModelArtifact::Lexicon { half_life },
            Some(score),
            None,
        ))
    }

    fn select_linear(
        &self,
        rows: &[crate::predict::SentenceFeatures],
        targets: &[(f64, f64)],
        anchor: Option<(f64, &LinearModel)>,
    ) -> Result<StageOutcome> {
        let cfg = self.feature_config();
        let mut best: Option<(f64, ModelArtifact)> = None;
        for &l2 in &self.config.l2_grid {
            let model = match anchor {
                Some((strength, prev)) => {
                    train_linear_anchored(rows, targets, &cfg, l2, strength, prev)?
                }
                None => train_linear(rows, targets, &cfg, l2)?,
            };
            let artifact = ModelArtifact::Linear { model };
            let score = self.dev_score(&artifact)?;
            if best.as_ref().map(|(s, _)| score > *s).unwrap_or(true) {
                best = Some((score, artifact));
            }
        }
        let (score, artifact) = best.expect("grid is non-empty");
        Ok(StageOutcome::new(artifact, Some(score), None))
    }

    /// Stage 1: train on the labeled train split, selecting by mean dev CCC.
    pub fn stage1_train(&self) -> Result<StageOutcome> {
        if self.train_ids.is_empty() {
            return Err(Error::EmptyPartition("train".to_string()));
        }
        match self.config.backend {
            Backend::Lexicon => self.select_lexicon_backend(),
            Backend::Linear => {
                let (rows, targets) = self.train_rows()?;
                self.select_linear(&rows, &targets, None)
            }
        }
    }

    /// Stage 2: predict every unlabeled sentence with the stage-1 model.
    /// An empty unlabeled corpus yields an empty result plus a warning.
    pub fn stage2_pseudolabel(
        &mut self,
        artifact: &ModelArtifact,
    ) -> Result<PseudoLabeledCorpus> {
        let Some(path) = &self.config.unlabeled_corpus else {
            return Err(Error::Config(
                "pipeline stage 2 needs 'unlabeled_corpus'".into(),
            ));
        };
        let corpus = ingest_unlabeled_jsonl(path)?;
        if corpus.documents.is_empty() {
            self.warnings
                .push("unlabeled corpus is empty; pseudo-labeled corpus is empty".into());
        }
        let window = self.config.window_spec();
        let mut predictions = PredictionSet::new("stage2-pseudo");
        for doc in &corpus.documents {
            let id = StoryId::new(doc.doc_id.clone());
            let texts: Vec<&str> = doc.sentences.iter().map(|s| s.as_str()).collect();
            let signal = artifact
                .predict_texts(&id, &texts, &window, &self.lexicon)
                .map_err(|e| Error::InvalidValue {
                    what: "pseudo-label prediction",
                    msg: format!("document '{}': {e}", doc.doc_id),
                })?;
            predictions.insert(signal);
        }
        let pseudo = PseudoLabeledCorpus {
            corpus,
            predictions,
        };
        pseudo.validate()?;
        Ok(pseudo)
    }

    /// Stage 3: train a fresh backend on pseudo-labels only.
    pub fn stage3_train_on_pseudo(&self, pseudo: &PseudoLabeledCorpus) -> Result<StageOutcome> {
        if pseudo.is_empty() {
            return Err(Error::EmptyInput("pseudo-labeled corpus is empty"));
        }
        match self.config.backend {
            Backend::Lexicon => self.select_lexicon_backend(),
            Backend::Linear => {
                let cfg = self.feature_config();
                let mut rows = Vec::new();
                let mut targets = Vec::new();
                for doc in &pseudo.corpus.documents {
                    let id = StoryId::new(doc.doc_id.clone());
                    let texts: Vec<&str> = doc.sentences.iter().map(|s| s.as_str()).collect();
                    let labels = &pseudo.predictions.signals[&id];
                    rows.extend(sentence_features(&id, &texts, &cfg, &self.lexicon));
                    targets.extend(labels.valence.iter().zip(&labels.arousal).map(|(&v, &a)| (v, a)));
                }
                self.select_linear(&rows, &targets, None)
            }
        }
    }

    /// Stage 4: continue on the labeled train split, anchored to the stage-3
    /// model. For the lexicon backend this is a pass-through.
    pub fn stage4_finetune(&self, stage3: &StageOutcome) -> Result<StageOutcome> {
        if self.train_ids.is_empty() {
            return Err(Error::EmptyPartition("train".to_string()));
        }
        match (&self.config.backend, &stage3.artifact) {
            (Backend::Lexicon, artifact) => {
                let mut outcome = StageOutcome::new(
                    artifact.clone(),
                    stage3.dev_score,
                    Some(stage3.digest.clone()),
                );
                outcome.dev_score = Some(self.dev_score(artifact)?);
                Ok(outcome)
            }
            (Backend::Linear, ModelArtifact::Linear { model }) => {
                let (rows, targets) = self.train_rows()?;
                let mut outcome =
                    self.select_linear(&rows, &targets, Some((self.config.anchor, model)))?;
                outcome.input_digest = Some(stage3.digest.clone());
                Ok(outcome)
            }
            (Backend::Linear, _) => Err(Error::SpecMismatch(
                "stage-4 warm start needs a linear stage-3 artifact".into(),
            )),
        }
    }

    /// Predictions for a set of stories with the given artifact.
    pub fn predict_stories(
        &self,
        artifact: &ModelArtifact,
        ids: impl IntoIterator<Item = StoryId>,
        run_id: &str,
    ) -> Result<PredictionSet> {
        let window = self.config.window_spec();
        let mut set = PredictionSet::new(run_id);
        for id in ids {
            let story = self.story(&id)?;
            let signal = artifact.predict_texts(&id, &story.texts(), &window, &self.lexicon)?;
            set.insert(signal);
        }
        Ok(set)
    }
}

/// Everything a finished run produced.
pub struct RunSummary {
    pub run_id: String,
    pub out_dir: PathBuf,
    pub stage1: StageOutcome,
    pub stage3: StageOutcome,
    pub stage4: StageOutcome,
    pub report: EvaluationReport,
    pub warnings: Vec<String>,
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

/// Drive all four stages, evaluate the final model on dev and test, and
/// write every output file.
pub fn run_pipeline(config: PipelineConfig) -> Result<RunSummary> {
    let out_dir = config.out_dir.clone();
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let config_digest = config.digest();
    let run_id = format!("run-{}", &config_digest[..12]);

    let mut pipeline = Pipeline::prepare(config)?;
    export_signals(pipeline.gold.values(), out_dir.join("gold.tsv"), None)?;
    crate::corpus::export_manifest(&pipeline.partitions, out_dir.join("split.tsv"))?;

    let mut stages: Vec<StageRecord> = Vec::new();
    let record = |name: &str, outcome: &StageOutcome, started: Instant| StageRecord {
        name: name.to_string(),
        digest: outcome.digest.clone(),
        input_digest: outcome.input_digest.clone(),
        dev_score: outcome.dev_score,
        duration_ms: started.elapsed().as_millis(),
    };

    let t = Instant::now();
    let stage1 = pipeline.stage1_train()?;
    stages.push(record("stage1_train", &stage1, t));
    write_file(
        &out_dir.join("stage1_model.json"),
        &serde_json::to_string(&stage1.artifact).expect("artifact serializes"),
    )?;

    let t = Instant::now();
    let pseudo = pipeline.stage2_pseudolabel(&stage1.artifact)?;
    stages.push(StageRecord {
        name: "stage2_pseudolabel".to_string(),
        digest: sha256_hex(
            crate::fusion::render_signals(pseudo.predictions.signals.values(), Some("stage2-pseudo"))
                .as_bytes(),
        ),
        input_digest: Some(stage1.digest.clone()),
        dev_score: None,
        duration_ms: t.elapsed().as_millis(),
    });
    pseudo.predictions.export(out_dir.join("pseudo_labels.tsv"))?;

    let t = Instant::now();
    let stage3 = pipeline.stage3_train_on_pseudo(&pseudo)?;
    stages.push(record("stage3_train_on_pseudo", &stage3, t));
    write_file(
        &out_dir.join("stage3_model.json"),
        &serde_json::to_string(&stage3.artifact).expect("artifact serializes"),
    )?;

    let t = Instant::now();
    let stage4 = pipeline.stage4_finetune(&stage3)?;
    stages.push(record("stage4_finetune", &stage4, t));
    write_file(
        &out_dir.join("stage4_model.json"),
        &serde_json::to_string(&stage4.artifact).expect("artifact serializes"),
    )?;

    // final predictions over dev + test, evaluated at every granularity
    let eval_ids: Vec<StoryId> = pipeline
        .dev_ids
        .iter()
        .chain(pipeline.partitions[2].story_ids.iter())
        .cloned()
        .collect();
    let preds = pipeline.predict_stories(&stage4.artifact, eval_ids, &run_id)?;
    preds.export(out_dir.join("predictions.tsv"))?;

    let eval_partitions = vec![
        Partition {
            name: PartitionName::Dev,
            story_ids: pipeline.dev_ids.clone(),
        },
        Partition {
            name: PartitionName::Test,
            story_ids: pipeline.partitions[2].story_ids.clone(),
        },
    ];
    let authors: BTreeMap<StoryId, Author> = pipeline
        .stories
        .iter()
        .map(|s| (s.story_id.clone(), s.author))
        .collect();
    let report = evaluate_run(
        &preds,
        &pipeline.gold,
        &eval_partitions,
        &authors,
        &run_id,
        &config_digest,
    )?;
    write_file(&out_dir.join("report.json"), &render_report(&report)?)?;

    let manifest = RunManifest {
        schema_version: 1,
        run_id: run_id.clone(),
        config_digest: config_digest.clone(),
        config: pipeline.config.echo(true),
        stages,
        warnings: pipeline.warnings.clone(),
    };
    write_file(
        &out_dir.join("run_manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;

    Ok(RunSummary {
        run_id,
        out_dir,
        stage1,
        stage3,
        stage4,
        report,
        warnings: pipeline.warnings,
    })
}
