use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_image, eval_view, AugmentConfig};
use crate::dataset::{Manifest, Split};
use crate::image::Image;
use crate::model::{train_step, Checkpoint, Network, NetworkSpec, Preset};
use crate::nn::{hinge_loss, OptState, Tensor, DEFAULT_MARGIN};
use crate::rng::{self, Stream};
use crate::volume::decode_png;
use crate::{Error, Result};

use super::write_atomic;

const ORDER_KEY: u64 = 0x0D3;
const AUGMENT_KEY: u64 = 0xA06;
const DROPOUT_KEY: u64 = 0xD70;
const EVAL_BATCH: usize = 32;

pub const CURVES_HEADER: &str = "iteration,train_loss,test_loss,test_accuracy";

/// Everything a training run needs. Missing JSON fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub preset: Preset,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub iterations: u64,
    /// Test-split evaluation and checkpoint interval, in iterations.
    pub eval_every: u64,
    pub seed: u64,
    /// `None` picks the preset's default augmentation.
    pub augment: Option<AugmentConfig>,
    pub manifest: PathBuf,
    pub checkpoint: PathBuf,
    pub curves: PathBuf,
    /// Continue from `checkpoint` if it exists.
    pub resume: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            preset: Preset::Canonical,
            learning_rate: 0.001,
            weight_decay: 0.0005,
            momentum: 0.9,
            batch_size: 32,
            iterations: 20_000,
            eval_every: 1000,
            seed: 0,
            augment: None,
            manifest: PathBuf::from("manifest.jsonl"),
            checkpoint: PathBuf::from("model.ckpt"),
            curves: PathBuf::from("curves.csv"),
            resume: false,
        }
    }
}

/// Default augmentation for a network input: the canonical 224 crop from a
/// 256 short side, otherwise a crop the size of the whole image.
pub fn default_augment(spec: &NetworkSpec) -> AugmentConfig {
    let (h, w) = spec.input_size();
    if spec.preset == Preset::Canonical {
        AugmentConfig::default()
    } else {
        AugmentConfig {
            crop_size: (h, w),
            target_short_side: h.min(w),
            ..AugmentConfig::default()
        }
    }
}

impl TrainConfig {
    pub fn load(path: &Path) -> Result<TrainConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        serde_json::from_str(&text).map_err(|e| Error::from(e).at(path))
    }

    pub fn spec(&self) -> NetworkSpec {
        NetworkSpec::from_preset(self.preset)
    }

    pub fn augment_config(&self) -> AugmentConfig {
        self.augment.clone().unwrap_or_else(|| default_augment(&self.spec()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        // zero iterations is a valid no-op run that only writes the initial checkpoint
        if self.iterations > 0 && (self.eval_every == 0 || self.eval_every > self.iterations) {
            return Err(Error::InvalidConfig(format!(
                "eval interval {} must be in 1..={}",
                self.eval_every, self.iterations
            )));
        }
        OptState::<f32>::new(self.learning_rate, self.weight_decay, self.momentum)?;
        let aug = self.augment_config();
        aug.validate()?;
        let (h, w) = self.spec().input_size();
        if aug.crop_size != (h, w) {
            return Err(Error::InvalidConfig(format!(
                "crop {:?} does not match network input {h}x{w}",
                aug.crop_size
            )));
        }
        Ok(())
    }

    /// One-line summary for the run log.
    pub fn describe(&self) -> String {
        format!(
            "preset={} lr={} weight_decay={} momentum={} batch={} iterations={} eval_every={} seed={}",
            self.preset,
            self.learning_rate,
            self.weight_decay,
            self.momentum,
            self.batch_size,
            self.iterations,
            self.eval_every,
            self.seed
        )
    }
}

/// One line of the curves CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub iteration: u64,
    pub train_loss: f32,
    /// `(test_loss, test_accuracy)` at evaluation points.
    pub test: Option<(f64, f64)>,
}

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from(CURVES_HEADER);
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{}", r.iteration, r.train_loss);
        match r.test {
            Some((l, a)) => {
                let _ = writeln!(s, ",{l},{a}");
            }
            None => s.push_str(",,\n"),
        }
    }
    s
}

pub fn parse_curves(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CURVES_HEADER) {
        return Err(Error::MalformedHeader("curves CSV header".into()));
    }
    let bad = |l: &str| Error::MalformedHeader(format!("curves row `{l}`"));
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(bad(l));
            }
            let iteration = f[0].parse().map_err(|_| bad(l))?;
            let train_loss = f[1].parse().map_err(|_| bad(l))?;
            let test = match (f[2], f[3]) {
                ("", "") => None,
                (a, b) => Some((a.parse().map_err(|_| bad(l))?, b.parse().map_err(|_| bad(l))?)),
            };
            Ok(CurveRow {
                iteration,
                train_loss,
                test,
            })
        })
        .collect()
}

/// A decoded sample with its label.
pub type Labeled = (Image, usize);

/// Decodes the PNGs of one split; paths are relative to the manifest.
pub fn load_split(manifest: &Manifest, base: &Path, split: Split) -> Result<Vec<Labeled>> {
    manifest
        .split(split)
        .map(|e| {
            let path = base.join(&e.path);
            let bytes = std::fs::read(&path).map_err(|err| Error::from(err).at(&path))?;
            Ok((decode_png(&bytes).map_err(|err| err.at(&path))?, e.class_id))
        })
        .collect()
}

pub fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Stacks equally sized images into an `N×C×H×W` batch.
pub fn to_batch(images: &[Image]) -> Result<Tensor<f32>> {
    let first = &images[0];
    let mut data = Vec::with_capacity(images.len() * first.data.len());
    for im in images {
        if (im.channels, im.height, im.width) != (first.channels, first.height, first.width) {
            return Err(Error::ShapeMismatch("images in a batch differ in size".into()));
        }
        data.extend_from_slice(&im.data);
    }
    Tensor::from_vec(&[images.len(), first.channels, first.height, first.width], data)
}

/// Eval-mode loss and accuracy over prepared views, in fixed-size chunks.
pub fn evaluate(net: &Network<f32>, views: &[Labeled]) -> Result<(f64, f64)> {
    if views.is_empty() {
        return Err(Error::EmptySplit("test".into()));
    }
    let (mut loss, mut correct) = (0.0f64, 0usize);
    for chunk in views.chunks(EVAL_BATCH) {
        let images: Vec<Image> = chunk.iter().map(|(im, _)| im.clone()).collect();
        let labels: Vec<usize> = chunk.iter().map(|(_, l)| *l).collect();
        let x = to_batch(&images)?;
        let scores = net.scores(&x)?;
        let (l, _) = hinge_loss(&scores, &labels, DEFAULT_MARGIN)?;
        loss += l as f64 * chunk.len() as f64;
        let k = net.spec().classes;
        for (row, &y) in scores.to_f64_vec().chunks(k).zip(&labels) {
            if crate::model::argmax(row) == y {
                correct += 1;
            }
        }
    }
    let n = views.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Infinite seeded shuffle: every epoch is a fresh permutation keyed by
/// `(seed, epoch)`.
struct Order {
    n: usize,
    seed: u64,
    epoch: Option<u64>,
    perm: Vec<usize>,
}

impl Order {
    fn new(n: usize, seed: u64) -> Order {
        Order {
            n,
            seed,
            epoch: None,
            perm: Vec::new(),
        }
    }

    fn at(&mut self, position: u64) -> usize {
        let epoch = position / self.n as u64;
        if self.epoch != Some(epoch) {
            self.perm = (0..self.n).collect();
            self.perm.shuffle(&mut rng::stream(self.seed, &[ORDER_KEY, epoch]));
            self.epoch = Some(epoch);
        }
        self.perm[(position % self.n as u64) as usize]
    }
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub rows: Vec<CurveRow>,
    pub start_iteration: u64,
    pub final_iteration: u64,
}

struct RunState {
    net: Network<f32>,
    opt: OptState<f32>,
    dropout_rng: Stream,
    iteration: u64,
    rows: Vec<CurveRow>,
}

fn fresh_state(cfg: &TrainConfig, spec: &NetworkSpec) -> Result<RunState> {
    Ok(RunState {
        net: Network::build(spec, cfg.seed)?,
        opt: OptState::new(cfg.learning_rate, cfg.weight_decay, cfg.momentum)?,
        dropout_rng: rng::stream(cfg.seed, &[DROPOUT_KEY]),
        iteration: 0,
        rows: Vec::new(),
    })
}

fn resumed_state(cfg: &TrainConfig, spec: &NetworkSpec) -> Result<RunState> {
    let ckpt = Checkpoint::load(&cfg.checkpoint)?;
    if &ckpt.spec != spec {
        return Err(Error::InvalidConfig(
            "checkpoint was trained with a different network".into(),
        ));
    }
    if ckpt.iteration > cfg.iterations {
        return Err(Error::InvalidConfig(format!(
            "checkpoint is at iteration {}, past the requested {}",
            ckpt.iteration, cfg.iterations
        )));
    }
    let (net, velocities, dropout_rng) = ckpt.restore()?;
    let mut opt = OptState::new(cfg.learning_rate, cfg.weight_decay, cfg.momentum)?;
    opt.velocities = velocities;
    let rows = match std::fs::read_to_string(&cfg.curves) {
        Ok(text) => parse_curves(&text)
            .map_err(|e| e.at(&cfg.curves))?
            .into_iter()
            .filter(|r| r.iteration <= ckpt.iteration)
            .collect(),
        Err(_) => Vec::new(),
    };
    Ok(RunState {
        net,
        opt,
        dropout_rng,
        iteration: ckpt.iteration,
        rows,
    })
}

fn persist(cfg: &TrainConfig, st: &RunState) -> Result<()> {
    Checkpoint::capture(&st.net, &st.opt, &st.dropout_rng, st.iteration).save(&cfg.checkpoint)?;
    write_atomic(&cfg.curves, curves_csv(&st.rows).as_bytes())
}

/// Runs (or resumes) training, evaluating on the test split and writing the
/// checkpoint and curves every `eval_every` iterations and at the end.
pub fn train(cfg: &TrainConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let spec = cfg.spec();
    let aug = cfg.augment_config();
    let manifest = Manifest::load(&cfg.manifest)?;
    let base = manifest_dir(&cfg.manifest);
    let train_set = load_split(&manifest, &base, Split::Train)?;
    let test_set = load_split(&manifest, &base, Split::Test)?;
    if train_set.is_empty() {
        return Err(Error::EmptySplit("train".into()));
    }
    if cfg.iterations > 0 && test_set.is_empty() {
        return Err(Error::EmptySplit("test".into()));
    }
    let test_views = test_set
        .iter()
        .map(|(im, l)| Ok((eval_view(im, &aug)?, *l)))
        .collect::<Result<Vec<_>>>()?;

    let mut st = if cfg.resume && cfg.checkpoint.exists() {
        resumed_state(cfg, &spec)?
    } else {
        fresh_state(cfg, &spec)?
    };
    let start = st.iteration;
    info!("{}", cfg.describe());
    info!(
        "{} train / {} test samples, starting at iteration {start}",
        train_set.len(),
        test_set.len()
    );

    let mut order = Order::new(train_set.len(), cfg.seed);
    let b = cfg.batch_size as u64;
    for t in start..cfg.iterations {
        let mut images = Vec::with_capacity(cfg.batch_size);
        let mut labels = Vec::with_capacity(cfg.batch_size);
        for j in 0..b {
            let (im, label) = &train_set[order.at(t * b + j)];
            let mut r = rng::stream(cfg.seed, &[AUGMENT_KEY, t, j]);
            images.push(augment_image(im, &aug, &mut r)?);
            labels.push(*label);
        }
        let x = to_batch(&images)?;
        let loss = match train_step(&mut st.net, &x, &labels, &mut st.opt, &mut st.dropout_rng) {
            Ok(l) => l,
            Err(Error::NonFiniteLoss { detail, .. }) => {
                return Err(Error::NonFiniteLoss {
                    iteration: t + 1,
                    detail: format!("{detail}; last checkpoint kept at {}", cfg.checkpoint.display()),
                })
            }
            Err(e) => return Err(e),
        };
        st.iteration = t + 1;
        let mut row = CurveRow {
            iteration: st.iteration,
            train_loss: loss,
            test: None,
        };
        let at_eval = st.iteration % cfg.eval_every == 0 || st.iteration == cfg.iterations;
        if at_eval {
            let (test_loss, acc) = evaluate(&st.net, &test_views)?;
            row.test = Some((test_loss, acc));
            info!(
                "iteration {}: train loss {loss:.4}, test loss {test_loss:.4}, test accuracy {acc:.4}",
                st.iteration
            );
        }
        st.rows.push(row);
        if at_eval {
            persist(cfg, &st)?;
        }
    }
    persist(cfg, &st)?;
    Ok(TrainSummary {
        rows: st.rows,
        start_iteration: start,
        final_iteration: st.iteration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.learning_rate, c.weight_decay, c.momentum), (0.001, 0.0005, 0.9));
        assert!(c.describe().contains("lr=0.001 weight_decay=0.0005"));
        c.validate().unwrap();
    }

    #[test]
    fn json_overrides_only_given_fields() {
        let c: TrainConfig = serde_json::from_str(r#"{"preset":"desk","iterations":10,"eval_every":5}"#).unwrap();
        assert_eq!(c.preset, Preset::Desk);
        assert_eq!(c.batch_size, 32);
        c.validate().unwrap();
        assert_eq!(c.augment_config().crop_size, (64, 64));
        assert!(serde_json::from_str::<TrainConfig>(r#"{"lr":1}"#).is_err());
    }

    #[test]
    fn bad_intervals() {
        let c = TrainConfig {
            iterations: 10,
            eval_every: 11,
            ..TrainConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn curves_roundtrip() {
        let rows = vec![
            CurveRow {
                iteration: 1,
                train_loss: 3.5,
                test: None,
            },
            CurveRow {
                iteration: 2,
                train_loss: 0.25,
                test: Some((1.125, 0.8)),
            },
        ];
        let text = curves_csv(&rows);
        assert_eq!(
            text,
            "iteration,train_loss,test_loss,test_accuracy\n1,3.5,,\n2,0.25,1.125,0.8\n"
        );
        assert_eq!(parse_curves(&text).unwrap(), rows);
    }

    #[test]
    fn order_covers_each_epoch() {
        let mut o = Order::new(7, 3);
        let mut first: Vec<_> = (0..7).map(|p| o.at(p)).collect();
        let mut second: Vec<_> = (7..14).map(|p| o.at(p)).collect();
        assert_ne!(first, second);
        first.sort();
        second.sort();
        assert_eq!(first, (0..7).collect::<Vec<_>>());
        assert_eq!(second, first);
    }
}
