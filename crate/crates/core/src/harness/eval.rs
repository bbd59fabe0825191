use std::path::Path;

use crate::augment::eval_view;
use crate::dataset::{Manifest, Split};
use crate::image::Image;
use crate::metrics::{confusion_with_classes, EvalReport};
use crate::model::{Checkpoint, Network};
use crate::nn::Tensor;
use crate::volume::{decode_png, is_volume_path, load_volume};
use crate::{Error, Result, CLASS_NAMES};

use super::prepare::prepare_volume;
use super::train::{default_augment, load_split, manifest_dir};

pub fn load_network(checkpoint: &Path) -> Result<Network<f32>> {
    Ok(Checkpoint::load(checkpoint)?.restore()?.0)
}

/// Predicts every sample of `split` and summarizes the confusion matrix.
pub fn evaluate_split(net: &Network<f32>, manifest_path: &Path, split: Split) -> Result<EvalReport> {
    let manifest = Manifest::load(manifest_path)?;
    let samples = load_split(&manifest, &manifest_dir(manifest_path), split)?;
    if samples.is_empty() {
        return Err(Error::EmptySplit(split.to_string()));
    }
    let aug = default_augment(net.spec());
    let mut pairs = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(32) {
        let mut data = Vec::new();
        for (im, _) in chunk {
            data.extend_from_slice(&eval_view(im, &aug)?.data);
        }
        let [c, h, w] = net.spec().input;
        let x = Tensor::from_vec(&[chunk.len(), c, h, w], data)?;
        let predicted = net.predict_batch(&x)?;
        pairs.extend(chunk.iter().map(|(_, y)| *y).zip(predicted));
    }
    EvalReport::from_confusion(&confusion_with_classes(&pairs, net.spec().classes)?)
}

/// `nbad eval`: loads the checkpoint, evaluates and optionally writes the
/// report JSON.
pub fn eval(checkpoint: &Path, manifest: &Path, split: Split, report: Option<&Path>) -> Result<EvalReport> {
    let net = load_network(checkpoint)?;
    let r = evaluate_split(&net, manifest, split)?;
    if let Some(p) = report {
        super::write_atomic(p, r.to_json().as_bytes())?;
    }
    Ok(r)
}

/// Prediction for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_id: usize,
    pub class_name: &'static str,
    pub scores: Vec<f64>,
}

impl std::fmt::Display for Prediction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "class: {} {}", self.class_id, self.class_name)?;
        write!(f, "scores:")?;
        for s in &self.scores {
            write!(f, " {s}")?;
        }
        writeln!(f)
    }
}

/// Loads the network input for `path`: a 3-channel PNG at exactly the
/// network's input size, or a volume run through the prepare pipeline.
pub fn load_input(path: &Path, net: &Network<f32>) -> Result<Image> {
    let [c, h, w] = net.spec().input;
    if is_volume_path(path) {
        let v = load_volume(path)?;
        if h != w {
            return Err(Error::BadInput("volume input needs a square network input".into()));
        }
        return Ok(prepare_volume(&v, h)?.0);
    }
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
    let image = decode_png(&bytes).map_err(|e| Error::BadInput(format!("{}: {e}", path.display())))?;
    if (image.channels, image.height, image.width) != (c, h, w) {
        return Err(Error::BadInput(format!(
            "{}: image is {}x{}x{}, the network takes {c}x{h}x{w}",
            path.display(),
            image.channels,
            image.height,
            image.width
        )));
    }
    Ok(image)
}

pub fn predict(checkpoint: &Path, image: &Path) -> Result<Prediction> {
    let net = load_network(checkpoint)?;
    let input = load_input(image, &net)?;
    let (class_id, scores) = net.predict(&input)?;
    Ok(Prediction {
        class_id,
        class_name: CLASS_NAMES[class_id],
        scores,
    })
}
