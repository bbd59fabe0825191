use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::nn::{conv_out_extent, PoolMode};
use crate::{Error, Result, NUM_CLASSES};

/// One layer of the sequential stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LayerSpec {
    Conv {
        filters: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    Pool {
        mode: PoolMode,
        window: usize,
        stride: usize,
    },
    Affine {
        width: usize,
    },
    Relu,
    Dropout {
        p: f64,
    },
    Classifier {
        classes: usize,
    },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Pool { .. } => "pool",
            LayerSpec::Affine { .. } => "affine",
            LayerSpec::Relu => "relu",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Classifier { .. } => "classifier",
        }
    }

    fn is_conv(&self) -> bool {
        matches!(self, LayerSpec::Conv { .. })
    }

    fn is_affine(&self) -> bool {
        matches!(self, LayerSpec::Affine { .. })
    }

    fn is_pool(&self, which: PoolMode) -> bool {
        matches!(self, LayerSpec::Pool { mode, .. } if *mode == which)
    }
}

/// Named network sizes. `Desk` shrinks every width so the net trains on a
/// laptop CPU; it is exempt from the hidden-width clause only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Canonical,
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Preset> {
        match s {
            "canonical" => Ok(Preset::Canonical),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Canonical => "canonical",
            Preset::Desk => "desk",
        })
    }
}

pub const CANONICAL_HIDDEN_WIDTH: usize = 4096;
pub const DROPOUT_P: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub preset: Preset,
    /// `[channels, height, width]`.
    pub input: [usize; 3],
    pub classes: usize,
    pub layers: Vec<LayerSpec>,
}

/// The structural rules every network must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// Positive sizes, probabilities in [0, 1), three input channels.
    Parameters,
    /// Exactly seven convolutions.
    SevenConv,
    /// Exactly three hidden fully connected layers.
    ThreeFc,
    /// Every hidden fully connected layer is 4096 wide (canonical only).
    HiddenWidth,
    /// Each convolution and hidden FC layer is followed by a ReLU.
    Activations,
    /// A single average pool, directly after the third convolution's ReLU.
    AvgPoolAfterConv3,
    /// Exactly two max pools, directly after the fifth and sixth convolutions' ReLUs.
    MaxPoolsAfterConv5Conv6,
    /// A single dropout, directly after the last FC layer's ReLU.
    DropoutAfterLastFc,
    /// The stack ends in a single five-way classifier.
    FiveWayClassifier,
    /// Layer shapes chain from the input to the classifier.
    ShapesChain,
}

impl Clause {
    pub const ALL: [Clause; 10] = [
        Clause::Parameters,
        Clause::SevenConv,
        Clause::ThreeFc,
        Clause::HiddenWidth,
        Clause::Activations,
        Clause::AvgPoolAfterConv3,
        Clause::MaxPoolsAfterConv5Conv6,
        Clause::DropoutAfterLastFc,
        Clause::FiveWayClassifier,
        Clause::ShapesChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Clause::Parameters => "parameters",
            Clause::SevenConv => "seven-conv",
            Clause::ThreeFc => "three-fc",
            Clause::HiddenWidth => "hidden-width",
            Clause::Activations => "activations",
            Clause::AvgPoolAfterConv3 => "avgpool-after-conv3",
            Clause::MaxPoolsAfterConv5Conv6 => "maxpools-after-conv5-conv6",
            Clause::DropoutAfterLastFc => "dropout-after-last-fc",
            Clause::FiveWayClassifier => "five-way-classifier",
            Clause::ShapesChain => "shapes-chain",
        }
    }

    /// `Ok` when `spec` satisfies the clause, otherwise what is wrong.
    pub fn check(self, spec: &NetworkSpec) -> std::result::Result<(), String> {
        let layers = &spec.layers;
        let convs = positions(layers, LayerSpec::is_conv);
        let fcs = positions(layers, LayerSpec::is_affine);
        match self {
            Clause::Parameters => check_parameters(spec),
            Clause::SevenConv => expect_count("conv", convs.len(), 7),
            Clause::ThreeFc => expect_count("affine", fcs.len(), 3),
            Clause::HiddenWidth => {
                if spec.preset == Preset::Desk {
                    return Ok(());
                }
                for &i in &fcs {
                    if let LayerSpec::Affine { width } = layers[i] {
                        if width != CANONICAL_HIDDEN_WIDTH {
                            return Err(format!("layer {i} has width {width}"));
                        }
                    }
                }
                Ok(())
            }
            Clause::Activations => {
                for &i in convs.iter().chain(&fcs) {
                    if layers.get(i + 1) != Some(&LayerSpec::Relu) {
                        return Err(format!("layer {i} ({}) is not followed by relu", layers[i].kind()));
                    }
                }
                Ok(())
            }
            Clause::AvgPoolAfterConv3 => {
                let avg = positions(layers, |l| l.is_pool(PoolMode::Avg));
                expect_count("avg pool", avg.len(), 1)?;
                directly_after_activation(layers, &convs, 2, avg[0], "conv3")
            }
            Clause::MaxPoolsAfterConv5Conv6 => {
                let max = positions(layers, |l| l.is_pool(PoolMode::Max));
                expect_count("max pool", max.len(), 2)?;
                directly_after_activation(layers, &convs, 4, max[0], "conv5")?;
                directly_after_activation(layers, &convs, 5, max[1], "conv6")
            }
            Clause::DropoutAfterLastFc => {
                let drop = positions(layers, |l| matches!(l, LayerSpec::Dropout { .. }));
                expect_count("dropout", drop.len(), 1)?;
                let last = fcs.len().checked_sub(1).ok_or("no affine layers")?;
                directly_after_activation(layers, &fcs, last, drop[0], "the last fc")
            }
            Clause::FiveWayClassifier => {
                let heads = positions(layers, |l| matches!(l, LayerSpec::Classifier { .. }));
                expect_count("classifier", heads.len(), 1)?;
                if heads[0] + 1 != layers.len() {
                    return Err("classifier is not the last layer".into());
                }
                if spec.classes != NUM_CLASSES || layers[heads[0]] != (LayerSpec::Classifier { classes: NUM_CLASSES }) {
                    return Err(format!("classifier must have {NUM_CLASSES} outputs"));
                }
                Ok(())
            }
            Clause::ShapesChain => spec.shapes().map(|_| ()).map_err(|e| e.to_string()),
        }
    }
}

fn positions(layers: &[LayerSpec], pred: impl Fn(&LayerSpec) -> bool) -> Vec<usize> {
    layers
        .iter()
        .enumerate()
        .filter(|(_, l)| pred(l))
        .map(|(i, _)| i)
        .collect()
}

fn expect_count(what: &str, found: usize, want: usize) -> std::result::Result<(), String> {
    if found == want {
        Ok(())
    } else {
        Err(format!("{found} {what} layers, expected {want}"))
    }
}

/// `at` must sit right after the ReLU that follows `anchors[nth]`.
fn directly_after_activation(
    layers: &[LayerSpec],
    anchors: &[usize],
    nth: usize,
    at: usize,
    label: &str,
) -> std::result::Result<(), String> {
    let Some(&anchor) = anchors.get(nth) else {
        return Err(format!("{label} does not exist"));
    };
    if layers.get(anchor + 1) == Some(&LayerSpec::Relu) && at == anchor + 2 {
        Ok(())
    } else {
        Err(format!(
            "expected layer {at} to directly follow {label}'s activation (layer {anchor})"
        ))
    }
}

fn check_parameters(spec: &NetworkSpec) -> std::result::Result<(), String> {
    if spec.input[0] != 3 || spec.input[1] == 0 || spec.input[2] == 0 {
        return Err(format!("input must be 3×H×W, got {:?}", spec.input));
    }
    for (i, l) in spec.layers.iter().enumerate() {
        let ok = match *l {
            LayerSpec::Conv {
                filters,
                kernel,
                stride,
                ..
            } => filters > 0 && kernel > 0 && stride > 0,
            LayerSpec::Pool { window, stride, .. } => window > 0 && stride > 0,
            LayerSpec::Affine { width } => width > 0,
            LayerSpec::Relu => true,
            LayerSpec::Dropout { p } => (0.0..1.0).contains(&p),
            LayerSpec::Classifier { classes } => classes > 0,
        };
        if !ok {
            return Err(format!("layer {i} ({}) has invalid parameters", l.kind()));
        }
    }
    Ok(())
}

impl NetworkSpec {
    /// The named preset.
    pub fn preset(name: &str) -> Result<NetworkSpec> {
        Ok(Self::from_preset(name.parse()?))
    }

    pub fn from_preset(preset: Preset) -> NetworkSpec {
        let (size, div, hidden) = match preset {
            Preset::Canonical => (224, 1, CANONICAL_HIDDEN_WIDTH),
            Preset::Desk => (64, 8, 256),
        };
        let conv = |filters: usize, kernel, stride, pad| LayerSpec::Conv {
            filters: filters / div,
            kernel,
            stride,
            pad,
        };
        let pool = |mode| LayerSpec::Pool {
            mode,
            window: 2,
            stride: 2,
        };
        use LayerSpec::Relu;
        let layers = vec![
            conv(64, 7, 4, 3),
            Relu,
            conv(96, 3, 1, 1),
            Relu,
            conv(128, 3, 1, 1),
            Relu,
            pool(PoolMode::Avg),
            conv(192, 3, 1, 1),
            Relu,
            conv(256, 3, 1, 1),
            Relu,
            pool(PoolMode::Max),
            conv(256, 3, 1, 1),
            Relu,
            pool(PoolMode::Max),
            conv(256, 3, 1, 1),
            Relu,
            LayerSpec::Affine { width: hidden },
            Relu,
            LayerSpec::Affine { width: hidden },
            Relu,
            LayerSpec::Affine { width: hidden },
            Relu,
            LayerSpec::Dropout { p: DROPOUT_P },
            LayerSpec::Classifier { classes: NUM_CLASSES },
        ];
        NetworkSpec {
            preset,
            input: [3, size, size],
            classes: NUM_CLASSES,
            layers,
        }
    }

    /// Input side length for square presets.
    pub fn input_size(&self) -> (usize, usize) {
        (self.input[1], self.input[2])
    }

    /// Every clause with its outcome.
    pub fn clause_report(&self) -> Vec<(Clause, std::result::Result<(), String>)> {
        Clause::ALL.iter().map(|&c| (c, c.check(self))).collect()
    }

    /// First violated clause as `SpecInvalid`.
    pub fn validate(&self) -> Result<()> {
        for (clause, outcome) in self.clause_report() {
            if let Err(why) = outcome {
                return Err(Error::SpecInvalid(format!("{}: {why}", clause.name())));
            }
        }
        Ok(())
    }

    /// Output shape `[C, H, W]` of every layer (affine outputs are `[width, 1, 1]`).
    pub fn shapes(&self) -> Result<Vec<[usize; 3]>> {
        let mut cur = self.input;
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let bad = |why: String| Error::SpecInvalid(format!("layer {i} ({}): {why}", l.kind()));
            cur = match *l {
                LayerSpec::Conv {
                    filters,
                    kernel,
                    stride,
                    pad,
                } => {
                    let h = conv_out_extent(cur[1], kernel, stride, pad).map_err(|e| bad(e.to_string()))?;
                    let w = conv_out_extent(cur[2], kernel, stride, pad).map_err(|e| bad(e.to_string()))?;
                    [filters, h, w]
                }
                LayerSpec::Pool { window, stride, .. } => {
                    let tiles = |n: usize| {
                        if window <= n && stride > 0 && (n - window).is_multiple_of(stride) {
                            Ok((n - window) / stride + 1)
                        } else {
                            Err(bad(format!("window {window} stride {stride} does not tile {n}")))
                        }
                    };
                    [cur[0], tiles(cur[1])?, tiles(cur[2])?]
                }
                LayerSpec::Affine { width } => [width, 1, 1],
                LayerSpec::Classifier { classes } => [classes, 1, 1],
                LayerSpec::Relu | LayerSpec::Dropout { .. } => cur,
            };
            out.push(cur);
        }
        Ok(out)
    }

    /// Total trainable scalars.
    pub fn parameter_count(&self) -> Result<usize> {
        let shapes = self.shapes()?;
        let mut prev = self.input;
        let mut total = 0;
        for (l, s) in self.layers.iter().zip(&shapes) {
            total += match *l {
                LayerSpec::Conv { filters, kernel, .. } => filters * (prev[0] * kernel * kernel + 1),
                LayerSpec::Affine { width: out } | LayerSpec::Classifier { classes: out } => {
                    out * (prev.iter().product::<usize>() + 1)
                }
                _ => 0,
            };
            prev = *s;
        }
        Ok(total)
    }

    /// Compact one-line-per-layer description.
    pub fn summary(&self) -> Result<String> {
        let shapes = self.shapes()?;
        let mut s = format!("input {}x{}x{}\n", self.input[0], self.input[1], self.input[2]);
        for (l, sh) in self.layers.iter().zip(&shapes) {
            let what = match l {
                LayerSpec::Conv {
                    filters,
                    kernel,
                    stride,
                    pad,
                } => format!("conv {filters}@{kernel}x{kernel} s{stride} p{pad}"),
                LayerSpec::Pool { mode, window, stride } => {
                    format!(
                        "{}pool {window}x{window} s{stride}",
                        if *mode == PoolMode::Max { "max" } else { "avg" }
                    )
                }
                LayerSpec::Affine { width } => format!("fc {width}"),
                LayerSpec::Relu => "relu".into(),
                LayerSpec::Dropout { p } => format!("dropout {p}"),
                LayerSpec::Classifier { classes } => format!("classifier {classes}"),
            };
            s.push_str(&format!("{what:<24} -> {}x{}x{}\n", sh[0], sh[1], sh[2]));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in [Preset::Canonical, Preset::Desk] {
            NetworkSpec::from_preset(p).validate().unwrap();
        }
    }

    #[test]
    fn canonical_flattens_to_12544() {
        let s = NetworkSpec::from_preset(Preset::Canonical);
        let shapes = s.shapes().unwrap();
        let before_fc = s.layers.iter().position(|l| l.kind() == "affine").unwrap() - 1;
        assert_eq!(shapes[before_fc], [256, 7, 7]);
        assert_eq!(shapes.last().unwrap(), &[5, 1, 1]);
    }

    #[test]
    fn desk_shapes() {
        let s = NetworkSpec::from_preset(Preset::Desk);
        assert_eq!(s.shapes().unwrap()[0], [8, 16, 16]);
        assert_eq!(s.shapes().unwrap()[16], [32, 2, 2]);
    }

    #[test]
    fn desk_kinds_match_canonical() {
        let kinds = |p| {
            NetworkSpec::from_preset(p)
                .layers
                .iter()
                .map(|l| l.kind())
                .collect::<Vec<_>>()
        };
        assert_eq!(kinds(Preset::Canonical), kinds(Preset::Desk));
    }

    #[test]
    fn six_convs_rejected() {
        let mut s = NetworkSpec::from_preset(Preset::Desk);
        s.layers.drain(15..17);
        let err = s.validate().unwrap_err();
        assert!(
            matches!(err, Error::SpecInvalid(ref m) if m.starts_with("seven-conv")),
            "{err}"
        );
    }

    #[test]
    fn desk_width_fails_canonical_clause() {
        let mut s = NetworkSpec::from_preset(Preset::Desk);
        s.preset = Preset::Canonical;
        assert!(Clause::HiddenWidth.check(&s).is_err());
    }

    #[test]
    fn misplaced_avg_pool() {
        let mut s = NetworkSpec::from_preset(Preset::Desk);
        let pool = s.layers.remove(6);
        s.layers.insert(4, pool);
        assert!(Clause::AvgPoolAfterConv3.check(&s).is_err());
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(NetworkSpec::preset("huge"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn json_roundtrip() {
        let s = NetworkSpec::from_preset(Preset::Canonical);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains(r#"{"kind":"conv","filters":64,"kernel":7,"stride":4,"pad":3}"#));
        assert_eq!(serde_json::from_str::<NetworkSpec>(&text).unwrap(), s);
    }

    #[test]
    fn canonical_parameter_count() {
        let n = NetworkSpec::from_preset(Preset::Canonical).parameter_count().unwrap();
        // FC1 alone is 12544 × 4096 + 4096
        assert!(n > 12544 * 4096 && n < 90_000_000, "{n}");
    }
}
