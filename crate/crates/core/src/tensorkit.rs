//! Numerical kernels for the attention-augmented classifier head.
//!
//! Tensors use a fixed row-major layout with channels innermost: element
//! `(h, w, c)` lives at `(h * width + w) * channels + c`. Every kernel in this
//! module assumes that layout.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output width of the DenseNet201 feature extractor.
pub const DENSENET201_FEATURES: usize = 1920;
/// DenseNet201 feature-extractor parameters (no top).
pub const DENSENET201_BACKBONE_PARAMS: u64 = 18_321_984;
/// Batch-norm moving statistics inside the DenseNet201 backbone; never trainable.
pub const DENSENET201_BN_MOVING_PARAMS: u64 = 229_056;
/// Default channel-attention reduction ratio.
pub const DEFAULT_CA_RATIO: usize = 8;

fn ensure_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("non-finite value {x}")))
    }
}

/// Logistic sigmoid, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// SiLU (Swish-1): `x * sigmoid(x)`.
pub fn silu(x: f64) -> Result<f64> {
    ensure_finite(x)?;
    Ok(x * sigmoid(x))
}

/// Analytic derivative of [`silu`]: `s * (1 + x * (1 - s))` with `s = sigmoid(x)`.
pub fn silu_grad(x: f64) -> Result<f64> {
    ensure_finite(x)?;
    let s = sigmoid(x);
    Ok(s * (1.0 + x * (1.0 - s)))
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::invalid(format!(
                "tensor dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("tensor contains non-finite value {bad}")));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for h in 0..height {
            for w in 0..width {
                for c in 0..channels {
                    data.push(f(h, w, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, h: usize, w: usize, c: usize) -> f64 {
        self.data[(h * self.width + w) * self.channels + c]
    }

    /// Iterates spatial positions, yielding one channel slice per `(h, w)`.
    pub fn pixels(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.channels)
    }

    /// Serializes as `H W C` followed by `H*W` lines of `C` space-separated values.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.height, self.width, self.channels);
        for px in self.pixels() {
            for (i, v) in px.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing `H W C` header".into(),
        })?;
        let dims = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?;
        let [height, width, channels] = dims[..] else {
            return Err(Error::Parse {
                line: 1,
                message: format!("header needs 3 integers, got {}", dims.len()),
            });
        };
        let mut data = Vec::with_capacity(height * width * channels);
        let mut rows = 0;
        for (idx, line) in lines {
            let row = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            if row.len() != channels {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {channels} values, got {}", row.len()),
                });
            }
            data.extend(row);
            rows += 1;
        }
        if rows != height * width {
            return Err(Error::Parse {
                line: rows + 1,
                message: format!("expected {} rows, got {rows}", height * width),
            });
        }
        Self::new(height, width, channels, data)
    }
}

/// One scalar per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVector(pub Vec<f64>);

impl ChannelVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn global_avg_pool(t: &Tensor) -> Result<ChannelVector> {
    if t.data.is_empty() {
        return Err(Error::invalid("global average pool over an empty tensor"));
    }
    let mut sums = vec![0.0; t.channels];
    for px in t.pixels() {
        for (s, v) in sums.iter_mut().zip(px) {
            *s += v;
        }
    }
    let n = (t.height * t.width) as f64;
    Ok(ChannelVector(sums.into_iter().map(|s| s / n).collect()))
}

pub fn global_max_pool(t: &Tensor) -> Result<ChannelVector> {
    if t.data.is_empty() {
        return Err(Error::invalid("global max pool over an empty tensor"));
    }
    let mut maxes = vec![f64::NEG_INFINITY; t.channels];
    for px in t.pixels() {
        for (m, &v) in maxes.iter_mut().zip(px) {
            *m = m.max(v);
        }
    }
    Ok(ChannelVector(maxes))
}

/// Bias-free encoder/decoder pair: `C -> C/r -> C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    channels: usize,
    hidden: usize,
    /// `channels x hidden`, row-major.
    w1: Vec<f64>,
    /// `hidden x channels`, row-major.
    w2: Vec<f64>,
}

impl Mlp {
    pub fn new(channels: usize, hidden: usize, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        if w1.len() != channels * hidden {
            return Err(Error::Dimension {
                expected: channels * hidden,
                actual: w1.len(),
            });
        }
        if w2.len() != hidden * channels {
            return Err(Error::Dimension {
                expected: hidden * channels,
                actual: w2.len(),
            });
        }
        if w1.iter().chain(&w2).any(|v| !v.is_finite()) {
            return Err(Error::invalid("MLP weights must be finite"));
        }
        Ok(Self {
            channels,
            hidden,
            w1,
            w2,
        })
    }

    pub fn zeros(channels: usize, hidden: usize) -> Self {
        Self {
            channels,
            hidden,
            w1: vec![0.0; channels * hidden],
            w2: vec![0.0; hidden * channels],
        }
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    /// `w2^T . relu(w1^T . v)`
    pub fn forward(&self, v: &[f64]) -> Vec<f64> {
        let mut hidden = vec![0.0; self.hidden];
        for (c, &x) in v.iter().enumerate() {
            let row = &self.w1[c * self.hidden..(c + 1) * self.hidden];
            for (h, w) in hidden.iter_mut().zip(row) {
                *h += w * x;
            }
        }
        let mut out = vec![0.0; self.channels];
        for (j, h) in hidden.into_iter().enumerate() {
            let a = relu(h);
            let row = &self.w2[j * self.channels..(j + 1) * self.channels];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * a;
            }
        }
        out
    }

    pub fn param_count(&self) -> u64 {
        (self.w1.len() + self.w2.len()) as u64
    }
}

/// Weights of the channel-attention MLP.
///
/// With `max_branch == None` one MLP is shared by the average- and max-pooled
/// vectors; otherwise the max-pooled vector gets its own MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    channels: usize,
    ratio: usize,
    avg_branch: Mlp,
    max_branch: Option<Mlp>,
}

impl AttentionParams {
    fn check_ratio(channels: usize, ratio: usize) -> Result<usize> {
        if channels == 0 || ratio == 0 {
            return Err(Error::invalid("channels and ratio must be positive"));
        }
        if !channels.is_multiple_of(ratio) {
            return Err(Error::invalid(format!(
                "ratio {ratio} does not divide {channels} channels"
            )));
        }
        Ok(channels / ratio)
    }

    pub fn shared(channels: usize, ratio: usize, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        let hidden = Self::check_ratio(channels, ratio)?;
        Ok(Self {
            channels,
            ratio,
            avg_branch: Mlp::new(channels, hidden, w1, w2)?,
            max_branch: None,
        })
    }

    pub fn separate(channels: usize, ratio: usize, avg: (Vec<f64>, Vec<f64>), max: (Vec<f64>, Vec<f64>)) -> Result<Self> {
        let hidden = Self::check_ratio(channels, ratio)?;
        Ok(Self {
            channels,
            ratio,
            avg_branch: Mlp::new(channels, hidden, avg.0, avg.1)?,
            max_branch: Some(Mlp::new(channels, hidden, max.0, max.1)?),
        })
    }

    pub fn zeros(channels: usize, ratio: usize, shared: bool) -> Result<Self> {
        let hidden = Self::check_ratio(channels, ratio)?;
        Ok(Self {
            channels,
            ratio,
            avg_branch: Mlp::zeros(channels, hidden),
            max_branch: (!shared).then(|| Mlp::zeros(channels, hidden)),
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn ratio(&self) -> usize {
        self.ratio
    }

    pub fn is_shared(&self) -> bool {
        self.max_branch.is_none()
    }

    pub fn avg_branch(&self) -> &Mlp {
        &self.avg_branch
    }

    pub fn max_branch(&self) -> &Mlp {
        self.max_branch.as_ref().unwrap_or(&self.avg_branch)
    }

    pub fn param_count(&self) -> u64 {
        self.avg_branch.param_count() + self.max_branch.as_ref().map_or(0, Mlp::param_count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub weights: ChannelVector,
    pub out: Tensor,
}

/// Channel attention: pools each channel (average and max), passes both
/// vectors through the MLP, adds them, applies a sigmoid and rescales every
/// channel of the input by its weight.
pub fn channel_attention_forward(t: &Tensor, p: &AttentionParams) -> Result<AttentionOutput> {
    if t.channels != p.channels {
        return Err(Error::Dimension {
            expected: p.channels,
            actual: t.channels,
        });
    }
    let avg = global_avg_pool(t)?;
    let max = global_max_pool(t)?;
    let a = p.avg_branch().forward(avg.values());
    let m = p.max_branch().forward(max.values());
    let weights: Vec<f64> = a.iter().zip(&m).map(|(x, y)| sigmoid(x + y)).collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("attention weights overflowed"));
    }
    let data = t
        .pixels()
        .flat_map(|px| px.iter().zip(&weights).map(|(v, w)| v * w))
        .collect();
    let out = Tensor::new(t.height, t.width, t.channels, data)?;
    Ok(AttentionOutput {
        weights: ChannelVector(weights),
        out,
    })
}

/// Parameters of a fully connected layer.
pub fn dense_param_count(inputs: usize, outputs: usize, bias: bool) -> Result<u64> {
    if inputs == 0 || outputs == 0 {
        return Err(Error::invalid("dense layer sizes must be positive"));
    }
    let weights = inputs as u64 * outputs as u64;
    Ok(weights + if bias { outputs as u64 } else { 0 })
}

/// Parameters of the channel-attention MLP(s).
pub fn ca_param_count(channels: usize, ratio: usize, shared: bool, bias: bool) -> Result<u64> {
    let hidden = AttentionParams::check_ratio(channels, ratio)? as u64;
    let c = channels as u64;
    let per_mlp = 2 * c * hidden + if bias { hidden + c } else { 0 };
    Ok(if shared { per_mlp } else { 2 * per_mlp })
}

/// Frozen/unfrozen parameter breakdown in the style of a Keras summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamBreakdown {
    pub total: u64,
    pub frozen_trainable: u64,
    pub frozen_non_trainable: u64,
    pub unfrozen_trainable: u64,
    pub unfrozen_non_trainable: u64,
}

/// Breakdown for a DenseNet201 backbone with an optional attention block and
/// a `classes`-way dense head.
pub fn densenet201_breakdown(classes: usize, attention: Option<(usize, bool)>) -> Result<ParamBreakdown> {
    let head = dense_param_count(DENSENET201_FEATURES, classes, true)?;
    let ca = match attention {
        Some((ratio, shared)) => ca_param_count(DENSENET201_FEATURES, ratio, shared, false)?,
        None => 0,
    };
    let total = DENSENET201_BACKBONE_PARAMS + ca + head;
    Ok(ParamBreakdown {
        total,
        frozen_trainable: head,
        frozen_non_trainable: total - head,
        unfrozen_trainable: total - DENSENET201_BN_MOVING_PARAMS,
        unfrozen_non_trainable: DENSENET201_BN_MOVING_PARAMS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Silu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Preamble,
    DenseBlock,
    Transition,
    Postamble,
    ChannelAttention,
    GlobalAveragePool,
    ClassifierHead,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub kind: StageKind,
    /// Activation used inside the stage; `None` for pooling and the head.
    pub activation: Option<ActivationKind>,
}

impl Stage {
    pub fn new(name: impl Into<String>, kind: StageKind, activation: Option<ActivationKind>) -> Self {
        Self {
            name: name.into(),
            kind,
            activation,
        }
    }
}

/// Ordered stage layout of the network, used to check where the attention
/// block sits and which activation each stage runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub stages: Vec<Stage>,
}

impl LayerPlan {
    /// DenseNet201 with SiLU everywhere, the attention block after the
    /// post-amble and a ReLU-internal attention MLP.
    pub fn pldc_net() -> Self {
        use ActivationKind::*;
        use StageKind::*;
        let mut stages = vec![Stage::new("preamble", Preamble, Some(Silu))];
        for (i, layers) in [6, 12, 48, 32].into_iter().enumerate() {
            stages.push(Stage::new(format!("dense_block_{}_{layers}", i + 1), DenseBlock, Some(Silu)));
            if i < 3 {
                stages.push(Stage::new(format!("transition_{}", i + 1), Transition, Some(Silu)));
            }
        }
        stages.push(Stage::new("postamble", Postamble, Some(Silu)));
        stages.push(Stage::new("channel_attention", ChannelAttention, Some(Relu)));
        stages.push(Stage::new("global_average_pool", GlobalAveragePool, None));
        stages.push(Stage::new("classifier_head", ClassifierHead, None));
        Self { stages }
    }

    /// Index of the attention stage, if the plan is valid.
    pub fn attention_index(&self) -> Option<usize> {
        self.stages.iter().position(|s| s.kind == StageKind::ChannelAttention)
    }

    /// Checks attention placement and activations.
    ///
    /// `allow_silu_in_attention` admits the SiLU-inside-attention variant,
    /// which is otherwise rejected.
    pub fn validate(&self, allow_silu_in_attention: bool) -> Result<()> {
        let ca: Vec<usize> = self
            .stages
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == StageKind::ChannelAttention)
            .map(|(i, _)| i)
            .collect();
        let &[idx] = ca.as_slice() else {
            return Err(Error::validation(format!(
                "channel attention must appear exactly once, found {}",
                ca.len()
            )));
        };
        if idx == 0 || self.stages[idx - 1].kind != StageKind::Postamble {
            return Err(Error::validation(
                "channel attention must directly follow the post-amble",
            ));
        }
        if self.stages.get(idx + 1).map(|s| s.kind) != Some(StageKind::GlobalAveragePool) {
            return Err(Error::validation(
                "channel attention must directly precede global average pooling",
            ));
        }
        match self.stages[idx].activation {
            Some(ActivationKind::Relu) => {}
            Some(ActivationKind::Silu) if allow_silu_in_attention => {}
            other => {
                return Err(Error::validation(format!(
                    "channel attention MLP must use relu, found {other:?}"
                )))
            }
        }
        for s in &self.stages[..idx] {
            if s.activation != Some(ActivationKind::Silu) {
                return Err(Error::validation(format!(
                    "stage `{}` must use silu, found {:?}",
                    s.name, s.activation
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::excessive_precision)]
    fn silu_at_known_points() {
        assert_eq!(silu(0.0).unwrap(), 0.0);
        // 40-digit reference values
        assert!((silu(1.0).unwrap() - 0.731_058_578_630_004_879_25).abs() < 1e-12);
        assert!((silu(-20.0).unwrap() - -4.122_307_236_380_407_162_9e-8).abs() < 1e-12);
        assert!((silu(-3.0).unwrap() - -0.142_277_619_532_700_342_64).abs() < 1e-12);
        assert!((silu(7.25).unwrap() - 7.244_854_889_606_520_735_9).abs() < 1e-12);
        assert!((silu(-50.0).unwrap() - -9.643_749_239_819_588_915_1e-21).abs() < 1e-12);
    }

    #[test]
    fn silu_rejects_non_finite() {
        assert!(matches!(silu(f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(silu_grad(f64::INFINITY).is_err());
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn silu_grad_at_known_points() {
        assert_eq!(silu_grad(0.0).unwrap(), 0.5);
        assert!((silu_grad(1.0).unwrap() - 0.927_670_511_871_486_731_79).abs() < 1e-12);
        assert!((silu_grad(-3.0).unwrap() - -0.088_104_106_015_169_617_069).abs() < 1e-12);
        assert!((silu_grad(40.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pooling_small_tensor() {
        let t = Tensor::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(global_avg_pool(&t).unwrap().values(), &[2.5]);
        assert_eq!(global_max_pool(&t).unwrap().values(), &[4.0]);
        let c = Tensor::from_fn(3, 5, 4, |_, _, _| -1.25).unwrap();
        assert_eq!(global_avg_pool(&c).unwrap().values(), &[-1.25; 4]);
        assert_eq!(global_max_pool(&c).unwrap().values(), &[-1.25; 4]);
    }

    #[test]
    fn tensor_rejects_bad_shapes() {
        assert!(Tensor::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Tensor::new(0, 2, 1, vec![]).is_err());
        assert!(Tensor::new(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn zero_weights_halve_everything() {
        let t = Tensor::from_fn(3, 3, 8, |h, w, c| (h * 7 + w * 3 + c) as f64 - 10.0).unwrap();
        for shared in [true, false] {
            let p = AttentionParams::zeros(8, 2, shared).unwrap();
            let r = channel_attention_forward(&t, &p).unwrap();
            assert!(r.weights.values().iter().all(|&w| w == 0.5));
            for (o, i) in r.out.data().iter().zip(t.data()) {
                assert_eq!(*o, 0.5 * i);
            }
        }
    }

    #[test]
    fn constant_channels_double_the_branch() {
        // gap == gmp, so weights = sigmoid(2 * m(gap))
        let t = Tensor::from_fn(2, 3, 4, |_, _, c| c as f64 * 0.5 - 0.7).unwrap();
        let w1: Vec<f64> = (0..8).map(|i| (i as f64 * 0.37).sin()).collect();
        let w2: Vec<f64> = (0..8).map(|i| (i as f64 * 0.91).cos()).collect();
        let p = AttentionParams::shared(4, 2, w1, w2).unwrap();
        let r = channel_attention_forward(&t, &p).unwrap();
        let m = p.avg_branch().forward(global_avg_pool(&t).unwrap().values());
        for (w, mv) in r.weights.values().iter().zip(m) {
            assert!((w - sigmoid(2.0 * mv)).abs() < 1e-15);
        }
    }

    #[test]
    fn attention_rejects_channel_mismatch() {
        let t = Tensor::from_fn(2, 2, 4, |_, _, _| 1.0).unwrap();
        let p = AttentionParams::zeros(8, 2, true).unwrap();
        assert!(matches!(
            channel_attention_forward(&t, &p),
            Err(Error::Dimension { expected: 8, actual: 4 })
        ));
    }

    #[test]
    fn param_counts() {
        assert_eq!(dense_param_count(1920, 6, true).unwrap(), 11_526);
        assert_eq!(dense_param_count(1, 1, false).unwrap(), 1);
        assert_eq!(dense_param_count(3, 2, true).unwrap(), 8);
        assert!(dense_param_count(0, 2, true).is_err());

        assert_eq!(ca_param_count(1920, 8, true, false).unwrap(), 19_255_110 - 18_333_510);
        assert_eq!(ca_param_count(1920, 16, false, false).unwrap(), 921_600);
        assert_eq!(ca_param_count(64, 64, true, false).unwrap(), 128);
        assert_eq!(ca_param_count(8, 2, true, true).unwrap(), 64 + 4 + 8);
        assert!(ca_param_count(1920, 7, true, false).is_err());

        let p = AttentionParams::zeros(16, 4, false).unwrap();
        assert_eq!(p.param_count(), ca_param_count(16, 4, false, false).unwrap());
    }

    #[test]
    fn densenet_breakdown_matches_keras_summary() {
        let base = densenet201_breakdown(6, None).unwrap();
        assert_eq!(base.total, 18_333_510);
        assert_eq!(base.frozen_trainable, 11_526);
        assert_eq!(base.frozen_non_trainable, 18_321_984);
        assert_eq!(base.unfrozen_trainable, 18_104_454);
        let ca = densenet201_breakdown(6, Some((8, true))).unwrap();
        assert_eq!(ca.total, 19_255_110);
        assert_eq!(ca.frozen_non_trainable, 19_243_584);
        assert_eq!(ca.unfrozen_trainable, 19_026_054);
        assert_eq!(ca.unfrozen_non_trainable, 229_056);
    }

    #[test]
    fn layer_plan_placement() {
        let plan = LayerPlan::pldc_net();
        plan.validate(false).unwrap();
        assert_eq!(plan.stages[plan.attention_index().unwrap() - 1].kind, StageKind::Postamble);

        let mut moved = plan.clone();
        let ca = moved.stages.remove(moved.attention_index().unwrap());
        moved.stages.insert(2, ca);
        assert!(moved.validate(false).is_err());

        let mut twice = plan.clone();
        let idx = twice.attention_index().unwrap();
        twice.stages.insert(idx, twice.stages[idx].clone());
        assert!(twice.validate(false).is_err());

        let mut silu_ca = plan.clone();
        silu_ca.stages[idx].activation = Some(ActivationKind::Silu);
        assert!(silu_ca.validate(false).is_err());
        silu_ca.validate(true).unwrap();

        let mut relu_body = plan;
        relu_body.stages[0].activation = Some(ActivationKind::Relu);
        assert!(relu_body.validate(false).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let t = Tensor::from_fn(2, 3, 2, |h, w, c| h as f64 * 0.1 + w as f64 / 3.0 - c as f64).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("2 3 2\n"));
        assert_eq!(text.lines().count(), 7);
        assert_eq!(Tensor::from_text(&text).unwrap(), t);
        assert!(Tensor::from_text("1 1 2\n1.0\n").is_err());
        assert!(Tensor::from_text("2 1 1\n1.0\n").is_err());
    }
}
