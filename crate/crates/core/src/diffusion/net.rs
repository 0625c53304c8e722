//! Small feed-forward denoiser with hand-written backpropagation.
//!
//! Activations are flat `f64` buffers laid out channel-major
//! (`channel × height × width`). The network input is the noisy target
//! followed by the three condition channels; the output is one channel of
//! predicted noise. Every layer's parameters live in one flat vector so the
//! optimizer and the model file only deal with a single slice.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::condition::ConditionTensor;
use super::DiffusionError;
use crate::rng::seeded;

pub const INPUT_CHANNELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum LayerKind {
    /// Same-padded square convolution, stride 1.
    Conv { out: usize, kernel: usize },
    /// Fully connected over the flattened activation.
    Dense { out: usize },
    /// Per-channel bias projected from the sinusoidal timestep embedding.
    TimeBias,
    Silu,
}

/// What the last layer predicts. The network output `F` is turned into a
/// noise estimate with the noise level `ᾱ_t`:
/// `Epsilon`: `ε = F`; `Sample`: `ε = (z_t - √ᾱ F) / √(1-ᾱ)`;
/// `Velocity`: `ε = √(1-ᾱ) z_t + √ᾱ F`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputParam {
    #[default]
    Epsilon,
    Sample,
    Velocity,
}

impl OutputParam {
    pub fn to_eps(self, raw: &[f64], z_t: &[f64], alpha_bar: f64) -> Vec<f64> {
        let (sa, sn) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
        match self {
            OutputParam::Epsilon => raw.to_vec(),
            OutputParam::Sample => raw.iter().zip(z_t).map(|(f, z)| (z - sa * f) / sn).collect(),
            OutputParam::Velocity => raw.iter().zip(z_t).map(|(f, z)| sn * z + sa * f).collect(),
        }
    }

    /// `∂ε/∂F`, the same for every pixel.
    pub fn eps_jacobian(self, alpha_bar: f64) -> f64 {
        match self {
            OutputParam::Epsilon => 1.0,
            OutputParam::Sample => -alpha_bar.sqrt() / (1.0 - alpha_bar).sqrt(),
            OutputParam::Velocity => alpha_bar.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserConfig {
    pub width: usize,
    pub height: usize,
    pub time_dim: usize,
    pub layers: Vec<LayerKind>,
    #[serde(default)]
    pub output: OutputParam,
}

impl DenoiserConfig {
    /// Convolution-only stack: `conv (+time bias, SiLU)` per hidden width,
    /// then a final convolution to one channel.
    pub fn convolutional(width: usize, height: usize, hidden: &[usize]) -> Self {
        let mut layers = Vec::new();
        for &c in hidden {
            layers.extend([LayerKind::Conv { out: c, kernel: 3 }, LayerKind::TimeBias, LayerKind::Silu]);
        }
        layers.push(LayerKind::Conv { out: 1, kernel: 3 });
        Self {
            width,
            height,
            time_dim: 16,
            layers,
            output: OutputParam::Epsilon,
        }
    }

    /// Three 3×3 convolutions of width 32.
    pub fn three_conv(width: usize, height: usize) -> Self {
        Self::convolutional(width, height, &[32, 32])
    }

    /// Convolutional stem followed by fully connected layers, so every output
    /// pixel can depend on the whole image.
    pub fn global(width: usize, height: usize, stem: &[usize], hidden: &[usize]) -> Self {
        let mut layers = Vec::new();
        for &c in stem {
            layers.extend([LayerKind::Conv { out: c, kernel: 3 }, LayerKind::TimeBias, LayerKind::Silu]);
        }
        for &h in hidden {
            layers.extend([LayerKind::Dense { out: h }, LayerKind::TimeBias, LayerKind::Silu]);
        }
        layers.push(LayerKind::Dense { out: width * height });
        Self {
            width,
            height,
            time_dim: 16,
            layers,
            output: OutputParam::Epsilon,
        }
    }

    pub fn with_output(mut self, output: OutputParam) -> Self {
        self.output = output;
        self
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// Compiled layer with its parameter offsets and activation shapes.
#[derive(Debug, Clone, PartialEq)]
enum Layer {
    Conv {
        cin: usize,
        cout: usize,
        k: usize,
        w: usize,
        b: usize,
    },
    Dense {
        nin: usize,
        nout: usize,
        w: usize,
        b: usize,
    },
    TimeBias {
        units: usize,
        spatial: usize,
        w: usize,
        b: usize,
    },
    Silu,
}

/// Anything that predicts the injected noise from `(z_t, t, c)`; the noise
/// level `ᾱ_t` of the schedule in use is passed alongside `t`.
pub trait NoisePredictor {
    fn predict(&self, z_t: &[f64], t: usize, alpha_bar: f64, cond: &ConditionTensor) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TinyDenoiser {
    config: DenoiserConfig,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

/// Layer inputs recorded during a forward pass; `acts[i]` feeds layer `i`.
pub(crate) struct Tape {
    acts: Vec<Vec<f64>>,
    emb: Vec<f64>,
}

impl Tape {
    pub(crate) fn output(&self) -> &[f64] {
        self.acts.last().expect("tape holds the output")
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Sinusoidal timestep embedding: `dim/2` sines then `dim/2` cosines.
pub fn timestep_embedding(t: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut out = vec![0.0; dim];
    for i in 0..half {
        let freq = (-(10_000f64.ln()) * i as f64 / half.max(1) as f64).exp();
        let arg = t as f64 * freq;
        out[i] = arg.sin();
        out[half + i] = arg.cos();
    }
    out
}

impl TinyDenoiser {
    /// Build with Xavier-uniform weights and zero biases.
    pub fn new(config: DenoiserConfig, seed: u64) -> Result<Self, DiffusionError> {
        let (layers, count) = compile(&config)?;
        let mut params = vec![0.0; count];
        let mut rng = seeded(seed);
        for layer in &layers {
            let (off, len, fan_in, fan_out) = match *layer {
                Layer::Conv { cin, cout, k, w, .. } => (w, cout * cin * k * k, cin * k * k, cout * k * k),
                Layer::Dense { nin, nout, w, .. } => (w, nin * nout, nin, nout),
                Layer::TimeBias { units, w, .. } => (w, units * config.time_dim, config.time_dim, units),
                Layer::Silu => continue,
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[off..off + len] {
                *p = rng.gen_range(-limit..limit);
            }
        }
        Ok(Self { config, layers, params })
    }

    /// Network with every parameter zero (outputs zero everywhere).
    pub fn zeros(config: DenoiserConfig) -> Result<Self, DiffusionError> {
        let (layers, count) = compile(&config)?;
        Ok(Self {
            config,
            layers,
            params: vec![0.0; count],
        })
    }

    pub fn from_params(config: DenoiserConfig, params: Vec<f64>) -> Result<Self, DiffusionError> {
        let (layers, count) = compile(&config)?;
        if params.len() != count {
            return Err(DiffusionError::Shape(format!(
                "expected {count} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(DiffusionError::Model("non-finite parameter".into()));
        }
        Ok(Self { config, layers, params })
    }

    pub fn config(&self) -> &DenoiserConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Assemble the input buffer `[z_t, x, p, m]`.
    pub fn input(&self, z_t: &[f64], cond: &ConditionTensor) -> Vec<f64> {
        let mut input = Vec::with_capacity(INPUT_CHANNELS * z_t.len());
        input.extend_from_slice(z_t);
        input.extend(cond.channels());
        input
    }

    pub(crate) fn forward_tape(&self, input: Vec<f64>, t: usize) -> Tape {
        let emb = timestep_embedding(t, self.config.time_dim);
        let (w, h) = (self.config.width, self.config.height);
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input);
        for layer in &self.layers {
            let x = acts.last().expect("input present");
            let y = match *layer {
                Layer::Conv { cin, cout, k, w: wo, b } => {
                    conv_forward(x, &self.params[wo..b], &self.params[b..b + cout], cin, cout, k, w, h)
                }
                Layer::Dense { nin, nout, w: wo, b } => {
                    let weights = &self.params[wo..b];
                    let bias = &self.params[b..b + nout];
                    (0..nout)
                        .map(|j| bias[j] + dot(&weights[j * nin..(j + 1) * nin], x))
                        .collect()
                }
                Layer::TimeBias { units, spatial, w: wo, b } => {
                    let d = self.config.time_dim;
                    let mut y = x.clone();
                    for u in 0..units {
                        let shift = self.params[b + u] + dot(&self.params[wo + u * d..wo + (u + 1) * d], &emb);
                        for v in &mut y[u * spatial..(u + 1) * spatial] {
                            *v += shift;
                        }
                    }
                    y
                }
                Layer::Silu => x.iter().map(|&v| v * sigmoid(v)).collect(),
            };
            acts.push(y);
        }
        Tape { acts, emb }
    }

    /// Accumulate `∂L/∂θ` into `grad` given `∂L/∂output`.
    pub(crate) fn backward(&self, tape: &Tape, dout: &[f64], grad: &mut [f64]) {
        let (w, h) = (self.config.width, self.config.height);
        let mut delta = dout.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &tape.acts[i];
            let need_input_grad = i > 0;
            delta = match *layer {
                Layer::Conv { cin, cout, k, w: wo, b } => conv_backward(
                    x,
                    &delta,
                    &self.params[wo..b],
                    grad,
                    (wo, b),
                    (cin, cout, k, w, h),
                    need_input_grad,
                ),
                Layer::Dense { nin, nout, w: wo, b } => {
                    let mut dx = vec![0.0; if need_input_grad { nin } else { 0 }];
                    for j in 0..nout {
                        let g = delta[j];
                        grad[b + j] += g;
                        if g == 0.0 {
                            continue;
                        }
                        axpy(g, x, &mut grad[wo + j * nin..wo + (j + 1) * nin]);
                        if need_input_grad {
                            axpy(g, &self.params[wo + j * nin..wo + (j + 1) * nin], &mut dx);
                        }
                    }
                    dx
                }
                Layer::TimeBias { units, spatial, w: wo, b } => {
                    let d = self.config.time_dim;
                    for u in 0..units {
                        let s: f64 = delta[u * spatial..(u + 1) * spatial].iter().sum();
                        grad[b + u] += s;
                        axpy(s, &tape.emb, &mut grad[wo + u * d..wo + (u + 1) * d]);
                    }
                    delta
                }
                Layer::Silu => x
                    .iter()
                    .zip(&delta)
                    .map(|(&v, &g)| {
                        let s = sigmoid(v);
                        g * (s + v * s * (1.0 - s))
                    })
                    .collect(),
            };
        }
    }

    /// Raw network output for an assembled input.
    pub fn forward(&self, input: Vec<f64>, t: usize) -> Vec<f64> {
        let mut tape = self.forward_tape(input, t);
        tape.acts.pop().expect("output present")
    }

    pub fn layer_kinds(&self) -> &[LayerKind] {
        &self.config.layers
    }
}

impl NoisePredictor for TinyDenoiser {
    fn predict(&self, z_t: &[f64], t: usize, alpha_bar: f64, cond: &ConditionTensor) -> Vec<f64> {
        let raw = self.forward(self.input(z_t, cond), t);
        self.config.output.to_eps(&raw, z_t, alpha_bar)
    }
}

fn compile(config: &DenoiserConfig) -> Result<(Vec<Layer>, usize), DiffusionError> {
    let spatial_full = config.pixels();
    if spatial_full == 0 {
        return Err(DiffusionError::Shape("empty image".into()));
    }
    if config.time_dim % 2 != 0 {
        return Err(DiffusionError::Shape("time embedding size must be even".into()));
    }
    // (units, spatial) of the current activation
    let (mut units, mut spatial) = (INPUT_CHANNELS, spatial_full);
    let mut offset = 0;
    let mut layers = Vec::with_capacity(config.layers.len());
    for kind in &config.layers {
        let layer = match *kind {
            LayerKind::Conv { out, kernel } => {
                if spatial != spatial_full {
                    return Err(DiffusionError::Shape("convolution after a dense layer".into()));
                }
                if kernel % 2 == 0 || out == 0 {
                    return Err(DiffusionError::Shape("convolution needs an odd kernel and outputs".into()));
                }
                let w = offset;
                let b = w + out * units * kernel * kernel;
                offset = b + out;
                let l = Layer::Conv {
                    cin: units,
                    cout: out,
                    k: kernel,
                    w,
                    b,
                };
                units = out;
                l
            }
            LayerKind::Dense { out } => {
                let nin = units * spatial;
                let w = offset;
                let b = w + out * nin;
                offset = b + out;
                units = out;
                spatial = 1;
                Layer::Dense { nin, nout: out, w, b }
            }
            LayerKind::TimeBias => {
                let w = offset;
                let b = w + units * config.time_dim;
                offset = b + units;
                Layer::TimeBias { units, spatial, w, b }
            }
            LayerKind::Silu => Layer::Silu,
        };
        layers.push(layer);
    }
    if units * spatial != spatial_full {
        return Err(DiffusionError::Shape(format!(
            "network output has {} values, expected {spatial_full}",
            units * spatial
        )));
    }
    Ok((layers, offset))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Valid output range `[lo, hi)` along one axis for kernel offset `d`.
#[inline]
fn span(d: isize, n: usize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d).min(n as isize).max(0) as usize;
    (lo, hi)
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    x: &[f64],
    weights: &[f64],
    bias: &[f64],
    cin: usize,
    cout: usize,
    k: usize,
    w: usize,
    h: usize,
) -> Vec<f64> {
    let plane = w * h;
    let pad = (k / 2) as isize;
    let mut y = vec![0.0; cout * plane];
    for co in 0..cout {
        let out = &mut y[co * plane..(co + 1) * plane];
        out.fill(bias[co]);
        for ci in 0..cin {
            let inp = &x[ci * plane..(ci + 1) * plane];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = span(dy, h);
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let (x0, x1) = span(dx, w);
                    let wv = weights[((co * cin + ci) * k + ky) * k + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    for r in y0..y1 {
                        let src = ((r as isize + dy) as usize) * w;
                        let dst = r * w;
                        let sx0 = (x0 as isize + dx) as usize;
                        axpy(wv, &inp[src + sx0..src + sx0 + (x1 - x0)], &mut out[dst + x0..dst + x1]);
                    }
                }
            }
        }
    }
    y
}

fn conv_backward(
    x: &[f64],
    delta: &[f64],
    weights: &[f64],
    grad: &mut [f64],
    (wo, bo): (usize, usize),
    (cin, cout, k, w, h): (usize, usize, usize, usize, usize),
    need_input_grad: bool,
) -> Vec<f64> {
    let plane = w * h;
    let pad = (k / 2) as isize;
    let mut dx = vec![0.0; if need_input_grad { cin * plane } else { 0 }];
    for co in 0..cout {
        let d = &delta[co * plane..(co + 1) * plane];
        grad[bo + co] += d.iter().sum::<f64>();
        for ci in 0..cin {
            let inp = &x[ci * plane..(ci + 1) * plane];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = span(dy, h);
                for kx in 0..k {
                    let dxo = kx as isize - pad;
                    let (x0, x1) = span(dxo, w);
                    let widx = ((co * cin + ci) * k + ky) * k + kx;
                    let wv = weights[widx];
                    let mut acc = 0.0;
                    for r in y0..y1 {
                        let src = ((r as isize + dy) as usize) * w;
                        let dst = r * w;
                        let sx0 = (x0 as isize + dxo) as usize;
                        let n = x1 - x0;
                        acc += dot(&d[dst + x0..dst + x1], &inp[src + sx0..src + sx0 + n]);
                        if need_input_grad {
                            let base = ci * plane + src + sx0;
                            axpy(wv, &d[dst + x0..dst + x1], &mut dx[base..base + n]);
                        }
                    }
                    grad[wo + widx] += acc;
                }
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn compile_counts_parameters() {
        let cfg = DenoiserConfig {
            width: 16,
            height: 16,
            time_dim: 4,
            layers: vec![LayerKind::Conv { out: 1, kernel: 1 }, LayerKind::TimeBias],
            output: OutputParam::Epsilon,
        };
        let net = TinyDenoiser::new(cfg, 0).unwrap();
        assert_eq!(net.param_count(), 10);
        let spec = TinyDenoiser::new(DenoiserConfig::three_conv(16, 16), 0).unwrap();
        let convs = spec
            .layer_kinds()
            .iter()
            .filter(|l| matches!(l, LayerKind::Conv { .. }))
            .count();
        assert_eq!(convs, 3);
    }

    #[test]
    fn bad_configs_rejected() {
        let mut cfg = DenoiserConfig::three_conv(16, 16);
        cfg.layers.pop();
        assert!(TinyDenoiser::new(cfg, 0).is_err());
        let cfg = DenoiserConfig {
            width: 4,
            height: 4,
            time_dim: 4,
            layers: vec![LayerKind::Dense { out: 8 }, LayerKind::Conv { out: 1, kernel: 3 }],
            output: OutputParam::Epsilon,
        };
        assert!(TinyDenoiser::new(cfg, 0).is_err());
    }

    #[test]
    fn conv_matches_naive_loop() {
        let (w, h, cin, cout, k) = (5, 4, 2, 3, 3);
        let mut rng = seeded(2);
        let x: Vec<f64> = (0..cin * w * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let wts: Vec<f64> = (0..cout * cin * k * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..cout).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = conv_forward(&x, &wts, &b, cin, cout, k, w, h);
        for co in 0..cout {
            for r in 0..h as isize {
                for c in 0..w as isize {
                    let mut s = b[co];
                    for ci in 0..cin {
                        for ky in 0..3isize {
                            for kx in 0..3isize {
                                let (rr, cc) = (r + ky - 1, c + kx - 1);
                                if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                                    continue;
                                }
                                s += wts[((co * cin + ci) * 3 + ky as usize) * 3 + kx as usize]
                                    * x[ci * w * h + rr as usize * w + cc as usize];
                            }
                        }
                    }
                    let got = y[co * w * h + r as usize * w + c as usize];
                    assert!((got - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = TinyDenoiser::zeros(DenoiserConfig::global(8, 8, &[4], &[16])).unwrap();
        let cond = ConditionTensor::sketch_only(Grid::new(8, 8, true));
        let out = net.predict(&[0.3; 64], 5, 0.5, &cond);
        assert!(out.iter().all(|&v| v == 0.0));
    }
}
