//! Temporal convolutional network: stacked residual blocks of dilated causal
//! convolutions over a single input channel, with a linear head reading the
//! final time position.
//!
//! Parameters live in one flat `Vec<f64>` with a fixed layout (see
//! [`Tcn::param_count`] and the offset table built in [`Tcn::new`]), which
//! keeps serialization and the optimizer trivial. Gradients are computed by
//! hand-written reverse-mode passes through the same structure.
//!
//! Block `b` uses dilation `2^b` and contains two dilated causal
//! convolutions, each followed by ReLU (and inverted dropout during
//! training), plus an additive skip connection. The skip path is a width-1
//! convolution when the block changes channel count (only block 0 does) and
//! identity otherwise.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TcnConfig {
    /// History length n; the input window holds n+1 values.
    pub input_window_n: usize,
    pub channels: usize,
    pub kernel_size: usize,
    /// Dilation doubles per block: 1, 2, 4, ...
    pub num_blocks: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub dropout_rate: f64,
}

impl Default for TcnConfig {
    fn default() -> Self {
        TcnConfig {
            input_window_n: 32,
            channels: 16,
            kernel_size: 2,
            num_blocks: 4,
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            dropout_rate: 0.0,
        }
    }
}

impl TcnConfig {
    /// Number of past samples that can influence the output.
    pub fn receptive_field(&self) -> usize {
        1 + 2 * (self.kernel_size - 1) * ((1usize << self.num_blocks) - 1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.input_window_n < 1 {
            return Err("input_window_n must be >= 1".into());
        }
        if self.channels < 1 || self.num_blocks < 1 {
            return Err("channels and num_blocks must be >= 1".into());
        }
        if self.kernel_size < 2 {
            return Err("kernel_size must be >= 2".into());
        }
        if self.learning_rate <= 0.0 {
            return Err("learning_rate must be > 0".into());
        }
        if self.epochs < 1 || self.batch_size < 1 {
            return Err("epochs and batch_size must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err("dropout_rate must be in [0, 1)".into());
        }
        Ok(())
    }
}

/// Per-channel z-score statistics learned on training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub input_mean: f64,
    pub input_sd: f64,
    pub target_mean: f64,
    pub target_sd: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Normalization { input_mean: 0.0, input_sd: 1.0, target_mean: 0.0, target_sd: 1.0 }
    }
}

struct BlockLayout {
    in_channels: usize,
    dilation: usize,
    conv1_w: usize,
    conv1_b: usize,
    conv2_w: usize,
    conv2_b: usize,
    /// Offset of the width-1 skip convolution weights; `None` means the skip
    /// path is identity.
    skip_w: Option<usize>,
}

/// Architecture plus parameter layout; owns no parameters itself.
pub struct Tcn {
    pub config: TcnConfig,
    blocks: Vec<BlockLayout>,
    head_w: usize,
    head_b: usize,
    param_count: usize,
    /// Sequence length n + 1.
    len: usize,
}

/// Activations retained for the backward pass, one entry per block.
struct BlockCache {
    input: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
}

pub struct ForwardCache {
    blocks: Vec<BlockCache>,
    /// Final feature map (channels x len).
    features: Vec<f64>,
    /// Inverted-dropout masks used, if any (two per block, same shape as a1/a2).
    masks: Option<Vec<[Vec<f64>; 2]>>,
}

impl Tcn {
    pub fn new(config: TcnConfig) -> Self {
        let c = config.channels;
        let k = config.kernel_size;
        let mut off = 0;
        let mut blocks = Vec::with_capacity(config.num_blocks);
        for b in 0..config.num_blocks {
            let in_channels = if b == 0 { 1 } else { c };
            let conv1_w = off;
            off += c * in_channels * k;
            let conv1_b = off;
            off += c;
            let conv2_w = off;
            off += c * c * k;
            let conv2_b = off;
            off += c;
            let skip_w = if in_channels != c {
                let o = off;
                off += c * in_channels;
                Some(o)
            } else {
                None
            };
            blocks.push(BlockLayout {
                in_channels,
                dilation: 1 << b,
                conv1_w,
                conv1_b,
                conv2_w,
                conv2_b,
                skip_w,
            });
        }
        let head_w = off;
        off += c;
        let head_b = off;
        off += 1;
        let len = config.input_window_n + 1;
        Tcn { config, blocks, head_w, head_b, param_count: off, len }
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn sequence_len(&self) -> usize {
        self.len
    }

    /// Fan-in-scaled uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    pub fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let c = self.config.channels;
        let k = self.config.kernel_size;
        let mut params = vec![0.0; self.param_count];
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, params: &mut Vec<f64>| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut params[range] {
                *p = rng.gen_range(-bound..bound);
            }
        };
        for blk in &self.blocks {
            fill(blk.conv1_w..blk.conv1_w + c * blk.in_channels * k, blk.in_channels * k, &mut params);
            fill(blk.conv1_b..blk.conv1_b + c, blk.in_channels * k, &mut params);
            fill(blk.conv2_w..blk.conv2_w + c * c * k, c * k, &mut params);
            fill(blk.conv2_b..blk.conv2_b + c, c * k, &mut params);
            if let Some(sw) = blk.skip_w {
                fill(sw..sw + c * blk.in_channels, blk.in_channels, &mut params);
            }
        }
        fill(self.head_w..self.head_w + c, c, &mut params);
        fill(self.head_b..self.head_b + 1, c, &mut params);
        params
    }

    /// Inference forward pass over a normalized window; dropout disabled.
    pub fn forward(&self, params: &[f64], window: &[f64]) -> f64 {
        debug_assert_eq!(window.len(), self.len);
        let (y, _) = self.forward_impl(params, window, None);
        y
    }

    /// Training forward pass; retains activations and applies the given
    /// inverted-dropout masks.
    pub fn forward_cached(
        &self,
        params: &[f64],
        window: &[f64],
        masks: Option<Vec<[Vec<f64>; 2]>>,
    ) -> (f64, ForwardCache) {
        let (y, cache) = self.forward_impl(params, window, masks);
        (y, cache.expect("cached forward retains activations"))
    }

    /// Samples fresh inverted-dropout masks for one window.
    pub fn sample_dropout_masks(&self, rng: &mut ChaCha8Rng) -> Option<Vec<[Vec<f64>; 2]>> {
        let p = self.config.dropout_rate;
        if p == 0.0 {
            return None;
        }
        let size = self.config.channels * self.len;
        let scale = 1.0 / (1.0 - p);
        let mut mask = || -> Vec<f64> {
            (0..size)
                .map(|_| if rng.gen::<f64>() < p { 0.0 } else { scale })
                .collect()
        };
        Some((0..self.config.num_blocks).map(|_| [mask(), mask()]).collect())
    }

    fn forward_impl(
        &self,
        params: &[f64],
        window: &[f64],
        masks: Option<Vec<[Vec<f64>; 2]>>,
    ) -> (f64, Option<ForwardCache>) {
        let c = self.config.channels;
        let k = self.config.kernel_size;
        let len = self.len;
        let retain = true;
        let mut block_caches = Vec::with_capacity(self.blocks.len());

        let mut x: Vec<f64> = window.to_vec(); // (in_channels x len), block 0 has 1 channel
        for (bi, blk) in self.blocks.iter().enumerate() {
            let d = blk.dilation;
            let cin = blk.in_channels;

            let mut z1 = vec![0.0; c * len];
            causal_conv(&params[blk.conv1_w..], &params[blk.conv1_b..], &x, &mut z1, c, cin, k, d, len);
            let mut a1: Vec<f64> = z1.iter().map(|&v| v.max(0.0)).collect();
            if let Some(m) = masks.as_ref() {
                for (a, &mv) in a1.iter_mut().zip(&m[bi][0]) {
                    *a *= mv;
                }
            }

            let mut z2 = vec![0.0; c * len];
            causal_conv(&params[blk.conv2_w..], &params[blk.conv2_b..], &a1, &mut z2, c, c, k, d, len);
            let mut a2: Vec<f64> = z2.iter().map(|&v| v.max(0.0)).collect();
            if let Some(m) = masks.as_ref() {
                for (a, &mv) in a2.iter_mut().zip(&m[bi][1]) {
                    *a *= mv;
                }
            }

            let mut out = a2.clone();
            match blk.skip_w {
                Some(sw) => {
                    let w = &params[sw..sw + c * cin];
                    for o in 0..c {
                        for i in 0..cin {
                            let wv = w[o * cin + i];
                            for t in 0..len {
                                out[o * len + t] += wv * x[i * len + t];
                            }
                        }
                    }
                }
                None => {
                    for (o, xi) in out.iter_mut().zip(&x) {
                        *o += xi;
                    }
                }
            }

            if retain {
                block_caches.push(BlockCache { input: x, z1, a1, z2 });
            }
            x = out;
        }

        let head_w = &params[self.head_w..self.head_w + c];
        let mut y = params[self.head_b];
        for ch in 0..c {
            y += head_w[ch] * x[ch * len + (len - 1)];
        }

        let cache = ForwardCache { blocks: block_caches, features: x, masks };
        (y, Some(cache))
    }

    /// Accumulates dLoss/dparams into `grad` given dLoss/dy for one window.
    pub fn backward(&self, params: &[f64], cache: &ForwardCache, dy: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.param_count);
        let c = self.config.channels;
        let k = self.config.kernel_size;
        let len = self.len;

        // head
        let mut dx = vec![0.0; c * len];
        let head_w = &params[self.head_w..self.head_w + c];
        for ch in 0..c {
            grad[self.head_w + ch] += dy * cache.features[ch * len + (len - 1)];
            dx[ch * len + (len - 1)] = dy * head_w[ch];
        }
        grad[self.head_b] += dy;

        for (bi, blk) in self.blocks.iter().enumerate().rev() {
            let bc = &cache.blocks[bi];
            let d = blk.dilation;
            let cin = blk.in_channels;
            let d_out = dx; // gradient w.r.t. block output

            // a2 branch
            let mut dz2: Vec<f64> = d_out.clone();
            if let Some(m) = cache.masks.as_ref() {
                for (g, &mv) in dz2.iter_mut().zip(&m[bi][1]) {
                    *g *= mv;
                }
            }
            for (g, &z) in dz2.iter_mut().zip(&bc.z2) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }

            let mut da1 = vec![0.0; c * len];
            causal_conv_backward(
                &params[blk.conv2_w..],
                &bc.a1,
                &dz2,
                &mut grad[blk.conv2_w..],
                &mut da1,
                c,
                c,
                k,
                d,
                len,
            );
            for o in 0..c {
                let mut s = 0.0;
                for t in 0..len {
                    s += dz2[o * len + t];
                }
                grad[blk.conv2_b + o] += s;
            }

            let mut dz1 = da1;
            if let Some(m) = cache.masks.as_ref() {
                for (g, &mv) in dz1.iter_mut().zip(&m[bi][0]) {
                    *g *= mv;
                }
            }
            for (g, &z) in dz1.iter_mut().zip(&bc.z1) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }

            let mut d_input = vec![0.0; cin * len];
            causal_conv_backward(
                &params[blk.conv1_w..],
                &bc.input,
                &dz1,
                &mut grad[blk.conv1_w..],
                &mut d_input,
                c,
                cin,
                k,
                d,
                len,
            );
            for o in 0..c {
                let mut s = 0.0;
                for t in 0..len {
                    s += dz1[o * len + t];
                }
                grad[blk.conv1_b + o] += s;
            }

            // skip branch
            match blk.skip_w {
                Some(sw) => {
                    for o in 0..c {
                        for i in 0..cin {
                            let mut gw = 0.0;
                            let wv = params[sw + o * cin + i];
                            for t in 0..len {
                                let g = d_out[o * len + t];
                                gw += g * bc.input[i * len + t];
                                d_input[i * len + t] += wv * g;
                            }
                            grad[sw + o * cin + i] += gw;
                        }
                    }
                }
                None => {
                    for (di, &g) in d_input.iter_mut().zip(&d_out) {
                        *di += g;
                    }
                }
            }
            dx = d_input;
        }
    }
}

/// out[o][t] = bias[o] + sum_{i,j} w[o][i][j] * x[i][t - (k-1-j)*d], zero-padded.
#[allow(clippy::too_many_arguments)]
fn causal_conv(
    w: &[f64],
    bias: &[f64],
    x: &[f64],
    out: &mut [f64],
    c_out: usize,
    c_in: usize,
    k: usize,
    d: usize,
    len: usize,
) {
    for o in 0..c_out {
        let row = &mut out[o * len..(o + 1) * len];
        let b = bias[o];
        for v in row.iter_mut() {
            *v = b;
        }
        for i in 0..c_in {
            let xi = &x[i * len..(i + 1) * len];
            for j in 0..k {
                let wv = w[(o * c_in + i) * k + j];
                let shift = (k - 1 - j) * d;
                if shift >= len {
                    continue;
                }
                for t in shift..len {
                    row[t] += wv * xi[t - shift];
                }
            }
        }
    }
}

/// Accumulates weight gradients and input gradients for `causal_conv`.
#[allow(clippy::too_many_arguments)]
fn causal_conv_backward(
    w: &[f64],
    x: &[f64],
    d_out: &[f64],
    grad_w: &mut [f64],
    d_in: &mut [f64],
    c_out: usize,
    c_in: usize,
    k: usize,
    d: usize,
    len: usize,
) {
    for o in 0..c_out {
        let dout_row = &d_out[o * len..(o + 1) * len];
        for i in 0..c_in {
            let xi = &x[i * len..(i + 1) * len];
            let din_row = &mut d_in[i * len..(i + 1) * len];
            for j in 0..k {
                let shift = (k - 1 - j) * d;
                if shift >= len {
                    continue;
                }
                let wv = w[(o * c_in + i) * k + j];
                let mut gw = 0.0;
                for t in shift..len {
                    let g = dout_row[t];
                    gw += g * xi[t - shift];
                    din_row[t - shift] += wv * g;
                }
                grad_w[(o * c_in + i) * k + j] += gw;
            }
        }
    }
}
