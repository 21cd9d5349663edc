use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::encode::{INPUT_LEN, PLANES};
use super::linalg::{matmul, Scalar};
use super::EvalError;
use crate::xiangqi::{FILES, RANKS, SQUARES};

/// Shape of the convolutional policy/value network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Arch {
    /// Channels of every 3×3 trunk layer.
    pub filters: usize,
    /// Number of 3×3 trunk layers.
    pub layers: usize,
    /// Channels of the 1×1 convolution feeding the policy head.
    pub policy_channels: usize,
    /// Width of the value head's hidden layer.
    pub value_hidden: usize,
}

impl Arch {
    /// Desk-scale default: two layers of 32 filters.
    pub fn tiny() -> Arch {
        Arch {
            filters: 32,
            layers: 2,
            policy_channels: 2,
            value_hidden: 32,
        }
    }

    /// 192 filters, 10 layers.
    pub fn full() -> Arch {
        Arch {
            filters: 192,
            layers: 10,
            policy_channels: 2,
            value_hidden: 256,
        }
    }
}

impl Default for Arch {
    fn default() -> Self {
        Arch::tiny()
    }
}

#[derive(Clone, Debug)]
struct Layout {
    /// (weight offset, bias offset, input channels) per trunk layer.
    conv: Vec<(usize, usize, usize)>,
    pconv_w: usize,
    pconv_b: usize,
    pfc_w: usize,
    pfc_b: usize,
    vconv_w: usize,
    vconv_b: usize,
    v1_w: usize,
    v1_b: usize,
    v2_w: usize,
    v2_b: usize,
    total: usize,
}

impl Layout {
    fn new(arch: &Arch, actions: usize) -> Layout {
        let f = arch.filters;
        let pc = arch.policy_channels;
        let h = arch.value_hidden;
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let mut conv = Vec::with_capacity(arch.layers);
        for l in 0..arch.layers {
            let cin = if l == 0 { PLANES } else { f };
            let w = take(f * cin * 9);
            let b = take(f);
            conv.push((w, b, cin));
        }
        let trunk_out = if arch.layers == 0 { PLANES } else { f };
        let pconv_w = take(pc * trunk_out);
        let pconv_b = take(pc);
        let pfc_w = take(actions * pc * SQUARES);
        let pfc_b = take(actions);
        let vconv_w = take(trunk_out);
        let vconv_b = take(1);
        let v1_w = take(h * SQUARES);
        let v1_b = take(h);
        let v2_w = take(h);
        let v2_b = take(1);
        Layout {
            conv,
            pconv_w,
            pconv_b,
            pfc_w,
            pfc_b,
            vconv_w,
            vconv_b,
            v1_w,
            v1_b,
            v2_w,
            v2_b,
            total: at,
        }
    }
}

/// Activations of one forward pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Forward<S> {
    pub batch: usize,
    /// im2col matrix of each trunk layer's input.
    cols: Vec<Vec<S>>,
    /// Network input, channel-major `[14][batch * 90]`.
    input: Vec<S>,
    /// Rectified output of each trunk layer, `[filters][batch * 90]`.
    acts: Vec<Vec<S>>,
    pact: Vec<S>,
    /// Policy features, `[batch][policy_channels * 90]`.
    pfeat: Vec<S>,
    /// Rectified value plane, `[batch][90]`.
    vact: Vec<S>,
    hidden: Vec<S>,
    /// `tanh` outputs, one per batch entry.
    pub values: Vec<S>,
}

impl<S: Scalar> Forward<S> {
    fn trunk_out(&self) -> &[S] {
        self.acts.last().unwrap_or(&self.input)
    }
}

/// Convolutional trunk with a policy head over the action table and a
/// scalar value head, all parameters in one flat vector.
#[derive(Clone, Debug)]
pub struct Network<S> {
    arch: Arch,
    actions: usize,
    layout: Layout,
    params: Vec<S>,
}

fn relu<S: Scalar>(x: &mut [S]) {
    for v in x {
        if *v < S::zero() {
            *v = S::zero();
        }
    }
}

fn im2col<S: Scalar>(input: &[S], cin: usize, batch: usize, cols: &mut [S]) {
    let n = batch * SQUARES;
    for c in 0..cin {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[(c * 9 + ky * 3 + kx) * n..][..n];
                let src = &input[c * n..][..n];
                for b in 0..batch {
                    for r in 0..RANKS {
                        let rr = r as isize + ky as isize - 1;
                        for f in 0..FILES {
                            let ff = f as isize + kx as isize - 1;
                            let dst = b * SQUARES + r * FILES + f;
                            row[dst] = if (0..RANKS as isize).contains(&rr)
                                && (0..FILES as isize).contains(&ff)
                            {
                                src[b * SQUARES + rr as usize * FILES + ff as usize]
                            } else {
                                S::zero()
                            };
                        }
                    }
                }
            }
        }
    }
}

fn col2im<S: Scalar>(cols: &[S], cin: usize, batch: usize, out: &mut [S]) {
    let n = batch * SQUARES;
    out.iter_mut().for_each(|v| *v = S::zero());
    for c in 0..cin {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[(c * 9 + ky * 3 + kx) * n..][..n];
                let dst = &mut out[c * n..][..n];
                for b in 0..batch {
                    for r in 0..RANKS {
                        let rr = r as isize + ky as isize - 1;
                        if !(0..RANKS as isize).contains(&rr) {
                            continue;
                        }
                        for f in 0..FILES {
                            let ff = f as isize + kx as isize - 1;
                            if (0..FILES as isize).contains(&ff) {
                                dst[b * SQUARES + rr as usize * FILES + ff as usize] =
                                    dst[b * SQUARES + rr as usize * FILES + ff as usize]
                                        + row[b * SQUARES + r * FILES + f];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adds `bias[c]` to every column of row `c` of a `rows × n` matrix.
fn add_row_bias<S: Scalar>(m: &mut [S], bias: &[S], n: usize) {
    for (row, &b) in m.chunks_mut(n).zip(bias) {
        row.iter_mut().for_each(|v| *v = *v + b);
    }
}

fn row_sums<S: Scalar>(m: &[S], n: usize, out: &mut [S]) {
    for (row, o) in m.chunks(n).zip(out.iter_mut()) {
        *o = row.iter().fold(S::zero(), |a, &b| a + b);
    }
}

fn mask_relu<S: Scalar>(grad: &mut [S], act: &[S]) {
    for (g, &a) in grad.iter_mut().zip(act) {
        if a <= S::zero() {
            *g = S::zero();
        }
    }
}

impl<S: Scalar> Network<S> {
    /// He-initialised trunk; the last policy layer and the last value layer
    /// start at zero so a fresh network is uniform over legal moves with
    /// value 0.
    pub fn new<R: Rng + ?Sized>(arch: Arch, actions: usize, rng: &mut R) -> Network<S> {
        let layout = Layout::new(&arch, actions);
        let mut params = vec![S::zero(); layout.total];
        let mut he = |offset: usize, count: usize, fan_in: usize| {
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            for p in &mut params[offset..offset + count] {
                *p = S::from_f64(normal.sample(rng));
            }
        };
        for &(w, _, cin) in &layout.conv {
            he(w, arch.filters * cin * 9, cin * 9);
        }
        let trunk_out = if arch.layers == 0 { PLANES } else { arch.filters };
        he(layout.pconv_w, arch.policy_channels * trunk_out, trunk_out);
        he(layout.vconv_w, trunk_out, trunk_out);
        he(layout.v1_w, arch.value_hidden * SQUARES, SQUARES);
        Network {
            arch,
            actions,
            layout,
            params,
        }
    }

    pub fn from_params(arch: Arch, actions: usize, params: Vec<S>) -> Result<Network<S>, EvalError> {
        let layout = Layout::new(&arch, actions);
        if params.len() != layout.total {
            return Err(EvalError::Shape(format!(
                "expected {} parameters for {arch:?}, got {}",
                layout.total,
                params.len()
            )));
        }
        Ok(Network {
            arch,
            actions,
            layout,
            params,
        })
    }

    pub fn parameter_count(arch: &Arch, actions: usize) -> usize {
        Layout::new(arch, actions).total
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [S] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<S> {
        self.params
    }

    pub fn squared_norm(&self) -> S {
        self.params.iter().fold(S::zero(), |a, &p| a + p * p)
    }

    fn slice(&self, offset: usize, len: usize) -> &[S] {
        &self.params[offset..offset + len]
    }

    /// Runs the trunk and both heads on `batch` inputs laid out
    /// `[batch][14][90]`. Policy logits are computed separately.
    pub fn forward(&self, inputs: &[S], batch: usize) -> Forward<S> {
        assert_eq!(inputs.len(), batch * INPUT_LEN, "input shape");
        let n = batch * SQUARES;
        let f = self.arch.filters;
        let pc = self.arch.policy_channels;
        let h = self.arch.value_hidden;
        let l = &self.layout;

        let mut input = vec![S::zero(); PLANES * n];
        for b in 0..batch {
            for c in 0..PLANES {
                input[c * n + b * SQUARES..][..SQUARES]
                    .copy_from_slice(&inputs[b * INPUT_LEN + c * SQUARES..][..SQUARES]);
            }
        }

        let mut cols = Vec::with_capacity(self.arch.layers);
        let mut acts: Vec<Vec<S>> = Vec::with_capacity(self.arch.layers);
        for &(w, bias, cin) in &l.conv {
            let x = acts.last().unwrap_or(&input);
            let mut col = vec![S::zero(); cin * 9 * n];
            im2col(x, cin, batch, &mut col);
            let mut out = vec![S::zero(); f * n];
            matmul(self.slice(w, f * cin * 9), false, &col, false, &mut out, f, cin * 9, n, false);
            add_row_bias(&mut out, self.slice(bias, f), n);
            relu(&mut out);
            cols.push(col);
            acts.push(out);
        }
        let x = acts.last().unwrap_or(&input);
        let cx = if self.arch.layers == 0 { PLANES } else { f };

        let mut pact = vec![S::zero(); pc * n];
        matmul(self.slice(l.pconv_w, pc * cx), false, x, false, &mut pact, pc, cx, n, false);
        add_row_bias(&mut pact, self.slice(l.pconv_b, pc), n);
        relu(&mut pact);
        let mut pfeat = vec![S::zero(); batch * pc * SQUARES];
        for b in 0..batch {
            for c in 0..pc {
                pfeat[b * pc * SQUARES + c * SQUARES..][..SQUARES]
                    .copy_from_slice(&pact[c * n + b * SQUARES..][..SQUARES]);
            }
        }

        let mut vact = vec![S::zero(); n];
        matmul(self.slice(l.vconv_w, cx), false, x, false, &mut vact, 1, cx, n, false);
        let vb = self.params[l.vconv_b];
        vact.iter_mut().for_each(|v| *v = *v + vb);
        relu(&mut vact);

        let mut hidden = vec![S::zero(); batch * h];
        matmul(&vact, false, self.slice(l.v1_w, h * SQUARES), true, &mut hidden, batch, SQUARES, h, false);
        let b1 = self.slice(l.v1_b, h);
        for row in hidden.chunks_mut(h) {
            for (v, &b) in row.iter_mut().zip(b1) {
                *v = *v + b;
            }
        }
        relu(&mut hidden);
        let w2 = self.slice(l.v2_w, h);
        let b2 = self.params[l.v2_b];
        let values = hidden
            .chunks(h)
            .map(|row| {
                let u = row.iter().zip(w2).fold(b2, |a, (&x, &w)| a + x * w);
                u.tanh()
            })
            .collect();

        Forward {
            batch,
            cols,
            input,
            acts,
            pact,
            pfeat,
            vact,
            hidden,
            values,
        }
    }

    /// Policy logits of batch entry `b` for the listed action indices only.
    pub fn logits_for(&self, fw: &Forward<S>, b: usize, actions: &[u16]) -> Vec<S> {
        let width = self.arch.policy_channels * SQUARES;
        let feat = &fw.pfeat[b * width..][..width];
        actions
            .iter()
            .map(|&a| {
                let a = a as usize;
                let w = self.slice(self.layout.pfc_w + a * width, width);
                feat.iter().zip(w).fold(self.params[self.layout.pfc_b + a], |acc, (&x, &w)| {
                    acc + x * w
                })
            })
            .collect()
    }

    /// Masked softmax over `legal` and the value, for a single input.
    pub fn evaluate(&self, input: &[S], legal: &[u16]) -> Result<(Vec<S>, S), EvalError> {
        if input.len() != INPUT_LEN {
            return Err(EvalError::Shape(format!(
                "input has {} entries, expected {INPUT_LEN}",
                input.len()
            )));
        }
        if let Some(&bad) = legal.iter().find(|&&a| a as usize >= self.actions) {
            return Err(EvalError::Shape(format!(
                "action index {bad} outside table of {}",
                self.actions
            )));
        }
        let fw = self.forward(input, 1);
        let logits = self.logits_for(&fw, 0, legal);
        Ok((softmax(&logits), fw.values[0]))
    }

    /// Gradient of the parameters given the gradient of the full logit
    /// matrix `[batch][actions]` and of the pre-`tanh` value outputs.
    pub fn backward(&self, fw: &Forward<S>, dlogits: &[S], du: &[S]) -> Vec<S> {
        let batch = fw.batch;
        let n = batch * SQUARES;
        let f = self.arch.filters;
        let pc = self.arch.policy_channels;
        let h = self.arch.value_hidden;
        let a = self.actions;
        let l = &self.layout;
        let width = pc * SQUARES;
        assert_eq!(dlogits.len(), batch * a);
        assert_eq!(du.len(), batch);
        let mut g = vec![S::zero(); self.params.len()];
        let x = fw.trunk_out();
        let cx = if self.arch.layers == 0 { PLANES } else { f };

        // Value head.
        let w2 = self.slice(l.v2_w, h);
        let mut dhidden = vec![S::zero(); batch * h];
        for b in 0..batch {
            let hrow = &fw.hidden[b * h..][..h];
            for j in 0..h {
                g[l.v2_w + j] = g[l.v2_w + j] + du[b] * hrow[j];
                if hrow[j] > S::zero() {
                    dhidden[b * h + j] = du[b] * w2[j];
                }
            }
            g[l.v2_b] = g[l.v2_b] + du[b];
        }
        matmul(&dhidden, true, &fw.vact, false, &mut g[l.v1_w..l.v1_w + h * SQUARES], h, batch, SQUARES, false);
        for b in 0..batch {
            for j in 0..h {
                g[l.v1_b + j] = g[l.v1_b + j] + dhidden[b * h + j];
            }
        }
        let mut dvact = vec![S::zero(); n];
        matmul(&dhidden, false, self.slice(l.v1_w, h * SQUARES), false, &mut dvact, batch, h, SQUARES, false);
        mask_relu(&mut dvact, &fw.vact);
        matmul(&dvact, false, x, true, &mut g[l.vconv_w..l.vconv_w + cx], 1, n, cx, false);
        g[l.vconv_b] = dvact.iter().fold(S::zero(), |acc, &v| acc + v);
        let mut dx = vec![S::zero(); cx * n];
        matmul(self.slice(l.vconv_w, cx), true, &dvact, false, &mut dx, cx, 1, n, false);

        // Policy head.
        matmul(dlogits, true, &fw.pfeat, false, &mut g[l.pfc_w..l.pfc_w + a * width], a, batch, width, false);
        for b in 0..batch {
            for j in 0..a {
                g[l.pfc_b + j] = g[l.pfc_b + j] + dlogits[b * a + j];
            }
        }
        let mut dpfeat = vec![S::zero(); batch * width];
        matmul(dlogits, false, self.slice(l.pfc_w, a * width), false, &mut dpfeat, batch, a, width, false);
        let mut dpact = vec![S::zero(); pc * n];
        for b in 0..batch {
            for c in 0..pc {
                dpact[c * n + b * SQUARES..][..SQUARES]
                    .copy_from_slice(&dpfeat[b * width + c * SQUARES..][..SQUARES]);
            }
        }
        mask_relu(&mut dpact, &fw.pact);
        matmul(&dpact, false, x, true, &mut g[l.pconv_w..l.pconv_w + pc * cx], pc, n, cx, false);
        row_sums(&dpact, n, &mut g[l.pconv_b..l.pconv_b + pc]);
        matmul(self.slice(l.pconv_w, pc * cx), true, &dpact, false, &mut dx, cx, pc, n, true);

        // Trunk.
        for (layer, &(w, bias, cin)) in l.conv.iter().enumerate().rev() {
            mask_relu(&mut dx, &fw.acts[layer]);
            let k = cin * 9;
            matmul(&dx, false, &fw.cols[layer], true, &mut g[w..w + f * k], f, n, k, false);
            row_sums(&dx, n, &mut g[bias..bias + f]);
            if layer > 0 {
                let mut dcols = vec![S::zero(); k * n];
                matmul(self.slice(w, f * k), true, &dx, false, &mut dcols, k, f, n, false);
                let mut prev = vec![S::zero(); cin * n];
                col2im(&dcols, cin, batch, &mut prev);
                dx = prev;
            }
        }
        g
    }
}

/// Softmax with the maximum subtracted first.
pub fn softmax<S: Scalar>(logits: &[S]) -> Vec<S> {
    if logits.is_empty() {
        return Vec::new();
    }
    let max = logits.iter().fold(S::neg_infinity(), |a, &b| a.max(b));
    let exps: Vec<S> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum = exps.iter().fold(S::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresh_network_is_uniform_with_zero_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net: Network<f32> = Network::new(Arch::tiny(), 50, &mut rng);
        let input: Vec<f32> = (0..INPUT_LEN).map(|i| (i % 3 == 0) as u8 as f32).collect();
        let (p, v) = net.evaluate(&input, &[3, 7, 11, 40]).unwrap();
        assert_eq!(v, 0.0);
        for x in p {
            assert!((x - 0.25).abs() < 1e-7);
        }
    }

    #[test]
    fn col2im_is_the_adjoint_of_im2col() {
        let batch = 2;
        let cin = 3;
        let n = batch * SQUARES;
        let x: Vec<f64> = (0..cin * n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let y: Vec<f64> = (0..cin * 9 * n).map(|i| ((i * 104729) % 11) as f64 - 5.0).collect();
        let mut cols = vec![0.0; cin * 9 * n];
        im2col(&x, cin, batch, &mut cols);
        let mut back = vec![0.0; cin * n];
        col2im(&y, cin, batch, &mut back);
        let lhs: f64 = cols.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&back).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn shape_errors_are_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net: Network<f32> = Network::new(Arch::tiny(), 10, &mut rng);
        assert!(net.evaluate(&[0.0; 5], &[0]).is_err());
        assert!(net.evaluate(&vec![0.0; INPUT_LEN], &[10]).is_err());
        assert!(Network::<f32>::from_params(Arch::tiny(), 10, vec![0.0; 3]).is_err());
    }
}
