use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Normalizer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub n_features: usize,
    pub n_layers: usize,
    pub n_hidden: usize,
    /// Window length L_P.
    pub seq_len: usize,
    pub n_outputs: usize,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.n_layers == 0 || self.n_hidden == 0 || self.seq_len == 0 || self.n_outputs == 0 {
            return Err(Error::InvalidParam {
                name: "network spec",
                reason: format!("all dimensions must be positive: {self:?}"),
            });
        }
        Ok(())
    }

    fn layer_in(&self, l: usize) -> usize {
        if l == 0 {
            self.n_features
        } else {
            self.n_hidden
        }
    }

    /// Offset of layer `l`'s gate weights (4H x (in + H), row major), followed
    /// by its 4H biases. Gate order is input, forget, candidate, output.
    pub fn layer_offset(&self, l: usize) -> usize {
        (0..l).map(|k| self.layer_size(k)).sum()
    }

    fn layer_size(&self, l: usize) -> usize {
        let h = self.n_hidden;
        4 * h * (self.layer_in(l) + h) + 4 * h
    }

    /// Offset of the head weights (n_outputs x H), followed by n_outputs biases.
    pub fn head_offset(&self) -> usize {
        self.layer_offset(self.n_layers)
    }

    pub fn n_params(&self) -> usize {
        self.head_offset() + self.n_outputs * (self.n_hidden + 1)
    }

    pub fn window_len(&self) -> usize {
        self.seq_len * self.n_features
    }
}

/// Stacked LSTM with a linear head on the last hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
    pub in_norm: Normalizer,
    pub out_norm: Normalizer,
}

/// Forward activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Per layer: concatenated [input, h_prev] per step.
    xh: Vec<Vec<f64>>,
    /// Per layer: post-activation gates per step.
    gates: Vec<Vec<f64>>,
    /// Per layer: cell states per step.
    c: Vec<Vec<f64>>,
    tc: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    /// Head output before denormalization.
    pub z: Vec<f64>,
    /// Denormalized output.
    pub y: Vec<f64>,
}

/// Gradients produced by a backward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub params: Option<Vec<f64>>,
    /// Gradient w.r.t. the raw (un-normalized) window.
    pub inputs: Option<Vec<f64>>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl NetworkModel {
    /// Seeded initialization: uniform(±1/√fan_in), forget bias +1, identity
    /// normalizers.
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; spec.n_params()];
        let h = spec.n_hidden;
        for l in 0..spec.n_layers {
            let off = spec.layer_offset(l);
            let cols = spec.layer_in(l) + h;
            let bound = 1.0 / (cols as f64).sqrt();
            for w in &mut params[off..off + 4 * h * cols] {
                *w = rng.gen_range(-bound..bound);
            }
            let b = off + 4 * h * cols;
            for w in &mut params[b + h..b + 2 * h] {
                *w = 1.0;
            }
        }
        let off = spec.head_offset();
        let bound = 1.0 / (h as f64).sqrt();
        for w in &mut params[off..off + spec.n_outputs * h] {
            *w = rng.gen_range(-bound..bound);
        }
        Ok(Self {
            spec,
            params,
            in_norm: Normalizer::identity(spec.n_features),
            out_norm: Normalizer::identity(spec.n_outputs),
        })
    }

    fn check_window(&self, window: &[f64]) -> Result<()> {
        let want = self.spec.window_len();
        if window.len() != want {
            return Err(Error::Shape {
                expected: format!("{} steps x {} features = {want}", self.spec.seq_len, self.spec.n_features),
                given: window.len().to_string(),
            });
        }
        if window.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network window"));
        }
        Ok(())
    }

    pub fn normalize_window(&self, window: &[f64]) -> Vec<f64> {
        let f = self.spec.n_features;
        window
            .iter()
            .enumerate()
            .map(|(k, &x)| self.in_norm.normalize(k % f, x))
            .collect()
    }

    /// Denormalized outputs for a raw window.
    pub fn forward(&self, window: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_tape(window)?.y)
    }

    pub fn forward_tape(&self, window: &[f64]) -> Result<Tape> {
        self.check_window(window)?;
        Ok(self.forward_normalized(self.normalize_window(window)))
    }

    /// Forward pass on an already normalized window.
    pub fn forward_normalized(&self, xn: Vec<f64>) -> Tape {
        let s = &self.spec;
        let (hd, nt, nl) = (s.n_hidden, s.seq_len, s.n_layers);
        let p = &self.params;
        let mut xh_all = Vec::with_capacity(nl);
        let mut gates_all = Vec::with_capacity(nl);
        let mut c_all = Vec::with_capacity(nl);
        let mut tc_all = Vec::with_capacity(nl);
        let mut h_all: Vec<Vec<f64>> = Vec::with_capacity(nl);
        for l in 0..nl {
            let nin = s.layer_in(l);
            let cols = nin + hd;
            let off = s.layer_offset(l);
            let w = &p[off..off + 4 * hd * cols];
            let b = &p[off + 4 * hd * cols..off + 4 * hd * cols + 4 * hd];
            let mut xh = vec![0.0; nt * cols];
            let mut gates = vec![0.0; nt * 4 * hd];
            let mut c = vec![0.0; nt * hd];
            let mut tc = vec![0.0; nt * hd];
            let mut h = vec![0.0; nt * hd];
            for t in 0..nt {
                let row = &mut xh[t * cols..(t + 1) * cols];
                if l == 0 {
                    row[..nin].copy_from_slice(&xn[t * nin..(t + 1) * nin]);
                } else {
                    row[..nin].copy_from_slice(&h_all[l - 1][t * hd..(t + 1) * hd]);
                }
                if t > 0 {
                    row[nin..].copy_from_slice(&h[(t - 1) * hd..t * hd]);
                }
                let g = &mut gates[t * 4 * hd..(t + 1) * 4 * hd];
                for r in 0..4 * hd {
                    let wr = &w[r * cols..(r + 1) * cols];
                    let mut a = b[r];
                    for (wi, xi) in wr.iter().zip(row.iter()) {
                        a += wi * xi;
                    }
                    g[r] = if (2 * hd..3 * hd).contains(&r) { a.tanh() } else { sigmoid(a) };
                }
                for k in 0..hd {
                    let c_prev = if t > 0 { c[(t - 1) * hd + k] } else { 0.0 };
                    let ck = g[hd + k] * c_prev + g[k] * g[2 * hd + k];
                    c[t * hd + k] = ck;
                    let tk = ck.tanh();
                    tc[t * hd + k] = tk;
                    h[t * hd + k] = g[3 * hd + k] * tk;
                }
            }
            xh_all.push(xh);
            gates_all.push(gates);
            c_all.push(c);
            tc_all.push(tc);
            h_all.push(h);
        }
        let last = &h_all[nl - 1][(nt - 1) * hd..nt * hd];
        let off = s.head_offset();
        let z: Vec<f64> = (0..s.n_outputs)
            .map(|o| {
                let wr = &p[off + o * hd..off + (o + 1) * hd];
                p[off + s.n_outputs * hd + o] + wr.iter().zip(last).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        let y = z.iter().enumerate().map(|(o, &v)| self.out_norm.denormalize(o, v)).collect();
        Tape {
            xh: xh_all,
            gates: gates_all,
            c: c_all,
            tc: tc_all,
            h: h_all,
            z,
            y,
        }
    }

    /// Backpropagation through time from `dz`, the upstream gradient on the
    /// normalized head outputs. Input gradients are returned in raw units.
    pub fn backward(&self, tape: &Tape, dz: &[f64], want_params: bool, want_inputs: bool) -> Grads {
        let s = &self.spec;
        let (hd, nt, nl, no) = (s.n_hidden, s.seq_len, s.n_layers, s.n_outputs);
        let p = &self.params;
        let mut gp = if want_params { Some(vec![0.0; p.len()]) } else { None };
        let mut gx = if want_inputs { Some(vec![0.0; nt * s.n_features]) } else { None };

        let head = s.head_offset();
        let last = &tape.h[nl - 1][(nt - 1) * hd..nt * hd];
        if let Some(g) = gp.as_mut() {
            for o in 0..no {
                for k in 0..hd {
                    g[head + o * hd + k] += dz[o] * last[k];
                }
                g[head + no * hd + o] += dz[o];
            }
        }
        // dh carried backwards in time per layer, and from the layer above
        let mut dh_time = vec![vec![0.0; hd]; nl];
        let mut dc_time = vec![vec![0.0; hd]; nl];
        let mut dh_above = vec![vec![0.0; hd]; nl];
        for o in 0..no {
            for k in 0..hd {
                dh_time[nl - 1][k] += dz[o] * p[head + o * hd + k];
            }
        }
        let mut da = vec![0.0; 4 * hd];
        for t in (0..nt).rev() {
            for l in (0..nl).rev() {
                let nin = s.layer_in(l);
                let cols = nin + hd;
                let off = s.layer_offset(l);
                let g = &tape.gates[l][t * 4 * hd..(t + 1) * 4 * hd];
                let tc = &tape.tc[l][t * hd..(t + 1) * hd];
                for k in 0..hd {
                    let dh = dh_time[l][k] + dh_above[l][k];
                    let (ig, fg, gg, og) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
                    let dc = dc_time[l][k] + dh * og * (1.0 - tc[k] * tc[k]);
                    let c_prev = if t > 0 { tape.c[l][(t - 1) * hd + k] } else { 0.0 };
                    da[k] = dc * gg * ig * (1.0 - ig);
                    da[hd + k] = dc * c_prev * fg * (1.0 - fg);
                    da[2 * hd + k] = dc * ig * (1.0 - gg * gg);
                    da[3 * hd + k] = dh * tc[k] * og * (1.0 - og);
                    dc_time[l][k] = dc * fg;
                }
                let xh = &tape.xh[l][t * cols..(t + 1) * cols];
                if let Some(gv) = gp.as_mut() {
                    for r in 0..4 * hd {
                        let d = da[r];
                        if d != 0.0 {
                            let row = &mut gv[off + r * cols..off + (r + 1) * cols];
                            for (gw, x) in row.iter_mut().zip(xh) {
                                *gw += d * x;
                            }
                        }
                        gv[off + 4 * hd * cols + r] += d;
                    }
                }
                let need_below = l > 0 || gx.is_some();
                let mut dxh = vec![0.0; cols];
                for r in 0..4 * hd {
                    let d = da[r];
                    if d == 0.0 {
                        continue;
                    }
                    let wr = &p[off + r * cols..off + (r + 1) * cols];
                    if need_below {
                        for (dx, w) in dxh.iter_mut().zip(wr) {
                            *dx += d * w;
                        }
                    } else {
                        for (dx, w) in dxh[nin..].iter_mut().zip(&wr[nin..]) {
                            *dx += d * w;
                        }
                    }
                }
                dh_time[l].copy_from_slice(&dxh[nin..]);
                if l > 0 {
                    dh_above[l - 1].copy_from_slice(&dxh[..nin]);
                } else if let Some(gxv) = gx.as_mut() {
                    for j in 0..nin {
                        gxv[t * nin + j] = dxh[j] * self.in_norm.scale(j);
                    }
                }
            }
            for v in dh_above.iter_mut() {
                v.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        Grads {
            params: gp,
            inputs: gx,
        }
    }

    /// Gradient of Σ_o upstream_o·y_o with respect to every parameter.
    pub fn backward_params(&self, tape: &Tape, upstream: &[f64]) -> Vec<f64> {
        let dz = self.dz_from_upstream(upstream);
        self.backward(tape, &dz, true, false).params.expect("requested")
    }

    /// Gradient of Σ_o upstream_o·y_o with respect to the raw window.
    pub fn backward_inputs(&self, tape: &Tape, upstream: &[f64]) -> Vec<f64> {
        let dz = self.dz_from_upstream(upstream);
        self.backward(tape, &dz, false, true).inputs.expect("requested")
    }

    fn dz_from_upstream(&self, upstream: &[f64]) -> Vec<f64> {
        upstream
            .iter()
            .enumerate()
            .map(|(o, u)| u * self.out_norm.inv_scale(o))
            .collect()
    }
}

/// Rescales `g` in place to norm at most `max_norm`. Returns the original norm.
pub fn clip_norm(g: &mut [f64], max_norm: f64) -> f64 {
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let k = max_norm / norm;
        g.iter_mut().for_each(|x| *x *= k);
    }
    norm
}

impl NetworkModel {
    /// Same function expressed under different normalizers. A feature may only
    /// become degenerate if it already was.
    pub fn with_normalizers(&self, in_norm: Normalizer, out_norm: Normalizer) -> NetworkModel {
        let s = self.spec;
        let mut m = self.clone();
        let hd = s.n_hidden;
        let nin = s.n_features;
        let cols = nin + hd;
        // layer 0: old z = a_o·x + b_o, new z' = a_n·x + b_n
        let affine = |n: &Normalizer, j: usize| -> (f64, f64) {
            if n.degenerate[j] {
                (0.0, 0.0)
            } else {
                let a = n.scale(j);
                (a, -a * n.min[j] - 1.0)
            }
        };
        let off = s.layer_offset(0);
        let boff = off + 4 * hd * cols;
        for j in 0..nin {
            let (ao, bo) = affine(&self.in_norm, j);
            let (an, bn) = affine(&in_norm, j);
            for r in 0..4 * hd {
                let w = self.params[off + r * cols + j];
                let w_new = if an != 0.0 { w * ao / an } else { w };
                m.params[off + r * cols + j] = w_new;
                m.params[boff + r] += w * bo - w_new * bn;
            }
        }
        let head = s.head_offset();
        for o in 0..s.n_outputs {
            let so = self.out_norm.inv_scale(o);
            let sn = out_norm.inv_scale(o);
            for k in 0..hd {
                m.params[head + o * hd + k] = self.params[head + o * hd + k] * so / sn;
            }
            let bi = head + s.n_outputs * hd + o;
            m.params[bi] = (so * self.params[bi] + self.out_norm.min[o] + so - out_norm.min[o] - sn) / sn;
        }
        m.in_norm = in_norm;
        m.out_norm = out_norm;
        m
    }
}
