use serde::{Deserialize, Serialize};

use super::crf;
use crate::datamodel::{SignalMatrix, SignalType};
use crate::error::{Error, Result};
use crate::numerics::seed::derive_seed;
use crate::numerics::{init_params, Axis, Gradients, Graph, NodeId, ParamId, ParamSet, Tensor2};
use crate::tasks::{Label, TaskKind, TaskName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    CrossEntropy,
    Focal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Crf,
    Softmax,
}

impl HeadKind {
    pub fn for_kind(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Sequence => HeadKind::Crf,
            _ => HeadKind::Softmax,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub signal_type: SignalType,
    pub task: TaskName,
    pub hidden: usize,
    pub use_encoder: bool,
    /// Off for the plain recurrent baseline classifier.
    pub use_attention: bool,
    pub loss: LossKind,
    pub focal_gamma: f64,
    pub seed: u64,
}

impl ModelConfig {
    /// Defaults for a task: hidden 20, encoder on, focal loss for the
    /// imbalanced semantic tasks.
    pub fn for_task(task: TaskName, signal_type: SignalType, seed: u64) -> Self {
        Self {
            signal_type,
            task,
            hidden: 20,
            use_encoder: true,
            use_attention: true,
            loss: if task.imbalanced() {
                LossKind::Focal
            } else {
                LossKind::CrossEntropy
            },
            focal_gamma: 2.0,
            seed,
        }
    }
}

/// Sizes fixed when the model is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub d: usize,
    pub n_max: usize,
    pub num_labels: usize,
    pub head: HeadKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct AttentionIds {
    w_att: ParamId,
    b_att: ParamId,
    v: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct LstmIds {
    w_ih: ParamId,
    w_hh: ParamId,
    b: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
enum HeadIds {
    Crf {
        w_s: ParamId,
        b_s: ParamId,
        t: ParamId,
    },
    Softmax {
        w_p: ParamId,
        b_p: ParamId,
    },
}

/// The attention, encoder and head parameters of one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeModel {
    pub config: ModelConfig,
    pub dims: ModelDims,
    pub params: ParamSet,
    attention: Option<AttentionIds>,
    encoder: Option<(LstmIds, LstmIds)>,
    head: HeadIds,
}

/// Graph nodes of interest after building one sentence.
pub struct Built {
    pub graph: Graph,
    pub alpha: Option<NodeId>,
    /// Emissions for the CRF head, class probabilities for softmax.
    pub output: NodeId,
    pub loss: Option<NodeId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    pub alpha: Option<Vec<f64>>,
}

impl BridgeModel {
    pub fn new(config: ModelConfig, dims: ModelDims) -> Result<Self> {
        if dims.d == 0 || dims.n_max == 0 || dims.num_labels == 0 || config.hidden == 0 {
            return Err(Error::Invalid(format!(
                "degenerate model dimensions {dims:?}"
            )));
        }
        if config.focal_gamma < 0.0 {
            return Err(Error::Invalid("focal gamma must be non-negative".into()));
        }
        let mut params = ParamSet::new();
        let mut counter = 0u64;
        let mut draw = |rows: usize, cols: usize| {
            counter += 1;
            init_params(rows, cols, derive_seed(config.seed, &[counter]))
        };
        let (d, h, k) = (dims.d, config.hidden, dims.num_labels);

        let attention = config.use_attention.then(|| AttentionIds {
            w_att: params.add("W_att", draw(d, dims.n_max)),
            b_att: params.add("b_att", Tensor2::zeros(d, 1)),
            v: params.add("v", draw(d, 1)),
        });
        let encoder = config.use_encoder.then(|| {
            let mut lstm = |dir: &str| LstmIds {
                w_ih: params.add(format!("{dir}.W_ih"), draw(d, 4 * h)),
                w_hh: params.add(format!("{dir}.W_hh"), draw(h, 4 * h)),
                b: params.add(format!("{dir}.b"), Tensor2::zeros(1, 4 * h)),
            };
            (lstm("fwd"), lstm("bwd"))
        });
        let feat = if config.use_encoder { 2 * h } else { d };
        let head = match dims.head {
            HeadKind::Crf => HeadIds::Crf {
                w_s: params.add("W_s", draw(feat, k)),
                b_s: params.add("b_s", Tensor2::zeros(1, k)),
                t: params.add("T", draw(k + 1, k)),
            },
            HeadKind::Softmax => HeadIds::Softmax {
                w_p: params.add("W_p", draw(feat, k)),
                b_p: params.add("b_p", Tensor2::zeros(1, k)),
            },
        };
        Ok(Self {
            config,
            dims,
            params,
            attention,
            encoder,
            head,
        })
    }

    fn check_input(&self, x: &SignalMatrix) -> Result<()> {
        if x.dim() != self.dims.d || x.n_max() != self.dims.n_max || x.len == 0 || x.len > x.n_max()
        {
            return Err(Error::Invalid(format!(
                "signal matrix {}x{} (n={}) does not fit model {}x{}",
                x.n_max(),
                x.dim(),
                x.len,
                self.dims.n_max,
                self.dims.d
            )));
        }
        Ok(())
    }

    /// Builds the graph for one sentence; with `label` also the loss node.
    pub fn build(&self, x: &SignalMatrix, label: Option<(&Label, f64)>) -> Result<Built> {
        self.check_input(x)?;
        let n = x.len;
        let mut g = Graph::new();
        let h_in = g.input(0);

        let (alpha, h_att) = match self.attention {
            Some(a) => {
                let (alpha, weighted) = attention_nodes(&mut g, h_in, a);
                (Some(alpha), g.slice_rows(weighted, 0, n))
            }
            None => (None, g.slice_rows(h_in, 0, n)),
        };

        let h_prime = match self.encoder {
            Some((fwd, bwd)) => {
                let f = lstm_nodes(&mut g, h_att, n, self.config.hidden, fwd, false);
                let b = lstm_nodes(&mut g, h_att, n, self.config.hidden, bwd, true);
                g.concat_cols(&[f, b])
            }
            None => h_att,
        };

        let (output, loss) = match self.head {
            HeadIds::Crf { w_s, b_s, t } => {
                let ws = g.param(w_s);
                let bs = g.param(b_s);
                let o = g.matmul(h_prime, ws);
                let o = g.add(o, bs);
                let loss = match label {
                    Some((Label::Sequence(tags), _)) => {
                        Some(self.crf_loss_nodes(&mut g, o, t, tags)?)
                    }
                    Some((Label::Class(_), _)) => {
                        return Err(Error::Invalid("CRF head needs a tag sequence".into()))
                    }
                    None => None,
                };
                (o, loss)
            }
            HeadIds::Softmax { w_p, b_p } => {
                let pooled = g.max_over_rows(h_prime);
                let wp = g.param(w_p);
                let bp = g.param(b_p);
                let z = g.matmul(pooled, wp);
                let z = g.add(z, bp);
                let probs = g.softmax(z, Axis::Row);
                let loss = match label {
                    Some((Label::Class(c), weight)) => {
                        if *c >= self.dims.num_labels {
                            return Err(Error::Invalid(format!("unknown class id {c}")));
                        }
                        let gamma = match self.config.loss {
                            LossKind::Focal => self.config.focal_gamma,
                            LossKind::CrossEntropy => 0.0,
                        };
                        Some(g.focal_loss(probs, *c, gamma, weight))
                    }
                    Some((Label::Sequence(_), _)) => {
                        return Err(Error::Invalid("softmax head needs a class label".into()))
                    }
                    None => None,
                };
                (probs, loss)
            }
        };
        g.forward(&self.params, std::slice::from_ref(&x.h))?;
        Ok(Built {
            graph: g,
            alpha,
            output,
            loss,
        })
    }

    fn crf_loss_nodes(
        &self,
        g: &mut Graph,
        o: NodeId,
        t: ParamId,
        tags: &[usize],
    ) -> Result<NodeId> {
        let k = self.dims.num_labels;
        if let Some(bad) = tags.iter().find(|&&y| y >= k) {
            return Err(Error::Invalid(format!("unknown tag id {bad}")));
        }
        let t_all = g.param(t);
        let t_start = g.slice_rows(t_all, k, 1);
        let t_pairs = g.slice_rows(t_all, 0, k);
        let o0 = g.slice_rows(o, 0, 1);
        let mut alpha = g.add(t_start, o0);
        for step in 1..tags.len() {
            let col = g.transpose(alpha);
            let scores = g.add(t_pairs, col);
            let lse = g.log_sum_exp(scores, Axis::Col);
            let ot = g.slice_rows(o, step, 1);
            alpha = g.add(lse, ot);
        }
        let log_z = g.log_sum_exp(alpha, Axis::Row);
        let emit = g.pick_sum(o, tags.iter().enumerate().map(|(i, &y)| (i, y)).collect());
        let mut prev = k;
        let mut trans = Vec::with_capacity(tags.len());
        for &y in tags {
            trans.push((prev, y));
            prev = y;
        }
        let tr = g.pick_sum(t_all, trans);
        let score = g.add(emit, tr);
        Ok(g.sub(log_z, score))
    }

    /// Loss of one example; gradients are added into `grads`.
    pub fn loss_and_grad(
        &self,
        x: &SignalMatrix,
        label: &Label,
        weight: f64,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let built = self.build(x, Some((label, weight)))?;
        let loss = built.loss.expect("loss requested");
        let value = built.graph.value(loss).expect("forwarded").item();
        built.graph.backward_into(loss, grads)?;
        Ok(value)
    }

    pub fn loss(&self, x: &SignalMatrix, label: &Label, weight: f64) -> Result<f64> {
        let built = self.build(x, Some((label, weight)))?;
        Ok(built
            .graph
            .value(built.loss.expect("loss requested"))
            .expect("forwarded")
            .item())
    }

    pub fn predict(&self, x: &SignalMatrix) -> Result<Prediction> {
        let built = self.build(x, None)?;
        let out = built.graph.value(built.output).expect("forwarded");
        let labels = match self.head {
            HeadIds::Crf { t, .. } => crf::viterbi(out, self.params.get(t)),
            HeadIds::Softmax { .. } => vec![argmax(out.data())],
        };
        let alpha = built
            .alpha
            .map(|a| built.graph.value(a).expect("forwarded").data().to_vec());
        Ok(Prediction { labels, alpha })
    }

    /// Attention weights `alpha` for one sentence.
    pub fn attention(&self, x: &SignalMatrix) -> Result<Option<Vec<f64>>> {
        Ok(self.predict(x)?.alpha)
    }

    /// CRF transition matrix, if this model has a CRF head.
    pub fn transitions(&self) -> Option<&Tensor2> {
        match self.head {
            HeadIds::Crf { t, .. } => Some(self.params.get(t)),
            HeadIds::Softmax { .. } => None,
        }
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.params
            .entries()
            .iter()
            .map(|e| e.name.as_str())
            .collect()
    }
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `alpha = softmax(tanh(W_att·H + b_att)·v)` as a `1×d` row and
/// `H ⊙ alpha` broadcast across rows.
fn attention_nodes(g: &mut Graph, h: NodeId, ids: AttentionIds) -> (NodeId, NodeId) {
    let w = g.param(ids.w_att);
    let b = g.param(ids.b_att);
    let v = g.param(ids.v);
    let m = g.matmul(w, h);
    let m = g.add(m, b);
    let m = g.tanh(m);
    let e = g.matmul(m, v);
    let a = g.softmax(e, Axis::Col);
    let alpha = g.transpose(a);
    let weighted = g.mul(h, alpha);
    (alpha, weighted)
}

/// One LSTM direction over rows `0..n` of `x`; returns the `n×h` states
/// aligned with input positions. Gate order i, f, g, o.
fn lstm_nodes(g: &mut Graph, x: NodeId, n: usize, h: usize, ids: LstmIds, reverse: bool) -> NodeId {
    let w_ih = g.param(ids.w_ih);
    let w_hh = g.param(ids.w_hh);
    let b = g.param(ids.b);
    let xw = g.matmul(x, w_ih);
    let xw = g.add(xw, b);
    let mut states = vec![None; n];
    let mut prev: Option<(NodeId, NodeId)> = None;
    let order: Vec<usize> = if reverse {
        (0..n).rev().collect()
    } else {
        (0..n).collect()
    };
    for t in order {
        let mut z = g.slice_rows(xw, t, 1);
        if let Some((h_prev, _)) = prev {
            let r = g.matmul(h_prev, w_hh);
            z = g.add(z, r);
        }
        let s = g.sigmoid(z);
        let i = g.slice_cols(s, 0, h);
        let f = g.slice_cols(s, h, h);
        let o = g.slice_cols(s, 3 * h, h);
        let zg = g.slice_cols(z, 2 * h, h);
        let gg = g.tanh(zg);
        let mut c = g.mul(i, gg);
        if let Some((_, c_prev)) = prev {
            let keep = g.mul(f, c_prev);
            c = g.add(c, keep);
        }
        let tc = g.tanh(c);
        let h_t = g.mul(o, tc);
        states[t] = Some(h_t);
        prev = Some((h_t, c));
    }
    let states: Vec<NodeId> = states
        .into_iter()
        .map(|s| s.expect("every step visited"))
        .collect();
    g.concat_rows(&states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::SignalType;

    fn matrix(rows: &[&[f64]], n_max: usize) -> SignalMatrix {
        let d = rows[0].len();
        let mut h = Tensor2::zeros(n_max, d);
        for (r, row) in rows.iter().enumerate() {
            h.row_mut(r).copy_from_slice(row);
        }
        SignalMatrix {
            h,
            len: rows.len(),
            signal_type: SignalType::Eeg,
        }
    }

    fn model(use_encoder: bool, head: HeadKind, k: usize, d: usize, n_max: usize) -> BridgeModel {
        let mut cfg = ModelConfig::for_task(TaskName::LD, SignalType::Eeg, 3);
        cfg.use_encoder = use_encoder;
        cfg.hidden = 4;
        BridgeModel::new(
            cfg,
            ModelDims {
                d,
                n_max,
                num_labels: k,
                head,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_v_gives_uniform_alpha() {
        let mut m = model(true, HeadKind::Softmax, 3, 5, 4);
        let v = m.params.id_of("v").unwrap();
        *m.params.get_mut(v) = Tensor2::zeros(5, 1);
        let x = matrix(
            &[&[1.0, -2.0, 0.5, 3.0, 0.1], &[0.3, 0.2, -0.1, 1.0, 2.0]],
            4,
        );
        let alpha = m.attention(&x).unwrap().unwrap();
        assert!(alpha.iter().all(|&a| a == 0.2));
    }

    #[test]
    fn encoder_off_passes_weighted_rows() {
        let m = model(false, HeadKind::Crf, 2, 3, 3);
        let x = matrix(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]], 3);
        let built = m.build(&x, None).unwrap();
        let alpha = built.graph.value(built.alpha.unwrap()).unwrap().clone();
        let o = built.graph.value(built.output).unwrap();
        assert_eq!(o.rows(), 2);
        let ws = m.params.get(m.params.id_of("W_s").unwrap());
        for r in 0..2 {
            for c in 0..2 {
                let expect: f64 = (0..3)
                    .map(|j| x.h.get(r, j) * alpha.get(0, j) * ws.get(j, c))
                    .sum();
                assert!((o.get(r, c) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_input_zero_states() {
        let mut cfg = ModelConfig::for_task(TaskName::LD, SignalType::Eeg, 1);
        cfg.use_attention = false;
        cfg.hidden = 3;
        let m = BridgeModel::new(
            cfg,
            ModelDims {
                d: 2,
                n_max: 4,
                num_labels: 2,
                head: HeadKind::Crf,
            },
        )
        .unwrap();
        let x = matrix(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]], 4);
        let built = m.build(&x, None).unwrap();
        let o = built.graph.value(built.output).unwrap();
        // zero states give emissions equal to the zero bias
        assert!(o.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reversal_swaps_directions() {
        let mut cfg = ModelConfig::for_task(TaskName::LD, SignalType::Eeg, 9);
        cfg.use_attention = false;
        cfg.hidden = 3;
        let mut m = BridgeModel::new(
            cfg,
            ModelDims {
                d: 2,
                n_max: 2,
                num_labels: 2,
                head: HeadKind::Softmax,
            },
        )
        .unwrap();
        for name in ["W_ih", "W_hh"] {
            let f = m.params.id_of(&format!("fwd.{name}")).unwrap();
            let b = m.params.id_of(&format!("bwd.{name}")).unwrap();
            *m.params.get_mut(b) = m.params.get(f).clone();
        }
        let states = |m: &BridgeModel, x: &SignalMatrix| {
            let mut g = Graph::new();
            let h = g.input(0);
            let (fwd, bwd) = m.encoder.unwrap();
            let f = lstm_nodes(&mut g, h, 2, 3, fwd, false);
            let b = lstm_nodes(&mut g, h, 2, 3, bwd, true);
            let hp = g.concat_cols(&[f, b]);
            g.forward(&m.params, std::slice::from_ref(&x.h)).unwrap();
            g.value(hp).unwrap().clone()
        };
        let a = states(&m, &matrix(&[&[0.5, -1.0], &[2.0, 0.3]], 2));
        let r = states(&m, &matrix(&[&[2.0, 0.3], &[0.5, -1.0]], 2));
        for t in 0..2 {
            for j in 0..3 {
                assert!((a.get(t, j) - r.get(1 - t, 3 + j)).abs() < 1e-14);
                assert!((a.get(t, 3 + j) - r.get(1 - t, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn crf_single_step_uniform() {
        let mut m = model(false, HeadKind::Crf, 2, 2, 1);
        for name in ["W_s", "T"] {
            let id = m.params.id_of(name).unwrap();
            let shape = m.params.get(id).shape();
            *m.params.get_mut(id) = Tensor2::zeros(shape.0, shape.1);
        }
        let x = matrix(&[&[0.4, 0.1]], 1);
        let loss = m.loss(&x, &Label::Sequence(vec![1]), 1.0).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        assert!(m.loss(&x, &Label::Sequence(vec![2]), 1.0).is_err());
    }

    #[test]
    fn softmax_zero_params_uniform() {
        let mut m = model(false, HeadKind::Softmax, 4, 3, 2);
        let id = m.params.id_of("W_p").unwrap();
        *m.params.get_mut(id) = Tensor2::zeros(3, 4);
        let x = matrix(&[&[1.0, 2.0, 3.0]], 2);
        let built = m.build(&x, None).unwrap();
        let p = built.graph.value(built.output).unwrap();
        assert!(p.data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }
}
