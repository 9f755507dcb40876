//! Graph embedding and the state-action value readout.
//!
//! Vertices get p-dimensional embeddings from `T` synchronous rounds of
//!
//! ```text
//! mu_v <- relu(theta1*x_v + theta2*sum_{u in N(v)} mu_u
//!              + theta3*sum_{u in N(v)} relu(theta4*w(v,u)))
//! ```
//!
//! starting from zero, and the value of picking vertex `v` in the embedded
//! state is `Q = theta5 . relu(concat(theta6*pooled, theta7*mu_v))` with
//! `pooled = sum_u mu_u`. Gradients are computed by hand-rolled
//! backpropagation through the unrolled rounds and verified against finite
//! differences in the test suite.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envs::VertexView;
use crate::{Error, Result};

/// Width of the per-vertex feature vector `x_v`.
pub const FEATURE_WIDTH: usize = 7;

/// The learnable parameter bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingParams {
    /// Embedding width `p`.
    pub p: usize,
    /// Message-passing rounds `T`.
    pub rounds: usize,
    pub theta1: Array2<f64>,
    pub theta2: Array2<f64>,
    pub theta3: Array2<f64>,
    pub theta4: Array1<f64>,
    pub theta5: Array1<f64>,
    pub theta6: Array2<f64>,
    pub theta7: Array2<f64>,
}

impl EmbeddingParams {
    /// Uniform init in `[-1/sqrt(p), 1/sqrt(p)]`, deterministic per seed.
    /// The width scaling keeps the per-vertex readout branch trainable
    /// under plain SGD; smaller inits leave its gradients numerically dead.
    pub fn init(p: usize, rounds: usize, seed: u64) -> Self {
        let scale = 1.0 / (p as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mat = |r: usize, c: usize| {
            Array2::from_shape_fn((r, c), |_| rng.gen_range(-scale..=scale))
        };
        let theta1 = mat(p, FEATURE_WIDTH);
        let theta2 = mat(p, p);
        let theta3 = mat(p, p);
        let theta6 = mat(p, p);
        let theta7 = mat(p, p);
        let mut rng4 = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let theta4 = Array1::from_shape_fn(p, |_| rng4.gen_range(-scale..=scale));
        let theta5 = Array1::from_shape_fn(2 * p, |_| rng4.gen_range(-scale..=scale));
        EmbeddingParams {
            p,
            rounds,
            theta1,
            theta2,
            theta3,
            theta4,
            theta5,
            theta6,
            theta7,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.iter().all(|x| x.is_finite())
            && self.theta2.iter().all(|x| x.is_finite())
            && self.theta3.iter().all(|x| x.is_finite())
            && self.theta4.iter().all(|x| x.is_finite())
            && self.theta5.iter().all(|x| x.is_finite())
            && self.theta6.iter().all(|x| x.is_finite())
            && self.theta7.iter().all(|x| x.is_finite())
    }

    /// `theta -= lr * grad`, one plain SGD step.
    pub fn apply_gradient(&mut self, grads: &ParamGrads, lr: f64) {
        self.theta1.scaled_add(-lr, &grads.theta1);
        self.theta2.scaled_add(-lr, &grads.theta2);
        self.theta3.scaled_add(-lr, &grads.theta3);
        self.theta4.scaled_add(-lr, &grads.theta4);
        self.theta5.scaled_add(-lr, &grads.theta5);
        self.theta6.scaled_add(-lr, &grads.theta6);
        self.theta7.scaled_add(-lr, &grads.theta7);
    }

    /// Versioned text checkpoint: `theta<k> rows cols` headers with
    /// row-major values.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "wrsn-params v1 p={} t={} dx={}\n",
            self.p, self.rounds, FEATURE_WIDTH
        );
        let mut dump2 = |name: &str, m: &Array2<f64>| {
            out.push_str(&format!("{} {} {}\n", name, m.nrows(), m.ncols()));
            for row in m.rows() {
                let vals: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                out.push_str(&vals.join(" "));
                out.push('\n');
            }
        };
        dump2("theta1", &self.theta1);
        dump2("theta2", &self.theta2);
        dump2("theta3", &self.theta3);
        let dump1 = |out: &mut String, name: &str, v: &Array1<f64>| {
            out.push_str(&format!("{} {} 1\n", name, v.len()));
            for x in v.iter() {
                out.push_str(&format!("{x:?}\n"));
            }
        };
        dump1(&mut out, "theta4", &self.theta4);
        dump1(&mut out, "theta5", &self.theta5);
        let mut dump2b = |name: &str, m: &Array2<f64>| {
            out.push_str(&format!("{} {} {}\n", name, m.nrows(), m.ncols()));
            for row in m.rows() {
                let vals: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                out.push_str(&vals.join(" "));
                out.push('\n');
            }
        };
        dump2b("theta6", &self.theta6);
        dump2b("theta7", &self.theta7);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty checkpoint".into(),
        })?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() < 4 || tokens[0] != "wrsn-params" || tokens[1] != "v1" {
            return Err(Error::Parse {
                line: line_no,
                msg: "expected header `wrsn-params v1 p=<p> t=<T> dx=<d>`".into(),
            });
        }
        let field = |prefix: &str| -> Result<usize> {
            tokens
                .iter()
                .find_map(|t| t.strip_prefix(prefix))
                .and_then(|v| v.parse().ok())
                .ok_or(Error::Parse {
                    line: line_no,
                    msg: format!("missing `{prefix}<int>` in header"),
                })
        };
        let p = field("p=")?;
        let rounds = field("t=")?;
        let dx = field("dx=")?;
        if dx != FEATURE_WIDTH {
            return Err(Error::Validation(format!(
                "checkpoint feature width {dx} does not match build ({FEATURE_WIDTH})"
            )));
        }

        let mut read_block = |name: &str| -> Result<Array2<f64>> {
            let (line_no, header) = lines.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("missing `{name}` block"),
            })?;
            let toks: Vec<&str> = header.split_whitespace().collect();
            if toks.len() != 3 || toks[0] != name {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `{name} rows cols`, got `{header}`"),
                });
            }
            let rows: usize = toks[1].parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: "bad row count".into(),
            })?;
            let cols: usize = toks[2].parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: "bad col count".into(),
            })?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (line_no, line) = lines.next().ok_or(Error::Parse {
                    line: 0,
                    msg: format!("truncated `{name}` block"),
                })?;
                for tok in line.split_whitespace() {
                    data.push(tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad value `{tok}`"),
                    })?);
                }
            }
            Array2::from_shape_vec((rows, cols), data).map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("wrong number of values in `{name}`"),
            })
        };

        let theta1 = read_block("theta1")?;
        let theta2 = read_block("theta2")?;
        let theta3 = read_block("theta3")?;
        let theta4 = read_block("theta4")?.into_raw_vec_and_offset().0;
        let theta5 = read_block("theta5")?.into_raw_vec_and_offset().0;
        let theta6 = read_block("theta6")?;
        let theta7 = read_block("theta7")?;
        Ok(EmbeddingParams {
            p,
            rounds,
            theta1,
            theta2,
            theta3,
            theta4: Array1::from_vec(theta4),
            theta5: Array1::from_vec(theta5),
            theta6,
            theta7,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub theta1: Array2<f64>,
    pub theta2: Array2<f64>,
    pub theta3: Array2<f64>,
    pub theta4: Array1<f64>,
    pub theta5: Array1<f64>,
    pub theta6: Array2<f64>,
    pub theta7: Array2<f64>,
}

impl ParamGrads {
    pub fn zeros(params: &EmbeddingParams) -> Self {
        ParamGrads {
            theta1: Array2::zeros(params.theta1.raw_dim()),
            theta2: Array2::zeros(params.theta2.raw_dim()),
            theta3: Array2::zeros(params.theta3.raw_dim()),
            theta4: Array1::zeros(params.theta4.raw_dim()),
            theta5: Array1::zeros(params.theta5.raw_dim()),
            theta6: Array2::zeros(params.theta6.raw_dim()),
            theta7: Array2::zeros(params.theta7.raw_dim()),
        }
    }

    /// Rescale so the global L2 norm does not exceed `bound`.
    pub fn clip_norm(&mut self, bound: f64) {
        let sq: f64 = self.theta1.iter().map(|x| x * x).sum::<f64>()
            + self.theta2.iter().map(|x| x * x).sum::<f64>()
            + self.theta3.iter().map(|x| x * x).sum::<f64>()
            + self.theta4.iter().map(|x| x * x).sum::<f64>()
            + self.theta5.iter().map(|x| x * x).sum::<f64>()
            + self.theta6.iter().map(|x| x * x).sum::<f64>()
            + self.theta7.iter().map(|x| x * x).sum::<f64>();
        let norm = sq.sqrt();
        if norm > bound && norm > 0.0 {
            let factor = bound / norm;
            self.theta1 *= factor;
            self.theta2 *= factor;
            self.theta3 *= factor;
            self.theta4 *= factor;
            self.theta5 *= factor;
            self.theta6 *= factor;
            self.theta7 *= factor;
        }
    }

    fn scaled_add(&mut self, factor: f64, other: &ParamGrads) {
        self.theta1.scaled_add(factor, &other.theta1);
        self.theta2.scaled_add(factor, &other.theta2);
        self.theta3.scaled_add(factor, &other.theta3);
        self.theta4.scaled_add(factor, &other.theta4);
        self.theta5.scaled_add(factor, &other.theta5);
        self.theta6.scaled_add(factor, &other.theta6);
        self.theta7.scaled_add(factor, &other.theta7);
    }
}

/// Feature matrix (`n x d_x`) from per-vertex views; all entries in [-1, 1].
pub fn features_from_views(views: &[VertexView]) -> Array2<f64> {
    let mut x = Array2::zeros((views.len(), FEATURE_WIDTH));
    for (i, view) in views.iter().enumerate() {
        x[(i, 0)] = if view.selected { 1.0 } else { 0.0 };
        x[(i, 1)] = view.pos_frac.0;
        x[(i, 2)] = view.pos_frac.1;
        x[(i, 3)] = view.residual_frac;
        x[(i, 4)] = view.extra;
        x[(i, 5)] = view.head_dist_frac;
        x[(i, 6)] = view.acquisition;
    }
    x
}

/// Embedded graph with the intermediates backprop needs.
pub struct Embedding {
    /// Final vertex embeddings, `n x p`.
    pub mu: Array2<f64>,
    /// `sum_v mu_v`.
    pub pooled: Array1<f64>,
    features: Array2<f64>,
    /// Incoming edges per vertex: `(src, weight)`.
    incoming: Vec<Vec<(usize, f64)>>,
    /// Pre-activations per round, `n x p` each.
    z: Vec<Array2<f64>>,
    /// Neighbor sums fed into each round, `n x p` each.
    neighbor_sums: Vec<Array2<f64>>,
    /// Edge-message matrix `M` (constant across rounds), `n x p`.
    msg: Array2<f64>,
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn relu_prime(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Run `T` rounds of message passing over directed edges `(src, dst, w)`.
pub fn embed_graph(
    features: &Array2<f64>,
    edges: &[(usize, usize, f64)],
    params: &EmbeddingParams,
) -> Embedding {
    let n = features.nrows();
    let p = params.p;
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(src, dst, w) in edges {
        incoming[dst].push((src, w));
    }

    // M_v = sum over incoming edges of relu(theta4 * w); independent of mu.
    let mut msg = Array2::zeros((n, p));
    for v in 0..n {
        for &(_, w) in &incoming[v] {
            for j in 0..p {
                msg[(v, j)] += relu(params.theta4[j] * w);
            }
        }
    }

    let mut mu = Array2::zeros((n, p));
    let mut z_rounds = Vec::with_capacity(params.rounds);
    let mut sum_rounds = Vec::with_capacity(params.rounds);
    for _ in 0..params.rounds {
        let mut neighbor_sum = Array2::zeros((n, p));
        for v in 0..n {
            for &(u, _) in &incoming[v] {
                for j in 0..p {
                    neighbor_sum[(v, j)] += mu[(u, j)];
                }
            }
        }
        // z = X theta1^T + S theta2^T + M theta3^T, row per vertex.
        let z = features.dot(&params.theta1.t())
            + neighbor_sum.dot(&params.theta2.t())
            + msg.dot(&params.theta3.t());
        mu = z.mapv(relu);
        z_rounds.push(z);
        sum_rounds.push(neighbor_sum);
    }
    let pooled = mu.sum_axis(ndarray::Axis(0));
    Embedding {
        mu,
        pooled,
        features: features.clone(),
        incoming,
        z: z_rounds,
        neighbor_sums: sum_rounds,
        msg,
    }
}

/// `Q(s, v) = theta5 . relu(concat(theta6*pooled, theta7*mu_v))`.
pub fn q_value(embedding: &Embedding, vertex: usize, params: &EmbeddingParams) -> f64 {
    let p = params.p;
    let left = params.theta6.dot(&embedding.pooled);
    let mu_v = embedding.mu.row(vertex).to_owned();
    let right = params.theta7.dot(&mu_v);
    let mut q = 0.0;
    for j in 0..p {
        q += params.theta5[j] * relu(left[j]);
        q += params.theta5[p + j] * relu(right[j]);
    }
    q
}

/// Q plus `dQ/dtheta` for one (state, vertex) pair.
pub fn q_value_with_grad(
    embedding: &Embedding,
    vertex: usize,
    params: &EmbeddingParams,
) -> (f64, ParamGrads) {
    let n = embedding.mu.nrows();
    let p = params.p;
    let mut grads = ParamGrads::zeros(params);

    let left = params.theta6.dot(&embedding.pooled);
    let mu_v = embedding.mu.row(vertex).to_owned();
    let right = params.theta7.dot(&mu_v);
    let mut q = 0.0;
    for j in 0..p {
        q += params.theta5[j] * relu(left[j]);
        q += params.theta5[p + j] * relu(right[j]);
    }

    // Readout backward.
    for j in 0..p {
        grads.theta5[j] = relu(left[j]);
        grads.theta5[p + j] = relu(right[j]);
    }
    let dleft =
        Array1::from_shape_fn(p, |j| params.theta5[j] * relu_prime(left[j]));
    let dright =
        Array1::from_shape_fn(p, |j| params.theta5[p + j] * relu_prime(right[j]));
    for i in 0..p {
        for j in 0..p {
            grads.theta6[(i, j)] += dleft[i] * embedding.pooled[j];
            grads.theta7[(i, j)] += dright[i] * mu_v[j];
        }
    }
    let dpooled = params.theta6.t().dot(&dleft);
    let dmu_v = params.theta7.t().dot(&dright);

    // Seed dMu at the last round: pooling spreads dpooled to every vertex.
    let mut dmu = Array2::from_shape_fn((n, p), |(_, j)| dpooled[j]);
    for j in 0..p {
        dmu[(vertex, j)] += dmu_v[j];
    }

    let mut dmsg: Array2<f64> = Array2::zeros((n, p));
    for t in (0..params.rounds).rev() {
        let z = &embedding.z[t];
        let dz = Array2::from_shape_fn((n, p), |(v, j)| dmu[(v, j)] * relu_prime(z[(v, j)]));
        grads.theta1 = grads.theta1 + dz.t().dot(&embedding.features);
        grads.theta2 = grads.theta2 + dz.t().dot(&embedding.neighbor_sums[t]);
        grads.theta3 = grads.theta3 + dz.t().dot(&embedding.msg);
        dmsg = dmsg + dz.dot(&params.theta3);
        // dS = dz theta2; dmu^{t-1}_u = sum over edges u->v of dS_v.
        if t > 0 {
            let ds = dz.dot(&params.theta2);
            let mut prev = Array2::zeros((n, p));
            for v in 0..n {
                for &(u, _) in &embedding.incoming[v] {
                    for j in 0..p {
                        prev[(u, j)] += ds[(v, j)];
                    }
                }
            }
            dmu = prev;
        }
    }

    // M_v = sum relu(theta4 * w) over incoming edges.
    for v in 0..n {
        for &(_, w) in &embedding.incoming[v] {
            for j in 0..p {
                grads.theta4[j] += dmsg[(v, j)] * relu_prime(params.theta4[j] * w) * w;
            }
        }
    }

    (q, grads)
}

/// One training sample: the embedded inputs, the acted vertex, the target.
pub struct LossSample<'a> {
    pub features: &'a Array2<f64>,
    pub edges: &'a [(usize, usize, f64)],
    pub vertex: usize,
    pub target: f64,
}

/// Mean squared loss `1/B * sum (y - Q)^2` with its parameter gradients;
/// targets are constants.
pub fn batch_loss_and_grads(
    samples: &[LossSample<'_>],
    params: &EmbeddingParams,
) -> (f64, ParamGrads) {
    let mut total = ParamGrads::zeros(params);
    let mut loss = 0.0;
    let scale = 1.0 / samples.len().max(1) as f64;
    for sample in samples {
        let embedding = embed_graph(sample.features, sample.edges, params);
        let (q, dq) = q_value_with_grad(&embedding, sample.vertex, params);
        let err = q - sample.target;
        loss += err * err * scale;
        total.scaled_add(2.0 * err * scale, &dq);
    }
    (loss, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny_params() -> EmbeddingParams {
        EmbeddingParams {
            p: 2,
            rounds: 1,
            theta1: array![
                [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
            ],
            theta2: array![[1.0, 1.0], [0.0, 1.0]],
            theta3: array![[1.0, 0.0], [0.0, 1.0]],
            theta4: array![2.0, -1.0],
            theta5: array![1.0, 2.0, 3.0, 4.0],
            theta6: array![[1.0, 0.0], [1.0, 1.0]],
            theta7: array![[0.0, 1.0], [1.0, 0.0]],
        }
    }

    fn two_vertex_features() -> Array2<f64> {
        let mut x = Array2::zeros((2, FEATURE_WIDTH));
        x[(0, 0)] = 1.0;
        x[(1, 1)] = 1.0;
        x
    }

    #[test]
    fn no_edges_and_zero_features_give_zero_embeddings() {
        let params = EmbeddingParams::init(4, 3, 1);
        let features = Array2::zeros((5, FEATURE_WIDTH));
        let embedding = embed_graph(&features, &[], &params);
        assert!(embedding.mu.iter().all(|&x| x == 0.0));
        // Identical features give identical embeddings even with nonzero x.
        let mut features = Array2::zeros((5, FEATURE_WIDTH));
        features.fill(0.25);
        let embedding = embed_graph(&features, &[], &params);
        let first = embedding.mu.row(0).to_owned();
        for v in 1..5 {
            assert_eq!(embedding.mu.row(v), first);
        }
    }

    #[test]
    fn hand_computed_single_edge_round() {
        let params = tiny_params();
        let features = two_vertex_features();
        let edges = vec![(0, 1, 0.5), (1, 0, 0.5)];
        let embedding = embed_graph(&features, &edges, &params);
        // M_v = relu([2,-1] * 0.5) = [1, 0] for both vertices.
        // mu_0 = relu([1,0] + [1,0]) = [2,0]; mu_1 = relu([0,1] + [1,0]) = [1,1].
        assert_eq!(embedding.mu, array![[2.0, 0.0], [1.0, 1.0]]);
        assert_eq!(embedding.pooled, array![3.0, 1.0]);
        // h(0) = [theta6*[3,1]; theta7*[2,0]] = [3,4,0,2]; Q = 1*3+2*4+3*0+4*2 = 19.
        assert_eq!(q_value(&embedding, 0, &params), 19.0);
        // h(1) = [3,4,1,1]; Q = 3+8+3+4 = 18.
        assert_eq!(q_value(&embedding, 1, &params), 18.0);
    }

    #[test]
    fn zero_theta5_zeroes_q() {
        let mut params = tiny_params();
        params.theta5.fill(0.0);
        let features = two_vertex_features();
        let embedding = embed_graph(&features, &[(0, 1, 0.5), (1, 0, 0.5)], &params);
        assert_eq!(q_value(&embedding, 0, &params), 0.0);
        assert_eq!(q_value(&embedding, 1, &params), 0.0);
    }

    #[test]
    fn identical_vertices_get_identical_q() {
        let params = EmbeddingParams::init(4, 2, 9);
        let mut features = Array2::zeros((3, FEATURE_WIDTH));
        features.fill(0.5);
        // Symmetric triangle: all vertices interchangeable.
        let edges = vec![
            (0, 1, 0.3),
            (1, 0, 0.3),
            (1, 2, 0.3),
            (2, 1, 0.3),
            (0, 2, 0.3),
            (2, 0, 0.3),
        ];
        let embedding = embed_graph(&features, &edges, &params);
        let q0 = q_value(&embedding, 0, &params);
        let q1 = q_value(&embedding, 1, &params);
        assert!((q0 - q1).abs() < 1e-12);
    }

    #[test]
    fn permutation_equivariance() {
        let params = EmbeddingParams::init(8, 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 6;
        let features = Array2::from_shape_fn((n, FEATURE_WIDTH), |_| rng.gen_range(-1.0..1.0));
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.gen_bool(0.5) {
                    let w = rng.gen_range(0.05..1.0);
                    edges.push((a, b, w));
                    edges.push((b, a, w));
                }
            }
        }
        let embedding = embed_graph(&features, &edges, &params);

        // Relabel v -> (v + 1) mod n.
        let perm = |v: usize| (v + 1) % n;
        let mut perm_features = Array2::zeros((n, FEATURE_WIDTH));
        for v in 0..n {
            for c in 0..FEATURE_WIDTH {
                perm_features[(perm(v), c)] = features[(v, c)];
            }
        }
        let perm_edges: Vec<(usize, usize, f64)> = edges
            .iter()
            .map(|&(a, b, w)| (perm(a), perm(b), w))
            .collect();
        let perm_embedding = embed_graph(&perm_features, &perm_edges, &params);
        for v in 0..n {
            for j in 0..params.p {
                assert!(
                    (embedding.mu[(v, j)] - perm_embedding.mu[(perm(v), j)]).abs() < 1e-12
                );
            }
            let q = q_value(&embedding, v, &params);
            let q_perm = q_value(&perm_embedding, perm(v), &params);
            assert!((q - q_perm).abs() < 1e-12);
        }
    }

    #[test]
    fn locality_respects_round_count() {
        // Path 0-1-2-3-4 with T=2: vertex 0 sees at most vertex 2's features.
        let params = EmbeddingParams::init(4, 2, 7);
        let n = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let features = Array2::from_shape_fn((n, FEATURE_WIDTH), |_| rng.gen_range(-1.0..1.0));
        let mut edges = Vec::new();
        for v in 0..n - 1 {
            edges.push((v, v + 1, 0.2));
            edges.push((v + 1, v, 0.2));
        }
        let base = embed_graph(&features, &edges, &params);
        let mut far = features.clone();
        far[(4, 3)] = -far[(4, 3)] + 0.5; // perturb a vertex 4 hops away
        let moved = embed_graph(&far, &edges, &params);
        for j in 0..params.p {
            assert!((base.mu[(0, j)] - moved.mu[(0, j)]).abs() < 1e-12);
            // ...while its 1-hop neighborhood does see the change at v=3.
        }
        assert!(
            (0..params.p).any(|j| (base.mu[(3, j)] - moved.mu[(3, j)]).abs() > 1e-15),
            "perturbation should reach vertex 3 within two rounds"
        );
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..5 {
            let params = EmbeddingParams::init(4, 2, 100 + trial);
            let n = 5;
            let features =
                Array2::from_shape_fn((n, FEATURE_WIDTH), |_| rng.gen_range(-1.0..1.0));
            let mut edges = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && rng.gen_bool(0.6) {
                        edges.push((a, b, rng.gen_range(0.05..1.0)));
                    }
                }
            }
            let samples = [
                LossSample {
                    features: &features,
                    edges: &edges,
                    vertex: 0,
                    target: 0.7,
                },
                LossSample {
                    features: &features,
                    edges: &edges,
                    vertex: 3,
                    target: -0.2,
                },
            ];
            let (_, grads) = batch_loss_and_grads(&samples, &params);
            let loss_at = |params: &EmbeddingParams| batch_loss_and_grads(&samples, params).0;
            check_matrix_grad(&params, &grads.theta2, loss_at, |p| &mut p.theta2, trial);
            check_matrix_grad(&params, &grads.theta6, loss_at, |p| &mut p.theta6, trial);
        }
    }

    fn check_matrix_grad<F, G>(
        params: &EmbeddingParams,
        analytic: &Array2<f64>,
        loss_at: F,
        select: G,
        trial: u64,
    ) where
        F: Fn(&EmbeddingParams) -> f64,
        G: Fn(&mut EmbeddingParams) -> &mut Array2<f64>,
    {
        let h = 1e-5;
        for i in 0..analytic.nrows() {
            for j in 0..analytic.ncols() {
                let mut plus = params.clone();
                select(&mut plus)[(i, j)] += h;
                let mut minus = params.clone();
                select(&mut minus)[(i, j)] -= h;
                let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                let a = analytic[(i, j)];
                let denom = a.abs().max(numeric.abs()).max(1e-8);
                assert!(
                    (a - numeric).abs() / denom < 1e-4,
                    "trial {trial}: grad mismatch at ({i},{j}): {a} vs {numeric}"
                );
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let params = EmbeddingParams::init(8, 3, 5);
        let text = params.to_text();
        let loaded = EmbeddingParams::from_text(&text).unwrap();
        assert_eq!(params, loaded);
    }
}
