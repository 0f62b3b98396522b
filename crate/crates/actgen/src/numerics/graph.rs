//! Tape-based computation graph. Forward ops append their values to the
//! graph and record a backward closure; `backward` replays the tape in
//! reverse, accumulating exact gradients per node.

use super::{Matrix, NumericsError, Result, RngState};

/// Handle to a node in a [`Graph`]. Cheap to copy; values live in the graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tensor {
    pub(crate) id: usize,
}

type BackFn = Box<dyn Fn(&Graph, &[f64], &mut Grads)>;

struct TapeEntry {
    out: usize,
    back: BackFn,
}

/// Gradients produced by one backward pass, keyed by node.
pub struct Grads {
    by_node: Vec<Option<Vec<f64>>>,
}

impl Grads {
    fn new(n: usize) -> Self {
        Grads {
            by_node: (0..n).map(|_| None).collect(),
        }
    }

    pub fn get(&self, t: Tensor) -> Option<&[f64]> {
        self.by_node[t.id].as_deref()
    }

    /// Gradient of a leaf, materializing zeros when no path reached it.
    pub fn get_or_zeros(&self, g: &Graph, t: Tensor) -> Vec<f64> {
        match self.get(t) {
            Some(v) => v.to_vec(),
            None => vec![0.0; g.values(t).len()],
        }
    }

    fn accum(&mut self, id: usize, len: usize) -> &mut [f64] {
        self.by_node[id].get_or_insert_with(|| vec![0.0; len])
    }

    fn add_to(&mut self, id: usize, contribution: &[f64]) {
        let slot = self.accum(id, contribution.len());
        for (s, c) in slot.iter_mut().zip(contribution) {
            *s += c;
        }
    }
}

#[derive(Default)]
pub struct Graph {
    shapes: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
    tape: Vec<TapeEntry>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn shape(&self, t: Tensor) -> &[usize] {
        &self.shapes[t.id]
    }

    pub fn values(&self, t: Tensor) -> &[f64] {
        &self.values[t.id]
    }

    /// Scalar convenience accessor; panics when the node is not 1-element.
    pub fn scalar(&self, t: Tensor) -> f64 {
        assert_eq!(self.values(t).len(), 1, "scalar() on non-scalar node");
        self.values[t.id][0]
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    fn rows_cols(&self, t: Tensor) -> (usize, usize) {
        match self.shapes[t.id].as_slice() {
            [r, c] => (*r, *c),
            [n] => (1, *n),
            s => panic!("expected 1-D or 2-D tensor, got shape {s:?}"),
        }
    }

    fn push_node(&mut self, shape: Vec<usize>, values: Vec<f64>) -> Tensor {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        self.shapes.push(shape);
        self.values.push(values);
        Tensor {
            id: self.shapes.len() - 1,
        }
    }

    fn push_op(&mut self, shape: Vec<usize>, values: Vec<f64>, back: BackFn) -> Tensor {
        let t = self.push_node(shape, values);
        self.tape.push(TapeEntry { out: t.id, back });
        t
    }

    // ── leaves ──────────────────────────────────────────────────────

    pub fn leaf(&mut self, shape: &[usize], values: Vec<f64>) -> Result<Tensor> {
        if shape.iter().product::<usize>() != values.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "leaf",
                lhs: shape.to_vec(),
                rhs: vec![values.len()],
            });
        }
        Ok(self.push_node(shape.to_vec(), values))
    }

    pub fn leaf_matrix(&mut self, m: &Matrix) -> Tensor {
        self.push_node(vec![m.rows, m.cols], m.data.clone())
    }

    pub fn scalar_leaf(&mut self, v: f64) -> Tensor {
        self.push_node(vec![1], vec![v])
    }

    // ── elementwise / affine ────────────────────────────────────────

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        if self.shapes[a.id] != self.shapes[b.id] {
            return Err(NumericsError::ShapeMismatch {
                op: "add",
                lhs: self.shapes[a.id].clone(),
                rhs: self.shapes[b.id].clone(),
            });
        }
        let vals: Vec<f64> = self.values[a.id]
            .iter()
            .zip(&self.values[b.id])
            .map(|(x, y)| x + y)
            .collect();
        Ok(self.push_op(
            self.shapes[a.id].clone(),
            vals,
            Box::new(move |_, dy, grads| {
                grads.add_to(a.id, dy);
                grads.add_to(b.id, dy);
            }),
        ))
    }

    /// Add a length-`d` bias vector to every row of a `T x d` tensor.
    pub fn bias_add(&mut self, x: Tensor, b: Tensor) -> Result<Tensor> {
        let (rows, cols) = self.rows_cols(x);
        if self.values[b.id].len() != cols {
            return Err(NumericsError::ShapeMismatch {
                op: "bias_add",
                lhs: self.shapes[x.id].clone(),
                rhs: self.shapes[b.id].clone(),
            });
        }
        let bv = &self.values[b.id];
        let mut vals = self.values[x.id].clone();
        for r in 0..rows {
            for c in 0..cols {
                vals[r * cols + c] += bv[c];
            }
        }
        Ok(self.push_op(
            self.shapes[x.id].clone(),
            vals,
            Box::new(move |_, dy, grads| {
                grads.add_to(x.id, dy);
                let db = grads.accum(b.id, cols);
                for r in 0..rows {
                    for c in 0..cols {
                        db[c] += dy[r * cols + c];
                    }
                }
            }),
        ))
    }

    pub fn scale(&mut self, x: Tensor, c: f64) -> Tensor {
        let vals: Vec<f64> = self.values[x.id].iter().map(|v| v * c).collect();
        self.push_op(
            self.shapes[x.id].clone(),
            vals,
            Box::new(move |_, dy, grads| {
                let dx: Vec<f64> = dy.iter().map(|v| v * c).collect();
                grads.add_to(x.id, &dx);
            }),
        )
    }

    pub fn relu(&mut self, x: Tensor) -> Tensor {
        let vals: Vec<f64> = self.values[x.id].iter().map(|v| v.max(0.0)).collect();
        self.push_op(
            self.shapes[x.id].clone(),
            vals,
            Box::new(move |g, dy, grads| {
                let xv = &g.values[x.id];
                let dx: Vec<f64> = dy
                    .iter()
                    .zip(xv)
                    .map(|(d, v)| if *v > 0.0 { *d } else { 0.0 })
                    .collect();
                grads.add_to(x.id, &dx);
            }),
        )
    }

    pub fn sigmoid(&mut self, x: Tensor) -> Tensor {
        let vals: Vec<f64> = self.values[x.id]
            .iter()
            .map(|v| 1.0 / (1.0 + (-v).exp()))
            .collect();
        let out = self.push_op(
            self.shapes[x.id].clone(),
            vals,
            Box::new(move |_, _, _| {}),
        );
        // replace placeholder backward now that `out` is known
        let entry = self.tape.last_mut().unwrap();
        entry.back = Box::new(move |g, dy, grads| {
            let y = &g.values[out.id];
            let dx: Vec<f64> = dy.iter().zip(y).map(|(d, s)| d * s * (1.0 - s)).collect();
            grads.add_to(x.id, &dx);
        });
        out
    }

    // ── matrix products ─────────────────────────────────────────────

    /// `a @ b` for `a: m x k`, `b: k x n`.
    pub fn matmul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let (m, ka) = self.rows_cols(a);
        let (kb, n) = self.rows_cols(b);
        if ka != kb {
            return Err(NumericsError::ShapeMismatch {
                op: "matmul",
                lhs: self.shapes[a.id].clone(),
                rhs: self.shapes[b.id].clone(),
            });
        }
        let vals = mm(&self.values[a.id], &self.values[b.id], m, ka, n);
        Ok(self.push_op(
            vec![m, n],
            vals,
            Box::new(move |g, dy, grads| {
                // dA = dY @ B^T, dB = A^T @ dY
                let da = mm_nt(dy, &g.values[b.id], m, n, ka);
                let db = mm_tn(&g.values[a.id], dy, ka, m, n);
                grads.add_to(a.id, &da);
                grads.add_to(b.id, &db);
            }),
        ))
    }

    /// `a @ b^T` for `a: m x k`, `b: n x k`; attention scores use this.
    pub fn matmul_nt(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let (m, ka) = self.rows_cols(a);
        let (n, kb) = self.rows_cols(b);
        if ka != kb {
            return Err(NumericsError::ShapeMismatch {
                op: "matmul_nt",
                lhs: self.shapes[a.id].clone(),
                rhs: self.shapes[b.id].clone(),
            });
        }
        let vals = mm_nt(&self.values[a.id], &self.values[b.id], m, ka, n);
        Ok(self.push_op(
            vec![m, n],
            vals,
            Box::new(move |g, dy, grads| {
                // y = A B^T: dA = dY @ B, dB = dY^T @ A
                let da = mm(dy, &g.values[b.id], m, n, ka);
                let db = mm_tn(dy, &g.values[a.id], n, m, ka);
                grads.add_to(a.id, &da);
                grads.add_to(b.id, &db);
            }),
        ))
    }

    /// `x @ w + b` with `x: T x d_in`, `w: d_in x d_out`, `b: d_out`.
    pub fn linear(&mut self, x: Tensor, w: Tensor, b: Tensor) -> Result<Tensor> {
        let y = self.matmul(x, w)?;
        self.bias_add(y, b)
    }

    // ── normalization / softmax ─────────────────────────────────────

    /// Softmax along `axis` of a 1-D or 2-D tensor, max-stabilized.
    pub fn softmax(&mut self, x: Tensor, axis: usize) -> Result<Tensor> {
        let shape = self.shapes[x.id].clone();
        let (rows, cols) = self.rows_cols(x);
        if axis >= shape.len().max(1) {
            return Err(NumericsError::IndexOutOfRange {
                op: "softmax",
                index: axis,
                bound: shape.len(),
            });
        }
        // axis as "the axis being normalized": for 2-D, axis 1 = per row.
        let per_row = shape.len() == 1 || axis == 1;
        let mut vals = self.values[x.id].clone();
        if per_row {
            for r in 0..rows {
                super::softmax_slice(&mut vals[r * cols..(r + 1) * cols]);
            }
        } else {
            for c in 0..cols {
                let mut col: Vec<f64> = (0..rows).map(|r| vals[r * cols + c]).collect();
                super::softmax_slice(&mut col);
                for r in 0..rows {
                    vals[r * cols + c] = col[r];
                }
            }
        }
        let out = self.push_op(shape, vals, Box::new(move |_, _, _| {}));
        let entry = self.tape.last_mut().unwrap();
        entry.back = Box::new(move |g, dy, grads| {
            let y = &g.values[out.id];
            let mut dx = vec![0.0; dy.len()];
            if per_row {
                for r in 0..rows {
                    let ys = &y[r * cols..(r + 1) * cols];
                    let ds = &dy[r * cols..(r + 1) * cols];
                    let dot: f64 = ys.iter().zip(ds).map(|(a, b)| a * b).sum();
                    for c in 0..cols {
                        dx[r * cols + c] = ys[c] * (ds[c] - dot);
                    }
                }
            } else {
                for c in 0..cols {
                    let dot: f64 = (0..rows).map(|r| y[r * cols + c] * dy[r * cols + c]).sum();
                    for r in 0..rows {
                        dx[r * cols + c] = y[r * cols + c] * (dy[r * cols + c] - dot);
                    }
                }
            }
            grads.add_to(x.id, &dx);
        });
        Ok(out)
    }

    /// Per-row standardization of `x: T x d` followed by `gain .* x_hat + shift`.
    pub fn layer_norm(&mut self, x: Tensor, gain: Tensor, shift: Tensor, eps: f64) -> Result<Tensor> {
        let (rows, cols) = self.rows_cols(x);
        if self.values[gain.id].len() != cols || self.values[shift.id].len() != cols {
            return Err(NumericsError::ShapeMismatch {
                op: "layer_norm",
                lhs: self.shapes[x.id].clone(),
                rhs: self.shapes[gain.id].clone(),
            });
        }
        let xv = &self.values[x.id];
        let gv = &self.values[gain.id];
        let sv = &self.values[shift.id];
        let mut vals = vec![0.0; xv.len()];
        let mut inv_std = vec![0.0; rows];
        let mut xhat = vec![0.0; xv.len()];
        for r in 0..rows {
            let row = &xv[r * cols..(r + 1) * cols];
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[r] = is;
            for c in 0..cols {
                let h = (row[c] - mean) * is;
                xhat[r * cols + c] = h;
                vals[r * cols + c] = gv[c] * h + sv[c];
            }
        }
        Ok(self.push_op(
            vec![rows, cols],
            vals,
            Box::new(move |g, dy, grads| {
                let gv = &g.values[gain.id];
                let mut dx = vec![0.0; rows * cols];
                let n = cols as f64;
                for r in 0..rows {
                    let h = &xhat[r * cols..(r + 1) * cols];
                    let d = &dy[r * cols..(r + 1) * cols];
                    let dxh: Vec<f64> = (0..cols).map(|c| d[c] * gv[c]).collect();
                    let mean_dxh = dxh.iter().sum::<f64>() / n;
                    let mean_dxh_h = dxh.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() / n;
                    for c in 0..cols {
                        dx[r * cols + c] = inv_std[r] * (dxh[c] - mean_dxh - h[c] * mean_dxh_h);
                    }
                }
                grads.add_to(x.id, &dx);
                let dgain = grads.accum(gain.id, cols);
                for r in 0..rows {
                    for c in 0..cols {
                        dgain[c] += dy[r * cols + c] * xhat[r * cols + c];
                    }
                }
                let dshift = grads.accum(shift.id, cols);
                for r in 0..rows {
                    for c in 0..cols {
                        dshift[c] += dy[r * cols + c];
                    }
                }
            }),
        ))
    }

    // ── temporal convolution ────────────────────────────────────────

    /// Valid-mode 1-D convolution over time: `x: T x d_in`,
    /// `kernels: k x d_in x d_out`, output `T' x d_out` with
    /// `T' = (T - k)/stride + 1`.
    pub fn conv1d_time(&mut self, x: Tensor, kernels: Tensor, stride: usize) -> Result<Tensor> {
        let (t_len, d_in) = self.rows_cols(x);
        let kshape = self.shapes[kernels.id].clone();
        let [kw, kd, d_out] = match kshape.as_slice() {
            [a, b, c] => [*a, *b, *c],
            _ => {
                return Err(NumericsError::ShapeMismatch {
                    op: "conv1d_time",
                    lhs: self.shapes[x.id].clone(),
                    rhs: kshape,
                })
            }
        };
        if kd != d_in {
            return Err(NumericsError::ShapeMismatch {
                op: "conv1d_time",
                lhs: vec![t_len, d_in],
                rhs: vec![kw, kd, d_out],
            });
        }
        if t_len < kw {
            return Err(NumericsError::InputTooShort {
                op: "conv1d_time",
                needed: kw,
                got: t_len,
            });
        }
        let stride = stride.max(1);
        let t_out = (t_len - kw) / stride + 1;
        let xv = &self.values[x.id];
        let kv = &self.values[kernels.id];
        let mut vals = vec![0.0; t_out * d_out];
        for t in 0..t_out {
            for j in 0..kw {
                let xrow = &xv[(t * stride + j) * d_in..(t * stride + j + 1) * d_in];
                let kplane = &kv[j * d_in * d_out..(j + 1) * d_in * d_out];
                for i in 0..d_in {
                    let xi = xrow[i];
                    let krow = &kplane[i * d_out..(i + 1) * d_out];
                    for o in 0..d_out {
                        vals[t * d_out + o] += xi * krow[o];
                    }
                }
            }
        }
        Ok(self.push_op(
            vec![t_out, d_out],
            vals,
            Box::new(move |g, dy, grads| {
                let xv = &g.values[x.id];
                let kv = &g.values[kernels.id];
                let mut dx = vec![0.0; t_len * d_in];
                let mut dk = vec![0.0; kw * d_in * d_out];
                for t in 0..t_out {
                    let drow = &dy[t * d_out..(t + 1) * d_out];
                    for j in 0..kw {
                        let xi0 = (t * stride + j) * d_in;
                        for i in 0..d_in {
                            let kbase = (j * d_in + i) * d_out;
                            let mut acc = 0.0;
                            for o in 0..d_out {
                                acc += drow[o] * kv[kbase + o];
                                dk[kbase + o] += drow[o] * xv[xi0 + i];
                            }
                            dx[xi0 + i] += acc;
                        }
                    }
                }
                grads.add_to(x.id, &dx);
                grads.add_to(kernels.id, &dk);
            }),
        ))
    }

    // ── losses ──────────────────────────────────────────────────────

    /// Mean negative log-likelihood of `targets` under `logits: T x V`.
    /// Positions whose target equals `ignore_id` contribute neither loss
    /// nor gradient; when every position is ignored the result is an
    /// exact constant zero detached from the graph. Returns the loss node
    /// and the count of contributing positions.
    pub fn cross_entropy(
        &mut self,
        logits: Tensor,
        targets: &[usize],
        ignore_id: Option<usize>,
    ) -> Result<(Tensor, usize)> {
        let (t_len, v) = self.rows_cols(logits);
        if targets.len() != t_len {
            return Err(NumericsError::ShapeMismatch {
                op: "cross_entropy",
                lhs: vec![t_len, v],
                rhs: vec![targets.len()],
            });
        }
        let active: Vec<usize> = targets
            .iter()
            .enumerate()
            .filter(|(_, y)| Some(**y) != ignore_id)
            .map(|(i, _)| i)
            .collect();
        for &i in &active {
            if targets[i] >= v {
                return Err(NumericsError::IndexOutOfRange {
                    op: "cross_entropy",
                    index: targets[i],
                    bound: v,
                });
            }
        }
        let count = active.len();
        if count == 0 {
            return Ok((self.scalar_leaf(0.0), 0));
        }
        let lv = &self.values[logits.id];
        let mut total = 0.0;
        for &t in &active {
            let row = &lv[t * v..(t + 1) * v];
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - m).exp()).sum();
            total += z.ln() + m - row[targets[t]];
        }
        let mean = total / count as f64;
        let tgt: Vec<usize> = targets.to_vec();
        Ok((
            self.push_op(
                vec![1],
                vec![mean],
                Box::new(move |g, dy, grads| {
                    let lv = &g.values[logits.id];
                    let scale = dy[0] / active.len() as f64;
                    let mut dl = vec![0.0; t_len * v];
                    for &t in &active {
                        let row = &lv[t * v..(t + 1) * v];
                        let mut p: Vec<f64> = row.to_vec();
                        super::softmax_slice(&mut p);
                        for c in 0..v {
                            dl[t * v + c] = scale * (p[c] - if c == tgt[t] { 1.0 } else { 0.0 });
                        }
                    }
                    grads.add_to(logits.id, &dl);
                }),
            ),
            count,
        ))
    }

    /// Differentiable categorical relaxation: `softmax((logits + g)/tau)`
    /// with fresh Gumbel noise from `rng`. Gradients flow to `logits`
    /// through the reparameterization; the noise itself is a constant.
    pub fn gumbel_softmax_sample(
        &mut self,
        logits: Tensor,
        tau: f64,
        rng: &mut RngState,
    ) -> Result<Tensor> {
        if tau <= 0.0 {
            return Err(NumericsError::Config(format!(
                "gumbel_softmax temperature must be positive, got {tau}"
            )));
        }
        let n = self.values[logits.id].len();
        let noise: Vec<f64> = (0..n).map(|_| rng.gumbel()).collect();
        let shape = self.shapes[logits.id].clone();
        let g = self.leaf(&shape, noise)?;
        let perturbed = self.add(logits, g)?;
        let scaled = self.scale(perturbed, 1.0 / tau);
        let axis = shape.len().saturating_sub(1);
        self.softmax(scaled, axis)
    }

    /// `-label ln p - (1-label) ln(1-p)` on a scalar probability,
    /// clamped to `[1e-7, 1 - 1e-7]` before the logs.
    pub fn binary_cross_entropy(&mut self, p: Tensor, label: f64) -> Result<Tensor> {
        if self.values[p.id].len() != 1 {
            return Err(NumericsError::ShapeMismatch {
                op: "binary_cross_entropy",
                lhs: self.shapes[p.id].clone(),
                rhs: vec![1],
            });
        }
        const EPS: f64 = 1e-7;
        let raw = self.values[p.id][0];
        let c = raw.clamp(EPS, 1.0 - EPS);
        let loss = -label * c.ln() - (1.0 - label) * (1.0 - c).ln();
        Ok(self.push_op(
            vec![1],
            vec![loss],
            Box::new(move |_, dy, grads| {
                // zero slope outside the clamp window
                let slope = if (EPS..=1.0 - EPS).contains(&raw) {
                    (c - label) / (c * (1.0 - c))
                } else {
                    0.0
                };
                grads.add_to(p.id, &[dy[0] * slope]);
            }),
        ))
    }

    // ── gather / reshape / reductions ───────────────────────────────

    /// Row-gather from an embedding table `V x d`.
    pub fn embed(&mut self, table: Tensor, ids: &[usize]) -> Result<Tensor> {
        let (v, d) = self.rows_cols(table);
        for &i in ids {
            if i >= v {
                return Err(NumericsError::IndexOutOfRange {
                    op: "embed",
                    index: i,
                    bound: v,
                });
            }
        }
        let tv = &self.values[table.id];
        let mut vals = Vec::with_capacity(ids.len() * d);
        for &i in ids {
            vals.extend_from_slice(&tv[i * d..(i + 1) * d]);
        }
        let ids: Vec<usize> = ids.to_vec();
        let rows = ids.len();
        Ok(self.push_op(
            vec![rows, d],
            vals,
            Box::new(move |_, dy, grads| {
                let dt = grads.accum(table.id, v * d);
                for (r, &i) in ids.iter().enumerate() {
                    for c in 0..d {
                        dt[i * d + c] += dy[r * d + c];
                    }
                }
            }),
        ))
    }

    pub fn concat_rows(&mut self, parts: &[Tensor]) -> Result<Tensor> {
        assert!(!parts.is_empty());
        let (_, cols) = self.rows_cols(parts[0]);
        let mut total_rows = 0;
        for &p in parts {
            let (r, c) = self.rows_cols(p);
            if c != cols {
                return Err(NumericsError::ShapeMismatch {
                    op: "concat_rows",
                    lhs: self.shapes[parts[0].id].clone(),
                    rhs: self.shapes[p.id].clone(),
                });
            }
            total_rows += r;
        }
        let mut vals = Vec::with_capacity(total_rows * cols);
        for &p in parts {
            vals.extend_from_slice(&self.values[p.id]);
        }
        let parts: Vec<Tensor> = parts.to_vec();
        let sizes: Vec<usize> = parts.iter().map(|p| self.values[p.id].len()).collect();
        Ok(self.push_op(
            vec![total_rows, cols],
            vals,
            Box::new(move |_, dy, grads| {
                let mut off = 0;
                for (p, sz) in parts.iter().zip(&sizes) {
                    grads.add_to(p.id, &dy[off..off + sz]);
                    off += sz;
                }
            }),
        ))
    }

    pub fn concat_cols(&mut self, parts: &[Tensor]) -> Result<Tensor> {
        assert!(!parts.is_empty());
        let (rows, _) = self.rows_cols(parts[0]);
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.rows_cols(p);
            if r != rows {
                return Err(NumericsError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: self.shapes[parts[0].id].clone(),
                    rhs: self.shapes[p.id].clone(),
                });
            }
            widths.push(c);
        }
        let total_cols: usize = widths.iter().sum();
        let mut vals = vec![0.0; rows * total_cols];
        let mut off = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let pv = &self.values[p.id];
            for r in 0..rows {
                vals[r * total_cols + off..r * total_cols + off + w]
                    .copy_from_slice(&pv[r * w..(r + 1) * w]);
            }
            off += w;
        }
        let parts: Vec<Tensor> = parts.to_vec();
        Ok(self.push_op(
            vec![rows, total_cols],
            vals,
            Box::new(move |_, dy, grads| {
                let mut off = 0;
                for (p, &w) in parts.iter().zip(&widths) {
                    let mut dp = vec![0.0; rows * w];
                    for r in 0..rows {
                        dp[r * w..(r + 1) * w]
                            .copy_from_slice(&dy[r * total_cols + off..r * total_cols + off + w]);
                    }
                    grads.add_to(p.id, &dp);
                    off += w;
                }
            }),
        ))
    }

    pub fn slice_rows(&mut self, x: Tensor, lo: usize, hi: usize) -> Result<Tensor> {
        let (rows, cols) = self.rows_cols(x);
        if lo >= hi || hi > rows {
            return Err(NumericsError::IndexOutOfRange {
                op: "slice_rows",
                index: hi,
                bound: rows,
            });
        }
        let vals = self.values[x.id][lo * cols..hi * cols].to_vec();
        Ok(self.push_op(
            vec![hi - lo, cols],
            vals,
            Box::new(move |_, dy, grads| {
                let dx = grads.accum(x.id, rows * cols);
                for (i, d) in dy.iter().enumerate() {
                    dx[lo * cols + i] += d;
                }
            }),
        ))
    }

    pub fn slice_cols(&mut self, x: Tensor, lo: usize, hi: usize) -> Result<Tensor> {
        let (rows, cols) = self.rows_cols(x);
        if lo >= hi || hi > cols {
            return Err(NumericsError::IndexOutOfRange {
                op: "slice_cols",
                index: hi,
                bound: cols,
            });
        }
        let w = hi - lo;
        let xv = &self.values[x.id];
        let mut vals = vec![0.0; rows * w];
        for r in 0..rows {
            vals[r * w..(r + 1) * w].copy_from_slice(&xv[r * cols + lo..r * cols + hi]);
        }
        Ok(self.push_op(
            vec![rows, w],
            vals,
            Box::new(move |_, dy, grads| {
                let dx = grads.accum(x.id, rows * cols);
                for r in 0..rows {
                    for c in 0..w {
                        dx[r * cols + lo + c] += dy[r * w + c];
                    }
                }
            }),
        ))
    }

    /// Mean over rows: `T x d -> 1 x d`.
    pub fn mean_rows(&mut self, x: Tensor) -> Tensor {
        let (rows, cols) = self.rows_cols(x);
        let xv = &self.values[x.id];
        let mut vals = vec![0.0; cols];
        for r in 0..rows {
            for c in 0..cols {
                vals[c] += xv[r * cols + c];
            }
        }
        for v in vals.iter_mut() {
            *v /= rows as f64;
        }
        self.push_op(
            vec![1, cols],
            vals,
            Box::new(move |_, dy, grads| {
                let dx = grads.accum(x.id, rows * cols);
                let inv = 1.0 / rows as f64;
                for r in 0..rows {
                    for c in 0..cols {
                        dx[r * cols + c] += dy[c] * inv;
                    }
                }
            }),
        )
    }

    /// Fixed-weight contraction to a scalar; gradient checks reduce
    /// multi-output ops through this.
    pub fn weighted_sum(&mut self, x: Tensor, w: &[f64]) -> Result<Tensor> {
        if w.len() != self.values[x.id].len() {
            return Err(NumericsError::ShapeMismatch {
                op: "weighted_sum",
                lhs: self.shapes[x.id].clone(),
                rhs: vec![w.len()],
            });
        }
        let s: f64 = self.values[x.id].iter().zip(w).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = w.to_vec();
        Ok(self.push_op(
            vec![1],
            vec![s],
            Box::new(move |_, dy, grads| {
                let dx: Vec<f64> = w.iter().map(|v| v * dy[0]).collect();
                grads.add_to(x.id, &dx);
            }),
        ))
    }

    // ── backward ────────────────────────────────────────────────────

    /// Reverse sweep from a scalar node; returns gradients for every node
    /// reached by the chain rule.
    pub fn backward(&self, loss: Tensor) -> Grads {
        assert_eq!(
            self.values[loss.id].len(),
            1,
            "backward() requires a scalar loss"
        );
        let mut grads = Grads::new(self.len());
        grads.add_to(loss.id, &[1.0]);
        for entry in self.tape.iter().rev() {
            let dy = match &grads.by_node[entry.out] {
                Some(g) => g.clone(),
                None => continue,
            };
            (entry.back)(self, &dy, &mut grads);
        }
        grads
    }
}

// ── flat matmul kernels (ikj order, contiguous inner loops) ─────────

fn mm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
    out
}

/// `a @ b^T` with `a: m x k`, `b: n x k`.
fn mm_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            out[i * n + j] = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
    out
}

/// `a^T @ b` with `a: k x m`, `b: k x n` -> `m x n`.
fn mm_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for p in 0..k {
        let arow = &a[p * m..(p + 1) * m];
        let brow = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let av = arow[i];
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
    out
}
