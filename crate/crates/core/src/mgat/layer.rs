use crate::error::{Error, Result};
use crate::mgat::{HeteroGraph, Modality};
use crate::numkit::{dot, Matrix, Rng, Tape, Var};

pub const LEAKY_SLOPE: f64 = 0.2;

/// Free gate value whose softplus is exactly 1: `ln(e − 1)`.
pub fn gate_free_for_unit() -> f64 {
    (std::f64::consts::E - 1.0).ln()
}

/// Parameters of one attention layer.
///
/// Features are rows, so projections are `h W_m`. Row `3·m₁ + m₂` of `a` is the
/// attention vector for source modality `m₁` and target slot `m₂`; its first
/// `d` entries weigh the source, the last `d` the target. Head `t` reads
/// column block `t` (width `d / T`) of both the projections and each half of
/// `a`, and has its own gates (row `t` of `gate_free`).
#[derive(Debug, Clone, PartialEq)]
pub struct GatLayerParams {
    pub w: [Matrix; 3],
    pub a: Matrix,
    pub gate_free: Matrix,
    pub heads: usize,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GatOptions {
    /// Aggregate unprojected neighbor features instead of `h_p W_m`.
    pub raw_aggregation: bool,
    /// Renormalize coefficients over the neighbors of each modality.
    pub neighbor_softmax: bool,
}

impl GatLayerParams {
    /// Identity-plus-noise projections, small attention vectors, unit gates.
    pub fn init(dim: usize, heads: usize, rng: &mut Rng) -> Result<Self> {
        let p = Self {
            w: std::array::from_fn(|_| {
                Matrix::identity(dim)
                    .add(&rng.normal_matrix(dim, dim, 0.1 / (dim as f64).sqrt()))
                    .expect("square matrices of one size")
            }),
            a: rng.normal_matrix(9, 2 * dim, 0.1),
            gate_free: Matrix::filled(heads, 3, gate_free_for_unit()),
            heads,
            slope: LEAKY_SLOPE,
        };
        p.validate()?;
        Ok(p)
    }

    /// Identity projections, zero attention vectors, unit gates.
    pub fn identity(dim: usize, heads: usize) -> Result<Self> {
        let p = Self {
            w: std::array::from_fn(|_| Matrix::identity(dim)),
            a: Matrix::zeros(9, 2 * dim),
            gate_free: Matrix::filled(heads, 3, gate_free_for_unit()),
            heads,
            slope: LEAKY_SLOPE,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.w[0].rows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for w in &self.w {
            w.ensure_shape("modality projection", d, d)?;
            w.ensure_finite("modality projection")?;
        }
        self.a.ensure_shape("attention vectors", 9, 2 * d)?;
        self.a.ensure_finite("attention vectors")?;
        self.gate_free.ensure_shape("gates", self.heads, 3)?;
        self.gate_free.ensure_finite("gates")?;
        if self.heads == 0 || !d.is_multiple_of(self.heads) {
            return Err(Error::invalid(format!(
                "{} heads do not divide width {d}",
                self.heads
            )));
        }
        Ok(())
    }

    /// Realized gate `γ_m` of head `t`.
    pub fn gate(&self, head: usize, m: Modality) -> f64 {
        let x = self.gate_free[(head, m.index())];
        x.max(0.0) + (-x.abs()).exp().ln_1p()
    }

    pub fn on_tape(&self, tape: &Tape) -> GatLayerVars {
        GatLayerVars {
            w: std::array::from_fn(|m| tape.param(self.w[m].clone())),
            a: tape.param(self.a.clone()),
            gate_free: tape.param(self.gate_free.clone()),
            heads: self.heads,
            slope: self.slope,
        }
    }

    /// Writes gradient-updated values back from matrices in `on_tape` order.
    pub fn tensors_mut(&mut self) -> [&mut Matrix; 5] {
        let [w0, w1, w2] = &mut self.w;
        [w0, w1, w2, &mut self.a, &mut self.gate_free]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GatLayerVars {
    pub w: [Var; 3],
    pub a: Var,
    pub gate_free: Var,
    pub heads: usize,
    pub slope: f64,
}

impl GatLayerVars {
    pub fn vars(&self) -> [Var; 5] {
        [self.w[0], self.w[1], self.w[2], self.a, self.gate_free]
    }
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// Coefficient for information flowing from `h_p` (modality `m1`) into slot
/// `m2` of `h_q`, normalized over the target slot across `present`.
///
/// Computed directly from the definition, one head at a time.
pub fn modal_attention(
    params: &GatLayerParams,
    head: usize,
    h_p: &[f64],
    h_q: &[f64],
    m1: Modality,
    m2: Modality,
    present: &[Modality],
) -> Result<f64> {
    let d = params.dim();
    if h_p.len() != d || h_q.len() != d {
        return Err(Error::dim("attention input", d, h_p.len().max(h_q.len())));
    }
    if !present.contains(&m1) || !present.contains(&m2) {
        return Err(Error::invalid(format!("modality pair {m1}->{m2} not in the graph")));
    }
    if head >= params.heads {
        return Err(Error::dim("head", format!("< {}", params.heads), head));
    }
    let dh = d / params.heads;
    let block = head * dh..(head + 1) * dh;
    let project = |h: &[f64], m: Modality| -> Vec<f64> {
        let w = &params.w[m.index()];
        block.clone().map(|j| (0..d).map(|i| h[i] * w[(i, j)]).sum()).collect()
    };
    let src = project(h_p, m1);
    let logit = |m: Modality| {
        let row = params.a.row(3 * m1.index() + m.index());
        let (left, right) = row.split_at(d);
        let tgt = project(h_q, m);
        leaky(dot(&left[block.clone()], &src) + dot(&right[block.clone()], &tgt), params.slope)
    };
    let logits: Vec<f64> = present.iter().map(|&m| logit(m)).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    Ok((logit(m2) - max).exp() / z)
}

struct EdgePlan {
    /// `(source, target)` for targets with more than one in-neighbor.
    attended: Vec<(usize, usize)>,
    /// `(q, q)` for nodes that only see themselves; coefficient fixed at 1.
    fixed: Vec<(usize, usize)>,
}

fn plan(g: &HeteroGraph) -> EdgePlan {
    let mut attended = Vec::new();
    let mut fixed = Vec::new();
    for (q, sources) in g.in_neighbors().into_iter().enumerate() {
        if sources.len() == 1 {
            fixed.push((q, q));
        } else {
            attended.extend(sources.into_iter().map(|p| (p, q)));
        }
    }
    EdgePlan { attended, fixed }
}

/// One layer on the tape. `h` is the `n × d` node feature matrix.
pub fn layer_forward_tape(
    tape: &Tape,
    g: &HeteroGraph,
    h: Var,
    p: &GatLayerVars,
    opts: GatOptions,
) -> Result<Var> {
    let (n, d) = tape.shape(h);
    if n != g.len() {
        return Err(Error::dim("graph features", g.len(), n));
    }
    if tape.shape(p.w[0]) != (d, d) {
        return Err(Error::dim("layer width", format!("{d}x{d}"), format!("{:?}", tape.shape(p.w[0]))));
    }
    if n == 0 {
        return Ok(h);
    }
    let heads = p.heads;
    let dh = d / heads;
    let present = g.modalities_present();
    let slot = |m: Modality| present.iter().position(|&x| x == m).expect("present modality");
    let k = present.len();
    let modality: Vec<Modality> = g.nodes().iter().map(|nd| nd.modality).collect();
    let EdgePlan { attended, fixed } = plan(g);
    let edges: Vec<(usize, usize)> = attended.iter().chain(&fixed).copied().collect();

    let mut scatter = Matrix::zeros(n, edges.len());
    for (e, &(_, q)) in edges.iter().enumerate() {
        scatter.row_mut(q)[e] = 1.0;
    }
    let scatter = tape.constant(scatter);
    let ones = tape.constant(Matrix::filled(1, dh, 1.0));

    let mut z: [Option<Var>; 3] = [None; 3];
    for &m in &present {
        z[m.index()] = Some(tape.matmul(h, p.w[m.index()])?);
    }
    let gate = tape.softplus(p.gate_free);

    // Same-(target, source modality) grouping for the neighbor-softmax option.
    let group = if opts.neighbor_softmax && !attended.is_empty() {
        let mut gm = Matrix::zeros(attended.len(), attended.len());
        for (i, &(pi, qi)) in attended.iter().enumerate() {
            for (j, &(pj, qj)) in attended.iter().enumerate() {
                if qi == qj && modality[pi] == modality[pj] {
                    gm.row_mut(i)[j] = 1.0;
                }
            }
        }
        Some(tape.constant(gm))
    } else {
        None
    };

    let mut outs = Vec::with_capacity(heads);
    for t in 0..heads {
        let cols = t * dh..(t + 1) * dh;
        let zt: Vec<Option<Var>> = z
            .iter()
            .map(|v| v.map(|v| tape.slice_cols(v, cols.start, cols.end)).transpose())
            .collect::<Result<_>>()?;

        let mut coeffs = Vec::new();
        if !attended.is_empty() {
            // Column (i, j) pair of `s`: left score of source modality i
            // against slot j, then right score of slot j for pair (i, j).
            let mut parts = Vec::with_capacity(2 * k * k);
            for &m1 in &present {
                for &m2 in &present {
                    let row = 3 * m1.index() + m2.index();
                    let left = (0..dh).map(|c| row * 2 * d + cols.start + c).collect();
                    let right = (0..dh).map(|c| row * 2 * d + d + cols.start + c).collect();
                    let a_l = tape.gather(p.a, left, dh, 1)?;
                    let a_r = tape.gather(p.a, right, dh, 1)?;
                    parts.push(tape.matmul(zt[m1.index()].unwrap(), a_l)?);
                    parts.push(tape.matmul(zt[m2.index()].unwrap(), a_r)?);
                }
            }
            let s = tape.concat_cols(&parts)?;
            let width = 2 * k * k;
            let mut li = Vec::with_capacity(attended.len() * k);
            let mut ri = Vec::with_capacity(attended.len() * k);
            for &(src, q) in &attended {
                let i = slot(modality[src]);
                for j in 0..k {
                    let col = 2 * (i * k + j);
                    li.push(src * width + col);
                    ri.push(q * width + col + 1);
                }
            }
            let left = tape.gather(s, li, attended.len(), k)?;
            let right = tape.gather(s, ri, attended.len(), k)?;
            let logits = tape.leaky_relu(tape.add(left, right)?, p.slope);
            let alpha_all = tape.softmax_rows(logits);
            let text = slot(Modality::Text);
            let idx = (0..attended.len()).map(|e| e * k + text).collect();
            let mut alpha = tape.gather(alpha_all, idx, attended.len(), 1)?;
            if let Some(gm) = group {
                let totals = tape.matmul(gm, alpha)?;
                alpha = tape.exp(tape.sub(tape.ln_floor(alpha, 1e-300), tape.ln_floor(totals, 1e-300))?);
            }
            let gi = attended.iter().map(|&(src, _)| t * 3 + modality[src].index()).collect();
            let g_e = tape.gather(gate, gi, attended.len(), 1)?;
            coeffs.push(tape.mul(alpha, g_e)?);
        }
        if !fixed.is_empty() {
            let gi = fixed.iter().map(|&(q, _)| t * 3 + modality[q].index()).collect();
            coeffs.push(tape.gather(gate, gi, fixed.len(), 1)?);
        }
        let coeff = tape.concat_rows(&coeffs)?;

        let sources: Vec<Var> = if opts.raw_aggregation {
            vec![tape.slice_cols(h, cols.start, cols.end)?]
        } else {
            present.iter().map(|m| zt[m.index()].unwrap()).collect()
        };
        let stacked = tape.concat_rows(&sources)?;
        let rows: Vec<usize> = edges
            .iter()
            .map(|&(src, _)| if opts.raw_aggregation { src } else { slot(modality[src]) * n + src })
            .collect();
        let msgs = tape.select_rows(stacked, &rows)?;
        let weighted = tape.mul(msgs, tape.matmul(coeff, ones)?)?;
        outs.push(tape.matmul(scatter, weighted)?);
    }
    let cat = if outs.len() == 1 { outs[0] } else { tape.concat_cols(&outs)? };
    Ok(tape.elu(cat))
}

/// `L` layers applied in sequence on the tape.
pub fn stack_forward_tape(
    tape: &Tape,
    g: &HeteroGraph,
    h: Var,
    layers: &[GatLayerVars],
    opts: GatOptions,
) -> Result<Var> {
    if layers.is_empty() {
        return Err(Error::invalid("a layer stack needs at least one layer"));
    }
    layers.iter().try_fold(h, |x, p| layer_forward_tape(tape, g, x, p, opts))
}

pub fn layer_forward(g: &HeteroGraph, params: &GatLayerParams, opts: GatOptions) -> Result<Matrix> {
    stack_forward(g, std::slice::from_ref(params), opts)
}

pub fn stack_forward(g: &HeteroGraph, layers: &[GatLayerParams], opts: GatOptions) -> Result<Matrix> {
    for p in layers {
        p.validate()?;
        if p.dim() != g.dim() {
            return Err(Error::dim("layer width", g.dim(), p.dim()));
        }
    }
    let tape = Tape::new();
    let h = tape.constant(g.features());
    let vars: Vec<GatLayerVars> = layers.iter().map(|p| p.on_tape(&tape)).collect();
    let out = stack_forward_tape(&tape, g, h, &vars, opts)?;
    let value = tape.value(out);
    value.ensure_finite("graph layer output")?;
    Ok(value)
}
