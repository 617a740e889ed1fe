//! Reverse-mode gradient tape.
//!
//! Every primitive records its output value and its inputs; [`Tape::backward`]
//! walks the record in exact reverse order and accumulates partial derivatives
//! additively. Each primitive carries a hand-written backward rule.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    StopGradient(#[allow(dead_code)] Var),
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// matrix times a 1x1 var
    ScaleBy(Var, Var),
    /// matrix divided by a 1x1 var
    DivBy(Var, Var),
    Scale(Var, f64),
    AddScalar(Var, Var),
    Exp(Var),
    LnFloor(Var, f64),
    Square(Var),
    LeakyRelu(Var, f64),
    Elu(Var),
    Softplus(Var),
    Sigmoid(Var),
    SoftmaxRows(Var),
    LogSumExpRows(Var),
    Sum(Var),
    MeanRows(Var),
    /// output[i] = src.data[idx[i]]
    Gather(Var, Vec<usize>),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    /// cosine of a 1xd row against each row of an mxd matrix
    CosineRows(Var, Var),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    tracks_grad: bool,
}

/// Append-only record of a computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Gradients of a scalar with respect to every node of a tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient for `v`; zeros when nothing flowed into it.
    pub fn get(&self, v: Var) -> Matrix {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[v.0];
                Matrix::zeros(r, c)
            }
        }
    }

    /// Whether any gradient reached `v` at all.
    pub fn reached(&self, v: Var) -> bool {
        self.grads[v.0].is_some()
    }
}

fn same_shape(ctx: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            ctx,
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    Ok(())
}

fn need_scalar(ctx: &'static str, m: &Matrix) -> Result<()> {
    if m.shape() != (1, 1) {
        return Err(Error::dim(ctx, "1x1", format!("{:?}", m.shape())));
    }
    Ok(())
}

pub(crate) fn softmax_row_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

fn logsumexp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Matrix, op: Op, tracks_grad: bool) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            tracks_grad,
        });
        Var(nodes.len() - 1)
    }

    fn tracks(&self, vars: &[Var]) -> bool {
        let nodes = self.nodes.borrow();
        vars.iter().any(|v| nodes[v.0].tracks_grad)
    }

    fn unary(&self, x: Var, f: impl FnOnce(&Matrix) -> Matrix, op: Op) -> Var {
        let value = f(&self.nodes.borrow()[x.0].value);
        let t = self.tracks(&[x]);
        self.push(value, op, t)
    }

    /// A trainable leaf.
    pub fn param(&self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf that never receives gradient.
    pub fn constant(&self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn scalar(&self, value: f64) -> Var {
        self.constant(Matrix::scalar(value))
    }

    pub fn value(&self, v: Var) -> Matrix {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes.borrow()[v.0].value.shape()
    }

    /// Runs `f` against the stored value without cloning it.
    pub fn with_value<R>(&self, v: Var, f: impl FnOnce(&Matrix) -> R) -> R {
        f(&self.nodes.borrow()[v.0].value)
    }

    pub fn item(&self, v: Var) -> f64 {
        self.nodes.borrow()[v.0].value.item()
    }

    /// Identity in the forward pass; blocks all gradient in the backward pass.
    pub fn stop_gradient(&self, x: Var) -> Var {
        let value = self.value(x);
        self.push(value, Op::StopGradient(x), false)
    }

    pub fn matmul(&self, a: Var, b: Var) -> Result<Var> {
        let value = {
            let n = self.nodes.borrow();
            n[a.0].value.matmul(&n[b.0].value)?
        };
        let t = self.tracks(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), t))
    }

    pub fn transpose(&self, x: Var) -> Var {
        self.unary(x, Matrix::transpose, Op::Transpose(x))
    }

    fn binary(
        &self,
        ctx: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let value = {
            let n = self.nodes.borrow();
            same_shape(ctx, &n[a.0].value, &n[b.0].value)?;
            n[a.0].value.zip_map(&n[b.0].value, f)?
        };
        let t = self.tracks(&[a, b]);
        Ok(self.push(value, op, t))
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// `x * s` for a `1 × 1` var `s`.
    pub fn scale_by(&self, x: Var, s: Var) -> Result<Var> {
        let value = {
            let n = self.nodes.borrow();
            need_scalar("scale_by", &n[s.0].value)?;
            n[x.0].value.scale(n[s.0].value.item())
        };
        let t = self.tracks(&[x, s]);
        Ok(self.push(value, Op::ScaleBy(x, s), t))
    }

    /// `x / s` for a `1 × 1` var `s`.
    pub fn div_by(&self, x: Var, s: Var) -> Result<Var> {
        let value = {
            let n = self.nodes.borrow();
            need_scalar("div_by", &n[s.0].value)?;
            let d = n[s.0].value.item();
            n[x.0].value.map(|v| v / d)
        };
        let t = self.tracks(&[x, s]);
        Ok(self.push(value, Op::DivBy(x, s), t))
    }

    pub fn scale(&self, x: Var, s: f64) -> Var {
        self.unary(x, |m| m.scale(s), Op::Scale(x, s))
    }

    /// Adds a `1 × 1` var to every entry of `x`.
    pub fn add_scalar(&self, x: Var, s: Var) -> Result<Var> {
        let value = {
            let n = self.nodes.borrow();
            need_scalar("add_scalar", &n[s.0].value)?;
            let c = n[s.0].value.item();
            n[x.0].value.map(|v| v + c)
        };
        let t = self.tracks(&[x, s]);
        Ok(self.push(value, Op::AddScalar(x, s), t))
    }

    pub fn exp(&self, x: Var) -> Var {
        self.unary(x, |m| m.map(f64::exp), Op::Exp(x))
    }

    /// `ln(max(x, floor))`; the gradient is zero where the floor is active.
    pub fn ln_floor(&self, x: Var, floor: f64) -> Var {
        self.unary(x, |m| m.map(|v| v.max(floor).ln()), Op::LnFloor(x, floor))
    }

    pub fn square(&self, x: Var) -> Var {
        self.unary(x, |m| m.map(|v| v * v), Op::Square(x))
    }

    pub fn leaky_relu(&self, x: Var, slope: f64) -> Var {
        self.unary(
            x,
            |m| m.map(|v| if v > 0.0 { v } else { slope * v }),
            Op::LeakyRelu(x, slope),
        )
    }

    /// Exponential-linear unit with unit saturation constant.
    pub fn elu(&self, x: Var) -> Var {
        self.unary(
            x,
            |m| m.map(|v| if v > 0.0 { v } else { v.exp_m1() }),
            Op::Elu(x),
        )
    }

    pub fn softplus(&self, x: Var) -> Var {
        self.unary(x, |m| m.map(softplus), Op::Softplus(x))
    }

    pub fn sigmoid(&self, x: Var) -> Var {
        self.unary(x, |m| m.map(sigmoid), Op::Sigmoid(x))
    }

    pub fn softmax_rows(&self, x: Var) -> Var {
        self.unary(
            x,
            |m| {
                let mut out = m.clone();
                for r in 0..out.rows() {
                    softmax_row_in_place(out.row_mut(r));
                }
                out
            },
            Op::SoftmaxRows(x),
        )
    }

    /// Row-wise log-sum-exp, `n × m -> n × 1`.
    pub fn logsumexp_rows(&self, x: Var) -> Var {
        self.unary(
            x,
            |m| {
                let data = m.iter_rows().map(logsumexp).collect::<Vec<_>>();
                Matrix::from_vec(m.rows(), 1, data).expect("one value per row")
            },
            Op::LogSumExpRows(x),
        )
    }

    pub fn sum(&self, x: Var) -> Var {
        self.unary(x, |m| Matrix::scalar(m.sum()), Op::Sum(x))
    }

    /// Column-wise mean, `n × d -> 1 × d`.
    pub fn mean_rows(&self, x: Var) -> Var {
        self.unary(x, Matrix::mean_rows, Op::MeanRows(x))
    }

    /// Arbitrary gather by flat index into a `rows × cols` output.
    pub fn gather(&self, x: Var, idx: Vec<usize>, rows: usize, cols: usize) -> Result<Var> {
        if idx.len() != rows * cols {
            return Err(Error::dim("gather", rows * cols, idx.len()));
        }
        let value = {
            let n = self.nodes.borrow();
            let src = n[x.0].value.data();
            if let Some(&bad) = idx.iter().find(|&&i| i >= src.len()) {
                return Err(Error::dim("gather index", format!("< {}", src.len()), bad));
            }
            Matrix::from_vec(rows, cols, idx.iter().map(|&i| src[i]).collect())?
        };
        let t = self.tracks(&[x]);
        Ok(self.push(value, Op::Gather(x, idx), t))
    }

    pub fn select_rows(&self, x: Var, rows: &[usize]) -> Result<Var> {
        let (nr, nc) = self.shape(x);
        if let Some(&bad) = rows.iter().find(|&&r| r >= nr) {
            return Err(Error::dim("select_rows", format!("< {nr}"), bad));
        }
        let idx = rows
            .iter()
            .flat_map(|&r| (0..nc).map(move |c| r * nc + c))
            .collect();
        self.gather(x, idx, rows.len(), nc)
    }

    pub fn row(&self, x: Var, r: usize) -> Result<Var> {
        self.select_rows(x, &[r])
    }

    pub fn slice_cols(&self, x: Var, start: usize, end: usize) -> Result<Var> {
        let (nr, nc) = self.shape(x);
        if start > end || end > nc {
            return Err(Error::dim("slice_cols", format!("range within {nc}"), format!("{start}..{end}")));
        }
        let idx = (0..nr)
            .flat_map(|r| (start..end).map(move |c| r * nc + c))
            .collect();
        self.gather(x, idx, nr, end - start)
    }

    /// Single entry as a `1 × 1` var.
    pub fn entry(&self, x: Var, r: usize, c: usize) -> Result<Var> {
        let (_, nc) = self.shape(x);
        self.gather(x, vec![r * nc + c], 1, 1)
    }

    pub fn concat_cols(&self, parts: &[Var]) -> Result<Var> {
        let value = {
            let n = self.nodes.borrow();
            let rows = parts.first().map_or(0, |p| n[p.0].value.rows());
            let mut cols = 0;
            for p in parts {
                let v = &n[p.0].value;
                if v.rows() != rows {
                    return Err(Error::dim("concat_cols", rows, v.rows()));
                }
                cols += v.cols();
            }
            let mut out = Matrix::zeros(rows, cols);
            let mut off = 0;
            for p in parts {
                let v = &n[p.0].value;
                for r in 0..rows {
                    out.row_mut(r)[off..off + v.cols()].copy_from_slice(v.row(r));
                }
                off += v.cols();
            }
            out
        };
        let t = self.tracks(parts);
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), t))
    }

    pub fn concat_rows(&self, parts: &[Var]) -> Result<Var> {
        let value = {
            let n = self.nodes.borrow();
            let cols = parts.first().map_or(0, |p| n[p.0].value.cols());
            let mut data = Vec::new();
            let mut rows = 0;
            for p in parts {
                let v = &n[p.0].value;
                if v.cols() != cols {
                    return Err(Error::dim("concat_rows", cols, v.cols()));
                }
                data.extend_from_slice(v.data());
                rows += v.rows();
            }
            Matrix::from_vec(rows, cols, data)?
        };
        let t = self.tracks(parts);
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), t))
    }

    /// Cosine similarity of row `a` (1×d) against each row of `b` (m×d), giving 1×m.
    ///
    /// A zero-norm operand yields similarity 0 and zero gradient.
    pub fn cosine_rows(&self, a: Var, b: Var) -> Result<Var> {
        let value = {
            let n = self.nodes.borrow();
            let (av, bv) = (&n[a.0].value, &n[b.0].value);
            if av.rows() != 1 || av.cols() != bv.cols() {
                return Err(Error::dim(
                    "cosine_rows",
                    format!("1x{}", bv.cols()),
                    format!("{:?}", av.shape()),
                ));
            }
            let data = bv
                .iter_rows()
                .map(|r| crate::numkit::cosine_sim(av.row(0), r).value)
                .collect();
            Matrix::from_vec(1, bv.rows(), data)?
        };
        let t = self.tracks(&[a, b]);
        Ok(self.push(value, Op::CosineRows(a, b), t))
    }

    /// Gradients of the `1 × 1` output `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        need_scalar("backward", &nodes[loss.0].value)?;
        let shapes: Vec<_> = nodes.iter().map(|n| n.value.shape()).collect();
        let mut grads: Vec<Option<Matrix>> = vec![None; nodes.len()];
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let node = &nodes[i];
            if !node.tracks_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            if matches!(node.op, Op::Leaf) {
                grads[i] = Some(g);
                continue;
            }
            let out = &node.value;
            let mut send = |v: Var, contrib: Matrix| {
                if !nodes[v.0].tracks_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(acc) => {
                        for (a, c) in acc.data_mut().iter_mut().zip(contrib.data()) {
                            *a += c;
                        }
                    }
                    slot @ None => *slot = Some(contrib),
                }
            };
            match &node.op {
                Op::Leaf => unreachable!("leaves handled above"),
                Op::StopGradient(_) => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (&nodes[a.0].value, &nodes[b.0].value);
                    send(*a, g.matmul(&bv.transpose())?);
                    send(*b, av.transpose().matmul(&g)?);
                }
                Op::Transpose(x) => send(*x, g.transpose()),
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.clone());
                }
                Op::Sub(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.scale(-1.0));
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&nodes[a.0].value, &nodes[b.0].value);
                    send(*a, g.zip_map(bv, |x, y| x * y)?);
                    send(*b, g.zip_map(av, |x, y| x * y)?);
                }
                Op::ScaleBy(x, s) => {
                    let sv = nodes[s.0].value.item();
                    let xv = &nodes[x.0].value;
                    send(*x, g.scale(sv));
                    let ds: f64 = g.data().iter().zip(xv.data()).map(|(a, b)| a * b).sum();
                    send(*s, Matrix::scalar(ds));
                }
                Op::DivBy(x, s) => {
                    let sv = nodes[s.0].value.item();
                    send(*x, g.scale(1.0 / sv));
                    // d(x/s)/ds = -x/s^2 = -out/s
                    let ds: f64 = g.data().iter().zip(out.data()).map(|(a, o)| -a * o / sv).sum();
                    send(*s, Matrix::scalar(ds));
                }
                Op::Scale(x, s) => send(*x, g.scale(*s)),
                Op::AddScalar(x, s) => {
                    send(*x, g.clone());
                    send(*s, Matrix::scalar(g.sum()));
                }
                Op::Exp(x) => send(*x, g.zip_map(out, |a, o| a * o)?),
                Op::LnFloor(x, floor) => {
                    let xv = &nodes[x.0].value;
                    send(
                        *x,
                        g.zip_map(xv, |a, v| if v > *floor { a / v } else { 0.0 })?,
                    );
                }
                Op::Square(x) => {
                    let xv = &nodes[x.0].value;
                    send(*x, g.zip_map(xv, |a, v| 2.0 * a * v)?);
                }
                Op::LeakyRelu(x, slope) => {
                    let xv = &nodes[x.0].value;
                    send(*x, g.zip_map(xv, |a, v| if v > 0.0 { a } else { slope * a })?);
                }
                Op::Elu(x) => {
                    let xv = &nodes[x.0].value;
                    send(*x, g.zip_map(xv, |a, v| if v > 0.0 { a } else { a * v.exp() })?);
                }
                Op::Softplus(x) => {
                    let xv = &nodes[x.0].value;
                    send(*x, g.zip_map(xv, |a, v| a * sigmoid(v))?);
                }
                Op::Sigmoid(x) => send(*x, g.zip_map(out, |a, o| a * o * (1.0 - o))?),
                Op::SoftmaxRows(x) => {
                    let mut dx = Matrix::zeros(out.rows(), out.cols());
                    for r in 0..out.rows() {
                        let (p, gr) = (out.row(r), g.row(r));
                        let inner: f64 = p.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for (d, (pv, gv)) in dx.row_mut(r).iter_mut().zip(p.iter().zip(gr)) {
                            *d = pv * (gv - inner);
                        }
                    }
                    send(*x, dx);
                }
                Op::LogSumExpRows(x) => {
                    let xv = &nodes[x.0].value;
                    let mut dx = xv.clone();
                    for r in 0..xv.rows() {
                        let (lse, gr) = (out[(r, 0)], g[(r, 0)]);
                        for v in dx.row_mut(r) {
                            *v = gr * (*v - lse).exp();
                        }
                    }
                    send(*x, dx);
                }
                Op::Sum(x) => {
                    let (r, c) = shapes[x.0];
                    send(*x, Matrix::filled(r, c, g.item()));
                }
                Op::MeanRows(x) => {
                    let (r, c) = shapes[x.0];
                    let mut dx = Matrix::zeros(r, c);
                    let inv = 1.0 / r as f64;
                    for row in 0..r {
                        for (d, gv) in dx.row_mut(row).iter_mut().zip(g.row(0)) {
                            *d = gv * inv;
                        }
                    }
                    send(*x, dx);
                }
                Op::Gather(x, idx) => {
                    let (r, c) = shapes[x.0];
                    let mut dx = Matrix::zeros(r, c);
                    let d = dx.data_mut();
                    for (&i, gv) in idx.iter().zip(g.data()) {
                        d[i] += gv;
                    }
                    send(*x, dx);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let w = shapes[p.0].1;
                        send(*p, g.slice_cols(off, off + w));
                        off += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let h = shapes[p.0].0;
                        let idx: Vec<usize> = (off..off + h).collect();
                        send(*p, g.select_rows(&idx));
                        off += h;
                    }
                }
                Op::CosineRows(a, b) => {
                    let (av, bv) = (&nodes[a.0].value, &nodes[b.0].value);
                    let ar = av.row(0);
                    let na = crate::numkit::norm(ar);
                    let mut da = Matrix::zeros(1, av.cols());
                    let mut db = Matrix::zeros(bv.rows(), bv.cols());
                    for j in 0..bv.rows() {
                        let br = bv.row(j);
                        let nb = crate::numkit::norm(br);
                        if na == 0.0 || nb == 0.0 {
                            continue;
                        }
                        let s = out[(0, j)];
                        let gj = g[(0, j)];
                        for k in 0..ar.len() {
                            da.data_mut()[k] += gj * (br[k] / (na * nb) - s * ar[k] / (na * na));
                            db[(j, k)] = gj * (ar[k] / (na * nb) - s * br[k] / (nb * nb));
                        }
                    }
                    send(*a, da);
                    send(*b, db);
                }
            }
        }
        Ok(Gradients { grads, shapes })
    }
}
