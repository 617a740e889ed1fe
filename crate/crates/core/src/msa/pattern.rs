use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numkit::{dot, Matrix};
use crate::textseg::Granularity;

/// `⌈log₂(n + 1)⌉`, the default window radius and global-set size.
pub fn log_size(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

/// Which keys each query may attend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    pub level: Granularity,
    /// Sorted permitted keys per query.
    pub allowed: Vec<Vec<usize>>,
    /// Keys every query may attend, ascending.
    pub global: Vec<usize>,
    pub window: Option<usize>,
    pub top_k: Option<usize>,
    pub prototypes: Option<usize>,
    pub fanout: Option<usize>,
}

impl SparsityPattern {
    fn bare(level: Granularity, allowed: Vec<Vec<usize>>) -> Self {
        Self {
            level,
            allowed,
            global: Vec::new(),
            window: None,
            top_k: None,
            prototypes: None,
            fanout: None,
        }
    }

    pub fn dense(level: Granularity, n: usize) -> Self {
        Self::bare(level, vec![(0..n).collect(); n])
    }

    /// Each query attends the keys sharing its group.
    pub fn grouped(level: Granularity, group: &[usize]) -> Self {
        let allowed = group
            .iter()
            .map(|g| (0..group.len()).filter(|&j| group[j] == *g).collect())
            .collect();
        Self::bare(level, allowed)
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    pub fn pairs(&self) -> usize {
        self.allowed.iter().map(Vec::len).sum()
    }

    pub fn is_allowed(&self, i: usize, j: usize) -> bool {
        self.allowed[i].binary_search(&j).is_ok()
    }

    /// Every set sorted, in range, and containing its own query.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.allowed.len() != n {
            return Err(Error::dim("sparsity pattern length", n, self.allowed.len()));
        }
        for (i, keys) in self.allowed.iter().enumerate() {
            let sorted = keys.windows(2).all(|w| w[0] < w[1]);
            if !sorted || keys.last().is_some_and(|&j| j >= n) || keys.binary_search(&i).is_err() {
                return Err(Error::invalid(format!("pattern row {i} is malformed: {keys:?}")));
            }
        }
        Ok(())
    }

    /// `0` on allowed pairs and `fill` elsewhere.
    pub fn mask(&self, fill: f64) -> Matrix {
        let n = self.len();
        let mut m = Matrix::filled(n, n, fill);
        for (i, keys) in self.allowed.iter().enumerate() {
            for &j in keys {
                m.row_mut(i)[j] = 0.0;
            }
        }
        m
    }

    /// One `i: j1 j2 ...` line per query.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (i, keys) in self.allowed.iter().enumerate() {
            let keys: Vec<String> = keys.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "{i}: {}", keys.join(" "));
        }
        s
    }
}

fn non_negative(name: &str, v: isize) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::invalid(format!("{name} must be non-negative, got {v}")))
}

/// Positions of the `k` largest scores, ties toward the lower index.
pub(crate) fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Local band of radius `w` plus a shared global set of the `k` rows of `h`
/// most similar (dot product) to the mean row.
pub fn window_pattern(h: &Matrix, w: isize, k: isize, level: Granularity) -> Result<SparsityPattern> {
    let (w, k) = (non_negative("window radius", w)?, non_negative("global size", k)?);
    let n = h.rows();
    if n == 0 {
        return Err(Error::invalid("window pattern needs at least one position"));
    }
    let mean = h.mean_rows();
    let scores: Vec<f64> = h.iter_rows().map(|r| dot(r, mean.row(0))).collect();
    let global = top_k(&scores, k.min(n));
    let allowed = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(w);
            let hi = (i + w).min(n - 1);
            let mut keys: Vec<usize> = (lo..=hi).collect();
            keys.extend(global.iter().filter(|&&g| g < lo || g > hi));
            keys.sort_unstable();
            keys
        })
        .collect();
    Ok(SparsityPattern {
        window: Some(w),
        top_k: Some(k),
        global,
        ..SparsityPattern::bare(level, allowed)
    })
}

/// `window_pattern` with radius and global size `⌈log₂(n + 1)⌉`.
pub fn default_window_pattern(h: &Matrix, level: Granularity) -> Result<SparsityPattern> {
    let s = log_size(h.rows()) as isize;
    window_pattern(h, s, s, level)
}

/// Cluster centers with nearest-center assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeBank {
    pub centers: Matrix,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl PrototypeBank {
    pub fn new(centers: Matrix) -> Result<Self> {
        if centers.rows() == 0 {
            return Err(Error::invalid("prototype bank needs at least one prototype"));
        }
        centers.ensure_finite("prototypes")?;
        Ok(Self { centers })
    }

    /// `k` centers copied from evenly spaced rows of `h`.
    pub fn spaced(h: &Matrix, k: usize) -> Result<Self> {
        let n = h.rows();
        if k == 0 || k > n {
            return Err(Error::invalid(format!("cannot place {k} prototypes on {n} positions")));
        }
        let rows: Vec<usize> = (0..k).map(|c| c * n / k).collect();
        Self::new(h.select_rows(&rows))
    }

    /// Spaced initialization followed by one mean step.
    pub fn fit(h: &Matrix, k: usize) -> Result<Self> {
        let mut bank = Self::spaced(h, k)?;
        bank.update(h)?;
        Ok(bank)
    }

    pub fn len(&self) -> usize {
        self.centers.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.rows() == 0
    }

    /// Prototype indices by increasing distance, ties toward the lower index.
    pub fn ranked(&self, x: &[f64]) -> Vec<usize> {
        let d: Vec<f64> = self.centers.iter_rows().map(|c| sq_dist(x, c)).collect();
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        order
    }

    pub fn nearest(&self, x: &[f64]) -> usize {
        self.ranked(x)[0]
    }

    pub fn assign(&self, h: &Matrix) -> Vec<usize> {
        h.iter_rows().map(|r| self.nearest(r)).collect()
    }

    /// Moves each center to the mean of its members; empty clusters stay put.
    pub fn update(&mut self, h: &Matrix) -> Result<()> {
        if h.cols() != self.centers.cols() {
            return Err(Error::dim("prototype width", self.centers.cols(), h.cols()));
        }
        let assign = self.assign(h);
        let mut sums = Matrix::zeros(self.len(), h.cols());
        let mut counts = vec![0usize; self.len()];
        for (r, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            sums.row_mut(c).iter_mut().zip(h.row(r)).for_each(|(s, x)| *s += x);
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mean: Vec<f64> = sums.row(c).iter().map(|s| s / count as f64).collect();
                self.centers.row_mut(c).copy_from_slice(&mean);
            }
        }
        Ok(())
    }
}

/// Position `i` attends every position whose nearest prototype is among
/// `i`'s `fanout` nearest prototypes.
pub fn prototype_pattern(h: &Matrix, bank: &PrototypeBank, fanout: usize, level: Granularity) -> Result<SparsityPattern> {
    if fanout == 0 || fanout > bank.len() {
        return Err(Error::invalid(format!(
            "fan-out {fanout} outside 1..={}",
            bank.len()
        )));
    }
    if h.cols() != bank.centers.cols() {
        return Err(Error::dim("prototype width", bank.centers.cols(), h.cols()));
    }
    let assign = bank.assign(h);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); bank.len()];
    for (j, &c) in assign.iter().enumerate() {
        members[c].push(j);
    }
    let allowed = h
        .iter_rows()
        .map(|r| {
            let mut keys: Vec<usize> = bank.ranked(r)[..fanout]
                .iter()
                .flat_map(|&c| members[c].iter().copied())
                .collect();
            keys.sort_unstable();
            keys
        })
        .collect();
    Ok(SparsityPattern {
        prototypes: Some(bank.len()),
        fanout: Some(fanout),
        ..SparsityPattern::bare(level, allowed)
    })
}
