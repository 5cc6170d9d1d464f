//! Binary soft-margin SVM on a precomputed kernel.
//!
//! The dual
//!
//! ```text
//! max  Σ αᵢ − ½ Σᵢⱼ αᵢ αⱼ yᵢ yⱼ Kᵢⱼ     s.t.  0 ≤ αᵢ ≤ C,  Σ yᵢ αᵢ = 0
//! ```
//!
//! is solved by pairwise coordinate ascent (SMO) with second-order working
//! set selection. The solver keeps the gradient of the minimization form
//! `½ αᵀQα − 1ᵀα` with `Qᵢⱼ = yᵢ yⱼ Kᵢⱼ` and stops when the maximal KKT
//! violation `m(α) − M(α)` drops below `epsilon`.

use std::borrow::Cow;

use crate::error::{invalid, shape_mismatch, MklError, Result};
use crate::kernel::{CrossKernel, KernelMatrix};
use crate::labels::LabelVector;

/// Default KKT tolerance.
pub const DEFAULT_EPSILON: f64 = 1e-5;
/// Default cap on pair updates.
pub const DEFAULT_MAX_ITER: usize = 10_000_000;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Temporarily drop bounded duals that are unlikely to move.
    pub shrinking: bool,
}

impl SvmParams {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            shrinking: true,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_shrinking(mut self, shrinking: bool) -> Self {
        self.shrinking = shrinking;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return invalid(format!("C must be positive and finite, got {}", self.c));
        }
        if !(self.epsilon > 0.0) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }
}

/// Fitted dual solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub b: f64,
    pub c: f64,
    pub support_indices: Vec<usize>,
    pub dual_objective: f64,
    /// Final maximal KKT violation.
    pub kkt_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    /// `f(x) = Σᵢ αᵢ yᵢ K(xᵢ, x) + b` for every column of `k_cross`.
    pub fn decision_values(&self, k_cross: &CrossKernel, y_train: &LabelVector) -> Result<Vec<f64>> {
        if k_cross.rows() != self.alpha.len() || y_train.len() != self.alpha.len() {
            return shape_mismatch(
                format!("{} training rows", self.alpha.len()),
                format!("{} kernel rows / {} labels", k_cross.rows(), y_train.len()),
            );
        }
        let mut out = vec![self.b; k_cross.cols()];
        for &i in &self.support_indices {
            let coef = self.alpha[i] * f64::from(y_train.get(i));
            for (o, k) in out.iter_mut().zip(k_cross.row(i)) {
                *o += coef * k;
            }
        }
        Ok(out)
    }

    /// Decision values on the training kernel itself.
    pub fn training_decision_values(&self, k: &KernelMatrix, y: &LabelVector) -> Result<Vec<f64>> {
        if k.n() != self.alpha.len() {
            return shape_mismatch(format!("n = {}", self.alpha.len()), format!("n = {}", k.n()));
        }
        let mut out = vec![self.b; k.n()];
        for &i in &self.support_indices {
            let coef = self.alpha[i] * f64::from(y.get(i));
            for (o, v) in out.iter_mut().zip(k.row(i)) {
                *o += coef * v;
            }
        }
        Ok(out)
    }
}

/// Dual objective `Σα − ½ αᵀ Y K Y α`.
pub fn dual_objective(k: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        let row = &k[i * n..(i + 1) * n];
        let mut s = 0.0;
        for j in 0..n {
            if alpha[j] != 0.0 {
                s += alpha[j] * y[j] * row[j];
            }
        }
        quad += alpha[i] * y[i] * s;
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Solves the dual with default tolerance and iteration cap.
pub fn solve_svm_dual(k: &KernelMatrix, y: &LabelVector, c: f64, epsilon: f64) -> Result<SvmModel> {
    SmoSolver::new(SvmParams::new(c).with_epsilon(epsilon)).solve(k, y)
}

/// Reusable SMO configuration.
#[derive(Debug, Clone)]
pub struct SmoSolver {
    params: SvmParams,
    record_objective: bool,
}

/// Solution plus the dual objective after every pair update, for monotonicity checks.
#[derive(Debug, Clone)]
pub struct TracedSolve {
    pub model: SvmModel,
    pub objective_trace: Vec<f64>,
}

impl SmoSolver {
    pub fn new(params: SvmParams) -> Self {
        Self {
            params,
            record_objective: false,
        }
    }

    pub fn params(&self) -> &SvmParams {
        &self.params
    }

    pub fn solve(&self, k: &KernelMatrix, y: &LabelVector) -> Result<SvmModel> {
        self.solve_warm(k, y, None)
    }

    /// Starts from `init_alpha` when given; it is projected onto the feasible set first.
    pub fn solve_warm(&self, k: &KernelMatrix, y: &LabelVector, init_alpha: Option<&[f64]>) -> Result<SvmModel> {
        self.solve_raw(k.as_slice(), k.n(), y, init_alpha).map(|t| t.model)
    }

    pub fn solve_traced(&self, k: &KernelMatrix, y: &LabelVector) -> Result<TracedSolve> {
        let tracer = Self {
            params: self.params,
            record_objective: true,
        };
        tracer.solve_raw(k.as_slice(), k.n(), y, None)
    }

    pub(crate) fn solve_raw(
        &self,
        k: &[f64],
        n: usize,
        labels: &LabelVector,
        init_alpha: Option<&[f64]>,
    ) -> Result<TracedSolve> {
        self.params.validate()?;
        if labels.len() != n || k.len() != n * n {
            return shape_mismatch(format!("{n} examples"), format!("{} labels", labels.len()));
        }
        labels.require_both_classes()?;
        if k.iter().any(|v| !v.is_finite()) {
            return invalid("kernel has non-finite entries");
        }
        let y = labels.as_f64();
        let c = self.params.c;

        let mut alpha = match init_alpha {
            Some(a) if a.len() == n => feasible_start(a, &y, c),
            Some(a) => return shape_mismatch(format!("{n} initial duals"), format!("{}", a.len())),
            None => vec![0.0; n],
        };

        // grad = Qα − 1
        let mut grad = vec![-1.0; n];
        for j in 0..n {
            if alpha[j] != 0.0 {
                let row = &k[j * n..(j + 1) * n];
                let coef = alpha[j] * y[j];
                for i in 0..n {
                    grad[i] += y[i] * coef * row[i];
                }
            }
        }

        let mut objective = if self.record_objective {
            dual_objective(k, &y, &alpha)
        } else {
            0.0
        };
        let mut trace = Vec::new();
        let mut iterations = 0usize;
        let mut gap;
        let converged;

        let eps = self.params.epsilon;
        let shrink_every = n.min(1000);
        let mut counter = shrink_every;
        let mut unshrunk = false;
        let mut w = Work::build(k, n, (0..n).collect(), &y, &alpha, &grad, c);
        // (max −yG over I_up, argmax), carried over from the gradient update
        let mut first: Option<(f64, Option<usize>)> = None;

        loop {
            if self.params.shrinking {
                counter -= 1;
                if counter == 0 {
                    counter = shrink_every;
                    w.scatter(&mut alpha, &mut grad);
                    let mut active = w.idx.clone();
                    shrink(k, n, &y, &alpha, &mut grad, c, eps, &mut active, &mut unshrunk);
                    if active != w.idx {
                        w = Work::build(k, n, active, &y, &alpha, &grad, c);
                        first = None;
                    }
                }
            }
            let mut sel = w.select(first.take());
            if (sel.gap < eps || sel.pair.is_none()) && w.len() < n {
                w.scatter(&mut alpha, &mut grad);
                reconstruct_gradient(k, n, &y, &alpha, &mut grad, &w.idx);
                w = Work::build(k, n, (0..n).collect(), &y, &alpha, &grad, c);
                sel = w.select(None);
                counter = 1;
            }
            gap = sel.gap;
            if gap < eps {
                converged = true;
                break;
            }
            if iterations >= self.params.max_iter {
                converged = false;
                break;
            }
            let (i, j) = match sel.pair {
                Some(p) => p,
                None => {
                    converged = true;
                    break;
                }
            };
            iterations += 1;

            let a = w.len();
            let wa = &mut w.alpha;
            let (old_ai, old_aj) = (wa[i], wa[j]);
            let (yi, yj) = (w.y[i], w.y[j]);
            let kij = w.k[i * a + j];
            let quad = (w.diag[i] + w.diag[j] - 2.0 * kij).max(TAU);
            let (gi, gj) = (w.grad[i], w.grad[j]);

            if yi != yj {
                let delta = (-gi - gj) / quad;
                let diff = wa[i] - wa[j];
                wa[i] += delta;
                wa[j] += delta;
                if diff > 0.0 {
                    if wa[j] < 0.0 {
                        wa[j] = 0.0;
                        wa[i] = diff;
                    }
                } else if wa[i] < 0.0 {
                    wa[i] = 0.0;
                    wa[j] = -diff;
                }
                if diff > 0.0 {
                    if wa[i] > c {
                        wa[i] = c;
                        wa[j] = c - diff;
                    }
                } else if wa[j] > c {
                    wa[j] = c;
                    wa[i] = c + diff;
                }
            } else {
                let delta = (gi - gj) / quad;
                let sum = wa[i] + wa[j];
                wa[i] -= delta;
                wa[j] += delta;
                if sum > c {
                    if wa[i] > c {
                        wa[i] = c;
                        wa[j] = sum - c;
                    }
                } else if wa[j] < 0.0 {
                    wa[j] = 0.0;
                    wa[i] = sum;
                }
                if sum > c {
                    if wa[j] > c {
                        wa[j] = c;
                        wa[i] = sum - c;
                    }
                } else if wa[i] < 0.0 {
                    wa[i] = 0.0;
                    wa[j] = sum;
                }
            }

            let (di, dj) = (wa[i] - old_ai, wa[j] - old_aj);
            if self.record_objective {
                // change of the minimization objective ½αᵀQα − 1ᵀα
                let qij = yi * yj * kij;
                let df = gi * di + gj * dj + 0.5 * (w.diag[i] * di * di + w.diag[j] * dj * dj) + qij * di * dj;
                objective -= df;
                trace.push(objective);
            }
            w.refresh_sets(i, c);
            w.refresh_sets(j, c);
            first = Some(w.update_gradient(i, j, yi * di, yj * dj));
        }
        w.scatter(&mut alpha, &mut grad);
        if w.len() < n {
            reconstruct_gradient(k, n, &y, &alpha, &mut grad, &w.idx);
        }

        let b = offset(&y, &alpha, &grad, c);
        let dual = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
        let support_indices = (0..n).filter(|&i| alpha[i] > 0.0).collect();
        if !dual.is_finite() || !b.is_finite() {
            return Err(MklError::Numerical("SMO produced a non-finite solution".into()));
        }
        Ok(TracedSolve {
            model: SvmModel {
                alpha,
                b,
                c,
                support_indices,
                dual_objective: dual,
                kkt_gap: gap,
                iterations,
                converged,
            },
            objective_trace: trace,
        })
    }
}

struct Selection {
    pair: Option<(usize, usize)>,
    gap: f64,
}

#[inline]
fn in_up(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 {
        a < c
    } else {
        a > 0.0
    }
}

#[inline]
fn in_low(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 {
        a > 0.0
    } else {
        a < c
    }
}

/// Active sub-problem with its kernel block stored contiguously.
struct Work<'k> {
    idx: Vec<usize>,
    k: Cow<'k, [f64]>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    diag: Vec<f64>,
    /// 0 when the index is in I_up, −∞ otherwise.
    up_pen: Vec<f64>,
    /// 0 when the index is in I_low, −∞ otherwise.
    low_pen: Vec<f64>,
    scratch: Vec<f64>,
}

#[inline]
fn pen(member: bool) -> f64 {
    if member {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// First index of the maximum; `None` when everything is −∞.
#[inline]
fn first_argmax(v: &[f64]) -> (f64, Option<usize>) {
    let (mut best, mut arg) = (f64::NEG_INFINITY, usize::MAX);
    for (t, &x) in v.iter().enumerate() {
        if x > best {
            best = x;
            arg = t;
        }
    }
    (best, (arg != usize::MAX).then_some(arg))
}

impl<'k> Work<'k> {
    fn build(k: &'k [f64], n: usize, idx: Vec<usize>, y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> Self {
        let a = idx.len();
        let kc = if a == n {
            Cow::Borrowed(k)
        } else {
            let mut v = Vec::with_capacity(a * a);
            for &r in &idx {
                let row = &k[r * n..(r + 1) * n];
                v.extend(idx.iter().map(|&s| row[s]));
            }
            Cow::Owned(v)
        };
        let pick = |src: &[f64]| idx.iter().map(|&t| src[t]).collect::<Vec<f64>>();
        let (yc, ac, gc) = (pick(y), pick(alpha), pick(grad));
        let diag = idx.iter().map(|&t| k[t * n + t]).collect();
        let up_pen = (0..a).map(|t| pen(in_up(yc[t], ac[t], c))).collect();
        let low_pen = (0..a).map(|t| pen(in_low(yc[t], ac[t], c))).collect();
        Self {
            idx,
            k: kc,
            y: yc,
            alpha: ac,
            grad: gc,
            diag,
            up_pen,
            low_pen,
            scratch: vec![0.0; a],
        }
    }

    fn len(&self) -> usize {
        self.idx.len()
    }

    fn refresh_sets(&mut self, t: usize, c: f64) {
        self.up_pen[t] = pen(in_up(self.y[t], self.alpha[t], c));
        self.low_pen[t] = pen(in_low(self.y[t], self.alpha[t], c));
    }

    fn scatter(&self, alpha: &mut [f64], grad: &mut [f64]) {
        for (l, &t) in self.idx.iter().enumerate() {
            alpha[t] = self.alpha[l];
            grad[t] = self.grad[l];
        }
    }

    /// Applies the pair update to the gradient and returns the next `i` candidate.
    fn update_gradient(&mut self, i: usize, j: usize, ci: f64, cj: f64) -> (f64, Option<usize>) {
        let a = self.len();
        let (row_i, row_j) = (&self.k[i * a..(i + 1) * a], &self.k[j * a..(j + 1) * a]);
        let (grad, y, up, out) = (&mut self.grad[..a], &self.y[..a], &self.up_pen[..a], &mut self.scratch[..a]);
        for t in 0..a {
            let g = grad[t] + y[t] * (ci * row_i[t] + cj * row_j[t]);
            grad[t] = g;
            out[t] = up[t] - y[t] * g;
        }
        first_argmax(out)
    }

    /// Maximal violating `i` plus second-order choice of `j`; ties go to the lowest index.
    fn select(&mut self, first: Option<(f64, Option<usize>)>) -> Selection {
        let a = self.len();
        let (y, grad, diag) = (&self.y[..a], &self.grad[..a], &self.diag[..a]);
        let (gmax, i_sel) = match first {
            Some(f) => f,
            None => {
                let out = &mut self.scratch[..a];
                for t in 0..a {
                    out[t] = self.up_pen[t] - y[t] * grad[t];
                }
                first_argmax(out)
            }
        };
        let low = &self.low_pen[..a];
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        if let Some(i) = i_sel {
            let row_i = &self.k[i * a..(i + 1) * a];
            let di = diag[i];
            let out = &mut self.scratch[..a];
            for t in 0..a {
                let v = low[t] + y[t] * grad[t];
                gmax2 = if v > gmax2 { v } else { gmax2 };
                let bdiff = gmax + v;
                let q = di + diag[t] - 2.0 * row_i[t];
                let q = if q > 0.0 { q } else { TAU };
                // negated second-order gain, so the argmax is the best j
                out[t] = if bdiff > 0.0 { bdiff * bdiff / q } else { f64::NEG_INFINITY };
            }
            j_sel = first_argmax(out).1;
        } else {
            for t in 0..a {
                let v = low[t] + y[t] * grad[t];
                gmax2 = if v > gmax2 { v } else { gmax2 };
            }
        }
        let gap = if gmax.is_finite() && gmax2.is_finite() {
            gmax + gmax2
        } else {
            0.0
        };
        Selection {
            pair: i_sel.zip(j_sel),
            gap,
        }
    }
}

/// Maximal violations over the active set, `(max_{I_up} −yG, max_{I_low} yG)`.
fn violations(y: &[f64], alpha: &[f64], grad: &[f64], c: f64, active: &[usize]) -> (f64, f64) {
    let (mut g1, mut g2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &t in active {
        if in_up(y[t], alpha[t], c) {
            g1 = g1.max(-y[t] * grad[t]);
        }
        if in_low(y[t], alpha[t], c) {
            g2 = g2.max(y[t] * grad[t]);
        }
    }
    (g1, g2)
}

#[allow(clippy::too_many_arguments)]
fn shrink(
    k: &[f64],
    n: usize,
    y: &[f64],
    alpha: &[f64],
    grad: &mut [f64],
    c: f64,
    eps: f64,
    active: &mut Vec<usize>,
    unshrunk: &mut bool,
) {
    let (mut g1, mut g2) = violations(y, alpha, grad, c, active);
    if !*unshrunk && g1 + g2 <= 10.0 * eps {
        // close to the end: bring everything back once and reshrink
        *unshrunk = true;
        if active.len() < n {
            reconstruct_gradient(k, n, y, alpha, grad, active);
            *active = (0..n).collect();
            (g1, g2) = violations(y, alpha, grad, c, active);
        }
    }
    active.retain(|&t| {
        let g = grad[t];
        let pos = y[t] > 0.0;
        let stuck = if alpha[t] >= c {
            if pos {
                -g > g1
            } else {
                -g > g2
            }
        } else if alpha[t] <= 0.0 {
            if pos {
                g > g2
            } else {
                g > g1
            }
        } else {
            false
        };
        !stuck
    });
}

/// Recomputes `G = Qα − 1` for every index outside `active`.
fn reconstruct_gradient(k: &[f64], n: usize, y: &[f64], alpha: &[f64], grad: &mut [f64], active: &[usize]) {
    let mut is_active = vec![false; n];
    for &t in active {
        is_active[t] = true;
    }
    let sv: Vec<(usize, f64)> = (0..n).filter(|&j| alpha[j] > 0.0).map(|j| (j, alpha[j] * y[j])).collect();
    for t in (0..n).filter(|&t| !is_active[t]) {
        let row = &k[t * n..(t + 1) * n];
        let s: f64 = sv.iter().map(|&(j, ay)| ay * row[j]).sum();
        grad[t] = y[t] * s - 1.0;
    }
}

/// `b = −ρ`; ρ averaged over free vectors, else the midpoint of the feasible interval.
fn offset(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    };
    -rho
}

/// Projects a warm start into the box and repairs the equality constraint.
fn feasible_start(init: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let mut alpha: Vec<f64> = init.iter().map(|a| a.clamp(0.0, c)).collect();
    let mut excess: f64 = alpha.iter().zip(y).map(|(a, y)| a * y).sum();
    if excess.abs() <= 1e-12 {
        return alpha;
    }
    // Lower duals of the class that carries the excess until Σ yα = 0.
    let sign = excess.signum();
    for t in 0..alpha.len() {
        if excess.abs() <= 0.0 {
            break;
        }
        if y[t] == sign && alpha[t] > 0.0 {
            let take = alpha[t].min(excess.abs());
            alpha[t] -= take;
            excess -= sign * take;
        }
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point() -> (KernelMatrix, LabelVector) {
        (
            KernelMatrix::new(2, vec![1.0, -1.0, -1.0, 1.0], "k").unwrap(),
            LabelVector::new(vec![1, -1]).unwrap(),
        )
    }

    #[test]
    fn analytic_two_point_solution() {
        let (k, y) = two_point();
        let m = solve_svm_dual(&k, &y, 10.0, 1e-10).unwrap();
        assert_abs_diff_eq!(m.alpha[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.alpha[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.b, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.dual_objective, 0.5, epsilon = 1e-12);
        let f = m.training_decision_values(&k, &y).unwrap();
        assert_abs_diff_eq!(f[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn decision_on_hand_column() {
        let (k, y) = two_point();
        let m = solve_svm_dual(&k, &y, 10.0, 1e-10).unwrap();
        let col = CrossKernel::new(2, 1, vec![1.0, -1.0]).unwrap();
        let f = m.decision_values(&col, &y).unwrap();
        assert_abs_diff_eq!(f[0], 1.0, epsilon = 1e-12);
        assert!(m.decision_values(&CrossKernel::new(3, 1, vec![0.0; 3]).unwrap(), &y).is_err());
    }

    #[test]
    fn zero_alpha_model_is_constant() {
        let m = SvmModel {
            alpha: vec![0.0; 3],
            b: 0.25,
            c: 1.0,
            support_indices: vec![],
            dual_objective: 0.0,
            kkt_gap: 0.0,
            iterations: 0,
            converged: true,
        };
        let y = LabelVector::new(vec![1, -1, 1]).unwrap();
        let col = CrossKernel::new(3, 2, vec![0.3, 0.1, 0.9, 0.5, 0.2, 0.7]).unwrap();
        assert_eq!(m.decision_values(&col, &y).unwrap(), vec![0.25, 0.25]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (k, _) = two_point();
        let one_class = LabelVector::new(vec![1, 1]).unwrap();
        assert!(matches!(solve_svm_dual(&k, &one_class, 1.0, 1e-5), Err(MklError::SingleClass { .. })));
        let y = LabelVector::new(vec![1, -1]).unwrap();
        assert!(solve_svm_dual(&k, &y, 0.0, 1e-5).is_err());
        assert!(solve_svm_dual(&k, &LabelVector::new(vec![1, -1, 1]).unwrap(), 1.0, 1e-5).is_err());
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let n = 30;
        let k = KernelMatrix::from_fn(n, "k", |i, j| (-((i as f64 - j as f64).powi(2)) / 20.0).exp());
        let y = LabelVector::from_bools((0..n).map(|i| i % 3 == 0));
        let m = SmoSolver::new(SvmParams::new(10.0).with_epsilon(1e-12).with_max_iter(2))
            .solve(&k, &y)
            .unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 2);
    }

    #[test]
    fn warm_start_reaches_same_objective() {
        let n = 25;
        let k = KernelMatrix::from_fn(n, "k", |i, j| (-((i as f64 - j as f64).powi(2)) / 30.0).exp());
        let y = LabelVector::from_bools((0..n).map(|i| (i * 7) % 5 < 2));
        let solver = SmoSolver::new(SvmParams::new(2.0).with_epsilon(1e-10));
        let cold = solver.solve(&k, &y).unwrap();
        let junk: Vec<f64> = (0..n).map(|i| (i % 4) as f64).collect();
        let warm = solver.solve_warm(&k, &y, Some(&junk)).unwrap();
        assert_abs_diff_eq!(cold.dual_objective, warm.dual_objective, epsilon = 1e-8);
    }

    #[test]
    fn shrinking_matches_full_scan() {
        let n = 150;
        let mut rng = crate::rng::SplitMix64::new(5);
        let x: Vec<[f64; 2]> = (0..n).map(|_| [rng.standard_normal(), rng.standard_normal()]).collect();
        let y = LabelVector::from_bools(x.iter().map(|p| p[0] + 0.5 * rng.standard_normal() > 0.3));
        let k = KernelMatrix::from_fn(n, "k", |i, j| {
            let d = (x[i][0] - x[j][0]).powi(2) + (x[i][1] - x[j][1]).powi(2);
            (-d / 2.0).exp()
        });
        for c in [0.1, 10.0, 1000.0] {
            let base = SvmParams::new(c).with_epsilon(1e-8);
            let a = SmoSolver::new(base).solve(&k, &y).unwrap();
            let b = SmoSolver::new(base.with_shrinking(false)).solve(&k, &y).unwrap();
            assert!(a.converged && b.converged, "C={c}: {} {} {} {}", a.iterations, a.kkt_gap, b.iterations, b.kkt_gap);
            assert_abs_diff_eq!(a.dual_objective, b.dual_objective, epsilon = 1e-6 * (1.0 + b.dual_objective.abs()));
            assert!(a.kkt_gap < 1e-8);
        }
    }

    #[test]
    fn feasible_start_satisfies_constraints() {
        let y = [1.0, 1.0, -1.0, -1.0, 1.0];
        let a = feasible_start(&[3.0, 0.5, 0.1, -2.0, 0.7], &y, 1.0);
        assert!(a.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let s: f64 = a.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(s.abs() < 1e-12);
    }
}
