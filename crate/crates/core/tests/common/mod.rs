#![allow(dead_code)]

use lpmkl::kernel::{gaussian_kernel, weighted_sum};
use lpmkl::mkl::{solve_lp_mkl, MklParams};
use lpmkl::rng::SplitMix64;
use lpmkl::svm::{dual_objective, solve_svm_dual};
use lpmkl::{FeatureGroupMatrix, KernelMatrix, LabelVector, Norm};

/// Random points in `d` dimensions with a unit-width Gaussian kernel.
pub fn random_kernel(rng: &mut SplitMix64, n: usize, d: usize, width: f64) -> KernelMatrix {
    let values: Vec<f64> = (0..n * d).map(|_| rng.standard_normal()).collect();
    let x = FeatureGroupMatrix::new(n, d, values, 0).unwrap();
    gaussian_kernel(&x, width).unwrap()
}

/// Random labels with at least one example of each class.
pub fn random_labels(rng: &mut SplitMix64, n: usize) -> LabelVector {
    loop {
        let y = LabelVector::from_bools((0..n).map(|_| rng.next_f64() < 0.4));
        if y.n_pos() > 0 && y.n_neg() > 0 {
            return y;
        }
    }
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c)).collect() };
    let g = |lam: f64| -> f64 { at(lam).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    // g is nonincreasing in lam
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Maximal SVM dual objective by accelerated projected gradient.
pub fn qp_oracle(k: &KernelMatrix, y: &LabelVector, c: f64) -> f64 {
    let n = k.n();
    let yf = y.as_f64();
    let q: Vec<f64> = (0..n * n).map(|t| yf[t / n] * yf[t % n] * k.as_slice()[t]).collect();
    let lip = (0..n).map(|i| q[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lip.max(1e-12);
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0_f64;
    for _ in 0..20_000 {
        let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i * n + j] * z[j]).sum::<f64>() - 1.0).collect();
        let v: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi - step * gi).collect();
        let next = project(&v, &yf, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / t_next * (a - b)).collect();
        x = next;
        t = t_next;
    }
    dual_objective(k.as_slice(), &yf, &x)
}

/// Smallest SVM dual optimum over β = (cos θ, sin θ) on a uniform grid of θ ∈ [0, π/2].
pub fn beta_grid_oracle(k1: &KernelMatrix, k2: &KernelMatrix, y: &LabelVector, c: f64, points: usize) -> f64 {
    (0..points)
        .map(|i| {
            let theta = std::f64::consts::FRAC_PI_2 * i as f64 / (points - 1) as f64;
            let k = weighted_sum(&[k1.clone(), k2.clone()], &[theta.cos(), theta.sin()]).unwrap();
            solve_svm_dual(&k, y, c, 1e-8).unwrap().dual_objective
        })
        .fold(f64::INFINITY, f64::min)
}

/// ℓ2-MKL dual objective on a two-kernel instance.
pub fn mkl_l2_objective(k1: &KernelMatrix, k2: &KernelMatrix, y: &LabelVector, c: f64) -> f64 {
    let params = MklParams::new(c, Norm::Finite(2.0)).with_svm_epsilon(1e-8).with_tol(1e-8);
    solve_lp_mkl(&[k1.clone(), k2.clone()], y, &params).unwrap().dual_objective()
}
