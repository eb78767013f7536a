//! Epsilon-insensitive support vector regression solved by SMO with
//! second-order working-set selection.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    /// `(gamma * <x, z> + coef0)^degree`
    Poly { degree: u32, gamma: f64, coef0: f64 },
    /// `exp(-gamma * |x - z|^2)`
    Rbf { gamma: f64 },
}

impl Kernel {
    /// Kernel value from the dot product and the two squared norms.
    pub fn from_dot(&self, dot: f64, xx: f64, zz: f64) -> f64 {
        match *self {
            Kernel::Linear => dot,
            Kernel::Poly { degree, gamma, coef0 } => (gamma * dot + coef0).powi(degree as i32),
            Kernel::Rbf { gamma } => (-gamma * (xx + zz - 2.0 * dot).max(0.0)).exp(),
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        let dot = dot(x, z);
        match self {
            Kernel::Linear => dot,
            _ => self.from_dot(dot, self::dot(x, x), self::dot(z, z)),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Kernel::Linear => "linear".into(),
            Kernel::Poly { degree, .. } => format!("poly{degree}"),
            Kernel::Rbf { gamma } => format!("rbf(gamma={gamma})"),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: Kernel,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            kernel: Kernel::Linear,
            tol: 1e-3,
            max_iter: 200_000,
        }
    }
}

/// Pairwise dot products of training rows, shared across kernels.
#[derive(Clone, Debug)]
pub struct Gram {
    pub dots: Vec<f64>,
    pub n: usize,
}

impl Gram {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let mut dots = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let d = dot(&x[i], &x[j]);
                dots[i * n + j] = d;
                dots[j * n + i] = d;
            }
        }
        Gram { dots, n }
    }

    /// Sub-Gram over `rows`.
    pub fn subset(&self, rows: &[usize]) -> Gram {
        let m = rows.len();
        let mut dots = vec![0.0; m * m];
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate() {
                dots[a * m + b] = self.dots[i * self.n + j];
            }
        }
        Gram { dots, n: m }
    }

    pub fn kernel_matrix(&self, k: Kernel) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = k.from_dot(self.dots[i * n + j], self.dots[i * n + i], self.dots[j * n + j]);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: Kernel,
    /// Support vectors with their coefficients `alpha - alpha*`.
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvrModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * self.kernel.eval(s, x))
            .sum::<f64>()
            + self.bias
    }
}

const TAU: f64 = 1e-12;

/// Trains on rows `x` with precomputed kernel matrix `k` (row-major, n×n).
pub fn train_with_kernel(x: &[Vec<f64>], y: &[f64], k: &[f64], p: &SvrParams) -> SvrModel {
    let l = y.len();
    let n2 = 2 * l;
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let kk = |a: usize, b: usize| k[(a % l) * l + (b % l)];
    let qd: Vec<f64> = (0..n2).map(|t| kk(t, t)).collect();
    let c = p.c;
    let mut alpha = vec![0.0f64; n2];
    let mut g: Vec<f64> = (0..n2).map(|t| if t < l { p.epsilon - y[t] } else { p.epsilon + y[t - l] }).collect();
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let mut iter = 0;
    let mut converged = false;
    while iter < p.max_iter {
        // select i
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n2 {
            if sign(t) > 0.0 {
                if !upper(alpha[t]) && -g[t] >= gmax {
                    gmax = -g[t];
                    i = t;
                }
            } else if !lower(alpha[t]) && g[t] >= gmax {
                gmax = g[t];
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i != usize::MAX {
            let ki = &k[(i % l) * l..(i % l + 1) * l];
            for t in 0..n2 {
                let yt = sign(t);
                let quad = qd[i] + qd[t] - 2.0 * ki[if t < l { t } else { t - l }];
                if yt > 0.0 {
                    if !lower(alpha[t]) {
                        let diff = gmax + g[t];
                        gmax2 = gmax2.max(g[t]);
                        if diff > 0.0 {
                            let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                            if obj <= obj_min {
                                obj_min = obj;
                                j = t;
                            }
                        }
                    }
                } else if !upper(alpha[t]) {
                    let diff = gmax - g[t];
                    gmax2 = gmax2.max(-g[t]);
                    if diff > 0.0 {
                        let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                        if obj <= obj_min {
                            obj_min = obj;
                            j = t;
                        }
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < p.tol {
            converged = true;
            break;
        }
        iter += 1;
        let (yi, yj) = (sign(i), sign(j));
        let qij = yi * yj * kk(i, j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if yi != yj {
            let mut quad = qd[i] + qd[j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let ki = &k[(i % l) * l..(i % l + 1) * l];
        let kj = &k[(j % l) * l..(j % l + 1) * l];
        let (ci, cj) = (yi * di, yj * dj);
        let (gp, gn) = g.split_at_mut(l);
        for t in 0..l {
            let d = ci * ki[t] + cj * kj[t];
            gp[t] += d;
            gn[t] -= d;
        }
    }
    // bias
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut nfree, mut sfree) = (0usize, 0.0);
    for t in 0..n2 {
        let yg = sign(t) * g[t];
        if upper(alpha[t]) {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            nfree += 1;
            sfree += yg;
        }
    }
    let rho = if nfree > 0 {
        sfree / nfree as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else {
        0.0
    };
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for s in 0..l {
        let b = alpha[s] - alpha[s + l];
        if b != 0.0 {
            support.push(x[s].clone());
            coef.push(b);
        }
    }
    SvrModel {
        kernel: p.kernel,
        support,
        coef,
        bias: -rho,
        iterations: iter,
        converged,
    }
}

pub fn train(x: &[Vec<f64>], y: &[f64], p: &SvrParams) -> SvrModel {
    let k = Gram::new(x).kernel_matrix(p.kernel);
    train_with_kernel(x, y, &k, p)
}
