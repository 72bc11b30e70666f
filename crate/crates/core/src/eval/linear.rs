use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, dot, norm_inf, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Ridge,
}

/// Solver bookkeeping. `objective_path` holds the objective after every
/// accepted optimizer step (empty for the closed-form ridge solve).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub objective_path: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub kind: ModelKind,
    pub lambda: f64,
    pub diagnostics: FitDiagnostics,
}

impl LinearModel {
    /// `Xw + b`: the regression prediction, or the log-odds for logistic.
    pub fn decision(&self, x: &Matrix) -> Vec<f64> {
        x.mul_vec(&self.weights).into_iter().map(|z| z + self.bias).collect()
    }

    /// Regression value or positive-class probability.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let z = self.decision(x);
        match self.kind {
            ModelKind::Ridge => z,
            ModelKind::Logistic => z.into_iter().map(sigmoid).collect(),
        }
    }
}

fn check_inputs(x: &Matrix, y: &[f64], lambda: f64) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(alloc::format!("lambda must be a finite value >= 0, got {lambda}")));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("design matrix"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("target"));
    }
    Ok(())
}

/// Minimises `‖Xw + b·1 − y‖² + λ‖w‖²` with an unpenalised bias, via the
/// normal equations on centred data.
pub fn fit_ridge(x: &Matrix, y: &[f64], lambda: f64) -> Result<LinearModel> {
    check_inputs(x, y, lambda)?;
    let (n, p) = (x.rows(), x.cols());
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let x_mean: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64)
        .collect();

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut centred = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..p {
            centred[j] = row[j] - x_mean[j];
        }
        let yc = y[i] - y_mean;
        for a in 0..p {
            rhs[a] += centred[a] * yc;
            for b in a..p {
                gram[a * p + b] += centred[a] * centred[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
        gram[a * p + a] += lambda;
    }
    let weights = if p == 0 {
        Vec::new()
    } else {
        cholesky_solve(&gram, p, &rhs, 1e-10)?
    };
    let bias = y_mean - dot(&x_mean, &weights);
    Ok(LinearModel {
        weights,
        bias,
        kind: ModelKind::Ridge,
        lambda,
        diagnostics: FitDiagnostics {
            iterations: 1,
            converged: true,
            gradient_norm: 0.0,
            objective_path: Vec::new(),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticOptions {
    /// Stop once the gradient ∞-norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-libm::fabs(z)))
}

/// Penalised logistic objective
/// `(1/n) Σ [ln(1 + e^{zᵢ}) − yᵢ zᵢ] + (λ / 2n) ‖w‖²`, `zᵢ = xᵢ·w + b`.
pub struct LogisticObjective<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(x: &'a Matrix, y: &'a [f64], lambda: f64) -> Self {
        LogisticObjective { x, y, lambda }
    }

    pub fn value(&self, w: &[f64], b: f64) -> f64 {
        let n = self.y.len() as f64;
        let loss: f64 = (0..self.x.rows())
            .map(|i| {
                let z = dot(self.x.row(i), w) + b;
                softplus(z) - self.y[i] * z
            })
            .sum();
        loss / n + self.lambda / (2.0 * n) * dot(w, w)
    }

    /// Gradient with respect to `(w, b)`.
    pub fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.y.len() as f64;
        let mut gw = vec![0.0; w.len()];
        let mut gb = 0.0;
        for i in 0..self.x.rows() {
            let row = self.x.row(i);
            let r = sigmoid(dot(row, w) + b) - self.y[i];
            for (g, &xv) in gw.iter_mut().zip(row) {
                *g += r * xv;
            }
            gb += r;
        }
        for (g, &wj) in gw.iter_mut().zip(w) {
            *g = (*g + self.lambda * wj) / n;
        }
        (gw, gb / n)
    }

    /// Hessian over `(w, b)` stacked, bias last, row-major.
    fn hessian(&self, w: &[f64], b: f64) -> Vec<f64> {
        let p = w.len();
        let m = p + 1;
        let n = self.y.len() as f64;
        let mut h = vec![0.0; m * m];
        for i in 0..self.x.rows() {
            let row = self.x.row(i);
            let pr = sigmoid(dot(row, w) + b);
            let s = pr * (1.0 - pr);
            if s == 0.0 {
                continue;
            }
            for a in 0..m {
                let xa = if a < p { row[a] } else { 1.0 };
                if xa == 0.0 {
                    continue;
                }
                let sxa = s * xa;
                for c in a..m {
                    let xc = if c < p { row[c] } else { 1.0 };
                    h[a * m + c] += sxa * xc;
                }
            }
        }
        for a in 0..m {
            for c in a..m {
                h[a * m + c] /= n;
                h[c * m + a] = h[a * m + c];
            }
        }
        for a in 0..p {
            h[a * m + a] += self.lambda / n;
        }
        h
    }
}

/// Fits L2-penalised logistic regression by damped Newton with Armijo
/// backtracking, falling back to steepest descent when the Newton system
/// is singular. Labels must be exactly 0 or 1.
pub fn fit_logistic(x: &Matrix, y: &[f64], lambda: f64, opts: LogisticOptions) -> Result<LinearModel> {
    check_inputs(x, y, lambda)?;
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::NonBinaryLabels);
    }
    let p = x.cols();
    let obj = LogisticObjective::new(x, y, lambda);
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut f = obj.value(&w, b);
    let mut diag = FitDiagnostics::default();

    for iter in 0..=opts.max_iter {
        let (gw, gb) = obj.gradient(&w, b);
        let mut g = gw;
        g.push(gb);
        diag.gradient_norm = norm_inf(&g);
        diag.iterations = iter;
        if diag.gradient_norm < opts.tol {
            diag.converged = true;
            break;
        }
        if iter == opts.max_iter {
            break;
        }
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let newton = newton_direction(&obj.hessian(&w, b), p + 1, &neg_g);
        let mut accepted = None;
        for dir in newton.iter().chain(core::iter::once(&neg_g)) {
            if let Some(step) = backtrack(&obj, &w, b, f, &g, dir) {
                accepted = Some(step);
                break;
            }
        }
        match accepted {
            Some((nw, nb, nf)) => {
                w = nw;
                b = nb;
                f = nf;
                diag.objective_path.push(f);
            }
            // no descent possible at working precision
            None => break,
        }
    }

    Ok(LinearModel {
        weights: w,
        bias: b,
        kind: ModelKind::Logistic,
        lambda,
        diagnostics: diag,
    })
}

fn newton_direction(h: &[f64], m: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    if let Ok(d) = cholesky_solve(h, m, rhs, 1e-13) {
        return Some(d);
    }
    let scale = (0..m).fold(0.0f64, |acc, i| acc.max(h[i * m + i])).max(1e-300);
    let mut jitter = 1e-10 * scale;
    let mut hj = h.to_vec();
    for _ in 0..6 {
        for i in 0..m {
            hj[i * m + i] = h[i * m + i] + jitter;
        }
        if let Ok(d) = cholesky_solve(&hj, m, rhs, 1e-15) {
            return Some(d);
        }
        jitter *= 100.0;
    }
    None
}

fn backtrack(
    obj: &LogisticObjective<'_>,
    w: &[f64],
    b: f64,
    f: f64,
    g: &[f64],
    dir: &[f64],
) -> Option<(Vec<f64>, f64, f64)> {
    let slope = dot(g, dir);
    if !(slope < 0.0) {
        return None;
    }
    let p = w.len();
    let mut t = 1.0;
    for _ in 0..60 {
        let nw: Vec<f64> = w.iter().zip(dir).map(|(wi, di)| wi + t * di).collect();
        let nb = b + t * dir[p];
        let nf = obj.value(&nw, nb);
        if nf.is_finite() && nf <= f + 1e-4 * t * slope && nf < f {
            return Some((nw, nb, nf));
        }
        t *= 0.5;
    }
    None
}
