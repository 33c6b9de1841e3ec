use nalgebra::{DMatrix, DVector, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{curve_weights, CapacityEstimate, CapacityMethod, EstimatorError};
use crate::protocol::{EnergyCurve, EnergyScale};
use crate::quadrature::{integrate, QuadratureError};

const QUAD_TOL: f64 = 1e-10;
const QUAD_MAX_INTERVALS: usize = 4000;
const MAX_ITERATIONS: usize = 500;
const REL_COST_TOL: f64 = 1e-10;
const C_MIN: f64 = 1e-6;
/// `c = exp(γ)` with `γ` kept in this range so `u^c` stays representable.
const GAMMA_RANGE: (f64, f64) = (-20.0, 5.0);

/// `C(N) = a / (1 + exp(b - c log N))`, with `Ū(N) = u_inf + ∫_N^∞ C(k)/k² dk`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub u_inf: f64,
}

impl SigmoidParams {
    pub fn capacity(&self, n: f64) -> f64 {
        self.a * logistic(self.c * n.ln() - self.b)
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A fitted sigmoid with its uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidCapacityModel {
    pub params: SigmoidParams,
    /// Covariance of `(a, b, c, u_inf)`.
    pub covariance: [[f64; 4]; 4],
    /// Root-mean-square of the unweighted energy residuals.
    pub residual_rms: f64,
    /// Weighted sum of squared residuals at the optimum.
    pub chi2: f64,
    pub iterations: usize,
    /// Index of the winning start.
    pub start_index: usize,
    /// `(N, observed Ū, fitted Ū)` for each curve point.
    pub residuals: Vec<(usize, f64, f64)>,
    pub scale: EnergyScale,
}

impl SigmoidCapacityModel {
    /// Wraps known parameters with zero uncertainty.
    pub fn from_params(params: SigmoidParams) -> Self {
        Self {
            params,
            covariance: [[0.0; 4]; 4],
            residual_rms: 0.0,
            chi2: 0.0,
            iterations: 0,
            start_index: 0,
            residuals: Vec::new(),
            scale: EnergyScale::Nll,
        }
    }

    pub fn n_max(&self) -> Option<usize> {
        self.residuals.last().map(|r| r.0)
    }

    /// `C(N)` with a delta-method stderr from the parameter covariance.
    pub fn capacity_at(&self, n: usize) -> CapacityEstimate {
        let p = &self.params;
        let ln = (n as f64).ln();
        let s = logistic(p.c * ln - p.b);
        let grad = [s, -p.a * s * (1.0 - s), p.a * s * (1.0 - s) * ln];
        let mut var = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                var += grad[i] * self.covariance[i][j] * grad[j];
            }
        }
        CapacityEstimate { value: p.a * s, stderr: var.max(0.0).sqrt(), at_n: n, method: CapacityMethod::Sigmoid }
    }

    pub fn stderr(&self, index: usize) -> f64 {
        self.covariance[index][index].max(0.0).sqrt()
    }
}

/// `u_inf + ∫_0^{1/N} a / (1 + e^b u^c) du`, the integrated sigmoid energy.
pub fn energy_from_sigmoid(params: &SigmoidParams, n: f64) -> Result<f64, EstimatorError> {
    if !(n >= 1.0) {
        return Err(EstimatorError::InvalidArgument(format!("N must be >= 1, got {n}")));
    }
    if params.a == 0.0 {
        return Ok(params.u_inf);
    }
    let integral = tail_integral(params, n, |s, _| logistic(-s))?;
    Ok(params.u_inf + params.a * integral)
}

/// `∫_0^{1/N} g(b + c ln u, ln u) du`.
fn tail_integral(p: &SigmoidParams, n: f64, g: impl Fn(f64, f64) -> f64) -> Result<f64, QuadratureError> {
    if n.is_infinite() {
        return Ok(0.0);
    }
    integrate(
        |u| {
            let lu = u.ln();
            g(p.b + p.c * lu, lu)
        },
        0.0,
        1.0 / n,
        QUAD_TOL,
        QUAD_MAX_INTERVALS,
    )
}

/// Internal coordinates `(a, b, γ, u_inf)` with `c = e^γ`.
type Theta = [f64; 4];

fn to_params(t: &Theta) -> SigmoidParams {
    SigmoidParams { a: t[0], b: t[1], c: t[2].exp(), u_inf: t[3] }
}

fn project(t: &mut Theta) {
    t[0] = t[0].max(0.0);
    t[2] = t[2].clamp(GAMMA_RANGE.0, GAMMA_RANGE.1);
}

struct Problem {
    ns: Vec<f64>,
    y: Vec<f64>,
    sqrt_w: Vec<f64>,
}

impl Problem {
    fn residuals(&self, t: &Theta) -> Option<Vec<f64>> {
        let p = to_params(t);
        self.ns
            .iter()
            .zip(&self.y)
            .zip(&self.sqrt_w)
            .map(|((&n, &y), &sw)| energy_from_sigmoid(&p, n).ok().map(|f| sw * (y - f)).filter(|r| r.is_finite()))
            .collect()
    }

    /// Weighted Jacobian of the model energy with respect to `θ`.
    fn jacobian(&self, t: &Theta) -> Option<DMatrix<f64>> {
        let p = to_params(t);
        let mut j = DMatrix::zeros(self.ns.len(), 4);
        for (i, &n) in self.ns.iter().enumerate() {
            let i0 = tail_integral(&p, n, |s, _| logistic(-s)).ok()?;
            let ib = tail_integral(&p, n, |s, _| logistic(s) * logistic(-s)).ok()?;
            let ic = tail_integral(&p, n, |s, lu| logistic(s) * logistic(-s) * lu).ok()?;
            let sw = self.sqrt_w[i];
            j[(i, 0)] = sw * i0;
            j[(i, 1)] = -sw * p.a * ib;
            j[(i, 2)] = -sw * p.a * p.c * ic;
            j[(i, 3)] = sw;
        }
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

struct LmResult {
    theta: Theta,
    cost: f64,
    iterations: usize,
}

fn levenberg_marquardt(problem: &Problem, start: Theta) -> Option<LmResult> {
    let mut theta = start;
    project(&mut theta);
    let mut r = problem.residuals(&theta)?;
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jac = problem.jacobian(&theta)?;
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let diag_floor = 1e-12 * a.diagonal().max().max(1e-300);
        let mut accepted = None;
        while mu < 1e20 {
            let mut damped = a.clone();
            for k in 0..4 {
                damped[(k, k)] += mu * a[(k, k)].max(diag_floor);
            }
            let Some(delta) = damped.cholesky().map(|ch| ch.solve(&g)) else {
                mu *= 10.0;
                continue;
            };
            let mut trial = theta;
            for k in 0..4 {
                trial[k] += delta[k];
            }
            project(&mut trial);
            match problem.residuals(&trial) {
                Some(rt) => {
                    let ct: f64 = rt.iter().map(|v| v * v).sum();
                    if ct < cost {
                        mu = (mu / 10.0).max(1e-12);
                        accepted = Some((trial, rt, ct));
                        break;
                    }
                    mu *= 10.0;
                }
                None => mu *= 10.0,
            }
        }
        let Some((trial, rt, ct)) = accepted else { break };
        let rel = (cost - ct) / cost.max(1e-300);
        theta = trial;
        r = rt;
        cost = ct;
        if rel < REL_COST_TOL {
            break;
        }
    }
    Some(LmResult { theta, cost, iterations })
}

/// The eight deterministic starting points: `a₀` from the finite-difference
/// capacity at the first and last grid gaps, `c₀ ∈ {0.5, 2}`, and the
/// sigmoid midpoint at either the grid's geometric mean or its smallest N.
pub fn sigmoid_initializations(curve: &EnergyCurve) -> Vec<SigmoidParams> {
    let ns = curve.ns();
    let u = curve.means();
    let m = ns.len();
    if m < 2 {
        return Vec::new();
    }
    let gap_capacity = |i: usize| {
        let nmid = (ns[i] * ns[i + 1]).sqrt();
        (nmid * nmid * ((u[i + 1] - u[i]) / (ns[i + 1] - ns[i])).abs()).max(1e-8)
    };
    let a0 = [gap_capacity(0), gap_capacity(m - 2)];
    let geo = (ns.iter().map(|n| n.ln()).sum::<f64>() / m as f64).exp();
    let u_min = u.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = Vec::with_capacity(8);
    for &a in &a0 {
        for &c in &[0.5, 2.0] {
            for &mid in &[geo, ns[0]] {
                out.push(SigmoidParams { a, b: c * f64::ln(mid), c, u_inf: u_min });
            }
        }
    }
    out
}

/// Weighted least-squares fit of the integrated sigmoid energy to `curve`.
///
/// Runs Levenberg–Marquardt from each deterministic start (plus `init`, if
/// given, tried first) and keeps the lowest cost, ties going to the earlier
/// start. The covariance is the pseudo-inverse of the Gauss–Newton Hessian
/// scaled by the residual variance.
pub fn fit_sigmoid_capacity(
    curve: &EnergyCurve,
    init: Option<SigmoidParams>,
) -> Result<SigmoidCapacityModel, EstimatorError> {
    let m = curve.len();
    if m < 5 {
        return Err(EstimatorError::DegenerateCurve { points: m });
    }
    let weights = curve_weights(&curve.stderrs());
    let problem = Problem { ns: curve.ns(), y: curve.means(), sqrt_w: weights.iter().map(|w| w.sqrt()).collect() };

    let mut starts: Vec<SigmoidParams> = init.into_iter().collect();
    starts.extend(sigmoid_initializations(curve));
    let results: Vec<Option<LmResult>> = starts
        .par_iter()
        .map(|p| {
            let theta = [p.a, p.b, p.c.max(1e-300).ln(), p.u_inf];
            levenberg_marquardt(&problem, theta).filter(|r| r.cost.is_finite())
        })
        .collect();
    let (start_index, best) = results
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .min_by(|x, y| x.1.cost.total_cmp(&y.1.cost).then(x.0.cmp(&y.0)))
        .ok_or_else(|| EstimatorError::FitDiverged(format!("{} starts, none produced a finite cost", starts.len())))?;

    let jac = problem
        .jacobian(&best.theta)
        .ok_or_else(|| EstimatorError::FitDiverged("Jacobian not finite at the optimum".into()))?;
    let hess = jac.transpose() * &jac;
    let s2 = best.cost / (m - 4) as f64;
    let svd_eps = 1e-12 * hess.amax().max(1e-300);
    let pinv = hess.pseudo_inverse(svd_eps).map_err(|e| EstimatorError::FitDiverged(e.to_string()))?;
    let params = to_params(&best.theta);
    let jac_c = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, params.c, 1.0));
    let cov_theta = Matrix4::from_fn(|i, j| pinv[(i, j)] * s2);
    let cov = jac_c * cov_theta * jac_c;

    let mut residuals = Vec::with_capacity(m);
    let mut sq = 0.0;
    for pt in &curve.points {
        let fitted = energy_from_sigmoid(&params, pt.n as f64)?;
        sq += (pt.u_mean - fitted).powi(2);
        residuals.push((pt.n, pt.u_mean, fitted));
    }

    Ok(SigmoidCapacityModel {
        params,
        covariance: std::array::from_fn(|i| std::array::from_fn(|j| cov[(i, j)])),
        residual_rms: (sq / m as f64).sqrt(),
        chi2: best.cost,
        iterations: best.iterations,
        start_index,
        residuals,
        scale: curve.scale,
    })
}

/// What to do next at the current sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Guidance {
    ProcureMoreData,
    Transition,
    SearchArchitectures,
}

impl Guidance {
    pub fn describe(self) -> &'static str {
        match self {
            Guidance::ProcureMoreData => "procure more data",
            Guidance::Transition => "in transition",
            Guidance::SearchArchitectures => "search for a different architecture",
        }
    }
}

/// Sigmoid midpoint `n_star = exp(b/c)`, where `C = a/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezingThreshold {
    pub n_star: f64,
}

impl FreezingThreshold {
    pub fn guidance(&self, n_current: f64) -> Guidance {
        if n_current < self.n_star {
            Guidance::ProcureMoreData
        } else if n_current > 10.0 * self.n_star {
            Guidance::SearchArchitectures
        } else {
            Guidance::Transition
        }
    }
}

pub fn freezing_threshold(params: &SigmoidParams) -> Result<FreezingThreshold, EstimatorError> {
    if !(params.c > C_MIN) {
        return Err(EstimatorError::UndefinedThreshold { c: params.c });
    }
    Ok(FreezingThreshold { n_star: (params.b / params.c).exp() })
}
