//! Sup-norm estimates on the polytorus.
//!
//! Both estimators return honest lower bounds: the reported value is the
//! modulus at the returned witness, which lies on the torus.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::poly::{MultilinearForm, Point, SparsePolynomial};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub restarts: u32,
    pub max_iterations: u32,
    pub step_size: f64,
    pub tolerance: f64,
    /// points per phase coordinate for the exhaustive grid, 0 disables it
    pub grid_resolution: u32,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { restarts: 32, max_iterations: 500, step_size: 0.5, tolerance: 1e-10, grid_resolution: 64, seed: 0 }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.tolerance > 0.0) || !(self.step_size > 0.0) || self.restarts == 0 || self.max_iterations == 0 {
            return Err(crate::Error::InvalidArgument(
                "restarts, iterations, step size and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Largest grid dimension searched exhaustively (after fixing one phase).
const MAX_GRID_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// phases in [0, 2pi); one map for a polynomial, one per slot for a form
    pub witness: Vec<BTreeMap<u64, f64>>,
    pub converged: bool,
    pub evaluations: u64,
}

fn wrap_phase(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Polynomial compiled to dense variable ids.
struct Compiled {
    vars: Vec<u64>,
    terms: Vec<(Complex64, Vec<(usize, f64)>)>,
}

impl Compiled {
    fn new(p: &SparsePolynomial) -> Self {
        let vars = p.variable_support();
        let terms = p
            .terms()
            .map(|(a, c)| {
                let ex = a
                    .exponents()
                    .iter()
                    .map(|(v, &e)| (vars.binary_search(v).unwrap(), f64::from(e)))
                    .collect();
                (*c, ex)
            })
            .collect();
        Self { vars, terms }
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for (c, ex) in &self.terms {
            let phase: f64 = ex.iter().map(|&(j, e)| e * theta[j]).sum();
            sum += c * Complex64::cis(phase);
        }
        sum.norm_sqr()
    }

    /// |P(e^{i theta})|^2 and its gradient; d/dtheta_j multiplies a term by i a_j.
    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut dsum = vec![Complex64::new(0.0, 0.0); theta.len()];
        for (c, ex) in &self.terms {
            let phase: f64 = ex.iter().map(|&(j, e)| e * theta[j]).sum();
            let w = c * Complex64::cis(phase);
            sum += w;
            for &(j, e) in ex {
                dsum[j] += Complex64::new(-w.im, w.re) * e;
            }
        }
        for (g, d) in grad.iter_mut().zip(&dsum) {
            *g = 2.0 * (sum.conj() * d).re;
        }
        sum.norm_sqr()
    }
}

struct Ascent {
    theta: Vec<f64>,
    value: f64,
    converged: bool,
    evaluations: u64,
}

/// Normalized-gradient ascent with backtracking (Armijo) line search.
fn ascend(poly: &Compiled, mut theta: Vec<f64>, s: &OptimizerSettings) -> Ascent {
    let d = theta.len();
    let mut grad = vec![0.0; d];
    let mut f = poly.value_grad(&theta, &mut grad);
    let mut evaluations = 1;
    let mut step = s.step_size;
    let mut converged = false;
    let mut trial = vec![0.0; d];
    'outer: for _ in 0..s.max_iterations {
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gn <= 1e-14 * f || f == 0.0 {
            converged = true;
            break;
        }
        loop {
            for j in 0..d {
                trial[j] = theta[j] + step * grad[j] / gn;
            }
            let ft = poly.value(&trial);
            evaluations += 1;
            if ft >= f + 1e-4 * step * gn {
                let gain = ft - f;
                std::mem::swap(&mut theta, &mut trial);
                f = poly.value_grad(&theta, &mut grad);
                evaluations += 1;
                step = (step * 2.0).min(std::f64::consts::PI);
                if gain <= s.tolerance * f {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                converged = true;
                break 'outer;
            }
        }
    }
    Ascent { theta, value: f, converged, evaluations }
}

/// Best point of a uniform phase grid with the first phase fixed at 0
/// (|P| is invariant under a common phase rotation of all variables).
fn grid_search(poly: &Compiled, res: usize) -> (Vec<f64>, u64) {
    let d = poly.vars.len();
    let free = d - 1;
    let total = res.pow(free as u32);
    let mut best = (f64::NEG_INFINITY, vec![0.0; d]);
    let mut theta = vec![0.0; d];
    for idx in 0..total {
        let mut k = idx;
        for t in theta.iter_mut().skip(1) {
            *t = (k % res) as f64 * TAU / res as f64;
            k /= res;
        }
        let f = poly.value(&theta);
        if f > best.0 {
            best = (f, theta.clone());
        }
    }
    (best.1, total as u64)
}

fn poly_witness(vars: &[u64], theta: &[f64]) -> BTreeMap<u64, f64> {
    vars.iter().zip(theta).map(|(&v, &t)| (v, wrap_phase(t))).collect()
}

/// Lower estimate of sup |P| over the polytorus of its variable support:
/// the best of an optional exhaustive phase grid (refined by ascent) and
/// `restarts` random-start gradient ascents on |P(e^{i theta})|^2.
pub fn sup_norm_poly(p: &SparsePolynomial, s: &OptimizerSettings) -> NormEstimate {
    if p.is_empty() {
        return NormEstimate { value: 0.0, witness: vec![BTreeMap::new()], converged: true, evaluations: 0 };
    }
    let poly = Compiled::new(p);
    let d = poly.vars.len();
    if p.len() == 1 {
        let witness = poly_witness(&poly.vars, &vec![0.0; d]);
        return finish_poly(p, witness, true, 1);
    }

    let mut runs: Vec<Ascent> = Vec::new();
    if s.grid_resolution > 0 && d - 1 <= MAX_GRID_DIM {
        let (start, evals) = grid_search(&poly, s.grid_resolution as usize);
        let mut a = ascend(&poly, start, s);
        a.evaluations += evals;
        runs.push(a);
    }
    let restarts: Vec<Ascent> = (0..s.restarts)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(s.seed, u64::from(r));
            let start: Vec<f64> = (0..d).map(|_| g.random_range(0.0..TAU)).collect();
            ascend(&poly, start, s)
        })
        .collect();
    runs.extend(restarts);

    let evaluations = runs.iter().map(|a| a.evaluations).sum::<u64>();
    let mut best = &runs[0];
    for a in &runs[1..] {
        if a.value > best.value {
            best = a;
        }
    }
    finish_poly(p, poly_witness(&poly.vars, &best.theta), best.converged, evaluations)
}

fn finish_poly(p: &SparsePolynomial, witness: BTreeMap<u64, f64>, converged: bool, evaluations: u64) -> NormEstimate {
    let z: Point = witness.iter().map(|(&v, &t)| (v, Complex64::cis(t))).collect();
    let value = p.evaluate(&z).expect("witness covers the support").norm();
    NormEstimate { value, witness: vec![witness], converged, evaluations }
}

struct CompiledForm {
    supports: Vec<Vec<u64>>,
    entries: Vec<(Complex64, Vec<usize>)>,
}

impl CompiledForm {
    fn new(t: &MultilinearForm) -> Self {
        let supports: Vec<Vec<u64>> = (0..t.m()).map(|k| t.slot_support(k)).collect();
        let entries = t
            .entries()
            .map(|(idx, v)| {
                let local = idx.iter().enumerate().map(|(k, i)| supports[k].binary_search(i).unwrap()).collect();
                (*v, local)
            })
            .collect();
        Self { supports, entries }
    }

    /// Replaces slot k by its optimal unimodular vector; returns the new value sum |a_v|.
    fn best_slot(&self, x: &mut [Vec<Complex64>], k: usize) -> f64 {
        let mut a = vec![Complex64::new(0.0, 0.0); self.supports[k].len()];
        for (v, idx) in &self.entries {
            let mut term = *v;
            for (l, &i) in idx.iter().enumerate() {
                if l != k {
                    term *= x[l][i];
                }
            }
            a[idx[k]] += term;
        }
        let mut total = 0.0;
        for (xi, ai) in x[k].iter_mut().zip(&a) {
            let r = ai.norm();
            if r > 0.0 {
                *xi = ai.conj() / r;
                total += r;
            }
        }
        total
    }
}

/// Lower estimate of sup |T| over the product of unit polydiscs by alternating
/// exact one-slot maximization from random unimodular starts.
pub fn sup_norm_form(t: &MultilinearForm, s: &OptimizerSettings) -> NormEstimate {
    let m = t.m();
    if t.is_empty() {
        return NormEstimate { value: 0.0, witness: vec![BTreeMap::new(); m], converged: true, evaluations: 0 };
    }
    let form = CompiledForm::new(t);
    let runs: Vec<(Vec<Vec<Complex64>>, f64, bool, u64)> = (0..s.restarts)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(s.seed, u64::from(r));
            let mut x: Vec<Vec<Complex64>> = form
                .supports
                .iter()
                .map(|sup| sup.iter().map(|_| Complex64::cis(g.random_range(0.0..TAU))).collect())
                .collect();
            let mut prev = f64::NEG_INFINITY;
            let mut value = 0.0;
            let mut converged = false;
            let mut evals = 0u64;
            for _ in 0..s.max_iterations {
                for k in 0..m {
                    value = form.best_slot(&mut x, k);
                    evals += 1;
                }
                if value - prev <= s.tolerance * value {
                    converged = true;
                    break;
                }
                prev = value;
            }
            (x, value, converged, evals)
        })
        .collect();

    let evaluations = runs.iter().map(|r| r.3).sum();
    let mut best = &runs[0];
    for r in &runs[1..] {
        if r.1 > best.1 {
            best = r;
        }
    }
    let witness: Vec<BTreeMap<u64, f64>> = form
        .supports
        .iter()
        .zip(&best.0)
        .map(|(sup, xs)| sup.iter().zip(xs).map(|(&i, z)| (i, wrap_phase(z.arg()))).collect())
        .collect();
    let args: Vec<Point> =
        witness.iter().map(|w| w.iter().map(|(&i, &ph)| (i, Complex64::cis(ph))).collect()).collect();
    let value = t.evaluate(&args).expect("witness has one vector per slot").norm();
    NormEstimate { value, witness, converged: best.2, evaluations }
}
