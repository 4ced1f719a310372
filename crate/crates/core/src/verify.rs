//! Mixed norms, the empirical Bayart constant, and the end-to-end check of
//! every step between the coefficient sum and the sup norm.
//!
//! Each trial draws a random polynomial P on the index set, forms the tensor
//! T of symmetric-form entries on the stored tuples, and records the ratio
//! LHS/RHS of every inequality in the chain:
//!
//! | step          | inequality                                              | kind  |
//! |---------------|---------------------------------------------------------|-------|
//! | `khinchine`   | max_k mixed_k(T) <= (2/sqrt(pi))^{m-1} ||T||            | soft  |
//! | `polarization`| ||T|| <= e^m ||P||                                      | soft  |
//! | `max_modulus` | ||c||_2 <= ||P||                                        | soft  |
//! | `holder`      | ||c||_{2m/(m+1)} <= ||c||_q^theta ||c||_2^{1-theta}     | hard  |
//! | `symmetric`   | ||c||_q <= m! ||T restricted to the set||_q             | hard  |
//!
//! with q = 2d/(1+d) and theta = d/m. Soft steps depend on sup-norm estimates,
//! which are lower bounds, and pass within `1 + slack`; hard steps are exact
//! arithmetic and pass within `1 + 1e-9`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{exponents, holder_chain_check, theorem_bound, STEINHAUS_CONSTANT};
use crate::error::{Error, Result};
use crate::index::{factorial, IndexSet, MultiIndexTuple};
use crate::poly::{lp_norm, random_polynomial, CoeffDist, MultilinearForm, SparsePolynomial};
use crate::rng::derive_seed;
use crate::supnorm::{sup_norm_form, sup_norm_poly, OptimizerSettings};

/// Tolerance for the exact-arithmetic steps.
pub const EXACT_SLACK: f64 = 1e-9;
/// Default tolerance for steps whose right side is an estimated sup norm.
pub const DEFAULT_SLACK: f64 = 0.05;

/// Sum over the `k`-th index (0-based) of the l2 norm over the remaining indices.
pub fn mixed_norm_lhs(t: &MultilinearForm, k: usize) -> Result<f64> {
    if k >= t.m() {
        return Err(Error::InvalidArgument(format!("slot {k} out of range for a {}-linear form", t.m())));
    }
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for (idx, v) in t.entries() {
        groups.entry(idx[k]).or_default().push(v.norm());
    }
    Ok(groups.values().map(|g| lp_norm(g, 2.0)).sum())
}

/// l_{2d/(1+d)} norm of the entries of `t` at the tuples of `set`.
pub fn bayart_lhs(t: &MultilinearForm, set: &IndexSet, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("d must be positive, got {d}")));
    }
    let moduli: Vec<f64> = t
        .entries()
        .filter(|(idx, _)| MultiIndexTuple::new(idx.to_vec()).is_ok_and(|tu| set.contains_tuple(&tu)))
        .map(|(_, v)| v.norm())
        .collect();
    Ok(lp_norm(&moduli, 2.0 * d / (1.0 + d)))
}

/// bayart_lhs / sum_k mixed_k, or None for a zero form. Both sides are
/// scaled by the largest mixed term first, so equal terms sum exactly.
pub fn bayart_ratio(t: &MultilinearForm, set: &IndexSet, d: f64) -> Result<Option<f64>> {
    let lhs = bayart_lhs(t, set, d)?;
    let mixed = (0..t.m()).map(|k| mixed_norm_lhs(t, k)).collect::<Result<Vec<f64>>>()?;
    let top = mixed.iter().copied().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Ok(None);
    }
    let rhs: f64 = mixed.iter().map(|v| v / top).sum();
    Ok(Some(lhs / top / rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayartEstimate {
    /// largest observed ratio, a lower estimate of the best constant
    pub c_hat: f64,
    pub ratios: Vec<f64>,
    pub skipped: usize,
}

fn trial_polynomial(set: &IndexSet, dist: CoeffDist, seed: u64, trial: usize) -> Result<(SparsePolynomial, MultilinearForm)> {
    let p = random_polynomial(set, dist, derive_seed(seed, trial as u64))?;
    let t = p.symmetric_tensor(set)?;
    Ok((p, t))
}

/// Maximum over random trials of [`bayart_ratio`] for the symmetric-form
/// tensor of a random polynomial on `set`.
pub fn estimate_bayart_constant(set: &IndexSet, d: f64, trials: usize, dist: CoeffDist, seed: u64) -> Result<BayartEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if set.is_empty() {
        return Err(Error::InvalidArgument("index set is empty".into()));
    }
    let ratios: Vec<Result<Option<f64>>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (_, t) = trial_polynomial(set, dist, seed, i).map_err(|e| trial_err(i, e))?;
            bayart_ratio(&t, set, d).map_err(|e| trial_err(i, e))
        })
        .collect();
    let mut out = BayartEstimate { c_hat: 0.0, ratios: Vec::new(), skipped: 0 };
    for r in ratios {
        match r? {
            Some(v) => {
                out.c_hat = out.c_hat.max(v);
                out.ratios.push(v);
            }
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

fn trial_err(trial: usize, e: Error) -> Error {
    Error::Trial { trial, source: Box::new(e) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub trials: usize,
    pub dist: CoeffDist,
    pub seed: u64,
    pub slack: f64,
    pub optimizer: OptimizerSettings,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { trials: 20, dist: CoeffDist::Steinhaus, seed: 0, slack: DEFAULT_SLACK, optimizer: OptimizerSettings::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub quotient: f64,
    pub sup_poly: f64,
    pub sup_form: f64,
    pub khinchine: f64,
    pub polarization: f64,
    pub max_modulus: f64,
    pub holder: f64,
    pub symmetric: f64,
    pub bayart_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub max_margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Steps {
    pub khinchine: StepSummary,
    pub polarization: StepSummary,
    pub max_modulus: StepSummary,
    pub holder: StepSummary,
    pub symmetric: StepSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub lambda_label: Option<String>,
    pub m: usize,
    pub d: f64,
    pub trial_count: usize,
    pub settings: VerifySettings,
    pub c_hat: f64,
    pub max_quotient: f64,
    pub theorem_bound: f64,
    pub steps: Steps,
    pub trials: Vec<TrialRecord>,
}

impl VerificationReport {
    /// Exact-arithmetic steps all pass.
    pub fn hard_pass(&self) -> bool {
        self.steps.holder.pass && self.steps.symmetric.pass
    }

    /// Sup-dependent steps all pass within the slack.
    pub fn soft_pass(&self) -> bool {
        self.steps.khinchine.pass && self.steps.polarization.pass && self.steps.max_modulus.pass
    }

    /// max quotient / bound evaluated at the empirical constant.
    pub fn theorem_margin(&self) -> f64 {
        self.max_quotient / self.theorem_bound
    }
}

fn run_trial(set: &IndexSet, d: f64, s: &VerifySettings, i: usize) -> Result<TrialRecord> {
    let m = set.m();
    let (p, t) = trial_polynomial(set, s.dist, s.seed, i)?;
    let opt = OptimizerSettings { seed: derive_seed(s.optimizer.seed, i as u64), ..s.optimizer };
    let sup_poly = sup_norm_poly(&p, &opt).value;
    let sup_form = sup_norm_form(&t, &opt).value;
    let e = exponents(m as u64, d)?;

    let mut worst_mixed: f64 = 0.0;
    for k in 0..m {
        worst_mixed = worst_mixed.max(mixed_norm_lhs(&t, k)?);
    }
    let khinchine = worst_mixed / (STEINHAUS_CONSTANT.powi(m as i32 - 1) * sup_form);
    let polarization = sup_form / ((m as f64).exp() * sup_poly);
    let max_modulus = p.coeff_norm(2.0)? / sup_poly;
    let coeffs: Vec<_> = p.terms().map(|(_, c)| *c).collect();
    let holder = holder_chain_check(&coeffs, m as u64, d)?.margin;
    let symmetric = p.coeff_norm(e.bayart_exponent)? / (factorial(m as u32) * bayart_lhs(&t, set, d)?);
    let bayart_ratio = self::bayart_ratio(&t, set, d)?.unwrap_or(0.0);
    let quotient = p.coeff_norm(e.bh_exponent)? / sup_poly;
    Ok(TrialRecord {
        index: i,
        seed: derive_seed(s.seed, i as u64),
        quotient,
        sup_poly,
        sup_form,
        khinchine,
        polarization,
        max_modulus,
        holder,
        symmetric,
        bayart_ratio,
    })
}

fn summarize(records: &[TrialRecord], f: impl Fn(&TrialRecord) -> f64, slack: f64) -> StepSummary {
    let max_margin = records.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    StepSummary { max_margin, pass: max_margin <= 1.0 + slack }
}

/// Runs every step of the chain on `trials` random polynomials on `set`.
pub fn verify_theorem(set: &IndexSet, d: f64, s: &VerifySettings) -> Result<VerificationReport> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("index set is empty".into()));
    }
    if s.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if !(s.slack >= 0.0) {
        return Err(Error::InvalidArgument("slack must be nonnegative".into()));
    }
    s.optimizer.validate()?;
    let m = set.m();
    exponents(m as u64, d)?;

    let results: Vec<Result<TrialRecord>> =
        (0..s.trials).into_par_iter().map(|i| run_trial(set, d, s, i).map_err(|e| trial_err(i, e))).collect();
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;

    let c_hat = records.iter().map(|r| r.bayart_ratio).fold(0.0, f64::max);
    let max_quotient = records.iter().map(|r| r.quotient).fold(0.0, f64::max);
    let steps = Steps {
        khinchine: summarize(&records, |r| r.khinchine, s.slack),
        polarization: summarize(&records, |r| r.polarization, s.slack),
        max_modulus: summarize(&records, |r| r.max_modulus, s.slack),
        holder: summarize(&records, |r| r.holder, EXACT_SLACK),
        symmetric: summarize(&records, |r| r.symmetric, EXACT_SLACK),
    };
    Ok(VerificationReport {
        lambda_label: set.label().map(str::to_string),
        m,
        d,
        trial_count: s.trials,
        settings: *s,
        c_hat,
        max_quotient,
        theorem_bound: theorem_bound(m as u64, d, c_hat)?.value,
        steps,
        trials: records,
    })
}
