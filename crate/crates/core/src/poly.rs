//! Sparse m-homogeneous polynomials and m-linear forms over the complex field.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{factorial, ExponentVector, IndexSet, MultiIndexTuple};
use crate::rng;

/// Point in coordinate space, variable index -> value.
pub type Point = BTreeMap<u64, Complex64>;

/// `l_p` aggregation of moduli, computed relative to the largest modulus so a
/// single nonzero value is returned unchanged.
pub fn lp_norm(moduli: &[f64], p: f64) -> f64 {
    let max = moduli.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let s: f64 = moduli.iter().map(|&x| (x / max).powf(p)).sum();
    max * s.powf(1.0 / p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsePolynomial {
    m: usize,
    terms: BTreeMap<ExponentVector, Complex64>,
}

impl SparsePolynomial {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("degree m must be positive".into()));
        }
        Ok(Self { m, terms: BTreeMap::new() })
    }

    pub fn from_terms(m: usize, terms: impl IntoIterator<Item = (ExponentVector, Complex64)>) -> Result<Self> {
        let mut p = Self::new(m)?;
        for (a, c) in terms {
            p.add_term(a, c)?;
        }
        Ok(p)
    }

    /// Adds `c * x^a`; a coefficient that cancels to zero is removed.
    pub fn add_term(&mut self, a: ExponentVector, c: Complex64) -> Result<()> {
        if a.degree() as usize != self.m {
            return Err(Error::InvalidArgument(format!(
                "monomial of degree {} in a polynomial of degree {}",
                a.degree(),
                self.m
            )));
        }
        let entry = self.terms.entry(a).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        self.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, a: &ExponentVector) -> Complex64 {
        self.terms.get(a).copied().unwrap_or_default()
    }

    pub fn variable_support(&self) -> Vec<u64> {
        let s: BTreeSet<u64> = self.terms.keys().flat_map(|a| a.exponents().keys().copied()).collect();
        s.into_iter().collect()
    }

    pub fn scale(&self, c: Complex64) -> SparsePolynomial {
        let mut terms = BTreeMap::new();
        for (a, v) in &self.terms {
            let w = v * c;
            if w != Complex64::new(0.0, 0.0) {
                terms.insert(a.clone(), w);
            }
        }
        SparsePolynomial { m: self.m, terms }
    }

    /// Sum of c_a * prod z_j^{a_j}.
    pub fn evaluate(&self, z: &Point) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (a, c) in &self.terms {
            let mut term = *c;
            for (var, &e) in a.exponents() {
                let zv = z.get(var).ok_or_else(|| Error::InvalidArgument(format!("no value for variable {var}")))?;
                term *= zv.powi(e as i32);
            }
            sum += term;
        }
        Ok(sum)
    }

    /// Symmetric m-linear form P^(x_1, ..., x_m), by the signed polarization sum
    /// (2^m m!)^{-1} sum_{eps} eps_1...eps_m P(eps_1 x_1 + ... + eps_m x_m).
    pub fn polarize_eval(&self, args: &[Point]) -> Result<Complex64> {
        if args.len() != self.m {
            return Err(Error::InvalidArgument(format!("expected {} arguments, got {}", self.m, args.len())));
        }
        if self.m > 30 {
            return Err(Error::InvalidArgument("polarization limited to m <= 30".into()));
        }
        let support = self.variable_support();
        let mut sum = Complex64::new(0.0, 0.0);
        for mask in 0u32..(1 << self.m) {
            let mut point: Point = support.iter().map(|&v| (v, Complex64::new(0.0, 0.0))).collect();
            let mut sign = 1.0;
            for (j, x) in args.iter().enumerate() {
                let eps = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
                sign *= eps;
                for (var, val) in x {
                    if let Some(p) = point.get_mut(var) {
                        *p += val * eps;
                    }
                }
            }
            sum += self.evaluate(&point)? * sign;
        }
        let norm = 2f64.powi(self.m as i32) * factorial(self.m as u32);
        Ok(sum / norm)
    }

    /// Entries P^(e_{i_1}, ..., e_{i_m}) = c_a * a! / m! placed at the stored
    /// tuple of each monomial of `on`.
    pub fn symmetric_tensor(&self, on: &IndexSet) -> Result<MultilinearForm> {
        if on.m() != self.m {
            return Err(Error::InvalidArgument("index set and polynomial differ in degree".into()));
        }
        let mfact = factorial(self.m as u32);
        let mut form = MultilinearForm::new(self.m)?;
        for (a, c) in &self.terms {
            let t = on
                .representative(a)
                .ok_or_else(|| Error::InvalidArgument(format!("monomial {} is not in the index set", a.to_tuple())))?;
            form.insert(t.entries().to_vec(), c * (a.factorial() / mfact))?;
        }
        Ok(form)
    }

    /// (sum |c_a|^p)^{1/p}.
    pub fn coeff_norm(&self, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(Error::InvalidArgument(format!("exponent p must be positive, got {p}")));
        }
        Ok(lp_norm(&self.coefficient_moduli(), p))
    }

    pub fn coefficient_moduli(&self) -> Vec<f64> {
        self.terms.values().map(|c| c.norm()).collect()
    }

    /// `.poly` text: `m <int>`, then `re im i1 ... im` per term with 17 significant digits.
    pub fn to_poly_string(&self) -> String {
        let mut s = format!("m {}\n", self.m);
        for (a, c) in &self.terms {
            let _ = write!(s, "{:.16e} {:.16e}", c.re, c.im);
            for v in a.to_tuple().entries() {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_poly(text: &str) -> Result<SparsePolynomial> {
        let mut poly: Option<SparsePolynomial> = None;
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            match poly.as_mut() {
                None => {
                    if toks.len() != 2 || toks[0] != "m" {
                        return Err(err(format!("expected header `m <int>`, found `{body}`")));
                    }
                    let m: usize = toks[1].parse().map_err(|_| err(format!("bad degree `{}`", toks[1])))?;
                    poly = Some(SparsePolynomial::new(m).map_err(|e| err(e.to_string()))?);
                }
                Some(p) => {
                    if toks.len() != p.m + 2 {
                        return Err(err(format!("expected {} fields, found {}", p.m + 2, toks.len())));
                    }
                    let re: f64 = toks[0].parse().map_err(|_| err(format!("bad real part `{}`", toks[0])))?;
                    let im: f64 = toks[1].parse().map_err(|_| err(format!("bad imaginary part `{}`", toks[1])))?;
                    let mut idx = Vec::with_capacity(p.m);
                    for tok in &toks[2..] {
                        let v: u64 = tok.parse().map_err(|_| err(format!("`{tok}` is not a positive integer")))?;
                        idx.push(v);
                    }
                    let a = MultiIndexTuple::new(idx).map_err(|e| err(e.to_string()))?.to_exponent();
                    if p.terms.contains_key(&a) {
                        return Err(err(format!("duplicate monomial {}", a.to_tuple())));
                    }
                    p.add_term(a, Complex64::new(re, im)).map_err(|e| err(e.to_string()))?;
                }
            }
        }
        poly.ok_or(Error::Parse { line: 0, msg: "missing header `m <int>`".into() })
    }
}

/// Coefficient distribution for random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffDist {
    /// uniform on the unit circle
    Steinhaus,
    /// standard complex normal, E|c|^2 = 1
    Gaussian,
}

impl FromStr for CoeffDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steinhaus" => Ok(Self::Steinhaus),
            "gaussian" => Ok(Self::Gaussian),
            _ => Err(Error::InvalidArgument(format!("unknown distribution `{s}`"))),
        }
    }
}

pub(crate) fn draw_coefficient<R: Rng>(rng: &mut R, dist: CoeffDist) -> Complex64 {
    match dist {
        CoeffDist::Steinhaus => Complex64::cis(rng.random_range(0.0..std::f64::consts::TAU)),
        CoeffDist::Gaussian => {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }
    }
}

/// One random coefficient per monomial of `set`, drawn in lexicographic order
/// of the canonical tuples.
pub fn random_polynomial(set: &IndexSet, dist: CoeffDist, seed: u64) -> Result<SparsePolynomial> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("index set is empty".into()));
    }
    let mut rng = rng::stream(seed, 0);
    let mut p = SparsePolynomial::new(set.m())?;
    for t in set.canonical_tuples() {
        let c = draw_coefficient(&mut rng, dist);
        p.add_term(t.to_exponent(), c)?;
    }
    Ok(p)
}

/// Finitely supported m-linear form, ordered tuple -> entry T(e_{i_1}, ..., e_{i_m}).
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearForm {
    m: usize,
    entries: BTreeMap<Vec<u64>, Complex64>,
}

impl MultilinearForm {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("degree m must be positive".into()));
        }
        Ok(Self { m, entries: BTreeMap::new() })
    }

    pub fn from_entries(m: usize, entries: impl IntoIterator<Item = (Vec<u64>, Complex64)>) -> Result<Self> {
        let mut f = Self::new(m)?;
        for (t, v) in entries {
            f.insert(t, v)?;
        }
        Ok(f)
    }

    /// Sets one entry; a zero value removes it.
    pub fn insert(&mut self, t: Vec<u64>, v: Complex64) -> Result<()> {
        if t.len() != self.m {
            return Err(Error::InvalidArgument(format!("entry of arity {} in a {}-linear form", t.len(), self.m)));
        }
        if t.contains(&0) {
            return Err(Error::InvalidArgument("variable indices start at 1".into()));
        }
        if v == Complex64::new(0.0, 0.0) {
            self.entries.remove(&t);
        } else {
            self.entries.insert(t, v);
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<u64>, &Complex64)> {
        self.entries.iter()
    }

    pub fn get(&self, t: &[u64]) -> Complex64 {
        self.entries.get(t).copied().unwrap_or_default()
    }

    pub fn scale(&self, c: Complex64) -> MultilinearForm {
        let entries = self.entries.iter().map(|(t, v)| (t.clone(), v * c)).filter(|(_, v)| v.norm() > 0.0).collect();
        MultilinearForm { m: self.m, entries }
    }

    /// Sorted distinct indices used in slot `k` (0-based).
    pub fn slot_support(&self, k: usize) -> Vec<u64> {
        let s: BTreeSet<u64> = self.entries.keys().map(|t| t[k]).collect();
        s.into_iter().collect()
    }

    /// T(x_1, ..., x_m); missing coordinates count as zero.
    pub fn evaluate(&self, args: &[Point]) -> Result<Complex64> {
        if args.len() != self.m {
            return Err(Error::InvalidArgument(format!("expected {} arguments, got {}", self.m, args.len())));
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (t, v) in &self.entries {
            let mut term = *v;
            for (k, i) in t.iter().enumerate() {
                term *= args[k].get(i).copied().unwrap_or_default();
            }
            sum += term;
        }
        Ok(sum)
    }
}

/// Unit coordinate vector e_i.
pub fn basis(i: u64) -> Point {
    BTreeMap::from([(i, Complex64::new(1.0, 0.0))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::gen_full;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ev(pairs: &[(u64, u32)]) -> ExponentVector {
        ExponentVector::new(pairs.iter().copied()).unwrap()
    }

    fn poly(m: usize, terms: &[(&[(u64, u32)], Complex64)]) -> SparsePolynomial {
        SparsePolynomial::from_terms(m, terms.iter().map(|(a, v)| (ev(a), *v))).unwrap()
    }

    fn pt(vals: &[(u64, Complex64)]) -> Point {
        vals.iter().copied().collect()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn evaluate_examples() {
        let p = poly(3, &[(&[(1, 2), (2, 1)], c(2.0, 0.0))]);
        assert_eq!(p.evaluate(&pt(&[(1, c(1.0, 0.0)), (2, c(0.0, 1.0))])).unwrap(), c(0.0, 2.0));
        let p = poly(2, &[(&[(1, 1), (2, 1)], c(1.0, 0.0))]);
        assert_eq!(p.evaluate(&pt(&[(1, c(0.0, 0.0)), (2, c(5.0, 0.0))])).unwrap(), c(0.0, 0.0));
        let p = poly(2, &[(&[(1, 2)], c(1.0, 0.0)), (&[(2, 2)], c(1.0, 0.0))]);
        assert_eq!(p.evaluate(&pt(&[(1, c(1.0, 0.0)), (2, c(0.0, 1.0))])).unwrap(), c(0.0, 0.0));
        assert!(p.evaluate(&pt(&[(1, c(1.0, 0.0))])).is_err());
    }

    #[test]
    fn degree_and_zero_handling() {
        let mut p = SparsePolynomial::new(2).unwrap();
        assert!(p.add_term(ev(&[(1, 3)]), c(1.0, 0.0)).is_err());
        p.add_term(ev(&[(1, 2)]), c(1.0, 0.0)).unwrap();
        p.add_term(ev(&[(1, 2)]), c(-1.0, 0.0)).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn polarize_examples() {
        let p = poly(2, &[(&[(1, 1), (2, 1)], c(1.0, 0.0))]);
        assert!(close(p.polarize_eval(&[basis(1), basis(2)]).unwrap(), c(0.5, 0.0), 1e-15));
        let p = poly(2, &[(&[(1, 2)], c(1.0, 0.0))]);
        assert!(close(p.polarize_eval(&[basis(1), basis(1)]).unwrap(), c(1.0, 0.0), 1e-15));
        // hand expansion: sum_eps eps1 eps2 (eps1 + eps2)^2 * 2 = 16, divided by 2^3 3! = 48
        let p = poly(3, &[(&[(1, 2), (2, 1)], c(1.0, 0.0))]);
        assert!(close(p.polarize_eval(&[basis(1), basis(1), basis(2)]).unwrap(), c(1.0 / 3.0, 0.0), 1e-15));
        assert!(p.polarize_eval(&[basis(1)]).is_err());
    }

    #[test]
    fn symmetric_tensor_examples() {
        let p = poly(2, &[(&[(1, 1), (2, 1)], c(1.0, 0.0))]);
        let on = IndexSet::from_tuples(2, [vec![1, 2]]).unwrap();
        assert_eq!(p.symmetric_tensor(&on).unwrap().get(&[1, 2]), c(0.5, 0.0));

        let p = poly(3, &[(&[(1, 3)], c(6.0, 0.0))]);
        let on = IndexSet::from_tuples(3, [vec![1, 1, 1]]).unwrap();
        assert_eq!(p.symmetric_tensor(&on).unwrap().get(&[1, 1, 1]), c(6.0, 0.0));

        let p = poly(3, &[(&[(1, 2), (2, 1)], c(1.0, 0.0))]);
        let on = IndexSet::from_tuples(3, [vec![1, 1, 2]]).unwrap();
        let t = p.symmetric_tensor(&on).unwrap();
        assert!(close(t.get(&[1, 1, 2]), c(1.0 / 3.0, 0.0), 1e-15));
        let pol = p.polarize_eval(&[basis(1), basis(1), basis(2)]).unwrap();
        assert!(close(t.get(&[1, 1, 2]), pol, 1e-12));

        // raw slot order of the index set is kept
        let on = IndexSet::from_tuples(3, [vec![2, 1, 1]]).unwrap();
        assert!(p.symmetric_tensor(&on).unwrap().get(&[2, 1, 1]).norm() > 0.0);

        let missing = IndexSet::from_tuples(3, [vec![1, 2, 2]]).unwrap();
        assert!(p.symmetric_tensor(&missing).is_err());
    }

    #[test]
    fn coeff_norm_examples() {
        let p = poly(1, &[(&[(1, 1)], c(1.0, 0.0)), (&[(2, 1)], c(1.0, 0.0))]);
        assert!((p.coeff_norm(4.0 / 3.0).unwrap() - 2f64.powf(0.75)).abs() < 1e-12);
        let p = poly(1, &[(&[(1, 1)], c(0.6, -0.8))]);
        for q in [0.5, 1.0, 4.0 / 3.0, 2.0, 7.0] {
            assert_eq!(p.coeff_norm(q).unwrap(), c(0.6, -0.8).norm());
        }
        let p = poly(1, &[(&[(1, 1)], c(3.0, 0.0)), (&[(2, 1)], c(4.0, 0.0))]);
        assert!((p.coeff_norm(2.0).unwrap() - 5.0).abs() < 1e-14);
        assert!(p.coeff_norm(0.0).is_err());
        assert!(p.coeff_norm(-1.0).is_err());
    }

    #[test]
    fn random_polynomial_contract() {
        let set = gen_full(2, 4).unwrap();
        assert_eq!(set.len(), 10);
        let a = random_polynomial(&set, CoeffDist::Steinhaus, 3).unwrap();
        let b = random_polynomial(&set, CoeffDist::Steinhaus, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.terms().all(|(_, v)| (v.norm() - 1.0).abs() < 1e-12));
        assert_ne!(a, random_polynomial(&set, CoeffDist::Steinhaus, 4).unwrap());

        let one = IndexSet::from_tuples(2, [vec![1, 2]]).unwrap();
        let g = random_polynomial(&one, CoeffDist::Gaussian, 7).unwrap();
        assert_eq!(g.terms().map(|(a, _)| a.clone()).collect::<Vec<_>>(), vec![ev(&[(1, 1), (2, 1)])]);
        assert!(random_polynomial(&IndexSet::new(2).unwrap(), CoeffDist::Gaussian, 0).is_err());
    }

    #[test]
    fn poly_format() {
        let p = poly(2, &[(&[(1, 1), (3, 1)], c(0.1, -2.5)), (&[(2, 2)], c(1.0, 0.0))]);
        let s = p.to_poly_string();
        assert!(s.starts_with("m 2\n"));
        assert!(s.contains(" 1 3\n"));
        assert_eq!(SparsePolynomial::parse_poly(&s).unwrap(), p);
        assert!(SparsePolynomial::parse_poly("m 2\n1 0 1\n").is_err());
        assert!(SparsePolynomial::parse_poly("m 2\n1 0 1 2\n1 0 2 1\n").is_err());
        assert!(SparsePolynomial::parse_poly("m 2\n1 0 0 2\n").is_err());
        // comments, and tuples given out of order are canonicalized
        let q = SparsePolynomial::parse_poly("# note\nm 2\n1 0 3 1 # term\n").unwrap();
        assert_eq!(q.coefficient(&ev(&[(1, 1), (3, 1)])), c(1.0, 0.0));
    }

    #[test]
    fn multilinear_form_basics() {
        let f = MultilinearForm::from_entries(2, [(vec![1, 2], c(2.0, 0.0)), (vec![2, 1], c(0.0, 1.0))]).unwrap();
        assert_eq!(f.slot_support(0), vec![1, 2]);
        let v = f.evaluate(&[basis(1), basis(2)]).unwrap();
        assert_eq!(v, c(2.0, 0.0));
        assert!(MultilinearForm::from_entries(2, [(vec![1], c(1.0, 0.0))]).is_err());
        assert!(f.evaluate(&[basis(1)]).is_err());
    }

    fn random_point(seed: u64, vars: &[u64]) -> Point {
        let mut r = rng::stream(seed, 99);
        vars.iter().map(|&v| (v, draw_coefficient(&mut r, CoeffDist::Gaussian))).collect()
    }

    fn small_poly() -> impl Strategy<Value = SparsePolynomial> {
        (1usize..=4, any::<u64>()).prop_map(|(m, seed)| {
            let set = gen_full(m, 3).unwrap();
            random_polynomial(&set, CoeffDist::Gaussian, seed).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn polarization_properties(p in small_poly(), seed in any::<u64>()) {
            let vars = p.variable_support();
            let m = p.m();
            let args: Vec<Point> = (0..m as u64).map(|k| random_point(seed.wrapping_add(k), &vars)).collect();
            let base = p.polarize_eval(&args).unwrap();
            let mut rev = args.clone();
            rev.reverse();
            prop_assert!(close(p.polarize_eval(&rev).unwrap(), base, 1e-10));
            let x = &args[0];
            let diag = vec![x.clone(); m];
            prop_assert!(close(p.polarize_eval(&diag).unwrap(), p.evaluate(x).unwrap(), 1e-10));
            // linear in slot 0
            let y = random_point(seed ^ 0xABCD, &vars);
            let lam = Complex64::new(0.3, -1.7);
            let mut mixed = args.clone();
            mixed[0] = vars.iter().map(|v| (*v, args[0][v] + lam * y[v])).collect();
            let mut only_y = args.clone();
            only_y[0] = y.clone();
            let want = base + lam * p.polarize_eval(&only_y).unwrap();
            prop_assert!(close(p.polarize_eval(&mixed).unwrap(), want, 1e-10));
        }

        #[test]
        fn coefficient_identity(p in small_poly()) {
            let set = IndexSet::from_tuples(p.m(), p.terms().map(|(a, _)| a.to_tuple().entries().to_vec())).unwrap();
            let t = p.symmetric_tensor(&set).unwrap();
            let mfact = factorial(p.m() as u32);
            for (a, cf) in p.terms() {
                let entry = t.get(a.to_tuple().entries());
                prop_assert!(close(entry * (mfact / a.factorial()), *cf, 1e-12));
                let args: Vec<Point> = a.to_tuple().entries().iter().map(|&i| basis(i)).collect();
                prop_assert!(close(p.polarize_eval(&args).unwrap(), entry, 1e-12));
            }
        }

        #[test]
        fn poly_round_trip(p in small_poly()) {
            prop_assert_eq!(SparsePolynomial::parse_poly(&p.to_poly_string()).unwrap(), p);
        }
    }
}
