//! Multi-indices, exponent vectors and monomial index sets.
//!
//! An [`IndexSet`] stores one ordered tuple per monomial. Slot order is kept
//! as given because the product-set counts in [`crate::combdim`] depend on it;
//! monomial identity is decided on the sorted multiset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Ordered m-tuple of positive variable indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndexTuple(Vec<u64>);

impl MultiIndexTuple {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("tuple must have at least one entry".into()));
        }
        if entries.contains(&0) {
            return Err(Error::InvalidArgument("variable indices start at 1".into()));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Same multiset, entries sorted nondecreasing.
    pub fn canonicalize(&self) -> MultiIndexTuple {
        let mut v = self.0.clone();
        v.sort_unstable();
        MultiIndexTuple(v)
    }

    pub fn is_canonical(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    /// Multiplicity of each variable.
    pub fn to_exponent(&self) -> ExponentVector {
        let mut exponents = BTreeMap::new();
        for &v in &self.0 {
            *exponents.entry(v).or_insert(0u32) += 1;
        }
        ExponentVector { exponents, degree: self.0.len() as u32 }
    }
}

impl fmt::Display for MultiIndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Sparse multi-exponent: variable index -> positive exponent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExponentVector {
    exponents: BTreeMap<u64, u32>,
    degree: u32,
}

impl ExponentVector {
    /// Builds an exponent vector, dropping zero exponents.
    pub fn new(exponents: impl IntoIterator<Item = (u64, u32)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (var, e) in exponents {
            if var == 0 {
                return Err(Error::InvalidArgument("variable indices start at 1".into()));
            }
            if e > 0 {
                *map.entry(var).or_insert(0) += e;
            }
        }
        let degree: u32 = map.values().sum();
        if degree == 0 {
            return Err(Error::InvalidArgument("exponent vector of degree zero".into()));
        }
        Ok(Self { exponents: map, degree })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn exponents(&self) -> &BTreeMap<u64, u32> {
        &self.exponents
    }

    pub fn get(&self, var: u64) -> u32 {
        self.exponents.get(&var).copied().unwrap_or(0)
    }

    /// Number of variables with nonzero exponent, w(alpha).
    pub fn weight(&self) -> usize {
        self.exponents.len()
    }

    /// Canonical (sorted) tuple with each variable repeated by its exponent.
    pub fn to_tuple(&self) -> MultiIndexTuple {
        let mut v = Vec::with_capacity(self.degree as usize);
        for (&var, &e) in &self.exponents {
            v.extend(std::iter::repeat_n(var, e as usize));
        }
        MultiIndexTuple(v)
    }

    /// alpha! = product of factorials of the exponents.
    pub fn factorial(&self) -> f64 {
        self.exponents.values().map(|&e| factorial(e)).product()
    }
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Finite monomial index set: one slot-ordered tuple per monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    m: usize,
    tuples: BTreeSet<MultiIndexTuple>,
    /// canonical multiset -> stored raw tuple
    monomials: BTreeMap<MultiIndexTuple, MultiIndexTuple>,
    label: Option<String>,
}

impl IndexSet {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("degree m must be positive".into()));
        }
        Ok(Self { m, tuples: BTreeSet::new(), monomials: BTreeMap::new(), label: None })
    }

    pub fn from_tuples(m: usize, tuples: impl IntoIterator<Item = Vec<u64>>) -> Result<Self> {
        let mut set = Self::new(m)?;
        for t in tuples {
            set.insert(MultiIndexTuple::new(t)?)?;
        }
        Ok(set)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Adds a tuple. Rejects wrong arity and a second tuple for an existing monomial.
    pub fn insert(&mut self, t: MultiIndexTuple) -> Result<()> {
        if t.len() != self.m {
            return Err(Error::InvalidArgument(format!(
                "tuple {t} has arity {}, expected {}",
                t.len(),
                self.m
            )));
        }
        let canon = t.canonicalize();
        if self.monomials.contains_key(&canon) {
            return Err(Error::InvalidArgument(format!("duplicate monomial {canon}")));
        }
        self.monomials.insert(canon, t.clone());
        self.tuples.insert(t);
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Raw tuples in lexicographic order.
    pub fn tuples(&self) -> impl Iterator<Item = &MultiIndexTuple> {
        self.tuples.iter()
    }

    /// Canonical tuples (one per monomial) in lexicographic order.
    pub fn canonical_tuples(&self) -> impl Iterator<Item = &MultiIndexTuple> {
        self.monomials.keys()
    }

    /// Stored tuple for a monomial, if present.
    pub fn representative(&self, a: &ExponentVector) -> Option<&MultiIndexTuple> {
        self.monomials.get(&a.to_tuple())
    }

    pub fn contains_tuple(&self, t: &MultiIndexTuple) -> bool {
        self.tuples.contains(t)
    }

    pub fn contains_monomial(&self, a: &ExponentVector) -> bool {
        self.monomials.contains_key(&a.to_tuple())
    }

    /// Gamma_Lambda: the exponent vectors of the stored monomials.
    pub fn exponents(&self) -> Vec<ExponentVector> {
        self.monomials.keys().map(MultiIndexTuple::to_exponent).collect()
    }

    /// Sorted distinct values appearing in slot `t` (0-based).
    pub fn slot_support(&self, t: usize) -> Vec<u64> {
        let s: BTreeSet<u64> = self.tuples.iter().map(|x| x.0[t]).collect();
        s.into_iter().collect()
    }

    /// Applies the same slot permutation to every tuple: new slot `k` takes old slot `perm[k]`.
    pub fn permute_slots(&self, perm: &[usize]) -> Result<IndexSet> {
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..self.m).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument("not a permutation of the slots".into()));
        }
        let mut out = IndexSet::new(self.m)?;
        out.label = self.label.clone();
        for t in &self.tuples {
            out.insert(MultiIndexTuple(perm.iter().map(|&k| t.0[k]).collect()))?;
        }
        Ok(out)
    }

    /// Serializes to the `.idx` text format.
    pub fn to_idx_string(&self) -> String {
        let mut s = String::new();
        if let Some(l) = &self.label {
            s.push_str(&format!("# {l}\n"));
        }
        s.push_str(&format!("m {}\n", self.m));
        for t in &self.tuples {
            let row: Vec<String> = t.0.iter().map(u64::to_string).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses the `.idx` text format. The first comment line, if any, becomes the label.
    pub fn parse_idx(text: &str) -> Result<IndexSet> {
        let mut set: Option<IndexSet> = None;
        let mut label = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let (body, comment) = match raw.find('#') {
                Some(p) => (&raw[..p], Some(raw[p + 1..].trim())),
                None => (raw, None),
            };
            if set.is_none() && label.is_none() {
                if let Some(c) = comment.filter(|c| !c.is_empty()) {
                    label = Some(c.to_string());
                }
            }
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            match set.as_mut() {
                None => {
                    let mut parts = body.split_whitespace();
                    let (Some("m"), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                        return Err(err(format!("expected header `m <int>`, found `{body}`")));
                    };
                    let m: usize = v.parse().map_err(|_| err(format!("bad degree `{v}`")))?;
                    set = Some(IndexSet::new(m).map_err(|e| err(e.to_string()))?);
                }
                Some(s) => {
                    let mut entries = Vec::with_capacity(s.m);
                    for tok in body.split_whitespace() {
                        let v: u64 = tok
                            .parse()
                            .map_err(|_| err(format!("`{tok}` is not a positive integer")))?;
                        if v == 0 {
                            return Err(err("variable index 0 is not allowed".into()));
                        }
                        entries.push(v);
                    }
                    if entries.len() != s.m {
                        return Err(err(format!(
                            "arity mismatch: {} entries, expected {}",
                            entries.len(),
                            s.m
                        )));
                    }
                    let t = MultiIndexTuple(entries);
                    if s.monomials.contains_key(&t.canonicalize()) {
                        return Err(err(format!("duplicate monomial {}", t.canonicalize())));
                    }
                    s.insert(t).map_err(|e| err(e.to_string()))?;
                }
            }
        }
        let mut set = set.ok_or(Error::Parse { line: 0, msg: "missing header `m <int>`".into() })?;
        set.label = label;
        Ok(set)
    }
}

fn nondecreasing_tuples(m: usize, n: u64, out: &mut Vec<Vec<u64>>, cur: &mut Vec<u64>) {
    if cur.len() == m {
        out.push(cur.clone());
        return;
    }
    let start = cur.last().copied().unwrap_or(1);
    for v in start..=n {
        cur.push(v);
        nondecreasing_tuples(m, n, out, cur);
        cur.pop();
    }
}

fn check_positive(name: &str, v: u64) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidArgument(format!("{name} must be positive")));
    }
    Ok(())
}

/// All monomials of degree m in variables 1..=n, as canonical tuples.
pub fn gen_full(m: usize, n: u64) -> Result<IndexSet> {
    gen_delta_m(m, m, n).map(|s| s.with_label(format!("full m={m} N={n}")))
}

/// Monomials of degree m in variables 1..=n using at most `max_vars` distinct variables.
pub fn gen_delta_m(m: usize, max_vars: usize, n: u64) -> Result<IndexSet> {
    check_positive("N", n)?;
    if max_vars == 0 || max_vars > m {
        return Err(Error::InvalidArgument(format!("M must lie in 1..={m}, got {max_vars}")));
    }
    let mut all = Vec::new();
    nondecreasing_tuples(m, n, &mut all, &mut Vec::with_capacity(m));
    let mut set = IndexSet::new(m)?.with_label(format!("deltaM m={m} M={max_vars} N={n}"));
    for t in all {
        let distinct = 1 + t.windows(2).filter(|w| w[0] != w[1]).count();
        if distinct <= max_vars {
            set.insert(MultiIndexTuple(t))?;
        }
    }
    Ok(set)
}

/// First `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Tuples (p_1^i, ..., p_m^i) for i = 1..=terms.
pub fn gen_prime_diagonal(m: usize, terms: u64) -> Result<IndexSet> {
    check_positive("T", terms)?;
    let primes = first_primes(m);
    let mut set = IndexSet::new(m)?.with_label(format!("prime-diagonal m={m} T={terms}"));
    let mut powers = vec![1u64; m];
    for i in 1..=terms {
        for (j, p) in primes.iter().enumerate() {
            powers[j] = powers[j].checked_mul(*p).ok_or_else(|| {
                Error::Range(format!("p_{}^{} = {}^{} exceeds 64 bits", j + 1, i, p, i))
            })?;
        }
        set.insert(MultiIndexTuple(powers.clone()))?;
    }
    Ok(set)
}

/// Tuples ((i-1)m+1, ..., (i-1)m+m) for i = 1..=terms.
pub fn gen_arith_diagonal(m: usize, terms: u64) -> Result<IndexSet> {
    check_positive("T", terms)?;
    let mut set = IndexSet::new(m)?.with_label(format!("arith-diagonal m={m} T={terms}"));
    let mm = m as u64;
    for i in 1..=terms {
        let base = (i - 1)
            .checked_mul(mm)
            .filter(|b| b.checked_add(mm).is_some())
            .ok_or_else(|| Error::Range(format!("term {i} exceeds 64 bits")))?;
        set.insert(MultiIndexTuple((1..=mm).map(|j| base + j).collect()))?;
    }
    Ok(set)
}

/// Cantor pairing (a+b)(a+b+1)/2 + b.
pub fn cantor_pair(a: u64, b: u64) -> Option<u64> {
    let s = a.checked_add(b)?;
    let tri = if s % 2 == 0 { (s / 2).checked_mul(s + 1)? } else { s.checked_mul(s.checked_add(1)? / 2)? };
    tri.checked_add(b)
}

/// Slot label sigma_t(a, b) = 3 * pair(a, b) + (t - 1), t in 1..=3.
pub fn triangle_label(t: u64, a: u64, b: u64) -> Option<u64> {
    cantor_pair(a, b)?.checked_mul(3)?.checked_add(t - 1)
}

/// Triangle family {(sigma_1(i,j), sigma_2(j,k), sigma_3(k,i)) : i,j,k in 1..=r}.
pub fn gen_triangle(r: u64) -> Result<IndexSet> {
    check_positive("R", r)?;
    let mut set = IndexSet::new(3)?.with_label(format!("triangle R={r}"));
    let overflow = || Error::Range(format!("triangle labels for R={r} exceed 64 bits"));
    // pair(a, b) is increasing in both arguments, so the largest label is sigma_3(r, r)
    triangle_label(3, r, r).ok_or_else(overflow)?;
    if r.checked_pow(3).is_none_or(|c| c > 1 << 32) {
        return Err(Error::Range(format!("triangle family with R={r} is too large to enumerate")));
    }
    for i in 1..=r {
        for j in 1..=r {
            for k in 1..=r {
                let t = vec![
                    triangle_label(1, i, j).ok_or_else(overflow)?,
                    triangle_label(2, j, k).ok_or_else(overflow)?,
                    triangle_label(3, k, i).ok_or_else(overflow)?,
                ];
                set.insert(MultiIndexTuple(t))?;
            }
        }
    }
    Ok(set)
}
