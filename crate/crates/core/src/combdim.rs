//! Product-set counts psi(n) and growth-exponent estimates.
//!
//! `psi(n)` is the largest number of tuples of an index set that fit inside a
//! product `A_1 x ... x A_m` with every `|A_t| <= n`. Only values that occur in
//! slot `t` are ever worth putting in `A_t`, so all searches run over the slot
//! supports.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::IndexSet;
use crate::rng;

/// Index set re-labelled with dense per-slot value ids.
#[derive(Debug, Clone)]
struct Instance {
    m: usize,
    sizes: Vec<usize>,
    tuples: Vec<Vec<u32>>,
    /// by_value[t][v] = ids of tuples whose slot t holds value v
    by_value: Vec<Vec<Vec<u32>>>,
}

impl Instance {
    fn new(set: &IndexSet) -> Self {
        let m = set.m();
        let supports: Vec<Vec<u64>> = (0..m).map(|t| set.slot_support(t)).collect();
        let tuples: Vec<Vec<u32>> = set
            .tuples()
            .map(|tu| {
                tu.entries()
                    .iter()
                    .enumerate()
                    .map(|(t, x)| supports[t].binary_search(x).unwrap() as u32)
                    .collect()
            })
            .collect();
        let mut by_value: Vec<Vec<Vec<u32>>> = supports.iter().map(|s| vec![Vec::new(); s.len()]).collect();
        for (id, tu) in tuples.iter().enumerate() {
            for (t, &v) in tu.iter().enumerate() {
                by_value[t][v as usize].push(id as u32);
            }
        }
        Self { m, sizes: supports.iter().map(Vec::len).collect(), tuples, by_value }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Open,
    In,
    Out,
}

enum Undo {
    In(usize, usize),
    Out(usize, usize),
    Kill(u32),
}

struct Search<'a> {
    inst: &'a Instance,
    n: usize,
    status: Vec<Vec<Status>>,
    in_count: Vec<usize>,
    alive: Vec<bool>,
    /// live tuples through each (slot, value)
    live: Vec<Vec<u32>>,
    in_hits: Vec<u32>,
    covered: u64,
    trail: Vec<Undo>,
    best: u64,
    nodes: u64,
    budget: u64,
    scratch: Vec<u32>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, n: usize, budget: u64, incumbent: u64) -> Self {
        let live = inst.by_value.iter().map(|slot| slot.iter().map(|ts| ts.len() as u32).collect()).collect();
        Self {
            inst,
            n,
            status: inst.sizes.iter().map(|&s| vec![Status::Open; s]).collect(),
            in_count: vec![0; inst.m],
            alive: vec![true; inst.tuples.len()],
            live,
            in_hits: vec![0; inst.tuples.len()],
            covered: 0,
            trail: Vec::new(),
            best: incumbent,
            nodes: 0,
            budget,
            scratch: Vec::new(),
        }
    }

    fn include(&mut self, t: usize, v: usize) {
        self.status[t][v] = Status::In;
        self.in_count[t] += 1;
        self.trail.push(Undo::In(t, v));
        let m = self.inst.m as u32;
        for &id in &self.inst.by_value[t][v] {
            self.in_hits[id as usize] += 1;
            if self.in_hits[id as usize] == m {
                self.covered += 1;
            }
        }
        if self.in_count[t] == self.n {
            for w in 0..self.inst.sizes[t] {
                if self.status[t][w] == Status::Open {
                    self.exclude(t, w);
                }
            }
        }
    }

    fn exclude(&mut self, t: usize, v: usize) {
        self.status[t][v] = Status::Out;
        self.trail.push(Undo::Out(t, v));
        for &id in &self.inst.by_value[t][v] {
            if self.alive[id as usize] {
                self.alive[id as usize] = false;
                for (s, &w) in self.inst.tuples[id as usize].iter().enumerate() {
                    self.live[s][w as usize] -= 1;
                }
                self.trail.push(Undo::Kill(id));
            }
        }
    }

    fn undo_to(&mut self, mark: usize) {
        let m = self.inst.m as u32;
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Undo::In(t, v) => {
                    self.status[t][v] = Status::Open;
                    self.in_count[t] -= 1;
                    for &id in &self.inst.by_value[t][v] {
                        if self.in_hits[id as usize] == m {
                            self.covered -= 1;
                        }
                        self.in_hits[id as usize] -= 1;
                    }
                }
                Undo::Out(t, v) => self.status[t][v] = Status::Open,
                Undo::Kill(id) => {
                    self.alive[id as usize] = true;
                    for (s, &w) in self.inst.tuples[id as usize].iter().enumerate() {
                        self.live[s][w as usize] += 1;
                    }
                }
            }
        }
    }

    /// Upper bound for slot t: live tuples through chosen values plus the
    /// largest live counts among the open values that still fit.
    fn slot_bound(&mut self, t: usize) -> u64 {
        let mut fixed = 0u64;
        self.scratch.clear();
        for v in 0..self.inst.sizes[t] {
            match self.status[t][v] {
                Status::In => fixed += u64::from(self.live[t][v]),
                Status::Open if self.live[t][v] > 0 => self.scratch.push(self.live[t][v]),
                _ => {}
            }
        }
        let room = self.n - self.in_count[t];
        if self.scratch.len() > room {
            self.scratch.select_nth_unstable_by(room, |a, b| b.cmp(a));
            self.scratch.truncate(room);
        }
        fixed + self.scratch.iter().map(|&c| u64::from(c)).sum::<u64>()
    }

    fn dfs(&mut self) -> std::result::Result<(), ()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(());
        }
        let mut bound = u64::MAX;
        let mut open_slots = 0;
        let mut last_open = 0;
        let mut pick: Option<(u32, usize, usize)> = None;
        for t in 0..self.inst.m {
            bound = bound.min(self.slot_bound(t));
            let mut has_open = false;
            if self.in_count[t] < self.n {
                for v in 0..self.inst.sizes[t] {
                    let c = self.live[t][v];
                    if self.status[t][v] == Status::Open && c > 0 {
                        has_open = true;
                        if pick.is_none_or(|(bc, _, _)| c > bc) {
                            pick = Some((c, t, v));
                        }
                    }
                }
            }
            if has_open {
                open_slots += 1;
                last_open = t;
            }
        }
        if bound <= self.best {
            return Ok(());
        }
        if open_slots <= 1 {
            // every live tuple is fixed outside one slot, so the bound of that slot is attained
            let value = if open_slots == 1 { self.slot_bound(last_open) } else { self.covered };
            self.best = self.best.max(value);
            return Ok(());
        }
        let (_, t, v) = pick.expect("open slot without candidate");
        let mark = self.trail.len();
        self.include(t, v);
        let r = self.dfs();
        self.undo_to(mark);
        r?;
        self.exclude(t, v);
        let r = self.dfs();
        self.undo_to(mark);
        r
    }
}

/// Result of an exact search together with its node count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsiSearch {
    pub value: u64,
    pub nodes: u64,
}

fn trivial_psi(set: &IndexSet, n: u64) -> Option<u64> {
    if set.is_empty() || n == 0 {
        return Some(0);
    }
    let max_support = (0..set.m()).map(|t| set.slot_support(t).len()).max().unwrap_or(0);
    if n as usize >= max_support {
        return Some(set.len() as u64);
    }
    None
}

/// Exact psi(n) by depth-first branch-and-bound over (slot, value) inclusion.
///
/// Values are branched in order of most live tuples, ties to the lowest slot
/// and then the smallest label; the include branch is explored first. Fails
/// with [`Error::BudgetExhausted`] once more than `budget` nodes are expanded.
pub fn psi_exact_search(set: &IndexSet, n: u64, budget: u64) -> Result<PsiSearch> {
    if let Some(v) = trivial_psi(set, n) {
        return Ok(PsiSearch { value: v, nodes: 0 });
    }
    let inst = Instance::new(set);
    let start = greedy_on(&inst, n as usize, 4, 0);
    let mut search = Search::new(&inst, n as usize, budget, start);
    match search.dfs() {
        Ok(()) => Ok(PsiSearch { value: search.best, nodes: search.nodes }),
        Err(()) => Err(Error::BudgetExhausted { best: search.best, nodes: budget }),
    }
}

/// Exact psi(n); see [`psi_exact_search`].
pub fn psi_exact(set: &IndexSet, n: u64, budget: u64) -> Result<u64> {
    psi_exact_search(set, n, budget).map(|s| s.value)
}

fn coverage(inst: &Instance, chosen: &[Vec<bool>]) -> u64 {
    inst.tuples
        .iter()
        .filter(|tu| tu.iter().enumerate().all(|(t, &v)| chosen[t][v as usize]))
        .count() as u64
}

/// Tuples through (t, v) whose other slots are all chosen.
fn through(inst: &Instance, chosen: &[Vec<bool>], t: usize, v: usize) -> i64 {
    inst.by_value[t][v]
        .iter()
        .filter(|&&id| {
            inst.tuples[id as usize]
                .iter()
                .enumerate()
                .all(|(s, &w)| s == t || chosen[s][w as usize])
        })
        .count() as i64
}

fn greedy_on(inst: &Instance, n: usize, restarts: u32, seed: u64) -> u64 {
    let mut best = 0;
    for r in 0..restarts {
        let mut rng = rng::stream(seed, u64::from(r));
        let mut chosen: Vec<Vec<bool>> = inst
            .sizes
            .iter()
            .map(|&s| {
                let mut c = vec![false; s];
                for i in sample(&mut rng, s, n.min(s)) {
                    c[i] = true;
                }
                c
            })
            .collect();
        loop {
            let mut improved = false;
            for t in 0..inst.m {
                for u in 0..inst.sizes[t] {
                    if !chosen[t][u] {
                        continue;
                    }
                    let loss = through(inst, &chosen, t, u);
                    for w in 0..inst.sizes[t] {
                        if chosen[t][w] {
                            continue;
                        }
                        if through(inst, &chosen, t, w) > loss {
                            chosen[t][u] = false;
                            chosen[t][w] = true;
                            improved = true;
                            break;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        best = best.max(coverage(inst, &chosen));
    }
    best
}

/// Lower bound on psi(n): seeded random starts followed by single-value swap
/// hill-climbing, best over `restarts`.
pub fn psi_greedy(set: &IndexSet, n: u64, restarts: u32, seed: u64) -> u64 {
    if let Some(v) = trivial_psi(set, n) {
        return v;
    }
    greedy_on(&Instance::new(set), n as usize, restarts.max(1), seed)
}

/// psi values over a list of n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiProfile {
    pub n_values: Vec<u64>,
    pub psi_values: Vec<u64>,
    pub exact_flags: Vec<bool>,
}

impl PsiProfile {
    /// Checks the structural invariants against the set the profile was computed for.
    pub fn check(&self, set: &IndexSet) -> Result<()> {
        let k = self.n_values.len();
        if self.psi_values.len() != k || self.exact_flags.len() != k {
            return Err(Error::InvalidArgument("profile columns differ in length".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("n values not strictly increasing".into()));
        }
        if self.psi_values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("psi values decrease".into()));
        }
        for (&n, &p) in self.n_values.iter().zip(&self.psi_values) {
            let cap = (n as f64).powi(set.m() as i32).min(set.len() as f64);
            if p as f64 > cap {
                return Err(Error::InvalidArgument(format!("psi({n}) = {p} exceeds min(|set|, n^m)")));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,psi,exact\n");
        for i in 0..self.n_values.len() {
            s.push_str(&format!("{},{},{}\n", self.n_values[i], self.psi_values[i], self.exact_flags[i]));
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<PsiProfile> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "n,psi,exact" => {}
            _ => return Err(Error::Parse { line: 1, msg: "expected header `n,psi,exact`".into() }),
        }
        let mut p = PsiProfile { n_values: vec![], psi_values: vec![], exact_flags: vec![] };
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            let cols: Vec<&str> = line.trim().split(',').collect();
            if cols.len() != 3 {
                return Err(err("expected 3 columns"));
            }
            p.n_values.push(cols[0].parse().map_err(|_| err("bad n"))?);
            p.psi_values.push(cols[1].parse().map_err(|_| err("bad psi"))?);
            p.exact_flags.push(cols[2].parse().map_err(|_| err("bad exact flag"))?);
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiMode {
    Exact,
    Greedy,
}

impl FromStr for PsiMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "greedy" => Ok(Self::Greedy),
            _ => Err(Error::InvalidArgument(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    LeastSquares,
    Endpoint,
}

impl FromStr for FitMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least_squares" => Ok(Self::LeastSquares),
            "endpoint" => Ok(Self::Endpoint),
            _ => Err(Error::InvalidArgument(format!("unknown fit `{s}`"))),
        }
    }
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LeastSquares => "least_squares",
            Self::Endpoint => "endpoint",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileSettings {
    pub mode: PsiMode,
    pub budget: u64,
    pub restarts: u32,
    pub seed: u64,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        Self { mode: PsiMode::Exact, budget: 10_000_000, restarts: 8, seed: 0 }
    }
}

/// Computes psi at each n. In exact mode a point whose search runs out of
/// budget falls back to the best heuristic lower bound and is flagged inexact.
/// Inexact points are raised to their predecessor, since psi is nondecreasing.
pub fn psi_profile(set: &IndexSet, ns: &[u64], s: &ProfileSettings) -> Result<PsiProfile> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::InvalidArgument("n values must be positive and strictly increasing".into()));
    }
    let points: Vec<Result<(u64, bool)>> = ns
        .par_iter()
        .map(|&n| match s.mode {
            PsiMode::Greedy => Ok((psi_greedy(set, n, s.restarts, s.seed), false)),
            PsiMode::Exact => match psi_exact(set, n, s.budget) {
                Ok(v) => Ok((v, true)),
                Err(Error::BudgetExhausted { best, .. }) => {
                    Ok((best.max(psi_greedy(set, n, s.restarts, s.seed)), false))
                }
                Err(e) => Err(e),
            },
        })
        .collect();
    let mut profile = PsiProfile { n_values: ns.to_vec(), psi_values: vec![], exact_flags: vec![] };
    for p in points {
        let (v, exact) = p?;
        let v = match profile.psi_values.last() {
            Some(&prev) if !exact => v.max(prev),
            _ => v,
        };
        profile.psi_values.push(v);
        profile.exact_flags.push(exact);
    }
    Ok(profile)
}

/// Regression estimate of the growth exponent of psi over a window of n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub n_range: (u64, u64),
    pub method: FitMethod,
    pub profile: PsiProfile,
}

/// Fits log psi(n) against log n on an existing profile.
pub fn fit_profile(profile: &PsiProfile, method: FitMethod) -> Result<DimEstimate> {
    let ns = &profile.n_values;
    if ns.len() < 2 {
        return Err(Error::InvalidArgument("need at least two n values".into()));
    }
    if let Some(i) = profile.psi_values.iter().position(|&p| p == 0) {
        return Err(Error::UndefinedLog { n: ns[i] });
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = profile.psi_values.iter().map(|&p| (p as f64).ln()).collect();
    let (slope, intercept) = match method {
        FitMethod::LeastSquares => {
            let k = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / k;
            let my = ys.iter().sum::<f64>() / k;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let slope = sxy / sxx;
            (slope, my - slope * mx)
        }
        FitMethod::Endpoint => {
            let last = xs.len() - 1;
            if ns[last] < 2 {
                return Err(Error::InvalidArgument("endpoint fit needs n_max >= 2".into()));
            }
            (ys[last] / xs[last], 0.0)
        }
    };
    Ok(DimEstimate { slope, intercept, n_range: (ns[0], ns[ns.len() - 1]), method, profile: profile.clone() })
}

/// Profile plus fit.
pub fn estimate_dim(set: &IndexSet, ns: &[u64], method: FitMethod, s: &ProfileSettings) -> Result<DimEstimate> {
    if ns.len() < 2 {
        return Err(Error::InvalidArgument("need at least two n values".into()));
    }
    fit_profile(&psi_profile(set, ns, s)?, method)
}

/// Perfect squares 1, 4, ..., q_max^2.
pub fn square_window(q_max: u64) -> Vec<u64> {
    (1..=q_max).map(|q| q * q).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{gen_arith_diagonal, gen_full, gen_prime_diagonal, gen_triangle, IndexSet};
    use proptest::prelude::*;

    /// Enumerates every choice of min(n, |support_t|) values per slot.
    fn brute_force(set: &IndexSet, n: u64) -> u64 {
        let supports: Vec<Vec<u64>> = (0..set.m()).map(|t| set.slot_support(t)).collect();
        let subsets: Vec<Vec<Vec<u64>>> = supports
            .iter()
            .map(|s| {
                let k = (n as usize).min(s.len());
                (0u32..1 << s.len())
                    .filter(|mask| mask.count_ones() as usize == k)
                    .map(|mask| (0..s.len()).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect())
                    .collect()
            })
            .collect();
        let mut best = 0;
        let mut idx = vec![0usize; set.m()];
        loop {
            let count = set
                .tuples()
                .filter(|tu| tu.entries().iter().enumerate().all(|(t, x)| subsets[t][idx[t]].contains(x)))
                .count() as u64;
            best = best.max(count);
            let mut t = 0;
            loop {
                if t == set.m() {
                    return best;
                }
                idx[t] += 1;
                if idx[t] < subsets[t].len() {
                    break;
                }
                idx[t] = 0;
                t += 1;
            }
        }
    }

    fn diag(k: u64) -> IndexSet {
        IndexSet::from_tuples(2, (1..=k).map(|i| vec![i, i])).unwrap()
    }

    #[test]
    fn psi_exact_examples() {
        assert_eq!(psi_exact(&diag(5), 3, 1_000_000).unwrap(), 3);
        assert_eq!(brute_force(&diag(5), 3), 3);
        let full = gen_full(2, 5).unwrap();
        assert_eq!(psi_exact(&full, 2, 1_000_000).unwrap(), 4);
        assert_eq!(brute_force(&full, 2), 4);
        let tri = gen_triangle(2).unwrap();
        assert_eq!(psi_exact(&tri, 4, 1_000_000).unwrap(), 8);
        assert_eq!(brute_force(&tri, 2), 2);
        assert_eq!(psi_exact(&tri, 2, 1_000_000).unwrap(), 2);
    }

    #[test]
    fn budget_exhaustion_carries_incumbent() {
        let tri = gen_triangle(3).unwrap();
        match psi_exact(&tri, 4, 1) {
            Err(Error::BudgetExhausted { best, nodes }) => {
                assert_eq!(nodes, 1);
                assert!(best >= 1 && best <= psi_exact(&tri, 4, 10_000_000).unwrap());
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn node_counts_are_reproducible() {
        let tri = gen_triangle(3).unwrap();
        let a = psi_exact_search(&tri, 4, 10_000_000).unwrap();
        let b = psi_exact_search(&tri, 4, 10_000_000).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value, brute_force(&tri, 4));
    }

    #[test]
    fn psi_greedy_examples() {
        assert_eq!(psi_greedy(&diag(5), 3, 8, 1), 3);
        for seed in 0..5 {
            assert_eq!(psi_greedy(&gen_triangle(2).unwrap(), 4, 1, seed), 8);
        }
        let single = IndexSet::from_tuples(3, [vec![1, 2, 3]]).unwrap();
        assert_eq!(psi_greedy(&single, 1, 1, 0), 1);
        assert_eq!(psi_exact(&single, 1, 10).unwrap(), 1);
    }

    #[test]
    fn empty_set() {
        let e = IndexSet::new(2).unwrap();
        assert_eq!(psi_exact(&e, 3, 10).unwrap(), 0);
        let err = estimate_dim(&e, &[2, 3], FitMethod::LeastSquares, &ProfileSettings::default()).unwrap_err();
        assert!(matches!(err, Error::UndefinedLog { n: 2 }));
    }

    #[test]
    fn dimension_examples() {
        let s = ProfileSettings::default();
        let ns: Vec<u64> = (2..=8).collect();
        let d = estimate_dim(&gen_arith_diagonal(3, 60).unwrap(), &ns, FitMethod::LeastSquares, &s).unwrap();
        assert!((d.slope - 1.0).abs() < 1e-9, "{}", d.slope);
        assert_eq!(d.n_range, (2, 8));
        assert!(d.profile.exact_flags.iter().all(|&e| e));

        let d = estimate_dim(&gen_prime_diagonal(3, 12).unwrap(), &ns, FitMethod::Endpoint, &s).unwrap();
        assert!((d.slope - 1.0).abs() < 1e-9);

        let ns: Vec<u64> = (2..=6).collect();
        let full = gen_full(2, 12).unwrap();
        let d = estimate_dim(&full, &ns, FitMethod::LeastSquares, &s).unwrap();
        assert_eq!(d.profile.psi_values, ns.iter().map(|n| n * n).collect::<Vec<_>>());
        assert!((1.9..=2.1).contains(&d.slope), "{}", d.slope);
    }

    #[test]
    fn triangle_profile_on_small_squares() {
        let tri = gen_triangle(2).unwrap();
        let p = psi_profile(&tri, &[1, 4], &ProfileSettings::default()).unwrap();
        assert_eq!(p.psi_values, vec![1, 8]);
        let d = fit_profile(&p, FitMethod::LeastSquares).unwrap();
        assert!((d.slope - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fallback_is_flagged_and_monotone() {
        let tri = gen_triangle(3).unwrap();
        let s = ProfileSettings { budget: 1, ..ProfileSettings::default() };
        let p = psi_profile(&tri, &[1, 2, 3, 4, 9], &s).unwrap();
        assert_eq!(p.exact_flags, vec![false, false, false, false, true]);
        p.check(&tri).unwrap();
    }

    #[test]
    fn csv_format() {
        let p = PsiProfile { n_values: vec![1, 2], psi_values: vec![1, 2], exact_flags: vec![true, true] };
        assert_eq!(p.to_csv(), "n,psi,exact\n1,1,true\n2,2,true\n");
        assert_eq!(PsiProfile::parse_csv(&p.to_csv()).unwrap(), p);
        assert!(PsiProfile::parse_csv("n,psi\n").is_err());
        assert!(PsiProfile::parse_csv("n,psi,exact\n1,x,true\n").is_err());
    }

    #[test]
    fn profile_rejects_bad_windows() {
        let s = ProfileSettings::default();
        assert!(psi_profile(&diag(3), &[3, 2], &s).is_err());
        assert!(psi_profile(&diag(3), &[0, 2], &s).is_err());
        assert!(estimate_dim(&diag(3), &[2], FitMethod::LeastSquares, &s).is_err());
    }

    fn small_set() -> impl Strategy<Value = IndexSet> {
        (2usize..=3).prop_flat_map(|m| {
            prop::collection::vec(prop::collection::vec(1u64..=5, m), 1..=10).prop_map(move |rows| {
                let mut s = IndexSet::new(m).unwrap();
                for r in rows {
                    let _ = s.insert(crate::index::MultiIndexTuple::new(r).unwrap());
                }
                s
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_matches_brute_force(set in small_set(), n in 1u64..=3) {
            let v = psi_exact(&set, n, 1_000_000).unwrap();
            prop_assert_eq!(v, brute_force(&set, n));
            prop_assert!(psi_greedy(&set, n, 4, 3) <= v);
        }

        #[test]
        fn monotone_and_capped(set in small_set(), n in 1u64..=4) {
            let a = psi_exact(&set, n, 1_000_000).unwrap();
            let b = psi_exact(&set, n + 1, 1_000_000).unwrap();
            prop_assert!(a <= b);
            prop_assert!(a as f64 <= (n as f64).powi(set.m() as i32).min(set.len() as f64));
        }

        #[test]
        fn saturation(set in small_set()) {
            let n = (0..set.m()).map(|t| set.slot_support(t).len()).max().unwrap() as u64;
            prop_assert_eq!(psi_exact(&set, n, 1_000_000).unwrap(), set.len() as u64);
        }

        #[test]
        fn slot_permutation_invariance(set in small_set(), n in 1u64..=3) {
            let perm: Vec<usize> = (0..set.m()).rev().collect();
            let p = set.permute_slots(&perm).unwrap();
            prop_assert_eq!(psi_exact(&set, n, 1_000_000).unwrap(), psi_exact(&p, n, 1_000_000).unwrap());
        }

        #[test]
        fn subadditive(a in small_set(), b in small_set(), n in 1u64..=3) {
            prop_assume!(a.m() == b.m());
            let mut u = a.clone();
            for t in b.tuples() {
                let _ = u.insert(t.clone());
            }
            let pu = psi_exact(&u, n, 1_000_000).unwrap();
            prop_assert!(pu <= psi_exact(&a, n, 1_000_000).unwrap() + psi_exact(&b, n, 1_000_000).unwrap());
        }

        #[test]
        fn arith_diagonal_slope(m in 1usize..=4, t in 8u64..30) {
            let ns: Vec<u64> = (2..=8).collect();
            let d = estimate_dim(&gen_arith_diagonal(m, t).unwrap(), &ns, FitMethod::LeastSquares, &ProfileSettings::default()).unwrap();
            prop_assert!((d.slope - 1.0).abs() < 1e-9);
        }
    }
}
