//! Composition systems and the perturbed composition operator.
//!
//! A system carries two self-maps `a`, `b` of a real interval, a nonnegative
//! perturbation weight `kappa`, and a positive conjugation weight `g`. The
//! operator acts as `T[f](x) = f(a x) + kappa(x) f(b x)`; its conjugate
//! `g T[g^-1 f]` has branch weights `g/(g∘a)` and `kappa·g/(g∘b)`, which the
//! applications supply in closed form so that evaluation never divides by a
//! vanishing `g` at the domain edge.
//!
//! Word weights `u(w, x)` expand the iterates: `T_g^r[1](x)` is the sum of
//! `u(w, x)` over all words `w` of length `r` in `{a, b}`. Two independent
//! routes compute the same quantities (run-word enumeration and memoized
//! direct iteration) and are cross-checked in the tests.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Shared closure type for the scalar functions a system is built from.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn real_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RealFn {
    Arc::new(f)
}

/// Closed or left-open interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub open_lo: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, open_lo: false }
    }

    pub fn left_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, open_lo: true }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.open_lo { x > self.lo } else { x >= self.lo };
        above && x <= self.hi
    }
}

/// Iteration limits; exceeding one is a reported error, never silent work.
#[derive(Clone, Copy, Debug)]
pub struct IterationCaps {
    /// Maximum `r` for full word enumeration (2^r words).
    pub word_sum_r: u32,
    /// Maximum `r` for memoized direct iteration.
    pub direct_r: u32,
    /// Memo-table entry budget per call.
    pub memo_nodes: usize,
}

impl Default for IterationCaps {
    fn default() -> Self {
        IterationCaps {
            word_sum_r: 14,
            direct_r: 24,
            memo_nodes: 1 << 26,
        }
    }
}

/// The two branches of the operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    A,
    B,
}

/// Exact memo keys for points reachable under the branch maps.
///
/// Keys are exact by construction: two equal keys always denote the same
/// point, so no floating-point tolerance ever enters the memo table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyScheme {
    /// Points `(m ± x) / 2^d`; branch A is `x -> 1 - x/2`, branch B is `x -> x/2`.
    DyadicReflect,
    /// Points `(m + x) / 2^d`; branch A is `x -> x/2`, branch B is `x -> (x+1)/2`.
    DyadicShift,
    /// Moebius words over the nonnegative matrices of `1/(1+x)` and `x/(1+x)`;
    /// entries stay Fibonacci-bounded below the iteration cap.
    Moebius,
    /// Opaque bit-pattern keys; always sound for memoization, no cross-path
    /// identification of equal points.
    Raw,
}

impl KeyScheme {
    pub(crate) fn root_key(&self, x: f64) -> u128 {
        match self {
            KeyScheme::DyadicReflect | KeyScheme::DyadicShift => pack_dyadic(0, 0, true),
            KeyScheme::Moebius => pack_moebius([1, 0, 0, 1]),
            KeyScheme::Raw => pack_raw(0, x),
        }
    }

    /// Key of the child point; `child_value` is only used by `Raw`.
    pub(crate) fn child_key(&self, key: u128, branch: Branch, child_value: f64) -> Result<u128> {
        match self {
            KeyScheme::DyadicReflect => {
                let (d, m, s) = unpack_dyadic(key);
                let (d, m, s) = match branch {
                    // 1 - y/2 with y = (m + s x)/2^d
                    Branch::A => (d + 1, (1u64 << (d + 1)) - m, !s),
                    // y/2
                    Branch::B => (d + 1, m, s),
                };
                if d > 56 {
                    return Err(Error::Capacity { what: "dyadic key depth", value: d as u64, cap: 56 });
                }
                Ok(pack_dyadic(d, m, s))
            }
            KeyScheme::DyadicShift => {
                let (d, m, s) = unpack_dyadic(key);
                let (d, m) = match branch {
                    // y/2
                    Branch::A => (d + 1, m),
                    // (y+1)/2
                    Branch::B => (d + 1, m + (1u64 << d)),
                };
                if d > 56 {
                    return Err(Error::Capacity { what: "dyadic key depth", value: d as u64, cap: 56 });
                }
                Ok(pack_dyadic(d, m, s))
            }
            KeyScheme::Moebius => {
                let m = unpack_moebius(key);
                // left-compose the branch map: child point = branch(M x)
                let b = match branch {
                    Branch::A => [0u64, 1, 1, 1], // 1/(1+x)
                    Branch::B => [1u64, 0, 1, 1], // x/(1+x)
                };
                let mut out = [0u64; 4];
                out[0] = b[0] * m[0] + b[1] * m[2];
                out[1] = b[0] * m[1] + b[1] * m[3];
                out[2] = b[2] * m[0] + b[3] * m[2];
                out[3] = b[2] * m[1] + b[3] * m[3];
                for &e in &out {
                    if e >= 1 << 31 {
                        return Err(Error::Capacity { what: "moebius key entry", value: e, cap: 1 << 31 });
                    }
                }
                Ok(pack_moebius(out))
            }
            KeyScheme::Raw => {
                let (d, _) = unpack_raw(key);
                Ok(pack_raw(d + 1, child_value))
            }
        }
    }
}

fn pack_dyadic(depth: u32, offset: u64, sign: bool) -> u128 {
    ((depth as u128) << 72) | ((sign as u128) << 64) | offset as u128
}

fn unpack_dyadic(key: u128) -> (u32, u64, bool) {
    ((key >> 72) as u32, key as u64, (key >> 64) & 1 == 1)
}

fn pack_moebius(m: [u64; 4]) -> u128 {
    (m[0] as u128) << 96 | (m[1] as u128) << 64 | (m[2] as u128) << 32 | m[3] as u128
}

fn unpack_moebius(key: u128) -> [u64; 4] {
    [
        (key >> 96) as u32 as u64,
        (key >> 64) as u32 as u64,
        (key >> 32) as u32 as u64,
        key as u32 as u64,
    ]
}

fn pack_raw(depth: u32, value: f64) -> u128 {
    ((depth as u128) << 64) | value.to_bits() as u128
}

fn unpack_raw(key: u128) -> (u32, u64) {
    ((key >> 64) as u32, key as u64)
}

/// A composition system: maps, weights, fixed-point data and key scheme.
#[derive(Clone)]
pub struct CompositionSystem {
    pub map_a: RealFn,
    pub map_b: RealFn,
    pub kappa: RealFn,
    pub weight_g: RealFn,
    /// Closed form of `g/(g∘a)`.
    branch_weight_a: RealFn,
    /// Closed form of `kappa·g/(g∘b)`, continuous up to the domain edge.
    branch_weight_b: RealFn,
    pub fixed_point_x0: f64,
    pub kappa0: f64,
    pub domain: Interval,
    pub keys: KeyScheme,
    pub caps: IterationCaps,
}

impl CompositionSystem {
    /// Builds a system and validates the fixed-point and positivity
    /// invariants on a deterministic sample of the domain.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        map_a: RealFn,
        map_b: RealFn,
        kappa: RealFn,
        weight_g: RealFn,
        branch_weight_a: RealFn,
        branch_weight_b: RealFn,
        fixed_point_x0: f64,
        kappa0: f64,
        domain: Interval,
        keys: KeyScheme,
    ) -> Result<Self> {
        let sys = CompositionSystem {
            map_a,
            map_b,
            kappa,
            weight_g,
            branch_weight_a,
            branch_weight_b,
            fixed_point_x0,
            kappa0,
            domain,
            keys,
            caps: IterationCaps::default(),
        };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        let x0 = self.fixed_point_x0;
        if (self.map_a)(x0) - x0 > 1e-14 || x0 - (self.map_a)(x0) > 1e-14 {
            return Err(Error::InvalidInput(format!(
                "a({x0}) = {} is not a fixed point",
                (self.map_a)(x0)
            )));
        }
        if ((self.kappa)(x0) - self.kappa0).abs() > 1e-14 {
            return Err(Error::InvalidInput(format!(
                "kappa0 = {} but kappa(x0) = {}",
                self.kappa0,
                (self.kappa)(x0)
            )));
        }
        let mut w = crate::sampling::WeylSequence::new(0);
        for _ in 0..257 {
            let x = self.sample_point(&mut w);
            let g = (self.weight_g)(x);
            let ga = (self.weight_g)((self.map_a)(x));
            let k = (self.kappa)(x);
            if g.is_nan() || g <= 0.0 || ga.is_nan() || ga <= 0.0 {
                return Err(Error::InvalidInput(format!("g not positive at x = {x}")));
            }
            if k.is_nan() || k < 0.0 {
                return Err(Error::InvalidInput(format!("kappa negative at x = {x}")));
            }
        }
        Ok(())
    }

    /// Deterministic quasi-random point of the domain (never the open edge).
    pub fn sample_point(&self, w: &mut crate::sampling::WeylSequence) -> f64 {
        let u = w.next_point();
        let x = self.domain.lo + (self.domain.hi - self.domain.lo) * u;
        if self.domain.open_lo && x <= self.domain.lo {
            self.domain.lo + (self.domain.hi - self.domain.lo) * 0.5
        } else {
            x
        }
    }

    pub fn with_caps(mut self, caps: IterationCaps) -> Self {
        self.caps = caps;
        self
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain { x, lo: self.domain.lo, hi: self.domain.hi })
        }
    }

    fn branch_map(&self, branch: Branch) -> &RealFn {
        match branch {
            Branch::A => &self.map_a,
            Branch::B => &self.map_b,
        }
    }

    fn branch_weight(&self, branch: Branch) -> &RealFn {
        match branch {
            Branch::A => &self.branch_weight_a,
            Branch::B => &self.branch_weight_b,
        }
    }

    pub(crate) fn branch_weights(&self) -> (&RealFn, &RealFn) {
        (&self.branch_weight_a, &self.branch_weight_b)
    }
}

/// One application of `T` (or of the conjugate when `conjugated` is set).
pub fn apply_t(
    sys: &CompositionSystem,
    f: &dyn Fn(f64) -> f64,
    x: f64,
    conjugated: bool,
) -> Result<f64> {
    sys.check_domain(x)?;
    let xa = (sys.map_a)(x);
    let xb = (sys.map_b)(x);
    let v = if conjugated {
        (sys.branch_weight_a)(x) * f(xa) + (sys.branch_weight_b)(x) * f(xb)
    } else {
        f(xa) + (sys.kappa)(x) * f(xb)
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric { context: format!("apply_t at x = {x}") })
    }
}

/// A word over `{a, b}` in run-length normal form `a^{k0} b^{k1} a^{k2} ...`.
///
/// `k0 >= 0` counts leading `a`s; `runs[j]` is `k_{j+1} >= 1` with odd spec
/// indices (`k1, k3, ...`) denoting `b`-runs and even ones `a`-runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunWord {
    k0: u32,
    runs: Vec<u32>,
}

impl RunWord {
    pub fn new(k0: u32, runs: Vec<u32>) -> Result<Self> {
        if runs.contains(&0) {
            return Err(Error::WordShape("inner runs must be positive".into()));
        }
        Ok(RunWord { k0, runs })
    }

    pub fn empty() -> Self {
        RunWord { k0: 0, runs: Vec::new() }
    }

    pub fn k0(&self) -> u32 {
        self.k0
    }

    pub fn runs(&self) -> &[u32] {
        &self.runs
    }

    /// Total length `|w|`.
    pub fn len(&self) -> u32 {
        self.k0 + self.runs.iter().sum::<u32>()
    }

    pub fn is_empty(&self) -> bool {
        self.k0 == 0 && self.runs.is_empty()
    }

    /// Number of `b` occurrences `|w|_b` (odd-indexed runs).
    pub fn count_b(&self) -> u32 {
        self.runs.iter().step_by(2).sum()
    }

    /// Expansion to the letter sequence, leftmost letter first.
    pub fn to_letters(&self) -> Vec<Branch> {
        let mut out = Vec::with_capacity(self.len() as usize);
        out.extend(std::iter::repeat_n(Branch::A, self.k0 as usize));
        for (i, &k) in self.runs.iter().enumerate() {
            let letter = if i % 2 == 0 { Branch::B } else { Branch::A };
            out.extend(std::iter::repeat_n(letter, k as usize));
        }
        out
    }

    /// Re-normalizes a letter sequence; inverse of [`RunWord::to_letters`].
    pub fn from_letters(letters: &[Branch]) -> Self {
        let mut k0 = 0u32;
        let mut rest = letters;
        while let Some((Branch::A, tail)) = rest.split_first() {
            k0 += 1;
            rest = tail;
        }
        let mut runs = Vec::new();
        let mut iter = rest.iter().peekable();
        while let Some(&letter) = iter.next() {
            let mut n = 1u32;
            while iter.peek() == Some(&&letter) {
                iter.next();
                n += 1;
            }
            runs.push(n);
        }
        RunWord { k0, runs }
    }

    /// `a`-run lengths `k_0, ..., k_r` when the word is read as
    /// `a^{k_0} b a^{k_1} b ... b a^{k_r}` (one entry per gap between `b`s,
    /// zeros allowed). Every word has this shape.
    pub fn gap_lengths(&self) -> Vec<u32> {
        let mut gaps = vec![self.k0];
        for (i, &k) in self.runs.iter().enumerate() {
            if i % 2 == 0 {
                // a run of k letters `b` opens k gaps, all initially empty
                gaps.resize(gaps.len() + k as usize, 0);
            } else {
                *gaps.last_mut().unwrap() = k;
            }
        }
        gaps
    }
}

/// Which route evaluates a word weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMethod {
    /// Fold the defining recursion over the letters (uses the closed-form
    /// branch weights only).
    Recursive,
    /// Evaluate `g(x)/g(w x)` times the product of `kappa` over the suffix
    /// points after each `b`.
    Product,
}

/// Word weight `u(w, x)`.
pub fn word_weight(
    sys: &CompositionSystem,
    w: &RunWord,
    x: f64,
    method: WeightMethod,
) -> Result<f64> {
    sys.check_domain(x)?;
    let letters = w.to_letters();
    let v = match method {
        WeightMethod::Recursive => weight_recursive(sys, &letters, x),
        WeightMethod::Product => {
            // rightmost letter applies first; collect kappa at the point seen
            // just before each b is applied
            let mut point = x;
            let mut acc = 1.0f64;
            for &letter in letters.iter().rev() {
                if letter == Branch::B {
                    acc *= (sys.kappa)(point);
                }
                point = (sys.branch_map(letter))(point);
            }
            (sys.weight_g)(x) / (sys.weight_g)(point) * acc
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric { context: format!("word_weight at x = {x}") })
    }
}

fn weight_recursive(sys: &CompositionSystem, letters: &[Branch], x: f64) -> f64 {
    let mut point = x;
    let mut acc = 1.0f64;
    for &letter in letters.iter().rev() {
        acc *= (sys.branch_weight(letter))(point);
        point = (sys.branch_map(letter))(point);
    }
    acc
}

/// `T_g^r[1](x)` by explicit enumeration of all `2^r` words.
///
/// Words are visited in lexicographic run-length order and summed in that
/// fixed order, so the result is bit-reproducible.
pub fn iterate_word_sum(sys: &CompositionSystem, r: u32, x: f64) -> Result<f64> {
    sys.check_domain(x)?;
    if r > sys.caps.word_sum_r {
        return Err(Error::Capacity {
            what: "word enumeration depth",
            value: r as u64,
            cap: sys.caps.word_sum_r as u64,
        });
    }
    let mut letters = vec![Branch::A; r as usize];
    let mut total = 0.0f64;
    enumerate_words(sys, &mut letters, 0, r as usize, Branch::A, x, &mut total);
    Ok(total)
}

// Fill positions [pos..] with runs, first run letter = `letter`; recursion in
// increasing run length gives lexicographic run-form order.
fn enumerate_words(
    sys: &CompositionSystem,
    letters: &mut Vec<Branch>,
    pos: usize,
    len: usize,
    letter: Branch,
    x: f64,
    total: &mut f64,
) {
    if pos == len {
        *total += weight_recursive(sys, letters, x);
        return;
    }
    let min_run = if pos == 0 && letter == Branch::A { 0 } else { 1 };
    let next = match letter {
        Branch::A => Branch::B,
        Branch::B => Branch::A,
    };
    for run in min_run..=(len - pos) {
        for slot in letters.iter_mut().skip(pos).take(run) {
            *slot = letter;
        }
        enumerate_words(sys, letters, pos + run, len, next, x, total);
    }
}

/// `T_g^r[1](x)` by direct functional iteration over the tree of reachable
/// points, memoized on exact point keys.
pub fn iterate_direct(sys: &CompositionSystem, r: u32, x: f64) -> Result<f64> {
    sys.check_domain(x)?;
    if r > sys.caps.direct_r {
        return Err(Error::Capacity {
            what: "direct iteration depth",
            value: r as u64,
            cap: sys.caps.direct_r as u64,
        });
    }
    let one = real_fn(|_| 1.0);
    let mut engine = TwoBranchEngine {
        map_a: &sys.map_a,
        map_b: &sys.map_b,
        weight_a: &sys.branch_weight_a,
        weight_b: &sys.branch_weight_b,
        base: &one,
        scheme: sys.keys,
        memo: HashMap::new(),
        budget: sys.caps.memo_nodes,
    };
    engine.eval(r, x, sys.keys.root_key(x))
}

/// Sup-norm of `T_g^r[1]` over a uniform evaluation grid.
pub fn iterate_norm(sys: &CompositionSystem, r: u32, grid_points: usize) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for i in 1..=grid_points {
        let x = sys.domain.lo
            + (sys.domain.hi - sys.domain.lo) * i as f64 / grid_points as f64;
        let v = iterate_direct(sys, r, x)?;
        if v.abs() > best {
            best = v.abs();
        }
    }
    Ok(best)
}

/// Generic memoized two-branch iteration; also drives the application
/// operators built on other weight pairs.
pub(crate) struct TwoBranchEngine<'a> {
    pub map_a: &'a RealFn,
    pub map_b: &'a RealFn,
    pub weight_a: &'a RealFn,
    pub weight_b: &'a RealFn,
    pub base: &'a RealFn,
    pub scheme: KeyScheme,
    pub memo: HashMap<(u32, u128), f64>,
    pub budget: usize,
}

impl<'a> TwoBranchEngine<'a> {
    pub fn new(
        map_a: &'a RealFn,
        map_b: &'a RealFn,
        weight_a: &'a RealFn,
        weight_b: &'a RealFn,
        base: &'a RealFn,
        scheme: KeyScheme,
        budget: usize,
    ) -> Self {
        TwoBranchEngine {
            map_a,
            map_b,
            weight_a,
            weight_b,
            base,
            scheme,
            memo: HashMap::new(),
            budget,
        }
    }

    pub fn root_key(&self, x: f64) -> u128 {
        self.scheme.root_key(x)
    }

    pub fn eval(&mut self, r: u32, x: f64, key: u128) -> Result<f64> {
        if r == 0 {
            return Ok((self.base)(x));
        }
        if let Some(&v) = self.memo.get(&(r, key)) {
            return Ok(v);
        }
        if self.memo.len() >= self.budget {
            return Err(Error::Capacity {
                what: "memo table entries",
                value: self.memo.len() as u64,
                cap: self.budget as u64,
            });
        }
        let xa = (self.map_a)(x);
        let xb = (self.map_b)(x);
        let va = self.eval(r - 1, xa, self.scheme.child_key(key, Branch::A, xa)?)?;
        let vb = self.eval(r - 1, xb, self.scheme.child_key(key, Branch::B, xb)?)?;
        let v = (self.weight_a)(x) * va + (self.weight_b)(x) * vb;
        if !v.is_finite() {
            return Err(Error::Numeric { context: format!("iteration at x = {x}") });
        }
        self.memo.insert((r, key), v);
        Ok(v)
    }
}

/// Function values tabulated on a grid; the discrete stand-in for a bounded
/// function when only samples are available.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SampledFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(domain: Interval, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidInput("grid/value length mismatch".into()));
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("grid not strictly increasing".into()));
        }
        if let Some(&x) = grid.iter().find(|&&x| !domain.contains(x)) {
            return Err(Error::Domain { x, lo: domain.lo, hi: domain.hi });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric { context: "sampled values".into() });
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Aitken delta-squared acceleration of a scalar sequence.
///
/// Returns the last accelerated value and the spread of the final three as an
/// empirical error band. Constant stretches are passed through unchanged.
pub fn aitken_estimate(seq: &[f64]) -> (f64, f64) {
    if seq.len() < 3 {
        let last = *seq.last().expect("nonempty sequence");
        return (last, f64::NAN);
    }
    let mut acc = Vec::with_capacity(seq.len() - 2);
    for w in seq.windows(3) {
        let (x0, x1, x2) = (w[0], w[1], w[2]);
        let d1 = x1 - x0;
        let dd = x2 - 2.0 * x1 + x0;
        if dd.abs() <= 1e-13 * (x2.abs() + 1.0) {
            acc.push(x2);
        } else {
            acc.push(x0 - d1 * d1 / dd);
        }
    }
    let estimate = *acc.last().unwrap();
    let tail = &acc[acc.len().saturating_sub(3)..];
    let band = tail.iter().cloned().fold(f64::MIN, f64::max)
        - tail.iter().cloned().fold(f64::MAX, f64::min);
    (estimate, band)
}

/// Growth-rate estimate from the norm sequence of operator iterates
/// (`norms[i]` is the norm of the `(i+1)`-st iterate).
pub fn growth_rate(norms: &[f64]) -> Result<(f64, f64)> {
    if norms.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "need at least 8 norms, got {}",
            norms.len()
        )));
    }
    if norms.iter().any(|&n| n.is_nan() || n <= 0.0) {
        return Err(Error::Numeric { context: "non-positive norm".into() });
    }
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(aitken_estimate(&ratios))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SplitMix64;

    // kappa == kappa_scale * x, g == 1 on [0, 1] with halving maps: a simple
    // system with no special structure
    fn toy_system(kappa_scale: f64) -> CompositionSystem {
        CompositionSystem::new(
            real_fn(|x| 0.5 + x / 2.0),
            real_fn(|x| x / 2.0),
            real_fn(move |x| kappa_scale * x),
            real_fn(|_| 1.0),
            real_fn(|_| 1.0),
            real_fn(move |x| kappa_scale * x),
            1.0,
            kappa_scale,
            Interval::closed(0.0, 1.0),
            KeyScheme::Raw,
        )
        .unwrap()
    }

    #[test]
    fn apply_t_with_zero_kappa_is_composition() {
        let sys = toy_system(0.0);
        let f = |x: f64| x * x + 1.0;
        let v = apply_t(&sys, &f, 0.6, false).unwrap();
        assert_eq!(v, f(0.8));
    }

    #[test]
    fn apply_t_constant_one() {
        let sys = toy_system(0.7);
        let v = apply_t(&sys, &|_| 1.0, 0.5, false).unwrap();
        assert!((v - (1.0 + 0.35)).abs() < 1e-15);
    }

    #[test]
    fn apply_t_outside_domain_errors() {
        let sys = toy_system(0.5);
        assert!(matches!(
            apply_t(&sys, &|_| 1.0, 1.5, false),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn empty_word_weight_is_one() {
        let sys = toy_system(0.5);
        let w = RunWord::empty();
        assert_eq!(word_weight(&sys, &w, 0.3, WeightMethod::Recursive).unwrap(), 1.0);
        assert_eq!(word_weight(&sys, &w, 0.3, WeightMethod::Product).unwrap(), 1.0);
    }

    #[test]
    fn pure_a_word_weight_is_g_ratio() {
        // with g == 1 the a-run weight is exactly 1
        let sys = toy_system(0.5);
        let w = RunWord::new(4, vec![]).unwrap();
        let u = word_weight(&sys, &w, 0.3, WeightMethod::Recursive).unwrap();
        assert_eq!(u, 1.0);
    }

    #[test]
    fn run_word_round_trip() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..500 {
            let k0 = rng.next_below(4) as u32;
            let n_runs = rng.next_below(6) as usize;
            let runs: Vec<u32> = (0..n_runs).map(|_| 1 + rng.next_below(3) as u32).collect();
            let w = RunWord::new(k0, runs).unwrap();
            let back = RunWord::from_letters(&w.to_letters());
            assert_eq!(w, back);
            assert_eq!(w.len() as usize, w.to_letters().len());
            let b_count = w.to_letters().iter().filter(|&&l| l == Branch::B).count();
            assert_eq!(w.count_b() as usize, b_count);
        }
    }

    #[test]
    fn gap_lengths_reconstruct_word() {
        // one gap entry per b, so |w| = #b + sum of gaps
        let w = RunWord::new(1, vec![1, 4, 2, 1, 1]).unwrap();
        let gaps = w.gap_lengths();
        assert_eq!(gaps.len() as u32, w.count_b() + 1);
        assert_eq!(gaps.iter().sum::<u32>() + w.count_b(), w.len());
        // direct check on a known word: a b a^4 b b a b a
        let w = RunWord::from_letters(&[
            Branch::A,
            Branch::B,
            Branch::A,
            Branch::A,
            Branch::A,
            Branch::A,
            Branch::B,
            Branch::B,
            Branch::A,
            Branch::B,
            Branch::A,
        ]);
        assert_eq!(w.gap_lengths(), vec![1, 4, 0, 1, 1]);
    }

    #[test]
    fn word_sum_matches_direct_on_toy_system() {
        let sys = toy_system(0.8);
        for r in 0..=10 {
            for &x in &[0.1, 0.5, 0.9] {
                let s = iterate_word_sum(&sys, r, x).unwrap();
                let d = iterate_direct(&sys, r, x).unwrap();
                assert!(
                    (s - d).abs() <= 1e-9 * d.abs().max(1.0),
                    "r={r} x={x}: {s} vs {d}"
                );
            }
        }
    }

    #[test]
    fn zero_kappa_iterates_are_one() {
        let sys = toy_system(0.0);
        for r in 0..=12 {
            assert_eq!(iterate_direct(&sys, r, 0.77).unwrap(), 1.0);
        }
    }

    #[test]
    fn iterates_monotone_in_kappa() {
        let lo = toy_system(0.4);
        let hi = toy_system(0.6);
        for r in 0..=8 {
            for &x in &[0.2, 0.5, 1.0] {
                let vl = iterate_direct(&lo, r, x).unwrap();
                let vh = iterate_direct(&hi, r, x).unwrap();
                assert!(vh >= vl);
            }
        }
    }

    #[test]
    fn word_count_is_two_to_the_r() {
        // with kappa == 1, g == 1, every word weighs 1
        let sys = toy_system(1.0);
        let ones = CompositionSystem {
            kappa: real_fn(|_| 1.0),
            branch_weight_b: real_fn(|_| 1.0),
            kappa0: 1.0,
            ..sys
        };
        for r in 0..=10 {
            let s = iterate_word_sum(&ones, r, 0.5).unwrap();
            assert_eq!(s, (1u64 << r) as f64);
        }
    }

    #[test]
    fn iteration_caps_are_enforced() {
        let sys = toy_system(0.5);
        assert!(matches!(
            iterate_word_sum(&sys, 15, 0.5),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            iterate_direct(&sys, 25, 0.5),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn growth_rate_pure_geometric() {
        let norms: Vec<f64> = (1..=12).map(|r| 3.0 * 0.7f64.powi(r)).collect();
        let (est, band) = growth_rate(&norms).unwrap();
        assert!((est - 0.7).abs() < 1e-12);
        assert!(band.abs() < 1e-12);
    }

    #[test]
    fn growth_rate_accelerates_geometric_correction() {
        // norms = lambda^r (1 + mu^r): accelerated ratios converge at |mu/lambda|^R
        let (lambda, mu) = (0.8f64, 0.3f64);
        let n = 12;
        let norms: Vec<f64> = (1..=n)
            .map(|r| lambda.powi(r) * (1.0 + mu.powi(r)))
            .collect();
        let (est, _) = growth_rate(&norms).unwrap();
        let tol = (mu / lambda).powi(n);
        assert!(
            (est - lambda).abs() <= tol,
            "est = {est}, err = {}, tol = {tol}",
            (est - lambda).abs()
        );
    }

    #[test]
    fn growth_rate_rejects_bad_input() {
        assert!(growth_rate(&[1.0; 5]).is_err());
        let mut norms = vec![1.0; 10];
        norms[3] = 0.0;
        assert!(growth_rate(&norms).is_err());
    }

    #[test]
    fn growth_rate_of_unperturbed_system_is_one() {
        let sys = toy_system(0.0);
        let norms: Vec<f64> = (1..=10)
            .map(|r| iterate_norm(&sys, r, 16).unwrap())
            .collect();
        let (est, _) = growth_rate(&norms).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iterate_direct_deterministic() {
        let sys = toy_system(0.61);
        let a = iterate_direct(&sys, 12, 0.37).unwrap();
        let b = iterate_direct(&sys, 12, 0.37).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sampled_function_validation() {
        let dom = Interval::closed(0.0, 1.0);
        assert!(SampledFunction::new(dom, vec![0.1, 0.5, 0.9], vec![1.0, 2.0, 0.5]).is_ok());
        assert!(SampledFunction::new(dom, vec![0.5, 0.1], vec![1.0, 2.0]).is_err());
        assert!(SampledFunction::new(dom, vec![0.1, 1.5], vec![1.0, 2.0]).is_err());
        assert!(SampledFunction::new(dom, vec![0.1], vec![f64::NAN]).is_err());
    }
}
