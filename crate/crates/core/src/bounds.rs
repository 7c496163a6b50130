//! Quantitative envelopes for the operator iterates.
//!
//! A [`BoundProfile`] packages the sequences `alpha^+`, `alpha^-`, `beta`,
//! `delta` and the scalars `gamma`, `kappa0`, `c1`, `c2`, `eta` that control
//! how the perturbation weight behaves along `a`- and `b`-orbits. From a
//! profile the module evaluates the five comparison series, the per-`r`
//! envelopes `V_r` of the weighted word sums, and a certified two-sided
//! bracket for the radius of convergence of the iterate generating function.
//!
//! Every series is summed with an explicit geometric tail bound; no value is
//! reported without its truncation error.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{word_weight, CompositionSystem, RunWord, WeightMethod};
use crate::sampling::WeylSequence;

const TAIL_STOP: f64 = 1e-14;
const MAX_TERMS: usize = 200_000;

/// Nonnegative sequence with an exact head and a certified geometric
/// envelope: for `i >= head.len()`, `value(i) <= env_coef * env_ratio^(i - head.len())`.
///
/// When the envelope is exact (closed-form geometric continuation) sums use
/// it analytically; otherwise the envelope only feeds the truncation bound.
#[derive(Clone, Debug)]
pub struct SeqGen {
    head: Vec<f64>,
    env_coef: f64,
    env_ratio: f64,
    env_exact: bool,
    sup_suffix: Vec<f64>,
    ratio_sup: f64,
}

impl SeqGen {
    /// Exact geometric continuation after the head.
    pub fn geometric(head: Vec<f64>, env_coef: f64, env_ratio: f64) -> Self {
        Self::build(head, env_coef, env_ratio, true)
    }

    /// Tabulated values; beyond the head only the envelope bound is known.
    pub fn tabulated(head: Vec<f64>, env_coef: f64, env_ratio: f64) -> Self {
        Self::build(head, env_coef, env_ratio, false)
    }

    pub fn zero() -> Self {
        Self::build(Vec::new(), 0.0, 0.0, true)
    }

    pub fn constant(c: f64) -> Self {
        Self::build(Vec::new(), c, 1.0, true)
    }

    fn build(head: Vec<f64>, env_coef: f64, env_ratio: f64, env_exact: bool) -> Self {
        assert!(head.iter().all(|&v| v >= 0.0 && v.is_finite()));
        assert!(env_coef >= 0.0 && env_ratio >= 0.0);
        let env_sup = if env_ratio <= 1.0 { env_coef } else { f64::INFINITY };
        let mut sup_suffix = vec![env_sup; head.len() + 1];
        for i in (0..head.len()).rev() {
            sup_suffix[i] = head[i].max(sup_suffix[i + 1]);
        }
        // certified bound on value(j+1)/value(j) wherever value(j) > 0
        let mut ratio_sup = env_ratio;
        for w in head.windows(2) {
            if w[0] > 0.0 {
                ratio_sup = ratio_sup.max(w[1] / w[0]);
            }
        }
        if let Some(&last) = head.last() {
            if last > 0.0 {
                ratio_sup = ratio_sup.max(env_coef / last);
            }
        }
        SeqGen { head, env_coef, env_ratio, env_exact, sup_suffix, ratio_sup }
    }

    pub fn value(&self, i: usize) -> f64 {
        if i < self.head.len() {
            self.head[i]
        } else if self.env_exact {
            self.env_coef * self.env_ratio.powi((i - self.head.len()) as i32)
        } else {
            0.0
        }
    }

    /// Certified upper bound on `sup_{j >= i} value(j)`.
    pub fn sup_from(&self, i: usize) -> f64 {
        self.sup_suffix[i.min(self.head.len())]
    }

    /// Certified bound on consecutive ratios `value(j+1)/value(j)`.
    pub fn ratio_sup(&self) -> f64 {
        self.ratio_sup
    }

    /// `sum_{k >= from} rho^k value(k)` with a certified truncation bound.
    pub fn weighted_sum(&self, rho: f64, from: usize) -> Result<(f64, f64)> {
        let mut acc = 0.0f64;
        let mut pow = rho.powi(from as i32);
        for k in from..self.head.len() {
            acc += pow * self.head[k];
            pow *= rho;
        }
        // pow is now rho^max(from, head.len())
        let start = from.max(self.head.len());
        let mut bound = 0.0f64;
        if self.env_coef > 0.0 {
            let q = rho * self.env_ratio;
            if q >= 1.0 {
                return Err(Error::Divergence {
                    context: format!("geometric envelope ratio {q} >= 1"),
                });
            }
            let skip = start - self.head.len();
            let env_head = self.env_coef * self.env_ratio.powi(skip as i32);
            let tail = env_head * pow / (1.0 - q);
            if self.env_exact {
                acc += tail;
            } else {
                bound += tail;
            }
        }
        bound += 1e-15 * (1.0 + acc.abs());
        Ok((acc, bound))
    }

    /// Pointwise scaling; used to build adversarial profile mutations.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor >= 0.0);
        Self::build(
            self.head.iter().map(|v| v * factor).collect(),
            self.env_coef * factor,
            self.env_ratio,
            self.env_exact,
        )
    }
}

/// `sigma_m = beta_1 ... beta_{m-1}` with the convention `sigma_1 = 1`.
fn sigma_of(beta: &SeqGen, m: usize) -> f64 {
    (1..m).map(|i| beta.value(i)).product()
}

/// `sum_{l >= from} rho^l w_l sigma_l` where `w` is an optional coefficient
/// sequence; returns the sum and its certified tail bound.
fn sigma_series(
    beta: &SeqGen,
    weights: Option<&SeqGen>,
    rho: f64,
    from: usize,
) -> Result<(f64, f64)> {
    let w_ratio = weights.map_or(1.0, |w| w.ratio_sup());
    let mut acc = 0.0f64;
    let mut sigma = 1.0f64; // sigma_1
    let mut pow = rho; // rho^1
    for ell in 1..MAX_TERMS {
        let w = weights.map_or(1.0, |s| s.value(ell));
        let term = pow * w * sigma;
        if ell >= from {
            acc += term;
        }
        // per-step growth of the terms beyond ell is at most rho * sup beta * w-ratio
        let q = rho * beta.sup_from(ell) * w_ratio;
        if q < 1.0 {
            let tail = term.abs() * q / (1.0 - q);
            if tail <= TAIL_STOP * (1.0 + acc.abs()) && ell >= from {
                return Ok((acc, tail + 1e-15 * (1.0 + acc.abs())));
            }
        }
        sigma *= beta.value(ell);
        pow *= rho;
        if sigma == 0.0 {
            return Ok((acc, 1e-15 * (1.0 + acc.abs())));
        }
    }
    Err(Error::Divergence { context: "sigma-weighted series did not settle".into() })
}

/// The sequence/scalar data controlling the iterate envelopes.
#[derive(Clone, Debug)]
pub struct BoundProfile {
    pub alpha_plus: SeqGen,
    pub alpha_minus: SeqGen,
    pub beta: SeqGen,
    pub delta: SeqGen,
    pub gamma: f64,
    pub kappa0: f64,
    pub c1: f64,
    pub c2: f64,
    pub eta: f64,
    pub sup_g_term: f64,
    pub label: String,
}

impl BoundProfile {
    /// Validates the structural constraints and derives `c1`, `eta`, `c2`.
    ///
    /// `sup_g_term` is an upper bound for `sup(g + 1/(g∘a))`; `c2` is taken
    /// as the smallest admissible value with a 10% margin.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        alpha_plus: SeqGen,
        alpha_minus: SeqGen,
        beta: SeqGen,
        delta: SeqGen,
        gamma: f64,
        kappa0: f64,
        sup_g_term: f64,
    ) -> Result<Self> {
        if !(kappa0 > 0.0 && kappa0 < 1.0) {
            return Err(Error::InvalidInput(format!("kappa0 = {kappa0} not in (0,1)")));
        }
        if beta.value(0) < 1.0 {
            return Err(Error::InvalidInput(format!(
                "beta_0 = {} must be >= 1",
                beta.value(0)
            )));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidInput("gamma must be nonnegative".into()));
        }
        let (c1, _) = alpha_plus.weighted_sum(1.0, 0)?;
        let (sum_minus, _) = alpha_minus.weighted_sum(1.0, 0)?;
        let (sigma_tail, _) = sigma_series(&beta, None, 1.0, 2)?;
        let eta = gamma + sum_minus + sigma_tail;
        let (delta_sigma, _) = sigma_series(&beta, Some(&delta), 1.0, 1)?;
        let c2 = 1.1 * (beta.value(0) + delta_sigma + sup_g_term);
        Ok(BoundProfile {
            alpha_plus,
            alpha_minus,
            beta,
            delta,
            gamma,
            kappa0,
            c1,
            c2,
            eta,
            sup_g_term,
            label: label.into(),
        })
    }

    /// Recomputes `eta` from the stored sequences (consistency check).
    pub fn recompute_eta(&self) -> Result<f64> {
        let (sum_minus, _) = self.alpha_minus.weighted_sum(1.0, 0)?;
        let (sigma_tail, _) = sigma_series(&self.beta, None, 1.0, 2)?;
        Ok(self.gamma + sum_minus + sigma_tail)
    }

    /// Adversarial mutation: halves the `alpha^+` row so the upper a-orbit
    /// hypothesis must fail on any genuine system.
    pub fn with_scaled_alpha_plus(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.alpha_plus = self.alpha_plus.scaled(factor);
        p.label = format!("{} (alpha+ x{factor})", self.label);
        p
    }
}

/// Values of the five comparison series at a fixed `rho`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesValues {
    pub rho: f64,
    pub s_sigma: f64,
    pub s_plus: f64,
    pub s_delta: f64,
    pub s_minus: f64,
    pub s_star: f64,
    pub truncation_bound: f64,
}

/// Evaluates the comparison series at `rho` in `[0, 1)`.
pub fn eval_series(profile: &BoundProfile, rho: f64) -> Result<SeriesValues> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain { x: rho, lo: 0.0, hi: 1.0 });
    }
    let (s_sigma, tb_sigma) = sigma_series(&profile.beta, None, rho, 1)?;
    let (s_delta, tb_delta) = sigma_series(&profile.beta, Some(&profile.delta), rho, 1)?;
    let (a_plus, tb_ap) = profile.alpha_plus.weighted_sum(rho, 1)?;
    let (a_minus, tb_am) = profile.alpha_minus.weighted_sum(rho, 1)?;
    let geom = profile.kappa0 * rho / (1.0 - rho);
    let s_plus = geom + a_plus;
    let s_minus = geom - a_minus;
    // S_* factorizes over (k, l): the l = 1 layer carries gamma, deeper layers
    // carry sigma_l; both reduce to S_sigma and the alpha+ sum
    let s_star = geom * s_sigma + a_plus * (profile.gamma * rho + (s_sigma - rho));
    let tb_star = geom * tb_sigma
        + tb_ap * (profile.gamma * rho + (s_sigma - rho) + tb_sigma)
        + a_plus * tb_sigma;
    let truncation_bound = [
        tb_sigma,
        tb_delta,
        tb_ap,
        tb_am,
        tb_star + 1e-15 * (1.0 + s_star.abs()),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(SeriesValues {
        rho,
        s_sigma,
        s_plus,
        s_delta,
        s_minus,
        s_star,
        truncation_bound,
    })
}

/// Envelope prefactor shared by all positive-`r` upper bounds.
fn upper_prefactor(profile: &BoundProfile, sv: &SeriesValues) -> f64 {
    sv.s_delta + profile.c2 * profile.c2 * sv.rho / (1.0 - sv.rho) * sv.s_sigma
}

/// Upper envelope for the weighted word sums with `r` runs of `b`.
pub fn vr_upper(profile: &BoundProfile, rho: f64, r: u32) -> Result<f64> {
    let sv = eval_series(profile, rho)?;
    Ok(vr_upper_from(profile, &sv, r))
}

pub fn vr_upper_from(profile: &BoundProfile, sv: &SeriesValues, r: u32) -> f64 {
    let beta0 = profile.beta.value(0);
    match r {
        0 => profile.c2 * profile.c2 / (1.0 - sv.rho),
        1 => beta0 * upper_prefactor(profile, sv),
        _ if r.is_multiple_of(2) => {
            upper_prefactor(profile, sv) * sv.s_star.powi((r as i32 - 2) / 2) * sv.s_plus
        }
        _ => {
            beta0
                * upper_prefactor(profile, sv)
                * sv.s_sigma
                * sv.s_star.powi((r as i32 - 3) / 2)
                * sv.s_plus
        }
    }
}

/// Lower envelope at a point with weight value `gx = g(x)`.
pub fn vr_lower(profile: &BoundProfile, rho: f64, r: u32, gx: f64) -> Result<f64> {
    if gx.is_nan() || gx <= 0.0 {
        return Err(Error::InvalidInput(format!("g(x) = {gx} must be positive")));
    }
    let sv = eval_series(profile, rho)?;
    Ok(vr_lower_from(profile, &sv, r, gx))
}

pub fn vr_lower_from(profile: &BoundProfile, sv: &SeriesValues, r: u32, gx: f64) -> f64 {
    gx / profile.c2 * (sv.rho * sv.s_minus).powi(r as i32) / (1.0 - sv.rho)
}

/// Certified two-sided bracket for the radius of convergence.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RadiusBracket {
    /// Largest tested `rho` with `S_*(rho) < 1`: the iterate series converges here.
    pub rho_lo: f64,
    /// Smallest tested `rho` with `rho S_-(rho) > 1`: the series diverges here.
    pub rho_hi: f64,
    pub kappa0: f64,
    pub eta: f64,
    /// `|rho_lo - (1 - kappa0)|` measured in units of `eta kappa0 + kappa0^2`.
    pub lo_deviation_constant: f64,
    pub hi_deviation_constant: f64,
    pub width_constant: f64,
}

/// Brackets the radius by solving `S_*(rho) = 1` and `rho S_-(rho) = 1`.
///
/// Bisection runs to an interval of width 1e-12 and is fully deterministic.
/// Failure to find a divergence point below 1 is reported, not assumed away.
pub fn radius_bracket(profile: &BoundProfile) -> Result<RadiusBracket> {
    let star = |rho: f64| -> Result<f64> { Ok(eval_series(profile, rho)?.s_star) };
    let diverge = |rho: f64| -> Result<f64> {
        let sv = eval_series(profile, rho)?;
        Ok(rho * sv.s_minus)
    };

    // S_* has nonnegative coefficients, so it increases in rho; plain bisection.
    let mut lo = 0.0f64;
    let mut hi = 1.0 - 1e-15;
    if star(hi)? < 1.0 {
        return Err(Error::BracketFailure {
            reason: format!("S_*(1-) = {} < 1; kappa0 too small to resolve", star(hi)?),
        });
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if star(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho_lo = lo;

    // rho S_-(rho) is not monotone in general: scan a deterministic grid for
    // the first crossing, then bisect inside that cell.
    let mut candidates: Vec<f64> = (1..1024).map(|i| i as f64 / 1024.0).collect();
    candidates.extend((10..=49).map(|j| 1.0 - 0.5f64.powi(j)));
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut prev = 0.0f64;
    let mut cell = None;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &rho in &candidates {
        let q = diverge(rho)?;
        if q > best.0 {
            best = (q, rho);
        }
        if q > 1.0 {
            cell = Some((prev, rho));
            break;
        }
        prev = rho;
    }
    let (mut lo, mut hi) = cell.ok_or_else(|| Error::BracketFailure {
        reason: format!(
            "rho S_-(rho) never exceeds 1 below rho = {:.12} (max {:.6} at rho = {:.6}); \
             kappa0 = {} too small relative to eta = {}",
            candidates.last().unwrap(),
            best.0,
            best.1,
            profile.kappa0,
            profile.eta
        ),
    })?;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if diverge(mid)? > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let rho_hi = hi;

    if rho_lo > rho_hi {
        return Err(Error::BracketFailure {
            reason: format!("inverted bracket: rho_lo = {rho_lo} > rho_hi = {rho_hi}"),
        });
    }
    let scale = profile.eta * profile.kappa0 + profile.kappa0 * profile.kappa0;
    Ok(RadiusBracket {
        rho_lo,
        rho_hi,
        kappa0: profile.kappa0,
        eta: profile.eta,
        lo_deviation_constant: (rho_lo - (1.0 - profile.kappa0)).abs() / scale,
        hi_deviation_constant: (rho_hi - (1.0 - profile.kappa0)).abs() / scale,
        width_constant: (rho_hi - rho_lo) / scale,
    })
}

/// Result of sweeping one hypothesis family over sampled orbits.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub condition: String,
    /// Worst observed `value - bound`; positive means violation.
    pub max_slack: f64,
    pub witness_index: u32,
    pub witness_x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_y: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub profile: String,
    pub n_samples: usize,
    pub k_max: u32,
    pub ell_max: u32,
    pub conditions: Vec<ConditionCheck>,
    pub notes: Vec<String>,
    pub pass: bool,
}

const HYP_TOL: f64 = 1e-12;

struct Worst {
    slack: f64,
    index: u32,
    x: f64,
    y: Option<f64>,
}

impl Worst {
    fn new() -> Self {
        Worst { slack: f64::NEG_INFINITY, index: 0, x: f64::NAN, y: None }
    }

    fn update(&mut self, slack: f64, index: u32, x: f64, y: Option<f64>) {
        if slack > self.slack {
            *self = Worst { slack, index, x, y };
        }
    }

    fn into_check(self, condition: &str) -> ConditionCheck {
        ConditionCheck {
            condition: condition.into(),
            max_slack: self.slack,
            witness_index: self.index,
            witness_x: self.x,
            witness_y: self.y,
            pass: self.slack <= HYP_TOL,
        }
    }
}

/// Sweeps the four orbit hypotheses over quasi-random samples.
///
/// Each condition is checked as a functional sandwich; the report carries the
/// worst slack and its witness. Violations are report content, never errors.
pub fn verify_hypotheses(
    sys: &CompositionSystem,
    profile: &BoundProfile,
    n_samples: usize,
    k_max: u32,
    ell_max: u32,
    seed: u64,
) -> Result<HypothesisReport> {
    if n_samples < 1000 {
        return Err(Error::InvalidInput(format!(
            "need at least 1000 samples, got {n_samples}"
        )));
    }
    let mut wx = WeylSequence::new(seed);
    let mut wy = WeylSequence::new_secondary(seed);
    let xs: Vec<f64> = (0..n_samples).map(|_| sys.sample_point(&mut wx)).collect();
    let ys: Vec<f64> = (0..n_samples).map(|_| sys.sample_point(&mut wy)).collect();

    let mut b_upper = Worst::new();
    let mut a_upper = Worst::new();
    let mut a_lower = Worst::new();
    let mut aba_upper = Worst::new();
    let mut g_ratio_b = Worst::new();
    let mut g_ratio_ba = Worst::new();

    for (&x, &y) in xs.iter().zip(&ys) {
        // kappa along b-orbits and the g-ratio along b^l x
        let gx = (sys.weight_g)(x);
        let mut point = x;
        for ell in 0..=ell_max {
            b_upper.update(
                (sys.kappa)(point) - profile.beta.value(ell as usize),
                ell,
                x,
                None,
            );
            g_ratio_b.update(
                gx / (sys.weight_g)(point) - profile.delta.value(ell as usize),
                ell,
                x,
                None,
            );
            point = (sys.map_b)(point);
        }
        // kappa along a-orbits, both sides
        let mut point = x;
        for k in 0..=k_max {
            let v = (sys.kappa)(point);
            a_upper.update(
                v - (profile.kappa0 + profile.alpha_plus.value(k as usize)),
                k,
                x,
                None,
            );
            a_lower.update(
                (profile.kappa0 - profile.alpha_minus.value(k as usize)) - v,
                k,
                x,
                None,
            );
            point = (sys.map_a)(point);
        }
        // kappa along a^k b a x
        let mut point = (sys.map_a)((sys.map_b)((sys.map_a)(x)));
        for k in 1..=k_max {
            aba_upper.update(
                (sys.kappa)(point)
                    - (profile.kappa0
                        + profile.gamma * profile.alpha_plus.value(k as usize)),
                k,
                x,
                None,
            );
            point = (sys.map_a)(point);
        }
        // g-ratio against b^l a y over point pairs
        let mut point = (sys.map_a)(y);
        for ell in 0..=ell_max {
            g_ratio_ba.update(
                gx / (sys.weight_g)(point) - profile.delta.value(ell as usize),
                ell,
                x,
                Some(y),
            );
            point = (sys.map_b)(point);
        }
    }

    let conditions = vec![
        b_upper.into_check("kappa-b-orbit-upper"),
        a_upper.into_check("kappa-a-orbit-upper"),
        a_lower.into_check("kappa-a-orbit-lower"),
        aba_upper.into_check("kappa-aba-orbit-upper"),
        g_ratio_b.into_check("g-ratio-b-orbit"),
        g_ratio_ba.into_check("g-ratio-ba-orbit"),
    ];
    let mut notes = Vec::new();
    let first_positive = (0..=k_max)
        .find(|&k| profile.kappa0 - profile.alpha_minus.value(k as usize) > 0.0);
    match first_positive {
        Some(0) => {}
        Some(k) => notes.push(format!(
            "kappa0 - alpha^-_k is positive only from k = {k}; smaller k give a \
             vacuous lower bound (kappa >= 0 still holds)"
        )),
        None => notes.push(format!(
            "kappa0 - alpha^-_k <= 0 for all k <= {k_max}; the lower bound is vacuous \
             in this range"
        )),
    }
    let pass = conditions.iter().all(|c| c.pass);
    Ok(HypothesisReport {
        profile: profile.label.clone(),
        n_samples,
        k_max,
        ell_max,
        conditions,
        notes,
        pass,
    })
}

/// One side of a word-weight bound comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundSide {
    pub bound: f64,
    /// `bound - u` for upper bounds, `u - bound` for lower bounds.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightBoundCheck {
    pub word_len: u32,
    pub b_count: u32,
    pub u: f64,
    pub upper: BoundSide,
    pub lower: BoundSide,
}

/// Checks the word-weight `u(w, x)` against its run-shape upper bound and the
/// universal lower bound.
pub fn check_weight_bounds(
    sys: &CompositionSystem,
    profile: &BoundProfile,
    w: &RunWord,
    x: f64,
) -> Result<WeightBoundCheck> {
    if w.is_empty() {
        return Err(Error::WordShape("weight bounds need a nonempty word".into()));
    }
    let u = word_weight(sys, w, x, WeightMethod::Recursive)?;

    let runs = w.runs();
    let r = runs.len();
    let kappa0 = profile.kappa0;
    let c2 = profile.c2;
    let upper_bound = if r == 0 {
        // pure a-run: only the g-ratio remains
        c2 * c2
    } else {
        let delta_k0k1 = if w.k0() > 0 {
            c2 * c2
        } else {
            profile.delta.value(runs[0] as usize)
        };
        let beta0 = profile.beta.value(0);
        // product over odd positions j of sigma_{k_j}, and over odd j <= r-3 of
        // (kappa0 + gamma_{k_{j+2}} alpha^+_{k_{j+1}})
        let mut pi = 1.0f64;
        let mut j = 1usize;
        while j <= r {
            pi *= sigma_of(&profile.beta, runs[j - 1] as usize);
            if j + 3 <= r {
                let gamma_next =
                    if runs[j + 1] == 1 { profile.gamma } else { 1.0 };
                pi *= kappa0 + gamma_next * profile.alpha_plus.value(runs[j] as usize);
            }
            j += 2;
        }
        if r == 1 {
            delta_k0k1 * beta0 * pi
        } else if r.is_multiple_of(2) {
            delta_k0k1 * pi * (kappa0 + profile.alpha_plus.value(runs[r - 1] as usize))
        } else {
            delta_k0k1
                * beta0
                * pi
                * (kappa0 + profile.alpha_plus.value(runs[r - 2] as usize))
        }
    };

    // clamped factors: the product inequality over nonnegative kappa values
    // needs nonnegative per-factor bounds, and max(0, .) keeps each valid
    let gaps = w.gap_lengths();
    let mut lower_bound = (sys.weight_g)(x) / c2;
    for &gap in &gaps[1..] {
        lower_bound *= (kappa0 - profile.alpha_minus.value(gap as usize)).max(0.0);
    }

    let tol = |b: f64| 1e-9 * b.abs().max(1.0);
    Ok(WeightBoundCheck {
        word_len: w.len(),
        b_count: w.count_b(),
        u,
        upper: BoundSide {
            bound: upper_bound,
            slack: upper_bound - u,
            pass: upper_bound - u >= -tol(upper_bound),
        },
        lower: BoundSide {
            bound: lower_bound,
            slack: u - lower_bound,
            pass: u - lower_bound >= -tol(lower_bound),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // alpha == 0, beta = (1, 0, 0, ...), delta == 0, gamma = 0: eta = 0 and
    // every series collapses to its pure geometric part
    fn degenerate_profile(kappa0: f64) -> BoundProfile {
        BoundProfile::new(
            "degenerate",
            SeqGen::zero(),
            SeqGen::zero(),
            SeqGen::tabulated(vec![1.0], 0.0, 0.5),
            SeqGen::zero(),
            0.0,
            kappa0,
            2.0,
        )
        .unwrap()
    }

    fn geometric_profile(kappa0: f64, a: f64, q: f64) -> BoundProfile {
        BoundProfile::new(
            "geometric",
            SeqGen::geometric(vec![], a, q),
            SeqGen::zero(),
            SeqGen::tabulated(vec![1.0], 0.0, 0.5),
            SeqGen::zero(),
            0.5,
            kappa0,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn degenerate_series_are_pure_geometric() {
        let p = degenerate_profile(0.3);
        assert_eq!(p.eta, 0.0);
        for &rho in &[0.1, 0.5, 0.9] {
            let sv = eval_series(&p, rho).unwrap();
            let expect = 0.3 * rho / (1.0 - rho);
            assert!((sv.s_plus - expect).abs() < 1e-13 * (1.0 + expect));
            assert!((sv.s_minus - expect).abs() < 1e-13 * (1.0 + expect));
        }
    }

    #[test]
    fn geometric_alpha_plus_closed_form() {
        let (a, q, kappa0) = (0.2, 0.6, 0.3);
        let p = geometric_profile(kappa0, a, q);
        for &rho in &[0.2, 0.5, 0.8] {
            let sv = eval_series(&p, rho).unwrap();
            let expect = kappa0 * rho / (1.0 - rho) + a * q * rho / (1.0 - q * rho);
            assert!(
                (sv.s_plus - expect).abs() < 1e-12 * (1.0 + expect),
                "rho = {rho}: {} vs {expect}",
                sv.s_plus
            );
        }
    }

    #[test]
    fn series_truncation_bound_is_tight() {
        let p = geometric_profile(0.3, 0.2, 0.6);
        for &rho in &[0.1, 0.6, 0.95] {
            let sv = eval_series(&p, rho).unwrap();
            for v in [sv.s_sigma, sv.s_plus, sv.s_delta, sv.s_star] {
                assert!(sv.truncation_bound <= 1e-12 * (1.0 + v.abs()) || v == 0.0);
                assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn vr_upper_cases() {
        let p = geometric_profile(0.3, 0.2, 0.6);
        let rho = 0.4;
        let sv = eval_series(&p, rho).unwrap();
        let v0 = vr_upper(&p, rho, 0).unwrap();
        assert!((v0 - p.c2 * p.c2 / (1.0 - rho)).abs() < 1e-12 * v0);
        let v2 = vr_upper(&p, rho, 2).unwrap();
        let prefactor = sv.s_delta + p.c2 * p.c2 * rho / (1.0 - rho) * sv.s_sigma;
        assert!((v2 - prefactor * sv.s_plus).abs() < 1e-12 * v2.abs().max(1.0));
        // consecutive even envelopes differ by exactly S_*
        let v4 = vr_upper(&p, rho, 4).unwrap();
        assert!((v4 / v2 - sv.s_star).abs() < 1e-12 * (1.0 + sv.s_star));
    }

    #[test]
    fn vr_lower_cases() {
        let p = degenerate_profile(0.4);
        let rho = 0.5;
        let sv = eval_series(&p, rho).unwrap();
        let gx = 1.7;
        let v0 = vr_lower(&p, rho, 0, gx).unwrap();
        assert!((v0 - gx / p.c2 / (1.0 - rho)).abs() < 1e-12 * v0);
        let v1 = vr_lower(&p, rho, 1, gx).unwrap();
        assert!((v1 / v0 - rho * sv.s_minus).abs() < 1e-12);
        // with alpha^- == 0 the bound is the pure geometric form
        let expect = gx / p.c2 * (0.4 * rho * rho / (1.0 - rho)).powi(3) / (1.0 - rho);
        let v3 = vr_lower(&p, rho, 3, gx).unwrap();
        assert!((v3 - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn degenerate_bracket_solves_quadratic() {
        // with eta = 0 both bracket equations reduce to kappa0 rho^2 = 1 - rho
        for &kappa0 in &[0.05, 0.2, 0.5] {
            let p = degenerate_profile(kappa0);
            let b = radius_bracket(&p).unwrap();
            let root = (-1.0 + (1.0 + 4.0 * kappa0).sqrt()) / (2.0 * kappa0);
            assert!((b.rho_lo - root).abs() < 1e-10, "lo {} vs {root}", b.rho_lo);
            assert!((b.rho_hi - root).abs() < 1e-10, "hi {} vs {root}", b.rho_hi);
            assert!(b.rho_lo <= b.rho_hi);
            // rho = 1 - kappa0 + 2 kappa0^2 + O(kappa0^3)
            assert!((b.rho_hi - (1.0 - kappa0)).abs() < 2.5 * kappa0 * kappa0);
        }
    }

    #[test]
    fn small_kappa_bracket_approaches_one() {
        let p = degenerate_profile(1e-6);
        let b = radius_bracket(&p).unwrap();
        assert!(b.rho_lo > 1.0 - 2e-6);
        assert!(b.rho_hi < 1.0);
    }

    #[test]
    fn bracket_is_bit_reproducible() {
        let p = geometric_profile(0.3, 0.2, 0.6);
        let a = radius_bracket(&p).unwrap();
        let b = radius_bracket(&p).unwrap();
        assert_eq!(a.rho_lo.to_bits(), b.rho_lo.to_bits());
        assert_eq!(a.rho_hi.to_bits(), b.rho_hi.to_bits());
    }

    #[test]
    fn eta_recomputation_matches() {
        let p = geometric_profile(0.3, 0.2, 0.6);
        assert!((p.recompute_eta().unwrap() - p.eta).abs() <= 1e-10);
    }

    #[test]
    fn majorant_inequality_for_s_star() {
        // S_*(rho) <= kappa0 (1 + eta) / (1 - rho) + c1 eta
        let p = BoundProfile::new(
            "majorant-check",
            SeqGen::geometric(vec![1.0, 1.0], 0.25, 0.5),
            SeqGen::geometric(vec![], 0.05, 0.5),
            SeqGen::tabulated(vec![1.0, 0.1, 0.01], 0.001, 0.5),
            SeqGen::constant(2.0),
            0.04,
            0.3,
            2.5,
        )
        .unwrap();
        for i in 1..20 {
            let rho = i as f64 / 20.0;
            let sv = eval_series(&p, rho).unwrap();
            let majorant = p.kappa0 * (1.0 + p.eta) / (1.0 - rho) + p.c1 * p.eta;
            assert!(sv.s_star <= majorant * (1.0 + 1e-12), "rho = {rho}");
        }
    }

    #[test]
    fn rejects_invalid_profiles() {
        assert!(BoundProfile::new(
            "bad beta0",
            SeqGen::zero(),
            SeqGen::zero(),
            SeqGen::tabulated(vec![0.5], 0.0, 0.5),
            SeqGen::zero(),
            0.0,
            0.3,
            2.0,
        )
        .is_err());
        assert!(BoundProfile::new(
            "bad kappa0",
            SeqGen::zero(),
            SeqGen::zero(),
            SeqGen::tabulated(vec![1.0], 0.0, 0.5),
            SeqGen::zero(),
            0.0,
            1.5,
            2.0,
        )
        .is_err());
    }

    #[test]
    fn eval_series_domain_errors() {
        let p = degenerate_profile(0.3);
        assert!(eval_series(&p, 1.0).is_err());
        assert!(eval_series(&p, -0.1).is_err());
    }
}
