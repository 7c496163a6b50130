//! Thue-Morse application: exact moments of the sign-pattern polynomials and
//! the composition-operator model of their growth.
//!
//! The polynomial `T_n(z) = prod_{r<n} (1 - z^{2^r})` has coefficients
//! `t(m) = (-1)^{popcount(m)}`; the `2k`-th power-moment `M_k(n)` of its
//! absolute value on the unit circle is the sum of squared coefficients of
//! `T_n^k`, an exact integer computed here by integer convolution.
//!
//! The growth model lives on `(0, 1]` with maps `a(x) = 1 - x/2`,
//! `b(x) = x/2`, the factor `S(x) = (2/sqrt 3) sin(pi x / 2)` with fixed
//! point `S(2/3) = 1`, the infinite product `G(x) = prod S(a^n x)`, and the
//! increasing ratio `xi(x) = G(x/2)/G(1 - x/2)`. All product evaluations
//! carry certified truncation bounds.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::bounds::{BoundProfile, SeqGen};
use crate::error::{Error, Result};
use crate::operator::{
    aitken_estimate, real_fn, CompositionSystem, Interval, IterationCaps, KeyScheme, RealFn,
    TwoBranchEngine,
};

/// Default cap on `k * 2^n` for exact moment computations.
pub const DEFAULT_MOMENT_CAP: u64 = 1 << 22;

/// Secondary-term decay base in the moment growth expansion.
pub const SECONDARY_DECAY: f64 = 0.506;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// `S(x) = (2/sqrt 3) sin(pi x / 2)`; equals 1 at the fixed point 2/3.
pub fn s_eval(x: f64) -> f64 {
    2.0 / SQRT_3 * (FRAC_PI_2 * x).sin()
}

pub fn map_a(x: f64) -> f64 {
    1.0 - x / 2.0
}

pub fn map_b(x: f64) -> f64 {
    x / 2.0
}

/// Closed form of the `n`-fold iterate of `a`:
/// `a^n(x) = 2/3 + (-1/2)^n (x - 2/3)`.
pub fn map_a_iter(n: u32, x: f64) -> f64 {
    2.0 / 3.0 + (-0.5f64).powi(n as i32) * (x - 2.0 / 3.0)
}

// Lipschitz bound for log S near the fixed point: for |y - 2/3| <= 2/3 * 2^-4
// the derivative (pi/2) cot(pi y / 2) is at most (pi/2) cot(pi 0.625/2) < 1.05,
// so 1.06 is a certified constant once the product is truncated at n >= 4.
const LOG_S_LIP: f64 = 1.06;

/// Partial product of `G(x) = prod_{n>=0} S(a^n x)` over `n < trunc_n`,
/// with a certified bound on the relative error of the omitted tail.
///
/// Since `|a^n x - 2/3| = |x - 2/3| 2^-n`, the omitted log-factors sum to at
/// most `t = LOG_S_LIP |x - 2/3| 2^(1-trunc_n)` and the relative error is at
/// most `exp(t) - 1 <= t e^t`.
pub fn g_eval(x: f64, trunc_n: u32) -> Result<(f64, f64)> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain { x, lo: 0.0, hi: 1.0 });
    }
    if trunc_n < 4 {
        return Err(Error::InvalidInput(format!(
            "trunc_n = {trunc_n} too small for the certified tail (need >= 4)"
        )));
    }
    let mut product = 1.0f64;
    let mut point = x;
    for _ in 0..trunc_n {
        product *= s_eval(point);
        point = map_a(point);
    }
    let t = LOG_S_LIP * (x - 2.0 / 3.0).abs() * 0.5f64.powi(trunc_n as i32 - 1);
    Ok((product, t * t.exp()))
}

// Double-double accumulation for the certified evaluations: the error of the
// factor products is then dominated by the per-factor sin roundoff alone.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn one() -> Self {
        Dd { hi: 1.0, lo: 0.0 }
    }

    fn mul(self, y: f64) -> Self {
        let p = self.hi * y;
        let e = self.hi.mul_add(y, -p);
        let lo = self.lo.mul_add(y, e);
        let s = p + lo;
        Dd { hi: s, lo: lo - (s - p) }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

// relative allowance for factor roundoff in certified intervals; each factor
// is one library sin plus one multiply, both faithfully rounded
const FLOAT_SLACK: f64 = 1e-12;

fn g_eval_dd(x: f64, trunc_n: u32) -> Result<(f64, f64)> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain { x, lo: 0.0, hi: 1.0 });
    }
    let mut product = Dd::one();
    let mut point = x;
    for _ in 0..trunc_n {
        product = product.mul(s_eval(point));
        point = map_a(point);
    }
    let t = LOG_S_LIP * (x - 2.0 / 3.0).abs() * 0.5f64.powi(trunc_n as i32 - 1);
    Ok((product.value(), t * t.exp()))
}

/// `xi(x) = G(x/2) / G(1 - x/2)`, extended by `xi(0) = 0`.
///
/// The truncation depth is chosen from `precision` so the certified relative
/// truncation error stays below it.
pub fn xi_eval(x: f64, precision: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "xi is defined on [0, 1]");
    if x == 0.0 {
        return 0.0;
    }
    let trunc = trunc_for(precision);
    let (num, _) = g_eval(x / 2.0, trunc).expect("x/2 in (0, 1]");
    let (den, _) = g_eval(1.0 - x / 2.0, trunc).expect("1 - x/2 in (0, 1]");
    num / den
}

fn trunc_for(precision: f64) -> u32 {
    let p = precision.clamp(1e-15, 1e-1);
    // combined relative tail of the two products is below 2.2 * 2^(1-N)
    ((4.4 / p).log2().ceil() as u32).clamp(11, 60)
}

/// Certified enclosure of `xi(x)` from products truncated at `trunc_n`.
pub fn xi_certified(x: f64, trunc_n: u32) -> Result<(f64, f64)> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain { x, lo: 0.0, hi: 1.0 });
    }
    let (num, t_num) = g_eval_dd(x / 2.0, trunc_n)?;
    let (den, t_den) = g_eval_dd(1.0 - x / 2.0, trunc_n)?;
    let num_lo = num * (1.0 - t_num - FLOAT_SLACK);
    let num_hi = num * (1.0 + t_num + FLOAT_SLACK);
    let den_lo = den * (1.0 - t_den - FLOAT_SLACK);
    let den_hi = den * (1.0 + t_den + FLOAT_SLACK);
    if den_lo.is_nan() || den_lo <= 0.0 {
        return Err(Error::Numeric { context: format!("xi denominator at x = {x}") });
    }
    Ok((num_lo / den_hi, num_hi / den_lo))
}

/// `kappa(x) = xi(x)^tau`.
pub fn kappa_eval(x: f64, tau: u32) -> f64 {
    xi_eval(x, 1e-13).powi(tau as i32)
}

/// The sine-product constant `delta_1 = prod_{n>=1} (2/sqrt 3)
/// sin(pi/3 (1 + (-1)^n / 2^n))`, truncated so the certified tail is below
/// `precision`.
///
/// For `n >= 1` the factor argument stays in `[pi/6, pi/2]` where `cot` is at
/// most `sqrt 3`, so the omitted log-factors are below
/// `sqrt 3 (pi/3) 2^(1-N)`.
pub fn delta1_const(precision: f64) -> f64 {
    let p = precision.clamp(1e-15, 1e-2);
    let trunc = ((2.0 * SQRT_3 * PI / 3.0 * 2.0 / p).log2().ceil() as u32).clamp(8, 64);
    let mut product = Dd::one();
    let mut sign = -1.0f64;
    let mut pow2 = 0.5f64;
    for _ in 1..=trunc {
        product = product.mul(2.0 / SQRT_3 * (PI / 3.0 * (1.0 + sign * pow2)).sin());
        sign = -sign;
        pow2 *= 0.5;
    }
    product.value()
}

fn cot(x: f64) -> f64 {
    1.0 / x.tan()
}

fn h_term(n: u32, x: f64) -> f64 {
    let scale = FRAC_PI_2 * (-0.5f64).powi(n as i32);
    cot(PI / 3.0 + scale * (x / 2.0 - 2.0 / 3.0)) + cot(PI / 3.0 + scale * (1.0 / 3.0 - x / 2.0))
}

/// Logarithmic derivative `xi'/xi (x) = (pi/4) sum (-1/2)^n h_n(x)`,
/// truncated at `trunc_n` terms (tail below `pi 2^-trunc_n`).
pub fn xi_log_derivative(x: f64, trunc_n: u32) -> f64 {
    assert!(x > 0.0 && x <= 1.0, "the n = 0 term needs x > 0");
    let mut sum = 0.0f64;
    let mut w = 1.0f64;
    for n in 0..trunc_n {
        sum += w * h_term(n, x);
        w *= -0.5;
    }
    PI / 4.0 * sum
}

/// Cotangent gap `h_{2n}(1) - h_{2n+1}(0)`; positive for every `n`, which is
/// what makes `xi` strictly increasing.
pub fn h_gap(n: u32) -> f64 {
    let q = 0.25f64.powi(n as i32);
    cot(PI / 3.0 - PI / 12.0 * q) - cot(PI / 3.0 + PI / 6.0 * q)
}

// Grid-derived constants for the profile; 5% safety factor on every estimate.
struct TmGrid {
    xi_deriv_sup: f64,
    vanish_c: f64,
    xi_over_x_sup: f64,
    g_pairs: Vec<(f64, f64)>, // (G(x), G(a x)) on the estimation grid
}

static TM_GRID: OnceLock<TmGrid> = OnceLock::new();

fn tm_grid() -> &'static TmGrid {
    TM_GRID.get_or_init(|| {
        let n = 1 << 14;
        let mut xi_deriv_sup = 0.0f64;
        let mut g_over_x_min = f64::INFINITY;
        let mut g_over_x_max = 0.0f64;
        let mut xi_over_x_sup = 0.0f64;
        let mut g_pairs = Vec::with_capacity(n);
        for i in 1..=n {
            let x = i as f64 / n as f64;
            let xi = xi_eval(x, 1e-13);
            let deriv = xi * xi_log_derivative(x, 50);
            xi_deriv_sup = xi_deriv_sup.max(deriv.abs());
            xi_over_x_sup = xi_over_x_sup.max(xi / x);
            let (g, _) = g_eval(x, 46).unwrap();
            g_over_x_min = g_over_x_min.min(g / x);
            g_over_x_max = g_over_x_max.max(g / x);
            g_pairs.push((g, g_eval(map_a(x), 46).unwrap().0));
        }
        TmGrid {
            xi_deriv_sup: xi_deriv_sup * 1.05,
            // c with (c x) <= G(x) <= x / c, shrunk 5% for safety
            vanish_c: g_over_x_min.min(1.0 / g_over_x_max) / 1.05,
            xi_over_x_sup: xi_over_x_sup * 1.05,
            g_pairs,
        }
    })
}

/// Sign of the binary digit sum: `+1` when `m` has even popcount.
pub fn tm_sign(m: u64) -> i32 {
    if m.count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Dense integer polynomial with exact big-integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    pub coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn one() -> Self {
        IntPolynomial { coeffs: vec![BigInt::from(1)] }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPolynomial { coeffs: coeffs.iter().map(|&c| BigInt::from(c)).collect() }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Full convolution product.
    pub fn mul(&self, other: &IntPolynomial) -> IntPolynomial {
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        IntPolynomial { coeffs: out }
    }

    /// Multiplication by `(1 - z^h)^k`: a sparse convolution with the `k+1`
    /// signed binomial terms.
    pub fn mul_binomial_power(&self, h: usize, k: u32) -> IntPolynomial {
        let binomials = binomial_row(k);
        let mut out = vec![BigInt::zero(); self.coeffs.len() + h * k as usize];
        for (i, c) in binomials.iter().enumerate() {
            let coef = if i % 2 == 0 { c.clone() } else { -c.clone() };
            if coef.is_zero() {
                continue;
            }
            for (j, v) in self.coeffs.iter().enumerate() {
                if !v.is_zero() {
                    out[j + i * h] += &coef * v;
                }
            }
        }
        IntPolynomial { coeffs: out }
    }

    /// Exact `sum c_j^2`; this is the circle-average of the squared modulus.
    pub fn l2_mass(&self) -> BigInt {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

pub(crate) fn binomial_row(k: u32) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(k as usize + 1);
    let mut c: u128 = 1;
    for i in 0..=k as u128 {
        row.push(BigInt::from(c));
        if i < k as u128 {
            c = c * (k as u128 - i) / (i + 1);
        }
    }
    row
}

/// `T_n` expanded from the sign table `t(0), ..., t(2^n - 1)`.
pub fn sign_polynomial(n: u32) -> IntPolynomial {
    IntPolynomial {
        coeffs: (0..1u64 << n).map(|m| BigInt::from(tm_sign(m))).collect(),
    }
}

fn check_moment_cap(k: u32, n: u32, cap: u64) -> Result<()> {
    if n >= 63 {
        return Err(Error::Capacity { what: "moment level n", value: n as u64, cap: 62 });
    }
    let size = (k as u64).saturating_mul(1u64 << n);
    if size > cap {
        return Err(Error::Capacity { what: "moment size k * 2^n", value: size, cap });
    }
    Ok(())
}

/// Exact moment `M_k(n)`: sum of squared coefficients of `T_n^k`, computed by
/// repeated exact convolution with the factors `(1 - z^{2^r})^k`.
pub fn tm_moment_exact(k: u32, n: u32, cap: u64) -> Result<BigInt> {
    Ok(tm_moment_table(k, n, cap)?.pop().expect("table nonempty"))
}

/// Moments `M_k(0), ..., M_k(n_max)` from one incremental product sweep.
pub fn tm_moment_table(k: u32, n_max: u32, cap: u64) -> Result<Vec<BigInt>> {
    check_moment_cap(k, n_max, cap)?;
    let mut poly = IntPolynomial::one();
    let mut table = vec![poly.l2_mass()];
    for r in 0..n_max {
        poly = poly.mul_binomial_power(1usize << r, k);
        table.push(poly.l2_mass());
    }
    Ok(table)
}

/// Aitken-accelerated estimate of the moment growth rate `M_k(n+1)/M_k(n)`.
pub fn rho_estimate(k: u32, n_max: u32, cap: u64) -> Result<(f64, f64)> {
    if n_max < 8 {
        return Err(Error::InvalidInput(format!("need n_max >= 8, got {n_max}")));
    }
    let table = tm_moment_table(k, n_max, cap)?;
    let ratios: Vec<f64> = table
        .windows(2)
        .map(|w| {
            let num = w[1].to_f64().unwrap_or(f64::INFINITY);
            let den = w[0].to_f64().unwrap_or(f64::INFINITY);
            num / den
        })
        .collect();
    if ratios.iter().any(|r| !r.is_finite()) {
        return Err(Error::Numeric { context: "moment ratio overflow".into() });
    }
    Ok(aitken_estimate(&ratios))
}

/// Two-term growth prediction `(3^k / 2)(1 + delta_1^{2k})` with the
/// `(3^k / 2) 0.506^{2k}` remainder scale attached.
pub fn rho_predicted(k: u32) -> (f64, f64) {
    let delta1 = delta1_const(1e-12);
    let main = 0.5 * 3.0f64.powi(k as i32);
    (
        main * (1.0 + delta1.powi(2 * k as i32)),
        main * SECONDARY_DECAY.powi(2 * k as i32),
    )
}

/// Coarse a-priori bound `(3^k + 4^{2k/3}) / 2` on the growth constant.
pub fn prior_upper(k: u32) -> f64 {
    0.5 * (3.0f64.powi(k as i32) + 4.0f64.powf(2.0 * k as f64 / 3.0))
}

/// Headline constants of the moment-growth expansion.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct TmConstants {
    pub delta1: f64,
    pub secondary_decay: f64,
}

impl TmConstants {
    pub fn compute(precision: f64) -> Self {
        TmConstants {
            delta1: delta1_const(precision),
            secondary_decay: SECONDARY_DECAY,
        }
    }

    pub fn prior_upper(&self, k: u32) -> f64 {
        prior_upper(k)
    }
}

/// One application of the moment transfer operator
/// `P_k[f](x) = (2 sin(pi x/2))^{2k} f(x/2)/2 + (2 cos(pi x/2))^{2k} f((x+1)/2)/2`.
pub fn apply_p_k(k: u32, f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let s = (2.0 * (FRAC_PI_2 * x).sin()).powi(2 * k as i32);
    let c = (2.0 * (FRAC_PI_2 * x).cos()).powi(2 * k as i32);
    0.5 * s * f(x / 2.0) + 0.5 * c * f((x + 1.0) / 2.0)
}

/// One application of the desymmetrized operator
/// `U_tau[f](x) = S(x)^tau (f(1 - x/2) + f(x/2))`.
pub fn apply_u_tau(tau: u32, f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    s_eval(x).powi(tau as i32) * (f(map_a(x)) + f(map_b(x)))
}

/// `P_k^r[f](x)` by memoized recursion over the dyadic point tree.
pub fn p_iterate(k: u32, r: u32, x: f64, f: &RealFn) -> Result<f64> {
    let caps = IterationCaps::default();
    if r > caps.direct_r {
        return Err(Error::Capacity { what: "P iteration depth", value: r as u64, cap: caps.direct_r as u64 });
    }
    let map_half = real_fn(|x| x / 2.0);
    let map_shift = real_fn(|x| (x + 1.0) / 2.0);
    let weight_half = real_fn(move |x| 0.5 * (2.0 * (FRAC_PI_2 * x).sin()).powi(2 * k as i32));
    let weight_shift = real_fn(move |x| 0.5 * (2.0 * (FRAC_PI_2 * x).cos()).powi(2 * k as i32));
    let mut engine = TwoBranchEngine::new(
        &map_half,
        &map_shift,
        &weight_half,
        &weight_shift,
        f,
        KeyScheme::DyadicShift,
        caps.memo_nodes,
    );
    let key = engine.root_key(x);
    engine.eval(r, x, key)
}

/// `U_tau^r[f](x)` by memoized recursion (branch weights are both `S^tau`).
pub fn u_iterate(tau: u32, r: u32, x: f64, f: &RealFn) -> Result<f64> {
    let caps = IterationCaps::default();
    if r > caps.direct_r {
        return Err(Error::Capacity { what: "U iteration depth", value: r as u64, cap: caps.direct_r as u64 });
    }
    let a = real_fn(map_a);
    let b = real_fn(map_b);
    let weight = real_fn(move |x| s_eval(x).powi(tau as i32));
    let mut engine =
        TwoBranchEngine::new(&a, &b, &weight, &weight, f, KeyScheme::DyadicReflect, caps.memo_nodes);
    let key = engine.root_key(x);
    engine.eval(r, x, key)
}

/// Sup-norm of `P_k^r[1]` on a uniform grid over `[0, 1]`.
pub fn p_norm(k: u32, r: u32, grid_points: usize) -> Result<f64> {
    let one = real_fn(|_| 1.0);
    let mut best = 0.0f64;
    for i in 0..=grid_points {
        let x = i as f64 / grid_points as f64;
        best = best.max(p_iterate(k, r, x, &one)?.abs());
    }
    Ok(best)
}

/// Sup-norm of `U_tau^r[1]` on a uniform grid over `[0, 1]`.
pub fn u_norm(tau: u32, r: u32, grid_points: usize) -> Result<f64> {
    let one = real_fn(|_| 1.0);
    let mut best = 0.0f64;
    for i in 0..=grid_points {
        let x = i as f64 / grid_points as f64;
        best = best.max(u_iterate(tau, r, x, &one)?.abs());
    }
    Ok(best)
}

/// The composition system on `(0, 1]` with `kappa = xi^tau` and `g = G^tau`.
///
/// Both conjugated branch weights collapse to `S(x)^tau`: the product
/// relation `G(x) = S(x) G(a x)` gives `g/(g∘a) = S^tau`, and combining it
/// with the definition of `xi` gives `kappa·g/(g∘b) = S^tau` as well, so the
/// weights extend continuously to the closed interval.
pub fn tm_system(tau: u32) -> Result<CompositionSystem> {
    let kappa = real_fn(move |x| kappa_eval(x, tau));
    let g = real_fn(move |x| {
        if x > 0.0 {
            g_eval(x, 46).map(|(v, _)| v.powi(tau as i32)).unwrap_or(0.0)
        } else {
            0.0
        }
    });
    let weight = real_fn(move |x| s_eval(x).powi(tau as i32));
    let kappa0 = kappa_eval(2.0 / 3.0, tau);
    CompositionSystem::new(
        real_fn(map_a),
        real_fn(map_b),
        kappa,
        g,
        weight.clone(),
        weight,
        2.0 / 3.0,
        kappa0,
        Interval::left_open(0.0, 1.0),
        KeyScheme::DyadicReflect,
    )
}

/// System plus bound profile for the growth model at weight exponent `tau`.
///
/// The derivative sup and the order-one vanishing constant of `G` are grid
/// estimates carrying a 5% safety factor; everything else is closed-form.
pub fn build_tm_profile(tau: u32) -> Result<(CompositionSystem, BoundProfile)> {
    if tau < 2 {
        return Err(Error::InvalidInput(format!("profile needs tau >= 2, got {tau}")));
    }
    let sys = tm_system(tau)?;
    let grid = tm_grid();
    let ti = tau as i32;
    let deriv = grid.xi_deriv_sup;
    let xi56 = xi_eval(5.0 / 6.0, 1e-13);
    let xi34 = xi_eval(3.0 / 4.0, 1e-13);
    let xi78 = xi_eval(7.0 / 8.0, 1e-13);

    // alpha^-_k = (2/3) 2^-k ||xi'|| tau xi(5/6)^(tau-1)
    let alpha_minus = SeqGen::geometric(
        vec![],
        2.0 / 3.0 * deriv * tau as f64 * xi56.powi(ti - 1),
        0.5,
    );
    // alpha^+_k: 1 for k <= 1, then 2^-k max(1, (2/3) ||xi'|| tau xi(3/4)^(tau-1))
    let m_plus = (2.0 / 3.0 * deriv * tau as f64 * xi34.powi(ti - 1)).max(1.0);
    let alpha_plus = SeqGen::geometric(vec![1.0, 1.0], m_plus * 0.25, 0.5);
    // beta_l = xi(2^-l)^tau, with the envelope (K 2^-l)^tau from xi(x) <= K x
    let mut beta_head = Vec::new();
    for ell in 0..256 {
        let v = xi_eval(0.5f64.powi(ell), 1e-13).powi(ti);
        beta_head.push(v);
        if v < 1e-280 {
            break;
        }
    }
    let env_start = beta_head.len() as i32;
    let beta = SeqGen::tabulated(
        beta_head,
        (grid.xi_over_x_sup * 0.5f64.powi(env_start)).powi(ti),
        0.5f64.powi(ti),
    );
    // delta_l = c^-2tau 2^(1 + (l+1) tau): grows geometrically with ratio 2^tau
    let delta = SeqGen::geometric(
        vec![],
        grid.vanish_c.powi(-2 * ti) * 2.0f64.powi(1 + ti),
        2.0f64.powi(ti),
    );
    let gamma = 2.0 / 3.0 * deriv * tau as f64 * xi78.powi(ti - 1);
    let sup_g_term = grid
        .g_pairs
        .iter()
        .map(|&(g, ga)| g.powi(ti) + ga.powi(-ti))
        .fold(0.0, f64::max)
        * 1.05;
    let profile = BoundProfile::new(
        format!("thue-morse tau={tau}"),
        alpha_plus,
        alpha_minus,
        beta,
        delta,
        gamma,
        sys.kappa0,
        sup_g_term,
    )?;
    Ok((sys, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SplitMix64;

    #[test]
    fn s_is_one_at_fixed_point() {
        assert!((s_eval(2.0 / 3.0) - 1.0).abs() < 1e-15);
        assert!((map_a(2.0 / 3.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_iterate_matches_iteration() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..1000 {
            let x = rng.next_unit();
            let mut y = x;
            for _ in 0..5 {
                y = map_a(y);
            }
            assert!((map_a_iter(5, x) - y).abs() <= 1e-14);
        }
    }

    #[test]
    fn g_at_fixed_point_is_one_with_zero_tail() {
        let (v, tail) = g_eval(2.0 / 3.0, 12).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert_eq!(tail, 0.0);
    }

    #[test]
    fn g_satisfies_product_shift() {
        // G(x) = S(x) G(a x) on a grid
        for i in 1..=64 {
            let x = i as f64 / 64.0;
            let (gx, _) = g_eval(x, 50).unwrap();
            let (gax, _) = g_eval(map_a(x), 50).unwrap();
            assert!((gx - s_eval(x) * gax).abs() <= 1e-12 * gx.abs().max(1.0));
        }
    }

    #[test]
    fn g_vanishes_at_first_order() {
        // G(2^-j)/2^-j approaches a finite nonzero limit
        let ratio = |j: i32| {
            let x = 0.5f64.powi(j);
            g_eval(x, 55).unwrap().0 / x
        };
        let limit = ratio(40);
        assert!(limit > 0.5 && limit < 3.0);
        for j in 20..40 {
            assert!((ratio(j) - limit).abs() < 1e-4);
        }
    }

    #[test]
    fn g_rejects_zero_and_low_truncation() {
        assert!(g_eval(0.0, 12).is_err());
        assert!(g_eval(0.5, 3).is_err());
    }

    #[test]
    fn g_tail_bound_is_honest() {
        // doubling the truncation moves the value by less than the old bound
        for i in 1..=16 {
            let x = i as f64 / 16.0;
            let (coarse, tail) = g_eval(x, 11).unwrap();
            let (fine, _) = g_eval(x, 50).unwrap();
            assert!((coarse - fine).abs() <= tail * fine.abs() + 1e-15, "x = {x}");
        }
    }

    #[test]
    fn xi_endpoint_values() {
        assert_eq!(xi_eval(0.0, 1e-12), 0.0);
        assert!((xi_eval(1.0, 1e-12) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn xi_monotone_on_grid() {
        let mut prev = -1.0;
        for i in 0..=10_000 {
            let v = xi_eval(i as f64 / 10_000.0, 1e-11);
            assert!(v > prev, "xi not increasing at i = {i}");
            prev = v;
        }
    }

    #[test]
    fn xi_log_derivative_positive_and_matches_finite_difference() {
        for i in 1..=1000 {
            let x = i as f64 / 1000.0;
            assert!(xi_log_derivative(x, 50) > 0.0);
        }
        let h = 1e-6;
        for &x in &[0.2, 0.5, 0.8] {
            let fd = ((xi_eval(x + h, 1e-13)).ln() - (xi_eval(x - h, 1e-13)).ln()) / (2.0 * h);
            let an = xi_log_derivative(x, 50);
            assert!((fd - an).abs() < 1e-6, "x = {x}: {fd} vs {an}");
        }
    }

    #[test]
    fn cotangent_gaps_positive() {
        for n in 0..=10 {
            assert!(h_gap(n) > 0.0);
        }
    }

    #[test]
    fn delta1_value_and_first_factor() {
        let d = delta1_const(1e-12);
        assert!((d - 0.6027).abs() < 5e-4);
        // n = 1 factor is (2/sqrt3) sin(pi/6) = 1/sqrt3
        let f1 = 2.0 / SQRT_3 * (PI / 3.0 * (1.0 - 0.5)).sin();
        assert!((f1 - 1.0 / SQRT_3).abs() < 1e-15);
    }

    #[test]
    fn delta1_equals_xi_at_two_thirds() {
        // the a-orbit of 1/3 reproduces the sine-product factors exactly
        let d = delta1_const(1e-12);
        let xi = xi_eval(2.0 / 3.0, 1e-13);
        assert!((d - xi).abs() < 1e-9, "{d} vs {xi}");
    }

    #[test]
    fn tm_sign_basics() {
        assert_eq!(tm_sign(0), 1);
        assert_eq!(tm_sign(3), 1);
        assert_eq!(tm_sign(1), -1);
        let signs: Vec<i32> = (0..8).map(tm_sign).collect();
        assert_eq!(signs, vec![1, -1, -1, 1, -1, 1, 1, -1]);
    }

    #[test]
    fn product_expansion_matches_sign_table() {
        for n in 0..=6u32 {
            let mut p = IntPolynomial::one();
            for r in 0..n {
                p = p.mul_binomial_power(1usize << r, 1);
            }
            assert_eq!(p, sign_polynomial(n));
        }
    }

    #[test]
    fn moment_anchors() {
        // M_k(0) = 1
        for k in 1..=4 {
            assert_eq!(tm_moment_exact(k, 0, DEFAULT_MOMENT_CAP).unwrap(), BigInt::from(1));
        }
        // Parseval: M_1(n) = 2^n
        let table = tm_moment_table(1, 16, DEFAULT_MOMENT_CAP).unwrap();
        for (n, v) in table.iter().enumerate() {
            assert_eq!(*v, BigInt::from(1u64 << n));
        }
    }

    #[test]
    fn moment_m2_2_matches_convolution_oracle() {
        // brute force: expand T_2 from the sign table and square it
        let t2 = sign_polynomial(2);
        let oracle = t2.mul(&t2).l2_mass();
        assert_eq!(oracle, BigInt::from(28));
        assert_eq!(tm_moment_exact(2, 2, DEFAULT_MOMENT_CAP).unwrap(), BigInt::from(28));
    }

    #[test]
    fn moments_match_full_convolution_oracle() {
        for k in 1..=3u32 {
            for n in 0..=5u32 {
                let mut oracle = IntPolynomial::one();
                let tn = sign_polynomial(n);
                for _ in 0..k {
                    oracle = oracle.mul(&tn);
                }
                assert_eq!(
                    oracle.l2_mass(),
                    tm_moment_exact(k, n, DEFAULT_MOMENT_CAP).unwrap(),
                    "k={k} n={n}"
                );
            }
        }
    }

    #[test]
    fn moment_cap_is_enforced() {
        assert!(tm_moment_exact(1, 30, DEFAULT_MOMENT_CAP).is_err());
    }

    #[test]
    fn moments_log_convex() {
        // M_{k+1} M_{k-1} >= M_k^2, exactly
        let cap = DEFAULT_MOMENT_CAP;
        let tables: Vec<Vec<BigInt>> =
            (0..=4).map(|k| tm_moment_table(k, 10, cap).unwrap()).collect();
        for k in 1..=3usize {
            for n in 0..=10usize {
                let lhs = &tables[k + 1][n] * &tables[k - 1][n];
                let rhs = &tables[k][n] * &tables[k][n];
                assert!(lhs >= rhs, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn rho_estimate_k1_is_exactly_two() {
        let (est, band) = rho_estimate(1, 12, DEFAULT_MOMENT_CAP).unwrap();
        assert!((est - 2.0).abs() < 1e-12);
        assert!(band.abs() < 1e-12);
    }

    #[test]
    fn desymmetrization_identity_single_step() {
        // P_k[f + f*](x) = (3^k/2)(U_{2k}[f](x) + U_{2k}[f](1-x)) with f = id
        let id = |t: f64| t;
        let mut rng = SplitMix64::new(9);
        for k in 1..=3u32 {
            for _ in 0..100 {
                let x = rng.next_unit();
                let lhs = apply_p_k(k, &|t| id(t) + id(1.0 - t), x);
                let scale = 3.0f64.powi(k as i32) / 2.0;
                let rhs = scale * (apply_u_tau(2 * k, &id, x) + apply_u_tau(2 * k, &id, 1.0 - x));
                assert!(
                    (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0),
                    "k={k} x={x}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn desymmetrization_identity_iterated() {
        let id = real_fn(|t: f64| t);
        let one = real_fn(|t: f64| {
            let _ = t;
            1.0
        });
        for k in 1..=2u32 {
            for r in 1..=8u32 {
                for i in 0..=20 {
                    let x = i as f64 / 20.0;
                    let lhs = p_iterate(k, r, x, &one).unwrap();
                    let scale = (3.0f64.powi(k as i32) / 2.0).powi(r as i32);
                    let rhs = scale
                        * (u_iterate(2 * k, r, x, &id).unwrap()
                            + u_iterate(2 * k, r, 1.0 - x, &id).unwrap());
                    assert!(
                        (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0),
                        "k={k} r={r} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn positivity_sandwich_for_norms() {
        // the desymmetrization identity forces the (3^k/2)^r scale between
        // the two operators
        for k in 1..=2u32 {
            for r in 1..=10u32 {
                let pn = p_norm(k, r, 64).unwrap();
                let un = (3.0f64.powi(k as i32) / 2.0).powi(r as i32) * u_norm(2 * k, r, 64).unwrap();
                assert!(0.5 * un <= pn * (1.0 + 1e-12), "k={k} r={r}");
                assert!(pn <= un * (1.0 + 1e-12), "k={k} r={r}");
            }
        }
    }

    #[test]
    fn profile_beta0_is_one_and_eta_decays() {
        let (_, p6) = build_tm_profile(6).unwrap();
        assert_eq!(p6.beta.value(0), 1.0);
        let (_, p12) = build_tm_profile(12).unwrap();
        // eta = O(tau xi(7/8)^tau): the ratio eta / (tau 0.835^tau) stays bounded
        for (tau, p) in [(6u32, &p6), (12u32, &p12)] {
            let envelope = tau as f64 * 0.835f64.powi(tau as i32);
            assert!(p.eta <= 30.0 * envelope, "tau={tau}: eta={} env={envelope}", p.eta);
        }
        assert!(p12.eta < p6.eta);
    }

    #[test]
    fn certified_xi_brackets_are_consistent() {
        for &x in &[0.25, 0.5, 0.875] {
            let (lo, hi) = xi_certified(x, 11).unwrap();
            let fine = xi_eval(x, 1e-13);
            assert!(lo <= fine && fine <= hi, "x = {x}: [{lo}, {hi}] vs {fine}");
            assert!(hi - lo < 1e-3);
        }
    }
}
