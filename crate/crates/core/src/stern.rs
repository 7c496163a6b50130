//! Stern sequence application: exact diatomic moments, the integer transfer
//! matrix of the moment operator, its Perron eigenvalue, and the matrix-word
//! rewriting that ties operator iterates to sums over odd indices.
//!
//! The moment order is written `tau` throughout. The growth model lives on
//! `[0, 1]` with the Farey-type maps `a(x) = 1/(1+x)`, `b(x) = x/(1+x)`,
//! weight `g(x) = (phi + x)^tau` and perturbation `kappa = xi^tau` for
//! `xi(x) = (1 + phi x)/(phi + x)`; the conjugated branch weights collapse to
//! `((1+x)/phi)^tau` on both branches.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::bounds::{BoundProfile, SeqGen};
use crate::error::{Error, Result};
use crate::operator::{real_fn, CompositionSystem, Interval, KeyScheme};
use crate::thue_morse::binomial_row;

pub const PHI: f64 = 1.618_033_988_749_895;

/// Largest table level accepted by default (`2^(N+1)` sequence entries).
pub const DEFAULT_LEVEL_CAP: u32 = 24;

/// Default cap on the transfer-matrix order for eigenvalue extraction.
pub const DEFAULT_EIGEN_CAP: u32 = 64;

/// Secondary-term decay base in the eigenvalue expansion.
pub const SECONDARY_DECAY: f64 = 0.837;

/// `xi(x) = (1 + phi x) / (phi + x)`, increasing from `1/phi` to 1 on [0, 1].
pub fn xi_eval(x: f64) -> f64 {
    (1.0 + PHI * x) / (PHI + x)
}

pub fn map_a(x: f64) -> f64 {
    1.0 / (1.0 + x)
}

pub fn map_b(x: f64) -> f64 {
    x / (1.0 + x)
}

/// Closed form `a^n(x) = (F_{n-1} x + F_n) / (F_n x + F_{n+1})` for `n >= 1`.
pub fn map_a_iter(n: u32, x: f64) -> f64 {
    assert!(n >= 1);
    let (fm, f0, f1) = (fib(n - 1) as f64, fib(n) as f64, fib(n + 1) as f64);
    (fm * x + f0) / (f0 * x + f1)
}

pub fn fib(n: u32) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..n {
        let t = a + b;
        a = b;
        b = t;
    }
    a
}

/// Exact diatomic values `s(1), ..., s(2^(levels+1))`.
///
/// Entries are `u64`: the largest value below index `2^(N+1)` is the
/// Fibonacci number `F_(N+2)`, which fits for every level a table could hold.
#[derive(Clone, Debug)]
pub struct SternTable {
    levels: u32,
    values: Vec<u64>,
}

pub fn stern_values(levels: u32, level_cap: u32) -> Result<SternTable> {
    if levels > level_cap {
        return Err(Error::Capacity { what: "stern table levels", value: levels as u64, cap: level_cap as u64 });
    }
    let len = (1usize << (levels + 1)) + 1;
    let mut values = vec![0u64; len];
    values[1] = 1;
    for m in 2..len {
        values[m] = if m % 2 == 0 {
            values[m / 2]
        } else {
            values[m / 2] + values[m / 2 + 1]
        };
    }
    Ok(SternTable { levels, values })
}

impl SternTable {
    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn value(&self, n: u64) -> u64 {
        self.values[n as usize]
    }

    /// Exact moment `M_tau(N) = sum over 2^N < n <= 2^(N+1) of s(n)^tau`.
    pub fn moment(&self, tau: u32, level: u32) -> Result<BigInt> {
        if level > self.levels {
            return Err(Error::Capacity { what: "moment level", value: level as u64, cap: self.levels as u64 });
        }
        let lo = (1usize << level) + 1;
        let hi = 1usize << (level + 1);
        let mut acc = BigInt::zero();
        for n in lo..=hi {
            acc += BigInt::from(self.values[n]).pow(tau);
        }
        Ok(acc)
    }

    pub fn max_in_level(&self, level: u32) -> u64 {
        let lo = (1usize << level) + 1;
        let hi = 1usize << (level + 1);
        self.values[lo..=hi].iter().copied().max().unwrap()
    }
}

/// Exact action of the moment operator
/// `P_tau[f](x) = (1+x)^tau (f(1/(x+1)) + f(x/(x+1)))`
/// on polynomial coefficients: column `j` holds `(1+x)^(tau-j) (1 + x^j)`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub tau: u32,
    entries: Vec<BigInt>,
}

pub fn transfer_matrix(tau: u32) -> TransferMatrix {
    assert!(tau >= 1);
    let dim = tau as usize + 1;
    let mut entries = vec![BigInt::zero(); dim * dim];
    for j in 0..dim {
        let binom = binomial_row(tau - j as u32);
        for (i, c) in binom.iter().enumerate() {
            entries[i * dim + j] += c;
            if i + j < dim {
                entries[(i + j) * dim + j] += c;
            }
        }
    }
    TransferMatrix { tau, entries }
}

impl TransferMatrix {
    pub fn dim(&self) -> usize {
        self.tau as usize + 1
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.dim() + j]
    }

    /// Exact matrix-vector product on a coefficient vector.
    pub fn apply(&self, v: &[BigInt]) -> Vec<BigInt> {
        let dim = self.dim();
        assert_eq!(v.len(), dim);
        let mut out = vec![BigInt::zero(); dim];
        for (i, slot) in out.iter_mut().enumerate() {
            for (j, x) in v.iter().enumerate() {
                if !x.is_zero() {
                    *slot += self.entry(i, j) * x;
                }
            }
        }
        out
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.to_f64().unwrap()).collect()
    }

    pub fn column_sum(&self, j: usize) -> BigInt {
        (0..self.dim()).map(|i| self.entry(i, j).clone()).sum()
    }
}

/// Dominant eigenvalue by power iteration on the exact matrix in doubles.
///
/// Start vector is all-ones (strictly positive, so the Perron component is
/// present); convergence when the relative Rayleigh residual drops below
/// 1e-13.
pub fn sigma_eigen(tau: u32, cap: u32) -> Result<(f64, f64)> {
    if tau == 0 || tau > cap {
        return Err(Error::Capacity { what: "eigen tau", value: tau as u64, cap: cap as u64 });
    }
    let dim = tau as usize + 1;
    let m = transfer_matrix(tau).to_f64();
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut lambda = 0.0f64;
    for _ in 0..100_000 {
        let mut w = vec![0.0f64; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..dim {
                acc += m[i * dim + j] * v[j];
            }
            w[i] = acc;
        }
        let dot_wv: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let norm_v: f64 = v.iter().map(|a| a * a).sum::<f64>();
        lambda = dot_wv / norm_v;
        let norm_w = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        let residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt()
            / norm_w;
        for (slot, &wi) in v.iter_mut().zip(&w) {
            *slot = wi / norm_w;
        }
        if residual < 1e-13 {
            return Ok((lambda, residual));
        }
    }
    Err(Error::Numeric { context: format!("power iteration stalled at tau = {tau}, lambda = {lambda}") })
}

/// Exact characteristic polynomial (ascending coefficients, monic leading 1)
/// by the Faddeev-LeVerrier recurrence; every interior division is exact.
pub fn charpoly(matrix: &TransferMatrix) -> Vec<BigInt> {
    let dim = matrix.dim();
    let mut coeffs = vec![BigInt::zero(); dim + 1];
    coeffs[dim] = BigInt::one();
    // M_1 = A, c_{n-k} = -tr(A M_k)/k with M_{k+1} = A(M_k + c_{n-k} I)
    let mut m: Vec<BigInt> = matrix.entries.clone();
    for k in 1..=dim {
        let trace: BigInt = (0..dim).map(|i| m[i * dim + i].clone()).sum();
        let (c, rem) = num_integer_div_rem(trace, k as i64);
        assert!(rem.is_zero(), "Faddeev-LeVerrier division must be exact");
        let c = -c;
        coeffs[dim - k] = c.clone();
        if k == dim {
            break;
        }
        for i in 0..dim {
            m[i * dim + i] += &c;
        }
        let mut next = vec![BigInt::zero(); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = BigInt::zero();
                for t in 0..dim {
                    acc += matrix.entry(i, t) * &m[t * dim + j];
                }
                next[i * dim + j] = acc;
            }
        }
        m = next;
    }
    coeffs
}

fn num_integer_div_rem(a: BigInt, b: i64) -> (BigInt, BigInt) {
    let d = BigInt::from(b);
    (&a / &d, &a % &d)
}

pub fn eval_poly_exact(coeffs: &[BigInt], x: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn eval_poly_f64(coeffs: &[BigInt], x: f64) -> f64 {
    let mut acc = 0.0f64;
    for c in coeffs.iter().rev() {
        acc = acc * x + c.to_f64().unwrap();
    }
    acc
}

/// Largest real root of a monic polynomial: deterministic downward scan for
/// the final sign change, then bisection.
pub fn dominant_root(coeffs: &[BigInt], hi: f64) -> f64 {
    let steps = 1 << 20;
    let mut upper = hi;
    let mut lower = 0.0;
    for i in (0..steps).rev() {
        let x = hi * i as f64 / steps as f64;
        if eval_poly_f64(coeffs, x) <= 0.0 {
            lower = x;
            upper = hi * (i + 1) as f64 / steps as f64;
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lower + upper);
        if eval_poly_f64(coeffs, mid) <= 0.0 {
            lower = mid;
        } else {
            upper = mid;
        }
    }
    0.5 * (lower + upper)
}

/// Exact comparison of the moment difference with half the operator iterate:
/// `M_tau(N) - M_tau(N-1)` against `P_tau^N[1](1) / 2`.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub tau: u32,
    pub level: u32,
    #[serde(serialize_with = "crate::report::bigint_as_string")]
    pub moment_difference: BigInt,
    #[serde(serialize_with = "crate::report::bigint_as_string")]
    pub operator_half_value: BigInt,
    pub pass: bool,
}

pub fn recurrence_identity_check(
    tau: u32,
    level: u32,
    table: &SternTable,
) -> Result<IdentityCheck> {
    if level == 0 {
        return Err(Error::InvalidInput("identity holds for N >= 1".into()));
    }
    let moment_difference = table.moment(tau, level)? - table.moment(tau, level - 1)?;
    let matrix = transfer_matrix(tau);
    let mut coeffs = vec![BigInt::zero(); matrix.dim()];
    coeffs[0] = BigInt::one();
    for _ in 0..level {
        coeffs = matrix.apply(&coeffs);
    }
    let at_one: BigInt = coeffs.into_iter().sum();
    let (half, rem) = num_integer_div_rem(at_one, 2);
    if !rem.is_zero() {
        return Ok(IdentityCheck {
            tau,
            level,
            moment_difference,
            operator_half_value: half,
            pass: false,
        });
    }
    let pass = half == moment_difference;
    Ok(IdentityCheck { tau, level, moment_difference, operator_half_value: half, pass })
}

/// Result of rewriting a word in the `B` matrices as an `A`-word times a
/// trailing flip.
#[derive(Clone, Debug)]
pub struct MatrixWord {
    pub eps: Vec<bool>,
    /// `B_{eps_0} ... B_{eps_{N-1}}` as `[a, b, c, d]`.
    pub matrix: [u64; 4],
    /// Bits `eps'_0, ..., eps'_N` with the product equal to
    /// `A_{eps'_0} ... A_{eps'_{N-1}} T^{eps'_N}`.
    pub eps_prime: Vec<bool>,
}

const B0: [u64; 4] = [0, 1, 1, 1];
const B1: [u64; 4] = [1, 0, 1, 1];
const A0: [u64; 4] = [1, 1, 0, 1];
const A1: [u64; 4] = [1, 0, 1, 1];
const T: [u64; 4] = [0, 1, 1, 0];

fn mat_mul(a: [u64; 4], b: [u64; 4]) -> [u64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// Rewrites `B_{eps_0} ... B_{eps_{N-1}}` into `A`-form by expanding
/// `B_0 = T A_0`, `B_1 = A_1` and pushing every `T` to the right with
/// `T A_j = A_{1-j} T` and `T^2 = id`. The matrix identity is checked
/// exactly before returning.
pub fn b_to_a_rewrite(eps: &[bool]) -> Result<MatrixWord> {
    if eps.is_empty() || eps.len() > 64 {
        return Err(Error::InvalidInput(format!(
            "word length {} outside 1..=64",
            eps.len()
        )));
    }
    let mut matrix = [1u64, 0, 0, 1];
    let mut eps_prime = Vec::with_capacity(eps.len() + 1);
    let mut carry = false; // parity of T factors pushed past this position
    for &e in eps {
        matrix = mat_mul(matrix, if e { B1 } else { B0 });
        carry ^= !e;
        eps_prime.push(e ^ carry);
    }
    eps_prime.push(carry);

    // exact verification of the rewriting
    let mut check = [1u64, 0, 0, 1];
    for &e in &eps_prime[..eps.len()] {
        check = mat_mul(check, if e { A1 } else { A0 });
    }
    if *eps_prime.last().unwrap() {
        check = mat_mul(check, T);
    }
    assert_eq!(matrix, check, "rewrite must reproduce the matrix exactly");
    Ok(MatrixWord { eps: eps.to_vec(), matrix, eps_prime })
}

impl MatrixWord {
    /// `j_M(1) = c + d` for `M = [[a, b], [c, d]]`.
    pub fn j_at_one(&self) -> u64 {
        self.matrix[2] + self.matrix[3]
    }

    /// Odd index `n' = 2^N + sum_{1 <= j < N} eps'_j 2^j + 1`.
    pub fn n_prime(&self) -> u64 {
        let n = self.eps.len();
        let mut out = (1u64 << n) + 1;
        for j in 1..n {
            if self.eps_prime[j] {
                out += 1u64 << j;
            }
        }
        out
    }
}

/// The composition system on `[0, 1]` for weight exponent `tau`.
pub fn stern_system(tau: u32) -> Result<CompositionSystem> {
    let kappa = real_fn(move |x| xi_eval(x).powi(tau as i32));
    let g = real_fn(move |x| (PHI + x).powi(tau as i32));
    let weight = real_fn(move |x| ((1.0 + x) / PHI).powi(tau as i32));
    let kappa0 = (2.0 / 5.0f64.sqrt()).powi(tau as i32);
    CompositionSystem::new(
        real_fn(map_a),
        real_fn(map_b),
        kappa,
        g,
        weight.clone(),
        weight,
        1.0 / PHI,
        kappa0,
        Interval::closed(0.0, 1.0),
        KeyScheme::Moebius,
    )
}

/// System plus bound profile; every constant is closed-form here
/// (`||xi'|| = 1/phi` since `xi'(x) = phi/(phi+x)^2` peaks at `x = 0`).
pub fn build_stern_profile(tau: u32) -> Result<(CompositionSystem, BoundProfile)> {
    if tau == 0 {
        return Err(Error::InvalidInput("profile needs tau >= 1".into()));
    }
    let sys = stern_system(tau)?;
    let ti = tau as i32;
    let deriv = 1.0 / PHI;
    let kappa0 = sys.kappa0;

    // alpha^-_k = 2^(1 - k/2) ||xi'|| tau xi(1/phi)^(tau-1); xi(1/phi) = kappa0^(1/tau)
    let alpha_minus = SeqGen::geometric(
        vec![],
        2.0 * deriv * tau as f64 * xi_eval(1.0 / PHI).powi(ti - 1),
        std::f64::consts::FRAC_1_SQRT_2,
    );
    let m_plus = (deriv * tau as f64 * xi_eval(2.0 / 3.0).powi(ti - 1)).max(1.0);
    let alpha_plus = SeqGen::geometric(vec![1.0, 1.0], m_plus, std::f64::consts::FRAC_1_SQRT_2);
    // beta_l = xi(1/(l+1))^tau decreases to phi^-tau
    let beta_head: Vec<f64> = (0..512)
        .map(|ell| xi_eval(1.0 / (ell as f64 + 1.0)).powi(ti))
        .collect();
    let env = *beta_head.last().unwrap();
    let beta = SeqGen::tabulated(beta_head, env, 1.0);
    let delta = SeqGen::constant(PHI.powi(ti));
    let gamma = deriv * tau as f64 * xi_eval(0.75).powi(ti - 1);
    // sup(g + 1/(g o a)) is attained at x = 1: both summands increase
    let sup_g_term = PHI.powi(2 * ti) + (2.0 / PHI.powi(3)).powi(ti);
    let profile = BoundProfile::new(
        format!("stern tau={tau}"),
        alpha_plus,
        alpha_minus,
        beta,
        delta,
        gamma,
        kappa0,
        sup_g_term,
    )?;
    Ok((sys, profile))
}

/// Two-term eigenvalue prediction `phi^tau (1 + (2/sqrt5)^tau)` with the
/// `phi^tau 0.837^tau` remainder scale attached.
pub fn sigma_predicted(tau: u32) -> (f64, f64) {
    let main = PHI.powi(tau as i32);
    let delta2 = 2.0 / 5.0f64.sqrt();
    (main * (1.0 + delta2.powi(tau as i32)), main * SECONDARY_DECAY.powi(tau as i32))
}

/// Combinatorial a-priori bounds `phi^tau <= sigma_tau <= phi^tau (1 + (1 - phi^-6)^tau)`.
pub fn ks_bounds(tau: u32) -> (f64, f64) {
    let main = PHI.powi(tau as i32);
    (main, main * (1.0 + (1.0 - PHI.powi(-6)).powi(tau as i32)))
}
