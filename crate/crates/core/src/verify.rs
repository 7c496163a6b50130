//! Runnable verification suite: every exit-gate check of the artifact as a
//! library call, shared by the `acceptance` test target and the CLI command
//! `specrad full-verify`.
//!
//! Each criterion reports one pass/fail outcome with per-assertion detail
//! lines; failures are collected, never panicked.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigInt;
use serde::Serialize;

use crate::bounds::{
    check_weight_bounds, eval_series, radius_bracket, verify_hypotheses, vr_lower_from,
    vr_upper_from, BoundProfile,
};
use crate::error::Result;
use crate::operator::{
    growth_rate, iterate_direct, iterate_norm, iterate_word_sum, Branch, CompositionSystem,
    RunWord,
};
use crate::sampling::SplitMix64;
use crate::stern;
use crate::thue_morse as tm;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn summary_line(&self) -> String {
        format!(
            "criterion {} [{}] {} ({:.2}s)",
            self.id,
            if self.pass { "pass" } else { "FAIL" },
            self.name,
            self.seconds
        )
    }
}

struct Check {
    pass: bool,
    details: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check { pass: true, details: Vec::new() }
    }

    fn require(&mut self, ok: bool, msg: impl Into<String>) {
        let msg = msg.into();
        if ok {
            self.details.push(format!("ok: {msg}"));
        } else {
            self.pass = false;
            self.details.push(format!("FAIL: {msg}"));
        }
    }

    fn require_quiet(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.pass = false;
            self.details.push(format!("FAIL: {}", msg()));
        }
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.details.push(msg.into());
    }
}

fn run_criterion(
    id: u32,
    name: &'static str,
    body: impl FnOnce(&mut Check) -> Result<()>,
) -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();
    if let Err(e) = body(&mut check) {
        check.pass = false;
        check.details.push(format!("error: {e}"));
    }
    CriterionOutcome {
        id,
        name,
        pass: check.pass,
        details: check.details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Stern exact anchors: the first eigenvalue is exactly 3 and the first
/// moments are exactly powers of 3.
pub fn criterion_1() -> CriterionOutcome {
    run_criterion(1, "stern exact anchors", |c| {
        let (sigma, residual) = stern::sigma_eigen(1, stern::DEFAULT_EIGEN_CAP)?;
        c.require(
            sigma.round() == 3.0 && (sigma - 3.0).abs() < 1e-12,
            format!("power iteration gives sigma_1 = {sigma} (residual {residual:.2e})"),
        );
        let p = stern::charpoly(&stern::transfer_matrix(1));
        let at3 = stern::eval_poly_exact(&p, &BigInt::from(3));
        c.require(at3 == BigInt::from(0), "3 is an exact root of the tau=1 characteristic polynomial");
        let table = stern::stern_values(20, stern::DEFAULT_LEVEL_CAP)?;
        let mut all = true;
        for level in 0..=20u32 {
            if table.moment(1, level)? != BigInt::from(3u64).pow(level) {
                all = false;
                c.require(false, format!("M_1({level}) != 3^{level}"));
            }
        }
        c.require(all, "M_1(N) = 3^N exactly for N <= 20");
        Ok(())
    })
}

/// Exact integer identity between moment differences and operator iterates.
pub fn criterion_2() -> CriterionOutcome {
    run_criterion(2, "stern moment/operator identity", |c| {
        let table = stern::stern_values(14, stern::DEFAULT_LEVEL_CAP)?;
        let mut checked = 0usize;
        for tau in 1..=5u32 {
            for level in 1..=14u32 {
                let id = stern::recurrence_identity_check(tau, level, &table)?;
                c.require_quiet(id.pass, || {
                    format!(
                        "identity fails at tau={tau} N={level}: {} vs {}",
                        id.moment_difference, id.operator_half_value
                    )
                });
                checked += 1;
            }
        }
        c.require(true, format!("exact equality on {checked} (tau, N) pairs"));
        Ok(())
    })
}

/// Eigenvalue expansion envelope and the combinatorial a-priori bounds.
pub fn criterion_3() -> CriterionOutcome {
    run_criterion(3, "stern eigenvalue envelope", |c| {
        let delta2 = 2.0 / 5.0f64.sqrt();
        let mut fitted_c = 0.0f64;
        let mut worst_tau = 0u32;
        for tau in 5..=40u32 {
            let (sigma, _) = stern::sigma_eigen(tau, stern::DEFAULT_EIGEN_CAP)?;
            let e = sigma / stern::PHI.powi(tau as i32) - 1.0 - delta2.powi(tau as i32);
            let ratio = e.abs() / stern::SECONDARY_DECAY.powi(tau as i32);
            if ratio > fitted_c {
                fitted_c = ratio;
                worst_tau = tau;
            }
        }
        c.require(
            fitted_c <= 10.0,
            format!("|e_tau| <= C 0.837^tau on tau in [5,40] with fitted C = {fitted_c:.4} (worst at tau = {worst_tau})"),
        );
        let mut ks_ok = true;
        for tau in 1..=30u32 {
            let (sigma, _) = stern::sigma_eigen(tau, stern::DEFAULT_EIGEN_CAP)?;
            let (lo, hi) = stern::ks_bounds(tau);
            if !(sigma >= lo * (1.0 - 1e-12) && sigma <= hi * (1.0 + 1e-12)) {
                ks_ok = false;
                c.require(false, format!("a-priori bounds fail at tau={tau}: {sigma} vs [{lo}, {hi}]"));
            }
        }
        c.require(ks_ok, "phi^tau <= sigma_tau <= phi^tau (1 + (1 - phi^-6)^tau) for tau <= 30");
        Ok(())
    })
}

/// Thue-Morse exact anchors: Parseval, the convolution oracle, and exact
/// log-convexity of the moments.
pub fn criterion_4() -> CriterionOutcome {
    run_criterion(4, "thue-morse exact anchors", |c| {
        for k in 1..=4u32 {
            let m0 = tm::tm_moment_exact(k, 0, tm::DEFAULT_MOMENT_CAP)?;
            c.require_quiet(m0 == BigInt::from(1), || format!("M_{k}(0) != 1"));
        }
        c.note("ok: M_k(0) = 1 for k <= 4");
        let table = tm::tm_moment_table(1, 20, tm::DEFAULT_MOMENT_CAP)?;
        let parseval = table
            .iter()
            .enumerate()
            .all(|(n, v)| *v == BigInt::from(1u64) << n);
        c.require(parseval, "Parseval: M_1(n) = 2^n exactly for n <= 20");
        // independent oracle: expand T_2 from the sign table, square, sum squares
        let t2 = tm::sign_polynomial(2);
        let oracle = t2.mul(&t2).l2_mass();
        let m22 = tm::tm_moment_exact(2, 2, tm::DEFAULT_MOMENT_CAP)?;
        c.require(
            oracle == BigInt::from(28) && m22 == oracle,
            format!("M_2(2) = {m22} matches the convolution oracle (28)"),
        );
        let tables: Vec<Vec<BigInt>> = (0..=4u32)
            .map(|k| tm::tm_moment_table(k, 12, tm::DEFAULT_MOMENT_CAP))
            .collect::<Result<_>>()?;
        let mut convex = true;
        for k in 1..=3usize {
            for n in 0..=12usize {
                if &tables[k + 1][n] * &tables[k - 1][n] < &tables[k][n] * &tables[k][n] {
                    convex = false;
                    c.require(false, format!("log-convexity fails at k={k} n={n}"));
                }
            }
        }
        c.require(convex, "M_{k+1} M_{k-1} >= M_k^2 exactly for k <= 3, n <= 12");
        Ok(())
    })
}

/// Moment growth constants against the two-term prediction.
pub fn criterion_5() -> CriterionOutcome {
    run_criterion(5, "thue-morse growth consistency", |c| {
        for (k, n_max) in [(1u32, 12u32), (2, 14), (3, 13)] {
            let (est, band) = tm::rho_estimate(k, n_max, tm::DEFAULT_MOMENT_CAP)?;
            let (pred, remainder) = tm::rho_predicted(k);
            let tol = band.abs() + remainder;
            c.require(
                (est - pred).abs() <= tol,
                format!(
                    "k={k}: estimate {est:.6} vs prediction {pred:.6} within {tol:.4} \
                     (band {band:.2e} + remainder {remainder:.4})"
                ),
            );
            let prior = tm::prior_upper(k);
            c.require(
                est <= prior * (1.0 + 1e-9),
                format!("k={k}: estimate {est:.6} respects the a-priori bound {prior:.4}"),
            );
        }
        Ok(())
    })
}

/// The sine-product constant and the certified bracket for xi(7/8).
pub fn criterion_6() -> CriterionOutcome {
    run_criterion(6, "thue-morse constants", |c| {
        let delta1 = tm::delta1_const(1e-12);
        c.require(
            (delta1 - 0.6027).abs() <= 5e-4,
            format!("delta_1 = {delta1:.7} is 0.6027 within 5e-4"),
        );
        let xi23 = tm::xi_eval(2.0 / 3.0, 1e-13);
        c.require(
            (delta1 - xi23).abs() <= 1e-9,
            format!("delta_1 agrees with xi(2/3) = {xi23:.12} to 1e-9 (diff {:.2e})", (delta1 - xi23).abs()),
        );
        let (lo, hi) = tm::xi_certified(7.0 / 8.0, 11)?;
        c.require(
            lo >= 0.833 && hi <= 0.835,
            format!("certified xi(7/8) in [{lo:.6}, {hi:.6}] inside [0.833, 0.835] at truncation 11"),
        );
        Ok(())
    })
}

// Sum of rho^|w| u(w, x) over words with exactly `b_target` occurrences of b
// and length at most `len_cap`; memoized lower approximation of the envelope
// slice V_r(x).
struct VSlice<'a> {
    sys: &'a CompositionSystem,
    rho: f64,
    memo: HashMap<(u32, u32, u128), f64>,
}

impl<'a> VSlice<'a> {
    fn eval(&mut self, b_rem: u32, len_rem: u32, x: f64, key: u128) -> Result<f64> {
        if len_rem == 0 {
            return Ok(if b_rem == 0 { 1.0 } else { 0.0 });
        }
        if let Some(&v) = self.memo.get(&(b_rem, len_rem, key)) {
            return Ok(v);
        }
        let (wa, wb) = self.sys.branch_weights();
        let mut v = if b_rem == 0 { 1.0 } else { 0.0 };
        let xa = (self.sys.map_a)(x);
        let ka = self.sys.keys.child_key(key, Branch::A, xa)?;
        v += self.rho * wa(x) * self.eval(b_rem, len_rem - 1, xa, ka)?;
        if b_rem > 0 {
            let xb = (self.sys.map_b)(x);
            let kb = self.sys.keys.child_key(key, Branch::B, xb)?;
            v += self.rho * wb(x) * self.eval(b_rem - 1, len_rem - 1, xb, kb)?;
        }
        self.memo.insert((b_rem, len_rem, key), v);
        Ok(v)
    }
}

fn random_word(rng: &mut SplitMix64, max_len: u32) -> RunWord {
    let len = 1 + rng.next_below(max_len as u64) as usize;
    let letters: Vec<Branch> = (0..len)
        .map(|_| if rng.next_u64() & 1 == 0 { Branch::A } else { Branch::B })
        .collect();
    RunWord::from_letters(&letters)
}

fn sample_domain(sys: &CompositionSystem, rng: &mut SplitMix64) -> f64 {
    let u = rng.next_unit();
    sys.domain.lo + (sys.domain.hi - sys.domain.lo) * u
}

/// Word-sum machinery: route equality, per-word bound checks, envelope
/// sandwiches, and radius brackets containing the measured growth.
pub fn criterion_7() -> CriterionOutcome {
    run_criterion(7, "word-sum machinery", |c| {
        let systems: Vec<(&str, CompositionSystem)> = vec![
            ("thue-morse tau=2", tm::tm_system(2)?),
            ("stern tau=1", stern::stern_system(1)?),
        ];
        // two independent evaluation routes agree
        for (name, sys) in &systems {
            let mut rng = SplitMix64::new(0xC0FFEE);
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let x = sample_domain(sys, &mut rng);
                for r in 0..=12u32 {
                    let ws = iterate_word_sum(sys, r, x)?;
                    let dir = iterate_direct(sys, r, x)?;
                    worst = worst.max((ws - dir).abs() / dir.abs().max(1e-300));
                }
            }
            c.require(
                worst <= 1e-9,
                format!("{name}: word sum vs direct iteration, worst relative gap {worst:.2e} (r <= 12, 100 points)"),
            );
        }
        // per-word envelope inequalities on random words
        let profiles: Vec<(&str, CompositionSystem, BoundProfile)> = {
            let (tm_sys, tm_prof) = tm::build_tm_profile(2)?;
            let (st_sys, st_prof) = stern::build_stern_profile(1)?;
            vec![("thue-morse tau=2", tm_sys, tm_prof), ("stern tau=1", st_sys, st_prof)]
        };
        for (name, sys, profile) in &profiles {
            let mut rng = SplitMix64::new(0xFEED);
            let mut upper_worst = f64::INFINITY;
            let mut lower_worst = f64::INFINITY;
            let mut all = true;
            for _ in 0..5000 {
                let w = random_word(&mut rng, 20);
                let x = sample_domain(sys, &mut rng);
                let check = check_weight_bounds(sys, profile, &w, x)?;
                all &= check.upper.pass && check.lower.pass;
                upper_worst = upper_worst.min(check.upper.slack);
                lower_worst = lower_worst.min(check.lower.slack);
            }
            c.require(
                all,
                format!("{name}: 5000 random word-weight bounds hold (worst slacks {upper_worst:.2e} upper, {lower_worst:.2e} lower)"),
            );
        }
        // envelope sandwich around measured partial sums at tau = 8
        let apps: Vec<(&str, CompositionSystem, BoundProfile)> = {
            let (tm_sys, tm_prof) = tm::build_tm_profile(8)?;
            let (st_sys, st_prof) = stern::build_stern_profile(8)?;
            vec![("thue-morse tau=8", tm_sys, tm_prof), ("stern tau=8", st_sys, st_prof)]
        };
        for (name, sys, profile) in &apps {
            let bracket = radius_bracket(profile)?;
            // convergent side: measured generating-series partial stays below
            // the summed upper envelopes
            let rho1 = 0.95 * bracket.rho_lo;
            let sv1 = eval_series(profile, rho1)?;
            let mut measured = 0.0f64;
            let mut pw = 1.0f64;
            for n in 0..=12u32 {
                measured += pw * iterate_norm(sys, n, 33)?;
                pw *= rho1;
            }
            let mut envelope = 0.0f64;
            for r in 0..500u32 {
                let term = vr_upper_from(profile, &sv1, r);
                envelope += term;
                if r > 4 && term < 1e-12 * envelope {
                    break;
                }
            }
            c.require(
                measured <= envelope,
                format!("{name}: partial sums {measured:.4} below summed upper envelopes {envelope:.4e} at rho = {rho1:.4}"),
            );
            // divergent side: per-slice lower envelopes stay below measured
            // slice partials just under the divergence point
            let rho2 = bracket.rho_hi - 1e-6;
            let sv2 = eval_series(profile, rho2)?;
            let x = 0.5;
            let gx = (sys.weight_g)(x);
            let mut slice = VSlice { sys, rho: rho2, memo: HashMap::new() };
            let root = sys.keys.root_key(x);
            let mut lower_ok = true;
            for r in 0..=4u32 {
                let low = vr_lower_from(profile, &sv2, r, gx);
                let meas = slice.eval(r, 20, x, root)?;
                if low > meas {
                    lower_ok = false;
                    c.require(false, format!("{name}: V_{r} lower envelope {low:.4e} exceeds measured partial {meas:.4e}"));
                }
            }
            c.require(
                lower_ok,
                format!("{name}: lower envelopes below measured slice partials at rho = {rho2:.6} (r <= 4)"),
            );
        }
        // brackets contain the reciprocal of the measured growth rate
        for tau in [8u32, 12] {
            for (name, sys, profile) in [
                {
                    let (s, p) = tm::build_tm_profile(tau)?;
                    ("thue-morse", s, p)
                },
                {
                    let (s, p) = stern::build_stern_profile(tau)?;
                    ("stern", s, p)
                },
            ] {
                let bracket = radius_bracket(&profile)?;
                let norms: Vec<f64> = (1..=16u32)
                    .map(|r| iterate_norm(&sys, r, 33))
                    .collect::<Result<_>>()?;
                let (est, band) = growth_rate(&norms)?;
                let inv = 1.0 / est;
                c.require(
                    bracket.rho_lo <= inv && inv <= bracket.rho_hi,
                    format!(
                        "{name} tau={tau}: 1/growth = {inv:.6} (band {band:.1e}) inside bracket [{:.6}, {:.6}]",
                        bracket.rho_lo, bracket.rho_hi
                    ),
                );
            }
        }
        Ok(())
    })
}

/// Hypothesis sweeps pass on both application families and fail on an
/// adversarially weakened profile.
pub fn criterion_8() -> CriterionOutcome {
    run_criterion(8, "hypothesis suites", |c| {
        for tau in [2u32, 4, 6, 8, 12] {
            let (sys, profile) = tm::build_tm_profile(tau)?;
            let report = verify_hypotheses(&sys, &profile, 1000, 12, 12, 0)?;
            let worst = report
                .conditions
                .iter()
                .map(|cond| cond.max_slack)
                .fold(f64::NEG_INFINITY, f64::max);
            c.require(
                report.pass,
                format!("thue-morse tau={tau}: all hypothesis families hold (worst slack {worst:.2e})"),
            );
        }
        for tau in [1u32, 5, 10, 20] {
            let (sys, profile) = stern::build_stern_profile(tau)?;
            let report = verify_hypotheses(&sys, &profile, 1000, 12, 12, 0)?;
            let worst = report
                .conditions
                .iter()
                .map(|cond| cond.max_slack)
                .fold(f64::NEG_INFINITY, f64::max);
            c.require(
                report.pass,
                format!("stern tau={tau}: all hypothesis families hold (worst slack {worst:.2e})"),
            );
        }
        let (sys, profile) = tm::build_tm_profile(2)?;
        let mutated = profile.with_scaled_alpha_plus(0.5);
        let report = verify_hypotheses(&sys, &mutated, 1000, 12, 12, 0)?;
        let upper = report
            .conditions
            .iter()
            .find(|cond| cond.condition == "kappa-a-orbit-upper")
            .expect("condition present");
        c.require(
            !report.pass && !upper.pass,
            format!(
                "halved alpha+ profile is rejected: a-orbit upper bound violated by {:.3e} at k = {}, x = {:.4}",
                upper.max_slack, upper.witness_index, upper.witness_x
            ),
        );
        Ok(())
    })
}

pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ]
}
