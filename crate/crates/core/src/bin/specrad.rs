//! Command-line front end: reproducible JSON/CSV reports for the exact
//! moment computations, eigenvalue extractions, constants, hypothesis
//! sweeps, radius brackets, and the aggregated verification suite.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use specrad::bounds::{radius_bracket, verify_hypotheses};
use specrad::operator::{growth_rate, iterate_norm};
use specrad::report::{Provenance, ReportEnvelope};
use specrad::stern;
use specrad::thue_morse as tm;
use specrad::verify;
use specrad::Error;

#[derive(Parser)]
#[command(name = "specrad", version, about = "Exact moment growth of Thue-Morse and Stern sequences with certified operator bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for the report
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for quasi-random sampling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SystemName {
    Tm,
    Stern,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Thue-Morse moments M_k(n) for n = 0..=n_max
    TmMoments {
        #[arg(long)]
        k: u32,
        #[arg(long = "n-max", alias = "N-max")]
        n_max: u32,
        /// Cap on k * 2^n
        #[arg(long, default_value_t = tm::DEFAULT_MOMENT_CAP)]
        cap: u64,
    },
    /// Accelerated growth estimate of the Thue-Morse moments
    TmRho {
        #[arg(long)]
        k: u32,
        #[arg(long = "n-max", alias = "N-max", default_value_t = 14)]
        n_max: u32,
        #[arg(long, default_value_t = tm::DEFAULT_MOMENT_CAP)]
        cap: u64,
    },
    /// The sine-product constant and certified xi values
    TmConstants {
        #[arg(long, default_value_t = 1e-12)]
        precision: f64,
    },
    /// Exact Stern moments M_tau(N) for N = 0..=n_max
    SternMoments {
        #[arg(long)]
        tau: u32,
        #[arg(long = "n-max", alias = "N-max")]
        n_max: u32,
        #[arg(long, default_value_t = stern::DEFAULT_LEVEL_CAP as u64)]
        cap: u64,
    },
    /// Dominant eigenvalue of the exact Stern transfer matrix
    SternSigma {
        #[arg(long)]
        tau: u32,
        #[arg(long, default_value_t = stern::DEFAULT_EIGEN_CAP as u64)]
        cap: u64,
    },
    /// Exact moment/operator identity checks
    SternIdentity {
        #[arg(long)]
        tau: u32,
        #[arg(long = "n-max", alias = "N-max", default_value_t = 14)]
        n_max: u32,
    },
    /// Hypothesis sweep for an application profile
    ProfileVerify {
        #[arg(long, value_enum)]
        system: SystemName,
        #[arg(long)]
        tau: u32,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 12)]
        k_max: u32,
        #[arg(long, default_value_t = 12)]
        ell_max: u32,
    },
    /// Radius bracket plus measured growth containment
    Bracket {
        #[arg(long, value_enum)]
        system: SystemName,
        #[arg(long)]
        tau: u32,
        /// Number of iterate norms feeding the growth estimate
        #[arg(long = "r-max", default_value_t = 16)]
        r_max: u32,
    },
    /// Run every verification criterion and aggregate pass/fail
    FullVerify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage problems exit with 1; --help/--version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

struct CommandOutput {
    name: &'static str,
    parameters: BTreeMap<String, Value>,
    results: Value,
    caps: BTreeMap<String, u64>,
    /// Plot-ready rows for CSV output: header plus records
    csv: Option<(String, Vec<String>)>,
    check_failed: bool,
}

fn run(cli: Cli) -> specrad::Result<ExitCode> {
    let start = Instant::now();
    let out = dispatch(&cli)?;
    let envelope = ReportEnvelope::new(
        out.name,
        out.parameters,
        out.results,
        Provenance {
            version: env!("CARGO_PKG_VERSION"),
            seed: cli.seed,
            caps: out.caps,
        },
        start.elapsed().as_secs_f64(),
    );
    let text = match cli.format {
        Format::Json => envelope.to_json(),
        Format::Csv => match &out.csv {
            Some((header, rows)) => {
                let mut s = String::from(header.as_str());
                s.push('\n');
                for row in rows {
                    s.push_str(row);
                    s.push('\n');
                }
                s
            }
            None => {
                return Err(Error::InvalidInput(format!(
                    "{} has no CSV table; use --format json",
                    out.name
                )))
            }
        },
    };
    match &cli.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
            writeln!(f, "{text}").map_err(|e| Error::Numeric { context: e.to_string() })?;
        }
        None => println!("{text}"),
    }
    Ok(if out.check_failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn params(entries: &[(&str, Value)]) -> BTreeMap<String, Value> {
    entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn dispatch(cli: &Cli) -> specrad::Result<CommandOutput> {
    match &cli.command {
        Command::TmMoments { k, n_max, cap } => {
            let table = tm::tm_moment_table(*k, *n_max, *cap)?;
            let rows: Vec<String> = table
                .iter()
                .enumerate()
                .map(|(n, m)| format!("{k},{n},{m}"))
                .collect();
            let results = json!({
                "moments": table
                    .iter()
                    .enumerate()
                    .map(|(n, m)| json!({"k": k, "n": n, "value": m.to_string()}))
                    .collect::<Vec<_>>(),
            });
            Ok(CommandOutput {
                name: "tm-moments",
                parameters: params(&[("k", json!(k)), ("n_max", json!(n_max))]),
                results,
                caps: [("moment_cap".to_string(), *cap)].into(),
                csv: Some(("k,n,moment".into(), rows)),
                check_failed: false,
            })
        }
        Command::TmRho { k, n_max, cap } => {
            let (estimate, error_band) = tm::rho_estimate(*k, *n_max, *cap)?;
            let (prediction, remainder_scale) = tm::rho_predicted(*k);
            let results = json!({
                "estimate": estimate,
                "error_band": error_band,
                "prediction": prediction,
                "remainder_scale": remainder_scale,
                "prior_upper": tm::prior_upper(*k),
            });
            Ok(CommandOutput {
                name: "tm-rho",
                parameters: params(&[("k", json!(k)), ("n_max", json!(n_max))]),
                results,
                caps: [("moment_cap".to_string(), *cap)].into(),
                csv: Some((
                    "k,estimate,error_band,prediction".into(),
                    vec![format!("{k},{estimate},{error_band},{prediction}")],
                )),
                check_failed: false,
            })
        }
        Command::TmConstants { precision } => {
            let constants = tm::TmConstants::compute(*precision);
            let xi23 = tm::xi_eval(2.0 / 3.0, 1e-13);
            let (lo, hi) = tm::xi_certified(7.0 / 8.0, 11)?;
            let results = json!({
                "delta1": constants.delta1,
                "delta1_precision": precision,
                "secondary_decay": constants.secondary_decay,
                "xi_two_thirds": xi23,
                "delta1_minus_xi_two_thirds": constants.delta1 - xi23,
                "xi_seven_eighths": {"lo": lo, "hi": hi, "truncation": 11},
            });
            Ok(CommandOutput {
                name: "tm-constants",
                parameters: params(&[("precision", json!(precision))]),
                results,
                caps: BTreeMap::new(),
                csv: None,
                check_failed: false,
            })
        }
        Command::SternMoments { tau, n_max, cap } => {
            let table = stern::stern_values(*n_max, *cap as u32)?;
            let moments: Vec<_> = (0..=*n_max)
                .map(|level| table.moment(*tau, level))
                .collect::<specrad::Result<_>>()?;
            let rows: Vec<String> = moments
                .iter()
                .enumerate()
                .map(|(level, m)| format!("{tau},{level},{m}"))
                .collect();
            let results = json!({
                "moments": moments
                    .iter()
                    .enumerate()
                    .map(|(level, m)| json!({"tau": tau, "N": level, "value": m.to_string()}))
                    .collect::<Vec<_>>(),
            });
            Ok(CommandOutput {
                name: "stern-moments",
                parameters: params(&[("tau", json!(tau)), ("n_max", json!(n_max))]),
                results,
                caps: [("level_cap".to_string(), *cap)].into(),
                csv: Some(("tau,N,moment".into(), rows)),
                check_failed: false,
            })
        }
        Command::SternSigma { tau, cap } => {
            let (sigma, residual) = stern::sigma_eigen(*tau, *cap as u32)?;
            let (prediction, remainder_scale) = stern::sigma_predicted(*tau);
            let (ks_lo, ks_hi) = stern::ks_bounds(*tau);
            let mut results = json!({
                "sigma": sigma,
                "residual": residual,
                "prediction": prediction,
                "remainder_scale": remainder_scale,
                "ks_bounds": {"lo": ks_lo, "hi": ks_hi},
            });
            if *tau <= 6 {
                let p = stern::charpoly(&stern::transfer_matrix(*tau));
                let root = stern::dominant_root(&p, 4.0 * ks_hi + 4.0);
                results["charpoly_root"] = json!(root);
                results["charpoly_agreement"] = json!((sigma - root).abs());
                // certify integer eigenvalues exactly against the char poly
                use num_traits::Zero;
                let nearest = num_bigint::BigInt::from(sigma.round() as i64);
                if (sigma - sigma.round()).abs() < 1e-9
                    && stern::eval_poly_exact(&p, &nearest).is_zero()
                {
                    results["sigma_exact"] = json!(nearest.to_string());
                }
            }
            Ok(CommandOutput {
                name: "stern-sigma",
                parameters: params(&[("tau", json!(tau))]),
                results,
                caps: [("eigen_cap".to_string(), *cap)].into(),
                csv: Some((
                    "tau,sigma,residual".into(),
                    vec![format!("{tau},{sigma},{residual}")],
                )),
                check_failed: false,
            })
        }
        Command::SternIdentity { tau, n_max } => {
            let table = stern::stern_values(*n_max, stern::DEFAULT_LEVEL_CAP)?;
            let checks: Vec<_> = (1..=*n_max)
                .map(|level| stern::recurrence_identity_check(*tau, level, &table))
                .collect::<specrad::Result<_>>()?;
            let all_pass = checks.iter().all(|c| c.pass);
            let rows: Vec<String> = checks
                .iter()
                .map(|c| format!("{},{},{},{},{}", c.tau, c.level, c.moment_difference, c.operator_half_value, c.pass))
                .collect();
            let results = json!({"checks": checks, "all_pass": all_pass});
            Ok(CommandOutput {
                name: "stern-identity",
                parameters: params(&[("tau", json!(tau)), ("n_max", json!(n_max))]),
                results,
                caps: [("level_cap".to_string(), stern::DEFAULT_LEVEL_CAP as u64)].into(),
                csv: Some(("tau,N,moment_difference,operator_half_value,pass".into(), rows)),
                check_failed: !all_pass,
            })
        }
        Command::ProfileVerify { system, tau, samples, k_max, ell_max } => {
            let (sys, profile) = match system {
                SystemName::Tm => tm::build_tm_profile(*tau)?,
                SystemName::Stern => stern::build_stern_profile(*tau)?,
            };
            let report = verify_hypotheses(&sys, &profile, *samples, *k_max, *ell_max, cli.seed)?;
            let pass = report.pass;
            Ok(CommandOutput {
                name: "profile-verify",
                parameters: params(&[
                    ("system", json!(match system { SystemName::Tm => "tm", SystemName::Stern => "stern" })),
                    ("tau", json!(tau)),
                    ("samples", json!(samples)),
                    ("k_max", json!(k_max)),
                    ("ell_max", json!(ell_max)),
                ]),
                results: serde_json::to_value(&report).expect("report serializes"),
                caps: BTreeMap::new(),
                csv: None,
                check_failed: !pass,
            })
        }
        Command::Bracket { system, tau, r_max } => {
            let (sys, profile) = match system {
                SystemName::Tm => tm::build_tm_profile(*tau)?,
                SystemName::Stern => stern::build_stern_profile(*tau)?,
            };
            let bracket = radius_bracket(&profile)?;
            let norms: Vec<f64> = (1..=*r_max)
                .map(|r| iterate_norm(&sys, r, 33))
                .collect::<specrad::Result<_>>()?;
            let (growth, band) = growth_rate(&norms)?;
            let contained = bracket.rho_lo <= 1.0 / growth && 1.0 / growth <= bracket.rho_hi;
            let results = json!({
                "bracket": bracket,
                "growth_estimate": growth,
                "growth_error_band": band,
                "reciprocal_growth": 1.0 / growth,
                "contained": contained,
                "profile": {"label": profile.label, "kappa0": profile.kappa0,
                             "eta": profile.eta, "c1": profile.c1, "c2": profile.c2},
            });
            Ok(CommandOutput {
                name: "bracket",
                parameters: params(&[
                    ("system", json!(match system { SystemName::Tm => "tm", SystemName::Stern => "stern" })),
                    ("tau", json!(tau)),
                    ("r_max", json!(r_max)),
                ]),
                results,
                caps: BTreeMap::new(),
                csv: None,
                check_failed: !contained,
            })
        }
        Command::FullVerify => {
            let outcomes = verify::run_all();
            for outcome in &outcomes {
                eprintln!("{}", outcome.summary_line());
            }
            let all_pass = outcomes.iter().all(|o| o.pass);
            let results = json!({
                "criteria": outcomes,
                "all_pass": all_pass,
            });
            Ok(CommandOutput {
                name: "full-verify",
                parameters: BTreeMap::new(),
                results,
                caps: BTreeMap::new(),
                csv: None,
                check_failed: !all_pass,
            })
        }
    }
}
