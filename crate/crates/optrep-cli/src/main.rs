//! Batch front end: run configuration, subcommand dispatch and
//! machine-readable reports.
//!
//! Exit codes: 0 on success, 1 when a verification suite or statistical
//! check fails, 2 on configuration errors.

mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use optrep::analytics::{self, ComponentKind};
use optrep::fock::{FockState, ModeRegistry, Pol};
use optrep::gates::{
    bell_analyzer, derive_correction_table, pittman_cnot, BellVerdict, CNOT_CORRECTIONS,
};
use optrep::params::{BellKind, GunParams, PdcParams};
use optrep::policy::Policy;
use optrep::protocol::run_chain;
use optrep::sources::{
    bell_state, pair_sector_norm, pdc_state, pdc_state_exponential, su11_residuals,
};

#[derive(Parser)]
#[command(
    name = "optrep",
    about = "Exact linear-optical repeater simulator and rate calculator",
    version
)]
struct Cli {
    /// Path to a line-oriented `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Override one configuration key, e.g. --set eta=0.8 (repeatable;
    /// overrides win over the file).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form success rates under both conventions.
    Analytic,
    /// Reproduce the component-count table.
    Table1 {
        /// Round the way the published table does (one significant figure
        /// for swap counts, order of magnitude for totals).
        #[arg(long)]
        paper_style: bool,
    },
    /// Exhaustively re-derive the heralded CNOT and check it.
    VerifyCnot,
    /// Check the down-converter expansion coefficients and the operator
    /// algebra residuals.
    VerifyPdc,
    /// Check the partial Bell analyzer outcome table.
    VerifyBell,
    /// Run the Monte Carlo chain and emit the rate report.
    Simulate {
        /// Also write one line per herald event to this file.
        #[arg(long)]
        event_log: Option<String>,
    },
    /// Print the component tallies.
    Resources,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_seed = std::env::var(config::SEED_ENV).ok();
    let run_cfg = match config::load(
        cli.config.as_deref(),
        &cli.overrides,
        env_seed.as_deref(),
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("optrep: configuration error: {e}");
            return ExitCode::from(2);
        }
    };

    let result = match &cli.command {
        Command::Analytic => cmd_analytic(&run_cfg, cli.format),
        Command::Table1 { paper_style } => cmd_table1(&run_cfg, cli.format, *paper_style),
        Command::VerifyCnot => cmd_verify_cnot(),
        Command::VerifyPdc => cmd_verify_pdc(),
        Command::VerifyBell => cmd_verify_bell(),
        Command::Simulate { event_log } => cmd_simulate(&run_cfg, cli.format, event_log.as_deref()),
        Command::Resources => cmd_resources(&run_cfg, cli.format),
    };

    match result {
        Ok(report) => {
            if let Err(e) = emit(&report, cli.output.as_deref()) {
                eprintln!("optrep: cannot write report: {e}");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Config(msg)) => {
            eprintln!("optrep: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Verification(msg)) => {
            eprintln!("optrep: verification failed: {msg}");
            ExitCode::from(1)
        }
    }
}

enum RunError {
    Config(String),
    Verification(String),
}

impl From<optrep::Error> for RunError {
    fn from(e: optrep::Error) -> Self {
        RunError::Config(e.to_string())
    }
}

fn emit(text: &str, output: Option<&str>) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
        }
    }
}

/// Nine significant digits, the frozen report precision.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn cmd_analytic(cfg: &config::RunConfig, format: Format) -> Result<String, RunError> {
    let p = &cfg.chain.params;
    let with_qnd = analytics::p_pur(p, true)?;
    let without = analytics::p_pur(p, false)?;
    let swap = analytics::p_swap(p.eta)?;
    let note = "the two purification conventions differ by exactly 1/p_qnd; \
                the component table is consistent with the no-presence-check rate";
    match format {
        Format::Json => {
            let value = serde_json::json!({
                "schema": "optrep.analytic/1",
                "params": p,
                "p_pur": { "literal": with_qnd, "table_convention": without,
                            "ratio": without / with_qnd },
                "p_swap": swap,
                "n_pur": { "literal": 1.0 / with_qnd, "table_convention": 1.0 / without },
                "n_swap": 1.0 / swap,
                "note": note,
            });
            Ok(format!("{}\n", serde_json::to_string_pretty(&value).unwrap()))
        }
        Format::Csv => {
            let mut s = String::from("quantity,value\n");
            s.push_str(&format!("p_pur_literal,{}\n", sig9(with_qnd)));
            s.push_str(&format!("p_pur_table_convention,{}\n", sig9(without)));
            s.push_str(&format!("convention_ratio,{}\n", sig9(without / with_qnd)));
            s.push_str(&format!("p_swap,{}\n", sig9(swap)));
            Ok(s)
        }
    }
}

fn paper_round_sig1(x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return x;
    }
    let unit = 10f64.powf(x.log10().floor());
    (x / unit).round() * unit
}

fn cmd_table1(
    cfg: &config::RunConfig,
    format: Format,
    paper_style: bool,
) -> Result<String, RunError> {
    let p = &cfg.chain.params;
    let mut rows = Vec::new();
    for (include_qnd, convention) in [(false, "table"), (true, "literal")] {
        for row in analytics::table1(p, &cfg.etas, include_qnd)? {
            rows.push((row, convention));
        }
    }
    match format {
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|(row, convention)| {
                    serde_json::json!({
                        "eta": row.eta,
                        "n_pur": row.n_pur,
                        "n_swap": row.n_swap,
                        "n_total": row.n_total,
                        "convention": convention,
                    })
                })
                .collect();
            let value = serde_json::json!({
                "schema": "optrep.table1/1",
                "rows": items,
                "discrepancy_flag":
                    "literal rows are exactly 8x the table rows; the published \
                     counts match the table convention",
            });
            Ok(format!("{}\n", serde_json::to_string_pretty(&value).unwrap()))
        }
        Format::Csv => {
            let mut s = String::from("eta,n_pur,n_swap,n_total,convention\n");
            for (row, convention) in &rows {
                if paper_style {
                    s.push_str(&format!(
                        "{},{:.0e},{:.0},~1e{:.0},{convention}\n",
                        row.eta,
                        paper_round_sig1(row.n_pur),
                        paper_round_sig1(row.n_swap),
                        row.n_total.log10().round(),
                    ));
                } else {
                    s.push_str(&format!(
                        "{},{},{},{},{convention}\n",
                        row.eta,
                        sig9(row.n_pur),
                        sig9(row.n_swap),
                        sig9(row.n_total),
                    ));
                }
            }
            Ok(s)
        }
    }
}

fn cmd_verify_cnot() -> Result<String, RunError> {
    let reg = ModeRegistry::builder()
        .tag("w1")
        .tag("w2")
        .mode("c", "w1")
        .mode("t", "w2")
        .build()?;
    let gun = GunParams::ideal(BellKind::PhiPlus, ("w1", "w2"));
    let mut s = String::new();
    let truth = [
        (Pol::H, Pol::H, Pol::H, Pol::H),
        (Pol::H, Pol::V, Pol::H, Pol::V),
        (Pol::V, Pol::H, Pol::V, Pol::V),
        (Pol::V, Pol::V, Pol::V, Pol::H),
    ];
    let basis_input = |pc: Pol, pt: Pol| -> Result<FockState, optrep::Error> {
        FockState::vacuum(&reg)
            .apply_creation("c", pc)?
            .apply_creation("t", pt)
    };
    for (pc, pt, oc, ot) in truth {
        let input = basis_input(pc, pt)?;
        let expected = basis_input(oc, ot)?;
        let outcomes = pittman_cnot(&input, "c", "t", &gun, 1.0, &mut Policy::Exhaustive)?;
        let acceptance: f64 = outcomes
            .iter()
            .filter(|o| o.success)
            .map(|o| o.branch_probability)
            .sum();
        let fidelity = outcomes
            .iter()
            .filter(|o| o.success)
            .map(|o| o.post_state.fidelity(&expected).unwrap_or(0.0))
            .fold(1.0f64, f64::min);
        s.push_str(&format!(
            "|{pc}{pt}> -> |{oc}{ot}> acceptance={} fidelity={fidelity:.12}\n",
            sig9(acceptance)
        ));
        if (acceptance - 0.25).abs() > 1e-12 || (fidelity - 1.0).abs() > 1e-12 {
            return Err(RunError::Verification(format!(
                "input |{pc}{pt}>: acceptance {acceptance}, fidelity {fidelity}\n{s}"
            )));
        }
    }
    let derived = derive_correction_table().map_err(|e| RunError::Verification(e.to_string()))?;
    for (d, frozen) in derived.iter().zip(CNOT_CORRECTIONS.iter()) {
        s.push_str(&format!(
            "pattern (D2={}, D1={}): control {}, target {}\n",
            d.d2, d.d1, d.control, d.target
        ));
        if d != frozen {
            return Err(RunError::Verification(format!(
                "re-derived correction table drifted from the frozen one\n{s}"
            )));
        }
    }
    s.push_str("verify-cnot: ok\n");
    Ok(s)
}

fn cmd_verify_pdc() -> Result<String, RunError> {
    let reg = ModeRegistry::builder()
        .truncation(4)
        .tag("w1")
        .tag("w2")
        .mode("a", "w1")
        .mode("b", "w2")
        .build()?;
    let mut s = String::new();
    let eps = num_complex::Complex64::new(0.3, 0.0);
    let state = pdc_state(&reg, &PdcParams::new(eps, 3)?)?;
    let vac = FockState::vacuum(&reg);
    let mut sector = vac.clone();
    let amp0 = state.inner(&vac)?.norm();
    for n in 1..=3u32 {
        sector = optrep::sources::apply_pair_creation(&sector, "a", "b")?;
        let unit = sector.normalized()?;
        let measured = state.inner(&unit)?.norm() / (amp0 * 0.3f64.powi(n as i32));
        let expected = pair_sector_norm(n);
        s.push_str(&format!(
            "sector {n}: coefficient {} expected {}\n",
            sig9(measured),
            sig9(expected)
        ));
        if (measured - expected).abs() > 1e-12 {
            return Err(RunError::Verification(format!(
                "sector {n} coefficient {measured} vs {expected}\n{s}"
            )));
        }
    }
    let residuals = su11_residuals(&reg, 4).map_err(|e| RunError::Verification(e.to_string()))?;
    let worst = residuals
        .iter()
        .map(|r| r.lowering_raising.max(r.weight_raising))
        .fold(0.0f64, f64::max);
    s.push_str(&format!(
        "su(1,1) residuals: {} basis states, worst {:.3e}\n",
        residuals.len(),
        worst
    ));
    if worst > 1e-12 {
        return Err(RunError::Verification(format!(
            "operator algebra residual {worst}\n{s}"
        )));
    }
    // Informational: the exact Hamiltonian exponential weights sector n by
    // an extra √(n+1) relative to the closed-form profile.
    let exact = pdc_state_exponential(&reg, &PdcParams::new(eps, 4)?)?;
    let one = optrep::sources::apply_pair_creation(&vac, "a", "b")?.normalized()?;
    let profile = state.inner(&one)?.norm() / amp0;
    let exact0 = exact.inner(&vac)?.norm();
    let exact1 = exact.inner(&one)?.norm() / exact0;
    s.push_str(&format!(
        "note: one-pair amplitude ratio — closed form {} vs exponential {} \
         (factor {:.6}, the sector degeneracy; flagged, not reconciled)\n",
        sig9(profile),
        sig9(exact1),
        exact1 / profile
    ));
    s.push_str("verify-pdc: ok\n");
    Ok(s)
}

fn cmd_verify_bell() -> Result<String, RunError> {
    let reg = ModeRegistry::builder()
        .tag("w1")
        .mode("a", "w1")
        .mode("b", "w1")
        .build()?;
    let mut s = String::new();
    let mut uniform = 0.0;
    for kind in BellKind::ALL {
        let input = bell_state(&reg, kind, "a", "b")?;
        let branches = bell_analyzer(&input, "a", "b", 1.0, &mut Policy::Exhaustive)?;
        let by = |v: BellVerdict| -> f64 {
            branches
                .iter()
                .filter(|b| b.verdict == v)
                .map(|b| b.outcome.branch_probability)
                .sum()
        };
        let (plus, minus, fail) = (
            by(BellVerdict::PsiPlus),
            by(BellVerdict::PsiMinus),
            by(BellVerdict::Fail),
        );
        s.push_str(&format!(
            "{kind}: Psi+={} Psi-={} Fail={}\n",
            sig9(plus),
            sig9(minus),
            sig9(fail)
        ));
        let expected = match kind {
            BellKind::PsiPlus => (1.0, 0.0, 0.0),
            BellKind::PsiMinus => (0.0, 1.0, 0.0),
            _ => (0.0, 0.0, 1.0),
        };
        if (plus - expected.0).abs() > 1e-12
            || (minus - expected.1).abs() > 1e-12
            || (fail - expected.2).abs() > 1e-12
        {
            return Err(RunError::Verification(format!(
                "{kind} outcome distribution drifted\n{s}"
            )));
        }
        uniform += 0.25 * (plus + minus);
    }
    s.push_str(&format!("uniform Bell identification rate: {}\n", sig9(uniform)));
    if (uniform - 0.5).abs() > 1e-12 {
        return Err(RunError::Verification(format!(
            "uniform identification rate {uniform}\n{s}"
        )));
    }
    s.push_str("verify-bell: ok\n");
    Ok(s)
}

fn cmd_simulate(
    cfg: &config::RunConfig,
    format: Format,
    event_log: Option<&str>,
) -> Result<String, RunError> {
    let mut chain_cfg = cfg.chain.clone();
    chain_cfg.collect_events = event_log.is_some();
    let run = run_chain(&chain_cfg)?;
    if let Some(path) = event_log {
        let mut text = String::from("trial,station,component,outcome,probability\n");
        for line in &run.event_log {
            text.push_str(line);
            text.push('\n');
        }
        std::fs::write(path, text)
            .map_err(|e| RunError::Config(format!("cannot write event log: {e}")))?;
    }
    match format {
        Format::Json => Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&run.report).unwrap()
        )),
        Format::Csv => {
            let r = &run.report;
            let mut s = String::from("key,value\n");
            let mut kv = |k: &str, v: String| s.push_str(&format!("{k},{v}\n"));
            kv("n_links", r.n_links.to_string());
            kv("trials", r.trials.to_string());
            kv("seed", r.seed.to_string());
            kv("table1_convention", r.table1_convention.to_string());
            kv("trials_succeeded", r.success.trials_succeeded.to_string());
            kv("success_rate", sig9(r.success.rate));
            kv("clean_success_rate", sig9(r.success.clean_rate));
            kv("analytic_rate", sig9(r.success.analytic_rate));
            kv("purify_attempts", r.purify.attempts.to_string());
            kv("purify_accepted_clean", r.purify.accepted_clean.to_string());
            kv("purify_clean_rate", sig9(r.purify.clean_rate));
            kv("purify_analytic_rate", sig9(r.purify.analytic_rate));
            kv("swap_attempts", r.swap.attempts.to_string());
            kv("swap_successes", r.swap.successes.to_string());
            kv("guns_consumed", r.components.total_consumed.guns.to_string());
            kv(
                "detectors_consumed",
                r.components.total_consumed.detectors.to_string(),
            );
            let text = s;
            Ok(text)
        }
    }
}

fn cmd_resources(cfg: &config::RunConfig, format: Format) -> Result<String, RunError> {
    let purifier = analytics::tally_resources(ComponentKind::Purifier);
    let swapper = analytics::tally_resources(ComponentKind::Swapper);
    let chain = analytics::tally_resources(ComponentKind::Chain(cfg.chain.n_links));
    match format {
        Format::Json => {
            let value = serde_json::json!({
                "schema": "optrep.resources/1",
                "purifier": purifier,
                "swapper": swapper,
                "chain": { "n_links": cfg.chain.n_links, "tally": chain },
            });
            Ok(format!("{}\n", serde_json::to_string_pretty(&value).unwrap()))
        }
        Format::Csv => {
            let mut s = String::from("component,guns,detectors\n");
            s.push_str(&format!("purifier,{},{}\n", purifier.guns, purifier.detectors));
            s.push_str(&format!("swapper,{},{}\n", swapper.guns, swapper.detectors));
            s.push_str(&format!(
                "chain({}),{},{}\n",
                cfg.chain.n_links, chain.guns, chain.detectors
            ));
            Ok(s)
        }
    }
}
