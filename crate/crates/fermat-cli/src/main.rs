use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use num_complex::Complex64;

use fermat_core::certify::{self, CertifyOptions};
use fermat_core::cyclotomic::{prime_above, CycInt, Ideal};
use fermat_core::dd;
use fermat_core::hecke::{central_value, jacobi_via_residue_field, stickelberger_report};
use fermat_core::local_zeta::{verify_zeta, TwistClass};
use fermat_core::symbols::{residue_symbol, SymbolContext};

#[derive(Parser)]
#[command(name = "fermat", version, about = "Twisted Fermat cubics: local zeta data, L-values and certificates")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Jacobi sum j(chi, chi) at a split prime, with its Stickelberger check.
    Jacobi {
        #[arg(long)]
        ell: u64,
    },
    /// Cubic residue symbol (a + b omega / m) for a rational modulus m.
    Symbol {
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        b: i64,
        #[arg(long)]
        m: u64,
    },
    /// Local L-polynomial of the twist at ell, checked against point counts.
    Zeta {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        #[arg(long)]
        ell: u64,
    },
    /// Central value of the twisted Hecke L-function.
    Lvalue {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        #[arg(long = "X")]
        x: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Certify that x^3 + y^3 = delta has no rational points.
    Certify {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        #[arg(long, default_value_t = 1000)]
        height: u64,
        #[arg(long, default_value_t = fermat_core::hecke::DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long = "X")]
        x: Option<usize>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Certify every cube-free delta in a range.
    Scan {
        #[arg(long)]
        min: i64,
        #[arg(long)]
        max: i64,
        #[arg(long, default_value_t = 100)]
        height: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Double Dirichlet series checks.
    Dd {
        #[command(subcommand)]
        cmd: DdCmd,
    },
}

#[derive(Subcommand)]
enum DdCmd {
    VerifyInterchange {
        #[arg(long, default_value_t = 1.5)]
        s: f64,
        #[arg(long, default_value_t = 1000)]
        xmax: usize,
        #[arg(long, default_value_t = dd::DEFAULT_A_MAX)]
        amax: usize,
    },
    MeanValue {
        #[arg(long, default_value_t = 3000)]
        xmax: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Jacobi { ell } => {
            let w = prime_above(ell, 3)?;
            let j = jacobi_via_residue_field(&w)?;
            let rep = stickelberger_report(&w)?;
            println!("j = {j}  norm = {}  stickelberger = {}", j.norm(), if rep.holds() { "ok" } else { "FAILED" });
        }
        Cmd::Symbol { a, b, m } => {
            let x = CycInt::eis(a as i128, b as i128);
            let e = residue_symbol(&x, &Ideal::rational(m)?)?;
            println!("omega^{e}");
        }
        Cmd::Zeta { delta, ell } => {
            let tc = TwistClass::new(3, delta)?;
            let rep = verify_zeta(&tc, ell)?;
            println!("P(T) coefficients {:?}", rep.coeffs);
            for (k, predicted, counted) in rep.checks {
                println!("  k = {k}: predicted {predicted}, counted {counted}");
            }
        }
        Cmd::Lvalue { delta, x, json } => {
            let cv = central_value(delta, x)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&cv)?);
            } else {
                println!(
                    "L(1/2) = {:.12} +- {:.1e}  (N = {}, eps = {:+}, X = {})",
                    cv.value, cv.error, cv.conductor, cv.root_number, cv.x
                );
            }
        }
        Cmd::Certify { delta, height, margin, x, json } => {
            let opts = CertifyOptions { height, margin, x_min: x, ..Default::default() };
            let cert = certify::certify_with(delta, &opts)?;
            println!("delta = {delta}: {}", cert.verdict.label());
            if let Some(path) = json {
                certify::write_atomic(&path, &cert.to_json()?).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Cmd::Scan { min, max, height, out } => {
            let opts = CertifyOptions { height, ..Default::default() };
            let report = certify::scan(min, max, &opts)?;
            fs::write(&out, report.to_csv()?)?;
            fs::write(out.with_extension("json"), report.to_json()?)?;
            let s = &report.summary;
            println!(
                "{} classes: {} certified, {} precondition fails, {} zero-consistent, {} indeterminate",
                s.total, s.certified, s.precondition_fails, s.zero_consistent, s.indeterminate
            );
        }
        Cmd::Dd { cmd: DdCmd::VerifyInterchange { s, xmax, amax } } => {
            if s <= 1.0 {
                bail!("s must exceed 1 for the interchange");
            }
            let rep = dd::verify_interchange(Complex64::new(s, 0.0), xmax, amax)?;
            println!(
                "max defect {:.3e} at n = {} (formal mismatch {:.3e}, {} nonzero rows)",
                rep.max_defect, rep.worst_n, rep.formal_mismatch, rep.nonzero_rows
            );
        }
        Cmd::Dd { cmd: DdCmd::MeanValue { xmax, csv } } => {
            let rep = dd::mean_value_check(xmax, &SymbolContext::standard())?;
            println!(
                "lhs = {:.6}  C x = {:.6}  ratio = {:.6}  violations = {}",
                rep.lhs, rep.prediction, rep.ratio, rep.waldspurger_violations
            );
            if let Some(path) = csv {
                rep.write_csv(&path)?;
            }
        }
    }
    Ok(())
}
