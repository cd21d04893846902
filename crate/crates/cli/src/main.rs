use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use loopwave::cascade::{build_wavelets, cascade_iterate, refinement_residual, CASCADE_TOL, DEFAULT_MAX_ITERS};
use loopwave::cuntz::{detect_monomial_corner, invariant_subspace_probe, ProbeCandidate, CORNER_TOL, PROBE_TOL};
use loopwave::filters::{preset_bank, FilterBank};
use loopwave::loops::{factor_to_spins, filters_to_loop, loop_to_filters, synthesize_from_spins, unitarity_check_with};
use loopwave::{io, transform, Error, EXACT_TOL};

#[derive(Parser)]
#[command(
    name = "loopwave",
    version,
    about = "Orthogonal N-band filter banks as polynomial loops"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Write a filter bank from a preset or a spin factorization.
    Design {
        /// haar, db4 or stretched-haar:<k>
        #[arg(long, conflicts_with = "spins", required_unless_present = "spins")]
        preset: Option<String>,
        #[arg(long)]
        spins: Option<PathBuf>,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    /// Check orthogonality, the QMF identity and loop unitarity.
    Verify {
        bank: PathBuf,
        #[arg(long, default_value_t = EXACT_TOL)]
        tol: f64,
        /// Unit-circle samples; defaults to max(64, 2·degree + 1).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Run the cascade and write φ (and ψ_j next to it) as CSV samples.
    Cascade {
        bank: PathBuf,
        #[arg(long, default_value_t = 10)]
        depth: u32,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    TransformAnalyze {
        bank: PathBuf,
        signal: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    TransformSynth {
        bank: PathBuf,
        tree: PathBuf,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    /// Monomial-corner test on the loop, cross-checked by the subspace probe.
    Irreducibility {
        bank: PathBuf,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Factor the bank's loop into a unitary and elementary spin factors.
    Factor {
        bank: PathBuf,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    /// Write the polyphase loop of a bank.
    Loop {
        bank: PathBuf,
        #[arg(short = 'o')]
        output: PathBuf,
    },
}

enum Failure {
    Check(String),
    Input(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotFactorable { .. } => Failure::Check(e.to_string()),
            e => Failure::Input(e),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn report(value: &Value, output: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    print!("{text}");
    if let Some(path) = output {
        io::write_atomic(path, &text)?;
    }
    Ok(())
}

fn psi_path(phi: &Path, j: usize) -> PathBuf {
    let stem = phi
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = phi
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    phi.with_file_name(format!("{stem}.psi{j}{ext}"))
}

fn design(preset: Option<String>, spins: Option<PathBuf>, output: &Path) -> Outcome {
    let (bank, name) = match (preset, spins) {
        (Some(name), _) => (preset_bank(&name)?, Some(name)),
        (None, Some(path)) => {
            let sf = io::load_spins(&path)?;
            (loop_to_filters(&synthesize_from_spins(&sf)?)?, None)
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    io::write_atomic(output, &io::bank_to_json(&bank, name.as_deref()))?;
    Ok(())
}

fn verify(bank: &FilterBank, tol: f64, samples: Option<usize>, output: Option<&Path>) -> Outcome {
    let lp = filters_to_loop(bank);
    let samples = samples.unwrap_or((2 * lp.degree() + 1).max(64));
    let b = bank.verify(tol, samples)?;
    let u = unitarity_check_with(&lp, samples, tol)?;
    let pass = b.pass && u.pass;
    report(
        &json!({
            "pass": pass,
            "orthogonality_residual": b.orthogonality_residual,
            "qmf_residual": b.qmf_residual,
            "normalization_residual": b.normalization_residual,
            "lowpass_normalized": b.lowpass_normalized,
            "unitarity_residual": u.max_residual,
            "samples": samples,
            "tolerance": tol,
        }),
        output,
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(format!("bank fails verification at tolerance {tol:e}")))
    }
}

fn cascade(bank: &FilterBank, depth: u32, output: &Path) -> Outcome {
    let out = cascade_iterate(bank, depth, DEFAULT_MAX_ITERS)?;
    let residual = refinement_residual(&out.phi, bank);
    io::write_atomic(output, &io::samples_to_csv(&out.phi))?;
    let mut psi_files = Vec::new();
    let mut failure = None;
    if out.converged {
        match build_wavelets(bank, &out.phi) {
            Ok(psis) => {
                for (j, psi) in psis.iter().enumerate() {
                    let path = psi_path(output, j + 1);
                    io::write_atomic(&path, &io::samples_to_csv(psi))?;
                    psi_files.push(path.display().to_string());
                }
            }
            Err(e) => failure = Some(e.to_string()),
        }
    } else {
        failure = Some(format!("cascade did not converge in {} iterations", out.iterations));
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    report(
        &json!({
            "converged": out.converged,
            "diverged": out.diverged,
            "iterations": out.iterations,
            "last_delta": out.last_delta,
            "refinement_residual": residual,
            "average_gap": out.average_gap,
            "support": out.phi.support(),
            "depth": depth,
            "tolerance": CASCADE_TOL,
            "phi": output.display().to_string(),
            "psi": psi_files,
            "warnings": out.warnings,
        }),
        None,
    )?;
    match failure {
        Some(msg) => Err(Failure::Check(msg)),
        None => Ok(()),
    }
}

fn irreducibility(bank: &FilterBank, output: Option<&Path>) -> Outcome {
    let corner = detect_monomial_corner(&filters_to_loop(bank));
    let window = (4 * bank.max_len()).max(32);
    let probe = invariant_subspace_probe(bank, window)?;
    let candidate = match &probe.candidate {
        None => Value::Null,
        Some(ProbeCandidate::HalfLine) => json!({"kind": "half-line"}),
        Some(ProbeCandidate::Orbit { seed, missing }) => json!({"kind": "orbit", "seed": seed, "missing": missing}),
    };
    let disagree = corner.decisive && corner.reducible != probe.candidate_found;
    report(
        &json!({
            "reducible": corner.reducible,
            "M": corner.size,
            "exponents": corner.exponents,
            "columns": corner.columns,
            "detector": "corner",
            "decisive": corner.decisive,
            "residual": corner.residual,
            "tolerance": CORNER_TOL,
            "probe": {
                "candidate_found": probe.candidate_found,
                "candidate": candidate,
                "residual": probe.residual,
                "window": probe.window,
                "tolerance": PROBE_TOL,
            },
            "agree": !disagree,
        }),
        output,
    )?;
    if disagree {
        Err(Failure::Check("corner detector and subspace probe disagree".into()))
    } else {
        Ok(())
    }
}

fn run(verb: Verb) -> Outcome {
    match verb {
        Verb::Design { preset, spins, output } => design(preset, spins, &output),
        Verb::Verify {
            bank,
            tol,
            samples,
            output,
        } => verify(&io::load_bank(&bank)?, tol, samples, output.as_deref()),
        Verb::Cascade { bank, depth, output } => cascade(&io::load_bank(&bank)?, depth, &output),
        Verb::TransformAnalyze {
            bank,
            signal,
            levels,
            output,
        } => {
            let bank = io::load_bank(&bank)?;
            let tree = transform::analyze(&io::load_signal(&signal)?, &bank, levels)?;
            io::write_atomic(&output, &io::tree_to_json(&tree))?;
            Ok(())
        }
        Verb::TransformSynth { bank, tree, output } => {
            let bank = io::load_bank(&bank)?;
            let signal = transform::synthesize(&io::load_tree(&tree)?, &bank)?;
            io::write_atomic(&output, &io::signal_to_csv(&signal))?;
            Ok(())
        }
        Verb::Irreducibility { bank, output } => irreducibility(&io::load_bank(&bank)?, output.as_deref()),
        Verb::Factor { bank, output } => {
            let sf = factor_to_spins(&filters_to_loop(&io::load_bank(&bank)?))?;
            io::write_atomic(&output, &io::spins_to_json(&sf))?;
            Ok(())
        }
        Verb::Loop { bank, output } => {
            let lp = filters_to_loop(&io::load_bank(&bank)?);
            io::write_atomic(&output, &io::loop_to_json(&lp))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("loopwave: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("loopwave: {e}");
            ExitCode::from(2)
        }
    }
}
