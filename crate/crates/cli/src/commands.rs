//! Subcommand arguments and their implementations.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use mg_core::fuchsian::{
    chern_index, integrability_check, monodromy_representation, residue_log, FormBasis, LogBranch,
};
use mg_core::gate::{apply, controlled, parse_gate, tensor, QuantumGate, QubitState};
use mg_core::kz::{braid_conventions, braid_matrices, uniform_kz, unitarization, verify_braid_relations};
use mg_core::lappo::{
    evaluate_at, evaluation_warnings, synthesize, verify_match, RepresentationFamily, Synthesis,
};
use mg_core::matrix::ComplexRepr;
use mg_core::paths::{
    braid_word_path, generator_loops, pure_braid_path, winding_around, BraidLetter, BraidWord,
    PiecewisePath,
};
use mg_core::universality::{
    density_screen_with, epsilon_net_coverage, haar_su2, CoverageOptions, GateSet, ScreenOptions,
    DEFAULT_GRID, DEFAULT_MAX_LEN, DEFAULT_NODE_BUDGET,
};
use mg_core::{CMatrix, C64};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{parse_complex, parse_complex_list, RunConfig};
use crate::input;
use crate::report::{CliError, Report};
use crate::Command;

fn complexes(s: &str) -> Result<Vec<C64>, CliError> {
    parse_complex_list(s).map_err(CliError::Validation)
}

fn complex(s: &str) -> Result<C64, CliError> {
    parse_complex(s).map_err(CliError::Validation)
}

fn reprs(v: &[C64]) -> Vec<ComplexRepr> {
    v.iter().copied().map(ComplexRepr::from).collect()
}

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match command {
        Command::Gate(c) => gate(c, cfg),
        Command::Paths(c) => paths(c, cfg),
        Command::Fuchsian(c) => fuchsian(c, cfg),
        Command::Synth(a) => synth(a, cfg),
        Command::Kz(c) => kz(c, cfg),
        Command::Universality(c) => universality(c, cfg),
        Command::Pipeline(a) => pipeline(a, cfg),
    }
}

// ---------------------------------------------------------------- gate

#[derive(Subcommand)]
pub enum GateCmd {
    /// Matrix of a named gate (X, Y, Z, H, H_std, PHASE:<alpha>, CNOT, CCNOT).
    Show { name: String },
    /// `k`-fold controlled version of a gate.
    Controlled {
        name: String,
        #[arg(long, default_value_t = 1)]
        controls: usize,
    },
    /// Tensor product of gates, leftmost acting on the most significant qubit.
    Tensor {
        #[arg(required = true)]
        names: Vec<String>,
    },
    /// Apply a gate to a computational basis state given as a bit string.
    Apply {
        name: String,
        #[arg(long)]
        bits: String,
    },
}

fn gate_result(report: &mut Report, label: &str, g: &QuantumGate, cfg: &RunConfig) -> Result<(), CliError> {
    report.check("unitarity", g.matrix().unitarity_defect(), cfg.unitarity_tol);
    report.set_result(&json!({
        "gate": label,
        "qubits": g.qubits(),
        "matrix": g.matrix(),
    }))
}

fn gate(cmd: GateCmd, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        GateCmd::Show { name } => {
            let mut r = Report::new("gate show", cfg);
            gate_result(&mut r, &name, &parse_gate(&name)?, cfg)?;
            Ok(r)
        }
        GateCmd::Controlled { name, controls } => {
            let mut r = Report::new("gate controlled", cfg);
            let g = controlled(&parse_gate(&name)?, controls);
            gate_result(&mut r, &format!("C^{controls}({name})"), &g, cfg)?;
            Ok(r)
        }
        GateCmd::Tensor { names } => {
            let mut r = Report::new("gate tensor", cfg);
            let gates = names.iter().map(|n| parse_gate(n)).collect::<Result<Vec<_>, _>>()?;
            gate_result(&mut r, &names.join(" x "), &tensor(&gates)?, cfg)?;
            Ok(r)
        }
        GateCmd::Apply { name, bits } => {
            let g = parse_gate(&name)?;
            let bits: Vec<u8> = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(CliError::Validation(format!("bit string may hold only 0 and 1, got {c:?}"))),
                })
                .collect::<Result<_, _>>()?;
            if bits.len() != g.qubits() {
                return Err(CliError::Validation(format!(
                    "{name} acts on {} qubits, got {} bits",
                    g.qubits(),
                    bits.len()
                )));
            }
            let out = apply(&g, &QubitState::from_bits(&bits))?;
            let mut r = Report::new("gate apply", cfg);
            r.set_result(&json!({
                "gate": name,
                "amplitudes": reprs(out.amplitudes()),
                "basis_index": out.as_basis_index(cfg.unitarity_tol),
            }))?;
            Ok(r)
        }
    }
}

// ---------------------------------------------------------------- paths

#[derive(Subcommand)]
pub enum PathsCmd {
    /// Generator loops around each puncture from a common basepoint.
    Loops {
        /// Comma-separated punctures, e.g. `0,1`.
        #[arg(long, allow_hyphen_values = true)]
        punctures: String,
        #[arg(long, allow_hyphen_values = true)]
        basepoint: String,
        #[arg(long, default_value_t = 0.3)]
        radius: f64,
    },
    /// Half-twist path of the generator `s_i` in configuration space.
    Braid {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        inverse: bool,
        /// Comma-separated start configuration (default `1,2,…,n`).
        #[arg(long, allow_hyphen_values = true)]
        basepoint: Option<String>,
    },
    /// Path of a braid word such as `1,-2,1` (negative = inverse).
    Word {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        word: String,
        #[arg(long, allow_hyphen_values = true)]
        basepoint: Option<String>,
    },
    /// Closed loop realizing the pure braid `tau_ij`.
    Pure {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: usize,
        #[arg(long, allow_hyphen_values = true)]
        basepoint: Option<String>,
    },
}

fn parse_word(s: &str) -> Result<BraidWord, CliError> {
    let letters = s
        .split(',')
        .map(|t| {
            let k: i64 = t
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("bad braid letter {t:?}")))?;
            match k {
                0 => Err(CliError::Validation("braid letters are nonzero".into())),
                k if k > 0 => Ok(BraidLetter::pos(k as usize)),
                k => Ok(BraidLetter::neg(k.unsigned_abs() as usize)),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BraidWord(letters))
}

fn path_report(command: &str, path: &PiecewisePath, cfg: &RunConfig) -> Result<Report, CliError> {
    let mut r = Report::new(command, cfg);
    r.set_result(&json!({
        "closed": path.is_closed(),
        "start": reprs(&path.start()),
        "end": reprs(&path.end()),
        "path": path,
    }))?;
    Ok(r)
}

fn paths(cmd: PathsCmd, cfg: &RunConfig) -> Result<Report, CliError> {
    let base = |b: &Option<String>| b.as_deref().map(complexes).transpose();
    match cmd {
        PathsCmd::Loops {
            punctures,
            basepoint,
            radius,
        } => {
            let punctures = complexes(&punctures)?;
            let loops = generator_loops(complex(&basepoint)?, &punctures, radius)?;
            let windings: Vec<Vec<f64>> = loops
                .iter()
                .map(|l| punctures.iter().map(|&s| winding_around(l, s)).collect())
                .collect();
            let mut r = Report::new("paths loops", cfg);
            r.set_result(&json!({
                "punctures": reprs(&punctures),
                "windings": windings,
                "loops": loops,
            }))?;
            Ok(r)
        }
        PathsCmd::Braid { n, i, inverse, basepoint } => {
            let letter = if inverse { BraidLetter::neg(i) } else { BraidLetter::pos(i) };
            let b = base(&basepoint)?;
            let p = braid_word_path(n, &BraidWord(vec![letter]), b.as_deref())?;
            path_report("paths braid", &p, cfg)
        }
        PathsCmd::Word { n, word, basepoint } => {
            let b = base(&basepoint)?;
            let p = braid_word_path(n, &parse_word(&word)?, b.as_deref())?;
            path_report("paths word", &p, cfg)
        }
        PathsCmd::Pure { n, i, j, basepoint } => {
            let b = base(&basepoint)?;
            let p = pure_braid_path(n, i, j, b.as_deref())?;
            path_report("paths pure", &p, cfg)
        }
    }
}

// ---------------------------------------------------------------- fuchsian

#[derive(Subcommand)]
pub enum FuchsianCmd {
    /// Monodromy matrices of a connection along a set of loops.
    Monodromy {
        #[arg(long)]
        conn: PathBuf,
        #[arg(long)]
        loops: PathBuf,
        /// Check `M_1 ⋯ M_m = I` (loops ordered so their product is trivial).
        #[arg(long)]
        check_relation: bool,
        /// Also report residue logarithms and the Chern index.
        #[arg(long)]
        chern: bool,
        /// Start of the eigenvalue argument window for logarithms.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        branch_start: f64,
    },
    /// Logarithm `E` with `exp(2 pi i E) = M`.
    Log {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        branch_start: f64,
    },
    /// Infinitesimal braid relations of a configuration-space connection.
    Integrability {
        #[arg(long)]
        conn: PathBuf,
    },
}

fn fuchsian(cmd: FuchsianCmd, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        FuchsianCmd::Monodromy {
            conn,
            loops,
            check_relation,
            chern,
            branch_start,
        } => {
            let conn = input::load_connection(&conn)?;
            let loops = input::load_loops(&loops)?;
            let rep = monodromy_representation(&conn, &loops, cfg.tol)?;
            let mut r = Report::new("fuchsian monodromy", cfg);
            let defect = rep.relation_defect();
            if check_relation {
                r.check("relation", defect, cfg.relation_tol);
            }
            let mut result = json!({
                "representation": rep,
                "relation_defect": defect,
            });
            if chern {
                let branch = LogBranch { start: branch_start };
                let logs = rep
                    .matrices
                    .iter()
                    .map(|m| residue_log(m, branch))
                    .collect::<Result<Vec<_>, _>>()?;
                let c = chern_index(&rep, branch)?;
                r.check("chern_integrality", c.residual, mg_core::fuchsian::CHERN_RESIDUAL_TOL);
                result["residue_logs"] = crate::report::to_value(&logs)?;
                result["chern"] = crate::report::to_value(&c)?;
            }
            r.result = result;
            Ok(r)
        }
        FuchsianCmd::Log { matrix, branch_start } => {
            let m = input::load_matrix(&matrix)?;
            let e = residue_log(&m, LogBranch { start: branch_start })?;
            let back = e.scale(C64::new(0.0, std::f64::consts::TAU)).exp();
            let mut r = Report::new("fuchsian log", cfg);
            r.check("exp_roundtrip", back.distance(&m), cfg.relation_tol);
            r.set_result(&json!({ "log": e }))?;
            Ok(r)
        }
        FuchsianCmd::Integrability { conn } => {
            let conn = input::load_connection(&conn)?;
            let rep = integrability_check(&conn)?;
            let mut r = Report::new("fuchsian integrability", cfg);
            r.check("integrability", rep.max_violation, cfg.relation_tol);
            r.set_result(&rep)?;
            Ok(r)
        }
    }
}

// ---------------------------------------------------------------- synth

#[derive(Args)]
pub struct SynthArgs {
    /// Target family with a `forms` field naming the form basis.
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    loops: PathBuf,
    /// Transport the evaluated connection and compare with the targets.
    #[arg(long)]
    verify: bool,
}

fn synthesis_checks(r: &mut Report, syn: &Synthesis, cfg: &RunConfig) {
    let worst = syn.residuals.iter().flatten().copied().fold(0.0, f64::max);
    r.check("synthesis_residual", worst, cfg.relation_tol);
    r.warnings.extend(syn.warnings.iter().cloned());
    r.warnings.extend(evaluation_warnings(&syn.family, cfg.lambda()));
}

fn synth(args: SynthArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    let targets = input::load_targets(&args.targets)?;
    let loops = input::load_loops(&args.loops)?;
    let syn = synthesize(&targets.family, &targets.forms, &loops, cfg.order, cfg.tol)?;
    let mut r = Report::new("synth", cfg);
    synthesis_checks(&mut r, &syn, cfg);
    let mut result = json!({
        "family": syn.family,
        "period_matrix": syn.period_matrix,
        "residuals": syn.residuals,
        "radius_estimate": syn.radius_estimate,
        "connection": evaluate_at(&syn.family, cfg.lambda()),
    });
    if args.verify {
        let m = verify_match(&targets.family, &syn.family, cfg.lambda(), &loops, cfg.tol)?;
        r.check("monodromy_match", m.max_deviation, cfg.match_tol);
        result["verification"] = crate::report::to_value(&m)?;
    }
    r.result = result;
    Ok(r)
}

// ---------------------------------------------------------------- kz

#[derive(Args)]
pub struct KzArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    spin: f64,
}

#[derive(Subcommand)]
pub enum KzCmd {
    /// Braid generator matrices by transport along half-twists.
    Braid(KzArgs),
    /// Braid, far-commutation and pure-braid unitarity deviations.
    Verify {
        #[command(flatten)]
        kz: KzArgs,
        /// Also search for an invariant positive form.
        #[arg(long)]
        unitarize: bool,
    },
    /// The four orientation/flip conventions for two points.
    Conventions {
        #[arg(long, default_value_t = 0.5)]
        spin: f64,
    },
}

fn kz(cmd: KzCmd, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        KzCmd::Braid(a) => {
            let sys = uniform_kz(a.n, a.spin, cfg.lambda())?;
            let mats = braid_matrices(&sys, cfg.tol)?;
            let mut r = Report::new("kz braid", cfg);
            r.set_result(&json!({
                "n": a.n,
                "spin": a.spin,
                "dim": sys.dim(),
                "labels": (1..a.n).map(|i| format!("s{i}")).collect::<Vec<_>>(),
                "unitarity_defects": mats.iter().map(CMatrix::unitarity_defect).collect::<Vec<_>>(),
                "gates": mats,
            }))?;
            Ok(r)
        }
        KzCmd::Verify { kz: a, unitarize } => {
            let sys = uniform_kz(a.n, a.spin, cfg.lambda())?;
            let mats = braid_matrices(&sys, cfg.tol)?;
            let rep = verify_braid_relations(&mats, a.n, cfg.relation_tol)?;
            let mut r = Report::new("kz verify", cfg);
            for c in rep
                .braid
                .iter()
                .chain(&rep.far_commutation)
                .chain(rep.pure_braid_unitarity.iter().flatten())
            {
                r.check(&c.relation, c.violation, cfg.relation_tol);
            }
            if rep.pure_braid_unitarity.is_none() {
                r.warnings.push(
                    "generators are not unitary in the tensor basis; pure-braid unitarity skipped".into(),
                );
            }
            let mut result = crate::report::to_value(&rep)?;
            if unitarize {
                let u = unitarization(&mats, 20_000)?;
                if let Some(d) = u.max_unitarity_defect {
                    r.check("unitarized", d, cfg.unitarity_tol);
                } else {
                    r.warnings.push(format!(
                        "no positive invariant form found (definiteness {:.3e}, invariance defect {:.3e})",
                        u.definiteness, u.invariance_defect
                    ));
                }
                result["unitarization"] = crate::report::to_value(&u)?;
            }
            r.result = result;
            Ok(r)
        }
        KzCmd::Conventions { spin } => {
            let sys = uniform_kz(2, spin, cfg.lambda())?;
            let variants = braid_conventions(&sys, cfg.tol)?;
            let mut r = Report::new("kz conventions", cfg);
            r.set_result(&json!({ "variants": variants }))?;
            Ok(r)
        }
    }
}

// ---------------------------------------------------------------- universality

#[derive(Subcommand)]
pub enum UniversalityCmd {
    /// Abelian / finite-suspect / dense-likely screen.
    Screen {
        #[arg(long)]
        gates: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
        maxlen: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: f64,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
    },
    /// Fraction of Haar-random SU(2) targets within `eps` of the closure.
    Coverage {
        #[arg(long)]
        gates: PathBuf,
        #[arg(long, default_value_t = 12)]
        maxlen: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
    },
}

fn universality(cmd: UniversalityCmd, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        UniversalityCmd::Screen {
            gates,
            maxlen,
            grid,
            budget,
        } => {
            let (labels, gens) = input::load_gates(&gates, cfg.unitarity_tol)?;
            let gs = GateSet::new(labels, gens)?;
            let opts = ScreenOptions {
                max_len: maxlen,
                grid,
                node_budget: budget,
                ..ScreenOptions::default()
            };
            let rep = density_screen_with(&gs, &opts);
            let mut r = Report::new("universality screen", cfg);
            r.verdict = Some(rep.verdict.to_string());
            if rep.partial {
                r.warnings.push("node budget exhausted; closure sizes are partial".into());
            }
            r.set_result(&json!({ "labels": gs.labels, "screen": rep }))?;
            Ok(r)
        }
        UniversalityCmd::Coverage {
            gates,
            maxlen,
            eps,
            samples,
            budget,
        } => {
            let (labels, gens) = input::load_gates(&gates, cfg.unitarity_tol)?;
            let gs = GateSet::new(labels, gens)?;
            let opts = CoverageOptions {
                max_len: maxlen,
                eps,
                samples,
                seed: cfg.seed,
                node_budget: budget,
                ..CoverageOptions::default()
            };
            let rep = epsilon_net_coverage(&gs, &opts)?;
            let mut r = Report::new("universality coverage", cfg);
            if rep.partial {
                r.warnings.push("node budget exhausted; coverage is a lower bound".into());
            }
            r.set_result(&json!({ "labels": gs.labels, "coverage": rep }))?;
            Ok(r)
        }
    }
}

// ---------------------------------------------------------------- pipeline

#[derive(Args)]
pub struct PipelineArgs {
    /// Target family file (with `forms`); default is a seeded demo on C minus {0, 1}.
    #[arg(long, requires = "loops")]
    targets: Option<PathBuf>,
    #[arg(long, requires = "targets")]
    loops: Option<PathBuf>,
    /// Frobenius norm of the demo generators `H_j` in `exp(2 pi i lambda H_j)`; 0 gives zero targets.
    #[arg(long, default_value_t = 0.15)]
    target_norm: f64,
    /// Word length bound of the density screen.
    #[arg(long, default_value_t = 8)]
    maxlen: usize,
}

/// Random traceless Hermitian `2x2` matrices `H = b·σ` of the given norm.
fn demo_generators(count: usize, norm: f64, seed: u64) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u = haar_su2(&mut rng);
            // (U − U†)/2i = b·σ for U = a + i b·σ
            let h = (&u - &u.adjoint()).scale(C64::new(0.0, -0.5));
            let f = h.frobenius_norm();
            if f > 0.0 {
                h.scale(C64::new(norm / f, 0.0))
            } else {
                h
            }
        })
        .collect()
}

fn pipeline(args: PipelineArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    if !(args.target_norm >= 0.0 && args.target_norm.is_finite()) {
        return Err(CliError::Validation("--target-norm must be non-negative".into()));
    }
    let (targets, forms, loops) = match (&args.targets, &args.loops) {
        (Some(t), Some(l)) => {
            let t = input::load_targets(t)?;
            (t.family, t.forms, input::load_loops(l)?)
        }
        _ => {
            let poles = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
            let loops = generator_loops(C64::new(0.5, -1.0), &poles, 0.3)?;
            let hs = demo_generators(poles.len(), args.target_norm, cfg.seed);
            let family = RepresentationFamily::exponential(&hs, cfg.order)?;
            (family, FormBasis::Points { poles }, loops)
        }
    };
    let trivial = targets
        .coefficients()
        .iter()
        .flatten()
        .all(|m| m.max_abs() == 0.0);
    let syn = synthesize(&targets, &forms, &loops, cfg.order, cfg.tol)?;
    let m = verify_match(&targets, &syn.family, cfg.lambda(), &loops, cfg.tol)?;
    let mut r = Report::new("pipeline", cfg);
    synthesis_checks(&mut r, &syn, cfg);
    r.check("monodromy_match", m.max_deviation, cfg.match_tol);
    let identity = CMatrix::identity(targets.dim());
    let max_from_identity = m
        .monodromy
        .iter()
        .map(|x| x.distance(&identity))
        .fold(0.0, f64::max);

    // the verified monodromy is unitary up to the match error
    let gate_tol = cfg.unitarity_tol.max(10.0 * cfg.match_tol);
    let screen = m
        .monodromy
        .iter()
        .map(|x| QuantumGate::with_tolerance(x.clone(), gate_tol))
        .collect::<Result<Vec<_>, _>>()
        .and_then(GateSet::unlabeled)
        .map(|gs| {
            density_screen_with(
                &gs,
                &ScreenOptions {
                    max_len: args.maxlen,
                    ..ScreenOptions::default()
                },
            )
        });
    let verdict = if trivial {
        r.check("identity_monodromy", max_from_identity, cfg.match_tol);
        "trivially-consistent".to_string()
    } else if !r.passes() {
        "deviation-exceeded".to_string()
    } else {
        match &screen {
            Ok(s) => format!("verified-{}", s.verdict),
            Err(_) => "verified-not-unitary".to_string(),
        }
    };
    if let Err(e) = &screen {
        r.warnings.push(format!("density screen skipped: {e}"));
    }
    r.verdict = Some(verdict);
    r.set_result(&json!({
        "targets": targets,
        "forms": forms,
        "family": syn.family,
        "radius_estimate": syn.radius_estimate,
        "connection": evaluate_at(&syn.family, cfg.lambda()),
        "monodromy": m.monodromy,
        "max_distance_from_identity": max_from_identity,
        "verification": m,
        "screen": screen.ok(),
    }))?;
    Ok(r)
}
