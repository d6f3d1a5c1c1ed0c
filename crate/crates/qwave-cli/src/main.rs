//! Command-line front end for the conditional-symmetry workbench.
//!
//! One invocation produces one structured report document; `--json` emits
//! it verbatim, the default output is a text rendering of the same data.
//! Exit codes: 0 when every verdict passes, 1 on verification failure or a
//! semantic precondition (identically zero K, degenerate ansatz, singular
//! box), 2 on usage or parse errors.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qwave::detsys::cases::{
    case1_check_f, case1_f_condition, case1_from_t, case2_first_order_system, case3_construct,
};
use qwave::detsys::lie::{lightcone_transform, TransformDirection};
use qwave::detsys::{
    classify_case, regression_against_reference, system, system_ku_zero, CaseTag, SystemForm,
    VerifyOptions,
};
use qwave::expr::zero::{ZeroTest, DEFAULT_SEED, DEFAULT_TOLERANCE};
use qwave::expr::Expr;
use qwave::numeric::{fd_mixed_residual, Box2D, Compiled};
use qwave::reduction::{
    assemble_solution, check_characteristics, reduced_equation, reducibility_test, solve_omega,
    solve_sigma, LevelSetOptions, Reducibility,
};
use qwave::report::{Verdict, VerificationReport};
use qwave::session::{split_command, Session};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "qwave",
    version,
    about = "Conditional symmetries of u_yz = f(y,z,u)"
)]
struct Cli {
    /// Emit the machine-readable JSON document.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for probabilistic zero tests and sampling (echoed in reports).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative tolerance for numeric verdicts.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Session file: declarations, `let` definitions, optional commands.
    #[arg(long, global = true)]
    session: Option<std::path::PathBuf>,
    #[command(subcommand)]
    verb: Option<Verb>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    /// Q = d_y + K d_z + L d_u (four equations).
    #[value(name = "a-ne-0")]
    ANonzero,
    /// K = 0, condition u_y = L (two equations).
    #[value(name = "a-eq-0")]
    AZero,
}

impl From<FormArg> for SystemForm {
    fn from(f: FormArg) -> SystemForm {
        match f {
            FormArg::ANonzero => SystemForm::ANonzero,
            FormArg::AZero => SystemForm::AZero,
        }
    }
}

#[derive(Subcommand)]
enum Verb {
    /// Determining-system generation and regression.
    Detsys {
        #[command(subcommand)]
        action: DetsysAction,
    },
    /// Verify a candidate operator (K, L) with right side f.
    Verify(VerifyArgs),
    /// Classify K into the canonical cases.
    Classify {
        #[arg(long = "K")]
        k: String,
    },
    /// Build the Case-1 family from a generating function T(y,z).
    Case1(Case1Args),
    /// Case 2: the first-order pair for (L, f).
    Case2 {
        #[arg(long = "L")]
        l: String,
        #[arg(long = "f")]
        f: String,
    },
    /// Case 3: exponential family from (s, d).
    Case3 {
        #[arg(long = "s")]
        s: String,
        #[arg(long = "d")]
        d: String,
    },
    /// Reduce u_yz = f to an ODE along the invariant of T.
    Reduce(ReduceArgs),
    /// Light-cone change of variables for the right side.
    Transform(TransformArgs),
    /// Finite-difference residual of an explicit surface u(y,z).
    CheckNumeric(CheckNumericArgs),
}

#[derive(Subcommand)]
enum DetsysAction {
    /// Generate the determining system and diff it against the built-in
    /// reference transcription.
    Generate {
        #[arg(long, value_enum, default_value = "a-ne-0")]
        form: FormArg,
        /// Specialize to K_u = 0 (the Case-1 system).
        #[arg(long)]
        ku_zero: bool,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long = "f")]
    f: Option<String>,
    #[arg(long = "K", default_value = "1")]
    k: String,
    #[arg(long = "L")]
    l: String,
    #[arg(long, value_enum, default_value = "a-ne-0")]
    form: FormArg,
    /// Keep f opaque and report which equations constrain it.
    #[arg(long)]
    opaque_f: bool,
}

#[derive(Args)]
struct Case1Args {
    #[arg(long = "T")]
    t: String,
    /// Optional candidate f to check against the f-condition.
    #[arg(long = "f")]
    f: Option<String>,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long = "T")]
    t: String,
    /// Invariant variable omega(y,z); derived from T when omitted.
    #[arg(long)]
    omega: Option<String>,
    /// Multiplier sigma(y,z); derived from T when omitted.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long = "f", default_value = "0")]
    f: String,
    /// Integrate the reduced ODE and check the assembled surface.
    #[arg(long)]
    numeric: bool,
    /// Box y0,y1,z0,z1 for the numeric check.
    #[arg(long = "box", value_parser = parse_box, allow_negative_numbers = true)]
    bx: Option<Box2D>,
    /// Grid spacing for the finite-difference residual.
    #[arg(long)]
    h: Option<f64>,
    /// Integration step for the reduced ODE (default h/2).
    #[arg(long)]
    step: Option<f64>,
    /// Initial point omega0 (default: omega at the box midpoint).
    #[arg(long, allow_negative_numbers = true)]
    omega0: Option<f64>,
    /// phi(omega0).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    phi0: f64,
    /// phi'(omega0).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    dphi0: f64,
    /// Also measure the residual at h/2 and report the ratio.
    #[arg(long)]
    convergence: bool,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long = "F")]
    f_upper: String,
    /// Map f(y,z,u) back to F(t,x,u).
    #[arg(long)]
    inverse: bool,
    /// Apply forward then inverse and verify the identity.
    #[arg(long)]
    roundtrip: bool,
}

#[derive(Args)]
struct CheckNumericArgs {
    /// Surface u(y,z) in the DSL.
    #[arg(long = "u", conflicts_with = "grid")]
    u: Option<String>,
    /// Sampled surface as a plain-text grid file (header: ny nz y0 z0 h).
    #[arg(long)]
    grid: Option<std::path::PathBuf>,
    #[arg(long = "f", default_value = "0")]
    f: String,
    #[arg(long = "box", value_parser = parse_box, allow_negative_numbers = true)]
    bx: Option<Box2D>,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
}

fn parse_box(s: &str) -> Result<Box2D, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if parts.len() != 4 {
        return Err("expected y0,y1,z0,z1".into());
    }
    Box2D::new(parts[0], parts[1], parts[2], parts[3]).map_err(|e| e.to_string())
}

/// Errors split by exit code.
enum CliError {
    /// Exit 2: unusable input.
    Usage(String),
    /// Exit 1: the computation ran and failed a precondition or check.
    Failed(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
    fn failed(e: impl std::fmt::Display) -> Self {
        CliError::Failed(e.to_string())
    }
}

struct Ctx {
    session: Session,
    opts: VerifyOptions,
    seed: u64,
    tol: f64,
}

impl Ctx {
    fn parse(&self, text: &str) -> Result<Expr, CliError> {
        self.session.resolve(text).map_err(CliError::usage)
    }
}

struct Outcome {
    pass: bool,
    warnings: Vec<String>,
    payload: Value,
    human: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let tol = cli.tol.unwrap_or(DEFAULT_TOLERANCE);
    let mut zero_test = ZeroTest::with_seed(seed);
    zero_test.tolerance = tol;
    let mut ctx = Ctx {
        session: Session::new(),
        opts: VerifyOptions { zero_test },
        seed,
        tol,
    };

    if let Some(path) = &cli.session {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read session file {}: {e}", path.display());
                return ExitCode::from(2);
            }
        };
        if let Err(e) = ctx.session.load(&text) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }

    let outcomes: Vec<(String, Result<Outcome, CliError>)> = match &cli.verb {
        Some(verb) => vec![(verb_echo(verb), dispatch(verb, &ctx))],
        None => {
            if ctx.session.commands.is_empty() {
                eprintln!("error: no command given and the session file has none");
                return ExitCode::from(2);
            }
            let commands = ctx.session.commands.clone();
            commands
                .into_iter()
                .map(|(line_no, text)| {
                    let mut argv = vec!["qwave".to_string()];
                    argv.extend(split_command(&text));
                    match Cli::try_parse_from(&argv) {
                        Ok(sub) => match sub.verb {
                            Some(verb) => (text, dispatch(&verb, &ctx)),
                            None => (
                                text,
                                Err(CliError::Usage(format!("line {line_no}: empty command"))),
                            ),
                        },
                        Err(e) => (text, Err(CliError::Usage(format!("line {line_no}: {e}")))),
                    }
                })
                .collect()
        }
    };

    render_all(&cli, &ctx, outcomes)
}

fn render_all(
    cli: &Cli,
    ctx: &Ctx,
    outcomes: Vec<(String, Result<Outcome, CliError>)>,
) -> ExitCode {
    let mut worst = 0u8;
    let mut results = Vec::new();
    let mut human_all = String::new();
    for (echo, outcome) in outcomes {
        match outcome {
            Ok(o) => {
                if !o.pass {
                    worst = worst.max(1);
                }
                results.push(json!({
                    "command": echo,
                    "pass": o.pass,
                    "warnings": o.warnings,
                    "result": o.payload,
                }));
                human_all.push_str(&format!("$ {echo}\n"));
                human_all.push_str(&o.human);
                for w in &o.warnings {
                    human_all.push_str(&format!("warning: {w}\n"));
                }
                human_all.push_str(&format!(
                    "verdict: {}\n\n",
                    if o.pass { "pass" } else { "FAIL" }
                ));
            }
            Err(CliError::Usage(msg)) => {
                worst = worst.max(2);
                results.push(json!({ "command": echo, "error": msg, "usage_error": true }));
                human_all.push_str(&format!("$ {echo}\nerror: {msg}\n\n"));
            }
            Err(CliError::Failed(msg)) => {
                worst = worst.max(1);
                results.push(json!({ "command": echo, "error": msg, "usage_error": false }));
                human_all.push_str(&format!("$ {echo}\nerror: {msg}\n\n"));
            }
        }
    }
    let pass = worst == 0;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "seed": ctx.seed,
        "tolerance": ctx.tol,
        "pass": pass,
        "results": results,
    });
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        );
    } else {
        print!(
            "seed: {}  tolerance: {:e}\n\n{human_all}",
            ctx.seed, ctx.tol
        );
    }
    ExitCode::from(worst)
}

fn verb_echo(verb: &Verb) -> String {
    match verb {
        Verb::Detsys { .. } => "detsys".into(),
        Verb::Verify(_) => "verify".into(),
        Verb::Classify { .. } => "classify".into(),
        Verb::Case1(_) => "case1".into(),
        Verb::Case2 { .. } => "case2".into(),
        Verb::Case3 { .. } => "case3".into(),
        Verb::Reduce(_) => "reduce".into(),
        Verb::Transform(_) => "transform".into(),
        Verb::CheckNumeric(_) => "check-numeric".into(),
    }
}

fn dispatch(verb: &Verb, ctx: &Ctx) -> Result<Outcome, CliError> {
    match verb {
        Verb::Detsys { action } => match action {
            DetsysAction::Generate { form, ku_zero } => cmd_detsys_generate(*form, *ku_zero),
        },
        Verb::Verify(args) => cmd_verify(args, ctx),
        Verb::Classify { k } => cmd_classify(k, ctx),
        Verb::Case1(args) => cmd_case1(args, ctx),
        Verb::Case2 { l, f } => cmd_case2(l, f, ctx),
        Verb::Case3 { s, d } => cmd_case3(s, d, ctx),
        Verb::Reduce(args) => cmd_reduce(args, ctx),
        Verb::Transform(args) => cmd_transform(args, ctx),
        Verb::CheckNumeric(args) => cmd_check_numeric(args, ctx),
    }
}

fn render_verdict(v: &Verdict) -> String {
    match v {
        Verdict::Zero => "zero (symbolic)".into(),
        Verdict::ZeroProbabilistic { max_abs } => {
            format!("zero (probabilistic only, max |r| = {max_abs:.3e})")
        }
        Verdict::NonZero { residual, max_abs } => match max_abs {
            Some(m) => format!("NONZERO (max |r| = {m:.3e}): {residual}"),
            None => format!("NONZERO: {residual}"),
        },
        Verdict::Constrains { unknown, residual } => {
            format!("constrains {unknown}: 0 = {residual}")
        }
    }
}

fn render_report(r: &VerificationReport, out: &mut String) {
    for item in &r.items {
        let origin = item
            .origin
            .as_ref()
            .map(|o| format!(" [{o}]"))
            .unwrap_or_default();
        out.push_str(&format!(
            "  {}{}: {}\n",
            item.label,
            origin,
            render_verdict(&item.verdict)
        ));
    }
    if r.probabilistic_only {
        out.push_str("  note: some verdicts rest on sampling, not symbolic proof\n");
    }
}

fn report_warnings(r: &VerificationReport) -> Vec<String> {
    if r.probabilistic_only {
        vec!["probabilistic-only zero verdicts present".into()]
    } else {
        Vec::new()
    }
}

fn cmd_detsys_generate(form: FormArg, ku_zero: bool) -> Result<Outcome, CliError> {
    let sys = if ku_zero {
        if form != FormArg::ANonzero {
            return Err(CliError::Usage(
                "--ku-zero applies to the a-ne-0 form".into(),
            ));
        }
        system_ku_zero().map_err(CliError::failed)?
    } else {
        system(form.into()).map_err(CliError::failed)?
    };
    let regression = regression_against_reference(&sys).map_err(CliError::failed)?;
    let mut human = format!(
        "determining system ({}), {} equation(s)\n",
        match (form, ku_zero) {
            (FormArg::ANonzero, false) => "a != 0",
            (FormArg::ANonzero, true) => "a != 0, K_u = 0",
            (FormArg::AZero, _) => "a = 0, condition u_y = L",
        },
        sys.members.len()
    );
    for row in &regression.rows {
        human.push_str(&format!(
            "  [{}] coefficient of {}:\n      generated: {} = 0\n      reference: {} = 0\n      match: {}\n",
            row.index, row.origin, row.generated, row.reference, row.matches
        ));
    }
    Ok(Outcome {
        pass: regression.all_match,
        warnings: Vec::new(),
        payload: json!({ "system": sys, "regression": regression }),
        human,
    })
}

fn cmd_verify(args: &VerifyArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let k = ctx.parse(&args.k)?;
    let l = ctx.parse(&args.l)?;
    let f = match (&args.f, args.opaque_f) {
        (Some(_), true) => return Err(CliError::Usage("--f and --opaque-f are exclusive".into())),
        (Some(f), false) => Some(ctx.parse(f)?),
        (None, true) => None,
        (None, false) => {
            return Err(CliError::Usage(
                "either --f or --opaque-f is required".into(),
            ))
        }
    };
    let report =
        qwave::detsys::verify_conditional_operator(f.as_ref(), &k, &l, args.form.into(), &ctx.opts)
            .map_err(CliError::failed)?;
    let mut human = String::new();
    render_report(&report, &mut human);
    Ok(Outcome {
        pass: report.pass,
        warnings: report_warnings(&report),
        payload: json!({
            "K": k.to_dsl(),
            "L": l.to_dsl(),
            "f": f.as_ref().map(|e| e.to_dsl()),
            "report": report,
        }),
        human,
    })
}

fn cmd_classify(k_text: &str, ctx: &Ctx) -> Result<Outcome, CliError> {
    let k = ctx.parse(k_text)?;
    let tag = classify_case(&k, &ctx.opts).map_err(CliError::failed)?;
    let (name, pass) = match tag {
        CaseTag::Case1 => ("case 1 (K_u = 0, K != 0)".to_string(), true),
        CaseTag::Case2 => ("case 2 (K = 0)".to_string(), true),
        CaseTag::Case3 {
            exponential_structure,
        } => (
            format!(
                "case 3 (K_u != 0, exponential structure: {})",
                if exponential_structure { "yes" } else { "no" }
            ),
            true,
        ),
        CaseTag::Undecided => ("undecided".to_string(), false),
    };
    Ok(Outcome {
        pass,
        warnings: Vec::new(),
        payload: json!({ "K": k.to_dsl(), "tag": tag }),
        human: format!("  K = {}\n  classification: {}\n", k.to_dsl(), name),
    })
}

fn cmd_case1(args: &Case1Args, ctx: &Ctx) -> Result<Outcome, CliError> {
    let t = ctx.parse(&args.t)?;
    let fam = case1_from_t(&t).map_err(CliError::failed)?;
    let condition = case1_f_condition(&fam.k, &fam.l).map_err(CliError::failed)?;
    let mut human = format!(
        "  T = {}\n  K = {}\n  s = {}\n  L = {}\n  f condition: 0 = {}\n",
        fam.t.to_dsl(),
        fam.k.to_dsl(),
        fam.s.to_dsl(),
        fam.l.to_dsl(),
        condition.to_dsl()
    );
    let mut pass = true;
    let mut warnings = Vec::new();
    let f_check = match &args.f {
        Some(f_text) => {
            let f = ctx.parse(f_text)?;
            let rep = case1_check_f(&fam.k, &fam.l, &f, &ctx.opts).map_err(CliError::failed)?;
            human.push_str(&format!("  candidate f = {}\n", f.to_dsl()));
            render_report(&rep, &mut human);
            pass = rep.pass;
            warnings = report_warnings(&rep);
            Some(rep)
        }
        None => None,
    };
    Ok(Outcome {
        pass,
        warnings,
        payload: json!({
            "family": fam,
            "f_condition": condition.to_dsl(),
            "f_check": f_check,
        }),
        human,
    })
}

fn cmd_case2(l_text: &str, f_text: &str, ctx: &Ctx) -> Result<Outcome, CliError> {
    let l = ctx.parse(l_text)?;
    let f = ctx.parse(f_text)?;
    let sys = case2_first_order_system(&l, &f).map_err(CliError::failed)?;
    let compat = ctx
        .opts
        .zero_test
        .verdict(&sys.compatibility, &qwave::Bindings::new())
        .map_err(CliError::failed)?;
    let compat_verdict = Verdict::from_outcome(&compat, &sys.compatibility);
    let determining = qwave::detsys::verify_conditional_operator(
        Some(&f),
        &Expr::zero(),
        &l,
        SystemForm::AZero,
        &ctx.opts,
    )
    .map_err(CliError::failed)?;
    let mut human = format!(
        "  first-order pair:\n    u_y = {}\n    u_z = {}\n  compatibility: {}\n  determining equations:\n",
        sys.uy_rhs.to_dsl(),
        sys.uz_rhs.to_dsl(),
        render_verdict(&compat_verdict)
    );
    render_report(&determining, &mut human);
    let pass = compat_verdict.passes() && determining.pass;
    Ok(Outcome {
        pass,
        warnings: report_warnings(&determining),
        payload: json!({
            "system": sys,
            "compatibility": compat_verdict,
            "determining": determining,
        }),
        human,
    })
}

fn cmd_case3(s_text: &str, d_text: &str, ctx: &Ctx) -> Result<Outcome, CliError> {
    let s = ctx.parse(s_text)?;
    let d = ctx.parse(d_text)?;
    let fam = case3_construct(&s, &d, &ctx.opts).map_err(CliError::failed)?;
    let mut human = format!(
        "  K = {}\n  L = {}\n  f = {}\n  constraints:\n",
        fam.k.to_dsl(),
        fam.l.to_dsl(),
        fam.f.to_dsl()
    );
    render_report(&fam.constraints, &mut human);
    human.push_str("  determining system:\n");
    render_report(&fam.system, &mut human);
    let pass = fam.constraints.pass && fam.system.pass;
    let warnings = [
        report_warnings(&fam.constraints),
        report_warnings(&fam.system),
    ]
    .concat();
    Ok(Outcome {
        pass,
        warnings,
        payload: json!({ "family": fam }),
        human,
    })
}

fn cmd_transform(args: &TransformArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let input = ctx.parse(&args.f_upper)?;
    let header = "convention: y = t + x, z = t - x; u_tt - u_xx = 4 u_yz, f = F/4";
    if args.roundtrip {
        let fwd =
            lightcone_transform(&input, TransformDirection::Forward).map_err(CliError::failed)?;
        let back =
            lightcone_transform(&fwd, TransformDirection::Inverse).map_err(CliError::failed)?;
        let identical = back == input;
        return Ok(Outcome {
            pass: identical,
            warnings: Vec::new(),
            payload: json!({
                "convention": header,
                "input": input.to_dsl(),
                "forward": fwd.to_dsl(),
                "back": back.to_dsl(),
                "roundtrip_identity": identical,
            }),
            human: format!(
                "  {header}\n  F = {}\n  f = {}\n  back = {}\n  round trip identity: {identical}\n",
                input.to_dsl(),
                fwd.to_dsl(),
                back.to_dsl()
            ),
        });
    }
    let dir = if args.inverse {
        TransformDirection::Inverse
    } else {
        TransformDirection::Forward
    };
    let result = lightcone_transform(&input, dir).map_err(CliError::failed)?;
    let (from, to) = if args.inverse { ("f", "F") } else { ("F", "f") };
    Ok(Outcome {
        pass: true,
        warnings: Vec::new(),
        payload: json!({
            "convention": header,
            "direction": if args.inverse { "inverse" } else { "forward" },
            "input": input.to_dsl(),
            "result": result.to_dsl(),
        }),
        human: format!(
            "  {header}\n  {from} = {}\n  {to} = {}\n",
            input.to_dsl(),
            result.to_dsl()
        ),
    })
}

fn cmd_check_numeric(args: &CheckNumericArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let f = ctx.parse(&args.f)?;
    let f_c = Compiled::new(&f, &["y", "z", "u"]).map_err(CliError::failed)?;
    // A reporting command: the gate defaults to the stencil scale, not the
    // symbolic zero tolerance.
    let gate = if ctx.tol == DEFAULT_TOLERANCE {
        1e-6
    } else {
        ctx.tol
    };

    let (stats, surface_desc, bx, h) = match (&args.u, &args.grid) {
        (Some(u_text), None) => {
            let u = ctx.parse(u_text)?;
            let bx = args.bx.unwrap_or_else(Box2D::default_box);
            qwave::numeric::validate_box(&[&u, &f], &bx.grow(args.h)).map_err(CliError::failed)?;
            let u_c = Compiled::new(&u, &["y", "z"]).map_err(CliError::failed)?;
            let stats = fd_mixed_residual(
                &|y, z| u_c.eval(&[y, z]),
                &|y, z, uv| f_c.eval(&[y, z, uv]),
                &bx,
                args.h,
            )
            .map_err(CliError::failed)?;
            (stats, u.to_dsl(), bx, args.h)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let grid = qwave::numeric::Grid2D::read_text(&text).map_err(CliError::usage)?;
            let bx = Box2D::new(
                grid.y0,
                grid.y0 + (grid.ny - 1) as f64 * grid.h,
                grid.z0,
                grid.z0 + (grid.nz - 1) as f64 * grid.h,
            )
            .map_err(CliError::usage)?;
            let h = grid.h;
            let stats =
                qwave::numeric::fd_mixed_residual_grid(&grid, &|y, z, uv| f_c.eval(&[y, z, uv]))
                    .map_err(CliError::failed)?;
            (stats, format!("grid {}", path.display()), bx, h)
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --u or --grid is required".into(),
            ))
        }
    };
    let pass = stats.max_abs <= gate;
    Ok(Outcome {
        pass,
        warnings: Vec::new(),
        payload: json!({
            "u": surface_desc,
            "f": f.to_dsl(),
            "box": bx,
            "h": h,
            "stats": stats,
            "gate": gate,
        }),
        human: format!(
            "  residual of u_yz - f on [{}, {}] x [{}, {}], h = {:e}\n  max |r| = {:.6e} (gate {gate:e}), mean |r| = {:.6e}, {} nodes\n",
            bx.y0, bx.y1, bx.z0, bx.z1, h, stats.max_abs, stats.mean_abs, stats.nodes
        ),
    })
}

fn cmd_reduce(args: &ReduceArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let t = ctx.parse(&args.t)?;
    let f = ctx.parse(&args.f)?;
    let fam = case1_from_t(&t).map_err(CliError::failed)?;

    // omega and sigma: explicit flags, then the catalog, then patterns.
    let omega = match &args.omega {
        Some(text) => ctx.parse(text)?,
        None => derive_omega(&t, &fam.k).map_err(CliError::Failed)?,
    };
    let sigma = match &args.sigma {
        Some(text) => ctx.parse(text)?,
        None => derive_sigma(&t, &fam.s).map_err(CliError::Failed)?,
    };

    let characteristics =
        check_characteristics(&t, &omega, &sigma, &ctx.opts).map_err(CliError::failed)?;
    let mut human = format!(
        "  T = {}\n  K = {}\n  s = {}\n  omega = {}\n  sigma = {}\n  characteristics:\n",
        t.to_dsl(),
        fam.k.to_dsl(),
        fam.s.to_dsl(),
        omega.to_dsl(),
        sigma.to_dsl()
    );
    render_report(&characteristics, &mut human);
    if !characteristics.pass {
        return Ok(Outcome {
            pass: false,
            warnings: vec!["characteristic equations failed; reduction not attempted".into()],
            payload: json!({
                "family": fam,
                "omega": omega.to_dsl(),
                "sigma": sigma.to_dsl(),
                "characteristics": characteristics,
            }),
            human,
        });
    }

    let mut pkg = reduced_equation(&sigma, &omega, &f).map_err(CliError::failed)?;
    pkg.t = Some(t.to_dsl());
    pkg.k = Some(fam.k.to_dsl());
    pkg.s = Some(fam.s.to_dsl());
    let level_opts = LevelSetOptions {
        seed: ctx.seed,
        tolerance: ctx.tol.max(1e-12),
        ..Default::default()
    };
    let reducibility = reducibility_test(&pkg, &level_opts).map_err(CliError::failed)?;

    human.push_str(&format!(
        "  A0 = {}\n  A1 = {}\n  A2 = {}\n",
        pkg.a0.to_dsl(),
        pkg.a1.to_dsl(),
        pkg.a2.to_dsl()
    ));
    human.push_str(&format!("  normalized ODE: {}\n", ode_text(&pkg)));
    human.push_str(&format!("  reducibility: {reducibility:?}\n"));

    let mut warnings = report_warnings(&characteristics);
    let mut pass = reducibility != Reducibility::NotReducible;
    let mut numeric_payload = Value::Null;

    if args.numeric && pass {
        let (payload, text, num_pass) = run_numeric_reduction(args, &pkg)?;
        numeric_payload = payload;
        human.push_str(&text);
        pass = pass && num_pass;
    } else if args.numeric {
        warnings.push("numeric check skipped: not reducible".into());
    }

    Ok(Outcome {
        pass,
        warnings,
        payload: json!({
            "family": fam,
            "characteristics": characteristics,
            "package": pkg,
            "ode": ode_text(&pkg),
            "reducibility": reducibility,
            "numeric": numeric_payload,
        }),
        human,
    })
}

fn ode_text(pkg: &qwave::reduction::ReductionPackage) -> String {
    let show = |o: &Option<Expr>| {
        o.as_ref()
            .map(|e| e.to_dsl())
            .unwrap_or_else(|| "<not a function of omega>".into())
    };
    format!(
        "phi'' + ({})*phi' + ({})*phi = {}",
        show(&pkg.p_of_omega),
        show(&pkg.q_of_omega),
        show(&pkg.r_of_omega)
    )
}

fn derive_omega(t: &Expr, k: &Expr) -> Result<Expr, String> {
    let t_canon = t.simplify().map_err(|e| e.to_string())?;
    for entry in qwave::reduction::catalog() {
        if entry.t == t_canon {
            return Ok(entry.omega);
        }
    }
    match solve_omega(k) {
        Ok(Some(omega)) => Ok(omega),
        Ok(None) => Err(format!(
            "no closed-form invariant found for K = {}; pass --omega explicitly",
            k.to_dsl()
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn derive_sigma(t: &Expr, s: &Expr) -> Result<Expr, String> {
    let t_canon = t.simplify().map_err(|e| e.to_string())?;
    for entry in qwave::reduction::catalog() {
        if entry.t == t_canon {
            return Ok(entry.sigma);
        }
    }
    match solve_sigma(s) {
        Ok(Some(sigma)) => Ok(sigma),
        Ok(None) => Err(format!(
            "no closed-form multiplier found for s = {}; pass --sigma explicitly",
            s.to_dsl()
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn run_numeric_reduction(
    args: &ReduceArgs,
    pkg: &qwave::reduction::ReductionPackage,
) -> Result<(Value, String, bool), CliError> {
    let (Some(p), Some(q), Some(r)) = (&pkg.p_of_omega, &pkg.q_of_omega, &pkg.r_of_omega) else {
        return Err(CliError::Failed(
            "numeric integration needs the symbolic omega-form of every coefficient".into(),
        ));
    };
    let bx = args.bx.unwrap_or_else(Box2D::default_box);
    let h = args.h.unwrap_or(1e-3);
    let step = args.step.unwrap_or(h / 2.0);

    qwave::numeric::validate_box(&[&pkg.sigma, &pkg.omega, &pkg.f], &bx.grow(h))
        .map_err(CliError::failed)?;

    let omega_c = Compiled::new(&pkg.omega, &["y", "z"]).map_err(CliError::failed)?;
    let span = omega_span(&omega_c, &bx.grow(h)).map_err(CliError::failed)?;
    let p_c = Compiled::new(p, &["omega"]).map_err(CliError::failed)?;
    let q_c = Compiled::new(q, &["omega"]).map_err(CliError::failed)?;
    let r_c = Compiled::new(r, &["omega"]).map_err(CliError::failed)?;
    // Guard against coefficient singularities inside the span.
    for probe in 0..=1000 {
        let w = span.0 + (span.1 - span.0) * probe as f64 / 1000.0;
        for c in [&p_c, &q_c, &r_c] {
            c.eval(&[w]).map_err(|e| {
                CliError::Failed(format!("coefficient singular inside omega span: {e}"))
            })?;
        }
    }

    let omega0 = match args.omega0 {
        Some(w) => w,
        None => omega_c
            .eval(&[(bx.y0 + bx.y1) / 2.0, (bx.z0 + bx.z1) / 2.0])
            .map_err(CliError::failed)?,
    };
    let rhs = move |w: f64, phi: f64, dphi: f64| -> Result<f64, qwave::numeric::NumericError> {
        Ok(r_c.eval(&[w])? - p_c.eval(&[w])? * dphi - q_c.eval(&[w])? * phi)
    };
    let phi =
        qwave::numeric::integrate_second_order(&rhs, omega0, args.phi0, args.dphi0, span, step)
            .map_err(CliError::failed)?;
    let surface = assemble_solution(pkg, phi).map_err(CliError::failed)?;
    let f_c = Compiled::new(&pkg.f, &["y", "z"]).map_err(CliError::failed)?;

    let stats = fd_mixed_residual(
        &|y, z| surface.eval(y, z),
        &|y, z, _u| f_c.eval(&[y, z]),
        &bx,
        h,
    )
    .map_err(CliError::failed)?;
    let mut human = format!(
        "  numeric: omega span [{:.6}, {:.6}], omega0 = {omega0}, phi0 = {}, phi0' = {}, step = {step:e}\n  FD residual at h = {h:e}: max |r| = {:.6e}, mean = {:.6e}\n",
        span.0, span.1, args.phi0, args.dphi0, stats.max_abs, stats.mean_abs
    );
    let gate = 1e-5f64;
    let mut pass = stats.max_abs < gate;
    let mut payload = json!({
        "box": bx,
        "h": h,
        "step": step,
        "omega_span": [span.0, span.1],
        "omega0": omega0,
        "phi0": args.phi0,
        "dphi0": args.dphi0,
        "stats": stats,
        "gate": gate,
    });
    if args.convergence {
        let phi2 = qwave::numeric::integrate_second_order(
            &rhs,
            omega0,
            args.phi0,
            args.dphi0,
            span,
            step / 2.0,
        )
        .map_err(CliError::failed)?;
        let surface2 = assemble_solution(pkg, phi2).map_err(CliError::failed)?;
        let mut stats2 = fd_mixed_residual(
            &|y, z| surface2.eval(y, z),
            &|y, z, _u| f_c.eval(&[y, z]),
            &bx,
            h / 2.0,
        )
        .map_err(CliError::failed)?;
        let ratio = stats.max_abs / stats2.max_abs;
        stats2.slope = Some(qwave::numeric::convergence_slope(
            stats.max_abs,
            stats2.max_abs,
        ));
        human.push_str(&format!(
            "  halving h: max |r| = {:.6e}, ratio = {ratio:.3} (second-order target 4)\n",
            stats2.max_abs
        ));
        payload["halved"] = json!({ "h": h / 2.0, "stats": stats2, "ratio": ratio });
        pass = pass && (3.2..=4.8).contains(&ratio);
    }
    Ok((payload, human, pass))
}

fn omega_span(omega: &Compiled, bx: &Box2D) -> Result<(f64, f64), qwave::numeric::NumericError> {
    const N: usize = 200;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..=N {
        let y = bx.y0 + (bx.y1 - bx.y0) * i as f64 / N as f64;
        for j in 0..=N {
            let z = bx.z0 + (bx.z1 - bx.z0) * j as f64 / N as f64;
            let w = omega.eval(&[y, z])?;
            lo = lo.min(w);
            hi = hi.max(w);
        }
    }
    let margin = 1e-6 * (hi - lo).abs().max(1e-6);
    Ok((lo - margin, hi + margin))
}
