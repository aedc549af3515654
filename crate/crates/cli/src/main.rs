//! `posop`: batch front-end for certificates, falsification, convergence
//! traces, constructions and sampling campaigns.
//!
//! Exit codes: 0 success, 2 invalid input, 3 falsified / rejected,
//! 4 numerical non-convergence.

mod io;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use posop::certificates::{
    class_m_certificate, delta_for_corner, diameter_certificate, falsify, FalsifyParams, FamilyMember,
};
use posop::constructions::{
    density_embed, diagonal_non_attainer, extend_with_full_norming, locate_norming_representative,
    seq_non_attaining, seq_norm_deficit, seq_zero_row, HarmonicSchedule, Sequence,
};
use posop::norms::{
    norming_vector, operator_norm_with, verify_norming_with, POWER_MAX_ITERATIONS, VERIFY_TOLERANCE,
};
use posop::topologies::{converge_report, ConvergeParams, CONVERGENCE_CSV_HEADER};
use posop::typicality::{run_campaign, EntryDistribution, NormTarget, Probe, SamplerSpec, CAMPAIGN_CSV_HEADER};
use posop::{GeometricTail, OperatorModel};

use crate::io::{
    check_input, check_output, csv_string, invalid, read_json, read_operator, read_vector, to_json_line,
    CliError, CliResult, Output,
};

#[derive(Debug, Parser)]
#[command(name = "posop", version, about = "Positive-operator laboratory on weighted sequence spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a continuity certificate (or, with --eta, a small-diameter neighbourhood).
    Certify(CertifyArgs),
    /// Search a certificate's neighbourhood for a violating operator.
    Falsify(FalsifyArgs),
    /// Trace gaps of a named sequence against its limit.
    Converge(ConvergeArgs),
    /// Build extensions, embeddings, sequences and non-attainers.
    #[command(subcommand)]
    Construct(ConstructCommand),
    /// Run a sampling campaign of random positive contractions.
    Sample(SampleArgs),
    /// Operator norm and attainment of an operator file.
    Norm(NormArgs),
    /// Check a vector against the norming law.
    VerifyNorming(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
struct CertifyArgs {
    #[arg(long)]
    op: PathBuf,
    /// Norming vector of the adjoint; computed when omitted.
    #[arg(long)]
    u: Option<PathBuf>,
    #[arg(long, required_unless_present = "eta")]
    eps: Option<f64>,
    /// Norming family (JSON array of members) for a class-M certificate.
    #[arg(long, requires = "eps", conflicts_with = "eta")]
    class_m: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    r: usize,
    /// Diameter bound; writes a neighbourhood instead of a certificate.
    #[arg(long, conflicts_with = "eps")]
    eta: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct FalsifyArgs {
    #[arg(long)]
    cert: PathBuf,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 200)]
    climbs: usize,
    #[arg(long, default_value_t = 200)]
    climb_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Full report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Where the witness goes on a violation; defaults next to the certificate.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SequenceArgs {
    /// prop_norm_deficit, prop_zero_row or prop_non_attaining.
    #[arg(long)]
    seq: String,
    /// Parameters as JSON: {"delta"}, {"l"} or {"shift","c","r"}.
    #[arg(long, default_value = "{}")]
    param: String,
    /// The limit operator (T, or A for the non-attaining sequence).
    #[arg(long)]
    limit: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ConvergeArgs {
    #[command(flatten)]
    sequence: SequenceArgs,
    #[arg(long, default_value_t = 0)]
    start: usize,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    r: usize,
    #[arg(long, default_value_t = 20)]
    cutoff: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Verdicts and parameters (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ConstructCommand {
    /// Norm-one extension with a fully supported norming vector.
    Extend(ExtendArgs),
    /// Norm-one representative with full-support norming image near a center.
    Representative(RepresentativeArgs),
    /// Block plus identity tail, with norming families for T and T*.
    Embed(EmbedArgs),
    /// Diagonal operator 1 - c r^n.
    NonAttainer(NonAttainerArgs),
    /// Materialize one element of a named sequence.
    Sequence(MaterializeArgs),
}

#[derive(Debug, Args, Serialize)]
struct ExtendArgs {
    #[arg(long)]
    op: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    u_out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct RepresentativeArgs {
    #[arg(long)]
    op: PathBuf,
    #[arg(long, default_value_t = 0)]
    r: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    n0: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    u_out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EmbedArgs {
    #[arg(long)]
    op: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: PathBuf,
    /// Norming family of T* (for certify --class-m).
    #[arg(long)]
    family_out: PathBuf,
    /// Norming family of T.
    #[arg(long)]
    family_prime_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct NonAttainerArgs {
    #[arg(long)]
    c: f64,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct MaterializeArgs {
    #[command(flatten)]
    sequence: SequenceArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    #[arg(long, default_value_t = 30)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// uniform, exponential or sparse:<density>.
    #[arg(long, default_value = "uniform")]
    dist: String,
    /// Rescale every sample to norm 1 - eta instead of capping at 1.
    #[arg(long)]
    near1: Option<f64>,
    /// Comma-separated probe names.
    #[arg(long, value_delimiter = ',', default_value = "not_coisometry,irreducible")]
    probes: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Summary (spec, per-probe fractions, sampler note) as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct NormArgs {
    #[arg(long)]
    op: PathBuf,
    /// Iteration cap for p != 2.
    #[arg(long, default_value_t = POWER_MAX_ITERATIONS)]
    max_iterations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    op: PathBuf,
    #[arg(long)]
    u: PathBuf,
    /// Check against T* instead of T.
    #[arg(long)]
    adjoint: bool,
    #[arg(long, default_value_t = VERIFY_TOLERANCE)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Certify(a) => cmd_certify(a),
        Command::Falsify(a) => cmd_falsify(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Construct(c) => cmd_construct(c),
        Command::Sample(a) => cmd_sample(a),
        Command::Norm(a) => cmd_norm(a),
        Command::VerifyNorming(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("posop: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn inputs(paths: &[&Path]) -> CliResult<()> {
    paths.iter().try_for_each(|p| check_input(p))
}

fn outputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> CliResult<()> {
    paths.into_iter().try_for_each(check_output)
}

fn cmd_certify(a: &CertifyArgs) -> CliResult<()> {
    inputs(&[&a.op])?;
    if let Some(u) = &a.u {
        check_input(u)?;
    }
    if let Some(f) = &a.class_m {
        check_input(f)?;
    }
    check_output(&a.out)?;

    let b = read_operator(&a.op)?;
    let out = Output::new("certify", a);
    if let Some(family) = &a.class_m {
        let family: Vec<FamilyMember> = read_json(family)?;
        let eps = a.eps.expect("clap requires eps");
        let cert = class_m_certificate(&b, &family, eps, a.r)?;
        return out.write(&a.out, &(cert.to_json() + "\n"));
    }
    let u = match &a.u {
        Some(path) => read_vector(path)?,
        None => match norming_vector(&b.adjoint()) {
            Ok(c) => c.u,
            Err(posop::Error::NotAttained) => {
                return Err(invalid(
                    "B* does not attain its norm; supply a norming vector with --u",
                ))
            }
            Err(e) => return Err(e.into()),
        },
    };
    if let Some(eta) = a.eta {
        let w = diameter_certificate(&b, &u, eta)?;
        return out.write_json(&a.out, &w);
    }
    let cert = delta_for_corner(&b, &u, a.eps.expect("clap requires eps or eta"))?;
    out.write(&a.out, &(cert.to_json() + "\n"))
}

fn default_witness_path(cert: &Path) -> PathBuf {
    let stem = cert.file_stem().map_or_else(|| "certificate".into(), |s| s.to_string_lossy().into_owned());
    cert.with_file_name(format!("{stem}.witness.json"))
}

fn cmd_falsify(a: &FalsifyArgs) -> CliResult<()> {
    inputs(&[&a.cert])?;
    let witness_path = a.witness.clone().unwrap_or_else(|| default_witness_path(&a.cert));
    outputs(a.report.as_deref().into_iter().chain([witness_path.as_path()]))?;

    let text = std::fs::read_to_string(&a.cert).map_err(|source| CliError::Io {
        path: a.cert.clone(),
        source,
    })?;
    let cert = posop::certificates::ContinuityCertificate::from_json(&text).map_err(|source| {
        CliError::Parse {
            path: a.cert.clone(),
            source,
        }
    })?;
    let params = FalsifyParams {
        trials: a.trials,
        climbs: a.climbs,
        climb_steps: a.climb_steps,
        seed: a.seed,
    };
    let report = falsify(&cert, params)?;
    let out = Output::new("falsify", a);
    if let Some(path) = &a.report {
        out.write_json(path, &report)?;
    }
    println!(
        "max gap {} (epsilon {}, {} samples, {} evaluations)",
        report.max_gap, report.epsilon, report.accepted_samples, report.evaluations
    );
    if report.violated {
        out.write(&witness_path, &(report.witness.to_json() + "\n"))?;
        return Err(CliError::Rejected(format!(
            "certificate violated: gap {} >= {}; witness in {}",
            report.max_gap,
            report.epsilon,
            witness_path.display()
        )));
    }
    Ok(())
}

fn param_f64(param: &Value, key: &str) -> CliResult<f64> {
    param
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| invalid(format!("--param needs a numeric \"{key}\"")))
}

fn build_sequence(a: &SequenceArgs) -> CliResult<(Sequence, OperatorModel)> {
    check_input(&a.limit)?;
    let param: Value =
        serde_json::from_str(&a.param).map_err(|e| invalid(format!("--param is not JSON: {e}")))?;
    let limit = read_operator(&a.limit)?;
    let seq = match a.seq.as_str() {
        "prop_norm_deficit" => seq_norm_deficit(&limit, param_f64(&param, "delta")?)?,
        "prop_zero_row" => {
            let l = param
                .get("l")
                .and_then(Value::as_u64)
                .ok_or_else(|| invalid("--param needs an integer \"l\""))?;
            seq_zero_row(&limit, l as usize)?
        }
        "prop_non_attaining" => {
            let shift = param.get("shift").and_then(Value::as_f64).unwrap_or(2.0);
            let tail = GeometricTail::new(param_f64(&param, "c")?, param_f64(&param, "r")?)?;
            seq_non_attaining(&limit, HarmonicSchedule { shift }, tail)?
        }
        other => return Err(invalid(format!("unknown sequence '{other}'"))),
    };
    Ok((seq, limit))
}

fn cmd_converge(a: &ConvergeArgs) -> CliResult<()> {
    outputs([a.out.as_path()].into_iter().chain(a.svg.as_deref()).chain(a.report.as_deref()))?;
    let (seq, limit) = build_sequence(&a.sequence)?;
    let params = ConvergeParams {
        start: a.start,
        steps: a.steps,
        m: a.m,
        r: a.r,
        cutoff: a.cutoff,
        tolerance: a.tolerance,
    };
    let report = converge_report(|n| seq.at(n), &limit, params)?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    let csv = csv_string(
        &CONVERGENCE_CSV_HEADER,
        report.rows.iter().map(|r| {
            [
                r.step.to_string(),
                r.wot.to_string(),
                r.sot.to_string(),
                r.adj.to_string(),
                opt(r.metric.map(|m| m.lower)),
                opt(r.metric.map(|m| m.upper)),
            ]
        }),
    );
    let out = Output::new("converge", a);
    out.write(&a.out, &csv)?;
    if let Some(path) = &a.report {
        out.write_json(path, &report)?;
    }
    if let Some(path) = &a.svg {
        let x = |r: &posop::topologies::ConvergenceRow| r.step as f64;
        let mut series = vec![
            svg::Series { name: "wot", points: report.rows.iter().map(|r| (x(r), r.wot)).collect() },
            svg::Series { name: "sot", points: report.rows.iter().map(|r| (x(r), r.sot)).collect() },
            svg::Series { name: "adj", points: report.rows.iter().map(|r| (x(r), r.adj)).collect() },
        ];
        if report.rows.iter().all(|r| r.metric.is_some()) {
            series.push(svg::Series {
                name: "metric (upper)",
                points: report.rows.iter().map(|r| (x(r), r.metric.unwrap().upper)).collect(),
            });
        }
        out.write(path, &svg::line_plot(&format!("{} -> limit", seq.name()), "n", &series))?;
    }
    print!("{}", to_json_line(&report.verdicts));
    Ok(())
}

fn cmd_construct(c: &ConstructCommand) -> CliResult<()> {
    match c {
        ConstructCommand::Extend(a) => {
            inputs(&[&a.op])?;
            outputs([a.out.as_path(), a.u_out.as_path()])?;
            let ext = extend_with_full_norming(&read_operator(&a.op)?, a.eps)?;
            let out = Output::new("construct extend", a);
            out.write(&a.out, &(ext.b.to_json() + "\n"))?;
            out.write_json(&a.u_out, &ext.norming.u)?;
            println!(
                "variant {:?}, ||B P_N - A|| = {}, blockDim {}",
                ext.variant,
                ext.head_gap,
                ext.b.block_dim()
            );
        }
        ConstructCommand::Representative(a) => {
            inputs(&[&a.op])?;
            outputs([a.out.as_path(), a.u_out.as_path()])?;
            let rep = locate_norming_representative(&read_operator(&a.op)?, a.r, a.eps, a.n0)?;
            let out = Output::new("construct representative", a);
            out.write(&a.out, &(rep.b.to_json() + "\n"))?;
            out.write_json(&a.u_out, &rep.norming.u)?;
            println!("M = {}, sot gap {}, adjoint gap {}", rep.m, rep.sot_gap, rep.adj_gap);
        }
        ConstructCommand::Embed(a) => {
            inputs(&[&a.op])?;
            outputs([a.out.as_path(), a.family_out.as_path()].into_iter().chain(a.family_prime_out.as_deref()))?;
            let emb = density_embed(&read_operator(&a.op)?, a.eps)?;
            let out = Output::new("construct embed", a);
            out.write(&a.out, &(emb.t.to_json() + "\n"))?;
            out.write_json(&a.family_out, &emb.class_m)?;
            if let Some(path) = &a.family_prime_out {
                out.write_json(path, &emb.class_m_prime)?;
            }
            println!("column gap {}", emb.column_gap);
        }
        ConstructCommand::NonAttainer(a) => {
            check_output(&a.out)?;
            let t = diagonal_non_attainer(a.c, a.r)?;
            Output::new("construct non-attainer", a).write(&a.out, &(t.to_json() + "\n"))?;
        }
        ConstructCommand::Sequence(a) => {
            check_output(&a.out)?;
            let (seq, _) = build_sequence(&a.sequence)?;
            let t = seq.at(a.n)?;
            Output::new("construct sequence", a).write(&a.out, &(t.to_json() + "\n"))?;
        }
    }
    Ok(())
}

fn cmd_sample(a: &SampleArgs) -> CliResult<()> {
    outputs([a.out.as_path()].into_iter().chain(a.summary.as_deref()).chain(a.svg.as_deref()))?;
    let distribution: EntryDistribution = a.dist.parse()?;
    let probes = a
        .probes
        .iter()
        .map(|s| s.trim().parse::<Probe>())
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SamplerSpec {
        dim: a.dim,
        p: a.p,
        distribution,
        norm_target: a.near1.map_or(NormTarget::Leq1, |eta| NormTarget::Near1 { eta }),
        seed: a.seed,
    };
    let report = run_campaign(&spec, a.count, &probes)?;
    let out = Output::new("sample", a);
    out.write(
        &a.out,
        &csv_string(&CAMPAIGN_CSV_HEADER, report.rows.iter().map(|r| r.csv_record())),
    )?;
    if let Some(path) = &a.summary {
        // Wall time is left out so that summaries are reproducible.
        let summary = serde_json::json!({
            "spec": report.spec,
            "count": report.count,
            "probes": report.probes,
            "summaries": report.summaries,
            "note": report.note,
        });
        out.write_json(path, &summary)?;
    }
    if let Some(path) = &a.svg {
        let series: Vec<svg::Series> = probes
            .iter()
            .map(|&probe| {
                let (mut hits, mut seen) = (0usize, 0usize);
                let mut points = Vec::new();
                for (i, row) in report.rows.iter().enumerate() {
                    let v = match probe {
                        Probe::Attained => row.attained,
                        Probe::NotCoisometry => row.not_coisometry,
                        Probe::Irreducible => row.irreducible,
                        Probe::ClassM => row.class_m,
                        Probe::ClassMPrime => row.class_m_prime,
                    };
                    if let Some(v) = v {
                        seen += 1;
                        hits += v as usize;
                        points.push(((i + 1) as f64, hits as f64 / seen as f64));
                    }
                }
                svg::Series { name: probe.name(), points }
            })
            .collect();
        out.write(path, &svg::line_plot("running fraction per probe", "samples", &series))?;
    }
    for s in &report.summaries {
        println!(
            "{}: {} ({} true, {} false, {} errors)",
            s.probe.name(),
            s.fraction,
            s.true_count,
            s.false_count,
            s.error_count
        );
    }
    println!("{}", report.note);
    eprintln!("wall time {:.2}s", report.wall_time_secs);
    Ok(())
}

fn cmd_norm(a: &NormArgs) -> CliResult<()> {
    inputs(&[&a.op])?;
    if let Some(path) = &a.out {
        check_output(path)?;
    }
    let result = operator_norm_with(&read_operator(&a.op)?, a.max_iterations)?;
    match &a.out {
        Some(path) => Output::new("norm", a).write_json(path, &result)?,
        None => print!("{}", to_json_line(&result)),
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<()> {
    inputs(&[&a.op, &a.u])?;
    let t = read_operator(&a.op)?;
    let t = if a.adjoint { t.adjoint() } else { t };
    let check = verify_norming_with(&t, &read_vector(&a.u)?, a.tolerance)?;
    print!("{}", to_json_line(&check));
    if check.accepted {
        Ok(())
    } else {
        Err(CliError::Rejected("vector is not norming at the requested tolerance".into()))
    }
}
