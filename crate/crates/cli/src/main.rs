//! gammahull: membership, separation and duality computations for Γ-convex
//! hulls of free semialgebraic sets.
//!
//! Exit codes: 0 = decided, 2 = indeterminate, 1 = usage or data error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gammahull_cli::formats::{self, Report, ReportVerdict};
use gammahull_cli::{external, load_certificate, load_problem, rational};
use gammahull_core::certify;
use gammahull_core::convexity;
use gammahull_core::hermlin::HermTuple;
use gammahull_core::hull::{self, HierarchyCriteria, HierarchyOutcome, LiftObjective};
use gammahull_core::sdp::{self, FeasVerdict, SolveOptions};

#[derive(Parser)]
#[command(name = "gammahull", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// problem description file
    #[arg(long)]
    problem: PathBuf,
    /// scalar point shorthand "(a,b,…)"
    #[arg(long)]
    point: Option<String>,
    /// named anchor tuple from the problem file
    #[arg(long)]
    anchor: Option<String>,
    /// report output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// numerical tolerance override (feasibility margin)
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Level-d membership of a point in the projected hull lift
    Check {
        #[command(flatten)]
        common: CommonOpts,
        /// relaxation level d
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, value_parser = ["margin", "trace-min"], default_value = "margin")]
        objective: String,
        /// also export the assembled SDP in SDPA sparse format
        #[arg(long)]
        sdpa_out: Option<PathBuf>,
        /// solve through an external command instead of the built-in solver
        #[arg(long)]
        external_solver: Option<String>,
        /// verdict grid "x0:x1:n,y0:y1:n" (writes CSV to --grid-out)
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        grid_out: Option<PathBuf>,
        /// worker threads for grid evaluation
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run the lift hierarchy with flatness/GNS and separation stopping rules
    Hierarchy {
        #[command(flatten)]
        common: CommonOpts,
        /// maximum level
        #[arg(long, default_value_t = 2)]
        level: usize,
        /// QM degree for separation certificates
        #[arg(long)]
        degree: Option<usize>,
        /// accept membership via the positivity-certificate property at this degree
        #[arg(long)]
        pcp_degree: Option<usize>,
    },
    /// Search for a separating monic Γ-pencil with a quadratic-module witness
    Separate {
        #[command(flatten)]
        common: CommonOpts,
        /// QM certificate degree N
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// certificate output path
        #[arg(long, default_value = "cert.json")]
        cert_out: PathBuf,
    },
    /// Extract a GNS witness from a flat membership solution
    Gns {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// Spectrahedral inclusion D_A ⊆ D_B via the Choi-matrix SDP
    Include {
        #[command(flatten)]
        common: CommonOpts,
        /// anchor name of the source tuple A
        #[arg(long)]
        tuple_a: String,
        /// anchor name of the target tuple B
        #[arg(long)]
        tuple_b: String,
    },
    /// Boundedness of the free spectrahedron of a named tuple
    Bounded {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        tuple: String,
    },
    /// Γ-polar / matrix-range membership of a point relative to a tuple
    Polar {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        tuple: String,
    },
    /// k-Archimedean certificate for the problem polynomial
    Archimedean {
        #[command(flatten)]
        common: CommonOpts,
        /// radius k (defaults to the problem file's archimedean_k)
        #[arg(long)]
        k: Option<f64>,
        /// SOS degree cap
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long)]
        cert_out: Option<PathBuf>,
    },
    /// Quadratic-module membership of a target polynomial
    Qm {
        #[command(flatten)]
        common: CommonOpts,
        /// problem file whose polynomial is the target f
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 1)]
        alpha: usize,
        #[arg(long, default_value_t = 0)]
        beta: usize,
        #[arg(long)]
        cert_out: Option<PathBuf>,
    },
    /// Export the membership SDP in SDPA sparse format
    SdpaExport {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long)]
        sdpa_out: PathBuf,
    },
    /// Re-verify a stored certificate (recomposition + PSD + violation)
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Solve an SDPA sparse file with the built-in solver (external-solver
    /// subprocess protocol: gammahull sdpa-solve INPUT OUTPUT)
    SdpaSolve { input: PathBuf, output: PathBuf },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version print and exit 0; usage errors exit 1
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn parse_point(s: &str, g: usize) -> Result<HermTuple> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    let vals: Result<Vec<f64>> = inner
        .split(',')
        .map(|t| {
            rational::parse_number(t)
                .ok_or_else(|| anyhow!("bad coordinate `{t}` in point `{s}`"))
        })
        .collect();
    let vals = vals?;
    if vals.len() != g {
        bail!("point has {} coordinates, problem has g = {g}", vals.len());
    }
    Ok(HermTuple::scalars(&vals))
}

fn resolve_anchor(common: &CommonOpts, prob: &formats::ProblemFile) -> Result<HermTuple> {
    match (&common.point, &common.anchor) {
        (Some(p), None) => parse_point(p, prob.g),
        (None, Some(name)) => prob
            .anchors
            .get(name)
            .cloned()
            .ok_or_else(|| anyhow!("anchor `{name}` not found in the problem file")),
        (Some(_), Some(_)) => bail!("--point and --anchor are mutually exclusive"),
        (None, None) => bail!("one of --point or --anchor is required"),
    }
}

fn solve_options(tol: Option<f64>) -> SolveOptions {
    let mut o = SolveOptions::default();
    if let Some(t) = tol {
        o.feas_margin = t;
    }
    o
}

fn verdict_str(v: FeasVerdict) -> &'static str {
    match v {
        FeasVerdict::Feasible => "member",
        FeasVerdict::Infeasible => "not_member",
        FeasVerdict::Indeterminate => "indeterminate",
    }
}

fn finish_report(mut report: Report, out: Option<&PathBuf>, t0: Instant, code: i32) -> Result<i32> {
    report.timings_ms.insert("total".into(), t0.elapsed().as_secs_f64() * 1e3);
    if let Some(path) = out {
        report.write(path).with_context(|| format!("writing report to {}", path.display()))?;
    } else {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(code)
}

fn base_report(command: &str, args: &[(&str, String)]) -> Report {
    Report {
        command: command.into(),
        arguments: args.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        ..Default::default()
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Cmd::Check {
            common,
            level,
            objective,
            sdpa_out,
            external_solver,
            grid,
            grid_out,
            jobs,
        } => cmd_check(common, level, &objective, sdpa_out, external_solver, grid, grid_out, jobs),
        Cmd::Hierarchy { common, level, degree, pcp_degree } => {
            cmd_hierarchy(common, level, degree, pcp_degree)
        }
        Cmd::Separate { common, degree, cert_out } => cmd_separate(common, degree, &cert_out),
        Cmd::Gns { common, level } => cmd_gns(common, level),
        Cmd::Include { common, tuple_a, tuple_b } => cmd_include(common, &tuple_a, &tuple_b),
        Cmd::Bounded { common, tuple } => cmd_bounded(common, &tuple),
        Cmd::Polar { common, tuple } => cmd_polar(common, &tuple),
        Cmd::Archimedean { common, k, degree, cert_out } => {
            cmd_archimedean(common, k, degree, cert_out)
        }
        Cmd::Qm { common, target, alpha, beta, cert_out } => {
            cmd_qm(common, &target, alpha, beta, cert_out)
        }
        Cmd::SdpaExport { common, level, sdpa_out } => cmd_sdpa_export(common, level, &sdpa_out),
        Cmd::Verify { common, certificate } => cmd_verify(common, &certificate),
        Cmd::SdpaSolve { input, output } => cmd_sdpa_solve(&input, &output),
    }
}

fn require_poly(prob: &formats::ProblemFile) -> Result<&gammahull_core::freealg::MatrixPolynomial> {
    prob.p.as_ref().ok_or_else(|| anyhow!("problem file has no polynomial p"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    common: CommonOpts,
    level: usize,
    objective: &str,
    sdpa_out: Option<PathBuf>,
    external_solver: Option<String>,
    grid: Option<String>,
    grid_out: Option<PathBuf>,
    jobs: usize,
) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let p = require_poly(&prob)?;
    let opts = hull::MembershipOptions {
        objective: if objective == "trace-min" { LiftObjective::TraceMin } else { LiftObjective::Margin },
        bound_k: prob.archimedean_k,
        solve: solve_options(common.tol),
    };
    let mut report = base_report(
        "check",
        &[
            ("problem", common.problem.display().to_string()),
            ("level", level.to_string()),
            ("objective", objective.to_string()),
        ],
    );

    if let Some(spec) = grid {
        let out_path = grid_out.ok_or_else(|| anyhow!("--grid requires --grid-out"))?;
        let csv = run_grid(&spec, p, &prob, level, &opts, jobs)?;
        std::fs::write(&out_path, csv)?;
        report.verdicts.push(ReportVerdict {
            subject: format!("grid {spec}"),
            verdict: "written".into(),
            margins: BTreeMap::new(),
            notes: vec![out_path.display().to_string()],
        });
        return finish_report(report, common.out.as_ref(), t0, 0);
    }

    let x = resolve_anchor(&common, &prob)?;
    let lift = hull::build_lift(
        p,
        &prob.gamma,
        &x,
        level,
        &hull::LiftOptions { bound_k: prob.archimedean_k, solve: opts.solve },
    )
    .map_err(|e| anyhow!("{e}"))?;
    if let Some(path) = &sdpa_out {
        std::fs::write(path, sdp::write_sdpa(&lift.margin_problem()))?;
    }

    // external solver: the environment variable overrides the flag
    let solver_cmd = std::env::var("GAMMAHULL_SOLVER").ok().or(external_solver);
    let (status, margin, hmargin, lmargin) = if let Some(cmd) = solver_cmd {
        let tmp = std::env::temp_dir().join(format!("gammahull-{}", std::process::id()));
        std::fs::create_dir_all(&tmp)?;
        let sol = external::external_solve(&lift.margin_problem(), &cmd, &tmp)
            .map_err(|e| anyhow!("{e}"))?;
        let t = sol.objective_value;
        (
            sdp::margin_verdict(t, opts.solve.feas_margin),
            t,
            sol.block_margins.first().copied().unwrap_or(f64::NAN),
            sol.block_margins.get(1).copied().unwrap_or(f64::NAN),
        )
    } else {
        let v = hull::membership_of_lift(&lift, &opts).map_err(|e| anyhow!("{e}"))?;
        (v.status, v.margin, v.hankel_margin, v.localizing_margin)
    };

    let mut margins = BTreeMap::new();
    margins.insert("objective".into(), margin);
    margins.insert("hankel".into(), hmargin);
    margins.insert("localizing".into(), lmargin);
    report.verdicts.push(ReportVerdict {
        subject: common.point.clone().or(common.anchor.clone()).unwrap_or_default(),
        verdict: verdict_str(status).into(),
        margins,
        notes: vec![format!("eta={}, hankel_cols={}", lift.eta, lift.hankel_words.len())],
    });
    let code = if status == FeasVerdict::Indeterminate { 2 } else { 0 };
    finish_report(report, common.out.as_ref(), t0, code)
}

fn run_grid(
    spec: &str,
    p: &gammahull_core::freealg::MatrixPolynomial,
    prob: &formats::ProblemFile,
    level: usize,
    opts: &hull::MembershipOptions,
    jobs: usize,
) -> Result<String> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 || prob.g != 2 {
        bail!("grid mode expects g = 2 and a spec like \"-1.5:1.5:41,-1.5:1.5:41\"");
    }
    let parse_axis = |s: &str| -> Result<(f64, f64, usize)> {
        let f: Vec<&str> = s.split(':').collect();
        if f.len() != 3 {
            bail!("axis spec must be lo:hi:count");
        }
        Ok((f[0].parse()?, f[1].parse()?, f[2].parse()?))
    };
    let (x0, x1, nx) = parse_axis(parts[0])?;
    let (y0, y1, ny) = parse_axis(parts[1])?;
    let points: Vec<(usize, usize, f64, f64)> = (0..nx)
        .flat_map(|i| {
            (0..ny).map(move |j| {
                let x = x0 + (x1 - x0) * i as f64 / (nx - 1).max(1) as f64;
                let y = y0 + (y1 - y0) * j as f64 / (ny - 1).max(1) as f64;
                (i, j, x, y)
            })
        })
        .collect();
    let jobs = jobs.max(1);
    let chunk = points.len().div_ceil(jobs);
    let results: Vec<(usize, usize, f64, f64, String, f64)> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for batch in points.chunks(chunk.max(1)) {
            let batch = batch.to_vec();
            handles.push(scope.spawn(move || {
                batch
                    .into_iter()
                    .map(|(i, j, x, y)| {
                        let anchor = HermTuple::scalars(&[x, y]);
                        match hull::membership(p, &prob.gamma, &anchor, level, opts) {
                            Ok(v) => (i, j, x, y, verdict_str(v.status).to_string(), v.margin),
                            Err(_) => (i, j, x, y, "error".to_string(), f64::NAN),
                        }
                    })
                    .collect::<Vec<_>>()
            }));
        }
        let mut all: Vec<_> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
        all.sort_by_key(|r| (r.0, r.1));
        all
    });
    let mut csv = String::from("i,j,x,y,verdict,margin\n");
    for (i, j, x, y, verdict, margin) in results {
        csv.push_str(&format!("{i},{j},{x},{y},{verdict},{margin}\n"));
    }
    Ok(csv)
}

fn cmd_hierarchy(
    common: CommonOpts,
    level: usize,
    degree: Option<usize>,
    pcp_degree: Option<usize>,
) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let p = require_poly(&prob)?;
    let x = resolve_anchor(&common, &prob)?;
    let criteria = HierarchyCriteria {
        use_flatness: true,
        use_pcp_degree: pcp_degree,
        separation_degree: degree,
        bound_k: prob.archimedean_k,
        solve: solve_options(common.tol),
    };
    let rep = hull::run_hierarchy(p, &prob.gamma, &x, level, &criteria).map_err(|e| anyhow!("{e}"))?;
    let mut report = base_report(
        "hierarchy",
        &[
            ("problem", common.problem.display().to_string()),
            ("level", level.to_string()),
        ],
    );
    for lv in &rep.levels {
        let mut margins = BTreeMap::new();
        margins.insert("objective".into(), lv.margin);
        margins.insert("hankel".into(), lv.hankel_margin);
        margins.insert("localizing".into(), lv.localizing_margin);
        report.verdicts.push(ReportVerdict {
            subject: format!("level {}", lv.level),
            verdict: verdict_str(lv.verdict).into(),
            margins,
            notes: lv
                .flatness
                .map(|f| vec![format!("ranks {} vs {}", f.rank_low, f.rank_high)])
                .unwrap_or_default(),
        });
    }
    let (outcome, code) = match &rep.outcome {
        HierarchyOutcome::MemberCertified { level, witness } => (
            format!(
                "MEMBER_CERTIFIED at level {level} (rank {}, moment residual {:.2e})",
                witness.rank, witness.residual_moments
            ),
            0,
        ),
        HierarchyOutcome::MemberByPcpAssumption { level } => {
            (format!("MEMBER under the PCP assumption at level {level}"), 0)
        }
        HierarchyOutcome::NotMember { level, certificate } => (
            format!(
                "NOT_MEMBER at level {level}{}",
                if certificate.is_some() { " (separating pencil attached)" } else { "" }
            ),
            0,
        ),
        HierarchyOutcome::Undetermined => ("UNDETERMINED".into(), 2),
    };
    report.verdicts.push(ReportVerdict {
        subject: "hierarchy".into(),
        verdict: outcome,
        margins: BTreeMap::new(),
        notes: vec![format!("monotone={}", rep.monotone)],
    });
    finish_report(report, common.out.as_ref(), t0, code)
}

fn cmd_separate(common: CommonOpts, degree: usize, cert_out: &Path) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let p = require_poly(&prob)?;
    let x = resolve_anchor(&common, &prob)?;
    let opts = solve_options(common.tol);
    let mut report = base_report(
        "separate",
        &[
            ("problem", common.problem.display().to_string()),
            ("degree", degree.to_string()),
        ],
    );
    match certify::separate(p, &prob.gamma, &x, degree, &opts).map_err(|e| anyhow!("{e}"))? {
        Some(cert) => {
            let vr = certify::verify_certificate(&cert.qm, p, Some(&x), 1e-7);
            formats::save_certificate(
                cert_out,
                &formats::CertificateFile {
                    qm: cert.qm.clone(),
                    pencil: Some(cert.pencil.clone()),
                    violation: Some(cert.violation),
                },
            )?;
            let mut margins = BTreeMap::new();
            margins.insert("violation".into(), cert.violation);
            margins.insert("recomposition_residual".into(), vr.residual);
            report.certificates.push(cert_out.display().to_string());
            report.verdicts.push(ReportVerdict {
                subject: "separation".into(),
                verdict: if vr.pass { "separated".into() } else { "separated_unverified".into() },
                margins,
                notes: vec![],
            });
            finish_report(report, common.out.as_ref(), t0, if vr.pass { 0 } else { 2 })
        }
        None => {
            report.verdicts.push(ReportVerdict {
                subject: "separation".into(),
                verdict: "no_certificate_at_degree".into(),
                margins: BTreeMap::new(),
                notes: vec![format!("degree {degree}")],
            });
            finish_report(report, common.out.as_ref(), t0, 0)
        }
    }
}

fn cmd_gns(common: CommonOpts, level: usize) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let p = require_poly(&prob)?;
    let x = resolve_anchor(&common, &prob)?;
    let opts = hull::MembershipOptions {
        objective: LiftObjective::TraceMin,
        bound_k: prob.archimedean_k,
        solve: solve_options(common.tol),
    };
    let v = hull::membership(p, &prob.gamma, &x, level, &opts).map_err(|e| anyhow!("{e}"))?;
    let mut report = base_report(
        "gns",
        &[
            ("problem", common.problem.display().to_string()),
            ("level", level.to_string()),
        ],
    );
    let Some(seq) = v.witness else {
        report.verdicts.push(ReportVerdict {
            subject: "gns".into(),
            verdict: "no_feasible_moment_solution".into(),
            margins: BTreeMap::new(),
            notes: vec![],
        });
        return finish_report(report, common.out.as_ref(), t0, 2);
    };
    let eta = v.eta;
    match hull::gns_extract(&seq, p, &prob.gamma, eta, 1e-8) {
        Ok(gns) => {
            let mut margins = BTreeMap::new();
            margins.insert("residual_moments".into(), gns.residual_moments);
            margins.insert("residual_psd".into(), gns.residual_psd);
            margins.insert("pair_deviation".into(), gns.pair_deviation);
            let notes = vec![
                format!("rank {}", gns.rank),
                format!("Z = {:?}", gns.z.mats().iter().map(formats::matrix_to_json).collect::<Vec<_>>()),
                format!("V = {:?}", formats::matrix_to_json(&gns.v)),
            ];
            report.verdicts.push(ReportVerdict {
                subject: "gns".into(),
                verdict: "extracted".into(),
                margins,
                notes,
            });
            finish_report(report, common.out.as_ref(), t0, 0)
        }
        Err(e) => {
            report.verdicts.push(ReportVerdict {
                subject: "gns".into(),
                verdict: "extraction_failed".into(),
                margins: BTreeMap::new(),
                notes: vec![format!("{e}")],
            });
            finish_report(report, common.out.as_ref(), t0, 2)
        }
    }
}

fn cmd_include(common: CommonOpts, tuple_a: &str, tuple_b: &str) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let a = prob.anchors.get(tuple_a).ok_or_else(|| anyhow!("anchor `{tuple_a}` not found"))?;
    let b = prob.anchors.get(tuple_b).ok_or_else(|| anyhow!("anchor `{tuple_b}` not found"))?;
    let verdict = convexity::inclusion(a, b, &solve_options(common.tol)).map_err(|e| anyhow!("{e}"))?;
    let mut report = base_report(
        "include",
        &[
            ("problem", common.problem.display().to_string()),
            ("a", tuple_a.into()),
            ("b", tuple_b.into()),
        ],
    );
    let mut margins = BTreeMap::new();
    margins.insert("residual".into(), verdict.residual);
    let (word, code) = match verdict.verdict {
        FeasVerdict::Feasible => ("included", 0),
        FeasVerdict::Infeasible => ("not_included", 0),
        FeasVerdict::Indeterminate => ("indeterminate", 2),
    };
    report.verdicts.push(ReportVerdict {
        subject: format!("D_{tuple_a} ⊆ D_{tuple_b}"),
        verdict: word.into(),
        margins,
        notes: vec![],
    });
    finish_report(report, common.out.as_ref(), t0, code)
}

fn cmd_bounded(common: CommonOpts, tuple: &str) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let a = prob.anchors.get(tuple).ok_or_else(|| anyhow!("anchor `{tuple}` not found"))?;
    let rep = convexity::spectrahedron_bounded(a, &solve_options(common.tol))
        .map_err(|e| anyhow!("{e}"))?;
    let mut report = base_report(
        "bounded",
        &[("problem", common.problem.display().to_string()), ("tuple", tuple.into())],
    );
    let mut margins = BTreeMap::new();
    for (j, b) in rep.direction_bounds.iter().enumerate() {
        margins.insert(format!("radius_x{}", j + 1), *b);
    }
    report.verdicts.push(ReportVerdict {
        subject: format!("D_{tuple}"),
        verdict: if rep.indeterminate {
            "indeterminate".into()
        } else if rep.bounded {
            "bounded".into()
        } else {
            "unbounded".into()
        },
        margins,
        notes: vec![format!("independent={}", rep.independent)],
    });
    finish_report(report, common.out.as_ref(), t0, if rep.indeterminate { 2 } else { 0 })
}

fn cmd_polar(common: CommonOpts, tuple: &str) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let a = prob.anchors.get(tuple).ok_or_else(|| anyhow!("anchor `{tuple}` not found"))?;
    let x = resolve_anchor(&common, &prob)?;
    let verdict = convexity::gamma_polar_membership(&prob.gamma, a, &x, &solve_options(common.tol))
        .map_err(|e| anyhow!("{e}"))?;
    let mut report = base_report(
        "polar",
        &[("problem", common.problem.display().to_string()), ("tuple", tuple.into())],
    );
    let mut margins = BTreeMap::new();
    margins.insert("residual".into(), verdict.residual);
    let (word, code) = match verdict.verdict {
        FeasVerdict::Feasible => ("member", 0),
        FeasVerdict::Infeasible => ("not_member", 0),
        FeasVerdict::Indeterminate => ("indeterminate", 2),
    };
    report.verdicts.push(ReportVerdict {
        subject: format!("polar of D_{tuple}"),
        verdict: word.into(),
        margins,
        notes: vec![format!("independent={}", verdict.independent)],
    });
    finish_report(report, common.out.as_ref(), t0, code)
}

fn cmd_archimedean(
    common: CommonOpts,
    k: Option<f64>,
    degree: usize,
    cert_out: Option<PathBuf>,
) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let p = require_poly(&prob)?;
    let k = k
        .or(prob.archimedean_k)
        .ok_or_else(|| anyhow!("no k given and the problem file has no archimedean_k"))?;
    let out = certify::archimedean_certificate(p, k, degree, &solve_options(common.tol))
        .map_err(|e| anyhow!("{e}"))?;
    let mut report = base_report(
        "archimedean",
        &[("problem", common.problem.display().to_string()), ("k", k.to_string())],
    );
    match out {
        Some(cert) => {
            let vr = certify::verify_certificate(&cert, p, None, 1e-7);
            if let Some(path) = &cert_out {
                formats::save_certificate(
                    path,
                    &formats::CertificateFile { qm: cert.clone(), pencil: None, violation: None },
                )?;
                report.certificates.push(path.display().to_string());
            }
            let mut margins = BTreeMap::new();
            margins.insert("recomposition_residual".into(), vr.residual);
            report.verdicts.push(ReportVerdict {
                subject: format!("{k}-Archimedean"),
                verdict: if vr.pass { "certified".into() } else { "found_unverified".into() },
                margins,
                notes: vec![],
            });
            finish_report(report, common.out.as_ref(), t0, if vr.pass { 0 } else { 2 })
        }
        None => {
            report.verdicts.push(ReportVerdict {
                subject: format!("{k}-Archimedean"),
                verdict: "no_certificate_up_to_degree".into(),
                margins: BTreeMap::new(),
                notes: vec![format!("degree cap {degree}")],
            });
            finish_report(report, common.out.as_ref(), t0, 0)
        }
    }
}

fn cmd_qm(
    common: CommonOpts,
    target: &Path,
    alpha: usize,
    beta: usize,
    cert_out: Option<PathBuf>,
) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let p = require_poly(&prob)?;
    let target_prob = load_problem(target)?;
    let f = require_poly(&target_prob)?;
    let out =
        certify::qm_membership(f, p, alpha, beta, &solve_options(common.tol)).map_err(|e| anyhow!("{e}"))?;
    let mut report = base_report(
        "qm",
        &[
            ("problem", common.problem.display().to_string()),
            ("target", target.display().to_string()),
            ("alpha", alpha.to_string()),
            ("beta", beta.to_string()),
        ],
    );
    match out {
        Some(cert) => {
            let vr = certify::verify_certificate(&cert, p, None, 1e-7);
            if let Some(path) = &cert_out {
                formats::save_certificate(
                    path,
                    &formats::CertificateFile { qm: cert.clone(), pencil: None, violation: None },
                )?;
                report.certificates.push(path.display().to_string());
            }
            let mut margins = BTreeMap::new();
            margins.insert("recomposition_residual".into(), vr.residual);
            report.verdicts.push(ReportVerdict {
                subject: "qm_membership".into(),
                verdict: if vr.pass { "member".into() } else { "found_unverified".into() },
                margins,
                notes: vec![],
            });
            finish_report(report, common.out.as_ref(), t0, if vr.pass { 0 } else { 2 })
        }
        None => {
            report.verdicts.push(ReportVerdict {
                subject: "qm_membership".into(),
                verdict: "not_member_at_degree".into(),
                margins: BTreeMap::new(),
                notes: vec![],
            });
            finish_report(report, common.out.as_ref(), t0, 0)
        }
    }
}

fn cmd_sdpa_export(common: CommonOpts, level: usize, sdpa_out: &Path) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let p = require_poly(&prob)?;
    let x = resolve_anchor(&common, &prob)?;
    let lift = hull::build_lift(
        p,
        &prob.gamma,
        &x,
        level,
        &hull::LiftOptions { bound_k: prob.archimedean_k, solve: solve_options(common.tol) },
    )
    .map_err(|e| anyhow!("{e}"))?;
    std::fs::write(sdpa_out, sdp::write_sdpa(&lift.margin_problem()))?;
    let mut report = base_report(
        "sdpa-export",
        &[
            ("problem", common.problem.display().to_string()),
            ("level", level.to_string()),
        ],
    );
    report.verdicts.push(ReportVerdict {
        subject: "export".into(),
        verdict: "written".into(),
        margins: BTreeMap::new(),
        notes: vec![sdpa_out.display().to_string()],
    });
    finish_report(report, common.out.as_ref(), t0, 0)
}

fn cmd_verify(common: CommonOpts, certificate: &Path) -> Result<i32> {
    let t0 = Instant::now();
    let prob = load_problem(&common.problem)?;
    let p = require_poly(&prob)?;
    let cert = load_certificate(certificate)?;
    let x = match (&common.point, &common.anchor) {
        (None, None) => None,
        _ => Some(resolve_anchor(&common, &prob)?),
    };
    let tol = common.tol.unwrap_or(1e-7);
    let vr = certify::verify_certificate(&cert.qm, p, x.as_ref(), tol);
    let mut report = base_report(
        "verify",
        &[
            ("problem", common.problem.display().to_string()),
            ("certificate", certificate.display().to_string()),
        ],
    );
    let mut margins = BTreeMap::new();
    margins.insert("residual".into(), vr.residual);
    margins.insert("gram_sos_min_eig".into(), vr.gram_sos_min_eig);
    margins.insert("gram_weighted_min_eig".into(), vr.gram_weighted_min_eig);
    if let Some(v) = vr.violation_at_point {
        margins.insert("violation".into(), v);
    }
    report.verdicts.push(ReportVerdict {
        subject: "certificate".into(),
        verdict: if vr.pass { "verified".into() } else { "failed".into() },
        margins,
        notes: vec![],
    });
    finish_report(report, common.out.as_ref(), t0, 0)
}

fn cmd_sdpa_solve(input: &Path, output: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(input)?;
    let prob = sdp::parse_sdpa(&text).map_err(|e| anyhow!("{e}"))?;
    let sol = sdp::solve(&prob, &SolveOptions::default()).map_err(|e| anyhow!("{e}"))?;
    let mut out = String::new();
    out.push_str(&format!("objValPrimal = {}\n", -sol.objective_value));
    out.push_str(&format!("objValDual = {}\n", -sol.dual_objective_value));
    let vals: Vec<String> = sol.y.iter().map(|v| format!("{v}")).collect();
    out.push_str(&format!("xVec = {{{}}}\n", vals.join(", ")));
    std::fs::write(output, out)?;
    Ok(0)
}
