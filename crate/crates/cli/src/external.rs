//! External SDP solver client: writes the problem as SDPA sparse text,
//! spawns `command input.dat-s output.result`, parses the returned variable
//! vector, and recomputes every residual internally. The reported status of
//! the external process is never trusted.

use std::path::Path;
use std::process::Command;

use gammahull_core::sdp::{write_sdpa, BlockData, SdpProblem, SdpSolution, SdpStatus};

#[derive(Debug)]
pub enum ExternalError {
    Io(std::io::Error),
    Spawn { command: String, message: String },
    Unparseable(String),
    WrongArity { expected: usize, found: usize },
}

impl std::fmt::Display for ExternalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExternalError::Io(e) => write!(f, "io: {e}"),
            ExternalError::Spawn { command, message } => {
                write!(f, "failed to run `{command}`: {message}")
            }
            ExternalError::Unparseable(s) => write!(f, "unparseable solver output: {s}"),
            ExternalError::WrongArity { expected, found } => {
                write!(f, "solver returned {found} variables, problem has {expected}")
            }
        }
    }
}

impl std::error::Error for ExternalError {}

impl From<std::io::Error> for ExternalError {
    fn from(e: std::io::Error) -> Self {
        ExternalError::Io(e)
    }
}

/// Extract the variable vector from an SDPA-style result file: the
/// `xVec = {…}` line when present, otherwise the first line consisting of
/// numbers only.
pub fn parse_result_vector(text: &str, expected: usize) -> Result<Vec<f64>, ExternalError> {
    let clean = |tok: &str| -> Option<f64> {
        let t = tok.trim().trim_matches(|ch| "{},;".contains(ch));
        if t.is_empty() {
            None
        } else {
            t.parse().ok()
        }
    };
    for line in text.lines() {
        if let Some(idx) = line.find("xVec") {
            let rest = &line[idx..];
            let start = rest.find('{');
            // the braces may span lines; collect until the closing one
            let payload = match start {
                Some(s) => {
                    let tail = &text[text.find(rest).unwrap() + s + 1..];
                    match tail.find('}') {
                        Some(e) => &tail[..e],
                        None => return Err(ExternalError::Unparseable("unclosed xVec braces".into())),
                    }
                }
                None => return Err(ExternalError::Unparseable("xVec without braces".into())),
            };
            let vals: Vec<f64> = payload
                .split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter_map(clean)
                .collect();
            if vals.len() != expected {
                return Err(ExternalError::WrongArity { expected, found: vals.len() });
            }
            return Ok(vals);
        }
    }
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('*') || line.starts_with('"') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(|ch: char| ch == ',' || ch.is_whitespace())
            .filter_map(clean)
            .collect();
        if vals.len() == expected && !vals.is_empty() {
            return Ok(vals);
        }
    }
    Err(ExternalError::Unparseable("no variable vector found".into()))
}

/// Solve through an external command obeying the
/// `argv = [command, input_path, output_path]` protocol, then rebuild the
/// solution from the returned y alone: slack, margins and objective are all
/// recomputed from the problem data.
pub fn external_solve(
    prob: &SdpProblem,
    solver_command: &str,
    workdir: &Path,
) -> Result<SdpSolution, ExternalError> {
    let canonical = prob.canonical();
    let input = workdir.join("problem.dat-s");
    let output = workdir.join("problem.result");
    std::fs::write(&input, write_sdpa(&canonical))?;
    let mut parts = solver_command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| ExternalError::Spawn { command: solver_command.into(), message: "empty command".into() })?;
    let mut cmd = Command::new(program);
    for extra in parts {
        cmd.arg(extra);
    }
    let status = cmd
        .arg(&input)
        .arg(&output)
        .status()
        .map_err(|e| ExternalError::Spawn { command: solver_command.into(), message: format!("{e}") })?;
    if !status.success() {
        return Err(ExternalError::Spawn {
            command: solver_command.into(),
            message: format!("exit status {status}"),
        });
    }
    let text = std::fs::read_to_string(&output)?;
    let y = parse_result_vector(&text, canonical.num_vars)?;

    let slack = canonical.slack_at(&y);
    let margins: Vec<f64> = slack.iter().map(BlockData::min_eig).collect();
    let scale = 1.0 + slack.iter().map(BlockData::max_abs).fold(0.0, f64::max);
    let feasible = margins.iter().all(|&m| m >= -1e-7 * scale);
    let objective: f64 = canonical.objective.iter().zip(&y).map(|(c, v)| c * v).sum();
    let zero_dual: Vec<BlockData> = canonical
        .blocks
        .iter()
        .map(|&spec| BlockData::zeros(spec))
        .collect();
    Ok(SdpSolution {
        status: if feasible {
            SdpStatus::Optimal
        } else {
            SdpStatus::Indeterminate("external point violates the LMI".into())
        },
        y,
        primal_matrix: slack,
        dual_matrix: zero_dual,
        objective_value: objective,
        dual_objective_value: f64::NAN,
        max_constraint_residual: f64::NAN,
        duality_gap: f64::NAN,
        iterations: 0,
        block_margins: margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sdpa_style_xvec() {
        let text = "objValPrimal = 1.0\nobjValDual = 1.0\nxVec = {0.5, -1.25e-3, 3}\n";
        let v = parse_result_vector(text, 3).unwrap();
        assert_eq!(v, vec![0.5, -1.25e-3, 3.0]);
    }

    #[test]
    fn parses_bare_vector_line() {
        let text = "* comment\n0.5 2.5 -1\n";
        let v = parse_result_vector(text, 3).unwrap();
        assert_eq!(v, vec![0.5, 2.5, -1.0]);
    }

    #[test]
    fn rejects_malformed_output() {
        assert!(parse_result_vector("nothing here", 2).is_err());
        assert!(parse_result_vector("xVec = {1.0}", 2).is_err());
    }
}
