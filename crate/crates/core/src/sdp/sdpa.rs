//! SDPA sparse format (".dat-s") reader and writer.
//!
//! The file encodes the standard SDPA problem
//!
//! ```text
//!     minimize  Σ cᵢ xᵢ   subject to   X = Σ xᵢ Fᵢ − F₀ ⪰ 0,
//! ```
//!
//! so our `maximize c·y, F₀ + Σ y F ⪰ 0` is written with the objective and
//! constant block negated; a conforming external solver then optimizes the
//! same problem. Values print with Rust's shortest-roundtrip formatting so
//! that export → import reproduces the data bit-identically modulo entry
//! order. Box bounds are lowered into a trailing diagonal block on export.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::model::{BlockData, BlockSpec, SdpError, SdpProblem};

pub fn write_sdpa(prob: &SdpProblem) -> String {
    let prob = prob.canonical();
    let mut out = String::new();
    out.push_str(&format!("{}\n", prob.num_vars));
    out.push_str(&format!("{}\n", prob.blocks.len()));
    let sizes: Vec<String> = prob
        .blocks
        .iter()
        .map(|b| match b {
            BlockSpec::Dense(n) => format!("{n}"),
            BlockSpec::Diag(n) => format!("-{n}"),
        })
        .collect();
    out.push_str(&sizes.join(" "));
    out.push('\n');
    let obj: Vec<String> = prob.objective.iter().map(|c| format!("{}", -c)).collect();
    out.push_str(&obj.join(" "));
    out.push('\n');
    // matno 0: SDPA's F0 = −(our F0)
    for (b, data) in prob.f0.iter().enumerate() {
        match data {
            BlockData::Dense(m) => {
                for i in 0..m.rows {
                    for j in i..m.cols {
                        if m[(i, j)] != 0.0 {
                            out.push_str(&format!("0 {} {} {} {}\n", b + 1, i + 1, j + 1, -m[(i, j)]));
                        }
                    }
                }
            }
            BlockData::Diag(d) => {
                for (i, v) in d.iter().enumerate() {
                    if *v != 0.0 {
                        out.push_str(&format!("0 {} {} {} {}\n", b + 1, i + 1, i + 1, -v));
                    }
                }
            }
        }
    }
    for (k, entries) in prob.coeffs.iter().enumerate() {
        for e in entries {
            if e.value != 0.0 {
                out.push_str(&format!(
                    "{} {} {} {} {}\n",
                    k + 1,
                    e.block + 1,
                    e.i + 1,
                    e.j + 1,
                    e.value
                ));
            }
        }
    }
    out
}

pub fn parse_sdpa(text: &str) -> Result<SdpProblem, SdpError> {
    // SDPA allows comment lines starting with " or * and loose separators
    let mut header: Vec<(usize, String)> = Vec::new();
    let mut entry_lines: Vec<(usize, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('"') || line.starts_with('*') {
            continue;
        }
        let cleaned: String = line
            .chars()
            .map(|c| if c == ',' || c == '{' || c == '}' || c == '(' || c == ')' { ' ' } else { c })
            .collect();
        if header.len() < 3 {
            header.push((lineno + 1, cleaned));
        } else if header.len() == 3 {
            header.push((lineno + 1, cleaned));
        } else {
            entry_lines.push((lineno + 1, cleaned));
        }
    }
    if header.len() < 4 {
        return Err(SdpError::Parse { line: 0, message: "missing header lines".into() });
    }
    let parse_usize = |s: &str, line: usize| {
        s.parse::<i64>().map_err(|_| SdpError::Parse { line, message: format!("bad integer `{s}`") })
    };
    let (l0, m_line) = &header[0];
    let m = parse_usize(m_line.split_whitespace().next().unwrap_or(""), *l0)? as usize;
    let (l1, nb_line) = &header[1];
    let nblocks = parse_usize(nb_line.split_whitespace().next().unwrap_or(""), *l1)? as usize;
    let (l2, sizes_line) = &header[2];
    let mut blocks = Vec::new();
    for tok in sizes_line.split_whitespace() {
        let v = parse_usize(tok, *l2)?;
        if v == 0 {
            return Err(SdpError::Parse { line: *l2, message: "zero block size".into() });
        }
        if v < 0 {
            blocks.push(BlockSpec::Diag((-v) as usize));
        } else {
            blocks.push(BlockSpec::Dense(v as usize));
        }
    }
    if blocks.len() != nblocks {
        return Err(SdpError::Parse {
            line: *l2,
            message: format!("expected {nblocks} block sizes, found {}", blocks.len()),
        });
    }
    let (l3, obj_line) = &header[3];
    let mut objective = Vec::new();
    for tok in obj_line.split_whitespace() {
        let v: f64 = tok
            .parse()
            .map_err(|_| SdpError::Parse { line: *l3, message: format!("bad number `{tok}`") })?;
        objective.push(-v);
    }
    if objective.len() != m {
        return Err(SdpError::Parse {
            line: *l3,
            message: format!("expected {m} objective values, found {}", objective.len()),
        });
    }
    let mut prob = SdpProblem::new(blocks.clone(), m);
    prob.objective = objective;
    for (line, text) in entry_lines {
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(SdpError::Parse { line, message: format!("expected 5 fields, found {}", toks.len()) });
        }
        let matno = parse_usize(toks[0], line)? as usize;
        let blkno = parse_usize(toks[1], line)? as usize;
        let i = parse_usize(toks[2], line)? as usize;
        let j = parse_usize(toks[3], line)? as usize;
        let v: f64 = toks[4]
            .parse()
            .map_err(|_| SdpError::Parse { line, message: format!("bad number `{}`", toks[4]) })?;
        if matno > m || blkno == 0 || blkno > prob.blocks.len() {
            return Err(SdpError::Parse { line, message: "matrix or block index out of range".into() });
        }
        let n = prob.blocks[blkno - 1].dim();
        if i == 0 || j == 0 || i > n || j > n || i > j {
            return Err(SdpError::Parse { line, message: format!("entry ({i},{j}) out of range (block size {n}, need i ≤ j)") });
        }
        if matno == 0 {
            prob.add_f0(blkno - 1, i - 1, j - 1, -v);
        } else {
            prob.add_coeff(matno - 1, blkno - 1, i - 1, j - 1, v);
        }
    }
    prob.validate()?;
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::model::BlockSpec;

    /// 1 variable, one 2×2 block: maximize t s.t. [[1, t], [t, 1]] ⪰ 0.
    fn toy() -> SdpProblem {
        let mut p = SdpProblem::new(alloc::vec![BlockSpec::Dense(2)], 1);
        p.objective[0] = 1.0;
        p.set_f0(0, 0, 0, 1.0);
        p.set_f0(0, 1, 1, 1.0);
        p.add_coeff(0, 0, 0, 1, 1.0);
        p
    }

    #[test]
    fn toy_export_shape() {
        let text = write_sdpa(&toy());
        let lines: Vec<&str> = text.lines().collect();
        // header (4 lines) + two F0 entries + one coefficient entry
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "1");
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "2");
        assert_eq!(lines[3], "-1");
        assert!(lines.iter().any(|l| *l == "1 1 1 2 1"));
    }

    #[test]
    fn round_trip_is_identity() {
        let p = toy();
        let q = parse_sdpa(&write_sdpa(&p)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn round_trip_with_bounds_and_diag() {
        let mut p = SdpProblem::new(alloc::vec![BlockSpec::Dense(2), BlockSpec::Diag(3)], 2);
        p.objective = alloc::vec![0.25, -1.5e-7];
        p.set_f0(0, 0, 1, core::f64::consts::PI);
        p.set_f0(1, 2, 2, -0.125);
        p.add_coeff(0, 0, 0, 0, 1.0 / 3.0);
        p.add_coeff(1, 1, 1, 1, -7.0);
        p.bounds = Some(alloc::vec![(-1.0, 2.0), (-0.5, 0.5)]);
        let q = parse_sdpa(&write_sdpa(&p)).unwrap();
        // bounds were lowered on export, so compare against the canonical form
        assert_eq!(p.canonical(), q);
    }

    #[test]
    fn empty_objective_writes_zero_vector() {
        let mut p = SdpProblem::new(alloc::vec![BlockSpec::Dense(1)], 2);
        p.set_f0(0, 0, 0, 1.0);
        let text = write_sdpa(&p);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[3], "-0 -0");
        let q = parse_sdpa(&text).unwrap();
        assert_eq!(q.objective, alloc::vec![0.0, 0.0]);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(parse_sdpa("").is_err());
        assert!(parse_sdpa("1\n1\n2\n1\n1 1 3 3 1.0\n").is_err()); // out of range
        assert!(parse_sdpa("1\n1\n2\n1\n1 1 2 1 1.0\n").is_err()); // lower triangle
        assert!(parse_sdpa("1\n1\ntwo\n1\n").is_err());
    }
}
