//! Problem data for block-diagonal SDPs in LMI form.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::mat::RMat;

/// One block of the constraint matrix: dense symmetric or diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSpec {
    Dense(usize),
    Diag(usize),
}

impl BlockSpec {
    pub fn dim(&self) -> usize {
        match self {
            BlockSpec::Dense(n) | BlockSpec::Diag(n) => *n,
        }
    }
}

/// Block-diagonal symmetric matrix matching a list of [`BlockSpec`]s.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockData {
    Dense(RMat),
    Diag(Vec<f64>),
}

impl BlockData {
    pub fn zeros(spec: BlockSpec) -> Self {
        match spec {
            BlockSpec::Dense(n) => BlockData::Dense(RMat::zeros(n, n)),
            BlockSpec::Diag(n) => BlockData::Diag(vec![0.0; n]),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            BlockData::Dense(m) => m.max_abs(),
            BlockData::Diag(d) => d.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn min_eig(&self) -> f64 {
        match self {
            BlockData::Dense(m) => m.min_eig_sym(),
            BlockData::Diag(d) => d.iter().fold(f64::INFINITY, |m, &x| m.min(x)),
        }
    }
}

/// A symmetric coefficient entry at (i, j) with i ≤ j; off-diagonal entries
/// stand for the value mirrored at (j, i) as well.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseEntry {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SdpError {
    Shape(String),
    Parse { line: usize, message: String },
    TooLarge { total: usize, cap: usize },
}

impl core::fmt::Display for SdpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SdpError::Shape(s) => write!(f, "malformed problem: {s}"),
            SdpError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            SdpError::TooLarge { total, cap } => {
                write!(f, "total block dimension {total} exceeds cap {cap}")
            }
        }
    }
}

impl core::error::Error for SdpError {}

/// maximize `objective`·y subject to F₀ + Σ yₖ Fₖ ⪰ 0, with optional finite
/// box bounds on y.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub f0: Vec<BlockData>,
    /// coefficient entries grouped per variable
    pub coeffs: Vec<Vec<SparseEntry>>,
    /// optional finite box bounds per variable
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<BlockSpec>, num_vars: usize) -> Self {
        let f0 = blocks.iter().map(|&s| BlockData::zeros(s)).collect();
        SdpProblem {
            blocks,
            num_vars,
            objective: vec![0.0; num_vars],
            f0,
            coeffs: vec![Vec::new(); num_vars],
            bounds: None,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn set_f0(&mut self, block: usize, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match &mut self.f0[block] {
            BlockData::Dense(m) => {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
            BlockData::Diag(d) => {
                assert_eq!(i, j, "diagonal block entry must be on the diagonal");
                d[i] = v;
            }
        }
    }

    pub fn add_f0(&mut self, block: usize, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match &mut self.f0[block] {
            BlockData::Dense(m) => {
                m[(i, j)] += v;
                if i != j {
                    m[(j, i)] += v;
                }
            }
            BlockData::Diag(d) => {
                assert_eq!(i, j);
                d[i] += v;
            }
        }
    }

    /// Accumulate a coefficient entry of F_k (symmetric position, i ≤ j).
    pub fn add_coeff(&mut self, var: usize, block: usize, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        if matches!(self.blocks[block], BlockSpec::Diag(_)) {
            assert_eq!(i, j, "diagonal block entry must be on the diagonal");
        }
        // merge with an existing entry at the same position when present
        if let Some(e) = self.coeffs[var]
            .iter_mut()
            .find(|e| e.block == block && e.i == i && e.j == j)
        {
            e.value += v;
            return;
        }
        self.coeffs[var].push(SparseEntry { block, i, j, value: v });
    }

    /// Structural validation: entry indices in range, bound sanity.
    pub fn validate(&self) -> Result<(), SdpError> {
        if self.objective.len() != self.num_vars || self.coeffs.len() != self.num_vars {
            return Err(SdpError::Shape("objective/coefficient length vs num_vars".into()));
        }
        if self.f0.len() != self.blocks.len() {
            return Err(SdpError::Shape("F0 block count".into()));
        }
        for (b, (spec, data)) in self.blocks.iter().zip(self.f0.iter()).enumerate() {
            let ok = match (spec, data) {
                (BlockSpec::Dense(n), BlockData::Dense(m)) => m.rows == *n && m.cols == *n,
                (BlockSpec::Diag(n), BlockData::Diag(d)) => d.len() == *n,
                _ => false,
            };
            if !ok {
                return Err(SdpError::Shape(format!("block {b} data does not match its spec")));
            }
        }
        for (k, entries) in self.coeffs.iter().enumerate() {
            for e in entries {
                if e.block >= self.blocks.len() {
                    return Err(SdpError::Shape(format!("variable {k}: block {} out of range", e.block)));
                }
                let n = self.blocks[e.block].dim();
                if e.i > e.j || e.j >= n {
                    return Err(SdpError::Shape(format!(
                        "variable {k}: entry ({}, {}) out of range for block of size {n}",
                        e.i, e.j
                    )));
                }
                if matches!(self.blocks[e.block], BlockSpec::Diag(_)) && e.i != e.j {
                    return Err(SdpError::Shape(format!(
                        "variable {k}: off-diagonal entry in diagonal block {}",
                        e.block
                    )));
                }
                if !e.value.is_finite() {
                    return Err(SdpError::Shape(format!("variable {k}: non-finite coefficient")));
                }
            }
        }
        if let Some(bounds) = &self.bounds {
            if bounds.len() != self.num_vars {
                return Err(SdpError::Shape("bounds length".into()));
            }
            for (k, (lo, hi)) in bounds.iter().enumerate() {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(SdpError::Shape(format!("variable {k}: bounds must be finite with lo < hi")));
                }
            }
        }
        Ok(())
    }

    /// Lower box bounds into an explicit diagonal block, producing a pure
    /// LMI problem. Identity when no bounds are present.
    pub fn canonical(&self) -> SdpProblem {
        let bounds = match &self.bounds {
            None => return self.clone(),
            Some(b) => b.clone(),
        };
        let mut out = self.clone();
        out.bounds = None;
        let bb = out.blocks.len();
        out.blocks.push(BlockSpec::Diag(2 * self.num_vars));
        let mut diag = vec![0.0; 2 * self.num_vars];
        for (k, (lo, hi)) in bounds.iter().enumerate() {
            // y_k − lo ≥ 0 and hi − y_k ≥ 0
            diag[2 * k] = -lo;
            diag[2 * k + 1] = *hi;
        }
        out.f0.push(BlockData::Diag(diag));
        for k in 0..self.num_vars {
            out.coeffs[k].push(SparseEntry { block: bb, i: 2 * k, j: 2 * k, value: 1.0 });
            out.coeffs[k].push(SparseEntry { block: bb, i: 2 * k + 1, j: 2 * k + 1, value: -1.0 });
        }
        out
    }

    /// Evaluate the slack S(y) = F₀ + Σ yₖ Fₖ.
    pub fn slack_at(&self, y: &[f64]) -> Vec<BlockData> {
        let mut s = self.f0.clone();
        for (k, entries) in self.coeffs.iter().enumerate() {
            let yk = y[k];
            if yk == 0.0 {
                continue;
            }
            for e in entries {
                match &mut s[e.block] {
                    BlockData::Dense(m) => {
                        m[(e.i, e.j)] += yk * e.value;
                        if e.i != e.j {
                            m[(e.j, e.i)] += yk * e.value;
                        }
                    }
                    BlockData::Diag(d) => d[e.i] += yk * e.value,
                }
            }
        }
        s
    }
}
