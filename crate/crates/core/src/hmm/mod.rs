//! Discrete hidden Markov models: scaled forward evaluation, Viterbi
//! decoding, Baum-Welch learning, and a per-class document classifier.

mod algo;
mod bank;
mod train;

pub use algo::{forward_scaled, viterbi, ForwardPass};
pub use bank::{
    build_symbol_vocab, classify_sequence, train_class_hmms, ClassHmmBank, HmmTrainConfig,
    SymbolVocab,
};
pub use train::baum_welch;

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::util::{fmt_g12, parse_g12};

#[derive(Debug, Error)]
pub enum HmmError {
    #[error("symbol {symbol} out of range (model has {n_symbols} symbols)")]
    SymbolOutOfRange { symbol: usize, n_symbols: usize },
    #[error("observation sequence has zero likelihood under the model")]
    ImpossibleSequence,
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("class `{0}` has no documents")]
    EmptyClass(String),
    #[error("row {0} of a stochastic matrix does not sum to 1")]
    NotStochastic(usize),
    #[error("model parse error at line {0}: {1}")]
    ParseError(u64, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HmmError>;

/// Discrete HMM: row-stochastic transition matrix `a[i][j]`, emission
/// matrix `b[state][symbol]`, and initial distribution `pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
}

const ROW_SUM_TOL: f64 = 1e-9;

impl HmmModel {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let model = Self { a, b, pi };
        model.validate()?;
        Ok(model)
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }

    /// Checks the stochasticity constraints: nonnegative entries and rows
    /// summing to 1 within 1e-9.
    pub fn validate(&self) -> Result<()> {
        let n = self.pi.len();
        let check_row = |row: &[f64], idx: usize| -> Result<()> {
            if row.iter().any(|&p| p < 0.0) || (row.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOL {
                return Err(HmmError::NotStochastic(idx));
            }
            Ok(())
        };
        check_row(&self.pi, 0)?;
        if self.a.len() != n || self.b.len() != n {
            return Err(HmmError::NotStochastic(0));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(HmmError::NotStochastic(i));
            }
            check_row(row, i)?;
        }
        let m = self.n_symbols();
        for (i, row) in self.b.iter().enumerate() {
            if row.len() != m {
                return Err(HmmError::NotStochastic(i));
            }
            check_row(row, i)?;
        }
        Ok(())
    }

    pub(crate) fn check_symbols(&self, obs: &ObservationSeq) -> Result<()> {
        let m = self.n_symbols();
        for &s in &obs.symbols {
            if s >= m {
                return Err(HmmError::SymbolOutOfRange { symbol: s, n_symbols: m });
            }
        }
        Ok(())
    }

    /// Writes `n_states`, `n_symbols`, then pi, A rows and B rows.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n_states {}", self.n_states())?;
        writeln!(w, "n_symbols {}", self.n_symbols())?;
        writeln!(w, "pi {}", join_g12(&self.pi))?;
        for row in &self.a {
            writeln!(w, "a {}", join_g12(row))?;
        }
        for row in &self.b {
            writeln!(w, "b {}", join_g12(row))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        Self::read_from_lines(&mut lines, &mut 0)
    }

    pub(crate) fn read_from_lines<I>(lines: &mut I, line_no: &mut u64) -> Result<Self>
    where
        I: Iterator<Item = std::io::Result<String>>,
    {
        fn next_field<I>(lines: &mut I, line_no: &mut u64, prefix: &str) -> Result<String>
        where
            I: Iterator<Item = std::io::Result<String>>,
        {
            *line_no += 1;
            let line = lines
                .next()
                .ok_or_else(|| HmmError::ParseError(*line_no, "truncated model".into()))??;
            line.strip_prefix(prefix)
                .map(str::to_string)
                .ok_or_else(|| HmmError::ParseError(*line_no, format!("expected `{prefix}`")))
        }
        let n: usize = next_field(lines, line_no, "n_states ")?
            .parse()
            .map_err(|_| HmmError::ParseError(*line_no, "bad n_states".into()))?;
        let m: usize = next_field(lines, line_no, "n_symbols ")?
            .parse()
            .map_err(|_| HmmError::ParseError(*line_no, "bad n_symbols".into()))?;
        let pi = parse_row(&next_field(lines, line_no, "pi ")?, *line_no, n)?;
        let mut a = Vec::with_capacity(n);
        for _ in 0..n {
            a.push(parse_row(&next_field(lines, line_no, "a ")?, *line_no, n)?);
        }
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            b.push(parse_row(&next_field(lines, line_no, "b ")?, *line_no, m)?);
        }
        Ok(Self { a, b, pi })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        buf
    }
}

fn join_g12(row: &[f64]) -> String {
    row.iter().map(|&v| fmt_g12(v)).collect::<Vec<_>>().join(" ")
}

fn parse_row(s: &str, line: u64, expect: usize) -> Result<Vec<f64>> {
    let row: Vec<f64> = s
        .split(' ')
        .map(|tok| parse_g12(tok).ok_or_else(|| HmmError::ParseError(line, format!("bad value `{tok}`"))))
        .collect::<Result<_>>()?;
    if row.len() != expect {
        return Err(HmmError::ParseError(line, format!("expected {expect} values")));
    }
    Ok(row)
}

/// Observed symbol indices `O_1..O_T`, T >= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationSeq {
    pub symbols: Vec<usize>,
}

impl ObservationSeq {
    pub fn new(symbols: Vec<usize>) -> Self {
        assert!(!symbols.is_empty(), "observation sequences need T >= 1");
        Self { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
