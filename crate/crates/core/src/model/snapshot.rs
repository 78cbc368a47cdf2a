//! Plain-text model checkpoints.
//!
//! ```text
//! # dass-model v1
//! dims <N> <K> <sample_count>
//! total_variance <v>
//! eigenvalues <λ_1> ... <λ_K>
//! mean <x̄_1> ... <x̄_N>
//! basis
//! <row 1: K numbers>
//! ...
//! <row N>
//! ```
//!
//! Numbers use the shortest representation that round-trips exactly.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{DassError, Result};
use crate::field::SignalModel;

pub const MODEL_FORMAT_HEADER: &str = "# dass-model v1";

pub fn write_model<W: Write>(model: &SignalModel, mut out: W) -> Result<()> {
    let (n, k) = model.basis().shape();
    writeln!(out, "{MODEL_FORMAT_HEADER}")?;
    writeln!(out, "dims {n} {k} {}", model.sample_count())?;
    writeln!(out, "total_variance {:e}", model.total_variance())?;
    write_row(&mut out, "eigenvalues", model.eigenvalues().iter())?;
    write_row(&mut out, "mean", model.mean().iter())?;
    writeln!(out, "basis")?;
    for r in 0..n {
        let row: Vec<String> = model.basis().row(r).iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

fn write_row<'a, W: Write>(out: &mut W, label: &str, values: impl Iterator<Item = &'a f64>) -> Result<()> {
    write!(out, "{label}")?;
    for v in values {
        write!(out, " {v:e}")?;
    }
    writeln!(out)?;
    Ok(())
}

pub fn read_model<R: BufRead>(input: R) -> Result<SignalModel> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((no, Ok(s))) => Ok((no, s)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(DassError::Parse {
                line: 0,
                column: 0,
                message: format!("unexpected end of model file, expected {what}"),
            }),
        }
    };

    let (no, header) = next("header")?;
    if header.trim() != MODEL_FORMAT_HEADER {
        return Err(parse_err(no, 1, format!("expected {MODEL_FORMAT_HEADER:?}")));
    }
    let (no, dims) = next("dims")?;
    let dims = labelled(no, &dims, "dims")?;
    if dims.len() != 3 {
        return Err(parse_err(no, 1, "dims needs N K sample_count".into()));
    }
    let as_usize = |v: f64, col: usize| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(parse_err(no, col, format!("{v} is not a count")))
        }
    };
    let (n, k, samples) = (as_usize(dims[0], 2)?, as_usize(dims[1], 3)?, as_usize(dims[2], 4)?);

    let (no, tv) = next("total_variance")?;
    let tv = labelled(no, &tv, "total_variance")?;
    let total_variance = *tv.first().ok_or_else(|| parse_err(no, 2, "missing value".into()))?;
    let (no, eig) = next("eigenvalues")?;
    let eig = expect_len(no, labelled(no, &eig, "eigenvalues")?, k)?;
    let (no, mean) = next("mean")?;
    let mean = expect_len(no, labelled(no, &mean, "mean")?, n)?;
    let (no, tag) = next("basis")?;
    if tag.trim() != "basis" {
        return Err(parse_err(no, 1, "expected \"basis\"".into()));
    }
    let mut data = Vec::with_capacity(n * k);
    for _ in 0..n {
        let (no, row) = next("basis row")?;
        data.extend(expect_len(no, numbers(no, &row, 1)?, k)?);
    }
    SignalModel::new(
        DMatrix::from_row_slice(n, k, &data),
        DVector::from_vec(mean),
        DVector::from_vec(eig),
        total_variance,
        samples,
    )
}

fn parse_err(line: usize, column: usize, message: String) -> DassError {
    DassError::Parse {
        line,
        column,
        message,
    }
}

fn labelled(line: usize, text: &str, label: &str) -> Result<Vec<f64>> {
    let rest = text
        .trim()
        .strip_prefix(label)
        .ok_or_else(|| parse_err(line, 1, format!("expected {label:?}")))?;
    numbers(line, rest, 2)
}

fn numbers(line: usize, text: &str, first_column: usize) -> Result<Vec<f64>> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, tok)| {
            tok.parse::<f64>()
                .map_err(|e| parse_err(line, first_column + i, format!("{tok:?}: {e}")))
        })
        .collect()
}

fn expect_len(line: usize, v: Vec<f64>, len: usize) -> Result<Vec<f64>> {
    if v.len() != len {
        return Err(parse_err(line, 1, format!("expected {len} values, found {}", v.len())));
    }
    Ok(v)
}
