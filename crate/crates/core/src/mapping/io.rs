//! Text container for trained models.
//!
//! ```text
//! normprobe-model 1
//! kind mlp
//! W1 4 6
//! <4 lines of 6 values>
//! b1 1 6
//! ...
//! ```
//!
//! Values are written with 17 significant digits, which round-trips every
//! finite `f64`.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use super::{LinearMap, MlpMap, Model};
use crate::error::{Error, Result};

const MAGIC: &str = "normprobe-model 1";

fn write_block<W: Write>(
    out: &mut W,
    name: &str,
    rows: usize,
    cols: usize,
    value: impl Fn(usize, usize) -> f64,
) -> std::io::Result<()> {
    writeln!(out, "{name} {rows} {cols}")?;
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.write_all(b" ")?;
            }
            write!(out, "{:.16e}", value(i, j))?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_model<W: Write>(model: &Model, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    match model {
        Model::Linear(m) => {
            writeln!(out, "kind linear")?;
            let mat = m.matrix();
            write_block(&mut out, "M", mat.nrows(), mat.ncols(), |i, j| mat[(i, j)])?;
        }
        Model::Mlp(net) => {
            writeln!(out, "kind mlp")?;
            write_block(&mut out, "W1", net.w1.nrows(), net.w1.ncols(), |i, j| net.w1[(i, j)])?;
            write_block(&mut out, "b1", 1, net.b1.len(), |_, j| net.b1[j])?;
            write_block(&mut out, "W2", net.w2.nrows(), net.w2.ncols(), |i, j| net.w2[(i, j)])?;
            write_block(&mut out, "b2", 1, net.b2.len(), |_, j| net.b2[j])?;
        }
    }
    out.flush()
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(Ok(l)) if l.trim().is_empty() => continue,
                Some(Ok(l)) => return Ok(l),
                Some(Err(e)) => return Err(Error::Model(format!("line {}: {e}", self.line))),
                None => return Err(Error::Model(format!("line {}: unexpected end of file", self.line))),
            }
        }
    }

    fn fail(&self, msg: impl std::fmt::Display) -> Error {
        Error::Model(format!("line {}: {msg}", self.line))
    }

    fn block(&mut self, name: &str) -> Result<DMatrix<f64>> {
        let header = self.next()?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let dims = match fields.as_slice() {
            [n, r, c] if *n == name => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
            _ => None,
        };
        let (rows, cols) = dims.ok_or_else(|| self.fail(format!("expected \"{name} <rows> <cols>\"")))?;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = self.next()?;
            let before = values.len();
            for f in line.split_whitespace() {
                let v: f64 = f.parse().map_err(|_| self.fail(format!("bad number {f:?}")))?;
                values.push(v);
            }
            if values.len() - before != cols {
                return Err(self.fail(format!("{name}: expected {cols} values")));
            }
        }
        Ok(DMatrix::from_row_slice(rows, cols, &values))
    }
}

fn row_vector(m: DMatrix<f64>) -> Result<DVector<f64>> {
    if m.nrows() != 1 {
        return Err(Error::Model("bias blocks must have one row".into()));
    }
    Ok(DVector::from_iterator(m.ncols(), m.iter().copied()))
}

pub fn read_model<R: BufRead>(input: R) -> Result<Model> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    if lines.next()?.trim() != MAGIC {
        return Err(lines.fail(format!("expected \"{MAGIC}\"")));
    }
    let kind = lines.next()?;
    match kind.trim() {
        "kind linear" => Ok(Model::Linear(LinearMap::new(lines.block("M")?)?)),
        "kind mlp" => {
            let w1 = lines.block("W1")?;
            let b1 = row_vector(lines.block("b1")?)?;
            let w2 = lines.block("W2")?;
            let b2 = row_vector(lines.block("b2")?)?;
            Ok(Model::Mlp(MlpMap::new(w1, b1, w2, b2)?))
        }
        other => Err(lines.fail(format!("unknown model kind {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn round_trip(model: &Model) -> Model {
        let mut buf = Vec::new();
        write_model(model, &mut buf).unwrap();
        read_model(Cursor::new(buf)).unwrap()
    }

    proptest! {
        #[test]
        fn linear_round_trip_is_lossless(values in prop::collection::vec(-1e300f64..1e300, 6)) {
            let model = Model::Linear(LinearMap::new(DMatrix::from_vec(2, 3, values)).unwrap());
            prop_assert_eq!(round_trip(&model), model);
        }

        #[test]
        fn mlp_round_trip_is_lossless(seed in any::<u64>(), bias in -1e5f64..1e5) {
            let mut net = MlpMap::init(3, 5, 2, 0.7, seed);
            net.b1.fill(bias / 3.0);
            net.b2[1] = bias;
            let model = Model::Mlp(net);
            prop_assert_eq!(round_trip(&model), model);
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        for text in [
            "",
            "normprobe-model 2\nkind linear\nM 1 1\n0\n",
            "normprobe-model 1\nkind tree\n",
            "normprobe-model 1\nkind linear\nM 1 2\n0\n",
            "normprobe-model 1\nkind linear\nM 1 1\nabc\n",
            "normprobe-model 1\nkind mlp\nW1 1 1\n0\nb1 2 1\n0\n0\n",
        ] {
            assert!(read_model(Cursor::new(text)).is_err(), "{text:?}");
        }
    }
}
