//! Plain-text model files.

use std::io::{BufRead, Write};

use super::model::{Activation, Layer, MlpModel};
use crate::emission::format::fmt_f64;
use crate::error::{Error, Module, Result};

const MAGIC: &str = "# qrf-mlp v1";

pub fn write_model<W: Write>(model: &MlpModel, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    let dims: Vec<String> = model.layer_dims.iter().map(|d| d.to_string()).collect();
    writeln!(out, "dims = {}", dims.join(","))?;
    writeln!(out, "hidden_activation = {}", model.hidden_activation.as_str())?;
    writeln!(out, "output_activation = logistic")?;
    for (i, l) in model.layers.iter().enumerate() {
        writeln!(out, "[layer {i} weights {}x{}]", l.outputs, l.inputs)?;
        for row in l.weights.chunks(l.inputs) {
            let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        writeln!(out, "[layer {i} biases {}]", l.outputs)?;
        let cells: Vec<String> = l.biases.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self, what: &str) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok(l.trim().to_string());
                    }
                }
                None => return Err(self.err(format!("unexpected end of file, expected {what}"))),
            }
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::parse(Module::Classifier, self.line, reason)
    }

    fn value(&mut self, key: &str) -> Result<String> {
        let l = self.next(key)?;
        match l.split_once('=') {
            Some((k, v)) if k.trim() == key => Ok(v.trim().to_string()),
            _ => Err(self.err(format!("expected `{key} = ...`"))),
        }
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let l = self.next("values")?;
        let v: Vec<f64> = l
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| self.err(format!("bad number: {e}")))?;
        if v.len() != n {
            return Err(self.err(format!("expected {n} values, got {}", v.len())));
        }
        Ok(v)
    }

    fn expect(&mut self, header: &str) -> Result<()> {
        let l = self.next(header)?;
        if l != header {
            return Err(self.err(format!("expected `{header}`, got `{l}`")));
        }
        Ok(())
    }
}

pub fn read_model<R: BufRead>(input: R) -> Result<MlpModel> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    lines.expect(MAGIC)?;
    let dims: Vec<usize> = lines
        .value("dims")?
        .split(',')
        .map(|d| d.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| lines.err(format!("bad layer width: {e}")))?;
    if dims.len() < 2 {
        return Err(lines.err("need at least two layer widths"));
    }
    let hidden = lines.value("hidden_activation")?;
    let hidden = Activation::parse(&hidden)
        .ok_or_else(|| lines.err(format!("unknown activation `{hidden}`")))?;
    let output = lines.value("output_activation")?;
    if output != "logistic" {
        return Err(lines.err(format!("unsupported output activation `{output}`")));
    }
    let mut layers = Vec::new();
    for (i, d) in dims.windows(2).enumerate() {
        let (inputs, outputs) = (d[0], d[1]);
        lines.expect(&format!("[layer {i} weights {outputs}x{inputs}]"))?;
        let mut weights = Vec::with_capacity(inputs * outputs);
        for _ in 0..outputs {
            weights.extend(lines.floats(inputs)?);
        }
        lines.expect(&format!("[layer {i} biases {outputs}]"))?;
        let biases = lines.floats(outputs)?;
        layers.push(Layer {
            inputs,
            outputs,
            weights,
            biases,
        });
    }
    MlpModel::from_layers(layers, hidden)
}

#[cfg(test)]
mod tests {
    use super::super::model::init_model;
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let m = init_model(&[5, 3, 2, 1], 5, 11).unwrap().with_hidden_activation(Activation::Tanh);
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        assert_eq!(read_model(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn truncated_file_reports_line() {
        let m = init_model(&[2, 1], 2, 0).unwrap();
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        let err = read_model(cut.as_bytes()).unwrap_err();
        assert_eq!(err.code(), "classifier.parse");
    }
}
