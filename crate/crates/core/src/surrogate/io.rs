use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, SurrogateModel};
use crate::error::{Error, Result};

const TAG: &str = "surrogate-v1";

/// Text model file. Parameters follow the header, weights then biases per
/// layer, row-major, one value per line with 17 significant digits.
pub fn write_model(model: &SurrogateModel, path: impl AsRef<Path>) -> Result<()> {
    model.check()?;
    let path = path.as_ref();
    let mut s = format!("{TAG}\n");
    let join = |v: Vec<String>| v.join(" ");
    let _ = writeln!(s, "dims {}", join(model.dims.iter().map(ToString::to_string).collect()));
    let _ = writeln!(s, "activations {}", join(model.activations.iter().map(ToString::to_string).collect()));
    let _ = writeln!(s, "encoding {}", model.encoding);
    let _ = writeln!(s, "rc {}", model.resource_cap);
    let _ = writeln!(s, "tmax {}", model.t_max);
    for (w, b) in model.weights.iter().zip(&model.biases) {
        for v in w.iter().chain(b.iter()) {
            let _ = writeln!(s, "{v:.16e}");
        }
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<SurrogateModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("model file ends before {what}")))
    };
    let (n, tag) = next("header")?;
    if tag != TAG {
        return Err(Error::parse(n, format!("expected `{TAG}`, found `{tag}`")));
    }
    let mut field = |key: &str| -> Result<(usize, String)> {
        let (n, l) = next(key)?;
        match l.split_once(' ').map(|(k, v)| (k, v.trim())).or((l == key).then_some((l, ""))) {
            Some((k, v)) if k == key => Ok((n, v.to_string())),
            _ => Err(Error::parse(n, format!("expected `{key}` line"))),
        }
    };
    let (n, dims) = field("dims")?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|d| d.parse().map_err(|_| Error::parse(n, format!("invalid width `{d}`"))))
        .collect::<Result<_>>()?;
    let (_, acts) = field("activations")?;
    let activations = acts.split_whitespace().map(str::parse).collect::<Result<Vec<Activation>>>()?;
    let (_, enc) = field("encoding")?;
    let encoding = enc.parse()?;
    let (n, rc) = field("rc")?;
    let resource_cap = rc.parse().map_err(|_| Error::parse(n, "invalid rc"))?;
    let (n, t) = field("tmax")?;
    let t_max = t.parse().map_err(|_| Error::parse(n, "invalid tmax"))?;

    let mut values = Vec::new();
    for (n, l) in lines {
        if l.is_empty() {
            continue;
        }
        values.push(l.parse::<f64>().map_err(|_| Error::parse(n, format!("invalid value `{l}`")))?);
    }
    let expected: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    if dims.len() < 2 || values.len() != expected {
        return Err(Error::Dimension {
            what: "model parameters",
            expected,
            actual: values.len(),
        });
    }
    let mut rest = &values[..];
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for w in dims.windows(2) {
        let (wv, tail) = rest.split_at(w[0] * w[1]);
        let (bv, tail) = tail.split_at(w[1]);
        weights.push(Array2::from_shape_vec((w[1], w[0]), wv.to_vec()).expect("sized"));
        biases.push(Array1::from(bv.to_vec()));
        rest = tail;
    }
    let model = SurrogateModel {
        dims,
        weights,
        biases,
        activations,
        encoding,
        resource_cap,
        t_max,
    };
    model.check()?;
    Ok(model)
}
