//! Plain-text weights file.
//!
//! ```text
//! narma-l2-weights 1
//! n_delays_y 2
//! n_delays_u 2
//! hidden 10
//! x_mean <values>
//! ...
//! g.b2 <value>
//! ```
//! Every line is `key value...`; keys must appear in exactly this order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_file, write_file};

use super::{EpochRecord, Mlp, NarmaL2Net, Normalization};

const MAGIC: &str = "narma-l2-weights";
const VERSION: u32 = 1;

fn push_line(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        out.push(' ');
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

pub fn weights_to_string(net: &NarmaL2Net) -> String {
    let mut s = format!(
        "{MAGIC} {VERSION}\nn_delays_y {}\nn_delays_u {}\nhidden {}\n",
        net.n_delays_y,
        net.n_delays_u,
        net.hidden()
    );
    push_line(&mut s, "x_mean", &net.norm.x_mean);
    push_line(&mut s, "x_scale", &net.norm.x_scale);
    push_line(&mut s, "y_mean", &[net.norm.y_mean]);
    push_line(&mut s, "y_scale", &[net.norm.y_scale]);
    for (name, m) in [("f", &net.f_net), ("g", &net.g_net)] {
        push_line(&mut s, &format!("{name}.w1"), &m.w1);
        push_line(&mut s, &format!("{name}.b1"), &m.b1);
        push_line(&mut s, &format!("{name}.w2"), &m.w2);
        push_line(&mut s, &format!("{name}.b2"), &[m.b2]);
    }
    s
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    origin: &'a Path,
}

impl<'a> Lines<'a> {
    fn err(&self, reason: String) -> Error {
        Error::format(self.origin, reason)
    }

    fn next_fields(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (i, line) = self
            .iter
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or_else(|| Error::format(self.origin, format!("missing `{key}` line")))?;
        let mut parts = line.split_whitespace();
        let found = parts.next().unwrap_or_default();
        if found != key {
            return Err(self.err(format!("line {}: expected `{key}`, found `{found}`", i + 1)));
        }
        Ok((i + 1, parts.collect()))
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let (line, f) = self.next_fields(key)?;
        match f.as_slice() {
            [v] => v
                .parse::<usize>()
                .map_err(|e| self.err(format!("line {line}: `{key}`: {e}"))),
            _ => Err(self.err(format!("line {line}: `{key}` takes one integer"))),
        }
    }

    fn floats(&mut self, key: &str, n: usize) -> Result<Vec<f64>> {
        let (line, f) = self.next_fields(key)?;
        if f.len() != n {
            return Err(self.err(format!(
                "line {line}: `{key}` needs {n} values, found {}",
                f.len()
            )));
        }
        f.iter()
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                Ok(_) => Err(self.err(format!("line {line}: `{key}` holds a non-finite value"))),
                Err(e) => Err(self.err(format!("line {line}: `{key}`: `{v}`: {e}"))),
            })
            .collect()
    }

    fn mlp(&mut self, name: &str, inputs: usize, hidden: usize) -> Result<Mlp> {
        Ok(Mlp {
            inputs,
            hidden,
            w1: self.floats(&format!("{name}.w1"), inputs * hidden)?,
            b1: self.floats(&format!("{name}.b1"), hidden)?,
            w2: self.floats(&format!("{name}.w2"), hidden)?,
            b2: self.floats(&format!("{name}.b2"), 1)?[0],
        })
    }
}

/// Parses a weights file; `origin` is used only in error messages.
pub fn parse_weights(text: &str, origin: &Path) -> Result<NarmaL2Net> {
    let mut lines = Lines {
        iter: text.lines().enumerate(),
        origin,
    };
    let (_, head) = lines.next_fields(MAGIC)?;
    if head != [VERSION.to_string().as_str()] {
        return Err(lines.err(format!("unsupported version {head:?}, expected {VERSION}")));
    }
    let ny = lines.count("n_delays_y")?;
    let nu = lines.count("n_delays_u")?;
    let hidden = lines.count("hidden")?;
    if ny == 0 || nu == 0 || hidden == 0 {
        return Err(lines.err("delays and hidden size must be >= 1".into()));
    }
    let n = ny + nu - 1;
    let x_mean = lines.floats("x_mean", n)?;
    let x_scale = lines.floats("x_scale", n)?;
    let y_mean = lines.floats("y_mean", 1)?[0];
    let y_scale = lines.floats("y_scale", 1)?[0];
    if x_scale.iter().chain([&y_scale]).any(|&s| s <= 0.0) {
        return Err(lines.err("scales must be > 0".into()));
    }
    let f_net = lines.mlp("f", n, hidden)?;
    let g_net = lines.mlp("g", n, hidden)?;
    if let Some((i, l)) = lines.iter.find(|(_, l)| !l.trim().is_empty()) {
        return Err(lines.err(format!(
            "line {}: unexpected trailing content `{}`",
            i + 1,
            l.trim()
        )));
    }
    Ok(NarmaL2Net {
        n_delays_y: ny,
        n_delays_u: nu,
        f_net,
        g_net,
        norm: Normalization {
            x_mean,
            x_scale,
            y_mean,
            y_scale,
        },
    })
}

pub fn save_weights(net: &NarmaL2Net, path: &Path) -> Result<()> {
    write_file(path, &weights_to_string(net))
}

pub fn load_weights(path: &Path) -> Result<NarmaL2Net> {
    parse_weights(&read_file(path)?, path)
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_mse,val_mse,lambda\n");
    for r in history {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch,
            fmt_f64(r.train_mse),
            fmt_f64(r.val_mse),
            fmt_f64(r.lambda)
        ));
    }
    s
}
