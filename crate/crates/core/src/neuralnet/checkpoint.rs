//! Line-oriented text checkpoints.
//!
//! ```text
//! xrsched-qnet 1
//! hidden <H>
//! scale <s0> <s1> <s2> <s3> <s4>
//! param <name> <dim0> [<dim1>]
//! <value> <value> ...            (one line, row-major)
//! ...                             (one param/values pair per tensor, fixed order)
//! end
//! ```
//!
//! Numbers use the shortest decimal form that parses back to the same `f64`.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NetError, QNetwork};
use crate::rlenv::FEATURES;

pub const CHECKPOINT_MAGIC: &str = "xrsched-qnet";
pub const CHECKPOINT_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn save_checkpoint<W: Write>(net: &QNetwork, mut out: W) -> Result<(), NetError> {
    writeln!(out, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}")?;
    writeln!(out, "hidden {}", net.hidden)?;
    writeln!(out, "scale {}", join(&net.scale))?;
    for (name, p) in net.named_params() {
        let dims = p.value.shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "param {name} {dims}")?;
        writeln!(out, "{}", join(&p.value.data))?;
    }
    writeln!(out, "end")?;
    Ok(())
}

fn bad<T>(line: usize, msg: impl Into<String>) -> Result<T, NetError> {
    Err(NetError::Checkpoint(format!("line {line}: {}", msg.into())))
}

fn parse_floats(line: usize, text: &str) -> Result<Vec<f64>, NetError> {
    text.split_whitespace()
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => bad(line, format!("bad number {t:?}")),
        })
        .collect()
}

pub fn load_checkpoint<R: BufRead>(input: R) -> Result<QNetwork, NetError> {
    let lines: Vec<String> = input.lines().collect::<Result<_, _>>()?;
    let mut it = lines.iter().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| it.next().ok_or_else(|| NetError::Checkpoint(format!("missing {what}")));

    let (ln, header) = next("header")?;
    let mut h = header.split_whitespace();
    if h.next() != Some(CHECKPOINT_MAGIC) {
        return bad(ln, "not a q-network checkpoint");
    }
    match h.next().and_then(|v| v.parse::<u32>().ok()) {
        Some(CHECKPOINT_VERSION) => {}
        other => return bad(ln, format!("unsupported version {other:?}")),
    }

    let (ln, hidden_line) = next("hidden")?;
    let hidden = match hidden_line.strip_prefix("hidden ").and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(h) if h > 0 => h,
        _ => return bad(ln, "expected `hidden <H>`"),
    };

    let (ln, scale_line) = next("scale")?;
    let scale_vals = match scale_line.strip_prefix("scale ") {
        Some(rest) => parse_floats(ln, rest)?,
        None => return bad(ln, "expected `scale ...`"),
    };
    let scale: [f64; FEATURES] = match scale_vals.try_into() {
        Ok(s) => s,
        Err(_) => return bad(ln, format!("scale needs {FEATURES} values")),
    };
    if scale.contains(&0.0) {
        return bad(ln, "scale entries must be non-zero");
    }

    let mut net = QNetwork::new(hidden, scale, &mut ChaCha8Rng::seed_from_u64(0));
    let expected: Vec<(&'static str, Vec<usize>)> =
        net.named_params().iter().map(|(n, p)| (*n, p.value.shape.clone())).collect();
    for (p, (name, shape)) in net.params_mut().into_iter().zip(expected) {
        let (ln, decl) = next("param declaration")?;
        let mut d = decl.split_whitespace();
        if d.next() != Some("param") || d.next() != Some(name) {
            return bad(ln, format!("expected `param {name} ...`"));
        }
        let dims: Vec<usize> =
            d.map(|t| t.parse::<usize>()).collect::<Result<_, _>>().or_else(|_| bad(ln, "bad dims"))?;
        if dims != shape {
            return bad(ln, format!("{name}: shape {dims:?}, expected {shape:?}"));
        }
        let (ln, values) = next("param values")?;
        let data = parse_floats(ln, values)?;
        if data.len() != p.value.len() {
            return bad(ln, format!("{name}: {} values, expected {}", data.len(), p.value.len()));
        }
        p.value.data = data;
    }
    let (ln, end) = next("end")?;
    if end != "end" {
        return bad(ln, "expected `end`");
    }
    Ok(net)
}
