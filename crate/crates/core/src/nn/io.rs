//! Plain-text network dump.
//!
//! ```text
//! randcloud-network 1
//! topology 4 3 2
//! layer 1 3 4
//! <4 weights of neuron 0>
//! <4 weights of neuron 1>
//! <4 weights of neuron 2>
//! bias <3 biases>
//! layer 2 2 3
//! ...
//! ```
//!
//! `layer <l> <outputs> <inputs>` opens weight layer `l` (1-based). Values are
//! separated by single spaces and written with Rust's shortest round-trip
//! formatting, so a dump parses back to bit-identical `f64`s.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nn::{Layer, Network, Topology};

pub const NETWORK_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "randcloud-network";

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

pub fn write_network(net: &Network) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {NETWORK_FORMAT_VERSION}").unwrap();
    let widths: Vec<String> = net
        .topology()
        .widths()
        .iter()
        .map(usize::to_string)
        .collect();
    writeln!(out, "topology {}", widths.join(" ")).unwrap();
    for (l, layer) in net.layers().iter().enumerate() {
        writeln!(
            out,
            "layer {} {} {}",
            l + 1,
            layer.outputs(),
            layer.inputs()
        )
        .unwrap();
        for i in 0..layer.outputs() {
            writeln!(out, "{}", join(layer.row(i))).unwrap();
        }
        writeln!(out, "bias {}", join(layer.biases())).unwrap();
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::NetworkFormat {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut parts = line.split(' ');
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(parts.collect())
    }

    fn floats(&self, parts: &[&str], expected: usize) -> Result<Vec<f64>> {
        let parts: Vec<&str> = parts.iter().copied().filter(|p| !p.is_empty()).collect();
        if parts.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", parts.len())));
        }
        parts
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| self.err(format!("bad number `{p}`")))
            })
            .collect()
    }

    fn ints(&self, parts: &[&str]) -> Result<Vec<usize>> {
        parts
            .iter()
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| self.err(format!("bad integer `{p}`")))
            })
            .collect()
    }
}

pub fn read_network(text: &str) -> Result<Network> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.keyed(MAGIC)?;
    if header != [NETWORK_FORMAT_VERSION.to_string().as_str()] {
        return Err(lines.err(format!("unsupported version {header:?}")));
    }
    let parts = lines.keyed("topology")?;
    let widths = lines.ints(&parts)?;
    let topology = Topology::new(widths).map_err(|e| lines.err(e.to_string()))?;
    let mut layers = Vec::with_capacity(topology.depth());
    for (l, w) in topology.widths().windows(2).enumerate() {
        let parts = lines.keyed("layer")?;
        let dims = lines.ints(&parts)?;
        if dims != [l + 1, w[1], w[0]] {
            return Err(lines.err(format!("layer header {dims:?} disagrees with topology")));
        }
        let mut weights = Vec::with_capacity(w[0] * w[1]);
        for _ in 0..w[1] {
            let row: Vec<&str> = lines.next()?.split(' ').collect();
            weights.extend(lines.floats(&row, w[0])?);
        }
        let parts = lines.keyed("bias")?;
        let biases = lines.floats(&parts, w[1])?;
        layers.push(Layer::new(w[1], w[0], weights, biases)?);
    }
    let net = Network::from_layers(layers)?;
    if net.topology() != &topology {
        return Err(lines.err("layers disagree with topology"));
    }
    Ok(net)
}
