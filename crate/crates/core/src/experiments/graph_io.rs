//! Canonical text format for graphs.
//!
//! ```text
//! spag v1 view=<growth|stationary> d=<int> t=<float> n=<int> m=<int> gamma=<f> beta=<f> delta=<f|inf> a=<f> seed=<hex>
//! v <id> <birth> <coord_1> ... <coord_d>      (n lines, in id order)
//! e <older_id> <younger_id>                   (m lines, in younger-birth order)
//! ```
//!
//! Floats are written as the shortest decimal that reads back to the same
//! double, so write, read and write again gives identical bytes.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::generator::{Edge, Graph, View};
use crate::geometry::{SpaceTimePoint, TorusPoint};
use crate::model::ModelParams;

use super::config::{parse_f64, parse_seed};

const MAGIC: &str = "spag v1";

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

/// Header line without the trailing newline.
pub fn header_line(g: &Graph) -> String {
    let p = g.params();
    format!(
        "{MAGIC} view={} d={} t={} n={} m={} gamma={} beta={} delta={} a={} seed={:#018x}",
        g.view(),
        p.d(),
        fmt_f64(g.t()),
        g.num_vertices(),
        g.num_edges(),
        fmt_f64(p.gamma()),
        fmt_f64(p.beta()),
        fmt_f64(p.delta()),
        fmt_f64(p.a()),
        g.seed()
    )
}

pub fn write_graph<W: Write>(g: &Graph, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "{}", header_line(g))?;
    let mut line = String::new();
    for (id, v) in g.vertices().iter().enumerate() {
        line.clear();
        write!(line, "v {id} {}", fmt_f64(v.birth)).expect("writing to a string");
        for &c in v.position.coords() {
            write!(line, " {}", fmt_f64(c)).expect("writing to a string");
        }
        writeln!(out, "{line}")?;
    }
    for e in g.edges() {
        writeln!(out, "e {} {}", e.older, e.younger)?;
    }
    out.flush()?;
    Ok(())
}

pub fn graph_to_string(g: &Graph) -> String {
    let mut buf = Vec::new();
    write_graph(g, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("the format is ASCII")
}

pub fn save_graph(g: &Graph, path: &Path) -> Result<()> {
    write_graph(g, std::fs::File::create(path)?)
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Header {
    view: View,
    d: usize,
    t: f64,
    n: usize,
    m: usize,
    params: ModelParams,
    seed: u64,
}

fn parse_header(text: &str) -> Result<Header> {
    let rest = text
        .strip_prefix(MAGIC)
        .ok_or_else(|| perr(1, format!("header must start with `{MAGIC}`")))?;
    let expected = ["view", "d", "t", "n", "m", "gamma", "beta", "delta", "a", "seed"];
    let fields: Vec<(&str, &str)> = rest
        .split_whitespace()
        .map(|tok| tok.split_once('=').ok_or_else(|| perr(1, format!("malformed header field `{tok}`"))))
        .collect::<Result<_>>()?;
    let keys: Vec<&str> = fields.iter().map(|f| f.0).collect();
    if keys != expected {
        return Err(perr(1, format!("header fields {keys:?}, expected {expected:?}")));
    }
    let value = |i: usize| fields[i].1;
    let float = |i: usize| parse_f64(value(i)).ok_or_else(|| perr(1, format!("bad {}: `{}`", expected[i], value(i))));
    let int = |i: usize| {
        value(i)
            .parse::<usize>()
            .map_err(|_| perr(1, format!("bad {}: `{}`", expected[i], value(i))))
    };
    let view: View = value(0).parse().map_err(|_| perr(1, format!("bad view `{}`", value(0))))?;
    let d = int(1)?;
    let params = ModelParams::new(d, float(5)?, float(6)?, float(7)?, float(8)?).map_err(|e| perr(1, e.to_string()))?;
    Ok(Header {
        view,
        d,
        t: float(2)?,
        n: int(3)?,
        m: int(4)?,
        params,
        seed: parse_seed(value(9)).ok_or_else(|| perr(1, format!("bad seed `{}`", value(9))))?,
    })
}

pub fn read_graph<R: Read>(input: R) -> Result<Graph> {
    let mut lines = BufReader::new(input).lines();
    let mut next_line = |expect: &str, number: usize| -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| perr(number, format!("unexpected end of file, expected {expect}")))
    };
    let h = parse_header(&next_line("the header", 1)?)?;
    let volume = h.view.torus_volume(h.t);
    let mut vertices = Vec::with_capacity(h.n);
    for id in 0..h.n {
        let number = id + 2;
        let text = next_line("a vertex line", number)?;
        let mut tok = text.split(' ');
        if tok.next() != Some("v") {
            return Err(perr(number, format!("expected vertex line `v {id} ...`, got `{text}`")));
        }
        if tok.next().and_then(|s| s.parse::<usize>().ok()) != Some(id) {
            return Err(perr(number, format!("expected vertex id {id}")));
        }
        let nums: Vec<f64> = tok
            .map(|s| parse_f64(s).ok_or_else(|| perr(number, format!("bad number `{s}`"))))
            .collect::<Result<_>>()?;
        if nums.len() != h.d + 1 {
            return Err(perr(number, format!("expected birth and {} coordinates", h.d)));
        }
        let position = TorusPoint::new(nums[1..].to_vec(), volume).map_err(|e| perr(number, e.to_string()))?;
        vertices.push(SpaceTimePoint::new(position, nums[0]).map_err(|e| perr(number, e.to_string()))?);
    }
    let mut edges = Vec::with_capacity(h.m);
    for i in 0..h.m {
        let number = h.n + 2 + i;
        let text = next_line("an edge line", number)?;
        let tok: Vec<&str> = text.split(' ').collect();
        let parsed = match tok.as_slice() {
            ["e", a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
            _ => None,
        };
        let (older, younger) = parsed.ok_or_else(|| perr(number, format!("expected `e <older> <younger>`, got `{text}`")))?;
        edges.push(Edge { older, younger });
    }
    let after = h.n + h.m + 2;
    if let Some(extra) = next_line("", after).ok() {
        return Err(perr(after, format!("trailing content `{extra}` after {} vertices and {} edges", h.n, h.m)));
    }
    Graph::from_parts(h.view, h.t, h.params, h.seed, vertices, edges).map_err(|e| perr(after - 1, e.to_string()))
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    read_graph(text.as_bytes())
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    read_graph(std::fs::File::open(path)?)
}
