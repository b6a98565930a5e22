//! File formats: instance JSON, MAX-CUT edge lists, dense matrix JSON and
//! canonical JSON emission.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::csp::CspInstance;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Serializes `value` as canonical JSON: object keys sorted, no whitespace,
/// floats in 17-significant-digit exponent form, non-finite floats as
/// `null`, and a trailing LF.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse {
        location: "serializer".into(),
        message: e.to_string(),
    })?;
    let mut out = String::new();
    write_value(&v, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                match n.as_f64() {
                    Some(x) if x.is_finite() => {
                        let _ = write!(out, "{x:.16e}");
                    }
                    _ => out.push_str("null"),
                }
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(&map[k], out);
            }
            out.push('}');
        }
    }
}

fn json_error(e: serde_json::Error) -> Error {
    let mut message = e.to_string();
    if let Some(at) = message.rfind(" at line ") {
        message.truncate(at);
    }
    Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message,
    }
}

/// Deserializes any JSON document with line/column diagnostics.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(json_error)
}

/// Parses and validates an instance.
pub fn parse_instance(text: &str) -> Result<CspInstance> {
    let inst: CspInstance = parse_json(text)?;
    inst.check()?;
    Ok(inst)
}

pub fn instance_to_json(inst: &CspInstance) -> Result<String> {
    to_canonical_json(inst)
}

/// An undirected simple graph in MAX-CUT edge-list form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Checks ranges, self-loops and duplicates.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (idx, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidInstance(format!(
                    "edge {idx}: endpoint out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInstance(format!("edge {idx}: self-loop on {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidInstance(format!("edge {idx}: duplicate edge")));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn to_instance(&self) -> CspInstance {
        CspInstance::maxcut(self.n, &self.edges)
    }

    pub fn adjacency(&self) -> SymMatrix {
        let mut a = SymMatrix::zeros(self.n);
        for &(u, v) in &self.edges {
            a.set_sym(u, v, 1.0);
        }
        a
    }

    /// Number of edges with endpoints on different sides.
    pub fn cut_size(&self, sides: &[usize]) -> usize {
        self.edges.iter().filter(|&&(u, v)| sides[u] != sides[v]).count()
    }

    /// The graph of a MAX-CUT instance; other predicates are rejected.
    pub fn from_instance(inst: &CspInstance) -> Result<Self> {
        if inst.q != 2 {
            return Err(Error::InvalidInstance("MAX-CUT needs q = 2".into()));
        }
        let mut edges = Vec::with_capacity(inst.m());
        for (idx, e) in inst.edges.iter().enumerate() {
            let mut pairs = e.allowed.clone();
            pairs.sort();
            if pairs != [[0, 1], [1, 0]] {
                return Err(Error::InvalidInstance(format!(
                    "edge {idx}: predicate is not inequality"
                )));
            }
            edges.push((e.u, e.v));
        }
        Self::new(inst.n, edges)
    }

    /// `n m` header followed by one `u v` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("line {line}"),
        message: message.into(),
    }
}

fn parse_pair(line: &str, lineno: usize, what: &str) -> Result<(usize, usize)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_error(
            lineno,
            format!("expected `{what}`, found {} fields", fields.len()),
        ));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_error(lineno, format!("`{s}` is not a non-negative integer")))
    };
    Ok((num(fields[0])?, num(fields[1])?))
}

/// Parses the MAX-CUT edge-list format. Blank lines are ignored.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (lineno, header) = lines.next().ok_or_else(|| parse_error(1, "empty input"))?;
    let (n, m) = parse_pair(header, lineno, "n m")?;
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines {
        if edges.len() == m {
            return Err(parse_error(lineno, format!("more than the declared {m} edges")));
        }
        let (u, v) = parse_pair(line, lineno, "u v")?;
        if u >= n || v >= n {
            return Err(parse_error(lineno, format!("endpoint out of range for n = {n}")));
        }
        if u == v {
            return Err(parse_error(lineno, format!("self-loop on {u}")));
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(parse_error(
            text.lines().count().max(1),
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    Graph::new(n, edges)
}

#[derive(Deserialize)]
struct MatrixFile {
    matrix: Vec<Vec<f64>>,
}

/// Parses `{"matrix": [[...], ...]}` into a symmetric matrix.
pub fn parse_matrix(text: &str) -> Result<SymMatrix> {
    let f: MatrixFile = parse_json(text)?;
    let n = f.matrix.len();
    if let Some((i, row)) = f.matrix.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Parse {
            location: format!("matrix row {i}"),
            message: format!("has {} entries, expected {n}", row.len()),
        });
    }
    SymMatrix::from_rows(&f.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sorts_keys_and_formats_floats() {
        #[derive(Serialize)]
        struct S {
            zeta: f64,
            alpha: u32,
            nan: f64,
            name: &'static str,
        }
        let s = to_canonical_json(&S {
            zeta: 0.1,
            alpha: 3,
            nan: f64::NAN,
            name: "a\"b",
        })
        .unwrap();
        assert_eq!(
            s,
            "{\"alpha\":3,\"name\":\"a\\\"b\",\"nan\":null,\"zeta\":1.0000000000000001e-1}\n"
        );
    }

    #[test]
    fn canonical_floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678] {
            let s = to_canonical_json(&x).unwrap();
            let back: f64 = s.trim().parse().unwrap();
            assert_eq!(back, x);
        }
    }

    #[test]
    fn instance_round_trip() {
        let inst = CspInstance::maxcut(3, &[(0, 1), (1, 2)]).with_name("path");
        let text = instance_to_json(&inst).unwrap();
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(instance_to_json(&back).unwrap(), text);
    }

    #[test]
    fn instance_diagnostics() {
        let err = parse_instance("{\"n\": 3,\n \"q\": 2,\n \"edges\": [}").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.starts_with("line 3")),
            other => panic!("{other}"),
        }
        let err = parse_instance(r#"{"n":3,"q":2,"edges":[{"u":2,"v":2,"allowed":[[0,1]]}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("self-loop"));
    }

    #[test]
    fn graph_text_round_trip() {
        let g = parse_graph("4 4\n0 1\n1 2\n2 3\n0 3\n").unwrap();
        assert_eq!(g.m(), 4);
        assert_eq!(parse_graph(&g.to_text()).unwrap(), g);
        assert_eq!(g.cut_size(&[0, 1, 0, 1]), 4);
        assert_eq!(Graph::from_instance(&g.to_instance()).unwrap().edges, g.edges);
    }

    #[test]
    fn graph_diagnostics() {
        let e = parse_graph("3 2\n0 1\n1 x\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = parse_graph("3 3\n0 1\n").unwrap_err();
        assert!(e.to_string().contains("declares 3"), "{e}");
        assert!(parse_graph("3 1\n1 1\n").is_err());
        assert!(parse_graph("3 2\n0 1\n1 0\n").is_err());
    }

    #[test]
    fn matrix_file() {
        let m = parse_matrix(r#"{"matrix": [[0, 1], [1, 0]]}"#).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert!(parse_matrix(r#"{"matrix": [[0, 1], [2, 0]]}"#).is_err());
        assert!(parse_matrix(r#"{"matrix": [[0, 1]]}"#).is_err());
    }
}
