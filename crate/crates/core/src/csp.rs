//! 2CSP instances, the label-extended graph and objective evaluation.
//!
//! Label-extended matrices use the block-by-variable layout: variable `i`
//! taking symbol `alpha` is row `q * i + alpha`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// One binary constraint: the set of symbol pairs `(a_u, a_v)` that satisfy it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub u: usize,
    pub v: usize,
    pub allowed: Vec<[usize; 2]>,
}

impl Constraint {
    pub fn new(u: usize, v: usize, allowed: Vec<[usize; 2]>) -> Self {
        Self { u, v, allowed }
    }

    pub fn allows(&self, a: usize, b: usize) -> bool {
        self.allowed.iter().any(|p| p[0] == a && p[1] == b)
    }
}

/// A MAX-2CSP instance over alphabet `[q]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CspInstance {
    pub n: usize,
    pub q: usize,
    pub edges: Vec<Constraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// An invariant breach found by [`CspInstance::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    AlphabetTooSmall(usize),
    NoVariables,
    SelfLoop { edge: usize, var: usize },
    Unordered { edge: usize },
    OutOfRange { edge: usize, var: usize },
    Duplicate { edge: usize, first: usize },
    EmptyPredicate { edge: usize },
    SymbolOutOfRange { edge: usize, symbol: usize },
    RepeatedPair { edge: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AlphabetTooSmall(q) => write!(f, "alphabet size {q} < 2"),
            Violation::NoVariables => write!(f, "instance has no variables"),
            Violation::SelfLoop { edge, var } => write!(f, "edge {edge}: self-loop on {var}"),
            Violation::Unordered { edge } => write!(f, "edge {edge}: endpoints not ordered u < v"),
            Violation::OutOfRange { edge, var } => {
                write!(f, "edge {edge}: variable {var} out of range")
            }
            Violation::Duplicate { edge, first } => {
                write!(f, "edge {edge}: duplicate of edge {first}")
            }
            Violation::EmptyPredicate { edge } => write!(f, "edge {edge}: empty predicate"),
            Violation::SymbolOutOfRange { edge, symbol } => {
                write!(f, "edge {edge}: symbol {symbol} out of range")
            }
            Violation::RepeatedPair { edge } => {
                write!(f, "edge {edge}: allowed pair listed twice")
            }
        }
    }
}

/// An assignment `x in [q]^n`.
pub type Assignment = Vec<usize>;

impl CspInstance {
    pub fn new(n: usize, q: usize, edges: Vec<Constraint>) -> Self {
        Self {
            n,
            q,
            edges,
            name: None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// MAX-CUT as a 2CSP: inequality predicates over `q = 2`.
    pub fn maxcut(n: usize, edges: &[(usize, usize)]) -> Self {
        let edges = edges
            .iter()
            .map(|&(u, v)| Constraint::new(u.min(v), u.max(v), vec![[0, 1], [1, 0]]))
            .collect();
        Self::new(n, 2, edges)
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// All invariant violations; empty iff the instance is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.q < 2 {
            out.push(Violation::AlphabetTooSmall(self.q));
        }
        if self.n == 0 {
            out.push(Violation::NoVariables);
        }
        let mut seen = std::collections::BTreeMap::new();
        for (idx, e) in self.edges.iter().enumerate() {
            if e.u == e.v {
                out.push(Violation::SelfLoop { edge: idx, var: e.u });
            } else if e.u > e.v {
                out.push(Violation::Unordered { edge: idx });
            }
            for var in [e.u, e.v] {
                if var >= self.n {
                    out.push(Violation::OutOfRange { edge: idx, var });
                }
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if let Some(&first) = seen.get(&key) {
                out.push(Violation::Duplicate { edge: idx, first });
            } else {
                seen.insert(key, idx);
            }
            if e.allowed.is_empty() {
                out.push(Violation::EmptyPredicate { edge: idx });
            }
            let mut pairs = BTreeSet::new();
            for p in &e.allowed {
                for &s in p {
                    if s >= self.q {
                        out.push(Violation::SymbolOutOfRange { edge: idx, symbol: s });
                    }
                }
                if !pairs.insert(*p) {
                    out.push(Violation::RepeatedPair { edge: idx });
                }
            }
        }
        out
    }

    /// Like [`validate`](Self::validate) but as a `Result`.
    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = v.iter().map(ToString::to_string).collect();
            Err(Error::InvalidInstance(msg.join("; ")))
        }
    }

    fn check_assignment(&self, a: &[usize]) -> Result<()> {
        if a.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: a.len(),
            });
        }
        if let Some(&bad) = a.iter().find(|&&x| x >= self.q) {
            return Err(Error::InvalidParameter(format!(
                "assignment symbol {bad} outside [0, {})",
                self.q
            )));
        }
        Ok(())
    }

    /// Number of satisfied constraints.
    pub fn evaluate(&self, a: &[usize]) -> Result<usize> {
        self.check_assignment(a)?;
        Ok(self.count_satisfied(a))
    }

    pub(crate) fn count_satisfied(&self, a: &[usize]) -> usize {
        self.edges
            .iter()
            .filter(|e| e.allows(a[e.u], a[e.v]))
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    /// Degree diagonal `D` of the constraint graph.
    pub fn degree_diagonal(&self) -> SymMatrix {
        let d: Vec<f64> = self.degrees().into_iter().map(|x| x as f64).collect();
        SymMatrix::from_diagonal(&d)
    }

    /// Adjacency matrix of the constraint graph.
    pub fn adjacency(&self) -> SymMatrix {
        let mut a = SymMatrix::zeros(self.n);
        for e in &self.edges {
            a.set_sym(e.u, e.v, 1.0);
        }
        a
    }

    /// `D^{-1/2} A D^{-1/2}`; errors on isolated variables.
    pub fn normalized_adjacency(&self) -> Result<SymMatrix> {
        let inv = self.inv_sqrt_degrees()?;
        Ok(self.adjacency().congruence_diag(&inv))
    }

    fn inv_sqrt_degrees(&self) -> Result<Vec<f64>> {
        self.degrees()
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                if d == 0 {
                    Err(Error::IsolatedVariable(i))
                } else {
                    Ok(1.0 / (d as f64).sqrt())
                }
            })
            .collect()
    }

    /// 0/1 adjacency matrix `B` of the label-extended graph (dimension `n q`).
    pub fn label_extended(&self) -> SymMatrix {
        let q = self.q;
        let mut b = SymMatrix::zeros(self.n * q);
        for e in &self.edges {
            for p in &e.allowed {
                b.set_sym(q * e.u + p[0], q * e.v + p[1], 1.0);
            }
        }
        b
    }

    /// The pair `(M, E)` used to run the main algorithm on a general 2CSP:
    /// `M[(i,a),(j,b)] = (1/q) (D^{-1/2} A D^{-1/2})_ij [(a,b) allowed]` and
    /// `E = q D ⊗ I_q`, so that `E^{1/2} M E^{1/2}` is the 0/1 label-extended
    /// adjacency matrix.
    pub fn normalized_label_extended(&self) -> Result<(SymMatrix, SymMatrix)> {
        self.check()?;
        let inv = self.inv_sqrt_degrees()?;
        let q = self.q;
        let scale = 1.0 / q as f64;
        let mut m = SymMatrix::zeros(self.n * q);
        for e in &self.edges {
            let w = scale * (inv[e.u] * inv[e.v]);
            for p in &e.allowed {
                m.set_sym(q * e.u + p[0], q * e.v + p[1], w);
            }
        }
        let e_diag: Vec<f64> = self
            .degrees()
            .iter()
            .flat_map(|&d| std::iter::repeat_n((q * d) as f64, q))
            .collect();
        Ok((m, SymMatrix::from_diagonal(&e_diag)))
    }

    /// Splits off isolated variables. Returns the reduced instance and the
    /// original index of each kept variable.
    pub fn strip_isolated(&self) -> (CspInstance, Vec<usize>) {
        let deg = self.degrees();
        let kept: Vec<usize> = (0..self.n).filter(|&i| deg[i] > 0).collect();
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &i) in kept.iter().enumerate() {
            new_index[i] = k;
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Constraint::new(new_index[e.u], new_index[e.v], e.allowed.clone()))
            .collect();
        let mut reduced = CspInstance::new(kept.len(), self.q, edges);
        reduced.name = self.name.clone();
        (reduced, kept)
    }

    /// Rewrites every predicate through the symbol permutation `perm`.
    pub fn relabel(&self, perm: &[usize]) -> CspInstance {
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let allowed = e.allowed.iter().map(|p| [perm[p[0]], perm[p[1]]]).collect();
                Constraint::new(e.u, e.v, allowed)
            })
            .collect();
        CspInstance {
            n: self.n,
            q: self.q,
            edges,
            name: self.name.clone(),
        }
    }
}

/// Reattaches a reduced assignment; stripped variables get symbol 0.
pub fn reattach(n: usize, kept: &[usize], reduced: &[usize]) -> Assignment {
    let mut full = vec![0; n];
    for (k, &i) in kept.iter().enumerate() {
        full[i] = reduced[k];
    }
    full
}
