//! Density expressions, decorated graphs and their text form.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::exact::fmt_ratio;
use crate::sampling::SimpleGraph;

/// A vertex of a decorated graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratedVertex {
    /// name used in the text form
    pub id: u32,
    /// part the vertex is drawn from
    pub label: String,
    pub root: bool,
}

/// A graph whose vertices carry part labels, with an ordered set of roots.
///
/// Vertices are stored roots first, in root order. Each pair is an edge, a
/// non-edge, or unspecified (summed over both).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratedGraph {
    vertices: Vec<DecoratedVertex>,
    /// `(i, j)` with `i < j` → `true` for an edge, `false` for a non-edge
    pairs: BTreeMap<(usize, usize), bool>,
}

impl DecoratedGraph {
    /// Roots are taken in the order given; pairs refer to vertex ids.
    pub fn new(
        vertices: Vec<DecoratedVertex>,
        pairs: impl IntoIterator<Item = (u32, u32, bool)>,
    ) -> Result<Self> {
        let (mut roots, free): (Vec<_>, Vec<_>) = vertices.into_iter().partition(|v| v.root);
        roots.extend(free);
        let vertices = roots;
        let index = |id: u32| -> Result<usize> {
            vertices
                .iter()
                .position(|v| v.id == id)
                .ok_or_else(|| Error::InvalidGraph(format!("unknown vertex {id}")))
        };
        for (i, v) in vertices.iter().enumerate() {
            if vertices[..i].iter().any(|w| w.id == v.id) {
                return Err(Error::InvalidGraph(format!(
                    "vertex {} declared twice",
                    v.id
                )));
            }
            if !is_label(&v.label) {
                return Err(Error::InvalidGraph(format!("bad part label {:?}", v.label)));
            }
        }
        let mut map = BTreeMap::new();
        for (a, b, edge) in pairs {
            let (i, j) = (index(a)?, index(b)?);
            if i == j {
                return Err(Error::InvalidGraph(format!("loop at vertex {a}")));
            }
            if map.insert((i.min(j), i.max(j)), edge).is_some() {
                return Err(Error::InvalidGraph(format!("pair {a},{b} given twice")));
            }
        }
        let g = DecoratedGraph {
            vertices,
            pairs: map,
        };
        let n = g.num_roots();
        for i in 0..n {
            for j in i + 1..n {
                if !g.pairs.contains_key(&(i, j)) {
                    return Err(Error::InvalidGraph(format!(
                        "roots {} and {} must be joined by an edge or a non-edge",
                        g.vertices[i].id, g.vertices[j].id
                    )));
                }
            }
        }
        Ok(g)
    }

    pub fn vertices(&self) -> &[DecoratedVertex] {
        &self.vertices
    }

    pub fn order(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_roots(&self) -> usize {
        self.vertices.iter().filter(|v| v.root).count()
    }

    /// `Some(true)` edge, `Some(false)` non-edge, `None` unspecified.
    pub fn pair(&self, i: usize, j: usize) -> Option<bool> {
        self.pairs.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn specified_pairs(&self) -> impl Iterator<Item = ((usize, usize), bool)> + '_ {
        self.pairs.iter().map(|(&k, &v)| (k, v))
    }

    /// The decorated graph induced by the roots.
    pub fn root_graph(&self) -> DecoratedGraph {
        let n = self.num_roots();
        DecoratedGraph {
            vertices: self.vertices[..n].to_vec(),
            pairs: self
                .pairs
                .iter()
                .filter(|((i, j), _)| *i < n && *j < n)
                .map(|(&k, &v)| (k, v))
                .collect(),
        }
    }

    /// Whether the roots induce the same decorated graph (roots matched in order).
    pub fn compatible(&self, other: &DecoratedGraph) -> bool {
        let (a, b) = (self.root_graph(), other.root_graph());
        a.vertices.len() == b.vertices.len()
            && a.vertices
                .iter()
                .zip(&b.vertices)
                .all(|(x, y)| x.label == y.label)
            && a.pairs == b.pairs
    }

    /// All completions of the unspecified pairs.
    pub fn completions(&self) -> Vec<DecoratedGraph> {
        let n = self.order();
        let open: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|p| !self.pairs.contains_key(p))
            .collect();
        (0..1u64 << open.len())
            .map(|mask| {
                let mut g = self.clone();
                for (k, p) in open.iter().enumerate() {
                    g.pairs.insert(*p, mask >> k & 1 == 1);
                }
                g
            })
            .collect()
    }
}

pub(crate) fn is_label(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|f| f.is_ascii_alphabetic())
        && c.all(|x| x.is_ascii_alphanumeric() || x == '_')
}

impl fmt::Display for DecoratedGraph {
    /// `D{roots: [A]1 [A]2; free: (B)3; 1-2 1~3}`: roots in order, then
    /// non-roots, then edges `-` and non-edges `~`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |root: bool| -> Vec<String> {
            self.vertices
                .iter()
                .filter(|v| v.root == root)
                .map(|v| {
                    if root {
                        format!("[{}]{}", v.label, v.id)
                    } else {
                        format!("({}){}", v.label, v.id)
                    }
                })
                .collect()
        };
        write!(
            f,
            "D{{roots: {}; free: {}",
            show(true).join(" "),
            show(false).join(" ")
        )?;
        let rel: Vec<String> = self
            .pairs
            .iter()
            .map(|(&(i, j), &e)| {
                format!(
                    "{}{}{}",
                    self.vertices[i].id,
                    if e { '-' } else { '~' },
                    self.vertices[j].id
                )
            })
            .collect();
        if rel.is_empty() {
            write!(f, "}}")
        } else {
            write!(f, "; {}}}", rel.join(" "))
        }
    }
}

/// A graph appearing in an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphTerm {
    Plain(SimpleGraph),
    Decorated(DecoratedGraph),
}

/// A density expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(BigRational),
    Graph(GraphTerm),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
}

impl Expr {
    /// Graph leaves, left to right.
    pub fn graphs(&self) -> Vec<&GraphTerm> {
        let mut out = Vec::new();
        self.collect_graphs(&mut out);
        out
    }

    fn collect_graphs<'a>(&'a self, out: &mut Vec<&'a GraphTerm>) {
        match self {
            Expr::Const(_) => {}
            Expr::Graph(g) => out.push(g),
            Expr::Sum(v) | Expr::Product(v) => v.iter().for_each(|e| e.collect_graphs(out)),
        }
    }

    /// Evaluates with `leaf` giving each graph's value.
    pub fn eval_with<T>(
        &self,
        leaf: &mut impl FnMut(&GraphTerm) -> T,
        konst: &impl Fn(&BigRational) -> T,
    ) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
    {
        match self {
            Expr::Const(c) => konst(c),
            Expr::Graph(g) => leaf(g),
            Expr::Sum(v) => {
                let mut it = v.iter();
                let first = it
                    .next()
                    .expect("sums are non-empty")
                    .eval_with(leaf, konst);
                it.fold(first, |acc, e| acc + e.eval_with(leaf, konst))
            }
            Expr::Product(v) => {
                let mut it = v.iter();
                let first = it
                    .next()
                    .expect("products are non-empty")
                    .eval_with(leaf, konst);
                it.fold(first, |acc, e| acc * e.eval_with(leaf, konst))
            }
        }
    }
}

fn fmt_graph(g: &SimpleGraph) -> String {
    let e: Vec<String> = g.edges().map(|(a, b)| format!("{a}-{b}")).collect();
    format!("G{{{};{}}}", g.order(), e.join(" "))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{}", fmt_ratio(c)),
            Expr::Graph(GraphTerm::Plain(g)) => write!(f, "{}", fmt_graph(g)),
            Expr::Graph(GraphTerm::Decorated(g)) => write!(f, "{g}"),
            Expr::Sum(v) => {
                let parts: Vec<String> = v.iter().map(|e| e.to_string()).collect();
                write!(f, "{}", parts.join(" + "))
            }
            Expr::Product(v) => {
                let parts: Vec<String> = v
                    .iter()
                    .map(|e| match e {
                        Expr::Sum(_) => format!("({e})"),
                        _ => e.to_string(),
                    })
                    .collect();
                write!(f, "{}", parts.join(" * "))
            }
        }
    }
}

/// `lhs = rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Constraint {
    pub fn graphs(&self) -> Vec<&GraphTerm> {
        let mut g = self.lhs.graphs();
        g.extend(self.rhs.graphs());
        g
    }

    /// Whether every graph is decorated (a constraint without graphs is ordinary).
    pub fn is_decorated(&self) -> bool {
        let g = self.graphs();
        !g.is_empty() && g.iter().all(|t| matches!(t, GraphTerm::Decorated(_)))
    }

    /// The common root graph, checking that all graphs are decorated and compatible.
    pub fn root_graph(&self) -> Result<DecoratedGraph> {
        let mut first: Option<&DecoratedGraph> = None;
        for t in self.graphs() {
            let GraphTerm::Decorated(d) = t else {
                return Err(Error::IncompatibleGraphs(
                    "plain and decorated graphs are mixed".into(),
                ));
            };
            match first {
                None => first = Some(d),
                Some(f) if !f.compatible(d) => {
                    return Err(Error::IncompatibleGraphs(format!(
                        "roots of {f} and {d} induce different graphs"
                    )));
                }
                _ => {}
            }
        }
        first
            .map(|d| d.root_graph())
            .ok_or_else(|| Error::IncompatibleGraphs("no decorated graph".into()))
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Text form of a constraint, re-readable by [`parse_constraint`](super::parse_constraint).
pub fn render_constraint(c: &Constraint) -> String {
    c.to_string()
}
