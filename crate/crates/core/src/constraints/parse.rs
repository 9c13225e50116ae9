//! Recursive-descent parser for expressions and constraints.
//!
//! ```text
//! constraint := expr '=' expr
//! expr       := term ('+' term)*
//! term       := factor ('*' factor)*
//! factor     := number | graph | '(' expr ')'
//! graph      := 'G{' n ';' edges '}' | 'D{' decorated '}' | alias
//! alias      := ('K' | 'C' | 'P' | 'E') digits
//! ```
//!
//! Numbers are decimals or fractions (`0.25`, `1/16`) read exactly.
//! Positions in errors are 1-based character offsets.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::expr::{is_label, Constraint, DecoratedGraph, DecoratedVertex, Expr, GraphTerm};
use super::parts::PartTable;
use crate::error::{Error, Result};
use crate::exact::parse_ratio;
use crate::graphons::Set;
use crate::sampling::{SimpleGraph, MAX_ORDER};

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Syntax {
        pos: pos + 1,
        msg: msg.into(),
    })
}

impl Parser {
    fn new(src: &str) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self
                .peek()
                .map_or("end of input".to_string(), |f| format!("'{f}'"));
            err(self.pos, format!("expected '{c}', found {found}"))
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut items = vec![self.term()?];
        while self.eat('+') {
            items.push(self.term()?);
        }
        Ok(flatten(items, true))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut items = vec![self.factor()?];
        while self.eat('*') {
            items.push(self.factor()?);
        }
        Ok(flatten(items, false))
    }

    fn factor(&mut self) -> Result<Expr> {
        let start = self.pos;
        match self.peek() {
            None => err(self.pos, "expected a number, a graph or '('"),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number().map(Expr::Const),
            Some('G') if self.chars.get(self.pos + 1) == Some(&'{') => {
                self.pos += 2;
                let g = self.plain_body()?;
                Ok(Expr::Graph(GraphTerm::Plain(g)))
            }
            Some('D') if self.chars.get(self.pos + 1) == Some(&'{') => {
                self.pos += 2;
                let g = self.decorated_body()?;
                Ok(Expr::Graph(GraphTerm::Decorated(g)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.word();
                alias(&name)
                    .map(|g| Expr::Graph(GraphTerm::Plain(g)))
                    .ok_or(())
                    .or_else(|_| err(start, format!("unknown graph name '{name}'")))
            }
            Some(c) => err(self.pos, format!("unexpected '{c}'")),
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let s = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
        {
            self.pos += 1;
        }
        self.chars[s..self.pos].iter().collect()
    }

    fn digits(&mut self) -> String {
        let s = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.chars[s..self.pos].iter().collect()
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let at = self.pos;
        let d = self.digits();
        d.parse().or_else(|_| err(at, "expected an integer"))
    }

    fn number(&mut self) -> Result<BigRational> {
        self.skip_ws();
        let at = self.pos;
        let int = self.digits();
        let mut value = if int.is_empty() {
            BigRational::zero()
        } else {
            BigRational::from_integer(int.parse::<BigInt>().unwrap())
        };
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            let frac = self.digits();
            if int.is_empty() && frac.is_empty() {
                return err(at, "expected a number");
            }
            if !frac.is_empty() {
                let den = num_traits::pow(BigInt::from(10), frac.len());
                value += BigRational::new(frac.parse::<BigInt>().unwrap(), den);
            }
        } else if self.chars.get(self.pos) == Some(&'/') {
            self.pos += 1;
            let d_at = self.pos;
            let den = self.digits();
            let den: BigInt = den
                .parse()
                .or_else(|_| err(d_at, "expected a denominator"))?;
            if den.is_zero() {
                return err(d_at, "zero denominator");
            }
            value /= BigRational::from_integer(den);
        }
        Ok(value)
    }

    /// After `G{`: `n ; i-j ... }`.
    fn plain_body(&mut self) -> Result<SimpleGraph> {
        let at = self.pos;
        let n = self.integer()? as usize;
        if n > MAX_ORDER {
            return err(at, format!("graphs are limited to {MAX_ORDER} vertices"));
        }
        self.expect(';')?;
        let mut edges = Vec::new();
        while !self.eat('}') {
            self.eat(',');
            if self.eat('}') {
                break;
            }
            let at = self.pos;
            let a = self.integer()? as usize;
            self.expect('-')?;
            let b = self.integer()? as usize;
            if a >= n || b >= n || a == b {
                return err(at, format!("edge {a}-{b} is not valid on {n} vertices"));
            }
            if edges.contains(&(a.min(b), a.max(b))) {
                return err(at, format!("edge {a}-{b} repeated"));
            }
            edges.push((a.min(b), a.max(b)));
            if self.at_end() {
                return err(self.pos, "expected '}'");
            }
        }
        SimpleGraph::new(n, edges).or_else(|e| err(at, e.to_string()))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let at = self.pos;
        let w = self.word();
        if w != kw {
            return err(at, format!("expected '{kw}:'"));
        }
        self.expect(':')
    }

    /// `[A]1` or `(A)1`.
    fn vertex(&mut self, root: bool) -> Result<DecoratedVertex> {
        let (open, close) = if root { ('[', ']') } else { ('(', ')') };
        self.expect(open)?;
        let at = self.pos;
        let label = self.word();
        if !is_label(&label) {
            return err(at, "expected a part label");
        }
        self.expect(close)?;
        let id = self.integer()? as u32;
        Ok(DecoratedVertex { id, label, root })
    }

    /// After `D{`: `roots: ...; free: ...; pairs }`.
    fn decorated_body(&mut self) -> Result<DecoratedGraph> {
        let at = self.pos;
        self.keyword("roots")?;
        let mut vertices = Vec::new();
        while self.peek() == Some('[') {
            vertices.push(self.vertex(true)?);
        }
        self.expect(';')?;
        self.keyword("free")?;
        while self.peek() == Some('(') {
            vertices.push(self.vertex(false)?);
        }
        let mut pairs = Vec::new();
        if self.eat(';') {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                let a = self.integer()? as u32;
                let edge = if self.eat('-') {
                    true
                } else if self.eat('~') {
                    false
                } else {
                    return err(self.pos, "expected '-' or '~'");
                };
                let b = self.integer()? as u32;
                pairs.push((a, b, edge));
            }
        }
        self.expect('}')?;
        if vertices.len() > MAX_ORDER {
            return err(at, format!("graphs are limited to {MAX_ORDER} vertices"));
        }
        DecoratedGraph::new(vertices, pairs).or_else(|e| err(at, e.to_string()))
    }
}

fn flatten(items: Vec<Expr>, sum: bool) -> Expr {
    if items.len() == 1 {
        return items.into_iter().next().unwrap();
    }
    let mut out = Vec::new();
    for e in items {
        match e {
            Expr::Sum(v) if sum => out.extend(v),
            Expr::Product(v) if !sum => out.extend(v),
            e => out.push(e),
        }
    }
    if sum {
        Expr::Sum(out)
    } else {
        Expr::Product(out)
    }
}

/// `K<n>` complete, `C<n>` cycle, `P<n>` path, `E<n>` edgeless.
pub fn alias(name: &str) -> Option<SimpleGraph> {
    let (kind, n) = name.split_at(1.min(name.len()));
    let n: usize = n.parse().ok()?;
    if n == 0 || n > MAX_ORDER {
        return None;
    }
    match kind {
        "K" => Some(SimpleGraph::complete(n)),
        "C" => SimpleGraph::cycle(n).ok(),
        "P" => Some(SimpleGraph::path(n)),
        "E" => Some(SimpleGraph::empty(n)),
        _ => None,
    }
}

pub fn parse_expression(text: &str) -> Result<Expr> {
    let mut p = Parser::new(text);
    let e = p.expr()?;
    if !p.at_end() {
        let c = p.peek().unwrap();
        return err(p.pos, format!("unexpected '{c}'"));
    }
    Ok(e)
}

pub fn parse_constraint(text: &str) -> Result<Constraint> {
    let mut p = Parser::new(text);
    let lhs = p.expr()?;
    p.expect('=')?;
    let rhs = p.expr()?;
    if !p.at_end() {
        let c = p.peek().unwrap();
        return err(p.pos, format!("unexpected '{c}'"));
    }
    Ok(Constraint { lhs, rhs })
}

/// Sum of the completions of a decorated graph, as an expression.
pub fn expand_unspecified(g: &DecoratedGraph) -> Expr {
    let mut parts: Vec<Expr> = g
        .completions()
        .into_iter()
        .map(|c| Expr::Graph(GraphTerm::Decorated(c)))
        .collect();
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Expr::Sum(parts)
    }
}

/// A constraint together with the parts its decorated graphs refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintFile {
    pub parts: Option<PartTable>,
    pub constraints: Vec<Constraint>,
}

/// Reads a constraint file: `#` comments, lines `part NAME a1 b1 a2 b2 ...`
/// giving each part as a union of intervals `[a, b)`, and one constraint per line.
pub fn parse_constraint_file(text: &str) -> Result<ConstraintFile> {
    let mut parts = Vec::new();
    let mut constraints = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |e: Error| Error::Parse(format!("line {}: {e}", n + 1));
        if let Some(rest) = line.strip_prefix("part ") {
            let mut words = rest.split_whitespace();
            let name = words.next().unwrap_or_default().to_string();
            let ends: Vec<BigRational> =
                words.map(parse_ratio).collect::<Result<_>>().map_err(at)?;
            if ends.is_empty() || !ends.len().is_multiple_of(2) {
                return Err(at(Error::Parse(format!(
                    "part {name} needs pairs of endpoints"
                ))));
            }
            let iv = ends
                .chunks(2)
                .map(|c| (c[0].clone(), c[1].clone()))
                .collect();
            parts.push((name, Set::intervals(iv).map_err(at)?));
        } else {
            constraints.push(parse_constraint(line).map_err(at)?);
        }
    }
    if constraints.is_empty() {
        return Err(Error::Parse("no constraint line".into()));
    }
    let parts = if parts.is_empty() {
        None
    } else {
        Some(PartTable::from_sets(parts)?)
    };
    Ok(ConstraintFile { parts, constraints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::expr::render_constraint;
    use crate::exact::ratio;

    #[test]
    fn grammar_examples() {
        let e = parse_expression("K2 * K2 + 0.25").unwrap();
        let k2 = Expr::Graph(GraphTerm::Plain(SimpleGraph::complete(2)));
        assert_eq!(
            e,
            Expr::Sum(vec![
                Expr::Product(vec![k2.clone(), k2]),
                Expr::Const(ratio(1, 4))
            ])
        );

        let k3 = parse_expression("G{3;0-1 1-2 0-2}").unwrap();
        assert_eq!(k3, Expr::Graph(GraphTerm::Plain(SimpleGraph::complete(3))));
        assert_eq!(parse_expression("K3").unwrap(), k3);

        match parse_expression("K2 +") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_expression("K2 K2"),
            Err(Error::Syntax { pos: 4, .. })
        ));
        assert!(matches!(
            parse_expression("X7"),
            Err(Error::Syntax { pos: 1, .. })
        ));
        assert!(matches!(
            parse_expression("G{3;0-3}"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_expression("(K2"),
            Err(Error::Syntax { pos: 4, .. })
        ));
    }

    #[test]
    fn numbers_are_exact() {
        assert_eq!(parse_expression("0.125").unwrap(), Expr::Const(ratio(1, 8)));
        assert_eq!(parse_expression("3/12").unwrap(), Expr::Const(ratio(1, 4)));
        assert_eq!(parse_expression("2").unwrap(), Expr::Const(ratio(2, 1)));
        assert!(parse_expression("1/0").is_err());
    }

    #[test]
    fn parentheses_and_flattening() {
        let a = parse_expression("(K2 + K3) + C4").unwrap();
        let b = parse_expression("K2 + K3 + C4").unwrap();
        assert_eq!(a, b);
        let p = parse_expression("(K2 + 1) * K3").unwrap();
        assert!(matches!(p, Expr::Product(ref v) if matches!(v[0], Expr::Sum(_))));
        assert_eq!(parse_expression(&p.to_string()).unwrap(), p);
    }

    const FIGURE: &str = "D{roots: [A]1 [A]2; free: (B)3 (B)4; 1-2 1-3 1-4 2~3 2-4 3~4}";

    #[test]
    fn decorated_round_trip() {
        let c = parse_constraint(&format!("{FIGURE} = 1/16")).unwrap();
        let text = render_constraint(&c);
        assert_eq!(parse_constraint(&text).unwrap(), c);
        assert_eq!(render_constraint(&parse_constraint(&text).unwrap()), text);
        assert!(c.is_decorated());
        let h0 = c.root_graph().unwrap();
        assert_eq!(h0.order(), 2);
        assert_eq!(h0.pair(0, 1), Some(true));

        let single = parse_expression("D{roots: [A]7; free: }").unwrap();
        assert_eq!(single.to_string(), "D{roots: [A]7; free: }");
    }

    #[test]
    fn root_pairs_must_be_specified() {
        assert!(parse_expression("D{roots: [A]1 [A]2; free: }").is_err());
        assert!(parse_expression("D{roots: [A]1 [A]2; free: (B)3; 1~2}").is_ok());
    }

    #[test]
    fn compatibility() {
        let ok = parse_constraint(
            "D{roots: [A]1 [B]2; free: (A)3; 1-2 1-3} = D{roots: [A]5 [B]6; free: ; 5-6}",
        )
        .unwrap();
        assert!(ok.root_graph().is_ok());
        let bad =
            parse_constraint("D{roots: [A]1 [B]2; free: ; 1-2} = D{roots: [A]1 [B]2; free: ; 1~2}")
                .unwrap();
        assert!(matches!(
            bad.root_graph(),
            Err(Error::IncompatibleGraphs(_))
        ));
        let swapped =
            parse_constraint("D{roots: [A]1 [B]2; free: ; 1-2} = D{roots: [B]1 [A]2; free: ; 1-2}")
                .unwrap();
        assert!(swapped.root_graph().is_err());
    }

    #[test]
    fn unspecified_pairs_expand() {
        let g = match parse_expression("D{roots: [A]1 [A]2; free: (A)3; 1-2 1-3}").unwrap() {
            Expr::Graph(GraphTerm::Decorated(g)) => g,
            _ => unreachable!(),
        };
        let Expr::Sum(v) = expand_unspecified(&g) else {
            panic!()
        };
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn constraint_files() {
        let text = "# two halves\npart A 0 1/2\npart B 0.5 1\n\nD{roots: [A]1; free: (B)2; 1-2} = 1/2  # cross edge\n";
        let f = parse_constraint_file(text).unwrap();
        let parts = f.parts.unwrap();
        assert_eq!(parts.parts.len(), 2);
        assert_eq!(parts.get("B").unwrap().measure, 0.5);
        assert!(f.constraints[0].is_decorated());
        assert!(parse_constraint_file("K2 = 1/2").unwrap().parts.is_none());
        assert!(
            matches!(parse_constraint_file("part A 0\nK2 = 0"), Err(Error::Parse(m)) if m.starts_with("line 1"))
        );
        assert_eq!(
            parse_constraint_file("K2 = 0\nK3 = 0")
                .unwrap()
                .constraints
                .len(),
            2
        );
        assert!(parse_constraint_file("# nothing").is_err());
    }
}
