//! A small expression language for bounded-Lipschitz test functionals.
//!
//! Grammar (recursive descent, `*` binds tighter than `+`/`-`):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := number | 'x'k | fn '(' expr (',' expr)* ')' | '(' expr ')' | '-' factor
//! fn     := cos | sin | exp | abs | min | max | clip
//! ```
//!
//! Coordinates are `x1 .. xn` with `n` the declared arity. Division is not
//! in the grammar, so every expressible function is Lipschitz on compacts.
//! Evaluation clamps the result to `[-bound, bound]`, which is what makes
//! every functional a member of the bounded-Lipschitz test class by
//! construction.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Built-in primitive functions, all Lipschitz on bounded sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Cos,
    Sin,
    Exp,
    Abs,
    Min,
    Max,
    Clip,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "cos" => Func::Cos,
            "sin" => Func::Sin,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "clip" => Func::Clip,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Cos => "cos",
            Func::Sin => "sin",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Clip => "clip",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Cos | Func::Sin | Func::Exp | Func::Abs => 1,
            Func::Min | Func::Max => 2,
            Func::Clip => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Expr<T> {
    Const(T),
    /// 0-based coordinate index.
    Coord(usize),
    Neg(Box<Expr<T>>),
    Add(Box<Expr<T>>, Box<Expr<T>>),
    Sub(Box<Expr<T>>, Box<Expr<T>>),
    Mul(Box<Expr<T>>, Box<Expr<T>>),
    Call(Func, Vec<Expr<T>>),
}

/// A parsed test functional: `x -> clip(expr(x), -bound, bound)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional<T> {
    source: String,
    arity: usize,
    bound: T,
    root: Expr<T>,
}

impl<T: Real> Functional<T> {
    /// Parses `source` against the grammar. `arity` is the number of path
    /// coordinates `x1..xn` the expression may reference; `bound` is the
    /// clamp applied to every evaluation and must be positive.
    pub fn parse(source: &str, arity: usize, bound: T) -> Result<Self> {
        if arity == 0 {
            return Err(Error::invalid("functional arity must be >= 1"));
        }
        if !(bound > T::zero()) {
            return Err(Error::invalid(format!(
                "functional bound must be > 0, got {bound}"
            )));
        }
        let mut parser = Parser::new(source, arity)?;
        let root = parser.expr()?;
        parser.expect_end()?;
        Ok(Self {
            source: source.to_string(),
            arity,
            bound,
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn bound(&self) -> T {
        self.bound
    }

    /// Evaluates the functional, clamped to `[-bound, bound]`.
    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: x.len(),
            });
        }
        Ok(eval_expr(&self.root, x).min(self.bound).max(-self.bound))
    }

    /// Canonical re-print of the syntax tree. Re-parsing the result yields
    /// the same tree.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        print_expr(&self.root, 0, &mut out);
        out
    }

    /// An upper bound for the Lipschitz constant of the (clamped) functional
    /// on the box `[-radius, radius]^arity`, with respect to the Euclidean
    /// norm. Composed per node, so it is safe but not tight.
    pub fn lipschitz_bound(&self, radius: T) -> T {
        node_bounds(&self.root, radius).1
    }

    /// An upper bound for `|expr|` on the box `[-radius, radius]^arity`,
    /// before the final clamp.
    pub fn range_bound(&self, radius: T) -> T {
        node_bounds(&self.root, radius).0
    }
}

fn eval_expr<T: Real>(e: &Expr<T>, x: &[T]) -> T {
    match e {
        Expr::Const(c) => *c,
        Expr::Coord(k) => x[*k],
        Expr::Neg(a) => -eval_expr(a, x),
        Expr::Add(a, b) => eval_expr(a, x) + eval_expr(b, x),
        Expr::Sub(a, b) => eval_expr(a, x) - eval_expr(b, x),
        Expr::Mul(a, b) => eval_expr(a, x) * eval_expr(b, x),
        Expr::Call(f, args) => {
            let a = eval_expr(&args[0], x);
            match f {
                Func::Cos => a.cos(),
                Func::Sin => a.sin(),
                Func::Exp => a.exp(),
                Func::Abs => a.abs(),
                Func::Min => a.min(eval_expr(&args[1], x)),
                Func::Max => a.max(eval_expr(&args[1], x)),
                Func::Clip => {
                    let lo = eval_expr(&args[1], x);
                    let hi = eval_expr(&args[2], x);
                    a.max(lo).min(hi)
                }
            }
        }
    }
}

/// Per-node `(sup |value|, Lipschitz constant)` on the coordinate box.
fn node_bounds<T: Real>(e: &Expr<T>, radius: T) -> (T, T) {
    match e {
        Expr::Const(c) => (c.abs(), T::zero()),
        Expr::Coord(_) => (radius, T::one()),
        Expr::Neg(a) => node_bounds(a, radius),
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (ba, la) = node_bounds(a, radius);
            let (bb, lb) = node_bounds(b, radius);
            (ba + bb, la + lb)
        }
        Expr::Mul(a, b) => {
            let (ba, la) = node_bounds(a, radius);
            let (bb, lb) = node_bounds(b, radius);
            (ba * bb, ba * lb + bb * la)
        }
        Expr::Call(f, args) => {
            let (ba, la) = node_bounds(&args[0], radius);
            match f {
                Func::Cos => (T::one(), la),
                Func::Sin => (T::one().min(ba), la),
                Func::Exp => (ba.exp(), ba.exp() * la),
                Func::Abs => (ba, la),
                Func::Min | Func::Max => {
                    let (bb, lb) = node_bounds(&args[1], radius);
                    (ba.max(bb), la.max(lb))
                }
                Func::Clip => {
                    let (blo, llo) = node_bounds(&args[1], radius);
                    let (bhi, lhi) = node_bounds(&args[2], radius);
                    (ba.min(blo.max(bhi)), la.max(llo).max(lhi))
                }
            }
        }
    }
}

/// Precedence levels: 0 additive, 1 multiplicative, 2 prefix/atoms.
fn level<T>(e: &Expr<T>) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 0,
        Expr::Mul(..) => 1,
        _ => 2,
    }
}

fn print_expr<T: Real>(e: &Expr<T>, min_level: u8, out: &mut String) {
    let needs_parens = level(e) < min_level;
    if needs_parens {
        out.push('(');
    }
    match e {
        Expr::Const(c) => out.push_str(&format!("{c}")),
        Expr::Coord(k) => out.push_str(&format!("x{}", k + 1)),
        Expr::Neg(a) => {
            out.push('-');
            print_expr(a, 2, out);
        }
        Expr::Add(a, b) => {
            print_expr(a, 0, out);
            out.push_str(" + ");
            print_expr(b, 1, out);
        }
        Expr::Sub(a, b) => {
            print_expr(a, 0, out);
            out.push_str(" - ");
            print_expr(b, 1, out);
        }
        Expr::Mul(a, b) => {
            print_expr(a, 1, out);
            out.push_str(" * ");
            print_expr(b, 2, out);
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(arg, 0, out);
            }
            out.push(')');
        }
    }
    if needs_parens {
        out.push(')');
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<T> {
    Num(T),
    Coord(usize),
    Fn(Func),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    Comma,
    End,
}

struct Parser<T> {
    tokens: Vec<(usize, Tok<T>)>,
    cursor: usize,
    arity: usize,
}

impl<T: Real> Parser<T> {
    fn new(source: &str, arity: usize) -> Result<Self> {
        Ok(Self {
            tokens: lex(source, arity)?,
            cursor: 0,
            arity,
        })
    }

    fn peek(&self) -> &Tok<T> {
        &self.tokens[self.cursor].1
    }

    fn pos(&self) -> usize {
        self.tokens[self.cursor].0
    }

    fn bump(&mut self) -> Tok<T> {
        let t = self.tokens[self.cursor].1.clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr<T>> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr<T>> {
        let mut lhs = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr<T>> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Coord(k) => {
                if k == 0 || k > self.arity {
                    return Err(Error::Parse {
                        position: pos,
                        message: format!("coordinate x{k} out of range 1..={}", self.arity),
                    });
                }
                Ok(Expr::Coord(k - 1))
            }
            Tok::Minus => Ok(Expr::Neg(Box::new(self.factor()?))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "expected ')'")?;
                Ok(inner)
            }
            Tok::Fn(f) => {
                self.expect(Tok::LParen, "expected '(' after function name")?;
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen, "expected ')'")?;
                if args.len() != f.arity() {
                    return Err(Error::Parse {
                        position: pos,
                        message: format!(
                            "{} takes {} argument(s), got {}",
                            f.name(),
                            f.arity(),
                            args.len()
                        ),
                    });
                }
                Ok(Expr::Call(f, args))
            }
            other => Err(Error::Parse {
                position: pos,
                message: format!("expected a factor, found {}", describe(&other)),
            }),
        }
    }

    fn expect(&mut self, tok: Tok<T>, msg: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(Error::Parse {
                position: self.pos(),
                message: format!("{msg}, found {}", describe(self.peek())),
            })
        }
    }

    fn expect_end(&mut self) -> Result<()> {
        self.expect(Tok::End, "expected end of expression")
    }
}

fn describe<T>(t: &Tok<T>) -> String {
    match t {
        Tok::Num(_) => "a number".to_string(),
        Tok::Coord(k) => format!("coordinate x{k}"),
        Tok::Fn(f) => format!("function {}", f.name()),
        Tok::Plus => "'+'".to_string(),
        Tok::Minus => "'-'".to_string(),
        Tok::Star => "'*'".to_string(),
        Tok::LParen => "'('".to_string(),
        Tok::RParen => "')'".to_string(),
        Tok::Comma => "','".to_string(),
        Tok::End => "end of input".to_string(),
    }
}

fn lex<T: Real>(source: &str, _arity: usize) -> Result<Vec<(usize, Tok<T>)>> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            b'-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            b'*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b',' => {
                out.push((i, Tok::Comma));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(Error::Parse {
                            position: i,
                            message: "expected digits after decimal point".to_string(),
                        });
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Parse {
                    position: start,
                    message: format!("invalid number literal '{text}'"),
                })?;
                out.push((start, Tok::Num(real(value))));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &source[start..i];
                if let Some(stripped) = word.strip_prefix('x') {
                    if !stripped.is_empty() && stripped.bytes().all(|b| b.is_ascii_digit()) {
                        let k: usize = stripped.parse().map_err(|_| Error::Parse {
                            position: start,
                            message: format!("coordinate index too large in '{word}'"),
                        })?;
                        out.push((start, Tok::Coord(k)));
                        continue;
                    }
                }
                match Func::from_name(word) {
                    Some(f) => out.push((start, Tok::Fn(f))),
                    None => {
                        return Err(Error::Parse {
                            position: start,
                            message: format!("unknown identifier '{word}'"),
                        })
                    }
                }
            }
            _ => {
                return Err(Error::Parse {
                    position: i,
                    message: format!("unexpected character '{}'", &source[i..i + 1]),
                })
            }
        }
    }
    out.push((source.len(), Tok::End));
    Ok(out)
}

/// Built-in catalog of test functionals, referenced by name on the CLI and
/// across the verification suite.
pub fn catalog<T: Real>(name: &str) -> Option<Functional<T>> {
    let f = match name {
        "cos1" => Functional::parse("cos(x1)", 1, real(1.0)),
        "sq" => Functional::parse("x1*x1", 1, real(25.0)),
        "lin" => Functional::parse("x1", 1, real(10.0)),
        "nsq" => Functional::parse("-(x1*x1)", 1, real(25.0)),
        _ => return None,
    };
    Some(f.expect("catalog sources are valid"))
}

pub const CATALOG_NAMES: [&str; 4] = ["cos1", "sq", "lin", "nsq"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::SplitMix64;
    use approx::assert_abs_diff_eq;

    fn f64_parse(src: &str, arity: usize, bound: f64) -> Functional<f64> {
        Functional::parse(src, arity, bound).unwrap()
    }

    #[test]
    fn evaluates_catalog_style_expressions() {
        assert_eq!(f64_parse("cos(x1)", 1, 1.0).eval(&[0.0]).unwrap(), 1.0);
        assert_eq!(f64_parse("x1*x1", 1, 25.0).eval(&[3.0]).unwrap(), 9.0);
        assert_eq!(f64_parse("x1*x1", 1, 25.0).eval(&[6.0]).unwrap(), 25.0);
        assert_eq!(
            f64_parse("min(x1, x2)", 2, 10.0)
                .eval(&[1.0, -2.0])
                .unwrap(),
            -2.0
        );
        assert_eq!(f64_parse("exp(-x1*x1)", 1, 1.0).eval(&[0.0]).unwrap(), 1.0);
        // |4| - 0.5*|4| = 2
        assert_eq!(
            f64_parse("abs(x1) - 0.5*abs(x1)", 1, 10.0)
                .eval(&[4.0])
                .unwrap(),
            2.0
        );
    }

    #[test]
    fn clamp_is_symmetric() {
        let f = f64_parse("x1*x1*x1", 1, 8.0);
        assert_eq!(f.eval(&[3.0]).unwrap(), 8.0);
        assert_eq!(f.eval(&[-3.0]).unwrap(), -8.0);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let f = f64_parse("1 + 2*x1 - -x1", 1, 100.0);
        assert_eq!(f.eval(&[3.0]).unwrap(), 10.0);
        let g = f64_parse("-(x1 + 1)*2", 1, 100.0);
        assert_eq!(g.eval(&[1.0]).unwrap(), -4.0);
    }

    #[test]
    fn clip_builtin() {
        let f = f64_parse("clip(x1, -1, 2)", 1, 100.0);
        assert_eq!(f.eval(&[-5.0]).unwrap(), -1.0);
        assert_eq!(f.eval(&[0.5]).unwrap(), 0.5);
        assert_eq!(f.eval(&[7.0]).unwrap(), 2.0);
    }

    #[test]
    fn reports_error_positions() {
        match Functional::<f64>::parse("cos(x1", 1, 1.0) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        match Functional::<f64>::parse("x1 + y", 1, 1.0) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_coordinates_and_bad_arity() {
        assert!(matches!(
            Functional::<f64>::parse("x3", 2, 1.0),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Functional::<f64>::parse("x0", 1, 1.0),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Functional::<f64>::parse("min(x1)", 1, 1.0),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Functional::<f64>::parse("cos(x1, x1)", 1, 1.0),
            Err(Error::Parse { .. })
        ));
        let f = f64_parse("x1 + x2", 2, 1.0);
        assert_eq!(
            f.eval(&[1.0]),
            Err(Error::ArityMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn catalog_members_resolve() {
        for name in CATALOG_NAMES {
            assert!(
                catalog::<f64>(name).is_some(),
                "missing catalog entry {name}"
            );
        }
        assert!(catalog::<f64>("nope").is_none());
        assert_eq!(catalog::<f64>("cos1").unwrap().eval(&[0.0]).unwrap(), 1.0);
    }

    /// Random expression source built from the grammar, for round-trip and
    /// Lipschitz checks.
    fn random_source(rng: &mut SplitMix64, arity: usize, depth: usize) -> String {
        if depth == 0 {
            return match rng.below(3) {
                0 => format!("{:.2}", rng.uniform(0.0, 2.0)),
                1 => format!("x{}", 1 + rng.below(arity)),
                _ => format!("x{}", 1 + rng.below(arity)),
            };
        }
        let a = random_source(rng, arity, depth - 1);
        let b = random_source(rng, arity, depth - 1);
        match rng.below(8) {
            0 => format!("({a} + {b})"),
            1 => format!("({a} - {b})"),
            2 => format!("({a} * {b})"),
            3 => format!("-({a})"),
            4 => format!("cos({a})"),
            5 => format!("sin({a})"),
            6 => format!("min({a}, {b})"),
            _ => format!("max(abs({a}), {b})"),
        }
    }

    #[test]
    fn pretty_print_round_trip_is_idempotent() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let arity = 1 + rng.below(3);
            let src = random_source(&mut rng, arity, 3);
            let f = f64_parse(&src, arity, 50.0);
            let printed = f.pretty();
            let g = f64_parse(&printed, arity, 50.0);
            assert_eq!(f.root, g.root, "round trip changed tree for '{src}'");
            assert_eq!(printed, g.pretty());
        }
    }

    #[test]
    fn sampled_lipschitz_never_exceeds_analytic_bound() {
        let mut rng = SplitMix64::new(23);
        let radius = 2.0;
        for _ in 0..60 {
            let arity = 1 + rng.below(2);
            let src = random_source(&mut rng, arity, 3);
            let f = f64_parse(&src, arity, 50.0);
            let analytic = f.lipschitz_bound(radius);
            for _ in 0..100 {
                let x: Vec<f64> = (0..arity).map(|_| rng.uniform(-radius, radius)).collect();
                let y: Vec<f64> = (0..arity).map(|_| rng.uniform(-radius, radius)).collect();
                let dist: f64 = x
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if dist < 1e-9 {
                    continue;
                }
                let df = (f.eval(&x).unwrap() - f.eval(&y).unwrap()).abs();
                assert!(
                    df <= analytic * dist * (1.0 + 1e-12) + 1e-12,
                    "sampled ratio {} exceeds bound {} for '{src}'",
                    df / dist,
                    analytic
                );
            }
        }
    }

    #[test]
    fn catalog_lipschitz_bounds_are_tight_enough() {
        let cos1 = catalog::<f64>("cos1").unwrap();
        assert_abs_diff_eq!(cos1.lipschitz_bound(10.0), 1.0, epsilon = 1e-12);
        let lin = catalog::<f64>("lin").unwrap();
        assert_abs_diff_eq!(lin.lipschitz_bound(10.0), 1.0, epsilon = 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = String> {
            let leaf = prop_oneof![
                (0u8..100).prop_map(|n| format!("{}.{:02}", n / 10, n % 10)),
                (1usize..=2).prop_map(|k| format!("x{k}")),
            ];
            leaf.prop_recursive(3, 24, 2, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("min({a}, {b})")),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("max({a}, {b})")),
                    inner.clone().prop_map(|a| format!("cos({a})")),
                    inner.clone().prop_map(|a| format!("sin({a})")),
                    inner.clone().prop_map(|a| format!("abs({a})")),
                    inner.prop_map(|a| format!("-({a})")),
                ]
            })
        }

        proptest! {
            #[test]
            fn evaluation_is_always_clamped(src in arb_expr(), x1 in -10.0f64..10.0, x2 in -10.0f64..10.0) {
                let f = Functional::parse(&src, 2, 4.0).unwrap();
                let v = f.eval(&[x1, x2]).unwrap();
                prop_assert!(v.abs() <= 4.0);
                prop_assert!(v.is_finite());
            }

            #[test]
            fn pretty_print_reparses_to_the_same_tree(src in arb_expr()) {
                let f = Functional::parse(&src, 2, 4.0).unwrap();
                let g = Functional::parse(&f.pretty(), 2, 4.0).unwrap();
                prop_assert_eq!(&f.root, &g.root);
                prop_assert_eq!(f.pretty(), g.pretty());
            }

            #[test]
            fn sampled_lipschitz_ratio_respects_the_bound(
                src in arb_expr(),
                x1 in -2.0f64..2.0, x2 in -2.0f64..2.0,
                y1 in -2.0f64..2.0, y2 in -2.0f64..2.0,
            ) {
                let f = Functional::parse(&src, 2, 50.0).unwrap();
                let bound = f.lipschitz_bound(2.0);
                let dist = ((x1 - y1).powi(2) + (x2 - y2).powi(2)).sqrt();
                prop_assume!(dist > 1e-9);
                let df = (f.eval(&[x1, x2]).unwrap() - f.eval(&[y1, y2]).unwrap()).abs();
                prop_assert!(df <= bound * dist * (1.0 + 1e-9) + 1e-9);
            }
        }
    }
}
