//! Surface syntax for recursive equations.
//!
//! ```text
//! param A = sierpinski; param B = file(b.json)
//! X = A + [B -> X]
//! ```

use std::fmt;

use domania::functor::FunctorExpr;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Sierpinski,
    Flatbool,
    Flatnat,
    Discrete(usize),
    Trivial,
    File(String),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Sierpinski => f.write_str("sierpinski"),
            Source::Flatbool => f.write_str("flatbool"),
            Source::Flatnat => f.write_str("flatnat"),
            Source::Discrete(n) => write!(f, "discrete({n})"),
            Source::Trivial => f.write_str("trivial"),
            Source::File(p) => write!(f, "file({p})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub params: Vec<(String, Source)>,
    /// The recursion variable.
    pub var: String,
    pub body: FunctorExpr,
}

impl Equation {
    pub fn source(&self, name: &str) -> Option<&Source> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    /// Fails on the first parameter of the body that has no declaration.
    pub fn check_bound(&self) -> Result<(), ParseError> {
        match self.body.params().into_iter().find(|a| self.source(a).is_none()) {
            Some(a) => Err(ParseError::UnboundName(a)),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, s) in &self.params {
            write!(f, "param {n} = {s}; ")?;
        }
        write!(f, "{} = {}", self.var, self.body.render(&self.var))
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unbound name {0}")]
    UnboundName(String),
    #[error("recursive exponent [{0} -> ...]: the exponent must be a parameter")]
    RecursiveExponent(String),
    #[error("parameter {0} declared twice")]
    DuplicateParam(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum T {
    Ident(String),
    Num(usize),
    Path(String),
    Sym(&'static str),
    Sep,
    End,
}

#[derive(Clone, Debug)]
struct Lexeme {
    t: T,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexeme>, ParseError> {
    let cs: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| ParseError::Syntax { line, col, msg };
    while i < cs.len() {
        let c = cs[i];
        let (l0, c0) = (line, col);
        let mut adv = 1;
        let t = match c {
            '\n' => {
                line += 1;
                col = 0;
                Some(T::Sep)
            }
            ';' => Some(T::Sep),
            '#' => {
                while i + adv < cs.len() && cs[i + adv] != '\n' {
                    adv += 1;
                }
                None
            }
            c if c.is_whitespace() => None,
            '=' | '+' | '*' | '[' | ']' | '(' | ')' => Some(T::Sym(match c {
                '=' => "=",
                '+' => "+",
                '*' => "*",
                '[' => "[",
                ']' => "]",
                '(' => "(",
                _ => ")",
            })),
            '-' if cs.get(i + 1) == Some(&'>') => {
                adv = 2;
                Some(T::Sym("->"))
            }
            c if c.is_ascii_digit() => {
                while i + adv < cs.len() && cs[i + adv].is_ascii_digit() {
                    adv += 1;
                }
                let s: String = cs[i..i + adv].iter().collect();
                Some(T::Num(s.parse().map_err(|_| err(l0, c0, format!("number {s} is too large")))?))
            }
            c if c.is_alphabetic() || c == '_' => {
                while i + adv < cs.len() && (cs[i + adv].is_alphanumeric() || cs[i + adv] == '_' || cs[i + adv] == '\'') {
                    adv += 1;
                }
                let s: String = cs[i..i + adv].iter().collect();
                if s == "file" && cs.get(i + adv) == Some(&'(') {
                    let start = i + adv + 1;
                    let Some(len) = cs[start..].iter().position(|&c| c == ')' || c == '\n') else {
                        return Err(err(l0, c0, "unterminated file(...)".into()));
                    };
                    if cs[start + len] != ')' {
                        return Err(err(l0, c0, "unterminated file(...)".into()));
                    }
                    let p: String = cs[start..start + len].iter().collect();
                    adv = start + len + 1 - i;
                    Some(T::Path(p.trim().to_string()))
                } else {
                    Some(T::Ident(s))
                }
            }
            c => return Err(err(l0, c0, format!("unexpected character {c:?}"))),
        };
        if let Some(t) = t {
            out.push(Lexeme { t, line: l0, col: c0 });
        }
        i += adv;
        col += adv;
    }
    out.push(Lexeme { t: T::End, line, col });
    Ok(out)
}

struct P {
    toks: Vec<Lexeme>,
    pos: usize,
    var: String,
}

impl P {
    fn peek(&self) -> &T {
        &self.toks[self.pos].t
    }

    fn fail<X>(&self, msg: impl Into<String>) -> Result<X, ParseError> {
        let l = &self.toks[self.pos];
        Err(ParseError::Syntax { line: l.line, col: l.col, msg: msg.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            T::Ident(s) => format!("`{s}`"),
            T::Num(n) => format!("`{n}`"),
            T::Path(p) => format!("`file({p})`"),
            T::Sym(s) => format!("`{s}`"),
            T::Sep => "a separator".into(),
            T::End => "end of input".into(),
        }
    }

    fn skip_seps(&mut self) {
        while *self.peek() == T::Sep {
            self.pos += 1;
        }
    }

    fn sym(&mut self, s: &'static str) -> Result<(), ParseError> {
        if *self.peek() == T::Sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            T::Ident(s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.fail(format!("expected a name, found {}", self.describe())),
        }
    }

    fn source(&mut self) -> Result<Source, ParseError> {
        let s = match self.peek().clone() {
            T::Path(p) => {
                self.pos += 1;
                return Ok(Source::File(p));
            }
            T::Ident(s) => s,
            _ => return self.fail(format!("expected a parameter source, found {}", self.describe())),
        };
        let src = match s.as_str() {
            "sierpinski" => Source::Sierpinski,
            "flatbool" => Source::Flatbool,
            "flatnat" => Source::Flatnat,
            "trivial" => Source::Trivial,
            "discrete" => {
                self.pos += 1;
                self.sym("(")?;
                let n = match *self.peek() {
                    T::Num(n) => n,
                    _ => return self.fail(format!("expected a number, found {}", self.describe())),
                };
                self.pos += 1;
                self.sym(")")?;
                return Ok(Source::Discrete(n));
            }
            _ => return self.fail(format!("unknown parameter source `{s}`")),
        };
        self.pos += 1;
        Ok(src)
    }

    fn expr(&mut self) -> Result<FunctorExpr, ParseError> {
        let mut e = self.term()?;
        while *self.peek() == T::Sym("+") {
            self.pos += 1;
            e = FunctorExpr::sum(e, self.term()?);
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<FunctorExpr, ParseError> {
        let mut e = self.factor()?;
        while *self.peek() == T::Sym("*") {
            self.pos += 1;
            e = FunctorExpr::prod(e, self.factor()?);
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<FunctorExpr, ParseError> {
        match self.peek().clone() {
            T::Ident(s) => {
                self.pos += 1;
                Ok(if s == self.var { FunctorExpr::Id } else { FunctorExpr::konst(&s) })
            }
            T::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.sym(")")?;
                Ok(e)
            }
            T::Sym("[") => {
                self.pos += 1;
                let b = self.ident()?;
                if b == self.var {
                    return Err(ParseError::RecursiveExponent(b));
                }
                self.sym("->")?;
                let body = self.expr()?;
                self.sym("]")?;
                Ok(FunctorExpr::exp(&b, body))
            }
            _ => self.fail(format!("expected a name, `(` or `[`, found {}", self.describe())),
        }
    }
}

/// Parse declarations and the equation. Names used in the body need not be
/// declared here; see [`Equation::check_bound`].
pub fn parse_equation(text: &str) -> Result<Equation, ParseError> {
    let mut p = P { toks: lex(text)?, pos: 0, var: String::new() };
    let mut params: Vec<(String, Source)> = Vec::new();
    p.skip_seps();
    while *p.peek() == T::Ident("param".into()) {
        p.pos += 1;
        let n = p.ident()?;
        p.sym("=")?;
        let s = p.source()?;
        if params.iter().any(|(m, _)| *m == n) {
            return Err(ParseError::DuplicateParam(n));
        }
        params.push((n, s));
        match p.peek() {
            T::Sep => p.skip_seps(),
            _ => return p.fail(format!("expected a separator, found {}", p.describe())),
        }
    }
    let var = p.ident()?;
    if params.iter().any(|(n, _)| *n == var) {
        return p.fail(format!("recursion variable {var} is also a parameter"));
    }
    p.var = var.clone();
    p.sym("=")?;
    let body = p.expr()?;
    p.skip_seps();
    if *p.peek() != T::End {
        return p.fail(format!("expected end of input, found {}", p.describe()));
    }
    Ok(Equation { params, var, body })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(a: &str) -> FunctorExpr {
        FunctorExpr::konst(a)
    }

    #[test]
    fn examples() {
        let e = parse_equation("param A = sierpinski; param B = sierpinski; X = A + [B -> X]").unwrap();
        assert_eq!(e.body, FunctorExpr::sum(k("A"), FunctorExpr::exp("B", FunctorExpr::Id)));
        assert_eq!(e.params.len(), 2);
        e.check_bound().unwrap();
        assert_eq!(parse_equation("X = [X -> A]"), Err(ParseError::RecursiveExponent("X".into())));
        let e = parse_equation("X = (A * A) + X").unwrap();
        assert_eq!(e.body, FunctorExpr::sum(FunctorExpr::prod(k("A"), k("A")), FunctorExpr::Id));
        assert_eq!(e.check_bound(), Err(ParseError::UnboundName("A".into())));
    }

    #[test]
    fn sources_and_layout() {
        let e = parse_equation("# running example\nparam A = discrete(3)\n\nparam B = file( dir/b.json )\nY = A * [B -> Y]\n")
            .unwrap();
        assert_eq!(e.params, vec![("A".into(), Source::Discrete(3)), ("B".into(), Source::File("dir/b.json".into()))]);
        assert_eq!(e.var, "Y");
        assert_eq!(e.to_string(), "param A = discrete(3); param B = file(dir/b.json); Y = A * [B -> Y]");
    }

    #[test]
    fn syntax_errors_have_positions() {
        let cases = [
            ("X = A +", 1, 8),
            ("param A = sierpinski\nX = [A X]", 2, 8),
            ("param A = cantor; X = A", 1, 11),
            ("X = A $ B", 1, 7),
            ("param A = flatbool X = A", 1, 20),
        ];
        for (text, line, col) in cases {
            match parse_equation(text) {
                Err(ParseError::Syntax { line: l, col: c, .. }) => assert_eq!((l, c), (line, col), "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert_eq!(
            parse_equation("param A = trivial; param A = trivial; X = A"),
            Err(ParseError::DuplicateParam("A".into()))
        );
    }

    fn arb_expr() -> impl Strategy<Value = FunctorExpr> {
        let leaf = prop_oneof![Just(FunctorExpr::Id), Just(k("A")), Just(k("B")), Just(k("C"))];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| FunctorExpr::sum(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| FunctorExpr::prod(a, b)),
                (prop_oneof![Just("A"), Just("B")], inner).prop_map(|(b, e)| FunctorExpr::exp(b, e)),
            ]
        })
    }

    proptest! {
        #[test]
        fn pretty_then_parse_is_identity(body in arb_expr(), builtin in 0usize..6) {
            let sources = [
                Source::Sierpinski,
                Source::Flatbool,
                Source::Flatnat,
                Source::Discrete(builtin),
                Source::Trivial,
                Source::File("a b.json".into()),
            ];
            let params = vec![("A".to_string(), sources[builtin].clone()), ("B".to_string(), Source::Sierpinski)];
            let e = Equation { params, var: "X".into(), body };
            prop_assert_eq!(parse_equation(&e.to_string()).unwrap(), e);
        }
    }
}
