//! Reader for `.inp` calculus descriptions.

use std::collections::BTreeMap;
use std::fmt;

use crate::calculus::{
    Answer, ArgKind, Calculus, ClassDef, ClosureDecl, Command, Constraints, ForkEntry,
    Production, Rule, RuleKind, Side,
};
use crate::syntax::{Arg, Env, EnvItem, Expr, VarTerm, LAMBDA_SYMBOL, VAR_SYMBOL};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u32),
    Str(String),
    LBrace,
    RBrace,
    EmptyEnv,
    LBrack,
    RBrack,
    Hole(u8),
    LParen,
    RParen,
    Comma,
    Semi,
    Eq,
    Neq,
    Arrow,
    Def,
    Bar,
    Assign,
    Backslash,
    Dot,
    Caret,
    Plus,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, m: &str| ParseError {
        line,
        col,
        message: m.to_string(),
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            adv(1, &mut i, &mut col);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 4)].iter().collect();
        let push = |t: Tok, out: &mut Vec<Token>| out.push(Token { tok: t, line: l0, col: c0 });
        if rest.starts_with("==>") {
            push(Tok::Arrow, &mut out);
            adv(3, &mut i, &mut col);
        } else if rest.starts_with("::=") {
            push(Tok::Def, &mut out);
            adv(3, &mut i, &mut col);
        } else if rest.starts_with("/=") {
            push(Tok::Neq, &mut out);
            adv(2, &mut i, &mut col);
        } else if rest.starts_with("<-") {
            push(Tok::Assign, &mut out);
            adv(2, &mut i, &mut col);
        } else if rest.starts_with("[.]") {
            push(Tok::Hole(0), &mut out);
            adv(3, &mut i, &mut col);
        } else if rest.starts_with("[.") {
            let mut j = i + 2;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j == i + 2 || chars.get(j) != Some(&']') {
                return Err(err(l0, c0, "malformed hole"));
            }
            let k: String = chars[i + 2..j].iter().collect();
            let k: u8 = k.parse().map_err(|_| err(l0, c0, "hole index too large"))?;
            if k == 0 {
                return Err(err(l0, c0, "hole index must be positive"));
            }
            push(Tok::Hole(k), &mut out);
            adv(j + 1 - i, &mut i, &mut col);
        } else if c == '{' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] == ' ' {
                j += 1;
            }
            if chars.get(j) == Some(&'}') {
                push(Tok::EmptyEnv, &mut out);
                adv(j + 1 - i, &mut i, &mut col);
            } else {
                push(Tok::LBrace, &mut out);
                adv(1, &mut i, &mut col);
            }
        } else if c == '"' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                j += 1;
            }
            if chars.get(j) != Some(&'"') {
                return Err(err(l0, c0, "unterminated string"));
            }
            push(Tok::Str(chars[i + 1..j].iter().collect()), &mut out);
            adv(j + 1 - i, &mut i, &mut col);
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            push(
                Tok::Num(s.parse().map_err(|_| err(l0, c0, "number too large"))?),
                &mut out,
            );
            adv(j - i, &mut i, &mut col);
        } else if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len()
                && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
            {
                j += 1;
            }
            push(Tok::Ident(chars[i..j].iter().collect()), &mut out);
            adv(j - i, &mut i, &mut col);
        } else {
            let t = match c {
                '}' => Tok::RBrace,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '=' => Tok::Eq,
                '|' => Tok::Bar,
                '\\' => Tok::Backslash,
                '.' => Tok::Dot,
                '^' => Tok::Caret,
                '+' => Tok::Plus,
                _ => return Err(err(l0, c0, &format!("unexpected character '{c}'"))),
            };
            push(t, &mut out);
            adv(1, &mut i, &mut col);
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

const STATEMENT_WORDS: &[&str] = &[
    "define",
    "declare",
    "ANSWER",
    "ignore",
    "restrict",
    "union",
    "closure",
    "deterministic",
];

const RESERVED: &[&str] = &["where", "in", "letrec"];

/// Context class named by a context variable: trailing digits, primes and
/// underscores stripped.
pub fn class_of_name(name: &str) -> &str {
    name.trim_end_matches(|c: char| c.is_ascii_digit() || c == '\'' || c == '_')
}

fn is_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_uppercase())
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    calc: Calculus,
    class_names: Vec<String>,
    /// Inside a class definition, class names denote the recursive position.
    production_mode: bool,
    sub_counter: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, m: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            line: t.line,
            col: t.col,
            message: m.into(),
        })
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected {t:?}, found {:?}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.next() {
            Tok::Ident(s) => Ok(s),
            t => {
                self.pos -= 1;
                self.error(format!("expected identifier, found {t:?}"))
            }
        }
    }

    fn keyword(&mut self, k: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == k => {
                self.next();
                Ok(())
            }
            t => self.error(format!("expected '{k}', found {t:?}")),
        }
    }

    fn at_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn at_statement_start(&self) -> bool {
        match self.peek() {
            Tok::Eof | Tok::LBrace | Tok::Str(_) => true,
            Tok::Ident(s) => STATEMENT_WORDS.contains(&s.as_str()),
            _ => false,
        }
    }

    fn statement(&mut self) -> PResult<()> {
        match self.peek().clone() {
            Tok::LBrace => self.rule(),
            Tok::Str(_) => self.command(),
            Tok::Ident(s) => match s.as_str() {
                "define" => self.define(),
                "declare" => self.declare(),
                "ANSWER" => {
                    self.next();
                    let expr = self.expr()?;
                    let delta = self.opt_where()?;
                    self.calc.answers.push(Answer { expr, delta });
                    Ok(())
                }
                "ignore" => {
                    self.next();
                    loop {
                        let n = self.ident()?;
                        self.calc.ignore.insert(n);
                        if *self.peek() != Tok::Comma {
                            break;
                        }
                        self.next();
                    }
                    Ok(())
                }
                "restrict" => {
                    self.next();
                    let n = self.ident()?;
                    match self.next() {
                        Tok::Num(k) => {
                            self.calc.restrict.insert(n, k as usize);
                            Ok(())
                        }
                        _ => {
                            self.pos -= 1;
                            self.error("expected a number after restrict")
                        }
                    }
                }
                "union" => {
                    self.next();
                    let n = self.ident()?;
                    self.expect(Tok::Eq)?;
                    let mut members = vec![self.ident()?];
                    while *self.peek() == Tok::Comma {
                        self.next();
                        members.push(self.ident()?);
                    }
                    self.calc.unions.insert(n, members);
                    Ok(())
                }
                "closure" => {
                    self.next();
                    let name = self.ident()?;
                    self.expect(Tok::Comma)?;
                    self.expect(Tok::Plus)?;
                    self.keyword("of")?;
                    let base = self.ident()?;
                    self.calc.closure_decls.push(ClosureDecl { name, base });
                    Ok(())
                }
                "deterministic" => {
                    self.next();
                    self.calc.deterministic = true;
                    Ok(())
                }
                _ => self.error(format!("unexpected '{s}' at statement start")),
            },
            t => self.error(format!("unexpected {t:?} at statement start")),
        }
    }

    fn define(&mut self) -> PResult<()> {
        self.keyword("define")?;
        let name = self.ident()?;
        if !is_upper(&name) {
            return self.error("class names start with an uppercase letter");
        }
        self.expect(Tok::Def)?;
        if !self.class_names.contains(&name) {
            self.class_names.push(name.clone());
        }
        self.production_mode = true;
        let mut productions = Vec::new();
        loop {
            let shape = self.expr()?;
            let guards = self.opt_where()?;
            let holes = count_sub_positions(&shape);
            if !(shape.is_hole() || holes == 1) {
                self.production_mode = false;
                return self.error("a production needs exactly one recursive class position");
            }
            productions.push(Production { shape, guards });
            if *self.peek() != Tok::Bar {
                break;
            }
            self.next();
        }
        self.production_mode = false;
        self.calc.classes.push(ClassDef { name, productions });
        Ok(())
    }

    fn class_name(&mut self) -> PResult<String> {
        let n = self.ident()?;
        if !self.class_names.contains(&n) {
            self.pos -= 1;
            return self.error(format!("unknown class {n}"));
        }
        Ok(n)
    }

    fn declare(&mut self) -> PResult<()> {
        self.keyword("declare")?;
        let which = self.ident()?;
        let k1 = self.class_name()?;
        let k2 = self.class_name()?;
        self.expect(Tok::Eq)?;
        self.expect(Tok::LParen)?;
        match which.as_str() {
            "prefix" => {
                let k3 = self.class_name()?;
                self.expect(Tok::Comma)?;
                let k4 = self.class_name()?;
                self.expect(Tok::RParen)?;
                self.calc.prefix.insert((k1, k2), (k3, k4));
            }
            "fork" => {
                let k3 = self.class_name()?;
                self.expect(Tok::Comma)?;
                let k4 = self.class_name()?;
                self.expect(Tok::Comma)?;
                let k5 = self.class_name()?;
                self.expect(Tok::Comma)?;
                let template = self.expr()?;
                self.expect(Tok::RParen)?;
                self.calc
                    .forks
                    .entry((k1, k2))
                    .or_default()
                    .push(ForkEntry {
                        k3,
                        k4,
                        k5,
                        template,
                    });
            }
            _ => return self.error(format!("unknown declaration '{which}'")),
        }
        Ok(())
    }

    fn rule(&mut self) -> PResult<()> {
        self.expect(Tok::LBrace)?;
        let mut parts: Vec<String> = Vec::new();
        loop {
            match self.next() {
                Tok::Ident(s) => parts.push(s),
                Tok::Num(n) => parts.push(n.to_string()),
                Tok::Plus => parts.push("+".into()),
                t => {
                    self.pos -= 1;
                    return self.error(format!("unexpected {t:?} in rule header"));
                }
            }
            match self.next() {
                Tok::Comma => continue,
                Tok::RBrace => break,
                t => {
                    self.pos -= 1;
                    return self.error(format!("unexpected {t:?} in rule header"));
                }
            }
        }
        let kind = if parts.first().map(String::as_str) == Some("SR") {
            parts.remove(0);
            RuleKind::SR
        } else {
            RuleKind::T
        };
        if parts.is_empty() {
            return self.error("rule header lacks a name");
        }
        let name = parts.remove(0);
        let mut variant = None;
        let mut closure = false;
        for p in parts {
            if p == "+" {
                closure = true;
            } else if let Ok(k) = p.parse::<u32>() {
                variant = Some(k);
            } else {
                return self.error(format!("unexpected '{p}' in rule header"));
            }
        }
        let lhs = self.expr()?;
        self.expect(Tok::Arrow)?;
        let rhs = self.expr()?;
        let delta = self.opt_where()?;
        let rule = Rule {
            kind,
            name,
            variant,
            closure,
            lhs,
            rhs,
            delta,
            reversed: false,
        };
        if closure {
            self.calc.closure_rules.push(rule);
        } else if kind == RuleKind::SR {
            self.calc.sr_rules.push(rule);
        } else {
            self.calc.transformations.push(rule);
        }
        Ok(())
    }

    fn command(&mut self) -> PResult<()> {
        let output = match self.next() {
            Tok::Str(s) => s,
            _ => unreachable!(),
        };
        self.expect(Tok::Assign)?;
        self.keyword("overlap")?;
        self.expect(Tok::LParen)?;
        let rule = self.ident()?;
        let mut variant = None;
        if *self.peek() == Tok::Comma {
            self.next();
            match self.next() {
                Tok::Num(k) => variant = Some(k),
                _ => {
                    self.pos -= 1;
                    return self.error("expected variant number");
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Dot)?;
        let side = match self.ident()?.as_str() {
            "l" => Side::Left,
            "r" => Side::Right,
            s => return self.error(format!("expected l or r, found {s}")),
        };
        self.keyword("all")?;
        self.calc.commands.push(Command {
            output,
            rule,
            variant,
            side,
        });
        Ok(())
    }

    fn opt_where(&mut self) -> PResult<Constraints> {
        let mut c = Constraints::default();
        if !self.at_keyword("where") {
            return Ok(c);
        }
        self.next();
        loop {
            match self.peek().clone() {
                Tok::LParen => {
                    self.next();
                    let s = self.expr()?;
                    self.expect(Tok::Comma)?;
                    let d = self.expr()?;
                    self.expect(Tok::RParen)?;
                    self.check_context(&d)?;
                    c.ncc.push((s, d));
                }
                Tok::LBrack => {
                    self.next();
                    let env = self.env()?;
                    self.expect(Tok::Comma)?;
                    let d = self.expr()?;
                    self.expect(Tok::RBrack)?;
                    self.check_context(&d)?;
                    c.ncc.push((Expr::Letrec(env, Box::new(Expr::hole())), d));
                }
                Tok::Ident(n) => {
                    self.next();
                    self.expect(Tok::Neq)?;
                    match self.next() {
                        Tok::Hole(0) => c.nonempty_ctx.push(n),
                        Tok::EmptyEnv => c.nonempty_env.push(n),
                        _ => {
                            self.pos -= 1;
                            return self.error("expected [.] or {} after /=");
                        }
                    }
                }
                t => return self.error(format!("unexpected {t:?} in constraints")),
            }
            if *self.peek() != Tok::Comma {
                break;
            }
            self.next();
        }
        Ok(c)
    }

    fn check_context(&self, d: &Expr) -> PResult<()> {
        if d.count_holes() != 1 {
            return self.error("the context of a non-capture constraint needs exactly one hole");
        }
        Ok(())
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::LParen | Tok::Hole(_) | Tok::Backslash => true,
            Tok::Ident(s) => {
                !RESERVED.contains(&s.as_str()) && !STATEMENT_WORDS.contains(&s.as_str())
                    || s == "letrec"
            }
            _ => false,
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_upper(&s) && !RESERVED.contains(&s.as_str()) => {
                self.next();
                self.application(s)
            }
            _ => self.atom(),
        }
    }

    fn application(&mut self, f: String) -> PResult<Expr> {
        let known = self.calc.symbols.get(&f).cloned();
        let mut args = Vec::new();
        let mut kinds = Vec::new();
        while self.starts_atom() {
            let idx = args.len();
            let kind = known.as_ref().and_then(|k| k.get(idx).copied());
            if let Some(k) = &known {
                if idx >= k.len() {
                    return self.error(format!("too many arguments for {f} (arity {})", k.len()));
                }
            }
            let (arg, k) = self.argument(kind)?;
            args.push(arg);
            kinds.push(k);
        }
        match known {
            Some(k) => {
                if k.len() != args.len() {
                    return self.error(format!(
                        "symbol {f} expects {} arguments, found {}",
                        k.len(),
                        args.len()
                    ));
                }
                if k != kinds {
                    return self.error(format!("argument kinds of {f} differ from earlier use"));
                }
            }
            None => {
                self.calc.symbols.insert(f.clone(), kinds);
            }
        }
        Ok(Expr::Fun(f, args))
    }

    fn argument(&mut self, kind: Option<ArgKind>) -> PResult<(Arg, ArgKind)> {
        if kind == Some(ArgKind::Var) {
            let v = self.var_term()?;
            return Ok((Arg::Var(v), ArgKind::Var));
        }
        // binder prefix `(x1.x2.s)`
        if *self.peek() == Tok::LParen
            && matches!(self.peek_at(1), Tok::Ident(_))
            && *self.peek_at(2) == Tok::Dot
        {
            self.next();
            let mut xs = Vec::new();
            while matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Dot {
                xs.push(self.var_term()?);
                self.next();
            }
            let body = self.expr()?;
            self.expect(Tok::RParen)?;
            let k = xs.len();
            return Ok((Arg::Bind(xs, body), ArgKind::Expr(k)));
        }
        let e = match self.peek().clone() {
            Tok::Ident(s) if !is_upper(&s) && s != "letrec" => {
                self.next();
                let e = self.application_nullary(s)?;
                e
            }
            _ => self.atom()?,
        };
        Ok((Arg::Expr(e), ArgKind::Expr(0)))
    }

    fn application_nullary(&mut self, f: String) -> PResult<Expr> {
        match self.calc.symbols.get(&f) {
            Some(k) if !k.is_empty() => {
                self.error(format!("symbol {f} needs {} arguments; use parentheses", k.len()))
            }
            Some(_) => Ok(Expr::Fun(f, vec![])),
            None => {
                self.calc.symbols.insert(f.clone(), vec![]);
                Ok(Expr::Fun(f, vec![]))
            }
        }
    }

    fn var_term(&mut self) -> PResult<VarTerm> {
        let n = self.ident()?;
        Ok(if is_upper(&n) {
            VarTerm::Meta(n)
        } else {
            VarTerm::Concrete(n)
        })
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Hole(k) => {
                self.next();
                Ok(Expr::Hole(k))
            }
            Tok::Backslash => {
                self.next();
                let x = self.var_term()?;
                self.expect(Tok::Dot)?;
                let body = self.expr()?;
                self.note_symbol(LAMBDA_SYMBOL, vec![ArgKind::Expr(1)])?;
                Ok(Expr::lam(x, body))
            }
            Tok::Ident(s) if s == "letrec" => {
                self.next();
                let env = self.env()?;
                self.keyword("in")?;
                let body = self.expr()?;
                Ok(Expr::Letrec(env, Box::new(body)))
            }
            Tok::Ident(s) if s == VAR_SYMBOL => {
                self.next();
                let x = self.var_term()?;
                Ok(Expr::var(x))
            }
            Tok::Ident(s) if is_upper(&s) => {
                self.next();
                if *self.peek() == Tok::LBrack {
                    self.next();
                    let body = self.expr()?;
                    self.expect(Tok::RBrack)?;
                    let class = class_of_name(&s).to_string();
                    if !self.class_names.contains(&class) {
                        return self.error(format!("unknown class {class} of context variable {s}"));
                    }
                    return Ok(Expr::Ctx {
                        name: s,
                        class,
                        body: Box::new(body),
                    });
                }
                if self.production_mode && self.class_names.contains(&s) {
                    self.sub_counter += 1;
                    return Ok(Expr::Ctx {
                        name: format!("{s}{}", self.sub_counter),
                        class: s,
                        body: Box::new(Expr::hole()),
                    });
                }
                Ok(Expr::SVar(s))
            }
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.next();
                self.application_nullary(s)
            }
            t => self.error(format!("unexpected {t:?} in expression")),
        }
    }

    fn note_symbol(&mut self, f: &str, kinds: Vec<ArgKind>) -> PResult<()> {
        match self.calc.symbols.get(f) {
            Some(k) if *k != kinds => self.error(format!("inconsistent use of {f}")),
            Some(_) => Ok(()),
            None => {
                self.calc.symbols.insert(f.to_string(), kinds);
                Ok(())
            }
        }
    }

    fn env(&mut self) -> PResult<Env> {
        if *self.peek() == Tok::EmptyEnv {
            self.next();
            return Ok(Env::default());
        }
        let mut items = Vec::new();
        loop {
            items.push(self.env_item()?);
            if *self.peek() != Tok::Semi {
                break;
            }
            self.next();
        }
        Ok(Env::new(items))
    }

    fn env_item(&mut self) -> PResult<EnvItem> {
        let n = self.ident()?;
        if *self.peek() == Tok::Caret {
            self.next();
            let class = self.class_name()?;
            self.expect(Tok::LBrack)?;
            let var = self.var_term()?;
            self.expect(Tok::Comma)?;
            let body = self.expr()?;
            self.expect(Tok::RBrack)?;
            return Ok(EnvItem::Chain {
                name: n,
                class,
                var,
                body,
            });
        }
        if *self.peek() == Tok::Eq {
            self.next();
            let var = if is_upper(&n) {
                VarTerm::Meta(n)
            } else {
                VarTerm::Concrete(n)
            };
            let body = self.expr()?;
            return Ok(EnvItem::Binding(var, body));
        }
        if !is_upper(&n) {
            self.pos -= 1;
            return self.error("environment variables start with an uppercase letter");
        }
        Ok(EnvItem::EVar(n))
    }
}

fn count_sub_positions(e: &Expr) -> usize {
    let mut n = 0;
    e.walk(&mut |x| {
        if matches!(x, Expr::Ctx { .. }) {
            n += 1;
        }
    });
    n
}

/// Parse a complete calculus description.
pub fn parse(text: &str) -> Result<Calculus, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        calc: Calculus::default(),
        class_names: Vec::new(),
        production_mode: false,
        sub_counter: 0,
    };
    p.calc.symbols.insert(VAR_SYMBOL.into(), vec![ArgKind::Var]);
    // Class names are needed before their definitions (mutual recursion).
    for (i, t) in p.toks.iter().enumerate() {
        if matches!(&t.tok, Tok::Ident(s) if s == "define") {
            if let Some(Token {
                tok: Tok::Ident(n), ..
            }) = p.toks.get(i + 1)
            {
                if !p.class_names.contains(n) {
                    p.class_names.push(n.clone());
                }
            }
        }
    }
    while *p.peek() != Tok::Eof {
        let start = p.pos;
        p.statement()?;
        if !p.at_statement_start() {
            return p.error(format!("unexpected {:?} after statement", p.peek()));
        }
        debug_assert!(p.pos > start);
    }
    let mut calc = p.calc;
    if !calc.symbols.contains_key(LAMBDA_SYMBOL) {
        calc.symbols
            .insert(LAMBDA_SYMBOL.into(), vec![ArgKind::Expr(1)]);
    }
    Ok(calc)
}

/// Parse a single meta-expression against the symbols and classes of `calc`.
pub fn parse_expr(calc: &Calculus, text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        calc: calc.clone(),
        class_names: calc.classes.iter().map(|c| c.name.clone()).collect(),
        production_mode: false,
        sub_counter: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("trailing {:?}", p.peek()));
    }
    Ok(e)
}

/// Canonical rendering of a description in the input syntax.
pub fn render(calc: &Calculus) -> String {
    let mut out = String::new();
    if calc.deterministic {
        out.push_str("deterministic\n");
    }
    for c in &calc.classes {
        let prods: Vec<String> = c
            .productions
            .iter()
            .map(|p| {
                let mut s = render_production(&p.shape);
                if !p.guards.is_empty() {
                    s.push_str(&format!(" where {}", p.guards));
                }
                s
            })
            .collect();
        out.push_str(&format!("define {} ::= {}\n", c.name, prods.join(" | ")));
    }
    for ((k1, k2), (k3, k4)) in &calc.prefix {
        out.push_str(&format!("declare prefix {k1} {k2} = ({k3},{k4})\n"));
    }
    for ((k1, k2), es) in &calc.forks {
        for f in es {
            out.push_str(&format!(
                "declare fork {k1} {k2} = ({},{},{},({}))\n",
                f.k3, f.k4, f.k5, f.template
            ));
        }
    }
    for r in calc.all_rules() {
        out.push_str(&format!("{r}\n"));
    }
    for a in &calc.answers {
        out.push_str(&format!("ANSWER {}", a.expr));
        if !a.delta.is_empty() {
            out.push_str(&format!(" where {}", a.delta));
        }
        out.push('\n');
    }
    let unions: BTreeMap<_, _> = calc.unions.iter().collect();
    for (n, ms) in unions {
        out.push_str(&format!("union {n} = {}\n", ms.join(", ")));
    }
    for c in &calc.closure_decls {
        out.push_str(&format!("closure {},+ of {}\n", c.name, c.base));
    }
    for n in &calc.ignore {
        out.push_str(&format!("ignore {n}\n"));
    }
    for (n, k) in &calc.restrict {
        out.push_str(&format!("restrict {n} {k}\n"));
    }
    for c in &calc.commands {
        let v = c.variant.map(|k| format!(",{k}")).unwrap_or_default();
        let side = match c.side {
            Side::Left => "l",
            Side::Right => "r",
        };
        out.push_str(&format!("\"{}\" <- overlap ({}{v}).{side} all\n", c.output, c.rule));
    }
    out
}

fn render_production(e: &Expr) -> String {
    let shown = e.map_ctx_to_class();
    match e {
        Expr::Fun(_, args) if !args.is_empty() => format!("({shown})"),
        _ => shown,
    }
}

impl Expr {
    /// Rendering of a production: the recursive position is shown as its class.
    fn map_ctx_to_class(&self) -> String {
        let marked = self.replace_ctx_by_svar();
        marked.to_string()
    }

    fn replace_ctx_by_svar(&self) -> Expr {
        match self {
            Expr::Ctx { class, body, .. } if body.is_hole() => Expr::SVar(class.clone()),
            Expr::Ctx { name, class, body } => Expr::Ctx {
                name: name.clone(),
                class: class.clone(),
                body: Box::new(body.replace_ctx_by_svar()),
            },
            Expr::Letrec(env, body) => Expr::Letrec(
                Env::new(
                    env.items
                        .iter()
                        .map(|it| match it {
                            EnvItem::Binding(x, b) => {
                                EnvItem::Binding(x.clone(), b.replace_ctx_by_svar())
                            }
                            o => o.clone(),
                        })
                        .collect(),
                ),
                Box::new(body.replace_ctx_by_svar()),
            ),
            Expr::Fun(f, args) => Expr::Fun(
                f.clone(),
                args.iter()
                    .map(|a| match a {
                        Arg::Expr(b) => Arg::Expr(b.replace_ctx_by_svar()),
                        Arg::Bind(xs, b) => Arg::Bind(xs.clone(), b.replace_ctx_by_svar()),
                        o => o.clone(),
                    })
                    .collect(),
            ),
            o => o.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input() {
        let c = parse("").unwrap();
        assert!(c.sr_rules.is_empty() && c.classes.is_empty() && c.commands.is_empty());
    }

    #[test]
    fn class_name_stripping() {
        assert_eq!(class_of_name("A1"), "A");
        assert_eq!(class_of_name("C'"), "C");
        assert_eq!(class_of_name("T_2"), "T");
    }

    #[test]
    fn gc_rule_constraints() {
        let text = "define T ::= [.] | (app T S)\n\
                    {gcT,2} T[letrec E in S] ==> T[S] where E /= {}, (S,letrec E in [.])";
        let c = parse(text).unwrap();
        let r = &c.transformations[0];
        assert_eq!(r.name, "gcT");
        assert_eq!(r.variant, Some(2));
        assert_eq!(r.delta.nonempty_env, vec!["E".to_string()]);
        assert_eq!(r.delta.ncc.len(), 1);
        assert_eq!(r.delta.ncc[0].0, Expr::s("S"));
        assert_eq!(r.delta.ncc[0].1.to_string(), "letrec E in [.]");
    }

    #[test]
    fn positioned_errors() {
        let e = parse("define A ::= [.]\n{SR,x} B[top] ==> top").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("unknown class"));
        let e = parse("{t} f a ==> f").unwrap_err();
        assert!(e.message.contains("expects 1 arguments") || e.message.contains("arguments"));
    }

    #[test]
    fn lambda_and_var() {
        let c = parse("define A ::= [.] | (app A S)\n{SR,lbeta,1} A[app (\\X.S1) S2] ==> A[letrec X=S2 in S1] where (S2,\\X.[.])").unwrap();
        let r = &c.sr_rules[0];
        assert_eq!(r.lhs.to_string(), "A[app (\\X.S1) S2]");
        assert_eq!(r.rhs.to_string(), "A[letrec X=S2 in S1]");
        assert_eq!(r.delta.ncc[0].1.to_string(), "\\X.[.]");
    }
}
