//! Lock-structured application programs.
//!
//! The textual form is a small statement language:
//!
//! ```text
//! object lock_object {
//!   var s = 1;
//!   lock m;
//!   op D {
//!     lock(m); read(s, t); compute(t, t + 1); write(s, t); unlock(m);
//!     compute(t, t * 2);
//!     lock(m); write(s, t); unlock(m);
//!     return(ok);
//!   }
//! }
//! ```
//!
//! Statements: `lock(l)`, `unlock(l)`, `read(var, local)`, `write(var, expr)`,
//! `compute(local, expr)`, `wait(cond, lock, guard_var)`, `signal(cond)`,
//! `call(object, op, expr, local)` and `return(expr | ok)`. `wait` blocks while
//! the shared variable `guard_var` is zero, releasing `lock` meanwhile.
//! Expressions are integer `+ - *` over locals and constants; the operation
//! argument is the predefined local `arg`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{State, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Const(i64),
    Local(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, locals: &[i64]) -> i64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Local(i) => locals[*i],
            Expr::Neg(e) => e.eval(locals).wrapping_neg(),
            Expr::Add(a, b) => a.eval(locals).wrapping_add(b.eval(locals)),
            Expr::Sub(a, b) => a.eval(locals).wrapping_sub(b.eval(locals)),
            Expr::Mul(a, b) => a.eval(locals).wrapping_mul(b.eval(locals)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnExpr {
    Ok,
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instr {
    Lock(usize),
    Unlock(usize),
    Read { var: usize, into: usize },
    Write { var: usize, expr: Expr },
    Compute { into: usize, expr: Expr },
    Wait { cond: usize, lock: usize, guard: usize },
    Signal(usize),
    Call { object: String, op: String, arg: Expr, into: usize },
    Return(ReturnExpr),
}

/// Names of shared variables, locks and condition variables of one object.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declarations {
    pub vars: Vec<(String, i64)>,
    pub locks: Vec<String>,
    pub conds: Vec<String>,
}

impl Declarations {
    pub fn var(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|(n, _)| n == name)
    }

    pub fn lock(&self, name: &str) -> Option<usize> {
        self.locks.iter().position(|n| n == name)
    }

    pub fn cond(&self, name: &str) -> Option<usize> {
        self.conds.iter().position(|n| n == name)
    }

    pub fn initial_state(&self) -> State {
        State(self.vars.iter().map(|(_, v)| *v).collect())
    }
}

/// One validated operation body.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub name: String,
    pub instructions: Vec<Instr>,
    /// Local slot names; slot 0 is `arg`.
    pub locals: Vec<String>,
    pub decls: Declarations,
}

impl Program {
    /// Number of top-level critical sections (lock acquisitions at depth 0).
    pub fn critical_sections(&self) -> usize {
        let mut depth = 0usize;
        let mut count = 0;
        for ins in &self.instructions {
            match ins {
                Instr::Lock(_) => {
                    if depth == 0 {
                        count += 1;
                    }
                    depth += 1;
                }
                Instr::Unlock(_) => depth -= 1,
                _ => {}
            }
        }
        count
    }

    pub fn has_nested_calls(&self) -> bool {
        self.instructions.iter().any(|i| matches!(i, Instr::Call { .. }))
    }

    pub fn initial_locals(&self, arg: &Value) -> Vec<i64> {
        let mut l = vec![0; self.locals.len()];
        l[0] = arg.int_or_zero();
        l
    }
}

/// An object: shared declarations plus its operations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectDef {
    pub name: String,
    pub decls: Declarations,
    pub ops: BTreeMap<String, Program>,
}

impl ObjectDef {
    pub fn op(&self, name: &str) -> Result<&Program> {
        self.ops
            .get(name)
            .ok_or_else(|| Error::UndefinedOperation { object: self.name.clone(), op: name.into() })
    }

    pub fn initial_state(&self) -> State {
        self.decls.initial_state()
    }
}

/// Result of running one non-blocking, non-control instruction.
pub(crate) fn exec_data(ins: &Instr, shared: &mut State, locals: &mut [i64]) {
    match ins {
        Instr::Read { var, into } => locals[*into] = shared.0[*var],
        Instr::Write { var, expr } => shared.0[*var] = expr.eval(locals),
        Instr::Compute { into, expr } => locals[*into] = expr.eval(locals),
        _ => unreachable!("exec_data on control instruction {ins:?}"),
    }
}

pub(crate) fn eval_return(r: &ReturnExpr, locals: &[i64]) -> Value {
    match r {
        ReturnExpr::Ok => Value::ok(),
        ReturnExpr::Expr(e) => Value::Int(e.eval(locals)),
    }
}

/// Compile a single `op NAME { ... }` block. Shared names are declared on
/// first use (variables start at 0).
pub fn compile_program(source: &str) -> Result<Program> {
    let mut p = Parser::new(source)?;
    let mut decls = Declarations::default();
    let prog = p.op_block(&mut decls, true)?;
    p.expect_end()?;
    Ok(Program { decls, ..prog })
}

/// Compile an `object NAME { var ..; lock ..; cond ..; op .. }` definition.
pub fn compile_object(source: &str) -> Result<ObjectDef> {
    let mut p = Parser::new(source)?;
    p.keyword("object")?;
    let name = p.ident()?;
    p.punct('{')?;
    let mut decls = Declarations::default();
    let mut ops = BTreeMap::new();
    loop {
        let (tok, line) = p.peek();
        match tok {
            Tok::Punct('}') => {
                p.next();
                break;
            }
            Tok::Ident(kw) if kw == "var" => {
                p.next();
                let v = p.ident()?;
                let init = if p.eat_punct('=') { p.int()? } else { 0 };
                p.punct(';')?;
                if decls.var(&v).is_some() {
                    return Err(p.err(line, format!("variable `{v}` declared twice")));
                }
                decls.vars.push((v, init));
            }
            Tok::Ident(kw) if kw == "lock" => {
                p.next();
                let l = p.ident()?;
                p.punct(';')?;
                decls.locks.push(l);
            }
            Tok::Ident(kw) if kw == "cond" => {
                p.next();
                let c = p.ident()?;
                p.punct(';')?;
                decls.conds.push(c);
            }
            Tok::Ident(kw) if kw == "op" => {
                let prog = p.op_block(&mut decls, false)?;
                if ops.contains_key(&prog.name) {
                    return Err(p.err(line, format!("operation `{}` defined twice", prog.name)));
                }
                ops.insert(prog.name.clone(), prog);
            }
            other => return Err(p.err(line, format!("unexpected {other:?} in object body"))),
        }
    }
    p.expect_end()?;
    for prog in ops.values_mut() {
        prog.decls = decls.clone();
    }
    Ok(ObjectDef { name, decls, ops })
}

/// Enforce lock nesting, wait-under-lock and the single trailing return.
pub fn validate(p: &Program) -> Result<()> {
    let unbalanced =
        |message: String| Error::UnbalancedLocks { program: p.name.clone(), message };
    let mut held: Vec<usize> = Vec::new();
    for (i, ins) in p.instructions.iter().enumerate() {
        match ins {
            Instr::Lock(l) => {
                if held.contains(l) {
                    return Err(unbalanced(format!("lock `{}` acquired twice", p.decls.locks[*l])));
                }
                held.push(*l);
            }
            Instr::Unlock(l) => match held.last() {
                Some(top) if top == l => {
                    held.pop();
                }
                _ => {
                    return Err(unbalanced(format!(
                        "unlock of `{}` does not match the innermost held lock",
                        p.decls.locks[*l]
                    )))
                }
            },
            Instr::Wait { cond, lock, .. } => {
                if !held.contains(lock) {
                    return Err(Error::WaitWithoutLock {
                        program: p.name.clone(),
                        cond: p.decls.conds[*cond].clone(),
                        lock: p.decls.locks[*lock].clone(),
                    });
                }
            }
            Instr::Return(_) => {
                if i + 1 != p.instructions.len() {
                    return Err(Error::Parse {
                        line: 0,
                        message: format!("`{}` has instructions after return", p.name),
                    });
                }
                if !held.is_empty() {
                    return Err(unbalanced("returns while holding a lock".into()));
                }
            }
            _ => {}
        }
    }
    if !matches!(p.instructions.last(), Some(Instr::Return(_))) {
        return Err(Error::Parse { line: 0, message: format!("`{}` is missing a return", p.name) });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(char),
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    for (n, raw) in src.lines().enumerate() {
        let line = n + 1;
        let code = raw.split("//").next().unwrap_or("");
        let mut chars = code.chars().peekable();
        while let Some(&c) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c.is_ascii_digit() {
                let mut s = String::new();
                while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                    s.push(d);
                    chars.next();
                }
                let v = s
                    .parse()
                    .map_err(|_| Error::Parse { line, message: format!("bad integer {s}") })?;
                out.push((Tok::Int(v), line));
            } else if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(&d) = chars.peek().filter(|d| d.is_alphanumeric() || **d == '_') {
                    s.push(d);
                    chars.next();
                }
                out.push((Tok::Ident(s), line));
            } else if "(){};,=+-*".contains(c) {
                out.push((Tok::Punct(c), line));
                chars.next();
            } else {
                return Err(Error::Parse { line, message: format!("unexpected character `{c}`") });
            }
        }
    }
    let last = out.last().map_or(1, |(_, l)| *l);
    out.push((Tok::End, last));
    Ok(out)
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Self { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> (Tok, usize) {
        self.toks[self.pos].clone()
    }

    fn next(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { line, message: message.into() }
    }

    fn ident(&mut self) -> Result<String> {
        match self.next() {
            (Tok::Ident(s), _) => Ok(s),
            (t, line) => Err(self.err(line, format!("expected identifier, found {t:?}"))),
        }
    }

    fn int(&mut self) -> Result<i64> {
        let neg = self.eat_punct('-');
        match self.next() {
            (Tok::Int(v), _) => Ok(if neg { -v } else { v }),
            (t, line) => Err(self.err(line, format!("expected integer, found {t:?}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.next() {
            (Tok::Ident(s), _) if s == kw => Ok(()),
            (t, line) => Err(self.err(line, format!("expected `{kw}`, found {t:?}"))),
        }
    }

    fn punct(&mut self, c: char) -> Result<()> {
        match self.next() {
            (Tok::Punct(p), _) if p == c => Ok(()),
            (t, line) => Err(self.err(line, format!("expected `{c}`, found {t:?}"))),
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek().0 == Tok::Punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_end(&mut self) -> Result<()> {
        match self.peek() {
            (Tok::End, _) => Ok(()),
            (t, line) => Err(self.err(line, format!("trailing input {t:?}"))),
        }
    }

    fn op_block(&mut self, decls: &mut Declarations, auto_declare: bool) -> Result<Program> {
        self.keyword("op")?;
        let name = self.ident()?;
        self.punct('{')?;
        let mut b = BodyBuilder { decls, auto_declare, locals: vec!["arg".to_string()] };
        let mut instructions = Vec::new();
        loop {
            let (tok, line) = self.peek();
            match tok {
                Tok::Punct('}') => {
                    self.next();
                    break;
                }
                Tok::Ident(_) => instructions.push(self.statement(&mut b)?),
                other => return Err(self.err(line, format!("unexpected {other:?} in `{name}`"))),
            }
        }
        let locals = b.locals;
        let prog = Program { name, instructions, locals, decls: decls.clone() };
        validate(&prog)?;
        Ok(prog)
    }

    fn statement(&mut self, b: &mut BodyBuilder<'_>) -> Result<Instr> {
        let (_, line) = self.peek();
        let kw = self.ident()?;
        self.punct('(')?;
        let ins = match kw.as_str() {
            "lock" => Instr::Lock(b.lock(self.ident()?, line)?),
            "unlock" => Instr::Unlock(b.lock(self.ident()?, line)?),
            "read" => {
                let var = b.var(self.ident()?, line)?;
                self.punct(',')?;
                let into = b.define_local(self.ident()?);
                Instr::Read { var, into }
            }
            "write" => {
                let var = b.var(self.ident()?, line)?;
                self.punct(',')?;
                Instr::Write { var, expr: self.expr(b)? }
            }
            "compute" => {
                let target = self.ident()?;
                self.punct(',')?;
                let expr = self.expr(b)?;
                Instr::Compute { into: b.define_local(target), expr }
            }
            "wait" => {
                let cond = b.cond(self.ident()?, line)?;
                self.punct(',')?;
                let lock = b.lock(self.ident()?, line)?;
                self.punct(',')?;
                let guard = b.var(self.ident()?, line)?;
                Instr::Wait { cond, lock, guard }
            }
            "signal" => Instr::Signal(b.cond(self.ident()?, line)?),
            "call" => {
                let object = self.ident()?;
                self.punct(',')?;
                let op = self.ident()?;
                self.punct(',')?;
                let arg = self.expr(b)?;
                self.punct(',')?;
                let into = b.define_local(self.ident()?);
                Instr::Call { object, op, arg, into }
            }
            "return" => {
                if matches!(self.peek().0, Tok::Ident(ref s) if s == "ok") {
                    self.next();
                    Instr::Return(ReturnExpr::Ok)
                } else {
                    Instr::Return(ReturnExpr::Expr(self.expr(b)?))
                }
            }
            other => return Err(self.err(line, format!("unknown statement `{other}`"))),
        };
        self.punct(')')?;
        self.punct(';')?;
        Ok(ins)
    }

    fn expr(&mut self, b: &BodyBuilder<'_>) -> Result<Expr> {
        let mut lhs = self.term(b)?;
        loop {
            if self.eat_punct('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term(b)?));
            } else if self.eat_punct('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term(b)?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self, b: &BodyBuilder<'_>) -> Result<Expr> {
        let mut lhs = self.factor(b)?;
        while self.eat_punct('*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor(b)?));
        }
        Ok(lhs)
    }

    fn factor(&mut self, b: &BodyBuilder<'_>) -> Result<Expr> {
        match self.next() {
            (Tok::Int(v), _) => Ok(Expr::Const(v)),
            (Tok::Ident(name), line) => b
                .locals
                .iter()
                .position(|l| *l == name)
                .map(Expr::Local)
                .ok_or_else(|| self.err(line, format!("undefined local `{name}`"))),
            (Tok::Punct('('), _) => {
                let e = self.expr(b)?;
                self.punct(')')?;
                Ok(e)
            }
            (Tok::Punct('-'), _) => Ok(Expr::Neg(Box::new(self.factor(b)?))),
            (t, line) => Err(self.err(line, format!("expected expression, found {t:?}"))),
        }
    }
}

struct BodyBuilder<'a> {
    decls: &'a mut Declarations,
    auto_declare: bool,
    locals: Vec<String>,
}

impl BodyBuilder<'_> {
    fn define_local(&mut self, name: String) -> usize {
        if let Some(i) = self.locals.iter().position(|l| *l == name) {
            return i;
        }
        self.locals.push(name);
        self.locals.len() - 1
    }

    fn undeclared(&self, kind: &str, name: &str, line: usize) -> Error {
        Error::Parse { line, message: format!("undeclared {kind} `{name}`") }
    }

    fn var(&mut self, name: String, line: usize) -> Result<usize> {
        if let Some(i) = self.decls.var(&name) {
            return Ok(i);
        }
        if !self.auto_declare {
            return Err(self.undeclared("variable", &name, line));
        }
        self.decls.vars.push((name, 0));
        Ok(self.decls.vars.len() - 1)
    }

    fn lock(&mut self, name: String, line: usize) -> Result<usize> {
        if let Some(i) = self.decls.lock(&name) {
            return Ok(i);
        }
        if !self.auto_declare {
            return Err(self.undeclared("lock", &name, line));
        }
        self.decls.locks.push(name);
        Ok(self.decls.locks.len() - 1)
    }

    fn cond(&mut self, name: String, line: usize) -> Result<usize> {
        if let Some(i) = self.decls.cond(&name) {
            return Ok(i);
        }
        if !self.auto_declare {
            return Err(self.undeclared("condition", &name, line));
        }
        self.decls.conds.push(name);
        Ok(self.decls.conds.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const LISTING1_D: &str = "op D {
        lock(m);
          read(s, t); compute(t, t + 1); // access
          write(s, t);
        unlock(m);
          compute(t, t * 2); // compute
        lock(m);
          write(s, t); // access
        unlock(m);
        return(ok);
    }";

    #[test]
    fn listing1_d_has_two_critical_sections() {
        let p = compile_program(LISTING1_D).unwrap();
        assert_eq!(p.critical_sections(), 2);
        assert_eq!(p.decls.locks, vec!["m".to_string()]);
        assert_eq!(p.locals, vec!["arg".to_string(), "t".to_string()]);
    }

    #[test]
    fn unbalanced_lock() {
        let err = compile_program("op X { lock(a); return(1); }");
        assert!(matches!(err, Err(Error::UnbalancedLocks { .. })));
        let err = compile_program("op X { lock(a); lock(b); unlock(a); unlock(b); return(1); }");
        assert!(matches!(err, Err(Error::UnbalancedLocks { .. })));
        let err = compile_program("op X { unlock(a); return(1); }");
        assert!(matches!(err, Err(Error::UnbalancedLocks { .. })));
    }

    #[test]
    fn empty_body_is_parse_error() {
        assert!(matches!(compile_program("op X { }"), Err(Error::Parse { .. })));
        assert!(matches!(
            compile_program("op X { return(1); compute(a, 1); }"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn wait_without_lock() {
        let err = compile_program("op X { wait(c, m, ready); return(ok); }");
        assert!(matches!(err, Err(Error::WaitWithoutLock { .. })));
        compile_program("op X { lock(m); wait(c, m, ready); unlock(m); return(ok); }").unwrap();
    }

    #[test]
    fn expressions_and_locals() {
        let p = compile_program("op X { compute(a, (arg + 2) * 3 - -1); return(a); }").unwrap();
        let Instr::Compute { expr, .. } = &p.instructions[0] else { panic!() };
        assert_eq!(expr.eval(&[4, 0]), 19);
        assert!(compile_program("op X { return(nope); }").is_err());
    }

    #[test]
    fn object_requires_declarations() {
        let obj = compile_object(
            "object o { var s = 1; lock m; op E { lock(m); read(s, t); unlock(m); return(t); } }",
        )
        .unwrap();
        assert_eq!(obj.initial_state(), State(vec![1]));
        assert!(obj.op("E").is_ok());
        assert!(obj.op("F").is_err());
        let bad = compile_object("object o { op E { lock(m); unlock(m); return(0); } }");
        assert!(matches!(bad, Err(Error::Parse { .. })));
    }
}
