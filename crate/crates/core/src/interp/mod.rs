//! A tree-walking reference interpreter for typechecked modules.
//!
//! All float math runs in double precision. Ints wrap at 32 bits and
//! division truncates toward zero.

mod builtins;
mod value;

pub use value::Value;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frontend::{tokenize, CrossGlDialect, Parser, TokenKind};
use crate::ir::*;
use crate::semantics::{is_compute_intrinsic, lookup_builtin, swizzle_index};

pub const MAX_CALL_DEPTH: usize = 1024;
pub const STEP_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: i64, len: usize },
    #[error("call depth exceeded {0}")]
    CallDepthExceeded(usize),
    #[error("step budget of {0} exhausted")]
    StepBudgetExceeded(u64),
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("{function} expects {expected} arguments, found {found}")]
    ArgumentCount { function: String, expected: usize, found: usize },
    #[error("argument '{param}' of {function} must be {expected}, found {found}")]
    ArgumentType { function: String, param: String, expected: TypeExpr, found: String },
    #[error("compute function '{0}' needs thread ids")]
    ComputeContextRequired(String),
    #[error("{0} has no value")]
    NoValue(String),
    #[error("shape error: {0}")]
    Shape(String),
}

type Result<T> = std::result::Result<T, RuntimeError>;

/// Thread position bound to `local_id`, `group_id` and `group_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ComputeIds {
    pub local_id: [i32; 3],
    pub group_id: [i32; 3],
    pub group_size: [i32; 3],
}

/// A scope stack of named values, innermost last.
#[derive(Debug, Clone, Default)]
pub struct Env {
    scopes: Vec<Vec<(String, Value)>>,
}

impl Env {
    pub fn new() -> Self {
        Env { scopes: vec![Vec::new()] }
    }

    pub fn bind(&mut self, name: impl Into<String>, value: Value) {
        if self.scopes.is_empty() {
            self.scopes.push(Vec::new());
        }
        self.scopes.last_mut().expect("non-empty").push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.scopes.iter().rev().flat_map(|s| s.iter().rev()).find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn get_mut(&mut self, name: &str) -> Option<&mut Value> {
        self.scopes.iter_mut().rev().flat_map(|s| s.iter_mut().rev()).find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn push(&mut self) {
        self.scopes.push(Vec::new());
    }

    fn pop(&mut self) {
        self.scopes.pop();
    }
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Option<Value>),
}

enum Step {
    Member(String),
    Index(i64),
    Swizzle(Vec<usize>),
}

/// Evaluates functions of one module.
pub struct Interpreter<'m> {
    module: &'m ShaderModule,
    globals: Env,
    frames: Vec<Env>,
    compute: Option<ComputeIds>,
    uniforms: BTreeMap<String, Value>,
    steps: u64,
    initialized: bool,
}

impl<'m> Interpreter<'m> {
    pub fn new(module: &'m ShaderModule) -> Self {
        Interpreter {
            module,
            globals: Env::new(),
            frames: Vec::new(),
            compute: None,
            uniforms: BTreeMap::new(),
            steps: 0,
            initialized: false,
        }
    }

    /// Binds thread ids, which also allows calling compute functions.
    pub fn with_compute(mut self, ids: ComputeIds) -> Self {
        self.compute = Some(ids);
        self
    }

    /// Supplies a uniform; unsupplied uniforms read as zero.
    pub fn with_uniform(mut self, name: impl Into<String>, value: Value) -> Self {
        self.uniforms.insert(name.into(), value);
        self
    }

    fn init_globals(&mut self) -> Result<()> {
        if self.initialized {
            return Ok(());
        }
        self.initialized = true;
        for g in &self.module.globals {
            let value = match (&g.init, g.qualifier) {
                (_, GlobalQualifier::Uniform) if self.uniforms.contains_key(&g.name) => self.uniforms[&g.name].clone(),
                (Some(e), _) => self.eval(e)?.coerce(&g.ty),
                (None, _) => self.zero(&g.ty, &g.name)?,
            };
            self.globals.bind(g.name.clone(), value);
        }
        Ok(())
    }

    fn zero(&self, ty: &TypeExpr, what: &str) -> Result<Value> {
        Value::zero(ty, self.module).ok_or_else(|| RuntimeError::NoValue(what.to_string()))
    }

    /// Calls `name` and returns its result (`None` for void functions).
    pub fn call(&mut self, name: &str, args: &[Value]) -> Result<Option<Value>> {
        let mut args = args.to_vec();
        self.call_mut(name, &mut args)
    }

    /// Like `call`, but writes the final parameter values back into `args`
    /// so kernels that fill arrays can be observed.
    pub fn call_mut(&mut self, name: &str, args: &mut [Value]) -> Result<Option<Value>> {
        self.init_globals()?;
        self.steps = 0;
        let f = self.module.find_function(name).ok_or_else(|| RuntimeError::UnknownFunction(name.to_string()))?;
        if f.is_kernel() && self.compute.is_none() {
            return Err(RuntimeError::ComputeContextRequired(name.to_string()));
        }
        let (result, finals) = self.invoke(f, args.to_vec())?;
        for (slot, v) in args.iter_mut().zip(finals) {
            *slot = v;
        }
        Ok(result)
    }

    fn invoke(&mut self, f: &'m FunctionDecl, args: Vec<Value>) -> Result<(Option<Value>, Vec<Value>)> {
        if args.len() != f.params.len() {
            return Err(RuntimeError::ArgumentCount {
                function: f.name.clone(),
                expected: f.params.len(),
                found: args.len(),
            });
        }
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(RuntimeError::CallDepthExceeded(MAX_CALL_DEPTH));
        }
        let mut env = Env::new();
        for (p, a) in f.params.iter().zip(args) {
            let a = a.coerce(&p.ty);
            if !a.conforms(&p.ty, self.module) {
                return Err(RuntimeError::ArgumentType {
                    function: f.name.clone(),
                    param: p.name.clone(),
                    expected: p.ty.clone(),
                    found: a.kind(),
                });
            }
            env.bind(p.name.clone(), a);
        }
        self.frames.push(env);
        let flow = stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.block(&f.body, false));
        let env = self.frames.pop().expect("pushed above");
        let finals = f.params.iter().map(|p| env.get(&p.name).cloned().expect("bound")).collect();
        let result = match flow? {
            Flow::Return(Some(v)) => Some(v.coerce(&f.return_type)),
            _ if f.return_type.is_void() => None,
            _ => return Err(RuntimeError::NoValue(format!("result of {}", f.name))),
        };
        Ok((result, finals))
    }

    fn tick(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > STEP_BUDGET {
            return Err(RuntimeError::StepBudgetExceeded(STEP_BUDGET));
        }
        Ok(())
    }

    fn env(&mut self) -> &mut Env {
        self.frames.last_mut().unwrap_or(&mut self.globals)
    }

    fn lookup(&self, name: &str) -> Result<&Value> {
        self.frames
            .last()
            .and_then(|e| e.get(name))
            .or_else(|| self.globals.get(name))
            .ok_or_else(|| RuntimeError::UnboundVariable(name.to_string()))
    }

    fn lookup_mut(&mut self, name: &str) -> Result<&mut Value> {
        if self.frames.last().is_some_and(|e| e.get(name).is_some()) {
            return Ok(self.frames.last_mut().and_then(|e| e.get_mut(name)).expect("checked"));
        }
        self.globals.get_mut(name).ok_or_else(|| RuntimeError::UnboundVariable(name.to_string()))
    }

    fn block(&mut self, stmts: &[Stmt], scoped: bool) -> Result<Flow> {
        if scoped {
            self.env().push();
        }
        let mut flow = Flow::Normal;
        for s in stmts {
            flow = self.stmt(s)?;
            if !matches!(flow, Flow::Normal) {
                break;
            }
        }
        if scoped {
            self.env().pop();
        }
        Ok(flow)
    }

    fn condition(&mut self, e: &Expr) -> Result<bool> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            other => Err(RuntimeError::Shape(format!("condition is {}", other.kind()))),
        }
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow> {
        self.tick()?;
        match &s.kind {
            StmtKind::VarDecl { name, ty, init } => {
                let v = match init {
                    Some(e) => self.eval(e)?.coerce(ty),
                    None => self.zero(ty, name)?,
                };
                self.env().bind(name.clone(), v);
            }
            StmtKind::Assign { target, op, value } => {
                let mut v = self.eval(value)?;
                if let Some(bin) = op.binary() {
                    let current = self.eval(target)?;
                    v = binary(bin, current, v)?;
                }
                if let Some(t) = &target.ty {
                    v = v.coerce(t);
                }
                self.store(target, v)?;
            }
            StmtKind::If { cond, then, otherwise } => {
                if self.condition(cond)? {
                    return self.block(then, true);
                } else if let Some(o) = otherwise {
                    return self.block(o, true);
                }
            }
            StmtKind::While { cond, body } => {
                while self.condition(cond)? {
                    self.tick()?;
                    match self.block(body, true)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::For { init, cond, step, body } => {
                self.env().push();
                let flow = self.for_loop(init.as_deref(), cond.as_ref(), step.as_deref(), body);
                self.env().pop();
                if let Flow::Return(v) = flow? {
                    return Ok(Flow::Return(v));
                }
            }
            StmtKind::Return(e) => {
                let v = e.as_ref().map(|e| self.eval(e)).transpose()?;
                return Ok(Flow::Return(v));
            }
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Expr(e) => {
                self.eval_for_effect(e)?;
            }
            StmtKind::Block(b) => return self.block(b, true),
        }
        Ok(Flow::Normal)
    }

    fn for_loop(
        &mut self,
        init: Option<&Stmt>,
        cond: Option<&Expr>,
        step: Option<&Stmt>,
        body: &[Stmt],
    ) -> Result<Flow> {
        if let Some(s) = init {
            self.stmt(s)?;
        }
        loop {
            if let Some(c) = cond {
                if !self.condition(c)? {
                    break;
                }
            }
            self.tick()?;
            match self.block(body, true)? {
                Flow::Break => break,
                Flow::Return(v) => return Ok(Flow::Return(v)),
                Flow::Normal | Flow::Continue => {}
            }
            if let Some(s) = step {
                self.stmt(s)?;
            }
        }
        Ok(Flow::Normal)
    }

    /// Evaluates an expression statement; void calls are allowed here.
    fn eval_for_effect(&mut self, e: &Expr) -> Result<()> {
        if let ExprKind::Call { callee, args } = &e.kind {
            if let Some(f) = self.module.find_function(callee) {
                let args = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>>>()?;
                self.tick()?;
                self.invoke(f, args)?;
                return Ok(());
            }
        }
        self.eval(e).map(drop)
    }

    /// Resolves an lvalue to its root variable and access path.
    fn place(&mut self, target: &Expr) -> Result<(String, Vec<Step>)> {
        let mut steps = Vec::new();
        let mut e = target;
        loop {
            match &e.kind {
                ExprKind::Var(n) => {
                    steps.reverse();
                    return Ok((n.clone(), steps));
                }
                ExprKind::Member { base, member } => {
                    steps.push(Step::Member(member.clone()));
                    e = base;
                }
                ExprKind::Swizzle { base, components } => {
                    steps.push(Step::Swizzle(swizzle(components)?));
                    e = base;
                }
                ExprKind::MemberOrSwizzle { base, name } => {
                    let is_vector = matches!(self.eval(base)?, Value::Vector(_));
                    steps.push(if is_vector { Step::Swizzle(swizzle(name)?) } else { Step::Member(name.clone()) });
                    e = base;
                }
                ExprKind::Index { base, index } => {
                    let i = match self.eval(index)? {
                        Value::Int(i) => i as i64,
                        other => return Err(RuntimeError::Shape(format!("index is {}", other.kind()))),
                    };
                    steps.push(Step::Index(i));
                    e = base;
                }
                _ => return Err(RuntimeError::Shape("assignment to a non-lvalue".into())),
            }
        }
    }

    fn store(&mut self, target: &Expr, value: Value) -> Result<()> {
        let (root, steps) = self.place(target)?;
        let mut slot = self.lookup_mut(&root)?;
        let Some((last, path)) = steps.split_last() else {
            *slot = value;
            return Ok(());
        };
        for s in path {
            slot = step_mut(slot, s)?;
        }
        match last {
            Step::Swizzle(idx) => {
                let Value::Vector(v) = slot else { return Err(RuntimeError::Shape("swizzle of a non-vector".into())) };
                let parts = match &value {
                    Value::Vector(c) => c.clone(),
                    other => vec![other.as_f64().ok_or_else(|| RuntimeError::Shape("swizzle store".into()))?],
                };
                for (i, x) in idx.iter().zip(parts) {
                    v[*i] = x;
                }
            }
            Step::Index(i) if matches!(slot, Value::Vector(_)) => {
                let Value::Vector(v) = slot else { unreachable!() };
                let len = v.len();
                let x = value.as_f64().ok_or_else(|| RuntimeError::Shape("vector element store".into()))?;
                *v.get_mut(*i as usize)
                    .filter(|_| *i >= 0)
                    .ok_or(RuntimeError::IndexOutOfBounds { index: *i, len })? = x;
            }
            Step::Index(i) if matches!(slot, Value::Matrix(_)) => {
                let Value::Matrix(m) = slot else { unreachable!() };
                let len = m.len();
                let Value::Vector(col) = value else { return Err(RuntimeError::Shape("matrix column store".into())) };
                *m.get_mut(*i as usize)
                    .filter(|_| *i >= 0)
                    .ok_or(RuntimeError::IndexOutOfBounds { index: *i, len })? = col;
            }
            s => *step_mut(slot, s)? = value,
        }
        Ok(())
    }

    fn intrinsic(&self, name: &str, args: &[Expr]) -> Result<Value> {
        let ids = self.compute.ok_or_else(|| RuntimeError::ComputeContextRequired(name.to_string()))?;
        let axis = match args.first().map(|a| &a.kind) {
            Some(ExprKind::IntLit(a @ 0..=2)) => *a as usize,
            _ => return Err(RuntimeError::Shape(format!("{name} needs a literal axis 0..2"))),
        };
        Ok(Value::Int(match name {
            "local_id" => ids.local_id[axis],
            "group_id" => ids.group_id[axis],
            _ => ids.group_size[axis],
        }))
    }

    /// Evaluates one expression in the current scope.
    pub fn eval(&mut self, e: &Expr) -> Result<Value> {
        let v = self.eval_inner(e)?;
        match &e.ty {
            Some(t) if !t.is_void() => {
                let v = v.coerce(t);
                if !v.conforms(t, self.module) {
                    return Err(RuntimeError::Shape(format!("{} where {t} was expected", v.kind())));
                }
                Ok(v)
            }
            _ => Ok(v),
        }
    }

    fn eval_inner(&mut self, e: &Expr) -> Result<Value> {
        Ok(match &e.kind {
            ExprKind::IntLit(v) => Value::Int(*v as i32),
            ExprKind::FloatLit(v) => Value::Float(*v),
            ExprKind::BoolLit(b) => Value::Bool(*b),
            ExprKind::Var(n) => self.lookup(n)?.clone(),
            ExprKind::Binary { op: BinaryOp::And, lhs, rhs } => {
                Value::Bool(self.condition(lhs)? && self.condition(rhs)?)
            }
            ExprKind::Binary { op: BinaryOp::Or, lhs, rhs } => {
                Value::Bool(self.condition(lhs)? || self.condition(rhs)?)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                binary(*op, a, b)?
            }
            ExprKind::Unary { op, operand } => match (op, self.eval(operand)?) {
                (UnaryOp::Not, Value::Bool(b)) => Value::Bool(!b),
                (UnaryOp::Neg, Value::Int(i)) => Value::Int(i.wrapping_neg()),
                (UnaryOp::Neg, Value::Float(f)) => Value::Float(-f),
                (UnaryOp::Neg, Value::Vector(v)) => Value::Vector(v.iter().map(|x| -x).collect()),
                (UnaryOp::Neg, Value::Matrix(m)) => {
                    Value::Matrix(m.iter().map(|c| c.iter().map(|x| -x).collect()).collect())
                }
                (op, v) => return Err(RuntimeError::Shape(format!("'{}' applied to {}", op.symbol(), v.kind()))),
            },
            ExprKind::Call { callee, args } => {
                if let Some(f) = self.module.find_function(callee) {
                    let args = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>>>()?;
                    self.tick()?;
                    return self.invoke(f, args)?.0.ok_or_else(|| RuntimeError::NoValue(format!("result of {callee}")));
                }
                if is_compute_intrinsic(callee) {
                    return self.intrinsic(callee, args);
                }
                if lookup_builtin(callee).is_none() {
                    if self.module.find_struct(callee).is_some() {
                        return self.construct(&TypeExpr::named(callee.clone()), args);
                    }
                    return Err(RuntimeError::UnknownFunction(callee.clone()));
                }
                let args = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>>>()?;
                builtins::call(callee, &args)?
            }
            ExprKind::Construct { ty, args } => self.construct(ty, args)?,
            ExprKind::Member { base, member } => member_of(self.eval(base)?, member)?,
            ExprKind::Swizzle { base, components } => swizzle_of(self.eval(base)?, components)?,
            ExprKind::MemberOrSwizzle { base, name } => match self.eval(base)? {
                v @ Value::Vector(_) => swizzle_of(v, name)?,
                v => member_of(v, name)?,
            },
            ExprKind::Index { base, index } => {
                let b = self.eval(base)?;
                let i = match self.eval(index)? {
                    Value::Int(i) => i as i64,
                    other => return Err(RuntimeError::Shape(format!("index is {}", other.kind()))),
                };
                index_of(b, i)?
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                if self.condition(cond)? {
                    self.eval(then)?
                } else {
                    self.eval(otherwise)?
                }
            }
        })
    }

    fn construct(&mut self, ty: &TypeExpr, args: &[Expr]) -> Result<Value> {
        let vals = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>>>()?;
        match ty {
            TypeExpr::Scalar(k) => {
                let [v] = vals.as_slice() else { return Err(RuntimeError::Shape(format!("{ty} takes one argument"))) };
                Ok(match (k, v) {
                    (ScalarKind::Float, v) => Value::Float(scalar(v)?),
                    (ScalarKind::Int, Value::Float(f)) => Value::Int(f.trunc() as i32),
                    (ScalarKind::Int, Value::Bool(b)) => Value::Int(*b as i32),
                    (ScalarKind::Int, v @ Value::Int(_)) => v.clone(),
                    (ScalarKind::Bool, v) => Value::Bool(scalar(v)? != 0.0),
                    _ => return Err(RuntimeError::Shape(format!("cannot construct {ty}"))),
                })
            }
            TypeExpr::Vector(_, n) => {
                let n = *n as usize;
                let mut parts = Vec::with_capacity(n);
                for v in &vals {
                    match v {
                        Value::Vector(c) => parts.extend_from_slice(c),
                        other => parts.push(scalar(other)?),
                    }
                }
                if parts.len() == 1 {
                    parts = vec![parts[0]; n];
                }
                if parts.len() != n {
                    return Err(RuntimeError::Shape(format!("{ty} built from {} components", parts.len())));
                }
                Ok(Value::Vector(parts))
            }
            TypeExpr::Matrix(c, r) => {
                let cols = vals
                    .into_iter()
                    .map(|v| match v {
                        Value::Vector(col) if col.len() == *r as usize => Ok(col),
                        other => Err(RuntimeError::Shape(format!("matrix column is {}", other.kind()))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                if cols.len() != *c as usize {
                    return Err(RuntimeError::Shape(format!("{ty} built from {} columns", cols.len())));
                }
                Ok(Value::Matrix(cols))
            }
            TypeExpr::Named(name) => {
                let s = self.module.find_struct(name).ok_or_else(|| RuntimeError::UnknownFunction(name.clone()))?;
                if s.members.len() != vals.len() {
                    return Err(RuntimeError::Shape(format!("{name} takes {} members", s.members.len())));
                }
                let fields = s.members.iter().zip(vals).map(|(m, v)| (m.name.clone(), v.coerce(&m.ty))).collect();
                Ok(Value::Record { name: name.clone(), fields })
            }
            other => Err(RuntimeError::Shape(format!("cannot construct {other}"))),
        }
    }
}

fn scalar(v: &Value) -> Result<f64> {
    match v {
        Value::Bool(b) => Ok(*b as i32 as f64),
        other => {
            other.as_f64().ok_or_else(|| RuntimeError::Shape(format!("expected a scalar, found {}", other.kind())))
        }
    }
}

fn swizzle(components: &str) -> Result<Vec<usize>> {
    components
        .chars()
        .map(|c| swizzle_index(c).ok_or_else(|| RuntimeError::Shape(format!("bad swizzle '{components}'"))))
        .collect()
}

fn swizzle_of(v: Value, components: &str) -> Result<Value> {
    let Value::Vector(c) = v else { return Err(RuntimeError::Shape(format!("swizzle of {}", v.kind()))) };
    let idx = swizzle(components)?;
    let picked = idx
        .iter()
        .map(|&i| c.get(i).copied().ok_or(RuntimeError::IndexOutOfBounds { index: i as i64, len: c.len() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(if picked.len() == 1 { Value::Float(picked[0]) } else { Value::Vector(picked) })
}

fn member_of(v: Value, member: &str) -> Result<Value> {
    match v {
        Value::Record { fields, .. } => fields
            .into_iter()
            .find(|(n, _)| n == member)
            .map(|(_, v)| v)
            .ok_or_else(|| RuntimeError::Shape(format!("no member '{member}'"))),
        other => Err(RuntimeError::Shape(format!("member '{member}' of {}", other.kind()))),
    }
}

fn checked(i: i64, len: usize) -> Result<usize> {
    if i < 0 || i as usize >= len {
        Err(RuntimeError::IndexOutOfBounds { index: i, len })
    } else {
        Ok(i as usize)
    }
}

fn index_of(v: Value, i: i64) -> Result<Value> {
    match v {
        Value::Array(mut items) => {
            let i = checked(i, items.len())?;
            Ok(items.swap_remove(i))
        }
        Value::Vector(c) => Ok(Value::Float(c[checked(i, c.len())?])),
        Value::Matrix(mut cols) => {
            let i = checked(i, cols.len())?;
            Ok(Value::Vector(cols.swap_remove(i)))
        }
        other => Err(RuntimeError::Shape(format!("indexing {}", other.kind()))),
    }
}

fn step_mut<'v>(v: &'v mut Value, s: &Step) -> Result<&'v mut Value> {
    match (v, s) {
        (Value::Record { fields, .. }, Step::Member(m)) => fields
            .iter_mut()
            .find(|(n, _)| n == m)
            .map(|(_, v)| v)
            .ok_or_else(|| RuntimeError::Shape(format!("no member '{m}'"))),
        (Value::Array(items), Step::Index(i)) => {
            let i = checked(*i, items.len())?;
            Ok(&mut items[i])
        }
        (v, _) => Err(RuntimeError::Shape(format!("cannot assign into part of {}", v.kind()))),
    }
}

fn int_op(op: BinaryOp, a: i32, b: i32) -> Result<Value> {
    Ok(match op {
        BinaryOp::Add => Value::Int(a.wrapping_add(b)),
        BinaryOp::Sub => Value::Int(a.wrapping_sub(b)),
        BinaryOp::Mul => Value::Int(a.wrapping_mul(b)),
        BinaryOp::Div if b == 0 => return Err(RuntimeError::DivisionByZero),
        BinaryOp::Div => Value::Int(a.wrapping_div(b)),
        BinaryOp::Rem if b == 0 => return Err(RuntimeError::DivisionByZero),
        BinaryOp::Rem => Value::Int(a.wrapping_rem(b)),
        _ => compare(op, a as f64, b as f64)?,
    })
}

fn float_op(op: BinaryOp, a: f64, b: f64) -> f64 {
    match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => a / b,
        _ => a % b,
    }
}

fn compare(op: BinaryOp, a: f64, b: f64) -> Result<Value> {
    Ok(Value::Bool(match op {
        BinaryOp::Eq => a == b,
        BinaryOp::Ne => a != b,
        BinaryOp::Lt => a < b,
        BinaryOp::Le => a <= b,
        BinaryOp::Gt => a > b,
        BinaryOp::Ge => a >= b,
        _ => return Err(RuntimeError::Shape(format!("'{}' on scalars", op.symbol()))),
    }))
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let rows = m.first().map_or(0, Vec::len);
    (0..rows).map(|r| m.iter().zip(v).map(|(col, x)| col[r] * x).sum()).collect()
}

fn vec_mat(v: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().map(|col| col.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn componentwise(op: BinaryOp, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() && a.len() != 1 && b.len() != 1 {
        return Err(RuntimeError::Shape(format!("'{}' on sizes {} and {}", op.symbol(), a.len(), b.len())));
    }
    let n = a.len().max(b.len());
    let at = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
    Ok((0..n).map(|i| float_op(op, at(a, i), at(b, i))).collect())
}

pub(crate) fn binary(op: BinaryOp, a: Value, b: Value) -> Result<Value> {
    use Value::*;
    if matches!(op, BinaryOp::Eq | BinaryOp::Ne) && !matches!((&a, &b), (Int(_) | Float(_), Int(_) | Float(_))) {
        let same = match (&a, &b) {
            (Vector(x), Vector(y)) => x == y,
            (Matrix(x), Matrix(y)) => x == y,
            (Bool(x), Bool(y)) => x == y,
            _ => a == b,
        };
        return Ok(Bool(if op == BinaryOp::Eq { same } else { !same }));
    }
    Ok(match (a, b) {
        (Int(x), Int(y)) => int_op(op, x, y)?,
        (x @ (Int(_) | Float(_)), y @ (Int(_) | Float(_))) => {
            let (x, y) = (x.as_f64().expect("numeric"), y.as_f64().expect("numeric"));
            if op.is_comparison() {
                compare(op, x, y)?
            } else {
                Float(float_op(op, x, y))
            }
        }
        (Vector(x), Vector(y)) => Vector(componentwise(op, &x, &y)?),
        (Vector(x), s @ (Int(_) | Float(_))) => Vector(componentwise(op, &x, &[s.as_f64().expect("numeric")])?),
        (s @ (Int(_) | Float(_)), Vector(y)) => Vector(componentwise(op, &[s.as_f64().expect("numeric")], &y)?),
        (Matrix(m), Vector(v)) if op == BinaryOp::Mul => Vector(mat_vec(&m, &v)),
        (Vector(v), Matrix(m)) if op == BinaryOp::Mul => Vector(vec_mat(&v, &m)),
        (Matrix(a), Matrix(b)) if op == BinaryOp::Mul => Matrix(b.iter().map(|col| mat_vec(&a, col)).collect()),
        (Matrix(a), Matrix(b)) => {
            Matrix(a.iter().zip(&b).map(|(x, y)| componentwise(op, x, y)).collect::<Result<Vec<_>>>()?)
        }
        (Matrix(a), s @ (Int(_) | Float(_))) => {
            let s = [s.as_f64().expect("numeric")];
            Matrix(a.iter().map(|c| componentwise(op, c, &s)).collect::<Result<Vec<_>>>()?)
        }
        (s @ (Int(_) | Float(_)), Matrix(a)) => {
            let s = [s.as_f64().expect("numeric")];
            Matrix(a.iter().map(|c| componentwise(op, &s, c)).collect::<Result<Vec<_>>>()?)
        }
        (a, b) => return Err(RuntimeError::Shape(format!("'{}' on {} and {}", op.symbol(), a.kind(), b.kind()))),
    })
}

/// Calls `name` in a typechecked module with fresh globals.
pub fn eval_function(module: &ShaderModule, name: &str, args: &[Value]) -> Result<Value> {
    Interpreter::new(module).call(name, args)?.ok_or_else(|| RuntimeError::NoValue(format!("result of {name}")))
}

/// Evaluates `expr` against the values bound in `env`.
pub fn eval_expression(module: &ShaderModule, env: &Env, expr: &Expr) -> Result<Value> {
    let mut it = Interpreter::new(module);
    it.initialized = true;
    it.frames.push(env.clone());
    it.eval(expr)
}

/// Parses a CrossGL expression such as `vec3(0.0, 0.0, 1.0)` and evaluates it
/// as a constant of type `ty`. Used to read command-line arguments.
/// Arrays are written `[a, b, ...]`, the way they print.
pub fn parse_value(text: &str, ty: &TypeExpr, module: &ShaderModule) -> std::result::Result<Value, String> {
    if let (Some(inner), TypeExpr::Array(element, size)) =
        (text.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')), ty)
    {
        let items = split_top_level(inner)
            .into_iter()
            .map(|item| parse_value(item, element, module))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if size.is_some_and(|n| n as usize != items.len()) {
            return Err(format!("expected {ty}, found {} elements", items.len()));
        }
        return Ok(Value::Array(items));
    }
    let tokens = tokenize(text, "<argument>").map_err(|e| e.message)?;
    let mut p = Parser::new(&tokens, &CrossGlDialect);
    let expr = p.parse_expr().map_err(|e| format!("expected {}, found {}", e.expected, e.found))?;
    if p.peek().kind != TokenKind::Eof {
        return Err(format!("unexpected '{}' after value", p.peek().text));
    }
    let v = eval_expression(module, &Env::new(), &expr).map_err(|e| e.to_string())?.coerce(ty);
    if !v.conforms(ty, module) {
        return Err(format!("expected {ty}, found {}", v.kind()));
    }
    Ok(v)
}

fn split_top_level(text: &str) -> Vec<&str> {
    if text.trim().is_empty() {
        return Vec::new();
    }
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}
