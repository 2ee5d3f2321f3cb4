use std::cmp::Ordering;
use std::fmt;

use super::schema::Schema;
use super::value::{AttrType, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Attr(String),
    Const(Value),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Attr(a) => f.write_str(a),
            Operand::Const(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Comparison {
    pub left: Operand,
    pub op: CmpOp,
    pub right: Operand,
}

impl Comparison {
    pub fn new(left: Operand, op: CmpOp, right: Operand) -> Self {
        Comparison { left, op, right }
    }

    pub fn attrs(&self) -> impl Iterator<Item = &str> {
        [&self.left, &self.right].into_iter().filter_map(|o| match o {
            Operand::Attr(a) => Some(a.as_str()),
            Operand::Const(_) => None,
        })
    }

    /// Parse `lhs op rhs` where each side is an attribute reference, an integer literal or
    /// a single-quoted string literal.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lexer = Lexer { src: text, pos: 0 };
        let left = lexer.operand()?;
        let op = lexer.op()?;
        let right = lexer.operand()?;
        lexer.skip_ws();
        if lexer.pos != text.len() {
            return Err(Error::Parse(format!("trailing input in condition {text:?}")));
        }
        Ok(Comparison { left, op, right })
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op.symbol(), self.right)
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl Lexer<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn operand(&mut self) -> Result<Operand> {
        self.skip_ws();
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, '\'')) => {
                let mut out = String::new();
                let mut escaped = false;
                for (i, c) in chars {
                    if escaped {
                        out.push(c);
                        escaped = false;
                    } else if c == '\\' {
                        escaped = true;
                    } else if c == '\'' {
                        self.pos += i + 1;
                        return Ok(Operand::Const(Value::Str(out)));
                    } else {
                        out.push(c);
                    }
                }
                Err(Error::Parse(format!("unterminated string in {:?}", self.src)))
            }
            Some((_, c)) if c.is_ascii_digit() || c == '-' => {
                let len = rest
                    .char_indices()
                    .skip(1)
                    .find(|(_, c)| !c.is_ascii_digit())
                    .map_or(rest.len(), |(i, _)| i);
                let v: i64 = rest[..len]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad integer in {:?}", self.src)))?;
                self.pos += len;
                Ok(Operand::Const(Value::Int(v)))
            }
            Some((_, c)) if c.is_alphabetic() || c == '_' => {
                let len = rest
                    .char_indices()
                    .find(|(_, c)| !(c.is_alphanumeric() || *c == '_' || *c == '.'))
                    .map_or(rest.len(), |(i, _)| i);
                let name = rest[..len].to_owned();
                self.pos += len;
                Ok(Operand::Attr(name))
            }
            _ => Err(Error::Parse(format!("expected operand in condition {:?}", self.src))),
        }
    }

    fn op(&mut self) -> Result<CmpOp> {
        self.skip_ws();
        const OPS: [(&str, CmpOp); 10] = [
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("!=", CmpOp::Ne),
            ("<>", CmpOp::Ne),
            ("≤", CmpOp::Le),
            ("≥", CmpOp::Ge),
            ("≠", CmpOp::Ne),
            ("=", CmpOp::Eq),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ];
        for (sym, op) in OPS {
            if self.rest().starts_with(sym) {
                self.pos += sym.len();
                return Ok(op);
            }
        }
        Err(Error::Parse(format!("expected comparison operator in {:?}", self.src)))
    }
}

/// A conjunction of comparisons. The empty conjunction is `true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Predicate {
    pub conjuncts: Vec<Comparison>,
}

impl Predicate {
    pub fn always() -> Self {
        Predicate::default()
    }

    pub fn new(conjuncts: Vec<Comparison>) -> Self {
        Predicate { conjuncts }
    }

    pub fn parse<S: AsRef<str>>(conjuncts: &[S]) -> Result<Self> {
        conjuncts
            .iter()
            .map(|c| Comparison::parse(c.as_ref()))
            .collect::<Result<Vec<_>>>()
            .map(Predicate::new)
    }

    pub fn is_trivial(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn and(&self, other: &Predicate) -> Predicate {
        let mut conjuncts = self.conjuncts.clone();
        conjuncts.extend(other.conjuncts.iter().cloned());
        Predicate { conjuncts }
    }

    /// Resolve attribute references against `schema` and type-check every comparison.
    pub fn bind(&self, schema: &Schema) -> Result<BoundPredicate> {
        let conjuncts = self
            .conjuncts
            .iter()
            .map(|c| {
                let left = bind_operand(&c.left, schema)?;
                let right = bind_operand(&c.right, schema)?;
                if left.ty(schema) != right.ty(schema) {
                    return Err(Error::Schema(format!(
                        "condition {c} compares {} with {}",
                        left.ty(schema),
                        right.ty(schema)
                    )));
                }
                Ok(BoundComparison { left, op: c.op, right })
            })
            .collect::<Result<_>>()?;
        Ok(BoundPredicate { conjuncts })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return f.write_str("true");
        }
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn bind_operand(op: &Operand, schema: &Schema) -> Result<BoundOperand> {
    match op {
        Operand::Attr(a) => schema.resolve(a).map(BoundOperand::Column),
        Operand::Const(v) => Ok(BoundOperand::Const(v.clone())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum BoundOperand {
    Column(usize),
    Const(Value),
}

impl BoundOperand {
    fn ty(&self, schema: &Schema) -> AttrType {
        match self {
            BoundOperand::Column(i) => schema.attributes()[*i].ty,
            BoundOperand::Const(v) => v.ty(),
        }
    }

    fn get<'a>(&'a self, row: &'a [Value]) -> &'a Value {
        match self {
            BoundOperand::Column(i) => &row[*i],
            BoundOperand::Const(v) => v,
        }
    }

    pub(crate) fn column(&self) -> Option<usize> {
        match self {
            BoundOperand::Column(i) => Some(*i),
            BoundOperand::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BoundComparison {
    pub(crate) left: BoundOperand,
    pub(crate) op: CmpOp,
    pub(crate) right: BoundOperand,
}

impl BoundComparison {
    pub(crate) fn eval(&self, row: &[Value]) -> bool {
        self.op.holds(self.left.get(row).cmp(self.right.get(row)))
    }

    /// Highest column index this comparison reads, if any.
    pub(crate) fn max_column(&self) -> Option<usize> {
        self.left.column().into_iter().chain(self.right.column()).max()
    }
}

/// A predicate with column positions resolved against one schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundPredicate {
    pub(crate) conjuncts: Vec<BoundComparison>,
}

impl BoundPredicate {
    pub fn eval(&self, row: &[Value]) -> bool {
        self.conjuncts.iter().all(|c| c.eval(row))
    }
}
