use std::collections::BTreeSet;
use std::fmt;

/// The two variables the expression language knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            _ => None,
        }
    }

    pub fn other(self) -> Var {
        match self {
            Var::X => Var::Y,
            Var::Y => Var::X,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnaryFn {
    Abs,
    Sqrt,
    Exp,
    Log,
    Sgn,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Abs => "abs",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sgn => "sgn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
        }
    }
}

/// A comparison guarding one piecewise branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

/// Expression tree over at most the two variables `x` and `y`.
///
/// Constants produced by the parser are always non-negative; a leading minus
/// sign becomes a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Unary(UnaryFn, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// First matching condition wins; `otherwise` is mandatory.
    Piecewise {
        branches: Vec<(Condition, Expr)>,
        otherwise: Box<Expr>,
    },
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn unary(f: UnaryFn, a: Expr) -> Expr {
        Expr::Unary(f, Box::new(a))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(*v);
            }
        });
        out
    }

    /// Pre-order traversal over every node, including piecewise conditions.
    pub fn visit<F: FnMut(&Expr)>(&self, f: &mut F) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Unary(_, a) => a.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Piecewise {
                branches,
                otherwise,
            } => {
                for (c, e) in branches {
                    c.lhs.visit(f);
                    c.rhs.visit(f);
                    e.visit(f);
                }
                otherwise.visit(f);
            }
        }
    }

    /// Replace every occurrence of `var` with `replacement`.
    pub fn substitute(&self, var: Var, replacement: &Expr) -> Expr {
        self.map_vars(&|v| {
            if v == var {
                replacement.clone()
            } else {
                Expr::Var(v)
            }
        })
    }

    /// Replace both variables at once.
    pub fn substitute_both(&self, x: &Expr, y: &Expr) -> Expr {
        self.map_vars(&|v| match v {
            Var::X => x.clone(),
            Var::Y => y.clone(),
        })
    }

    /// The expression with `x` and `y` exchanged.
    pub fn swap_vars(&self) -> Expr {
        self.map_vars(&|v| Expr::Var(v.other()))
    }

    fn map_vars(&self, f: &dyn Fn(Var) -> Expr) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => f(*v),
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_vars(f))),
            Expr::Unary(u, a) => Expr::Unary(*u, Box::new(a.map_vars(f))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            Expr::Piecewise {
                branches,
                otherwise,
            } => Expr::Piecewise {
                branches: branches
                    .iter()
                    .map(|(c, e)| {
                        (
                            Condition {
                                lhs: c.lhs.map_vars(f),
                                op: c.op,
                                rhs: c.rhs.map_vars(f),
                            },
                            e.map_vars(f),
                        )
                    })
                    .collect(),
                otherwise: Box::new(otherwise.map_vars(f)),
            },
        }
    }

    /// True when the tree contains a node whose derivative jumps somewhere.
    pub fn has_kink_nodes(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| match e {
            Expr::Unary(UnaryFn::Abs | UnaryFn::Sgn, _)
            | Expr::Binary(BinOp::Min | BinOp::Max, _, _)
            | Expr::Piecewise { .. } => found = true,
            _ => {}
        });
        found
    }

    /// Canonical form used for structural comparisons: operands of commutative
    /// operators are ordered and `abs(a-b)` is written with ordered operands.
    pub fn canonical(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.canonical())),
            Expr::Unary(UnaryFn::Abs, a) => {
                let inner = a.canonical();
                let inner = match inner {
                    Expr::Binary(BinOp::Sub, l, r) => {
                        let (l, r) = order_pair(*l, *r);
                        Expr::Binary(BinOp::Sub, Box::new(l), Box::new(r))
                    }
                    other => other,
                };
                Expr::Unary(UnaryFn::Abs, Box::new(inner))
            }
            Expr::Unary(u, a) => Expr::Unary(*u, Box::new(a.canonical())),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.canonical(), b.canonical());
                match op {
                    BinOp::Add | BinOp::Mul | BinOp::Min | BinOp::Max => {
                        let (a, b) = order_pair(a, b);
                        Expr::Binary(*op, Box::new(a), Box::new(b))
                    }
                    _ => Expr::Binary(*op, Box::new(a), Box::new(b)),
                }
            }
            Expr::Piecewise {
                branches,
                otherwise,
            } => Expr::Piecewise {
                branches: branches
                    .iter()
                    .map(|(c, e)| {
                        (
                            Condition {
                                lhs: c.lhs.canonical(),
                                op: c.op,
                                rhs: c.rhs.canonical(),
                            },
                            e.canonical(),
                        )
                    })
                    .collect(),
                otherwise: Box::new(otherwise.canonical()),
            },
        }
    }
}

fn order_pair(a: Expr, b: Expr) -> (Expr, Expr) {
    if a.to_string() <= b.to_string() {
        (a, b)
    } else {
        (b, a)
    }
}
