use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num::{BigInt, BigRational, One, Signed, Zero};

use super::symbol::Symbol;

/// Immutable expression tree. Clones are cheap (shared nodes).
///
/// Structural equality and ordering; two structurally equal trees compare equal
/// regardless of how they were built.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

#[derive(PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Rat(BigRational),
    Var(Symbol),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    /// Base raised to an exact rational exponent.
    Pow(Expr, BigRational),
    Exp(Expr),
    Log(Expr),
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn new(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn from_int(n: i64) -> Expr {
        Expr::new(Node::Rat(BigRational::from_integer(n.into())))
    }

    pub fn from_rat(r: BigRational) -> Expr {
        Expr::new(Node::Rat(r))
    }

    pub fn var(s: Symbol) -> Expr {
        Expr::new(Node::Var(s))
    }

    pub fn zero() -> Expr {
        Expr::from_int(0)
    }

    pub fn one() -> Expr {
        Expr::from_int(1)
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self.node(), Node::Rat(r) if r.is_zero())
    }

    pub fn is_one_literal(&self) -> bool {
        matches!(self.node(), Node::Rat(r) if r.is_one())
    }

    pub fn as_rat(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Rat(r) => Some(r),
            _ => None,
        }
    }

    /// n-ary sum with flattening and constant folding. No like-term collection.
    pub fn sum(items: Vec<Expr>) -> Expr {
        let mut c = BigRational::zero();
        let mut out: Vec<Expr> = Vec::with_capacity(items.len());
        for it in items {
            match it.node() {
                Node::Rat(r) => c += r,
                Node::Sum(xs) => {
                    for x in xs {
                        match x.node() {
                            Node::Rat(r) => c += r,
                            _ => out.push(x.clone()),
                        }
                    }
                }
                _ => out.push(it),
            }
        }
        if !c.is_zero() {
            out.push(Expr::from_rat(c));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::new(Node::Sum(out)),
        }
    }

    /// n-ary product with flattening, constant folding and zero annihilation.
    pub fn prod(items: Vec<Expr>) -> Expr {
        let mut c = BigRational::one();
        let mut out: Vec<Expr> = Vec::with_capacity(items.len());
        for it in items {
            match it.node() {
                Node::Rat(r) => c *= r,
                Node::Prod(xs) => {
                    for x in xs {
                        match x.node() {
                            Node::Rat(r) => c *= r,
                            _ => out.push(x.clone()),
                        }
                    }
                }
                _ => out.push(it),
            }
        }
        if c.is_zero() {
            return Expr::zero();
        }
        if out.is_empty() {
            return Expr::from_rat(c);
        }
        if !c.is_one() {
            out.insert(0, Expr::from_rat(c));
        }
        if out.len() == 1 {
            return out.pop().unwrap();
        }
        Expr::new(Node::Prod(out))
    }

    /// Base to an exact rational power. Constant bases with integer exponents
    /// fold exactly; nested powers combine only when sound for every branch
    /// (integer outer exponent).
    pub fn pow(base: Expr, q: BigRational) -> Expr {
        if q.is_zero() {
            return Expr::one();
        }
        if q.is_one() {
            return base;
        }
        if let Node::Rat(r) = base.node() {
            if q.is_integer() && !r.is_zero() {
                return Expr::from_rat(rat_powi(r, &q.to_integer()));
            }
            if r.is_one() {
                return Expr::one();
            }
        }
        if q.is_integer() {
            if let Node::Pow(inner, q2) = base.node() {
                return Expr::pow(inner.clone(), q2 * &q);
            }
        }
        Expr::new(Node::Pow(base, q))
    }

    pub fn powi(base: Expr, n: i64) -> Expr {
        Expr::pow(base, BigRational::from_integer(n.into()))
    }

    pub fn exp(e: Expr) -> Expr {
        if e.is_zero_literal() {
            return Expr::one();
        }
        Expr::new(Node::Exp(e))
    }

    pub fn log(e: Expr) -> Expr {
        if e.is_one_literal() {
            return Expr::zero();
        }
        Expr::new(Node::Log(e))
    }

    pub fn sqrt(e: Expr) -> Expr {
        Expr::pow(e, BigRational::new(BigInt::from(1), BigInt::from(2)))
    }

    /// All variables occurring in the tree.
    pub fn vars(&self) -> BTreeSet<Symbol> {
        let mut set = BTreeSet::new();
        self.collect_vars(&mut set);
        set
    }

    fn collect_vars(&self, set: &mut BTreeSet<Symbol>) {
        match self.node() {
            Node::Rat(_) => {}
            Node::Var(s) => {
                set.insert(*s);
            }
            Node::Sum(xs) | Node::Prod(xs) => {
                for x in xs {
                    x.collect_vars(set);
                }
            }
            Node::Pow(b, _) => b.collect_vars(set),
            Node::Exp(a) | Node::Log(a) => a.collect_vars(set),
        }
    }

    /// Number of nodes in the tree (used for output elision thresholds).
    pub fn node_count(&self) -> usize {
        match self.node() {
            Node::Rat(_) | Node::Var(_) => 1,
            Node::Sum(xs) | Node::Prod(xs) => 1 + xs.iter().map(Expr::node_count).sum::<usize>(),
            Node::Pow(b, _) => 1 + b.node_count(),
            Node::Exp(a) | Node::Log(a) => 1 + a.node_count(),
        }
    }

    /// Substitute variables by expressions (simultaneous substitution).
    pub fn subst(&self, map: &dyn Fn(Symbol) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Rat(_) => self.clone(),
            Node::Var(s) => map(*s).unwrap_or_else(|| self.clone()),
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| x.subst(map)).collect()),
            Node::Prod(xs) => Expr::prod(xs.iter().map(|x| x.subst(map)).collect()),
            Node::Pow(b, q) => Expr::pow(b.subst(map), q.clone()),
            Node::Exp(a) => Expr::exp(a.subst(map)),
            Node::Log(a) => Expr::log(a.subst(map)),
        }
    }

    pub fn subst_var(&self, v: Symbol, by: &Expr) -> Expr {
        self.subst(&|s| if s == v { Some(by.clone()) } else { None })
    }
}

pub(crate) fn rat_powi(r: &BigRational, n: &BigInt) -> BigRational {
    use num::ToPrimitive;
    let e = n.to_i64().expect("integer exponent fits i64");
    if e >= 0 {
        num::pow::pow(r.clone(), e as usize)
    } else {
        num::pow::pow(r.recip(), (-e) as usize)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, -rhs])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::prod(vec![self, rhs])
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::prod(vec![self, Expr::powi(rhs, -1)])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::prod(vec![Expr::from_int(-1), self])
    }
}

// Deterministic infix printing. Sums print leading signs; non-integer
// exponents are parenthesized.

fn needs_parens_in_prod(e: &Expr) -> bool {
    matches!(e.node(), Node::Sum(_))
}

fn needs_parens_in_pow(e: &Expr) -> bool {
    !matches!(e.node(), Node::Var(_) | Node::Exp(_) | Node::Log(_))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Rat(r) => write!(f, "{}", r),
            Node::Var(s) => write!(f, "{}", s.name()),
            Node::Sum(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    let (neg, mag) = split_leading_sign(x);
                    if i == 0 {
                        if neg {
                            write!(f, "-")?;
                        }
                    } else if neg {
                        write!(f, " - ")?;
                    } else {
                        write!(f, " + ")?;
                    }
                    write!(f, "{}", mag)?;
                }
                Ok(())
            }
            Node::Prod(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    if needs_parens_in_prod(x) {
                        write!(f, "({})", x)?;
                    } else {
                        write!(f, "{}", x)?;
                    }
                }
                Ok(())
            }
            Node::Pow(b, q) => {
                if needs_parens_in_pow(b) {
                    write!(f, "({})", b)?;
                } else {
                    write!(f, "{}", b)?;
                }
                // `u^2` would re-tokenize as the jet coordinate, so a power of
                // the bare variable u always parenthesizes its exponent.
                let bare_u = matches!(b.node(), Node::Var(s) if s.name() == "u");
                if q.is_integer() && !q.is_negative() && !bare_u {
                    write!(f, "^{}", q)
                } else {
                    write!(f, "^({})", q)
                }
            }
            Node::Exp(a) => write!(f, "exp({})", a),
            Node::Log(a) => write!(f, "ln({})", a),
        }
    }
}

fn split_leading_sign(e: &Expr) -> (bool, Expr) {
    match e.node() {
        Node::Rat(r) if r.is_negative() => (true, Expr::from_rat(-r.clone())),
        Node::Prod(xs) => {
            if let Node::Rat(r) = xs[0].node() {
                if r.is_negative() {
                    let mut rest = xs.clone();
                    let mag = -r.clone();
                    if mag.is_one() && rest.len() > 1 {
                        rest.remove(0);
                    } else {
                        rest[0] = Expr::from_rat(mag);
                    }
                    return (true, Expr::prod(rest));
                }
            }
            (false, e.clone())
        }
        _ => (false, e.clone()),
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
