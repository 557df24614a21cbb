use std::collections::HashMap;

use num::complex::Complex64;
use num::ToPrimitive;

use super::expr::{Expr, Node};
use super::poly::{Atom, Poly};
use super::ratfunc::RatFunc;
use super::symbol::Symbol;
use crate::{Error, Result};

pub type C64 = Complex64;

/// Values for free variables during numeric evaluation.
#[derive(Clone, Debug, Default)]
pub struct VarAssignment {
    map: HashMap<Symbol, C64>,
}

impl VarAssignment {
    pub fn new() -> VarAssignment {
        VarAssignment::default()
    }

    pub fn set(&mut self, name: &str, v: impl Into<C64>) -> &mut Self {
        self.map.insert(Symbol::intern(name), v.into());
        self
    }

    pub fn set_symbol(&mut self, s: Symbol, v: impl Into<C64>) -> &mut Self {
        self.map.insert(s, v.into());
        self
    }

    pub fn get(&self, s: Symbol) -> Option<C64> {
        self.map.get(&s).copied()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.map.keys().copied()
    }
}

/// Result of a numeric evaluation. `scale` is the largest intermediate
/// magnitude seen, the right yardstick for relative zero tests.
#[derive(Clone, Copy, Debug)]
pub struct EvalOutcome {
    pub value: C64,
    pub scale: f64,
}

/// Evaluate over the complex numbers with principal branches for fractional
/// powers and logarithms.
pub fn eval_num(e: &Expr, a: &VarAssignment) -> Result<EvalOutcome> {
    let mut scale = 0.0f64;
    let v = eval_node(e, a, &mut scale)?;
    finite(v)?;
    Ok(EvalOutcome { value: v, scale })
}

fn track(v: C64, scale: &mut f64) -> C64 {
    let m = v.norm();
    if m > *scale {
        *scale = m;
    }
    v
}

fn finite(v: C64) -> Result<()> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Singular("evaluation produced a nonfinite value".into()))
    }
}

fn eval_node(e: &Expr, a: &VarAssignment, scale: &mut f64) -> Result<C64> {
    let v = match e.node() {
        Node::Rat(r) => C64::new(
            r.to_f64()
                .ok_or_else(|| Error::Singular("rational constant out of f64 range".into()))?,
            0.0,
        ),
        Node::Var(s) => a
            .get(*s)
            .ok_or_else(|| Error::UnassignedVar(s.name()))?,
        Node::Sum(items) => {
            let mut acc = C64::new(0.0, 0.0);
            for it in items {
                acc += eval_node(it, a, scale)?;
            }
            acc
        }
        Node::Prod(items) => {
            let mut acc = C64::new(1.0, 0.0);
            for it in items {
                acc *= eval_node(it, a, scale)?;
            }
            acc
        }
        Node::Pow(b, q) => {
            let base = eval_node(b, a, scale)?;
            let qe = q
                .to_f64()
                .ok_or_else(|| Error::Singular("exponent out of f64 range".into()))?;
            pow_principal(base, qe)?
        }
        Node::Exp(arg) => eval_node(arg, a, scale)?.exp(),
        Node::Log(arg) => {
            let z = eval_node(arg, a, scale)?;
            if z.norm() == 0.0 {
                return Err(Error::Singular("log of zero".into()));
            }
            z.ln()
        }
    };
    finite(v)?;
    Ok(track(v, scale))
}

fn pow_principal(base: C64, q: f64) -> Result<C64> {
    if base.norm() == 0.0 {
        if q > 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        return Err(Error::Singular("zero raised to a nonpositive power".into()));
    }
    // Integer exponents stay exact for negative reals; powf would take the
    // principal branch detour through the cut.
    if q.fract() == 0.0 && q.abs() <= 64.0 {
        return Ok(base.powi(q as i32));
    }
    Ok(base.powf(q))
}

pub(crate) fn eval_poly(p: &Poly, a: &VarAssignment, scale: &mut f64) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (m, c) in &p.terms {
        let mut term = C64::new(
            c.to_f64()
                .ok_or_else(|| Error::Singular("coefficient out of f64 range".into()))?,
            0.0,
        );
        for (atom, e) in &m.0 {
            let base = eval_atom(atom, a, scale)?;
            let q = e
                .to_f64()
                .ok_or_else(|| Error::Singular("exponent out of f64 range".into()))?;
            term *= pow_principal(base, q)?;
        }
        finite(term)?;
        acc += track(term, scale);
    }
    finite(acc)?;
    Ok(track(acc, scale))
}

fn eval_atom(atom: &Atom, a: &VarAssignment, scale: &mut f64) -> Result<C64> {
    let v = match atom {
        Atom::Var(s) => a
            .get(*s)
            .ok_or_else(|| Error::UnassignedVar(s.name()))?,
        Atom::Exp(arg) => eval_node(arg, a, scale)?.exp(),
        Atom::Log(arg) => {
            let z = eval_node(arg, a, scale)?;
            if z.norm() == 0.0 {
                return Err(Error::Singular("log of zero".into()));
            }
            z.ln()
        }
        Atom::Root(b) => eval_node(b, a, scale)?,
    };
    finite(v)?;
    Ok(track(v, scale))
}

pub(crate) fn eval_rf(rf: &RatFunc, a: &VarAssignment) -> Result<EvalOutcome> {
    let mut scale = 0.0f64;
    let n = eval_poly(&rf.num, a, &mut scale)?;
    let d = eval_poly(&rf.den, a, &mut scale)?;
    if d.norm() == 0.0 {
        return Err(Error::Singular("denominator vanished at the sample point".into()));
    }
    let v = n / d;
    finite(v)?;
    Ok(EvalOutcome { value: track(v, &mut scale), scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{normalize, parse_expr};

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12 * (1.0 + a.norm() + b.norm())
    }

    #[test]
    fn arithmetic_and_functions() {
        let e = parse_expr("exp(x) + x^(2) - ln(x)").unwrap();
        let mut a = VarAssignment::new();
        a.set("x", 2.0);
        let got = eval_num(&e, &a).unwrap();
        let want = 2.0f64.exp() + 4.0 - 2.0f64.ln();
        assert!(close(got.value, C64::new(want, 0.0)));
        assert!(got.scale >= want.abs());
    }

    #[test]
    fn principal_branch_sqrt_of_negative() {
        let e = parse_expr("sqrt(x)").unwrap();
        let mut a = VarAssignment::new();
        a.set("x", -4.0);
        let got = eval_num(&e, &a).unwrap().value;
        assert!(close(got, C64::new(0.0, 2.0)));
    }

    #[test]
    fn canonical_and_raw_agree() {
        let e = parse_expr("(x + y)^(3) / (x - y) + exp(x)*sqrt(y)").unwrap();
        let n = normalize(&e).unwrap();
        let mut a = VarAssignment::new();
        a.set("x", C64::new(1.3, 0.2)).set("y", C64::new(0.4, -0.1));
        let v1 = eval_num(&e, &a).unwrap().value;
        let v2 = eval_num(&n, &a).unwrap().value;
        assert!(close(v1, v2));
    }

    #[test]
    fn unassigned_variable_is_an_error() {
        let e = parse_expr("x + z").unwrap();
        let mut a = VarAssignment::new();
        a.set("x", 1.0);
        assert!(matches!(eval_num(&e, &a), Err(crate::Error::UnassignedVar(_))));
    }
}
