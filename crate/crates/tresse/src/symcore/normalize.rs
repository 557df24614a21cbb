use std::collections::BTreeSet;

use super::expr::{Expr, Node};
use super::poly::{Atom, Monomial, Poly};
use super::ratfunc::RatFunc;
use crate::Result;

/// Factors cancelled while normalizing; each is a nonzero assumption the
/// simplified form inherits. Cancellations buried under fractional powers may
/// go unreported.
#[derive(Clone, Debug, Default)]
pub struct NormalizeReport {
    pub cancelled: Vec<Expr>,
}

pub fn to_ratfunc(e: &Expr) -> Result<RatFunc> {
    convert(e, &mut None)
}

pub(crate) fn to_ratfunc_logged(e: &Expr, log: &mut Vec<Poly>) -> Result<RatFunc> {
    let mut opt = Some(log);
    convert_opt(e, &mut opt)
}

fn convert(e: &Expr, log: &mut Option<&mut Vec<Poly>>) -> Result<RatFunc> {
    convert_opt(e, log)
}

fn convert_opt(e: &Expr, log: &mut Option<&mut Vec<Poly>>) -> Result<RatFunc> {
    match e.node() {
        Node::Rat(r) => Ok(RatFunc::constant(r.clone())),
        Node::Var(s) => Ok(RatFunc::var(*s)),
        Node::Sum(items) => {
            let mut acc = RatFunc::zero();
            for it in items {
                let rf = convert_opt(it, log)?;
                acc = acc.add_logged(&rf, log.as_deref_mut())?;
            }
            Ok(acc)
        }
        Node::Prod(items) => {
            let mut acc = RatFunc::one();
            for it in items {
                let rf = convert_opt(it, log)?;
                acc = acc.mul_logged(&rf, log.as_deref_mut())?;
            }
            Ok(acc)
        }
        Node::Pow(base, q) => {
            let b = convert_opt(base, log)?;
            b.pow_rational(q)
        }
        Node::Exp(arg) => {
            let a = convert_opt(arg, log)?;
            let canon = a.to_expr();
            if canon.is_zero_literal() {
                return Ok(RatFunc::one());
            }
            Ok(RatFunc::from_poly(Poly::term(
                Monomial::atom(Atom::Exp(canon), 1.into()),
                num::BigRational::from_integer(1.into()),
            )))
        }
        Node::Log(arg) => {
            let a = convert_opt(arg, log)?;
            let canon = a.to_expr();
            if canon.is_one_literal() {
                return Ok(RatFunc::zero());
            }
            Ok(RatFunc::from_poly(Poly::term(
                Monomial::atom(Atom::Log(canon), 1.into()),
                num::BigRational::from_integer(1.into()),
            )))
        }
    }
}

/// Canonical form: a reduced rational function rendered back as an expression.
/// Errors only on malformed arithmetic (division by an identically zero
/// expression, exponent overflow).
pub fn normalize(e: &Expr) -> Result<Expr> {
    Ok(to_ratfunc(e)?.to_expr())
}

/// Like `normalize`, also reporting the nonzero assumptions introduced by
/// cancellation.
pub fn normalize_full(e: &Expr) -> Result<(Expr, NormalizeReport)> {
    let mut log: Vec<Poly> = Vec::new();
    let rf = to_ratfunc_logged(e, &mut log)?;
    let mut seen = BTreeSet::new();
    let mut cancelled = Vec::new();
    for p in log {
        let ex = p.to_expr();
        if seen.insert(ex.clone()) {
            cancelled.push(ex);
        }
    }
    Ok((rf.to_expr(), NormalizeReport { cancelled }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{int, var};

    #[test]
    fn cancellation_is_reported() {
        let p = var("p");
        // (p^2 - 1)/(p - 1) -> p + 1, losing the point p = 1
        let num = p.clone() * p.clone() - int(1);
        let den = p.clone() - int(1);
        let (out, report) = normalize_full(&(num / den)).unwrap();
        assert_eq!(format!("{out}"), "p + 1");
        assert_eq!(report.cancelled.len(), 1);
        assert_eq!(format!("{}", report.cancelled[0]), "p - 1");
    }

    #[test]
    fn zero_division_errors() {
        let x = var("x");
        let zero = var("x") - var("x");
        assert!(normalize(&(x / zero)).is_err());
    }

    #[test]
    fn canonical_form_is_stable() {
        let (x, y) = (var("x"), var("y"));
        let a = (x.clone() + y.clone()) * (x.clone() - y.clone());
        let b = x.clone() * x.clone() - y.clone() * y.clone();
        assert_eq!(normalize(&a).unwrap(), normalize(&b).unwrap());
    }
}
