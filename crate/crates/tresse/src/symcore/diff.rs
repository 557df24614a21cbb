use super::expr::Expr;
use super::normalize::to_ratfunc;
use super::poly::Atom;
use super::ratfunc::RatFunc;
use super::symbol::Symbol;
use crate::Result;

/// Partial derivative with respect to a plain variable.
pub fn diff(e: &Expr, v: Symbol) -> Result<Expr> {
    Ok(diff_rf(&to_ratfunc(e)?, v)?.to_expr())
}

pub(crate) fn diff_rf(rf: &RatFunc, v: Symbol) -> Result<RatFunc> {
    rf.derive(&mut |a| datom(a, v))
}

fn datom(a: &Atom, v: Symbol) -> Result<RatFunc> {
    match a {
        Atom::Var(s) => Ok(if *s == v { RatFunc::one() } else { RatFunc::zero() }),
        Atom::Exp(arg) => {
            let inner = diff_rf(&to_ratfunc(arg)?, v)?;
            if inner.is_zero() {
                return Ok(RatFunc::zero());
            }
            let atom = to_ratfunc(&Expr::exp(arg.clone()))?;
            atom.mul(&inner)
        }
        Atom::Log(arg) => {
            let arf = to_ratfunc(arg)?;
            diff_rf(&arf, v)?.div(&arf)
        }
        // The chain rule in the monomial layer supplies q * base^(q-1); the
        // atom derivative is the derivative of the base itself.
        Atom::Root(b) => diff_rf(&to_ratfunc(b)?, v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{int, normalize, var, Symbol};

    fn d(e: &Expr, v: &str) -> Expr {
        diff(e, Symbol::intern(v)).unwrap()
    }

    #[test]
    fn polynomial_rule() {
        let (x, y) = (var("x"), var("y"));
        let e = x.clone() * x.clone() * y.clone();
        assert_eq!(d(&e, "x"), normalize(&(int(2) * x * y)).unwrap());
    }

    #[test]
    fn chain_rule_exp() {
        let p = var("p");
        let e = Expr::exp(p.clone() * p.clone());
        let got = d(&e, "p");
        let want = normalize(&(int(2) * p.clone() * Expr::exp(p.clone() * p))).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn chain_rule_log_and_root() {
        let x = var("x");
        let e = Expr::log(x.clone() * x.clone() + int(1));
        let got = d(&e, "x");
        let want = normalize(&((int(2) * x.clone()) / (x.clone() * x.clone() + int(1)))).unwrap();
        assert_eq!(got, want);

        // d/dx sqrt(x) squared equals 1/(4x)
        let s = Expr::sqrt(x.clone());
        let ds = d(&s, "x");
        let sq = normalize(&(ds.clone() * ds)).unwrap();
        let want = normalize(&(int(1) / (int(4) * x))).unwrap();
        assert_eq!(sq, want);
    }
}
