use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::Expr;
use super::normalize::to_ratfunc;
use super::numeric::{eval_rf, VarAssignment};
use super::poly::Atom;
use super::ratfunc::RatFunc;
use super::symbol::Symbol;
use crate::{Error, Result};

/// How a zero test was decided. `Proved*` verdicts are exact consequences of
/// the canonical form; `Numerically*` verdicts come from seeded sampling and
/// apply when transcendental or root atoms block an exact decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroVerdict {
    ProvedZero,
    ProvedNonzero,
    NumericallyZero,
    NumericallyNonzero,
}

impl ZeroVerdict {
    pub fn is_zero(self) -> bool {
        matches!(self, ZeroVerdict::ProvedZero | ZeroVerdict::NumericallyZero)
    }

    pub fn is_exact(self) -> bool {
        matches!(self, ZeroVerdict::ProvedZero | ZeroVerdict::ProvedNonzero)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ZeroConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub box_lo: f64,
    pub box_hi: f64,
}

impl Default for ZeroConfig {
    fn default() -> Self {
        ZeroConfig { samples: 8, seed: 42, tol: 1e-9, box_lo: 0.3, box_hi: 1.7 }
    }
}

pub fn is_zero(e: &Expr) -> Result<ZeroVerdict> {
    is_zero_with(e, &ZeroConfig::default())
}

pub fn is_zero_with(e: &Expr, cfg: &ZeroConfig) -> Result<ZeroVerdict> {
    let rf = to_ratfunc(e)?;
    is_zero_rf(&rf, cfg)
}

pub(crate) fn is_zero_rf(rf: &RatFunc, cfg: &ZeroConfig) -> Result<ZeroVerdict> {
    if rf.is_zero() {
        return Ok(ZeroVerdict::ProvedZero);
    }
    let atoms = rf.atoms();
    if atoms.iter().all(|a| matches!(a, Atom::Var(_))) {
        // A reduced nonzero rational function of plain variables is nonzero.
        return Ok(ZeroVerdict::ProvedNonzero);
    }
    let vars = rf_vars(rf);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let max_attempts = cfg.samples * 10 + 10;
    while accepted < cfg.samples {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Sampling(format!(
                "{accepted}/{} zero-test samples succeeded within {max_attempts} attempts",
                cfg.samples
            )));
        }
        let mut a = VarAssignment::new();
        for &v in &vars {
            let t: f64 = rng.gen();
            a.set_symbol(v, cfg.box_lo + (cfg.box_hi - cfg.box_lo) * t);
        }
        match eval_rf(rf, &a) {
            Ok(out) => {
                if out.value.norm() > cfg.tol * (1.0 + out.scale) {
                    return Ok(ZeroVerdict::NumericallyNonzero);
                }
                accepted += 1;
            }
            Err(Error::Singular(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(ZeroVerdict::NumericallyZero)
}

fn rf_vars(rf: &RatFunc) -> Vec<Symbol> {
    let mut set: BTreeSet<Symbol> = BTreeSet::new();
    for a in rf.atoms() {
        match a {
            Atom::Var(s) => {
                set.insert(s);
            }
            Atom::Exp(e) | Atom::Log(e) | Atom::Root(e) => {
                set.extend(e.vars());
            }
        }
    }
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse_expr;

    fn verdict(src: &str) -> ZeroVerdict {
        is_zero(&parse_expr(src).unwrap()).unwrap()
    }

    #[test]
    fn exact_verdicts() {
        assert_eq!(verdict("(x + y)^(2) - x^(2) - 2*x*y - y^(2)"), ZeroVerdict::ProvedZero);
        assert_eq!(verdict("x + y - x"), ZeroVerdict::ProvedNonzero);
    }

    #[test]
    fn numeric_verdicts() {
        // exp(x)*exp(-x) = 1 holds but involves two unrelated atoms
        assert_eq!(verdict("exp(x)*exp(-x) - 1"), ZeroVerdict::NumericallyZero);
        assert_eq!(verdict("exp(x) - 1 - x"), ZeroVerdict::NumericallyNonzero);
    }

    #[test]
    fn root_identities() {
        assert_eq!(verdict("sqrt(x)*sqrt(x) - x"), ZeroVerdict::ProvedZero);
        // distinct bases do not combine symbolically, sampling decides
        assert_eq!(verdict("sqrt(x)*sqrt(y) - sqrt(x*y)"), ZeroVerdict::NumericallyZero);
    }

    #[test]
    fn determinism() {
        let e = parse_expr("exp(x) - exp(y)").unwrap();
        let a = is_zero(&e).unwrap();
        let b = is_zero(&e).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, ZeroVerdict::NumericallyNonzero);
    }
}
