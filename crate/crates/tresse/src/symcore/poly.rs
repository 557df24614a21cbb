use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num::rational::Rational64;
use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use super::expr::Expr;
use super::symbol::Symbol;

/// Exponent type for monomials. Exponents stay small; coefficients carry the
/// arbitrary precision.
pub type Exp = Rational64;

/// An indeterminate of the polynomial layer. `Exp`, `Log` and `Root` wrap
/// canonical (already normalized) expressions and are opaque: no functional
/// identities are applied to them.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Var(Symbol),
    Exp(Expr),
    Log(Expr),
    /// Base of a non-integer rational power; the exponent lives in the monomial.
    Root(Expr),
}

impl Atom {
    pub fn to_expr_pow(&self, q: Exp) -> Expr {
        let qq = BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()));
        let base = match self {
            Atom::Var(s) => Expr::var(*s),
            Atom::Exp(a) => Expr::exp(a.clone()),
            Atom::Log(a) => Expr::log(a.clone()),
            Atom::Root(b) => b.clone(),
        };
        Expr::pow(base, qq)
    }
}

/// Product of atom powers, sorted by atom, all exponents nonzero.
/// Inside a `Poly` every exponent is positive.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial(pub Vec<(Atom, Exp)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn var(s: Symbol) -> Monomial {
        Monomial(vec![(Atom::Var(s), Exp::one())])
    }

    pub fn atom(a: Atom, e: Exp) -> Monomial {
        if e.is_zero() {
            Monomial::one()
        } else {
            Monomial(vec![(a, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> Exp {
        self.0.iter().fold(Exp::zero(), |acc, (_, e)| acc + *e)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: Vec<(Atom, Exp)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = self.0[i].1 + other.0[j].1;
                    if !e.is_zero() {
                        out.push((self.0[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Divide by `other`; `None` when any exponent would go negative.
    pub fn try_div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out: Vec<(Atom, Exp)> = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (a, e) in &self.0 {
            let mut e = *e;
            while j < other.0.len() && other.0[j].0 < *a {
                return None; // divisor has an atom we lack
            }
            if j < other.0.len() && other.0[j].0 == *a {
                e -= other.0[j].1;
                j += 1;
            }
            if e.is_negative() {
                return None;
            }
            if !e.is_zero() {
                out.push((a.clone(), e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    pub fn exponent_of(&self, a: &Atom) -> Exp {
        self.0
            .iter()
            .find(|(b, _)| b == a)
            .map(|(_, e)| *e)
            .unwrap_or_else(Exp::zero)
    }

    /// Greatest common divisor (componentwise minimum).
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        let mut j = 0;
        for (a, e) in &self.0 {
            while j < other.0.len() && other.0[j].0 < *a {
                j += 1;
            }
            if j < other.0.len() && other.0[j].0 == *a {
                let m = (*e).min(other.0[j].1);
                if !m.is_zero() {
                    out.push((a.clone(), m));
                }
            }
        }
        Monomial(out)
    }

    /// Split into (positive part, negated negative part); used when exponent
    /// arithmetic transiently produces negative exponents.
    pub fn split_signs(&self) -> (Monomial, Monomial) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (a, e) in &self.0 {
            if e.is_negative() {
                neg.push((a.clone(), -*e));
            } else {
                pos.push((a.clone(), *e));
            }
        }
        (Monomial(pos), Monomial(neg))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic order: total degree first, then earlier atoms with
    /// higher exponents win.
    fn cmp(&self, other: &Self) -> Ordering {
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let mut i = 0;
        loop {
            match (self.0.get(i), other.0.get(i)) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((aa, ae)), Some((ba, be))) => match aa.cmp(ba) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ae.cmp(be) {
                        Ordering::Equal => {
                            i += 1;
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

/// Multivariate polynomial in atoms with exact rational coefficients and
/// positive rational exponents.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: BTreeMap::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert(Monomial::one(), c);
        }
        Poly { terms: t }
    }

    pub fn var(s: Symbol) -> Poly {
        Poly::term(Monomial::var(s), BigRational::one())
    }

    pub fn term(m: Monomial, c: BigRational) -> Poly {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert(m, c);
        }
        Poly { terms: t }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.terms.is_empty() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.is_one() {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn as_monomial(&self) -> Option<(&Monomial, &BigRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let (small, big) = if self.terms.len() <= other.terms.len() { (self, other) } else { (other, self) };
        let mut out = Poly::zero();
        for (m1, c1) in &small.terms {
            for (m2, c2) in &big.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly { terms: self.terms.iter().map(|(mm, c)| (mm.mul(m), c.clone())).collect() }
    }

    pub fn powu(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Positive rational content of the coefficients (0 for the zero poly).
    pub fn content(&self) -> BigRational {
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(&c.numer().abs());
            den_lcm = den_lcm.lcm(c.denom());
        }
        if num_gcd.is_zero() {
            BigRational::zero()
        } else {
            BigRational::new(num_gcd, den_lcm)
        }
    }

    /// Componentwise-minimal monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return Monomial::one() };
        let mut acc = first.clone();
        for m in it {
            if acc.is_one() {
                break;
            }
            acc = acc.gcd(m);
        }
        acc
    }

    pub fn div_monomial_exact(&self, m: &Monomial) -> Poly {
        if m.is_one() {
            return self.clone();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(mm, c)| (mm.try_div(m).expect("monomial content division"), c.clone()))
                .collect(),
        }
    }

    /// Exact polynomial division; `None` when the division is not exact.
    pub fn try_div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        if let Some((m, c)) = d.as_monomial() {
            let mut out = Poly::zero();
            for (mm, cc) in &self.terms {
                out.add_term(mm.try_div(m)?, cc / c);
            }
            return Some(out);
        }
        let (dm, dc) = d.leading().unwrap();
        let mut r = self.clone();
        let mut q = Poly::zero();
        // Each step strictly lowers the leading monomial in the graded order
        // and appends one quotient term, so the loop runs exactly terms(q)
        // times on exact divisors and fails fast on the first non-divisible
        // leading term otherwise.
        loop {
            if r.is_zero() {
                return Some(q);
            }
            let (rm, rc) = r.leading().unwrap();
            let qm = rm.try_div(dm)?;
            let qc = rc / dc;
            q.add_term(qm.clone(), qc.clone());
            let piece = d.mul(&Poly::term(qm, qc));
            r = r.sub(&piece);
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut set = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                set.insert(a.clone());
            }
        }
        set
    }

    pub fn degree_in(&self, a: &Atom) -> Exp {
        self.terms
            .keys()
            .map(|m| m.exponent_of(a))
            .max()
            .unwrap_or_else(Exp::zero)
    }

    /// Canonical expression: terms in descending monomial order.
    pub fn to_expr(&self) -> Expr {
        if self.is_zero() {
            return Expr::zero();
        }
        let mut parts = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms.iter().rev() {
            let mut factors = Vec::with_capacity(m.0.len() + 1);
            if !c.is_one() || m.is_one() {
                factors.push(Expr::from_rat(c.clone()));
            }
            for (a, e) in &m.0 {
                factors.push(a.to_expr_pow(*e));
            }
            parts.push(Expr::prod(factors));
        }
        Expr::sum(parts)
    }

    /// True when every exponent of every term is a (positive) integer.
    pub fn all_integer_exponents(&self) -> bool {
        self.terms
            .keys()
            .all(|m| m.0.iter().all(|(_, e)| e.is_integer()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::Symbol;

    fn x() -> Atom {
        Atom::Var(Symbol::intern("x"))
    }
    fn y() -> Atom {
        Atom::Var(Symbol::intern("y"))
    }

    fn p_xy() -> Poly {
        // x^2 + 2xy
        let mut p = Poly::zero();
        p.add_term(Monomial(vec![(x(), 2.into())]), BigRational::one());
        p.add_term(
            Monomial(vec![(x(), 1.into()), (y(), 1.into())]),
            BigRational::from_integer(2.into()),
        );
        p
    }

    #[test]
    fn mul_and_leading() {
        let p = p_xy();
        let q = p.mul(&p);
        // (x^2 + 2xy)^2 = x^4 + 4x^3y + 4x^2y^2
        assert_eq!(q.terms.len(), 3);
        let (lm, lc) = q.leading().unwrap();
        assert_eq!(lm.exponent_of(&x()), Exp::from(4));
        assert!(lc.is_one());
    }

    #[test]
    fn exact_division_round_trips() {
        let p = p_xy();
        let q = p.mul(&p);
        let d = q.try_div_exact(&p).unwrap();
        assert_eq!(d, p);
        let mut r = q.clone();
        r.add_term(Monomial::one(), BigRational::one());
        assert!(r.try_div_exact(&p).is_none());
    }

    #[test]
    fn monomial_content_extraction() {
        let p = p_xy();
        let mc = p.monomial_content();
        assert_eq!(mc.exponent_of(&x()), Exp::from(1));
        assert_eq!(mc.exponent_of(&y()), Exp::from(0));
    }

    #[test]
    fn fractional_exponents_combine() {
        let half = Exp::new(1, 2);
        let m = Monomial(vec![(x(), half)]);
        let sq = m.mul(&m);
        assert_eq!(sq.exponent_of(&x()), Exp::from(1));
    }
}
