use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};

use super::expr::Expr;
use super::normalize::to_ratfunc;
use super::poly::{Atom, Exp, Monomial, Poly};
use crate::{Error, Result};

/// Reduced rational function: `num/den` with gcd(num, den) a unit and `den`
/// scaled so its leading coefficient is 1. Reduction is best-effort above a
/// size guard; values stay exact either way.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatFunc {
    pub num: Poly,
    pub den: Poly,
}

/// Operand-size product above which gcd computation falls back to the cheap
/// paths only. Correctness is unaffected; fractions just stay fatter.
const GCD_GUARD: usize = 60_000;

impl RatFunc {
    pub fn zero() -> RatFunc {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> RatFunc {
        RatFunc { num: Poly::one(), den: Poly::one() }
    }

    pub fn constant(c: BigRational) -> RatFunc {
        RatFunc { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn var(s: super::symbol::Symbol) -> RatFunc {
        RatFunc { num: Poly::var(s), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        fix_roots_poly(&p).unwrap_or(RatFunc { num: p, den: Poly::one() })
    }

    /// Normalizing constructor. Expands integer powers of `Root` atoms,
    /// cancels the gcd, and rescales the denominator monic.
    pub fn make(num: Poly, den: Poly) -> Result<RatFunc> {
        Self::make_logged(num, den, None)
    }

    pub fn make_logged(num: Poly, den: Poly, mut log: Option<&mut Vec<Poly>>) -> Result<RatFunc> {
        if den.is_zero() {
            return Err(Error::Singular("division by zero".into()));
        }
        // Root atoms raised to exponents >= 1 are rewritten before reduction.
        if let Some(fixed) = fix_roots_poly(&num) {
            let rest = RatFunc { num: Poly::one(), den };
            return fixed.mul_logged(&rest.fix_den()?, log.as_deref_mut());
        }
        if let Some(fixed) = fix_roots_poly(&den) {
            let num_rf = RatFunc { num, den: Poly::one() };
            return num_rf.div_logged(&fixed, log.as_deref_mut());
        }
        if num.is_zero() {
            return Ok(RatFunc::zero());
        }
        let (mut num, mut den) = (num, den);
        let g = poly_gcd(&num, &den);
        if !g.is_one() {
            let n2 = num.try_div_exact(&g).expect("gcd divides numerator");
            let d2 = den.try_div_exact(&g).expect("gcd divides denominator");
            if let Some(log) = log.as_deref_mut() {
                if g.as_constant().is_none() {
                    log.push(g);
                }
            }
            num = n2;
            den = d2;
        }
        let lc = den.leading().expect("nonzero denominator").1.clone();
        if !lc.is_one() {
            let inv = lc.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        Ok(RatFunc { num, den })
    }

    fn fix_den(self) -> Result<RatFunc> {
        RatFunc::make(self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn add(&self, other: &RatFunc) -> Result<RatFunc> {
        self.add_logged(other, None)
    }

    pub fn add_logged(&self, other: &RatFunc, log: Option<&mut Vec<Poly>>) -> Result<RatFunc> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.den == other.den {
            return RatFunc::make_logged(self.num.add(&other.num), self.den.clone(), log);
        }
        let g = poly_gcd(&self.den, &other.den);
        let (da, db) = if g.is_one() {
            (self.den.clone(), other.den.clone())
        } else {
            (
                self.den.try_div_exact(&g).expect("gcd divides"),
                other.den.try_div_exact(&g).expect("gcd divides"),
            )
        };
        // lcm(d1, d2) = d1 * (d2/g); numerators scale by the complementary parts.
        let num = self.num.mul(&db).add(&other.num.mul(&da));
        let den = self.den.mul(&db);
        RatFunc::make_logged(num, den, log)
    }

    pub fn sub(&self, other: &RatFunc) -> Result<RatFunc> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFunc) -> Result<RatFunc> {
        self.mul_logged(other, None)
    }

    pub fn mul_logged(&self, other: &RatFunc, mut log: Option<&mut Vec<Poly>>) -> Result<RatFunc> {
        if self.is_zero() || other.is_zero() {
            return Ok(RatFunc::zero());
        }
        // Cross-cancel before multiplying to keep intermediates small.
        let g1 = poly_gcd(&self.num, &other.den);
        let g2 = poly_gcd(&other.num, &self.den);
        let (n1, d2) = if g1.is_one() {
            (self.num.clone(), other.den.clone())
        } else {
            if let Some(log) = log.as_deref_mut() {
                if g1.as_constant().is_none() {
                    log.push(g1.clone());
                }
            }
            (
                self.num.try_div_exact(&g1).expect("gcd divides"),
                other.den.try_div_exact(&g1).expect("gcd divides"),
            )
        };
        let (n2, d1) = if g2.is_one() {
            (other.num.clone(), self.den.clone())
        } else {
            if let Some(log) = log.as_deref_mut() {
                if g2.as_constant().is_none() {
                    log.push(g2.clone());
                }
            }
            (
                other.num.try_div_exact(&g2).expect("gcd divides"),
                self.den.try_div_exact(&g2).expect("gcd divides"),
            )
        };
        RatFunc::make_logged(n1.mul(&n2), d1.mul(&d2), log)
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc> {
        self.div_logged(other, None)
    }

    pub fn div_logged(&self, other: &RatFunc, log: Option<&mut Vec<Poly>>) -> Result<RatFunc> {
        if other.is_zero() {
            return Err(Error::Singular("division by zero".into()));
        }
        self.mul_logged(&RatFunc { num: other.den.clone(), den: other.num.clone() }, log)
    }

    pub fn recip(&self) -> Result<RatFunc> {
        if self.is_zero() {
            return Err(Error::Singular("reciprocal of zero".into()));
        }
        RatFunc::make(self.den.clone(), self.num.clone())
    }

    pub fn powi(&self, n: i64) -> Result<RatFunc> {
        if n == 0 {
            return Ok(RatFunc::one());
        }
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut k = n.unsigned_abs() as u32;
        // A reduced fraction stays reduced under powers, but Root atoms may
        // reach integer exponents, so funnel through `make`.
        let mut acc = RatFunc::one();
        let mut b = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&b)?;
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b.clone())?;
            }
        }
        Ok(acc)
    }

    /// Principal-branch rational power. Positive rational content splits off
    /// and folds when it has an exact root; the remaining base becomes a
    /// single `Root` atom so products are never distributed under the power.
    pub fn pow_rational(&self, q: &BigRational) -> Result<RatFunc> {
        if q.is_integer() {
            let n = q.to_integer().to_i64().ok_or_else(|| {
                Error::Other("integer exponent out of range".into())
            })?;
            return self.powi(n);
        }
        if self.is_zero() {
            return if q.is_positive() {
                Ok(RatFunc::zero())
            } else {
                Err(Error::Singular("zero raised to a negative power".into()))
            };
        }
        let qe = big_to_exp(q)?;
        // Split positive rational content: (c*B)^q = c^q * B^q for c > 0.
        let cn = self.num.content();
        let cd = self.den.content();
        let c = cn / cd;
        debug_assert!(c.is_positive());
        let base = self.div(&RatFunc::constant(c.clone()))?;
        let cpow = rat_pow_fold(&c, q)?;
        if base.is_one() {
            return Ok(cpow);
        }
        // Content-free single atom with exponent in (0, 1]: exponents compose
        // soundly on the principal branch, no Root wrapper needed.
        if base.den.is_one() {
            if let Some((m, co)) = base.num.as_monomial() {
                if co.is_one() && m.0.len() == 1 {
                    let (a, e) = &m.0[0];
                    if e.is_positive() && *e <= Exp::one() {
                        let pw = monomial_rf(Monomial::atom(a.clone(), e * qe), BigRational::one())?;
                        return cpow.mul(&pw);
                    }
                }
            }
        }
        let root = Monomial::atom(Atom::Root(base.to_expr()), qe);
        cpow.mul(&monomial_rf(root, BigRational::one())?)
    }

    pub fn to_expr(&self) -> Expr {
        if self.den.is_one() {
            return self.num.to_expr();
        }
        let minus_one = BigRational::from_integer(BigInt::from(-1));
        Expr::prod(vec![self.num.to_expr(), Expr::pow(self.den.to_expr(), minus_one)])
    }

    pub fn atoms(&self) -> std::collections::BTreeSet<Atom> {
        let mut s = self.num.atoms();
        s.extend(self.den.atoms());
        s
    }

    /// Apply a derivation defined by its action on atoms. `d` must return the
    /// derivative of each atom's value.
    pub fn derive(&self, d: &mut dyn FnMut(&Atom) -> Result<RatFunc>) -> Result<RatFunc> {
        if self.den.is_one() {
            return derive_poly(&self.num, d);
        }
        let dn = derive_poly(&self.num, d)?;
        let dd = derive_poly(&self.den, d)?;
        let den_rf = RatFunc { num: self.den.clone(), den: Poly::one() };
        // (n/d)' = n'/d - n*d'/d^2
        let t1 = dn.div(&den_rf)?;
        let t2 = RatFunc { num: self.num.clone(), den: Poly::one() }
            .mul(&dd)?
            .div(&den_rf.mul(&den_rf)?)?;
        t1.sub(&t2)
    }
}

fn monomial_rf(m: Monomial, c: BigRational) -> Result<RatFunc> {
    let (pos, neg) = m.split_signs();
    RatFunc::make(Poly::term(pos, c), Poly::term(neg, BigRational::one()))
}

fn big_to_exp(q: &BigRational) -> Result<Exp> {
    let n = q.numer().to_i64();
    let d = q.denom().to_i64();
    match (n, d) {
        (Some(n), Some(d)) => Ok(Exp::new(n, d)),
        _ => Err(Error::NonRationalExponent(format!("exponent {q} out of range"))),
    }
}

/// c^q for positive rational c: folds exactly when c has an exact |q.denom()|-th
/// root, otherwise keeps a Root atom over the constant.
fn rat_pow_fold(c: &BigRational, q: &BigRational) -> Result<RatFunc> {
    debug_assert!(c.is_positive());
    if c.is_one() {
        return Ok(RatFunc::one());
    }
    let d = q.denom().to_u32().ok_or_else(|| Error::NonRationalExponent("exponent denominator too large".into()))?;
    let rn = c.numer().nth_root(d);
    let rd = c.denom().nth_root(d);
    if &num::pow::pow(rn.clone(), d as usize) == c.numer()
        && &num::pow::pow(rd.clone(), d as usize) == c.denom()
    {
        let root = BigRational::new(rn, rd);
        let n = q.numer().to_i64().ok_or_else(|| Error::NonRationalExponent("exponent too large".into()))?;
        return RatFunc::constant(root).powi(n);
    }
    let qe = big_to_exp(q)?;
    monomial_rf(
        Monomial::atom(Atom::Root(Expr::from_rat(c.clone())), qe),
        BigRational::one(),
    )
}

/// Rewrites Root atoms whose exponent is >= 1 (or integral) by expanding the
/// integer part of the power into the polynomial layer. Returns `None` when
/// the poly is already clean, avoiding rebuilds on the hot path.
fn fix_roots_poly(p: &Poly) -> Option<RatFunc> {
    let needs_fix = p.terms.keys().any(|m| {
        m.0.iter().any(|(a, e)| matches!(a, Atom::Root(_)) && (e.is_integer() || *e > Exp::one()))
    });
    if !needs_fix {
        return None;
    }
    let mut acc = RatFunc::zero();
    for (m, c) in &p.terms {
        let mut clean = Vec::new();
        let mut expand = RatFunc::constant(c.clone());
        for (a, e) in &m.0 {
            if let Atom::Root(b) = a {
                if e.is_integer() || *e > Exp::one() {
                    let whole = e.floor().to_integer();
                    let frac = *e - Exp::from_integer(whole);
                    let base = to_ratfunc(b).expect("root base normalizes");
                    let powed = base.powi(whole).expect("root expansion");
                    expand = expand.mul(&powed).expect("root expansion");
                    if !frac.is_zero() {
                        clean.push((a.clone(), frac));
                    }
                    continue;
                }
            }
            clean.push((a.clone(), *e));
        }
        let rest = RatFunc { num: Poly::term(Monomial(clean), BigRational::one()), den: Poly::one() };
        let term = expand.mul(&rest).expect("root expansion");
        acc = acc.add(&term).expect("root expansion");
    }
    Some(acc)
}

/// Derivative of a polynomial under an atom-level derivation.
pub fn derive_poly(p: &Poly, d: &mut dyn FnMut(&Atom) -> Result<RatFunc>) -> Result<RatFunc> {
    let atoms = p.atoms();
    let mut datoms: Vec<(Atom, RatFunc)> = Vec::with_capacity(atoms.len());
    for a in atoms {
        let da = d(&a)?;
        if !da.is_zero() {
            datoms.push((a, da));
        }
    }
    if datoms.is_empty() {
        return Ok(RatFunc::zero());
    }
    let polynomial_chain = datoms.iter().all(|(_, rf)| rf.den.is_one());
    if polynomial_chain && p.all_integer_exponents() {
        let mut out = Poly::zero();
        for (m, c) in &p.terms {
            for (i, (a, e)) in m.0.iter().enumerate() {
                let da = match datoms.iter().find(|(b, _)| b == a) {
                    Some((_, rf)) => &rf.num,
                    None => continue,
                };
                let mut rest = Vec::with_capacity(m.0.len());
                rest.extend_from_slice(&m.0[..i]);
                let e1 = *e - Exp::one();
                if !e1.is_zero() {
                    rest.push((a.clone(), e1));
                }
                rest.extend_from_slice(&m.0[i + 1..]);
                let coef = c * BigRational::new(BigInt::from(*e.numer()), BigInt::from(*e.denom()));
                let piece = da.mul_monomial(&Monomial(rest)).scale(&coef);
                out = out.add(&piece);
            }
        }
        return Ok(RatFunc::from_poly(out));
    }
    let mut out = RatFunc::zero();
    for (m, c) in &p.terms {
        for (i, (a, e)) in m.0.iter().enumerate() {
            let da = match datoms.iter().find(|(b, _)| b == a) {
                Some((_, rf)) => rf,
                None => continue,
            };
            let mut rest = Vec::with_capacity(m.0.len());
            rest.extend_from_slice(&m.0[..i]);
            let e1 = *e - Exp::one();
            if !e1.is_zero() {
                rest.push((a.clone(), e1));
            }
            rest.extend_from_slice(&m.0[i + 1..]);
            let coef = c * BigRational::new(BigInt::from(*e.numer()), BigInt::from(*e.denom()));
            let piece = monomial_rf(Monomial(rest), coef)?.mul(da)?;
            out = out.add(&piece)?;
        }
    }
    Ok(out)
}

/// Common divisor of `a` and `b`, normalized primitive with positive leading
/// coefficient. The result always divides both inputs exactly but is only
/// best-effort maximal: the specialization probe, the work budget, and the
/// size guard may all settle for a smaller factor. Every caller is written
/// against that contract, so fractions stay exact, merely fatter, whenever a
/// reduction opportunity is missed.
pub(crate) fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return normalize_gcd(b.clone());
    }
    if b.is_zero() {
        return normalize_gcd(a.clone());
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mc = ma.gcd(&mb);
    let pa = a.div_monomial_exact(&ma);
    let pb = b.div_monomial_exact(&mb);
    let core = gcd_stripped(&pa, &pb);
    normalize_gcd(core.mul_monomial(&mc))
}

fn gcd_stripped(pa: &Poly, pb: &Poly) -> Poly {
    if pa.as_constant().is_some() || pb.as_constant().is_some() {
        return Poly::one();
    }
    if pa == pb {
        return pa.clone();
    }
    if pa.terms.len() <= pb.terms.len() {
        if pb.try_div_exact(pa).is_some() {
            return pa.clone();
        }
    } else if pa.try_div_exact(pb).is_some() {
        return pb.clone();
    }
    if pa.terms.len().saturating_mul(pb.terms.len()) > GCD_GUARD {
        return Poly::one();
    }
    let common: Vec<Atom> = pa
        .atoms()
        .intersection(&pb.atoms())
        .cloned()
        .collect();
    if common.is_empty() {
        return Poly::one();
    }
    // Main variable: smallest combined degree keeps the PRS short.
    let main = common
        .iter()
        .min_by_key(|at| {
            let da = pa.degree_in(at);
            let db = pb.degree_in(at);
            (da + db).ceil().to_integer()
        })
        .unwrap()
        .clone();
    let scale = exponent_scale(pa, &main).lcm(&exponent_scale(pb, &main));
    let ua = to_upoly(pa, &main, scale);
    let ub = to_upoly(pb, &main, scale);
    if probe_says_coprime(&ua, &ub) {
        return Poly::one();
    }
    let g = upoly_gcd(ua, ub);
    let cand = from_upoly(&g, &main, scale);
    // A pseudo-remainder sequence whose content strips were themselves only
    // best-effort can leave spurious content on the result, so the candidate
    // counts only once both exact divisions confirm it.
    if pa.try_div_exact(&cand).is_some() && pb.try_div_exact(&cand).is_some() {
        cand
    } else {
        Poly::one()
    }
}

/// Probe value r^s for one atom: `s` clears every exponent denominator the
/// atom carries, so all its powers evaluate exactly over the rationals.
struct ProbeVal {
    r: i64,
    s: i64,
}

fn probe_value(v: &ProbeVal, e: Exp) -> Option<BigRational> {
    let k = e * Exp::from_integer(v.s);
    if !k.is_integer() {
        return None;
    }
    let k = k.to_integer();
    let base = BigRational::from_integer(BigInt::from(v.r));
    let p = num::pow::pow(base, k.unsigned_abs() as usize);
    Some(if k < 0 { p.recip() } else { p })
}

fn eval_poly_probe(
    p: &Poly,
    vals: &std::collections::BTreeMap<Atom, ProbeVal>,
) -> Option<BigRational> {
    let mut acc = BigRational::zero();
    for (m, c) in &p.terms {
        let mut t = c.clone();
        for (a, e) in &m.0 {
            t *= probe_value(vals.get(a)?, *e)?;
        }
        acc += t;
    }
    Some(acc)
}

/// Degree of the gcd of two exactly specialized univariate polynomials.
/// Euclid with monic normalization; inputs are coefficient lists by degree.
fn uni_gcd_degree(mut f: Vec<BigRational>, mut g: Vec<BigRational>) -> usize {
    fn trim(v: &mut Vec<BigRational>) {
        while v.last().map(|c| c.is_zero()).unwrap_or(false) {
            v.pop();
        }
    }
    trim(&mut f);
    trim(&mut g);
    while !g.is_empty() {
        if g.len() == 1 {
            return 0;
        }
        let lc = g.last().unwrap().clone();
        if !lc.is_one() {
            for c in g.iter_mut() {
                *c /= lc.clone();
            }
        }
        while f.len() >= g.len() {
            let q = f.last().unwrap().clone();
            let off = f.len() - g.len();
            for (i, gc) in g.iter().enumerate() {
                f[off + i] -= gc * &q;
            }
            trim(&mut f);
        }
        std::mem::swap(&mut f, &mut g);
    }
    f.len().saturating_sub(1)
}

/// One-point specialization test run before the pseudo-remainder sequence.
/// Setting every non-main atom to an exact value can only enlarge the gcd,
/// so a degree-0 specialized gcd certifies the inputs are coprime in the
/// main variable up to content, and content misses only leave a fraction
/// unreduced, which every caller tolerates. A nonzero rational function
/// stays nonzero whether or not it is reduced, so exactness is unaffected.
fn probe_says_coprime(ua: &[Poly], ub: &[Poly]) -> bool {
    const PRIMES: [i64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let mut atoms: std::collections::BTreeMap<Atom, i64> = std::collections::BTreeMap::new();
    for coef in ua.iter().chain(ub.iter()) {
        for m in coef.terms.keys() {
            for (a, e) in &m.0 {
                let s = atoms.entry(a.clone()).or_insert(1);
                *s = s.lcm(e.denom());
            }
        }
    }
    if atoms.len() > PRIMES.len() {
        return false;
    }
    for attempt in 0..2usize {
        let mut vals = std::collections::BTreeMap::new();
        for (i, (a, s)) in atoms.iter().enumerate() {
            let r = PRIMES[(i + 5 * attempt) % PRIMES.len()];
            vals.insert(a.clone(), ProbeVal { r, s: *s });
        }
        let fa: Option<Vec<BigRational>> =
            ua.iter().map(|c| eval_poly_probe(c, &vals)).collect();
        let fb: Option<Vec<BigRational>> =
            ub.iter().map(|c| eval_poly_probe(c, &vals)).collect();
        let (Some(fa), Some(fb)) = (fa, fb) else {
            return false;
        };
        if fa.iter().all(Zero::is_zero) || fb.iter().all(Zero::is_zero) {
            continue;
        }
        return uni_gcd_degree(fa, fb) == 0;
    }
    false
}

fn exponent_scale(p: &Poly, main: &Atom) -> i64 {
    let mut s: i64 = 1;
    for m in p.terms.keys() {
        let e = m.exponent_of(main);
        s = s.lcm(e.denom());
    }
    s
}

/// Coefficients of `p` viewed as univariate in `main`, exponents scaled by
/// `scale` to integers. Index = scaled degree.
fn to_upoly(p: &Poly, main: &Atom, scale: i64) -> Vec<Poly> {
    let mut deg_max: i64 = 0;
    for m in p.terms.keys() {
        let e = m.exponent_of(main) * Exp::from_integer(scale);
        debug_assert!(e.is_integer());
        deg_max = deg_max.max(e.to_integer());
    }
    let mut out = vec![Poly::zero(); (deg_max + 1) as usize];
    for (m, c) in &p.terms {
        let e = m.exponent_of(main) * Exp::from_integer(scale);
        let rest = Monomial(
            m.0.iter()
                .filter(|(a, _)| a != main)
                .cloned()
                .collect(),
        );
        out[e.to_integer() as usize].add_term(rest, c.clone());
    }
    out
}

fn from_upoly(u: &[Poly], main: &Atom, scale: i64) -> Poly {
    let mut out = Poly::zero();
    for (k, coef) in u.iter().enumerate() {
        if coef.is_zero() {
            continue;
        }
        let e = Exp::new(k as i64, scale);
        let m = Monomial::atom(main.clone(), e);
        out = out.add(&coef.mul_monomial(&m));
    }
    out
}

fn utrim(u: &mut Vec<Poly>) {
    while u.last().map(|c| c.is_zero()).unwrap_or(false) {
        u.pop();
    }
}

fn udeg(u: &[Poly]) -> i64 {
    u.len() as i64 - 1
}

fn upoly_content(u: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for c in u {
        if c.is_zero() {
            continue;
        }
        g = poly_gcd(&g, c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn upoly_divide_content(u: &mut [Poly], g: &Poly) {
    if g.is_one() {
        return;
    }
    for c in u.iter_mut() {
        if !c.is_zero() {
            *c = c.try_div_exact(g).expect("content divides");
        }
    }
}

/// Pseudo-remainder of `f` by `g` (deg f >= deg g >= 0, g nonzero).
fn upoly_prem(f: &[Poly], g: &[Poly]) -> Vec<Poly> {
    let df = udeg(f);
    let dg = udeg(g);
    let lc = g.last().expect("nonzero divisor").clone();
    let mut r: Vec<Poly> = f.to_vec();
    let mut steps = df - dg + 1;
    loop {
        utrim(&mut r);
        let dr = udeg(&r);
        if r.is_empty() || dr < dg {
            // Remaining pseudo-multiplications keep the result a true prem.
            for _ in 0..steps {
                for c in r.iter_mut() {
                    *c = c.mul(&lc);
                }
            }
            return r;
        }
        let shift = (dr - dg) as usize;
        let rl = r.last().unwrap().clone();
        // r <- lc*r - rl * x^shift * g
        for c in r.iter_mut() {
            *c = c.mul(&lc);
        }
        for (k, gc) in g.iter().enumerate() {
            let sub = gc.mul(&rl);
            r[k + shift] = r[k + shift].sub(&sub);
        }
        steps -= 1;
    }
}

/// Cumulative term-product work allowed in one pseudo-remainder sequence.
/// Past the budget the univariate part is abandoned as coprime; the content
/// part is still exact, and an under-reduced fraction stays correct.
const PRS_BUDGET: usize = 400_000;

fn upoly_gcd(mut f: Vec<Poly>, mut g: Vec<Poly>) -> Vec<Poly> {
    utrim(&mut f);
    utrim(&mut g);
    let cf = upoly_content(&f);
    let cg = upoly_content(&g);
    upoly_divide_content(&mut f, &cf);
    upoly_divide_content(&mut g, &cg);
    let cont = poly_gcd(&cf, &cg);
    if udeg(&f) < udeg(&g) {
        std::mem::swap(&mut f, &mut g);
    }
    let mut work: usize = 0;
    while !g.is_empty() {
        if udeg(&g) == 0 {
            // Primitive degree-0 divisor: the univariate part is coprime.
            f = vec![Poly::one()];
            break;
        }
        let tf: usize = f.iter().map(|c| c.terms.len()).sum();
        let tg: usize = g.iter().map(|c| c.terms.len()).sum();
        work = work.saturating_add(tf.saturating_mul(tg));
        if work > PRS_BUDGET {
            f = vec![Poly::one()];
            break;
        }
        let mut r = upoly_prem(&f, &g);
        utrim(&mut r);
        let cr = upoly_content(&r);
        upoly_divide_content(&mut r, &cr);
        f = g;
        g = r;
    }
    if cont.is_one() {
        f
    } else {
        f.iter().map(|c| c.mul(&cont)).collect()
    }
}

/// Primitive, positive leading coefficient.
fn normalize_gcd(p: Poly) -> Poly {
    if p.is_zero() {
        return p;
    }
    let c = p.content();
    let mut out = if c.is_one() { p } else { p.scale(&c.recip()) };
    if out.leading().map(|(_, c)| c.is_negative()).unwrap_or(false) {
        out = out.neg();
    }
    out
}
