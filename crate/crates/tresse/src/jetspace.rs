//! Jet-space calculus for second-order scalar ODEs viewed as surfaces
//! u = f(x, y, p) in J^0 R^3 = (x, y, p, u).
//!
//! Jet coordinates are the non-holonomic u^k_{lm} = D̂x^l Dy^m Dp^k(u) with the
//! application order fixed: Dp innermost, D̂x outermost. The only nonvanishing
//! commutator among total derivatives is [Dp, D̂x] = Dy, and every derivative
//! rule below rewrites into this canonical basis eagerly.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num::{BigRational, One, Zero};

use crate::symcore::{
    self, diff, diff_rf, eval_rf, int, is_zero_rf, normalize, to_ratfunc, var, Atom, Expr, Poly,
    RatFunc, Symbol, VarAssignment, ZeroConfig, ZeroVerdict, C64,
};
use crate::{Error, Result};

/// Jet coordinate u^k_{lm}; (0,0,0) is u itself.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct JetVar {
    pub l: u8,
    pub m: u8,
    pub k: u8,
}

/// Printable index range: each of l, m, k is a single decimal digit.
const MAX_INDEX: u8 = 9;

impl JetVar {
    pub fn new(l: u8, m: u8, k: u8) -> Result<JetVar> {
        if l > MAX_INDEX || m > MAX_INDEX || k > MAX_INDEX {
            return Err(Error::JetOrder(format!("index ({l},{m},{k}) above digit range")));
        }
        Ok(JetVar { l, m, k })
    }

    pub fn order(self) -> u32 {
        self.l as u32 + self.m as u32 + self.k as u32
    }

    pub fn symbol(self) -> Symbol {
        Symbol::intern(&symcore::jet_name(self.l, self.m, self.k))
    }

    pub fn expr(self) -> Expr {
        Expr::var(self.symbol())
    }

    /// Inverse of the printing convention.
    pub fn from_symbol(s: Symbol) -> Option<JetVar> {
        let name = s.name();
        let b = name.as_bytes();
        if b.first() != Some(&b'u') {
            return None;
        }
        let mut i = 1;
        let mut k = 0u8;
        if i + 1 < b.len() && b[i] == b'^' && b[i + 1].is_ascii_digit() {
            k = b[i + 1] - b'0';
            i += 2;
        }
        let (mut l, mut m) = (0u8, 0u8);
        if i < b.len() {
            if b.len() != i + 5 || b[i] != b'_' || b[i + 1] != b'{' || b[b.len() - 1] != b'}' {
                return None;
            }
            if !b[i + 2].is_ascii_digit() || !b[i + 3].is_ascii_digit() {
                return None;
            }
            l = b[i + 2] - b'0';
            m = b[i + 3] - b'0';
        }
        Some(JetVar { l, m, k })
    }
}

/// Total-derivative directions. `X` is the composite Dx = D̂x − p·Dy.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Dir {
    XHat,
    Y,
    P,
    X,
}

fn sym_x() -> Symbol {
    Symbol::intern("x")
}
fn sym_y() -> Symbol {
    Symbol::intern("y")
}
fn sym_p() -> Symbol {
    Symbol::intern("p")
}

fn rf_int(n: i64) -> RatFunc {
    RatFunc::constant(BigRational::from_integer(n.into()))
}

fn jet_rf(l: u8, m: u8, k: u8) -> Result<RatFunc> {
    Ok(RatFunc::var(JetVar::new(l, m, k)?.symbol()))
}

fn d_total_var(s: Symbol, dir: Dir) -> Result<RatFunc> {
    debug_assert!(dir != Dir::X);
    if s == sym_x() {
        return Ok(match dir {
            Dir::XHat => RatFunc::one(),
            _ => RatFunc::zero(),
        });
    }
    if s == sym_y() {
        return Ok(match dir {
            Dir::XHat => RatFunc::var(sym_p()),
            Dir::Y => RatFunc::one(),
            _ => RatFunc::zero(),
        });
    }
    if s == sym_p() {
        return Ok(match dir {
            Dir::P => RatFunc::one(),
            _ => RatFunc::zero(),
        });
    }
    if let Some(j) = JetVar::from_symbol(s) {
        return match dir {
            Dir::XHat => jet_rf(j.l + 1, j.m, j.k),
            Dir::Y => jet_rf(j.l, j.m + 1, j.k),
            // Dp D̂x^l = D̂x^l Dp + l·D̂x^{l-1} Dy from [Dp, D̂x] = Dy.
            Dir::P => {
                let main = jet_rf(j.l, j.m, j.k + 1)?;
                if j.l == 0 {
                    Ok(main)
                } else {
                    let corr = jet_rf(j.l - 1, j.m + 1, j.k)?;
                    main.add(&corr.mul(&rf_int(j.l as i64))?)
                }
            }
            Dir::X => unreachable!(),
        };
    }
    // Any other symbol is a parameter for the jet calculus.
    Ok(RatFunc::zero())
}

fn d_total_atom(a: &Atom, dir: Dir) -> Result<RatFunc> {
    match a {
        Atom::Var(s) => d_total_var(*s, dir),
        Atom::Exp(inner) => {
            let di = total_derivative_rf(&to_ratfunc(inner)?, dir)?;
            if di.is_zero() {
                return Ok(RatFunc::zero());
            }
            to_ratfunc(&Expr::exp(inner.clone()))?.mul(&di)
        }
        Atom::Log(inner) => {
            let irf = to_ratfunc(inner)?;
            total_derivative_rf(&irf, dir)?.div(&irf)
        }
        Atom::Root(b) => total_derivative_rf(&to_ratfunc(b)?, dir),
    }
}

pub(crate) fn total_derivative_rf(rf: &RatFunc, dir: Dir) -> Result<RatFunc> {
    if let Dir::X = dir {
        let dxh = total_derivative_rf(rf, Dir::XHat)?;
        let dy = total_derivative_rf(rf, Dir::Y)?;
        return dxh.sub(&RatFunc::var(sym_p()).mul(&dy)?);
    }
    rf.derive(&mut |a| d_total_atom(a, dir))
}

/// Total derivative of a jet expression in the given direction.
pub fn total_derivative(dir: Dir, e: &Expr) -> Result<Expr> {
    Ok(total_derivative_rf(&to_ratfunc(e)?, dir)?.to_expr())
}

/// Largest l+m+k over the jet variables of an expression.
pub fn jet_order(e: &Expr) -> u32 {
    e.vars()
        .into_iter()
        .filter_map(JetVar::from_symbol)
        .map(JetVar::order)
        .max()
        .unwrap_or(0)
}

/// A second-order ODE y'' = f(x, y, y'), stored through its right-hand side.
#[derive(Clone, Debug)]
pub struct Ode {
    f: Expr,
}

impl Ode {
    pub fn new(f: Expr) -> Result<Ode> {
        for v in f.vars() {
            let name = v.name();
            if JetVar::from_symbol(v).is_some() {
                return Err(Error::BadOde(format!(
                    "right-hand side must be a function of x, y, p; found jet variable {name}"
                )));
            }
            if name != "x" && name != "y" && name != "p" {
                return Err(Error::BadOde(format!(
                    "right-hand side must be a function of x, y, p; found {name}"
                )));
            }
        }
        Ok(Ode { f })
    }

    pub fn parse(src: &str) -> Result<Ode> {
        Ode::new(symcore::parse_expr(src)?)
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }
}

/// Point vector field ξ0 = a(x,y) ∂x + b(x,y) ∂y.
#[derive(Clone, Debug)]
pub struct PointField {
    pub a: Expr,
    pub b: Expr,
    phi: Expr,
    ca: Expr,
    cb0: Expr,
    cb1: Expr,
}

fn check_xy(e: &Expr, what: &str) -> Result<()> {
    for v in e.vars() {
        let n = v.name();
        if n != "x" && n != "y" {
            return Err(Error::BadOde(format!("{what} must depend on x, y only; found {n}")));
        }
    }
    Ok(())
}

/// ∂x + p ∂y acting on functions of (x, y, p); p passes through untouched.
fn dx_base(e: &Expr) -> Result<Expr> {
    let ex = diff(e, sym_x())?;
    let ey = diff(e, sym_y())?;
    normalize(&(ex + var("p") * ey))
}

impl PointField {
    pub fn new(a: Expr, b: Expr) -> Result<PointField> {
        check_xy(&a, "field coefficient a")?;
        check_xy(&b, "field coefficient b")?;
        let phi = normalize(&(b.clone() - var("p") * a.clone()))?;
        let ca = dx_base(&phi)?;
        let cb0 = dx_base(&ca)?;
        let phy = diff(&phi, sym_y())?;
        let dxa = dx_base(&a)?;
        let cb1 = normalize(&(phy - int(2) * dxa))?;
        Ok(PointField { a, b, phi, ca, cb0, cb1 })
    }

    /// Generating section φ = b − p·a.
    pub fn phi(&self) -> Expr {
        self.phi.clone()
    }

    /// First prolongation coefficient A = Dx(φ).
    pub fn coef_a(&self) -> Expr {
        self.ca.clone()
    }

    /// B0 = Dx²(φ).
    pub fn coef_b0(&self) -> Expr {
        self.cb0.clone()
    }

    /// B1 = ∂y(φ) − 2 Dx(a).
    pub fn coef_b1(&self) -> Expr {
        self.cb1.clone()
    }

    /// Commutator of the underlying plane fields.
    pub fn bracket(&self, other: &PointField) -> Result<PointField> {
        let apply = |f: &PointField, g: &Expr| -> Result<Expr> {
            let gx = diff(g, sym_x())?;
            let gy = diff(g, sym_y())?;
            normalize(&(f.a.clone() * gx + f.b.clone() * gy))
        };
        let a = normalize(&(apply(self, &other.a)? - apply(other, &self.a)?))?;
        let b = normalize(&(apply(self, &other.b)? - apply(other, &self.b)?))?;
        PointField::new(a, b)
    }
}

/// C_w = a_x + b_y (divergence) and C_q = ∂yφ = b_y − p·a_y.
pub fn cocycles(xi: &PointField) -> Result<(Expr, Expr)> {
    let ax = diff(&xi.a, sym_x())?;
    let by = diff(&xi.b, sym_y())?;
    let ay = diff(&xi.a, sym_y())?;
    let cw = normalize(&(ax + by.clone()))?;
    let cq = normalize(&(by - var("p") * ay))?;
    Ok((cw, cq))
}

/// The pair (D̂x(a), ∂yφ) entering the weight identity of R^{r,s}:
/// ξ̂(ψ) = −(r·D̂x(a) + s·∂yφ)·ψ.
pub fn weight_flow(xi: &PointField) -> Result<(Expr, Expr)> {
    let ax = diff(&xi.a, sym_x())?;
    let ay = diff(&xi.a, sym_y())?;
    let by = diff(&xi.b, sym_y())?;
    let dxa = normalize(&(ax + var("p") * ay.clone()))?;
    let dyphi = normalize(&(by - var("p") * ay))?;
    Ok((dxa, dyphi))
}

/// Prolongation of a point field to jet space, exposing the coefficient on
/// every coordinate. The evolutionary decomposition is used internally:
/// ξ̂ = (a D̂x + φ Dy + A Dp) + evolutionary part generated by
/// f = B0 + B1·u − a(u_{10} − p·u_{01}) − b·u_{01} − A·u¹.
pub struct ProlongedField {
    a_rf: RatFunc,
    b_rf: RatFunc,
    phi_rf: RatFunc,
    aa_rf: RatFunc,
    fgen: RatFunc,
    ev_cache: RefCell<HashMap<(u8, u8, u8), RatFunc>>,
}

impl ProlongedField {
    pub fn new(xi: &PointField) -> Result<ProlongedField> {
        let a_rf = to_ratfunc(&xi.a)?;
        let b_rf = to_ratfunc(&xi.b)?;
        let phi_rf = to_ratfunc(&xi.phi())?;
        let aa_rf = to_ratfunc(&xi.coef_a())?;
        let b0 = to_ratfunc(&xi.coef_b0())?;
        let b1 = to_ratfunc(&xi.coef_b1())?;
        let u = jet_rf(0, 0, 0)?;
        let u10 = jet_rf(1, 0, 0)?;
        let u01 = jet_rf(0, 1, 0)?;
        let u1 = jet_rf(0, 0, 1)?;
        let p = RatFunc::var(sym_p());
        // f = B0 + B1 u − a (u_{10} − p u_{01}) − b u_{01} − A u¹
        let fgen = b0
            .add(&b1.mul(&u)?)?
            .sub(&a_rf.mul(&u10.sub(&p.mul(&u01)?)?)?)?
            .sub(&b_rf.mul(&u01)?)?
            .sub(&aa_rf.mul(&u1)?)?;
        Ok(ProlongedField { a_rf, b_rf, phi_rf, aa_rf, fgen, ev_cache: RefCell::new(HashMap::new()) })
    }

    fn ev(&self, l: u8, m: u8, k: u8) -> Result<RatFunc> {
        if let Some(hit) = self.ev_cache.borrow().get(&(l, m, k)) {
            return Ok(hit.clone());
        }
        let out = if l > 0 {
            total_derivative_rf(&self.ev(l - 1, m, k)?, Dir::XHat)?
        } else if m > 0 {
            total_derivative_rf(&self.ev(l, m - 1, k)?, Dir::Y)?
        } else if k > 0 {
            total_derivative_rf(&self.ev(l, m, k - 1)?, Dir::P)?
        } else {
            self.fgen.clone()
        };
        self.ev_cache.borrow_mut().insert((l, m, k), out.clone());
        Ok(out)
    }

    /// Coefficient of the prolonged field on the coordinate u^k_{lm}.
    pub fn jet_coefficient(&self, j: JetVar) -> Result<RatFunc> {
        let transport = {
            let dxh = self.a_rf.mul(&jet_rf(j.l + 1, j.m, j.k)?)?;
            let dy = self.phi_rf.mul(&jet_rf(j.l, j.m + 1, j.k)?)?;
            let dp = {
                let mut t = jet_rf(j.l, j.m, j.k + 1)?;
                if j.l > 0 {
                    t = t.add(&jet_rf(j.l - 1, j.m + 1, j.k)?.mul(&rf_int(j.l as i64))?)?;
                }
                self.aa_rf.mul(&t)?
            };
            dxh.add(&dy)?.add(&dp)?
        };
        transport.add(&self.ev(j.l, j.m, j.k)?)
    }

    /// Lie derivative of a jet expression along the prolonged field.
    pub fn apply_rf(&self, rf: &RatFunc) -> Result<RatFunc> {
        rf.derive(&mut |a| self.d_atom(a))
    }

    fn d_atom(&self, a: &Atom) -> Result<RatFunc> {
        match a {
            Atom::Var(s) => {
                if *s == sym_x() {
                    return Ok(self.a_rf.clone());
                }
                if *s == sym_y() {
                    return Ok(self.b_rf.clone());
                }
                if *s == sym_p() {
                    return Ok(self.aa_rf.clone());
                }
                if let Some(j) = JetVar::from_symbol(*s) {
                    return self.jet_coefficient(j);
                }
                Ok(RatFunc::zero())
            }
            Atom::Exp(inner) => {
                let di = self.apply_rf(&to_ratfunc(inner)?)?;
                if di.is_zero() {
                    return Ok(RatFunc::zero());
                }
                to_ratfunc(&Expr::exp(inner.clone()))?.mul(&di)
            }
            Atom::Log(inner) => {
                let irf = to_ratfunc(inner)?;
                self.apply_rf(&irf)?.div(&irf)
            }
            Atom::Root(b) => self.apply_rf(&to_ratfunc(b)?),
        }
    }
}

/// Coefficients of the prolonged field on all coordinates up to `order`.
pub struct Prolongation {
    pub dx: Expr,
    pub dy: Expr,
    pub dp: Expr,
    pub jets: BTreeMap<JetVar, Expr>,
}

pub const MAX_PROLONG_ORDER: u8 = 8;

pub fn prolong_field(xi: &PointField, order: u8) -> Result<Prolongation> {
    if order > MAX_PROLONG_ORDER {
        return Err(Error::JetOrder(format!(
            "prolongation order {order} above the configured maximum {MAX_PROLONG_ORDER}"
        )));
    }
    let pf = ProlongedField::new(xi)?;
    let mut jets = BTreeMap::new();
    for total in 0..=order {
        for l in 0..=total {
            for m in 0..=(total - l) {
                let k = total - l - m;
                let j = JetVar::new(l, m, k)?;
                jets.insert(j, pf.jet_coefficient(j)?.to_expr());
            }
        }
    }
    Ok(Prolongation {
        dx: xi.a.clone(),
        dy: xi.b.clone(),
        dp: xi.coef_a(),
        jets,
    })
}

/// Lie derivative of `e` along the prolongation of ξ.
pub fn lie_derivative(xi: &PointField, e: &Expr, order: u8) -> Result<Expr> {
    if jet_order(e) > order as u32 {
        return Err(Error::JetOrder(format!(
            "expression has jet order {} above the requested prolongation order {order}",
            jet_order(e)
        )));
    }
    let pf = ProlongedField::new(xi)?;
    Ok(pf.apply_rf(&to_ratfunc(e)?)?.to_expr())
}

/// Verdict on ξ̂(e) + (r·D̂x(a) + s·∂yφ)·e == 0, the defining identity of the
/// weight space R^{r,s}.
pub fn relative_invariance(
    e: &Expr,
    r: i64,
    s: i64,
    xi: &PointField,
    cfg: &ZeroConfig,
) -> Result<ZeroVerdict> {
    relative_invariance_rat(
        e,
        &BigRational::from_integer(r.into()),
        &BigRational::from_integer(s.into()),
        xi,
        cfg,
    )
}

/// `relative_invariance` with exact rational weights.
pub fn relative_invariance_rat(
    e: &Expr,
    r: &BigRational,
    s: &BigRational,
    xi: &PointField,
    cfg: &ZeroConfig,
) -> Result<ZeroVerdict> {
    let pf = ProlongedField::new(xi)?;
    let erf = to_ratfunc(e)?;
    let lie = pf.apply_rf(&erf)?;
    let (dxa, dyphi) = weight_flow(xi)?;
    let w = to_ratfunc(&dxa)?
        .mul(&RatFunc::constant(r.clone()))?
        .add(&to_ratfunc(&dyphi)?.mul(&RatFunc::constant(s.clone()))?)?;
    let lhs = lie.add(&w.mul(&erf)?)?;
    is_zero_rf(&lhs, cfg)
}

/// Local point transformation (x, y) -> (X(x,y), Y(x,y)).
#[derive(Clone, Debug)]
pub struct PointMap {
    pub x: Expr,
    pub y: Expr,
}

impl PointMap {
    pub fn new(x: Expr, y: Expr) -> Result<PointMap> {
        check_xy(&x, "map component X")?;
        check_xy(&y, "map component Y")?;
        let map = PointMap { x, y };
        let det = map.jacobian_det()?;
        if to_ratfunc(&det)?.is_zero() {
            return Err(Error::SingularMap("Jacobian vanishes identically".into()));
        }
        Ok(map)
    }

    pub fn identity() -> PointMap {
        PointMap { x: var("x"), y: var("y") }
    }

    pub fn jacobian_det(&self) -> Result<Expr> {
        let xx = diff(&self.x, sym_x())?;
        let xy = diff(&self.x, sym_y())?;
        let yx = diff(&self.y, sym_x())?;
        let yy = diff(&self.y, sym_y())?;
        normalize(&(xx * yy - xy * yx))
    }

    /// φ ∘ ψ as a single map.
    pub fn compose(&self, inner: &PointMap) -> Result<PointMap> {
        let sub = |e: &Expr| -> Result<Expr> {
            // One simultaneous pass; sequential substitution would rewrite the
            // variables inside the already-inserted components.
            let replaced = e.subst(&|s| {
                if s == sym_x() {
                    Some(inner.x.clone())
                } else if s == sym_y() {
                    Some(inner.y.clone())
                } else {
                    None
                }
            });
            normalize(&replaced)
        };
        PointMap::new(sub(&self.x)?, sub(&self.y)?)
    }

    /// Prolonged slope coordinate p̃ = (Y_x + Y_y p)/(X_x + X_y p).
    pub fn p_tilde(&self) -> Result<Expr> {
        let yx = diff(&self.y, sym_x())?;
        let yy = diff(&self.y, sym_y())?;
        let xx = diff(&self.x, sym_x())?;
        let xy = diff(&self.x, sym_y())?;
        let p = var("p");
        normalize(&((yx + yy * p.clone()) / (xx + xy * p)))
    }

    /// Exact inverse for affine maps; `None` when the map is not affine.
    pub fn invert_affine(&self) -> Result<Option<PointMap>> {
        let xr = to_ratfunc(&self.x)?;
        let yr = to_ratfunc(&self.y)?;
        if !xr.den.is_one() || !yr.den.is_one() {
            return Ok(None);
        }
        let affine_ok = |p: &Poly| -> bool {
            p.all_integer_exponents()
                && p.terms.keys().all(|mo| mo.total_degree() <= num::rational::Rational64::one())
                && p.atoms()
                    .iter()
                    .all(|a| *a == Atom::Var(sym_x()) || *a == Atom::Var(sym_y()))
        };
        if !affine_ok(&xr.num) || !affine_ok(&yr.num) {
            return Ok(None);
        }
        // X = c0 + c1 x + c2 y ; Y = d0 + d1 x + d2 y
        let coef = |p: &Poly, of: Option<Symbol>| -> BigRational {
            for (mo, c) in &p.terms {
                match of {
                    None if mo.is_one() => return c.clone(),
                    Some(s) => {
                        if mo.0.len() == 1 && mo.0[0].0 == Atom::Var(s) {
                            return c.clone();
                        }
                    }
                    _ => {}
                }
            }
            BigRational::zero()
        };
        let (c0, c1, c2) = (coef(&xr.num, None), coef(&xr.num, Some(sym_x())), coef(&xr.num, Some(sym_y())));
        let (d0, d1, d2) = (coef(&yr.num, None), coef(&yr.num, Some(sym_x())), coef(&yr.num, Some(sym_y())));
        let det = &c1 * &d2 - &c2 * &d1;
        if det.is_zero() {
            return Err(Error::SingularMap("affine map with zero determinant".into()));
        }
        // inverse: (x, y) = M^{-1} ((X - c0), (Y - d0))
        let xs = var("x") - Expr::from_rat(c0);
        let ys = var("y") - Expr::from_rat(d0);
        let inv_x = (Expr::from_rat(&d2 / &det) * xs.clone())
            + (Expr::from_rat(-&c2 / &det) * ys.clone());
        let inv_y = (Expr::from_rat(-&d1 / &det) * xs) + (Expr::from_rat(&c1 / &det) * ys);
        Ok(Some(PointMap::new(normalize(&inv_x)?, normalize(&inv_y)?)?))
    }
}

/// A transformed ODE: closed form when the map inverts symbolically, otherwise
/// the pushforward data (source equation plus map), on which every numeric
/// operation still works through `SectionCtx`.
#[derive(Clone, Debug)]
pub enum OdeRep {
    Closed(Ode),
    Mapped { source: Ode, map: PointMap },
}

impl OdeRep {
    pub fn closed(&self) -> Option<&Ode> {
        match self {
            OdeRep::Closed(o) => Some(o),
            OdeRep::Mapped { .. } => None,
        }
    }

    pub fn ctx(&self) -> Result<SectionCtx> {
        match self {
            OdeRep::Closed(o) => SectionCtx::plain(o),
            OdeRep::Mapped { source, map } => SectionCtx::pushforward(map, source),
        }
    }
}

impl From<Ode> for OdeRep {
    fn from(o: Ode) -> OdeRep {
        OdeRep::Closed(o)
    }
}

/// f̃ ∘ Φ₂ expressed in source coordinates: D(p̃)/(X_x + X_y p) with
/// D = ∂x + p ∂y + f ∂p the derivative along solutions.
fn ftilde_source(map: &PointMap, ode: &Ode) -> Result<Expr> {
    let pt = map.p_tilde()?;
    let d = |g: &Expr| -> Result<Expr> {
        let gx = diff(g, sym_x())?;
        let gy = diff(g, sym_y())?;
        let gp = diff(g, sym_p())?;
        normalize(&(gx + var("p") * gy + ode.f().clone() * gp))
    };
    let xx = diff(&map.x, sym_x())?;
    let xy = diff(&map.x, sym_y())?;
    let denom = normalize(&(xx + xy * var("p")))?;
    normalize(&(d(&pt)? / denom))
}

/// Push an ODE through a point map. Returns the closed-form equation when the
/// map inverts symbolically (affine), otherwise the pushforward representation.
pub fn transform_ode(map: &PointMap, ode: &Ode) -> Result<OdeRep> {
    if let Some(inv) = map.invert_affine()? {
        let fsrc = ftilde_source(map, ode)?;
        // Solve p̃(x, y, p*) = p for p*: p* = (p·X_x − Y_x)/(Y_y − p·X_y),
        // then compose everything with the inverse base map.
        let xx = diff(&map.x, sym_x())?;
        let xy = diff(&map.x, sym_y())?;
        let yx = diff(&map.y, sym_x())?;
        let yy = diff(&map.y, sym_y())?;
        let p = var("p");
        let p_star = normalize(&((p.clone() * xx - yx) / (yy - p * xy)))?;
        let src_vars = |e: &Expr| -> Expr {
            // Single simultaneous pass; the replacement trees are not rescanned.
            e.subst(&|s| {
                if s == sym_x() {
                    Some(inv.x.clone())
                } else if s == sym_y() {
                    Some(inv.y.clone())
                } else {
                    None
                }
            })
        };
        let p_star_new = normalize(&src_vars(&p_star))?;
        // Base variables first; substituting p afterwards is safe because the
        // substitution pass does not descend into the inserted p* subtrees.
        let tmp = src_vars(&fsrc);
        let ftilde = normalize(&tmp.subst_var(sym_p(), &p_star_new))?;
        Ode::new(ftilde).map(OdeRep::Closed)
    } else {
        Ok(OdeRep::Mapped { source: ode.clone(), map: map.clone() })
    }
}

/// Restriction context: the jets of a concrete section u = f(x, y, p),
/// possibly viewed through a point map. `jet(l,m,k)` is the function that the
/// coordinate u^k_{lm} restricts to, expressed in source coordinates; for the
/// pushforward case it is (jet of f̃) ∘ Φ₂.
pub struct SectionCtx {
    /// Restricted section in source coordinates.
    f: RatFunc,
    /// Slope coordinate in source terms: p for the plain case, p̃ for a map.
    ptilde: RatFunc,
    /// Derivation coefficient triples (∂x, ∂y, ∂p weights) for δ_x, δ_y, δ_p.
    deltas: [[RatFunc; 3]; 3],
    /// Base image (X, Y) for numeric work; identity when None.
    image: Option<(RatFunc, RatFunc)>,
    cache: RefCell<HashMap<(u8, u8, u8), RatFunc>>,
}

impl SectionCtx {
    pub fn plain(ode: &Ode) -> Result<SectionCtx> {
        let one = RatFunc::one;
        let zero = RatFunc::zero;
        Ok(SectionCtx {
            f: to_ratfunc(ode.f())?,
            ptilde: RatFunc::var(sym_p()),
            deltas: [
                [one(), zero(), zero()],
                [zero(), one(), zero()],
                [zero(), zero(), one()],
            ],
            image: None,
            cache: RefCell::new(HashMap::new()),
        })
    }

    /// Section of the transformed equation in source coordinates: derivations
    /// δ_j = Σ_i (J^{-1})_{ij} ∂_i pull the target partials back through
    /// Φ₂ = (X, Y, p̃).
    pub fn pushforward(map: &PointMap, ode: &Ode) -> Result<SectionCtx> {
        let f = to_ratfunc(&ftilde_source(map, ode)?)?;
        let pt = to_ratfunc(&map.p_tilde()?)?;
        let comps = [to_ratfunc(&map.x)?, to_ratfunc(&map.y)?, pt.clone()];
        let syms = [sym_x(), sym_y(), sym_p()];
        let mut jac = [[RatFunc::zero(), RatFunc::zero(), RatFunc::zero()],
            [RatFunc::zero(), RatFunc::zero(), RatFunc::zero()],
            [RatFunc::zero(), RatFunc::zero(), RatFunc::zero()]];
        for (j, comp) in comps.iter().enumerate() {
            for (i, s) in syms.iter().enumerate() {
                jac[j][i] = diff_rf(comp, *s)?;
            }
        }
        let det = det3(&jac)?;
        if det.is_zero() {
            return Err(Error::SingularMap("prolonged Jacobian vanishes identically".into()));
        }
        // (J^{-1})_{ij} = cof_{ji}/det
        let mut inv = [[RatFunc::zero(), RatFunc::zero(), RatFunc::zero()],
            [RatFunc::zero(), RatFunc::zero(), RatFunc::zero()],
            [RatFunc::zero(), RatFunc::zero(), RatFunc::zero()]];
        for i in 0..3 {
            for j in 0..3 {
                inv[i][j] = cofactor3(&jac, j, i)?.div(&det)?;
            }
        }
        // δ_j has ∂_i-coefficient (J^{-1})_{ij}: column j of the inverse.
        let col = |j: usize| -> [RatFunc; 3] {
            [inv[0][j].clone(), inv[1][j].clone(), inv[2][j].clone()]
        };
        Ok(SectionCtx {
            f,
            ptilde: pt,
            deltas: [col(0), col(1), col(2)],
            image: Some((comps[0].clone(), comps[1].clone())),
            cache: RefCell::new(HashMap::new()),
        })
    }

    fn delta(&self, which: usize, g: &RatFunc) -> Result<RatFunc> {
        let syms = [sym_x(), sym_y(), sym_p()];
        let mut acc = RatFunc::zero();
        for i in 0..3 {
            let c = &self.deltas[which][i];
            if c.is_zero() {
                continue;
            }
            let dg = diff_rf(g, syms[i])?;
            if dg.is_zero() {
                continue;
            }
            acc = acc.add(&c.mul(&dg)?)?;
        }
        Ok(acc)
    }

    /// (δ_x + p̃ δ_y) — the target-side ∂x + p∂y seen from the source.
    fn delta_xhat(&self, g: &RatFunc) -> Result<RatFunc> {
        let dx = self.delta(0, g)?;
        let dy = self.delta(1, g)?;
        dx.add(&self.ptilde.mul(&dy)?)
    }

    /// Restriction of the coordinate u^k_{lm}: (∂x + p∂y)^l ∂y^m ∂p^k f in
    /// target terms, expressed in source coordinates.
    pub fn jet(&self, l: u8, m: u8, k: u8) -> Result<RatFunc> {
        if let Some(hit) = self.cache.borrow().get(&(l, m, k)) {
            return Ok(hit.clone());
        }
        let out = if l > 0 {
            self.delta_xhat(&self.jet(l - 1, m, k)?)?
        } else if m > 0 {
            self.delta(1, &self.jet(0, m - 1, k)?)?
        } else if k > 0 {
            self.delta(2, &self.jet(0, 0, k - 1)?)?
        } else {
            self.f.clone()
        };
        self.cache.borrow_mut().insert((l, m, k), out.clone());
        Ok(out)
    }

    /// Substitute every jet variable of `e` by its restriction. For the
    /// pushforward case the result is (e restricted to f̃) ∘ Φ₂.
    pub fn restrict(&self, e: &Expr) -> Result<Expr> {
        let mut table: HashMap<Symbol, Expr> = HashMap::new();
        for v in e.vars() {
            if let Some(j) = JetVar::from_symbol(v) {
                table.insert(v, self.jet(j.l, j.m, j.k)?.to_expr());
            }
        }
        let replaced = e.subst(&|s| table.get(&s).cloned());
        normalize(&replaced)
    }

    /// Image of a source base point under the underlying 2-jet map.
    pub fn image_point(&self, x: C64, y: C64, p: C64) -> Result<(C64, C64, C64)> {
        let mut a = VarAssignment::new();
        a.set("x", x).set("y", y).set("p", p);
        match &self.image {
            None => Ok((x, y, p)),
            Some((mx, my)) => {
                let ix = eval_rf(mx, &a)?.value;
                let iy = eval_rf(my, &a)?.value;
                let ip = eval_rf(&self.ptilde, &a)?.value;
                Ok((ix, iy, ip))
            }
        }
    }

    /// Numeric value of the restricted jet u^k_{lm} at a source point.
    pub fn jet_value(&self, l: u8, m: u8, k: u8, x: C64, y: C64, p: C64) -> Result<C64> {
        let rf = self.jet(l, m, k)?;
        let mut a = VarAssignment::new();
        a.set("x", x).set("y", y).set("p", p);
        Ok(eval_rf(&rf, &a)?.value)
    }
}

/// Restriction of a jet expression to a concrete equation.
pub fn restrict(e: &Expr, ode: &Ode) -> Result<Expr> {
    SectionCtx::plain(ode)?.restrict(e)
}

/// Random polynomial in x, y with small integer coefficients.
pub fn sample_poly_xy(rng: &mut impl rand::Rng, deg: u32) -> Expr {
    let mut terms = Vec::new();
    for dx in 0..=deg {
        for dy in 0..=(deg - dx) {
            let c: i64 = rng.gen_range(-3..=3);
            if c == 0 {
                continue;
            }
            let mut t = int(c);
            for _ in 0..dx {
                t = t * var("x");
            }
            for _ in 0..dy {
                t = t * var("y");
            }
            terms.push(t);
        }
    }
    normalize(&Expr::sum(terms)).expect("polynomial")
}

/// Random point field with polynomial coefficients of total degree ≤ 3.
pub fn sample_point_field(rng: &mut impl rand::Rng) -> PointField {
    sample_point_field_deg(rng, 3)
}

/// Random point field with polynomial coefficients of total degree ≤ `deg`.
pub fn sample_point_field_deg(rng: &mut impl rand::Rng, deg: u32) -> PointField {
    loop {
        let a = sample_poly_xy(rng, deg);
        let b = sample_poly_xy(rng, deg);
        if a.is_zero_literal() && b.is_zero_literal() {
            continue;
        }
        if let Ok(f) = PointField::new(a, b) {
            return f;
        }
    }
}

/// Random polynomial point map of degree ≤ `deg` with nonzero Jacobian.
pub fn sample_point_map(rng: &mut impl rand::Rng, deg: u32) -> PointMap {
    loop {
        let x = sample_poly_xy(rng, deg);
        let y = sample_poly_xy(rng, deg);
        if let Ok(m) = PointMap::new(x, y) {
            return m;
        }
    }
}

fn det3(m: &[[RatFunc; 3]; 3]) -> Result<RatFunc> {
    let mut acc = RatFunc::zero();
    for j in 0..3 {
        let c = cofactor3(m, 0, j)?;
        acc = acc.add(&m[0][j].mul(&c)?)?;
    }
    Ok(acc)
}

fn cofactor3(m: &[[RatFunc; 3]; 3], i: usize, j: usize) -> Result<RatFunc> {
    let rows: Vec<usize> = (0..3).filter(|&r| r != i).collect();
    let cols: Vec<usize> = (0..3).filter(|&c| c != j).collect();
    let minor = m[rows[0]][cols[0]]
        .mul(&m[rows[1]][cols[1]])?
        .sub(&m[rows[0]][cols[1]].mul(&m[rows[1]][cols[0]])?)?;
    if (i + j) % 2 == 0 {
        Ok(minor)
    } else {
        Ok(minor.neg())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse_expr;

    fn pe(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn norm(s: &str) -> Expr {
        normalize(&pe(s)).unwrap()
    }

    #[test]
    fn jet_symbol_round_trip() {
        for (l, m, k) in [(0u8, 0u8, 0u8), (1, 0, 0), (0, 1, 0), (0, 0, 4), (3, 2, 1)] {
            let j = JetVar::new(l, m, k).unwrap();
            assert_eq!(JetVar::from_symbol(j.symbol()), Some(j));
        }
        assert_eq!(JetVar::from_symbol(Symbol::intern("x")), None);
        assert_eq!(JetVar::from_symbol(Symbol::intern("u4")), None);
    }

    #[test]
    fn total_derivative_base_rules() {
        let e = pe("u^3");
        assert_eq!(total_derivative(Dir::P, &e).unwrap(), pe("u^4"));
        let e = pe("x*u");
        assert_eq!(total_derivative(Dir::XHat, &e).unwrap(), norm("u + x*u_{10}"));
        // commutation rewrite: Dp(u_{10}) = u^1_{10} + u_{01}
        let e = pe("u_{10}");
        assert_eq!(total_derivative(Dir::P, &e).unwrap(), norm("u^1_{10} + u_{01}"));
    }

    #[test]
    fn prolongation_coefficients_match_expanded_forms() {
        // ξ = (0, x): φ = x, A = 1, B0 = 0, B1 = 0
        let xi = PointField::new(int(0), var("x")).unwrap();
        assert_eq!(xi.coef_a(), int(1));
        assert!(xi.coef_b0().is_zero_literal());
        assert!(xi.coef_b1().is_zero_literal());
        // ξ = (x, y): A = 0, B1 = −1, B0 = 0
        let xi = PointField::new(var("x"), var("y")).unwrap();
        assert!(xi.coef_a().is_zero_literal());
        assert_eq!(xi.coef_b1(), int(-1));
        assert!(xi.coef_b0().is_zero_literal());
        // ξ = (1, 0): everything flat
        let xi = PointField::new(int(1), int(0)).unwrap();
        assert!(xi.coef_a().is_zero_literal());
        assert!(xi.coef_b0().is_zero_literal());
        assert!(xi.coef_b1().is_zero_literal());
    }

    #[test]
    fn expanded_b_forms_hold_for_random_fields() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..4 {
            let xi = sample_point_field(&mut rng);
            let dx = |e: &Expr, s: &str| diff(e, Symbol::intern(s)).unwrap();
            let a = &xi.a;
            let b = &xi.b;
            let p = var("p");
            // A = b_x − (a_x − b_y) p − a_y p²
            let want_a = normalize(
                &(dx(b, "x") - (dx(a, "x") - dx(b, "y")) * p.clone()
                    - dx(a, "y") * p.clone() * p.clone()),
            )
            .unwrap();
            assert_eq!(xi.coef_a(), want_a);
            // B1 = −(2 a_x − b_y) − 3 a_y p
            let want_b1 = normalize(
                &(int(-1) * (int(2) * dx(a, "x") - dx(b, "y")) - int(3) * dx(a, "y") * p.clone()),
            )
            .unwrap();
            assert_eq!(xi.coef_b1(), want_b1);
            // B0 = b_xx − (a_xx − 2 b_xy) p − (2 a_xy − b_yy) p² − a_yy p³
            let want_b0 = normalize(
                &(dx(&dx(b, "x"), "x")
                    - (dx(&dx(a, "x"), "x") - int(2) * dx(&dx(b, "x"), "y")) * p.clone()
                    - (int(2) * dx(&dx(a, "x"), "y") - dx(&dx(b, "y"), "y")) * p.clone() * p.clone()
                    - dx(&dx(a, "y"), "y") * p.clone() * p.clone() * p),
            )
            .unwrap();
            assert_eq!(xi.coef_b0(), want_b0);
        }
    }

    #[test]
    fn restrict_fourth_derivative() {
        let ode = Ode::parse("p^(4)").unwrap();
        let r = restrict(&pe("u^4"), &ode).unwrap();
        assert_eq!(r, int(24));
        let cubic = Ode::parse("1 + p + p^(2) + p^(3)").unwrap();
        let r = restrict(&pe("u^4"), &cubic).unwrap();
        assert!(r.is_zero_literal());
    }

    #[test]
    fn transform_identity_and_swap() {
        let ode = Ode::parse("y^(2)").unwrap();
        let id = PointMap::identity();
        let out = transform_ode(&id, &ode).unwrap();
        assert_eq!(normalize(out.closed().unwrap().f()).unwrap(), norm("y^(2)"));

        let swap = PointMap::new(var("y"), var("x")).unwrap();
        let line = Ode::parse("0").unwrap();
        let out = transform_ode(&swap, &line).unwrap();
        assert!(normalize(out.closed().unwrap().f()).unwrap().is_zero_literal());
    }

    #[test]
    fn transform_scaling() {
        // (x, 3y): f̃(x,y,p) = 3 f(x, y/3, p/3); for f = y² this is y²/3.
        let ode = Ode::parse("y^(2)").unwrap();
        let map = PointMap::new(var("x"), int(3) * var("y")).unwrap();
        let out = transform_ode(&map, &ode).unwrap();
        assert_eq!(normalize(out.closed().unwrap().f()).unwrap(), norm("y^(2)/3"));
    }

    #[test]
    fn cocycle_examples() {
        let xi = PointField::new(var("x"), var("y")).unwrap();
        let (cw, cq) = cocycles(&xi).unwrap();
        assert_eq!(cw, int(2));
        assert_eq!(cq, int(1));
        let xi = PointField::new(int(0), var("x") * var("x")).unwrap();
        let (cw, cq) = cocycles(&xi).unwrap();
        assert!(cw.is_zero_literal());
        assert!(cq.is_zero_literal());
    }
}
