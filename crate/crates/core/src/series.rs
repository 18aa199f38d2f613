//! Truncated Laurent series over `QuadExt` and the Painlevé test built on them:
//! dominant balances, Kowalevski exponents, coefficient recursion, regular
//! Taylor jets and residual checks.
//!
//! Series are in the local variable `tau = t - t0`.

use std::fmt;

use serde_json::{json, Value};

use crate::catalog::{ScalarODE, SystemDef};
use crate::exact::QuadExt;
use crate::linalg::{self, eigenvalues, Mat};
use crate::mpoly::{MPoly, RatFun, VarTable};
use crate::solve::{solve_system, Coord, SolveOptions};
use crate::upoly::{roots, Root, UPoly};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("field component {0} is not polynomial")]
    NotPolynomial(usize),
    #[error("symbols {0:?} must be bound to constants")]
    Symbolic(Vec<String>),
    #[error("resonance at order {order} is incompatible: the recursion has no solution")]
    Obstruction { order: i64 },
    #[error("free value for {var} at power {power} is not attainable")]
    BadFreeValue { var: String, power: i64 },
    #[error("division by a series that vanishes to the available precision")]
    ZeroDivisor,
    #[error("initial condition is a singular point of the field")]
    Singular,
    #[error("insufficient precision at power {0}")]
    Precision(i64),
    #[error("self-check failed: residual is nonzero at power {0}")]
    Residual(i64),
}

/// `sum_k c[k] tau^(val + k)`, known modulo `tau^(val + c.len())`.
#[derive(Clone, PartialEq)]
pub struct Series {
    pub val: i64,
    pub c: Vec<QuadExt>,
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (k, c) in self.c.iter().enumerate() {
            if !c.is_zero() {
                parts.push(format!("({}) t^{}", c, self.val + k as i64));
            }
        }
        write!(f, "{} + O(t^{})", if parts.is_empty() { "0".into() } else { parts.join(" + ") }, self.abs())
    }
}

impl Series {
    pub fn new(val: i64, c: Vec<QuadExt>) -> Series {
        Series { val, c }
    }

    /// Exact constant, carried with `len` coefficients of precision.
    pub fn constant(x: QuadExt, len: usize) -> Series {
        let mut c = vec![QuadExt::zero(); len.max(1)];
        c[0] = x;
        Series { val: 0, c }
    }

    /// `t0 + tau`.
    pub fn time(t0: QuadExt, len: usize) -> Series {
        let mut s = Series::constant(t0, len.max(2));
        s.c[1] = QuadExt::one();
        s
    }

    /// Absolute precision: the series is known modulo `tau^abs`.
    pub fn abs(&self) -> i64 {
        self.val + self.c.len() as i64
    }

    /// Coefficient of `tau^p`, or `None` beyond the precision.
    pub fn coeff(&self, p: i64) -> Option<QuadExt> {
        if p >= self.abs() {
            None
        } else if p < self.val {
            Some(QuadExt::zero())
        } else {
            Some(self.c[(p - self.val) as usize].clone())
        }
    }

    /// Power of the first nonzero known coefficient, or `abs()` if all are zero.
    pub fn order(&self) -> i64 {
        self.c.iter().position(|x| !x.is_zero()).map(|k| self.val + k as i64).unwrap_or(self.abs())
    }

    pub fn is_zero_to_precision(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    fn window(&self, lo: i64, hi: i64) -> Series {
        let c = (lo..hi).map(|p| self.coeff(p).expect("within precision")).collect();
        Series { val: lo, c }
    }

    pub fn add(&self, o: &Series) -> Series {
        let val = self.val.min(o.val);
        let abs = self.abs().min(o.abs());
        let c = (val..abs).map(|p| &self.coeff(p).unwrap() + &o.coeff(p).unwrap()).collect();
        Series { val, c }
    }

    pub fn neg(&self) -> Series {
        Series { val: self.val, c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn sub(&self, o: &Series) -> Series {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &QuadExt) -> Series {
        Series { val: self.val, c: self.c.iter().map(|x| x * k).collect() }
    }

    pub fn mul(&self, o: &Series) -> Series {
        let (oa, ob) = (self.order(), o.order());
        let abs = (self.abs() + ob).min(o.abs() + oa);
        let val = oa + ob;
        if abs <= val {
            return Series { val: abs, c: Vec::new() };
        }
        let n = (abs - val) as usize;
        let mut c = vec![QuadExt::zero(); n];
        for i in 0..n {
            let Some(a) = self.coeff(oa + i as i64) else { break };
            if a.is_zero() {
                continue;
            }
            for j in 0..(n - i) {
                let b = o.coeff(ob + j as i64).unwrap();
                if !b.is_zero() {
                    c[i + j] = &c[i + j] + &(&a * &b);
                }
            }
        }
        Series { val, c }
    }

    pub fn pow(&self, e: u32) -> Series {
        let mut r = Series::constant(QuadExt::one(), self.c.len().max(1) + 8);
        r = r.window(0, self.c.len().max(1) as i64);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    pub fn div(&self, o: &Series) -> Result<Series, SeriesError> {
        let ob = o.order();
        if ob >= o.abs() {
            return Err(SeriesError::ZeroDivisor);
        }
        let oa = self.order();
        let n = (self.abs() - oa).min(o.abs() - ob);
        if n <= 0 {
            return Ok(Series { val: oa - ob, c: Vec::new() });
        }
        let b0 = o.coeff(ob).unwrap();
        let inv = b0.inv().map_err(|_| SeriesError::ZeroDivisor)?;
        let mut q: Vec<QuadExt> = Vec::with_capacity(n as usize);
        for k in 0..n {
            let mut s = self.coeff(oa + k).unwrap();
            for j in 1..=k {
                let b = o.coeff(ob + j).unwrap();
                if !b.is_zero() {
                    s = &s - &(&b * &q[(k - j) as usize]);
                }
            }
            q.push(&s * &inv);
        }
        Ok(Series { val: oa - ob, c: q })
    }

    pub fn deriv(&self) -> Series {
        let c = self.c.iter().enumerate().map(|(k, x)| x * &QuadExt::int(self.val + k as i64)).collect();
        Series { val: self.val - 1, c }
    }

    pub fn to_json(&self) -> Value {
        json!({"val": self.val, "coeffs": self.c})
    }
}

/// Evaluate a polynomial on series values, one per variable of its table.
pub fn eval_poly(p: &MPoly, vals: &[Series]) -> Series {
    let n = p.vars().len();
    let len = vals.iter().map(|s| s.c.len()).max().unwrap_or(1);
    let mut acc: Option<Series> = None;
    let mut cache: Vec<Vec<Series>> = vec![Vec::new(); n];
    for (e, c) in p.terms() {
        let mut t = Series::constant(c.clone(), len);
        for (v, &k) in e.iter().enumerate() {
            if k == 0 {
                continue;
            }
            while cache[v].len() < k as usize {
                let next = match cache[v].last() {
                    None => vals[v].clone(),
                    Some(prev) => prev.mul(&vals[v]),
                };
                cache[v].push(next);
            }
            t = t.mul(&cache[v][k as usize - 1]);
        }
        acc = Some(match acc {
            None => t,
            Some(a) => a.add(&t),
        });
    }
    acc.unwrap_or_else(|| Series::constant(QuadExt::zero(), len))
}

pub fn eval_ratfun(r: &RatFun, vals: &[Series]) -> Result<Series, SeriesError> {
    let n = eval_poly(&r.num, vals);
    if let Some(c) = r.den.as_constant() {
        return Ok(n.scale(&c.inv().map_err(|_| SeriesError::ZeroDivisor)?));
    }
    n.div(&eval_poly(&r.den, vals))
}

// ---------------------------------------------------------------------------
// Balances.

/// Leading behaviour `x_i ~ leading_i * tau^(-m_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Balance {
    pub pole_orders: Vec<i64>,
    pub leading: Vec<QuadExt>,
}

impl Balance {
    pub fn to_json(&self) -> Value {
        json!({"pole_orders": self.pole_orders, "leading": self.leading})
    }
}

#[derive(Clone, Debug)]
pub struct KowalevskiData {
    pub matrix: Mat,
    pub resonances: Vec<(Root, u32)>,
}

impl KowalevskiData {
    /// Nonnegative integer resonances, with multiplicity.
    pub fn nonnegative_integers(&self) -> Vec<i64> {
        let mut out = Vec::new();
        for (r, m) in &self.resonances {
            if let Some(k) = r.exact().and_then(|q| q.as_integer()).and_then(|k| num_traits::ToPrimitive::to_i64(&k)) {
                if k >= 0 {
                    for _ in 0..*m {
                        out.push(k);
                    }
                }
            }
        }
        out.sort();
        out
    }

    pub fn has(&self, k: i64) -> bool {
        self.resonances.iter().any(|(r, _)| r.exact() == Some(&QuadExt::int(k)))
    }

    pub fn to_json(&self) -> Value {
        json!(self.resonances.iter().map(|(r, m)| json!({"value": r.to_json(), "multiplicity": m})).collect::<Vec<_>>())
    }
}

fn polynomial_field(sys: &SystemDef) -> Result<Vec<MPoly>, SeriesError> {
    sys.field.iter().enumerate().map(|(i, f)| f.to_poly().ok_or(SeriesError::NotPolynomial(i))).collect()
}

fn weight(e: &[u16], state: &[usize], m: &[i64]) -> i64 {
    state.iter().zip(m).map(|(&v, &mi)| e[v] as i64 * mi).sum()
}

/// Top-weight part of each component, or `None` if some term outweighs the balance.
fn dominant_part(field: &[MPoly], state: &[usize], m: &[i64]) -> Option<Vec<MPoly>> {
    let mut out = Vec::new();
    for (i, f) in field.iter().enumerate() {
        let w = m[i] + 1;
        let mut terms = Vec::new();
        for (e, c) in f.terms() {
            let we = weight(e, state, m);
            if we > w {
                return None;
            }
            if we == w {
                terms.push((e.clone(), c.clone()));
            }
        }
        out.push(MPoly::from_terms(f.vars(), terms));
    }
    Some(out)
}

fn bind_time(p: &MPoly, sys: &SystemDef, t0: &QuadExt) -> MPoly {
    match sys.time {
        Some(t) => p.eval_partial(&[(t, t0.clone())]),
        None => p.clone(),
    }
}

/// All balances with pole orders in `1..=max_order`.
///
/// A balance whose leading coefficient vanishes in a component with pole order
/// above 1 is dropped, since it is the same branch seen at a lower order.
pub fn dominant_balances(sys: &SystemDef, max_order: i64, t0: &QuadExt) -> Result<Vec<Balance>, SeriesError> {
    let field = polynomial_field(sys)?;
    let n = sys.state.len();
    let mut out = Vec::new();
    let mut m = vec![1i64; n];
    loop {
        if let Some(hat) = dominant_part(&field, &sys.state, &m) {
            let eqs: Vec<MPoly> = hat
                .iter()
                .enumerate()
                .map(|(i, h)| bind_time(h, sys, t0) + MPoly::var(&sys.vars, sys.state[i]).scale(&QuadExt::int(m[i])))
                .collect();
            let extra: Vec<String> = eqs
                .iter()
                .flat_map(|e| e.support())
                .filter(|v| !sys.state.contains(v))
                .map(|v| sys.vars.name(v).to_string())
                .collect();
            if !extra.is_empty() {
                return Err(SeriesError::Symbolic(extra));
            }
            for sol in solve_system(&eqs, &sys.state, &SolveOptions::default()).points {
                let exact: Option<Vec<QuadExt>> = sol.iter().map(|c| if let Coord::Exact(q) = c { Some(q.clone()) } else { None }).collect();
                let Some(c) = exact else { continue };
                if c.iter().all(|x| x.is_zero()) || c.iter().zip(&m).any(|(x, &mi)| x.is_zero() && mi > 1) {
                    continue;
                }
                out.push(Balance { pole_orders: m.clone(), leading: c });
            }
        }
        // Next multi-index.
        let mut k = 0;
        while k < n {
            m[k] += 1;
            if m[k] <= max_order {
                break;
            }
            m[k] = 1;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    Ok(out)
}

fn kowalevski_matrix(sys: &SystemDef, b: &Balance, t0: &QuadExt) -> Result<Mat, SeriesError> {
    let field = polynomial_field(sys)?;
    let hat = dominant_part(&field, &sys.state, &b.pole_orders).ok_or(SeriesError::NotPolynomial(0))?;
    let pt: Vec<(usize, QuadExt)> = sys.state.iter().copied().zip(b.leading.iter().cloned()).collect();
    let n = sys.state.len();
    let mut k = vec![vec![QuadExt::zero(); n]; n];
    for i in 0..n {
        let h = bind_time(&hat[i], sys, t0);
        for j in 0..n {
            let d = h.partial(sys.state[j]).eval_partial(&pt);
            k[i][j] = d.as_constant().ok_or_else(|| SeriesError::Symbolic(d.support().iter().map(|&v| sys.vars.name(v).to_string()).collect()))?;
        }
        k[i][i] = &k[i][i] + &QuadExt::int(b.pole_orders[i]);
    }
    Ok(k)
}

/// Kowalevski matrix `J(f_hat)(c) + diag(m)` and its eigenvalues.
pub fn kowalevski(sys: &SystemDef, b: &Balance, t0: &QuadExt) -> Result<KowalevskiData, SeriesError> {
    let matrix = kowalevski_matrix(sys, b, t0)?;
    let resonances = eigenvalues(&matrix);
    Ok(KowalevskiData { matrix, resonances })
}

/// A chosen value for a free coefficient: variable position, power of `tau`, value.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeValue {
    pub var: usize,
    pub power: i64,
    pub value: QuadExt,
}

impl FreeValue {
    pub fn new(var: usize, power: i64, value: QuadExt) -> FreeValue {
        FreeValue { var, power, value }
    }
}

/// Truncated Laurent solution.
#[derive(Clone, Debug)]
pub struct LaurentSolution {
    pub t0: QuadExt,
    pub balance: Option<Balance>,
    /// One series per state variable.
    pub series: Vec<Series>,
    /// Free coefficients actually used (given or defaulted to zero).
    pub free: Vec<FreeValue>,
    /// Highest recursion order computed.
    pub truncation: i64,
}

impl LaurentSolution {
    /// Coefficient of `tau^power` in component `var`.
    pub fn coeff(&self, var: usize, power: i64) -> Option<QuadExt> {
        self.series[var].coeff(power)
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "t0": self.t0,
            "balance": self.balance.as_ref().map(|b| b.to_json()),
            "series": self.series.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
            "free": self.free.iter().map(|f| json!({"var": f.var, "power": f.power, "value": f.value})).collect::<Vec<_>>(),
            "truncation": self.truncation,
        })
    }
}

fn series_inputs(sys: &SystemDef, x: &[Series], t0: &QuadExt, len: usize) -> Result<Vec<Series>, SeriesError> {
    let n = sys.vars.len();
    let mut vals: Vec<Option<Series>> = vec![None; n];
    for (i, &v) in sys.state.iter().enumerate() {
        vals[v] = Some(x[i].clone());
    }
    if let Some(t) = sys.time {
        vals[t] = Some(Series::time(t0.clone(), len));
    }
    let mut missing = Vec::new();
    let out = vals
        .into_iter()
        .enumerate()
        .map(|(v, s)| {
            s.unwrap_or_else(|| {
                missing.push(sys.vars.name(v).to_string());
                Series::constant(QuadExt::zero(), 1)
            })
        })
        .collect();
    // Unbound symbols are only an error if they occur in the field.
    let occurring: Vec<String> = missing
        .into_iter()
        .filter(|name| {
            let v = sys.vars.idx(name);
            sys.field.iter().any(|f| f.occurs(v))
        })
        .collect();
    if !occurring.is_empty() {
        return Err(SeriesError::Symbolic(occurring));
    }
    Ok(out)
}

/// Residual `x' - f(x)` of a series solution, per component.
pub fn system_residual(sys: &SystemDef, x: &[Series], t0: &QuadExt) -> Result<Vec<Series>, SeriesError> {
    let len = x.iter().map(|s| s.c.len()).max().unwrap_or(1) + 4;
    let vals = series_inputs(sys, x, t0, len)?;
    sys.field
        .iter()
        .zip(x)
        .map(|(f, xi)| {
            if f.is_poly() {
                Ok(xi.deriv().sub(&eval_ratfun(f, &vals)?))
            } else {
                // Clear the denominator: den * x' - num.
                let d = eval_poly(&f.den, &vals);
                if d.is_zero_to_precision() {
                    return Err(SeriesError::ZeroDivisor);
                }
                Ok(d.mul(&xi.deriv()).sub(&eval_poly(&f.num, &vals)))
            }
        })
        .collect()
}

/// Laurent solution for a balance, with free coefficients as given (others zero).
pub fn laurent_extend(sys: &SystemDef, b: &Balance, t0: &QuadExt, free: &[FreeValue], n: i64) -> Result<LaurentSolution, SeriesError> {
    let k = kowalevski_matrix(sys, b, t0)?;
    let dim = sys.state.len();
    let m = &b.pole_orders;
    let mut x: Vec<Series> = (0..dim).map(|i| Series::new(-m[i], vec![b.leading[i].clone()])).collect();
    let mut used = Vec::new();
    for j in 1..=n {
        for (i, xi) in x.iter_mut().enumerate() {
            xi.c.push(QuadExt::zero());
            debug_assert_eq!(xi.abs(), j - m[i] + 1);
        }
        let res = system_residual(sys, &x, t0)?;
        let rhs: Vec<QuadExt> =
            (0..dim).map(|i| res[i].coeff(j - m[i] - 1).map(|c| -c).ok_or(SeriesError::Precision(j - m[i] - 1))).collect::<Result<_, _>>()?;
        let a: Mat = (0..dim)
            .map(|r| (0..dim).map(|c| if r == c { &QuadExt::int(j) - &k[r][c] } else { -&k[r][c] }).collect())
            .collect();
        let sol = linalg::solve(&a, &rhs);
        let Some(part) = sol.particular else { return Err(SeriesError::Obstruction { order: j }) };
        let mut cj = part;
        if !sol.nullspace.is_empty() {
            cj = apply_free(sys, &cj, &sol.nullspace, free, j, m, &mut used)?;
        }
        for i in 0..dim {
            *x[i].c.last_mut().unwrap() = cj[i].clone();
        }
    }
    // Self-check through the computed order.
    let res = system_residual(sys, &x, t0)?;
    for (i, r) in res.iter().enumerate() {
        for p in r.val..(n - m[i]) {
            if let Some(c) = r.coeff(p) {
                if !c.is_zero() {
                    return Err(SeriesError::Residual(p));
                }
            }
        }
    }
    Ok(LaurentSolution { t0: t0.clone(), balance: Some(b.clone()), series: x, free: used, truncation: n })
}

fn apply_free(
    sys: &SystemDef,
    part: &[QuadExt],
    null: &[Vec<QuadExt>],
    free: &[FreeValue],
    j: i64,
    m: &[i64],
    used: &mut Vec<FreeValue>,
) -> Result<Vec<QuadExt>, SeriesError> {
    let slots: Vec<&FreeValue> = free.iter().filter(|f| f.power + m[f.var] == j).collect();
    let mut cj = part.to_vec();
    if !slots.is_empty() {
        // Solve for the nullspace combination hitting the requested values.
        let a: Mat = slots.iter().map(|s| null.iter().map(|v| v[s.var].clone()).collect()).collect();
        let rhs: Vec<QuadExt> = slots.iter().map(|s| &s.value - &part[s.var]).collect();
        let lam = linalg::solve(&a, &rhs).particular.ok_or_else(|| SeriesError::BadFreeValue {
            var: sys.vars.name(sys.state[slots[0].var]).to_string(),
            power: slots[0].power,
        })?;
        for (l, v) in lam.iter().zip(null) {
            for (c, vi) in cj.iter_mut().zip(v) {
                *c = &*c + &(l * vi);
            }
        }
    }
    // Record one slot per nullspace dimension: the free columns of the elimination.
    for v in null {
        let var = v.iter().position(|x| x.is_one()).unwrap_or(0);
        let given = slots.iter().find(|s| s.var == var).map(|s| s.value.clone());
        used.push(FreeValue { var, power: j - m[var], value: given.unwrap_or_else(|| cj[var].clone()) });
    }
    Ok(cj)
}

/// Taylor jet of a regular solution through `tau^n`.
pub fn jet_taylor(sys: &SystemDef, ic: &[QuadExt], t0: &QuadExt, n: usize) -> Result<LaurentSolution, SeriesError> {
    let dim = sys.state.len();
    let mut x: Vec<Series> = ic.iter().map(|c| Series::new(0, vec![c.clone()])).collect();
    let len = n + 4;
    for k in 1..=n {
        let vals = series_inputs(sys, &x, t0, len)?;
        let mut next = Vec::with_capacity(dim);
        for f in &sys.field {
            let fv = eval_ratfun(f, &vals).map_err(|_| SeriesError::Singular)?;
            let c = fv.coeff(k as i64 - 1).ok_or(SeriesError::Precision(k as i64 - 1))?;
            next.push(&c * &QuadExt::frac(1, k as i64));
        }
        for (xi, c) in x.iter_mut().zip(next) {
            xi.c.push(c);
        }
    }
    Ok(LaurentSolution { t0: t0.clone(), balance: None, series: x, free: Vec::new(), truncation: n as i64 })
}

/// Residual summary: whether every known coefficient vanishes, and the largest magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub exact_zero: bool,
    pub max_abs: f64,
    /// Number of coefficients that were checked.
    pub checked: usize,
}

fn summarize(series: &[Series]) -> Residual {
    let mut max_abs: f64 = 0.0;
    let mut checked = 0;
    let mut exact_zero = true;
    for s in series {
        for c in &s.c {
            checked += 1;
            if !c.is_zero() {
                exact_zero = false;
                max_abs = max_abs.max(crate::exact::embed_numeric(c).norm());
            }
        }
    }
    Residual { exact_zero, max_abs, checked }
}

/// Residual of a series solution in a first-order system.
pub fn series_residual(sol: &LaurentSolution, target: &SystemDef) -> Result<Residual, SeriesError> {
    Ok(summarize(&system_residual(target, &sol.series, &sol.t0)?))
}

// ---------------------------------------------------------------------------
// Scalar equations.

/// Cleared form `den * u^(n) - num` as a polynomial in `u, ..., u^(n)`.
pub struct ClearedODE {
    pub vars: crate::mpoly::Vars,
    pub order: usize,
    /// Jet variables `u .. u^(n)` in `vars`.
    pub jets: Vec<usize>,
    pub poly: MPoly,
}

pub fn cleared(ode: &ScalarODE) -> ClearedODE {
    let top = format!("u{}", "'".repeat(ode.order));
    let mut names: Vec<String> = ode.vars.names().to_vec();
    names.push(top.clone());
    let vars = VarTable::new(&names);
    let num = ode.rhs.num.rebase(&vars).unwrap();
    let den = ode.rhs.den.rebase(&vars).unwrap();
    let un = MPoly::var(&vars, vars.idx(&top));
    let poly = &(&den * &un) - &num;
    let mut jets = ode.jets.clone();
    jets.push(vars.idx(&top));
    ClearedODE { vars, order: ode.order, jets, poly }
}

impl ClearedODE {
    fn inputs(&self, u: &Series, ode: &ScalarODE, t0: &QuadExt) -> Result<Vec<Series>, SeriesError> {
        let mut vals = vec![None; self.vars.len()];
        let mut d = u.clone();
        for &j in &self.jets {
            vals[j] = Some(d.clone());
            d = d.deriv();
        }
        if let Some(t) = ode.time {
            vals[t] = Some(Series::time(t0.clone(), u.c.len() + 4));
        }
        let mut missing = Vec::new();
        let out = vals
            .into_iter()
            .enumerate()
            .map(|(v, s)| {
                s.unwrap_or_else(|| {
                    if self.poly.occurs(v) {
                        missing.push(self.vars.name(v).to_string());
                    }
                    Series::constant(QuadExt::zero(), 1)
                })
            })
            .collect();
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(SeriesError::Symbolic(missing))
        }
    }

    /// Cleared residual evaluated on `u`.
    pub fn residual(&self, u: &Series, ode: &ScalarODE, t0: &QuadExt) -> Result<Series, SeriesError> {
        Ok(eval_poly(&self.poly, &self.inputs(u, ode, t0)?))
    }
}

/// Leading behaviour `u ~ c tau^(-m)` of a scalar equation.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarBalance {
    pub pole_order: i64,
    pub residue: QuadExt,
    /// Weight of the dominant terms: the cleared residual starts at `tau^(-weight)`.
    pub weight: i64,
    /// Indicial polynomial in the order `k` of the perturbation `tau^(k - m)`.
    pub indicial: UPoly,
}

impl ScalarBalance {
    pub fn resonances(&self) -> Vec<(Root, u32)> {
        roots(&self.indicial)
    }
}

/// Falling factorial `a (a-1) ... (a-j+1)`.
fn falling(a: &QuadExt, j: usize) -> QuadExt {
    (0..j).fold(QuadExt::one(), |acc, i| &acc * &(a - &QuadExt::int(i as i64)))
}

fn falling_poly(shift: i64, j: usize) -> UPoly {
    // (k + shift)(k + shift - 1)... as a polynomial in k.
    (0..j).fold(UPoly::constant(QuadExt::one()), |acc, i| acc.mul(&UPoly::new(vec![QuadExt::int(shift - i as i64), QuadExt::one()])))
}

fn dominant_vanishes(p: &MPoly, jets: &[usize], m: i64, lead: &[(usize, QuadExt)]) -> bool {
    if p.is_constant() {
        return false;
    }
    let w = |e: &[u16]| -> i64 { jets.iter().enumerate().map(|(k, &v)| e[v] as i64 * (m + k as i64)).sum() };
    let top = p.terms().map(|(e, _)| w(e)).max().unwrap_or(0);
    let hat = MPoly::from_terms(p.vars(), p.terms().filter(|(e, _)| w(e) == top).map(|(e, c)| (e.clone(), c.clone())));
    hat.eval_partial(lead).as_constant().map(|c| c.is_zero()).unwrap_or(false)
}

/// Balances `u ~ c tau^(-m)` with `1 <= m <= max_order` and `c != 0`.
pub fn scalar_balances(ode: &ScalarODE, max_order: i64) -> Result<Vec<ScalarBalance>, SeriesError> {
    let cl = cleared(ode);
    let mut out = Vec::new();
    for m in 1..=max_order {
        // Weight of each term with u^(k) of weight m + k.
        let w = |e: &[u16]| -> i64 { cl.jets.iter().enumerate().map(|(k, &v)| e[v] as i64 * (m + k as i64)).sum() };
        let top = cl.poly.terms().map(|(e, _)| w(e)).max().unwrap_or(0);
        let hat = MPoly::from_terms(&cl.vars, cl.poly.terms().filter(|(e, _)| w(e) == top).map(|(e, c)| (e.clone(), c.clone())));
        let extra: Vec<String> = hat.support().into_iter().filter(|v| !cl.jets.contains(v)).map(|v| cl.vars.name(v).to_string()).collect();
        if !extra.is_empty() {
            return Err(SeriesError::Symbolic(extra));
        }
        // L(c): u^(k) -> c * falling(-m, k).
        let mut lc = UPoly::zero();
        for (e, c) in hat.terms() {
            let mut t = UPoly::constant(c.clone());
            for (k, &v) in cl.jets.iter().enumerate() {
                let f = falling(&QuadExt::int(-m), k);
                for _ in 0..e[v] {
                    t = t.mul(&UPoly::new(vec![QuadExt::zero(), f.clone()]));
                }
            }
            lc = lc.add(&t);
        }
        if lc.is_zero() {
            continue;
        }
        for (r, _) in roots(&lc) {
            let Some(c) = r.exact().cloned() else { continue };
            if c.is_zero() {
                continue;
            }
            let lead: Vec<(usize, QuadExt)> =
                cl.jets.iter().enumerate().map(|(k, &v)| (v, &c * &falling(&QuadExt::int(-m), k))).collect();
            // Drop branches on which the leading part of the denominator cancels.
            if dominant_vanishes(&ode.rhs.den.rebase(&cl.vars).unwrap(), &cl.jets, m, &lead) {
                continue;
            }
            // Indicial polynomial: linearize the dominant part at the leading term.
            let mut ind = UPoly::zero();
            for (j, &v) in cl.jets.iter().enumerate() {
                let d = hat.partial(v).eval_partial(&lead);
                let Some(dv) = d.as_constant() else { return Err(SeriesError::Symbolic(vec![])) };
                if dv.is_zero() {
                    continue;
                }
                ind = ind.add(&falling_poly(-m, j).scale(&dv));
            }
            out.push(ScalarBalance { pole_order: m, residue: c, weight: top, indicial: ind });
        }
    }
    Ok(out)
}

/// Laurent solution of a scalar equation for a balance; free coefficients by
/// power of `tau` (unlisted ones are zero).
pub fn scalar_laurent(ode: &ScalarODE, b: &ScalarBalance, t0: &QuadExt, free: &[(i64, QuadExt)], n: i64) -> Result<(Series, Vec<FreeValue>), SeriesError> {
    let cl = cleared(ode);
    let m = b.pole_order;
    let mut u = Series::new(-m, vec![b.residue.clone()]);
    let mut used = Vec::new();
    // Extra precision so the cleared residual is known at the needed power.
    let pad = cl.order as i64 + 1;
    for k in 1..=n {
        let target = k - b.weight;
        let eval = |ck: &QuadExt, u: &Series| -> Result<QuadExt, SeriesError> {
            let mut v = u.clone();
            v.c.push(ck.clone());
            for _ in 0..pad {
                v.c.push(QuadExt::zero());
            }
            let r = cl.residual(&v, ode, t0)?;
            r.coeff(target).ok_or(SeriesError::Precision(target))
        };
        let e0 = eval(&QuadExt::zero(), &u)?;
        let e1 = eval(&QuadExt::one(), &u)?;
        let p = &e1 - &e0;
        let ck = if p.is_zero() {
            if !e0.is_zero() {
                return Err(SeriesError::Obstruction { order: k });
            }
            let v = free.iter().find(|(pw, _)| *pw == k - m).map(|(_, v)| v.clone()).unwrap_or_else(QuadExt::zero);
            used.push(FreeValue { var: 0, power: k - m, value: v.clone() });
            v
        } else {
            -&(&e0 * &p.inv().unwrap())
        };
        u.c.push(ck);
    }
    Ok((u, used))
}

/// Cleared residual of a scalar series in a scalar equation, over the orders it determines.
pub fn scalar_residual(u: &Series, ode: &ScalarODE, t0: &QuadExt) -> Result<Residual, SeriesError> {
    let cl = cleared(ode);
    let r = cl.residual(u, ode, t0)?;
    let den = eval_poly(&ode.rhs.den.rebase(&cl.vars).unwrap(), &cl.inputs(u, ode, t0)?);
    if den.is_zero_to_precision() {
        return Err(SeriesError::ZeroDivisor);
    }
    Ok(summarize(&[r]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{get_scalar, get_system, jet_system};
    use crate::mpoly::parse;

    fn q(n: i64) -> QuadExt {
        QuadExt::int(n)
    }

    fn fr(n: i64, d: i64) -> QuadExt {
        QuadExt::frac(n, d)
    }

    fn logistic() -> SystemDef {
        let v = VarTable::new(&["x"]);
        SystemDef {
            name: "logistic".into(),
            vars: v.clone(),
            state: vec![0],
            field: vec![parse(&v, "x^2").unwrap()],
            params: vec![],
            time: None,
            rules: None,
            dim: 1,
            polynomial: true,
        }
    }

    #[test]
    fn series_arithmetic() {
        // 1/(1 - tau) = 1 + tau + tau^2 + ...
        let one = Series::constant(q(1), 5);
        let d = Series::new(0, vec![q(1), q(-1), q(0), q(0), q(0)]);
        let g = one.div(&d).unwrap();
        assert_eq!(g.c, vec![q(1); 5]);
        assert_eq!(g.mul(&d).c, one.c);
        // d/dtau tau^-1 = -tau^-2
        let p = Series::new(-1, vec![q(1)]);
        assert_eq!(p.deriv().val, -2);
        assert_eq!(p.deriv().c, vec![q(-1)]);
        assert!(Series::new(0, vec![q(0), q(0)]).div(&Series::new(0, vec![q(0)])).is_err());
    }

    #[test]
    fn logistic_balance_and_taylor() {
        let s = logistic();
        let b = dominant_balances(&s, 6, &q(0)).unwrap();
        assert_eq!(b, vec![Balance { pole_orders: vec![1], leading: vec![q(-1)] }]);
        let k = kowalevski(&s, &b[0], &q(0)).unwrap();
        assert_eq!(k.resonances.len(), 1);
        assert!(k.has(-1));
        let t = jet_taylor(&s, &[q(1)], &q(0), 4).unwrap();
        assert_eq!(t.series[0].c, vec![q(1); 5]);
    }

    #[test]
    fn system_one_balances() {
        let s = get_system("chazy.III.system", &[]).unwrap();
        let bs = dominant_balances(&s, 6, &q(0)).unwrap();
        let mut got: Vec<Vec<QuadExt>> = bs.iter().map(|b| b.leading.clone()).collect();
        got.sort_by_key(|v| format!("{v:?}"));
        let mut want = vec![vec![q(-1), q(0), q(0)], vec![q(0), q(-1), q(0)], vec![q(0), q(0), q(-1)], vec![q(0), q(-2), q(-1)]];
        want.sort_by_key(|v| format!("{v:?}"));
        assert_eq!(got, want);
        assert!(bs.iter().all(|b| b.pole_orders == vec![1, 1, 1]));
    }

    fn balance(s: &SystemDef, lead: [i64; 3]) -> Balance {
        dominant_balances(s, 6, &q(0)).unwrap().into_iter().find(|b| b.leading == lead.map(q).to_vec()).unwrap()
    }

    #[test]
    fn free_parameter_counts() {
        let s = get_system("chazy.III.system", &[]).unwrap();
        for (lead, count) in [([-1, 0, 0], 0), ([0, -1, 0], 2), ([0, 0, -1], 2), ([0, -2, -1], 1)] {
            let b = balance(&s, lead);
            let k = kowalevski(&s, &b, &q(0)).unwrap();
            assert!(k.has(-1));
            let sol = laurent_extend(&s, &b, &q(0), &[], 8).unwrap();
            assert_eq!(sol.free_count(), count, "{lead:?} resonances {:?}", k.resonances);
        }
    }

    #[test]
    fn case_four_coefficients() {
        let s = get_system("chazy.III.system", &[]).unwrap();
        let b = balance(&s, [0, -2, -1]);
        for a3 in [1, 2, -3] {
            let a = q(a3);
            let sol = laurent_extend(&s, &b, &q(0), &[FreeValue::new(0, 2, a.clone())], 6).unwrap();
            assert_eq!(sol.coeff(0, 2), Some(a.clone()));
            assert_eq!(sol.coeff(0, 5), Some(&fr(-4, 5) * &a.pow(2)));
            assert_eq!(sol.coeff(1, 2), Some(&fr(17, 5) * &a));
            assert_eq!(sol.coeff(1, 5), Some(&fr(-44, 175) * &a.pow(2)));
            assert_eq!(sol.coeff(2, 2), Some(&q(8) * &a));
            assert_eq!(sol.coeff(2, 5), Some(&fr(172, 35) * &a.pow(2)));
            assert!(series_residual(&sol, &s).unwrap().exact_zero);
        }
    }

    #[test]
    fn case_two_coefficients() {
        let s = get_system("chazy.III.system", &[]).unwrap();
        let b = balance(&s, [0, -1, 0]);
        let sol = laurent_extend(&s, &b, &q(0), &[FreeValue::new(0, 1, q(1)), FreeValue::new(2, 0, q(2))], 3).unwrap();
        assert_eq!(sol.coeff(0, 1), Some(q(1)));
        assert_eq!(sol.coeff(0, 2), Some(q(-1)));
        assert_eq!(sol.coeff(1, 0), Some(q(1)));
        assert_eq!(sol.coeff(2, 0), Some(q(2)));
        assert_eq!(sol.coeff(2, 1), Some(q(24)));
        // (28 a2 + c1^2)/4 = 8
        assert_eq!(sol.coeff(1, 1), Some(q(8)));
    }

    #[test]
    fn case_three_coefficients() {
        let s = get_system("chazy.III.system", &[]).unwrap();
        let b = balance(&s, [0, 0, -1]);
        let (a1, b2) = (q(2), q(3));
        let sol = laurent_extend(&s, &b, &q(0), &[FreeValue::new(0, 0, a1.clone()), FreeValue::new(1, 1, b2.clone())], 4).unwrap();
        assert_eq!(sol.coeff(0, 2), Some(-&(&(&a1 * &b2) * &fr(1, 2))));
        assert_eq!(sol.coeff(1, 2), Some(&(&a1 * &b2) * &fr(11, 2)));
        assert_eq!(sol.coeff(2, 0), Some(&q(-4) * &a1));
        assert_eq!(sol.coeff(2, 1), Some(&q(-12) * &a1.pow(2)));
        assert_eq!(sol.coeff(2, 2), Some(&(&q(-4) * &a1) * &b2));
    }

    #[test]
    fn chazy_ix_jet_balances() {
        let s = jet_system(&get_scalar("chazy.IX", &[("delta", q(0))]).unwrap()).unwrap();
        let bs = dominant_balances(&s, 4, &q(0)).unwrap();
        assert!(!bs.is_empty());
        for b in &bs {
            assert_eq!(b.pole_orders, vec![1, 2, 3]);
            // y = u' and z = u'': leading coefficients follow from u ~ c/tau.
            let c = &b.leading[0];
            assert_eq!(b.leading[1], -c);
            assert_eq!(b.leading[2], c * &q(2));
        }
    }

    #[test]
    fn chazy_ix_taylor_jet() {
        let s = jet_system(&get_scalar("chazy.IX", &[("delta", q(0))]).unwrap()).unwrap();
        let t = jet_taylor(&s, &[q(1), q(0), q(0)], &q(0), 3).unwrap();
        assert_eq!(t.series[0].c, vec![q(1), q(0), q(0), q(9)]);
        assert!(series_residual(&t, &s).unwrap().exact_zero);
    }

    #[test]
    fn obstruction_is_reported() {
        // x = -1/tau; y' = -xy + x^2 + 1 has resonance 2 and the constant breaks it.
        let v = VarTable::new(&["x", "y"]);
        let mk = |g: &str| SystemDef {
            name: "log".into(),
            vars: v.clone(),
            state: vec![0, 1],
            field: vec![parse(&v, "x^2").unwrap(), parse(&v, g).unwrap()],
            params: vec![],
            time: None,
            rules: None,
            dim: 2,
            polynomial: true,
        };
        let bad = mk("-x*y + x^2 + 1");
        let b = dominant_balances(&bad, 2, &q(0)).unwrap();
        let b = b.iter().find(|b| b.leading == vec![q(-1), fr(-1, 2)]).unwrap();
        assert!(kowalevski(&bad, b, &q(0)).unwrap().has(2));
        assert_eq!(laurent_extend(&bad, b, &q(0), &[], 4).unwrap_err(), SeriesError::Obstruction { order: 2 });
        let good = mk("-x*y + x^2");
        let sol = laurent_extend(&good, b, &q(0), &[FreeValue::new(1, 1, q(7))], 4).unwrap();
        assert_eq!(sol.coeff(1, 1), Some(q(7)));
        assert_eq!(sol.free_count(), 1);
    }

    #[test]
    fn v_equation_residues() {
        let ode = get_scalar("chazy.III.v", &[]).unwrap();
        let bs = scalar_balances(&ode, 3).unwrap();
        let mut res: Vec<QuadExt> = bs.iter().filter(|b| b.pole_order == 1).map(|b| b.residue.clone()).collect();
        res.sort_by_key(|x| format!("{x:?}"));
        let mut want = vec![q(-1), q(-2), q(1)];
        want.sort_by_key(|x| format!("{x:?}"));
        assert_eq!(res, want);
    }

    #[test]
    fn v_solutions() {
        let ode = get_scalar("chazy.III.v", &[]).unwrap();
        let bs = scalar_balances(&ode, 1).unwrap();
        let find = |c: i64| bs.iter().find(|b| b.residue == q(c)).unwrap().clone();
        // v3 = 1/tau
        let (v3, _) = scalar_laurent(&ode, &find(1), &q(0), &[], 6).unwrap();
        assert!(v3.c[1..].iter().all(|c| c.is_zero()));
        // v1 with (a1, a2) = (1, 1)
        let (v1, used) = scalar_laurent(&ode, &find(-1), &q(0), &[(0, q(1)), (1, q(1))], 5).unwrap();
        assert_eq!(used.len(), 2);
        assert_eq!(v1.coeff(2), Some(q(1)));
        assert!(scalar_residual(&v1, &ode, &q(0)).unwrap().exact_zero);
        // v2 with a1 = 1: coefficient 2/21 at tau^5.
        let (v2, _) = scalar_laurent(&ode, &find(-2), &q(0), &[(2, q(1))], 7).unwrap();
        assert_eq!(v2.coeff(2), Some(q(1)));
        assert_eq!(v2.coeff(5), Some(fr(2, 21)));
        assert!(scalar_residual(&v2, &ode, &q(0)).unwrap().exact_zero);
    }

    #[test]
    fn simple_poles_of_chazy_iii() {
        let ode = get_scalar("chazy.III.canonical", &[]).unwrap();
        let pole = |c: i64, a: i64| Series::new(-2, vec![q(a), q(c), q(0), q(0), q(0), q(0), q(0), q(0)]);
        // a/tau^2 - 6/tau solves it for every a; c/tau only for c = -6.
        for a in [0, 1, -5] {
            assert!(scalar_residual(&pole(-6, a), &ode, &q(0)).unwrap().exact_zero);
        }
        assert!(!scalar_residual(&pole(-1, 0), &ode, &q(0)).unwrap().exact_zero);
        let bs = scalar_balances(&ode, 2).unwrap();
        assert!(bs.iter().any(|b| b.pole_order == 1 && b.residue == q(-6)));
    }

    #[test]
    fn v_denominator_branch_is_dropped() {
        // v = 2/tau makes v^2 + 2v' vanish at leading order.
        let ode = get_scalar("chazy.III.v", &[]).unwrap();
        let bs = scalar_balances(&ode, 1).unwrap();
        assert!(bs.iter().all(|b| b.residue != q(2)));
    }
}
