//! Multivariate polynomials and rational functions over `QuadExt`, with
//! derivation rules, Jacobians, substitution and exact divisibility.
//!
//! Monomials are ordered lexicographically in `VarTable` order (the first
//! variable is the most significant).  `RatFun` keeps numerator and
//! denominator unreduced apart from cheap cancellations (constant
//! denominators, common monomial factors, identical denominators).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::Zero;
use serde::Deserialize;

use crate::exact::{embed_numeric, CScalar, ExactError, QuadExt, Rational};

/// Hard cap on stored terms; exceeding it aborts the computation.
pub const TERM_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("variable tables differ")]
    VarTableMismatch,
    #[error("term count {0} exceeds the limit")]
    TermLimit(usize),
    #[error("no derivation rule for variable `{0}`")]
    MissingRule(String),
    #[error("denominator vanishes identically")]
    ZeroDenominator,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Ordered variable names.  The order fixes the monomial order.
#[derive(Clone)]
pub struct VarTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

pub type Vars = Arc<VarTable>;

impl VarTable {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Vars {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            let prev = index.insert(n.clone(), i);
            assert!(prev.is_none(), "duplicate variable name `{n}`");
        }
        Arc::new(VarTable { names, index })
    }

    /// Names of `first`, then any names of `rest` not yet present.
    pub fn union(tables: &[&VarTable]) -> Vars {
        let mut names: Vec<String> = Vec::new();
        for t in tables {
            for n in &t.names {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        VarTable::new(&names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn idx(&self, name: &str) -> usize {
        self.index_of(name).unwrap_or_else(|| panic!("unknown variable `{name}`"))
    }
}

impl PartialEq for VarTable {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
    }
}

impl Eq for VarTable {}

impl fmt::Debug for VarTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.names)
    }
}

fn same_table(a: &Vars, b: &Vars) -> bool {
    Arc::ptr_eq(a, b) || a.names == b.names
}

pub type Exps = Vec<u16>;

#[derive(Clone)]
pub struct MPoly {
    vars: Vars,
    terms: BTreeMap<Exps, QuadExt>,
}

impl PartialEq for MPoly {
    fn eq(&self, other: &Self) -> bool {
        same_table(&self.vars, &other.vars) && self.terms == other.terms
    }
}

impl Eq for MPoly {}

impl MPoly {
    pub fn zero(vars: &Vars) -> Self {
        MPoly { vars: vars.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(vars: &Vars, c: QuadExt) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; vars.len()], c);
        }
        p
    }

    pub fn one(vars: &Vars) -> Self {
        Self::constant(vars, QuadExt::one())
    }

    pub fn var(vars: &Vars, i: usize) -> Self {
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        Self::monomial(vars, e, QuadExt::one())
    }

    pub fn var_named(vars: &Vars, name: &str) -> Self {
        Self::var(vars, vars.idx(name))
    }

    pub fn monomial(vars: &Vars, e: Exps, c: QuadExt) -> Self {
        assert_eq!(e.len(), vars.len());
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(e, c);
        }
        p
    }

    pub fn from_terms(vars: &Vars, terms: impl IntoIterator<Item = (Exps, QuadExt)>) -> Self {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &QuadExt)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, e: Exps, c: QuadExt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_limit(&self) -> Result<(), AlgebraError> {
        if self.terms.len() > TERM_LIMIT {
            Err(AlgebraError::TermLimit(self.terms.len()))
        } else {
            Ok(())
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    /// The constant term.
    pub fn constant_term(&self) -> QuadExt {
        self.terms.get(&vec![0u16; self.vars.len()]).cloned().unwrap_or_else(QuadExt::zero)
    }

    /// Value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<QuadExt> {
        if self.is_constant() {
            Some(self.constant_term())
        } else {
            None
        }
    }

    /// Lex-leading term.
    pub fn leading(&self) -> Option<(&Exps, &QuadExt)> {
        self.terms.iter().next_back()
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|e| e[v] as u32).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().map(|&k| k as u32).sum()).max().unwrap_or(0)
    }

    pub fn occurs(&self, v: usize) -> bool {
        self.terms.keys().any(|e| e[v] > 0)
    }

    /// Indices of variables that occur.
    pub fn support(&self) -> Vec<usize> {
        (0..self.vars.len()).filter(|&v| self.occurs(v)).collect()
    }

    /// The common radicand of all coefficients (0 if all rational).
    pub fn radicand(&self) -> Result<i64, ExactError> {
        let mut d = 0;
        for c in self.terms.values() {
            match (d, c.d()) {
                (_, 0) => {}
                (0, x) => d = x,
                (x, y) if x == y => {}
                (x, y) => return Err(ExactError::IncompatibleRadicals(x, y)),
            }
        }
        Ok(d)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        if !same_table(&self.vars, &other.vars) {
            return Err(AlgebraError::VarTableMismatch);
        }
        let (mut big, small) = if self.len() >= other.len() { (self.clone(), other) } else { (other.clone(), self) };
        for (e, c) in &small.terms {
            match big.terms.get_mut(e) {
                Some(x) => {
                    let s = x.checked_add(c)?;
                    if s.is_zero() {
                        big.terms.remove(e);
                    } else {
                        *x = s;
                    }
                }
                None => {
                    big.terms.insert(e.clone(), c.clone());
                }
            }
        }
        big.check_limit()?;
        Ok(big)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.try_add(&-other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        if !same_table(&self.vars, &other.vars) {
            return Err(AlgebraError::VarTableMismatch);
        }
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(&self.vars));
        }
        if let Some(c) = self.as_constant() {
            return other.try_scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.try_scale(&c);
        }
        let n = self.vars.len();
        let mut acc: HashMap<Exps, QuadExt> = HashMap::with_capacity(self.len() * other.len());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let mut e = Vec::with_capacity(n);
                for k in 0..n {
                    e.push(e1[k] + e2[k]);
                }
                let c = c1.checked_mul(c2)?;
                match acc.get_mut(&e) {
                    Some(x) => *x = x.checked_add(&c)?,
                    None => {
                        acc.insert(e, c);
                    }
                }
                if acc.len() > TERM_LIMIT {
                    return Err(AlgebraError::TermLimit(acc.len()));
                }
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(MPoly { vars: self.vars.clone(), terms })
    }

    pub fn try_scale(&self, c: &QuadExt) -> Result<Self, AlgebraError> {
        if c.is_zero() {
            return Ok(Self::zero(&self.vars));
        }
        let mut terms = BTreeMap::new();
        for (e, x) in &self.terms {
            terms.insert(e.clone(), x.checked_mul(c)?);
        }
        Ok(MPoly { vars: self.vars.clone(), terms })
    }

    pub fn scale(&self, c: &QuadExt) -> Self {
        self.try_scale(c).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn try_pow(&self, e: u32) -> Result<Self, AlgebraError> {
        let mut acc = Self::one(&self.vars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.try_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.try_mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn pow(&self, e: u32) -> Self {
        self.try_pow(e).unwrap_or_else(|err| panic!("{err}"))
    }

    /// Partial derivative with respect to variable index `v`.
    pub fn partial(&self, v: usize) -> Self {
        let mut p = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if e[v] > 0 {
                let mut e2 = e.clone();
                e2[v] -= 1;
                p.terms.insert(e2, c * &QuadExt::int(e[v] as i64));
            }
        }
        p
    }

    /// Exact evaluation at a full point.
    pub fn eval(&self, point: &[QuadExt]) -> QuadExt {
        assert_eq!(point.len(), self.vars.len());
        let mut cache: Vec<Vec<QuadExt>> = vec![Vec::new(); point.len()];
        let mut acc = QuadExt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    let pw = &mut cache[v];
                    if pw.is_empty() {
                        pw.push(QuadExt::one());
                    }
                    while pw.len() <= k as usize {
                        let next = pw.last().unwrap() * &point[v];
                        pw.push(next);
                    }
                    t = &t * &pw[k as usize];
                }
            }
            acc = &acc + &t;
        }
        acc
    }

    /// Numeric evaluation at a full point.
    pub fn eval_c(&self, point: &[CScalar]) -> CScalar {
        let mut acc = CScalar::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut t = embed_numeric(c);
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= point[v].powu(k as u32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Replace some variables by constants, keeping the table.
    pub fn eval_partial(&self, vals: &[(usize, QuadExt)]) -> Self {
        let mut p = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let mut t = c.clone();
            for (v, x) in vals {
                let k = e[*v];
                if k > 0 {
                    t = &t * &x.pow(k as u32);
                    e2[*v] = 0;
                }
            }
            p.add_term(e2, t);
        }
        p
    }

    /// Substitute polynomials for variables (simultaneously).
    pub fn subst_poly(&self, bindings: &[(usize, MPoly)]) -> Result<Self, AlgebraError> {
        let map: HashMap<usize, &MPoly> = bindings.iter().map(|(v, p)| (*v, p)).collect();
        let mut pows: HashMap<(usize, u16), MPoly> = HashMap::new();
        let mut acc = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let mut e_keep = e.clone();
            let mut factor = Self::one(&self.vars);
            for (&v, p) in &map {
                let k = e[v];
                if k > 0 {
                    e_keep[v] = 0;
                    if !pows.contains_key(&(v, k)) {
                        pows.insert((v, k), p.try_pow(k as u32)?);
                    }
                    factor = factor.try_mul(&pows[&(v, k)])?;
                }
            }
            let mono = Self::monomial(&self.vars, e_keep, c.clone());
            acc = acc.try_add(&mono.try_mul(&factor)?)?;
        }
        Ok(acc)
    }

    /// Move to a table containing all occurring variable names.
    pub fn rebase(&self, to: &Vars) -> Result<Self, AlgebraError> {
        if same_table(&self.vars, to) {
            return Ok(self.clone());
        }
        let mut map = Vec::with_capacity(self.vars.len());
        for (i, n) in self.vars.names.iter().enumerate() {
            match to.index_of(n) {
                Some(j) => map.push(Some(j)),
                None => {
                    if self.occurs(i) {
                        return Err(AlgebraError::UnknownVariable(n.clone()));
                    }
                    map.push(None);
                }
            }
        }
        let mut p = Self::zero(to);
        for (e, c) in &self.terms {
            let mut e2 = vec![0; to.len()];
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    e2[map[i].unwrap()] = k;
                }
            }
            p.add_term(e2, c.clone());
        }
        Ok(p)
    }

    /// Minimum exponent of each variable over all terms.
    pub fn monomial_content(&self) -> Exps {
        let n = self.vars.len();
        let mut m: Option<Exps> = None;
        for e in self.terms.keys() {
            m = Some(match m {
                None => e.clone(),
                Some(mut cur) => {
                    for k in 0..n {
                        cur[k] = cur[k].min(e[k]);
                    }
                    cur
                }
            });
        }
        m.unwrap_or_else(|| vec![0; n])
    }

    /// Divide by a monomial that divides every term.
    pub fn div_monomial(&self, m: &[u16]) -> Self {
        let mut p = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let e2: Exps = e.iter().zip(m).map(|(a, b)| a - b).collect();
            p.terms.insert(e2, c.clone());
        }
        p
    }

    /// Coefficients as a polynomial in variable `v`: `self = sum_k c_k v^k`.
    pub fn coeffs_in(&self, v: usize) -> Vec<MPoly> {
        let deg = self.degree_in(v) as usize;
        let mut out = vec![Self::zero(&self.vars); deg + 1];
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let k = e2[v] as usize;
            e2[v] = 0;
            out[k].terms.insert(e2, c.clone());
        }
        out
    }

    /// Exact quotient `num / self` by lex division, or `None` if the remainder is nonzero.
    pub fn divides_exactly(&self, num: &MPoly) -> Option<MPoly> {
        divides_exactly(self, num)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(e, c)| serde_json::json!({"e": e, "c": c}))
            .collect();
        serde_json::json!({"vars": self.vars.names, "terms": terms})
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, AlgebraError> {
        #[derive(Deserialize)]
        struct T {
            e: Vec<u16>,
            c: QuadExt,
        }
        #[derive(Deserialize)]
        struct P {
            vars: Vec<String>,
            terms: Vec<T>,
        }
        let p: P = serde_json::from_value(v.clone()).map_err(|e| AlgebraError::Parse(e.to_string()))?;
        let vars = VarTable::new(&p.vars);
        let mut out = MPoly::zero(&vars);
        for t in p.terms {
            if t.e.len() != vars.len() {
                return Err(AlgebraError::Parse("exponent length".into()));
            }
            out.add_term(t.e, t.c);
        }
        Ok(out)
    }
}

/// Lex-leading-term division.  For a single divisor the algorithm never meets a
/// non-divisible leading term when the division is exact, so the first such
/// term proves a nonzero remainder.
pub fn divides_exactly(den: &MPoly, num: &MPoly) -> Option<MPoly> {
    if den.is_zero() {
        return None;
    }
    if let Some(c) = den.as_constant() {
        return Some(num.scale(&c.inv().ok()?));
    }
    let (lde, ldc) = den.leading().map(|(e, c)| (e.clone(), c.clone()))?;
    let ldc_inv = ldc.inv().ok()?;
    let mut rem = num.clone();
    let mut q = MPoly::zero(num.vars());
    let mut steps = 0usize;
    while let Some((e, c)) = rem.leading().map(|(e, c)| (e.clone(), c.clone())) {
        if e.iter().zip(&lde).any(|(a, b)| a < b) {
            return None;
        }
        let qe: Exps = e.iter().zip(&lde).map(|(a, b)| a - b).collect();
        let qc = &c * &ldc_inv;
        let t = MPoly::monomial(num.vars(), qe, qc);
        rem = rem.try_sub(&den.try_mul(&t).ok()?).ok()?;
        q = q.try_add(&t).ok()?;
        steps += 1;
        if steps > TERM_LIMIT {
            return None;
        }
    }
    Some(q)
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let mut mono = Vec::new();
            for (v, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => mono.push(self.vars.names[v].clone()),
                    _ => mono.push(format!("{}^{}", self.vars.names[v], k)),
                }
            }
            let mono = mono.join("*");
            let (neg, mag) = if c.is_rational() && c.a() < &Rational::zero() {
                (true, -c.clone())
            } else {
                (false, c.clone())
            };
            let coef = if mag.is_rational() { mag.to_string() } else { format!("({mag})") };
            let body = if mono.is_empty() {
                coef
            } else if mag.is_one() {
                mono
            } else {
                format!("{coef}*{mono}")
            };
            if first {
                write!(f, "{}{}", if neg { "-" } else { "" }, body)?;
            } else {
                write!(f, " {} {}", if neg { "-" } else { "+" }, body)?;
            }
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

macro_rules! poly_binop {
    ($tr:ident, $method:ident, $try:ident) => {
        impl<'a> $tr<&'a MPoly> for &'a MPoly {
            type Output = MPoly;
            fn $method(self, rhs: &'a MPoly) -> MPoly {
                self.$try(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr<MPoly> for MPoly {
            type Output = MPoly;
            fn $method(self, rhs: MPoly) -> MPoly {
                (&self).$method(&rhs)
            }
        }
    };
}

poly_binop!(Add, add, try_add);
poly_binop!(Sub, sub, try_sub);
poly_binop!(Mul, mul, try_mul);

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        MPoly { vars: self.vars.clone(), terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }
}

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        -&self
    }
}

/// Quotient of two polynomials over one table.
#[derive(Clone)]
pub struct RatFun {
    pub num: MPoly,
    pub den: MPoly,
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.as_constant().map(|c| c.is_one()).unwrap_or(false) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<MPoly> for RatFun {
    fn from(p: MPoly) -> Self {
        RatFun::poly(p)
    }
}

impl RatFun {
    pub fn poly(p: MPoly) -> Self {
        let den = MPoly::one(p.vars());
        RatFun { num: p, den }
    }

    pub fn new(num: MPoly, den: MPoly) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        if !same_table(num.vars(), den.vars()) {
            return Err(AlgebraError::VarTableMismatch);
        }
        Ok(RatFun { num, den }.tidy())
    }

    pub fn zero(vars: &Vars) -> Self {
        Self::poly(MPoly::zero(vars))
    }

    pub fn one(vars: &Vars) -> Self {
        Self::poly(MPoly::one(vars))
    }

    pub fn constant(vars: &Vars, c: QuadExt) -> Self {
        Self::poly(MPoly::constant(vars, c))
    }

    pub fn var(vars: &Vars, i: usize) -> Self {
        Self::poly(MPoly::var(vars, i))
    }

    pub fn vars(&self) -> &Vars {
        self.num.vars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_poly(&self) -> bool {
        self.den.is_constant()
    }

    /// Cheap normal form: constant denominators folded, common monomials cancelled.
    pub fn tidy(mut self) -> Self {
        if self.num.is_zero() {
            self.den = MPoly::one(self.num.vars());
            return self;
        }
        if let Some(c) = self.den.as_constant() {
            if !c.is_one() {
                self.num = self.num.scale(&c.inv().expect("nonzero constant"));
                self.den = MPoly::one(self.num.vars());
            }
            return self;
        }
        let m1 = self.num.monomial_content();
        let m2 = self.den.monomial_content();
        let m: Exps = m1.iter().zip(&m2).map(|(a, b)| *a.min(b)).collect();
        if m.iter().any(|&k| k > 0) {
            self.num = self.num.div_monomial(&m);
            self.den = self.den.div_monomial(&m);
        }
        // Make the denominator's leading coefficient 1.
        let lc = self.den.leading().map(|(_, c)| c.clone()).unwrap();
        if !lc.is_one() {
            let inv = lc.inv().expect("nonzero");
            self.num = self.num.scale(&inv);
            self.den = self.den.scale(&inv);
        }
        if let Some(c) = self.den.as_constant() {
            self.num = self.num.scale(&c.inv().unwrap());
            self.den = MPoly::one(self.num.vars());
        }
        self
    }

    /// Polynomial form if the denominator divides the numerator exactly.
    pub fn to_poly(&self) -> Option<MPoly> {
        if let Some(c) = self.den.as_constant() {
            return Some(self.num.scale(&c.inv().ok()?));
        }
        divides_exactly(&self.den, &self.num)
    }

    /// Try to cancel the denominator exactly; returns the input unchanged otherwise.
    pub fn reduce(self) -> Self {
        match self.to_poly() {
            Some(p) => RatFun::poly(p),
            None => self,
        }
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, AlgebraError> {
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(o.clone());
        }
        if self.den == o.den {
            return Ok(RatFun { num: self.num.try_add(&o.num)?, den: self.den.clone() }.tidy());
        }
        if o.den.is_constant() {
            let n = o.num.try_mul(&self.den)?.try_scale(&o.den.constant_term().inv()?)?;
            return Ok(RatFun { num: self.num.try_add(&n)?, den: self.den.clone() }.tidy());
        }
        if self.den.is_constant() {
            return o.try_add(self);
        }
        if let Some(q) = divides_exactly(&self.den, &o.den) {
            let num = self.num.try_mul(&q)?.try_add(&o.num)?;
            return Ok(RatFun { num, den: o.den.clone() }.tidy());
        }
        if let Some(q) = divides_exactly(&o.den, &self.den) {
            let num = o.num.try_mul(&q)?.try_add(&self.num)?;
            return Ok(RatFun { num, den: self.den.clone() }.tidy());
        }
        let num = self.num.try_mul(&o.den)?.try_add(&o.num.try_mul(&self.den)?)?;
        let den = self.den.try_mul(&o.den)?;
        Ok(RatFun { num, den }.tidy())
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self, AlgebraError> {
        if self.is_zero() || o.is_zero() {
            return Ok(Self::zero(self.vars()));
        }
        let num = self.num.try_mul(&o.num)?;
        let den = if o.den.is_constant() && o.den.constant_term().is_one() {
            self.den.clone()
        } else if self.den.is_constant() && self.den.constant_term().is_one() {
            o.den.clone()
        } else {
            self.den.try_mul(&o.den)?
        };
        Ok(RatFun { num, den }.tidy())
    }

    pub fn inv(&self) -> Result<Self, AlgebraError> {
        if self.num.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        Ok(RatFun { num: self.den.clone(), den: self.num.clone() }.tidy())
    }

    pub fn try_div(&self, o: &Self) -> Result<Self, AlgebraError> {
        self.try_mul(&o.inv()?)
    }

    pub fn scale(&self, c: &QuadExt) -> Self {
        RatFun { num: self.num.scale(c), den: self.den.clone() }.tidy()
    }

    pub fn powi(&self, e: i32) -> Result<Self, AlgebraError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let k = e.unsigned_abs();
        Ok(RatFun { num: base.num.try_pow(k)?, den: base.den.try_pow(k)? }.tidy())
    }

    pub fn partial(&self, v: usize) -> Self {
        if self.den.is_constant() {
            return RatFun { num: self.num.partial(v), den: self.den.clone() }.tidy();
        }
        let n = &(&self.num.partial(v) * &self.den) - &(&self.num * &self.den.partial(v));
        RatFun { num: n, den: &self.den * &self.den }.tidy()
    }

    /// Exact identity test by cross-multiplication.
    pub fn equals(&self, o: &Self) -> bool {
        if self.den == o.den {
            return self.num == o.num;
        }
        (&self.num * &o.den) == (&o.num * &self.den)
    }

    pub fn eval(&self, point: &[QuadExt]) -> Result<QuadExt, AlgebraError> {
        let d = self.den.eval(point);
        if d.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        Ok(self.num.eval(point).checked_div(&d)?)
    }

    pub fn eval_c(&self, point: &[CScalar]) -> CScalar {
        self.num.eval_c(point) / self.den.eval_c(point)
    }

    pub fn eval_partial(&self, vals: &[(usize, QuadExt)]) -> Result<Self, AlgebraError> {
        let den = self.den.eval_partial(vals);
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        Ok(RatFun { num: self.num.eval_partial(vals), den }.tidy())
    }

    pub fn rebase(&self, to: &Vars) -> Result<Self, AlgebraError> {
        Ok(RatFun { num: self.num.rebase(to)?, den: self.den.rebase(to)? })
    }

    /// Simultaneous substitution of rational functions for variables.
    pub fn substitute(&self, bindings: &[(usize, RatFun)]) -> Result<Self, AlgebraError> {
        let n = substitute(&self.num, bindings)?;
        if self.den.is_constant() {
            return Ok(n.scale(&self.den.constant_term().inv()?));
        }
        let d = substitute(&self.den, bindings)?;
        if d.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        n.try_div(&d)
    }

    pub fn substitute_named(&self, bindings: &[(&str, RatFun)]) -> Result<Self, AlgebraError> {
        let b: Vec<(usize, RatFun)> = bindings
            .iter()
            .map(|(n, f)| {
                self.vars().index_of(n).map(|i| (i, f.clone())).ok_or_else(|| AlgebraError::UnknownVariable(n.to_string()))
            })
            .collect::<Result<_, _>>()?;
        self.substitute(&b)
    }

    pub fn occurs(&self, v: usize) -> bool {
        self.num.occurs(v) || self.den.occurs(v)
    }
}

/// Substitute rational functions into a polynomial.
///
/// Bindings that share one denominator are grouped so that the result carries a
/// single power of each distinct denominator.
pub fn substitute(f: &MPoly, bindings: &[(usize, RatFun)]) -> Result<RatFun, AlgebraError> {
    let vars = f.vars().clone();
    for (_, b) in bindings {
        if !same_table(b.vars(), &vars) {
            return Err(AlgebraError::VarTableMismatch);
        }
    }
    // Group by denominator.
    let mut groups: Vec<(MPoly, Vec<usize>)> = Vec::new();
    for (k, (_, b)) in bindings.iter().enumerate() {
        if b.den.is_constant() {
            continue;
        }
        match groups.iter_mut().find(|(d, _)| *d == b.den) {
            Some(g) => g.1.push(k),
            None => groups.push((b.den.clone(), vec![k])),
        }
    }
    let group_of = |k: usize| groups.iter().position(|(_, ks)| ks.contains(&k));
    let mut group_deg = vec![0u32; groups.len()];
    for e in f.terms.keys() {
        let mut gd = vec![0u32; groups.len()];
        for (k, (v, _)) in bindings.iter().enumerate() {
            if let Some(g) = group_of(k) {
                gd[g] += e[*v] as u32;
            }
        }
        for g in 0..groups.len() {
            group_deg[g] = group_deg[g].max(gd[g]);
        }
    }
    // Polynomial numerators of the bindings (constant denominators folded in).
    let nums: Vec<MPoly> = bindings
        .iter()
        .map(|(_, b)| {
            if b.den.is_constant() {
                b.num.scale(&b.den.constant_term().inv().expect("nonzero"))
            } else {
                b.num.clone()
            }
        })
        .collect();
    let mut pow_cache: HashMap<(usize, u32), MPoly> = HashMap::new();
    let mut den_pow_cache: HashMap<(usize, u32), MPoly> = HashMap::new();
    let mut acc = MPoly::zero(&vars);
    let bound: Vec<usize> = bindings.iter().map(|(v, _)| *v).collect();
    for (e, c) in &f.terms {
        let mut keep = e.clone();
        for &v in &bound {
            keep[v] = 0;
        }
        let mut term = MPoly::monomial(&vars, keep, c.clone());
        let mut gd = vec![0u32; groups.len()];
        for (k, (v, _)) in bindings.iter().enumerate() {
            let p = e[*v] as u32;
            if p == 0 {
                continue;
            }
            if let Some(g) = group_of(k) {
                gd[g] += p;
            }
            if !pow_cache.contains_key(&(k, p)) {
                pow_cache.insert((k, p), nums[k].try_pow(p)?);
            }
            term = term.try_mul(&pow_cache[&(k, p)])?;
        }
        for g in 0..groups.len() {
            let missing = group_deg[g] - gd[g];
            if missing > 0 {
                if !den_pow_cache.contains_key(&(g, missing)) {
                    den_pow_cache.insert((g, missing), groups[g].0.try_pow(missing)?);
                }
                term = term.try_mul(&den_pow_cache[&(g, missing)])?;
            }
        }
        acc = acc.try_add(&term)?;
    }
    let mut den = MPoly::one(&vars);
    for (g, (d, _)) in groups.iter().enumerate() {
        if group_deg[g] > 0 {
            den = den.try_mul(&d.try_pow(group_deg[g])?)?;
        }
    }
    Ok(RatFun { num: acc, den }.tidy())
}

macro_rules! ratfun_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<'a> $tr<&'a RatFun> for &'a RatFun {
            type Output = RatFun;
            fn $method(self, rhs: &'a RatFun) -> RatFun {
                let f: fn(&RatFun, &RatFun) -> Result<RatFun, AlgebraError> = $body;
                f(self, rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr<RatFun> for RatFun {
            type Output = RatFun;
            fn $method(self, rhs: RatFun) -> RatFun {
                (&self).$method(&rhs)
            }
        }
    };
}

ratfun_binop!(Add, add, |a, b| a.try_add(b));
ratfun_binop!(Sub, sub, |a, b| a.try_add(&-b));
ratfun_binop!(Mul, mul, |a, b| a.try_mul(b));
ratfun_binop!(Div, div, |a, b| a.try_div(b));

impl Neg for &RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun { num: -&self.num, den: self.den.clone() }
    }
}

impl Neg for RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        -&self
    }
}

/// d(variable)/dt for the variables that have a rule.
#[derive(Clone, Debug)]
pub struct DerivationRules {
    vars: Vars,
    rules: BTreeMap<usize, RatFun>,
}

impl DerivationRules {
    pub fn new(vars: &Vars) -> Self {
        DerivationRules { vars: vars.clone(), rules: BTreeMap::new() }
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn set(&mut self, v: usize, rule: RatFun) {
        assert!(same_table(rule.vars(), &self.vars), "rule over a different table");
        self.rules.insert(v, rule);
    }

    pub fn set_named(&mut self, name: &str, rule: RatFun) {
        let v = self.vars.idx(name);
        self.set(v, rule);
    }

    /// Rule `v' = 0`, for constants such as parameters.
    pub fn constant(&mut self, v: usize) {
        self.set(v, RatFun::zero(&self.vars.clone()));
    }

    pub fn get(&self, v: usize) -> Option<&RatFun> {
        self.rules.get(&v)
    }

    pub fn rules(&self) -> impl Iterator<Item = (usize, &RatFun)> {
        self.rules.iter().map(|(k, v)| (*k, v))
    }

    /// Leibniz/chain rule on a polynomial.
    pub fn derive_poly(&self, f: &MPoly) -> Result<RatFun, AlgebraError> {
        let mut acc = RatFun::zero(&self.vars);
        for v in f.support() {
            let r = self.rules.get(&v).ok_or_else(|| AlgebraError::MissingRule(self.vars.name(v).to_string()))?;
            if r.is_zero() {
                continue;
            }
            let t = RatFun::poly(f.partial(v)).try_mul(r)?;
            acc = acc.try_add(&t)?;
        }
        Ok(acc)
    }

    /// Total derivative of a rational function.
    pub fn derive(&self, f: &RatFun) -> Result<RatFun, AlgebraError> {
        if f.den.is_constant() {
            return Ok(self.derive_poly(&f.num)?.scale(&f.den.constant_term().inv()?));
        }
        let dn = self.derive_poly(&f.num)?;
        let dd = self.derive_poly(&f.den)?;
        // (n' d - n d') / d^2, computed over a common denominator.
        let a = dn.try_mul(&RatFun::poly(f.den.clone()))?;
        let b = dd.try_mul(&RatFun::poly(f.num.clone()))?;
        let top = a.try_add(&-&b)?;
        top.try_mul(&RatFun { num: MPoly::one(&self.vars), den: f.den.try_mul(&f.den)? })
    }
}

/// Substitute named bindings into `f` across variable tables and express the
/// result over `out`.  Bindings are simultaneous; names not bound are carried
/// over by name, so every surviving variable must exist in `out`.
pub fn compose(f: &RatFun, bindings: &[(&str, &RatFun)], out: &Vars) -> Result<RatFun, AlgebraError> {
    let mut tables: Vec<&VarTable> = vec![out.as_ref(), f.vars().as_ref()];
    for (_, b) in bindings {
        tables.push(b.vars().as_ref());
    }
    let u = VarTable::union(&tables);
    let g = f.rebase(&u)?;
    let mut bs = Vec::with_capacity(bindings.len());
    for (name, b) in bindings {
        let Some(i) = u.index_of(name) else { continue };
        if g.occurs(i) {
            bs.push((i, b.rebase(&u)?));
        }
    }
    let r = if bs.is_empty() { g } else { g.substitute(&bs)? };
    r.rebase(out)
}

/// Jacobian matrix `d fields[i] / d vars[j]`.
pub fn jacobian(fields: &[RatFun], vars: &[usize]) -> Vec<Vec<RatFun>> {
    fields.iter().map(|f| vars.iter().map(|&v| f.partial(v)).collect()).collect()
}

/// Determinant by cofactor expansion (dimensions here are at most 4).
pub fn det(m: &[Vec<RatFun>]) -> Result<RatFun, AlgebraError> {
    let n = m.len();
    let vars = m[0][0].vars().clone();
    match n {
        0 => Ok(RatFun::one(&vars)),
        1 => Ok(m[0][0].clone()),
        _ => {
            let mut acc = RatFun::zero(&vars);
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<RatFun>> =
                    m[1..].iter().map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| x.clone()).collect()).collect();
                let t = m[0][j].try_mul(&det(&minor)?)?;
                acc = if j % 2 == 0 { acc.try_add(&t)? } else { acc.try_add(&-&t)? };
            }
            Ok(acc)
        }
    }
}

/// Parse a formula in fixture notation into a rational function over `vars`.
///
/// Grammar: `+ - * / ^` (integer exponents, possibly negative), parentheses,
/// integer literals and `sqrt(n)` for an integer `n`.  This is used to write
/// the catalog; user input goes through [`parse_constant`] only.
pub fn parse(vars: &Vars, src: &str) -> Result<RatFun, AlgebraError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, vars };
    let r = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(AlgebraError::Parse(format!("trailing input in `{src}`")));
    }
    Ok(r)
}

/// Parse a constant such as `-4/27` or `3/2*(sqrt(5)-1)`.
pub fn parse_constant(src: &str) -> Result<QuadExt, AlgebraError> {
    let v = VarTable::new::<&str>(&[]);
    parse(&v, src)?.to_poly().and_then(|p| p.as_constant()).ok_or_else(|| AlgebraError::Parse(format!("`{src}` is not a constant")))
}

/// Parse and require a polynomial result.
pub fn parse_poly(vars: &Vars, src: &str) -> Result<MPoly, AlgebraError> {
    let r = parse(vars, src)?;
    r.to_poly().ok_or_else(|| AlgebraError::Parse(format!("`{src}` is not a polynomial")))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(i64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, AlgebraError> {
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let t: String = cs[st..i].iter().collect();
            out.push(Tok::Num(t.parse().map_err(|_| AlgebraError::Parse(format!("bad number {t}")))?));
        } else if c.is_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_' || cs[i] == '\'') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(AlgebraError::Parse(format!("unexpected `{c}` in `{s}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a Vars,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<RatFun, AlgebraError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.try_add(&self.term()?)?;
            } else if self.eat('-') {
                acc = acc.try_add(&-self.term()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RatFun, AlgebraError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.try_mul(&self.unary()?)?;
            } else if self.eat('/') {
                acc = acc.try_div(&self.unary()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<RatFun, AlgebraError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<RatFun, AlgebraError> {
        let base = self.atom()?;
        if self.eat('^') {
            let neg = self.eat('-');
            match self.peek().cloned() {
                Some(Tok::Num(k)) => {
                    self.pos += 1;
                    let k = k as i32;
                    return base.powi(if neg { -k } else { k });
                }
                _ => return Err(AlgebraError::Parse("exponent must be an integer".into())),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RatFun, AlgebraError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(RatFun::constant(self.vars, QuadExt::int(n)))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(AlgebraError::Parse("missing `)`".into()));
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "sqrt" {
                    if !self.eat('(') {
                        return Err(AlgebraError::Parse("sqrt needs `(`".into()));
                    }
                    let neg = self.eat('-');
                    let n = match self.peek().cloned() {
                        Some(Tok::Num(n)) => n,
                        _ => return Err(AlgebraError::Parse("sqrt takes an integer".into())),
                    };
                    self.pos += 1;
                    if !self.eat(')') {
                        return Err(AlgebraError::Parse("missing `)`".into()));
                    }
                    let d = if neg { -n } else { n };
                    return Ok(RatFun::constant(self.vars, QuadExt::sqrt_of(d)));
                }
                match self.vars.index_of(&name) {
                    Some(i) => Ok(RatFun::var(self.vars, i)),
                    None => Err(AlgebraError::UnknownVariable(name)),
                }
            }
            other => Err(AlgebraError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use proptest::prelude::*;

    fn xyz() -> Vars {
        VarTable::new(&["x", "y", "z"])
    }

    fn p(v: &Vars, s: &str) -> MPoly {
        parse_poly(v, s).unwrap()
    }

    #[test]
    fn arithmetic_basics() {
        let v = xyz();
        assert_eq!(&p(&v, "x+y") * &p(&v, "x-y"), p(&v, "x^2-y^2"));
        assert_eq!(p(&v, "x+1").pow(0), MPoly::one(&v));
        let w = VarTable::new(&["x", "w"]);
        assert_eq!(p(&v, "x").try_add(&p(&w, "x")), Err(AlgebraError::VarTableMismatch));
    }

    #[test]
    fn cleared_denominator_of_v_equation() {
        let v = VarTable::new(&["v", "v1", "v2"]);
        let rhs = parse(&v, "-3*(v^2-v1)*v1 + 3/2*v^4 - (v^3-2*v2)*(5*v^3+2*v2)/(2*(v^2+2*v1))").unwrap();
        let den = p(&v, "v^2+2*v1");
        let cleared = &rhs * &RatFun::poly(den.clone());
        let expected = p(&v, "(-3*(v^2-v1)*v1 + 3/2*v^4)*(v^2+2*v1) - (v^3-2*v2)*(5*v^3+2*v2)/2");
        assert!(cleared.equals(&RatFun::poly(expected)));
    }

    #[test]
    fn derivatives() {
        let v = VarTable::new(&["u", "u1", "u2", "delta"]);
        let mut rules = DerivationRules::new(&v);
        rules.set(0, parse(&v, "u1").unwrap());
        rules.set(1, parse(&v, "u2").unwrap());
        rules.set(2, parse(&v, "54*u^4+72*u^2*u1+12*u1^2+delta").unwrap());
        rules.constant(3);
        let f = parse(&v, "u").unwrap();
        assert!(rules.derive(&f).unwrap().equals(&parse(&v, "u1").unwrap()));
        let y = parse(&v, "u1 + 3/2*(sqrt(5)-1)*u^2").unwrap();
        let z = parse(&v, "u2 + 3*(sqrt(5)-1)*u*u1").unwrap();
        assert!(rules.derive(&y).unwrap().equals(&z));
        let mut partial = DerivationRules::new(&v);
        partial.set(0, parse(&v, "u1").unwrap());
        assert_eq!(partial.derive(&y).err(), Some(AlgebraError::MissingRule("u1".into())));
    }

    #[test]
    fn app_a_leibniz() {
        let v = VarTable::new(&["A0", "A1"]);
        let mut r = DerivationRules::new(&v);
        r.set(0, parse(&v, "A1").unwrap());
        r.set(1, parse(&v, "6*A0^2").unwrap());
        let d = r.derive(&parse(&v, "A0^2").unwrap()).unwrap();
        assert!(d.equals(&parse(&v, "2*A0*A1").unwrap()));
    }

    #[test]
    fn jacobians() {
        let v = VarTable::new(&["x", "y"]);
        let f = vec![parse(&v, "x^2").unwrap(), parse(&v, "x*y").unwrap()];
        let j = jacobian(&f, &[0, 1]);
        assert!(j[0][0].equals(&parse(&v, "2*x").unwrap()));
        assert!(j[0][1].is_zero());
        assert!(j[1][0].equals(&parse(&v, "y").unwrap()));
        assert!(j[1][1].equals(&parse(&v, "x").unwrap()));
        let w = xyz();
        let sys1 = ["x^2-x*y", "y^2-x*y+x*z-y*z", "z^2+8*x*z-20*x*y"];
        let f: Vec<RatFun> = sys1.iter().map(|s| parse(&w, s).unwrap()).collect();
        for row in jacobian(&f, &[0, 1, 2]) {
            for e in row {
                let at0 = e.eval(&[QuadExt::zero(), QuadExt::zero(), QuadExt::zero()]).unwrap();
                assert!(at0.is_zero());
            }
        }
    }

    #[test]
    fn substitution() {
        let v = VarTable::new(&["x", "u"]);
        let f = parse(&v, "x^2").unwrap();
        let g = f.substitute(&[(0, parse(&v, "1/u").unwrap())]).unwrap();
        assert!(g.equals(&parse(&v, "u^-2").unwrap()));
        let z = parse(&v, "1/(x-u)").unwrap().substitute(&[(0, parse(&v, "u").unwrap())]);
        assert!(matches!(z, Err(AlgebraError::ZeroDenominator)));
    }

    #[test]
    fn darboux_halphen_identity() {
        // u = -2(x+y+z) differentiated along the Darboux-Halphen field.
        let v = xyz();
        let mut r = DerivationRules::new(&v);
        r.set(0, parse(&v, "y*z - x*(y+z)").unwrap());
        r.set(1, parse(&v, "z*x - y*(z+x)").unwrap());
        r.set(2, parse(&v, "x*y - z*(x+y)").unwrap());
        let u = parse(&v, "-2*(x+y+z)").unwrap();
        let du = r.derive(&u).unwrap();
        assert!(du.equals(&parse(&v, "2*(x*z+y*z+x*y)").unwrap()));
        let ddu = r.derive(&du).unwrap();
        assert!(ddu.equals(&parse(&v, "-12*x*y*z").unwrap()));
    }

    #[test]
    fn division() {
        let v = xyz();
        assert_eq!(divides_exactly(&p(&v, "x"), &p(&v, "x^2*y+3*x")), Some(p(&v, "x*y+3")));
        assert_eq!(divides_exactly(&p(&v, "x"), &p(&v, "x^2*y+3")), None);
        let r = parse(&v, "(x^2-y^2)/(x-y)").unwrap() - parse(&v, "x+y").unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn json_form() {
        let v = VarTable::new(&["x", "y"]);
        let f = p(&v, "x^2 - 1/2*y + sqrt(5)");
        let j = f.to_json();
        assert_eq!(
            j.to_string(),
            r#"{"terms":[{"c":{"a":"0","b":"1","d":5},"e":[0,0]},{"c":{"a":"-1/2","b":"0","d":0},"e":[0,1]},{"c":{"a":"1","b":"0","d":0},"e":[2,0]}],"vars":["x","y"]}"#
        );
        assert_eq!(MPoly::from_json(&j).unwrap(), f);
    }

    #[test]
    fn parser_precedence() {
        let v = xyz();
        assert_eq!(p(&v, "-x^2"), -p(&v, "x*x"));
        assert_eq!(p(&v, "2*3/4*x"), p(&v, "3/2*x"));
        assert!(parse(&v, "x^2^1").is_err());
        let c = parse(&v, "3/11*(9+7*sqrt(3))").unwrap().to_poly().unwrap().as_constant().unwrap();
        assert_eq!(c, QuadExt::new(rat(27, 11), rat(21, 11), 3));
    }

    fn small_poly(v: Vars) -> impl Strategy<Value = MPoly> {
        proptest::collection::vec(((0u16..3, 0u16..3, 0u16..2), -5i64..6, 1i64..4), 1..6).prop_map(move |ts| {
            MPoly::from_terms(&v, ts.into_iter().map(|((a, b, c), n, d)| (vec![a, b, c], QuadExt::from(rat(n, d)))))
        })
    }

    fn rules_xyz(v: &Vars) -> DerivationRules {
        let mut r = DerivationRules::new(v);
        r.set(0, parse(v, "x^2-x*y").unwrap());
        r.set(1, parse(v, "y^2-x*y+x*z-y*z").unwrap());
        r.set(2, parse(v, "z^2+8*x*z-20*x*y").unwrap());
        r
    }

    fn rand_point(seed: u64, n: usize) -> Vec<QuadExt> {
        (0..n).map(|i| QuadExt::from(rat(((seed * 7919 + i as u64 * 104729) % 23) as i64 - 11, 1 + (seed + i as u64) as i64 % 5))).collect()
    }

    proptest! {
        #[test]
        fn leibniz(f in small_poly(xyz()), g in small_poly(xyz())) {
            let v = xyz();
            let r = rules_xyz(&v);
            let lhs = r.derive_poly(&(&f * &g)).unwrap();
            let rhs = RatFun::poly(f.clone()).try_mul(&r.derive_poly(&g).unwrap()).unwrap()
                .try_add(&RatFun::poly(g.clone()).try_mul(&r.derive_poly(&f).unwrap()).unwrap()).unwrap();
            prop_assert!(lhs.equals(&rhs));
        }

        #[test]
        fn substitution_composes(f in small_poly(xyz()), a in small_poly(xyz()), b in small_poly(xyz())) {
            let v = xyz();
            let sigma = vec![(0usize, RatFun::poly(a.clone())), (1usize, RatFun::poly(b.clone()))];
            let tau = vec![(2usize, parse(&v, "x+1").unwrap())];
            let lhs = RatFun::poly(f.clone()).substitute(&sigma).unwrap().substitute(&tau).unwrap();
            let composed: Vec<(usize, RatFun)> = sigma.iter()
                .map(|(k, s)| (*k, s.substitute(&tau).unwrap()))
                .chain(std::iter::once(tau[0].clone()))
                .collect();
            let rhs = RatFun::poly(f).substitute(&composed).unwrap();
            prop_assert!(lhs.equals(&rhs));
        }

        #[test]
        fn zero_test_agrees_with_evaluation(f in small_poly(xyz()), g in small_poly(xyz())) {
            let d = &(&f * &g) - &(&g * &f);
            prop_assert!(d.is_zero());
            let e = &f - &g;
            let all_zero = (0..20).all(|s| e.eval(&rand_point(s, 3)).is_zero());
            prop_assert_eq!(all_zero, e.is_zero());
        }

        #[test]
        fn exact_division_recovers_quotient(d in small_poly(xyz()), q in small_poly(xyz())) {
            prop_assume!(!d.is_zero());
            let n = &d * &q;
            prop_assert_eq!(divides_exactly(&d, &n), Some(q));
        }
    }
}
