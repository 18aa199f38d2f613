//! Coordinate charts, accessible singular points on the boundary divisor and
//! their local indices.
//!
//! A chart is a birational change of the state variables whose inverse is
//! checked exactly at construction.  In a chart with boundary coordinate `b`
//! the field is multiplied by the least power `b^e` that makes it polynomial;
//! accessible points are the zeros of the transverse components on `b = 0`,
//! and the local index is the spectrum of the linear part there, with the
//! boundary eigenvalue first.

use nalgebra::DMatrix;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::catalog::{Dynamics, SystemDef};
use crate::exact::{cscalar_json, recognize_rational, CScalar, QuadExt};
use crate::linalg::{eigenvalues, Mat};
use crate::mpoly::{compose, divides_exactly, parse, AlgebraError, MPoly, RatFun, VarTable, Vars};
use crate::solve::{intersection_multiplicity, solve_system, Coord, SolveOptions};
use crate::upoly::Root;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("chart `{chart}`: {msg}")]
    Chart { chart: String, msg: String },
    #[error("chart `{chart}` does not invert exactly: component {component}")]
    RoundTrip { chart: String, component: String },
    #[error("field in chart `{0}` is not polynomial after any power of the boundary coordinate")]
    NotPolynomial(String),
    #[error("boundary system in chart `{chart}` still depends on {symbols:?}; bind them first")]
    Symbolic { chart: String, symbols: Vec<String> },
    #[error("point is not accessible in chart `{0}`")]
    NotAccessible(String),
    #[error("point lies on a locus; local index needs a specific point")]
    Locus,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Birational chart of a system's state space.
#[derive(Clone, Debug)]
pub struct Chart {
    pub name: String,
    /// Variable table of the base system.
    pub base: Vars,
    /// State variables of the base system.
    pub state: Vec<usize>,
    /// Chart table: the chart coordinates followed by the base's non-state symbols.
    pub vars: Vars,
    pub coords: Vec<usize>,
    /// Chart coordinates as functions on the base.
    pub to_chart: Vec<RatFun>,
    /// Base state variables as functions on the chart.
    pub from_chart: Vec<RatFun>,
    /// Position in `coords` of the coordinate whose zero set is the boundary.
    pub boundary: Option<usize>,
    /// Projective chart `U_k` (used to identify points seen from several charts).
    pub projective: Option<usize>,
}

/// Evaluate sequential definitions `name := expr`, each of which may use the
/// symbols of `vars` and earlier names.  Returns the value of every step over `vars`.
pub fn sequential(vars: &Vars, steps: &[(&str, &str)]) -> Result<Vec<RatFun>, AlgebraError> {
    let mut names: Vec<String> = vars.names().to_vec();
    for (n, _) in steps {
        assert!(!names.iter().any(|m| m == n), "step name `{n}` shadows a symbol");
        names.push(n.to_string());
    }
    let u = VarTable::new(&names);
    let mut done: Vec<(usize, RatFun)> = Vec::new();
    let mut out = Vec::new();
    for (n, e) in steps {
        let mut r = parse(&u, e)?;
        let used: Vec<(usize, RatFun)> = done.iter().filter(|(i, _)| r.occurs(*i)).cloned().collect();
        if !used.is_empty() {
            r = r.substitute(&used)?;
        }
        done.push((u.idx(n), r.clone()));
        out.push(r.rebase(vars)?);
    }
    Ok(out)
}

impl Chart {
    /// Build a chart from formulas.  `to` gives the chart coordinates over the
    /// base (after the optional auxiliary `to_steps`); `from` defines the base
    /// state variables in order, each expression over the chart coordinates,
    /// the base's other symbols and the state variables already defined.
    pub fn new(
        sys: &SystemDef,
        name: &str,
        coords: &[&str],
        to_steps: &[(&str, &str)],
        to: &[&str],
        from: &[(&str, &str)],
        boundary: Option<&str>,
    ) -> Result<Chart, GeometryError> {
        let err = |msg: String| GeometryError::Chart { chart: name.to_string(), msg };
        if coords.len() != sys.state.len() || to.len() != coords.len() || from.len() != coords.len() {
            return Err(err("dimension mismatch".into()));
        }
        let vars = chart_table(sys, coords).map_err(err)?;
        // Forward map: steps then outputs, over the base.
        let mut steps: Vec<(String, String)> = to_steps.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        for (i, t) in to.iter().enumerate() {
            steps.push((format!("__to{i}"), t.to_string()));
        }
        let sref: Vec<(&str, &str)> = steps.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let vals = sequential(&sys.vars, &sref)?;
        let to_chart = vals[to_steps.len()..].to_vec();
        // Inverse map: defined state by state over the chart table.
        let state_names = sys.state_names();
        let mut order = Vec::new();
        for (n, _) in from {
            let k = state_names.iter().position(|s| s == n).ok_or_else(|| err(format!("`{n}` is not a state variable")))?;
            order.push(k);
        }
        let mut from_chart = vec![RatFun::zero(&vars); coords.len()];
        let fvals = sequential(&vars, from)?;
        for (k, v) in order.into_iter().zip(fvals) {
            from_chart[k] = v;
        }
        let b = match boundary {
            None => None,
            Some(bn) => Some(coords.iter().position(|c| *c == bn).ok_or_else(|| err(format!("boundary `{bn}` is not a coordinate")))?),
        };
        Chart::from_parts(sys, name, &vars, to_chart, from_chart, b)
    }

    /// Build a chart from already-constructed maps, validating both round trips.
    pub fn from_parts(
        sys: &SystemDef,
        name: &str,
        vars: &Vars,
        to_chart: Vec<RatFun>,
        from_chart: Vec<RatFun>,
        boundary: Option<usize>,
    ) -> Result<Chart, GeometryError> {
        let n = sys.state.len();
        let chart = Chart {
            name: name.to_string(),
            base: sys.vars.clone(),
            state: sys.state.clone(),
            vars: vars.clone(),
            coords: (0..n).collect(),
            to_chart,
            from_chart,
            boundary,
            projective: None,
        };
        chart.validate()?;
        Ok(chart)
    }

    pub fn coord_names(&self) -> Vec<String> {
        self.coords.iter().map(|&i| self.vars.name(i).to_string()).collect()
    }

    fn state_bindings(&self) -> Vec<(String, RatFun)> {
        self.state.iter().zip(&self.from_chart).map(|(&s, f)| (self.base.name(s).to_string(), f.clone())).collect()
    }

    fn coord_bindings(&self) -> Vec<(String, RatFun)> {
        self.coords.iter().zip(&self.to_chart).map(|(&c, f)| (self.vars.name(c).to_string(), f.clone())).collect()
    }

    /// Express a function on the base in chart coordinates.
    pub fn pull(&self, f: &RatFun) -> Result<RatFun, AlgebraError> {
        let b = self.state_bindings();
        let br: Vec<(&str, &RatFun)> = b.iter().map(|(n, r)| (n.as_str(), r)).collect();
        Ok(compose(f, &br, &self.vars)?.tidy())
    }

    /// Express a function on the chart over the base.
    pub fn push(&self, f: &RatFun) -> Result<RatFun, AlgebraError> {
        let b = self.coord_bindings();
        let br: Vec<(&str, &RatFun)> = b.iter().map(|(n, r)| (n.as_str(), r)).collect();
        Ok(compose(f, &br, &self.base)?.tidy())
    }

    fn validate(&self) -> Result<(), GeometryError> {
        for (i, t) in self.to_chart.iter().enumerate() {
            let back = self.pull(t)?;
            if !back.equals(&RatFun::var(&self.vars, self.coords[i])) {
                return Err(GeometryError::RoundTrip { chart: self.name.clone(), component: self.vars.name(self.coords[i]).into() });
            }
        }
        for (j, f) in self.from_chart.iter().enumerate() {
            let back = self.push(f)?;
            if !back.equals(&RatFun::var(&self.base, self.state[j])) {
                return Err(GeometryError::RoundTrip { chart: self.name.clone(), component: self.base.name(self.state[j]).into() });
            }
        }
        Ok(())
    }

    /// Determinant of the Jacobian of the chart map, over the base.
    pub fn jacobian_det(&self) -> Result<RatFun, AlgebraError> {
        let j = crate::mpoly::jacobian(&self.to_chart, &self.state);
        crate::mpoly::det(&j)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "coords": self.coord_names(),
            "boundary": self.boundary.map(|b| self.vars.name(self.coords[b]).to_string()),
            "to_chart": self.to_chart.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "from_chart": self.from_chart.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        })
    }
}

fn chart_table(sys: &SystemDef, coords: &[&str]) -> Result<Vars, String> {
    let mut names: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
    for (i, n) in sys.vars.names().iter().enumerate() {
        if sys.state.contains(&i) {
            continue;
        }
        if names.contains(n) {
            return Err(format!("coordinate `{n}` clashes with a symbol of the system"));
        }
        names.push(n.clone());
    }
    Ok(VarTable::new(&names))
}

/// Name of a projective coordinate: uppercased variable name with the chart number.
fn projective_name(v: &str, k: usize) -> String {
    let mut s: String = v.chars().flat_map(|c| c.to_uppercase()).collect();
    s.push_str(&(k + 1).to_string());
    s
}

/// The affine charts `U_k` of the projective compactification:
/// `X_k = 1/x_k`, `X_j = x_j / x_k`.
pub fn projective_charts(sys: &SystemDef) -> Result<Vec<Chart>, GeometryError> {
    let names = sys.state_names();
    let n = names.len();
    let mut out = Vec::new();
    for k in 0..n {
        let coords: Vec<String> = names.iter().map(|v| projective_name(v, k)).collect();
        let cref: Vec<&str> = coords.iter().map(|s| s.as_str()).collect();
        let vars = chart_table(sys, &cref).map_err(|msg| GeometryError::Chart { chart: format!("U{}", k + 1), msg })?;
        let xk = RatFun::var(&sys.vars, sys.state[k]);
        let to: Vec<RatFun> = (0..n)
            .map(|j| if j == k { xk.inv() } else { Ok(&RatFun::var(&sys.vars, sys.state[j]) / &xk) })
            .collect::<Result<_, _>>()?;
        let ck = RatFun::var(&vars, k);
        let from: Vec<RatFun> =
            (0..n).map(|j| if j == k { ck.inv() } else { Ok(&RatFun::var(&vars, j) / &ck) }).collect::<Result<_, _>>()?;
        let mut c = Chart::from_parts(sys, &format!("U{}", k + 1), &vars, to, from, Some(k))?;
        c.projective = Some(k);
        out.push(c);
    }
    Ok(out)
}

/// The field of `dynamics` in chart coordinates: `D(to_chart)` composed with `from_chart`.
pub fn transform_field(chart: &Chart, dynamics: &Dynamics) -> Result<Vec<RatFun>, GeometryError> {
    if dynamics.vars.names() != chart.base.names() {
        return Err(GeometryError::Chart { chart: chart.name.clone(), msg: "chart built for another system".into() });
    }
    chart.to_chart.iter().map(|t| Ok(chart.pull(&dynamics.rules.derive(t)?)?.reduce())).collect()
}

/// Push an autonomous field (given over the base state) through the chart.
pub fn pushforward_field(chart: &Chart, field: &[RatFun]) -> Result<Vec<RatFun>, GeometryError> {
    let mut out = Vec::new();
    for t in &chart.to_chart {
        let mut acc = RatFun::zero(&chart.base);
        for (&s, f) in chart.state.iter().zip(field) {
            let d = t.partial(s);
            if !d.is_zero() {
                acc = &acc + &(&d * f);
            }
        }
        out.push(chart.pull(&acc)?.reduce());
    }
    Ok(out)
}

/// Polynomial form of a rational function, if exact division succeeds.
pub fn as_polynomial(r: &RatFun) -> Option<MPoly> {
    r.to_poly()
}

/// The system in chart coordinates, with parameters, time and auxiliary rules
/// carried over by name.
pub fn chart_system(sys: &SystemDef, chart: &Chart) -> Result<SystemDef, GeometryError> {
    let field = transform_field(chart, &sys.dynamics())?;
    let by_name = |i: usize| chart.vars.idx(sys.vars.name(i));
    let rules = match &sys.rules {
        None => None,
        Some(r) => {
            let mut nr = crate::mpoly::DerivationRules::new(&chart.vars);
            for (v, f) in r.rules() {
                nr.set(by_name(v), f.rebase(&chart.vars)?);
            }
            Some(nr)
        }
    };
    let polynomial = field.iter().all(|f| f.is_poly());
    Ok(SystemDef {
        name: format!("{}.{}", sys.name, chart.name),
        vars: chart.vars.clone(),
        state: chart.coords.clone(),
        field,
        params: sys.params.iter().map(|&p| by_name(p)).collect(),
        time: sys.time.map(by_name),
        rules,
        dim: chart.coords.len(),
        polynomial,
    })
}

/// Field in a chart together with its boundary-multiplied polynomial form.
#[derive(Clone, Debug)]
pub struct ChartView {
    pub chart: Chart,
    pub field: Vec<RatFun>,
    /// `b^e * field`, polynomial.
    pub h: Vec<MPoly>,
    pub multiplier: u32,
}

impl ChartView {
    pub fn new(sys: &SystemDef, chart: &Chart) -> Result<ChartView, GeometryError> {
        let field = transform_field(chart, &sys.dynamics())?;
        let b = chart.boundary.ok_or_else(|| GeometryError::Chart { chart: chart.name.clone(), msg: "no boundary coordinate".into() })?;
        let bv = MPoly::var(&chart.vars, chart.coords[b]);
        for e in 0..=12u32 {
            let be = bv.pow(e);
            let h: Option<Vec<MPoly>> = field.iter().map(|f| divides_exactly(&f.den, &(&f.num * &be))).collect();
            if let Some(h) = h {
                return Ok(ChartView { chart: chart.clone(), field, h, multiplier: e });
            }
        }
        Err(GeometryError::NotPolynomial(chart.name.clone()))
    }

    fn boundary_var(&self) -> usize {
        self.chart.coords[self.chart.boundary.unwrap()]
    }

    /// Transverse components restricted to the boundary.
    pub fn boundary_equations(&self) -> Vec<MPoly> {
        let b = self.chart.boundary.unwrap();
        let bv = self.boundary_var();
        self.h
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != b)
            .map(|(_, h)| h.eval_partial(&[(bv, QuadExt::zero())]))
            .collect()
    }

    fn transverse(&self) -> Vec<usize> {
        let b = self.chart.boundary.unwrap();
        self.chart.coords.iter().enumerate().filter(|(i, _)| *i != b).map(|(_, &c)| c).collect()
    }
}

/// A point on the boundary divisor of a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct AccessiblePoint {
    pub chart: String,
    /// Coordinates in chart-coordinate order; the boundary coordinate is zero.
    pub coords: Vec<Coord>,
    /// Local intersection multiplicity of the transverse equations, when computable and > 1.
    pub multiplicity: Option<u32>,
    /// Set when the point came from the numeric fallback.
    pub numeric: bool,
}

impl AccessiblePoint {
    pub fn exact(chart: &str, coords: &[QuadExt]) -> AccessiblePoint {
        AccessiblePoint { chart: chart.to_string(), coords: coords.iter().cloned().map(Coord::Exact).collect(), multiplicity: None, numeric: false }
    }

    pub fn is_locus(&self) -> bool {
        self.coords.iter().any(|c| matches!(c, Coord::Free))
    }

    pub fn to_json(&self) -> Value {
        let c: Vec<Value> = self
            .coords
            .iter()
            .map(|c| match c {
                Coord::Exact(q) => json!(q),
                Coord::Numeric(z) => cscalar_json(*z),
                Coord::Free => json!("free"),
            })
            .collect();
        json!({"chart": self.chart, "coords": c, "multiplicity": self.multiplicity, "numeric": self.numeric})
    }
}

fn eval_exact(p: &MPoly, pt: &[(usize, QuadExt)]) -> Option<QuadExt> {
    p.eval_partial(pt).as_constant()
}

fn point_bindings(view: &ChartView, p: &AccessiblePoint) -> Option<Vec<(usize, QuadExt)>> {
    view.chart.coords.iter().zip(&p.coords).map(|(&c, v)| v.exact().map(|q| (c, q.clone()))).collect()
}

fn point_complex(view: &ChartView, p: &AccessiblePoint) -> Option<Vec<CScalar>> {
    let mut z = vec![CScalar::zero(); view.chart.vars.len()];
    for (&c, v) in view.chart.coords.iter().zip(&p.coords) {
        z[c] = v.to_complex()?;
    }
    Some(z)
}

/// Whether `p` lies on the boundary and annihilates every transverse component.
pub fn is_accessible(view: &ChartView, p: &AccessiblePoint, tol: f64) -> bool {
    let b = match view.chart.boundary {
        Some(b) => b,
        None => return false,
    };
    if p.coords.len() != view.chart.coords.len() || !crate::solve::coord_is_zero(&p.coords[b], tol) {
        return false;
    }
    if let Some(pt) = point_bindings(view, p) {
        return view.h.iter().enumerate().filter(|(i, _)| *i != b).all(|(_, h)| eval_exact(h, &pt).map(|v| v.is_zero()).unwrap_or(false));
    }
    match point_complex(view, p) {
        Some(z) => view.h.iter().enumerate().filter(|(i, _)| *i != b).all(|(_, h)| h.eval_c(&z).norm() <= tol),
        None => false,
    }
}

/// Accessible points of one chart.
pub fn find_accessible(view: &ChartView, opts: &SolveOptions) -> Result<Vec<AccessiblePoint>, GeometryError> {
    let eqs = view.boundary_equations();
    let unknowns = view.transverse();
    let mut extra: Vec<String> = Vec::new();
    for e in &eqs {
        for v in e.support() {
            if !unknowns.contains(&v) {
                let n = view.chart.vars.name(v).to_string();
                if !extra.contains(&n) {
                    extra.push(n);
                }
            }
        }
    }
    if !extra.is_empty() {
        return Err(GeometryError::Symbolic { chart: view.chart.name.clone(), symbols: extra });
    }
    let rep = solve_system(&eqs, &unknowns, opts);
    let b = view.chart.boundary.unwrap();
    let mut out = Vec::new();
    for sol in rep.points {
        let mut coords = sol.clone();
        coords.insert(b, Coord::Exact(QuadExt::zero()));
        let numeric = coords.iter().any(|c| matches!(c, Coord::Numeric(_)));
        let mut p = AccessiblePoint { chart: view.chart.name.clone(), coords, multiplicity: None, numeric };
        if unknowns.len() == 2 && eqs.len() == 2 {
            if let (Some(a), Some(c)) = (sol[0].exact(), sol[1].exact()) {
                let m = intersection_multiplicity(&eqs[0], &eqs[1], unknowns[0], unknowns[1], (a, c));
                if m > 1 && m != u32::MAX {
                    p.multiplicity = Some(m);
                }
            }
        }
        if p.is_locus() || is_accessible(view, &p, 1e-8) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Homogeneous coordinates of a boundary point of a projective chart,
/// normalized so the first nonzero entry is 1.
fn projective_key(chart: &Chart, p: &AccessiblePoint) -> Option<Vec<CScalar>> {
    let k = chart.projective?;
    let mut h: Vec<CScalar> = p.coords.iter().map(|c| c.to_complex()).collect::<Option<_>>()?;
    h[k] = CScalar::new(1.0, 0.0);
    let first = *h.iter().find(|z| z.norm() > 1e-12)?;
    Some(h.into_iter().map(|z| z / first).collect())
}

/// Accessible points over several charts, identifying points of projective
/// charts that represent the same point of the divisor.  Each point is
/// reported in the first chart that contains it.
pub fn find_accessible_all(views: &[ChartView], opts: &SolveOptions) -> Result<Vec<AccessiblePoint>, GeometryError> {
    let mut out: Vec<AccessiblePoint> = Vec::new();
    let mut keys: Vec<Vec<CScalar>> = Vec::new();
    for v in views {
        for p in find_accessible(v, opts)? {
            if let Some(key) = projective_key(&v.chart, &p) {
                if keys.iter().any(|k| k.iter().zip(&key).all(|(a, b)| (a - b).norm() < 1e-9)) {
                    continue;
                }
                keys.push(key);
            }
            out.push(p);
        }
    }
    Ok(out)
}

/// Eigenvalue data at an accessible point.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalIndex {
    /// Boundary eigenvalue first, then the transverse spectrum (with multiplicity).
    pub eigenvalues: Vec<Root>,
    /// `(1, a_22/a_11, ...)`, or `None` when `a_11 = 0`.
    pub ratios: Option<Vec<Root>>,
    pub all_integer: bool,
    pub zero_leading: bool,
}

fn root_is_zero(r: &Root) -> bool {
    match r {
        Root::Exact(q) => q.is_zero(),
        Root::Numeric(z) => z.norm() < 1e-12,
    }
}

fn root_div(a: &Root, b: &Root) -> Root {
    if let (Root::Exact(x), Root::Exact(y)) = (a, b) {
        if let Ok(q) = x.checked_div(y) {
            return Root::Exact(q);
        }
    }
    Root::Numeric(a.to_complex() / b.to_complex())
}

fn root_is_integer(r: &Root) -> bool {
    match r {
        Root::Exact(q) => q.as_integer().is_some(),
        Root::Numeric(z) => recognize_rational(*z, 1, 1e-9).is_some(),
    }
}

impl LocalIndex {
    pub fn from_eigenvalues(eigenvalues: Vec<Root>) -> LocalIndex {
        let zero_leading = root_is_zero(&eigenvalues[0]);
        let ratios = (!zero_leading).then(|| eigenvalues.iter().map(|e| root_div(e, &eigenvalues[0])).collect::<Vec<_>>());
        let all_integer = ratios.as_ref().map(|r| r.iter().all(root_is_integer)).unwrap_or(false);
        LocalIndex { eigenvalues, ratios, all_integer, zero_leading }
    }

    /// Whether the eigenvalues equal `c * expected` as multisets for some `c != 0`.
    pub fn matches_up_to_scale(&self, expected: &[QuadExt]) -> bool {
        matches_up_to_scale(&self.eigenvalues, expected)
    }

    pub fn to_json(&self) -> Value {
        let r = |x: &Root| match x {
            Root::Exact(q) => json!(q),
            Root::Numeric(z) => cscalar_json(*z),
        };
        json!({
            "eigenvalues": self.eigenvalues.iter().map(r).collect::<Vec<_>>(),
            "ratios": self.ratios.as_ref().map(|v| v.iter().map(r).collect::<Vec<_>>()),
            "integer": self.all_integer,
        })
    }
}

fn roots_close(a: &Root, b: &Root) -> bool {
    if let (Root::Exact(x), Root::Exact(y)) = (a, b) {
        if x.d() == y.d() || x.is_rational() || y.is_rational() {
            return x == y;
        }
    }
    (a.to_complex() - b.to_complex()).norm() <= 1e-9 * (1.0 + a.to_complex().norm())
}

fn multiset_eq(a: &[Root], b: &[Root]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for x in a {
        let Some(j) = (0..b.len()).find(|&j| !used[j] && roots_close(x, &b[j])) else { return false };
        used[j] = true;
    }
    true
}

/// Multiset equality of `got` with `c * expected` for some nonzero `c`.
pub fn matches_up_to_scale(got: &[Root], expected: &[QuadExt]) -> bool {
    let exp: Vec<Root> = expected.iter().cloned().map(Root::Exact).collect();
    let Some(e0) = exp.iter().find(|e| !root_is_zero(e)) else {
        return got.iter().all(root_is_zero) && got.len() == exp.len();
    };
    for g in got.iter().filter(|g| !root_is_zero(g)) {
        let c = root_div(g, e0);
        let scaled: Vec<Root> = exp
            .iter()
            .map(|e| match (e, &c) {
                (Root::Exact(x), Root::Exact(y)) => x.checked_mul(y).map(Root::Exact).unwrap_or_else(|_| Root::Numeric(e.to_complex() * c.to_complex())),
                _ => Root::Numeric(e.to_complex() * c.to_complex()),
            })
            .collect();
        if multiset_eq(got, &scaled) {
            return true;
        }
    }
    false
}

/// Local index at an accessible point.
pub fn local_index(view: &ChartView, p: &AccessiblePoint) -> Result<LocalIndex, GeometryError> {
    if p.is_locus() {
        return Err(GeometryError::Locus);
    }
    if !is_accessible(view, p, 1e-8) {
        return Err(GeometryError::NotAccessible(view.chart.name.clone()));
    }
    let b = view.chart.boundary.unwrap();
    let n = view.chart.coords.len();
    let jac: Vec<Vec<MPoly>> = view.h.iter().map(|h| view.chart.coords.iter().map(|&c| h.partial(c)).collect()).collect();
    let trans: Vec<usize> = (0..n).filter(|&i| i != b).collect();
    if let Some(pt) = point_bindings(view, p) {
        let at = |m: &MPoly| -> Result<QuadExt, GeometryError> {
            let v = m.eval_partial(&pt);
            v.as_constant().ok_or_else(|| GeometryError::Symbolic {
                chart: view.chart.name.clone(),
                symbols: v.support().iter().map(|&i| view.chart.vars.name(i).to_string()).collect(),
            })
        };
        let a11 = at(&jac[b][b])?;
        let block: Mat = trans.iter().map(|&i| trans.iter().map(|&j| at(&jac[i][j])).collect::<Result<Vec<_>, _>>()).collect::<Result<_, _>>()?;
        let mut eig = vec![Root::Exact(a11)];
        for (r, m) in eigenvalues(&block) {
            for _ in 0..m {
                eig.push(r.clone());
            }
        }
        return Ok(LocalIndex::from_eigenvalues(eig));
    }
    let z = point_complex(view, p).ok_or(GeometryError::Locus)?;
    let a11 = jac[b][b].eval_c(&z);
    let m = DMatrix::from_fn(trans.len(), trans.len(), |i, j| jac[trans[i]][trans[j]].eval_c(&z));
    let mut eig = vec![Root::Numeric(a11)];
    eig.extend(complex_eigenvalues(m).into_iter().map(Root::Numeric));
    Ok(LocalIndex::from_eigenvalues(eig))
}

/// Eigenvalues of a complex matrix by the Schur decomposition.
pub fn complex_eigenvalues(m: DMatrix<CScalar>) -> Vec<CScalar> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let schur = nalgebra::Schur::new(m);
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// The integer-ratio condition: `a_11 != 0` and every ratio is an integer.
pub fn ratio_condition(idx: &LocalIndex) -> bool {
    !idx.zero_leading && idx.all_integer
}

/// An accessible point with its local index, when one is defined.
#[derive(Clone, Debug)]
pub struct SingularPoint {
    pub point: AccessiblePoint,
    pub index: Option<LocalIndex>,
}

impl SingularPoint {
    pub fn to_json(&self) -> Value {
        let mut v = self.point.to_json();
        v["local_index"] = self.index.as_ref().map(|i| i.to_json()).unwrap_or(Value::Null);
        v["ratio_condition"] = json!(self.index.as_ref().map(ratio_condition));
        v
    }
}

/// Accessible points of a system over its standard projective charts.
pub fn analyze_singular(sys: &SystemDef, opts: &SolveOptions) -> Result<Vec<SingularPoint>, GeometryError> {
    let views = projective_charts(sys)?.iter().map(|c| ChartView::new(sys, c)).collect::<Result<Vec<_>, _>>()?;
    let pts = find_accessible_all(&views, opts)?;
    Ok(pts
        .into_iter()
        .map(|p| {
            let index = views.iter().find(|v| v.chart.name == p.chart).and_then(|v| local_index(v, &p).ok());
            SingularPoint { point: p, index }
        })
        .collect())
}

/// Basis of the fields of weighted-homogeneous form that stay polynomial in every chart.
///
/// Component `i` ranges over monomials of weight `component_weights[i]` in the
/// state variables and `params` (each with its weight).  The condition is
/// linear in the coefficients; the nullspace is returned as fields over the base.
pub fn recover_field(
    sys: &SystemDef,
    weights: &[u32],
    params: &[(&str, u32)],
    component_weights: &[u32],
    charts: &[Chart],
) -> Result<Vec<Vec<RatFun>>, GeometryError> {
    let vars = &sys.vars;
    let mut gens: Vec<(usize, u32)> = sys.state.iter().copied().zip(weights.iter().copied()).collect();
    for (p, w) in params {
        gens.push((vars.idx(p), *w));
    }
    // Basis: (component, monomial).
    let mut basis: Vec<(usize, MPoly)> = Vec::new();
    for (i, &w) in component_weights.iter().enumerate() {
        for e in weighted_monomials(&gens, w) {
            let mut ex = vec![0u16; vars.len()];
            for (k, &(v, _)) in gens.iter().enumerate() {
                ex[v] = e[k];
            }
            basis.push((i, MPoly::monomial(vars, ex, QuadExt::one())));
        }
    }
    // Each chart gives linear conditions: coefficients of the polar part vanish.
    let mut rows: Vec<Vec<QuadExt>> = Vec::new();
    for chart in charts {
        let bvar = chart.coords[chart.boundary.ok_or_else(|| GeometryError::Chart { chart: chart.name.clone(), msg: "no boundary".into() })?];
        let mut columns: Vec<Vec<MPoly>> = Vec::new();
        let mut shift = 0u32;
        let mut raw: Vec<Vec<RatFun>> = Vec::new();
        for (i, m) in &basis {
            let mut f = vec![RatFun::zero(vars); sys.state.len()];
            f[*i] = RatFun::poly(m.clone());
            let t = pushforward_field(chart, &f)?;
            for c in &t {
                let e = polar_order(c, bvar).ok_or_else(|| GeometryError::NotPolynomial(chart.name.clone()))?;
                shift = shift.max(e);
            }
            raw.push(t);
        }
        let bv = MPoly::var(&chart.vars, bvar);
        let be = bv.pow(shift);
        for t in &raw {
            columns.push(t.iter().map(|c| divides_exactly(&c.den, &(&c.num * &be)).expect("monomial denominator")).collect());
        }
        // Collect monomials with boundary degree < shift, per component.
        for comp in 0..sys.state.len() {
            let mut keys: Vec<Vec<u16>> = Vec::new();
            for col in &columns {
                for (e, _) in col[comp].terms() {
                    if (e[bvar] as u32) < shift && !keys.contains(e) {
                        keys.push(e.clone());
                    }
                }
            }
            for key in keys {
                rows.push(
                    columns
                        .iter()
                        .map(|col| col[comp].terms().find(|(e, _)| **e == key).map(|(_, c)| c.clone()).unwrap_or_else(QuadExt::zero))
                        .collect(),
                );
            }
        }
    }
    let ns = if rows.is_empty() {
        (0..basis.len()).map(|k| (0..basis.len()).map(|j| if j == k { QuadExt::one() } else { QuadExt::zero() }).collect()).collect()
    } else {
        crate::linalg::solve(&rows, &vec![QuadExt::zero(); rows.len()]).nullspace
    };
    Ok(ns
        .into_iter()
        .map(|v| {
            let mut f = vec![RatFun::zero(vars); sys.state.len()];
            for (c, (i, m)) in v.iter().zip(&basis) {
                if !c.is_zero() {
                    f[*i] = &f[*i] + &RatFun::poly(m.scale(c));
                }
            }
            f
        })
        .collect())
}

/// Power of `b` in a denominator of the form `c * b^k`.
fn polar_order(r: &RatFun, b: usize) -> Option<u32> {
    let r = r.clone().reduce();
    let content = r.den.monomial_content();
    let rest = r.den.div_monomial(&content);
    if !rest.is_constant() || content.iter().enumerate().any(|(i, &k)| i != b && k > 0) {
        return None;
    }
    Some(content[b] as u32)
}

fn weighted_monomials(gens: &[(usize, u32)], w: u32) -> Vec<Vec<u16>> {
    fn rec(gens: &[(usize, u32)], k: usize, left: u32, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if k == gens.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let wk = gens[k].1.max(1);
        let mut e = 0;
        while e * wk <= left {
            cur.push(e as u16);
            rec(gens, k + 1, left - e * wk, cur, out);
            cur.pop();
            e += 1;
        }
    }
    let mut out = Vec::new();
    rec(gens, 0, w, &mut Vec::new(), &mut out);
    out
}

/// Report for one chart of a holomorphy check.
#[derive(Clone, Debug)]
pub struct HolomorphyReport {
    pub chart: String,
    pub polynomial: bool,
    pub field: Vec<RatFun>,
    /// Components that failed exact division.
    pub failing: Vec<usize>,
}

/// Transform the field into every chart and test each component for polynomiality.
pub fn holomorphy_check(sys: &SystemDef, charts: &[Chart]) -> Result<Vec<HolomorphyReport>, GeometryError> {
    let dynamics = sys.dynamics();
    charts
        .iter()
        .map(|c| {
            let field = transform_field(c, &dynamics)?;
            let failing: Vec<usize> = field.iter().enumerate().filter(|(_, f)| f.to_poly().is_none()).map(|(i, _)| i).collect();
            Ok(HolomorphyReport { chart: c.name.clone(), polynomial: failing.is_empty(), field, failing })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_system;

    fn q(n: i64) -> QuadExt {
        QuadExt::int(n)
    }

    fn system1() -> SystemDef {
        get_system("chazy.III.system", &[]).unwrap()
    }

    #[test]
    fn sequential_steps() {
        let v = VarTable::new(&["x", "y"]);
        let r = sequential(&v, &[("a", "x + y"), ("b", "a*x")]).unwrap();
        assert!(r[1].equals(&parse(&v, "x^2 + x*y").unwrap()));
    }

    #[test]
    fn projective_round_trip_and_names() {
        let cs = projective_charts(&system1()).unwrap();
        assert_eq!(cs[0].coord_names(), vec!["X1", "Y1", "Z1"]);
        assert_eq!(cs[2].coord_names(), vec!["X3", "Y3", "Z3"]);
    }

    #[test]
    fn bad_inverse_is_rejected() {
        let s = system1();
        let e = Chart::new(&s, "bad", &["a", "b", "c"], &[], &["1/x", "y", "z"], &[("x", "a"), ("y", "b"), ("z", "c")], Some("a"));
        assert!(matches!(e, Err(GeometryError::RoundTrip { .. })));
    }

    #[test]
    fn identity_chart_keeps_field() {
        let s = system1();
        let c = Chart::new(&s, "id", &["p", "q", "r"], &[], &["x", "y", "z"], &[("x", "p"), ("y", "q"), ("z", "r")], None).unwrap();
        let f = transform_field(&c, &s.dynamics()).unwrap();
        let want = ["p^2 - p*q", "q^2 - p*q + p*r - q*r", "r^2 + 8*p*r - 20*p*q"];
        for (a, w) in f.iter().zip(want) {
            assert!(a.equals(&parse(&c.vars, w).unwrap()));
        }
    }

    #[test]
    fn corollary_chart_one() {
        let s = system1();
        let c = Chart::new(
            &s,
            "1",
            &["x1", "y1", "z1"],
            &[],
            &["-(x-y)/(2*x)", "x", "(x-y)*(x+3*y-2*z)/(4*x)"],
            &[("x", "y1"), ("y", "y1*(1+2*x1)"), ("z", "z1/x1 + 2*y1 + 3*x1*y1")],
            None,
        )
        .unwrap();
        let f = transform_field(&c, &s.dynamics()).unwrap();
        let want = ["x1^2*y1 - z1", "-2*x1*y1^2", "2*y1*(6*x1^3*y1 + 5*x1*z1 + 6*z1)"];
        for (a, w) in f.iter().zip(want) {
            assert!(a.equals(&parse(&c.vars, w).unwrap()), "{a}");
        }
        let cat = get_system("chazy.III.chart1", &[]).unwrap();
        for (a, b) in f.iter().zip(&cat.field) {
            assert!(a.equals(&b.rebase(&c.vars).unwrap()));
        }
    }

    #[test]
    fn example_one_linear_part() {
        let s = get_system("example.ex1.system", &[]).unwrap();
        let u1 = &projective_charts(&s).unwrap()[0];
        let v = ChartView::new(&s, u1).unwrap();
        assert_eq!(v.multiplier, 1);
        let origin = AccessiblePoint::exact("U1", &[q(0), q(0), q(0)]);
        let vars = &u1.vars;
        let jac: Vec<Vec<QuadExt>> = v
            .h
            .iter()
            .map(|h| (0..3).map(|c| h.partial(c).eval_partial(&[(0, q(0)), (1, q(0)), (2, q(0))]).as_constant().unwrap()).collect())
            .collect();
        assert_eq!(jac, vec![vec![q(-1), q(0), q(0)], vec![q(0), q(-2), q(1)], vec![q(0), q(-4), q(-4)]]);
        assert_eq!(vars.len(), 3);
        let idx = local_index(&v, &origin).unwrap();
        assert!(!ratio_condition(&idx));
        let s3 = QuadExt::sqrt_of(-3);
        assert!(idx.matches_up_to_scale(&[q(-1), &q(-3) + &s3, &q(-3) - &s3]));
    }

    #[test]
    fn accessibility_predicate() {
        let s = system1();
        let u1 = &projective_charts(&s).unwrap()[0];
        let v = ChartView::new(&s, u1).unwrap();
        assert!(is_accessible(&v, &AccessiblePoint::exact("U1", &[q(0), q(0), q(0)]), 1e-12));
        assert!(!is_accessible(&v, &AccessiblePoint::exact("U1", &[q(0), q(1), q(3)]), 1e-12));
        assert!(!is_accessible(&v, &AccessiblePoint::exact("U1", &[q(1), q(0), q(0)]), 1e-12));
    }

    #[test]
    fn six_points_of_system_one() {
        let s = system1();
        let views: Vec<ChartView> = projective_charts(&s).unwrap().iter().map(|c| ChartView::new(&s, c).unwrap()).collect();
        let pts = find_accessible_all(&views, &SolveOptions::default()).unwrap();
        assert_eq!(pts.len(), 6, "{pts:?}");
        let p4 = pts.iter().find(|p| p.chart == "U1" && p.coords[1] == Coord::Exact(q(1)) && p.coords[2] == Coord::Exact(q(2))).unwrap();
        assert_eq!(p4.multiplicity, Some(2));
        let table: [(&str, [i64; 3], [i64; 3]); 4] = [
            ("U1", [0, 0, 0], [-1, 3, 2]),
            ("U2", [0, 0, 0], [2, 1, 1]),
            ("U3", [0, 0, 0], [1, 2, 1]),
            ("U1", [0, 1, -10], [0, 12, -12]),
        ];
        for (chart, c, want) in table {
            let v = views.iter().find(|v| v.chart.name == chart).unwrap();
            let p = AccessiblePoint::exact(chart, &c.map(q));
            let idx = local_index(v, &p).unwrap();
            assert!(idx.matches_up_to_scale(&want.map(q)), "{chart} {c:?}: {:?}", idx.eigenvalues);
        }
        let v2 = views.iter().find(|v| v.chart.name == "U2").unwrap();
        let p6 = AccessiblePoint::exact("U2", &[q(0), q(0), QuadExt::frac(1, 2)]);
        assert!(local_index(v2, &p6).unwrap().matches_up_to_scale(&[q(3), q(1), q(-2)]));
        let idx1 = local_index(&views[0], &AccessiblePoint::exact("U1", &[q(0), q(0), q(0)])).unwrap();
        assert!(ratio_condition(&idx1));
        assert_eq!(idx1.eigenvalues[0], Root::Exact(q(-1)));
    }

    #[test]
    fn scale_invariance_of_ratio_condition() {
        let idx = LocalIndex::from_eigenvalues(vec![Root::Exact(q(-1)), Root::Exact(q(3)), Root::Exact(q(2))]);
        let scaled = LocalIndex::from_eigenvalues(idx.eigenvalues.iter().map(|r| Root::Exact(r.exact().unwrap() * &QuadExt::frac(-7, 3))).collect());
        assert_eq!(ratio_condition(&idx), ratio_condition(&scaled));
        let zero = LocalIndex::from_eigenvalues(vec![Root::Exact(q(0)), Root::Exact(q(12)), Root::Exact(q(-12))]);
        assert!(zero.zero_leading && !ratio_condition(&zero));
    }

    #[test]
    fn logistic_chart() {
        let v = VarTable::new(&["x"]);
        let s = SystemDef {
            name: "logistic".into(),
            vars: v.clone(),
            state: vec![0],
            field: vec![parse(&v, "x^2").unwrap()],
            params: vec![],
            time: None,
            rules: None,
            dim: 1,
            polynomial: true,
        };
        let u = &projective_charts(&s).unwrap()[0];
        let f = transform_field(u, &s.dynamics()).unwrap();
        assert!(f[0].equals(&parse(&u.vars, "-1").unwrap()));
    }

    fn all_points(s: &SystemDef) -> (Vec<ChartView>, Vec<AccessiblePoint>) {
        let views: Vec<ChartView> = projective_charts(s).unwrap().iter().map(|c| ChartView::new(s, c).unwrap()).collect();
        let pts = find_accessible_all(&views, &SolveOptions::default()).unwrap();
        (views, pts)
    }

    #[test]
    fn halphen_point_counts() {
        let z = QuadExt::zero();
        let s = crate::catalog::get_system("halphen.classic", &[("alpha", z.clone()), ("beta", z.clone()), ("gamma", z.clone())]).unwrap();
        assert_eq!(all_points(&s).1.len(), 7);
        let names = ["alpha", "beta", "chi", "delta", "epsilon", "gamma"];
        let bind: Vec<(&str, QuadExt)> = names.iter().map(|n| (*n, z.clone())).collect();
        let s4 = crate::catalog::get_system("halphen.four", &bind).unwrap();
        assert_eq!(all_points(&s4).1.len(), 15);
    }

    #[test]
    fn three_parameter_system_points() {
        let s = crate::catalog::get_system("three-param.system", &[]).unwrap();
        let (views, pts) = all_points(&s);
        assert_eq!(pts.len(), 7, "{pts:?}");
        let f = |n: i64, d: i64| QuadExt::frac(n, d);
        let table: [(&str, [QuadExt; 3], [i64; 3]); 7] = [
            ("U1", [q(0), q(0), q(0)], [1, 2, 4]),
            ("U2", [q(0), q(0), q(0)], [2, 1, 1]),
            ("U3", [q(0), q(0), q(0)], [1, 2, 1]),
            ("U1", [q(0), f(4, 3), f(8, 3)], [1, 6, 4]),
            ("U2", [q(0), q(0), f(1, 2)], [3, 1, -2]),
            // Boundary Jacobian by hand: H_Y = 2Y^2 - 2Y + Z - YZ, H_Z = Z^2 - 4Z + YZ.
            ("U1", [q(0), q(1), q(3)], [0, 3, -1]),
            ("U1", [q(0), q(1), q(0)], [0, 2, -3]),
        ];
        for (chart, c, want) in table {
            let v = views.iter().find(|v| v.chart.name == chart).unwrap();
            let p = AccessiblePoint::exact(chart, &c);
            assert!(is_accessible(v, &p, 1e-12), "{chart} {c:?}");
            let idx = local_index(v, &p).unwrap();
            assert!(idx.matches_up_to_scale(&want.map(q)), "{chart} {c:?}: {:?}", idx.eigenvalues);
        }
    }

    #[test]
    fn second_example_ratio_condition() {
        let s = crate::catalog::get_system("example.ex2.system", &[("a", QuadExt::frac(4, 27))]).unwrap();
        let c = Chart::new(&s, "P", &["p", "q", "r"], &[], &["x - 3/2", "y/z - 1/2", "1/z"], &[("x", "p + 3/2"), ("z", "1/r"), ("y", "(q + 1/2)/r")], Some("r"))
            .unwrap();
        let v = ChartView::new(&s, &c).unwrap();
        let p = AccessiblePoint::exact("P", &[q(0), q(0), q(0)]);
        assert!(is_accessible(&v, &p, 1e-12));
        let idx = local_index(&v, &p).unwrap();
        let h = QuadExt::frac(-1, 2);
        assert!(idx.matches_up_to_scale(&[h.clone(), QuadExt::frac(-3, 2), h]), "{:?}", idx.eigenvalues);
        assert!(ratio_condition(&idx));
    }
}
