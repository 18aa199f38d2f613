//! Registry of every equation used by the verification suite, with the
//! constructors that turn scalar ODEs into jet systems and append time.
//!
//! Entries are written in a small fixture notation (see [`crate::mpoly::parse`]).
//! Parameter names are ASCII: `alpha`, `beta`, `gamma`, `delta`, `chi`,
//! `epsilon`, `a1`..`a6` for indexed parameters, `N`, `a`, `I`; the time
//! symbol is `t`; auxiliary differential symbols are `A0,A1,B0,B1,C0,C1`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::exact::QuadExt;
use crate::mpoly::{parse, AlgebraError, DerivationRules, MPoly, RatFun, VarTable, Vars};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),
    #[error("`{param}` is not a parameter of `{name}`")]
    NotAParameter { name: String, param: String },
    #[error("parameter {param} = {value} violates the constraint of `{name}`: {reason}")]
    Constraint { name: String, param: String, value: String, reason: String },
    #[error("wrong entry kind for `{0}`")]
    WrongKind(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// First-order system `d state/dt = field`.
#[derive(Clone, Debug)]
pub struct SystemDef {
    pub name: String,
    pub vars: Vars,
    /// Indices of the state variables in `vars`, in field order.
    pub state: Vec<usize>,
    pub field: Vec<RatFun>,
    pub params: Vec<usize>,
    /// Index of `t` when the system is non-autonomous or carries auxiliary symbols.
    pub time: Option<usize>,
    /// Rules for auxiliary differential symbols (never for state variables).
    pub rules: Option<DerivationRules>,
    pub dim: usize,
    /// Whether the source states the system is polynomial.
    pub polynomial: bool,
}

/// Scalar ODE `u^(order) = rhs(u, u', ..., u^(order-1))`.
#[derive(Clone, Debug)]
pub struct ScalarODE {
    pub name: String,
    pub vars: Vars,
    pub order: usize,
    /// Jet variables `u, u', ...` in `vars`.
    pub jets: Vec<usize>,
    pub rhs: RatFun,
    pub params: Vec<usize>,
    pub time: Option<usize>,
    pub rules: Option<DerivationRules>,
    pub polynomial: bool,
}

/// Pfaffian pair `dx = f dt + g ds`.
#[derive(Clone, Debug)]
pub struct PfaffianDef {
    pub name: String,
    pub vars: Vars,
    pub state: Vec<usize>,
    pub f: Vec<MPoly>,
    pub g: Vec<MPoly>,
    pub params: Vec<usize>,
}

#[derive(Clone, Debug)]
pub enum Entry {
    System(SystemDef),
    Scalar(ScalarODE),
    Pfaffian(PfaffianDef),
}

impl Entry {
    pub fn name(&self) -> &str {
        match self {
            Entry::System(s) => &s.name,
            Entry::Scalar(s) => &s.name,
            Entry::Pfaffian(p) => &p.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Entry::System(_) => "system",
            Entry::Scalar(_) => "scalar",
            Entry::Pfaffian(_) => "pfaffian",
        }
    }

    pub fn vars(&self) -> &Vars {
        match self {
            Entry::System(s) => &s.vars,
            Entry::Scalar(s) => &s.vars,
            Entry::Pfaffian(p) => &p.vars,
        }
    }

    pub fn params(&self) -> &[usize] {
        match self {
            Entry::System(s) => &s.params,
            Entry::Scalar(s) => &s.params,
            Entry::Pfaffian(p) => &p.params,
        }
    }

    pub fn as_system(&self) -> Result<&SystemDef, CatalogError> {
        match self {
            Entry::System(s) => Ok(s),
            _ => Err(CatalogError::WrongKind(self.name().to_string())),
        }
    }

    pub fn as_scalar(&self) -> Result<&ScalarODE, CatalogError> {
        match self {
            Entry::Scalar(s) => Ok(s),
            _ => Err(CatalogError::WrongKind(self.name().to_string())),
        }
    }

    pub fn as_pfaffian(&self) -> Result<&PfaffianDef, CatalogError> {
        match self {
            Entry::Pfaffian(p) => Ok(p),
            _ => Err(CatalogError::WrongKind(self.name().to_string())),
        }
    }

    /// Canonical JSON: variables, parameters and components in the polynomial form.
    pub fn to_json(&self) -> Value {
        let rf = |r: &RatFun| json!({"num": r.num.to_json()["terms"], "den": r.den.to_json()["terms"]});
        let names = |ix: &[usize], v: &Vars| ix.iter().map(|&i| v.name(i).to_string()).collect::<Vec<_>>();
        match self {
            Entry::System(s) => json!({
                "name": s.name, "kind": "system", "vars": s.vars.names(),
                "state": names(&s.state, &s.vars), "params": names(&s.params, &s.vars),
                "field": s.field.iter().map(rf).collect::<Vec<_>>(),
            }),
            Entry::Scalar(s) => json!({
                "name": s.name, "kind": "scalar", "vars": s.vars.names(), "order": s.order,
                "jets": names(&s.jets, &s.vars), "params": names(&s.params, &s.vars), "rhs": rf(&s.rhs),
            }),
            Entry::Pfaffian(p) => json!({
                "name": p.name, "kind": "pfaffian", "vars": p.vars.names(),
                "state": names(&p.state, &p.vars), "params": names(&p.params, &p.vars),
                "f": p.f.iter().map(|x| x.to_json()["terms"].clone()).collect::<Vec<_>>(),
                "g": p.g.iter().map(|x| x.to_json()["terms"].clone()).collect::<Vec<_>>(),
            }),
        }
    }

    /// Human-readable form.
    pub fn pretty(&self) -> String {
        let mut out = format!("{} ({})\n", self.name(), self.kind());
        match self {
            Entry::System(s) => {
                for (i, f) in s.state.iter().zip(&s.field) {
                    out += &format!("  d{}/dt = {}\n", s.vars.name(*i), f);
                }
            }
            Entry::Scalar(s) => {
                out += &format!("  u{} = {}\n", "'".repeat(s.order), s.rhs);
            }
            Entry::Pfaffian(p) => {
                for ((i, f), g) in p.state.iter().zip(&p.f).zip(&p.g) {
                    out += &format!("  d{} = ({}) dt + ({}) ds\n", p.vars.name(*i), f, g);
                }
            }
        }
        out
    }
}

/// Everything needed to differentiate along a flow: the variable table, the
/// state coordinates and a complete derivation table.
#[derive(Clone, Debug)]
pub struct Dynamics {
    pub vars: Vars,
    pub state: Vec<usize>,
    pub field: Vec<RatFun>,
    pub rules: DerivationRules,
    pub params: Vec<usize>,
}

impl SystemDef {
    pub fn dynamics(&self) -> Dynamics {
        let mut rules = DerivationRules::new(&self.vars);
        if let Some(r) = &self.rules {
            for (v, f) in r.rules() {
                rules.set(v, f.clone());
            }
        }
        if let Some(t) = self.time {
            rules.set(t, RatFun::one(&self.vars));
        }
        for &p in &self.params {
            rules.constant(p);
        }
        for (&v, f) in self.state.iter().zip(&self.field) {
            rules.set(v, f.clone());
        }
        // Symbols with no rule and no role are treated as constants.
        for v in 0..self.vars.len() {
            if rules.get(v).is_none() {
                rules.constant(v);
            }
        }
        Dynamics { vars: self.vars.clone(), state: self.state.clone(), field: self.field.clone(), rules, params: self.params.clone() }
    }

    pub fn state_names(&self) -> Vec<String> {
        self.state.iter().map(|&i| self.vars.name(i).to_string()).collect()
    }

    pub fn mentions_time(&self) -> bool {
        self.time.is_some() || self.rules.is_some()
    }
}

impl ScalarODE {
    /// Jet dynamics: `u -> u'`, ..., `u^(n-1) -> rhs`.
    pub fn dynamics(&self) -> Dynamics {
        let mut field: Vec<RatFun> = self.jets[1..].iter().map(|&j| RatFun::var(&self.vars, j)).collect();
        field.push(self.rhs.clone());
        let sys = SystemDef {
            name: self.name.clone(),
            vars: self.vars.clone(),
            state: self.jets.clone(),
            field,
            params: self.params.clone(),
            time: self.time,
            rules: self.rules.clone(),
            dim: self.order,
            polynomial: self.polynomial,
        };
        sys.dynamics()
    }
}

impl PfaffianDef {
    fn as_system(&self, g_dir: bool) -> SystemDef {
        let comps = if g_dir { &self.g } else { &self.f };
        SystemDef {
            name: format!("{}.{}", self.name, if g_dir { "s" } else { "t" }),
            vars: self.vars.clone(),
            state: self.state.clone(),
            field: comps.iter().map(|p| RatFun::poly(p.clone())).collect(),
            params: self.params.clone(),
            time: None,
            rules: None,
            dim: self.state.len(),
            polynomial: true,
        }
    }

    /// The `dt` direction as an ordinary system.
    pub fn t_system(&self) -> SystemDef {
        self.as_system(false)
    }

    /// The `ds` direction as an ordinary system.
    pub fn s_system(&self) -> SystemDef {
        self.as_system(true)
    }
}

// ---------------------------------------------------------------------------
// Constructors.

/// Jet names for a system of the given order: x, y, z, w, then x5, x6, ...
pub fn jet_names(order: usize) -> Vec<String> {
    (0..order)
        .map(|k| match k {
            0 => "x".to_string(),
            1 => "y".to_string(),
            2 => "z".to_string(),
            3 => "w".to_string(),
            _ => format!("x{}", k + 1),
        })
        .collect()
}

/// First-order system equivalent to a scalar ODE: field `(y, z, ..., rhs)`.
pub fn jet_system(ode: &ScalarODE) -> Result<SystemDef, CatalogError> {
    let names = jet_names(ode.order);
    let others: Vec<String> =
        ode.vars.names().iter().enumerate().filter(|(i, _)| !ode.jets.contains(i)).map(|(_, n)| n.clone()).collect();
    assert!(!others.iter().any(|n| names.contains(n)), "jet names collide with symbols of `{}`", ode.name);
    let all: Vec<String> = names.iter().cloned().chain(others.iter().cloned()).collect();
    let vars = VarTable::new(&all);
    let ren = |r: &RatFun| -> Result<RatFun, AlgebraError> {
        let jets: Vec<(usize, RatFun)> = ode.jets.iter().zip(&names).map(|(&j, n)| (j, RatFun::var(&vars, vars.idx(n)))).collect();
        // Move to a union table, then substitute jets and land in `vars`.
        let u = VarTable::union(&[ode.vars.as_ref(), vars.as_ref()]);
        let r = r.rebase(&u)?;
        let b: Vec<(usize, RatFun)> =
            jets.into_iter().map(|(j, f)| Ok((u.idx(ode.vars.name(j)), f.rebase(&u)?))).collect::<Result<_, AlgebraError>>()?;
        r.substitute(&b)?.rebase(&vars)
    };
    let mut field: Vec<RatFun> = (1..ode.order).map(|k| RatFun::var(&vars, k)).collect();
    field.push(ren(&ode.rhs)?);
    let map_idx = |i: usize| vars.idx(ode.vars.name(i));
    let rules = match &ode.rules {
        None => None,
        Some(r) => {
            let mut nr = DerivationRules::new(&vars);
            for (v, f) in r.rules() {
                nr.set(map_idx(v), ren(f)?);
            }
            Some(nr)
        }
    };
    Ok(SystemDef {
        name: format!("{}.jet", ode.name),
        vars: vars.clone(),
        state: (0..ode.order).collect(),
        field,
        params: ode.params.iter().map(|&p| map_idx(p)).collect(),
        time: ode.time.map(map_idx),
        rules,
        dim: ode.order,
        polynomial: ode.polynomial,
    })
}

/// Result of [`autonomize`].
#[derive(Clone, Debug)]
pub struct Autonomized {
    pub system: SystemDef,
    /// Set when the input did not mention `t`; the system is returned unchanged.
    pub warning: Option<String>,
}

/// Append `t` (and any auxiliary differential symbols) as state variables.
pub fn autonomize(sys: &SystemDef) -> Autonomized {
    if !sys.mentions_time() {
        return Autonomized { system: sys.clone(), warning: Some(format!("`{}` does not mention t", sys.name)) };
    }
    let mut state = sys.state.clone();
    let mut field = sys.field.clone();
    let vars = sys.vars.clone();
    let t = sys.time.unwrap_or_else(|| vars.idx("t"));
    state.push(t);
    field.push(RatFun::one(&vars));
    if let Some(r) = &sys.rules {
        for (v, f) in r.rules() {
            if v != t && !state.contains(&v) {
                state.push(v);
                field.push(f.clone());
            }
        }
    }
    let dim = state.len();
    Autonomized {
        system: SystemDef {
            name: format!("{}.autonomous", sys.name),
            vars,
            state,
            field,
            params: sys.params.clone(),
            time: None,
            rules: None,
            dim,
            polynomial: sys.polynomial,
        },
        warning: None,
    }
}

// ---------------------------------------------------------------------------
// Registry.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Constraint {
    None,
    /// Positive integer, not 1, not a multiple of 6.
    ClassXI,
    /// Positive integer, not 1, not 6.
    ClassXII,
}

struct Registered {
    entry: Entry,
    constraint: Constraint,
    note: &'static str,
}

fn table(names: &[&str]) -> Vars {
    VarTable::new(names)
}

fn p(vars: &Vars, s: &str) -> RatFun {
    parse(vars, s).unwrap_or_else(|e| panic!("catalog formula `{s}`: {e}"))
}

fn system(name: &str, state: &[&str], extra: &[&str], params: &[&str], field: &[&str]) -> SystemDef {
    let names: Vec<&str> = state.iter().chain(extra).chain(params).copied().collect();
    let vars = table(&names);
    let field: Vec<RatFun> = field.iter().map(|s| p(&vars, s)).collect();
    let polynomial = field.iter().all(|f| f.is_poly());
    SystemDef {
        name: name.to_string(),
        state: (0..state.len()).collect(),
        params: params.iter().map(|n| vars.idx(n)).collect(),
        time: vars.index_of("t"),
        rules: None,
        dim: state.len(),
        polynomial,
        field,
        vars,
    }
}


fn scalar(name: &str, order: usize, extra: &[&str], params: &[&str], rhs: &str) -> ScalarODE {
    let jets = ["u", "u'", "u''", "u'''"];
    let names: Vec<&str> = jets[..order].iter().chain(extra).chain(params).copied().collect();
    let vars = table(&names);
    let rhs = p(&vars, rhs);
    ScalarODE {
        name: name.to_string(),
        order,
        jets: (0..order).collect(),
        params: params.iter().map(|n| vars.idx(n)).collect(),
        time: vars.index_of("t"),
        rules: None,
        polynomial: rhs.is_poly(),
        rhs,
        vars,
    }
}

fn pfaffian(name: &str, state: &[&str], params: &[&str], f: &[&str], g: &[&str]) -> PfaffianDef {
    let names: Vec<&str> = state.iter().chain(params).copied().collect();
    let vars = table(&names);
    let poly = |s: &str| p(&vars, s).to_poly().unwrap_or_else(|| panic!("`{s}` is not polynomial"));
    PfaffianDef {
        name: name.to_string(),
        state: (0..state.len()).collect(),
        params: params.iter().map(|n| vars.idx(n)).collect(),
        f: f.iter().map(|s| poly(s)).collect(),
        g: g.iter().map(|s| poly(s)).collect(),
        vars,
    }
}

/// Derivation rules for the coefficient functions of the Chazy I family.
fn chazy_i_rules(vars: &Vars) -> DerivationRules {
    let mut r = DerivationRules::new(vars);
    r.set_named("A0", p(vars, "A1"));
    r.set_named("A1", p(vars, "6*A0^2"));
    r.set_named("B0", p(vars, "B1"));
    r.set_named("B1", p(vars, "6*A0*B0"));
    r.set_named("C0", p(vars, "C1"));
    r.set_named("C1", p(vars, "B0^2 + 2*A0*C0"));
    r
}

/// The closure written with third derivatives of A and B:
/// B'' = 2/3 (9AB + 12A'A - A'''), C'' = 1/3 (3B^2 + 6AC + 6A'B + 6AB' - B''').
/// A''' and B''' are obtained by differentiating the rules already in the table.
fn chazy_i_rules_third_order(vars: &Vars) -> DerivationRules {
    let mut r = DerivationRules::new(vars);
    r.set_named("A0", p(vars, "A1"));
    r.set_named("A1", p(vars, "6*A0^2"));
    r.set_named("B0", p(vars, "B1"));
    r.set_named("C0", p(vars, "C1"));
    for v in ["B1", "C1"] {
        r.constant(vars.idx(v));
    }
    let a3 = r.derive(&p(vars, "6*A0^2")).expect("A''' from the rules");
    let b2 = &p(vars, "2/3*(9*A0*B0 + 12*A1*A0)") - &a3.scale(&QuadExt::frac(2, 3));
    r.set_named("B1", b2.clone());
    let b3 = r.derive(&b2).expect("B''' from the rules");
    let c2 = &p(vars, "1/3*(3*B0^2 + 6*A0*C0 + 6*A1*B0 + 6*A0*B1)") - &b3.scale(&QuadExt::frac(1, 3));
    r.set_named("C1", c2);
    r
}

const AUX: [&str; 7] = ["t", "A0", "A1", "B0", "B1", "C0", "C1"];

fn build() -> BTreeMap<String, Registered> {
    let mut m: BTreeMap<String, Registered> = BTreeMap::new();
    let mut add = |e: Entry, c: Constraint, note: &'static str| {
        let name = e.name().to_string();
        assert!(m.insert(name.clone(), Registered { entry: e, constraint: c, note }).is_none(), "duplicate {name}");
    };
    let sc = |e: ScalarODE| Entry::Scalar(e);
    let sy = |e: SystemDef| Entry::System(e);
    let none = Constraint::None;

    // Canonical reduced Chazy classes.
    let canon: [(&str, &str); 12] = [
        ("I", "-6*u'^2"),
        ("II", "-2*u*u'' - 2*u'^2"),
        ("III", "2*u*u'' - 3*u'^2"),
        ("IV", "-3*u*u'' - 3*u'^2 - 3*u^2*u'"),
        ("V", "-2*u*u'' - 4*u'^2 - 2*u^2*u'"),
        ("VI", "-u*u'' - 5*u'^2 - u^2*u'"),
        ("VII", "-u*u'' - 2*u'^2 + 2*u^2*u'"),
        ("VIII", "6*u^2*u'"),
        ("IX", "12*u'^2 + 72*u^2*u' + 54*u^4"),
        ("Xa", "6*u^2*u' + 3/11*(9+7*sqrt(3))*(u'+u^2)^2"),
        ("Xb", "6*u^2*u' + 3/11*(9-7*sqrt(3))*(u'+u^2)^2"),
        ("XIII", "12*u*u'"),
    ];
    for (cls, rhs) in canon {
        add(sc(scalar(&format!("chazy.{cls}.canonical"), 3, &[], &[], rhs)), none, "canonical reduced class");
    }
    add(
        sc(scalar("chazy.XI.canonical", 3, &[], &["N"], "-2*u*u'' - 2*u'^2 + 24/(N^2-1)*(u'+u^2)^2")),
        Constraint::ClassXI,
        "N positive, not 1, not a multiple of 6",
    );
    add(
        sc(scalar("chazy.XII.canonical", 3, &[], &["N"], "2*u*u'' - 3*u'^2 - 4/(N^2-36)*(6*u'-u^2)^2")),
        Constraint::ClassXII,
        "N positive, not 1, not 6",
    );

    // Chazy III and its derived forms.
    add(
        sy(system("chazy.III.system", &["x", "y", "z"], &[], &[], &["x^2 - x*y", "y^2 - x*y + x*z - y*z", "z^2 + 8*x*z - 20*x*y"])),
        none,
        "Chazy III as a quadratic system",
    );
    add(
        sy(system("chazy.III.XYZ", &["X", "Y", "Z"], &[], &[], &["-X*Y", "(2*X+Y-Z)*Y", "Z^2 + 8*X*Z - 20*X*Y - 20*X^2"])),
        none,
        "shifted quadratic system",
    );
    add(
        sc(scalar(
            "chazy.III.v",
            3,
            &[],
            &[],
            "-3*(u^2-u')*u' + 3/2*u^4 - (u^3-2*u'')*(5*u^3+2*u'')/(2*(u^2+2*u'))",
        )),
        none,
        "equation for v = -u'/u",
    );
    add(
        sy(system(
            "darboux-halphen",
            &["x", "y", "z"],
            &[],
            &[],
            &["y*z - x*(y+z)", "x*z - y*(x+z)", "x*y - z*(x+y)"],
        )),
        none,
        "classical Darboux-Halphen system",
    );
    // First chart system of the quadratic Chazy III system.
    add(sy(system("chazy.III.chart1", &["x1", "y1", "z1"], &[], &[], &["x1^2*y1 - z1", "-2*x1*y1^2", "2*y1*(6*x1^3*y1 + 5*x1*z1 + 6*z1)"])), none, "chart 1");

    // Examples for the integer-ratio condition.
    add(sc(scalar("example.ex1", 3, &[], &[], "u*u'' - 2*u'^2 + 6*u^2*u'")), none, "integrable non-Painleve example");
    add(
        sy(system("example.ex1.system", &["x", "y", "z"], &[], &[], &["x^2 - x*y", "y^2 - x*y + x*z - y*z", "z^2 - 3*x*z - 4*x*y"])),
        none,
        "system of the first example",
    );
    add(sc(scalar("example.ex2", 3, &[], &["a"], "2*u*u'' - 3*u'^2 + a*(6*u'-u^2)^2")), none, "one-parameter family");
    add(
        sy(system(
            "example.ex2.system",
            &["x", "y", "z"],
            &[],
            &["a"],
            &["2*x*y - x*z", "-y^2 + y*z", "-3*x*y^2 + 36*a*x*y^2 - 12*a*x^2*y^2 + a*x^3*y^2 + 2*x*y*z - z^2"],
        )),
        none,
        "system of the second example",
    );

    // Chazy IX.
    add(sc(scalar("chazy.IX", 3, &[], &["delta"], "54*u^4 + 72*u^2*u' + 12*u'^2 + delta")), none, "Chazy IX with delta");
    add(
        sy(system(
            "chazy.IX.system",
            &["x", "y", "z"],
            &[],
            &["delta"],
            &["-3/2*(sqrt(5)-1)*x^2 + y", "z", "3*(sqrt(5)+3)*y^2 + 3*(sqrt(5)-1)*x*z + delta"],
        )),
        none,
        "Chazy IX polynomial system",
    );
    add(
        sy(system(
            "chazy.IX.s0-image",
            &["X", "Y", "Z"],
            &[],
            &["delta"],
            &["-3/2*(sqrt(5)-1)*X^2 - (9+4*sqrt(5))*Y", "Z", "3*(sqrt(5)+3)*Y^2 + 3*(sqrt(5)-1)*X*Z + delta"],
        )),
        none,
        "image of s0",
    );
    add(
        sy(system(
            "chazy.IXb.system",
            &["X", "Y", "Z"],
            &[],
            &["delta"],
            &["-3/2*(-sqrt(5)-1)*X^2 + Y", "Z", "3*(-sqrt(5)+3)*Y^2 + 3*(-sqrt(5)-1)*X*Z + delta"],
        )),
        none,
        "Chazy IX system with the sign of sqrt(5) changed",
    );
    add(
        sy(system(
            "chazy.IX.s1-image",
            &["u", "v", "w"],
            &[],
            &["delta"],
            &["-3/2*(-sqrt(5)-1)*u^2 + (-9+4*sqrt(5))*v", "w", "3*(-sqrt(5)+3)*v^2 + 3*(-sqrt(5)-1)*u*w + delta"],
        )),
        none,
        "image of s1",
    );
    add(
        Entry::Pfaffian(pfaffian(
            "chazy.IX.pde",
            &["x", "y", "z"],
            &["delta"],
            &["-3/2*(sqrt(5)-1)*x^2 + y", "z", "3*(sqrt(5)+3)*y^2 + 3*(sqrt(5)-1)*x*z + delta"],
            &[
                "-12*(sqrt(5)+2)*x^2*y + (sqrt(5)+1)*(3*x*z - 2*y^2 - 2/3*delta)",
                "-6*(2*sqrt(5)-5)*x^2*z + 12*sqrt(5)*x*y^2 - (sqrt(5)+1)*y*z + (3*sqrt(5)-5)*delta*x",
                "48*x*y*z - 24*y^3 - (sqrt(5)+1)*z^2 + 2*(sqrt(5)-3)*delta*y",
            ],
        )),
        none,
        "coupled t,s system containing Chazy IX",
    );
    add(
        Entry::Pfaffian(pfaffian(
            "chazy.IX.pde-transformed",
            &["X", "Y", "Z"],
            &["delta"],
            &["Y", "Z", "54*X^4 + 72*X^2*Y + 12*Y^2 + delta"],
            &[
                "54*X^4 + 18*X^2*Y + 3*Y^2 - 9/2*X*Z + delta",
                "-243*X^5 - 108*X^3*Y - 18*X*Y^2 + 18*X^2*Z + 3/2*Y*Z - 9/2*delta*X",
                "972*X^6 + 162*X^4*Y - 108*X^3*Z + 3/2*Z^2 + 18*delta*X^2 - 3*delta*Y",
            ],
        )),
        none,
        "coupled system in jet coordinates of u = X",
    );

    // Second Painleve.
    add(sc(scalar("pii", 2, &["t"], &["alpha"], "2*u^3 + t*u + alpha")), none, "second Painleve equation");
    add(
        sy(system("pii.system", &["q", "p"], &["t"], &["alpha"], &["q^2 + p + t/2", "-2*q*p + alpha - 1/2"])),
        none,
        "second Painleve Hamiltonian system",
    );

    // Chazy X.
    let xa = "6*u^2*u' + 3/11*(9+7*sqrt(3))*(u'+u^2)^2 - 1/22*(4-3*sqrt(3))*alpha*u' + 1/44*(3-5*sqrt(3))*alpha*u^2 - 1/352*(9+7*sqrt(3))*alpha^2";
    let xb = "6*u^2*u' + 3/11*(9-7*sqrt(3))*(u'+u^2)^2 - 1/22*(4+3*sqrt(3))*alpha*u' + 1/44*(3+5*sqrt(3))*alpha*u^2 - 1/352*(9-7*sqrt(3))*alpha^2";
    add(sc(scalar("chazy.Xa", 3, &[], &["alpha"], xa)), none, "Chazy X.a with alpha");
    add(sc(scalar("chazy.Xb", 3, &[], &["alpha"], xb)), none, "Chazy X.b with alpha");
    add(
        sy(system(
            "chazy.Xa.system",
            &["x", "y", "z"],
            &[],
            &["alpha"],
            &[
                "(3+sqrt(3))/2*x^2 + y",
                "z",
                "2/11*(-3+5*sqrt(3))*y^2 - (3+sqrt(3))*x*z + 1/22*(-4+3*sqrt(3))*alpha*y - 1/352*(9+7*sqrt(3))*alpha^2",
            ],
        )),
        none,
        "Chazy X.a polynomial system",
    );
    add(
        sy(system(
            "chazy.Xa.s0-image",
            &["X", "Y", "Z"],
            &[],
            &["alpha"],
            &[
                "(3+sqrt(3))/2*X^2 + 1/11*(-43+24*sqrt(3))*Y + (21-13*sqrt(3))/66*alpha",
                "Z",
                "2/11*(-3+5*sqrt(3))*Y^2 - (3+sqrt(3))*X*Z - 1/22*(-4+3*sqrt(3))*alpha*Y - 1/352*(9+7*sqrt(3))*alpha^2",
            ],
        )),
        none,
        "image of s0",
    );
    add(
        sy(system(
            "chazy.Xa.pi-image",
            &["X", "Y", "Z"],
            &[],
            &["alpha"],
            &[
                "-X^2 + Y - 1/8*(sqrt(3)-1)*alpha",
                "(5+sqrt(3))*X*Y + Z",
                "-(15+7*sqrt(3))*X^2*Y + 2/11*(-3+5*sqrt(3))*Y^2 - (3+sqrt(3))*X*Z - 3/4*alpha*Y",
            ],
        )),
        none,
        "image of pi",
    );
    add(
        sy(system(
            "chazy.Xa.s1-image",
            &["u", "v", "w"],
            &[],
            &["alpha"],
            &[
                "-(4+sqrt(3))*u^2 + (8*(89+46*sqrt(3))*v - 11*(11+7*sqrt(3))*alpha)/1144",
                "(5+sqrt(3))*u*v - 1/13*(-4+sqrt(3))*w",
                "(15+7*sqrt(3))*u^2*v + (3+sqrt(3))*u*w + 1/44*v*(8*(3-5*sqrt(3))*v + 33*alpha)",
            ],
        )),
        none,
        "image of s1",
    );

    // Chazy I with coefficient functions.
    {
        let mut e = scalar("chazy.I", 3, &AUX, &[], "6*(-u'^2 + A0*(u' + u^2) + B0*u + C0)");
        e.rules = Some(chazy_i_rules(&e.vars));
        add(sc(e), none, "Chazy I with A'' = 6A^2, B'' = 6AB, C'' = B^2 + 2AC");
        let mut s = system("chazy.I.system", &["x", "y", "z"], &AUX, &[], &["y", "z", "6*(-y^2 + A0*(y + x^2) + B0*x + C0)"]);
        s.rules = Some(chazy_i_rules(&s.vars));
        add(sy(s), none, "Chazy I polynomial system");
        let mut s = system("chazy.I.system-rela2", &["x", "y", "z"], &AUX, &[], &["y", "z", "6*(-y^2 + A0*(y + x^2) + B0*x + C0)"]);
        s.rules = Some(chazy_i_rules_third_order(&s.vars));
        add(sy(s), none, "Chazy I polynomial system, closure written with third derivatives");
    }

    // Chazy VIII.
    add(
        sc(scalar(
            "chazy.VIII",
            3,
            &["t"],
            &["alpha", "beta", "gamma"],
            "6*u^2*u' + (-2*alpha^2*t^2 + beta*t + gamma)*(u' + alpha) + 2*alpha*u^2 + (-4*alpha^2*t + beta)*u",
        )),
        none,
        "Chazy VIII with alpha, beta, gamma",
    );
    add(
        sy(system(
            "chazy.VIII.system",
            &["x", "y", "z"],
            &["t"],
            &["alpha", "beta", "gamma"],
            &["x^2 + y + beta/2*t - alpha^2*t^2 + alpha + gamma/2", "-2*x*y + z + 2*alpha^2*t - beta/2", "-2*alpha*y - 2*alpha^2"],
        )),
        none,
        "Chazy VIII polynomial system",
    );
    add(
        sy(system(
            "chazy.VIII.s0-image",
            &["X", "Y", "Z"],
            &["t"],
            &["alpha", "beta", "gamma"],
            &["X^2 + Y - alpha^2*t^2 + beta/2*t + 3*alpha + gamma/2", "Z - 2*X*Y - 2*alpha^2*t + beta/2", "2*alpha*Y + 2*alpha^2"],
        )),
        none,
        "image of s0",
    );
    add(
        sy(system(
            "chazy.VIII.s1-image",
            &["X", "Y", "Z"],
            &["t"],
            &["alpha", "beta", "gamma"],
            &["X^2 + Y - alpha^2*t^2 + beta/2*t - 3*alpha + gamma/2", "Z - 2*X*Y - 2*alpha^2*t + beta/2", "-2*alpha*Y + 2*alpha^2"],
        )),
        none,
        "image of s1",
    );

    // Six-parameter system.
    add(
        sy(system(
            "six-param.system",
            &["x", "y", "z"],
            &[],
            &["a1", "a2", "a3", "a4", "a5", "a6"],
            &[
                "x^2 - x*y - x*z + (-a3+a4-a5+a6)*x + a3*y + a5*z + a3*a5 - a4*a5 - a3*a6",
                "y^2 - x*y - y*z + a1*x + (-a1+a2+a5-a6)*y + a6*z - a1*a5 + a1*a6 - a2*a6",
                "z^2 - x*z - y*z + a2*x + a4*y + (a1-a2+a3-a4)*z - a2*a3 - a1*a4 + a2*a4",
            ],
        )),
        none,
        "six-parameter system",
    );
    add(
        sy(system(
            "six-param.reduced",
            &["y", "z"],
            &[],
            &["a1", "a2", "a3", "a4", "a5", "a6", "I"],
            &[
                "y^2 - y*z + (-a1+a2+a5-a6)*y + a6*z - a1*a5 + a1*a6 - a2*a6 - (y-a1)*(I + y*z - a4*y + (a5-a6)*z)/(z-a2)",
                "z^2 - 2*y*z + 2*a4*y + (a1-a2+a3-a4-a5+a6)*z - a1*a4 + a2*a4 - a2*a3 - I",
            ],
        )),
        none,
        "reduction by the first integral",
    );
    add(
        sy(system(
            "six-param.hamiltonian",
            &["X", "Y"],
            &[],
            &["a1", "a2", "a3", "a4", "a5", "a6", "I"],
            &[
                "2*X^2*Y + (a2-a4)*X^2 - 2*X*Y + (a1-a2-a3+a4+a5-a6)*X + a6 - a1",
                "-2*X*Y^2 + Y^2 - 2*(a2-a4)*X*Y - (a1-a2-a3+a4+a5-a6)*Y - I - a1*a2 + a1*a4 - a2*a5 + a2*a6",
            ],
        )),
        none,
        "autonomous fifth Painleve Hamiltonian system",
    );

    // Three-parameter system.
    add(
        sy(system(
            "three-param.system",
            &["x", "y", "z"],
            &[],
            &["a1", "a2", "a3"],
            &[
                "x^2 - x*y - (a1-2*a3)*x + (a1-a3)*y - (a1-a3)*a3",
                "y^2 - x*y + x*z - y*z + (a1-a2)*x - (a1-a2+a3)*y + a3*z + (a1-a2)*a3",
                "z^2 - 3*x*z + 3*a2*x + (3*a1-2*a2-3*a3)*z - a2*(3*a1-a2-3*a3)",
            ],
        )),
        none,
        "three-parameter system",
    );

    // Chazy XI with N = 3.
    add(
        sc(scalar("chazy.XI3", 3, &[], &[], "3*u^4 + 6*u^2*u' + u'^2 - 2*u*u''")),
        none,
        "Chazy XI with N = 3",
    );
    add(
        sy(system("chazy.XI3.system", &["x", "y", "z"], &[], &[], &["x^2 - 2*x*y - 2*y*z", "y^2 - 2*x*y", "x*z"])),
        none,
        "Chazy XI (N = 3) as a quadratic system",
    );
    add(
        sy(system(
            "chazy.XI3.reduced",
            &["y", "z"],
            &[],
            &["I"],
            &["y^2 - 2*(I - y^2*z^4)/(y*z^3)", "(I - y^2*z^4)/(y^2*z^2)"],
        )),
        none,
        "reduction by the first integral",
    );
    add(sy(system("chazy.XI3.autoPIV", &["X", "Y"], &[], &["I"], &["Y^2", "-I*X^2 + 1"])), none, "autonomous fourth Painleve system");
    add(
        sy(system("a2-weyl.system", &["s", "c"], &[], &["a", "a1", "a2"], &["c^2 - a*s + a1", "-s^2 + a*c + a2"])),
        none,
        "generalization with affine Weyl symmetry",
    );

    // Halphen systems.
    let common3 = "gamma*(x-y)^2 + beta*(z-x)^2 + alpha*(y-z)^2";
    add(
        sy(system(
            "halphen.classic",
            &["x", "y", "z"],
            &[],
            &["alpha", "beta", "gamma"],
            &[&format!("x^2 + {common3}"), &format!("y^2 + {common3}"), &format!("z^2 + {common3}")],
        )),
        none,
        "Halphen's second system",
    );
    let common4 = "alpha*(x-y)^2 + beta*(x-z)^2 + chi*(x-w)^2 + delta*(y-z)^2 + epsilon*(y-w)^2 + gamma*(z-w)^2";
    add(
        sy(system(
            "halphen.four",
            &["x", "y", "z", "w"],
            &[],
            &["alpha", "beta", "chi", "delta", "epsilon", "gamma"],
            &[&format!("x^2 + {common4}"), &format!("y^2 + {common4}"), &format!("z^2 + {common4}"), &format!("w^2 + {common4}")],
        )),
        none,
        "four-variable generalization",
    );
    m
}

fn registry() -> &'static BTreeMap<String, Registered> {
    static REG: OnceLock<BTreeMap<String, Registered>> = OnceLock::new();
    REG.get_or_init(build)
}

/// Sorted list of registered names.
pub fn list() -> Vec<&'static str> {
    registry().keys().map(|s| s.as_str()).collect()
}

/// One-line description of an entry.
pub fn note(name: &str) -> Option<&'static str> {
    registry().get(name).map(|r| r.note)
}

/// Names closest to `name`, for error messages.
pub fn suggest(name: &str) -> Vec<&'static str> {
    let mut scored: Vec<(usize, &'static str)> = list().into_iter().map(|n| (edit_distance(name, n), n)).collect();
    scored.sort();
    scored.into_iter().take(5).map(|(_, n)| n).collect()
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let c = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            cur[j] = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + c);
        }
        prev = cur;
    }
    prev[b.len()]
}

fn check_constraint(name: &str, c: Constraint, param: &str, v: &QuadExt) -> Result<(), CatalogError> {
    if c == Constraint::None || param != "N" {
        return Ok(());
    }
    let err = |reason: &str| CatalogError::Constraint {
        name: name.to_string(),
        param: param.to_string(),
        value: v.to_string(),
        reason: reason.to_string(),
    };
    let n = v.as_integer().and_then(|n| n.to_i64()).ok_or_else(|| err("N must be an integer"))?;
    if n <= 0 {
        return Err(err("N must be positive"));
    }
    if n == 1 {
        return Err(err("N must not be 1"));
    }
    match c {
        Constraint::ClassXI if n % 6 == 0 => Err(err("N must not be a multiple of 6")),
        Constraint::ClassXII if n == 6 => Err(err("N must not be 6")),
        _ => Ok(()),
    }
}

/// Look up an entry and optionally bind some of its parameters to constants.
pub fn get(name: &str, bindings: &[(&str, QuadExt)]) -> Result<Entry, CatalogError> {
    let reg = registry().get(name).ok_or_else(|| CatalogError::UnknownName(name.to_string()))?;
    let mut e = reg.entry.clone();
    if bindings.is_empty() {
        return Ok(e);
    }
    let vars = e.vars().clone();
    let mut subst = Vec::new();
    let mut bound = Vec::new();
    for (pname, v) in bindings {
        let i = vars.index_of(pname).filter(|i| e.params().contains(i)).ok_or_else(|| CatalogError::NotAParameter {
            name: name.to_string(),
            param: pname.to_string(),
        })?;
        check_constraint(name, reg.constraint, pname, v)?;
        subst.push((i, RatFun::constant(&vars, v.clone())));
        bound.push(i);
    }
    let sub = |r: &RatFun| r.substitute(&subst);
    match &mut e {
        Entry::System(s) => {
            s.field = s.field.iter().map(sub).collect::<Result<_, _>>()?;
            s.params.retain(|i| !bound.contains(i));
            s.polynomial = s.field.iter().all(|f| f.is_poly());
        }
        Entry::Scalar(s) => {
            s.rhs = sub(&s.rhs)?;
            s.params.retain(|i| !bound.contains(i));
            s.polynomial = s.rhs.is_poly();
        }
        Entry::Pfaffian(pf) => {
            let subp = |m: &MPoly| -> Result<MPoly, AlgebraError> {
                let b: Vec<(usize, MPoly)> = subst.iter().map(|(i, r)| (*i, r.num.clone())).collect();
                m.subst_poly(&b)
            };
            pf.f = pf.f.iter().map(subp).collect::<Result<_, _>>()?;
            pf.g = pf.g.iter().map(subp).collect::<Result<_, _>>()?;
            pf.params.retain(|i| !bound.contains(i));
        }
    }
    Ok(e)
}

pub fn get_system(name: &str, bindings: &[(&str, QuadExt)]) -> Result<SystemDef, CatalogError> {
    match get(name, bindings)? {
        Entry::System(s) => Ok(s),
        e => Err(CatalogError::WrongKind(e.name().to_string())),
    }
}

pub fn get_scalar(name: &str, bindings: &[(&str, QuadExt)]) -> Result<ScalarODE, CatalogError> {
    match get(name, bindings)? {
        Entry::Scalar(s) => Ok(s),
        e => Err(CatalogError::WrongKind(e.name().to_string())),
    }
}

pub fn get_pfaffian(name: &str, bindings: &[(&str, QuadExt)]) -> Result<PfaffianDef, CatalogError> {
    match get(name, bindings)? {
        Entry::Pfaffian(p) => Ok(p),
        e => Err(CatalogError::WrongKind(e.name().to_string())),
    }
}

/// Well-formedness problems of an entry; empty when the entry is sound.
pub fn lint(e: &Entry) -> Vec<String> {
    let mut out = Vec::new();
    let vars = e.vars();
    let housed = |r: &RatFun, what: &str, out: &mut Vec<String>| {
        if !std::sync::Arc::ptr_eq(r.vars(), vars) && r.vars().names() != vars.names() {
            out.push(format!("{what}: component over a foreign variable table"));
        }
    };
    match e {
        Entry::System(s) => {
            if s.field.len() != s.dim || s.state.len() != s.dim {
                out.push(format!("arity: dim {} but {} components", s.dim, s.field.len()));
            }
            for f in &s.field {
                housed(f, "field", &mut out);
            }
            if s.polynomial && !s.field.iter().all(|f| f.is_poly()) {
                out.push("declared polynomial but a component has a denominator".into());
            }
            if let Some(r) = &s.rules {
                for (v, f) in r.rules() {
                    if s.state.contains(&v) {
                        out.push(format!("rule given for state variable {}", vars.name(v)));
                    }
                    housed(f, "rule", &mut out);
                }
            }
            // Every occurring symbol must have a role.
            let d = s.dynamics();
            for f in &s.field {
                for v in f.num.support().into_iter().chain(f.den.support()) {
                    if d.rules.get(v).is_none() {
                        out.push(format!("symbol {} has no derivation rule", vars.name(v)));
                    }
                }
            }
        }
        Entry::Scalar(s) => {
            if s.jets.len() != s.order {
                out.push("jet count differs from the order".into());
            }
            housed(&s.rhs, "rhs", &mut out);
            if s.polynomial && !s.rhs.is_poly() {
                out.push("declared polynomial but rhs has a denominator".into());
            }
        }
        Entry::Pfaffian(p) => {
            if p.f.len() != p.g.len() || p.f.len() != p.state.len() {
                out.push("f, g and state lengths differ".into());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn registry_is_large_and_clean() {
        let names = list();
        assert!(names.len() >= 30, "only {} entries", names.len());
        for n in names {
            let e = get(n, &[]).unwrap();
            assert!(lint(&e).is_empty(), "{n}: {:?}", lint(&e));
        }
    }

    #[test]
    fn canonical_iii() {
        let e = get_scalar("chazy.III.canonical", &[]).unwrap();
        assert!(e.rhs.equals(&parse(&e.vars, "2*u*u'' - 3*u'^2").unwrap()));
    }

    #[test]
    fn class_xii_binding() {
        let e = get_scalar("chazy.XII.canonical", &[("N", QuadExt::int(3))]).unwrap();
        // -4/(9-36) = 4/27
        let want = parse(&e.vars, "2*u*u'' - 3*u'^2 + 4/27*(6*u'-u^2)^2").unwrap();
        assert!(e.rhs.equals(&want));
        assert!(e.params.is_empty());
    }

    #[test]
    fn class_constraints() {
        assert!(get("chazy.XII.canonical", &[("N", QuadExt::int(6))]).is_err());
        assert!(get("chazy.XII.canonical", &[("N", QuadExt::int(12))]).is_ok());
        assert!(get("chazy.XI.canonical", &[("N", QuadExt::int(12))]).is_err());
        assert!(get("chazy.XI.canonical", &[("N", QuadExt::int(1))]).is_err());
        assert!(get("chazy.XI.canonical", &[("N", QuadExt::int(5))]).is_ok());
        assert!(get("chazy.XI.canonical", &[("N", QuadExt::frac(5, 2))]).is_err());
    }

    #[test]
    fn binding_errors() {
        assert!(matches!(get("nope", &[]), Err(CatalogError::UnknownName(_))));
        assert!(matches!(get("chazy.IX", &[("u", QuadExt::int(1))]), Err(CatalogError::NotAParameter { .. })));
        assert!(suggest("chazy.IX.sys").contains(&"chazy.IX.system"));
    }

    #[test]
    fn halphen_parameter_zeroing() {
        let z = QuadExt::zero();
        let s = get_system("halphen.classic", &[("alpha", z.clone()), ("beta", z.clone()), ("gamma", z)]).unwrap();
        for (i, f) in s.field.iter().enumerate() {
            let v = RatFun::var(&s.vars, i);
            assert!(f.equals(&(&v * &v)));
        }
    }

    #[test]
    fn jet_system_of_chazy_iii() {
        let e = get_scalar("chazy.III.canonical", &[]).unwrap();
        let s = jet_system(&e).unwrap();
        assert_eq!(s.state_names(), vec!["x", "y", "z"]);
        let want = ["y", "z", "2*x*z - 3*y^2"];
        for (f, w) in s.field.iter().zip(want) {
            assert!(f.equals(&parse(&s.vars, w).unwrap()));
        }
    }

    #[test]
    fn jet_system_of_chazy_ix() {
        let s = jet_system(&get_scalar("chazy.IX", &[]).unwrap()).unwrap();
        assert!(s.field[2].equals(&parse(&s.vars, "54*x^4 + 72*x^2*y + 12*y^2 + delta").unwrap()));
    }

    #[test]
    fn jet_system_first_order() {
        let vars = VarTable::new(&["u"]);
        let ode = ScalarODE {
            name: "logistic".into(),
            vars: vars.clone(),
            order: 1,
            jets: vec![0],
            rhs: parse(&vars, "u^2").unwrap(),
            params: vec![],
            time: None,
            rules: None,
            polynomial: true,
        };
        let s = jet_system(&ode).unwrap();
        assert!(s.field[0].equals(&parse(&s.vars, "x^2").unwrap()));
    }

    #[test]
    fn jet_then_eliminate_recovers_rhs() {
        for n in ["chazy.IX", "chazy.Xa", "chazy.III.v", "chazy.VIII"] {
            let ode = get_scalar(n, &[]).unwrap();
            let s = jet_system(&ode).unwrap();
            // Rename x, y, z back to u, u', u''.
            let back = crate::mpoly::compose(
                &s.field[2],
                &[("x", &RatFun::var(&ode.vars, 0)), ("y", &RatFun::var(&ode.vars, 1)), ("z", &RatFun::var(&ode.vars, 2))],
                &ode.vars,
            )
            .unwrap();
            assert!(back.equals(&ode.rhs), "{n}");
        }
    }

    #[test]
    fn autonomize_chazy_viii() {
        let s = get_system("chazy.VIII.system", &[]).unwrap();
        let a = autonomize(&s);
        assert!(a.warning.is_none());
        assert_eq!(a.system.dim, 4);
        assert!(a.system.field[3].equals(&RatFun::one(&a.system.vars)));
    }

    #[test]
    fn autonomize_autonomous_warns() {
        let s = get_system("chazy.III.system", &[]).unwrap();
        let a = autonomize(&s);
        assert!(a.warning.is_some());
        assert_eq!(a.system.dim, 3);
    }

    #[test]
    fn autonomize_chazy_i_is_closed() {
        let s = get_system("chazy.I.system", &[]).unwrap();
        let a = autonomize(&s).system;
        assert_eq!(a.dim, 10);
        let names: Vec<String> = a.state_names();
        for n in ["x", "y", "z", "t", "A0", "A1", "B0", "B1", "C0", "C1"] {
            assert!(names.contains(&n.to_string()), "{n}");
        }
        // Symbol scan: every occurring symbol is a state.
        for f in &a.field {
            for v in f.num.support() {
                assert!(a.state.contains(&v), "{}", a.vars.name(v));
            }
        }
    }

    #[test]
    fn chazy_i_third_derivative_closure() {
        // A''' = 12 A A' and B''' = 6 A' B + 6 A B' follow from the second-order rules.
        let s = get_system("chazy.I.system", &[]).unwrap();
        let d = s.dynamics();
        let a3 = d.rules.derive(&parse(&s.vars, "6*A0^2").unwrap()).unwrap();
        assert!(a3.equals(&parse(&s.vars, "12*A0*A1").unwrap()));
        let b3 = d.rules.derive(&parse(&s.vars, "6*A0*B0").unwrap()).unwrap();
        assert!(b3.equals(&parse(&s.vars, "6*A1*B0 + 6*A0*B1").unwrap()));
    }

    #[test]
    fn closures_coincide_for_chazy_i() {
        let a = get_system("chazy.I.system", &[]).unwrap();
        let b = get_system("chazy.I.system-rela2", &[]).unwrap();
        let (ra, rb) = (a.rules.unwrap(), b.rules.unwrap());
        for (v, f) in ra.rules() {
            assert!(f.equals(rb.get(v).unwrap()), "{}", a.vars.name(v));
        }
    }

    #[test]
    fn pfaffian_binding() {
        let p = get_pfaffian("chazy.IX.pde", &[("delta", QuadExt::from(rat(2, 1)))]).unwrap();
        assert!(p.params.is_empty());
        assert_eq!(p.f[2].eval(&[QuadExt::zero(), QuadExt::zero(), QuadExt::zero(), QuadExt::zero()]), QuadExt::int(2));
    }

    #[test]
    fn json_and_pretty() {
        let e = get("chazy.III.system", &[]).unwrap();
        let j = e.to_json();
        assert_eq!(j["state"], json!(["x", "y", "z"]));
        assert!(e.pretty().contains("dx/dt"));
    }
}
