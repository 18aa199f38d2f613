//! Birational maps between catalog systems and the exact checks run on them:
//! pushforward identities, Bäcklund transformations on jets, round trips,
//! unimodularity, relation words, compatibility, eliminations, first integrals
//! and Hamiltonian structure.
//!
//! Maps are written as formula strings and compiled against the variable
//! tables of their source and target.  A space name is a catalog name; a
//! Pfaffian entry is read in its `t` direction unless the name ends in `:s`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::catalog::{self, CatalogError, Dynamics, Entry, PfaffianDef, ScalarODE, SystemDef};
use crate::exact::QuadExt;
use crate::geometry::{holomorphy_check, sequential, Chart, GeometryError};
use crate::mpoly::{compose, det, jacobian, parse, AlgebraError, MPoly, RatFun, Vars};
use crate::series::{eval_ratfun, jet_taylor, scalar_residual, system_residual, Series, SeriesError};

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("unknown map `{0}`")]
    UnknownMap(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown chart suite `{0}`")]
    UnknownSuite(String),
    #[error("dimension mismatch in `{0}`")]
    Dimension(String),
    #[error("`{next}` cannot follow `{prev}`: {msg}")]
    Composition { prev: String, next: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// Outcome of one verification.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub claim: String,
    pub ok: bool,
    pub detail: String,
    /// Counterexample or offending value when the check fails.
    pub witness: Option<String>,
}

impl Check {
    pub fn pass(claim: &str, detail: impl Into<String>) -> Check {
        Check { claim: claim.to_string(), ok: true, detail: detail.into(), witness: None }
    }

    pub fn fail(claim: &str, detail: impl Into<String>, witness: impl Into<String>) -> Check {
        Check { claim: claim.to_string(), ok: false, detail: detail.into(), witness: Some(witness.into()) }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({"claim": self.claim, "status": if self.ok { "pass" } else { "fail" }, "detail": self.detail});
        if let Some(w) = &self.witness {
            v["witness"] = json!(w);
        }
        v
    }
}

/// Shorten long expressions in witnesses.
fn clip(s: String) -> String {
    const MAX: usize = 400;
    if s.len() <= MAX {
        s
    } else {
        let mut end = MAX;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}... ({} chars)", &s[..end], s.len())
    }
}

// ---------------------------------------------------------------------------
// Spaces.

/// A catalog entry seen as a first-order system (jets for scalar equations).
#[derive(Clone, Debug)]
pub struct Space {
    pub name: String,
    pub system: SystemDef,
    pub scalar: Option<ScalarODE>,
}

impl Space {
    pub fn dynamics(&self) -> Dynamics {
        self.system.dynamics()
    }

    pub fn vars(&self) -> &Vars {
        &self.system.vars
    }

    pub fn state_names(&self) -> Vec<String> {
        self.system.state_names()
    }

    pub fn param_names(&self) -> Vec<String> {
        self.system.params.iter().map(|&i| self.system.vars.name(i).to_string()).collect()
    }
}

/// Jet system of a scalar equation with the jet variables keeping their names.
pub fn scalar_system(ode: &ScalarODE) -> SystemDef {
    let mut field: Vec<RatFun> = ode.jets[1..].iter().map(|&j| RatFun::var(&ode.vars, j)).collect();
    field.push(ode.rhs.clone());
    SystemDef {
        name: ode.name.clone(),
        vars: ode.vars.clone(),
        state: ode.jets.clone(),
        field,
        params: ode.params.clone(),
        time: ode.time,
        rules: ode.rules.clone(),
        dim: ode.order,
        polynomial: ode.polynomial,
    }
}

pub fn space(name: &str, bindings: &[(&str, QuadExt)]) -> Result<Space, TransformError> {
    let (base, dir_s) = match name.strip_suffix(":s") {
        Some(b) => (b, true),
        None => (name, false),
    };
    let (system, scalar) = match catalog::get(base, bindings)? {
        Entry::System(s) => (s, None),
        Entry::Scalar(s) => (scalar_system(&s), Some(s)),
        Entry::Pfaffian(p) => (if dir_s { p.s_system() } else { p.t_system() }, None),
    };
    if dir_s && !system.name.ends_with(".s") {
        return Err(TransformError::Invalid(format!("`{base}` has no s direction")));
    }
    Ok(Space { name: name.to_string(), system, scalar })
}

/// Substitute constants for some symbols of a system's field.
pub fn bind_system(sys: &SystemDef, vals: &[(usize, QuadExt)]) -> Result<SystemDef, AlgebraError> {
    let mut s = sys.clone();
    s.field = s.field.iter().map(|f| f.eval_partial(vals)).collect::<Result<_, _>>()?;
    s.params.retain(|p| !vals.iter().any(|(i, _)| i == p));
    Ok(s)
}

// ---------------------------------------------------------------------------
// Maps.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    /// Every target state variable is given.
    Point,
    /// Only the target's `u` is given; the remaining jets are total derivatives.
    Prolonged,
}

/// Formula description of a map.
#[derive(Clone, Debug)]
pub struct MapSpec<'a> {
    pub name: &'a str,
    pub claim: &'a str,
    pub source: &'a str,
    pub target: &'a str,
    pub kind: MapKind,
    /// `(target state, expression over the source)`.
    pub forward: &'a [(&'a str, &'a str)],
    /// `(source state, expression over the target)`; later entries may use earlier ones.
    pub inverse: &'a [(&'a str, &'a str)],
    /// `(target parameter, expression in source parameters)`; omitted ones keep their name.
    pub action: &'a [(&'a str, &'a str)],
    /// Parameters bound to integers on both sides.
    pub bind: &'a [(&'a str, i64)],
    /// `dS/ds` when the target's time is a rescaling of the source's.
    pub time_scale: Option<&'a str>,
    /// Whether the pushforward identity is expected to hold.
    pub holds: bool,
}

impl<'a> MapSpec<'a> {
    const fn point(name: &'a str, claim: &'a str, source: &'a str, target: &'a str, forward: &'a [(&'a str, &'a str)]) -> Self {
        MapSpec { name, claim, source, target, kind: MapKind::Point, forward, inverse: &[], action: &[], bind: &[], time_scale: None, holds: true }
    }

    const fn prolonged(name: &'a str, claim: &'a str, source: &'a str, target: &'a str, u: &'a [(&'a str, &'a str)]) -> Self {
        MapSpec { name, claim, source, target, kind: MapKind::Prolonged, forward: u, inverse: &[], action: &[], bind: &[], time_scale: None, holds: true }
    }

    const fn inv(mut self, inverse: &'a [(&'a str, &'a str)]) -> Self {
        self.inverse = inverse;
        self
    }

    const fn act(mut self, action: &'a [(&'a str, &'a str)]) -> Self {
        self.action = action;
        self
    }

    const fn bound(mut self, bind: &'a [(&'a str, i64)]) -> Self {
        self.bind = bind;
        self
    }

    const fn scaled(mut self, k: &'a str) -> Self {
        self.time_scale = Some(k);
        self
    }

    const fn failing(mut self) -> Self {
        self.holds = false;
        self
    }
}

/// A compiled map.
#[derive(Clone, Debug)]
pub struct BiMap {
    pub name: String,
    pub claim: String,
    pub kind: MapKind,
    pub source: Space,
    pub target: Space,
    /// One entry per target state variable, over the source table.
    pub forward: Vec<RatFun>,
    /// One entry per source state variable, over the target table.
    pub inverse: Option<Vec<RatFun>>,
    /// One entry per target parameter, over the source table.
    pub action: Vec<(String, RatFun)>,
    pub time_scale: Option<RatFun>,
    pub holds: bool,
}

fn parse_err(map: &str, e: AlgebraError) -> TransformError {
    TransformError::Invalid(format!("map `{map}`: {e}"))
}

/// Expressions for named state variables over `vars`, allowing later ones to use earlier ones.
fn sequential_or_direct(vars: &Vars, steps: &[(&str, &str)]) -> Result<Vec<RatFun>, AlgebraError> {
    if steps.iter().any(|(n, _)| vars.index_of(n).is_some()) {
        steps.iter().map(|(_, e)| parse(vars, e)).collect()
    } else {
        sequential(vars, steps)
    }
}

pub fn compile(spec: &MapSpec) -> Result<BiMap, TransformError> {
    let bind: Vec<(&str, QuadExt)> = spec.bind.iter().map(|(n, v)| (*n, QuadExt::int(*v))).collect();
    let source = space(spec.source, &bind)?;
    let target = space(spec.target, &bind)?;
    let sv = source.vars().clone();
    let tnames = target.state_names();
    let pe = |e| parse_err(spec.name, e);
    let forward = match spec.kind {
        MapKind::Point => {
            if spec.forward.len() != tnames.len() {
                return Err(TransformError::Dimension(spec.name.to_string()));
            }
            let mut out = vec![RatFun::zero(&sv); tnames.len()];
            for (n, e) in spec.forward {
                let k = tnames.iter().position(|t| t == n).ok_or_else(|| TransformError::Invalid(format!("map `{}`: `{n}` is not a target state", spec.name)))?;
                out[k] = parse(&sv, e).map_err(pe)?;
            }
            out
        }
        MapKind::Prolonged => {
            if spec.forward.len() != 1 || target.scalar.is_none() {
                return Err(TransformError::Dimension(spec.name.to_string()));
            }
            let rules = source.dynamics().rules;
            let mut out = vec![parse(&sv, spec.forward[0].1).map_err(pe)?];
            while out.len() < tnames.len() {
                let next = rules.derive(out.last().unwrap())?;
                out.push(next);
            }
            out
        }
    };
    let inverse = if spec.inverse.is_empty() {
        None
    } else {
        let snames = source.state_names();
        let vals = sequential_or_direct(target.vars(), spec.inverse).map_err(pe)?;
        let mut out = vec![RatFun::zero(target.vars()); snames.len()];
        for ((n, _), v) in spec.inverse.iter().zip(vals) {
            let k = snames.iter().position(|s| s == n).ok_or_else(|| TransformError::Invalid(format!("map `{}`: `{n}` is not a source state", spec.name)))?;
            out[k] = v;
        }
        Some(out)
    };
    let mut action = Vec::new();
    for p in target.param_names() {
        let f = match spec.action.iter().find(|(n, _)| *n == p) {
            Some((_, e)) => parse(&sv, e).map_err(pe)?,
            None => {
                let i = sv.index_of(&p).ok_or_else(|| TransformError::Invalid(format!("map `{}`: no action for `{p}`", spec.name)))?;
                RatFun::var(&sv, i)
            }
        };
        action.push((p, f));
    }
    let time_scale = spec.time_scale.map(|k| parse(&sv, k)).transpose().map_err(pe)?;
    Ok(BiMap {
        name: spec.name.to_string(),
        claim: spec.claim.to_string(),
        kind: spec.kind,
        source,
        target,
        forward,
        inverse,
        action,
        time_scale,
        holds: spec.holds,
    })
}

impl BiMap {
    /// Target state and parameter names bound to their images over the source.
    fn bindings(&self) -> Vec<(String, RatFun)> {
        let mut b: Vec<(String, RatFun)> = self.target.state_names().into_iter().zip(self.forward.iter().cloned()).collect();
        b.extend(self.action.iter().cloned());
        b
    }

    /// Express a function on the target over the source.
    pub fn pull(&self, f: &RatFun) -> Result<RatFun, AlgebraError> {
        let b = self.bindings();
        let br: Vec<(&str, &RatFun)> = b.iter().map(|(n, r)| (n.as_str(), r)).collect();
        Ok(compose(f, &br, self.source.vars())?.tidy())
    }

    /// Number of monomials in the numerators of the forward components.
    pub fn size(&self) -> usize {
        self.forward.iter().map(|f| f.num.len() + f.den.len()).sum()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "claim": self.claim,
            "source": self.source.name,
            "target": self.target.name,
            "kind": if self.kind == MapKind::Point { "point" } else { "prolonged" },
            "forward": self.forward.iter().map(|f| clip(f.to_string())).collect::<Vec<_>>(),
            "params": self.action.iter().map(|(n, f)| json!([n, f.to_string()])).collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------------------
// Registry.

const OMEGA: &str = "(1+sqrt(-3))/2";

const X_G1: &str = "(4+sqrt(3))*(8*(-4+sqrt(3))*u^3 - 8*(-4+sqrt(3))*u*u' - 8*(-4+sqrt(3))*u'' - (-7+5*sqrt(3))*alpha*u)/(13*(8*u^2 + 8*u' + (sqrt(3)-1)*alpha))";

static MAPS: &[MapSpec<'static>] = &[
    // Chazy III.
    MapSpec::point("iii.to-system", "Chazy III is birational to the quadratic system", "chazy.III.canonical", "chazy.III.system", &[
        ("x", "u/6"),
        ("y", "-u'/u + u/6"),
        ("z", "-u''/u' + u/3"),
    ])
    .inv(&[("u", "6*x"), ("u'", "-6*x*(y-x)"), ("u''", "6*x*(y-x)*(z-2*x)")]),
    MapSpec::point("iii.to-xyz", "Chazy III is birational to the shifted system", "chazy.III.canonical", "chazy.III.XYZ", &[
        ("X", "u/6"),
        ("Y", "-u'/u"),
        ("Z", "-u''/u' + u/3"),
    ])
    .inv(&[("u", "6*X"), ("u'", "-6*X*Y"), ("u''", "6*X*Y*(Z-2*X)")]),
    MapSpec::point("dh.to-chazy-iii", "Darboux-Halphen solutions give Chazy III solutions", "darboux-halphen", "chazy.III.canonical", &[
        ("u", "-2*(x+y+z)"),
        ("u'", "2*(x*z+y*z+x*y)"),
        ("u''", "-12*x*y*z"),
    ]),
    MapSpec::point("dh.pi", "cyclic symmetry of Darboux-Halphen", "darboux-halphen", "darboux-halphen", &[("x", "y"), ("y", "z"), ("z", "x")]),
    // Integer-ratio examples.
    MapSpec::point("ex1.to-system", "first example as a quadratic system", "example.ex1", "example.ex1.system", &[
        ("x", "u"),
        ("y", "-u'/u + u"),
        ("z", "-u''/u' + 2*u"),
    ])
    .inv(&[("u", "x"), ("u'", "u*(u-y)"), ("u''", "u'*(2*u-z)")]),
    MapSpec::point("ex2.to-system", "second example as a system", "example.ex2", "example.ex2.system", &[
        ("x", "u^2/u'"),
        ("y", "u'/u"),
        ("z", "u''/u'"),
    ])
    .inv(&[("u", "x*y"), ("u'", "u*y"), ("u''", "u'*z")]),
    // Chazy IX.
    MapSpec::point("ix.phi0", "Chazy IX is birational to its polynomial system", "chazy.IX", "chazy.IX.system", &[
        ("x", "u"),
        ("y", "u' + 3/2*(sqrt(5)-1)*u^2"),
        ("z", "u'' + 3*(sqrt(5)-1)*u*u'"),
    ])
    .inv(&[("u", "x"), ("u'", "y - 3/2*(sqrt(5)-1)*x^2"), ("u''", "z - 3*(sqrt(5)-1)*u*u'")]),
    MapSpec::point("ix.s0", "s0 for the Chazy IX system", "chazy.IX.system", "chazy.IX.s0-image", &[
        ("X", "x + 2*(3*(sqrt(5)+3)*y^2 + delta)/(3*(sqrt(5)-1)*z)"),
        ("Y", "-y"),
        ("Z", "-z"),
    ])
    .inv(&[("y", "-Y"), ("z", "-Z"), ("x", "X - 2*(3*(sqrt(5)+3)*y^2 + delta)/(3*(sqrt(5)-1)*z)")]),
    MapSpec::point("ix.phi1", "phi1 takes the image of s0 back to Chazy IX", "chazy.IX.s0-image", "chazy.IX", &[
        ("u", "1/2*(sqrt(5)-3)*X"),
        ("u'", "3*(sqrt(5)-2)*X^2 + 1/2*(7+3*sqrt(5))*Y"),
        ("u''", "9*(3*sqrt(5)-7)*X^3 - 6*(sqrt(5)+2)*X*Y + 1/2*(3*sqrt(5)+7)*Z"),
    ])
    .act(&[("delta", "(7+3*sqrt(5))/2*delta")]),
    MapSpec::point("ix.pi", "pi changes the sign of sqrt(5)", "chazy.IX.system", "chazy.IXb.system", &[
        ("X", "x"),
        ("Y", "y - 3*sqrt(5)*x^2"),
        ("Z", "z - 6*sqrt(5)*x*y - 9*(sqrt(5)-5)*x^3"),
    ])
    .inv(&[("x", "X"), ("y", "Y + 3*sqrt(5)*x^2"), ("z", "Z + 6*sqrt(5)*x*y + 9*(sqrt(5)-5)*x^3")]),
    MapSpec::point("ix.s1", "s1 for the sign-changed Chazy IX system", "chazy.IXb.system", "chazy.IX.s1-image", &[
        ("u", "X - 2*(3*(-sqrt(5)+3)*Y^2 + delta)/(3*(sqrt(5)+1)*Z)"),
        ("v", "-Y"),
        ("w", "-Z"),
    ])
    .inv(&[("Y", "-v"), ("Z", "-w"), ("X", "u + 2*(3*(-sqrt(5)+3)*Y^2 + delta)/(3*(sqrt(5)+1)*Z)")]),
    MapSpec::point("ix.phi2", "phi2 takes the image of s1 back to Chazy IX", "chazy.IX.s1-image", "chazy.IX", &[
        ("u", "1/2*(-sqrt(5)-3)*u"),
        ("u'", "3*(-sqrt(5)-2)*u^2 + 1/2*(7-3*sqrt(5))*v"),
        ("u''", "9*(-3*sqrt(5)-7)*u^3 - 6*(-sqrt(5)+2)*u*v + 1/2*(-3*sqrt(5)+7)*w"),
    ])
    .act(&[("delta", "(7-3*sqrt(5))/2*delta")]),
    MapSpec::prolonged("ix.g0", "g0 is a Backlund transformation of Chazy IX", "chazy.IX", "chazy.IX", &[(
        "u",
        "(sqrt(5)-3)*(108*u^4 + 18*(5+sqrt(5))*u^2*u' + 6*(3+sqrt(5))*u'^2 + 3*(sqrt(5)-1)*u*u'' + 2*delta)/(6*(sqrt(5)-1)*(3*(sqrt(5)-1)*u*u' + u''))",
    )])
    .act(&[("delta", "(7+3*sqrt(5))/2*delta")]),
    MapSpec::prolonged("ix.g1", "g1 is a Backlund transformation of Chazy IX", "chazy.IX", "chazy.IX", &[(
        "u",
        "(-sqrt(5)-3)*(108*u^4 + 18*(5-sqrt(5))*u^2*u' + 6*(3-sqrt(5))*u'^2 + 3*(-sqrt(5)-1)*u*u'' + 2*delta)/(6*(-sqrt(5)-1)*(3*(-sqrt(5)-1)*u*u' + u''))",
    )])
    .act(&[("delta", "(7-3*sqrt(5))/2*delta")]),
    MapSpec::point("ix.pde-to-jet.t", "the coupled system in jet coordinates, t direction", "chazy.IX.pde", "chazy.IX.pde-transformed", &[
        ("X", "x"),
        ("Y", "y + 3*(1-sqrt(5))/2*x^2"),
        ("Z", "z + 3*(1-sqrt(5))*x*y + 9*(3-sqrt(5))*x^3"),
    ])
    .inv(&[("x", "X"), ("y", "Y - 3*(1-sqrt(5))/2*x^2"), ("z", "Z - 3*(1-sqrt(5))*x*y - 9*(3-sqrt(5))*x^3")]),
    MapSpec::point("ix.pde-to-jet.s", "the coupled system in jet coordinates, s direction", "chazy.IX.pde:s", "chazy.IX.pde-transformed:s", &[
        ("X", "x"),
        ("Y", "y + 3*(1-sqrt(5))/2*x^2"),
        ("Z", "z + 3*(1-sqrt(5))*x*y + 9*(3-sqrt(5))*x^3"),
    ])
    .scaled("8/(3*(1-sqrt(5)))"),
    // Chazy X.
    MapSpec::point("x.phi0", "Chazy X.a is birational to its polynomial system", "chazy.Xa", "chazy.Xa.system", &[
        ("x", "u"),
        ("y", "u' - (3+sqrt(3))/2*u^2"),
        ("z", "u'' - (3+sqrt(3))*u*u'"),
    ])
    .inv(&[("u", "x"), ("u'", "y + (3+sqrt(3))/2*x^2"), ("u''", "z + (3+sqrt(3))*u*u'")]),
    MapSpec::point("x.s0", "s0 for the Chazy X.a system", "chazy.Xa.system", "chazy.Xa.s0-image", &[
        ("X", "x - (64*(-3+5*sqrt(3))*y^2 + 16*(-4+3*sqrt(3))*alpha*y - (9+7*sqrt(3))*alpha^2)/(176*(3+sqrt(3))*z)"),
        ("Y", "-y"),
        ("Z", "-z"),
    ])
    .inv(&[
        ("y", "-Y"),
        ("z", "-Z"),
        ("x", "X + (64*(-3+5*sqrt(3))*y^2 + 16*(-4+3*sqrt(3))*alpha*y - (9+7*sqrt(3))*alpha^2)/(176*(3+sqrt(3))*z)"),
    ]),
    MapSpec::point("x.phi1", "phi1 takes the image of s0 to Chazy X.b", "chazy.Xa.s0-image", "chazy.Xb", &[
        ("u", "(2+sqrt(3))*X"),
        ("u'", "(2+sqrt(3))/(11*(3+sqrt(3)))*(33*(2+sqrt(3))*X^2 + (-57+29*sqrt(3))*Y - (-4+3*sqrt(3))*alpha)"),
        (
            "u''",
            "6*(2+sqrt(3))/(11*(3+sqrt(3))^3)*(33*(33+19*sqrt(3))*X^3 - 6*(13+4*sqrt(3))*X*Y + (-27+sqrt(3))*Z - (9+7*sqrt(3))*alpha*X)",
        ),
    ]),
    MapSpec::point("x.pi", "pi for the Chazy X.a system", "chazy.Xa.system", "chazy.Xa.pi-image", &[
        ("X", "x"),
        ("Y", "y + 1/2*(5+sqrt(3))*x^2 + 1/8*(sqrt(3)-1)*alpha"),
        ("Z", "z - (5+sqrt(3))*x^3 - 1/4*(2*sqrt(3)-1)*alpha*x"),
    ])
    .inv(&[("x", "X"), ("y", "Y - 1/2*(5+sqrt(3))*x^2 - 1/8*(sqrt(3)-1)*alpha"), ("z", "Z + (5+sqrt(3))*x^3 + 1/4*(2*sqrt(3)-1)*alpha*x")]),
    MapSpec::point("x.s1", "s1 on the image of pi", "chazy.Xa.pi-image", "chazy.Xa.s1-image", &[
        ("u", "X - (sqrt(3)-4)*Z/(13*Y)"),
        ("v", "Y"),
        ("w", "-Z"),
    ])
    .inv(&[("Y", "v"), ("Z", "-w"), ("X", "u + (sqrt(3)-4)*Z/(13*Y)")]),
    MapSpec::point("x.phi2", "phi2 takes the image of s1 to Chazy X.b", "chazy.Xa.s1-image", "chazy.Xb", &[
        ("u", "(4+sqrt(3))*u"),
        ("u'", "-(19+8*sqrt(3))*u^2 + 1/11*(38+21*sqrt(3))*v - 1/8*(5+3*sqrt(3))*alpha"),
        ("u''", "2*(100+51*sqrt(3))*u^3 + 1/143*(89+46*sqrt(3))*w + u/44*(-4*(177+101*sqrt(3))*v + 11*(29+17*sqrt(3))*alpha)"),
    ])
    .act(&[("alpha", "(-2-sqrt(3))*alpha")]),
    MapSpec::prolonged("x.g0", "g0 takes Chazy X.a to Chazy X.b", "chazy.Xa", "chazy.Xb", &[(
        "u",
        "(3+sqrt(3))/(1056*((3+sqrt(3))*u*u' - u''))*(288*(6+sqrt(3))*u^2*u' - 176*(3+sqrt(3))*u*u'' + 96*(9+7*sqrt(3))*u^4 + 64*(-3+5*sqrt(3))*u'^2 - 8*(-3+5*sqrt(3))*alpha*u^2 + 16*(-4+3*sqrt(3))*alpha*u' - (9+7*sqrt(3))*alpha^2)",
    )]),
    MapSpec::prolonged("x.g1", "g1 takes Chazy X.a to Chazy X.b", "chazy.Xa", "chazy.Xb", &[(
        "u",
        X_G1,
    )])
    .act(&[("alpha", "(-2-sqrt(3))*alpha")]),
    MapSpec::prolonged("x.g1-printed-action", "g1 with alpha scaled by -2+sqrt(3) is not a transformation", "chazy.Xa", "chazy.Xb", &[(
        "u",
        X_G1,
    )])
    .act(&[("alpha", "(-2+sqrt(3))*alpha")])
    .failing(),
    // Second Painleve.
    MapSpec::point("pii.phi0", "PII as a Hamiltonian system", "pii", "pii.system", &[("q", "u"), ("p", "u' - u^2 - t/2")])
        .inv(&[("u", "q"), ("u'", "p + q^2 + t/2")]),
    // Chazy VIII.
    MapSpec::point("viii.phi0", "Chazy VIII is birational to its polynomial system", "chazy.VIII", "chazy.VIII.system", &[
        ("x", "u"),
        ("y", "u' - u^2 - 1/2*((-2*alpha^2*t + beta)*t + 2*alpha + gamma)"),
        ("z", "u'' - 2*u^3 - ((-2*alpha^2*t + beta)*t + 2*alpha + gamma)*u"),
    ])
    .inv(&[
        ("u", "x"),
        ("u'", "y + x^2 + 1/2*((-2*alpha^2*t + beta)*t + 2*alpha + gamma)"),
        ("u''", "z + 2*x^3 + ((-2*alpha^2*t + beta)*t + 2*alpha + gamma)*x"),
    ]),
    MapSpec::point("viii.s0", "s0 for the Chazy VIII system", "chazy.VIII.system", "chazy.VIII.s0-image", &[
        ("X", "x - (2*z + 4*alpha^2*t - beta)/(2*y)"),
        ("Y", "y"),
        ("Z", "-z"),
    ])
    .inv(&[("y", "Y"), ("z", "-Z"), ("x", "X + (2*z + 4*alpha^2*t - beta)/(2*y)")]),
    MapSpec::point("viii.s1", "s1 for the Chazy VIII system", "chazy.VIII.system", "chazy.VIII.s1-image", &[
        ("X", "-(x + (z + 4*alpha*x - 2*alpha^2*t + beta/2)/(y + 2*x^2 - 2*alpha^2*t^2 + beta*t + gamma))"),
        ("Y", "-(y + 2*x^2 - 2*alpha^2*t^2 + beta*t + gamma)"),
        ("Z", "z + 4*alpha*x"),
    ])
    .inv(&[
        ("x", "-X + (2*Z - 4*alpha^2*t + beta)/(2*Y)"),
        (
            "y",
            "-Y - 2*X^2 + 2*alpha^2*t^2 - beta*t - gamma + 4*X*(Z - 2*alpha^2*t)/Y + (4*beta*X*Y - 4*Z^2 + 4*Z*(4*alpha^2*t - beta) - 16*alpha^4*t^2 + 8*alpha^2*beta*t - beta^2)/(2*Y^2)",
        ),
        ("z", "Z + 4*alpha*X - 2*alpha*(2*Z - 4*alpha^2*t + beta)/Y"),
    ]),
    MapSpec::point("viii.s1-inverse", "inverse of s1 for the Chazy VIII system", "chazy.VIII.s1-image", "chazy.VIII.system", &[
        ("x", "-X + (2*Z - 4*alpha^2*t + beta)/(2*Y)"),
        (
            "y",
            "-Y - 2*X^2 + 2*alpha^2*t^2 - beta*t - gamma + 4*X*(Z - 2*alpha^2*t)/Y + (4*beta*X*Y - 4*Z^2 + 4*Z*(4*alpha^2*t - beta) - 16*alpha^4*t^2 + 8*alpha^2*beta*t - beta^2)/(2*Y^2)",
        ),
        ("z", "Z + 4*alpha*X - 2*alpha*(2*Z - 4*alpha^2*t + beta)/Y"),
    ]),
    MapSpec::point("viii.phi", "identity on variables with alpha negated", "chazy.VIII.s0-image", "chazy.VIII.s1-image", &[
        ("X", "X"),
        ("Y", "Y"),
        ("Z", "Z"),
    ])
    .act(&[("alpha", "-alpha")]),
    MapSpec::point("viii.pi", "pi for the Chazy VIII system", "chazy.VIII.system", "chazy.VIII.system", &[
        ("x", "-x"),
        ("y", "-y - 2*x^2 + 2*alpha^2*t^2 - beta*t - gamma"),
        ("z", "-z - 4*alpha*x"),
    ])
    .act(&[("alpha", "-alpha")]),
    MapSpec::point("viii.s0-auto", "s0 is a symmetry when alpha = beta = 0", "chazy.VIII.system", "chazy.VIII.system", &[
        ("x", "x - z/y"),
        ("y", "y"),
        ("z", "-z"),
    ])
    .bound(&[("alpha", 0), ("beta", 0)]),
    MapSpec::point("viii.s1-auto", "s1 is a symmetry when alpha = beta = 0", "chazy.VIII.system", "chazy.VIII.system", &[
        ("x", "-(x + z/(y + 2*x^2 + gamma))"),
        ("y", "-(y + 2*x^2 + gamma)"),
        ("z", "z"),
    ])
    .bound(&[("alpha", 0), ("beta", 0)]),
    MapSpec::point("viii.s0-auto-symbolic", "s0 is not a symmetry for symbolic alpha, beta", "chazy.VIII.system", "chazy.VIII.system", &[
        ("x", "x - z/y"),
        ("y", "y"),
        ("z", "-z"),
    ])
    .failing(),
    MapSpec::point("viii.s1-auto-symbolic", "s1 is not a symmetry for symbolic alpha, beta", "chazy.VIII.system", "chazy.VIII.system", &[
        ("x", "-(x + z/(y + 2*x^2 + gamma))"),
        ("y", "-(y + 2*x^2 + gamma)"),
        ("z", "z"),
    ])
    .failing(),
    // Six-parameter system.
    MapSpec::point("six.s0", "symmetry s0 of the six-parameter system", "six-param.system", "six-param.system", &[("x", "y"), ("y", "x"), ("z", "z")])
        .act(&[("a1", "a3"), ("a2", "a4"), ("a3", "a1"), ("a4", "a2"), ("a5", "a6"), ("a6", "a5")]),
    MapSpec::point("six.s1", "symmetry s1 of the six-parameter system", "six-param.system", "six-param.system", &[("x", "z"), ("y", "y"), ("z", "x")])
        .act(&[("a1", "a6"), ("a2", "a5"), ("a3", "a4"), ("a4", "a3"), ("a5", "a2"), ("a6", "a1")]),
    MapSpec::point("six.s2", "symmetry s2 of the six-parameter system", "six-param.system", "six-param.system", &[("x", "x"), ("y", "z"), ("z", "y")])
        .act(&[("a1", "a2"), ("a2", "a1"), ("a3", "a5"), ("a4", "a6"), ("a5", "a3"), ("a6", "a4")]),
    MapSpec::point("six.pi", "symmetry pi of the six-parameter system", "six-param.system", "six-param.system", &[("x", "y"), ("y", "z"), ("z", "x")])
        .act(&[("a1", "a4"), ("a2", "a3"), ("a3", "a6"), ("a4", "a5"), ("a5", "a1"), ("a6", "a2")]),
    MapSpec::point("six.canonical", "the reduced system is Hamiltonian in canonical coordinates", "six-param.reduced", "six-param.hamiltonian", &[
        ("X", "(y-a1)/(z-a2)"),
        ("Y", "z - a2"),
    ])
    .inv(&[("z", "Y + a2"), ("y", "a1 + X*Y")]),
    // Chazy XI with N = 3.
    MapSpec::point("xi3.canonical", "the reduced system becomes autonomous PIV", "chazy.XI3.reduced", "chazy.XI3.autoPIV", &[
        ("X", "-1/(y*z^2)"),
        ("Y", "1/z"),
    ])
    .inv(&[("z", "1/Y"), ("y", "-Y^2/X")]),
    MapSpec::point("weyl.w0", "Weyl generator w0", "a2-weyl.system", "a2-weyl.system", &[
        ("s", "s - (a1+a2)/(s+c+a)"),
        ("c", "c + (a1+a2)/(s+c+a)"),
    ])
    .act(&[("a1", "-a2"), ("a2", "-a1")]),
    MapSpec::point("weyl.w1", "Weyl generator w1", "a2-weyl.system", "a2-weyl.system", &[
        ("s", "s - (1+sqrt(-3))/2*((1+sqrt(-3))/2*a1 - a2)/(c - (1+sqrt(-3))/2*s + (-1+sqrt(-3))/2*a)"),
        ("c", "c + (a1 + (-1+sqrt(-3))/2*a2)/(c - (1+sqrt(-3))/2*s + (-1+sqrt(-3))/2*a)"),
    ])
    .act(&[("a1", "-(-1+sqrt(-3))/2*a2"), ("a2", "(1+sqrt(-3))/2*a1")]),
    MapSpec::point("weyl.w2", "Weyl generator w2", "a2-weyl.system", "a2-weyl.system", &[
        ("s", "s - (1+sqrt(-3))/2*((1+sqrt(-3))/2*a2 - a1)/(c + (-1+sqrt(-3))/2*s - (1+sqrt(-3))/2*a)"),
        ("c", "c - ((1+sqrt(-3))/2*a2 - a1)/(c + (-1+sqrt(-3))/2*s - (1+sqrt(-3))/2*a)"),
    ])
    .act(&[("a1", "(1+sqrt(-3))/2*a2"), ("a2", "-(-1+sqrt(-3))/2*a1")]),
    MapSpec::point("weyl.pi", "Weyl generator pi", "a2-weyl.system", "a2-weyl.system", &[("s", "-s/((1+sqrt(-3))/2)"), ("c", "-(1+sqrt(-3))/2*c")])
        .act(&[("a1", "(-1+sqrt(-3))/2*a1"), ("a2", "-(1+sqrt(-3))/2*a2")]),
    MapSpec::point("weyl.pi-printed-action", "pi with a1 scaled by -omega^2 is not a symmetry", "a2-weyl.system", "a2-weyl.system", &[
        ("s", "-s/((1+sqrt(-3))/2)"),
        ("c", "-(1+sqrt(-3))/2*c"),
    ])
    .act(&[("a1", "-(-1+sqrt(-3))/2*a1"), ("a2", "-(1+sqrt(-3))/2*a2")])
    .failing(),
    // Halphen systems.
    MapSpec::point("halphen.s0", "Halphen symmetry s0", "halphen.classic", "halphen.classic", &[("x", "y"), ("y", "x"), ("z", "z")])
        .act(&[("alpha", "beta"), ("beta", "alpha"), ("gamma", "gamma")]),
    MapSpec::point("halphen.s1", "Halphen symmetry s1", "halphen.classic", "halphen.classic", &[("x", "z"), ("y", "y"), ("z", "x")])
        .act(&[("alpha", "gamma"), ("beta", "beta"), ("gamma", "alpha")]),
    MapSpec::point("halphen.s2", "Halphen symmetry s2", "halphen.classic", "halphen.classic", &[("x", "x"), ("y", "z"), ("z", "y")])
        .act(&[("alpha", "alpha"), ("beta", "gamma"), ("gamma", "beta")]),
    MapSpec::point("halphen.pi", "Halphen symmetry pi", "halphen.classic", "halphen.classic", &[("x", "y"), ("y", "z"), ("z", "x")])
        .act(&[("alpha", "beta"), ("beta", "gamma"), ("gamma", "alpha")]),
    MapSpec::point("halphen4.s1", "four-variable symmetry s1", "halphen.four", "halphen.four", &[("x", "y"), ("y", "x"), ("z", "z"), ("w", "w")])
        .act(&[("alpha", "alpha"), ("beta", "delta"), ("chi", "epsilon"), ("delta", "beta"), ("epsilon", "chi"), ("gamma", "gamma")]),
    MapSpec::point("halphen4.s2", "four-variable symmetry s2", "halphen.four", "halphen.four", &[("x", "z"), ("y", "y"), ("z", "x"), ("w", "w")])
        .act(&[("alpha", "delta"), ("beta", "beta"), ("chi", "gamma"), ("delta", "alpha"), ("epsilon", "epsilon"), ("gamma", "chi")]),
    MapSpec::point("halphen4.s3", "four-variable symmetry s3", "halphen.four", "halphen.four", &[("x", "w"), ("y", "y"), ("z", "z"), ("w", "x")])
        .act(&[("alpha", "epsilon"), ("beta", "gamma"), ("chi", "chi"), ("delta", "delta"), ("epsilon", "alpha"), ("gamma", "beta")]),
    MapSpec::point("halphen4.s4", "four-variable symmetry s4", "halphen.four", "halphen.four", &[("x", "x"), ("y", "z"), ("z", "y"), ("w", "w")])
        .act(&[("alpha", "beta"), ("beta", "alpha"), ("chi", "chi"), ("delta", "delta"), ("epsilon", "gamma"), ("gamma", "epsilon")]),
    MapSpec::point("halphen4.s5", "four-variable symmetry s5", "halphen.four", "halphen.four", &[("x", "x"), ("y", "w"), ("z", "z"), ("w", "y")])
        .act(&[("alpha", "chi"), ("beta", "beta"), ("chi", "alpha"), ("delta", "gamma"), ("epsilon", "epsilon"), ("gamma", "delta")]),
    MapSpec::point("halphen4.s6", "four-variable symmetry s6", "halphen.four", "halphen.four", &[("x", "x"), ("y", "y"), ("z", "w"), ("w", "z")])
        .act(&[("alpha", "alpha"), ("beta", "chi"), ("chi", "beta"), ("delta", "epsilon"), ("epsilon", "delta"), ("gamma", "gamma")]),
    MapSpec::point("halphen4.pi", "four-variable symmetry pi", "halphen.four", "halphen.four", &[("x", "y"), ("y", "z"), ("z", "w"), ("w", "x")])
        .act(&[("alpha", "delta"), ("beta", "epsilon"), ("chi", "alpha"), ("delta", "gamma"), ("epsilon", "beta"), ("gamma", "chi")]),
];

pub fn map_specs() -> &'static [MapSpec<'static>] {
    MAPS
}

pub fn map_names() -> Vec<&'static str> {
    MAPS.iter().map(|m| m.name).collect()
}

pub fn get_map(name: &str) -> Result<BiMap, TransformError> {
    let spec = MAPS.iter().find(|m| m.name == name).ok_or_else(|| TransformError::UnknownMap(name.to_string()))?;
    compile(spec)
}

// ---------------------------------------------------------------------------
// Checks on maps.

/// `D(forward) = f_target(forward)` with the parameter action (and time scale) applied.
pub fn pushforward_check(m: &BiMap) -> Result<Check, TransformError> {
    let rules = m.source.dynamics().rules;
    let b = m.bindings();
    let br: Vec<(&str, &RatFun)> = b.iter().map(|(n, r)| (n.as_str(), r)).collect();
    let tnames = m.target.state_names();
    for (j, fj) in m.forward.iter().enumerate() {
        let lhs = rules.derive(fj)?;
        let mut rhs = compose(&m.target.system.field[j], &br, m.source.vars())?;
        if let Some(k) = &m.time_scale {
            rhs = rhs.try_mul(k)?;
        }
        let diff = lhs.try_add(&-&rhs)?;
        if !diff.is_zero() {
            return Ok(Check::fail(&m.name, format!("component {} of the pushforward differs", tnames[j]), clip(diff.tidy().num.to_string())));
        }
    }
    Ok(Check::pass(&m.name, format!("{} -> {}: exact identity in {} components", m.source.name, m.target.name, m.forward.len())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BtMode {
    ExactJet,
    Series,
    /// Exact unless the prolonged map exceeds the term guard.
    Auto,
}

/// Term count above which `BtMode::Auto` switches to series verification.
pub const TERM_GUARD: usize = 200_000;

/// Bäcklund check for a prolonged map between scalar equations.
pub fn bt_check(m: &BiMap, mode: BtMode, seed: u64) -> Result<Check, TransformError> {
    if m.kind != MapKind::Prolonged {
        return Err(TransformError::Invalid(format!("`{}` is not a map between scalar equations", m.name)));
    }
    let exact = match mode {
        BtMode::ExactJet => true,
        BtMode::Series => false,
        BtMode::Auto => m.size() <= TERM_GUARD,
    };
    if exact {
        pushforward_check(m)
    } else {
        series_check(m, seed, 10)
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> QuadExt {
    let n: i64 = rng.gen_range(-9..=9);
    let d: i64 = rng.gen_range(1..=5);
    QuadExt::frac(n, d)
}

/// Push a Taylor jet at a random rational point through the map and check the
/// target equation to the available order.  Retries up to five times when the
/// point is singular for the field or the map.
pub fn series_check(m: &BiMap, seed: u64, n: usize) -> Result<Check, TransformError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sys = &m.source.system;
    let sv = sys.vars.clone();
    let mut last = String::new();
    for _attempt in 0..5 {
        let params: Vec<(usize, QuadExt)> = sys.params.iter().map(|&p| (p, random_rational(&mut rng))).collect();
        let t0 = random_rational(&mut rng);
        let ic: Vec<QuadExt> = sys.state.iter().map(|_| random_rational(&mut rng)).collect();
        let bound = bind_system(sys, &params)?;
        let sol = match jet_taylor(&bound, &ic, &t0, n) {
            Ok(s) => s,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        let len = n + 1;
        let mut vals: Vec<Series> = vec![Series::constant(QuadExt::zero(), len); sv.len()];
        let mut point = vec![QuadExt::zero(); sv.len()];
        for (k, &s) in sys.state.iter().enumerate() {
            vals[s] = sol.series[k].clone();
            point[s] = ic[k].clone();
        }
        for (p, v) in &params {
            vals[*p] = Series::constant(v.clone(), len);
            point[*p] = v.clone();
        }
        if let Some(t) = sys.time {
            vals[t] = Series::time(t0.clone(), len);
            point[t] = t0.clone();
        }
        let pushed: Result<Vec<Series>, SeriesError> = m.forward.iter().map(|f| eval_ratfun(f, &vals)).collect();
        let pushed = match pushed {
            Ok(p) => p,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        let tsys = &m.target.system;
        let mut tvals = Vec::new();
        for (name, f) in &m.action {
            tvals.push((tsys.vars.idx(name), f.eval(&point)?));
        }
        let mut target = bind_system(tsys, &tvals)?;
        if let Some(k) = &m.time_scale {
            let kv = RatFun::constant(&target.vars, k.eval(&point)?);
            target.field = target.field.iter().map(|f| f.try_mul(&kv)).collect::<Result<_, _>>()?;
        }
        let res = match system_residual(&target, &pushed, &t0) {
            Ok(r) => r,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        let bad: Vec<(usize, i64)> = res
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.c.iter().position(|c| !c.is_zero()).map(|k| (i, r.val + k as i64)))
            .collect();
        return Ok(match bad.first() {
            None => Check::pass(&m.name, format!("series residual vanishes through order {n} at t0 = {t0}")),
            Some((i, p)) => Check::fail(&m.name, "series residual is nonzero", format!("component {i}, power {p}")),
        });
    }
    Err(TransformError::Invalid(format!("`{}`: no regular sample point in 5 attempts ({last})", m.name)))
}

/// `inverse(forward(x)) = x` exactly.
pub fn round_trip_check(m: &BiMap) -> Result<Check, TransformError> {
    let Some(inv) = &m.inverse else {
        return Err(TransformError::Invalid(format!("`{}` has no inverse", m.name)));
    };
    let snames = m.source.state_names();
    for (i, g) in inv.iter().enumerate() {
        let back = m.pull(g)?;
        let id = RatFun::var(m.source.vars(), m.source.system.state[i]);
        if !back.equals(&id) {
            return Ok(Check::fail(&m.name, format!("round trip moves {}", snames[i]), clip(back.to_string())));
        }
    }
    Ok(Check::pass(&m.name, "inverse after forward is the identity"))
}

/// Determinant of the Jacobian of the forward map with respect to the source state.
pub fn jacobian_det(m: &BiMap) -> Result<RatFun, TransformError> {
    if m.forward.len() != m.source.system.state.len() {
        return Err(TransformError::Dimension(m.name.clone()));
    }
    Ok(det(&jacobian(&m.forward, &m.source.system.state))?.tidy())
}

pub fn unimodular(det_j: &RatFun) -> bool {
    det_j.equals(&RatFun::one(det_j.vars()))
}

pub fn unimodular_check(m: &BiMap) -> Result<Check, TransformError> {
    let d = jacobian_det(m)?;
    Ok(if unimodular(&d) { Check::pass(&m.name, "det J = 1") } else { Check::fail(&m.name, "det J is not 1", d.to_string()) })
}

pub fn chart_unimodular_check(c: &Chart) -> Result<Check, TransformError> {
    let d = c.jacobian_det()?.tidy();
    Ok(if unimodular(&d) { Check::pass(&c.name, "det J = 1") } else { Check::fail(&c.name, "det J is not 1", d.to_string()) })
}

// ---------------------------------------------------------------------------
// Relations.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected<'a> {
    Identity,
    Map(&'a str),
}

#[derive(Clone, Debug)]
pub struct RelationSpec<'a> {
    pub name: &'a str,
    pub claim: &'a str,
    /// Maps in order of application.
    pub word: &'a [&'a str],
    pub expected: Expected<'a>,
    /// Whether the relation is expected to hold.
    pub holds: bool,
}

const fn rel<'a>(name: &'a str, claim: &'a str, word: &'a [&'a str], expected: Expected<'a>) -> RelationSpec<'a> {
    RelationSpec { name, claim, word, expected, holds: true }
}

static RELATIONS: &[RelationSpec<'static>] = &[
    rel("dh.pi-cubed", "pi^3 = 1 for Darboux-Halphen", &["dh.pi", "dh.pi", "dh.pi"], Expected::Identity),
    rel("ix.square-g0", "g0 is phi1 s0 phi0", &["ix.phi0", "ix.s0", "ix.phi1"], Expected::Map("ix.g0")),
    rel("ix.square-g1", "g1 is phi2 s1 pi phi0", &["ix.phi0", "ix.pi", "ix.s1", "ix.phi2"], Expected::Map("ix.g1")),
    rel("x.square-g0", "g0 is phi1 s0 phi0", &["x.phi0", "x.s0", "x.phi1"], Expected::Map("x.g0")),
    rel("x.square-g1", "g1 is phi2 s1 pi phi0", &["x.phi0", "x.pi", "x.s1", "x.phi2"], Expected::Map("x.g1")),
    rel("viii.pi-word", "pi is s1^-1 phi s0", &["viii.s0", "viii.phi", "viii.s1-inverse"], Expected::Map("viii.pi")),
    rel("viii.s1-round", "s1^-1 s1 = 1", &["viii.s1", "viii.s1-inverse"], Expected::Identity),
    rel("viii.pi-squared", "pi^2 = 1", &["viii.pi", "viii.pi"], Expected::Identity),
    rel("six.s0-squared", "s0^2 = 1", &["six.s0", "six.s0"], Expected::Identity),
    rel("six.s1-squared", "s1^2 = 1", &["six.s1", "six.s1"], Expected::Identity),
    rel("six.s2-squared", "s2^2 = 1", &["six.s2", "six.s2"], Expected::Identity),
    rel("six.pi-cubed", "pi^3 = 1", &["six.pi", "six.pi", "six.pi"], Expected::Identity),
    rel("weyl.w0-squared", "w0^2 = 1", &["weyl.w0", "weyl.w0"], Expected::Identity),
    rel("weyl.w1-squared", "w1^2 = 1", &["weyl.w1", "weyl.w1"], Expected::Identity),
    rel("weyl.w2-squared", "w2^2 = 1", &["weyl.w2", "weyl.w2"], Expected::Identity),
    rel("weyl.pi-cubed", "pi^3 = 1", &["weyl.pi", "weyl.pi", "weyl.pi"], Expected::Identity),
    RelationSpec { name: "weyl.pi-fourth", claim: "pi^4 = 1", word: &["weyl.pi", "weyl.pi", "weyl.pi", "weyl.pi"], expected: Expected::Identity, holds: false },
    rel("halphen.s0-squared", "s0^2 = 1", &["halphen.s0", "halphen.s0"], Expected::Identity),
    rel("halphen.s1-squared", "s1^2 = 1", &["halphen.s1", "halphen.s1"], Expected::Identity),
    rel("halphen.s2-squared", "s2^2 = 1", &["halphen.s2", "halphen.s2"], Expected::Identity),
    rel("halphen.pi-cubed", "pi^3 = 1", &["halphen.pi", "halphen.pi", "halphen.pi"], Expected::Identity),
    rel("halphen4.s1-squared", "s1^2 = 1", &["halphen4.s1", "halphen4.s1"], Expected::Identity),
    rel("halphen4.s2-squared", "s2^2 = 1", &["halphen4.s2", "halphen4.s2"], Expected::Identity),
    rel("halphen4.s3-squared", "s3^2 = 1", &["halphen4.s3", "halphen4.s3"], Expected::Identity),
    rel("halphen4.s4-squared", "s4^2 = 1", &["halphen4.s4", "halphen4.s4"], Expected::Identity),
    rel("halphen4.s5-squared", "s5^2 = 1", &["halphen4.s5", "halphen4.s5"], Expected::Identity),
    rel("halphen4.s6-squared", "s6^2 = 1", &["halphen4.s6", "halphen4.s6"], Expected::Identity),
    rel("halphen4.pi-fourth", "pi^4 = 1", &["halphen4.pi", "halphen4.pi", "halphen4.pi", "halphen4.pi"], Expected::Identity),
];

pub fn relation_specs() -> &'static [RelationSpec<'static>] {
    RELATIONS
}

pub fn get_relation(name: &str) -> Result<&'static RelationSpec<'static>, TransformError> {
    RELATIONS.iter().find(|r| r.name == name).ok_or_else(|| TransformError::UnknownRelation(name.to_string()))
}

/// Composite of a word of maps: state and parameter images over the first source.
#[derive(Clone, Debug)]
pub struct Composite {
    pub source: Space,
    pub target: Space,
    pub state: Vec<RatFun>,
    pub params: Vec<(String, RatFun)>,
}

pub fn compose_word(word: &[BiMap]) -> Result<Composite, TransformError> {
    let first = word.first().ok_or_else(|| TransformError::Invalid("empty word".into()))?;
    let out = first.source.vars().clone();
    let mut state: Vec<RatFun> = first.source.system.state.iter().map(|&i| RatFun::var(&out, i)).collect();
    let mut params: Vec<(String, RatFun)> = first.source.param_names().into_iter().map(|n| (n.clone(), RatFun::var(&out, out.idx(&n)))).collect();
    let mut prev = first.source.name.clone();
    let mut current = first.source.clone();
    for m in word {
        if m.source.name != current.name {
            return Err(TransformError::Composition { prev: prev.clone(), next: m.name.clone(), msg: format!("expects {}, got {}", m.source.name, current.name) });
        }
        if m.source.param_names() != current.param_names() {
            return Err(TransformError::Composition { prev: prev.clone(), next: m.name.clone(), msg: "parameter bindings differ".into() });
        }
        let mut b: Vec<(String, RatFun)> = current.state_names().into_iter().zip(state.iter().cloned()).collect();
        b.extend(params.iter().cloned());
        let br: Vec<(&str, &RatFun)> = b.iter().map(|(n, r)| (n.as_str(), r)).collect();
        let next_state: Vec<RatFun> = m.forward.iter().map(|f| compose(f, &br, &out).map(RatFun::tidy)).collect::<Result<_, _>>()?;
        let next_params: Vec<(String, RatFun)> =
            m.action.iter().map(|(n, f)| compose(f, &br, &out).map(|r| (n.clone(), r.tidy()))).collect::<Result<_, _>>()?;
        state = next_state;
        params = next_params;
        current = m.target.clone();
        prev = m.name.clone();
    }
    Ok(Composite { source: first.source.clone(), target: current, state, params })
}

pub fn relation_check(r: &RelationSpec) -> Result<Check, TransformError> {
    let word: Vec<BiMap> = r.word.iter().map(|n| get_map(n)).collect::<Result<_, _>>()?;
    let c = compose_word(&word)?;
    let out = c.source.vars().clone();
    let (want_state, want_params): (Vec<RatFun>, Vec<(String, RatFun)>) = match r.expected {
        Expected::Identity => {
            if c.target.name != c.source.name {
                return Err(TransformError::Composition { prev: r.word.last().unwrap().to_string(), next: "identity".into(), msg: "word is not closed".into() });
            }
            (
                c.source.system.state.iter().map(|&i| RatFun::var(&out, i)).collect(),
                c.source.param_names().into_iter().map(|n| (n.clone(), RatFun::var(&out, out.idx(&n)))).collect(),
            )
        }
        Expected::Map(name) => {
            let m = get_map(name)?;
            if m.source.name != c.source.name || m.target.name != c.target.name {
                return Err(TransformError::Composition { prev: r.word.last().unwrap().to_string(), next: name.into(), msg: "endpoints differ".into() });
            }
            (m.forward.clone(), m.action.clone())
        }
    };
    let names = c.target.state_names();
    for (k, (got, want)) in c.state.iter().zip(&want_state).enumerate() {
        if !got.equals(want) {
            return Ok(Check::fail(r.name, format!("component {} differs", names[k]), clip(got.to_string())));
        }
    }
    for ((n, got), (_, want)) in c.params.iter().zip(&want_params) {
        if !got.equals(want) {
            return Ok(Check::fail(r.name, format!("parameter {n} differs"), clip(got.to_string())));
        }
    }
    Ok(Check::pass(r.name, format!("{} composes to the expected map", r.word.join(" then "))))
}

// ---------------------------------------------------------------------------
// Pfaffian compatibility.

/// The bracket `J(f) g - J(g) f` over the state variables.
pub fn bracket(pf: &PfaffianDef) -> Vec<MPoly> {
    let n = pf.state.len();
    (0..n)
        .map(|i| {
            let mut acc = MPoly::zero(&pf.vars);
            for (j, &v) in pf.state.iter().enumerate() {
                acc = &acc + &(&pf.f[i].partial(v) * &pf.g[j]);
                acc = &acc - &(&pf.g[i].partial(v) * &pf.f[j]);
            }
            acc
        })
        .collect()
}

pub fn compatibility_check(pf: &PfaffianDef) -> Check {
    let b = bracket(pf);
    match b.iter().position(|c| !c.is_zero()) {
        None => Check::pass(&pf.name, "the t and s flows commute"),
        Some(i) => Check::fail(&pf.name, format!("bracket component {i} is nonzero"), clip(b[i].to_string())),
    }
}

// ---------------------------------------------------------------------------
// First integrals and Hamiltonians.

pub fn first_integral_check(sys: &SystemDef, integral: &RatFun) -> Result<Check, TransformError> {
    let d = sys.dynamics().rules.derive(integral)?;
    Ok(if d.is_zero() {
        Check::pass(&sys.name, format!("d/dt ({integral}) = 0"))
    } else {
        Check::fail(&sys.name, "the derivative along the flow is nonzero", clip(d.tidy().to_string()))
    })
}

/// `q' = dH/dp`, `p' = -dH/dq` for a two-dimensional system with state `(q, p)`.
pub fn hamiltonian_check(sys: &SystemDef, h: &RatFun) -> Result<Check, TransformError> {
    if sys.state.len() != 2 {
        return Err(TransformError::Dimension(sys.name.clone()));
    }
    let (q, p) = (sys.state[0], sys.state[1]);
    let want = [h.partial(p), -&h.partial(q)];
    for (k, (f, w)) in sys.field.iter().zip(&want).enumerate() {
        if !f.equals(w) {
            let diff = f.try_add(&-w)?;
            return Ok(Check::fail(&sys.name, format!("component {k} is not Hamiltonian"), clip(diff.tidy().to_string())));
        }
    }
    Ok(Check::pass(&sys.name, "field = (dH/dp, -dH/dq)"))
}

// ---------------------------------------------------------------------------
// Eliminations.

/// Sampled check that some functions of a solution satisfy another equation.
#[derive(Clone, Debug)]
pub struct EliminationSpec<'a> {
    pub name: &'a str,
    pub claim: &'a str,
    pub source: &'a str,
    /// Expressions over the source, one per target state (one for a scalar target).
    pub exprs: &'a [&'a str],
    pub target: &'a str,
    /// Target parameters set to the value of an expression at the sample point.
    pub bound: &'a [(&'a str, &'a str)],
}

const SIX_INTEGRAL: &str = "x*z - y*z - a2*x + a4*y - (a5-a6)*z";
const XI3_INTEGRAL: &str = "(x+z)*y^2*z^3";

static ELIMINATIONS: &[EliminationSpec<'static>] = &[
    EliminationSpec { name: "iii.ssss1", claim: "v = -u'/u satisfies the rational third-order equation", source: "chazy.III.XYZ", exprs: &["Y"], target: "chazy.III.v", bound: &[] },
    EliminationSpec {
        name: "six.reduction",
        claim: "eliminating x with the first integral",
        source: "six-param.system",
        exprs: &["y", "z"],
        target: "six-param.reduced",
        bound: &[("I", SIX_INTEGRAL)],
    },
    EliminationSpec {
        name: "xi3.reduction",
        claim: "eliminating x with the first integral",
        source: "chazy.XI3.system",
        exprs: &["y", "z"],
        target: "chazy.XI3.reduced",
        bound: &[("I", XI3_INTEGRAL)],
    },
    EliminationSpec {
        name: "xi3.autopiv",
        claim: "X = -1/(y z^2), Y = 1/z satisfy autonomous PIV",
        source: "chazy.XI3.system",
        exprs: &["-1/(y*z^2)", "1/z"],
        target: "chazy.XI3.autoPIV",
        bound: &[("I", XI3_INTEGRAL)],
    },
];

pub fn elimination_specs() -> &'static [EliminationSpec<'static>] {
    ELIMINATIONS
}

pub fn get_elimination(name: &str) -> Result<&'static EliminationSpec<'static>, TransformError> {
    ELIMINATIONS.iter().find(|e| e.name == name).ok_or_else(|| TransformError::UnknownMap(name.to_string()))
}

/// Run `samples` regular Taylor jets of order `n` through the elimination.
pub fn elimination_check(spec: &EliminationSpec, samples: usize, n: usize, seed: u64) -> Result<Check, TransformError> {
    let src = space(spec.source, &[])?;
    let tgt = space(spec.target, &[])?;
    let sys = &src.system;
    let sv = sys.vars.clone();
    let exprs: Vec<RatFun> = spec.exprs.iter().map(|e| parse(&sv, e)).collect::<Result<_, _>>().map_err(|e| parse_err(spec.name, e))?;
    let bound: Vec<(String, RatFun)> =
        spec.bound.iter().map(|(n, e)| parse(&sv, e).map(|r| (n.to_string(), r))).collect::<Result<_, _>>().map_err(|e| parse_err(spec.name, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    let mut attempts = 0;
    while done < samples {
        attempts += 1;
        if attempts > 5 * samples {
            return Err(TransformError::Invalid(format!("`{}`: too many singular samples", spec.name)));
        }
        let params: Vec<(usize, QuadExt)> = sys.params.iter().map(|&p| (p, random_rational(&mut rng))).collect();
        let ic: Vec<QuadExt> = sys.state.iter().map(|_| random_rational(&mut rng)).collect();
        let t0 = QuadExt::zero();
        let Ok(sol) = jet_taylor(&bind_system(sys, &params)?, &ic, &t0, n) else { continue };
        let len = n + 1;
        let mut vals: Vec<Series> = vec![Series::constant(QuadExt::zero(), len); sv.len()];
        let mut point = vec![QuadExt::zero(); sv.len()];
        for (k, &s) in sys.state.iter().enumerate() {
            vals[s] = sol.series[k].clone();
            point[s] = ic[k].clone();
        }
        for (p, v) in &params {
            vals[*p] = Series::constant(v.clone(), len);
            point[*p] = v.clone();
        }
        let Ok(pushed) = exprs.iter().map(|f| eval_ratfun(f, &vals)).collect::<Result<Vec<_>, _>>() else { continue };
        // Target parameters: bound expressions, else the same-named source parameter.
        let mut tvals = Vec::new();
        for name in tgt.param_names() {
            let v = match bound.iter().find(|(n, _)| *n == name) {
                Some((_, f)) => f.eval(&point)?,
                None => {
                    let i = sv.index_of(&name).ok_or_else(|| TransformError::Invalid(format!("`{}`: no value for `{name}`", spec.name)))?;
                    point[i].clone()
                }
            };
            tvals.push((tgt.vars().idx(&name), v));
        }
        let residual = match &tgt.scalar {
            Some(ode) => {
                let vb: Vec<(&str, QuadExt)> = tvals.iter().map(|(i, v)| (tgt.vars().name(*i), v.clone())).collect();
                let ode_b = catalog::get_scalar(&ode.name, &vb)?;
                let r = scalar_residual(&pushed[0], &ode_b, &t0)?;
                if !r.exact_zero {
                    return Ok(Check::fail(spec.name, "scalar residual is nonzero", format!("max |c| = {:.3e}", r.max_abs)));
                }
                r.checked
            }
            None => {
                let tb = bind_system(&tgt.system, &tvals)?;
                let res = system_residual(&tb, &pushed, &t0)?;
                if let Some((i, r)) = res.iter().enumerate().find(|(_, r)| !r.is_zero_to_precision()) {
                    return Ok(Check::fail(spec.name, format!("component {i} residual is nonzero"), format!("{r:?}")));
                }
                res.iter().map(|r| r.c.len()).sum()
            }
        };
        if residual == 0 {
            continue;
        }
        done += 1;
    }
    Ok(Check::pass(spec.name, format!("{samples} samples, residual zero through order {n}")))
}

// ---------------------------------------------------------------------------
// Chart suites.

/// Charts covering a system's phase space, with the systems they apply to.
#[derive(Clone, Debug)]
pub struct ChartSuite {
    pub name: String,
    pub claim: String,
    pub systems: Vec<SystemDef>,
    pub charts: Vec<Chart>,
    /// Whether every chart is claimed to preserve the volume form.
    pub unimodular: bool,
}

pub const SUITES: [&str; 9] = ["chazy-iii", "chazy-ix", "chazy-x", "chazy-i", "chazy-viii", "six-param", "three-param", "chazy-xi3", "a2-weyl"];

type ChartDef<'a> = (&'a str, [&'a str; 3], &'a [(&'a str, &'a str)], [&'a str; 3], &'a [(&'a str, &'a str)], &'a str);

fn charts3(sys: &SystemDef, defs: &[ChartDef]) -> Result<Vec<Chart>, TransformError> {
    defs.iter()
        .map(|(name, coords, steps, to, from, b)| Chart::new(sys, name, coords, steps, to, from, Some(b)).map_err(TransformError::from))
        .collect()
}

fn charts2(sys: &SystemDef, defs: &[(&str, [&str; 2], [&str; 2], &[(&str, &str)], &str)]) -> Result<Vec<Chart>, TransformError> {
    defs.iter().map(|(name, coords, to, from, b)| Chart::new(sys, name, coords, &[], to, from, Some(b)).map_err(TransformError::from)).collect()
}

/// Correction `g(q)` in the last step of the Chazy I chart: the value of `r5`
/// at which the polar part of `r5'` vanishes.
pub const CHAZY_I_G: &str = "3/128*q^5 - A0*q^3 - (3/2*A1 + 9/8*B0)*q^2 - (2*A0^2 + 2*B1 + 3/2*C0)*q - 2*A0*B0 - 3*C1";

pub fn chart_suite(name: &str) -> Result<ChartSuite, TransformError> {
    let suite = |claim: &str, systems: Vec<SystemDef>, charts: Vec<Chart>, unimodular: bool| ChartSuite {
        name: name.to_string(),
        claim: claim.to_string(),
        systems,
        charts,
        unimodular,
    };
    Ok(match name {
        "chazy-iii" => {
            let s = catalog::get_system("chazy.III.system", &[])?;
            let charts = charts3(&s, &[
                ("1", ["x1", "y1", "z1"], &[], ["-(x-y)/(2*x)", "x", "(x-y)*(x+3*y-2*z)/(4*x)"], &[("x", "y1"), ("y", "y1*(1+2*x1)"), ("z", "z1/x1 + 2*y1 + 3*x1*y1")], "x1"),
                ("2", ["x2", "y2", "z2"], &[], ["x*y", "1/y", "z"], &[("y", "1/y2"), ("x", "x2*y2"), ("z", "z2")], "y2"),
                ("3", ["x3", "y3", "z3"], &[], ["x", "(y-x)*z", "1/z"], &[("x", "x3"), ("z", "1/z3"), ("y", "x + y3*z3")], "z3"),
                ("4", ["x4", "y4", "z4"], &[], ["-(x-y)*x*z", "-1/((x-y)*z)", "1/z"], &[("z", "1/z4"), ("x", "x4*y4"), ("y", "x + z4/y4")], "z4"),
            ])?;
            suite("the quadratic Chazy III system stays polynomial in four charts", vec![s], charts, false)
        }
        "chazy-ix" => {
            let pf = catalog::get_pfaffian("chazy.IX.pde", &[])?;
            let t = pf.t_system();
            let k = "2*(3*(sqrt(5)+3)*y^2 + delta)/(3*(sqrt(5)-1))";
            let l = "2*(-(sqrt(5)-3)*(135*x^4 + 3*y^2) + (90-54*sqrt(5))*x^2*y + delta)/(3*(sqrt(5)+1))";
            let zpi = "z - 6*sqrt(5)*x*y - 9*(sqrt(5)-5)*x^3";
            let z1 = format!("-(z*x + {k})*x");
            let z1i = format!("(-z1*x1 - {k})*x1");
            let z2 = format!("-(({zpi})*x - {l})*x");
            let z2i = format!("(-z2*x2 + {l})*x2 + 6*sqrt(5)*x*y + 9*(sqrt(5)-5)*x^3");
            let charts = vec![
                Chart::new(&t, "1", &["x1", "y1", "z1"], &[], &["1/x", "y", &z1], &[("x", "1/x1"), ("y", "y1"), ("z", &z1i)], Some("x1"))?,
                Chart::new(&t, "2", &["x2", "y2", "z2"], &[], &["1/x", "y - 3*sqrt(5)*x^2", &z2], &[("x", "1/x2"), ("y", "y2 + 3*sqrt(5)*x^2"), ("z", &z2i)], Some("x2"))?,
            ];
            suite("the coupled Chazy IX system stays polynomial in both charts", vec![t, pf.s_system()], charts, true)
        }
        "chazy-x" => {
            let s = catalog::get_system("chazy.Xa.system", &[])?;
            let k = "4/11*(-4+3*sqrt(3))*y^2 + 1/66*(-21+13*sqrt(3))*alpha*y - (1+2*sqrt(3))/176*alpha^2";
            let z1 = format!("-(z*x - ({k}))*x");
            let z1i = format!("(-z1*x1 + {k})*x1");
            let y2 = "-((y + (5+sqrt(3))/2*x^2 + (sqrt(3)-1)/8*alpha)*x + (-17+sqrt(3))/13*x^3 - (-4+sqrt(3))/13*z - (-10+9*sqrt(3))/52*alpha*x)*x";
            let charts = vec![
                Chart::new(&s, "1", &["x1", "y1", "z1"], &[], &["1/x", "y", &z1], &[("x", "1/x1"), ("y", "y1"), ("z", &z1i)], Some("x1"))?,
                Chart::new(
                    &s,
                    "2",
                    &["x2", "y2", "z2"],
                    &[],
                    &["1/x", y2, "z - (5+sqrt(3))*x^3 - 1/4*(2*sqrt(3)-1)*alpha*x"],
                    &[
                        ("x", "1/x2"),
                        ("z", "z2 + (5+sqrt(3))*x^3 + 1/4*(2*sqrt(3)-1)*alpha*x"),
                        ("y", "(-y2*x2 - (-17+sqrt(3))/13*x^3 + (-4+sqrt(3))/13*z + (-10+9*sqrt(3))/52*alpha*x)*x2 - (5+sqrt(3))/2*x^2 - (sqrt(3)-1)/8*alpha"),
                    ],
                    Some("x2"),
                )?,
            ];
            suite("the Chazy X.a system stays polynomial in both charts", vec![s], charts, true)
        }
        "chazy-i" => {
            let s = catalog::get_system("chazy.I.system", &[])?;
            let charts = vec![chazy_i_chart(&s)?];
            suite("the Chazy I system stays polynomial under the coefficient relations", vec![s], charts, true)
        }
        "chazy-viii" => {
            let s = catalog::get_system("chazy.VIII.system", &[])?;
            let charts = charts3(&s, &[
                (
                    "1",
                    ["x1", "y1", "z1"],
                    &[],
                    ["1/x", "-(y*x - 1/2*(2*z + 4*alpha^2*t - beta))*x", "z"],
                    &[("x", "1/x1"), ("z", "z1"), ("y", "(-y1*x1 + 1/2*(2*z + 4*alpha^2*t - beta))*x1")],
                    "x1",
                ),
                (
                    "2",
                    ["x2", "y2", "z2"],
                    &[],
                    ["1/x", "-((y + 2*x^2 - 2*alpha^2*t^2 + beta*t + 4*alpha + gamma)*x + z - 2*alpha^2*t + beta/2)*x", "z + 4*alpha*x"],
                    &[
                        ("x", "1/x2"),
                        ("z", "z2 - 4*alpha*x"),
                        ("y", "(-y2*x2 - z + 2*alpha^2*t - beta/2)*x2 - 2*x^2 + 2*alpha^2*t^2 - beta*t - 4*alpha - gamma"),
                    ],
                    "x2",
                ),
            ])?;
            suite("the Chazy VIII system stays polynomial in both charts", vec![s], charts, true)
        }
        "six-param" => {
            let s = catalog::get_system("six-param.system", &[])?;
            let charts = charts3(&s, &[
                ("1", ["x1", "y1", "z1"], &[], ["1/x", "-(y-a1)*x", "(z-a2)*x"], &[("x", "1/x1"), ("y", "a1 - y1*x1"), ("z", "a2 + z1*x1")], "x1"),
                ("2", ["x2", "y2", "z2"], &[], ["(x-a3)*y", "1/y", "-(z-a4)*y"], &[("y", "1/y2"), ("x", "a3 + x2*y2"), ("z", "a4 - z2*y2")], "y2"),
                ("3", ["x3", "y3", "z3"], &[], ["-(x-a5)*z", "(y-a6)*z", "1/z"], &[("z", "1/z3"), ("x", "a5 - x3*z3"), ("y", "a6 + y3*z3")], "z3"),
                (
                    "4",
                    ["x4", "y4", "z4"],
                    &[],
                    ["1/x", "-(y-x+a2-a4+a5-a6)*x", "(z-x+a1+a3-a4-a6)*x"],
                    &[("x", "1/x4"), ("y", "x - a2 + a4 - a5 + a6 - y4*x4"), ("z", "x - a1 - a3 + a4 + a6 + z4*x4")],
                    "x4",
                ),
            ])?;
            suite("the six-parameter system stays polynomial in four charts", vec![s], charts, true)
        }
        "three-param" => {
            let s = catalog::get_system("three-param.system", &[])?;
            let p = "16*x - 6*y - 3*z - 10*a1 + 3*a2 + 16*a3";
            let q = "8*x - 4*y - z - 4*a1 + a2 + 8*a3";
            let y4 = format!("-2/3*x^5*({p})");
            let z4 = format!("x^3*({q})");
            let charts = charts3(&s, &[
                ("1", ["x1", "y1", "z1"], &[], ["1/x", "(y-a1)*x", "x^3*(z-a2)"], &[("x", "1/x1"), ("y", "a1 + y1*x1"), ("z", "a2 + z1*x1^3")], "x1"),
                ("2", ["x2", "y2", "z2"], &[], ["(x-a1+a3)*y", "1/y", "z"], &[("y", "1/y2"), ("x", "a1 - a3 + x2*y2"), ("z", "z2")], "y2"),
                ("3", ["x3", "y3", "z3"], &[], ["x", "(y-x-a3)*z", "1/z"], &[("z", "1/z3"), ("x", "x3"), ("y", "x + a3 + y3*z3")], "z3"),
                (
                    "4",
                    ["x4", "y4", "z4"],
                    &[],
                    ["1/x", &y4, &z4],
                    &[
                        ("x", "1/x4"),
                        ("y", "(-3/2*y4*x4^5 - 3*z4*x4^3 + 8*x - 2*a1 + 8*a3)/6"),
                        ("z", "8*x - 4*y - 4*a1 + a2 + 8*a3 - z4*x4^3"),
                    ],
                    "x4",
                ),
                (
                    "5",
                    ["x5", "y5", "z5"],
                    &[],
                    ["-(x-y+a3)*(x-a1+a3)*z", "-1/((x-y+a3)*z)", "1/z"],
                    &[("z", "1/z5"), ("x", "a1 - a3 + x5*y5"), ("y", "x + a3 + z5/y5")],
                    "z5",
                ),
            ])?;
            suite("the three-parameter system stays polynomial in five charts", vec![s], charts, false)
        }
        "chazy-xi3" => {
            let s = catalog::get_system("chazy.XI3.system", &[])?;
            let charts = charts3(&s, &[
                ("1", ["x1", "y1", "z1"], &[], ["1/x", "x^2*y", "z/x"], &[("x", "1/x1"), ("y", "y1*x1^2"), ("z", "z1/x1")], "x1"),
                ("2", ["x2", "y2", "z2"], &[], ["(x+z)*y^2", "1/y", "z"], &[("y", "1/y2"), ("z", "z2"), ("x", "x2*y2^2 - z")], "y2"),
                ("3", ["x3", "y3", "z3"], &[], ["x/z", "y*z^2", "1/z"], &[("z", "1/z3"), ("x", "x3/z3"), ("y", "y3*z3^2")], "z3"),
                ("4", ["x4", "y4", "z4"], &[], ["1/x", "(y-x+2*z)*x^2", "x*z"], &[("x", "1/x4"), ("z", "z4*x4"), ("y", "y4*x4^2 + x - 2*z")], "x4"),
                ("5", ["x5", "y5", "z5"], &[], ["1/x", "1/(x^2*y)", "(x+z)*x^3*y^2"], &[("x", "1/x5"), ("y", "x5^2/y5"), ("z", "z5/(x^3*y^2) - x")], "x5"),
            ])?;
            suite("the Chazy XI (N = 3) system stays polynomial in five charts", vec![s], charts, false)
        }
        "a2-weyl" => {
            let s = catalog::get_system("a2-weyl.system", &[])?;
            let w = OMEGA;
            let w2 = "(-1+sqrt(-3))/2";
            let y2 = format!("-((c - {w}*s + {w2}*a)*s - {w}*({w}*a1 - a2))*s");
            let c2 = format!("(-y2*x2 + {w}*({w}*a1 - a2))*x2 + {w}*s - {w2}*a");
            let y3 = format!("-((c + {w2}*s - {w}*a)*s - {w2}*({w2}*a1 + a2))*s");
            let c3 = format!("(-y3*x3 + {w2}*({w2}*a1 + a2))*x3 - {w2}*s + {w}*a");
            let charts = charts2(&s, &[
                ("1", ["x1", "y1"], ["1/s", "-((c+s+a)*s - a1 - a2)*s"], &[("s", "1/x1"), ("c", "(-y1*x1 + a1 + a2)*x1 - s - a")], "x1"),
                ("2", ["x2", "y2"], ["1/s", &y2], &[("s", "1/x2"), ("c", &c2)], "x2"),
                ("3", ["x3", "y3"], ["1/s", &y3], &[("s", "1/x3"), ("c", &c3)], "x3"),
            ])?;
            suite("the Weyl-symmetric system stays polynomial in three symplectic charts", vec![s], charts, true)
        }
        _ => return Err(TransformError::UnknownSuite(name.to_string())),
    })
}

/// Steps from `(x, y, z)` to the successive coordinates `q, r1, ..., r5` of the Chazy I chart.
const CHAZY_I_STEPS: [(&str, &str); 6] = [
    ("q", "(y + x^2)/x"),
    ("r1", "(z/x^3 - 2)*x"),
    ("r2", "(r1 + 3*q)*x"),
    ("r3", "(r2 - 3/4*q^2)*x"),
    ("r4", "(r3 - 1/8*(q^3 - 16*A0*q - 16*B0))*x"),
    ("r5", "(r4 - 1/64*(3*q^4 - 80*A0*q^2 - 32*(2*A1+3*B0)*q - 64*B1 - 192*C0))*x"),
];

/// The chart at infinity of the Chazy I system: `(1/x, q, -(r5 - g) x)`.
pub fn chazy_i_chart(s: &SystemDef) -> Result<Chart, TransformError> {
    let g = CHAZY_I_G.replace('q', "y1");
    let r5 = format!("(-z1*x1 + {g})");
    let r4 = format!("({r5}*x1 + 1/64*(3*y1^4 - 80*A0*y1^2 - 32*(2*A1+3*B0)*y1 - 64*B1 - 192*C0))");
    let r3 = format!("({r4}*x1 + 1/8*(y1^3 - 16*A0*y1 - 16*B0))");
    let r2 = format!("({r3}*x1 + 3/4*y1^2)");
    let r1 = format!("({r2}*x1 - 3*y1)");
    let z = format!("({r1}*x1 + 2)*x^3");
    let z1 = format!("-(r5 - ({}))*x", CHAZY_I_G);
    Ok(Chart::new(s, "1", &["x1", "y1", "z1"], &CHAZY_I_STEPS, &["1/x", "q", &z1], &[("x", "1/x1"), ("y", "y1*x - x^2"), ("z", &z)], Some("x1"))?)
}

/// The Chazy I system with `A1' = 6 A0^2 + 1`, which breaks the coefficient relations.
pub fn chazy_i_mutated() -> Result<SystemDef, TransformError> {
    let mut s = catalog::get_system("chazy.I.system", &[])?;
    let mut rules = s.rules.clone().ok_or_else(|| TransformError::Invalid("chazy.I.system has no rules".into()))?;
    rules.set_named("A1", parse(&s.vars, "6*A0^2 + 1")?);
    s.rules = Some(rules);
    s.name = "chazy.I.system-mutated".into();
    Ok(s)
}

/// Holomorphy of every system of a suite in every chart, plus unimodularity when claimed.
pub fn suite_check(suite: &ChartSuite) -> Result<Check, TransformError> {
    for sys in &suite.systems {
        for r in holomorphy_check(sys, &suite.charts)? {
            if !r.polynomial {
                let comp = r.failing[0];
                return Ok(Check::fail(&suite.name, format!("{} is not polynomial in chart {}", sys.name, r.chart), clip(r.field[comp].to_string())));
            }
        }
    }
    if suite.unimodular {
        for c in &suite.charts {
            let u = chart_unimodular_check(c)?;
            if !u.ok {
                return Ok(Check::fail(&suite.name, format!("chart {} is not unimodular", c.name), u.witness.unwrap_or_default()));
            }
        }
    }
    Ok(Check::pass(&suite.name, format!("{} chart(s) polynomial{}", suite.charts.len(), if suite.unimodular { ", det J = 1" } else { "" })))
}

/// First integrals stated for catalog systems, as `(system, integral)`.
pub const FIRST_INTEGRALS: [(&str, &str); 3] = [
    ("six-param.system", SIX_INTEGRAL),
    (
        "three-param.system",
        "2*x^3*(z-a2) + x^2*(y^2 - 2*y*(z+a1-a2) - 2*(2*a1-3*a3)*z - 6*a2*a3 + a1^2 + 4*a1*a2) - 2*x*(a1-a3)*(y^2 - 2*y*(z+a1-a2) - (a1-3*a3)*z + a1^2 + a1*a2 - 3*a2*a3) + (a1-a3)^2*(y^2 - 2*y*(z+a1-a2) + 2*a3*z)",
    ),
    ("chazy.XI3.system", XI3_INTEGRAL),
];

/// Hamiltonians stated for catalog systems, as `(system, H)`.
pub const HAMILTONIANS: [(&str, &str); 2] = [
    ("pii.system", "q^2*p + 1/2*p^2 + t/2*p - (alpha - 1/2)*q"),
    (
        "six-param.hamiltonian",
        "X^2*Y^2 + (a2-a4)*X^2*Y - X*Y^2 + (a1-a2-a3+a4+a5-a6)*X*Y - (-I - a1*a2 + a1*a4 - a2*a5 + a2*a6)*X + (a6-a1)*Y",
    ),
];

/// `u_ttt - u_s = 54 u^2 u_t + 9 u_t^2 + 9/2 u u_tt` on the coupled system in jet coordinates.
pub fn jet_pde_identity() -> Result<Check, TransformError> {
    let pf = catalog::get_pfaffian("chazy.IX.pde-transformed", &[])?;
    let lhs = &pf.f[2] - &pf.g[0];
    let rhs = crate::mpoly::parse_poly(&pf.vars, "54*X^2*Y + 9*Y^2 + 9/2*X*Z")?;
    let d = &lhs - &rhs;
    Ok(if d.is_zero() {
        Check::pass("ix.pde-identity", "u_ttt - u_s = 54 u^2 u_t + 9 u_t^2 + 9/2 u u_tt")
    } else {
        Check::fail("ix.pde-identity", "identity fails", d.to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{recover_field, transform_field};

    fn sys_of(name: &str) -> SystemDef {
        catalog::get_system(name, &[]).unwrap()
    }

    #[test]
    fn registered_maps_behave_as_recorded() {
        for spec in map_specs() {
            let m = compile(spec).unwrap();
            let c = pushforward_check(&m).unwrap();
            assert_eq!(c.ok, spec.holds, "{}: {:?}", spec.name, c.witness);
        }
    }

    #[test]
    fn inverses_round_trip() {
        let mut n = 0;
        for spec in map_specs().iter().filter(|s| !s.inverse.is_empty()) {
            let m = compile(spec).unwrap();
            assert!(round_trip_check(&m).unwrap().ok, "{}", spec.name);
            n += 1;
        }
        assert!(n >= 15);
    }

    #[test]
    fn identity_map_is_a_pushforward() {
        let spec = MapSpec::point("id", "identity", "chazy.III.system", "chazy.III.system", &[("x", "x"), ("y", "y"), ("z", "z")]);
        let m = compile(&spec).unwrap();
        assert!(pushforward_check(&m).unwrap().ok);
        assert!(unimodular_check(&m).unwrap().ok);
        let scaled = MapSpec::point("scale", "scaling", "chazy.III.system", "chazy.III.system", &[("x", "2*x"), ("y", "y"), ("z", "z")]);
        let m = compile(&scaled).unwrap();
        let d = jacobian_det(&m).unwrap();
        assert!(d.equals(&RatFun::constant(d.vars(), QuadExt::int(2))));
        let c = unimodular_check(&m).unwrap();
        assert!(!c.ok);
        assert_eq!(c.witness.as_deref(), Some("2"));
        // The scaling does not preserve the field either.
        assert!(!pushforward_check(&m).unwrap().ok);
    }

    #[test]
    fn identity_backlund_on_a_scalar_equation() {
        let spec = MapSpec::prolonged("id", "identity", "chazy.IX", "chazy.IX", &[("u", "u")]);
        let m = compile(&spec).unwrap();
        assert!(bt_check(&m, BtMode::ExactJet, 0).unwrap().ok);
        assert!(bt_check(&m, BtMode::Series, 0).unwrap().ok);
    }

    #[test]
    fn backlund_modes_agree() {
        for name in ["ix.g0", "ix.g1", "x.g0", "x.g1", "x.g1-printed-action"] {
            let m = get_map(name).unwrap();
            let exact = bt_check(&m, BtMode::ExactJet, 1).unwrap();
            let series = bt_check(&m, BtMode::Series, 1).unwrap();
            assert_eq!(exact.ok, series.ok, "{name}");
            assert_eq!(exact.ok, m.holds, "{name}");
        }
    }

    #[test]
    fn time_scaled_map_fails_without_the_scale() {
        let mut spec = map_specs().iter().find(|s| s.name == "ix.pde-to-jet.s").unwrap().clone();
        assert!(pushforward_check(&compile(&spec).unwrap()).unwrap().ok);
        spec.time_scale = None;
        assert!(!pushforward_check(&compile(&spec).unwrap()).unwrap().ok);
    }

    #[test]
    fn relations_behave_as_recorded() {
        for r in relation_specs() {
            let c = relation_check(r).unwrap();
            assert_eq!(c.ok, r.holds, "{}: {:?}", r.name, c.witness);
        }
    }

    #[test]
    fn weyl_pi_has_order_three() {
        // pi multiplies s by -1/omega = omega^2, a primitive cube root of unity.
        let c = relation_check(get_relation("weyl.pi-fourth").unwrap()).unwrap();
        assert_eq!(c.witness.as_deref(), Some("(-1/2 + 1/2*sqrt(-3))*s"));
        assert!(relation_check(get_relation("weyl.pi-cubed").unwrap()).unwrap().ok);
    }

    #[test]
    fn composition_type_mismatch_is_an_error() {
        let word = vec![get_map("ix.phi0").unwrap(), get_map("x.s0").unwrap()];
        assert!(matches!(compose_word(&word), Err(TransformError::Composition { .. })));
        // Same equation, but alpha = beta = 0 on one side only.
        let word = vec![get_map("viii.s0-auto").unwrap(), get_map("viii.s0").unwrap()];
        assert!(matches!(compose_word(&word), Err(TransformError::Composition { .. })));
    }

    #[test]
    fn symbolic_parameters_break_the_viii_symmetries() {
        let c = pushforward_check(&get_map("viii.s0-auto-symbolic").unwrap()).unwrap();
        // The obstruction is proportional to alpha and beta.
        let w = c.witness.unwrap();
        assert!(w.contains("alpha") && w.contains("beta"));
    }

    #[test]
    fn coupled_systems_are_compatible() {
        for name in ["chazy.IX.pde", "chazy.IX.pde-transformed"] {
            let pf = catalog::get_pfaffian(name, &[]).unwrap();
            assert!(compatibility_check(&pf).ok, "{name}");
        }
        let mut pf = catalog::get_pfaffian("chazy.IX.pde", &[]).unwrap();
        pf.g[0] = &pf.g[0] + &MPoly::one(&pf.vars);
        let c = compatibility_check(&pf);
        assert!(!c.ok);
        assert!(jet_pde_identity().unwrap().ok);
    }

    #[test]
    fn first_integrals() {
        for (name, i) in FIRST_INTEGRALS {
            let s = sys_of(name);
            let integral = parse(&s.vars, i).unwrap();
            assert!(first_integral_check(&s, &integral).unwrap().ok, "{name}");
        }
        let vars = crate::mpoly::VarTable::new(&["x"]);
        let logistic = SystemDef {
            name: "x' = x^2".into(),
            state: vec![0],
            params: vec![],
            time: None,
            rules: None,
            dim: 1,
            polynomial: true,
            field: vec![parse(&vars, "x^2").unwrap()],
            vars: vars.clone(),
        };
        let c = first_integral_check(&logistic, &parse(&vars, "x").unwrap()).unwrap();
        assert!(!c.ok);
        assert_eq!(c.witness.as_deref(), Some("x^2"));
    }

    #[test]
    fn hamiltonians() {
        for (name, h) in HAMILTONIANS {
            let s = sys_of(name);
            assert!(hamiltonian_check(&s, &parse(&s.vars, h).unwrap()).unwrap().ok, "{name}");
        }
        let vars = crate::mpoly::VarTable::new(&["q", "p"]);
        let s = SystemDef {
            name: "linear".into(),
            state: vec![0, 1],
            params: vec![],
            time: None,
            rules: None,
            dim: 2,
            polynomial: true,
            field: vec![parse(&vars, "q").unwrap(), parse(&vars, "-p").unwrap()],
            vars: vars.clone(),
        };
        assert!(hamiltonian_check(&s, &parse(&vars, "q*p").unwrap()).unwrap().ok);
        assert!(!hamiltonian_check(&s, &parse(&vars, "q*p + q").unwrap()).unwrap().ok);
    }

    #[test]
    fn eliminations() {
        for e in elimination_specs() {
            let c = elimination_check(e, 3, 8, 11).unwrap();
            assert!(c.ok, "{}: {:?}", e.name, c.witness);
        }
        // The reduction needs I at its value on the sample.
        let mut wrong = get_elimination("xi3.autopiv").unwrap().clone();
        wrong.bound = &[("I", "2*(x+z)*y^2*z^3")];
        assert!(!elimination_check(&wrong, 3, 8, 11).unwrap().ok);
    }

    #[test]
    fn chart_suites_are_polynomial() {
        for name in SUITES {
            let s = chart_suite(name).unwrap();
            let c = suite_check(&s).unwrap();
            assert!(c.ok, "{name}: {:?}", c.witness);
        }
    }

    #[test]
    fn chazy_i_chart_needs_the_relations() {
        let suite = chart_suite("chazy-i").unwrap();
        let m = chazy_i_mutated().unwrap();
        let r = holomorphy_check(&m, &suite.charts).unwrap();
        assert!(!r[0].polynomial);
    }

    #[test]
    fn chazy_i_correction_cancels_the_residue() {
        // Oracle: in the chart (1/x, q, r5) the last component has a simple
        // pole on x = infinity whose residue vanishes exactly at r5 = g(q).
        let s = sys_of("chazy.I.system");
        let r4 = "(r5*p + 1/64*(3*q5^4 - 80*A0*q5^2 - 32*(2*A1+3*B0)*q5 - 64*B1 - 192*C0))";
        let r3 = format!("({r4}*p + 1/8*(q5^3 - 16*A0*q5 - 16*B0))");
        let r2 = format!("({r3}*p + 3/4*q5^2)");
        let r1 = format!("({r2}*p - 3*q5)");
        let z = format!("({r1}*p + 2)*x^3");
        let chart = Chart::new(&s, "5", &["p", "q5", "r5"], &CHAZY_I_STEPS, &["1/x", "q", "r5"], &[("x", "1/p"), ("y", "q5*x - x^2"), ("z", &z)], Some("p")).unwrap();
        let f = transform_field(&chart, &s.dynamics()).unwrap();
        let p = chart.vars.idx("p");
        let pv = RatFun::var(&chart.vars, p);
        let residue = f[2].try_mul(&pv).unwrap().tidy().eval_partial(&[(p, QuadExt::zero())]).unwrap();
        assert!(!residue.is_zero());
        let g = parse(&chart.vars, &CHAZY_I_G.replace('q', "q5")).unwrap();
        let at_g = crate::mpoly::compose(&residue, &[("r5", &g)], &chart.vars).unwrap();
        assert!(at_g.is_zero(), "{at_g}");
    }

    #[test]
    fn chazy_x_field_is_recovered_from_its_charts() {
        let suite = chart_suite("chazy-x").unwrap();
        let s = &suite.systems[0];
        let basis = recover_field(s, &[1, 2, 3], &[("alpha", 2)], &[2, 3, 4], &suite.charts).unwrap();
        assert_eq!(basis.len(), 1);
        let k = s.field[0].try_div(&basis[0][0]).unwrap().tidy();
        assert!(k.to_poly().is_some_and(|p| p.is_constant()), "{k}");
        for (got, field) in basis[0].iter().zip(&s.field) {
            assert!(got.try_mul(&k).unwrap().equals(field));
        }
    }
}
