//! Zero sets of small polynomial systems: exact elimination over Q(sqrt d)
//! with a flagged numeric Newton fallback, plus resultants and local
//! intersection multiplicities.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exact::{embed_numeric, CScalar, QuadExt};
use crate::mpoly::{divides_exactly, MPoly};
use crate::upoly::{roots, Root, UPoly};

/// One coordinate of a solution.
#[derive(Clone, Debug, PartialEq)]
pub enum Coord {
    Exact(QuadExt),
    Numeric(CScalar),
    /// Unconstrained: the point lies on a locus parameterized by this coordinate.
    Free,
}

impl std::fmt::Display for Coord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coord::Exact(q) => write!(f, "{q}"),
            Coord::Numeric(z) => write!(f, "{:.6}{:+.6}i", z.re, z.im),
            Coord::Free => write!(f, "free"),
        }
    }
}

impl Coord {
    pub fn to_complex(&self) -> Option<CScalar> {
        match self {
            Coord::Exact(q) => Some(embed_numeric(q)),
            Coord::Numeric(z) => Some(*z),
            Coord::Free => None,
        }
    }

    pub fn exact(&self) -> Option<&QuadExt> {
        match self {
            Coord::Exact(q) => Some(q),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Half-width of the real seed box.
    pub box_half: f64,
    /// Seeds per axis.
    pub grid: usize,
    pub newton_tol: f64,
    pub dedup_radius: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { box_half: 5.0, grid: 7, newton_tol: 1e-12, dedup_radius: 1e-6, seed: 0 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveReport {
    /// Points, coordinates in the order of the requested unknowns.
    pub points: Vec<Vec<Coord>>,
    /// Set when some branch could not be solved exactly.
    pub fallback_used: bool,
}

/// Solve `eqs = 0` for `unknowns`; every other variable must be absent.
pub fn solve_system(eqs: &[MPoly], unknowns: &[usize], opts: &SolveOptions) -> SolveReport {
    let mut fallback = false;
    let pts = solve_rec(eqs.to_vec(), unknowns.to_vec(), opts, &mut fallback, 0);
    SolveReport { points: dedup(pts, opts.dedup_radius), fallback_used: fallback }
}

fn dedup(pts: Vec<Vec<Coord>>, radius: f64) -> Vec<Vec<Coord>> {
    let mut out: Vec<Vec<Coord>> = Vec::new();
    for p in pts {
        let dup = out.iter().any(|q| {
            q.iter().zip(&p).all(|(a, b)| match (a, b) {
                (Coord::Exact(x), Coord::Exact(y)) => x == y,
                (Coord::Free, Coord::Free) => true,
                (Coord::Free, _) | (_, Coord::Free) => false,
                _ => (a.to_complex().unwrap() - b.to_complex().unwrap()).norm() <= radius,
            })
        });
        if !dup {
            out.push(p);
        }
    }
    out
}

fn normalize_eqs(eqs: Vec<MPoly>) -> Option<Vec<MPoly>> {
    let mut out: Vec<MPoly> = Vec::new();
    for e in eqs {
        if e.is_zero() {
            continue;
        }
        if e.is_constant() {
            return None;
        }
        let lc = e.leading().unwrap().1.clone();
        let e = e.scale(&lc.inv().unwrap());
        if !out.contains(&e) {
            out.push(e);
        }
    }
    Some(out)
}

fn insert_at(sol: &[Coord], pos: usize, c: Coord) -> Vec<Coord> {
    let mut v = sol.to_vec();
    v.insert(pos, c);
    v
}

fn bind(eqs: &[MPoly], v: usize, val: &QuadExt) -> Vec<MPoly> {
    eqs.iter().map(|e| e.eval_partial(&[(v, val.clone())])).collect()
}

/// Evaluate `p` (in the unknowns) at a solution; `None` if a needed coordinate is free.
fn eval_at(p: &MPoly, unknowns: &[usize], sol: &[Coord]) -> Option<Coord> {
    let n = p.vars().len();
    if sol.iter().all(|c| matches!(c, Coord::Exact(_) | Coord::Free)) {
        let mut vals = Vec::new();
        for (k, &u) in unknowns.iter().enumerate() {
            match &sol[k] {
                Coord::Exact(q) => vals.push((u, q.clone())),
                Coord::Free if p.occurs(u) => return None,
                _ => {}
            }
        }
        let r = p.eval_partial(&vals);
        return r.as_constant().map(Coord::Exact);
    }
    let mut pt = vec![CScalar::new(0.0, 0.0); n];
    for (k, &u) in unknowns.iter().enumerate() {
        match sol[k].to_complex() {
            Some(z) => pt[u] = z,
            None if p.occurs(u) => return None,
            None => {}
        }
    }
    Some(Coord::Numeric(p.eval_c(&pt)))
}

fn is_nonzero(c: &Coord) -> bool {
    match c {
        Coord::Exact(q) => !q.is_zero(),
        Coord::Numeric(z) => z.norm() > 1e-9,
        Coord::Free => true,
    }
}

fn coord_div(a: &Coord, b: &Coord) -> Coord {
    match (a, b) {
        (Coord::Exact(x), Coord::Exact(y)) => Coord::Exact(x.checked_div(y).unwrap()),
        _ => Coord::Numeric(a.to_complex().unwrap() / b.to_complex().unwrap()),
    }
}

fn solve_rec(eqs: Vec<MPoly>, unk: Vec<usize>, opts: &SolveOptions, fallback: &mut bool, depth: usize) -> Vec<Vec<Coord>> {
    let Some(eqs) = normalize_eqs(eqs) else { return Vec::new() };
    if unk.is_empty() {
        return vec![Vec::new()];
    }
    if eqs.is_empty() {
        return vec![vec![Coord::Free; unk.len()]];
    }
    if depth > 24 {
        *fallback = true;
        return numeric_solve(&eqs, &unk, opts);
    }
    // Split off monomial factors.
    for (i, e) in eqs.iter().enumerate() {
        let content = e.monomial_content();
        if let Some(pos) = unk.iter().position(|&u| content[u] > 0) {
            let v = unk[pos];
            let mut out = Vec::new();
            let rest_unk: Vec<usize> = unk.iter().copied().filter(|&u| u != v).collect();
            for s in solve_rec(bind(&eqs, v, &QuadExt::zero()), rest_unk, opts, fallback, depth + 1) {
                out.push(insert_at(&s, pos, Coord::Exact(QuadExt::zero())));
            }
            let mut e2 = eqs.clone();
            e2[i] = e.div_monomial(&content);
            out.extend(solve_rec(e2, unk.clone(), opts, fallback, depth + 1));
            return out;
        }
    }
    // Linear with a constant coefficient.
    for (i, e) in eqs.iter().enumerate() {
        for (pos, &v) in unk.iter().enumerate() {
            if e.degree_in(v) != 1 {
                continue;
            }
            let cs = e.coeffs_in(v);
            let Some(c) = cs[1].as_constant() else { continue };
            let r = cs[0].clone();
            let expr = r.scale(&(-c.inv().unwrap()));
            let rest: Vec<MPoly> = eqs
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, g)| g.subst_poly(&[(v, expr.clone())]).expect("substitution"))
                .collect();
            let rest_unk: Vec<usize> = unk.iter().copied().filter(|&u| u != v).collect();
            let mut out = Vec::new();
            for s in solve_rec(rest, rest_unk.clone(), opts, fallback, depth + 1) {
                let val = eval_at(&expr, &rest_unk, &s).unwrap_or(Coord::Free);
                out.push(insert_at(&s, pos, val));
            }
            return out;
        }
    }
    // A univariate equation.
    for e in &eqs {
        let occ: Vec<usize> = unk.iter().copied().filter(|&u| e.occurs(u)).collect();
        if occ.len() != 1 {
            continue;
        }
        let v = occ[0];
        let pos = unk.iter().position(|&u| u == v).unwrap();
        let up = UPoly::new(e.coeffs_in(v).iter().map(|c| c.as_constant().unwrap()).collect());
        let rs = roots(&up);
        if rs.iter().any(|(r, _)| r.exact().is_none()) {
            *fallback = true;
            return numeric_solve(&eqs, &unk, opts);
        }
        let rest_unk: Vec<usize> = unk.iter().copied().filter(|&u| u != v).collect();
        let mut out = Vec::new();
        for (r, _) in rs {
            let Root::Exact(q) = r else { unreachable!() };
            for s in solve_rec(bind(&eqs, v, &q), rest_unk.clone(), opts, fallback, depth + 1) {
                out.push(insert_at(&s, pos, Coord::Exact(q.clone())));
            }
        }
        return out;
    }
    // Linear with a polynomial coefficient: split on whether it vanishes.
    for (i, e) in eqs.iter().enumerate() {
        for (pos, &v) in unk.iter().enumerate() {
            if e.degree_in(v) != 1 {
                continue;
            }
            let cs = e.coeffs_in(v);
            let (b, a) = (cs[0].clone(), cs[1].clone());
            let mut out = Vec::new();
            // Branch a = b = 0.
            let mut e_a: Vec<MPoly> = eqs.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, g)| g.clone()).collect();
            e_a.push(a.clone());
            e_a.push(b.clone());
            out.extend(solve_rec(e_a, unk.clone(), opts, fallback, depth + 1));
            // Branch v = -b/a with a != 0.
            let rest_unk: Vec<usize> = unk.iter().copied().filter(|&u| u != v).collect();
            let mut cleared = Vec::new();
            for (k, g) in eqs.iter().enumerate() {
                if k == i {
                    continue;
                }
                let gc = g.coeffs_in(v);
                let deg = gc.len() - 1;
                let mut acc = MPoly::zero(g.vars());
                for (j, cj) in gc.iter().enumerate() {
                    let t = &(cj * &(-&b).pow(j as u32)) * &a.pow((deg - j) as u32);
                    acc = &acc + &t;
                }
                cleared.push(acc);
            }
            for s in solve_rec(cleared, rest_unk.clone(), opts, fallback, depth + 1) {
                let (Some(av), Some(bv)) = (eval_at(&a, &rest_unk, &s), eval_at(&b, &rest_unk, &s)) else {
                    out.push(insert_at(&s, pos, Coord::Free));
                    continue;
                };
                if !is_nonzero(&av) {
                    continue;
                }
                let val = match coord_div(&bv, &av) {
                    Coord::Exact(q) => Coord::Exact(-q),
                    Coord::Numeric(z) => Coord::Numeric(-z),
                    Coord::Free => Coord::Free,
                };
                out.push(insert_at(&s, pos, val));
            }
            return out;
        }
    }
    // Resultant elimination of one unknown.
    let (v, fi) = {
        let mut best: Option<(u32, usize, usize)> = None;
        for &u in &unk {
            for (i, e) in eqs.iter().enumerate() {
                let d = e.degree_in(u);
                if d > 0 && best.map(|b| d < b.0).unwrap_or(true) {
                    best = Some((d, u, i));
                }
            }
        }
        let b = best.expect("nonconstant equation");
        (b.1, b.2)
    };
    let pos = unk.iter().position(|&u| u == v).unwrap();
    let f = eqs[fi].clone();
    let mut reduced = Vec::new();
    let mut with_v = vec![f.clone()];
    for (k, g) in eqs.iter().enumerate() {
        if k == fi {
            continue;
        }
        if g.occurs(v) {
            let r = resultant(&f, g, v);
            if r.is_zero() {
                *fallback = true;
                return numeric_solve(&eqs, &unk, opts);
            }
            reduced.push(r);
            with_v.push(g.clone());
        } else {
            reduced.push(g.clone());
        }
    }
    if reduced.is_empty() {
        // A single equation in several unknowns: a locus.
        *fallback = true;
        return numeric_solve(&eqs, &unk, opts);
    }
    let rest_unk: Vec<usize> = unk.iter().copied().filter(|&u| u != v).collect();
    let mut out = Vec::new();
    for s in solve_rec(reduced, rest_unk.clone(), opts, fallback, depth + 1) {
        if s.iter().any(|c| !matches!(c, Coord::Exact(_))) {
            *fallback = true;
            let seeds = numeric_solve(&eqs, &unk, opts);
            out.extend(seeds);
            continue;
        }
        let vals: Vec<(usize, QuadExt)> = rest_unk.iter().zip(&s).map(|(&u, c)| (u, c.exact().unwrap().clone())).collect();
        let mut g = UPoly::zero();
        for e in &with_v {
            let ev = e.eval_partial(&vals);
            let up = UPoly::new(ev.coeffs_in(v).iter().map(|c| c.as_constant().unwrap()).collect());
            g = if g.is_zero() { up } else { g.gcd(&up) };
        }
        if g.is_zero() {
            out.push(insert_at(&s, pos, Coord::Free));
            continue;
        }
        for (r, _) in roots(&g) {
            match r {
                Root::Exact(q) => out.push(insert_at(&s, pos, Coord::Exact(q))),
                Root::Numeric(z) => {
                    *fallback = true;
                    out.push(insert_at(&s, pos, Coord::Numeric(z)));
                }
            }
        }
    }
    out
}

/// Resultant of `f` and `g` with respect to variable `v` (Sylvester matrix, Bareiss elimination).
pub fn resultant(f: &MPoly, g: &MPoly, v: usize) -> MPoly {
    let a = f.coeffs_in(v);
    let b = g.coeffs_in(v);
    let (m, n) = (a.len() - 1, b.len() - 1);
    let vars = f.vars().clone();
    if m == 0 {
        return a[0].pow(n as u32);
    }
    if n == 0 {
        return b[0].pow(m as u32);
    }
    let size = m + n;
    let zero = MPoly::zero(&vars);
    let mut s: Vec<Vec<MPoly>> = vec![vec![zero.clone(); size]; size];
    for i in 0..n {
        for (j, c) in a.iter().rev().enumerate() {
            s[i][i + j] = c.clone();
        }
    }
    for i in 0..m {
        for (j, c) in b.iter().rev().enumerate() {
            s[n + i][i + j] = c.clone();
        }
    }
    bareiss_det(s)
}

/// Fraction-free determinant of a matrix of polynomials.
pub fn bareiss_det(mut m: Vec<Vec<MPoly>>) -> MPoly {
    let n = m.len();
    let vars = m[0][0].vars().clone();
    let mut sign = false;
    let mut prev = MPoly::one(&vars);
    for k in 0..n.saturating_sub(1) {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(p) => {
                    m.swap(k, p);
                    sign = !sign;
                }
                None => return MPoly::zero(&vars),
            }
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let num = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = divides_exactly(&prev, &num).expect("Bareiss division is exact");
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign {
        -d
    } else {
        d
    }
}

/// Local intersection multiplicity of `f = g = 0` at an exact point, for two unknowns.
///
/// The point is moved to the origin, a shear makes the projection generic, and
/// the multiplicity is the vanishing order of the resultant.  The minimum over
/// a few shears is returned.
pub fn intersection_multiplicity(f: &MPoly, g: &MPoly, x: usize, y: usize, point: (&QuadExt, &QuadExt)) -> u32 {
    let vars = f.vars().clone();
    let shift = |p: &MPoly| {
        p.subst_poly(&[
            (x, &MPoly::var(&vars, x) + &MPoly::constant(&vars, point.0.clone())),
            (y, &MPoly::var(&vars, y) + &MPoly::constant(&vars, point.1.clone())),
        ])
        .unwrap()
    };
    let (f0, g0) = (shift(f), shift(g));
    let mut best = u32::MAX;
    for lam in [QuadExt::frac(3, 7), QuadExt::frac(-5, 11), QuadExt::frac(13, 2)] {
        let shear = &MPoly::var(&vars, x) + &MPoly::var(&vars, y).scale(&lam);
        let fs = f0.subst_poly(&[(x, shear.clone())]).unwrap();
        let gs = g0.subst_poly(&[(x, shear)]).unwrap();
        let r = resultant(&fs, &gs, y);
        if r.is_zero() {
            continue;
        }
        let cs = r.coeffs_in(x);
        let ord = cs.iter().position(|c| !c.is_zero()).unwrap_or(0) as u32;
        best = best.min(ord);
    }
    best
}

/// Newton/Gauss–Newton from a seed grid, with real and imaginary probes.
pub fn numeric_solve(eqs: &[MPoly], unk: &[usize], opts: &SolveOptions) -> Vec<Vec<Coord>> {
    let n = unk.len();
    let m = eqs.len();
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let nv = eqs[0].vars().len();
    let jac: Vec<Vec<MPoly>> = eqs.iter().map(|e| unk.iter().map(|&u| e.partial(u)).collect()).collect();
    let embed = |z: &[CScalar]| {
        let mut pt = vec![CScalar::new(0.0, 0.0); nv];
        for (k, &u) in unk.iter().enumerate() {
            pt[u] = z[k];
        }
        pt
    };
    let scale: f64 = eqs.iter().flat_map(|e| e.terms().map(|(_, c)| embed_numeric(c).norm())).fold(1.0, f64::max);
    let mut seeds: Vec<Vec<CScalar>> = Vec::new();
    let g = opts.grid.max(2);
    let axis: Vec<f64> = (0..g).map(|k| -opts.box_half + 2.0 * opts.box_half * k as f64 / (g - 1) as f64).collect();
    let total = g.pow(n as u32);
    for idx in 0..total {
        let mut z = Vec::with_capacity(n);
        let mut r = idx;
        for _ in 0..n {
            z.push(CScalar::new(axis[r % g] + 0.0137, 0.0));
            r /= g;
        }
        seeds.push(z);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..total.max(256) {
        let z: Vec<CScalar> = (0..n)
            .map(|_| CScalar::new(rng.gen_range(-opts.box_half..opts.box_half), rng.gen_range(-opts.box_half..opts.box_half)))
            .collect();
        seeds.push(z);
    }
    let mut found: Vec<Vec<CScalar>> = Vec::new();
    for mut z in seeds {
        let mut ok = false;
        for _ in 0..80 {
            let pt = embed(&z);
            let fval = DVector::from_iterator(m, eqs.iter().map(|e| e.eval_c(&pt)));
            let res = fval.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if res <= opts.newton_tol * scale {
                ok = true;
                break;
            }
            let jm = DMatrix::from_fn(m, n, |i, j| jac[i][j].eval_c(&pt));
            let step = if m == n {
                jm.clone().lu().solve(&fval)
            } else {
                let jh = jm.adjoint();
                (&jh * &jm).lu().solve(&(&jh * &fval))
            };
            let Some(step) = step else { break };
            if !step.iter().all(|c| c.is_finite()) {
                break;
            }
            for k in 0..n {
                z[k] -= step[k];
            }
            if z.iter().any(|c| c.norm() > 1e8) {
                break;
            }
        }
        if !ok {
            let pt = embed(&z);
            let res = eqs.iter().map(|e| e.eval_c(&pt).norm()).fold(0.0, f64::max);
            ok = res <= 1e-9 * scale;
        }
        if ok && !found.iter().any(|q| q.iter().zip(&z).all(|(a, b)| (a - b).norm() <= opts.dedup_radius)) {
            found.push(z);
        }
    }
    found
        .into_iter()
        .map(|z| {
            // Lift to exact rationals when the lift satisfies every equation exactly.
            let lifted: Option<Vec<QuadExt>> = z
                .iter()
                .map(|c| crate::exact::recognize_rational(*c, 10_000, 1e-8).map(QuadExt::from))
                .collect();
            if let Some(l) = lifted {
                let vals: Vec<(usize, QuadExt)> = unk.iter().copied().zip(l.iter().cloned()).collect();
                if eqs.iter().all(|e| e.eval_partial(&vals).is_zero()) {
                    return l.into_iter().map(Coord::Exact).collect();
                }
            }
            z.into_iter().map(Coord::Numeric).collect()
        })
        .collect()
}

/// True when `value` vanishes: exactly, or numerically within `tol`.
pub fn coord_is_zero(c: &Coord, tol: f64) -> bool {
    match c {
        Coord::Exact(q) => q.is_zero(),
        Coord::Numeric(z) => z.norm() <= tol,
        Coord::Free => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::{parse_poly, VarTable};

    fn exact_points(r: &SolveReport) -> Vec<Vec<String>> {
        let mut v: Vec<Vec<String>> = r
            .points
            .iter()
            .map(|p| p.iter().map(|c| c.exact().map(|q| q.to_string()).unwrap_or_else(|| format!("{c:?}"))).collect())
            .collect();
        v.sort();
        v
    }

    #[test]
    fn boundary_system_of_system_one() {
        // Transverse numerators of system (1) on the boundary of the first chart.
        let v = VarTable::new(&["Y", "Z"]);
        let f = parse_poly(&v, "(Y-1)*(2*Y-Z)").unwrap();
        let g = parse_poly(&v, "Z^2+7*Z-20*Y+Y*Z").unwrap();
        let r = solve_system(&[f.clone(), g.clone()], &[0, 1], &SolveOptions::default());
        assert!(!r.fallback_used);
        assert_eq!(exact_points(&r), vec![vec!["0", "0"], vec!["1", "-10"], vec!["1", "2"]]);
        let m = |y: i64, z: i64| intersection_multiplicity(&f, &g, 0, 1, (&QuadExt::int(y), &QuadExt::int(z)));
        assert_eq!((m(0, 0), m(1, 2), m(1, -10)), (1, 2, 1));
    }

    #[test]
    fn resultant_of_circle_and_line() {
        let v = VarTable::new(&["x", "y"]);
        let f = parse_poly(&v, "x^2+y^2-1").unwrap();
        let g = parse_poly(&v, "x-y").unwrap();
        let r = resultant(&f, &g, 0);
        assert_eq!(r, parse_poly(&v, "2*y^2-1").unwrap());
        let s = solve_system(&[f, g], &[0, 1], &SolveOptions::default());
        assert_eq!(s.points.len(), 2);
        assert!(s.points.iter().all(|p| p.iter().all(|c| c.exact().is_some())));
    }

    #[test]
    fn locus_and_empty() {
        let v = VarTable::new(&["x", "y"]);
        let r = solve_system(&[parse_poly(&v, "x").unwrap()], &[0, 1], &SolveOptions::default());
        assert_eq!(r.points, vec![vec![Coord::Exact(QuadExt::zero()), Coord::Free]]);
        let r = solve_system(&[parse_poly(&v, "x").unwrap(), parse_poly(&v, "x-1").unwrap()], &[0, 1], &SolveOptions::default());
        assert!(r.points.is_empty());
    }

    #[test]
    fn irreducible_cubic_falls_back() {
        let v = VarTable::new(&["x"]);
        let r = solve_system(&[parse_poly(&v, "x^3-2").unwrap()], &[0], &SolveOptions::default());
        assert!(r.fallback_used);
        assert_eq!(r.points.len(), 3);
    }
}
