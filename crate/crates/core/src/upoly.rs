//! Univariate polynomials over `QuadExt`: Euclidean arithmetic, square-free
//! decomposition, numeric roots (Aberth–Ehrlich) and exact root lifting into
//! Q or Q(sqrt d) with verification by exact division.

use std::fmt;

use num_traits::Zero;

use crate::exact::{embed_numeric, rat_to_f64, recognize_rational, sqrt_rational, CScalar, QuadExt, Rational};

/// Coefficients in ascending degree, with no trailing zeros.
#[derive(Clone, PartialEq, Eq)]
pub struct UPoly {
    c: Vec<QuadExt>,
}

impl UPoly {
    pub fn new(mut c: Vec<QuadExt>) -> Self {
        while c.last().map(|x| x.is_zero()).unwrap_or(false) {
            c.pop();
        }
        UPoly { c }
    }

    pub fn zero() -> Self {
        UPoly { c: Vec::new() }
    }

    pub fn constant(x: QuadExt) -> Self {
        Self::new(vec![x])
    }

    /// `x - r`.
    pub fn linear_root(r: &QuadExt) -> Self {
        Self::new(vec![-r, QuadExt::one()])
    }

    pub fn x() -> Self {
        Self::new(vec![QuadExt::zero(), QuadExt::one()])
    }

    pub fn coeffs(&self) -> &[QuadExt] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; the zero polynomial has degree -1.
    pub fn degree(&self) -> isize {
        self.c.len() as isize - 1
    }

    pub fn lead(&self) -> QuadExt {
        self.c.last().cloned().unwrap_or_else(QuadExt::zero)
    }

    pub fn radicand(&self) -> Option<i64> {
        let mut d = 0;
        for x in &self.c {
            if x.d() != 0 {
                if d != 0 && d != x.d() {
                    return None;
                }
                d = x.d();
            }
        }
        Some(d)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let z = QuadExt::zero();
        Self::new((0..n).map(|i| self.c.get(i).unwrap_or(&z) + o.c.get(i).unwrap_or(&z)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        UPoly { c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut out = vec![QuadExt::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, k: &QuadExt) -> Self {
        Self::new(self.c.iter().map(|x| x * k).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(QuadExt::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.lead().inv().expect("nonzero lead");
        self.scale(&inv)
    }

    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut r = self.c.clone();
        let dd = d.c.len() - 1;
        if r.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let inv = d.lead().inv().unwrap();
        let mut q = vec![QuadExt::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let coef = &r[k + dd] * &inv;
            if !coef.is_zero() {
                for (j, dc) in d.c.iter().enumerate() {
                    r[k + j] = &r[k + j] - &(&coef * dc);
                }
            }
            q[k] = coef;
        }
        r.truncate(dd);
        (Self::new(q), Self::new(r))
    }

    pub fn exact_div(&self, d: &Self) -> Option<Self> {
        let (q, r) = self.divrem(d);
        if r.is_zero() {
            Some(q)
        } else {
            None
        }
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.c.iter().enumerate().skip(1).map(|(i, x)| x * &QuadExt::int(i as i64)).collect())
    }

    pub fn conj(&self) -> Self {
        UPoly { c: self.c.iter().map(|x| x.conj()).collect() }
    }

    pub fn eval(&self, x: &QuadExt) -> QuadExt {
        let mut acc = QuadExt::zero();
        for c in self.c.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn eval_c(&self, x: CScalar) -> CScalar {
        let mut acc = CScalar::new(0.0, 0.0);
        for c in self.c.iter().rev() {
            acc = acc * x + embed_numeric(c);
        }
        acc
    }

    /// Yun's square-free decomposition: `(factor, multiplicity)` with monic factors.
    pub fn square_free(&self) -> Vec<(UPoly, u32)> {
        let mut out = Vec::new();
        if self.degree() < 1 {
            return out;
        }
        let f = self.monic();
        let df = f.derivative();
        let mut a = f.gcd(&df);
        let mut b = f.exact_div(&a).unwrap();
        let mut c = df.exact_div(&a).unwrap_or_else(|| df.divrem(&a).0);
        let mut d = c.sub(&b.derivative());
        let mut i = 1;
        loop {
            if b.degree() < 1 {
                break;
            }
            a = b.gcd(&d);
            if a.degree() >= 1 {
                out.push((a.clone(), i));
            }
            b = b.exact_div(&a).unwrap();
            c = d.exact_div(&a).unwrap();
            d = c.sub(&b.derivative());
            i += 1;
        }
        out
    }

    /// Numeric roots by Aberth–Ehrlich iteration followed by Newton polishing.
    pub fn numeric_roots(&self) -> Vec<CScalar> {
        let n = self.degree();
        if n < 1 {
            return Vec::new();
        }
        let n = n as usize;
        let coef: Vec<CScalar> = self.c.iter().map(embed_numeric).collect();
        let lead = coef[n];
        let a: Vec<CScalar> = coef.iter().map(|x| x / lead).collect();
        if n == 1 {
            return vec![-a[0]];
        }
        let radius = 1.0 + a[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
        let eval = |z: CScalar| -> (CScalar, CScalar) {
            let mut p = CScalar::new(1.0, 0.0);
            let mut dp = CScalar::new(0.0, 0.0);
            for k in (0..n).rev() {
                dp = dp * z + p;
                p = p * z + a[k];
            }
            (p, dp)
        };
        let mut z: Vec<CScalar> = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
                CScalar::from_polar(radius * 0.5, th)
            })
            .collect();
        for _ in 0..2000 {
            let mut moved = 0.0f64;
            for i in 0..n {
                let (p, dp) = eval(z[i]);
                if p.norm() == 0.0 {
                    continue;
                }
                let ratio = p / dp;
                let mut s = CScalar::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        s += 1.0 / (z[i] - z[j]);
                    }
                }
                let w = ratio / (1.0 - ratio * s);
                if w.is_finite() {
                    z[i] -= w;
                    moved = moved.max(w.norm() / (1.0 + z[i].norm()));
                }
            }
            if moved < 1e-16 {
                break;
            }
        }
        for zi in z.iter_mut() {
            for _ in 0..3 {
                let (p, dp) = eval(*zi);
                if dp.norm() > 0.0 {
                    let step = p / dp;
                    if step.is_finite() {
                        *zi -= step;
                    }
                }
            }
        }
        z
    }
}

impl fmt::Debug for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.c.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| format!("({x})x^{i}")).collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Root::Exact(q) => write!(f, "{q}"),
            Root::Numeric(z) => write!(f, "{:.6}{:+.6}i", z.re, z.im),
        }
    }
}

/// A root, exact when it could be lifted and verified.
#[derive(Clone, Debug, PartialEq)]
pub enum Root {
    Exact(QuadExt),
    Numeric(CScalar),
}

impl Root {
    pub fn to_complex(&self) -> CScalar {
        match self {
            Root::Exact(q) => embed_numeric(q),
            Root::Numeric(z) => *z,
        }
    }

    pub fn exact(&self) -> Option<&QuadExt> {
        match self {
            Root::Exact(q) => Some(q),
            Root::Numeric(_) => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Root::Exact(q) => serde_json::json!(q),
            Root::Numeric(z) => crate::exact::cscalar_json(*z),
        }
    }
}

const RECOGNIZE_TOLS: [f64; 4] = [1e-11, 1e-9, 1e-7, 1e-5];
const MAX_DEN: u64 = 1_000_000_000;

fn candidates_rational(z: f64) -> Vec<Rational> {
    let mut out: Vec<Rational> = Vec::new();
    for tol in RECOGNIZE_TOLS {
        if let Some(q) = recognize_rational(CScalar::new(z, 0.0), MAX_DEN, tol * (1.0 + z.abs())) {
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    out
}

/// Element of Q(sqrt d) near `z`, whose Galois conjugate is near `zc`.
fn candidates_quad(z: CScalar, zc: CScalar, d: i64) -> Vec<QuadExt> {
    let sd = if d < 0 { CScalar::new(0.0, ((-d) as f64).sqrt()) } else { CScalar::new((d as f64).sqrt(), 0.0) };
    let a = (z + zc) / 2.0;
    let b = (z - zc) / (2.0 * sd);
    let tol_im = 1e-6 * (1.0 + z.norm());
    if a.im.abs() > tol_im || b.im.abs() > tol_im {
        return Vec::new();
    }
    let mut out = Vec::new();
    for qa in candidates_rational(a.re) {
        for qb in candidates_rational(b.re) {
            let c = QuadExt::new(qa.clone(), qb, d);
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    out
}

/// Roots of a polynomial with multiplicities, lifted to exact values where possible.
///
/// Every exact root is certified by exact division.  Roots that cannot be
/// expressed in Q or a single Q(sqrt e) are returned numerically.
pub fn roots(f: &UPoly) -> Vec<(Root, u32)> {
    let mut out = Vec::new();
    for (g, m) in f.square_free() {
        for r in roots_square_free(&g) {
            out.push((r, m));
        }
    }
    out
}

/// Roots of a square-free polynomial.
pub fn roots_square_free(f: &UPoly) -> Vec<Root> {
    let mut rest = f.monic();
    let mut exact: Vec<QuadExt> = Vec::new();
    if rest.degree() < 1 {
        return Vec::new();
    }
    let d = rest.radicand();
    let take = |rest: &mut UPoly, exact: &mut Vec<QuadExt>, r: QuadExt| -> bool {
        if rest.eval(&r).is_zero() {
            *rest = rest.exact_div(&UPoly::linear_root(&r)).unwrap();
            exact.push(r);
            true
        } else {
            false
        }
    };
    // Pass 1: roots in the coefficient field.
    let nums = rest.numeric_roots();
    match d {
        Some(0) => {
            for z in &nums {
                if z.im.abs() > 1e-6 * (1.0 + z.norm()) {
                    continue;
                }
                for q in candidates_rational(z.re) {
                    if take(&mut rest, &mut exact, QuadExt::from_rational(q)) {
                        break;
                    }
                }
            }
        }
        Some(dd) => {
            let conj_roots = rest.conj().numeric_roots();
            for z in &nums {
                'partner: for zc in conj_roots.iter().chain(std::iter::once(z)) {
                    for c in candidates_quad(*z, *zc, dd) {
                        if take(&mut rest, &mut exact, c) {
                            break 'partner;
                        }
                    }
                }
            }
        }
        None => {}
    }
    // Pass 2: quadratic factors x^2 - s x + p with s, p in the coefficient field.
    if rest.degree() >= 2 {
        let nums = rest.numeric_roots();
        let mut used = vec![false; nums.len()];
        for i in 0..nums.len() {
            for j in (i + 1)..nums.len() {
                if used[i] || used[j] || rest.degree() < 2 {
                    continue;
                }
                let s = nums[i] + nums[j];
                let p = nums[i] * nums[j];
                let pairs: Vec<(QuadExt, QuadExt)> = match d {
                    Some(0) => {
                        let tol = 1e-6 * (1.0 + s.norm() + p.norm());
                        if s.im.abs() > tol || p.im.abs() > tol {
                            continue;
                        }
                        let mut v = Vec::new();
                        for qs in candidates_rational(s.re) {
                            for qp in candidates_rational(p.re) {
                                v.push((QuadExt::from_rational(qs.clone()), QuadExt::from_rational(qp)));
                            }
                        }
                        v
                    }
                    Some(dd) if dd < 0 => {
                        let mut v = Vec::new();
                        for qs in candidates_quad(s, s.conj(), dd) {
                            for qp in candidates_quad(p, p.conj(), dd) {
                                v.push((qs.clone(), qp));
                            }
                        }
                        v
                    }
                    _ => Vec::new(),
                };
                for (qs, qp) in pairs {
                    let quad = UPoly::new(vec![qp.clone(), -&qs, QuadExt::one()]);
                    let Some(q) = rest.exact_div(&quad) else { continue };
                    let disc = &(&qs * &qs) - &(&qp * &QuadExt::int(4));
                    let sq = match disc.as_rational() {
                        Some(r) => sqrt_rational(r),
                        None => disc.sqrt(),
                    };
                    let Some(sq) = sq else { continue };
                    let half = QuadExt::frac(1, 2);
                    let (Ok(r1), Ok(r2)) = ((&qs + &sq).checked_mul(&half), (&qs - &sq).checked_mul(&half)) else { continue };
                    exact.push(r1);
                    exact.push(r2);
                    rest = q;
                    used[i] = true;
                    used[j] = true;
                    break;
                }
            }
        }
    }
    let mut out: Vec<Root> = exact.into_iter().map(Root::Exact).collect();
    out.extend(rest.numeric_roots().into_iter().map(Root::Numeric));
    out
}

/// Rational-valued numeric check helper for tests and reports.
pub fn approx_eq(a: CScalar, b: CScalar, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

/// Real part of a rational as float (re-export convenience for reports).
pub fn rational_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        0.0
    } else {
        rat_to_f64(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use proptest::prelude::*;

    fn up(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&k| QuadExt::int(k)).collect())
    }

    fn exact_set(rs: &[(Root, u32)]) -> Vec<(String, u32)> {
        let mut v: Vec<(String, u32)> =
            rs.iter().map(|(r, m)| (r.exact().map(|q| q.to_string()).unwrap_or_else(|| "numeric".into()), *m)).collect();
        v.sort();
        v
    }

    #[test]
    fn chazy_ix_residue_cubic() {
        // 9c^3 - 12c^2 + 2c + 1 = (c - 1)(9c^2 - 3c - 1)
        let f = up(&[1, 2, -12, 9]);
        let rs = roots(&f);
        let want = [QuadExt::one(), QuadExt::new(rat(1, 6), rat(1, 6), 5), QuadExt::new(rat(1, 6), rat(-1, 6), 5)];
        assert_eq!(rs.len(), 3);
        for w in want {
            assert!(rs.iter().any(|(r, m)| r.exact() == Some(&w) && *m == 1), "{w}");
        }
    }

    #[test]
    fn complex_quadratic_and_multiplicity() {
        // (x+1)^2 (x^2 + 6x + 12): roots -1 (double), -3 +- sqrt(-3)
        let f = up(&[1, 2, 1]).mul(&up(&[12, 6, 1]));
        let s = exact_set(&roots(&f));
        let mut want: Vec<(String, u32)> = vec![("-1".into(), 2), ("-3 + sqrt(-3)".into(), 1), ("-3 - sqrt(-3)".into(), 1)];
        want.sort();
        assert_eq!(s, want);
    }

    #[test]
    fn roots_over_sqrt5_field() {
        // (x - (1+sqrt5)/2)(x - 3) over Q(sqrt5)
        let r1 = QuadExt::new(rat(1, 2), rat(1, 2), 5);
        let f = UPoly::linear_root(&r1).mul(&UPoly::linear_root(&QuadExt::int(3)));
        let rs = roots(&f);
        assert!(rs.iter().any(|(r, _)| r.exact() == Some(&r1)));
        assert!(rs.iter().any(|(r, _)| r.exact() == Some(&QuadExt::int(3))));
    }

    #[test]
    fn irreducible_cubic_stays_numeric() {
        let rs = roots(&up(&[-2, 0, 0, 1]));
        assert_eq!(rs.len(), 3);
        assert!(rs.iter().all(|(r, _)| r.exact().is_none()));
        assert!(rs.iter().any(|(r, _)| approx_eq(r.to_complex(), CScalar::new(2f64.powf(1.0 / 3.0), 0.0), 1e-12)));
    }

    #[test]
    fn square_free_decomposition() {
        let f = up(&[-1, 1]).pow(3).mul(&up(&[2, 1]));
        let sf = f.square_free();
        assert_eq!(sf.len(), 2);
        assert_eq!(sf[0], (up(&[2, 1]), 1));
        assert_eq!(sf[1], (up(&[-1, 1]), 3));
    }

    proptest! {
        #[test]
        fn rational_roots_recovered(rs in proptest::collection::vec((-30i64..30, 1i64..12), 1..6)) {
            let mut f = UPoly::constant(QuadExt::one());
            for (n, d) in &rs {
                f = f.mul(&UPoly::linear_root(&QuadExt::from(rat(*n, *d))));
            }
            let got = roots(&f);
            let total: u32 = got.iter().map(|(_, m)| *m).sum();
            prop_assert_eq!(total as usize, rs.len());
            for (n, d) in &rs {
                let q = QuadExt::from(rat(*n, *d));
                prop_assert!(got.iter().any(|(r, _)| r.exact() == Some(&q)));
            }
        }
    }
}
