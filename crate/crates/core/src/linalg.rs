//! Exact dense linear algebra over `QuadExt`.

use crate::exact::QuadExt;
use crate::upoly::{roots, Root, UPoly};

pub type Mat = Vec<Vec<QuadExt>>;

pub fn identity(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| if i == j { QuadExt::one() } else { QuadExt::zero() }).collect()).collect()
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut s = QuadExt::zero();
                    for l in 0..k {
                        if !a[i][l].is_zero() && !b[l][j].is_zero() {
                            s = &s + &(&a[i][l] * &b[l][j]);
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &Mat, v: &[QuadExt]) -> Vec<QuadExt> {
    a.iter()
        .map(|row| row.iter().zip(v).fold(QuadExt::zero(), |s, (x, y)| &s + &(x * y)))
        .collect()
}

/// Solution set of `A x = b`.
#[derive(Clone, Debug)]
pub struct LinearSolution {
    /// One solution, if the system is consistent.
    pub particular: Option<Vec<QuadExt>>,
    /// Basis of the null space of `A`.
    pub nullspace: Vec<Vec<QuadExt>>,
}

/// Gauss–Jordan elimination.
pub fn solve(a: &Mat, b: &[QuadExt]) -> LinearSolution {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    let mut aug: Vec<Vec<QuadExt>> = a.iter().zip(b).map(|(row, bi)| row.iter().cloned().chain(std::iter::once(bi.clone())).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m {
        let Some(p) = (r..n).find(|&i| !aug[i][c].is_zero()) else { continue };
        aug.swap(r, p);
        let inv = aug[r][c].inv().unwrap();
        for x in aug[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..n {
            if i != r && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                for j in 0..=m {
                    let t = &aug[r][j] * &f;
                    aug[i][j] = &aug[i][j] - &t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == n {
            break;
        }
    }
    let consistent = (r..n).all(|i| aug[i][m].is_zero());
    let particular = consistent.then(|| {
        let mut x = vec![QuadExt::zero(); m];
        for (i, &c) in pivots.iter().enumerate() {
            x[c] = aug[i][m].clone();
        }
        x
    });
    let free: Vec<usize> = (0..m).filter(|c| !pivots.contains(c)).collect();
    let nullspace = free
        .iter()
        .map(|&f| {
            let mut v = vec![QuadExt::zero(); m];
            v[f] = QuadExt::one();
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = -&aug[i][f];
            }
            v
        })
        .collect();
    LinearSolution { particular, nullspace }
}

pub fn det(a: &Mat) -> QuadExt {
    let n = a.len();
    let mut m = a.clone();
    let mut d = QuadExt::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return QuadExt::zero() };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d = &d * &m[c][c];
        let inv = m[c][c].inv().unwrap();
        for i in (c + 1)..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] * &inv;
            for j in c..n {
                let t = &m[c][j] * &f;
                m[i][j] = &m[i][j] - &t;
            }
        }
    }
    d
}

pub fn rank(a: &Mat) -> usize {
    if a.is_empty() {
        return 0;
    }
    let m = a[0].len();
    m - solve(a, &vec![QuadExt::zero(); a.len()]).nullspace.len()
}

/// `det(x I - A)` by the Faddeev–LeVerrier recursion.
pub fn char_poly(a: &Mat) -> UPoly {
    let n = a.len();
    let mut c = vec![QuadExt::zero(); n + 1];
    c[n] = QuadExt::one();
    let mut mk: Mat = vec![vec![QuadExt::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mat_mul(a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] = &row[i] + &c[n - k + 1];
        }
        mk = next;
        let am = mat_mul(a, &mk);
        let tr = (0..n).fold(QuadExt::zero(), |s, i| &s + &am[i][i]);
        c[n - k] = -&(&tr * &QuadExt::frac(1, k as i64));
    }
    UPoly::new(c)
}

/// Eigenvalues with algebraic multiplicities.
pub fn eigenvalues(a: &Mat) -> Vec<(Root, u32)> {
    roots(&char_poly(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn m(rows: &[&[i64]]) -> Mat {
        rows.iter().map(|r| r.iter().map(|&k| QuadExt::int(k)).collect()).collect()
    }

    #[test]
    fn example_block_eigenvalues() {
        // Linear part of the ex1 system in the chart (1/x, y/x, z/x) at its origin.
        let a = m(&[&[-1, 0, 0], &[0, -2, 1], &[0, -4, -4]]);
        let cp = char_poly(&a);
        // (x+1)(x^2+6x+12)
        assert_eq!(cp, UPoly::new([12, 18, 7, 1].iter().map(|&k| QuadExt::int(k)).collect()));
        let ev = eigenvalues(&a);
        let want = [QuadExt::int(-1), QuadExt::new(rat(-3, 1), rat(1, 1), -3), QuadExt::new(rat(-3, 1), rat(-1, 1), -3)];
        for w in want {
            assert!(ev.iter().any(|(r, _)| r.exact() == Some(&w)));
        }
    }

    #[test]
    fn solve_with_nullspace() {
        let a = m(&[&[1, 2], &[2, 4]]);
        let s = solve(&a, &[QuadExt::int(3), QuadExt::int(6)]);
        let p = s.particular.unwrap();
        assert_eq!(mat_vec(&a, &p), vec![QuadExt::int(3), QuadExt::int(6)]);
        assert_eq!(s.nullspace.len(), 1);
        assert!(solve(&a, &[QuadExt::int(1), QuadExt::int(1)]).particular.is_none());
    }

    #[test]
    fn determinant_and_rank() {
        let a = m(&[&[2, 0, 1], &[1, 3, 0], &[0, 1, 1]]);
        assert_eq!(det(&a), QuadExt::int(7));
        assert_eq!(rank(&m(&[&[1, 2], &[2, 4]])), 1);
        // det equals the constant term of the characteristic polynomial up to sign.
        assert_eq!(char_poly(&a).coeffs()[0], -det(&a));
    }
}
