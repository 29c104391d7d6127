//! Exact rational linear algebra: row reduction, kernels and
//! Fourier–Motzkin feasibility.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut [Vec<Q>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][c].recip();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for k in 0..cols {
                    let d = &f * &m[row][k];
                    m[r][k] -= d;
                }
            }
        }
        pivots.push(c);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    pivots
}

pub fn rank(m: &[Vec<Q>], cols: usize) -> usize {
    rref(&mut m.to_vec(), cols).len()
}

/// Basis of `{x : m x = 0}`, one vector per free column.
pub fn kernel(m: &[Vec<Q>], cols: usize) -> Vec<Vec<Q>> {
    let mut r = m.to_vec();
    let pivots = rref(&mut r, cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[i][f].clone();
            }
            v
        })
        .collect()
}

pub fn mat_vec(m: &[Vec<Q>], x: &[Q]) -> Vec<Q> {
    m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// One inequality `a . y >= b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Ineq {
    a: Vec<Q>,
    b: Q,
}

impl Ineq {
    /// Scale so the first nonzero coefficient has absolute value one.
    fn normalized(mut self) -> Self {
        if let Some(lead) = self.a.iter().find(|x| !x.is_zero()).map(|x| x.abs()) {
            for x in self.a.iter_mut() {
                *x /= &lead;
            }
            self.b /= &lead;
        }
        self
    }
}

/// A point `y` with `a . y >= b` for every row, found by Fourier–Motzkin
/// elimination and back substitution.
pub fn feasible_point(a: &[Vec<Q>], b: &[Q], vars: usize) -> Option<Vec<Q>> {
    let mut system: Vec<Ineq> =
        a.iter().zip(b).map(|(a, b)| Ineq { a: a.clone(), b: b.clone() }.normalized()).collect();
    system.sort();
    system.dedup();
    let mut stages: Vec<(usize, Vec<Ineq>)> = Vec::new();
    let mut remaining: Vec<usize> = (0..vars).collect();
    while !remaining.is_empty() {
        // eliminate the variable producing the fewest new rows
        let cost = |j: usize| {
            let pos = system.iter().filter(|r| r.a[j].is_positive()).count();
            let neg = system.iter().filter(|r| r.a[j].is_negative()).count();
            pos * neg
        };
        let (idx, &j) = remaining.iter().enumerate().min_by_key(|&(_, &j)| cost(j)).expect("nonempty");
        remaining.remove(idx);
        let (pos, rest): (Vec<_>, Vec<_>) = system.iter().cloned().partition(|r| r.a[j].is_positive());
        let (neg, zero): (Vec<_>, Vec<_>) = rest.into_iter().partition(|r| r.a[j].is_negative());
        let mut next = zero;
        for p in &pos {
            for n in &neg {
                let sp = -n.a[j].clone();
                let sn = p.a[j].clone();
                let a: Vec<Q> = p.a.iter().zip(&n.a).map(|(x, y)| x * &sp + y * &sn).collect();
                let b = &p.b * &sp + &n.b * &sn;
                next.push(Ineq { a, b }.normalized());
            }
        }
        next.sort();
        next.dedup();
        stages.push((j, std::mem::replace(&mut system, next)));
    }
    if system.iter().any(|r| r.b.is_positive()) {
        return None;
    }
    let mut y = vec![Q::zero(); vars];
    for (j, rows) in stages.iter().rev() {
        let mut lo: Option<Q> = None;
        let mut hi: Option<Q> = None;
        for r in rows {
            if r.a[*j].is_zero() {
                continue;
            }
            let others: Q = r.a.iter().zip(&y).enumerate().filter(|(k, _)| k != j).map(|(_, (x, v))| x * v).sum();
            let bound = (&r.b - others) / &r.a[*j];
            if r.a[*j].is_positive() {
                lo = Some(lo.map_or(bound.clone(), |l| l.max(bound)));
            } else {
                hi = Some(hi.map_or(bound.clone(), |h| h.min(bound)));
            }
        }
        y[*j] = match (lo, hi) {
            (Some(l), _) => l,
            (None, Some(h)) => h,
            (None, None) => Q::zero(),
        };
    }
    Some(y)
}
