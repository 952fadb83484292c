//! Dense complex polynomials (ascending coefficients) and pencil determinants.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type Poly = Vec<Complex64>;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn add_into(acc: &mut Poly, p: &[Complex64], sign: f64) {
    if acc.len() < p.len() {
        acc.resize(p.len(), zero());
    }
    for (a, v) in acc.iter_mut().zip(p) {
        *a += v * sign;
    }
}

pub fn eval(p: &[Complex64], x: Complex64) -> Complex64 {
    p.iter().rev().fold(zero(), |acc, c| acc * x + c)
}

pub fn derivative(p: &[Complex64]) -> Poly {
    p.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

/// det(alpha B + A) as a polynomial in alpha, by Laplace expansion along the
/// first row. Intended for the small (n <= 4) blocks of a dispersion pencil.
pub fn pencil_determinant(a: &DMatrix<Complex64>, b: &DMatrix<f64>) -> Poly {
    let n = a.nrows();
    let entries: Vec<Vec<Poly>> = (0..n)
        .map(|i| (0..n).map(|j| vec![a[(i, j)], Complex64::new(b[(i, j)], 0.0)]).collect())
        .collect();
    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..n).collect();
    laplace(&entries, &rows, &cols)
}

fn laplace(e: &[Vec<Poly>], rows: &[usize], cols: &[usize]) -> Poly {
    if rows.len() == 1 {
        return e[rows[0]][cols[0]].clone();
    }
    let r = rows[0];
    let rest: Vec<usize> = rows[1..].to_vec();
    let mut acc: Poly = vec![zero()];
    for (pos, &c) in cols.iter().enumerate() {
        let entry = &e[r][c];
        if entry.iter().all(|v| *v == zero()) {
            continue;
        }
        let sub: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = laplace(e, &rest, &sub);
        let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
        add_into(&mut acc, &mul(entry, &minor), sign);
    }
    acc
}

/// Drops exactly-zero leading coefficients.
pub fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && *p.last().unwrap() == zero() {
        p.pop();
    }
    p
}

/// All roots of a polynomial of degree >= 1: companion-matrix eigenvalues
/// followed by Newton polishing.
pub fn roots(p: &[Complex64]) -> Vec<Complex64> {
    let p = trim(p.to_vec());
    let d = p.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = p[d];
    let raw: Vec<Complex64> = if d == 1 {
        vec![-p[0] / lead]
    } else if d == 2 {
        // numerically stable quadratic formula
        let (a, b, c) = (p[2], p[1], p[0]);
        let disc = (b * b - a * c * 4.0).sqrt();
        let q = if (b.conj() * disc).re >= 0.0 { -(b + disc) * 0.5 } else { -(b - disc) * 0.5 };
        if q == zero() {
            vec![zero(), zero()]
        } else {
            vec![q / a, c / q]
        }
    } else {
        let mut comp = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..d {
            comp[(0, j)] = -p[d - 1 - j] / lead;
        }
        for i in 1..d {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        comp.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
    };
    let dp = derivative(&p);
    raw.into_iter().map(|r| polish(&p, &dp, r)).collect()
}

fn polish(p: &[Complex64], dp: &[Complex64], mut x: Complex64) -> Complex64 {
    let mut fx = eval(p, x).norm();
    for _ in 0..8 {
        let d = eval(dp, x);
        if d == zero() {
            break;
        }
        let nx = x - eval(p, x) / d;
        let nf = eval(p, nx).norm();
        if !(nf < fx) {
            break;
        }
        x = nx;
        fx = nf;
    }
    x
}
