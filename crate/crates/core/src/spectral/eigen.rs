//! Dense symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit-shift
//! QL iteration (the EISPACK `tred2`/`tql2` pair, restructured so that every
//! inner loop runs over contiguous memory). [`eigh_top`] shares the reduction
//! and the eigenvalue iteration, then recovers only the wanted eigenvectors by
//! inverse iteration on the tridiagonal matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_QL_ITERATIONS: usize = 60;
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
///
/// Column `k` of `vectors` is paired with `values[k]`; each column has its
/// entry of largest magnitude non-negative (first index on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

struct Reflector {
    start: usize,
    tau: f64,
    v: Vec<f64>,
}

struct Tridiagonal {
    diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`; `off[n - 1] = 0`.
    off: Vec<f64>,
    reflectors: Vec<Reflector>,
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Contract(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax();
    if !scale.is_finite() {
        return Err(Error::Contract("matrix has non-finite entries".into()));
    }
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Contract(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

fn tridiagonalize(m: &DMatrix<f64>) -> Tridiagonal {
    let n = m.nrows();
    // Symmetric, so the column-major buffer doubles as row-major.
    let mut a: Vec<f64> = m.as_slice().to_vec();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(1) {
        diag[k] = a[k * n + k];
        let start = k + 1;
        let len = n - start;
        let alpha = a[k * n + start];
        if len == 1 {
            off[k] = alpha;
            continue;
        }
        let xnorm = a[k * n + start + 1..(k + 1) * n]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if xnorm == 0.0 {
            off[k] = alpha;
            continue;
        }
        let beta = -alpha.signum() * alpha.hypot(xnorm);
        let tau = (beta - alpha) / beta;
        let scale = 1.0 / (alpha - beta);
        let mut v = Vec::with_capacity(len);
        v.push(1.0);
        v.extend(a[k * n + start + 1..(k + 1) * n].iter().map(|x| x * scale));
        off[k] = beta;

        // A22 <- H A22 H with H = I - tau v v^T, via the symmetric rank-2 update.
        let p = &mut p[..len];
        for (i, pi) in p.iter_mut().enumerate() {
            let row = &a[(start + i) * n + start..(start + i + 1) * n];
            *pi = tau * dot(row, &v);
        }
        let kappa = 0.5 * tau * dot(p, &v);
        for (pi, vi) in p.iter_mut().zip(&v) {
            *pi -= kappa * vi;
        }
        for i in 0..len {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[(start + i) * n + start..(start + i + 1) * n];
            for ((r, &vj), &wj) in row.iter_mut().zip(&v).zip(p.iter()) {
                *r -= vi * wj + wi * vj;
            }
        }
        reflectors.push(Reflector { start, tau, v });
    }
    if n > 0 {
        diag[n - 1] = a[(n - 1) * n + n - 1];
    }
    Tridiagonal { diag, off, reflectors }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Tridiagonal {
    /// `y <- Q y` where `Q^T A Q` is the tridiagonal matrix.
    fn back_transform(&self, y: &mut [f64]) {
        for r in self.reflectors.iter().rev() {
            let tail = &mut y[r.start..];
            let s = r.tau * dot(&r.v, tail);
            for (t, vi) in tail.iter_mut().zip(&r.v) {
                *t -= s * vi;
            }
        }
    }

    fn norm(&self) -> f64 {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                self.diag[i].abs() + self.off[i].abs() + left
            })
            .fold(0.0, f64::max)
    }
}

/// Implicit QL on `(d, e)`. When `rows` is given (row `i` = `i`-th column of
/// the accumulated transform, length `n` each), rotations are applied to it.
fn tql(d: &mut [f64], e: &mut [f64], mut rows: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    e[n - 1] = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > MAX_QL_ITERATIONS {
                    return Err(Error::Numerical(format!(
                        "QL iteration did not converge for eigenvalue {l} after {MAX_QL_ITERATIONS} sweeps"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = rows.as_deref_mut() {
                        let (head, tail) = z.split_at_mut((i + 1) * n);
                        let zi = &mut head[i * n..];
                        let zi1 = &mut tail[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hb = *b;
                            *b = s * *a + c * hb;
                            *a = c * *a - s * hb;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn apply_sign_convention(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

fn assemble(values: Vec<f64>, mut vectors: Vec<Vec<f64>>, n: usize) -> EigenDecomposition {
    for v in &mut vectors {
        apply_sign_convention(v);
    }
    let k = vectors.len();
    let mut flat = Vec::with_capacity(n * k);
    for v in &vectors {
        flat.extend_from_slice(v);
    }
    EigenDecomposition {
        values,
        vectors: DMatrix::from_vec(n, k, flat),
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn eigh_symmetric(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    check_symmetric(m)?;
    let n = m.nrows();
    let tri = tridiagonalize(m);
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();
    let mut rows = vec![0.0; n * n];
    for i in 0..n {
        rows[i * n + i] = 1.0;
    }
    tql(&mut d, &mut e, Some(&mut rows))?;
    let order = descending_order(&d);
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut y = rows[i * n..(i + 1) * n].to_vec();
            tri.back_transform(&mut y);
            y
        })
        .collect();
    Ok(assemble(values, vectors, n))
}

/// Eigenvalues only, descending.
pub fn eigvalsh(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let tri = tridiagonalize(m);
    let mut d = tri.diag;
    let mut e = tri.off;
    tql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// The `k` algebraically largest eigenpairs.
pub fn eigh_top(m: &DMatrix<f64>, k: usize) -> Result<EigenDecomposition> {
    check_symmetric(m)?;
    let n = m.nrows();
    if k > n {
        return Err(Error::Parameter(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix"
        )));
    }
    // Inverse iteration loses its edge once most of the spectrum is wanted.
    if 4 * k > n {
        let mut full = eigh_symmetric(m)?;
        full.values.truncate(k);
        full.vectors = full.vectors.columns(0, k).into_owned();
        return Ok(full);
    }
    let tri = tridiagonalize(m);
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();
    tql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| b.total_cmp(a));
    let values: Vec<f64> = d[..k].to_vec();

    let norm = tri.norm();
    let cluster_tol = 1e-3 * norm;
    let mut tri_vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &lambda) in values.iter().enumerate() {
        let cluster: Vec<usize> = (0..j).filter(|&i| (values[i] - lambda).abs() <= cluster_tol).collect();
        let v = inverse_iteration(&tri, lambda, norm, &cluster, &tri_vectors, j)?;
        tri_vectors.push(v);
    }
    let vectors = tri_vectors
        .into_iter()
        .map(|mut y| {
            tri.back_transform(&mut y);
            y
        })
        .collect();
    Ok(assemble(values, vectors, n))
}

/// LU factors of a shifted tridiagonal matrix with partial pivoting
/// (LAPACK `dgttrf` layout).
struct ShiftedLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper1: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(tri: &Tridiagonal, shift: f64, tiny: f64) -> Self {
        let n = tri.diag.len();
        let mut diag: Vec<f64> = tri.diag.iter().map(|d| d - shift).collect();
        let mut lower: Vec<f64> = tri.off[..n.saturating_sub(1)].to_vec();
        let mut upper1 = lower.clone();
        let mut upper2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if diag[i].abs() >= lower[i].abs() {
                if diag[i] == 0.0 {
                    diag[i] = tiny;
                }
                let fact = lower[i] / diag[i];
                lower[i] = fact;
                diag[i + 1] -= fact * upper1[i];
            } else {
                let fact = diag[i] / lower[i];
                diag[i] = lower[i];
                lower[i] = fact;
                let temp = upper1[i];
                upper1[i] = diag[i + 1];
                diag[i + 1] = temp - fact * diag[i + 1];
                if i + 1 < n - 1 {
                    upper2[i] = upper1[i + 1];
                    upper1[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        for d in &mut diag {
            if d.abs() < tiny {
                *d = if *d < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            lower,
            diag,
            upper1,
            upper2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.lower[i] * b[i];
            } else {
                b[i + 1] -= self.lower[i] * b[i];
            }
        }
        b[n - 1] /= self.diag[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.upper1[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.upper1[i] * b[i + 1] - self.upper2[i] * b[i + 2]) / self.diag[i];
        }
    }
}

fn inverse_iteration(
    tri: &Tridiagonal,
    lambda: f64,
    norm: f64,
    cluster: &[usize],
    previous: &[Vec<f64>],
    salt: usize,
) -> Result<Vec<f64>> {
    let n = tri.diag.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    if norm == 0.0 {
        // Zero matrix: every vector is an eigenvector; use the standard basis.
        let mut x = vec![0.0; n];
        x[salt] = 1.0;
        return Ok(x);
    }
    let tiny = f64::EPSILON * norm;
    let lu = ShiftedLu::factor(tri, lambda, tiny);
    // Deterministic, structure-free start vector.
    let mut state = 0x2545_F491_4F6C_DD1Du64 ^ (salt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    let target = 8.0 * f64::EPSILON * norm * (n as f64).sqrt();
    for _ in 0..8 {
        lu.solve(&mut x);
        for &c in cluster {
            let proj = dot(&x, &previous[c]);
            for (xi, pi) in x.iter_mut().zip(&previous[c]) {
                *xi -= proj * pi;
            }
        }
        let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::Numerical(format!(
                "inverse iteration broke down for eigenvalue {lambda}"
            )));
        }
        x.iter_mut().for_each(|v| *v /= len);
        if tridiagonal_residual(tri, lambda, &x) <= target {
            break;
        }
    }
    Ok(x)
}

fn tridiagonal_residual(tri: &Tridiagonal, lambda: f64, x: &[f64]) -> f64 {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut r = (tri.diag[i] - lambda) * x[i];
            if i + 1 < n {
                r += tri.off[i] * x[i + 1];
            }
            if i > 0 {
                r += tri.off[i - 1] * x[i - 1];
            }
            r * r
        })
        .sum::<f64>()
        .sqrt()
}
