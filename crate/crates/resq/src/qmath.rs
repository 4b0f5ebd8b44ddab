//! Dense complex linear algebra kernel: Hermitian eigendecomposition, PSD
//! checks, matrix square roots, fidelity, Kronecker products, partial trace.
//!
//! Matrices are small (d ≲ 64) and dense; everything is computed in plain
//! `f64`/`Complex64` arithmetic with no external BLAS. The Hermitian
//! eigensolver runs Householder tridiagonalization followed by implicit QL
//! on the real symmetric embedding of the complex matrix.

use num_complex::Complex64;
use thiserror::Error;

/// Relative tolerance for Hermiticity checks.
pub const HERM_TOL: f64 = 1e-10;
/// Relative tolerance below which a minimum eigenvalue still counts as PSD.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum QmathError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, QmathError>;

/// Dense complex matrix, row-major storage.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from a row-major slice of entries.
    pub fn from_slice(rows: usize, cols: usize, entries: &[Complex64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        Self {
            rows,
            cols,
            data: entries.to_vec(),
        }
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Rank-one |u⟩⟨v|.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn from_columns(cols: &[Vec<Complex64>]) -> Self {
        let rows = cols[0].len();
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= s;
        }
        out
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= s;
        }
        out
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: f64) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// ‖M − M†‖_F.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self[(i, j)] - self[(j, i)].conj();
                s += d.norm_sqr();
            }
        }
        s.sqrt()
    }

    /// (M + M†)/2.
    pub fn hermitize(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![Complex64::ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::ZERO;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Re tr(A B) for Hermitian A, B (the trace is real up to roundoff).
    pub fn inner_re(&self, other: &Self) -> f64 {
        assert_eq!(self.rows, other.cols);
        assert_eq!(self.cols, other.rows);
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += (self[(i, j)] * other[(j, i)]).re;
            }
        }
        acc
    }

    /// A† A.
    pub fn gram(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self[(k, i)].conj();
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..self.cols {
                    out[(i, j)] += a * self[(k, j)];
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl std::ops::Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl std::ops::Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        out
    }
}

impl std::ops::Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
        out
    }
}

/// Spectral decomposition of a Hermitian matrix. Eigenvalues ascending,
/// eigenvectors as the columns of a unitary matrix, aligned by index.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    /// V diag(λ) V†.
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.eigenvalues.len();
        let v = &self.eigenvectors;
        CMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)].conj())
                .sum()
        })
    }

    /// V f(diag(λ)) V†.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = self.eigenvalues.len();
        let v = &self.eigenvectors;
        CMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| v[(i, k)] * f(self.eigenvalues[k]) * v[(j, k)].conj())
                .sum()
        })
    }
}

// ---------------------------------------------------------------------------
// Real symmetric eigensolver (Householder tridiagonalization + implicit QL)
// ---------------------------------------------------------------------------

/// Householder reduction of a real symmetric matrix to tridiagonal form,
/// with accumulated transformations. EISPACK tred2 formulas; `v` is n×n
/// row-major and holds the symmetric input on entry, the accumulated
/// orthogonal transform on exit.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // accumulate transformations
    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix, updating
/// the accumulated transform `v`. EISPACK tql2 formulas.
fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    const MAX_SWEEPS: usize = 60;
    let idx = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS {
                    return Err(QmathError::NoConvergence);
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
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
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
                    let g2 = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g2;
                    d[i + 1] = h + s * (c * g2 + s * d[i]);
                    for k in 0..n {
                        h = v[idx(k, i + 1)];
                        v[idx(k, i + 1)] = s * v[idx(k, i)] + c * h;
                        v[idx(k, i)] = c * v[idx(k, i)] - s * h;
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

    // selection sort ascending, carrying eigenvectors
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d.swap(k, i);
            for row in 0..n {
                let t = v[idx(row, i)];
                v[idx(row, i)] = v[idx(row, k)];
                v[idx(row, k)] = t;
            }
        }
    }
    Ok(())
}

/// Eigendecomposition of a real symmetric matrix (row-major, n×n).
/// Returns eigenvalues ascending and eigenvectors as columns.
fn real_sym_eig(n: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        return Ok((vec![a[0]], vec![1.0]));
    }
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;
    Ok((d, v))
}

// ---------------------------------------------------------------------------
// Complex Hermitian eigendecomposition via the real embedding
// ---------------------------------------------------------------------------

/// Spectral decomposition of a complex Hermitian matrix.
///
/// M = A + iB embeds into the 2d×2d real symmetric [[A, −B], [B, A]], whose
/// spectrum is that of M doubled. Complex eigenvectors are recovered from
/// the duplicated real eigenspaces by pivoted Gram-Schmidt selection.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(QmathError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let d = m.rows;
    let scale = m.frob_norm().max(1.0);
    let herm_res = m.hermiticity_residual();
    if herm_res > HERM_TOL * scale {
        return Err(QmathError::NotHermitian { residual: herm_res });
    }

    if d == 1 {
        return Ok(HermitianEig {
            eigenvalues: vec![m[(0, 0)].re],
            eigenvectors: CMatrix::identity(1),
        });
    }

    // real embedding of the hermitized matrix
    let n = 2 * d;
    let mut emb = vec![0.0; n * n];
    for i in 0..d {
        for j in 0..d {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            emb[i * n + j] = z.re;
            emb[(i + d) * n + (j + d)] = z.re;
            emb[i * n + (j + d)] = -z.im;
            emb[(i + d) * n + j] = z.im;
        }
    }
    let (vals, vecs) = real_sym_eig(n, &emb)?;

    // eigenvalues come in duplicated adjacent pairs after sorting
    let pair_vals: Vec<f64> = (0..d).map(|k| 0.5 * (vals[2 * k] + vals[2 * k + 1])).collect();

    // cluster pairs that are numerically indistinguishable
    let ctol = 1e-12 * scale.max(1.0);
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..d {
        if pair_vals[k] - pair_vals[k - 1] > ctol {
            clusters.push((start, k));
            start = k;
        }
    }
    clusters.push((start, d));

    let mut eigenvalues = Vec::with_capacity(d);
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for &(k0, k1) in &clusters {
        let m_count = k1 - k0;
        // complex candidates from the 2m real eigenvectors of the cluster
        let mut cands: Vec<Vec<Complex64>> = Vec::with_capacity(2 * m_count);
        for col in (2 * k0)..(2 * k1) {
            let z: Vec<Complex64> = (0..d)
                .map(|i| Complex64::new(vecs[i * n + col], vecs[(i + d) * n + col]))
                .collect();
            cands.push(z);
        }
        // pivoted Gram-Schmidt: pick m orthonormal complex vectors
        let mut selected: Vec<Vec<Complex64>> = Vec::with_capacity(m_count);
        for _ in 0..m_count {
            let mut best = 0;
            let mut best_norm = -1.0;
            for (ci, cand) in cands.iter().enumerate() {
                let nrm: f64 = cand.iter().map(|z| z.norm_sqr()).sum();
                if nrm > best_norm {
                    best_norm = nrm;
                    best = ci;
                }
            }
            if best_norm.sqrt() < 1e-8 {
                return Err(QmathError::NoConvergence);
            }
            let mut w = cands.swap_remove(best);
            // two re-orthogonalization passes keep V†V tight
            for _ in 0..2 {
                for s in &selected {
                    let ip: Complex64 = s.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                    for (wi, si) in w.iter_mut().zip(s) {
                        *wi -= ip * si;
                    }
                }
            }
            let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for wi in &mut w {
                *wi /= nrm;
            }
            // deflate remaining candidates
            for cand in &mut cands {
                let ip: Complex64 = w.iter().zip(cand.iter()).map(|(a, b)| a.conj() * b).sum();
                for (ci, wi) in cand.iter_mut().zip(&w) {
                    *ci -= ip * wi;
                }
            }
            selected.push(w);
        }
        for (off, w) in selected.into_iter().enumerate() {
            eigenvalues.push(pair_vals[k0 + off]);
            columns.push(w);
        }
    }

    // global re-orthonormalization: across nearly-degenerate clusters the
    // real solver resolves eigenspaces only to ~ε/gap, which leaves the
    // complex vectors with an uncontrolled imaginary cross term
    for k in 0..columns.len() {
        let (head, tail) = columns.split_at_mut(k);
        let w = &mut tail[0];
        for _ in 0..2 {
            for s in head.iter() {
                let ip: Complex64 = s.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
                for (wi, si) in w.iter_mut().zip(s) {
                    *wi -= ip * si;
                }
            }
        }
        let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for wi in w.iter_mut() {
            *wi /= nrm;
        }
    }

    Ok(HermitianEig {
        eigenvalues,
        eigenvectors: CMatrix::from_columns(&columns),
    })
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.eigenvalues[0])
}

/// PSD test with the relative tolerance used throughout the crate:
/// λ_min ≥ −1e−9 · max(1, ‖M‖_F).
pub fn is_psd(m: &CMatrix) -> Result<bool> {
    let lmin = min_eigenvalue(m)?;
    Ok(lmin >= -PSD_TOL * m.frob_norm().max(1.0))
}

/// Principal square root of a Hermitian PSD matrix. Small negative
/// eigenvalues from roundoff are clamped to zero.
pub fn matrix_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    Ok(eig.map_eigenvalues(|x| if x > 0.0 { x.sqrt() } else { 0.0 }))
}

/// Pseudo-inverse square root of a Hermitian PSD matrix: eigenvalues below
/// `threshold` are treated as kernel and mapped to zero.
pub fn inv_sqrt_psd(m: &CMatrix, threshold: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    Ok(eig.map_eigenvalues(|x| if x > threshold { 1.0 / x.sqrt() } else { 0.0 }))
}

/// Uhlmann fidelity F(ρ,σ) = ‖√σ√ρ‖₁² = (tr √(√ρ σ √ρ))².
///
/// Symmetric in its arguments; equals ⟨φ|ρ|φ⟩ for pure σ = |φ⟩⟨φ|, and
/// that reduction is used directly when either argument is (numerically)
/// pure — the general route loses ~√ε accuracy to roundoff eigenvalues of
/// the rank-deficient product.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.rows != sigma.rows || rho.cols != sigma.cols {
        return Err(QmathError::DimensionMismatch {
            left: rho.rows,
            right: sigma.rows,
        });
    }
    let eig_rho = hermitian_eig(rho)?;
    let d = rho.rows;
    if eig_rho.eigenvalues[d - 1] >= 1.0 - 1e-9 {
        let psi = eig_rho.eigenvectors.column(d - 1);
        let sv = sigma.matvec(&psi);
        let f: f64 = psi.iter().zip(&sv).map(|(a, b)| (a.conj() * b).re).sum();
        return Ok(f.clamp(0.0, 1.0));
    }
    let eig_sigma = hermitian_eig(sigma)?;
    if eig_sigma.eigenvalues[d - 1] >= 1.0 - 1e-9 {
        let phi = eig_sigma.eigenvectors.column(d - 1);
        let rv = rho.matvec(&phi);
        let f: f64 = phi.iter().zip(&rv).map(|(a, b)| (a.conj() * b).re).sum();
        return Ok(f.clamp(0.0, 1.0));
    }
    let sr = eig_rho.map_eigenvalues(|x| if x > 0.0 { x.sqrt() } else { 0.0 });
    let inner = (&(&sr * sigma) * &sr).hermitize();
    let eig = hermitian_eig(&inner)?;
    // eigenvalues at the roundoff floor of the product are noise; the
    // square root would amplify them to ~1e−8
    let cutoff = 64.0 * f64::EPSILON * eig.eigenvalues[d - 1].max(0.0);
    let tr: f64 = eig
        .eigenvalues
        .iter()
        .map(|&x| if x > cutoff { x.sqrt() } else { 0.0 })
        .sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Which subsystem `partial_trace` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of a bipartite operator on ℂ^{dA} ⊗ ℂ^{dB}.
pub fn partial_trace(m: &CMatrix, dims: (usize, usize), keep: Subsystem) -> Result<CMatrix> {
    let (da, db) = dims;
    if m.rows != da * db || m.cols != da * db {
        return Err(QmathError::DimensionMismatch {
            left: m.rows,
            right: da * db,
        });
    }
    match keep {
        Subsystem::A => Ok(CMatrix::from_fn(da, da, |a1, a2| {
            (0..db).map(|b| m[(a1 * db + b, a2 * db + b)]).sum()
        })),
        Subsystem::B => Ok(CMatrix::from_fn(db, db, |b1, b2| {
            (0..da).map(|a| m[(a * db + b1, a * db + b2)]).sum()
        })),
    }
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let av = a[(i, j)];
            if av.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = av * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Cholesky factor L with L L† = M for a Hermitian positive definite M.
/// Returns `None` when M is not (numerically) positive definite.
pub fn cholesky(m: &CMatrix) -> Option<CMatrix> {
    if !m.is_square() {
        return None;
    }
    let n = m.rows;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = m[(j, j)].re;
        for k in 0..j {
            s -= l[(j, k)].norm_sqr();
        }
        if s <= 0.0 || !s.is_finite() {
            return None;
        }
        let ljj = s.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut c = m[(i, j)];
            for k in 0..j {
                c -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = c / ljj;
        }
    }
    Some(l)
}

/// Hermitian inverse via eigendecomposition (matrices here are tiny).
pub fn hermitian_inverse(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    Ok(eig.map_eigenvalues(|x| 1.0 / x))
}

/// Extend a set of orthonormal vectors to a full orthonormal basis of ℂ^d.
/// Completion directions are picked greedily from the canonical basis, so
/// the result is deterministic.
pub fn complete_orthonormal(vectors: &[Vec<Complex64>], d: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = vectors.to_vec();
    while basis.len() < d {
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for k in 0..d {
            let mut v = vec![Complex64::ZERO; d];
            v[k] = Complex64::ONE;
            for _ in 0..2 {
                for b in &basis {
                    let ip: Complex64 = b.iter().zip(&v).map(|(a, c)| a.conj() * c).sum();
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= ip * bi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().map_or(true, |(n, _)| norm > *n) {
                best = Some((norm, v));
            }
        }
        let (norm, mut v) = best.expect("d > 0");
        assert!(norm > 1e-8, "cannot complete basis: residual {norm:.3e}");
        for vi in &mut v {
            *vi /= norm;
        }
        basis.push(v);
    }
    basis
}
