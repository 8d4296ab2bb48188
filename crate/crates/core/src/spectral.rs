//! Dense symmetric eigensolvers, Chebyshev spectral filters and the cache of
//! star-motif spectra.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::matrix::Matrix;
use crate::{Error, Result};

/// Inputs whose largest asymmetry exceeds this are rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// `M = U Λ Uᵀ` with eigenvalues ascending and eigenvectors in the columns of `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest eigenvalue magnitude; the shift scale of the Chebyshev argument.
    pub fn spectral_scale(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(math::abs(*v)))
    }

    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = (0..n).map(|k| u[(i, k)] * self.eigenvalues[k] * u[(j, k)]).sum();
            }
        }
        m
    }
}

/// Which side of the diagonal filter the eigenvector matrix is transposed on.
///
/// With `U` holding one eigenvector per row, `Uᵀ g(Λ) U` is the usual
/// spectral filter `V g(Λ) Vᵀ` (columns of `V` are eigenvectors).
/// `EigenvectorColumns` evaluates the same expression with `U = V`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterBasis {
    #[default]
    EigenvectorRows,
    EigenvectorColumns,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Rotations sweep the upper triangle in row order, so results are
/// reproducible bit for bit.
pub fn eigh(m: &Matrix) -> Result<EigenDecomposition> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::Dimension(format!("{}x{} is not square", n, m.cols())));
    }
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    let mut a = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    let mut v = Matrix::identity(n);
    let frob = math::sqrt(a.frob_dot(&a));

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if math::sqrt(off) <= 1e-16 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = math::copysign(1.0, theta) / (math::abs(theta) + math::hypot(theta, 1.0));
                let c = 1.0 / math::hypot(t, 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].total_cmp(&a[(y, y)]).then(x.cmp(&y)));
    let eigenvalues = order.iter().map(|&k| a[(k, k)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, col)] = v[(r, k)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending, by Householder tridiagonalization and
/// implicit QL. Used for spectra of large global matrices.
pub fn eigvalsh(m: &Matrix) -> Result<Vec<f64>> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::Dimension(format!("{}x{} is not square", n, m.cols())));
    }
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| math::abs(a[(i, k)])).sum();
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -math::sqrt(h) } else { math::sqrt(h) };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                let mut ff = 0.0;
                for j in 0..=l {
                    let mut gg = 0.0;
                    for k in 0..=j {
                        gg += a[(j, k)] * a[(i, k)];
                    }
                    for k in (j + 1)..=l {
                        gg += a[(k, j)] * a[(i, k)];
                    }
                    e[j] = gg / h;
                    ff += e[j] * a[(i, j)];
                }
                let hh = ff / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[(j, k)] -= f * e[k] + g * a[(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = a[(i, i)];
    }

    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m_idx = l;
            while m_idx + 1 < n {
                let dd = math::abs(d[m_idx]) + math::abs(d[m_idx + 1]);
                if math::abs(e[m_idx]) <= f64::EPSILON * dd {
                    break;
                }
                m_idx += 1;
            }
            if m_idx == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::Invalid("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = math::hypot(g, 1.0);
            g = d[m_idx] - d[l] + e[l] / (g + math::copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m_idx;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = math::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m_idx] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m_idx] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// `T_0(x), …, T_n(x)` by the three-term recurrence.
pub fn chebyshev_values(x: f64, n: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n + 1);
    t.push(1.0);
    if n >= 1 {
        t.push(x);
    }
    for k in 2..=n {
        let next = 2.0 * x * t[k - 1] - t[k - 2];
        t.push(next);
    }
    t
}

/// Shifted eigenvalues `2λ/λ_max − 1`, or `None` when `λ_max` is zero.
pub fn shifted_eigenvalues(eigenvalues: &[f64], lambda_max: f64) -> Option<Vec<f64>> {
    if !(lambda_max > 0.0) {
        return None;
    }
    Some(eigenvalues.iter().map(|&l| 2.0 * l / lambda_max - 1.0).collect())
}

/// Diagonal of `Σ θ_j T_{start+j}(Λ̃)`.
///
/// A zero `lambda_max` (fully zero-weighted motif) yields the zero filter.
pub fn chebyshev_filter(
    decomp: &EigenDecomposition,
    coeffs: &[f64],
    start: usize,
    lambda_max: f64,
) -> Result<Vec<f64>> {
    if coeffs.is_empty() {
        return Err(Error::EmptyCoefficients);
    }
    let Some(shifted) = shifted_eigenvalues(&decomp.eigenvalues, lambda_max) else {
        return Ok(vec![0.0; decomp.dim()]);
    };
    let top = start + coeffs.len() - 1;
    Ok(shifted
        .iter()
        .map(|&x| {
            let t = chebyshev_values(x, top);
            coeffs.iter().enumerate().map(|(j, c)| c * t[start + j]).sum()
        })
        .collect())
}

/// The `n × n` operator `Uᵀ diag(filtered) U` in the chosen basis convention.
pub fn filter_matrix(decomp: &EigenDecomposition, filtered: &[f64], basis: FilterBasis) -> Matrix {
    let n = decomp.dim();
    let v = &decomp.eigenvectors;
    let mut out = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            out[(a, b)] = (0..n)
                .map(|m| match basis {
                    FilterBasis::EigenvectorRows => v[(a, m)] * filtered[m] * v[(b, m)],
                    FilterBasis::EigenvectorColumns => v[(m, a)] * filtered[m] * v[(m, b)],
                })
                .sum();
        }
    }
    out
}

/// `Uᵀ diag(filtered) U · h`.
pub fn apply_filter(
    decomp: &EigenDecomposition,
    filtered: &[f64],
    h: &Matrix,
    basis: FilterBasis,
) -> Result<Matrix> {
    if h.rows() != decomp.dim() || filtered.len() != decomp.dim() {
        return Err(Error::Dimension(format!(
            "filter of size {} ({} diagonal entries) applied to {} rows",
            decomp.dim(),
            filtered.len(),
            h.rows()
        )));
    }
    filter_matrix(decomp, filtered, basis).matmul(h)
}

/// Weighted Laplacian of a star with the center at index 0 and one leaf per weight.
pub fn star_laplacian(weights: &[f64]) -> Matrix {
    let k = weights.len() + 1;
    let mut l = Matrix::zeros(k, k);
    for (j, &w) in weights.iter().enumerate() {
        l[(0, 0)] += w;
        l[(j + 1, j + 1)] = w;
        l[(0, j + 1)] = -w;
        l[(j + 1, 0)] = -w;
    }
    l
}

/// Identifies a star spectrum up to leaf permutation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WeightsKey {
    Unweighted,
    /// Leaf edge signs, sorted ascending.
    Signs(Vec<i8>),
}

impl WeightsKey {
    pub fn signs(signs: &[i8]) -> Self {
        let mut s = signs.to_vec();
        s.sort_unstable();
        WeightsKey::Signs(s)
    }

    pub fn weights(&self, k: usize) -> Vec<f64> {
        match self {
            WeightsKey::Unweighted => vec![1.0; k - 1],
            WeightsKey::Signs(s) => s.iter().map(|&x| f64::from(x)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotifSpectrum {
    pub k: usize,
    pub key: WeightsKey,
    pub decomposition: EigenDecomposition,
}

/// Memoized star-motif spectra keyed by `(k, key)`.
///
/// Insertion needs `&mut self`; once warmed up the cache is only read, and
/// the returned `Arc`s can be shared freely.
#[derive(Debug, Default)]
pub struct MotifSpectrumCache {
    entries: BTreeMap<(usize, WeightsKey), Arc<MotifSpectrum>>,
    decompositions: usize,
}

impl MotifSpectrumCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, k: usize, key: WeightsKey) -> Result<Arc<MotifSpectrum>> {
        if k < 2 {
            return Err(Error::Invalid(format!("motif size {k} < 2")));
        }
        if let WeightsKey::Signs(s) = &key {
            if s.len() != k - 1 {
                return Err(Error::Dimension(format!("{} signs for a {k}-motif", s.len())));
            }
        }
        if let Some(hit) = self.entries.get(&(k, key.clone())) {
            return Ok(Arc::clone(hit));
        }
        let decomposition = eigh(&star_laplacian(&key.weights(k)))?;
        self.decompositions += 1;
        let entry = Arc::new(MotifSpectrum {
            k,
            key: key.clone(),
            decomposition,
        });
        self.entries.insert((k, key), Arc::clone(&entry));
        Ok(entry)
    }

    /// Looks up without inserting.
    pub fn peek(&self, k: usize, key: &WeightsKey) -> Option<&Arc<MotifSpectrum>> {
        self.entries.get(&(k, key.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of eigendecompositions actually computed.
    pub fn decompositions(&self) -> usize {
        self.decompositions
    }

    /// Inserts the unweighted spectrum and every sign multiset for `k` in `3..=nu`.
    pub fn warm_up(&mut self, nu: usize) -> Result<()> {
        for k in 3..=nu {
            self.get(k, WeightsKey::Unweighted)?;
            for signs in sign_multisets(k - 1) {
                self.get(k, WeightsKey::Signs(signs))?;
            }
        }
        Ok(())
    }
}

/// Sorted sign vectors of length `len` over `{-1, 0, 1}`.
fn sign_multisets(len: usize) -> Vec<Vec<i8>> {
    let mut out = Vec::new();
    for neg in 0..=len {
        for zero in 0..=(len - neg) {
            let pos = len - neg - zero;
            let mut v = vec![-1i8; neg];
            v.extend(core::iter::repeat_n(0i8, zero));
            v.extend(core::iter::repeat_n(1i8, pos));
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut r = rng::rng(seed);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = r.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn check_orthonormal(d: &EigenDecomposition, tol: f64) {
        let u = &d.eigenvectors;
        let utu = u.t_matmul(u).unwrap();
        assert!(utu.max_abs_diff(&Matrix::identity(d.dim())) < tol);
    }

    #[test]
    fn two_node_laplacian() {
        let m = Matrix::from_rows(&[std::vec![1.0, -1.0], std::vec![-1.0, 1.0]]).unwrap();
        let d = eigh(&m).unwrap();
        assert!(close(&d.eigenvalues, &[0.0, 2.0], 1e-14));
    }

    #[test]
    fn star_spectrum_closed_form() {
        for k in 2..=8 {
            let d = eigh(&star_laplacian(&std::vec![1.0; k - 1])).unwrap();
            let mut expected = std::vec![0.0];
            expected.extend(std::iter::repeat_n(1.0, k.saturating_sub(2)));
            expected.push(k as f64);
            assert!(close(&d.eigenvalues, &expected, 1e-12), "k={k}: {:?}", d.eigenvalues);
        }
    }

    #[test]
    fn identity_reconstructs() {
        let d = eigh(&Matrix::identity(3)).unwrap();
        assert_eq!(d.eigenvalues, std::vec![1.0, 1.0, 1.0]);
        check_orthonormal(&d, 1e-15);
        assert!(d.reconstruct().max_abs_diff(&Matrix::identity(3)) < 1e-15);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_rows(&[std::vec![1.0, 2.0], std::vec![0.0, 1.0]]).unwrap();
        assert!(matches!(eigh(&m), Err(Error::Asymmetric(_))));
        assert!(matches!(eigvalsh(&m), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn reconstruction_on_random_matrices() {
        for trial in 0..1000u64 {
            let n = 1 + (trial % 8) as usize;
            let m = random_symmetric(n, trial);
            let d = eigh(&m).unwrap();
            assert!(d.reconstruct().max_abs_diff(&m) < 1e-8);
            check_orthonormal(&d, 1e-8);
            assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn tridiagonal_ql_agrees_with_jacobi() {
        for (trial, n) in [1usize, 2, 3, 7, 20, 48].into_iter().enumerate() {
            let m = random_symmetric(n, 100 + trial as u64);
            let a = eigh(&m).unwrap().eigenvalues;
            let b = eigvalsh(&m).unwrap();
            assert!(close(&a, &b, 1e-10), "n={n}");
        }
    }

    #[test]
    fn chebyshev_filter_examples() {
        let m = Matrix::from_rows(&[std::vec![1.0, -1.0], std::vec![-1.0, 1.0]]).unwrap();
        let d = eigh(&m).unwrap();
        assert_eq!(chebyshev_filter(&d, &[1.0], 0, 2.0).unwrap(), std::vec![1.0, 1.0]);
        assert!(matches!(chebyshev_filter(&d, &[], 0, 2.0), Err(Error::EmptyCoefficients)));
        // λ = 1.5 with λ_max = 2 gives λ̃ = 0.5 and T_2(0.5) = −0.5
        let half = EigenDecomposition {
            eigenvalues: std::vec![1.5],
            eigenvectors: Matrix::identity(1),
        };
        assert_eq!(chebyshev_filter(&half, &[0.0, 0.0, 1.0], 0, 2.0).unwrap(), std::vec![-0.5]);
        let star = eigh(&star_laplacian(&[1.0, 1.0, 1.0])).unwrap();
        let f = chebyshev_filter(&star, &[0.0, 1.0], 0, 4.0).unwrap();
        assert!((f[1] + 0.5).abs() < 1e-12 && (f[2] + 0.5).abs() < 1e-12);
        // start = 1 shifts the coefficient index
        let g = chebyshev_filter(&star, &[1.0], 1, 4.0).unwrap();
        assert!(close(&f, &g, 0.0));
        assert_eq!(chebyshev_filter(&star, &[1.0], 1, 0.0).unwrap(), std::vec![0.0; 4]);
    }

    #[test]
    fn apply_filter_examples() {
        let m = Matrix::from_rows(&[std::vec![1.0, -1.0], std::vec![-1.0, 1.0]]).unwrap();
        let d = eigh(&m).unwrap();
        let h = Matrix::from_rows(&[std::vec![1.0], std::vec![-1.0]]).unwrap();
        for basis in [FilterBasis::EigenvectorRows, FilterBasis::EigenvectorColumns] {
            if basis == FilterBasis::EigenvectorRows {
                // U Λ Uᵀ h = L h; the column-literal variant depends on eigenvector signs
                let out = apply_filter(&d, &d.eigenvalues, &h, basis).unwrap();
                assert!(close(out.as_slice(), &[2.0, -2.0], 1e-12));
            }
            let id = apply_filter(&d, &[1.0, 1.0], &h, basis).unwrap();
            assert!(id.max_abs_diff(&h) < 1e-9);
            let zero = apply_filter(&d, &[0.0, 0.0], &h, basis).unwrap();
            assert!(zero.as_slice().iter().all(|&v| v == 0.0));
        }
        assert!(apply_filter(&d, &[1.0, 1.0], &Matrix::zeros(3, 1), FilterBasis::default()).is_err());
    }

    #[test]
    fn cache_memoizes_and_canonicalizes() {
        let mut cache = MotifSpectrumCache::new();
        let a = cache.get(3, WeightsKey::Unweighted).unwrap();
        let b = cache.get(3, WeightsKey::Unweighted).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.decompositions(), 1);
        let p = cache.get(3, WeightsKey::signs(&[1, -1])).unwrap();
        let q = cache.get(3, WeightsKey::signs(&[-1, 1])).unwrap();
        assert!(Arc::ptr_eq(&p, &q));
        assert!(cache.get(3, WeightsKey::Signs(std::vec![1])).is_err());
    }

    #[test]
    fn cache_size_after_warm_up() {
        let mut cache = MotifSpectrumCache::new();
        cache.warm_up(4).unwrap();
        // sign multisets: C(2+2, 2) = 6 for k=3 and C(3+2, 2) = 10 for k=4, plus one unweighted each
        assert_eq!(cache.len() - 2, 6 + 10);
        assert_eq!(cache.decompositions(), cache.len());
    }

    #[test]
    fn cached_and_fresh_spectra_filter_identically() {
        let mut cache = MotifSpectrumCache::new();
        let key = WeightsKey::signs(&[1, 0, -1]);
        let cached = cache.get(4, key.clone()).unwrap();
        let fresh = eigh(&star_laplacian(&key.weights(4))).unwrap();
        let lm = fresh.spectral_scale();
        let f1 = chebyshev_filter(&cached.decomposition, &[0.3, -0.2, 0.1, 0.7], 1, lm).unwrap();
        let f2 = chebyshev_filter(&fresh, &[0.3, -0.2, 0.1, 0.7], 1, lm).unwrap();
        let h = random_symmetric(4, 3);
        let a = apply_filter(&cached.decomposition, &f1, &h, FilterBasis::default()).unwrap();
        let b = apply_filter(&fresh, &f2, &h, FilterBasis::default()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn recurrence_matches_trigonometric_form(x in -1.0f64..=1.0) {
            let t = chebyshev_values(x, 12);
            for (k, v) in t.iter().enumerate() {
                let direct = math::cos(k as f64 * math::acos(x));
                prop_assert!((v - direct).abs() < 1e-10);
            }
        }

        #[test]
        fn filter_is_linear(seed in 0u64..10_000, alpha in -3.0f64..3.0) {
            let n = 2 + (seed % 6) as usize;
            let d = eigh(&random_symmetric(n, seed)).unwrap();
            let diag = chebyshev_filter(&d, &[0.5, -1.0, 0.25], 0, d.spectral_scale()).unwrap();
            let a = random_symmetric(n, seed + 1);
            let b = random_symmetric(n, seed + 2);
            let mut combo = b.clone();
            combo.scale(alpha);
            combo.add_assign(&a);
            let lhs = apply_filter(&d, &diag, &combo, FilterBasis::default()).unwrap();
            let mut rhs = apply_filter(&d, &diag, &b, FilterBasis::default()).unwrap();
            rhs.scale(alpha);
            rhs.add_assign(&apply_filter(&d, &diag, &a, FilterBasis::default()).unwrap());
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        }
    }
}
