//! Koopman companion matrices, characteristic polynomials and matrix
//! polynomial root finding.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LaggedModel;
use crate::error::{Error, Result};

/// Largest dense eigenproblem we are willing to solve.
pub const MAX_DENSE_EIGEN_DIM: usize = 5000;

/// Leading blocks with reciprocal condition number below this are treated as
/// singular and the pencil goes through the generalized (QZ) path.
const LEADING_RCOND_TOL: f64 = 1e-12;

/// Generalized eigenvalues `α/β` with `|β| <= INFINITE_TOL * max(|α|, |β|)`
/// are infinite and dropped.
const INFINITE_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpectrumSource {
    #[serde(rename = "full-companion")]
    FullCompanion,
    #[serde(rename = "reduced-inner")]
    ReducedInner,
    #[serde(rename = "reduced-outer")]
    ReducedOuter,
}

impl SpectrumSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumSource::FullCompanion => "full-companion",
            SpectrumSource::ReducedInner => "reduced-inner",
            SpectrumSource::ReducedOuter => "reduced-outer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full-companion" => Some(SpectrumSource::FullCompanion),
            "reduced-inner" => Some(SpectrumSource::ReducedInner),
            "reduced-outer" => Some(SpectrumSource::ReducedOuter),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Complex64>,
    pub source: SpectrumSource,
}

/// One term `matrix * z^degree` of a matrix polynomial.
#[derive(Debug, Clone)]
pub struct PolyTerm {
    pub degree: usize,
    pub matrix: Mat<f64>,
}

impl PolyTerm {
    pub fn new(degree: usize, matrix: Mat<f64>) -> Self {
        Self { degree, matrix }
    }
}

/// Block companion form of the one-step operator.
///
/// Identity blocks sit on the block superdiagonal. The bottom block row
/// holds `K_l` in block column `L - l` (`L` the largest lag), so the
/// rightmost block is `K_1` and the leftmost is `K_L`; unused lags are zero.
pub fn companion_matrix(model: &LaggedModel) -> Mat<f64> {
    let s = model.state_dim();
    let big_l = model.max_lag();
    let n = s * big_l;
    let mut a = Mat::<f64>::zeros(n, n);
    for i in 0..n - s {
        a[(i, i + s)] = 1.0;
    }
    let row0 = n - s;
    for (lag, k) in model.lags().iter().zip(model.matrices()) {
        let col0 = (big_l - lag) * s;
        a.submatrix_mut(row0, col0, s, s).copy_from(k);
    }
    a
}

/// Eigenvalues of [`companion_matrix`], sorted by decreasing modulus then
/// angle.
pub fn full_spectrum(model: &LaggedModel) -> Result<SpectrumResult> {
    let n = model.state_dim() * model.max_lag();
    guard_size(n)?;
    let mut eigenvalues = dense_eigenvalues(&companion_matrix(model))?;
    sort_spectrum(&mut eigenvalues);
    Ok(SpectrumResult {
        eigenvalues,
        source: SpectrumSource::FullCompanion,
    })
}

/// `det(Σ_k K_{l_k} z^{L - l_k} - z^L I)`, whose roots are the companion
/// eigenvalues.
pub fn eval_char_poly(model: &LaggedModel, z: Complex64) -> Complex64 {
    let s = model.state_dim();
    let big_l = model.max_lag();
    let mut m = Mat::<Complex64>::zeros(s, s);
    for (lag, k) in model.lags().iter().zip(model.matrices()) {
        let w = z.powu((big_l - lag) as u32);
        for j in 0..s {
            for i in 0..s {
                m[(i, j)] += w * k[(i, j)];
            }
        }
    }
    let zl = z.powu(big_l as u32);
    for i in 0..s {
        m[(i, i)] -= zl;
    }
    m.determinant()
}

/// Magnitude scale for [`eval_char_poly`] at `z`: the `s`-th power of the
/// summed term magnitudes (infinity norms). Residuals are judged relative to
/// this.
pub fn char_poly_scale(model: &LaggedModel, z: Complex64) -> f64 {
    let s = model.state_dim();
    let big_l = model.max_lag();
    let r = z.norm();
    let mut total = r.powi(big_l as i32);
    for (lag, k) in model.lags().iter().zip(model.matrices()) {
        let inf_norm = (0..s)
            .map(|i| (0..s).map(|j| k[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        total += inf_norm * r.powi((big_l - lag) as i32);
    }
    total.powi(s as i32)
}

/// Finite roots of `det(Σ C_d z^d [- z^m I])`.
///
/// The polynomial is linearized in block companion form. A well-conditioned
/// leading block is inverted and the standard eigenproblem solved; otherwise
/// the pencil goes through a generalized (QZ) eigensolve and infinite
/// eigenvalues are discarded. Terms of equal degree are summed.
pub fn matrix_poly_roots(
    terms: &[PolyTerm],
    monic_degree: Option<usize>,
) -> Result<Vec<Complex64>> {
    let s = match (terms.first(), monic_degree) {
        (Some(t), _) => t.matrix.nrows(),
        (None, _) => return Err(Error::Argument("matrix polynomial has no terms".into())),
    };
    if terms
        .iter()
        .any(|t| t.matrix.nrows() != s || t.matrix.ncols() != s)
    {
        return Err(Error::Dimension(
            "polynomial coefficients must all be s x s".into(),
        ));
    }
    let degree = terms
        .iter()
        .map(|t| t.degree)
        .chain(monic_degree)
        .max()
        .expect("nonempty");
    let mut coeffs: Vec<Option<Mat<f64>>> = vec![None; degree + 1];
    for t in terms {
        match &mut coeffs[t.degree] {
            Some(c) => *c += &t.matrix,
            slot @ None => *slot = Some(t.matrix.clone()),
        }
    }
    if let Some(m) = monic_degree {
        let c = coeffs[m].get_or_insert_with(|| Mat::zeros(s, s));
        for i in 0..s {
            c[(i, i)] -= 1.0;
        }
    }
    let distinct = coeffs.iter().filter(|c| c.is_some()).count();
    if distinct < 2 {
        return Err(Error::Argument(
            "matrix polynomial needs at least two distinct degrees".into(),
        ));
    }
    if coeffs.iter().flatten().all(|c| c.norm_max() == 0.0) {
        return Err(Error::DegeneratePencil("all coefficients vanish".into()));
    }
    let n = s * degree;
    guard_size(n)?;
    let zero = Mat::<f64>::zeros(s, s);
    let coeff = |d: usize| coeffs[d].as_ref().unwrap_or(&zero);

    let lead = coeff(degree);
    let mut roots = if reciprocal_condition(lead)? > LEADING_RCOND_TOL {
        let lu = lead.partial_piv_lu();
        let mut a = Mat::<f64>::zeros(n, n);
        for i in 0..n - s {
            a[(i, i + s)] = 1.0;
        }
        for d in 0..degree {
            let block = lu.solve(coeff(d));
            for j in 0..s {
                for i in 0..s {
                    a[(n - s + i, d * s + j)] = -block[(i, j)];
                }
            }
        }
        dense_eigenvalues(&a)?
    } else {
        let mut a = Mat::<f64>::zeros(n, n);
        let mut b = Mat::<f64>::identity(n, n);
        for i in 0..n - s {
            a[(i, i + s)] = 1.0;
        }
        for d in 0..degree {
            let c = coeff(d);
            for j in 0..s {
                for i in 0..s {
                    a[(n - s + i, d * s + j)] = -c[(i, j)];
                }
            }
        }
        b.submatrix_mut(n - s, n - s, s, s).copy_from(lead);
        generalized_finite_eigenvalues(&a, &b)?
    };
    sort_spectrum(&mut roots);
    Ok(roots)
}

/// All `n` complex `n`-th roots of `z`, principal root first, then by
/// increasing angle.
pub fn nth_roots(z: Complex64, n: i64) -> Result<Vec<Complex64>> {
    if n <= 0 {
        return Err(Error::Argument(format!(
            "root order must be positive, got {n}"
        )));
    }
    let n_f = n as f64;
    let r = z.norm().powf(1.0 / n_f);
    let theta = z.arg();
    Ok((0..n)
        .map(|k| Complex64::from_polar(r, (theta + 2.0 * PI * k as f64) / n_f))
        .collect())
}

/// Leading-order inner spectrum from the `n_terms` largest lags.
///
/// With lags `l_1 < ... < l_n` (the top `n_terms`, `L = l_n`), gaps
/// `g_i = L - l_i` are rounded to multiples of the smallest gap `g`, the
/// polynomial `Σ K_{l_i} w^{round(g_i / g)}` is solved for `w = z^g`, and
/// every branch `z = w^{1/g}` is returned. For two lags this is the exact
/// pencil `K_L + K_{l_1} w`.
pub fn reduced_inner(model: &LaggedModel, n_terms: usize) -> Result<SpectrumResult> {
    let lags = model.lags().as_slice();
    if n_terms < 2 || n_terms > lags.len() {
        return Err(Error::Argument(format!(
            "inner reduction needs 2 <= n_terms <= {}, got {n_terms}",
            lags.len()
        )));
    }
    let top = &lags[lags.len() - n_terms..];
    let big_l = *top.last().expect("nonempty");
    let base = big_l - top[top.len() - 2];
    let terms: Vec<PolyTerm> = top
        .iter()
        .map(|&l| {
            let degree = ((big_l - l) as f64 / base as f64).round() as usize;
            PolyTerm::new(
                degree,
                model.matrix_for_lag(l).expect("lag present").to_owned(),
            )
        })
        .collect();
    let reduced = matrix_poly_roots(&terms, None)?;
    let mut eigenvalues = Vec::with_capacity(reduced.len() * base);
    for w in reduced {
        eigenvalues.extend(nth_roots(w, base as i64)?);
    }
    sort_spectrum(&mut eigenvalues);
    Ok(SpectrumResult {
        eigenvalues,
        source: SpectrumSource::ReducedInner,
    })
}

/// Fast-scale outer spectrum from the lags `<= max_lag`:
/// roots of `det(z^m I - Σ_{l <= max_lag} K_l z^{m - l})`, `m` the largest
/// such lag.
pub fn reduced_outer(model: &LaggedModel, max_lag: usize) -> Result<SpectrumResult> {
    let short: Vec<usize> = model.lags().iter().filter(|&l| l <= max_lag).collect();
    let m = *short
        .last()
        .ok_or_else(|| Error::Argument(format!("no lags <= {max_lag}")))?;
    let terms: Vec<PolyTerm> = short
        .iter()
        .map(|&l| {
            PolyTerm::new(
                m - l,
                model.matrix_for_lag(l).expect("lag present").to_owned(),
            )
        })
        .collect();
    let eigenvalues = matrix_poly_roots(&terms, Some(m))?;
    Ok(SpectrumResult {
        eigenvalues,
        source: SpectrumSource::ReducedOuter,
    })
}

fn guard_size(n: usize) -> Result<()> {
    if n > MAX_DENSE_EIGEN_DIM {
        return Err(Error::TooLarge {
            size: n,
            limit: MAX_DENSE_EIGEN_DIM,
        });
    }
    Ok(())
}

fn dense_eigenvalues(a: &Mat<f64>) -> Result<Vec<Complex64>> {
    let ev = a
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    Ok(ev.into_iter().map(|c| Complex64::new(c.re, c.im)).collect())
}

fn generalized_finite_eigenvalues(a: &Mat<f64>, b: &Mat<f64>) -> Result<Vec<Complex64>> {
    let scale = a.norm_max().max(b.norm_max());
    let gev = a
        .generalized_eigen(b)
        .map_err(|e| Error::Numerical(format!("generalized eigensolver failed: {e:?}")))?;
    let alpha = gev.S_a().column_vector();
    let beta = gev.S_b().column_vector();
    let mut out = Vec::new();
    for i in 0..alpha.nrows() {
        let al = Complex64::new(alpha[i].re, alpha[i].im);
        let be = Complex64::new(beta[i].re, beta[i].im);
        if al.norm() <= 1e-10 * scale && be.norm() <= 1e-10 * scale {
            return Err(Error::DegeneratePencil(
                "determinant vanishes identically (singular pencil)".into(),
            ));
        }
        if be.norm() > INFINITE_TOL * al.norm().max(be.norm()) {
            out.push(al / be);
        }
    }
    Ok(out)
}

fn reciprocal_condition(m: &Mat<f64>) -> Result<f64> {
    let sv = m
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let max = sv.first().copied().unwrap_or(0.0);
    let min = sv.last().copied().unwrap_or(0.0);
    Ok(if max > 0.0 { min / max } else { 0.0 })
}

fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::LagSet;

    fn scalar_model(pairs: &[(usize, f64)]) -> LaggedModel {
        let lags = LagSet::new(pairs.iter().map(|p| p.0).collect()).unwrap();
        let mats = lags
            .iter()
            .map(|l| Mat::from_fn(1, 1, |_, _| pairs.iter().find(|p| p.0 == l).unwrap().1))
            .collect();
        LaggedModel::new(lags, mats).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn companion_single_lag_is_k1() {
        let k = Mat::from_fn(2, 2, |i, j| (i * 2 + j) as f64 + 0.5);
        let m = LaggedModel::new(LagSet::unit(), vec![k.clone()]).unwrap();
        assert_eq!(companion_matrix(&m), k);
    }

    #[test]
    fn companion_scalar_two_lags() {
        let m = scalar_model(&[(1, 0.7), (3, -0.2)]);
        let c = companion_matrix(&m);
        let expect = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-0.2, 0.0, 0.7]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c[(i, j)], expect[i][j]);
            }
        }
    }

    #[test]
    fn cube_roots_of_unity() {
        let m = scalar_model(&[(1, 0.0), (3, 1.0)]);
        let spec = full_spectrum(&m).unwrap();
        assert_eq!(spec.eigenvalues.len(), 3);
        for k in 0..3 {
            let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0);
            assert!(spec.eigenvalues.iter().any(|&e| close(e, w, 1e-12)));
        }
    }

    #[test]
    fn char_poly_values() {
        let m = scalar_model(&[(1, 0.5), (3, 0.25)]);
        let p = eval_char_poly(&m, Complex64::new(1.0, 0.0));
        assert!(close(p, Complex64::new(-0.25, 0.0), 1e-15));
        let k = Mat::from_fn(2, 2, |i, j| [[2.0, 1.0], [0.5, 3.0]][i][j]);
        let m1 = LaggedModel::new(LagSet::unit(), vec![k]).unwrap();
        let p0 = eval_char_poly(&m1, Complex64::new(0.0, 0.0));
        assert!(close(p0, Complex64::new(5.5, 0.0), 1e-13));
    }

    #[test]
    fn eigenvalues_are_char_poly_roots() {
        let mats = vec![
            Mat::from_fn(2, 2, |i, j| [[0.6, 0.3], [-0.2, 0.5]][i][j]),
            Mat::from_fn(2, 2, |i, j| [[0.1, -0.05], [0.2, 0.15]][i][j]),
        ];
        let m = LaggedModel::new(LagSet::new(vec![1, 7]).unwrap(), mats).unwrap();
        let spec = full_spectrum(&m).unwrap();
        assert_eq!(spec.eigenvalues.len(), 14);
        for &l in &spec.eigenvalues {
            let r = eval_char_poly(&m, l).norm() / char_poly_scale(&m, l);
            assert!(r < 1e-10, "residual {r} at {l}");
        }
    }

    #[test]
    fn scalar_pencils() {
        let one = |v: f64| Mat::from_fn(1, 1, |_, _| v);
        let r = matrix_poly_roots(
            &[PolyTerm::new(0, one(0.5)), PolyTerm::new(1, one(1.0))],
            None,
        )
        .unwrap();
        assert_eq!(r.len(), 1);
        assert!(close(r[0], Complex64::new(-0.5, 0.0), 1e-14));
        let r = matrix_poly_roots(
            &[PolyTerm::new(2, one(1.0)), PolyTerm::new(0, one(-1.0))],
            None,
        )
        .unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().any(|&z| close(z, Complex64::new(1.0, 0.0), 1e-12)));
        assert!(r
            .iter()
            .any(|&z| close(z, Complex64::new(-1.0, 0.0), 1e-12)));
        // Same roots through the monic form det(1 - z^2).
        let r = matrix_poly_roots(&[PolyTerm::new(0, one(1.0))], Some(2)).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn singular_leading_block_uses_generalized_path() {
        // C1 = diag(1, 0), C0 = diag(-2, 3): det = (z - 2) * 3, single finite root 2.
        let c1 = Mat::from_fn(2, 2, |i, j| if i == j && i == 0 { 1.0 } else { 0.0 });
        let c0 = Mat::from_fn(2, 2, |i, j| if i == j { [-2.0, 3.0][i] } else { 0.0 });
        let r = matrix_poly_roots(&[PolyTerm::new(1, c1), PolyTerm::new(0, c0)], None).unwrap();
        assert_eq!(r.len(), 1);
        assert!(close(r[0], Complex64::new(2.0, 0.0), 1e-10));
    }

    #[test]
    fn degenerate_pencils_fail() {
        let c1 = Mat::from_fn(2, 2, |i, j| if i == j && i == 0 { 1.0 } else { 0.0 });
        let c0 = Mat::from_fn(2, 2, |i, j| if i == j && i == 0 { 2.0 } else { 0.0 });
        let e = matrix_poly_roots(&[PolyTerm::new(1, c1), PolyTerm::new(0, c0)], None);
        assert!(matches!(e, Err(Error::DegeneratePencil(_))), "{e:?}");
        let z = Mat::<f64>::zeros(2, 2);
        let e = matrix_poly_roots(&[PolyTerm::new(1, z.clone()), PolyTerm::new(0, z)], None);
        assert!(matches!(e, Err(Error::DegeneratePencil(_))));
        let one = Mat::<f64>::identity(1, 1);
        assert!(matrix_poly_roots(&[PolyTerm::new(3, one)], None).is_err());
    }

    #[test]
    fn size_guard() {
        let m = scalar_model(&[(1, 0.5), (MAX_DENSE_EIGEN_DIM + 1, 0.1)]);
        assert!(matches!(full_spectrum(&m), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn nth_root_cases() {
        let r = nth_roots(Complex64::new(1.0, 0.0), 4).unwrap();
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (z, e) in r.iter().zip(expect) {
            assert!(close(*z, Complex64::new(e.0, e.1), 1e-15));
        }
        let r = nth_roots(Complex64::new(-8.0, 0.0), 3).unwrap();
        assert!(r.iter().all(|z| (z.norm() - 2.0).abs() < 1e-14));
        assert!(r
            .iter()
            .any(|&z| close(z, Complex64::from_polar(2.0, PI / 3.0), 1e-14)));
        assert!(nth_roots(Complex64::new(1.0, 0.0), 0).is_err());
        let w = Complex64::new(0.3, -0.7);
        for z in nth_roots(w, 148).unwrap() {
            assert!(close(z.powu(148), w, 1e-10));
        }
    }

    #[test]
    fn reduced_forms() {
        let m = scalar_model(&[(1, 2.0), (3, 0.5), (40, 1e-3)]);
        let outer = reduced_outer(&m, 3).unwrap();
        // z^3 - 2 z^2 - 0.5
        for &z in &outer.eigenvalues {
            assert!((z.powu(3) - 2.0 * z.powu(2) - 0.5).norm() < 1e-12);
        }
        assert_eq!(outer.eigenvalues.len(), 3);
        let inner = reduced_inner(&m, 2).unwrap();
        // 1e-3 + 0.5 w = 0, w = z^37
        assert_eq!(inner.eigenvalues.len(), 37);
        for &z in &inner.eigenvalues {
            assert!((z.powu(37) + 2e-3).norm() < 1e-12);
        }
        assert!(reduced_inner(&m, 1).is_err());
        assert!(reduced_outer(&scalar_model(&[(1, 1.0), (5, 1.0)]), 0).is_err());
    }
}
