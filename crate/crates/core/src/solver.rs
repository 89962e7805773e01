//! State and measurement equations at a fixed Laplace point, plus the state-space
//! diagnostics built from the Krylov sequence `B, AB, A^2 B, ...`.

use nalgebra::linalg::LU;
use nalgebra::Dyn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::OperatorSet;
use crate::error::{Error, Result};
use crate::kernels::LaplacePoint;
use crate::{CMatrix, CVector, Complex};

/// Condition numbers above this mark a solve as near-singular.
pub const NEAR_SINGULAR_CONDITION: f64 = 1e12;

/// Default truncation order of the Neumann series.
pub const DEFAULT_NEUMANN_ORDER: usize = 40;

/// Number of consecutive growing orders that signals a diverging series.
pub const DIVERGENCE_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Neumann(usize),
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveMethod::Direct => write!(f, "direct"),
            SolveMethod::Neumann(k) => write!(f, "neumann({k})"),
        }
    }
}

/// Boundary state and receiver pressures at one Laplace point.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSolution {
    pub s: LaplacePoint,
    /// Boundary-pressure coefficients.
    pub q: CVector,
    /// Receiver pressures.
    pub p: CVector,
    pub method: SolveMethod,
    /// `|q - A q - B x| / |B x|`.
    pub residual_norm: f64,
    /// 1-norm condition estimate of `I - A` (direct solves only).
    pub condition: Option<f64>,
    pub near_singular: bool,
}

/// Receiver pressure split by scattering order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringDecomposition {
    /// `[D x, C B x, C A B x, ..., C A^K B x]`.
    pub terms: Vec<CVector>,
    /// Running sums of `terms`; the last entry is the Neumann receiver pressure.
    pub cumulative: Vec<CVector>,
}

fn norm(v: &CVector) -> f64 {
    v.norm()
}

fn residual(ops: &OperatorSet, q: &CVector, x: Complex) -> f64 {
    let bx = &ops.b * x;
    let r = q - &ops.a * q - &bx;
    let denom = norm(&bx);
    if denom == 0.0 {
        norm(&r)
    } else {
        norm(&r) / denom
    }
}

fn system_matrix(a: &CMatrix) -> CMatrix {
    CMatrix::identity(a.nrows(), a.ncols()) - a
}

/// LU factorization of `I - A` with helpers for adjoint solves, condition estimation
/// and the smallest singular value.
pub struct Factorization {
    lu: LU<Complex, Dyn, Dyn>,
    l: CMatrix,
    u: CMatrix,
    perm_forward: Vec<usize>,
    one_norm: f64,
}

impl Factorization {
    pub fn new(a: &CMatrix) -> Self {
        let m = system_matrix(a);
        let one_norm = (0..m.ncols())
            .map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu = m.lu();
        let l = lu.l();
        let u = lu.u();
        let n = a.nrows();
        // P M = L U; recover P as an index map by permuting the identity ordering.
        let mut idx = CVector::from_fn(n, |i, _| Complex::new(i as f64, 0.0));
        lu.p().permute_rows(&mut idx);
        let perm_forward = idx.iter().map(|v| v.re as usize).collect();
        Self {
            lu,
            l,
            u,
            perm_forward,
            one_norm,
        }
    }

    /// Solves `(I - A) y = rhs`.
    pub fn solve(&self, rhs: &CVector) -> Option<CVector> {
        self.lu.solve(rhs)
    }

    /// Solves `(I - A)^H y = rhs`.
    pub fn solve_adjoint(&self, rhs: &CVector) -> Option<CVector> {
        // M = P^T L U  =>  M^H = U^H L^H P, so U^H z = rhs, L^H w = z, y = P^T w.
        let z = self.u.ad_solve_upper_triangular(rhs)?;
        let w = self.l.ad_solve_lower_triangular(&z)?;
        let mut y = CVector::zeros(w.len());
        for (i, &pi) in self.perm_forward.iter().enumerate() {
            y[pi] = w[i];
        }
        Some(y)
    }

    /// Hager-Higham estimate of `|(I - A)|_1 |(I - A)^-1|_1`.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.l.nrows();
        if n == 0 {
            return 1.0;
        }
        let mut x = CVector::from_element(n, Complex::new(1.0 / n as f64, 0.0));
        let mut estimate = 0.0;
        for _ in 0..5 {
            let Some(y) = self.solve(&x) else {
                return f64::INFINITY;
            };
            let y_norm: f64 = y.iter().map(|v| v.norm()).sum();
            if !y_norm.is_finite() {
                return f64::INFINITY;
            }
            if y_norm <= estimate {
                break;
            }
            estimate = y_norm;
            let sign = y.map(|v| {
                if v.norm() > 0.0 {
                    v / v.norm()
                } else {
                    Complex::new(1.0, 0.0)
                }
            });
            let Some(z) = self.solve_adjoint(&sign) else {
                return f64::INFINITY;
            };
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let zx: f64 = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= zx {
                break;
            }
            x = CVector::zeros(n);
            x[j] = Complex::new(1.0, 0.0);
        }
        estimate * self.one_norm
    }

    /// Smallest singular value of `I - A` by inverse iteration on `(M^H M)^-1`.
    pub fn min_singular_value(&self, tol: f64, max_iters: usize) -> f64 {
        let n = self.l.nrows();
        if n == 0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x51_6d_a1);
        let mut x = CVector::from_fn(n, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        x /= Complex::new(x.norm(), 0.0);
        let mut previous = f64::INFINITY;
        let mut lambda = 0.0;
        for _ in 0..max_iters {
            let Some(y) = self.solve(&x) else { return 0.0 };
            let Some(z) = self.solve_adjoint(&y) else {
                return 0.0;
            };
            lambda = z.norm();
            if !(lambda.is_finite()) || lambda == 0.0 {
                return 0.0;
            }
            x = z / Complex::new(lambda, 0.0);
            let sigma = 1.0 / lambda.sqrt();
            if (sigma - previous).abs() <= tol * sigma {
                return sigma;
            }
            previous = sigma;
        }
        1.0 / lambda.sqrt()
    }
}

/// Solves `(I - A) q = B x` by LU with partial pivoting, then `p = C q + D x`.
pub fn solve_direct(ops: &OperatorSet, x: Complex) -> Result<StateSolution> {
    solve_direct_factored(ops, x).map(|(sol, _)| sol)
}

/// As [`solve_direct`], also returning the factorization for further diagnostics.
pub fn solve_direct_factored(
    ops: &OperatorSet,
    x: Complex,
) -> Result<(StateSolution, Factorization)> {
    let fact = Factorization::new(&ops.a);
    let bx = &ops.b * x;
    let q = fact.solve(&bx).ok_or_else(|| Error::Solve {
        frequency_hz: ops.s.frequency_hz(),
        reason: "I - A is exactly singular".into(),
    })?;
    let p = &ops.c * &q + &ops.d * x;
    let condition = fact.condition_estimate();
    let solution = StateSolution {
        s: ops.s,
        residual_norm: residual(ops, &q, x),
        q,
        p,
        method: SolveMethod::Direct,
        condition: Some(condition),
        near_singular: !(condition <= NEAR_SINGULAR_CONDITION),
    };
    Ok((solution, fact))
}

/// Iterates `v_0 = B, v_{k+1} = A v_k` without forming matrix powers.
struct KrylovSequence<'a> {
    a: &'a CMatrix,
    next: Option<CVector>,
}

impl<'a> KrylovSequence<'a> {
    fn new(a: &'a CMatrix, b: &CVector) -> Self {
        Self {
            a,
            next: Some(b.clone()),
        }
    }
}

impl Iterator for KrylovSequence<'_> {
    type Item = CVector;

    fn next(&mut self) -> Option<CVector> {
        let v = self.next.take()?;
        self.next = Some(self.a * &v);
        Some(v)
    }
}

/// Truncated Neumann series `q = sum_{k=0..K} A^k B x`, with the per-order receiver
/// contributions retained. Aborts when `|A^k B|` grows for [`DIVERGENCE_WINDOW`]
/// consecutive orders.
pub fn solve_neumann(
    ops: &OperatorSet,
    x: Complex,
    max_order: usize,
) -> Result<(StateSolution, ScatteringDecomposition)> {
    let n = ops.n();
    let mut q_unit = CVector::zeros(n);
    let direct = &ops.d * x;
    let mut terms = vec![direct.clone()];
    let mut cumulative = vec![direct];
    let mut growth = 0usize;
    let mut previous = f64::INFINITY;
    for (k, v) in KrylovSequence::new(&ops.a, &ops.b)
        .take(max_order + 1)
        .enumerate()
    {
        let size = norm(&v);
        if size > previous {
            growth += 1;
            if growth >= DIVERGENCE_WINDOW {
                let (rho, _) = spectral_radius(&ops.a, 1e-6, 500);
                return Err(Error::Divergence {
                    order: k,
                    window: DIVERGENCE_WINDOW,
                    spectral_radius: rho,
                });
            }
        } else {
            growth = 0;
        }
        previous = size;
        q_unit += &v;
        let term = (&ops.c * &v) * x;
        let sum = cumulative.last().expect("non-empty") + &term;
        terms.push(term);
        cumulative.push(sum);
    }
    let q = q_unit * x;
    let p = cumulative.last().expect("non-empty").clone();
    let solution = StateSolution {
        s: ops.s,
        residual_norm: residual(ops, &q, x),
        q,
        p,
        method: SolveMethod::Neumann(max_order),
        condition: None,
        near_singular: false,
    };
    Ok((solution, ScatteringDecomposition { terms, cumulative }))
}

/// Dispatches on `method`.
pub fn solve(ops: &OperatorSet, x: Complex, method: SolveMethod) -> Result<StateSolution> {
    match method {
        SolveMethod::Direct => solve_direct(ops, x),
        SolveMethod::Neumann(k) => solve_neumann(ops, x, k).map(|(s, _)| s),
    }
}

/// Power-iteration estimate of the largest eigenvalue modulus of `a`, with a
/// convergence flag.
pub fn spectral_radius(a: &CMatrix, tol: f64, max_iters: usize) -> (f64, bool) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "spectral radius needs a square matrix");
    if n == 0 {
        return (0.0, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut v = CVector::from_fn(n, |_, _| {
        Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    v /= Complex::new(v.norm(), 0.0);
    let mut estimate = f64::NAN;
    for _ in 0..max_iters {
        let w = a * &v;
        let next = w.norm();
        if next == 0.0 {
            return (0.0, true);
        }
        if (next - estimate).abs() <= tol * next {
            return (next, true);
        }
        estimate = next;
        v = w / Complex::new(next, 0.0);
    }
    (estimate, false)
}

/// `[C B, C A B, ..., C A^{K-1} B]`.
pub fn markov_parameters(ops: &OperatorSet, count: usize) -> Result<Vec<CVector>> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "need at least one Markov parameter".into(),
        ));
    }
    Ok(KrylovSequence::new(&ops.a, &ops.b)
        .take(count)
        .map(|v| &ops.c * v)
        .collect())
}

/// Numerical rank from singular values, threshold `sigma_max * 1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

pub fn rank_report(m: &CMatrix) -> RankReport {
    let mut singular_values: Vec<f64> = if m.is_empty() {
        Vec::new()
    } else {
        m.clone().singular_values().iter().copied().collect()
    };
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let threshold = singular_values.first().copied().unwrap_or(0.0) * 1e-10;
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();
    RankReport {
        singular_values,
        rank,
    }
}

/// Stacked `[C; C A; ...; C A^{K-1}]`, `(K M) x N`.
pub fn observability_matrix(ops: &OperatorSet, blocks: usize) -> Result<(CMatrix, RankReport)> {
    if blocks == 0 {
        return Err(Error::InvalidParameter(
            "observability matrix needs K >= 1".into(),
        ));
    }
    let (m, n) = (ops.m(), ops.n());
    let mut out = CMatrix::zeros(blocks * m, n);
    let mut block = ops.c.clone();
    for k in 0..blocks {
        out.rows_mut(k * m, m).copy_from(&block);
        if k + 1 < blocks {
            block = &block * &ops.a;
        }
    }
    let report = rank_report(&out);
    Ok((out, report))
}

/// `[B, A B, ..., A^{K-1} B]`, `N x K`.
pub fn controllability_matrix(ops: &OperatorSet, blocks: usize) -> Result<(CMatrix, RankReport)> {
    if blocks == 0 {
        return Err(Error::InvalidParameter(
            "controllability matrix needs K >= 1".into(),
        ));
    }
    let columns: Vec<CVector> = KrylovSequence::new(&ops.a, &ops.b).take(blocks).collect();
    let out = CMatrix::from_columns(&columns);
    let report = rank_report(&out);
    Ok((out, report))
}

/// Default diagnostic depth: N, capped at 256.
pub fn default_diagnostic_order(n: usize) -> usize {
    n.clamp(1, 256)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn random_ops(n: usize, m: usize, scale: f64, seed: u64) -> OperatorSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let a = CMatrix::from_fn(n, n, |_, _| r() * (scale / n as f64));
        let b = CVector::from_fn(n, |_, _| r());
        let cm = CMatrix::from_fn(m, n, |_, _| r());
        let d = CVector::from_fn(m, |_, _| r());
        OperatorSet::from_parts(LaplacePoint::from_frequency(100.0), a, b, cm, d).unwrap()
    }

    #[test]
    fn zero_scattering_limit() {
        let mut ops = random_ops(6, 2, 1.0, 1);
        ops.a = CMatrix::zeros(6, 6);
        let x = c(0.7, -0.2);
        let sol = solve_direct(&ops, x).unwrap();
        assert!((&sol.q - &ops.b * x).norm() < 1e-15);
        let expected = (&ops.c * &ops.b + &ops.d) * x;
        assert!((&sol.p - expected).norm() < 1e-14);
        assert!(sol.residual_norm < 1e-15);
    }

    #[test]
    fn zero_excitation() {
        let ops = random_ops(5, 3, 0.5, 2);
        let sol = solve_direct(&ops, c(0.0, 0.0)).unwrap();
        assert!(sol.q.iter().all(|v| v.norm() == 0.0));
        assert!(sol.p.iter().all(|v| v.norm() == 0.0));
        let (neu, _) = solve_neumann(&ops, c(0.0, 0.0), 10).unwrap();
        assert!(neu.p.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn neumann_order_zero() {
        let ops = random_ops(5, 2, 0.5, 3);
        let x = c(1.0, 0.0);
        let (sol, dec) = solve_neumann(&ops, x, 0).unwrap();
        let expected = &ops.c * &ops.b + &ops.d;
        assert!((&sol.p - expected).norm() < 1e-14);
        assert_eq!(dec.terms.len(), 2);
    }

    #[test]
    fn neumann_matches_direct_for_contraction() {
        let ops = random_ops(20, 3, 0.6, 4);
        let x = c(0.3, 0.9);
        let direct = solve_direct(&ops, x).unwrap();
        assert!(direct.residual_norm < 1e-12);
        let (rho, converged) = spectral_radius(&ops.a, 1e-10, 5000);
        assert!(converged && rho < 0.9);
        let (neu, dec) = solve_neumann(&ops, x, 80).unwrap();
        let err = (&neu.p - &direct.p).norm() / direct.p.norm();
        assert!(err < 1e-10, "{err}");
        assert_eq!(dec.cumulative.last().unwrap(), &neu.p);
        for k in 0..dec.terms.len() {
            let sum = dec.terms[..=k]
                .iter()
                .skip(1)
                .fold(dec.terms[0].clone(), |acc, t| acc + t);
            assert_eq!(sum, dec.cumulative[k]);
        }
    }

    #[test]
    fn neumann_divergence_is_reported() {
        let n = 4;
        let a = CMatrix::from_diagonal(&CVector::from_element(n, c(1.5, 0.0)));
        let ops = OperatorSet::from_parts(
            LaplacePoint::from_frequency(10.0),
            a,
            CVector::from_element(n, c(1.0, 0.0)),
            CMatrix::from_element(1, n, c(1.0, 0.0)),
            CVector::from_element(1, c(1.0, 0.0)),
        )
        .unwrap();
        match solve_neumann(&ops, c(1.0, 0.0), 40) {
            Err(Error::Divergence {
                spectral_radius,
                order,
                ..
            }) => {
                assert!((spectral_radius - 1.5).abs() < 1e-6);
                assert_eq!(order, DIVERGENCE_WINDOW);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn spectral_radius_known_spectra() {
        let half = CMatrix::identity(7, 7) * c(0.5, 0.0);
        let (rho, ok) = spectral_radius(&half, 1e-6, 500);
        assert!(ok && (rho - 0.5).abs() < 1e-6);
        let (rho, ok) = spectral_radius(&CMatrix::zeros(4, 4), 1e-6, 500);
        assert!(ok && rho == 0.0);
        let nil = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        let (rho, _) = spectral_radius(&nil, 1e-6, 500);
        assert!(rho <= 1e-6);
        let diag = CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(0.2, 0.0),
            c(0.0, -0.7),
            c(0.1, 0.1),
        ]));
        let (rho, ok) = spectral_radius(&diag, 1e-10, 2000);
        assert!(ok && (rho - 0.7).abs() < 1e-8);
    }

    #[test]
    fn markov_identities() {
        let ops = random_ops(8, 2, 0.7, 5);
        let markov = markov_parameters(&ops, 6).unwrap();
        assert_eq!(markov[0], &ops.c * &ops.b);
        let x = c(1.0, 0.0);
        let (sol, _) = solve_neumann(&ops, x, 5).unwrap();
        let sum = markov.iter().fold(&ops.d * x, |acc, mk| acc + mk * x);
        assert_eq!(sum, sol.p);
        assert!(markov_parameters(&ops, 0).is_err());

        // scalar system
        let scalar = OperatorSet::from_parts(
            LaplacePoint::from_frequency(1.0),
            CMatrix::from_element(1, 1, c(0.5, 0.0)),
            CVector::from_element(1, c(2.0, 0.0)),
            CMatrix::from_element(1, 1, c(3.0, 0.0)),
            CVector::from_element(1, c(0.0, 0.0)),
        )
        .unwrap();
        let mk = markov_parameters(&scalar, 4).unwrap();
        let expected = [6.0, 3.0, 1.5, 0.75];
        for (v, e) in mk.iter().zip(expected) {
            assert_eq!(v[0], c(e, 0.0));
        }
    }

    #[test]
    fn observability_and_controllability() {
        let ops = random_ops(6, 2, 0.8, 6);
        let (o1, _) = observability_matrix(&ops, 1).unwrap();
        assert_eq!(o1, ops.c);
        let (ctl1, _) = controllability_matrix(&ops, 1).unwrap();
        assert_eq!(ctl1.column(0), ops.b.column(0));

        let k = 4;
        let markov = markov_parameters(&ops, k).unwrap();
        let (obs, _) = observability_matrix(&ops, k).unwrap();
        let (ctl, _) = controllability_matrix(&ops, k).unwrap();
        for (i, mk) in markov.iter().enumerate() {
            let block = obs.rows(i * ops.m(), ops.m()) * &ops.b;
            assert!((block - mk).norm() <= 1e-13 * mk.norm());
            let col = &ops.c * ctl.column(i);
            assert_eq!(&col, mk);
        }
    }

    #[test]
    fn rank_of_constructed_examples() {
        // distinct diagonal A, full C: observability rank min(KM, N)
        let n = 5;
        let a = CMatrix::from_diagonal(&CVector::from_fn(n, |i, _| c(0.1 + 0.15 * i as f64, 0.0)));
        let cm = CMatrix::from_element(1, n, c(1.0, 0.0));
        let ops = OperatorSet::from_parts(
            LaplacePoint::from_frequency(1.0),
            a,
            CVector::from_element(n, c(1.0, 0.0)),
            cm,
            CVector::from_element(1, c(0.0, 0.0)),
        )
        .unwrap();
        for k in 1..=7 {
            let (_, report) = observability_matrix(&ops, k).unwrap();
            assert_eq!(report.rank, k.min(n));
        }

        // shift matrix with B = e1: columns e1..eK
        let n = 6;
        let shift = CMatrix::from_fn(
            n,
            n,
            |i, j| if i == j + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) },
        );
        let mut e1 = CVector::zeros(n);
        e1[0] = c(1.0, 0.0);
        let ops = OperatorSet::from_parts(
            LaplacePoint::from_frequency(1.0),
            shift,
            e1,
            CMatrix::zeros(1, n),
            CVector::zeros(1),
        )
        .unwrap();
        let (ctl, report) = controllability_matrix(&ops, 4).unwrap();
        assert_eq!(report.rank, 4);
        for j in 0..4 {
            for i in 0..n {
                assert_eq!(ctl[(i, j)], if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
            }
        }
    }

    #[test]
    fn factorization_diagnostics_match_svd() {
        let ops = random_ops(12, 1, 2.0, 7);
        let fact = Factorization::new(&ops.a);
        let m = system_matrix(&ops.a);
        let sv = m.clone().singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let est = fact.min_singular_value(1e-12, 2000);
        assert!((est - smin).abs() < 1e-8 * smin.max(1.0), "{est} vs {smin}");

        let inv = m.clone().try_inverse().unwrap();
        let one = |x: &CMatrix| {
            (0..x.ncols())
                .map(|j| x.column(j).iter().map(|v| v.norm()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let exact = one(&m) * one(&inv);
        let cond = fact.condition_estimate();
        assert!(
            cond <= exact * (1.0 + 1e-12) && cond >= exact / 10.0,
            "{cond} vs {exact}"
        );

        let rhs = CVector::from_fn(12, |i, _| c(i as f64, 1.0));
        let y = fact.solve_adjoint(&rhs).unwrap();
        assert!((m.adjoint() * y - rhs).norm() < 1e-10);
    }

    #[test]
    fn conjugate_inputs_give_conjugate_solutions() {
        let ops = random_ops(10, 2, 0.9, 8);
        let conj = OperatorSet::from_parts(
            ops.s.conj(),
            ops.a.map(|v| v.conj()),
            ops.b.map(|v| v.conj()),
            ops.c.map(|v| v.conj()),
            ops.d.map(|v| v.conj()),
        )
        .unwrap();
        let a = solve_direct(&ops, c(1.0, 0.0)).unwrap();
        let b = solve_direct(&conj, c(1.0, 0.0)).unwrap();
        assert!((a.p.map(|v| v.conj()) - b.p).norm() <= 1e-12 * a.p.norm());
    }
}
