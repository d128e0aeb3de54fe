//! Deterministic equivalents of the sector-projected MMSE receivers.
//!
//! With `m_j` the solution of
//!
//! ```text
//! m_j = (1/N) tr(Theta_j T),   T = ((1/N) sum_j p_j Theta_j / (1 + p_j m_j) + I)^{-1}
//! ```
//!
//! the projection of user `k`'s MMSE vector onto sector `i` is approximated by
//! entry `k` of `(I - L)^{-1} b_i`, where
//!
//! ```text
//! L[k, j] = (1/N^2) tr(Theta_k T Theta_j T) p_j^2 / (1 + p_j m_j)^2
//! b_i[k]  = (1/N)   tr(Theta_k T S_i S_i^H T)
//! ```
//!
//! Both come from differentiating the perturbed fixed point
//! `m_{k,i}(z, x) = (1/N) tr(Theta_k T_i(z, x))`,
//! `T_i(z, x) = ((1/N) sum_j p_j Theta_j / (1 + p_j m_{j,i}) - x S_i S_i^H - z I)^{-1}`
//! with respect to `x` at `(z, x) = (-1, 0)`; [`perturbed_stieltjes_oracle`]
//! solves that system directly so the derivative can be checked by finite
//! differences.
//!
//! Powers here are the normalized powers: a physical power `q` applied to
//! channels with `E||h||^2 = tr(Theta)` corresponds to `p = N q`.

use nalgebra::{DMatrix, DVector};

use crate::channel_model::CorrelationMatrix;
use crate::linalg::{condition_1, hpd_inverse, spectral_radius, trace_of_hermitian_product};
use crate::sectorization::SectorSet;
use crate::{CMatrix, Error, Result, C64};

/// Controls for the Picard iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Stop when `max_j |m_j^{(t+1)} - m_j^{(t)}| < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation weight in `(0, 1]`; `1` is plain Picard.
    pub damping: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tol: 1e-10,
            max_iter: 1000,
            damping: 1.0,
        }
    }
}

/// Converged `m_bar` and the matching `T`.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub m_bar: Vec<f64>,
    pub t_matrix: CMatrix,
    pub iterations: usize,
    pub residual: f64,
}

/// Everything computed for one set of statistics.
#[derive(Debug, Clone)]
pub struct DetEqResult {
    pub m_bar: Vec<f64>,
    pub t_matrix: CMatrix,
    pub l_matrix: DMatrix<f64>,
    /// Column `i` is `b_i`.
    pub b_vectors: DMatrix<f64>,
    /// `K x S`, entry `(k, i)` approximates the exact projection of user `k` onto sector `i`.
    pub omega_bar: DMatrix<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub spectral_radius: f64,
}

fn check_inputs(thetas: &[CorrelationMatrix], powers: &[f64], n: usize) -> Result<()> {
    if thetas.len() != powers.len() {
        return Err(Error::InvalidArgument(format!(
            "{} correlation matrices but {} powers",
            thetas.len(),
            powers.len()
        )));
    }
    if let Some(t) = thetas.iter().find(|t| t.dim() != n) {
        return Err(Error::InvalidArgument(format!(
            "correlation matrix of dimension {} in a system with {n} antennas",
            t.dim()
        )));
    }
    if powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument("powers must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Inverse of `(1/N) sum_j p_j Theta_j / (1 + p_j m_j) + extra - z I`.
fn resolvent(
    thetas: &[CorrelationMatrix],
    powers: &[f64],
    m: &[f64],
    n: usize,
    z: f64,
    extra: Option<&CMatrix>,
) -> Result<CMatrix> {
    let mut a = CMatrix::identity(n, n) * C64::new(-z, 0.0);
    for ((theta, p), mj) in thetas.iter().zip(powers).zip(m) {
        if *p == 0.0 {
            continue;
        }
        let w = p / (n as f64 * (1.0 + p * mj));
        a.zip_apply(theta.theta(), |acc, t| *acc += t * w);
    }
    if let Some(e) = extra {
        a += e;
    }
    hpd_inverse(a, "fixed-point resolvent argument")
}

fn normalized_traces(thetas: &[CorrelationMatrix], t: &CMatrix, n: usize) -> Vec<f64> {
    thetas
        .iter()
        .map(|th| trace_of_hermitian_product(th.theta(), t) / n as f64)
        .collect()
}

/// Shared Picard loop for the unperturbed and perturbed systems.
fn picard(
    thetas: &[CorrelationMatrix],
    powers: &[f64],
    n: usize,
    z: f64,
    extra: Option<&CMatrix>,
    opts: FixedPointOptions,
) -> Result<FixedPoint> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping {} must lie in (0, 1]",
            opts.damping
        )));
    }
    let mut m = vec![1.0; thetas.len()];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let t = resolvent(thetas, powers, &m, n, z, extra)?;
        let next = normalized_traces(thetas, &t, n);
        residual = 0.0;
        for (cur, new) in m.iter_mut().zip(&next) {
            let upd = (1.0 - opts.damping) * *cur + opts.damping * new;
            residual = f64::max(residual, (upd - *cur).abs());
            *cur = upd;
        }
        if residual < opts.tol {
            let t_matrix = resolvent(thetas, powers, &m, n, z, extra)?;
            return Ok(FixedPoint {
                m_bar: m,
                t_matrix,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::FixedPointNotConverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// Solves the unperturbed fixed point for `m_bar` and returns `T` at the solution.
pub fn fixed_point_m(
    thetas: &[CorrelationMatrix],
    powers: &[f64],
    n: usize,
    opts: FixedPointOptions,
) -> Result<FixedPoint> {
    check_inputs(thetas, powers, n)?;
    picard(thetas, powers, n, -1.0, None, opts)
}

/// Hermitian `R^H Theta_j R` for every user, where `T = R R^H`.
fn whitened_thetas(thetas: &[CorrelationMatrix], t_matrix: &CMatrix) -> Result<Vec<CMatrix>> {
    let r = crate::linalg::cholesky(t_matrix.clone(), "T")?.l();
    let rh = r.adjoint();
    Ok(thetas
        .iter()
        .map(|th| crate::linalg::hermitian_part(&(&rh * (th.theta() * &r))))
        .collect())
}

/// Gram matrix `G[i, j] = tr(A_i A_j)` of Hermitian matrices as one real GEMM.
fn hermitian_gram(mats: &[CMatrix]) -> DMatrix<f64> {
    let k = mats.len();
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    let len = mats[0].len();
    // tr(A B) = sum conj(A) .* B = sum (re re + im im) for Hermitian A, B
    let mut v = DMatrix::<f64>::zeros(2 * len, k);
    for (j, a) in mats.iter().enumerate() {
        let mut col = v.column_mut(j);
        for (idx, z) in a.iter().enumerate() {
            col[2 * idx] = z.re;
            col[2 * idx + 1] = z.im;
        }
    }
    v.tr_mul(&v)
}

/// `L[k, j] = (1/N^2) tr(Theta_k T Theta_j T) p_j^2 / (1 + p_j m_j)^2`.
pub fn build_l_matrix(
    thetas: &[CorrelationMatrix],
    t_matrix: &CMatrix,
    m_bar: &[f64],
    powers: &[f64],
    n: usize,
) -> Result<DMatrix<f64>> {
    check_inputs(thetas, powers, n)?;
    let whitened = whitened_thetas(thetas, t_matrix)?;
    Ok(l_from_whitened(&whitened, m_bar, powers, n))
}

fn l_from_whitened(whitened: &[CMatrix], m_bar: &[f64], powers: &[f64], n: usize) -> DMatrix<f64> {
    let mut l = hermitian_gram(whitened);
    let nf = n as f64;
    for (j, (p, m)) in powers.iter().zip(m_bar).enumerate() {
        let w = p * p / ((1.0 + p * m) * (1.0 + p * m) * nf * nf);
        l.column_mut(j).scale_mut(w);
    }
    l
}

/// `b[k] = (1/N) tr(Theta_k T S S^H T)` for one sector basis `S`.
pub fn build_b_vector(
    thetas: &[CorrelationMatrix],
    t_matrix: &CMatrix,
    sector_basis: &CMatrix,
    n: usize,
) -> DVector<f64> {
    let w = t_matrix * sector_basis;
    DVector::from_iterator(
        thetas.len(),
        thetas.iter().map(|th| quadratic_trace(th.theta(), &w) / n as f64),
    )
}

/// `tr(W^H Theta W)`.
fn quadratic_trace(theta: &CMatrix, w: &CMatrix) -> f64 {
    let tw = theta * w;
    w.iter().zip(tw.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// All `b_i` at once as the columns of a `K x S` matrix.
fn build_b_matrix(thetas: &[CorrelationMatrix], t_matrix: &CMatrix, sectors: &SectorSet) -> DMatrix<f64> {
    let n = sectors.n_antennas();
    let w = t_matrix * sectors.dft();
    let mut b = DMatrix::zeros(thetas.len(), sectors.n_sectors());
    for (k, th) in thetas.iter().enumerate() {
        let tw = th.theta() * &w;
        for (i, r) in sectors.ranges().iter().enumerate() {
            let mut acc = 0.0;
            for c in r.clone() {
                acc += w.column(c).dotc(&tw.column(c)).re;
            }
            b[(k, i)] = acc / n as f64;
        }
    }
    b
}

/// Solves `(I - L) omega_i = b_i` for every column of `b`, with one LU factorization.
pub fn solve_omega_bar(l_matrix: &DMatrix<f64>, b_vectors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = l_matrix.nrows();
    if !l_matrix.is_square() || b_vectors.nrows() != k {
        return Err(Error::InvalidArgument(format!(
            "L is {}x{} but b has {} rows",
            l_matrix.nrows(),
            l_matrix.ncols(),
            b_vectors.nrows()
        )));
    }
    let rho = spectral_radius(l_matrix);
    if !(rho < 1.0) {
        return Err(Error::SpectralRadius(rho));
    }
    let a = DMatrix::<f64>::identity(k, k) - l_matrix;
    match condition_1(&a) {
        Some(c) if c <= 1e12 => {}
        Some(c) => return Err(Error::Singular(format!("I - L has condition number {c:.3e}"))),
        None => return Err(Error::Singular("I - L is singular".into())),
    }
    a.lu()
        .solve(b_vectors)
        .ok_or_else(|| Error::Singular("LU solve of I - L failed".into()))
}

/// Same as [`solve_omega_bar`] for a list of right-hand sides.
pub fn solve_omega_bar_vectors(l_matrix: &DMatrix<f64>, b_vectors: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let k = l_matrix.nrows();
    let mut b = DMatrix::zeros(k, b_vectors.len());
    for (i, v) in b_vectors.iter().enumerate() {
        if v.len() != k {
            return Err(Error::InvalidArgument(format!("b_{i} has length {}, expected {k}", v.len())));
        }
        b.set_column(i, v);
    }
    solve_omega_bar(l_matrix, &b)
}

/// Runs the whole chain: fixed point, `L`, every `b_i`, and the linear solves.
pub fn deterministic_equivalents(
    thetas: &[CorrelationMatrix],
    powers: &[f64],
    sectors: &SectorSet,
    opts: FixedPointOptions,
) -> Result<DetEqResult> {
    let n = sectors.n_antennas();
    let fp = fixed_point_m(thetas, powers, n, opts)?;
    let whitened = whitened_thetas(thetas, &fp.t_matrix)?;
    let l_matrix = l_from_whitened(&whitened, &fp.m_bar, powers, n);
    drop(whitened);
    let b_vectors = build_b_matrix(thetas, &fp.t_matrix, sectors);
    let rho = spectral_radius(&l_matrix);
    let omega_bar = solve_omega_bar(&l_matrix, &b_vectors)?.map(|v| v.max(0.0));
    Ok(DetEqResult {
        m_bar: fp.m_bar,
        t_matrix: fp.t_matrix,
        l_matrix,
        b_vectors,
        omega_bar,
        iterations: fp.iterations,
        residual: fp.residual,
        spectral_radius: rho,
    })
}

/// Solves the sector-perturbed fixed point `m_{k,i}(z, x)` for all users.
///
/// Requires `x <= 0` and `z < 0`, which keeps the resolvent argument positive
/// definite.
pub fn perturbed_stieltjes_oracle(
    thetas: &[CorrelationMatrix],
    powers: &[f64],
    sector_basis: &CMatrix,
    x: f64,
    z: f64,
    opts: FixedPointOptions,
) -> Result<Vec<f64>> {
    let n = sector_basis.nrows();
    check_inputs(thetas, powers, n)?;
    if !(x <= 0.0) {
        return Err(Error::InvalidArgument(format!("perturbation x = {x} must be <= 0")));
    }
    if !(z < 0.0) {
        return Err(Error::InvalidArgument(format!("spectral argument z = {z} must be < 0")));
    }
    let extra = if x == 0.0 {
        None
    } else {
        Some(sector_basis * sector_basis.adjoint() * C64::new(-x, 0.0))
    };
    Ok(picard(thetas, powers, n, z, extra.as_ref(), opts)?.m_bar)
}
