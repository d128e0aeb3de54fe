//! One-ring spatial correlation and correlated Rayleigh channel draws.
//!
//! For a uniform linear array with element spacing `d` (in wavelengths), a user
//! whose signal arrives uniformly over `[phi - dphi/2, phi + dphi/2]` has
//!
//! ```text
//! Theta[j, i] = a^2 / dphi * int exp(i 2 pi d (j - i) cos(t)) dt
//! ```
//!
//! The matrix is Hermitian Toeplitz, so only the `N` lags `j - i >= 0` are
//! integrated. Channels are `h = Theta^{1/2} z` with `z ~ CN(0, I)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::quadrature::{integrate_adaptive, AdaptiveRule};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Angular footprint and pathloss of one user as seen from the array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeGeometry {
    /// Mean angle of arrival in radians, broadside at `pi / 2`.
    pub phi_center: f64,
    /// Full width of the arrival interval in radians.
    pub delta_phi: f64,
    /// Large-scale gain `a^2`.
    pub pathloss_amp_sq: f64,
}

impl UeGeometry {
    pub fn new(phi_center: f64, delta_phi: f64, pathloss_amp_sq: f64) -> Result<Self> {
        if !(delta_phi > 0.0 && delta_phi <= PI) {
            return Err(Error::InvalidArgument(format!(
                "angular spread {delta_phi} must lie in (0, pi]"
            )));
        }
        if !(0.0..=PI).contains(&phi_center) {
            return Err(Error::InvalidArgument(format!(
                "mean angle {phi_center} must lie in [0, pi]"
            )));
        }
        if !(pathloss_amp_sq > 0.0 && pathloss_amp_sq.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pathloss {pathloss_amp_sq} must be positive"
            )));
        }
        Ok(UeGeometry {
            phi_center,
            delta_phi,
            pathloss_amp_sq,
        })
    }
}

/// Hermitian PSD correlation matrix with a lazily computed square root.
#[derive(Debug)]
pub struct CorrelationMatrix {
    theta: CMatrix,
    sqrt_theta: OnceLock<CMatrix>,
}

impl Clone for CorrelationMatrix {
    fn clone(&self) -> Self {
        let sqrt_theta = OnceLock::new();
        if let Some(s) = self.sqrt_theta.get() {
            let _ = sqrt_theta.set(s.clone());
        }
        CorrelationMatrix {
            theta: self.theta.clone(),
            sqrt_theta,
        }
    }
}

impl CorrelationMatrix {
    /// Wraps an arbitrary Hermitian matrix (symmetrized on entry).
    pub fn from_matrix(theta: CMatrix) -> Result<Self> {
        if !theta.is_square() {
            return Err(Error::InvalidArgument(format!(
                "correlation matrix must be square, got {}x{}",
                theta.nrows(),
                theta.ncols()
            )));
        }
        Ok(CorrelationMatrix {
            theta: crate::linalg::hermitian_part(&theta),
            sqrt_theta: OnceLock::new(),
        })
    }

    pub fn theta(&self) -> &CMatrix {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    /// `Theta^{1/2}`, computed on first use.
    pub fn sqrt_theta(&self) -> Result<&CMatrix> {
        if let Some(s) = self.sqrt_theta.get() {
            return Ok(s);
        }
        let s = matrix_sqrt_psd(&self.theta)?;
        Ok(self.sqrt_theta.get_or_init(|| s))
    }
}

/// Builds `Theta` for one user from the one-ring model.
pub fn build_correlation_matrix(
    geom: &UeGeometry,
    spacing_over_wavelength: f64,
    n_antennas: usize,
) -> Result<CorrelationMatrix> {
    build_correlation_matrix_with(geom, spacing_over_wavelength, n_antennas, AdaptiveRule::default())
}

/// As [`build_correlation_matrix`] with an explicit quadrature rule.
pub fn build_correlation_matrix_with(
    geom: &UeGeometry,
    spacing_over_wavelength: f64,
    n_antennas: usize,
    rule: AdaptiveRule,
) -> Result<CorrelationMatrix> {
    if n_antennas == 0 {
        return Err(Error::InvalidArgument("need at least one antenna".into()));
    }
    if !(spacing_over_wavelength > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "antenna spacing {spacing_over_wavelength} must be positive"
        )));
    }
    let lags = one_ring_lags(geom, spacing_over_wavelength, n_antennas, rule)?;
    let a2 = geom.pathloss_amp_sq;
    let theta = CMatrix::from_fn(n_antennas, n_antennas, |j, i| {
        if j >= i {
            lags[j - i] * a2
        } else {
            lags[i - j].conj() * a2
        }
    });
    CorrelationMatrix::from_matrix(theta)
}

/// Normalized lag correlations `c[m] = 1/dphi * int exp(i 2 pi d m cos t) dt`
/// for `m = 0..n`. `c[0]` is exactly one.
fn one_ring_lags(
    geom: &UeGeometry,
    spacing: f64,
    n: usize,
    rule: AdaptiveRule,
) -> Result<Vec<C64>> {
    let lo = geom.phi_center - geom.delta_phi / 2.0;
    let hi = geom.phi_center + geom.delta_phi / 2.0;
    let k = 2.0 * PI * spacing;
    let integrand = |t: f64, out: &mut [C64]| {
        let step = C64::from_polar(1.0, k * t.cos());
        let mut acc = C64::new(1.0, 0.0);
        for v in out.iter_mut() {
            *v = acc;
            acc *= step;
        }
    };
    let mut lags = integrate_adaptive(integrand, lo, hi, n, rule)?;
    for v in lags.iter_mut() {
        *v /= geom.delta_phi;
    }
    lags[0] = C64::new(1.0, 0.0);
    Ok(lags)
}

/// Hermitian square root `M` of a PSD matrix, so `M M^H = theta`.
///
/// Eigenvalues below zero are clipped; a warning is logged if any clipped
/// eigenvalue is below `-1e-8` times the largest one.
pub fn matrix_sqrt_psd(theta: &CMatrix) -> Result<CMatrix> {
    if !theta.is_square() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let n = theta.nrows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let scale = theta.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let asym = (theta - theta.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > 1e-10 * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian (max |A - A^H| = {asym:.3e})"
        )));
    }
    let herm = crate::linalg::hermitian_part(theta);
    let eig = herm
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigendecomposition(format!("{n}x{n} Hermitian solver did not converge")))?;
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin < -1e-8 * lmax {
        log::warn!("clipping eigenvalue {lmin:.3e} (largest {lmax:.3e}) to zero");
    }
    let roots: DVector<f64> = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let mut scaled = eig.eigenvectors.clone();
    for (mut col, r) in scaled.column_iter_mut().zip(roots.iter()) {
        col *= C64::new(*r, 0.0);
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}

/// Draws `h = sqrt_theta * z` with `z` i.i.d. `CN(0, 1)`.
pub fn draw_channel<R: Rng + ?Sized>(sqrt_theta: &CMatrix, rng: &mut R) -> CVector {
    let n = sqrt_theta.ncols();
    let z = CVector::from_fn(n, |_, _| standard_complex_normal(rng));
    sqrt_theta * z
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Independent random stream for user `ue` in Monte Carlo trial `trial`.
pub fn channel_rng(seed: u64, trial: u64, ue: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 32) ^ (ue & 0xffff_ffff));
    rng
}

/// Places `k_users` at equal angular separation over `[arc_start, arc_end]`,
/// offset by half a step from each end.
pub fn place_users(
    k_users: usize,
    arc_start: f64,
    arc_end: f64,
    delta_phi: f64,
) -> Result<Vec<UeGeometry>> {
    if k_users == 0 {
        return Err(Error::InvalidArgument("need at least one user".into()));
    }
    if !(arc_end > arc_start) {
        return Err(Error::InvalidArgument(format!(
            "arc end {arc_end} must exceed arc start {arc_start}"
        )));
    }
    let step = (arc_end - arc_start) / k_users as f64;
    (0..k_users)
        .map(|k| UeGeometry::new(arc_start + (k as f64 + 0.5) * step, delta_phi, 1.0))
        .collect()
}

/// Realized channels `H = [h_1, ..., h_K]`, transmit powers and noise variance.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub h: CMatrix,
    pub powers: Vec<f64>,
    pub noise_var: f64,
}

impl ChannelSet {
    pub fn new(h: CMatrix, powers: Vec<f64>, noise_var: f64) -> Result<Self> {
        if h.ncols() != powers.len() {
            return Err(Error::InvalidArgument(format!(
                "{} channel columns but {} powers",
                h.ncols(),
                powers.len()
            )));
        }
        if powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument("powers must be finite and nonnegative".into()));
        }
        if !(noise_var > 0.0) {
            return Err(Error::InvalidArgument(format!("noise variance {noise_var} must be positive")));
        }
        Ok(ChannelSet { h, powers, noise_var })
    }

    pub fn n_antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_users(&self) -> usize {
        self.h.ncols()
    }

    pub fn check_user(&self, k: usize) -> Result<()> {
        if k >= self.n_users() {
            return Err(Error::IndexOutOfRange {
                what: "users",
                index: k,
                len: self.n_users(),
            });
        }
        Ok(())
    }

    /// Draws one realization for every user from its own `(seed, trial, ue)` stream.
    pub fn draw(
        correlations: &[CorrelationMatrix],
        powers: Vec<f64>,
        noise_var: f64,
        seed: u64,
        trial: u64,
    ) -> Result<Self> {
        let n = correlations.first().map_or(0, |c| c.dim());
        let mut h = CMatrix::zeros(n, correlations.len());
        for (k, corr) in correlations.iter().enumerate() {
            let mut rng = channel_rng(seed, trial, k as u64);
            h.set_column(k, &draw_channel(corr.sqrt_theta()?, &mut rng));
        }
        ChannelSet::new(h, powers, noise_var)
    }
}
