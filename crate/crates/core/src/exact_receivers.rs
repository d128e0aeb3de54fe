//! Full-dimension reference receivers and the exact sector projections.
//!
//! The per-user functions ([`mmse_receiver`], [`exact_projection_omega`]) solve
//! their own `N x N` system and serve as the reference. The batch functions
//! ([`mmse_receivers`], [`exact_omega_matrix`]) factor the full covariance
//! `C = sum_j p_j h_j h_j^H + s2 I` once and recover every leave-one-out
//! solve by the Sherman-Morrison identity
//! `C_k^{-1} h_k = C^{-1} h_k / (1 - p_k h_k^H C^{-1} h_k)`.

use nalgebra::DMatrix;

use crate::channel_model::ChannelSet;
use crate::linalg::cholesky;
use crate::sectorization::SectorSet;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Per-user receive vectors with their SINR and rate.
#[derive(Debug, Clone, Default)]
pub struct ReceiverReport {
    pub receivers: Vec<CVector>,
    pub sinr: Vec<f64>,
    pub rate: Vec<f64>,
}

impl ReceiverReport {
    pub fn from_sinr(receivers: Vec<CVector>, sinr: Vec<f64>) -> Self {
        let rate = sinr.iter().map(|s| rate(*s)).collect();
        ReceiverReport {
            receivers,
            sinr,
            rate,
        }
    }

    pub fn mean_rate(&self) -> f64 {
        if self.rate.is_empty() {
            return 0.0;
        }
        self.rate.iter().sum::<f64>() / self.rate.len() as f64
    }
}

/// `sum_{j != k} p_j h_j h_j^H + noise I`.
fn interference_plus_noise(ch: &ChannelSet, k: usize, noise: f64) -> CMatrix {
    let n = ch.n_antennas();
    let mut c = CMatrix::identity(n, n) * C64::new(noise, 0.0);
    for (j, (h, p)) in ch.h.column_iter().zip(&ch.powers).enumerate() {
        if j != k && *p != 0.0 {
            c.gerc(C64::new(*p, 0.0), &h, &h, C64::new(1.0, 0.0));
        }
    }
    c
}

/// `(sum_{j != k} p_j h_j h_j^H + s2 I)^{-1} h_k` by a Cholesky solve.
pub fn mmse_receiver(ch: &ChannelSet, k: usize) -> Result<CVector> {
    ch.check_user(k)?;
    let c = interference_plus_noise(ch, k, ch.noise_var);
    let chol = cholesky(c, "interference-plus-noise covariance")?;
    Ok(chol.solve(&ch.h.column(k).into_owned()))
}

/// Column `k` of `H`.
pub fn matched_filter(ch: &ChannelSet, k: usize) -> Result<CVector> {
    ch.check_user(k)?;
    Ok(ch.h.column(k).into_owned())
}

/// `p_k |w^H h_k|^2 / (sum_{j != k} p_j |w^H h_j|^2 + s2 ||w||^2)`.
pub fn sinr(w: &CVector, ch: &ChannelSet, k: usize) -> Result<f64> {
    ch.check_user(k)?;
    let wn = w.norm_squared();
    if wn == 0.0 {
        return Err(Error::ZeroReceiver);
    }
    let gains = ch.h.ad_mul(w);
    Ok(sinr_from_gains(gains.as_slice(), &ch.powers, k, ch.noise_var * wn))
}

/// SINR given `g_j = h_j^H w` (or its conjugate) and the scaled noise term.
pub(crate) fn sinr_from_gains(gains: &[C64], powers: &[f64], k: usize, noise_term: f64) -> f64 {
    let mut interference = noise_term;
    for (j, (g, p)) in gains.iter().zip(powers).enumerate() {
        if j != k {
            interference += p * g.norm_sqr();
        }
    }
    powers[k] * gains[k].norm_sqr() / interference
}

/// Spectral efficiency in b/s/Hz.
pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Leave-one-out solves `C_k^{-1} h_k` for all users from one factorization of
/// `C = H P H^H + noise I`.
fn leave_one_out_solves(ch: &ChannelSet, noise: f64) -> Result<CMatrix> {
    let n = ch.n_antennas();
    let mut scaled = ch.h.clone();
    for (mut col, p) in scaled.column_iter_mut().zip(&ch.powers) {
        col *= C64::new(*p, 0.0);
    }
    let mut c = &scaled * ch.h.adjoint();
    for d in 0..n {
        c[(d, d)] += noise;
    }
    let chol = cholesky(c, "received signal covariance")?;
    let mut x = chol.solve(&ch.h);
    for (k, mut col) in x.column_iter_mut().enumerate() {
        let quad = ch.h.column(k).dotc(&col).re;
        let denom = 1.0 - ch.powers[k] * quad;
        if !(denom > 0.0) {
            return Err(Error::Singular(format!(
                "leave-one-out update for user {k} is ill-conditioned (denominator {denom:.3e})"
            )));
        }
        col /= C64::new(denom, 0.0);
    }
    Ok(x)
}

/// MMSE receivers for all users (column `k` is user `k`'s receiver).
pub fn mmse_receivers(ch: &ChannelSet) -> Result<CMatrix> {
    leave_one_out_solves(ch, ch.noise_var)
}

/// SINR of every user with its own column of `w`.
pub fn sinr_all(w: &CMatrix, ch: &ChannelSet) -> Result<Vec<f64>> {
    // gains[j, k] = h_j^H w_k
    let gains = ch.h.ad_mul(w);
    (0..ch.n_users())
        .map(|k| {
            let wn = w.column(k).norm_squared();
            if wn == 0.0 {
                return Err(Error::ZeroReceiver);
            }
            let col: Vec<C64> = gains.column(k).iter().cloned().collect();
            Ok(sinr_from_gains(&col, &ch.powers, k, ch.noise_var * wn))
        })
        .collect()
}

/// Full-dimension MMSE for all users.
pub fn evaluate_mmse(ch: &ChannelSet) -> Result<ReceiverReport> {
    let w = mmse_receivers(ch)?;
    let sinr = sinr_all(&w, ch)?;
    Ok(ReceiverReport::from_sinr(
        w.column_iter().map(|c| c.into_owned()).collect(),
        sinr,
    ))
}

/// Matched filter for all users.
pub fn evaluate_matched_filter(ch: &ChannelSet) -> Result<ReceiverReport> {
    let sinr = sinr_all(&ch.h, ch)?;
    Ok(ReceiverReport::from_sinr(
        ch.h.column_iter().map(|c| c.into_owned()).collect(),
        sinr,
    ))
}

/// `(1/N) h_k^H Sigma_k S_i S_i^H Sigma_k h_k` with
/// `Sigma_k = (sum_{j != k} p_j h_j h_j^H + I)^{-1}`; `i` is 0-indexed.
///
/// Unit noise is used regardless of `ch.noise_var`, matching the normalization
/// of the deterministic equivalents.
pub fn exact_projection_omega(ch: &ChannelSet, sectors: &SectorSet, k: usize, i: usize) -> Result<f64> {
    ch.check_user(k)?;
    let basis = sectors.sector_basis(i)?;
    let c = interference_plus_noise(ch, k, 1.0);
    let chol = cholesky(c, "leave-one-out covariance")?;
    let v = chol.solve(&ch.h.column(k).into_owned());
    Ok(basis.ad_mul(&v).norm_squared() / ch.n_antennas() as f64)
}

/// Exact projections for every user and sector, `K x S`.
pub fn exact_omega_matrix(ch: &ChannelSet, sectors: &SectorSet) -> Result<DMatrix<f64>> {
    let n = ch.n_antennas();
    if sectors.n_antennas() != n {
        return Err(Error::InvalidArgument(format!(
            "sector set built for {} antennas, channels have {n}",
            sectors.n_antennas()
        )));
    }
    let x = leave_one_out_solves(ch, 1.0)?;
    let beams = sectors.dft().ad_mul(&x);
    let mut omega = DMatrix::zeros(ch.n_users(), sectors.n_sectors());
    for (i, r) in sectors.ranges().iter().enumerate() {
        for k in 0..ch.n_users() {
            let e: f64 = beams.column(k).rows(r.start, r.len()).norm_squared();
            omega[(k, i)] = e / n as f64;
        }
    }
    Ok(omega)
}
