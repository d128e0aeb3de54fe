//! Two-stage receivers: sector selection by thresholding the deterministic
//! equivalents, outer beamformers built from the selected DFT sectors, and
//! reduced-dimension MMSE inner receivers.

use nalgebra::DMatrix;

use crate::channel_model::ChannelSet;
use crate::exact_receivers::{sinr_from_gains, ReceiverReport};
use crate::linalg::cholesky;
use crate::sectorization::SectorSet;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Selected sectors per user.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSelection {
    /// Ascending 0-indexed sector indices for each user.
    pub selected: Vec<Vec<usize>>,
    /// Number of beams `D_k = |selected_k| * D` for each user.
    pub dims: Vec<usize>,
    pub delta: f64,
}

impl BeamSelection {
    pub fn mean_beams(&self) -> f64 {
        if self.dims.is_empty() {
            return 0.0;
        }
        self.dims.iter().sum::<usize>() as f64 / self.dims.len() as f64
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("threshold {delta} must lie in [0, 1]")));
    }
    Ok(())
}

/// Indices `j` with `row[j] >= delta * max(row)`; entries at exactly the
/// threshold are kept.
///
/// At `delta = 0` sectors with a zero projection are dropped, so the result
/// is always the set of strictly positive entries in that case.
pub fn select_sectors(omega_bar_row: &[f64], delta: f64) -> Result<Vec<usize>> {
    check_delta(delta)?;
    let max = omega_bar_row.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateRow);
    }
    let threshold = delta * max;
    Ok(omega_bar_row
        .iter()
        .enumerate()
        .filter(|(_, w)| **w >= threshold && **w > 0.0)
        .map(|(j, _)| j)
        .collect())
}

/// Applies [`select_sectors`] to every row of `omega_bar` (`K x S`).
pub fn select_all(omega_bar: &DMatrix<f64>, delta: f64, beams_per_sector: usize) -> Result<BeamSelection> {
    let selected = omega_bar
        .row_iter()
        .enumerate()
        .map(|(k, row)| {
            let row: Vec<f64> = row.iter().cloned().collect();
            select_sectors(&row, delta).map_err(|e| e.context(format!("user {k}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let dims = selected.iter().map(|s| s.len() * beams_per_sector).collect();
    Ok(BeamSelection { selected, dims, delta })
}

/// Beam (DFT column) indices covered by a sector selection, ascending.
fn beam_indices(selection: &[usize], sectors: &SectorSet) -> Result<Vec<usize>> {
    let mut idx = Vec::with_capacity(selection.len() * sectors.beams_per_sector());
    for &i in selection {
        idx.extend(sectors.range(i)?);
    }
    Ok(idx)
}

/// Outer beamformer `B_k`: the selected sector bases side by side.
pub fn build_obf(selection: &[usize], sectors: &SectorSet) -> Result<CMatrix> {
    if selection.is_empty() {
        return Err(Error::InvalidArgument("empty sector selection".into()));
    }
    let mut sorted = selection.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sectors.dft().select_columns(&beam_indices(&sorted, sectors)?))
}

/// MMSE receiver in the reduced space given the reduced channels `g = B^H H`.
fn reduced_mmse(g: &CMatrix, powers: &[f64], noise_var: f64, k: usize) -> Result<CVector> {
    let d = g.nrows();
    let mut c = CMatrix::identity(d, d) * C64::new(noise_var, 0.0);
    for (j, (col, p)) in g.column_iter().zip(powers).enumerate() {
        if j != k && *p != 0.0 {
            c.gerc(C64::new(*p, 0.0), &col, &col, C64::new(1.0, 0.0));
        }
    }
    let chol = cholesky(c, "reduced interference-plus-noise covariance")?;
    Ok(chol.solve(&g.column(k).into_owned()))
}

/// `v_k = (sum_{j != k} p_j B^H h_j h_j^H B + s2 I)^{-1} B^H h_k`.
pub fn inner_receiver(obf: &CMatrix, ch: &ChannelSet, k: usize) -> Result<CVector> {
    ch.check_user(k)?;
    if obf.nrows() != ch.n_antennas() {
        return Err(Error::InvalidArgument(format!(
            "outer beamformer has {} rows, channels have {}",
            obf.nrows(),
            ch.n_antennas()
        )));
    }
    let g = obf.ad_mul(&ch.h);
    reduced_mmse(&g, &ch.powers, ch.noise_var, k)
}

/// Two-stage receivers for a given selection. SINR is that of the effective
/// `N`-dimensional receiver `w_k = B_k v_k` against every user's full channel.
pub fn evaluate_selection(ch: &ChannelSet, sectors: &SectorSet, selection: &BeamSelection) -> Result<ReceiverReport> {
    if selection.selected.len() != ch.n_users() {
        return Err(Error::InvalidArgument(format!(
            "selection for {} users, channels for {}",
            selection.selected.len(),
            ch.n_users()
        )));
    }
    // Beam-domain channels; B_k^H h_j is a row subset of U^H h_j.
    let beams = sectors.dft().ad_mul(&ch.h);
    let mut receivers = Vec::with_capacity(ch.n_users());
    let mut sinr = Vec::with_capacity(ch.n_users());
    for (k, sel) in selection.selected.iter().enumerate() {
        if sel.is_empty() {
            return Err(Error::InvalidArgument(format!("user {k} has no selected sectors")));
        }
        let idx = beam_indices(sel, sectors)?;
        let g = beams.select_rows(&idx);
        let v = reduced_mmse(&g, &ch.powers, ch.noise_var, k)?;
        // gains_j = (B^H h_j)^H v = h_j^H w
        let gains = g.ad_mul(&v);
        let s = sinr_from_gains(gains.as_slice(), &ch.powers, k, ch.noise_var * v.norm_squared());
        receivers.push(sectors.dft().select_columns(&idx) * v);
        sinr.push(s);
    }
    Ok(ReceiverReport::from_sinr(receivers, sinr))
}

/// Selects sectors at threshold `delta` and evaluates the resulting receivers.
pub fn tsb_evaluate(
    ch: &ChannelSet,
    sectors: &SectorSet,
    omega_bar: &DMatrix<f64>,
    delta: f64,
) -> Result<(ReceiverReport, BeamSelection)> {
    if omega_bar.nrows() != ch.n_users() || omega_bar.ncols() != sectors.n_sectors() {
        return Err(Error::InvalidArgument(format!(
            "omega_bar is {}x{}, expected {}x{}",
            omega_bar.nrows(),
            omega_bar.ncols(),
            ch.n_users(),
            sectors.n_sectors()
        )));
    }
    let selection = select_all(omega_bar, delta, sectors.beams_per_sector())?;
    let report = evaluate_selection(ch, sectors, &selection)?;
    Ok((report, selection))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::{channel_rng, standard_complex_normal};
    use crate::exact_receivers::{evaluate_mmse, sinr};
    use crate::linalg::frobenius;
    use crate::sectorization::build_sectors;

    fn random_channels(n: usize, k: usize, seed: u64) -> ChannelSet {
        let mut rng = channel_rng(seed, 1, 0);
        let h = CMatrix::from_fn(n, k, |_, _| standard_complex_normal(&mut rng));
        ChannelSet::new(h, vec![2.0; k], 1.0).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(select_sectors(&[0.5, 0.04, 0.06], 0.1).unwrap(), vec![0, 2]);
        assert_eq!(select_sectors(&[0.5, 0.0, 0.06], 0.0).unwrap(), vec![0, 2]);
        assert_eq!(select_sectors(&[0.3, 0.5, 0.5, 0.1], 1.0).unwrap(), vec![1, 2]);
        // ties at the threshold are kept
        assert_eq!(select_sectors(&[1.0, 0.25, 0.2], 0.25).unwrap(), vec![0, 1]);
    }

    #[test]
    fn threshold_errors() {
        assert!(matches!(select_sectors(&[0.0, 0.0], 0.1), Err(Error::DegenerateRow)));
        assert!(select_sectors(&[1.0], 1.5).is_err());
        assert!(select_sectors(&[1.0], -0.1).is_err());
    }

    #[test]
    fn obf_columns_are_orthonormal() {
        let sectors = build_sectors(16, 4).unwrap();
        let b = build_obf(&[3, 1], &sectors).unwrap();
        assert_eq!(b.ncols(), 8);
        assert!(frobenius(&(b.adjoint() * &b - CMatrix::identity(8, 8))) < 1e-12);
        // ascending order
        assert_eq!(b.column(0), sectors.dft().column(4));
        let one = build_obf(&[2], &sectors).unwrap();
        assert_eq!(one, sectors.sector_basis(2).unwrap());
        let all = build_obf(&[0, 1, 2, 3], &sectors).unwrap();
        assert_eq!(&all, sectors.dft());
        assert!(build_obf(&[], &sectors).is_err());
    }

    #[test]
    fn scalar_inner_receiver() {
        let ch = random_channels(8, 3, 2);
        let sectors = build_sectors(8, 8).unwrap();
        let b = build_obf(&[5], &sectors).unwrap();
        let v = inner_receiver(&b, &ch, 1).unwrap();
        let g = b.ad_mul(&ch.h);
        let denom: f64 = ch.powers[0] * g[(0, 0)].norm_sqr() + ch.powers[2] * g[(0, 2)].norm_sqr() + 1.0;
        let want = g[(0, 1)] / denom;
        assert!((v[0] - want).norm() < 1e-12);
    }

    #[test]
    fn inner_receiver_normal_equations() {
        let ch = random_channels(32, 8, 3);
        let sectors = build_sectors(32, 8).unwrap();
        let b = build_obf(&[0, 2, 3, 7], &sectors).unwrap();
        for k in 0..8 {
            let v = inner_receiver(&b, &ch, k).unwrap();
            let g = b.ad_mul(&ch.h);
            let mut c = CMatrix::identity(16, 16);
            for j in (0..8).filter(|j| *j != k) {
                let col = g.column(j);
                c += col * col.adjoint() * C64::new(ch.powers[j], 0.0);
            }
            assert!((c * &v - g.column(k)).norm() < 1e-10);
        }
    }

    #[test]
    fn full_selection_matches_full_mmse() {
        let ch = random_channels(16, 6, 4);
        let sectors = build_sectors(16, 4).unwrap();
        let omega = DMatrix::from_element(6, 4, 1.0);
        let (report, sel) = tsb_evaluate(&ch, &sectors, &omega, 0.0).unwrap();
        assert!(sel.dims.iter().all(|d| *d == 16));
        let mmse = evaluate_mmse(&ch).unwrap();
        for k in 0..6 {
            assert!((report.sinr[k] - mmse.sinr[k]).abs() <= 1e-9 * mmse.sinr[k]);
        }
    }

    #[test]
    fn fast_path_matches_explicit_obf() {
        let ch = random_channels(16, 5, 5);
        let sectors = build_sectors(16, 8).unwrap();
        let sel = BeamSelection {
            selected: vec![vec![0], vec![1, 2], vec![3, 6, 7], vec![0, 5], vec![4]],
            dims: vec![2, 4, 6, 4, 2],
            delta: 0.5,
        };
        let report = evaluate_selection(&ch, &sectors, &sel).unwrap();
        for k in 0..5 {
            let b = build_obf(&sel.selected[k], &sectors).unwrap();
            let w = &b * inner_receiver(&b, &ch, k).unwrap();
            let s = sinr(&w, &ch, k).unwrap();
            assert!((report.sinr[k] - s).abs() <= 1e-10 * s);
            assert!((&report.receivers[k] - &w).norm() <= 1e-10 * w.norm());
        }
    }

    #[test]
    fn selection_shape_is_checked() {
        let ch = random_channels(8, 2, 6);
        let sectors = build_sectors(8, 4).unwrap();
        assert!(tsb_evaluate(&ch, &sectors, &DMatrix::from_element(3, 4, 1.0), 0.1).is_err());
    }
}
