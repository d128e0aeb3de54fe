//! DFT beam domain and its partition into equal contiguous sectors.

use std::ops::Range;

use crate::{CMatrix, Error, Result, C64};

/// Unitary DFT matrix, `U[n, j] = exp(-i 2 pi n j / N) / sqrt(N)`.
pub fn dft_matrix(n_antennas: usize) -> CMatrix {
    let n = n_antennas as f64;
    let scale = 1.0 / n.sqrt();
    CMatrix::from_fn(n_antennas, n_antennas, |r, c| {
        // reduce the exponent mod N first to keep the phase argument small
        let e = ((r * c) % n_antennas) as f64;
        C64::from_polar(scale, -2.0 * std::f64::consts::PI * e / n)
    })
}

/// The `N x N` DFT beams split into `S` sectors of `D = N / S` beams each.
#[derive(Debug, Clone)]
pub struct SectorSet {
    dft: CMatrix,
    ranges: Vec<Range<usize>>,
    n: usize,
    s: usize,
    d: usize,
}

impl SectorSet {
    pub fn dft(&self) -> &CMatrix {
        &self.dft
    }

    pub fn n_antennas(&self) -> usize {
        self.n
    }

    pub fn n_sectors(&self) -> usize {
        self.s
    }

    pub fn beams_per_sector(&self) -> usize {
        self.d
    }

    /// Beam indices of each sector, 0-indexed and half-open.
    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// Beam index range of sector `i` (0-indexed).
    pub fn range(&self, i: usize) -> Result<Range<usize>> {
        self.ranges.get(i).cloned().ok_or(Error::IndexOutOfRange {
            what: "sectors",
            index: i,
            len: self.s,
        })
    }

    /// The `N x D` basis of sector `i` (0-indexed).
    pub fn sector_basis(&self, i: usize) -> Result<CMatrix> {
        let r = self.range(i)?;
        Ok(self.dft.columns(r.start, r.len()).into_owned())
    }
}

/// Builds the sector partition for `n` antennas and `s` sectors.
pub fn build_sectors(n: usize, s: usize) -> Result<SectorSet> {
    if n == 0 || s == 0 || !n.is_multiple_of(s) {
        return Err(Error::InvalidArgument(format!(
            "{s} sectors do not evenly divide {n} beams"
        )));
    }
    let d = n / s;
    Ok(SectorSet {
        dft: dft_matrix(n),
        ranges: (0..s).map(|i| i * d..(i + 1) * d).collect(),
        n,
        s,
        d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    #[test]
    fn single_point_dft() {
        let u = dft_matrix(1);
        assert_eq!(u[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn dft_is_unitary() {
        for n in [2, 4, 7, 16] {
            let u = dft_matrix(n);
            let err = frobenius(&(u.adjoint() * &u - CMatrix::identity(n, n)));
            assert!(err < 1e-12, "n={n} err={err}");
            for col in u.column_iter() {
                assert!((col.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn large_geometry_sector_indices() {
        let s = build_sectors(225, 45).unwrap();
        assert_eq!(s.beams_per_sector(), 5);
        assert_eq!(s.range(1).unwrap(), 5..10);
        assert_eq!(s.range(44).unwrap(), 220..225);
    }

    #[test]
    fn divisibility_required() {
        assert!(build_sectors(4, 5).is_err());
        assert!(build_sectors(10, 3).is_err());
        assert!(build_sectors(0, 1).is_err());
    }

    #[test]
    fn out_of_range_sector() {
        let s = build_sectors(8, 4).unwrap();
        assert!(matches!(
            s.sector_basis(4),
            Err(Error::IndexOutOfRange { index: 4, len: 4, .. })
        ));
    }

    #[test]
    fn one_beam_per_sector() {
        let s = build_sectors(6, 6).unwrap();
        let b = s.sector_basis(0).unwrap();
        assert_eq!(b, dft_matrix(6).columns(0, 1).into_owned());
    }

    #[test]
    fn partition_of_identity_and_orthogonality() {
        let set = build_sectors(24, 6).unwrap();
        let mut sum = CMatrix::zeros(24, 24);
        let bases: Vec<_> = (0..6).map(|i| set.sector_basis(i).unwrap()).collect();
        for (i, b) in bases.iter().enumerate() {
            sum += b * b.adjoint();
            let gram = b.adjoint() * b;
            assert!(frobenius(&(gram - CMatrix::identity(4, 4))) < 1e-12);
            for (j, c) in bases.iter().enumerate() {
                if i != j {
                    assert!(frobenius(&(b.adjoint() * c)) < 1e-12);
                }
            }
        }
        assert!(frobenius(&(sum - CMatrix::identity(24, 24))) < 1e-10);

        let mut joined = CMatrix::zeros(24, 0);
        for b in &bases {
            let c = joined.ncols();
            joined = joined.insert_columns(c, b.ncols(), C64::new(0.0, 0.0));
            joined.columns_mut(c, b.ncols()).copy_from(b);
        }
        assert_eq!(&joined, set.dft());
    }
}
