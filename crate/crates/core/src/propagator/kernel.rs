//! Point-by-time scan used by every maximal-function computation.
//!
//! For a field `Σ c_k e^{i x·ξ_k}` and a table of per-entry time factors
//! `E[t][k]`, each grid point gets the values `s_t = Σ_k c_k e^{i x·ξ_k} E[t][k]`.
//! Points are processed in fixed-size chunks (possibly in parallel) and each
//! point's sum runs over the entries in index order, so results do not depend
//! on the number of worker threads.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::fields::{BandLimitedField, Point, SpatialGrid};

/// Structure-of-arrays table of complex factors, `rows × width`.
#[derive(Debug, Clone)]
pub(crate) struct PhaseTable {
    width: usize,
    rows: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl PhaseTable {
    pub(crate) fn build(entries: usize, rows: usize, mut factor: impl FnMut(usize, usize) -> Complex64) -> Self {
        let width = entries.max(1);
        let mut re = vec![0.0; rows * width];
        let mut im = vec![0.0; rows * width];
        for r in 0..rows {
            for k in 0..entries {
                let z = factor(r, k);
                re[r * width + k] = z.re;
                im[r * width + k] = z.im;
            }
        }
        Self { width, rows, re, im }
    }

    #[cfg(test)]
    pub(crate) fn rows(&self) -> usize {
        self.rows
    }
}

/// Per-point accumulators returned by [`scan`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct PointStats {
    /// `max_t |s_t|²`
    pub max_sq: f64,
    /// `Σ_t ω_t |s_t|²` when row weights are supplied.
    pub int_sq: f64,
    /// `Σ_t ω_t |s'_t|²` for the companion table.
    pub int_aux_sq: f64,
    /// `|s_0|²`
    pub first_sq: f64,
}

pub(crate) struct ScanRequest<'a> {
    pub table: &'a PhaseTable,
    /// Companion table evaluated alongside (e.g. the time derivative).
    pub aux: Option<&'a PhaseTable>,
    /// Row weights for the time integrals.
    pub weights: Option<&'a [f64]>,
}

fn phase(x: &Point, xi: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(xi) {
        acc += a * b;
    }
    acc
}

/// Points evaluated together; the inner loops vectorize across them.
const BLOCK: usize = 8;

#[inline(always)]
fn block_sums(
    bre: &[[f64; BLOCK]],
    bim: &[[f64; BLOCK]],
    ere: &[f64],
    eim: &[f64],
) -> ([f64; BLOCK], [f64; BLOCK]) {
    let mut sr = [0.0; BLOCK];
    let mut si = [0.0; BLOCK];
    for (((br, bi), &er), &ei) in bre.iter().zip(bim).zip(ere).zip(eim) {
        for p in 0..BLOCK {
            sr[p] += br[p] * er - bi[p] * ei;
            si[p] += br[p] * ei + bi[p] * er;
        }
    }
    (sr, si)
}

/// Runs the scan over every active grid point.
pub(crate) fn scan(field: &BandLimitedField, grid: &SpatialGrid, req: &ScanRequest<'_>) -> Vec<PointStats> {
    let width = req.table.width;
    let rows = req.table.rows;
    let entries = field.len();
    // Keep the per-chunk bases and a row block of the table near L2 size.
    let chunk = (((1usize << 15) / width).clamp(BLOCK, 512) / BLOCK) * BLOCK;
    let row_block = ((1usize << 13) / width).max(1);
    let starts: Vec<usize> = (0..grid.len()).step_by(chunk).collect();
    let per_chunk: Vec<Vec<PointStats>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + chunk).min(grid.len());
            let n = end - start;
            let blocks = n.div_ceil(BLOCK);
            // bases[block · entries + k][lane]
            let mut bre = vec![[0.0; BLOCK]; blocks * entries];
            let mut bim = vec![[0.0; BLOCK]; blocks * entries];
            for p in 0..n {
                let x = grid.point(start + p);
                let (blk, lane) = (p / BLOCK, p % BLOCK);
                for k in 0..entries {
                    let z = field.amp(k) * Complex64::cis(phase(&x, field.freq(k)));
                    bre[blk * entries + k][lane] = z.re;
                    bim[blk * entries + k][lane] = z.im;
                }
            }
            let mut stats = vec![PointStats::default(); blocks * BLOCK];
            for r0 in (0..rows).step_by(row_block) {
                let r1 = (r0 + row_block).min(rows);
                for blk in 0..blocks {
                    let br = &bre[blk * entries..(blk + 1) * entries];
                    let bi = &bim[blk * entries..(blk + 1) * entries];
                    let st = &mut stats[blk * BLOCK..(blk + 1) * BLOCK];
                    for r in r0..r1 {
                        let row = r * width..r * width + entries;
                        let (sr, si) = block_sums(br, bi, &req.table.re[row.clone()], &req.table.im[row.clone()]);
                        let aux = match (req.weights, req.aux) {
                            (Some(_), Some(aux)) => Some(block_sums(br, bi, &aux.re[row.clone()], &aux.im[row])),
                            _ => None,
                        };
                        for p in 0..BLOCK {
                            let m = sr[p] * sr[p] + si[p] * si[p];
                            let s = &mut st[p];
                            if m > s.max_sq {
                                s.max_sq = m;
                            }
                            if r == 0 {
                                s.first_sq = m;
                            }
                            if let Some(w) = req.weights {
                                s.int_sq += w[r] * m;
                                if let Some((ar, ai)) = aux {
                                    s.int_aux_sq += w[r] * (ar[p] * ar[p] + ai[p] * ai[p]);
                                }
                            }
                        }
                    }
                }
            }
            stats.truncate(n);
            stats
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let t = PhaseTable::build(5, 2, |r, k| Complex64::new(r as f64, k as f64));
        assert_eq!(t.width, 5);
        assert_eq!(t.rows(), 2);
        assert_eq!(t.re[5 + 4], 1.0);
        assert_eq!(t.im[5 + 3], 3.0);
    }

    #[test]
    fn block_sums_match_complex_sum() {
        let e: Vec<Complex64> = (0..6).map(|k| Complex64::cis(0.3 * k as f64)).collect();
        let mut bre = vec![[0.0; BLOCK]; 6];
        let mut bim = vec![[0.0; BLOCK]; 6];
        for k in 0..6 {
            for p in 0..BLOCK {
                bre[k][p] = (k + p) as f64;
                bim[k][p] = 1.0 - (k * p) as f64;
            }
        }
        let (sr, si) = block_sums(
            &bre,
            &bim,
            &e.iter().map(|z| z.re).collect::<Vec<_>>(),
            &e.iter().map(|z| z.im).collect::<Vec<_>>(),
        );
        for p in 0..BLOCK {
            let want: Complex64 = (0..6).map(|k| Complex64::new(bre[k][p], bim[k][p]) * e[k]).sum();
            assert!((Complex64::new(sr[p], si[p]) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_field_scans_to_zero() {
        let f = BandLimitedField::empty(2, 1.0).unwrap();
        let grid = SpatialGrid::cube(2, 1.0, 3).unwrap();
        let t = PhaseTable::build(0, 4, |_, _| Complex64::new(1.0, 0.0));
        let st = scan(&f, &grid, &ScanRequest { table: &t, aux: None, weights: None });
        assert_eq!(st.len(), 9);
        assert!(st.iter().all(|s| s.max_sq == 0.0));
    }
}
