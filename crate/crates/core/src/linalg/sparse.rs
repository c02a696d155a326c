//! Minimal CSR storage for the assembled symmetric operators, with a
//! deterministic triplet reduction so assembly is independent of the order
//! subdomains are processed in.

use nalgebra::{DMatrix, DVector};

use crate::linalg::band::SymBand;
use crate::Result;

/// One assembly contribution tagged with the rank (Morton index) of its
/// source subdomain; the reduction sorts on `(row, col, rank)` so sums run
/// in a fixed order regardless of processing order.
#[derive(Debug, Clone, Copy)]
pub struct Triplet {
    pub row: u32,
    pub col: u32,
    pub rank: u32,
    pub val: f64,
}

/// Square sparse matrix in CSR form; both triangles stored.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSym {
    pub fn from_triplets(n: usize, mut triplets: Vec<Triplet>) -> Self {
        triplets.sort_by_key(|a| (a.row, a.col, a.rank));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(u32, u32)> = None;
        for t in &triplets {
            if last == Some((t.row, t.col)) {
                *vals.last_mut().unwrap() += t.val;
            } else {
                cols.push(t.col);
                vals.push(t.val);
                row_ptr[t.row as usize + 1] += 1;
                last = Some((t.row, t.col));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSym {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut sum = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                sum += v * x[*c as usize];
            }
            y[i] = sum;
        }
    }

    pub fn matvec_v(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        self.matvec(x.as_slice(), y.as_mut_slice());
        y
    }

    /// Maximum |i - j| over the nonzero pattern.
    pub fn bandwidth(&self) -> usize {
        let mut kd = 0usize;
        for i in 0..self.n {
            let (cols, _) = self.row(i);
            for &c in cols {
                kd = kd.max(i.abs_diff(c as usize));
            }
        }
        kd
    }

    /// Lower band copy of `self + sigma * other`.
    pub fn to_band_shifted(&self, other: Option<(&SparseSym, f64)>) -> SymBand {
        let mut kd = self.bandwidth();
        if let Some((o, _)) = other {
            kd = kd.max(o.bandwidth());
        }
        let mut band = SymBand::zeros(self.n, kd);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                band.add(i, *c as usize, *v);
            }
        }
        if let Some((o, sigma)) = other {
            for i in 0..o.n {
                let (cols, vals) = o.row(i);
                for (c, v) in cols.iter().zip(vals) {
                    band.add(i, *c as usize, sigma * v);
                }
            }
        }
        band
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c as usize)] += v;
            }
        }
        m
    }

    /// Symmetry defect `max |a_ij - a_ji|`, for assembly audits.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let j = *c as usize;
                let (jcols, jvals) = self.row(j);
                let vt = match jcols.binary_search(&(i as u32)) {
                    Ok(pos) => jvals[pos],
                    Err(_) => 0.0,
                };
                defect = defect.max((v - vt).abs());
            }
        }
        defect
    }

    /// Extracts the square submatrix on `keep` (a sorted index set), plus
    /// the rectangular coupling block from `keep` rows to `drop` columns.
    pub fn split(&self, keep: &[usize], drop: &[usize]) -> Result<(SparseSym, SparseSym)> {
        let mut place = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            place[old] = new;
        }
        let mut drop_place = vec![usize::MAX; self.n];
        for (new, &old) in drop.iter().enumerate() {
            drop_place[old] = new;
        }
        let mut kk = Vec::new();
        let mut kd = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            let (cols, vals) = self.row(old_i);
            for (c, v) in cols.iter().zip(vals) {
                let j = *c as usize;
                if place[j] != usize::MAX {
                    kk.push(Triplet {
                        row: new_i as u32,
                        col: place[j] as u32,
                        rank: 0,
                        val: *v,
                    });
                } else if drop_place[j] != usize::MAX {
                    kd.push(Triplet {
                        row: new_i as u32,
                        col: drop_place[j] as u32,
                        rank: 0,
                        val: *v,
                    });
                }
            }
        }
        // The coupling block is rectangular; reuse CSR with n = max dim.
        let kk = SparseSym::from_triplets(keep.len(), kk);
        let mut coupling = SparseSym::from_triplets(keep.len(), kd);
        coupling.n = keep.len();
        Ok((kk, coupling))
    }

    /// y = A x for the rectangular coupling block with `ncols` columns.
    pub fn matvec_rect(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n.min(y.len()) {
            let (cols, vals) = self.row(i);
            let mut sum = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                sum += v * x[*c as usize];
            }
            y[i] = sum;
        }
    }
}
