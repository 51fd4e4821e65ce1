//! Incremental follow-the-leader least squares with sparse block updates.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use ndarray::Array2;

use crate::encoding::{ensure_finite, Features, SparseVector};
use crate::error::{LosseError, Result};
use crate::linalg::{add_ridge, solve_spd};
use crate::util::fnv1a64;

/// Feature dimension above which the Gram memory switches from a dense
/// matrix to per-row sorted maps. At 8192 the dense form costs 512 MiB.
pub const DENSE_GRAM_LIMIT: usize = 8192;

/// Gram memory `A = sum phi phi^T`, kept exactly (no decay, no sketching).
///
/// Both representations maintain full symmetry and only visit historically
/// co-activated column pairs during block updates, so update cost never
/// depends on the number of absorbed samples. The dense form additionally
/// keeps a sorted nonzero-column list per row; iterating it in ascending
/// order makes results bit-identical to a full column scan.
#[derive(Debug, Clone)]
pub enum GramMatrix {
    Dense {
        values: Array2<f64>,
        row_cols: Vec<Vec<u32>>,
    },
    SparseRows(Vec<BTreeMap<usize, f64>>),
}

impl GramMatrix {
    pub fn new(dim: usize) -> Self {
        if dim <= DENSE_GRAM_LIMIT {
            GramMatrix::Dense {
                values: Array2::zeros((dim, dim)),
                row_cols: vec![Vec::new(); dim],
            }
        } else {
            GramMatrix::SparseRows(vec![BTreeMap::new(); dim])
        }
    }

    pub(crate) fn dense_from_values(values: Array2<f64>) -> Self {
        let row_cols = values
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, _)| j as u32)
                    .collect()
            })
            .collect();
        GramMatrix::Dense { values, row_cols }
    }

    pub fn dim(&self) -> usize {
        match self {
            GramMatrix::Dense { values, .. } => values.nrows(),
            GramMatrix::SparseRows(rows) => rows.len(),
        }
    }

    /// Records column `j` as structurally nonzero in row `i`. Only called
    /// when the stored value was exactly zero, which after warmup is rare.
    fn note_column(row_cols: &mut [Vec<u32>], i: usize, j: usize) {
        let cols = &mut row_cols[i];
        if let Err(pos) = cols.binary_search(&(j as u32)) {
            cols.insert(pos, j as u32);
        }
    }

    /// Adds the symmetric outer product of a sparse vector.
    fn add_outer_sparse(&mut self, indices: &[usize], values_in: &[f64]) {
        match self {
            GramMatrix::Dense { values, row_cols } => {
                let n = values.ncols();
                let flat = values.as_slice_mut().unwrap();
                for (r, &i) in indices.iter().enumerate() {
                    let vi = values_in[r];
                    let row = &mut flat[i * n..(i + 1) * n];
                    for (c, &j) in indices.iter().enumerate() {
                        if row[j] == 0.0 {
                            Self::note_column(row_cols, i, j);
                        }
                        row[j] += vi * values_in[c];
                    }
                }
            }
            GramMatrix::SparseRows(rows) => {
                for (r, &i) in indices.iter().enumerate() {
                    let vi = values_in[r];
                    let row = &mut rows[i];
                    for (c, &j) in indices.iter().enumerate() {
                        *row.entry(j).or_insert(0.0) += vi * values_in[c];
                    }
                }
            }
        }
    }

    /// Adds the symmetric outer product of a dense vector.
    fn add_outer_dense(&mut self, phi: &[f64]) {
        match self {
            GramMatrix::Dense { values, row_cols } => {
                let n = values.ncols();
                let flat = values.as_slice_mut().unwrap();
                for (i, &vi) in phi.iter().enumerate() {
                    if vi != 0.0 {
                        let row = &mut flat[i * n..(i + 1) * n];
                        for (j, &vj) in phi.iter().enumerate() {
                            if vj != 0.0 {
                                if row[j] == 0.0 {
                                    Self::note_column(row_cols, i, j);
                                }
                                row[j] += vi * vj;
                            }
                        }
                    }
                }
            }
            GramMatrix::SparseRows(rows) => {
                for (i, &vi) in phi.iter().enumerate() {
                    if vi != 0.0 {
                        let row = &mut rows[i];
                        for (j, &vj) in phi.iter().enumerate() {
                            if vj != 0.0 {
                                *row.entry(j).or_insert(0.0) += vi * vj;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Extracts the `|s| x |s|` submatrix at `indices` (sorted).
    fn gather_block(&self, indices: &[usize]) -> Array2<f64> {
        let k = indices.len();
        let mut out = Array2::zeros((k, k));
        match self {
            GramMatrix::Dense { values, .. } => {
                for (r, &i) in indices.iter().enumerate() {
                    let row = values.row(i);
                    for (c, &j) in indices.iter().enumerate() {
                        out[[r, c]] = row[j];
                    }
                }
            }
            GramMatrix::SparseRows(rows) => {
                for (r, &i) in indices.iter().enumerate() {
                    let row = &rows[i];
                    for (c, &j) in indices.iter().enumerate() {
                        if let Some(v) = row.get(&j) {
                            out[[r, c]] = *v;
                        }
                    }
                }
            }
        }
        out
    }

    /// `A[s, :] . W` for the rows `s = indices`: an `|s| x target_dim`
    /// block. Touches only the historically co-activated columns.
    fn rows_times_weights(&self, indices: &[usize], weights: &Array2<f64>) -> Array2<f64> {
        let cols = weights.ncols();
        let mut out = Array2::zeros((indices.len(), cols));
        let w = weights.as_slice().unwrap();
        let of = out.as_slice_mut().unwrap();
        match self {
            GramMatrix::Dense { values, row_cols } => {
                let n = values.ncols();
                let af = values.as_slice().unwrap();
                for (r, &i) in indices.iter().enumerate() {
                    let row = &af[i * n..(i + 1) * n];
                    let acc = &mut of[r * cols..(r + 1) * cols];
                    for &j in &row_cols[i] {
                        let j = j as usize;
                        let aij = row[j];
                        if aij != 0.0 {
                            let wrow = &w[j * cols..(j + 1) * cols];
                            for c in 0..cols {
                                acc[c] += aij * wrow[c];
                            }
                        }
                    }
                }
            }
            GramMatrix::SparseRows(rows) => {
                for (r, &i) in indices.iter().enumerate() {
                    let acc = &mut of[r * cols..(r + 1) * cols];
                    for (&j, &aij) in rows[i].iter() {
                        let wrow = &w[j * cols..(j + 1) * cols];
                        for c in 0..cols {
                            acc[c] += aij * wrow[c];
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest absolute asymmetry `max |A_ij - A_ji|`; diagnostics only.
    pub fn max_asymmetry(&self) -> f64 {
        match self {
            GramMatrix::Dense { values, .. } => {
                let n = values.nrows();
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in (i + 1)..n {
                        worst = worst.max((values[[i, j]] - values[[j, i]]).abs());
                    }
                }
                worst
            }
            GramMatrix::SparseRows(rows) => {
                let mut worst = 0.0f64;
                for (i, row) in rows.iter().enumerate() {
                    for (&j, &v) in row.iter() {
                        let other = rows[j].get(&i).copied().unwrap_or(0.0);
                        worst = worst.max((v - other).abs());
                    }
                }
                worst
            }
        }
    }

    /// Materializes the full matrix; intended for tests and small dims.
    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            GramMatrix::Dense { values, .. } => values.clone(),
            GramMatrix::SparseRows(rows) => {
                let n = rows.len();
                let mut out = Array2::zeros((n, n));
                for (i, row) in rows.iter().enumerate() {
                    for (&j, &v) in row.iter() {
                        out[[i, j]] = v;
                    }
                }
                out
            }
        }
    }
}

/// What an `observe_sparse` call did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserveOutcome {
    Updated,
    /// The feature vector had no support; memories and weights untouched.
    SkippedEmptySupport,
}

/// Online least-squares learner that tracks the minimizer of the cumulative
/// squared loss over everything it has observed.
///
/// `A` and `B` are exact sums of `phi phi^T` and `phi y^T`. Dense
/// observations re-solve all weights; sparse observations solve only the
/// block of rows in the feature support against the ridge-stabilized
/// submatrix, at a cost independent of how many samples came before.
#[derive(Debug, Clone)]
pub struct FtlLearner {
    feature_dim: usize,
    target_dim: usize,
    gram: GramMatrix,
    cross: Array2<f64>,
    weights: Array2<f64>,
    epsilon: f64,
    steps_seen: u64,
    skipped_empty: u64,
}

impl FtlLearner {
    pub fn new(feature_dim: usize, target_dim: usize, epsilon: f64) -> Result<Self> {
        if feature_dim == 0 || target_dim == 0 {
            return Err(LosseError::Config(
                "feature_dim and target_dim must be positive".into(),
            ));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(LosseError::Config(format!(
                "epsilon must be finite and nonnegative, got {epsilon}"
            )));
        }
        Ok(FtlLearner {
            feature_dim,
            target_dim,
            gram: GramMatrix::new(feature_dim),
            cross: Array2::zeros((feature_dim, target_dim)),
            weights: Array2::zeros((feature_dim, target_dim)),
            epsilon,
            steps_seen: 0,
            skipped_empty: 0,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn steps_seen(&self) -> u64 {
        self.steps_seen
    }

    pub fn skipped_empty(&self) -> u64 {
        self.skipped_empty
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn cross(&self) -> &Array2<f64> {
        &self.cross
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    fn check_target(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.target_dim {
            return Err(LosseError::shape(
                format!("target of length {}", self.target_dim),
                format!("length {}", y.len()),
            ));
        }
        ensure_finite(y, "target")
    }

    /// Full-solve update: `A += phi phi^T`, `B += phi y^T`,
    /// `W = (A + eps I)^{-1} B`. Cubic in the feature dimension.
    pub fn observe_dense(&mut self, phi: &[f64], y: &[f64]) -> Result<()> {
        if phi.len() != self.feature_dim {
            return Err(LosseError::shape(
                format!("features of length {}", self.feature_dim),
                format!("length {}", phi.len()),
            ));
        }
        ensure_finite(phi, "features")?;
        self.check_target(y)?;
        self.gram.add_outer_dense(phi);
        for (i, &v) in phi.iter().enumerate() {
            if v != 0.0 {
                for (c, &t) in y.iter().enumerate() {
                    self.cross[[i, c]] += v * t;
                }
            }
        }
        let mut m = self.gram.to_dense();
        add_ridge(&mut m, self.epsilon);
        self.weights = solve_spd(m, self.cross.clone())?;
        self.steps_seen += 1;
        Ok(())
    }

    /// Sparse block update. Only the weight rows in the feature support
    /// change; they are re-solved exactly against the updated memories with
    /// the complement rows held fixed.
    pub fn observe_sparse(&mut self, phi: &SparseVector, y: &[f64]) -> Result<ObserveOutcome> {
        if phi.dim() != self.feature_dim {
            return Err(LosseError::shape(
                format!("features of dimension {}", self.feature_dim),
                format!("dimension {}", phi.dim()),
            ));
        }
        self.check_target(y)?;
        if phi.nnz() == 0 {
            self.skipped_empty += 1;
            return Ok(ObserveOutcome::SkippedEmptySupport);
        }
        let indices = phi.indices();
        let values = phi.values();
        self.gram.add_outer_sparse(indices, values);
        for (r, &i) in indices.iter().enumerate() {
            for (c, &t) in y.iter().enumerate() {
                self.cross[[i, c]] += values[r] * t;
            }
        }
        let block = self.gram.gather_block(indices);
        // A[s, comp] . W[comp] = A[s, :] . W - A[s, s] . W[s]
        let coupled = self.gram.rows_times_weights(indices, &self.weights);
        let w_s = self.gather_weight_rows(indices);
        let mut rhs = block.dot(&w_s) - coupled;
        for (r, &i) in indices.iter().enumerate() {
            for c in 0..self.target_dim {
                rhs[[r, c]] += self.cross[[i, c]];
            }
        }
        let mut m = block;
        add_ridge(&mut m, self.epsilon);
        let solved = solve_spd(m, rhs)?;
        for (r, &i) in indices.iter().enumerate() {
            for c in 0..self.target_dim {
                self.weights[[i, c]] = solved[[r, c]];
            }
        }
        self.steps_seen += 1;
        Ok(ObserveOutcome::Updated)
    }

    pub fn observe(&mut self, features: &Features, y: &[f64]) -> Result<ObserveOutcome> {
        match features {
            Features::Dense(phi) => self.observe_dense(phi, y).map(|_| ObserveOutcome::Updated),
            Features::Sparse(phi) => self.observe_sparse(phi, y),
        }
    }

    pub fn predict(&self, features: &Features) -> Result<Vec<f64>> {
        if features.dim() != self.feature_dim {
            return Err(LosseError::shape(
                format!("features of dimension {}", self.feature_dim),
                format!("dimension {}", features.dim()),
            ));
        }
        Ok(super::linear_predict(&self.weights, features))
    }

    pub fn predict_sparse(&self, phi: &SparseVector) -> Result<Vec<f64>> {
        if phi.dim() != self.feature_dim {
            return Err(LosseError::shape(
                format!("features of dimension {}", self.feature_dim),
                format!("dimension {}", phi.dim()),
            ));
        }
        let mut out = vec![0.0; self.target_dim];
        for (j, v) in phi.iter() {
            let row = self.weights.row(j);
            for (o, w) in out.iter_mut().zip(row) {
                *o += v * w;
            }
        }
        Ok(out)
    }

    fn gather_weight_rows(&self, indices: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((indices.len(), self.target_dim));
        for (r, &i) in indices.iter().enumerate() {
            for c in 0..self.target_dim {
                out[[r, c]] = self.weights[[i, c]];
            }
        }
        out
    }

    /// First-order optimality residual of the rows `indices`:
    /// `||(A_ss + eps I) W_s + A_s,comp W_comp - B_s||_F`, returned together
    /// with a magnitude scale for relative comparisons.
    pub fn block_optimality_residual(&self, indices: &[usize]) -> (f64, f64) {
        // (A_ss + eps I) W_s + A_s,comp W_comp = A[s,:] W + eps W_s
        let coupled = self.gram.rows_times_weights(indices, &self.weights);
        let mut resid = 0.0f64;
        let mut scale = 1.0f64;
        for (r, &i) in indices.iter().enumerate() {
            for c in 0..self.target_dim {
                let lhs = coupled[[r, c]] + self.epsilon * self.weights[[i, c]];
                let b = self.cross[[i, c]];
                resid += (lhs - b) * (lhs - b);
                scale += lhs.abs().max(b.abs());
            }
        }
        (resid.sqrt(), scale)
    }

    fn storage_tag(&self) -> u8 {
        match self.gram {
            GramMatrix::Dense { .. } => 0,
            GramMatrix::SparseRows(_) => 1,
        }
    }

    /// Hash over dimensions, ridge term and storage kind; stored in
    /// snapshots so checkpoints cannot silently resume a different setup.
    pub fn config_hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(40);
        bytes.extend_from_slice(&(self.feature_dim as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.target_dim as u64).to_le_bytes());
        bytes.extend_from_slice(&self.epsilon.to_bits().to_le_bytes());
        bytes.push(self.storage_tag());
        fnv1a64(&bytes)
    }

    /// Writes a versioned binary snapshot. Round trips are bit-exact.
    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"LFTL")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.feature_dim as u64).to_le_bytes())?;
        w.write_all(&(self.target_dim as u64).to_le_bytes())?;
        w.write_all(&self.epsilon.to_bits().to_le_bytes())?;
        w.write_all(&self.steps_seen.to_le_bytes())?;
        w.write_all(&self.skipped_empty.to_le_bytes())?;
        w.write_all(&self.config_hash().to_le_bytes())?;
        w.write_all(&[self.storage_tag()])?;
        match &self.gram {
            GramMatrix::Dense { values, .. } => {
                for v in values.iter() {
                    w.write_all(&v.to_bits().to_le_bytes())?;
                }
            }
            GramMatrix::SparseRows(rows) => {
                for row in rows {
                    w.write_all(&(row.len() as u64).to_le_bytes())?;
                    for (&j, &v) in row.iter() {
                        w.write_all(&(j as u64).to_le_bytes())?;
                        w.write_all(&v.to_bits().to_le_bytes())?;
                    }
                }
            }
        }
        for v in self.cross.iter() {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
        for v in self.weights.iter() {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a snapshot written by [`FtlLearner::write_snapshot`].
    pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Self> {
        let mut offset = 0u64;
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic, &mut offset)?;
        if &magic != b"LFTL" {
            return Err(LosseError::Parse {
                offset: 0,
                message: format!("bad magic {magic:02x?}"),
            });
        }
        let version = read_u32(r, &mut offset)?;
        if version != 1 {
            return Err(LosseError::Parse {
                offset: 4,
                message: format!("unsupported snapshot version {version}"),
            });
        }
        let feature_dim = read_u64(r, &mut offset)? as usize;
        let target_dim = read_u64(r, &mut offset)? as usize;
        let epsilon = f64::from_bits(read_u64(r, &mut offset)?);
        let steps_seen = read_u64(r, &mut offset)?;
        let skipped_empty = read_u64(r, &mut offset)?;
        let stored_hash = read_u64(r, &mut offset)?;
        let mut tag = [0u8; 1];
        read_exact(r, &mut tag, &mut offset)?;
        let gram = match tag[0] {
            0 => {
                let mut a = Array2::zeros((feature_dim, feature_dim));
                for v in a.iter_mut() {
                    *v = f64::from_bits(read_u64(r, &mut offset)?);
                }
                GramMatrix::dense_from_values(a)
            }
            1 => {
                let mut rows = Vec::with_capacity(feature_dim);
                for _ in 0..feature_dim {
                    let len = read_u64(r, &mut offset)? as usize;
                    let mut row = BTreeMap::new();
                    for _ in 0..len {
                        let j = read_u64(r, &mut offset)? as usize;
                        let v = f64::from_bits(read_u64(r, &mut offset)?);
                        row.insert(j, v);
                    }
                    rows.push(row);
                }
                GramMatrix::SparseRows(rows)
            }
            t => {
                return Err(LosseError::Parse {
                    offset: offset - 1,
                    message: format!("unknown gram storage tag {t}"),
                })
            }
        };
        let mut cross = Array2::zeros((feature_dim, target_dim));
        for v in cross.iter_mut() {
            *v = f64::from_bits(read_u64(r, &mut offset)?);
        }
        let mut weights = Array2::zeros((feature_dim, target_dim));
        for v in weights.iter_mut() {
            *v = f64::from_bits(read_u64(r, &mut offset)?);
        }
        let learner = FtlLearner {
            feature_dim,
            target_dim,
            gram,
            cross,
            weights,
            epsilon,
            steps_seen,
            skipped_empty,
        };
        if learner.config_hash() != stored_hash {
            return Err(LosseError::Parse {
                offset,
                message: "config hash mismatch".into(),
            });
        }
        Ok(learner)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], offset: &mut u64) -> Result<()> {
    r.read_exact(buf).map_err(|e| LosseError::Parse {
        offset: *offset,
        message: format!("unexpected end of snapshot: {e}"),
    })?;
    *offset += buf.len() as u64;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R, offset: &mut u64) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, offset)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R, offset: &mut u64) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, offset)?;
    Ok(u64::from_le_bytes(b))
}

/// Accumulates samples and solves the ridge-regularized normal equations
/// from scratch: the ground truth the incremental learner is held against,
/// and the best-in-hindsight comparator for regret.
#[derive(Debug, Clone)]
pub struct BatchAccumulator {
    gram: Array2<f64>,
    cross: Array2<f64>,
    count: usize,
}

impl BatchAccumulator {
    pub fn new(feature_dim: usize, target_dim: usize) -> Self {
        BatchAccumulator {
            gram: Array2::zeros((feature_dim, feature_dim)),
            cross: Array2::zeros((feature_dim, target_dim)),
            count: 0,
        }
    }

    pub fn add(&mut self, features: &Features, y: &[f64]) {
        match features {
            Features::Dense(phi) => {
                for (i, &vi) in phi.iter().enumerate() {
                    if vi == 0.0 {
                        continue;
                    }
                    for (j, &vj) in phi.iter().enumerate() {
                        self.gram[[i, j]] += vi * vj;
                    }
                    for (c, &t) in y.iter().enumerate() {
                        self.cross[[i, c]] += vi * t;
                    }
                }
            }
            Features::Sparse(phi) => {
                for (i, vi) in phi.iter() {
                    for (j, vj) in phi.iter() {
                        self.gram[[i, j]] += vi * vj;
                    }
                    for (c, &t) in y.iter().enumerate() {
                        self.cross[[i, c]] += vi * t;
                    }
                }
            }
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `(A + eps I)^{-1} B` over everything added so far.
    pub fn solve(&self, epsilon: f64) -> Result<Array2<f64>> {
        if self.count == 0 {
            return Err(LosseError::Value(
                "batch solve requested before any sample".into(),
            ));
        }
        let mut m = self.gram.clone();
        add_ridge(&mut m, epsilon);
        solve_spd(m, self.cross.clone())
    }
}

/// One-shot exact ridge least-squares over a sample list.
pub fn solve_batch_oracle(samples: &[super::Sample], epsilon: f64) -> Result<Array2<f64>> {
    let (first, y0) = samples
        .first()
        .ok_or_else(|| LosseError::Value("batch solve requested before any sample".into()))?;
    let feature_dim = first.dim();
    let target_dim = y0.len();
    let mut acc = BatchAccumulator::new(feature_dim, target_dim);
    for (phi, y) in samples {
        if phi.dim() != feature_dim || y.len() != target_dim {
            return Err(LosseError::shape(
                format!("({feature_dim}, {target_dim})"),
                format!("({}, {})", phi.dim(), y.len()),
            ));
        }
        acc.add(phi, y);
    }
    acc.solve(epsilon)
}
