//! Dense m-order tensors and the multilinear primitives built on them.
//!
//! Storage is first-mode-fastest: the entry at multi-index `(i_0, .., i_{m-1})`
//! lives at `i_0 + I_0 * (i_1 + I_1 * (i_2 + ..))`. Modes are addressed with
//! zero-based indices throughout the crate.
//!
//! The mode-`p` matricization orders its columns forward-cyclically: the
//! remaining modes are enumerated as `p+1, .., m-1, 0, .., p-1` with the first
//! of them varying fastest. Under that order a sequence of mode products has
//! the Kronecker form
//!
//! ```text
//! B_(p) = U_p A_(p) (U_{c_L} ⊗ .. ⊗ U_{c_1})ᵀ,   c = (p+1, .., m-1, 0, .., p-1)
//! ```
//!
//! which [`matricized_sequence_product`] evaluates literally.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default upper bound on the number of entries a tensor may hold (2^27).
pub const DEFAULT_ENTRY_CAP: usize = 1 << 27;

/// Upper bound on tensor entry counts, checked before any allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryCap(pub usize);

impl Default for EntryCap {
    fn default() -> Self {
        EntryCap(DEFAULT_ENTRY_CAP)
    }
}

impl EntryCap {
    /// Verifies that a tensor of `shape` fits under the cap and returns its
    /// entry count.
    pub fn check(&self, shape: &[usize]) -> Result<usize> {
        let requested = shape
            .iter()
            .try_fold(1u128, |acc, &e| acc.checked_mul(e as u128))
            .unwrap_or(u128::MAX);
        if requested > self.0 as u128 {
            return Err(Error::Capacity {
                shape: shape.to_vec(),
                requested,
                cap: self.0,
            });
        }
        Ok(requested as usize)
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::arg("tensor order must be at least 1"));
    }
    if let Some(p) = shape.iter().position(|&e| e == 0) {
        return Err(Error::arg(format!("extent of mode {p} must be positive")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::zeros_capped(shape, EntryCap::default())
    }

    pub fn zeros_capped(shape: &[usize], cap: EntryCap) -> Result<Self> {
        validate_shape(shape)?;
        let len = cap.check(shape)?;
        Ok(DenseTensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Wraps `data`, which must already be in first-mode-fastest order.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        validate_shape(shape)?;
        let len = EntryCap::default().check(shape)?;
        if data.len() != len {
            return Err(Error::dim(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let mut idx = vec![0usize; shape.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            increment(&mut idx, shape);
        }
        Ok(t)
    }

    /// A 2-mode tensor holding the matrix `a`.
    pub fn from_matrix(a: &DMatrix<f64>) -> Result<Self> {
        // nalgebra is column-major, which is first-mode-fastest.
        Self::from_vec(&[a.nrows(), a.ncols()], a.as_slice().to_vec())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut lin = 0;
        for (&i, &e) in idx.iter().zip(&self.shape).rev() {
            debug_assert!(i < e);
            lin = lin * e + i;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    /// The single entry of a tensor whose extents are all 1.
    pub fn as_scalar(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    /// The entries of a 2-mode tensor as a matrix.
    pub fn to_matrix(&self) -> Option<DMatrix<f64>> {
        (self.order() == 2)
            .then(|| DMatrix::from_column_slice(self.shape[0], self.shape[1], &self.data))
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// `self ×_mode u` for a `J × I_mode` matrix `u`.
    pub fn mode_product(&self, u: &DMatrix<f64>, mode: usize) -> Result<Self> {
        self.mode_product_capped(u, mode, EntryCap::default())
    }

    pub fn mode_product_capped(&self, u: &DMatrix<f64>, mode: usize, cap: EntryCap) -> Result<Self> {
        self.check_mode(mode)?;
        let ip = self.shape[mode];
        if u.ncols() != ip {
            return Err(Error::dim(format!(
                "mode-{mode} product needs a matrix with {ip} columns, got {}x{}",
                u.nrows(),
                u.ncols()
            )));
        }
        let jp = u.nrows();
        let mut shape = self.shape.clone();
        shape[mode] = jp;
        let mut out = Self::zeros_capped(&shape, cap)?;
        let left: usize = self.shape[..mode].iter().product();
        let right: usize = self.shape[mode + 1..].iter().product();
        for r in 0..right {
            for i in 0..ip {
                let src = &self.data[left * (i + ip * r)..left * (i + ip * r + 1)];
                for j in 0..jp {
                    let w = u[(j, i)];
                    if w == 0.0 {
                        continue;
                    }
                    let base = left * (j + jp * r);
                    for (o, &s) in out.data[base..base + left].iter_mut().zip(src) {
                        *o += w * s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Applies `(mode, matrix)` pairs in the given order. Modes must be distinct.
    pub fn mode_product_sequence(&self, ops: &[(usize, &DMatrix<f64>)]) -> Result<Self> {
        let mut seen = vec![false; self.order()];
        for &(mode, _) in ops {
            self.check_mode(mode)?;
            if std::mem::replace(&mut seen[mode], true) {
                return Err(Error::DuplicateMode(mode));
            }
        }
        let mut acc = self.clone();
        for &(mode, u) in ops {
            acc = acc.mode_product(u, mode)?;
        }
        Ok(acc)
    }

    /// Contracts every mode with a vector: `self ×_0 v_0ᵀ ×_1 v_1ᵀ .. ×_{m-1} v_{m-1}ᵀ`.
    pub fn contract_all(&self, vectors: &[&DVector<f64>]) -> Result<f64> {
        if vectors.len() != self.order() {
            return Err(Error::dim(format!(
                "need {} vectors, got {}",
                self.order(),
                vectors.len()
            )));
        }
        for (p, v) in vectors.iter().enumerate() {
            if v.len() != self.shape[p] {
                return Err(Error::dim(format!(
                    "vector for mode {p} has length {}, extent is {}",
                    v.len(),
                    self.shape[p]
                )));
            }
        }
        // Contract the fastest mode first so each pass is a contiguous reduction.
        let mut cur = self.data.clone();
        for v in vectors {
            let n = v.len();
            cur = cur
                .chunks_exact(n)
                .map(|c| c.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
                .collect();
        }
        Ok(cur[0])
    }

    pub fn matricize(&self, mode: usize) -> Result<Matricization> {
        self.check_mode(mode)?;
        let cols = self.len() / self.shape[mode];
        let col_modes = cyclic_modes(self.order(), mode);
        let strides = column_strides(&self.shape, &col_modes);
        let mut matrix = DMatrix::zeros(self.shape[mode], cols);
        let mut idx = vec![0usize; self.order()];
        for &v in &self.data {
            let col: usize = col_modes.iter().zip(&strides).map(|(&q, &s)| idx[q] * s).sum();
            matrix[(idx[mode], col)] = v;
            increment(&mut idx, &self.shape);
        }
        Ok(Matricization {
            mode,
            shape: self.shape.clone(),
            matrix,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::dim(format!(
                "inner product of shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Adds `weight · v_0 ∘ v_1 ∘ .. ∘ v_{m-1}` to the tensor in place.
    pub fn outer_product_accumulate(&mut self, vectors: &[&[f64]], weight: f64) -> Result<()> {
        if vectors.len() != self.order()
            || vectors.iter().zip(&self.shape).any(|(v, &e)| v.len() != e)
        {
            let lens: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
            return Err(Error::dim(format!(
                "outer product of lengths {lens:?} does not match shape {:?}",
                self.shape
            )));
        }
        if weight == 0.0 {
            return Ok(());
        }
        // Outer product of the trailing vectors, with the earliest of them fastest.
        let mut tail = vec![weight];
        for v in vectors[1..].iter() {
            let mut next = Vec::with_capacity(tail.len() * v.len());
            for &b in v.iter() {
                next.extend(tail.iter().map(|&a| a * b));
            }
            tail = next;
        }
        let head = vectors[0];
        for (chunk, &t) in self.data.chunks_exact_mut(head.len()).zip(&tail) {
            if t == 0.0 {
                continue;
            }
            for (d, &h) in chunk.iter_mut().zip(head) {
                *d += t * h;
            }
        }
        Ok(())
    }

    /// Matricized tensor times Khatri-Rao product: the `I_mode × r` matrix
    /// `M(i, k) = Σ T(.., i, ..) Π_{q≠mode} U_q(i_q, k)`.
    pub fn mttkrp(&self, factors: &[DMatrix<f64>], mode: usize) -> Result<DMatrix<f64>> {
        self.check_mode(mode)?;
        if factors.len() != self.order() {
            return Err(Error::dim(format!(
                "need {} factor matrices, got {}",
                self.order(),
                factors.len()
            )));
        }
        let rank = factors[0].ncols();
        for (q, f) in factors.iter().enumerate() {
            if f.nrows() != self.shape[q] || f.ncols() != rank {
                return Err(Error::dim(format!(
                    "factor {q} is {}x{}, expected {}x{rank}",
                    f.nrows(),
                    f.ncols(),
                    self.shape[q]
                )));
            }
        }
        let mut out = DMatrix::zeros(self.shape[mode], rank);
        let mut idx = vec![0usize; self.order()];
        let mut prod = vec![0.0; rank];
        for &v in &self.data {
            if v != 0.0 {
                prod.iter_mut().for_each(|p| *p = v);
                for (q, f) in factors.iter().enumerate() {
                    if q == mode {
                        continue;
                    }
                    let row = idx[q];
                    for (k, p) in prod.iter_mut().enumerate() {
                        *p *= f[(row, k)];
                    }
                }
                for (k, p) in prod.iter().enumerate() {
                    out[(idx[mode], k)] += p;
                }
            }
            increment(&mut idx, &self.shape);
        }
        Ok(out)
    }
}

/// A tensor unfolded along one mode, with forward-cyclic column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matricization {
    pub mode: usize,
    /// Shape of the source tensor.
    pub shape: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl Matricization {
    /// Modes mapped to the columns, fastest first.
    pub fn column_modes(&self) -> Vec<usize> {
        cyclic_modes(self.shape.len(), self.mode)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn fold(&self) -> Result<DenseTensor> {
        let mut t = DenseTensor::zeros(&self.shape)?;
        let col_modes = self.column_modes();
        let strides = column_strides(&self.shape, &col_modes);
        let mut idx = vec![0usize; self.shape.len()];
        for v in t.data.iter_mut() {
            let col: usize = col_modes.iter().zip(&strides).map(|(&q, &s)| idx[q] * s).sum();
            *v = self.matrix[(idx[self.mode], col)];
            increment(&mut idx, &self.shape);
        }
        Ok(t)
    }
}

/// Evaluates `U_p A_(p) (U_{c_L} ⊗ .. ⊗ U_{c_1})ᵀ` with explicit Kronecker
/// products. `us` holds one optional matrix per mode; `None` means identity,
/// so `us[retained] = None` leaves the retained mode untouched.
pub fn matricized_sequence_product(
    t: &DenseTensor,
    retained: usize,
    us: &[Option<&DMatrix<f64>>],
) -> Result<DMatrix<f64>> {
    let a = t.matricize(retained)?;
    if us.len() != t.order() {
        return Err(Error::dim(format!(
            "need {} optional matrices, got {}",
            t.order(),
            us.len()
        )));
    }
    let resolve = |q: usize| -> Result<DMatrix<f64>> {
        match us[q] {
            Some(u) if u.ncols() != t.shape()[q] => Err(Error::dim(format!(
                "matrix for mode {q} has {} columns, extent is {}",
                u.ncols(),
                t.shape()[q]
            ))),
            Some(u) => Ok(u.clone()),
            None => Ok(DMatrix::identity(t.shape()[q], t.shape()[q])),
        }
    };
    // The slowest column mode is the leftmost Kronecker factor.
    let mut kron = DMatrix::from_element(1, 1, 1.0);
    for &q in a.column_modes().iter().rev() {
        kron = kron.kronecker(&resolve(q)?);
    }
    let left = resolve(retained)?;
    Ok(left * a.matrix * kron.transpose())
}

/// Column-wise Kronecker product of matrices sharing a column count. The last
/// matrix's row index varies fastest in the result.
pub fn khatri_rao(mats: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let Some(first) = mats.first() else {
        return Err(Error::arg("khatri_rao needs at least one matrix"));
    };
    let r = first.ncols();
    if mats.iter().any(|m| m.ncols() != r) {
        return Err(Error::dim("khatri_rao operands differ in column count"));
    }
    let rows: usize = mats.iter().map(|m| m.nrows()).product();
    let mut out = DMatrix::zeros(rows, r);
    for k in 0..r {
        let mut col = DVector::from_element(1, 1.0);
        for m in mats {
            col = col.kronecker(&m.column(k).into_owned());
        }
        out.set_column(k, &col);
    }
    Ok(out)
}

/// A vector as a `1 × n` matrix, for mode products that contract a mode.
pub fn row_matrix(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, v.len(), v.as_slice())
}

fn cyclic_modes(order: usize, mode: usize) -> Vec<usize> {
    (1..order).map(|s| (mode + s) % order).collect()
}

fn column_strides(shape: &[usize], col_modes: &[usize]) -> Vec<usize> {
    let mut strides = Vec::with_capacity(col_modes.len());
    let mut s = 1;
    for &q in col_modes {
        strides.push(s);
        s *= shape[q];
    }
    strides
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for (i, &e) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < e {
            return;
        }
        *i = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
        DenseTensor::from_fn(shape, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn iota(shape: &[usize]) -> DenseTensor {
        let n: usize = shape.iter().product();
        DenseTensor::from_vec(shape, (1..=n).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn mode_product_of_ones_sums_fibers() {
        let t = DenseTensor::from_vec(&[2, 2, 2], vec![1.0; 8]).unwrap();
        let u = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = t.mode_product(&u, 0).unwrap();
        assert_eq!(b.shape(), &[1, 2, 2]);
        assert!(b.data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn mode_product_identity_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor(&[3, 4, 2], &mut rng);
        for p in 0..3 {
            let id = DMatrix::identity(t.shape()[p], t.shape()[p]);
            assert_eq!(t.mode_product(&id, p).unwrap(), t);
        }
    }

    #[test]
    fn mode_product_matches_triple_loop() {
        let t = iota(&[2, 3, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_matrix(2, 3, &mut rng);
        let b = t.mode_product(&u, 1).unwrap();
        assert_eq!(b.shape(), &[2, 2, 4]);
        for i0 in 0..2 {
            for j in 0..2 {
                for i2 in 0..4 {
                    let mut s = 0.0;
                    for i1 in 0..3 {
                        s += t.get(&[i0, i1, i2]) * u[(j, i1)];
                    }
                    assert!((b.get(&[i0, j, i2]) - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mode_product_errors() {
        let t = iota(&[2, 3]);
        let u = DMatrix::<f64>::zeros(2, 2);
        assert!(matches!(t.mode_product(&u, 1), Err(Error::Dimension(_))));
        assert!(matches!(
            t.mode_product(&u, 2),
            Err(Error::ModeOutOfRange { mode: 2, order: 2 })
        ));
    }

    #[test]
    fn sequence_of_row_vectors_is_bilinear_form() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 1.0, -1.0]);
        let t = DenseTensor::from_matrix(&a).unwrap();
        let h1 = DVector::from_vec(vec![0.3, -0.7]);
        let h2 = DVector::from_vec(vec![1.0, 2.0, -0.5]);
        let r1 = row_matrix(&h1);
        let r2 = row_matrix(&h2);
        let b = t.mode_product_sequence(&[(0, &r1), (1, &r2)]).unwrap();
        let expected = (h1.transpose() * &a * &h2)[(0, 0)];
        assert!((b.as_scalar().unwrap() - expected).abs() < 1e-12);
        assert!((t.contract_all(&[&h1, &h2]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn sequence_matches_loop_on_random_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tensor(&[2, 2, 2], &mut rng);
        let hs: Vec<DVector<f64>> = (0..3)
            .map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let mut brute = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    brute += t.get(&[i, j, k]) * hs[0][i] * hs[1][j] * hs[2][k];
                }
            }
        }
        let rows: Vec<DMatrix<f64>> = hs.iter().map(row_matrix).collect();
        let b = t
            .mode_product_sequence(&[(2, &rows[2]), (0, &rows[0]), (1, &rows[1])])
            .unwrap();
        assert!((b.as_scalar().unwrap() - brute).abs() < 1e-12);
    }

    #[test]
    fn sequence_rejects_duplicate_modes() {
        let t = iota(&[2, 2]);
        let id = DMatrix::identity(2, 2);
        assert!(matches!(
            t.mode_product_sequence(&[(0, &id), (0, &id)]),
            Err(Error::DuplicateMode(0))
        ));
    }

    #[test]
    fn matricize_matrix_mode0_is_itself() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let t = DenseTensor::from_matrix(&a).unwrap();
        assert_eq!(t.matricize(0).unwrap().matrix, a);
        assert_eq!(t.matricize(1).unwrap().matrix, a.transpose());
    }

    #[test]
    fn matricize_mode1_preserves_entry_multiset() {
        let t = iota(&[2, 3, 4]);
        let m = t.matricize(1).unwrap();
        assert_eq!(m.matrix.shape(), (3, 8));
        let mut got: Vec<f64> = m.matrix.iter().copied().collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want: Vec<f64> = (1..=24).map(|v| v as f64).collect();
        assert_eq!(got, want);
        // Row i1 holds the fibers along mode 1; column index is i2 + 4 * i0.
        assert_eq!(m.column_modes(), vec![2, 0]);
        for i0 in 0..2 {
            for i1 in 0..3 {
                for i2 in 0..4 {
                    assert_eq!(m.matrix[(i1, i2 + 4 * i0)], t.get(&[i0, i1, i2]));
                }
            }
        }
    }

    #[test]
    fn matricize_refold_round_trip() {
        let t = iota(&[3, 2, 4, 2]);
        for p in 0..4 {
            assert_eq!(t.matricize(p).unwrap().fold().unwrap(), t);
        }
        assert!(t.matricize(4).is_err());
    }

    #[test]
    fn kronecker_form_with_identities_is_unfolding() {
        let t = iota(&[2, 3, 4]);
        for p in 0..3 {
            let got = matricized_sequence_product(&t, p, &[None, None, None]).unwrap();
            assert_eq!(got, t.matricize(p).unwrap().matrix);
        }
    }

    #[test]
    fn kronecker_form_with_row_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = random_tensor(&[2, 2, 2], &mut rng);
        let r2 = random_matrix(1, 2, &mut rng);
        let r3 = random_matrix(1, 2, &mut rng);
        let got = matricized_sequence_product(&t, 0, &[None, Some(&r2), Some(&r3)]).unwrap();
        let via_seq = t.mode_product_sequence(&[(1, &r2), (2, &r3)]).unwrap();
        assert_eq!(got.shape(), (2, 1));
        for i in 0..2 {
            assert!((got[(i, 0)] - via_seq.data()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn kronecker_form_on_vector_is_plain_product() {
        let t = DenseTensor::from_vec(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let u = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let got = matricized_sequence_product(&t, 0, &[Some(&u)]).unwrap();
        assert_eq!(got, DMatrix::from_column_slice(2, 1, &[4.0, 2.0]));
    }

    #[test]
    fn frobenius_examples() {
        let ones = DenseTensor::from_vec(&[2, 3, 4], vec![1.0; 24]).unwrap();
        assert!((ones.frobenius_norm() - 24f64.sqrt()).abs() < 1e-15);
        assert_eq!(DenseTensor::zeros(&[2, 2]).unwrap().frobenius_norm(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_tensor(&[3, 2, 2], &mut rng);
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..2 {
                for k in 0..2 {
                    s += t.get(&[i, j, k]).powi(2);
                }
            }
        }
        assert!((t.frobenius_norm() - s.sqrt()).abs() < 1e-14);
        assert!((t.inner(&t).unwrap().sqrt() - s.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn outer_product_hand_values() {
        let mut acc = DenseTensor::zeros(&[2, 1, 2]).unwrap();
        acc.outer_product_accumulate(&[&[1.0, 2.0], &[3.0], &[1.0, 1.0]], 1.0)
            .unwrap();
        assert_eq!(acc.get(&[0, 0, 0]), 3.0);
        assert_eq!(acc.get(&[1, 0, 1]), 6.0);
        let before = acc.clone();
        acc.outer_product_accumulate(&[&[5.0, 2.0], &[3.0], &[1.0, 7.0]], 0.0)
            .unwrap();
        assert_eq!(acc, before);
        assert!(acc
            .outer_product_accumulate(&[&[1.0], &[3.0], &[1.0, 1.0]], 1.0)
            .is_err());
    }

    #[test]
    fn outer_product_is_linear_in_weight() {
        let v: [&[f64]; 3] = [&[0.3, -1.2], &[2.0, 0.5, 1.0], &[-0.7]];
        let mut halves = DenseTensor::zeros(&[2, 3, 1]).unwrap();
        halves.outer_product_accumulate(&v, 0.5).unwrap();
        halves.outer_product_accumulate(&v, 0.5).unwrap();
        let mut once = DenseTensor::zeros(&[2, 3, 1]).unwrap();
        once.outer_product_accumulate(&v, 1.0).unwrap();
        for (a, b) in halves.data().iter().zip(once.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mttkrp_matches_unfolding_times_khatri_rao() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = random_tensor(&[3, 4, 2], &mut rng);
        let factors: Vec<DMatrix<f64>> = t
            .shape()
            .iter()
            .map(|&e| random_matrix(e, 2, &mut rng))
            .collect();
        for p in 0..3 {
            let m = t.matricize(p).unwrap();
            // Fastest column mode is the rightmost Khatri-Rao operand.
            let ops: Vec<&DMatrix<f64>> =
                m.column_modes().iter().rev().map(|&q| &factors[q]).collect();
            let want = &m.matrix * khatri_rao(&ops).unwrap();
            let got = t.mttkrp(&factors, p).unwrap();
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn capacity_guard_fires_before_allocation() {
        let err = DenseTensor::zeros_capped(&[10, 10, 10], EntryCap(999)).unwrap_err();
        match err {
            Error::Capacity { requested, cap, .. } => {
                assert_eq!(requested, 1000);
                assert_eq!(cap, 999);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(DenseTensor::zeros(&[1 << 20, 1 << 20, 1 << 20]).is_err());
        assert!(DenseTensor::zeros(&[]).is_err());
        assert!(DenseTensor::zeros(&[2, 0]).is_err());
    }

    fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1usize..=5, 1..=3).prop_filter("cap 3x4x5", |s| {
            s.iter().product::<usize>() <= 60
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kronecker_identity_holds(shape in shape_strategy(), seed in any::<u64>(), p_raw in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(&shape, &mut rng);
            let p = p_raw % shape.len();
            let mats: Vec<DMatrix<f64>> = shape
                .iter()
                .map(|&e| random_matrix(rng.random_range(1..=4), e, &mut rng))
                .collect();
            let ops: Vec<(usize, &DMatrix<f64>)> = mats.iter().enumerate().collect();
            let b = t.mode_product_sequence(&ops).unwrap();
            let lhs = b.matricize(p).unwrap().matrix;
            let opts: Vec<Option<&DMatrix<f64>>> = mats.iter().map(Some).collect();
            let rhs = matricized_sequence_product(&t, p, &opts).unwrap();
            prop_assert!((lhs - rhs).abs().max() < 1e-10);
        }

        #[test]
        fn unfolding_preserves_norm(shape in shape_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(&shape, &mut rng);
            for p in 0..shape.len() {
                let m = t.matricize(p).unwrap();
                prop_assert!((m.matrix.norm() - t.frobenius_norm()).abs() < 1e-12);
            }
        }

        #[test]
        fn distinct_mode_products_commute(shape in shape_strategy(), seed in any::<u64>()) {
            prop_assume!(shape.len() >= 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(&shape, &mut rng);
            let u = random_matrix(3, shape[0], &mut rng);
            let v = random_matrix(2, shape[1], &mut rng);
            let a = t.mode_product(&u, 0).unwrap().mode_product(&v, 1).unwrap();
            let b = t.mode_product(&v, 1).unwrap().mode_product(&u, 0).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
