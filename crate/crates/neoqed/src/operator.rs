//! Dense complex operator algebra on finite tensor-product Hilbert spaces.
//!
//! The carrier type is [`Operator`]: a dense, row-major complex matrix tagged
//! with the [`HilbertSpace`] it acts on. Spaces are ordered lists of factor
//! dimensions with a **fixed global convention**: the resonator Fock factor
//! (if any) comes first, followed by the qubits in declaration order. All
//! tensor embeddings, partial traces, and basis-index computations use that
//! order; nothing downstream is allowed to reorder factors.
//!
//! Qubit convention: basis index 0 is the ground state, `σᶻ = diag(−1, +1)`,
//! so `½ω σᶻ` places the excited state at `+½ω`, and `σ⁺|0⟩ = |1⟩`.
//!
//! Eigendecompositions of Hermitian operators are delegated to `nalgebra`'s
//! complex symmetric (Hermitian) eigensolver; positivity tests use a shifted
//! Cholesky factorization, which is cheap and numerically robust for the
//! slightly-indefinite matrices an ODE integrator produces.

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

/// Shorthand for the complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Errors from operator construction and composition.
#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("subsystem slot {slot} out of range for a space with {n_factors} factors")]
    SlotOutOfRange { slot: usize, n_factors: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("operator is not Hermitian: max |A - A†| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),
}

// ---------------------------------------------------------------------------
// Hilbert space
// ---------------------------------------------------------------------------

/// An ordered tensor product of finite-dimensional factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    factors: Vec<usize>,
    total_dim: usize,
}

impl HilbertSpace {
    /// Build a space from its factor dimensions (first factor = leftmost in
    /// the tensor product). Every factor must have dimension ≥ 2.
    pub fn new(factors: Vec<usize>) -> Result<Self, OperatorError> {
        if factors.is_empty() {
            return Err(OperatorError::InvalidDimension(
                "a Hilbert space needs at least one factor".into(),
            ));
        }
        if let Some(&bad) = factors.iter().find(|&&f| f < 2) {
            return Err(OperatorError::InvalidDimension(format!(
                "factor dimension {bad} < 2"
            )));
        }
        let total_dim = factors.iter().product();
        Ok(Self { factors, total_dim })
    }

    /// The standard layout for one resonator mode (Fock cutoff = dimension)
    /// followed by `n_qubits` two-level systems.
    pub fn resonator_with_qubits(cutoff: usize, n_qubits: usize) -> Result<Self, OperatorError> {
        let mut factors = Vec::with_capacity(1 + n_qubits);
        factors.push(cutoff);
        factors.extend(std::iter::repeat(2).take(n_qubits));
        Self::new(factors)
    }

    /// A bare N-level system with no tensor structure.
    pub fn single(dim: usize) -> Result<Self, OperatorError> {
        Self::new(vec![dim])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    /// Flat basis index of the product state with the given per-factor
    /// occupations (mixed-radix, first factor most significant).
    pub fn basis_index(&self, occupations: &[usize]) -> Result<usize, OperatorError> {
        if occupations.len() != self.factors.len() {
            return Err(OperatorError::DimensionMismatch(format!(
                "{} occupations for {} factors",
                occupations.len(),
                self.factors.len()
            )));
        }
        let mut idx = 0usize;
        for (occ, dim) in occupations.iter().zip(&self.factors) {
            if occ >= dim {
                return Err(OperatorError::InvalidDimension(format!(
                    "occupation {occ} exceeds factor dimension {dim}"
                )));
            }
            idx = idx * dim + occ;
        }
        Ok(idx)
    }

    /// Stride of one factor: how far the flat index moves when that factor's
    /// occupation increments by one.
    fn stride(&self, slot: usize) -> usize {
        self.factors[slot + 1..].iter().product()
    }
}

// ---------------------------------------------------------------------------
// Operator
// ---------------------------------------------------------------------------

/// Pauli operator kinds in the fixed sign convention of this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    /// `diag(−1, +1)`: ground state at −1.
    Z,
    /// Raising operator `σ⁺ = |1⟩⟨0|`.
    Plus,
    /// Lowering operator `σ⁻ = |0⟩⟨1|`.
    Minus,
}

/// A dense complex matrix acting on a [`HilbertSpace`].
#[derive(Debug, Clone)]
pub struct Operator {
    space: HilbertSpace,
    elements: Array2<C64>,
}

impl Operator {
    /// Zero operator on the given space.
    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space,
            elements: Array2::zeros((d, d)),
        }
    }

    /// Identity operator on the given space.
    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space,
            elements: Array2::eye(d),
        }
    }

    /// Wrap an explicit matrix; the matrix must be square and match the
    /// space dimension.
    pub fn from_elements(space: HilbertSpace, elements: Array2<C64>) -> Result<Self, OperatorError> {
        let d = space.total_dim();
        if elements.nrows() != d || elements.ncols() != d {
            return Err(OperatorError::DimensionMismatch(format!(
                "matrix is {}×{}, space dimension is {d}",
                elements.nrows(),
                elements.ncols()
            )));
        }
        Ok(Self { space, elements })
    }

    /// Bosonic annihilation operator on a Fock space truncated at `cutoff`
    /// levels: entries `a[n, n+1] = √(n+1)`.
    pub fn annihilation(cutoff: usize) -> Result<Self, OperatorError> {
        if cutoff < 2 {
            return Err(OperatorError::InvalidDimension(format!(
                "Fock cutoff {cutoff} < 2"
            )));
        }
        let space = HilbertSpace::single(cutoff)?;
        let mut m = Array2::<C64>::zeros((cutoff, cutoff));
        for n in 0..cutoff - 1 {
            m[[n, n + 1]] = C64::new(((n + 1) as f64).sqrt(), 0.0);
        }
        Ok(Self { space, elements: m })
    }

    /// Number operator `a†a = diag(0, 1, …, cutoff−1)`.
    pub fn number(cutoff: usize) -> Result<Self, OperatorError> {
        let a = Self::annihilation(cutoff)?;
        Ok(a.dagger().matmul(&a))
    }

    /// 2×2 Pauli operator in the crate convention (see module docs).
    pub fn pauli(kind: Pauli) -> Self {
        let space = HilbertSpace::single(2).expect("2 >= 2");
        let mut m = Array2::<C64>::zeros((2, 2));
        match kind {
            Pauli::Z => {
                m[[0, 0]] = C64::new(-1.0, 0.0);
                m[[1, 1]] = C64::new(1.0, 0.0);
            }
            Pauli::Plus => {
                // |1⟩⟨0|
                m[[1, 0]] = C64::new(1.0, 0.0);
            }
            Pauli::Minus => {
                // |0⟩⟨1|
                m[[0, 1]] = C64::new(1.0, 0.0);
            }
        }
        Self { space, elements: m }
    }

    /// Excited-state projector `σ⁺σ⁻ = diag(0, 1)`.
    pub fn qubit_excited_projector() -> Self {
        let p = Self::pauli(Pauli::Plus);
        p.matmul(&Self::pauli(Pauli::Minus))
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn elements(&self) -> &Array2<C64> {
        &self.elements
    }

    pub fn elements_mut(&mut self) -> &mut Array2<C64> {
        &mut self.elements
    }

    /// Tensor-embed this operator into `slot` of a larger space, padding all
    /// other factors with identities: `I ⊗ … ⊗ self ⊗ … ⊗ I`.
    pub fn embed(&self, slot: usize, space: &HilbertSpace) -> Result<Self, OperatorError> {
        if slot >= space.n_factors() {
            return Err(OperatorError::SlotOutOfRange {
                slot,
                n_factors: space.n_factors(),
            });
        }
        if self.dim() != space.factors()[slot] {
            return Err(OperatorError::DimensionMismatch(format!(
                "operator dimension {} does not match factor {} dimension {}",
                self.dim(),
                slot,
                space.factors()[slot]
            )));
        }
        let pre: usize = space.factors()[..slot].iter().product();
        let post: usize = space.factors()[slot + 1..].iter().product();
        let m = kron(&kron(&Array2::eye(pre), &self.elements), &Array2::eye(post));
        Ok(Self {
            space: space.clone(),
            elements: m,
        })
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let d = self.dim();
        let mut m = Array2::<C64>::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] = self.elements[[j, i]].conj();
            }
        }
        Self {
            space: self.space.clone(),
            elements: m,
        }
    }

    /// Matrix product. Panics on space mismatch (operator arithmetic inside
    /// a single model always shares one space; mismatches are programmer
    /// errors, mirroring `ndarray`'s shape panics).
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.space, rhs.space,
            "matmul requires operators on the same Hilbert space"
        );
        Self {
            space: self.space.clone(),
            elements: self.elements.dot(&rhs.elements),
        }
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        let ab = self.matmul(other);
        let ba = other.matmul(self);
        &ab - &ba
    }

    /// Multiply by a real scalar.
    pub fn scaled(&self, c: f64) -> Self {
        self.scaled_complex(C64::new(c, 0.0))
    }

    /// Multiply by a complex scalar.
    pub fn scaled_complex(&self, c: C64) -> Self {
        Self {
            space: self.space.clone(),
            elements: self.elements.mapv(|x| x * c),
        }
    }

    /// In-place `self += c · other` (the workhorse of Hamiltonian assembly).
    pub fn add_scaled_inplace(&mut self, other: &Self, c: f64) {
        assert_eq!(
            self.space, other.space,
            "add_scaled_inplace requires operators on the same Hilbert space"
        );
        self.elements.zip_mut_with(&other.elements, |a, &b| {
            *a += b * c;
        });
    }

    pub fn trace(&self) -> C64 {
        self.elements.diag().sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.elements.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.elements
            .iter()
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Maximum deviation from Hermiticity, `max |A_jk − conj(A_kj)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let dev = (self.elements[[i, j]] - self.elements[[j, i]].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// Hermitian within the crate tolerance `1e-12 × max|A|` (with an
    /// absolute floor of 1e-14 so the zero operator counts as Hermitian).
    pub fn is_hermitian(&self) -> bool {
        let tol = (1e-12 * self.max_abs()).max(1e-14);
        self.hermiticity_deviation() <= tol
    }

    /// Ascending real eigenvalues of a Hermitian operator.
    pub fn eigenvalues_hermitian(&self) -> Result<Vec<f64>, OperatorError> {
        Ok(self.eigen_hermitian()?.0)
    }

    /// Ascending eigenvalues and the matching eigenvectors (as columns) of a
    /// Hermitian operator.
    pub fn eigen_hermitian(&self) -> Result<(Vec<f64>, Array2<C64>), OperatorError> {
        let tol = (1e-12 * self.max_abs()).max(1e-14);
        let dev = self.hermiticity_deviation();
        if dev > tol {
            return Err(OperatorError::NotHermitian {
                deviation: dev,
                tolerance: tol,
            });
        }
        let d = self.dim();
        let m = nalgebra::DMatrix::<C64>::from_fn(d, d, |r, c| self.elements[[r, c]]);
        let se = m.symmetric_eigen();
        // Sort ascending, permuting eigenvectors alongside.
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            se.eigenvalues[a]
                .partial_cmp(&se.eigenvalues[b])
                .expect("eigenvalues of a Hermitian matrix are finite")
        });
        let vals: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let mut vecs = Array2::<C64>::zeros((d, d));
        for (out_col, &in_col) in order.iter().enumerate() {
            for r in 0..d {
                vecs[[r, out_col]] = se.eigenvectors[(r, in_col)];
            }
        }
        Ok((vals, vecs))
    }

    /// Trace out every factor except `keep`, returning the reduced operator
    /// on that single factor.
    pub fn partial_trace(&self, keep: usize) -> Result<Self, OperatorError> {
        if keep >= self.space.n_factors() {
            return Err(OperatorError::SlotOutOfRange {
                slot: keep,
                n_factors: self.space.n_factors(),
            });
        }
        let m = self.space.factors()[keep];
        let stride = self.space.stride(keep);
        let d = self.dim();
        let mut out = Array2::<C64>::zeros((m, m));
        // Flat indices with the kept factor's digit equal to zero enumerate
        // the environment basis; the kept digit then advances by `stride`.
        for base in 0..d {
            let digit = (base / stride) % m;
            if digit != 0 {
                continue;
            }
            for a in 0..m {
                for b in 0..m {
                    out[[a, b]] += self.elements[[base + a * stride, base + b * stride]];
                }
            }
        }
        Ok(Self {
            space: HilbertSpace::single(m)?,
            elements: out,
        })
    }

    /// `true` if the shifted Cholesky test certifies all eigenvalues
    /// ≥ −shift (used for positivity-up-to-tolerance checks).
    ///
    /// The factorization is done in-house because a generic complex Cholesky
    /// can silently "succeed" on an indefinite matrix: the complex square
    /// root of a negative pivot is still a valid complex number. A Hermitian
    /// matrix has real pivots, so we require each one to be strictly
    /// positive after the diagonal shift.
    pub fn is_positive_within(&self, shift: f64) -> bool {
        let d = self.dim();
        // Lower-triangular factor L with A + shift·I = L·L†, stored dense.
        let mut l = vec![C64::new(0.0, 0.0); d * d];
        for j in 0..d {
            let mut pivot = self.elements[[j, j]].re + shift;
            for k in 0..j {
                pivot -= l[j * d + k].norm_sqr();
            }
            if !(pivot > 0.0) {
                // Catches pivot ≤ 0 and NaN propagation alike.
                return false;
            }
            let ljj = pivot.sqrt();
            l[j * d + j] = C64::new(ljj, 0.0);
            for i in (j + 1)..d {
                let mut v = self.elements[[i, j]];
                for k in 0..j {
                    v -= l[i * d + k] * l[j * d + k].conj();
                }
                l[i * d + j] = v / ljj;
            }
        }
        true
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "adding operators on different spaces");
        Operator {
            space: self.space.clone(),
            elements: &self.elements + &rhs.elements,
        }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(
            self.space, rhs.space,
            "subtracting operators on different spaces"
        );
        Operator {
            space: self.space.clone(),
            elements: &self.elements - &rhs.elements,
        }
    }
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<C64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Density matrix
// ---------------------------------------------------------------------------

/// A validated density matrix: Hermitian, unit trace, positive within the
/// integrator tolerance (−1e-7 on the minimum eigenvalue).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Pure product state with the given per-factor occupation numbers.
    pub fn pure_basis_state(
        space: HilbertSpace,
        occupations: &[usize],
    ) -> Result<Self, OperatorError> {
        let idx = space.basis_index(occupations)?;
        let mut op = Operator::zeros(space);
        op.elements_mut()[[idx, idx]] = C64::new(1.0, 0.0);
        Ok(Self { op })
    }

    /// Everything in its ground state.
    pub fn ground(space: HilbertSpace) -> Self {
        let mut op = Operator::zeros(space);
        op.elements_mut()[[0, 0]] = C64::new(1.0, 0.0);
        Self { op }
    }

    /// Pure state from a sparse ket: a list of `(flat basis index, amplitude)`
    /// pairs. The ket is normalized internally.
    pub fn from_ket(
        space: HilbertSpace,
        amplitudes: &[(usize, C64)],
    ) -> Result<Self, OperatorError> {
        let d = space.total_dim();
        let mut ket = vec![C64::new(0.0, 0.0); d];
        for &(idx, amp) in amplitudes {
            if idx >= d {
                return Err(OperatorError::InvalidDimension(format!(
                    "ket index {idx} out of range for dimension {d}"
                )));
            }
            ket[idx] += amp;
        }
        let norm: f64 = ket.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(OperatorError::InvalidDensityMatrix("zero ket".into()));
        }
        let mut op = Operator::zeros(space);
        for i in 0..d {
            for j in 0..d {
                op.elements_mut()[[i, j]] = ket[i] * ket[j].conj() / (norm * norm);
            }
        }
        Ok(Self { op })
    }

    /// Validate an arbitrary operator as a density matrix: Hermitian, trace
    /// within 1e-8 of one, minimum eigenvalue ≥ −1e-7.
    pub fn from_operator(op: Operator) -> Result<Self, OperatorError> {
        if !op.is_hermitian() {
            return Err(OperatorError::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {:.3e})",
                op.hermiticity_deviation()
            )));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-10 {
            return Err(OperatorError::InvalidDensityMatrix(format!(
                "trace {tr} is not 1"
            )));
        }
        if !op.is_positive_within(1e-7) {
            return Err(OperatorError::InvalidDensityMatrix(
                "minimum eigenvalue below -1e-7".into(),
            ));
        }
        Ok(Self { op })
    }

    /// Wrap without validation (for integrator internals that preserve the
    /// invariants by construction).
    pub(crate) fn from_operator_unchecked(op: Operator) -> Self {
        Self { op }
    }

    pub fn space(&self) -> &HilbertSpace {
        self.op.space()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    /// Expectation value `tr(ρ·op)`.
    pub fn expect(&self, op: &Operator) -> Result<C64, OperatorError> {
        if self.op.space() != op.space() {
            return Err(OperatorError::SpaceMismatch(
                "expectation of an operator on a different space".into(),
            ));
        }
        let d = op.dim();
        let rho = self.op.elements();
        let o = op.elements();
        let mut acc = C64::new(0.0, 0.0);
        // tr(ρ O) = Σ_ij ρ_ij O_ji
        for i in 0..d {
            for j in 0..d {
                acc += rho[[i, j]] * o[[j, i]];
            }
        }
        Ok(acc)
    }

    /// Real part of the expectation value of a Hermitian observable.
    pub fn expect_real(&self, op: &Operator) -> Result<f64, OperatorError> {
        Ok(self.expect(op)?.re)
    }

    /// Purity `tr(ρ²) = Σ|ρ_ij|²` (Hermitian ρ).
    pub fn purity(&self) -> f64 {
        self.op.elements().iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn trace(&self) -> C64 {
        self.op.trace()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // -- HilbertSpace --------------------------------------------------------

    #[test]
    fn space_dimensions_multiply() {
        let s = HilbertSpace::new(vec![3, 2, 2]).unwrap();
        assert_eq!(s.total_dim(), 12);
        assert_eq!(s.factors(), &[3, 2, 2]);
    }

    #[test]
    fn space_rejects_small_factors() {
        assert!(HilbertSpace::new(vec![3, 1]).is_err());
        assert!(HilbertSpace::new(vec![]).is_err());
    }

    #[test]
    fn basis_index_mixed_radix() {
        let s = HilbertSpace::new(vec![3, 2, 2]).unwrap();
        assert_eq!(s.basis_index(&[0, 0, 0]).unwrap(), 0);
        assert_eq!(s.basis_index(&[0, 0, 1]).unwrap(), 1);
        assert_eq!(s.basis_index(&[0, 1, 0]).unwrap(), 2);
        assert_eq!(s.basis_index(&[1, 0, 0]).unwrap(), 4);
        assert_eq!(s.basis_index(&[2, 1, 1]).unwrap(), 11);
        assert!(s.basis_index(&[3, 0, 0]).is_err());
        assert!(s.basis_index(&[0, 0]).is_err());
    }

    // -- ladder operators ----------------------------------------------------

    #[test]
    fn annihilation_lowest_order() {
        let a = Operator::annihilation(2).unwrap();
        assert_eq!(a.elements()[[0, 1]], c(1.0, 0.0));
        assert_eq!(a.elements()[[0, 0]], c(0.0, 0.0));
        assert_eq!(a.elements()[[1, 0]], c(0.0, 0.0));
        assert_eq!(a.elements()[[1, 1]], c(0.0, 0.0));
    }

    #[test]
    fn annihilation_sqrt_rule() {
        let a = Operator::annihilation(3).unwrap();
        assert_relative_eq!(a.elements()[[1, 2]].re, 2.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn number_operator_is_diagonal_count() {
        let n = Operator::number(4).unwrap();
        for k in 0..4 {
            assert_relative_eq!(n.elements()[[k, k]].re, k as f64, max_relative = 1e-15);
        }
        assert!(n.is_hermitian());
    }

    #[test]
    fn annihilation_rejects_degenerate_cutoff() {
        assert!(Operator::annihilation(1).is_err());
        assert!(Operator::annihilation(0).is_err());
    }

    // -- Pauli conventions ----------------------------------------------------

    #[test]
    fn pauli_z_sign_convention() {
        let z = Operator::pauli(Pauli::Z);
        assert_eq!(z.elements()[[0, 0]], c(-1.0, 0.0));
        assert_eq!(z.elements()[[1, 1]], c(1.0, 0.0));
    }

    #[test]
    fn plus_times_minus_is_excited_projector() {
        let p = Operator::pauli(Pauli::Plus).matmul(&Operator::pauli(Pauli::Minus));
        assert_eq!(p.elements()[[0, 0]], c(0.0, 0.0));
        assert_eq!(p.elements()[[1, 1]], c(1.0, 0.0));
        assert_eq!(p.elements()[[0, 1]], c(0.0, 0.0));
    }

    #[test]
    fn plus_squared_is_zero() {
        let p = Operator::pauli(Pauli::Plus);
        assert_eq!(p.matmul(&p).max_abs(), 0.0);
    }

    #[test]
    fn plus_raises_ground() {
        // σ⁺|0⟩ = |1⟩: column 0 of σ⁺ is e₁.
        let p = Operator::pauli(Pauli::Plus);
        assert_eq!(p.elements()[[1, 0]], c(1.0, 0.0));
    }

    // -- embed ----------------------------------------------------------------

    #[test]
    fn embed_matches_explicit_kron() {
        let s = HilbertSpace::new(vec![3, 2, 2]).unwrap();
        let z = Operator::pauli(Pauli::Z);
        let e = z.embed(1, &s).unwrap();
        assert_eq!(e.dim(), 12);
        // I₃ ⊗ σᶻ ⊗ I₂ computed independently.
        let expected = kron(
            &kron(&Array2::eye(3), Operator::pauli(Pauli::Z).elements()),
            &Array2::eye(2),
        );
        let diff = (e.elements() - &expected)
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(diff, 0.0);
    }

    #[test]
    fn embed_trace_identity() {
        // trace(embed(X)) = trace(X) · (total_dim / dim(X)) = 3 · (6/3).
        let s = HilbertSpace::new(vec![3, 2]).unwrap();
        let n = Operator::number(3).unwrap();
        let e = n.embed(0, &s).unwrap();
        assert_relative_eq!(e.trace().re, n.trace().re * 2.0, max_relative = 1e-14);
        assert_relative_eq!(e.trace().re, 6.0, max_relative = 1e-14);
    }

    #[test]
    fn embedded_factors_commute() {
        let s = HilbertSpace::new(vec![2, 2, 2]).unwrap();
        let z1 = Operator::pauli(Pauli::Z).embed(1, &s).unwrap();
        let z2 = Operator::pauli(Pauli::Z).embed(2, &s).unwrap();
        assert_abs_diff_eq!(z1.commutator(&z2).max_abs(), 0.0);
    }

    #[test]
    fn embed_errors() {
        let s = HilbertSpace::new(vec![3, 2]).unwrap();
        let z = Operator::pauli(Pauli::Z);
        assert!(matches!(
            z.embed(5, &s),
            Err(OperatorError::SlotOutOfRange { .. })
        ));
        assert!(matches!(
            z.embed(0, &s),
            Err(OperatorError::DimensionMismatch(_))
        ));
    }

    // -- eigenvalues -----------------------------------------------------------

    #[test]
    fn eigenvalues_sorted_diag() {
        let s = HilbertSpace::single(3).unwrap();
        let mut m = Array2::<C64>::zeros((3, 3));
        m[[0, 0]] = c(3.0, 0.0);
        m[[1, 1]] = c(1.0, 0.0);
        m[[2, 2]] = c(2.0, 0.0);
        let op = Operator::from_elements(s, m).unwrap();
        let vals = op.eigenvalues_hermitian().unwrap();
        assert_relative_eq!(vals[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(vals[1], 2.0, max_relative = 1e-12);
        assert_relative_eq!(vals[2], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn sigma_x_eigenvalues() {
        let x = &Operator::pauli(Pauli::Plus) + &Operator::pauli(Pauli::Minus);
        let vals = x.eigenvalues_hermitian().unwrap();
        assert_relative_eq!(vals[0], -1.0, max_relative = 1e-12);
        assert_relative_eq!(vals[1], 1.0, max_relative = 1e-12);
    }

    /// Two degenerate qubits exchange-coupled with strength J split by
    /// exactly 2J in the one-excitation sector: the 2×2 block [[0, J], [J, 0]]
    /// has eigenvalues ±J.
    #[test]
    fn degenerate_exchange_split_is_2j() {
        let s = HilbertSpace::new(vec![2, 2]).unwrap();
        let j = 3.35_f64;
        let sp0 = Operator::pauli(Pauli::Plus).embed(0, &s).unwrap();
        let sm0 = Operator::pauli(Pauli::Minus).embed(0, &s).unwrap();
        let sp1 = Operator::pauli(Pauli::Plus).embed(1, &s).unwrap();
        let sm1 = Operator::pauli(Pauli::Minus).embed(1, &s).unwrap();
        let mut h = Operator::zeros(s);
        h.add_scaled_inplace(&sp0.matmul(&sm1), j);
        h.add_scaled_inplace(&sp1.matmul(&sm0), j);
        let vals = h.eigenvalues_hermitian().unwrap();
        // Sectors: {00}, {01,10} (split ±J), {11}.
        assert_relative_eq!(vals[0], -j, max_relative = 1e-12);
        assert_relative_eq!(vals[3], j, max_relative = 1e-12);
        assert_relative_eq!(vals[3] - vals[0], 2.0 * j, max_relative = 1e-12);
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let a = Operator::annihilation(4).unwrap();
        assert!(matches!(
            a.eigenvalues_hermitian(),
            Err(OperatorError::NotHermitian { .. })
        ));
    }

    #[test]
    fn eigenvectors_reconstruct() {
        // Random-ish Hermitian matrix; check V·diag(λ)·V† == A.
        let d = 6;
        let s = HilbertSpace::single(d).unwrap();
        let mut m = Array2::<C64>::zeros((d, d));
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64) / (1u64 << 31) as f64 - 1.0
        };
        for i in 0..d {
            for j in 0..=i {
                let v = if i == j {
                    c(rnd(), 0.0)
                } else {
                    c(rnd(), rnd())
                };
                m[[i, j]] = v;
                m[[j, i]] = v.conj();
            }
        }
        let op = Operator::from_elements(s, m.clone()).unwrap();
        let (vals, vecs) = op.eigen_hermitian().unwrap();
        let mut recon = Array2::<C64>::zeros((d, d));
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    recon[[i, j]] += vecs[[i, k]] * c(vals[k], 0.0) * vecs[[j, k]].conj();
                }
            }
        }
        let err = (&recon - &m).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "reconstruction error {err}");
    }

    // -- partial trace ---------------------------------------------------------

    #[test]
    fn embed_partial_trace_roundtrip() {
        let s = HilbertSpace::new(vec![3, 2, 2]).unwrap();
        let n = Operator::number(3).unwrap();
        let reduced = n.embed(0, &s).unwrap().partial_trace(0).unwrap();
        // Partial trace multiplies by the traced-out identity dimensions (4).
        let diff = reduced
            .elements()
            .iter()
            .zip(n.elements().iter())
            .map(|(a, b)| (a - b * c(4.0, 0.0)).norm())
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(diff, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn partial_trace_of_product_density() {
        let s = HilbertSpace::new(vec![3, 2]).unwrap();
        let rho = DensityMatrix::pure_basis_state(s, &[2, 1]).unwrap();
        let r0 = rho.as_operator().partial_trace(0).unwrap();
        let r1 = rho.as_operator().partial_trace(1).unwrap();
        assert_relative_eq!(r0.elements()[[2, 2]].re, 1.0, max_relative = 1e-14);
        assert_relative_eq!(r1.elements()[[1, 1]].re, 1.0, max_relative = 1e-14);
        assert_relative_eq!(r0.trace().re, 1.0, max_relative = 1e-14);
    }

    // -- expectation / density matrices ----------------------------------------

    #[test]
    fn expectation_excited_projector() {
        let s = HilbertSpace::single(2).unwrap();
        let rho = DensityMatrix::pure_basis_state(s, &[1]).unwrap();
        let p = Operator::qubit_excited_projector();
        assert_relative_eq!(rho.expect_real(&p).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn expectation_traceless_in_maximally_mixed() {
        let s = HilbertSpace::single(2).unwrap();
        let mixed = Operator::identity(s.clone()).scaled(0.5);
        let rho = DensityMatrix::from_operator(mixed).unwrap();
        let z = Operator::pauli(Pauli::Z);
        assert_abs_diff_eq!(rho.expect_real(&z).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expectation_space_mismatch_errors() {
        let s2 = HilbertSpace::single(2).unwrap();
        let s3 = HilbertSpace::single(3).unwrap();
        let rho = DensityMatrix::ground(s2);
        let n = Operator::number(3).unwrap();
        let _ = s3;
        assert!(rho.expect(&n).is_err());
    }

    /// A truncated coherent state |α|² = 20 at cutoff 60 has ⟨a†a⟩ = 20
    /// within 1e-3 (Poisson tail beyond the cutoff is negligible).
    #[test]
    fn coherent_state_photon_number() {
        let cutoff = 60usize;
        let alpha_sq = 20.0f64;
        let alpha = alpha_sq.sqrt();
        let space = HilbertSpace::single(cutoff).unwrap();
        // c_n = e^{-|α|²/2} αⁿ/√(n!) built by recurrence c_n = c_{n-1}·α/√n.
        let mut amps = Vec::with_capacity(cutoff);
        let mut cn = (-alpha_sq / 2.0).exp();
        amps.push((0usize, C64::new(cn, 0.0)));
        for n in 1..cutoff {
            cn *= alpha / (n as f64).sqrt();
            amps.push((n, C64::new(cn, 0.0)));
        }
        let rho = DensityMatrix::from_ket(space, &amps).unwrap();
        let n_op = Operator::number(cutoff).unwrap();
        let nbar = rho.expect_real(&n_op).unwrap();
        assert!((nbar - 20.0).abs() < 1e-3, "nbar = {nbar}");
    }

    #[test]
    fn density_matrix_validation() {
        let s = HilbertSpace::single(2).unwrap();
        // Trace 2 rejected.
        assert!(DensityMatrix::from_operator(Operator::identity(s.clone())).is_err());
        // Negative eigenvalue rejected.
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[0, 0]] = c(1.5, 0.0);
        m[[1, 1]] = c(-0.5, 0.0);
        let op = Operator::from_elements(s.clone(), m).unwrap();
        assert!(DensityMatrix::from_operator(op).is_err());
        // Valid mixed state accepted.
        let ok = Operator::identity(s).scaled(0.5);
        assert!(DensityMatrix::from_operator(ok).is_ok());
    }

    #[test]
    fn purity_of_pure_and_mixed() {
        let s = HilbertSpace::single(2).unwrap();
        let pure = DensityMatrix::ground(s.clone());
        assert_relative_eq!(pure.purity(), 1.0, max_relative = 1e-14);
        let mixed =
            DensityMatrix::from_operator(Operator::identity(s).scaled(0.5)).unwrap();
        assert_relative_eq!(mixed.purity(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn from_ket_normalizes() {
        let s = HilbertSpace::single(2).unwrap();
        let rho =
            DensityMatrix::from_ket(s, &[(0, c(1.0, 0.0)), (1, c(1.0, 0.0))]).unwrap();
        assert_relative_eq!(rho.trace().re, 1.0, max_relative = 1e-14);
        assert_relative_eq!(rho.as_operator().elements()[[0, 1]].re, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn positivity_probe() {
        let s = HilbertSpace::single(2).unwrap();
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[0, 0]] = c(1.0, 0.0);
        m[[1, 1]] = c(-5e-8, 0.0);
        let op = Operator::from_elements(s, m).unwrap();
        assert!(op.is_positive_within(1e-7));
        assert!(!op.is_positive_within(1e-9));
    }
}
