//! Truncated Fock-space linear algebra.
//!
//! Everything here is dense: the swap computation factorizes per time bin, so
//! the largest matrices are a handful of two-mode blocks. Ladder operators are
//! truncated, so `[a, a†] = 1` fails on the top Fock level of each mode; the
//! functions below say which identities remain exact.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Fock cutoffs for signal modes and for the thermal environment modes used in
/// the channel dilation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationConfig {
    /// Levels |0⟩..|d_sys-1⟩ per signal mode.
    pub d_sys: usize,
    /// Levels per thermal environment mode.
    pub d_env: usize,
    /// Largest thermal population allowed beyond `d_env`.
    pub tail_tol: f64,
}

impl TruncationConfig {
    pub const DEFAULT_D_ENV: usize = 8;
    pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

    pub fn new(d_sys: usize, d_env: usize) -> Result<Self> {
        let cfg = Self { d_sys, d_env, tail_tol: Self::DEFAULT_TAIL_TOL };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default cutoffs for an encoding with `n` photons per occupied bin:
    /// `d_sys = n + 3`, `d_env = 8`.
    pub fn for_encoding(n: usize) -> Self {
        Self {
            d_sys: n + 3,
            d_env: Self::DEFAULT_D_ENV,
            tail_tol: Self::DEFAULT_TAIL_TOL,
        }
    }

    /// Grows `d_env` until the thermal tail at `nbar` is below `tail_tol`.
    pub fn fitted_to(mut self, nbar: f64) -> Self {
        while thermal_tail(nbar, self.d_env) >= self.tail_tol && self.d_env < 256 {
            self.d_env += 1;
        }
        self
    }

    /// Both cutoffs doubled; used for convergence checks.
    pub fn doubled(self) -> Self {
        Self { d_sys: 2 * self.d_sys, d_env: 2 * self.d_env, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_sys < 2 {
            return Err(Error::InvalidDimension(self.d_sys));
        }
        if self.d_env < 2 {
            return Err(Error::InvalidDimension(self.d_env));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tail_tol must be positive, got {}",
                self.tail_tol
            )));
        }
        Ok(())
    }

    /// Checks that `max_photons` plus one scattered photon fits in `d_sys`.
    pub fn check_encoding(&self, max_photons: usize) -> Result<()> {
        if self.d_sys < max_photons + 2 {
            return Err(Error::Truncation(format!(
                "d_sys = {} cannot hold {} encoded photons plus one scattered photon",
                self.d_sys, max_photons
            )));
        }
        Ok(())
    }

    pub fn check_thermal_tail(&self, nbar: f64) -> Result<()> {
        let tail = thermal_tail(nbar, self.d_env);
        if tail >= self.tail_tol {
            return Err(Error::Truncation(format!(
                "thermal tail {:.3e} beyond d_env = {} exceeds tolerance {:.1e}",
                tail, self.d_env, self.tail_tol
            )));
        }
        Ok(())
    }
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self::for_encoding(1)
    }
}

/// Population of a thermal state with mean `nbar` on levels `m >= d`.
pub fn thermal_tail(nbar: f64, d: usize) -> f64 {
    if nbar <= 0.0 {
        return 0.0;
    }
    (nbar / (1.0 + nbar)).powi(d as i32)
}

/// Operator on a single truncated mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOperator {
    mat: Array2<C64>,
}

impl ModeOperator {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c {
            return Err(Error::InvalidParameter(format!("operator must be square, got {r}x{c}")));
        }
        if r < 1 {
            return Err(Error::InvalidDimension(r));
        }
        Ok(Self { mat })
    }

    pub fn zeros(d: usize) -> Self {
        Self { mat: Array2::zeros((d, d)) }
    }

    pub fn identity(d: usize) -> Self {
        Self { mat: Array2::eye(d) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn dagger(&self) -> Self {
        Self { mat: dagger(&self.mat) }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_abs_diff(&self.mat, &dagger(&self.mat)) <= tol
    }

    /// Embeds into a larger truncation, zero-padding the new levels.
    pub fn padded(&self, d: usize) -> Self {
        let n = self.dim().min(d);
        let mut mat = Array2::zeros((d, d));
        mat.slice_mut(ndarray::s![..n, ..n]).assign(&self.mat.slice(ndarray::s![..n, ..n]));
        Self { mat }
    }

    /// Keeps levels `0..d`.
    pub fn cropped(&self, d: usize) -> Self {
        self.padded(d)
    }

    /// `Tr(self · other)`.
    pub fn trace_product(&self, other: &ModeOperator) -> C64 {
        let d = self.dim().min(other.dim());
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.mat[[i, j]] * other.mat[[j, i]];
            }
        }
        acc
    }

    /// Mean photon number `Tr(ρ a†a)`.
    pub fn mean_photons(&self) -> f64 {
        self.mat.diag().iter().enumerate().map(|(n, x)| n as f64 * x.re).sum()
    }
}

/// Basis vector |n⟩ in a `d`-level truncation.
pub fn fock_vector(n: usize, d: usize) -> Result<Array1<C64>> {
    if n >= d {
        return Err(Error::CutoffViolation { n, d });
    }
    let mut v = Array1::zeros(d);
    v[n] = ONE;
    Ok(v)
}

/// |m⟩⟨n| in a `d`-level truncation.
pub fn fock_operator(m: usize, n: usize, d: usize) -> Result<ModeOperator> {
    if m >= d {
        return Err(Error::CutoffViolation { n: m, d });
    }
    if n >= d {
        return Err(Error::CutoffViolation { n, d });
    }
    let mut mat = Array2::zeros((d, d));
    mat[[m, n]] = ONE;
    Ok(ModeOperator { mat })
}

/// |n⟩⟨n| in a `d`-level truncation.
pub fn fock_state(n: usize, d: usize) -> Result<ModeOperator> {
    fock_operator(n, n, d)
}

/// Truncated annihilation operator, `⟨n-1|a|n⟩ = √n`.
pub fn annihilation(d: usize) -> Result<ModeOperator> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut mat = Array2::zeros((d, d));
    for n in 1..d {
        mat[[n - 1, n]] = C64::from((n as f64).sqrt());
    }
    Ok(ModeOperator { mat })
}

#[derive(Clone, Debug)]
pub struct ThermalState {
    pub rho: ModeOperator,
    /// Population the untruncated state carries on levels `>= d`.
    pub tail_mass: f64,
}

/// Thermal state with mean photon number `nbar`, renormalized over `d` levels.
pub fn thermal_state(nbar: f64, d: usize) -> Result<ThermalState> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidParameter(format!("nbar must be >= 0, got {nbar}")));
    }
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    let ratio = nbar / (1.0 + nbar);
    let probs: Vec<f64> = (0..d).map(|m| ratio.powi(m as i32) / (1.0 + nbar)).collect();
    let kept: f64 = probs.iter().sum();
    let mut mat = Array2::zeros((d, d));
    for (m, p) in probs.iter().enumerate() {
        mat[[m, m]] = C64::from(p / kept);
    }
    Ok(ThermalState { rho: ModeOperator { mat }, tail_mass: thermal_tail(nbar, d) })
}

/// Operator on a tensor product of truncated modes, row-major with the first
/// mode most significant (the `kron` convention).
#[derive(Clone, Debug, PartialEq)]
pub struct MultiModeOperator {
    mode_dims: Vec<usize>,
    mat: Array2<C64>,
}

impl MultiModeOperator {
    pub fn new(mode_dims: Vec<usize>, mat: Array2<C64>) -> Result<Self> {
        let total: usize = mode_dims.iter().product();
        if mode_dims.is_empty() || mat.dim() != (total, total) {
            return Err(Error::InvalidParameter(format!(
                "matrix {:?} does not match mode dims {:?}",
                mat.dim(),
                mode_dims
            )));
        }
        Ok(Self { mode_dims, mat })
    }

    pub fn identity(mode_dims: &[usize]) -> Self {
        let total = mode_dims.iter().product();
        Self { mode_dims: mode_dims.to_vec(), mat: Array2::eye(total) }
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn dagger(&self) -> Self {
        Self { mode_dims: self.mode_dims.clone(), mat: dagger(&self.mat) }
    }

    /// Matrix product; mode structures must agree.
    pub fn compose(&self, other: &MultiModeOperator) -> Result<Self> {
        if self.mode_dims != other.mode_dims {
            return Err(Error::InvalidParameter(format!(
                "mode dims {:?} and {:?} differ",
                self.mode_dims, other.mode_dims
            )));
        }
        Ok(Self { mode_dims: self.mode_dims.clone(), mat: self.mat.dot(&other.mat) })
    }

    /// `self · op · self†`.
    pub fn conjugate(&self, op: &MultiModeOperator) -> Result<Self> {
        self.compose(op)?.compose(&self.dagger())
    }

    /// Reinterprets a single-mode result.
    pub fn into_mode(self) -> Result<ModeOperator> {
        if self.mode_dims.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "expected one mode, found {}",
                self.mode_dims.len()
            )));
        }
        Ok(ModeOperator { mat: self.mat })
    }
}

impl From<ModeOperator> for MultiModeOperator {
    fn from(op: ModeOperator) -> Self {
        Self { mode_dims: vec![op.dim()], mat: op.mat }
    }
}

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|x| x.conj())
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let x = a[[i, j]];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = x * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Tensor product of operators, in order.
pub fn tensor(ops: &[MultiModeOperator]) -> Result<MultiModeOperator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("tensor of an empty list".into()))?;
    let mut acc = first.clone();
    for op in rest {
        acc.mat = kron(&acc.mat, &op.mat);
        acc.mode_dims.extend_from_slice(&op.mode_dims);
    }
    Ok(acc)
}

fn unflatten(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = idx % d;
        idx /= d;
    }
}

fn flatten(digits: impl Iterator<Item = (usize, usize)>) -> usize {
    digits.fold(0, |acc, (digit, d)| acc * d + digit)
}

/// Traces out the listed modes, keeping the rest in their original order.
pub fn partial_trace(op: &MultiModeOperator, traced: &[usize]) -> Result<MultiModeOperator> {
    let dims = &op.mode_dims;
    if let Some(&bad) = traced.iter().find(|&&m| m >= dims.len()) {
        return Err(Error::IndexOutOfRange(format!(
            "mode {bad} of a {}-mode operator",
            dims.len()
        )));
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|m| !traced.contains(m)).collect();
    if kept.is_empty() {
        let mat = Array2::from_elem((1, 1), op.trace());
        return Ok(MultiModeOperator { mode_dims: vec![1], mat });
    }
    let kept_dims: Vec<usize> = kept.iter().map(|&m| dims[m]).collect();
    let kept_total: usize = kept_dims.iter().product();
    let mut out = Array2::zeros((kept_total, kept_total));
    let mut row = vec![0; dims.len()];
    let mut col = vec![0; dims.len()];
    for i in 0..op.dim() {
        unflatten(i, dims, &mut row);
        for j in 0..op.dim() {
            unflatten(j, dims, &mut col);
            if traced.iter().any(|&m| row[m] != col[m]) {
                continue;
            }
            let r = flatten(kept.iter().map(|&m| (row[m], dims[m])));
            let c = flatten(kept.iter().map(|&m| (col[m], dims[m])));
            out[[r, c]] += op.mat[[i, j]];
        }
    }
    Ok(MultiModeOperator { mode_dims: kept_dims, mat: out })
}

/// Flat index of the multi-mode Fock state with the given photon counts.
pub fn number_index(counts: &[usize], dims: &[usize]) -> Result<usize> {
    if counts.len() != dims.len() {
        return Err(Error::IndexOutOfRange(format!(
            "{} counts for {} modes",
            counts.len(),
            dims.len()
        )));
    }
    for (&n, &d) in counts.iter().zip(dims) {
        if n >= d {
            return Err(Error::CutoffViolation { n, d });
        }
    }
    Ok(flatten(counts.iter().copied().zip(dims.iter().copied())))
}

/// Projector |n₁ n₂ …⟩⟨n₁ n₂ …|.
pub fn number_projector(counts: &[usize], dims: &[usize]) -> Result<MultiModeOperator> {
    let idx = number_index(counts, dims)?;
    let total: usize = dims.iter().product();
    let mut mat = Array2::zeros((total, total));
    mat[[idx, idx]] = ONE;
    Ok(MultiModeOperator { mode_dims: dims.to_vec(), mat })
}

fn norm1(m: &Array2<C64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.mapv(|x| x / 2f64.powi(squarings));
    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=40 {
        term = term.dot(&scaled).mapv(|x| x / k as f64);
        result += &term;
        if norm1(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Unitary `exp(θ (a†b − a b†))` on a `d_a ⊗ d_b` truncation, built block by
/// block over total photon number. The truncated generator conserves total
/// photon number, so the result is exactly unitary; blocks whose photon number
/// fits in both modes are also exact images of the untruncated unitary.
///
/// With this sign `U a† U† = cos θ a† − sin θ b†`.
pub fn mixing_unitary(d_a: usize, d_b: usize, theta: f64) -> Result<MultiModeOperator> {
    if d_a < 2 {
        return Err(Error::InvalidDimension(d_a));
    }
    if d_b < 2 {
        return Err(Error::InvalidDimension(d_b));
    }
    let total = d_a * d_b;
    let mut mat = Array2::zeros((total, total));
    for photons in 0..(d_a + d_b - 1) {
        // basis |j, photons - j⟩ with both entries inside the truncation
        let states: Vec<(usize, usize)> = (0..d_a)
            .filter(|&j| j <= photons && photons - j < d_b)
            .map(|j| (j, photons - j))
            .collect();
        let m = states.len();
        let mut gen = Array2::<C64>::zeros((m, m));
        for (c, &(ja, jb)) in states.iter().enumerate() {
            // a†b |ja, jb⟩ = √(ja+1)√jb |ja+1, jb-1⟩
            if jb > 0 {
                if let Some(r) = states.iter().position(|&s| s == (ja + 1, jb - 1)) {
                    gen[[r, c]] += C64::from(theta * ((ja + 1) as f64 * jb as f64).sqrt());
                }
            }
            // −a b† |ja, jb⟩ = −√ja √(jb+1) |ja-1, jb+1⟩
            if ja > 0 {
                if let Some(r) = states.iter().position(|&s| s == (ja - 1, jb + 1)) {
                    gen[[r, c]] -= C64::from(theta * (ja as f64 * (jb + 1) as f64).sqrt());
                }
            }
        }
        let block = expm(&gen);
        for (r, &(ra, rb)) in states.iter().enumerate() {
            for (c, &(ca, cb)) in states.iter().enumerate() {
                mat[[ra * d_b + rb, ca * d_b + cb]] = block[[r, c]];
            }
        }
    }
    MultiModeOperator::new(vec![d_a, d_b], mat)
}

/// The 50/50 beam splitter on two `d`-level modes:
/// `U a_A† U† = (a_A† + a_B†)/√2`, `U a_B† U† = (a_A† − a_B†)/√2`.
///
/// This transformation has determinant −1, so it is the π/4 mixing unitary
/// followed by a π phase shift on port B. `U` is Hermitian and self-inverse.
pub fn beam_splitter_unitary(d: usize) -> Result<MultiModeOperator> {
    let mut u = mixing_unitary(d, d, std::f64::consts::FRAC_PI_4)?;
    for ra in 0..d {
        for rb in (1..d).step_by(2) {
            u.mat.row_mut(ra * d + rb).mapv_inplace(|x| -x);
        }
    }
    Ok(u)
}

const DISPLACEMENT_TOL: f64 = 1e-11;
const DISPLACEMENT_MAX_DIM: usize = 1024;

/// Applies `exp(ξa† − ξ*a)` on a `w`-level truncation to |col⟩ by Taylor
/// steps on the tridiagonal generator.
fn displaced_column(xi: C64, col: usize, w: usize) -> Array1<C64> {
    let sqrt: Vec<f64> = (0..=w).map(|n| (n as f64).sqrt()).collect();
    let apply = |v: &Array1<C64>| -> Array1<C64> {
        let mut out = Array1::zeros(w);
        for n in 0..w {
            let mut acc = ZERO;
            if n > 0 {
                acc += xi * sqrt[n] * v[n - 1];
            }
            if n + 1 < w {
                acc -= xi.conj() * sqrt[n + 1] * v[n + 1];
            }
            out[n] = acc;
        }
        out
    };
    let gen_norm = 2.0 * xi.norm() * sqrt[w];
    let steps = (gen_norm / 0.5).ceil().max(1.0) as usize;
    let scale = 1.0 / steps as f64;
    let mut v = Array1::zeros(w);
    v[col] = ONE;
    for _ in 0..steps {
        let mut term = v.clone();
        let mut acc = v.clone();
        for k in 1..=40 {
            term = apply(&term).mapv(|x| x * (scale / k as f64));
            acc += &term;
            if term.iter().map(|x| x.norm()).sum::<f64>() < 1e-18 {
                break;
            }
        }
        v = acc;
    }
    v
}

fn displacement_at(xi: C64, d: usize, w: usize) -> Array2<C64> {
    let mut out = Array2::zeros((d, d));
    for col in 0..d {
        let v = displaced_column(xi, col, w);
        for row in 0..d {
            out[[row, col]] = v[row];
        }
    }
    out
}

/// Levels `0..d` of the displacement operator `D(ξ) = exp(ξa† − ξ*a)`.
///
/// The exponential is taken in a padded truncation that grows until the
/// requested block is converged; if that needs more than
/// `DISPLACEMENT_MAX_DIM` levels the call fails instead of returning a
/// truncation-dominated block.
pub fn displacement(xi: C64, d: usize) -> Result<ModeOperator> {
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    let reach = xi.norm() + (d as f64).sqrt();
    let mut w = d + (1.5 * reach * reach).ceil() as usize + 32;
    let mut prev = displacement_at(xi, d, w);
    loop {
        let next_w = w + w / 2;
        if next_w > DISPLACEMENT_MAX_DIM {
            return Err(Error::Truncation(format!(
                "displacement |xi| = {:.3} not converged within {} levels",
                xi.norm(),
                DISPLACEMENT_MAX_DIM
            )));
        }
        let next = displacement_at(xi, d, next_w);
        if max_abs_diff(&prev, &next) < DISPLACEMENT_TOL {
            return Ok(ModeOperator { mat: next });
        }
        prev = next;
        w = next_w;
    }
}

/// `χ_ρ(ξ) = Tr(ρ D(ξ))`. Works for any operator, not only densities.
pub fn characteristic_function(rho: &ModeOperator, xi: C64) -> Result<C64> {
    let disp = displacement(xi, rho.dim())?;
    Ok(rho.trace_product(&disp))
}

/// Multi-mode characteristic function `Tr(ρ ⊗ᵢ D(ξᵢ))`.
pub fn characteristic_function_multi(op: &MultiModeOperator, xis: &[C64]) -> Result<C64> {
    if xis.len() != op.mode_dims.len() {
        return Err(Error::IndexOutOfRange(format!(
            "{} displacement arguments for {} modes",
            xis.len(),
            op.mode_dims.len()
        )));
    }
    let mut disp: Option<Array2<C64>> = None;
    for (&xi, &d) in xis.iter().zip(&op.mode_dims) {
        let dm = displacement(xi, d)?.mat;
        disp = Some(match disp {
            None => dm,
            Some(acc) => kron(&acc, &dm),
        });
    }
    let disp = disp.expect("at least one mode");
    let mut acc = ZERO;
    for i in 0..op.dim() {
        for j in 0..op.dim() {
            acc += op.mat[[i, j]] * disp[[j, i]];
        }
    }
    Ok(acc)
}

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
