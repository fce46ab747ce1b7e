//! Dense Hermitian discretizations on a periodic grid with exact functional calculus.

use crate::bernstein::BernsteinFunction;
use crate::error::{invalid, Error, Result};
use crate::field::{FieldSpec, Potential};
use crate::semigroup::{estimate_spin, EstimatorConfig, SpinTestFunction, TestShape};
use crate::spin::SpinCoupling;
use crate::subordinator::SubordinatorSpec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Largest total dimension (spatial nodes times spin states) accepted.
pub const DENSE_BUDGET: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Periodic box [−L, L)^d with n nodes per axis; axis 0 varies fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(invalid(format!("grid dimension must be 1..=3, got {d}")));
        }
        if n < 3 {
            return Err(invalid("need at least 3 nodes per axis"));
        }
        if !(half_width > 0.0) {
            return Err(invalid("box half-width must be positive"));
        }
        let g = Self { d, n, half_width };
        if g.size() > DENSE_BUDGET {
            return Err(invalid(format!("{} grid nodes exceed the dense budget {DENSE_BUDGET}", g.size())));
        }
        Ok(g)
    }

    pub fn size(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    fn axis_index(&self, idx: usize, mu: usize) -> usize {
        (idx / self.n.pow(mu as u32)) % self.n
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        (0..self.d).map(|mu| self.coordinate(self.axis_index(idx, mu))).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.size()).map(|i| self.point(i)).collect()
    }

    /// Centered integer mode of index j (the Nyquist mode is −n/2).
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < (n + 1) / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn wavenumber(&self, m: i64) -> f64 {
        PI * m as f64 / self.half_width
    }

    fn is_nyquist(&self, j: usize) -> bool {
        self.n % 2 == 0 && j == self.n / 2
    }

    /// Samples a complex function at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> Complex64) -> DVector<Complex64> {
        DVector::from_iterator(self.size(), (0..self.size()).map(|i| f(&self.point(i))))
    }

    /// Samples f(x, α) for α = 1..p in spin-major layout.
    pub fn sample_spinor(&self, p: usize, f: impl Fn(&[f64], usize) -> Complex64) -> DVector<Complex64> {
        let n = self.size();
        DVector::from_iterator(n * p, (0..n * p).map(|k| f(&self.point(k % n), k / n + 1)))
    }

    /// Periodic-convolution row c[r] = (1/n) Σ_m s(m) e^{2πi m r / n}.
    fn circulant(&self, symbol: impl Fn(usize) -> f64) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|r| {
                let mut acc = ZERO;
                for j in 0..n {
                    let s = symbol(j);
                    if s != 0.0 {
                        let ang = 2.0 * PI * (self.mode(j) * r as i64) as f64 / n as f64;
                        acc += s * Complex64::from_polar(1.0, ang);
                    }
                }
                acc / n as f64
            })
            .collect()
    }

    /// Adds c[(j_μ − l_μ) mod n] (times `scale`) along axis μ.
    fn add_axis_circulant(&self, m: &mut DMatrix<Complex64>, mu: usize, c: &[Complex64], weight: impl Fn(usize, usize) -> Complex64) {
        let n = self.n;
        let stride = n.pow(mu as u32);
        for i in 0..self.size() {
            let ji = self.axis_index(i, mu);
            let base = i - ji * stride;
            for jl in 0..n {
                let k = base + jl * stride;
                let r = (ji + n - jl) % n;
                m[(i, k)] += c[r] * weight(i, k);
            }
        }
    }
}

/// How ½(p − a)² is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discretization {
    /// Fourier symbol ½k²; a enters as −½(Pa + aP) + ½a².
    #[default]
    Spectral,
    /// Nearest-neighbour Laplacian with link phases e^{−i∫a·dl} (midpoint rule).
    FiniteDifference,
}

/// Dense Hermitian matrix on (grid ⊗ ℤ_p) in spin-major layout.
#[derive(Debug, Clone)]
pub struct GridOperator {
    pub matrix: DMatrix<Complex64>,
    pub grid: GridSpec,
    pub spin_p: usize,
}

impl GridOperator {
    /// ½(p − a)² on the grid.
    pub fn kinetic(grid: GridSpec, field: &FieldSpec, disc: Discretization) -> Result<Self> {
        if field.dim != grid.d {
            return Err(invalid(format!("field dimension {} does not match grid dimension {}", field.dim, grid.d)));
        }
        let n_tot = grid.size();
        let mut m = DMatrix::from_element(n_tot, n_tot, ZERO);
        let pts = grid.points();
        let mut a = vec![vec![0.0; grid.d]; n_tot];
        if !field.is_zero() {
            for (x, ax) in pts.iter().zip(a.iter_mut()) {
                field.eval(x, ax);
            }
        }
        match disc {
            Discretization::Spectral => {
                let lap = grid.circulant(|j| 0.5 * grid.wavenumber(grid.mode(j)).powi(2));
                let p1 = grid.circulant(|j| if grid.is_nyquist(j) { 0.0 } else { grid.wavenumber(grid.mode(j)) });
                #[allow(clippy::needless_range_loop)]
                for mu in 0..grid.d {
                    grid.add_axis_circulant(&mut m, mu, &lap, |_, _| Complex64::new(1.0, 0.0));
                    if !field.is_zero() {
                        grid.add_axis_circulant(&mut m, mu, &p1, |i, k| Complex64::new(-0.5 * (a[i][mu] + a[k][mu]), 0.0));
                        for i in 0..n_tot {
                            m[(i, i)] += 0.5 * a[i][mu] * a[i][mu];
                        }
                    }
                }
            }
            Discretization::FiniteDifference => {
                let h = grid.spacing();
                let inv = 1.0 / (h * h);
                let mut amid = vec![0.0; grid.d];
                for i in 0..n_tot {
                    m[(i, i)] += grid.d as f64 * inv;
                    for mu in 0..grid.d {
                        let stride = grid.n.pow(mu as u32);
                        let ji = grid.axis_index(i, mu);
                        let k = if ji + 1 == grid.n { i + stride - grid.n * stride } else { i + stride };
                        let theta = if field.is_zero() {
                            0.0
                        } else {
                            let mut mid = pts[i].clone();
                            mid[mu] += 0.5 * h;
                            field.eval(&mid, &mut amid);
                            h * amid[mu]
                        };
                        let link = -0.5 * inv * Complex64::from_polar(1.0, -theta);
                        m[(i, k)] += link;
                        m[(k, i)] += link.conj();
                    }
                }
            }
        }
        Ok(Self { matrix: m, grid, spin_p: 1 })
    }

    /// h_{ℤ_p}: the scalar operator on every spin block plus U on the diagonal
    /// and U_β(x,σ_α) in block (α, α+β). Points are padded with zeros to 3
    /// coordinates before the coupling is evaluated.
    pub fn with_spin(&self, coupling: &SpinCoupling) -> Result<Self> {
        if self.spin_p != 1 {
            return Err(invalid("operator already carries spin"));
        }
        let p = coupling.config.p;
        let n = self.grid.size();
        if n * p > DENSE_BUDGET {
            return Err(invalid(format!("{} exceeds the dense budget", n * p)));
        }
        let mut m = DMatrix::from_element(n * p, n * p, ZERO);
        for a in 0..p {
            m.view_mut((a * n, a * n), (n, n)).copy_from(&self.matrix);
        }
        for i in 0..n {
            let mut x = self.grid.point(i);
            x.resize(x.len().max(3), 0.0);
            for alpha in 1..=p {
                let r = (alpha - 1) * n + i;
                m[(r, r)] += coupling.diag(&x, alpha);
                for beta in 1..p {
                    let c = (coupling.config.shift(alpha, beta) - 1) * n + i;
                    m[(r, c)] += coupling.offdiag(&x, alpha, beta);
                }
            }
        }
        let op = Self { matrix: m, grid: self.grid, spin_p: p };
        let dev = op.hermiticity_defect();
        if dev > 1e-10 {
            return Err(Error::NonHermitian { deviation: dev });
        }
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Adds a real value per spatial node to every spin block.
    pub fn add_diagonal(&mut self, values: &[f64]) -> Result<()> {
        let n = self.grid.size();
        if values.len() != n {
            return Err(invalid(format!("expected {n} diagonal values, got {}", values.len())));
        }
        for a in 0..self.spin_p {
            for (i, v) in values.iter().enumerate() {
                self.matrix[(a * n + i, a * n + i)] += v;
            }
        }
        Ok(())
    }

    /// V sampled on the nodes.
    pub fn potential_values(grid: &GridSpec, v: &Potential) -> Result<Vec<f64>> {
        (0..grid.size()).map(|i| v.eval_checked(&grid.point(i))).collect()
    }

    /// Copy with V added on the diagonal.
    pub fn plus_potential(&self, v: &Potential) -> Result<Self> {
        let mut out = self.clone();
        out.add_diagonal(&Self::potential_values(&self.grid, v)?)?;
        Ok(out)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigendecomposition with eigenvalues in ascending order.
    pub fn spectrum(&self) -> Result<Spectrum> {
        let dev = self.hermiticity_defect();
        if dev > 1e-10 {
            return Err(Error::NonHermitian { deviation: dev });
        }
        let eig = self.matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearAlgebra("eigensolver returned non-finite eigenvalues".into()));
        }
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Spectrum { values, vectors, cell_volume: self.grid.cell_volume() })
    }
}

/// Eigenpairs Q diag(λ) Q† of a grid operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
    pub cell_volume: f64,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    /// Q diag(φ(λ)) Q†.
    pub fn function(&self, phi: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
        let mapped: Vec<f64> = self.values.iter().map(|&l| phi(l)).collect();
        self.with_values(&mapped)
    }

    /// Q diag(values) Q†.
    pub fn with_values(&self, values: &[f64]) -> DMatrix<Complex64> {
        let mut scaled = self.vectors.clone();
        for (j, &s) in values.iter().enumerate() {
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        scaled * self.vectors.adjoint()
    }

    /// φ(op) v without forming the matrix.
    pub fn apply(&self, phi: impl Fn(f64) -> f64, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut c = self.vectors.adjoint() * v;
        for (z, &l) in c.iter_mut().zip(&self.values) {
            *z *= phi(l);
        }
        &self.vectors * c
    }

    /// (f, e^{−t op} g) with the grid measure.
    pub fn matrix_element(&self, f: &DVector<Complex64>, g: &DVector<Complex64>, t: f64) -> Complex64 {
        let eg = self.apply(|l| (-t * l).exp(), g);
        f.dotc(&eg) * self.cell_volume
    }
}

/// Handling of a negative spectrum before Ψ is applied.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ShiftMode {
    /// Negative eigenvalues below −1e−10 are an error.
    #[default]
    None,
    /// Subtract inf spec when it is negative.
    InfSpecIfNegative,
    /// Subtract the given value.
    Fixed(f64),
}

/// Ψ(op − shift) and the shift that was used.
pub fn psi_of_operator(op: &GridOperator, psi: &BernsteinFunction, mode: ShiftMode) -> Result<(GridOperator, f64)> {
    let spec = op.spectrum()?;
    let lo = spec.min();
    let shift = match mode {
        ShiftMode::None => 0.0,
        ShiftMode::InfSpecIfNegative => lo.min(0.0),
        ShiftMode::Fixed(s) => s,
    };
    if lo - shift < -1e-10 {
        return Err(Error::NegativeSpectrum { min_eigenvalue: lo - shift });
    }
    let mut mapped = Vec::with_capacity(spec.values.len());
    for &l in &spec.values {
        mapped.push(psi.eval((l - shift).max(0.0))?);
    }
    let matrix = spec.with_values(&mapped);
    let mut out = GridOperator { matrix, grid: op.grid, spin_p: op.spin_p };
    symmetrize(&mut out.matrix);
    Ok((out, shift))
}

fn symmetrize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// e^{−t(op + V)} with V given per spatial node (empty slice for V = 0).
pub fn semigroup_matrix(op: &GridOperator, v: &[f64], t: f64) -> Result<DMatrix<Complex64>> {
    if !(t >= 0.0) {
        return Err(invalid("semigroup time must be nonnegative"));
    }
    let mut full = op.clone();
    if !v.is_empty() {
        full.add_diagonal(v)?;
    }
    if t == 0.0 {
        return Ok(DMatrix::identity(full.dim(), full.dim()));
    }
    Ok(full.spectrum()?.function(|l| (-t * l).exp()))
}

/// Minimum eigenvalue.
pub fn ground_energy(op: &GridOperator) -> Result<f64> {
    Ok(op.spectrum()?.min())
}

/// Generator Ψ(½p² + σ_F + 1) of the subordinated Brownian/spin-flip process,
/// with σ_F = −σ₁.
pub fn fermionic_generator(grid: GridSpec, psi: &BernsteinFunction) -> Result<GridOperator> {
    fermionic_generator_with(grid, psi, 1.0)
}

/// Ψ(½p² − κσ₁ + 1); κ = 1 is the fermionic generator, κ = 0 decouples the sectors.
pub fn fermionic_generator_with(grid: GridSpec, psi: &BernsteinFunction, flip: f64) -> Result<GridOperator> {
    let free = GridOperator::kinetic(grid, &FieldSpec::zero(grid.d), Discretization::Spectral)?;
    Ok(psi_of_operator(&free.with_spin(&flip_coupling(flip)?)?, psi, ShiftMode::None)?.0)
}

fn flip_coupling(flip: f64) -> Result<SpinCoupling> {
    if !(0.0..=1.0).contains(&flip) {
        return Err(invalid(format!("flip strength must lie in [0, 1], got {flip}")));
    }
    SpinCoupling::constant(2, 1.0, vec![Complex64::new(-flip, 0.0)])
}

/// Monte-Carlo generator check against the grid semigroup.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionicReport {
    pub mc: Complex64,
    pub stderr: f64,
    pub exact: Complex64,
    pub z: f64,
    pub passes: bool,
}

/// Compares Σ_α ∫E[e^{T}e^{−T} conj f(ξ₀) g(ξ_T)]dx, whose path weight is
/// κ^{#jumps}, with (f, e^{−tG}g) for G = Ψ(½p² − κσ₁ + 1) on the grid.
pub fn fermionic_generator_check(
    psi: &BernsteinFunction,
    grid: GridSpec,
    f: &SpinTestFunction,
    g: &SpinTestFunction,
    cfg: &EstimatorConfig,
    flip: f64,
) -> Result<FermionicReport> {
    if f.p() != 2 || g.p() != 2 || f.base.dim() != grid.d {
        return Err(invalid("fermionic check needs p = 2 test functions on the grid dimension"));
    }
    let generator = fermionic_generator_with(grid, psi, flip)?;
    let fv = grid.sample_spinor(2, |x, a| f.eval(x, a));
    let gv = grid.sample_spinor(2, |x, a| g.eval(x, a));
    let exact = generator.spectrum()?.matrix_element(&fv, &gv, cfg.t);
    let spec = SubordinatorSpec::auto(psi.clone())?;
    let d = grid.d;
    let est = estimate_spin(&spec, &FieldSpec::zero(d), &flip_coupling(flip)?, &Potential::zero(d), f, g, cfg, 0.0)?;
    let dz = est.mean - exact;
    let z = if est.stderr > 0.0 {
        dz.norm() / est.stderr
    } else if dz.norm() < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(FermionicReport { mc: est.mean, stderr: est.stderr, exact, z, passes: z <= 4.0 })
}

/// A 3-D spin-½ problem that is translation invariant in (x₂, x₃): the field
/// is a = (0, A₂(x₁), A₃(x₁)), V depends on x₁ only, and f, g are isotropic
/// Gaussians of a common width centered on the x₁ axis.
#[derive(Clone)]
pub struct FiberProblem<'a> {
    /// One-dimensional grid for x₁.
    pub grid: GridSpec,
    pub field: &'a FieldSpec,
    pub coupling: &'a SpinCoupling,
    pub v: &'a Potential,
    pub psi: &'a BernsteinFunction,
    pub shift: f64,
    /// Gauss–Hermite nodes per transverse axis.
    pub transverse_nodes: usize,
}

/// (f, e^{−t(Ψ(h − shift) + V)} g) by Fourier transform in (x₂, x₃): each
/// transverse momentum k gives the 1-D operator ½p₁² + ½|k − A(x₁)|² + M(x₁),
/// and the k-integral against |Ĝ(k)|² is done by Gauss–Hermite.
pub fn fiber_matrix_element(problem: &FiberProblem, f: &SpinTestFunction, g: &SpinTestFunction, t: f64) -> Result<Complex64> {
    let FiberProblem { grid, field, coupling, v, psi, shift, transverse_nodes } = problem.clone();
    if grid.d != 1 || field.dim != 3 || v.dim != 3 || coupling.config.p != 2 {
        return Err(invalid("fiber oracle needs a 1-D grid, a 3-D field and potential, and p = 2"));
    }
    let gaussian = |x: &SpinTestFunction| x.base.shape == TestShape::Gaussian && x.base.dim() == 3;
    if f.p() != 2 || g.p() != 2 || !gaussian(f) || !gaussian(g) {
        return Err(invalid("fiber oracle needs 3-D spin-1/2 test functions"));
    }
    let w = f.base.width;
    let on_axis = |c: &[f64]| c[1] == 0.0 && c[2] == 0.0;
    if g.base.width != w || !on_axis(&f.base.center) || !on_axis(&g.base.center) {
        return Err(invalid("fiber oracle needs a common width and centers on the x1 axis"));
    }
    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    for x1 in [-0.7, 0.4, 1.3] {
        field.eval(&[x1, 0.0, 0.0], &mut a);
        field.eval(&[x1, 0.9, -1.1], &mut b);
        if a[0] != 0.0 || (0..3).any(|k| (a[k] - b[k]).abs() > 1e-14) {
            return Err(invalid("fiber oracle needs a = (0, A2(x1), A3(x1))"));
        }
    }
    let n = grid.size();
    let mut perp = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let x = [grid.point(i)[0], 0.0, 0.0];
        field.eval(&x, &mut a);
        perp.push((a[1], a[2]));
        vals.push(v.eval_checked(&x)?);
    }
    let fv = grid.sample_spinor(2, |x, al| f.eval(&[x[0], 0.0, 0.0], al));
    let gv = grid.sample_spinor(2, |x, al| g.eval(&[x[0], 0.0, 0.0], al));
    let free = GridOperator::kinetic(grid, &FieldSpec::zero(1), Discretization::Spectral)?;
    let (s, wts) = crate::quad::gauss_hermite(transverse_nodes);
    let mut total = ZERO;
    for (s2, w2) in s.iter().zip(&wts) {
        for (s3, w3) in s.iter().zip(&wts) {
            let (k2, k3) = (s2 / w, s3 / w);
            let mut op = free.clone();
            let diag: Vec<f64> = perp.iter().map(|(a2, a3)| 0.5 * ((k2 - a2).powi(2) + (k3 - a3).powi(2))).collect();
            op.add_diagonal(&diag)?;
            let (mut h, _) = psi_of_operator(&op.with_spin(coupling)?, psi, ShiftMode::Fixed(shift))?;
            h.add_diagonal(&vals)?;
            total += h.spectrum()?.matrix_element(&fv, &gv, t) * (w2 * w3);
        }
    }
    Ok(total * (w * w))
}
