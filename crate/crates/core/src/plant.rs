//! Plant, exo-system and fusion-center models.
//!
//! The plant is `x(k+1) = A x + B u`, `y = C x`, `y_p = H_p x`; the reference
//! comes from `x_r(k+1) = A_r x_r`, `y_r = H_r x_r`; the fusion center is the
//! observer-based controller with gains `(L, K_x, K_r)`.

use std::fmt::Write as _;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{self, ensure_finite, max_abs, Matrix, Vector};

/// Relative singular-value threshold for PBH rank tests.
pub const PBH_RANK_TOL: f64 = 1e-8;
/// Residual below which the regulator equations count as consistent.
pub const REGULATOR_TOL: f64 = 1e-8;
/// Relative threshold used to decide that `Δ = M Mᵀ` is nonsingular.
pub const CONTROLLABILITY_TOL: f64 = 1e-10;
pub const DEFAULT_ASSUMPTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LtiPlant {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub h_p: Matrix,
}

impl LtiPlant {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, h_p: Matrix) -> Result<Self> {
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&h_p, "H_p")] {
            ensure_finite(m, name)?;
        }
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::Dimension(format!("A must be square and nonempty, got {:?}", a.shape())));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Dimension(format!("B is {:?}, expected {n}xm", b.shape())));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(Error::Dimension(format!("C is {:?}, expected px{n}", c.shape())));
        }
        if h_p.ncols() != n || h_p.nrows() == 0 {
            return Err(Error::Dimension(format!("H_p is {:?}, expected qx{n}", h_p.shape())));
        }
        Ok(Self { a, b, c, h_p })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn n_tracked(&self) -> usize {
        self.h_p.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExoSystem {
    pub a_r: Matrix,
    pub h_r: Matrix,
}

impl ExoSystem {
    pub fn new(a_r: Matrix, h_r: Matrix) -> Result<Self> {
        ensure_finite(&a_r, "A_r")?;
        ensure_finite(&h_r, "H_r")?;
        if a_r.nrows() == 0 || !a_r.is_square() {
            return Err(Error::Dimension(format!("A_r must be square and nonempty, got {:?}", a_r.shape())));
        }
        if h_r.ncols() != a_r.nrows() {
            return Err(Error::Dimension(format!("H_r is {:?}, expected qx{}", h_r.shape(), a_r.nrows())));
        }
        Ok(Self { a_r, h_r })
    }

    pub fn n_states(&self) -> usize {
        self.a_r.nrows()
    }

    /// Checks `H_r` against the plant's tracked output dimension.
    pub fn check_against(&self, plant: &LtiPlant) -> Result<()> {
        if self.h_r.nrows() != plant.n_tracked() {
            return Err(Error::Dimension(format!(
                "H_r has {} rows but H_p has {}",
                self.h_r.nrows(),
                plant.n_tracked()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionCenterGains {
    pub l: Matrix,
    pub k_x: Matrix,
    pub k_r: Matrix,
}

impl FusionCenterGains {
    pub fn new(plant: &LtiPlant, exo: &ExoSystem, l: Matrix, k_x: Matrix, k_r: Matrix) -> Result<Self> {
        for (m, name) in [(&l, "L"), (&k_x, "K_x"), (&k_r, "K_r")] {
            ensure_finite(m, name)?;
        }
        let (n, m, p) = (plant.n_states(), plant.n_inputs(), plant.n_outputs());
        if l.shape() != (n, p) {
            return Err(Error::Dimension(format!("L is {:?}, expected {n}x{p}", l.shape())));
        }
        if k_x.shape() != (m, n) {
            return Err(Error::Dimension(format!("K_x is {:?}, expected {m}x{n}", k_x.shape())));
        }
        if k_r.shape() != (m, exo.n_states()) {
            return Err(Error::Dimension(format!(
                "K_r is {:?}, expected {m}x{}",
                k_r.shape(),
                exo.n_states()
            )));
        }
        Ok(Self { l, k_x, k_r })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorSolution {
    pub x_mat: Matrix,
    pub u_mat: Matrix,
    /// Max entrywise defect over both regulator equations.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub a1_exo_modulus_ok: bool,
    pub a2_stabilizable: bool,
    pub a3_detectable: bool,
    pub a4_regulator_solvable: bool,
    pub details: String,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.a1_exo_modulus_ok && self.a2_stabilizable && self.a3_detectable && self.a4_regulator_solvable
    }
}

fn to_complex(m: &Matrix) -> DMatrix<Complex<f64>> {
    m.map(|v| Complex::new(v, 0.0))
}

/// PBH test over the eigenvalues of `a` with modulus at least `1 - tol`.
/// `stack` builds the test matrix for a given `λI - A`.
fn pbh_holds<F>(a: &Matrix, tol: f64, stack: F) -> Result<(bool, Vec<Complex<f64>>)>
where
    F: Fn(DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>>,
{
    let n = a.nrows();
    let ac = to_complex(a);
    let mut failing = Vec::new();
    for lambda in linalg::eigenvalues(a)? {
        if lambda.norm() < 1.0 - tol {
            continue;
        }
        let shifted = DMatrix::<Complex<f64>>::identity(n, n) * lambda - &ac;
        if linalg::numerical_rank(&stack(shifted), PBH_RANK_TOL) < n {
            failing.push(lambda);
        }
    }
    Ok((failing.is_empty(), failing))
}

fn is_stabilizable(plant: &LtiPlant, tol: f64) -> Result<(bool, Vec<Complex<f64>>)> {
    let bc = to_complex(&plant.b);
    let n = plant.n_states();
    pbh_holds(&plant.a, tol, |shifted| {
        let mut m = DMatrix::zeros(n, n + bc.ncols());
        m.view_mut((0, 0), (n, n)).copy_from(&shifted);
        m.view_mut((0, n), (n, bc.ncols())).copy_from(&bc);
        m
    })
}

fn is_detectable(plant: &LtiPlant, tol: f64) -> Result<(bool, Vec<Complex<f64>>)> {
    let cc = to_complex(&plant.c);
    let n = plant.n_states();
    pbh_holds(&plant.a, tol, |shifted| {
        let mut m = DMatrix::zeros(n + cc.nrows(), n);
        m.view_mut((0, 0), (n, n)).copy_from(&shifted);
        m.view_mut((n, 0), (cc.nrows(), n)).copy_from(&cc);
        m
    })
}

fn fmt_eigs(eigs: &[&Complex<f64>]) -> String {
    let parts: Vec<String> = eigs.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
    format!("[{}]", parts.join(", "))
}

/// Evaluates all four standing assumptions; never fails on numerically
/// awkward input, it records the problem in `details` instead.
pub fn check_assumptions(plant: &LtiPlant, exo: &ExoSystem, tol: f64) -> AssumptionReport {
    let mut details = String::new();

    let a1 = match linalg::eigenvalues(&exo.a_r) {
        Ok(eigs) => {
            let small: Vec<_> = eigs.iter().filter(|z| z.norm() < 1.0 - tol).collect();
            if !small.is_empty() {
                let _ = writeln!(details, "exo modulus: A_r has eigenvalues inside the unit disk: {}", fmt_eigs(&small));
            }
            small.is_empty()
        }
        Err(e) => {
            let _ = writeln!(details, "exo modulus: {e}");
            false
        }
    };

    let mut pbh = |name: &str, res: Result<(bool, Vec<Complex<f64>>)>| match res {
        Ok((ok, failing)) => {
            if !ok {
                let _ = writeln!(details, "{name}: PBH rank deficient at {}", fmt_eigs(&failing.iter().collect::<Vec<_>>()));
            }
            ok
        }
        Err(e) => {
            let _ = writeln!(details, "{name}: {e}");
            false
        }
    };
    let a2 = pbh("stabilizability", is_stabilizable(plant, tol));
    let a3 = pbh("detectability", is_detectable(plant, tol));

    let a4 = match solve_regulator_equations(plant, exo) {
        Ok(sol) if sol.residual <= tol => true,
        Ok(sol) => {
            let _ = writeln!(details, "regulator: residual {:e} above tolerance", sol.residual);
            false
        }
        Err(e) => {
            let _ = writeln!(details, "regulator: {e}");
            false
        }
    };

    AssumptionReport {
        a1_exo_modulus_ok: a1,
        a2_stabilizable: a2,
        a3_detectable: a3,
        a4_regulator_solvable: a4,
        details: details.trim_end().to_string(),
    }
}

fn regulator_defect(plant: &LtiPlant, exo: &ExoSystem, x: &Matrix, u: &Matrix) -> f64 {
    let dyn_defect = x * &exo.a_r - &plant.a * x - &plant.b * u;
    let out_defect = &plant.h_p * x - &exo.h_r;
    max_abs(&dyn_defect).max(max_abs(&out_defect))
}

/// Least-squares solve of `X A_r = A X + B U`, `H_p X = H_r`.
///
/// Returns the minimum-norm solution of the stacked vectorized system; fails
/// with [`Error::Infeasible`] when the residual exceeds [`REGULATOR_TOL`].
pub fn solve_regulator_equations(plant: &LtiPlant, exo: &ExoSystem) -> Result<RegulatorSolution> {
    exo.check_against(plant)?;
    let (n1, m, q) = (plant.n_states(), plant.n_inputs(), plant.n_tracked());
    let n2 = exo.n_states();
    let nx = n1 * n2;
    let nu = m * n2;

    // Column-major vec: vec(X A_r) = (A_rᵀ ⊗ I) vec X, vec(A X) = (I ⊗ A) vec X.
    let i_n1 = Matrix::identity(n1, n1);
    let i_n2 = Matrix::identity(n2, n2);
    let dyn_x = exo.a_r.transpose().kronecker(&i_n1) - i_n2.kronecker(&plant.a);
    let dyn_u = -i_n2.kronecker(&plant.b);
    let out_x = i_n2.kronecker(&plant.h_p);

    let rows = n1 * n2 + q * n2;
    let mut sys = Matrix::zeros(rows, nx + nu);
    sys.view_mut((0, 0), (n1 * n2, nx)).copy_from(&dyn_x);
    sys.view_mut((0, nx), (n1 * n2, nu)).copy_from(&dyn_u);
    sys.view_mut((n1 * n2, 0), (q * n2, nx)).copy_from(&out_x);
    let mut rhs = Vector::zeros(rows);
    rhs.rows_mut(n1 * n2, q * n2).copy_from_slice(exo.h_r.as_slice());

    let scale = max_abs(&sys).max(1.0);
    let sol = sys
        .svd(true, true)
        .solve(&rhs, 1e-12 * scale)
        .map_err(|e| Error::InvalidInput(format!("regulator least squares failed: {e}")))?;

    let x_mat = Matrix::from_column_slice(n1, n2, &sol.as_slice()[..nx]);
    let u_mat = Matrix::from_column_slice(m, n2, &sol.as_slice()[nx..]);
    let residual = regulator_defect(plant, exo, &x_mat, &u_mat);
    if residual > REGULATOR_TOL {
        return Err(Error::Infeasible { residual });
    }
    Ok(RegulatorSolution { x_mat, u_mat, residual })
}

/// `K_r = U - K_x X`.
pub fn gain_kr(k_x: &Matrix, sol: &RegulatorSolution) -> Result<Matrix> {
    if k_x.ncols() != sol.x_mat.nrows() || k_x.nrows() != sol.u_mat.nrows() {
        return Err(Error::Dimension(format!(
            "K_x is {:?}, regulator solution has X {:?} and U {:?}",
            k_x.shape(),
            sol.x_mat.shape(),
            sol.u_mat.shape()
        )));
    }
    Ok(&sol.u_mat - k_x * &sol.x_mat)
}

/// Error-coordinate closed-loop matrix `[A + B K_x, L C; 0, A + L C]`.
pub fn closed_loop_matrix(plant: &LtiPlant, gains: &FusionCenterGains) -> Result<Matrix> {
    let n = plant.n_states();
    if gains.l.shape() != (n, plant.n_outputs()) || gains.k_x.shape() != (plant.n_inputs(), n) {
        return Err(Error::Dimension("gains do not match plant".into()));
    }
    let mut cl = Matrix::zeros(2 * n, 2 * n);
    let lc = &gains.l * &plant.c;
    cl.view_mut((0, 0), (n, n)).copy_from(&(&plant.a + &plant.b * &gains.k_x));
    cl.view_mut((0, n), (n, n)).copy_from(&lc);
    cl.view_mut((n, n), (n, n)).copy_from(&(&plant.a + &lc));
    Ok(cl)
}

/// Stack of `C A^t` for `t = 0..=k`.
pub fn observability_stack(plant: &LtiPlant, k: usize) -> Matrix {
    let (n, p) = (plant.n_states(), plant.n_outputs());
    let mut out = Matrix::zeros((k + 1) * p, n);
    let mut block = plant.c.clone();
    for t in 0..=k {
        out.view_mut((t * p, 0), (p, n)).copy_from(&block);
        block = &block * &plant.a;
    }
    out
}

/// Block lower-triangular Toeplitz map from stacked inputs to stacked outputs,
/// with block `(i, j) = C A^{i-j-1} B` for `i > j` and zero otherwise.
pub fn input_toeplitz(plant: &LtiPlant, k: usize) -> Matrix {
    let (p, m) = (plant.n_outputs(), plant.n_inputs());
    let mut out = Matrix::zeros((k + 1) * p, (k + 1) * m);
    let mut markov = Vec::with_capacity(k);
    let mut ca = plant.c.clone();
    for _ in 0..k {
        markov.push(&ca * &plant.b);
        ca = &ca * &plant.a;
    }
    for i in 1..=k {
        for j in 0..i {
            out.view_mut((i * p, j * m), (p, m)).copy_from(&markov[i - j - 1]);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllabilityData {
    pub n_star: usize,
    /// `[A^{n*-1} B, ..., A B, B]`
    pub m_mat: Matrix,
    /// `M Mᵀ`
    pub delta: Matrix,
}

fn controllability_block(plant: &LtiPlant, n_star: usize) -> Matrix {
    let (n, m) = (plant.n_states(), plant.n_inputs());
    let mut out = Matrix::zeros(n, n_star * m);
    let mut block = plant.b.clone();
    for i in (0..n_star).rev() {
        out.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = &plant.a * &block;
    }
    out
}

fn is_nonsingular(delta: &Matrix) -> bool {
    let sv = delta.singular_values();
    let max = sv.max();
    max > 0.0 && sv.min() > CONTROLLABILITY_TOL * max
}

/// Smallest horizon `n*` for which `Δ = M Mᵀ` is nonsingular.
pub fn controllability_data(plant: &LtiPlant) -> Result<ControllabilityData> {
    for n_star in 1..=plant.n_states() {
        let m_mat = controllability_block(plant, n_star);
        let delta = &m_mat * m_mat.transpose();
        if is_nonsingular(&delta) {
            return Ok(ControllabilityData { n_star, m_mat, delta });
        }
    }
    Err(Error::Uncontrollable)
}

/// `true` iff `|C A^k B| <= tol` (max entry) for all `0 <= k <= n_star - 2`.
pub fn markov_zero_check(plant: &LtiPlant, n_star: usize, tol: f64) -> bool {
    let mut ca = plant.c.clone();
    for _ in 0..n_star.saturating_sub(1) {
        if max_abs(&(&ca * &plant.b)) > tol {
            return false;
        }
        ca = &ca * &plant.a;
    }
    true
}
