//! Convex quadratic programs and the solver kernel.
//!
//! Problems have the form
//!
//! ```text
//! min  ½ xᵀHx + cᵀx + offset
//! s.t. A_eq x = b_eq,  A_in x ≤ b_in,  lower ≤ x ≤ upper
//! ```
//!
//! The interior-point solve itself is delegated to Clarabel. Everything the
//! rest of the crate relies on (status, objective, KKT residuals) is
//! recomputed here from the returned primal and dual vectors, so the
//! postcondition does not depend on the backend's own bookkeeping.

use std::collections::BTreeSet;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("solver setup failed: {0}")]
    Setup(String),
}

/// Constraint family a row belongs to, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Balance,
    Flow,
    Ramp,
    Bound,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub kind: ConstraintKind,
}

impl LinearRow {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64, kind: ConstraintKind) -> Self {
        LinearRow { coeffs, rhs, kind }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// `(unit, interval)` behind a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VarLabel {
    pub unit: usize,
    pub interval: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    /// Diagonal of H.
    pub hessian_diag: Vec<f64>,
    /// Strictly upper-triangular entries `(i, j, h_ij)` with `i < j`; H is
    /// symmetric so each entry also stands for `h_ji`.
    pub hessian_upper: Vec<(usize, usize, f64)>,
    pub linear: Vec<f64>,
    /// Constant term of the objective.
    pub offset: f64,
    pub equalities: Vec<LinearRow>,
    /// Rows of `A_in x ≤ b_in`.
    pub inequalities: Vec<LinearRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Either empty or one label per variable.
    pub labels: Vec<VarLabel>,
}

impl QuadraticProgram {
    /// Unconstrained, zero-objective program over `n` free variables.
    pub fn new(n: usize) -> Self {
        QuadraticProgram {
            hessian_diag: vec![0.0; n],
            hessian_upper: Vec::new(),
            linear: vec![0.0; n],
            offset: 0.0,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            labels: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn hessian_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.hessian_diag.iter().zip(x).map(|(h, v)| h * v).collect();
        for &(i, j, h) in &self.hessian_upper {
            out[i] += h * x[j];
            out[j] += h * x[i];
        }
        out
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let hx = self.hessian_mul(x);
        let quad: f64 = hx.iter().zip(x).map(|(a, b)| a * b).sum();
        let lin: f64 = self.linear.iter().zip(x).map(|(a, b)| a * b).sum();
        0.5 * quad + lin + self.offset
    }

    /// Largest absolute violation per constraint family at `x`.
    pub fn violations(&self, x: &[f64]) -> Vec<(ConstraintKind, f64)> {
        let mut worst: Vec<(ConstraintKind, f64)> = Vec::new();
        let mut bump = |kind: ConstraintKind, v: f64| match worst.iter_mut().find(|(k, _)| *k == kind) {
            Some(entry) => entry.1 = entry.1.max(v),
            None => worst.push((kind, v)),
        };
        for row in &self.equalities {
            bump(row.kind, (row.dot(x) - row.rhs).abs());
        }
        for row in &self.inequalities {
            bump(row.kind, (row.dot(x) - row.rhs).max(0.0));
        }
        for (i, &xi) in x.iter().enumerate() {
            bump(ConstraintKind::Bound, (self.lower[i] - xi).max(xi - self.upper[i]).max(0.0));
        }
        worst
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.violations(x).iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.n_vars();
        let dim = |what: &str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(QpError::Dimension(format!("{what} has length {got}, expected {n}")))
            }
        };
        dim("hessian diagonal", self.hessian_diag.len())?;
        dim("lower bounds", self.lower.len())?;
        dim("upper bounds", self.upper.len())?;
        if !self.labels.is_empty() {
            dim("labels", self.labels.len())?;
        }
        if let Some(i) = self.hessian_diag.iter().position(|h| !(h.is_finite() && *h >= 0.0)) {
            return Err(QpError::Invalid(format!("H[{i},{i}] must be finite and >= 0")));
        }
        for &(i, j, h) in &self.hessian_upper {
            if i >= j || j >= n || !h.is_finite() {
                return Err(QpError::Invalid(format!("bad off-diagonal Hessian entry ({i}, {j})")));
            }
        }
        if self.linear.iter().any(|c| !c.is_finite()) || !self.offset.is_finite() {
            return Err(QpError::Invalid("objective has non-finite coefficients".into()));
        }
        for i in 0..n {
            if self.lower[i].is_nan() || self.upper[i].is_nan() || self.lower[i] > self.upper[i] {
                return Err(QpError::Invalid(format!("bounds of x[{i}] are inconsistent")));
            }
        }
        for row in self.equalities.iter().chain(&self.inequalities) {
            if !row.rhs.is_finite() {
                return Err(QpError::Invalid("constraint right-hand side is not finite".into()));
            }
            if let Some(&(j, a)) = row.coeffs.iter().find(|(j, a)| *j >= n || !a.is_finite()) {
                return Err(QpError::Dimension(format!("constraint coefficient ({j}, {a}) out of range")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    /// The objective is unbounded below on the feasible set.
    Unbounded,
    /// No point met the tolerances; the best iterate is attached.
    MaxIterations,
}

/// Scaled KKT residuals (infinity norms).
///
/// Primal: worst constraint violation over `1 + max |rhs|, |finite bound|`.
/// Dual: `‖Hx + c + Aᵀz‖` over `1 + max(‖Hx‖, ‖c‖, ‖Aᵀz‖)`.
/// Complementarity: `max |z_i s_i|` over `1 + |objective|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub residuals: KktResiduals,
    /// Multipliers of `equalities`, same sign convention as `Hx + c + Aᵀy = 0`.
    pub eq_duals: Vec<f64>,
    /// Multipliers (≥ 0) of `inequalities`.
    pub ineq_duals: Vec<f64>,
    /// Constraint families carrying weight in the infeasibility certificate.
    pub infeasible_kinds: Vec<ConstraintKind>,
    pub iterations: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iter: u32,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions { feas_tol: 1e-6, opt_tol: 1e-6, max_iter: 200 }
    }
}

enum RowOrigin {
    Eq(usize),
    Ineq(usize),
    Upper(usize),
    Lower(usize),
    Fixed(usize),
}

/// Solves `qp` to the requested tolerances.
///
/// `warm_start` is accepted for interface stability; the interior-point
/// backend starts from its own central point, so it never affects the result.
pub fn solve_qp(qp: &QuadraticProgram, opts: &QpOptions, warm_start: Option<&[f64]>) -> Result<QpSolution, QpError> {
    qp.validate()?;
    let n = qp.n_vars();
    if let Some(w) = warm_start {
        if w.len() != n {
            return Err(QpError::Dimension(format!("warm start has length {}, expected {n}", w.len())));
        }
    }

    // Zero-cone rows first (equalities, then fixed variables), then the
    // nonnegative cone (inequalities, upper bounds, lower bounds).
    let mut origins: Vec<RowOrigin> = Vec::new();
    origins.extend((0..qp.equalities.len()).map(RowOrigin::Eq));
    origins.extend((0..n).filter(|&i| qp.lower[i] == qp.upper[i]).map(RowOrigin::Fixed));
    let n_zero = origins.len();
    origins.extend((0..qp.inequalities.len()).map(RowOrigin::Ineq));
    for i in 0..n {
        if qp.lower[i] != qp.upper[i] {
            if qp.upper[i].is_finite() {
                origins.push(RowOrigin::Upper(i));
            }
            if qp.lower[i].is_finite() {
                origins.push(RowOrigin::Lower(i));
            }
        }
    }
    let m = origins.len();

    let (mut ri, mut ci, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::with_capacity(m);
    for (r, o) in origins.iter().enumerate() {
        let mut push_row = |row: &LinearRow| {
            for &(j, a) in &row.coeffs {
                ri.push(r);
                ci.push(j);
                vals.push(a);
            }
            row.rhs
        };
        let rhs = match *o {
            RowOrigin::Eq(k) => push_row(&qp.equalities[k]),
            RowOrigin::Ineq(k) => push_row(&qp.inequalities[k]),
            RowOrigin::Upper(i) | RowOrigin::Fixed(i) => {
                ri.push(r);
                ci.push(i);
                vals.push(1.0);
                qp.upper[i]
            }
            RowOrigin::Lower(i) => {
                ri.push(r);
                ci.push(i);
                vals.push(-1.0);
                -qp.lower[i]
            }
        };
        b.push(rhs);
    }
    let a_mat = CscMatrix::new_from_triplets(m, n, ri, ci, vals);

    let (mut pi, mut pj, mut pv) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &h) in qp.hessian_diag.iter().enumerate() {
        if h != 0.0 {
            pi.push(i);
            pj.push(i);
            pv.push(h);
        }
    }
    for &(i, j, h) in &qp.hessian_upper {
        pi.push(i);
        pj.push(j);
        pv.push(h);
    }
    let p_mat = CscMatrix::new_from_triplets(n, n, pi, pj, pv);

    let mut cones = Vec::new();
    if n_zero > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_zero));
    }
    if m > n_zero {
        cones.push(SupportedConeT::NonnegativeConeT(m - n_zero));
    }

    let inner_tol = (opts.feas_tol.min(opts.opt_tol) * 1e-2).clamp(1e-12, 1e-8);
    // Equilibration and iterative refinement slow the well-scaled dispatch
    // problems down by a third; they are only turned on when the plain
    // solve misses the requested tolerances.
    let mut refine = false;
    let (sol, residuals) = loop {
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(opts.max_iter)
            .tol_feas(inner_tol)
            .tol_gap_abs(inner_tol)
            .tol_gap_rel(inner_tol)
            .presolve_enable(false)
            .iterative_refinement_enable(refine)
            .equilibrate_enable(refine)
            .build()
            .map_err(|e| QpError::Setup(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p_mat, &qp.linear, &a_mat, &b, &cones, settings)
            .map_err(|e| QpError::Setup(format!("{e:?}")))?;
        solver.solve();
        let sol = solver.solution;
        let residuals = kkt_residuals(qp, &a_mat, &b, n_zero, &sol.x, &sol.z);
        let certified = matches!(
            sol.status,
            SolverStatus::PrimalInfeasible
                | SolverStatus::AlmostPrimalInfeasible
                | SolverStatus::DualInfeasible
                | SolverStatus::AlmostDualInfeasible
        );
        let within = residuals.primal <= opts.feas_tol && residuals.dual <= opts.opt_tol;
        if refine || certified || within {
            break (sol, residuals);
        }
        refine = true;
    };
    let z = &sol.z;
    let x = sol.x.clone();
    let mut eq_duals = vec![0.0; qp.equalities.len()];
    let mut ineq_duals = vec![0.0; qp.inequalities.len()];
    for (r, o) in origins.iter().enumerate() {
        match *o {
            RowOrigin::Eq(k) => eq_duals[k] = z[r],
            RowOrigin::Ineq(k) => ineq_duals[k] = z[r],
            _ => {}
        }
    }

    let backend_status = sol.status;
    let certificate = matches!(
        backend_status,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible
    );
    let infeasible_kinds = if certificate {
        let zmax = z.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let kinds: BTreeSet<ConstraintKind> = origins
            .iter()
            .zip(z)
            .filter(|(_, zi)| zmax > 0.0 && zi.abs() >= 1e-6 * zmax)
            .map(|(o, _)| match *o {
                RowOrigin::Eq(k) => qp.equalities[k].kind,
                RowOrigin::Ineq(k) => qp.inequalities[k].kind,
                _ => ConstraintKind::Bound,
            })
            .collect();
        kinds.into_iter().collect()
    } else {
        Vec::new()
    };

    let status = match backend_status {
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => QpStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => QpStatus::Unbounded,
        _ if residuals.primal <= opts.feas_tol && residuals.dual <= opts.opt_tol => QpStatus::Optimal,
        _ => QpStatus::MaxIterations,
    };

    Ok(QpSolution {
        objective: qp.objective(&x),
        x,
        status,
        residuals,
        eq_duals,
        ineq_duals,
        infeasible_kinds,
        iterations: sol.iterations,
    })
}

fn kkt_residuals(
    qp: &QuadraticProgram,
    a_mat: &CscMatrix<f64>,
    b: &[f64],
    n_zero: usize,
    x: &[f64],
    z: &[f64],
) -> KktResiduals {
    let n = qp.n_vars();
    let m = b.len();
    let mut ax = vec![0.0; m];
    let mut atz = vec![0.0; n];
    for col in 0..n {
        for k in a_mat.colptr[col]..a_mat.colptr[col + 1] {
            let r = a_mat.rowval[k];
            let v = a_mat.nzval[k];
            ax[r] += v * x[col];
            atz[col] += v * z[r];
        }
    }
    let inf_norm = |v: &[f64]| v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));

    let mut viol = 0.0_f64;
    for r in 0..m {
        let diff = ax[r] - b[r];
        viol = viol.max(if r < n_zero { diff.abs() } else { diff.max(0.0) });
    }
    let scale_p = 1.0 + inf_norm(b);

    let hx = qp.hessian_mul(x);
    let stat: Vec<f64> = (0..n).map(|i| hx[i] + qp.linear[i] + atz[i]).collect();
    let scale_d = 1.0 + inf_norm(&hx).max(inf_norm(&qp.linear)).max(inf_norm(&atz));

    let comp = (n_zero..m).fold(0.0_f64, |a, r| a.max((z[r] * (b[r] - ax[r])).abs()));
    let obj = qp.objective(x);

    KktResiduals {
        primal: viol / scale_p,
        dual: inf_norm(&stat) / scale_d,
        complementarity: comp / (1.0 + obj.abs()),
    }
}
