//! Damped-Newton finite differences for the Dirichlet problem
//! `σ₃(D²u) + ασ₂(D²u) = f(x)` on a box, keeping every interior Hessian in
//! the admissible cone `Γ₂ ∩ {σ₃ + ασ₂ > 0}`.
//!
//! Unknowns are the interior nodes; boundary nodes carry the Dirichlet trace
//! from the start and never move. The Jacobian row of a node is the
//! eigenframe gradient `Q diag(∂G/∂λ) Qᵀ` contracted with the stencil
//! weights. Linear solves go through [`LinearSolver`]; [`DenseLu`] is a
//! fallback suitable for small grids.

use alloc::boxed::Box;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::in_weighted_tilde;
use crate::error::{LabError, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::spectrum::SymmetricMatrix;
use crate::symfun::{matrix_gradient, weighted_jet};

/// Central-difference Hessian at an interior node.
pub fn discrete_hessian(u: &GridFunction, node: usize) -> Result<SymmetricMatrix> {
    u.hessian(node)
}

/// Closed-form scalar fields used for boundary data and right-hand sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Field {
    Constant {
        value: f64,
    },
    /// `Σ d_i x_i²/2`.
    Quadratic {
        diag: Vec<f64>,
    },
    /// `c|x|²/2 + ε Σ x_i⁴/12`, Hessian `diag(c + ε x_i²)`.
    Quartic {
        c: f64,
        eps: f64,
    },
    /// `(1+x₁²)√(s + x₂²) + (c/2)(x₁² + … + x_{n−1}²) − (κ/2) x_n²`.
    Pogorelov {
        s: f64,
        c: f64,
        kappa: f64,
    },
    /// `σ₃(D²v) + ασ₂(D²v)` for the closed form `v`.
    OperatorOf {
        of: Box<Field>,
    },
    Grid {
        values: GridFunction,
    },
}

impl Field {
    /// Exact Hessian, where one exists in closed form.
    pub fn hessian(&self, x: &[f64]) -> Option<SymmetricMatrix> {
        let n = x.len();
        match self {
            Field::Constant { .. } => Some(SymmetricMatrix::zeros(n)),
            Field::Quadratic { diag } => Some(SymmetricMatrix::diagonal(diag)),
            Field::Quartic { c, eps } => {
                let d: Vec<f64> = x.iter().map(|v| c + eps * v * v).collect();
                Some(SymmetricMatrix::diagonal(&d))
            }
            Field::Pogorelov { s, c, kappa } => {
                let rho = s + x[1] * x[1];
                let r = libm::sqrt(rho);
                Some(SymmetricMatrix::from_upper(n, |i, j| match (i, j) {
                    (0, 0) => 2.0 * r + c,
                    (0, 1) => 2.0 * x[0] * x[1] / r,
                    (1, 1) => (1.0 + x[0] * x[0]) * s / (rho * r) + c,
                    _ if i == j && i == n - 1 => -kappa,
                    _ if i == j => *c,
                    _ => 0.0,
                }))
            }
            Field::OperatorOf { .. } | Field::Grid { .. } => None,
        }
    }

    /// Value at the node `flat` of `grid` (point `x`).
    pub fn eval(&self, x: &[f64], flat: usize, alpha: f64) -> Result<f64> {
        Ok(match self {
            Field::Constant { value } => *value,
            Field::Quadratic { diag } => {
                if diag.len() != x.len() {
                    return Err(LabError::Dimension {
                        expected: x.len(),
                        found: diag.len(),
                    });
                }
                diag.iter().zip(x).map(|(d, v)| 0.5 * d * v * v).sum()
            }
            Field::Quartic { c, eps } => x.iter().map(|v| 0.5 * c * v * v + eps * v * v * v * v / 12.0).sum(),
            Field::Pogorelov { s, c, kappa } => {
                let n = x.len();
                let mut u = (1.0 + x[0] * x[0]) * libm::sqrt(s + x[1] * x[1]);
                for (i, v) in x.iter().enumerate() {
                    u += if i == n - 1 {
                        -0.5 * kappa * v * v
                    } else {
                        0.5 * c * v * v
                    };
                }
                u
            }
            Field::OperatorOf { of } => {
                let h = of
                    .hessian(x)
                    .ok_or_else(|| LabError::arg("operator-of needs a closed form with an exact Hessian"))?;
                let lam = h.eigenvalues();
                weighted_jet(3, alpha, &lam)?.value
            }
            Field::Grid { values } => *values
                .values
                .get(flat)
                .ok_or_else(|| LabError::arg("grid field does not match the solve grid"))?,
        })
    }

    fn sample(&self, grid: &GridSpec, alpha: f64) -> Result<Vec<f64>> {
        if let Field::Grid { values } = self {
            if values.grid != *grid {
                return Err(LabError::arg("grid field does not match the solve grid"));
            }
        }
        (0..grid.len()).map(|i| self.eval(&grid.point(i), i, alpha)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    pub initial_step: f64,
    pub backtrack: f64,
    pub min_step: f64,
    pub max_iterations: u32,
}

impl Default for Damping {
    fn default() -> Self {
        Damping {
            initial_step: 1.0,
            backtrack: 0.5,
            min_step: libm::ldexp(1.0, -20),
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
    pub alpha: f64,
    pub rhs: Field,
    pub boundary: Field,
    pub damping: Damping,
    pub tolerance: f64,
}

impl SolveConfig {
    /// `[-0.5, 0.5]^d` with `m` nodes per axis.
    pub fn cube(d: usize, m: usize, alpha: f64, rhs: Field, boundary: Field) -> Self {
        SolveConfig {
            lo: alloc::vec![-0.5; d],
            hi: alloc::vec![0.5; d],
            resolution: alloc::vec![m; d],
            alpha,
            rhs,
            boundary,
            damping: Damping::default(),
            tolerance: 1e-10,
        }
    }

    /// Manufactured problem with exact solution `exact`.
    pub fn manufactured(d: usize, m: usize, alpha: f64, exact: Field) -> Self {
        let rhs = Field::OperatorOf {
            of: Box::new(exact.clone()),
        };
        Self::cube(d, m, alpha, rhs, exact)
    }

    pub fn n_dims(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<GridSpec> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(LabError::arg("alpha must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(LabError::arg("tolerance must be positive"));
        }
        if self.n_dims() < 3 {
            return Err(LabError::arg("the operator needs at least three dimensions"));
        }
        if self.resolution.iter().any(|&m| m < 5) {
            return Err(LabError::arg("resolution must be at least 5 per axis"));
        }
        let d = &self.damping;
        if !(d.initial_step > 0.0
            && d.initial_step <= 1.0
            && d.backtrack > 0.0
            && d.backtrack < 1.0
            && d.min_step > 0.0)
        {
            return Err(LabError::arg(
                "damping needs 0 < initial step <= 1 and 0 < backtrack < 1",
            ));
        }
        GridSpec::new(self.lo.clone(), self.hi.clone(), self.resolution.clone())
    }
}

/// Sparse system `A x = b` given as `(row, col, value)` triplets; duplicates add.
pub trait LinearSolver {
    fn solve(&mut self, n: usize, triplets: &[(usize, usize, f64)], rhs: &[f64]) -> Result<Vec<f64>>;
}

/// Dense partial-pivoting LU.
#[derive(Debug, Default, Clone, Copy)]
pub struct DenseLu;

impl LinearSolver for DenseLu {
    fn solve(&mut self, n: usize, triplets: &[(usize, usize, f64)], rhs: &[f64]) -> Result<Vec<f64>> {
        let mut a = DMatrix::zeros(n, n);
        for &(i, j, v) in triplets {
            a[(i, j)] += v;
        }
        let x = a
            .lu()
            .solve(&DVector::from_column_slice(rhs))
            .ok_or_else(|| LabError::LinearAlgebra(alloc::string::String::from("singular Jacobian")))?;
        Ok(x.iter().copied().collect())
    }
}

/// Discretized problem with right-hand side and trace sampled on the grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: GridSpec,
    pub alpha: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    interior: Vec<usize>,
    /// Grid node → unknown index (interior nodes only).
    unknown: Vec<Option<usize>>,
}

impl Problem {
    pub fn new(cfg: &SolveConfig) -> Result<Self> {
        let grid = cfg.validate()?;
        let f = cfg.rhs.sample(&grid, cfg.alpha)?;
        let g = cfg.boundary.sample(&grid, cfg.alpha)?;
        let interior: Vec<usize> = grid.interior().collect();
        let mut unknown = alloc::vec![None; grid.len()];
        for (k, &node) in interior.iter().enumerate() {
            unknown[node] = Some(k);
        }
        Ok(Problem {
            grid,
            alpha: cfg.alpha,
            f,
            g,
            interior,
            unknown,
        })
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    fn node_value(&self, u: &GridFunction, node: usize) -> f64 {
        let h = u.hessian_unchecked(node);
        let lam = h.eigenvalues();
        crate::symfun::sigma(3, &lam) + self.alpha * crate::symfun::sigma(2, &lam) - self.f[node]
    }

    /// Interior: `σ₃(H) + ασ₂(H) − f`; boundary: `u − g`.
    pub fn residual(&self, u: &GridFunction) -> GridFunction {
        let values = (0..self.grid.len())
            .map(|node| match self.unknown[node] {
                Some(_) => self.node_value(u, node),
                None => u.values[node] - self.g[node],
            })
            .collect();
        GridFunction {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Fraction of interior nodes whose discrete Hessian is admissible.
    pub fn admissible_fraction(&self, u: &GridFunction) -> f64 {
        if self.interior.is_empty() {
            return 1.0;
        }
        let ok = self
            .interior
            .iter()
            .filter(|&&node| self.admissible_at(u, node))
            .count();
        ok as f64 / self.interior.len() as f64
    }

    fn admissible_at(&self, u: &GridFunction, node: usize) -> bool {
        in_weighted_tilde(3, self.alpha, &u.hessian_unchecked(node).eigenvalues())
    }

    fn all_admissible(&self, u: &GridFunction) -> bool {
        self.interior.iter().all(|&node| self.admissible_at(u, node))
    }

    /// Jacobian of the interior residuals with respect to the interior
    /// unknowns, as triplets in unknown numbering.
    pub fn jacobian(&self, u: &GridFunction) -> Result<Vec<(usize, usize, f64)>> {
        let d = self.grid.dims();
        let mut out = Vec::with_capacity(self.interior.len() * (1 + 2 * d * d));
        for (row, &node) in self.interior.iter().enumerate() {
            let h = u.hessian_unchecked(node);
            let (_, grad) = matrix_gradient(3, self.alpha, &h)?;
            let mut push = |nb: usize, v: f64| {
                if let Some(col) = self.unknown[nb] {
                    out.push((row, col, v));
                }
            };
            for a in 0..d {
                let sa = self.grid.stride(a);
                let ha = self.grid.spacing(a);
                let w = grad[(a, a)] / (ha * ha);
                push(node + sa, w);
                push(node - sa, w);
                push(node, -2.0 * w);
                for b in (a + 1)..d {
                    let sb = self.grid.stride(b);
                    let hb = self.grid.spacing(b);
                    // H_ab and H_ba both move
                    let w = 2.0 * grad[(a, b)] / (4.0 * ha * hb);
                    push(node + sa + sb, w);
                    push(node - sa - sb, w);
                    push(node + sa - sb, -w);
                    push(node - sa + sb, -w);
                }
            }
        }
        Ok(out)
    }

    /// `|x − center|²/2`.
    fn paraboloid(&self, node: usize) -> f64 {
        let x = self.grid.point(node);
        (0..self.grid.dims())
            .map(|a| {
                let c = 0.5 * (self.grid.lo[a] + self.grid.hi[a]);
                0.5 * (x[a] - c) * (x[a] - c)
            })
            .sum()
    }

    /// Default start: the sampled trace on the boundary and
    /// `g + c₀(|x − center|²/2 − M)` inside, with `M` the boundary maximum of
    /// the paraboloid plus the squared box width. Boundary nodes then sit
    /// above the interior extension, which only adds convexity near the
    /// faces once `c₀` is large; `c₀` doubles until every interior node is
    /// admissible.
    pub fn default_initial(&self) -> Result<GridFunction> {
        let width = (0..self.grid.dims())
            .map(|a| self.grid.hi[a] - self.grid.lo[a])
            .fold(0.0, f64::max);
        let top = (0..self.grid.len())
            .filter(|&node| self.unknown[node].is_none())
            .map(|node| self.paraboloid(node))
            .fold(0.0, f64::max);
        let m = top + width * width;
        let mut c0 = 1.0;
        for _ in 0..60 {
            let values = (0..self.grid.len())
                .map(|node| match self.unknown[node] {
                    Some(_) => self.g[node] + c0 * (self.paraboloid(node) - m),
                    None => self.g[node],
                })
                .collect();
            let u = GridFunction {
                grid: self.grid.clone(),
                values,
            };
            if self.all_admissible(&u) {
                return Ok(u);
            }
            c0 *= 2.0;
        }
        Err(LabError::pre("no admissible paraboloid start found"))
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// `residual_field` for a configuration.
pub fn residual_field(u: &GridFunction, cfg: &SolveConfig) -> Result<GridFunction> {
    let p = Problem::new(cfg)?;
    if u.grid != p.grid {
        return Err(LabError::arg("grid function does not match the configured grid"));
    }
    Ok(p.residual(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// Backtracking fell below the minimum step without an acceptable iterate.
    StepTooSmall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub residual_inf: f64,
    pub step: f64,
    pub admissible_nodes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    #[serde(skip)]
    pub u: GridFunction,
    pub residual_inf: f64,
    pub iterations: u32,
    pub admissible_nodes: f64,
    /// Smallest eigenvalue of the discrete Hessian over interior nodes.
    pub min_semiconvex_margin: f64,
    /// Largest eigenvalue over interior nodes.
    pub max_lambda1: f64,
    /// `log max_lambda1`.
    pub b: f64,
    /// Largest eigenvalue at the node nearest the box center.
    pub center_lambda1: f64,
    /// History; entry 0 is the initial guess.
    pub diagnostics: Vec<IterationRecord>,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

fn center_node(grid: &GridSpec) -> usize {
    let idx: Vec<usize> = grid.resolution.iter().map(|r| r / 2).collect();
    grid.flat_index(&idx)
}

fn summarize(
    p: &Problem,
    u: GridFunction,
    status: SolveStatus,
    iterations: u32,
    diagnostics: Vec<IterationRecord>,
) -> SolveResult {
    let mut lmin = f64::INFINITY;
    let mut lmax = f64::NEG_INFINITY;
    for &node in p.interior() {
        let lam = u.hessian_unchecked(node).eigenvalues();
        lmin = lmin.min(lam.min());
        lmax = lmax.max(lam.max());
    }
    let center = center_node(&p.grid);
    let center_lambda1 = if p.grid.is_interior(center) {
        u.hessian_unchecked(center).eigenvalues().max()
    } else {
        f64::NAN
    };
    let last = diagnostics.last().cloned().unwrap_or(IterationRecord {
        residual_inf: f64::NAN,
        step: 0.0,
        admissible_nodes: 0.0,
    });
    SolveResult {
        status,
        u,
        residual_inf: last.residual_inf,
        iterations,
        admissible_nodes: last.admissible_nodes,
        min_semiconvex_margin: lmin,
        max_lambda1: lmax,
        b: libm::log(lmax),
        center_lambda1,
        diagnostics,
    }
}

/// Damped Newton from `initial` (or the default paraboloid start).
pub fn solve(cfg: &SolveConfig, initial: Option<GridFunction>, linear: &mut dyn LinearSolver) -> Result<SolveResult> {
    solve_observed(cfg, initial, linear, &mut |_| {})
}

/// [`solve`], calling `observe` on the starting iterate and on every
/// accepted iterate.
pub fn solve_observed(
    cfg: &SolveConfig,
    initial: Option<GridFunction>,
    linear: &mut dyn LinearSolver,
    observe: &mut dyn FnMut(&GridFunction),
) -> Result<SolveResult> {
    let p = Problem::new(cfg)?;
    let mut u = match initial {
        Some(u) => {
            if u.grid != p.grid {
                return Err(LabError::arg("initial guess does not match the configured grid"));
            }
            if !p.all_admissible(&u) {
                return Err(LabError::pre("initial guess is not admissible at every interior node"));
            }
            u
        }
        None => p.default_initial()?,
    };
    // boundary rows are trivial: pin the trace once
    let mut pinned = false;
    for node in 0..p.grid.len() {
        if p.unknown[node].is_none() && u.values[node] != p.g[node] {
            u.values[node] = p.g[node];
            pinned = true;
        }
    }
    if pinned && !p.all_admissible(&u) {
        return Err(LabError::pre(
            "initial guess is not admissible once the boundary trace is imposed",
        ));
    }
    observe(&u);
    let interior_residual =
        |u: &GridFunction| -> Vec<f64> { p.interior.iter().map(|&node| p.node_value(u, node)).collect() };
    let mut r = interior_residual(&u);
    let mut norm = inf_norm(&r);
    let mut diagnostics = alloc::vec![IterationRecord {
        residual_inf: norm,
        step: 0.0,
        admissible_nodes: 1.0,
    }];
    let damping = cfg.damping;
    for it in 0..damping.max_iterations {
        if norm <= cfg.tolerance {
            return Ok(summarize(&p, u, SolveStatus::Converged, it, diagnostics));
        }
        let jac = p.jacobian(&u)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = linear.solve(p.interior.len(), &jac, &neg)?;
        let mut t = damping.initial_step;
        let accepted = loop {
            let mut trial = u.clone();
            for (k, &node) in p.interior.iter().enumerate() {
                trial.values[node] += t * delta[k];
            }
            if p.all_admissible(&trial) {
                let rt = interior_residual(&trial);
                let nt = inf_norm(&rt);
                if nt < norm {
                    break Some((trial, rt, nt));
                }
            }
            t *= damping.backtrack;
            if t < damping.min_step {
                break None;
            }
        };
        match accepted {
            Some((trial, rt, nt)) => {
                observe(&trial);
                u = trial;
                r = rt;
                norm = nt;
                diagnostics.push(IterationRecord {
                    residual_inf: norm,
                    step: t,
                    admissible_nodes: 1.0,
                });
            }
            None => return Ok(summarize(&p, u, SolveStatus::StepTooSmall, it, diagnostics)),
        }
    }
    let status = if norm <= cfg.tolerance {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterations
    };
    Ok(summarize(&p, u, status, damping.max_iterations, diagnostics))
}

/// Max relative mismatch between `J v` and the central directional
/// difference of the interior residual, for the given perturbation.
pub fn jacobian_fd_error(cfg: &SolveConfig, u: &GridFunction, v: &[f64]) -> Result<f64> {
    let p = Problem::new(cfg)?;
    if v.len() != p.interior.len() {
        return Err(LabError::Dimension {
            expected: p.interior.len(),
            found: v.len(),
        });
    }
    let jac = p.jacobian(u)?;
    let mut jv = alloc::vec![0.0; v.len()];
    for &(i, j, a) in &jac {
        jv[i] += a * v[j];
    }
    let scale = inf_norm(&u.values).max(1.0);
    let eps = 1e-6 * scale / inf_norm(v).max(1e-300);
    let shifted = |s: f64| {
        let mut w = u.clone();
        for (k, &node) in p.interior.iter().enumerate() {
            w.values[node] += s * v[k];
        }
        p.interior
            .iter()
            .map(|&node| p.node_value(&w, node))
            .collect::<Vec<f64>>()
    };
    let plus = shifted(eps);
    let minus = shifted(-eps);
    let fd: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
    let diff: Vec<f64> = fd.iter().zip(&jv).map(|(a, b)| a - b).collect();
    Ok(inf_norm(&diff) / inf_norm(&jv).max(1e-300))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    #[serde(rename = "K")]
    pub semiconvexity: f64,
    pub max_lambda1: f64,
    pub b: f64,
    pub center_lambda1: f64,
    pub min_eigenvalue: f64,
    /// `max |u| + max |Du|` over interior nodes.
    pub c1_norm: f64,
    pub status: SolveStatus,
}

/// Solves each member and tabulates the interior Hessian bound, sorted by `K`.
pub fn interior_bound_probe(family: &[(f64, SolveConfig)], linear: &mut dyn LinearSolver) -> Result<Vec<ProbeRow>> {
    let mut rows = Vec::with_capacity(family.len());
    for (k, cfg) in family {
        let res = solve(cfg, None, linear)?;
        let mut c1: f64 = 0.0;
        let mut umax: f64 = 0.0;
        for node in res.u.grid.interior() {
            let g = res.u.gradient(node)?;
            c1 = c1.max(libm::sqrt(g.iter().map(|v| v * v).sum()));
            umax = umax.max(res.u.values[node].abs());
        }
        rows.push(ProbeRow {
            semiconvexity: *k,
            max_lambda1: res.max_lambda1,
            b: res.b,
            center_lambda1: res.center_lambda1,
            min_eigenvalue: res.min_semiconvex_margin,
            c1_norm: umax + c1,
            status: res.status,
        });
    }
    rows.sort_by(|a, b| a.semiconvexity.total_cmp(&b.semiconvexity));
    Ok(rows)
}

/// Quadratic data `diag(λ₁, λ₁, −K/2)` padded with `λ₁` in higher dimensions.
pub fn quadratic_family(ks: &[f64], d: usize, m: usize, alpha: f64, lambda1: f64) -> Vec<(f64, SolveConfig)> {
    ks.iter()
        .map(|&k| {
            let mut diag = alloc::vec![lambda1; d];
            diag[d - 1] = -0.5 * k;
            (k, SolveConfig::manufactured(d, m, alpha, Field::Quadratic { diag }))
        })
        .collect()
}

/// Smoothed Pogorelov-type data with the last direction bent to `−K/2`.
pub fn pogorelov_family(ks: &[f64], d: usize, m: usize, alpha: f64, s: f64, c: f64) -> Vec<(f64, SolveConfig)> {
    ks.iter()
        .map(|&k| {
            (
                k,
                SolveConfig::manufactured(d, m, alpha, Field::Pogorelov { s, c, kappa: 0.5 * k }),
            )
        })
        .collect()
}
