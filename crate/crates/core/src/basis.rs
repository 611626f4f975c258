//! 1D nodal polynomial bases on the reference interval [-1, 1].
//!
//! Two node families are supported: Legendre-Gauss nodes (the collocation
//! points of the DG solver) and equispaced nodes placed at the centers of
//! N+1 equal sub-intervals (the finite-volume sub-cell grid). Both carry
//! barycentric weights, a differentiation matrix and boundary interpolation
//! vectors. On top of the bases this module builds the transfer operators
//! the hybrid scheme needs:
//!
//! * nodal <-> modal transforms w.r.t. orthonormal Legendre polynomials,
//! * the sub-cell projection V_FV (nodal values -> sub-cell means), its
//!   inverse, and the L2 lift of piecewise-constant face data back to the
//!   polynomial face space,
//! * an L2 projection between bases of different degree (used to truncate
//!   degree-2N data to degree N).

use crate::mat::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeFamily {
    /// Legendre-Gauss quadrature nodes (interior, exact to degree 2N+1).
    Gauss,
    /// Midpoints of N+1 equal sub-intervals, i.e. the sub-cell centers.
    Equispaced,
}

/// Evaluate the Legendre polynomial P_n and its derivative at x by the
/// three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut pm = 1.0; // P_0
    let mut p = x; // P_1
    for k in 1..n {
        let kf = k as f64;
        let pn = ((2.0 * kf + 1.0) * x * p - kf * pm) / (kf + 1.0);
        pm = p;
        p = pn;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let dp = if (x * x - 1.0).abs() < 1e-300 {
        // only hit at the interval ends; use the closed form there
        let nf = n as f64;
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        (n as f64) * (x * p - pm) / (x * x - 1.0)
    };
    (p, dp)
}

/// Orthonormal Legendre polynomial psi_n = sqrt((2n+1)/2) P_n.
pub fn legendre_orthonormal(n: usize, x: f64) -> f64 {
    let (p, _) = legendre(n, x);
    ((2.0 * n as f64 + 1.0) / 2.0).sqrt() * p
}

/// Legendre-Gauss nodes and weights with n points (exact to degree 2n-1).
///
/// Roots of P_n found by Newton iteration from Chebyshev-type initial
/// guesses; the node set is symmetrized about 0 exactly. Validated for
/// n <= 24 points (degree 23 bases).
pub fn gauss_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && n <= 24, "gauss_nodes supports 1..=24 points, got {n}");
    let mut nodes = vec![0.0; n];
    for (k, node) in nodes.iter_mut().enumerate() {
        let mut x = -(std::f64::consts::PI * (4.0 * k as f64 + 3.0) / (4.0 * n as f64 + 2.0)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 * (1.0 + x.abs()) {
                converged = true;
                break;
            }
        }
        let (res, _) = legendre(n, x);
        assert!(converged && res.abs() < 1e-14, "Gauss node Newton iteration failed at n={n}, k={k}");
        *node = x;
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // enforce exact symmetry (and the exact 0 for odd counts)
    for i in 0..n / 2 {
        let s = 0.5 * (nodes[i] - nodes[n - 1 - i]);
        nodes[i] = s;
        nodes[n - 1 - i] = -s;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let (_, dp) = legendre(n, nodes[i]);
        weights[i] = 2.0 / ((1.0 - nodes[i] * nodes[i]) * dp * dp);
    }
    for i in 0..n / 2 {
        let s = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = s;
        weights[n - 1 - i] = s;
    }
    (nodes, weights)
}

/// Centers of n equal sub-intervals of [-1, 1], with midpoint-rule weights.
pub fn equispaced_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let h = 2.0 / n as f64;
    let nodes = (0..n).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
    let weights = vec![h; n];
    (nodes, weights)
}

/// A nodal polynomial basis of degree N on [-1, 1] (N+1 nodes).
#[derive(Debug, Clone)]
pub struct NodalBasis1D {
    pub family: NodeFamily,
    /// polynomial degree N
    pub degree: usize,
    /// strictly increasing nodes, symmetric about 0
    pub nodes: Vec<f64>,
    /// quadrature weights (Gauss rule resp. midpoint rule)
    pub weights: Vec<f64>,
    /// barycentric interpolation weights
    pub bary: Vec<f64>,
    /// differentiation matrix D[i][j] = l_j'(x_i)
    pub diff: Mat,
    /// interpolation vector to x = -1
    pub l_left: Vec<f64>,
    /// interpolation vector to x = +1
    pub l_right: Vec<f64>,
}

impl NodalBasis1D {
    pub fn new(family: NodeFamily, degree: usize) -> Self {
        let n = degree + 1;
        let (nodes, weights) = match family {
            NodeFamily::Gauss => gauss_nodes(n),
            NodeFamily::Equispaced => equispaced_nodes(n),
        };
        let bary = barycentric_weights(&nodes);
        let diff = differentiation_matrix(&nodes, &bary);
        let l_left = lagrange_at(&nodes, &bary, -1.0);
        let l_right = lagrange_at(&nodes, &bary, 1.0);
        Self { family, degree, nodes, weights, bary, diff, l_left, l_right }
    }

    pub fn num_nodes(&self) -> usize {
        self.degree + 1
    }

    /// Values of all Lagrange basis polynomials at x.
    pub fn lagrange_at(&self, x: f64) -> Vec<f64> {
        lagrange_at(&self.nodes, &self.bary, x)
    }

    /// Interpolate nodal data to a point.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let l = self.lagrange_at(x);
        l.iter().zip(values).map(|(a, b)| a * b).sum()
    }
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= nodes[j] - nodes[k];
            }
        }
    }
    w
}

fn lagrange_at(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut l = vec![0.0; n];
    for j in 0..n {
        if (x - nodes[j]).abs() < 1e-14 {
            l[j] = 1.0;
            return l;
        }
    }
    let mut denom = 0.0;
    for j in 0..n {
        let t = bary[j] / (x - nodes[j]);
        l[j] = t;
        denom += t;
    }
    for v in &mut l {
        *v /= denom;
    }
    l
}

fn differentiation_matrix(nodes: &[f64], bary: &[f64]) -> Mat {
    let n = nodes.len();
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Nodal <-> modal transforms w.r.t. orthonormal Legendre polynomials.
#[derive(Debug, Clone)]
pub struct ModalTransform {
    /// nodal values -> modal coefficients, (N+1) x (N+1)
    pub fwd: Mat,
    /// modal coefficients -> nodal values
    pub bwd: Mat,
}

/// Build the modal transform for a basis. The forward map sends nodal data
/// to the exact L2 Legendre coefficients of its interpolating polynomial
/// (the projection integrals are evaluated with an exact Gauss rule), so
/// fwd and bwd are inverses up to roundoff for any node family.
pub fn build_modal_transform(basis: &NodalBasis1D) -> ModalTransform {
    let n = basis.num_nodes();
    let mut bwd = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            bwd[(j, i)] = legendre_orthonormal(i, basis.nodes[j]);
        }
    }
    let (qx, qw) = gauss_nodes(n);
    let mut fwd = Mat::zeros(n, n);
    for q in 0..n {
        let l = basis.lagrange_at(qx[q]);
        for i in 0..n {
            let psi = legendre_orthonormal(i, qx[q]);
            for j in 0..n {
                fwd[(i, j)] += qw[q] * psi * l[j];
            }
        }
    }
    ModalTransform { fwd, bwd }
}

/// Transfer operators between the nodal polynomial representation and the
/// piecewise-constant sub-cell representation on N+1 equal sub-cells.
#[derive(Debug, Clone)]
pub struct TransferMatrices {
    /// nodal values -> sub-cell means, (N+1) x (N+1)
    pub v_fv: Mat,
    /// sub-cell means -> nodal values (exact inverse up to roundoff)
    pub v_fv_inv: Mat,
    /// L2 lift of piecewise-constant face data back onto the polynomial
    /// face space: g = diag(dxi / w) V_FV^T f. Conserves the face integral.
    pub face_lift: Mat,
    /// width of one reference sub-cell, 2/(N+1)
    pub subcell_width: f64,
}

/// Build V_FV and friends for a Gauss basis. Row i of V_FV is the exact
/// mean of each Lagrange polynomial over sub-interval i.
pub fn build_fv_projection(basis: &NodalBasis1D) -> TransferMatrices {
    assert_eq!(basis.family, NodeFamily::Gauss, "sub-cell projection is built on the Gauss basis");
    let n = basis.num_nodes();
    let dxi = 2.0 / n as f64;
    let (qx, qw) = gauss_nodes(n);
    let mut v_fv = Mat::zeros(n, n);
    for i in 0..n {
        let mid = -1.0 + (i as f64 + 0.5) * dxi;
        for q in 0..n {
            let l = basis.lagrange_at(mid + 0.5 * dxi * qx[q]);
            for j in 0..n {
                // mean over the sub-interval: the dxi/2 Jacobian cancels 1/dxi
                v_fv[(i, j)] += 0.5 * qw[q] * l[j];
            }
        }
    }
    let v_fv_inv = v_fv.inverse();
    let mut face_lift = Mat::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            face_lift[(k, i)] = dxi / basis.weights[k] * v_fv[(i, k)];
        }
    }
    TransferMatrices { v_fv, v_fv_inv, face_lift, subcell_width: dxi }
}

/// L2 projection matrix from a higher-degree basis onto a lower-degree one,
/// evaluated at the target basis nodes. Exact for polynomials of degree
/// <= low.degree; truncates the Legendre expansion otherwise.
pub fn build_degree_projection(high: &NodalBasis1D, low: &NodalBasis1D) -> Mat {
    assert!(low.degree <= high.degree, "projection target degree must not exceed the source degree");
    let n_high = high.num_nodes();
    let n_low = low.num_nodes();
    // G[i][j] = integral of psi_i * l_j^high, exact with an n_high-point rule
    let (qx, qw) = gauss_nodes(n_high);
    let mut g = Mat::zeros(n_low, n_high);
    for q in 0..n_high {
        let l = high.lagrange_at(qx[q]);
        for i in 0..n_low {
            let psi = legendre_orthonormal(i, qx[q]);
            for j in 0..n_high {
                g[(i, j)] += qw[q] * psi * l[j];
            }
        }
    }
    let mut eval = Mat::zeros(n_low, n_low);
    for m in 0..n_low {
        for i in 0..n_low {
            eval[(m, i)] = legendre_orthonormal(i, low.nodes[m]);
        }
    }
    eval.matmul(&g)
}

/// Apply a (rows x cols) matrix along both directions of a cols x cols
/// tensor-product field stored row-major (slow index = y). Used for 2D
/// sub-cell projection, modal transforms and degree projection.
pub fn apply_tensor2(m: &Mat, field: &[f64]) -> Vec<f64> {
    let (r, c) = (m.rows, m.cols);
    assert_eq!(field.len(), c * c);
    // rows: tmp[jy][ix'] = sum_ix m[ix'][ix] field[jy][ix]
    let mut tmp = vec![0.0; c * r];
    for jy in 0..c {
        for ixp in 0..r {
            let row = m.row(ixp);
            let mut acc = 0.0;
            for ix in 0..c {
                acc += row[ix] * field[jy * c + ix];
            }
            tmp[jy * r + ixp] = acc;
        }
    }
    // columns
    let mut out = vec![0.0; r * r];
    for jyp in 0..r {
        let row = m.row(jyp);
        for ixp in 0..r {
            let mut acc = 0.0;
            for jy in 0..c {
                acc += row[jy] * tmp[jy * r + ixp];
            }
            out[jyp * r + ixp] = acc;
        }
    }
    out
}
