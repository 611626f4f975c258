//! DGSEM on Legendre-Gauss nodes with FV sub-cell elements mixed in.
//!
//! The semi-discretization is the weak-form collocation DGSEM on tensor
//! Gauss points, element-local and conservative. Elements flagged as
//! troubled run a second-order MUSCL finite-volume scheme on (N+1)^2
//! equispaced sub-cells of the same element instead; both kinds couple
//! through shared faces. Face fluxes are computed once per face, so the
//! scheme stays conservative across mixed interfaces.
//!
//! The right-hand side proceeds in four phases:
//!   A. export per-side data (DG: nodal face traces, FV: boundary sub-cell
//!      means),
//!   B. FV elements: gather ghosts, reconstruct, accumulate the sub-cell
//!      fluxes interior to the element, export reconstructed face values,
//!   C. faces: one numerical flux per face, projected/lifted across mixed
//!      interfaces,
//!   D. accumulate volume terms (DG) and outer-face fluxes.

use crate::basis::{build_fv_projection, build_modal_transform, equispaced_nodes, ModalTransform, NodalBasis1D, NodeFamily, TransferMatrices};
use crate::error::CoreError;
use crate::euler::{hlle_flux, max_wavespeed, physical_flux, roe_flux, ConsState, PrimState};
use crate::field::{ElemKind, SolutionField, NVAR};
use crate::mat::Mat;
use crate::mesh::{FacePlus, Mesh2D, Side, SIDES};

/// Degree-dependent operators shared by every element.
#[derive(Debug, Clone)]
pub struct Operators {
    pub basis: NodalBasis1D,
    pub transfer: TransferMatrices,
    pub modal: ModalTransform,
    /// weak-form volume matrix: wdiff[i][m] = w_m D[m][i] / w_i
    pub wdiff: Mat,
    /// l_i(-1) / w_i
    pub lift_l: Vec<f64>,
    /// l_i(+1) / w_i
    pub lift_r: Vec<f64>,
    /// sub-cell center coordinates on [-1,1]
    pub subcell_centers: Vec<f64>,
}

impl Operators {
    pub fn new(degree: usize) -> Self {
        let basis = NodalBasis1D::new(NodeFamily::Gauss, degree);
        let transfer = build_fv_projection(&basis);
        let modal = build_modal_transform(&basis);
        let n = basis.num_nodes();
        let mut wdiff = Mat::zeros(n, n);
        for i in 0..n {
            for m in 0..n {
                wdiff[(i, m)] = basis.weights[m] * basis.diff[(m, i)] / basis.weights[i];
            }
        }
        let lift_l: Vec<f64> = (0..n).map(|i| basis.l_left[i] / basis.weights[i]).collect();
        let lift_r: Vec<f64> = (0..n).map(|i| basis.l_right[i] / basis.weights[i]).collect();
        let (subcell_centers, _) = equispaced_nodes(n);
        Self { basis, transfer, modal, wdiff, lift_l, lift_r, subcell_centers }
    }

    pub fn n(&self) -> usize {
        self.basis.num_nodes()
    }
}

/// Boundary condition attached to a mesh boundary tag.
pub enum Bc {
    /// prescribed exterior state, possibly time dependent
    Dirichlet(Box<dyn Fn(f64, f64, f64) -> PrimState + Send + Sync>),
    /// reflect the normal velocity
    SlipWall,
    /// copy the interior state (supersonic outflow)
    SupersonicOutflow,
}

impl std::fmt::Debug for Bc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bc::Dirichlet(_) => write!(f, "Dirichlet"),
            Bc::SlipWall => write!(f, "SlipWall"),
            Bc::SupersonicOutflow => write!(f, "SupersonicOutflow"),
        }
    }
}

/// Exterior ghost state seen through a boundary face.
pub fn apply_bc(bc: &Bc, interior: ConsState, x: f64, y: f64, t: f64, n_out: [f64; 2]) -> Result<ConsState, CoreError> {
    match bc {
        Bc::Dirichlet(f) => Ok(f(x, y, t).to_cons()),
        Bc::SlipWall => {
            let vn = (interior.mx * n_out[0] + interior.my * n_out[1]) / interior.rho;
            Ok(ConsState {
                rho: interior.rho,
                mx: interior.mx - 2.0 * interior.rho * vn * n_out[0],
                my: interior.my - 2.0 * interior.rho * vn * n_out[1],
                e: interior.e,
            })
        }
        Bc::SupersonicOutflow => Ok(interior),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxKind {
    Roe { entropy_fix: bool },
    Hlle,
}

impl FluxKind {
    #[inline]
    pub fn eval(self, wl: ConsState, wr: ConsState, n: [f64; 2]) -> Result<[f64; 4], CoreError> {
        match self {
            FluxKind::Roe { entropy_fix } => roe_flux(wl, wr, n, entropy_fix),
            FluxKind::Hlle => hlle_flux(wl, wr, n),
        }
    }
}

/// The spatial discretization: mesh + operators + boundary conditions.
pub struct SemiDiscretization<'a> {
    pub mesh: &'a Mesh2D,
    pub ops: &'a Operators,
    pub bcs: &'a [Bc],
    pub flux: FluxKind,
}

#[inline]
fn outward(side: Side) -> [f64; 2] {
    match side {
        Side::West => [-1.0, 0.0],
        Side::East => [1.0, 0.0],
        Side::South => [0.0, -1.0],
        Side::North => [0.0, 1.0],
    }
}

#[inline]
fn opposite(side: Side) -> Side {
    match side {
        Side::West => Side::East,
        Side::East => Side::West,
        Side::South => Side::North,
        Side::North => Side::South,
    }
}

impl<'a> SemiDiscretization<'a> {
    pub fn new(mesh: &'a Mesh2D, ops: &'a Operators, bcs: &'a [Bc], flux: FluxKind) -> Result<Self, CoreError> {
        if mesh.num_bc_tags > bcs.len() {
            return Err(CoreError::Config(format!(
                "mesh references {} boundary tags but only {} boundary conditions are defined",
                mesh.num_bc_tags,
                bcs.len()
            )));
        }
        Ok(Self { mesh, ops, bcs, flux })
    }

    /// CFL time step: dt = cfl * min_e (min(dx,dy) / (2N+1)) / max wavespeed.
    pub fn compute_dt(&self, field: &SolutionField, cfl: f64) -> Result<f64, CoreError> {
        let n = field.n;
        let factor = 2.0 * (n as f64 - 1.0) + 1.0;
        let mut dt = f64::INFINITY;
        for (e, el) in self.mesh.elems.iter().enumerate() {
            let mut lmax: f64 = 0.0;
            for node in 0..n * n {
                let w = field.state_at(e, node);
                let l = max_wavespeed(w).map_err(|src| CoreError::Positivity { time: f64::NAN, element: e, source: Box::new(src) })?;
                lmax = lmax.max(l);
            }
            let h = el.dx.min(el.dy);
            dt = dt.min(cfl * h / factor / lmax);
        }
        Ok(dt)
    }

    /// Evaluate the semi-discrete right-hand side into `out`.
    pub fn rhs(
        &self,
        field: &SolutionField,
        kinds: &[ElemKind],
        t: f64,
        out: &mut SolutionField,
    ) -> Result<(), CoreError> {
        let n = self.ops.n();
        let ne = self.mesh.num_elems();
        assert_eq!(field.num_elems, ne);
        let side_stride = n * NVAR;
        let elem_trace_stride = 4 * side_stride;

        // Phase A: per-side exports
        let mut traces = vec![0.0; ne * elem_trace_stride];
        for e in 0..ne {
            let tr = &mut traces[e * elem_trace_stride..(e + 1) * elem_trace_stride];
            match kinds[e] {
                ElemKind::Dg => self.export_dg_traces(field, e, tr),
                ElemKind::Fv => export_fv_means(field, e, tr),
            }
        }

        // Phase B: FV interior fluxes + reconstructed face values
        let mut face_vals = vec![0.0; ne * elem_trace_stride];
        {
            let elem_stride = field.elem_stride();
            for e in 0..ne {
                if kinds[e] != ElemKind::Fv {
                    continue;
                }
                let rhs_elem_range = e * elem_stride..(e + 1) * elem_stride;
                let fv_range = e * elem_trace_stride..(e + 1) * elem_trace_stride;
                let mut rhs_elem = vec![0.0; elem_stride];
                let mut fv_elem = vec![0.0; elem_trace_stride];
                self.fv_element_inner(field, kinds, &traces, e, t, &mut rhs_elem, &mut fv_elem)
                    .map_err(|src| wrap_positivity(src, t, e))?;
                out.data[rhs_elem_range].copy_from_slice(&rhs_elem);
                face_vals[fv_range].copy_from_slice(&fv_elem);
            }
        }

        // Phase C: one flux per face
        let nf = self.mesh.faces.len();
        let mut flux_m = vec![0.0; nf * side_stride];
        let mut flux_p = vec![0.0; nf * side_stride];
        for (fid, face) in self.mesh.faces.iter().enumerate() {
            let fm = &mut flux_m[fid * side_stride..(fid + 1) * side_stride];
            let fp = &mut flux_p[fid * side_stride..(fid + 1) * side_stride];
            self.face_flux(field, kinds, &traces, &face_vals, fid, t, fm, fp)
                .map_err(|src| wrap_positivity(src, t, face.minus))?;
        }

        // Phase D: volume terms and outer-face accumulation
        for e in 0..ne {
            match kinds[e] {
                ElemKind::Dg => {
                    let mut rhs_elem = vec![0.0; field.elem_stride()];
                    self.dg_volume_and_surface(field, e, &flux_m, &flux_p, &mut rhs_elem)
                        .map_err(|src| wrap_positivity(src, t, e))?;
                    out.elem_mut(e).copy_from_slice(&rhs_elem);
                }
                ElemKind::Fv => {
                    self.fv_outer_faces(field, e, &flux_m, &flux_p, out);
                }
            }
        }
        Ok(())
    }

    fn export_dg_traces(&self, field: &SolutionField, e: usize, tr: &mut [f64]) {
        let n = field.n;
        let basis = &self.ops.basis;
        let m = n * n;
        let u = field.elem(e);
        for v in 0..NVAR {
            for k in 0..n {
                let mut w_acc = 0.0;
                let mut e_acc = 0.0;
                let mut s_acc = 0.0;
                let mut n_acc = 0.0;
                for i in 0..n {
                    w_acc += basis.l_left[i] * u[v * m + k * n + i];
                    e_acc += basis.l_right[i] * u[v * m + k * n + i];
                    s_acc += basis.l_left[i] * u[v * m + i * n + k];
                    n_acc += basis.l_right[i] * u[v * m + i * n + k];
                }
                tr[side_idx(Side::West, n, k, v)] = w_acc;
                tr[side_idx(Side::East, n, k, v)] = e_acc;
                tr[side_idx(Side::South, n, k, v)] = s_acc;
                tr[side_idx(Side::North, n, k, v)] = n_acc;
            }
        }
    }

    /// Ghost line of sub-cell states just outside one side of an FV element.
    fn gather_ghosts(
        &self,
        field: &SolutionField,
        kinds: &[ElemKind],
        traces: &[f64],
        e: usize,
        side: Side,
        t: f64,
        ghost: &mut [[f64; NVAR]],
    ) -> Result<(), CoreError> {
        let n = field.n;
        let fr = self.mesh.elem_faces[e][side as usize];
        let face = &self.mesh.faces[fr.face];
        match face.plus {
            FacePlus::Elem(_) => {
                let nb = self.neighbor_of(e, fr.face);
                let nb_side = opposite(side);
                let tr = trace_line(traces, n, nb, nb_side);
                match kinds[nb] {
                    ElemKind::Fv => {
                        for k in 0..n {
                            for v in 0..NVAR {
                                ghost[k][v] = tr[k * NVAR + v];
                            }
                        }
                    }
                    ElemKind::Dg => {
                        // project the polynomial trace to sub-face means
                        let v_fv = &self.ops.transfer.v_fv;
                        for k in 0..n {
                            for v in 0..NVAR {
                                let mut acc = 0.0;
                                for q in 0..n {
                                    acc += v_fv[(k, q)] * tr[q * NVAR + v];
                                }
                                ghost[k][v] = acc;
                            }
                        }
                    }
                }
            }
            FacePlus::Boundary(tag) => {
                let bc = &self.bcs[tag];
                let n_out = outward(side);
                let own = trace_line(traces, n, e, side);
                for k in 0..n {
                    let (x, y) = face.point_at(self.ops.subcell_centers[k]);
                    let w_in = ConsState::from_slice(&own[k * NVAR..k * NVAR + NVAR]);
                    let w_ext = apply_bc(bc, w_in, x, y, t, n_out)?;
                    ghost[k] = w_ext.to_array();
                }
            }
        }
        Ok(())
    }

    /// MUSCL reconstruction and inner sub-cell fluxes of one FV element.
    fn fv_element_inner(
        &self,
        field: &SolutionField,
        kinds: &[ElemKind],
        traces: &[f64],
        e: usize,
        t: f64,
        rhs_elem: &mut [f64],
        fv_elem: &mut [f64],
    ) -> Result<(), CoreError> {
        let n = field.n;
        let m = n * n;
        let el = &self.mesh.elems[e];
        let u = field.elem(e);

        let mut ghost_a = vec![[0.0; NVAR]; n];
        let mut ghost_b = vec![[0.0; NVAR]; n];
        let mut prim_line = vec![PrimState { rho: 0.0, vx: 0.0, vy: 0.0, p: 0.0 }; n];

        for (dir, (side_a, side_b)) in [(0usize, (Side::West, Side::East)), (1, (Side::South, Side::North))] {
            self.gather_ghosts(field, kinds, traces, e, side_a, t, &mut ghost_a)?;
            self.gather_ghosts(field, kinds, traces, e, side_b, t, &mut ghost_b)?;
            let (normal, dsub) = if dir == 0 {
                ([1.0, 0.0], el.dx / n as f64)
            } else {
                ([0.0, 1.0], el.dy / n as f64)
            };
            for line in 0..n {
                // cell states along the line
                for i in 0..n {
                    let node = if dir == 0 { line * n + i } else { i * n + line };
                    let w = ConsState {
                        rho: u[node],
                        mx: u[m + node],
                        my: u[2 * m + node],
                        e: u[3 * m + node],
                    };
                    prim_line[i] = w.to_prim()?;
                }
                let ga = ConsState::from_slice(&ghost_a[line]).to_prim()?;
                let gb = ConsState::from_slice(&ghost_b[line]).to_prim()?;

                // limited face values per cell, in primitives
                let mut left_face = vec![[0.0; NVAR]; n]; // value at the cell's minus face
                let mut right_face = vec![[0.0; NVAR]; n];
                for i in 0..n {
                    let c = prim_as_array(prim_line[i]);
                    let lo = if i == 0 { prim_as_array(ga) } else { prim_as_array(prim_line[i - 1]) };
                    let hi = if i == n - 1 { prim_as_array(gb) } else { prim_as_array(prim_line[i + 1]) };
                    for v in 0..NVAR {
                        let s = minmod(c[v] - lo[v], hi[v] - c[v]);
                        left_face[i][v] = c[v] - 0.5 * s;
                        right_face[i][v] = c[v] + 0.5 * s;
                    }
                }

                // inner interface fluxes
                for i in 0..n - 1 {
                    let wl = prim_from_array(right_face[i]).to_cons();
                    let wr = prim_from_array(left_face[i + 1]).to_cons();
                    let f = self.flux.eval(wl, wr, normal)?;
                    for v in 0..NVAR {
                        let (node_l, node_r) = if dir == 0 {
                            (line * n + i, line * n + i + 1)
                        } else {
                            (i * n + line, (i + 1) * n + line)
                        };
                        rhs_elem[v * m + node_l] -= f[v] / dsub;
                        rhs_elem[v * m + node_r] += f[v] / dsub;
                    }
                }

                // reconstructed element-face values
                let wa = prim_from_array(left_face[0]).to_cons().to_array();
                let wb = prim_from_array(right_face[n - 1]).to_cons().to_array();
                for v in 0..NVAR {
                    fv_elem[side_idx(side_a, n, line, v)] = wa[v];
                    fv_elem[side_idx(side_b, n, line, v)] = wb[v];
                }
            }
        }
        Ok(())
    }

    fn neighbor_of(&self, e: usize, fid: usize) -> usize {
        let f = &self.mesh.faces[fid];
        match f.plus {
            FacePlus::Elem(p) => {
                if f.minus == e {
                    p
                } else {
                    f.minus
                }
            }
            FacePlus::Boundary(_) => unreachable!("neighbor_of on boundary face"),
        }
    }

    /// One numerical flux per face, written in the representation of each
    /// adjacent element (nodal for DG, per-sub-face for FV).
    #[allow(clippy::too_many_arguments)]
    fn face_flux(
        &self,
        field: &SolutionField,
        kinds: &[ElemKind],
        traces: &[f64],
        face_vals: &[f64],
        fid: usize,
        t: f64,
        fm: &mut [f64],
        fp: &mut [f64],
    ) -> Result<(), CoreError> {
        let n = field.n;
        let face = &self.mesh.faces[fid];
        let axis_n = face.normal();

        match face.plus {
            FacePlus::Boundary(tag) => {
                let e = face.minus;
                let fr_side = SIDES
                    .into_iter()
                    .find(|s| self.mesh.elem_faces[e][*s as usize].face == fid)
                    .expect("boundary face not registered on its element");
                let n_out = outward(fr_side);
                let bc = &self.bcs[tag];
                let sign = n_out[0] * axis_n[0] + n_out[1] * axis_n[1]; // +-1
                match kinds[e] {
                    ElemKind::Dg => {
                        let tr = trace_line(traces, n, e, fr_side);
                        for k in 0..n {
                            let (x, y) = face.point_at(self.ops.basis.nodes[k]);
                            let w_in = ConsState::from_slice(&tr[k * NVAR..k * NVAR + NVAR]);
                            let w_ext = apply_bc(bc, w_in, x, y, t, n_out)?;
                            let f = self.flux.eval(w_in, w_ext, n_out)?;
                            for v in 0..NVAR {
                                fm[k * NVAR + v] = sign * f[v];
                            }
                        }
                    }
                    ElemKind::Fv => {
                        let fv = trace_line(face_vals, n, e, fr_side);
                        for k in 0..n {
                            let (x, y) = face.point_at(self.ops.subcell_centers[k]);
                            let w_in = ConsState::from_slice(&fv[k * NVAR..k * NVAR + NVAR]);
                            let w_ext = apply_bc(bc, w_in, x, y, t, n_out)?;
                            let f = self.flux.eval(w_in, w_ext, n_out)?;
                            for v in 0..NVAR {
                                fm[k * NVAR + v] = sign * f[v];
                            }
                        }
                    }
                }
            }
            FacePlus::Elem(plus) => {
                let minus = face.minus;
                let side_m = if face.axis == crate::mesh::Axis::X { Side::East } else { Side::North };
                let side_p = opposite(side_m);
                match (kinds[minus], kinds[plus]) {
                    (ElemKind::Dg, ElemKind::Dg) => {
                        let tm = trace_line(traces, n, minus, side_m);
                        let tp = trace_line(traces, n, plus, side_p);
                        for k in 0..n {
                            let wl = ConsState::from_slice(&tm[k * NVAR..k * NVAR + NVAR]);
                            let wr = ConsState::from_slice(&tp[k * NVAR..k * NVAR + NVAR]);
                            let f = self.flux.eval(wl, wr, axis_n)?;
                            for v in 0..NVAR {
                                fm[k * NVAR + v] = f[v];
                                fp[k * NVAR + v] = f[v];
                            }
                        }
                    }
                    (ElemKind::Fv, ElemKind::Fv) => {
                        let vm = trace_line(face_vals, n, minus, side_m);
                        let vp = trace_line(face_vals, n, plus, side_p);
                        for k in 0..n {
                            let wl = ConsState::from_slice(&vm[k * NVAR..k * NVAR + NVAR]);
                            let wr = ConsState::from_slice(&vp[k * NVAR..k * NVAR + NVAR]);
                            let f = self.flux.eval(wl, wr, axis_n)?;
                            for v in 0..NVAR {
                                fm[k * NVAR + v] = f[v];
                                fp[k * NVAR + v] = f[v];
                            }
                        }
                    }
                    (dg_kind, _) => {
                        // mixed: Riemann problem on the sub-face means
                        let (dg_elem, dg_side, fv_elem, fv_side, dg_is_minus) = if dg_kind == ElemKind::Dg {
                            (minus, side_m, plus, side_p, true)
                        } else {
                            (plus, side_p, minus, side_m, false)
                        };
                        let tr_dg = trace_line(traces, n, dg_elem, dg_side);
                        let fv = trace_line(face_vals, n, fv_elem, fv_side);
                        let v_fv = &self.ops.transfer.v_fv;
                        let mut sub_f = vec![[0.0; NVAR]; n];
                        for k in 0..n {
                            let mut dg_sub = [0.0; NVAR];
                            for v in 0..NVAR {
                                let mut acc = 0.0;
                                for q in 0..n {
                                    acc += v_fv[(k, q)] * tr_dg[q * NVAR + v];
                                }
                                dg_sub[v] = acc;
                            }
                            let w_dg = ConsState::from_slice(&dg_sub);
                            let w_fv = ConsState::from_slice(&fv[k * NVAR..k * NVAR + NVAR]);
                            let f = if dg_is_minus {
                                self.flux.eval(w_dg, w_fv, axis_n)?
                            } else {
                                self.flux.eval(w_fv, w_dg, axis_n)?
                            };
                            sub_f[k] = f;
                        }
                        // FV side takes the sub-face fluxes, DG side their L2 lift
                        let lift = &self.ops.transfer.face_lift;
                        let (f_dg, f_fv) = if dg_is_minus { (fm, fp) } else { (fp, fm) };
                        for k in 0..n {
                            for v in 0..NVAR {
                                f_fv[k * NVAR + v] = sub_f[k][v];
                                let mut acc = 0.0;
                                for i in 0..n {
                                    acc += lift[(k, i)] * sub_f[i][v];
                                }
                                f_dg[k * NVAR + v] = acc;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn dg_volume_and_surface(
        &self,
        field: &SolutionField,
        e: usize,
        flux_m: &[f64],
        flux_p: &[f64],
        rhs_elem: &mut [f64],
    ) -> Result<(), CoreError> {
        let n = field.n;
        let m = n * n;
        let el = &self.mesh.elems[e];
        let jx = 2.0 / el.dx;
        let jy = 2.0 / el.dy;
        let u = field.elem(e);

        let mut fx = vec![0.0; NVAR * m];
        let mut fy = vec![0.0; NVAR * m];
        for node in 0..m {
            let w = ConsState { rho: u[node], mx: u[m + node], my: u[2 * m + node], e: u[3 * m + node] };
            let a = physical_flux(w, [1.0, 0.0])?;
            let b = physical_flux(w, [0.0, 1.0])?;
            for v in 0..NVAR {
                fx[v * m + node] = a[v];
                fy[v * m + node] = b[v];
            }
        }

        let fw = self.outer_flux(e, Side::West, flux_m, flux_p);
        let fe = self.outer_flux(e, Side::East, flux_m, flux_p);
        let fs = self.outer_flux(e, Side::South, flux_m, flux_p);
        let fn_ = self.outer_flux(e, Side::North, flux_m, flux_p);

        let wdiff = &self.ops.wdiff;
        let lift_l = &self.ops.lift_l;
        let lift_r = &self.ops.lift_r;
        for v in 0..NVAR {
            for row in 0..n {
                for col in 0..n {
                    let mut acc_x = 0.0;
                    let mut acc_y = 0.0;
                    for q in 0..n {
                        acc_x += wdiff[(col, q)] * fx[v * m + row * n + q];
                        acc_y += wdiff[(row, q)] * fy[v * m + q * n + col];
                    }
                    let surf_x = -lift_r[col] * fe[row * NVAR + v] + lift_l[col] * fw[row * NVAR + v];
                    let surf_y = -lift_r[row] * fn_[col * NVAR + v] + lift_l[row] * fs[col * NVAR + v];
                    rhs_elem[v * m + row * n + col] = jx * (acc_x + surf_x) + jy * (acc_y + surf_y);
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn outer_flux<'b>(&self, e: usize, side: Side, flux_m: &'b [f64], flux_p: &'b [f64]) -> &'b [f64] {
        let n = self.ops.n();
        let fr = self.mesh.elem_faces[e][side as usize];
        let stride = n * NVAR;
        let range = fr.face * stride..(fr.face + 1) * stride;
        let boundary = matches!(self.mesh.faces[fr.face].plus, FacePlus::Boundary(_));
        if boundary || fr.is_minus {
            &flux_m[range]
        } else {
            &flux_p[range]
        }
    }

    fn fv_outer_faces(&self, field: &SolutionField, e: usize, flux_m: &[f64], flux_p: &[f64], out: &mut SolutionField) {
        let n = field.n;
        let m = n * n;
        let el = &self.mesh.elems[e];
        let dsx = el.dx / n as f64;
        let dsy = el.dy / n as f64;
        let fw = self.outer_flux(e, Side::West, flux_m, flux_p).to_vec();
        let fe = self.outer_flux(e, Side::East, flux_m, flux_p).to_vec();
        let fs = self.outer_flux(e, Side::South, flux_m, flux_p).to_vec();
        let fn_ = self.outer_flux(e, Side::North, flux_m, flux_p).to_vec();
        let rhs = out.elem_mut(e);
        for v in 0..NVAR {
            for line in 0..n {
                rhs[v * m + line * n] += fw[line * NVAR + v] / dsx;
                rhs[v * m + line * n + (n - 1)] -= fe[line * NVAR + v] / dsx;
                rhs[v * m + line] += fs[line * NVAR + v] / dsy;
                rhs[v * m + (n - 1) * n + line] -= fn_[line * NVAR + v] / dsy;
            }
        }
    }
}

#[inline]
fn side_idx(side: Side, n: usize, k: usize, v: usize) -> usize {
    (side as usize * n + k) * NVAR + v
}

#[inline]
fn trace_line(buf: &[f64], n: usize, e: usize, side: Side) -> &[f64] {
    let elem_stride = 4 * n * NVAR;
    let base = e * elem_stride + (side as usize) * n * NVAR;
    &buf[base..base + n * NVAR]
}

fn export_fv_means(field: &SolutionField, e: usize, tr: &mut [f64]) {
    let n = field.n;
    let m = n * n;
    let u = field.elem(e);
    for v in 0..NVAR {
        for k in 0..n {
            tr[side_idx(Side::West, n, k, v)] = u[v * m + k * n];
            tr[side_idx(Side::East, n, k, v)] = u[v * m + k * n + (n - 1)];
            tr[side_idx(Side::South, n, k, v)] = u[v * m + k];
            tr[side_idx(Side::North, n, k, v)] = u[v * m + (n - 1) * n + k];
        }
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() <= b.abs() {
        a
    } else {
        b
    }
}

#[inline]
fn prim_as_array(p: PrimState) -> [f64; NVAR] {
    [p.rho, p.vx, p.vy, p.p]
}

#[inline]
fn prim_from_array(a: [f64; NVAR]) -> PrimState {
    PrimState { rho: a[0], vx: a[1], vy: a[2], p: a[3] }
}

fn wrap_positivity(src: CoreError, t: f64, e: usize) -> CoreError {
    match src {
        CoreError::InvalidState { .. } => CoreError::Positivity { time: t, element: e, source: Box::new(src) },
        other => other,
    }
}

/// Quadrature-exact integral of each conservative variable over the domain.
pub fn total_mass(field: &SolutionField, kinds: &[ElemKind], mesh: &Mesh2D, ops: &Operators) -> [f64; 4] {
    let n = field.n;
    let m = n * n;
    let mut total = [0.0; 4];
    for (e, el) in mesh.elems.iter().enumerate() {
        let jac = el.dx * el.dy / 4.0;
        let u = field.elem(e);
        for v in 0..NVAR {
            let mut acc = 0.0;
            match kinds[e] {
                ElemKind::Dg => {
                    for row in 0..n {
                        for col in 0..n {
                            acc += ops.basis.weights[row] * ops.basis.weights[col] * u[v * m + row * n + col];
                        }
                    }
                }
                ElemKind::Fv => {
                    let w = 2.0 / n as f64;
                    for node in 0..m {
                        acc += w * w * u[v * m + node];
                    }
                }
            }
            total[v] += jac * acc;
        }
    }
    total
}
