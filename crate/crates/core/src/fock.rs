//! Truncated number-basis representation of a finite site window.
//!
//! Each site carries the first `d` oscillator levels; a window of `m`
//! sites lives on the tensor product of dimension `d^m`, with ascending
//! site order mapped to slowest-varying tensor index.  The module builds
//! canonical operators, embeds and compresses observables between nested
//! windows, constructs Weyl operators and potentials, and evaluates the
//! weighted operator/state norm scales used throughout the laboratory.

use crate::error::CoreError;
use crate::linalg::{
    axis_apply, complexify, dagger, kron, sym_eigen, sym_matrix_function_pre, CMat, CVec, RMat,
    RVec,
};
use crate::model::ModelSpec;
use num_complex::Complex64;

/// Default cap on the total tensor dimension of a representation.
pub const DEFAULT_DIM_BUDGET: usize = 1 << 16;

/// Cap on dimensions for which dense matrices may be materialized.
pub const MAX_DENSE_DIM: usize = 8192;

/// A finite set of sites, each truncated to `d` levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedRep {
    sites: Vec<i64>,
    d: usize,
    budget: usize,
}

impl TruncatedRep {
    /// Strictly ascending sites after sorting; duplicates are rejected,
    /// and the total dimension must fit the default budget.
    pub fn new(sites: Vec<i64>, d: usize) -> Result<Self, CoreError> {
        Self::with_budget(sites, d, DEFAULT_DIM_BUDGET)
    }

    pub fn with_budget(mut sites: Vec<i64>, d: usize, budget: usize) -> Result<Self, CoreError> {
        if sites.is_empty() {
            return Err(CoreError::InvalidParameter("empty site set".into()));
        }
        if d < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "need at least 2 levels per site (got {d})"
            )));
        }
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(CoreError::InvalidParameter("duplicate site".into()));
        }
        let rep = TruncatedRep { sites, d, budget };
        let total = rep.checked_total_dim()?;
        if total > budget {
            return Err(CoreError::BudgetExceeded(format!(
                "total dimension {total} exceeds budget {budget}"
            )));
        }
        Ok(rep)
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn levels(&self) -> usize {
        self.d
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    fn checked_total_dim(&self) -> Result<usize, CoreError> {
        self.d
            .checked_pow(self.sites.len() as u32)
            .ok_or_else(|| CoreError::BudgetExceeded("total dimension overflows usize".into()))
    }

    pub fn total_dim(&self) -> usize {
        self.checked_total_dim().expect("dimension was checked at construction")
    }

    /// Position of a site in the ascending order, if present.
    pub fn site_index(&self, site: i64) -> Option<usize> {
        self.sites.binary_search(&site).ok()
    }

    /// Tensor stride of the k-th site (ascending order, slowest first).
    pub fn axis_stride(&self, k: usize) -> usize {
        self.d.pow((self.sites.len() - 1 - k) as u32)
    }

    pub fn contains(&self, other: &TruncatedRep) -> bool {
        self.d == other.d && other.sites.iter().all(|s| self.site_index(*s).is_some())
    }

    pub fn same_space(&self, other: &TruncatedRep) -> bool {
        self.d == other.d && self.sites == other.sites
    }
}

/// Single-site ladder and canonical operators on `d` levels.
pub struct SiteOps {
    pub lower: RMat,
    pub raise: RMat,
    pub q: RMat,
    pub p: CMat,
}

/// `lower|j⟩ = √j |j−1⟩`, `Q = (lower + raise)/√2`,
/// `P = −i(lower − raise)/√2`.
pub fn site_ops(d: usize) -> SiteOps {
    let mut lower = RMat::zeros(d, d);
    for j in 1..d {
        lower[(j - 1, j)] = (j as f64).sqrt();
    }
    let raise = lower.transpose();
    let q = (&lower + &raise) / 2.0_f64.sqrt();
    let p = complexify(&(&lower - &raise)) * Complex64::new(0.0, -1.0 / 2.0_f64.sqrt());
    SiteOps { lower, raise, q, p }
}

/// Kinetic block `P²/2` (real in the number basis).
pub fn site_kinetic(d: usize) -> RMat {
    let ops = site_ops(d);
    let p2 = &ops.p * &ops.p;
    RMat::from_fn(d, d, |i, j| p2[(i, j)].re / 2.0)
}

/// Eigendecomposition of the truncated position operator.  The
/// eigenvalues are the classical Gauss–Hermite nodes of order `d`.
pub fn q_eigen(d: usize) -> (RVec, RMat) {
    sym_eigen(&site_ops(d).q)
}

/// Functional calculus `f(Q)` on one site.
pub fn site_function_of_q(d: usize, f: impl Fn(f64) -> f64) -> RMat {
    let (vals, vecs) = q_eigen(d);
    sym_matrix_function_pre(&vals, &vecs, f)
}

/// Functional calculus `f(Q⊗1 − 1⊗Q)` on a two-site factor.
pub fn pair_function_of_q_difference(d: usize, f: impl Fn(f64) -> f64) -> RMat {
    let (vals, vecs) = q_eigen(d);
    let rr = vecs.kronecker(&vecs);
    let d2 = d * d;
    let mut scaled = rr.clone();
    for col in 0..d2 {
        let value = f(vals[col / d] - vals[col % d]);
        for row in 0..d2 {
            scaled[(row, col)] *= value;
        }
    }
    scaled * rr.transpose()
}

/// One Weyl factor `exp(i·(u·P + v·Q))` on a single site (unitary on
/// the truncated factor).
pub fn weyl_site_factor(d: usize, u: f64, v: f64) -> CMat {
    let ops = site_ops(d);
    let i = Complex64::new(0.0, 1.0);
    let gen = (&ops.p * Complex64::from(u) + complexify(&ops.q) * Complex64::from(v)) * i;
    crate::linalg::cexpm(&gen)
}

/// Diagonal 0/1 projector keeping the lowest `d−2` levels of one site.
pub fn bulk_site_projector(d: usize) -> Result<RMat, CoreError> {
    if d < 3 {
        return Err(CoreError::InvalidParameter(format!(
            "bulk projection needs at least 3 levels (got {d})"
        )));
    }
    Ok(RMat::from_fn(d, d, |i, j| {
        if i == j && i < d - 2 {
            1.0
        } else {
            0.0
        }
    }))
}

/// Diagonal of the window bulk projector (product of per-site bulk
/// projectors), as a 0/1 mask over the tensor basis.
pub fn bulk_mask(rep: &TruncatedRep) -> Result<Vec<f64>, CoreError> {
    let d = rep.levels();
    if d < 3 {
        return Err(CoreError::InvalidParameter(format!(
            "bulk projection needs at least 3 levels (got {d})"
        )));
    }
    let total = rep.total_dim();
    let m = rep.site_count();
    let mut mask = vec![1.0; total];
    for idx in 0..total {
        let mut rest = idx;
        for _ in 0..m {
            let digit = rest % d;
            rest /= d;
            if digit >= d - 2 {
                mask[idx] = 0.0;
                break;
            }
        }
    }
    Ok(mask)
}

/// Diagonal 0/1 mask keeping the lowest `keep` levels of every site.
///
/// Unlike the top-cut [`bulk_mask`], whose defect for exponential
/// observables grows with `d` (the edge coupling `∼√d` strengthens as
/// the truncation rises), a block held fixed while `d` grows converges:
/// use this mask when comparing Weyl-type operators against
/// infinite-dimensional identities, and keep it constant across a
/// truncation sweep.
pub fn low_mask(rep: &TruncatedRep, keep: usize) -> Result<Vec<f64>, CoreError> {
    let d = rep.levels();
    if keep == 0 || keep > d {
        return Err(CoreError::InvalidParameter(format!(
            "low block must keep between 1 and {d} levels (got {keep})"
        )));
    }
    let total = rep.total_dim();
    let m = rep.site_count();
    let mut mask = vec![1.0; total];
    for idx in 0..total {
        let mut rest = idx;
        for _ in 0..m {
            let digit = rest % d;
            rest /= d;
            if digit >= keep {
                mask[idx] = 0.0;
                break;
            }
        }
    }
    Ok(mask)
}

/// Conjugate by the diagonal 0/1 mask: zero out rows and columns whose
/// mask entry is 0.
pub fn apply_mask(m: &CMat, mask: &[f64]) -> CMat {
    assert_eq!(m.nrows(), mask.len());
    assert_eq!(m.ncols(), mask.len());
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * mask[i] * mask[j])
}

/// An operator together with the window it acts on.
#[derive(Debug, Clone)]
pub struct ObservableOp {
    pub rep: TruncatedRep,
    pub matrix: CMat,
}

impl ObservableOp {
    pub fn new(rep: TruncatedRep, matrix: CMat) -> Result<Self, CoreError> {
        if matrix.nrows() != rep.total_dim() || matrix.ncols() != rep.total_dim() {
            return Err(CoreError::DimensionMismatch(format!(
                "matrix is {}x{} but the window has dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                rep.total_dim()
            )));
        }
        Ok(ObservableOp { rep, matrix })
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::op_norm(&self.matrix)
    }
}

fn ensure_dense(dim: usize) -> Result<(), CoreError> {
    if dim > MAX_DENSE_DIM {
        return Err(CoreError::BudgetExceeded(format!(
            "dense materialization of dimension {dim} exceeds the cap {MAX_DENSE_DIM}"
        )));
    }
    Ok(())
}

/// Digits of `idx`, slowest-first, over `m` base-`d` positions.
pub(crate) fn digits(mut idx: usize, d: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for k in (0..m).rev() {
        out[k] = idx % d;
        idx /= d;
    }
    out
}

/// Dense embedding of a subset operator into a larger window: identity
/// on the added sites.
pub fn embed_operator(op: &ObservableOp, target: &TruncatedRep) -> Result<ObservableOp, CoreError> {
    if !target.contains(&op.rep) {
        return Err(CoreError::InvalidParameter(
            "target window does not contain the operator's sites".into(),
        ));
    }
    let dt = target.total_dim();
    ensure_dense(dt)?;
    if op.rep.same_space(target) {
        return Ok(ObservableOp {
            rep: target.clone(),
            matrix: op.matrix.clone(),
        });
    }
    let d = target.levels();
    let ms = op.rep.site_count();
    let positions: Vec<usize> = op
        .rep
        .sites()
        .iter()
        .map(|s| target.site_index(*s).expect("containment checked"))
        .collect();
    let free_positions: Vec<usize> = (0..target.site_count())
        .filter(|k| !positions.contains(k))
        .collect();
    let ds = op.rep.total_dim();
    let df = d.pow(free_positions.len() as u32);

    let small_offset = |idx: usize| -> usize {
        digits(idx, d, ms)
            .iter()
            .zip(&positions)
            .map(|(dig, &pos)| dig * target.axis_stride(pos))
            .sum()
    };
    let row_offsets: Vec<usize> = (0..ds).map(small_offset).collect();
    let free_offsets: Vec<usize> = (0..df)
        .map(|f| {
            digits(f, d, free_positions.len())
                .iter()
                .zip(&free_positions)
                .map(|(dig, &pos)| dig * target.axis_stride(pos))
                .sum()
        })
        .collect();

    let mut out = CMat::zeros(dt, dt);
    for is in 0..ds {
        for js in 0..ds {
            let value = op.matrix[(is, js)];
            if value == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &foff in &free_offsets {
                out[(row_offsets[is] + foff, row_offsets[js] + foff)] = value;
            }
        }
    }
    Ok(ObservableOp {
        rep: target.clone(),
        matrix: out,
    })
}

/// Vacuum compression onto a sub-window: keep the matrix block in which
/// every discarded site sits in its ground level.
pub fn compress_operator(op: &ObservableOp, keep: &[i64]) -> Result<ObservableOp, CoreError> {
    let small = TruncatedRep::with_budget(keep.to_vec(), op.rep.levels(), op.rep.budget())?;
    if !op.rep.contains(&small) {
        return Err(CoreError::InvalidParameter(
            "kept sites are not all inside the operator's window".into(),
        ));
    }
    let d = op.rep.levels();
    let ms = small.site_count();
    let positions: Vec<usize> = small
        .sites()
        .iter()
        .map(|s| op.rep.site_index(*s).expect("containment checked"))
        .collect();
    let dk = small.total_dim();
    let index_map: Vec<usize> = (0..dk)
        .map(|idx| {
            digits(idx, d, ms)
                .iter()
                .zip(&positions)
                .map(|(dig, &pos)| dig * op.rep.axis_stride(pos))
                .sum()
        })
        .collect();
    let out = CMat::from_fn(dk, dk, |i, j| op.matrix[(index_map[i], index_map[j])]);
    Ok(ObservableOp {
        rep: small,
        matrix: out,
    })
}

/// Dense Weyl operator `⊗_k exp(i·(u_k·P + v_k·Q))` over the window
/// (coefficients indexed in the window's ascending site order).
pub fn weyl_operator(rep: &TruncatedRep, u: &RVec, v: &RVec) -> Result<ObservableOp, CoreError> {
    let m = rep.site_count();
    if u.len() != m || v.len() != m {
        return Err(CoreError::DimensionMismatch(format!(
            "coefficient length {} / {} vs {} sites",
            u.len(),
            v.len(),
            m
        )));
    }
    ensure_dense(rep.total_dim())?;
    let d = rep.levels();
    let mut acc = weyl_site_factor(d, u[0], v[0]);
    for k in 1..m {
        acc = kron(&acc, &weyl_site_factor(d, u[k], v[k]));
    }
    Ok(ObservableOp {
        rep: rep.clone(),
        matrix: acc,
    })
}

/// Real dense embedding of a real operator given the target positions
/// of its sites (ascending).
pub fn embed_subset_real(small: &RMat, positions: &[usize], target_m: usize, d: usize) -> RMat {
    let ms = positions.len();
    let ds = small.nrows();
    let dt = d.pow(target_m as u32);
    let stride = |pos: usize| d.pow((target_m - 1 - pos) as u32);
    let free_positions: Vec<usize> = (0..target_m).filter(|k| !positions.contains(k)).collect();
    let df = d.pow(free_positions.len() as u32);
    let small_offset = |idx: usize| -> usize {
        digits(idx, d, ms)
            .iter()
            .zip(positions)
            .map(|(dig, &pos)| dig * stride(pos))
            .sum()
    };
    let offsets: Vec<usize> = (0..ds).map(small_offset).collect();
    let free_offsets: Vec<usize> = (0..df)
        .map(|f| {
            digits(f, d, free_positions.len())
                .iter()
                .zip(&free_positions)
                .map(|(dig, &pos)| dig * stride(pos))
                .sum()
        })
        .collect();
    let mut out = RMat::zeros(dt, dt);
    for is in 0..ds {
        for js in 0..ds {
            let value = small[(is, js)];
            if value == 0.0 {
                continue;
            }
            for &foff in &free_offsets {
                out[(offsets[is] + foff, offsets[js] + foff)] = value;
            }
        }
    }
    out
}

/// Dense potential of the model restricted to the window: per-site
/// confinement plus self-interaction bump, quadratic nearest-neighbour
/// bonds internal to the window, and range-cut pair bumps.
pub fn potential_operator(rep: &TruncatedRep, spec: &ModelSpec) -> Result<RMat, CoreError> {
    let n = spec.n_sites as i64;
    if rep.sites().iter().any(|s| s.abs() > n) {
        return Err(CoreError::InvalidParameter(
            "window extends beyond the chain".into(),
        ));
    }
    let dt = rep.total_dim();
    ensure_dense(dt)?;
    let d = rep.levels();
    let m = rep.site_count();
    let pert = &spec.perturbation;
    let w2 = pert.w * pert.w;

    let single = site_function_of_q(d, |x| {
        0.5 * spec.a * x * x + pert.eps_self * (-x * x / (2.0 * w2)).exp()
    });
    let mut v = RMat::zeros(dt, dt);
    for k in 0..m {
        v += embed_subset_real(&single, &[k], m, d);
    }

    let q = site_ops(d).q;
    let qq = q.kronecker(&q);
    let mut bump_cache: Option<RMat> = None;
    for k in 0..m {
        for l in (k + 1)..m {
            let (sk, sl) = (rep.sites()[k], rep.sites()[l]);
            let dist = crate::model::site_distance(spec.boundary, spec.n_sites, sk, sl);
            if dist == 1 {
                v += embed_subset_real(&(&qq * (-spec.b)), &[k, l], m, d);
            }
            let amp = spec.pair_amplitude(sk, sl);
            if amp > 0.0 {
                let bump = bump_cache.get_or_insert_with(|| {
                    pair_function_of_q_difference(d, |y| (-y * y / (2.0 * w2)).exp())
                });
                v += embed_subset_real(&(bump.clone() * amp), &[k, l], m, d);
            }
        }
    }
    Ok(v)
}

/// Ground tensor state `|0…0⟩` of the window.
pub fn vacuum_state(rep: &TruncatedRep) -> CVec {
    let mut psi = CVec::zeros(rep.total_dim());
    psi[0] = Complex64::new(1.0, 0.0);
    psi
}

/// Apply a single-site block to every column of a matrix (left action).
fn site_apply_left(site_op: &CMat, m: &CMat, d: usize, stride: usize) -> CMat {
    let rows = m.nrows();
    let cols = m.ncols();
    let mut out = CMat::zeros(rows, cols);
    let mut vin = vec![Complex64::new(0.0, 0.0); rows];
    let mut vout = vec![Complex64::new(0.0, 0.0); rows];
    for j in 0..cols {
        for i in 0..rows {
            vin[i] = m[(i, j)];
        }
        axis_apply(site_op, &vin, &mut vout, d, stride);
        for i in 0..rows {
            out[(i, j)] = vout[i];
        }
    }
    out
}

/// Commutator `[M, A_k]` with a Hermitian single-site block at tensor
/// stride `stride` (uses `M·A = (A·M†)†`).
pub fn site_commutator_hermitian(m: &CMat, site_op: &CMat, d: usize, stride: usize) -> CMat {
    let left = site_apply_left(site_op, m, d, stride);
    let right = dagger(&site_apply_left(site_op, &dagger(m), d, stride));
    right - left
}

/// Cumulative operator norm scales: `w0` is the operator norm; `w1`
/// adds all first commutators with site positions and momenta; `w2`
/// additionally adds half of all second commutators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBundle {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
}

/// Evaluate the norm scales of an observable, optionally sandwiching
/// every operator between the given diagonal 0/1 projector first.
pub fn wk_norms(op: &ObservableOp, mask: Option<&[f64]>) -> Result<NormBundle, CoreError> {
    let rep = &op.rep;
    let d = rep.levels();
    let m = rep.site_count();
    if let Some(mk) = mask {
        if mk.len() != rep.total_dim() {
            return Err(CoreError::DimensionMismatch(format!(
                "mask length {} vs window dimension {}",
                mk.len(),
                rep.total_dim()
            )));
        }
    }
    // SVD below the dimension cutoff (power iteration stalls on the
    // near-degenerate singular spectra of masked unitaries).
    let norm_of = |x: &CMat| -> f64 {
        match mask {
            Some(mk) => crate::linalg::op_norm(&apply_mask(x, mk)),
            None => crate::linalg::op_norm(x),
        }
    };
    let ops = site_ops(d);
    let qc = complexify(&ops.q);
    let blocks = [qc, ops.p.clone()];

    let w0 = norm_of(&op.matrix);
    let mut first_sum = 0.0;
    let mut second_sum = 0.0;
    for k in 0..m {
        let stride_k = rep.axis_stride(k);
        for block in &blocks {
            let c1 = site_commutator_hermitian(&op.matrix, block, d, stride_k);
            first_sum += norm_of(&c1);
            for l in 0..m {
                let stride_l = rep.axis_stride(l);
                for block2 in &blocks {
                    let c2 = site_commutator_hermitian(&c1, block2, d, stride_l);
                    second_sum += norm_of(&c2);
                }
            }
        }
    }
    Ok(NormBundle {
        w0,
        w1: w0 + first_sum,
        w2: w0 + first_sum + 0.5 * second_sum,
    })
}

/// Weighted state scale: the vector norm, plus the largest single
/// position/momentum application, plus (at order 2) half the largest
/// double application over represented sites.
pub fn hk_seminorm(rep: &TruncatedRep, psi: &CVec, order: usize) -> Result<f64, CoreError> {
    if order == 0 || order > 2 {
        return Err(CoreError::InvalidParameter(format!(
            "state scale is defined for orders 1 and 2 (got {order})"
        )));
    }
    let total = rep.total_dim();
    if psi.len() != total {
        return Err(CoreError::DimensionMismatch(format!(
            "state length {} vs window dimension {}",
            psi.len(),
            total
        )));
    }
    let d = rep.levels();
    let m = rep.site_count();
    let ops = site_ops(d);
    let qc = complexify(&ops.q);
    let blocks = [qc, ops.p.clone()];

    let mut firsts: Vec<Vec<Complex64>> = Vec::with_capacity(2 * m);
    let vin: Vec<Complex64> = psi.iter().copied().collect();
    let mut sup1 = 0.0_f64;
    for k in 0..m {
        let stride = rep.axis_stride(k);
        for block in &blocks {
            let mut out = vec![Complex64::new(0.0, 0.0); total];
            axis_apply(block, &vin, &mut out, d, stride);
            let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            sup1 = sup1.max(norm);
            firsts.push(out);
        }
    }
    let mut value = psi.norm() + sup1;
    if order == 2 {
        let mut sup2 = 0.0_f64;
        for first in &firsts {
            for k in 0..m {
                let stride = rep.axis_stride(k);
                for block in &blocks {
                    let mut out = vec![Complex64::new(0.0, 0.0); total];
                    axis_apply(block, first, &mut out, d, stride);
                    let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    sup2 = sup2.max(norm);
                }
            }
        }
        value += 0.5 * sup2;
    }
    Ok(value)
}
