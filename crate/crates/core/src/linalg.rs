//! Dense linear-algebra helpers shared across the crate.
//!
//! Complex matrix products are routed through four real `f64` products so
//! they hit the optimized real GEMM path; operator norms use exact SVD at
//! small dimension and seeded power iteration above it; small-matrix
//! exponentials use scaling-and-squaring with a Taylor core.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Dimension below which operator norms use exact SVD; above it, seeded
/// power iteration on `A* A`.
pub const SVD_NORM_DIM_CUTOFF: usize = 2048;

/// Relative tolerance for the power-iteration norm estimate.
pub const POWER_NORM_TOL: f64 = 1e-10;

/// Fixed seed for power-iteration start vectors, so norm estimates are
/// reproducible run to run.
pub const POWER_NORM_SEED: u64 = 0x5eed_0123;

/// Split a complex matrix into (real, imaginary) parts.
pub fn split(m: &CMat) -> (RMat, RMat) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

/// Recombine real and imaginary parts into a complex matrix.
pub fn join(re: RMat, im: RMat) -> CMat {
    let mut out = CMat::zeros(re.nrows(), re.ncols());
    for j in 0..re.ncols() {
        for i in 0..re.nrows() {
            out[(i, j)] = Complex64::new(re[(i, j)], im[(i, j)]);
        }
    }
    out
}

/// Promote a real matrix to complex.
pub fn complexify(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Complex matrix product through four real products.
pub fn cgemm(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "cgemm shape mismatch");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(re, im)
}

/// Product of a real matrix with a complex one.
pub fn rgemm_c(a: &RMat, b: &CMat) -> CMat {
    let (br, bi) = split(b);
    join(a * &br, a * &bi)
}

/// Product of a complex matrix with a real one.
pub fn cgemm_r(a: &CMat, b: &RMat) -> CMat {
    let (ar, ai) = split(a);
    join(&ar * b, &ai * b)
}

/// Commutator `a b - b a`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    cgemm(a, b) - cgemm(b, a)
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Kronecker product of complex matrices (left factor varies slowest).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Eigendecomposition of a real symmetric matrix; returns (values, vectors)
/// with `m = V diag(values) V^T`.
pub fn sym_eigen(m: &RMat) -> (RVec, RMat) {
    let es = m.clone().symmetric_eigen();
    (es.eigenvalues, es.eigenvectors)
}

/// Apply a scalar function to a real symmetric matrix through its
/// eigendecomposition: `V f(diag) V^T`.
pub fn sym_matrix_function(m: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    let (vals, vecs) = sym_eigen(m);
    sym_matrix_function_pre(&vals, &vecs, f)
}

/// Same as [`sym_matrix_function`] with a precomputed eigendecomposition.
pub fn sym_matrix_function_pre(vals: &RVec, vecs: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    let fvals = RVec::from_iterator(vals.len(), vals.iter().map(|&x| f(x)));
    let scaled = RMat::from_columns(
        &(0..vecs.ncols())
            .map(|j| vecs.column(j) * fvals[j])
            .collect::<Vec<_>>(),
    );
    &scaled * vecs.transpose()
}

/// Matrix exponential of a (small) complex matrix by scaling-and-squaring
/// with a Taylor core.  Intended for per-site factors and other matrices of
/// modest dimension and norm.
pub fn cexpm(m: &CMat) -> CMat {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "cexpm needs a square matrix");
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / Complex64::new(2f64.powi(squarings as i32), 0.0);
    // Taylor to degree 18 at norm <= 0.5 leaves a remainder below 1e-19.
    let mut term = CMat::identity(n, n);
    let mut acc = CMat::identity(n, n);
    for k in 1..=18 {
        term = cgemm(&term, &scaled) / Complex64::new(k as f64, 0.0);
        acc += &term;
    }
    for _ in 0..squarings {
        acc = cgemm(&acc, &acc);
    }
    acc
}

/// Largest singular value by exact SVD (small dimensions).
fn svd_norm(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Largest singular value by power iteration on `A* A` from a fixed seed.
pub fn power_norm_dense(m: &CMat) -> f64 {
    let mh = dagger(m);
    power_norm(m.nrows(), m.ncols(), |v| m * v, |v| &mh * v)
}

/// Power iteration for the largest singular value of a linear map given by
/// closures for the map and its adjoint.  Deterministic: fixed seed, fixed
/// tolerance, bounded iteration count.
pub fn power_norm(
    nrows: usize,
    ncols: usize,
    apply: impl Fn(&CVec) -> CVec,
    apply_adjoint: impl Fn(&CVec) -> CVec,
) -> f64 {
    power_norm_with(nrows, ncols, apply, apply_adjoint, POWER_NORM_TOL, 2000)
}

/// [`power_norm`] with caller-chosen relative tolerance and iteration cap,
/// for maps whose application is expensive.
pub fn power_norm_with(
    nrows: usize,
    ncols: usize,
    apply: impl Fn(&CVec) -> CVec,
    apply_adjoint: impl Fn(&CVec) -> CVec,
    tol: f64,
    max_iters: usize,
) -> f64 {
    let _ = nrows;
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_NORM_SEED);
    let mut v = CVec::from_iterator(
        ncols,
        (0..ncols).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)),
    );
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    v /= Complex64::new(nv, 0.0);
    let mut sigma = 0.0_f64;
    for _ in 0..max_iters {
        let w = apply(&v);
        let s = w.norm();
        if s == 0.0 {
            return 0.0;
        }
        let mut u = apply_adjoint(&w);
        let nu = u.norm();
        if nu == 0.0 {
            return s.max(sigma);
        }
        u /= Complex64::new(nu, 0.0);
        let new_sigma = s;
        let rel = (new_sigma - sigma).abs() / new_sigma.max(1e-300);
        v = u;
        sigma = new_sigma;
        if rel < tol {
            break;
        }
    }
    sigma
}

/// Operator (spectral) norm of a dense complex matrix.
///
/// Exact SVD below [`SVD_NORM_DIM_CUTOFF`], seeded power iteration above.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows().max(m.ncols()) < SVD_NORM_DIM_CUTOFF {
        svd_norm(m)
    } else {
        power_norm_dense(m)
    }
}

/// Operator norm of a real matrix.
pub fn op_norm_real(m: &RMat) -> f64 {
    if m.nrows().max(m.ncols()) < SVD_NORM_DIM_CUTOFF {
        m.clone().svd(false, false).singular_values.max()
    } else {
        power_norm_dense(&complexify(m))
    }
}

/// Apply a `d x d` block to a vector along one axis of a mixed-radix
/// tensor index.  `axis_stride` is the index stride of that axis and `d`
/// its extent; the vector length must be divisible by `d * axis_stride`.
pub fn axis_apply(op: &CMat, v: &[Complex64], out: &mut [Complex64], d: usize, axis_stride: usize) {
    let n = v.len();
    debug_assert_eq!(op.nrows(), d);
    debug_assert_eq!(op.ncols(), d);
    debug_assert_eq!(n % (d * axis_stride), 0);
    let block = d * axis_stride;
    for base in (0..n).step_by(block) {
        for inner in 0..axis_stride {
            let start = base + inner;
            for i in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..d {
                    acc += op[(i, l)] * v[start + l * axis_stride];
                }
                out[start + i * axis_stride] = acc;
            }
        }
    }
}

/// Apply a large dense block along one tensor axis by gathering the axis
/// into contiguous columns and multiplying with gemm.  Same contract as
/// [`axis_apply`]; worthwhile when the axis extent is in the hundreds.
pub fn axis_apply_gemm(op: &CMat, v: &[Complex64], out: &mut [Complex64], d: usize, axis_stride: usize) {
    let n = v.len();
    debug_assert_eq!(op.nrows(), d);
    debug_assert_eq!(op.ncols(), d);
    debug_assert_eq!(n % (d * axis_stride), 0);
    let block = d * axis_stride;
    let outer = n / block;
    let batch = outer * axis_stride;
    let mut gathered = CMat::zeros(d, batch);
    for o in 0..outer {
        for inner in 0..axis_stride {
            let col = o * axis_stride + inner;
            let start = o * block + inner;
            for i in 0..d {
                gathered[(i, col)] = v[start + i * axis_stride];
            }
        }
    }
    let product = cgemm(op, &gathered);
    for o in 0..outer {
        for inner in 0..axis_stride {
            let col = o * axis_stride + inner;
            let start = o * block + inner;
            for i in 0..d {
                out[start + i * axis_stride] = product[(i, col)];
            }
        }
    }
}

/// Apply a real `d x d` block along one tensor axis (see [`axis_apply`]).
pub fn axis_apply_real(op: &RMat, v: &[Complex64], out: &mut [Complex64], d: usize, axis_stride: usize) {
    let n = v.len();
    let block = d * axis_stride;
    for base in (0..n).step_by(block) {
        for inner in 0..axis_stride {
            let start = base + inner;
            for i in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..d {
                    acc += op[(i, l)] * v[start + l * axis_stride];
                }
                out[start + i * axis_stride] = acc;
            }
        }
    }
}

/// Frobenius-normalized maximum absolute entry difference.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut m = 0.0_f64;
    for (x, y) in a.iter().zip(b.iter()) {
        m = m.max((x - y).norm());
    }
    m
}
