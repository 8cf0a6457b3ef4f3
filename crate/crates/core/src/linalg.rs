//! Bounds-checked wrapper over `matrixmultiply::dgemm`.

/// Strided view of a row-major matrix inside a slice.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl<'a> View<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self { data, rows, cols, rs: cols, cs: 1 }
    }

    pub fn strided(data: &'a [f64], rows: usize, cols: usize, rs: usize) -> Self {
        Self { data, rows, cols, rs, cs: 1 }
    }

    pub fn t(self) -> Self {
        Self {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }
}

fn span(rows: usize, cols: usize, rs: usize, cs: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * rs + (cols - 1) * cs + 1
    }
}

/// `c ← alpha · a · b + beta · c`, where `c` is `a.rows × b.cols` with row
/// stride `rsc`.
pub(crate) fn gemm(alpha: f64, a: View<'_>, b: View<'_>, beta: f64, c: &mut [f64], rsc: usize) {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert_eq!(k, b.rows, "inner dimensions differ");
    assert!(span(m, k, a.rs, a.cs) <= a.data.len(), "lhs out of bounds");
    assert!(span(k, n, b.rs, b.cs) <= b.data.len(), "rhs out of bounds");
    assert!(span(m, n, rsc, 1) <= c.len(), "output out of bounds");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for r in 0..m {
            for v in &mut c[r * rsc..r * rsc + n] {
                *v *= beta;
            }
        }
        return;
    }
    // SAFETY: every index touched by dgemm lies within the spans asserted above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            1,
        );
    }
}

/// Adds each row of the `rows × cols` matrix `m` (row stride `rs`) into `acc`.
pub(crate) fn add_col_sums(acc: &mut [f64], m: &[f64], rows: usize, cols: usize, rs: usize) {
    for r in 0..rows {
        for (a, v) in acc.iter_mut().zip(&m[r * rs..r * rs + cols]) {
            *a += v;
        }
    }
}
