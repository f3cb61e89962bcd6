//! Safe wrapper over the `matrixmultiply` kernel for row-major views.

/// Row-major matrix view with an optional transpose.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub transposed: bool,
}

impl<'a> View<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self { data, rows, cols, transposed: false }
    }

    /// Logical transpose of a row-major `rows x cols` buffer.
    pub fn t(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self { data, rows: cols, cols: rows, transposed: true }
    }

    fn strides(&self) -> (isize, isize) {
        if self.transposed {
            (1, self.rows as isize)
        } else {
            (self.cols as isize, 1)
        }
    }
}

/// `c = beta * c + a * b` with `c` row-major `a.rows x b.cols`.
pub(crate) fn gemm(a: View<'_>, b: View<'_>, beta: f64, c: &mut [f64]) {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert_eq!(k, b.rows, "inner dimensions differ");
    assert!(a.data.len() >= m * k && b.data.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c[..m * n].iter_mut().for_each(|x| *x *= beta);
        return;
    }
    let (rsa, csa) = a.strides();
    let (rsb, csb) = b.strides();
    // SAFETY: the asserts above guarantee every index reached through the
    // given strides lies inside the respective slices, and `c` does not alias
    // `a` or `b` because it is borrowed mutably.
    #[allow(unsafe_code)]
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_product_with_transposes() {
        let a: alloc::vec::Vec<f64> = (0..6).map(|i| i as f64 + 1.0).collect(); // 2x3
        let b: alloc::vec::Vec<f64> = (0..6).map(|i| (i as f64) * 0.5 - 1.0).collect(); // 3x2
        let mut c = [0.0; 4];
        gemm(View::new(&a, 2, 3), View::new(&b, 3, 2), 0.0, &mut c);
        let mut naive = [0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                naive[i * 2 + j] = (0..3).map(|k| a[i * 3 + k] * b[k * 2 + j]).sum();
            }
        }
        assert_eq!(c, naive);
        // (b^T)(a^T) = (ab)^T
        let mut ct = [0.0; 4];
        gemm(View::t(&b, 3, 2), View::t(&a, 2, 3), 0.0, &mut ct);
        assert_eq!([ct[0], ct[2], ct[1], ct[3]], naive);
    }
}
